// The 16-item style questionnaire. Scoring happens server-side from the
// chosen letters; the wording here mirrors the engine's shipped instrument.

import type { VarkLetter } from './types';

export interface Question {
  text: string;
  options: { letter: VarkLetter; label: string }[];
}

function q(text: string, v: string, a: string, r: string, k: string): Question {
  return {
    text,
    options: [
      { letter: 'V', label: v },
      { letter: 'A', label: a },
      { letter: 'R', label: r },
      { letter: 'K', label: k },
    ],
  };
}

export const QUESTIONS: Question[] = [
  q('You want to learn how a new device works. You would rather',
    'watch a demonstration video', 'have someone talk you through it',
    'read the manual', 'try it out yourself'),
  q('When you get directions to a new place, you prefer',
    'a map', 'spoken turn-by-turn directions',
    'a written list of street names', 'walking the route once with a guide'),
  q('You are choosing a movie to watch. What draws you in first',
    'striking stills or a trailer', 'a podcast review you heard',
    'a written synopsis or critic review', 'an interactive preview you can click through'),
  q('To remember a phone number you would',
    'picture the digits', 'say it aloud a few times',
    'write it down', 'key it in immediately'),
  q('A new recipe appeals to you most when it has',
    'step-by-step photos', 'a cook explaining it aloud',
    'precise written instructions', 'a hands-on class you can attend'),
  q('When assembling furniture you usually',
    'follow the diagrams', 'call a friend who has done it',
    'read every step first', 'start fitting pieces and adjust'),
  q('In a museum you enjoy most',
    'the visual exhibits', 'the audio guide',
    'the written placards', 'the interactive stations'),
  q('To understand a statistics concept you would',
    'study a chart of it', 'listen to a lecture',
    'read the textbook section', 'work through example problems'),
  q('You learn a new game fastest by',
    'watching others play', 'hearing the rules explained',
    'reading the rulebook', 'playing a practice round'),
  q('Before buying a gadget you usually',
    'watch a comparison video', 'ask people about their experience',
    'read detailed reviews', 'test it in a store'),
  q('When giving feedback on a plan you prefer to',
    'sketch an alternative', 'talk it through',
    'write comments', 'prototype a change'),
  q('A news story sticks with you when it includes',
    'photos or infographics', 'an interview clip',
    'a long-form article', 'something you can act on'),
  q('You are stuck on a task at work. You would',
    'look for a diagram of the workflow', 'discuss it with a colleague',
    'search the documentation', 'experiment until it works'),
  q('For fitness guidance you prefer',
    'demonstration videos', 'an instructor cueing you aloud',
    'a written program', 'a coach correcting your form live'),
  q('You remember people best by',
    'their face', 'their voice',
    'their name written down', 'what you did together'),
  q('When planning a trip you enjoy',
    'browsing photos of places', 'hearing recommendations',
    'reading guides and itineraries', 'wandering without a fixed plan'),
];
