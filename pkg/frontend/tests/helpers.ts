import { spawn, type ChildProcess } from 'node:child_process';
import { request as httpRequest } from 'node:http';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

const HERE = dirname(fileURLToPath(import.meta.url));

/** Quiet liveness probe over node:http (happy-dom's fetch logs refusals). */
function probe(url: string): Promise<boolean> {
  return new Promise((resolve) => {
    const req = httpRequest(url, { method: 'GET', timeout: 1000 }, (res) => {
      res.resume();
      resolve(res.statusCode === 200);
    });
    req.on('error', () => resolve(false));
    req.on('timeout', () => { req.destroy(); resolve(false); });
    req.end();
  });
}

export interface ServiceHandle {
  process: ChildProcess;
  baseUrl: string;
  stop: () => void;
}

export async function startFixtureService(port: number): Promise<ServiceHandle> {
  const script = join(HERE, 'serve_fixture.py');
  const child = spawn('python3', ['-u', script, '--port', String(port)], {
    stdio: ['ignore', 'pipe', 'pipe'],
  });
  let stderr = '';
  child.stderr?.on('data', (chunk) => { stderr += String(chunk); });

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 45_000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`fixture service exited early (${child.exitCode}): ${stderr}`);
    }
    if (await probe(`${baseUrl}/healthz`)) break;
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`fixture service never became healthy: ${stderr}`);
    }
    await sleep(150);
  }
  return { process: child, baseUrl, stop: () => child.kill() };
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export function nextEvent(target: EventTarget, name: string,
                          timeoutMs = 10_000): Promise<Event> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new Error(`timed out waiting for ${name}`)), timeoutMs);
    target.addEventListener(name, (ev) => {
      clearTimeout(timer);
      resolve(ev);
    }, { once: true });
  });
}
