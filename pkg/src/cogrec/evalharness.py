"""Offline evaluation: MovieLens-1M protocol, baselines, metrics, statistics.

Cold users (20% by default) are withheld from graph building entirely; their
items rated >= 4 form the per-user relevant sets. Five models are compared
on HR@K, nDCG@K, Recall@K and Unique-Top-1 across seeds, with paired t-test
and Wilcoxon signed-rank significance between models. Everything is seeded;
fixed seeds reproduce byte-identical reports.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import betainc

from .cognition import Device, Pace, SessionContext, estimate_state
from .config import EngineConfig
from .embedding import HashedTextEmbedder
from .enrichment import RawItem, VarkVector, deterministic_enrich
from .errors import (DegenerateSample, LengthMismatch, MissingFile,
                     TooManyMalformedLines, UnknownBaseline)
from .graph import KnowledgeGraph
from .profiling import Demographics, Goal, UserProfile
from .providers import GenerationProvider
from .recommender import generate_candidates, recommend

log = logging.getLogger(__name__)

BASELINES = ("random", "popularity", "embedding_cosine", "candidates_only", "full_ce")
MALFORMED_TOLERANCE = 0.001

# MovieLens-1M code tables (from the dataset's own README)
AGE_LABELS = {1: "under 18", 18: "18-24", 25: "25-34", 35: "35-44",
              45: "45-49", 50: "50-55", 56: "56+"}
OCCUPATION_LABELS = {
    0: "other", 1: "academic educator", 2: "artist", 3: "clerical admin",
    4: "college grad student", 5: "customer service", 6: "doctor health care",
    7: "executive managerial", 8: "farmer", 9: "homemaker", 10: "K-12 student",
    11: "lawyer", 12: "programmer", 13: "retired", 14: "sales marketing",
    15: "scientist", 16: "self-employed", 17: "technician engineer",
    18: "tradesman craftsman", 19: "unemployed", 20: "writer",
}

# session context used for the personalized models: evening desktop browse
EVAL_CONTEXT = SessionContext(time_of_day=20, device=Device.DESKTOP,
                              session_minutes=0.0, interaction_pace=Pace.MODERATE,
                              stated_goal=Goal.ENTERTAINMENT)
SIMULATED_VARK_MEAN = np.array([0.35, 0.15, 0.25, 0.25])
SIMULATED_VARK_CONCENTRATION = 10.0


# ---------------------------------------------------------------------------
# dataset


@dataclass
class MovieRecord:
    movie_id: int
    title: str
    year: int
    genres: list[str]


@dataclass
class UserRecord:
    user_id: int
    gender: str
    age: int
    occupation: int


@dataclass
class RatingRecord:
    user_id: int
    movie_id: int
    rating: int
    timestamp: int


@dataclass
class Dataset:
    users: dict[int, UserRecord]
    movies: dict[int, MovieRecord]
    ratings: list[RatingRecord]
    malformed_lines: int = 0

    def movie_ids(self) -> list[int]:
        return sorted(self.movies)


def _parse_movie_line(line: str) -> Optional[MovieRecord]:
    parts = line.rstrip("\n").split("::")
    if len(parts) != 3:
        return None
    try:
        movie_id = int(parts[0])
    except ValueError:
        return None
    title = parts[1]
    m = re.search(r"\((\d{4})\)\s*$", title)
    if not m:
        return None
    genres = [g for g in parts[2].split("|") if g]
    return MovieRecord(movie_id=movie_id, title=title, year=int(m.group(1)),
                       genres=genres)


def load_movielens(directory: str | Path) -> Dataset:
    """Parse the three ::-delimited files; skip-and-count malformed lines,
    failing if they exceed 0.1%."""
    directory = Path(directory)
    paths = {name: directory / f"{name}.dat" for name in ("users", "movies", "ratings")}
    for name, path in paths.items():
        if not path.exists():
            raise MissingFile(str(path))

    malformed = 0
    total = 0

    users: dict[int, UserRecord] = {}
    for line in paths["users"].read_text(encoding="latin-1").splitlines():
        if not line.strip():
            continue
        total += 1
        parts = line.split("::")
        try:
            users[int(parts[0])] = UserRecord(user_id=int(parts[0]), gender=parts[1],
                                              age=int(parts[2]), occupation=int(parts[3]))
        except (IndexError, ValueError):
            malformed += 1

    movies: dict[int, MovieRecord] = {}
    for line in paths["movies"].read_text(encoding="latin-1").splitlines():
        if not line.strip():
            continue
        total += 1
        record = _parse_movie_line(line)
        if record is None:
            malformed += 1
        else:
            movies[record.movie_id] = record

    ratings: list[RatingRecord] = []
    for line in paths["ratings"].read_text(encoding="latin-1").splitlines():
        if not line.strip():
            continue
        total += 1
        parts = line.split("::")
        try:
            uid, mid, rating, ts = int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3])
            if not 1 <= rating <= 5 or uid not in users or mid not in movies:
                raise ValueError("bad rating line")
            ratings.append(RatingRecord(uid, mid, rating, ts))
        except (IndexError, ValueError):
            malformed += 1

    if total and malformed / total > MALFORMED_TOLERANCE:
        raise TooManyMalformedLines(f"{malformed}/{total} malformed lines")
    if malformed:
        log.warning("skipped %d malformed dataset lines", malformed)
    return Dataset(users=users, movies=movies, ratings=ratings,
                   malformed_lines=malformed)


def movies_as_items(dataset: Dataset) -> list[RawItem]:
    return [RawItem(item_id=str(m.movie_id), title=m.title, genres=list(m.genres),
                    year=m.year)
            for m in (dataset.movies[mid] for mid in dataset.movie_ids())]


# ---------------------------------------------------------------------------
# cold-start split


@dataclass
class ColdSplit:
    train_users: set[int]
    cold_users: list[int]              # evaluable (>= 1 relevant item), ascending
    relevant: dict[int, set[int]]      # user -> held-out relevant movie ids
    seed: int
    excluded_users: int = 0            # cold users with no relevant item


def cold_split(dataset: Dataset, ratio: float = 0.2, seed: int = 0,
               relevance_threshold: int = 4) -> ColdSplit:
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    user_ids = sorted(dataset.users)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(user_ids))
    n_cold = int(round(ratio * len(user_ids)))
    cold_set = {user_ids[i] for i in perm[:n_cold]}
    train_users = set(user_ids) - cold_set

    relevant: dict[int, set[int]] = {uid: set() for uid in cold_set}
    for r in dataset.ratings:
        if r.user_id in cold_set and r.rating >= relevance_threshold:
            relevant[r.user_id].add(r.movie_id)
    evaluable = sorted(uid for uid in cold_set if relevant[uid])
    excluded = len(cold_set) - len(evaluable)
    if excluded:
        log.info("excluded %d cold users with no relevant item", excluded)
    return ColdSplit(train_users=train_users, cold_users=evaluable,
                     relevant={uid: relevant[uid] for uid in evaluable},
                     seed=seed, excluded_users=excluded)


# ---------------------------------------------------------------------------
# metrics


@dataclass
class MetricsResult:
    """Per-user metric vectors for one (model, seed) run."""

    users: list[int]
    per_user: dict[str, np.ndarray]
    unique_top1: int

    def mean(self, name: str) -> float:
        return float(self.per_user[name].mean())

    def summary(self, ks: Sequence[int], primary_k: int) -> dict[str, float]:
        out = {f"HR@{primary_k}": self.mean(f"hr@{primary_k}"),
               f"nDCG@{primary_k}": self.mean(f"ndcg@{primary_k}")}
        for k in ks:
            if k != primary_k:
                out[f"Recall@{k}"] = self.mean(f"recall@{k}")
        out["Unique-Top-1"] = float(self.unique_top1)
        return out


def compute_metrics(rankings: dict[int, Sequence[int]], split: ColdSplit,
                    ks: Sequence[int] = (10, 50, 200, 1000), primary_k: int = 10,
                    universe_size: Optional[int] = None) -> MetricsResult:
    """HR/nDCG at the primary K, Recall at every K, Unique-Top-1.

    Binary relevance (membership in the held-out set); IDCG uses the ideal
    placement of min(|T_u|, K) relevant items.
    """
    required = max(ks)
    if universe_size is not None:
        required = min(required, universe_size)
    names = [f"hr@{primary_k}", f"ndcg@{primary_k}"] + [f"recall@{k}" for k in ks]
    values: dict[str, list[float]] = {name: [] for name in names}
    top_items: set[int] = set()

    discounts = 1.0 / np.log2(np.arange(2, max(ks) + 2))
    ideal_cum = np.cumsum(discounts)

    for uid in split.cold_users:
        ranking = rankings.get(uid)
        if ranking is None:
            raise LengthMismatch(f"no ranking for cold user {uid}")
        if len(ranking) < required:
            raise LengthMismatch(
                f"user {uid} ranking has {len(ranking)} entries, needs {required}")
        relevant = split.relevant[uid]
        top_items.add(ranking[0])

        prim = ranking[:primary_k]
        hits = [1.0 if item in relevant else 0.0 for item in prim]
        values[f"hr@{primary_k}"].append(1.0 if any(hits) else 0.0)
        dcg = float(np.dot(hits, discounts[:len(hits)]))
        idcg = float(ideal_cum[min(len(relevant), primary_k) - 1])
        values[f"ndcg@{primary_k}"].append(dcg / idcg if idcg > 0 else 0.0)

        for k in ks:
            top_k = ranking[:k]
            inter = sum(1 for item in top_k if item in relevant)
            values[f"recall@{k}"].append(inter / len(relevant))

    return MetricsResult(
        users=list(split.cold_users),
        per_user={name: np.array(vals, dtype=np.float64) for name, vals in values.items()},
        unique_top1=len(top_items),
    )


# ---------------------------------------------------------------------------
# significance


@dataclass
class SignificanceResult:
    n: int
    t_stat: Optional[float]
    t_p: float
    wilcoxon_stat: Optional[float]
    wilcoxon_p: float
    cohens_d: Optional[float]
    degenerate: bool = False
    alpha: float = 0.05


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def significance(sample_a: Sequence[float], sample_b: Sequence[float],
                 alpha: float = 0.05) -> SignificanceResult:
    """Paired two-sided t-test, Wilcoxon signed-rank (normal approximation
    with tie correction, zeros discarded), and Cohen's d of the differences.

    All-zero differences are a degenerate sample: p-values report 1.0 and the
    effect size is undefined.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("samples must be equal-length 1-d arrays")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two pairs")
    diff = a - b
    if np.all(diff == 0.0):
        return SignificanceResult(n=n, t_stat=None, t_p=1.0, wilcoxon_stat=None,
                                  wilcoxon_p=1.0, cohens_d=None, degenerate=True,
                                  alpha=alpha)

    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    cohens_d = mean / sd if sd > 0 else None

    if sd == 0.0:
        t_stat, t_p = None, 0.0  # identical nonzero shift everywhere
    else:
        t_stat = mean / (sd / math.sqrt(n))
        dof = n - 1
        t_p = float(betainc(dof / 2.0, 0.5, dof / (dof + t_stat * t_stat)))

    nz = diff[diff != 0.0]
    if len(nz) == 0:
        w_stat, w_p = None, 1.0
    else:
        from scipy.stats import rankdata
        ranks = rankdata(np.abs(nz))
        r_plus = float(ranks[nz > 0].sum())
        r_minus = float(ranks[nz < 0].sum())
        w_stat = min(r_plus, r_minus)
        count = len(nz)
        mn = count * (count + 1.0) * 0.25
        var = count * (count + 1.0) * (2.0 * count + 1.0)
        _, repnum = np.unique(ranks, return_counts=True)
        rep = repnum[repnum > 1].astype(np.float64)
        if rep.size:
            var -= 0.5 * float((rep * (rep * rep - 1.0)).sum())
        se = math.sqrt(var / 24.0)
        if se == 0.0:
            w_p = 1.0
        else:
            z = (w_stat - mn) / se
            w_p = min(1.0, 2.0 * _norm_sf(abs(z)))

    return SignificanceResult(n=n, t_stat=t_stat, t_p=t_p, wilcoxon_stat=w_stat,
                              wilcoxon_p=w_p, cohens_d=cohens_d, alpha=alpha)


def cohens_d_or_raise(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    result = significance(sample_a, sample_b)
    if result.degenerate or result.cohens_d is None:
        raise DegenerateSample("effect size undefined for all-zero differences")
    return result.cohens_d


# ---------------------------------------------------------------------------
# baselines


class Evaluator:
    """Holds the dataset plus the per-split state the five models share."""

    def __init__(self, dataset: Dataset, config: Optional[EngineConfig] = None,
                 reranker: Optional[GenerationProvider] = None):
        self.dataset = dataset
        self.config = config or EngineConfig()
        self.reranker = reranker
        self.embedder = HashedTextEmbedder(self.config.embedding_dim)
        self._graph: Optional[KnowledgeGraph] = None
        self._baseline_matrix: Optional[np.ndarray] = None
        self._movie_order: list[int] = dataset.movie_ids()

    # -- shared state --------------------------------------------------------

    def graph(self) -> KnowledgeGraph:
        """Item-side graph built from metadata only (cold ratings withheld)."""
        if self._graph is None:
            graph = KnowledgeGraph(dim=self.config.embedding_dim,
                                   eta=self.config.interaction_rate)
            for item in movies_as_items(self.dataset):
                graph.upsert_item(deterministic_enrich(item), self.embedder)
            self._graph = graph
        return self._graph

    def baseline_item_matrix(self) -> np.ndarray:
        """Unit-row embeddings of 'title + genres' for embedding_cosine."""
        if self._baseline_matrix is None:
            rows = np.zeros((len(self._movie_order), self.config.embedding_dim),
                            dtype=np.float32)
            for i, mid in enumerate(self._movie_order):
                movie = self.dataset.movies[mid]
                rows[i] = self.embedder(f"{movie.title} {' '.join(movie.genres)}")
            self._baseline_matrix = rows
        return self._baseline_matrix

    def train_popularity(self, split: ColdSplit) -> list[int]:
        counts: dict[int, int] = {}
        for r in self.dataset.ratings:
            if r.user_id in split.train_users:
                counts[r.movie_id] = counts.get(r.movie_id, 0) + 1
        return sorted(self._movie_order, key=lambda mid: (-counts.get(mid, 0), mid))

    def user_pseudo_text(self, uid: int) -> str:
        user = self.dataset.users[uid]
        age = AGE_LABELS.get(user.age, str(user.age))
        gender = "male" if user.gender.upper() == "M" else "female"
        occupation = OCCUPATION_LABELS.get(user.occupation, "other")
        return f"{age} {gender} {occupation}"

    def simulated_profile(self, uid: int, seed: int) -> UserProfile:
        """Cold-user profile: seeded VARK around the documented mean, seeded
        unit embedding, entertainment goal."""
        user = self.dataset.users.get(uid)
        demo = Demographics(
            age_bracket=AGE_LABELS.get(user.age, str(user.age)) if user else "",
            gender=(("male" if user.gender.upper() == "M" else "female") if user else ""),
            occupation=OCCUPATION_LABELS.get(user.occupation, "other") if user else "",
        )
        vark_rng = np.random.default_rng([seed, uid, 7])
        vark = VarkVector(*vark_rng.dirichlet(SIMULATED_VARK_MEAN * SIMULATED_VARK_CONCENTRATION))
        emb_rng = np.random.default_rng([seed, uid, 11])
        emb = emb_rng.standard_normal(self.config.embedding_dim).astype(np.float32)
        emb /= float(np.linalg.norm(emb))
        return UserProfile(user_id=str(uid), demographics=demo, goal=Goal.ENTERTAINMENT,
                           vark=vark, embedding=emb)

    # -- the five models -------------------------------------------------------

    def run_baseline(self, name: str, split: ColdSplit, K: int = 10,
                     length: Optional[int] = None) -> dict[int, list[int]]:
        """Ranked movie-id lists per cold user.

        ``length`` is the emitted list length (defaults to max eval K, capped
        by the catalog); pool-limited models pad with the remaining catalog
        in ascending id order so every ranking meets the metrics precondition.
        """
        if name not in BASELINES:
            raise UnknownBaseline(name)
        n_items = len(self._movie_order)
        length = min(length or max(self.config.eval_ks), n_items)
        movie_arr = np.array(self._movie_order, dtype=np.int64)

        if name == "random":
            out = {}
            for uid in split.cold_users:
                rng = np.random.default_rng([split.seed, uid])
                perm = rng.permutation(n_items)[:length]
                out[uid] = [int(movie_arr[i]) for i in perm]
            return out

        if name == "popularity":
            ranking = self.train_popularity(split)[:length]
            return {uid: list(ranking) for uid in split.cold_users}

        if name == "embedding_cosine":
            matrix = self.baseline_item_matrix()
            out = {}
            for uid in split.cold_users:
                query = self.embedder(self.user_pseudo_text(uid))
                sims = matrix @ query
                order = sorted(range(n_items), key=lambda i: (-float(sims[i]), movie_arr[i]))
                out[uid] = [int(movie_arr[i]) for i in order[:length]]
            return out

        # personalized pipeline models
        graph = self.graph()
        out = {}
        for uid in split.cold_users:
            profile = self.simulated_profile(uid, split.seed)
            if name == "candidates_only":
                state = estimate_state(EVAL_CONTEXT, profile.vark, self.config.cognition)
                pool = generate_candidates(profile, state, graph,
                                           sizes=self.config.pool_sizes,
                                           cap=self.config.pool_cap)
                node_order = pool.combined_order()
            else:  # full_ce
                ranked = recommend(profile, EVAL_CONTEXT, graph,
                                   provider=self.reranker, K=length,
                                   config=self.config)
                node_order = ranked.ids()
            ids = [int(graph.node(nid).attributes["item_id"]) for nid in node_order]
            seen = set(ids)
            if len(ids) < length:
                ids.extend(mid for mid in self._movie_order if mid not in seen)
            out[uid] = ids[:length]
        return out


# ---------------------------------------------------------------------------
# multi-seed protocol + reports


@dataclass
class MetricReport:
    """Per-seed results and mean +/- std aggregation for a set of models."""

    models: list[str]
    ks: tuple[int, ...]
    primary_k: int
    per_seed: dict[str, list[MetricsResult]] = field(default_factory=dict)

    def metric_names(self) -> list[str]:
        names = [f"HR@{self.primary_k}", f"nDCG@{self.primary_k}"]
        names += [f"Recall@{k}" for k in self.ks if k != self.primary_k]
        names.append("Unique-Top-1")
        return names

    def aggregate(self) -> dict[str, dict[str, tuple[float, float]]]:
        out: dict[str, dict[str, tuple[float, float]]] = {}
        for model in self.models:
            rows: dict[str, list[float]] = {}
            for result in self.per_seed[model]:
                for name, value in result.summary(self.ks, self.primary_k).items():
                    rows.setdefault(name, []).append(value)
            out[model] = {}
            for name, values in rows.items():
                arr = np.array(values, dtype=np.float64)
                std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
                out[model][name] = (float(arr.mean()), std)
        return out


def run_protocol(dataset: Dataset, models: Sequence[str] = BASELINES,
                 seeds: int = 3, config: Optional[EngineConfig] = None,
                 reranker: Optional[GenerationProvider] = None,
                 K: int = 10) -> MetricReport:
    cfg = config or EngineConfig()
    evaluator = Evaluator(dataset, cfg, reranker=reranker)
    ks = tuple(k for k in cfg.eval_ks if k <= len(dataset.movies)) or (K,)
    report = MetricReport(models=list(models), ks=ks, primary_k=K)
    for model in models:
        if model not in BASELINES:
            raise UnknownBaseline(model)
        report.per_seed[model] = []
    for seed in range(seeds):
        split = cold_split(dataset, ratio=cfg.cold_ratio, seed=seed,
                           relevance_threshold=cfg.relevance_threshold)
        for model in models:
            rankings = evaluator.run_baseline(model, split, K=K)
            result = compute_metrics(rankings, split, ks=ks, primary_k=K,
                                     universe_size=len(dataset.movies))
            report.per_seed[model].append(result)
            log.info("seed %d %s: HR@%d=%.4f", seed, model, K,
                     result.mean(f"hr@{K}"))
    return report


def emit_report(report: MetricReport, out_dir: str | Path,
                formats: Iterable[str] = ("table-text", "csv")) -> list[Path]:
    """Write results_table.txt / results.csv; one row per model."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    aggregate = report.aggregate()
    names = report.metric_names()
    written = []

    if "table-text" in formats:
        path = out_dir / "results_table.txt"
        width = max(len(m) for m in report.models) + 2
        col = 18
        lines = ["Model".ljust(width) + "".join(n.ljust(col) for n in names)]
        for model in report.models:
            cells = []
            for name in names:
                mean, std = aggregate[model][name]
                cells.append(f"{mean:.3f} ± {std:.3f}".ljust(col))
            lines.append(model.ljust(width) + "".join(cells))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    if "csv" in formats:
        path = out_dir / "results.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "metric", "mean", "std"])
            for model in report.models:
                for name in names:
                    mean, std = aggregate[model][name]
                    writer.writerow([model, name, repr(mean), repr(std)])
        written.append(path)
    return written
