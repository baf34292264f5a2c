"""Monte Carlo estimates of the probability that a random instance is satisfiable.

A grid cell is centred on a point ``(alpha, beta)`` and covers the
half-open box of side ``step`` around it. An instance for the cell is drawn
by picking one of the triples ``(m, n1, n2)`` inside the configured ranges
whose ratios ``m/n1`` and ``m/n2`` fall in the box (uniformly), then
sampling ``m`` distinct sentences over ``n1`` nouns and ``n2`` verbs.

Every sample has its own random stream derived from
``(seed, cell, sample, attempt)``, so results do not depend on how cells
are spread over worker processes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grammar import AbstractSentence, InstanceParams, Vocabulary, check_fragment, realize, sample_instance
from .logic.formula import Exists, Forall, Formula, subformulas
from .logic.translate import translate
from .solver.api import DEFAULT_MAX_NODES, DEFAULT_WALL_SECONDS, solve
from .solver.cnf import CnfFormula, cnf_sat

log = logging.getLogger(__name__)

Z95 = 1.959963984540054
DEFAULT_N1 = {"S": (6, 16), "W": (6, 16), "V": (3, 8), "Z": (3, 8), "A": (3, 8)}
DEFAULT_N2 = {"S": (0, 0), "W": (0, 0), "V": (3, 8), "Z": (3, 8), "A": (3, 8)}
GRID_COLUMNS = ["fragment", "alpha", "beta", "m", "n1", "n2", "samples", "sat", "phat",
                "ci_lo", "ci_hi", "timeouts"]
_EPS = 1e-9


def has_verbs(fragment: str) -> bool:
    return check_fragment(fragment) in ("V", "Z", "A")


def wilson(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # rounding can leave an end a hair inside p at p = 0 or 1
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not (self.step > 0 and self.hi >= self.lo):
            raise ValueError(f"degenerate axis {self.lo}:{self.hi}:{self.step}")

    @classmethod
    def parse(cls, text: str, step: float | None = None) -> "Axis":
        """``lo:hi[:step]``, or a single value."""
        parts = [float(p) for p in text.split(":")]
        if len(parts) == 1:
            parts = [parts[0], parts[0]]
        if len(parts) == 2:
            if step is None:
                raise ValueError(f"axis {text!r} needs a step")
            parts.append(step)
        return cls(*parts)

    def points(self) -> list[float]:
        n = int(math.floor((self.hi - self.lo) / self.step + _EPS))
        return [round(self.lo + i * self.step, 10) for i in range(n + 1)]


def _in_bin(ratio: float, centre: float, step: float) -> bool:
    return centre - step / 2 - _EPS <= ratio < centre + step / 2 - _EPS


def cell_triples(alpha: float, beta: float | None, step_alpha: float, step_beta: float | None,
                 n1_range: tuple[int, int], n2_range: tuple[int, int]) -> list[tuple[int, int, int]]:
    """All ``(m, n1, n2)`` in the ranges whose ratios fall in the cell."""
    out = []
    n2_values = range(n2_range[0], n2_range[1] + 1) if beta is not None else [0]
    for n1 in range(n1_range[0], n1_range[1] + 1):
        lo = max(1, math.ceil((alpha - step_alpha / 2) * n1 - 1e-6))
        hi = math.floor((alpha + step_alpha / 2) * n1 + 1e-6)
        for m in range(lo, hi + 1):
            if not _in_bin(m / n1, alpha, step_alpha):
                continue
            for n2 in n2_values:
                if beta is None or _in_bin(m / n2, beta, step_beta):
                    out.append((m, n1, n2))
    return out


@dataclass(frozen=True)
class Estimate:
    samples: int
    sat: int
    timeouts: int = 0
    unreliable: bool = False
    m_mean: float = 0.0
    n1_mean: float = 0.0
    n2_mean: float = 0.0

    @property
    def phat(self) -> float:
        return self.sat / self.samples if self.samples else float("nan")

    @property
    def ci(self) -> tuple[float, float]:
        return wilson(self.sat, self.samples)


@dataclass(frozen=True)
class SampleOptions:
    distinct_slots: bool = False
    law: str = "expanded"
    wall_seconds: float | None = DEFAULT_WALL_SECONDS
    max_nodes: int | None = DEFAULT_MAX_NODES


def _run_cell(fragment: str, triples: Sequence[tuple[int, int, int]], samples: int, seed: int,
              cell: int, opts: SampleOptions) -> Estimate:
    vocab = Vocabulary.default()
    sat = timeouts = 0
    sums = np.zeros(3)
    done = 0
    cap = 5 * samples
    attempts = 0
    for s in range(samples):
        attempt = 0
        while attempts < cap:
            attempts += 1
            rng = np.random.default_rng(np.random.SeedSequence([seed, cell, s, attempt]))
            m, n1, n2 = triples[int(rng.integers(len(triples)))]
            sents = sample_instance(fragment, InstanceParams(m, n1, n2), rng, vocab,
                                    distinct_slots=opts.distinct_slots, law=opts.law)
            verdict = solve(sents, fragment, vocab=vocab, wall_seconds=opts.wall_seconds,
                            max_nodes=opts.max_nodes)
            if verdict.is_timeout:
                timeouts += 1
                attempt += 1
                continue
            sat += verdict.is_sat
            sums += (m, n1, n2)
            done += 1
            break
        else:
            break
    means = sums / done if done else sums
    return Estimate(done, sat, timeouts, done < samples, *(float(x) for x in means))


def estimate_psat(fragment: str, m: int, n1: int, n2: int = 0, samples: int = 200, seed: int = 0, *,
                  options: SampleOptions = SampleOptions(), cell: int = 0) -> Estimate:
    """Sat fraction over ``samples`` random instances with fixed ``(m, n1, n2)``."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if has_verbs(fragment) and n2 < 1:
        raise ValueError(f"fragment {fragment} needs n2 >= 1")
    InstanceParams(m, n1, n2)
    return _run_cell(fragment, [(m, n1, n2)], samples, seed, cell, options)


def estimate_point(fragment: str, alpha: float, beta: float | None = None, samples: int = 200,
                   seed: int = 0, *, step: float = 0.25, n1_range=None, n2_range=None,
                   options: SampleOptions = SampleOptions(), cell: int = 0) -> Estimate:
    """Sat fraction for the cell centred on ``(alpha, beta)``."""
    n1_range = tuple(n1_range or DEFAULT_N1[fragment])
    n2_range = tuple(n2_range or DEFAULT_N2[fragment])
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if has_verbs(fragment) and beta is None:
        beta = alpha
    triples = cell_triples(alpha, beta if has_verbs(fragment) else None, step, step, n1_range, n2_range)
    if not triples:
        raise ValueError(f"no (m, n1, n2) in the ranges falls in the cell at {alpha}, {beta}")
    return _run_cell(fragment, triples, samples, seed, cell, options)


@dataclass(frozen=True)
class Cell:
    alpha: float
    beta: float | None
    estimate: Estimate

    def row(self, fragment: str) -> dict:
        e = self.estimate
        lo, hi = e.ci
        return {"fragment": fragment, "alpha": self.alpha,
                "beta": "" if self.beta is None else self.beta,
                "m": round(e.m_mean, 4), "n1": round(e.n1_mean, 4), "n2": round(e.n2_mean, 4),
                "samples": e.samples, "sat": e.sat, "phat": round(e.phat, 6),
                "ci_lo": round(lo, 6), "ci_hi": round(hi, 6), "timeouts": e.timeouts}


@dataclass(frozen=True)
class PhaseGrid:
    fragment: str
    alpha: Axis
    beta: Axis | None
    n1_range: tuple[int, int]
    n2_range: tuple[int, int]
    samples: int
    seed: int
    cells: tuple[Cell, ...]
    options: SampleOptions = SampleOptions()

    def config(self) -> dict:
        return {"fragment": self.fragment, "alpha": asdict(self.alpha),
                "beta": None if self.beta is None else asdict(self.beta),
                "n1_range": list(self.n1_range), "n2_range": list(self.n2_range),
                "samples": self.samples, "seed": self.seed, "options": asdict(self.options)}

    def cell_at(self, alpha: float, beta: float | None = None) -> Cell:
        for c in self.cells:
            if abs(c.alpha - alpha) < 1e-9 and (beta is None or abs(c.beta - beta) < 1e-9):
                return c
        raise KeyError((alpha, beta))


def _grid_cells(fragment, alpha: Axis, beta: Axis | None, n1_range, n2_range):
    cells = []
    for a in alpha.points():
        for b in (beta.points() if beta is not None else [None]):
            triples = cell_triples(a, b, alpha.step, beta.step if beta else None, n1_range, n2_range)
            if triples:
                cells.append((a, b, triples))
            else:
                log.info("cell alpha=%s beta=%s has no parameter triple; skipped", a, b)
    return cells


def _cell_job(args):
    return _run_cell(*args)


def map_region(fragment: str, alpha: Axis, beta: Axis | None = None, samples: int = 200, seed: int = 0, *,
               n1_range=None, n2_range=None, options: SampleOptions = SampleOptions(),
               jobs: int = 1, progress=None) -> PhaseGrid:
    """Estimate every cell of the grid; rows are alpha-major."""
    check_fragment(fragment)
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if has_verbs(fragment) and beta is None:
        raise ValueError(f"fragment {fragment} needs a beta axis")
    if not has_verbs(fragment):
        beta = None
    n1_range = tuple(n1_range or DEFAULT_N1[fragment])
    n2_range = tuple(n2_range or DEFAULT_N2[fragment])
    cells = _grid_cells(fragment, alpha, beta, n1_range, n2_range)
    jobs_args = [(fragment, triples, samples, seed, i, options) for i, (_, _, triples) in enumerate(cells)]
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            estimates = []
            for i, est in enumerate(pool.map(_cell_job, jobs_args)):
                estimates.append(est)
                if progress:
                    progress(i + 1, len(jobs_args))
    else:
        estimates = []
        for i, a in enumerate(jobs_args):
            estimates.append(_run_cell(*a))
            if progress:
                progress(i + 1, len(jobs_args))
    out = tuple(Cell(a, b, e) for (a, b, _), e in zip(cells, estimates))
    return PhaseGrid(fragment, alpha, beta, n1_range, n2_range, samples, seed, out, options)


# ---------------------------------------------------------------------------
# regions

@dataclass(frozen=True)
class PhaseRegion:
    fragment: str
    cells: tuple[tuple[float, float | None], ...]
    step_alpha: float
    step_beta: float | None
    n1_range: tuple[int, int]
    n2_range: tuple[int, int]
    lo: float = 0.35
    hi: float = 0.65
    rows: tuple[dict, ...] = field(default=(), compare=False)

    def contains(self, m: int, n1: int, n2: int = 0) -> bool:
        for a, b in self.cells:
            if _in_bin(m / n1, a, self.step_alpha) and (
                    b is None or (n2 > 0 and _in_bin(m / n2, b, self.step_beta))):
                return True
        return False

    def triples(self, n1_range=None, n2_range=None) -> list[tuple[int, int, int]]:
        """Parameter triples inside the region, in sorted order."""
        n1_range = tuple(n1_range or self.n1_range)
        n2_range = tuple(n2_range or self.n2_range)
        out = set()
        for a, b in self.cells:
            out.update(cell_triples(a, b, self.step_alpha, self.step_beta, n1_range, n2_range))
        return sorted(out)

    def config(self) -> dict:
        return {"fragment": self.fragment, "step_alpha": self.step_alpha, "step_beta": self.step_beta,
                "n1_range": list(self.n1_range), "n2_range": list(self.n2_range),
                "lo": self.lo, "hi": self.hi}


def _connected(cells: list[tuple[float, float | None]], sa: float, sb: float | None) -> bool:
    if not cells:
        return True
    idx = {(round(a / sa), 0 if b is None else round(b / sb)) for a, b in cells}
    start = next(iter(idx))
    seen, stack = {start}, [start]
    while stack:
        i, j = stack.pop()
        for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if nb in idx and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(idx)


def extract_region(grid: PhaseGrid, lo: float = 0.35, hi: float = 0.65) -> PhaseRegion:
    """Cells whose point estimate lies in ``[lo, hi]``."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got {lo}, {hi}")
    chosen = [c for c in grid.cells if c.estimate.samples and lo <= c.estimate.phat <= hi]
    cells = [(c.alpha, c.beta) for c in chosen]
    sb = grid.beta.step if grid.beta is not None else None
    if not cells:
        warnings.warn(f"empty phase region for fragment {grid.fragment}", stacklevel=2)
    elif not _connected(cells, grid.alpha.step, sb):
        warnings.warn(f"phase region for fragment {grid.fragment} is disconnected", stacklevel=2)
    return PhaseRegion(grid.fragment, tuple(cells), grid.alpha.step, sb, grid.n1_range, grid.n2_range,
                       lo, hi, tuple(c.row(grid.fragment) for c in chosen))


# ---------------------------------------------------------------------------
# files

def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_rows(path, columns: Sequence[str], rows: Iterable[dict]):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    tmp.replace(path)


def write_meta(path, kind: str, config: dict):
    meta = {"kind": kind, "config": config, "config_hash": config_hash(config),
            "seed": config.get("seed")}
    target = meta_path(path)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(target)


def save_grid(grid: PhaseGrid, path, long_path=None):
    write_rows(path, GRID_COLUMNS, (c.row(grid.fragment) for c in grid.cells))
    write_meta(path, "phase-grid", grid.config())
    if long_path is not None:
        rows = []
        for c in grid.cells:
            lo, hi = c.estimate.ci
            for q, v in (("phat", c.estimate.phat), ("ci_lo", lo), ("ci_hi", hi)):
                rows.append({"fragment": grid.fragment, "alpha": c.alpha,
                             "beta": "" if c.beta is None else c.beta, "quantity": q,
                             "value": round(v, 6)})
        write_rows(long_path, ["fragment", "alpha", "beta", "quantity", "value"], rows)


def read_rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != GRID_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(GRID_COLUMNS)}")
        return list(reader)


def load_grid(path) -> PhaseGrid:
    """Rebuild a grid from its CSV and metadata sidecar."""
    meta = json.loads(meta_path(path).read_text(encoding="utf-8"))["config"]
    cells = []
    for r in read_rows(path):
        est = Estimate(int(r["samples"]), int(r["sat"]), int(r["timeouts"]), False,
                       float(r["m"]), float(r["n1"]), float(r["n2"]))
        cells.append(Cell(float(r["alpha"]), float(r["beta"]) if r["beta"] else None, est))
    beta = Axis(**meta["beta"]) if meta["beta"] else None
    return PhaseGrid(meta["fragment"], Axis(**meta["alpha"]), beta, tuple(meta["n1_range"]),
                     tuple(meta["n2_range"]), meta["samples"], meta["seed"], tuple(cells),
                     SampleOptions(**meta.get("options", {})))


def save_region(region: PhaseRegion, path, source: str | None = None):
    write_rows(path, GRID_COLUMNS, region.rows)
    write_meta(path, "phase-region", {**region.config(), "source": source})


def load_region(path) -> PhaseRegion:
    rows = read_rows(path)
    mp = meta_path(path)
    if mp.exists():
        meta = json.loads(mp.read_text(encoding="utf-8"))["config"]
    else:
        raise ValueError(f"{path}: missing metadata file {mp.name}")
    cells = tuple((float(r["alpha"]), float(r["beta"]) if r["beta"] else None) for r in rows)
    return PhaseRegion(meta["fragment"], cells, meta["step_alpha"], meta["step_beta"],
                       tuple(meta["n1_range"]), tuple(meta["n2_range"]), meta["lo"], meta["hi"],
                       tuple(rows))


# ---------------------------------------------------------------------------
# random k-SAT

@dataclass(frozen=True)
class KsatPoint:
    ratio: float
    m: int
    samples: int
    sat: int

    @property
    def phat(self) -> float:
        return self.sat / self.samples

    @property
    def ci(self) -> tuple[float, float]:
        return wilson(self.sat, self.samples)


def random_kcnf(k: int, n: int, m: int, rng: np.random.Generator) -> CnfFormula:
    """``m`` clauses of ``k`` distinct variables with fair-coin signs."""
    clauses = []
    for _ in range(m):
        vs = rng.choice(n, k, replace=False) + 1
        signs = rng.integers(0, 2, k) * 2 - 1
        clauses.append(tuple(int(x) for x in vs * signs))
    return CnfFormula(n, tuple(clauses))


def _ksat_job(args):
    k, n, ratio, samples, seed, idx = args
    m = int(round(ratio * n))
    sat = 0
    for s in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx, s]))
        sat += cnf_sat(random_kcnf(k, n, m, rng)) is not None
    return KsatPoint(ratio, m, samples, sat)


def ksat_psat(k: int, n: int, ratios: Sequence[float], samples: int, seed: int = 0, *,
              jobs: int = 1) -> list[KsatPoint]:
    if k < 2:
        raise ValueError("k must be at least 2")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    args = [(k, n, float(r), samples, seed, i) for i, r in enumerate(ratios)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_ksat_job, args))
    return [_ksat_job(a) for a in args]


def crossing(points: Sequence[KsatPoint], level: float = 0.5) -> float | None:
    """Ratio where the estimate first falls through ``level`` (linear interpolation)."""
    for a, b in zip(points, points[1:]):
        if a.phat >= level > b.phat:
            return a.ratio + (a.phat - level) * (b.ratio - a.ratio) / (a.phat - b.phat)
    return None


def parse_ratios(text: str) -> list[float]:
    """``lo:hi:step`` or a comma-separated list."""
    if ":" in text:
        return Axis.parse(text).points()
    return [float(x) for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------------------
# instance statistics

@dataclass(frozen=True)
class InstanceStats:
    m: int
    n1: int
    n2: int
    alpha: float
    beta: float | None
    subject_exists: int
    subject_forall: int
    object_exists: int
    object_forall: int
    tokens: int

    @staticmethod
    def _ratio(a: int, b: int) -> float | None:
        return a / b if b else None

    @property
    def quantifier_ratio(self) -> float | None:
        return self._ratio(self.subject_exists + self.object_exists,
                           self.subject_forall + self.object_forall)

    @property
    def subject_ratio(self) -> float | None:
        return self._ratio(self.subject_exists, self.subject_forall)

    @property
    def object_ratio(self) -> float | None:
        if self.object_exists + self.object_forall == 0:
            return None
        return self._ratio(self.object_exists, self.object_forall)


def _roles(f: Formula) -> tuple[str, list[str]]:
    inner = [("exists" if isinstance(g, Exists) else "forall")
             for g in subformulas(f.body) if isinstance(g, (Exists, Forall))] if isinstance(f, (Exists, Forall)) else []
    outer = "exists" if isinstance(f, Exists) else "forall"
    return outer, inner


def instance_stats(sentences: Sequence[AbstractSentence], vocab: Vocabulary | None = None,
                   n1: int | None = None, n2: int | None = None) -> InstanceStats:
    """Quantifier counts by role, read off the translated formulas.

    The subject quantifier is the outermost one; any quantifier below it is
    an object quantifier. ``n1``/``n2`` default to the predicates used.
    """
    vocab = vocab or Vocabulary.default()
    counts = {"subject_exists": 0, "subject_forall": 0, "object_exists": 0, "object_forall": 0}
    nouns, verbs = set(), set()
    tokens = 0
    for s in sentences:
        outer, inner = _roles(translate(s, vocab))
        counts[f"subject_{outer}"] += 1
        for q in inner:
            counts[f"object_{q}"] += 1
        nouns.update(s.unary_slots)
        verbs.update(s.binary_slots)
        tokens += len(realize(s, vocab).split(" "))
    n1 = len(nouns) if n1 is None else n1
    n2 = len(verbs) if n2 is None else n2
    m = len(sentences)
    return InstanceStats(m, n1, n2, m / n1 if n1 else float("nan"), m / n2 if n2 else None,
                         tokens=tokens, **counts)
