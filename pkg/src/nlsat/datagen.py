"""Labeled dataset generation, splitting, serialization and prompts.

Candidates are numbered 0, 1, 2, ... and each is built from its own seed,
so a worker pool can produce them in any order. A single collector then
walks the candidates by index, dropping duplicates and anything beyond the
per-label quota. Output therefore depends only on the configuration.
"""

from __future__ import annotations

import json
import logging
import math
import time
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .grammar import InstanceParams, Vocabulary, check_fragment, parse, realize, sample_instance
from .logic.formula import render_fol
from .logic.translate import translate
from .phasemap import DEFAULT_N1, DEFAULT_N2, PhaseRegion, config_hash, has_verbs, instance_stats
from .solver.api import DEFAULT_MAX_NODES, solve

log = logging.getLogger(__name__)

SAT, UNSAT = "sat", "unsat"
RECORD_KEYS = ("id", "fragment", "m", "n1", "n2", "alpha", "beta", "sentences", "fol", "label",
               "seed", "solver_ms", "model")
SPLITS = ("train", "eval", "test")
# mean clause count and mean space-separated length of the reference training sets
REFERENCE_MEANS = {"S": (17.06, 83.19), "W": (18.95, 129.08), "V": (14.00, 97.37),
                   "Z": (14.31, 110.22), "A": (16.50, 123.42)}
ZERO_SHOT_N1 = {"S": (5, 10), "W": (5, 10), "V": (3, 5), "Z": (3, 5), "A": (3, 5)}
ZERO_SHOT_N2 = {"S": (0, 0), "W": (0, 0), "V": (2, 5), "Z": (2, 5), "A": (2, 5)}


class DataError(ValueError):
    """Bad input data: malformed files, unusable regions."""


class RegionEmpty(DataError):
    pass


class QuotaUnreachable(RuntimeError):
    pass


class DuplicateInstance(DataError):
    pass


@dataclass(frozen=True)
class GenConfig:
    fragment: str
    train: int = 0
    eval: int = 0
    test: int = 0
    n1_range: tuple[int, int] | None = None
    n2_range: tuple[int, int] | None = None
    seed: int = 0
    balance_tolerance: float = 0.01
    distinct_slots: bool = False
    template_law: str = "expanded"
    n1_law: str | None = None
    wall_seconds: float | None = 30.0
    max_nodes: int | None = DEFAULT_MAX_NODES
    max_candidates_factor: int = 50
    emit_model: bool = False
    record_time: bool = False

    def __post_init__(self):
        check_fragment(self.fragment)
        if min(self.train, self.eval, self.test) < 0:
            raise ValueError("split sizes must be non-negative")
        object.__setattr__(self, "n1_range", tuple(self.n1_range or DEFAULT_N1[self.fragment]))
        object.__setattr__(self, "n2_range", tuple(self.n2_range or DEFAULT_N2[self.fragment]))
        for lo, hi in (self.n1_range, self.n2_range):
            if lo > hi:
                raise ValueError(f"empty range {lo}..{hi}")
        if self.n1_range[0] < 1:
            raise ValueError("n1 must be at least 1")
        if has_verbs(self.fragment) and self.n2_range[0] < 1:
            raise ValueError(f"fragment {self.fragment} needs n2 >= 1")
        if self.n1_law is None:
            object.__setattr__(self, "n1_law", "uniform" if has_verbs(self.fragment) else "normal")
        if self.n1_law not in ("uniform", "normal"):
            raise ValueError(f"unknown n1 law {self.n1_law!r}")

    @property
    def total(self) -> int:
        return self.train + self.eval + self.test

    def sizes(self) -> dict[str, int]:
        return {"train": self.train, "eval": self.eval, "test": self.test}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n1_range"], d["n2_range"] = list(self.n1_range), list(self.n2_range)
        return d


@dataclass(frozen=True)
class LabeledInstance:
    id: str
    fragment: str
    m: int
    n1: int
    n2: int
    alpha: float
    beta: float | None
    sentences: tuple[str, ...]
    fol: tuple[str, ...]
    label: str
    seed: int
    solver_ms: float | None = None
    model: dict | None = field(default=None, compare=False)

    def key(self) -> tuple[str, ...]:
        """Identity of the sentence multiset (realization is injective)."""
        return (self.fragment,) + tuple(sorted(self.sentences))

    def to_record(self) -> dict:
        rec = {k: getattr(self, k) for k in RECORD_KEYS if k != "model"}
        rec["sentences"], rec["fol"] = list(self.sentences), list(self.fol)
        if self.model is not None:
            rec["model"] = self.model
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "LabeledInstance":
        keys = list(rec)
        expected = list(RECORD_KEYS if "model" in rec else RECORD_KEYS[:-1])
        if keys != expected:
            raise DataError(f"expected keys {expected}, got {keys}")
        if rec["label"] not in (SAT, UNSAT):
            raise DataError(f"bad label {rec['label']!r}")
        return cls(**{**rec, "sentences": tuple(rec["sentences"]), "fol": tuple(rec["fol"])})


# ---------------------------------------------------------------------------
# candidates

def _n_weights(lo: int, hi: int, law: str) -> np.ndarray:
    values = np.arange(lo, hi + 1)
    if law == "uniform" or hi == lo:
        w = np.ones(len(values))
    else:
        mu, sigma = (lo + hi) / 2, (hi - lo) / 4
        w = np.exp(-0.5 * ((values - mu) / sigma) ** 2)
    return w / w.sum()


class _Table:
    """Region triples grouped by ``(n1, n2)`` for two-stage sampling."""

    def __init__(self, triples: Sequence[tuple[int, int, int]], config: GenConfig):
        by_n: dict[tuple[int, int], list[int]] = defaultdict(list)
        for m, n1, n2 in triples:
            by_n[(n1, n2)].append(m)
        if not by_n:
            raise RegionEmpty(f"region has no (m, n1, n2) for fragment {config.fragment} "
                              f"with n1 in {config.n1_range} and n2 in {config.n2_range}")
        self.keys = sorted(by_n)
        self.ms = [sorted(by_n[k]) for k in self.keys]
        w1 = dict(zip(range(config.n1_range[0], config.n1_range[1] + 1),
                      _n_weights(*config.n1_range, config.n1_law)))
        n2_lo, n2_hi = config.n2_range
        w2 = dict(zip(range(n2_lo, n2_hi + 1), _n_weights(n2_lo, n2_hi, "uniform")))
        # conditioned on the pair being usable: resampling (n1, n2) until it is
        w = np.array([w1[a] * w2[b] for a, b in self.keys])
        self.weights = w / w.sum()

    def draw(self, rng: np.random.Generator) -> tuple[int, int, int]:
        k = int(rng.choice(len(self.keys), p=self.weights))
        n1, n2 = self.keys[k]
        ms = self.ms[k]
        return ms[int(rng.integers(len(ms)))], n1, n2


def candidate_seed(master: int, index: int) -> int:
    a, b = np.random.SeedSequence([master, index]).generate_state(2)
    return (int(a) << 31) ^ int(b)


def make_candidate(config: GenConfig, table: _Table, index: int,
                   vocab: Vocabulary | None = None) -> LabeledInstance | None:
    """Candidate number ``index``; None when the solver ran out of budget."""
    vocab = vocab or Vocabulary.default()
    seed = candidate_seed(config.seed, index)
    rng = np.random.default_rng(seed)
    m, n1, n2 = table.draw(rng)
    sents = sample_instance(config.fragment, InstanceParams(m, n1, n2), rng, vocab,
                            distinct_slots=config.distinct_slots, law=config.template_law)
    start = time.perf_counter()
    verdict = solve(sents, config.fragment, vocab=vocab, wall_seconds=config.wall_seconds,
                    max_nodes=config.max_nodes)
    elapsed = (time.perf_counter() - start) * 1000
    if verdict.is_timeout:
        return None
    model = verdict.certificate.to_json() if (config.emit_model and verdict.is_sat) else None
    return LabeledInstance(
        id=f"{config.fragment}-{index:07d}", fragment=config.fragment, m=m, n1=n1, n2=n2,
        alpha=round(m / n1, 6), beta=round(m / n2, 6) if n2 else None,
        sentences=tuple(realize(s, vocab) for s in sents),
        fol=tuple(render_fol(translate(s, vocab)) for s in sents),
        label=SAT if verdict.is_sat else UNSAT, seed=seed,
        solver_ms=round(elapsed, 3) if config.record_time else None, model=model,
    )


_WORKER: dict = {}


def _init_worker(config: GenConfig, table: _Table):
    _WORKER["args"] = (config, table)


def _worker_candidate(index: int):
    return make_candidate(*_WORKER["args"], index)


def _candidates(config: GenConfig, table: _Table, start: int, jobs: int) -> Iterator[LabeledInstance | None]:
    """Candidates ``start, start+1, ...`` in index order."""
    if jobs <= 1:
        vocab = Vocabulary.default()
        i = start
        while True:
            yield make_candidate(config, table, i, vocab)
            i += 1
    block = 32 * jobs
    with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(config, table)) as pool:
        i = start
        while True:
            yield from pool.map(_worker_candidate, range(i, i + block), chunksize=4)
            i += block


@dataclass
class GenStats:
    candidates: int = 0
    timeouts: int = 0
    duplicates: int = 0
    over_quota: int = 0


def collect(config: GenConfig, triples: Sequence[tuple[int, int, int]], quotas: dict[str, int], *,
            jobs: int = 1, seen: set | None = None, stats: GenStats | None = None,
            progress=None) -> list[LabeledInstance]:
    """Accept candidates in index order until each label quota is full."""
    table = _Table(triples, config)
    need = dict(quotas)
    total = sum(need.values())
    cap = max(100, config.max_candidates_factor * total)
    seen = set() if seen is None else seen
    stats = stats or GenStats()
    out: list[LabeledInstance] = []
    if total == 0:
        return out
    drawn = 0
    gen = _candidates(config, table, 0, jobs)
    try:
        for cand in gen:
            drawn += 1
            stats.candidates += 1
            if cand is None:
                stats.timeouts += 1
            elif cand.key() in seen:
                stats.duplicates += 1
            elif need[cand.label] == 0:
                stats.over_quota += 1
            else:
                seen.add(cand.key())
                need[cand.label] -= 1
                out.append(cand)
                if progress:
                    progress(len(out), total)
                if not any(need.values()):
                    break
            if drawn >= cap:
                raise QuotaUnreachable(
                    f"{drawn} candidates drawn, still missing "
                    + ", ".join(f"{v} {k}" for k, v in need.items() if v))
    finally:
        gen.close()
    return out


def label_quotas(sizes: dict[str, int]) -> dict[str, int]:
    return {SAT: sum((k + 1) // 2 for k in sizes.values()), UNSAT: sum(k // 2 for k in sizes.values())}


def generate_dataset(config: GenConfig, region: PhaseRegion, *, jobs: int = 1,
                     stats: GenStats | None = None, progress=None) -> list[LabeledInstance]:
    """Balanced, duplicate-free instances drawn from ``region``, in acceptance order."""
    if region.fragment != config.fragment:
        raise DataError(f"region is for fragment {region.fragment}, not {config.fragment}")
    if not region.cells:
        raise RegionEmpty(f"region for fragment {region.fragment} has no cells")
    triples = region.triples(config.n1_range, config.n2_range)
    return collect(config, triples, label_quotas(config.sizes()), jobs=jobs, stats=stats,
                   progress=progress)


def split_dataset(instances: Sequence[LabeledInstance], sizes: dict[str, int] | Sequence[int],
                  seed: int = 0) -> dict[str, list[LabeledInstance]]:
    """Disjoint splits, each with ceil(k/2) sat and floor(k/2) unsat instances."""
    if not isinstance(sizes, dict):
        sizes = dict(zip(SPLITS, sizes))
    keys = Counter(x.key() for x in instances)
    dup = [k for k, c in keys.items() if c > 1]
    if dup:
        raise DuplicateInstance(f"{len(dup)} duplicated instance(s), e.g. {list(dup[0][1:])}")
    pools = {lab: [x for x in instances if x.label == lab] for lab in (SAT, UNSAT)}
    need = label_quotas(sizes)
    for lab in (SAT, UNSAT):
        if len(pools[lab]) < need[lab]:
            raise ValueError(f"need {need[lab]} {lab} instances, have {len(pools[lab])}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    order = {lab: [pools[lab][i] for i in rng.permutation(len(pools[lab]))] for lab in (SAT, UNSAT)}
    out = {}
    pos = {SAT: 0, UNSAT: 0}
    for name, k in sizes.items():
        part = []
        for lab, count in ((SAT, (k + 1) // 2), (UNSAT, k // 2)):
            part += order[lab][pos[lab]:pos[lab] + count]
            pos[lab] += count
        out[name] = [part[i] for i in rng.permutation(len(part))]
    return out


# ---------------------------------------------------------------------------
# files

def dumps_record(inst: LabeledInstance) -> str:
    return json.dumps(inst.to_record(), ensure_ascii=False)


def emit_jsonl(instances: Iterable[LabeledInstance], path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            for inst in instances:
                fh.write(dumps_record(inst) + "\n")
        tmp.replace(path)
    finally:
        tmp.unlink(missing_ok=True)


def load_jsonl(path) -> list[LabeledInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(LabeledInstance.from_record(json.loads(line)))
            except (json.JSONDecodeError, TypeError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_manifest(out_dir, config: GenConfig, stats: GenStats, counts: dict, region_source=None,
                   extra: dict | None = None) -> Path:
    cfg = config.to_dict()
    manifest = {"config": cfg, "config_hash": config_hash(cfg), "seed": config.seed,
                "region_source": region_source, "counts": counts, "generation": asdict(stats),
                **(extra or {})}
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# statistics

def _summary(values: Sequence[float]) -> tuple:
    return (min(values), max(values), sum(values) / len(values))


def _bin(x: float | None, width: float) -> str:
    if x is None:
        return "none"
    lo = math.floor(x / width + 1e-9) * width
    return f"{lo:g}-{lo + width:g}"


def dataset_report(instances: Sequence[LabeledInstance], vocab: Vocabulary | None = None,
                   *, bin_width: float = 0.25) -> dict:
    """Counts, clause and token summaries, balance and histograms for one split."""
    if not instances:
        raise ValueError("empty split")
    vocab = vocab or Vocabulary.default()
    frags = sorted({x.fragment for x in instances})
    ms = [x.m for x in instances]
    tokens = [sum(len(s.split(" ")) for s in x.sentences) for x in instances]
    hist_ab = Counter((_bin(x.alpha, bin_width), _bin(x.beta, bin_width)) for x in instances)
    q_subj, q_obj = Counter(), Counter()
    for x in instances:
        st = instance_stats([parse(s, x.fragment, vocab) for s in x.sentences], vocab, x.n1, x.n2)
        q_subj[_bin(st.subject_ratio, bin_width)] += 1
        q_obj[_bin(st.object_ratio, bin_width)] += 1
    rep = {"fragments": frags, "count": len(instances),
           "m": dict(zip(("min", "max", "mean"), _summary(ms))),
           "tokens": dict(zip(("min", "max", "mean"), _summary(tokens))),
           "sat_fraction": sum(x.label == SAT for x in instances) / len(instances),
           "alpha_beta_hist": {f"{a}|{b}": c for (a, b), c in sorted(hist_ab.items())},
           "subject_ratio_hist": dict(sorted(q_subj.items())),
           "object_ratio_hist": dict(sorted(q_obj.items()))}
    if len(frags) == 1 and frags[0] in REFERENCE_MEANS:
        rep["reference_means"] = dict(zip(("m", "tokens"), REFERENCE_MEANS[frags[0]]))
    return rep


REPORT_COLUMNS = ("split", "fragment", "count", "m_min", "m_max", "m_mean", "tokens_min",
                  "tokens_max", "tokens_mean", "sat_fraction", "ref_m_mean", "ref_tokens_mean")


def report_rows(reports: dict[str, dict]) -> list[dict]:
    rows = []
    for split, r in reports.items():
        ref = r.get("reference_means", {})
        rows.append({"split": split, "fragment": ",".join(r["fragments"]), "count": r["count"],
                     "m_min": r["m"]["min"], "m_max": r["m"]["max"], "m_mean": round(r["m"]["mean"], 2),
                     "tokens_min": r["tokens"]["min"], "tokens_max": r["tokens"]["max"],
                     "tokens_mean": round(r["tokens"]["mean"], 2),
                     "sat_fraction": round(r["sat_fraction"], 4),
                     "ref_m_mean": ref.get("m", ""), "ref_tokens_mean": ref.get("tokens", "")})
    return rows


def format_table(rows: Sequence[dict], columns: Sequence[str] = REPORT_COLUMNS) -> str:
    cells = [list(columns)] + [[str(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells) + "\n"


# ---------------------------------------------------------------------------
# prompts

STYLES = ("satisfiable", "truefalse")
_Q_SAT = ("Q: Given the following set of sentences, tell me whether they are satisfiable or not. "
          "Generate satisfiable if they are and unsatisfiable if they are not.")
_Q_TF = ("Given the following set of sentences, tell me whether they are satisfiable or not. "
         "Generate True if they are and False if they are not.")


@dataclass(frozen=True)
class PromptRecord:
    instance_id: str
    style: str
    text: str
    answer: str


def sentence_list(sentences: Sequence[str]) -> str:
    return " ".join(s + "." for s in sentences)


def zero_shot_prompt(instance: LabeledInstance, style: str = "satisfiable",
                     example: LabeledInstance | None = None) -> PromptRecord:
    if style == "satisfiable":
        text = f"{_Q_SAT}\nSet of sentences: {sentence_list(instance.sentences)}\n\nA:"
        answer = "satisfiable" if instance.label == SAT else "unsatisfiable"
    elif style == "truefalse":
        if example is None:
            raise ValueError("the truefalse style needs an example instance")
        shot = "True" if example.label == SAT else "False"
        text = (f"Q: {_Q_TF}\n\nSet of sentences: {sentence_list(example.sentences)}\n\nA: {shot}\n\n"
                f"{_Q_TF}\n\nSet of sentences: {sentence_list(instance.sentences)}\n\nA:")
        answer = "True" if instance.label == SAT else "False"
    else:
        raise ValueError(f"unknown prompt style {style!r}; expected one of {', '.join(STYLES)}")
    return PromptRecord(instance.id, style, text, answer)


def write_prompts(records: Iterable[PromptRecord], path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n\n\n".join(r.text for r in records) + "\n")
        tmp.replace(path)
    finally:
        tmp.unlink(missing_ok=True)


def zero_shot_dataset(fragment: str, region: PhaseRegion, seed: int = 0, *, per_label: int = 100,
                      jobs: int = 1, stats: GenStats | None = None, **overrides) -> list[LabeledInstance]:
    """``2 * per_label`` instances for each value of n = n1 + n2 in the zero-shot ranges."""
    n1_range, n2_range = ZERO_SHOT_N1[fragment], ZERO_SHOT_N2[fragment]
    triples = region.triples(n1_range, n2_range)
    n_values = sorted({n1 + n2 for _, n1, n2 in triples})
    want = range(n1_range[0] + n2_range[0], n1_range[1] + n2_range[1] + 1)
    missing = [n for n in want if n not in n_values]
    if missing:
        raise RegionEmpty(f"region has no triple with n1 + n2 = {missing[0]}")
    seen: set = set()
    stats = stats or GenStats()
    out = []
    for n in want:
        config = GenConfig(fragment, n1_range=n1_range, n2_range=n2_range, seed=seed * 1000 + n,
                           n1_law="uniform", **overrides)
        group = [t for t in triples if t[1] + t[2] == n]
        part = collect(config, group, {SAT: per_label, UNSAT: per_label}, jobs=jobs, seen=seen,
                       stats=stats)
        out += [replace(x, id=f"{fragment}-zs{n:02d}-{k:04d}") for k, x in enumerate(part)]
    return out

