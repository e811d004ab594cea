"""Empirical checkers: the loose-Kronecker word criterion and the weak-mean
ergodicity probe.

Both are finite probes of asymptotic statements.  The word criterion looks
for a single itinerary word whose edit-distance eps-ball captures at least a
1-eps fraction of the sampled words; the probe samples pairs and inspects the
distribution of the weak-mean distance, which concentrates at 0 exactly for
ergodic measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .matching import assignment_total, defect_table, ordered_match_sizes
from .systems import (EmpiricalMeasure, Partition, System, derive_rng,
                      itineraries)


@dataclass
class CriterionReport:
    partition: str
    n: int
    epsilon: float
    witness: np.ndarray | None
    achieved_fraction: float
    passed: bool
    candidate_count: int
    seed: int

    def to_json(self) -> dict:
        return {"partition": self.partition, "n": self.n,
                "epsilon": self.epsilon,
                "witness": None if self.witness is None
                else self.witness.tolist(),
                "achieved_fraction": self.achieved_fraction,
                "passed": self.passed,
                "candidate_count": self.candidate_count, "seed": self.seed}


@dataclass
class ProbeReport:
    n: int
    pair_count: int
    quantiles: dict = field(default_factory=dict)  # q05, q25, median, q75, q95
    verdict: str = "inconsistent"
    threshold: float = 0.0

    def to_json(self) -> dict:
        return {"n": self.n, "pairs": self.pair_count, **self.quantiles,
                "verdict": self.verdict, "threshold": self.threshold}


def word_ball_fraction(words: np.ndarray, w: np.ndarray, eps: float) -> float:
    """Fraction of rows within strict edit distance eps of the word w."""
    M, n = words.shape
    elig = w[None, :, None] == words[:, None, :]
    lcs = ordered_match_sizes(elig)
    inside = defect_table(n, eps, strict=True)[n - lcs]
    return float(np.count_nonzero(inside)) / M


def katok_criterion_check(system: System, partition: Partition,
                          measure: EmpiricalMeasure, n: int, eps: float,
                          candidate_count: int, seed: int = 0) -> CriterionReport:
    """Search sampled itinerary words for a witness whose edit eps-ball holds
    mass >= 1 - eps; report the best candidate either way."""
    if not (0 < eps < 1):
        raise DomainError("epsilon must lie in (0, 1)")
    if candidate_count < 1 or candidate_count > measure.size:
        raise DomainError("candidate_count must lie in [1, sample size]")
    words = itineraries(system, partition, measure, n)
    rng = derive_rng(seed, "criterion-candidates")
    cand = rng.choice(measure.size, size=candidate_count, replace=False)
    best_frac, best_word = -1.0, None
    for c in cand:
        frac = word_ball_fraction(words, words[int(c)], eps)
        if frac > best_frac:
            best_frac, best_word = frac, words[int(c)].copy()
    return CriterionReport(partition.describe(), n, eps, best_word,
                           best_frac, best_frac >= 1.0 - eps,
                           candidate_count, seed)


def ergodicity_probe(system: System, measure: EmpiricalMeasure, n: int,
                     pair_count: int, seed: int = 0,
                     threshold: float | None = None) -> ProbeReport:
    """Quantiles of the weak-mean distance over sampled point pairs."""
    if pair_count < 1:
        raise DomainError("pair_count must be >= 1")
    if threshold is None:
        threshold = 0.05 * system.diameter
    rng = derive_rng(seed, "ergodic-probe-pairs")
    pairs = rng.integers(0, measure.size, size=(pair_count, 2))
    values = weak_mean_over_pairs(system, measure, n, pairs)
    qs = np.quantile(values, [0.05, 0.25, 0.5, 0.75, 0.95])
    report = ProbeReport(n, pair_count, {
        "q05": float(qs[0]), "q25": float(qs[1]), "median": float(qs[2]),
        "q75": float(qs[3]), "q95": float(qs[4])}, threshold=threshold)
    report.verdict = ("consistent-with-ergodic"
                      if report.quantiles["median"] < threshold
                      else "inconsistent")
    return report


def weak_mean_over_pairs(system: System, measure: EmpiricalMeasure, n: int,
                         pairs: np.ndarray) -> np.ndarray:
    """Weak-mean distances for explicit index pairs into the sample."""
    pairs = np.asarray(pairs)
    used = np.unique(pairs)
    arr = system.orbit_rows(measure, n, used)
    pos = {int(u): k for k, u in enumerate(used)}
    values = np.empty(len(pairs))
    for t, (i, j) in enumerate(pairs):
        if i == j:
            values[t] = 0.0
            continue
        cost = arr.cost_pair(pos[int(i)], pos[int(j)])
        values[t] = assignment_total(cost) / n
    return values
