"""Orbit-pair metrics: Bowen, mean, Feldman-Katok (ordered and order-free),
weak-mean, and the symbolic edit distance on words.

The Feldman-Katok quantities are built from threshold matchings:

* ``f_ordered(n, delta)``: 1 - (best order-preserving partial bijection using
  only pairs closer than delta)/n, via the LCS-style dynamic program.
* ``f_unordered``: same with arbitrary partial bijections, via maximum
  bipartite matching.
* ``fk_distance``: inf{delta > 0 : f(n, delta) < delta}, found by bisection
  (the gap f(n,delta) - delta is strictly decreasing in delta) or by an exact
  scan over the candidate thresholds.

Two exact identities make ball tests cheap; both follow from f being a
nonincreasing step function of delta, left-continuous with strict pair
thresholds:

* fk < delta   iff  f(n, delta) < delta      with pairs  d <  delta,
* fk <= eps    iff  f(n, eps+) <= eps        with pairs  d <= eps.

So one DP evaluation decides ball membership with no bisection tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError
from .systems import OrbitArray, OrbitSegment


class MetricKind(Enum):
    BOWEN = "bowen"
    MEAN = "mean"
    FK = "fk"
    FK_UNORDERED = "fk_unordered"
    WEAK_MEAN = "weakmean"

    @classmethod
    def parse(cls, name) -> "MetricKind":
        if isinstance(name, MetricKind):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"fku": cls.FK_UNORDERED, "weak_mean": cls.WEAK_MEAN}
        if key in aliases:
            return aliases[key]
        for kind in cls:
            if kind.value == key:
                return kind
        raise DomainError(f"unknown metric kind {name!r}")


@dataclass
class Match:
    """A partial bijection between orbit index sets, with its threshold."""

    flavor: str            # "ordered" | "unordered"
    domain: np.ndarray     # indices into the first orbit
    image: np.ndarray      # paired indices into the second orbit
    threshold: float

    @property
    def size(self) -> int:
        return int(self.domain.size)

    def validate(self, n: int):
        d, r = self.domain, self.image
        if d.size != r.size:
            raise DomainError("domain/image size mismatch")
        for side in (d, r):
            if side.size and (side.min() < 0 or side.max() >= n):
                raise DomainError("match indices out of range")
            if np.unique(side).size != side.size:
                raise DomainError("repeated index in match")
        if self.flavor == "ordered" and d.size > 1:
            if not (np.all(np.diff(d) > 0) and np.all(np.diff(r) > 0)):
                raise DomainError("ordered match must be strictly increasing")


# ---------------------------------------------------------------------------
# combinatorial kernels on eligibility / cost matrices


def ordered_match_sizes(elig: np.ndarray) -> np.ndarray:
    """Max order-preserving match sizes for a (B, na, nb) eligibility batch."""
    B, na, nb = elig.shape
    row = np.zeros((B, nb + 1), dtype=np.int16)
    tmp = np.zeros((B, nb + 1), dtype=np.int16)
    for i in range(na):
        np.add(row[:, :-1], elig[:, i, :], out=tmp[:, 1:], casting="unsafe")
        np.maximum(tmp[:, 1:], row[:, 1:], out=tmp[:, 1:])
        tmp[:, 0] = 0
        np.maximum.accumulate(tmp, axis=1, out=tmp)
        row, tmp = tmp, row
    return row[:, -1].astype(np.int64)


def ordered_match_size(elig: np.ndarray) -> int:
    return int(ordered_match_sizes(elig[None])[0])


def ordered_match_witness(elig: np.ndarray):
    """One maximum order-preserving match as (domain, image) index arrays."""
    na, nb = elig.shape
    table = np.zeros((na + 1, nb + 1), dtype=np.int32)
    for i in range(1, na + 1):
        c = np.maximum(table[i - 1, 1:], table[i - 1, :-1] + elig[i - 1])
        table[i, 1:] = c
        np.maximum.accumulate(table[i], out=table[i])
    d, r = [], []
    i, j = na, nb
    while i > 0 and j > 0:
        if table[i, j] == table[i - 1, j]:
            i -= 1
        elif table[i, j] == table[i, j - 1]:
            j -= 1
        else:
            d.append(i - 1)
            r.append(j - 1)
            i -= 1
            j -= 1
    return np.array(d[::-1], dtype=np.int64), np.array(r[::-1], dtype=np.int64)


def bipartite_match_pairing(elig: np.ndarray) -> np.ndarray:
    """Maximum bipartite matching via augmenting paths (Kuhn's algorithm).

    Returns match_right: for each right vertex the matched left vertex or -1.
    """
    na, nb = elig.shape
    adj = [np.flatnonzero(elig[i]) for i in range(na)]
    match_r = np.full(nb, -1, dtype=np.int64)

    def try_assign(i, seen):
        for j in adj[i]:
            if not seen[j]:
                seen[j] = True
                if match_r[j] < 0 or try_assign(match_r[j], seen):
                    match_r[j] = i
                    return True
        return False

    for i in range(na):
        if adj[i].size:
            try_assign(i, np.zeros(nb, dtype=bool))
    return match_r


def bipartite_match_size(elig: np.ndarray) -> int:
    return int(np.count_nonzero(bipartite_match_pairing(elig) >= 0))


def assignment_pairing(cost: np.ndarray):
    """Minimum-cost perfect assignment: (row indices, column indices, total).

    The total is the exactly rounded sum of the chosen entries.
    """
    rows, cols = linear_sum_assignment(cost)
    total = math.fsum(sorted(cost[rows, cols].tolist()))
    return rows, cols, total


def assignment_total(cost: np.ndarray) -> float:
    """Assignment optimum, solved in both orientations and minimized.

    The solver's internal float arithmetic can return assignments one ulp
    apart for a matrix and its transpose; the min of the two exactly rounded
    totals is orientation-invariant.
    """
    t1 = assignment_pairing(cost)[2]
    t2 = assignment_pairing(np.ascontiguousarray(cost.T))[2]
    return min(t1, t2)


def exact_row_means(rows: np.ndarray) -> np.ndarray:
    """Exactly rounded row sums divided by the row length.

    Keeps mean <= max watertight in float (numpy's accumulation can round a
    constant row's mean above its value).
    """
    n = rows.shape[-1]
    return np.array([math.fsum(r) for r in rows.tolist()]) / n


def lcs_length(w1, w2) -> int:
    w1 = np.asarray(w1)
    w2 = np.asarray(w2)
    return ordered_match_size(w1[:, None] == w2[None, :])


# ---------------------------------------------------------------------------
# pairwise distances on orbit segments


def _pair_array(ox: OrbitSegment, oy: OrbitSegment) -> OrbitArray:
    if ox.n != oy.n:
        raise DomainError(f"orbit length mismatch ({ox.n} vs {oy.n})")
    return OrbitArray.from_segments([ox, oy])


def bowen_distance(ox: OrbitSegment, oy: OrbitSegment) -> float:
    """max over i < n of d(T^i x, T^i y)."""
    arr = _pair_array(ox, oy)
    return float(arr.aligned(0, [1])[0].max())


def mean_distance(ox: OrbitSegment, oy: OrbitSegment) -> float:
    """(1/n) * sum over i < n of d(T^i x, T^i y), exactly rounded."""
    arr = _pair_array(ox, oy)
    return float(exact_row_means(arr.aligned(0, [1]))[0])


def match_fraction(ox, oy, delta: float, ordered: bool = True,
                   strict: bool = True) -> float:
    """Unmatched fraction 1 - |pi|/n at pair threshold delta.

    ``strict`` selects d < delta (the defining form) versus d <= delta (the
    right-limit used by closed-ball tests).
    """
    arr = _pair_array(ox, oy)
    elig = arr.elig(0, [1], delta, strict)[0]
    size = ordered_match_size(elig) if ordered else bipartite_match_size(elig)
    return 1.0 - size / arr.n


def max_ordered_match(ox, oy, delta: float) -> Match:
    """A maximum order-preserving (n, delta)-match (strict pair threshold)."""
    if delta <= 0:
        raise DomainError("match threshold must be > 0")
    arr = _pair_array(ox, oy)
    d, r = ordered_match_witness(arr.elig(0, [1], delta, True)[0])
    m = Match("ordered", d, r, delta)
    m.validate(arr.n)
    return m


def max_unordered_match(ox, oy, delta: float) -> Match:
    """A maximum-cardinality (n, delta)-match with no order constraint."""
    if delta <= 0:
        raise DomainError("match threshold must be > 0")
    arr = _pair_array(ox, oy)
    match_r = bipartite_match_pairing(arr.elig(0, [1], delta, True)[0])
    r = np.flatnonzero(match_r >= 0)
    d = match_r[r]
    order = np.argsort(d)
    m = Match("unordered", d[order], r[order], delta)
    m.validate(arr.n)
    return m


def _fk_from_cost(cost: np.ndarray, n: int, diameter: float, tol: float,
                  ordered: bool, exact: bool) -> float:
    size_fn = ordered_match_size if ordered else bipartite_match_size

    if exact:
        # f is constant on (d_r, d_{r+1}]; the infimum is min over candidate
        # thresholds of max(d_r, unmatched fraction at pairs d <= d_r).
        best = np.inf
        for d_r in [0.0] + np.unique(cost).tolist():
            frac = 1.0 - size_fn(cost <= d_r) / n
            best = min(best, max(d_r, frac))
        return float(best)

    lo, hi = 0.0, max(1.0, diameter) + tol
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        frac = 1.0 - size_fn(cost < mid) / n
        if frac < mid:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _default_tol(system) -> float:
    return 1e-9 * max(1.0, system.diameter)


def fk_distance(ox, oy, tol: float | None = None, exact: bool = False) -> float:
    """Feldman-Katok distance on length-n segments.

    Bisection returns a value within ``tol`` of the true infimum;
    ``exact=True`` scans the candidate thresholds instead (O(n^2) DPs).
    """
    arr = _pair_array(ox, oy)
    if tol is None:
        tol = _default_tol(arr.system)
    if tol <= 0:
        raise DomainError("tolerance must be > 0")
    cost = arr.cost_pair(0, 1)
    return _fk_from_cost(cost, arr.n, arr.system.diameter, tol, True, exact)


def fk_unordered_distance(ox, oy, tol: float | None = None,
                          exact: bool = False) -> float:
    """Order-free Feldman-Katok distance (maximum matching in place of LCS)."""
    arr = _pair_array(ox, oy)
    if tol is None:
        tol = _default_tol(arr.system)
    if tol <= 0:
        raise DomainError("tolerance must be > 0")
    cost = arr.cost_pair(0, 1)
    return _fk_from_cost(cost, arr.n, arr.system.diameter, tol, False, exact)


def weak_mean_distance(ox, oy) -> float:
    """(1/n) * min over permutations of sum_i d(T^i x, T^sigma(i) y)."""
    arr = _pair_array(ox, oy)
    cost = arr.cost_pair(0, 1)
    return assignment_total(cost) / arr.n


def word_edit_distance(w1, w2) -> float:
    """Edit distance 1 - LCS/n between two equal-length words."""
    w1 = np.asarray(w1)
    w2 = np.asarray(w2)
    if w1.shape != w2.shape or w1.ndim != 1:
        raise DomainError("words must be 1-d and of equal length")
    if w1.size == 0:
        raise DomainError("empty words")
    return 1.0 - lcs_length(w1, w2) / w1.size


def fk_values_batch(arr: OrbitArray, pairs_i, pairs_j, tol: float,
                    ordered: bool = True) -> np.ndarray:
    """Feldman-Katok values for a batch of index pairs, bisected in lockstep.

    Each pair keeps its own bracket; one eligibility tensor per step serves
    the whole batch.  The unordered flavor falls back to per-pair matching
    inside each step.
    """
    if tol <= 0:
        raise DomainError("tolerance must be > 0")
    cost = arr.cost_pairs(pairs_i, pairs_j)
    B, n, _ = cost.shape
    lo = np.zeros(B)
    hi = np.full(B, max(1.0, arr.system.diameter) + tol)
    while (hi - lo).max() > tol:
        mid = 0.5 * (lo + hi)
        elig = cost < mid[:, None, None]
        if ordered:
            sizes = ordered_match_sizes(elig)
        else:
            sizes = np.array([bipartite_match_size(e) for e in elig])
        shrink = (1.0 - sizes / n) < mid
        hi = np.where(shrink, mid, hi)
        lo = np.where(shrink, lo, mid)
    return 0.5 * (lo + hi)


class PairMetrics:
    """All pairwise quantities for one orbit pair, sharing one cost matrix."""

    def __init__(self, ox: OrbitSegment, oy: OrbitSegment):
        self.arr = _pair_array(ox, oy)
        self.n = self.arr.n
        self.cost = self.arr.cost_pair(0, 1)
        self._aligned = self.arr.aligned(0, [1])[0]

    def bowen(self) -> float:
        return float(self._aligned.max())

    def mean(self) -> float:
        return float(exact_row_means(self._aligned[None])[0])

    def fk(self, tol=None, exact=False) -> float:
        tol = _default_tol(self.arr.system) if tol is None else tol
        return _fk_from_cost(self.cost, self.n, self.arr.system.diameter,
                             tol, True, exact)

    def fk_unordered(self, tol=None, exact=False) -> float:
        tol = _default_tol(self.arr.system) if tol is None else tol
        return _fk_from_cost(self.cost, self.n, self.arr.system.diameter,
                             tol, False, exact)

    def weak_mean(self) -> float:
        return assignment_total(self.cost) / self.n

    def value(self, kind, tol=None) -> float:
        kind = MetricKind.parse(kind)
        if kind is MetricKind.BOWEN:
            return self.bowen()
        if kind is MetricKind.MEAN:
            return self.mean()
        if kind is MetricKind.FK:
            return self.fk(tol)
        if kind is MetricKind.FK_UNORDERED:
            return self.fk_unordered(tol)
        return self.weak_mean()


def metric_value(ox, oy, kind, tol=None) -> float:
    """Dispatch a single pairwise metric by kind."""
    return PairMetrics(ox, oy).value(kind, tol)


# ---------------------------------------------------------------------------
# batched ball membership (exact, used by spanning/separated/mass counts)


_BATCH_CELLS = 24_000_000  # target elements per eligibility tensor chunk


def defect_table(n: int, eps: float, strict: bool) -> np.ndarray:
    """defect_table(n, eps, strict)[d] answers d/n < eps (or <=) exactly.

    Float expressions like ``1 - size/n < eps`` round; comparing the rational
    d/n against the caller's float via integer arithmetic does not.
    """
    num, den = float(eps).as_integer_ratio()
    if strict:
        return np.array([d * den < num * n for d in range(n + 1)])
    return np.array([d * den <= num * n for d in range(n + 1)])


def _fk_members_chunk(arr, I, J, kind, eps, strict) -> np.ndarray:
    """Exact FK / order-free FK ball tests for one chunk of index pairs.

    The match-size upper bound (histogram dot product on shifts, nonempty
    eligibility rows/columns otherwise) screens out pairs that cannot reach
    the required match size before any DP runs.
    """
    n = arr.n
    table = defect_table(n, eps, strict)
    allowed = np.flatnonzero(table)
    if allowed.size == 0:
        return np.zeros(I.size, dtype=bool)
    d_max = int(allowed.max())
    if d_max >= n:
        return np.ones(I.size, dtype=bool)
    if kind is MetricKind.FK:
        fast = arr.rotation_member_fast(I, J, eps, strict, d_max)
        if fast is not None:
            return fast
    need = n - d_max
    ub = arr.match_size_bound_pairs(I, J, eps, strict)
    elig = None
    if ub is None:
        elig = arr.elig_pairs(I, J, eps, strict)
        ub = np.minimum(elig.any(axis=2).sum(axis=1),
                        elig.any(axis=1).sum(axis=1))
    out = np.zeros(I.size, dtype=bool)
    hits = np.flatnonzero(ub >= need)
    if hits.size:
        sub = (elig[hits] if elig is not None
               else arr.elig_pairs(I[hits], J[hits], eps, strict))
        if kind is MetricKind.FK:
            sizes = ordered_match_sizes(sub)
        else:
            sizes = np.array([bipartite_match_size(e) for e in sub])
        out[hits] = table[n - sizes]
    return out


def ball_membership_pairs(arr: OrbitArray, pairs_i, pairs_j, kind,
                          eps: float, strict: bool) -> np.ndarray:
    """Ball tests for B independent index pairs (chunked internally).

    ``strict`` means the open ball d < eps; otherwise d <= eps.  FK and
    order-free FK use the exact one-DP predicates; no bisection is involved.
    """
    kind = MetricKind.parse(kind)
    if eps <= 0:
        raise DomainError("ball radius must be > 0")
    I = np.asarray(pairs_i)
    J = np.asarray(pairs_j)
    n = arr.n
    out = np.empty(I.size, dtype=bool)
    chunk = max(1, _BATCH_CELLS // (n * n))
    for s in range(0, I.size, chunk):
        i, j = I[s:s + chunk], J[s:s + chunk]
        if kind in (MetricKind.BOWEN, MetricKind.MEAN):
            al = arr.aligned_pairs(i, j)
            v = al.max(axis=1) if kind is MetricKind.BOWEN else al.mean(axis=1)
            out[s:s + chunk] = (v < eps) if strict else (v <= eps)
        elif kind is MetricKind.FK or kind is MetricKind.FK_UNORDERED:
            out[s:s + chunk] = _fk_members_chunk(arr, i, j, kind, eps, strict)
        else:  # WEAK_MEAN: exact assignment, with a cheap lower-bound screen
            cost = arr.cost_pairs(i, j)
            lb = np.maximum(cost.min(axis=2).mean(axis=1),
                            cost.min(axis=1).mean(axis=1))
            vals = np.empty(i.size)
            for b in range(i.size):
                if (lb[b] >= eps) if strict else (lb[b] > eps):
                    vals[b] = lb[b]
                else:
                    vals[b] = assignment_total(cost[b]) / n
            out[s:s + chunk] = (vals < eps) if strict else (vals <= eps)
    return out


def ball_membership(arr: OrbitArray, center: int, others, kind,
                    eps: float, strict: bool) -> np.ndarray:
    """Which of ``others`` lie in the eps-ball around ``center``."""
    others = np.asarray(others)
    return ball_membership_pairs(arr, np.full(others.size, center), others,
                                 kind, eps, strict)
