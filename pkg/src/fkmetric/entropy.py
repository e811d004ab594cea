"""Entropy estimation from orbit metrics: spanning/separated counts over a
sample, measure spanning numbers, local (ball-mass) entropy, and complexity
curves against reference growth scales.

All counts are sample-relative: separated counts lower-bound and spanning
counts approximate the corresponding quantities over the full space, which no
finite computation reaches.  Pairwise ball tests use the exact membership
predicates from :mod:`fkmetric.matching`, so the spanning/separated/packing
relations that hold for the true metric hold exactly here too.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DomainError
from .matching import MetricKind, ball_membership, ball_membership_pairs
from .systems import EmpiricalMeasure, OrbitArray, System

THREADS_ENV = "FKMETRIC_THREADS"


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _as_array(sample) -> OrbitArray:
    if isinstance(sample, OrbitArray):
        return sample
    return OrbitArray.from_segments(list(sample))


# ---------------------------------------------------------------------------
# results


@dataclass
class SpanningResult:
    kind: str              # "spanning" | "separated"
    metric: MetricKind
    n: int
    epsilon: float
    centers: np.ndarray    # indices into the sample
    count: int
    exact: bool            # exact optimum vs greedy
    covered_mass: float | None = None  # measure-spanning runs only

    def to_json(self) -> dict:
        return {"kind": self.kind, "metric": self.metric.value, "n": self.n,
                "epsilon": self.epsilon, "count": self.count,
                "exact": self.exact, "centers": self.centers.tolist(),
                "covered_mass": self.covered_mass}


@dataclass
class CurveRow:
    n: int
    epsilon: float
    count: float           # count, or ball mass for local estimates
    log_value: float


@dataclass
class EntropyCurve:
    metric: MetricKind
    rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)   # epsilon -> fitted slope
    fit_window: tuple | None = None

    def counts(self, epsilon: float) -> list:
        return [(r.n, r.count) for r in self.rows if r.epsilon == epsilon]


@dataclass
class LocalEntropyRow:
    n: int
    delta: float
    mass: float
    estimate: float        # -log(mass)/n; nan when flagged
    flagged: bool


@dataclass
class LocalEntropyEstimate:
    base_point: object
    sample_size: int
    rows: list = field(default_factory=list)

    def estimate(self, n: int, delta: float) -> float:
        for r in self.rows:
            if r.n == n and r.delta == delta:
                return r.estimate
        raise DomainError(f"no row for n={n}, delta={delta}")


@dataclass(frozen=True)
class ScaleDescriptor:
    """Reference growth scale U(n): n**a, a*n, or b**n."""

    kind: str   # "power" | "linear" | "exponential"
    value: float

    def __post_init__(self):
        if self.kind not in ("power", "linear", "exponential"):
            raise DomainError(f"unknown scale kind {self.kind!r}")
        if self.value <= 0 or (self.kind == "exponential" and self.value <= 1):
            raise DomainError("scale parameter out of range")

    def u(self, n: int) -> float:
        if self.kind == "power":
            return float(n) ** self.value
        if self.kind == "linear":
            return self.value * n
        return self.value ** n

    @classmethod
    def parse(cls, text: str) -> "ScaleDescriptor":
        name, _, arg = str(text).partition(":")
        return cls(name.strip(), float(arg) if arg else 1.0)

    def describe(self) -> str:
        return f"{self.kind}:{self.value:g}"


@dataclass
class ComplexityCurve:
    metric: MetricKind
    rows: list = field(default_factory=list)    # CurveRow with count = sp
    scale: ScaleDescriptor | None = None
    threshold: float = 0.1
    verdict: str = "not-determined"


# ---------------------------------------------------------------------------
# membership matrices and greedy constructions


def membership_matrix(arr: OrbitArray, kind, eps: float,
                      strict: bool) -> np.ndarray:
    """(P, P) boolean ball-membership matrix; symmetric, built in pair chunks."""
    kind = MetricKind.parse(kind)
    P = arr.size
    out = np.zeros((P, P), dtype=bool)
    I, J = np.triu_indices(P, k=1)
    chunk = max(1024, 24_000_000 // max(1, arr.n * arr.n))
    spans = range(0, I.size, chunk)

    def fill(s):
        res = ball_membership_pairs(arr, I[s:s + chunk], J[s:s + chunk],
                                    kind, eps, strict)
        out[I[s:s + chunk], J[s:s + chunk]] = res

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(fill, spans))
    else:
        for s in spans:
            fill(s)
    out |= out.T
    np.fill_diagonal(out, True)  # d(x, x) = 0 is inside any eps > 0 ball
    return out


def _greedy_cover(member: np.ndarray, stop_count: int):
    """Greedy max-coverage: most uncovered points first, ties to lowest index.

    Returns (centers, covered_count) once covered_count >= stop_count.
    """
    P = member.shape[0]
    uncovered = np.ones(P, dtype=bool)
    counts = member.sum(axis=1).astype(np.int64)
    centers = []
    covered = 0
    while covered < stop_count:
        c = int(np.argmax(counts))
        if counts[c] == 0:  # unreachable: every point covers itself
            raise AssertionError("greedy cover stalled")
        centers.append(c)
        newly = np.flatnonzero(member[c] & uncovered)
        covered += newly.size
        uncovered[newly] = False
        counts -= member[:, newly].sum(axis=1)
    return np.array(centers, dtype=np.int64), covered


def greedy_spanning(sample, kind, eps: float) -> SpanningResult:
    """Greedy set cover of the sample by closed eps-balls (d <= eps)."""
    arr = _as_array(sample)
    if eps <= 0:
        raise DomainError("epsilon must be > 0")
    kind = MetricKind.parse(kind)
    member = membership_matrix(arr, kind, eps, strict=False)
    centers, _ = _greedy_cover(member, arr.size)
    # re-verify the defining invariant: every point within eps of a center
    if not member[centers].any(axis=0).all():
        raise AssertionError("spanning invariant violated")
    return SpanningResult("spanning", kind, arr.n, eps, centers,
                          len(centers), exact=False)


def greedy_separated(sample, kind, eps: float) -> SpanningResult:
    """First-fit packing: scan in index order, keep points > eps from all kept."""
    arr = _as_array(sample)
    if eps <= 0:
        raise DomainError("epsilon must be > 0")
    kind = MetricKind.parse(kind)
    kept: list[int] = []
    for i in range(arr.size):
        if not kept or not ball_membership(
                arr, i, np.array(kept), kind, eps, strict=False).any():
            kept.append(i)
    centers = np.array(kept, dtype=np.int64)
    # re-verify: pairwise distances strictly above eps
    for a, i in enumerate(kept):
        others = centers[a + 1:]
        if others.size and ball_membership(arr, i, others, kind, eps,
                                           strict=False).any():
            raise AssertionError("separated invariant violated")
    return SpanningResult("separated", kind, arr.n, eps, centers,
                          len(centers), exact=False)


_EXACT_LIMIT = 12


def exact_spanning(sample, kind, eps: float) -> SpanningResult:
    """Smallest sample-centered cover, by exhaustive subset search."""
    arr = _as_array(sample)
    if arr.size > _EXACT_LIMIT:
        raise DomainError(f"exact search capped at {_EXACT_LIMIT} points")
    member = membership_matrix(arr, MetricKind.parse(kind), eps, strict=False)
    P = arr.size
    cover_bits = [int.from_bytes(np.packbits(member[i], bitorder="little")
                                 .tobytes(), "little") for i in range(P)]
    full = (1 << P) - 1
    for size in range(1, P + 1):
        for combo in combinations(range(P), size):
            acc = 0
            for c in combo:
                acc |= cover_bits[c]
            if acc == full:
                return SpanningResult("spanning", MetricKind.parse(kind),
                                      arr.n, eps, np.array(combo, np.int64),
                                      size, exact=True)
    raise AssertionError("unreachable: full set always covers")


def exact_separated(sample, kind, eps: float) -> SpanningResult:
    """Largest pairwise (> eps)-separated subset, by exhaustive search."""
    arr = _as_array(sample)
    if arr.size > _EXACT_LIMIT:
        raise DomainError(f"exact search capped at {_EXACT_LIMIT} points")
    member = membership_matrix(arr, MetricKind.parse(kind), eps, strict=False)
    P = arr.size
    conflict = [int.from_bytes(np.packbits(member[i] & ~np.eye(P, dtype=bool)[i],
                                           bitorder="little").tobytes(),
                               "little") for i in range(P)]
    best_mask, best_size = 0, 0
    for mask in range(1, 1 << P):
        size = mask.bit_count()
        if size <= best_size:
            continue
        ok = True
        m = mask
        while m:
            i = (m & -m).bit_length() - 1
            if conflict[i] & mask:
                ok = False
                break
            m &= m - 1
        if ok:
            best_mask, best_size = mask, size
    centers = np.array([i for i in range(P) if best_mask >> i & 1], np.int64)
    return SpanningResult("separated", MetricKind.parse(kind), arr.n, eps,
                          centers, best_size, exact=True)


# ---------------------------------------------------------------------------
# curves


def _ols_slope(ns, logs) -> float:
    x = np.asarray(ns, dtype=np.float64)
    y = np.asarray(logs, dtype=np.float64)
    if x.size < 2:
        return 0.0
    x = x - x.mean()
    return float((x * (y - y.mean())).sum() / (x * x).sum())


def default_fit_window(n_values) -> tuple:
    """Top half of the n-range (discards small-n transients)."""
    ns = sorted(set(int(n) for n in n_values))
    top = ns[len(ns) // 2:]
    return (top[0], top[-1])


def _fit_slopes(curve: EntropyCurve, eps_list, fit_window):
    ns = sorted({r.n for r in curve.rows})
    window = tuple(fit_window) if fit_window else default_fit_window(ns)
    curve.fit_window = window
    for eps in eps_list:
        pts = [(r.n, r.log_value) for r in curve.rows
               if r.epsilon == eps and window[0] <= r.n <= window[1]
               and math.isfinite(r.log_value)]
        curve.slopes[eps] = _ols_slope([p[0] for p in pts],
                                       [p[1] for p in pts])


def topological_entropy_curve(system: System, sampler, N: int, n_range,
                              eps_list, kind=MetricKind.FK, seed: int = 0,
                              mode: str = "separated",
                              fit_window: tuple | None = None) -> EntropyCurve:
    """Separated (default) or spanning counts over an N-point sample,
    with a log-count growth slope per epsilon."""
    if N < 2:
        raise DomainError("need at least 2 sample points")
    n_values = sorted(set(int(n) for n in n_range))
    if not n_values:
        raise DomainError("empty n range")
    kind = MetricKind.parse(kind)
    measure = system.sample_points(sampler, N, seed)
    arr_full = system.orbit_rows(measure, n_values[-1])
    curve = EntropyCurve(metric=kind)
    for n in n_values:
        arr = arr_full.prefix(n)
        for eps in eps_list:
            if mode == "separated":
                res = greedy_separated(arr, kind, eps)
            elif mode == "spanning":
                res = greedy_spanning(arr, kind, eps)
            else:
                raise DomainError(f"unknown mode {mode!r}")
            curve.rows.append(CurveRow(n, eps, res.count,
                                       math.log(res.count)))
    _fit_slopes(curve, eps_list, fit_window)
    return curve


def measure_spanning(system: System, measure: EmpiricalMeasure, n: int,
                     eps: float, kind=MetricKind.FK,
                     _arr: OrbitArray | None = None) -> SpanningResult:
    """Greedy mass cover: open eps-balls centered on sample points until the
    covered fraction exceeds 1 - eps."""
    if not (0 < eps < 1):
        raise DomainError("epsilon must lie in (0, 1)")
    kind = MetricKind.parse(kind)
    arr = _arr if _arr is not None else system.orbit_rows(measure, n)
    member = membership_matrix(arr, kind, eps, strict=True)
    M = arr.size
    need = math.floor((1.0 - eps) * M) + 1  # covered/M > 1 - eps
    centers, covered = _greedy_cover(member, min(need, M))
    mass = covered / M
    if not mass > 1.0 - eps:
        raise AssertionError("mass cover invariant violated")
    return SpanningResult("spanning", kind, n, eps, centers, len(centers),
                          exact=False, covered_mass=mass)


def katok_entropy_curve(system: System, measure: EmpiricalMeasure, n_range,
                        eps_list, kind=MetricKind.FK,
                        fit_window: tuple | None = None) -> EntropyCurve:
    """Measure spanning numbers over n, with a growth slope per epsilon."""
    n_values = sorted(set(int(n) for n in n_range))
    kind = MetricKind.parse(kind)
    arr_full = system.orbit_rows(measure, n_values[-1])
    curve = EntropyCurve(metric=kind)
    for n in n_values:
        arr = arr_full.prefix(n)
        for eps in eps_list:
            res = measure_spanning(system, measure, n, eps, kind, _arr=arr)
            curve.rows.append(CurveRow(n, eps, res.count,
                                       math.log(res.count)))
    _fit_slopes(curve, eps_list, fit_window)
    return curve


def brin_katok_local(system: System, measure: EmpiricalMeasure, x, n_range,
                     delta_list) -> LocalEntropyEstimate:
    """Empirical mass of shrinking open FK-balls around x; -log(mass)/n rows.

    Rows with zero empirical mass are flagged and carry no estimate.
    """
    n_values = sorted(set(int(n) for n in n_range))
    point = system.point(x)
    est = LocalEntropyEstimate(base_point=point, sample_size=measure.size)
    seg = system.orbit(point, n_values[-1])
    ext = _extend_array(system, measure, seg, n_values[-1])
    for n in n_values:
        arr = ext.prefix(n)
        others = np.arange(measure.size)
        for delta in delta_list:
            inside = ball_membership(arr, measure.size, others,
                                     MetricKind.FK, delta, strict=True)
            mass = inside.sum() / measure.size
            if mass > 0:
                est.rows.append(LocalEntropyRow(n, delta, mass,
                                                -math.log(mass) / n, False))
            else:
                est.rows.append(LocalEntropyRow(n, delta, 0.0, math.nan, True))
    return est


def _extend_array(system, measure, seg, n) -> OrbitArray:
    """OrbitArray of the sample plus one extra segment (index = sample size)."""
    arr = system.orbit_rows(measure, n)
    if arr.syms is not None:
        H = min(arr.syms.shape[1], seg.row.size)
        syms = np.vstack([arr.syms[:, :H], seg.row[None, :H]])
        return OrbitArray(system, n, syms=syms)
    vals = np.vstack([arr.vals, seg.row[None, :n]])
    comps = np.concatenate([arr.comps, [seg.base.component]])
    return OrbitArray(system, n, vals=vals, comps=comps.astype(np.uint8))


def measure_complexity_curve(system: System, measure: EmpiricalMeasure,
                             n_range, eps_list,
                             kind=MetricKind.FK) -> ComplexityCurve:
    """Measure spanning numbers collected for comparison against a scale."""
    kind = MetricKind.parse(kind)
    n_values = sorted(set(int(n) for n in n_range))
    arr_full = system.orbit_rows(measure, n_values[-1])
    curve = ComplexityCurve(metric=kind)
    for n in n_values:
        arr = arr_full.prefix(n)
        for eps in eps_list:
            res = measure_spanning(system, measure, n, eps, kind, _arr=arr)
            curve.rows.append(CurveRow(n, eps, res.count, math.log(res.count)))
    return curve


def complexity_compare(curve: ComplexityCurve,
                       scale: ScaleDescriptor,
                       threshold: float = 0.1) -> ComplexityCurve:
    """Verdict "weaker" iff min over n of sp/U(n) < threshold for every eps.

    A finite run can never certify the limit inferior; "not-determined" is
    the honest alternative.
    """
    if not curve.rows:
        raise DomainError("complexity curve has no computed rows")
    curve.scale = scale
    curve.threshold = threshold
    eps_values = sorted({r.epsilon for r in curve.rows})
    weaker = True
    for eps in eps_values:
        ratios = [r.count / scale.u(r.n) for r in curve.rows
                  if r.epsilon == eps]
        if min(ratios) >= threshold:
            weaker = False
    curve.verdict = "weaker" if weaker else "not-determined"
    return curve
