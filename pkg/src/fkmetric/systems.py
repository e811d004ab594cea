"""Phase spaces, maps, metrics, orbit generation, and invariant-measure samplers.

Supported systems: full shifts over a finite alphabet, circle rotations,
the doubling map, the tent map, the logistic map (r=4), and a two-component
disjoint union used as a non-ergodic probe.

The doubling and tent maps are iterated in exact dyadic arithmetic (Python
integers).  In float64 both maps collapse onto 0 after ~52 steps because the
mantissa is shifted out one bit per step; a generic point needs as many random
bits as orbit steps.  Points sampled from Lebesgue carry ``DYADIC_BITS``
random bits, which keeps orbits of length up to ~1000 faithful.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, HorizonError

# Default bit depth for exact dyadic points (doubling/tent); supports orbit
# lengths up to DYADIC_BITS - 64 before the random tail runs out.
DYADIC_BITS = 1088

# Default symbolic horizon for a largest requested orbit length.
def default_horizon(n_max: int) -> int:
    return 2 * n_max + 32


def derive_rng(seed: int, label: str) -> np.random.Generator:
    """Per-task RNG stream: 64-bit seed XOR a stable hash of the task label."""
    h = int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "big")
    return np.random.Generator(np.random.PCG64((int(seed) ^ h) & 0xFFFFFFFFFFFFFFFF))


@dataclass(eq=False)
class Point:
    """A phase-space element.

    ``value`` is a float in [0,1] for interval/circle systems or an int8
    symbol array for shift systems.  ``component`` tags two-component points.
    ``numer``/``bits`` carry the exact dyadic state for binary interval maps
    (value == numer / 2**bits).
    """

    value: object
    component: int = 0
    numer: int | None = None
    bits: int | None = None

    @property
    def symbols(self) -> np.ndarray:
        if not isinstance(self.value, np.ndarray):
            raise DomainError("point has no symbol array")
        return self.value

    @property
    def real(self) -> float:
        if isinstance(self.value, np.ndarray):
            raise DomainError("point has no real coordinate")
        return float(self.value)

    def __repr__(self):
        if isinstance(self.value, np.ndarray):
            head = "".join(str(int(s)) for s in self.value[:16])
            tail = "..." if self.value.size > 16 else ""
            return f"Point(symbols={head}{tail})"
        if self.component:
            return f"Point({self.value!r}, component={self.component})"
        return f"Point({self.value!r})"


def _dyadic_from_float(x: float, bits: int) -> int:
    # Every float64 is m / 2**s with s <= 1074, so this is exact for
    # bits >= 1074; for smaller bits the low-order tail is truncated.
    m, e = math.frexp(x)  # x = m * 2**e, 0.5 <= |m| < 1
    num = int(m * (1 << 53))  # exact: m has <= 53 mantissa bits
    shift = bits + e - 53
    return num << shift if shift >= 0 else num >> -shift


def _dyadic_value(numer: int, bits: int) -> float:
    if bits <= 64:
        return numer / (1 << bits)
    return (numer >> (bits - 64)) / float(1 << 64)


@dataclass
class OrbitSegment:
    """The length-n forward orbit of a point, with fast array access.

    ``row`` holds the materialized coordinates: an (n,) float array for real
    systems or the base (H,) symbol array for shifts (T^i x is the suffix
    starting at i).
    """

    system: "System"
    base: Point
    n: int
    points: list = field(repr=False)
    row: np.ndarray = field(repr=False)

    def __len__(self):
        return self.n


@dataclass
class EmpiricalMeasure:
    """A uniformly weighted finite point set standing in for an invariant measure."""

    system: "System"
    size: int
    provenance: str
    seed: int
    syms: np.ndarray | None = None        # (M, H) int8, shift systems
    vals: np.ndarray | None = None        # (M,) float64, real systems
    comps: np.ndarray | None = None       # (M,) uint8
    numers: list | None = None            # exact dyadic numerators, or None
    bits: int | None = None

    @property
    def weight(self) -> float:
        return 1.0 / self.size

    def point(self, i: int) -> Point:
        if self.syms is not None:
            return Point(self.syms[i].copy())
        numer = self.numers[i] if self.numers is not None else None
        return Point(float(self.vals[i]), component=int(self.comps[i]),
                     numer=numer, bits=self.bits if numer is not None else None)

    @property
    def points(self) -> list:
        return [self.point(i) for i in range(self.size)]


@dataclass(frozen=True)
class Partition:
    """A finite partition: per-symbol cells on a shift, or equal interval bins."""

    kind: str  # "symbols" | "bins"
    cells: int

    def __post_init__(self):
        if self.kind not in ("symbols", "bins"):
            raise ConfigurationError(f"unknown partition kind {self.kind!r}")
        if self.cells < 2:
            raise ConfigurationError("partition needs at least 2 cells")

    def describe(self) -> str:
        return f"{self.kind}:{self.cells}"


class System:
    """Common interface for all built-in systems."""

    kind: str = ""
    symbolic: bool = False
    metric: str = ""        # "circle" | "interval" | "shift" | "union"
    diameter: float = 0.0
    horizon: int | None = None

    # -- construction ------------------------------------------------------

    def spec_dict(self) -> dict:
        raise NotImplementedError

    def point(self, raw) -> Point:
        """Coerce raw user input (float, symbol sequence, Point) to a valid Point."""
        raise NotImplementedError

    # -- dynamics ----------------------------------------------------------

    def apply(self, p: Point) -> Point:
        raise NotImplementedError

    def orbit(self, x, n: int) -> OrbitSegment:
        if n < 1:
            raise DomainError("orbit length must be >= 1")
        p = self.point(x)
        if self.symbolic and n > self.horizon:
            raise HorizonError(f"orbit length {n} exceeds horizon {self.horizon}")
        return self._orbit(p, n)

    def _orbit(self, p: Point, n: int) -> OrbitSegment:
        pts = [p]
        for _ in range(n - 1):
            pts.append(self.apply(pts[-1]))
        if self.symbolic:
            row = p.symbols
        else:
            row = np.array([q.real for q in pts], dtype=np.float64)
        return OrbitSegment(self, p, n, pts, row)

    # -- metric ------------------------------------------------------------

    def distance(self, p: Point, q: Point) -> float:
        raise NotImplementedError

    # -- sampling ----------------------------------------------------------

    def sample_points(self, measure_spec, count: int, seed: int) -> EmpiricalMeasure:
        if count < 1:
            raise DomainError("sample size must be >= 1")
        spec = _measure_dict(measure_spec)
        return self._sample(spec, count, seed)

    def _sample(self, spec: dict, count: int, seed: int) -> EmpiricalMeasure:
        raise NotImplementedError

    # -- batched orbits ----------------------------------------------------

    def orbit_rows(self, measure: EmpiricalMeasure, n: int, idx=None) -> "OrbitArray":
        """Materialize orbit coordinate rows for a subset of a sample."""
        raise NotImplementedError


# ---------------------------------------------------------------------------
# real-line metrics


def _circle_dist(a, b):
    d = np.abs(a - b)
    return np.minimum(d, 1.0 - d)


def _interval_dist(a, b):
    return np.abs(a - b)


class _RealSystem(System):
    """Shared plumbing for systems whose points are coordinates in [0,1]."""

    closed_right = False  # tent/logistic live on [0,1]

    def point(self, raw) -> Point:
        if isinstance(raw, Point):
            p = raw
        else:
            p = Point(float(raw))
        if isinstance(p.value, np.ndarray):
            raise DomainError(f"{self.kind} expects a real coordinate")
        v = float(p.value)
        hi_ok = (v <= 1.0) if self.closed_right else (v < 1.0)
        if not (math.isfinite(v) and 0.0 <= v and hi_ok):
            raise DomainError(f"coordinate {v} outside the {self.kind} phase space")
        return p

    def _dist_arrays(self, a, b):
        if self.metric == "circle":
            return _circle_dist(a, b)
        return _interval_dist(a, b)

    def distance(self, p: Point, q: Point) -> float:
        if isinstance(p.value, np.ndarray) or isinstance(q.value, np.ndarray):
            raise DomainError("mixed-system points")
        if p.component != q.component:
            raise DomainError("mixed-system points (component tags differ)")
        return float(self._dist_arrays(np.float64(p.real), np.float64(q.real)))

    def _lebesgue(self, count, seed, label):
        rng = derive_rng(seed, label)
        return rng.random(count)

    def orbit_rows(self, measure, n, idx=None):
        if idx is None:
            idx = np.arange(measure.size)
        idx = np.asarray(idx)
        vals = self._orbit_matrix(measure, n, idx)
        comps = (measure.comps[idx] if measure.comps is not None
                 else np.zeros(len(idx), np.uint8))
        return OrbitArray(self, n, vals=vals, comps=comps)

    def _orbit_matrix(self, measure, n, idx):
        raise NotImplementedError


class Rotation(_RealSystem):
    """Circle rotation x -> x + alpha mod 1 with the wrap-around metric."""

    metric = "circle"
    diameter = 0.5

    def __init__(self, alpha: float):
        if not (0.0 <= alpha < 1.0) or not math.isfinite(alpha):
            raise ConfigurationError(f"rotation angle {alpha} outside [0,1)")
        self.alpha = float(alpha)
        self.kind = "rotation"

    def spec_dict(self):
        return {"kind": "rotation", "alpha": self.alpha}

    def apply(self, p: Point) -> Point:
        return Point((p.real + self.alpha) % 1.0, component=p.component)

    def _sample(self, spec, count, seed):
        kind = spec["kind"]
        if kind == "lebesgue":
            vals = self._lebesgue(count, seed, "sample-lebesgue")
            prov = "iid-sampler"
        elif kind == "orbit":
            x0 = float(derive_rng(seed, "sample-orbit-base").random())
            vals = (x0 + self.alpha * np.arange(count)) % 1.0
            prov = "orbit-average"
        else:
            raise ConfigurationError(f"measure {kind!r} not defined for rotation")
        return EmpiricalMeasure(self, count, prov, seed, vals=vals,
                                comps=np.zeros(count, np.uint8))

    def _orbit_matrix(self, measure, n, idx):
        out = np.empty((len(idx), n))
        cur = measure.vals[idx].astype(np.float64, copy=True)
        for t in range(n):
            out[:, t] = cur
            cur = (cur + self.alpha) % 1.0
        return out


class _DyadicSystem(_RealSystem):
    """Binary interval maps iterated exactly on dyadic rationals."""

    def __init__(self, bits: int = DYADIC_BITS):
        if bits < 64:
            raise ConfigurationError("dyadic precision below 64 bits")
        self.bits = bits
        self._mask = (1 << bits) - 1

    def point(self, raw) -> Point:
        p = super().point(raw)
        if p.numer is None:
            numer = _dyadic_from_float(p.real, self.bits)
            p = Point(p.real, component=p.component, numer=numer, bits=self.bits)
        return p

    def _step_numer(self, numer: int) -> int:
        raise NotImplementedError

    def apply(self, p: Point) -> Point:
        p = self.point(p)
        numer = self._step_numer(p.numer)
        return Point(_dyadic_value(numer, self.bits), component=p.component,
                     numer=numer, bits=self.bits)

    def _sample(self, spec, count, seed):
        if spec["kind"] != "lebesgue" and spec["kind"] != "orbit":
            raise ConfigurationError(
                f"measure {spec['kind']!r} not defined for {self.kind}")
        numers = _random_numers(count, self.bits, derive_rng(seed, "sample-lebesgue"))
        if spec["kind"] == "orbit":
            base = numers[0]
            numers = []
            for _ in range(count):
                numers.append(base)
                base = self._step_numer(base)
            prov = "orbit-average"
        else:
            prov = "iid-sampler"
        vals = np.array([_dyadic_value(k, self.bits) for k in numers])
        return EmpiricalMeasure(self, count, prov, seed, vals=vals,
                                comps=np.zeros(count, np.uint8),
                                numers=numers, bits=self.bits)

    def _orbit_matrix(self, measure, n, idx):
        out = np.empty((len(idx), n))
        for r, i in enumerate(idx):
            k = measure.numers[int(i)]
            for t in range(n):
                out[r, t] = _dyadic_value(k, self.bits)
                k = self._step_numer(k)
        return out


def _random_numers(count, bits, rng):
    words = (bits + 63) // 64
    raw = rng.integers(0, 1 << 64, size=(count, words), dtype=np.uint64)
    mask = (1 << bits) - 1
    out = []
    for row in raw:
        k = 0
        for w in row.tolist():
            k = (k << 64) | w
        out.append(k & mask)
    return out


class Doubling(_DyadicSystem):
    """Doubling map x -> 2x mod 1 on the circle metric."""

    metric = "circle"
    diameter = 0.5

    def __init__(self, bits: int = DYADIC_BITS):
        super().__init__(bits)
        self.kind = "doubling"

    def spec_dict(self):
        return {"kind": "doubling"}

    def _step_numer(self, numer):
        return (numer << 1) & self._mask


class Tent(_DyadicSystem):
    """Tent map x -> 1 - |1 - 2x| on [0,1] with the |x-y| metric."""

    metric = "interval"
    diameter = 1.0
    closed_right = True

    def __init__(self, bits: int = DYADIC_BITS):
        super().__init__(bits)
        self.kind = "tent"

    def spec_dict(self):
        return {"kind": "tent"}

    def _step_numer(self, numer):
        one = self._mask + 1
        k2 = numer << 1
        return k2 if k2 <= one else 2 * one - k2


class Logistic(_RealSystem):
    """Logistic map x -> 4x(1-x) on [0,1]; float64 iteration."""

    metric = "interval"
    diameter = 1.0
    closed_right = True

    def __init__(self):
        self.kind = "logistic"

    def spec_dict(self):
        return {"kind": "logistic"}

    def apply(self, p: Point) -> Point:
        x = p.real
        return Point(4.0 * x * (1.0 - x), component=p.component)

    def _sample(self, spec, count, seed):
        kind = spec["kind"]
        if kind == "arcsine":
            u = derive_rng(seed, "sample-arcsine").random(count)
            vals = np.sin(0.5 * np.pi * u) ** 2
            prov = "iid-sampler"
        elif kind == "lebesgue":
            vals = self._lebesgue(count, seed, "sample-lebesgue")
            prov = "iid-sampler"
        elif kind == "orbit":
            x = float(derive_rng(seed, "sample-orbit-base").random())
            vals = np.empty(count)
            for t in range(count):
                vals[t] = x
                x = 4.0 * x * (1.0 - x)
            prov = "orbit-average"
        else:
            raise ConfigurationError(f"measure {kind!r} not defined for logistic")
        return EmpiricalMeasure(self, count, prov, seed, vals=vals,
                                comps=np.zeros(count, np.uint8))

    def _orbit_matrix(self, measure, n, idx):
        out = np.empty((len(idx), n))
        cur = measure.vals[idx].astype(np.float64, copy=True)
        for t in range(n):
            out[:, t] = cur
            cur = 4.0 * cur * (1.0 - cur)
        return out


class FullShift(System):
    """One-sided full shift on k symbols with metric 2**-(first difference).

    Points are finite symbol blocks of length ``horizon``; agreement through
    the horizon counts as distance 0, an error of at most 2**-(horizon-n).
    """

    symbolic = True
    metric = "shift"
    diameter = 1.0

    def __init__(self, k: int, horizon: int):
        if k < 2:
            raise ConfigurationError("alphabet size must be >= 2")
        if horizon < 2:
            raise ConfigurationError("horizon must be >= 2")
        self.k = int(k)
        self.horizon = int(horizon)
        self.kind = "full_shift"

    def spec_dict(self):
        return {"kind": "full_shift", "k": self.k, "horizon": self.horizon}

    def point(self, raw) -> Point:
        if isinstance(raw, Point):
            arr = raw.value
        else:
            arr = raw
        if isinstance(arr, str):
            arr = [int(c) for c in arr]
        arr = np.asarray(arr, dtype=np.int8)
        if arr.ndim != 1 or arr.size < 1:
            raise DomainError("shift point must be a nonempty 1-d symbol array")
        if arr.min() < 0 or arr.max() >= self.k:
            raise DomainError(f"symbols outside alphabet of size {self.k}")
        if not isinstance(raw, Point) and arr.size != self.horizon:
            raise DomainError(
                f"shift point must have exactly horizon={self.horizon} symbols "
                f"(got {arr.size}); pad or repeat explicitly")
        return Point(arr)

    def cyclic_point(self, block) -> Point:
        """Repeat a symbol block cyclically out to the horizon."""
        if isinstance(block, str):
            block = [int(c) for c in block]
        block = np.asarray(block, dtype=np.int8)
        if block.size < 1:
            raise DomainError("empty symbol block")
        reps = -(-self.horizon // block.size)
        return self.point(np.tile(block, reps)[: self.horizon])

    def apply(self, p: Point) -> Point:
        arr = p.symbols
        if arr.size < 2:
            raise HorizonError("horizon exhausted; cannot shift further")
        return Point(arr[1:])

    def _orbit(self, p: Point, n: int) -> OrbitSegment:
        arr = p.symbols
        if n > arr.size:
            raise HorizonError(f"orbit length {n} exceeds horizon {arr.size}")
        pts = [Point(arr[i:]) for i in range(n)]
        return OrbitSegment(self, p, n, pts, arr)

    def distance(self, p: Point, q: Point) -> float:
        a, b = p.symbols, q.symbols
        m = min(a.size, b.size)
        diff = np.nonzero(a[:m] != b[:m])[0]
        if diff.size == 0:
            return 0.0
        return 2.0 ** (-int(diff[0]))

    def _sample(self, spec, count, seed):
        if spec["kind"] != "bernoulli":
            raise ConfigurationError(
                f"measure {spec['kind']!r} not defined for full shift")
        p = np.asarray(spec["p"], dtype=np.float64)
        if p.size != self.k:
            raise ConfigurationError(
                f"need {self.k} probabilities, got {p.size}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ConfigurationError("probabilities must be >= 0 and sum to 1")
        rng = derive_rng(seed, "sample-bernoulli")
        syms = rng.choice(self.k, size=(count, self.horizon), p=p).astype(np.int8)
        return EmpiricalMeasure(self, count, "iid-sampler", seed, syms=syms)

    def orbit_rows(self, measure, n, idx=None):
        if n > self.horizon:
            raise HorizonError(f"orbit length {n} exceeds horizon {self.horizon}")
        if idx is None:
            syms = measure.syms
        else:
            syms = measure.syms[np.asarray(idx)]
        return OrbitArray(self, n, syms=syms)


class TwoComponent(_RealSystem):
    """Disjoint union of two real-valued systems at mutual distance 1.

    Orbits never change component, so the union is non-ergodic for any
    mixture weight in (0,1); used as a probe for the ergodicity checks.
    """

    metric = "union"
    diameter = 1.0

    def __init__(self, sub_a: System, sub_b: System, weight_a: float):
        if sub_a.symbolic or sub_b.symbolic:
            raise ConfigurationError("two_component supports real-valued sub-systems only")
        if not (0.0 <= weight_a <= 1.0):
            raise ConfigurationError("weight_a must lie in [0,1]")
        self.sub = (sub_a, sub_b)
        self.weight_a = float(weight_a)
        self.kind = "two_component"

    def spec_dict(self):
        return {"kind": "two_component", "a": self.sub[0].spec_dict(),
                "b": self.sub[1].spec_dict(), "weight_a": self.weight_a}

    def point(self, raw) -> Point:
        if isinstance(raw, Point):
            c = raw.component
            if c not in (0, 1):
                raise DomainError("component tag must be 0 or 1")
            inner = self.sub[c].point(Point(raw.value, numer=raw.numer, bits=raw.bits))
            return Point(inner.value, component=c, numer=inner.numer, bits=inner.bits)
        return self.point(Point(float(raw), component=0))

    def apply(self, p: Point) -> Point:
        c = p.component
        q = self.sub[c].apply(Point(p.value, numer=p.numer, bits=p.bits))
        return Point(q.value, component=c, numer=q.numer, bits=q.bits)

    def distance(self, p: Point, q: Point) -> float:
        if p.component != q.component:
            return 1.0
        sub = self.sub[p.component]
        return sub.distance(Point(p.value), Point(q.value))

    def _sample(self, spec, count, seed):
        if spec["kind"] != "lebesgue":
            raise ConfigurationError("two_component sampling is lebesgue-per-component")
        rng = derive_rng(seed, "sample-components")
        comps = (rng.random(count) >= self.weight_a).astype(np.uint8)
        vals = np.empty(count)
        numers = None
        meas = []
        for c in (0, 1):
            n_c = int(np.count_nonzero(comps == c))
            meas.append(self.sub[c]._sample({"kind": "lebesgue"}, max(n_c, 1),
                                            seed + c + 1))
        if any(m.numers is not None for m in meas):
            numers = [None] * count
        taken = [0, 0]
        for i in range(count):
            c = comps[i]
            m = meas[c]
            j = taken[c]
            taken[c] += 1
            vals[i] = m.vals[j]
            if numers is not None and m.numers is not None:
                numers[i] = m.numers[j]
        return EmpiricalMeasure(self, count, "iid-sampler", seed, vals=vals,
                                comps=comps, numers=numers,
                                bits=meas[0].bits or meas[1].bits)

    def _orbit_matrix(self, measure, n, idx):
        out = np.empty((len(idx), n))
        for c in (0, 1):
            rows = np.nonzero(measure.comps[idx] == c)[0]
            if rows.size == 0:
                continue
            sub = self.sub[c]
            sub_measure = EmpiricalMeasure(
                sub, rows.size, measure.provenance, measure.seed,
                vals=measure.vals[idx[rows]],
                comps=np.zeros(rows.size, np.uint8),
                numers=None if measure.numers is None
                else [measure.numers[int(i)] for i in idx[rows]],
                bits=measure.bits)
            out[rows] = sub._orbit_matrix(sub_measure, n,
                                          np.arange(rows.size))
        return out

    def _dist_arrays(self, a, b):
        raise DomainError("two_component distances need component tags")


# ---------------------------------------------------------------------------
# batched orbit arrays


class OrbitArray:
    """Orbit coordinates for a batch of points from one system, one length n.

    Real systems: ``vals`` is (P, n) float64 plus per-point component tags.
    Shift systems: ``syms`` is (P, H) int8 and T^t x_i is the suffix at t.
    All pairwise kernels (cost tensors, threshold eligibility) live here so
    the metric semantics stay in one place.
    """

    def __init__(self, system, n, vals=None, comps=None, syms=None):
        self.system = system
        self.n = int(n)
        self.vals = vals
        self.comps = comps
        self.syms = syms
        self._code_cache = {}
        if syms is not None:
            self.size = syms.shape[0]
            self.depth = syms.shape[1] - n + 1  # comparable positions per index
            if self.depth < 1:
                raise HorizonError("orbit length exceeds horizon")
        else:
            self.size = vals.shape[0]
            self.depth = None

    @classmethod
    def from_segments(cls, segments):
        if not segments:
            raise DomainError("empty sample")
        sys0 = segments[0].system
        n = segments[0].n
        for s in segments[1:]:
            if s.system is not sys0 and s.system.spec_dict() != sys0.spec_dict():
                raise DomainError("segments from different systems")
            if s.n != n:
                raise DomainError("segments of different lengths")
        if sys0.symbolic:
            H = min(s.row.size for s in segments)
            syms = np.stack([s.row[:H] for s in segments])
            return cls(sys0, n, syms=syms)
        vals = np.stack([s.row for s in segments])
        comps = np.array([s.base.component for s in segments], np.uint8)
        return cls(sys0, n, vals=vals, comps=comps)

    def prefix(self, n: int) -> "OrbitArray":
        """View of the same batch at a shorter orbit length."""
        if n > self.n:
            raise DomainError("prefix longer than stored orbits")
        if self.syms is not None:
            return OrbitArray(self.system, n, syms=self.syms)
        return OrbitArray(self.system, n, vals=self.vals[:, :n], comps=self.comps)

    # -- real-system helpers ------------------------------------------------

    def _real_cost(self, i, js):
        sys_ = self.system
        a = self.vals[i]                       # (n,)
        b = self.vals[js]                      # (B, n)
        if sys_.metric == "union":
            out = np.empty((len(js), self.n, self.n))
            same = self.comps[js] == self.comps[i]
            sub = sys_.sub[int(self.comps[i])]
            if np.any(same):
                out[same] = sub._dist_arrays(a[None, :, None], b[same][:, None, :])
            out[~same] = 1.0
            return out
        return sys_._dist_arrays(a[None, :, None], b[:, None, :])

    def _real_aligned(self, i, js):
        sys_ = self.system
        a = self.vals[i]
        b = self.vals[js]
        if sys_.metric == "union":
            out = np.empty((len(js), self.n))
            same = self.comps[js] == self.comps[i]
            sub = sys_.sub[int(self.comps[i])]
            if np.any(same):
                out[same] = sub._dist_arrays(a[None, :], b[same])
            out[~same] = 1.0
            return out
        return sys_._dist_arrays(a[None, :], b)

    # -- shift helpers ------------------------------------------------------

    def _shift_windows(self, i, js, t):
        n = self.n
        center = self.syms[i, t:t + n]
        others = self.syms[js][:, t:t + n]
        return center, others

    def _shift_cost(self, i, js):
        n = self.n
        B = len(js)
        out = np.zeros((B, n, n))
        alive = np.ones((B, n, n), dtype=bool)
        v = 1.0
        for t in range(self.depth):
            center, others = self._shift_windows(i, js, t)
            eq = center[None, :, None] == others[:, None, :]
            newly = alive & ~eq
            if newly.any():
                out[newly] = v
            alive &= eq
            if not alive.any():
                break
            v *= 0.5
        return out  # survivors agree through the horizon: distance 0

    def _shift_aligned(self, i, js):
        n = self.n
        B = len(js)
        out = np.zeros((B, n))
        alive = np.ones((B, n), dtype=bool)
        v = 1.0
        for t in range(self.depth):
            center, others = self._shift_windows(i, js, t)
            eq = center[None, :] == others
            newly = alive & ~eq
            if newly.any():
                out[newly] = v
            alive &= eq
            if not alive.any():
                break
            v *= 0.5
        return out

    def _window_codes(self, m: int):
        """Per-index codes of the m-symbol windows, or None when they overflow.

        Two indices are within 2**-m of each other iff their codes match, so
        eligibility tests reduce to one integer comparison.
        """
        if m in self._code_cache:
            return self._code_cache[m]
        k = self.system.k
        if m * math.log2(k) > 62:
            codes = None
        else:
            n = self.n
            dtype = np.int32 if m * math.log2(k) <= 31 else np.int64
            codes = np.zeros((self.size, n), dtype=dtype)
            w = 1
            for t in range(m):
                codes += self.syms[:, t:t + n].astype(dtype) * w
                w *= k
        self._code_cache[m] = codes
        return codes

    def _shift_elig(self, i, js, thr, strict):
        n = self.n
        B = len(js)
        m = _block_len(thr, strict)
        if m is None:
            return np.zeros((B, n, n), dtype=bool)
        m = min(m, self.depth)
        codes = self._window_codes(m)
        if codes is not None:
            return codes[i][None, :, None] == codes[js][:, None, :]
        agree = np.ones((B, n, n), dtype=bool)
        for t in range(m):
            center, others = self._shift_windows(i, js, t)
            agree &= center[None, :, None] == others[:, None, :]
        return agree

    # -- public kernels -----------------------------------------------------

    def cost(self, i, js):
        """Cost tensor (len(js), n, n): d(T^s x_i, T^t x_j)."""
        js = np.asarray(js)
        if self.syms is not None:
            return self._shift_cost(i, js)
        return self._real_cost(i, js)

    def aligned(self, i, js):
        """Index-aligned distances (len(js), n): d(T^t x_i, T^t x_j)."""
        js = np.asarray(js)
        if self.syms is not None:
            return self._shift_aligned(i, js)
        return self._real_aligned(i, js)

    def elig(self, i, js, thr: float, strict: bool):
        """Boolean tensor of pairs within the threshold (< thr or <= thr)."""
        js = np.asarray(js)
        if self.syms is not None:
            return self._shift_elig(i, js, thr, strict)
        cost = self._real_cost(i, js)
        return (cost < thr) if strict else (cost <= thr)

    def cost_pair(self, i, j):
        return self.cost(i, np.array([j]))[0]

    # -- arbitrary pair batches (pairs_i[b] vs pairs_j[b]) -------------------

    def cost_pairs(self, pairs_i, pairs_j):
        """Cost tensors (B, n, n) for B independent index pairs."""
        I = np.asarray(pairs_i)
        J = np.asarray(pairs_j)
        n = self.n
        if self.syms is None:
            sys_ = self.system
            a = self.vals[I]                     # (B, n)
            b = self.vals[J]
            if sys_.metric == "union":
                out = np.empty((len(I), n, n))
                same = self.comps[I] == self.comps[J]
                for c in (0, 1):
                    rows = np.nonzero(same & (self.comps[I] == c))[0]
                    if rows.size:
                        out[rows] = sys_.sub[c]._dist_arrays(
                            a[rows][:, :, None], b[rows][:, None, :])
                out[~same] = 1.0
                return out
            return sys_._dist_arrays(a[:, :, None], b[:, None, :])
        B = len(I)
        out = np.zeros((B, n, n))
        alive = np.ones((B, n, n), dtype=bool)
        v = 1.0
        for t in range(self.depth):
            aw = self.syms[I][:, t:t + n]
            bw = self.syms[J][:, t:t + n]
            eq = aw[:, :, None] == bw[:, None, :]
            newly = alive & ~eq
            if newly.any():
                out[newly] = v
            alive &= eq
            if not alive.any():
                break
            v *= 0.5
        return out

    def _code_hist(self, m: int):
        """Histogram of window codes per point over the k**m code space."""
        key = ("hist", m)
        if key in self._code_cache:
            return self._code_cache[key]
        k = self.system.k
        if m * math.log2(k) > 10:  # cap the code-space size at 1024
            hist = None
        else:
            codes = self._window_codes(m)
            K = k ** m
            offsets = (np.arange(self.size, dtype=np.int64) * K)[:, None]
            flat = codes.astype(np.int64) + offsets
            hist = np.bincount(flat.ravel(), minlength=self.size * K)
            hist = hist.reshape(self.size, K).astype(np.int32)
        self._code_cache[key] = hist
        return hist

    def match_size_bound_pairs(self, pairs_i, pairs_j, thr: float,
                               strict: bool):
        """Cheap per-pair upper bound on the threshold-match size, or None.

        A match uses each index at most once, so its size is bounded by the
        number of indices on either side whose window code appears at all on
        the other side; code histograms turn that into one dot product.
        """
        if self.syms is None:
            return None
        m = _block_len(thr, strict)
        if m is None:
            return np.zeros(len(np.asarray(pairs_i)), dtype=np.int64)
        m = min(m, self.depth)
        hist = self._code_hist(m)
        if hist is None:
            return None
        I = np.asarray(pairs_i)
        J = np.asarray(pairs_j)
        pos = hist > 0
        rows = np.einsum("bk,bk->b", hist[I],
                         pos[J].astype(np.int32), dtype=np.int64)
        cols = np.einsum("bk,bk->b", hist[J],
                         pos[I].astype(np.int32), dtype=np.int64)
        return np.minimum(rows, cols)

    def rotation_member_fast(self, pairs_i, pairs_j, thr: float, strict: bool,
                             d_max: int):
        """Exact ordered-match ball test for rotations, no DP.

        For an isometry the pair distances depend only on the lag s - t, and
        every diagonal of the eligibility matrix is all-or-none.  An ordered
        match at lag l leaves at least |l| indices unmatched, so a defect
        budget of d_max admits a match iff some lag with |l| <= d_max is
        eligible (that lag alone already achieves defect |l|).
        """
        if not isinstance(self.system, Rotation):
            return None
        I = np.asarray(pairs_i)
        J = np.asarray(pairs_j)
        alpha = self.system.alpha
        window = np.arange(-d_max, d_max + 1)
        delta = self.vals[I, 0] - self.vals[J, 0]
        r = (delta[:, None] + window[None, :] * alpha) % 1.0
        d = np.minimum(r, 1.0 - r)
        elig = (d < thr) if strict else (d <= thr)
        return elig.any(axis=1)

    def elig_pairs(self, pairs_i, pairs_j, thr: float, strict: bool):
        """Threshold eligibility tensors (B, n, n) for B independent pairs."""
        I = np.asarray(pairs_i)
        J = np.asarray(pairs_j)
        if self.syms is None:
            cost = self.cost_pairs(I, J)
            return (cost < thr) if strict else (cost <= thr)
        n = self.n
        m = _block_len(thr, strict)
        if m is None:
            return np.zeros((len(I), n, n), dtype=bool)
        m = min(m, self.depth)
        codes = self._window_codes(m)
        if codes is not None:
            return codes[I][:, :, None] == codes[J][:, None, :]
        agree = np.ones((len(I), n, n), dtype=bool)
        for t in range(m):
            aw = self.syms[I][:, t:t + n]
            bw = self.syms[J][:, t:t + n]
            agree &= aw[:, :, None] == bw[:, None, :]
        return agree

    def aligned_pairs(self, pairs_i, pairs_j):
        """Index-aligned distance rows (B, n) for B independent index pairs."""
        I = np.asarray(pairs_i)
        J = np.asarray(pairs_j)
        n = self.n
        if self.syms is None:
            sys_ = self.system
            a = self.vals[I]
            b = self.vals[J]
            if sys_.metric == "union":
                out = np.empty((len(I), n))
                same = self.comps[I] == self.comps[J]
                for c in (0, 1):
                    rows = np.nonzero(same & (self.comps[I] == c))[0]
                    if rows.size:
                        out[rows] = sys_.sub[c]._dist_arrays(a[rows], b[rows])
                out[~same] = 1.0
                return out
            return sys_._dist_arrays(a, b)
        B = len(I)
        out = np.zeros((B, n))
        alive = np.ones((B, n), dtype=bool)
        v = 1.0
        for t in range(self.depth):
            aw = self.syms[I][:, t:t + n]
            bw = self.syms[J][:, t:t + n]
            eq = aw == bw
            newly = alive & ~eq
            if newly.any():
                out[newly] = v
            alive &= eq
            if not alive.any():
                break
            v *= 0.5
        return out


def _block_len(thr: float, strict: bool):
    """Smallest m with 2**-m (<|<=) thr; None when no distance qualifies."""
    if strict:
        if thr <= 0.0:
            return None
    elif thr < 0.0:
        return None
    m = 0
    v = 1.0
    while True:
        if (v < thr) if strict else (v <= thr):
            return m
        m += 1
        v *= 0.5
        if m > 1100:  # below any resolvable distance: require full agreement
            return 1 << 20


# ---------------------------------------------------------------------------
# construction and module-level operations


def _measure_dict(spec) -> dict:
    if isinstance(spec, dict):
        if "kind" not in spec:
            raise ConfigurationError("measure spec needs a 'kind'")
        return spec
    if isinstance(spec, str):
        name, _, arg = spec.partition(":")
        name = name.strip().lower()
        if name == "bernoulli":
            try:
                p = [float(x) for x in arg.split(",") if x != ""]
            except ValueError as e:
                raise ConfigurationError(f"bad bernoulli probabilities {arg!r}") from e
            return {"kind": "bernoulli", "p": p}
        if name in ("lebesgue", "arcsine", "orbit"):
            return {"kind": name}
        raise ConfigurationError(f"unknown measure spec {spec!r}")
    raise ConfigurationError(f"unknown measure spec {spec!r}")


def make_system(spec, n_max: int | None = None) -> System:
    """Build a system from a JSON-style dict (or pass a System through).

    ``n_max`` sets the default symbolic horizon (2*n_max + 32) when the
    dict leaves it out.
    """
    if isinstance(spec, System):
        return spec
    if not isinstance(spec, dict):
        raise ConfigurationError(f"system spec must be a dict, got {type(spec)}")
    kind = spec.get("kind")
    if kind == "full_shift":
        k = spec.get("k", 2)
        horizon = spec.get("horizon")
        if horizon is None:
            horizon = default_horizon(n_max if n_max is not None else 64)
        return FullShift(k, horizon)
    if kind == "rotation":
        if "alpha" not in spec:
            raise ConfigurationError("rotation spec needs 'alpha'")
        return Rotation(spec["alpha"])
    if kind == "doubling":
        return Doubling(spec.get("bits", DYADIC_BITS))
    if kind == "tent":
        return Tent(spec.get("bits", DYADIC_BITS))
    if kind == "logistic":
        return Logistic()
    if kind == "two_component":
        try:
            a, b = spec["a"], spec["b"]
        except KeyError as e:
            raise ConfigurationError("two_component spec needs 'a' and 'b'") from e
        return TwoComponent(make_system(a, n_max), make_system(b, n_max),
                            spec.get("weight_a", 0.5))
    raise ConfigurationError(f"unknown system kind {kind!r}")


def orbit(system: System, x, n: int) -> OrbitSegment:
    return system.orbit(x, n)


def sample_points(system: System, measure_spec, count: int, seed: int) -> EmpiricalMeasure:
    return system.sample_points(measure_spec, count, seed)


def pairwise_distance(system: System, p, q) -> float:
    return system.distance(system.point(p), system.point(q))


def itinerary(system: System, partition: Partition, x, n: int) -> np.ndarray:
    """Word of partition-cell indices along the length-n orbit of x."""
    seg = x if isinstance(x, OrbitSegment) else system.orbit(x, n)
    if seg.n < n:
        raise DomainError("orbit segment shorter than requested word")
    return _words_from_rows(system, partition, seg.row[None, :], n)[0]


def _words_from_rows(system, partition, rows, n) -> np.ndarray:
    """Vectorized itineraries: rows as produced by orbit_rows / OrbitSegment.row."""
    if partition.kind == "symbols":
        if not system.symbolic:
            raise DomainError("symbol partition needs a shift system")
        if partition.cells != system.k:
            raise DomainError("symbol partition cell count must equal alphabet size")
        return rows[:, :n].astype(np.int16)
    if system.symbolic:
        raise DomainError("interval bins need a real-valued system")
    if system.metric == "union":
        raise DomainError("interval bins are not defined on a two-component union")
    cells = partition.cells
    # left-closed bins [j/c, (j+1)/c); the right endpoint 1.0 joins the last bin
    w = np.floor(rows[:, :n] * cells).astype(np.int16)
    return np.minimum(w, cells - 1)


def itineraries(system: System, partition: Partition, measure: EmpiricalMeasure,
                n: int, idx=None) -> np.ndarray:
    """(P, n) words for a batch of sample points."""
    arr = system.orbit_rows(measure, n, idx)
    rows = arr.syms if arr.syms is not None else arr.vals
    return _words_from_rows(system, partition, rows, n)
