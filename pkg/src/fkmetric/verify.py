"""Randomized property suites over the built-in systems.

Each suite draws seeded samples, evaluates a family of inequalities that the
orbit metrics must satisfy, and reports violation counts.  The CLI ``verify``
command and the acceptance tests are thin wrappers around these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import exact_separated, exact_spanning
from .errors import DomainError
from .matching import assignment_total, exact_row_means, fk_values_batch
from .systems import OrbitArray, System, make_system

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

_PAIR_CHUNK = 512


def builtin_systems(n_max: int = 64) -> list:
    """(name, system, natural measure spec) for every built-in kind."""
    return [
        ("full_shift_2", make_system({"kind": "full_shift", "k": 2}, n_max),
         {"kind": "bernoulli", "p": [0.5, 0.5]}),
        ("rotation_golden", make_system({"kind": "rotation", "alpha": GOLDEN}),
         {"kind": "lebesgue"}),
        ("doubling", make_system({"kind": "doubling"}), {"kind": "lebesgue"}),
        ("tent", make_system({"kind": "tent"}), {"kind": "lebesgue"}),
        ("logistic", make_system({"kind": "logistic"}), {"kind": "arcsine"}),
        ("two_component", make_system(
            {"kind": "two_component", "a": {"kind": "rotation", "alpha": 0.0},
             "b": {"kind": "rotation", "alpha": 0.0}, "weight_a": 0.5}),
         {"kind": "lebesgue"}),
    ]


@dataclass
class CheckResult:
    label: str
    system: str
    n: int
    trials: int
    violations: int
    worst: float = 0.0   # largest margin by which a check failed (0 if none)


@dataclass
class VerifyReport:
    suite: str
    seed: int
    checks: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(c.violations for c in self.checks)

    def lines(self) -> list:
        out = [f"suite={self.suite} seed={self.seed}"]
        for c in self.checks:
            out.append(f"  check={c.label} system={c.system} n={c.n} "
                       f"trials={c.trials} violations={c.violations}")
        out.append(f"total violations={self.violations} "
                   f"{'PASS' if self.violations == 0 else 'FAIL'}")
        return out


def _tol(system: System) -> float:
    return 1e-9 * max(1.0, system.diameter)


def _pair_arrays(system, mspec, trials, n, seed):
    measure = system.sample_points(mspec, 2 * trials, seed)
    arr = system.orbit_rows(measure, n)
    return arr, np.arange(trials), np.arange(trials, 2 * trials)


def _count(report, label, name, n, bad: np.ndarray, margins=None):
    v = int(np.count_nonzero(bad))
    worst = float(np.max(margins[bad])) if (margins is not None and v) else 0.0
    report.checks.append(CheckResult(label, name, n, bad.size, v, worst))


def _batched_fk(arr, I, J, tol, ordered=True):
    out = np.empty(I.size)
    for s in range(0, I.size, _PAIR_CHUNK):
        out[s:s + _PAIR_CHUNK] = fk_values_batch(
            arr, I[s:s + _PAIR_CHUNK], J[s:s + _PAIR_CHUNK], tol, ordered)
    return out


def suite_lemma_chain(trials: int, seed: int,
                      n_values=(4, 16, 64)) -> VerifyReport:
    """fk <= sqrt(mean) + 2 tol and mean <= bowen, over random pairs."""
    report = VerifyReport("lemma-chain", seed)
    for name, system, mspec in builtin_systems(max(n_values)):
        tol = _tol(system)
        for n in n_values:
            arr, I, J = _pair_arrays(system, mspec, trials, n, seed)
            al = arr.aligned_pairs(I, J)
            bowen = al.max(axis=1)
            mean = exact_row_means(al)
            fk = _batched_fk(arr, I, J, tol)
            _count(report, "mean<=bowen", name, n, mean > bowen,
                   mean - bowen)
            m = fk - (np.sqrt(mean) + 2 * tol)
            _count(report, "fk<=sqrt(mean)", name, n, m > 0, m)
    return report


def suite_shift_bound(trials: int, seed: int,
                      n_values=(4, 16, 64)) -> VerifyReport:
    """fk(x, Tx) <= 1/n + 2 tol over random base points."""
    report = VerifyReport("shift-bound", seed)
    for name, system, mspec in builtin_systems(max(n_values) + 1):
        tol = _tol(system)
        measure = system.sample_points(mspec, trials, seed)
        for n in n_values:
            full = system.orbit_rows(measure, n + 1)
            if full.syms is not None:
                stack = np.vstack([full.syms[:, :-1], full.syms[:, 1:]])
                arr = OrbitArray(system, n, syms=stack)
            else:
                stack = np.vstack([full.vals[:, :n], full.vals[:, 1:n + 1]])
                comps = np.concatenate([full.comps, full.comps])
                arr = OrbitArray(system, n, vals=stack, comps=comps)
            I = np.arange(trials)
            fk = _batched_fk(arr, I, I + trials, tol)
            m = fk - (1.0 / n + 2 * tol)
            _count(report, "fk(x,Tx)<=1/n", name, n, m > 0, m)
    return report


def suite_order_free(trials: int, seed: int, n_values=(4, 16)) -> VerifyReport:
    """Order-free FK against the weak-mean value, both directions, plus
    order-free <= ordered."""
    report = VerifyReport("order-free-bounds", seed)
    for name, system, mspec in builtin_systems(max(n_values)):
        tol = _tol(system)
        diam = system.diameter
        for n in n_values:
            arr, I, J = _pair_arrays(system, mspec, trials, n, seed)
            fku = _batched_fk(arr, I, J, tol, ordered=False)
            fk = _batched_fk(arr, I, J, tol, ordered=True)
            cost = arr.cost_pairs(I, J)
            F = np.array([assignment_total(c) / n for c in cost])
            m1 = fku - (np.sqrt(F) + 2 * tol)
            _count(report, "fku<=sqrt(F)", name, n, m1 > 0, m1)
            m2 = F - (fku + 2 * tol) * (1.0 + diam)
            _count(report, "F<=(fku)(1+diam)", name, n, m2 > 0, m2)
            m3 = fku - (fk + 2 * tol)
            _count(report, "fku<=fk", name, n, m3 > 0, m3)
    return report


def suite_symmetry(trials: int, seed: int, n: int = 16) -> VerifyReport:
    """Exact swap symmetry of every pairwise metric."""
    report = VerifyReport("symmetry", seed)
    trials = min(trials, 64)
    for name, system, mspec in builtin_systems(n):
        tol = _tol(system)
        arr, I, J = _pair_arrays(system, mspec, trials, n, seed)
        a1 = arr.aligned_pairs(I, J)
        a2 = arr.aligned_pairs(J, I)
        _count(report, "aligned-symmetric", name, n,
               np.any(a1 != a2, axis=1))
        f1 = _batched_fk(arr, I, J, tol)
        f2 = _batched_fk(arr, J, I, tol)
        _count(report, "fk-symmetric", name, n, f1 != f2)
        u1 = _batched_fk(arr, I, J, tol, ordered=False)
        u2 = _batched_fk(arr, J, I, tol, ordered=False)
        _count(report, "fku-symmetric", name, n, u1 != u2)
        c12 = arr.cost_pairs(I, J)
        w1 = np.array([assignment_total(c) for c in c12])
        w2 = np.array([assignment_total(np.ascontiguousarray(c.T))
                       for c in c12])
        _count(report, "weakmean-symmetric", name, n, w1 != w2)
    return report


def suite_triangle(trials: int, seed: int, n: int = 16) -> VerifyReport:
    """Pseudo-triangle inequality for fk on random triples, within 4 tol."""
    report = VerifyReport("triangle", seed)
    trials = min(trials, 500)
    for name, system, mspec in builtin_systems(n):
        tol = _tol(system)
        measure = system.sample_points(mspec, 3 * trials, seed)
        arr = system.orbit_rows(measure, n)
        X = np.arange(trials)
        Y = X + trials
        Z = Y + trials
        dxz = _batched_fk(arr, X, Z, tol)
        dxy = _batched_fk(arr, X, Y, tol)
        dyz = _batched_fk(arr, Y, Z, tol)
        m = dxz - (dxy + dyz + 4 * tol)
        _count(report, "fk-triangle", name, n, m > 0, m)
    return report


def suite_sandwich(trials: int, seed: int, sample_size: int = 10,
                   n: int = 6) -> VerifyReport:
    """Exact optima: sp(eps) <= sr(eps) <= sp(eps/2), eps from the pair scale."""
    if sample_size > 12:
        raise DomainError("exact sandwich capped at 12 points")
    report = VerifyReport("sandwich", seed)
    trials = min(trials, 50)
    systems = builtin_systems(n)
    for t in range(trials):
        name, system, mspec = systems[t % len(systems)]
        tol = _tol(system)
        measure = system.sample_points(mspec, sample_size, seed + t)
        arr = system.orbit_rows(measure, n)
        I, J = np.triu_indices(sample_size, k=1)
        vals = _batched_fk(arr, I, J, tol)
        eps = float(np.quantile(vals[vals > 0], 0.4)) if np.any(vals > 0) else 0.25
        sp = exact_spanning(arr, "fk", eps).count
        sr = exact_separated(arr, "fk", eps).count
        sp_half = exact_spanning(arr, "fk", eps / 2).count
        sp_double = exact_spanning(arr, "fk", 2 * eps).count
        sr_double = exact_separated(arr, "fk", 2 * eps).count
        bad = np.array([not (sp <= sr <= sp_half)
                        or sp_double > sp or sr_double > sr])
        _count(report, "sp<=sr<=sp(eps/2)", name, n, bad)
    return report


SUITES = {
    "lemma-chain": suite_lemma_chain,
    "shift-bound": suite_shift_bound,
    "order-free-bounds": suite_order_free,
    "symmetry": suite_symmetry,
    "triangle": suite_triangle,
    "sandwich": suite_sandwich,
}


def run_suite(name: str, trials: int, seed: int) -> list:
    """Run one suite (or 'all'); returns a list of VerifyReport."""
    if name == "all":
        return [fn(trials, seed) for fn in SUITES.values()]
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; "
                          f"choose from {sorted(SUITES)} or 'all'")
    return [SUITES[name](trials, seed)]
