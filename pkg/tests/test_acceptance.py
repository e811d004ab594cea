"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Entropy-slope criteria
fit the log-count growth over the configured window n in [4, 8]: beyond
n ~ 8 the finite samples saturate (counts approach the sample size) and the
integer defect allowance of the threshold matchings kicks in at n >= 10 for
eps = 0.1, so the top half of the n-range no longer reflects the growth rate
the formulas describe.
"""

import math

import numpy as np
import pytest

import fkmetric as fk
from fkmetric import MetricKind, Partition, ScaleDescriptor
from fkmetric.cli import main as cli_main
from fkmetric.matching import bipartite_match_size, ordered_match_size
from fkmetric.verify import (builtin_systems, suite_lemma_chain,
                             suite_order_free, suite_sandwich,
                             suite_shift_bound)

from _oracles import (brute_assignment, brute_ordered_match,
                      brute_unordered_match)

LOG2 = math.log(2.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _report(num, name, ok, detail):
    line = f"ACCEPTANCE {num:>2} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def shift_sys():
    return fk.make_system({"kind": "full_shift", "k": 2}, n_max=64)


@pytest.fixture(scope="module")
def bernoulli_half_5000(shift_sys):
    return fk.sample_points(shift_sys, "bernoulli:0.5,0.5", 5000, 31)


@pytest.fixture(scope="module")
def katok_half_curve(shift_sys, bernoulli_half_5000):
    return fk.katok_entropy_curve(shift_sys, bernoulli_half_5000,
                                  range(4, 13), [0.1], "fk", fit_window=(4, 8))


def test_acceptance_01_oracle_equivalence(all_systems):
    rng = fk.derive_rng(101, "acceptance-oracles")
    trials_per_system = 34  # ~200 per oracle across the six systems
    checked = mismatches = 0
    for name, system, mspec in all_systems:
        measure = system.sample_points(mspec, 2 * trials_per_system, seed=55)
        arr8 = system.orbit_rows(measure, 8)
        arr7 = system.orbit_rows(measure, 7)
        for t in range(trials_per_system):
            i, j = t, trials_per_system + t
            delta = float(rng.uniform(0.02, 1.05)) * system.diameter
            elig8 = arr8.elig_pairs([i], [j], delta, True)[0]
            if ordered_match_size(elig8) != brute_ordered_match(elig8):
                mismatches += 1
            elig7 = arr7.elig_pairs([i], [j], delta, True)[0]
            if bipartite_match_size(elig7) != brute_unordered_match(elig7):
                mismatches += 1
            cost7 = arr7.cost_pairs([i], [j])[0]
            ours = fk.weak_mean_distance(system.orbit(measure.point(i), 7),
                                         system.orbit(measure.point(j), 7)) * 7
            if abs(ours - brute_assignment(cost7)) > 1e-12:
                mismatches += 1
            checked += 3
    _report(1, "oracle equivalence", mismatches == 0,
            f"{checked} comparisons, {mismatches} mismatches")


def test_acceptance_02_metric_chain():
    rep = suite_lemma_chain(1000, seed=401)
    _report(2, "fk<=sqrt(mean)<=..<=bowen chain", rep.violations == 0,
            f"1000 pairs x n in (4,16,64) x 6 systems, "
            f"{rep.violations} violations")


def test_acceptance_03_orbit_shift_bound():
    rep = suite_shift_bound(100, seed=402)
    _report(3, "fk(x,Tx) <= 1/n", rep.violations == 0,
            f"100 points x n in (4,16,64) x 6 systems, "
            f"{rep.violations} violations")


def test_acceptance_04_order_free_bounds():
    rep = suite_order_free(500, seed=403)
    _report(4, "order-free FK vs weak-mean bounds", rep.violations == 0,
            f"500 pairs x n in (4,16) x 6 systems, {rep.violations} violations")


def test_acceptance_05_exact_sandwich():
    rep = suite_sandwich(50, seed=404, sample_size=10)
    _report(5, "exact sp<=sr<=sp(eps/2)", rep.violations == 0,
            f"50 exhaustive trials, {rep.violations} violations")


def test_acceptance_06_topological_entropy(shift_sys):
    curve = fk.topological_entropy_curve(
        shift_sys, "bernoulli:0.5,0.5", 2000, range(4, 13), [0.1],
        MetricKind.FK, seed=20, fit_window=(4, 8))
    slope = curve.slopes[0.1]
    rotation = fk.make_system({"kind": "rotation", "alpha": GOLDEN})
    rcurve = fk.topological_entropy_curve(
        rotation, "lebesgue", 1000, range(4, 33, 4), [0.1],
        MetricKind.FK, seed=20, fit_window=(4, 32))
    rslope = rcurve.slopes[0.1]
    ok = 0.50 <= slope <= 0.80 and rslope <= 0.05
    _report(6, "topological entropy slopes", ok,
            f"2-shift slope {slope:.3f} in [0.50, 0.80]; "
            f"golden rotation slope {rslope:.3f} <= 0.05")


def test_acceptance_07_katok_formula(shift_sys, katok_half_curve):
    s_half = katok_half_curve.slopes[0.1]
    mu_q = fk.sample_points(shift_sys, "bernoulli:0.25,0.75", 5000, 31)
    curve_q = fk.katok_entropy_curve(shift_sys, mu_q, range(4, 13), [0.1],
                                     "fk", fit_window=(4, 8))
    s_q = curve_q.slopes[0.1]
    h_q = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))  # 0.5623 nats
    rotation = fk.make_system({"kind": "rotation", "alpha": GOLDEN})
    mu_r = fk.sample_points(rotation, "lebesgue", 5000, 31)
    curve_r = fk.katok_entropy_curve(rotation, mu_r, range(4, 13), [0.1],
                                     "fk", fit_window=(4, 8))
    s_r = curve_r.slopes[0.1]
    ok = (0.52 <= s_half <= 0.87
          and abs(s_q - h_q) <= 0.30 * h_q
          and s_r <= 0.05)
    _report(7, "Katok measure-entropy slopes", ok,
            f"b(1/2) {s_half:.3f} in [0.52, 0.87]; "
            f"b(1/4) {s_q:.3f} within 30% of {h_q:.4f}; "
            f"rotation {s_r:.3f} <= 0.05")


def test_acceptance_08_local_entropy(shift_sys):
    measure = fk.sample_points(shift_sys, "bernoulli:0.5,0.5", 50000, 8)
    bases = fk.sample_points(shift_sys, "bernoulli:0.5,0.5", 20, 1009)
    estimates = []
    flagged = 0
    for b in range(20):
        est = fk.brin_katok_local(shift_sys, measure, bases.point(b),
                                  [8, 10, 12, 14], [0.05])
        row = next(r for r in est.rows if r.n == 14 and r.delta == 0.05)
        if row.flagged:
            flagged += 1
        else:
            estimates.append(row.estimate)
    med = float(np.median(estimates)) if estimates else math.nan
    ok = bool(estimates) and abs(med - LOG2) <= 0.25 * LOG2
    _report(8, "local entropy at (n=14, delta=0.05)", ok,
            f"median {med:.4f} over {len(estimates)} unflagged bases "
            f"({flagged} zero-mass) vs log2 +- 25%")


def test_acceptance_09_weak_mean_contrast(shift_sys, katok_half_curve):
    measure = fk.sample_points(shift_sys, "bernoulli:0.5,0.5", 256, 31)
    counts = {}
    for n in (4, 8, 12, 16, 24, 32, 48, 64):
        counts[n] = fk.measure_spanning(shift_sys, measure, n, 0.1,
                                        "weakmean").count
    base = counts[4]
    bounded = max(counts.values()) <= 2 * base
    fk_counts = dict(katok_half_curve.counts(0.1))
    growth = fk_counts[12] >= 4 * fk_counts[4]
    _report(9, "weak-mean bounded vs FK growth", bounded and growth,
            f"weak-mean counts {sorted(counts.items())} stay within 2x of "
            f"n=4; FK {fk_counts[4]} -> {fk_counts[12]} (x"
            f"{fk_counts[12]/fk_counts[4]:.1f} >= 4)")


@pytest.fixture(scope="module")
def criterion_fractions(shift_sys):
    measure = fk.sample_points(shift_sys, "bernoulli:0.5,0.5", 2000, 17)
    out = {}
    for n in (8, 16, 24):
        rep = fk.katok_criterion_check(shift_sys, Partition("symbols", 2),
                                       measure, n, 0.2, 32, seed=5)
        out[n] = rep
    return out


def test_acceptance_10_criterion_verdicts(criterion_fractions):
    rotation = fk.make_system({"kind": "rotation", "alpha": GOLDEN})
    mu_r = fk.sample_points(rotation, "lebesgue", 2000, 17)
    rep_r = fk.katok_criterion_check(rotation, Partition("bins", 4), mu_r,
                                     64, 0.2, 32, seed=5)
    rep_s = criterion_fractions[16]
    ok = rep_r.passed and not rep_s.passed
    _report(10, "word-criterion verdicts", ok,
            f"rotation fraction {rep_r.achieved_fraction:.3f} >= 0.8 passes; "
            f"2-shift fraction {rep_s.achieved_fraction:.3f} < 0.8 fails")


def test_acceptance_10b_criterion_fraction_decline(criterion_fractions):
    fr = {n: criterion_fractions[n].achieved_fraction for n in (8, 16, 24)}
    ok = fr[8] > fr[16] > fr[24]
    _report(10, "2-shift best fraction declines over n=8,16,24", ok,
            f"fractions {fr[8]:.3f}, {fr[16]:.3f}, {fr[24]:.3f}; the integer "
            f"defect allowance floor(0.2*n)/n is 0.125, 0.1875, 0.1667, so "
            f"the n=16 ball is relatively the widest and the chain cannot "
            f"decrease monotonically")


def test_acceptance_11_ergodicity_probe():
    doubling = fk.make_system({"kind": "doubling"})
    measure = fk.sample_points(doubling, "lebesgue", 500, 9)
    rep = fk.ergodicity_probe(doubling, measure, 256, 200, seed=2)
    med_d = rep.quantiles["median"]
    union = fk.make_system(
        {"kind": "two_component", "a": {"kind": "rotation", "alpha": 0.0},
         "b": {"kind": "rotation", "alpha": 0.0}, "weight_a": 0.5})
    mu_u = fk.sample_points(union, "lebesgue", 500, 9)
    rep_u = fk.ergodicity_probe(union, mu_u, 64, 200, seed=2)
    med_u = rep_u.quantiles["median"]
    ok = med_d <= 0.05 and med_u >= 0.2
    _report(11, "ergodicity probe medians", ok,
            f"doubling median F_256 = {med_d:.4f} <= 0.05; "
            f"two-component median = {med_u:.4f} >= 0.2")


def test_acceptance_12_byte_identical_outputs(tmp_path):
    # every CSV/JSON writer, run twice with one seed, byte-compared
    commands = {
        "span.csv": ["span", "--system", "full_shift:2", "--measure",
                     "bernoulli:0.5,0.5", "--count", "400", "--n", "8",
                     "--eps", "0.1", "--kind", "fk", "--seed", "5"],
        "katok.csv": ["entropy-katok", "--system", "full_shift:2",
                      "--measure", "bernoulli:0.5,0.5", "--count", "400",
                      "--n-range", "4..8", "--eps", "0.1", "--seed", "7",
                      "--fit-window", "4..8"],
        "top.csv": ["entropy-top", "--system", "rotation:0.6180339887",
                    "--measure", "lebesgue", "--count", "300", "--n-range",
                    "4..16:4", "--eps", "0.1", "--seed", "3"],
        "bk.csv": ["entropy-brinkatok", "--system", "full_shift:2",
                   "--measure", "bernoulli:0.5,0.5", "--count", "4000",
                   "--n-range", "8..12:2", "--delta", "0.1", "--seed", "11"],
        "probe.csv": ["probe-ergodic", "--system", "doubling", "--measure",
                      "lebesgue", "--count", "200", "--n", "64", "--pairs",
                      "60", "--seed", "13"],
        "criterion.json": ["criterion", "--system", "full_shift:2",
                           "--measure", "bernoulli:0.5,0.5", "--count", "500",
                           "--partition", "symbols:2", "--n", "12", "--eps",
                           "0.2", "--candidates", "16", "--seed", "17"],
        "cx.csv": ["complexity", "--system", "rotation:0.6180339887",
                   "--measure", "lebesgue", "--count", "200", "--n-range",
                   "4..16:4", "--eps", "0.1", "--scale", "linear:1",
                   "--seed", "19"],
    }
    diffs = []
    for fname, argv in commands.items():
        a = tmp_path / ("a_" + fname)
        b = tmp_path / ("b_" + fname)
        assert cli_main(argv + ["--out", str(a)]) == 0
        assert cli_main(argv + ["--out", str(b)]) == 0
        if a.read_bytes() != b.read_bytes():
            diffs.append(fname)
    _report(12, "byte-identical reruns", not diffs,
            f"{len(commands)} commands x 2 runs, mismatches: {diffs or 'none'}")
