import numpy as np
import pytest

import fkmetric as fk
from fkmetric import DomainError, MetricKind, PairMetrics
from fkmetric.matching import (ball_membership_pairs, bipartite_match_size,
                               fk_values_batch, match_fraction,
                               ordered_match_size)
from fkmetric.systems import OrbitArray

from _oracles import (brute_assignment, brute_fk_value, brute_lcs,
                      brute_ordered_match, brute_unordered_match)


def _orbits(system, mspec, count, n, seed):
    measure = system.sample_points(mspec, count, seed)
    return [system.orbit(measure.point(i), n) for i in range(count)]


# ---------------------------------------------------------------------------
# worked examples


def test_bowen_mean_examples(doubling, rotation_half):
    ox = doubling.orbit(0.0, 2)
    oy = doubling.orbit(0.5, 2)
    assert fk.bowen_distance(ox, oy) == 0.5
    assert fk.mean_distance(ox, oy) == 0.25
    assert fk.bowen_distance(ox, ox) == 0.0
    assert fk.mean_distance(ox, ox) == 0.0
    # rotations are isometries: bowen distance equals the base distance
    for n in (1, 3, 9):
        ox = rotation_half.orbit(0.1, n)
        oy = rotation_half.orbit(0.35, n)
        assert fk.bowen_distance(ox, oy) == pytest.approx(0.25)


def test_ordered_match_example(rotation_half):
    ox = rotation_half.orbit(0.0, 2)
    oy = rotation_half.orbit(0.5, 2)
    m = fk.max_ordered_match(ox, oy, 0.1)
    assert m.size == 1
    mu = fk.max_unordered_match(ox, oy, 0.1)
    assert mu.size == 2
    assert fk.fk_distance(ox, oy) == pytest.approx(0.5, abs=1e-8)
    assert fk.fk_unordered_distance(ox, oy) == pytest.approx(0.0, abs=1e-8)


def test_full_match_above_diameter(shift2):
    ox = shift2.orbit(shift2.cyclic_point("0110"), 6)
    oy = shift2.orbit(shift2.cyclic_point("1001"), 6)
    m = fk.max_ordered_match(ox, oy, 1.5)
    assert m.size == 6
    assert match_fraction(ox, oy, 1.5) == 0.0


def test_threshold_validation(shift2):
    ox = shift2.orbit(shift2.cyclic_point("01"), 4)
    with pytest.raises(DomainError):
        fk.max_ordered_match(ox, ox, 0.0)
    with pytest.raises(DomainError):
        fk.fk_distance(ox, ox, tol=-1.0)


def test_length_mismatch(shift2):
    ox = shift2.orbit(shift2.cyclic_point("01"), 4)
    oy = shift2.orbit(shift2.cyclic_point("01"), 5)
    with pytest.raises(DomainError):
        fk.bowen_distance(ox, oy)


def test_fk_shift_pair(shift2):
    x = shift2.cyclic_point("01")
    y = shift2.cyclic_point("10")
    ox, oy = shift2.orbit(x, 4), shift2.orbit(y, 4)
    assert fk.fk_distance(ox, oy) == pytest.approx(0.25, abs=1e-8)
    assert fk.fk_distance(ox, oy, exact=True) == 0.25


def test_fk_identity(all_systems):
    for name, system, mspec in all_systems:
        seg = _orbits(system, mspec, 1, 8, seed=3)[0]
        assert fk.fk_distance(seg, seg) <= 2e-9, name
        assert fk.fk_unordered_distance(seg, seg) <= 2e-9, name
        assert fk.weak_mean_distance(seg, seg) == 0.0, name


def test_weak_mean_examples(rotation_half):
    ox = rotation_half.orbit(0.0, 2)
    oy = rotation_half.orbit(0.25, 2)
    assert fk.weak_mean_distance(ox, oy) == pytest.approx(0.25)
    ident = fk.make_system({"kind": "rotation", "alpha": 0.0})
    for n in (1, 2, 7):
        ox = ident.orbit(0.1, n)
        oy = ident.orbit(0.5, n)
        assert fk.weak_mean_distance(ox, oy) == pytest.approx(0.4)


def test_word_edit_examples():
    assert fk.word_edit_distance([0, 1, 0, 1], [0, 1, 0, 1]) == 0.0
    assert fk.word_edit_distance([0, 1, 0, 1], [1, 0, 1, 0]) == 0.25
    assert brute_lcs([0, 1, 0, 1], [1, 0, 1, 0]) == 3
    assert fk.word_edit_distance([0] * 6, [1] * 6) == 1.0
    with pytest.raises(DomainError):
        fk.word_edit_distance([0, 1], [0, 1, 0])


# ---------------------------------------------------------------------------
# oracle equivalence (small n; the full 200-trial runs live in acceptance)


def test_ordered_match_oracle(all_systems):
    rng = fk.derive_rng(7, "test-ordered-oracle")
    for name, system, mspec in all_systems[:3]:
        measure = system.sample_points(mspec, 20, seed=13)
        arr = system.orbit_rows(measure, 6)
        for _ in range(20):
            i, j = rng.integers(0, 20, 2)
            delta = float(rng.uniform(0.05, 1.0))
            elig = arr.elig_pairs([i], [j], delta, True)[0]
            assert ordered_match_size(elig) == brute_ordered_match(elig), name


def test_unordered_match_oracle(all_systems):
    rng = fk.derive_rng(7, "test-unordered-oracle")
    for name, system, mspec in all_systems[:3]:
        measure = system.sample_points(mspec, 20, seed=13)
        arr = system.orbit_rows(measure, 6)
        for _ in range(20):
            i, j = rng.integers(0, 20, 2)
            delta = float(rng.uniform(0.05, 1.0))
            elig = arr.elig_pairs([i], [j], delta, True)[0]
            assert bipartite_match_size(elig) == brute_unordered_match(elig), name


def test_assignment_oracle(all_systems):
    rng = fk.derive_rng(7, "test-assignment-oracle")
    for name, system, mspec in all_systems:
        measure = system.sample_points(mspec, 12, seed=13)
        arr = system.orbit_rows(measure, 6)
        for _ in range(10):
            i, j = rng.integers(0, 12, 2)
            cost = arr.cost_pair(i, j)
            got = fk.weak_mean_distance(
                system.orbit(measure.point(i), 6),
                system.orbit(measure.point(j), 6))
            assert got * 6 == pytest.approx(brute_assignment(cost), abs=1e-12)


def test_fk_exact_mode_against_oracle(shift2, doubling):
    rng = fk.derive_rng(3, "test-fk-exact")
    for system, mspec in ((shift2, "bernoulli:0.5,0.5"), (doubling, "lebesgue")):
        measure = system.sample_points(mspec, 10, seed=23)
        arr = system.orbit_rows(measure, 5)
        for _ in range(8):
            i, j = rng.integers(0, 10, 2)
            cost = arr.cost_pair(i, j)
            ox = system.orbit(measure.point(i), 5)
            oy = system.orbit(measure.point(j), 5)
            assert fk.fk_distance(ox, oy, exact=True) == pytest.approx(
                brute_fk_value(cost, 5, ordered=True), abs=1e-14)
            assert fk.fk_unordered_distance(ox, oy, exact=True) == pytest.approx(
                brute_fk_value(cost, 5, ordered=False), abs=1e-14)
            # bisection agrees with the exact scan within tolerance
            assert fk.fk_distance(ox, oy, tol=1e-10) == pytest.approx(
                fk.fk_distance(ox, oy, exact=True), abs=1e-9)


# ---------------------------------------------------------------------------
# structural invariants


def test_match_fraction_monotone_and_quantized(shift2):
    ox = shift2.orbit(shift2.cyclic_point("0110100110"), 10)
    oy = shift2.orbit(shift2.cyclic_point("1010010101"), 10)
    prev_o, prev_u = 1.0, 1.0
    for delta in (0.01, 0.05, 0.1, 0.3, 0.6, 1.1):
        fo = match_fraction(ox, oy, delta, ordered=True)
        fu = match_fraction(ox, oy, delta, ordered=False)
        assert fu <= fo
        assert fo <= prev_o and fu <= prev_u
        assert round(fo * 10) == pytest.approx(fo * 10)
        prev_o, prev_u = fo, fu


def test_unordered_at_least_ordered_500(shift2):
    rng = fk.derive_rng(41, "test-unordered-dominates")
    measure = shift2.sample_points("bernoulli:0.5,0.5", 100, seed=37)
    arr = shift2.orbit_rows(measure, 10)
    for _ in range(500):
        i, j = rng.integers(0, 100, 2)
        delta = float(rng.uniform(0.02, 1.1))
        elig = arr.elig_pairs([i], [j], delta, True)[0]
        assert bipartite_match_size(elig) >= ordered_match_size(elig)


def test_swap_symmetry_exact(all_systems):
    for name, system, mspec in all_systems:
        segs = _orbits(system, mspec, 6, 12, seed=9)
        for a in range(0, 6, 2):
            x, y = segs[a], segs[a + 1]
            assert fk.bowen_distance(x, y) == fk.bowen_distance(y, x)
            assert fk.mean_distance(x, y) == fk.mean_distance(y, x)
            assert fk.fk_distance(x, y) == fk.fk_distance(y, x)
            assert fk.fk_unordered_distance(x, y) == fk.fk_unordered_distance(y, x)
            assert fk.weak_mean_distance(x, y) == fk.weak_mean_distance(y, x)


def test_match_invariants(all_systems):
    for name, system, mspec in all_systems:
        segs = _orbits(system, mspec, 4, 10, seed=21)
        for delta in (0.05, 0.2, 0.6):
            m = fk.max_ordered_match(segs[0], segs[1], delta)
            m.validate(10)
            arr = OrbitArray.from_segments([segs[0], segs[1]])
            cost = arr.cost_pair(0, 1)
            assert all(cost[i, j] < delta for i, j in zip(m.domain, m.image))
            mu = fk.max_unordered_match(segs[0], segs[1], delta)
            mu.validate(10)
            assert mu.size >= m.size
            assert all(cost[i, j] < delta for i, j in zip(mu.domain, mu.image))


def test_ball_predicates_match_values(all_systems):
    # membership must agree with the bisected value away from the boundary
    tol = 1e-9
    for name, system, mspec in all_systems:
        measure = system.sample_points(mspec, 30, seed=29)
        arr = system.orbit_rows(measure, 9)
        I, J = np.triu_indices(30, k=1)
        vals = fk_values_batch(arr, I, J, tol)
        for eps in (0.11, 0.31):
            inside_strict = ball_membership_pairs(arr, I, J, "fk", eps, True)
            inside_loose = ball_membership_pairs(arr, I, J, "fk", eps, False)
            clear = np.abs(vals - eps) > 5 * tol
            expect = vals < eps
            assert np.array_equal(inside_strict[clear], expect[clear]), name
            assert np.array_equal(inside_loose[clear], expect[clear]), name
            # closed ball always contains the open one
            assert not np.any(inside_strict & ~inside_loose), name


def test_pair_metrics_consistency(shift2):
    ox = shift2.orbit(shift2.cyclic_point("01101"), 10)
    oy = shift2.orbit(shift2.cyclic_point("10011"), 10)
    pm = PairMetrics(ox, oy)
    assert pm.bowen() == fk.bowen_distance(ox, oy)
    assert pm.mean() == fk.mean_distance(ox, oy)
    assert pm.fk() == fk.fk_distance(ox, oy)
    assert pm.weak_mean() == fk.weak_mean_distance(ox, oy)
    assert pm.value(MetricKind.FK_UNORDERED) == fk.fk_unordered_distance(ox, oy)
    assert fk.metric_value(ox, oy, "weakmean") == pm.weak_mean()


def test_kind_parsing():
    assert MetricKind.parse("fk") is MetricKind.FK
    assert MetricKind.parse("weak-mean") is MetricKind.WEAK_MEAN
    assert MetricKind.parse("FKU") is MetricKind.FK_UNORDERED
    with pytest.raises(DomainError):
        MetricKind.parse("euclid")
