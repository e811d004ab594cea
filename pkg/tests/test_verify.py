import pytest

from fkmetric import DomainError
from fkmetric.verify import SUITES, run_suite


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_suites_clean_at_small_scale(suite):
    reports = run_suite(suite, 25, seed=2)
    for rep in reports:
        assert rep.violations == 0, "\n".join(rep.lines())


def test_all_runs_every_suite():
    reports = run_suite("all", 5, seed=2)
    assert {r.suite for r in reports} == set(SUITES)


def test_unknown_suite():
    with pytest.raises(DomainError):
        run_suite("bogus", 5, seed=2)
