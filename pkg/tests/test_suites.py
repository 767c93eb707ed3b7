import pytest

from quasiflat.errors import BadSpec
from quasiflat.suites import SUITES, run_suite

SMALL = {
    "betas-sandwich": {"random_sets": 6},
    "pre-estimates": {"families": 8},
    "post-estimates": {"instances": 30},
    "ab-bound": {"instances": 30},
    "holder": {"maps": 8},
    "inradius": {"instances": 6},
    "whitney": {"sets": 2, "points": 40},
    "bflat": {"probes": 3, "alphas": [0.9], "snowflake_angles": [0.2]},
    "similarity": {},
}


def test_every_suite_has_a_small_run():
    assert set(SMALL) == set(SUITES)


@pytest.mark.parametrize("name", sorted(SMALL))
def test_small_suite_passes(name):
    res = run_suite(name, SMALL[name], seed=11)
    assert res.reports and res.instances > 0
    assert res.passed, res.worst
    assert res.name == name


def test_suites_are_deterministic():
    a = run_suite("ab-bound", {"instances": 20}, seed=2)
    b = run_suite("ab-bound", {"instances": 20}, seed=2)
    assert [r.to_json() for r in a.reports] == [r.to_json() for r in b.reports]


def test_unknown_suite():
    with pytest.raises(BadSpec):
        run_suite("nothing")


def test_sandwich_on_fixture_sets():
    res = run_suite("betas-sandwich", {"sets": [{"fixture": "line_set"}, {"fixture": "circle_set"}]})
    assert res.passed and res.instances == 2 * 3 * 3
