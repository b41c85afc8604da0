"""Acceptance table, one test per criterion.

Each test asserts the exact pass/fail pattern of its criterion rows. Four
checks are red by construction and stay red honestly; they are pinned in
EXPECTED_RED so a silent flip in either direction fails the suite and forces
the expectation to be re-examined.
"""

import pytest

from condux.acceptance import (
    CRITERIA,
    criterion_chua,
    criterion_fhn,
    criterion_hh,
    criterion_kapitza,
    criterion_observer,
    criterion_properties,
)

EXPECTED_RED = {
    ("kapitza", "band_entry_by_deadline"),
    ("chua", "unstable_below_threshold"),
    ("chua", "entrained_fundamental"),
    ("observer", "parameter_convergence"),
}


def _table(rows):
    lines = []
    for r in rows:
        mark = "pass" if r.passed else "FAIL"
        lines.append(f"  {r.criterion}/{r.name}: expected {r.expected}, "
                     f"observed {r.observed} (tol {r.tolerance}) -> {mark}")
        if r.note:
            lines.append(f"    note: {r.note}")
    return "\n".join(lines)


def _assert_pattern(rows):
    assert rows, "criterion produced no rows"
    wrong = [r for r in rows
             if r.passed == ((r.criterion, r.name) in EXPECTED_RED)]
    assert not wrong, (
        "rows off the pinned pass/fail pattern:\n" + _table(wrong)
        + "\nfull table:\n" + _table(rows)
    )


def test_criteria_registry_is_complete():
    assert tuple(CRITERIA) == ("kapitza", "fhn", "hh", "chua", "observer",
                               "properties")


def test_kapitza_criterion(kapitza_run):
    results, wall = kapitza_run
    _assert_pattern(criterion_kapitza(results=results, wall=wall))


def test_fhn_criterion(fhn_run):
    results, wall = fhn_run
    _assert_pattern(criterion_fhn(results=results, wall=wall))


def test_hh_criterion(hh_run):
    results, wall = hh_run
    _assert_pattern(criterion_hh(results=results, wall=wall))


def test_chua_criterion(chua_run):
    results, wall = chua_run
    _assert_pattern(criterion_chua(results=results, wall=wall))


def test_observer_criterion(observer_run):
    results, wall = observer_run
    _assert_pattern(criterion_observer(results=results, wall=wall))


def test_properties_criterion():
    _assert_pattern(criterion_properties())


def test_negative_control_threshold_shift(chua_run):
    # moving the stability threshold expectation to -0.10 must break the
    # stable-side probe: the loop is unstable at -0.099
    results, wall = chua_run
    rows = criterion_chua(threshold=-0.10, results=results, wall=wall)
    probe = [r for r in rows if r.name == "stable_above_threshold"]
    assert len(probe) == 1
    assert not probe[0].passed, _table(probe)
