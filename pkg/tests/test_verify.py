"""Test the invariant suite."""

import pytest

from fvlab.alphabet import Dist
from fvlab.verify import (
    MAX_DETAILS,
    CheckResult,
    check_entropy_cdf,
    check_guessing,
    check_kraft,
    check_one_bit_sequences,
    check_one_bit_types,
    check_oracle,
    check_sandwich,
    check_type_size_cdf,
    check_type_size_identity,
    full_codes,
    oracle_max_n,
    run_suite,
)


def test_check_result() -> None:
    """Test counting and the capped failure details."""
    result = CheckResult("demo")
    result.record(True)
    assert result.passed
    for i in range(MAX_DETAILS + 3):
        result.record(False, f"case {i}")
    assert result.checked == MAX_DETAILS + 4
    assert result.violations == MAX_DETAILS + 3
    assert len(result.details) == MAX_DETAILS
    assert result.as_row() == {
        "check": "demo",
        "checked": MAX_DETAILS + 4,
        "violations": MAX_DETAILS + 3,
        "passed": False,
    }


def test_full_codes() -> None:
    """Test that the interleaved code is only built for two symbols."""
    assert "interleave" in full_codes(3, Dist.uniform(2))
    assert set(full_codes(3, Dist.uniform(3))) == {
        "optimal",
        "type-size",
        "2s-fv",
        "2s-ff",
    }


@pytest.mark.parametrize(
    "check",
    [
        lambda: check_sandwich(20),
        lambda: check_oracle(4, count=6),
        lambda: check_type_size_identity(4, count=6),
        lambda: check_one_bit_sequences(6, p_values=(0.2, 0.5, 0.9)),
        lambda: check_one_bit_types(7, 20, p_values=(0.2, 0.5, 0.9)),
        lambda: check_guessing(4, count=4),
        lambda: check_kraft(count=20, max_n=4),
        lambda: check_entropy_cdf(ns=(50, 200)),
        lambda: check_type_size_cdf(ns=(50, 200)),
    ],
)
def test_small_checks(check) -> None:
    """Test that every check passes at a small scale."""
    result = check()
    assert result.checked > 0
    assert result.passed, result.details


@pytest.mark.slow
def test_run_suite() -> None:
    """Test the suite at its default scale."""
    results = run_suite()
    assert len(results) == 9
    assert all(result.passed for result in results)


def test_one_bit_types_reports_gap(monkeypatch) -> None:
    """Test that a gap of two bits is counted as a violation."""
    monkeypatch.setattr("fvlab.verify.one_bit_gap", lambda n, P, eps: (5, 3))
    result = check_one_bit_types(15, 16, p_values=(0.5,), eps_values=(0.1,))
    assert result.checked == 2
    assert result.violations == 2
    assert "5 > 3 + 1" in result.details[0]


def test_oracle_max_n() -> None:
    """Test the largest enumerable n per alphabet size."""
    assert oracle_max_n((2,)) == 19
    assert oracle_max_n() == 12
    assert oracle_max_n((2, 3, 4)) == 9


def test_run_suite_caps_oracle_scale(monkeypatch) -> None:
    """Test that max_n above the oracle limit is capped instead of failing."""
    seen = {}

    def stub(name):
        def check(*args, **kwargs):
            seen[name] = kwargs.get("max_n", args[0] if args else None)
            return CheckResult(name)

        return check

    for name in (
        "check_sandwich",
        "check_oracle",
        "check_type_size_identity",
        "check_one_bit_sequences",
        "check_one_bit_types",
        "check_guessing",
        "check_kraft",
        "check_entropy_cdf",
        "check_type_size_cdf",
    ):
        monkeypatch.setattr(f"fvlab.verify.{name}", stub(name))
    results = run_suite(max_n=50, sandwich_n=10, interleave_n=20)
    assert len(results) == 9
    for name in ("check_oracle", "check_type_size_identity", "check_guessing"):
        assert seen[name] == oracle_max_n()
    assert seen["check_kraft"] == oracle_max_n()
    assert seen["check_sandwich"] == 10
