import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qddlab.errors import (AdjacentAxisError, InvalidOrder, OrderError,
                           SequenceSyntaxError)
from qddlab.precision import PrecisionContext
from qddlab.sequence import (SequenceLevel, SequenceSpec, compile_spec,
                             free_schedule, label_mul, parse, pulse_count,
                             qdd, total_normalized_time, udd, udd_fractions)

CTX = PrecisionContext(40)

_P = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def csc_sq(n):
    """Independent oracle: csc^2(pi/(2n+2)) at 50 digits via mpmath."""
    with mpmath.workdps(50):
        return mpmath.csc(mpmath.pi / (2 * n + 2)) ** 2


def rel_err_vs_oracle(value_mp, oracle_mpf):
    """Relative deviation of a CTX scalar from an mpmath oracle, in mpmath."""
    with mpmath.workdps(50):
        ours = mpmath.mpf(CTX.fmt(value_mp, 35))
        return float(abs(ours - oracle_mpf) / abs(oracle_mpf))


class TestFractions:
    def test_order_one(self):
        s = udd_fractions(1, CTX)
        assert [float(x) for x in s] == [1.0, 1.0]

    def test_order_two(self):
        s = udd_fractions(2, CTX)
        assert abs(s[1] - 2) <= 10 * CTX.eps
        assert float(s[0]) == 1.0 and float(s[2]) == 1.0

    def test_first_fraction_exactly_one(self):
        for n in (1, 2, 3, 7, 12):
            assert udd_fractions(n, CTX)[0] == CTX.real(1)

    @pytest.mark.parametrize("n", [1, 2, 7, 13, 24])
    def test_sum_identity(self, n):
        total = CTX.real(0)
        for x in udd_fractions(n, CTX):
            total = total + x
        assert rel_err_vs_oracle(total, csc_sq(n)) <= 1e-25

    def test_symmetric(self):
        s = udd_fractions(6, CTX)
        for a, b in zip(s, reversed(s)):
            assert abs(a - b) <= 10 * CTX.eps

    def test_invalid_order(self):
        with pytest.raises(InvalidOrder):
            udd_fractions(0, CTX)


class TestParse:
    def test_qdd(self):
        spec = parse("QDD(3,4)")
        assert spec.levels == (SequenceLevel("Z", 3), SequenceLevel("X", 4))

    def test_udd_case_insensitive(self):
        assert parse("UDD(x,5)").levels == (SequenceLevel("X", 5),)
        assert parse("udd(Z, 2)").levels == (SequenceLevel("Z", 2),)

    def test_nest_depth3(self):
        spec = parse("NEST(X:2, Z:2, X:2)")
        assert spec.depth == 3
        # outermost listed first in text; stored innermost first
        assert [lv.axis for lv in spec.levels] == ["X", "Z", "X"]

    def test_whitespace_insensitive(self):
        assert parse(" QDD( 3 , 4 ) ") == parse("QDD(3,4)")

    def test_syntax_error_position(self):
        with pytest.raises(SequenceSyntaxError) as err:
            parse("QDD(3;4)")
        assert err.value.position >= 4

    def test_adjacent_axis_rejected(self):
        with pytest.raises(AdjacentAxisError):
            parse("NEST(X:2, X:3)")

    def test_zero_order_rejected(self):
        with pytest.raises(OrderError):
            parse("QDD(0,2)")

    def test_unknown_head(self):
        with pytest.raises(SequenceSyntaxError):
            parse("CDD(2)")

    def test_depth_cap(self):
        with pytest.raises(OrderError):
            parse("NEST(X:1, Z:1, X:1, Z:1, X:1)")


@st.composite
def specs(draw):
    depth = draw(st.integers(1, 4))
    start = draw(st.sampled_from(["X", "Z"]))
    axes = [start if k % 2 == 0 else ("Z" if start == "X" else "X")
            for k in range(depth)]
    orders = draw(st.lists(st.integers(1, 6), min_size=depth, max_size=depth))
    return SequenceSpec(tuple(SequenceLevel(a, n) for a, n in zip(axes, orders)))


@given(specs())
@settings(max_examples=60, deadline=None)
def test_parse_print_roundtrip(spec):
    assert parse(spec.to_text()) == spec


@given(specs())
@settings(max_examples=30, deadline=None)
def test_delay_sum_identity(spec):
    schedule = compile_spec(spec)
    with mpmath.workdps(50):
        expected = mpmath.mpf(1)
        for lv in spec.levels:
            expected *= csc_sq(lv.order)
    assert rel_err_vs_oracle(schedule.total_time(CTX), expected) <= 1e-25
    assert rel_err_vs_oracle(
        total_normalized_time([lv.order for lv in spec.levels], CTX),
        expected) <= 1e-25


@given(st.sampled_from("IXYZ"), st.sampled_from("IXYZ"))
def test_label_mul_matches_matrices(a, b):
    got = _P[label_mul(a, b)]
    product = _P[a] @ _P[b]
    # equal up to a global phase
    idx = np.argmax(np.abs(product))
    phase = product.flat[idx] / got.flat[idx]
    assert abs(abs(phase) - 1) < 1e-12
    assert np.allclose(product, phase * got)


class TestCompile:
    def test_qdd11(self):
        schedule = compile_spec(qdd(1, 1))
        assert [e.pulse for e in schedule.events] == ["Z", "Y", "Z", "Y"]
        delays = schedule.delay_values(CTX)
        assert all(v == CTX.real(1) for v in delays)
        assert abs(schedule.total_time(CTX) - 4) <= 100 * CTX.eps

    def test_udd_z2(self):
        schedule = compile_spec(udd("Z", 2))
        assert [e.pulse for e in schedule.events] == ["Z", "Z", "I"]
        delays = schedule.delay_values(CTX)
        for v, expected in zip(delays, (1, 2, 1)):
            assert abs(v - expected) <= 10 * CTX.eps

    def test_qdd23_total_time(self):
        schedule = compile_spec(qdd(2, 3))
        with mpmath.workdps(50):
            expected = csc_sq(2) * csc_sq(3)
        assert rel_err_vs_oracle(schedule.total_time(CTX), expected) <= 1e-25

    def test_minimum_delay_is_exactly_one(self):
        for spec in (qdd(2, 3), qdd(4, 4), udd("X", 5)):
            schedule = compile_spec(spec)
            values = schedule.delay_values(CTX)
            assert min(values) == CTX.real(1)

    def test_deterministic(self):
        assert compile_spec(qdd(3, 4)) == compile_spec(qdd(3, 4))

    def test_checkpoints_odd_outer(self):
        schedule = compile_spec(qdd(1, 3))   # inner length 2, outer 3
        cps = schedule.checkpoints
        assert set(cps) == {1, 2, 3, 4, 5}
        for j in range(1, 5):
            assert cps[j].event == j * 2 - 1
            assert cps[j].after == "Z"       # odd inner order leaves a trailing Z
        assert cps[5].event == 7
        assert cps[5].after == schedule.events[7].pulse

    def test_checkpoints_even_outer_coincide(self):
        schedule = compile_spec(qdd(2, 4))
        cps = schedule.checkpoints
        assert set(cps) == {1, 2, 3, 4, 5, 6}
        assert cps[5] == cps[6]
        assert cps[5].event == len(schedule.events) - 1
        for j in range(1, 5):
            assert cps[j].after == "I"       # even inner order: no trailing pulse

    def test_no_checkpoints_at_other_depths(self):
        assert compile_spec(udd("Z", 3)).checkpoints == {}
        assert compile_spec(parse("NEST(X:1, Z:1, X:1)")).checkpoints == {}

    def test_free_schedule(self):
        schedule = free_schedule()
        assert schedule.pulse_count() == 0
        assert [float(v) for v in schedule.delay_values(CTX)] == [1.0]


def _enumerate_pulses(spec):
    """Independent pulse-count oracle: literal recursion, then merge by
    explicit 2x2 multiplication and count non-identity factors."""
    def expand(levels):
        axis, order = levels[-1].axis, levels[-1].order
        inner = expand(levels[:-1]) if len(levels) > 1 else None
        out = []     # alternating tokens: ("gap",) | ("pulse", axis)
        for j in range(1, order + 2):
            out.extend(inner if inner else [("gap",)])
            if j <= order:
                out.append(("pulse", axis))
        if order % 2 == 1:
            out.append(("pulse", axis))
        return out

    tokens = expand(list(spec.levels))
    merged = []
    for tok in tokens:
        if tok[0] == "gap":
            merged.append(None)
        else:
            if merged and merged[-1] is not None:
                merged[-1] = _P[tok[1]] @ merged[-1]
            else:
                merged.append(_P[tok[1]].copy())
    count = 0
    for m in merged:
        if m is None:
            continue
        # identity up to phase?
        if abs(abs(np.trace(m)) - 2) < 1e-9:
            continue
        count += 1
    return count


class TestPulseCount:
    def test_qdd11(self):
        assert pulse_count(qdd(1, 1)) == 4

    def test_udd_even(self):
        assert pulse_count(udd("Z", 4)) == 4
        assert pulse_count(udd("Z", 3)) == 4

    @pytest.mark.parametrize("n1,n2", [(1, 1), (2, 2), (1, 2), (2, 3), (3, 3)])
    def test_against_enumeration(self, n1, n2):
        assert pulse_count(qdd(n1, n2)) == _enumerate_pulses(qdd(n1, n2))


class TestExport:
    def test_json_shape(self):
        doc = json.loads(compile_spec(qdd(1, 2)).to_json())
        assert doc["sequence"] == "QDD(1,2)"
        assert len(doc["events"]) == 6
        first = doc["events"][0]
        assert first["pulse"] == "Z"
        assert first["delay_in_tau"].startswith("1.000000000000000000000000000")
        marked = [e for e in doc["events"] if "checkpoint" in e]
        assert [e["checkpoint"] for e in marked] == [1, 2, 3]
        assert set(doc["checkpoints"]) == {"1", "2", "3", "4"}

    def test_json_deterministic(self):
        a = compile_spec(qdd(2, 3)).to_json()
        b = compile_spec(qdd(2, 3)).to_json()
        assert a == b
