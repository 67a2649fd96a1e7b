"""Tape evaluation, dual derivatives, orbit iteration and escape logic."""
import cmath
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from semidyn import expr as ex
from semidyn.numerics import (
    EscapeTracker,
    EvalOverflow,
    OrbitParams,
    OrbitStatus,
    compile_tape,
    deriv_at,
    eval_at,
    orbit,
    run_tape,
    run_tape_dual,
)

CORPUS = [
    "exp(z)",
    "exp(0.25*z)",
    "exp(-z - 1) + 1",
    "exp(z - 1) - 1",
    "exp(2*z + 1) - 0.5",
    "-exp(0.35*z) + 2",
    "exp(exp(z))",
    "z*exp(z) + 1",
    "0.5*z + 1",
    "comp(exp(z), iter(exp(0.25*z), 2))",
]


# ---------------------------------------------------------------------------
# evaluation

def test_compile_rejects_structural_nodes():
    with pytest.raises(ValueError):
        compile_tape(ex.parse("comp(exp(z), z + 1)"))
    # eval_at normalizes first, so the same tree evaluates fine
    assert eval_at(ex.parse("comp(exp(z), z + 1)"), 0j) == cmath.exp(1)


def test_eval_matches_reference_on_corpus():
    points = [0j, 1 + 0j, -2 + 0.5j, 0.3 - 0.7j, 2j]
    for src in CORPUS:
        tree = ex.parse(src)
        for z in points:
            assert eval_at(tree, z) == oracles.recursive_eval(tree, z)


def test_eval_overflow_raises():
    with pytest.raises(EvalOverflow):
        eval_at(ex.parse("exp(z)"), 1000 + 0j)
    # overflow in an intermediate, even though exp(-inf) would recover
    with pytest.raises(EvalOverflow):
        eval_at(ex.parse("exp(-exp(z)*exp(z))"), 400 + 0j)


_tame = st.complex_numbers(allow_nan=False, allow_infinity=False,
                           allow_subnormal=False, max_magnitude=5.0)


@given(st.sampled_from(CORPUS), _tame)
@settings(max_examples=300, deadline=None)
def test_eval_agrees_with_checked_reference(src, z):
    tree = ex.parse(src)
    tape = compile_tape(ex.normalize(tree))
    try:
        expected = oracles.checked_eval(tree, z)
    except oracles._Overflow:
        with pytest.raises(EvalOverflow):
            run_tape(tape, z)
        return
    assert run_tape(tape, z) == expected


# ---------------------------------------------------------------------------
# derivatives

def test_dual_derivative_exact_chain_rule():
    f2 = ex.parse("iter(exp(z), 2)")
    z = 0.3 + 0.2j
    # (e^(e^z))' = e^(e^z + z)
    assert abs(deriv_at(f2, z) - cmath.exp(cmath.exp(z) + z)) < 1e-14


def test_dual_derivative_of_affine():
    assert deriv_at(ex.parse("2*z + 1"), 17j) == 2


@given(st.sampled_from(CORPUS), _tame)
@settings(max_examples=200, deadline=None)
def test_dual_derivative_matches_central_difference(src, z):
    tree = ex.parse(src)
    tape = compile_tape(ex.normalize(tree))
    try:
        value, der = run_tape_dual(tape, z)
    except EvalOverflow:
        return
    assume(abs(der) < 1e8)  # FD is meaningless when the slope explodes
    fd = oracles.central_difference(tree, z)
    assert abs(der - fd) <= 1e-5 * max(1.0, abs(der))


def test_value_and_dual_value_agree():
    for src in CORPUS:
        tape = compile_tape(ex.normalize(ex.parse(src)))
        v, _ = run_tape_dual(tape, 0.4 - 0.1j)
        assert v == run_tape(tape, 0.4 - 0.1j)


# ---------------------------------------------------------------------------
# escape tracker unit behavior

def _feed(moduli, params=OrbitParams()):
    t = EscapeTracker(params)
    for n, m in enumerate(moduli):
        t.observe(m, n)
        if t.decided:
            break
    return t.result()


def test_tracker_confirms_after_three_nondecreasing():
    status, at = _feed([1.0, 2e12, 3e12, 3e12, 4e12])
    assert status is OrbitStatus.ESCAPED and at == 1


def test_tracker_restarts_on_modulus_drop():
    status, at = _feed([1.0, 5e12, 4e12, 4.5e12, 5e12, 6e12])
    # drop at step 2 restarts the chain there; confirms at 3, 4, 5
    assert status is OrbitStatus.ESCAPED and at == 2


def test_tracker_resets_below_radius():
    status, at = _feed([2e12, 3e12, 0.5, 2e12, 1.0, 3.0])
    assert status is OrbitStatus.INDETERMINATE and at is None


def test_tracker_bounded_when_never_crossing():
    status, at = _feed([0.1, 0.7, 1e11, 5.0])
    assert status is OrbitStatus.BOUNDED and at is None


def test_tracker_crossing_at_seed():
    status, at = _feed([2e12, 2e12, 2e12, 2e12])
    assert status is OrbitStatus.ESCAPED and at == 0


def test_tracker_zero_confirm_count():
    params = OrbitParams(confirm_count=0)
    status, at = _feed([1.0, 2e12], params)
    assert status is OrbitStatus.ESCAPED and at == 1


def test_tracker_radius_is_strict():
    status, at = _feed([1e12, 1e12, 1e12, 1e12, 1e12])
    assert status is OrbitStatus.BOUNDED


def test_orbit_params_validation():
    with pytest.raises(ValueError):
        OrbitParams(max_iter=0)
    with pytest.raises(ValueError):
        OrbitParams(escape_radius=1.0)
    with pytest.raises(ValueError):
        OrbitParams(confirm_count=-1)


# ---------------------------------------------------------------------------
# orbits

def test_orbit_converges_to_fixed_point():
    rec = orbit(ex.parse("exp(0.25*z)"), 0j)
    assert rec.status is OrbitStatus.BOUNDED
    assert abs(rec.final - oracles.Q_QUARTER) < 1e-9
    assert rec.last_step < 1e-9
    assert rec.iterates[0] == 0j and rec.iterates[1] == 1 + 0j


def test_orbit_escapes():
    rec = orbit(ex.parse("exp(z)"), 1 + 0j)
    assert rec.status is OrbitStatus.ESCAPED
    rec = orbit(ex.parse("exp(z)"), -100 + 0j)  # dips toward 0 first
    assert rec.status is OrbitStatus.ESCAPED


def test_orbit_overflow_attribution():
    # e^709 is finite and crosses the radius; the next step overflows,
    # so the escape is attributed to the pending crossing
    rec = orbit(ex.parse("exp(z)"), 709 + 0j)
    assert rec.status is OrbitStatus.ESCAPED
    assert rec.overflow_at == 2 and rec.escaped_at == 1
    # e^710 overflows immediately with no crossing pending
    rec = orbit(ex.parse("exp(z)"), 710 + 0j)
    assert rec.overflow_at == 1 and rec.escaped_at == 1


def test_orbit_indeterminate_slow_decay():
    # affine shrink from far outside the radius: crossings never confirm
    rec = orbit(ex.parse("0.5*z"), 4e12 + 0j, OrbitParams(max_iter=50))
    assert rec.status is OrbitStatus.INDETERMINATE


def test_orbit_stops_at_decision():
    rec = orbit(ex.parse("exp(z)"), 5 + 0j)
    assert rec.escaped_at is not None
    assert len(rec.iterates) <= rec.params.max_iter + 1


_seeds = st.complex_numbers(allow_nan=False, allow_infinity=False,
                            allow_subnormal=False, max_magnitude=50.0)


@given(st.sampled_from(CORPUS), _seeds)
@settings(max_examples=300, deadline=None)
def test_orbit_matches_reference_decision(src, seed):
    tree = ex.parse(src)
    rec = orbit(tree, seed)
    want_status, want_at = oracles.naive_escape(tree, seed)
    got = {OrbitStatus.ESCAPED: "escaped", OrbitStatus.BOUNDED: "bounded",
           OrbitStatus.INDETERMINATE: "indeterminate"}[rec.status]
    assert got == want_status
    assert rec.escaped_at == want_at


@given(st.sampled_from(CORPUS), _seeds)
@settings(max_examples=150, deadline=None)
def test_escape_decision_stable_under_larger_budget(src, seed):
    tree = ex.parse(src)
    short = orbit(tree, seed, OrbitParams(max_iter=40))
    if short.status is OrbitStatus.ESCAPED:
        full = orbit(tree, seed, OrbitParams(max_iter=200))
        assert full.status is OrbitStatus.ESCAPED
        assert full.escaped_at == short.escaped_at
