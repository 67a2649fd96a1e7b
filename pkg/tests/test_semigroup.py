"""Word enumeration, word maps, permutability."""
import math

import pytest

import oracles
from semidyn import expr as ex
from semidyn.numerics import eval_at
from semidyn.semigroup import (
    AllSamplesOverflowed,
    Semigroup,
    WordCapExceeded,
    abelian_check,
    count_words,
    default_sample_points,
    enumerate_words,
    permutability_check,
    word_expr,
    word_label,
)


def pair_semigroup():
    return Semigroup(
        (ex.parse("exp(z) + 1"), ex.parse("exp(2*z)")),
        label="test-pair",
    )


def test_semigroup_requires_transcendental_generators():
    with pytest.raises(ValueError):
        Semigroup((ex.parse("2*z + 1"),))
    with pytest.raises(ValueError):
        Semigroup(())
    # exp of a constant folds away, so this one is affine in disguise
    with pytest.raises(ValueError):
        Semigroup((ex.parse("z + exp(1)"),))


def test_word_enumeration_order_and_count():
    words = enumerate_words(2, 3)
    assert len(words) == count_words(2, 3) == 14
    assert words[:6] == [(1,), (2,), (1, 1), (1, 2), (2, 1), (2, 2)]
    assert words[6:] == [(1, 1, 1), (1, 1, 2), (1, 2, 1), (1, 2, 2),
                         (2, 1, 1), (2, 1, 2), (2, 2, 1), (2, 2, 2)]
    assert len(enumerate_words(1, 3)) == 3


def test_word_cap():
    with pytest.raises(WordCapExceeded):
        enumerate_words(10, 5, cap=1000)
    with pytest.raises(ValueError):
        enumerate_words(0, 3)


def test_word_expr_applies_rightmost_first():
    s = pair_semigroup()
    w = word_expr(s, (1, 2))  # g1 o g2
    z = 0.3 + 0.1j
    by_hand = oracles.recursive_eval(
        ex.Compose(s.generators[0], s.generators[1]), z
    )
    assert eval_at(w, z) == by_hand
    # order matters
    other = word_expr(s, (2, 1))
    assert eval_at(other, z) != eval_at(w, z)


def test_word_expr_triple():
    s = pair_semigroup()
    w = word_expr(s, (2, 1, 1))
    z = 0.2j
    g1, g2 = s.generators
    want = oracles.recursive_eval(g2, oracles.recursive_eval(
        g1, oracles.recursive_eval(g1, z)))
    assert abs(eval_at(w, z) - want) == 0


def test_word_expr_validation():
    s = pair_semigroup()
    with pytest.raises(ValueError):
        word_expr(s, ())
    with pytest.raises(ValueError):
        word_expr(s, (3,))


def test_word_label():
    assert word_label((1,)) == "g1"
    assert word_label((2, 1, 2)) == "g2.g1.g2"


def test_default_sample_points():
    pts = default_sample_points()
    assert len(pts) == 64
    assert pts[0] == complex(-1.75, -1.75)
    assert pts[-1] == complex(1.75, 1.75)


# ---------------------------------------------------------------------------
# permutability

def test_map_permutes_with_its_own_iterate():
    f = ex.parse("exp(0.25*z)")
    g = ex.iterate(f, 2)
    result = permutability_check(f, g)
    assert result.permutable
    assert result.max_deviation == 0.0
    assert result.samples_used >= 32


def test_documented_pair_deviation_is_the_period():
    lam = 0.25
    f = ex.parse("exp(lam*z)", {"lam": lam})
    g = ex.parse("exp(lam*z) + p", {"lam": lam, "p": 2j * math.pi / lam})
    result = permutability_check(f, g)
    assert not result.permutable
    assert abs(result.max_deviation - oracles.EXHIBIT_DEVIATION) < 1e-9


def test_permutability_sample_floor():
    f = ex.parse("exp(z)")
    with pytest.raises(ValueError):
        permutability_check(f, f, samples=[0j] * 31)


def test_permutability_all_overflow():
    f = ex.parse("exp(z + 800)")
    with pytest.raises(AllSamplesOverflowed):
        permutability_check(f, f, samples=[complex(10, 0)] * 32)


def test_permutability_skips_overflow_samples():
    f = ex.parse("exp(z)")
    samples = [complex(0.1 * k, 0) for k in range(32)] + [complex(800, 0)]
    result = permutability_check(f, f, samples=samples)
    assert result.permutable
    assert result.samples_skipped == 1
    assert result.samples_used == 32


def test_abelian_check():
    f = ex.parse("exp(0.25*z)")
    s = Semigroup((f, ex.iterate(f, 2)))
    assert abelian_check(s).abelian
    s2 = Semigroup((ex.parse("exp(0.25*z)"),
                    ex.parse("exp(0.25*z) + 8*pi*1i")))
    report = abelian_check(s2)
    assert not report.abelian
    assert report.pair_results[0][:2] == (1, 2)
