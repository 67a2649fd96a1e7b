"""Finitely generated semigroups of entire maps and their words.

A word (i1, ..., im) denotes the composition g_{i1} o g_{i2} o ... o
g_{im} with indices 1-based and the first index outermost.  Words are
enumerated by length, then lexicographically, which fixes the meaning
of "first witness" everywhere downstream.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import expr as ex
from .numerics import EvalOverflow, compile_tape, run_tape

Word = tuple[int, ...]

DEFAULT_WORD_CAP = 10_000
PERMUTABILITY_TOL = 1e-9
MIN_PERMUTABILITY_SAMPLES = 32


class WordCapExceeded(ValueError):
    """Enumerating all words up to the requested length would exceed the cap."""


class AllSamplesOverflowed(ArithmeticError):
    """Every permutability sample overflowed; the check is indeterminate."""


@dataclass
class Semigroup:
    generators: tuple[ex.MapExpr, ...]
    label: str = "S"
    normalized: tuple[ex.MapExpr, ...] = field(init=False, repr=False)

    def __post_init__(self):
        self.generators = tuple(self.generators)
        if not self.generators:
            raise ValueError("a semigroup needs at least one generator")
        normalized = []
        for k, g in enumerate(self.generators, start=1):
            ng = ex.normalize(g)
            if not any(isinstance(n, ex.Exp) for n in ex.iter_nodes(ng)):
                raise ValueError(f"generator {k} is not transcendental (no exp in expanded tree)")
            normalized.append(ng)
        self.normalized = tuple(normalized)

    @property
    def n_generators(self) -> int:
        return len(self.generators)


def count_words(n_generators: int, max_length: int) -> int:
    return sum(n_generators ** k for k in range(1, max_length + 1))


def enumerate_words(n_generators: int, max_length: int, cap: int = DEFAULT_WORD_CAP) -> list[Word]:
    """All words of length 1..max_length, ordered by length then lexicographically."""
    if n_generators < 1 or max_length < 1:
        raise ValueError("need n_generators >= 1 and max_length >= 1")
    total = count_words(n_generators, max_length)
    if total > cap:
        raise WordCapExceeded(f"{total} words of length <= {max_length} exceed the cap {cap}")
    out: list[Word] = []
    for length in range(1, max_length + 1):
        out.extend(itertools.product(range(1, n_generators + 1), repeat=length))
    return out


def word_expr(semigroup: Semigroup, word: Word, max_nodes: int = ex.MAX_NODES) -> ex.MapExpr:
    """Normalized expression for the word's composite map."""
    if not word:
        raise ValueError("empty word")
    gens = semigroup.normalized
    for idx in word:
        if not 1 <= idx <= len(gens):
            raise ValueError(f"word index {idx} out of range 1..{len(gens)}")
    result = gens[word[-1] - 1]
    for idx in reversed(word[:-1]):
        result = ex.compose(gens[idx - 1], result, max_nodes)
    return result


def word_label(word: Word) -> str:
    return "g" + ".g".join(str(i) for i in word)


def default_sample_points(side: int = 8, half_width: float = 2.0) -> list[complex]:
    """Pixel-center style grid on the square [-w, w]^2, row-major."""
    step = 2.0 * half_width / side
    pts = []
    for iy in range(side):
        y = -half_width + (iy + 0.5) * step
        for ix in range(side):
            x = -half_width + (ix + 0.5) * step
            pts.append(complex(x, y))
    return pts


@dataclass(frozen=True)
class PermutabilityResult:
    permutable: bool
    max_deviation: float
    samples_used: int
    samples_skipped: int
    tolerance: float


def permutability_check(
    f: ex.MapExpr,
    g: ex.MapExpr,
    samples: list[complex] | None = None,
    tol: float = PERMUTABILITY_TOL,
) -> PermutabilityResult:
    """Compare f o g and g o f pointwise on a finite sample set.

    Samples where either composite overflows are skipped; if every
    sample overflows the check cannot decide and AllSamplesOverflowed
    is raised.
    """
    pts = default_sample_points() if samples is None else list(samples)
    if len(pts) < MIN_PERMUTABILITY_SAMPLES:
        raise ValueError(f"need at least {MIN_PERMUTABILITY_SAMPLES} sample points")
    fg = compile_tape(ex.compose(f, g))
    gf = compile_tape(ex.compose(g, f))
    worst = 0.0
    used = skipped = 0
    for z in pts:
        try:
            a = run_tape(fg, z)
            b = run_tape(gf, z)
        except EvalOverflow:
            skipped += 1
            continue
        used += 1
        worst = max(worst, abs(a - b))
    if used == 0:
        raise AllSamplesOverflowed("no finite permutability samples")
    return PermutabilityResult(worst <= tol, worst, used, skipped, tol)


@dataclass(frozen=True)
class AbelianReport:
    abelian: bool
    pair_results: tuple[tuple[int, int, PermutabilityResult], ...]


def abelian_check(
    semigroup: Semigroup,
    samples: list[complex] | None = None,
    tol: float = PERMUTABILITY_TOL,
) -> AbelianReport:
    """Pairwise permutability of all generators (vacuously true for one)."""
    results = []
    ok = True
    gens = semigroup.normalized
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            r = permutability_check(gens[i], gens[j], samples, tol)
            results.append((i + 1, j + 1, r))
            ok = ok and r.permutable
    return AbelianReport(ok, tuple(results))
