"""Grid classification of escaping behaviour under all short words.

A pixel is marked escaping-all only if its orbit escapes under every
enumerated word; one bounded word is a witness for non-escaping, and
the first such word (in enumeration order) is recorded per pixel.  The
vectorized kernel reproduces the scalar EscapeTracker decision exactly,
so scalar spot checks stay valid for whole grids.

Worker threads (SEMIDYN_THREADS) tile the seed array; per-pixel results
are independent, so thread count never changes output.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import expr as ex
from .numerics import (
    OP_ADD,
    OP_CONST,
    OP_EXP,
    OP_MUL,
    OP_NEG,
    OP_Z,
    OrbitParams,
    Tape,
    compile_tape,
)
from .semigroup import (
    DEFAULT_WORD_CAP,
    Semigroup,
    Word,
    enumerate_words,
    word_expr,
)

THREADS_ENV = "SEMIDYN_THREADS"
_PARALLEL_MIN_SEEDS = 4096


def thread_count() -> int:
    """Worker count from SEMIDYN_THREADS; defaults to 1, never below 1."""
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Pixel-center sampling of a closed rectangle in the plane.

    Row iy=0 sits at the bottom (im_min side); renderers flip rows so
    images come out with imaginary axis pointing up.
    """

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("grid rectangle must have positive extent")
        if self.nx < 0 or self.ny < 0:
            raise ValueError("grid resolution must be non-negative")

    @property
    def dx(self) -> float:
        return (self.re_max - self.re_min) / self.nx if self.nx else 0.0

    @property
    def dy(self) -> float:
        return (self.im_max - self.im_min) / self.ny if self.ny else 0.0

    @property
    def pixel_diagonal(self) -> float:
        return math.hypot(self.dx, self.dy)

    def centers(self) -> np.ndarray:
        xs = self.re_min + (np.arange(self.nx) + 0.5) * self.dx
        ys = self.im_min + (np.arange(self.ny) + 0.5) * self.dy
        return xs[np.newaxis, :] + 1j * ys[:, np.newaxis]

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.re_min, self.re_max, self.im_min, self.im_max,
                        self.nx * factor, self.ny * factor)

    def to_dict(self) -> dict:
        return {
            "re_min": self.re_min, "re_max": self.re_max,
            "im_min": self.im_min, "im_max": self.im_max,
            "nx": self.nx, "ny": self.ny,
        }


class PixelStatus(IntEnum):
    NON_ESCAPING = 0
    ESCAPING_ALL = 1
    INDETERMINATE = 2


# per-word orbit status codes inside kernels (uint8)
WORD_BOUNDED, WORD_ESCAPED, WORD_INDET = 0, 1, 2
_UNDECIDED = 255


def _run_tape_array(tape: Tape, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized tape run: (values, overflow mask).

    Any non-finite intermediate poisons the mask for that lane, matching
    the scalar runner which raises at the first non-finite op result.
    """
    stack: list = []
    overflow = np.zeros(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for op, arg in tape:
            if op == OP_Z:
                stack.append(z)
            elif op == OP_CONST:
                stack.append(arg)
            elif op == OP_ADD:
                b = stack.pop()
                r = np.add(stack.pop(), b)
                overflow |= ~np.isfinite(r)
                stack.append(r)
            elif op == OP_MUL:
                b = stack.pop()
                r = np.multiply(stack.pop(), b)
                overflow |= ~np.isfinite(r)
                stack.append(r)
            elif op == OP_NEG:
                stack.append(np.negative(stack.pop()))
            else:
                r = np.exp(stack.pop())
                overflow |= ~np.isfinite(r)
                stack.append(r)
    val = stack[0]
    if not isinstance(val, np.ndarray) or val.shape != z.shape:
        val = np.full(z.shape, val, dtype=np.complex128)
    elif val is z:
        val = z.copy()
    return val, overflow


def _classify_seeds_serial(
    tape: Tape, seeds: np.ndarray, params: OrbitParams
) -> tuple[np.ndarray, np.ndarray, int]:
    """Per-seed orbit statuses for one word; vector form of EscapeTracker."""
    n = seeds.size
    radius = params.escape_radius
    needed = params.confirm_count
    status = np.full(n, _UNDECIDED, np.uint8)
    escaped_at = np.full(n, -1, np.int32)
    chain = np.full(n, -1, np.int32)
    confirms = np.zeros(n, np.int32)
    prev_mod = np.zeros(n, np.float64)
    crossed = np.zeros(n, bool)
    z = np.ascontiguousarray(seeds, dtype=np.complex128).copy()
    overflow_count = 0

    def observe(lanes: np.ndarray, moduli: np.ndarray, step: int) -> None:
        cross = moduli > radius
        ch = chain[lanes]
        cont = cross & (ch >= 0) & (moduli >= prev_mod[lanes])
        fresh = cross & ~cont
        cf = confirms[lanes]
        cf = np.where(cont, cf + 1, cf)
        cf = np.where(fresh, 0, cf)
        ch = np.where(fresh, step, ch)
        ch = np.where(~cross, -1, ch)
        chain[lanes] = ch
        confirms[lanes] = cf
        prev_mod[lanes] = np.where(cross, moduli, prev_mod[lanes])
        crossed[lanes] |= cross
        esc = cross & (cf >= needed)
        hit = lanes[esc]
        status[hit] = WORD_ESCAPED
        escaped_at[hit] = ch[esc]

    observe(np.arange(n), np.abs(z), 0)
    active = np.flatnonzero(status == _UNDECIDED)
    for step in range(1, params.max_iter + 1):
        if active.size == 0:
            break
        vals, over = _run_tape_array(tape, z[active])
        if over.any():
            hit = active[over]
            overflow_count += hit.size
            status[hit] = WORD_ESCAPED
            escaped_at[hit] = np.where(chain[hit] >= 0, chain[hit], step)
            active = active[~over]
            vals = vals[~over]
        z[active] = vals
        observe(active, np.abs(vals), step)
        active = active[status[active] == _UNDECIDED]
    undecided = status == _UNDECIDED
    status[undecided & ~crossed] = WORD_BOUNDED
    status[undecided & crossed] = WORD_INDET
    return status, escaped_at, overflow_count


def classify_seeds(
    tape: Tape,
    seeds: np.ndarray,
    params: OrbitParams,
    threads: int | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Thread-tiled wrapper around the serial kernel (identical output)."""
    threads = thread_count() if threads is None else max(1, threads)
    flat = seeds.ravel()
    if threads == 1 or flat.size < _PARALLEL_MIN_SEEDS:
        return _classify_seeds_serial(tape, flat, params)
    chunks = np.array_split(np.arange(flat.size), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(
            lambda idx: _classify_seeds_serial(tape, flat[idx], params), chunks
        ))
    status = np.concatenate([p[0] for p in parts])
    escaped_at = np.concatenate([p[1] for p in parts])
    return status, escaped_at, sum(p[2] for p in parts)


@dataclass
class Classification:
    """Aggregate escape classification of a grid under a word family."""

    grid: GridSpec
    params: OrbitParams
    max_word_length: int
    words: list[Word]
    label: str
    status: np.ndarray = field(repr=False)  # (ny, nx) PixelStatus values
    witness: np.ndarray = field(repr=False)  # (ny, nx) word index or -1
    stats: dict = field(default_factory=dict)
    word_statuses: list[np.ndarray] | None = field(default=None, repr=False)

    def escaping_mask(self) -> np.ndarray:
        return self.status == PixelStatus.ESCAPING_ALL

    def counts(self) -> dict[str, int]:
        flat = self.status.ravel()
        return {
            "escaping": int(np.count_nonzero(flat == PixelStatus.ESCAPING_ALL)),
            "non_escaping": int(np.count_nonzero(flat == PixelStatus.NON_ESCAPING)),
            "indeterminate": int(np.count_nonzero(flat == PixelStatus.INDETERMINATE)),
        }


def _aggregate(
    grid: GridSpec,
    params: OrbitParams,
    max_word_length: int,
    words: list[Word],
    label: str,
    all_escaped: np.ndarray,
    witness: np.ndarray,
    overflow_per_word: list[int],
    word_statuses: list[np.ndarray] | None,
) -> Classification:
    npix = grid.nx * grid.ny
    status = np.full(npix, PixelStatus.INDETERMINATE, np.uint8)
    status[all_escaped] = PixelStatus.ESCAPING_ALL
    status[witness >= 0] = PixelStatus.NON_ESCAPING
    shape = (grid.ny, grid.nx)
    cls = Classification(
        grid=grid,
        params=params,
        max_word_length=max_word_length,
        words=words,
        label=label,
        status=status.reshape(shape),
        witness=witness.reshape(shape).astype(np.int32),
        word_statuses=word_statuses,
    )
    counts = cls.counts()
    counts["total"] = npix
    counts["escaping_fraction"] = counts["escaping"] / npix if npix else 0.0
    counts["overflow_escapes_per_word"] = overflow_per_word
    if npix:
        hist = np.bincount(witness[witness >= 0], minlength=len(words))
        counts["witness_histogram"] = hist.astype(int).tolist()
    else:
        counts["witness_histogram"] = [0] * len(words)
    cls.stats = counts
    return cls


def classify_grid(
    semigroup: Semigroup,
    grid: GridSpec,
    params: OrbitParams | None = None,
    max_word_length: int = 3,
    word_cap: int = DEFAULT_WORD_CAP,
    threads: int | None = None,
    keep_word_status: bool = False,
) -> Classification:
    """Classify every pixel under all words of length <= max_word_length.

    With keep_word_status the kernel runs every word over the full grid
    and retains per-word status planes; otherwise pixels that already
    hold a bounded witness are skipped for later words, which changes
    nothing in the aggregate (escaping-all is already ruled out and the
    first witness is already fixed).
    """
    params = params or OrbitParams()
    words = enumerate_words(semigroup.n_generators, max_word_length, word_cap)
    seeds = grid.centers().ravel()
    npix = seeds.size
    all_escaped = np.ones(npix, bool)
    witness = np.full(npix, -1, np.int32)
    overflow_per_word: list[int] = []
    word_statuses: list[np.ndarray] | None = [] if keep_word_status else None
    for wi, word in enumerate(words):
        tape = compile_tape(word_expr(semigroup, word))
        if keep_word_status:
            st, _, ovc = classify_seeds(tape, seeds, params, threads)
            word_statuses.append(st.reshape(grid.ny, grid.nx))
            bounded = st == WORD_BOUNDED
            witness[bounded & (witness < 0)] = wi
            all_escaped &= st == WORD_ESCAPED
        else:
            idx = np.flatnonzero(witness < 0)
            if idx.size == 0:
                overflow_per_word.append(0)
                continue
            st, _, ovc = classify_seeds(tape, seeds[idx], params, threads)
            bounded = st == WORD_BOUNDED
            witness[idx[bounded]] = wi
            all_escaped[idx[st != WORD_ESCAPED]] = False
        overflow_per_word.append(ovc)
    return _aggregate(grid, params, max_word_length, words, semigroup.label,
                      all_escaped, witness, overflow_per_word, word_statuses)


def classify_single(
    expr: ex.MapExpr,
    grid: GridSpec,
    params: OrbitParams | None = None,
    threads: int | None = None,
    label: str = "f",
) -> Classification:
    """Classification under a single map (the one-word special case)."""
    params = params or OrbitParams()
    tape = compile_tape(ex.normalize(expr))
    seeds = grid.centers().ravel()
    st, _, ovc = classify_seeds(tape, seeds, params, threads)
    witness = np.where(st == WORD_BOUNDED, 0, -1).astype(np.int32)
    return _aggregate(grid, params, 1, [(1,)], label,
                      st == WORD_ESCAPED, witness, [ovc], None)


# ---------------------------------------------------------------------------
# derived masks and containment

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], bool)


def julia_pixels(classification: Classification, mode: str = "closure") -> np.ndarray:
    """Boolean Julia-set approximation from the escaping mask.

    closure: escaping pixels plus any pixel 4-adjacent to one (the
    discrete closure of the escaping set; this is the Julia mask when
    the Julia set equals the closure of the escaping set, the
    bounded-type situation).  boundary: discrete topological boundary,
    closure minus 4-interior, for semigroups where only the boundary
    identity is available.  The outside of the window counts as
    non-escaping, and indeterminate pixels count as non-escaping in
    either mode.
    """
    from scipy import ndimage

    esc = classification.escaping_mask()
    if mode not in ("closure", "boundary"):
        raise ValueError(f"unknown julia mode {mode!r}")
    if esc.size == 0 or not esc.any():
        return np.zeros_like(esc)
    closure = ndimage.binary_dilation(esc, structure=_CROSS)
    if mode == "closure":
        return closure
    interior = ndimage.binary_erosion(esc, structure=_CROSS, border_value=0)
    return closure & ~interior


@dataclass(frozen=True)
class ContainmentReport:
    """Pixelwise check that inner escaping pixels also escape in outer."""

    inner_label: str
    outer_label: str
    pixels_checked: int
    hard_violations: int
    soft_violations: int
    first_violations: tuple[tuple[int, int], ...]  # (iy, ix), capped

    @property
    def ok(self) -> bool:
        return self.hard_violations == 0


def containment_check(
    inner: Classification, outer: Classification, max_listed: int = 32
) -> ContainmentReport:
    if inner.grid != outer.grid:
        raise ValueError("containment requires identical grids")
    if inner.params != outer.params:
        raise ValueError("containment requires identical orbit parameters")
    esc = inner.escaping_mask()
    hard = esc & (outer.status == PixelStatus.NON_ESCAPING)
    soft = esc & (outer.status == PixelStatus.INDETERMINATE)
    ys, xs = np.nonzero(hard)
    listed = tuple((int(y), int(x)) for y, x in zip(ys[:max_listed], xs[:max_listed]))
    return ContainmentReport(
        inner_label=inner.label,
        outer_label=outer.label,
        pixels_checked=int(esc.sum()),
        hard_violations=int(hard.sum()),
        soft_violations=int(soft.sum()),
        first_violations=listed,
    )


def interior_escaping_mask(escaping: np.ndarray) -> np.ndarray:
    """Escaping pixels whose 8-neighbourhood is entirely escaping.

    Frame pixels are never interior: the outside counts as non-escaping.
    """
    from scipy import ndimage

    if escaping.size == 0:
        return escaping.copy()
    return ndimage.binary_erosion(escaping, structure=np.ones((3, 3), bool),
                                  border_value=0)
