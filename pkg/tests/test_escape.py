"""Grid classification: vector kernel vs scalar orbits, masks, containment."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from semidyn import expr as ex
from semidyn.escape import (
    GridSpec,
    PixelStatus,
    WORD_BOUNDED,
    WORD_ESCAPED,
    WORD_INDET,
    classify_grid,
    classify_seeds,
    classify_single,
    containment_check,
    interior_escaping_mask,
    julia_pixels,
)
from semidyn.numerics import OrbitParams, OrbitStatus, compile_tape, orbit
from semidyn.semigroup import Semigroup

MAPS = [
    "exp(z)",
    "exp(0.25*z)",
    "exp(0.35*z)",
    "exp(-z - 1) + 1",
    "exp(2*z + 1) - 0.5",
    "z*exp(z) + 1",
]

_CODE_TO_STATUS = {
    WORD_BOUNDED: OrbitStatus.BOUNDED,
    WORD_ESCAPED: OrbitStatus.ESCAPED,
    WORD_INDET: OrbitStatus.INDETERMINATE,
}


# ---------------------------------------------------------------------------
# grid geometry

def test_grid_centers_orientation():
    g = GridSpec(-1.0, 1.0, -1.0, 1.0, 2, 2)
    centers = g.centers()
    assert centers.shape == (2, 2)
    assert centers[0, 0] == complex(-0.5, -0.5)  # row 0 at im_min
    assert centers[1, 1] == complex(0.5, 0.5)
    assert g.dx == 1.0 and g.dy == 1.0
    assert g.pixel_diagonal == pytest.approx(np.hypot(1.0, 1.0))


def test_grid_refined():
    g = GridSpec(-4.0, 4.0, -2.0, 2.0, 64, 32)
    r = g.refined(2)
    assert (r.nx, r.ny) == (128, 64)
    assert (r.re_min, r.re_max, r.im_min, r.im_max) == (-4.0, 4.0, -2.0, 2.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(1.0, -1.0, 0.0, 1.0, 4, 4)
    with pytest.raises(ValueError):
        GridSpec(-1.0, 1.0, 0.0, 1.0, -4, 4)


# ---------------------------------------------------------------------------
# vector kernel vs scalar orbit

@given(
    st.sampled_from(MAPS),
    st.lists(
        st.complex_numbers(allow_nan=False, allow_infinity=False,
                           allow_subnormal=False, max_magnitude=30.0),
        min_size=1, max_size=24,
    ),
    st.sampled_from([OrbitParams(max_iter=60),
                     OrbitParams(max_iter=60, confirm_count=0),
                     OrbitParams(max_iter=60, escape_radius=1e6)]),
)
@settings(max_examples=120, deadline=None)
def test_vector_kernel_matches_scalar_orbits(src, seeds, params):
    tree = ex.parse(src)
    tape = compile_tape(ex.normalize(tree))
    arr = np.array(seeds, np.complex128)
    status, escaped_at, _ = classify_seeds(tape, arr, params)
    for k, seed in enumerate(seeds):
        rec = orbit(tree, seed, params)
        assert _CODE_TO_STATUS[status[k]] is rec.status, f"seed {seed}"
        want_at = rec.escaped_at if rec.escaped_at is not None else -1
        assert escaped_at[k] == want_at, f"seed {seed}"


def test_vector_kernel_matches_scalar_on_dense_line():
    # a real segment crossing the lam=0.35 repeller, where decisions flip
    tree = ex.parse("exp(0.35*z)")
    tape = compile_tape(ex.normalize(tree))
    seeds = np.linspace(3.5, 4.2, 141).astype(np.complex128)
    status, escaped_at, _ = classify_seeds(tape, seeds, OrbitParams())
    for k in range(seeds.size):
        rec = orbit(tree, seeds[k])
        assert _CODE_TO_STATUS[status[k]] is rec.status
        assert escaped_at[k] == (rec.escaped_at if rec.escaped_at is not None else -1)
    assert (status == WORD_ESCAPED).any()
    assert (status == WORD_BOUNDED).any()


def test_thread_tiling_changes_nothing():
    tree = ex.parse("exp(0.35*z)")
    tape = compile_tape(ex.normalize(tree))
    rng = np.random.default_rng(7)
    seeds = (rng.uniform(-4, 4, 5000) + 1j * rng.uniform(-4, 4, 5000))
    a = classify_seeds(tape, seeds, OrbitParams(), threads=1)
    b = classify_seeds(tape, seeds, OrbitParams(), threads=4)
    assert (a[0] == b[0]).all()
    assert (a[1] == b[1]).all()
    assert a[2] == b[2]


# ---------------------------------------------------------------------------
# grid classification semantics

def quarter_pair():
    f = ex.parse("exp(0.25*z)")
    return Semigroup((f, ex.iterate(f, 2)), label="pair")


def test_witness_skip_equals_full_run():
    s = Semigroup((ex.parse("exp(z)"), ex.parse("exp(0.25*z)")))
    grid = GridSpec(-3.0, 3.0, -3.0, 3.0, 24, 24)
    fast = classify_grid(s, grid)
    full = classify_grid(s, grid, keep_word_status=True)
    assert (fast.status == full.status).all()
    assert (fast.witness == full.witness).all()
    assert fast.stats["witness_histogram"] == full.stats["witness_histogram"]
    assert full.word_statuses is not None and len(full.word_statuses) == 14
    assert fast.word_statuses is None


def test_aggregate_statuses_and_witness_order():
    # exp(z) escapes to the right, exp(z/4) never escapes here: every
    # pixel is non-escaping, witnessed by whichever word bounds it first
    s = Semigroup((ex.parse("exp(z)"), ex.parse("exp(0.25*z)")))
    grid = GridSpec(2.0, 3.0, -0.5, 0.5, 8, 8)
    cls = classify_grid(s, grid)
    assert (cls.status == PixelStatus.NON_ESCAPING).all()
    rec = orbit(ex.parse("exp(z)"), complex(grid.centers()[0, 0]))
    if rec.status is OrbitStatus.ESCAPED:
        # word (1,) escaped, so the witness must be a later word
        assert cls.witness[0, 0] > 0


def test_escaping_all_requires_every_word():
    # single generator exp(z) on a real-axis strip (ny=1 centers the row
    # at im=0): real orbits grow monotonically, so escape is certain
    s = Semigroup((ex.parse("exp(z)"),))
    grid = GridSpec(4.0, 6.0, -0.25, 0.25, 6, 1)
    cls = classify_grid(s, grid)
    assert (cls.status == PixelStatus.ESCAPING_ALL).all()
    assert (cls.witness == -1).all()
    assert cls.stats["escaping_fraction"] == 1.0


def test_classify_single_matches_one_generator_grid():
    f = ex.parse("exp(0.35*z)")
    grid = GridSpec(3.0, 4.0, -0.1, 0.1, 16, 8)
    one = classify_single(f, grid, label="f")
    s = Semigroup((f,))
    via_words = classify_grid(s, grid, max_word_length=1)
    assert (one.status == via_words.status).all()


def test_empty_grid():
    cls = classify_single(ex.parse("exp(z)"), GridSpec(0.0, 1.0, 0.0, 1.0, 0, 0))
    assert cls.status.shape == (0, 0)
    assert cls.stats["total"] == 0
    assert cls.counts() == {"escaping": 0, "non_escaping": 0, "indeterminate": 0}


def test_indeterminate_counts_as_non_escaping_in_masks():
    s = Semigroup((ex.parse("exp(z)"),))
    grid = GridSpec(4.0, 6.0, -0.25, 0.25, 6, 1)
    cls = classify_grid(s, grid)
    assert cls.escaping_mask().all()
    cls.status[0, 0] = PixelStatus.INDETERMINATE
    assert not cls.escaping_mask()[0, 0]


# ---------------------------------------------------------------------------
# julia masks

def _fake_classification(mask):
    ny, nx = mask.shape
    grid = GridSpec(0.0, float(nx), 0.0, float(ny), nx, ny)
    status = np.where(mask, np.uint8(PixelStatus.ESCAPING_ALL),
                      np.uint8(PixelStatus.NON_ESCAPING))
    from semidyn.escape import Classification
    return Classification(
        grid=grid, params=OrbitParams(), max_word_length=1, words=[(1,)],
        label="synthetic", status=status,
        witness=np.where(mask, -1, 0).astype(np.int32),
    )


def test_julia_closure_of_lone_pixel_is_a_cross():
    mask = np.zeros((3, 3), bool)
    mask[1, 1] = True
    julia = julia_pixels(_fake_classification(mask), "closure")
    assert int(julia.sum()) == 5
    assert julia[1, 1] and julia[0, 1] and julia[2, 1] and julia[1, 0] and julia[1, 2]


def test_julia_boundary_hollows_out_solid_blocks():
    mask = np.zeros((7, 7), bool)
    mask[1:6, 1:6] = True
    closure = julia_pixels(_fake_classification(mask), "closure")
    boundary = julia_pixels(_fake_classification(mask), "boundary")
    assert closure.sum() > boundary.sum()
    assert not boundary[3, 3]  # deep interior removed
    assert boundary[1, 1]      # rim kept
    with pytest.raises(ValueError):
        julia_pixels(_fake_classification(mask), "skeleton")


def test_interior_escaping_mask_excludes_frame():
    full = np.ones((5, 5), bool)
    interior = interior_escaping_mask(full)
    assert int(interior.sum()) == 9
    assert interior[1:4, 1:4].all()
    assert not interior[0, :].any() and not interior[:, 0].any()


# ---------------------------------------------------------------------------
# containment

def test_containment_reflexive_and_violations():
    s = Semigroup((ex.parse("exp(z)"),))
    grid = GridSpec(3.0, 6.0, -0.5, 0.5, 12, 1)
    cls = classify_grid(s, grid)
    rep = containment_check(cls, cls)
    assert rep.ok and rep.hard_violations == 0 and rep.soft_violations == 0
    # flip one outer pixel to bounded to force a hard violation
    tampered = classify_grid(s, grid)
    iy, ix = np.argwhere(cls.escaping_mask())[0]
    tampered.status[iy, ix] = PixelStatus.NON_ESCAPING
    rep = containment_check(cls, tampered)
    assert rep.hard_violations == 1
    assert rep.first_violations[0] == (int(iy), int(ix))
    tampered.status[iy, ix] = PixelStatus.INDETERMINATE
    rep = containment_check(cls, tampered)
    assert rep.hard_violations == 0 and rep.soft_violations == 1
    assert rep.ok  # soft disagreements are reported, not failures


def test_containment_requires_same_frame():
    s = Semigroup((ex.parse("exp(z)"),))
    a = classify_grid(s, GridSpec(0.0, 1.0, 0.0, 1.0, 4, 4))
    b = classify_grid(s, GridSpec(0.0, 1.0, 0.0, 1.0, 8, 8))
    with pytest.raises(ValueError):
        containment_check(a, b)
    c = classify_grid(s, GridSpec(0.0, 1.0, 0.0, 1.0, 4, 4),
                      OrbitParams(max_iter=100))
    with pytest.raises(ValueError):
        containment_check(a, c)


def test_semigroup_escaping_contained_in_each_word():
    s = quarter_pair()
    grid = GridSpec(-2.0, 2.0, -2.0, 2.0, 16, 16)
    inner = classify_grid(s, grid)
    from semidyn.semigroup import enumerate_words, word_expr, word_label
    for word in enumerate_words(2, 2):
        outer = classify_single(word_expr(s, word), grid, label=word_label(word))
        assert containment_check(inner, outer).hard_violations == 0
