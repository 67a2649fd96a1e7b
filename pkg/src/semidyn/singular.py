"""Singular values, post-singular clouds, and hyperbolicity evidence.

For the supported grammar every map decomposes as T = alpha*exp(W) +
delta with W either affine (the primitive case: the only finite
singular value is the asymptotic value delta, exactly) or again of the
same shape.  In the nested case the returned set

    {delta} union {alpha*exp(s) + delta : s in SV(W)}

contains the true singular set because singular values of a composition
lie among the outer map's singular values and the outer image of the
inner ones; such results are flagged as over-approximations.

A hyperbolic verdict here is evidence, not proof: the cloud is a
truncation of the post-singular set and the Julia mask is a pixel
approximation, so verdict names say "evidence" and reports carry every
truncation parameter.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import expr as ex
from .escape import Classification, GridSpec, classify_grid, julia_pixels
from .numerics import EvalOverflow, OrbitParams, OrbitRecord, OrbitStatus, compile_tape, orbit, run_tape
from .semigroup import DEFAULT_WORD_CAP, Semigroup, Word, enumerate_words, word_expr

DEDUP_TOL = 1e-12
LIMIT_DEDUP_TOL = 1e-8
CONVERGENCE_TOL = 1e-9
DEFAULT_CLOUD_DEPTH = 50
DEFAULT_SEPARATION_PIXELS = 2.0


class UnsupportedExpression(ValueError):
    """The map does not decompose into the supported exp-affine grammar."""


def dedup_points(points, tol: float = DEDUP_TOL) -> tuple[complex, ...]:
    """Order-preserving dedup; later points within tol of a kept one drop."""
    kept: list[complex] = []
    for p in points:
        if all(abs(p - q) > tol for q in kept):
            kept.append(p)
    return tuple(kept)


@dataclass(frozen=True)
class SingularSet:
    points: tuple[complex, ...]
    provenance: tuple[str, ...]  # parallel to points: "asymptotic" | "propagated"
    over_approximation: bool

    def __post_init__(self):
        if len(self.points) != len(self.provenance):
            raise ValueError("provenance must parallel points")


def _constant_value(t: ex.MapExpr) -> complex | None:
    """Value of a z-free normalized subtree, None when z occurs."""
    if ex.contains_variable(t):
        return None
    try:
        return run_tape(compile_tape(t), 0j)
    except EvalOverflow:
        raise UnsupportedExpression("constant subtree overflows") from None


def _affine_coeffs(t: ex.MapExpr) -> tuple[complex, complex] | None:
    """(a, b) with t == a*z + b, or None when t is not affine in z."""
    cv = _constant_value(t)
    if cv is not None:
        return 0j, cv
    if isinstance(t, ex.Variable):
        return 1 + 0j, 0j
    if isinstance(t, ex.Sum):
        left = _affine_coeffs(t.left)
        right = _affine_coeffs(t.right)
        if left is None or right is None:
            return None
        return left[0] + right[0], left[1] + right[1]
    if isinstance(t, ex.Product):
        lc = _constant_value(t.left)
        rc = _constant_value(t.right)
        if lc is None and rc is None:
            return None
        c, side = (lc, t.right) if lc is not None else (rc, t.left)
        inner = _affine_coeffs(side)
        if inner is None:
            return None
        return c * inner[0], c * inner[1]
    if isinstance(t, ex.Negate):
        inner = _affine_coeffs(t.child)
        return None if inner is None else (-inner[0], -inner[1])
    return None


def _exp_affine_parts(t: ex.MapExpr) -> tuple[complex, complex, ex.MapExpr] | None:
    """(alpha, delta, W) with t == alpha*exp(W) + delta and z inside W."""
    if isinstance(t, ex.Exp):
        return 1 + 0j, 0j, t.child
    if isinstance(t, ex.Sum):
        zl = ex.contains_variable(t.left)
        zr = ex.contains_variable(t.right)
        if zl == zr:
            return None
        side, rest = (t.left, t.right) if zl else (t.right, t.left)
        parts = _exp_affine_parts(side)
        if parts is None:
            return None
        shift = _constant_value(rest)
        return parts[0], parts[1] + shift, parts[2]
    if isinstance(t, ex.Product):
        zl = ex.contains_variable(t.left)
        zr = ex.contains_variable(t.right)
        if zl == zr:
            return None
        side, rest = (t.left, t.right) if zl else (t.right, t.left)
        parts = _exp_affine_parts(side)
        if parts is None:
            return None
        scale = _constant_value(rest)
        if scale == 0:
            return None
        return parts[0] * scale, parts[1] * scale, parts[2]
    if isinstance(t, ex.Negate):
        parts = _exp_affine_parts(t.child)
        return None if parts is None else (-parts[0], -parts[1], parts[2])
    return None


def singular_values(expr: ex.MapExpr) -> SingularSet:
    """Finite singular values (critical plus asymptotic) of the map.

    Exact for affine maps (empty) and single-exponential maps (just the
    asymptotic value); an over-approximation for nested exponentials.
    Raises UnsupportedExpression outside the recognized grammar, e.g.
    z + exp(z) or exp(z)*exp(-z).
    """
    return _sv(ex.normalize(expr))


def _sv(t: ex.MapExpr) -> SingularSet:
    affine = _affine_coeffs(t)
    if affine is not None:
        if affine[0] == 0:
            raise UnsupportedExpression("map is constant")
        return SingularSet((), (), over_approximation=False)
    parts = _exp_affine_parts(t)
    if parts is None:
        raise UnsupportedExpression(
            "map is not affine over a single exp subtree"
        )
    alpha, delta, inner = parts
    inner_affine = _affine_coeffs(inner)
    if inner_affine is not None:
        if inner_affine[0] == 0:
            raise UnsupportedExpression("map is constant")
        return SingularSet((delta,), ("asymptotic",), over_approximation=False)
    inner_sv = _sv(inner)
    points = [delta]
    provenance = ["asymptotic"]
    for s in inner_sv.points:
        try:
            image = alpha * cmath.exp(s) + delta
        except OverflowError:
            raise UnsupportedExpression("singular value propagation overflowed") from None
        if not cmath.isfinite(image):
            raise UnsupportedExpression("singular value propagation overflowed")
        points.append(image)
        provenance.append("propagated")
    kept = dedup_points(points)
    kept_prov = []
    for p in kept:
        i = next(i for i, q in enumerate(points) if abs(p - q) <= DEDUP_TOL)
        kept_prov.append(provenance[i])
    return SingularSet(kept, tuple(kept_prov), over_approximation=True)


def sample_asymptotic_values(
    expr: ex.MapExpr,
    n_directions: int = 16,
    radii: tuple[float, ...] = (10.0, 20.0, 40.0, 80.0, 160.0, 320.0),
    rel_tol: float = 1e-8,
) -> list[tuple[float, complex]]:
    """Finite limits detected along radial rays, as (angle, value) pairs.

    A ray contributes when successive values converge geometrically
    (each gap at most half the previous) down to rel_tol; rays that
    overflow or oscillate are skipped.  Detected values approximate
    asymptotic values and are independent of the structural calculus,
    so they can cross-check singular_values.
    """
    tape = compile_tape(ex.normalize(expr))
    found: list[tuple[float, complex]] = []
    for j in range(n_directions):
        theta = 2.0 * math.pi * j / n_directions
        direction = cmath.exp(1j * theta)
        try:
            vals = [run_tape(tape, r * direction) for r in radii]
        except EvalOverflow:
            continue
        gaps = [abs(b - a) for a, b in zip(vals, vals[1:])]
        shrinking = all(b <= 0.5 * a for a, b in zip(gaps, gaps[1:]))
        if shrinking and gaps[-1] <= rel_tol * (1.0 + abs(vals[-1])):
            found.append((theta, vals[-1]))
    return found


# ---------------------------------------------------------------------------
# post-singular cloud

class CloudVerdict(Enum):
    BOUNDED = "bounded"
    DIVERGENCE_DETECTED = "divergence-detected"
    INDETERMINATE = "indeterminate"


@dataclass
class CloudOrbit:
    word: Word
    start: complex
    provenance: str
    record: OrbitRecord

    @property
    def converged(self) -> bool:
        return (self.record.status is OrbitStatus.BOUNDED
                and self.record.last_step < CONVERGENCE_TOL)


@dataclass
class PostSingularCloud:
    """Truncated forward orbit of every word's singular values."""

    points: tuple[complex, ...]
    limit_points: tuple[complex, ...]
    verdict: CloudVerdict
    radius: float
    depth: int
    max_word_length: int
    orbits: list[CloudOrbit]
    over_approximation: bool


def post_singular_cloud(
    semigroup: Semigroup,
    max_word_length: int = 3,
    depth: int = DEFAULT_CLOUD_DEPTH,
    params: OrbitParams | None = None,
    word_cap: int = DEFAULT_WORD_CAP,
) -> PostSingularCloud:
    """Orbits of SV(f_w) under f_w for every word w, with a verdict.

    Bounded requires every orbit to stay within budget and settle (last
    step below the convergence tolerance); any escape is divergence
    evidence; anything else is indeterminate.
    """
    base = params or OrbitParams()
    oparams = replace(base, max_iter=depth)
    words = enumerate_words(semigroup.n_generators, max_word_length, word_cap)
    orbits: list[CloudOrbit] = []
    over = False
    for word in words:
        fw = word_expr(semigroup, word)
        sv = singular_values(fw)
        over = over or sv.over_approximation
        for s, prov in zip(sv.points, sv.provenance):
            rec = orbit(fw, s, oparams)
            orbits.append(CloudOrbit(word, s, prov, rec))
    all_points = [pt for co in orbits for pt in co.record.iterates]
    points = dedup_points(all_points)
    if any(co.record.status is OrbitStatus.ESCAPED for co in orbits):
        verdict = CloudVerdict.DIVERGENCE_DETECTED
    elif all(co.converged for co in orbits):
        verdict = CloudVerdict.BOUNDED
    else:
        verdict = CloudVerdict.INDETERMINATE
    limits = dedup_points(
        [co.record.final for co in orbits if co.converged], LIMIT_DEDUP_TOL
    )
    radius = max((abs(p) for p in points), default=0.0)
    return PostSingularCloud(
        points=points,
        limit_points=limits,
        verdict=verdict,
        radius=radius,
        depth=depth,
        max_word_length=max_word_length,
        orbits=orbits,
        over_approximation=over,
    )


@dataclass(frozen=True)
class InvarianceReport:
    ok: bool
    worst_defect: float
    steps: int
    tolerance: float
    overflow_step: int | None = None
    overflow_point: complex | None = None

    @property
    def overflowed(self) -> bool:
        return self.overflow_step is not None


def forward_invariance_check(
    expr: ex.MapExpr,
    points: tuple[complex, ...],
    steps: int = 1,
    tol: float = 1e-9,
) -> InvarianceReport:
    """Check f^j(A) stays within tol of A for j = 1..steps.

    The defect of one step is max over image points of the distance to
    the nearest original point; overflow anywhere fails the check and
    the offending step and preimage are reported.
    """
    if not points:
        return InvarianceReport(True, 0.0, steps, tol)
    tape = compile_tape(ex.normalize(expr))
    base = np.asarray(points, np.complex128)
    current = list(points)
    worst = 0.0
    for j in range(1, steps + 1):
        images = []
        for p in current:
            try:
                images.append(run_tape(tape, p))
            except EvalOverflow:
                return InvarianceReport(False, math.inf, steps, tol, j, p)
        for q in images:
            worst = max(worst, float(np.min(np.abs(base - q))))
        current = images
    return InvarianceReport(worst <= tol, worst, steps, tol)


# ---------------------------------------------------------------------------
# hyperbolicity

class Hyperbolicity(Enum):
    HYPERBOLIC_EVIDENCE = "hyperbolic-evidence"
    NOT_HYPERBOLIC_EVIDENCE = "not-hyperbolic-evidence"
    INCONCLUSIVE = "inconclusive"


@dataclass
class GeneratorCheck:
    label: str
    cloud_verdict: CloudVerdict
    cloud_radius: float
    separation: float | None


@dataclass
class HyperbolicityReport:
    verdict: Hyperbolicity
    separation: float | None  # min cloud-to-Julia distance; inf when no Julia pixels
    threshold: float
    cloud: PostSingularCloud
    per_generator: list[GeneratorCheck]
    julia_pixel_count: int
    classification: Classification | None


def _separation(points: tuple[complex, ...], julia_centers: np.ndarray) -> float:
    if len(points) == 0:
        return math.inf
    from scipy.spatial import cKDTree

    tree = cKDTree(np.column_stack([julia_centers.real, julia_centers.imag]))
    pts = np.asarray(points, np.complex128)
    dist, _ = tree.query(np.column_stack([pts.real, pts.imag]), k=1)
    return float(np.min(dist))


def hyperbolicity_check(
    semigroup: Semigroup,
    grid: GridSpec,
    params: OrbitParams | None = None,
    max_word_length: int = 3,
    depth: int | None = None,
    separation_pixels: float = DEFAULT_SEPARATION_PIXELS,
    word_cap: int = DEFAULT_WORD_CAP,
    threads: int | None = None,
) -> HyperbolicityReport:
    """Evidence that the post-singular set is compactly inside the Fatou set.

    Requires a bounded, settled cloud separated from the Julia pixel
    mask by more than separation_pixels pixel diagonals.  A divergent
    cloud is immediate counter-evidence (the grid run is skipped); an
    unsettled cloud is inconclusive.  An empty Julia mask leaves the
    separation infinite, so a bounded cloud then passes vacuously.

    The cloud depth defaults to the full orbit budget rather than the
    shallower cloud default: near the hyperbolicity boundary the
    attraction rate degrades, and a depth-50 cloud would read as
    unsettled for maps that do converge within the budget.
    """
    params = params or OrbitParams()
    if depth is None:
        depth = params.max_iter
    cloud = post_singular_cloud(semigroup, max_word_length, depth, params, word_cap)
    per_gen = []
    gen_clouds = []
    for k, gen in enumerate(semigroup.generators, start=1):
        sub = Semigroup((gen,), label=f"{semigroup.label}:g{k}")
        gcloud = post_singular_cloud(sub, max_word_length, depth, params, word_cap)
        gen_clouds.append(gcloud)
        per_gen.append(GeneratorCheck(f"g{k}", gcloud.verdict, gcloud.radius, None))

    threshold = separation_pixels * grid.pixel_diagonal
    if cloud.verdict is CloudVerdict.DIVERGENCE_DETECTED:
        return HyperbolicityReport(
            Hyperbolicity.NOT_HYPERBOLIC_EVIDENCE, None, threshold, cloud,
            per_gen, 0, None,
        )
    if cloud.verdict is CloudVerdict.INDETERMINATE:
        return HyperbolicityReport(
            Hyperbolicity.INCONCLUSIVE, None, threshold, cloud, per_gen, 0, None,
        )

    classification = classify_grid(
        semigroup, grid, params, max_word_length, word_cap, threads
    )
    jmask = julia_pixels(classification)
    count = int(jmask.sum())
    if count == 0:
        separation = math.inf
    else:
        centers = classification.grid.centers()[jmask]
        separation = _separation(cloud.points, centers)
        for check, gcloud in zip(per_gen, gen_clouds):
            if gcloud.verdict is CloudVerdict.BOUNDED:
                check.separation = _separation(gcloud.points, centers)
    verdict = (Hyperbolicity.HYPERBOLIC_EVIDENCE if separation > threshold
               else Hyperbolicity.NOT_HYPERBOLIC_EVIDENCE)
    return HyperbolicityReport(
        verdict, separation, threshold, cloud, per_gen, count, classification,
    )
