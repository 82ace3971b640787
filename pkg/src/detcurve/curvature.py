"""Curvature diagnostics: how measure mass scales against ellipsoid content.

A measure is k-curved with exponent alpha when mu(B) <= C * |B|_k^alpha for
every centered ellipsoid B, |B|_k being the product of the k largest
semi-lengths.  Everything here works with finite search families: frames
(orthonormal axis systems) crossed with per-axis dyadic semi-lengths, with a
scale floor so that atomic measures do not trivially blow the ratio up.
Estimates are therefore certified lower bounds for the true constant, with a
deterministic local refinement to tighten them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .geometry import (AffineSubspace, Ellipsoid, k_content, matrix_content,
                       _check_frame)
from .measure import WeightedPointMeasure, eval_measure, median_nn_distance

MODES = ("scale_floored_search", "doubling_dyadic")


@dataclass(frozen=True)
class EllipsoidFamily:
    """Finite family of centered ellipsoids: frames x per-axis length grid.

    scale_floored_search: grid values are dyadic lengths clamped below by
    the floor h, and the floor value itself is a grid point, so the family
    always contains the floor-scale ball.

    doubling_dyadic: pure powers of two with consecutive exponents, hence
    closed under B -> 2B as long as the doubled exponents stay in range.
    """

    frames: tuple
    length_grid: np.ndarray
    floor: float = 0.0
    mode: str = "scale_floored_search"

    def __post_init__(self):
        frames = tuple(np.asarray(f, dtype=float) for f in self.frames)
        if not frames:
            raise ValueError("family needs at least one frame")
        d = frames[0].shape[0]
        for f in frames:
            _check_frame(f)
            if f.shape[0] != d:
                raise ValueError("all frames must share one dimension")
        grid = np.asarray(self.length_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("length_grid must be a nonempty vector")
        if np.any(grid <= 0) or not np.all(np.isfinite(grid)):
            raise ValueError("grid lengths must be positive and finite")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("length_grid must be strictly increasing")
        if not (np.isfinite(self.floor) and self.floor >= 0):
            raise ValueError("floor must be a finite nonnegative length")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "doubling_dyadic":
            if self.floor != 0.0:
                raise ValueError("doubling_dyadic mode does not take a floor")
            if grid.size > 1 and np.any(grid[1:] != 2.0 * grid[:-1]):
                raise ValueError("doubling_dyadic grid must be consecutive doublings")
        grid = grid.copy()
        grid.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "length_grid", grid)

    @property
    def dim(self) -> int:
        return self.frames[0].shape[0]

    @property
    def effective_lengths(self) -> np.ndarray:
        if self.mode == "scale_floored_search" and self.floor > 0.0:
            above = self.length_grid[self.length_grid > self.floor]
            return np.concatenate(([self.floor], above))
        return self.length_grid

    @property
    def size(self) -> int:
        return len(self.frames) * len(self.effective_lengths) ** self.dim

    def length_tuples(self, inner: bool = False) -> np.ndarray:
        """(T, d) table of per-axis semi-length assignments.

        inner=True keeps only assignments whose doubling stays inside the
        grid (doubling_dyadic mode), i.e. drops the largest grid value.
        """
        values = self.effective_lengths
        if inner:
            if self.mode != "doubling_dyadic":
                raise ValueError("inner tuples only make sense in doubling_dyadic mode")
            values = values[:-1]
            if values.size == 0:
                raise ValueError("grid too small for inner members")
        return np.array(list(product(values, repeat=self.dim)))

    def members(self):
        for frame in self.frames:
            for lengths in self.length_tuples():
                yield Ellipsoid.from_semi_lengths(lengths, frame=frame)

    @classmethod
    def dyadic(cls, dim: int, j_min: int, j_max: int, frames=None,
               floor: float = 0.0, mode: str = "scale_floored_search") -> "EllipsoidFamily":
        if j_max < j_min:
            raise ValueError("j_max must be at least j_min")
        if frames is None:
            frames = (np.eye(dim),)
        grid = 2.0 ** np.arange(j_min, j_max + 1)
        return cls(frames=tuple(frames), length_grid=grid, floor=floor, mode=mode)


def default_frames(dim: int, n_random: int = 64, seed: int = 0,
                   points: np.ndarray = None, weights: np.ndarray = None,
                   n_pca: int = 8) -> list:
    """Coordinate frame, data-adapted principal frames, and random rotations.

    Principal frames come from the full cloud (both raw second moment and
    centered covariance) and from seeded random atom subsets, so flat or
    stretched directions in the data show up as candidate axes.
    """
    rng = np.random.default_rng(seed)
    frames = [np.eye(dim)]

    def pca_frame(pts, center):
        x = pts - pts.mean(axis=0) if center else pts
        moment = x.T @ x
        _, vecs = np.linalg.eigh(moment)
        return vecs

    if points is not None:
        points = np.asarray(points, dtype=float)
        n = points.shape[0]
        if n >= 2:
            frames.append(pca_frame(points, center=False))
            frames.append(pca_frame(points, center=True))
            size = min(n, max(dim + 1, 8))
            for _ in range(n_pca):
                sub = rng.choice(n, size=size, replace=False)
                frames.append(pca_frame(points[sub], center=True))

    for _ in range(n_random):
        raw = rng.standard_normal((dim, dim))
        q, r = np.linalg.qr(raw)
        q = q * np.sign(np.diag(r))
        frames.append(q)
    return frames


def default_family(mu: WeightedPointMeasure, *, n_frames: int = 64, n_pca: int = 8,
                   floor: float = None, j_min: int = None, j_max: int = None,
                   mode: str = "scale_floored_search", seed: int = 0) -> EllipsoidFamily:
    """Data-sized search family for a measure.

    The floor defaults to the median nearest-neighbor distance, which ties
    the smallest ellipsoid to the sampling resolution: on a regular grid
    approximating Lebesgue measure this reproduces the continuum mass-to-
    content ratio at the cell scale.  The dyadic range covers the support
    radius with one doubling of headroom.
    """
    if mode == "doubling_dyadic":
        floor_val = 0.0
    else:
        floor_val = median_nn_distance(mu) if floor is None else float(floor)
    rmax = mu.max_radius
    if rmax <= 0.0:
        rmax = 1.0
    if j_max is None:
        j_max = math.ceil(math.log2(2.0 * rmax))
    if j_min is None:
        if floor_val > 0.0:
            j_min = math.floor(math.log2(floor_val))
        else:
            j_min = j_max - 12
    frames = default_frames(mu.dim, n_random=n_frames, seed=seed,
                            points=mu.points, weights=mu.weights, n_pca=n_pca)
    return EllipsoidFamily.dyadic(mu.dim, j_min, j_max, frames=frames,
                                  floor=floor_val, mode=mode)


@dataclass(frozen=True)
class CurvatureEstimate:
    """Certified lower bound for sup_B mu(B) / |B|_k^alpha over centered B.

    The witness is the maximizing ellipsoid; it is either a family member or
    a floor-respecting local refinement of one, and the constant is always
    the recomputed ratio of the witness itself.
    """

    alpha: float
    constant: float
    witness: Ellipsoid
    family_size: int


def curvature_ratio(mu: WeightedPointMeasure, ellipsoid: Ellipsoid, k: int,
                    alpha: float) -> float:
    """mu(B) / |B|_k^alpha with the conventions 0/0 = 0 and m/0 = inf for m > 0."""
    mass = eval_measure(mu, ellipsoid)
    content = k_content(ellipsoid, k)
    if content == 0.0:
        return 0.0 if mass == 0.0 else math.inf
    if math.isinf(content):
        return 0.0
    return mass / content ** alpha


def _top_k_products(tuples: np.ndarray, k: int) -> np.ndarray:
    ordered = np.sort(tuples, axis=1)[:, ::-1]
    return np.prod(ordered[:, :k], axis=1)


def _sweep_masses(mu: WeightedPointMeasure, frame: np.ndarray,
                  invsq: np.ndarray, shift: np.ndarray = None) -> np.ndarray:
    """Masses of all length assignments for one frame (einsum keeps results
    independent of BLAS threading)."""
    z = mu.points @ frame
    if shift is not None:
        z = z - shift
    s = np.einsum("na,ta->nt", z * z, invsq)
    return np.einsum("n,nt->t", mu.weights, (s <= 1.0).astype(float))


def _givens(d: int, i: int, j: int, theta: float) -> np.ndarray:
    g = np.eye(d)
    c, s = math.cos(theta), math.sin(theta)
    g[i, i] = c
    g[j, j] = c
    g[i, j] = -s
    g[j, i] = s
    return g


def _refine(mu: WeightedPointMeasure, frame: np.ndarray, lengths: np.ndarray,
            floor: float, budget: int, score_fn, minimize: bool):
    """First-improvement hill climb over axis rescalings and small rotations.

    Deterministic: moves are tried in a fixed cycle and only strict
    improvements are accepted.  Lengths never go below the floor.
    """
    d = lengths.shape[0]
    step = 2.0 ** 0.25
    angles = (0.3, -0.3, 0.1, -0.1, 0.03, -0.03)

    def proposals(fr, ln):
        for a in range(d):
            for s in (step, 1.0 / step):
                cand = ln.copy()
                cand[a] = max(cand[a] * s, floor) if floor > 0 else cand[a] * s
                if cand[a] != ln[a]:
                    yield fr, cand
        for i in range(d):
            for j in range(i + 1, d):
                for theta in angles:
                    rot = fr @ _givens(d, i, j, theta)
                    q, r = np.linalg.qr(rot)
                    yield q * np.sign(np.diag(r)), ln

    best = score_fn(frame, lengths)
    evals = 0
    improved = True
    while improved and evals < budget:
        improved = False
        for cand_frame, cand_lengths in proposals(frame, lengths):
            if evals >= budget:
                break
            score = score_fn(cand_frame, cand_lengths)
            evals += 1
            if (score < best) if minimize else (score > best):
                frame, lengths, best = cand_frame, cand_lengths, score
                improved = True
                break
    return frame, lengths, best


def _single_mass(mu: WeightedPointMeasure, frame: np.ndarray,
                 lengths: np.ndarray) -> float:
    z = mu.points @ frame
    s = np.einsum("na,a->n", z * z, 1.0 / lengths ** 2)
    return float(np.sum(mu.weights[s <= 1.0]))


def estimate_curvature_constant(mu: WeightedPointMeasure, k: int, alpha: float,
                                family: EllipsoidFamily,
                                refine: int = 160) -> CurvatureEstimate:
    """Grid sweep plus local refinement of the mass-to-content ratio.

    Monotone in family enlargement by construction.  refine is the local
    search evaluation budget (0 disables it).
    """
    if not 1 <= k <= mu.dim:
        raise ValueError(f"k must be in [1, {mu.dim}]")
    if family.dim != mu.dim:
        raise ValueError("family dimension does not match the measure")
    if not alpha > 0:
        raise ValueError("alpha must be positive")

    tuples = family.length_tuples()
    invsq = 1.0 / tuples ** 2
    contents_a = _top_k_products(tuples, k) ** alpha

    starts = []
    for frame in family.frames:
        masses = _sweep_masses(mu, frame, invsq)
        ratios = masses / contents_a
        t = int(np.argmax(ratios))
        starts.append((float(ratios[t]), frame, tuples[t]))
    starts.sort(key=lambda s: -s[0])

    def score(frame, lengths):
        content = float(np.prod(np.sort(lengths)[::-1][:k]))
        if content <= 0.0:
            return -math.inf
        return _single_mass(mu, frame, lengths) / content ** alpha

    best_score, best_frame, best_lengths = starts[0]
    if refine > 0:
        n_starts = min(3, len(starts))
        per_start = max(1, refine // n_starts)
        for _, frame, lengths in starts[:n_starts]:
            fr, ln, sc = _refine(mu, np.array(frame),
                                 np.array(lengths, dtype=float),
                                 family.floor, per_start, score,
                                 minimize=False)
            if sc > best_score:
                best_score, best_frame, best_lengths = sc, fr, ln

    witness = Ellipsoid.from_semi_lengths(best_lengths, frame=best_frame)
    constant = curvature_ratio(mu, witness, k, alpha)
    return CurvatureEstimate(alpha=alpha, constant=constant, witness=witness,
                             family_size=family.size)


def min_content_at_mass(mu: WeightedPointMeasure, k: int, eps: float,
                        family: EllipsoidFamily, refine: int = 160):
    """Smallest k-content found among centered ellipsoids of mass >= eps.

    Returns (delta_hat, witness) with delta_hat an upper bound for the true
    infimum.  For k = 1 the infimum is exact: an ellipsoid is contained in
    the ball of its largest semi-length, so centered balls are optimal and
    the answer is the radius quantile at mass eps.
    """
    if not 1 <= k <= mu.dim:
        raise ValueError(f"k must be in [1, {mu.dim}]")
    total = mu.total_mass
    eps_eff = eps - 1e-9 * max(1.0, eps)
    if not 0 < eps <= total + 1e-9:
        raise ValueError(f"eps must lie in (0, total mass], got {eps}")

    if k == 1:
        order = np.argsort(mu.radii, kind="stable")
        cum = np.cumsum(mu.weights[order])
        pos = int(np.searchsorted(cum, eps_eff))
        pos = min(pos, mu.n_atoms - 1)
        r = float(mu.radii[order][pos])
        return r, Ellipsoid.ball(r, mu.dim)

    if family.dim != mu.dim:
        raise ValueError("family dimension does not match the measure")
    tuples = family.length_tuples()
    invsq = 1.0 / tuples ** 2
    contents = _top_k_products(tuples, k)

    starts = []
    for frame in family.frames:
        masses = _sweep_masses(mu, frame, invsq)
        feasible = masses >= eps_eff
        if not np.any(feasible):
            continue
        cand = np.where(feasible, contents, math.inf)
        t = int(np.argmin(cand))
        starts.append((float(cand[t]), frame, tuples[t]))
    starts.sort(key=lambda s: s[0])
    if starts:
        best_content, best_frame, best_lengths = starts[0]
    else:
        best_frame = None

    if best_frame is None:
        # grid top end too small for this mass level: grow balls until feasible
        radius = float(family.effective_lengths[-1])
        for _ in range(128):
            radius *= 2.0
            ball = Ellipsoid.ball(radius, mu.dim)
            if eval_measure(mu, ball) >= eps_eff:
                best_frame = np.eye(mu.dim)
                best_lengths = np.full(mu.dim, radius)
                best_content = radius ** k
                break
        else:
            raise RuntimeError("could not reach the requested mass level")

    def score(frame, lengths):
        if _single_mass(mu, frame, lengths) < eps_eff:
            return math.inf
        return float(np.prod(np.sort(lengths)[::-1][:k]))

    if refine > 0:
        n_starts = min(3, max(1, len(starts)))
        per_start = max(1, refine // n_starts)
        pool = starts[:n_starts] or [(best_content, best_frame, best_lengths)]
        best_score = math.inf
        for _, frame, lengths in pool:
            fr, ln, sc = _refine(mu, np.array(frame),
                                 np.array(lengths, dtype=float),
                                 family.floor, per_start, score,
                                 minimize=True)
            if sc < best_score:
                best_score, best_frame, best_lengths = sc, fr, ln

    witness = Ellipsoid.from_semi_lengths(best_lengths, frame=best_frame)
    return k_content(witness, k), witness


# ---------------------------------------------------------------------------
# Gaussian test functions


@dataclass(frozen=True)
class GaussianForm:
    """Test function x -> exp(-||Q x - center||^2)."""

    matrix: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.matrix, dtype=float)
        c = np.asarray(self.center, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("matrix must be square")
        if c.shape != (q.shape[0],):
            raise ValueError("center dimension mismatch")
        q = q.copy()
        q.setflags(write=False)
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "matrix", q)
        object.__setattr__(self, "center", c)

    def values(self, points: np.ndarray) -> np.ndarray:
        arg = points @ self.matrix.T - self.center
        return np.exp(-np.einsum("nd,nd->n", arg, arg))

    def content(self, k: int) -> float:
        return matrix_content(self.matrix, k)


def gaussian_integral(mu: WeightedPointMeasure, q: np.ndarray, x0=None) -> float:
    """Exact atom sum of exp(-||Q x - x0||^2) against the measure."""
    q = np.asarray(q, dtype=float)
    if x0 is None:
        x0 = np.zeros(q.shape[0])
    form = GaussianForm(matrix=q, center=np.asarray(x0, dtype=float))
    return float(np.sum(mu.weights * form.values(mu.points)))


def gaussian_lower_check(mu: WeightedPointMeasure, q: np.ndarray,
                         rel_tol: float = 1e-12) -> tuple:
    """exp(-1) * mu({||Qx||^2 <= 1}) <= integral of exp(-||Qx||^2).

    Pointwise exp(-||Qx||^2) >= exp(-1) on the sublevel set, so this holds
    exactly; rel_tol only absorbs summation roundoff.
    """
    q = np.asarray(q, dtype=float)
    img = mu.points @ q.T
    s = np.einsum("nd,nd->n", img, img)
    lhs = math.exp(-1.0) * float(np.sum(mu.weights[s <= 1.0]))
    rhs = gaussian_integral(mu, q)
    return lhs, rhs, lhs <= rhs * (1.0 + rel_tol)


def layer_cake_check(mu: WeightedPointMeasure, q: np.ndarray) -> tuple:
    """Compare the Gaussian integral against its radial layer decomposition.

    With m(t) = mu({||Qx|| <= t}),

        integral exp(-||Qx||^2) dmu = 2 int_0^inf t exp(-t^2) m(t) dt,

    and m is a step function of t with breakpoints at the atom values
    ||Q p_i||, so the right side is a finite sum of closed-form pieces
    (int_a^b 2 t e^{-t^2} dt = e^{-a^2} - e^{-b^2}).  Returns
    (lhs, rhs, rel_err).
    """
    q = np.asarray(q, dtype=float)
    lhs = gaussian_integral(mu, q)
    r = np.linalg.norm(mu.points @ q.T, axis=1)
    order = np.argsort(r, kind="stable")
    r_sorted = r[order]
    cum = np.cumsum(mu.weights[order])
    breaks, last_idx = np.unique(r_sorted[::-1], return_index=True)
    masses = cum[len(r_sorted) - 1 - last_idx]  # mass at or below each break
    rhs = 0.0
    for i, (a, m_) in enumerate(zip(breaks, masses)):
        b2 = breaks[i + 1] ** 2 if i + 1 < len(breaks) else math.inf
        tail = 0.0 if math.isinf(b2) else math.exp(-b2)
        rhs += m_ * (math.exp(-a * a) - tail)
    denom = abs(lhs) if lhs != 0.0 else 1.0
    return lhs, rhs, abs(lhs - rhs) / denom


def gaussian_content_check(mu: WeightedPointMeasure, q: np.ndarray, k: int,
                           alpha: float, rel_tol: float = 1e-9) -> tuple:
    """Gaussian integral against the dyadic curvature constant of Q's ellipsoid.

    If mu(t E_Q) <= C (t^k |Q|_k)^alpha along dyadic t covering the support,
    the layer decomposition gives

        integral <= Gamma(k alpha / 2 + 1) * 2^(k alpha) * C * |Q|_k^alpha,

    the 2^(k alpha) paying for rounding t up to the next dyadic level.
    Returns (lhs, bound, c_dyadic, ok).
    """
    q = np.asarray(q, dtype=float)
    lhs = gaussian_integral(mu, q)
    qk = matrix_content(q, k)
    if not math.isfinite(qk):
        return lhs, math.inf, 0.0, True
    r = np.linalg.norm(mu.points @ q.T, axis=1)
    positive = r[(r > 0.0) & (mu.weights > 0.0)]
    if positive.size == 0 or float(np.sum(mu.weights[r == 0.0])) > 0.0:
        # mass sits at ||Qx|| = 0: no dyadic level has zero mass below it
        return lhs, math.inf, math.inf, True
    j_lo = math.floor(math.log2(float(np.min(positive)))) - 1
    j_hi = math.ceil(math.log2(float(np.max(r))))
    c_dyadic = 0.0
    for j in range(j_lo + 1, j_hi + 1):
        t = 2.0 ** j
        mass = float(np.sum(mu.weights[r <= t]))
        c_dyadic = max(c_dyadic, mass / (t ** k * qk) ** alpha)
    bound = math.gamma(k * alpha / 2.0 + 1.0) * 2.0 ** (k * alpha) * c_dyadic * qk ** alpha
    return lhs, bound, c_dyadic, lhs <= bound * (1.0 + rel_tol)


# ---------------------------------------------------------------------------
# slab condition


def slab_constant(mu: WeightedPointMeasure, k: int, alpha: float,
                  subspaces) -> float:
    """sup over flats and slab widths of mu({dist <= delta}) / delta^(alpha k).

    Widths range over the distinct positive atom distances, which dominate
    all real widths (shrinking delta to the nearest atom distance below only
    increases the ratio).  Mass at distance zero makes the sup infinite.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    scale = max(1.0, mu.max_radius)
    zero_tol = 1e-12 * scale
    best = 0.0
    for flat in subspaces:
        if flat.dim != k - 1:
            raise ValueError(f"slab flats must have dimension k-1={k - 1}, got {flat.dim}")
        if flat.ambient_dim != mu.dim:
            raise ValueError("flat ambient dimension mismatch")
        dist = flat.distance_many(mu.points)
        on_flat = dist <= zero_tol
        if float(np.sum(mu.weights[on_flat])) > 0.0:
            return math.inf
        order = np.argsort(dist, kind="stable")
        d_sorted = dist[order]
        cum = np.cumsum(mu.weights[order])
        is_last = np.ones(len(d_sorted), dtype=bool)
        is_last[:-1] = d_sorted[:-1] != d_sorted[1:]
        ratios = cum[is_last] / d_sorted[is_last] ** (alpha * k)
        if ratios.size:
            best = max(best, float(np.max(ratios)))
    return best


def top_axes_flat(ellipsoid: Ellipsoid, k: int) -> AffineSubspace:
    """Span of the k-1 longest axes of a centered ellipsoid (stable ties)."""
    order = np.argsort(-ellipsoid.semi_lengths, kind="stable")
    basis = ellipsoid.frame[:, order[:k - 1]].T
    return AffineSubspace(base_point=ellipsoid.center, basis=basis)


def slab_implication_check(mu: WeightedPointMeasure, k: int, alpha: float,
                           family: EllipsoidFamily, max_members: int = 4096,
                           rel_tol: float = 1e-9) -> tuple:
    """Slab control implies the ellipsoid bound: checked member by member.

    Every point of B lies within its k-th largest semi-length of the span of
    the top k-1 axes, so mu(B) <= C_slab * l_k^(alpha k) <= C_slab * |B|_k^alpha
    once the slab family contains each member's top-axis span.  Returns
    (c_slab, all_ok, worst_margin, n_checked).
    """
    members = list(family.members())
    if len(members) > max_members:
        stride = -(-len(members) // max_members)
        members = members[::stride]
    flats = [top_axes_flat(b, k) for b in members]
    c_slab = slab_constant(mu, k, alpha, flats)
    all_ok = True
    worst = math.inf
    for b in members:
        mass = eval_measure(mu, b)
        l_k = float(np.sort(b.semi_lengths)[::-1][k - 1])
        bound = c_slab * l_k ** (alpha * k)
        margin = bound - mass
        worst = min(worst, margin)
        if not (mass <= bound * (1.0 + rel_tol) or math.isinf(bound)):
            all_ok = False
    return c_slab, all_ok, worst, len(members)


# ---------------------------------------------------------------------------
# maximal function


def maximal_function(mu: WeightedPointMeasure, k: int, alpha: float,
                     family: EllipsoidFamily, eval_points: np.ndarray = None,
                     inner: bool = False) -> np.ndarray:
    """F(y) = sup over the family of mu(y + B) / |B|_k^alpha.

    Requires a doubling_dyadic family.  inner=True restricts the sup to
    members whose doubled lengths stay inside the grid, the subfamily for
    which the covering step y' + 2B over y + B never leaves the family.
    """
    if family.mode != "doubling_dyadic":
        raise ValueError("maximal_function needs a doubling_dyadic family")
    if not 1 <= k <= mu.dim:
        raise ValueError(f"k must be in [1, {mu.dim}]")
    pts = mu.points if eval_points is None else np.asarray(eval_points, dtype=float)
    tuples = family.length_tuples(inner=inner)
    invsq = 1.0 / tuples ** 2
    contents_a = _top_k_products(tuples, k) ** alpha

    out = np.zeros(pts.shape[0])
    for frame in family.frames:
        z_atoms = mu.points @ frame
        z_eval = pts @ frame
        for m in range(pts.shape[0]):
            diff = z_atoms - z_eval[m]
            s = np.einsum("na,ta->nt", diff * diff, invsq)
            masses = np.einsum("n,nt->t", mu.weights, (s <= 1.0).astype(float))
            best = float(np.max(masses / contents_a))
            if best > out[m]:
                out[m] = best
    return out


def weak_lp_norm(values, weights, p: float) -> float:
    """Weak L^p norm (sup_t t^p mu(|f| > t))^(1/p), exact for finite data.

    The sup is attained as t increases to a distinct value of |f|, where the
    super-level mass is mu(|f| >= value).
    """
    if not p > 0:
        raise ValueError("p must be positive")
    v = np.abs(np.asarray(values, dtype=float))
    w = np.asarray(weights, dtype=float)
    if v.shape != w.shape:
        raise ValueError("values and weights must have matching shape")
    order = np.argsort(-v, kind="stable")
    v_sorted = v[order]
    cum = np.cumsum(w[order])
    firsts = np.ones(len(v_sorted), dtype=bool)
    firsts[1:] = v_sorted[1:] != v_sorted[:-1]
    lasts = np.ones(len(v_sorted), dtype=bool)
    lasts[:-1] = v_sorted[:-1] != v_sorted[1:]
    vals = v_sorted[firsts]
    mass_ge = cum[lasts]
    keep = vals > 0.0
    if not np.any(keep):
        return 0.0
    best = float(np.max(vals[keep] ** p * mass_ge[keep]))
    return best ** (1.0 / p)


def maximal_weak_bound_check(mu: WeightedPointMeasure, k: int, alpha: float,
                             p: float, family: EllipsoidFamily,
                             rel_tol: float = 1e-9) -> tuple:
    """Self-improvement of the maximal function under the doubling family.

    If F_alpha has finite weak L^p norm then the maximal function at the
    smaller exponent alpha p / (p+1) is uniformly bounded:

        max over atoms of F_inner <= 2^(alpha k) * ||F_alpha||_{p,inf}^(p/(p+1)),

    where F_inner takes the sup over members whose double stays in the
    family (that is exactly what the covering argument consumes).  Returns
    (lhs, rhs, ok).
    """
    f_full = maximal_function(mu, k, alpha, family, mu.points, inner=False)
    wk = weak_lp_norm(f_full, mu.weights, p)
    f_inner = maximal_function(mu, k, alpha * p / (p + 1.0), family,
                               mu.points, inner=True)
    positive = mu.weights > 0.0
    lhs = float(np.max(f_inner[positive]))
    rhs = 2.0 ** (alpha * k) * wk ** (p / (p + 1.0))
    return lhs, rhs, lhs <= rhs * (1.0 + rel_tol)
