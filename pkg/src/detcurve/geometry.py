"""Simplex determinants, ellipsoids, and content functionals.

The determinant of a (k+1)-tuple of points is k! times the k-volume of the
simplex they span, computed through the Gram matrix of edge vectors so the
value is defined for any ambient dimension d (it vanishes when k > d or the
tuple is affinely degenerate).

Ellipsoids are stored as a center, an orthonormal frame, and per-axis inverse
semi-lengths.  Inverse lengths keep the membership sum finite for infinite
axes: inv = 0 encodes an infinite semi-length, inv = inf a zero one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FRAME_TOL = 1e-12
GRAM_CLAMP = 1e-14
GRAM_DET_CLAMP = 1e-12


def _as_point(y) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d point, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def _check_frame(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2 or frame.shape[0] != frame.shape[1]:
        raise ValueError(f"frame must be square, got shape {frame.shape}")
    d = frame.shape[0]
    err = np.max(np.abs(frame.T @ frame - np.eye(d)))
    if err > FRAME_TOL:
        raise ValueError(f"frame columns not orthonormal (defect {err:.3e})")
    return frame


def _square_det(mats: np.ndarray) -> np.ndarray:
    """Batched determinant of (M, d, d) stacks.

    d <= 3 uses cofactor expansion: every operation is a fixed circuit of
    products and sums, so the result commutes exactly with power-of-two
    input scaling and cancels exactly on dyadic degeneracies.  LAPACK's LU
    guarantees neither (pivot ordering introduces ulp-level noise), which
    would break the exact dilation covariance of the forms.
    """
    d = mats.shape[-1]
    if d == 1:
        return mats[:, 0, 0].copy()
    if d == 2:
        return mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    if d == 3:
        a, b, c = mats[:, 0, 0], mats[:, 0, 1], mats[:, 0, 2]
        p, q, r = mats[:, 1, 0], mats[:, 1, 1], mats[:, 1, 2]
        u, v, w = mats[:, 2, 0], mats[:, 2, 1], mats[:, 2, 2]
        return a * (q * w - r * v) - b * (p * w - r * u) + c * (p * v - q * u)
    return np.linalg.det(mats)


def simplex_det(points) -> float:
    """Determinant of a tuple of k+1 points in R^d, k >= 1.

    Equals sqrt(det G) where G is the Gram matrix of differences against the
    last point.  Eigenvalues of G below GRAM_CLAMP * trace(G) are treated as
    exact zeros before the square root, so affinely degenerate tuples give 0
    rather than a tiny complex artifact.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two points of equal dimension")
    diffs = pts[:-1] - pts[-1]
    if diffs.shape[0] == diffs.shape[1]:
        return abs(float(_square_det(diffs[None])[0]))
    gram = diffs @ diffs.T
    trace = float(np.trace(gram))
    if trace == 0.0:
        return 0.0
    lam = np.linalg.eigvalsh(gram)
    lam = np.where(lam < GRAM_CLAMP * trace, 0.0, lam)
    return float(math.sqrt(float(np.prod(lam))))


def simplex_det_many(stack: np.ndarray, pinned: bool = False) -> np.ndarray:
    """Batched simplex determinants.

    stack has shape (M, m, d): M tuples of m points each.  With pinned=True
    the origin is an implicit extra vertex and all m points are used as edge
    vectors; otherwise the last point is the base vertex.

    Square edge matrices (k == d) go through the plain determinant, which
    cancels exactly for degenerate tuples.  The Gram route used when k < d
    carries roundoff of order eps * prod(diag G), so Gram determinants below
    GRAM_DET_CLAMP times that product are treated as exact zeros; degenerate
    tuples then report 0 instead of a sqrt(eps)-sized artifact.
    """
    stack = np.asarray(stack, dtype=float)
    if stack.ndim != 3:
        raise ValueError(f"expected (M, m, d) stack, got shape {stack.shape}")
    diffs = stack if pinned else stack[:, :-1, :] - stack[:, -1:, :]
    if diffs.shape[1] == diffs.shape[2]:
        return np.abs(_square_det(diffs))
    gram = diffs @ np.swapaxes(diffs, 1, 2)
    det_g = np.linalg.det(gram)
    scale = np.prod(np.einsum("mii->mi", gram), axis=1)
    det_g = np.where(det_g < GRAM_DET_CLAMP * scale, 0.0, det_g)
    return np.sqrt(np.clip(det_g, 0.0, None))


@dataclass(frozen=True)
class Ellipsoid:
    """Solid ellipsoid {x : sum_i (inv_lengths[i] * <x - center, frame[:, i]>)^2 <= 1}."""

    center: np.ndarray
    frame: np.ndarray
    inv_lengths: np.ndarray

    def __post_init__(self):
        center = _as_point(self.center)
        frame = _check_frame(self.frame)
        inv = np.asarray(self.inv_lengths, dtype=float)
        if inv.ndim != 1 or inv.shape[0] != frame.shape[0]:
            raise ValueError("inv_lengths must match the frame dimension")
        if center.shape[0] != frame.shape[0]:
            raise ValueError("center dimension must match the frame")
        if np.any(inv < 0) or np.any(np.isnan(inv)):
            raise ValueError("inverse lengths must be nonnegative")
        for name, arr in (("center", center), ("frame", frame), ("inv_lengths", inv)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    @property
    def semi_lengths(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.inv_lengths == 0.0, np.inf, 1.0 / self.inv_lengths)

    @property
    def is_centered(self) -> bool:
        return bool(np.all(self.center == 0.0))

    @classmethod
    def ball(cls, radius: float, dim: int, center=None) -> "Ellipsoid":
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        if center is None:
            center = np.zeros(dim)
        if radius == 0.0:
            inv = np.full(dim, np.inf)
        else:
            inv = np.full(dim, 0.0 if math.isinf(radius) else 1.0 / radius)
        return cls(center=np.asarray(center, dtype=float), frame=np.eye(dim), inv_lengths=inv)

    @classmethod
    def from_semi_lengths(cls, lengths, frame=None, center=None) -> "Ellipsoid":
        lengths = np.asarray(lengths, dtype=float)
        d = lengths.shape[0]
        if frame is None:
            frame = np.eye(d)
        if center is None:
            center = np.zeros(d)
        with np.errstate(divide="ignore"):
            inv = np.where(lengths == 0.0, np.inf,
                           np.where(np.isinf(lengths), 0.0, 1.0 / lengths))
        return cls(center=np.asarray(center, dtype=float), frame=frame, inv_lengths=inv)

    def scaled(self, a: float) -> "Ellipsoid":
        """The dilate a*B about its own center, a > 0."""
        if not a > 0:
            raise ValueError("scale factor must be positive")
        return Ellipsoid(center=self.center, frame=self.frame, inv_lengths=self.inv_lengths / a)

    def contains(self, y) -> bool:
        return bool(self.contains_many(np.asarray(y, dtype=float)[None, :])[0])

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized membership for an (N, d) array of points.

        Axes with infinite semi-length contribute nothing; a nonzero
        component along a zero-length axis excludes the point.
        """
        points = np.asarray(points, dtype=float)
        z = (points - self.center) @ self.frame
        inv = self.inv_lengths
        finite = np.isfinite(inv)
        s = np.einsum("na,a->n", z[:, finite] ** 2, inv[finite] ** 2)
        ok = s <= 1.0
        collapsed = ~finite
        if np.any(collapsed):
            ok &= np.all(z[:, collapsed] == 0.0, axis=1)
        return ok

    def content(self, k: int) -> float:
        return k_content(self, k)


def k_content(ellipsoid: Ellipsoid, k: int) -> float:
    """Product of the k largest semi-lengths.

    Convention: within the selected factors, any zero length makes the
    product zero even if another factor is infinite.
    """
    if not 1 <= k <= ellipsoid.dim:
        raise ValueError(f"k must be in [1, {ellipsoid.dim}], got {k}")
    lengths = np.sort(ellipsoid.semi_lengths)[::-1][:k]
    if np.any(lengths == 0.0):
        return 0.0
    if np.any(np.isinf(lengths)):
        return math.inf
    return float(np.prod(lengths))


def matrix_content(q: np.ndarray, k: int) -> float:
    """k-content of the sublevel ellipsoid {x : ||Qx||^2 <= 1}.

    Equals the reciprocal of the product of the k smallest singular values
    of Q; infinite when Q is rank-deficient enough.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"Q must be square, got shape {q.shape}")
    if not 1 <= k <= q.shape[0]:
        raise ValueError(f"k must be in [1, {q.shape[0]}], got {k}")
    sigma = np.linalg.svd(q, compute_uv=False)
    prod = float(np.prod(sigma[-k:]))
    if prod == 0.0:
        return math.inf
    return 1.0 / prod


def ellipsoid_of(q: np.ndarray) -> Ellipsoid:
    """The centered ellipsoid {x : ||Qx||^2 <= 1}.

    From the SVD Q = U diag(s) V^T the set is an ellipsoid with axes the
    columns of V and inverse semi-lengths s, so k_content(ellipsoid_of(Q), k)
    agrees with matrix_content(Q, k).
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"Q must be square, got shape {q.shape}")
    _, s, vt = np.linalg.svd(q)
    return Ellipsoid(center=np.zeros(q.shape[0]), frame=vt.T, inv_lengths=s)


def ellipsoid_contains(ellipsoid: Ellipsoid, y) -> bool:
    return ellipsoid.contains(y)


def project_complement(x, y) -> np.ndarray:
    """Component of y orthogonal to the direction of x (x must be nonzero).

    With P = project_complement, det(0, x, y_1, ..., y_m) factors as
    ||x|| * det(0, P(x, y_1), ..., P(x, y_m)).
    """
    x = _as_point(x)
    y = _as_point(y)
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise ValueError("cannot project along the zero vector")
    xhat = x / nx
    return y - float(y @ xhat) * xhat


@dataclass(frozen=True)
class AffineSubspace:
    """Affine flat given by a base point and orthonormal basis rows (m, d), m < d."""

    base_point: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        base = _as_point(self.base_point)
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2:
            raise ValueError(f"basis must be (m, d), got shape {basis.shape}")
        m, d = basis.shape
        if d != base.shape[0]:
            raise ValueError("basis and base point dimensions differ")
        if m >= d + 1:
            raise ValueError("basis has too many vectors")
        if m > 0:
            err = np.max(np.abs(basis @ basis.T - np.eye(m)))
            if err > FRAME_TOL:
                raise ValueError(f"basis rows not orthonormal (defect {err:.3e})")
        base = base.copy()
        base.setflags(write=False)
        basis = basis.copy()
        basis.setflags(write=False)
        object.__setattr__(self, "base_point", base)
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def from_points(cls, points, rank_tol: float = 1e-12) -> "AffineSubspace":
        """Affine hull of the given points, orthonormalized by SVD.

        Near-dependent directions (singular value below rank_tol times the
        largest) are dropped, so degenerate tuples span a lower flat.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("need an (m, d) array of points")
        base = pts[-1]
        diffs = pts[:-1] - base
        if diffs.shape[0] == 0:
            return cls(base_point=base, basis=np.zeros((0, pts.shape[1])))
        _, s, vt = np.linalg.svd(diffs, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return cls(base_point=base, basis=np.zeros((0, pts.shape[1])))
        keep = s > rank_tol * s[0]
        return cls(base_point=base, basis=vt[keep])

    def distance(self, y) -> float:
        return dist_affine(y, self)

    def distance_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        r = points - self.base_point
        if self.dim > 0:
            r = r - (r @ self.basis.T) @ self.basis
        return np.linalg.norm(r, axis=1)


def dist_affine(y, flat: AffineSubspace) -> float:
    """Euclidean distance from y to the affine flat."""
    y = _as_point(y)
    r = y - flat.base_point
    if flat.dim > 0:
        r = r - flat.basis.T @ (flat.basis @ r)
    return float(np.linalg.norm(r))


def det_content_bound(d: int, k: int) -> float:
    """Constant c(d, k) with det(0, y_1, .., y_k) <= c(d, k) * |B|_k for y_i in B.

    Cauchy-Binet over k-subsets of the frame axes plus a Hadamard column
    bound gives k^(k/2) * sqrt(binom(d, k)); k! dominates k^(k/2), so the
    factorial form below is a valid (slightly loose) bound.
    """
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    return float(math.factorial(k)) * math.sqrt(math.comb(d, k))
