"""Multilinear forms with determinant-power kernels on discrete measures.

det_form evaluates the (k+1)-linear form

    sum over tuples of  prod_j f_j(y_j) w(y_j) * det(y_1, ..., y_{k+1})^(-gamma)

by exact enumeration; det_form_pinned is the k-linear variant with the first
vertex pinned at the origin.  Tuples whose determinant is at or below a
threshold tau are excluded from the sum and counted separately, for every
sign of gamma, so inverse powers never divide by (numerical) zero.

Exact enumeration is capped by a tuple budget; beyond it callers must switch
to det_form_sampled, an unbiased uniform-tuple Monte Carlo estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import parallel
from .measure import WeightedPointMeasure

DEFAULT_BUDGET = 10_000_000
TAU_SCALE = 1e-12


class BudgetExceededError(RuntimeError):
    """Exact enumeration would exceed the tuple budget; use det_form_sampled."""


@dataclass(frozen=True)
class FunctionalResult:
    value: float
    tuples_total: int
    tuples_excluded: int
    stderr: float | None = None  # None in exact mode


@dataclass(frozen=True)
class DyadicProfile:
    """Masses of determinant layers {2^l <= det < 2^(l+1)} over a set family."""

    layers: dict
    gamma: float
    l_min: int | None
    l_max: int | None
    included_mass: float
    excluded_mass: float

    def weighted_sum(self) -> float:
        """sum_l 2^(-gamma l) * mass_l, the layer surrogate for the form."""
        return parallel.fsum(2.0 ** (-self.gamma * l) * m for l, m in self.layers.items())

    def reconstruction_bracket(self) -> tuple:
        """Interval certain to contain the exact pinned form on the same sets.

        Within layer l the kernel det^(-gamma) is between 2^(-gamma(l+1)) and
        2^(-gamma l) (endpoints swapping with the sign of gamma), so the
        weighted sum brackets the form within a factor 2^|gamma| either way.
        """
        s = self.weighted_sum()
        f = 2.0 ** abs(self.gamma)
        return (s / f, s * f)


def default_det_threshold(measures, k: int) -> float:
    """Exclusion threshold: TAU_SCALE times the product of per-slot scale maxima.

    For k copies of one measure this is TAU_SCALE * (max radius)^k.  The
    product form makes the threshold exactly covariant under per-measure
    dilations, which keeps the dilation identity for sublevel masses exact.
    """
    if isinstance(measures, WeightedPointMeasure):
        measures = [measures] * k
    prod = 1.0
    for mu in measures:
        prod *= mu.max_radius
    return TAU_SCALE * prod


def _values_for_slots(measures, fs, m: int):
    """Per-slot atom values f_j * w_j, validating shapes and signs."""
    vals = []
    for j in range(m):
        mu = measures[j]
        w = mu.weights
        if fs is not None and fs[j] is not None:
            f = np.asarray(fs[j], dtype=float)
            if f.shape != (mu.n_atoms,):
                raise ValueError(f"fs[{j}] must have one value per atom")
            if np.any(f < 0) or not np.all(np.isfinite(f)):
                raise ValueError(f"fs[{j}] must be finite and nonnegative")
            vals.append(f * w)
        else:
            vals.append(w)
    return vals


def _decode(flat: np.ndarray, sizes) -> np.ndarray:
    """Mixed-radix decode of flat tuple indices into an (len(flat), m) array."""
    m = len(sizes)
    idx = np.empty((flat.shape[0], m), dtype=np.int64)
    rem = flat
    for j in range(m - 1, -1, -1):
        idx[:, j] = rem % sizes[j]
        rem = rem // sizes[j]
    return idx


def _dets_for(points_list, idx: np.ndarray, pinned: bool) -> np.ndarray:
    stack = np.stack([points_list[j][idx[:, j]] for j in range(idx.shape[1])], axis=1)
    from .geometry import simplex_det_many

    return simplex_det_many(stack, pinned=pinned)


def _multiplicities(idx: np.ndarray) -> np.ndarray:
    """Number of distinct permutations of each nondecreasing index tuple."""
    m = idx.shape[1]
    run = np.ones(idx.shape[0])
    fact_prod = np.ones(idx.shape[0])
    for j in range(1, m):
        eq = idx[:, j] == idx[:, j - 1]
        run = np.where(eq, run + 1.0, 1.0)
        fact_prod *= run
    # fact_prod accumulates prod over runs of (run length)! one factor at a time
    return math.factorial(m) / fact_prod


def _enumerate_form(points_list, values_list, gamma: float, tau: float,
                    pinned: bool, budget: int, symmetric: bool) -> FunctionalResult:
    sizes = [p.shape[0] for p in points_list]
    total = 1
    for s in sizes:
        total *= s
    if total > budget:
        raise BudgetExceededError(
            f"{total} tuples exceed the exact budget {budget}; use det_form_sampled")

    m = len(sizes)

    def block(start, stop):
        flat = np.arange(start, stop, dtype=np.int64)
        idx = _decode(flat, sizes)
        if symmetric:
            keep = np.all(idx[:, :-1] <= idx[:, 1:], axis=1)
            idx = idx[keep]
            if idx.shape[0] == 0:
                return 0.0, 0.0
            mult = _multiplicities(idx)
        else:
            mult = None
        dets = _dets_for(points_list, idx, pinned)
        wprod = values_list[0][idx[:, 0]].copy()
        for j in range(1, m):
            wprod *= values_list[j][idx[:, j]]
        included = dets > tau
        if mult is None:
            n_exc = float(np.count_nonzero(~included))
        else:
            n_exc = float(np.sum(mult[~included]))
            wprod *= mult
        if gamma == 0.0:
            contrib = wprod[included]
        else:
            contrib = wprod[included] * dets[included] ** (-gamma)
        return float(np.sum(contrib)), n_exc

    results = parallel.map_blocks(block, parallel.block_ranges(total))
    value = parallel.fsum(r[0] for r in results)
    excluded = int(round(parallel.fsum(r[1] for r in results)))
    return FunctionalResult(value=value, tuples_total=total,
                            tuples_excluded=excluded, stderr=None)


def _normalize_measures(mu, m: int):
    if isinstance(mu, WeightedPointMeasure):
        return [mu] * m, True
    measures = list(mu)
    if len(measures) != m:
        raise ValueError(f"expected {m} measures, got {len(measures)}")
    same = all(x is measures[0] for x in measures)
    return measures, same


def det_form(mu, k: int, gamma: float, fs=None, *, tau: float = None,
             budget: int = DEFAULT_BUDGET) -> FunctionalResult:
    """Exact (k+1)-fold determinant-kernel form.

    The kernel is det^(-gamma): pass a negative gamma for positive
    determinant powers.  fs is an optional list of k+1 per-atom density
    vectors (None entries mean the constant 1).  When all slots share one
    measure and one density, enumeration runs over nondecreasing tuples
    with multiplicity weights, cutting the determinant work by (k+1)!.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    measures, same = _normalize_measures(mu, k + 1)
    if tau is None:
        # differences of atoms, not atoms themselves, enter the dets here,
        # but max radius is the same order of scale and keeps tau simple
        tau = TAU_SCALE * max(m_.max_radius for m_ in measures) ** k
    vals = _values_for_slots(measures, fs, k + 1)
    symmetric = same and (fs is None or all(
        f is None for f in fs) or all(f is fs[0] for f in fs))
    return _enumerate_form([m_.points for m_ in measures], vals, gamma, tau,
                           pinned=False, budget=budget, symmetric=symmetric)


def det_form_pinned(mu, k: int, gamma: float, fs=None, *, tau: float = None,
                    budget: int = DEFAULT_BUDGET) -> FunctionalResult:
    """Exact k-fold form with one vertex pinned at the origin.

    Same kernel and exclusion conventions as det_form; dets here are
    det(0, y_1, ..., y_k).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    measures, same = _normalize_measures(mu, k)
    if tau is None:
        tau = default_det_threshold(measures, k)
    vals = _values_for_slots(measures, fs, k)
    symmetric = same and (fs is None or all(
        f is None for f in fs) or all(f is fs[0] for f in fs))
    return _enumerate_form([m_.points for m_ in measures], vals, gamma, tau,
                           pinned=True, budget=budget, symmetric=symmetric)


def det_form_sampled(mu, k: int, gamma: float, fs=None, *, samples: int,
                     seed: int = 0, tau: float = None,
                     pinned: bool = False) -> FunctionalResult:
    """Monte Carlo estimate of det_form (or the pinned variant).

    Tuples are drawn uniformly with replacement; the estimator is the tuple
    count times the sample mean of the integrand, which is unbiased for the
    exact sum.  stderr is the standard error of that estimate.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    m = k if pinned else k + 1
    measures, _ = _normalize_measures(mu, m)
    if tau is None:
        if pinned:
            tau = default_det_threshold(measures, k)
        else:
            tau = TAU_SCALE * max(m_.max_radius for m_ in measures) ** k
    vals = _values_for_slots(measures, fs, m)
    sizes = [m_.n_atoms for m_ in measures]
    total = 1
    for s in sizes:
        total *= s

    rng = np.random.default_rng(seed)
    idx = np.stack([rng.integers(0, sizes[j], size=samples) for j in range(m)], axis=1)
    dets = _dets_for([m_.points for m_ in measures], idx, pinned)
    wprod = vals[0][idx[:, 0]].copy()
    for j in range(1, m):
        wprod *= vals[j][idx[:, j]]
    included = dets > tau
    integrand = np.zeros(samples)
    if gamma == 0.0:
        integrand[included] = wprod[included]
    else:
        integrand[included] = wprod[included] * dets[included] ** (-gamma)
    est = float(total * np.mean(integrand))
    err = float(total * np.std(integrand, ddof=1) / math.sqrt(samples))
    return FunctionalResult(value=est, tuples_total=samples,
                            tuples_excluded=int(np.count_nonzero(~included)),
                            stderr=err)


def sublevel_mass(measures, delta: float, *, tau: float = None,
                  budget: int = DEFAULT_BUDGET) -> float:
    """Product-measure mass of {tau < det(0, y_1, ..., y_k) < delta}.

    measures is a list of k probability measures (k = len(measures)); the
    lower cutoff discards degenerate tuples just like the forms do.  Exact
    for discrete measures, and exactly covariant under per-measure dilations
    when tau is scaled by the product of the dilation factors (the default
    tau already is).
    """
    measures = list(measures)
    k = len(measures)
    if k < 1:
        raise ValueError("need at least one measure")
    for m_ in measures:
        if abs(m_.total_mass - 1.0) > 1e-9:
            raise ValueError("sublevel_mass expects probability measures")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if tau is None:
        tau = default_det_threshold(measures, k)

    sizes = [m_.n_atoms for m_ in measures]
    total = 1
    for s in sizes:
        total *= s
    if total > budget:
        raise BudgetExceededError(
            f"{total} tuples exceed the exact budget {budget}")
    points_list = [m_.points for m_ in measures]
    weights_list = [m_.weights for m_ in measures]

    def block(start, stop):
        idx = _decode(np.arange(start, stop, dtype=np.int64), sizes)
        dets = _dets_for(points_list, idx, pinned=True)
        wprod = weights_list[0][idx[:, 0]].copy()
        for j in range(1, k):
            wprod *= weights_list[j][idx[:, j]]
        band = (dets > tau) & (dets < delta)
        return float(np.sum(wprod[band]))

    results = parallel.map_blocks(block, parallel.block_ranges(total))
    return parallel.fsum(results)


def indicator(n: int, idx) -> np.ndarray:
    """Per-atom indicator vector of an index set, for use as an fs entry."""
    out = np.zeros(n)
    out[np.asarray(idx, dtype=int)] = 1.0
    return out


def dyadic_profile(mu: WeightedPointMeasure, k: int, sets, gamma: float, *,
                   tau: float = None, budget: int = DEFAULT_BUDGET) -> DyadicProfile:
    """Layer decomposition of the pinned form over E_1 x ... x E_k.

    sets is a list of k atom-index collections.  Each included tuple lands
    in the layer l = floor(log2 det); layer masses sum to the included
    product mass exactly.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    sets = [np.asarray(s, dtype=int) for s in sets]
    if len(sets) != k:
        raise ValueError(f"expected {k} index sets")
    if tau is None:
        tau = default_det_threshold(mu, k)

    sizes = [s.shape[0] for s in sets]
    total = 1
    for s in sizes:
        total *= s
    if total > budget:
        raise BudgetExceededError(f"{total} tuples exceed the exact budget {budget}")
    points_list = [mu.points[s] for s in sets]
    weights_list = [mu.weights[s] for s in sets]

    def block(start, stop):
        idx = _decode(np.arange(start, stop, dtype=np.int64), sizes)
        dets = _dets_for(points_list, idx, pinned=True)
        wprod = weights_list[0][idx[:, 0]].copy()
        for j in range(1, k):
            wprod *= weights_list[j][idx[:, j]]
        included = dets > tau
        exc_mass = float(np.sum(wprod[~included]))
        dets = dets[included]
        wprod = wprod[included]
        local = {}
        if dets.shape[0]:
            levels = np.floor(np.log2(dets)).astype(int)
            for l in np.unique(levels):
                local[int(l)] = float(np.sum(wprod[levels == l]))
        return local, exc_mass

    layers: dict = {}
    excluded = []
    for local, exc in parallel.map_blocks(block, parallel.block_ranges(total)):
        excluded.append(exc)
        for l, m_ in local.items():
            layers[l] = layers.get(l, 0.0) + m_
    layers = {l: layers[l] for l in sorted(layers)}
    included_mass = parallel.fsum(layers.values())
    return DyadicProfile(layers=layers, gamma=gamma,
                         l_min=min(layers) if layers else None,
                         l_max=max(layers) if layers else None,
                         included_mass=included_mass,
                         excluded_mass=parallel.fsum(excluded))


def cauchy_schwarz_check(mu: WeightedPointMeasure, k: int, gamma: float, sets, *,
                         tau: float = None, budget: int = DEFAULT_BUDGET,
                         rel_tol: float = 1e-12) -> tuple:
    """Duality check (included mass)^2 <= (form at +gamma) * (form at -gamma).

    Both forms run over E_1 x ... x E_k with the same exclusion threshold,
    so the inequality is exactly Cauchy-Schwarz on the included tuples and
    must hold to rounding.  Returns (lhs, rhs, ok).
    """
    sets = [np.asarray(s, dtype=int) for s in sets]
    if len(sets) != k:
        raise ValueError(f"expected {k} index sets")
    if tau is None:
        tau = default_det_threshold(mu, k)
    fs = [indicator(mu.n_atoms, s) for s in sets]
    inv = det_form_pinned(mu, k, gamma, fs, tau=tau, budget=budget)
    fwd = det_form_pinned(mu, k, -gamma, fs, tau=tau, budget=budget)
    mass = det_form_pinned(mu, k, 0.0, fs, tau=tau, budget=budget)
    lhs = mass.value ** 2
    rhs = fwd.value * inv.value
    ok = lhs <= rhs * (1.0 + rel_tol)
    return lhs, rhs, ok


@dataclass(frozen=True)
class WeakTypeProbeResult:
    sup_ratio: float
    witness: dict
    ratios: list = field(repr=False, default_factory=list)
    trials: int = 0


def _sample_sets(mu: WeightedPointMeasure, k: int, rng, kind: str):
    """Draw k atom-index sets of one structural kind."""
    n = mu.n_atoms
    pts = mu.points
    out = []
    for _ in range(k):
        if kind == "subset":
            size = max(1, int(round(n ** rng.uniform(0.3, 1.0))))
            out.append(rng.choice(n, size=min(size, n), replace=False))
        elif kind == "ball":
            center = pts[rng.integers(0, n)]
            dist = np.linalg.norm(pts - center, axis=1)
            r = np.quantile(dist, rng.uniform(0.05, 0.9))
            out.append(np.flatnonzero(dist <= r))
        elif kind == "halfspace":
            u = rng.standard_normal(mu.dim)
            u /= np.linalg.norm(u)
            proj = pts @ u
            c = np.quantile(proj, rng.uniform(0.1, 0.8))
            out.append(np.flatnonzero(proj >= c))
        elif kind == "shell":
            center = pts[rng.integers(0, n)]
            dist = np.linalg.norm(pts - center, axis=1)
            hi = np.quantile(dist, rng.uniform(0.3, 0.95))
            sel = np.flatnonzero((dist > hi / 2.0) & (dist <= hi))
            out.append(sel if sel.size else np.flatnonzero(dist <= hi))
        else:
            raise ValueError(f"unknown set kind {kind!r}")
    return out


def weak_type_probe(mu: WeightedPointMeasure, k: int, gamma: float, alpha: float, *,
                    trials: int = 100, seed: int = 0, set_sampler=None,
                    tau: float = None, budget: int = DEFAULT_BUDGET) -> WeakTypeProbeResult:
    """Empirical sup over set families of the normalized pinned form.

    For each trial a family E_1, ..., E_k is drawn (random subsets, metric
    balls, half-spaces, and shells in rotation, or a caller-provided
    sampler) and the ratio

        det_form_pinned on indicators / prod_j mu(E_j)^(1 - gamma/(k alpha))

    is recorded.  Requires 0 < gamma < k * alpha for the exponent to make
    sense; the sup and its witness family are returned.
    """
    if not (0 < gamma < k * alpha):
        raise ValueError("need 0 < gamma < k * alpha")
    if abs(mu.total_mass - 1.0) > 1e-9:
        raise ValueError("weak_type_probe expects a probability measure")
    if tau is None:
        tau = default_det_threshold(mu, k)
    rng = np.random.default_rng(seed)
    kinds = ("subset", "ball", "halfspace", "shell")
    exponent = 1.0 - gamma / (k * alpha)

    best = -math.inf
    witness = {}
    ratios = []
    for t in range(trials):
        kind = kinds[t % len(kinds)]
        if set_sampler is not None:
            sets = set_sampler(mu, k, rng)
            kind = "custom"
        else:
            sets = _sample_sets(mu, k, rng, kind)
        masses = [float(np.sum(mu.weights[s])) for s in sets]
        if any(m_ <= 0.0 for m_ in masses):
            continue
        fs = [indicator(mu.n_atoms, s) for s in sets]
        form = det_form_pinned(mu, k, gamma, fs, tau=tau, budget=budget)
        denom = 1.0
        for m_ in masses:
            denom *= m_ ** exponent
        ratio = form.value / denom
        ratios.append(ratio)
        if ratio > best:
            best = ratio
            witness = {
                "kind": kind,
                "trial": t,
                "set_sizes": [int(s.shape[0]) for s in sets],
                "set_masses": masses,
                "form_value": form.value,
                "sets": [np.asarray(s, dtype=int) for s in sets],
            }
    if not ratios:
        raise RuntimeError("no probe trial produced nonempty sets")
    return WeakTypeProbeResult(sup_ratio=best, witness=witness,
                               ratios=ratios, trials=len(ratios))
