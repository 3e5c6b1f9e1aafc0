"""Gaussian mixture primitives: densities, sampling, responsibilities, M-steps.

Everything here is deliberately small and numpy-only. Mixtures are immutable
value objects; the update functions are pure and return new arrays, so callers
(the interaction engine, the scalar chain) decide what state to keep.

Numerical policy: all posterior computations run in log space with a
max-subtracted logsumexp, and the scalar two-component update ``h_sigma`` uses
a direct formula in the safe range with a log-space fallback, so weights
saturate to exact 0.0 / 1.0 only when the arithmetic genuinely rounds there.

The M-steps come in two representations. ``update_weights`` maps simplex
weights to simplex weights and is the reference form the closed-form identities
(h_sigma, g_j_sigma) are checked against. ``update_log_weights`` is the same
map on log weights. The distinction matters for long-horizon dynamics: an
M-step multiplies a component's weight by a density ratio, so under well
separated components log weights drift linearly and can come back, while their
linear images underflow to exact zeros that no later evidence can regrow
(responsibilities are proportional to the prior weight). Iterated updates
should therefore stay in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MixtureParams",
    "validate_weights",
    "sample_from_gmm",
    "log_component_density",
    "responsibilities",
    "h_sigma",
    "g_j_sigma",
    "update_weights",
    "update_weights_and_covariances",
    "validate_log_weights",
    "update_log_weights",
    "update_log_weights_and_covariances",
    "volume_rescale",
    "ball_update_bounds",
    "logsumexp",
]

# Tolerance for "weights sum to one" checks.
SIMPLEX_ATOL = 1e-9
# Responsibility totals at or below this are treated as "no effective mass"
# and the component keeps its previous covariance in the covariance M-step.
TINY_RESP = 1e-300
# exp() overflows float64 just above this; used to route h_sigma to its
# log-space branch.
_EXP_OVERFLOW = 709.0


def logsumexp(a, axis=None):
    """log(sum(exp(a))) with max subtraction; handles -inf rows cleanly."""
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis)) + np.squeeze(m, axis=axis)
    if out.ndim == 0:
        return float(out)
    return out


def validate_weights(weights, *, atol=SIMPLEX_ATOL):
    """Return weights as a float array after simplex validation.

    Entries must lie in [0, 1] (closed; exact endpoints are legal because the
    dynamics saturate there in floating point) and sum to 1 within ``atol``.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-d vector")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0.0) or np.any(w > 1.0):
        raise ValueError("weights must lie in [0, 1]")
    s = float(w.sum())
    if abs(s - 1.0) > atol:
        raise ValueError(f"weights must sum to 1 (got {s!r})")
    return w


def _as_matrix(x, d, name):
    """Coerce to an (r, d) float array of points; 1-d input is allowed
    only when d == 1."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        if d == 1:
            arr = arr.reshape(-1, 1)
        else:
            raise ValueError(f"{name} must have shape (r, {d})")
    if arr.ndim != 2 or arr.shape[1] != d or arr.shape[0] == 0:
        raise ValueError(f"{name} must have shape (r, {d}) with r >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class MixtureParams:
    """Immutable parameters of an n-component Gaussian mixture in R^d.

    means: (n, d); covariances: (n, d, d), each symmetric positive definite.
    Weights are deliberately *not* part of this object: the dynamics update
    weights every step while the component geometry is either fixed or swapped
    wholesale via :meth:`with_covariances`.
    """

    means: np.ndarray
    covariances: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)
    _log_norm: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        means = np.array(self.means, dtype=float, copy=True)
        covs = np.array(self.covariances, dtype=float, copy=True)
        if means.ndim == 1:
            means = means.reshape(-1, 1)
        if means.ndim != 2 or means.shape[0] == 0:
            raise ValueError("means must have shape (n, d) with n >= 1")
        n, d = means.shape
        if covs.shape != (n, d, d):
            raise ValueError(f"covariances must have shape ({n}, {d}, {d})")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(covs))):
            raise ValueError("means and covariances must be finite")
        if not np.allclose(covs, np.swapaxes(covs, 1, 2), rtol=0.0, atol=1e-12):
            raise ValueError("covariances must be symmetric")
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariances must be positive definite") from exc
        # log of the Gaussian normalizer per component:
        # -(d/2) log(2 pi) - (1/2) log det
        log_det = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
        log_norm = -0.5 * (d * math.log(2.0 * math.pi) + log_det)
        means.setflags(write=False)
        covs.setflags(write=False)
        chol.setflags(write=False)
        log_norm.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_log_norm", log_norm)

    @property
    def n(self):
        return self.means.shape[0]

    @property
    def d(self):
        return self.means.shape[1]

    @classmethod
    def isotropic(cls, means, sigma):
        """Shared covariance sigma^2 I for every component."""
        means = np.asarray(means, dtype=float)
        if means.ndim == 1:
            means = means.reshape(-1, 1)
        sigma = float(sigma)
        if not (sigma > 0.0 and math.isfinite(sigma)):
            raise ValueError("sigma must be positive and finite")
        n, d = means.shape
        covs = np.broadcast_to(sigma**2 * np.eye(d), (n, d, d)).copy()
        return cls(means, covs)

    def with_covariances(self, covariances):
        """Same means, new covariances (validated like the constructor)."""
        return MixtureParams(self.means, covariances)

    def isotropic_sigma(self):
        """If every covariance is the same sigma^2 I, return sigma, else None."""
        diag = self.covariances[0, 0, 0]
        if diag <= 0.0:
            return None
        target = diag * np.eye(self.d)
        if np.all(self.covariances == target):
            return math.sqrt(diag)
        return None


def sample_from_gmm(weights, params, r, rng):
    """Draw r i.i.d. points from the mixture; returns an (r, d) array.

    Component choice via inverse CDF on the cumulative weights, so zero-weight
    components are never selected and a degenerate one-hot weight vector always
    selects its component.
    """
    w = validate_weights(weights)
    if w.size != params.n:
        raise ValueError("weights length must match number of components")
    r = int(r)
    if r < 1:
        raise ValueError("r must be >= 1")
    cum = np.cumsum(w)
    cum[-1] = max(cum[-1], 1.0)  # guard: u < 1 must always land in a bin
    comp = np.searchsorted(cum, rng.random(r), side="right")
    z = rng.standard_normal((r, params.d))
    # chol @ z per point; einsum keeps the d == 1 case cheap
    return params.means[comp] + np.einsum("rij,rj->ri", params._chol[comp], z)


def log_component_density(point, mean, covariance):
    """Log density of a single Gaussian N(mean, covariance) at point."""
    mean = np.asarray(mean, dtype=float).reshape(-1)
    d = mean.size
    point = np.asarray(point, dtype=float).reshape(-1)
    if point.size != d:
        raise ValueError("point and mean must have the same dimension")
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (d, d):
        raise ValueError(f"covariance must have shape ({d}, {d})")
    chol = np.linalg.cholesky(cov)  # LinAlgError propagates on non-PD input
    y = np.linalg.solve(chol, point - mean)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return float(-0.5 * (d * math.log(2.0 * math.pi) + log_det + y @ y))


def _log_density_matrix(points, params):
    """(r, n) matrix of per-component log densities at each point.

    An overflowing squared distance is a legal intermediate: it produces a
    -inf log density, which callers detect as total underflow."""
    diff = points[:, None, :] - params.means[None, :, :]  # (r, n, d)
    with np.errstate(over="ignore"):
        if params.d == 1:
            var = params.covariances[:, 0, 0]  # (n,)
            quad = diff[:, :, 0] ** 2 / var[None, :]
        else:
            # solve L y = diff per (point, component) via broadcast inverse of L
            inv_chol = np.linalg.inv(params._chol)  # (n, d, d)
            y = np.einsum("nij,rnj->rni", inv_chol, diff)
            quad = np.einsum("rni,rni->rn", y, y)
    return params._log_norm[None, :] - 0.5 * quad


def responsibilities(point, weights, params):
    """Posterior component probabilities at one point; returns (n,) simplex."""
    w = validate_weights(weights)
    if w.size != params.n:
        raise ValueError("weights length must match number of components")
    point = np.asarray(point, dtype=float).reshape(1, -1)
    if point.shape[1] != params.d:
        raise ValueError(f"point must have dimension {params.d}")
    if not np.all(np.isfinite(point)):
        raise ValueError("point must be finite")
    with np.errstate(divide="ignore"):
        log_post = np.log(w)[None, :] + _log_density_matrix(point, params)
    norm = logsumexp(log_post, axis=1)
    if not np.all(np.isfinite(norm)):
        raise FloatingPointError(
            "mixture density underflowed to zero at the query point"
        )
    out = np.exp(log_post[0] - norm)
    return out / out.sum()


def h_sigma(w, x, sigma):
    """Two-component posterior on the first component for means at -1 and 1.

    h(w, x) = w / (w + (1 - w) exp(2 x / sigma^2)).  Vectorized over x and w;
    scalar inputs give a scalar back.  w slightly outside [0, 1] (within 1e-9)
    is clamped; anything farther out is an error.
    """
    sigma = float(sigma)
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError("sigma must be positive and finite")
    scalar = np.ndim(w) == 0 and np.ndim(x) == 0
    w_arr = np.asarray(w, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(w_arr < -1e-9) or np.any(w_arr > 1.0 + 1e-9):
        raise ValueError("w must lie in [0, 1]")
    if not np.all(np.isfinite(x_arr)):
        raise ValueError("x must be finite")
    w_arr, x_arr = np.broadcast_arrays(np.clip(w_arr, 0.0, 1.0), x_arr)
    shape = w_arr.shape
    w_flat = w_arr.reshape(-1)
    t = 2.0 * x_arr.reshape(-1) / sigma**2
    out = np.empty_like(t)
    interior = (w_flat > 0.0) & (w_flat < 1.0)
    safe = interior & (t < _EXP_OVERFLOW)
    out[safe] = w_flat[safe] / (w_flat[safe] + (1.0 - w_flat[safe]) * np.exp(t[safe]))
    big = interior & ~safe
    if np.any(big):
        # log-space: h = exp(log w - logaddexp(log w, log(1 - w) + t))
        lw = np.log(w_flat[big])
        l1w = np.log1p(-w_flat[big])
        out[big] = np.exp(lw - np.logaddexp(lw, l1w + t[big]))
    out[w_flat == 0.0] = 0.0
    out[w_flat == 1.0] = 1.0
    if scalar:
        return float(out[0])
    return out.reshape(shape)


def _require_hypercube_isotropic(params):
    sigma = params.isotropic_sigma()
    if sigma is None:
        raise ValueError("components must share an isotropic covariance sigma^2 I")
    if not np.all(np.abs(params.means) == 1.0):
        raise ValueError("means must be hypercube vertices (entries in {-1, 1})")
    return sigma


def g_j_sigma(weights, j, x, params):
    """Posterior on component j for hypercube means and shared sigma^2 I.

    g_j(w, x) = w_j / (w_j + sum_{h != j} w_h exp(x.(mu_h - mu_j) / sigma^2)).
    Equals responsibilities(x, w, params)[j]; kept separate because the
    simplified exponent form is what the interval bounds are stated against.
    """
    w = validate_weights(weights)
    if w.size != params.n:
        raise ValueError("weights length must match number of components")
    if not (0 <= int(j) < params.n):
        raise ValueError("component index out of range")
    j = int(j)
    sigma = _require_hypercube_isotropic(params)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != params.d:
        raise ValueError(f"x must have dimension {params.d}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    if params.n == 1:
        return 1.0
    if w[j] == 0.0:
        return 0.0
    others = np.arange(params.n) != j
    expo = (params.means[others] - params.means[j]) @ x / sigma**2
    with np.errstate(divide="ignore"):
        log_terms = np.log(w[others]) + expo
    log_s = logsumexp(log_terms)
    if log_s == -np.inf:
        return 1.0
    # g = 1 / (1 + S / w_j), computed as exp(-logaddexp(0, log S - log w_j))
    return float(math.exp(-np.logaddexp(0.0, log_s - math.log(w[j]))))


def update_weights(weights, rag, params):
    """One weight M-step: new w_j = mean over RAG points of responsibility j."""
    w = validate_weights(weights)
    if w.size != params.n:
        raise ValueError("weights length must match number of components")
    pts = _as_matrix(rag, params.d, "rag")
    with np.errstate(divide="ignore"):
        log_post = np.log(w)[None, :] + _log_density_matrix(pts, params)
    norm = logsumexp(log_post, axis=1)
    if not np.all(np.isfinite(norm)):
        raise FloatingPointError("mixture density underflowed to zero at a RAG point")
    resp = np.exp(log_post - norm[:, None])
    resp /= resp.sum(axis=1, keepdims=True)
    return resp.mean(axis=0)


def update_weights_and_covariances(weights, rag, params):
    """Joint M-step on weights and covariances (means stay fixed).

    Covariance of component j becomes the responsibility-weighted scatter of
    the RAG around mu_j.  Components with total responsibility <= 1e-300 keep
    their previous covariance (their weight still updates, to ~0).  Pure: no
    volume constraint is applied here; callers rescale if they enforce one.
    """
    w = validate_weights(weights)
    if w.size != params.n:
        raise ValueError("weights length must match number of components")
    pts = _as_matrix(rag, params.d, "rag")
    with np.errstate(divide="ignore"):
        log_post = np.log(w)[None, :] + _log_density_matrix(pts, params)
    norm = logsumexp(log_post, axis=1)
    if not np.all(np.isfinite(norm)):
        raise FloatingPointError("mixture density underflowed to zero at a RAG point")
    resp = np.exp(log_post - norm[:, None])
    resp /= resp.sum(axis=1, keepdims=True)
    new_w = resp.mean(axis=0)

    diff = pts[:, None, :] - params.means[None, :, :]  # (r, n, d)
    scatter = np.einsum("rn,rni,rnj->nij", resp, diff, diff)
    totals = resp.sum(axis=0)
    new_covs = params.covariances.copy()
    active = totals > TINY_RESP
    new_covs[active] = scatter[active] / totals[active, None, None]
    return new_w, new_covs


def validate_log_weights(log_weights, *, atol=SIMPLEX_ATOL):
    """Return log weights as a float array after validation.

    Entries must be <= 0 up to ``atol`` of normalization drift (-inf is legal;
    it is an exact zero weight) and must logsumexp to 0 within ``atol``.  A
    vector of all -inf carries no mass and is rejected.
    """
    lw = np.asarray(log_weights, dtype=float)
    if lw.ndim != 1 or lw.size == 0:
        raise ValueError("log weights must be a nonempty 1-d vector")
    if np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise ValueError("log weights must be in [-inf, 0]")
    if np.any(lw > atol):
        raise ValueError("log weights must be <= 0")
    total = logsumexp(lw)
    if not np.isfinite(total) or abs(total) > atol:
        raise ValueError(f"log weights must logsumexp to 0 (got {total!r})")
    return np.minimum(lw, 0.0)


def _log_responsibility_matrix(log_weights, pts, params):
    # (r, n) log responsibilities; rows are normalized in log space
    with np.errstate(divide="ignore"):
        log_post = log_weights[None, :] + _log_density_matrix(pts, params)
    norm = logsumexp(log_post, axis=1)
    if not np.all(np.isfinite(norm)):
        raise FloatingPointError("mixture density underflowed to zero at a RAG point")
    return log_post - norm[:, None]


def _check_pseudocount(pseudocount):
    pc = float(pseudocount)
    if not (pc >= 0.0 and math.isfinite(pc)):
        raise ValueError("pseudocount must be finite and >= 0")
    return pc


def update_log_weights(log_weights, rag, params, *, pseudocount=0.0):
    """One weight M-step in log space: same map as update_weights.

    new log w_j = log((sum over RAG points of responsibility j) + pseudocount)
    minus log(r + n * pseudocount).  With pseudocount 0 this is exactly the
    plain M-step.  Keeping the iteration in log space preserves the
    exact-arithmetic property that a positive weight stays positive: far-side
    components decay linearly in log scale instead of underflowing to an
    absorbing 0.0, so later contrary evidence can still pull them back.

    A positive pseudocount additionally floors every weight at roughly
    pseudocount / r, the convention of deployed EM implementations, which keep
    component masses away from zero so one component can never permanently
    starve the others.  Iterated-interaction callers use this; one-shot
    estimation should leave it 0.
    """
    lw = validate_log_weights(log_weights)
    if lw.size != params.n:
        raise ValueError("log weights length must match number of components")
    pc = _check_pseudocount(pseudocount)
    pts = _as_matrix(rag, params.d, "rag")
    log_resp = _log_responsibility_matrix(lw, pts, params)
    out = logsumexp(log_resp, axis=0)  # log of per-component totals
    if pc > 0.0:
        out = np.logaddexp(out, math.log(pc))
    return out - logsumexp(out)


def update_log_weights_and_covariances(
    log_weights, rag, params, *, pseudocount=0.0, ridge=0.0
):
    """Joint M-step in log space; returns (new log weights, new covariances).

    With pseudocount and ridge both 0 the covariance rule matches the linear
    version: components whose total responsibility is at most TINY_RESP keep
    their previous covariance, the rest take the responsibility-weighted
    scatter around their (fixed) means.

    A positive pseudocount floors the scatter denominator, Sigma_j =
    scatter_j / (totals_j + pseudocount), and updates every component: once a
    component stops receiving effective mass its scatter numerator vanishes
    against the floored denominator and its covariance collapses toward
    ridge * I (the ridge keeps the matrix positive definite).  That is how
    deployed EM implementations behave, and it is load-bearing for the
    variable-covariance dynamics: a component the system has abandoned ends up
    with a near-zero covariance rather than a frozen or runaway one.
    """
    lw = validate_log_weights(log_weights)
    if lw.size != params.n:
        raise ValueError("log weights length must match number of components")
    pc = _check_pseudocount(pseudocount)
    rdg = float(ridge)
    if not (rdg >= 0.0 and math.isfinite(rdg)):
        raise ValueError("ridge must be finite and >= 0")
    pts = _as_matrix(rag, params.d, "rag")
    log_resp = _log_responsibility_matrix(lw, pts, params)
    new_lw = logsumexp(log_resp, axis=0)
    if pc > 0.0:
        new_lw = np.logaddexp(new_lw, math.log(pc))
    new_lw = new_lw - logsumexp(new_lw)

    resp = np.exp(log_resp)
    diff = pts[:, None, :] - params.means[None, :, :]  # (r, n, d)
    scatter = np.einsum("rn,rni,rnj->nij", resp, diff, diff)
    totals = resp.sum(axis=0)
    if pc > 0.0:
        new_covs = scatter / (totals + pc)[:, None, None]
        if rdg > 0.0:
            new_covs += rdg * np.eye(params.d)[None, :, :]
    else:
        new_covs = params.covariances.copy()
        active = totals > TINY_RESP
        new_covs[active] = scatter[active] / totals[active, None, None]
        if rdg > 0.0:
            new_covs += rdg * np.eye(params.d)[None, :, :]
    return new_lw, new_covs


def volume_rescale(covariances, target_det):
    """Scale covariance(s) so det == target_det; shape-preserving.

    Accepts one (d, d) matrix or a stack (n, d, d).  Non-positive determinants
    raise FloatingPointError: the scatter degenerated and no rescale can fix
    it.
    """
    target_det = float(target_det)
    if not (target_det > 0.0 and math.isfinite(target_det)):
        raise ValueError("target_det must be positive and finite")
    covs = np.asarray(covariances, dtype=float)
    single = covs.ndim == 2
    if single:
        covs = covs[None]
    d = covs.shape[-1]
    if covs.shape[-2] != d:
        raise ValueError("covariances must be square")
    dets = np.linalg.det(covs)
    if np.any(dets <= 0.0) or not np.all(np.isfinite(dets)):
        raise FloatingPointError("covariance determinant is not positive")
    out = covs * (target_det / dets)[:, None, None] ** (1.0 / d)
    return out[0] if single else out


def ball_update_bounds(weights, j, sigma, radius):
    """Interval containing the updated j-th weight when every RAG point lies
    in a ball of radius ``radius`` <= 1/2 around mu_j (hypercube means).

    Returns (low, high) with
      low  = w_j / (w_j + S exp((2 radius - 2) / sigma^2)),
      high = w_j / (w_j + S exp(-(2 + radius)^2 / (2 sigma^2))),
    S = sum of the other weights.  ``low`` is valid for any hypercube
    configuration.  ``high`` additionally requires every other mean to be a
    nearest vertex of mu_j (squared distance exactly 4); for farther vertices
    the true posterior can exceed it (see the companion test for an explicit
    antipodal counterexample).
    """
    w = validate_weights(weights)
    if not (0 <= int(j) < w.size):
        raise ValueError("component index out of range")
    j = int(j)
    sigma = float(sigma)
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError("sigma must be positive and finite")
    radius = float(radius)
    if not (0.0 <= radius <= 0.5):
        raise ValueError("radius must lie in [0, 1/2]")
    if w.size == 1:
        return (1.0, 1.0)
    wj = w[j]
    if wj == 0.0:
        return (0.0, 0.0)
    s = float(w.sum() - wj)
    if s <= 0.0:
        return (1.0, 1.0)
    log_ratio = math.log(s) - math.log(wj)
    lo_expo = (2.0 * radius - 2.0) / sigma**2
    hi_expo = -((2.0 + radius) ** 2) / (2.0 * sigma**2)
    low = math.exp(-np.logaddexp(0.0, log_ratio + lo_expo))
    high = math.exp(-np.logaddexp(0.0, log_ratio + hi_expo))
    return (low, high)
