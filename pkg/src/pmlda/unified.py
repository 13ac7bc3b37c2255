"""Model unifying Bayesian partial membership and Bayesian fuzzy clustering:
priors, joint log likelihoods and the log-likelihood grid over (fuzzifier,
scale, x, membership).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .blend import TopicParams, blend_weights, fdl_product_normalizer
from .exceptions import DomainError

INTERIOR_EPS = 1e-9
GRID_EPS = 1e-6


@dataclass(frozen=True)
class UnifiedHyper:
    alpha: np.ndarray
    lam: float
    m: float = 1.0
    p: int = 1

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.ndim != 1 or np.any(~(alpha > 0)):
            raise DomainError("alpha must be a positive vector")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise DomainError("lambda must be positive")
        if int(self.p) < 1:
            raise DomainError("dimensionality p must be a positive integer")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "p", int(self.p))


@dataclass(frozen=True)
class PrototypePrior:
    """Gaussian prior ``N(mean, diag(cov_diag))`` on every topic mean."""

    mean: np.ndarray
    cov_diag: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.broadcast_to(np.asarray(self.cov_diag, dtype=float), mean.shape).copy()
        if np.any(~(cov > 0)):
            raise DomainError("prototype prior covariance diagonal must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov_diag", cov)


def _interior(Z, name="membership") -> np.ndarray:
    Z = dist.check_simplex(Z, open_simplex=False)
    # half the clamp epsilon absorbs renormalisation round-off
    if np.any(Z < 0.5 * INTERIOR_EPS):
        raise DomainError(f"{name} has a boundary component (< {INTERIOR_EPS:g})")
    return Z


def log_fcp(z, s: float, pi, topics: TopicParams, m: float = 1.0, p: int | None = None) -> float:
    """Log of the modified fuzzy cluster prior at one membership vector.

    ``log Z(z, m, Y) - (m p / 2) sum_k log z_k + log Dir(z | s pi)``, where
    ``Z`` normalises the product of per-topic Gaussians with precisions
    ``z_k**m / s2``.
    """
    z = _interior(np.asarray(z, dtype=float))
    if not s > 0:
        raise DomainError("scale s must be positive")
    p = topics.p if p is None else int(p)
    pi = dist.check_simplex(pi)
    log_z = fdl_product_normalizer(z, topics, m)
    return float(log_z - 0.5 * m * p * np.log(z).sum() + dist.log_dirichlet_pdf(z, s * pi))


def log_membership_prior(Z, concentration) -> np.ndarray:
    """Row-wise ``log Dir(z_n | concentration)`` for an ``(N, K)`` array."""
    a = np.asarray(concentration, dtype=float)
    return dist.log_dirichlet_normalizer(a) + np.log(Z) @ (a - 1.0)


def log_unified_joint(X, Z, pi, s: float, topics: TopicParams, hyper: UnifiedHyper) -> float:
    """Joint log likelihood of the unified model, constants included.

    Sum of the Gaussian terms ``-p/2 log(2 pi s2) - z_nk**m |x_n - mu_k|^2 / (2 s2)``
    over every point and topic, the ``Dir(z_n | s pi)`` membership terms,
    ``log Dir(pi | alpha)`` and ``log lambda - lambda s``. With unit variance
    the Gaussian terms are exactly the printed ones.
    """
    X = np.asarray(X, dtype=float).reshape(-1, topics.p)
    Z = np.asarray(Z, dtype=float).reshape(-1, topics.K)
    if X.shape[0] != Z.shape[0]:
        raise DomainError(f"{X.shape[0]} points but {Z.shape[0]} membership vectors")
    if not s > 0:
        raise DomainError("scale s must be positive")
    pi = dist.check_simplex(pi)
    if pi.size != topics.K or hyper.alpha.size != topics.K:
        raise DomainError("pi, alpha and topics disagree on K")
    total = dist.log_dirichlet_pdf(pi, hyper.alpha) + np.log(hyper.lam) - hyper.lam * s
    if X.shape[0] == 0:
        return float(total)
    Z = _interior(Z)
    w = blend_weights(Z, hyper.m, normalize_weights=False)
    sq = np.sum((X[:, None, :] - topics.means) ** 2, axis=-1)
    s2 = topics.variance
    gauss = -0.5 * topics.p * topics.K * (dist.LOG_2PI + np.log(s2)) * X.shape[0] - 0.5 * np.sum(w * sq) / s2
    member = log_membership_prior(Z, s * pi).sum()
    return float(total + gauss + member)


def log_bfc_joint(X, Z, topics: TopicParams, prior: PrototypePrior, alpha, m: float = 1.0) -> float:
    """Bayesian fuzzy clustering joint, up to an additive constant.

    ``-1/2 sum_nk z_nk**m |x_n - mu_k|^2 / s2 + sum_nk (alpha_k - 1) log z_nk
    - 1/2 sum_k (mu_k - mu_y)^T Sigma_y^{-1} (mu_k - mu_y)``. The normalisers
    of every factor are dropped, matching the proportional form.
    """
    X = np.asarray(X, dtype=float).reshape(-1, topics.p)
    Z = _interior(np.asarray(Z, dtype=float).reshape(-1, topics.K))
    if X.shape[0] != Z.shape[0]:
        raise DomainError(f"{X.shape[0]} points but {Z.shape[0]} membership vectors")
    alpha = np.asarray(alpha, dtype=float)
    if prior.mean.size != topics.p:
        raise DomainError("prototype prior dimension does not match topics")
    w = blend_weights(Z, m, normalize_weights=False)
    sq = np.sum((X[:, None, :] - topics.means) ** 2, axis=-1)
    data = -0.5 * np.sum(w * sq) / topics.variance
    member = np.sum(np.log(Z) @ (alpha - 1.0))
    proto = -0.5 * np.sum((topics.means - prior.mean) ** 2 / prior.cov_diag)
    return float(data + member + proto)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(np.floor((hi - lo) / step + 0.5)) + 1
    return np.round(lo + step * np.arange(n), 12)


@dataclass(frozen=True)
class GridSpec:
    """Ranges for the log-likelihood grid. Ranges are ``(lo, hi, step)``."""

    x_range: tuple = (-0.5, 1.5, 0.05)
    z_range: tuple = (0.0, 1.0, 0.05)
    m_values: tuple = (-1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0)
    s_values: tuple = (0.1, 0.5, 1.0, 2.0, 5.0)
    eps: float = field(default=GRID_EPS)

    def __post_init__(self):
        for name in ("x_range", "z_range"):
            lo, hi, step = getattr(self, name)
            if not (step > 0 and lo < hi):
                raise DomainError(f"{name} needs step > 0 and lo < hi")
        lo, hi, _ = self.z_range
        if lo < 0 or hi > 1:
            raise DomainError("z_range must lie within [0, 1]")
        if not self.m_values or not self.s_values:
            raise DomainError("m_values and s_values must be non-empty")
        if any(not s > 0 for s in self.s_values):
            raise DomainError("s_values must be positive")
        object.__setattr__(self, "m_values", tuple(float(v) for v in self.m_values))
        object.__setattr__(self, "s_values", tuple(float(v) for v in self.s_values))

    @property
    def x_values(self) -> np.ndarray:
        return _axis(*self.x_range)

    @property
    def z_values(self) -> np.ndarray:
        return _axis(*self.z_range)


def likelihood_grid(spec: GridSpec, topics: TopicParams, hyper: UnifiedHyper, pi) -> np.ndarray:
    """Evaluate :func:`log_unified_joint` with one data point on a full grid.

    Returns an array of shape ``(len(m_values), len(s_values), n_x, n_z)``.
    The fuzzifier stored in ``hyper`` is ignored in favour of ``spec.m_values``.
    Memberships on the boundary are clamped to ``[eps, 1 - eps]``.
    """
    if topics.K != 2:
        raise DomainError("likelihood_grid is defined for K = 2")
    pi = dist.check_simplex(pi)
    xs, zs = spec.x_values, spec.z_values
    z1 = np.clip(zs, spec.eps, 1.0 - spec.eps)
    Z = np.stack([z1, 1.0 - z1], axis=-1)
    log_z = np.log(Z)
    if topics.p != 1:
        raise DomainError("likelihood_grid expects one-dimensional topics")
    sq = (xs[:, None] - topics.means[:, 0][None, :]) ** 2  # (n_x, K)
    s2 = topics.variance
    const = -0.5 * topics.K * (dist.LOG_2PI + np.log(s2))
    prior_pi = dist.log_dirichlet_pdf(pi, hyper.alpha)
    out = np.empty((len(spec.m_values), len(spec.s_values), xs.size, zs.size))
    for i, m in enumerate(spec.m_values):
        w = blend_weights(Z, m, normalize_weights=False)  # (n_z, K)
        gauss = const - 0.5 * (sq @ w.T) / s2  # (n_x, n_z)
        for j, s in enumerate(spec.s_values):
            a = s * pi
            member = dist.log_dirichlet_normalizer(a) + log_z @ (a - 1.0)
            rest = prior_pi + np.log(hyper.lam) - hyper.lam * s
            out[i, j] = gauss + member[None, :] + rest
    return out


def grid_argmax_z(grid: np.ndarray, spec: GridSpec, m: float, s: float, x: float) -> float:
    """Membership value maximising the grid row at ``(m, s, x)``."""
    i = spec.m_values.index(float(m))
    j = spec.s_values.index(float(s))
    xi = int(np.argmin(np.abs(spec.x_values - x)))
    return float(spec.z_values[int(np.argmax(grid[i, j, xi]))])
