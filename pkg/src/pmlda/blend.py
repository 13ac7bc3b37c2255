"""Convex blending of Gaussian topics in natural-parameter space.

A membership vector ``z`` and fuzzifier ``m`` define weights ``w_k = z_k**m``
(optionally renormalised to sum to one). Because the Gaussian is an
exponential family, the geometric product ``prod_k N(x | mu_k, s2 I)**w_k``
is, up to a constant in ``x``, again a Gaussian with

    precision = (sum_k w_k) / s2,    mean = sum_k w_k mu_k / sum_k w_k.

All functions accept batches: ``z`` of shape ``(..., K)`` and ``x`` of shape
``(..., p)`` broadcast against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import LOG_2PI, SIMPLEX_TOL
from .exceptions import DomainError


@dataclass(frozen=True)
class TopicParams:
    """K Gaussian topics sharing one isotropic variance.

    Parameters
    ----------
    means : array_like, shape (K, p)
    variance : float
        The shared ``sigma**2``. Per-topic variances are not supported.
    """

    means: np.ndarray
    variance: float

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        if means.ndim == 1:
            means = means[:, None]
        if means.ndim != 2 or means.shape[0] < 1:
            raise DomainError("topic means must have shape (K, p)")
        if not np.all(np.isfinite(means)):
            raise DomainError("topic means must be finite")
        var = np.asarray(self.variance, dtype=float)
        if var.ndim != 0:
            raise DomainError("a single shared scalar variance is required")
        if not (np.isfinite(var) and var > 0):
            raise DomainError(f"variance must be positive, got {self.variance}")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variance", float(var))

    @property
    def K(self) -> int:
        return self.means.shape[0]

    @property
    def p(self) -> int:
        return self.means.shape[1]

    def replace(self, means=None, variance=None) -> "TopicParams":
        return TopicParams(
            self.means if means is None else means,
            self.variance if variance is None else variance,
        )


@dataclass(frozen=True)
class BlendedGaussian:
    """Gaussian obtained by blending topics.

    ``log_partition_offset`` is ``log Z``: the geometric product of the topic
    densities equals ``exp(log_partition_offset)`` times this density.
    """

    mean: np.ndarray
    variance: float
    log_partition_offset: float

    @property
    def precision_scale(self) -> float:
        return 1.0 / self.variance


def blend_weights(z, m: float = 1.0, normalize_weights: bool = True) -> np.ndarray:
    """Return ``z**m`` (or ``z**m / sum z**m``) along the last axis.

    Zero components are allowed when ``z**m`` stays finite; negative
    components, off-simplex rows and non-positive weight totals are domain
    errors.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        raise DomainError("membership must be a vector")
    if not np.all(np.isfinite(z)) or np.any(z < 0):
        raise DomainError("membership components must be finite and non-negative")
    if np.any(np.abs(z.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
        raise DomainError("membership does not sum to 1")
    with np.errstate(divide="ignore"):
        w = z if m == 1 else np.power(z, m)
    total = w.sum(axis=-1, keepdims=True)
    if not np.all(np.isfinite(total)) or np.any(total <= 0):
        raise DomainError(f"sum of z**m is not a positive finite number (m={m})")
    return w / total if normalize_weights else w


def _check_dims(x, z, topics: TopicParams):
    if z.shape[-1] != topics.K:
        raise DomainError(f"membership has {z.shape[-1]} components, expected K={topics.K}")
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != topics.p:
        raise DomainError(f"x has dimension {x.shape[-1]}, topics have p={topics.p}")
    return x


def _moments(w, topics: TopicParams):
    total = w.sum(axis=-1)
    mean = (w @ topics.means) / total[..., None]
    # sum_k w_k |mu_k - mean|^2, the x-independent part of the product
    spread = np.einsum("...k,...kp->...", w, (topics.means - mean[..., None, :]) ** 2)
    return total, mean, spread


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def blend_natural(z, topics: TopicParams, m: float = 1.0, normalize_weights: bool = True) -> BlendedGaussian:
    """Blend the topics for a single membership vector ``z``."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise DomainError("blend_natural takes one membership vector; use blend_means for batches")
    _check_dims(topics.means[0], z, topics)
    w = blend_weights(z, m, normalize_weights)
    total, mean, _ = _moments(w, topics)
    variance = topics.variance / total
    return BlendedGaussian(mean, float(variance), float(_log_geometric_offset(w, topics)))


def blend_means(z, topics: TopicParams, m: float = 1.0) -> np.ndarray:
    """Means of the normalised-weight blend for a batch ``(..., K)`` of memberships."""
    w = blend_weights(z, m, normalize_weights=True)
    return w @ topics.means


def log_blend_pdf(x, z, topics: TopicParams, m: float = 1.0, normalize_weights: bool = True):
    """Normalised log density of the blended Gaussian at ``x``."""
    z = np.asarray(z, dtype=float)
    x = _check_dims(x, z, topics)
    w = blend_weights(z, m, normalize_weights)
    total, mean, _ = _moments(w, topics)
    prec = total / topics.variance
    sq = np.sum((x - mean) ** 2, axis=-1)
    return _scalar(0.5 * topics.p * (np.log(prec) - LOG_2PI) - 0.5 * prec * sq)


def log_product_form(x, z, topics: TopicParams, m: float = 1.0, normalize_weights: bool = False):
    """``sum_k w_k log N(x | mu_k, s2 I)``: the unnormalised geometric product."""
    z = np.asarray(z, dtype=float)
    x = _check_dims(x, z, topics)
    w = blend_weights(z, m, normalize_weights)
    sq = np.sum((x[..., None, :] - topics.means) ** 2, axis=-1)
    logp = -0.5 * topics.p * (LOG_2PI + np.log(topics.variance)) - 0.5 * sq / topics.variance
    with np.errstate(invalid="ignore"):
        terms = np.where(w == 0, 0.0, w * logp)
    return _scalar(terms.sum(axis=-1))


def _log_geometric_offset(w, topics: TopicParams):
    total, _, spread = _moments(w, topics)
    p, s2 = topics.p, topics.variance
    return (
        -0.5 * p * total * (LOG_2PI + np.log(s2))
        + 0.5 * p * LOG_2PI
        - 0.5 * p * np.log(total / s2)
        - 0.5 * spread / s2
    )


def fdl_normalizer(z, topics: TopicParams, m: float = 1.0):
    """Log normaliser of the fuzzy data likelihood relative to the geometric product.

    ``exp(log_product_form(x, z) - fdl_normalizer(z))`` integrates to one over
    ``x``, with weights ``z**m`` left unnormalised.
    """
    z = np.asarray(z, dtype=float)
    _check_dims(topics.means[0], z, topics)
    w = blend_weights(z, m, normalize_weights=False)
    return _scalar(_log_geometric_offset(w, topics))


def log_scaled_gaussian_product(x, z, topics: TopicParams, m: float = 1.0):
    """``sum_k log N(x | mu_k, precision z_k**m / s2)``.

    This is the per-topic product used by the fuzzy data likelihood; unlike
    :func:`log_product_form` each factor carries its own determinant term
    ``(p/2) log(z_k**m)``.
    """
    z = np.asarray(z, dtype=float)
    x = _check_dims(x, z, topics)
    w = blend_weights(z, m, normalize_weights=False)
    q = w / topics.variance
    sq = np.sum((x[..., None, :] - topics.means) ** 2, axis=-1)
    with np.errstate(divide="ignore"):
        terms = 0.5 * topics.p * (np.log(q) - LOG_2PI) - 0.5 * q * sq
    return _scalar(terms.sum(axis=-1))


def fdl_product_normalizer(z, topics: TopicParams, m: float = 1.0):
    """``log Z(z, m, Y)`` for the scaled-precision Gaussian product.

    ``exp(log_scaled_gaussian_product(x, z) - Z)`` is the normalised blend.
    Diverges to ``-inf`` when any component of ``z`` is zero.
    """
    z = np.asarray(z, dtype=float)
    _check_dims(topics.means[0], z, topics)
    w = blend_weights(z, m, normalize_weights=False)
    total, _, spread = _moments(w, topics)
    p, s2 = topics.p, topics.variance
    with np.errstate(divide="ignore"):
        log_q = np.log(w / s2).sum(axis=-1)
    out = (
        -0.5 * p * topics.K * LOG_2PI
        + 0.5 * p * log_q
        + 0.5 * p * LOG_2PI
        - 0.5 * p * np.log(total / s2)
        - 0.5 * spread / s2
    )
    return _scalar(out)
