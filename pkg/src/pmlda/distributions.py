"""Log densities and seeded samplers for the Dirichlet, isotropic Gaussian
and exponential distributions.

Everything is evaluated in the log domain. Random draws always come from an
explicit :class:`numpy.random.Generator`; use :func:`rng_stream` to obtain
reproducible, independent per-entity streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import DomainError

SIMPLEX_TOL = 1e-9

LOG_2PI = float(np.log(2.0 * np.pi))


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Return the generator for stream ``stream_id`` of master ``seed``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so
    equal ``(seed, stream_id)`` pairs give bit-identical sequences and
    distinct stream ids give statistically independent ones.
    """
    if seed < 0 or stream_id < 0:
        raise DomainError("seed and stream_id must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class DirichletParams:
    concentration: np.ndarray

    def __post_init__(self):
        conc = np.asarray(self.concentration, dtype=float)
        if conc.ndim != 1 or conc.size == 0:
            raise DomainError("Dirichlet concentration must be a non-empty vector")
        if not np.all(np.isfinite(conc)) or np.any(conc <= 0):
            raise DomainError(f"Dirichlet concentration must be positive, got {conc}")
        object.__setattr__(self, "concentration", conc)

    @property
    def K(self) -> int:
        return self.concentration.size


@dataclass(frozen=True)
class IsotropicGaussian:
    """Gaussian with covariance ``variance * I``."""

    mean: np.ndarray
    variance: float

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if mean.ndim != 1:
            raise DomainError("Gaussian mean must be a vector")
        if not (np.isfinite(self.variance) and self.variance > 0):
            raise DomainError(f"variance must be positive, got {self.variance}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", float(self.variance))

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class ExponentialParams:
    rate: float

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise DomainError(f"exponential rate must be positive, got {self.rate}")
        object.__setattr__(self, "rate", float(self.rate))


def _as_dirichlet(params) -> DirichletParams:
    return params if isinstance(params, DirichletParams) else DirichletParams(params)


def check_simplex(z, *, open_simplex: bool = True, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate that the last axis of ``z`` lies on the probability simplex."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise DomainError("simplex vector contains non-finite values")
    if open_simplex and np.any(z <= 0):
        raise DomainError("simplex vector must be strictly positive")
    if np.any(z < 0):
        raise DomainError("simplex vector has negative components")
    if np.any(np.abs(z.sum(axis=-1) - 1.0) > tol):
        raise DomainError("simplex vector does not sum to 1")
    return z


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("log_gamma requires x > 0")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def log_dirichlet_normalizer(concentration) -> float:
    """``log Gamma(sum a) - sum log Gamma(a_k)``."""
    a = np.asarray(concentration, dtype=float)
    return float(special.gammaln(a.sum()) - special.gammaln(a).sum())


def log_dirichlet_pdf(z, params) -> float:
    """Log density of ``Dir(params)`` at the interior simplex point ``z``.

    Examples
    --------
    >>> round(log_dirichlet_pdf([0.5, 0.5], [2.0, 2.0]), 12) == round(np.log(1.5), 12)
    True
    """
    params = _as_dirichlet(params)
    z = check_simplex(z)
    if z.shape[-1] != params.K:
        raise DomainError(f"length mismatch: z has {z.shape[-1]}, concentration {params.K}")
    a = params.concentration
    out = log_dirichlet_normalizer(a) + np.sum((a - 1.0) * np.log(z), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def sample_dirichlet(params, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw from ``Dir(params)``.

    Gamma variates are built in log space (``G(a) = G(a + 1) * U**(1/a)`` for
    ``a < 1``) so that very small concentrations still produce a proper
    simplex point instead of an all-zero vector.
    """
    params = _as_dirichlet(params)
    a = params.concentration
    shape = (a.size,) if size is None else tuple(np.atleast_1d(size)) + (a.size,)
    small = a < 1.0
    g = rng.standard_gamma(np.where(small, a + 1.0, a), size=shape)
    u = rng.random(size=shape)
    with np.errstate(divide="ignore"):
        log_g = np.log(g) + np.where(small, np.log(u) / a, 0.0)
    z = np.exp(log_g - log_g.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def log_gaussian_pdf(x, g: IsotropicGaussian):
    """Log density of an isotropic Gaussian; ``x`` may be ``(..., p)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != g.dim:
        raise DomainError(f"dimension mismatch: x has {x.shape[-1]}, mean has {g.dim}")
    sq = np.sum((x - g.mean) ** 2, axis=-1)
    out = -0.5 * g.dim * (LOG_2PI + np.log(g.variance)) - 0.5 * sq / g.variance
    return float(out) if np.ndim(out) == 0 else out


def sample_gaussian(g: IsotropicGaussian, rng: np.random.Generator, size=None) -> np.ndarray:
    shape = (g.dim,) if size is None else tuple(np.atleast_1d(size)) + (g.dim,)
    return g.mean + np.sqrt(g.variance) * rng.standard_normal(shape)


def sample_exponential(params: ExponentialParams, rng: np.random.Generator, size=None):
    """Draw from the exponential distribution with mean ``1 / rate``.

    Draws are strictly positive; an exact zero from the underlying generator
    is replaced by the smallest positive normal double.
    """
    if not isinstance(params, ExponentialParams):
        params = ExponentialParams(params)
    draw = rng.exponential(1.0 / params.rate, size=size)
    draw = np.maximum(draw, np.finfo(float).tiny)
    return float(draw) if size is None else draw


def log_exponential_pdf(s, params: ExponentialParams) -> float:
    if not isinstance(params, ExponentialParams):
        params = ExponentialParams(params)
    if s < 0:
        return -np.inf
    return float(np.log(params.rate) - params.rate * s)
