"""Metropolis-within-Gibbs MAP estimation for PM-LDA.

One iteration visits, for every document, the topic proportion ``pi_d``,
the scale ``s_d`` and then every word membership ``z_dn``; then every topic
mean ``mu_k``; then the shared variance ``s2``. All proposals are accepted
with the usual Metropolis-Hastings rule evaluated in the log domain.

Word memberships within a document are conditionally independent given
``pi_d``, ``s_d`` and the topics, so the per-word updates of one document
are carried out as a single vectorised step; the result has the same
distribution as visiting the words one at a time.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .blend import TopicParams, blend_weights
from .exceptions import DomainError
from .model import (
    Corpus,
    Document,
    DocumentState,
    Hyperparams,
    clamp_simplex,
    log_corpus_posterior,
    log_doc_joint,
    log_word_likelihood,
)

MOVES = ("pi", "s", "z", "z_prior", "mu", "mu_local", "sigma")


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler settings.

    Parameters
    ----------
    T : int
        Number of iterations.
    burn_in : int, optional
        Iterations discarded before retaining samples; defaults to ``T // 2``.
    thinning : int
        Keep every ``thinning``-th post-burn-in iteration.
    seed : int
        Master seed. Stream 0 drives the topic moves, stream ``d + 1`` the
        moves of document ``d``.
    f : float
        Scale of the data covariance in the independence proposal for ``mu_k``.
    jitter : float
        Width of the multiplicative perturbation of the variance candidate.
    sigma_proposal : {"random_walk", "spread"}
        ``"spread"`` draws ``base * U(1 - jitter, 1 + jitter)`` where ``base`` is
        half the spread of squared distances to the data mean. ``"random_walk"``
        perturbs the current value by a log-uniform factor in
        ``[1 / (1 + jitter), 1 + jitter]``. Both start from ``base``.
    z_prior_move : bool
        After the uniform-simplex move for the memberships, a second
        independence move with candidates from ``Dir(s_d pi_d)``. It reaches
        the near-vertex memberships that dominate the posterior when
        ``s_d pi_dk < 1``.
    mu_rw_scale : float
        After each independence move for ``mu_k``, a Gaussian random-walk move
        with standard deviation ``mu_rw_scale * sqrt(s2)``. 0 disables it.
    store_memberships : bool
        Keep the word memberships of every retained sample (memory heavy on
        large corpora). The MAP estimate always keeps them.
    """

    T: int = 2000
    burn_in: int | None = None
    thinning: int = 1
    seed: int = 0
    f: float = 1.0
    jitter: float = 0.5
    sigma_proposal: str = "random_walk"
    mu_rw_scale: float = 0.05
    z_prior_move: bool = True
    parallel: bool = False
    max_workers: int | None = None
    store_memberships: bool = True
    update_pi: bool = True
    update_s: bool = True
    update_z: bool = True
    update_mu: bool = True
    update_sigma: bool = True

    def __post_init__(self):
        if self.T < 1:
            raise DomainError("T must be a positive integer")
        burn = self.T // 2 if self.burn_in is None else self.burn_in
        if not 0 <= burn < self.T:
            raise DomainError(f"burn_in must satisfy 0 <= burn_in < T (got {burn}, T={self.T})")
        object.__setattr__(self, "burn_in", int(burn))
        if self.thinning < 1:
            raise DomainError("thinning must be a positive integer")
        if not self.f > 0:
            raise DomainError("f must be positive")
        if not 0 <= self.jitter < 1:
            raise DomainError("jitter must lie in [0, 1)")
        if self.sigma_proposal not in ("random_walk", "spread"):
            raise DomainError(f"unknown sigma_proposal {self.sigma_proposal!r}")
        if self.mu_rw_scale < 0:
            raise DomainError("mu_rw_scale must be non-negative")
        if self.seed < 0:
            raise DomainError("seed must be non-negative")


@dataclass(frozen=True)
class ProposalStats:
    """Data mean, data covariance diagonal and the variance-candidate base."""

    mean: np.ndarray
    cov_diag: np.ndarray
    sigma_base: float

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "ProposalStats":
        X = corpus.stacked_words()
        mean = X.mean(axis=0)
        cov = X.var(axis=0, ddof=1) if X.shape[0] > 1 else np.ones(X.shape[1])
        cov = np.where(cov > 0, cov, 1.0)
        d2 = np.sum((X - mean) ** 2, axis=1)
        base = 0.5 * (d2.max() - d2.min())
        if not base > 0:
            base = float(np.mean(cov))
        return cls(mean, cov, float(base))


@dataclass
class SampleChain:
    """Retained samples in arrays indexed by retained-sample number."""

    iterations: np.ndarray
    log_posterior: np.ndarray
    means: np.ndarray  # (n, K, p)
    variances: np.ndarray  # (n,)
    pis: np.ndarray  # (n, D, K)
    scales: np.ndarray  # (n, D)
    memberships: list | None  # n entries of per-document (N_d, K) lists
    accepted: dict = field(default_factory=dict)
    proposed: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.log_posterior.size

    def acceptance_rates(self) -> dict:
        return {k: (self.accepted[k] / self.proposed[k]) for k in MOVES if self.proposed.get(k)}

    def state(self, i: int):
        """Rebuild ``(states, topics)`` for retained sample ``i``."""
        if self.memberships is None:
            raise DomainError("memberships were not stored for this chain")
        topics = TopicParams(self.means[i], self.variances[i])
        states = [DocumentState(self.pis[i, d], self.scales[i, d], Z) for d, Z in enumerate(self.memberships[i])]
        return states, topics


@dataclass
class MapEstimate:
    states: list
    topics: TopicParams
    log_posterior: float
    iteration: int


# ---------------------------------------------------------------------------
# acceptance helpers


def _accept(log_ratio, rng: np.random.Generator):
    """Vectorised ``u < min(1, exp(log_ratio))`` without overflow."""
    log_ratio = np.asarray(log_ratio, dtype=float)
    u = rng.random(size=log_ratio.shape)
    with np.errstate(divide="ignore"):
        out = (log_ratio >= 0) | (np.log(u) < log_ratio)
    return bool(out) if out.ndim == 0 else out


def _membership_term(log_z_sum, n: int, pi, s: float) -> float:
    a = s * pi
    return n * dist.log_dirichlet_normalizer(a) + float(np.dot(a - 1.0, log_z_sum))


class _DocState:
    """Mutable working copy of one document's state with cached sums."""

    __slots__ = ("doc", "pi", "s", "Z", "log_z_sum", "word_ll")

    def __init__(self, doc: Document, pi, s, Z, topics: TopicParams, m: float):
        self.doc = doc
        self.pi = clamp_simplex(pi)
        self.s = float(s)
        self.Z = clamp_simplex(Z)
        self.log_z_sum = np.log(self.Z).sum(axis=0)
        self.word_ll = log_word_likelihood(doc.words, self.Z, topics, m, validate=False)

    def refresh_likelihood(self, topics: TopicParams, m: float):
        self.word_ll = log_word_likelihood(self.doc.words, self.Z, topics, m, validate=False)

    def to_state(self) -> DocumentState:
        return DocumentState(self.pi.copy(), self.s, self.Z.copy())


def _pi_move(ds: _DocState, hyper: Hyperparams, rng) -> bool:
    cand = clamp_simplex(dist.sample_dirichlet(dist.DirichletParams(hyper.alpha), rng))
    n = ds.doc.n_words
    lp_new = dist.log_dirichlet_pdf(cand, hyper.alpha)
    lp_old = dist.log_dirichlet_pdf(ds.pi, hyper.alpha)
    # every other factor of the document joint is unchanged and cancels
    log_a = (
        (lp_new + _membership_term(ds.log_z_sum, n, cand, ds.s))
        - (lp_old + _membership_term(ds.log_z_sum, n, ds.pi, ds.s))
        + lp_old
        - lp_new
    )
    if _accept(log_a, rng):
        ds.pi = cand
        return True
    return False


def _s_move(ds: _DocState, hyper: Hyperparams, rng) -> bool:
    expo = dist.ExponentialParams(hyper.lam)
    cand = dist.sample_exponential(expo, rng)
    n = ds.doc.n_words
    lp_new = dist.log_exponential_pdf(cand, expo)
    lp_old = dist.log_exponential_pdf(ds.s, expo)
    log_a = (
        (lp_new + _membership_term(ds.log_z_sum, n, ds.pi, cand))
        - (lp_old + _membership_term(ds.log_z_sum, n, ds.pi, ds.s))
        + lp_old
        - lp_new
    )
    if _accept(log_a, rng):
        ds.s = cand
        return True
    return False


def _z_move(ds: _DocState, topics: TopicParams, hyper: Hyperparams, rng) -> int:
    n, K = ds.Z.shape
    # Dir(1_K) candidates as normalised unit exponentials
    e = rng.standard_exponential((n, K))
    cand = clamp_simplex(e / e.sum(axis=1, keepdims=True))
    a = ds.s * ds.pi - 1.0
    log_cand = np.log(cand)
    ll_new = log_word_likelihood(ds.doc.words, cand, topics, hyper.m, validate=False)
    # the Dir(s pi) normaliser is common to both sides
    log_a = (ll_new + log_cand @ a) - (ds.word_ll + np.log(ds.Z) @ a)
    acc = _accept(log_a, rng)
    if np.any(acc):
        ds.Z[acc] = cand[acc]
        ds.word_ll[acc] = ll_new[acc]
        ds.log_z_sum = np.log(ds.Z).sum(axis=0)
    return int(np.count_nonzero(acc))


def _z_prior_move(ds: _DocState, topics: TopicParams, hyper: Hyperparams, rng) -> int:
    n = ds.Z.shape[0]
    conc = np.maximum(ds.s * ds.pi, np.finfo(float).tiny)
    cand = clamp_simplex(dist.sample_dirichlet(dist.DirichletParams(conc), rng, size=n))
    ll_new = log_word_likelihood(ds.doc.words, cand, topics, hyper.m, validate=False)
    # proposal equals the membership prior, so only the likelihood ratio remains
    acc = _accept(ll_new - ds.word_ll, rng)
    if np.any(acc):
        ds.Z[acc] = cand[acc]
        ds.word_ll[acc] = ll_new[acc]
        ds.log_z_sum = np.log(ds.Z).sum(axis=0)
    return int(np.count_nonzero(acc))


def _doc_sweep(ds: _DocState, topics: TopicParams, hyper: Hyperparams, cfg: SamplerConfig, rng):
    counts = {"pi": 0, "s": 0, "z": 0, "z_prior": 0}
    if cfg.update_pi:
        counts["pi"] = int(_pi_move(ds, hyper, rng))
    if cfg.update_s:
        counts["s"] = int(_s_move(ds, hyper, rng))
    if cfg.update_z:
        counts["z"] = _z_move(ds, topics, hyper, rng)
        if cfg.z_prior_move:
            counts["z_prior"] = _z_prior_move(ds, topics, hyper, rng)
    return counts


# ---------------------------------------------------------------------------
# public single-move API


def step_pi(doc: Document, state: DocumentState, topics: TopicParams, hyper: Hyperparams, rng):
    """Independence move for ``pi_d`` with candidates from ``Dir(alpha)``.

    Returns ``(new_state, accepted)``.
    """
    ds = _DocState(doc, state.pi, state.s, state.memberships, topics, hyper.m)
    ok = _pi_move(ds, hyper, rng)
    return ds.to_state(), ok


def step_s(doc: Document, state: DocumentState, topics: TopicParams, hyper: Hyperparams, rng):
    """Independence move for ``s_d`` with candidates from ``Exp(lambda)``."""
    ds = _DocState(doc, state.pi, state.s, state.memberships, topics, hyper.m)
    ok = _s_move(ds, hyper, rng)
    return ds.to_state(), ok


def step_z(doc: Document, state: DocumentState, topics: TopicParams, hyper: Hyperparams, rng):
    """Uniform-simplex independence move for every word membership.

    Returns ``(new_state, n_accepted)``.
    """
    ds = _DocState(doc, state.pi, state.s, state.memberships, topics, hyper.m)
    n_acc = _z_move(ds, topics, hyper, rng)
    return ds.to_state(), n_acc


class _TopicWork:
    """Stacked words and blend weights of the whole corpus."""

    def __init__(self, X: np.ndarray, W: np.ndarray, topics: TopicParams):
        self.X = X
        self.W = W
        self.resid = X - W @ topics.means
        self.sq = float(np.sum(self.resid**2))

    def loglik(self, sq: float, s2: float) -> float:
        n, p = self.X.shape
        return -0.5 * n * p * (dist.LOG_2PI + math.log(s2)) - 0.5 * sq / s2


def _stack(docs: list, hyper: Hyperparams, topics: TopicParams) -> _TopicWork:
    X = np.concatenate([ds.doc.words for ds in docs], axis=0)
    W = blend_weights(np.concatenate([ds.Z for ds in docs], axis=0), hyper.m, normalize_weights=True)
    return _TopicWork(X, W, topics)


def _mu_candidate_sq(work: _TopicWork, k: int, delta: np.ndarray) -> tuple[np.ndarray, float]:
    resid = work.resid - np.outer(work.W[:, k], delta)
    return resid, float(np.sum(resid**2))


def _mu_move(work, topics, k, proposal: ProposalStats, f: float, rng) -> tuple[TopicParams, bool]:
    prop_var = f * proposal.cov_diag
    cand = proposal.mean + np.sqrt(prop_var) * rng.standard_normal(topics.p)
    old = topics.means[k]
    resid, sq = _mu_candidate_sq(work, k, cand - old)

    def log_q(mu):
        return -0.5 * np.sum((mu - proposal.mean) ** 2 / prop_var)

    log_a = work.loglik(sq, topics.variance) - work.loglik(work.sq, topics.variance) + log_q(old) - log_q(cand)
    if _accept(log_a, rng):
        means = topics.means.copy()
        means[k] = cand
        work.resid, work.sq = resid, sq
        return topics.replace(means=means), True
    return topics, False


def _mu_local_move(work, topics, k, scale: float, rng) -> tuple[TopicParams, bool]:
    step = scale * math.sqrt(topics.variance) * rng.standard_normal(topics.p)
    resid, sq = _mu_candidate_sq(work, k, step)
    log_a = work.loglik(sq, topics.variance) - work.loglik(work.sq, topics.variance)
    if _accept(log_a, rng):
        means = topics.means.copy()
        means[k] = topics.means[k] + step
        work.resid, work.sq = resid, sq
        return topics.replace(means=means), True
    return topics, False


def _sigma_move(work, topics, proposal: ProposalStats, cfg: SamplerConfig, rng) -> tuple[TopicParams, bool]:
    cur = topics.variance
    if cfg.sigma_proposal == "spread":
        u = rng.uniform(1.0 - cfg.jitter, 1.0 + cfg.jitter)
        cand = proposal.sigma_base * u
        hastings = 0.0
    else:
        delta = math.log1p(cfg.jitter)
        cand = cur * math.exp(rng.uniform(-delta, delta))
        hastings = math.log(cand / cur)
    if not cand > 0:
        return topics, False
    log_a = work.loglik(work.sq, cand) - work.loglik(work.sq, cur) + hastings
    if _accept(log_a, rng):
        return topics.replace(variance=cand), True
    return topics, False


def step_mu(k: int, corpus: Corpus, states, topics: TopicParams, hyper: Hyperparams, proposal: ProposalStats, f: float, rng):
    """Independence move for ``mu_k`` with proposals from ``N(mu_D, f Sigma_D)``.

    The acceptance ratio carries the Hastings correction of the proposal
    densities. Returns ``(new_topics, accepted)``.
    """
    docs = [_DocState(d, st.pi, st.s, st.memberships, topics, hyper.m) for d, st in zip(corpus, states)]
    work = _stack(docs, hyper, topics)
    return _mu_move(work, topics, k, proposal, f, rng)


def step_sigma(corpus: Corpus, states, topics: TopicParams, hyper: Hyperparams, proposal: ProposalStats, jitter: float, rng, sigma_proposal: str = "spread"):
    """Move for the shared variance; see :class:`SamplerConfig` for the candidate rules."""
    docs = [_DocState(d, st.pi, st.s, st.memberships, topics, hyper.m) for d, st in zip(corpus, states)]
    work = _stack(docs, hyper, topics)
    cfg = SamplerConfig(T=1, burn_in=0, jitter=jitter, sigma_proposal=sigma_proposal)
    return _sigma_move(work, topics, proposal, cfg, rng)


# ---------------------------------------------------------------------------
# driver


def _draw_initial(corpus: Corpus, hyper: Hyperparams, config: SamplerConfig, proposal: ProposalStats, rng0, rngs):
    K = hyper.K
    means = proposal.mean + np.sqrt(config.f * proposal.cov_diag) * rng0.standard_normal((K, corpus.p))
    topics = TopicParams(means, proposal.sigma_base)
    states = []
    for doc, rng in zip(corpus, rngs):
        pi = dist.sample_dirichlet(dist.DirichletParams(hyper.alpha), rng)
        s = dist.sample_exponential(dist.ExponentialParams(hyper.lam), rng)
        Z = dist.sample_dirichlet(dist.DirichletParams(np.ones(K)), rng, size=doc.n_words)
        states.append(DocumentState(clamp_simplex(pi), s, clamp_simplex(Z)))
    return states, topics


def initial_state(corpus: Corpus, hyper: Hyperparams, config: SamplerConfig, proposal: ProposalStats | None = None):
    """Starting point used by :func:`run_sampler`.

    Topic means come from the ``mu`` proposal, the variance from the spread
    statistic, and ``pi_d``, ``s_d``, ``z_dn`` from ``Dir(alpha)``,
    ``Exp(lambda)`` and ``Dir(1_K)``.
    """
    proposal = proposal or ProposalStats.from_corpus(corpus)
    rngs = [dist.rng_stream(config.seed, d + 1) for d in range(len(corpus))]
    return _draw_initial(corpus, hyper, config, proposal, dist.rng_stream(config.seed, 0), rngs)


def run_sampler(
    corpus: Corpus,
    hyper: Hyperparams,
    config: SamplerConfig | None = None,
    *,
    init_states=None,
    init_topics: TopicParams | None = None,
    callback=None,
):
    """Run the Metropolis-within-Gibbs sampler.

    Parameters
    ----------
    corpus, hyper
        Data and hyperparameters.
    config : SamplerConfig
    init_states, init_topics : optional
        Starting point; missing parts come from :func:`initial_state`.
        Frozen parameters (``update_* = False``) keep their initial values.
    callback : callable, optional
        Called as ``callback(t, states_fn, topics)`` after every iteration.

    Returns
    -------
    chain : SampleChain
    map_estimate : MapEstimate
        The retained sample with the largest log posterior.
    """
    cfg = config or SamplerConfig()
    if hyper.K < 2:
        raise DomainError("K must be at least 2")
    proposal = ProposalStats.from_corpus(corpus)
    rng0 = dist.rng_stream(cfg.seed, 0)
    rngs = [dist.rng_stream(cfg.seed, d + 1) for d in range(len(corpus))]
    # always drawn, so stream positions do not depend on what the caller supplies
    drawn_states, drawn_topics = _draw_initial(corpus, hyper, cfg, proposal, rng0, rngs)
    states0 = list(init_states) if init_states is not None else drawn_states
    topics = init_topics if init_topics is not None else drawn_topics
    if len(states0) != len(corpus):
        raise DomainError("need one initial state per document")
    if topics.K != hyper.K or topics.p != corpus.p:
        raise DomainError("initial topics do not match K or p")

    docs = [_DocState(d, st.pi, st.s, st.memberships, topics, hyper.m) for d, st in zip(corpus, states0)]

    accepted = {k: 0 for k in MOVES}
    proposed = {k: 0 for k in MOVES}
    n_words = sum(d.n_words for d in corpus)
    keep = [t for t in range(cfg.burn_in, cfg.T) if (t - cfg.burn_in) % cfg.thinning == 0]
    n_keep = len(keep)
    D, K, p = len(docs), hyper.K, corpus.p
    rec_iter = np.empty(n_keep, dtype=np.int64)
    rec_lp = np.empty(n_keep)
    rec_means = np.empty((n_keep, K, p))
    rec_var = np.empty(n_keep)
    rec_pi = np.empty((n_keep, D, K))
    rec_s = np.empty((n_keep, D))
    rec_Z = [] if cfg.store_memberships else None
    best = None
    i_keep = 0

    pool = ThreadPoolExecutor(max_workers=cfg.max_workers) if cfg.parallel and D > 1 else None
    try:
        for t in range(cfg.T):
            if pool is None:
                results = [_doc_sweep(ds, topics, hyper, cfg, r) for ds, r in zip(docs, rngs)]
            else:
                results = list(pool.map(lambda a: _doc_sweep(a[0], topics, hyper, cfg, a[1]), zip(docs, rngs)))
            for c in results:
                for key, v in c.items():
                    accepted[key] += v
            proposed["pi"] += D if cfg.update_pi else 0
            proposed["s"] += D if cfg.update_s else 0
            proposed["z"] += n_words if cfg.update_z else 0
            proposed["z_prior"] += n_words if cfg.update_z and cfg.z_prior_move else 0

            if cfg.update_mu or cfg.update_sigma:
                work = _stack(docs, hyper, topics)
                if cfg.update_mu:
                    for k in range(K):
                        topics, ok = _mu_move(work, topics, k, proposal, cfg.f, rng0)
                        accepted["mu"] += ok
                        proposed["mu"] += 1
                        if cfg.mu_rw_scale > 0:
                            topics, ok = _mu_local_move(work, topics, k, cfg.mu_rw_scale, rng0)
                            accepted["mu_local"] += ok
                            proposed["mu_local"] += 1
                if cfg.update_sigma:
                    topics, ok = _sigma_move(work, topics, proposal, cfg, rng0)
                    accepted["sigma"] += ok
                    proposed["sigma"] += 1
                for ds in docs:
                    ds.refresh_likelihood(topics, hyper.m)

            if callback is not None:
                callback(t, lambda: [ds.to_state() for ds in docs], topics)

            if i_keep < n_keep and t == keep[i_keep]:
                states = [ds.to_state() for ds in docs]
                lp = log_corpus_posterior(corpus, states, topics, hyper)
                rec_iter[i_keep] = t
                rec_lp[i_keep] = lp
                rec_means[i_keep] = topics.means
                rec_var[i_keep] = topics.variance
                rec_pi[i_keep] = [st.pi for st in states]
                rec_s[i_keep] = [st.s for st in states]
                if rec_Z is not None:
                    rec_Z.append([st.memberships for st in states])
                if best is None or lp > best.log_posterior:
                    best = MapEstimate(states, topics, lp, t)
                i_keep += 1
    finally:
        if pool is not None:
            pool.shutdown()

    chain = SampleChain(rec_iter, rec_lp, rec_means, rec_var, rec_pi, rec_s, rec_Z, accepted, proposed)
    return chain, best


# ---------------------------------------------------------------------------
# oracles and evaluation helpers


def grid_posterior_oracle(doc: Document, pi, s: float, topics: TopicParams, hyper: Hyperparams, resolution: float = 0.005):
    """Discretised posterior of a single word's membership for ``K = 2``.

    Evaluates :func:`log_doc_joint` at ``z_1`` on an evenly spaced grid from
    ``eps`` to ``1 - eps`` and normalises with trapezoid weights, so each
    returned mass approximates the posterior probability of the grid cell
    centred on that point.

    Returns
    -------
    z1 : ndarray
    mass : ndarray
        Non-negative, sums to one.
    """
    if hyper.K != 2 or topics.K != 2:
        raise DomainError("the grid oracle is defined for K = 2")
    if doc.n_words != 1:
        raise DomainError("the grid oracle takes a single-word document")
    n = int(round(1.0 / resolution)) + 1
    z1 = np.linspace(0.0, 1.0, n)
    zc = np.clip(z1, 1e-9, 1.0 - 1e-9)
    logp = np.array([
        log_doc_joint(doc, DocumentState(pi, s, np.array([[a, 1.0 - a]])), topics, hyper) for a in zc
    ])
    w = np.ones(n)
    w[[0, -1]] = 0.5
    mass = w * np.exp(logp - logp.max())
    return z1, mass / mass.sum()


def histogram_on_grid(samples, grid: np.ndarray) -> np.ndarray:
    """Fraction of ``samples`` in the cell around each grid point.

    Cell edges sit halfway between neighbouring points; the outer cells end
    at the first and last grid values.
    """
    edges = np.concatenate([[grid[0]], 0.5 * (grid[1:] + grid[:-1]), [grid[-1]]])
    counts, _ = np.histogram(np.clip(samples, grid[0], grid[-1]), bins=edges)
    return counts / counts.sum()


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def align_topics(estimated, truth) -> tuple:
    """Permutation of estimated topics minimising summed mean distance to truth.

    Exhaustive over permutations; intended for ``K <= 8``.
    """
    est = np.asarray(estimated, dtype=float)
    tru = np.asarray(truth, dtype=float)
    K = est.shape[0]
    if K > 8:
        raise DomainError("exhaustive alignment supports K <= 8")
    dmat = np.linalg.norm(est[:, None, :] - tru[None, :, :], axis=-1)
    best = min(itertools.permutations(range(K)), key=lambda perm: sum(dmat[perm[j], j] for j in range(K)))
    return tuple(best)
