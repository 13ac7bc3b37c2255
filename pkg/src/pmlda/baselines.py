"""Comparison methods: fuzzy c-means, k-means quantisation and discrete LDA
fitted by collapsed Gibbs sampling.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError


def _sq_dists(points: np.ndarray, centers: np.ndarray, chunk: int = 65536) -> np.ndarray:
    out = np.empty((points.shape[0], centers.shape[0]))
    cn = np.sum(centers**2, axis=1)
    for i in range(0, points.shape[0], chunk):
        P = points[i : i + chunk]
        d = np.sum(P**2, axis=1)[:, None] - 2.0 * P @ centers.T + cn[None, :]
        out[i : i + chunk] = np.maximum(d, 0.0)
    return out


def _as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise DomainError("points must be a finite (N, p) array")
    return X


# ---------------------------------------------------------------------------
# fuzzy c-means


@dataclass
class FcmState:
    centroids: np.ndarray
    memberships: np.ndarray
    m: float
    objective: float
    history: list = field(default_factory=list)
    n_iter: int = 0


def fcm_objective(points, centroids, memberships, m: float) -> float:
    """``sum_nk z_nk**m |x_n - mu_k|^2``."""
    X = _as_points(points)
    d2 = np.sum((X[:, None, :] - np.asarray(centroids, dtype=float)[None]) ** 2, axis=-1)
    return float(np.sum(np.power(memberships, m) * d2))


def fcm_memberships(points, centroids, m: float) -> np.ndarray:
    """Membership update for fixed centroids.

    ``z_nk = 1 / sum_j (d2_nk / d2_nj) ** (1 / (m - 1))``. A point lying exactly
    on a centroid gets full membership in the first such centroid.
    """
    if not m > 1:
        raise DomainError("fuzzifier m must exceed 1")
    X = _as_points(points)
    C = np.asarray(centroids, dtype=float).reshape(-1, X.shape[1])
    d2 = np.sum((X[:, None, :] - C[None]) ** 2, axis=-1)
    zero = d2 == 0
    hit = zero.any(axis=1)
    U = np.zeros_like(d2)
    if np.any(~hit):
        dd = d2[~hit]
        ratio = (dd[:, :, None] / dd[:, None, :]) ** (1.0 / (m - 1.0))
        U[~hit] = 1.0 / ratio.sum(axis=2)
    if np.any(hit):
        first = np.argmax(zero[hit], axis=1)
        U[np.flatnonzero(hit), first] = 1.0
    return U


def fcm_fit(points, K: int, m: float = 1.5, tol: float = 1e-6, max_iter: int = 300, rng: np.random.Generator | None = None) -> FcmState:
    """Fuzzy c-means by alternating centroid and membership updates.

    Starts from memberships drawn uniformly on the simplex. Stops once an
    iteration lowers the objective by less than ``tol``. ``history`` holds
    the objective after every iteration.
    """
    X = _as_points(points)
    if not m > 1:
        raise DomainError("fuzzifier m must exceed 1")
    if K < 1 or X.shape[0] < K:
        raise DomainError("need 1 <= K <= N")
    rng = rng if rng is not None else np.random.default_rng(0)
    e = rng.standard_exponential((X.shape[0], K))
    U = e / e.sum(axis=1, keepdims=True)
    history = []
    C = None
    for it in range(1, max_iter + 1):
        Um = U**m
        C = (Um.T @ X) / Um.sum(axis=0)[:, None]
        U = fcm_memberships(X, C, m)
        J = fcm_objective(X, C, U, m)
        history.append(J)
        if it > 1 and history[-2] - J < tol:
            break
    return FcmState(C, U, float(m), history[-1], history, it)


# ---------------------------------------------------------------------------
# k-means dictionary


@dataclass(frozen=True)
class Dictionary:
    codewords: np.ndarray

    def __post_init__(self):
        cw = np.asarray(self.codewords, dtype=float)
        if cw.ndim != 2 or cw.shape[0] < 2:
            raise DomainError("a dictionary needs at least two codewords")
        object.__setattr__(self, "codewords", cw)

    @property
    def V(self) -> int:
        return self.codewords.shape[0]

    def quantize(self, points) -> np.ndarray:
        return np.argmin(_sq_dists(_as_points(points), self.codewords), axis=1)


def _kmeans_pp(X: np.ndarray, V: int, rng) -> np.ndarray:
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = np.sum((X - X[idx[0]]) ** 2, axis=1)
    for _ in range(1, V):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[idx].copy()


def kmeans_quantize(points, V: int = 100, max_iter: int = 100, rng: np.random.Generator | None = None):
    """Lloyd's k-means with k-means++ seeding.

    An empty cluster is re-seeded at the point farthest from its assigned
    codeword. Returns ``(Dictionary, token_ids)``.
    """
    X = _as_points(points)
    if V < 2 or X.shape[0] < V:
        raise DomainError("need 2 <= V <= N")
    rng = rng if rng is not None else np.random.default_rng(0)
    C = _kmeans_pp(X, V, rng)
    labels = None
    for _ in range(max_iter):
        d2 = _sq_dists(X, C)
        new = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=V)
        sums = np.zeros_like(C)
        np.add.at(sums, labels, X)
        nonempty = counts > 0
        C[nonempty] = sums[nonempty] / counts[nonempty, None]
        for v in np.flatnonzero(~nonempty):
            far = int(np.argmax(d2[np.arange(X.shape[0]), labels]))
            C[v] = X[far]
            labels[far] = v
            d2[far, :] = 0.0
    d2 = _sq_dists(X, C)
    return Dictionary(C), np.argmin(d2, axis=1)


# ---------------------------------------------------------------------------
# discrete LDA


@dataclass
class LdaState:
    """Collapsed Gibbs state: token assignments and count matrices."""

    assignments: list
    n_kw: np.ndarray  # (K, V)
    n_dk: np.ndarray  # (D, K)
    alpha: float
    beta: float

    @property
    def K(self) -> int:
        return self.n_kw.shape[0]

    @property
    def V(self) -> int:
        return self.n_kw.shape[1]

    @property
    def topic_word(self) -> np.ndarray:
        """Point estimate ``(n_kw + beta) / (n_k + V beta)``."""
        num = self.n_kw + self.beta
        return num / num.sum(axis=1, keepdims=True)

    @property
    def doc_topic(self) -> np.ndarray:
        num = self.n_dk + self.alpha
        return num / num.sum(axis=1, keepdims=True)

    def check_counts(self, n_tokens: int):
        if np.any(self.n_kw < 0) or np.any(self.n_dk < 0):
            raise AssertionError("negative count")
        if self.n_kw.sum() != n_tokens or self.n_dk.sum() != n_tokens:
            raise AssertionError("count matrices do not sum to the token count")


def _token_docs(docs, V=None):
    docs = [np.asarray(d, dtype=np.int64).ravel() for d in docs]
    if not docs:
        raise DomainError("token corpus is empty")
    top = max((int(d.max()) for d in docs if d.size), default=-1)
    if any(d.size and d.min() < 0 for d in docs):
        raise DomainError("token ids must be non-negative")
    V = top + 1 if V is None else int(V)
    if top >= V:
        raise DomainError(f"token id {top} outside vocabulary of size {V}")
    return docs, V


def lda_fit(docs, K: int, alpha: float = 1.0, beta: float = 0.01, iterations: int = 500, rng: np.random.Generator | None = None, V: int | None = None, on_sweep=None) -> LdaState:
    """Fit LDA to token documents by collapsed Gibbs sampling.

    Each token's topic is resampled from
    ``p(k) ∝ (n_dk + alpha) (n_kw + beta) / (n_k + V beta)`` with its own
    counts removed. ``on_sweep(t, state)`` is called after every sweep.
    """
    docs, V = _token_docs(docs, V)
    if K < 1:
        raise DomainError("K must be positive")
    if not (alpha > 0 and beta > 0):
        raise DomainError("alpha and beta must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)
    D = len(docs)
    z = [rng.integers(K, size=d.size) for d in docs]
    n_kw = np.zeros((K, V), dtype=np.int64)
    n_dk = np.zeros((D, K), dtype=np.int64)
    for d, (toks, zd) in enumerate(zip(docs, z)):
        np.add.at(n_kw, (zd, toks), 1)
        n_dk[d] = np.bincount(zd, minlength=K)

    # word-major nested lists keep the inner loop in plain Python
    nw = n_kw.T.tolist()
    nd = n_dk.tolist()
    nk = n_kw.sum(axis=1).tolist()
    zs = [zd.tolist() for zd in z]
    toks = [d.tolist() for d in docs]
    Vb = V * beta
    topics = range(K)
    state = None
    for t in range(iterations):
        for d in range(D):
            ndd, zd = nd[d], zs[d]
            us = rng.random(len(zd)).tolist()
            for i, w in enumerate(toks[d]):
                k = zd[i]
                row = nw[w]
                ndd[k] -= 1
                row[k] -= 1
                nk[k] -= 1
                cum = []
                acc = 0.0
                for j in topics:
                    acc += (ndd[j] + alpha) * (row[j] + beta) / (nk[j] + Vb)
                    cum.append(acc)
                k = bisect.bisect_right(cum, us[i] * acc)
                if k >= K:
                    k = K - 1
                zd[i] = k
                ndd[k] += 1
                row[k] += 1
                nk[k] += 1
        if on_sweep is not None:
            state = LdaState([np.array(a) for a in zs], np.array(nw, dtype=np.int64).T.copy(), np.array(nd, dtype=np.int64), alpha, beta)
            on_sweep(t, state)
    return LdaState([np.array(a, dtype=np.int64) for a in zs], np.array(nw, dtype=np.int64).T.copy(), np.array(nd, dtype=np.int64).reshape(D, K), float(alpha), float(beta))


def lda_segment(docs, state: LdaState) -> list:
    """Crisp topic label for every token: ``argmax_k theta_dk phi_kw``.

    ``docs`` must be the token documents the state was fitted on (same
    number, same order). Ties go to the lowest topic index.
    """
    docs = [np.asarray(d, dtype=np.int64).ravel() for d in docs]
    if len(docs) != state.n_dk.shape[0]:
        raise DomainError("lda_segment needs the documents the state was fitted on")
    phi, theta = state.topic_word, state.doc_topic
    out = []
    for d, toks in enumerate(docs):
        if toks.size and (toks.min() < 0 or toks.max() >= state.V):
            raise DomainError("unknown token id")
        score = theta[d][None, :] * phi[:, toks].T
        out.append(np.argmax(score, axis=1))
    return out
