"""PM-LDA data model, log joint and forward generative sampler."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .blend import TopicParams, blend_weights
from .exceptions import DomainError

INTERIOR_EPS = 1e-9

__all__ = [
    "Corpus",
    "Document",
    "DocumentState",
    "Hyperparams",
    "TopicParams",
    "clamp_simplex",
    "generate_corpus",
    "log_corpus_posterior",
    "log_doc_joint",
    "log_word_likelihood",
]


def clamp_simplex(v, eps: float = INTERIOR_EPS) -> np.ndarray:
    """Clip the last axis of ``v`` to ``[eps, 1 - eps]`` and renormalise."""
    v = np.clip(np.asarray(v, dtype=float), eps, 1.0 - eps)
    return v / v.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class Hyperparams:
    """Dirichlet ``alpha``, exponential rate ``lam`` and fuzzifier ``m``."""

    alpha: np.ndarray
    lam: float
    m: float = 1.0

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size < 2:
            raise DomainError("alpha must be a vector with K >= 2 entries")
        if np.any(~(alpha > 0)) or not np.all(np.isfinite(alpha)):
            raise DomainError("alpha must be positive")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise DomainError("lambda must be positive")
        if not np.isfinite(self.m):
            raise DomainError("fuzzifier must be finite")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "m", float(self.m))

    @property
    def K(self) -> int:
        return self.alpha.size


@dataclass(frozen=True)
class Document:
    """A group of visual words.

    ``provenance`` optionally records, for every word, the flat pixel index
    it was computed at; map rendering needs it.
    """

    id: str
    words: np.ndarray
    provenance: np.ndarray | None = None

    def __post_init__(self):
        words = np.asarray(self.words, dtype=float)
        if words.ndim == 1:
            words = words[:, None]
        if words.ndim != 2:
            raise DomainError("document words must be an (N_d, p) array")
        if not np.all(np.isfinite(words)):
            raise DomainError(f"document {self.id!r} has non-finite features")
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "id", str(self.id))
        if self.provenance is not None:
            prov = np.asarray(self.provenance, dtype=np.int64)
            if prov.shape != (words.shape[0],):
                raise DomainError("provenance needs one pixel index per word")
            object.__setattr__(self, "provenance", prov)

    @property
    def n_words(self) -> int:
        return self.words.shape[0]

    @property
    def p(self) -> int:
        return self.words.shape[1]


@dataclass(frozen=True)
class Corpus:
    documents: tuple
    p: int = field(default=0)

    def __post_init__(self):
        docs = tuple(self.documents)
        if not docs:
            raise DomainError("a corpus needs at least one document")
        p = docs[0].p
        for d in docs:
            if d.n_words < 1:
                raise DomainError(f"document {d.id!r} is empty")
            if d.p != p:
                raise DomainError("documents disagree on dimensionality")
        if self.p and self.p != p:
            raise DomainError(f"declared p={self.p} but documents have p={p}")
        object.__setattr__(self, "documents", docs)
        object.__setattr__(self, "p", p)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __getitem__(self, i):
        return self.documents[i]

    def stacked_words(self) -> np.ndarray:
        return np.concatenate([d.words for d in self.documents], axis=0)


@dataclass(frozen=True)
class DocumentState:
    """Per-document topic proportion ``pi``, scale ``s`` and word memberships."""

    pi: np.ndarray
    s: float
    memberships: np.ndarray

    def __post_init__(self):
        pi = dist.check_simplex(self.pi, open_simplex=False)
        Z = np.asarray(self.memberships, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != pi.size:
            raise DomainError("memberships must be an (N_d, K) array matching pi")
        if Z.shape[0]:
            dist.check_simplex(Z, open_simplex=False)
        if not (np.isfinite(self.s) and self.s > 0):
            raise DomainError(f"scale s must be positive, got {self.s}")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "memberships", Z)
        object.__setattr__(self, "s", float(self.s))

    @property
    def K(self) -> int:
        return self.pi.size

    def clamped(self) -> "DocumentState":
        return DocumentState(clamp_simplex(self.pi), self.s, clamp_simplex(self.memberships))


def log_word_likelihood(words, Z, topics: TopicParams, m: float = 1.0, validate: bool = True) -> np.ndarray:
    """Per-word ``log p(x | z, beta)`` under the normalised-weight blend.

    ``validate=False`` skips the simplex checks; only for memberships that are
    already clamped into the interior.
    """
    if validate:
        W = blend_weights(Z, m, normalize_weights=True)
    else:
        W = Z if m == 1 else Z**m
        W = W / W.sum(axis=-1, keepdims=True)
    resid = words - W @ topics.means
    s2 = topics.variance
    return -0.5 * topics.p * (dist.LOG_2PI + np.log(s2)) - 0.5 * np.sum(resid * resid, axis=-1) / s2


def _membership_term(log_z_sum: np.ndarray, n: int, pi: np.ndarray, s: float) -> float:
    a = s * pi
    return n * dist.log_dirichlet_normalizer(a) + float(np.dot(a - 1.0, log_z_sum))


def _check_state(doc: Document, state: DocumentState, topics: TopicParams, hyper: Hyperparams):
    if state.K != hyper.K or topics.K != hyper.K:
        raise DomainError("state, topics and hyperparameters disagree on K")
    if state.memberships.shape[0] != doc.n_words:
        raise DomainError(
            f"document {doc.id!r} has {doc.n_words} words but {state.memberships.shape[0]} memberships"
        )
    if doc.n_words and doc.p != topics.p:
        raise DomainError("document and topics disagree on dimensionality")


def log_doc_joint(doc: Document, state: DocumentState, topics: TopicParams, hyper: Hyperparams) -> float:
    """Log joint of one document's proportions, scale, memberships and words.

    The sum of ``log Dir(pi | alpha)``, ``log lambda - lambda s``, the blended
    Gaussian log likelihood of every word and ``log Dir(z_n | s pi)`` for
    every word. Memberships and proportions are clamped into the interior
    before evaluation.
    """
    _check_state(doc, state, topics, hyper)
    pi = clamp_simplex(state.pi)
    total = dist.log_dirichlet_pdf(pi, hyper.alpha) + np.log(hyper.lam) - hyper.lam * state.s
    if doc.n_words == 0:
        return float(total)
    Z = clamp_simplex(state.memberships)
    data = log_word_likelihood(doc.words, Z, topics, hyper.m).sum()
    member = _membership_term(np.log(Z).sum(axis=0), doc.n_words, pi, state.s)
    return float(total + data + member)


def log_corpus_posterior(corpus: Corpus, states, topics: TopicParams, hyper: Hyperparams) -> float:
    """Unnormalised log posterior: the sum of :func:`log_doc_joint` over documents."""
    states = list(states)
    if len(states) != len(corpus):
        raise DomainError(f"{len(corpus)} documents but {len(states)} states")
    return float(sum(log_doc_joint(d, st, topics, hyper) for d, st in zip(corpus, states)))


def generate_corpus(
    hyper: Hyperparams,
    topics: TopicParams,
    D: int,
    doc_sizes,
    rng: np.random.Generator,
    *,
    fixed_pi=None,
    fixed_s: float | None = None,
):
    """Sample a corpus from the PM-LDA generative process.

    For each document ``pi_d ~ Dir(alpha)`` and ``s_d ~ Exp(lambda)`` (unless
    fixed by the caller); for each word ``z ~ Dir(s_d pi_d)`` and
    ``x ~ N(sum_k w_k mu_k, s2 I)`` with ``w = z**m / sum z**m``.

    Every document draws from its own child stream of ``rng``, so the result
    depends only on the generator state and the arguments.

    Returns
    -------
    corpus : Corpus
    states : list of DocumentState
        The generating values, unclamped.
    """
    if topics.K != hyper.K:
        raise DomainError("topics and hyperparameters disagree on K")
    sizes = np.broadcast_to(np.asarray(doc_sizes, dtype=int), (D,))
    if D < 1 or np.any(sizes < 1):
        raise DomainError("need D >= 1 documents with at least one word each")
    alpha = dist.DirichletParams(hyper.alpha)
    expo = dist.ExponentialParams(hyper.lam)
    docs, states = [], []
    for d, child in enumerate(rng.spawn(D)):
        pi = dist.sample_dirichlet(alpha, child) if fixed_pi is None else np.asarray(fixed_pi, dtype=float)
        s = dist.sample_exponential(expo, child) if fixed_s is None else float(fixed_s)
        Z = dist.sample_dirichlet(dist.DirichletParams(np.maximum(s * pi, np.finfo(float).tiny)), child, size=sizes[d])
        W = blend_weights(Z, hyper.m, normalize_weights=True)
        X = W @ topics.means + np.sqrt(topics.variance) * child.standard_normal((sizes[d], topics.p))
        docs.append(Document(f"d{d}", X))
        states.append(DocumentState(pi, s, Z))
    return Corpus(tuple(docs)), states
