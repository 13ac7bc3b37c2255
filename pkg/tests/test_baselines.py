import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmlda import baselines
from pmlda.exceptions import DomainError


def test_fcm_membership_examples():
    C = np.array([[0.0], [1.0]])
    assert np.allclose(baselines.fcm_memberships([[0.5]], C, 2.0), [[0.5, 0.5]], atol=1e-15)
    assert np.allclose(baselines.fcm_memberships([[0.25]], C, 2.0), [[0.9, 0.1]], atol=1e-12)
    assert baselines.fcm_memberships([[1.0]], C, 2.0).tolist() == [[0.0, 1.0]]


def test_fcm_membership_is_stationary_point():
    """Independent check: the update minimises sum z^m d2 on the simplex."""
    r = np.random.default_rng(0)
    X, C, m = r.normal(size=(1, 2)), r.normal(size=(3, 2)), 1.7
    u = baselines.fcm_memberships(X, C, m)[0]
    d2 = np.sum((X - C) ** 2, axis=1)
    best = np.sum(u**m * d2)
    for _ in range(2000):
        v = r.dirichlet(np.ones(3))
        assert np.sum(v**m * d2) >= best - 1e-12


def test_fcm_monotone_on_fuzzed_runs():
    for seed in range(50):
        r = np.random.default_rng(seed)
        K = int(r.integers(2, 5))
        X = np.concatenate([r.normal(c, 0.5, size=(30, 2)) for c in r.normal(0, 4, size=(K, 2))])
        state = baselines.fcm_fit(X, K, m=float(r.uniform(1.2, 3.0)), rng=r)
        h = np.array(state.history)
        assert np.all(np.isfinite(h))
        assert np.all(np.diff(h) <= 1e-9 * np.abs(h[:-1]))
        assert np.allclose(state.memberships.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(state.memberships >= 0)


def test_fcm_errors():
    with pytest.raises(DomainError):
        baselines.fcm_fit(np.zeros((5, 1)), 2, m=1.0)
    with pytest.raises(DomainError):
        baselines.fcm_fit(np.zeros((1, 1)), 2)


def test_kmeans_examples():
    r = np.random.default_rng(1)
    X = r.normal(size=(12, 2))
    d, ids = baselines.kmeans_quantize(X, 12, rng=r)
    assert np.allclose(d.codewords[ids], X)
    blobs = np.concatenate([r.normal([0, 0], 0.2, (300, 2)), r.normal([8, 8], 0.2, (300, 2))])
    d, _ = baselines.kmeans_quantize(blobs, 2, rng=r)
    cw = d.codewords[np.argsort(d.codewords[:, 0])]
    assert np.allclose(cw[0], blobs[:300].mean(axis=0), atol=0.1)
    assert np.allclose(cw[1], blobs[300:].mean(axis=0), atol=0.1)
    dup = np.concatenate([X, X])
    _, ids = baselines.kmeans_quantize(dup, 4, rng=r)
    assert np.array_equal(ids[:12], ids[12:])
    with pytest.raises(DomainError):
        baselines.kmeans_quantize(X, 13)


def disjoint_corpus(seed=0, D=40, N=150, V=100):
    r = np.random.default_rng(seed)
    phi = np.zeros((2, V))
    phi[0, : V // 2] = 2 / V
    phi[1, V // 2 :] = 2 / V
    docs, labels = [], []
    for _ in range(D):
        z = r.choice(2, size=N, p=r.dirichlet([1.0, 1.0]))
        docs.append(np.array([r.choice(V, p=phi[k]) for k in z]))
        labels.append(z)
    return docs, labels, phi


def test_lda_single_topic():
    docs, _, _ = disjoint_corpus(D=5, N=20)
    state = baselines.lda_fit(docs, 1, iterations=5, rng=np.random.default_rng(0))
    assert all(np.all(z == 0) for z in state.assignments)
    assert np.allclose(state.doc_topic, 1.0)
    assert all(np.all(lab == 0) for lab in baselines.lda_segment(docs, state))


def test_lda_counts_consistent_after_every_sweep():
    docs, _, _ = disjoint_corpus(D=6, N=30)
    n = sum(d.size for d in docs)
    seen = []

    def check(t, state):
        state.check_counts(n)
        for d, (toks, z) in enumerate(zip(docs, state.assignments)):
            assert np.array_equal(state.n_dk[d], np.bincount(z, minlength=state.K))
        seen.append(t)

    baselines.lda_fit(docs, 3, iterations=10, rng=np.random.default_rng(1), V=100, on_sweep=check)
    assert seen == list(range(10))


def test_lda_recovers_disjoint_topics_and_labels():
    docs, labels, phi = disjoint_corpus()
    state = baselines.lda_fit(docs, 2, iterations=200, rng=np.random.default_rng(2), V=100)
    est = state.topic_word
    tv = min(max(0.5 * np.abs(est[list(p)] - phi).sum(axis=1)) for p in itertools.permutations(range(2)))
    assert tv < 0.1
    lab = np.concatenate(baselines.lda_segment(docs, state))
    truth = np.concatenate(labels)
    assert max(np.mean(lab == truth), np.mean(lab != truth)) >= 0.95


def test_lda_segment_equivariant_under_relabelling():
    docs, _, _ = disjoint_corpus(D=8, N=40)
    state = baselines.lda_fit(docs, 3, iterations=20, rng=np.random.default_rng(3), V=100)
    perm = np.array([2, 0, 1])
    swapped = baselines.LdaState([perm.argsort()[z] for z in state.assignments], state.n_kw[perm], state.n_dk[:, perm], state.alpha, state.beta)
    a = baselines.lda_segment(docs, state)
    b = baselines.lda_segment(docs, swapped)
    for x, y in zip(a, b):
        assert np.array_equal(perm.argsort()[x], y)


def test_lda_errors():
    docs, _, _ = disjoint_corpus(D=3, N=10)
    state = baselines.lda_fit(docs, 2, iterations=2, V=100)
    with pytest.raises(DomainError):
        baselines.lda_segment([d + 1000 for d in docs], state)
    with pytest.raises(DomainError):
        baselines.lda_fit([np.array([-1, 2])], 2)
    with pytest.raises(DomainError):
        baselines.lda_fit(docs, 2, V=5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_fcm_memberships_on_simplex(seed):
    r = np.random.default_rng(seed)
    U = baselines.fcm_memberships(r.normal(size=(20, 3)), r.normal(size=(4, 3)), float(r.uniform(1.1, 4)))
    assert np.all(U >= 0) and np.allclose(U.sum(axis=1), 1.0, atol=1e-12)
