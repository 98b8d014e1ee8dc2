"""Brute-force reference computations, independent of the dynamic programs.

Everything here enumerates hidden-state paths explicitly and multiplies
probabilities directly; nothing reuses the recursions under test.
"""

import itertools

import numpy as np


def enumerate_paths(k: int, n: int) -> np.ndarray:
    return np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64)


def path_probs(model, paths: np.ndarray) -> np.ndarray:
    """Pr[X = path] for every row, by direct multiplication."""
    p = model.pi[paths[:, 0]].copy()
    for t in range(1, paths.shape[1]):
        p *= model.trans[paths[:, t - 1], paths[:, t]]
    return p


def joint_probs(model, paths: np.ndarray, obs) -> np.ndarray:
    """Pr[X = path, Y = obs] for every row."""
    obs = np.asarray(obs, dtype=np.int64)
    p = path_probs(model, paths)
    for t in range(obs.size):
        p = p * model.emit[paths[:, t], obs[t]]
    return p


def brute_viterbi(model, obs):
    """(max joint probability, argmax path) over explicit enumeration."""
    obs = np.asarray(obs, dtype=np.int64)
    paths = enumerate_paths(model.k, obs.size)
    joint = joint_probs(model, paths, obs)
    best = int(np.argmax(joint))
    return float(joint[best]), paths[best]


def brute_forward(model, obs) -> float:
    obs = np.asarray(obs, dtype=np.int64)
    paths = enumerate_paths(model.k, obs.size)
    return float(joint_probs(model, paths, obs).sum())


def brute_exact_avg_bits(model, n: int, chunk: int = 4096) -> float:
    """-log2 sum over all observation sequences of max-path joint probability.

    Full joint-table enumeration: paths x observation sequences, chunked
    over observation sequences to bound memory.
    """
    paths = enumerate_paths(model.k, n)
    prior = path_probs(model, paths)
    total_obs = model.m ** n
    powers = model.m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    acc = 0.0
    for lo in range(0, total_obs, chunk):
        idx = np.arange(lo, min(lo + chunk, total_obs), dtype=np.int64)
        ys = (idx[:, None] // powers[None, :]) % model.m  # (c, n)
        joint = np.broadcast_to(prior[:, None], (paths.shape[0], ys.shape[0])).copy()
        for t in range(n):
            joint *= model.emit[paths[:, t][:, None], ys[None, :, t]]
        acc += joint.max(axis=0).sum()
    return -np.log2(acc)


def random_model(rng: np.random.Generator, k: int, m: int):
    """Random fully-supported stochastic model (all probabilities positive)."""
    from physkey.hmm import HmmModel

    def rows(r, c):
        mat = rng.dirichlet(np.ones(c) * 2.0, size=r)
        mat = np.maximum(mat, 1e-6)
        return mat / mat.sum(axis=1, keepdims=True)

    return HmmModel(states=tuple(range(k)), symbols=tuple(range(m)),
                    pi=rows(1, k)[0], trans=rows(k, k), emit=rows(k, m))
