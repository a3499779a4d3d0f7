"""Choosing the next design: greedy EIG, random draws from the target, replay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from ._kernels import mixture_stats, poly_mixture_stats
from .exceptions import ReplayExhaustedError
from .linreg import GaussianPosterior, poly_features

POLICY_KINDS = ("adaptive", "random", "replay")
# The tabulated entropy is accurate to ~4e-9; smaller EIG values are ties at 0.
EIG_ATOL = 1e-8


@dataclass(frozen=True)
class DesignPolicy:
    kind: str
    sequence: tuple = ()
    name: str = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        object.__setattr__(self, "sequence", tuple(self.sequence))
        if self.name is None:
            object.__setattr__(self, "name", self.kind)

    @classmethod
    def adaptive(cls, name=None):
        return cls("adaptive", name=name)

    @classmethod
    def random(cls, name=None):
        return cls("random", name=name)

    @classmethod
    def replay(cls, sequence, name=None):
        return cls("replay", tuple(sequence), name=name)


def select_linear(post, sigma, k, grid):
    """Grid point maximizing phi^T S phi (ties go to the smallest x).

    ``sigma`` does not move the argmax; it is accepted so the call mirrors
    the EIG it maximizes.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty design grid")
    crit = d_criterion(post, k, grid)
    ties = grid[crit == crit.max()]
    return float(ties.min())


def d_criterion(post, k, grid):
    phi = poly_features(k, np.asarray(grid, dtype=float))
    return np.einsum("ij,jk,ik->i", phi, post.S, phi)


def binary_entropy_from(pbar, qbar):
    return -(xlogy(pbar, pbar) + xlogy(qbar, qbar))


def binary_mixture_stats(post, spec, candidates, with_entropy=True, min_weight=0.0):
    """(pbar, qbar, mean entropy) of a weighted-point posterior at each candidate.

    ``min_weight`` > 0 skips negligible points (see :func:`mixture_stats`).
    """
    if spec.family == "logistic-poly":
        thetas = spec.check_thetas(post._points)
        return poly_mixture_stats(thetas, spec.check_designs(candidates), spec.epsilon,
                                  post.weights, with_entropy, min_weight)
    Z = spec.logit_table(post._points, candidates)
    return mixture_stats(Z, post.weights, with_entropy, min_weight)


def eig_from_stats(stats):
    pbar, qbar, ent = stats
    eig = binary_entropy_from(pbar, qbar) - ent
    return np.where(eig > EIG_ATOL, eig, 0.0)


def select_discrete_eig(post, spec, candidates, stats=None):
    """Candidate with the largest expected information gain.

    For binary outcomes EIG(x) = H(pbar(x)) - E_theta[H(p_theta(x))]. Returns
    ``(design, eig_values)``; ties go to the lowest candidate index.
    ``stats`` may carry precomputed :func:`binary_mixture_stats`.
    """
    candidates = np.asarray(candidates, dtype=float)
    if len(candidates) == 0:
        raise ValueError("empty candidate set")
    if stats is None:
        stats = binary_mixture_stats(post, spec, candidates)
    eig = eig_from_stats(stats)
    return candidates[int(np.argmax(eig))], eig


def _as_rng(rng_seed):
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def sample_random_index(g, rng_seed):
    rng = _as_rng(rng_seed)
    return int(rng.integers(len(g.designs)))


def sample_random(g, rng_seed):
    """One IID draw from the target distribution."""
    rng = _as_rng(rng_seed)
    if g.is_discrete:
        return g.designs[sample_random_index(g, rng)]
    return float(rng.uniform(g.lo, g.hi))


@dataclass
class SelectionState:
    """Everything a policy may look at when picking design t.

    ``stats`` optionally caches binary mixture statistics of ``posterior``
    over ``candidates``.
    """

    posterior: object
    spec: object
    candidates: np.ndarray
    target: object
    rng: np.random.Generator
    stats: tuple = field(default=None)


def choose_design(policy, state, t):
    """Return ``(design, candidate_index)``; the index is None off-grid."""
    if policy.kind == "replay":
        if t >= len(policy.sequence):
            raise ReplayExhaustedError(
                f"replay sequence has {len(policy.sequence)} designs, asked for index {t}")
        x = policy.sequence[t]
        return x, _index_in(state.candidates, x)
    if policy.kind == "random":
        if state.target.is_discrete:
            i = sample_random_index(state.target, state.rng)
            return state.target.designs[i], i
        return sample_random(state.target, state.rng), None
    post, spec = state.posterior, state.spec
    if isinstance(post, GaussianPosterior):
        x = select_linear(post, spec.sigma, spec.degree, state.candidates)
        return x, _index_in(state.candidates, x)
    _, eig = select_discrete_eig(post, spec, state.candidates, stats=state.stats)
    i = int(np.argmax(eig))
    return state.candidates[i], i


def next_design(policy, state, t):
    """Design for step ``t`` (0-based) under ``policy``."""
    return choose_design(policy, state, t)[0]


def _index_in(candidates, x):
    if candidates is None:
        return None
    cand = np.asarray(candidates)
    if cand.ndim == 1:
        hits = np.flatnonzero(cand == x)
    else:
        hits = np.flatnonzero(np.all(cand == np.asarray(x), axis=1))
    return int(hits[0]) if hits.size else None
