"""Binary-outcome likelihood families.

Two-outcome gambles ``<[p, G, 1-p, L], 0>`` are stored as rows ``(p, G, L)``.
All valuation functions broadcast, so a column of parameters against a row of
gambles yields a full (n_params, n_gambles) table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

from .exceptions import InfiniteDivergenceError, ALBError

N_GAMBLES = 200

# Attribute ranges for generated gambles.
P_RANGE = (0.05, 0.95)
GAIN_RANGE = (1.0, 100.0)
LOSS_RANGE = (-100.0, -1.0)


@dataclass(frozen=True)
class Gamble:
    p: float
    G: float
    L: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"gamble probability must lie in (0, 1), got {self.p}")
        if not self.G > 0:
            raise ValueError(f"gain must be positive, got {self.G}")
        if not self.L < 0:
            raise ValueError(f"loss must be negative, got {self.L}")

    def as_array(self):
        return np.array([self.p, self.G, self.L])


@dataclass(frozen=True)
class GambleDesignSpace:
    gambles: np.ndarray  # (200, 3) rows of (p, G, L)
    seed: int

    def __len__(self):
        return len(self.gambles)

    def __getitem__(self, i):
        p, G, L = self.gambles[i]
        return Gamble(float(p), float(G), float(L))

    def __eq__(self, other):
        if not isinstance(other, GambleDesignSpace):
            return NotImplemented
        return self.seed == other.seed and np.array_equal(self.gambles, other.gambles)

    __hash__ = None

    def to_records(self):
        return [
            {"index": i, "p": float(p), "G": float(G), "L": float(L)}
            for i, (p, G, L) in enumerate(self.gambles)
        ]

    @classmethod
    def from_records(cls, records, seed=-1):
        rows = sorted(records, key=lambda r: int(r["index"]))
        arr = np.array([[float(r["p"]), float(r["G"]), float(r["L"])] for r in rows])
        for row in arr:
            Gamble(*row)
        return cls(arr, seed)


def generate_gamble_space(seed, n=N_GAMBLES):
    """Draw ``n`` gambles with p ~ U(.05,.95), G ~ U(1,100), L ~ U(-100,-1)."""
    rng = np.random.default_rng(seed)
    p = rng.uniform(*P_RANGE, size=n)
    G = rng.uniform(*GAIN_RANGE, size=n)
    L = rng.uniform(*LOSS_RANGE, size=n)
    # uniform() is half-open, so the strict inequalities already hold
    return GambleDesignSpace(np.column_stack([p, G, L]), int(seed))


def _split(gambles):
    g = np.asarray(gambles, dtype=float)
    if isinstance(gambles, Gamble):
        g = gambles.as_array()
    return g[..., 0], g[..., 1], g[..., 2]


def logistic_choice_prob(epsilon, V):
    """P(choose gamble) = 1 / (1 + exp(-epsilon * V))."""
    return expit(np.multiply(epsilon, V))


def eut_value(alpha, gambles):
    """Power-utility valuation ``p G^a - (1-p)(-L)^a``.

    ``alpha`` broadcasts against the leading axes of ``gambles``; pass
    ``alpha[:, None]`` with a (m, 3) gamble array for a parameter table.
    """
    if isinstance(gambles, Gamble):
        gambles = gambles.as_array()
    p, G, L = _split(gambles)
    return p * np.power(G, alpha) - (1.0 - p) * np.power(-L, alpha)


def prelec_weight(gamma, p):
    """Prelec probability weighting ``exp(-(-ln p)^gamma)``."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0):
        raise ALBError("Prelec weight undefined at p = 0")
    return np.exp(-np.power(-np.log(p), gamma))


def cpt_value(alpha, gamma, loss_aversion, gambles):
    """Two-outcome CPT valuation ``w(p) G^a - w(1-p) Lambda (-L)^a``."""
    if isinstance(gambles, Gamble):
        gambles = gambles.as_array()
    p, G, L = _split(gambles)
    return (prelec_weight(gamma, p) * np.power(G, alpha)
            - prelec_weight(gamma, 1.0 - p) * loss_aversion * np.power(-L, alpha))


def classify_prob(beta, epsilon, x):
    """Logistic-polynomial success probability ``expit(eps * sum_j beta_j x^j)``.

    The polynomial degree is ``len(beta) - 1``.
    """
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    logit = np.polynomial.polynomial.polyval(x, beta)
    return expit(epsilon * logit)


def binary_entropy(p):
    """Entropy in nats of Bernoulli(p), with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    return -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p))


def bernoulli_kl(p_true, p_model):
    """KL(Bernoulli(p_true) || Bernoulli(p_model)) in nats."""
    p = np.asarray(p_true, dtype=float)
    q = np.asarray(p_model, dtype=float)
    bad = ((q <= 0.0) & (p > 0.0)) | ((q >= 1.0) & (p < 1.0))
    if np.any(bad):
        raise InfiniteDivergenceError(
            "model probability is 0 or 1 where the true distribution has mass")
    with np.errstate(divide="ignore", invalid="ignore"):
        kl = xlogy(p, p) - xlogy(p, q) + xlogy(1.0 - p, 1.0 - p) - xlogy(1.0 - p, 1.0 - q)
    kl = np.maximum(kl, 0.0)
    return float(kl) if kl.ndim == 0 else kl
