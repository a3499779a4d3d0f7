"""Risk, misspecification and active-learning-bias statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats
from scipy.special import expit, log_expit, logsumexp

from .core import LOG_PROB_FLOOR
from .exceptions import ALBError, NonFiniteRiskError
from .linreg import GaussianPosterior, gaussian_kl, posterior_predictive, theta_star_ols

N_EVAL = 100


@dataclass(frozen=True, eq=False)
class EvalSet:
    """Held-out designs for risk estimation.

    Regression sets carry sampled ``outcomes``; binary sets carry the exact
    success probabilities ``true_probs`` (risk is an expectation over y).
    """

    designs: np.ndarray
    outcomes: np.ndarray = None
    true_probs: np.ndarray = None
    seed: int = None

    def __post_init__(self):
        designs = np.asarray(self.designs, dtype=float)
        if len(designs) == 0:
            raise ValueError("evaluation set is empty")
        object.__setattr__(self, "designs", designs)
        if self.outcomes is not None:
            out = np.asarray(self.outcomes, dtype=float)
            if len(out) != len(designs):
                raise ValueError("designs and outcomes differ in length")
            object.__setattr__(self, "outcomes", out)
        if self.true_probs is not None:
            object.__setattr__(self, "true_probs", np.asarray(self.true_probs, dtype=float))


@dataclass(frozen=True)
class AlbRecord:
    replication: int
    d_model: float
    alb: float


def make_eval_set(true_model, target, rng, n=N_EVAL, grid_size=1001, seed=None):
    """Regression: n (x, y) pairs drawn from g and f. Binary: the whole design grid."""
    if true_model.spec.is_binary:
        designs = target.grid(grid_size)
        return EvalSet(designs, true_probs=true_model.prob(designs), seed=seed)
    if target.is_discrete:
        designs = target.designs[rng.integers(len(target.designs), size=n)]
    else:
        designs = rng.uniform(target.lo, target.hi, size=n)
    means = true_model.mean(designs)
    ys = means + true_model.spec.sigma * rng.standard_normal(n)
    return EvalSet(designs, outcomes=ys, seed=seed)


def expected_cross_entropy(p_true, log_p, log_q):
    """Mean over designs of -[p log phat + (1-p) log(1-phat)], given log phat and log(1-phat)."""
    log_p = np.maximum(log_p, LOG_PROB_FLOOR)
    log_q = np.maximum(log_q, LOG_PROB_FLOOR)
    p = np.asarray(p_true, dtype=float)
    ce = -(p * log_p + (1.0 - p) * log_q)
    return float(np.mean(ce))


def cross_entropy_from_stats(p_true, pbar, qbar):
    with np.errstate(divide="ignore"):
        return expected_cross_entropy(p_true, np.log(pbar), np.log(qbar))


def _binary_logs(state, spec, designs):
    if hasattr(state, "log_weights"):
        Z = spec.logit_table(state._points, designs)
        lw = state.log_weights[:, None]
        return logsumexp(lw + log_expit(Z), axis=0), logsumexp(lw + log_expit(-Z), axis=0)
    z = spec.logit_table(np.asarray(state, dtype=float), designs)[0]
    return log_expit(z), log_expit(-z)


def risk_nll(state, spec, eval_set):
    """Negative log predictive likelihood averaged over the evaluation set.

    ``state`` is a posterior or a single parameter vector (point mass).
    """
    if spec.is_binary:
        log_p, log_q = _binary_logs(state, spec, eval_set.designs)
        return expected_cross_entropy(eval_set.true_probs, log_p, log_q)
    x, y = eval_set.designs, eval_set.outcomes
    phi = spec.features(x)
    if isinstance(state, GaussianPosterior):
        mean, var = posterior_predictive(state, spec.sigma, phi)
    elif hasattr(state, "log_weights"):
        lp = np.array([state.predictive_log_density(spec, xi, yi) for xi, yi in zip(x, y)])
        return _checked_mean(-lp, x)
    else:
        mean = phi @ np.asarray(state, dtype=float)
        var = np.full_like(mean, spec.sigma ** 2)
    lp = -0.5 * (np.log(2 * np.pi * var) + (y - mean) ** 2 / var)
    return _checked_mean(-lp, x)


def _checked_mean(nll, designs):
    bad = ~np.isfinite(nll)
    if bad.any():
        raise NonFiniteRiskError(f"non-finite log density at design {designs[np.argmax(bad)]!r}",
                                 design=designs[np.argmax(bad)])
    return float(np.mean(nll))


def bernoulli_kl_logits(z_true, z_model):
    """KL between Bernoulli(expit(z_true)) and Bernoulli(expit(z_model)), from logits."""
    p = expit(z_true)
    kl = (p * (log_expit(z_true) - log_expit(z_model))
          + (1.0 - p) * (log_expit(-z_true) - log_expit(-z_model)))
    return np.maximum(kl, 0.0)


def d_model(true_model, theta_ref, spec, g, grid_size=1001):
    """E_g[ KL(f(x) || m(x, theta_ref)) ] over the evaluation grid."""
    xs = g.grid(grid_size)
    theta_ref = np.asarray(theta_ref, dtype=float)
    if spec.is_binary:
        z_true = true_model.spec.logit_table(true_model.params, xs)[0]
        z_model = spec.logit_table(theta_ref, xs)[0]
        return float(np.mean(bernoulli_kl_logits(z_true, z_model)))
    mu_f = true_model.mean(xs)
    mu_m = spec.mean_table(theta_ref, xs)[0]
    return float(np.mean(gaussian_kl(mu_f, true_model.spec.sigma, mu_m, spec.sigma)))


def d_model_predictive(true_model, posterior, spec, g, grid_size=1001):
    """E_g[ KL(f(x) || posterior predictive at x) ] for binary models."""
    xs = g.grid(grid_size)
    z_true = true_model.spec.logit_table(true_model.params, xs)[0]
    p = expit(z_true)
    log_p, log_q = _binary_logs(posterior, spec, xs)
    kl = (p * (log_expit(z_true) - log_p) + (1.0 - p) * (log_expit(-z_true) - log_q))
    return float(np.mean(np.maximum(kl, 0.0)))


def best_fitting_params(true_model, spec, g, lattice=None, grid_size=1001):
    """Risk minimizer theta* of the hypothesized class under g.

    gaussian-linear: least squares on the dense grid. Binary classes with a
    ``lattice``: brute-force argmin of expected cross-entropy over it.
    logistic-poly without a lattice: convex minimization of expected
    cross-entropy.
    """
    if spec.family == "gaussian-linear":
        return theta_star_ols(true_model, spec.degree, g, n=grid_size)
    xs = g.grid(grid_size)
    p = true_model.prob(xs)
    if lattice is not None:
        L = np.asarray(lattice, dtype=float)
        L = L[:, None] if L.ndim == 1 else L
        Z = spec.logit_table(L, xs)
        risk = -(p * np.maximum(log_expit(Z), LOG_PROB_FLOOR)
                 + (1 - p) * np.maximum(log_expit(-Z), LOG_PROB_FLOOR)).mean(axis=1)
        return L[int(np.argmin(risk))]
    if spec.family != "logistic-poly":
        raise ALBError(f"{spec.family} needs a parameter lattice to locate theta*")
    return _logistic_theta_star(p, xs, spec)


def _logistic_theta_star(p, xs, spec):
    scale = max(np.max(np.abs(xs)), 1.0)
    U = np.power.outer(xs / scale, np.arange(spec.degree + 1))

    def loss(c):
        z = U @ c
        val = -np.mean(p * log_expit(z) + (1 - p) * log_expit(-z))
        grad = U.T @ (expit(z) - p) / len(xs)
        return val, grad

    def hess(c):
        s = expit(U @ c)
        return (U * (s * (1 - s))[:, None]).T @ U / len(xs)

    res = optimize.minimize(loss, np.zeros(spec.degree + 1), jac=True, hess=hess,
                            method="trust-exact", options={"gtol": 1e-10, "maxiter": 500})
    c = res.x
    return c / (spec.epsilon * scale ** np.arange(spec.degree + 1))


def alb(risk_adaptive, risk_star):
    """Relative excess risk over the best-fitting model: risk/risk* - 1."""
    if not risk_star > 0:
        raise ALBError(f"reference risk must be positive, got {risk_star}")
    return risk_adaptive / risk_star - 1.0


def alb_vs_passive(risk_adaptive, risk_passive, scale=50.0):
    """``scale * (adaptive / passive - 1)``."""
    if not risk_passive > 0:
        raise ALBError(f"passive risk must be positive, got {risk_passive}")
    return scale * (risk_adaptive / risk_passive - 1.0)


def spearman(xs, ys):
    """Spearman rank correlation with average ranks for ties."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("spearman needs two equal-length 1-D sequences")
    if len(xs) < 3:
        raise ValueError("spearman needs at least 3 pairs")
    rx = stats.rankdata(xs)
    ry = stats.rankdata(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    if denom == 0:
        raise ALBError("spearman undefined: a variable has constant ranks")
    return float(np.clip(np.sum(rx * ry) / denom, -1.0, 1.0))


def spearman_permutation_test(xs, ys, n_permutations=10_000, seed=0):
    """One-sided (positive association) permutation p-value for Spearman's rho."""
    rho = spearman(xs, ys)
    rng = np.random.default_rng(seed)
    rx = stats.rankdata(xs)
    ry = stats.rankdata(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    norm = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    perms = np.array([rx @ rng.permutation(ry) for _ in range(n_permutations)]) / norm
    p = (1 + np.sum(perms >= rho - 1e-12)) / (n_permutations + 1)
    return rho, float(p)
