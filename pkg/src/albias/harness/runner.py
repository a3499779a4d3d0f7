"""Replications x arms x time steps, and their ordered aggregation."""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .. import metrics
from ..binary import generate_gamble_space
from ..core import ModelSpec, PriorSpec, TargetDistribution, TrueModel, default_param_space
from ..design import DesignPolicy, SelectionState, choose_design, select_linear
from ..estimators import BayesianPolynomialRegression, GridBinaryLearner, ParticleLogisticClassifier
from ..exceptions import ALBError, SimulationError
from ..linreg import GaussianPosterior, conjugate_update, default_prior_cov, poly_features
from . import seeding
from .config import ExperimentConfig

N_HIST_BINS = 100


@dataclass(frozen=True, eq=False)
class RiskTrajectory:
    """Designs and risks of one arm in one replication, for t = 1..T."""

    arm: str
    replication: int
    designs: np.ndarray
    risks: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        if len(self.designs) != len(self.risks) or len(self.indices) != len(self.risks):
            raise ValueError("trajectory columns differ in length")
        if not np.all(np.isfinite(self.risks)):
            raise ValueError("trajectory contains non-finite risks")

    def __len__(self):
        return len(self.risks)

    def rows(self):
        """(t, design, risk) triples, t starting at 1."""
        return [(t + 1, self.designs[t], float(self.risks[t])) for t in range(len(self))]


@dataclass(frozen=True, eq=False)
class ReplicationResult:
    replication: int
    params: np.ndarray
    theta_star: np.ndarray
    theta_star_risk: float
    true_risk: float
    d_model: float
    alb: float
    trajectories: dict
    d_model_predictive: float = None


@dataclass(eq=False)
class BatchSummary:
    """Per-arm mean risk curves with standard errors std / sqrt(R)."""

    experiment: str
    arms: list
    mean_risk: dict
    stderr: dict
    theta_star_risk: float
    true_risk: float
    alb_records: list
    histograms: dict
    n_replications: int
    results: list = field(default=None, repr=False)

    @property
    def horizon(self):
        return len(next(iter(self.mean_risk.values())))

    def final_gap(self, arm_a, arm_b):
        """(mean_a - mean_b, pooled SE) at the last step."""
        diff = self.mean_risk[arm_a][-1] - self.mean_risk[arm_b][-1]
        se = math.hypot(self.stderr[arm_a][-1], self.stderr[arm_b][-1])
        return float(diff), float(se)


# --------------------------------------------------------------------------
# compiled experiment (deterministic, built once per config per process)

def _prior_spec(gp):
    if gp is None:
        return None
    if gp.kind == "normal":
        return PriorSpec("normal", mean=gp.mean, cov=gp.cov)
    if gp.kind == "uniform":
        return PriorSpec("uniform", lower=gp.lower, upper=gp.upper)
    raise ALBError("a fixed generating prior cannot serve as a hypothesis prior")


class Experiment:
    """Everything about a config that does not vary across replications."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        t, h = config.true_model, config.hypothesized
        self.true_spec = ModelSpec(t.family, degree=t.degree, sigma=t.sigma, epsilon=t.epsilon,
                                   param_space=default_param_space(t.family, t.degree))
        self.hyp_spec = ModelSpec(h.family, degree=h.degree, sigma=h.sigma, epsilon=h.epsilon,
                                  prior=_prior_spec(h.prior))
        tg = config.target
        if tg.kind == "gambles":
            gseed = tg.seed if tg.seed is not None else seeding.int_seed(
                config.base_seed, seeding.BATCH, purpose="gambles")
            self.gambles = generate_gamble_space(gseed, tg.n)
            self.target = TargetDistribution.discrete(self.gambles.gambles)
            self.candidates = self.target.designs
        else:
            self.gambles = None
            self.target = TargetDistribution.continuous(tg.lo, tg.hi)
            self.candidates = self.target.grid(config.design_grid_size)
        self.lattice = (np.linspace(0.0, 1.0, h.lattice_size) if h.family == "eut" else None)
        self.policies = {arm.name: self._policy(arm) for arm in config.arms}
        self.pool = self._build_pool()

    # -- truth ---------------------------------------------------------------
    def _draw_prior(self, rng, n):
        gp = self.config.true_model.generating_prior
        if gp.kind == "fixed":
            return np.tile(np.asarray(gp.values, dtype=float), (n, 1))
        return _prior_spec(gp).sample(rng, n)

    def _build_pool(self):
        sel = self.config.true_model.select
        if sel is None:
            return None
        rng = seeding.rng(self.config.base_seed, seeding.BATCH, purpose="pool")
        cands = self._draw_prior(rng, sel.candidates)
        h = self.hyp_spec
        score_spec = ModelSpec(h.family, degree=h.degree, sigma=h.sigma, epsilon=sel.score_epsilon)
        scores = np.array([self._d_model(TrueModel(self.true_spec, c), score_spec)[1] for c in cands])
        keep = max(1, int(math.ceil(sel.keep_fraction * len(cands))))
        order = np.argsort(-scores, kind="stable")[:keep]
        return cands[np.sort(order)]

    def draw_truth(self, replication):
        rng = seeding.rng(self.config.base_seed, replication, purpose="truth")
        if self.pool is not None:
            params = self.pool[int(rng.integers(len(self.pool)))]
        else:
            params = self._draw_prior(rng, 1)[0]
        return TrueModel(self.true_spec, params)

    def _d_model(self, truth, spec):
        theta = metrics.best_fitting_params(truth, spec, self.target, lattice=self.lattice,
                                            grid_size=self.config.design_grid_size)
        return theta, metrics.d_model(truth, theta, spec, self.target,
                                      grid_size=self.config.design_grid_size)

    # -- arms ----------------------------------------------------------------
    def _policy(self, arm):
        if arm.kind == "adaptive":
            return DesignPolicy.adaptive(arm.name)
        if arm.kind == "random":
            return DesignPolicy.random(arm.name)
        if arm.designs is not None:
            seq = np.asarray(arm.designs, dtype=float)
        else:
            seq = linear_design_sequence(self.hyp_spec, arm.source_sigma, self.candidates,
                                         self.config.horizon)
        if len(seq) < self.config.horizon:
            raise ALBError(f"replay arm {arm.name!r} has {len(seq)} designs, "
                           f"horizon is {self.config.horizon}")
        return DesignPolicy.replay(seq, arm.name)

    def learner(self, replication, arm):
        h, spec = self.config.hypothesized, self.hyp_spec
        if spec.family == "gaussian-linear":
            mean, cov = _normal_prior(spec)
            return BayesianPolynomialRegression(spec.degree, spec.sigma, mean, cov,
                                                design_space=self.candidates)
        if spec.family == "eut":
            return GridBinaryLearner("eut", epsilon=spec.epsilon, lattice=self.lattice,
                                     prior=spec.prior, design_space=self.candidates)
        mean, cov = _normal_prior(spec)
        seed = seeding.int_seed(self.config.base_seed, replication, arm, "particles")
        return ParticleLogisticClassifier(spec.degree, spec.epsilon, h.n_particles, mean, cov,
                                          random_state=seed, design_space=self.candidates)


def _normal_prior(spec):
    if spec.prior is None:
        return np.zeros(spec.degree + 1), default_prior_cov(spec.degree)
    if spec.prior.kind != "normal":
        raise ALBError(f"{spec.family} classes need a normal prior")
    return spec.prior.mean, spec.prior.cov


def linear_design_sequence(spec, sigma, grid, horizon):
    """The adaptive design sequence of a gaussian-linear class; outcomes do not enter it."""
    mean, cov = _normal_prior(spec)
    post = GaussianPosterior(mean, cov)
    seq = []
    for _ in range(horizon):
        x = select_linear(post, sigma, spec.degree, grid)
        seq.append(x)
        post = conjugate_update(post, sigma, poly_features(spec.degree, x), 0.0)
    return np.array(seq)


@functools.lru_cache(maxsize=8)
def _compiled(config_json):
    return Experiment(ExperimentConfig.from_dict(json.loads(config_json)))


def compile_experiment(config):
    return _compiled(config.to_json())


# --------------------------------------------------------------------------
# one replication

def run_replication(config, replication):
    """Run every arm of ``config`` for one replication index."""
    exp = compile_experiment(config)
    cfg = config
    try:
        truth = exp.draw_truth(replication)
        eval_rng = seeding.rng(cfg.base_seed, replication, purpose="eval")
        eval_set = metrics.make_eval_set(truth, exp.target, eval_rng, n=cfg.eval_size,
                                         grid_size=cfg.design_grid_size)
        theta_star, dm = exp._d_model(truth, exp.hyp_spec)
        star_risk = metrics.risk_nll(theta_star, exp.hyp_spec, eval_set)
        true_risk = metrics.risk_nll(truth.params, exp.true_spec, eval_set)
    except ALBError as exc:
        raise SimulationError(str(exc), replication, None, 0) from exc

    trajectories = {}
    finals = {}
    for arm in cfg.arms:
        trajectories[arm.name], finals[arm.name] = _run_arm(exp, arm.name, replication, truth,
                                                             eval_set)
    alb_value = metrics.alb(float(trajectories[cfg.alb_arm_name].risks[-1]), star_risk)

    dm_hat = None
    if exp.hyp_spec.is_binary:
        passive = next((a.name for a in cfg.arms if a.kind == "random"), None)
        if passive is not None:
            dm_hat = metrics.d_model_predictive(truth, finals[passive], exp.hyp_spec, exp.target,
                                                grid_size=cfg.design_grid_size)
    return ReplicationResult(replication, truth.params, np.atleast_1d(theta_star), star_risk,
                             true_risk, dm, alb_value, trajectories, dm_hat)


def _run_arm(exp, name, replication, truth, eval_set):
    cfg = exp.config
    policy = exp.policies[name]
    learner = exp.learner(replication, name).reset()
    out_rng = seeding.rng(cfg.base_seed, replication, name, "outcomes")
    pol_rng = seeding.rng(cfg.base_seed, replication, name, "policy")
    binary = exp.hyp_spec.is_binary
    needs_eig = binary and policy.kind == "adaptive"
    T = cfg.horizon
    designs, risks, indices = [], np.empty(T), np.full(T, -1, dtype=np.int64)
    t = 0
    try:
        for t in range(T):
            stats = learner.mixture_stats(with_entropy=True) if needs_eig else None
            state = SelectionState(learner.posterior_, learner.spec_, exp.candidates, exp.target,
                                   pol_rng, stats)
            x, idx = choose_design(policy, state, t)
            y = truth.sample(x, out_rng)
            learner.partial_fit(np.asarray(x)[None, ...], [y])
            designs.append(x)
            if idx is not None:
                indices[t] = idx
            if binary:
                pbar, qbar, _ = learner.mixture_stats(with_entropy=needs_eig)
                risks[t] = metrics.cross_entropy_from_stats(eval_set.true_probs, pbar, qbar)
            else:
                risks[t] = learner.risk(eval_set)
    except ALBError as exc:
        raise SimulationError(str(exc), replication, name, t + 1) from exc
    traj = RiskTrajectory(name, replication, np.asarray(designs, dtype=float), risks, indices)
    return traj, learner.posterior_


# --------------------------------------------------------------------------
# batches

def run_batch(config, jobs=1, keep_results=True):
    """All replications, reduced in replication order."""
    reps = range(config.replications)
    if jobs == 1:
        results = [run_replication(config, r) for r in reps]
    else:
        results = Parallel(n_jobs=jobs)(delayed(run_replication)(config, r) for r in reps)
    return summarize(config, results, keep_results=keep_results)


def summarize(config, results, keep_results=True):
    exp = compile_experiment(config)
    results = sorted(results, key=lambda r: r.replication)
    R = len(results)
    arms = [a.name for a in config.arms]
    mean_risk, stderr, hists = {}, {}, {}
    for name in arms:
        M = np.stack([res.trajectories[name].risks for res in results])
        mean_risk[name] = M.mean(axis=0)
        stderr[name] = (M.std(axis=0, ddof=1) / math.sqrt(R)) if R > 1 else np.zeros(M.shape[1])
        hists[name] = design_histogram(exp, [res.trajectories[name] for res in results])
    records = [metrics.AlbRecord(res.replication, res.d_model, res.alb) for res in results]
    return BatchSummary(
        experiment=config.name,
        arms=arms,
        mean_risk=mean_risk,
        stderr=stderr,
        theta_star_risk=float(np.mean([res.theta_star_risk for res in results])),
        true_risk=float(np.mean([res.true_risk for res in results])),
        alb_records=records,
        histograms=hists,
        n_replications=R,
        results=results if keep_results else None,
    )


def design_histogram(exp, trajectories):
    """(bin_lo, bin_hi, count): 100 bins over the domain, or one bin per gamble."""
    if exp.gambles is not None:
        n = len(exp.candidates)
        idx = np.concatenate([tr.indices for tr in trajectories])
        counts = np.bincount(idx, minlength=n)
        lo = np.arange(n, dtype=float)
        return lo, lo + 1.0, counts
    tg = exp.target
    xs = np.concatenate([tr.designs for tr in trajectories])
    counts, edges = np.histogram(xs, bins=N_HIST_BINS, range=(tg.lo, tg.hi))
    return edges[:-1], edges[1:], counts
