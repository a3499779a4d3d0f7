"""Named experiment configurations reproducing the published figure settings."""

from __future__ import annotations

import numpy as np

from ..exceptions import ConfigError
from ..linreg import GENERATING_VARIANCES
from .config import (ArmConfig, ExperimentConfig, GeneratingPrior, HypothesisConfig,
                     Selection, TargetConfig, TrueModelConfig)

FULL_REPLICATIONS = 1000
DESK_REPLICATIONS = 200
DEFAULT_SEED = 20231019


def _normal(degree):
    return GeneratingPrior("normal", mean=[0.0] * (degree + 1),
                           cov=list(GENERATING_VARIANCES[:degree + 1]))


def _top_residual(k, xs):
    """Mean squared residual of x^k after least squares on 1, x, ..., x^(k-1)."""
    V = np.vander(xs, k, increasing=True)
    coef, *_ = np.linalg.lstsq(V, xs ** k, rcond=None)
    return float(np.mean((xs ** k - V @ coef) ** 2))


def _matched_cubic_prior():
    """Generating prior for cubic truths whose quadratic-fit D_model matches fig4-12's.

    D_model of the best fit is proportional to the squared top coefficient
    times the residual of the top monomial, so scaling var(beta_3) by the
    residual ratio makes both D_model distributions identical in law.
    """
    xs = np.linspace(0.0, 100.0, 1001)
    v3 = GENERATING_VARIANCES[2] * _top_residual(2, xs) / _top_residual(3, xs)
    return GeneratingPrior("normal", mean=[0.0] * 4, cov=list(GENERATING_VARIANCES[:3]) + [v3])


def _unit_interval():
    return TargetConfig("uniform-continuous", lo=0.0, hi=100.0)


def _two_arms():
    return [ArmConfig("adaptive", "adaptive"), ArmConfig("random", "random")]


def _regression(name, true_degree, hyp_degree, sigma=100.0, arms=None):
    gp = _matched_cubic_prior() if true_degree == 3 else _normal(true_degree)
    return ExperimentConfig(
        name=name,
        true_model=TrueModelConfig("gaussian-linear", gp, degree=true_degree, sigma=100.0),
        hypothesized=HypothesisConfig("gaussian-linear", degree=hyp_degree, sigma=sigma),
        target=_unit_interval(),
        arms=arms or _two_arms(),
    )


def _replay(name, true_degree, hyp_degree):
    arms = [ArmConfig("replay-sigma100", "replay", source_sigma=100.0),
            ArmConfig("random", "random")]
    return _regression(name, true_degree, hyp_degree, sigma=1000.0, arms=arms)


def _preference(name, true_family, hyp_epsilon=1.0):
    if true_family == "eut":
        gp = GeneratingPrior("uniform", lower=[0.0], upper=[1.0])
    else:
        gp = GeneratingPrior("uniform", lower=[0.0, 0.0, 1.0], upper=[1.0, 1.0, 2.0])
    return ExperimentConfig(
        name=name,
        true_model=TrueModelConfig(true_family, gp, epsilon=1.0),
        hypothesized=HypothesisConfig("eut", epsilon=hyp_epsilon),
        target=TargetConfig("gambles", n=200),
        arms=_two_arms(),
    )


def _classification(name, epsilon):
    return ExperimentConfig(
        name=name,
        true_model=TrueModelConfig("logistic-poly", _normal(2), degree=2, epsilon=1.0,
                                   select=Selection(candidates=200, keep_fraction=0.1,
                                                    score_epsilon=1.0)),
        hypothesized=HypothesisConfig("logistic-poly", degree=1, epsilon=epsilon),
        target=_unit_interval(),
        arms=_two_arms(),
    )


def _demo():
    # y ~ N(x^2, 0.5) fitted by a straight line on [-1, 1]
    return ExperimentConfig(
        name="fig1-demo",
        true_model=TrueModelConfig("gaussian-linear",
                                   GeneratingPrior("fixed", values=[0.0, 0.0, 1.0]),
                                   degree=2, sigma=0.5 ** 0.5),
        hypothesized=HypothesisConfig("gaussian-linear", degree=1, sigma=0.5 ** 0.5),
        target=TargetConfig("uniform-continuous", lo=-1.0, hi=1.0),
        arms=_two_arms(),
    )


_BUILDERS = {
    "fig3-linear": lambda: _regression("fig3-linear", 2, 1),
    "fig3-quadratic": lambda: _regression("fig3-quadratic", 2, 2),
    "fig3-cubic": lambda: _regression("fig3-cubic", 2, 3),
    "fig4-12": lambda: _regression("fig4-12", 2, 1),
    "fig4-23": lambda: _regression("fig4-23", 3, 2),
    "fig5a": lambda: _regression("fig5a", 2, 1, sigma=1000.0),
    "fig5b": lambda: _regression("fig5b", 3, 2, sigma=1000.0),
    "fig5c": lambda: _replay("fig5c", 2, 1),
    "fig5d": lambda: _replay("fig5d", 3, 2),
    "fig6a": lambda: _preference("fig6a", "eut"),
    "fig6b": lambda: _preference("fig6b", "cpt"),
    "fig6c": lambda: _preference("fig6c", "cpt"),
    "fig6d": lambda: _preference("fig6d", "cpt", hyp_epsilon=0.1),
    "fig8-eps1": lambda: _classification("fig8-eps1", 1.0),
    "fig8-eps01": lambda: _classification("fig8-eps01", 0.1),
    "fig8-eps001": lambda: _classification("fig8-eps001", 0.01),
    "fig1-demo": _demo,
}

PRESET_NAMES = tuple(_BUILDERS)


def preset(name, replications=None, base_seed=None):
    """Config for a figure id; ``replications`` overrides the full-scale 1,000."""
    try:
        cfg = _BUILDERS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}",
                          path="name") from None
    cfg.replications = FULL_REPLICATIONS if replications is None else int(replications)
    cfg.base_seed = DEFAULT_SEED if base_seed is None else int(base_seed)
    cfg.output_dir = f"runs/{name}"
    return ExperimentConfig.from_dict(cfg.to_dict())
