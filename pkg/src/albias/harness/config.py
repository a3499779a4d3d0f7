"""Experiment configuration: dataclasses plus JSON (de)serialization.

A config file is a JSON object::

    {
      "name": "fig3-linear",
      "true_model": {
        "family": "gaussian-linear", "degree": 2, "sigma": 100.0,
        "generating_prior": {"kind": "normal", "mean": [0, 0, 0], "cov": [100, 10, 0.1]}
      },
      "hypothesized": {"family": "gaussian-linear", "degree": 1, "sigma": 100.0},
      "target": {"kind": "uniform-continuous", "lo": 0, "hi": 100},
      "arms": [{"name": "adaptive", "kind": "adaptive"},
               {"name": "random", "kind": "random"}],
      "horizon": 100, "replications": 1000, "base_seed": 20231019,
      "eval_size": 100, "design_grid_size": 1001, "output_dir": "runs/fig3-linear"
    }

``generating_prior.kind`` is ``normal`` (``cov`` may be a diagonal),
``uniform`` (``lower``/``upper``) or ``fixed`` (``values``). An optional
``select`` block (``candidates``, ``keep_fraction``, ``score_epsilon``) keeps
only the generating parameters whose best-fitting hypothesized model is most
misspecified. ``target.kind`` is ``uniform-continuous`` or ``gambles``
(``n``, optional ``seed``). Replay arms give either ``designs`` or
``source_sigma`` (the adaptive sequence of the same linear class under that
noise level).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from ..core import FAMILIES
from ..exceptions import ConfigError

TARGET_KINDS = ("uniform-continuous", "gambles")
PRIOR_KINDS = ("normal", "uniform", "fixed")
ARM_KINDS = ("adaptive", "random", "replay")


@dataclass
class GeneratingPrior:
    kind: str
    mean: list = None
    cov: list = None
    lower: list = None
    upper: list = None
    values: list = None


@dataclass
class Selection:
    candidates: int = 200
    keep_fraction: float = 0.1
    score_epsilon: float = 1.0


@dataclass
class TrueModelConfig:
    family: str
    generating_prior: GeneratingPrior
    degree: int = 0
    sigma: float = None
    epsilon: float = 1.0
    select: Selection = None


@dataclass
class HypothesisConfig:
    family: str
    degree: int = 0
    sigma: float = None
    epsilon: float = 1.0
    prior: GeneratingPrior = None
    lattice_size: int = 1001
    n_particles: int = 10_000


@dataclass
class TargetConfig:
    kind: str
    lo: float = None
    hi: float = None
    n: int = None
    seed: int = None


@dataclass
class ArmConfig:
    name: str
    kind: str
    designs: list = None
    source_sigma: float = None


@dataclass
class ExperimentConfig:
    name: str
    true_model: TrueModelConfig
    hypothesized: HypothesisConfig
    target: TargetConfig
    arms: list = field(default_factory=list)
    horizon: int = 100
    replications: int = 1000
    base_seed: int = 20231019
    eval_size: int = 100
    design_grid_size: int = 1001
    output_dir: str = None
    alb_arm: str = None

    def to_dict(self):
        return _strip_none(asdict(self))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, data, source=None):
        return _parse_config(data, source)

    def replace(self, **changes):
        data = self.to_dict()
        data.update({k: v for k, v in changes.items() if v is not None})
        return ExperimentConfig.from_dict(data)

    @property
    def alb_arm_name(self):
        if self.alb_arm:
            return self.alb_arm
        for arm in self.arms:
            if arm.kind != "random":
                return arm.name
        return self.arms[0].name


def _strip_none(obj):
    if isinstance(obj, dict):
        return {k: _strip_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_strip_none(v) for v in obj]
    return obj


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    try:
        return parse_config_text(text)
    except ConfigError as exc:
        raise ConfigError(exc.message, exc.path, exc.line, file=path) from None


def parse_config_text(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return _parse_config(data, text)


def save_config(config, path):
    with open(path, "w") as fh:
        fh.write(config.to_json())


# --------------------------------------------------------------------------
# validation

class _Reader:
    def __init__(self, data, path, source):
        if not isinstance(data, dict):
            raise ConfigError("expected an object", path=path or "<root>",
                              line=_locate(source, path))
        self.data = data
        self.path = path
        self.source = source
        self.used = set()

    def _p(self, key):
        return f"{self.path}.{key}" if self.path else key

    def error(self, key, msg):
        p = self._p(key)
        return ConfigError(msg, path=p, line=_locate(self.source, p))

    def get(self, key, types, default=..., check=None, msg=None):
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            if default is ...:
                raise self.error(key, "required field is missing")
            return default
        val = self.data[key]
        if isinstance(val, bool) or not isinstance(val, types):
            names = "/".join(t.__name__ for t in (types if isinstance(types, tuple) else (types,)))
            raise self.error(key, f"expected {names}, got {type(val).__name__}")
        if check is not None and not check(val):
            raise self.error(key, msg or f"invalid value {val!r}")
        return val

    def sub(self, key, required=True):
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            if required:
                raise self.error(key, "required section is missing")
            return None
        return _Reader(self.data[key], self._p(key), self.source)

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise self.error(extra[0], "unknown field")


def _locate(source, path):
    if not source or not path:
        return None
    key = path.split(".")[-1].split("[")[0]
    needle = f'"{key}"'
    for i, line in enumerate(source.splitlines(), start=1):
        if needle in line:
            return i
    return None


_NUM = (int, float)


def _num_list(r, key, default=...):
    val = r.get(key, list, default)
    if val is default:
        return val
    if not all(isinstance(v, _NUM) and not isinstance(v, bool) for v in val):
        raise r.error(key, "expected a list of numbers")
    return [float(v) for v in val]


def _parse_prior(r):
    kind = r.get("kind", str, check=lambda v: v in PRIOR_KINDS,
                 msg=f"kind must be one of {PRIOR_KINDS}")
    out = GeneratingPrior(kind)
    if kind == "normal":
        out.mean = _num_list(r, "mean")
        out.cov = r.get("cov", list)
        flat = [v for row in out.cov for v in (row if isinstance(row, list) else [row])]
        if not all(isinstance(v, _NUM) for v in flat):
            raise r.error("cov", "expected numbers")
        if not (len(out.cov) == len(out.mean)):
            raise r.error("cov", "covariance size does not match mean")
    elif kind == "uniform":
        out.lower = _num_list(r, "lower")
        out.upper = _num_list(r, "upper")
        if len(out.lower) != len(out.upper) or any(lo >= hi for lo, hi in zip(out.lower, out.upper)):
            raise r.error("upper", "need lower < upper in every coordinate")
    else:
        out.values = _num_list(r, "values")
    r.finish()
    return out


def _family(r):
    return r.get("family", str, check=lambda v: v in FAMILIES, msg=f"family must be one of {FAMILIES}")


def _positive(v):
    return v > 0


def _parse_true(r):
    fam = _family(r)
    t = TrueModelConfig(fam, None)
    t.degree = r.get("degree", int, 0, check=lambda v: v >= 0, msg="degree must be >= 0")
    t.sigma = r.get("sigma", _NUM, None, check=_positive, msg="sigma must be > 0")
    t.epsilon = float(r.get("epsilon", _NUM, 1.0, check=_positive, msg="epsilon must be > 0"))
    if fam == "gaussian-linear" and t.sigma is None:
        raise r.error("sigma", "gaussian-linear truth needs sigma")
    t.generating_prior = _parse_prior(r.sub("generating_prior"))
    sel = r.sub("select", required=False)
    if sel is not None:
        t.select = Selection(
            candidates=sel.get("candidates", int, 200, check=_positive),
            keep_fraction=float(sel.get("keep_fraction", _NUM, 0.1,
                                        check=lambda v: 0 < v <= 1, msg="keep_fraction in (0, 1]")),
            score_epsilon=float(sel.get("score_epsilon", _NUM, 1.0, check=_positive)),
        )
        sel.finish()
    r.finish()
    return t


def _parse_hyp(r):
    fam = _family(r)
    h = HypothesisConfig(fam)
    h.degree = r.get("degree", int, 0, check=lambda v: v >= 0, msg="degree must be >= 0")
    h.sigma = r.get("sigma", _NUM, None, check=_positive, msg="sigma must be > 0")
    h.epsilon = float(r.get("epsilon", _NUM, 1.0, check=_positive, msg="epsilon must be > 0"))
    if fam == "gaussian-linear" and h.sigma is None:
        raise r.error("sigma", "gaussian-linear class needs sigma")
    if fam == "cpt":
        raise r.error("family", "only eut, logistic-poly and gaussian-linear classes can be estimated")
    pr = r.sub("prior", required=False)
    h.prior = _parse_prior(pr) if pr is not None else None
    h.lattice_size = r.get("lattice_size", int, 1001, check=lambda v: v >= 2)
    h.n_particles = r.get("n_particles", int, 10_000, check=lambda v: v >= 10)
    r.finish()
    return h


def _parse_target(r):
    kind = r.get("kind", str, check=lambda v: v in TARGET_KINDS, msg=f"kind must be one of {TARGET_KINDS}")
    t = TargetConfig(kind)
    if kind == "uniform-continuous":
        t.lo = float(r.get("lo", _NUM))
        t.hi = float(r.get("hi", _NUM, check=lambda v: v > t.lo, msg="hi must exceed lo"))
    else:
        t.n = r.get("n", int, 200, check=_positive)
        t.seed = r.get("seed", int, None)
    r.finish()
    return t


def _parse_arms(raw, source):
    if not isinstance(raw, list) or not raw:
        raise ConfigError("need a non-empty list of arms", path="arms", line=_locate(source, "arms"))
    arms = []
    for i, item in enumerate(raw):
        r = _Reader(item, f"arms[{i}]", source)
        kind = r.get("kind", str, check=lambda v: v in ARM_KINDS, msg=f"kind must be one of {ARM_KINDS}")
        arm = ArmConfig(r.get("name", str, kind), kind)
        if kind == "replay":
            arm.designs = r.get("designs", list, None)
            arm.source_sigma = r.get("source_sigma", _NUM, None, check=_positive)
            if arm.designs is None and arm.source_sigma is None:
                raise r.error("designs", "replay arm needs designs or source_sigma")
        r.finish()
        arms.append(arm)
    names = [a.name for a in arms]
    if len(set(names)) != len(names):
        raise ConfigError("arm names must be unique", path="arms", line=_locate(source, "arms"))
    return arms


def _parse_config(data, source=None):
    r = _Reader(data, "", source)
    name = r.get("name", str)
    true = _parse_true(r.sub("true_model"))
    hyp = _parse_hyp(r.sub("hypothesized"))
    target = _parse_target(r.sub("target"))
    r.used.add("arms")
    arms = _parse_arms(data.get("arms"), source)
    cfg = ExperimentConfig(name, true, hyp, target, arms)
    cfg.horizon = r.get("horizon", int, 100, check=lambda v: v >= 1, msg="horizon must be >= 1")
    cfg.replications = r.get("replications", int, 1000, check=lambda v: v >= 1,
                             msg="replications must be >= 1")
    cfg.base_seed = r.get("base_seed", int, 20231019, check=lambda v: 0 <= v < 2 ** 64,
                          msg="base_seed must be a non-negative 64-bit integer")
    cfg.eval_size = r.get("eval_size", int, 100, check=_positive)
    cfg.design_grid_size = r.get("design_grid_size", int, 1001, check=lambda v: v >= 2)
    cfg.output_dir = r.get("output_dir", str, None)
    cfg.alb_arm = r.get("alb_arm", str, None, check=lambda v: v in [a.name for a in arms],
                        msg="alb_arm must name one of the arms")
    r.finish()
    _cross_checks(cfg, source)
    return cfg


def _cross_checks(cfg, source):
    t, h = cfg.true_model, cfg.hypothesized
    gambles = t.family in ("eut", "cpt")
    if gambles != (h.family == "eut") or gambles != (cfg.target.kind == "gambles"):
        raise ConfigError("gamble models need a gambles target and vice versa",
                          path="target.kind", line=_locate(source, "target"))
    if (t.family == "gaussian-linear") != (h.family == "gaussian-linear"):
        raise ConfigError("true and hypothesized outcome types differ",
                          path="hypothesized.family", line=_locate(source, "hypothesized"))
    n_true = {"eut": 1, "cpt": 3}.get(t.family, t.degree + 1)
    gp = t.generating_prior
    size = len(gp.mean or gp.lower or gp.values or [])
    if size != n_true:
        raise ConfigError(f"generating prior has {size} coordinates, model needs {n_true}",
                          path="true_model.generating_prior", line=_locate(source, "generating_prior"))
    for arm in cfg.arms:
        if arm.kind == "replay" and arm.source_sigma is not None and h.family != "gaussian-linear":
            raise ConfigError("source_sigma replay is only defined for gaussian-linear classes",
                              path="arms", line=_locate(source, "source_sigma"))
