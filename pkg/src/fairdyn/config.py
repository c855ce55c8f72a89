"""Experiment configuration: TOML files, overrides and the named presets.

Config layout (all keys shown; see README for defaults)::

    name = "fig1a"
    policy = "MFG"            # or "CMFG"
    engine = "empirical"      # or "asymptotic"
    horizon = 400
    instances = 200
    base_seed = 0
    output_dir = "runs/fig1a"

    [target]
    alpha = 0.4

    [[institutions]]          # rank order, top institution first
    capacity = 0.1
    lambda = 0.75

    [distributions.group0]    # minority; or distributions.file = "fitted.toml"
    kind = "gaussian"
    mean = 5.0
    variance = 1.0

    [distributions.group1]
    kind = "gaussian"
    mean = 5.0
    variance = 1.0

    [pool]
    expected_total = 400
    clip_epsilon = 0.01
    fixed_total = true
    theta0 = 0.25

    [evolution]
    variant = "pure"          # pure | order | weighted | role_model
    beta = 1.0
    weights = [1.0, 1.0, 1.0]
    role_fraction = 1.0

    [evolution.step]
    kind = "fixed"            # or "decaying"
    eta = 0.5
    exponent = 1.0

    [sweep]
    lambda = [0.25, 0.75, 2.0]   # optional; one run per value, applied to every institution
"""
from __future__ import annotations

import copy
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import tomli
import tomli_w

from . import distributions as dist_mod
from .distributions import ScoreDistribution
from .evolution import EvolutionModel, StepSchedule
from .policy import Institution, check_institutions
from .pool import PoolConfig

POLICY_KINDS = ("MFG", "CMFG")
ENGINES = ("empirical", "asymptotic")
SEED_ENV = "FAIRDYN_SEED"


class ConfigError(ValueError):
    """Invalid or missing config field; the message starts with the field path."""


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float
    institutions: tuple
    distributions: tuple
    pool: PoolConfig = field(default_factory=PoolConfig)
    evolution: EvolutionModel = field(default_factory=EvolutionModel)
    policy_kind: str = "MFG"
    engine: str = "empirical"
    horizon: int = 400
    instances: int = 200
    base_seed: int = 0
    output_dir: str = "runs/default"
    lambda_sweep: tuple = ()
    name: str = ""

    @property
    def capacities(self) -> tuple:
        return tuple(inst.capacity for inst in self.institutions)

    @property
    def K(self) -> int:
        return len(self.institutions)

    def with_lambda(self, lam) -> "ExperimentConfig":
        """Copy with fairness weights replaced (scalar = same for all)."""
        lams = [lam] * self.K if isinstance(lam, (int, float)) else list(lam)
        insts = tuple(dataclasses.replace(i, fairness_weight=float(l))
                      for i, l in zip(self.institutions, lams))
        return dataclasses.replace(self, institutions=insts, lambda_sweep=())

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def _get(d: dict, key: str, path: str, default: Any = ..., cast=None):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}{key}: missing required field")
        return default
    val = d[key]
    if cast is None:
        return val
    try:
        return cast(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}{key}: invalid value {val!r} ({exc})") from None


def _wrap(path: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_distributions_file(path) -> tuple:
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    return tuple(_wrap(f"{path}:{g}", dist_mod.from_dict, data[g]) for g in ("group0", "group1"))


def save_distributions_file(dists, path) -> None:
    data = {"group0": dists[0].to_dict(), "group1": dists[1].to_dict()}
    with open(path, "wb") as fh:
        tomli_w.dump(data, fh)


def from_dict(d: dict, base_dir: Optional[Path] = None) -> ExperimentConfig:
    target = _get(d, "target", "")
    if not isinstance(target, dict):
        raise ConfigError("target: must be a table")
    alpha = _get(target, "alpha", "target.", cast=float)
    if not 0.0 < alpha < 1.0:
        raise ConfigError("target.alpha: must lie in (0, 1)")

    raw_insts = _get(d, "institutions", "")
    if not isinstance(raw_insts, list) or not raw_insts:
        raise ConfigError("institutions: must be a non-empty list of tables")
    insts = []
    for k, item in enumerate(raw_insts):
        p = f"institutions[{k}]."
        cap = _get(item, "capacity", p, cast=float)
        lam = _get(item, "lambda", p, 0.0, cast=float)
        insts.append(_wrap(f"institutions[{k}]", Institution, cap, lam))
    _wrap("institutions", check_institutions, insts)

    raw_d = _get(d, "distributions", "")
    if "file" in raw_d:
        fpath = Path(raw_d["file"])
        if base_dir is not None and not fpath.is_absolute():
            fpath = base_dir / fpath
        dists = _wrap("distributions.file", load_distributions_file, fpath)
    else:
        dists = tuple(_wrap(f"distributions.{g}", dist_mod.from_dict, _get(raw_d, g, "distributions."))
                      for g in ("group0", "group1"))

    raw_pool = d.get("pool", {})
    pool = _wrap("pool", PoolConfig,
                 expected_total=_get(raw_pool, "expected_total", "pool.", 400, int),
                 clip_epsilon=_get(raw_pool, "clip_epsilon", "pool.", 0.01, float),
                 fixed_total=_get(raw_pool, "fixed_total", "pool.", True, bool),
                 theta0=_get(raw_pool, "theta0", "pool.", 0.25, float))

    raw_ev = d.get("evolution", {})
    raw_step = raw_ev.get("step", {})
    step = _wrap("evolution.step", StepSchedule,
                 kind=_get(raw_step, "kind", "evolution.step.", "fixed", str),
                 eta=_get(raw_step, "eta", "evolution.step.", 0.5, float),
                 exponent=_get(raw_step, "exponent", "evolution.step.", 1.0, float))
    weights = raw_ev.get("weights")
    evolution = _wrap("evolution", EvolutionModel,
                      variant=_get(raw_ev, "variant", "evolution.", "pure", str),
                      beta=_get(raw_ev, "beta", "evolution.", 1.0, float),
                      weights=tuple(float(z) for z in weights) if weights is not None else None,
                      role_fraction=_get(raw_ev, "role_fraction", "evolution.", 1.0, float),
                      step=step)
    if evolution.weights is not None and len(evolution.weights) != len(insts):
        raise ConfigError("evolution.weights: length must match the number of institutions")

    policy = str(d.get("policy", "MFG")).upper()
    if policy not in POLICY_KINDS:
        raise ConfigError(f"policy: must be one of {POLICY_KINDS}")
    engine = str(d.get("engine", "empirical")).lower()
    if engine not in ENGINES:
        raise ConfigError(f"engine: must be one of {ENGINES}")
    horizon = _get(d, "horizon", "", 400, int)
    if horizon < 1:
        raise ConfigError("horizon: must be >= 1")
    instances = _get(d, "instances", "", 200, int)
    if instances < 1:
        raise ConfigError("instances: must be >= 1")
    sweep = d.get("sweep", {}).get("lambda", [])
    try:
        sweep = tuple(float(x) for x in sweep)
    except (TypeError, ValueError):
        raise ConfigError("sweep.lambda: must be a list of numbers") from None
    if any(x < 0 for x in sweep):
        raise ConfigError("sweep.lambda: values must be >= 0")

    return ExperimentConfig(
        alpha=alpha,
        institutions=tuple(insts),
        distributions=dists,
        pool=pool,
        evolution=evolution,
        policy_kind=policy,
        engine=engine,
        horizon=horizon,
        instances=instances,
        base_seed=_get(d, "base_seed", "", 0, int),
        output_dir=str(d.get("output_dir", "runs/default")),
        lambda_sweep=sweep,
        name=str(d.get("name", "")),
    )


def to_dict(cfg: ExperimentConfig) -> dict:
    ev: dict = {
        "variant": cfg.evolution.variant,
        "beta": cfg.evolution.beta,
        "role_fraction": cfg.evolution.role_fraction,
        "step": {"kind": cfg.evolution.step.kind, "eta": cfg.evolution.step.eta,
                 "exponent": cfg.evolution.step.exponent},
    }
    if cfg.evolution.weights is not None:
        ev["weights"] = list(cfg.evolution.weights)
    out = {
        "name": cfg.name,
        "policy": cfg.policy_kind,
        "engine": cfg.engine,
        "horizon": cfg.horizon,
        "instances": cfg.instances,
        "base_seed": cfg.base_seed,
        "output_dir": cfg.output_dir,
        "target": {"alpha": cfg.alpha},
        "institutions": [{"capacity": i.capacity, "lambda": i.fairness_weight}
                         for i in cfg.institutions],
        "distributions": {"group0": cfg.distributions[0].to_dict(),
                          "group1": cfg.distributions[1].to_dict()},
        "pool": dataclasses.asdict(cfg.pool),
        "evolution": ev,
    }
    if cfg.lambda_sweep:
        out["sweep"] = {"lambda": list(cfg.lambda_sweep)}
    return out


def dumps(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def loads(text: str, base_dir: Optional[Path] = None) -> ExperimentConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"<file>: not valid TOML ({exc})") from None
    return from_dict(data, base_dir)


def load(path) -> ExperimentConfig:
    path = Path(path)
    cfg = loads(path.read_text(), base_dir=path.parent)
    return apply_env(cfg)


def apply_env(cfg: ExperimentConfig) -> ExperimentConfig:
    seed = os.environ.get(SEED_ENV)
    if seed is None or seed == "":
        return cfg
    try:
        return cfg.replace(base_seed=int(seed))
    except ValueError:
        raise ConfigError(f"{SEED_ENV}: not an integer ({seed!r})") from None


def _parse_value(text: str):
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``dotted.key=value`` overrides; list items are addressed by index."""
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            else:
                node = node.setdefault(part, {})
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = _parse_value(text.strip())
        else:
            node[last] = _parse_value(text.strip())
    return data


# ---------------------------------------------------------------------------
# Presets


def _synthetic_base(name: str) -> dict:
    return {
        "name": name,
        "policy": "MFG",
        "engine": "empirical",
        "horizon": 400,
        "instances": 200,
        "base_seed": 0,
        "output_dir": f"runs/{name}",
        "target": {"alpha": 0.4},
        "institutions": [{"capacity": 0.1, "lambda": 0.75},
                         {"capacity": 0.05, "lambda": 0.75},
                         {"capacity": 0.2, "lambda": 0.75}],
        "distributions": {"group0": {"kind": "gaussian", "mean": 5.0, "variance": 1.0},
                          "group1": {"kind": "gaussian", "mean": 5.0, "variance": 1.0}},
        "pool": {"expected_total": 400, "clip_epsilon": 0.01, "fixed_total": True, "theta0": 0.25},
        "evolution": {"variant": "pure", "step": {"kind": "fixed", "eta": 0.5}},
    }


def _distinct(d: dict, lam: float = 1.0) -> dict:
    d["distributions"]["group0"] = {"kind": "gaussian", "mean": 4.9, "variance": 1.1}
    for inst in d["institutions"]:
        inst["lambda"] = lam
    return d


def _law_base(name: str) -> dict:
    d = _synthetic_base(name)
    d["target"]["alpha"] = 0.5
    d["institutions"] = [{"capacity": 0.15, "lambda": 1.0},
                         {"capacity": 0.10, "lambda": 1.0},
                         {"capacity": 0.05, "lambda": 1.0}]
    d["distributions"] = {"group0": {"kind": "gaussian", "mean": -1.46, "variance": 2.73},
                          "group1": {"kind": "gaussian", "mean": 0.79, "variance": 3.16}}
    d["sweep"] = {"lambda": [1.0, 3.0, 5.0]}
    return d


def _preset_dict(name: str) -> dict:
    d = _synthetic_base(name)
    if name == "fig1a":
        pass
    elif name == "fig1b":
        d["evolution"]["variant"] = "order"
        d["evolution"]["beta"] = 0.8
    elif name == "fig1c":
        d["evolution"]["variant"] = "weighted"
        d["evolution"]["weights"] = [1.0, 1.0, 1.0]
    elif name == "fig2":
        d["sweep"] = {"lambda": [0.25, 0.75, 2.0]}
    elif name == "fig3":
        lams = [0.75, 0.375, 0.1875]
        for inst, lam in zip(d["institutions"], lams):
            inst["lambda"] = lam
    elif name == "fig4":
        d["evolution"]["variant"] = "role_model"
        d["evolution"]["role_fraction"] = 0.5
    elif name == "fig5":
        _distinct(d)
    elif name == "fig7":
        d["policy"] = "CMFG"
    elif name == "fig8":
        _distinct(d)
        d["evolution"]["variant"] = "role_model"
        d["evolution"]["role_fraction"] = 0.5
    elif name == "law_fig7":
        d = _law_base(name)
    elif name == "fig9":
        d = _law_base(name)
        d["evolution"]["variant"] = "role_model"
        d["evolution"]["role_fraction"] = 0.8
    else:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return d


PRESETS = {
    "fig1a": "identical Gaussians, pure positive reinforcement, MFG",
    "fig1b": "as fig1a with order-based reinforcement, beta = 0.8",
    "fig1c": "as fig1a with weighted reinforcement, equal institution weights",
    "fig2": "as fig1a swept over lambda in {0.25, 0.75, 2.0}",
    "fig3": "as fig1a with per-institution lambda [0.75, 0.375, 0.1875]",
    "fig4": "as fig1a with role-model reinforcement, r = 0.5",
    "fig5": "distinct Gaussians N(4.9, 1.1) / N(5, 1), lambda = 1",
    "fig7": "as fig1a under the centralized (CMFG) policy",
    "fig8": "as fig5 with role-model reinforcement, r = 0.5",
    "fig9": "law-school Gaussians, role-model reinforcement r = 0.8, lambda in {1, 3, 5}",
    "law_fig7": "law-school Gaussians, pure positive reinforcement, lambda in {1, 3, 5}",
}


def preset_dict(name: str) -> dict:
    return _preset_dict(name)


def preset(name: str, overrides=()) -> ExperimentConfig:
    return from_dict(apply_overrides(_preset_dict(name), overrides))
