"""Experiment configuration: ``key = value`` lines with dotted section keys.

Blank lines and ``#`` comments are ignored. Lists are comma separated. Every
key has a default, so a file only needs the values it changes; unknown keys
are rejected. Errors carry the offending key path.
"""
import math
import os
from dataclasses import dataclass

from ._validation import ConfigError
from .best_response import QLearningParams
from .psro import OBJECTIVES, PsroConfig

ALL_OBJECTIVES = OBJECTIVES + ("dr",)
ENVIRONMENTS = ("lavaworld", "windywalk")


def _int(v):
    return int(v)


def _float(v):
    return float(v)


def _optional_int(v):
    return None if v.lower() in ("", "auto", "none") else int(v)


def _float_list(v):
    return tuple(float(x) for x in v.split(",") if x.strip())


def _int_list(v):
    return tuple(int(x) for x in v.split(",") if x.strip())


def _str_list(v):
    return tuple(x.strip() for x in v.split(",") if x.strip())


def _bool(v):
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


# key -> (parser, default text)
SCHEMA = {
    "env.name": (str, "lavaworld"),
    "env.map": (str, ""),
    "env.grid_values": (_float_list, "0.01, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10"),
    "experiment.objectives": (_str_list, "farr, minimax, regret, dr"),
    "experiment.lambdas": (_float_list, "-10"),
    "experiment.penalty_c": (_float, "50"),
    "experiment.seeds": (_int_list, "0"),
    "experiment.out": (str, "runs"),
    "experiment.n_jobs": (_int, "1"),
    "psro.iterations": (_int, "25"),
    "psro.fp_iterations": (_int, "2000"),
    "psro.rollouts": (_optional_int, "auto"),
    "psro.initial_thetas": (_int, "3"),
    "psro.thetas_per_iteration": (_int, "3"),
    "psro.br_method": (str, "exact"),
    "psro.br_budget": (_optional_int, "none"),
    "evaluator.method": (str, "exact"),
    "evaluator.seeds": (_optional_int, "auto"),
    "evaluator.budget": (_optional_int, "none"),
    "evaluator.episodes": (_int, "100"),
    "dr.method": (str, "exact"),
    "dr.budget": (_optional_int, "none"),
    "qlearning.learning_rate": (_float, "0.1"),
    "qlearning.epsilon_start": (_float, "0.5"),
    "qlearning.epsilon_end": (_float, "0.01"),
    "qlearning.epsilon_decay_steps": (_int, "20000"),
    "qlearning.time_indexed": (_bool, "false"),
}


def parse_lines(text, origin="<config>"):
    """Raw ``{key: value}`` strings from config text."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}", f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        raw[key] = value
    return raw


def parse_overrides(pairs):
    raw = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(pair, "override must look like key=value")
        key, value = (part.strip() for part in pair.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        raw[key] = value
    return raw


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict
    base_dir: str = "."

    def __getitem__(self, key):
        return self.values[key]

    @property
    def objectives(self):
        return self.values["experiment.objectives"]

    @property
    def lambdas(self):
        return self.values["experiment.lambdas"]

    @property
    def seeds(self):
        return self.values["experiment.seeds"]

    def map_path(self):
        path = self.values["env.map"]
        if not path:
            return None
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def make_env(self):
        from .envs import LavaWorldEnv, WindyWalkEnv, load_map

        if self["env.name"] == "lavaworld":
            path = self.map_path()
            if path is None:
                return LavaWorldEnv()
            with open(path) as fh:
                return LavaWorldEnv(load_map(fh.read()))
        return WindyWalkEnv(self["env.grid_values"])

    def q_params(self):
        return QLearningParams(
            learning_rate=self["qlearning.learning_rate"],
            epsilon_start=self["qlearning.epsilon_start"],
            epsilon_end=self["qlearning.epsilon_end"],
            epsilon_decay_steps=self["qlearning.epsilon_decay_steps"],
            time_indexed=self["qlearning.time_indexed"],
        )

    def psro_config(self, lam):
        return PsroConfig(
            lam=float(lam),
            penalty_c=self["experiment.penalty_c"],
            iterations=self["psro.iterations"],
            fp_iterations=self["psro.fp_iterations"],
            rollouts=self["psro.rollouts"],
            initial_thetas=self["psro.initial_thetas"],
            thetas_per_iteration=self["psro.thetas_per_iteration"],
            br_method=self["psro.br_method"],
            br_budget=self["psro.br_budget"],
            q_params=self.q_params(),
            evaluator_method=self["evaluator.method"],
            evaluator_seeds=self["evaluator.seeds"],
            evaluator_budget=self["evaluator.budget"],
            eval_episodes=self["evaluator.episodes"],
        )

    def to_text(self):
        """Resolved snapshot; parsing it back yields an equal config."""
        lines = []
        for key in SCHEMA:
            v = self.values[key]
            if isinstance(v, tuple):
                v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif v is None:
                v = "none"
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            elif key == "env.map" and v:
                v = os.path.abspath(self.map_path())
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"


_PSRO_KEYS = {
    "lam": "experiment.lambdas",
    "penalty_c": "experiment.penalty_c",
    "iterations": "psro.iterations",
    "fp_iterations": "psro.fp_iterations",
    "rollouts": "psro.rollouts",
    "initial_thetas": "psro.initial_thetas",
    "thetas_per_iteration": "psro.thetas_per_iteration",
    "br_method": "psro.br_method",
    "br_budget": "psro.br_budget",
    "evaluator_method": "evaluator.method",
    "evaluator_budget": "evaluator.budget",
    "eval_episodes": "evaluator.episodes",
}


def _resolve(raw, base_dir):
    values = {}
    for key, (parse, default) in SCHEMA.items():
        text = raw.get(key, default)
        try:
            values[key] = parse(text)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {text!r}: {exc}") from None
    return values


def _validate(cfg):
    v = cfg.values
    if v["env.name"] not in ENVIRONMENTS:
        raise ConfigError("env.name", f"must be one of {ENVIRONMENTS}")
    bad = [o for o in v["experiment.objectives"] if o not in ALL_OBJECTIVES]
    if bad or not v["experiment.objectives"]:
        raise ConfigError("experiment.objectives", f"entries must come from {ALL_OBJECTIVES}, got {bad or 'nothing'}")
    if not v["experiment.lambdas"]:
        raise ConfigError("experiment.lambdas", "need at least one lambda")
    for lam in v["experiment.lambdas"]:
        if not math.isfinite(lam):
            raise ConfigError("experiment.lambdas", f"lambda must be finite, got {lam}")
    if not v["experiment.seeds"]:
        raise ConfigError("experiment.seeds", "need at least one seed")
    if not math.isfinite(v["experiment.penalty_c"]):
        raise ConfigError("experiment.penalty_c", "must be finite")
    if v["experiment.n_jobs"] == 0:
        raise ConfigError("experiment.n_jobs", "must be nonzero")
    for key in ("psro.br_method", "evaluator.method", "dr.method"):
        if v[key] not in ("exact", "qlearning"):
            raise ConfigError(key, "must be 'exact' or 'qlearning'")
    for key in ("evaluator.seeds", "psro.br_budget", "evaluator.budget", "dr.budget"):
        if v[key] is not None and v[key] < 1:
            raise ConfigError(key, f"must be a positive integer, got {v[key]}")
    if v["dr.method"] == "qlearning" and not v["dr.budget"]:
        raise ConfigError("dr.budget", "required when dr.method is 'qlearning'")
    try:
        env = cfg.make_env()
    except (OSError, ValueError) as exc:
        raise ConfigError("env.map" if v["env.name"] == "lavaworld" else "env.grid_values", str(exc)) from None
    if not v["experiment.penalty_c"] > env.max_return:
        raise ConfigError(
            "experiment.penalty_c",
            f"{v['experiment.penalty_c']} must exceed the environment's max return {env.max_return}",
        )
    for lam in v["experiment.lambdas"]:
        try:
            cfg.psro_config(lam)
        except ValueError as exc:
            field = str(exc).split()[0]
            raise ConfigError(_PSRO_KEYS.get(field, "psro"), str(exc)) from None
    return cfg


def load_config(text, overrides=(), base_dir=".", origin="<config>"):
    raw = parse_lines(text, origin)
    raw.update(parse_overrides(overrides))
    return _validate(ExperimentConfig(_resolve(raw, base_dir), base_dir))


def load_config_file(path, overrides=()):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    return load_config(text, overrides, os.path.dirname(os.path.abspath(path)), str(path))
