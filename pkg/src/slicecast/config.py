"""TOML configuration files for the generator, training and experiments.

One file can hold every section; each subcommand reads the part it needs::

    seed = 7                      # experiment seed (generator and training)
    out_dir = "runs/default"
    apps_under_study = ["video", "streaming", "social"]   # default: top 3 by traffic
    views = ["mno", "vertical", "joint"]
    engine = "lstm"               # lstm | hw | naive
    split = "504:168"
    agg = 8
    demand_mode = "dl+ul"         # dl | dl+ul
    history_window = 24           # 0 means cumulative since period 0
    headroom = 1.0

    [generator]                   # GeneratorConfig fields
    n_users = 100
    noise_cv = 0.3

    [[generator.apps]]            # AppProfile fields; weights are normalized to mean 1
    app_id = "video"
    base_rate = 40e6
    diurnal = { morning_peak = 0.6, evening_peak = 1.8 }   # or diurnal_weights = [24 values]
    weekly_weights = [1.0, 0.95, 0.97, 1.0, 1.1, 1.3, 1.25]

    [train]                       # TrainConfig fields
    epochs = 50

Omitted keys keep their defaults; an omitted ``[[generator.apps]]`` list uses
the built-in profiles. Unknown keys are rejected. ``SLICECAST_SEED`` in the
environment overrides ``seed``.
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DataError
from .features import DEFAULT_HISTORY_WINDOW, SplitSpec, ViewKind
from .forecasters import ENGINES, EngineConfig, TrainConfig
from .synth import AppProfile, GeneratorConfig, diurnal_profile, normalize_weights

SEED_ENV = "SLICECAST_SEED"


class ConfigError(DataError):
    pass


def read_toml(path: str | os.PathLike) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _check_keys(table: dict, allowed, where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _build(cls, table: dict, where: str, **overrides):
    names = [f.name for f in dataclasses.fields(cls)]
    _check_keys(table, names, where)
    try:
        return cls(**{**table, **overrides})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def app_profile_from_dict(d: dict) -> AppProfile:
    d = dict(d)
    where = f"app {d.get('app_id', '?')!r}"
    if "diurnal" in d:
        if "diurnal_weights" in d:
            raise ConfigError(f"{where}: give either diurnal or diurnal_weights, not both")
        shape = d.pop("diurnal")
        try:
            d["diurnal_weights"] = diurnal_profile(**shape)
        except TypeError as exc:
            raise ConfigError(f"{where}: diurnal: {exc}") from None
    try:
        for key, n in (("diurnal_weights", 24), ("weekly_weights", 7)):
            if key in d:
                d[key] = normalize_weights(d[key], n)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return _build(AppProfile, d, where)


def generator_config_from_dict(d: dict, seed: int | None = None) -> GeneratorConfig:
    d = dict(d)
    if "apps" in d:
        d["apps"] = tuple(app_profile_from_dict(a) for a in d["apps"])
    overrides = {} if seed is None else {"seed": seed}
    return _build(GeneratorConfig, d, "[generator]", **overrides)


def train_config_from_dict(d: dict, seed: int | None = None) -> TrainConfig:
    overrides = {} if seed is None else {"seed": seed}
    return _build(TrainConfig, d, "[train]", **overrides)


def env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError(f"{SEED_ENV} must be a 64-bit unsigned integer")
    return seed


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    apps_under_study: tuple[str, ...] | None = None  # None: the 3 highest-traffic apps
    views: tuple[ViewKind, ...] = tuple(ViewKind)
    engine: str = "lstm"
    split: SplitSpec = field(default_factory=SplitSpec)
    agg: int = 8
    demand_mode: str = "dl+ul"
    history_window: int | None = DEFAULT_HISTORY_WINDOW
    headroom: float = 1.0
    out_dir: Path = Path("slicecast-out")
    seed: int = 0

    def __post_init__(self):
        if self.apps_under_study is not None:
            apps = tuple(self.apps_under_study)
            if not apps:
                raise ConfigError("apps_under_study must not be empty")
            known = {a.app_id for a in self.generator.apps}
            missing = [a for a in apps if a not in known]
            if missing:
                raise ConfigError(f"apps_under_study not in the generator config: {', '.join(missing)}")
            object.__setattr__(self, "apps_under_study", apps)
        views = tuple(ViewKind.parse(v) for v in self.views)
        if not views:
            raise ConfigError("views must not be empty")
        if len(set(views)) != len(views):
            raise ConfigError("views contain duplicates")
        object.__setattr__(self, "views", views)
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}; expected one of {', '.join(ENGINES)}")
        if self.split.total != self.generator.duration:
            raise ConfigError(f"split {self.split} does not cover the {self.generator.duration}-period trace")
        if self.agg < 1:
            raise ConfigError("agg must be >= 1")
        if self.demand_mode not in ("dl", "dl+ul"):
            raise ConfigError("demand_mode must be 'dl' or 'dl+ul'")
        if self.history_window is not None and self.history_window < 1:
            raise ConfigError("history_window must be >= 1 (or 0 for cumulative)")
        if self.headroom <= 0:
            raise ConfigError("headroom must be positive")
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    @property
    def engine_config(self) -> EngineConfig:
        return EngineConfig(train=self.train)

    def as_meta(self) -> dict:
        """Settings recorded in the report (no paths, so reports compare across directories)."""
        return {
            "seed": self.seed,
            "engine": self.engine,
            "split": str(self.split),
            "agg": self.agg,
            "demand_mode": self.demand_mode,
            "history_window": self.history_window or 0,
            "headroom": self.headroom,
            "views": [v.value for v in self.views],
            "generator": {k: v for k, v in dataclasses.asdict(self.generator).items() if k != "apps"},
            "train": dataclasses.asdict(self.train),
        }


EXPERIMENT_KEYS = ("seed", "out_dir", "apps_under_study", "views", "engine", "split", "agg",
                   "demand_mode", "history_window", "headroom", "generator", "train")


def experiment_config_from_dict(d: dict, seed: int | None = None, out_dir: str | None = None,
                                ) -> ExperimentConfig:
    _check_keys(d, EXPERIMENT_KEYS, "experiment config")
    if seed is None:
        seed = env_seed()
    if seed is None:
        seed = d.get("seed", 0)
    kwargs = {k: d[k] for k in ("apps_under_study", "views", "engine", "agg", "demand_mode", "headroom")
              if k in d}
    if "split" in d:
        try:
            kwargs["split"] = SplitSpec.parse(str(d["split"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if "history_window" in d:
        kwargs["history_window"] = int(d["history_window"]) or None
    if out_dir is not None or "out_dir" in d:
        kwargs["out_dir"] = Path(out_dir if out_dir is not None else d["out_dir"])
    try:
        return ExperimentConfig(
            generator=generator_config_from_dict(d.get("generator", {}), seed),
            train=train_config_from_dict(d.get("train", {}), seed),
            seed=seed, **kwargs,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_experiment_config(path: str | os.PathLike | None = None, **kw) -> ExperimentConfig:
    """Read an experiment file; ``None`` loads the bundled default experiment."""
    return experiment_config_from_dict(read_toml(path) if path else default_experiment_dict(), **kw)


def default_experiment_dict() -> dict:
    text = resources.files("slicecast").joinpath("data/default_experiment.toml").read_text("utf-8")
    return tomllib.loads(text)


def _section(d: dict, name: str) -> dict:
    """The named table, or the whole file when it is a bare table of that section."""
    if name in d or any(k in EXPERIMENT_KEYS for k in d):
        return d.get(name, {})
    return d


def load_generator_config(path: str | os.PathLike | None, seed: int | None = None) -> GeneratorConfig:
    """``[generator]`` table of a config file (or the whole file if it has no such table)."""
    if seed is None:
        seed = env_seed()
    if path is None:
        return generator_config_from_dict({}, seed)
    d = read_toml(path)
    return generator_config_from_dict(_section(d, "generator"), seed)


def load_train_config(path: str | os.PathLike | None, seed: int | None = None) -> TrainConfig:
    if seed is None:
        seed = env_seed()
    if path is None:
        return train_config_from_dict({}, seed)
    d = read_toml(path)
    return train_config_from_dict(_section(d, "train"), seed)
