"""Synthetic crowd-sourced trace generator.

Random streams
--------------
All randomness comes from numpy's PCG64 bit generator seeded through
``numpy.random.SeedSequence``. Substreams are derived by spawn key rather than
by drawing order, so each user's draws are independent of how many other
users exist or in which order they are processed:

* ``SeedSequence(seed, spawn_key=(0, user_index))`` - one user's subscriptions,
  home/secondary tiles, mobility schedule and per-record demand noise;
* ``SeedSequence(seed, spawn_key=(1, app_index))`` - one app's per-day peak
  multipliers.

Per-user demand is log-normal with the requested mean and coefficient of
variation; per-(app, day) peak multipliers are log-normal with unit mean and
log-spread ``peak_irregularity``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .trace import Trace

HOURS_PER_DAY = 24
DAYS_PER_WEEK = 7
HOURS_PER_WEEK = HOURS_PER_DAY * DAYS_PER_WEEK

HOME_STAY_PROB = 0.8
N_SECONDARY_TILES = 3


def normalize_weights(weights, length: int) -> tuple[float, ...]:
    """Rescale non-negative weights to mean 1."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (length,):
        raise ValueError(f"expected {length} weights, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    mean = w.mean()
    if mean <= 0:
        raise ValueError("weights must not all be zero")
    return tuple((w / mean).tolist())


def diurnal_profile(morning_hour: float = 8.5, evening_hour: float = 20.5,
                    morning_peak: float = 1.0, evening_peak: float = 1.6,
                    night_floor: float = 0.15, width: float = 2.5) -> tuple[float, ...]:
    """Hour-of-day multipliers with a morning and an evening peak."""
    hours = np.arange(HOURS_PER_DAY, dtype=float)

    def bump(center):
        d = np.minimum(np.abs(hours - center), HOURS_PER_DAY - np.abs(hours - center))
        return np.exp(-0.5 * (d / width) ** 2)

    awake = 0.5 * (1 + np.tanh((hours - 6.5) / 1.2)) * 0.5 * (1 + np.tanh((23.5 - hours) / 1.2))
    w = night_floor + 0.35 * awake + morning_peak * bump(morning_hour) + evening_peak * bump(evening_hour)
    return normalize_weights(w, HOURS_PER_DAY)


@dataclass(frozen=True)
class AppProfile:
    app_id: str
    base_rate: float
    diurnal_weights: tuple[float, ...] = field(default_factory=diurnal_profile)
    weekly_weights: tuple[float, ...] = (1.0,) * DAYS_PER_WEEK
    peak_irregularity: float = 0.0
    user_fraction: float = 1.0

    def __post_init__(self):
        if not self.app_id:
            raise ValueError("app_id must be non-empty")
        if self.base_rate < 0:
            raise ValueError("base_rate must be non-negative")
        for name, n in (("diurnal_weights", HOURS_PER_DAY), ("weekly_weights", DAYS_PER_WEEK)):
            w = np.asarray(getattr(self, name), dtype=float)
            if w.shape != (n,):
                raise ValueError(f"{name} must have {n} entries")
            if np.any(w < 0):
                raise ValueError(f"{name} must be non-negative")
            if abs(w.mean() - 1.0) > 1e-9:
                raise ValueError(f"{name} must have mean 1 (use normalize_weights)")
            object.__setattr__(self, name, tuple(w.tolist()))
        if self.peak_irregularity < 0:
            raise ValueError("peak_irregularity must be non-negative")
        if not 0.0 <= self.user_fraction <= 1.0:
            raise ValueError("user_fraction must lie in [0, 1]")


def default_profiles() -> list[AppProfile]:
    """Four apps of different volume, popularity and daily shape."""
    return [
        AppProfile(
            "video", base_rate=40e6,
            diurnal_weights=diurnal_profile(morning_peak=0.6, evening_peak=1.8),
            weekly_weights=normalize_weights([1.0, 0.95, 0.97, 1.0, 1.1, 1.3, 1.25], 7),
            peak_irregularity=0.15, user_fraction=0.6,
        ),
        AppProfile(
            "social", base_rate=15e6,
            diurnal_weights=diurnal_profile(morning_hour=8.0, evening_hour=19.5,
                                            morning_peak=1.3, evening_peak=1.4),
            weekly_weights=normalize_weights([1.05, 1.0, 1.0, 1.02, 1.05, 0.95, 0.9], 7),
            peak_irregularity=0.2, user_fraction=0.8,
        ),
        AppProfile(
            "streaming", base_rate=60e6,
            diurnal_weights=diurnal_profile(morning_peak=0.2, evening_hour=21.5, evening_peak=2.4,
                                            night_floor=0.05),
            weekly_weights=normalize_weights([0.9, 0.9, 0.95, 1.0, 1.15, 1.3, 1.2], 7),
            peak_irregularity=0.1, user_fraction=0.25,
        ),
        AppProfile(
            "messaging", base_rate=2e6,
            diurnal_weights=diurnal_profile(morning_peak=1.1, evening_peak=1.1, night_floor=0.3),
            peak_irregularity=0.1, user_fraction=0.9,
        ),
    ]


@dataclass(frozen=True)
class GeneratorConfig:
    n_users: int = 100
    n_cells: int = 16
    grid_width: int = 32
    grid_height: int = 32
    weeks: int = 4
    apps: tuple[AppProfile, ...] = field(default_factory=lambda: tuple(default_profiles()))
    noise_cv: float = 0.3
    seed: int = 0
    ul_fraction: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "apps", tuple(self.apps))
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.weeks < 1:
            raise ValueError("weeks must be >= 1")
        if not self.apps:
            raise ValueError("at least one app profile is required")
        if len({a.app_id for a in self.apps}) != len(self.apps):
            raise ValueError("app ids must be unique")
        if self.grid_width < 1 or self.grid_height < 1:
            raise ValueError("grid dimensions must be >= 1")
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        rows, cols = cell_layout(self.n_cells)
        if cols > self.grid_width or rows > self.grid_height:
            raise ValueError(
                f"{self.n_cells} cells ({rows}x{cols} layout) do not fit a "
                f"{self.grid_width}x{self.grid_height} grid"
            )
        if self.noise_cv < 0:
            raise ValueError("noise_cv must be non-negative")
        if not 0.0 <= self.ul_fraction:
            raise ValueError("ul_fraction must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def duration(self) -> int:
        return self.weeks * HOURS_PER_WEEK


def demand_intensity(profile: AppProfile, period: int, day_multiplier: float = 1.0) -> float:
    """Expected bytes per subscribed user in ``period``."""
    if day_multiplier <= 0:
        raise ValueError("day_multiplier must be positive")
    hour = period % HOURS_PER_DAY
    weekday = (period // HOURS_PER_DAY) % DAYS_PER_WEEK
    return (profile.base_rate * profile.diurnal_weights[hour]
            * profile.weekly_weights[weekday] * day_multiplier)


def cell_layout(n_cells: int) -> tuple[int, int]:
    """(rows, cols) of the rectangular cell partition; rows <= cols."""
    rows = max(d for d in range(1, math.isqrt(n_cells) + 1) if n_cells % d == 0)
    return rows, n_cells // rows


def tile_to_cell(config: GeneratorConfig) -> np.ndarray:
    """grid_height x grid_width array of cell indices (contiguous rectangles)."""
    rows, cols = cell_layout(config.n_cells)
    col_of_x = np.concatenate([np.full(len(b), i) for i, b in
                               enumerate(np.array_split(np.arange(config.grid_width), cols))])
    row_of_y = np.concatenate([np.full(len(b), i) for i, b in
                               enumerate(np.array_split(np.arange(config.grid_height), rows))])
    return row_of_y[:, None] * cols + col_of_x[None, :]


def _id_width(n: int) -> int:
    return len(str(max(n - 1, 0)))


def day_multipliers(config: GeneratorConfig, app_index: int) -> np.ndarray:
    """Per-day peak multipliers of one app (unit mean, log-normal)."""
    sigma = config.apps[app_index].peak_irregularity
    n_days = config.weeks * DAYS_PER_WEEK
    if sigma == 0:
        return np.ones(n_days)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(1, app_index))))
    return np.exp(sigma * rng.standard_normal(n_days) - 0.5 * sigma**2)


def intensity_table(config: GeneratorConfig) -> np.ndarray:
    """apps x periods array of expected bytes per subscribed user."""
    t = np.arange(config.duration)
    hour = t % HOURS_PER_DAY
    day = t // HOURS_PER_DAY
    table = np.empty((len(config.apps), config.duration))
    for a, profile in enumerate(config.apps):
        mult = day_multipliers(config, a)
        table[a] = (profile.base_rate * np.asarray(profile.diurnal_weights)[hour]
                    * np.asarray(profile.weekly_weights)[day % DAYS_PER_WEEK] * mult[day])
    return table


def _lognormal(rng: np.random.Generator, mean: np.ndarray, cv: float) -> np.ndarray:
    if cv == 0:
        return mean
    s2 = math.log1p(cv * cv)
    z = rng.standard_normal(mean.shape)
    with np.errstate(divide="ignore"):
        return np.where(mean > 0, np.exp(np.log(np.where(mean > 0, mean, 1.0)) - 0.5 * s2 + math.sqrt(s2) * z), 0.0)


def _user_columns(config: GeneratorConfig, u: int, intensity: np.ndarray, cells: np.ndarray):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(0, u))))
    n_apps, duration = intensity.shape
    subscribed = rng.random(n_apps) < np.array([a.user_fraction for a in config.apps])
    n_tiles = config.grid_width * config.grid_height
    places = rng.integers(0, n_tiles, size=1 + N_SECONDARY_TILES)
    away = rng.random(duration) >= HOME_STAY_PROB
    where = np.where(away, rng.integers(1, 1 + N_SECONDARY_TILES, size=duration), 0)
    tile = places[where]
    tx, ty = tile % config.grid_width, tile // config.grid_width
    cell = cells[ty, tx]
    out = []
    for a in np.flatnonzero(subscribed):
        dl = np.rint(_lognormal(rng, intensity[a], config.noise_cv)).astype(np.int64)
        ul = np.rint(dl * config.ul_fraction).astype(np.int64)
        out.append((a, tx, ty, cell, dl, ul))
    return out


def generate_trace(config: GeneratorConfig) -> Trace:
    """Generate a trace of ``config.weeks`` hourly weeks; pure function of config."""
    duration = config.duration
    intensity = intensity_table(config)
    cells = tile_to_cell(config)
    uw, cw = _id_width(config.n_users), _id_width(config.n_cells)
    user_names = np.array([f"u{u:0{uw}d}" for u in range(config.n_users)])
    cell_names = np.array([f"c{c:0{cw}d}" for c in range(config.n_cells)])
    app_names = np.array([a.app_id for a in config.apps])
    periods = np.arange(duration, dtype=np.int64)

    cols: dict[str, list[np.ndarray]] = {k: [] for k in
                                         ("period", "user", "cell", "tx", "ty", "app", "dl", "ul")}
    for u in range(config.n_users):
        for a, tx, ty, cell, dl, ul in _user_columns(config, u, intensity, cells):
            cols["period"].append(periods)
            cols["user"].append(np.full(duration, u))
            cols["cell"].append(cell)
            cols["tx"].append(tx)
            cols["ty"].append(ty)
            cols["app"].append(np.full(duration, a))
            cols["dl"].append(dl)
            cols["ul"].append(ul)
    if not cols["period"]:
        return Trace.empty()
    cat = {k: np.concatenate(v) for k, v in cols.items()}
    return Trace(
        cat["period"], user_names[cat["user"]], cell_names[cat["cell"]], cat["tx"], cat["ty"],
        app_names[cat["app"]], cat["dl"], cat["ul"],
    )


def subscribed_users(config: GeneratorConfig) -> dict[str, int]:
    """Number of users subscribed to each app (same draws as generate_trace)."""
    counts = dict.fromkeys((a.app_id for a in config.apps), 0)
    fractions = np.array([a.user_fraction for a in config.apps])
    for u in range(config.n_users):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(0, u))))
        for a in np.flatnonzero(rng.random(len(config.apps)) < fractions):
            counts[config.apps[a].app_id] += 1
    return counts
