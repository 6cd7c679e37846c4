"""Driving Brownian motion, adapted path access, and Ito-process semimartingales.

Randomness discipline: every stream is derived from a single 64-bit seed and a
tuple of integer keys via numpy's SeedSequence spawn keys, so Monte Carlo
results do not depend on scheduling order. Time stepping is Euler-Maruyama in
the Ito convention (integrands at left endpoints).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AdaptednessError, WindowError
from .grid import SpectralField, TorusGrid, l2_norm

# Stream tags keeping per-purpose randomness disjoint under one global seed.
STREAM_BROWNIAN = 1
STREAM_TRIAL_FIELDS = 2
STREAM_SAMPLING = 3


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic generator keyed by (seed, *key); stable across platforms."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform nodes t_k = k T / K on [0, T]."""

    horizon: float = 0.25
    steps: int = 512

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def nodes(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def node(self, k: int) -> float:
        return k * self.dt


@dataclass(frozen=True)
class BrownianPath:
    """One sampled trajectory of the driving 1-d Brownian motion."""

    time_grid: TimeGrid
    values: np.ndarray
    seed: int
    path_index: int

    def slice_at(self, cutoff_index: int) -> "PathSlice":
        if not (0 <= cutoff_index <= self.time_grid.steps):
            raise ValueError(f"cutoff index {cutoff_index} outside [0, {self.time_grid.steps}]")
        return PathSlice(self, cutoff_index)

    def full_slice(self) -> "PathSlice":
        return PathSlice(self, self.time_grid.steps)


@dataclass(frozen=True)
class PathSlice:
    """Causally truncated view of a BrownianPath: values visible only up to the cutoff.

    Evaluation rules receive a PathSlice whose cutoff equals their own time node,
    which makes adaptedness a structural property rather than a convention.
    """

    underlying: BrownianPath
    cutoff_index: int

    @property
    def cutoff_time(self) -> float:
        return self.underlying.time_grid.node(self.cutoff_index)

    def value_at_index(self, k: int) -> float:
        if k > self.cutoff_index:
            raise AdaptednessError(
                f"requested node {k} beyond adapted cutoff {self.cutoff_index}")
        return float(self.underlying.values[k])

    def value(self, t: float) -> float:
        """Piecewise-linear interpolant of the path, defined for t <= cutoff_time."""
        tg = self.underlying.time_grid
        if t < -1e-12 * tg.horizon or t > self.cutoff_time + 1e-12 * tg.horizon:
            raise AdaptednessError(
                f"requested time {t} beyond adapted cutoff {self.cutoff_time}")
        pos = min(max(t, 0.0), self.cutoff_time) / tg.dt
        k = min(int(math.floor(pos)), self.cutoff_index - 1) if self.cutoff_index > 0 else 0
        frac = pos - k
        w = self.underlying.values
        if self.cutoff_index == 0:
            return float(w[0])
        return float((1.0 - frac) * w[k] + frac * w[k + 1])


def sample_brownian(seed: int, path_index: int, time_grid: TimeGrid) -> BrownianPath:
    """Standard Brownian motion at the grid nodes, w(0) = 0, keyed by (seed, path_index)."""
    rng = derive_rng(seed, STREAM_BROWNIAN, path_index)
    increments = rng.normal(0.0, math.sqrt(time_grid.dt), size=time_grid.steps)
    values = np.concatenate([[0.0], np.cumsum(increments)])
    values.setflags(write=False)
    return BrownianPath(time_grid, values, int(seed), int(path_index))


# Drift/diffusion evaluation rules: (t, PathSlice, current state) -> SpectralField.
FieldRule = Callable[[float, PathSlice, SpectralField], SpectralField]


@dataclass
class Semimartingale:
    """A simulated L2-valued process: one snapshot per time node along one path."""

    time_grid: TimeGrid
    grid: TorusGrid
    snapshots: tuple[SpectralField, ...]
    path: BrownianPath
    drift: FieldRule | None = field(default=None, repr=False)
    diffusion: FieldRule | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.snapshots) != self.time_grid.steps + 1:
            raise ValueError("need one snapshot per time node")

    def increment(self, k: int) -> SpectralField:
        return self.snapshots[k + 1] - self.snapshots[k]


def ito_process(drift: FieldRule | None, diffusion: FieldRule | None, path: BrownianPath,
                grid: TorusGrid, initial: SpectralField | None = None) -> Semimartingale:
    """Euler-Maruyama simulation of dY = f dt + g dw along the given path."""
    tg = path.time_grid
    y = initial if initial is not None else SpectralField.zero(grid)
    snapshots = [y]
    w = path.values
    for k in range(tg.steps):
        t = tg.node(k)
        slc = path.slice_at(k)
        step = y
        if drift is not None:
            step = step + tg.dt * drift(t, slc, y)
        if diffusion is not None:
            step = step + float(w[k + 1] - w[k]) * diffusion(t, slc, y)
        y = step
        snapshots.append(y)
    return Semimartingale(tg, grid, tuple(snapshots), path, drift, diffusion)


def sine_window(time_grid: TimeGrid) -> np.ndarray:
    return np.sin(np.pi * time_grid.nodes() / time_grid.horizon)


def parabolic_window(time_grid: TimeGrid) -> np.ndarray:
    t = time_grid.nodes()
    return 4.0 * t * (time_grid.horizon - t) / time_grid.horizon**2


def windowed_ito_process(drift: FieldRule | None, diffusion: FieldRule | None,
                         window: Callable[[TimeGrid], np.ndarray] | np.ndarray | None,
                         path: BrownianPath, grid: TorusGrid,
                         initial: SpectralField | None = None) -> Semimartingale:
    """Admissible endpoint-pinned process z(t) = eta(t) Y(t) with dY = f dt + g dw.

    The window eta must vanish at both endpoints (tolerance 1e-14); its endpoint
    values are then clamped to exactly zero so that z(0) = z(T) = 0 holds exactly.
    Default window: eta(t) = sin(pi t / T).
    """
    tg = path.time_grid
    if window is None:
        eta = sine_window(tg)
    elif callable(window):
        eta = np.asarray(window(tg), dtype=float)
    else:
        eta = np.asarray(window, dtype=float)
    if eta.shape != (tg.steps + 1,):
        raise WindowError(f"window shape {eta.shape} does not match node count {tg.steps + 1}")
    scale = max(1.0, float(np.max(np.abs(eta))))
    if abs(eta[0]) > 1e-14 * scale or abs(eta[-1]) > 1e-14 * scale:
        raise WindowError(f"window endpoints must vanish, got {eta[0]} and {eta[-1]}")
    eta = eta.copy()
    eta[0] = 0.0
    eta[-1] = 0.0

    raw = ito_process(drift, diffusion, path, grid, initial)
    snapshots = tuple(float(eta[k]) * y for k, y in enumerate(raw.snapshots))
    return Semimartingale(tg, grid, snapshots, path, drift, diffusion)


def realized_quadratic_variation(z: Semimartingale) -> np.ndarray:
    """Per-step spatially integrated squared increments  ||z_{k+1} - z_k||_{L2}^2."""
    return np.array([l2_norm(z.increment(k)) ** 2 for k in range(z.time_grid.steps)])


def constant_field_rule(value: SpectralField) -> FieldRule:
    """Evaluation rule that ignores (t, path, state) and returns a fixed field."""
    return lambda t, slc, y: value
