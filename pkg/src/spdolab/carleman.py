"""Monte Carlo verification of a weighted energy inequality.

For endpoint-pinned semimartingales z and frozen order-one operator families
A1, B1, both sides of the estimate

    int e^{mu(t-T)^2} |z|^2 dt
      + (1/mu) int e^{mu(t-T)^2} |mu(t-T)z - B1 z|^2 dt
    <=  (4/mu) Re int e [ (1/i)dz - A1 z dt - i B1 z dt ] . conj(i mu(t-T)z - i B1 z)
      - (2/mu) Im int e [ same bracket ] . conj((B1 - B1*) z)
      - 2      int (t-T) e |dz|^2
      - (2/mu) Re int e (dz, B1 dz)

are assembled per simulated path and averaged. Stochastic integrals use
left-endpoint (Ito) evaluation against realized increments; |dz|^2 and
(dz, B1 dz) are realized squared increments. Deterministic time integrals
use the trapezoidal rule. The verdict compares the gap rhs - lhs against
-3 standard errors; a scan maps the (mu, T) validity region empirically.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Sequence

import numpy as np

from .errors import GridMismatchError
from .grid import SpectralField, TorusGrid
from .paths import (Semimartingale, TimeGrid, constant_field_rule, parabolic_window,
                    sample_brownian, sine_window, windowed_ito_process)
from .operators import LambdaOperator, LinearOperator, SpdoOperator
from . import catalog, reduction

TERM_LABELS = ("term1", "term2", "term3", "term4", "term5", "term6")


def thread_count() -> int:
    raw = os.environ.get("SPDO_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# operator families


@dataclass
class OperatorFamily:
    """A frozen operator (or the zero operator) reused across all time nodes.

    Catalog symbols and deterministic reduction branches carry no explicit
    time or path dependence, so one frozen instance serves the whole grid.
    """

    label: str
    grid: TorusGrid
    operator: LinearOperator | None  # None encodes the zero family

    @property
    def is_zero(self) -> bool:
        return self.operator is None

    def apply_columns(self, values: np.ndarray) -> np.ndarray:
        if self.operator is None:
            return np.zeros_like(values)
        return self.operator.apply_many(values)

    def adjoint(self) -> "OperatorFamily":
        if self.operator is None:
            return self
        return OperatorFamily(f"adj[{self.label}]", self.grid, self.operator.adjoint())


def resolve_operator_family(selector: str, grid: TorusGrid) -> OperatorFamily:
    """Family selectors: `zero`, `lambda:s`, any catalog symbol, or
    `reduction-re:<principal>:<branch>` / `reduction-im:<principal>:<branch>`
    for the real/imaginary part of a tracked root branch."""
    selector = selector.strip()
    if selector == "zero":
        return OperatorFamily("zero", grid, None)
    if selector.startswith("reduction-re:") or selector.startswith("reduction-im:"):
        head, _, rest = selector.partition(":")
        principal_sel, _, branch_txt = rest.rpartition(":")
        if not principal_sel:
            raise ValueError(
                f"selector {selector!r} needs the form reduction-re:<principal>:<branch>")
        try:
            branch = int(branch_txt)
        except ValueError as exc:
            raise ValueError(f"branch index {branch_txt!r} is not an integer") from exc
        ps = catalog.make_principal(principal_sel)
        split = reduction.split_roots(ps, grid.dim)
        if not 0 <= branch < ps.m:
            raise ValueError(f"branch {branch} out of range for m = {ps.m}")
        part = "re" if head.endswith("re") else "im"
        sym = reduction.branch_symbol(split, branch, part)
        return OperatorFamily(selector, grid, SpdoOperator(sym, grid))
    name = selector.partition(":")[0]
    if name == "lambda":
        arg = selector.partition(":")[2]
        return OperatorFamily(selector, grid, LambdaOperator(float(arg or 0.0), grid))
    sym = catalog.make_symbol(selector)
    if sym.requires_path:
        raise ValueError(
            f"operator family {selector!r} depends on the driving path and "
            "cannot be frozen across simulated paths")
    return OperatorFamily(selector, grid, SpdoOperator(sym, grid))


# ---------------------------------------------------------------------------
# process families


def resolve_window(selector: str) -> Callable[[TimeGrid], np.ndarray]:
    if selector == "sine":
        return sine_window
    if selector == "parabolic":
        return parabolic_window
    raise ValueError(f"unknown window {selector!r}; choose sine or parabolic")


def resolve_process(selector: str, window: str, grid: TorusGrid, seed: int,
                    path_index: int, time_grid: TimeGrid) -> Semimartingale:
    """Process selectors: `deterministic-mode:k[,amp]` for z = eta(t) amp e^{ikx},
    `brownian-mode:amp,k` for the windowed Ito process with dY = amp e^{ikx} dw."""
    name, _, argstr = selector.strip().partition(":")
    args = [float(a) for a in argstr.split(",")] if argstr.strip() else []
    path = sample_brownian(seed, path_index, time_grid)
    eta = resolve_window(window)
    if name == "deterministic-mode":
        k = int(args[0]) if args else 1
        amp = args[1] if len(args) > 1 else 1.0
        initial = SpectralField.pure_mode(grid, k, amp)
        return windowed_ito_process(None, None, eta, path, grid, initial)
    if name == "brownian-mode":
        if len(args) < 2:
            raise ValueError("brownian-mode needs amplitude and mode: brownian-mode:amp,k")
        amp, k = args[0], int(args[1])
        g = constant_field_rule(SpectralField.pure_mode(grid, k, amp))
        return windowed_ito_process(None, g, eta, path, grid, None)
    raise ValueError(
        f"unknown process family {name!r}; choose deterministic-mode or brownian-mode")


# ---------------------------------------------------------------------------
# configuration and report


@dataclass
class CarlemanConfig:
    mu: float
    horizon: float = 0.25
    steps: int = 512
    paths: int = 256
    grid_points: int = 128
    dim: int = 1
    a1: str = "zero"
    b1: str = "zero"
    process: str = "brownian-mode:0.1,1"
    window: str = "sine"
    seed: int = 0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.steps < 16:
            raise ValueError(f"need at least 16 time steps, got {self.steps}")
        if self.paths < 1:
            raise ValueError(f"need at least one path, got {self.paths}")

    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps)

    def torus(self) -> TorusGrid:
        return TorusGrid(self.dim, self.grid_points)


@dataclass
class CarlemanReport:
    mu: float
    horizon: float
    steps: int
    paths: int
    term_means: np.ndarray  # (6,) = lhs terms 1..2, rhs terms 3..6
    term_ses: np.ndarray
    lhs_mean: float
    lhs_se: float
    rhs_mean: float
    rhs_se: float
    gap: float
    gap_se: float
    verdict: bool
    borderline: bool
    labels: dict = dataclass_field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "mu": self.mu, "T": self.horizon, "K": self.steps, "P": self.paths,
            "lhs": self.lhs_mean, "lhs_se": self.lhs_se,
            "rhs": self.rhs_mean, "rhs_se": self.rhs_se,
            "gap": self.gap, "se": self.gap_se,
            "verdict": bool(self.verdict), "borderline": bool(self.borderline),
        }
        for name, mean, se in zip(TERM_LABELS, self.term_means, self.term_ses):
            out[name] = float(mean)
            out[name + "_se"] = float(se)
        out.update(self.labels)
        return out


# ---------------------------------------------------------------------------
# per-path evaluation


def path_terms(z: Semimartingale, a1: OperatorFamily, b1: OperatorFamily,
               b1_adjoint: OperatorFamily, mu: float) -> np.ndarray:
    """Six inequality terms along one realized path: (term1, term2, r1..r4)."""
    if z.grid != a1.grid or z.grid != b1.grid:
        raise GridMismatchError("process and operator families on different grids")
    tg = z.time_grid
    horizon, dt = tg.horizon, tg.dt
    nodes = tg.nodes()
    shift = nodes - horizon
    weight = np.exp(mu * shift**2)
    trap = np.full(tg.steps + 1, dt)
    trap[0] = trap[-1] = dt / 2.0

    values = np.stack([s.values.ravel() for s in z.snapshots])  # (K+1, S)
    b1_z = b1.apply_columns(values.T).T
    a1_z = a1.apply_columns(values.T).T
    badj_z = b1_adjoint.apply_columns(values.T).T

    def pair(f, g):
        # spatial L2 pairing per node under the normalized measure
        return np.mean(f * np.conj(g), axis=1)

    norm2 = pair(values, values).real
    mixed = mu * shift[:, None] * values - b1_z
    term1 = float(np.sum(trap * weight * norm2))
    term2 = float(np.sum(trap * weight * pair(mixed, mixed).real) / mu)

    dz = values[1:] - values[:-1]
    ks = slice(0, tg.steps)
    bracket = -1j * dz - dt * a1_z[ks] - 1j * dt * b1_z[ks]
    comparison = 1j * (mu * shift[ks, None] * values[ks] - b1_z[ks])
    r1 = float(4.0 / mu * np.sum(weight[ks] * pair(bracket, comparison).real))
    skew = b1_z[ks] - badj_z[ks]
    r2 = float(-2.0 / mu * np.sum(weight[ks] * pair(bracket, skew).imag))
    qv = pair(dz, dz).real
    r3 = float(-2.0 * np.sum(shift[ks] * weight[ks] * qv))
    b1_dz = b1.apply_columns(dz.T).T
    r4 = float(-2.0 / mu * np.sum(weight[ks] * pair(dz, b1_dz).real))
    return np.array([term1, term2, r1, r2, r3, r4])


def verify_inequality(config: CarlemanConfig) -> CarlemanReport:
    """Assemble the estimate over `paths` simulated paths and aggregate."""
    grid = config.torus()
    tg = config.time_grid()
    a1 = resolve_operator_family(config.a1, grid)
    b1 = resolve_operator_family(config.b1, grid)
    b1_adj = b1.adjoint()

    terms = np.zeros((config.paths, 6))

    def run_one(p: int) -> None:
        z = resolve_process(config.process, config.window, grid, config.seed, p, tg)
        terms[p] = path_terms(z, a1, b1, b1_adj, config.mu)

    workers = thread_count()
    if workers > 1 and config.paths > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, range(config.paths)))
    else:
        for p in range(config.paths):
            run_one(p)

    # fixed-index-order reduction keeps results independent of scheduling
    means = terms.mean(axis=0)
    if config.paths > 1:
        ses = terms.std(axis=0, ddof=1) / math.sqrt(config.paths)
    else:
        ses = np.zeros(6)
    lhs = terms[:, 0] + terms[:, 1]
    rhs = terms[:, 2:].sum(axis=1)
    gap = rhs - lhs

    def mean_se(x):
        if config.paths > 1:
            return float(x.mean()), float(x.std(ddof=1) / math.sqrt(config.paths))
        return float(x.mean()), 0.0

    lhs_mean, lhs_se = mean_se(lhs)
    rhs_mean, rhs_se = mean_se(rhs)
    gap_mean, gap_se = mean_se(gap)
    labels = {"a1": config.a1, "b1": config.b1, "process": config.process,
              "window": config.window, "seed": config.seed,
              "grid_points": config.grid_points, "dim": config.dim}
    return CarlemanReport(config.mu, config.horizon, config.steps, config.paths,
                          means, ses, lhs_mean, lhs_se, rhs_mean, rhs_se,
                          gap_mean, gap_se,
                          verdict=bool(gap_mean >= -3.0 * gap_se),
                          borderline=bool(abs(gap_mean) <= 3.0 * gap_se),
                          labels=labels)


# ---------------------------------------------------------------------------
# (mu, T) scan


@dataclass
class ScanResult:
    rows: list[CarlemanReport]
    summary: dict

    def all_pass(self) -> bool:
        return all(r.verdict for r in self.rows)

    def any_pass(self) -> bool:
        return any(r.verdict for r in self.rows)


def scan(base: CarlemanConfig, mu_list: Sequence[float] | None = None,
         T_list: Sequence[float] | None = None,
         kappa_list: Sequence[float] = (16.0, 64.0, 256.0)) -> ScanResult:
    """One report per (mu, T) pair; mu defaults to kappa/T^2 so that the
    large-weight and short-horizon limits move together."""
    horizons = list(T_list) if T_list is not None else [base.horizon]
    rows = []
    for T in horizons:
        mus = list(mu_list) if mu_list is not None else [k / (T * T) for k in kappa_list]
        for mu in mus:
            cfg = CarlemanConfig(mu=float(mu), horizon=float(T), steps=base.steps,
                                 paths=base.paths, grid_points=base.grid_points,
                                 dim=base.dim, a1=base.a1, b1=base.b1,
                                 process=base.process, window=base.window,
                                 seed=base.seed)
            rows.append(verify_inequality(cfg))

    passes = [r for r in rows if r.verdict]
    summary = {
        "rows": len(rows),
        "passes": len(passes),
        "largest_pass_T": max((r.horizon for r in passes), default=None),
        "smallest_pass_mu": min((r.mu for r in passes), default=None),
        "borderline_rows": sum(1 for r in rows if r.borderline),
    }
    # reported, not asserted: is the gap monotone along mu at fixed T?
    trends = {}
    for T in horizons:
        gaps = [r.gap for r in rows if r.horizon == T]
        if len(gaps) >= 2:
            diffs = np.diff(gaps)
            trends[f"gap_vs_mu@T={T:g}"] = (
                "increasing" if np.all(diffs > 0) else
                "decreasing" if np.all(diffs < 0) else "mixed")
    summary["trends"] = trends
    return ScanResult(rows, summary)
