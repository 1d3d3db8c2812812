"""Monte Carlo checks of harness regression coefficients.

Binary64 lives only here.  Paths are generated in fixed-size chunks, chunk
``i`` drawing from ``SeedSequence(seed).spawn(n)[i]``, so the assembled
matrix does not depend on how many workers produced it.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import statsmodels.api as sm

from .errors import ConfigError, RankDeficient

KINDS = ("brownian", "sign_q_minus_1", "scaled")
Y_LAWS = ("rademacher", "gaussian")
MIN_PATHS = 1000
DEFAULT_CHUNK = 16384

BASES = {
    "linear": ("X_r", "X_u"),
    "quadratic": ("X_r^2", "X_rX_u", "X_u^2", "X_r", "X_u", "1"),
    "one_sided_quadratic": ("X_s^2", "X_s", "1"),
    # centred square (X_s - a X_r - b X_u)^2, with X_r^2 folded into X_u^2
    "variance_reduced": ("X_rX_u", "X_r", "X_u", "X_u^2"),
}


def _as_float(t) -> float:
    if isinstance(t, str):
        return float(Fraction(t))
    return float(t)


@dataclass(frozen=True)
class SimConfig:
    kind: str
    grid: tuple[float, ...]
    n_paths: int
    seed: int
    y_law: str | None = None
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid", tuple(_as_float(t) for t in self.grid))
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "scaled":
            if self.y_law not in Y_LAWS:
                raise ConfigError(f"scaled process needs y_law in {Y_LAWS}, got {self.y_law!r}")
        elif self.y_law is not None:
            raise ConfigError("y_law only applies to the scaled process")
        g = self.grid
        if not g or any(a >= b for a, b in zip(g, g[1:])):
            raise ConfigError("grid must be nonempty and strictly increasing")
        if g[0] < 0 or (self.kind != "brownian" and g[0] <= 0):
            raise ConfigError("grid must start at a positive time (>= 0 for brownian)")
        if self.n_paths < MIN_PATHS:
            raise ConfigError(f"need at least {MIN_PATHS} paths, got {self.n_paths}")
        if self.chunk_size < 1:
            raise ConfigError("chunk_size must be >= 1")

    def header(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "y_law": self.y_law,
            "grid": list(self.grid),
            "n_paths": self.n_paths,
            "seed": self.seed,
            "chunk_size": self.chunk_size,
        }


@dataclass(frozen=True)
class PathMatrix:
    config: SimConfig
    values: np.ndarray  # shape (n_paths, len(grid))

    def column(self, t) -> np.ndarray:
        t = _as_float(t)
        try:
            j = self.config.grid.index(t)
        except ValueError:
            raise ConfigError(f"time {t} is not on the grid {self.config.grid}") from None
        return self.values[:, j]


def _sign_chain(rng: np.random.Generator, n: int, grid: Sequence[float]) -> np.ndarray:
    xi = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    out = np.empty((n, len(grid)))
    out[:, 0] = xi
    for j in range(1, len(grid)):
        stay = 0.5 * (1.0 + math.sqrt(grid[j - 1] / grid[j]))
        flip = rng.random(n) >= stay
        xi = np.where(flip, -xi, xi)
        out[:, j] = xi
    return out * np.sqrt(np.asarray(grid))


def _simulate_chunk(cfg: SimConfig, seed_seq: np.random.SeedSequence, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    grid = cfg.grid
    if cfg.kind == "brownian":
        dt = np.diff(np.concatenate(([0.0], grid)))
        return np.cumsum(rng.standard_normal((n, len(grid))) * np.sqrt(dt), axis=1)
    if cfg.kind == "sign_q_minus_1":
        return _sign_chain(rng, n, grid)
    if cfg.y_law == "rademacher":
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    else:
        y = rng.standard_normal(n)
    return y[:, None] * _sign_chain(rng, n, grid)


def simulate(cfg: SimConfig, workers: int = 1) -> PathMatrix:
    n_chunks = -(-cfg.n_paths // cfg.chunk_size)
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_chunks)
    sizes = [min(cfg.chunk_size, cfg.n_paths - i * cfg.chunk_size) for i in range(n_chunks)]
    if workers <= 1:
        chunks = [_simulate_chunk(cfg, s, n) for s, n in zip(seeds, sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda a: _simulate_chunk(cfg, *a), zip(seeds, sizes)))
    return PathMatrix(cfg, np.vstack(chunks))


def export_paths(pm: PathMatrix, path: str | Path) -> tuple[Path, Path]:
    """Write a column-major float64 dump plus ``<path>.json`` header."""
    path = Path(path)
    path.write_bytes(np.asfortranarray(pm.values).tobytes(order="F"))
    header = {**pm.config.header(), "dtype": "float64", "order": "column-major", "shape": list(pm.values.shape)}
    head_path = path.with_name(path.name + ".json")
    head_path.write_text(json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path, head_path


def load_paths(path: str | Path) -> PathMatrix:
    path = Path(path)
    header = json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))
    cfg = SimConfig(header["kind"], tuple(header["grid"]), header["n_paths"], header["seed"], header["y_law"], header["chunk_size"])
    values = np.frombuffer(path.read_bytes(), dtype=np.float64).reshape(tuple(header["shape"]), order="F")
    return PathMatrix(cfg, values)


# --------------------------------------------------------------------------
# estimation


@dataclass
class RegressionEstimate:
    basis: str
    columns: tuple[str, ...]
    times: tuple[float, ...]
    coef: np.ndarray
    se: np.ndarray
    n: int

    def to_json(self) -> dict[str, Any]:
        return {
            "basis": self.basis,
            "columns": list(self.columns),
            "times": list(self.times),
            "coef": [float(c) for c in self.coef],
            "se": [float(s) for s in self.se],
            "n": self.n,
        }


def _design(pm: PathMatrix, basis: str, times: Sequence, weights: Sequence[float] | None):
    if basis == "one_sided_quadratic":
        if len(times) != 2:
            raise ConfigError("one_sided_quadratic needs times (s, t)")
        xs, xt = pm.column(times[0]), pm.column(times[1])
        return xt**2, np.column_stack([xs**2, xs, np.ones_like(xs)])
    if len(times) != 3:
        raise ConfigError(f"{basis} needs times (r, s, u)")
    xr, xs, xu = (pm.column(t) for t in times)
    if basis == "linear":
        return xs, np.column_stack([xr, xu])
    if basis == "quadratic":
        return xs**2, np.column_stack([xr**2, xr * xu, xu**2, xr, xu, np.ones_like(xr)])
    if basis == "variance_reduced":
        r, s, u = (_as_float(t) for t in times)
        a, b = weights if weights is not None else ((u - s) / (u - r), (s - r) / (u - r))
        return (xs - a * xr - b * xu) ** 2, np.column_stack([xr * xu, xr, xu, xu**2])
    raise ConfigError(f"unknown basis {basis!r}; choose from {tuple(BASES)}")


def estimate_regression(
    pm: PathMatrix, basis: str, times: Sequence, weights: Sequence[float] | None = None
) -> RegressionEstimate:
    """OLS of the basis target with HC1 standard errors; raises RankDeficient on a collinear design."""
    if pm.values.shape[0] < MIN_PATHS:
        raise ConfigError(f"need at least {MIN_PATHS} paths")
    y, X = _design(pm, basis, times, weights)
    rank = int(np.linalg.matrix_rank(X / np.maximum(np.abs(X).max(axis=0), 1e-300)))
    if rank < X.shape[1]:
        raise RankDeficient(
            f"design for basis {basis!r} at times {tuple(times)} has rank {rank} < {X.shape[1]}",
            rank=rank,
            columns=X.shape[1],
        )
    fit = sm.OLS(y, X).fit(cov_type="HC1")
    return RegressionEstimate(basis, BASES[basis], tuple(_as_float(t) for t in times), fit.params, fit.bse, len(y))


@dataclass
class MCReport:
    passed: bool
    z: list[float]
    k: float
    theory: list[float]
    estimate: list[float]
    se: list[float]
    extra: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "pass": self.passed,
            "k": self.k,
            "z": self.z,
            "theory": self.theory,
            "estimate": self.estimate,
            "se": self.se,
            **self.extra,
        }


def mc_compare(est: RegressionEstimate, theory: Sequence, k: float = 3.0) -> MCReport:
    th = np.array([_as_float(t) for t in theory])
    if th.shape != est.coef.shape:
        raise ConfigError(f"theory has {th.size} entries, basis has {est.coef.size}")
    z = (est.coef - th) / est.se
    return MCReport(bool(np.all(np.abs(z) <= k)), [float(v) for v in z], k, list(map(float, th)), list(map(float, est.coef)), list(map(float, est.se)))


def mc_compare_pair(a: RegressionEstimate, b: RegressionEstimate, k: float = 3.0) -> MCReport:
    """Two independent estimates of the same coefficients agree within ``k`` combined SEs."""
    se = np.sqrt(a.se**2 + b.se**2)
    z = (a.coef - b.coef) / se
    return MCReport(
        bool(np.all(np.abs(z) <= k)), [float(v) for v in z], k, list(map(float, b.coef)), list(map(float, a.coef)), list(map(float, se))
    )


def covariance_check(pm: PathMatrix, s, t, k: float = 3.0) -> MCReport:
    """Empirical ``E X_s X_t`` against ``min(s, t)``."""
    prod = pm.column(s) * pm.column(t)
    mean = float(prod.mean())
    se = float(prod.std(ddof=1) / math.sqrt(prod.size))
    theory = min(_as_float(s), _as_float(t))
    z = (mean - theory) / se if se > 0 else (0.0 if mean == theory else math.inf)
    return MCReport(abs(z) <= k, [z], k, [theory], [mean], [se])


def fourth_moment(pm: PathMatrix, t) -> tuple[float, float]:
    x4 = pm.column(t) ** 4
    return float(x4.mean()), float(x4.std(ddof=1) / math.sqrt(x4.size))


def fourth_moment_compare(a: PathMatrix, b: PathMatrix, t, z_min: float = 10.0) -> MCReport:
    """Passes when the two fourth moments at ``t`` are separated by more than ``z_min`` SEs."""
    (ma, sa), (mb, sb) = fourth_moment(a, t), fourth_moment(b, t)
    se = math.hypot(sa, sb)
    z = (mb - ma) / se
    return MCReport(abs(z) > z_min, [z], z_min, [], [ma, mb], [sa, sb], {"ratio": mb / ma})


def squared_harness_check(pm: PathMatrix, s, t, u, rel_tol: float = 1e-9) -> MCReport:
    """Pathwise check that ``X_t^2 = ((u-t) X_s^2 + (t-s) X_u^2)/(u-s)``.

    For the scaled sign process the three squares are collinear, so the
    relation is tested per path rather than by regression.
    """
    s_, t_, u_ = (_as_float(v) for v in (s, t, u))
    a, b = (u_ - t_) / (u_ - s_), (t_ - s_) / (u_ - s_)
    xs2, xt2, xu2 = pm.column(s) ** 2, pm.column(t) ** 2, pm.column(u) ** 2
    resid = xt2 - a * xs2 - b * xu2
    scale = max(1.0, float(np.abs(xt2).max()))
    worst = float(np.abs(resid).max())
    return MCReport(worst <= rel_tol * scale, [], rel_tol, [a, b], [], [], {"max_abs_residual": worst, "scale": scale})
