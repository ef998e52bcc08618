"""Exponent arithmetic for rectangular matrix multiplication based reachability.

``omega(sigma)`` is the exponent of multiplying an n^sigma x n matrix by an
n x n matrix, interpolated from known upper bounds. The curves ``g_k`` give the
runtime exponent of the depth-k recursive solver:

    g_{-1}(x) = mu + x
    g_{k+1}(sigma) = min over delta in [0, 1/2] of max(g_k(1 - 2 delta), omega(sigma) + delta)

With mu = 2 these are the dense curves; level 0 has the closed form
(1 + mu + 2 omega(sigma)) / 3.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, TextIO

import numpy as np

ALPHA = 0.321334

OMEGA_POINTS: tuple[tuple[float, float], ...] = (
    (0.321334, 2.0),
    (0.33, 2.000100),
    (0.34, 2.000600),
    (0.35, 2.001363),
    (0.40, 2.009541),
    (0.45, 2.023788),
    (0.50, 2.042994),
    (0.527661, 2.055322),
    (0.55, 2.066134),
    (0.60, 2.092631),
    (0.65, 2.121734),
    (0.70, 2.153048),
    (0.75, 2.186210),
    (0.80, 2.220929),
    (0.85, 2.256984),
    (0.90, 2.294209),
    (0.95, 2.332440),
    (1.00, 2.371552),
)

BISECT_ITERS = 60
DEFAULT_STEP = 1e-4


@dataclass(frozen=True)
class OmegaTable:
    """Sample points (sigma, omega), sorted; constant at the first value below them."""

    points: tuple[tuple[float, float], ...] = OMEGA_POINTS

    def __post_init__(self):
        pts = tuple((float(s), float(w)) for s, w in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("omega table needs at least two points")
        s = np.array([p[0] for p in pts])
        w = np.array([p[1] for p in pts])
        if np.any(np.diff(s) <= 0):
            raise ValueError("omega table sigmas must be strictly increasing")
        if np.any(np.diff(w) < 0):
            raise ValueError("omega table values must be non-decreasing")
        # prepend the flat stretch so the convexity check covers the first kink
        slopes = np.diff(np.r_[w[0], w]) / np.diff(np.r_[s[0] - 1.0, s])
        if np.any(np.diff(slopes) < -1e-12):
            raise ValueError("omega table interpolant is not convex")
        if s[0] < 0 or s[-1] != 1.0:
            raise ValueError("omega table must span up to sigma = 1")

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @classmethod
    def load(cls, stream: TextIO | str) -> "OmegaTable":
        """Read ``sigma omega`` pairs, one per line, '#' comments and commas allowed."""
        text = stream if isinstance(stream, str) else stream.read()
        pts = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].replace(",", " ").strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"malformed omega table line {lineno}")
            pts.append((float(parts[0]), float(parts[1])))
        return cls(tuple(pts))


DEFAULT_TABLE = OmegaTable()


def _check_sigma(sigma):
    arr = np.asarray(sigma, dtype=np.float64)
    if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12) or np.any(np.isnan(arr)):
        raise ValueError("sigma must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def _check_mu(mu: float) -> float:
    if not 1.0 <= mu <= 2.0:
        raise ValueError("mu must lie in [1, 2]")
    return float(mu)


def _as_out(x: np.ndarray, like):
    return float(x) if np.ndim(like) == 0 else x


def _omega_raw(sigma: np.ndarray, table: OmegaTable) -> np.ndarray:
    return np.interp(sigma, table.sigmas, table.values)


def omega(sigma, table: OmegaTable = DEFAULT_TABLE):
    return _as_out(_omega_raw(_check_sigma(sigma), table), sigma)


def g0(sigma, table: OmegaTable = DEFAULT_TABLE):
    return _as_out(1.0 + 2.0 * _omega_raw(_check_sigma(sigma), table) / 3.0, sigma)


def g0_mu(sigma, mu: float, table: OmegaTable = DEFAULT_TABLE):
    mu = _check_mu(mu)
    return _as_out((1.0 + mu + 2.0 * _omega_raw(_check_sigma(sigma), table)) / 3.0, sigma)


def _balance(prev: Callable[[np.ndarray], np.ndarray], w: np.ndarray) -> np.ndarray:
    """Smallest delta in [0, 1/2] with prev(1 - 2 delta) <= w + delta, vectorized over w.

    The left side is non-increasing and the right side strictly increasing in
    delta, so the crossing is unique; endpoints are returned when it falls
    outside the interval.
    """
    lo = np.zeros_like(w)
    hi = np.full_like(w, 0.5)
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        above = prev(1.0 - 2.0 * mid) > w + mid
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    at_zero = prev(np.ones_like(w)) <= w
    return np.where(at_zero, 0.0, hi)


@dataclass(frozen=True, eq=False)
class ExponentCurve:
    """g_k^(mu) tabulated on a uniform sigma grid; level 0 is evaluated exactly."""

    k: int
    mu: float
    grid: np.ndarray
    values: np.ndarray
    step: float
    table: OmegaTable

    def __call__(self, sigma):
        s = _check_sigma(sigma)
        if self.k == 0:
            out = (1.0 + self.mu + 2.0 * _omega_raw(s, self.table)) / 3.0
        else:
            out = np.interp(s, self.grid, self.values)
        return _as_out(out, sigma)

    def _eval_raw(self, s: np.ndarray) -> np.ndarray:
        s = np.clip(s, 0.0, 1.0)
        if self.k == 0:
            return (1.0 + self.mu + 2.0 * _omega_raw(s, self.table)) / 3.0
        return np.interp(s, self.grid, self.values)


def _grid(step: float) -> np.ndarray:
    count = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, count + 1)


@lru_cache(maxsize=256)
def exponent_curve(k: int, mu: float = 2.0, table: OmegaTable = DEFAULT_TABLE,
                   step: float = DEFAULT_STEP) -> ExponentCurve:
    if k < 0:
        raise ValueError("k must be non-negative")
    mu = _check_mu(mu)
    grid = _grid(step)
    w = _omega_raw(grid, table)
    if k == 0:
        return ExponentCurve(0, mu, grid, (1.0 + mu + 2.0 * w) / 3.0, step, table)
    prev = exponent_curve(k - 1, mu, table, step)
    delta = _balance(prev._eval_raw, w)
    values = np.maximum(prev._eval_raw(1.0 - 2.0 * delta), w + delta)
    return ExponentCurve(k, mu, grid, values, step, table)


def gk(sigma, k: int, table: OmegaTable = DEFAULT_TABLE, step: float = DEFAULT_STEP):
    return exponent_curve(k, 2.0, table, step)(sigma)


def gk_mu(sigma, mu: float, k: int, table: OmegaTable = DEFAULT_TABLE, step: float = DEFAULT_STEP):
    return exponent_curve(k, _check_mu(mu), table, step)(sigma)


def balance_delta(sigma: float, k: int, mu: float = 2.0, table: OmegaTable = DEFAULT_TABLE,
                  step: float = DEFAULT_STEP) -> float:
    """The delta at which level k's cost terms meet: g_{k-1}(1 - 2 delta) = omega(sigma) + delta.

    Level -1 is mu + x, which makes k = 0 the closed form (1 + mu - omega) / 3.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    mu = _check_mu(mu)
    w = np.array([omega(sigma, table)])
    if k == 0:
        prev = lambda x: mu + x  # noqa: E731
    else:
        prev = exponent_curve(k - 1, mu, table, step)._eval_raw
    return float(_balance(prev, w)[0])


def feasibility_interval(sigma: float, table: OmegaTable = DEFAULT_TABLE) -> tuple[float, float, bool]:
    """(mu_lo, mu_hi, empty): densities where the shortcut solver beats both baselines."""
    w = omega(sigma, table)
    w1 = omega(1.0, table)
    lo = w + 0.5 - 1.5 * sigma
    hi = min(2.0, 3.0 * w1 - 2.0 * w - 1.0)
    return lo, hi, bool(lo >= hi - 1e-12)


def mu_lower_bound(sigma: float, table: OmegaTable = DEFAULT_TABLE) -> float:
    return omega(sigma, table) + 0.5 - 1.5 * sigma


def _bisect_root(f: Callable[[float], float], lo: float, hi: float, iters: int = 200) -> float:
    lo, hi = float(lo), float(hi)
    flo = f(lo)
    if flo == 0:
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sigma_tilde(table: OmegaTable = DEFAULT_TABLE) -> float:
    """Root of omega(sigma) = 1.5 (1 + sigma), where g_0 meets the naive exponent 2 + sigma."""
    return _bisect_root(lambda s: omega(s, table) - 1.5 * (1.0 + s), table.sigmas[0], 1.0)


def sigma_k(k: int, table: OmegaTable = DEFAULT_TABLE, step: float = DEFAULT_STEP) -> float:
    """Largest sigma with g_k(sigma) <= omega(1); 1.0 when g_k stays below it."""
    curve = exponent_curve(k, 2.0, table, step)
    target = omega(1.0, table)
    lo = sigma_tilde(table)
    if curve(1.0) <= target:
        return 1.0
    if curve(lo) >= target:
        return lo
    return _bisect_root(lambda s: curve(s) - target, lo, 1.0)


# -- table regeneration ----------------------------------------------------------

T2_SIGMAS = (0.335,) + tuple(round(0.34 + 0.01 * i, 2) for i in range(20))
T3_SIGMAS = (0.0, 0.34, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
T4_SIGMAS = (0.335, 0.34, 0.4, 0.5, 0.55, 0.6, 0.7, 0.8, 0.9, 0.99, 1.0)
T5_SIGMAS = (0.34, 0.36, 0.40, 0.44, 0.48, 0.52, 0.54, 0.56, 0.60, 0.64, 0.66, 0.68,
             0.72, 0.76, 0.80, 0.84, 0.85, 0.88, 0.92, 0.93, 0.96, 0.97, 0.98)
T5_LEVELS = (0, 1, 3, 5, 7, 9)
T6_ROWS = ((1.95, (0.375, 0.4, 0.45, 0.5)),
           (1.9, (0.45, 0.5, 0.55, 0.6)),
           (1.75, (0.55, 0.6, 0.65, 0.7)),
           (1.525, (0.8, 0.85, 0.9)))


def table_rows(which: str, table: OmegaTable = DEFAULT_TABLE) -> tuple[list[str], list[list[float]]]:
    which = which.upper()
    w1 = omega(1.0, table)
    if which == "T2":
        return (["sigma", "naive", "square", "g0"],
                [[s, 2.0 + s, w1, g0(s, table)] for s in T2_SIGMAS])
    if which == "T3":
        return ["sigma", "mu_lower"], [[s, mu_lower_bound(s, table)] for s in T3_SIGMAS]
    if which == "T4":
        rows = []
        for s in T4_SIGMAS:
            lo, hi, empty = feasibility_interval(s, table)
            rows.append([s, lo, hi, int(empty)])
        return ["sigma", "mu_lo", "mu_hi", "empty"], rows
    if which == "T5":
        header = ["sigma"] + [f"g{k}" for k in T5_LEVELS]
        return header, [[s] + [gk(s, k, table) for k in T5_LEVELS] for s in T5_SIGMAS]
    if which == "T6":
        rows = [[mu, s, mu + s, w1, g0_mu(s, mu, table)] for mu, sigmas in T6_ROWS for s in sigmas]
        return ["mu", "sigma", "naive", "square", "g0_mu"], rows
    raise ValueError(f"unknown table {which!r}; expected one of T2, T3, T4, T5, T6")


def emit_tables(which: str, table: OmegaTable = DEFAULT_TABLE, out: TextIO | None = None) -> str:
    header, rows = table_rows(which, table)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def _fmt(v: float) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{v:.6f}"
