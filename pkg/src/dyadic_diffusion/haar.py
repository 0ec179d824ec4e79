"""Haar analysis of piecewise constant functions on ``[0, 2**Jd)``.

A :class:`GridFunction` is constant on cells of width ``2**-Jr``. Its Haar
expansion uses every ``h^j_k`` with ``I^j_k`` inside the domain, i.e. levels
``-Jd <= j <= Jr - 1``, plus one scaling coefficient against the normalised
indicator of the domain. Coefficients are packed the usual way: index 0 is
the scaling coefficient and level ``j`` occupies ``[2**(j+Jd), 2**(j+Jd+1))``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dyadic import DyadicPoint

__all__ = [
    "HaarIndex",
    "GridFunction",
    "HaarCoefficients",
    "haar_eval",
    "haar_samples",
    "haar_forward",
    "haar_inverse",
    "square_function",
    "lp_norm",
    "write_grid_function",
    "read_grid_function",
]

SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class HaarIndex:
    level: int
    position: int

    @property
    def support_length(self) -> float:
        return math.ldexp(1.0, -self.level)

    @property
    def height(self) -> float:
        return 2.0 ** (self.level / 2)


@dataclass(frozen=True, eq=False)
class GridFunction:
    Jd: int
    Jr: int
    values: np.ndarray

    def __post_init__(self):
        if self.Jd + self.Jr < 1:
            raise ValueError("grid needs Jd + Jr >= 1")
        values = np.array(self.values, dtype=float)
        if values.shape != (2 ** (self.Jd + self.Jr),):
            raise ValueError(
                f"expected {2 ** (self.Jd + self.Jr)} cell values, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def cell_width(self) -> float:
        return math.ldexp(1.0, -self.Jr)

    @property
    def layout(self) -> tuple[int, int]:
        return (self.Jd, self.Jr)

    @classmethod
    def zeros(cls, Jd: int, Jr: int) -> "GridFunction":
        return cls(Jd, Jr, np.zeros(2 ** (Jd + Jr)))

    @classmethod
    def constant(cls, Jd: int, Jr: int, c: float) -> "GridFunction":
        return cls(Jd, Jr, np.full(2 ** (Jd + Jr), float(c)))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.Jd, self.Jr, values)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def cell_of(self, x) -> int:
        x = DyadicPoint.of(x)
        c = math.floor(x.value * 2 ** self.Jr)
        if not 0 <= c < self.size:
            raise ValueError("point outside the grid domain")
        return c

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_layout(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_layout(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, a: float) -> "GridFunction":
        return self.with_values(a * self.values)

    __rmul__ = __mul__


def _check_same_layout(f: GridFunction, g: GridFunction) -> None:
    if f.layout != g.layout:
        raise ValueError(f"grid layouts differ: {f.layout} vs {g.layout}")


@dataclass(frozen=True, eq=False)
class HaarCoefficients:
    Jd: int
    Jr: int
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if self.Jd + self.Jr < 1 or data.shape != (2 ** (self.Jd + self.Jr),):
            raise ValueError("malformed coefficient set")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def scaling(self) -> float:
        return float(self.data[0])

    @property
    def levels(self) -> range:
        return range(-self.Jd, self.Jr)

    def level(self, j: int) -> np.ndarray:
        if j not in self.levels:
            raise KeyError(f"level {j} outside [{-self.Jd}, {self.Jr - 1}]")
        n = 2 ** (j + self.Jd)
        return self.data[n:2 * n]

    def detail(self, j: int, k: int) -> float:
        row = self.level(j)
        if not 0 <= k < row.shape[0]:
            raise KeyError(f"position {k} outside level {j}")
        return float(row[k])

    @property
    def details(self) -> dict[HaarIndex, float]:
        return {HaarIndex(j, k): float(v)
                for j in self.levels for k, v in enumerate(self.level(j))}

    def level_of_index(self) -> np.ndarray:
        """Level of every packed slot; slot 0 (scaling) gets ``-Jd - 1``."""
        out = np.empty(self.data.shape[0], dtype=int)
        out[0] = -self.Jd - 1
        for j in self.levels:
            n = 2 ** (j + self.Jd)
            out[n:2 * n] = j
        return out

    def multiply(self, level_factors, scaling_factor: float) -> "HaarCoefficients":
        """Scale level ``j`` by ``level_factors[j + Jd]`` and the scaling slot separately."""
        level_factors = np.asarray(level_factors, dtype=float)
        if level_factors.shape != (self.Jd + self.Jr,):
            raise ValueError("need one factor per Haar level")
        factors = np.empty_like(self.data)
        factors[0] = scaling_factor
        factors[1:] = level_factors[self.level_of_index()[1:] + self.Jd]
        return HaarCoefficients(self.Jd, self.Jr, self.data * factors)

    @classmethod
    def zeros(cls, Jd: int, Jr: int) -> "HaarCoefficients":
        return cls(Jd, Jr, np.zeros(2 ** (Jd + Jr)))

    @classmethod
    def single(cls, Jd: int, Jr: int, j: int, k: int, value: float = 1.0) -> "HaarCoefficients":
        data = np.zeros(2 ** (Jd + Jr))
        n = 2 ** (j + Jd)
        if not (-Jd <= j < Jr and 0 <= k < n):
            raise ValueError(f"h^{j}_{k} is not inside the grid domain")
        data[n + k] = value
        return cls(Jd, Jr, data)


def haar_eval(idx: HaarIndex, x) -> float:
    """Exact value of ``h^j_k`` at a binary rational point."""
    x = DyadicPoint.of(x)
    j, k = idx.level, idx.position
    # floor(x 2^(j+1)) picks the half-interval at level j+1 holding x
    shift = x.exponent - (j + 1)
    q = x.numerator >> shift if shift >= 0 else x.numerator << -shift
    if q >> 1 != k:
        return 0.0
    h = 2.0 ** (j / 2)
    return h if q & 1 == 0 else -h


def haar_samples(Jd: int, Jr: int, j: int, k: int) -> GridFunction:
    """Cell values of ``h^j_k`` on the grid (it must be resolved by the grid)."""
    return haar_inverse(HaarCoefficients.single(Jd, Jr, j, k))


def haar_forward(f: GridFunction) -> HaarCoefficients:
    N = f.size
    out = np.empty(N)
    s = f.values * 2.0 ** (-f.Jr / 2)
    n = N
    while n > 1:
        left, right = s[0::2], s[1::2]
        half = n // 2
        out[half:n] = (left - right) * SQRT_HALF
        s = (left + right) * SQRT_HALF
        n = half
    out[0] = s[0]
    return HaarCoefficients(f.Jd, f.Jr, out)


def haar_inverse(c: HaarCoefficients) -> GridFunction:
    data = c.data
    N = data.shape[0]
    s = data[:1].copy()
    n = 1
    while n < N:
        d = data[n:2 * n]
        nxt = np.empty(2 * n)
        nxt[0::2] = (s + d) * SQRT_HALF
        nxt[1::2] = (s - d) * SQRT_HALF
        s = nxt
        n *= 2
    return GridFunction(c.Jd, c.Jr, s * 2.0 ** (c.Jr / 2))


def square_function(f: GridFunction) -> GridFunction:
    """``S f = (sum_h <f,h>^2 |I(h)|^-1 chi_I(h))^(1/2)`` over the detail coefficients.

    The scaling coefficient is not part of the sum; read it from
    ``haar_forward(f).scaling``.
    """
    c = haar_forward(f)
    acc = np.zeros(f.size)
    for j in c.levels:
        row = c.level(j)
        cells_per_interval = f.size // row.shape[0]
        acc += np.repeat(row * row * 2.0 ** j, cells_per_interval)
    return f.with_values(np.sqrt(acc))


def lp_norm(f: GridFunction, p) -> float:
    if isinstance(p, str):
        p = math.inf if p.strip().lower() in ("inf", "infinity") else float(p)
    if p < 1:
        raise ValueError("not a norm: p must be >= 1")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max(initial=0.0))
    if p == 1:
        return float(a.sum() * f.cell_width)
    if p == 2:
        return math.sqrt(float(np.dot(a, a)) * f.cell_width)
    return float((np.sum(a ** p) * f.cell_width) ** (1.0 / p))


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def write_grid_function(f: GridFunction, path) -> None:
    """CSV ``cell_index,value`` plus a ``{"Jd", "Jr"}`` sidecar next to it (same stem, .json)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell_index", "value"])
        for i, v in enumerate(f.values):
            w.writerow([i, format(float(v), ".17g")])
    _sidecar(path).write_text(json.dumps({"Jd": f.Jd, "Jr": f.Jr}) + "\n")


def read_grid_function(path) -> GridFunction:
    path = Path(path)
    meta = json.loads(_sidecar(path).read_text())
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(rows[0]) != {"cell_index", "value"}:
        raise ValueError(f"{path}: expected header cell_index,value")
    values = np.zeros(len(rows))
    for row in rows:
        values[int(row["cell_index"])] = float(row["value"])
    return GridFunction(int(meta["Jd"]), int(meta["Jr"]), values)
