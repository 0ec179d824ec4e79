"""Kernel operators, the dyadic fractional derivative and the heat semigroup on grids.

Every kernel in the class acts diagonally on Haar functions, so on a grid
``[0, 2**Jd)`` an operator is a multiplier on detail coefficients plus a
choice for the one scaling coefficient (the domain mean). Three choices
are offered:

``carry``
    keep the mean. This is ``T`` applied to ``f`` extended outside the
    domain by its own mean, which is the infinite-domain limit and gives a
    doubly stochastic operator on the grid.
``annihilate``
    drop the mean (study of the pure detail span).
``restrict``
    multiply the mean by ``mu = sum_{m <= Jd} k_m 2**(m-1)``, the kernel
    mass that stays in the domain. This is ``T`` applied to ``f`` extended
    by zero, i.e. exactly the dense quadrature operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import delta_power_integral
from .haar import GridFunction, haar_forward, haar_inverse
from .kernels import KernelSpec, lambda_to_k

__all__ = [
    "SCALING_MODES",
    "OperatorPlan",
    "apply_kernel",
    "operator_matrix",
    "quadrature_matrix",
    "apply_kernel_quadrature",
    "derivative_constant",
    "fractional_derivative_spectral",
    "fractional_derivative_quadrature",
    "heat_solve",
]

SCALING_MODES = ("carry", "annihilate", "restrict")


def _check_layout(Jd: int, Jr: int, f: GridFunction | None = None) -> None:
    if f is not None and f.layout != (Jd, Jr):
        raise ValueError(f"grid layout {f.layout} does not match plan layout {(Jd, Jr)}")


@dataclass(frozen=True, eq=False)
class OperatorPlan:
    kernel: KernelSpec
    Jd: int
    Jr: int
    scaling: str = "carry"

    def __post_init__(self):
        if self.scaling not in SCALING_MODES:
            raise ValueError(f"unknown scaling mode {self.scaling!r}")
        if self.Jd + self.Jr < 1:
            raise ValueError("grid needs Jd + Jr >= 1")
        lo, hi = self.kernel.window
        if lo > -self.Jd or hi < self.Jr - 1:
            raise ValueError(
                f"kernel window {self.kernel.window} does not cover Haar levels "
                f"[{-self.Jd}, {self.Jr - 1}]")

    @property
    def level_factors(self) -> np.ndarray:
        return self.kernel.lam_at(np.arange(-self.Jd, self.Jr))

    @property
    def retained_mass(self) -> float:
        """Mass of ``K(x, .)`` inside the domain, the same for every x in it."""
        return lambda_to_k(self.kernel).mass_upto(self.Jd)

    @property
    def scaling_factor(self) -> float:
        if self.scaling == "carry":
            return 1.0
        if self.scaling == "annihilate":
            return 0.0
        return self.retained_mass

    @property
    def truncation_bound(self) -> float:
        """``1 - Lambda_{-Jd}``: how far carry mode may sit from the coarsest eigenvalue."""
        return float(self.kernel.defect_at(-self.Jd))


def apply_kernel(plan: OperatorPlan, f: GridFunction) -> GridFunction:
    _check_layout(plan.Jd, plan.Jr, f)
    c = haar_forward(f)
    return haar_inverse(c.multiply(plan.level_factors, plan.scaling_factor))


def operator_matrix(plan: OperatorPlan) -> np.ndarray:
    """Dense matrix of :func:`apply_kernel`; column ``c`` is the image of cell ``c``'s indicator."""
    N = 2 ** (plan.Jd + plan.Jr)
    cols = [apply_kernel(plan, GridFunction(plan.Jd, plan.Jr, np.eye(1, N, c)[0])).values
            for c in range(N)]
    return np.column_stack(cols)


def quadrature_matrix(K: KernelSpec, Jd: int, Jr: int) -> np.ndarray:
    """``A[c, c'] = k_m 2**-Jr`` with ``2**m = delta`` between the cells; lumped mass on the diagonal."""
    N = 2 ** (Jd + Jr)
    if N < 2:
        raise ValueError("grid needs Jd + Jr >= 1")
    ks = lambda_to_k(K)
    idx = np.arange(N)
    x = idx[:, None] ^ idx[None, :]
    bitlen = np.frexp(x.astype(float))[1]
    levels = np.arange(1 - Jr, Jd + 1)
    table = ks.at(levels) * math.ldexp(1.0, -Jr)
    A = table[np.clip(bitlen - 1, 0, None)]
    np.fill_diagonal(A, ks.mass_upto(-Jr))
    return A


def apply_kernel_quadrature(K: KernelSpec, f: GridFunction, exterior: str = "zero") -> GridFunction:
    """``Tf(x) = int K(x, y) f(y) dy`` summed exactly over cells.

    ``exterior="zero"`` integrates against ``f`` extended by zero; ``"mean"``
    extends ``f`` outside the domain by its mean over the domain.
    """
    A = quadrature_matrix(K, f.Jd, f.Jr)
    out = A @ f.values
    if exterior == "mean":
        out = out + (1.0 - lambda_to_k(K).mass_upto(f.Jd)) * f.mean()
    elif exterior != "zero":
        raise ValueError(f"unknown exterior {exterior!r}; expected 'zero' or 'mean'")
    return f.with_values(out)


def _derivative_tail(s: float, Jd: int) -> float:
    # int_{delta(x, y) >= 2**(Jd+1)} delta**(-1-s) dy: everything outside [0, 2**Jd)
    return delta_power_integral(-1.0 - s, math.ldexp(1.0, Jd + 1), "tail")


def derivative_constant(s: float) -> float:
    """``c_s`` with ``int (h(x) - h(y)) delta**(-1-s) dy = c_s |I(h)|**-s h(x)``.

    Half of it comes from the sibling half of ``I(h)``, the rest from the
    ancestors' far halves: ``c_s = (2**(1+s) - 1) / (2**(1+s) - 2)``.
    """
    a = 2.0 ** (1.0 + s)
    return (a - 1.0) / (a - 2.0)


def fractional_derivative_spectral(s: float, f: GridFunction, mode: str = "annihilate") -> GridFunction:
    """``D^s h = 2**(j s) h`` on every Haar function.

    The domain mean is dropped (``mode="annihilate"``, constants have zero
    derivative), or with ``mode="restrict"`` multiplied by
    ``int_{outside} delta**(-1-s) / c_s``, which is ``D^s`` of the domain
    indicator extended by zero (see :func:`derivative_constant`).
    """
    if not 0 < s <= 1:
        raise ValueError("order s must lie in (0, 1]")
    if mode == "annihilate":
        scale = 0.0
    elif mode == "restrict":
        scale = _derivative_tail(s, f.Jd) / derivative_constant(s)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'annihilate' or 'restrict'")
    c = haar_forward(f)
    j = np.arange(-f.Jd, f.Jr)
    return haar_inverse(c.multiply(np.exp2(j * s), scale))


def fractional_derivative_quadrature(s: float, g: GridFunction, x: int | None = None,
                                     exterior: str = "zero", normalized: bool = True):
    """``D^s g(x) = int (g(x) - g(y)) / delta(x, y)**(1+s) dy`` by exact shell sums.

    Points in the same cell contribute nothing since ``g`` is cell-constant.
    Beyond the domain ``g`` is taken as zero (``exterior="zero"``) or as its
    domain mean (``"mean"``); either way that part is a closed-form tail.

    The bare integral has Haar eigenvalues ``c_s 2**(j s)``. With
    ``normalized`` (the default) it is divided by ``c_s`` so that Haar
    functions get exactly ``2**(j s)``, the multiplier that generates the
    heat semigroup; pass ``normalized=False`` for the bare integral.

    Returns the value at cell ``x``, or the whole grid function when ``x``
    is None.
    """
    if s == 1:
        raise ValueError("pointwise integral divergent; use spectral form")
    if not 0 < s < 1:
        raise ValueError("order s must lie in (0, 1)")
    if exterior not in ("zero", "mean"):
        raise ValueError(f"unknown exterior {exterior!r}; expected 'zero' or 'mean'")
    Jd, Jr = g.Jd, g.Jr
    N = g.size
    v = g.values
    levels = np.arange(1 - Jr, Jd + 1)
    weight = np.exp2(-levels * (1.0 + s))
    outside = v.mean() if exterior == "mean" else 0.0
    tail = _derivative_tail(s, Jd)
    norm = derivative_constant(s) if normalized else 1.0
    if x is not None and not 0 <= int(x) < N:
        raise ValueError("cell index outside the grid")
    cells = np.arange(N) if x is None else np.array([int(x)])
    acc = np.zeros((levels.shape[0] + 1, cells.shape[0]))
    for row, (m, w) in enumerate(zip(levels.tolist(), weight)):
        # cells at delta = 2**m from c: flip bit (m + Jr - 1), free lower bits
        b = m + Jr - 1
        blocks = v.reshape(-1, 1 << b).sum(axis=1)
        shell = blocks[(cells >> b) ^ 1]
        acc[row] = w * (v[cells] * math.ldexp(1.0, m - 1) - shell * math.ldexp(1.0, -Jr))
    acc[-1] = (v[cells] - outside) * tail
    out = np.array([math.fsum(col) for col in acc.T]) / norm
    if x is not None:
        return float(out[0])
    return g.with_values(out)


def heat_solve(s: float, t: float, u0: GridFunction) -> GridFunction:
    """``u(t) = sum exp(-t |I(h)|**-s) <u0, h> h``, domain mean carried unchanged."""
    if not 0 < s <= 1:
        raise ValueError("order s must lie in (0, 1]")
    if not t >= 0:
        raise ValueError("time must be nonnegative")
    if t == 0:
        return u0
    c = haar_forward(u0)
    j = np.arange(-u0.Jd, u0.Jr)
    return haar_inverse(c.multiply(np.exp(-t * np.exp2(j * s)), 1.0))
