"""Markov kernels on the half line that depend only on the dyadic distance.

Such a kernel has three equivalent coordinate sequences indexed by the
integers:

* shell values ``k_j`` -- the kernel's value where ``delta(x, y) = 2**j``;
* profile coefficients ``alpha_j``;
* Haar eigenvalues ``Lambda_j`` -- ``T h = Lambda_{j(h)} h``.

:class:`KernelSpec` stores the eigenvalues on a finite window
``[j_lo, j_hi]`` through their complement ``1 - Lambda_j`` (the *defect*),
which keeps full relative precision where ``Lambda_j`` is close to one.
Outside the window:

* above ``j_hi`` the eigenvalues vanish;
* below ``j_lo`` the defect continues geometrically,
  ``1 - Lambda_j = (1 - Lambda_lo) 2**(j - j_lo)``.

The lower tail is the exact tail of a 1-stable kernel, so every finite
window describes a kernel whose shell values decay like ``sigma 4**-j`` with
``sigma = (2/3) (1 - Lambda_lo) 2**-j_lo``. A zero defect at ``j_lo`` gives
back the plain "Lambda = 1 below the window" convention. The other two
sequences carry the matching tails (see :class:`AlphaSequence` and
:class:`ShellSequence`), which makes all six conversions exact maps between
finite arrays.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dyadic import DyadicPoint, dyadic_distance

__all__ = [
    "KernelSpec",
    "AlphaSequence",
    "ShellSequence",
    "StabilityReport",
    "DEFAULT_WINDOW",
    "NONNEG_TOL",
    "NORMALIZATION_TOL",
    "from_lambda",
    "from_defect",
    "lambda_to_alpha",
    "alpha_to_lambda",
    "lambda_to_k",
    "k_to_lambda",
    "alpha_to_k",
    "k_to_alpha",
    "normalization_check",
    "evaluate",
    "psi",
    "gaussian",
    "power_law_seed",
    "step_kernel",
    "convolve",
    "convolve_alpha_route",
    "iterate",
    "mollify",
    "clt_step",
    "stability_estimate",
    "gamma_diag",
    "kernel_to_dict",
    "kernel_from_dict",
    "save_kernel",
    "load_kernel",
    "kernel_table_csv",
]

DEFAULT_WINDOW = (-30, 30)
NONNEG_TOL = 1e-12
NORMALIZATION_TOL = 1e-10
STABILITY_LEVELS = 8
STABILITY_SPREAD_TOL = 1e-2


def _pow2(e) -> np.ndarray:
    return np.ldexp(1.0, np.asarray(e, dtype=int))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim != 1 or a.shape[0] == 0:
        raise ValueError("incompatible windows: sequence window is empty")
    a.setflags(write=False)
    return a


def _pick(value_a, mag_a, value_b, mag_b):
    # of two algebraically equal evaluations keep the one with less cancellation
    return np.where(mag_a <= mag_b, value_a, value_b)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A kernel in the class, stored as ``1 - Lambda_j`` on ``[j_lo, j_hi]``.

    ``sigma`` is an optional declared 1-stability parameter that the
    semigroup operations carry along; it is metadata, never used to compute
    the kernel itself.
    """

    j_lo: int
    defect: np.ndarray
    sigma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "defect", _frozen(self.defect))

    @property
    def j_hi(self) -> int:
        return self.j_lo + self.defect.shape[0] - 1

    @property
    def window(self) -> tuple[int, int]:
        return (self.j_lo, self.j_hi)

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.j_lo, self.j_hi + 1)

    @property
    def lam(self) -> np.ndarray:
        return 1.0 - self.defect

    @property
    def tail_sigma(self) -> float:
        """Stability parameter implied by the geometric lower tail."""
        return 2.0 / 3.0 * float(self.defect[0]) * math.ldexp(1.0, -self.j_lo)

    def defect_at(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=int)
        inside = np.clip(j - self.j_lo, 0, self.defect.shape[0] - 1)
        out = self.defect[inside]
        out = np.where(j < self.j_lo, self.defect[0] * _pow2(np.minimum(j - self.j_lo, 0)), out)
        return np.where(j > self.j_hi, 1.0, out)

    def lam_at(self, j) -> np.ndarray:
        return 1.0 - self.defect_at(j)

    def alpha(self) -> "AlphaSequence":
        return lambda_to_alpha(self)

    def k(self) -> "ShellSequence":
        return lambda_to_k(self)

    def with_sigma(self, sigma: float | None) -> "KernelSpec":
        return KernelSpec(self.j_lo, self.defect, sigma)

    def __repr__(self) -> str:
        return f"KernelSpec(window={self.window}, sigma={self.sigma})"


@dataclass(frozen=True, eq=False)
class AlphaSequence:
    """Profile coefficients on ``[j_lo, j_hi]``.

    Below the window ``alpha_j = alpha_lo 2**(j - j_lo)``, above it zero.
    """

    j_lo: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def j_hi(self) -> int:
        return self.j_lo + self.values.shape[0] - 1

    @property
    def window(self) -> tuple[int, int]:
        return (self.j_lo, self.j_hi)

    def at(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=int)
        inside = np.clip(j - self.j_lo, 0, self.values.shape[0] - 1)
        out = self.values[inside]
        out = np.where(j < self.j_lo, self.values[0] * _pow2(np.minimum(j - self.j_lo, 0)), out)
        return np.where(j > self.j_hi, 0.0, out)

    def total(self) -> float:
        # the geometric tail below j_lo sums to alpha_lo
        return math.fsum(self.values) + float(self.values[0])

    def upper_sums(self) -> np.ndarray:
        """``Lambda_j = sum_{l > j} alpha_l`` for ``j`` in ``[j_lo, j_hi - 1]``."""
        v = self.values
        suffix = np.cumsum(v[::-1])[::-1]
        return suffix[1:]


@dataclass(frozen=True, eq=False)
class ShellSequence:
    """Shell values ``k_j`` on ``[j_lo, j_hi]``.

    Below the window the kernel is flat (``k_j = k_lo``); above it the
    shell values decay like ``k_hi 4**(j_hi - j)``.
    """

    j_lo: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def j_hi(self) -> int:
        return self.j_lo + self.values.shape[0] - 1

    @property
    def window(self) -> tuple[int, int]:
        return (self.j_lo, self.j_hi)

    def at(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=int)
        inside = np.clip(j - self.j_lo, 0, self.values.shape[0] - 1)
        out = self.values[inside]
        decay = np.ldexp(1.0, -2 * np.maximum(j - self.j_hi, 0))
        return np.where(j > self.j_hi, self.values[-1] * decay, out)

    def mass_upto(self, m: int) -> float:
        """``sum_{l <= m} k_l 2**(l-1)``: mass within distance ``2**m``."""
        lo, hi = self.j_lo, self.j_hi
        k0 = float(self.values[0])
        if m < lo:
            return k0 * math.ldexp(1.0, m)
        top = min(m, hi)
        l = np.arange(lo, top + 1)
        terms = list(self.values[: top - lo + 1] * _pow2(l - 1))
        terms.append(k0 * math.ldexp(1.0, lo - 1))
        if m > hi:
            kh = float(self.values[-1])
            # sum_{hi < l <= m} kh 4^(hi-l) 2^(l-1) = kh 2^(hi-1) (1 - 2^(hi-m))
            terms.append(kh * math.ldexp(1.0, hi - 1) * (1.0 - math.ldexp(1.0, hi - m)))
        return math.fsum(terms)

    def mass_from(self, m: int) -> float:
        """``sum_{l >= m} k_l 2**(l-1)``: mass at distance ``2**m`` or more."""
        lo, hi = self.j_lo, self.j_hi
        kh = float(self.values[-1])
        if m > hi:
            return kh * math.ldexp(1.0, 2 * hi - m)
        start = max(m, lo)
        l = np.arange(start, hi + 1)
        terms = list(self.values[start - lo:] * _pow2(l - 1))
        terms.append(kh * math.ldexp(1.0, hi - 1))
        if m < lo:
            k0 = float(self.values[0])
            terms.append(k0 * (math.ldexp(1.0, lo - 1) - math.ldexp(1.0, m - 1)))
        return math.fsum(terms)

    def total(self) -> float:
        return self.mass_from(self.j_lo - 1) + float(self.values[0]) * math.ldexp(1.0, self.j_lo - 2)


# -- construction -----------------------------------------------------------

def _check_kernel(K: KernelSpec) -> KernelSpec:
    lam = K.lam
    if np.any(lam > 1 + NONNEG_TOL) or np.any(lam < -1 - NONNEG_TOL):
        raise ValueError("eigenvalues must lie in [-1, 1]")
    k = lambda_to_k(K).values
    scale = max(1.0, float(np.max(np.abs(k))))
    if np.min(k) < -NONNEG_TOL * scale:
        raise ValueError("kernel not nonnegative")
    return K


def from_defect(j_lo: int, defect, sigma: float | None = None, check: bool = True) -> KernelSpec:
    """Build a kernel from ``1 - Lambda_j`` on ``[j_lo, j_lo + len - 1]``."""
    K = KernelSpec(int(j_lo), defect, sigma)
    return _check_kernel(K) if check else K


def from_lambda(window, values, strict: bool = False, sigma: float | None = None) -> KernelSpec:
    """Build a kernel from its eigenvalues on ``window = (j_lo, j_hi)``.

    With ``strict`` the sequence, tails included, must be nonincreasing;
    this is the condition under which a nonnegative kernel is guaranteed.
    """
    j_lo, j_hi = (int(w) for w in window)
    lam = np.asarray(values, dtype=float)
    if lam.shape != (j_hi - j_lo + 1,):
        raise ValueError(f"incompatible windows: {lam.shape[0]} values for window {window}")
    if np.any(np.abs(lam) > 1):
        raise ValueError("eigenvalues must lie in [-1, 1]")
    if strict and (np.any(np.diff(lam) > 0) or lam[-1] < 0):
        raise ValueError("not a decreasing eigenvalue sequence")
    return from_defect(j_lo, 1.0 - lam, sigma)


# -- the six conversions ----------------------------------------------------

def lambda_to_alpha(K: KernelSpec) -> AlphaSequence:
    """``alpha_j = Lambda_{j-1} - Lambda_j`` on ``[j_lo, j_hi + 1]``."""
    d = K.defect
    a = np.empty(d.shape[0] + 1)
    a[0] = d[0] / 2
    a[1:-1] = d[1:] - d[:-1]
    a[-1] = 1.0 - d[-1]
    return AlphaSequence(K.j_lo, a)


def alpha_to_lambda(a: AlphaSequence, sigma: float | None = None) -> KernelSpec:
    """``Lambda_j = sum_{l > j} alpha_l`` on ``[j_lo, j_hi - 1]``."""
    if a.values.shape[0] < 2:
        raise ValueError("incompatible windows: need at least two alpha values")
    total = a.total()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"alpha sequence sums to {total!r}, not 1")
    v = a.values
    upper = a.upper_sums()
    upper_mag = np.cumsum(np.abs(v[::-1]))[::-1][1:]
    # the complementary sum sum_{l <= j} alpha_l, tail included, is 1 - Lambda_j
    lower = np.cumsum(v)[:-1] + v[0]
    lower_mag = np.cumsum(np.abs(v))[:-1] + abs(v[0])
    defect = _pick(lower, lower_mag, 1.0 - upper, upper_mag + 1.0)
    return KernelSpec(a.j_lo, defect, sigma)


def lambda_to_k(K: KernelSpec) -> ShellSequence:
    """``k_j = -2**-j Lambda_{-j} + sum_{i > j} 2**-i Lambda_{-i}`` on ``[-j_hi - 1, -j_lo]``."""
    lo = K.j_lo
    m = np.arange(lo, K.j_hi + 2)  # m = -j
    D = np.append(K.defect, 1.0)
    L = 1.0 - D
    L[-1] = 0.0
    w = _pow2(m)
    d0 = float(D[0])
    tail = d0 * math.ldexp(1.0, lo) / 3.0  # sum_{l < lo} 2^l D_l
    below_d = np.concatenate(([0.0], np.cumsum(w[:-1] * D[:-1]))) + tail
    below_d_mag = np.concatenate(([0.0], np.cumsum(w[:-1] * np.abs(D[:-1])))) + abs(tail)
    via_defect = w * D - below_d
    mag_defect = w * np.abs(D) + below_d_mag
    tail_l = math.ldexp(1.0, lo) - tail  # sum_{l < lo} 2^l Lambda_l
    below_l = np.concatenate(([0.0], np.cumsum(w[:-1] * L[:-1]))) + tail_l
    below_l_mag = np.concatenate(([0.0], np.cumsum(w[:-1] * np.abs(L[:-1])))) + abs(tail_l)
    via_lambda = -w * L + below_l
    mag_lambda = w * np.abs(L) + below_l_mag
    k = _pick(via_defect, mag_defect, via_lambda, mag_lambda)
    return ShellSequence(-(K.j_hi + 1), k[::-1])


def k_to_lambda(ks: ShellSequence, sigma: float | None = None) -> KernelSpec:
    """``Lambda_j = (-k_{-j} 2**-j + sum_{l < -j} k_l 2**l) / 2`` on ``[-k_hi, -k_lo - 1]``."""
    kl, kh = ks.window
    if kh <= kl:
        raise ValueError("incompatible windows: need at least two shell values")
    total = normalization_check(ks)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"shell values carry mass {total!r}, not 1")
    k = ks.values
    l = np.arange(kl, kh + 1)
    w = _pow2(l)
    # m = -j runs over [kl + 1, kh]
    head = float(k[0]) * math.ldexp(1.0, kl)
    below = np.cumsum(k * w)[:-1] + head
    below_mag = np.cumsum(np.abs(k) * w)[:-1] + abs(head)
    km, wm = k[1:], w[1:]
    direct = 0.5 * (below - km * wm)
    direct_mag = 0.5 * (below_mag + np.abs(km) * wm)
    tail = float(k[-1]) * math.ldexp(1.0, kh - 1)
    above = np.cumsum((k * w / 2)[::-1])[::-1][1:] + tail
    above_mag = np.cumsum((np.abs(k) * w / 2)[::-1])[::-1][1:] + abs(tail)
    complement = above + km * wm / 2
    complement_mag = above_mag + np.abs(km) * wm / 2
    defect = _pick(complement, complement_mag, 1.0 - direct, direct_mag + 1.0)
    return KernelSpec(-kh, defect[::-1], sigma)


def alpha_to_k(a: AlphaSequence) -> ShellSequence:
    """``k_j = sum_{i >= j} 2**-i alpha_{-i}`` on ``[-j_hi, -j_lo]``."""
    lo = a.j_lo
    l = np.arange(lo, a.j_hi + 1)
    tail = float(a.values[0]) * math.ldexp(1.0, lo) / 3.0
    k = np.cumsum(a.values * _pow2(l)) + tail
    return ShellSequence(-a.j_hi, k[::-1])


def k_to_alpha(ks: ShellSequence) -> AlphaSequence:
    """``alpha_j = 2**-j (k_{-j} - k_{-j+1})`` on ``[-k_hi, -k_lo]``."""
    k = ks.values
    nxt = np.append(k[1:], k[-1] / 4)
    m = np.arange(ks.j_lo, ks.j_hi + 1)
    alpha_by_m = _pow2(m) * (k - nxt)
    return AlphaSequence(-ks.j_hi, alpha_by_m[::-1])


def normalization_check(K) -> float:
    """``sum_j k_j 2**(j-1)``; equals one for every kernel in the class."""
    ks = K if isinstance(K, ShellSequence) else lambda_to_k(K)
    return ks.total()


def evaluate(K: KernelSpec, x, y) -> float:
    """``K(x, y) = k_m`` where ``delta(x, y) = 2**m``."""
    dv = dyadic_distance(DyadicPoint.of(x), DyadicPoint.of(y))
    if dv.is_zero:
        raise ValueError("diagonal evaluation undefined pointwise")
    return float(lambda_to_k(K).at(dv.exponent))


# -- closed-form kernels ----------------------------------------------------

def psi(r: float) -> float:
    """Profile of the diffusion kernel: ``K_t(x, y) = psi(delta(x, y) / t) / t``.

    Evaluated as ``r**-1 sum_j 2**-j (exp(-1/(2**j r)) - exp(-1/r))`` with
    every bracket formed without cancellation, so the result keeps full
    relative precision for large ``r`` where ``r**2 psi(r) -> 2/3``.
    """
    if not r > 0:
        raise ValueError("psi is defined for r > 0")
    b = 1.0 / r
    total = 0.0
    j = 1
    while True:
        a = b * math.ldexp(1.0, -j)
        term = math.ldexp(-math.exp(-a) * math.expm1(a - b), -j)
        total += term
        if a < 1.0 and math.ldexp(1.0, -j) < 1e-18 * total:
            break
        j += 1
        if j > 4000:
            break
    return total / r


def gaussian(t: float, window=DEFAULT_WINDOW) -> KernelSpec:
    """The dyadic diffusion kernel ``K_t``: ``Lambda_j = exp(-t 2**j)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    j_lo, j_hi = window
    j = np.arange(j_lo, j_hi + 1)
    return KernelSpec(j_lo, -np.expm1(-t * _pow2(j)), 2.0 * t / 3.0)


def power_law_seed(sigma: float, window=DEFAULT_WINDOW) -> KernelSpec:
    """Exactly 1-stable seed: ``k_j = 1 - sigma/2`` for ``j <= 0``, ``sigma 4**-j`` above.

    Its eigenvalues are ``Lambda_j = 1 - (3 sigma / 2) 2**j`` for ``j <= -1``
    and zero from ``j = 0`` on, so the window must reach ``j = -1``.
    """
    if not 0 < sigma < 2:
        raise ValueError("head weight negative: sigma must lie in (0, 2)")
    j_lo, j_hi = window
    if j_lo > -1:
        raise ValueError("power-law seed needs a window starting at or below -1")
    j = np.arange(j_lo, j_hi + 1)
    defect = np.where(j <= -1, 1.5 * sigma * _pow2(np.minimum(j, 0)), 1.0)
    return KernelSpec(j_lo, defect, float(sigma))


def step_kernel(window=DEFAULT_WINDOW) -> KernelSpec:
    """Uniform average over the dyadic interval of length 1/2 holding x.

    ``Lambda_j = 1`` for ``j <= 0`` and 0 above; ``k_j = 2`` for ``j <= -1``.
    """
    j_lo, j_hi = window
    if j_lo > 0 or j_hi < 0:
        raise ValueError("step kernel needs a window containing 0")
    j = np.arange(j_lo, j_hi + 1)
    return KernelSpec(j_lo, np.where(j <= 0, 0.0, 1.0), None)


# -- semigroup operations ---------------------------------------------------

def _merged_levels(K1: KernelSpec, K2: KernelSpec) -> np.ndarray:
    return np.arange(min(K1.j_lo, K2.j_lo), min(K1.j_hi, K2.j_hi) + 1)


def _sum_sigma(a, b):
    return None if a is None or b is None else a + b


def convolve(K1: KernelSpec, K2: KernelSpec) -> KernelSpec:
    """Kernel of ``T_1 T_2``; eigenvalues multiply level by level.

    The result lives on ``[min j_lo, min j_hi]`` (above the smaller top one
    factor vanishes); values outside either input window come from that
    input's tails.
    """
    j = _merged_levels(K1, K2)
    d1, d2 = K1.defect_at(j), K2.defect_at(j)
    return KernelSpec(int(j[0]), d1 + d2 - d1 * d2, _sum_sigma(K1.sigma, K2.sigma))


def convolve_alpha_route(K1: KernelSpec, K2: KernelSpec) -> AlphaSequence:
    """Profile coefficients of ``K1 * K2`` from
    ``alpha3 = alpha1 lambda2 + alpha2 lambda1 + alpha1 alpha2``.

    Independent of :func:`convolve`; ``.upper_sums()`` of the result gives
    the eigenvalues on the same window.
    """
    j = _merged_levels(K1, K2)
    ja = np.arange(j[0], j[-1] + 2)
    a1, a2 = K1.alpha().at(ja), K2.alpha().at(ja)
    l1, l2 = K1.lam_at(ja), K2.lam_at(ja)
    return AlphaSequence(int(ja[0]), a1 * l2 + a2 * l1 + a1 * a2)


def _power(defect: np.ndarray, n: int) -> np.ndarray:
    """``1 - (1 - defect)**n`` evaluated through log1p/expm1."""
    lam = 1.0 - defect
    out = np.empty_like(defect)
    pos = lam > 0
    with np.errstate(divide="ignore"):
        out[pos] = -np.expm1(n * np.log1p(-defect[pos]))
    neg = ~pos
    out[neg] = 1.0 - np.where(lam[neg] == 0, 0.0, np.sign(lam[neg]) ** n * np.abs(lam[neg]) ** n)
    return out


def iterate(K: KernelSpec, n: int) -> KernelSpec:
    """``n``-fold composition: ``Lambda_j -> Lambda_j**n``."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    n = int(n)
    sigma = None if K.sigma is None else n * K.sigma
    if n == 1:
        return K.with_sigma(sigma)
    return KernelSpec(K.j_lo, _power(K.defect, n), sigma)


def mollify(K: KernelSpec, i: int) -> KernelSpec:
    """``K_i(x, y) = 2**i K(2**i x, 2**i y)``: ``Lambda'_l = Lambda_{l-i}``."""
    sigma = None if K.sigma is None else math.ldexp(K.sigma, -i)
    return KernelSpec(K.j_lo + i, K.defect, sigma)


def clt_step(K: KernelSpec, i: int) -> KernelSpec:
    """``M^i``: ``2**i``-fold iteration followed by mollification by ``2**i``.

    Eigenvalues ``Lambda_{j-i} ** (2**i)``. The window keeps its bottom and
    grows by ``i`` on top; the levels ``[j_lo, j_lo + i)`` come from the
    seed's tail, so no accuracy is lost to the geometric continuation.
    """
    if i < 0 or int(i) != i:
        raise ValueError("i must be a nonnegative integer")
    i = int(i)
    if i == 0:
        return K
    j = np.arange(K.j_lo, K.j_hi + i + 1)
    return KernelSpec(K.j_lo, _power(K.defect_at(j - i), 2 ** i), K.sigma)


# -- stability --------------------------------------------------------------

@dataclass
class StabilityReport:
    sigma_samples: dict[int, float]
    sigma_estimate: float
    converged: bool
    max_relative_spread: float = field(default=math.nan)

    @property
    def stable(self) -> bool:
        """Converged to a positive parameter."""
        return self.converged and self.sigma_estimate > 0

    def to_dict(self) -> dict:
        return {
            "sigma_samples": {str(j): v for j, v in self.sigma_samples.items()},
            "sigma_estimate": self.sigma_estimate,
            "converged": self.converged,
            "stable": self.stable,
            "max_relative_spread": self.max_relative_spread,
        }


def stability_estimate(K: KernelSpec) -> StabilityReport:
    """Sample ``4**j k_j`` over the top shell levels of the window.

    The shell window of ``K`` is ``[-j_hi - 1, -j_lo]``; its top is the
    largest distance the window resolves.
    """
    ks = lambda_to_k(K)
    top = ks.j_hi
    if top < STABILITY_LEVELS:
        raise ValueError("insufficient tail: window must resolve distances up to 2**8")
    j = np.arange(top - STABILITY_LEVELS + 1, top + 1)
    samples = ks.at(j) * _pow2(2 * j)
    est = float(samples[-1])
    last = samples[-5:]
    spread = float(np.max(np.abs(last - est)) / max(abs(est), np.finfo(float).tiny))
    return StabilityReport({int(a): float(b) for a, b in zip(j, samples)}, est,
                           spread < STABILITY_SPREAD_TOL, spread)


def gamma_diag(K: KernelSpec, i: int, j: int) -> float:
    """``gamma(i, j) = 2**(i-j) sum_{l >= i-j} k_l 2**(l-1) + k_{i-j} 4**(i-j) / 2``.

    Satisfies ``Lambda_{j-i} = 1 - gamma(i, j) 2**(j-i)`` and tends to ``t``
    for a seed that is 1-stable with parameter ``2t/3``.
    """
    ks = lambda_to_k(K)
    m = i - j
    return (math.ldexp(ks.mass_from(m), m)
            + float(ks.at(m)) * math.ldexp(1.0, 2 * m - 1))


# -- serialization ----------------------------------------------------------

def kernel_to_dict(K: KernelSpec) -> dict:
    out = {"j_lo": K.j_lo, "j_hi": K.j_hi, "lambda": [float(v) for v in K.lam],
           "defect": [float(v) for v in K.defect]}
    if K.sigma is not None:
        out["sigma"] = float(K.sigma)
    return out


def kernel_from_dict(payload: dict, check: bool = True) -> KernelSpec:
    """Read ``{"j_lo", "j_hi", "lambda"}``; an optional ``defect`` list wins over ``lambda``."""
    try:
        j_lo, j_hi = int(payload["j_lo"]), int(payload["j_hi"])
        lam = payload["lambda"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"kernel JSON needs j_lo, j_hi and lambda: {exc}") from None
    if len(lam) != j_hi - j_lo + 1:
        raise ValueError("incompatible windows: lambda length does not match j_lo..j_hi")
    defect = payload.get("defect")
    if defect is None:
        defect = 1.0 - np.asarray(lam, dtype=float)
    elif len(defect) != len(lam):
        raise ValueError("incompatible windows: defect length does not match lambda")
    return from_defect(j_lo, defect, payload.get("sigma"), check=check)


def save_kernel(K: KernelSpec, path) -> None:
    from .jsonio import dumps_json

    Path(path).write_text(dumps_json(kernel_to_dict(K)) + "\n")


def load_kernel(path, check: bool = True) -> KernelSpec:
    return kernel_from_dict(json.loads(Path(path).read_text()), check=check)


_TABLE_COLUMNS = ("lambda", "alpha", "k", "stab")


def kernel_table_csv(K: KernelSpec, show: str = "all") -> str:
    """CSV of the sequences over the union of their windows.

    ``show="all"`` writes ``j,lambda,alpha,k,stab`` (``stab = 4**j k_j``);
    otherwise just ``j`` and the one requested column.
    """
    if show not in ("lambda", "alpha", "k", "all"):
        raise ValueError(f"unknown sequence {show!r}")
    a, ks = K.alpha(), K.k()
    lo = min(K.j_lo, a.j_lo, ks.j_lo)
    hi = max(K.j_hi, a.j_hi, ks.j_hi)
    j = np.arange(lo, hi + 1)
    cols = {
        "lambda": K.lam_at(j),
        "alpha": a.at(j),
        "k": ks.at(j),
    }
    cols["stab"] = cols["k"] * _pow2(2 * j)
    names = _TABLE_COLUMNS if show == "all" else (show,)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("j",) + names)
    for r, jj in enumerate(j):
        w.writerow([int(jj)] + [format(float(cols[n][r]), ".17g") for n in names])
    return buf.getvalue()
