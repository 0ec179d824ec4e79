"""Iteration-mollification ladder ``M^i`` and its convergence to the diffusion kernel."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .haar import GridFunction, haar_forward, haar_samples, lp_norm
from .jsonio import dumps_json
from .kernels import KernelSpec, clt_step, gamma_diag, stability_estimate
from .spectral import OperatorPlan, apply_kernel, heat_solve

__all__ = [
    "STABILITY_GATE",
    "CltRow",
    "LpRow",
    "CltReport",
    "check_seed",
    "run_clt",
    "emit_report",
    "ROW_HEADER",
    "LP_HEADER",
]

STABILITY_GATE = 0.05
ROW_HEADER = ("i", "j", "lambda_mi", "target", "abs_err", "gamma")
LP_HEADER = ("i", "p", "lp_err")


@dataclass(frozen=True)
class CltRow:
    i: int
    j: int
    lambda_mi: float
    target: float
    abs_err: float
    gamma: float


@dataclass(frozen=True)
class LpRow:
    i: int
    p: float
    lp_err: float


@dataclass
class CltReport:
    t: float
    seed: dict
    rows: list[CltRow] = field(default_factory=list)
    lp_rows: list[LpRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def eps(self) -> dict[int, float]:
        """``max_j abs_err`` for every rung of the ladder."""
        out: dict[int, float] = {}
        for r in self.rows:
            out[r.i] = max(out.get(r.i, 0.0), r.abs_err)
        return out

    def lp_errors(self, p) -> dict[int, float]:
        p = _parse_p(p)
        return {r.i: r.lp_err for r in self.lp_rows if r.p == p}

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "seed": self.seed,
            "rows": [{k: getattr(r, k) for k in ROW_HEADER} for r in self.rows],
            "lp_rows": [{"i": r.i, "p": _p_label(r.p), "lp_err": r.lp_err} for r in self.lp_rows],
            "metadata": self.metadata,
        }


def _parse_p(p) -> float:
    if isinstance(p, str):
        return math.inf if p.strip().lower() in ("inf", "infinity") else float(p)
    return float(p)


def _p_label(p: float):
    return "inf" if math.isinf(p) else p


def check_seed(seed: KernelSpec, t: float, assume_stable: bool = False) -> float | None:
    """Gate on ``4**j k_j -> (2/3) t`` within 5%; returns the estimate when available."""
    target = 2.0 * t / 3.0
    try:
        rep = stability_estimate(seed)
    except ValueError:
        if assume_stable:
            return None
        raise
    if assume_stable:
        return rep.sigma_estimate
    if not rep.stable or abs(rep.sigma_estimate - target) > STABILITY_GATE * target:
        raise ValueError(
            f"seed not 1-stable with parameter (2/3)t: estimate {rep.sigma_estimate:.6g}, "
            f"expected {target:.6g}")
    return rep.sigma_estimate


def _first_monotone_index(eps: dict[int, float]) -> int | None:
    keys = sorted(eps)
    if not keys:
        return None
    i0 = keys[-1]
    for a, b in zip(reversed(keys[:-1]), reversed(keys[1:])):
        if eps[b] <= eps[a]:
            i0 = a
        else:
            break
    return i0


def run_clt(seed: KernelSpec, t: float, i_max: int = 20, j_range=(-6, 6), grid=(4, 8),
            u0: GridFunction | None = None, p_list=(1, 2, math.inf),
            assume_stable: bool = False, seed_name: str | None = None) -> CltReport:
    if not t > 0:
        raise ValueError("t must be positive")
    if i_max < 0:
        raise ValueError("i_max must be nonnegative")
    j_lo, j_hi = j_range
    if j_lo > j_hi:
        raise ValueError("empty j range")
    Jd, Jr = grid
    estimate = check_seed(seed, t, assume_stable)
    if u0 is None:
        if Jd < 0 or Jr < 1:
            raise ValueError("default initial datum h^0_0 needs Jd >= 0 and Jr >= 1")
        u0 = haar_samples(Jd, Jr, 0, 0)
    elif u0.layout != (Jd, Jr):
        raise ValueError(f"initial datum layout {u0.layout} does not match grid {(Jd, Jr)}")
    ps = [_parse_p(p) for p in p_list]

    u = heat_solve(1.0, t, u0)
    c0 = haar_forward(u0)
    levels = np.arange(-Jd, Jr)
    heat_factors = np.exp(-t * np.exp2(levels))
    detail_mask = c0.level_of_index()

    js = np.arange(j_lo, j_hi + 1)
    targets = np.exp(-t * np.exp2(js))
    rows: list[CltRow] = []
    lp_rows: list[LpRow] = []
    parseval = {}
    for i in range(1, i_max + 1):
        M = clt_step(seed, i)
        lam = M.lam_at(js)
        for j, lm, tg in zip(js.tolist(), lam.tolist(), targets.tolist()):
            rows.append(CltRow(i, j, lm, tg, abs(lm - tg), gamma_diag(seed, i, j)))
        plan = OperatorPlan(M, Jd, Jr, "carry")
        v = apply_kernel(plan, u0)
        diff = v - u
        for p in ps:
            lp_rows.append(LpRow(i, p, lp_norm(diff, p)))
        # carry mode leaves the scaling coefficient alone in both v and u
        gap = (plan.level_factors - heat_factors)[detail_mask[1:] + Jd] * c0.data[1:]
        parseval[i] = math.sqrt(math.fsum(gap * gap))

    report = CltReport(
        t=float(t),
        seed={"name": seed_name, "window": list(seed.window), "sigma": seed.sigma,
              "stability_estimate": estimate},
        rows=rows,
        lp_rows=lp_rows,
    )
    report.metadata = {
        "window": list(seed.window),
        "j_range": [int(j_lo), int(j_hi)],
        "grid": {"Jd": int(Jd), "Jr": int(Jr)},
        "i_max": int(i_max),
        "p": [_p_label(p) for p in ps],
        "stability_gate": STABILITY_GATE,
        "assume_stable": bool(assume_stable),
        "i0": _first_monotone_index(report.eps()),
        "l2_parseval": {str(i): v for i, v in parseval.items()},
    }
    return report


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, (int, str)) else format(v, ".17g") for v in r])


def lp_path(path) -> Path:
    """Where the CSV form of the L^p table goes: ``<stem>_lp<suffix>`` beside ``path``."""
    path = Path(path)
    return path.with_name(f"{path.stem}_lp{path.suffix}")


def emit_report(report: CltReport, fmt: str, path) -> None:
    """Write ``report`` as JSON, or as two CSV tables (eigenvalues at ``path``, L^p at :func:`lp_path`)."""
    path = Path(path)
    try:
        if fmt == "json":
            path.write_text(dumps_json(report.to_dict()) + "\n")
        elif fmt == "csv":
            _write_csv(path, ROW_HEADER,
                       ((r.i, r.j, r.lambda_mi, r.target, r.abs_err, r.gamma) for r in report.rows))
            _write_csv(lp_path(path), LP_HEADER,
                       ((r.i, "inf" if math.isinf(r.p) else r.p, r.lp_err) for r in report.lp_rows))
        else:
            raise ValueError(f"unknown report format {fmt!r}; expected 'csv' or 'json'")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
