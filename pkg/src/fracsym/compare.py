"""Elliptic concentration-comparison harness.

Solves the Neumann problem on Omega and the symmetrized Dirichlet problem
on the half-measure ball B, extends both solutions, and checks at every
height y that the median-split rearranged extension is less concentrated
than its radial counterpart:

    U(s, y) = int_0^s (w1* + w2*)  <=  V(s, y) = int_0^s xi*

for s in [0, |Omega|/2].  Discretization noise is absorbed by a tolerance
tol = C_tol * h * ||f||_2 (first order in the cell size).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, ScalarField
from .rearrange import (
    ConcentrationCurve,
    add_curves,
    concentration,
    decreasing_rearrangement,
    less_concentrated,
    median,
    median_split,
)
from .spectral import SpectralOperator, solve_elliptic
from .extension import extend

__all__ = [
    "DominanceViolated",
    "YSlice",
    "ComparisonReport",
    "gamma_constant",
    "symmetrized_data",
    "elliptic_compare",
    "dominated_compare",
    "oscillation_check",
    "lp_check",
    "default_tolerance",
]

DEFAULT_TOL_CONSTANT = 10.0
_BALL_MEASURE_TOL = 1e-10
_PRECONDITION_SLACK = 1e-9


class DominanceViolated(ValueError):
    """The radial datum fails to dominate the rearranged source parts."""


def gamma_constant(dim: int, q: float) -> float:
    """Diffusion gamma = 1 / (N * omega_N^(1/N) * Q)^2 for the ball problem."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if q <= 0:
        raise ValueError(f"Q must be positive, got {q}")
    from .grid import unit_ball_measure

    return 1.0 / (dim * unit_ball_measure(dim) ** (1.0 / dim) * q) ** 2


def _check_half_measure(omega_grid: Grid, ball_grid: Grid):
    half = omega_grid.total_measure / 2.0
    if abs(ball_grid.total_measure - half) > _BALL_MEASURE_TOL * max(half, 1.0):
        raise ValueError(
            f"ball measure {ball_grid.total_measure:.12g} must equal "
            f"|Omega|/2 = {half:.12g}"
        )


def symmetrized_data(f: ScalarField, ball_grid: Grid, mode: str = "zero_mean") -> ScalarField:
    """Radial datum f1# + f2# on B.

    mode "zero_mean" splits f into plain positive/negative parts (the pure
    Neumann setting); mode "with_c" splits f - median(f) (the zero-order
    setting, where no compatibility holds).
    """
    from .rearrange import schwarz_rearrangement

    _check_half_measure(f.grid, ball_grid)
    if mode == "zero_mean":
        f1, f2 = f.positive_part(), f.negative_part()
    elif mode == "with_c":
        f1, f2 = median_split(f)
    else:
        raise ValueError(f"mode must be 'zero_mean' or 'with_c', got {mode!r}")
    g1 = schwarz_rearrangement(f1, ball_grid, allow_truncation=True)
    g2 = schwarz_rearrangement(f2, ball_grid, allow_truncation=True)
    return g1 + g2


@dataclass(frozen=True)
class YSlice:
    """Concentration data of one height: curves sampled on the union of
    breakpoints restricted to [0, |Omega|/2]."""

    y: float
    s: np.ndarray
    U: np.ndarray
    V: np.ndarray

    @property
    def chi(self) -> np.ndarray:
        return self.U - self.V

    @property
    def gap(self) -> float:
        return float(np.max(self.chi))


@dataclass(frozen=True)
class ComparisonReport:
    """Per-height concentration gaps with a single tolerance verdict."""

    slices: tuple
    worst_gap: float
    tolerance: float
    verdict: str  # "holds" | "violated"
    params: dict = field(default_factory=dict)
    split_reports: tuple = ()

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_json_dict(self) -> dict:
        return {
            "params": self.params,
            "per_y": [
                {
                    "y": float(sl.y),
                    "s": [float(x) for x in sl.s],
                    "U": [float(x) for x in sl.U],
                    "V": [float(x) for x in sl.V],
                    "chi": [float(x) for x in sl.chi],
                }
                for sl in self.slices
            ],
            "worst_gap": float(self.worst_gap),
            "tolerance": float(self.tolerance),
            "verdict": self.verdict,
            "split": [r.to_json_dict() for r in self.split_reports],
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("y,s,U,V,chi\n")
            for sl in self.slices:
                for s, u, v, c in zip(sl.s, sl.U, sl.V, sl.chi):
                    fh.write(
                        f"{float(sl.y)!r},{float(s)!r},{float(u)!r},"
                        f"{float(v)!r},{float(c)!r}\n"
                    )


def default_tolerance(omega_grid: Grid, f: ScalarField, tol_constant: float) -> float:
    """C_tol * h * ||f||_2; first-order-in-h model for rearrangement error."""
    return tol_constant * omega_grid.cell_width * f.norm(2)


def _split_curve(w_layer: ScalarField) -> ConcentrationCurve:
    """U-curve of one layer: median split then summed rearranged integrals."""
    lam = median(w_layer)
    shifted = w_layer - lam
    c1 = concentration(decreasing_rearrangement(shifted.positive_part()))
    c2 = concentration(decreasing_rearrangement(shifted.negative_part()))
    return add_curves(c1, c2)


def _slice_from_curves(
    y: float, u_curve: ConcentrationCurve, v_curve: ConcentrationCurve, s_hi: float
) -> YSlice:
    from .rearrange import union_breakpoints

    s = union_breakpoints(u_curve.s, v_curve.s)
    s = np.concatenate([s[s < s_hi], [s_hi]])
    return YSlice(y=float(y), s=s, U=u_curve.eval(s), V=v_curve.eval(s))


def _compare_extensions(omega_spec, ball_spec, sigma, u, v, y_samples):
    """Shared comparison core: extend both solutions and slice per height."""
    w = extend(omega_spec, sigma, u, y_samples)
    xi = extend(ball_spec, sigma, v, y_samples)
    s_hi = omega_spec.grid.total_measure / 2.0
    slices = []
    for j, y in enumerate(w.y_samples):
        u_curve = _split_curve(w.layer(j))
        v_curve = concentration(decreasing_rearrangement(xi.layer(j)))
        slices.append(_slice_from_curves(y, u_curve, v_curve, s_hi))
    return slices, w, xi


def _report(slices, tolerance, params, split_reports=()) -> ComparisonReport:
    worst = max(sl.gap for sl in slices)
    return ComparisonReport(
        slices=tuple(slices),
        worst_gap=worst,
        tolerance=float(tolerance),
        verdict="holds" if worst <= tolerance else "violated",
        params=params,
        split_reports=tuple(split_reports),
    )


def _median_curve_is_flat(w, tol: float) -> bool:
    meds = [median(layer) for layer in w.layers]
    return max(meds) - min(meds) <= tol


def elliptic_compare(
    omega_spec: SpectralOperator,
    ball_spec: SpectralOperator,
    sigma: float,
    c: float,
    f: ScalarField,
    y_samples,
    tol: float = None,
    tol_constant: float = DEFAULT_TOL_CONSTANT,
    q: float = None,
    split_mode: bool = False,
) -> ComparisonReport:
    """Run the full elliptic comparison for source f.

    Solves both problems, extends, and checks U <= V + tol at every height.
    With split_mode on and a y-constant median curve, the positive and
    negative parts are additionally compared against their own radial
    problems and reported separately.
    """
    _check_half_measure(omega_spec.grid, ball_spec.grid)
    mode = "zero_mean" if c == 0.0 else "with_c"
    u = solve_elliptic(omega_spec, sigma, c, f)
    g = symmetrized_data(f, ball_spec.grid, mode)
    v = solve_elliptic(ball_spec, sigma, c, g)
    if tol is None:
        tol = default_tolerance(omega_spec.grid, f, tol_constant)
    slices, w, _ = _compare_extensions(omega_spec, ball_spec, sigma, u, v, y_samples)
    params = {
        "sigma": float(sigma),
        "c": float(c),
        "gamma": float(ball_spec.gamma),
        "Q": None if q is None else float(q),
        "omega_grid": omega_spec.grid.to_json_dict(),
        "ball_grid": ball_spec.grid.to_json_dict(),
        "mode": mode,
    }
    split_reports = []
    if split_mode and _median_curve_is_flat(w, tol):
        split_reports = _split_mode_reports(
            omega_spec, ball_spec, sigma, c, f, mode, y_samples, tol, params
        )
    return _report(slices, tol, params, split_reports)


def _split_mode_reports(omega_spec, ball_spec, sigma, c, f, mode, y_samples, tol, params):
    """Separate comparisons w_i* vs xi_i* (flat-median strengthening)."""
    from .rearrange import schwarz_rearrangement

    u = solve_elliptic(omega_spec, sigma, c, f)
    shifted = f - median(f) if mode == "with_c" else f
    lam_u = median(u)
    reports = []
    for label, f_i, u_i in (
        ("positive", shifted.positive_part(), (u - lam_u).positive_part()),
        ("negative", shifted.negative_part(), (u - lam_u).negative_part()),
    ):
        g_i = schwarz_rearrangement(f_i, ball_spec.grid, allow_truncation=True)
        v_i = solve_elliptic(ball_spec, sigma, c, g_i)
        w_i = extend(omega_spec, sigma, u_i, y_samples)
        xi_i = extend(ball_spec, sigma, v_i, y_samples)
        s_hi = omega_spec.grid.total_measure / 2.0
        slices = []
        for j, y in enumerate(w_i.y_samples):
            uc = concentration(decreasing_rearrangement(w_i.layer(j)))
            vc = concentration(decreasing_rearrangement(xi_i.layer(j)))
            slices.append(_slice_from_curves(y, uc, vc, s_hi))
        reports.append(_report(slices, tol, {**params, "part": label}))
    return reports


def dominated_compare(
    omega_spec: SpectralOperator,
    ball_spec: SpectralOperator,
    sigma: float,
    c: float,
    f: ScalarField,
    g: ScalarField,
    y_samples,
    tol: float = None,
    tol_constant: float = DEFAULT_TOL_CONSTANT,
    extra: ScalarField = None,
    g2: ScalarField = None,
    q: float = None,
) -> ComparisonReport:
    """Comparison against a dominating radial datum.

    g must be radially non-increasing on B with f1# + f2# < g (checked);
    an optional additive term `extra` on Omega requires its own dominating
    g2 with (extra+)# + (extra-)# < g2.  The Omega problem is solved with
    f (+ extra), the ball problem with g (+ g2).
    """
    from .rearrange import schwarz_rearrangement

    _check_half_measure(omega_spec.grid, ball_spec.grid)
    mode = "zero_mean" if c == 0.0 else "with_c"
    parts = symmetrized_data(f, ball_spec.grid, mode)
    _require_dominance(parts, g, "f1# + f2#")
    datum = g
    source = f
    if extra is not None:
        if g2 is None:
            raise ValueError("an extra Omega term needs its own dominating datum g2")
        extra_parts = schwarz_rearrangement(
            extra.positive_part(), ball_spec.grid, allow_truncation=True
        ) + schwarz_rearrangement(
            extra.negative_part(), ball_spec.grid, allow_truncation=True
        )
        _require_dominance(extra_parts, g2, "(h+)# + (h-)#")
        datum = g + g2
        source = f + extra
    u = solve_elliptic(omega_spec, sigma, c, source)
    v = solve_elliptic(ball_spec, sigma, c, datum)
    if tol is None:
        tol = default_tolerance(omega_spec.grid, source, tol_constant)
    slices, _, _ = _compare_extensions(omega_spec, ball_spec, sigma, u, v, y_samples)
    params = {
        "sigma": float(sigma),
        "c": float(c),
        "gamma": float(ball_spec.gamma),
        "Q": None if q is None else float(q),
        "omega_grid": omega_spec.grid.to_json_dict(),
        "ball_grid": ball_spec.grid.to_json_dict(),
        "mode": mode,
        "dominated": True,
    }
    return _report(slices, tol, params)


def _require_dominance(parts: ScalarField, g: ScalarField, label: str):
    scale = max(g.norm(1), parts.norm(1), 1.0)
    verdict = less_concentrated(
        concentration(decreasing_rearrangement(parts)),
        concentration(decreasing_rearrangement(g)),
        tol=_PRECONDITION_SLACK * scale,
    )
    if not verdict.holds:
        raise DominanceViolated(
            f"{label} is not dominated by the radial datum "
            f"(gap {verdict.gap:.3e} at s = {verdict.s_at_gap:.6g})"
        )


def oscillation_check(u: ScalarField, v: ScalarField, tol: float = 0.0):
    """max(v) >= oscillation of u, up to tol; returns (holds, slack)."""
    osc = float(np.max(u.values) - np.min(u.values))
    slack = float(np.max(v.values)) - osc
    return slack >= -tol, slack


def lp_check(u: ScalarField, v: ScalarField, p_list, tol: float = 0.0) -> dict:
    """||u - median(u)||_p <= ||v||_p + tol for each requested p."""
    shifted = u - median(u)
    out = {}
    for p in p_list:
        key = "inf" if p in (math.inf, "inf") else p
        out[key] = shifted.norm(p) <= v.norm(p) + tol
    return out
