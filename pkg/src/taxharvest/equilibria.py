"""Location and classification of the system's equilibrium points.

Closed forms exist for the trivial point, the capacity boundary point,
the firm-free point (government surviving on alternative revenue alone)
and the government-free point.  Formal-free equilibria reduce to positive
roots of a cubic in the informal profit; the full coexistence point has
no closed form and is found by damped-Newton multistart.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cubic import real_cubic_roots
from .model import Params, jacobian, vector_field

__all__ = [
    "CLASS_TRIVIAL",
    "CLASS_BOUNDARY",
    "CLASS_FIRM_FREE",
    "CLASS_FORMAL_FREE",
    "CLASS_GOVERNMENT_FREE",
    "CLASS_COEXISTENCE",
    "EquilibriumReport",
    "CubicCoefficients",
    "closed_form_equilibria",
    "cubic_coefficients",
    "consistent_cubic_coefficients",
    "solve_E3",
    "solve_coexistence",
    "all_equilibria",
    "newton_equilibrium",
    "residual_norm",
]

CLASS_TRIVIAL = "trivial"
CLASS_BOUNDARY = "boundary"
CLASS_FIRM_FREE = "firm-free"
CLASS_FORMAL_FREE = "formal-free"
CLASS_GOVERNMENT_FREE = "government-free"
CLASS_COEXISTENCE = "coexistence"


@dataclass
class EquilibriumReport:
    """A located equilibrium with feasibility flags and a residual check.

    ``point`` may carry negative components (the mathematical stationary
    point exists even when it is not economically admissible); ``feasible``
    then reports False.  Degenerate cases (e.g. the government-free point
    with alpha = 0) carry ``point=None``.
    """

    point: np.ndarray | None
    class_label: str
    feasible: bool
    conditions: dict = field(default_factory=dict)
    residual_norm: float | None = None
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "point": None if self.point is None else [float(v) for v in self.point],
            "class": self.class_label,
            "feasible": self.feasible,
            "conditions": {k: bool(v) for k, v in self.conditions.items()},
            "residual": self.residual_norm,
        }


@dataclass(frozen=True)
class CubicCoefficients:
    """Coefficients of fbar^3 + l1 fbar^2 + l2 fbar + l3 = 0."""

    l1: float
    l2: float
    l3: float


def residual_norm(p: Params, point) -> float:
    """Max-norm of the vector field at a candidate equilibrium."""
    return float(max(abs(v) for v in vector_field(p, point)))


def _report(p: Params, point, class_label, feasible, conditions=None, reason=None) -> EquilibriumReport:
    point = np.asarray(point, dtype=float)
    return EquilibriumReport(
        point=point,
        class_label=class_label,
        feasible=feasible,
        conditions=dict(conditions or {}),
        residual_norm=residual_norm(p, point),
        reason=reason,
    )


def closed_form_equilibria(p: Params) -> list[EquilibriumReport]:
    """The four equilibria with explicit formulas.

    Returns the trivial and boundary points (always feasible), the
    firm-free point (0, 0, (d-mu)/delta) flagged feasible only when
    d > mu, and the government-free point (sigma/alpha, r(alpha K - sigma)
    / (alpha (K alpha + r pi)), 0) flagged feasible only when
    0 < sigma < alpha K.
    """
    reports = [
        _report(p, (0.0, 0.0, 0.0), CLASS_TRIVIAL, True),
        _report(p, (p.K, 0.0, 0.0), CLASS_BOUNDARY, True),
    ]

    g0 = (p.d - p.mu) / p.delta
    reports.append(_report(
        p, (0.0, 0.0, g0), CLASS_FIRM_FREE,
        feasible=p.d > p.mu,
        conditions={"d_gt_mu": p.d > p.mu},
        reason=None if p.d > p.mu else "alternative revenue below decay; reduces to the origin"))

    if p.alpha == 0.0:
        reports.append(EquilibriumReport(
            point=None, class_label=CLASS_GOVERNMENT_FREE, feasible=False,
            conditions={"alpha_positive": False, "sigma_lt_alpha_K": False},
            residual_norm=None, reason="alpha zero"))
    else:
        fbar2 = p.sigma / p.alpha
        f2 = p.r * (p.alpha * p.K - p.sigma) / (p.alpha * (p.K * p.alpha + p.r * p.pi))
        feasible = p.sigma < p.alpha * p.K
        reports.append(_report(
            p, (fbar2, f2, 0.0), CLASS_GOVERNMENT_FREE,
            feasible=feasible,
            conditions={"alpha_positive": True, "sigma_lt_alpha_K": feasible},
            reason=None if feasible else "shutdown rate at or above alpha*K; collapses onto the boundary point"))
    return reports


def cubic_coefficients(p: Params) -> CubicCoefficients:
    """Reference coefficient set of the formal-free reduction cubic.

    Two coefficient conventions exist for this reduction; they differ only
    in the linear term, which carries a*r*delta here and a**2*r*delta in
    :func:`consistent_cubic_coefficients`.  The root solver uses the
    consistent set (whose roots are exact stationary points of the flow);
    this one stays available for cross-checks, and reports flag whenever
    the difference changes the admissible root count.
    """
    rd = p.r * p.delta
    if rd == 0.0:
        raise ValueError("cubic coefficients undefined: r*delta must be nonzero")
    l1 = (2.0 * p.a * rd - p.d * p.beta - p.K * rd) / rd
    l2 = (p.a * rd - p.a * (p.d * p.beta + 2.0 * p.K * rd)
          + p.beta * p.K * (p.d + p.l * p.beta - p.mu)) / rd
    l3 = -p.a * p.K * (p.a * rd + p.beta * p.mu - p.d * p.beta) / rd
    return CubicCoefficients(l1, l2, l3)


def consistent_cubic_coefficients(p: Params) -> CubicCoefficients:
    """Coefficient set whose roots are exact formal-free stationary points.

    Obtained by eliminating g from the two nonzero nullcline equations on
    the formal-free plane; differs from :func:`cubic_coefficients` only in
    the a**2*r*delta piece of the linear term.
    """
    rd = p.r * p.delta
    if rd == 0.0:
        raise ValueError("cubic coefficients undefined: r*delta must be nonzero")
    l1 = (2.0 * p.a * rd - p.d * p.beta - p.K * rd) / rd
    l2 = (p.a * p.a * rd - p.a * (p.d * p.beta + 2.0 * p.K * rd)
          + p.beta * p.K * (p.d + p.l * p.beta - p.mu)) / rd
    l3 = -p.a * p.K * (p.a * rd + p.beta * p.mu - p.d * p.beta) / rd
    return CubicCoefficients(l1, l2, l3)


def formal_free_revenue(p: Params, fbar: float) -> float:
    """Revenue component g = (r/beta)(1 - fbar/K)(a + fbar) paired with a root."""
    if p.beta == 0.0:
        raise ValueError("formal-free revenue undefined for beta = 0")
    return (p.r / p.beta) * (1.0 - fbar / p.K) * (p.a + fbar)


def _admissible_roots(p: Params, coeffs: CubicCoefficients) -> list[float]:
    roots = real_cubic_roots(coeffs.l1, coeffs.l2, coeffs.l3)
    out = []
    for x in roots:
        if 0.0 < x < p.K and formal_free_revenue(p, x) > 0.0:
            out.append(x)
    return out


def solve_E3(p: Params) -> list[EquilibriumReport]:
    """Formal-free equilibria (fbar1, 0, g1) from the reduction cubic.

    Solves the derivation-consistent cubic analytically (with a Newton
    polish folded into the root finder), keeps positive roots below the
    capacity K with positive paired revenue, and reports each as a
    formal-free equilibrium.  When no admissible root exists the report
    degenerates to the firm-free point (d > mu) or the origin, with
    ``feasible=False``.

    Two informative, non-gating flags ride along: the sufficiency
    inequality a > K + d*beta/(r*delta) for a positive root, and whether
    the reference coefficient set would have produced the same number of
    admissible roots as the consistent one.
    """
    if p.beta == 0.0:
        g0 = (p.d - p.mu) / p.delta
        point = (0.0, 0.0, g0) if p.d > p.mu else (0.0, 0.0, 0.0)
        return [_report(p, point, CLASS_FORMAL_FREE, False,
                        conditions={"admissible_root_found": False, "d_gt_mu": p.d > p.mu},
                        reason="beta zero: no saturating harvest channel")]

    consistent = consistent_cubic_coefficients(p)
    classic = cubic_coefficients(p)
    roots = _admissible_roots(p, consistent)
    shared_conditions = {
        "a_gt_K_plus_d_beta_over_r_delta": p.a > p.K + p.d * p.beta / (p.r * p.delta),
        "classic_cubic_same_root_count": len(roots) == len(_admissible_roots(p, classic)),
    }

    if not roots:
        g0 = (p.d - p.mu) / p.delta
        point = (0.0, 0.0, g0) if p.d > p.mu else (0.0, 0.0, 0.0)
        reason = ("no admissible cubic root; coincides with the firm-free point"
                  if p.d > p.mu else "no admissible cubic root; reduces to the origin")
        conditions = dict(shared_conditions)
        conditions.update({"admissible_root_found": False, "d_gt_mu": p.d > p.mu})
        return [_report(p, point, CLASS_FORMAL_FREE, False,
                        conditions=conditions, reason=reason)]

    reports = []
    for x in roots:
        g1 = formal_free_revenue(p, x)
        conditions = dict(shared_conditions)
        conditions["admissible_root_found"] = True
        reports.append(_report(p, (x, 0.0, g1), CLASS_FORMAL_FREE, True,
                               conditions=conditions))
    return reports


def newton_equilibrium(p: Params, x0, tol: float = 1e-12,
                       max_iter: int = 100) -> np.ndarray | None:
    """Damped Newton iteration for vector_field(x) = 0 from one start.

    Steps are halved while the max-norm residual fails to decrease; the
    start is abandoned on a singular Jacobian, divergence, or when the
    residual tolerance is not met within ``max_iter`` iterations.
    """
    x = np.asarray(x0, dtype=float)
    fx = np.asarray(vector_field(p, x, check=False), dtype=float)
    res = float(np.max(np.abs(fx)))
    if not math.isfinite(res):
        return None
    for _ in range(max_iter):
        if res <= tol:
            return x
        try:
            step = np.linalg.solve(jacobian(p, x, check=False), -fx)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam >= 1.0 / 1024.0:
            x_new = x + lam * step
            f_new = np.asarray(vector_field(p, x_new, check=False), dtype=float)
            r_new = float(np.max(np.abs(f_new))) if np.all(np.isfinite(f_new)) else math.inf
            if r_new < res:
                break
            lam *= 0.5
        else:
            return None
        x, fx, res = x_new, f_new, r_new
        if float(np.max(np.abs(x))) > 1e12:
            return None
    return x if res <= tol else None


def _start_lattice(p: Params, n_starts: int) -> list[tuple[float, float, float]]:
    n_axis = max(2, math.ceil(n_starts ** (1.0 / 3.0)))
    fbar_axis = np.geomspace(1e-3 * p.K, p.K, n_axis)
    f_axis = np.geomspace(1e-3 * p.K, p.K, n_axis)
    g_hi = p.d / p.delta if p.d > 0 else p.K
    g_axis = np.geomspace(1e-3 * g_hi, g_hi, n_axis)
    return [tuple(map(float, s)) for s in itertools.product(fbar_axis, f_axis, g_axis)]


def solve_coexistence(p: Params, n_starts: int = 64,
                      seed: int | None = None) -> list[EquilibriumReport]:
    """Strictly interior equilibria by Newton multistart.

    Starts are laid on a log-spaced lattice over (0, K] x (0, K] x
    (0, d/delta]; converged interior points (every component > 1e-8) are
    deduplicated at 1e-6 relative max-norm distance and reported sorted by
    components, so the result is independent of start ordering.  ``seed``
    only shuffles the start order.
    """
    starts = _start_lattice(p, n_starts)
    if seed is not None:
        rng = np.random.default_rng(seed)
        rng.shuffle(starts)

    found: list[np.ndarray] = []
    for x0 in starts:
        x = newton_equilibrium(p, x0)
        if x is None or np.any(x <= 1e-8):
            continue
        found.append(x)

    found.sort(key=lambda v: tuple(v))
    unique: list[np.ndarray] = []
    for x in found:
        is_dup = any(
            float(np.max(np.abs(x - y))) <= 1e-6 * max(1.0, float(np.max(np.abs(y))))
            for y in unique)
        if not is_dup:
            unique.append(x)

    return [_report(p, x, CLASS_COEXISTENCE, True) for x in unique]


def all_equilibria(p: Params, n_starts: int = 64,
                   seed: int | None = None) -> list[EquilibriumReport]:
    """Closed-form, formal-free and coexistence reports in one list."""
    reports = closed_form_equilibria(p)
    reports.extend(solve_E3(p))
    reports.extend(solve_coexistence(p, n_starts=n_starts, seed=seed))
    return reports
