"""Local and global stability analysis.

Local verdicts come from the eigenvalues of the 3x3 Jacobian, computed by
solving the characteristic cubic in closed form, cross-checked against the
Routh-Hurwitz inequalities on the same cubic and against the analytic
sufficiency conditions known for each equilibrium class.  The two sides
are reported together with an agreement flag rather than silently
reconciled: the analytic conditions are sufficiency claims and any
mismatch is surfaced.

Global stability of the firm-free point is probed numerically: a
Lyapunov-style weighted distance is scanned on a grid around the point,
counting violations of the decrease condition and checking the closed-form
upper bound for the derivative dominates the exact chain-rule value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cubic import cubic_roots
from .dynamics import IntegratorOptions, integrate
from .equilibria import (
    CLASS_BOUNDARY,
    CLASS_FIRM_FREE,
    CLASS_FORMAL_FREE,
    CLASS_GOVERNMENT_FREE,
    CLASS_TRIVIAL,
    EquilibriumReport,
    residual_norm,
)
from .model import Params, jacobian, split_state, vector_field

__all__ = [
    "StabilityVerdict",
    "PerturbationResult",
    "LyapunovScanReport",
    "characteristic_coefficients",
    "eigenvalues_3x3",
    "local_stability",
    "perturbation_probe",
    "lyapunov_value",
    "lyapunov_derivative",
    "lyapunov_decay_bound",
    "lyapunov_scan",
    "global_stability_predicates",
]

MARGINAL_TOL = 1e-9


@dataclass
class StabilityVerdict:
    """Spectral verdict, Routh-Hurwitz triple and analytic-condition results."""

    equilibrium: np.ndarray
    eigenvalues: np.ndarray
    spectral_verdict: str
    routh_hurwitz: tuple[bool, bool, bool]
    analytic_conditions: dict
    analytic_prediction: str | None
    agreement: bool

    def to_dict(self) -> dict:
        return {
            "equilibrium": [float(v) for v in self.equilibrium],
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "spectral": self.spectral_verdict,
            "routh_hurwitz": {
                "a1_pos": self.routh_hurwitz[0],
                "a3_pos": self.routh_hurwitz[1],
                "a1a2_gt_a3": self.routh_hurwitz[2],
            },
            "analytic_conditions": {k: bool(v) for k, v in self.analytic_conditions.items()},
            "analytic_prediction": self.analytic_prediction,
            "agreement": self.agreement,
        }


@dataclass
class PerturbationResult:
    """Outcome of kicking an equilibrium in several random directions."""

    returns: bool
    final_distance: float
    distances: np.ndarray


@dataclass
class LyapunovScanReport:
    """Grid scan of the Lyapunov derivative around the firm-free point."""

    grid_spec: dict
    n_points: int
    violations: int
    max_violation: float
    decrease_condition_holds: bool
    bound_dominates: bool
    max_bound_gap: float
    points: np.ndarray
    derivative: np.ndarray

    def to_csv(self, path) -> None:
        """Write `fbar,f,g,dV2dt` rows for plotting."""
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("fbar,f,g,dV2dt\n")
            for (fbar, f, g), dv in zip(self.points, self.derivative):
                handle.write(f"{fbar:.17g},{f:.17g},{g:.17g},{dv:.17g}\n")


def characteristic_coefficients(J: np.ndarray) -> tuple[float, float, float]:
    """(a1, a2, a3) of det(lambda I - J) = lambda^3 + a1 lambda^2 + a2 lambda + a3."""
    J = np.asarray(J, dtype=float)
    a1 = -(J[0, 0] + J[1, 1] + J[2, 2])
    a2 = (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1]
          + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
          + J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    a3 = -(J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
           - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
           + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0]))
    return float(a1), float(a2), float(a3)


def eigenvalues_3x3(J: np.ndarray) -> np.ndarray:
    """All three eigenvalues via the closed-form characteristic cubic."""
    a1, a2, a3 = characteristic_coefficients(J)
    return cubic_roots(a1, a2, a3)


def _spectral_verdict(eigenvalues: np.ndarray, tol: float = MARGINAL_TOL) -> str:
    max_re = max(z.real for z in eigenvalues)
    if max_re < -tol:
        return "stable"
    if max_re > tol:
        return "unstable"
    return "marginal"


def _analytic_conditions(p: Params, class_label: str, point) -> tuple[dict, str | None]:
    """Sufficiency predicates per equilibrium class and the verdict they imply."""
    if class_label == CLASS_TRIVIAL:
        return {"always_unstable": True}, "unstable"

    if class_label == CLASS_BOUNDARY:
        conds = {
            "sigma_gt_K_alpha": p.sigma > p.K * p.alpha,
            "mu_gt_K_beta_over_a_plus_K": p.mu > p.K * p.beta / (p.a + p.K),
        }
    elif class_label == CLASS_FIRM_FREE:
        conds = {"d_gt_mu_plus_a_r_delta_over_beta":
                 p.beta > 0 and p.d > p.mu + p.a * p.r * p.delta / p.beta}
    elif class_label == CLASS_FORMAL_FREE:
        fbar1, _, g1 = split_state(point)
        lhs = ((p.a + fbar1) ** 2 * (p.mu * p.K + (2.0 * p.r + p.d) * fbar1)
               + g1 * p.K * (p.a * (p.beta + 2.0 * p.a * p.delta)
                             + 2.0 * p.delta * fbar1 * (2.0 * p.a + fbar1)))
        rhs = (p.a + fbar1) * p.K * ((p.d + p.r) * (p.a + fbar1) + p.l * p.beta * fbar1)
        conds = {
            "sigma_plus_gamma_g1_gt_alpha_fbar1": p.sigma + p.gamma * g1 > p.alpha * fbar1,
            "curvature_inequality": lhs > rhs,
        }
    elif class_label == CLASS_GOVERNMENT_FREE:
        _, f2, _ = split_state(point)
        lower = p.alpha * p.r * p.pi * p.K / (2.0 * p.r * p.pi + p.alpha * p.K)
        f2a = (p.a * p.alpha * (p.d * p.sigma + (p.mu - p.d) * p.alpha * p.K)
               + p.sigma * (p.alpha * p.K * p.mu + p.d * p.sigma
                            - p.alpha * p.K * (p.d + p.l * p.beta)))
        f2b = p.alpha * (p.a * p.alpha + p.sigma) * ((p.m - p.n) * p.gamma * p.K - p.d * p.pi)
        conds = {
            "sigma_in_window": lower < p.sigma < p.alpha * p.K,
            "f2b_nonzero": f2b != 0.0,
            "f2_lt_f2a_over_f2b": f2b != 0.0 and f2 < f2a / f2b,
        }
    else:  # coexistence: no analytic condition available, spectral only
        return {}, None

    return conds, ("stable" if all(conds.values()) else None)


def local_stability(p: Params, report: EquilibriumReport) -> StabilityVerdict:
    """Spectral + Routh-Hurwitz verdict for a located equilibrium.

    Requires a genuinely converged point (residual <= 1e-6).  The
    class-specific analytic sufficiency conditions are evaluated alongside;
    ``agreement`` is False whenever they predict a verdict the spectrum
    does not deliver.
    """
    if report.point is None:
        raise ValueError("cannot analyse stability of a report without a point")
    if report.residual_norm is None or report.residual_norm > 1e-6:
        raise ValueError(
            f"equilibrium residual {report.residual_norm!r} too large for stability analysis")

    J = jacobian(p, report.point)
    a1, a2, a3 = characteristic_coefficients(J)
    eigenvalues = cubic_roots(a1, a2, a3)
    spectral = _spectral_verdict(eigenvalues)
    rh = (a1 > 0.0, a3 > 0.0, a1 * a2 > a3)
    conds, prediction = _analytic_conditions(p, report.class_label, report.point)
    agreement = prediction is None or prediction == spectral
    return StabilityVerdict(
        equilibrium=np.asarray(report.point, dtype=float),
        eigenvalues=eigenvalues,
        spectral_verdict=spectral,
        routh_hurwitz=rh,
        analytic_conditions=conds,
        analytic_prediction=prediction,
        agreement=agreement,
    )


def perturbation_probe(p: Params, point, magnitude: float, t_end: float = 50.0,
                       n_directions: int = 8, seed: int = 0,
                       opts: IntegratorOptions | None = None) -> PerturbationResult:
    """Empirical recovery check: kick the equilibrium, integrate, measure.

    The equilibrium is displaced by ``magnitude`` along random unit
    directions (clamped to the nonnegative octant) and integrated for
    ``t_end``; it "returns" when every final distance is below
    magnitude/10.
    """
    e = np.asarray(split_state(point), dtype=float)
    res = residual_norm(p, e)
    if res > 1e-9:
        raise ValueError(f"probe requires an equilibrium (residual {res:.3e} > 1e-9)")
    rng = np.random.default_rng(seed)
    distances = np.empty(n_directions)
    for i in range(n_directions):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        start = np.clip(e + magnitude * direction, 0.0, None)
        traj = integrate(p, start, t_end, opts)
        distances[i] = float(np.linalg.norm(traj.final_state - e))
    final = float(distances.max())
    return PerturbationResult(returns=bool(final < magnitude / 10.0),
                              final_distance=final, distances=distances)


def _firm_free_setup(p: Params) -> tuple[float, float]:
    if p.d <= p.mu:
        raise ValueError("firm-free point infeasible: requires d > mu")
    if p.m <= p.n:
        raise ValueError("Lyapunov construction requires m > n")
    g0 = (p.d - p.mu) / p.delta
    c11 = max(p.m - p.n, p.l)
    return g0, c11


def lyapunov_value(p: Params, state):
    """Weighted Lyapunov distance from the firm-free point.

    V(fbar, f, g) = fbar + f + C1 ((g - g0) - g0 ln(g/g0)) with
    C1 = 1/max(m - n, l); finite only for g > 0.
    """
    g0, c11 = _firm_free_setup(p)
    fbar, f, g = split_state(state)
    if np.any(np.asarray(g) <= 0):
        raise ValueError("Lyapunov value defined for g > 0 only")
    return fbar + f + ((g - g0) - g0 * np.log(g / g0)) / c11


def lyapunov_derivative(p: Params, state):
    """Chain-rule time derivative of :func:`lyapunov_value` along the flow.

    The g-gradient term C1 (g - g0)/g * dg/dt is evaluated with the factor
    g cancelled analytically (every revenue term carries one), so the
    expression extends continuously to g = 0.  Vectorised over grids.
    """
    g0, c11 = _firm_free_setup(p)
    fbar, f, g = split_state(state)
    dfbar, df, _ = vector_field(p, (fbar, f, g), check=False)
    crowding = 1.0 - (fbar + p.pi * f) / p.K
    g_rate = (p.l * p.beta * fbar / (p.a + fbar) + (p.m - p.n) * p.gamma * f
              + p.d * crowding - p.mu - p.delta * g)
    return dfbar + df + (g - g0) * g_rate / c11


def lyapunov_decay_bound(p: Params, state):
    """Closed-form upper bound for :func:`lyapunov_derivative`.

    ((fbar + pi f)/K)(d (g0 - g)/C11 - r fbar) + (r fbar - sigma f)
    - (delta/C11)(g - g0)^2; dominates the exact derivative on the
    nonnegative octant whenever m > n.
    """
    g0, c11 = _firm_free_setup(p)
    fbar, f, g = split_state(state)
    weighted = (fbar + p.pi * f) / p.K
    return (weighted * (p.d * (g0 - g) / c11 - p.r * fbar)
            + (p.r * fbar - p.sigma * f)
            - (p.delta / c11) * (g - g0) ** 2)


def lyapunov_scan(p: Params, box_radius: float, resolution: int = 50,
                  tolerance: float = 1e-10) -> LyapunovScanReport:
    """Scan the Lyapunov derivative on a grid around the firm-free point.

    The grid covers [0, box_radius]^2 in the firm coordinates and
    [g0 - box_radius, g0 + box_radius] in revenue, intersected with the
    nonnegative octant.  Reports how many grid points violate
    dV/dt <= tolerance and whether the closed-form bound dominates the
    exact derivative everywhere.
    """
    if box_radius <= 0:
        raise ValueError("box_radius must be > 0")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    g0, _ = _firm_free_setup(p)

    fbar_axis = np.linspace(0.0, box_radius, resolution)
    f_axis = np.linspace(0.0, box_radius, resolution)
    g_axis = np.linspace(g0 - box_radius, g0 + box_radius, resolution)
    FB, F, G = np.meshgrid(fbar_axis, f_axis, g_axis, indexing="ij")
    mask = G >= 0.0
    fb, f, g = FB[mask], F[mask], G[mask]

    dv = np.asarray(lyapunov_derivative(p, (fb, f, g)))
    bound = np.asarray(lyapunov_decay_bound(p, (fb, f, g)))
    gap = dv - bound

    violations = int(np.count_nonzero(dv > tolerance))
    return LyapunovScanReport(
        grid_spec={
            "fbar": [0.0, float(box_radius)],
            "f": [0.0, float(box_radius)],
            "g": [float(g_axis[0]), float(g_axis[-1])],
            "resolution": int(resolution),
        },
        n_points=int(fb.size),
        violations=violations,
        max_violation=float(dv.max()),
        decrease_condition_holds=violations == 0,
        bound_dominates=bool(np.all(gap <= 1e-10)),
        max_bound_gap=float(gap.max()),
        points=np.column_stack([fb, f, g]),
        derivative=dv,
    )


def global_stability_predicates(p: Params, e_star) -> dict:
    """Sufficiency predicates for global stability at a coexistence point.

    Evaluates C* = K gamma / (alpha (K gamma (m - n) - d pi)) and the two
    boundary values H1(0), H2(0), with the coexistence revenue component
    entering the H1 numerator.  The second condition reduces to 0 > d*pi,
    which no valid parameter set satisfies; it is evaluated as stated and
    surfaced rather than repaired, so callers can see the inconsistency.
    """
    fbar_star, _, g_star = split_state(e_star)
    if p.alpha == 0.0:
        raise ValueError("predicates unavailable: alpha is zero")
    den = p.K * p.gamma * (p.m - p.n) - p.d * p.pi
    if den == 0.0:
        raise ValueError("predicates unavailable: K*gamma*(m-n) - d*pi is zero")
    c_star = p.K * p.gamma / (p.alpha * den)
    h1 = (p.r / p.K + c_star * p.d / (2.0 * p.K)
          - p.beta * (2.0 * g_star + p.a * c_star) / (2.0 * p.a * (p.a + fbar_star)))
    h2 = (p.delta + c_star * p.d / (2.0 * p.K)
          - p.a * p.beta * p.l * c_star / (2.0 * p.a * (p.a + fbar_star)))
    return {
        "C_star": c_star,
        "H1_at_zero": h1,
        "H2_at_zero": h2,
        "H1_nonneg": h1 >= 0.0,
        "H2_nonneg": h2 >= 0.0,
        "second_condition_as_stated": p.K * p.gamma * p.n > p.d * p.pi + p.K * p.gamma * p.n,
    }
