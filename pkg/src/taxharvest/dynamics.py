"""Time integration and the uniform-boundedness certificate.

The workhorse is an adaptive Runge-Kutta-Fehlberg 4(5) integrator with a
PI step-size controller.  The coordinate planes of the model are forward
invariant, so tiny negative excursions caused by roundoff are clamped to
zero; a step that overshoots past the clamp band is rejected and retried
at half the step size.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .model import ControlParams, Params, controlled_vector_field, split_state, vector_field

__all__ = [
    "IntegratorOptions",
    "StiffnessError",
    "Trajectory",
    "BoundednessCertificate",
    "integrate",
    "integrate_controlled",
    "integrate_rk4",
    "boundedness_certificate",
]


class StiffnessError(RuntimeError):
    """Step size underflowed; the problem is too stiff for this solver."""

    def __init__(self, message: str, t: float | None = None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    first_step: float | None = None
    max_step: float | None = None
    max_steps: int = 2_000_000


@dataclass
class Trajectory:
    """Accepted integration steps: strictly increasing times, one state per time."""

    times: np.ndarray
    states: np.ndarray
    steps_accepted: int
    steps_rejected: int

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        """Write `t,fbar,f,g` rows at 17 significant digits."""
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("t,fbar,f,g\n")
            for t, (fbar, f, g) in zip(self.times, self.states):
                handle.write(f"{t:.17g},{fbar:.17g},{f:.17g},{g:.17g}\n")


@dataclass
class BoundednessCertificate:
    """Analytic trapping bound for X = fbar + f + g/l, checked on a trajectory.

    g_rate is min(sigma, mu/l); Z collects the worst-case growth of the
    weighted total, so trajectories are eventually confined below
    bound = Z/g_rate.  ``satisfied`` reports whether the observed maximum
    of X over the post-transient window stays below the bound (plus a
    1e-6 relative margin for integrator noise).
    """

    g_rate: float
    Z: float
    bound: float
    X_max_observed: float
    satisfied: bool
    transient_fraction: float

    def to_dict(self) -> dict:
        return {
            "g_rate": self.g_rate,
            "Z": self.Z,
            "bound": self.bound,
            "X_max_observed": self.X_max_observed,
            "satisfied": self.satisfied,
            "transient_fraction": self.transient_fraction,
        }


# Fehlberg 4(5) tableau
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3554 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)


def _validate_initial_state(s0) -> tuple[float, float, float]:
    fbar, f, g = split_state(s0)
    for name, value in (("fbar", fbar), ("f", f), ("g", g)):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"initial state component {name} must be finite")
        if value < 0:
            raise ValueError(f"initial state component {name} must be >= 0, got {value}")
    return float(fbar), float(f), float(g)


def _rkf45(rhs, y0, t_end: float, opts: IntegratorOptions) -> Trajectory:
    """Adaptive RKF45 with nonnegativity clamping on [0, t_end].

    ``rhs(t, y)`` takes a float time and a 3-tuple of floats and returns a
    3-tuple of derivatives.  The fourth-order solution is propagated; the
    embedded fifth-order solution supplies the error estimate.
    """
    rtol, atol = opts.rtol, opts.atol
    t = 0.0
    y = y0
    times = [0.0]
    states = [y]
    accepted = 0
    rejected = 0
    h_min = 1e-12 * t_end
    h = opts.first_step if opts.first_step is not None else 1e-3 * t_end
    if opts.max_step is not None:
        h = min(h, opts.max_step)
    h = max(h, h_min)
    err_prev = 1.0

    while t < t_end:
        final_step = h >= t_end - t
        if final_step:
            h = t_end - t
        elif h < h_min:
            raise StiffnessError(
                f"step size underflow at t={t!r} (h={h!r}); state={states[-1]!r}",
                t=t, state=np.array(states[-1]))
        if accepted + rejected >= opts.max_steps:
            raise StiffnessError(
                f"step budget {opts.max_steps} exhausted at t={t!r}",
                t=t, state=np.array(states[-1]))

        k = [rhs(t, y)]
        for stage in range(1, 6):
            coeffs = _A[stage]
            y_stage = tuple(
                y[i] + h * sum(coeffs[j] * k[j][i] for j in range(stage))
                for i in range(3))
            k.append(rhs(t + _C[stage] * h, y_stage))

        y4 = tuple(y[i] + h * sum(_B4[j] * k[j][i] for j in range(6)) for i in range(3))
        y5 = tuple(y[i] + h * sum(_B5[j] * k[j][i] for j in range(6)) for i in range(3))

        if not all(math.isfinite(v) for v in y4 + y5):
            rejected += 1
            h *= 0.5
            continue

        err_norm = 0.0
        for i in range(3):
            scale = atol + rtol * max(abs(y[i]), abs(y4[i]))
            err_norm = max(err_norm, abs(y5[i] - y4[i]) / scale)

        if err_norm > 1.0:
            rejected += 1
            h *= max(0.1, 0.9 * err_norm ** -0.2)
            continue

        if any(v <= -atol for v in y4):
            rejected += 1
            h *= 0.5
            continue
        y_new = tuple(0.0 if v < 0.0 else v for v in y4)

        t = t_end if final_step else t + h
        y = y_new
        times.append(t)
        states.append(y)
        accepted += 1

        # PI controller: damp growth using the previous error as memory
        if err_norm == 0.0:
            factor = 5.0
        else:
            factor = 0.9 * err_norm ** -0.14 * err_prev ** 0.08
        h *= min(5.0, max(0.2, factor))
        if opts.max_step is not None:
            h = min(h, opts.max_step)
        err_prev = max(err_norm, 1e-4)

    return Trajectory(np.array(times), np.array(states), accepted, rejected)


def integrate(p: Params, s0, t_end: float, opts: IntegratorOptions | None = None) -> Trajectory:
    """Solve the uncontrolled system from a nonnegative state over [0, t_end]."""
    if not (isinstance(t_end, (int, float)) and math.isfinite(t_end) and t_end > 0):
        raise ValueError(f"t_end must be a positive finite number, got {t_end!r}")
    y0 = _validate_initial_state(s0)
    opts = opts or IntegratorOptions()

    def rhs(t, y):
        return vector_field(p, y, check=False)

    return _rkf45(rhs, y0, float(t_end), opts)


def _linear_interp(knots: np.ndarray, values: np.ndarray):
    """Piecewise-linear interpolant with edge clamping, as a float closure."""
    kn = [float(v) for v in knots]
    va = [float(v) for v in values]

    def u_of_t(t: float) -> float:
        if t <= kn[0]:
            return va[0]
        if t >= kn[-1]:
            return va[-1]
        j = bisect_right(kn, t)
        w = (t - kn[j - 1]) / (kn[j] - kn[j - 1])
        return va[j - 1] + w * (va[j] - va[j - 1])

    return u_of_t


def integrate_controlled(p: Params, cp: ControlParams, s0, u_times, u_values,
                         t_end: float | None = None,
                         opts: IntegratorOptions | None = None) -> Trajectory:
    """Solve the penalty-controlled system with a piecewise-linear schedule.

    ``u_values`` may be a scalar (constant control) or one value per knot
    in ``u_times``; values must lie in [0, cp.u_max].  The control is
    interpolated linearly between knots and held constant beyond them.
    """
    y0 = _validate_initial_state(s0)
    u_times = np.atleast_1d(np.asarray(u_times, dtype=float))
    u_values = np.asarray(u_values, dtype=float)
    if u_values.ndim == 0:
        u_values = np.full(u_times.shape, float(u_values))
    if u_times.shape != u_values.shape:
        raise ValueError("u_times and u_values must have the same length")
    if u_times.size == 0:
        raise ValueError("control schedule must have at least one knot")
    if np.any(np.diff(u_times) <= 0):
        raise ValueError("schedule knots must be strictly increasing")
    if not np.all(np.isfinite(u_values)):
        raise ValueError("schedule values must be finite")
    if np.any(u_values < 0) or np.any(u_values > cp.u_max):
        raise ValueError(f"schedule values outside [0, {cp.u_max}]")
    if t_end is None:
        t_end = cp.t1
    if not (math.isfinite(t_end) and t_end > 0):
        raise ValueError(f"t_end must be a positive finite number, got {t_end!r}")
    opts = opts or IntegratorOptions()
    u_of_t = _linear_interp(u_times, u_values)

    def rhs(t, y):
        return controlled_vector_field(p, cp, y, u_of_t(t), check=False)

    return _rkf45(rhs, y0, float(t_end), opts)


def integrate_rk4(p: Params, s0, t_end: float, n_steps: int) -> Trajectory:
    """Fixed-step classic RK4 reference solution with n_steps uniform steps."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not (math.isfinite(t_end) and t_end > 0):
        raise ValueError(f"t_end must be a positive finite number, got {t_end!r}")
    y = _validate_initial_state(s0)
    h = float(t_end) / n_steps
    times = [0.0]
    states = [y]
    for step in range(n_steps):
        k1 = vector_field(p, y, check=False)
        y2 = tuple(y[i] + 0.5 * h * k1[i] for i in range(3))
        k2 = vector_field(p, y2, check=False)
        y3 = tuple(y[i] + 0.5 * h * k2[i] for i in range(3))
        k3 = vector_field(p, y3, check=False)
        y4 = tuple(y[i] + h * k3[i] for i in range(3))
        k4 = vector_field(p, y4, check=False)
        y = tuple(y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                  for i in range(3))
        times.append((step + 1) * h)
        states.append(y)
    return Trajectory(np.array(times), np.array(states), n_steps, 0)


def boundedness_certificate(p: Params, traj: Trajectory,
                            transient_fraction: float = 0.5) -> BoundednessCertificate:
    """Evaluate the analytic trapping bound against an integrated trajectory.

    The bound is asymptotic, so the first ``transient_fraction`` of the
    time span is discarded before the observed maximum of
    X = fbar + f + g/l is compared against Z/g_rate.
    """
    if not 0 <= transient_fraction < 1:
        raise ValueError("transient_fraction must lie in [0, 1)")
    g_rate = min(p.sigma, p.mu / p.l)
    if g_rate <= 0:
        raise ValueError("boundedness certificate unavailable: min(sigma, mu/l) must be > 0")
    Z = p.K * (p.r + g_rate) ** 2 / (4.0 * p.r) + p.d ** 2 / (4.0 * p.l * p.delta)
    bound = Z / g_rate
    times = traj.times
    cutoff = times[0] + transient_fraction * (times[-1] - times[0])
    window = times >= cutoff
    X = traj.states[:, 0] + traj.states[:, 1] + traj.states[:, 2] / p.l
    x_max = float(X[window].max())
    margin = 1e-6 * bound
    return BoundednessCertificate(
        g_rate=g_rate, Z=Z, bound=bound, X_max_observed=x_max,
        satisfied=bool(x_max <= bound + margin), transient_fraction=transient_fraction)
