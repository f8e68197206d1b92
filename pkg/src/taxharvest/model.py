"""Core types and vector fields of the tax-revenue harvesting system.

The model tracks three interacting compartments: aggregate profit of
informal firms (``fbar``), aggregate profit of formal firms (``f``) and
government tax revenue (``g``).  Both firm classes grow logistically
against a shared profit capacity ``K``; the government harvests informal
profit through a saturating (Holling type 2) response and formal profit
through a linear (Holling type 1) response, while drawing on alternative
revenue sources and decaying with density dependence.

All functions here are pure; they are safe to call from any number of
concurrent workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

import numpy as np

__all__ = [
    "Params",
    "State",
    "ControlParams",
    "vector_field",
    "controlled_vector_field",
    "jacobian",
]


def _check_finite_number(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Params:
    """Coefficients of the uncontrolled three-compartment system.

    r      intrinsic profit growth rate (> 0)
    K      maximum profit capacity shared by the firm compartments (> 0)
    pi     cross-effect of formal profit on the shared capacity term (>= 0)
    alpha  formal-firm capture rate, linear response (>= 0)
    beta   informal-firm maximum capture rate, saturating response (>= 0)
    gamma  tax-rate effect of government revenue on formal firms (>= 0)
    sigma  shutdown rate of heavily taxed formal firms (>= 0)
    l      conversion fraction of informal capture into revenue (0 < l <= 1)
    m      contribution coefficient of formal-firm capture (>= 0)
    n      negative-impact coefficient from firm shutdown (>= 0)
    d      growth rate of alternative government revenue (>= 0)
    mu     decay rate of government revenue capacity (>= 0)
    delta  density-dependent decay of government revenue (> 0)
    a      half-saturation constant of the saturating response (> 0);
           defaults to K/2 when omitted
    """

    r: float
    K: float
    pi: float
    alpha: float
    beta: float
    gamma: float
    sigma: float
    l: float
    m: float
    n: float
    d: float
    mu: float
    delta: float
    a: float | None = None

    # exact field names of the JSON document, in canonical order
    _JSON_FIELDS = ("r", "K", "pi", "alpha", "beta", "a", "gamma", "sigma",
                    "l", "m", "n", "d", "mu", "delta")

    def __post_init__(self):
        if self.a is None:
            object.__setattr__(self, "a", _check_finite_number("K", self.K) / 2.0)
        for fld in fields(self):
            object.__setattr__(self, fld.name,
                               _check_finite_number(fld.name, getattr(self, fld.name)))
        for name in ("r", "K", "a", "delta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("pi", "alpha", "beta", "gamma", "sigma", "m", "n", "d", "mu"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0 < self.l <= 1:
            raise ValueError(f"l must satisfy 0 < l <= 1, got {self.l}")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self._JSON_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "Params":
        if not isinstance(doc, dict):
            raise ValueError(f"expected a JSON object for Params, got {type(doc).__name__}")
        unknown = sorted(set(doc) - set(cls._JSON_FIELDS))
        if unknown:
            raise ValueError(f"unknown Params keys: {', '.join(unknown)}")
        missing = sorted(set(cls._JSON_FIELDS) - {"a"} - set(doc))
        if missing:
            raise ValueError(f"missing Params keys: {', '.join(missing)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "Params":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class State:
    """Nonnegative system state: informal profit, formal profit, revenue."""

    fbar: float
    f: float
    g: float

    def __post_init__(self):
        for fld in fields(self):
            value = _check_finite_number(fld.name, getattr(self, fld.name))
            if value < 0:
                raise ValueError(f"state component {fld.name} must be >= 0, got {value}")
            object.__setattr__(self, fld.name, value)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.fbar, self.f, self.g)

    def as_array(self) -> np.ndarray:
        return np.array([self.fbar, self.f, self.g], dtype=float)


@dataclass(frozen=True)
class ControlParams:
    """Penalty-control extension: effect rates, objective weights, bounds.

    eps1/eps2/eps3 scale how strongly the penalty u drains the informal,
    formal and revenue compartments.  The running cost is
    v1*fbar + v2*f + v3*u**2, minimised over controls 0 <= u <= u_max on
    the horizon [0, t1].
    """

    eps1: float
    eps2: float
    eps3: float
    v1: float
    v2: float
    v3: float
    u_max: float
    t1: float

    _JSON_FIELDS = ("eps1", "eps2", "eps3", "v1", "v2", "v3", "u_max", "t1")

    def __post_init__(self):
        for fld in fields(self):
            object.__setattr__(self, fld.name,
                               _check_finite_number(fld.name, getattr(self, fld.name)))
        if self.v3 <= 0:
            raise ValueError(f"v3 must be > 0, got {self.v3}")
        if self.u_max <= 0:
            raise ValueError(f"u_max must be > 0, got {self.u_max}")
        if self.t1 <= 0:
            raise ValueError(f"t1 must be > 0, got {self.t1}")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self._JSON_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ControlParams":
        if not isinstance(doc, dict):
            raise ValueError(f"expected a JSON object for ControlParams, got {type(doc).__name__}")
        unknown = sorted(set(doc) - set(cls._JSON_FIELDS))
        if unknown:
            raise ValueError(f"unknown ControlParams keys: {', '.join(unknown)}")
        missing = sorted(set(cls._JSON_FIELDS) - set(doc))
        if missing:
            raise ValueError(f"missing ControlParams keys: {', '.join(missing)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "ControlParams":
        return cls.from_dict(json.loads(text))


def split_state(state):
    """Unpack a State, triple, or length-3 array into its three components.

    Components may be scalars or equally shaped numpy arrays, so every
    field function below evaluates vectorised on state grids.
    """
    if isinstance(state, State):
        return state.fbar, state.f, state.g
    fbar, f, g = state
    return fbar, f, g


def _check_finite_components(fbar, f, g) -> None:
    for value in (fbar, f, g):
        if not np.all(np.isfinite(value)):
            raise ValueError("state components must be finite")


def vector_field(p: Params, state, check: bool = True):
    """Time derivative (dfbar/dt, df/dt, dg/dt) of the uncontrolled system.

    Informal profit grows logistically and is drained by formal capture
    and the saturating government harvest; formal profit is fed by the
    informal capture and drained by taxation and shutdown; revenue
    collects both harvests plus alternative income, less decay.

    Pass ``check=False`` to skip finiteness validation in integrator hot
    loops (inputs must then already be finite).
    """
    fbar, f, g = split_state(state)
    if check:
        _check_finite_components(fbar, f, g)
    crowding = 1.0 - (fbar + p.pi * f) / p.K
    saturating = p.beta * fbar / (p.a + fbar)
    dfbar = p.r * fbar * crowding - p.alpha * fbar * f - saturating * g
    df = p.alpha * fbar * f - p.gamma * f * g - p.sigma * f
    dg = (p.l * saturating * g + (p.m - p.n) * p.gamma * f * g
          + p.d * crowding * g - p.mu * g - p.delta * g * g)
    return (dfbar, df, dg)


def controlled_vector_field(p: Params, cp: ControlParams, state, u, check: bool = True):
    """Uncontrolled field minus the penalty drain (eps1*u*fbar, eps2*u*f, eps3*u*g)."""
    if check:
        if not np.all(np.isfinite(u)):
            raise ValueError("control value must be finite")
        if np.any(np.asarray(u) < 0) or np.any(np.asarray(u) > cp.u_max):
            raise ValueError(f"control value {u!r} outside [0, {cp.u_max}]")
    fbar, f, g = split_state(state)
    dfbar, df, dg = vector_field(p, (fbar, f, g), check=check)
    return (dfbar - cp.eps1 * u * fbar,
            df - cp.eps2 * u * f,
            dg - cp.eps3 * u * g)


def jacobian(p: Params, state, check: bool = True) -> np.ndarray:
    """Closed-form 3x3 Jacobian of :func:`vector_field` at a scalar state.

    The saturating harvest term beta*fbar/(a+fbar) differentiates to
    a*beta/(a+fbar)**2 in the fbar direction.
    """
    fbar, f, g = split_state(state)
    if check:
        _check_finite_components(fbar, f, g)
    crowding = 1.0 - (fbar + p.pi * f) / p.K
    denom = p.a + fbar
    sat = p.beta * fbar / denom
    sat_dfbar = p.a * p.beta / (denom * denom)

    j11 = p.r * (1.0 - (2.0 * fbar + p.pi * f) / p.K) - p.alpha * f - sat_dfbar * g
    j12 = -p.r * p.pi * fbar / p.K - p.alpha * fbar
    j13 = -sat
    j21 = p.alpha * f
    j22 = p.alpha * fbar - p.gamma * g - p.sigma
    j23 = -p.gamma * f
    j31 = p.l * sat_dfbar * g - p.d * g / p.K
    j32 = (p.m - p.n) * p.gamma * g - p.d * p.pi * g / p.K
    j33 = (p.l * sat + (p.m - p.n) * p.gamma * f + p.d * crowding
           - p.mu - 2.0 * p.delta * g)
    return np.array([[j11, j12, j13],
                     [j21, j22, j23],
                     [j31, j32, j33]], dtype=float)
