"""Closed-form roots of real monic cubics.

Shared by the equilibrium locator (positive real roots of the reduced
formal-free cubic) and the stability module (all three eigenvalues of a
3x3 Jacobian via its characteristic polynomial).  Roots are recovered by
the trigonometric method when all three are real and by Cardano's formula
otherwise; real roots get a Newton polish to absorb cancellation.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

__all__ = ["cubic_roots", "real_cubic_roots"]


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _polish(root: float, b: float, c: float, d: float, steps: int = 2) -> float:
    # Newton steps on x^3 + b x^2 + c x + d; cheap insurance against the
    # cancellation the closed forms are prone to.
    x = root
    for _ in range(steps):
        fx = ((x + b) * x + c) * x + d
        dfx = (3.0 * x + 2.0 * b) * x + c
        if dfx == 0.0 or not math.isfinite(fx):
            break
        step = fx / dfx
        if not math.isfinite(step):
            break
        x -= step
    return x


def _depressed_real_roots(p: float, q: float) -> list[float]:
    """Real solutions of t^3 + p t + q = 0."""
    if p == 0.0 and q == 0.0:
        return [0.0, 0.0, 0.0]
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        s = math.sqrt(disc)
        u = _cbrt(-q / 2.0 + s)
        v = _cbrt(-q / 2.0 - s)
        return [u + v]
    if disc == 0.0:
        # double root; q/p is finite because p != 0 here
        r = 3.0 * q / p
        return [r, -r / 2.0, -r / 2.0]
    # three distinct real roots
    rho = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * rho)
    arg = min(1.0, max(-1.0, arg))
    theta = math.acos(arg) / 3.0
    third = 2.0 * math.pi / 3.0
    return [rho * math.cos(theta - third * k) for k in range(3)]


def real_cubic_roots(b: float, c: float, d: float, polish: bool = True) -> list[float]:
    """Real roots of x^3 + b x^2 + c x + d = 0, ascending, with multiplicity."""
    p = c - b * b / 3.0
    q = d - b * c / 3.0 + 2.0 * b ** 3 / 27.0
    roots = [t - b / 3.0 for t in _depressed_real_roots(p, q)]
    if polish:
        roots = [_polish(x, b, c, d) for x in roots]
    return sorted(roots)


def cubic_roots(b: float, c: float, d: float) -> np.ndarray:
    """All three roots of x^3 + b x^2 + c x + d = 0 as complex numbers.

    Real parts come from :func:`real_cubic_roots`; a conjugate pair, when
    present, is recovered from the quadratic left after deflating the
    single real root.  Roots are sorted by (real, imag).
    """
    reals = real_cubic_roots(b, c, d)
    if len(reals) == 3:
        roots = [complex(x) for x in reals]
    else:
        x0 = reals[0]
        # synthetic division: x^3+bx^2+cx+d = (x - x0)(x^2 + (b+x0) x + (c + x0(b+x0)))
        qb = b + x0
        qc = c + x0 * qb
        sq = cmath.sqrt(complex(qb * qb - 4.0 * qc))
        roots = [complex(x0), (-qb + sq) / 2.0, (-qb - sq) / 2.0]
    roots.sort(key=lambda z: (z.real, z.imag))
    return np.array(roots, dtype=complex)
