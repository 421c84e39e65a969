"""Normalized Hermite functions and the bell-shaped network activation.

The family evaluated here is the Gaussian-weighted one,

    F_0(x) = exp(-x^2/2),   F_1(x) = sqrt(2) x exp(-x^2/2),
    F_{n+1}(x) = x sqrt(2/(n+1)) F_n(x) - sqrt(n/(n+1)) F_{n-1}(x),

orthogonal over the real line with norm sqrt(pi). Everything goes through
the normalized recurrence so intermediates stay bounded; the unnormalized
polynomials are never formed.

The scalar activation used by the network layers is the Gaussian-windowed
quadratic ``exp(-x^2/2) * (1 - x^2)``: a bell curve with value 1 at the
origin, zeros at +-1 and minimum -2*exp(-3/2) at +-sqrt(3).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InsufficientQuadrature

SQRT_PI = math.sqrt(math.pi)

# Activation range: max 1 at x=0, min at x = +-sqrt(3).
ACTIVATION_MIN = -2.0 * math.exp(-1.5)
ACTIVATION_MAX = 1.0

# Integration window for the orthogonality checks; the integrands decay
# like exp(-x^2), so mass outside +-12 is below 1e-60.
QUAD_HALF_WIDTH = 12.0


class HermiteEvaluator:
    """Evaluates all members of the family up to ``max_degree`` at once.

    Holds nothing but the degree bound; the recurrence workspace is the
    stacked result array itself.
    """

    def __init__(self, max_degree: int):
        if max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        self.max_degree = max_degree

    def values(self, x) -> np.ndarray:
        """Return array of shape ``(max_degree + 1,) + shape(x)``."""
        x = np.asarray(x, dtype=float)
        out = np.empty((self.max_degree + 1,) + x.shape)
        base = np.exp(-0.5 * x * x)
        out[0] = base
        if self.max_degree >= 1:
            out[1] = math.sqrt(2.0) * x * base
        for n in range(1, self.max_degree):
            out[n + 1] = (
                x * math.sqrt(2.0 / (n + 1)) * out[n]
                - math.sqrt(n / (n + 1)) * out[n - 1]
            )
        return out

    def derivatives(self, x) -> np.ndarray:
        """First derivatives of degrees ``0..max_degree``.

        Uses the ladder identity F'_n = sqrt(n/2) F_{n-1}
        - sqrt((n+1)/2) F_{n+1}, so values one degree beyond the bound are
        formed internally.
        """
        x = np.asarray(x, dtype=float)
        vals = HermiteEvaluator(self.max_degree + 1).values(x)
        out = np.empty((self.max_degree + 1,) + x.shape)
        out[0] = -math.sqrt(0.5) * vals[1]
        for n in range(1, self.max_degree + 1):
            out[n] = (
                math.sqrt(n / 2.0) * vals[n - 1]
                - math.sqrt((n + 1) / 2.0) * vals[n + 1]
            )
        return out


def hermite_fn(n: int, x):
    """Value of the degree-``n`` normalized Hermite function at ``x``."""
    return HermiteEvaluator(n).values(x)[n]


def hermite_fn_derivative(n: int, x):
    """First derivative of the degree-``n`` function at ``x``."""
    return HermiteEvaluator(n).derivatives(x)[n]


def _simpson_weights(points: int) -> np.ndarray:
    # points is odd; composite Simpson weights 1,4,2,...,2,4,1 scaled by h/3.
    w = np.full(points, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    h = 2.0 * QUAD_HALF_WIDTH / (points - 1)
    return w * (h / 3.0)


def _gram(fn_table, points: int) -> np.ndarray:
    x = np.linspace(-QUAD_HALF_WIDTH, QUAD_HALF_WIDTH, points)
    f = fn_table(x)
    w = _simpson_weights(points)
    return (f * w) @ f.T


def _self_checked_gram(fn_table, quadrature_points: int, tol: float) -> np.ndarray:
    points = int(quadrature_points)
    if points < 3:
        raise ValueError("quadrature_points must be >= 3")
    if points % 2 == 0:
        points += 1  # Simpson needs an even interval count
    coarse = _gram(fn_table, points)
    fine = _gram(fn_table, 2 * points - 1)
    drift = float(np.max(np.abs(fine - coarse)))
    if drift > tol:
        raise InsufficientQuadrature(
            f"gram entries moved by {drift:.3e} (> {tol:.1e}) when the "
            f"quadrature resolution was doubled; increase quadrature_points"
        )
    return fine


def orthogonality_gram(max_n: int, quadrature_points: int = 8001,
                       tol: float = 1e-7) -> np.ndarray:
    """Pairwise integrals of the family members up to degree ``max_n``.

    Exact value is sqrt(pi) on the diagonal and 0 elsewhere. Integration is
    composite Simpson on [-12, 12]; the result is recomputed at doubled
    resolution and the coarser pass is rejected if the entries moved by
    more than ``tol``.
    """
    ev = HermiteEvaluator(max_n)
    return _self_checked_gram(ev.values, quadrature_points, tol)


def derivative_gram(max_n: int, quadrature_points: int = 8001,
                    tol: float = 1e-7) -> np.ndarray:
    """Pairwise integrals of the first derivatives up to degree ``max_n``.

    Exact values: (n + 1/2) sqrt(pi) on the diagonal,
    -sqrt(pi n (n-1)) / 2 at (n, n-2), -sqrt(pi (n+1)(n+2)) / 2 at
    (n, n+2), and 0 elsewhere.
    """
    ev = HermiteEvaluator(max_n)
    return _self_checked_gram(ev.derivatives, quadrature_points, tol)


def hermite_activation(x):
    """Bell-shaped gate activation ``exp(-x^2/2) * (1 - x^2)``."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) * (1.0 - x * x)
    return float(out) if out.ndim == 0 else out


def hermite_activation_grad(x):
    """Derivative of the gate activation, ``-x exp(-x^2/2) * (3 - x^2)``."""
    x = np.asarray(x, dtype=float)
    out = -x * np.exp(-0.5 * x * x) * (3.0 - x * x)
    return float(out) if out.ndim == 0 else out
