"""Volume-constrained Dirichlet solve on star-shaped domains.

The torsion problem ``-Lap u = 1, u = 0 on Gamma_rho`` is split as
``u = w + (r_e^2 - |x|^2)/4`` with ``w`` harmonic.  ``w`` is expanded in
scaled harmonic polynomials::

    w(r, theta) = c_0 + sum_{k=1}^{K} (r / r_*)^k (c_k cos k theta + s_k sin k theta)

with ``K = N/2``.  Dropping the Nyquist harmonic would leave the Nyquist
shape mode without its Dirichlet-to-Neumann response, which makes it grow.

The coefficients are fitted by least squares at ``2N`` boundary points taken
from the spectral interpolant of rho; fitting at only the ``N`` nodes lets the
nearly dependent high modes oscillate between nodes on off-centre domains.
Gradients and the domain integral of every basis term are available in
closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedDomainError, SolverError
from .shape import ShapeFunction, derivative, to_coeffs, to_samples

SCALE_FACTOR = 1.05
RESIDUAL_TOL = 1e-9
# absolute round-off floor on the scale r_*^2 of u; matters only for tiny data such as FD probes
RESIDUAL_FLOOR = 1e-13
OVERSAMPLE = 2


@dataclass(frozen=True)
class HarmonicBasis:
    max_mode: int
    r_star: float

    @classmethod
    def for_shape(cls, shape: ShapeFunction) -> "HarmonicBasis":
        return cls(shape.n // 2, SCALE_FACTOR * float(shape.radius.max()))

    @property
    def size(self) -> int:
        return 2 * self.max_mode + 1

    def _powers(self, r, k):
        return np.power.outer(np.asarray(r, dtype=float) / self.r_star, k)

    def matrix(self, r, theta) -> np.ndarray:
        """Values of the basis functions, one row per point."""
        k = np.arange(1, self.max_mode + 1)
        P = self._powers(r, k)
        ph = np.multiply.outer(theta, k)
        return np.hstack([np.ones((P.shape[0], 1)), P * np.cos(ph), P * np.sin(ph)])

    def polar_gradient(self, r, theta) -> tuple[np.ndarray, np.ndarray]:
        """Matrices for ``dw/dr`` and ``(1/r) dw/dtheta``."""
        k = np.arange(1, self.max_mode + 1)
        r = np.asarray(r, dtype=float)
        # d/dr (r/r*)^k = k (r/r*)^(k-1) / r*, and (1/r) d/dtheta carries the same factor
        D = k * self._powers(r, k - 1) / self.r_star
        ph = np.multiply.outer(theta, k)
        c, s = np.cos(ph), np.sin(ph)
        z = np.zeros((D.shape[0], 1))
        return np.hstack([z, D * c, D * s]), np.hstack([z, -D * s, D * c])

    def radial_integrals(self, R, theta) -> np.ndarray:
        """``int_0^R (basis) r dr`` per boundary angle."""
        k = np.arange(1, self.max_mode + 1)
        R = np.asarray(R, dtype=float)
        P = self._powers(R, k) * (R * R)[:, None] / (k + 2)
        ph = np.multiply.outer(theta, k)
        return np.hstack([(0.5 * R * R)[:, None], P * np.cos(ph), P * np.sin(ph)])


@dataclass(frozen=True, eq=False)
class HarmonicExtension:
    basis: HarmonicBasis
    coeffs: np.ndarray
    residual: float
    cond_estimate: float

    def __call__(self, r, theta) -> np.ndarray:
        r = np.atleast_1d(r)
        theta = np.broadcast_to(theta, r.shape)
        return self.basis.matrix(r.ravel(), theta.ravel()) @ self.coeffs

    def polar_gradient(self, r, theta):
        Gr, Gt = self.basis.polar_gradient(r, theta)
        return Gr @ self.coeffs, Gt @ self.coeffs

    @property
    def mean(self) -> float:
        return float(self.coeffs[0])

    def mode(self, k: int) -> tuple[float, float]:
        """Cosine/sine coefficients of mode k in the unscaled basis r^k."""
        K = self.basis.max_mode
        scale = self.basis.r_star ** (-k)
        return self.coeffs[k] * scale, self.coeffs[K + k] * scale


def _fit(fine: ShapeFunction, g: np.ndarray, max_mode: int) -> HarmonicExtension:
    basis = HarmonicBasis(max_mode, SCALE_FACTOR * float(fine.radius.max()))
    A = basis.matrix(fine.radius, fine.theta)
    col = np.linalg.norm(A, axis=0)
    coeffs, _, _, sv = np.linalg.lstsq(A / col, g, rcond=None)
    coeffs = coeffs / col
    if not np.all(np.isfinite(coeffs)):
        raise SolverError("non-finite harmonic coefficients")
    residual = float(np.max(np.abs(A @ coeffs - g)))
    if residual > RESIDUAL_TOL * float(np.max(np.abs(g))) + RESIDUAL_FLOOR * basis.r_star**2:
        raise IllConditionedDomainError(
            f"collocation residual {residual:.3e} exceeds {RESIDUAL_TOL:g} * max|g|; "
            "perturbation too large for the global harmonic basis"
        )
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    return HarmonicExtension(basis, coeffs, residual, cond)


def harmonic_extend(shape: ShapeFunction, g) -> HarmonicExtension:
    """Harmonic function in Omega_rho whose boundary trace is ``g``.

    ``g`` holds one value per node and is interpolated trigonometrically
    onto the oversampled collocation points.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (shape.n,):
        raise ValueError("boundary data must have one value per node")
    fine_n = OVERSAMPLE * shape.n
    return _fit(shape.resample(fine_n), to_samples(*to_coeffs(g), fine_n), shape.n // 2)


def normal_derivative(w: HarmonicExtension, shape: ShapeFunction) -> np.ndarray:
    """Outward normal derivative of ``w`` at the nodes of ``shape``."""
    R = shape.radius
    dR = derivative(shape)
    wr, wt = w.polar_gradient(R, shape.theta)
    return (R * wr - dR * wt) / np.hypot(R, dR)


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Boundary flux of the unit-load solution and the volume multiplier."""

    shape: ShapeFunction
    flux: np.ndarray
    I: float
    lam: float
    harmonic: HarmonicExtension

    @property
    def harmonic_coeffs(self) -> np.ndarray:
        return self.harmonic.coeffs

    @property
    def cond_estimate(self) -> float:
        return self.harmonic.cond_estimate

    def flux_on(self, shape: ShapeFunction) -> np.ndarray:
        """Flux at the nodes of a resampled copy of the same boundary."""
        return _flux(self.harmonic, shape)

    def u_bar(self, x, y) -> np.ndarray:
        """Unit-load solution at interior Cartesian points."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y).ravel()
        t = np.arctan2(y, x).ravel()
        r_e = self.shape.base_radius
        out = self.harmonic(r, t) + 0.25 * (r_e**2 - r**2)
        return out.reshape(x.shape)


def _flux(w: HarmonicExtension, shape: ShapeFunction) -> np.ndarray:
    R = shape.radius
    # grad p = -x/2 and x . nu = R^2 / |(R, R')|
    return normal_derivative(w, shape) - 0.5 * R * R / np.hypot(R, derivative(shape))


def solve_base(shape: ShapeFunction, V0: float) -> SolveResult:
    """Solve ``-Lap u = 1`` in Omega_rho with ``u = 0`` on its boundary.

    Returns the outward flux at each node, ``I = int u`` and
    ``lam = V0 / I``.
    """
    if not V0 > 0:
        raise ValueError("V0 must be positive")
    r_e = shape.base_radius
    fine = shape.resample(OVERSAMPLE * shape.n)
    R = fine.radius
    w = _fit(fine, 0.25 * (R * R - r_e * r_e), shape.n // 2)

    radial = w.basis.radial_integrals(R, fine.theta) @ w.coeffs
    radial += r_e * r_e * R * R / 8.0 - R**4 / 16.0
    I = float(2.0 * np.pi * np.mean(radial))
    if not I > 0:
        raise SolverError(f"non-positive domain integral I = {I:.3e}")
    return SolveResult(shape, _flux(w, shape), I, V0 / I, w)


def dtn_disk(a, b, r_e: float) -> tuple[np.ndarray, np.ndarray]:
    """Dirichlet-to-Neumann map of the disk: multiplier k / r_e on mode k."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k = np.arange(a.size)
    return a * k / r_e, b * k / r_e


def collocation_dtn(shape: ShapeFunction, g) -> np.ndarray:
    """DtN map of Omega_rho applied to nodal data, via :func:`harmonic_extend`."""
    return normal_derivative(harmonic_extend(shape, g), shape)
