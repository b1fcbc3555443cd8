"""Linearization of the velocity functional at the equilibrium circle.

Analytic derivatives at rho = 0 (with ``ubar = (r_e^2 - |x|^2)/4``):

* ``dI[h]      = (pi r_e^3 / 2) h0``
* ``dlam[h]    = -(V0 / I_e^2) dI[h]``, ``I_e = pi r_e^4 / 8``
* ``dflux[h]   = (r_e DtN(h) - h) / 2``

so that ``DG(0) h = -F'(1) [dlam flux_e + lam_e dflux]`` acts on mode k
as ``-(k-1) F'(1)/r_e`` for ``k >= 1`` and as ``-3 F'(1)/r_e`` on constants
(geometric metric).  Every constant is checked against finite differences
of :func:`droplet.solver.solve_base` in the test-suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DynamicsConfig, velocity
from .shape import ShapeFunction, coeff_vector, mode_index, mode_labels, to_coeffs
from .solver import dtn_disk


def _mean_coeff(h) -> float:
    """Mean of a direction given as ``(a, b)`` coefficients or a ShapeFunction."""
    if isinstance(h, ShapeFunction):
        return float(h.coeffs[0][0])
    return float(np.asarray(h[0])[0])


def equilibrium_integral(r_e: float) -> float:
    return math.pi * r_e**4 / 8.0


def volume_derivative(h, r_e: float) -> float:
    """First variation of ``I(rho) = int ubar`` at the circle."""
    return 0.5 * math.pi * r_e**3 * _mean_coeff(h)


def lambda_derivative(h, config: DynamicsConfig) -> float:
    """First variation of ``lam = V0 / I``."""
    r_e = config.r_e
    I_e = equilibrium_integral(r_e)
    return -config.V0 / I_e**2 * volume_derivative(h, r_e)


def flux_derivative(h, config: DynamicsConfig) -> tuple[np.ndarray, np.ndarray]:
    """First variation of the boundary flux, returned as ``(a, b)`` coefficients."""
    a, b = h.coeffs if isinstance(h, ShapeFunction) else (np.asarray(h[0]), np.asarray(h[1]))
    r_e = config.r_e
    da, db = dtn_disk(a, b, r_e)
    return 0.5 * (r_e * da - a), 0.5 * (r_e * db - b)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """DG(0) as a per-wavenumber multiplier and/or a dense coefficient matrix.

    ``matrix`` acts on coefficient vectors ``[a0, a1, b1, ...]``; when only a
    subset of directions was probed, ``columns`` lists their positions.
    """

    multipliers: np.ndarray | None
    matrix: np.ndarray
    metric: str
    columns: np.ndarray | None = None

    def block(self, max_mode: int) -> np.ndarray:
        """Square block on modes ``0..max_mode``."""
        size = 2 * max_mode + 1
        if self.columns is None:
            return self.matrix[:size, :size]
        pos = {c: j for j, c in enumerate(self.columns)}
        return self.matrix[:size, [pos[i] for i in range(size)]]


def analytic_multipliers(config: DynamicsConfig, max_mode: int) -> np.ndarray:
    """``mu_k`` for ``k = 0..max_mode`` assembled from the three first variations."""
    r_e = config.r_e
    lam_e = config.V0 / equilibrium_integral(r_e)
    flux_e = -0.5 * r_e
    fp = config.law.slope_at_one
    scale = 1.0 if config.metric == "geometric" else r_e
    mu = np.empty(max_mode + 1)
    for k in range(max_mode + 1):
        a = np.zeros(max_mode + 1)
        b = np.zeros(max_mode + 1)
        a[k] = 1.0
        dlam = lambda_derivative((a, b), config)
        dflux = flux_derivative((a, b), config)[0][k]
        mu[k] = -fp * (dlam * flux_e + lam_e * dflux) * scale
    return mu


def analytic_DG0(config: DynamicsConfig) -> LinearOperator:
    n = config.n
    mu = analytic_multipliers(config, n // 2)
    diag = coeff_vector(mu, mu)
    return LinearOperator(mu, np.diag(diag), config.metric)


def _velocity_coeffs(vec, config: DynamicsConfig) -> np.ndarray:
    shape = ShapeFunction.from_vector(config.r_e, vec)
    return coeff_vector(*to_coeffs(velocity(shape, config).values))


def _jacobian_columns(config: DynamicsConfig, eps: float, cols) -> np.ndarray:
    n = config.n
    J = np.empty((n, len(cols)))
    for j, c in enumerate(cols):
        e = np.zeros(n)
        e[c] = eps
        J[:, j] = (_velocity_coeffs(e, config) - _velocity_coeffs(-e, config)) / (2 * eps)
    return J


def numerical_jacobian(config: DynamicsConfig, eps: float | None = None,
                       max_mode: int | None = None, richardson: bool = False) -> LinearOperator:
    """Central-difference Jacobian of G at rho = 0 on Fourier directions.

    With ``richardson=True`` the steps ``eps`` and ``eps/2`` are combined to
    cancel the ``O(eps^2)`` term.

    Directions are limited to ``k <= N/4`` (the default): a bump of size eps
    on mode k feeds ``k eps^2`` into mode 2k, which the ``N/2``-term harmonic
    basis cannot represent once ``2k > N/2``.
    """
    r_e = config.r_e
    eps = 1e-5 * r_e if eps is None else eps
    if not 1e-7 * r_e <= eps <= 1e-3 * r_e:
        raise ValueError("eps must lie in [1e-7, 1e-3] * r_e")
    n = config.n
    max_mode = n // 4 if max_mode is None else max_mode
    if not 0 <= max_mode <= n // 4:
        raise ValueError(f"max_mode must lie in [0, N/4] = [0, {n // 4}]")
    cols = np.arange(2 * max_mode + 1)
    J = _jacobian_columns(config, eps, cols)
    if richardson:
        J = (4.0 * _jacobian_columns(config, eps / 2, cols) - J) / 3.0
    return LinearOperator(None, J, config.metric, cols)


@dataclass
class SpectrumReport:
    max_mode: int
    metric: str
    analytic: np.ndarray          # eigenvalues sorted descending
    numerical: np.ndarray
    abs_err: np.ndarray
    rel_err: np.ndarray
    per_mode: list                # dicts: k, analytic, fd_cos, fd_sin
    kernel_dim: int
    kernel_tol: float
    coupling_norm: float
    max_imag: float
    eigenspaces: list             # observed eigenvalue -> mode labels
    paper_values: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "max_mode": self.max_mode,
            "metric_mode": self.metric,
            "analytic": self.analytic.tolist(),
            "numerical": self.numerical.tolist(),
            "abs_err": self.abs_err.tolist(),
            "rel_err": self.rel_err.tolist(),
            "per_mode": self.per_mode,
            "kernel_dim": self.kernel_dim,
            "kernel_tol": self.kernel_tol,
            "coupling_norm": self.coupling_norm,
            "max_imag": self.max_imag,
            "eigenspaces": self.eigenspaces,
            "paper_value_note": self.paper_values.get("note", ""),
            "paper_values": self.paper_values,
        }


def _group(values, labels, tol):
    groups = []
    for val, lab in sorted(zip(values, labels), key=lambda p: -p[0]):
        if groups and abs(groups[-1]["eigenvalue"] - val) <= tol:
            groups[-1]["modes"].append(lab)
        else:
            groups.append({"eigenvalue": float(val), "modes": [lab]})
    return groups


def spectrum(config: DynamicsConfig, max_mode: int = 16, eps: float | None = None,
             richardson: bool = True, kernel_tol: float | None = None,
             jacobian: LinearOperator | None = None) -> SpectrumReport:
    """Compare analytic and finite-difference spectra of DG(0) on modes ``<= max_mode``."""
    r_e = config.r_e
    fp = config.law.slope_at_one
    unit = fp * config.rate_scale
    kernel_tol = 1e-6 * unit if kernel_tol is None else kernel_tol
    if jacobian is None:
        jacobian = numerical_jacobian(config, eps, max_mode, richardson)
    size = 2 * max_mode + 1
    block = jacobian.block(max_mode)
    # leakage into other modes: off-diagonal part of the block plus rows beyond it
    off = np.delete(jacobian.matrix, np.arange(size), axis=0)
    coupling = max(
        float(np.max(np.abs(block - np.diag(np.diag(block))))),
        float(np.max(np.abs(off))) if off.size else 0.0,
    )

    mu = analytic_multipliers(config, max_mode)
    analytic = np.sort(np.r_[mu[0], np.repeat(mu[1:], 2)])[::-1] + 0.0
    eig = np.linalg.eigvals(block)
    numerical = np.sort(eig.real)[::-1]
    abs_err = np.abs(numerical - analytic)
    rel_err = abs_err / np.maximum(np.abs(analytic), unit)

    labels = mode_labels(2 * (max_mode + 1))[:size]
    fd_diag = np.diag(block)
    per_mode = []
    for k in range(max_mode + 1):
        entry = {"k": k, "analytic": float(mu[k]), "fd_cos": float(fd_diag[mode_index(k)])}
        if k > 0:
            entry["fd_sin"] = float(fd_diag[mode_index(k, "sin")])
        per_mode.append(entry)

    paper_unit = fp * 4.0 * config.V0 / (math.pi * r_e**2)
    paper = {
        "note": (
            "published spectrum is -F'(1) 4 V0/(pi r_e^2) {0,1,2,...} with the "
            "first negative eigenvalue on span{1, cos 2t, sin 2t}; finite differences "
            "give mode k >= 1 the value -(k-1) F'(1)/r_e and the constant mode "
            "-3 F'(1)/r_e (geometric metric; multiply by r_e for the paper metric)"
        ),
        "published_unit": paper_unit,
        "published_eigenvalues": [-paper_unit * j for j in range(max_mode)],
        "published_constant_mode_grouping": "same eigenvalue as cos 2t, sin 2t",
        "observed_constant_mode": float(mu[0]),
    }
    return SpectrumReport(
        max_mode, config.metric, analytic, numerical, abs_err, rel_err, per_mode,
        int(np.sum(np.abs(numerical) <= kernel_tol)), kernel_tol, coupling,
        float(np.max(np.abs(eig.imag))), _group(fd_diag, labels, 1e-3 * unit), paper,
    )


def disk_green_radial_derivative(r, theta, phi, r_e: float):
    """Radial derivative of the disk Green's function at the boundary (Poisson kernel)."""
    r = np.asarray(r, dtype=float)
    if np.any(r >= r_e) or np.any(r < 0):
        raise ValueError("Poisson kernel requires 0 <= r < r_e")
    return (r_e**2 - r**2) / (2 * np.pi * (r**2 + r_e**2 - 2 * r_e * r * np.cos(theta - phi)))
