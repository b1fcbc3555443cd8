"""Periodic shape functions over the reference circle.

A contact line is stored as the polar graph ``r = r_e + rho(theta)`` sampled
on an equispaced angular grid.  Samples and real Fourier coefficients are two
views of the same trigonometric interpolant::

    rho(theta) = a_0 + sum_{k=1}^{N/2} (a_k cos k theta + b_k sin k theta)

with ``b_{N/2} = 0``.  ``a_0`` is the mean of rho.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ShapeError

MIN_NODES = 16


def _check_grid_size(n: int) -> None:
    if n < MIN_NODES or n % 2:
        raise ShapeError(f"grid size must be even and >= {MIN_NODES}, got {n}")


@dataclass(frozen=True)
class AngularGrid:
    """Equispaced nodes theta_j = 2 pi j / N on [0, 2 pi)."""

    n_nodes: int

    def __post_init__(self):
        _check_grid_size(self.n_nodes)

    @property
    def nodes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_nodes) / self.n_nodes


def nodes(n: int) -> np.ndarray:
    return AngularGrid(n).nodes


def to_coeffs(samples) -> tuple[np.ndarray, np.ndarray]:
    """Real Fourier coefficients ``(a, b)`` of the interpolant of ``samples``.

    Both arrays have length ``N/2 + 1`` and are indexed by wavenumber.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ShapeError("samples must be one-dimensional")
    n = x.size
    _check_grid_size(n)
    X = np.fft.rfft(x)
    a = 2.0 * X.real / n
    b = -2.0 * X.imag / n
    a[0] *= 0.5
    a[-1] *= 0.5
    b[0] = 0.0
    b[-1] = 0.0
    return a, b


def to_samples(a, b, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`to_coeffs`, optionally on a finer or coarser grid.

    Resampling zero-pads (``n`` larger) or truncates (``n`` smaller) the
    spectrum.  On truncation the new Nyquist mode keeps only its cosine part.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if n is None:
        n = 2 * (a.size - 1)
    _check_grid_size(n)
    m = n // 2
    X = np.zeros(m + 1, dtype=complex)
    kmax = min(m, a.size - 1)
    X[: kmax + 1] = 0.5 * n * (a[: kmax + 1] - 1j * b[: kmax + 1])
    X[0] = n * a[0]
    # the Nyquist bin of the target grid only represents a cosine
    X[m] = X[m].real * (2.0 if kmax == m else 1.0)
    return np.fft.irfft(X, n)


def coeff_vector(a, b) -> np.ndarray:
    """Pack ``(a, b)`` as ``[a0, a1, b1, ..., a_{N/2-1}, b_{N/2-1}, a_{N/2}]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = a.size - 1
    out = np.empty(2 * m)
    out[0] = a[0]
    out[1:-1:2] = a[1:m]
    out[2:-1:2] = b[1:m]
    out[-1] = a[m]
    return out


def from_coeff_vector(vec) -> tuple[np.ndarray, np.ndarray]:
    vec = np.asarray(vec, dtype=float)
    n = vec.size
    m = n // 2
    a = np.zeros(m + 1)
    b = np.zeros(m + 1)
    a[0] = vec[0]
    a[1:m] = vec[1:-1:2]
    b[1:m] = vec[2:-1:2]
    a[m] = vec[-1]
    return a, b


def mode_index(k: int, kind: str = "cos") -> int:
    """Position of mode ``k`` (``kind`` in {'cos', 'sin'}) in a coefficient vector."""
    if k == 0:
        return 0
    return 2 * k - 1 if kind == "cos" else 2 * k


def mode_labels(n: int) -> list[str]:
    m = n // 2
    labels = ["1"]
    for k in range(1, m):
        labels += [f"cos{k}", f"sin{k}"]
    labels.append(f"cos{m}")
    return labels


def trig_eval(a, b, theta, derivative: int = 0) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    k = np.arange(np.size(a))
    ph = np.multiply.outer(theta, k)
    c, s = np.cos(ph), np.sin(ph)
    if derivative == 0:
        return c @ a + s @ b
    if derivative == 1:
        return (c @ (k * b)) - (s @ (k * a))
    raise ValueError("only derivative orders 0 and 1 are supported")


def interpolate(samples, theta) -> np.ndarray:
    """Trigonometric interpolant of nodal ``samples`` at arbitrary angles."""
    return trig_eval(*to_coeffs(samples), theta)


def spectral_derivative(samples) -> np.ndarray:
    """Derivative of the trigonometric interpolant at the nodes."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    k = np.arange(n // 2 + 1)
    X = np.fft.rfft(x) * (1j * k)
    X[-1] = 0.0
    return np.fft.irfft(X, n)


@dataclass(frozen=True, eq=False)
class ShapeFunction:
    """Radial offset rho sampled on the standard grid of ``len(samples)`` nodes."""

    base_radius: float
    samples: np.ndarray
    _coeffs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 1:
            raise ShapeError("samples must be one-dimensional")
        _check_grid_size(x.size)
        if not self.base_radius > 0:
            raise ShapeError("base radius must be positive")
        if not np.all(np.isfinite(x)):
            raise ShapeError("shape samples must be finite")
        if np.any(self.base_radius + x <= 0):
            raise ShapeError("r_e + rho must be positive (star-shaped about origin)")
        x.flags.writeable = False
        a, b = to_coeffs(x)
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "_coeffs", (a, b))

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, r_e: float, n: int) -> "ShapeFunction":
        return cls(r_e, np.zeros(n))

    @classmethod
    def from_coeffs(cls, r_e: float, a, b, n: int | None = None) -> "ShapeFunction":
        return cls(r_e, to_samples(a, b, n))

    @classmethod
    def from_modes(cls, r_e: float, n: int, mean: float = 0.0,
                   cos: dict | None = None, sin: dict | None = None) -> "ShapeFunction":
        """Band-limited shape from ``{k: amplitude}`` dictionaries."""
        th = nodes(n)
        x = np.full(n, float(mean))
        for k, c in (cos or {}).items():
            x += c * np.cos(int(k) * th)
        for k, s in (sin or {}).items():
            x += s * np.sin(int(k) * th)
        return cls(r_e, x)

    @classmethod
    def from_function(cls, r_e: float, func: Callable, n: int) -> "ShapeFunction":
        return cls(r_e, func(nodes(n)))

    @classmethod
    def from_vector(cls, r_e: float, vec) -> "ShapeFunction":
        a, b = from_coeff_vector(vec)
        return cls.from_coeffs(r_e, a, b)

    # views ------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def r_e(self) -> float:
        return self.base_radius

    @property
    def theta(self) -> np.ndarray:
        return nodes(self.n)

    @property
    def coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        return self._coeffs

    @property
    def vector(self) -> np.ndarray:
        return coeff_vector(*self._coeffs)

    @property
    def radius(self) -> np.ndarray:
        return self.base_radius + self.samples

    def resample(self, n: int) -> "ShapeFunction":
        if n == self.n:
            return self
        return ShapeFunction(self.base_radius, to_samples(*self._coeffs, n))

    def evaluate(self, theta, derivative: int = 0) -> np.ndarray:
        """Interpolant (or its first derivative) at arbitrary angles."""
        return trig_eval(*self._coeffs, theta, derivative)

    def __add__(self, other: "ShapeFunction") -> "ShapeFunction":
        return ShapeFunction(self.base_radius, self.samples + other.samples)

    def __sub__(self, other: "ShapeFunction") -> "ShapeFunction":
        return ShapeFunction(self.base_radius, self.samples - other.samples)

    def scaled(self, factor: float) -> "ShapeFunction":
        return ShapeFunction(self.base_radius, factor * self.samples)


def derivative(shape: ShapeFunction) -> np.ndarray:
    """Samples of rho'(theta)."""
    return spectral_derivative(shape.samples)


@dataclass(frozen=True, eq=False)
class BoundaryFrame:
    normal: np.ndarray      # (N, 2) unit outward normal of Gamma_rho
    metric: np.ndarray      # kinematic factor converting normal speed to rho_t
    nu_e: np.ndarray        # (N, 2) radial unit vectors
    tau_e: np.ndarray       # (N, 2) tangential unit vectors
    mode: str


METRIC_MODES = ("geometric", "paper")


def boundary_frame(shape: ShapeFunction, mode: str = "geometric") -> BoundaryFrame:
    """Outward normal and kinematic factor at the grid nodes.

    ``mode='geometric'`` gives ``sqrt(1 + (rho'/R)^2)``, the exact factor for
    which ``rho_t = m * V`` with V the normal speed; ``mode='paper'`` multiplies
    it by ``R = r_e + rho``.
    """
    if mode not in METRIC_MODES:
        raise ValueError(f"unknown metric mode {mode!r}")
    th = shape.theta
    R = shape.radius
    dr = derivative(shape)
    nu_e = np.column_stack([np.cos(th), np.sin(th)])
    tau_e = np.column_stack([-np.sin(th), np.cos(th)])
    norm = np.hypot(R, dr)
    normal = (R[:, None] * nu_e - dr[:, None] * tau_e) / norm[:, None]
    metric = norm / R if mode == "geometric" else norm
    return BoundaryFrame(normal, metric, nu_e, tau_e, mode)


def area(shape: ShapeFunction) -> float:
    """Enclosed area, integrated on the doubled grid to avoid aliasing of R^2."""
    R = shape.resample(2 * shape.n).radius
    return float(np.pi * np.mean(R * R))


def mean(shape: ShapeFunction) -> float:
    return float(shape.coeffs[0][0])


def inner(f, g) -> float:
    """Mean inner product (1/2pi) int f g on the grid."""
    return float(np.mean(np.asarray(f) * np.asarray(g)))


def _wrap(x):
    return np.mod(x + np.pi, 2.0 * np.pi) - np.pi


def curve_points(shape: ShapeFunction, theta) -> tuple[np.ndarray, ...]:
    """Cartesian points and their theta-derivatives at arbitrary angles."""
    R = shape.base_radius + shape.evaluate(theta)
    dR = shape.evaluate(theta, derivative=1)
    c, s = np.cos(theta), np.sin(theta)
    return R * c, R * s, dR * c - R * s, dR * s + R * c


def angle_map(shape: ShapeFunction, v, theta) -> np.ndarray:
    """Angle about ``v`` of the boundary point with source angle ``theta``.

    Unwrapped so that it is continuous and close to ``theta``.
    """
    x, y, _, _ = curve_points(shape, theta)
    phi = np.arctan2(y - v[1], x - v[0])
    return theta + _wrap(phi - theta)


def _check_translatable(shape: ShapeFunction, v) -> None:
    fine = shape.resample(4 * shape.n)
    th = fine.theta
    R = fine.radius
    dR = derivative(fine)
    c, s = np.cos(th), np.sin(th)
    x, y = R * c - v[0], R * s - v[1]
    dx, dy = dR * c - R * s, dR * s + R * c
    hint = float(R.min())
    if np.hypot(*v) >= hint or np.any(x * dy - y * dx <= 0):
        raise ShapeError(
            f"translated curve is not star-shaped about the origin; "
            f"|v| = {np.hypot(*v):.4g}, keep |v| well below {hint:.4g}"
        )


def solve_angles(shape: ShapeFunction, v, phi, tol: float = 1e-14,
                 max_iter: int = 80) -> np.ndarray:
    """Source angles theta with ``angle_map(shape, v, theta) == phi``.

    Safeguarded Newton iteration inside the bracket ``phi +- pi/2``, which
    contains the root whenever ``|v| < min(r_e + rho)``.
    """
    phi = np.asarray(phi, dtype=float)
    lo = phi - 0.5 * np.pi
    hi = phi + 0.5 * np.pi
    t = phi.copy()
    for _ in range(max_iter):
        x, y, dx, dy = curve_points(shape, t)
        X, Y = x - v[0], y - v[1]
        f = _wrap(np.arctan2(Y, X) - phi)
        df = (X * dy - Y * dx) / (X * X + Y * Y)
        lo = np.where(f < 0, t, lo)
        hi = np.where(f > 0, t, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / df
        t_new = t - step
        bad = ~np.isfinite(t_new) | (t_new <= lo) | (t_new >= hi)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        done = np.max(np.abs(t_new - t)) < tol
        t = t_new
        if done:
            break
    return t


def recenter(shape: ShapeFunction, v) -> ShapeFunction:
    """Polar graph of ``Gamma_rho - v`` resampled on the same grid."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return shape
    _check_translatable(shape, v)
    phi = shape.theta
    t = solve_angles(shape, v, phi)
    x, y, _, _ = curve_points(shape, t)
    dist = np.hypot(x - v[0], y - v[1])
    return ShapeFunction(shape.base_radius, dist - shape.base_radius)


def translated_circle(r_e: float, v, n: int) -> ShapeFunction:
    """Exact polar graph of the circle of radius r_e centred at ``v``."""
    th = nodes(n)
    vn = v[0] * np.cos(th) + v[1] * np.sin(th)
    vv = v[0] ** 2 + v[1] ** 2
    return ShapeFunction(r_e, vn + np.sqrt(r_e**2 - vv + vn**2) - r_e)
