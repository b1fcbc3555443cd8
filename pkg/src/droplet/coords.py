"""Translation/shape coordinates ``(v, rho_bar)`` and trajectory analysis.

A boundary ``Gamma_rho`` is written as ``v + Gamma_rho_bar`` with ``rho_bar``
orthogonal to ``cos`` and ``sin`` under ``<f, g> = (1/2pi) int f g``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsConfig, TrajectoryRecord, velocity
from .errors import DecompositionError, DropletError, ShapeError
from .shape import (
    ShapeFunction, angle_map, derivative, inner, interpolate, recenter, to_coeffs, to_samples,
)


@dataclass(frozen=True, eq=False)
class CoordDecomposition:
    v: np.ndarray
    rho_bar: ShapeFunction
    newton_iters: int
    residual: float


def phi(shape: ShapeFunction, v) -> np.ndarray:
    """Orthogonality defects ``(<rho_bar_v, cos>, <rho_bar_v, sin>)``."""
    rb = recenter(shape, v)
    th = rb.theta
    return np.array([inner(rb.samples, np.cos(th)), inner(rb.samples, np.sin(th))])


def phi_jacobian(shape: ShapeFunction, v=(0.0, 0.0), h: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of :func:`phi` at ``v``."""
    v = np.asarray(v, dtype=float)
    h = 1e-6 * shape.base_radius if h is None else h
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        J[:, j] = (phi(shape, v + e) - phi(shape, v - e)) / (2 * h)
    return J


def decompose(shape: ShapeFunction, tol: float = 1e-12, max_iter: int = 25) -> CoordDecomposition:
    """Find the centre ``v`` for which the recentred shape has no mode 1."""
    r_e = shape.base_radius
    if np.max(np.abs(shape.samples)) > 0.3 * r_e:
        raise DecompositionError("decompose requires |rho| <= 0.3 r_e")
    a, b = shape.coeffs
    # Phi has Jacobian -Id/2 at the origin, so one linear step gives (a1, b1)
    v = np.array([a[1], b[1]])
    try:
        res = phi(shape, v)
        it = 0
        while np.max(np.abs(res)) > tol * r_e:
            if it >= max_iter:
                raise DecompositionError(
                    f"centre iteration did not converge in {max_iter} steps "
                    f"(|Phi| = {np.max(np.abs(res)):.2e})"
                )
            it += 1
            v = v - np.linalg.solve(phi_jacobian(shape, v), res)
            res = phi(shape, v)
    except ShapeError as exc:
        raise DecompositionError(f"recentring failed: {exc}") from exc
    return CoordDecomposition(v, recenter(shape, v), it, float(np.max(np.abs(res))))


def recompose(v, rho_bar: ShapeFunction) -> ShapeFunction:
    """Polar graph of ``v + Gamma_rho_bar``."""
    return recenter(rho_bar, -np.asarray(v, dtype=float))


def _slope(rho_bar: ShapeFunction) -> tuple[np.ndarray, np.ndarray]:
    fine = rho_bar.resample(2 * rho_bar.n)
    return fine.theta, derivative(fine) / fine.radius


def matrix_M(rho_bar: ShapeFunction) -> np.ndarray:
    """Matrix coupling the centre velocity to the mode-1 part of G.

    With ``q = rho_bar' / (r_e + rho_bar)`` the normal-speed identity
    ``G = v_dot . (nu_e - q tau_e) + rho_bar_dot`` projected on
    ``cos``/``sin`` (as ``2 <., cos>`` and ``2 <., sin>``) gives
    ``M v_dot = (pi_c G, pi_s G)``.
    """
    th, q = _slope(rho_bar)
    c, s = np.cos(th), np.sin(th)
    M = np.eye(2) + 2.0 * np.array([
        [np.mean(q * s * c), -np.mean(q * c * c)],
        [np.mean(q * s * s), -np.mean(q * c * s)],
    ])
    if np.linalg.det(M) < 0.1:
        raise DropletError(f"matrix M nearly singular (det = {np.linalg.det(M):.3g})")
    return M


def project_mode1(values) -> tuple[np.ndarray, np.ndarray]:
    """``(pi_c, pi_s)`` coefficients and the mode-1-free remainder."""
    a, b = to_coeffs(values)
    p = np.array([a[1], b[1]])
    a[1] = b[1] = 0.0
    return p, to_samples(a, b, np.size(values))


@dataclass(frozen=True, eq=False)
class ReducedState:
    v: np.ndarray
    rho_bar: ShapeFunction
    M: np.ndarray
    v_dot: np.ndarray
    rho_bar_dot: np.ndarray

    @property
    def rho_bar_coeffs(self):
        return self.rho_bar.coeffs


def reduced_rhs(rho_bar: ShapeFunction, config: DynamicsConfig, v=(0.0, 0.0)) -> ReducedState:
    """Right-hand side of the centre/shape system; independent of ``v``."""
    if config.metric != "geometric":
        raise ValueError("the reduced system needs the translation-invariant geometric metric")
    G = velocity(rho_bar, config).values
    M = matrix_M(rho_bar)
    p, G_perp = project_mode1(G)
    v_dot = np.linalg.solve(M, p)
    q = derivative(rho_bar) / rho_bar.radius
    th = rho_bar.theta
    correction = q * (v_dot[0] * np.sin(th) - v_dot[1] * np.cos(th))
    _, corr_perp = project_mode1(correction)
    return ReducedState(np.asarray(v, dtype=float), rho_bar, M, v_dot, G_perp - corr_perp)


def invariance_check(shape: ShapeFunction, v, V0: float = math.pi / 4) -> float:
    """Sup difference between the flux of ``shape`` and of its recentred copy.

    Node ``theta_j`` of ``shape`` is the point of the recentred boundary at
    angle ``angle_map(theta_j)``; the recentred flux is interpolated there.
    """
    from .solver import solve_base

    v = np.asarray(v, dtype=float)
    moved = recenter(shape, v)
    f0 = solve_base(shape, V0).flux
    f1 = solve_base(moved, V0).flux
    ph = angle_map(shape, v, shape.theta)
    return float(np.max(np.abs(f0 - interpolate(f1, ph))))


@dataclass
class TrackResult:
    times: np.ndarray
    v: np.ndarray              # (n_snap, 2)
    rho_bar_l2: np.ndarray
    rho_bar_max: np.ndarray
    rho_bar_modes: np.ndarray  # (n_snap, 5) amplitudes of modes 0..4
    decay_rate: float | None
    rate_reliable: bool
    rate_note: str
    v_inf: np.ndarray
    failures: list
    decompositions: list


RATE_FLOOR = 1e-11


def fit_decay_rate(times, norms, r_e: float = 1.0) -> tuple[float | None, bool, str]:
    """Least-squares rate of ``log norms`` over the final third of the record."""
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if times.size < 20:
        return None, False, "fewer than 20 snapshots"
    if np.nanmax(norms) <= RATE_FLOOR * r_e:
        return None, False, "not applicable: shape already at equilibrium"
    start = times[0] + 2.0 * (times[-1] - times[0]) / 3.0
    sel = (times >= start) & np.isfinite(norms) & (norms > RATE_FLOOR * r_e)
    if sel.sum() < 3:
        return None, False, "too few resolvable snapshots in the fitting window"
    slope, _ = np.polyfit(times[sel], np.log(norms[sel]), 1)
    span = np.log10(norms[sel].max() / norms[sel].min())
    if span < 1.0:
        return -slope, False, f"norm spans only {span:.2f} decades in the window"
    return -slope, True, "ok"


def track(traj: TrajectoryRecord) -> TrackResult:
    """Decompose every snapshot and summarise centre drift and shape decay."""
    n = len(traj.snapshots)
    v = np.full((n, 2), np.nan)
    l2 = np.full(n, np.nan)
    mx = np.full(n, np.nan)
    modes = np.full((n, 5), np.nan)
    failures, decs = [], []
    for i, snap in enumerate(traj.snapshots):
        try:
            dec = decompose(snap)
        except DropletError as exc:
            failures.append((i, str(exc)))
            decs.append(None)
            continue
        decs.append(dec)
        v[i] = dec.v
        x = dec.rho_bar.samples
        l2[i] = math.sqrt(np.mean(x * x))
        mx[i] = np.max(np.abs(x))
        a, b = dec.rho_bar.coeffs
        modes[i] = np.hypot(a[:5], b[:5])
        modes[i, 0] = a[0]
    rate, ok, note = fit_decay_rate(traj.times, l2, traj.r_e)
    v_inf = _extrapolate_centre(traj.times, v, rate)
    return TrackResult(traj.times, v, l2, mx, modes, rate, ok, note, v_inf, failures, decs)


def _extrapolate_centre(times, v, rate):
    good = np.all(np.isfinite(v), axis=1)
    if not good.any():
        return np.full(2, np.nan)
    t, vv = times[good], v[good]
    if rate is None or rate <= 0 or t.size < 2:
        return vv[-1].copy()
    # the centre velocity is quadratic in rho_bar, so v approaches v_inf at twice the shape rate
    kappa = 2.0 * rate
    dt = t[-1] - t[-2]
    decay = math.exp(-kappa * dt)
    return vv[-1] + (vv[-1] - vv[-2]) * decay / (1.0 - decay)
