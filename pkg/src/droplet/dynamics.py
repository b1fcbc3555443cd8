"""Contact-line velocity, time integration and the equilibrium probe."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ContactLawError, DropletError, IllConditionedDomainError, ShapeError, SolverError
from .shape import METRIC_MODES, ShapeFunction, boundary_frame, to_coeffs, to_samples
from .solver import solve_base

log = logging.getLogger(__name__)

VALIDATED_RANGE = (0.2, 5.0)


class ContactLaw:
    """Monotone contact-angle law F with F(1) = 0.

    Either a power law ``F(s) = s**p - 1`` or a monotone (PCHIP) spline
    through tabulated points.
    """

    def __init__(self, kind: str = "power", p: float = 3.0, table=None):
        self.kind = kind
        self.p = float(p)
        if kind == "power":
            if not self.p > 0:
                raise ContactLawError("power-law exponent must be positive")
            self._spline = None
        elif kind == "spline":
            s, f = (np.asarray(c, dtype=float) for c in table)
            if s[0] > VALIDATED_RANGE[0] or s[-1] < VALIDATED_RANGE[1]:
                raise ContactLawError(f"table must cover {VALIDATED_RANGE}")
            self._spline = PchipInterpolator(s, f)
            self._dspline = self._spline.derivative()
        else:
            raise ContactLawError(f"unknown contact law kind {kind!r}")
        self._validate()

    @classmethod
    def power(cls, p: float) -> "ContactLaw":
        return cls("power", p)

    @classmethod
    def tabulated(cls, s, f) -> "ContactLaw":
        return cls("spline", table=(s, f))

    def _validate(self):
        if abs(self._F(np.array([1.0]))[0]) > 1e-12:
            raise ContactLawError("contact law must satisfy F(1) = 0")
        s = np.linspace(*VALIDATED_RANGE, 2001)
        if np.any(self._dF(s) <= 0):
            raise ContactLawError(f"F' must be positive on {VALIDATED_RANGE}")

    def _F(self, s):
        if self._spline is None:
            return s**self.p - 1.0
        return self._spline(s)

    def _dF(self, s):
        if self._spline is None:
            return self.p * s ** (self.p - 1.0)
        return self._dspline(s)

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = VALIDATED_RANGE
        if np.any(~(s >= lo) | ~(s <= hi)):
            raise ContactLawError(
                f"contact law evaluated outside its validated range {VALIDATED_RANGE}: "
                f"[{np.min(s):.4g}, {np.max(s):.4g}]"
            )
        return s

    def __call__(self, s):
        return self._F(self._check(s))

    def derivative(self, s):
        return self._dF(self._check(s))

    @property
    def slope_at_one(self) -> float:
        return float(self._dF(np.array([1.0]))[0])

    def to_dict(self) -> dict:
        if self.kind == "power":
            return {"type": "power", "p": self.p}
        return {"type": "spline", "s": list(self._spline.x), "F": list(self._spline.c[-1])}

    def __repr__(self):
        return f"ContactLaw(kind={self.kind!r}, p={self.p})" if self.kind == "power" else "ContactLaw(spline)"


@dataclass(frozen=True)
class DynamicsConfig:
    V0: float = math.pi / 4
    law: ContactLaw = field(default_factory=lambda: ContactLaw.power(3.0))
    metric: str = "geometric"
    n: int = 256
    dt: float | None = None
    cfl: float = 1.0
    T: float = 1.0
    dealias: bool = True
    snapshot_stride: int = 1

    def __post_init__(self):
        if not self.V0 > 0:
            raise ValueError("V0 must be positive")
        if self.metric not in METRIC_MODES:
            raise ValueError(f"metric must be one of {METRIC_MODES}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.cfl > 0 or not self.T >= 0 or self.snapshot_stride < 1:
            raise ValueError("cfl > 0, T >= 0 and snapshot_stride >= 1 required")

    @property
    def r_e(self) -> float:
        return (4.0 * self.V0 / math.pi) ** (1.0 / 3.0)

    @property
    def rate_scale(self) -> float:
        """Factor turning F'(1) * (mode number) into a rate: 1/r_e or 1."""
        return 1.0 / self.r_e if self.metric == "geometric" else 1.0

    def step_size(self) -> float:
        K = self.n // 2
        dt_cfl = self.cfl / (self.law.slope_at_one * K * self.rate_scale)
        return dt_cfl if self.dt is None else min(self.dt, dt_cfl)

    def with_(self, **kw) -> "DynamicsConfig":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class Velocity:
    values: np.ndarray
    lam: float
    I: float
    flux: np.ndarray
    cond: float

    @property
    def coeffs(self):
        return to_coeffs(self.values)


def velocity(shape: ShapeFunction, config: DynamicsConfig) -> Velocity:
    """Normal-law velocity ``G(rho) = m(rho) F(-lam(rho) du/dnu)`` at the nodes."""
    sol = solve_base(shape, config.V0)
    if config.dealias:
        fine = shape.resample(2 * shape.n)
        flux = sol.flux_on(fine)
    else:
        fine, flux = shape, sol.flux
    m = boundary_frame(fine, config.metric).metric
    G = m * config.law(-sol.lam * flux)
    if config.dealias:
        G = to_samples(*to_coeffs(G), shape.n)
        flux = sol.flux
    return Velocity(G, sol.lam, sol.I, flux, sol.cond_estimate)


def radial_rhs(r: float, config: DynamicsConfig) -> float:
    """Growth rate of a centred circle of radius ``r``."""
    s = 4.0 * config.V0 / (math.pi * r**3)
    g = float(config.law(np.array([s]))[0])
    return g if config.metric == "geometric" else r * g


@dataclass
class TrajectoryRecord:
    r_e: float
    times: np.ndarray
    snapshots: list            # ShapeFunction per snapshot
    diagnostics: dict          # arrays aligned with snapshots
    halt_reason: str | None = None
    steps: int = 0

    @property
    def completed(self) -> bool:
        return self.halt_reason is None

    @property
    def final(self) -> ShapeFunction:
        return self.snapshots[-1]


DIAG_KEYS = ("lambda", "I", "g_max", "cond", "mode_0", "mode_1", "mode_2", "mode_3", "mode_4")


def _diagnostics(shape: ShapeFunction, vel: Velocity) -> dict:
    a, b = shape.coeffs
    d = {"lambda": vel.lam, "I": vel.I, "g_max": float(np.max(np.abs(vel.values))), "cond": vel.cond}
    for k in range(5):
        d[f"mode_{k}"] = float(np.hypot(a[k], b[k])) if k < a.size else 0.0
    return d


def evolve(shape0: ShapeFunction, config: DynamicsConfig) -> TrajectoryRecord:
    """Classical RK4 integration of ``rho_t = G(rho)`` up to ``config.T``.

    Failures (loss of star-shapedness, ill-conditioned solves, non-finite
    values) stop the integration and are reported in ``halt_reason``.
    """
    if shape0.n != config.n:
        shape0 = shape0.resample(config.n)
    r_e = config.r_e
    if abs(shape0.base_radius - r_e) > 1e-12 * r_e:
        raise ValueError("shape base radius must equal the equilibrium radius of V0")
    dt = config.step_size()
    n_steps = max(1, math.ceil(config.T / dt - 1e-9)) if config.T > 0 else 0
    dt = config.T / n_steps if n_steps else 0.0

    def rhs(x):
        vel = velocity(ShapeFunction(r_e, x), config)
        if not np.all(np.isfinite(vel.values)):
            raise FloatingPointError("non-finite velocity")
        return vel

    times, snaps, diags = [], [], {k: [] for k in DIAG_KEYS}

    def record(t, shape, vel):
        times.append(t)
        snaps.append(shape)
        for k, val in _diagnostics(shape, vel).items():
            diags[k].append(val)

    x = shape0.samples.copy()
    halt = None
    step = 0
    try:
        k1 = rhs(x)
        record(0.0, shape0, k1)
        for step in range(1, n_steps + 1):
            k2 = rhs(x + 0.5 * dt * k1.values)
            k3 = rhs(x + 0.5 * dt * k2.values)
            k4 = rhs(x + dt * k3.values)
            x = x + dt / 6.0 * (k1.values + 2 * k2.values + 2 * k3.values + k4.values)
            if not np.all(np.isfinite(x)):
                raise FloatingPointError("non-finite shape")
            shape = ShapeFunction(r_e, x)
            k1 = rhs(x)
            if step % config.snapshot_stride == 0 or step == n_steps:
                record(step * dt, shape, k1)
    except ShapeError as exc:
        halt = f"star-shape-loss: {exc}"
    except SolverError as exc:
        halt = f"solver-ill-conditioned: {exc}"
    except (FloatingPointError, ValueError, DropletError) as exc:
        halt = f"non-finite value: {exc}"
    if halt:
        log.warning("evolution halted at step %d: %s", step, halt)
    return TrajectoryRecord(
        r_e, np.asarray(times), snaps, {k: np.asarray(v) for k, v in diags.items()},
        halt, step if halt else n_steps,
    )


@dataclass
class EquilibriumReport:
    shape: ShapeFunction
    v: np.ndarray
    converged: bool
    iterations: int
    residuals: list
    analytic_columns: list = field(default_factory=list)

    @property
    def residual(self) -> float:
        return self.residuals[-1]


def _linear_diagonal(config: DynamicsConfig) -> np.ndarray:
    """Diagonal of DG(0) on the coefficient vector (see :mod:`droplet.linearization`)."""
    from .linearization import analytic_multipliers
    from .shape import coeff_vector

    mu = analytic_multipliers(config, config.n // 2)
    return coeff_vector(mu, mu)


def _unknowns(n: int) -> np.ndarray:
    """Coefficient-vector positions of modes 0 and 2..N/2 (mode 1 excluded)."""
    return np.r_[0, 3 : n]


def find_equilibrium(shape0: ShapeFunction, config: DynamicsConfig,
                     tol: float = 1e-10, max_iter: int = 50,
                     fd_step: float = 1e-8) -> EquilibriumReport:
    """Damped Newton on the recentred shape for ``G(rho_bar) = 0``.

    The translational modes are removed first (see
    :func:`droplet.coords.decompose`) and held at zero; the remaining
    coefficients are driven by Newton steps with a forward-difference
    Jacobian and Armijo backtracking.  The Jacobian is reused while each
    step reduces the residual at least tenfold and rebuilt otherwise.
    """
    from .coords import decompose

    r_e = config.r_e
    if shape0.n != config.n:
        shape0 = shape0.resample(config.n)
    if np.max(np.abs(shape0.samples)) > 0.1 * r_e + 1e-15:
        raise ValueError("find_equilibrium expects |rho0| <= 0.1 r_e")
    dec = decompose(shape0)
    idx = _unknowns(config.n)
    vec = dec.rho_bar.vector
    vec[1:3] = 0.0

    def residual(y):
        full = vec.copy()
        full[idx] = y
        shape = ShapeFunction.from_vector(r_e, full)
        G = velocity(shape, config).values
        return shape, G, np.max(np.abs(G))

    fallback = _linear_diagonal(config)[idx]
    analytic_cols = set()

    def jacobian(y, g):
        J = np.empty((idx.size, idx.size))
        for j in range(idx.size):
            for h in (fd_step * r_e, 1e-2 * fd_step * r_e):
                yp = y.copy()
                yp[j] += h
                try:
                    J[:, j] = (ShapeFunction(r_e, residual(yp)[1]).vector[idx] - g) / h
                    break
                except IllConditionedDomainError:
                    continue
            else:
                # high-mode probes on a visibly non-round domain exceed the basis;
                # the circle's multiplier is the natural stand-in
                J[:, j] = 0.0
                J[j, j] = fallback[j]
                analytic_cols.add(int(idx[j]))
        return J

    def line_search(y, delta, gnorm):
        alpha = 1.0
        while alpha >= 1e-6:
            try:
                cand = residual(y + alpha * delta)
            except (ShapeError, SolverError, ContactLawError):
                cand = None
            if cand is not None and cand[2] <= (1 - 1e-4 * alpha) * gnorm:
                return alpha, cand
            alpha *= 0.5
        return None, None

    y = vec[idx].copy()
    shape, G, gnorm = residual(y)
    history = [gnorm]
    it = 0
    J = None
    while gnorm > tol and it < max_iter:
        it += 1
        g = ShapeFunction(r_e, G).vector[idx]
        fresh = J is None
        if fresh:
            J = jacobian(y, g)
        alpha, cand = line_search(y, np.linalg.solve(J, -g), gnorm)
        if cand is None and not fresh:
            J = jacobian(y, g)
            fresh = True
            alpha, cand = line_search(y, np.linalg.solve(J, -g), gnorm)
        if cand is None:
            log.warning("Armijo backtracking failed at iteration %d", it)
            break
        y = y + alpha * np.linalg.solve(J, -g)
        # keep the Jacobian while the contraction is fast (chord steps)
        if cand[2] > 0.1 * gnorm:
            J = None
        shape, G, gnorm = cand
        history.append(gnorm)
    return EquilibriumReport(shape, dec.v, gnorm <= tol, it, history, sorted(analytic_cols))
