"""System models in output normal form, plus the built-in example systems.

A NormalFormModel has a chain of integrators on the first r states, a scalar
map f on the last chain state, and internal dynamics g on the remaining
states. The input enters only through f, with a uniformly sign-definite gain,
so a feedforward input realizing a desired top derivative can always be
recovered by a 1-D root solve (f_inv_solve).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Protocol, runtime_checkable

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, GainFloorViolated, NumericalBlowup
from .piecewise import PiecewisePoly, sat_poly

__all__ = [
    "VectorField",
    "NormalFormModel",
    "PlainModel",
    "InverseSystem",
    "ParameterizedPlant",
    "ConductanceParams",
    "kapitza",
    "fitzhugh_nagumo",
    "hh_conductance",
    "lorenz",
    "planar_limit_cycle",
    "leaky_integrator",
    "neuron_family",
    "NEURON_M_INF",
    "NEURON_TAU",
    "NEURON_Z_INF",
    "NEURON_M_INT",
    "finite_difference_jacobian",
]


@runtime_checkable
class VectorField(Protocol):
    """Anything the integrator can step: dimension, rhs, and a Jacobian."""

    name: str
    n: int
    state_names: tuple[str, ...]
    stiffness: float | None
    sample_box: tuple[tuple[float, float], ...]

    def rhs(self, t: float, state: np.ndarray, u: float) -> np.ndarray: ...

    def jac(self, t: float, state: np.ndarray, u: float) -> np.ndarray: ...


@dataclass(frozen=True)
class NormalFormModel:
    """Chain-of-integrators normal form with scalar input through f.

    f(t, x, z, u) returns the top chain derivative; g(t, z, x) returns the
    internal drift. f_jac returns (df/dx, df/dz, df/du) and g_jac returns
    (dg/dx, dg/dz), all evaluated at a point.
    """

    name: str
    n: int
    r: int
    f: Callable[[float, np.ndarray, np.ndarray, float], float]
    f_jac: Callable[[float, np.ndarray, np.ndarray, float], tuple[np.ndarray, np.ndarray, float]]
    g: Callable[[float, np.ndarray, np.ndarray], np.ndarray] | None = None
    g_jac: Callable[[float, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    input_gain_sign: int = 1
    input_affine: bool = True
    gain_floor: float = 1e-8
    stiffness: float | None = None
    state_names: tuple[str, ...] = ()
    sample_box: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if not 1 <= self.r <= self.n:
            raise ConfigError(f"need 1 <= r <= n, got r={self.r}, n={self.n}")
        if self.r < self.n and self.g is None:
            raise ConfigError("models with internal states need g")

    def split(self, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split a full state into (chain part x, internal part z)."""
        state = np.asarray(state, dtype=float)
        return state[: self.r], state[self.r :]

    def rhs(self, t: float, state: np.ndarray, u: float) -> np.ndarray:
        x, z = state[: self.r], state[self.r :]
        out = np.empty(self.n)
        out[: self.r - 1] = x[1:]
        out[self.r - 1] = self.f(t, x, z, u)
        if self.r < self.n:
            out[self.r :] = self.g(t, z, x)
        return out

    def eval_dynamics(self, t: float, state: np.ndarray, u: float) -> np.ndarray:
        """rhs plus a finiteness check on the result."""
        out = self.rhs(t, np.asarray(state, dtype=float), u)
        if not np.all(np.isfinite(out)):
            raise NumericalBlowup(t, f"model {self.name} produced a non-finite derivative")
        return out

    def jac(self, t: float, state: np.ndarray, u: float) -> np.ndarray:
        x, z = state[: self.r], state[self.r :]
        A = np.zeros((self.n, self.n))
        for i in range(self.r - 1):
            A[i, i + 1] = 1.0
        dfx, dfz, _ = self.f_jac(t, x, z, u)
        A[self.r - 1, : self.r] = dfx
        A[self.r - 1, self.r :] = dfz
        if self.r < self.n:
            dgx, dgz = self.g_jac(t, z, x)
            A[self.r :, : self.r] = dgx
            A[self.r :, self.r :] = dgz
        return A

    def input_gain(self, t: float, state: np.ndarray, u: float) -> float:
        x, z = self.split(state)
        return self.f_jac(t, x, z, u)[2]

    def f_inv_solve(self, t: float, x: np.ndarray, z: np.ndarray, v: float) -> float:
        """Solve f(t, x, z, u) = v for u.

        Affine models are solved directly; otherwise the sign-definite input
        gain makes f monotone in u, so a geometric bracket expansion followed
        by a root solve always lands. The answer is verified to a residual of
        1e-10 * max(1, |v|).
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        tol = 1e-10 * max(1.0, abs(v))
        _, _, g0 = self.f_jac(t, x, z, 0.0)
        if abs(g0) < self.gain_floor:
            raise GainFloorViolated(
                f"input gain {g0:.3e} below floor {self.gain_floor:.3e} for {self.name}"
            )
        f0 = self.f(t, x, z, 0.0)
        if self.input_affine:
            u = (v - f0) / g0
            if abs(self.f(t, x, z, u) - v) <= tol:
                return u
        # Monotonicity in u: expand away from 0 until the residual flips sign.
        p0 = f0 - v
        if p0 == 0.0:
            return 0.0
        phi = lambda u: self.f(t, x, z, u) - v
        direction = 1.0 if math.copysign(1.0, g0) * p0 < 0 else -1.0
        step = max(1.0, abs(p0) / max(abs(g0), self.gain_floor))
        u_edge = 0.0
        bracket = None
        for k in range(80):
            u_new = direction * step * (2.0**k)
            p_new = phi(u_new)
            if p_new == 0.0:
                return u_new
            if (p_new > 0) != (p0 > 0):
                bracket = (min(u_edge, u_new), max(u_edge, u_new))
                break
            u_edge = u_new
        if bracket is None:
            raise GainFloorViolated(
                f"no sign change while bracketing f_inv for {self.name} at t={t}"
            )
        u = brentq(phi, *bracket, xtol=1e-14, rtol=8.9e-16, maxiter=200)
        for _ in range(4):
            res = phi(u)
            if abs(res) <= tol:
                return u
            _, _, gu = self.f_jac(t, x, z, u)
            if abs(gu) < self.gain_floor:
                break
            u -= res / gu
        res = phi(u)
        if abs(res) > tol:
            raise ArithmeticError(f"f_inv residual {res:.3e} exceeds {tol:.3e}")
        return u


@dataclass(frozen=True)
class PlainModel:
    """A vector field given directly, for systems not kept in normal form."""

    name: str
    n: int
    rhs_fn: Callable[[float, np.ndarray, float], np.ndarray]
    jac_fn: Callable[[float, np.ndarray, float], np.ndarray]
    state_names: tuple[str, ...] = ()
    stiffness: float | None = None
    sample_box: tuple[tuple[float, float], ...] = ()

    def rhs(self, t: float, state: np.ndarray, u: float) -> np.ndarray:
        return self.rhs_fn(t, state, u)

    def eval_dynamics(self, t: float, state: np.ndarray, u: float) -> np.ndarray:
        out = self.rhs_fn(t, np.asarray(state, dtype=float), u)
        if not np.all(np.isfinite(out)):
            raise NumericalBlowup(t, f"model {self.name} produced a non-finite derivative")
        return out

    def jac(self, t: float, state: np.ndarray, u: float) -> np.ndarray:
        return self.jac_fn(t, state, u)


def InverseSystem(model: NormalFormModel) -> PlainModel:
    """Internal dynamics of a relative-degree-one model, driven by the output.

    The input channel of the returned field is the output y of the original
    model, so feeding a reference output simulates the stationary internal
    response used when reconstructing feedforward inputs.
    """
    if model.r != 1:
        raise ConfigError("inverse-system wrapper requires r == 1")
    if model.n == model.r:
        raise ConfigError("model has no internal states")

    def rhs(t: float, z: np.ndarray, u: float) -> np.ndarray:
        return model.g(t, z, np.array([u]))

    def jac(t: float, z: np.ndarray, u: float) -> np.ndarray:
        _, dgz = model.g_jac(t, z, np.array([u]))
        return np.asarray(dgz, dtype=float).reshape(model.n - 1, model.n - 1)

    return PlainModel(
        name=f"{model.name}-inverse",
        n=model.n - 1,
        rhs_fn=rhs,
        jac_fn=jac,
        state_names=model.state_names[1:],
        stiffness=model.stiffness,
        sample_box=model.sample_box[1:],
    )


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------


def kapitza(alpha: float = 1.0, beta: float = 1.0, gamma: float = 1.0) -> NormalFormModel:
    """Damped pendulum with torque input: ydd = -beta sin y - gamma yd + alpha u."""
    if alpha == 0.0:
        raise ConfigError("alpha must be nonzero")

    def f(t, x, z, u):
        return -beta * math.sin(x[0]) - gamma * x[1] + alpha * u

    def f_jac(t, x, z, u):
        return np.array([-beta * math.cos(x[0]), -gamma]), np.empty(0), alpha

    return NormalFormModel(
        name="kapitza",
        n=2,
        r=2,
        f=f,
        f_jac=f_jac,
        input_gain_sign=1 if alpha > 0 else -1,
        state_names=("y", "ydot"),
        sample_box=((math.pi - 2.0, math.pi + 2.0), (-3.0, 3.0)),
    )


def fitzhugh_nagumo(
    alpha: float = 1.0, beta: float = 1.0, gamma: float = 1.0, eps: float = 0.1
) -> NormalFormModel:
    """Fast-slow planar relaxation model: eps yd = a y - b y^3 - c z + u, zd = -z + y."""
    if not (alpha > 0 and beta > 0 and gamma > 0 and eps > 0):
        raise ConfigError("parameters must be positive")
    if not 2.0 * alpha < 3.0 * gamma:
        warnings.warn(
            "2*alpha >= 3*gamma: the free system may not oscillate", stacklevel=2
        )

    def f(t, x, z, u):
        y = x[0]
        return (alpha * y - beta * y**3 - gamma * z[0] + u) / eps

    def f_jac(t, x, z, u):
        y = x[0]
        return (
            np.array([(alpha - 3.0 * beta * y**2) / eps]),
            np.array([-gamma / eps]),
            1.0 / eps,
        )

    def g(t, z, x):
        return np.array([x[0] - z[0]])

    def g_jac(t, z, x):
        return np.array([[1.0]]), np.array([[-1.0]])

    return NormalFormModel(
        name="fhn",
        n=2,
        r=1,
        f=f,
        f_jac=f_jac,
        g=g,
        g_jac=g_jac,
        stiffness=eps,
        state_names=("y", "z"),
        sample_box=((-2.5, 2.5), (-1.5, 1.5)),
    )


@dataclass(frozen=True)
class ConductanceParams:
    """Two-gate conductance membrane model parameters.

    The reversal potentials must satisfy E_s < E, V_f, V_s < E_f so the fast
    gate depolarizes and the slow gate repolarizes.
    """

    g: float = 1.0
    E: float = 0.0
    gbar_f: float = 2.0
    E_f: float = 2.0
    kappa_f: float = 5.0
    V_f: float = 0.0
    gbar_s: float = 2.0
    E_s: float = -2.0
    kappa_s: float = 5.0
    V_s: float = 0.0
    eps: float = 0.01

    def __post_init__(self) -> None:
        inner = (self.E, self.V_f, self.V_s)
        if not (self.E_s < min(inner) and max(inner) < self.E_f):
            raise ConfigError("reversal ordering E_s < E, V_f, V_s < E_f violated")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")

    def membrane_current(self, y: float, z: float, u: float) -> float:
        """eps * ydot: leak plus two sigmoidal conductances plus the input."""
        t_f = math.tanh(self.kappa_f * (y - self.V_f))
        t_s = math.tanh(self.kappa_s * (z - self.V_s))
        return (
            -self.g * (y - self.E)
            - self.gbar_f * (1.0 + t_f) * (y - self.E_f)
            - self.gbar_s * (1.0 + t_s) * (y - self.E_s)
            + u
        )

    def total_conductance(self, y: float, z: float) -> float:
        """-d(membrane_current)/dy, the instantaneous total conductance."""
        t_f = math.tanh(self.kappa_f * (y - self.V_f))
        t_s = math.tanh(self.kappa_s * (z - self.V_s))
        return (
            self.g
            + self.gbar_f * (1.0 + t_f)
            + self.gbar_s * (1.0 + t_s)
            + self.gbar_f * self.kappa_f * (1.0 - t_f**2) * (y - self.E_f)
        )

    def slow_coupling(self, y: float, z: float) -> float:
        """-d(membrane_current)/dz, the gain from the slow gate into the output."""
        t_s = math.tanh(self.kappa_s * (z - self.V_s))
        return self.gbar_s * self.kappa_s * (1.0 - t_s**2) * (y - self.E_s)


def hh_conductance(params: ConductanceParams | None = None) -> NormalFormModel:
    """Conductance membrane model with first-order slow gate zd = -z + y."""
    p = params or ConductanceParams()

    def f(t, x, z, u):
        return p.membrane_current(x[0], z[0], u) / p.eps

    def f_jac(t, x, z, u):
        return (
            np.array([-p.total_conductance(x[0], z[0]) / p.eps]),
            np.array([-p.slow_coupling(x[0], z[0]) / p.eps]),
            1.0 / p.eps,
        )

    def g(t, z, x):
        return np.array([x[0] - z[0]])

    def g_jac(t, z, x):
        return np.array([[1.0]]), np.array([[-1.0]])

    return NormalFormModel(
        name="hh",
        n=2,
        r=1,
        f=f,
        f_jac=f_jac,
        g=g,
        g_jac=g_jac,
        stiffness=p.eps,
        state_names=("y", "z"),
        sample_box=((-1.6, 1.6), (-1.2, 1.2)),
    )


def lorenz(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0) -> PlainModel:
    """Lorenz field with the input added to the second state equation."""

    def rhs(t, s, u):
        x1, x2, z = s
        return np.array(
            [sigma * (x2 - x1), x1 * (rho - z) - x2 + u, x1 * x2 - beta * z]
        )

    def jac(t, s, u):
        x1, x2, z = s
        return np.array(
            [[-sigma, sigma, 0.0], [rho - z, -1.0, -x1], [x2, x1, -beta]]
        )

    return PlainModel(
        name="lorenz",
        n=3,
        rhs_fn=rhs,
        jac_fn=jac,
        state_names=("x1", "x2", "z"),
        sample_box=((-20.0, 20.0), (-25.0, 25.0), (0.0, 45.0)),
    )


def planar_limit_cycle() -> PlainModel:
    """Planar field with the unit circle as an attracting cycle of period 2 pi."""

    def rhs(t, s, u):
        x, y = s
        r = math.hypot(x, y)
        return np.array([x * (1.0 - r) - y + u, y * (1.0 - r) + x])

    def jac(t, s, u):
        x, y = s
        r = math.hypot(x, y)
        return np.array(
            [
                [1.0 - r - x * x / r, -1.0 - x * y / r],
                [1.0 - x * y / r, 1.0 - r - y * y / r],
            ]
        )

    return PlainModel(
        name="planar",
        n=2,
        rhs_fn=rhs,
        jac_fn=jac,
        state_names=("x", "y"),
        sample_box=((0.2, 1.5), (0.2, 1.5)),
    )


def leaky_integrator(tau: float = 1.0) -> PlainModel:
    """Scalar tau zd = -z + u, the textbook fading-memory system (rate -1/tau)."""
    if tau <= 0:
        raise ValueError("tau must be positive")

    def rhs(t, s, u):
        return np.array([(u - s[0]) / tau])

    def jac(t, s, u):
        return np.array([[-1.0 / tau]])

    return PlainModel(
        name="leaky-integrator",
        n=1,
        rhs_fn=rhs,
        jac_fn=jac,
        state_names=("z",),
        sample_box=((-2.0, 2.0),),
    )


# ---------------------------------------------------------------------------
# neuron plant with unknown conductance parameters
# ---------------------------------------------------------------------------

_NEURON_EPS = 0.02
_CUBIC = tuple(c / 0.343 for c in (-2.0, 0.9, 0.6, 0.068))

NEURON_M_INF = sat_poly(0.0, 1.0, _CUBIC)
NEURON_M_INF_PRIME = NEURON_M_INF.derivative()
NEURON_TAU = sat_poly(0.2, 1.0, (-40.0, 10.2))
NEURON_TAU_PRIME = NEURON_TAU.derivative()
NEURON_Z_INF = sat_poly(0.0, 1.0, (1.0 / 0.42, 0.17 / 0.42))
NEURON_Z_INF_PRIME = NEURON_Z_INF.derivative()
# Antiderivative of m_inf(y) * (y - 1), the piece of the update antiderivative
# that cannot be written with a single polynomial.
NEURON_M_INT = NEURON_M_INF.multiply_poly((1.0, -1.0)).antiderivative()


@dataclass(frozen=True)
class ParameterizedPlant:
    """Relative-degree-one plant whose output equation is linear in unknown parameters.

    eps_m * yd = eps_m * f0(t, y, z, u) + eps_m * h(y) . theta with h the
    plant regressor; zd = g(t, z, y). model(theta) instantiates the plant as
    an ordinary NormalFormModel for a fixed parameter vector.
    """

    name: str
    n: int
    m: int
    f0: Callable[[float, float, np.ndarray, float], float]
    g: Callable[[float, np.ndarray, float], np.ndarray]
    regressor: Callable[[float], np.ndarray]
    df0_dy: Callable[[float, float, np.ndarray, float], float]
    df0_dz: Callable[[float, float, np.ndarray, float], np.ndarray]
    df0_du: float
    dregressor_dy: Callable[[float], np.ndarray]
    dg_dy: Callable[[float, np.ndarray, float], np.ndarray]
    dg_dz: Callable[[float, np.ndarray, float], np.ndarray]
    update_regressor: Callable[[float], np.ndarray]
    update_antiderivative: Callable[[float], np.ndarray]
    theta_box: tuple[tuple[float, float], ...]
    stiffness: float | None = None
    state_names: tuple[str, ...] = ()
    sample_box: tuple[tuple[float, float], ...] = ()

    def model(self, theta: np.ndarray) -> NormalFormModel:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.m,):
            raise ConfigError(f"theta must have shape ({self.m},)")

        def f(t, x, z, u):
            y = x[0]
            return self.f0(t, y, z, u) + float(self.regressor(y) @ theta)

        def f_jac(t, x, z, u):
            y = x[0]
            dfy = self.df0_dy(t, y, z, u) + float(self.dregressor_dy(y) @ theta)
            return np.array([dfy]), self.df0_dz(t, y, z, u), self.df0_du

        def g(t, z, x):
            return self.g(t, z, x[0])

        def g_jac(t, z, x):
            return (
                np.asarray(self.dg_dy(t, z, x[0]), dtype=float).reshape(self.n - 1, 1),
                np.asarray(self.dg_dz(t, z, x[0]), dtype=float).reshape(
                    self.n - 1, self.n - 1
                ),
            )

        return NormalFormModel(
            name=f"{self.name}-theta",
            n=self.n,
            r=1,
            f=f,
            f_jac=f_jac,
            g=g,
            g_jac=g_jac,
            input_gain_sign=1 if self.df0_du > 0 else -1,
            stiffness=self.stiffness,
            state_names=self.state_names,
            sample_box=self.sample_box,
        )


def neuron_family() -> ParameterizedPlant:
    """Bursting-neuron plant with two unknown conductance parameters.

    0.02 yd = -2 z (y + 0.7) + 0.15 + u - (y + 0.4, m_inf(y)(y - 1)) . theta
    tau(y) zd = -z + z_inf(y), with saturated-polynomial gates.
    """
    inv_eps = 1.0 / _NEURON_EPS

    def f0(t, y, z, u):
        return inv_eps * (-2.0 * z[0] * (y + 0.7) + 0.15 + u)

    def regressor(y):
        return -inv_eps * np.array([y + 0.4, NEURON_M_INF(y) * (y - 1.0)])

    def dregressor_dy(y):
        return -inv_eps * np.array(
            [1.0, NEURON_M_INF_PRIME(y) * (y - 1.0) + NEURON_M_INF(y)]
        )

    def g(t, z, y):
        return np.array([(NEURON_Z_INF(y) - z[0]) / NEURON_TAU(y)])

    def dg_dy(t, z, y):
        tau = NEURON_TAU(y)
        dtau = NEURON_TAU_PRIME(y)
        return np.array(
            [(NEURON_Z_INF_PRIME(y) * tau - (NEURON_Z_INF(y) - z[0]) * dtau) / tau**2]
        )

    def dg_dz(t, z, y):
        return np.array([[-1.0 / NEURON_TAU(y)]])

    def update_regressor(y):
        return -np.array([y + 0.4, NEURON_M_INF(y) * (y - 1.0)])

    def update_antiderivative(y):
        return -np.array([0.5 * y**2 + 0.4 * y, NEURON_M_INT(y)])

    return ParameterizedPlant(
        name="neuron",
        n=2,
        m=2,
        f0=f0,
        g=g,
        regressor=regressor,
        df0_dy=lambda t, y, z, u: inv_eps * (-2.0 * z[0]),
        df0_dz=lambda t, y, z, u: np.array([inv_eps * (-2.0 * (y + 0.7))]),
        df0_du=inv_eps,
        dregressor_dy=dregressor_dy,
        dg_dy=dg_dy,
        dg_dz=dg_dz,
        update_regressor=update_regressor,
        update_antiderivative=update_antiderivative,
        theta_box=((0.3, 0.7), (1.1, 1.9)),
        stiffness=_NEURON_EPS,
        state_names=("y", "z"),
        sample_box=((-1.1, 1.1), (-0.1, 1.1)),
    )


def finite_difference_jacobian(
    model: VectorField, t: float, state: np.ndarray, u: float, rel_step: float = 1e-6
) -> np.ndarray:
    """Central-difference Jacobian, for checking the analytic one."""
    state = np.asarray(state, dtype=float)
    n = state.size
    J = np.empty((n, n))
    for j in range(n):
        h = rel_step * max(1.0, abs(state[j]))
        sp, sm = state.copy(), state.copy()
        sp[j] += h
        sm[j] -= h
        J[:, j] = (model.rhs(t, sp, u) - model.rhs(t, sm, u)) / (2.0 * h)
    return J
