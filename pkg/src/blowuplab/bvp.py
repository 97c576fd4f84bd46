"""Finite-difference boundary-value solver for the similarity profile ODE.

All profiles live in unit-equilibrium variables, where the profile F
satisfies the regularized equation

    -[ (eps^2 + F''^2)^(n/2) F'' ]''  -  bt * y F'  -  F  +  |F|^(p-1) F = 0,

with bt = (p-1) beta = (p-(n+1)) / (2(n+2)).  At p = n+1 the drift term
vanishes identically and the equation is the autonomous regional one.
The constant states F = -1, 0, +1 are exact solutions at every (n, p).

Discretization is second-order centered differences on a uniform mesh,
with the fourth derivative built as D2 o (nonlinear flux) o D2 so the
regularized coefficient sits between the two second differences.  The
resulting Jacobian is banded with bandwidth 2.  Boundary conditions are
encoded as reflection ghosts (slope conditions) plus explicit value rows:

    dirichlet-far    F = F' = 0 at both ends of [-R, R]
    q-plateau        F = 1, F' = 0 at -R (plateau), F = F' = 0 at R
    symmetry         even reflection at 0 on [0, R], F = F' = 0 at R
    antisymmetry     odd reflection at 0 on [0, R], F = F' = 0 at R

The same module integrates the autonomous p = n+1 equation as a dynamical
system and shoots for its periodic orbits oscillating about +-1.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.optimize import root

from . import model
from .model import ProblemParams

__all__ = [
    "Mesh",
    "Profile",
    "NewtonOptions",
    "NewtonError",
    "ShootingError",
    "PeriodicOrbit",
    "EpsContinuationResult",
    "assemble_residual",
    "assemble_jacobian",
    "banded_to_dense",
    "linear_limit_residual",
    "solve_profile",
    "eps_continuation",
    "shoot_periodic_full",
    "tail_frequency_estimate",
    "save_profile",
    "load_profile",
]

BC_CHOICES = ("symmetry", "antisymmetry", "q-plateau", "dirichlet-far")
MIN_INTERVALS = 64


class NewtonError(RuntimeError):
    """Raised when the Newton iteration hits a singular Jacobian or diverges."""

    def __init__(self, message, iteration=None, best=None):
        super().__init__(message)
        self.iteration = iteration
        self.best = best


class ShootingError(RuntimeError):
    """Raised when periodic-orbit shooting fails.

    kind is one of "escape-zero", "diverged", "no-closure".
    """

    def __init__(self, message, kind):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True, eq=False)
class Mesh:
    """Strictly increasing nodes, uniform in v1 (graded is a reserved tag)."""

    nodes: np.ndarray
    spacing: str = "uniform"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("mesh needs a 1-d array of at least 2 nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")

    @staticmethod
    def uniform(a: float, b: float, m: int) -> "Mesh":
        """Uniform mesh with m intervals on [a, b]."""
        return Mesh(np.linspace(a, b, m + 1))

    @property
    def m(self) -> int:
        """Number of intervals."""
        return self.nodes.size - 1

    @property
    def h(self) -> float:
        h = float(self.nodes[1] - self.nodes[0])
        if not np.allclose(np.diff(self.nodes), h, rtol=1e-12, atol=1e-12):
            raise ValueError("stencils require a uniform mesh")
        return h


@dataclass(eq=False)
class Profile:
    """Mesh plus nodal values of a candidate profile, with solve metadata."""

    mesh: Mesh
    values: np.ndarray
    params: ProblemParams
    bc: str
    residual_norm: float = math.nan
    converged: bool = False
    newton_iters: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.mesh.nodes.shape:
            raise ValueError("values and mesh nodes must have matching shape")
        if self.bc not in BC_CHOICES:
            raise ValueError(f"bc must be one of {BC_CHOICES}, got {self.bc!r}")

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def replace(self, **kw) -> "Profile":
        return dataclasses.replace(self, **kw)

    def full_extension(self) -> "Profile":
        """Even/odd extension of a half-domain profile to [-R, R].

        Full-domain profiles are returned unchanged.
        """
        if self.bc not in ("symmetry", "antisymmetry"):
            return self
        y = self.mesh.nodes
        if abs(y[0]) > 1e-14:
            raise ValueError("half-domain profile must start at 0")
        sign = 1.0 if self.bc == "symmetry" else -1.0
        nodes = np.concatenate([-y[:0:-1], y])
        values = np.concatenate([sign * self.values[:0:-1], self.values])
        return Profile(Mesh(nodes, self.mesh.spacing), values, self.params,
                       "dirichlet-far", self.residual_norm, self.converged,
                       self.newton_iters)


# -- residual and Jacobian -------------------------------------------------


def _beta_tilde(params: ProblemParams) -> float:
    # exact zero in the regional regime so the drift term drops identically
    if params.regime == model.REGIONAL:
        return 0.0
    return model.derive_params(params).beta_tilde


def _extended(values: np.ndarray, bc: str) -> np.ndarray:
    """Node values padded with two ghost nodes per side.

    Left ghosts encode the symmetry class (even for slope conditions and
    symmetric profiles, odd for antisymmetric ones); right ghosts encode
    F' = 0 at the far boundary by mirror reflection.
    """
    ext = np.empty(values.size + 4)
    ext[2:-2] = values
    if bc == "antisymmetry":
        ext[1] = -values[1]
        ext[0] = -values[2]
    else:
        ext[1] = values[1]
        ext[0] = values[2]
    ext[-2] = values[-2]
    ext[-1] = values[-3]
    return ext


def _flux(w: np.ndarray, n: float, eps: float) -> np.ndarray:
    return (eps * eps + w * w) ** (0.5 * n) * w


def _flux_prime(w: np.ndarray, n: float, eps: float) -> np.ndarray:
    a = eps * eps + w * w
    return a ** (0.5 * n - 1.0) * (eps * eps + (n + 1.0) * w * w)


def _check_mesh(profile: Profile) -> float:
    if profile.mesh.m < MIN_INTERVALS:
        raise ValueError(f"mesh too coarse: {profile.mesh.m} < {MIN_INTERVALS} intervals")
    return profile.mesh.h


def assemble_residual(profile: Profile) -> np.ndarray:
    """Residual of the regularized equation, one row per node.

    Interior rows hold the discrete equation; boundary rows hold the bc
    value constraints (F(+-R) = 0, F(-R) = 1 for the plateau, F(0) = 0 for
    antisymmetry).  Slope conditions live in the ghost reflections used by
    the interior rows, not in rows of their own.
    """
    h = _check_mesh(profile)
    n, p, eps = profile.params.n, profile.params.p, profile.params.eps
    bt = _beta_tilde(profile.params)
    F = profile.values
    y = profile.mesh.nodes
    ext = _extended(F, profile.bc)
    w = (ext[:-2] - 2.0 * ext[1:-1] + ext[2:]) / h**2       # F'' at nodes -1..m+1
    g = _flux(w, n, eps)
    lap_g = (g[:-2] - 2.0 * g[1:-1] + g[2:]) / h**2         # (flux)'' at nodes 0..m
    dF = (ext[3:-1] - ext[1:-3]) / (2.0 * h)                # F' at nodes 0..m
    res = -lap_g - bt * y * dF - F + np.abs(F) ** (p - 1.0) * F
    _apply_bc_rows(res, F, profile.bc)
    return res


def _apply_bc_rows(res: np.ndarray, F: np.ndarray, bc: str) -> None:
    if bc == "dirichlet-far":
        res[0] = F[0]
        res[-1] = F[-1]
    elif bc == "q-plateau":
        res[0] = F[0] - 1.0
        res[-1] = F[-1]
    elif bc == "antisymmetry":
        res[0] = F[0]
        res[-1] = F[-1]
    else:  # symmetry: node 0 keeps its equation row
        res[-1] = F[-1]


def interior_slice(bc: str) -> slice:
    """Rows carrying the discrete equation (the others are bc rows)."""
    return slice(0, -1) if bc == "symmetry" else slice(1, -1)


def residual_norm(profile: Profile) -> float:
    """Max-norm of the equation rows of the residual."""
    res = assemble_residual(profile)
    return float(np.max(np.abs(res[interior_slice(profile.bc)])))


def assemble_jacobian(profile: Profile) -> np.ndarray:
    """Analytic Jacobian of assemble_residual in solve_banded layout (2, 2).

    Band storage ab[2 + i - j, j] = dres_i / dF_j.  Ghost dependencies fold
    back into columns 1, 2 (left, with the symmetry sign) and m-1 (right).
    """
    h = _check_mesh(profile)
    n, p, eps = profile.params.n, profile.params.p, profile.params.eps
    bt = _beta_tilde(profile.params)
    F = profile.values
    y = profile.mesh.nodes
    m1 = F.size
    ext = _extended(F, profile.bc)
    w = (ext[:-2] - 2.0 * ext[1:-1] + ext[2:]) / h**2
    gp = _flux_prime(w, n, eps)                              # g'(F'') at nodes -1..m+1
    h4 = h**4
    gpl, gpc, gpr = gp[:-2], gp[1:-1], gp[2:]                # nodes i-1, i, i+1
    drift = bt * y / (2.0 * h)
    c_m2 = -gpl / h4
    c_m1 = 2.0 * (gpl + gpc) / h4 + drift
    c_0 = -(gpl + 4.0 * gpc + gpr) / h4 - 1.0 + p * np.abs(F) ** (p - 1.0)
    c_p1 = 2.0 * (gpc + gpr) / h4 - drift
    c_p2 = -gpr / h4

    ab = np.zeros((5, m1))
    idx = np.arange(m1)
    for off, c in ((-2, c_m2), (-1, c_m1), (0, c_0), (1, c_p1), (2, c_p2)):
        cols = idx + off
        ok = (cols >= 0) & (cols < m1)
        ab[2 - off, cols[ok]] = c[ok]

    # ghost folds: res_1 sees node -1 via c_m2[1]; res_0 (symmetry only)
    # sees nodes -1, -2; res_{m-1} sees node m+1 via c_p2[m-1]
    sign = -1.0 if profile.bc == "antisymmetry" else 1.0
    _band_add(ab, 1, 1, sign * c_m2[1])
    if profile.bc == "symmetry":
        _band_add(ab, 0, 1, c_m1[0])
        _band_add(ab, 0, 2, c_m2[0])
    _band_add(ab, m1 - 2, m1 - 2, c_p2[m1 - 2])

    # bc value rows overwrite their equation rows
    rows = [m1 - 1] if profile.bc == "symmetry" else [0, m1 - 1]
    for i in rows:
        for off in (-2, -1, 0, 1, 2):
            j = i + off
            if 0 <= j < m1:
                ab[2 - off, j] = 0.0
        ab[2, i] = 1.0
    return ab


def _band_add(ab: np.ndarray, i: int, j: int, v: float) -> None:
    ab[2 + i - j, j] += v


def banded_to_dense(ab: np.ndarray) -> np.ndarray:
    m1 = ab.shape[1]
    J = np.zeros((m1, m1))
    for i in range(m1):
        for j in range(max(0, i - 2), min(m1, i + 3)):
            J[i, j] = ab[2 + i - j, j]
    return J


def linear_limit_residual(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """The n -> 0 linear-limit operator -D4 - (1/4) y D + I on interior nodes.

    Built from the same composed stencils as assemble_residual, with the
    n = 0 drift coefficient 1/4.  The quartic (y^4 + 24)/sqrt(24) lies in
    its continuum kernel, so applying this to it measures pure
    discretization error.  Rows within reach of the boundary ghosts are
    boundary effects and are not returned.
    """
    h = mesh.h
    F = np.asarray(values, dtype=float)
    ext = _extended(F, "dirichlet-far")
    w = (ext[:-2] - 2.0 * ext[1:-1] + ext[2:]) / h**2
    lap_w = (w[:-2] - 2.0 * w[1:-1] + w[2:]) / h**2
    dF = (ext[3:-1] - ext[1:-3]) / (2.0 * h)
    res = -lap_w - 0.25 * mesh.nodes * dF + F
    return res[2:-2]


# -- Newton solver ----------------------------------------------------------


@dataclass(frozen=True)
class NewtonOptions:
    tol: float = 1e-6
    max_iters: int = 200
    max_halvings: int = 30
    armijo: float = 1e-4


def _project_bc(values: np.ndarray, bc: str) -> np.ndarray:
    """Pin the bc value rows of a guess exactly."""
    v = np.array(values, dtype=float)
    v[-1] = 0.0
    if bc == "dirichlet-far" or bc == "antisymmetry":
        v[0] = 0.0
    elif bc == "q-plateau":
        v[0] = 1.0
    return v


def solve_profile(params: ProblemParams, guess: Profile,
                  opts: NewtonOptions = NewtonOptions()) -> Profile:
    """Damped Newton iteration on the assembled residual.

    Converged means the equation-row residual max-norm dropped to
    opts.tol.  Running out of iterations returns the best iterate with
    converged = False; a singular Jacobian or ten consecutive damped steps
    of growing length raise NewtonError.
    """
    if params.eps == 0.0 and params.n > 0.0:
        raise ValueError("eps = 0 with n > 0: degenerate equation, Newton refused")
    work = Profile(guess.mesh, _project_bc(guess.values, guess.bc), params, guess.bc)
    inter = interior_slice(work.bc)

    best_vals, best_norm, best_it = work.values.copy(), np.inf, 0
    growth_streak = 0
    prev_step = None
    for it in range(opts.max_iters):
        res = assemble_residual(work)
        rnorm = float(np.max(np.abs(res[inter])))
        if rnorm < best_norm:
            best_vals, best_norm, best_it = work.values.copy(), rnorm, it
        if rnorm <= opts.tol:
            return work.replace(residual_norm=rnorm, converged=True, newton_iters=it)
        ab = assemble_jacobian(work)
        try:
            step = solve_banded((2, 2), ab, -res)
        except np.linalg.LinAlgError as exc:
            raise NewtonError(f"singular Jacobian at iteration {it}", iteration=it,
                              best=work.replace(residual_norm=rnorm,
                                                newton_iters=it)) from exc
        if not np.all(np.isfinite(step)):
            raise NewtonError(f"singular Jacobian at iteration {it} (non-finite step)",
                              iteration=it,
                              best=work.replace(residual_norm=rnorm, newton_iters=it))
        t = 1.0
        accepted = False
        for _ in range(opts.max_halvings + 1):
            trial = work.values + t * step
            trial_res = assemble_residual(work.replace(values=trial))
            trial_norm = float(np.max(np.abs(trial_res[inter])))
            if np.isfinite(trial_norm) and trial_norm <= (1.0 - opts.armijo * t) * rnorm:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break  # stagnation: report best iterate as unconverged
        step_norm = float(np.max(np.abs(t * step)))
        if t < 1.0 and prev_step is not None and step_norm > prev_step:
            growth_streak += 1
            if growth_streak >= 10:
                raise NewtonError(
                    f"divergence: step norm grew over {growth_streak} damped steps",
                    iteration=it,
                    best=work.replace(values=best_vals, residual_norm=best_norm,
                                      newton_iters=it))
        else:
            growth_streak = 0
        prev_step = step_norm
        work = work.replace(values=trial)

    return work.replace(values=best_vals, residual_norm=best_norm,
                        converged=False, newton_iters=best_it)


@dataclass
class EpsContinuationResult:
    profile: Profile
    completed: bool
    failed_eps: Optional[float] = None
    stages: list = field(default_factory=list)


def eps_continuation(params: ProblemParams, guess: Profile, schedule) -> EpsContinuationResult:
    """Homotopy in eps: chain of solves, each warm-started from the last.

    The schedule must decrease strictly, start at eps >= 1e-2 and never go
    below the 1e-4 resolution floor.  On a stage failure the last converged
    stage is returned with the failing eps recorded.
    """
    schedule = [float(e) for e in schedule]
    if not schedule:
        raise ValueError("empty eps schedule")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    if schedule[0] < 1e-2:
        raise ValueError("eps schedule must start at or above 1e-2")
    if schedule[-1] < 1e-4:
        raise ValueError("eps schedule must stay at or above the 1e-4 floor")

    result = EpsContinuationResult(profile=guess, completed=False)
    current = guess
    last_converged = None
    for eps in schedule:
        stage_params = params.with_eps(eps)
        sol = solve_profile(stage_params, current)
        result.stages.append((eps, sol.converged, sol.residual_norm))
        if not sol.converged:
            result.failed_eps = eps
            result.profile = last_converged if last_converged is not None else sol
            return result
        current = sol
        last_converged = sol
    result.profile = last_converged
    result.completed = True
    return result


# -- tail diagnostics --------------------------------------------------------


def tail_frequency_estimate(profile: Profile) -> tuple[float, float]:
    """Measured vs predicted oscillation frequency in the far tail.

    The measured value is pi over the mean gap between consecutive zeros in
    the last 20% of the mesh; the prediction (sqrt(2)/2) eps^(-n/4) is the
    frequency of the regularization-induced linear oscillation.  Comparing
    the two tells linear tail wiggles apart from genuine interface
    oscillation.
    """
    F = profile.values
    y = profile.mesh.nodes
    k0 = int(math.floor(0.8 * F.size))
    w, yy = F[k0:], y[k0:]
    floor = 1e-12 * max(np.max(np.abs(F)), 1e-300)
    zeros = []
    for i in range(w.size - 1):
        if w[i] * w[i + 1] < 0.0 and max(abs(w[i]), abs(w[i + 1])) > floor:
            zeros.append(yy[i] + (yy[i + 1] - yy[i]) * w[i] / (w[i] - w[i + 1]))
    if len(zeros) < 3:
        raise ValueError(f"too few tail zeros: found {len(zeros)}, need >= 3")
    gaps = np.diff(zeros)
    measured = math.pi / float(np.mean(gaps))
    n, eps = profile.params.n, profile.params.eps
    predicted = (math.sqrt(2.0) / 2.0) * eps ** (-n / 4.0)
    return measured, predicted


# -- periodic orbits of the autonomous regional equation ---------------------


@dataclass(frozen=True)
class PeriodicOrbit:
    """Closed orbit of the autonomous p = n+1 equation about +-1."""

    a: float          # F at the starting minimum (about=+1 convention)
    b: float          # F'' there
    period: float
    min_val: float
    max_val: float
    about: int


def _spow(x: float, a: float) -> float:
    return math.copysign(abs(x) ** a, x)


def _orbit_rhs(n: float):
    inv = 1.0 / (n + 1.0)

    def rhs(t, u):
        F, F1, w, w1 = u
        return (F1, _spow(w, inv), w1, -F + abs(F) ** n * F)

    return rhs


def _orbit_events(about: int):
    def escaped(t, u):       # left the oscillation strip toward F = 0
        return u[0] * about - 0.02
    escaped.terminal = True

    def diverged(t, u):
        return abs(u[0]) - 8.0
    diverged.terminal = True

    return [escaped, diverged]


def _shoot_once(n: float, about: int, a: float, b: float, t_max: float = 80.0):
    """Integrate one shot; return (sol, first section return time or None).

    The section is {F' = 0} crossed in the direction that marks a minimum
    of about * F (the starting extremum type).  The initial point sits on
    the section exactly, so returns are located on the dense output by
    strict sign change rather than integrator events.
    """
    rhs = _orbit_rhs(n)
    u0 = (a, 0.0, _spow(b, n + 1.0), 0.0)
    sol = solve_ivp(rhs, (0.0, t_max), u0, method="DOP853",
                    rtol=1e-11, atol=1e-13, events=_orbit_events(about),
                    dense_output=True)
    return sol, _first_section_hit(sol, about)


def _terminal_jet(n: float, u) -> tuple:
    F, F1, w, w1 = u
    F2 = _spow(w, 1.0 / (n + 1.0))
    F3 = w1 / ((n + 1.0) * abs(F2) ** n) if F2 != 0.0 else math.inf
    return (F, F1, F2, F3)


def _zero_energy_b(a: float, n: float) -> float:
    """F''(0) > 0 with the conserved integral of the autonomous equation zero.

    The first integral is H = -w'F' + wF'' - |F''|^(n+2)/(n+2) - F^2/2
    + |F|^(n+2)/(n+2) with w = |F''|^n F''.  Orbits gluing onto compactly
    supported profiles share the level H = 0 of the interface state, which
    pins F''(0) once F(0) = a is chosen:

        (n+1)/(n+2) b^(n+2) = a^2/2 - |a|^(n+2)/(n+2).
    """
    rhs = 0.5 * a * a - abs(a) ** (n + 2.0) / (n + 2.0)
    if rhs <= 0.0:
        raise ValueError(f"no zero-energy curvature for a = {a}")
    return (rhs * (n + 2.0) / (n + 1.0)) ** (1.0 / (n + 2.0))


def _first_section_hit(sol, direction: int):
    """First strict F' = 0 crossing of the dense solution, refined by brentq."""
    from scipy.optimize import brentq

    t_end = sol.t[-1]
    ts = np.linspace(0.0, t_end, max(2000, int(400 * t_end)))
    F1 = sol.sol(ts)[1] * direction
    for i in range(1, F1.size - 1):
        if F1[i] < 0.0 and F1[i + 1] >= 0.0:
            return brentq(lambda t: sol.sol(t)[1], ts[i], ts[i + 1],
                          xtol=1e-14, rtol=8.9e-16)
    return None


def _half_period_residual(n: float, a: float):
    """F''' at the first opposite extremum of the zero-energy shot from a.

    The equation is reversible, so a shot from the symmetric jet
    (a, 0, b, 0) that reaches another symmetric jet (F' = F''' = 0) half a
    cycle later closes into a periodic orbit by reflection.
    """
    b = _zero_energy_b(a, n)
    sol, _ = _shoot_once(n, 1, a, b, t_max=40.0)
    t_half = _first_section_hit(sol, -1)
    if t_half is None:
        return None, sol
    return _terminal_jet(n, sol.sol(t_half))[3], sol


def shoot_periodic_full(n: float, about: int, a_init: float, b_init: float = None) -> PeriodicOrbit:
    """Periodic orbit of the autonomous equation oscillating about +-1.

    Shooting runs on the zero-energy manifold of the conserved first
    integral (the level shared with compactly supported profiles), where
    F''(0) is a closed form of F(0) = a and reversibility reduces closure
    to the scalar condition F'''(T/2) = 0 at the opposite extremum; a is
    then solved by bracketing + brentq from a_init.  A final 2d
    secant/Newton polish on (a, b) removes any leftover closure gap
    without assuming the zero-energy reduction, and the full jet must
    return to 1e-8 over one period.  b_init, when given, only seeds that
    polish.
    """
    if about not in (1, -1):
        raise ValueError("about must be +1 or -1")
    if a_init == about:
        raise ValueError("a_init equals the equilibrium: constant orbit rejected")
    if not (0.0 < a_init * about < 1.0):
        raise ValueError("a_init must sit strictly between 0 and the equilibrium "
                         f"{about}; got {a_init}")
    if n <= 0:
        raise ValueError("n must be positive")

    def classify_failure(sol):
        if sol.t_events[0].size:
            return ShootingError("trajectory escaped to the basin of F = 0",
                                 "escape-zero")
        if sol.t_events[1].size:
            return ShootingError("trajectory diverged", "diverged")
        return ShootingError("no section return within the integration budget",
                             "no-closure")

    a0 = a_init * about  # mirrored problem oscillates about +1

    # walk a0 into the window where the zero-energy shot reaches the
    # opposite extremum: divergence means too much curvature (lower a),
    # escape toward zero means too little (raise a)
    r0, probe = _half_period_residual(n, a0)
    for _ in range(60):
        if r0 is not None:
            break
        if probe.t_events[1].size:
            a0 *= 0.95
        elif probe.t_events[0].size:
            a0 = a0 * 1.05 + 1e-3
        else:
            raise classify_failure(probe)
        if not 0.03 < a0 < 0.999:
            raise classify_failure(probe)
        r0, probe = _half_period_residual(n, a0)
    if r0 is None:
        raise classify_failure(probe)

    # expand a sign bracket, halving the step whenever it leaves the window
    direction = -1.0 if r0 > 0.0 else 1.0
    step = 0.02
    a_prev, r_prev = a0, r0
    bracket = None
    for _ in range(100):
        a_new = a_prev + direction * step
        if not 0.03 < a_new < 0.999:
            step *= 0.5
            continue
        r_new, _ = _half_period_residual(n, a_new)
        if r_new is None:
            step *= 0.5
            continue
        if r_prev * r_new <= 0.0:
            bracket = (min(a_prev, a_new), max(a_prev, a_new))
            break
        a_prev, r_prev = a_new, r_new
    if bracket is None:
        raise ShootingError("could not bracket the symmetric return", "no-closure")
    from scipy.optimize import brentq

    a = brentq(lambda aa: _half_period_residual(n, aa)[0], *bracket,
               xtol=1e-13, rtol=8.9e-16)
    b = _zero_energy_b(a, n)

    def full_residual(x):
        aa, bb = x
        sol, t_sec = _shoot_once(n, 1, aa, bb)
        if t_sec is None:
            return np.array([10.0 + abs(aa), 10.0 + abs(bb)])
        jet = _terminal_jet(n, sol.sol(t_sec))
        return np.array([jet[0] - aa, jet[3]])

    seed_b = b if b_init is None else b_init * about
    fit = root(full_residual, np.array([a, seed_b]), method="hybr",
               options={"xtol": 1e-13})
    if fit.success and max(abs(fit.fun)) <= 1e-9:
        a, b = fit.x

    sol, t_sec = _shoot_once(n, 1, a, b)
    if t_sec is None:
        raise classify_failure(sol)
    jet0 = (a, 0.0, b, 0.0)
    jetT = _terminal_jet(n, sol.sol(t_sec))
    closure = max(abs(p - q) for p, q in zip(jet0, jetT))
    if closure > 1e-8:
        raise ShootingError(
            f"no closure within iteration budget (jet mismatch {closure:.3e})",
            "no-closure")

    period = float(t_sec)
    ts = np.linspace(0.0, period, 4001)
    Fs = sol.sol(ts)[0]
    lo_v, hi_v = float(np.min(Fs)), float(np.max(Fs))
    if about == -1:
        return PeriodicOrbit(a=-a, b=-b, period=period,
                             min_val=-hi_v, max_val=-lo_v, about=about)
    return PeriodicOrbit(a=a, b=b, period=period,
                         min_val=lo_v, max_val=hi_v, about=about)


def orbit_samples(orbit: PeriodicOrbit, n: float, num: int = 2001) -> tuple[np.ndarray, np.ndarray]:
    """Re-integrate a converged orbit and sample one period of (y, F)."""
    sol, _ = _shoot_once(n, orbit.about, orbit.a, orbit.b)
    ts = np.linspace(0.0, orbit.period, num)
    return ts, sol.sol(ts)[0]


# -- serialization ------------------------------------------------------------


def save_profile(profile: Profile, csv_path) -> Path:
    """Write `y,F` CSV at 17 significant digits plus a JSON sidecar."""
    csv_path = Path(csv_path)
    lines = ["y,F"]
    for yv, fv in zip(profile.mesh.nodes, profile.values):
        lines.append(f"{yv:.17g},{fv:.17g}")
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    meta = {
        "n": profile.params.n,
        "p": profile.params.p,
        "eps": profile.params.eps,
        "bc": profile.bc,
        "residual_norm": profile.residual_norm,
        "converged": profile.converged,
        "newton_iters": profile.newton_iters,
        "mesh": {
            "spacing": profile.mesh.spacing,
            "a": profile.mesh.nodes[0],
            "b": profile.mesh.nodes[-1],
            "intervals": profile.mesh.m,
        },
    }
    sidecar = csv_path.with_suffix(".json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                       encoding="utf-8", newline="\n")
    return sidecar


def load_profile(csv_path) -> Profile:
    """Load a profile; the residual norm is recomputed, never trusted."""
    csv_path = Path(csv_path)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    meta = json.loads(csv_path.with_suffix(".json").read_text(encoding="utf-8"))
    params = ProblemParams(n=meta["n"], p=meta["p"], eps=meta["eps"])
    prof = Profile(Mesh(data[:, 0], meta["mesh"]["spacing"]), data[:, 1],
                   params, meta["bc"], converged=meta["converged"],
                   newton_iters=meta["newton_iters"])
    return prof.replace(residual_norm=residual_norm(prof))
