"""Energy functional, fibering reduction, and first nonlinear eigenvalue.

The autonomous regional equation is the Euler-Lagrange equation of

    E(F) = -1/(n+2) int |F''|^(n+2) - 1/2 int F^2 + 1/(n+2) int |F|^(n+2),

evaluated here with the same second-difference stencil as the BVP solver
and a trapezoid quadrature, so that the discrete gradient of E matches
the eps = 0 discrete residual on interior nodes.

The spherical fibering writes F = r v with v on the constraint set
H_0(v) = -int |v''|^(n+2) + int |v|^(n+2) = 1; minimizing E(r v) over
r > 0 has the closed form r_0(v) = (int v^2)^(1/n) with
H(r_0, v) = -n/(2(n+2)) r_0^(n+2); the reduced functional is int v^2.

The count of critical points on an interval (-R, R) is governed by the
nonlinear eigenvalues of -(|psi''|^n psi'')'' + lambda |psi|^n psi = 0
under clamped conditions; the first one is the minimum of the Rayleigh
quotient int |psi''|^(n+2) / int |psi|^(n+2) and obeys the interval
scaling lambda_k(R) = R^(-4-2n) lambda_k(1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import minimize

from . import bvp, model
from .bvp import Profile

__all__ = [
    "EnergyReport",
    "FiberReport",
    "energy",
    "energy_gradient_pairing",
    "fiber_reduce",
    "fiber_h",
    "first_nonlinear_eigenvalue",
    "count_eigenvalues_below_one",
]


@dataclass(frozen=True)
class EnergyReport:
    bending: float   # -1/(n+2) int |F''|^(n+2)
    mass: float      # -1/2 int F^2
    source: float    # +1/(n+2) int |F|^(n+2)
    total: float


def _require_regional(params):
    if params.regime != model.REGIONAL:
        raise ValueError(
            f"variational machinery needs p = n+1, got n={params.n}, p={params.p}")


def _second_difference(profile: Profile) -> np.ndarray:
    """F'' at every node with the solver's ghost conventions."""
    h = profile.mesh.h
    ext = bvp._extended(profile.values, profile.bc)
    w = (ext[:-2] - 2.0 * ext[1:-1] + ext[2:]) / h**2
    return w[1:-1]


def _trapz(values: np.ndarray, h: float) -> float:
    return float(h * (np.sum(values) - 0.5 * (values[0] + values[-1])))


def energy(profile: Profile) -> EnergyReport:
    """Quadrature of the three energy integrals of a regional profile.

    Half-domain profiles are integrated on their even/odd extension so
    the report always refers to the full interval.
    """
    _require_regional(profile.params)
    prof = profile.full_extension()
    n = prof.params.n
    h = prof.mesh.h
    w = _second_difference(prof)
    F = prof.values
    bending = -_trapz(np.abs(w) ** (n + 2.0), h) / (n + 2.0)
    mass = -0.5 * _trapz(F * F, h)
    source = _trapz(np.abs(F) ** (n + 2.0), h) / (n + 2.0)
    return EnergyReport(bending=bending, mass=mass, source=source,
                        total=bending + mass + source)


def energy_gradient_pairing(profile: Profile, perturbation: np.ndarray) -> tuple[float, float]:
    """Directional derivative of E against the residual pairing.

    Returns (dE, pairing) where dE is the central finite difference of
    the energy along the perturbation and pairing is the trapezoid inner
    product of the eps = 0 discrete residual with the perturbation.  The
    two agree (to quadrature and differencing error) because the equation
    is the Euler-Lagrange equation of E.
    """
    _require_regional(profile.params)
    prof = profile.full_extension()
    delta = np.asarray(perturbation, dtype=float)
    if delta.shape != prof.values.shape:
        raise ValueError("perturbation must match the (extended) profile shape")
    # |w|^(n+2) is only C^(1+n) in w, so the central-difference error decays
    # like t^(1+n): the step must be small
    t = 1e-8 / max(1.0, float(np.max(np.abs(delta))))
    e_plus = energy(prof.replace(values=prof.values + t * delta)).total
    e_minus = energy(prof.replace(values=prof.values - t * delta)).total
    d_energy = (e_plus - e_minus) / (2.0 * t)
    exact = prof.replace(params=prof.params.with_eps(0.0))
    res = bvp.assemble_residual(exact)
    pairing = _trapz(res * delta, prof.mesh.h)
    return d_energy, pairing


@dataclass(frozen=True)
class FiberReport:
    h0: float            # constraint functional H_0(v)
    on_constraint: bool  # |H_0 - 1| <= 1e-6
    r0: float            # (int v^2)^(1/n)
    h_at_r0: float       # -n/(2(n+2)) r0^(n+2)
    h_tilde: float       # int v^2


def fiber_reduce(v: Profile) -> FiberReport:
    """Spherical-fibering data of a candidate constraint function."""
    _require_regional(v.params)
    prof = v.full_extension()
    n = prof.params.n
    h = prof.mesh.h
    w = _second_difference(prof)
    vals = prof.values
    if np.max(np.abs(vals)) == 0.0:
        raise ValueError("fibering needs a nontrivial v")
    h0 = -_trapz(np.abs(w) ** (n + 2.0), h) + _trapz(np.abs(vals) ** (n + 2.0), h)
    h_tilde = _trapz(vals * vals, h)
    r0 = h_tilde ** (1.0 / n)
    h_at_r0 = -n / (2.0 * (n + 2.0)) * r0 ** (n + 2.0)
    return FiberReport(h0=h0, on_constraint=abs(h0 - 1.0) <= 1e-6,
                       r0=r0, h_at_r0=h_at_r0, h_tilde=h_tilde)


def fiber_h(r: float, v: Profile) -> float:
    """H(r, v) = r^(n+2)/(n+2) - r^2/2 int v^2 for admissible v."""
    _require_regional(v.params)
    prof = v.full_extension()
    n = prof.params.n
    h_tilde = _trapz(prof.values * prof.values, prof.mesh.h)
    return r ** (n + 2.0) / (n + 2.0) - 0.5 * r * r * h_tilde


# -- first nonlinear eigenvalue ---------------------------------------------


def _curvature_matrix(m: int, h: float) -> sparse.csr_matrix:
    """Map interior values (psi_1..psi_{m-1}) to F'' at all m+1 nodes.

    Clamped conditions psi = psi' = 0 at both ends enter through the
    boundary rows w_0 = 2 psi_1 / h^2 and w_m = 2 psi_{m-1} / h^2.
    """
    rows, cols, vals = [], [], []
    inv_h2 = 1.0 / (h * h)
    for i in range(1, m):
        for j, c in ((i - 1, 1.0), (i, -2.0), (i + 1, 1.0)):
            if 1 <= j <= m - 1:
                rows.append(i)
                cols.append(j - 1)
                vals.append(c * inv_h2)
    rows += [0, m]
    cols += [0, m - 2]
    vals += [2.0 * inv_h2, 2.0 * inv_h2]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(m + 1, m - 1))


def first_nonlinear_eigenvalue(n: float, R: float, m: int = 400,
                               plateau_window: int = 50,
                               plateau_tol: float = 1e-10) -> float:
    """Minimum of the clamped Rayleigh quotient on (-R, R).

    Projected gradient descent (an L-BFGS descent on the scale-invariant
    log quotient, with the iterate renormalized through the quotient's
    homogeneity) from a positive bump.  Descent stops when the relative
    quotient decrease over plateau_window iterations falls below
    plateau_tol.  The initial bump is normalized first, so the result is
    exactly invariant under scaling of the start.
    """
    if n < 0 or R <= 0:
        raise ValueError("need n >= 0 and R > 0")
    if m < 64:
        raise ValueError("mesh too coarse")
    h = 2.0 * R / m
    y = np.linspace(-R, R, m + 1)
    W = _curvature_matrix(m, h)
    q = n + 2.0
    # trapezoid weights on the full node set
    c = np.full(m + 1, h)
    c[0] *= 0.5
    c[-1] *= 0.5
    c_int = c[1:-1]

    def split(x):
        w = W @ x
        num = float(np.sum(c * np.abs(w) ** q))
        den = float(np.sum(c_int * np.abs(x) ** q))
        return w, num, den

    def objective(x):
        w, num, den = split(x)
        grad_num = q * (W.T @ (c * np.abs(w) ** n * w))
        grad_den = q * (c_int * np.abs(x) ** n * x)
        val = math.log(num) - math.log(den)
        return val, grad_num / num - grad_den / den

    x0 = (1.0 - (y[1:-1] / R) ** 2) ** 2
    _, _, den0 = split(x0)
    x0 = x0 / den0 ** (1.0 / q)

    history = []

    def plateau(intermediate):
        x = getattr(intermediate, "x", intermediate)
        _, num, den = split(np.asarray(x))
        history.append(num / den)
        if len(history) > plateau_window:
            old = history[-plateau_window - 1]
            if abs(old - history[-1]) <= plateau_tol * abs(history[-1]):
                raise StopIteration

    try:
        fit = minimize(objective, x0, jac=True, method="L-BFGS-B",
                       callback=plateau,
                       options={"maxiter": 50000, "ftol": 1e-16, "gtol": 1e-14,
                                "maxcor": 30})
        x = fit.x
    except StopIteration:  # scipy < 1.11 would propagate
        x = None
    if x is None:
        raise RuntimeError("descent interrupted without an iterate")
    _, num, den = split(x)
    lam = num / den
    if len(history) >= plateau_window + 1:
        old = history[-plateau_window - 1]
        if abs(old - lam) > 1e-6 * abs(lam):
            raise RuntimeError(
                f"descent stagnation above tolerance: last quotient {lam:.6g}")
    return float(lam)


def count_eigenvalues_below_one(n: float, R: float, lambda1_unit: float = None,
                                m: int = 400) -> int:
    """Crude count of nonlinear eigenvalues below 1 on (-R, R).

    Uses the interval scaling law lambda_k(R) = R^(-4-2n) lambda_k(1)
    together with the gluing heuristic lambda_k(1) ~ k^(4+2n) lambda_1(1)
    (the k-th eigenfunction behaves like k copies of the first on
    subintervals of length 1/k).  Grows with R; an estimate, not a
    computation of higher eigenvalues.
    """
    if lambda1_unit is None:
        lambda1_unit = first_nonlinear_eigenvalue(n, 1.0, m)
    power = 4.0 + 2.0 * n
    return max(0, int(math.floor(R / lambda1_unit ** (1.0 / power))))
