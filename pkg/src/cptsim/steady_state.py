"""Steady-state solver for the four-level sigma+ optical-pumping model.

The excited-state populations are explicit functions of the ground
state (they follow the pump adiabatically), so they are eliminated
algebraically and only ten real unknowns remain.  This avoids mixing
rate scales separated by the large factor 2*Gamma/gamma into one
matrix.

Unknown ordering (fixed; shared by :func:`assemble_linear_system` and
everything downstream):

    x[0:8] = ground populations in the order of
             ``couplings.GROUND_LEVELS``
             [(2,-2), (2,-1), (2,0), (2,+1), (2,+2), (1,-1), (1,0), (1,+1)]
    x[8]   = Re(rho21), hyperfine m=0 coherence
    x[9]   = Im(rho21)

The right-hand side carries the isotropic repopulation source
gamma_g/8 in each population row.

When ``depolarization`` is COMPLETE, every spontaneous-feed term uses
the arithmetic mean of the eight excitation expressions instead of the
individual ones; the system stays linear in the ten unknowns.

Ground populations are independent of gamma_nat (the decay rate cancels
between excitation and feed), while the excited populations returned by
:func:`excited_from_ground` scale as 1/gamma_nat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .couplings import (EXCITED_INDEX, EXCITED_IS_UPPER, EXCITED_LEVELS,
                        GROUND_INDEX, GROUND_LEVELS, build_coupling_tables)
from .errors import InvariantViolation, SingularSystem
from .params import Depolarization, LorentzFactors, ModelParams, lorentz_factors

TABLES = build_coupling_tables()

# Float views of the rational tables, laid out for vectorized assembly.
# _C[e, g]: pump-bracket coefficient of ground g feeding excited e, so that
#           gamma*rho_e = V^2*l_e * (_C[e] @ ground + _W[e]*Re(rho21)).
# _B[g, e]: branching ratio of excited e decaying into ground g.
_C = np.zeros((8, 8))
_B = np.zeros((8, 8))
_W = np.zeros(8)
for _g, _rows in TABLES.pump.items():
    for _e, _c in _rows:
        _C[EXCITED_INDEX[_e], GROUND_INDEX[_g]] = float(_c)
for _e, _rows in TABLES.branch.items():
    for _g, _b in _rows:
        _B[GROUND_INDEX[_g], EXCITED_INDEX[_e]] = float(_b)
for _e, _w in TABLES.coherence_weight.items():
    _W[EXCITED_INDEX[_e]] = 2.0 * float(_w)  # pump-scale weight

# Excitation-table views for excited_from_ground (Eq-level prefactors).
_A_EXC = np.zeros((8, 8))
_W_EXC = np.zeros(8)
for _e, _rows in TABLES.excitation.items():
    for _g, _a in _rows:
        _A_EXC[EXCITED_INDEX[_e], GROUND_INDEX[_g]] = float(_a)
for _e, _w in TABLES.coherence_weight.items():
    _W_EXC[EXCITED_INDEX[_e]] = float(_w)

_IS_UPPER = np.array(EXCITED_IS_UPPER)
_I20 = GROUND_INDEX[(2, 0)]
_I10 = GROUND_INDEX[(1, 0)]

POPULATION_TOL = 1e-12     # allowed negative excursion of ground populations
TRACE_TOL = 1e-10          # |sum(ground) - 1| bound
RESIDUAL_TOL = 1e-10       # residual bound, relative to max(1, gamma_g)
EXCITED_NEG_TOL = 1e-15    # numerical-noise floor for excited populations


@dataclass(frozen=True)
class SteadyStateSolution:
    """Solution of the steady-state system for one parameter set.

    ``excited_bare`` holds the excitation-equation values evaluated at
    the solution; ``excited_effective`` is the same distribution after
    the depolarization map (identical to bare in NONE mode).  Their
    sums agree exactly; ``rho_ee`` is that common total.
    """

    params: ModelParams
    ground: np.ndarray          # shape (8,), order of GROUND_LEVELS
    coherence: complex          # rho21 (m=0 hyperfine coherence)
    excited_bare: np.ndarray    # shape (8,), order of EXCITED_LEVELS
    excited_effective: np.ndarray
    rho_ee: float
    residual_norm: float

    def ground_population(self, f: int, m: int) -> float:
        return float(self.ground[GROUND_INDEX[(f, m)]])

    def excited_population(self, f: int, m: int, effective: bool = True) -> float:
        arr = self.excited_effective if effective else self.excited_bare
        return float(arr[EXCITED_INDEX[(f, m)]])

    def ground_as_dict(self) -> dict[tuple[int, int], float]:
        return {lvl: float(v) for lvl, v in zip(GROUND_LEVELS, self.ground)}

    def excited_as_dict(self, effective: bool = True) -> dict[tuple[int, int], float]:
        arr = self.excited_effective if effective else self.excited_bare
        return {lvl: float(v) for lvl, v in zip(EXCITED_LEVELS, arr)}


def _excitation_rates(params: ModelParams, lf: LorentzFactors):
    """Return (K, kw): gamma*rho_e = K @ ground + kw*Re(rho21)."""
    v2 = params.rabi**2
    l_e = np.where(_IS_UPPER, lf.lu, lf.ld)
    K = (v2 * l_e)[:, None] * _C
    kw = v2 * l_e * _W
    return K, kw


def assemble_linear_system(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Build the 10x10 real system A @ x = b for the unknown ordering above."""
    lf = lorentz_factors(params)
    gg = params.gamma_g
    K, kw = _excitation_rates(params, lf)

    P = params.rabi**2 * (lf.lu + lf.ld / 3.0)  # coherence pump rate
    D = lf.du + lf.dd / 3.0                     # dispersive cross-coupling

    A = np.zeros((10, 10))
    b = np.zeros(10)

    # Population rows: relaxation + pump-out on the diagonal.  The
    # pump-out of ground g is the column sum of K (all routes out).
    pump_out = K.sum(axis=0)
    A[:8, :8] = np.diag(np.full(8, gg) + pump_out)
    b[:8] = gg / 8.0

    # Spontaneous feed, entering with a minus sign on the left.
    if params.depolarization is Depolarization.COMPLETE:
        # Every ground sublevel receives gamma*mean(excited); the
        # branching matrix is doubly stochastic so the row weight is 1.
        mean_pop = K.mean(axis=0)
        mean_coh = kw.mean()
        A[:8, :8] -= mean_pop[None, :]
        A[:8, 8] -= mean_coh
    else:
        A[:8, :8] -= _B @ K
        A[:8, 8] -= _B @ kw

    # Direct coherence coupling of the two working (m=0) populations.
    A[_I20, 8] -= P / 2.0
    A[_I20, 9] -= D / 2.0
    A[_I10, 8] -= P / 2.0
    A[_I10, 9] += D / 2.0

    # Coherence equation, real and imaginary parts.
    width = gg + P / 2.0
    A[8, 8] = params.delta_raman
    A[8, 9] = -width
    A[8, _I20] = -D / 4.0
    A[8, _I10] = +D / 4.0
    A[9, 8] = width
    A[9, 9] = params.delta_raman
    A[9, _I20] = -P / 4.0
    A[9, _I10] = -P / 4.0
    return A, b


def excited_from_ground(ground: np.ndarray, coherence: complex,
                        params: ModelParams) -> np.ndarray:
    """Excited-state populations implied by a ground-state configuration.

    Implements the excitation equations directly: each sublevel is
    (2 V^2 l_e / gamma) times its excitation bracket.  (F_e=2, m=-2)
    has no sigma+ pathway and is identically zero; the two m=+1
    sublevels carry the dark-state bracket with -2*Re(rho21).
    """
    ground = np.asarray(ground, dtype=float)
    lf = lorentz_factors(params)
    l_e = np.where(_IS_UPPER, lf.lu, lf.ld)
    prefac = 2.0 * params.rabi**2 * l_e / params.gamma_nat
    return prefac * (_A_EXC @ ground + _W_EXC * coherence.real)


def depolarize(excited: np.ndarray) -> np.ndarray:
    """Replace every sublevel population with the arithmetic mean of all 8."""
    excited = np.asarray(excited, dtype=float)
    return np.full_like(excited, excited.mean())


def equation_residuals(params: ModelParams, ground: np.ndarray,
                       coherence: complex) -> np.ndarray:
    """Evaluate the steady-state equations term by term at a candidate solution.

    Returns the 10 residuals (8 population equations in GROUND_LEVELS
    order, then Re and Im of the coherence equation), each written as
    (right-hand side) - (left-hand side) of the balance form.  Unlike
    :func:`assemble_linear_system` this path goes through the explicit
    excited-state populations and the gamma-feed terms, so it exercises
    the equations in their original shape.
    """
    ground = np.asarray(ground, dtype=float)
    lf = lorentz_factors(params)
    gg = params.gamma_g
    v2 = params.rabi**2

    excited = excited_from_ground(ground, coherence, params)
    if params.depolarization is Depolarization.COMPLETE:
        fed = depolarize(excited)
    else:
        fed = excited

    res = np.zeros(10)
    for gi, g in enumerate(GROUND_LEVELS):
        pump_out = 0.0
        for e, c in TABLES.pump[g]:
            l_e = lf.lu if e[0] == 2 else lf.ld
            pump_out += float(c) * v2 * l_e
        feed = 0.0
        for e, rows in TABLES.branch.items():
            for gt, bfrac in rows:
                if gt == g:
                    feed += float(bfrac) * fed[EXCITED_INDEX[e]]
        res[gi] = (gg / 8.0 + params.gamma_nat * feed
                   - (gg + pump_out) * ground[gi])

    # Coherence cross terms in the two working-population equations.
    r, j = coherence.real, coherence.imag
    cu = v2 * lf.lu
    cd = v2 * lf.ld
    res[_I20] += 0.5 * (lf.du * j + cu * r) + (lf.dd * j + cd * r) / 6.0
    res[_I10] += -0.5 * (lf.du * j - cu * r) - (lf.dd * j - cd * r) / 6.0

    # Coherence equation.
    P = v2 * (lf.lu + lf.ld / 3.0)
    D = lf.du + lf.dd / 3.0
    s = ground[_I20] + ground[_I10]
    d = ground[_I20] - ground[_I10]
    lhs = (params.delta_raman + 1j * (gg + P / 2.0)) * coherence
    rhs = 0.25j * P * s + 0.25 * D * d
    res[8] = (rhs - lhs).real
    res[9] = (rhs - lhs).imag
    return res


def _validate_ground(x: np.ndarray, context: str = ""):
    suffix = f" ({context})" if context else ""
    if not np.all(np.isfinite(x)):
        raise SingularSystem(f"non-finite solution{suffix}")
    ground = x[..., :8]
    if ground.min() < -POPULATION_TOL or ground.max() > 1.0 + POPULATION_TOL:
        raise InvariantViolation(
            f"ground population outside [0, 1]{suffix}: "
            f"min={ground.min():.3e}, max={ground.max():.3e}")
    trace_err = np.abs(ground.sum(axis=-1) - 1.0).max()
    if trace_err > TRACE_TOL:
        raise InvariantViolation(f"ground-state trace off by {trace_err:.3e}{suffix}")


def solve_steady_state(params: ModelParams) -> SteadyStateSolution:
    """Solve the steady-state system by dense LU with partial pivoting.

    Raises SingularSystem if the matrix cannot be factorized and
    InvariantViolation if the solution breaks trace, positivity, or the
    residual bound RESIDUAL_TOL * max(1, gamma_g).
    """
    A, b = assemble_linear_system(params)
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"steady-state matrix is singular: {exc}") from exc
    _validate_ground(x)

    ground = x[:8].copy()
    coherence = complex(x[8], x[9])
    excited = excited_from_ground(ground, coherence, params)
    if excited.min() < -EXCITED_NEG_TOL:
        raise InvariantViolation(
            f"excited population below noise floor: {excited.min():.3e}")
    if params.depolarization is Depolarization.COMPLETE:
        effective = depolarize(excited)
    else:
        effective = excited.copy()

    residual_norm = float(np.abs(equation_residuals(params, ground, coherence)).max())
    bound = RESIDUAL_TOL * max(1.0, params.gamma_g)
    if residual_norm > bound:
        raise InvariantViolation(
            f"steady-state residual {residual_norm:.3e} exceeds {bound:.3e}")

    return SteadyStateSolution(
        params=params,
        ground=ground,
        coherence=coherence,
        excited_bare=excited,
        excited_effective=effective,
        rho_ee=float(excited.sum()),
        residual_norm=residual_norm,
    )


def rho_ee_many(params: ModelParams, deltas: np.ndarray) -> np.ndarray:
    """Total excited population at each Raman detuning, batched.

    One steady-state solve per sample; only the two delta entries of
    the matrix change between samples, so the systems are assembled
    once and solved with a stacked LU.  Raises with the offending
    detuning attached if any sample breaks an invariant.
    """
    deltas = np.asarray(deltas, dtype=float)
    base, b = assemble_linear_system(params.replace(delta_raman=0.0))
    A = np.broadcast_to(base, (deltas.size, 10, 10)).copy()
    A[:, 8, 8] = deltas
    A[:, 9, 9] = deltas
    try:
        rhs = np.broadcast_to(b[:, None], (deltas.size, 10, 1))
        xs = np.linalg.solve(A, rhs)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"steady-state matrix is singular: {exc}") from exc

    bad = ~np.all(np.isfinite(xs), axis=1)
    resid = np.abs(np.einsum("nij,nj->ni", A, xs) - b).max(axis=1)
    bad |= resid > RESIDUAL_TOL * max(1.0, params.gamma_g)
    bad |= np.abs(xs[:, :8].sum(axis=1) - 1.0) > TRACE_TOL
    bad |= xs[:, :8].min(axis=1) < -POPULATION_TOL
    if bad.any():
        i = int(np.argmax(bad))
        raise InvariantViolation(
            f"steady-state invariant broken at delta_raman={deltas[i]!r} rad/s")

    lf = lorentz_factors(params)
    l_e = np.where(_IS_UPPER, lf.lu, lf.ld)
    prefac = 2.0 * params.rabi**2 * l_e / params.gamma_nat
    excited = (xs[:, :8] @ _A_EXC.T + xs[:, 8:9] * _W_EXC[None, :]) * prefac[None, :]
    return excited.sum(axis=1)
