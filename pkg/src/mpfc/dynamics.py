"""The four constrained Allen-Cahn systems and their time integration.

Every model evolves N order parameters u_1..u_N on the torus by

    du_i/dt = Lap u_i - W'(u_i)/eps^2 + (coupling_i)/eps

which is the eps-scaled gradient flow of the diffuse interface energy plus a
pointwise Lagrange multiplier term that enforces an algebraic constraint.  In
this time normalization interfaces move with normal velocity equal to mean
curvature.  Writing mu_i = -eps Lap u_i + W'(u_i)/eps for the chemical
potential, the four couplings and their conserved quantities are

    SphereLL        coupling_i = lam * u_i,        lam  = sum_j u_j mu_j
                    conserves sum_j u_j^2 = 1 pointwise
    WeightedSum     coupling_i = Lam * g(u_i),     Lam  = sum_j mu_j / sum_j g(u_j)
                    conserves sum_j u_j = 1
    MeanShift       coupling_i = Lam1,             Lam1 = (1/N) sum_j mu_j
                    conserves sum_j u_j = 1
    WeightedSquare  coupling_i = Lam2 * g(u_i),    Lam2 = sum_j g(u_j) mu_j / sum_j g(u_j)^2
                    conserves sum_j k(u_j) = 1/6

with g = sqrt(2W) and k its primitive.  SphereLL with N = 3 is the
Landau-Lifshitz flow of a unit vector field written in multiplier form; for
other N the same equations are integrated but the sphere reading is formal.

Quotient multipliers degenerate where every phase sits in a well.  Cells whose
denominator falls below ``denom_floor`` get multiplier zero; this is
consistent with the formal limit because the coupling carries another factor
of g that vanishes at the same order.  The floored cell fraction is reported
so runs can detect over-flooring.

States are never clamped: overshoot outside [0, 1] is reported by the
diagnostics, not repaired, because clamping would corrupt the energy
dissipation identity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import grid as g
from .errors import (
    BlowUpError,
    ConfigurationError,
    DegenerateDenominatorError,
    ProjectionError,
    ProjectionSingularError,
)
from .grid import GridSpec, ScalarField
from .potential import SIGMA, double_well_prime, sqrt_double_well, well_primitive

__all__ = [
    "ModelKind",
    "ModelSpec",
    "PhaseField",
    "MultiplierField",
    "StepResult",
    "FlowEval",
    "chemical_potential",
    "compute_multiplier",
    "flow",
    "rhs",
    "dissipation_rate",
    "step",
    "advance",
    "project_constraint",
    "constraint_violation",
    "explicit_dt_limit",
    "max_neighbor_jump",
]

SIGMA_INV = 1.0 / SIGMA


class ModelKind(str, enum.Enum):
    SPHERE_LL = "SphereLL"
    WEIGHTED_SUM = "WeightedSum"
    MEAN_SHIFT = "MeanShift"
    WEIGHTED_SQUARE = "WeightedSquare"

    @property
    def has_quotient_multiplier(self) -> bool:
        return self in (ModelKind.WEIGHTED_SUM, ModelKind.WEIGHTED_SQUARE)


@dataclass(frozen=True)
class ModelSpec:
    """Which system to integrate, with interface width and multiplier policy."""

    kind: ModelKind
    eps: float
    n_phases: int
    denom_floor: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.n_phases < 2:
            raise ValueError(f"n_phases must be >= 2, got {self.n_phases}")
        if self.denom_floor < 0:
            raise ValueError("denom_floor must be >= 0")

    @property
    def sphere_reading_is_formal(self) -> bool:
        """The Landau-Lifshitz cross-product form needs exactly 3 phases."""
        return self.kind == ModelKind.SPHERE_LL and self.n_phases != 3


@dataclass(frozen=True)
class PhaseField:
    """N order parameters on a shared grid at one instant."""

    spec: GridSpec
    values: np.ndarray  # shape (N,) + spec.shape, frozen
    time: float = 0.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim != self.spec.d + 1 or arr.shape[1:] != self.spec.shape:
            raise ValueError(
                f"phase array must have shape (N,)+{self.spec.shape}, got {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise ValueError("phase field contains non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n_phases(self) -> int:
        return self.values.shape[0]

    @property
    def phases(self) -> tuple[ScalarField, ...]:
        return tuple(ScalarField(self.spec, self.values[i]) for i in range(self.n_phases))

    def with_values(self, values: np.ndarray, time: float | None = None) -> "PhaseField":
        return PhaseField(self.spec, values, self.time if time is None else time)


@dataclass(frozen=True)
class MultiplierField:
    """Pointwise multiplier with regularization bookkeeping."""

    values: ScalarField
    floored_fraction: float
    constraint_warning: bool = False

    @property
    def spec(self) -> GridSpec:
        return self.values.spec


class StepResult(NamedTuple):
    state: PhaseField
    dissipation_rate: float  # SIGMA^{-1} int eps |du/dt|^2 dx at the pre-step state
    floored_fraction: float


class FlowEval(NamedTuple):
    """One evaluation of the flow at a state: du/dt plus reusable pieces."""

    rhs: np.ndarray
    lap: np.ndarray
    multiplier: np.ndarray
    floored_fraction: float


def _check_state(state: PhaseField, model: ModelSpec) -> None:
    if state.n_phases != model.n_phases:
        raise ValueError(
            f"state has {state.n_phases} phases but model expects {model.n_phases}"
        )


def constraint_values(state: PhaseField, model: ModelSpec) -> np.ndarray:
    """Pointwise deviation of the model's conserved quantity from its target."""
    u = state.values
    if model.kind == ModelKind.SPHERE_LL:
        return np.sum(u * u, axis=0) - 1.0
    if model.kind == ModelKind.WEIGHTED_SQUARE:
        return np.sum(well_primitive(u), axis=0) - 1.0 / 6.0
    return np.sum(u, axis=0) - 1.0


def constraint_violation(state: PhaseField, model: ModelSpec) -> float:
    return float(np.max(np.abs(constraint_values(state, model))))


def chemical_potential(u_i: ScalarField, eps: float) -> ScalarField:
    """mu = -eps Lap u + W'(u)/eps, one component of the energy gradient."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    vals = -eps * g.laplacian_raw(u_i.values, u_i.spec.h) + double_well_prime(u_i.values) / eps
    return ScalarField(u_i.spec, vals)


class _Assembly(NamedTuple):
    lap: np.ndarray         # (N,)+shape
    mu: np.ndarray          # chemical potential per phase
    multiplier: np.ndarray  # shape = grid shape
    coupling: np.ndarray    # (N,)+shape, the multiplier term of the flow
    floored_fraction: float


def _assemble(u: np.ndarray, model: ModelSpec, spec: GridSpec) -> _Assembly:
    # Overflow in the polynomial terms is legitimate blow-up; it surfaces via
    # the finiteness check after stepping, not as numpy warnings.
    with np.errstate(over="ignore", invalid="ignore"):
        eps = model.eps
        lap = g.laplacian_raw(u, spec.h, axis_offset=1)
        mu = -eps * lap + double_well_prime(u) / eps

        if model.kind == ModelKind.SPHERE_LL:
            lam = np.sum(u * mu, axis=0)
            return _Assembly(lap, mu, lam, lam[None] * u, 0.0)

        if model.kind == ModelKind.MEAN_SHIFT:
            lam = np.mean(mu, axis=0)
            coupling = np.broadcast_to(lam[None], u.shape)
            return _Assembly(lap, mu, lam, coupling, 0.0)

        weight = sqrt_double_well(u)
        if model.kind == ModelKind.WEIGHTED_SUM:
            num = np.sum(mu, axis=0)
            den = np.sum(weight, axis=0)
        else:  # WEIGHTED_SQUARE
            num = np.sum(weight * mu, axis=0)
            den = np.sum(weight * weight, axis=0)

        floored = den < model.denom_floor
        if model.denom_floor == 0.0 and np.any(den == 0.0):
            cell = tuple(int(i) for i in np.argwhere(den == 0.0)[0])
            raise DegenerateDenominatorError(
                f"zero multiplier denominator at cell {cell} with denom_floor=0", cell
            )
        lam = np.where(floored, 0.0, num / np.where(floored, 1.0, den))
        return _Assembly(lap, mu, lam, lam[None] * weight, float(np.mean(floored)))


def compute_multiplier(state: PhaseField, model: ModelSpec) -> MultiplierField:
    """Pointwise Lagrange multiplier of the model at this state.

    Sets ``constraint_warning`` when the state is further than 1e-3 from its
    constraint manifold, since the multiplier formulas assume the constraint.
    """
    _check_state(state, model)
    asm = _assemble(state.values, model, state.spec)
    return MultiplierField(
        values=ScalarField(state.spec, np.ascontiguousarray(asm.multiplier)),
        floored_fraction=asm.floored_fraction,
        constraint_warning=constraint_violation(state, model) > 1e-3,
    )


def flow(state: PhaseField, model: ModelSpec) -> FlowEval:
    """Evaluate du/dt together with the Laplacian and multiplier it used."""
    _check_state(state, model)
    asm = _assemble(state.values, model, state.spec)
    du = (asm.coupling - asm.mu) / model.eps
    return FlowEval(du, asm.lap, asm.multiplier, asm.floored_fraction)


def rhs(state: PhaseField, model: ModelSpec) -> np.ndarray:
    """du/dt for the model, shaped like ``state.values``.

    Equals Lap u_i - W'(u_i)/eps^2 + coupling_i/eps; the eps-scaled form makes
    the sharp-interface motion law V = H hold in simulation time directly.
    """
    return flow(state, model).rhs


def dissipation_rate(state: PhaseField, model: ModelSpec, rhs_values: np.ndarray | None = None) -> float:
    """SIGMA^{-1} int eps |du/dt|^2 dx with du/dt taken from the flow."""
    if rhs_values is None:
        rhs_values = rhs(state, model)
    total = g.integrate_raw(
        np.sum(rhs_values * rhs_values, axis=0), state.spec.h, state.spec.d
    )
    return SIGMA_INV * model.eps * total


def explicit_dt_limit(spec: GridSpec, eps: float) -> float:
    """Stability policy for the explicit scheme: dt <= min(h^2/(4d), eps^2/10)."""
    h = spec.h
    return min(h * h / (4.0 * spec.d), eps * eps / 10.0)


def max_neighbor_jump(state: PhaseField) -> float:
    """Largest |u_i(x+h e_a) - u_i(x)| over phases, axes, and cells."""
    u = state.values
    worst = 0.0
    for ax in range(1, u.ndim):
        worst = max(worst, float(np.max(np.abs(np.roll(u, -1, axis=ax) - u))))
    return worst


def check_scheme(spec: GridSpec, model: ModelSpec, dt: float, scheme: str) -> None:
    """Validate scheme name and the explicit stability policy before stepping."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if scheme == "ExplicitEuler":
        limit = explicit_dt_limit(spec, model.eps)
        if dt > limit * (1.0 + 1e-12):
            raise ConfigurationError(
                f"ExplicitEuler stability policy requires dt <= {limit:.6e}, got {dt:.6e}"
            )
    elif scheme != "IMEX":
        raise ConfigurationError(f"unknown scheme {scheme!r}")


def advance(
    state: PhaseField,
    model: ModelSpec,
    dt: float,
    scheme: str,
    fe: FlowEval | None = None,
    project: bool = False,
) -> PhaseField:
    """Apply one step of the chosen scheme using a flow evaluation at ``state``."""
    check_scheme(state.spec, model, dt, scheme)
    if fe is None:
        fe = flow(state, model)
    u = state.values
    if scheme == "ExplicitEuler":
        new = u + dt * fe.rhs
    else:
        explicit = fe.rhs - fe.lap
        new = g.helmholtz_solve_raw(u + dt * explicit, 1.0, dt, state.spec, axis_offset=1)
    if not np.isfinite(new).all():
        raise BlowUpError("non-finite values after step", time=state.time + dt)
    out = PhaseField(state.spec, new, state.time + dt)
    if project:
        out = project_constraint(out, model)
    return out


def step(
    state: PhaseField,
    model: ModelSpec,
    dt: float,
    scheme: str = "IMEX",
    project: bool = False,
) -> StepResult:
    """Advance one time step.

    ``ExplicitEuler`` advances with the full right-hand side and enforces the
    stability policy ``dt <= min(h^2/(4d), eps^2/10)`` before stepping.
    ``IMEX`` treats the Laplacian implicitly through the Helmholtz solve
    (a=1, b=dt) and the potential/multiplier terms explicitly.  With
    ``project=True`` the model's constraint projection is applied to the
    result.  The returned dissipation rate is evaluated at the pre-step state.
    """
    _check_state(state, model)
    check_scheme(state.spec, model, dt, scheme)
    fe = flow(state, model)
    rate = dissipation_rate(state, model, fe.rhs)
    out = advance(state, model, dt, scheme, fe, project)
    return StepResult(out, rate, fe.floored_fraction)


def _project_weighted_square(u: np.ndarray, max_iter: int = 60, tol: float = 1e-12) -> np.ndarray:
    """Per-cell scalar shift t with sum_i k(u_i + t) = 1/6, by bisection.

    sum_i k(u_i + t) is nondecreasing in t and unbounded both ways, so a
    bracket always exists; it is located by doubling from [-0.5, 0.5].
    Cells already on the manifold keep t = 0 exactly: near wells the defect
    is quadratic in t and floating point flattens it, so bisection alone
    would wander to the plateau edge instead of staying put.
    """
    target = 1.0 / 6.0

    def f(t):
        return np.sum(well_primitive(u + t[None]), axis=0) - target

    exact = np.abs(f(np.zeros(u.shape[1:]))) <= 1e-13

    lo = np.full(u.shape[1:], -0.5)
    hi = np.full(u.shape[1:], 0.5)
    for _ in range(12):
        bad_lo = f(lo) > 0.0
        bad_hi = f(hi) < 0.0
        if not (bad_lo.any() or bad_hi.any()):
            break
        lo = np.where(bad_lo, 2.0 * lo, lo)
        hi = np.where(bad_hi, 2.0 * hi, hi)
    else:
        raise ProjectionError("bisection bracket failure in weighted-square projection")

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        high = f(mid) > 0.0
        lo = np.where(high, lo, mid)
        hi = np.where(high, mid, hi)
        if float(np.max(hi - lo)) <= tol:
            break
    else:
        raise ProjectionError(
            f"weighted-square bisection did not reach tol={tol} in {max_iter} iterations"
        )
    shift = np.where(exact, 0.0, 0.5 * (lo + hi))
    return u + shift[None]


def project_constraint(
    state: PhaseField, model: ModelSpec, max_violation: float = 0.1
) -> PhaseField:
    """Return the state projected exactly onto the model's constraint manifold.

    SphereLL normalizes radially; the sum models shift all phases by the mean
    defect; WeightedSquare solves the per-cell scalar shift by bisection.
    Raises ProjectionError when the state is further than ``max_violation``
    from the manifold (pass ``max_violation=inf`` for initial-data projection).
    """
    _check_state(state, model)
    violation = constraint_violation(state, model)
    if violation > max_violation * (1.0 + 1e-12):
        raise ProjectionError(
            f"state is {violation:.3e} from the constraint manifold "
            f"(limit {max_violation:.3e})"
        )
    u = state.values
    if model.kind == ModelKind.SPHERE_LL:
        norm = np.sqrt(np.sum(u * u, axis=0))
        if np.any(norm < 1e-150):
            raise ProjectionSingularError("zero phase vector: radial projection undefined")
        new = u / norm[None]
    elif model.kind == ModelKind.WEIGHTED_SQUARE:
        new = _project_weighted_square(u)
    else:
        defect = (np.sum(u, axis=0) - 1.0) / model.n_phases
        new = u - defect[None]
    return state.with_values(new)
