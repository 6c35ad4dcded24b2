"""Derivative of an N-particle Lagrange function along motion families.

The state of motion transforms under the map with coordinate parameters
(L, a) by x -> Lx + a, v -> Lv.  Differentiating L along a one-parameter
family of such maps produces one number per family; collecting them over
the six independent pair slots gives an antisymmetric rank-(0,2) extended
tensor whose entries are gradient sums, the same shape as the force form
of the rigid-body layer, and the two agree up to sign when the Lagrangian
and the force model describe the same system.
"""

from __future__ import annotations

import numpy as np

from .core import ExtTensor, Frame, FrameKind, euclidean3, p_frame
from .errors import ContractViolation, ValidationError
from .motion import InfinitesimalMotion, exp_motion
from .rigid import (
    ForceModel,
    InverseSquare,
    NoForce,
    PairwiseSpring,
    UniformGravity,
)

ISO_TOL = 1e-10
DEFAULT_STEP = 1e-5


class StateOfMotion:
    """Positions and velocities of every particle at one instant."""

    __slots__ = ("xs", "vs", "t")

    def __init__(self, xs, vs, t: float = 0.0):
        xs = np.array(xs, dtype=float)
        vs = np.array(vs, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != 3 or xs.shape != vs.shape:
            raise ValidationError("state needs matching (N, 3) position/velocity arrays")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(vs))):
            raise ValidationError("state must be finite")
        self.xs = xs
        self.vs = vs
        self.t = float(t)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @classmethod
    def of_body(cls, body, t: float = 0.0) -> "StateOfMotion":
        return cls(body.positions, body.velocities, t)


def transform_state(state: StateOfMotion, L, a) -> StateOfMotion:
    """Move every particle by x -> Lx + a and rotate velocities by L."""
    L = np.asarray(L, dtype=float)
    a = np.asarray(a, dtype=float)
    if L.shape != (3, 3) or a.shape != (3,):
        raise ValidationError("expected a 3x3 map and a 3-vector shift")
    if np.max(np.abs(L.T @ L - np.eye(3))) > ISO_TOL:
        raise ValidationError("state transforms must be rigid (orthogonal L)")
    return StateOfMotion(state.xs @ L.T + a, state.vs @ L.T, state.t)


class LagrangianFn:
    """A Lagrange function with an optional analytic position gradient."""

    __slots__ = ("n", "_evaluate", "_grad", "label")

    def __init__(self, n: int, evaluate, grad=None, label: str = "custom"):
        if n <= 0:
            raise ValidationError("need at least one particle")
        self.n = int(n)
        self._evaluate = evaluate
        self._grad = grad
        self.label = label

    def __call__(self, state: StateOfMotion) -> float:
        if state.n != self.n:
            raise ValidationError("state particle count does not match the Lagrangian")
        return float(self._evaluate(state))

    def gradient(self, state: StateOfMotion) -> np.ndarray:
        """d L / d x per particle: analytic when available, else central
        differences with relative step 1e-5."""
        if state.n != self.n:
            raise ValidationError("state particle count does not match the Lagrangian")
        if self._grad is not None:
            return np.asarray(self._grad(state), dtype=float)
        out = np.zeros_like(state.xs)
        for ell in range(self.n):
            for i in range(3):
                h = DEFAULT_STEP * max(1.0, abs(state.xs[ell, i]))
                bumped = state.xs.copy()
                bumped[ell, i] += h
                up = self._evaluate(StateOfMotion(bumped, state.vs, state.t))
                bumped[ell, i] -= 2.0 * h
                down = self._evaluate(StateOfMotion(bumped, state.vs, state.t))
                out[ell, i] = (up - down) / (2.0 * h)
        return out


def lagrangian_from_force(
    force: ForceModel, masses, analytic: bool = True
) -> LagrangianFn:
    """Kinetic energy minus the force model's potential."""
    masses = np.asarray(masses, dtype=float)
    if masses.ndim != 1 or np.any(masses <= 0):
        raise ValidationError("masses must be a positive vector")
    n = masses.shape[0]

    def evaluate(state: StateOfMotion) -> float:
        kin = 0.5 * float(np.sum(masses[:, None] * state.vs**2))
        return kin - force.potential(masses, state.xs)

    grad = None
    if analytic:

        def grad(state: StateOfMotion) -> np.ndarray:
            return force.forces(masses, state.xs, state.vs, state.t)

    return LagrangianFn(n, evaluate, grad, label=force.name)


_PRESETS = {
    "free": NoForce,
    "uniform_gravity": UniformGravity,
    "pairwise_spring": PairwiseSpring,
    "inverse_square": InverseSquare,
}


def lagrangian_preset(
    name: str, masses, analytic: bool = True, **params
) -> LagrangianFn:
    if name not in _PRESETS:
        raise ValidationError(f"unknown Lagrangian preset {name!r}")
    return lagrangian_from_force(_PRESETS[name](**params), masses, analytic=analytic)


def dh_L(
    lagr: LagrangianFn,
    state: StateOfMotion,
    family: InfinitesimalMotion,
    h: float = DEFAULT_STEP,
) -> float:
    """Derivative of L along the family, by central differences in the
    family parameter: the state is pushed through the inverse finite map."""
    if h <= 0:
        raise ValidationError("step must be positive")
    frame = p_frame(euclidean3(), np.zeros(3))
    values = []
    for sign in (+1.0, -1.0):
        params = exp_motion(family, sign * h, frame).params
        values.append(lagr(transform_state(state, params.L, params.a)))
    return (values[0] - values[1]) / (2.0 * h)


def dl_form(lagr: LagrangianFn, state: StateOfMotion, chart: Frame) -> ExtTensor:
    """Pair-slot derivatives of L as an antisymmetric rank-(0,2) tensor.

    Shift slots carry the summed gradient, base slots the moment of the
    gradient about the chart origin; velocities never enter.
    """
    if chart.kind is not FrameKind.P_BASIS:
        raise ContractViolation("the derivative form is written in a p-basis")
    if chart.metric.n != 3:
        raise ValidationError("Lagrangian states live over the 3d preset")
    grads = lagr.gradient(state)
    arms = state.xs - chart.anchor
    comps = np.zeros((4, 4))
    total = grads.sum(axis=0)
    for i in range(3):
        comps[i, 3] = total[i]
        comps[3, i] = -total[i]
    for i in range(3):
        for j in range(i + 1, 3):
            val = float(np.sum(arms[:, j] * grads[:, i] - arms[:, i] * grads[:, j]))
            comps[i, j] = val
            comps[j, i] = -val
    return ExtTensor(chart, 0, 2, comps)


def pair_contraction(form: ExtTensor, arg: ExtTensor) -> float:
    """Sum of form entries against the independent slots of a bivector."""
    if form.rank != (0, 2) or arg.rank != (2, 0):
        raise ValidationError("need a 2-form and a bivector")
    if form.frame != arg.frame:
        raise ContractViolation("form and argument frames disagree")
    dim = form.metric.dim
    total = 0.0
    for A in range(dim):
        for B in range(A + 1, dim):
            total += form.comps[A, B] * arg.comps[A, B]
    return total


def k_identity_check(lagr: LagrangianFn, body, origin) -> float:
    """Max-norm of dl_form + force form for a matching body and Lagrangian."""
    from .rigid import force_tensor

    if body.n != lagr.n:
        raise ValidationError("body and Lagrangian particle counts differ")
    origin = np.asarray(origin, dtype=float)
    chart = p_frame(euclidean3(), origin)
    state = StateOfMotion.of_body(body)
    form = dl_form(lagr, state, chart)
    force = force_tensor(body, origin, t=state.t)
    return float(np.max(np.abs(form.comps + force.comps)))
