"""Rigid-body mechanics in the extended formalism (Euclidean 3-space).

State of motion of a frame = antisymmetric rank-(2,0) tensor W with
W^(5,i) = V^i (velocity of the anchor) and W^(i,j) = eps_ijk Omega^k
(spin).  Transporting W to another point reproduces the classical
velocity-transfer rule V' = V + Omega x r, with the cross-product form
serving as the independent check, never as the implementation.

A point mass m sitting at its own anchor has the rank-(0,4) inertia

    I_{5i5j} = I_{i5j5} = m delta_ij,
    I_{i55j} = I_{5ij5} = -m delta_ij,           all other slots zero,

antisymmetric in each adjacent index pair and symmetric under swapping
the pairs.  Storage keeps one value per ordered pair of index pairs, so
those symmetries hold exactly at every operation boundary.  Kinetic
energy, momentum and force are pair contractions:

    E = 1/2 I_(GD)(TS) W^(GD) W^(TS)      (sums over ordered pairs)
    M_GD = I_GDTS W^(TS)                  P^i = M_{5i},  M^i from the dual
    dM/dt = K                             (validated along trajectories)
"""

from __future__ import annotations

import numpy as np

from .core import (
    ExtTensor,
    Frame,
    FrameKind,
    Metric,
    dual3,
    euclidean3,
    o_frame,
    undual3,
)
from .errors import ContractViolation, SchemaError, ValidationError

RIGID_TOL = 1e-9

# ordered index pairs of the 4-dimensional extended space
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_PAIR_INDEX = {pair: k for k, pair in enumerate(PAIRS)}


def _require_euclidean(metric: Metric):
    if metric.n != 3 or not np.array_equal(metric.g, np.eye(3)):
        raise ValidationError("rigid-body operations require the euclidean3 metric")


def _co_transport(from_point, to_point) -> np.ndarray:
    # covariant slot map for euclidean transport: [[I, -(to-from)], [0, 1]]
    out = np.eye(4)
    out[:3, 3] = np.asarray(from_point, dtype=float) - np.asarray(to_point, dtype=float)
    return out


class Particle:
    __slots__ = ("m", "x", "v")

    def __init__(self, m: float, x, v):
        m = float(m)
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if not (m > 0.0 and np.isfinite(m)):
            raise ValidationError("mass must be positive and finite")
        if x.shape != (3,) or v.shape != (3,):
            raise ValidationError("position and velocity must be 3-vectors")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ValidationError("position and velocity must be finite")
        self.m = m
        self.x = x.copy()
        self.v = v.copy()
        self.x.setflags(write=False)
        self.v.setflags(write=False)

    def to_dict(self) -> dict:
        return {"m": self.m, "x": self.x.tolist(), "v": self.v.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Particle":
        if not isinstance(data, dict) or not {"m", "x", "v"} <= set(data):
            raise SchemaError("particle payload needs 'm', 'x', 'v'")
        try:
            return cls(data["m"], data["x"], data["v"])
        except (ValidationError, TypeError) as exc:
            raise SchemaError(str(exc)) from exc


# ---------------------------------------------------------------------------
# force presets


class ForceModel:
    """Callable force law; subclasses are the named presets."""

    name = "none"
    conserves_momentum = True

    def forces(self, masses, xs, vs, t: float) -> np.ndarray:
        return np.zeros_like(xs)

    def potential(self, masses, xs) -> float:
        return 0.0

    def to_dict(self) -> dict:
        return {"name": self.name}

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class NoForce(ForceModel):
    name = "none"


class UniformGravity(ForceModel):
    """Constant acceleration g along ``axis`` (default: minus z)."""

    name = "uniform_gravity"
    conserves_momentum = False

    def __init__(self, g: float = 9.81, axis=(0.0, 0.0, -1.0)):
        axis = np.asarray(axis, dtype=float)
        if axis.shape != (3,):
            raise ValidationError("gravity axis must be a 3-vector")
        self.g = float(g)
        self.accel = self.g * axis

    def forces(self, masses, xs, vs, t):
        return masses[:, None] * self.accel[None, :]

    def potential(self, masses, xs):
        return -float(np.sum(masses * (xs @ self.accel)))

    def to_dict(self):
        axis = self.accel / self.g if self.g != 0.0 else self.accel
        return {"name": self.name, "g": self.g, "axis": axis.tolist()}


class PairwiseSpring(ForceModel):
    """Linear springs between every particle pair, rest length l0."""

    name = "pairwise_spring"

    def __init__(self, k: float = 1.0, rest_length: float = 0.0):
        if k < 0.0 or rest_length < 0.0:
            raise ValidationError("spring constants must be non-negative")
        self.k = float(k)
        self.rest_length = float(rest_length)

    def forces(self, masses, xs, vs, t):
        n = xs.shape[0]
        out = np.zeros_like(xs)
        for i in range(n):
            for j in range(i + 1, n):
                r = xs[i] - xs[j]
                if self.rest_length == 0.0:
                    f = -self.k * r
                else:
                    d = np.linalg.norm(r)
                    if d == 0.0:
                        raise ValidationError("coincident particles in spring force")
                    f = -self.k * (d - self.rest_length) * (r / d)
                out[i] += f
                out[j] -= f
        return out

    def potential(self, masses, xs):
        n = xs.shape[0]
        u = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                d = np.linalg.norm(xs[i] - xs[j])
                u += 0.5 * self.k * (d - self.rest_length) ** 2
        return u

    def to_dict(self):
        return {"name": self.name, "k": self.k, "rest_length": self.rest_length}


class InverseSquare(ForceModel):
    """Attractive pairwise inverse-square force with coupling G."""

    name = "inverse_square"

    def __init__(self, coupling: float = 1.0):
        if coupling <= 0.0:
            raise ValidationError("coupling must be positive")
        self.coupling = float(coupling)

    def forces(self, masses, xs, vs, t):
        n = xs.shape[0]
        out = np.zeros_like(xs)
        for i in range(n):
            for j in range(i + 1, n):
                r = xs[i] - xs[j]
                d = np.linalg.norm(r)
                if d == 0.0:
                    raise ValidationError("coincident particles in gravity force")
                f = -self.coupling * masses[i] * masses[j] * r / d**3
                out[i] += f
                out[j] -= f
        return out

    def potential(self, masses, xs):
        n = xs.shape[0]
        u = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                d = np.linalg.norm(xs[i] - xs[j])
                u -= self.coupling * masses[i] * masses[j] / d
        return u

    def to_dict(self):
        return {"name": self.name, "coupling": self.coupling}


_FORCE_PRESETS = {
    "none": NoForce,
    "uniform_gravity": UniformGravity,
    "pairwise_spring": PairwiseSpring,
    "inverse_square": InverseSquare,
}


def force_from_dict(data) -> ForceModel:
    if data is None:
        return NoForce()
    if isinstance(data, str):
        data = {"name": data}
    if not isinstance(data, dict) or "name" not in data:
        raise SchemaError("force payload must be a name or an object with 'name'")
    name = data["name"]
    if name not in _FORCE_PRESETS:
        raise SchemaError(
            f"unknown force preset {name!r}; known: {sorted(_FORCE_PRESETS)}"
        )
    kwargs = {k: v for k, v in data.items() if k != "name"}
    try:
        return _FORCE_PRESETS[name](**kwargs)
    except (TypeError, ValidationError) as exc:
        raise SchemaError(f"bad parameters for force {name!r}: {exc}") from exc


class Body:
    """A finite set of point masses plus a force law."""

    __slots__ = ("particles", "force")

    def __init__(self, particles, force: ForceModel | None = None):
        particles = tuple(particles)
        if not particles:
            raise ValidationError("a body needs at least one particle")
        for p in particles:
            if not isinstance(p, Particle):
                raise ValidationError("body entries must be Particle instances")
        self.particles = particles
        self.force = force if force is not None else NoForce()

    @property
    def n(self) -> int:
        return len(self.particles)

    @property
    def masses(self) -> np.ndarray:
        return np.array([p.m for p in self.particles])

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.x for p in self.particles])

    @property
    def velocities(self) -> np.ndarray:
        return np.array([p.v for p in self.particles])

    def with_state(self, xs, vs) -> "Body":
        ms = self.masses
        return Body(
            [Particle(ms[i], xs[i], vs[i]) for i in range(self.n)], self.force
        )

    def to_dict(self) -> dict:
        return {
            "particles": [p.to_dict() for p in self.particles],
            "force": self.force.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Body":
        if not isinstance(data, dict) or "particles" not in data:
            raise SchemaError("body payload must be an object with 'particles'")
        parts = data["particles"]
        if not isinstance(parts, list) or not parts:
            raise SchemaError("'particles' must be a non-empty list")
        try:
            return cls(
                [Particle.from_dict(p) for p in parts],
                force_from_dict(data.get("force")),
            )
        except ValidationError as exc:
            raise SchemaError(str(exc)) from exc


# ---------------------------------------------------------------------------
# velocity bivectors


def w_from_frame_motion(v_vec, omega_vec, at, metric: Metric | None = None) -> ExtTensor:
    """Velocity bivector of a frame moving with velocity V and spin Omega."""
    metric = metric or euclidean3()
    _require_euclidean(metric)
    v_vec = np.asarray(v_vec, dtype=float)
    omega_vec = np.asarray(omega_vec, dtype=float)
    if v_vec.shape != (3,) or omega_vec.shape != (3,):
        raise ValidationError("V and Omega must be 3-vectors")
    comps = np.zeros((4, 4))
    comps[:3, :3] = undual3(omega_vec, metric)
    comps[3, :3] = v_vec
    comps[:3, 3] = -v_vec
    return ExtTensor(o_frame(metric, at), 2, 0, comps)


def frame_motion_from_w(w: ExtTensor) -> tuple:
    """Unpack (V, Omega) from a velocity bivector."""
    if w.rank != (2, 0):
        raise ValidationError("expected a rank-(2,0) tensor")
    _require_euclidean(w.metric)
    if not w.is_antisymmetric(1e-12):
        raise ValidationError("velocity bivector must be antisymmetric")
    return w.comps[3, :3].copy(), dual3(w.comps[:3, :3], w.metric)


def transfer_velocity(w: ExtTensor, to_point) -> tuple:
    """(V, Omega) of the same state of motion read at another point."""
    moved = w.transport(to_point)
    return frame_motion_from_w(moved)


# ---------------------------------------------------------------------------
# inertia


class InertiaExtTensor:
    """Rank-(0,4) inertia with canonical pair storage.

    ``kmat`` is the symmetric 6x6 matrix over ordered index pairs; the
    dense components are generated from it with the pair antisymmetries
    built in, so the symmetry relations are exact by construction.
    """

    __slots__ = ("frame", "kmat")

    def __init__(self, frame: Frame, kmat):
        _require_euclidean(frame.metric)
        kmat = np.array(kmat, dtype=float)
        if kmat.shape != (6, 6):
            raise ValidationError("pair matrix must be 6x6")
        if not np.all(np.isfinite(kmat)):
            raise ValidationError("pair matrix must be finite")
        # mirror the upper triangle so pair exchange is exact
        kmat = np.triu(kmat) + np.triu(kmat, 1).T
        self.frame = frame
        self.kmat = kmat
        self.kmat.setflags(write=False)

    @property
    def dense(self) -> np.ndarray:
        comps = np.zeros((4, 4, 4, 4))
        for p, (a, b) in enumerate(PAIRS):
            for q, (c, d) in enumerate(PAIRS):
                v = self.kmat[p, q]
                comps[a, b, c, d] = v
                comps[b, a, c, d] = -v
                comps[a, b, d, c] = -v
                comps[b, a, d, c] = v
        return comps

    @property
    def tensor(self) -> ExtTensor:
        return ExtTensor(self.frame, 0, 4, self.dense)

    @classmethod
    def from_dense(cls, frame: Frame, comps) -> "InertiaExtTensor":
        comps = np.asarray(comps, dtype=float)
        if comps.shape != (4, 4, 4, 4):
            raise ValidationError("dense inertia must be 4^4")
        kmat = np.zeros((6, 6))
        for p, (a, b) in enumerate(PAIRS):
            for q, (c, d) in enumerate(PAIRS):
                kmat[p, q] = comps[a, b, c, d]
        return cls(frame, kmat)

    def transport(self, to_point) -> "InertiaExtTensor":
        tco = _co_transport(self.frame.anchor, to_point)
        dense = np.einsum(
            "ae,bf,cg,dh,efgh->abcd", tco, tco, tco, tco, self.dense, optimize=True
        )
        return InertiaExtTensor.from_dense(self.frame.at(to_point), dense)

    def __add__(self, other: "InertiaExtTensor") -> "InertiaExtTensor":
        if self.frame != other.frame:
            raise ContractViolation("inertia tensors must share a frame")
        return InertiaExtTensor(self.frame, self.kmat + other.kmat)

    def __repr__(self) -> str:
        return f"InertiaExtTensor(frame={self.frame!r})"


def particle_inertia(p: Particle, metric: Metric | None = None) -> InertiaExtTensor:
    """Inertia of a single point mass anchored at its own position."""
    metric = metric or euclidean3()
    _require_euclidean(metric)
    kmat = np.zeros((6, 6))
    for i in range(3):
        kmat[_PAIR_INDEX[(i, 3)], _PAIR_INDEX[(i, 3)]] = p.m
    return InertiaExtTensor(o_frame(metric, p.x), kmat)


def body_inertia_at(body: Body, at, metric: Metric | None = None) -> InertiaExtTensor:
    metric = metric or euclidean3()
    total = None
    for p in body.particles:
        moved = particle_inertia(p, metric).transport(at)
        total = moved if total is None else total + moved
    return total


def _pair_components(w_comps: np.ndarray) -> np.ndarray:
    return np.array([w_comps[a, b] for a, b in PAIRS])


def kinetic_energy(inertia: InertiaExtTensor, w: ExtTensor) -> float:
    """E = 1/2 sum over ordered pairs of I_(GD)(TS) W^(GD) W^(TS)."""
    if w.rank != (2, 0) or not w.is_antisymmetric(1e-12):
        raise ValidationError("expected an antisymmetric rank-(2,0) tensor")
    if inertia.frame != w.frame:
        raise ContractViolation("inertia and velocity must share an anchor")
    wp = _pair_components(w.comps)
    return 0.5 * float(wp @ inertia.kmat @ wp)


def momentum_from_inertia(inertia: InertiaExtTensor, w: ExtTensor) -> ExtTensor:
    """M_GD = I_GDTS W^(TS), expanded from pair storage."""
    if w.rank != (2, 0) or not w.is_antisymmetric(1e-12):
        raise ValidationError("expected an antisymmetric rank-(2,0) tensor")
    if inertia.frame != w.frame:
        raise ContractViolation("inertia and velocity must share an anchor")
    mp = inertia.kmat @ _pair_components(w.comps)
    comps = np.zeros((4, 4))
    for p, (a, b) in enumerate(PAIRS):
        comps[a, b] = mp[p]
        comps[b, a] = -mp[p]
    return ExtTensor(inertia.frame, 0, 2, comps)


def moment_of_inertia_block(inertia: InertiaExtTensor) -> np.ndarray:
    """Classical 3x3 moment of inertia: dualize the base-pair block."""
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[i, k, j] = -1.0
    out = np.zeros((3, 3))
    base_pairs = [(p, ab) for p, ab in enumerate(PAIRS) if ab[1] != 3]
    for p, (i, j) in base_pairs:
        for q, (k, l) in base_pairs:
            out += inertia.kmat[p, q] * np.outer(eps[i, j], eps[k, l])
    return out


def mixed_inertia_block(inertia: InertiaExtTensor) -> np.ndarray:
    """Dual of the (5,i | j,k) slots: S[i, l] = I_{5ijk} eps_(jk)l."""
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[i, k, j] = -1.0
    dense = inertia.dense
    out = np.zeros((3, 3))
    for i in range(3):
        for q, (j, k) in enumerate(PAIRS):
            if k == 3:
                continue
            out[i] += dense[3, i, j, k] * eps[j, k]
    return out


# ---------------------------------------------------------------------------
# momentum and force 2-forms


def _local_momentum_stack(masses, vs) -> np.ndarray:
    n = masses.shape[0]
    out = np.zeros((n, 4, 4))
    mv = masses[:, None] * vs
    out[:, 3, :3] = mv
    out[:, :3, 3] = -mv
    return out


def _transport_stack_to(stack: np.ndarray, xs: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Move a stack of covariant rank-2 components from xs[i] to ``at``."""
    n = stack.shape[0]
    tcos = np.tile(np.eye(4), (n, 1, 1))
    tcos[:, :3, 3] = xs - at[None, :]
    return np.einsum("nab,nbc,ndc->nad", tcos, stack, tcos, optimize=True)


def momentum_tensor(body: Body, at, method: str = "particles",
                    metric: Metric | None = None) -> ExtTensor:
    """Total momentum 2-form at ``at``.

    ``particles``: transport each particle's local form and sum (valid for
    any state).  ``rigid``: fit the shared (V, Omega), then contract the
    body inertia with the velocity bivector; requires a rigid state.
    """
    metric = metric or euclidean3()
    _require_euclidean(metric)
    at = np.asarray(at, dtype=float)
    if method == "particles":
        stack = _local_momentum_stack(body.masses, body.velocities)
        comps = _transport_stack_to(stack, body.positions, at).sum(axis=0)
        return ExtTensor(o_frame(metric, at), 0, 2, comps)
    if method == "rigid":
        v0, omega = rigid_state_fit(body, at)
        w = w_from_frame_motion(v0, omega, at, metric)
        return momentum_from_inertia(body_inertia_at(body, at, metric), w)
    raise ValidationError(f"unknown momentum method {method!r}")


def rigid_state_fit(body: Body, at) -> tuple:
    """Fit v_i = V + Omega x (x_i - at); reject non-rigid states.

    Rigidity check: pairwise separation rate (x_i - x_j).(v_i - v_j)
    must vanish to RIGID_TOL relative, and the fitted field must
    reproduce every particle velocity to the same tolerance.
    """
    xs = body.positions
    vs = body.velocities
    at = np.asarray(at, dtype=float)
    n = body.n
    scale = max(1.0, float(np.max(np.abs(vs))) * max(1.0, float(np.max(np.abs(xs)))))
    for i in range(n):
        for j in range(i + 1, n):
            rate = abs(np.dot(xs[i] - xs[j], vs[i] - vs[j]))
            if rate > RIGID_TOL * scale:
                raise ContractViolation(
                    f"state is not rigid: separation rate {rate:.3e} "
                    f"for pair ({i},{j})"
                )
    rows = np.zeros((3 * n, 6))
    rhs = vs.reshape(-1)
    for i in range(n):
        r = xs[i] - at
        rows[3 * i : 3 * i + 3, :3] = np.eye(3)
        # Omega x r = -skew(r) Omega
        sk = np.array([[0.0, -r[2], r[1]], [r[2], 0.0, -r[0]], [-r[1], r[0], 0.0]])
        rows[3 * i : 3 * i + 3, 3:] = -sk
    sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    v0, omega = sol[:3], sol[3:]
    resid = float(np.max(np.abs(rows @ sol - rhs)))
    if resid > RIGID_TOL * scale:
        raise ContractViolation(
            f"state is not rigid: velocity-field residual {resid:.3e}"
        )
    return v0, omega


def unpack_momentum(m: ExtTensor) -> tuple:
    """(P, M): linear momentum from the (5,j) slots, angular from the dual
    of the base block."""
    if m.rank != (0, 2):
        raise ValidationError("expected a rank-(0,2) tensor")
    _require_euclidean(m.metric)
    return m.comps[3, :3].copy(), dual3(m.comps[:3, :3], m.metric)


def force_tensor(body: Body, at, t: float = 0.0,
                 metric: Metric | None = None) -> ExtTensor:
    """Total force 2-form at ``at``: per-particle (F, 5) slots transported."""
    metric = metric or euclidean3()
    _require_euclidean(metric)
    at = np.asarray(at, dtype=float)
    fs = body.force.forces(body.masses, body.positions, body.velocities, t)
    stack = np.zeros((body.n, 4, 4))
    stack[:, 3, :3] = fs
    stack[:, :3, 3] = -fs
    comps = _transport_stack_to(stack, body.positions, at).sum(axis=0)
    return ExtTensor(o_frame(metric, at), 0, 2, comps)


# ---------------------------------------------------------------------------
# dynamics


def _rk4_step(force: ForceModel, masses, xs, vs, t, dt):
    def acc(x, v, tt):
        return force.forces(masses, x, v, tt) / masses[:, None]

    k1x = vs
    k1v = acc(xs, vs, t)
    k2x = vs + 0.5 * dt * k1v
    k2v = acc(xs + 0.5 * dt * k1x, k2x, t + 0.5 * dt)
    k3x = vs + 0.5 * dt * k2v
    k3v = acc(xs + 0.5 * dt * k2x, k3x, t + 0.5 * dt)
    k4x = vs + dt * k3v
    k4v = acc(xs + dt * k3x, k4x, t + dt)
    new_x = xs + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    new_v = vs + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return new_x, new_v


def step_dynamics(body: Body, dt: float, t: float = 0.0) -> Body:
    """One fixed-step RK4 update of every particle."""
    if not (dt > 0.0 and np.isfinite(dt)):
        raise ValidationError("dt must be positive and finite")
    xs, vs = _rk4_step(body.force, body.masses, body.positions, body.velocities, t, dt)
    return body.with_state(xs, vs)


class Trajectory:
    """Recorded fixed-step history plus momentum-balance diagnostics."""

    def __init__(self, body: Body, dt: float, times, xs, vs, origin,
                 p_vec, m_vec, e_kin, e_pot, mom_forms,
                 residual_total, residual_particle):
        self.body = body
        self.dt = dt
        self.times = times
        self.xs = xs
        self.vs = vs
        self.origin = origin
        self.p_vec = p_vec
        self.m_vec = m_vec
        self.e_kin = e_kin
        self.e_pot = e_pot
        self.mom_forms = mom_forms
        self.residual_total = residual_total
        self.residual_particle = residual_particle

    @property
    def e_total(self) -> np.ndarray:
        return self.e_kin + self.e_pot

    def momentum_drift(self) -> float:
        ref = self.mom_forms[0]
        scale = max(1.0, float(np.max(np.abs(ref))))
        return float(np.max(np.abs(self.mom_forms - ref[None]))) / scale

    def energy_drift(self) -> float:
        ref = self.e_total[0]
        return float(np.max(np.abs(self.e_total - ref))) / max(1.0, abs(ref))

    def write_csv(self, stream):
        import csv

        n = self.xs.shape[1]
        writer = csv.writer(stream)
        header = ["t"]
        for i in range(n):
            header += [f"x{i}_{c}" for c in "123"]
            header += [f"v{i}_{c}" for c in "123"]
        header += ["P_1", "P_2", "P_3", "M_1", "M_2", "M_3", "E_kin"]
        writer.writerow(header)
        for k in range(self.times.shape[0]):
            row = [repr(float(self.times[k]))]
            for i in range(n):
                row += [repr(float(c)) for c in self.xs[k, i]]
                row += [repr(float(c)) for c in self.vs[k, i]]
            row += [repr(float(c)) for c in self.p_vec[k]]
            row += [repr(float(c)) for c in self.m_vec[k]]
            row.append(repr(float(self.e_kin[k])))
            writer.writerow(row)


def simulate(body: Body, dt: float, steps: int, origin=None,
             with_residuals: bool = True) -> Trajectory:
    """Integrate with fixed-step RK4 and record momentum-balance residuals.

    The residual at step k compares the discrete rate of the momentum
    2-form with the force 2-form evaluated at the RK4 midpoint state:
    (M(t+dt) - M(t))/dt - K(t+dt/2).  Smooth force laws make it O(dt^2).
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    origin = np.zeros(3) if origin is None else np.asarray(origin, dtype=float)
    metric = euclidean3()
    masses = body.masses
    n = body.n

    times = np.zeros(steps + 1)
    xs = np.zeros((steps + 1, n, 3))
    vs = np.zeros((steps + 1, n, 3))
    p_vec = np.zeros((steps + 1, 3))
    m_vec = np.zeros((steps + 1, 3))
    e_kin = np.zeros(steps + 1)
    e_pot = np.zeros(steps + 1)
    mom_forms = np.zeros((steps + 1, 4, 4))
    residual_total = np.zeros(steps)
    residual_particle = np.zeros(steps)

    def per_particle_forms(x, v):
        stack = _local_momentum_stack(masses, v)
        return _transport_stack_to(stack, x, origin)

    def force_forms(x, v, tt):
        fs = body.force.forces(masses, x, v, tt)
        stack = np.zeros((n, 4, 4))
        stack[:, 3, :3] = fs
        stack[:, :3, 3] = -fs
        return _transport_stack_to(stack, x, origin)

    x, v = body.positions, body.velocities
    for k in range(steps + 1):
        times[k] = k * dt
        xs[k] = x
        vs[k] = v
        forms = per_particle_forms(x, v)
        total = forms.sum(axis=0)
        mom_forms[k] = total
        p_vec[k] = total[3, :3]
        m_vec[k] = dual3(total[:3, :3], metric)
        e_kin[k] = 0.5 * float(np.sum(masses * np.sum(v * v, axis=1)))
        e_pot[k] = body.force.potential(masses, x)
        if k == steps:
            break
        t = times[k]
        new_x, new_v = _rk4_step(body.force, masses, x, v, t, dt)
        if with_residuals:
            mid_x, mid_v = _rk4_step(body.force, masses, x, v, t, 0.5 * dt)
            k_forms = force_forms(mid_x, mid_v, t + 0.5 * dt)
            m_now = forms
            m_next = per_particle_forms(new_x, new_v)
            rate = (m_next - m_now) / dt
            diff = rate - k_forms
            residual_particle[k] = float(np.max(np.abs(diff)))
            residual_total[k] = float(np.max(np.abs(diff.sum(axis=0))))
        x, v = new_x, new_v

    return Trajectory(
        body, dt, times, xs, vs, origin, p_vec, m_vec, e_kin, e_pot,
        mom_forms, residual_total, residual_particle,
    )
