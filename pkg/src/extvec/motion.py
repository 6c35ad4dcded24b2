"""Motions of flat space represented as extended (1,1) tensors.

A finite motion with coordinate map x' = L x + a (L a g-isometry) acts on
the self-parallel basis of a chart as an invertible (1,1) tensor whose
matrix, written in that p-basis, is

        [ L^-1      0 ]
    C = [             ]      (fifth column fixed: the extra direction
        [ (g a)^T   1 ]       is invariant under every motion)

Composition of motions is the matrix product; the group is generated by
the antisymmetric pair basis

    (M_KL)^A_B = delta^A_L ghat_KB - delta^A_K ghat_LB,   ghat = diag(g, 0),

and an infinitesimal motion with rates (omega, adot) exponentiates to
C(t) = expm(-S t) where S is the generator combination of the associated
extended bivector.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .core import (
    ExtTensor,
    Frame,
    FrameKind,
    Metric,
    p_frame,
)
from .errors import ContractViolation, SchemaError, ValidationError

ISO_TOL = 1e-10
_EXP_GUARD = 250.0


class MotionParams:
    """Coordinate-map parameters (L, a) with L an isometry of g."""

    __slots__ = ("L", "a")

    def __init__(self, L, a, metric: Metric | None = None):
        L = np.asarray(L, dtype=float)
        a = np.asarray(a, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValidationError("L must be square")
        if a.shape != (L.shape[0],):
            raise ValidationError("a must be a base vector matching L")
        if not (np.all(np.isfinite(L)) and np.all(np.isfinite(a))):
            raise ValidationError("motion parameters must be finite")
        if metric is not None:
            if metric.n != L.shape[0]:
                raise ValidationError("parameter dimension does not match metric")
            defect = np.max(np.abs(L.T @ metric.g @ L - metric.g))
            if defect > ISO_TOL:
                raise ValidationError(
                    f"L is not a g-isometry (residual {defect:.3e} > {ISO_TOL})"
                )
        self.L = L
        self.a = a
        self.L.setflags(write=False)
        self.a.setflags(write=False)

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def to_dict(self) -> dict:
        return {"L": self.L.tolist(), "a": self.a.tolist()}

    @classmethod
    def from_dict(cls, data: dict, metric: Metric | None = None) -> "MotionParams":
        if not isinstance(data, dict) or "L" not in data or "a" not in data:
            raise SchemaError("motion payload must be an object with 'L' and 'a'")
        try:
            return cls(data["L"], data["a"], metric=metric)
        except ValidationError as exc:
            raise SchemaError(str(exc)) from exc

    def __repr__(self) -> str:
        return f"MotionParams(L={self.L.tolist()}, a={self.a.tolist()})"


def compose_params(p1: MotionParams, p2: MotionParams) -> MotionParams:
    """Parameters of the motion acting as p1 after p2 on tensors, which is
    the coordinate map of p1 followed by p2: (L2 L1, L2 a1 + a2)."""
    if p1.n != p2.n:
        raise ValidationError("parameter dimensions differ")
    return MotionParams(p2.L @ p1.L, p2.L @ p1.a + p2.a)


class MotionTensor:
    """A finite motion written as an extended (1,1) tensor in a p-basis."""

    __slots__ = ("frame", "comps")

    def __init__(self, frame: Frame, comps):
        if frame.kind is not FrameKind.P_BASIS:
            raise ContractViolation("motion tensors live in a p-basis frame")
        comps = np.array(comps, dtype=float)
        metric = frame.metric
        n, dim = metric.n, metric.dim
        if comps.shape != (dim, dim):
            raise ValidationError(f"components must be {dim}x{dim}")
        if not np.all(np.isfinite(comps)):
            raise ValidationError("components must be finite")
        col5 = np.zeros(dim)
        col5[n] = 1.0
        if np.max(np.abs(comps[:, n] - col5)) > ISO_TOL:
            raise ValidationError("fifth column must fix the extra direction")
        lam = comps[:n, :n]
        defect = np.max(np.abs(lam.T @ metric.g @ lam - metric.g))
        if defect > ISO_TOL:
            raise ValidationError(
                f"base block is not a g-isometry (residual {defect:.3e})"
            )
        self.frame = frame
        self.comps = comps
        self.comps.setflags(write=False)

    @property
    def metric(self) -> Metric:
        return self.frame.metric

    @property
    def base_block(self) -> np.ndarray:
        """Lambda = L^-1, the action on base directions."""
        n = self.metric.n
        return self.comps[:n, :n]

    @property
    def params(self) -> MotionParams:
        """Recover the coordinate-map parameters (L, a)."""
        n = self.metric.n
        L = np.linalg.inv(self.base_block)
        a = self.metric.g_inv @ self.comps[n, :n]
        return MotionParams(L, a)

    @property
    def tensor(self) -> ExtTensor:
        return ExtTensor(self.frame, 1, 1, self.comps)

    def inverse(self) -> "MotionTensor":
        """Block closed form: fifth row of the inverse is -(g a)^T L."""
        n = self.metric.n
        lam_inv = np.linalg.inv(self.base_block)
        out = np.eye(self.metric.dim)
        out[:n, :n] = lam_inv
        out[n, :n] = -self.comps[n, :n] @ lam_inv
        return MotionTensor(self.frame, out)

    def contravariant_rep(self) -> np.ndarray:
        """Components after moving to the contravariant p-basis on both
        slots: diag(g,1) C diag(g^-1,1)."""
        m = self.metric
        return m.lower_ext() @ self.comps @ m.raise_ext()

    def __repr__(self) -> str:
        return f"MotionTensor(frame={self.frame!r})"


def t_from_params(params: MotionParams, frame: Frame) -> MotionTensor:
    metric = frame.metric
    if params.n != metric.n:
        raise ValidationError("parameter dimension does not match frame metric")
    defect = np.max(np.abs(params.L.T @ metric.g @ params.L - metric.g))
    if defect > ISO_TOL:
        raise ValidationError(
            f"L is not a g-isometry (residual {defect:.3e} > {ISO_TOL})"
        )
    n, dim = metric.n, metric.dim
    comps = np.eye(dim)
    comps[:n, :n] = np.linalg.inv(params.L)
    comps[n, :n] = metric.g @ params.a
    return MotionTensor(frame, comps)


def apply_motion(t: MotionTensor, v: ExtTensor) -> ExtTensor:
    """Act on a vector (comps forward) or a 1-form (reverse action)."""
    if v.frame != t.frame:
        raise ContractViolation("operand frame differs; re-express it first")
    if v.rank == (1, 0):
        return ExtTensor(v.frame, 1, 0, t.comps @ v.comps)
    if v.rank == (0, 1):
        # the natural slot contraction sends the transformed dual basis
        # back to the original one
        return ExtTensor(v.frame, 0, 1, t.comps.T @ v.comps)
    raise ValidationError("apply_motion expects rank (1,0) or (0,1)")


def compose(t1: MotionTensor, t2: MotionTensor) -> MotionTensor:
    """Motion acting as t2 first, then t1; the matrix product t1 t2."""
    if t1.frame != t2.frame:
        raise ContractViolation("motions must share a frame")
    return MotionTensor(t1.frame, t1.comps @ t2.comps)


class InfinitesimalMotion:
    """Rates (omega, adot): omega stored with both indices down and exact
    antisymmetry, adot a base vector."""

    __slots__ = ("omega", "a")

    def __init__(self, omega, a):
        omega = np.asarray(omega, dtype=float)
        a = np.asarray(a, dtype=float)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
            raise ValidationError("omega must be square")
        if a.shape != (omega.shape[0],):
            raise ValidationError("adot must match omega's dimension")
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(a))):
            raise ValidationError("rates must be finite")
        if not np.array_equal(omega, -omega.T):
            raise ValidationError("omega must be exactly antisymmetric")
        self.omega = omega
        self.a = a
        self.omega.setflags(write=False)
        self.a.setflags(write=False)

    @property
    def n(self) -> int:
        return self.omega.shape[0]


def skew_from_upper(upper: np.ndarray) -> np.ndarray:
    """Build an exactly antisymmetric matrix from the strict upper triangle."""
    u = np.triu(np.asarray(upper, dtype=float), 1)
    return u - u.T


def generators(metric: Metric) -> np.ndarray:
    """Extended pair generators G[K,L,A,B] = (M_KL)^A_B built on diag(g, 0)."""
    dim = metric.dim
    ghat = metric.degenerate_ext()
    delta = np.eye(dim)
    return np.einsum("al,kb->klab", delta, ghat) - np.einsum(
        "ak,lb->klab", delta, ghat
    )


def base_generators(metric: Metric) -> np.ndarray:
    """Base-space pair generators (M_mn)^a_b = delta^a_n g_mb - delta^a_m g_nb."""
    n = metric.n
    delta = np.eye(n)
    return np.einsum("an,mb->mnab", delta, metric.g) - np.einsum(
        "am,nb->mnab", delta, metric.g
    )


def r_from_infinitesimal(m: InfinitesimalMotion, frame: Frame) -> ExtTensor:
    """Extended bivector of the rates: base block omega with both indices
    raised, (a,5) slots carrying adot."""
    metric = frame.metric
    if m.n != metric.n:
        raise ValidationError("rate dimension does not match frame metric")
    if frame.kind is not FrameKind.P_BASIS:
        raise ContractViolation("rate bivectors are written in a p-basis")
    n = metric.n
    comps = np.zeros((metric.dim, metric.dim))
    comps[:n, :n] = metric.g_inv @ m.omega @ metric.g_inv
    comps[:n, n] = m.a
    comps[n, :n] = -m.a
    return ExtTensor(frame, 2, 0, comps)


def infinitesimal_from_bivector(r: ExtTensor, tol: float = 1e-12) -> InfinitesimalMotion:
    """Inverse of :func:`r_from_infinitesimal`."""
    if r.rank != (2, 0):
        raise ValidationError("expected a rank-(2,0) bivector")
    if not r.is_antisymmetric(tol):
        raise ValidationError("bivector must be antisymmetric")
    metric = r.metric
    n = metric.n
    omega = metric.g @ r.comps[:n, :n] @ metric.g
    omega = np.triu(omega, 1) - np.triu(omega, 1).T
    return InfinitesimalMotion(omega, r.comps[:n, n])


def s_from_r(r: ExtTensor) -> ExtTensor:
    """Mixed generator combination S^A_B = -1/2 R^KL (M_KL)^A_B."""
    if r.rank != (2, 0):
        raise ValidationError("expected a rank-(2,0) bivector")
    if not r.is_antisymmetric(1e-12):
        raise ValidationError("bivector must be antisymmetric")
    gens = generators(r.metric)
    comps = -0.5 * np.einsum("kl,klab->ab", r.comps, gens)
    return ExtTensor(r.frame, 1, 1, comps)


def exp_motion(m: InfinitesimalMotion, t: float, frame: Frame) -> MotionTensor:
    """Finite motion after time t at constant rates: expm(-S t).

    Zero omega short-circuits to the exact translation by t*adot.
    """
    metric = frame.metric
    if not np.isfinite(t):
        raise ValidationError("time must be finite")
    n = metric.n
    if not np.any(m.omega):
        comps = np.eye(metric.dim)
        comps[n, :n] = metric.g @ (t * m.a)
        return MotionTensor(frame, comps)
    s = s_from_r(r_from_infinitesimal(m, frame))
    scale = np.max(np.abs(s.comps)) * abs(t)
    if scale > _EXP_GUARD:
        raise ValidationError(
            f"generator norm times t is {scale:.3e}; refuse to exponentiate"
        )
    return MotionTensor(frame, expm(-t * s.comps))


def p_basis_change(metric: Metric, axes: np.ndarray, origin: np.ndarray) -> np.ndarray:
    """Matrix whose columns express the p-basis of the chart with the given
    axes and origin in the p-basis of the reference chart (identity axes,
    zero origin): [[A, 0], [-(g b)^T A, 1]]."""
    axes = np.asarray(axes, dtype=float)
    origin = np.asarray(origin, dtype=float)
    n = metric.n
    if axes.shape != (n, n) or origin.shape != (n,):
        raise ValidationError("axes must be n x n and origin a base point")
    u = np.eye(metric.dim)
    u[:n, :n] = axes
    u[n, :n] = -(metric.g @ origin) @ axes
    return u


def chart_params(params: MotionParams, axes: np.ndarray, origin: np.ndarray) -> MotionParams:
    """Parameters of the same motion written in the chart x = A z + b."""
    axes = np.asarray(axes, dtype=float)
    origin = np.asarray(origin, dtype=float)
    a_inv = np.linalg.inv(axes)
    return MotionParams(
        a_inv @ params.L @ axes,
        a_inv @ (params.L @ origin + params.a - origin),
    )


def random_isometry(metric: Metric, rng: np.random.Generator, scale: float = 0.6) -> np.ndarray:
    """Draw an isometry of g as expm(g^-1 K) with K antisymmetric."""
    k = skew_from_upper(rng.uniform(-scale, scale, size=(metric.n, metric.n)))
    return expm(metric.g_inv @ k)
