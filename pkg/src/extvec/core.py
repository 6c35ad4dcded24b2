"""Core algebra of extended vectors over a flat n-dimensional base space.

An extended vector carries n base components plus one affine ("fifth")
component stored at array index n.  Parallel transport of the standard
basis is position dependent even though the base space is flat:

    e_5(x) -> e_5(y)                 (transported unchanged)
    e_a(x) -> e_a(y) + (x - y)_a e_5(y)

so transporting *components* from x to y shifts the fifth slot by
g(y - x, v_base) while the base block stays put.  The whole operation is
a (n+1) x (n+1) matrix acting slotwise, which makes transport of tensors
of any rank a sequence of exact affine maps.

Frames come in three kinds:

* ``o_basis``        position-anchored standard basis (not self-parallel)
* ``p_basis``        self-parallel basis of a chart; components of a
                     covariantly constant field are position independent
* ``active_regular`` image of an o-basis under a finite motion

Index convention throughout: array axis value ``n`` is the fifth slot;
base slots are ``0 .. n-1``.
"""

from __future__ import annotations

import json
from enum import Enum

import numpy as np

from .errors import (
    ContractViolation,
    SchemaError,
    UnsupportedDimension,
    ValidationError,
)

_SYM_TOL = 1e-12

_PRESETS = {
    "euclidean3": np.eye(3),
    "minkowski4": np.diag([1.0, -1.0, -1.0, -1.0]),
}


class Metric:
    """Flat base metric g plus the scale xi of the extra direction.

    g must be symmetric and invertible.  xi only enters the documentation
    block matrix ``h_ext = diag(g, xi)``; no algebraic operation depends
    on it, and the E-part of a bivector split is normalized so that its
    components coincide with the (a,5) components of the source.
    """

    __slots__ = ("g", "xi", "name", "_g_inv")

    def __init__(self, g, xi: float = 1.0, name: str = ""):
        g = np.asarray(g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValidationError(f"metric must be square, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValidationError("metric entries must be finite")
        if not np.allclose(g, g.T, rtol=0.0, atol=_SYM_TOL):
            raise ValidationError("metric must be symmetric")
        if xi <= 0.0 or not np.isfinite(xi):
            raise ValidationError(f"xi must be a positive real, got {xi}")
        self.g = g
        self.g.setflags(write=False)
        try:
            self._g_inv = np.linalg.inv(g)
        except np.linalg.LinAlgError as exc:
            raise ValidationError("metric must be invertible") from exc
        self._g_inv.setflags(write=False)
        self.xi = float(xi)
        self.name = name

    @classmethod
    def from_name(cls, name: str, xi: float = 1.0) -> "Metric":
        if name not in _PRESETS:
            raise ValidationError(
                f"unknown metric preset {name!r}; known: {sorted(_PRESETS)}"
            )
        return cls(_PRESETS[name], xi=xi, name=name)

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def dim(self) -> int:
        """Extended dimension n + 1."""
        return self.n + 1

    @property
    def g_inv(self) -> np.ndarray:
        return self._g_inv

    @property
    def h_ext(self) -> np.ndarray:
        """Documentation-only extended metric diag(g, xi)."""
        h = np.zeros((self.dim, self.dim))
        h[: self.n, : self.n] = self.g
        h[self.n, self.n] = self.xi
        return h

    def degenerate_ext(self) -> np.ndarray:
        """diag(g, 0): the extended g used by generators and pairings."""
        out = np.zeros((self.dim, self.dim))
        out[: self.n, : self.n] = self.g
        return out

    def lower_ext(self) -> np.ndarray:
        """diag(g, 1): lowers a base index, leaves the fifth slot alone."""
        out = np.eye(self.dim)
        out[: self.n, : self.n] = self.g
        return out

    def raise_ext(self) -> np.ndarray:
        """diag(g^-1, 1), inverse of :meth:`lower_ext`."""
        out = np.eye(self.dim)
        out[: self.n, : self.n] = self._g_inv
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Metric):
            return NotImplemented
        return (
            self.g.shape == other.g.shape
            and np.array_equal(self.g, other.g)
            and self.xi == other.xi
        )

    def __hash__(self):
        return hash((self.g.tobytes(), self.xi))

    def __repr__(self) -> str:
        label = self.name or f"g={self.g.tolist()}"
        return f"Metric({label}, xi={self.xi})"

    def to_dict(self) -> dict:
        if self.name in _PRESETS:
            return {"name": self.name, "xi": self.xi}
        return {"g": self.g.tolist(), "xi": self.xi}

    @classmethod
    def from_dict(cls, data: dict) -> "Metric":
        if not isinstance(data, dict):
            raise SchemaError("metric payload must be an object")
        if "name" in data:
            return cls.from_name(data["name"], xi=data.get("xi", 1.0))
        if "g" not in data:
            raise SchemaError("metric payload needs 'name' or 'g'")
        try:
            return cls(data["g"], xi=data.get("xi", 1.0))
        except ValidationError as exc:
            raise SchemaError(str(exc)) from exc


def euclidean3() -> Metric:
    return Metric.from_name("euclidean3")


def minkowski4() -> Metric:
    return Metric.from_name("minkowski4")


class FrameKind(Enum):
    O_BASIS = "o_basis"
    P_BASIS = "p_basis"
    ACTIVE_REGULAR = "active_regular"


class Frame:
    """A basis identity: metric, anchor point, and frame kind.

    For an o-basis the anchor is the point the basis sits at; for a
    p-basis it is the chart origin (the one point where the p-basis and
    the o-basis coincide).
    """

    __slots__ = ("metric", "anchor", "kind")

    def __init__(self, metric: Metric, anchor, kind: FrameKind):
        anchor = np.asarray(anchor, dtype=float)
        if anchor.shape != (metric.n,):
            raise ValidationError(
                f"anchor must have shape ({metric.n},), got {anchor.shape}"
            )
        if not np.all(np.isfinite(anchor)):
            raise ValidationError("anchor must be finite")
        if not isinstance(kind, FrameKind):
            kind = FrameKind(kind)
        self.metric = metric
        self.anchor = anchor
        self.anchor.setflags(write=False)
        self.kind = kind

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.metric == other.metric
            and self.kind is other.kind
            and np.array_equal(self.anchor, other.anchor)
        )

    def __hash__(self):
        return hash((hash(self.metric), self.anchor.tobytes(), self.kind))

    def __repr__(self) -> str:
        return f"Frame({self.metric!r}, anchor={self.anchor.tolist()}, {self.kind.value})"

    def at(self, anchor) -> "Frame":
        return Frame(self.metric, anchor, self.kind)

    def to_dict(self) -> dict:
        return {"anchor": self.anchor.tolist(), "kind": self.kind.value}

    @classmethod
    def from_dict(cls, metric: Metric, data: dict) -> "Frame":
        if not isinstance(data, dict) or "anchor" not in data:
            raise SchemaError("frame payload must be an object with 'anchor'")
        try:
            kind = FrameKind(data.get("kind", "o_basis"))
        except ValueError as exc:
            raise SchemaError(f"unknown frame kind {data.get('kind')!r}") from exc
        try:
            return cls(metric, data["anchor"], kind)
        except ValidationError as exc:
            raise SchemaError(str(exc)) from exc


def o_frame(metric: Metric, anchor) -> Frame:
    return Frame(metric, anchor, FrameKind.O_BASIS)


def p_frame(metric: Metric, origin) -> Frame:
    return Frame(metric, origin, FrameKind.P_BASIS)


def transport_matrix(metric: Metric, from_point, to_point) -> np.ndarray:
    """Matrix moving contravariant components from ``from_point`` to ``to_point``.

    Base block is the identity; the fifth row is g(to - from) so that
    v'_5 = v_5 + (to - from)_a v^a.  The inverse is transport back.
    """
    from_point = np.asarray(from_point, dtype=float)
    to_point = np.asarray(to_point, dtype=float)
    n = metric.n
    if from_point.shape != (n,) or to_point.shape != (n,):
        raise ValidationError("transport endpoints must be base points")
    if not (np.all(np.isfinite(from_point)) and np.all(np.isfinite(to_point))):
        raise ValidationError("transport endpoints must be finite")
    mat = np.eye(n + 1)
    mat[n, :n] = metric.g @ (to_point - from_point)
    return mat


def _apply_slotwise(comps: np.ndarray, p: int, q: int,
                    m_contra: np.ndarray, m_co: np.ndarray) -> np.ndarray:
    out = comps
    for axis in range(p):
        out = np.moveaxis(np.tensordot(m_contra, out, axes=(1, axis)), 0, axis)
    for axis in range(p, p + q):
        out = np.moveaxis(np.tensordot(m_co, out, axes=(1, axis)), 0, axis)
    return out


class ExtTensor:
    """Dense extended tensor of rank (p, q): p upper slots then q lower slots.

    Components live in the basis identified by ``frame``.  Arrays are
    stored read-only; every operation returns a fresh tensor.
    """

    __slots__ = ("frame", "p", "q", "comps")

    def __init__(self, frame: Frame, p: int, q: int, comps):
        if p < 0 or q < 0 or p + q == 0:
            raise ValidationError("rank must have p, q >= 0 and p + q >= 1")
        comps = np.array(comps, dtype=float)
        dim = frame.metric.dim
        if comps.shape != (dim,) * (p + q):
            raise ValidationError(
                f"components must have shape {(dim,) * (p + q)}, got {comps.shape}"
            )
        if not np.all(np.isfinite(comps)):
            raise ValidationError("components must be finite")
        self.frame = frame
        self.p = p
        self.q = q
        self.comps = comps
        self.comps.setflags(write=False)

    @property
    def rank(self) -> tuple:
        return (self.p, self.q)

    @property
    def metric(self) -> Metric:
        return self.frame.metric

    def _like(self, comps, frame=None) -> "ExtTensor":
        return ExtTensor(frame or self.frame, self.p, self.q, comps)

    # -- transport and basis changes -------------------------------------

    def transport(self, to_point) -> "ExtTensor":
        """Parallel transport to ``to_point``; exact affine slot maps."""
        if self.frame.kind is FrameKind.P_BASIS:
            raise ContractViolation(
                "components in a p-basis are position independent; "
                "transport applies to o-basis or active frames"
            )
        t = transport_matrix(self.metric, self.frame.anchor, to_point)
        tco = np.eye(self.metric.dim)
        tco[: self.metric.n, self.metric.n] = -t[self.metric.n, : self.metric.n]
        out = _apply_slotwise(self.comps, self.p, self.q, t, tco)
        return self._like(out, frame=self.frame.at(to_point))

    def to_p_basis(self, origin) -> "ExtTensor":
        """Components w.r.t. the self-parallel basis of the chart at ``origin``."""
        if self.frame.kind is FrameKind.P_BASIS:
            raise ContractViolation("tensor already holds p-basis components")
        moved = self.transport(origin)
        return ExtTensor(p_frame(self.metric, origin), self.p, self.q, moved.comps)

    def to_o_basis(self, at_point) -> "ExtTensor":
        """Components w.r.t. the standard basis sitting at ``at_point``."""
        if self.frame.kind is not FrameKind.P_BASIS:
            raise ContractViolation("to_o_basis starts from p-basis components")
        t = transport_matrix(self.metric, self.frame.anchor, at_point)
        tco = np.eye(self.metric.dim)
        tco[: self.metric.n, self.metric.n] = -t[self.metric.n, : self.metric.n]
        out = _apply_slotwise(self.comps, self.p, self.q, t, tco)
        return ExtTensor(o_frame(self.metric, at_point), self.p, self.q, out)

    def change_basis(self, u: np.ndarray, new_frame: Frame) -> "ExtTensor":
        """Re-express in a basis whose vectors are the columns of ``u``
        (written in the current basis): upper slots get u^-1, lower get u^T."""
        u = np.asarray(u, dtype=float)
        dim = self.metric.dim
        if u.shape != (dim, dim):
            raise ValidationError(f"basis-change matrix must be {dim}x{dim}")
        out = _apply_slotwise(self.comps, self.p, self.q, np.linalg.inv(u), u.T)
        return ExtTensor(new_frame, self.p, self.q, out)

    # -- algebra ----------------------------------------------------------

    def _require_same_frame(self, other: "ExtTensor"):
        if self.frame != other.frame:
            raise ContractViolation("operands must share a frame; transport first")

    def __add__(self, other: "ExtTensor") -> "ExtTensor":
        self._require_same_frame(other)
        if self.rank != other.rank:
            raise ValidationError("rank mismatch in addition")
        return self._like(self.comps + other.comps)

    def __sub__(self, other: "ExtTensor") -> "ExtTensor":
        self._require_same_frame(other)
        if self.rank != other.rank:
            raise ValidationError("rank mismatch in subtraction")
        return self._like(self.comps - other.comps)

    def __mul__(self, scalar: float) -> "ExtTensor":
        return self._like(self.comps * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "ExtTensor":
        return self._like(-self.comps)

    def outer(self, other: "ExtTensor") -> "ExtTensor":
        """Tensor product; upper slots of both precede lower slots of both."""
        self._require_same_frame(other)
        a = np.moveaxis(
            np.tensordot(self.comps, other.comps, axes=0),
            range(self.p + self.q, self.p + self.q + other.p),
            range(self.p, self.p + other.p),
        )
        return ExtTensor(self.frame, self.p + other.p, self.q + other.q, a)

    def contract(self, upper: int, lower: int) -> "ExtTensor | float":
        """Trace the ``upper``-th contravariant slot against the
        ``lower``-th covariant slot (both 0-based within their groups)."""
        if not (0 <= upper < self.p and 0 <= lower < self.q):
            raise ValidationError("contraction slots out of range")
        out = np.trace(self.comps, axis1=upper, axis2=self.p + lower)
        if self.p + self.q == 2:
            return float(out)
        return ExtTensor(self.frame, self.p - 1, self.q - 1, out)

    def wedge(self, other: "ExtTensor") -> "ExtTensor":
        """Antisymmetrized product u (x) v - v (x) u of two vectors."""
        if self.rank != (1, 0) or other.rank != (1, 0):
            raise ValidationError("wedge expects two rank-(1,0) tensors")
        self._require_same_frame(other)
        a = np.outer(self.comps, other.comps)
        return ExtTensor(self.frame, 2, 0, a - a.T)

    def lower_index(self, slot: int) -> "ExtTensor":
        """Lower an upper slot with diag(g, 1); the fifth slot is untouched."""
        if not 0 <= slot < self.p:
            raise ValidationError("lower_index expects a contravariant slot")
        low = self.metric.lower_ext()
        out = np.moveaxis(np.tensordot(low, self.comps, axes=(1, slot)), 0, slot)
        # the lowered slot moves to the front of the covariant group
        out = np.moveaxis(out, slot, self.p - 1)
        return ExtTensor(self.frame, self.p - 1, self.q + 1, out)

    def raise_index(self, slot: int) -> "ExtTensor":
        """Raise a lower slot with diag(g^-1, 1); inverse of lower_index."""
        if not 0 <= slot < self.q:
            raise ValidationError("raise_index expects a covariant slot")
        hi = self.metric.raise_ext()
        axis = self.p + slot
        out = np.moveaxis(np.tensordot(hi, self.comps, axes=(1, axis)), 0, axis)
        out = np.moveaxis(out, axis, self.p)
        return ExtTensor(self.frame, self.p + 1, self.q - 1, out)

    # -- predicates and serialization -------------------------------------

    def is_antisymmetric(self, tol: float = 0.0) -> bool:
        if self.p + self.q != 2:
            raise ValidationError("antisymmetry applies to two-slot tensors")
        return bool(np.max(np.abs(self.comps + self.comps.T)) <= tol)

    def __repr__(self) -> str:
        return f"ExtTensor(rank={self.rank}, frame={self.frame!r})"

    def to_dict(self) -> dict:
        return {
            "metric": self.metric.to_dict(),
            "frame": self.frame.to_dict(),
            "rank": [self.p, self.q],
            "comps": self.comps.reshape(-1).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExtTensor":
        if not isinstance(data, dict):
            raise SchemaError("tensor payload must be an object")
        for key in ("metric", "frame", "rank", "comps"):
            if key not in data:
                raise SchemaError(f"tensor payload missing {key!r}")
        metric = Metric.from_dict(data["metric"])
        frame = Frame.from_dict(metric, data["frame"])
        rank = data["rank"]
        if not (isinstance(rank, (list, tuple)) and len(rank) == 2):
            raise SchemaError("rank must be a [p, q] pair")
        p, q = int(rank[0]), int(rank[1])
        flat = np.asarray(data["comps"], dtype=float)
        want = metric.dim ** (p + q)
        if flat.size != want:
            raise SchemaError(f"comps must have {want} entries, got {flat.size}")
        try:
            return cls(frame, p, q, flat.reshape((metric.dim,) * (p + q)))
        except ValidationError as exc:
            raise SchemaError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "ExtTensor":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def ext_vector(frame: Frame, comps) -> ExtTensor:
    return ExtTensor(frame, 1, 0, comps)


def ext_covector(frame: Frame, comps) -> ExtTensor:
    return ExtTensor(frame, 0, 1, comps)


def basis_vector(frame: Frame, slot: int) -> ExtTensor:
    comps = np.zeros(frame.metric.dim)
    comps[slot] = 1.0
    return ExtTensor(frame, 1, 0, comps)


def lift_base_vector(frame: Frame, base_comps) -> ExtTensor:
    """Embed a base n-vector with zero fifth component."""
    base_comps = np.asarray(base_comps, dtype=float)
    if base_comps.shape != (frame.metric.n,):
        raise ValidationError("lift expects a base vector")
    comps = np.zeros(frame.metric.dim)
    comps[: frame.metric.n] = base_comps
    return ExtTensor(frame, 1, 0, comps)


def transport_vector(v: ExtTensor, to_point) -> ExtTensor:
    if v.rank != (1, 0):
        raise ValidationError("transport_vector expects rank (1,0)")
    return v.transport(to_point)


def transport_tensor(t: ExtTensor, to_point) -> ExtTensor:
    return t.transport(to_point)


def theta_g(v: ExtTensor) -> ExtTensor:
    """Degenerate flat map: base slots lowered with g, fifth slot to zero.

    Kernel is exactly the e_5 direction, so no inverse exists.
    """
    if v.rank != (1, 0):
        raise ValidationError("theta_g expects a rank-(1,0) tensor")
    n = v.metric.n
    out = np.zeros(n + 1)
    out[:n] = v.metric.g @ v.comps[:n]
    return ExtTensor(v.frame, 0, 1, out)


class BivectorSplit:
    """Decomposition of an antisymmetric rank-(2,0) tensor into the
    base-plane block Z (a^b slots) and the extra-plane part E (a^5 slots).

    z_part is stored with exact antisymmetry (lower triangle mirrored
    from the upper); e_part[a] equals the (a, 5) component.
    """

    __slots__ = ("z_part", "e_part", "frame")

    def __init__(self, z_part, e_part, frame: Frame):
        n = frame.metric.n
        z = np.array(z_part, dtype=float)
        e = np.array(e_part, dtype=float)
        if z.shape != (n, n) or e.shape != (n,):
            raise ValidationError("split parts have wrong shape")
        z = np.triu(z, 1)
        z = z - z.T
        self.z_part = z
        self.e_part = e
        self.frame = frame
        self.z_part.setflags(write=False)
        self.e_part.setflags(write=False)


def bivector_split(b: ExtTensor, tol: float = 1e-12) -> BivectorSplit:
    if b.rank != (2, 0):
        raise ValidationError("bivector_split expects rank (2,0)")
    asym = np.max(np.abs(b.comps + b.comps.T))
    if asym > tol:
        raise ValidationError(f"tensor is not antisymmetric (residual {asym:.3e})")
    n = b.metric.n
    return BivectorSplit(b.comps[:n, :n], b.comps[:n, n], b.frame)


def bivector_join(split: BivectorSplit) -> ExtTensor:
    """Reassemble the extended bivector from its Z and E parts."""
    n = split.frame.metric.n
    comps = np.zeros((n + 1, n + 1))
    comps[:n, :n] = split.z_part
    comps[:n, n] = split.e_part
    comps[n, :n] = -split.e_part
    return ExtTensor(split.frame, 2, 0, comps)


_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS3[_i, _j, _k] = 1.0
    _EPS3[_i, _k, _j] = -1.0
_EPS3.setflags(write=False)


def levi_civita3() -> np.ndarray:
    return _EPS3


def _require_euclidean3(metric: Metric, who: str):
    if metric.n != 3 or not np.array_equal(metric.g, np.eye(3)):
        raise UnsupportedDimension(f"{who} requires the euclidean3 metric")


def dual3(z_part: np.ndarray, metric: Metric) -> np.ndarray:
    """Axial vector of a 3x3 antisymmetric block: w^k = eps(k,i,j) z[i,j] / 2."""
    _require_euclidean3(metric, "dual3")
    z = np.asarray(z_part, dtype=float)
    if z.shape != (3, 3):
        raise ValidationError("dual3 expects a 3x3 block")
    return 0.5 * np.einsum("kij,ij->k", _EPS3, z)


def undual3(w: np.ndarray, metric: Metric) -> np.ndarray:
    """Inverse of :func:`dual3`: z[i,j] = eps(i,j,k) w^k."""
    _require_euclidean3(metric, "undual3")
    w = np.asarray(w, dtype=float)
    if w.shape != (3,):
        raise ValidationError("undual3 expects a 3-vector")
    return np.einsum("ijk,k->ij", _EPS3, w)


def contravariant_matrix(frame: Frame) -> np.ndarray:
    """Columns are the dual-paired basis vectors expressed in ``frame``:
    column a is g^-1 applied to slot a, column 5 is the fifth vector itself."""
    return frame.metric.raise_ext()


def g_pair(u: ExtTensor, v: ExtTensor) -> float:
    """Degenerate extended pairing diag(g, 0) of two vectors in one frame."""
    if u.rank != (1, 0) or v.rank != (1, 0):
        raise ValidationError("g_pair expects rank-(1,0) tensors")
    u._require_same_frame(v)
    n = u.metric.n
    return float(u.comps[:n] @ u.metric.g @ v.comps[:n])
