"""Polynomial fields and the antisymmetrized motion derivative.

A derivative slot is a pair (A, B) of extended indices.  In the chart's
self-parallel basis the pair (mu, n) differentiates along the mu-th axis
while a base pair (mu, nu) combines the rotation generator with the moment
arm (x - origin): the familiar angular-momentum action on fields.  All
outputs stay polynomial, so the calculus identities here are exact
coefficient statements rather than tolerance checks; only the finite-motion
cross-check at the bottom is numeric.

The pullback convention used throughout: a finite motion with coordinate
parameters (L, a) carries a scalar field f to x -> f(Lx + a) and a base
vector field to Lambda u(Lx + a) with Lambda the inverse of L.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import ExtTensor, Frame, FrameKind, Metric, p_frame
from .errors import ContractViolation, SchemaError, ValidationError
from .motion import base_generators, exp_motion, infinitesimal_from_bivector

FD_MIN_STEP = 1e-6


class Poly:
    """Sparse polynomial in n variables: {exponent tuple: coefficient}."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms=None):
        if n <= 0:
            raise ValidationError("polynomials need at least one variable")
        self.n = int(n)
        clean: dict[tuple[int, ...], float] = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.n or any(e < 0 for e in exps):
                raise ValidationError(f"bad exponent tuple {exps}")
            coef = float(coef)
            if coef != 0.0:
                clean[exps] = clean.get(exps, 0.0) + coef
        self.terms = {e: c for e, c in clean.items() if c != 0.0}

    @classmethod
    def const(cls, n: int, value: float) -> "Poly":
        return cls(n, {(0,) * n: value})

    @classmethod
    def var(cls, n: int, i: int) -> "Poly":
        exps = [0] * n
        exps[i] = 1
        return cls(n, {tuple(exps): 1.0})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def constant_value(self) -> float:
        """The value of a degree-0 polynomial."""
        if self.degree() > 0:
            raise ValidationError("polynomial is not constant")
        return self.terms.get((0,) * self.n, 0.0)

    def partial(self, i: int) -> "Poly":
        out: dict[tuple[int, ...], float] = {}
        for exps, coef in self.terms.items():
            if exps[i] == 0:
                continue
            lowered = list(exps)
            lowered[i] -= 1
            key = tuple(lowered)
            out[key] = out.get(key, 0.0) + coef * exps[i]
        return Poly(self.n, out)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = 0.0
        for exps, coef in self.terms.items():
            term = coef
            for xi, e in zip(x, exps):
                if e:
                    term *= xi**e
            total += term
        return total

    def __add__(self, other):
        other = _as_poly(other, self.n)
        out = dict(self.terms)
        for exps, coef in other.terms.items():
            out[exps] = out.get(exps, 0.0) + coef
        return Poly(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly(other, self.n))

    def __rsub__(self, other):
        return _as_poly(other, self.n) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Poly(self.n, {e: c * other for e, c in self.terms.items()})
        other = _as_poly(other, self.n)
        out: dict[tuple[int, ...], float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                out[key] = out.get(key, 0.0) + c1 * c2
        return Poly(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValidationError("negative powers are not polynomials")
        out = Poly.const(self.n, 1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = Poly.const(self.n, other)
        return isinstance(other, Poly) and self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def compose_affine(self, mat, shift) -> "Poly":
        """Substitute x_i -> sum_j mat[i,j] y_j + shift_i, expanded exactly."""
        mat = np.asarray(mat, dtype=float)
        shift = np.asarray(shift, dtype=float)
        if mat.shape != (self.n, self.n) or shift.shape != (self.n,):
            raise ValidationError("affine substitution has the wrong shape")
        lines = []
        for i in range(self.n):
            line = Poly.const(self.n, shift[i])
            for j in range(self.n):
                if mat[i, j] != 0.0:
                    line = line + mat[i, j] * Poly.var(self.n, j)
            lines.append(line)
        out = Poly(self.n)
        for exps, coef in self.terms.items():
            term = Poly.const(self.n, coef)
            for i, e in enumerate(exps):
                if e:
                    term = term * lines[i] ** e
            out = out + term
        return out

    def to_terms(self) -> list:
        ordered = sorted(self.terms.items())
        return [{"exps": list(e), "coef": c} for e, c in ordered]

    @classmethod
    def from_terms(cls, n: int, payload) -> "Poly":
        if not isinstance(payload, list):
            raise SchemaError("terms must be a list")
        terms: dict[tuple[int, ...], float] = {}
        for item in payload:
            if not isinstance(item, dict) or set(item) != {"exps", "coef"}:
                raise SchemaError("each term needs exactly 'exps' and 'coef'")
            exps = item["exps"]
            if not isinstance(exps, list) or len(exps) != n:
                raise SchemaError(f"exponent list must have length {n}")
            key = tuple(int(e) for e in exps)
            terms[key] = terms.get(key, 0.0) + float(item["coef"])
        return cls(n, terms)

    def __repr__(self):
        if self.is_zero:
            return "Poly(0)"
        bits = []
        for exps, coef in sorted(self.terms.items()):
            mono = "*".join(
                f"x{i}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(exps)
                if e
            )
            bits.append(f"{coef:g}" + (f"*{mono}" if mono else ""))
        return "Poly(" + " + ".join(bits) + ")"


def _as_poly(value, n: int) -> Poly:
    if isinstance(value, Poly):
        if value.n != n:
            raise ValidationError("mixed variable counts")
        return value
    if isinstance(value, (int, float)):
        return Poly.const(n, value)
    raise ValidationError(f"cannot coerce {type(value).__name__} to a polynomial")


def default_chart(metric: Metric) -> Frame:
    return p_frame(metric, np.zeros(metric.n))


class ScalarField:
    """Polynomial scalar on the chart's coordinates."""

    __slots__ = ("chart", "poly")

    def __init__(self, chart: Frame, poly):
        if chart.kind is not FrameKind.P_BASIS:
            raise ContractViolation("fields are chart-level objects; use a p-basis frame")
        self.chart = chart
        self.poly = _as_poly(poly, chart.metric.n)

    def __call__(self, x) -> float:
        return self.poly(x)

    def __eq__(self, other):
        return (
            isinstance(other, ScalarField)
            and self.chart == other.chart
            and self.poly == other.poly
        )

    def transform(self, L, a) -> "ScalarField":
        """Image under the finite motion with coordinate parameters (L, a)."""
        o = self.chart.anchor
        mat = np.asarray(L, dtype=float)
        shift = o + np.asarray(a, dtype=float) - mat @ o
        return ScalarField(self.chart, self.poly.compose_affine(mat, shift))

    def to_dict(self) -> dict:
        return {
            "kind": "scalar",
            "metric": self.chart.metric.to_dict(),
            "origin": list(self.chart.anchor),
            "terms": self.poly.to_terms(),
        }

    def __repr__(self):
        return f"ScalarField({self.poly!r})"


class VectorField:
    """Base-vector field with one polynomial per component."""

    __slots__ = ("chart", "comps")

    def __init__(self, chart: Frame, comps):
        if chart.kind is not FrameKind.P_BASIS:
            raise ContractViolation("fields are chart-level objects; use a p-basis frame")
        n = chart.metric.n
        comps = tuple(_as_poly(c, n) for c in comps)
        if len(comps) != n:
            raise ValidationError(f"vector field needs {n} components")
        self.chart = chart
        self.comps = comps

    def __call__(self, x) -> np.ndarray:
        return np.array([p(x) for p in self.comps])

    def __eq__(self, other):
        return (
            isinstance(other, VectorField)
            and self.chart == other.chart
            and self.comps == other.comps
        )

    def transform(self, L, a) -> "VectorField":
        o = self.chart.anchor
        mat = np.asarray(L, dtype=float)
        shift = o + np.asarray(a, dtype=float) - mat @ o
        lam = np.linalg.inv(mat)
        moved = [p.compose_affine(mat, shift) for p in self.comps]
        out = []
        for alpha in range(len(moved)):
            acc = Poly(self.chart.metric.n)
            for beta, p in enumerate(moved):
                if lam[alpha, beta] != 0.0:
                    acc = acc + lam[alpha, beta] * p
            out.append(acc)
        return VectorField(self.chart, out)

    def to_dict(self) -> dict:
        return {
            "kind": "vector",
            "metric": self.chart.metric.to_dict(),
            "origin": list(self.chart.anchor),
            "components": [p.to_terms() for p in self.comps],
        }

    def __repr__(self):
        return f"VectorField({list(self.comps)!r})"


def field_from_dict(data: dict, chart: Frame | None = None):
    if not isinstance(data, dict) or "kind" not in data:
        raise SchemaError("field payload must be a dict with a 'kind'")
    if chart is None:
        try:
            metric = Metric.from_dict(data["metric"])
        except KeyError as exc:
            raise SchemaError("field payload needs 'metric' or an explicit chart") from exc
        origin = np.asarray(data.get("origin", np.zeros(metric.n)), dtype=float)
        if origin.shape != (metric.n,):
            raise SchemaError("origin has the wrong length")
        chart = p_frame(metric, origin)
    n = chart.metric.n
    kind = data["kind"]
    if kind == "scalar":
        if "terms" not in data:
            raise SchemaError("scalar field needs 'terms'")
        return ScalarField(chart, Poly.from_terms(n, data["terms"]))
    if kind == "vector":
        comps = data.get("components")
        if not isinstance(comps, list) or len(comps) != n:
            raise SchemaError(f"vector field needs {n} component term lists")
        return VectorField(chart, [Poly.from_terms(n, c) for c in comps])
    raise SchemaError(f"unknown field kind {kind!r}")


# -- pair derivatives -------------------------------------------------------
#
# The chart-basis action on a pair slot (A, B), anchored at the chart origin.
# Everything else in this module is linear combinations of these.


def _moment_arm(chart: Frame, nu: int) -> Poly:
    # lowered coordinate relative to the chart origin: g_{nu a} (x^a - o^a)
    n = chart.metric.n
    g = chart.metric.g
    arm = Poly(n)
    for a in range(n):
        if g[nu, a] != 0.0:
            arm = arm + g[nu, a] * (Poly.var(n, a) - Poly.const(n, chart.anchor[a]))
    return arm


def _pair_scalar(poly: Poly, chart: Frame, A: int, B: int) -> Poly:
    n = chart.metric.n
    if A == B:
        return Poly(n)
    if B == n:
        return poly.partial(A)
    if A == n:
        return -poly.partial(B)
    return _moment_arm(chart, B) * poly.partial(A) - _moment_arm(chart, A) * poly.partial(B)


def _pair_vector(comps, chart: Frame, A: int, B: int, gens: np.ndarray):
    n = chart.metric.n
    out = [_pair_scalar(p, chart, A, B) for p in comps]
    if A < n and B < n:
        spin = gens[A, B]
        for alpha in range(n):
            for beta in range(n):
                if spin[alpha, beta] != 0.0:
                    out[alpha] = out[alpha] + spin[alpha, beta] * comps[beta]
    return tuple(out)


def _bivector_pcomps(arg: ExtTensor, chart: Frame) -> np.ndarray:
    """Chart components of a covariantly constant bivector argument."""
    if arg.rank != (2, 0):
        raise ValidationError("derivative argument must be a rank-(2,0) bivector")
    if not arg.is_antisymmetric(1e-12):
        raise ValidationError("derivative argument must be antisymmetric")
    if arg.metric != chart.metric:
        raise ContractViolation("argument metric does not match the field chart")
    if arg.frame.kind is FrameKind.P_BASIS:
        if not np.array_equal(arg.frame.anchor, chart.anchor):
            raise ContractViolation("argument chart and field chart disagree")
        return arg.comps
    return arg.to_p_basis(chart.anchor).comps


def d_scalar(field: ScalarField, arg: ExtTensor) -> ScalarField:
    """Derivative of a scalar field along a constant bivector argument."""
    b = _bivector_pcomps(arg, field.chart)
    dim = field.chart.metric.dim
    acc = Poly(field.chart.metric.n)
    for A in range(dim):
        for B in range(A + 1, dim):
            if b[A, B] != 0.0:
                acc = acc + b[A, B] * _pair_scalar(field.poly, field.chart, A, B)
    return ScalarField(field.chart, acc)


def d_vector(field: VectorField, arg: ExtTensor) -> VectorField:
    """Derivative of a base-vector field along a constant bivector argument."""
    b = _bivector_pcomps(arg, field.chart)
    metric = field.chart.metric
    gens = base_generators(metric)
    acc = [Poly(metric.n) for _ in range(metric.n)]
    for A in range(metric.dim):
        for B in range(A + 1, metric.dim):
            if b[A, B] != 0.0:
                part = _pair_vector(field.comps, field.chart, A, B, gens)
                for alpha in range(metric.n):
                    acc[alpha] = acc[alpha] + b[A, B] * part[alpha]
    return VectorField(field.chart, acc)


class DerivativeForm:
    """All pair-slot derivatives of one field, as an antisymmetric table.

    entries[A][B] is a Poly for scalar sources and a tuple of Polys for
    vector sources.  Contracting with a constant bivector reproduces
    d_scalar / d_vector term for term, since both walk the same pair loop.
    """

    __slots__ = ("chart", "kind", "entries")

    def __init__(self, chart: Frame, kind: str, entries):
        self.chart = chart
        self.kind = kind
        self.entries = entries

    def entry(self, A: int, B: int):
        return self.entries[A][B]

    def contract(self, arg: ExtTensor):
        b = _bivector_pcomps(arg, self.chart)
        n, dim = self.chart.metric.n, self.chart.metric.dim
        if self.kind == "scalar":
            acc = Poly(n)
            for A in range(dim):
                for B in range(A + 1, dim):
                    if b[A, B] != 0.0:
                        acc = acc + b[A, B] * self.entries[A][B]
            return ScalarField(self.chart, acc)
        acc_v = [Poly(n) for _ in range(n)]
        for A in range(dim):
            for B in range(A + 1, dim):
                if b[A, B] != 0.0:
                    for alpha in range(n):
                        acc_v[alpha] = acc_v[alpha] + b[A, B] * self.entries[A][B][alpha]
        return VectorField(self.chart, acc_v)

    def evaluate(self, x) -> np.ndarray:
        """Component table at a point: (dim, dim) or (dim, dim, n)."""
        dim = self.chart.metric.dim
        if self.kind == "scalar":
            out = np.zeros((dim, dim))
            for A in range(dim):
                for B in range(dim):
                    out[A, B] = self.entries[A][B](x)
            return out
        n = self.chart.metric.n
        out = np.zeros((dim, dim, n))
        for A in range(dim):
            for B in range(dim):
                out[A, B] = [p(x) for p in self.entries[A][B]]
        return out

    def to_dict(self) -> dict:
        dim = self.chart.metric.dim
        table = {}
        for A in range(dim):
            for B in range(A + 1, dim):
                key = f"{A},{B}"
                if self.kind == "scalar":
                    table[key] = self.entries[A][B].to_terms()
                else:
                    table[key] = [p.to_terms() for p in self.entries[A][B]]
        return {"kind": self.kind, "pairs": table}


def d_form(field) -> DerivativeForm:
    """Assemble every pair-slot derivative of the field at once."""
    chart = field.chart
    metric = chart.metric
    dim = metric.dim
    if isinstance(field, ScalarField):
        zero = Poly(metric.n)
        entries = [[zero for _ in range(dim)] for _ in range(dim)]
        for A in range(dim):
            for B in range(A + 1, dim):
                val = _pair_scalar(field.poly, chart, A, B)
                entries[A][B] = val
                entries[B][A] = -val
        return DerivativeForm(chart, "scalar", entries)
    if isinstance(field, VectorField):
        gens = base_generators(metric)
        zero_v = tuple(Poly(metric.n) for _ in range(metric.n))
        entries = [[zero_v for _ in range(dim)] for _ in range(dim)]
        for A in range(dim):
            for B in range(A + 1, dim):
                val = _pair_vector(field.comps, chart, A, B, gens)
                entries[A][B] = val
                entries[B][A] = tuple(-p for p in val)
        return DerivativeForm(chart, "vector", entries)
    raise ValidationError("d_form expects a ScalarField or VectorField")


# -- connection tables ------------------------------------------------------


def _poly_matrix(value, rows: int, cols: int, n: int) -> np.ndarray:
    out = np.empty((rows, cols), dtype=object)
    arr = np.asarray(value, dtype=object)
    if arr.shape != (rows, cols):
        raise ValidationError(f"basis map must be {rows}x{cols}")
    for i in range(rows):
        for j in range(cols):
            out[i, j] = _as_poly(arr[i, j], n)
    return out


def _poly_matmul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    rows, inner = a.shape
    cols = b.shape[1]
    out = np.empty((rows, cols), dtype=object)
    for i in range(rows):
        for j in range(cols):
            acc = Poly(n)
            for k in range(inner):
                acc = acc + a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def _poly_inv(mat: np.ndarray, n: int) -> np.ndarray:
    """Adjugate inverse; the determinant must be a nonzero constant."""
    size = mat.shape[0]
    det = Poly(n)
    for perm in itertools.permutations(range(size)):
        sign = 1.0
        seen = list(perm)
        for i in range(size):
            for j in range(i + 1, size):
                if seen[i] > seen[j]:
                    sign = -sign
        term = Poly.const(n, sign)
        for i in range(size):
            term = term * mat[i, perm[i]]
        det = det + term
    if det.degree() > 0:
        raise ValidationError("basis map determinant must be constant for inversion")
    det_value = det.constant_value()
    if det_value == 0.0:
        raise ValidationError("basis map is singular")
    out = np.empty((size, size), dtype=object)
    for i in range(size):
        for j in range(size):
            minor = [
                [mat[r, c] for c in range(size) if c != i]
                for r in range(size)
                if r != j
            ]
            cof = Poly(n)
            for perm in itertools.permutations(range(size - 1)):
                sign = 1.0
                for a in range(size - 1):
                    for b in range(a + 1, size - 1):
                        if perm[a] > perm[b]:
                            sign = -sign
                term = Poly.const(n, sign)
                for a in range(size - 1):
                    term = term * minor[a][perm[a]]
                cof = cof + term
            out[i, j] = ((-1.0) ** (i + j) / det_value) * cof
    return out


def _identity_polys(size: int, n: int) -> np.ndarray:
    out = np.empty((size, size), dtype=object)
    for i in range(size):
        for j in range(size):
            out[i, j] = Poly.const(n, 1.0 if i == j else 0.0)
    return out


def _lift_four_map(four_map: np.ndarray, chart: Frame) -> np.ndarray:
    """Self-parallel companion of a base-vector basis: base columns get the
    moment-arm fifth row, the fifth column is the invariant direction."""
    metric = chart.metric
    n, dim = metric.n, metric.dim
    out = np.empty((dim, dim), dtype=object)
    for A in range(dim):
        for B in range(dim):
            out[A, B] = Poly(n)
    for a in range(n):
        for b in range(n):
            out[a, b] = four_map[a, b]
    for b in range(n):
        acc = Poly(n)
        for s in range(n):
            acc = acc + (-_moment_arm(chart, s)) * four_map[s, b]
        out[n, b] = acc
    out[n, n] = Poly.const(n, 1.0)
    return out


class ConnectionTable:
    """Pair-slot connection coefficients of a basis-field pair.

    gamma[mu, nu, A, B] multiplies basis vector mu in the (A, B)-derivative
    of basis vector nu; antisymmetric in (A, B) by construction.
    """

    __slots__ = ("chart", "four_map", "five_map", "gamma")

    def __init__(self, chart: Frame, four_map, five_map, gamma):
        self.chart = chart
        self.four_map = four_map
        self.five_map = five_map
        self.gamma = gamma

    @property
    def is_constant(self) -> bool:
        return all(p.degree() == 0 for p in self.gamma.flat)

    @property
    def values(self) -> np.ndarray:
        if not self.is_constant:
            raise ValidationError("connection table has position-dependent entries")
        out = np.zeros(self.gamma.shape)
        for idx, poly in np.ndenumerate(self.gamma):
            out[idx] = poly.constant_value()
        return out

    def entry(self, mu: int, nu: int, A: int, B: int) -> Poly:
        return self.gamma[mu, nu, A, B]


def _resolve_five_map(five_basis, four_map: np.ndarray, chart: Frame) -> np.ndarray:
    dim = chart.metric.dim
    n = chart.metric.n
    if isinstance(five_basis, str):
        if five_basis == "p":
            return _identity_polys(dim, n)
        if five_basis == "o":
            return _lift_four_map(four_map, chart)
        raise ValidationError(f"unknown five-basis spec {five_basis!r}")
    return _poly_matrix(five_basis, dim, dim, n)


def connection_coeffs(chart: Frame, four_basis=None, five_basis="p") -> ConnectionTable:
    """Expand the pair derivatives of the given basis fields in themselves.

    four_basis: n x n matrix (numbers or Poly entries) whose columns are the
    basis vector fields in the chart's own basis; None means that basis
    itself.  five_basis: "p" for the chart's self-parallel basis, "o" for
    the moment-arm lift of four_basis, or an explicit (n+1) x (n+1) matrix
    of chart components.
    """
    metric = chart.metric
    n, dim = metric.n, metric.dim
    four_map = (
        _identity_polys(n, n)
        if four_basis is None
        else _poly_matrix(four_basis, n, n, n)
    )
    five_map = _resolve_five_map(five_basis, four_map, chart)
    inv_four = _poly_inv(four_map, n)
    gens = base_generators(metric)
    gamma = np.empty((n, n, dim, dim), dtype=object)
    for idx in np.ndindex(gamma.shape):
        gamma[idx] = Poly(n)
    for nu in range(n):
        column = tuple(four_map[a, nu] for a in range(n))
        for A in range(dim):
            for B in range(A + 1, dim):
                acc = [Poly(n) for _ in range(n)]
                for C in range(dim):
                    for D in range(C + 1, dim):
                        coef = (
                            five_map[C, A] * five_map[D, B]
                            - five_map[C, B] * five_map[D, A]
                        )
                        if coef.is_zero:
                            continue
                        part = _pair_vector(column, chart, C, D, gens)
                        for a in range(n):
                            acc[a] = acc[a] + coef * part[a]
                for mu in range(n):
                    entry = Poly(n)
                    for a in range(n):
                        entry = entry + inv_four[mu, a] * acc[a]
                    gamma[mu, nu, A, B] = entry
                    gamma[mu, nu, B, A] = -entry
    return ConnectionTable(chart, four_map, five_map, gamma)


def transform_connection(table: ConnectionTable, lam, ell) -> ConnectionTable:
    """Re-express a connection table under basis changes E' = E lam and
    e' = e ell, differentiating lam along the old five-basis wedges."""
    chart = table.chart
    metric = chart.metric
    n, dim = metric.n, metric.dim
    lam_m = _poly_matrix(lam, n, n, n)
    ell_m = _poly_matrix(ell, dim, dim, n)
    inv_lam = _poly_inv(lam_m, n)
    five = table.five_map

    d_lam = np.empty((n, n, dim, dim), dtype=object)
    for idx in np.ndindex(d_lam.shape):
        d_lam[idx] = Poly(n)
    for S in range(dim):
        for T in range(S + 1, dim):
            for sg in range(n):
                for nu in range(n):
                    acc = Poly(n)
                    for C in range(dim):
                        for D in range(C + 1, dim):
                            coef = five[C, S] * five[D, T] - five[C, T] * five[D, S]
                            if not coef.is_zero:
                                acc = acc + coef * _pair_scalar(
                                    lam_m[sg, nu], chart, C, D
                                )
                    d_lam[sg, nu, S, T] = acc
                    d_lam[sg, nu, T, S] = -acc

    gamma = np.empty((n, n, dim, dim), dtype=object)
    for idx in np.ndindex(gamma.shape):
        gamma[idx] = Poly(n)
    for A in range(dim):
        for B in range(A + 1, dim):
            for mu in range(n):
                for nu in range(n):
                    acc = Poly(n)
                    for S in range(dim):
                        for T in range(dim):
                            weight = ell_m[S, A] * ell_m[T, B]
                            if weight.is_zero:
                                continue
                            for sg in range(n):
                                inner = d_lam[sg, nu, S, T]
                                for tau in range(n):
                                    inner = inner + table.gamma[sg, tau, S, T] * lam_m[tau, nu]
                                acc = acc + inv_lam[mu, sg] * inner * weight
                    gamma[mu, nu, A, B] = acc
                    gamma[mu, nu, B, A] = -acc
    return ConnectionTable(
        chart,
        _poly_matmul(table.four_map, lam_m, n),
        _poly_matmul(table.five_map, ell_m, n),
        gamma,
    )


# -- finite-motion cross-check ----------------------------------------------


def default_grid(metric: Metric, half_width: float = 2.0) -> np.ndarray:
    axes = [np.linspace(-half_width, half_width, 3)] * metric.n
    return np.array(list(itertools.product(*axes)))


def r_partial_check(field, A: int, B: int, h: float = 1e-4, grid=None) -> float:
    """Central-difference the finite-motion pullback against the pair slot.

    Turns on only the (A, B) rate component, exponentiates to parameter
    +/- h, pulls the field back through the resulting coordinate maps, and
    compares the difference quotient with the matching derivative-form
    entry on a grid.  Returns the max absolute residual, expected O(h^2).
    """
    chart = field.chart
    metric = chart.metric
    n, dim = metric.n, metric.dim
    if not 0 <= A < dim or not 0 <= B < dim or A == B:
        raise ValidationError("need two distinct extended indices")
    if h < FD_MIN_STEP:
        raise ValidationError(f"step below the cancellation guard {FD_MIN_STEP}")
    comps = np.zeros((dim, dim))
    comps[A, B] = 1.0
    comps[B, A] = -1.0
    rate = infinitesimal_from_bivector(ExtTensor(chart, 2, 0, comps))
    maps = []
    for sign in (+1.0, -1.0):
        t = exp_motion(rate, sign * h, chart)
        params = t.params
        o = chart.anchor
        maps.append((params.L, o + params.a - params.L @ o, t.comps[:n, :n]))
    expected = d_form(field).entry(A, B)
    if grid is None:
        grid = default_grid(metric)
    worst = 0.0
    scalar = isinstance(field, ScalarField)
    for x in np.asarray(grid, dtype=float):
        (l_p, s_p, _), (l_m, s_m, _) = maps
        if scalar:
            fd = (field(l_p @ x + s_p) - field(l_m @ x + s_m)) / (2.0 * h)
            want = expected(x)
            worst = max(worst, abs(fd - want))
        else:
            lam_p, lam_m = maps[0][2], maps[1][2]
            fd = (lam_p @ field(l_p @ x + s_p) - lam_m @ field(l_m @ x + s_m)) / (
                2.0 * h
            )
            want = np.array([p(x) for p in expected])
            worst = max(worst, float(np.max(np.abs(fd - want))))
    return worst
