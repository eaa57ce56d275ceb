"""Exact and high-precision arithmetic for Pisot-Vijayaraghavan numbers.

A MinimalPolynomialContext bundles a monic integer polynomial with its
refined roots, companion and Vandermonde matrices and a PV / Salem
classification.  AlgebraicElement represents an element of Q(lambda) by
exact rational coordinates over the power basis 1, lambda, ...,
lambda**(n-1); everything decision-critical (traces, norms, lattice
membership bookkeeping) stays in rational arithmetic, floats are reserved
for display-grade embeddings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rootfind
from .errors import (
    ContextMismatch,
    NonMonic,
    NotIntegral,
    NotPV,
    RationalRootFound,
    RootFindingDiverged,
    RootOrderingError,
    ValidationError,
    ZeroConstantTerm,
)

TOL_ROOT = 1e-13
TOL_UNIT = 1e-9
TOL_LIN = 1e-10
TOL_DECAY = 0.02


def _int_divisors(m):
    m = abs(m)
    out = []
    d = 1
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            out.append(m // d)
        d += 1
    return sorted(set(out))


@dataclass(frozen=True, eq=False)
class MinimalPolynomialContext:
    """Monic integer polynomial z**n + c[n-1] z**(n-1) + ... + c[0] with roots.

    Immutable after construction; safe to share across tasks.  Roots are
    ordered with the real root of maximal modulus first and nonreal
    conjugate pairs adjacent.
    """

    coeffs: tuple[int, ...]          # c_0 .. c_{n-1}, leading 1 implied
    precision_bits: int
    roots: np.ndarray                # complex128, length n
    companion: np.ndarray            # n x n int64
    vandermonde: np.ndarray          # n x n complex128, V[i, j] = roots[j]**i
    classification: str              # "PV" | "Salem" | "neither"
    unit_constant: bool
    classification_margin: float     # min over j>=2 of 1 - |root_j|
    power_traces: tuple[int, ...] = field(repr=False)   # trace(C**i), i < 2n
    mult_powers: tuple = field(repr=False)              # (C^T)**i as int tuples

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def lam(self) -> float:
        """The leading (real) root, sign included."""
        return float(self.roots[0].real)

    def element(self, coords) -> AlgebraicElement:
        """Element with the given rational coordinates over the power basis."""
        n = self.degree
        q = tuple(Fraction(c) for c in coords)
        if len(q) > n:
            raise ValidationError(
                f"coordinate vector of length {len(q)} exceeds degree {n}"
            )
        q = q + (Fraction(0),) * (n - len(q))
        return AlgebraicElement(q, self)

    def zero(self) -> AlgebraicElement:
        return self.element([0])

    def one(self) -> AlgebraicElement:
        return self.element([1])

    def lambda_elem(self) -> AlgebraicElement:
        return self.element([0, 1])

    def conjugate_pairs(self):
        """Indices (j, k) of adjacent nonreal conjugate root pairs."""
        pairs = []
        j = 0
        while j < self.degree:
            if self.roots[j].imag != 0.0:
                pairs.append((j, j + 1))
                j += 2
            else:
                j += 1
        return pairs

    def poly_value(self, z):
        """Value of the monic polynomial at z."""
        acc = complex(1.0)
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def to_json(self) -> dict:
        return {"coeffs": list(self.coeffs), "precision_bits": self.precision_bits}

    def __eq__(self, other):
        return (
            isinstance(other, MinimalPolynomialContext)
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash(self.coeffs)


def build_context(coeffs, precision=53, *, tol_root=TOL_ROOT, tol_unit=TOL_UNIT):
    """Build a MinimalPolynomialContext from low-to-high integer coefficients.

    ``coeffs`` lists c_0 .. c_{n-1} of the monic polynomial
    z**n + c_{n-1} z**(n-1) + ... + c_0.  A rational-root test rejects
    obviously reducible inputs; full irreducibility is the caller's
    responsibility.
    """
    coeffs = tuple(int(c) for c in coeffs)
    n = len(coeffs)
    if n < 2:
        raise NonMonic("need degree >= 2 (pass c_0..c_{n-1}, leading 1 implied)")
    if coeffs[0] == 0:
        raise ZeroConstantTerm("constant term is zero")
    for d in _int_divisors(coeffs[0]):
        for cand in (d, -d):
            acc = 1
            for c in reversed(coeffs):
                acc = acc * cand + c
            if acc == 0:
                raise RationalRootFound(f"rational root {cand}: polynomial is reducible")

    full = list(coeffs) + [1]
    roots, residuals = rootfind.all_roots(full)
    reals, pairs = rootfind.pair_conjugates(roots)
    # 1-2 extra Newton steps on the snapped values.
    reals = [_newton_refine(full, z) for z in reals]
    pairs = [(lambda w: (w, w.conjugate()))(_newton_refine(full, z)) for z, _ in pairs]

    if not reals:
        raise RootOrderingError("no real root to serve as the leading root")
    lead = max(reals, key=lambda z: (abs(z), z.real))
    reals.remove(lead)
    units = [[z] for z in reals] + [[z, w] for z, w in pairs]
    units.sort(key=lambda u: (-abs(u[0]), u[0].real, -u[0].imag))
    ordered = [lead] + [z for u in units for z in u]

    worst = max(abs(_poly_at(full, z)) for z in ordered)
    if worst > tol_root:
        raise RootFindingDiverged(f"max residual {worst:.3e} exceeds tol_root {tol_root:g}")

    moduli = [abs(z) for z in ordered[1:]]
    margin = 1.0 - max(moduli) if moduli else float("inf")
    if abs(ordered[0]) > 1.0 and all(m < 1.0 - tol_unit for m in moduli):
        classification = "PV"
    elif (
        abs(ordered[0]) > 1.0
        and all(m <= 1.0 + tol_unit for m in moduli)
        and any(abs(m - 1.0) <= tol_unit for m in moduli)
    ):
        classification = "Salem"
    else:
        classification = "neither"

    companion = np.zeros((n, n), dtype=np.int64)
    for i in range(n - 1):
        companion[i, i + 1] = 1
    companion[n - 1, :] = [-c for c in coeffs]

    rootarr = np.array(ordered, dtype=np.complex128)
    vander = np.vstack([rootarr**i for i in range(n)])

    # Exact integer powers of C (for traces) and of C^T (multiplication by
    # lambda on coordinates).  Plain Python ints: no overflow.
    cmat = [[int(companion[i, j]) for j in range(n)] for i in range(n)]
    ct = [[cmat[j][i] for j in range(n)] for i in range(n)]
    powers = [_int_identity(n)]
    for _ in range(2 * n - 1):
        powers.append(_int_matmul(powers[-1], cmat))
    traces = tuple(sum(p[i][i] for i in range(n)) for p in powers)
    ct_powers = [_int_identity(n)]
    for _ in range(n - 1):
        ct_powers.append(_int_matmul(ct_powers[-1], ct))
    ct_powers = tuple(tuple(tuple(row) for row in p) for p in ct_powers)

    return MinimalPolynomialContext(
        coeffs=coeffs,
        precision_bits=int(precision),
        roots=rootarr,
        companion=companion,
        vandermonde=vander,
        classification=classification,
        unit_constant=abs(coeffs[0]) == 1,
        classification_margin=margin,
        power_traces=traces,
        mult_powers=ct_powers,
    )


def context_from_json(data) -> MinimalPolynomialContext:
    """Rebuild a context from its JSON form; roots are re-derived, never trusted."""
    if isinstance(data, str):
        data = json.loads(data)
    return build_context(data["coeffs"], data.get("precision_bits", 53))


def _poly_at(full, z):
    acc = 0j
    for c in reversed(full):
        acc = acc * z + c
    return acc


def _newton_refine(full, z, steps=3):
    dfull = [i * full[i] for i in range(1, len(full))]
    for _ in range(steps):
        p = _poly_at(full, z)
        dp = _poly_at(dfull, z)
        if dp == 0:
            break
        z = z - p / dp
    return z


def _int_identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _int_matmul(a, b):
    n = len(a)
    return [
        [sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)]
        for i in range(n)
    ]


@dataclass(frozen=True, eq=False)
class AlgebraicElement:
    """q_0 + q_1*lambda + ... + q_{n-1}*lambda**(n-1) with exact rational q."""

    coords: tuple[Fraction, ...]
    context: MinimalPolynomialContext

    def _check(self, other):
        if self.context != other.context:
            raise ContextMismatch("elements belong to different contexts")

    def __add__(self, other):
        self._check(other)
        return AlgebraicElement(
            tuple(a + b for a, b in zip(self.coords, other.coords)), self.context
        )

    def __sub__(self, other):
        self._check(other)
        return AlgebraicElement(
            tuple(a - b for a, b in zip(self.coords, other.coords)), self.context
        )

    def __neg__(self):
        return AlgebraicElement(tuple(-a for a in self.coords), self.context)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return AlgebraicElement(
                tuple(a * other for a in self.coords), self.context
            )
        self._check(other)
        n = self.context.degree
        conv = [Fraction(0)] * (2 * n - 1)
        for i, a in enumerate(self.coords):
            if a:
                for j, b in enumerate(other.coords):
                    if b:
                        conv[i + j] += a * b
        c = self.context.coeffs
        for d in range(2 * n - 2, n - 1, -1):
            t = conv[d]
            if t:
                for i in range(n):
                    conv[d - n + i] -= t * c[i]
                conv[d] = Fraction(0)
        return AlgebraicElement(tuple(conv[:n]), self.context)

    __rmul__ = __mul__

    def times_lambda(self):
        """Fast multiplication by lambda (companion-transpose action)."""
        q = self.coords
        c = self.context.coeffs
        n = self.context.degree
        top = q[n - 1]
        new = [-c[0] * top] + [q[i - 1] - c[i] * top for i in range(1, n)]
        return AlgebraicElement(tuple(new), self.context)

    def lambda_power_times(self, k):
        """self * lambda**k for k >= 0, exactly."""
        out = self
        for _ in range(k):
            out = out.times_lambda()
        return out

    def is_integral(self) -> bool:
        """True iff the element lies in Z[lambda] (all coordinates integers)."""
        return all(q.denominator == 1 for q in self.coords)

    def embed(self) -> np.ndarray:
        """Conjugate embeddings: component j is the value at root j."""
        qf = np.array([float(q) for q in self.coords])
        return qf @ self.context.vandermonde

    def real_value(self) -> float:
        """Value at the leading root."""
        return float(self.embed()[0].real)

    def trace(self) -> Fraction:
        """Sum of conjugates, exactly (integer power-trace combination)."""
        t = self.context.power_traces
        return sum((q * t[i] for i, q in enumerate(self.coords)), Fraction(0))

    def norm(self) -> Fraction:
        """Product of conjugates: determinant of the multiplication matrix."""
        n = self.context.degree
        powers = self.context.mult_powers
        mat = [
            [
                sum(q * powers[i][r][c] for i, q in enumerate(self.coords))
                for c in range(n)
            ]
            for r in range(n)
        ]
        return _fraction_det(mat)

    def trace_and_norm(self):
        return self.trace(), self.norm()

    def __eq__(self, other):
        return (
            isinstance(other, AlgebraicElement)
            and self.context == other.context
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash((self.coords, self.context.coeffs))

    def __repr__(self):
        return f"AlgebraicElement({[str(q) for q in self.coords]})"


def _fraction_det(mat):
    n = len(mat)
    m = [row[:] for row in mat]
    det = Fraction(1)
    for col in range(n):
        piv = None
        for r in range(col, n):
            if m[r][col]:
                piv = r
                break
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] * inv
            if f:
                for c in range(col, n):
                    m[r][c] -= f * m[col][c]
    return det


def elem_arith(a: AlgebraicElement, b: AlgebraicElement, op: str) -> AlgebraicElement:
    """Named-op form of the exact field arithmetic (add | sub | mul)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def nearest_integer_sequence(a: AlgebraicElement, k_max: int, *, tol_decay=TOL_DECAY):
    """Integers n_k with lambda**k * a - n_k -> 0, plus the exact distances.

    Requires a PV context and a in Z[lambda].  n_k is the exact trace of
    lambda**k * a; the distance |lambda**k * a - n_k| equals the modulus of
    the sum of the non-leading conjugates, which is what gets computed
    (numerically stable for any k, no large-integer cancellation).
    Returns a list of (k, n_k, distance).
    """
    ctx = a.context
    if ctx.classification != "PV":
        raise NotPV(f"context classifies as {ctx.classification}, not PV")
    if not a.is_integral():
        raise NotIntegral("element is not in Z[lambda]")
    conj = a.embed()[1:]              # fixed small embeddings of a
    lam_conj = ctx.roots[1:]
    out = []
    elem = a
    for k in range(k_max + 1):
        n_k = elem.trace()
        assert n_k.denominator == 1
        dist = abs(np.sum(conj * lam_conj**k))
        out.append((k, int(n_k), float(dist)))
        elem = elem.times_lambda()
    return out


def decay_bound_holds(seq, ctx, *, k_fit=5, tol_decay=TOL_DECAY):
    """Check distance(k) <= c * r**k for k >= k_fit with r = max |conj| + tol.

    c is fitted over the first k_fit terms.  Zero distances (e.g. a = 0)
    trivially satisfy the bound.
    """
    r = max(abs(z) for z in ctx.roots[1:]) + tol_decay
    head = [d / r**k for k, _, d in seq[: k_fit + 1]]
    c = max(head) if head else 0.0
    if c == 0.0:
        return all(d == 0.0 for _, _, d in seq)
    return all(d <= c * r**k * (1 + 1e-12) for k, _, d in seq[k_fit:])
