"""Refinement masks and the numerical analysis of refinable distributions.

A mask is the normalized exponential sum A(y) = |lambda|**-1 * sum a_j
exp(2 pi i tau_j y); the Fourier transform of the refinable distribution
is the infinite product of A over geometrically contracted arguments.
This module computes the almost-periodic exponent representation of A,
Mahler measures (Jensen in one variable, torus quadrature plus univariate
specialization in several), the decay exponent, long-range averages of
ln|A| and ln|f^|, sublevel measures and the nonintegrability evidence:
dilation orbits of f^ and periodic toral orbit means.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rootfind
from .algnum import AlgebraicElement, MinimalPolynomialContext, context_from_json
from .errors import (
    AllSamplesClipped,
    ContextMismatch,
    NonIncreasingTranslations,
    NotIntegral,
    QuadratureNonconvergent,
    SumRuleViolated,
    ValidationError,
    ZeroCoefficient,
    ZeroHit,
    ZeroOnOrbit,
    ZeroPolynomial,
)

TOL_MASK = 1e-9
TOL_MAHLER = 1e-6
TOL_ZERO = 1e-12
V_CLIP = 1e-300
TAIL_TOL = 1e-12


# --- integer lattice basis (Hermite-style row reduction) -----------------

def _row_basis(rows):
    """Echelon basis of the integer row lattice spanned by ``rows``."""
    work = [list(r) for r in rows if any(r)]
    ncols = len(rows[0]) if rows else 0
    basis = []
    col = 0
    while work and col < ncols:
        live = [r for r in work if r[col] != 0]
        rest = [r for r in work if r[col] == 0]
        while len(live) > 1:
            live.sort(key=lambda r: abs(r[col]))
            piv = live[0]
            for r in live[1:]:
                q = r[col] // piv[col]
                for c in range(ncols):
                    r[c] -= q * piv[c]
            rest.extend(r for r in live[1:] if r[col] == 0 and any(r))
            live = [piv] + [r for r in live[1:] if r[col] != 0]
        if live:
            piv = live[0]
            if piv[col] < 0:
                piv = [-x for x in piv]
            basis.append(piv)
        work = rest
        col += 1
    return basis


def _solve_integer_coords(target, basis):
    """Integer coordinates of ``target`` in the echelon ``basis`` rows."""
    t = list(target)
    coords = []
    for row in basis:
        p = next(i for i, x in enumerate(row) if x != 0)
        if t[p] % row[p] != 0:
            raise ValidationError("translation lattice solve failed (non-integer quotient)")
        q = t[p] // row[p]
        coords.append(q)
        for c in range(len(t)):
            t[c] -= q * row[c]
    if any(t):
        raise ValidationError("translation lattice solve failed (residual)")
    return coords


# --- the mask -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RefinementMask:
    """Dilation, coefficients and translations, plus the exponent form.

    Translations are exact rational coordinate vectors: over the power
    basis of ``context`` when the dilation is an algebraic integer, plain
    rationals (length-1 vectors) otherwise.  The exponent form realizes
    A(y) = prod_c z_c**shift_c * P(z_1, ..., z_d) with z_c = exp(2 pi i
    r_c y): ``exponents`` holds the raw integer matrix E with tau_j =
    sum_c E[j,c] * r_c exactly, ``shift`` its columnwise minima, and the
    polynomial P uses E - shift (non-negative exponents, same modulus on
    the torus).
    """

    dilation: float
    context: MinimalPolynomialContext | None
    coeffs: tuple[complex, ...]
    tau_coords: tuple[tuple[Fraction, ...], ...]
    tau_values: tuple[float, ...]
    r_coords: tuple[tuple[Fraction, ...], ...]
    r_values: tuple[float, ...]
    exponents: tuple[tuple[int, ...], ...]
    shift: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.coeffs)

    @property
    def d(self) -> int:
        return len(self.r_values)

    @property
    def abs_dilation(self) -> float:
        return abs(self.dilation)

    def poly_exponents(self):
        """E - shift, columnwise non-negative."""
        return tuple(
            tuple(e - s for e, s in zip(row, self.shift)) for row in self.exponents
        )

    def __call__(self, y):
        """A(y); accepts scalars or numpy arrays."""
        y = np.asarray(y, dtype=np.float64)
        taus = np.array(self.tau_values)
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        phases = np.exp(2j * np.pi * np.multiply.outer(y, taus))
        return phases @ coeffs / self.abs_dilation

    def eval_exponent_form(self, y):
        """A(y) recomputed through the torus variables z_c = e^(2 pi i r_c y)."""
        y = np.asarray(y, dtype=np.float64)
        zs = [np.exp(2j * np.pi * r * y) for r in self.r_values]
        acc = np.zeros(y.shape, dtype=np.complex128)
        for a, row in zip(self.coeffs, self.exponents):
            term = np.full(y.shape, a, dtype=np.complex128)
            for z, e in zip(zs, row):
                term = term * z**int(e)
            acc += term
        return acc / self.abs_dilation

    def poly_trig(self, points):
        """P_trig at torus points, shape (..., d) -> complex array."""
        pts = np.asarray(points, dtype=np.float64)
        epoly = np.array(self.poly_exponents(), dtype=np.float64)  # (m, d)
        phases = pts @ epoly.T  # (..., m)
        coeffs = np.array(self.coeffs, dtype=np.complex128) / self.abs_dilation
        return np.exp(2j * np.pi * phases) @ coeffs

    def integer_translation_rows(self):
        """Integer power-basis coordinates of the translations (Z[lambda])."""
        if self.context is None:
            rows = []
            for q in self.tau_coords:
                if q[0].denominator != 1:
                    raise NotIntegral("translations are not integers")
                rows.append((int(q[0]),))
            return rows
        rows = []
        for q in self.tau_coords:
            if any(c.denominator != 1 for c in q):
                raise NotIntegral("translations are not in Z[lambda]")
            rows.append(tuple(int(c) for c in q))
        return rows

    def to_json(self) -> dict:
        lam = (
            {"poly": list(self.context.coeffs)}
            if self.context is not None
            else {"real": self.dilation}
        )
        return {
            "lambda": lam,
            "coeffs": [[z.real, z.imag] for z in self.coeffs],
            "translations": [[str(c) for c in q] for q in self.tau_coords],
        }


def build_mask(dilation, coeffs, translations, *, tol_mask=TOL_MASK) -> RefinementMask:
    """Validate inputs and derive the exponent representation.

    ``dilation`` is a real number with |dilation| > 1 or a
    MinimalPolynomialContext (its leading root is used, sign included).
    ``translations`` are Fractions/ints in the scalar case, coordinate
    sequences or AlgebraicElements over the context otherwise.
    """
    ctx = dilation if isinstance(dilation, MinimalPolynomialContext) else None
    lam = ctx.lam if ctx is not None else float(dilation)
    if abs(lam) <= 1:
        raise ValidationError(f"|dilation| must exceed 1, got {lam}")
    coeffs = tuple(complex(a) for a in coeffs)
    if any(a == 0 for a in coeffs):
        raise ZeroCoefficient("all mask coefficients must be nonzero")
    if abs(sum(coeffs) - abs(lam)) > tol_mask:
        raise SumRuleViolated(
            f"coefficients sum to {sum(coeffs)}, dilation modulus is {abs(lam)}"
        )

    tau_coords = []
    tau_values = []
    if ctx is None:
        for t in translations:
            q = Fraction(t)
            tau_coords.append((q,))
            tau_values.append(float(q))
        dim = 1
    else:
        for t in translations:
            elem = t if isinstance(t, AlgebraicElement) else ctx.element(t)
            if elem.context != ctx:
                raise ContextMismatch("translation context differs from dilation context")
            tau_coords.append(elem.coords)
            tau_values.append(elem.real_value())
        dim = ctx.degree
    if len(tau_coords) != len(coeffs):
        raise ValidationError("coefficients and translations differ in length")
    if any(b - a <= 0 for a, b in zip(tau_values, tau_values[1:])):
        raise NonIncreasingTranslations("translations must be strictly increasing")

    den = 1
    for q in tau_coords:
        for c in q:
            den = den * c.denominator // math.gcd(den, c.denominator)
    int_rows = [[int(c * den) for c in q] for q in tau_coords]
    basis = _row_basis(int_rows)
    d = len(basis)
    exponents = tuple(
        tuple(_solve_integer_coords(row, basis)) for row in int_rows
    )
    r_coords = tuple(tuple(Fraction(x, den) for x in b) for b in basis)
    if ctx is None:
        r_values = tuple(float(rc[0]) for rc in r_coords)
    else:
        r_values = tuple(ctx.element(rc).real_value() for rc in r_coords)
    shift = tuple(
        min(row[c] for row in exponents) if exponents else 0 for c in range(d)
    )
    return RefinementMask(
        dilation=lam,
        context=ctx,
        coeffs=coeffs,
        tau_coords=tuple(tau_coords),
        tau_values=tuple(tau_values),
        r_coords=r_coords,
        r_values=r_values,
        exponents=exponents,
        shift=shift,
    )


def mask_from_json(data) -> RefinementMask:
    if isinstance(data, str):
        data = json.loads(data)
    lam = data["lambda"]
    coeffs = [complex(re, im) for re, im in data["coeffs"]]
    translations = [tuple(Fraction(c) for c in q) for q in data["translations"]]
    if "poly" in lam:
        ctx = context_from_json({"coeffs": lam["poly"]})
        return build_mask(ctx, coeffs, translations)
    return build_mask(
        float(lam["real"]), coeffs, [q[0] for q in translations]
    )


# --- classic example masks ------------------------------------------------

def haar_mask() -> RefinementMask:
    """Indicator of the unit interval: dilation 2, translations 0, 1."""
    return build_mask(2.0, (1.0, 1.0), (0, 1))


def cantor_mask() -> RefinementMask:
    """Uniform measure on the middle-thirds set: dilation 3, translations 0, 2."""
    return build_mask(3.0, (1.5, 1.5), (0, 2))


def bernoulli_mask(ctx_or_dilation) -> RefinementMask:
    """Fair Bernoulli convolution mask: coefficients |lambda|/2 at 0 and 1."""
    lam = (
        ctx_or_dilation.lam
        if isinstance(ctx_or_dilation, MinimalPolynomialContext)
        else float(ctx_or_dilation)
    )
    half = abs(lam) / 2.0
    if isinstance(ctx_or_dilation, MinimalPolynomialContext):
        ctx = ctx_or_dilation
        return build_mask(ctx, (half, half), (ctx.zero(), ctx.one()))
    return build_mask(lam, (half, half), (0, 1))


def negative_rho_mask() -> RefinementMask:
    """1 + e^(2 pi i y) - e^(4 pi i y): a mask whose transform grows."""
    return build_mask(2.0, (2.0, 2.0, -2.0), (0, 1, 2))


# --- Mahler measures ------------------------------------------------------

@dataclass(frozen=True)
class MahlerResult:
    value: float
    method: str                      # jensen | torus_quadrature | univariate_limit
    error_estimate: float


def mahler_univariate(coeffs) -> MahlerResult:
    """Jensen evaluation |lead| * prod max(1, |root|) via the shared root-finder."""
    c = [complex(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    if not c:
        raise ZeroPolynomial("zero polynomial has no Mahler measure")
    if len(c) == 1:
        return MahlerResult(abs(c[0]), "jensen", 0.0)
    roots, _ = rootfind.all_roots(c)
    deriv = [i * c[i] for i in range(1, len(c))]
    value = abs(c[-1])
    rel_err = 0.0
    for z in roots:
        mag = abs(z)
        value *= max(1.0, mag)
        p = rootfind.polyval(c, z)
        dp = rootfind.polyval(deriv, z)
        u = abs(p / dp) if dp != 0 else abs(p)
        if mag > 1.0:
            rel_err += u / mag
        elif abs(mag - 1.0) <= u:
            rel_err += u
    return MahlerResult(value, "jensen", value * rel_err)


def _univariate_from_mask(mask: RefinementMask):
    epoly = mask.poly_exponents()
    degree = max(row[0] for row in epoly)
    coeffs = [0j] * (degree + 1)
    for a, row in zip(mask.coeffs, epoly):
        coeffs[row[0]] += a / mask.abs_dilation
    return coeffs


def mahler_specialized(mask: RefinementMask, k_tuple) -> MahlerResult:
    """Mahler measure of the univariate specialization P(z^k_1, ..., z^k_d)."""
    epoly = mask.poly_exponents()
    exps = [sum(e * k for e, k in zip(row, k_tuple)) for row in epoly]
    degree = max(exps)
    coeffs = [0j] * (degree + 1)
    for a, e in zip(mask.coeffs, exps):
        coeffs[e] += a / mask.abs_dilation
    res = mahler_univariate(coeffs)
    return MahlerResult(res.value, "univariate_limit", res.error_estimate)


def mahler_mask(
    mask: RefinementMask,
    *,
    tol_mahler=TOL_MAHLER,
    grid_start=64,
    grid_cap=4096,
    v_clip=V_CLIP,
) -> MahlerResult:
    """Mahler measure of the mask's polynomial.

    One torus variable: Jensen, exactly the univariate code path.  Two or
    more: midpoint torus quadrature of ln|P_trig| under grid doubling,
    cross-checked against the univariate-specialization limit; the
    discrepancy folds into the error estimate.
    """
    if mask.d == 0:
        return MahlerResult(abs(sum(mask.coeffs)) / mask.abs_dilation, "jensen", 0.0)
    if mask.d == 1:
        return mahler_univariate(_univariate_from_mask(mask))

    d = mask.d
    cap = grid_cap if d == 2 else 256
    n = grid_start
    prev = None
    while True:
        axes = [(np.arange(n) + 0.5) / n for _ in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
        vals = np.log(np.maximum(np.abs(mask.poly_trig(pts)), v_clip))
        est = float(np.mean(vals))
        if prev is not None and abs(est - prev) <= tol_mahler:
            break
        if n >= cap:
            raise QuadratureNonconvergent(
                f"torus quadrature still moving by {abs(est - (prev or est)):.2e} at grid {n}^{d}"
            )
        prev = est
        n *= 2
    quad = math.exp(est)
    grid_err = abs(est - prev) * quad

    ks = (61, 89, 127)
    specials = [mahler_specialized(mask, (1,) + (k,) * (d - 1)).value for k in ks]
    cross = abs(quad - specials[-1])
    return MahlerResult(quad, "torus_quadrature", grid_err + cross)


def rho(mask: RefinementMask, *, mahler: MahlerResult | None = None) -> float:
    """Decay exponent -ln M(A) / ln |lambda|.

    The absolute value of the dilation keeps the exponent real for
    negative dilations; a mask with M(A) > 1 gets a negative exponent
    (its transform grows along dilation orbits).
    """
    m = mahler if mahler is not None else mahler_mask(mask)
    return -math.log(m.value) / math.log(mask.abs_dilation)


# --- Fourier product ------------------------------------------------------

def _tail_depth(mask: RefinementMask, ymax: float, tail_tol: float) -> int:
    lam = mask.abs_dilation
    c = (
        2.0
        * np.pi
        / lam
        * sum(abs(a) * abs(t) for a, t in zip(mask.coeffs, mask.tau_values))
    )
    if ymax == 0 or c == 0:
        return 1
    k = math.log(max(c * ymax / (tail_tol * (lam - 1.0)), 1.0)) / math.log(lam)
    return max(1, int(math.ceil(k)))


def fourier_hat(mask: RefinementMask, y, tail_tol=TAIL_TOL):
    """f^(y) as the truncated product of mask values at contracted arguments.

    The truncation depth K makes the neglected tail smaller than tail_tol;
    f^(0) = 1 exactly.  Accepts scalars or arrays.
    """
    scalar = np.isscalar(y)
    ys = np.atleast_1d(np.asarray(y, dtype=np.float64))
    out = np.ones(ys.shape, dtype=np.complex128)
    ymax = float(np.max(np.abs(ys))) if ys.size else 0.0
    if ymax > 0:
        k_depth = _tail_depth(mask, ymax, tail_tol)
        lam = mask.dilation
        for k in range(1, k_depth + 1):
            out *= mask(ys * lam ** (-k))
    out[ys == 0] = 1.0
    return complex(out[0]) if scalar else out


def log_abs_hat(mask: RefinementMask, ys, tail_tol=TAIL_TOL, v_clip=V_CLIP):
    """ln |f^(y)| on an array, accumulated as a sum of clipped factor logs."""
    ys = np.asarray(ys, dtype=np.float64)
    ymax = float(np.max(np.abs(ys))) if ys.size else 0.0
    out = np.zeros(ys.shape)
    if ymax == 0:
        return out
    k_depth = _tail_depth(mask, ymax, tail_tol)
    lam = mask.dilation
    for k in range(1, k_depth + 1):
        out += np.log(np.maximum(np.abs(mask(ys * lam ** (-k))), v_clip))
    return out


# --- long-range averages --------------------------------------------------

@dataclass(frozen=True)
class MeanLogResult:
    value: float
    samples: int
    clipped: int


def mean_log_mask(
    mask: RefinementMask,
    L: float,
    samples_per_unit: int = 64,
    *,
    v_clip=V_CLIP,
) -> MeanLogResult:
    """Midpoint estimate of (1/2L) * integral of ln|A| over [-L, L].

    The sample count 2*L*samples_per_unit + 1 is deliberately coprime-ish
    with the almost-periods of |A| so the phases stratify; samples landing
    on zeros of A are clipped at v_clip and counted.
    """
    if L < 1:
        raise ValidationError("L must be at least 1")
    n = int(round(2 * L * samples_per_unit)) + 1
    h = 2.0 * L / n
    ys = -L + (np.arange(n) + 0.5) * h
    absa = np.abs(mask(ys))
    clipped = int(np.count_nonzero(absa <= v_clip))
    if clipped == n:
        raise AllSamplesClipped("every sample sat on a zero of the mask")
    vals = np.log(np.maximum(absa, v_clip))
    return MeanLogResult(float(np.mean(vals)), n, clipped)


def mean_log_hat(
    mask: RefinementMask,
    L: float,
    samples_per_unit: float = 8.0,
    *,
    tail_tol=1e-10,
    base_samples: int = 257,
) -> MeanLogResult:
    """Estimate of (1/(2L ln L)) * integral of ln|f^| over [-L, L].

    The integrand is sampled per dilation shell [|lambda|^j, |lambda|^(j+1))
    mirroring the proof structure of the asymptotic, with midpoint counts
    one larger than commensurate so sample phases stratify within shells.
    """
    lam = mask.abs_dilation
    if L < lam * lam:
        raise ValidationError("L must be at least the squared dilation")
    boundaries = [1.0]
    while boundaries[-1] * lam < L:
        boundaries.append(boundaries[-1] * lam)
    boundaries.append(L)

    total = 0.0
    count = 0
    # central cell [-1, 1]
    ys = -1.0 + (np.arange(base_samples) + 0.5) * (2.0 / base_samples)
    vals = log_abs_hat(mask, ys, tail_tol)
    total += 2.0 * float(np.mean(vals))
    count += base_samples
    for a, b in zip(boundaries, boundaries[1:]):
        width = b - a
        n = int(math.ceil(width * samples_per_unit)) + 1
        xs = a + (np.arange(n) + 0.5) * (width / n)
        for sign in (1.0, -1.0):
            vals = log_abs_hat(mask, sign * xs, tail_tol)
            total += width * float(np.mean(vals))
            count += n
    return MeanLogResult(total / (2.0 * L * math.log(L)), count, 0)


@dataclass(frozen=True)
class SublevelResult:
    pairs: list              # (v, measure estimate) rows
    fitted_constant: float   # sup over grid of mu / (L * v^(1/(m-1)))
    samples: int


def sublevel_measure(
    mask: RefinementMask, v_grid, L: float, samples: int = 10**5
) -> SublevelResult:
    """Estimate mu{ y in [-L, L] : |A(y)| <= v } on a grid of thresholds.

    Also fits the constant of the sublevel bound shape L * c * v^(1/(m-1));
    the fit should be stable under doubling of L for genuine masks.
    """
    vs = [float(v) for v in v_grid]
    if any(b <= a for a, b in zip(vs, vs[1:])) or any(v <= 0 for v in vs):
        raise ValidationError("threshold grid must be positive and increasing")
    n = int(samples) + 1
    h = 2.0 * L / n
    ys = -L + (np.arange(n) + 0.5) * h
    absa = np.abs(mask(ys))
    pairs = []
    fitted = 0.0
    expo = 1.0 / (mask.m - 1) if mask.m > 1 else 1.0
    for v in vs:
        mu = 2.0 * L * float(np.count_nonzero(absa <= v)) / n
        pairs.append((v, mu))
        fitted = max(fitted, mu / (L * v**expo))
    return SublevelResult(pairs, fitted, n)


# --- nonintegrability evidence --------------------------------------------

@dataclass(frozen=True)
class DilationOrbitResult:
    ks: list
    values: list             # complex f^(alpha * lambda^k)
    plateau_stat: float      # max relative modulus change over the last 5 terms


def erdos_sequence(
    mask: RefinementMask,
    alpha,
    k_max: int,
    *,
    tail_tol=TAIL_TOL,
    tol_zero=TOL_ZERO,
) -> DilationOrbitResult:
    """f^(alpha * lambda^k) for k = 0..k_max via the functional equation.

    Mask arguments along the orbit are reduced exactly: for an algebraic
    dilation the fractional part of tau_i * alpha * lambda^k comes from
    the exact trace minus the (numerically stable) sum of the decaying
    conjugates, so precision does not degrade with k; for a rational
    dilation everything is plain rational arithmetic.  A vanishing factor
    raises ZeroHit with the exponent at which the mask vanished; negative
    exponents arise in the evaluation of f^(alpha) itself.
    """
    ctx = mask.context
    if ctx is None:
        return _erdos_sequence_rational(
            mask, Fraction(alpha), k_max, tail_tol=tail_tol, tol_zero=tol_zero
        )
    if ctx.classification != "PV":
        raise ValidationError(f"context classifies as {ctx.classification}, not PV")
    if not isinstance(alpha, AlgebraicElement) or alpha.context != ctx:
        raise ContextMismatch("alpha must be an element of the dilation context")
    mask.integer_translation_rows()   # raises NotIntegral unless in Z[lambda]

    if all(c == 0 for c in alpha.coords):
        return DilationOrbitResult(
            list(range(k_max + 1)), [1.0 + 0j] * (k_max + 1), 0.0
        )

    hat_alpha = _hat_with_zero_check(mask, alpha.real_value(), tail_tol, tol_zero)

    taus = [ctx.element(q) for q in mask.tau_coords]
    betas = [t * alpha for t in taus]
    conj_embeds = [b.embed()[1:] for b in betas]
    lam_conj = ctx.roots[1:]
    coeffs = np.array(mask.coeffs, dtype=np.complex128)

    values = [hat_alpha]
    current = hat_alpha
    exact = list(betas)
    for k in range(k_max):
        phases = []
        for i in range(len(taus)):
            tr = exact[i].trace()
            frac = tr - math.floor(tr)
            conj = complex(np.sum(conj_embeds[i] * lam_conj**k))
            phases.append(float(frac) - conj.real)
        factor = complex(
            np.sum(coeffs * np.exp(2j * np.pi * np.array(phases)))
        ) / mask.abs_dilation
        if abs(factor) <= tol_zero:
            raise ZeroHit(f"mask vanishes at alpha * lambda^{k}", k, abs(factor))
        current = current * factor
        values.append(current)
        exact = [e.times_lambda() for e in exact]

    return DilationOrbitResult(
        list(range(k_max + 1)), values, _plateau_stat(values)
    )


def _plateau_stat(values, window=5):
    mods = [abs(v) for v in values[-window:]]
    plateau = 0.0
    for a, b in zip(mods, mods[1:]):
        plateau = max(plateau, abs(b - a) / max(abs(a), abs(b), 1e-300))
    return plateau


def _hat_with_zero_check(mask, a_real, tail_tol, tol_zero):
    """Truncated product for f^(alpha) with per-factor zero detection."""
    if a_real == 0:
        return 1.0 + 0.0j
    depth = _tail_depth(mask, abs(a_real), tail_tol)
    lam = mask.dilation
    out = 1.0 + 0.0j
    for i in range(1, depth + 1):
        factor = complex(mask(a_real * lam ** (-i)))
        if abs(factor) <= tol_zero:
            raise ZeroHit(f"mask vanishes at alpha * lambda^{-i}", -i, abs(factor))
        out *= factor
    return out


def _erdos_sequence_rational(mask, alpha, k_max, *, tail_tol, tol_zero):
    """Rational-dilation branch: arguments stay exact Fractions mod 1."""
    lam_frac = Fraction(mask.dilation)
    if lam_frac != mask.dilation:
        raise ValidationError("scalar dilation must be rational for exact orbits")
    taus = [q[0] for q in mask.tau_coords]
    if alpha == 0:
        return DilationOrbitResult(
            list(range(k_max + 1)), [1.0 + 0j] * (k_max + 1), 0.0
        )
    hat_alpha = _hat_with_zero_check(mask, float(alpha), tail_tol, tol_zero)
    coeffs = np.array(mask.coeffs, dtype=np.complex128)
    values = [hat_alpha]
    current = hat_alpha
    arg = alpha
    for k in range(k_max):
        phases = np.array([float((t * arg) % 1) for t in taus])
        factor = complex(
            np.sum(coeffs * np.exp(2j * np.pi * phases))
        ) / mask.abs_dilation
        if abs(factor) <= tol_zero:
            raise ZeroHit(f"mask vanishes at alpha * lambda^{k}", k, abs(factor))
        current = current * factor
        values.append(current)
        arg = arg * lam_frac
    return DilationOrbitResult(
        list(range(k_max + 1)), values, _plateau_stat(values)
    )


def torus_entry_point(alpha: AlgebraicElement) -> tuple[Fraction, ...]:
    """Rational torus point whose orbit the dilation orbit of alpha shadows.

    Component i is trace(lambda**i * alpha) mod 1; the companion
    endomorphism orbit of this point is eventually periodic and attracts
    p_n([alpha lambda^k, ..., alpha lambda^(k+n-1)]).
    """
    ctx = alpha.context
    out = []
    elem = alpha
    for _ in range(ctx.degree):
        out.append(elem.trace() % 1)
        elem = elem.times_lambda()
    return tuple(out)


@dataclass(frozen=True)
class OrbitMeanResult:
    preperiod: int
    cycle_length: int
    mean: float
    cycle_start: tuple


def orbit_mean(
    ctx: MinimalPolynomialContext,
    mask: RefinementMask,
    q,
    *,
    tol_zero=TOL_ZERO,
) -> OrbitMeanResult:
    """Mean of ln |P_trig| over the periodic part of the companion orbit of q.

    q is a rational point of the n-torus iterated by the companion matrix,
    exactly over Fractions; the orbit is finite by pigeonhole.  A zero of
    the mask polynomial on the cycle raises ZeroOnOrbit (the mean is
    -infinity there), which doubles as a zero certificate for the orbit.
    """
    if mask.context is not None and mask.context != ctx:
        raise ContextMismatch("mask and context disagree")
    rows = mask.integer_translation_rows()
    n = ctx.degree
    if mask.context is None:
        rows = [(r[0],) + (0,) * (n - 1) for r in rows]
    state = tuple(Fraction(x) % 1 for x in q)
    if len(state) != n:
        raise ValidationError(f"need a rational {n}-vector")

    cmat = [[int(ctx.companion[i, j]) for j in range(n)] for i in range(n)]
    seen = {state: 0}
    path = [state]
    while True:
        nxt = tuple(
            (sum(cmat[i][j] * path[-1][j] for j in range(n))) % 1 for i in range(n)
        )
        if nxt in seen:
            start = seen[nxt]
            cycle = path[start:]
            break
        seen[nxt] = len(path)
        path.append(nxt)

    coeffs = np.array(mask.coeffs, dtype=np.complex128) / mask.abs_dilation
    total = 0.0
    for step, x in enumerate(cycle):
        phases = np.array(
            [float(sum(t * xi for t, xi in zip(row, x)) % 1) for row in rows]
        )
        val = complex(np.sum(coeffs * np.exp(2j * np.pi * phases)))
        if abs(val) <= tol_zero:
            raise ZeroOnOrbit(
                f"mask polynomial vanishes on the cycle at step {start + step}",
                tuple(str(c) for c in x),
                start + step,
                abs(val),
            )
        total += math.log(abs(val))
    return OrbitMeanResult(
        preperiod=start,
        cycle_length=len(cycle),
        mean=total / len(cycle),
        cycle_start=cycle[0],
    )
