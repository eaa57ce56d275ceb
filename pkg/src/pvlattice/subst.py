"""Substitution dynamics on quasilattice gap intervals.

Inflating a gap interval by the PV number decomposes it exactly into
translated gap intervals; reading that decomposition off observed
occurrences yields a substitution rule whose iteration regenerates the
lattice.  All identifications use exact integer preimage vectors, floats
only order output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import qlat
from .algnum import AlgebraicElement, MinimalPolynomialContext, context_from_json
from .errors import (
    AlphabetUnstable,
    NotUnitConstant,
    OccurrenceInconsistent,
    Overflow,
    TooFewPoints,
)

EXPAND_BUDGET = 10**6


@dataclass(frozen=True)
class SubstitutionRule:
    """Per gap type, the exact decomposition of its inflated interval.

    gap_types[j] is the exact preimage difference vector of type j (type 0
    is the gap at the origin, hence a lattice element); decompositions[j]
    is the ordered list of (offset preimage vector, child type index) read
    off generic occurrences.

    origin_decomposition is None when the origin occurrence of type 0
    agrees with the generic ones.  When the window is non-generic (its
    boundary meets Z[lambda], e.g. sigma_2 = 1 for the golden context) the
    origin sits on a type boundary and inflates differently; the seed tile
    then carries this collar decomposition so that iteration still
    reproduces the lattice exactly.
    """

    context: MinimalPolynomialContext
    window: tuple[float, ...]
    gap_types: tuple[tuple[int, ...], ...]
    gap_values: tuple[float, ...]
    decompositions: tuple[tuple[tuple[tuple[int, ...], int], ...], ...]
    origin_decomposition: tuple | None = None

    @property
    def m(self) -> int:
        return len(self.gap_types)

    def gap_element(self, j) -> AlgebraicElement:
        return self.context.element(self.gap_types[j])

    def incidence_matrix(self) -> np.ndarray:
        """counts[j, i] = number of type-i children of type j."""
        m = self.m
        counts = np.zeros((m, m), dtype=np.int64)
        for j, decomp in enumerate(self.decompositions):
            for _, child in decomp:
                counts[j, child] += 1
        return counts

    def perron_eigenvalue(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.incidence_matrix()))))

    def check_length_equations(self) -> bool:
        """lambda * c_j = sum of child lengths, exactly in coordinates."""
        elem = self.context.element
        rows = list(enumerate(self.decompositions))
        if self.origin_decomposition is not None:
            rows.append((0, self.origin_decomposition))
        for j, decomp in rows:
            lhs = elem(self.gap_types[j]).times_lambda()
            rhs = self.context.zero()
            for _, child in decomp:
                rhs = rhs + elem(self.gap_types[child])
            if lhs != rhs:
                return False
            # offsets are the partial sums of child lengths
            acc = self.context.zero()
            for off, child in decomp:
                if elem(off) != acc:
                    return False
                acc = acc + elem(self.gap_types[child])
        return True

    def to_json(self) -> dict:
        return {
            "context": self.context.to_json(),
            "window": list(self.window),
            "gap_types": [list(t) for t in self.gap_types],
            "decompositions": [
                [[list(off), child] for off, child in decomp]
                for decomp in self.decompositions
            ],
            "origin_decomposition": None
            if self.origin_decomposition is None
            else [[list(off), child] for off, child in self.origin_decomposition],
            "matrices": [
                {"offset": list(off), "matrix": mat.tolist()}
                for off, mat in vector_mask(self)
            ],
        }


def rule_from_json(data) -> SubstitutionRule:
    if isinstance(data, str):
        data = json.loads(data)
    ctx = context_from_json(data["context"])
    origin = data.get("origin_decomposition")
    rule = SubstitutionRule(
        context=ctx,
        window=tuple(data["window"]),
        gap_types=tuple(tuple(t) for t in data["gap_types"]),
        gap_values=tuple(
            float((np.array(t, dtype=np.float64) @ ctx.vandermonde)[0].real)
            for t in data["gap_types"]
        ),
        decompositions=tuple(
            tuple((tuple(off), int(child)) for off, child in decomp)
            for decomp in data["decompositions"]
        ),
        origin_decomposition=None
        if origin is None
        else tuple((tuple(off), int(child)) for off, child in origin),
    )
    if not rule.check_length_equations():
        raise OccurrenceInconsistent("loaded rule violates its length equations")
    return rule


def derive_rule(
    ctx: MinimalPolynomialContext,
    window,
    L_probe: float,
    *,
    occurrences: int = 3,
    margin: float | None = None,
) -> SubstitutionRule:
    """Read the substitution rule off a generated quasilattice.

    Requires a PV context with |constant term| = 1 so that inflation by
    lambda preserves the lattice.  The gap alphabet must be stable when
    L_probe doubles; each gap type's decomposition is read at several
    occurrences and must agree exactly.
    """
    if ctx.classification != "PV":
        raise NotUnitConstant(f"context classifies as {ctx.classification}, not PV")
    if not ctx.unit_constant:
        raise NotUnitConstant("substitution derivation needs |constant term| = 1")
    if ctx.lam <= 1:
        raise NotUnitConstant(
            "substitution derivation needs lambda > 1 (negative dilations reverse orientation)"
        )
    window = qlat.validate_window(ctx, window)
    q = qlat.generate(ctx, window, L_probe)
    q2 = qlat.generate(ctx, window, 2 * L_probe)
    if margin is None:
        raw = np.diff(q.values)
        margin = 3.0 * float(raw.max()) if len(raw) else L_probe / 4
    al1 = {g.preimage for g in qlat.gap_alphabet(q, margin)}
    al2 = {g.preimage for g in qlat.gap_alphabet(q2, margin)}
    if al1 != al2:
        raise AlphabetUnstable(
            f"gap alphabet changed when doubling L_probe ({len(al1)} vs {len(al2)} letters)"
        )

    origin = q2.index_of((0,) * ctx.degree)
    if origin is None or origin + 1 >= len(q2):
        raise TooFewPoints("origin gap not available; enlarge L_probe")
    first = tuple(int(x) for x in (q2.preimages[origin + 1] - q2.preimages[origin]))
    others = sorted(
        al1 - {first},
        key=lambda d: float((np.array(d, dtype=np.float64) @ ctx.vandermonde)[0].real),
    )
    gap_types = (first,) + tuple(others)
    type_of = {d: i for i, d in enumerate(gap_types)}
    gap_values = tuple(
        float((np.array(d, dtype=np.float64) @ ctx.vandermonde)[0].real)
        for d in gap_types
    )

    lam = abs(ctx.lam)
    idx2 = q2._preimage_index()
    ct = np.asarray(ctx.companion, dtype=np.int64)  # l @ C = C^T l

    def read_decomposition(i):
        start = tuple(int(x) for x in (q2.preimages[i] @ ct))
        end = tuple(int(x) for x in (q2.preimages[i + 1] @ ct))
        p0 = idx2.get(start)
        p1 = idx2.get(end)
        if p0 is None or p1 is None:
            raise TooFewPoints("inflated occurrence leaves the probe window")
        decomp = []
        for t in range(p0, p1):
            child = tuple(int(x) for x in (q2.preimages[t + 1] - q2.preimages[t]))
            offset = tuple(int(x) for x in (q2.preimages[t] - np.array(start)))
            decomp.append((offset, type_of[child]))
        return tuple(decomp)

    def is_singular(i, j):
        # an occurrence is boundary-singular when its inflated interval
        # meets a boundary-skipped candidate: the decomposition then hinges
        # on a point the open window excluded by a hair
        lo = lam * q2.values[i] - q2.tol_boundary
        hi = lam * (q2.values[i] + gap_values[j]) + q2.tol_boundary
        sk = q2.skipped_values
        a = np.searchsorted(sk, lo)
        return a < len(sk) and sk[a] <= hi

    decomps = []
    origin_decomp = None
    interior = q2.interior(margin)
    for j, dvec in enumerate(gap_types):
        # occurrences of type j: consecutive pairs with this exact dvec
        occ = []
        for i in range(interior[0], interior[-1]):
            d = tuple(int(x) for x in (q2.preimages[i + 1] - q2.preimages[i]))
            if d == dvec:
                x = q2.values[i]
                if (
                    abs(lam * (x + gap_values[j])) <= 2 * L_probe - margin
                    and abs(lam * x) <= 2 * L_probe - margin
                ):
                    occ.append(i)
        generic = [i for i in occ if i != origin and not is_singular(i, j)]
        if not generic:
            raise TooFewPoints(f"no generic occurrence of gap type {j}")
        want = max(occurrences, 3)
        picks = sorted(
            {generic[(t * (len(generic) - 1)) // max(1, want - 1)] for t in range(want)}
        )
        seen = {read_decomposition(i): q2.values[i] for i in picks}
        if len(seen) != 1:
            raise OccurrenceInconsistent(
                f"gap type {j} decomposes differently at occurrences "
                f"{sorted(float(v) for v in seen.values())}",
                decompositions=sorted(seen),
            )
        decomps.append(next(iter(seen)))
        if j == 0:
            # The expansion seeds at the origin; if the origin occurrence
            # disagrees with the generic ones (non-generic window whose
            # boundary meets Z[lambda]) it becomes the seed collar.
            at_origin = read_decomposition(origin)
            if at_origin != decomps[0]:
                origin_decomp = at_origin

    rule = SubstitutionRule(
        context=ctx,
        window=window,
        gap_types=gap_types,
        gap_values=gap_values,
        decompositions=tuple(decomps),
        origin_decomposition=origin_decomp,
    )
    assert rule.check_length_equations()
    return rule


def expand(rule: SubstitutionRule, k: int, *, budget: int = EXPAND_BUDGET):
    """Iterate the substitution k times from type 0 at the origin.

    Returns (values, preimages, types) for all left endpoints tiling
    [0, lambda**k * c_1).  All positions are exact integer vectors.  The
    tile sitting at the origin uses the collar decomposition when the rule
    carries one (the collar's first child is again type 0 at the origin,
    so exactly one tile per level is affected).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    n = rule.context.degree
    zero = (0,) * n
    ct = np.asarray(rule.context.companion, dtype=np.int64)
    tokens = [(zero, 0)]
    for _ in range(k):
        new = []
        for pos, typ in tokens:
            base = tuple(int(x) for x in (np.array(pos, dtype=np.int64) @ ct))
            decomp = rule.decompositions[typ]
            if pos == zero and typ == 0 and rule.origin_decomposition is not None:
                decomp = rule.origin_decomposition
            for off, child in decomp:
                new.append((tuple(b + o for b, o in zip(base, off)), child))
            if len(new) > budget:
                raise Overflow(f"expansion exceeds {budget} points")
        tokens = new
    pres = np.array([p for p, _ in tokens], dtype=np.int64).reshape(len(tokens), n)
    values = (pres.astype(np.float64) @ rule.context.vandermonde)[:, 0].real
    order = np.argsort(values, kind="stable")
    return (
        values[order],
        pres[order],
        [tokens[i][1] for i in order],
    )


def expansion_matches_lattice(rule: SubstitutionRule, k: int, q) -> bool:
    """Exact preimage comparison of expand(rule, k) with the generated lattice.

    The half-open right endpoint lambda**k * c_1 is identified exactly via
    the companion-transpose power, never by float comparison; q must cover
    [0, endpoint].
    """
    _, pres, _ = expand(rule, k)
    got = {tuple(int(x) for x in row) for row in pres}
    ct = np.asarray(rule.context.companion, dtype=np.int64)
    end = np.array(rule.gap_types[0], dtype=np.int64)
    for _ in range(k):
        end = end @ ct
    end_idx = q.index_of(tuple(int(x) for x in end))
    zero_idx = q.index_of((0,) * rule.context.degree)
    if end_idx is None or zero_idx is None:
        raise TooFewPoints("lattice does not cover the expansion interval")
    want = {
        tuple(int(x) for x in q.preimages[i]) for i in range(zero_idx, end_idx)
    }
    return got == want


def vector_mask(rule: SubstitutionRule):
    """0/1 matrices of the vector refinement equation, one per distinct offset.

    Entry (j, i) of the matrix at offset tau is 1 iff type j's decomposition
    contains the pair (tau, i).
    """
    m = rule.m
    offsets = {}
    for j, decomp in enumerate(rule.decompositions):
        for off, child in decomp:
            offsets.setdefault(off, np.zeros((m, m), dtype=np.int64))[j, child] = 1
    ctx = rule.context

    def value_of(off):
        return float((np.array(off, dtype=np.float64) @ ctx.vandermonde)[0].real)

    return [(off, offsets[off]) for off in sorted(offsets, key=value_of)]


def indicator_identity_holds(rule: SubstitutionRule, xs) -> bool:
    """Check the piecewise-constant refinement identity at sample points.

    chi_[0,c_j)(x) must equal sum over (tau, i) in the decomposition of
    chi_[0,c_i)(lambda x - tau); exact at every non-breakpoint x.
    """
    lam = rule.context.lam
    masks = vector_mask(rule)
    off_values = {off: _offset_value(rule.context, off) for off, _ in masks}
    for x in xs:
        for j in range(rule.m):
            lhs = 1 if 0.0 <= x < rule.gap_values[j] else 0
            rhs = 0
            for off, mat in masks:
                y = lam * x - off_values[off]
                for i in range(rule.m):
                    if mat[j, i] and 0.0 <= y < rule.gap_values[i]:
                        rhs += 1
            if lhs != rhs:
                return False
    return True


def _offset_value(ctx, off):
    return float((np.array(off, dtype=np.float64) @ ctx.vandermonde)[0].real)
