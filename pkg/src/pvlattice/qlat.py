"""Cut-and-project quasilattices and their Delone / Meyer structure checks.

A quasilattice is the set of first embedding coordinates (V^T l)_1 of
integer vectors l whose remaining conjugate coordinates fall strictly
inside a window.  Generation enumerates an integer bounding box of the
pre-image parallelotope; membership near the open window boundary is
never guessed, such candidates are excluded and counted.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .algnum import AlgebraicElement, MinimalPolynomialContext
from .errors import InadmissibleWindow, NotUnitConstant, TooFewPoints, WindowTooLarge

TOL_BOUNDARY = 1e-9
CELL_BUDGET = 10**8
_CHUNK = 1 << 20


def validate_window(ctx: MinimalPolynomialContext, sigma) -> tuple[float, ...]:
    """Check admissibility: sigma_1 = 0, others > 0, conjugate pairs equal."""
    sigma = tuple(float(s) for s in sigma)
    if len(sigma) != ctx.degree:
        raise InadmissibleWindow(
            f"window has {len(sigma)} entries, context degree is {ctx.degree}"
        )
    if sigma[0] != 0.0:
        raise InadmissibleWindow("first window entry must be 0")
    if any(s <= 0.0 for s in sigma[1:]):
        raise InadmissibleWindow("window entries for conjugates must be positive")
    for j, k in ctx.conjugate_pairs():
        if sigma[j] != sigma[k]:
            raise InadmissibleWindow(
                f"entries {j} and {k} sit on a conjugate pair and must be equal"
            )
    return sigma


@dataclass(frozen=True, eq=False)
class Quasilattice:
    """Sorted points of the cut-and-project set inside [-L, L].

    values[i] is the real point, preimages[i] its integer vector l,
    margins[i] = min_j (sigma_j - |(V^T l)_j|) over the window coordinates.
    boundary_skipped counts candidates within tol_boundary of the open
    boundary (window or |value| = L) that were excluded rather than
    decided by floating point.
    """

    context: MinimalPolynomialContext
    window: tuple[float, ...]
    half_width: float
    values: np.ndarray
    preimages: np.ndarray
    margins: np.ndarray
    boundary_skipped: int
    skipped_values: np.ndarray     # values of boundary-skipped candidates
    tol_boundary: float
    _index: dict = field(default=None, repr=False)

    def __len__(self):
        return len(self.values)

    def index_of(self, preimage) -> int | None:
        idx = self._preimage_index()
        return idx.get(tuple(int(x) for x in preimage))

    def has_preimage(self, preimage) -> bool:
        return self.index_of(preimage) is not None

    def _preimage_index(self):
        if self._index is None:
            object.__setattr__(
                self,
                "_index",
                {tuple(int(x) for x in row): i for i, row in enumerate(self.preimages)},
            )
        return self._index

    def preimage_set(self) -> set:
        return set(self._preimage_index())

    def element(self, i) -> AlgebraicElement:
        return self.context.element([int(x) for x in self.preimages[i]])

    def interior(self, margin: float) -> np.ndarray:
        """Indices of points with |value| <= half_width - margin."""
        return np.nonzero(np.abs(self.values) <= self.half_width - margin)[0]

    def to_csv(self) -> str:
        n = self.context.degree
        buf = io.StringIO()
        buf.write("value," + ",".join(f"l_{i}" for i in range(n)) + ",margin\n")
        for v, row, m in zip(self.values, self.preimages, self.margins):
            cells = [f"{v:.17g}"] + [str(int(x)) for x in row] + [f"{m:.17g}"]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def enumeration_bounds(ctx, sigma, L):
    """Per-coordinate integer bounds of the pre-image parallelotope box."""
    winv = np.linalg.inv(ctx.vandermonde.T)
    b = np.array([L] + list(sigma[1:]))
    return [int(np.floor(np.sum(np.abs(winv[i]) * b))) for i in range(ctx.degree)]


def generate(
    ctx: MinimalPolynomialContext,
    sigma,
    L: float,
    *,
    tol_boundary: float = TOL_BOUNDARY,
    cell_budget: int = CELL_BUDGET,
) -> Quasilattice:
    """Enumerate the quasilattice for window sigma inside [-L, L]."""
    sigma = validate_window(ctx, sigma)
    if L <= 0:
        raise InadmissibleWindow("half-width L must be positive")
    n = ctx.degree
    bounds = enumeration_bounds(ctx, sigma, L)
    total = 1
    for b in bounds:
        total *= 2 * b + 1
    if total > cell_budget:
        raise WindowTooLarge(
            f"enumeration box holds {total} cells, budget is {cell_budget}"
        )

    V = ctx.vandermonde
    sig = np.array(sigma[1:])
    vals, pres, margs = [], [], []
    skipped = 0
    skipped_vals = []
    for block in _candidate_blocks(bounds):
        emb = block.astype(np.float64) @ V  # (k, n) complex
        value = emb[:, 0].real
        conj_abs = np.abs(emb[:, 1:])
        margin = (sig[None, :] - conj_abs).min(axis=1)
        loose = (margin > -tol_boundary) & (np.abs(value) <= L + tol_boundary)
        strict = (margin > tol_boundary) & (np.abs(value) <= L - tol_boundary)
        near = loose & ~strict
        skipped += int(np.count_nonzero(near))
        if near.any():
            skipped_vals.append(value[near])
        if strict.any():
            vals.append(value[strict])
            pres.append(block[strict])
            margs.append(margin[strict])

    if vals:
        values = np.concatenate(vals)
        preimages = np.concatenate(pres)
        margins = np.concatenate(margs)
    else:
        values = np.zeros(0)
        preimages = np.zeros((0, n), dtype=np.int64)
        margins = np.zeros(0)
    order = np.argsort(values, kind="stable")
    values = values[order]
    preimages = preimages[order]
    margins = margins[order]
    # Distinct preimages have distinct values (nonzero integer norm), so
    # strict increase is a sanity assertion, not a decision.
    assert np.all(np.diff(values) > 0)
    return Quasilattice(
        context=ctx,
        window=sigma,
        half_width=float(L),
        values=values,
        preimages=preimages,
        margins=margins,
        boundary_skipped=skipped,
        skipped_values=np.sort(np.concatenate(skipped_vals))
        if skipped_vals
        else np.zeros(0),
        tol_boundary=tol_boundary,
    )


def _candidate_blocks(bounds):
    """Integer grid of the bounding box, yielded in row-major chunks."""
    n = len(bounds)
    sizes = [2 * b + 1 for b in bounds]
    total = 1
    for s in sizes:
        total *= s
    tail = total // sizes[0]
    rows_per_chunk = max(1, _CHUNK // max(1, tail))
    axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
    for start in range(0, sizes[0], rows_per_chunk):
        first = axes[0][start : start + rows_per_chunk]
        mesh = np.meshgrid(first, *axes[1:], indexing="ij")
        yield np.stack([m.reshape(-1) for m in mesh], axis=1)


def min_gap_lower_bound(ctx, sigma) -> float:
    """Uniform-discreteness bound 2**(1-n) * prod(sigma_j**-1)."""
    n = ctx.degree
    prod = 1.0
    for s in sigma[1:]:
        prod /= s
    return 2.0 ** (1 - n) * prod


@dataclass(frozen=True)
class Gap:
    value: float
    preimage: tuple[int, ...]
    multiplicity: int


def gap_alphabet(q: Quasilattice, margin: float) -> list[Gap]:
    """Distinct consecutive differences on the interior, keyed exactly.

    Gaps are identified by their exact preimage difference vectors; the
    float values only order the output.
    """
    idx = q.interior(margin)
    if len(idx) < 2:
        raise TooFewPoints("need at least two interior points")
    lo, hi = idx[0], idx[-1]
    counts = {}
    for i in range(lo, hi):
        d = tuple(int(x) for x in (q.preimages[i + 1] - q.preimages[i]))
        counts[d] = counts.get(d, 0) + 1
    gaps = [
        Gap(
            value=float(
                (np.array(d, dtype=np.float64) @ q.context.vandermonde)[0].real
            ),
            preimage=d,
            multiplicity=c,
        )
        for d, c in counts.items()
    ]
    gaps.sort(key=lambda g: g.value)
    return gaps


@dataclass
class LemmaReport:
    lemma: str
    violations: int
    details: dict

    def to_json(self) -> dict:
        return {"lemma": self.lemma, "violations": self.violations, "details": self.details}


def check_group_laws(ctx, sigma, xi, L, *, tol_boundary=TOL_BOUNDARY) -> LemmaReport:
    """Monotonicity and additivity of window -> point-set, on a safe interior.

    (i) sigma <= xi componentwise implies point inclusion; (ii) interior
    pairwise sums of the two lattices land in the sum-window lattice
    (exact preimage addition); (iii) the reverse inclusion is reported as
    a coverage fraction only.
    """
    sigma = validate_window(ctx, sigma)
    xi = validate_window(ctx, xi)
    q_s = generate(ctx, sigma, L, tol_boundary=tol_boundary)
    q_x = generate(ctx, xi, L, tol_boundary=tol_boundary)
    sum_window = tuple(s + x for s, x in zip(sigma, xi))
    q_sum = generate(ctx, sum_window, L, tol_boundary=tol_boundary)

    violations = 0
    details = {}

    if all(s <= x for s, x in zip(sigma, xi)):
        missing = q_s.preimage_set() - q_x.preimage_set()
        # Only interior points are decidable: boundary-skip may drop
        # near-edge points of the larger window's complement.
        missing = {
            m
            for m in missing
            if abs(float((np.array(m) @ ctx.vandermonde)[0].real)) <= L / 2
        }
        details["inclusion_violations"] = len(missing)
        violations += len(missing)

    half = L / 2.0
    sum_index = q_sum.preimage_set()
    in_s = [i for i in range(len(q_s)) if abs(q_s.values[i]) <= half]
    in_x = [i for i in range(len(q_x)) if abs(q_x.values[i]) <= half]
    checked = 0
    sum_missing = 0
    for i in in_s:
        for j in in_x:
            v = q_s.values[i] + q_x.values[j]
            if abs(v) > half:
                continue
            checked += 1
            pre = tuple(int(t) for t in (q_s.preimages[i] + q_x.preimages[j]))
            if pre not in sum_index:
                sum_missing += 1
    details["sum_pairs_checked"] = checked
    details["sum_violations"] = sum_missing
    violations += sum_missing

    covered = 0
    candidates = 0
    s_idx = q_s.preimage_set()
    x_idx = q_x.preimage_set()
    for i in range(len(q_sum)):
        if abs(q_sum.values[i]) > half:
            continue
        candidates += 1
        target = q_sum.preimages[i]
        hit = False
        for j in in_s:
            d = tuple(int(t) for t in (target - q_s.preimages[j]))
            if d in x_idx:
                hit = True
                break
        if hit:
            covered += 1
    details["coverage_candidates"] = candidates
    details["coverage_fraction"] = covered / candidates if candidates else 1.0
    return LemmaReport("group-laws", violations, details)


def check_inflation(q: Quasilattice, *, tol_boundary=TOL_BOUNDARY) -> LemmaReport:
    """Multiplication by lambda maps the lattice into itself (unit constant).

    The image preimage is the exact companion-transpose action; its window
    coordinates must fall inside [0, |lam_2| sigma_2, ...], hence inside
    the original window.
    """
    ctx = q.context
    if not ctx.unit_constant:
        raise NotUnitConstant("inflation needs |constant term| = 1")
    ct = np.array(
        [[ctx.companion[j][i] for j in range(ctx.degree)] for i in range(ctx.degree)],
        dtype=np.int64,
    )
    sig = np.array(q.window[1:])
    shrink = np.abs(ctx.roots[1:]) * sig
    lam = ctx.lam
    checked = 0
    violations = 0
    min_margin = np.inf
    min_shrunk_margin = np.inf
    in_lattice_misses = 0
    for i in range(len(q)):
        if abs(lam * q.values[i]) > q.half_width - tol_boundary:
            continue
        checked += 1
        image = q.preimages[i] @ ct.T            # C^T l, exact integers
        emb = image.astype(np.float64) @ ctx.vandermonde
        conj_abs = np.abs(emb[1:])
        margin = float((sig - conj_abs).min())
        shrunk = float((shrink - conj_abs).min())
        min_margin = min(min_margin, margin)
        min_shrunk_margin = min(min_shrunk_margin, shrunk)
        if margin <= 0:
            violations += 1
        elif margin > tol_boundary and not q.has_preimage(image):
            in_lattice_misses += 1
    details = {
        "checked": checked,
        "min_margin": None if checked == 0 else min_margin,
        "min_margin_vs_shrunk_window": None if checked == 0 else min_shrunk_margin,
        "points_missing_from_list": in_lattice_misses,
    }
    return LemmaReport("inflation", violations + in_lattice_misses, details)


def check_meyer(q: Quasilattice, margin: float) -> tuple[list, LemmaReport]:
    """Pairwise sums need only a finite correction set F.

    For interior x, y the sum z = x + y lies in the doubled-window lattice;
    w is the nearest original-lattice point and the correction z - w is
    recorded exactly.  Violations count pairs whose nearest w is farther
    than the doubled-window relative-density bound allows.
    """
    ctx = q.context
    idx = q.interior(margin)
    if len(idx) < 2:
        raise TooFewPoints("need at least two interior points")
    doubled = generate(
        ctx,
        tuple(2 * s for s in q.window),
        2 * q.half_width,
        tol_boundary=q.tol_boundary,
    )
    gaps2 = gap_alphabet(doubled, margin)
    max_gap2 = max(g.value for g in gaps2)
    corrections = {}
    violations = 0
    vals = q.values[idx]
    pres = q.preimages[idx]
    limit = q.half_width - margin
    for i in range(len(idx)):
        for j in range(i, len(idx)):
            z = vals[i] + vals[j]
            if abs(z) > limit:
                continue
            pre_z = pres[i] + pres[j]
            # nearest lattice point to z
            k = int(np.searchsorted(q.values, z))
            best = None
            for cand in (k - 1, k, k + 1):
                if 0 <= cand < len(q):
                    d = abs(q.values[cand] - z)
                    if best is None or d < best[0]:
                        best = (d, cand)
            if best is None or best[0] > max_gap2:
                violations += 1
                continue
            corr = tuple(int(t) for t in (pre_z - q.preimages[best[1]]))
            corrections[corr] = corrections.get(corr, 0) + 1
    f_set = sorted(
        corrections,
        key=lambda d: float((np.array(d, dtype=np.float64) @ ctx.vandermonde)[0].real),
    )
    report = LemmaReport(
        "meyer",
        violations,
        {"F_size": len(f_set), "pairs": int(sum(corrections.values()))},
    )
    return f_set, report


def delone_constants(q: Quasilattice, margin: float) -> tuple[float, float]:
    """(min_gap, max_gap) over interior consecutive differences."""
    idx = q.interior(margin)
    if len(idx) < 2:
        raise TooFewPoints("need at least two interior points")
    diffs = np.diff(q.values[idx[0] : idx[-1] + 1])
    return float(diffs.min()), float(diffs.max())


def load_points_csv(text: str):
    """Parse a point dump produced by Quasilattice.to_csv."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    n = len(header) - 2
    values, preimages, margins = [], [], []
    for ln in lines[1:]:
        cells = ln.split(",")
        values.append(float(cells[0]))
        preimages.append([int(c) for c in cells[1 : 1 + n]])
        margins.append(float(cells[-1]))
    return (
        np.array(values),
        np.array(preimages, dtype=np.int64).reshape(len(values), n),
        np.array(margins),
    )


def revalidate_points(ctx, sigma, values, preimages, *, tol_boundary=TOL_BOUNDARY):
    """Recheck a loaded point dump against the window; returns violation count."""
    sigma = validate_window(ctx, sigma)
    emb = preimages.astype(np.float64) @ ctx.vandermonde
    bad = 0
    for i in range(len(values)):
        if abs(emb[i, 0].real - values[i]) > 1e-9 * max(1.0, abs(values[i])):
            bad += 1
            continue
        conj = np.abs(emb[i, 1:])
        if not np.all(conj < np.array(sigma[1:]) - tol_boundary):
            bad += 1
    return bad
