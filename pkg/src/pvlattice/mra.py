"""Multiresolution nesting at the lattice level plus a piecewise-constant model.

The nesting theorem reduces to window arithmetic: with xi_j =
(1 - |lambda_j|) sigma_j, any translation tau_j inside the xi-window keeps
lambda*tau + tau_j inside the sigma-window.  check_nesting verifies this
with exact preimage arithmetic; project_pc realizes the function spaces as
piecewise constants on contracted lattice breakpoints.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import qlat
from .algnum import MinimalPolynomialContext
from .errors import EmptyInterval, InadmissibleWindow, NotUnitConstant, ValidationError


def derive_xi(ctx: MinimalPolynomialContext, sigma) -> tuple[float, ...]:
    """Translation window xi = [0, (1-|lam_2|) sigma_2, ...].

    Admissibility carries over because conjugate pairs share |lambda_j|.
    """
    if not ctx.unit_constant:
        raise NotUnitConstant("nesting window needs |constant term| = 1")
    if ctx.classification != "PV":
        raise NotUnitConstant(f"context classifies as {ctx.classification}, not PV")
    sigma = qlat.validate_window(ctx, sigma)
    xi = (0.0,) + tuple(
        (1.0 - abs(ctx.roots[j])) * sigma[j] for j in range(1, ctx.degree)
    )
    return qlat.validate_window(ctx, xi)


@dataclass(frozen=True)
class MRAConfig:
    """Context, analysis window, derived translation window and translations.

    Translations are integer preimage vectors; construction verifies each
    lies in the xi-window lattice with margin above tol_boundary.
    """

    context: MinimalPolynomialContext
    sigma: tuple[float, ...]
    xi: tuple[float, ...]
    translations: tuple[tuple[int, ...], ...]

    def translation_values(self):
        V = self.context.vandermonde
        return [
            float((np.array(t, dtype=np.float64) @ V)[0].real)
            for t in self.translations
        ]


def build_config(
    ctx, sigma, translations, *, tol_boundary=qlat.TOL_BOUNDARY
) -> MRAConfig:
    sigma = qlat.validate_window(ctx, sigma)
    xi = derive_xi(ctx, sigma)
    rows = tuple(tuple(int(x) for x in t) for t in translations)
    sig = np.array(xi[1:])
    for t in rows:
        emb = np.array(t, dtype=np.float64) @ ctx.vandermonde
        margin = float((sig - np.abs(emb[1:])).min())
        if margin <= tol_boundary:
            raise ValidationError(
                f"translation {t} is not inside the xi-window (margin {margin:.3e})"
            )
    return MRAConfig(context=ctx, sigma=sigma, xi=xi, translations=rows)


@dataclass
class NestingReport:
    violations: int
    checked_pairs: int
    min_margin: float
    histogram: list

    def to_json(self):
        return {
            "violations": self.violations,
            "checked_pairs": self.checked_pairs,
            "min_margin": self.min_margin,
            "histogram": self.histogram,
        }


def check_nesting(
    cfg: MRAConfig, L: float, *, tol_boundary=qlat.TOL_BOUNDARY
) -> NestingReport:
    """Verify lambda*tau + tau_j stays in the sigma-window lattice.

    tau runs over the generated lattice within [-L/|lambda|, L/|lambda|];
    membership of the image is decided by the exact preimage against the
    window, margins are collected into a histogram.
    """
    ctx = cfg.context
    lam = abs(ctx.lam)
    q = qlat.generate(ctx, cfg.sigma, L / lam, tol_boundary=tol_boundary)
    ct = np.asarray(ctx.companion, dtype=np.int64)   # l @ C = C^T l
    sig = np.array(cfg.sigma[1:])
    margins = []
    violations = 0
    checked = 0
    for i in range(len(q)):
        base = q.preimages[i] @ ct
        for t in cfg.translations:
            image = base + np.array(t, dtype=np.int64)
            emb = image.astype(np.float64) @ ctx.vandermonde
            margin = float((sig - np.abs(emb[1:])).min())
            margins.append(margin)
            checked += 1
            if margin <= 0:
                violations += 1
    margins = np.array(margins)
    hist, edges = np.histogram(margins, bins=10)
    histogram = [
        {"lo": float(lo), "hi": float(hi), "count": int(c)}
        for lo, hi, c in zip(edges[:-1], edges[1:], hist)
    ]
    return NestingReport(
        violations=violations,
        checked_pairs=checked,
        min_margin=float(margins.min()) if len(margins) else float("inf"),
        histogram=histogram,
    )


def check_nesting_raw(
    ctx, sigma, translations, L, *, tol_boundary=qlat.TOL_BOUNDARY
) -> NestingReport:
    """check_nesting without the xi-membership precondition (negative controls)."""
    cfg = MRAConfig(
        context=ctx,
        sigma=qlat.validate_window(ctx, sigma),
        xi=derive_xi(ctx, sigma),
        translations=tuple(tuple(int(x) for x in t) for t in translations),
    )
    return check_nesting(cfg, L, tol_boundary=tol_boundary)


@dataclass
class PiecewiseConstant:
    """Right-open step function on the contracted lattice breakpoints."""

    breakpoints: np.ndarray       # sorted, length r
    values: np.ndarray            # length r - 1
    filled: list                  # indices of intervals with no samples

    def __call__(self, x):
        xs = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(self.breakpoints, xs, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return self.values[idx]

    def to_csv(self) -> str:
        lines = ["breakpoint,value"]
        for b, v in zip(self.breakpoints[:-1], self.values):
            lines.append(f"{b:.17g},{v:.17g}")
        lines.append(f"{self.breakpoints[-1]:.17g},")
        return "\n".join(lines) + "\n"


def project_pc(q, samples, k: int) -> PiecewiseConstant:
    """Project samples onto piecewise constants over lambda**-k lattice cells.

    samples is a sequence of (x, value); each interval of consecutive
    contracted lattice points takes the mean of the samples inside.
    Sample-free intervals are filled from the nearest filled neighbor with
    a warning.
    """
    lam = q.context.lam
    breaks = np.sort(q.values * float(lam) ** (-k))
    xs = np.array([x for x, _ in samples], dtype=np.float64)
    vals = np.array([v for _, v in samples], dtype=np.float64)
    if len(xs) == 0:
        raise EmptyInterval("no samples at all")
    if xs.min() < breaks[0] or xs.max() >= breaks[-1]:
        raise ValidationError(
            "breakpoint grid does not cover the sample range; enlarge the lattice"
        )
    idx = np.searchsorted(breaks, xs, side="right") - 1
    r = len(breaks) - 1
    out = np.full(r, np.nan)
    order = np.argsort(idx, kind="stable")
    sorted_idx = idx[order]
    sorted_vals = vals[order]
    starts = np.searchsorted(sorted_idx, np.arange(r), side="left")
    ends = np.searchsorted(sorted_idx, np.arange(r), side="right")
    nonempty = ends > starts
    for i in np.nonzero(nonempty)[0]:
        seg = sorted_vals[starts[i] : ends[i]]
        # mean of identical values is that value, exactly: keeps projection
        # idempotent bit for bit
        out[i] = seg[0] if np.all(seg == seg[0]) else float(np.mean(seg))
    filled = [int(i) for i in np.nonzero(~nonempty)[0]]
    if filled:
        warnings.warn(
            f"{len(filled)} empty projection intervals filled from neighbors",
            stacklevel=2,
        )
        good = np.nonzero(nonempty)[0]
        for i in filled:
            j = good[np.argmin(np.abs(good - i))]
            out[i] = out[j]
    return PiecewiseConstant(breakpoints=breaks, values=out, filled=filled)
