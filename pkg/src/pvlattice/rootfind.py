"""Simultaneous polynomial root-finding (Aberth iteration plus Newton polish).

Coefficients are dense, constant term first.  The same finder backs both
minimal-polynomial contexts and Mahler-measure evaluation, so residuals are
reported alongside the roots.
"""

from __future__ import annotations

import cmath

import numpy as np

from .errors import RootFindingDiverged, ZeroPolynomial


def polyval(coeffs, z):
    """Horner evaluation of sum(coeffs[i] * z**i)."""
    acc = 0.0 + 0.0j
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def polyval_dz(coeffs, z):
    """Value and first derivative in one Horner pass."""
    acc = 0.0 + 0.0j
    dacc = 0.0 + 0.0j
    for c in reversed(coeffs):
        dacc = dacc * z + acc
        acc = acc * z + c
    return acc, dacc


def all_roots(coeffs, tol=1e-14, max_iter=400):
    """All complex roots of the polynomial with the given dense coefficients.

    Returns (roots, residuals) with residuals[i] = |p(roots[i])|.  Roots at
    the origin (trailing low-order zero coefficients) are split off exactly.
    Raises ZeroPolynomial for the zero polynomial and RootFindingDiverged if
    the Aberth corrections fail to contract.
    """
    c = [complex(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    if not c:
        raise ZeroPolynomial("all coefficients are zero")
    nzeros = 0
    while c and c[0] == 0:
        c.pop(0)
        nzeros += 1
    deg = len(c) - 1
    roots = [0.0 + 0.0j] * nzeros
    residuals = [0.0] * nzeros
    if deg == 0:
        return np.array(roots), np.array(residuals)

    lead = c[-1]
    monic = [x / lead for x in c]
    radius = 1.0 + max(abs(x) for x in monic[:-1])
    # Asymmetric start angles keep conjugate-symmetric polynomials from stalling.
    z = np.array(
        [
            radius * (0.55 + 0.4 * k / deg) * cmath.exp(2j * cmath.pi * (k + 0.354) / deg)
            for k in range(deg)
        ]
    )
    scale = max(1.0, radius)
    ok = False
    for _ in range(max_iter):
        p = np.array([polyval(monic, zi) for zi in z])
        dp = np.array([polyval_dz(monic, zi)[1] for zi in z])
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = np.where(dp != 0, p / np.where(dp == 0, 1, dp), p)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            sums = (1.0 / diff).sum(axis=1) - 1.0  # undo the diagonal fill
        denom = 1.0 - newton * sums
        step = np.where(denom != 0, newton / np.where(denom == 0, 1, denom), newton)
        z = z - step
        if np.max(np.abs(step)) < tol * scale:
            ok = True
            break
    if not ok:
        raise RootFindingDiverged(
            f"Aberth iteration did not contract below {tol:g} in {max_iter} steps"
        )
    # Newton polish, two steps per root.
    for i in range(deg):
        for _ in range(2):
            p, dp = polyval_dz(monic, z[i])
            if dp != 0:
                z[i] = z[i] - p / dp
    res = np.array([abs(polyval(c, zi)) for zi in z])
    return np.concatenate([np.array(roots), z]), np.concatenate([np.array(residuals), res])


def pair_conjugates(roots, imag_tol=1e-8):
    """Snap nearly-real roots to the real axis and pair the rest exactly.

    Assumes the underlying polynomial has real coefficients.  Returns a list
    where every nonreal entry is immediately followed by its exact complex
    conjugate.
    """
    reals = []
    upper = []
    lower = []
    for z in roots:
        if abs(z.imag) <= imag_tol * (1.0 + abs(z)):
            reals.append(complex(z.real, 0.0))
        elif z.imag > 0:
            upper.append(z)
        else:
            lower.append(z)
    if len(upper) != len(lower):
        raise RootFindingDiverged("conjugate pairing failed: unbalanced half-planes")
    paired = []
    lower = list(lower)
    for z in upper:
        j = min(range(len(lower)), key=lambda k: abs(lower[k].conjugate() - z))
        w = lower.pop(j)
        mid = (z + w.conjugate()) / 2.0
        paired.append((mid, mid.conjugate()))
    return reals, paired
