"""Pure-numpy kernel for pairwise curve intersections.

Given two rational quadratics f = N_f/D_f and g = N_g/D_g with positive
denominators, f - g has the sign of the degree-four cross polynomial
p = N_f*D_g - N_g*D_f, so every intersection and ordering question
reduces to real roots of p.  This module finds those roots for a batch
of pairs at once: closed forms for degrees one and two, companion-matrix
eigenvalues for degrees three and four.

The compiled backend in ``_kernel_c`` implements the same contract; both
are driven through :mod:`randinf.kernels`.
"""

from __future__ import annotations

import numpy as np

# Shared defaults; the compiled backend receives them as arguments.
IDENTICAL_RTOL = 1e-10
DEGREE_RTOL = 1e-13
IMAG_RTOL = 1e-8
DEDUP_RTOL = 1e-9


def cross_coeffs(numa, dena, numb, denb):
    """Ascending coefficients of N_a*D_b - N_b*D_a for aligned (N, 3) rows.

    Inputs hold (q2, q1, q0) in descending powers.  Also returns the
    scale max(|N_a|*|D_b|, |N_b|*|D_a|) used for the identity test.
    """
    a2, a1, a0 = numa[:, 0], numa[:, 1], numa[:, 2]
    b2, b1, b0 = dena[:, 0], dena[:, 1], dena[:, 2]
    c2, c1, c0 = numb[:, 0], numb[:, 1], numb[:, 2]
    d2, d1, d0 = denb[:, 0], denb[:, 1], denb[:, 2]
    p4 = a2 * d2 - c2 * b2
    p3 = a2 * d1 + a1 * d2 - (c2 * b1 + c1 * b2)
    p2 = a2 * d0 + a1 * d1 + a0 * d2 - (c2 * b0 + c1 * b1 + c0 * b2)
    p1 = a1 * d0 + a0 * d1 - (c1 * b0 + c0 * b1)
    p0 = a0 * d0 - c0 * b0
    coeffs = np.column_stack([p0, p1, p2, p3, p4])
    sa = np.abs(numa).max(axis=1)
    sb = np.abs(dena).max(axis=1)
    sc = np.abs(numb).max(axis=1)
    sd = np.abs(denb).max(axis=1)
    scale = np.maximum(sa * sd, sc * sb)
    return coeffs, scale


def _quadratic_roots(c0, c1, c2, imag_rtol):
    """Stable real roots of c2 x^2 + c1 x + c0, keeping near-real pairs.

    Returns (roots, owner) with up to two roots per row.
    """
    disc = c1 * c1 - 4.0 * c2 * c0
    roots, owner = [], []
    pos = disc >= 0.0
    if np.any(pos):
        sd = np.sqrt(disc[pos])
        p1 = c1[pos]
        q = -0.5 * (p1 + np.where(p1 >= 0.0, 1.0, -1.0) * sd)
        r1 = q / c2[pos]
        qsafe = np.where(q != 0.0, q, 1.0)
        r2 = np.where(q != 0.0, c0[pos] / qsafe, -p1 / (2.0 * c2[pos]))
        idx = np.flatnonzero(pos)
        roots += [r1, r2]
        owner += [idx, idx]
    neg = ~pos
    if np.any(neg):
        re = -c1[neg] / (2.0 * c2[neg])
        im = np.sqrt(-disc[neg]) / (2.0 * np.abs(c2[neg]))
        keep = im <= imag_rtol * (1.0 + np.abs(re))
        idx = np.flatnonzero(neg)[keep]
        roots.append(re[keep])
        owner.append(idx)
    if not roots:
        return np.empty(0), np.empty(0, dtype=np.int64)
    return np.concatenate(roots), np.concatenate(owner)


def _companion_roots(coeffs, deg, rows, imag_rtol):
    """Real eigenvalue roots for a batch of monic-normalized polynomials."""
    g = rows.shape[0]
    monic = coeffs[rows, : deg + 1] / coeffs[rows, deg][:, None]
    comp = np.zeros((g, deg, deg))
    comp[:, 1:, :-1] = np.broadcast_to(np.eye(deg - 1), (g, deg - 1, deg - 1))
    comp[:, :, -1] = -monic[:, :deg]
    eig = np.linalg.eigvals(comp)
    keep = np.abs(eig.imag) <= imag_rtol * (1.0 + np.abs(eig.real))
    owner = np.broadcast_to(rows[:, None], eig.shape)[keep]
    return eig.real[keep], owner


def _dedup_sorted(roots, owner, dedup_rtol):
    """Sort per owner and merge root clusters closer than the tolerance."""
    if roots.size == 0:
        return roots, owner
    order = np.lexsort((roots, owner))
    roots, owner = roots[order], owner[order]
    gap_ok = np.empty(roots.size, dtype=bool)
    gap_ok[0] = True
    same = owner[1:] == owner[:-1]
    close = np.diff(roots) <= dedup_rtol * (1.0 + np.abs(roots[1:]))
    gap_ok[1:] = ~(same & close)
    cluster = np.cumsum(gap_ok) - 1
    count = np.bincount(cluster)
    mean = np.bincount(cluster, weights=roots) / count
    first = np.flatnonzero(gap_ok)
    return mean, owner[first]


def poly_real_roots_batch(
    coeffs: np.ndarray,
    degree_rtol: float = DEGREE_RTOL,
    imag_rtol: float = IMAG_RTOL,
    dedup_rtol: float = DEDUP_RTOL,
):
    """Real roots of a batch of degree-at-most-four polynomials.

    ``coeffs`` has shape (N, 5), ascending powers.  Returns (roots, owner)
    sorted by owner then value, with per-owner clusters merged.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=np.float64))
    n = coeffs.shape[0]
    scale = np.abs(coeffs).max(axis=1)
    thresh = degree_rtol * np.where(scale > 0.0, scale, 1.0)
    sig = np.abs(coeffs) > thresh[:, None]
    degree = np.where(
        sig.any(axis=1), 4 - np.argmax(sig[:, ::-1], axis=1), 0
    ).astype(np.int64)

    all_roots = [np.empty(0)]
    all_owner = [np.empty(0, dtype=np.int64)]
    rows1 = np.flatnonzero(degree == 1)
    if rows1.size:
        all_roots.append(-coeffs[rows1, 0] / coeffs[rows1, 1])
        all_owner.append(rows1)
    rows2 = np.flatnonzero(degree == 2)
    if rows2.size:
        r, local = _quadratic_roots(
            coeffs[rows2, 0], coeffs[rows2, 1], coeffs[rows2, 2], imag_rtol
        )
        all_roots.append(r)
        all_owner.append(rows2[local])
    for deg in (3, 4):
        rows = np.flatnonzero(degree == deg)
        if rows.size:
            r, own = _companion_roots(coeffs, deg, rows, imag_rtol)
            all_roots.append(r)
            all_owner.append(own)
    roots = np.concatenate(all_roots)
    owner = np.concatenate(all_owner)
    return _dedup_sorted(roots, owner, dedup_rtol)


def cross_roots_indexed(
    num: np.ndarray,
    den: np.ndarray,
    ia: np.ndarray,
    ib: np.ndarray,
    identical_rtol: float = IDENTICAL_RTOL,
    degree_rtol: float = DEGREE_RTOL,
    imag_rtol: float = IMAG_RTOL,
    dedup_rtol: float = DEDUP_RTOL,
):
    """Intersection abscissas for the function pairs (ia[r], ib[r]).

    Returns (roots, owner, identical) where ``owner`` maps each root back
    to its pair row and ``identical`` flags pairs whose cross polynomial
    vanishes identically at the stated relative tolerance.
    """
    ia = np.asarray(ia, dtype=np.int64)
    ib = np.asarray(ib, dtype=np.int64)
    coeffs, scale = cross_coeffs(num[ia], den[ia], num[ib], den[ib])
    identical = (
        np.abs(coeffs).max(axis=1) <= identical_rtol * np.maximum(scale, 1e-300)
    )
    live = np.flatnonzero(~identical)
    if live.size == 0:
        return np.empty(0), np.empty(0, dtype=np.int64), identical
    roots, owner = poly_real_roots_batch(
        coeffs[live], degree_rtol, imag_rtol, dedup_rtol
    )
    return roots, live[owner], identical
