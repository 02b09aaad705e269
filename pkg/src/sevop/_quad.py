"""Quadrature helpers: panel Gauss rules, nonuniform composite Lagrange
weights, and product-integration weights against frozen-semigroup kernels."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_panel_nodes(edges: np.ndarray, order: int):
    """Gauss-Legendre nodes/weights on consecutive panels [edges[i], edges[i+1]].

    Returns flat arrays (nodes, weights) covering all panels.
    """
    x, w = _leggauss(order)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def quad_weights_nonuniform(x: np.ndarray, order: int = 3) -> np.ndarray:
    """Composite Lagrange weights of given order on arbitrary sorted nodes.

    Panels are grouped `order` at a time; each group is integrated exactly
    for the polynomial through its order+1 nodes.  Leftover trailing panels
    reuse the polynomial through the last order+1 nodes.  Weight solves are
    vectorized over groups (shifted-coordinate Vandermonde systems).
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    w = np.zeros(m)
    if m < 2:
        return w
    k = min(order, m - 1)
    n_groups = (m - 1) // k
    leftover = (m - 1) % k

    bases = np.arange(n_groups) * k
    los = bases
    his = bases + k
    if leftover:
        bases = np.append(bases, m - 1 - k)
        los = np.append(los, m - 1 - leftover)
        his = np.append(his, m - 1)

    idx = bases[:, None] + np.arange(k + 1)[None, :]
    xg = x[idx] - x[bases][:, None]
    a = (x[los] - x[bases])[:, None]
    b = (x[his] - x[bases])[:, None]
    powers = np.arange(1, k + 2)[None, :]
    moments = (b ** powers - a ** powers) / powers
    # Vandermonde V[g, m, j] = xg[g, j]^m ; solve V w = moments
    V = xg[:, None, :] ** np.arange(k + 1)[None, :, None]
    wg = np.linalg.solve(V, moments[:, :, None])[:, :, 0]
    np.add.at(w, idx.ravel(), wg.ravel())
    return w


@lru_cache(maxsize=8)
def _moment_series_coefs(imax: int, terms: int = 19) -> np.ndarray:
    """coef[i, j] = 1 / (j! (i + j + 1)) for the small-z moment series."""
    i = np.arange(imax + 1)[:, None]
    j = np.arange(terms)[None, :]
    fact = np.array([math.factorial(jj) for jj in range(terms)], dtype=float)[None, :]
    return 1.0 / (fact * (i + j + 1))


def unit_exp_moments(z: np.ndarray, imax: int) -> np.ndarray:
    """M[i] = int_0^1 theta^i e^{z theta} dtheta for i = 0..imax, Re(z) <= 0.

    Upward recurrence M[i] = (e^z - i M[i-1])/z away from the origin; the
    power series sum_j z^j / (j! (i+j+1)) below |z| = 0.5 where the
    recurrence cancels.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty((imax + 1,) + z.shape, dtype=complex)
    with np.errstate(invalid="ignore", divide="ignore", under="ignore"):
        ez = np.exp(z)
        zsafe = np.where(z == 0, 1.0, z)
        out[0] = (ez - 1.0) / zsafe
        for i in range(1, imax + 1):
            out[i] = (ez - i * out[i - 1]) / zsafe
    small = np.abs(z) < 0.5
    if small.any():
        zs = z[small]
        coef = _moment_series_coefs(imax)
        zp = zs[None, :] ** np.arange(coef.shape[1])[:, None]  # (terms, K)
        out[(slice(None),) + np.nonzero(small)] = coef @ zp
    return out


def _group_moments(x: np.ndarray, lam: np.ndarray, bases, los, his, kmax: int) -> np.ndarray:
    """mu[g, m, e] = int_{x[lo_g]}^{x[hi_g]} (tau-x[base_g])^m e^{lam_e (tau-x[0])} dtau.

    Vectorized over groups via unit exponential moments of lam * (panel
    length), stable both for tiny and for strongly decayed exponents.
    """
    d = (x[his] - x[los])[:, None]
    c = (x[los] - x[bases])[:, None]
    M = unit_exp_moments(lam[None, :] * d, kmax)  # (kmax+1, G, E)
    with np.errstate(under="ignore"):
        pref = np.exp(lam[None, :] * (x[los] - x[0])[:, None])
    mu = np.zeros((len(bases), kmax + 1, lam.size), dtype=complex)
    for mdeg in range(kmax + 1):
        acc = np.zeros_like(pref)
        for i in range(mdeg + 1):
            acc = acc + math.comb(mdeg, i) * c ** (mdeg - i) * d ** (i + 1) * M[i]
        mu[:, mdeg, :] = pref * acc
    return mu


def product_node_weights(x: np.ndarray, lam: np.ndarray):
    """Product-integration weights for int_{x0}^{xm} G(tau) e^{lam (tau-x0)} dtau.

    The exponential factor is integrated exactly per eigenvalue lam_e; the
    smooth factor G is interpolated on composite groups of the nodes: the
    first group matches values at x[0..3] plus the derivative at x0 (the
    evolution kernel vanishes there, so the derivative carries the leading
    behavior); later panels use plain cubic groups, the trailing leftover
    reusing the last cubic.  Group solves are batched.

    Returns (om, omd): om[p, e] multiplies G(x_p), omd[e] multiplies G'(x0).
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam).ravel()
    m = x.size
    E = lam.size
    om = np.zeros((m, E), dtype=complex)
    omd = np.zeros(E, dtype=complex)
    if m < 2:
        return om, omd

    # first group: Hermite over panels [0, f]
    f = min(3, m - 1)
    nodes0 = x[: f + 1] - x[0]
    deg = f + 1
    powers = np.arange(deg + 1)
    rows = [nodes0[j] ** powers for j in range(f + 1)]
    drow = np.zeros(deg + 1)
    drow[1] = 1.0
    V0 = np.vstack(rows + [drow])  # (constraints, monomials)
    mu0 = _group_moments(x, lam, np.array([0]), np.array([0]), np.array([f]), deg)[0]
    w0 = np.linalg.solve(V0.T, mu0)
    om[: f + 1] += w0[: f + 1]
    omd += w0[f + 1]

    # remaining panels: cubic groups of 3 with a trailing leftover
    if f < m - 1:
        rem = m - 1 - f
        n_full = rem // 3
        leftover = rem % 3
        bases = f + 3 * np.arange(n_full)
        los = bases.copy()
        his = bases + 3
        if leftover:
            bases = np.append(bases, m - 4) if m >= 4 else np.append(bases, 0)
            los = np.append(los, m - 1 - leftover)
            his = np.append(his, m - 1)
        k = 3 if m >= 4 else m - 1
        idx = bases[:, None] + np.arange(k + 1)[None, :]
        xg = x[idx] - x[bases][:, None]
        Vg = xg[:, None, :] ** np.arange(k + 1)[None, :, None]  # (G, m, j)
        mu = _group_moments(x, lam, bases, los, his, k)  # (G, k+1, E)
        wg = np.linalg.solve(Vg.astype(complex), mu)  # (G, k+1, E)
        np.add.at(om, idx.ravel(), wg.reshape(-1, E))
    return om, omd
