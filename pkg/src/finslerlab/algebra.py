"""Pointwise tensor algebra on jet tables.

A jet table maps (a, b) -> dense array of the mixed partials
D^a_x D^b_y F^2 with the a x-axes first and the b y-axes after them.
Every function is xp-generic: it runs on numpy arrays eagerly and on jax
tracers inside the derivative engine, so the public numpy-facing operations
and the compiled stack share one implementation.

Index conventions (fixed here, used everywhere):
  g[i, j]        = g_ij = 1/2 d^2 F^2 / dy^i dy^j
  C[i, j, k]     = C_ijk (totally symmetric),  I[i] = g^{jk} C_ijk
  G[i]           = spray coefficients
  N[i, j]        = N^i_j = dG^i/dy^j
  Gamma[i, j, k] = Gamma^i_{jk} (symmetric in j, k)
  R4[j, i, k, l] = R_j^{. i}_{.. kl}  (Chern-Riemann; antisymmetric in k, l)
  P4[j, i, k, l] = P_j^{. i}_{.. kl} = -dGamma^i_{jk}/dy^l
  L[i, j, k]     = L^i_{jk} (Landsberg),  J[i] = g^{jk} L_ijk
  R3[s, i, j]    = y^m R4[m, s, i, j]
  R2up[i, k]     = R3[i, k, l] y^l          (flag curvature tensor, upper)
  R2low[j, k]    = g[j, i] R2up[i, k]
"""
from __future__ import annotations

import numpy as np


def fundamental(jet, xp=np):
    return 0.5 * jet[(0, 2)]


def cartan(jet, xp=np):
    return 0.25 * jet[(0, 3)]


def mean_cartan(C, ginv, xp=np):
    return xp.einsum("jk,ijk->i", ginv, C)


def spray(jet, ginv, y, xp=np):
    # G^i = 1/4 g^{is} ( [F^2]_{y^s x^k} y^k - [F^2]_{x^s} )
    T10 = jet[(1, 0)]                  # [k]
    T11 = jet[(1, 1)]                  # [k, s] = d^2 F^2 / dx^k dy^s
    W = xp.einsum("ks,k->s", T11, y) - T10
    return 0.25 * ginv @ W


def chern_gamma(jet, ginv, N, xp=np):
    # delta g_jl / delta x^k = dg_jl/dx^k - N^m_k dg_jl/dy^m
    T12 = jet[(1, 2)]                  # [k, j, l] = d^3 F^2 / dx^k dy^j dy^l
    dgdx = 0.5 * xp.einsum("kjl->jlk", T12)
    dgdy = 2.0 * cartan(jet, xp)       # dg_jl/dy^m = 2 C_jlm
    dg = dgdx - xp.einsum("jlm,mk->jlk", dgdy, N)
    return (0.5 * xp.einsum("il,jlk->ijk", ginv, dg)
            + 0.5 * xp.einsum("il,lkj->ijk", ginv, dg)
            - 0.5 * xp.einsum("il,jkl->ijk", ginv, dg))


def chern_riemann_from_parts(gamma, dGdx, dGdy, N, xp=np):
    """R_j^i_kl from Gamma and its raw (x, y) derivatives.

    dGdx[i, j, k, m] = dGamma^i_{jk}/dx^m,  dGdy likewise in y.
    """
    dG = dGdx - xp.einsum("ijkm,ml->ijkl", dGdy, N)     # delta Gamma / delta x
    return (xp.einsum("ijlk->jikl", dG) - xp.einsum("ijkl->jikl", dG)
            + xp.einsum("ikm,mjl->jikl", gamma, gamma)
            - xp.einsum("ilm,mjk->jikl", gamma, gamma))


def chern_p_from_parts(dGdy, xp=np):
    return -xp.einsum("ijkl->jikl", dGdy)


def landsberg_from_parts(d2G, gamma, xp=np):
    """L^i_jk = [G^i]_{y^j y^k} - Gamma^i_{jk}; d2G[i, j, k] = d^2 G^i/dy^j dy^k."""
    return d2G - gamma


def mean_landsberg(L, g, ginv, xp=np):
    Llow = xp.einsum("im,mjk->ijk", g, L)
    return xp.einsum("jk,ijk->i", ginv, Llow)


def r3(R4, y, xp=np):
    return xp.einsum("m,msij->sij", y, R4)


def flag_tensors(R4, g, y, xp=np):
    R2up = xp.einsum("j,jikl,l->ik", y, R4, y)
    R2low = xp.einsum("ji,ik->jk", g, R2up)
    return R2up, R2low


def ricci_scalar(R2up, xp=np):
    return xp.trace(R2up)


def bar_ricci(R4, g, ginv, xp=np):
    # bar R_ij = g^{kl} g_ih R_k^h_jl
    return xp.einsum("kl,ih,khjl->ij", ginv, g, R4)


def scalar_curvature(barRic, ginv, xp=np):
    return xp.einsum("ij,ij->", ginv, barRic)
