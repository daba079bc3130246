"""Quadratic Monge-Ampere-type operator and its symmetric bilinear form.

M[phi]    = phi_11 phi_22 - phi_12^2
gamma(f,g) = f_11 g_22 + f_22 g_11 - 2 f_12 g_12          (so gamma(f,f) = 2 M[f])

Both act level-wise on strip fields through the horizontal Hessian only.
Products are formed pseudo-spectrally: derivative inputs are truncated to
the 2/3 band, multiplied pointwise in physical space, transformed back,
and truncated again, so every retained coefficient is alias-free and the
horizontal mean of M[phi] vanishes identically at every level (pairwise
cancellation in the Parseval sum), which is the solvability condition the
nonlinear iteration relies on.
"""

from dataclasses import dataclass

import numpy as np

from .strip import StripField3D, _hermitianize_levels


@dataclass(frozen=True)
class HessianPack:
    """Dealiased horizontal second derivatives of a strip field, physical."""

    phi11: np.ndarray
    phi12: np.ndarray
    phi22: np.ndarray


def _band_mask(grid2):
    return grid2.dealias_mask


def hessian_pack(phi):
    """Physical, dealiased (phi11, phi12, phi22) on every level."""
    grid2 = phi.grid.horizontal
    n1, n2 = grid2.shape
    k1 = grid2.k1[None, :, :]
    k2 = grid2.k2[None, :, :]
    c = np.where(_band_mask(grid2)[None, :, :], phi.data, 0.0)
    scale = n1 * n2
    d11 = np.fft.ifft2(-4 * np.pi**2 * k1**2 * c * scale, axes=(1, 2)).real
    d22 = np.fft.ifft2(-4 * np.pi**2 * k2**2 * c * scale, axes=(1, 2)).real
    d12 = np.fft.ifft2(-4 * np.pi**2 * k1 * k2 * c * scale, axes=(1, 2)).real
    return HessianPack(d11, d12, d22)


def _to_spectral_dealiased(grid, phys):
    n1, n2 = grid.horizontal.shape
    coeffs = np.fft.fft2(phys, axes=(1, 2)) / (n1 * n2)
    coeffs = np.where(_band_mask(grid.horizontal)[None, :, :], coeffs, 0.0)
    return StripField3D(grid, _hermitianize_levels(coeffs))


def monge_ampere_apply(phi):
    """M[phi] = phi_11 phi_22 - phi_12^2, dealiased."""
    h = hessian_pack(phi)
    return _to_spectral_dealiased(phi.grid, h.phi11 * h.phi22 - h.phi12**2)


def gamma_apply(f, g):
    """Symmetric bilinear polarisation of M; gamma(f,f) = 2 M[f]."""
    if f.grid != g.grid:
        raise ValueError("strip fields live on different grids")
    hf = hessian_pack(f)
    hg = hessian_pack(g)
    phys = hf.phi11 * hg.phi22 + hf.phi22 * hg.phi11 - 2.0 * (hf.phi12 * hg.phi12)
    return _to_spectral_dealiased(f.grid, phys)
