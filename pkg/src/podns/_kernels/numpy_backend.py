"""Vectorized NumPy implementation of the per-cell assembly kernels.

See :mod:`podns._kernels` for the shared signatures.
"""

import numpy as np


def _at_quadrature(ucx, ucy, phi, dphys):
    uqx = ucx @ phi
    uqy = ucy @ phi
    gx = np.einsum("ci,ciqd->cqd", ucx, dphys)
    gy = np.einsum("ci,ciqd->cqd", ucy, dphys)
    return uqx, uqy, gx, gy


def convection_block(ucx, ucy, phi, dphys, wdet):
    uqx, uqy, gx, gy = _at_quadrature(ucx, ucy, phi, dphys)
    div = gx[:, :, 0] + gy[:, :, 1]
    adv = (
        uqx[:, :, None] * dphys[:, :, :, 0].transpose(0, 2, 1)
        + uqy[:, :, None] * dphys[:, :, :, 1].transpose(0, 2, 1)
        + 0.5 * div[:, :, None] * phi.T[None, :, :]
    )
    return np.einsum("cq,iq,cqj->cij", wdet, phi, adv, optimize=True)


def convection_jacobian_extra(ucx, ucy, phi, dphys, wdet):
    uqx, uqy, gx, gy = _at_quadrature(ucx, ucy, phi, dphys)
    uq = np.stack([uqx, uqy], axis=2)
    grad = np.stack([gx, gy], axis=2)  # (c, q, a, b) = d_b u_a
    term1 = np.einsum("cq,iq,jq,cqab->cabij", wdet, phi, phi, grad, optimize=True)
    term2 = 0.5 * np.einsum("cq,iq,cqa,cjqb->cabij", wdet, phi, uq, dphys, optimize=True)
    return term1 + term2


def trilinear(ucx, ucy, vcx, vcy, wcx, wcy, phi, dphys, wdet):
    uqx, uqy, _, _ = _at_quadrature(ucx, ucy, phi, dphys)
    _, _, gvx, gvy = _at_quadrature(vcx, vcy, phi, dphys)
    gux = np.einsum("ci,ciqd->cqd", ucx, dphys)
    guy = np.einsum("ci,ciqd->cqd", ucy, dphys)
    divu = gux[:, :, 0] + guy[:, :, 1]
    vqx = vcx @ phi
    vqy = vcy @ phi
    wqx = wcx @ phi
    wqy = wcy @ phi
    convx = uqx * gvx[:, :, 0] + uqy * gvx[:, :, 1]
    convy = uqx * gvy[:, :, 0] + uqy * gvy[:, :, 1]
    integrand = wqx * convx + wqy * convy + 0.5 * divu * (vqx * wqx + vqy * wqy)
    return float(np.sum(wdet * integrand))
