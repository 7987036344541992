# Compiled per-cell assembly kernels; mirrors numpy_backend exactly.
# See podns._kernels for the shared signatures.

import numpy as np

cimport numpy as cnp

cnp.import_array()


def convection_block(double[:, ::1] ucx, double[:, ::1] ucy,
                     double[:, ::1] phi, double[:, :, :, ::1] dphys,
                     double[:, ::1] wdet):
    cdef Py_ssize_t nc = ucx.shape[0]
    cdef Py_ssize_t nloc = phi.shape[0]
    cdef Py_ssize_t nq = phi.shape[1]
    out_arr = np.zeros((nc, nloc, nloc))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, q, i, j
    cdef double uqx, uqy, div, w, adv, wphi
    for c in range(nc):
        for q in range(nq):
            uqx = 0.0
            uqy = 0.0
            div = 0.0
            for i in range(nloc):
                uqx += ucx[c, i] * phi[i, q]
                uqy += ucy[c, i] * phi[i, q]
                div += ucx[c, i] * dphys[c, i, q, 0] + ucy[c, i] * dphys[c, i, q, 1]
            w = wdet[c, q]
            for j in range(nloc):
                adv = w * (uqx * dphys[c, j, q, 0] + uqy * dphys[c, j, q, 1]
                           + 0.5 * div * phi[j, q])
                for i in range(nloc):
                    out[c, i, j] += phi[i, q] * adv
    return out_arr


def convection_jacobian_extra(double[:, ::1] ucx, double[:, ::1] ucy,
                              double[:, ::1] phi, double[:, :, :, ::1] dphys,
                              double[:, ::1] wdet):
    cdef Py_ssize_t nc = ucx.shape[0]
    cdef Py_ssize_t nloc = phi.shape[0]
    cdef Py_ssize_t nq = phi.shape[1]
    out_arr = np.zeros((nc, 2, 2, nloc, nloc))
    cdef double[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t c, q, i, j, a, b
    cdef double w, wphi
    cdef double uq[2]
    cdef double grad[2][2]
    for c in range(nc):
        for q in range(nq):
            uq[0] = 0.0
            uq[1] = 0.0
            grad[0][0] = grad[0][1] = grad[1][0] = grad[1][1] = 0.0
            for i in range(nloc):
                uq[0] += ucx[c, i] * phi[i, q]
                uq[1] += ucy[c, i] * phi[i, q]
                grad[0][0] += ucx[c, i] * dphys[c, i, q, 0]
                grad[0][1] += ucx[c, i] * dphys[c, i, q, 1]
                grad[1][0] += ucy[c, i] * dphys[c, i, q, 0]
                grad[1][1] += ucy[c, i] * dphys[c, i, q, 1]
            w = wdet[c, q]
            for i in range(nloc):
                wphi = w * phi[i, q]
                for j in range(nloc):
                    for a in range(2):
                        for b in range(2):
                            out[c, a, b, i, j] += wphi * (
                                phi[j, q] * grad[a][b]
                                + 0.5 * uq[a] * dphys[c, j, q, b])
    return out_arr


def trilinear(double[:, ::1] ucx, double[:, ::1] ucy,
              double[:, ::1] vcx, double[:, ::1] vcy,
              double[:, ::1] wcx, double[:, ::1] wcy,
              double[:, ::1] phi, double[:, :, :, ::1] dphys,
              double[:, ::1] wdet):
    cdef Py_ssize_t nc = ucx.shape[0]
    cdef Py_ssize_t nloc = phi.shape[0]
    cdef Py_ssize_t nq = phi.shape[1]
    cdef Py_ssize_t c, q, i
    cdef double total = 0.0
    cdef double uqx, uqy, divu, vqx, vqy, wqx, wqy
    cdef double gvx0, gvx1, gvy0, gvy1
    for c in range(nc):
        for q in range(nq):
            uqx = uqy = divu = 0.0
            vqx = vqy = wqx = wqy = 0.0
            gvx0 = gvx1 = gvy0 = gvy1 = 0.0
            for i in range(nloc):
                uqx += ucx[c, i] * phi[i, q]
                uqy += ucy[c, i] * phi[i, q]
                divu += ucx[c, i] * dphys[c, i, q, 0] + ucy[c, i] * dphys[c, i, q, 1]
                vqx += vcx[c, i] * phi[i, q]
                vqy += vcy[c, i] * phi[i, q]
                gvx0 += vcx[c, i] * dphys[c, i, q, 0]
                gvx1 += vcx[c, i] * dphys[c, i, q, 1]
                gvy0 += vcy[c, i] * dphys[c, i, q, 0]
                gvy1 += vcy[c, i] * dphys[c, i, q, 1]
                wqx += wcx[c, i] * phi[i, q]
                wqy += wcy[c, i] * phi[i, q]
            total += wdet[c, q] * (
                wqx * (uqx * gvx0 + uqy * gvx1)
                + wqy * (uqx * gvy0 + uqy * gvy1)
                + 0.5 * divu * (vqx * wqx + vqy * wqy))
    return total
