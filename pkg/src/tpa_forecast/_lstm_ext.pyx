# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM sequence kernels; same contract as ``_lstm_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, tanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double e = exp(-fabs(z))
    if z >= 0:
        return 1.0 / (1.0 + e)
    return e / (1.0 + e)


cdef inline void _gemm_nt(int rows, int cols, int inner, double *a, double *b,
                          double *c, double beta) noexcept nogil:
    # row-major c[rows, cols] = a[rows, inner] @ b[cols, inner].T + beta * c
    cdef char ta = b'T'
    cdef char tb = b'N'
    cdef double one = 1.0
    dgemm(&ta, &tb, &cols, &rows, &inner, &one, b, &inner, a, &inner, &beta, c, &cols)


cdef inline void _gemm_nn(int rows, int cols, int inner, double *a, double *b,
                          double *c, double beta) noexcept nogil:
    # row-major c[rows, cols] = a[rows, inner] @ b[inner, cols] + beta * c
    cdef char ta = b'N'
    cdef double one = 1.0
    dgemm(&ta, &ta, &cols, &rows, &inner, &one, b, &cols, a, &inner, &beta, c, &cols)


cdef inline void _gemm_tn(int rows, int cols, int inner, double *a, double *b,
                          double *c, double beta) noexcept nogil:
    # row-major c[rows, cols] = a[inner, rows].T @ b[inner, cols] + beta * c
    cdef char ta = b'N'
    cdef char tb = b'T'
    cdef double one = 1.0
    dgemm(&ta, &tb, &cols, &rows, &inner, &one, b, &cols, a, &rows, &beta, c, &cols)


def lstm_forward(x, wx, wh, b):
    cdef Py_ssize_t batch = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t steps = x.shape[2]
    cdef Py_ssize_t m = wh.shape[1]
    cdef Py_ssize_t g4 = 4 * m

    cdef double[:, :, ::1] xs = np.ascontiguousarray(np.transpose(x, (2, 0, 1)), dtype=np.float64)
    cdef double[:, ::1] wxv = np.ascontiguousarray(wx, dtype=np.float64)
    cdef double[:, ::1] whv = np.ascontiguousarray(wh, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)

    gates_arr = np.empty((steps, batch, g4))
    hs_arr = np.zeros((steps + 1, batch, m))
    cs_arr = np.zeros((steps + 1, batch, m))
    cdef double[:, :, ::1] gates = gates_arr
    cdef double[:, :, ::1] hs = hs_arr
    cdef double[:, :, ::1] cs = cs_arr
    cdef Py_ssize_t t, r, j
    cdef double c

    if steps == 0 or batch == 0:
        return np.zeros((batch, m, steps)), gates_arr, cs_arr

    with nogil:
        for t in range(steps):
            for r in range(batch):
                for j in range(g4):
                    gates[t, r, j] = bv[j]
        # input projection for every step at once
        if n > 0:
            _gemm_nt(<int>(steps * batch), <int>g4, <int>n, &xs[0, 0, 0], &wxv[0, 0], &gates[0, 0, 0], 1.0)
        for t in range(steps):
            if t > 0:
                _gemm_nt(<int>batch, <int>g4, <int>m, &hs[t, 0, 0], &whv[0, 0], &gates[t, 0, 0], 1.0)
            for r in range(batch):
                for j in range(3 * m):
                    gates[t, r, j] = _sigmoid(gates[t, r, j])
                for j in range(3 * m, g4):
                    gates[t, r, j] = tanh(gates[t, r, j])
                for j in range(m):
                    c = gates[t, r, m + j] * cs[t, r, j] + gates[t, r, j] * gates[t, r, 3 * m + j]
                    cs[t + 1, r, j] = c
                    hs[t + 1, r, j] = gates[t, r, 2 * m + j] * tanh(c)

    h = np.ascontiguousarray(np.transpose(hs_arr[1:], (1, 2, 0)))
    return h, gates_arr, cs_arr


def lstm_backward(dh_seq, x, wx, wh, h, gates_in, cells_in):
    cdef Py_ssize_t batch = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t steps = x.shape[2]
    cdef Py_ssize_t m = wh.shape[1]
    cdef Py_ssize_t g4 = 4 * m

    cdef double[:, :, ::1] xs = np.ascontiguousarray(np.transpose(x, (2, 0, 1)), dtype=np.float64)
    cdef double[:, :, ::1] dhs = np.ascontiguousarray(np.transpose(dh_seq, (2, 0, 1)), dtype=np.float64)
    hprev_arr = np.zeros((steps, batch, m))
    if steps > 1:
        hprev_arr[1:] = np.transpose(h, (2, 0, 1))[:-1]
    cdef double[:, :, ::1] hprev = hprev_arr
    cdef double[:, ::1] wxv = np.ascontiguousarray(wx, dtype=np.float64)
    cdef double[:, ::1] whv = np.ascontiguousarray(wh, dtype=np.float64)
    cdef double[:, :, ::1] gates = np.ascontiguousarray(gates_in, dtype=np.float64)
    cdef double[:, :, ::1] cells = np.ascontiguousarray(cells_in, dtype=np.float64)

    dz_arr = np.empty((steps, batch, g4))
    dx_arr = np.zeros((steps, batch, n))
    dwx_arr = np.zeros((g4, n))
    dwh_arr = np.zeros((g4, m))
    db_arr = np.zeros(g4)
    dh_next_arr = np.zeros((batch, m))
    dc_next_arr = np.zeros((batch, m))
    cdef double[:, :, ::1] dz = dz_arr
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, ::1] dwx = dwx_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] db = db_arr
    cdef double[:, ::1] dh_next = dh_next_arr
    cdef double[:, ::1] dc_next = dc_next_arr
    cdef Py_ssize_t t, r, j
    cdef double dh, dc, tc, gi, gf, go, gg

    if steps == 0 or batch == 0:
        return np.zeros((batch, n, steps)), dwx_arr, dwh_arr, db_arr

    with nogil:
        for t in range(steps - 1, -1, -1):
            for r in range(batch):
                for j in range(m):
                    gi = gates[t, r, j]
                    gf = gates[t, r, m + j]
                    go = gates[t, r, 2 * m + j]
                    gg = gates[t, r, 3 * m + j]
                    dh = dhs[t, r, j] + dh_next[r, j]
                    tc = tanh(cells[t + 1, r, j])
                    dc = dh * go * (1.0 - tc * tc) + dc_next[r, j]
                    dz[t, r, j] = dc * gg * gi * (1.0 - gi)
                    dz[t, r, m + j] = dc * cells[t, r, j] * gf * (1.0 - gf)
                    dz[t, r, 2 * m + j] = dh * tc * go * (1.0 - go)
                    dz[t, r, 3 * m + j] = dc * gi * (1.0 - gg * gg)
                    dc_next[r, j] = dc * gf
            _gemm_nn(<int>batch, <int>m, <int>g4, &dz[t, 0, 0], &whv[0, 0], &dh_next[0, 0], 0.0)
            if t > 0:
                _gemm_tn(<int>g4, <int>m, <int>batch, &dz[t, 0, 0], &hprev[t, 0, 0], &dwh[0, 0], 1.0)
        # input-side gradients for every step at once
        if n > 0:
            _gemm_tn(<int>g4, <int>n, <int>(steps * batch), &dz[0, 0, 0], &xs[0, 0, 0], &dwx[0, 0], 0.0)
            _gemm_nn(<int>(steps * batch), <int>n, <int>g4, &dz[0, 0, 0], &wxv[0, 0], &dx[0, 0, 0], 0.0)
        for t in range(steps):
            for r in range(batch):
                for j in range(g4):
                    db[j] += dz[t, r, j]

    return np.ascontiguousarray(np.transpose(dx_arr, (1, 2, 0))), dwx_arr, dwh_arr, db_arr
