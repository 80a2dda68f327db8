"""Pure numpy LSTM sequence kernels.

Gate layout along the stacked axis is ``[i, f, o, g]``. Shapes:

    x   (B, n, w)    input windows, one column per time step
    wx  (4m, n)      stacked input-to-gate weights
    wh  (4m, m)      stacked hidden-to-gate weights
    b   (4m,)        stacked biases

The compiled module ``_lstm_ext`` exposes the same two functions.
"""

import numpy as np


def sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def lstm_forward(x, wx, wh, b):
    """Run one LSTM layer over every column of ``x`` from zero state.

    Returns ``(h, gates, cells)`` where ``h`` is (B, m, w), ``gates`` is
    (w, B, 4m) post-activation and ``cells`` is (w + 1, B, m) with the zero
    initial state in slot 0.
    """
    batch, _, steps = x.shape
    m = wh.shape[1]
    xs = np.ascontiguousarray(x.transpose(2, 0, 1))
    xproj = xs @ wx.T + b
    hs = np.zeros((steps + 1, batch, m))
    cs = np.zeros((steps + 1, batch, m))
    gates = np.empty((steps, batch, 4 * m))
    for t in range(steps):
        z = xproj[t] + hs[t] @ wh.T
        g = gates[t]
        g[:, : 3 * m] = sigmoid(z[:, : 3 * m])
        g[:, 3 * m :] = np.tanh(z[:, 3 * m :])
        cs[t + 1] = g[:, m : 2 * m] * cs[t] + g[:, :m] * g[:, 3 * m :]
        hs[t + 1] = g[:, 2 * m : 3 * m] * np.tanh(cs[t + 1])
    h = np.ascontiguousarray(hs[1:].transpose(1, 2, 0))
    return h, gates, cs


def lstm_backward(dh_seq, x, wx, wh, h, gates, cells):
    """Gradients of a scalar with respect to ``(x, wx, wh, b)``.

    ``dh_seq`` is the upstream gradient for ``h`` (B, m, w).
    """
    batch, _, steps = x.shape
    m = wh.shape[1]
    xs = np.ascontiguousarray(x.transpose(2, 0, 1))
    hs_prev = np.zeros((steps, batch, m))
    hs_prev[1:] = h.transpose(2, 0, 1)[:-1]
    dhs = dh_seq.transpose(2, 0, 1)

    dz_all = np.empty((steps, batch, 4 * m))
    dwh = np.zeros_like(wh)
    dh_next = np.zeros((batch, m))
    dc_next = np.zeros((batch, m))
    for t in range(steps - 1, -1, -1):
        g = gates[t]
        gi, gf, go, gg = g[:, :m], g[:, m : 2 * m], g[:, 2 * m : 3 * m], g[:, 3 * m :]
        dh = dhs[t] + dh_next
        tc = np.tanh(cells[t + 1])
        dc = dh * go * (1.0 - tc * tc) + dc_next
        dz = dz_all[t]
        dz[:, :m] = dc * gg * gi * (1.0 - gi)
        dz[:, m : 2 * m] = dc * cells[t] * gf * (1.0 - gf)
        dz[:, 2 * m : 3 * m] = dh * tc * go * (1.0 - go)
        dz[:, 3 * m :] = dc * gi * (1.0 - gg * gg)
        dc_next = dc * gf
        dh_next = dz @ wh
        dwh += dz.T @ hs_prev[t]

    flat_dz = dz_all.reshape(steps * batch, 4 * m)
    dwx = flat_dz.T @ xs.reshape(steps * batch, -1)
    db = flat_dz.sum(axis=0)
    dx = (dz_all @ wx).transpose(1, 2, 0)
    return np.ascontiguousarray(dx), dwx, dwh, db
