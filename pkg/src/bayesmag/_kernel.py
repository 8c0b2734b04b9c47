"""Compiled RK4 core for the refined rotating-frame Hamiltonian.

The Hamiltonian is never stored as a matrix here; its ten non-zero
entries are rebuilt from phasors that are advanced by complex rotation
and resynchronised with ``exp`` every ``_RESYNC`` half steps.
"""

import numpy as np
from numba import njit

_RESYNC = 2048
_ISQ2 = 1.0 / np.sqrt(2.0)


@njit(cache=True, fastmath=True, inline="always")
def _entries(om, otg, mu, eps, z_mw, em, e2, e3, e4):
    ome = om * (1.0 + eps)
    h00 = ome * _ISQ2 * (1.0 - z_mw.real)
    ms = -mu * _ISQ2
    h20 = complex(ms, 0.5 * ome * z_mw.imag)
    h21 = complex(ms, -0.5 * ome * z_mw.imag)
    c3 = np.conj(e3 + e4)
    h03 = 0.25 * otg * (em + e2 + c3)
    h23 = 0.5 * _ISQ2 * otg * (c3 - em - e2)
    return h00, h20, h21, h03, h23


@njit(cache=True, fastmath=True, inline="always")
def _apply(h, p0, p1, p2, p3):
    h00, h20, h21, h03, h23 = h
    y0 = h00 * p0 + np.conj(h20) * p2 + h03 * p3
    y1 = -h00 * p1 + np.conj(h21) * p2 + h03 * p3
    y2 = h20 * p0 + h21 * p1 + h23 * p3
    y3 = np.conj(h03) * (p0 + p1) + np.conj(h23) * p2
    return -1j * y0, -1j * y1, -1j * y2, -1j * y3


@njit(cache=True, fastmath=True, inline="always")
def _phasors(t, w_mw, w2, w_q, xi, phi):
    z_mw = np.exp(1j * w_mw * t)
    em = np.exp(-1j * (xi * t + phi))
    e2 = np.exp(1j * ((w2 + xi) * t + phi))
    e3 = np.exp(1j * ((w_mw + xi) * t + phi))
    e4 = np.exp(1j * ((w_q - xi) * t - phi))
    return z_mw, em, e2, e3, e4


@njit(cache=True, fastmath=True)
def propagate_refined(psi0, seg_steps, seg_h, om, otg, xi, phi, w_mw, w2, w_q, mu, eps):
    """Integrate from t=0 through consecutive segments.

    Segment ``k`` takes ``seg_steps[k]`` RK4 steps of width ``seg_h[k]``;
    the population of |D> (index 2) and the norm are recorded at its end.
    ``mu`` and ``eps`` hold one value per step (held over the step) or are
    empty for noiseless evolution.
    """
    n_seg = seg_steps.shape[0]
    pops = np.empty(n_seg)
    norms = np.empty(n_seg)
    noisy = mu.shape[0] > 0
    p0, p1, p2, p3 = psi0[0], psi0[1], psi0[2], psi0[3]
    t = 0.0
    step = 0
    for k in range(n_seg):
        h = seg_h[k]
        hh = 0.5 * h
        r_mw = np.exp(1j * w_mw * hh)
        r_m = np.exp(-1j * xi * hh)
        r_2 = np.exp(1j * (w2 + xi) * hh)
        r_3 = np.exp(1j * (w_mw + xi) * hh)
        r_4 = np.exp(1j * (w_q - xi) * hh)
        t_seg = t
        z_mw, em, e2, e3, e4 = _phasors(t, w_mw, w2, w_q, xi, phi)
        for n in range(seg_steps[k]):
            if n > 0 and n % _RESYNC == 0:
                t = t_seg + n * h
                z_mw, em, e2, e3, e4 = _phasors(t, w_mw, w2, w_q, xi, phi)
            if noisy:
                m = mu[step]
                e = eps[step]
            else:
                m = 0.0
                e = 0.0
            ha = _entries(om, otg, m, e, z_mw, em, e2, e3, e4)
            z_mw *= r_mw
            em *= r_m
            e2 *= r_2
            e3 *= r_3
            e4 *= r_4
            hm = _entries(om, otg, m, e, z_mw, em, e2, e3, e4)
            z_mw *= r_mw
            em *= r_m
            e2 *= r_2
            e3 *= r_3
            e4 *= r_4
            hb = _entries(om, otg, m, e, z_mw, em, e2, e3, e4)

            a0, a1, a2, a3 = _apply(ha, p0, p1, p2, p3)
            b0, b1, b2, b3 = _apply(hm, p0 + hh * a0, p1 + hh * a1, p2 + hh * a2, p3 + hh * a3)
            c0, c1, c2, c3 = _apply(hm, p0 + hh * b0, p1 + hh * b1, p2 + hh * b2, p3 + hh * b3)
            d0, d1, d2, d3 = _apply(hb, p0 + h * c0, p1 + h * c1, p2 + h * c2, p3 + h * c3)
            s = h / 6.0
            p0 = p0 + s * (a0 + 2.0 * b0 + 2.0 * c0 + d0)
            p1 = p1 + s * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
            p2 = p2 + s * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
            p3 = p3 + s * (a3 + 2.0 * b3 + 2.0 * c3 + d3)
            step += 1
        t = t_seg + seg_steps[k] * h
        nrm = np.sqrt(abs(p0) ** 2 + abs(p1) ** 2 + abs(p2) ** 2 + abs(p3) ** 2)
        norms[k] = nrm
        if abs(nrm - 1.0) > 1e-9:
            p0 /= nrm
            p1 /= nrm
            p2 /= nrm
            p3 /= nrm
        pops[k] = abs(p2) ** 2
    psi = np.empty(4, np.complex128)
    psi[0] = p0
    psi[1] = p1
    psi[2] = p2
    psi[3] = p3
    return pops, psi, norms
