"""Matrix-free Lindblad kernels on the full 2**N product space.

Every jump operator here is real, so the master equation maps real matrices
to real matrices and commutes with transposition. A Hermitian rho is carried
as the real matrix M = Re(rho) + Im(rho); its symmetric and antisymmetric
parts are Re(rho) and Im(rho), and both evolve under the same real map.

Bit j of a basis index is the state of one atom (1 = up). The collective
and single-atom terms are sums over atoms, so the bit order does not matter.
Kernels assume N >= 2 so that rows split into groups of four columns.
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _left(up, down, x, n, out, scale, accumulate):
    # out (+)= scale * M @ x,  M = up S+ + down S-
    dim = x.shape[0]
    acc = np.empty(dim)
    for a in range(dim):
        acc[:] = 0.0
        for j in range(n):
            b = a ^ (1 << j)
            coef = up if (a >> j) & 1 else down
            row = x[b]
            for k in range(dim):
                acc[k] += coef * row[k]
        o = out[a]
        if accumulate:
            for k in range(dim):
                o[k] += scale * acc[k]
        else:
            for k in range(dim):
                o[k] = scale * acc[k]


@njit(cache=True, fastmath=True)
def _right(up, down, x, n, out, scale, accumulate):
    # out (+)= scale * x @ M^T; within a row, column b gathers b ^ (1 << j)
    dim = x.shape[0]
    for a in range(dim):
        row = x[a]
        o = out[a]
        for b0 in range(0, dim, 4):
            r0 = row[b0]
            r1 = row[b0 + 1]
            r2 = row[b0 + 2]
            r3 = row[b0 + 3]
            t0 = down * (r1 + r2)
            t1 = up * r0 + down * r3
            t2 = down * r3 + up * r0
            t3 = up * (r2 + r1)
            for j in range(2, n):
                m = 1 << j
                src = b0 ^ m
                c = up if b0 & m else down
                t0 += c * row[src]
                t1 += c * row[src + 1]
                t2 += c * row[src + 2]
                t3 += c * row[src + 3]
            if accumulate:
                o[b0] += scale * t0
                o[b0 + 1] += scale * t1
                o[b0 + 2] += scale * t2
                o[b0 + 3] += scale * t3
            else:
                o[b0] = scale * t0
                o[b0 + 1] = scale * t1
                o[b0 + 2] = scale * t2
                o[b0 + 3] = scale * t3


@njit(cache=True, fastmath=True)
def _popcounts(n):
    dim = 1 << n
    pop = np.empty(dim, dtype=np.int64)
    for a in range(dim):
        cnt = 0
        for j in range(n):
            cnt += (a >> j) & 1
        pop[a] = cnt
    return pop


@njit(cache=True, fastmath=True)
def _spont(scale, s, c, x, n, out):
    # out += scale * sum over atoms of the three channels
    # (s P-, c P+, s sigma+ + c sigma-) of {L^T L, x} - 2 L x L^T.
    # The flip channel has amplitude s out of a down spin, c out of an up spin.
    dim = x.shape[0]
    s2 = s * s
    pop = _popcounts(n)
    dd = np.empty(dim)
    for a in range(dim):
        dd[a] = 2.0 * (c * c * pop[a] + s2 * (n - pop[a]))
    for a in range(dim):
        xa = x[a]
        o = out[a]
        pa = pop[a]
        da = dd[a]
        # flipping bit j of a; amplitude depends on the bit before the flip
        f0 = -2.0 * (s if a & 1 else c)
        f1 = -2.0 * (s if a & 2 else c)
        x0 = x[a ^ 1]
        x1 = x[a ^ 2]
        for b0 in range(0, dim, 4):
            # projector channels keep both indices: weight c^2 per shared up
            # spin, s^2 per shared down spin
            b1, b2, b3 = b0 + 1, b0 + 2, b0 + 3
            t0 = (da + dd[b0] - 2.0 * (pop[a & b0] + s2 * (n - pa - pop[b0]))) * xa[b0]
            t1 = (da + dd[b1] - 2.0 * (pop[a & b1] + s2 * (n - pa - pop[b1]))) * xa[b1]
            t2 = (da + dd[b2] - 2.0 * (pop[a & b2] + s2 * (n - pa - pop[b2]))) * xa[b2]
            t3 = (da + dd[b3] - 2.0 * (pop[a & b3] + s2 * (n - pa - pop[b3]))) * xa[b3]
            t0 += f0 * c * x0[b1] + f1 * c * x1[b2]
            t1 += f0 * s * x0[b0] + f1 * c * x1[b3]
            t2 += f0 * c * x0[b3] + f1 * s * x1[b0]
            t3 += f0 * s * x0[b2] + f1 * s * x1[b1]
            for j in range(2, n):
                m = 1 << j
                f = -2.0 * (s if a & m else c) * (s if b0 & m else c)
                src = x[a ^ m]
                sb = b0 ^ m
                t0 += f * src[sb]
                t1 += f * src[sb + 1]
                t2 += f * src[sb + 2]
                t3 += f * src[sb + 3]
            o[b0] += scale * t0
            o[b1] += scale * t1
            o[b2] += scale * t2
            o[b3] += scale * t3


def _as_real(x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        raise TypeError("kernels act on the real representation; use to_real()")
    return np.ascontiguousarray(x, dtype=np.float64)


def to_real(rho):
    """Real carrier Re(rho) + Im(rho) of a Hermitian matrix."""
    rho = np.asarray(rho)
    return np.ascontiguousarray(rho.real + rho.imag, dtype=np.float64)


def from_real(m):
    """Hermitian matrix whose real carrier is ``m``."""
    m = np.asarray(m, dtype=np.float64)
    return 0.5 * (m + m.T) + 0.5j * (m - m.T)


def collective_left(up, down, x, n):
    """(up S+ + down S-) @ x."""
    x = _as_real(x)
    out = np.empty_like(x)
    _left(float(up), float(down), x, n, out, 1.0, False)
    return out


def collective_right(up, down, x, n):
    """x @ (up S+ + down S-)^T."""
    x = _as_real(x)
    out = np.empty_like(x)
    _right(float(up), float(down), x, n, out, 1.0, False)
    return out


_scratch = {}


def _buffer(shape):
    # one reusable temporary per shape; kernels are single-threaded
    buf = _scratch.get(shape)
    if buf is None:
        _scratch.clear()
        buf = _scratch[shape] = np.empty(shape)
    return buf


def add_cavity_dissipator(s, c, x, n, out, scale=1.0):
    """out = scale * (K x + x K - 2 J x J^T), J = s S+ + c S-, K = J^T J.

    ``out`` is overwritten, not accumulated into.
    """
    s, c, scale = float(s), float(c), float(scale)
    tmp = _buffer(x.shape)
    _left(s, c, x, n, tmp, 1.0, False)  # J x
    _left(c, s, tmp, n, out, scale, False)  # K x
    _right(s, c, tmp, n, out, -2.0 * scale, True)  # J x J^T
    _right(s, c, x, n, tmp, 1.0, False)  # x J^T
    _right(c, s, tmp, n, out, scale, True)  # x K
    return out


def cavity_dissipator(s, c, x, n, scale=1.0):
    x = _as_real(x)
    return add_cavity_dissipator(s, c, x, n, np.empty_like(x), scale)


def add_spont_dissipator(s, c, x, n, out, scale=1.0):
    """out += scale * sum_j sum_alpha ({L^T L, x} - 2 L x L^T), in place."""
    _spont(float(scale), float(s), float(c), _as_real(x), n, out)
    return out


def spont_dissipator(s, c, x, n, scale=1.0):
    x = _as_real(x)
    return add_spont_dissipator(s, c, x, n, np.zeros_like(x), scale)


def lindblad_rhs(s, c, gamma_cav, gamma_spont, x, n):
    """-gamma_cav D_cav(x) - gamma_spont D_spont(x) on the real carrier."""
    x = _as_real(x)
    out = np.empty_like(x)
    if gamma_cav > 0:
        add_cavity_dissipator(s, c, x, n, out, -gamma_cav)
    else:
        out[:] = 0.0
    if gamma_spont > 0:
        add_spont_dissipator(s, c, x, n, out, -gamma_spont)
    return out
