"""Numba kernels for matrix-free state manipulation.

Operator application uses a compiled term list in which every 1- or
2-local Pauli string is one gather ``out[i] += f * psi[i ^ mask]`` whose
factor ``f`` is selected by the parity of two bits of ``i`` (``c_even``
or ``c_odd``; a dummy bit position 62 reads as 0, which encodes
single-bit and unconditional factors).  Pure-z strings are folded into
one diagonal vector.

All kernels write each output element exactly once and reductions are
chunked with a fixed block size, so results are bit-identical for any
thread count.
"""

import numba
import numpy as np
from numba import njit, prange

_CHUNK = 1 << 12
_DUMMY_BIT = 62  # bit that is always 0 for any index we ever use


@njit(cache=True, parallel=True)
def build_diag(dim, zj, zl, zc):
    """Diagonal of sum_t c_t * s(bit_j) * s(bit_l), with s(b) = 1 - 2b."""
    out = np.zeros(dim, dtype=np.complex128)
    nt = zj.shape[0]
    for i in prange(dim):
        acc = 0.0 + 0.0j
        for t in range(nt):
            sj = 1 - 2 * ((i >> zj[t]) & 1)
            sl = 1 - 2 * ((i >> zl[t]) & 1)
            acc += zc[t] * (sj * sl if zj[t] != zl[t] else sj)
        out[i] = acc
    return out


# ---------------------------------------------------------------------------
# single-state application


@njit(cache=True, parallel=True, fastmath=True)
def apply_one_real(psi, diag, masks, ca, cb, ce, co, out):
    """out = H psi for real factor pairs; branchless factor select."""
    dim = psi.shape[0]
    nt = masks.shape[0]
    nchunk = (dim + _CHUNK - 1) // _CHUNK
    for c in prange(nchunk):
        lo = c * _CHUNK
        hi = min(lo + _CHUNK, dim)
        for i in range(lo, hi):
            acc = diag[i] * psi[i]
            for t in range(nt):
                par = ((i >> ca[t]) ^ (i >> cb[t])) & 1
                f = ce[t] + par * (co[t] - ce[t])
                acc += f * psi[i ^ masks[t]]
            out[i] = acc


@njit(cache=True, parallel=True, fastmath=True)
def apply_one_complex(psi, diag, masks, ca, cb, ce, co, out):
    dim = psi.shape[0]
    nt = masks.shape[0]
    nchunk = (dim + _CHUNK - 1) // _CHUNK
    for c in prange(nchunk):
        lo = c * _CHUNK
        hi = min(lo + _CHUNK, dim)
        for i in range(lo, hi):
            acc = diag[i] * psi[i]
            for t in range(nt):
                par = ((i >> ca[t]) ^ (i >> cb[t])) & 1
                f = co[t] if par else ce[t]
                if f != 0.0:
                    acc += f * psi[i ^ masks[t]]
            out[i] = acc


# ---------------------------------------------------------------------------
# block application (same H on many states); generated per column count

_BLOCK_CHUNK_BITS = 8
_block_real_cache: dict = {}
_block_complex_cache: dict = {}


def _make_block_real(w: int):
    init = "\n            ".join(f"out[i, {q}] = d * psi[i, {q}]" for q in range(w))
    accum = "\n                    ".join(f"out[i, {q}] += f * psi[s, {q}]" for q in range(w))
    src = f'''
@njit(cache=False, parallel=True, fastmath=True)
def kern(psi, diag, masks, ca, cb, ce, co, out):
    dim = psi.shape[0]
    nt = masks.shape[0]
    CH = 1 << {_BLOCK_CHUNK_BITS}
    nchunk = (dim + CH - 1) // CH
    for c in prange(nchunk):
        lo = c * CH
        hi = min(lo + CH, dim)
        for i in range(lo, hi):
            d = diag[i]
            {init}
        for t in range(nt):
            m = masks[t]
            a = ca[t]
            b = cb[t]
            fe = ce[t]
            fo = co[t]
            for i in range(lo, hi):
                par = ((i >> a) ^ (i >> b)) & 1
                f = fo if par else fe
                if f != 0.0:
                    s = i ^ m
                    {accum}
'''
    g = {"njit": njit, "prange": prange, "np": np}
    exec(src, g)
    return g["kern"]


def _make_block_complex(ncol: int):
    init = "\n            ".join(f"out[i, {q}] = d * psi[i, {q}]" for q in range(ncol))
    accum = "\n                    ".join(f"out[i, {q}] += f * psi[s, {q}]" for q in range(ncol))
    src = f'''
@njit(cache=False, parallel=True, fastmath=True)
def kern(psi, diag, masks, ca, cb, ce, co, out):
    dim = psi.shape[0]
    nt = masks.shape[0]
    CH = 1 << {_BLOCK_CHUNK_BITS}
    nchunk = (dim + CH - 1) // CH
    for c in prange(nchunk):
        lo = c * CH
        hi = min(lo + CH, dim)
        for i in range(lo, hi):
            d = diag[i]
            {init}
        for t in range(nt):
            m = masks[t]
            a = ca[t]
            b = cb[t]
            fe = ce[t]
            fo = co[t]
            for i in range(lo, hi):
                par = ((i >> a) ^ (i >> b)) & 1
                f = fo if par else fe
                if f != 0.0:
                    s = i ^ m
                    {accum}
'''
    g = {"njit": njit, "prange": prange, "np": np}
    exec(src, g)
    return g["kern"]


def apply_block(psi2d, diag, masks, ca, cb, ce, co, out2d, real_coeffs: bool):
    """Apply the compiled term list to a (dim, ncol) C-contiguous block.

    For ``real_coeffs`` the caller passes float64 ``diag``/``ce``/``co``
    and the complex block is processed through a float64 view.
    """
    ncol = psi2d.shape[1]
    if real_coeffs:
        w = 2 * ncol
        kern = _block_real_cache.get(w)
        if kern is None:
            kern = _block_real_cache.setdefault(w, _make_block_real(w))
        kern(psi2d.view(np.float64), diag, masks, ca, cb, ce, co, out2d.view(np.float64))
    else:
        kern = _block_complex_cache.get(ncol)
        if kern is None:
            kern = _block_complex_cache.setdefault(ncol, _make_block_complex(ncol))
        kern(psi2d, diag, masks, ca, cb, ce, co, out2d)


# ---------------------------------------------------------------------------
# single-site rotations and z-phases


@njit(cache=True, parallel=True)
def rotate_site(psi, j, u00, u01, u10, u11):
    """In-place single-site 2x2 unitary on site j; psi is (dim,) or (dim, ncol)."""
    flat = psi.reshape(psi.shape[0], -1)
    ncol = flat.shape[1]
    step = 1 << j
    nblocks = flat.shape[0] >> (j + 1)
    for blk in prange(nblocks):
        base = blk << (j + 1)
        for off in range(step):
            i0 = base + off
            i1 = i0 + step
            for q in range(ncol):
                a0 = flat[i0, q]
                a1 = flat[i1, q]
                flat[i0, q] = u00 * a0 + u01 * a1
                flat[i1, q] = u10 * a0 + u11 * a1


@njit(cache=True, parallel=True)
def phase_by_popcount(psi, table):
    """In-place psi[i] *= table[popcount(i)]; psi (dim,), table (n+1,)."""
    dim = psi.shape[0]
    for i in prange(dim):
        v = i
        p = 0
        while v:
            v &= v - 1
            p += 1
        psi[i] = psi[i] * table[p]


@njit(cache=True, parallel=True)
def phase_by_popcount_block(psi2d, tables):
    """In-place psi2d[i, q] *= tables[q, popcount(i)]."""
    dim, ncol = psi2d.shape
    for i in prange(dim):
        v = i
        p = 0
        while v:
            v &= v - 1
            p += 1
        for q in range(ncol):
            psi2d[i, q] = psi2d[i, q] * tables[q, p]


# ---------------------------------------------------------------------------
# reductions (fixed chunk order: thread-count independent)


@njit(cache=True, parallel=True)
def _dot_weighted_z_partials(a, b, weights_by_popcount, partials):
    dim = a.shape[0]
    nchunk = partials.shape[0]
    for c in prange(nchunk):
        lo = c * _CHUNK
        hi = min(lo + _CHUNK, dim)
        acc = 0.0 + 0.0j
        for i in range(lo, hi):
            v = i
            p = 0
            while v:
                v &= v - 1
                p += 1
            acc += np.conj(a[i]) * weights_by_popcount[p] * b[i]
        partials[c] = acc


def dot_weighted_z(a, b, weights_by_popcount):
    """<a| diag(w(popcount)) |b> summed in fixed chunk order."""
    dim = a.shape[0]
    partials = np.empty((dim + _CHUNK - 1) // _CHUNK, dtype=np.complex128)
    _dot_weighted_z_partials(a, b, weights_by_popcount, partials)
    return complex(partials.sum())


@njit(cache=True, parallel=True)
def _dot_mask_z_partials(a, b, zmask, partials):
    # weight = product over bits in zmask of (1 - 2 bit_i)
    dim = a.shape[0]
    nchunk = partials.shape[0]
    for c in prange(nchunk):
        lo = c * _CHUNK
        hi = min(lo + _CHUNK, dim)
        acc = 0.0 + 0.0j
        for i in range(lo, hi):
            v = i & zmask
            p = 0
            while v:
                v &= v - 1
                p += 1
            s = 1 - 2 * (p & 1)
            acc += np.conj(a[i]) * s * b[i]
        partials[c] = acc


def dot_mask_z(a, b, zmask):
    """<a| prod_{j in zmask} sigma^z_j |b> in fixed chunk order."""
    dim = a.shape[0]
    partials = np.empty((dim + _CHUNK - 1) // _CHUNK, dtype=np.complex128)
    _dot_mask_z_partials(a, b, zmask, partials)
    return complex(partials.sum())


def num_threads() -> int:
    return numba.get_num_threads()
