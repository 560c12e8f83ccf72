"""Weighted Pauli-term operators applied matrix-free to pure states.

Conventions used throughout the package:

* Basis states are indexed by integers; bit ``j`` of the index is spin
  ``j`` (site 0 is the least significant bit).  Bit value 0 means spin up
  (``sigma^z = +1``), bit value 1 means spin down.
* Couplings and fields are dimensionless, measured in units of the
  nearest-neighbour intra-chain coupling ``b``; times are in units of
  ``1/b``.
* Operators are sums of products of Pauli matrices on distinct sites.
  Everything the package needs is at most 2-local plus collective sums,
  and the fast application kernel is restricted to that; the dense path
  accepts any locality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

Factor = tuple[int, str]
Term = tuple[complex, tuple[Factor, ...]]


def _expand_ladder(coeff: complex, factors: Sequence[Factor]) -> list[tuple[complex, tuple[Factor, ...]]]:
    """Expand sigma^+/sigma^- factors into x,y at build time."""
    out = [(coeff, ())]
    for site, axis in factors:
        if axis in ("x", "y", "z"):
            out = [(c, f + ((site, axis),)) for c, f in out]
        elif axis in ("+", "-"):
            s = 1j if axis == "+" else -1j
            out = [(0.5 * c, f + ((site, "x"),)) for c, f in out] + [
                (0.5 * s * c, f + ((site, "y"),)) for c, f in out
            ]
        else:
            raise ValueError(f"unknown Pauli axis {axis!r}")
    return out


@dataclass(frozen=True)
class OperatorSpec:
    """A weighted sum of Pauli products defining a Hamiltonian or observable.

    Parameters
    ----------
    n_spins:
        Number of spin-1/2 sites.
    terms:
        Iterable of ``(coefficient, factors)`` where ``factors`` is a
        sequence of ``(site, axis)`` with ``axis`` in ``x y z + -``.
        Ladder operators are expanded immediately, so the stored terms
        use only x, y, z.  No site may repeat within one term.
    """

    n_spins: int
    terms: tuple[Term, ...] = field(default=())

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError("n_spins must be >= 1")
        canon: list[Term] = []
        for coeff, factors in self.terms:
            for c, f in _expand_ladder(complex(coeff), tuple(factors)):
                f = tuple(sorted(f))
                sites = [s for s, _ in f]
                if len(set(sites)) != len(sites):
                    raise ValueError(f"repeated site in term {f}")
                if sites and (min(sites) < 0 or max(sites) >= self.n_spins):
                    raise ValueError(f"site index out of range in term {f}")
                if c != 0:
                    canon.append((c, f))
        object.__setattr__(self, "terms", tuple(canon))

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "OperatorSpec") -> "OperatorSpec":
        if other.n_spins != self.n_spins:
            raise ValueError("operator dimension mismatch")
        return OperatorSpec(self.n_spins, self.terms + other.terms)

    def __mul__(self, scalar: complex) -> "OperatorSpec":
        return OperatorSpec(self.n_spins, tuple((scalar * c, f) for c, f in self.terms))

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorSpec":
        return self * (-1)

    def adjoint(self) -> "OperatorSpec":
        """Formal adjoint: conjugate coefficients (x, y, z are Hermitian)."""
        return OperatorSpec(self.n_spins, tuple((np.conj(c), f) for c, f in self.terms))

    def collect(self) -> dict[tuple[Factor, ...], complex]:
        """Coefficients accumulated per distinct Pauli string."""
        acc: dict[tuple[Factor, ...], complex] = {}
        for c, f in self.terms:
            acc[f] = acc.get(f, 0.0) + c
        return {f: c for f, c in acc.items() if c != 0}

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        acc = self.collect()
        return all(abs(c.imag) <= tol * max(1.0, abs(c)) for c in acc.values())

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        terms = []
        for c, f in self.terms:
            coeff = c.real if c.imag == 0 else [c.real, c.imag]
            terms.append([coeff, [[s, a] for s, a in f]])
        return {"n_spins": self.n_spins, "terms": terms}

    @classmethod
    def from_json_dict(cls, d: dict) -> "OperatorSpec":
        terms = []
        for coeff, f in d["terms"]:
            c = complex(coeff[0], coeff[1]) if isinstance(coeff, list) else complex(coeff)
            terms.append((c, tuple((int(s), str(a)) for s, a in f)))
        return cls(int(d["n_spins"]), tuple(terms))


@dataclass
class PureState:
    """Complex amplitude vector over the computational z-basis.

    ``normalized`` is False for auxiliary vectors such as the typicality
    ket ``|R'> = sum_j w_j sigma^z_j |R>``.
    """

    n_spins: int
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.n_spins,):
            raise ValueError("amplitude array has wrong length")
        if self.normalized:
            nrm = np.linalg.norm(self.amplitudes)
            if abs(nrm - 1.0) > 1e-10:
                raise ValueError(f"state flagged normalized but |psi| = {nrm}")

    def copy(self) -> "PureState":
        return PureState(self.n_spins, self.amplitudes.copy(), self.normalized)


def basis_state(n: int, index: int) -> PureState:
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[index] = 1.0
    return PureState(n, amps)


# ---------------------------------------------------------------------------
# builders


def build_dipolar(coupling) -> OperatorSpec:
    """Secular dipolar Hamiltonian sum_{j<l} b_jl [zz - (xx + yy)/2]."""
    b = _coupling_array(coupling)
    n = b.shape[0]
    terms: list[Term] = []
    for j in range(n):
        for l in range(j + 1, n):
            if b[j, l] == 0.0:
                continue
            c = float(b[j, l])
            terms.append((c, ((j, "z"), (l, "z"))))
            terms.append((-0.5 * c, ((j, "x"), (l, "x"))))
            terms.append((-0.5 * c, ((j, "y"), (l, "y"))))
    return OperatorSpec(n, tuple(terms))


def build_dq(coupling) -> OperatorSpec:
    """Double-quantum Hamiltonian sum_{j<l} (b_jl/2)(xx - yy)."""
    b = _coupling_array(coupling)
    n = b.shape[0]
    terms: list[Term] = []
    for j in range(n):
        for l in range(j + 1, n):
            if b[j, l] == 0.0:
                continue
            c = float(b[j, l])
            terms.append((0.5 * c, ((j, "x"), (l, "x"))))
            terms.append((-0.5 * c, ((j, "y"), (l, "y"))))
    return OperatorSpec(n, tuple(terms))


def build_collective(axis: str, n: int) -> OperatorSpec:
    """Collective operator sum_j sigma^axis_j."""
    if axis not in ("x", "y", "z"):
        raise ValueError("axis must be x, y or z")
    return OperatorSpec(n, tuple((1.0 + 0j, ((j, axis),)) for j in range(n)))


def build_site(axis: str, site: int, n: int, coeff: complex = 1.0) -> OperatorSpec:
    return OperatorSpec(n, ((coeff, ((site, axis),)),))


def _coupling_array(coupling) -> np.ndarray:
    b = np.asarray(getattr(coupling, "b", coupling), dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("coupling matrix must be square")
    return b


# ---------------------------------------------------------------------------
# application


class _Plan:
    """Compiled form of a spec for the gather kernels.

    Pure-z strings fold into one diagonal vector.  Every other 1- or
    2-local string is one gather ``out[i] += f * psi[i ^ mask]`` whose
    factor is ``c_even`` or ``c_odd`` depending on the parity of bits
    (ca, cb) of ``i`` (cb may be a dummy bit that always reads 0).  Any
    Pauli pair factors this way; terms sharing (mask, ca, cb) merge.
    Terms are sorted by the high part of the mask so that gathers of
    nearby terms touch the same memory region.
    """

    __slots__ = ("diag", "diag_real", "masks", "ca", "cb", "ce", "co", "real", "ce_r", "co_r")

    def __init__(self, op: "OperatorSpec"):
        n = op.n_spins
        diag_j: list[int] = []
        diag_l: list[int] = []
        diag_c: list[complex] = []
        const = 0.0 + 0j
        gather: dict[tuple[int, int, int], list[complex]] = {}
        for c, f in op.terms:
            if len(f) > 2:
                raise ValueError("matrix-free application supports at most 2-local terms")
            if all(a == "z" for _, a in f):
                if len(f) == 0:
                    const += c
                else:
                    diag_j.append(f[0][0])
                    diag_l.append(f[-1][0])
                    diag_c.append(c)
                continue
            mask = 0
            for site, a in f:
                if a in ("x", "y"):
                    mask |= 1 << site
            tab = np.zeros(4, dtype=complex)
            for bj in (0, 1):
                for bl in (0, 1) if len(f) == 2 else (bj,):
                    bits = {f[0][0]: bj, f[-1][0]: bl}
                    val = c
                    for site, a in f:
                        bb = bits[site]
                        if a == "y":
                            val *= 1j * (2 * bb - 1)
                        elif a == "z":
                            val *= 1 - 2 * bb
                    tab[(bj << 1) | bl] += val
            j, lsite = f[0][0], f[-1][0]
            if len(f) == 1:
                key = (mask, j, _kernels._DUMMY_BIT)
                ce, co = tab[0], tab[3]
            elif tab[0] == tab[3] and tab[1] == tab[2]:
                key = (mask, j, lsite)
                ce, co = tab[0], tab[1]
            elif tab[0] == tab[1] and tab[2] == tab[3]:
                key = (mask, j, _kernels._DUMMY_BIT)
                ce, co = tab[0], tab[2]
            elif tab[0] == tab[2] and tab[1] == tab[3]:
                key = (mask, lsite, _kernels._DUMMY_BIT)
                ce, co = tab[0], tab[1]
            else:  # cannot happen for products of single-site Paulis
                raise AssertionError("non-factorable Pauli pair table")
            acc = gather.setdefault(key, [0.0 + 0j, 0.0 + 0j])
            acc[0] += ce
            acc[1] += co
        dim = 1 << n
        self.diag = _kernels.build_diag(
            dim,
            np.asarray(diag_j, dtype=np.int64),
            np.asarray(diag_l, dtype=np.int64),
            np.asarray(diag_c, dtype=np.complex128),
        )
        self.diag += const
        keys = sorted(gather, key=lambda k: (k[0] >> _kernels._BLOCK_CHUNK_BITS, k[0]))
        self.masks = np.array([k[0] for k in keys], dtype=np.int64)
        self.ca = np.array([k[1] for k in keys], dtype=np.int64)
        self.cb = np.array([k[2] for k in keys], dtype=np.int64)
        self.ce = np.array([gather[k][0] for k in keys], dtype=np.complex128)
        self.co = np.array([gather[k][1] for k in keys], dtype=np.complex128)
        self.real = bool(
            np.abs(self.ce.imag).max(initial=0.0) == 0.0
            and np.abs(self.co.imag).max(initial=0.0) == 0.0
            and np.abs(self.diag.imag).max(initial=0.0) == 0.0
        )
        self.ce_r = np.ascontiguousarray(self.ce.real)
        self.co_r = np.ascontiguousarray(self.co.real)
        self.diag_real = np.ascontiguousarray(self.diag.real)


@lru_cache(maxsize=64)
def _plan(op: OperatorSpec) -> _Plan:
    return _Plan(op)


def apply(op: OperatorSpec, state: PureState) -> PureState:
    """Return op|state> term-by-term via bit manipulation (no 4^N storage)."""
    if state.n_spins != op.n_spins:
        raise ValueError("operator/state dimension mismatch")
    out = apply_array(op, state.amplitudes)
    return PureState(op.n_spins, out, normalized=False)


def apply_array(op: OperatorSpec, amps: np.ndarray) -> np.ndarray:
    """Apply a spec to an amplitude array of shape (dim,) or (dim, ncol)."""
    if amps.shape[0] != 1 << op.n_spins:
        raise ValueError("operator/state dimension mismatch")
    p = _plan(op)
    out = np.empty_like(amps)
    if amps.ndim == 1:
        if p.real:
            _kernels.apply_one_real(amps, p.diag, p.masks, p.ca, p.cb, p.ce_r, p.co_r, out)
        else:
            _kernels.apply_one_complex(amps, p.diag, p.masks, p.ca, p.cb, p.ce, p.co, out)
    else:
        if p.real:
            _kernels.apply_block(amps, p.diag_real, p.masks, p.ca, p.cb, p.ce_r, p.co_r, out, True)
        else:
            _kernels.apply_block(amps, p.diag, p.masks, p.ca, p.cb, p.ce, p.co, out, False)
    return out


def expectation(op: OperatorSpec, state: PureState) -> complex:
    return np.vdot(state.amplitudes, apply_array(op, state.amplitudes))


# ---------------------------------------------------------------------------
# dense oracle and scalar diagnostics

DENSE_MAX_SPINS = 14


def dense_matrix(op: OperatorSpec) -> np.ndarray:
    """Dense matrix of the spec; memory-guarded to n <= 14."""
    if op.n_spins > DENSE_MAX_SPINS:
        raise ValueError(f"dense_matrix limited to {DENSE_MAX_SPINS} spins")
    dim = 1 << op.n_spins
    H = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(2, dtype=complex)
    for c, f in op.terms:
        ax = dict(f)
        m = np.array([[c]])
        for site in range(op.n_spins):
            m = np.kron(PAULI[ax[site]] if site in ax else eye, m)
        H += m
    return H


def hilbert_schmidt_norm(op: OperatorSpec) -> float:
    """Tr[H^2] / Tr[1] from term coefficients (Pauli-string orthogonality)."""
    if not op.is_hermitian():
        raise ValueError("hilbert_schmidt_norm expects a Hermitian spec")
    return float(sum(abs(c) ** 2 for c in op.collect().values()))


def spectral_bounds(op: OperatorSpec, tighten: bool = False, seed: int = 0) -> tuple[float, float]:
    """Interval enclosing the spectrum.

    The default is the rigorous envelope ``c_id -+ sum |coefficients|``.
    With ``tighten=True`` a power iteration on the traceless part sharpens
    the estimate; the result is padded by 10% and capped by the envelope,
    so it may no longer be rigorous in pathological cases (the Chebyshev
    propagator adds its own guard).
    """
    if not op.is_hermitian():
        raise ValueError("spectral_bounds expects a Hermitian spec")
    acc = op.collect()
    const = acc.pop((), 0.0 + 0j).real
    radius = float(sum(abs(c) for c in acc.values()))
    if not tighten or radius == 0.0:
        return (const - radius, const + radius)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(1 << op.n_spins) + 1j * rng.standard_normal(1 << op.n_spins)
    v /= np.linalg.norm(v)
    traceless = OperatorSpec(op.n_spins, tuple((c, f) for c, f in op.terms if f))
    est = 0.0
    for _ in range(40):
        w = apply_array(traceless, v)
        est = np.linalg.norm(w)
        if est == 0.0:
            break
        v = w / est
    r = min(radius, 1.10 * est) if est > 0 else radius
    return (const - r, const + r)
