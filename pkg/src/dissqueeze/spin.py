"""Collective spin operators for an ensemble of N spin-1/2 atoms.

Two bases are used throughout the package:

* ``"symmetric"`` -- the Dicke sector with total spin S = N/2, dimension N+1.
  Index ``m`` labels the S_z eigenvalue ``-N/2 + m``.
* ``"full"`` -- the 2**N product space. Site 1 is the leftmost kron factor
  (most significant bit); on every site index 0 is ``|->`` and 1 is ``|+>``.

All operators are returned as ``scipy.sparse.csr_matrix``.
"""

import math
from fractions import Fraction

import numpy as np
import scipy.sparse as sparse

FULL_SPACE_CAP = 12

BASES = ("symmetric", "full")
OPERATOR_KINDS = ("S+", "S-", "Sz", "Sx", "Sy", "S2")

# single-site matrices in the (|->, |+>) basis
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]])
SIGMA_MINUS = SIGMA_PLUS.T.copy()
PROJ_DOWN = np.array([[1.0, 0.0], [0.0, 0.0]])
PROJ_UP = np.array([[0.0, 0.0], [0.0, 1.0]])


class CapacityError(ValueError):
    """Requested full-space construction exceeds the configured atom cap."""


def check_ensemble(n):
    """Validate an ensemble size and return it as an int."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"ensemble size must be a positive integer, got {n!r}")
    return int(n)


def dimension(n, basis):
    n = check_ensemble(n)
    if basis == "symmetric":
        return n + 1
    if basis == "full":
        return 2**n
    raise ValueError(f"unknown basis {basis!r}; expected one of {BASES}")


def _check_cap(n, cap):
    if n > cap:
        raise CapacityError(
            f"full product space for N={n} exceeds the cap of {cap} atoms"
        )


def sz_of_index(m, n):
    """S_z eigenvalue of Dicke index m."""
    return Fraction(-n, 2) + m


def index_of_sz(sz, n):
    """Inverse of :func:`sz_of_index`; raises if sz is not in the sector."""
    m = Fraction(sz) + Fraction(n, 2)
    if m.denominator != 1 or not 0 <= m <= n:
        raise ValueError(f"S_z={sz} is not an eigenvalue in the N={n} sector")
    return int(m)


def ladder_element(S, m_z):
    """Amplitude <S, m_z+1| S+ |S, m_z> = sqrt(S(S+1) - m_z(m_z+1)).

    ``S`` and ``m_z`` may be ints, floats or Fractions (half-integers allowed).
    """
    S = Fraction(S).limit_denominator(2)
    m_z = Fraction(m_z).limit_denominator(2)
    if S < 0 or (2 * S).denominator != 1:
        raise ValueError(f"total spin must be a non-negative half-integer, got {S}")
    if abs(m_z) > S:
        raise ValueError(f"|m_z|={abs(m_z)} exceeds S={S}")
    if (S - m_z).denominator != 1:
        raise ValueError(f"S - m_z must be an integer (S={S}, m_z={m_z})")
    return math.sqrt(S * (S + 1) - m_z * (m_z + 1))


def symmetric_ladder(n):
    """Array ``a`` with S+ |m> = a[m] |m+1> in the symmetric sector, m = 0..N-1."""
    n = check_ensemble(n)
    m = np.arange(n, dtype=float)
    return np.sqrt((m + 1.0) * (n - m))


def _symmetric(kind, n):
    a = symmetric_ladder(n)
    if kind == "S+":
        return sparse.diags(a, -1, format="csr")
    if kind == "S-":
        return sparse.diags(a, 1, format="csr")
    if kind == "Sz":
        return sparse.diags(np.arange(n + 1) - n / 2, 0, format="csr")
    if kind == "S2":
        S = n / 2
        return sparse.identity(n + 1, format="csr") * (S * (S + 1))
    raise KeyError(kind)


def site_operator(op, j, n):
    """Embed a 2x2 matrix at site j (1-based) of the full product space."""
    n = check_ensemble(n)
    if not 1 <= j <= n:
        raise IndexError(f"site index {j} out of range 1..{n}")
    left = sparse.identity(2 ** (j - 1), format="csr")
    right = sparse.identity(2 ** (n - j), format="csr")
    return sparse.kron(sparse.kron(left, sparse.csr_matrix(op)), right, format="csr")


def _full(kind, n):
    if kind == "S+":
        return sum(site_operator(SIGMA_PLUS, j, n) for j in range(1, n + 1)).tocsr()
    if kind == "S-":
        return sum(site_operator(SIGMA_MINUS, j, n) for j in range(1, n + 1)).tocsr()
    if kind == "Sz":
        # popcount(index) = number of up spins
        idx = np.arange(2**n)
        ups = np.array([bin(i).count("1") for i in idx], dtype=float)
        return sparse.diags(ups - n / 2, 0, format="csr")
    raise KeyError(kind)


def build_collective(kind, n, basis="symmetric", cap=FULL_SPACE_CAP):
    """Collective operator ``kind`` for N atoms in the requested basis.

    ``kind`` is one of ``S+``, ``S-``, ``Sz``, ``Sx``, ``Sy``, ``S2``.
    In the full basis the ladder operators are sums of single-site embeddings.
    """
    n = check_ensemble(n)
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")
    if basis == "full":
        _check_cap(n, cap)
        build = _full
    elif basis == "symmetric":
        build = _symmetric
    else:
        raise ValueError(f"unknown basis {basis!r}; expected one of {BASES}")

    if kind in ("S+", "S-", "Sz"):
        return build(kind, n)
    if kind == "S2" and basis == "symmetric":
        return build(kind, n)

    sp = build("S+", n)
    sm = build("S-", n)
    if kind == "Sx":
        return ((sp + sm) * 0.5).tocsr()
    if kind == "Sy":
        return ((sp - sm) * (-0.5j)).tocsr()
    # S^2 = S-S+ + Sz^2 + Sz
    sz = build("Sz", n)
    return (sm @ sp + sz @ sz + sz).tocsr()


def jump_operator(theta, n, basis="symmetric", cap=FULL_SPACE_CAP):
    """Collective cavity jump operator J = sin(theta) S+ + cos(theta) S-.

    With tan(theta) = r the ratio of the weak to the strong control field,
    J is proportional to Omega_+ S+ + Omega_- S-.
    """
    sp = build_collective("S+", n, basis, cap)
    sm = build_collective("S-", n, basis, cap)
    return (math.sin(theta) * sp + math.cos(theta) * sm).tocsr()


def single_atom_local(theta):
    """The three single-atom Raman jump operators as 2x2 matrices.

    Returned in the order (sigma+, sigma-, pi) channel:

    * sigma+ : sin(theta) |-><-|  (decay back to the starting level |->)
    * sigma- : cos(theta) |+><+|  (decay back to the starting level |+>)
    * pi     : sin(theta) sigma+ + cos(theta) sigma-  (spin-flipping decay)
    """
    s, c = math.sin(theta), math.cos(theta)
    return [s * PROJ_DOWN, c * PROJ_UP, s * SIGMA_PLUS + c * SIGMA_MINUS]


def single_atom_jumps(theta, j, n, cap=FULL_SPACE_CAP):
    """Single-atom jump operators of atom j embedded in the full space.

    Order is (sigma+, sigma-, pi); see :func:`single_atom_local`.
    """
    n = check_ensemble(n)
    _check_cap(n, cap)
    return [site_operator(op, j, n) for op in single_atom_local(theta)]


def dicke_vectors(n, cap=FULL_SPACE_CAP):
    """Isometry (2**N, N+1) whose column m is the Dicke state with m up spins."""
    n = check_ensemble(n)
    _check_cap(n, cap)
    dim = 2**n
    ups = np.array([bin(i).count("1") for i in range(dim)])
    counts = np.array([math.comb(n, m) for m in range(n + 1)], dtype=float)
    rows = np.arange(dim)
    vals = 1.0 / np.sqrt(counts[ups])
    return sparse.csr_matrix((vals, (rows, ups)), shape=(dim, n + 1))
