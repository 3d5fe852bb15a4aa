"""The four-state tetrahedral 2-design and its moment operators."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .. import paulis
from ..errors import ConfigurationError

THETA = float(np.arccos(1 / np.sqrt(3)))
PHI = np.pi / 4


def tetra_state(k: int) -> np.ndarray:
    """Amplitudes ``(<g|mu_k>, <r|mu_k>)`` for ``k`` in 1..4."""
    c, s = np.cos(THETA / 2), np.sin(THETA / 2)
    e = np.exp(1j * PHI)
    table = {
        1: (c, e * s),
        2: (c, -e * s),
        3: (s, np.conj(e) * c),
        4: (s, -np.conj(e) * c),
    }
    if k not in table:
        raise ConfigurationError(f"tetrahedral index must be 1..4, got {k}")
    return np.array(table[k], dtype=complex)


TETRA_STATES = np.array([tetra_state(k) for k in range(1, 5)])


def bloch_vector(psi: np.ndarray) -> np.ndarray:
    """Bloch vector in the project Pauli convention."""
    return np.array([np.real(np.vdot(psi, p @ psi)) for p in (paulis.SX, paulis.SY, paulis.SZ)])


def preparation_unitary(k: int) -> np.ndarray:
    """``U_k = diag(1, e^{i beta}) R_y(2 atan2(b, a))`` with ``U_k|g> = |mu_k>``."""
    a, z = tetra_state(k)
    b = abs(z)
    beta = float(np.angle(z))
    ang = 2 * np.arctan2(b, abs(a))
    ry = np.array([[np.cos(ang / 2), -np.sin(ang / 2)], [np.sin(ang / 2), np.cos(ang / 2)]], dtype=complex)
    return np.diag([1.0, np.exp(1j * beta)]) @ ry


def tetra_moment_direct(k: int) -> np.ndarray:
    """``(1/4) sum_i rho_i^{(x)k}``."""
    if not 1 <= k <= 8:
        raise ConfigurationError("direct moments are computed for 1 <= k <= 8")
    out = 0
    for psi in TETRA_STATES:
        rho = np.outer(psi, psi.conj())
        out = out + reduce(np.kron, [rho] * k)
    return out / 4


def _string(k: int, assignment: dict) -> np.ndarray:
    return paulis.pauli_string(k, assignment)


def tetra_moment_closed_form(k: int) -> dict[int, np.ndarray]:
    """Closed-form pieces ``{m: N_k^(m)}`` of the k-th moment for k <= 4."""
    if not 1 <= k <= 4:
        raise ConfigurationError("closed forms exist for 1 <= k <= 4")
    dim = 2 ** k
    xyz = ("X", "Y", "Z")
    parts = {0: np.eye(dim, dtype=complex) / dim}
    if k >= 2:
        two = sum(_string(k, {i: a, j: a}) for a in xyz for i, j in itertools.combinations(range(k), 2))
        parts[2] = two / (3 * dim)
    if k >= 3:
        three = sum(_string(k, {i: p[0], j: p[1], l: p[2]})
                    for i, j, l in itertools.combinations(range(k), 3)
                    for p in itertools.permutations(xyz))
        parts[3] = three / (dim * np.sqrt(27))
    if k == 4:
        four = sum(_string(4, dict(enumerate(a * 4))) for a in xyz)
        # each unordered pair {a, b} contributes the 6 distinct arrangements of (a, a, b, b)
        for a, b in itertools.combinations(xyz, 2):
            for cs in set(itertools.permutations((a, a, b, b))):
                four = four + _string(4, dict(enumerate(cs)))
        parts[4] = four / 144
    return parts


@dataclass(frozen=True)
class MomentComparison:
    k: int
    direct: np.ndarray
    closed_form: np.ndarray | None
    haar: np.ndarray

    @property
    def closed_form_error(self) -> float | None:
        if self.closed_form is None:
            return None
        return float(np.abs(self.direct - self.closed_form).max())

    @property
    def haar_error(self) -> float:
        return float(np.abs(self.direct - self.haar).max())


def haar_moment(k: int) -> np.ndarray:
    """``E_Haar[|psi><psi|^{(x)k}] = P_sym / (k + 1)`` for a single qubit."""
    dim = 2 ** k
    psym = np.zeros((dim, dim), dtype=complex)
    perms = list(itertools.permutations(range(k)))
    idx = np.arange(dim)
    bits = np.array([(idx >> (k - 1 - q)) & 1 for q in range(k)])
    for p in perms:
        permuted = np.zeros(dim, dtype=int)
        for q in range(k):
            permuted += bits[p[q]] << (k - 1 - q)
        psym[permuted, idx] += 1
    return psym / len(perms) / (k + 1)


def tetra_moments(k: int) -> MomentComparison:
    direct = tetra_moment_direct(k)
    closed = sum(tetra_moment_closed_form(k).values()) if k <= 4 else None
    return MomentComparison(k, direct, closed, haar_moment(k))
