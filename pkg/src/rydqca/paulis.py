"""Single-atom Pauli algebra and dense Pauli-string helpers.

Basis ordering is fixed project-wide: index 0 is ``|g>`` and index 1 is
``|r>``.  With ``sigma^Z = |r><r| - |g><g|`` and ``sigma^Y = i sigma^X sigma^Z``
the three matrices below form a right-handed Pauli algebra, so every
commutation identity of the textbook matrices carries over unchanged.

Multi-qubit vectors use big-endian order: site 0 is the most significant bit.
"""

from __future__ import annotations

from functools import reduce
from typing import Mapping

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[-1, 0], [0, 1]], dtype=complex)
SY = 1j * SX @ SZ

PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


def rotation(axis: str, angle: float) -> np.ndarray:
    """Return ``exp(-i angle sigma^axis)``."""
    return np.cos(angle) * I2 - 1j * np.sin(angle) * PAULI[axis]


def basis_change(alpha: str) -> np.ndarray:
    """Unitary R with ``R^dag sigma^Z R = sigma^alpha``."""
    if alpha == "Z":
        return I2.copy()
    if alpha == "X":
        return rotation("Y", -np.pi / 4)
    if alpha == "Y":
        return rotation("X", np.pi / 4)
    raise ValueError(f"unknown Pauli axis {alpha!r}")


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def pauli_string(n: int, term: Mapping[int, str]) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix of a Pauli string given as ``{site: letter}``."""
    return kron_all([PAULI[term.get(q, "I")] for q in range(n)])


def site_bits(n: int) -> np.ndarray:
    """Array ``bits[q, b]`` with the occupation of site q in basis index b."""
    idx = np.arange(1 << n)
    return np.array([(idx >> (n - 1 - q)) & 1 for q in range(n)], dtype=np.int8)


def pauli_action(n: int, term: Mapping[int, str]) -> tuple[np.ndarray, np.ndarray]:
    """Permutation/phase form of a Pauli string.

    Returns ``(target, factor)`` such that ``(P psi)[target[b]] = factor[b] psi[b]``.
    """
    idx = np.arange(1 << n)
    factor = np.ones(1 << n, dtype=complex)
    flip = 0
    for q, letter in term.items():
        bit = (idx >> (n - 1 - q)) & 1
        if letter == "Z":
            factor *= 2 * bit - 1
        elif letter == "Y":
            factor *= 1j * (2 * bit - 1)
            flip |= 1 << (n - 1 - q)
        elif letter == "X":
            flip |= 1 << (n - 1 - q)
        elif letter != "I":
            raise ValueError(f"unknown Pauli letter {letter!r}")
    return idx ^ flip, factor


def su2_axis_angle(u: np.ndarray) -> tuple[float, np.ndarray]:
    """Decompose a 2x2 unitary as ``e^{i g} exp(-i theta n.sigma)``.

    The representative with ``theta`` in ``[0, pi/2]`` is returned, together with
    the unit axis ``n`` expressed in the (X, Y, Z) components above.
    """
    v = u / np.sqrt(np.linalg.det(u))
    if np.trace(v).real < 0:
        v = -v
    c = np.clip(np.trace(v).real / 2, -1.0, 1.0)
    theta = float(np.arccos(c))
    if np.sin(theta) < 1e-14:
        return 0.0, np.array([0.0, 0.0, 1.0])
    n = np.array([np.real(1j * np.trace(p @ v)) / (2 * np.sin(theta)) for p in (SX, SY, SZ)])
    return theta, n / np.linalg.norm(n)
