"""Exact oracles for ``g^O(t)`` on small systems."""

from __future__ import annotations

import string
from dataclasses import dataclass
from math import comb

import numpy as np

from .. import paulis
from ..compiler import QcaModel, ideal_step_unitary
from ..errors import ConfigurationError, NumericError, ResourceError
from .sampling import Observable, product_state
from .tetra import tetra_moment_direct

SIZE_QUBIT_CAP = 10
NORM_TOL = 1e-10

# rows: I, X, Y, Z; entry [a, i, j] = (sigma^a)_{ji} / 2 so that c_a = sum_ij M_ij (sigma^a)_ji / 2
_TO_PAULI = np.array([p.T / 2 for p in (paulis.I2, paulis.SX, paulis.SY, paulis.SZ)])


@dataclass(frozen=True)
class SizeDistribution:
    p: np.ndarray

    def __post_init__(self):
        if np.any(self.p < -1e-12) or abs(self.p.sum() - 1) > NORM_TOL:
            raise NumericError(f"size distribution is not normalized: sum={self.p.sum()}")

    @property
    def g(self) -> float:
        return g_from_sizes(self.p)

    def mean_size(self) -> float:
        return float(np.arange(len(self.p)) @ self.p)


def g_from_sizes(p) -> float:
    p = np.asarray(p, dtype=float)
    return float(p @ (3.0 ** -np.arange(len(p))))


def random_operator_sizes(n: int) -> np.ndarray:
    """Size distribution of a traceless random operator on ``n`` qubits."""
    p = np.array([comb(n, l) * 0.75 ** l * 0.25 ** (n - l) for l in range(n + 1)])
    p[0] = 0.0
    return p / (1 - 4.0 ** -n)


def pauli_coefficients(op: np.ndarray, n: int) -> np.ndarray:
    """Coefficients ``c_P = Tr[P op] / 2^n`` as a ``(4,)*n`` tensor (0=I, 1=X, 2=Y, 3=Z)."""
    t = op.reshape((2,) * (2 * n))
    # pair row and column index of each qubit, then contract with the 2x2 Pauli duals
    order = [k for q in range(n) for k in (q, n + q)]
    t = t.transpose(order).reshape((2, 2) * n)
    for q in range(n):
        t = np.tensordot(_TO_PAULI, t, axes=([1, 2], [q, q + 1]))
        t = np.moveaxis(t, 0, q)
    return t.reshape((4,) * n)


def _weights(n: int) -> np.ndarray:
    w = np.zeros((4,) * n, dtype=int)
    for q in range(n):
        shape = [1] * n
        shape[q] = 4
        w = w + (np.arange(4) > 0).reshape(shape)
    return w


def heisenberg_operator(model: QcaModel, observable: Observable, t: int) -> np.ndarray:
    n = model.n_qubits
    if n > SIZE_QUBIT_CAP:
        raise ResourceError(f"size distribution is capped at {SIZE_QUBIT_CAP} qubits, got {n}", size=4 ** n)
    if t < 0:
        raise ConfigurationError("t must be non-negative")
    O = observable.matrix(n)
    if abs(np.trace(O @ O).real - 2 ** n) > NORM_TOL * 2 ** n:
        raise ConfigurationError("observable must satisfy Tr[O^2] = 2^N")
    Ut = np.linalg.matrix_power(ideal_step_unitary(model), t)
    return Ut.conj().T @ O @ Ut


def size_distribution_of(op: np.ndarray, n: int) -> SizeDistribution:
    c = pauli_coefficients(op, n)
    p = np.bincount(_weights(n).ravel(), weights=(np.abs(c) ** 2).ravel(), minlength=n + 1)
    return SizeDistribution(p)


def exact_size_distribution(model: QcaModel, observable: Observable, t: int) -> SizeDistribution:
    """Operator size distribution of ``O(t) = U^{-t} O U^t``."""
    return size_distribution_of(heisenberg_operator(model, observable, t), model.n_qubits)


def exact_g_series(model: QcaModel, observable: Observable, t_max: int) -> np.ndarray:
    """``g^O(t)`` for ``t = 0..t_max`` from the size distribution."""
    n = model.n_qubits
    U = ideal_step_unitary(model)
    O = heisenberg_operator(model, observable, 0)
    out = np.empty(t_max + 1)
    for t in range(t_max + 1):
        if t:
            O = U.conj().T @ O @ U
        out[t] = size_distribution_of(O, n).g
    return out


def g_moment_contraction(op: np.ndarray, n: int) -> float:
    """``Tr[(O (x) O) N_2^{(x)N}]``, the tetrahedral average of ``<psi|O|psi>^2``."""
    if n > 6:
        raise ResourceError("moment contraction is limited to 6 qubits", size=16 ** n)
    N2 = tetra_moment_direct(2).reshape(2, 2, 2, 2)  # [b, b', a, a'] = <b b'| N2 |a a'>
    letters = iter(string.ascii_letters)
    a = [next(letters) for _ in range(n)]
    b = [next(letters) for _ in range(n)]
    a2 = [next(letters) for _ in range(n)]
    b2 = [next(letters) for _ in range(n)]
    T = op.reshape((2,) * (2 * n))
    subs = ["".join(a + b), "".join(a2 + b2)] + [b[i] + b2[i] + a[i] + a2[i] for i in range(n)]
    val = np.einsum(",".join(subs) + "->", T, T, *([N2] * n), optimize="greedy")
    return float(np.real(val))


def g_enumeration(op: np.ndarray, n: int) -> float:
    """Average of ``<psi|O|psi>^2`` over all ``4^n`` tetrahedral product states."""
    if n > 8:
        raise ResourceError("enumeration is limited to 8 qubits", size=4 ** n)
    total = 0.0
    for idx in range(4 ** n):
        colors = [(idx >> (2 * q)) % 4 + 1 for q in range(n)]
        psi = product_state(colors)
        total += np.real(np.vdot(psi, op @ psi)) ** 2
    return total / 4 ** n
