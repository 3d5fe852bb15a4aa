"""Dense state-vector engine for ideal circuits on data qubits.

States are stored as ``(batch, 2**n)`` arrays in the big-endian qubit order of
:mod:`rydqca.paulis`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import paulis
from .errors import ConfigurationError, ResourceError

MEMORY_BUDGET_BYTES = 2 * 1024 ** 3


def check_dense(n: int, cap: int, what: str = "dense unitary") -> None:
    if n > cap:
        raise ResourceError(f"{what} on {n} qubits exceeds the cap of {cap}", size=1 << n)
    if 16 * 4 ** n > MEMORY_BUDGET_BYTES:
        raise ResourceError(f"{what} on {n} qubits needs {16 * 4 ** n} bytes, above the memory budget",
                            size=1 << n)


def apply_single(states: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    """Apply a 2x2 unitary to qubit ``q`` of a batch of states."""
    b = states.shape[0]
    v = states.reshape(b, 1 << q, 2, 1 << (n - q - 1))
    return np.einsum("ij,bajc->baic", u, v).reshape(b, -1)


def apply_uniform_single(states: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    for q in qubits:
        states = apply_single(states, u, q, n)
    return states


def z_eigenvalues(n: int) -> np.ndarray:
    """``zs[q, b]`` = eigenvalue of sigma^Z on qubit q in basis state b (-1 for g)."""
    return 2.0 * paulis.site_bits(n) - 1.0


# ----------------------------------------------------------------------------
# gate circuits
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SingleQubit:
    unitary: np.ndarray
    qubit: int

    def to_dict(self) -> dict:
        return {"gate": "single", "qubit": self.qubit,
                "unitary": [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(self.unitary)]}


@dataclass(frozen=True)
class CZPhi:
    """Phase ``phi`` on ``|gg>`` of the two qubits."""

    phi: float
    pair: tuple[int, int]

    def to_dict(self) -> dict:
        return {"gate": "cz", "phi": self.phi, "pair": list(self.pair)}


def cz_matrix(phi: float) -> np.ndarray:
    return np.diag([np.exp(1j * phi), 1, 1, 1])


@dataclass
class GateCircuit:
    n_qubits: int
    layers: list = field(default_factory=list)
    adjacency: frozenset | None = None

    def __post_init__(self):
        for layer in self.layers:
            self._check(layer)

    def _check(self, layer) -> None:
        used: set[int] = set()
        for g in layer:
            qs = (g.qubit,) if isinstance(g, SingleQubit) else tuple(g.pair)
            for q in qs:
                if not 0 <= q < self.n_qubits:
                    raise ConfigurationError(f"gate acts on unknown qubit {q}")
            if used & set(qs):
                raise ConfigurationError("gates within a layer must act on disjoint qubits")
            used |= set(qs)
            if isinstance(g, CZPhi) and self.adjacency is not None and frozenset(g.pair) not in self.adjacency:
                raise ConfigurationError(f"CZ on non-adjacent pair {g.pair}")

    def append(self, layer) -> None:
        layer = list(layer)
        self._check(layer)
        self.layers.append(layer)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def apply(self, states: np.ndarray) -> np.ndarray:
        n = self.n_qubits
        zs = None
        out = np.asarray(states, dtype=complex)
        for layer in self.layers:
            for g in layer:
                if isinstance(g, SingleQubit):
                    out = apply_single(out, np.asarray(g.unitary), g.qubit, n)
                else:
                    if zs is None:
                        zs = z_eigenvalues(n)
                    i, j = g.pair
                    both_g = (zs[i] < 0) & (zs[j] < 0)
                    out = out * np.where(both_g, np.exp(1j * g.phi), 1.0)[None, :]
        return out

    def unitary(self) -> np.ndarray:
        check_dense(self.n_qubits, 14)
        dim = 1 << self.n_qubits
        return self.apply(np.eye(dim, dtype=complex)).T

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "layers": [[g.to_dict() for g in layer] for layer in self.layers]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# ----------------------------------------------------------------------------
# Pauli-rotation layers
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    paulis: Mapping[int, str]

    def letters(self) -> set[str]:
        return set(self.paulis.values())


@dataclass(frozen=True)
class Layer:
    """Hamiltonian of mutually commuting Pauli terms, applied as ``exp(-i tau H)``."""

    label: str
    terms: tuple

    def matrix(self, n: int) -> np.ndarray:
        check_dense(n, 14, "layer Hamiltonian")
        H = np.zeros((1 << n, 1 << n), dtype=complex)
        for t in self.terms:
            target, factor = paulis.pauli_action(n, t.paulis)
            H[target, np.arange(1 << n)] += t.coefficient * factor
        return H

    def uniform_letter(self) -> str | None:
        letters = set()
        for t in self.terms:
            letters |= t.letters()
        return letters.pop() if len(letters) == 1 else None


def apply_rotation(states: np.ndarray, n: int, term: PauliTerm, angle: float) -> np.ndarray:
    """Apply ``exp(-i angle c P)`` to a batch using the Pauli permutation form."""
    target, factor = paulis.pauli_action(n, term.paulis)
    theta = angle * term.coefficient
    pstates = np.zeros_like(states)
    pstates[:, target] = states * factor[None, :]
    return np.cos(theta) * states - 1j * np.sin(theta) * pstates


def rotation_product_unitary(n: int, layers: Sequence[Layer], tau: float) -> np.ndarray:
    """``prod_layers prod_terms exp(-i tau c P)`` built by exact Pauli rotations."""
    check_dense(n, 14)
    dim = 1 << n
    cols = np.eye(dim, dtype=complex)
    for layer in layers:
        for t in layer.terms:
            cols = apply_rotation(cols, n, t, tau)
    return cols.T


class FastStep:
    """Apply ``exp(-i tau H_D) ... exp(-i tau H_1)`` to batches of states.

    Each layer must use a single Pauli letter; it is rotated to the Z basis,
    applied as a phase vector and rotated back.
    """

    def __init__(self, n: int, layers: Sequence[Layer], tau: float):
        self.n = n
        if n > 24:
            raise ResourceError(f"state vectors on {n} qubits exceed the engine cap", size=1 << n)
        zs = z_eigenvalues(n)
        self.stages = []
        for layer in layers:
            letter = layer.uniform_letter()
            if letter is None:
                raise ConfigurationError(f"layer {layer.label!r} mixes Pauli letters")
            energy = np.zeros(1 << n)
            for t in layer.terms:
                e = np.full(1 << n, t.coefficient)
                for q in t.paulis:
                    e = e * zs[q]
                energy += e
            R = paulis.basis_change(letter)
            self.stages.append((R, np.exp(-1j * tau * energy)))

    def apply(self, states: np.ndarray) -> np.ndarray:
        n = self.n
        out = states
        allq = range(n)
        for R, phase in self.stages:
            # sigma^a = R^dag Z R, so exp(-i t f(sigma^a)) = R^dag exp(-i t f(Z)) R
            rot = not np.allclose(R, np.eye(2))
            if rot:
                out = apply_uniform_single(out, R, allq, n)
            out = out * phase[None, :]
            if rot:
                out = apply_uniform_single(out, R.conj().T, allq, n)
        return out

    def unitary(self) -> np.ndarray:
        check_dense(self.n, 14)
        return self.apply(np.eye(1 << self.n, dtype=complex)).T
