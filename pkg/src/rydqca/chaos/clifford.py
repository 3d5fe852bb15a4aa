"""Pauli-string propagation through QCA steps at Clifford points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..compiler import QcaModel, model_layers
from ..errors import DomainError
from .sampling import Observable

CLIFFORD_TOL = 1e-9

# single-site products a*b = phase * c, with phase a power of i
_MUL = {
    ("X", "Y"): (1, "Z"), ("Y", "Z"): (1, "X"), ("Z", "X"): (1, "Y"),
    ("Y", "X"): (3, "Z"), ("Z", "Y"): (3, "X"), ("X", "Z"): (3, "Y"),
}


@dataclass
class PauliString:
    """``i^phase * prod_s sigma^{letters[s]}_s``."""

    letters: dict
    phase: int = 0

    @property
    def weight(self) -> int:
        return len(self.letters)

    def copy(self) -> "PauliString":
        return PauliString(dict(self.letters), self.phase)

    def commutes_with(self, other: dict) -> bool:
        anti = sum(1 for s, a in other.items() if s in self.letters and self.letters[s] != a)
        return anti % 2 == 0

    def times(self, other: dict) -> "PauliString":
        """``self * other`` for a phase-free ``other``."""
        out = self.copy()
        for s, b in other.items():
            a = out.letters.get(s)
            if a is None:
                out.letters[s] = b
            elif a == b:
                del out.letters[s]
            else:
                k, c = _MUL[(a, b)]
                out.phase = (out.phase + k) % 4
                out.letters[s] = c
        return out

    def sign(self) -> complex:
        return 1j ** self.phase


def _quarter_turns(model: QcaModel):
    """Layers as lists of (paulis, number of pi/4 quarter turns of the rotation angle)."""
    out = []
    for layer in model_layers(model):
        terms = []
        for t in layer.terms:
            angle = model.tau * t.coefficient
            k = angle / (np.pi / 4)
            if abs(k - round(k)) > CLIFFORD_TOL:
                what = "".join(sorted(set(t.paulis.values())))
                kind = "coupling" if len(t.paulis) > 1 else "field"
                raise DomainError(f"{kind} {what} with tau*value={angle:.6g} is not a multiple of pi/4; "
                                  f"the step is not Clifford")
            k = int(round(k)) % 8
            if k:
                terms.append((dict(t.paulis), k))
        out.append(terms)
    return out


def _conjugate(p: PauliString, term: dict, k: int) -> PauliString:
    """``e^{i th P} Q e^{-i th P}`` with ``th = k pi/4``."""
    if p.commutes_with(term):
        return p
    # anticommuting: Q (cos 2th - i sin 2th P)
    c, s = round(np.cos(k * np.pi / 2)), round(np.sin(k * np.pi / 2))
    if s == 0:
        out = p.copy()
        if c < 0:
            out.phase = (out.phase + 2) % 4
        return out
    out = p.times(term)
    out.phase = (out.phase + (3 if s > 0 else 1)) % 4
    return out


@dataclass(frozen=True)
class CliffordResult:
    weights: np.ndarray
    strings: list

    @property
    def g(self) -> np.ndarray:
        return 3.0 ** -self.weights


def clifford_pauli_weight(model: QcaModel, observable: Observable, t: int) -> CliffordResult:
    """Heisenberg-propagate a Pauli string for ``t`` steps; ``g = 3^-weight``.

    Returns weights for ``0..t``. Raises ``DomainError`` when any rotation angle
    is not a multiple of pi/4.
    """
    layers = _quarter_turns(model)
    observable.check(model.n_qubits)
    p = PauliString(observable.term())
    weights = [p.weight]
    strings = [p.copy()]
    for _ in range(t):
        # U^dag O U with U = L_D ... L_1: conjugate by the last layer first
        for terms in reversed(layers):
            for term, k in terms:
                p = _conjugate(p, term, k)
        weights.append(p.weight)
        strings.append(p.copy())
    return CliffordResult(np.array(weights), strings)


def light_cone_sizes(model: QcaModel, site: int, t: int) -> np.ndarray:
    """Number of sites reachable from ``site`` through the layer bonds in Heisenberg order."""
    layers = model_layers(model)
    cone = {site}
    sizes = [1]
    for _ in range(t):
        for layer in reversed(layers):
            grow = set()
            for term in layer.terms:
                support = set(term.paulis)
                if support & cone:
                    grow |= support
            cone |= grow
        sizes.append(len(cone))
    return np.array(sizes)
