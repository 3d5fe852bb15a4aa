"""Freeze-mask preparation of tetrahedral product states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..compiler import synthesize_single_qubit
from ..errors import ConfigurationError, NumericError
from ..lattice import AtomArray, LatticeSpec, build_array
from ..pxp import (PulseProgram, StateVector, UnitarySegment, enumerate_basis, project_data_states,
                   run_program)
from .sampling import Coloring, product_state
from .tetra import preparation_unitary

PREP_FIDELITY = 1 - 1e-10


def step_unitaries() -> list[np.ndarray]:
    """``V_k = U_{k+1}^dag U_k`` for k=1..3 and ``V_4 = U_4``."""
    U = [preparation_unitary(k) for k in range(1, 5)]
    return [U[k + 1].conj().T @ U[k] for k in range(3)] + [U[3]]


def prep_program(coloring: Coloring, array: AtomArray, physical: bool = True, rabi: float = 1.0) -> PulseProgram:
    """Four stages; stage k drives the data atoms with color <= k and freezes the rest."""
    data = array.data_ids
    colors = np.asarray(coloring.colors)
    if len(colors) != len(data):
        raise ConfigurationError(f"coloring has {len(colors)} sites but the array has {len(data)} data atoms")
    prog = PulseProgram(array, [])
    for k, V in enumerate(step_unitaries(), start=1):
        active = [a for a, c in zip(data, colors) if c <= k]
        frozen = frozenset(a for a, c in zip(data, colors) if c > k)
        if not active:
            continue
        if physical:
            for seg in synthesize_single_qubit(V, rabi, frozen, label=f"V{k}"):
                prog.append(seg)
        else:
            prog.append(UnitarySegment({a: V for a in active}, label=f"V{k}"))
    return prog


@dataclass(frozen=True)
class PrepResult:
    state: np.ndarray
    target: np.ndarray
    fidelity: float
    program: PulseProgram


def simulate_prep_protocol(coloring: Coloring, array: AtomArray | None = None, physical: bool = True,
                           rabi: float = 1.0, basis=None) -> PrepResult:
    """Run the freeze-mask program from all-ground and compare with the product state.

    The default array is an open dual-species chain with one ancilla per bond;
    the ancillas stay idle.
    """
    n = len(coloring.colors)
    if array is None:
        array = build_array(LatticeSpec.chain(n), 1)
    basis = enumerate_basis(array) if basis is None else basis
    prog = prep_program(coloring, array, physical, rabi)
    state = StateVector.from_configuration(basis, 0)
    data = array.data_ids
    colors = np.asarray(coloring.colors)
    amp = state.amplitudes
    for seg in prog.segments:
        amp = run_program(StateVector(basis, amp), PulseProgram(array, [seg])).amplitudes
        for a, c in zip(data, colors):
            if seg.label.startswith("V") and c > int(seg.label[1]):
                p = float(np.sum(np.abs(amp[basis.occupation(a) == 1]) ** 2))
                if p > 1e-12:
                    raise NumericError(f"frozen atom {a} acquired Rydberg population {p:.3g}")
    out = project_data_states(basis, amp[:, None])[:, 0]
    target = product_state(colors)
    fidelity = float(abs(np.vdot(target, out)) ** 2)
    if fidelity < PREP_FIDELITY:
        raise NumericError(f"preparation fidelity {fidelity} below {PREP_FIDELITY}")
    return PrepResult(out, target, fidelity, prog)
