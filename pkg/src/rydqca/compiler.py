"""Compile quantum cellular automata into dual-species pulse programs and verify them.

Every supported update rule is a product of layers ``exp(-i tau H_j)``, each
made of commuting one- and two-body Pauli terms.  A layer of ``sigma^a sigma^a``
couplings is realised by rotating the data qubits to the Z basis, firing the
gadgets (mediated ``CZ(phi)`` gates, ``phi = -4 tau J``) and rotating back.
The single-qubit remainders of the rewriting::

    CZ(phi) = e^{-i phi/4} [e^{-i phi Z/4} (x) e^{-i phi Z/4}] e^{i phi ZZ/4}

are absorbed into the data pulses with the actual per-site degree.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm, logm

from . import paulis
from .circuit import (CZPhi, GateCircuit, Layer, PauliTerm, SingleQubit, check_dense,
                      rotation_product_unitary)
from .control import (GrapeProblem, GrapeResult, cz_pulse_params, grape_best_of,
                      PHASE_CLAMP)
from .errors import CompilationError, ConfigurationError, LeakageError, ResourceError
from .lattice import AtomArray, LatticeGraph, LatticeSpec, Species, build_array, lattice_graph
from .pxp import (PulseProgram, PulseSegment, Linear, UnitarySegment, embed_data_states,
                  enumerate_basis, project_data_states, run_program_batch)

log = logging.getLogger(__name__)

IDEAL_QUBIT_CAP = 14
FLOQUET_QUBIT_CAP = 10
LEAKAGE_TOL = 1e-6
GRAPE_T_SCHEDULE = (8 * np.pi, 10 * np.pi, 14 * np.pi, 20 * np.pi)
# leakage of a gadget is bounded only by 2 sqrt(Err), so compiled pulses are
# polished far below the feasibility threshold
GRAPE_POLISH_ERROR = 1e-18


# ----------------------------------------------------------------------------
# models
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class KickedIsing:
    J: float
    h: float
    b: float


@dataclass(frozen=True)
class InhomKickedIsing:
    J_x: float
    J_y: float
    h: float
    b: float


@dataclass(frozen=True)
class KitaevFloquet:
    J_X: float
    J_Y: float
    J_Z: float
    h_X: float = 0.0
    h_Y: float = 0.0
    h_Z: float = 0.0


@dataclass(frozen=True)
class TwoLocal:
    c_X: float
    c_Y: float
    c_Z: float
    h_X: float = 0.0
    h_Y: float = 0.0
    h_Z: float = 0.0


VARIANTS = {"KickedIsing": KickedIsing, "InhomKickedIsing": InhomKickedIsing,
            "KitaevFloquet": KitaevFloquet, "TwoLocal": TwoLocal}


@dataclass(frozen=True)
class QcaModel:
    variant: KickedIsing | InhomKickedIsing | KitaevFloquet | TwoLocal
    tau: float
    lattice: LatticeSpec

    def __post_init__(self):
        v = self.variant
        if not isinstance(v, tuple(VARIANTS.values())):
            raise ConfigurationError(f"unknown model variant {type(v).__name__}")
        for name, val in vars(v).items():
            if not np.isfinite(val):
                raise ConfigurationError(f"coupling {name} must be finite")
        if not np.isfinite(self.tau):
            raise ConfigurationError("tau must be finite")
        if isinstance(v, InhomKickedIsing) and self.lattice.family != "Square":
            raise ConfigurationError("InhomKickedIsing requires a Square lattice")
        if isinstance(v, KitaevFloquet) and self.lattice.family != "Honeycomb":
            raise ConfigurationError("KitaevFloquet requires a Honeycomb lattice")

    @property
    def name(self) -> str:
        return type(self.variant).__name__

    @property
    def graph(self) -> LatticeGraph:
        return lattice_graph(self.lattice)

    @property
    def n_qubits(self) -> int:
        return self.graph.n_sites

    def with_tau(self, tau: float) -> "QcaModel":
        return QcaModel(self.variant, tau, self.lattice)

    def to_dict(self) -> dict:
        return {"variant": self.name, "couplings": dict(vars(self.variant)), "tau": self.tau,
                "lattice": self.lattice.to_dict()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "QcaModel":
        if d["variant"] not in VARIANTS:
            raise ConfigurationError(f"unknown model variant {d['variant']!r}")
        try:
            variant = VARIANTS[d["variant"]](**{k: float(v) for k, v in d["couplings"].items()})
        except TypeError as exc:
            raise ConfigurationError(f"bad couplings for {d['variant']}: {exc}") from None
        return cls(variant, float(d["tau"]), LatticeSpec.from_dict(d["lattice"]))


def gadget_sizes(model: QcaModel) -> dict[str, int]:
    v = model.variant
    classes = model.lattice.bond_classes
    if isinstance(v, InhomKickedIsing):
        return {"x": 1, "y": 2}
    if isinstance(v, KitaevFloquet):
        return {"Z": 1, "Y": 2, "X": 3}
    return {c: 1 for c in classes}


def _zz_terms(graph: LatticeGraph, letter: str, coupling_of) -> list[PauliTerm]:
    out = []
    for b in graph.bonds:
        c = coupling_of(b.bond_class)
        if c != 0:
            i, j = b.sites
            out.append(PauliTerm(c, {i: letter, j: letter}))
    return out


def _field_terms(n: int, letter: str, h: float) -> list[PauliTerm]:
    return [PauliTerm(h, {i: letter}) for i in range(n)] if h != 0 else []


def model_layers(model: QcaModel) -> list[Layer]:
    """Layer Hamiltonians ``H_1, H_2, ...`` in the order they are applied."""
    v = model.variant
    g = model.graph
    n = g.n_sites
    if isinstance(v, KickedIsing):
        return [Layer("I", tuple(_zz_terms(g, "Z", lambda c: v.J) + _field_terms(n, "Z", v.h))),
                Layer("K", tuple(_field_terms(n, "X", v.b)))]
    if isinstance(v, InhomKickedIsing):
        J = {"x": v.J_x, "y": v.J_y}
        return [Layer("I", tuple(_zz_terms(g, "Z", J.get) + _field_terms(n, "Z", v.h))),
                Layer("K", tuple(_field_terms(n, "X", v.b)))]
    if isinstance(v, KitaevFloquet):
        layers = []
        for a in ("Z", "Y", "X"):
            J, h = getattr(v, f"J_{a}"), getattr(v, f"h_{a}")
            layers.append(Layer(a * 2, tuple(_zz_terms(g, a, lambda c: J if c == a else 0.0)
                                             + _field_terms(n, a, h))))
        return layers
    layers = []
    for a in ("X", "Y", "Z"):
        c, h = getattr(v, f"c_{a}"), getattr(v, f"h_{a}")
        layers.append(Layer(a, tuple(_zz_terms(g, a, lambda _: c) + _field_terms(n, a, h))))
    return layers


def ideal_step_unitary(model: QcaModel) -> np.ndarray:
    """Dense one-step unitary built from exact Pauli rotations."""
    n = model.n_qubits
    check_dense(n, IDEAL_QUBIT_CAP)
    return rotation_product_unitary(n, model_layers(model), model.tau)


# ----------------------------------------------------------------------------
# step plans
# ----------------------------------------------------------------------------

@dataclass
class DataStage:
    unitaries: dict  # site -> 2x2

    def is_identity(self, tol: float = 1e-14) -> bool:
        return all(np.allclose(u, np.eye(2), atol=tol, rtol=0) for u in self.unitaries.values())


@dataclass
class GadgetStage:
    phases: dict  # bond class -> target phase (mod 2 pi)


def _rz(angle: float) -> np.ndarray:
    return paulis.rotation("Z", angle)


def _degrees(graph: LatticeGraph, uniform: bool) -> dict[str | None, np.ndarray]:
    out: dict = {None: graph.degree()}
    for c in graph.spec.bond_classes:
        out[c] = graph.degree(c)
    if uniform:
        # bulk coordination of the infinite lattice
        bulk = {"Chain": {None: 2, "x": 2}, "Square": {None: 4, "x": 2, "y": 2},
                "Honeycomb": {None: 3, "X": 1, "Y": 1, "Z": 1}}[graph.spec.family]
        out = {k: np.full(graph.n_sites, bulk[k]) for k in out}
    return out


def step_plan(model: QcaModel, uniform_degree: bool = False) -> list:
    """Ordered data/gadget stages for one application of the update rule."""
    v = model.variant
    tau = model.tau
    g = model.graph
    n = g.n_sites
    deg = _degrees(g, uniform_degree)
    if isinstance(v, (KickedIsing, InhomKickedIsing)):
        if isinstance(v, KickedIsing):
            J = {c: v.J for c in model.lattice.bond_classes}
        else:
            J = {"x": v.J_x, "y": v.J_y}
        alpha = tau * (v.h + sum(J[c] * deg[c] for c in J))
        kick = paulis.rotation("X", v.b * tau)
        return [GadgetStage({c: -4 * tau * J[c] for c in J}),
                DataStage({i: kick @ _rz(alpha[i]) for i in range(n)})]
    plan = []
    if isinstance(v, KitaevFloquet):
        for a in ("Z", "Y", "X"):
            J, h = getattr(v, f"J_{a}"), getattr(v, f"h_{a}")
            R = paulis.basis_change(a)
            alpha = tau * (h + J * deg[a])
            plan += [DataStage({i: _rz(alpha[i]) @ R for i in range(n)}),
                     GadgetStage({a: -4 * tau * J}),
                     DataStage({i: R.conj().T for i in range(n)})]
        return plan
    for a in ("X", "Y", "Z"):
        c, h = getattr(v, f"c_{a}"), getattr(v, f"h_{a}")
        R = paulis.basis_change(a)
        alpha = tau * (h + c * deg[None])
        plan += [DataStage({i: _rz(alpha[i]) @ R for i in range(n)}),
                 GadgetStage({k: -4 * tau * c for k in model.lattice.bond_classes}),
                 DataStage({i: R.conj().T for i in range(n)})]
    return plan


def merge_plan(plan: list) -> list:
    """Fuse adjacent data stages and drop data stages equal to the identity."""
    out: list = []
    for st in plan:
        if isinstance(st, DataStage) and out and isinstance(out[-1], DataStage):
            prev = out.pop()
            st = DataStage({i: st.unitaries[i] @ prev.unitaries[i] for i in st.unitaries})
        out.append(st)
    return [st for st in out if not (isinstance(st, DataStage) and st.is_identity())]


def ideal_circuit(model: QcaModel, steps: int = 1, uniform_degree: bool = False) -> GateCircuit:
    """Gate-level circuit (single-qubit layers and CZ(phi) layers) of the compiled plan."""
    g = model.graph
    adjacency = frozenset(frozenset(b.sites) for b in g.bonds)
    circ = GateCircuit(g.n_sites, adjacency=adjacency)
    for st in merge_plan(step_plan(model, uniform_degree) * steps):
        if isinstance(st, DataStage):
            circ.append([SingleQubit(u, i) for i, u in sorted(st.unitaries.items())])
        else:
            for cls_, phi in st.phases.items():
                bonds = [b for b in g.bonds if b.bond_class == cls_]
                # bonds sharing a site go to separate layers (CZs commute, order is free)
                layers: list[list] = []
                for b in bonds:
                    for layer in layers:
                        if not any(set(b.sites) & set(x.pair) for x in layer):
                            layer.append(CZPhi(phi, b.sites))
                            break
                    else:
                        layers.append([CZPhi(phi, b.sites)])
                for layer in layers:
                    circ.append(layer)
    return circ


# ----------------------------------------------------------------------------
# pulse synthesis
# ----------------------------------------------------------------------------

def synthesize_single_qubit(u: np.ndarray, rabi: float = 1.0, frozen=(), label: str = "") -> list[PulseSegment]:
    """Detuned constant-phase data pulses realising ``u`` up to a global phase.

    ``exp(-i H t)`` with phase ``xi`` and detuning ``delta`` equals, up to a
    phase, ``exp(-i (t/2) (Omega cos xi, Omega sin xi, delta) . sigma)``.  Pure Z
    rotations use two resonant pi pulses with shifted phases.
    """
    theta, axis = paulis.su2_axis_angle(np.asarray(u))
    if theta < 1e-12:
        return []
    nx, ny, nz = axis
    perp = np.hypot(nx, ny)
    frozen = frozenset(frozen)
    if perp > 1e-9:
        W = rabi / perp
        xi = float(np.arctan2(ny, nx))
        return [PulseSegment(Species.DATA, rabi, Linear(0.0, xi), 2 * theta / W, W * nz, frozen, label)]
    # pi pulse at phase b then at phase a gives -exp(i (b - a) sigma^Z)
    t_pi = np.pi / rabi
    a = float(theta * nz)
    return [PulseSegment(Species.DATA, rabi, Linear(0.0, 0.0), t_pi, 0.0, frozen, label + ":pi0"),
            PulseSegment(Species.DATA, rabi, Linear(0.0, a), t_pi, 0.0, frozen, label + ":pi1")]


@dataclass
class GadgetPulse:
    sizes: tuple
    phases: tuple
    segment: PulseSegment
    grape: GrapeResult | None = None


class PulseLibrary:
    """Caches gadget pulses by (sizes, reduced phases)."""

    def __init__(self, omega: float = 1.0, restarts: int = 6, seed: int = 0,
                 T_schedule: Sequence[float] = GRAPE_T_SCHEDULE):
        self.omega = omega
        self.restarts = restarts
        self.seed = seed
        self.T_schedule = tuple(T_schedule)
        self._cache: dict = {}

    def gadget_pulse(self, size_phase: Mapping[int, float]) -> GadgetPulse:
        sizes = tuple(sorted(size_phase))
        phases = tuple(float(np.mod(size_phase[s], 2 * np.pi)) for s in sizes)
        key = (sizes, tuple(np.round(phases, 14)))
        if key in self._cache:
            return self._cache[key]
        if len(sizes) == 1:
            phi = phases[0]
            if phi < PHASE_CLAMP or phi > 2 * np.pi - PHASE_CLAMP:
                phi = 2 * np.pi - PHASE_CLAMP
            p = cz_pulse_params(phi, sizes[0], self.omega)
            pulse = GadgetPulse(sizes, phases, p.segment(Species.ANCILLA, label=f"cz S={sizes[0]}"))
        else:
            pulse = self._grape(sizes, phases)
        self._cache[key] = pulse
        return pulse

    def _grape(self, sizes, phases) -> GadgetPulse:
        report = []
        for T in self.T_schedule:
            prob = GrapeProblem(sizes, phases, self.omega, T / self.omega)
            res = grape_best_of(prob, restarts=self.restarts, seed=self.seed, stop_error=GRAPE_POLISH_ERROR)
            report.append((prob.T, res.error))
            if res.converged:
                log.info("GRAPE sizes=%s phases=%s converged at T=%.4f err=%.3e", sizes, phases, prob.T, res.error)
                seg = res.segment(Species.ANCILLA, label=f"grape S={sizes}")
                return GadgetPulse(sizes, phases, seg, res)
        raise CompilationError(
            f"GRAPE did not reach the error threshold for sizes {sizes} and phases {phases}", report=report)


@dataclass
class CompilationReport:
    model: QcaModel
    circuit: GateCircuit
    program: PulseProgram
    gadget_sizes: dict
    steps: int = 1
    physical: bool = False
    fidelity: float | None = None
    gadget_pulses: list = field(default_factory=list)

    @property
    def segment_count(self) -> int:
        return len(self.program)

    @property
    def ancilla_pulses_per_step(self) -> float:
        return self.program.count(Species.ANCILLA) / self.steps

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "steps": self.steps,
            "physical": self.physical,
            "segment_count": self.segment_count,
            "gadget_sizes": self.gadget_sizes,
            "fidelity": self.fidelity,
            "grape": [p.grape.to_dict() for p in self.gadget_pulses if p.grape is not None],
        }


def compile_model(model: QcaModel, steps: int = 1, physical: bool = False, uniform_degree: bool = False,
                  omega: float = 1.0, library: PulseLibrary | None = None) -> CompilationReport:
    """Compile ``steps`` applications of the update rule into a pulse program.

    With ``physical=False`` the data pulses are exact single-atom unitaries;
    with ``physical=True`` they are global detuned pulses, which requires every
    data atom to receive the same unitary.
    """
    if steps < 1:
        raise ConfigurationError("steps must be >= 1")
    sizes = gadget_sizes(model)
    array = build_array(model.lattice, sizes)
    library = library or PulseLibrary(omega)
    prog = PulseProgram(array)
    used: list[GadgetPulse] = []
    present = sorted({array.gadget_sizes[b.index] for b in array.graph.bonds})
    for k, st in enumerate(merge_plan(step_plan(model, uniform_degree) * steps)):
        if isinstance(st, DataStage):
            if physical:
                us = list(st.unitaries.values())
                if any(not np.allclose(u, us[0], atol=1e-12) for u in us):
                    raise ConfigurationError(
                        "physical data pulses need identical single-qubit unitaries on every site; "
                        "use a periodic lattice, uniform_degree, or exact singles")
                for seg in synthesize_single_qubit(us[0], omega, label=f"data{k}"):
                    prog.append(seg)
            else:
                prog.append(UnitarySegment(st.unitaries, label=f"data{k}"))
        else:
            if not present:
                continue
            requested: dict[int, set] = {}
            for cls_, phi in st.phases.items():
                requested.setdefault(sizes[cls_], set()).add(round(float(np.mod(phi, 2 * np.pi)), 12))
            conflicts = [S for S, v in requested.items() if len(v) > 1]
            if conflicts:
                raise CompilationError(f"conflicting phase targets on superatoms of size {conflicts}")
            size_phase = {S: (requested[S].pop() if S in requested else 0.0) for S in present}
            pulse = library.gadget_pulse(size_phase)
            used.append(pulse)
            prog.append(pulse.segment)
    circ = ideal_circuit(model, steps, uniform_degree)
    return CompilationReport(model, circ, prog, sizes, steps, physical, None, used)


# ----------------------------------------------------------------------------
# verification
# ----------------------------------------------------------------------------

def verification_states(n: int, n_random: int = 20, seed: int = 1234) -> np.ndarray:
    """Columns: every computational basis state, then Haar-random states."""
    rng = np.random.default_rng(seed)
    dim = 1 << n
    rand = rng.normal(size=(dim, n_random)) + 1j * rng.normal(size=(dim, n_random))
    rand /= np.linalg.norm(rand, axis=0)
    return np.concatenate([np.eye(dim, dtype=complex), rand], axis=1)


def verify(report: CompilationReport, repetitions: int = 1, n_random: int = 20, seed: int = 1234,
           method: str = "exact") -> float:
    """Worst-case data-state fidelity of the pulse program against the ideal rule.

    Raises :class:`LeakageError` if any test state leaves more than 1e-6
    probability outside the all-ancilla-ground subspace.
    """
    if repetitions < 0:
        raise ConfigurationError("repetitions must be >= 0")
    if repetitions == 0:
        report.fidelity = 1.0
        return 1.0
    model = report.model
    n = model.n_qubits
    check_dense(n, IDEAL_QUBIT_CAP)
    U = np.linalg.matrix_power(ideal_step_unitary(model), report.steps * repetitions)
    basis = enumerate_basis(report.program.array)
    data = verification_states(n, n_random, seed)
    psi = embed_data_states(basis, data)
    out = run_program_batch(basis, psi, report.program, method, repetitions)
    proj = project_data_states(basis, out)
    leakage = 1 - np.sum(np.abs(proj) ** 2, axis=0)
    worst = float(leakage.max())
    if worst > LEAKAGE_TOL:
        raise LeakageError(f"ancilla leakage {worst:.3e} exceeds {LEAKAGE_TOL}", worst)
    ideal = U @ data
    fid = np.abs(np.sum(ideal.conj() * proj, axis=0)) ** 2
    report.fidelity = float(fid.min())
    return report.fidelity


# ----------------------------------------------------------------------------
# Floquet expansion and Trotter error
# ----------------------------------------------------------------------------

@dataclass
class FloquetExpansion:
    h_sum: np.ndarray
    correction: np.ndarray
    pairwise: dict
    tau: float


def floquet_effective_h(model: QcaModel) -> FloquetExpansion:
    """``sum_j H_j`` and the first-order term ``-(i tau/2) sum_{j>k} [H_j, H_k]``.

    Layers are indexed in application order, so ``j > k`` means ``H_j`` acts later.
    """
    n = model.n_qubits
    if n > FLOQUET_QUBIT_CAP:
        raise ResourceError(f"Floquet expansion limited to {FLOQUET_QUBIT_CAP} qubits", size=1 << n)
    layers = model_layers(model)
    mats = [l.matrix(n) for l in layers]
    h_sum = sum(mats)
    pairwise = {}
    corr = np.zeros_like(h_sum)
    for j in range(len(mats)):
        for k in range(j):
            c = -0.5j * model.tau * (mats[j] @ mats[k] - mats[k] @ mats[j])
            pairwise[(layers[j].label, layers[k].label)] = c
            corr += c
    return FloquetExpansion(h_sum, corr, pairwise, model.tau)


def bch_residual(model: QcaModel) -> float:
    """Spectral norm of ``i log(U)/tau - H_sum - correction``."""
    U = ideal_step_unitary(model)
    heff = 1j * logm(U) / model.tau
    fe = floquet_effective_h(model)
    return float(np.linalg.norm(heff - fe.h_sum - fe.correction, 2))


def trotter_error(model: QcaModel) -> float:
    """Operator-norm distance between one step and ``exp(-i tau sum_j H_j)``."""
    n = model.n_qubits
    check_dense(n, IDEAL_QUBIT_CAP)
    H = sum(l.matrix(n) for l in model_layers(model))
    return float(np.linalg.norm(ideal_step_unitary(model) - expm(-1j * model.tau * H), 2))


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares exponent and prefactor of ``y = C x^p``."""
    p, logc = np.polyfit(np.log(x), np.log(y), 1)
    return float(p), float(np.exp(logc))
