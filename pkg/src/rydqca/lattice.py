"""Subdivision-graph atom layouts for dual-species arrays.

Data atoms sit on the vertices of a chain, square or honeycomb lattice and a
cluster of ``S`` ancillas sits on every bond.  Positions are in units of the
data-ancilla spacing ``d`` (so neighbouring data atoms are ``2d`` apart).

The blockade graph is *declared* by construction (ancilla <-> both endpoints,
ancilla <-> ancilla inside a gadget); positions only feed the audit and the
JSON export.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, GeometryError

S_MAX_DEFAULT = 3
GADGET_RADIUS = 0.1

BOND_CLASSES = {
    "Chain": ("x",),
    "Square": ("x", "y"),
    "Honeycomb": ("X", "Y", "Z"),
}


class Species(str, Enum):
    DATA = "data"
    ANCILLA = "ancilla"


@dataclass(frozen=True)
class LatticeSpec:
    family: str
    extent: tuple[int, ...]
    boundary: str = "Open"
    prune_dangling: bool = False

    def __post_init__(self):
        if self.family not in BOND_CLASSES:
            raise ConfigurationError(f"unknown lattice family {self.family!r}")
        if self.boundary not in ("Open", "Periodic"):
            raise ConfigurationError(f"unknown boundary {self.boundary!r}")
        extent = tuple(int(e) for e in np.atleast_1d(self.extent))
        object.__setattr__(self, "extent", extent)
        ndim = 1 if self.family == "Chain" else 2
        if len(extent) != ndim:
            raise ConfigurationError(f"{self.family} needs {ndim} extent value(s), got {extent}")
        if any(e < 1 for e in extent):
            raise ConfigurationError(f"extent must be >= 1 in every dimension, got {extent}")
        if self.boundary == "Periodic" and any(e < 3 for e in extent):
            raise ConfigurationError("periodic boundaries need extent >= 3 in every wrapped direction")

    @classmethod
    def chain(cls, length: int, boundary: str = "Open") -> "LatticeSpec":
        return cls("Chain", (length,), boundary)

    @classmethod
    def hexagon(cls) -> "LatticeSpec":
        """A single honeycomb plaquette (6 sites, two bonds of each orientation)."""
        return cls("Honeycomb", (2, 2), "Open", prune_dangling=True)

    @property
    def bond_classes(self) -> tuple[str, ...]:
        return BOND_CLASSES[self.family]

    def to_dict(self) -> dict:
        d = {"family": self.family, "extent": list(self.extent), "boundary": self.boundary}
        if self.prune_dangling:
            d["prune_dangling"] = True
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "LatticeSpec":
        return cls(d["family"], tuple(d["extent"]), d.get("boundary", "Open"),
                   bool(d.get("prune_dangling", False)))


@dataclass(frozen=True)
class Bond:
    index: int
    sites: tuple[int, int]
    bond_class: str


@dataclass(frozen=True)
class LatticeGraph:
    """Logical lattice: data sites, their coordinates and classified bonds."""

    spec: LatticeSpec
    positions: np.ndarray
    bonds: tuple[Bond, ...]
    box: np.ndarray | None = None  # periodic cell vectors (rows), if any

    @property
    def n_sites(self) -> int:
        return len(self.positions)

    def degree(self, bond_class: str | None = None) -> np.ndarray:
        deg = np.zeros(self.n_sites, dtype=int)
        for b in self.bonds:
            if bond_class is None or b.bond_class == bond_class:
                deg[list(b.sites)] += 1
        return deg

    def neighbours(self) -> list[set[int]]:
        nb = [set() for _ in range(self.n_sites)]
        for b in self.bonds:
            i, j = b.sites
            nb[i].add(j)
            nb[j].add(i)
        return nb

    def distances_from(self, source: int) -> np.ndarray:
        """Graph distances (BFS) from one site; unreachable sites get -1."""
        nb = self.neighbours()
        dist = np.full(self.n_sites, -1)
        dist[source] = 0
        frontier = [source]
        while frontier:
            nxt = []
            for s in frontier:
                for t in nb[s]:
                    if dist[t] < 0:
                        dist[t] = dist[s] + 1
                        nxt.append(t)
            frontier = nxt
        return dist


def lattice_graph(spec: LatticeSpec) -> LatticeGraph:
    """Enumerate sites and bonds of a lattice (bond length 2 in units of d)."""
    periodic = spec.boundary == "Periodic"
    if spec.family == "Chain":
        (L,) = spec.extent
        pos = np.array([[2.0 * i, 0.0] for i in range(L)])
        pairs = [(i, i + 1, "x") for i in range(L - 1)]
        if periodic:
            pairs.append((L - 1, 0, "x"))
        box = np.array([[2.0 * L, 0.0]]) if periodic else None
    elif spec.family == "Square":
        Lx, Ly = spec.extent
        site = lambda x, y: x * Ly + y
        pos = np.array([[2.0 * x, 2.0 * y] for x in range(Lx) for y in range(Ly)])
        pairs = []
        for x in range(Lx):
            for y in range(Ly):
                if x + 1 < Lx or periodic:
                    pairs.append((site(x, y), site((x + 1) % Lx, y), "x"))
                if y + 1 < Ly or periodic:
                    pairs.append((site(x, y), site(x, (y + 1) % Ly), "y"))
        box = np.array([[2.0 * Lx, 0.0], [0.0, 2.0 * Ly]]) if periodic else None
    else:
        pos, pairs, box = _honeycomb(spec)
    bonds = tuple(Bond(k, (i, j), c) for k, (i, j, c) in enumerate(pairs))
    graph = LatticeGraph(spec, pos, bonds, box)
    if spec.prune_dangling:
        graph = _prune(graph)
    return graph


def _honeycomb(spec: LatticeSpec):
    # A(i,j) -> B(i,j) is a Z bond, A(i,j) -> B(i-1,j) an X bond, A(i,j) -> B(i,j-1) a Y bond
    Lx, Ly = spec.extent
    periodic = spec.boundary == "Periodic"
    dz = 2.0 * np.array([0.0, 1.0])
    dx = 2.0 * np.array([-np.sqrt(3) / 2, -0.5])
    dy = 2.0 * np.array([np.sqrt(3) / 2, -0.5])
    a1, a2 = dz - dx, dz - dy
    a_site = lambda i, j: 2 * (i * Ly + j)
    b_site = lambda i, j: 2 * (i * Ly + j) + 1
    pos = np.zeros((2 * Lx * Ly, 2))
    pairs = []
    for i in range(Lx):
        for j in range(Ly):
            r = i * a1 + j * a2
            pos[a_site(i, j)] = r
            pos[b_site(i, j)] = r + dz
            pairs.append((a_site(i, j), b_site(i, j), "Z"))
            if i - 1 >= 0 or periodic:
                pairs.append((a_site(i, j), b_site((i - 1) % Lx, j), "X"))
            if j - 1 >= 0 or periodic:
                pairs.append((a_site(i, j), b_site(i, (j - 1) % Ly), "Y"))
    box = np.array([Lx * a1, Ly * a2]) if periodic else None
    return pos, pairs, box


def _prune(graph: LatticeGraph) -> LatticeGraph:
    keep = np.ones(graph.n_sites, dtype=bool)
    bonds = list(graph.bonds)
    while True:
        deg = Counter(s for b in bonds for s in b.sites)
        dangling = {s for s in range(graph.n_sites) if keep[s] and deg[s] <= 1}
        if not dangling:
            break
        keep[list(dangling)] = False
        bonds = [b for b in bonds if not (set(b.sites) & dangling)]
    new_index = -np.ones(graph.n_sites, dtype=int)
    new_index[keep] = np.arange(keep.sum())
    bonds = tuple(Bond(k, (int(new_index[b.sites[0]]), int(new_index[b.sites[1]])), b.bond_class)
                  for k, b in enumerate(bonds))
    return LatticeGraph(graph.spec, graph.positions[keep], bonds, graph.box)


@dataclass(frozen=True)
class GadgetAssignment:
    """Superatom size per bond class, optionally overridden per bond index."""

    sizes: Mapping[str, int]
    overrides: Mapping[int, int] = field(default_factory=dict)
    s_max: int = S_MAX_DEFAULT

    @classmethod
    def uniform(cls, spec: LatticeSpec, size: int = 1, s_max: int = S_MAX_DEFAULT) -> "GadgetAssignment":
        return cls({c: size for c in spec.bond_classes}, s_max=s_max)

    def size_of(self, bond: Bond) -> int:
        return int(self.overrides.get(bond.index, self.sizes[bond.bond_class]))

    def validate(self, spec: LatticeSpec) -> None:
        unknown = set(self.sizes) - set(spec.bond_classes)
        if unknown:
            raise ConfigurationError(f"unknown bond class(es) {sorted(unknown)} for {spec.family}")
        missing = set(spec.bond_classes) - set(self.sizes)
        if missing:
            raise ConfigurationError(f"gadget sizes missing for bond class(es) {sorted(missing)}")
        for key, s in list(self.sizes.items()) + list(self.overrides.items()):
            if not 1 <= int(s) <= self.s_max:
                raise ConfigurationError(f"superatom size {s} on {key!r} outside 1..{self.s_max}")


@dataclass(frozen=True)
class Atom:
    id: int
    position: tuple[float, float]
    species: Species
    gadget: int | None = None  # bond index for ancillas


@dataclass(frozen=True)
class AtomArray:
    atoms: tuple[Atom, ...]
    blockade_edges: frozenset
    graph: LatticeGraph | None = None
    gadget_sizes: Mapping[int, int] = field(default_factory=dict)
    single_species: bool = False

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def data_ids(self) -> list[int]:
        return [a.id for a in self.atoms if a.species is Species.DATA]

    @property
    def ancilla_ids(self) -> list[int]:
        return [a.id for a in self.atoms if a.species is Species.ANCILLA]

    def species_ids(self, species: Species) -> list[int]:
        return [a.id for a in self.atoms if a.species is Species(species)]

    def gadget_members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for a in self.atoms:
            if a.gadget is not None:
                out.setdefault(a.gadget, []).append(a.id)
        return out

    def neighbours(self) -> list[list[int]]:
        nb = [[] for _ in self.atoms]
        for i, j in self.blockade_edges:
            nb[i].append(j)
            nb[j].append(i)
        return [sorted(x) for x in nb]

    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=float)

    def validate(self) -> None:
        ids = [a.id for a in self.atoms]
        if ids != list(range(len(ids))):
            raise ConfigurationError("atom ids must be dense 0..n-1 in order")
        species = {a.id: a.species for a in self.atoms}
        for i, j in self.blockade_edges:
            if i == j:
                raise ConfigurationError(f"self-loop on atom {i}")
            if not self.single_species and species[i] is species[j] is Species.DATA:
                raise ConfigurationError(f"data atoms {i} and {j} share a blockade edge")
        if self.single_species or self.graph is None:
            return
        members = self.gadget_members()
        for a in self.atoms:
            if a.species is Species.ANCILLA and a.gadget is None:
                raise ConfigurationError(f"ancilla {a.id} belongs to no gadget")
        for b in self.graph.bonds:
            expected = set(b.sites) | set(members.get(b.index, []))
            for i, j in itertools.combinations(sorted(expected), 2):
                has = frozenset((i, j)) in self.blockade_edges
                if (i, j) == tuple(sorted(b.sites)):
                    continue
                if not has:
                    raise ConfigurationError(f"gadget {b.index}: missing blockade edge {i}-{j}")

    def to_dict(self) -> dict:
        return {
            "lattice": self.graph.spec.to_dict() if self.graph is not None else None,
            "single_species": self.single_species,
            "atoms": [
                {"id": a.id, "x": a.position[0], "y": a.position[1],
                 "species": a.species.value, "gadget": a.gadget}
                for a in self.atoms
            ],
            "edges": sorted([sorted(e) for e in self.blockade_edges]),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: Mapping) -> "AtomArray":
        atoms = tuple(Atom(int(a["id"]), (float(a["x"]), float(a["y"])), Species(a["species"]),
                           None if a.get("gadget") is None else int(a["gadget"]))
                      for a in d["atoms"])
        edges = frozenset(frozenset((int(i), int(j))) for i, j in d["edges"])
        graph = None
        sizes: dict[int, int] = {}
        if d.get("lattice"):
            graph = lattice_graph(LatticeSpec.from_dict(d["lattice"]))
            sizes = dict(Counter(a.gadget for a in atoms if a.gadget is not None))
        arr = cls(atoms, edges, graph, sizes, bool(d.get("single_species", False)))
        arr.validate()
        return arr


def build_array(spec: LatticeSpec, gadgets: GadgetAssignment | Mapping[str, int] | int = 1) -> AtomArray:
    """Place data atoms on the lattice and a gadget of ancillas on every bond.

    Data atoms get ids ``0..N-1`` in site order; ancillas follow, grouped by bond.
    ``gadgets`` may be a ``GadgetAssignment``, a ``{bond_class: S}`` mapping or a
    single integer applied to every class.
    """
    if isinstance(gadgets, int):
        gadgets = GadgetAssignment.uniform(spec, gadgets)
    elif not isinstance(gadgets, GadgetAssignment):
        gadgets = GadgetAssignment(dict(gadgets))
    gadgets.validate(spec)
    graph = lattice_graph(spec)
    atoms = [Atom(i, (float(p[0]), float(p[1])), Species.DATA) for i, p in enumerate(graph.positions)]
    edges = set()
    sizes = {}
    for bond in graph.bonds:
        i, j = bond.sites
        S = gadgets.size_of(bond)
        sizes[bond.index] = S
        mid = _bond_midpoint(graph, i, j)
        ids = []
        for k in range(S):
            if S == 1:
                p = mid
            else:
                ang = 2 * np.pi * k / S + np.pi / 2
                p = mid + GADGET_RADIUS * np.array([np.cos(ang), np.sin(ang)])
            aid = len(atoms)
            atoms.append(Atom(aid, (float(p[0]), float(p[1])), Species.ANCILLA, bond.index))
            ids.append(aid)
        for a in ids:
            edges.add(frozenset((a, i)))
            edges.add(frozenset((a, j)))
        for a, b in itertools.combinations(ids, 2):
            edges.add(frozenset((a, b)))
    arr = AtomArray(tuple(atoms), frozenset(edges), graph, sizes)
    arr.validate()
    return arr


def _bond_midpoint(graph: LatticeGraph, i: int, j: int) -> np.ndarray:
    pi, pj = graph.positions[i], graph.positions[j]
    delta = _min_image(pj - pi, graph.box)
    return pi + delta / 2


def _min_image(delta: np.ndarray, box: np.ndarray | None) -> np.ndarray:
    if box is None:
        return delta
    best = delta
    for shifts in itertools.product((-1, 0, 1), repeat=len(box)):
        cand = delta + np.asarray(shifts) @ box
        if np.linalg.norm(cand) < np.linalg.norm(best) - 1e-12:
            best = cand
    return best


def pxp_chain_reference(length: int, boundary: str = "Periodic") -> AtomArray:
    """Single-species PXP chain (spacing d, nearest neighbours blockaded)."""
    spec = LatticeSpec.chain(length, boundary)
    graph = lattice_graph(spec)
    graph = LatticeGraph(spec, graph.positions / 2, graph.bonds,
                         None if graph.box is None else graph.box / 2)
    atoms = tuple(Atom(i, (float(p[0]), float(p[1])), Species.DATA) for i, p in enumerate(graph.positions))
    edges = frozenset(frozenset(b.sites) for b in graph.bonds)
    arr = AtomArray(atoms, edges, graph, {}, single_species=True)
    arr.validate()
    return arr


# ----------------------------------------------------------------------------
# blockade audit
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockadeAudit:
    ratio_unwanted_over_blockade: float
    ratio_all_pairs: float
    closed_form: float
    worst_pair: tuple[int, int] | None
    worst_distance: float | None
    per_atom_counts: Mapping[int, tuple[int, int]]
    exponent: float

    def summary(self) -> dict:
        return {
            "ratio": self.ratio_unwanted_over_blockade,
            "ratio_all_pairs": self.ratio_all_pairs,
            "closed_form": self.closed_form,
            "worst_pair": self.worst_pair,
            "worst_distance": self.worst_distance,
            "exponent": self.exponent,
        }


def pair_distances(array: AtomArray) -> np.ndarray:
    pos = array.positions()
    box = array.graph.box if array.graph is not None else None
    n = len(pos)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = np.linalg.norm(_min_image(pos[j] - pos[i], box))
    return dist


def blockade_audit(array: AtomArray, exponent: float = 6.0, shell_rtol: float = 1e-6) -> BlockadeAudit:
    """Compare unwanted van-der-Waals tails against the declared blockade couplings.

    Interacting pairs are inter-species pairs for dual-species arrays and all
    pairs for a single-species array; the blockade sum is restricted to the
    same set, so intra-gadget ancilla pairs do not enter either side.  The dominant shell of an atom is the set
    of its unwanted partners at (within ``shell_rtol`` of) its nearest unwanted
    distance; ``ratio_unwanted_over_blockade`` sums ``r^-exponent`` over the union
    of dominant-shell pairs and divides by the same sum over blockade pairs.
    """
    if array.n_atoms == 0:
        raise GeometryError("cannot audit an empty array")
    if not exponent > 0:
        raise ConfigurationError("exponent must be positive")
    dist = pair_distances(array)
    n = array.n_atoms
    iu = np.triu_indices(n, 1)
    if n > 1 and np.min(dist[iu]) < 1e-9:
        k = int(np.argmin(dist[iu]))
        raise GeometryError(f"coincident atoms {iu[0][k]} and {iu[1][k]}")
    species = np.array([a.species is Species.DATA for a in array.atoms])
    blockade = np.zeros((n, n), dtype=bool)
    for i, j in array.blockade_edges:
        blockade[i, j] = blockade[j, i] = True
    interacting = np.ones((n, n), dtype=bool) if array.single_species else species[:, None] != species[None, :]
    np.fill_diagonal(interacting, False)
    unwanted = interacting & ~blockade
    # intra-gadget ancilla pairs use a different (intra-species) potential
    blockade = blockade & interacting

    w = np.zeros((n, n))
    w[iu] = dist[iu] ** (-float(exponent))
    w = w + w.T
    blockade_sum = w[np.triu(blockade, 1)].sum()

    shell = np.zeros((n, n), dtype=bool)
    counts = {}
    for i in range(n):
        partners = np.flatnonzero(unwanted[i])
        nb = int(blockade[i].sum())
        if partners.size:
            dmin = dist[i, partners].min()
            sel = partners[dist[i, partners] <= dmin * (1 + shell_rtol)]
            shell[i, sel] = shell[sel, i] = True
            counts[i] = (nb, int(sel.size))
        else:
            counts[i] = (nb, 0)
    if blockade_sum == 0:
        ratio = ratio_all = closed = 0.0
    else:
        ratio = w[np.triu(shell, 1)].sum() / blockade_sum
        ratio_all = w[np.triu(unwanted, 1)].sum() / blockade_sum
        n_shell = int(np.triu(shell, 1).sum())
        n_block = int(np.triu(blockade, 1).sum())
        if n_shell:
            d_u = dist[np.triu(shell, 1)].mean()
            d_b = dist[np.triu(blockade, 1)].mean()
            closed = (n_shell / n_block) * (d_u / d_b) ** (-float(exponent))
        else:
            closed = 0.0
    worst = worst_d = None
    if unwanted.any():
        masked = np.where(np.triu(unwanted, 1), dist, np.inf)
        k = np.unravel_index(np.argmin(masked), masked.shape)
        worst, worst_d = (int(k[0]), int(k[1])), float(masked[k])
    return BlockadeAudit(float(ratio), float(ratio_all), float(closed), worst, worst_d, counts, float(exponent))
