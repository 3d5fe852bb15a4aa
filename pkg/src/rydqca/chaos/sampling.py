"""Sampling estimator of the chaos diagnostic ``g^O(t)``."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .. import paulis
from ..circuit import FastStep
from ..compiler import QcaModel, ideal_step_unitary, model_layers
from ..errors import ConfigurationError, ResourceError
from .tetra import TETRA_STATES

ENGINE_QUBIT_CAP = 20
DENSE_STEP_MAX = 10
DEFAULT_BATCHES = 10
CHUNK_BYTES = 64 * 1024 ** 2


@dataclass(frozen=True)
class Observable:
    """Uniform Pauli observable ``prod_{i in sites} sigma^letter_i``."""

    letter: str
    sites: tuple[int, ...]

    def __post_init__(self):
        if self.letter not in ("X", "Y", "Z"):
            raise ConfigurationError(f"observable letter must be X, Y or Z, got {self.letter!r}")
        if not self.sites or len(set(self.sites)) != len(self.sites):
            raise ConfigurationError("observable needs a non-empty set of distinct sites")
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))

    @classmethod
    def single(cls, letter: str, site: int) -> "Observable":
        return cls(letter, (site,))

    def term(self) -> dict[int, str]:
        return {s: self.letter for s in self.sites}

    def check(self, n: int) -> None:
        if max(self.sites) >= n or min(self.sites) < 0:
            raise ConfigurationError(f"observable sites {self.sites} outside 0..{n - 1}")

    def matrix(self, n: int) -> np.ndarray:
        self.check(n)
        return paulis.pauli_string(n, self.term())

    def to_dict(self) -> dict:
        return {"letter": self.letter, "sites": list(self.sites)}


@dataclass(frozen=True)
class Coloring:
    colors: np.ndarray
    seed: int | None = None

    @property
    def n_sites(self) -> int:
        return len(self.colors)

    def product_state(self) -> np.ndarray:
        return product_state(self.colors)


def product_state(colors: Sequence[int]) -> np.ndarray:
    """``(x)_i |mu_{c_i}>`` in big-endian order."""
    colors = np.asarray(colors, dtype=int)
    if colors.size and (colors.min() < 1 or colors.max() > 4):
        raise ConfigurationError("colors must lie in 1..4")
    return reduce(np.kron, [TETRA_STATES[c - 1] for c in colors], np.ones(1, dtype=complex))


def sample_coloring(n: int, seed) -> Coloring:
    rng = np.random.default_rng(seed)
    return Coloring(rng.integers(1, 5, size=n), seed if isinstance(seed, int) else None)


def sample_initial_state(n: int, seed) -> tuple[Coloring, np.ndarray]:
    """Random product state drawn from the tetrahedral ensemble."""
    if n < 1:
        raise ConfigurationError("need at least one site")
    coloring = sample_coloring(n, seed)
    return coloring, coloring.product_state()


@dataclass
class GEstimate:
    times: np.ndarray
    values: np.ndarray
    uncertainty: np.ndarray
    n_samples: int
    n_batches: int
    batch_values: np.ndarray
    samples: np.ndarray = field(repr=False)
    means: np.ndarray = field(repr=False, default=None)
    shots: int | None = None

    def window_average(self, start: int, stop: int | None = None) -> tuple[float, float]:
        """Mean of g over ``times[start:stop]`` and the spread of the batch means."""
        sl = slice(start, stop)
        value = float(self.values[sl].mean())
        per_batch = self.batch_values[:, sl].mean(axis=1)
        return value, float(per_batch.std(ddof=1))

    def to_dict(self) -> dict:
        return {"t": self.times.tolist(), "g": self.values.tolist(),
                "uncertainty": self.uncertainty.tolist(), "n_samples": self.n_samples,
                "n_batches": self.n_batches, "shots": self.shots}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _expectations(states: np.ndarray, target: np.ndarray, factor: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("bi,bi->b", states[:, target].conj(), states * factor[None, :]))


class _Evolver:
    def __init__(self, model: QcaModel):
        n = model.n_qubits
        if n > ENGINE_QUBIT_CAP:
            raise ResourceError(f"ideal-circuit engine is capped at {ENGINE_QUBIT_CAP} qubits, got {n}",
                                size=1 << n)
        self.n = n
        if n <= DENSE_STEP_MAX:
            self.Ut = np.ascontiguousarray(ideal_step_unitary(model).T)
            self.fast = None
        else:
            self.Ut = None
            self.fast = FastStep(n, model_layers(model), model.tau)

    def __call__(self, states: np.ndarray) -> np.ndarray:
        if self.fast is None:
            return states @ self.Ut
        return self.fast.apply(states)


def _initial_states(n: int, seeds: Sequence[np.random.SeedSequence]) -> np.ndarray:
    return np.array([product_state(np.random.default_rng(s).integers(1, 5, size=n)) for s in seeds])


def _shot_estimates(e: np.ndarray, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample means and unbiased estimates of ``<O>^2`` from ``m`` +-1 outcomes."""
    p = np.clip((1 + e) / 2, 0.0, 1.0)
    k = rng.binomial(m, p)
    mean = (2 * k - m) / m
    return mean, mean ** 2 - (1 - mean ** 2) / (m - 1)


def _run_chunk(evolve: _Evolver, seeds, t_max: int, target, factor, shots) -> tuple[np.ndarray, np.ndarray]:
    states = _initial_states(evolve.n, seeds)
    ex = np.empty((len(seeds), t_max + 1))
    for t in range(t_max + 1):
        if t:
            states = evolve(states)
        ex[:, t] = _expectations(states, target, factor)
    if shots is None:
        return ex, ex ** 2
    means = np.empty_like(ex)
    sq = np.empty_like(ex)
    for i, s in enumerate(seeds):
        # the shot stream is a child of the sample's own seed sequence
        rng = np.random.default_rng(s.spawn(1)[0])
        means[i], sq[i] = _shot_estimates(ex[i], shots, rng)
    return means, sq


def _variance(means: np.ndarray, squares: np.ndarray) -> np.ndarray:
    """Sample variance over axis 0 with ``squares`` standing in for ``means**2``.

    With exact expectations this is the ddof=1 variance; with shot estimates
    every term is unbiased for the exact-mode quantity.
    """
    n = means.shape[0]
    s = means.sum(axis=0)
    mean_sq = (s ** 2 - (means ** 2).sum(axis=0) + squares.sum(axis=0)) / n ** 2
    return n / (n - 1) * (squares.mean(axis=0) - mean_sq)


def estimate_g(model: QcaModel, observable: Observable, t_max: int, n_samples: int, seed: int = 0,
               shots: int | None = None, n_batches: int = DEFAULT_BATCHES, threads: int = 1) -> GEstimate:
    """Sample variance of ``<psi_t|O|psi_t>`` over tetrahedral product states.

    Parameters
    ----------
    model : QcaModel
        QCA whose ideal one-step unitary generates the evolution.
    observable : Observable
    t_max : int
        Largest number of steps; values are returned for ``t = 0..t_max``.
    n_samples : int
        Number of initial states; must be a multiple of ``n_batches`` and at least 10.
    seed : int
        Root seed; sample ``i`` uses the ``i``-th spawned child stream, so results
        do not depend on ``threads``.
    shots : int, optional
        If set, each expectation is replaced by the mean of ``shots`` binomial
        +-1 outcomes and ``<O>^2`` by its unbiased estimator.
    """
    if n_samples < 10:
        raise ConfigurationError(f"need at least 10 samples, got {n_samples}")
    if n_batches < 2 or n_samples % n_batches:
        raise ConfigurationError(f"n_samples={n_samples} is not divisible by n_batches={n_batches}")
    if t_max < 0:
        raise ConfigurationError("t_max must be non-negative")
    if shots is not None and shots < 2:
        raise ConfigurationError("shots must be at least 2")
    if threads < 1:
        raise ConfigurationError("threads must be positive")
    evolve = _Evolver(model)
    n = evolve.n
    observable.check(n)
    target, factor = paulis.pauli_action(n, observable.term())

    seeds = np.random.SeedSequence(seed).spawn(n_samples)
    chunk = max(1, min(n_samples, CHUNK_BYTES // (16 << n)))
    pieces = [seeds[i:i + chunk] for i in range(0, n_samples, chunk)]
    job = lambda part: _run_chunk(evolve, part, t_max, target, factor, shots)  # noqa: E731
    if threads == 1 or len(pieces) == 1:
        results = [job(p) for p in pieces]
    else:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(job, pieces))
    means = np.concatenate([r[0] for r in results])
    squares = np.concatenate([r[1] for r in results])

    values = _variance(means, squares)
    size = n_samples // n_batches
    batch_values = np.array([_variance(means[b * size:(b + 1) * size], squares[b * size:(b + 1) * size])
                             for b in range(n_batches)])
    return GEstimate(times=np.arange(t_max + 1), values=values, uncertainty=batch_values.std(axis=0, ddof=1),
                     n_samples=n_samples, n_batches=n_batches, batch_values=batch_values,
                     samples=squares, means=means, shots=shots)
