"""Pulse synthesis for mediated phase gates on superatoms of mixed size.

A superatom of size ``S`` driven with phase ``xi`` is the two-level system::

    H_S(xi) = a_S [[0, e^{i xi}], [e^{-i xi}, 0]],   a_S = sqrt(S) Omega / 2

in the basis ``(|G_S>, |R_S>)``, identical in sign to :mod:`rydqca.pxp`, so
phases found here replay directly on assembled gadgets.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigurationError, DomainError
from .lattice import Species
from .pxp import Linear, PiecewiseConstant, PulseSegment

log = logging.getLogger(__name__)

PHASE_CLAMP = 1e-6
DEFAULT_THRESHOLD = 1e-10
THRESHOLD_SLACK = 1.01
# near-feasible runs that hit maxiter are restarted from their best point
NEAR_FEASIBLE_FACTOR = 1e3
CONTINUATIONS = 2
_GAUSS = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)


# ----------------------------------------------------------------------------
# closed-form single-size pulse
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CzPulseParams:
    phi: float
    S: int
    omega: float
    delta: float
    t_f: float

    def segment(self, species=Species.ANCILLA, frozen=(), label: str = "") -> PulseSegment:
        return PulseSegment(Species(species), self.omega, Linear(-self.delta), self.t_f,
                            frozen=frozenset(frozen), label=label)


def cz_pulse_params(phi: float, S: int = 1, omega: float = 1.0) -> CzPulseParams:
    """Detuning ramp and duration of a closed loop imprinting ``phi`` on ``|G_S>``.

    Solves ``t_f = 2 pi / sqrt(Delta^2 + S Omega^2)`` together with
    ``Delta = 2 (pi - phi) / t_f``.  Phases within 1e-6 of 0 or 2 pi are
    clamped (the loop degenerates there).
    """
    phi = float(phi)
    if not 0 < phi < 2 * np.pi:
        raise DomainError(f"phase {phi} outside the open interval (0, 2 pi)")
    if S < 1 or not omega > 0:
        raise ConfigurationError("need S >= 1 and omega > 0")
    phi = min(max(phi, PHASE_CLAMP), 2 * np.pi - PHASE_CLAMP)
    t_f = 2.0 / (np.sqrt(S) * omega) * np.sqrt(np.pi ** 2 - (np.pi - phi) ** 2)
    delta = 2 * (np.pi - phi) / t_f
    return CzPulseParams(phi, int(S), float(omega), float(delta), float(t_f))


def reduce_phase(phi: float) -> float:
    """Map a phase to ``[0, 2 pi)``."""
    return float(np.mod(phi, 2 * np.pi))


# ----------------------------------------------------------------------------
# GRAPE
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GrapeProblem:
    sizes: tuple
    target_phases: tuple
    omega: float = 1.0
    T: float = 2 * np.pi
    M: int = 100
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        phases = tuple(reduce_phase(p) for p in self.target_phases)
        if not sizes:
            raise ConfigurationError("GRAPE needs at least one superatom size")
        if len(set(sizes)) != len(sizes):
            raise ConfigurationError(f"superatom sizes must be distinct, got {sizes}")
        if any(s < 1 for s in sizes):
            raise ConfigurationError("superatom sizes must be >= 1")
        if len(phases) != len(sizes):
            raise ConfigurationError("one target phase per size is required")
        if self.M < 2:
            raise ConfigurationError("M must be >= 2")
        if not (self.T > 0 and self.omega > 0):
            raise ConfigurationError("T and omega must be positive")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "target_phases", phases)

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def couplings(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.sizes, dtype=float)) * self.omega / 2

    def with_T(self, T: float) -> "GrapeProblem":
        return GrapeProblem(self.sizes, self.target_phases, self.omega, T, self.M, self.threshold)

    def with_phases(self, phases) -> "GrapeProblem":
        return GrapeProblem(self.sizes, tuple(phases), self.omega, self.T, self.M, self.threshold)

    def to_dict(self) -> dict:
        return {"sizes": list(self.sizes), "target_phases": list(self.target_phases),
                "omega": self.omega, "T": self.T, "M": self.M, "threshold": self.threshold}


@dataclass
class GrapeResult:
    xi: np.ndarray
    error: float
    converged: bool
    iterations: int
    problem: GrapeProblem
    message: str = ""

    def segment(self, species=Species.ANCILLA, frozen=(), label: str = "") -> PulseSegment:
        return PulseSegment(Species(species), self.problem.omega,
                            PiecewiseConstant(tuple(self.xi), self.problem.dt),
                            self.problem.T, frozen=frozenset(frozen), label=label)

    def to_dict(self) -> dict:
        p = self.problem
        return {"M": p.M, "dt": p.dt, "T": p.T, "xi": [float(x) for x in self.xi], "omega": p.omega,
                "sizes": list(p.sizes), "target_phases": list(p.target_phases),
                "error": self.error, "converged": self.converged, "iterations": self.iterations}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _step_unitaries(problem: GrapeProblem, xi: np.ndarray) -> np.ndarray:
    """``U[s, k]`` = exp(-i dt H_S(xi_k)) with shape ``(n_sizes, M, 2, 2)``."""
    a = problem.couplings[:, None]
    c = np.cos(a * problem.dt)
    s = np.sin(a * problem.dt)
    e = np.exp(1j * np.asarray(xi))[None, :]
    U = np.empty((len(problem.sizes), len(xi), 2, 2), dtype=complex)
    U[..., 0, 0] = c
    U[..., 1, 1] = c
    U[..., 0, 1] = -1j * s * e
    U[..., 1, 0] = -1j * s * np.conj(e)
    return U


def _prefix_products(U: np.ndarray) -> np.ndarray:
    """``P[..., k] = U[..., k] @ ... @ U[..., 0]`` by a log-depth scan."""
    P = U.copy()
    shift = 1
    M = U.shape[-3]
    while shift < M:
        P[..., shift:, :, :] = P[..., shift:, :, :] @ P[..., :-shift, :, :].copy()
        shift *= 2
    return P


def _final_overlaps(problem: GrapeProblem, xi: np.ndarray):
    U = _step_unitaries(problem, xi)
    P = _prefix_products(U)
    psi_T = P[:, -1, :, 0]
    z = np.exp(-1j * np.asarray(problem.target_phases)) * psi_T[:, 0]
    return U, P, z


def grape_error(problem: GrapeProblem, xi) -> float:
    """``sum_S |1 - <psi_target_S | psi_S(T)>|^2`` with target ``e^{i phi_S}|G>``."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (problem.M,):
        raise ConfigurationError(f"expected {problem.M} phase values, got {xi.shape}")
    _, _, z = _final_overlaps(problem, xi)
    return float(np.sum(np.abs(1 - z) ** 2))


def _step_derivatives(problem: GrapeProblem, xi: np.ndarray, U: np.ndarray, method: str) -> np.ndarray:
    e = np.exp(1j * xi)[None, :]
    if method == "exact":
        # U(xi) = Z U(0) Z^dag with Z = diag(1, e^{-i xi}) gives dU/dxi = -i [n, U]
        dU = np.zeros_like(U)
        dU[..., 0, 1] = 1j * U[..., 0, 1]
        dU[..., 1, 0] = -1j * U[..., 1, 0]
        return dU
    if method != "gauss":
        raise ConfigurationError(f"unknown derivative method {method!r}")
    a = problem.couplings[:, None]
    dt = problem.dt
    dH = np.zeros(U.shape, dtype=complex)
    dH[..., 0, 1] = 1j * a * e
    dH[..., 1, 0] = -1j * a * np.conj(e)

    def partial(t):
        c, s = np.cos(a * t), np.sin(a * t)
        V = np.empty(U.shape, dtype=complex)
        V[..., 0, 0] = c
        V[..., 1, 1] = c
        V[..., 0, 1] = -1j * s * e
        V[..., 1, 0] = -1j * s * np.conj(e)
        return V

    dU = np.zeros_like(U)
    for node in _GAUSS:
        s = node * dt
        dU += partial(dt - s) @ dH @ partial(s)
    return -1j * dt / 2 * dU


def grape_gradient(problem: GrapeProblem, xi, method: str = "exact") -> np.ndarray:
    """Analytic gradient of :func:`grape_error` with respect to every ``xi_k``.

    Forward states and backward co-states come from cached prefix/suffix
    products.  ``dU_k/dxi_k`` is the closed form ``-i [n, U_k]`` by default;
    ``method="gauss"`` applies the two-point Gauss rule to its integral
    representation instead, which is accurate only while ``a_S dt << 1``.
    """
    xi = np.asarray(xi, dtype=float)
    val, grad = _value_and_gradient(problem, xi, method)
    return grad


def _value_and_gradient(problem: GrapeProblem, xi: np.ndarray, method: str = "exact"):
    U, P, z = _final_overlaps(problem, xi)
    n, M = U.shape[:2]
    # forward states before step k: f[k] = U_{k-1}..U_0 |G>
    fwd = np.empty((n, M, 2), dtype=complex)
    fwd[:, 0] = [1.0, 0.0]
    fwd[:, 1:] = P[:, :-1, :, 0]
    # backward bras after step k: b[k] = <target| U_{M-1}..U_{k+1}
    Ur = U[:, ::-1].conj().swapaxes(-1, -2)  # daggers in reverse order
    Q = _prefix_products(Ur)  # Q[j] = U_{M-1-j}^dag ... U_{M-1}^dag
    target = np.zeros((n, 2), dtype=complex)
    target[:, 0] = np.exp(1j * np.asarray(problem.target_phases))
    bwd = np.empty((n, M, 2), dtype=complex)
    bwd[:, M - 1] = target
    bwd[:, :M - 1] = np.einsum("njab,nb->nja", Q[:, :M - 1], target)[:, ::-1]
    dU = _step_derivatives(problem, xi, U, method)
    dz = np.einsum("nka,nkab,nkb->nk", bwd.conj(), dU, fwd)
    grad = -2 * np.real(np.conj(1 - z)[:, None] * dz).sum(axis=0)
    return float(np.sum(np.abs(1 - z) ** 2)), grad


def grape_optimize(problem: GrapeProblem, xi0=None, seed: int | None = None,
                   method: str = "exact", maxiter: int = 4000,
                   stop_error: float | None = None) -> GrapeResult:
    """Quasi-Newton (BFGS) minimisation of :func:`grape_error`.

    Stops on gradient norm < 1e-12, relative parameter step < 1e-15 or
    ``maxiter`` iterations.  A run that exhausts ``maxiter`` within a factor
    1000 of the threshold is restarted from its best point, at most twice.
    A failed line search returns the best iterate with
    ``converged`` decided by the threshold alone.  Iteration also ends once
    the error drops below ``stop_error`` (default: threshold / 1000).
    """
    if xi0 is None:
        xi0 = np.random.default_rng(seed).uniform(0, 2 * np.pi, problem.M)
    xi0 = np.asarray(xi0, dtype=float)
    if xi0.shape != (problem.M,):
        raise ConfigurationError(f"initial guess must have {problem.M} entries")
    stop_at = problem.threshold * 1e-3 if stop_error is None else stop_error

    best = {"err": np.inf, "xi": xi0.copy()}

    def fun(x):
        v, g = _value_and_gradient(problem, x, method)
        if v < best["err"]:
            best["err"], best["xi"] = v, x.copy()
        return v, g

    def callback(intermediate_result):
        # deep below threshold further BFGS steps only polish rounding noise
        if intermediate_result.fun < stop_at:
            raise StopIteration

    options = {"gtol": 1e-12, "xrtol": 1e-15, "maxiter": maxiter}
    res = minimize(fun, xi0, jac=True, method="BFGS", callback=callback, options=options)
    nit = int(res.nit)
    # close to T_min the landscape is flat and BFGS can run out of iterations while
    # still descending; restarting resets the inverse-Hessian estimate
    for _ in range(CONTINUATIONS):
        if res.status != 1 or not (stop_at < best["err"] < NEAR_FEASIBLE_FACTOR * problem.threshold):
            break
        res = minimize(fun, best["xi"], jac=True, method="BFGS", callback=callback, options=options)
        nit += int(res.nit)
    xi = best["xi"]
    err = grape_error(problem, xi)
    return GrapeResult(np.mod(xi, 2 * np.pi), err, err <= THRESHOLD_SLACK * problem.threshold,
                       nit, problem, str(res.message))


def grape_best_of(problem: GrapeProblem, restarts: int = 4, seed: int = 0, xi0=None,
                  method: str = "exact", stop_error: float | None = None) -> GrapeResult:
    """Run BFGS from ``xi0`` (if given) and from random guesses; keep the best."""
    rng = np.random.default_rng(seed)
    best = None
    guesses = ([np.asarray(xi0)] if xi0 is not None else []) + \
        [rng.uniform(0, 2 * np.pi, problem.M) for _ in range(restarts)]
    for g in guesses:
        r = grape_optimize(problem, g, method=method, stop_error=stop_error)
        if best is None or r.error < best.error:
            best = r
        if best.converged:
            break
    return best


# ----------------------------------------------------------------------------
# time-optimal scans
# ----------------------------------------------------------------------------

@dataclass
class ScanResult:
    T_min: float | None
    result: GrapeResult | None
    curve: list = field(default_factory=list)  # (T, Err_min) pairs
    best_error: float = np.inf

    @property
    def feasible(self) -> bool:
        return self.T_min is not None


def time_optimal_scan(template: GrapeProblem, T_grid: Sequence[float], restarts: int = 3,
                      seed: int = 0, patience: int = 2, refine: float | None = 1e-3,
                      xi0=None) -> ScanResult:
    """Warm-started descending scan for the shortest feasible duration.

    Each grid point starts from the previous optimum (then random restarts on
    failure).  After ``patience`` consecutive infeasible points the scan stops
    and the gap below the last feasible T is bisected down to ``refine/Omega``.
    """
    T_grid = [float(t) for t in T_grid]
    if not T_grid:
        raise ConfigurationError("empty T grid")
    if any(b >= a for a, b in zip(T_grid, T_grid[1:])):
        raise ConfigurationError("T grid must be strictly descending")
    out = ScanResult(None, None)
    warm = xi0
    failures = 0
    last_fail = None
    rng = np.random.default_rng(seed)
    for T in T_grid:
        prob = template.with_T(T)
        r = grape_best_of(prob, restarts=restarts if warm is None else restarts,
                          seed=int(rng.integers(2 ** 31)), xi0=warm)
        out.curve.append((T, r.error))
        out.best_error = min(out.best_error, r.error)
        if r.converged:
            out.T_min, out.result = T, r
            warm = r.xi
            failures = 0
        else:
            failures += 1
            last_fail = T
            if out.T_min is not None and failures >= patience:
                break
    if out.T_min is not None and refine is not None:
        lo = max((t for t in T_grid if t < out.T_min), default=None)
        if lo is not None:
            hi = out.T_min
            while hi - lo > refine / template.omega:
                mid = 0.5 * (hi + lo)
                r = grape_best_of(template.with_T(mid), restarts=restarts,
                                  seed=int(rng.integers(2 ** 31)), xi0=out.result.xi)
                out.curve.append((mid, r.error))
                if r.converged:
                    hi, out.T_min, out.result = mid, mid, r
                else:
                    lo = mid
    out.curve.sort()
    return out


def phase_scan(template: GrapeProblem, phase_index: int, phases: Sequence[float],
               T_grid: Sequence[float], **kw) -> list[tuple[float, float | None]]:
    """T_min as a function of one target phase.

    The scan runs in both directions through ``phases`` with warm starts and the
    smaller T_min of the two passes is kept at each point.
    """
    phases = list(phases)
    if not phases:
        raise ConfigurationError("empty phase grid")

    def one_pass(order):
        out = {}
        warm = None
        for k in order:
            ph = list(template.target_phases)
            ph[phase_index] = phases[k]
            res = time_optimal_scan(template.with_phases(ph), T_grid, xi0=warm, **kw)
            out[k] = res.T_min
            warm = res.result.xi if res.result is not None else None
        return out

    fwd = one_pass(range(len(phases)))
    bwd = one_pass(reversed(range(len(phases))))
    best = []
    for k, p in enumerate(phases):
        cands = [t for t in (fwd[k], bwd[k]) if t is not None]
        best.append((p, min(cands) if cands else None))
    return best


# ----------------------------------------------------------------------------
# controllability
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ControllabilityCertificate:
    sizes: tuple
    omega: float
    vandermonde_det: float
    vandermonde_closed_form: float
    lie_dimension: int
    full_dimension: int

    @property
    def controllable(self) -> bool:
        return self.lie_dimension == self.full_dimension and self.vandermonde_det != 0


def _generator(sizes, omega, xi) -> np.ndarray:
    k = len(sizes)
    G = np.zeros((2 * k, 2 * k), dtype=complex)
    for i, S in enumerate(sizes):
        a = np.sqrt(S) * omega / 2
        G[2 * i:2 * i + 2, 2 * i:2 * i + 2] = -1j * a * np.array([[0, np.exp(1j * xi)], [np.exp(-1j * xi), 0]])
    return G


def lie_closure_dimension(generators: Sequence[np.ndarray], tol: float = 1e-9, max_dim: int = 4096) -> int:
    """Dimension of the real Lie algebra generated by anti-Hermitian matrices."""
    def vec(A):
        return np.concatenate([A.real.ravel(), A.imag.ravel()])

    basis_vecs: list[np.ndarray] = []
    elems: list[np.ndarray] = []

    def add(A):
        v = vec(A)
        nv = np.linalg.norm(v)
        if nv == 0:
            return False
        v = v / nv
        for b in basis_vecs:
            v = v - (b @ v) * b
        for b in basis_vecs:  # second pass for stability
            v = v - (b @ v) * b
        r = np.linalg.norm(v)
        if r <= tol:
            return False
        basis_vecs.append(v / r)
        elems.append(A / nv)
        return True

    for g in generators:
        add(g)
    frontier = list(range(len(elems)))
    while frontier and len(elems) < max_dim:
        new = []
        for i in frontier:
            for j in range(len(elems)):
                if i == j:
                    continue
                C = elems[i] @ elems[j] - elems[j] @ elems[i]
                if add(C):
                    new.append(len(elems) - 1)
        frontier = new
    return len(elems)


def controllability_check(sizes: Sequence[int], omega: float = 1.0) -> ControllabilityCertificate:
    """Vandermonde and Lie-closure certificates for phase-only control of the superatoms."""
    sizes = tuple(int(s) for s in sizes)
    if not sizes or any(s < 1 for s in sizes):
        raise ConfigurationError("sizes must be a non-empty list of integers >= 1")
    a = np.sqrt(np.asarray(sizes, float)) * omega / 2
    k = len(a)
    M = a[:, None] ** (2 * np.arange(1, k + 1)[None, :] - 1)
    det = float(np.linalg.det(M))
    closed = float(np.prod(a) * np.prod([a[j] ** 2 - a[i] ** 2 for i in range(k) for j in range(i + 1, k)]))
    dim = lie_closure_dimension([_generator(sizes, omega, 0.0), _generator(sizes, omega, np.pi / 2)])
    return ControllabilityCertificate(sizes, float(omega), det, closed, dim, 3 * k)
