"""Continuous diffusion systems: heat, scalar-stalk sheaf, and lying dynamics.

The lying generator L~sym (Z + I) is generally non-symmetric, so its
spectrum may be complex; its real parts are verified non-negative via the
spectrum itself and, independently, via diagonal dominance of the
unnormalized counterpart.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ContractError, IntegrationError, NumericalError
from .graph import Graph, NormalizedOperators, chain_graph, normalize_adjacency
from .numerics.eig import eig_dense

DIFFUSION_KINDS = ("heat", "heat-normalized", "sheaf-scalar", "lying")

_COND_CAP = 1e8  # eigenvector conditioning above this falls back to rk4


@dataclass
class DiffusionSystem:
    kind: str
    M: np.ndarray
    alpha: float = 1.0
    restrictions: list | None = None  # sheaf-scalar: per-edge (f_u, f_v)
    Z: np.ndarray | None = None  # lying: opinion-weight matrix

    def __post_init__(self):
        if self.kind not in DIFFUSION_KINDS:
            raise ConfigurationError(f"unknown diffusion kind {self.kind!r}")
        if self.alpha <= 0:
            raise ConfigurationError(f"rate must be positive, got {self.alpha}")
        self.M = np.asarray(self.M, dtype=np.float64)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)
    solver: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.states = np.asarray(self.states, dtype=np.float64)
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ContractError("time grid must be strictly increasing")
        if self.states.shape[0] != len(self.times):
            raise ContractError("one state per time point required")

    def write_csv(self, path):
        n = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"h_{i + 1}" for i in range(n)])
            for t, row in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in row])


def heat_system(g: Graph, alpha: float = 1.0) -> DiffusionSystem:
    """dh/dt = -alpha (D - A) h."""
    A = g.adjacency_dense()
    return DiffusionSystem("heat", np.diag(A.sum(axis=1)) - A, alpha)


def heat_normalized_system(g: Graph, alpha: float = 1.0) -> DiffusionSystem:
    return DiffusionSystem("heat-normalized", normalize_adjacency(g).L_sym.to_dense(), alpha)


def sheaf_system(g: Graph, restrictions, alpha: float = 1.0) -> DiffusionSystem:
    """Scalar-stalk sheaf Laplacian from per-edge restriction pairs aligned with g.edges."""
    if len(restrictions) != g.n_edges:
        raise ConfigurationError(f"{len(restrictions)} restriction pairs for {g.n_edges} edges")
    L = np.zeros((g.n_nodes, g.n_nodes))
    for (u, v), (fu, fv) in zip(g.edges, restrictions):
        L[u, u] += fu * fu
        L[v, v] += fv * fv
        L[u, v] -= fu * fv
        L[v, u] -= fu * fv
    return DiffusionSystem("sheaf-scalar", L, alpha, restrictions=list(restrictions))


def build_lying_E(ops: NormalizedOperators, Z) -> np.ndarray:
    """E = L~sym (Z + I) elementwise; Z lives on directed edges, zero elsewhere."""
    Z = np.asarray(Z, dtype=np.float64)
    n = ops.S.n_rows
    if Z.shape != (n, n):
        raise ConfigurationError(f"weight matrix shape {Z.shape} does not match {n} nodes")
    if np.any(np.diag(Z) != 0.0):
        raise ContractError("weight matrix must have a zero diagonal")
    if np.abs(Z).max() > 1.0 + 1e-12:
        raise ConfigurationError("weights must lie in [-1, 1]")
    S_dense = ops.S.to_dense()
    off_edges = (S_dense == 0.0) & (Z != 0.0)
    if off_edges.any():
        u, v = np.argwhere(off_edges)[0]
        raise ContractError(f"weight on non-edge ({u}, {v})")
    L = np.eye(n) - S_dense
    return L * (Z + np.eye(n))


def lying_system(g: Graph, Z, alpha: float = 1.0, ops: NormalizedOperators | None = None) -> DiffusionSystem:
    ops = ops if ops is not None else normalize_adjacency(g)
    return DiffusionSystem("lying", build_lying_E(ops, Z), alpha, Z=np.asarray(Z, dtype=np.float64))


@dataclass
class SpectrumReport:
    min_re: float
    min_nonzero_re: float | None
    n_complex_pairs: int
    gershgorin_ok: bool
    passed: bool


def verify_proposition1(E) -> SpectrumReport:
    """Check Re(lambda) >= 0 (strictly for nonzero lambda) plus the dominance route.

    The unnormalized counterpart B = D~^(1/2) E D~^(1/2) has diagonal g_u and
    off-diagonal row sums bounded by g_u, so its Gershgorin disks sit in the
    closed right half plane; both routes must agree.
    """
    E = np.asarray(E, dtype=np.float64)
    n = E.shape[0]
    diag = np.diag(E)
    if np.any(diag >= 1.0):
        raise ContractError("diagonal of a lying generator stays below 1")
    aug = 1.0 / (1.0 - diag)  # g~_u, exact for matrices built by build_lying_E
    scale = np.sqrt(aug)
    B = scale[:, None] * E * scale[None, :]

    off = np.abs(B) - np.diag(np.abs(np.diag(B)))
    np.fill_diagonal(off, 0.0)
    radii = off.sum(axis=1)
    g_u = aug - 1.0
    gershgorin_ok = bool(
        np.all(radii <= g_u + 1e-9) and np.all(np.abs(np.diag(B) - g_u) <= 1e-9)
    )

    vals = eig_dense(E, want_vectors=False).values
    nonzero = vals[np.abs(vals) > 1e-9]
    min_re = float(vals.real.min()) if len(vals) else 0.0
    min_nonzero_re = float(nonzero.real.min()) if len(nonzero) else None
    spectral_ok = min_re >= -1e-9 and (min_nonzero_re is None or min_nonzero_re > 1e-9)
    n_complex_pairs = int((vals.imag > 1e-9).sum())
    return SpectrumReport(
        min_re=min_re,
        min_nonzero_re=min_nonzero_re,
        n_complex_pairs=n_complex_pairs,
        gershgorin_ok=gershgorin_ok,
        passed=bool(spectral_ok and gershgorin_ok),
    )


def _rk4_states(M: np.ndarray, alpha: float, h0: np.ndarray, times: np.ndarray, max_dt: float = 1e-3):
    """RK4 sampled exactly on an arbitrary strictly-increasing grid."""
    states = np.empty((len(times), len(h0)))
    h = h0.astype(np.float64).copy()
    t_prev = times[0]
    states[0] = h
    for k in range(1, len(times)):
        span = times[k] - t_prev
        steps = max(1, int(np.ceil(span / max_dt)))
        dt = span / steps
        for s in range(steps):
            h = _rk4_step(M, alpha, h, dt)
            if not np.isfinite(h).all():
                raise IntegrationError(f"non-finite state at t={t_prev + (s + 1) * dt:.6g}")
        t_prev = times[k]
        states[k] = h
    return states


def _rk4_step(M, alpha, h, dt):
    def f(x):
        return -alpha * (M @ x)

    k1 = f(h)
    k2 = f(h + 0.5 * dt * k1)
    k3 = f(h + 0.5 * dt * k2)
    k4 = f(h + dt * k3)
    return h + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def solve_rk4(sys: DiffusionSystem, h0, dt: float, steps: int) -> Trajectory:
    """Classical 4th-order Runge-Kutta on dh/dt = -alpha M h."""
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    h0 = np.asarray(h0, dtype=np.float64).reshape(-1)
    times = dt * np.arange(steps + 1)
    states = np.empty((steps + 1, len(h0)))
    states[0] = h0
    h = h0.copy()
    for k in range(1, steps + 1):
        h = _rk4_step(sys.M, sys.alpha, h, dt)
        if not np.isfinite(h).all():
            raise IntegrationError(f"non-finite state at step {k} (t={k * dt:.6g})")
        states[k] = h
    return Trajectory(times, states, "rk4")


def solve_closed_form(sys: DiffusionSystem, h0, times) -> Trajectory:
    """Spectral solution h(t) = sum_i c_i exp(-alpha lambda_i t) u_i."""
    h0 = np.asarray(h0, dtype=np.float64).reshape(-1)
    times = np.asarray(times, dtype=np.float64)
    spec = eig_dense(sys.M)
    U = spec.vectors
    cond = np.linalg.cond(U)
    if not np.isfinite(cond) or cond >= _COND_CAP:
        warnings.warn(
            f"eigenvector matrix condition {cond:.3g} exceeds {_COND_CAP:.0e}; "
            "matrix treated as near-defective, falling back to rk4",
            stacklevel=2,
        )
        return Trajectory(times, _rk4_states(sys.M, sys.alpha, h0, times), "rk4")
    c = np.linalg.solve(U, h0.astype(np.complex128))
    decay = np.exp(-sys.alpha * np.outer(times, spec.values))  # (K, n)
    states_c = (U @ (c[None, :] * decay).T).T
    worst_imag = float(np.abs(states_c.imag).max()) if states_c.size else 0.0
    if worst_imag > 1e-8:
        raise NumericalError(f"imaginary residue {worst_imag:.3g} exceeds 1e-8")
    return Trajectory(times, states_c.real, "closed-form")


FIG1_H0 = np.array([1.0, 0.5, -0.5])
FIG1_SHEAF_WEIGHTS = (-1.0, 1.0)  # discourse signs on edges (u1,u2) and (u2,u3)


def fig1_lying_Z() -> np.ndarray:
    """Three-node chain where the middle agent lies to the first, and only there.

    The half-strength second channel avoids the defective all-unit case
    (eigenvalues {1/2, 1/2, 2/3}, no oscillation) while keeping the single
    negative directed weight; the spectrum gains a conjugate pair 7/12 +/- wi.
    """
    Z = np.zeros((3, 3))
    Z[0, 1] = -1.0  # message u2 -> u1 carries the opposite opinion
    Z[1, 0] = 1.0
    Z[1, 2] = 0.5
    Z[2, 1] = 0.5
    return Z


def fig1_systems() -> dict[str, DiffusionSystem]:
    g = chain_graph(3)
    w12, w23 = FIG1_SHEAF_WEIGHTS
    return {
        "heat": heat_system(g),
        "sheaf": sheaf_system(g, [(1.0, w12), (1.0, w23)]),
        "lying": lying_system(g, fig1_lying_Z()),
    }


def _oscillation_witness(traj: Trajectory) -> bool:
    """Some initially-smaller component overtakes a larger one at some grid time."""
    h0 = traj.states[0]
    n = len(h0)
    for i in range(n):
        for j in range(n):
            if h0[i] < h0[j] and np.any(traj.states[:, i] > traj.states[:, j]):
                return True
    return False


def reproduce_figure1(out_dir, h0=None, t_max: float = 50.0, n_points: int = 1001) -> dict:
    """Chain-of-three traces for all three diffusions plus their qualitative checks."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h0 = FIG1_H0.copy() if h0 is None else np.asarray(h0, dtype=np.float64)
    times = np.linspace(0.0, t_max, n_points)
    systems = fig1_systems()

    report: dict = {"h0": h0.tolist(), "t_max": t_max, "checks": {}, "solver_gap": {}}
    trajectories = {}
    for name, sys in systems.items():
        traj = solve_closed_form(sys, h0, times)
        traj.write_csv(out_dir / f"{name}.csv")
        trajectories[name] = traj
        rk = Trajectory(times, _rk4_states(sys.M, sys.alpha, h0, times), "rk4")
        rk.write_csv(out_dir / f"{name}_rk4.csv")
        report["solver_gap"][name] = float(np.abs(traj.states - rk.states).max())

    heat_final = trajectories["heat"].states[-1]
    report["checks"]["heat_consensus"] = bool(
        np.ptp(heat_final) <= 1e-6 and np.abs(heat_final - h0.mean()).max() <= 1e-6
    )
    report["checks"]["heat_sign_uniform"] = bool(
        np.all(heat_final > 0) or np.all(heat_final < 0)
    )

    sheaf_final = trajectories["sheaf"].states[-1]
    w12, w23 = FIG1_SHEAF_WEIGHTS
    consensus_gap = max(
        abs(1.0 * sheaf_final[0] - w12 * sheaf_final[1]),
        abs(1.0 * sheaf_final[1] - w23 * sheaf_final[2]),
    )
    report["checks"]["sheaf_discourse_consensus"] = bool(consensus_gap <= 1e-6)
    report["checks"]["sheaf_sign_divergence"] = bool(
        np.sign(sheaf_final[0]) != np.sign(sheaf_final[1]) and sheaf_final[0] != 0.0
    )

    lying = trajectories["lying"]
    at_10 = lying.states[np.searchsorted(times, 10.0)]
    report["checks"]["lying_decay"] = bool(
        np.linalg.norm(at_10) < 1e-2 * np.linalg.norm(h0)
    )
    early = Trajectory(times[times <= 10.0], lying.states[times <= 10.0], lying.solver)
    report["checks"]["lying_oscillation_witness"] = _oscillation_witness(early)

    report["passed"] = all(report["checks"].values())
    return report
