"""Alternating augmented-Lagrangian design of OFDM sequences and receive filters.

The splitting carries an auxiliary time-domain waveform ``y`` (pinned to
``F^H s`` through dual ``u``) and per-BS mainlobe scalars ``z_m`` (pinned to
``y_m^H h_m`` through duals ``v_m``). One sweep updates y, h, s, z and then the
duals, in that order.

Every quadratic block is block-diagonal over base stations. For a stack of
vectors ``w`` the correlation-energy term contributes the Hermitian Toeplitz
matrix ``T(w)`` with ``T[i, j] = sum_m sum_p w_m[p] conj(w_m[p - (i - j)])``,
which is the same for every BS block, so each y or h update costs M dense
N x N Cholesky solves.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import correlation as corr
from .linalg import DimensionError, SingularSystemError, dft_forward, solve_hpd
from .model import Scenario, check_sequences, papr, random_phase_init, synthesize

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """A subproblem could not be solved."""


@dataclass
class SolverState:
    y: np.ndarray
    h: np.ndarray
    s: np.ndarray
    z: np.ndarray
    u: np.ndarray
    v: np.ndarray
    k: int = 0
    history: list[dict] = field(default_factory=list)
    regularized_solves: int = 0

    def copy(self) -> SolverState:
        return SolverState(
            self.y.copy(), self.h.copy(), self.s.copy(), self.z.copy(), self.u.copy(),
            self.v.copy(), self.k, list(self.history), self.regularized_solves,
        )

    def check(self, sc: Scenario) -> None:
        shape = (sc.m_bs, sc.n_sub)
        for name in ("y", "h", "s", "u"):
            if getattr(self, name).shape != shape:
                raise DimensionError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        for name in ("z", "v"):
            if getattr(self, name).shape != (sc.m_bs,):
                raise DimensionError(f"{name} must have shape ({sc.m_bs},)")


def initial_state(sc: Scenario, s0: np.ndarray | None = None) -> SolverState:
    """Random-phase (or given) sequences, ``y = x``, matched ``h = y``, zero duals."""
    s = random_phase_init(sc) if s0 is None else np.array(s0, dtype=complex)
    check_sequences(s, sc)
    y = synthesize(s)
    h = y.copy()
    z = mainlobe_values(y, h)
    return SolverState(
        y=y, h=h, s=s, z=z, u=np.zeros_like(y), v=np.zeros(sc.m_bs, dtype=complex)
    )


def mainlobe_values(y: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Per-BS ``y_m^H h_m``."""
    return np.einsum("mn,mn->m", y.conj(), h)


def toeplitz_gram(w: np.ndarray) -> np.ndarray:
    """``sum_l E_l (W W^H) E_l^H`` for stacked rows ``w``; Hermitian Toeplitz."""
    w = np.atleast_2d(w)
    n = w.shape[1]
    # column t(d) = sum_m sum_p w_m[p] conj(w_m[p - d]) = r_mm(-d) for d >= 0
    t = np.zeros(n, dtype=complex)
    for row in w:
        t += corr.xcorr_fast(row, row)[n - 1 :: -1]
    return sla.toeplitz(t, t.conj())


def shifted_stack(w: np.ndarray, halfwidth: int) -> np.ndarray:
    """Columns ``E_l w`` for ``l = -halfwidth .. halfwidth`` (shape ``(N, 2i + 1)``)."""
    n = w.shape[0]
    out = np.zeros((n, 2 * halfwidth + 1), dtype=complex)
    for col, lag in enumerate(range(-halfwidth, halfwidth + 1)):
        if lag >= 0:
            out[lag:, col] = w[: n - lag]
        else:
            out[: n + lag, col] = w[-lag:]
    return out


def quadratic_blocks(w: np.ndarray, halfwidth: int, rho_v: float, ridge: float = 0.0) -> list[np.ndarray]:
    """Per-BS Hessian blocks shared by the y and h updates.

    ``2 T(w) - 2 sum_{|l|<=i} (E_l w_m)(E_l w_m)^H + rho_v w_m w_m^H + ridge I``.
    The window is symmetric in ``l``, so ``E_l^H`` terms of the h update are
    the same set of columns.
    """
    base = 2.0 * toeplitz_gram(w)
    blocks = []
    for wm in w:
        sh = shifted_stack(wm, halfwidth)
        blk = base - 2.0 * (sh @ sh.conj().T) + rho_v * np.outer(wm, wm.conj())
        if ridge:
            blk[np.diag_indices_from(blk)] += ridge
        blocks.append(0.5 * (blk + blk.conj().T))
    return blocks


def phi_blocks(state: SolverState, sc: Scenario) -> tuple[list[np.ndarray], np.ndarray]:
    blocks = quadratic_blocks(state.h, sc.mainlobe_halfwidth, sc.rho_v, ridge=sc.rho_u)
    x = synthesize(state.s)
    b = sc.rho_u * (x - state.u) + sc.rho_v * state.h * np.conj(state.z + state.v)[:, None]
    return blocks, b


def psi_blocks(state: SolverState, sc: Scenario) -> tuple[list[np.ndarray], np.ndarray]:
    blocks = quadratic_blocks(state.y, sc.mainlobe_halfwidth, sc.rho_v)
    # stationarity of |w - y_m^H h_m|^2 in h_m gives y_m * w, not y_m * conj(w)
    g = sc.rho_v * state.y * (state.z + state.v)[:, None]
    return blocks, g


def assemble_phi(state: SolverState, sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(Phi, b)`` of dimension MN for the y-subproblem."""
    state.check(sc)
    blocks, b = phi_blocks(state, sc)
    return sla.block_diag(*blocks), b.reshape(-1)


def assemble_psi(state: SolverState, sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(Psi, g)`` of dimension MN for the h-subproblem."""
    state.check(sc)
    blocks, g = psi_blocks(state, sc)
    return sla.block_diag(*blocks), g.reshape(-1)


def _solve_blocks(blocks, rhs, state: SolverState, what: str) -> np.ndarray:
    out = np.empty_like(rhs)
    for m, (blk, r) in enumerate(zip(blocks, rhs)):
        try:
            sol = solve_hpd(blk, r)
        except SingularSystemError as exc:
            raise SolverError(f"{what} system for BS {m} is singular at iteration {state.k}") from exc
        if sol.regularized:
            state.regularized_solves += 1
        out[m] = sol.x
    return out


# keeps projected points inside the feasible set after rounding
_EDGE = 1e-13


def project_power(y: np.ndarray, cap: float) -> np.ndarray:
    """Radially clip every entry to ``|y| <= sqrt(cap)``, keeping its phase."""
    y = y.copy()
    mag = np.abs(y)
    limit = np.sqrt(cap) * (1 - _EDGE)
    over = mag**2 > cap
    y[over] *= limit / mag[over]
    return y


def solve_y_unconstrained(state: SolverState, sc: Scenario) -> np.ndarray:
    blocks, b = phi_blocks(state, sc)
    return _solve_blocks(blocks, b, state, "y")


def update_y(state: SolverState, sc: Scenario) -> np.ndarray:
    """KKT solve of the y-subproblem followed by the per-sample power projection."""
    return project_power(solve_y_unconstrained(state, sc), sc.papr_cap)


def update_h(state: SolverState, sc: Scenario) -> np.ndarray:
    blocks, g = psi_blocks(state, sc)
    return _solve_blocks(blocks, g, state, "h")


def update_s(state: SolverState, sc: Scenario) -> np.ndarray:
    """Closest spectrally-masked unit-modulus sequence to ``y + u``."""
    f = dft_forward(state.y + state.u)
    s = np.exp(1j * np.angle(f))
    s[:, ~sc.active_mask] = 0.0
    return s


def project_mainlobe(z: np.ndarray, gamma: float) -> np.ndarray:
    """Euclidean projection onto ``{|z| >= gamma}``; zero maps to ``gamma``."""
    z = np.asarray(z, dtype=complex).copy()
    mag = np.abs(z)
    small = mag < gamma
    zero = mag == 0
    z[small & ~zero] *= gamma * (1 + _EDGE) / mag[small & ~zero]
    z[zero] = gamma * (1 + _EDGE)
    return z


def update_z(state: SolverState, sc: Scenario) -> np.ndarray:
    return project_mainlobe(mainlobe_values(state.y, state.h) - state.v, sc.gamma)


def update_duals(state: SolverState, sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    u = state.u + state.y - synthesize(state.s)
    v = state.z - mainlobe_values(state.y, state.h) + state.v
    return u, v


def objective(y: np.ndarray, h: np.ndarray, halfwidth: int) -> float:
    """Correlation energy of ``(y, h)`` outside the auto mainlobe regions."""
    return corr.isl_objective(corr.profile(y, h), halfwidth)


def augmented_lagrangian(state: SolverState, sc: Scenario) -> float:
    x = synthesize(state.s)
    value = objective(state.y, state.h, sc.mainlobe_halfwidth)
    value += 0.5 * sc.rho_u * float(np.sum(np.abs(state.y - x + state.u) ** 2))
    gap = state.z - mainlobe_values(state.y, state.h) + state.v
    value += 0.5 * sc.rho_v * float(np.sum(np.abs(gap) ** 2))
    return value


def lagrangian_gradients(state: SolverState, sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Gradients ``dL/dRe + j dL/dIm`` with respect to y and to h.

    These equal ``Phi y - b`` and ``Psi h - g`` (twice the Wirtinger
    derivatives with respect to the conjugates).
    """
    pb, b = phi_blocks(state, sc)
    qb, g = psi_blocks(state, sc)
    gy = np.stack([blk @ ym for blk, ym in zip(pb, state.y)]) - b
    gh = np.stack([blk @ hm for blk, hm in zip(qb, state.h)]) - g
    return gy, gh


def residuals(state: SolverState, sc: Scenario) -> dict:
    x = synthesize(state.s)
    diff = state.y - x
    zgap = np.abs(state.z - mainlobe_values(state.y, state.h))
    return {
        "waveform": float(np.linalg.norm(diff) / np.linalg.norm(x)),
        "waveform_rms": float(np.linalg.norm(diff) / np.sqrt(diff.size)),
        "mainlobe": float(np.max(zgap) / sc.gamma),
    }


def step(state: SolverState, sc: Scenario, track_blocks: bool = False) -> SolverState:
    """One full sweep y -> h -> s -> z -> duals, updating ``state`` in place."""
    state.k += 1
    trace = {}
    if track_blocks:
        trace["start"] = augmented_lagrangian(state, sc)
    y_unc = solve_y_unconstrained(state, sc)
    if track_blocks:
        trial = state.copy()
        trial.y = y_unc
        trace["y_unconstrained"] = augmented_lagrangian(trial, sc)
    state.y = project_power(y_unc, sc.papr_cap)
    if track_blocks:
        trace["y"] = augmented_lagrangian(state, sc)
    state.h = update_h(state, sc)
    if track_blocks:
        trace["h"] = augmented_lagrangian(state, sc)
    state.s = update_s(state, sc)
    if track_blocks:
        trace["s"] = augmented_lagrangian(state, sc)
    state.z = update_z(state, sc)
    if track_blocks:
        trace["z"] = augmented_lagrangian(state, sc)
    state.u, state.v = update_duals(state, sc)

    record = {"k": state.k, "objective": objective(state.y, state.h, sc.mainlobe_halfwidth)}
    record["lagrangian"] = augmented_lagrangian(state, sc)
    record.update({f"residual_{k}": v for k, v in residuals(state, sc).items()})
    if track_blocks:
        record["blocks"] = trace
    state.history.append(record)
    return state


@dataclass
class DesignResult:
    scenario: Scenario
    s: np.ndarray
    x: np.ndarray
    h: np.ndarray
    y: np.ndarray
    z: np.ndarray
    metrics: corr.SidelobeMetrics
    converged: bool
    iterations: int
    residuals: dict
    history: list[dict]
    regularized_solves: int = 0

    @property
    def profile(self) -> corr.CorrelationProfile:
        return corr.profile(self.x, self.h)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "converged": self.converged,
            "iterations": self.iterations,
            "residuals": self.residuals,
            "regularized_solves": self.regularized_solves,
            "papr_y": [float(v) for v in papr(self.y, self.scenario)],
            "metrics": self.metrics.to_dict(),
            "s": [interleave(row) for row in self.s],
            "h": [interleave(row) for row in self.h],
            "z": interleave(self.z),
            "history": self.history,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def interleave(v: np.ndarray) -> list[float]:
    """``[re0, im0, re1, im1, ...]``."""
    v = np.asarray(v, dtype=complex)
    out = np.empty(2 * v.size)
    out[0::2] = v.real
    out[1::2] = v.imag
    return out.tolist()


def deinterleave(values) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim != 1 or a.size % 2:
        raise ValueError("interleaved array must have even length")
    return a[0::2] + 1j * a[1::2]


def solve(
    sc: Scenario,
    s0: np.ndarray | None = None,
    track_blocks: bool = False,
    callback=None,
) -> DesignResult:
    """Run the alternating design loop until both relative residuals drop below
    ``sc.tol_primal`` or ``sc.max_iters`` sweeps have been made."""
    state = initial_state(sc, s0)
    converged = False
    for _ in range(sc.max_iters):
        step(state, sc, track_blocks=track_blocks)
        rec = state.history[-1]
        if callback is not None:
            callback(state, rec)
        if rec["residual_waveform"] < sc.tol_primal and rec["residual_mainlobe"] < sc.tol_primal:
            converged = True
            break
    if not converged:
        log.warning("design did not converge in %d iterations", sc.max_iters)
    return finalize(state, sc, converged)


def finalize(state: SolverState, sc: Scenario, converged: bool) -> DesignResult:
    x = synthesize(state.s)
    return DesignResult(
        scenario=sc,
        s=state.s,
        x=x,
        h=state.h,
        y=state.y,
        z=state.z,
        metrics=corr.metrics(x, state.h, sc),
        converged=converged,
        iterations=state.k,
        residuals=residuals(state, sc),
        history=state.history,
        regularized_solves=state.regularized_solves,
    )


def load_result(data: dict) -> tuple[Scenario, np.ndarray, np.ndarray]:
    """Recover ``(scenario, x, h)`` from a result document."""
    from .model import scenario_from_dict

    sc = scenario_from_dict(data["scenario"])
    s = np.stack([deinterleave(row) for row in data["s"]])
    h = np.stack([deinterleave(row) for row in data["h"]])
    if s.shape != (sc.m_bs, sc.n_sub) or h.shape != s.shape:
        raise DimensionError("result arrays do not match the scenario echo")
    return sc, synthesize(s), h
