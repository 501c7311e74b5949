"""Scenario definition, subcarrier masks and waveform synthesis.

Stacked per-BS quantities are carried as complex arrays of shape ``(M, N)``;
row ``m`` is base station ``m``. Subcarrier indices are 0-based.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import DimensionError, dft_adjoint


class ScenarioError(ValueError):
    """Scenario field is missing, unknown, or violates an invariant."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


# Contiguous blocked band used in the reproduction scenario (38 carriers at N=256).
DEFAULT_BLOCKED_BAND = (105, 142)


@dataclass(frozen=True)
class Scenario:
    """Problem constants for one joint waveform/filter design.

    ``gamma`` may be left as ``None``; it then resolves to 90% of the
    matched-filter mainlobe energy, ``0.9 * (N - |blocked|) / N``.
    """

    m_bs: int = 2
    n_sub: int = 256
    blocked: tuple[int, ...] = tuple(range(DEFAULT_BLOCKED_BAND[0], DEFAULT_BLOCKED_BAND[1] + 1))
    gamma: float | None = None
    eta: float = 1.5
    mainlobe_halfwidth: int = 2
    rho_u: float = 3000.0
    rho_v: float = 10.0
    max_iters: int = 500
    tol_primal: float = 1e-4
    seed: int = 0
    require_mask: bool = False

    _active: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        blocked = tuple(sorted({int(b) for b in self.blocked}))
        object.__setattr__(self, "blocked", blocked)
        validate(self)
        active = np.ones(self.n_sub, dtype=bool)
        active[list(blocked)] = False
        active.setflags(write=False)
        object.__setattr__(self, "_active", active)
        if self.gamma is None:
            object.__setattr__(self, "gamma", 0.9 * self.n_active / self.n_sub)

    @property
    def active_mask(self) -> np.ndarray:
        """Boolean mask of usable subcarriers, shape ``(N,)``."""
        return self._active

    @property
    def n_active(self) -> int:
        return self.n_sub - len(self.blocked)

    @property
    def avg_power(self) -> float:
        """Mean per-sample power of a unit-modulus masked waveform, (N - |blocked|) / N**2."""
        return self.n_active / self.n_sub**2

    @property
    def papr_cap(self) -> float:
        """Per-sample power ceiling ``eta * P``."""
        return self.eta * self.avg_power

    def replace(self, **changes) -> Scenario:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.init} | {
            "blocked": list(self.blocked)
        }


def validate(sc: Scenario) -> Scenario:
    """Check every scenario invariant, raising :class:`ScenarioError` naming the field."""
    for name in ("m_bs", "n_sub", "mainlobe_halfwidth", "max_iters", "seed"):
        value = getattr(sc, name)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ScenarioError(name, f"must be an integer, got {value!r}")
    if sc.m_bs < 1:
        raise ScenarioError("m_bs", "must be >= 1")
    if sc.n_sub < 2:
        raise ScenarioError("n_sub", "must be >= 2")
    for b in sc.blocked:
        if not 0 <= b < sc.n_sub:
            raise ScenarioError("blocked", f"index {b} outside 0..{sc.n_sub - 1}")
    if len(sc.blocked) >= sc.n_sub:
        raise ScenarioError("blocked", "at least one subcarrier must remain active")
    if sc.require_mask and not sc.blocked:
        raise ScenarioError("blocked", "a non-empty mask is required")
    if not np.isfinite(sc.eta) or sc.eta < 1:
        raise ScenarioError("eta", "eta must be >= 1")
    if sc.gamma is not None and not (np.isfinite(sc.gamma) and sc.gamma > 0):
        raise ScenarioError("gamma", "gamma must be > 0")
    if not 0 <= sc.mainlobe_halfwidth < sc.n_sub:
        raise ScenarioError("mainlobe_halfwidth", f"must satisfy 0 <= i < {sc.n_sub}")
    for name in ("rho_u", "rho_v"):
        if not (np.isfinite(getattr(sc, name)) and getattr(sc, name) > 0):
            raise ScenarioError(name, "penalty must be > 0")
    if sc.max_iters < 1:
        raise ScenarioError("max_iters", "must be >= 1")
    if not (np.isfinite(sc.tol_primal) and sc.tol_primal > 0):
        raise ScenarioError("tol_primal", "must be > 0")
    return sc


SCENARIO_FIELDS = {
    f.name: f for f in dataclasses.fields(Scenario) if f.init
}


def _coerce(name: str, value):
    if name == "blocked":
        if isinstance(value, str):
            return parse_index_set(value)
        if not isinstance(value, (list, tuple)):
            raise ScenarioError(name, "must be a list of subcarrier indices")
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ScenarioError(name, "indices must be integers")
        return tuple(value)
    if name == "require_mask":
        if isinstance(value, str):
            return value.lower() in ("1", "true", "yes")
        return bool(value)
    if name in ("m_bs", "n_sub", "mainlobe_halfwidth", "max_iters", "seed"):
        try:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        except (TypeError, ValueError):
            raise ScenarioError(name, f"must be an integer, got {value!r}") from None
    if name == "gamma" and value in (None, "null", "none", "None"):
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ScenarioError(name, f"must be a number, got {value!r}") from None


def parse_index_set(text: str) -> tuple[int, ...]:
    """Parse ``"105-142,200"`` style index lists (ranges inclusive)."""
    out: list[int] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ScenarioError("blocked", f"cannot parse index range {part!r}") from None
    return tuple(out)


def scenario_from_dict(data: dict, overrides: dict | None = None) -> Scenario:
    """Build a scenario from a JSON-like mapping; unknown keys are rejected.

    ``blocked`` accepts an explicit index list, or a ``{"start": a, "stop": b}``
    mapping describing the inclusive contiguous band ``a..b``.
    """
    merged = dict(data)
    merged.update(overrides or {})
    unknown = sorted(set(merged) - set(SCENARIO_FIELDS))
    if unknown:
        raise ScenarioError(unknown[0], "unknown scenario key")
    kwargs = {}
    for name, value in merged.items():
        if name == "blocked" and isinstance(value, dict):
            if set(value) != {"start", "stop"}:
                raise ScenarioError("blocked", "range form needs exactly 'start' and 'stop'")
            value = list(range(int(value["start"]), int(value["stop"]) + 1))
        kwargs[name] = _coerce(name, value)
    return Scenario(**kwargs)


def load_scenario(path, overrides: dict | None = None) -> Scenario:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError("<file>", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ScenarioError("<file>", "scenario must be a JSON object")
    return scenario_from_dict(data, overrides)


def random_phase_init(sc: Scenario, seed: int | None = None) -> np.ndarray:
    """Unit-modulus random phases on active carriers, zeros on blocked ones."""
    rng = np.random.default_rng(sc.seed if seed is None else seed)
    theta = rng.uniform(0.0, 2 * np.pi, size=(sc.m_bs, sc.n_sub))
    s = np.exp(1j * theta)
    s[:, ~sc.active_mask] = 0.0
    return s


def check_sequences(s: np.ndarray, sc: Scenario, atol: float = 1e-12) -> None:
    """Raise ``ValueError`` unless ``s`` satisfies the spectrum constraint."""
    s = np.asarray(s)
    if s.shape != (sc.m_bs, sc.n_sub):
        raise DimensionError(f"expected shape {(sc.m_bs, sc.n_sub)}, got {s.shape}")
    if np.any(s[:, ~sc.active_mask] != 0):
        raise ValueError("blocked subcarriers must be exactly zero")
    if np.any(np.abs(np.abs(s[:, sc.active_mask]) - 1) > atol):
        raise ValueError("active subcarriers must be unit modulus")


def synthesize(s) -> np.ndarray:
    """Time-domain waveforms ``x_m = F^H s_m`` for every BS row of ``s``."""
    s = np.asarray(s, dtype=complex)
    if s.ndim not in (1, 2):
        raise DimensionError(f"expected (M, N) or (N,) sequences, got shape {s.shape}")
    return dft_adjoint(s)


def papr(x, sc: Scenario) -> np.ndarray:
    """Per-BS ``max_n |x_m(n)|^2 / P`` against the scenario's derived average power."""
    x = np.atleast_2d(np.asarray(x))
    return np.max(np.abs(x) ** 2, axis=1) / sc.avg_power
