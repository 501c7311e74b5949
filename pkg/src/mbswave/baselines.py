"""Reference designs: matched filtering of a given or random-phase sequence set."""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import correlation as corr
from .model import Scenario, check_sequences, random_phase_init, synthesize


class BaselineKind(str, Enum):
    MATCHED_FILTER = "matched_filter"
    RANDOM_PHASE_MATCHED = "random_phase_matched"


def matched_filter(x) -> np.ndarray:
    """Receive filters equal to the transmit waveforms."""
    return np.array(x, dtype=complex, copy=True)


def baseline_design(
    sc: Scenario, kind: BaselineKind | str, seed: int | None = None, s: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(s, x, h)`` for a baseline.

    ``matched_filter`` filters the supplied sequences ``s`` (the random-phase
    start for ``seed`` when none are given); ``random_phase_matched`` always
    draws fresh random phases from ``seed``.
    """
    kind = BaselineKind(kind)
    if kind is BaselineKind.RANDOM_PHASE_MATCHED or s is None:
        s = random_phase_init(sc, seed)
    else:
        s = np.asarray(s, dtype=complex)
        check_sequences(s, sc)
    x = synthesize(s)
    return s, x, matched_filter(x)


def baseline_metrics(
    sc: Scenario, kind: BaselineKind | str, seed: int | None = None, s: np.ndarray | None = None
) -> corr.SidelobeMetrics:
    _, x, h = baseline_design(sc, kind, seed, s)
    return corr.metrics(x, h, sc)
