"""Correlation between transmit waveforms and receive filters.

Lag ``l`` runs over ``-(N-1) .. N-1`` and is stored at array index
``l + N - 1``. The correlation of ``a`` against ``b`` is

    r(l) = sum_k conj(a[k]) * b[k - l] = a^H E_l b,

where ``E_l`` has ones where row - column == l. With ``a = x_m`` and
``b = h_m`` the zero-lag value is the mainlobe gain ``x_m^H h_m``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.fft

from .linalg import DimensionError
from .model import papr


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 1 or a.shape != b.shape:
        raise DimensionError(f"need two equal-length vectors, got {a.shape} and {b.shape}")
    return a, b


def lags(n: int) -> np.ndarray:
    return np.arange(-(n - 1), n)


def shift_matrix(n: int, lag: int) -> np.ndarray:
    """Dense ``E_l``: entry (i, j) is 1 when ``i - j == lag``."""
    return np.eye(n, k=-lag)


def xcorr_direct(a, b) -> np.ndarray:
    """O(N^2) evaluation of ``r(l) = sum_k conj(a[k]) b[k - l]``."""
    a, b = _pair(a, b)
    n = a.shape[0]
    ac = a.conj()
    out = np.empty(2 * n - 1, dtype=complex)
    for lag in range(-(n - 1), n):
        if lag >= 0:
            out[lag + n - 1] = np.dot(ac[lag:], b[: n - lag])
        else:
            out[lag + n - 1] = np.dot(ac[: n + lag], b[-lag:])
    return out


def xcorr_fast(a, b) -> np.ndarray:
    """Same quantity as :func:`xcorr_direct` via zero-padded FFTs."""
    a, b = _pair(a, b)
    n = a.shape[0]
    size = scipy.fft.next_fast_len(2 * n - 1)
    c = scipy.fft.ifft(np.conj(scipy.fft.fft(a, size)) * scipy.fft.fft(b, size))
    # c[q] = sum_k conj(a[k]) b[k + q] (circular), so r(l) = c[-l]
    return c[(-lags(n)) % size]


@dataclass(frozen=True)
class CorrelationProfile:
    """``values[m1, m2]`` holds ``r_{m1 m2}(l)`` of waveform m1 against filter m2."""

    values: np.ndarray

    @property
    def m_bs(self) -> int:
        return self.values.shape[0]

    @property
    def n_sub(self) -> int:
        return (self.values.shape[2] + 1) // 2

    @property
    def lags(self) -> np.ndarray:
        return lags(self.n_sub)

    def pair(self, m1: int, m2: int) -> np.ndarray:
        return self.values[m1, m2]

    def auto(self, m: int) -> np.ndarray:
        return self.values[m, m]

    def zero_lag(self) -> np.ndarray:
        """Per-BS mainlobe values ``r_mm(0)``."""
        n = self.n_sub
        return np.array([self.values[m, m, n - 1] for m in range(self.m_bs)])


def profile(x, h) -> CorrelationProfile:
    """Correlate every waveform row of ``x`` with every filter row of ``h``."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    if x.shape != h.shape or x.ndim != 2:
        raise DimensionError(f"waveform shape {x.shape} does not match filter shape {h.shape}")
    m, n = x.shape
    values = np.empty((m, m, 2 * n - 1), dtype=complex)
    for m1 in range(m):
        for m2 in range(m):
            values[m1, m2] = xcorr_fast(x[m1], h[m2])
    return CorrelationProfile(values)


def total_energy(p: CorrelationProfile) -> float:
    """Sum of ``|r|^2`` over every ordered pair and lag."""
    return float(np.sum(np.abs(p.values) ** 2))


def mainlobe_energy(p: CorrelationProfile, halfwidth: int) -> float:
    """Auto-correlation energy inside ``|l| <= halfwidth``, summed over BSs."""
    n = p.n_sub
    window = slice(n - 1 - halfwidth, n + halfwidth)
    return float(sum(np.sum(np.abs(p.auto(m)[window]) ** 2) for m in range(p.m_bs)))


def isl_full(p: CorrelationProfile) -> float:
    """Integrated sidelobe level with the auto terms counted in both sums.

    The first sum runs over auto-correlations only and the second over every
    ordered pair, ``m1 == m2`` included.
    """
    auto = sum(np.sum(np.abs(p.auto(m)) ** 2) for m in range(p.m_bs))
    return float(auto) + total_energy(p)


def isl_objective(p: CorrelationProfile, halfwidth: int) -> float:
    """Total correlation energy minus the per-BS auto mainlobe region energy."""
    if not 0 <= halfwidth < p.n_sub:
        raise ValueError(f"mainlobe halfwidth must be in [0, {p.n_sub})")
    return total_energy(p) - mainlobe_energy(p, halfwidth)


class NormalizationError(ValueError):
    """Every auto-correlation mainlobe is zero, so dB levels are undefined."""


def _db(mag, ref):
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.asarray(mag) / ref)


def mainlobe_width_3db(r: np.ndarray) -> int:
    """Number of contiguous lags around zero whose magnitude stays within 3 dB of lag 0."""
    n = (r.shape[0] + 1) // 2
    mag = np.abs(r)
    thresh = mag[n - 1] / np.sqrt(2)
    lo = hi = n - 1
    while lo > 0 and mag[lo - 1] >= thresh:
        lo -= 1
    while hi < r.shape[0] - 1 and mag[hi + 1] >= thresh:
        hi += 1
    return hi - lo + 1


@dataclass(frozen=True)
class SidelobeMetrics:
    isl_full: float
    isl_objective: float
    psl_auto_db: float
    psl_cross_db: float | None
    mainlobe_gain: float
    papr_per_bs: list[float]
    mainlobe_width_3db: list[int]
    psl_auto_per_bs_db: list[float]
    reference_peak: float

    def to_dict(self) -> dict:
        return asdict(self)


def normalization(p: CorrelationProfile) -> float:
    ref = float(np.max(np.abs(p.zero_lag())))
    if not ref > 0:
        raise NormalizationError("all auto-correlation mainlobes are zero")
    return ref


def psl_values(p: CorrelationProfile, halfwidth: int) -> tuple[list[float], float | None]:
    """Per-BS auto PSL (lags ``|l| > halfwidth``) and overall cross PSL, both in dB."""
    ref = normalization(p)
    outside = np.abs(p.lags) > halfwidth
    auto = []
    for m in range(p.m_bs):
        mag = np.abs(p.auto(m)[outside])
        auto.append(float(_db(mag.max(), ref)) if mag.size else float("-inf"))
    cross = [
        np.abs(p.pair(m1, m2)).max()
        for m1 in range(p.m_bs)
        for m2 in range(p.m_bs)
        if m1 != m2
    ]
    psl_cross = float(_db(max(cross), ref)) if cross else None
    return auto, psl_cross


def metrics(x, h, scenario, p: CorrelationProfile | None = None) -> SidelobeMetrics:
    """Sidelobe, mainlobe and PAPR figures of merit for a waveform/filter pair."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    if x.shape != (scenario.m_bs, scenario.n_sub):
        raise DimensionError(f"expected shape {(scenario.m_bs, scenario.n_sub)}, got {x.shape}")
    if p is None:
        p = profile(x, h)
    i = scenario.mainlobe_halfwidth
    auto, cross = psl_values(p, i)
    return SidelobeMetrics(
        isl_full=isl_full(p),
        isl_objective=isl_objective(p, i),
        psl_auto_db=max(auto),
        psl_cross_db=cross,
        mainlobe_gain=float(np.min(np.abs(p.zero_lag()))),
        papr_per_bs=[float(v) for v in papr(x, scenario)],
        mainlobe_width_3db=[mainlobe_width_3db(p.auto(m)) for m in range(p.m_bs)],
        psl_auto_per_bs_db=auto,
        reference_peak=normalization(p),
    )


# --- serialization -------------------------------------------------------

CSV_HEADER = ("lag", "pair", "re", "im", "db")


def pair_label(m1: int, m2: int) -> str:
    return f"{m1}-{m2}"


def profile_rows(p: CorrelationProfile, pairs=None, ref: float | None = None):
    ref = normalization(p) if ref is None else ref
    if pairs is None:
        pairs = [(m1, m2) for m1 in range(p.m_bs) for m2 in range(p.m_bs)]
    for m1, m2 in pairs:
        r = p.pair(m1, m2)
        db = _db(np.abs(r), ref)
        for lag, value, level in zip(p.lags, r, db):
            yield (int(lag), pair_label(m1, m2), repr(float(value.real)), repr(float(value.imag)),
                   repr(float(level)))


def profile_to_csv(p: CorrelationProfile, pairs=None, ref: float | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(profile_rows(p, pairs, ref))
    return buf.getvalue()


def profile_from_csv(texts) -> CorrelationProfile:
    """Rebuild a profile from one or more CSV documents covering every pair."""
    if isinstance(texts, str):
        texts = [texts]
    columns: dict[tuple[int, int], dict[int, complex]] = {}
    for text in texts:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for row in reader:
            m1, m2 = (int(v) for v in row["pair"].split("-"))
            columns.setdefault((m1, m2), {})[int(row["lag"])] = complex(
                float(row["re"]), float(row["im"])
            )
    m = 1 + max(max(k) for k in columns)
    n = 1 + max(max(col) for col in columns.values())
    if len(columns) != m * m:
        raise ValueError("CSV data does not cover every ordered BS pair")
    values = np.empty((m, m, 2 * n - 1), dtype=complex)
    for (m1, m2), col in columns.items():
        if sorted(col) != list(range(-(n - 1), n)):
            raise ValueError(f"pair {pair_label(m1, m2)} is missing lags")
        values[m1, m2] = [col[lag] for lag in range(-(n - 1), n)]
    return CorrelationProfile(values)


def profile_to_json(p: CorrelationProfile) -> dict:
    return {
        "m_bs": p.m_bs,
        "n_sub": p.n_sub,
        "pairs": {
            pair_label(m1, m2): {
                "re": p.pair(m1, m2).real.tolist(),
                "im": p.pair(m1, m2).imag.tolist(),
            }
            for m1 in range(p.m_bs)
            for m2 in range(p.m_bs)
        },
    }


def profile_from_json(data: dict) -> CorrelationProfile:
    m, n = data["m_bs"], data["n_sub"]
    values = np.empty((m, m, 2 * n - 1), dtype=complex)
    for m1 in range(m):
        for m2 in range(m):
            entry = data["pairs"][pair_label(m1, m2)]
            values[m1, m2] = np.asarray(entry["re"]) + 1j * np.asarray(entry["im"])
    return CorrelationProfile(values)


def write_profile_csv(p: CorrelationProfile, path, pairs=None, ref=None) -> Path:
    from .artifacts import atomic_write_text

    return atomic_write_text(Path(path), profile_to_csv(p, pairs, ref))


def metrics_to_json(m: SidelobeMetrics) -> str:
    return json.dumps(m.to_dict(), indent=2, allow_nan=True)
