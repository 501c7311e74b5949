"""Scaled DFT pair and Hermitian positive-definite solves.

The forward transform uses the kernel ``exp(-2j*pi*k*q/N) / N`` so that
``F @ F.conj().T == I / N``. The adjoint ``F^H`` therefore maps a
frequency-domain sequence to its time-domain samples with the same 1/N
weighting (this is exactly ``numpy.fft.ifft``).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg as sla


class DimensionError(ValueError):
    """Array shapes are inconsistent with the configured problem size."""


class ContractError(ValueError):
    """Input violates a structural precondition (e.g. not Hermitian)."""


class SingularSystemError(np.linalg.LinAlgError):
    """A Hermitian system could not be factorized even after ridge loading."""


def _as_vector(v, n: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionError(f"expected length {n}, got {v.shape[0]}")
    return v


def dft_matrix(n: int) -> np.ndarray:
    """Dense 1/N-scaled DFT matrix, entry (k, q) = exp(-2j*pi*k*q/n) / n."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / n


def dft_forward(v, n: int | None = None) -> np.ndarray:
    """Return ``F @ v`` along the last axis."""
    v = np.asarray(v, dtype=complex)
    if n is not None and v.shape[-1] != n:
        raise DimensionError(f"expected length {n}, got {v.shape[-1]}")
    return np.fft.fft(v, axis=-1) / v.shape[-1]


def dft_adjoint(v, n: int | None = None) -> np.ndarray:
    """Return ``F^H @ v`` along the last axis."""
    v = np.asarray(v, dtype=complex)
    if n is not None and v.shape[-1] != n:
        raise DimensionError(f"expected length {n}, got {v.shape[-1]}")
    return np.fft.ifft(v, axis=-1)


def is_hermitian(a: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(np.abs(a).max(initial=0.0), np.finfo(float).tiny)
    return bool(np.abs(a - a.conj().T).max(initial=0.0) <= rtol * scale)


class HpdSolution(NamedTuple):
    x: np.ndarray
    regularized: bool


def solve_hpd(a, b) -> HpdSolution:
    """Solve ``a @ x = b`` for Hermitian positive (semi)definite ``a``.

    A Cholesky factorization is attempted first. If it fails, or the
    residual is not within ``1e-8 * (||a||_F ||x|| + ||b||)``, the system is
    retried once with ridge ``eps = 1e-9 * trace(a) / dim`` added to the
    diagonal and the result is flagged as regularized.

    Raises:
        ContractError: ``a`` is not square or not Hermitian.
        SingularSystemError: the ridge-loaded system also fails.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"matrix must be square, got shape {a.shape}")
    b = _as_vector(b, a.shape[0])
    if not is_hermitian(a):
        raise ContractError("matrix is not Hermitian")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ContractError("non-finite entries in linear system")

    dim = a.shape[0]
    fro = np.linalg.norm(a)
    bnorm = np.linalg.norm(b)

    def attempt(mat):
        try:
            factor = sla.cho_factor(mat, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            return None
        x = sla.cho_solve(factor, b, check_finite=False)
        if not np.all(np.isfinite(x)):
            return None
        return x

    x = attempt(a)
    if x is not None and np.linalg.norm(a @ x - b) <= 1e-8 * (fro * np.linalg.norm(x) + bnorm):
        return HpdSolution(x, False)

    eps = 1e-9 * np.real(np.trace(a)) / dim
    if not eps > 0:
        eps = 1e-9 * max(fro / np.sqrt(dim), 1.0)
    x = attempt(a + eps * np.eye(dim))
    if x is None:
        raise SingularSystemError("Hermitian system is singular even after ridge loading")
    return HpdSolution(x, True)
