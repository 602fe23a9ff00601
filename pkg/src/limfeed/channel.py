"""Spatially correlated Rayleigh channels under the canonical decomposition.

A channel is ``H = U_r @ H_ind @ U_t^H`` where ``H_ind`` has independent
zero-mean circularly symmetric complex Gaussian entries with variances
``var[i, j]``. The i.i.d., separable (Kronecker) and virtual (DFT basis)
models are all special cases of :class:`CanonicalModel`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidStatisticsError
from .numerics import as_matrix, haar_semiunitary

__all__ = [
    "CanonicalModel",
    "CovarianceSpec",
    "iid_model",
    "separable_model",
    "virtual_model",
    "dft_matrix",
    "sample",
    "transmit_cov",
    "receive_cov",
    "matched_statistics",
    "model_to_dict",
    "model_from_dict",
    "covariance_spec",
    "dumps_model",
]

UNITARY_TOL = 1e-10


def _check_unitary(u: np.ndarray, name: str) -> None:
    if u.shape[0] != u.shape[1]:
        raise InvalidInputError(f"{name} must be square, got {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > UNITARY_TOL:
        raise InvalidInputError(f"{name} is not unitary")


@dataclass(frozen=True)
class CanonicalModel:
    """Channel statistics: eigenbases ``u_t`` (N_t x N_t), ``u_r`` (N_r x N_r)
    and the N_r x N_t matrix ``var`` of entrywise variances of ``H_ind``."""

    u_t: np.ndarray
    u_r: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        u_t = as_matrix(self.u_t, "u_t")
        u_r = as_matrix(self.u_r, "u_r")
        var = np.asarray(self.var, dtype=float)
        if var.ndim != 2:
            raise InvalidInputError("var must be a 2-D matrix")
        _check_unitary(u_t, "u_t")
        _check_unitary(u_r, "u_r")
        if var.shape != (u_r.shape[0], u_t.shape[0]):
            raise InvalidInputError(
                f"var has shape {var.shape}, expected {(u_r.shape[0], u_t.shape[0])}"
            )
        if not np.all(np.isfinite(var)) or np.any(var < 0):
            raise InvalidStatisticsError("variances must be finite and non-negative")
        if not np.any(var > 0):
            raise InvalidStatisticsError("at least one variance must be positive")
        for name, arr in (("u_t", u_t), ("u_r", u_r), ("var", var)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_t(self) -> int:
        return self.u_t.shape[0]

    @property
    def n_r(self) -> int:
        return self.u_r.shape[0]

    @property
    def power(self) -> float:
        """Channel power ``E[||H||_F^2]``, the sum of all variances."""
        return float(self.var.sum())


@dataclass(frozen=True)
class CovarianceSpec:
    """Transmit and receive eigenvalues of the channel covariances."""

    lambda_t: np.ndarray
    lambda_r: np.ndarray


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix with entries ``exp(-2j*pi*k*l/n)/sqrt(n)``."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def iid_model(n_r: int, n_t: int) -> CanonicalModel:
    if n_r < 1 or n_t < 1:
        raise InvalidInputError("antenna counts must be >= 1")
    return CanonicalModel(np.eye(n_t), np.eye(n_r), np.ones((n_r, n_t)))


def separable_model(
    lambda_t: Sequence[float],
    lambda_r: Sequence[float],
    u_t=None,
    u_r=None,
    rtol: float = 1e-6,
) -> CanonicalModel:
    """Kronecker-correlated model with ``var(i, j) = lambda_r[i] * lambda_t[j] / rho_c``.

    Both eigenvalue lists must share the same trace ``rho_c``; a mismatch is
    rejected instead of silently renormalized. Bases default to identity.
    """
    lt = np.asarray(lambda_t, dtype=float)
    lr = np.asarray(lambda_r, dtype=float)
    if np.any(lt < 0) or np.any(lr < 0):
        raise InvalidStatisticsError("eigenvalues must be non-negative")
    rho_c = lt.sum()
    if rho_c <= 0 or abs(lr.sum() - rho_c) > rtol * rho_c:
        raise InvalidStatisticsError(
            f"transmit and receive traces differ: {lt.sum():.6g} vs {lr.sum():.6g}"
        )
    u_t = np.eye(lt.size) if u_t is None else u_t
    u_r = np.eye(lr.size) if u_r is None else u_r
    return CanonicalModel(u_t, u_r, np.outer(lr, lt) / rho_c)


def virtual_model(var) -> CanonicalModel:
    """Virtual representation: DFT eigenbases on both sides."""
    var = np.asarray(var, dtype=float)
    if var.ndim != 2:
        raise InvalidInputError("var must be a 2-D matrix")
    n_r, n_t = var.shape
    return CanonicalModel(dft_matrix(n_t), dft_matrix(n_r), var)


def sample(model: CanonicalModel, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw channel realizations ``U_r H_ind U_t^H``.

    Real and imaginary parts of ``H_ind`` are independent with variance
    ``var/2`` each. With ``size`` a stack ``(size, N_r, N_t)`` is returned.
    """
    shape = model.var.shape if size is None else (size,) + model.var.shape
    std = np.sqrt(model.var / 2.0)
    h_ind = std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return model.u_r @ h_ind @ model.u_t.conj().T


def _sorted_cov(values: np.ndarray, basis: np.ndarray):
    # stable sort keeps the physical order among equal eigenvalues
    order = np.argsort(-values, kind="stable")
    lam = values[order]
    vecs = basis[:, order]
    sigma = (vecs * lam) @ vecs.conj().T
    return lam, vecs, sigma, order


def transmit_cov(model: CanonicalModel):
    """Transmit statistics ``Sigma_t = E[H^H H]``.

    Returns ``(lambda_t, u_t_sorted, sigma_t, order)``: eigenvalues (column
    sums of ``var``) sorted non-increasing, the matching permuted columns of
    ``u_t``, the covariance matrix, and the permutation applied.
    """
    return _sorted_cov(model.var.sum(axis=0), model.u_t)


def receive_cov(model: CanonicalModel):
    """Receive statistics ``Sigma_r = E[H H^H]``, same layout as :func:`transmit_cov`."""
    return _sorted_cov(model.var.sum(axis=1), model.u_r)


def covariance_spec(model: CanonicalModel) -> CovarianceSpec:
    return CovarianceSpec(transmit_cov(model)[0], receive_cov(model)[0])


def matched_statistics(n_t: int, n_r: int, m: int):
    """Eigenvalues of the channel matched to rank-``m`` statistical precoding.

    ``m`` equal transmit eigenvalues ``n_t*n_r/m`` (rest zero) and a flat
    receive profile of ``n_t``; both traces equal ``n_t*n_r``.
    """
    if not (1 <= m <= min(n_t, n_r)):
        raise InvalidInputError(f"need 1 <= m <= min(n_t, n_r), got m={m}")
    lambda_t = np.zeros(n_t)
    lambda_t[:m] = n_t * n_r / m
    lambda_r = np.full(n_r, float(n_t))
    return lambda_t, lambda_r


def _encode_complex(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a)]


def _decode_complex(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def model_to_dict(model: CanonicalModel) -> dict:
    return {
        "u_t": _encode_complex(model.u_t),
        "u_r": _encode_complex(model.u_r),
        "var": model.var.tolist(),
    }


def model_from_dict(d: dict) -> CanonicalModel:
    """Build a model from its JSON form.

    Accepts the explicit ``{"u_t", "u_r", "var"}`` layout or a constructor
    spec ``{"type": "iid" | "separable" | "virtual", ...}``. Separable bases
    may be ``"identity"`` (default), ``"dft"``, ``"haar"`` (drawn from the
    integer ``"seed"``, transmit first) or explicit matrices.
    """
    kind = d.get("type")
    if kind is None:
        return CanonicalModel(_decode_complex(d["u_t"]), _decode_complex(d["u_r"]), d["var"])
    if kind == "iid":
        return iid_model(int(d["n_r"]), int(d["n_t"]))
    if kind == "separable":
        rng = np.random.default_rng(int(d.get("seed", 0)))
        u_t = _bases(d.get("u_t"), len(d["lambda_t"]), rng)
        u_r = _bases(d.get("u_r"), len(d["lambda_r"]), rng)
        return separable_model(d["lambda_t"], d["lambda_r"], u_t, u_r)
    if kind == "virtual":
        return virtual_model(d["var"])
    raise InvalidInputError(f"unknown model type {kind!r}")


def _bases(spec, n: int, rng: np.random.Generator):
    if spec is None or spec == "identity":
        return np.eye(n)
    if spec == "dft":
        return dft_matrix(n)
    if spec == "haar":
        return haar_semiunitary(rng, n, n)
    if isinstance(spec, str):
        raise InvalidInputError(f"unknown basis {spec!r}")
    return _decode_complex(spec)


def dumps_model(model: CanonicalModel) -> str:
    return json.dumps(model_to_dict(model))
