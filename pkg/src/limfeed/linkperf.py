"""Link-level metrics for linearly precoded MIMO with an MMSE receiver.

Signal model ``y = H F s + n`` with unit-variance noise, ``M`` streams of
energy ``rho/M`` each and ``Tr(F^H F) <= M``. The mutual information is the
Gaussian-interference sum ``sum_k log2(1 + SINR_k)`` at the MMSE outputs.

The ``*_batch`` helpers evaluate stacks of channels/precoders at once and are
what the Monte Carlo harness uses; the scalar functions are thin wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import DegenerateStatisticsError, InvalidInputError
from .numerics import as_matrix

__all__ = [
    "Precoder",
    "LinkMetrics",
    "mmse_filters",
    "sinr",
    "sinr_from_filters",
    "mutual_info",
    "link_metrics",
    "waterfill",
    "perfect_precoder",
    "statistical_precoder",
    "power_alloc",
    "ber_qpsk",
    "qpsk_ber_awgn",
    "POWER_POLICIES",
    "BerResult",
    "sinr_batch",
    "mi_batch",
    "qpsk_errors_batch",
]

POWER_POLICIES = ("uniform", "stat_waterfill", "proportional")


def _h(a):
    return np.swapaxes(a.conj(), -1, -2)


@dataclass(frozen=True)
class Precoder:
    """``F = v @ diag(power)^(1/2)`` with ``v`` semiunitary and ``sum(power) <= M``."""

    v: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        v = as_matrix(self.v, "v")
        power = np.asarray(self.power, dtype=float).reshape(-1)
        if power.size != v.shape[1]:
            raise InvalidInputError("need one power entry per stream")
        if np.any(power < 0) or power.sum() > v.shape[1] + 1e-9:
            raise InvalidInputError("power must be non-negative with sum <= M")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "power", power)

    @property
    def m(self) -> int:
        return self.v.shape[1]

    @property
    def f(self) -> np.ndarray:
        return self.v * np.sqrt(self.power)


@dataclass(frozen=True)
class LinkMetrics:
    sinr: np.ndarray
    mi: float


def _f_of(f) -> np.ndarray:
    return f.f if isinstance(f, Precoder) else np.asarray(f, dtype=complex)


def _check_rho(rho: float) -> None:
    if not rho > 0:
        raise InvalidInputError(f"rho must be positive, got {rho}")


def mmse_filters(h, f, rho: float) -> np.ndarray:
    """MMSE receive filters ``g_k = sqrt(rho/M) (rho/M H F F^H H^H + I)^-1 H f_k``, one per column."""
    _check_rho(rho)
    h = as_matrix(h, "h")
    fm = _f_of(f)
    m = fm.shape[1]
    hf = h @ fm
    c = rho / m
    r = c * hf @ hf.conj().T + np.eye(h.shape[0])
    return np.sqrt(c) * np.linalg.solve(r, hf)


def sinr_from_filters(h, f, rho: float, g=None) -> np.ndarray:
    """Output SINR of explicit receive filters (signal over interference plus noise)."""
    h = as_matrix(h, "h")
    fm = _f_of(f)
    m = fm.shape[1]
    c = rho / m
    if g is None:
        g = mmse_filters(h, f, rho)
    hf = h @ fm
    out = np.empty(m)
    for k in range(m):
        gk = g[:, k]
        signal = c * abs(gk.conj() @ hf[:, k]) ** 2
        others = np.delete(hf, k, axis=1)
        cov = c * others @ others.conj().T + np.eye(h.shape[0])
        out[k] = signal / np.real(gk.conj() @ cov @ gk)
    return out


def _inv_diag_batch(hf: np.ndarray, rho) -> np.ndarray:
    """Diagonal of ``(I + rho/M (HF)^H HF)^-1`` for stacks of ``HF``."""
    m = hf.shape[-1]
    c = np.asarray(rho, dtype=float)[..., None, None] / m
    gram = c * (_h(hf) @ hf)
    gram = gram + np.eye(m)
    inv = np.linalg.inv(gram)
    return np.real(np.diagonal(inv, axis1=-2, axis2=-1))


def sinr_batch(hf: np.ndarray, rho) -> np.ndarray:
    return np.maximum(1.0 / _inv_diag_batch(hf, rho) - 1.0, 0.0)


def mi_batch(hf: np.ndarray, rho) -> np.ndarray:
    """Mutual information for stacks of effective channels ``H @ F``."""
    return -np.sum(np.log2(_inv_diag_batch(hf, rho)), axis=-1)


def sinr(h, f, rho: float) -> np.ndarray:
    """``SINR_k = 1 / (I + rho/M F^H H^H H F)^-1_kk - 1``."""
    _check_rho(rho)
    return sinr_batch(as_matrix(h, "h") @ _f_of(f), rho)


def mutual_info(h, f, rho: float) -> float:
    """``-sum_k log2((I + rho/M F^H H^H H F)^-1_kk)`` in bits/s/Hz."""
    _check_rho(rho)
    return float(mi_batch(as_matrix(h, "h") @ _f_of(f), rho))


def link_metrics(h, f, rho: float) -> LinkMetrics:
    s = sinr(h, f, rho)
    return LinkMetrics(sinr=s, mi=float(np.sum(np.log2(1.0 + s))))


def waterfill(gains, budget: float) -> tuple[np.ndarray, float]:
    """Maximize ``sum log(1 + g_k p_k)`` s.t. ``sum p_k <= budget``, ``p_k >= 0``.

    Standard sorted active-set search. Returns ``(power, level)`` with
    ``p_k = max(level - 1/g_k, 0)``; modes with zero gain get zero power.
    """
    g = np.asarray(gains, dtype=float)
    power = np.zeros_like(g)
    if budget <= 0 or not np.any(g > 0):
        return power, 0.0
    order = np.argsort(-g, kind="stable")
    inv = np.full(g.size, np.inf)
    pos = g > 0
    inv[pos] = 1.0 / g[pos]
    inv_sorted = inv[order]
    n_active = int(pos.sum())
    while n_active > 0:
        level = (budget + inv_sorted[:n_active].sum()) / n_active
        if level > inv_sorted[n_active - 1]:
            break
        n_active -= 1
    active = order[:n_active]
    power[active] = level - inv[active]
    return power, float(level)


def perfect_precoder(h, m: int, rho: float) -> Precoder:
    """Channel-diagonalizing precoder: ``m`` dominant right singular vectors
    with waterfilled power over gains ``(rho/m) * lambda_H(k)``, budget ``m``."""
    _check_rho(rho)
    h = as_matrix(h, "h")
    if not 1 <= m <= min(h.shape):
        raise InvalidInputError("need 1 <= m <= min(N_r, N_t)")
    _, s, vh = np.linalg.svd(h)
    lam_h = s[:m] ** 2
    power, _ = waterfill(rho / m * lam_h, m)
    return Precoder(vh[:m].conj().T, power)


def power_alloc(lambda_t, m: int, rho: float, policy: str = "uniform") -> np.ndarray:
    """Fixed power profile from the sorted transmit eigenvalues.

    ``uniform``: all ones. ``stat_waterfill``: waterfilling over
    ``(rho/m) lambda_t[:m]`` with budget ``m``. ``proportional``:
    ``m * lambda_t[i] / sum(lambda_t[:m])``.
    """
    lam = np.asarray(lambda_t, dtype=float)[:m]
    if lam.size < m:
        raise InvalidInputError("need at least m transmit eigenvalues")
    if not np.any(lam > 0):
        raise DegenerateStatisticsError("the m dominant transmit eigenvalues are all zero")
    if policy == "uniform":
        return np.ones(m)
    if policy == "stat_waterfill":
        _check_rho(rho)
        return waterfill(rho / m * lam, m)[0]
    if policy == "proportional":
        return m * lam / lam.sum()
    raise InvalidInputError(f"unknown power policy {policy!r}; expected one of {POWER_POLICIES}")


def statistical_precoder(model, m: int, power_policy: str = "uniform", rho: float = 1.0) -> Precoder:
    """Statistics-only precoder on the ``m`` dominant eigenvectors of ``Sigma_t``."""
    from .channel import transmit_cov

    lam, vecs, _, _ = transmit_cov(model)
    if not 1 <= m <= vecs.shape[0]:
        raise InvalidInputError("need 1 <= m <= N_t")
    return Precoder(vecs[:, :m], power_alloc(lam, m, rho, power_policy))


def qpsk_ber_awgn(snr: float) -> float:
    """Gray QPSK bit error rate ``Q(sqrt(snr))`` for per-symbol SNR ``snr``."""
    return float(0.5 * erfc(np.sqrt(snr / 2.0)))


_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


def qpsk_errors_batch(h: np.ndarray, f: np.ndarray, rho: float, rng: np.random.Generator, n_symbols: int):
    """Bit-error counts per stream for stacks ``h (T, N_r, N_t)``, ``f (T, N_t, M)``.

    Gray-mapped QPSK (bit 0 -> sign of I, bit 1 -> sign of Q), energy
    ``rho/M`` per stream, unit-variance complex AWGN, MMSE filtering and hard
    decisions. Bits and noise are drawn from ``rng`` in a fixed layout so that
    two calls with equally seeded generators see identical inputs.
    Returns an integer array ``(T, M)`` of errors out of ``2*n_symbols`` bits.
    """
    t, n_r, _ = h.shape
    m = f.shape[-1]
    c = rho / m
    bits = rng.integers(0, 2, size=(t, m, n_symbols, 2), dtype=np.int8)
    noise = (rng.standard_normal((t, n_r, n_symbols)) + 1j * rng.standard_normal((t, n_r, n_symbols))) / np.sqrt(2.0)
    sym = _QPSK[2 * bits[..., 0] + bits[..., 1]]
    hf = h @ f
    y = np.sqrt(c) * (hf @ sym) + noise
    r = c * hf @ _h(hf) + np.eye(n_r)
    g = np.sqrt(c) * np.linalg.solve(r, hf)
    est = _h(g) @ y
    dec0 = (est.real < 0).astype(np.int8)
    dec1 = (est.imag < 0).astype(np.int8)
    return (dec0 != bits[..., 0]).sum(axis=-1) + (dec1 != bits[..., 1]).sum(axis=-1)


@dataclass(frozen=True)
class BerResult:
    per_stream: np.ndarray
    aggregate: float
    errors: np.ndarray
    bits_per_stream: int


def ber_qpsk(h, f, rho: float, rng: np.random.Generator, n_symbols: int) -> BerResult:
    """Monte Carlo raw BER of uncoded QPSK through the MMSE receiver."""
    _check_rho(rho)
    if n_symbols < 1:
        raise InvalidInputError("n_symbols must be >= 1")
    h = as_matrix(h, "h")
    fm = _f_of(f)
    errors = qpsk_errors_batch(h[None], fm[None], rho, rng, n_symbols)[0]
    bits = 2 * n_symbols
    return BerResult(
        per_stream=errors / bits,
        aggregate=float(errors.sum() / (bits * errors.size)),
        errors=errors,
        bits_per_stream=bits,
    )
