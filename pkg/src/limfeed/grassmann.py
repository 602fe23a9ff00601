"""Geometry on the complex Grassmann manifold G(N_t, M).

Points are ``N_t x M`` semiunitary matrices, identified modulo right
multiplication by an ``M x M`` unitary. Distances use the projection 2-norm
(the sine of the largest principal angle). Most functions broadcast over
leading stack dimensions so that Monte Carlo loops can stay vectorized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .numerics import as_matrix, complete_basis, haar_semiunitary, null_basis

__all__ = [
    "Cap",
    "Codeset",
    "ScaleParams",
    "canonical_point",
    "dist",
    "dist_dual",
    "distance_matrix",
    "in_cap",
    "min_dist",
    "rotate",
    "scale",
    "scale_params",
    "scale_beamforming",
    "scale_simple",
    "sample_in_cap",
    "make_root_codeset",
    "estimate_gamma_max",
    "codeset_to_dict",
    "codeset_from_dict",
    "save_codeset",
    "load_codeset",
    "scale_many",
    "scale_simple_coefficients",
]


def _h(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a.conj(), -1, -2)


def canonical_point(n_t: int, m: int) -> np.ndarray:
    """The point ``[I_M; 0]`` of G(n_t, m)."""
    return np.eye(n_t, m, dtype=complex)


def dist(v1, v2) -> np.ndarray | float:
    """Projection 2-norm distance ``sqrt(1 - lambda_min(V1^H V2 V2^H V1))``.

    Evaluated as the spectral norm of ``(I - V1 V1^H) V2``, which equals the
    expression above for semiunitary inputs but stays accurate for nearby
    points. Broadcasts over leading dimensions.
    """
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    if v1.shape[-2:] != v2.shape[-2:]:
        raise InvalidInputError(f"shape mismatch: {v1.shape[-2:]} vs {v2.shape[-2:]}")
    resid = v2 - v1 @ (_h(v1) @ v2)
    d = np.clip(np.linalg.norm(resid, ord=2, axis=(-2, -1)), 0.0, 1.0)
    return float(d) if np.ndim(d) == 0 else d


def dist_dual(v1, v2) -> np.ndarray | float:
    """Same distance as :func:`dist` via ``lambda_max(V1 V1^H - V2 V2^H)``."""
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    if v1.shape[-2:] != v2.shape[-2:]:
        raise InvalidInputError(f"shape mismatch: {v1.shape[-2:]} vs {v2.shape[-2:]}")
    diff = v1 @ _h(v1) - v2 @ _h(v2)
    d = np.linalg.eigvalsh(0.5 * (diff + _h(diff)))[..., -1]
    return float(d) if np.ndim(d) == 0 else d


def distance_matrix(members) -> np.ndarray:
    """Pairwise distances of a stack ``(n, N_t, M)``."""
    members = np.asarray(members, dtype=complex)
    return dist(members[:, None], members[None, :])


@dataclass(frozen=True)
class Cap:
    """Open spherical cap ``{X : dist(X, center) < radius}``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not 0.0 < self.radius < 1.0:
            raise InvalidInputError(f"cap radius must lie in (0, 1), got {self.radius}")
        object.__setattr__(self, "center", as_matrix(self.center, "center"))


def in_cap(v, cap: Cap) -> bool:
    return bool(dist(v, cap.center) < cap.radius)


@dataclass(frozen=True)
class Codeset:
    """Root codeset: ``members[0]`` is the center, every member lies within
    ``theta`` of it and ``gamma`` is the achieved minimum pairwise distance."""

    members: np.ndarray
    theta: float
    gamma: float

    @property
    def center(self) -> np.ndarray:
        return self.members[0]

    @property
    def n_t(self) -> int:
        return self.members.shape[1]

    @property
    def m(self) -> int:
        return self.members.shape[2]

    def __len__(self) -> int:
        return self.members.shape[0]

    def radius(self) -> float:
        """Largest distance from the center actually attained."""
        return float(np.max(dist(self.center, self.members)))


def min_dist(cs) -> float:
    """Minimum distance over all unordered pairs of a codeset (or stack)."""
    members = cs.members if isinstance(cs, Codeset) else np.asarray(cs, dtype=complex)
    n = members.shape[0]
    if n < 2:
        raise InvalidInputError("min_dist needs at least two members")
    i, j = np.triu_indices(n, k=1)
    return float(np.min(dist(members[i], members[j])))


def rotate(items, v1, v_target) -> np.ndarray:
    """Rotate a set of subspaces so that ``v1`` lands on ``v_target``.

    ``G_i = [v_target, null(v_target)] @ [v1, null(v1)]^H @ V_i``. All
    pairwise distances are preserved and ``v1`` maps to ``v_target``.
    """
    items = np.asarray(items, dtype=complex)
    v1 = as_matrix(v1, "v1")
    v_target = as_matrix(v_target, "v_target")
    if v1.shape != v_target.shape or items.shape[-2:] != v1.shape:
        raise InvalidInputError("rotate needs items, v1 and v_target of the same shape")
    u_v1 = _full_unitary(v1)
    u_target = _full_unitary(v_target)
    return u_target @ (u_v1.conj().T @ items)


def _full_unitary(v: np.ndarray) -> np.ndarray:
    n, m = v.shape
    return v.copy() if m == n else np.column_stack([v, null_basis(v)])


@dataclass(frozen=True)
class ScaleParams:
    """Free parameters chosen by the general scaling map.

    ``a = u_a @ diag(sqrt(lam_a)) @ w^H`` and ``b = u_b @ lam_b @ w^H`` where
    ``lam_b`` is the ``(N_t - M) x M`` rectangular diagonal of
    ``sqrt(1 - lam_a)``; the image is ``v1 @ a + v1_null @ b``.
    """

    a: np.ndarray
    b: np.ndarray
    u_a: np.ndarray
    u_b: np.ndarray
    w: np.ndarray
    lam_a: np.ndarray
    lam_b: np.ndarray
    alpha: float
    lambda_min: float

    def violations(self, tol: float = 1e-9) -> list[str]:
        """Return the list of broken map constraints (empty when all hold)."""
        m = self.a.shape[0]
        k = self.b.shape[0]
        bad = []
        target = 1.0 - self.alpha**2 * (1.0 - self.lambda_min)
        if abs(np.min(self.lam_a) - target) > tol:
            bad.append(f"min(lam_a)={np.min(self.lam_a):.12g} != {target:.12g}")
        if np.max(self.lam_a) > 1.0 + tol:
            bad.append("max(lam_a) > 1")
        if np.min(self.lam_a) <= 0.0:
            bad.append("lam_a not positive definite")
        for name, u in (("u_a", self.u_a), ("u_b", self.u_b), ("w", self.w)):
            if u.size and np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > tol:
                bad.append(f"{name} not unitary")
        if np.max(np.abs(self.u_a @ np.diag(np.sqrt(self.lam_a)) @ self.w.conj().T - self.a)) > tol:
            bad.append("a does not match its factorization")
        if k and np.max(np.abs(self.u_b @ self.lam_b @ self.w.conj().T - self.b)) > tol:
            bad.append("b does not match its factorization")
        if np.max(np.abs(self.a.conj().T @ self.a + self.b.conj().T @ self.b - np.eye(m))) > tol:
            bad.append("a^H a + b^H b != I")
        if m <= k:
            if np.any(np.diff(self.lam_a) > tol):
                bad.append("lam_a not non-increasing")
        else:
            forced = self.lam_a[k:]
            if np.max(np.abs(forced - 1.0)) > tol:
                bad.append(f"expected {m - k} unit entries at the end of lam_a")
        return bad


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1], got {alpha}")


def _scale_core(v_i: np.ndarray, v1: np.ndarray, v1_null: np.ndarray, alpha):
    """Vectorized canonical scaling; returns (image, u_a, sigma, w, q).

    Every principal angle between ``v1`` and ``v_i`` has its sine multiplied
    by ``alpha``: with ``P = v1^H v_i = u_a diag(sigma) w^H`` and
    ``Q = v1_null^H v_i``, the image is ``v1 u_a diag(sqrt(1 - a^2 (1 - sigma^2))) w^H
    + alpha v1_null Q``.
    """
    alpha = np.asarray(alpha, dtype=float)
    p = v1.conj().T @ v_i
    q = v1_null.conj().T @ v_i
    u_a, sigma, wh = np.linalg.svd(p)
    sigma = np.clip(sigma, 0.0, 1.0)
    a_ = alpha[..., None] if alpha.ndim else alpha
    lam = 1.0 - a_**2 * (1.0 - sigma**2)
    amat = (u_a * np.sqrt(lam)[..., None, :]) @ wh
    bmat = (alpha[..., None, None] if alpha.ndim else alpha) * q
    return v1 @ amat + v1_null @ bmat, u_a, sigma, _h(wh), q, amat, bmat, lam


def scale_params(v_i, v1, alpha: float) -> ScaleParams:
    """Canonical parameters of the general scaling map toward ``v1``.

    ``w`` holds the shared right singular vectors of ``v1^H v_i`` and
    ``v1_null^H v_i``; the diagonal ``lam_a`` scales the sine of every
    principal angle by ``alpha``. When ``M > N_t - M`` the columns are ordered
    so that the ``2M - N_t`` forced unit entries come last.
    """
    _check_alpha(alpha)
    v_i = as_matrix(v_i, "v_i")
    v1 = as_matrix(v1, "v1")
    if v_i.shape != v1.shape:
        raise InvalidInputError("v_i and v1 must have the same shape")
    n, m = v1.shape
    k = n - m
    v1_null = null_basis(v1) if k else np.zeros((n, 0), dtype=complex)
    _, u_a, sigma, w, q, amat, bmat, lam = _scale_core(v_i, v1, v1_null, alpha)
    if m > k:
        order = np.arange(m)[::-1]  # largest sines first, unit entries last
        u_a, w, lam, sigma = u_a[:, order], w[:, order], lam[order], sigma[order]
    qw = q @ w
    sines = np.linalg.norm(qw, axis=0)
    r = min(m, k)
    cols = []
    for j in range(r):
        if sines[j] > 1e-12:
            cols.append(qw[:, j] / sines[j])
        else:
            cols.append(None)
    u_b = np.zeros((k, k), dtype=complex)
    accepted = [c for c in cols if c is not None]
    basis = np.column_stack(accepted) if accepted else np.zeros((k, 0), dtype=complex)
    fill = complete_basis(basis, k - basis.shape[1]) if k else np.zeros((0, 0))
    fi = 0
    for j in range(r):
        if cols[j] is not None:
            u_b[:, j] = cols[j]
        else:
            u_b[:, j] = fill[:, fi]
            fi += 1
    for j in range(r, k):
        u_b[:, j] = fill[:, fi]
        fi += 1
    lam_b = np.zeros((k, m))
    lam_b[np.arange(r), np.arange(r)] = alpha * sines[:r]
    lam_min = float(np.min(sigma) ** 2)
    return ScaleParams(
        a=amat, b=bmat, u_a=u_a, u_b=u_b, w=w, lam_a=lam, lam_b=lam_b,
        alpha=float(alpha), lambda_min=lam_min,
    )


def scale(v_i, v1, alpha: float) -> np.ndarray:
    """Contract ``v_i`` toward ``v1``: ``dist(v1, scale(v_i, v1, a)) = a * dist(v1, v_i)``.

    Implements ``v1 @ A + null(v1) @ B`` with the canonical parameters of
    :func:`scale_params`; ``v1`` is a fixed point on the manifold.
    """
    _check_alpha(alpha)
    v_i = as_matrix(v_i, "v_i")
    v1 = as_matrix(v1, "v1")
    if v_i.shape != v1.shape:
        raise InvalidInputError("v_i and v1 must have the same shape")
    n, m = v1.shape
    if m == n:
        return v_i.copy()
    return _scale_core(v_i, v1, null_basis(v1), alpha)[0]


def scale_many(items, v1, alpha: float) -> np.ndarray:
    """:func:`scale` applied to a stack ``(k, N_t, M)``."""
    _check_alpha(alpha)
    items = np.asarray(items, dtype=complex)
    v1 = as_matrix(v1, "v1")
    if items.shape[-2:] != v1.shape:
        raise InvalidInputError("shape mismatch")
    if v1.shape[0] == v1.shape[1]:
        return items.copy()
    return _scale_core(items, v1, null_basis(v1), alpha)[0]


def scale_beamforming(v_i, v1, alpha: float) -> np.ndarray:
    """Beamforming (M = 1) scaling map.

    ``v1 sqrt(1 - a^2 (1 - |v1^H v_i|^2)) exp(j arg(v1^H v_i)) + a (v_i - v1 v1^H v_i)``.
    """
    _check_alpha(alpha)
    v_i = as_matrix(v_i, "v_i")
    v1 = as_matrix(v1, "v1")
    if v_i.shape[1] != 1 or v1.shape[1] != 1:
        raise InvalidInputError("scale_beamforming needs single-column inputs")
    if v_i.shape != v1.shape:
        raise InvalidInputError("v_i and v1 must have the same shape")
    ip = complex((v1.conj().T @ v_i)[0, 0])
    mag = min(abs(ip), 1.0)
    phase = ip / abs(ip) if abs(ip) > 0 else 1.0
    head = np.sqrt(1.0 - alpha**2 * (1.0 - mag**2)) * phase
    return v1 * head + alpha * (v_i - v1 * ip)


def scale_simple(v_i, v1, alpha: float, v_extra=None) -> np.ndarray:
    """Single-column scaling map ``[v_1 .. v_{M-1}, beta v_M + delta v_extra]``.

    ``beta = sqrt(1 - a^2 (1 - l))`` and ``delta = a sqrt(1 - l)`` with
    ``l = lambda_min(V1^H V_i V_i^H V1)``. ``v_extra`` must be a unit vector
    orthogonal to ``v1``; the first column of ``null_basis(v1)`` by default.
    The image depends on ``v_i`` only through ``l``.
    """
    _check_alpha(alpha)
    v_i = as_matrix(v_i, "v_i")
    v1 = as_matrix(v1, "v1")
    if v_extra is None:
        v_extra = null_basis(v1)[:, 0]
    v_extra = np.asarray(v_extra, dtype=complex).reshape(-1)
    if np.max(np.abs(v1.conj().T @ v_extra)) > 1e-10:
        raise InvalidInputError("v_extra must be orthogonal to v1")
    if abs(np.linalg.norm(v_extra) - 1.0) > 1e-10:
        raise InvalidInputError("v_extra must have unit norm")
    beta, delta = scale_simple_coefficients(v_i, v1, alpha)
    out = v1.copy()
    out[:, -1] = beta * v1[:, -1] + delta * v_extra
    return out


def scale_simple_coefficients(v_i, v1, alpha: float) -> tuple[float, float]:
    v_i = as_matrix(v_i, "v_i")
    v1 = as_matrix(v1, "v1")
    g = v1.conj().T @ v_i
    lam_min = float(np.linalg.eigvalsh(0.5 * (g @ g.conj().T + (g @ g.conj().T).conj().T))[0])
    gap = min(max(1.0 - lam_min, 0.0), 1.0)
    return float(np.sqrt(1.0 - alpha**2 * gap)), float(alpha * np.sqrt(gap))


def _sample_in_cap_batch(rng: np.random.Generator, center: np.ndarray, center_null, radius: float, count: int):
    n, m = center.shape
    pts = haar_semiunitary(rng, n, m, size=count)
    d = dist(center, pts)
    d = np.atleast_1d(d)
    u = rng.random(count)
    u = np.where(u > 0.0, u, 0.5)
    out = pts.copy()
    far = d >= radius
    if np.any(far):
        alpha = radius * u[far] / d[far]
        out[far] = _scale_core(pts[far], center, center_null, alpha)[0]
    return out


def sample_in_cap(rng: np.random.Generator, cap: Cap, size: int | None = None) -> np.ndarray:
    """Draw points strictly inside ``cap``.

    A Haar point at distance ``d`` from the center is kept if ``d < radius``;
    otherwise it is contracted toward the center with ``alpha = radius*u/d``,
    ``u ~ U(0, 1)``, landing at distance ``radius*u``.
    """
    center = cap.center
    n, m = center.shape
    center_null = null_basis(center) if m < n else np.zeros((n, 0), dtype=complex)
    count = 1 if size is None else size
    out = _sample_in_cap_batch(rng, center, center_null, cap.radius, count)
    # guard against round-off landing exactly on the boundary
    bad = np.atleast_1d(dist(center, out)) >= cap.radius
    while np.any(bad):
        out[bad] = _sample_in_cap_batch(rng, center, center_null, cap.radius, int(bad.sum()))
        bad = np.atleast_1d(dist(center, out)) >= cap.radius
    return out[0] if size is None else out


def make_root_codeset(
    rng: np.random.Generator,
    n_t: int,
    m: int,
    n: int,
    theta: float,
    trials: int,
    batch: int = 4096,
) -> Codeset:
    """Monte Carlo search for a well-packed codeset localized around ``[I_M; 0]``.

    Each trial draws ``n - 1`` points in the cap of radius ``theta`` and the
    candidate maximizing the minimum pairwise distance (center included) is
    kept; ties go to the earliest trial.
    """
    if n < 2:
        raise InvalidInputError("a root codeset needs at least two members")
    if not 0.0 < theta < 1.0:
        raise InvalidInputError("theta must lie in (0, 1)")
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    center = canonical_point(n_t, m)
    center_null = null_basis(center) if m < n_t else np.zeros((n_t, 0), dtype=complex)
    pairs_i, pairs_j = np.triu_indices(n, k=1)
    best_gamma = -1.0
    best = None
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        pts = _sample_in_cap_batch(rng, center, center_null, theta, k * (n - 1))
        pts = pts.reshape(k, n - 1, n_t, m)
        sets = np.concatenate([np.broadcast_to(center, (k, 1, n_t, m)), pts], axis=1)
        gammas = np.min(dist(sets[:, pairs_i], sets[:, pairs_j]), axis=1)
        idx = int(np.argmax(gammas))
        if gammas[idx] > best_gamma:
            best_gamma = float(gammas[idx])
            best = sets[idx].copy()
        done += k
    return Codeset(members=best, theta=float(theta), gamma=best_gamma)


def estimate_gamma_max(
    rng: np.random.Generator,
    n_t: int,
    m: int,
    n: int,
    theta: float,
    budget: int,
    trials: int = 1000,
) -> float:
    """Best packing density found over ``budget`` independent root-codeset searches."""
    if budget < 1:
        raise InvalidInputError("budget must be >= 1")
    return max(make_root_codeset(rng, n_t, m, n, theta, trials).gamma for _ in range(budget))


def _encode(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def codeset_to_dict(cs: Codeset) -> dict:
    return {
        "n_t": cs.n_t,
        "m": cs.m,
        "theta": cs.theta,
        "gamma": cs.gamma,
        "members": [_encode(v) for v in cs.members],
    }


def codeset_from_dict(d: dict) -> Codeset:
    arr = np.asarray(d["members"], dtype=float)
    members = arr[..., 0] + 1j * arr[..., 1]
    if members.shape[1:] != (d["n_t"], d["m"]):
        raise InvalidInputError("member shapes disagree with n_t/m")
    return Codeset(members=members, theta=float(d["theta"]), gamma=float(d["gamma"]))


def save_codeset(cs: Codeset, path) -> None:
    with open(path, "w") as fh:
        json.dump(codeset_to_dict(cs), fh)


def load_codeset(path) -> Codeset:
    with open(path) as fh:
        return codeset_from_dict(json.load(fh))
