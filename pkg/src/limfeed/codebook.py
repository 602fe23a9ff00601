"""Statistics-adapted limited-feedback precoder codebooks.

A codebook of ``2**b`` semiunitary codewords is assembled from three parts:

* statistical codewords -- the dominant ``M``-dimensional eigen-subspaces of
  ``Sigma_t`` whose generalized eigenvalue ratio exceeds ``beta``;
* local codewords -- a root codeset rotated onto each statistical codeword and
  contracted by ``alpha_i = mu_i / mu_1``;
* RVQ codewords -- dominant right singular subspaces of sampled channels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import grassmann as gm
from .channel import CanonicalModel, sample, transmit_cov
from .errors import DegenerateStatisticsError, InfeasiblePlanError, InvalidInputError
from .linkperf import mi_batch, power_alloc

__all__ = [
    "GeneralizedSubspace",
    "CodebookPlan",
    "Codebook",
    "enumerate_generalized",
    "statistical_component",
    "allocate_sizes",
    "local_component",
    "rvq_component",
    "build_codebook",
    "select_mi",
    "select_distance",
    "codeword_mi",
    "pa_gain_ratio",
    "restrict_rank",
    "codebook_to_dict",
    "codebook_from_dict",
    "save_codebook",
    "load_codebook",
    "dominant_right_subspace",
]

RVQ_DUPLICATE_DIST = 1e-6
RVQ_MAX_REJECTS = 1000


@dataclass(frozen=True)
class GeneralizedSubspace:
    """Span of the eigenvectors ``indices`` of ``Sigma_t`` and their eigenvalue product ``mu``."""

    indices: tuple[int, ...]
    mu: float
    basis: np.ndarray


@dataclass(frozen=True)
class CodebookPlan:
    beta: float
    b: int
    n_stat: int
    n_loc: tuple[int, ...]
    n_rvq: int
    alphas: tuple[float, ...]
    root_size: int | None = None

    def __post_init__(self):
        if self.n_stat < 1 or len(self.n_loc) != self.n_stat or len(self.alphas) != self.n_stat:
            raise InvalidInputError("need one local count and one alpha per statistical codeword")
        if min(self.n_loc) < 0 or self.n_rvq < 0:
            raise InvalidInputError("component sizes must be non-negative")
        if self.n_stat + sum(self.n_loc) + self.n_rvq != 2**self.b:
            raise InfeasiblePlanError(
                f"{self.n_stat} + {sum(self.n_loc)} + {self.n_rvq} != 2**{self.b}"
            )
        if self.root_size is not None and max(self.n_loc) > self.root_size - 1:
            raise InvalidInputError("a local component cannot exceed root_size - 1 codewords")
        if abs(self.alphas[0] - 1.0) > 1e-12 or any(not 0 < a <= 1 for a in self.alphas):
            raise InvalidInputError("alphas must lie in (0, 1] with alphas[0] == 1")

    @property
    def size(self) -> int:
        return 2**self.b


@dataclass(frozen=True)
class Codebook:
    """Codewords stacked as ``(2**b, N_t, M)``, the fixed power profile and a tag per codeword."""

    codewords: np.ndarray
    power: np.ndarray
    tags: tuple[str, ...]
    plan: CodebookPlan | None = field(default=None, compare=False)

    def __post_init__(self):
        cw = np.asarray(self.codewords, dtype=complex)
        if cw.ndim != 3 or len(self.tags) != cw.shape[0]:
            raise InvalidInputError("codewords must be a (K, N_t, M) stack with one tag each")
        if not gm_semiunitary(cw):
            raise InvalidInputError("codewords must be semiunitary")
        power = np.asarray(self.power, dtype=float)
        if power.size != cw.shape[2] or np.any(power < 0) or power.sum() > cw.shape[2] + 1e-9:
            raise InvalidInputError("power must hold M non-negative entries summing to <= M")
        object.__setattr__(self, "codewords", cw)
        object.__setattr__(self, "power", power)

    def __len__(self) -> int:
        return self.codewords.shape[0]

    @property
    def b(self) -> int:
        return int(np.log2(len(self))) if len(self) & (len(self) - 1) == 0 else -1

    @property
    def m(self) -> int:
        return self.codewords.shape[2]

    def count(self, prefix: str) -> int:
        return sum(t.startswith(prefix) for t in self.tags)


def gm_semiunitary(stack: np.ndarray, tol: float = 1e-9) -> bool:
    gram = np.swapaxes(stack.conj(), -1, -2) @ stack
    return bool(np.max(np.abs(gram - np.eye(stack.shape[-1]))) <= tol)


def enumerate_generalized(lambda_t, u_t, m: int) -> list[GeneralizedSubspace]:
    """All ``C(N_t, m)`` eigenvector subsets of ``Sigma_t`` ranked by ``mu``.

    ``lambda_t`` must already be sorted non-increasing with ``u_t`` permuted
    to match. Ties in ``mu`` keep lexicographic order of the index sets.
    """
    lam = np.asarray(lambda_t, dtype=float)
    u_t = np.asarray(u_t, dtype=complex)
    if not 1 <= m <= lam.size:
        raise InvalidInputError("need 1 <= m <= N_t")
    entries = []
    for idx in combinations(range(lam.size), m):
        mu = float(np.prod(lam[list(idx)]))
        entries.append(GeneralizedSubspace(idx, mu, u_t[:, list(idx)]))
    # sorted() is stable, so equal mu keep the lexicographic order of combinations()
    return sorted(entries, key=lambda e: -e.mu)


def statistical_component(gen: Sequence[GeneralizedSubspace], beta: float) -> list[GeneralizedSubspace]:
    """Members with ``mu_i / mu_1 > beta``; the dominant subspace is always kept."""
    if not gen:
        raise InvalidInputError("empty generalized-subspace list")
    mu1 = gen[0].mu
    if mu1 <= 0:
        raise DegenerateStatisticsError("largest generalized eigenvalue is zero")
    return [gen[0]] + [g for g in gen[1:] if g.mu / mu1 > beta]


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    shares = total * weights / weights.sum()
    base = np.floor(shares).astype(int)
    rem = shares - base
    # ties in the remainder go to the lower index
    order = sorted(range(len(rem)), key=lambda i: (-rem[i], i))
    for i in order[: total - base.sum()]:
        base[i] += 1
    return base


def _capped_proportional(weights: np.ndarray, total: int, cap: int) -> np.ndarray:
    """Integer split of ``total`` proportional to ``weights`` with every part <= ``cap``.

    Parts whose proportional share reaches the cap are pinned there and the
    rest of the budget is re-split among the others; whatever cannot be
    placed is left over.
    """
    counts = np.zeros(weights.size, dtype=int)
    free = np.ones(weights.size, dtype=bool)
    budget = total
    while budget > 0 and free.any() and weights[free].sum() > 0:
        shares = budget * np.where(free, weights, 0.0) / weights[free].sum()
        over = free & (shares >= cap)
        if not over.any():
            counts[free] = _largest_remainder(weights[free], budget)
            over = free & (counts > cap)
            if not over.any():
                return counts
            counts[free] = 0
        counts[over] = cap
        budget -= cap * int(over.sum())
        free &= ~over
    return counts


def allocate_sizes(
    stat: Sequence[GeneralizedSubspace],
    b: int,
    root_size: int,
    n_rvq: int = 0,
    beta: float = float("nan"),
) -> CodebookPlan:
    """Split ``2**b`` codewords into statistical, local and RVQ parts.

    Every statistical member gets a codeword. ``n_rvq`` slots are reserved for
    RVQ up front; the remaining budget is divided among the local components
    in proportion to ``mu_i`` (largest-remainder rounding, each capped at
    ``root_size - 1``, capped shares re-split among the rest). Anything that
    still does not fit goes to RVQ.
    """
    n_stat = len(stat)
    size = 2**b
    if size < n_stat + n_rvq:
        raise InfeasiblePlanError(
            f"2**{b} = {size} codewords cannot hold {n_stat} statistical + {n_rvq} RVQ codewords"
        )
    mus = np.array([s.mu for s in stat], dtype=float)
    if mus[0] <= 0:
        raise DegenerateStatisticsError("largest generalized eigenvalue is zero")
    budget = size - n_stat - n_rvq
    n_loc = _capped_proportional(mus, budget, max(root_size - 1, 0))
    alphas = tuple(float(mu / mus[0]) for mu in mus)
    return CodebookPlan(
        beta=beta,
        b=b,
        n_stat=n_stat,
        n_loc=tuple(int(c) for c in n_loc),
        n_rvq=size - n_stat - int(n_loc.sum()),
        alphas=alphas,
        root_size=root_size,
    )


def _greedy_maxmin(candidates: np.ndarray, anchor: np.ndarray, count: int) -> list[int]:
    """Indices chosen one at a time, each maximizing its min distance to the
    anchor and the already chosen ones (ties: lowest index). Nested in ``count``."""
    chosen: list[int] = []
    closest = np.atleast_1d(gm.dist(anchor, candidates)).astype(float)
    available = np.ones(len(candidates), dtype=bool)
    for _ in range(count):
        score = np.where(available, closest, -np.inf)
        k = int(np.argmax(score))
        chosen.append(k)
        available[k] = False
        closest = np.minimum(closest, np.atleast_1d(gm.dist(candidates[k], candidates)))
    return chosen


def local_component(root: gm.Codeset, target, alpha: float, count: int) -> np.ndarray:
    """Local codewords around ``target`` (a basis or :class:`GeneralizedSubspace`).

    The root codeset is rotated so its center lands on the target, its other
    members are contracted toward the target by ``alpha``, and ``count`` of
    them are kept by greedy max-min selection. The center is not returned.
    """
    basis = target.basis if isinstance(target, GeneralizedSubspace) else np.asarray(target, dtype=complex)
    if count < 0 or count > len(root) - 1:
        raise InvalidInputError(f"count must lie in [0, {len(root) - 1}], got {count}")
    n_t, m = basis.shape
    if count == 0:
        return np.zeros((0, n_t, m), dtype=complex)
    rotated = gm.rotate(root.members, root.center, basis)
    scaled = gm.scale_many(rotated[1:], basis, alpha)
    return scaled[_greedy_maxmin(scaled, basis, count)]


def dominant_right_subspace(h: np.ndarray, m: int) -> np.ndarray:
    """``m`` dominant right singular vectors of ``h`` (broadcasts over stacks)."""
    _, _, vh = np.linalg.svd(h)
    return np.swapaxes(vh[..., :m, :].conj(), -1, -2)


def _projector_points(v: np.ndarray) -> np.ndarray:
    p = v @ np.swapaxes(v.conj(), -1, -2)
    return np.concatenate([p.real, p.imag], axis=-1).reshape(len(v), -1)


def _near_duplicates(fixed: np.ndarray, cand: np.ndarray, tol: float) -> list[int]:
    """Candidate indices within ``tol`` of a fixed point or an earlier candidate."""
    allv = np.concatenate([fixed, cand], axis=0)
    if len(allv) < 2:
        return []
    # ||P1 - P2||_F <= sqrt(2M) * dist, so the tree query cannot miss a pair
    radius = np.sqrt(2 * allv.shape[-1]) * tol * (1 + 1e-9)
    pairs = cKDTree(_projector_points(allv)).query_pairs(radius, output_type="ndarray")
    k = len(fixed)
    flagged = set()
    for a, b in pairs:
        if b >= k and gm.dist(allv[a], allv[b]) < tol:
            flagged.add(int(b) - k)
    return sorted(flagged)


def rvq_component(model: CanonicalModel, m: int, n: int, rng: np.random.Generator, existing=None) -> np.ndarray:
    """``n`` codewords from the dominant right subspaces of sampled channels.

    One channel is drawn per codeword, in order. Draws landing within 1e-6 of
    an ``existing`` codeword or of an earlier RVQ draw are replaced by fresh
    draws; statistics too degenerate to yield ``n`` distinct subspaces raise
    after a bounded number of replacements.
    """
    if n < 0:
        raise InvalidInputError("n must be >= 0")
    fixed = np.zeros((0, model.n_t, m), dtype=complex) if existing is None else np.asarray(existing, dtype=complex)
    out = np.zeros((n, model.n_t, m), dtype=complex)
    for i in range(n):
        out[i] = dominant_right_subspace(sample(model, rng), m)
    replaced = 0
    while bad := _near_duplicates(fixed, out, RVQ_DUPLICATE_DIST):
        replaced += len(bad)
        if replaced > RVQ_MAX_REJECTS:
            raise DegenerateStatisticsError(f"the channel statistics do not support {n} distinct RVQ codewords")
        for i in bad:
            out[i] = dominant_right_subspace(sample(model, rng), m)
    return out


def build_codebook(
    model: CanonicalModel,
    m: int,
    b: int,
    beta: float,
    root: gm.Codeset,
    power_policy: str,
    rho: float,
    rng: np.random.Generator,
    n_rvq: int = 0,
) -> Codebook:
    """Assemble the three-component codebook for ``model``.

    Codewords are ordered statistical, then local (grouped by statistical
    member), then RVQ. ``rng`` is consumed only by the RVQ draws, so equally
    seeded builds with growing ``b`` share their RVQ prefix.
    """
    lam, u_sorted, _, _ = transmit_cov(model)
    gen = enumerate_generalized(lam, u_sorted, m)
    stat = statistical_component(gen, beta)
    plan = allocate_sizes(stat, b, len(root), n_rvq=n_rvq, beta=beta)
    words, tags = [], []
    for s in stat:
        words.append(s.basis[None])
        tags.append("statistical")
    for i, (s, count, alpha) in enumerate(zip(stat, plan.n_loc, plan.alphas)):
        loc = local_component(root, s, alpha, count)
        words.append(loc)
        tags.extend([f"local:{i}"] * count)
    fixed = np.concatenate(words, axis=0)
    rvq = rvq_component(model, m, plan.n_rvq, rng, existing=fixed)
    tags.extend(["rvq"] * plan.n_rvq)
    codewords = np.concatenate([fixed, rvq], axis=0)
    power = power_alloc(lam, m, rho, power_policy)
    return Codebook(codewords, power, tuple(tags), plan)


def codeword_mi(cb: Codebook, h, rho: float) -> np.ndarray:
    """Mutual information of every codeword (with the codebook power) on channel(s) ``h``.

    ``h`` may be a single ``(N_r, N_t)`` channel or a stack ``(T, N_r, N_t)``;
    the result has shape ``(K,)`` or ``(T, K)``.
    """
    h = np.asarray(h, dtype=complex)
    f = cb.codewords * np.sqrt(cb.power)
    hf = h[..., None, :, :] @ f
    return mi_batch(hf, rho)


def select_mi(cb: Codebook, h, rho: float):
    """Index maximizing the codeword mutual information; lowest index on ties."""
    if not rho > 0:
        raise InvalidInputError("rho must be positive")
    return _argmax_first(codeword_mi(cb, h, rho))


def select_distance(cb: Codebook, h, m: int | None = None):
    """Index of the codeword closest to the ``m`` dominant right singular vectors of ``h``."""
    m = cb.m if m is None else m
    h = np.asarray(h, dtype=complex)
    v_h = dominant_right_subspace(h, m)
    d = gm.dist(v_h[..., None, :, :], cb.codewords)
    return _argmax_first(-np.asarray(d))


def _argmax_first(values: np.ndarray):
    # np.argmax already returns the first maximizer
    idx = np.argmax(values, axis=-1)
    return int(idx) if np.ndim(idx) == 0 else idx


def pa_gain_ratio(v) -> float:
    """Peak-to-minimum entry magnitude ratio of a codeword (inf if any entry is 0)."""
    mag = np.abs(np.asarray(v, dtype=complex))
    lo = mag.min()
    return float("inf") if lo == 0 else float(mag.max() / lo)


def restrict_rank(cb: Codebook, m_small: int, columns: Sequence[int]) -> Codebook:
    """Lower-rank codebook keeping the given codeword columns.

    The power entries of the kept columns are rescaled to sum to at most
    ``m_small``.
    """
    cols = list(columns)
    if not 1 <= m_small < cb.m or len(cols) != m_small or len(set(cols)) != m_small:
        raise InvalidInputError("columns must list m_small distinct indices with m_small < M")
    if min(cols) < 0 or max(cols) >= cb.m:
        raise InvalidInputError("column index out of range")
    power = cb.power[cols].astype(float)
    total = power.sum()
    if total > m_small:
        power = power * (m_small / total)
    return Codebook(cb.codewords[:, :, cols], power, cb.tags)


def _encode(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def codebook_to_dict(cb: Codebook) -> dict:
    return {
        "b": cb.b,
        "power": [float(p) for p in cb.power],
        "codewords": [{"tag": t, "matrix": _encode(v)} for t, v in zip(cb.tags, cb.codewords)],
    }


def codebook_from_dict(d: dict) -> Codebook:
    mats = np.asarray([c["matrix"] for c in d["codewords"]], dtype=float)
    codewords = mats[..., 0] + 1j * mats[..., 1]
    cb = Codebook(codewords, d["power"], tuple(c["tag"] for c in d["codewords"]))
    if "b" in d and d["b"] != cb.b:
        raise InvalidInputError(f"file declares b={d['b']} but holds {len(cb)} codewords")
    return cb


def save_codebook(cb: Codebook, path) -> None:
    with open(path, "w") as fh:
        json.dump(codebook_to_dict(cb), fh)


def load_codebook(path) -> Codebook:
    with open(path) as fh:
        return codebook_from_dict(json.load(fh))
