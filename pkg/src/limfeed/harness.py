"""Monte Carlo runner for mutual-information and BER sweeps over SNR.

Every trial draws its channel (and, for BER, its bits and noise) from a
generator seeded by ``(seed, stream, snr index, trial index)``, so all schemes
see the same draws at a given SNR and results do not depend on how trials
are split across worker threads.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import grassmann as gm
from .channel import (
    CanonicalModel,
    iid_model,
    model_from_dict,
    model_to_dict,
    sample,
    separable_model,
    transmit_cov,
    virtual_model,
    dft_matrix,
)
from .codebook import (
    Codebook,
    build_codebook,
    codeword_mi,
    dominant_right_subspace,
    load_codebook,
    rvq_component,
)
from .errors import InvalidInputError
from .linkperf import POWER_POLICIES, mi_batch, power_alloc, qpsk_errors_batch, waterfill

__all__ = [
    "Scheme",
    "Scenario",
    "ResultTable",
    "run",
    "scenario_fig3",
    "scenario_fig4",
    "iid_codebook_scheme",
    "scenario_to_dict",
    "scenario_from_dict",
    "FIG3_LAMBDA_T",
    "FIG3_LAMBDA_R",
    "FIG4_VARIANCES",
    "load_scenario",
    "preset_model",
    "snr_at_level",
    "scenario_codebooks",
]

FIG3_LAMBDA_T = (14.98, 0.50, 0.26, 0.26)
FIG3_LAMBDA_R = (15.5, 0.25, 0.15, 0.10)
FIG4_VARIANCES = (
    (1.24, 1.42, 7.49, 0.23),
    (0.41, 0.14, 0.42, 0.03),
    (0.72, 1.39, 0.07, 0.02),
    (0.28, 0.13, 0.50, 1.51),
)

SCHEME_KINDS = ("perfect", "statistical", "quantized", "iid_codebook")
CHUNK = 250

# seed-stream tags
_CHANNEL, _NOISE, _ROOT, _RVQ, _IID = 0, 1, 2, 3, 4


@dataclass
class Scheme:
    """One precoding strategy of a scenario.

    ``quantized`` uses ``b``, ``beta``, ``n_rvq`` (RVQ slots reserved up
    front), the root codeset parameters and a ``selector`` (``mi`` or
    ``distance``); ``codebook_file`` replaces the built codebook by a saved one.
    ``perfect`` waterfills over the channel eigenmodes unless ``policy`` is
    ``uniform``.
    """

    kind: str
    b: int = 0
    beta: float = 0.5
    n_rvq: int = 0
    selector: str = "mi"
    policy: str | None = None
    root_n: int = 4
    root_theta: float = 0.8
    root_trials: int = 20000
    codebook_file: str | None = None
    label: str | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise InvalidInputError(f"unknown scheme {self.kind!r}; expected one of {SCHEME_KINDS}")
        if self.selector not in ("mi", "distance"):
            raise InvalidInputError(f"unknown selector {self.selector!r}")
        if self.policy is None:
            self.policy = "waterfill" if self.kind == "perfect" else "uniform"
        allowed = ("waterfill", "uniform") if self.kind == "perfect" else POWER_POLICIES
        if self.policy not in allowed:
            raise InvalidInputError(f"policy {self.policy!r} not valid for {self.kind}; expected one of {allowed}")
        if self.kind in ("quantized", "iid_codebook") and self.b < 0:
            raise InvalidInputError("b must be >= 0")
        if self.label is None:
            if self.kind in ("quantized", "iid_codebook"):
                self.label = f"{self.kind}_B{self.b}"
            else:
                self.label = self.kind


@dataclass
class Scenario:
    model: CanonicalModel | str
    m: int
    snr_grid_db: list[float]
    schemes: list[Scheme]
    trials: int = 2000
    seed: int = 0
    metric: str = "mi"
    n_symbols: int = 100

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if len(self.snr_grid_db) == 0:
            raise InvalidInputError("the SNR grid is empty")
        if self.metric not in ("mi", "ber"):
            raise InvalidInputError(f"metric must be 'mi' or 'ber', got {self.metric!r}")
        model = self.resolved_model()
        if not 1 <= self.m <= min(model.n_t, model.n_r):
            raise InvalidInputError("m must not exceed the antenna dimensions")
        labels = [s.label for s in self.schemes]
        if len(set(labels)) != len(labels):
            raise InvalidInputError("scheme labels must be unique")

    def resolved_model(self) -> CanonicalModel:
        if isinstance(self.model, CanonicalModel):
            return self.model
        return preset_model(self.model)


def preset_model(name: str) -> CanonicalModel:
    if name == "fig3":
        return separable_model(FIG3_LAMBDA_T, FIG3_LAMBDA_R, dft_matrix(4), dft_matrix(4))
    if name == "fig4":
        return virtual_model(FIG4_VARIANCES)
    if name.startswith("iid"):
        n = int(name[3:] or 4)
        return iid_model(n, n)
    raise InvalidInputError(f"unknown model preset {name!r}")


@dataclass
class ResultTable:
    """Per-(SNR, scheme) averages; ``samples`` keeps the per-trial values."""

    metric: str
    rows: list[tuple[float, str, float, float, int]] = field(default_factory=list)
    samples: dict[tuple[float, str], np.ndarray] = field(default_factory=dict)

    def value(self, snr_db: float, scheme: str) -> float:
        for s, lab, v, _, _ in self.rows:
            if s == snr_db and lab == scheme:
                return v
        raise KeyError((snr_db, scheme))

    def curve(self, scheme: str) -> tuple[np.ndarray, np.ndarray]:
        pts = [(s, v) for s, lab, v, _, _ in self.rows if lab == scheme]
        return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["snr_db", "scheme", "metric", "value", "stderr", "trials"])
        for snr_db, label, value, err, n in self.rows:
            writer.writerow([f"{snr_db:.10g}", label, self.metric, f"{value:.12g}", f"{err:.12g}", n])
        return buf.getvalue()


def _rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in key])))


def iid_codebook_scheme(b: int, model_dims: tuple[int, int, int], rng: np.random.Generator) -> Codebook:
    """Open-loop baseline: ``2**b`` RVQ codewords drawn under the i.i.d. model.

    ``model_dims`` is ``(n_r, n_t, m)``; power is uniform.
    """
    n_r, n_t, m = model_dims
    words = rvq_component(iid_model(n_r, n_t), m, 2**b, rng)
    return Codebook(words, np.ones(m), ("rvq",) * 2**b)


@dataclass
class _Prepared:
    scheme: Scheme
    codebook: Codebook | None = None
    stat_v: np.ndarray | None = None


def _prepare(scenario: Scenario, model: CanonicalModel) -> list[_Prepared]:
    lam, u_sorted, _, _ = transmit_cov(model)
    roots: dict[tuple, gm.Codeset] = {}
    out = []
    for sch in scenario.schemes:
        p = _Prepared(sch)
        if sch.kind == "statistical":
            p.stat_v = u_sorted[:, : scenario.m]
        elif sch.kind == "iid_codebook":
            p.codebook = iid_codebook_scheme(
                sch.b, (model.n_r, model.n_t, scenario.m), _rng(scenario.seed, _IID, sch.b)
            )
        elif sch.kind == "quantized":
            if sch.codebook_file:
                p.codebook = load_codebook(sch.codebook_file)
            else:
                key = (model.n_t, scenario.m, sch.root_n, sch.root_theta, sch.root_trials)
                if key not in roots:
                    roots[key] = gm.make_root_codeset(
                        _rng(scenario.seed, _ROOT, model.n_t, scenario.m, sch.root_n),
                        model.n_t, scenario.m, sch.root_n, sch.root_theta, sch.root_trials,
                    )
                # one RVQ stream for every quantized scheme keeps codebooks nested in b
                p.codebook = build_codebook(
                    model, scenario.m, sch.b, sch.beta, roots[key], "uniform", 1.0,
                    _rng(scenario.seed, _RVQ), n_rvq=sch.n_rvq,
                )
        out.append(p)
    return out


def scenario_codebooks(scenario: Scenario) -> dict[str, Codebook]:
    """The codebooks :func:`run` would use, keyed by scheme label."""
    prepared = _prepare(scenario, scenario.resolved_model())
    return {p.scheme.label: p.codebook for p in prepared if p.codebook is not None}


def _scheme_power(p: _Prepared, lam: np.ndarray, m: int, rho: float) -> np.ndarray:
    if p.scheme.kind == "iid_codebook":
        return np.ones(m)
    return power_alloc(lam, m, rho, p.scheme.policy)


def _perfect_f(h: np.ndarray, m: int, rho: float) -> np.ndarray:
    _, s, vh = np.linalg.svd(h)
    v = np.swapaxes(vh[:, :m, :].conj(), -1, -2)
    lam_h = s[:, :m] ** 2
    power = np.stack([waterfill(rho / m * lh, m)[0] for lh in lam_h])
    return v * np.sqrt(power)[:, None, :]


def _precoders(p: _Prepared, h: np.ndarray, m: int, rho: float, lam: np.ndarray) -> np.ndarray:
    """Per-trial precoders ``(T, N_t, M)`` used by scheme ``p`` on channels ``h``."""
    kind = p.scheme.kind
    if kind == "perfect":
        if p.scheme.policy == "uniform":
            return dominant_right_subspace(h, m)
        return _perfect_f(h, m, rho)
    power = np.sqrt(_scheme_power(p, lam, m, rho))
    if kind == "statistical":
        return np.broadcast_to(p.stat_v * power, (h.shape[0],) + p.stat_v.shape)
    cb = p.codebook
    f_all = cb.codewords * power
    if p.scheme.selector == "mi":
        mis = mi_batch(h[:, None] @ f_all, rho)
        idx = np.argmax(mis, axis=1)
    else:
        v_h = dominant_right_subspace(h, m)
        idx = np.argmin(gm.dist(v_h[:, None], cb.codewords), axis=1)
    return f_all[idx]


def _run_chunk(scenario, model, prepared, lam, snr_idx, start, stop):
    rho = 10.0 ** (scenario.snr_grid_db[snr_idx] / 10.0)
    m = scenario.m
    h = np.stack([sample(model, _rng(scenario.seed, _CHANNEL, snr_idx, t)) for t in range(start, stop)])
    values = np.empty((len(prepared), stop - start))
    if scenario.metric == "mi":
        for k, p in enumerate(prepared):
            values[k] = mi_batch(h @ _precoders(p, h, m, rho, lam), rho)
        return values
    # chunk boundaries are fixed, so a per-chunk stream is thread-independent;
    # reseeding per scheme gives every scheme the same bits and noise
    for k, p in enumerate(prepared):
        f = _precoders(p, h, m, rho, lam)
        errs = qpsk_errors_batch(h, f, rho, _rng(scenario.seed, _NOISE, snr_idx, start), scenario.n_symbols)
        values[k] = errs.sum(axis=1) / (2.0 * m * scenario.n_symbols)
    return values


def run(scenario: Scenario, threads: int = 1) -> ResultTable:
    """Average the scenario metric over ``trials`` channel draws per SNR point.

    Quantized codebooks are built once (the statistics are fixed). Trials are
    processed in fixed-size chunks, optionally on ``threads`` worker threads;
    the output does not depend on ``threads``.
    """
    model = scenario.resolved_model()
    prepared = _prepare(scenario, model)
    lam = transmit_cov(model)[0]
    tasks = [
        (si, start, min(start + CHUNK, scenario.trials))
        for si in range(len(scenario.snr_grid_db))
        for start in range(0, scenario.trials, CHUNK)
    ]
    work = lambda task: _run_chunk(scenario, model, prepared, lam, *task)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(t) for t in tasks]
    per_snr: dict[int, list[np.ndarray]] = {}
    for (si, _, _), res in zip(tasks, results):
        per_snr.setdefault(si, []).append(res)
    table = ResultTable(metric=scenario.metric)
    n = scenario.trials
    for si, snr_db in enumerate(scenario.snr_grid_db):
        vals = np.concatenate(per_snr[si], axis=1)
        for k, p in enumerate(prepared):
            x = vals[k]
            err = float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            table.rows.append((float(snr_db), p.scheme.label, float(np.mean(x)), err, n))
            table.samples[(float(snr_db), p.scheme.label)] = x
    return table


def scenario_fig3(metric: str = "mi", trials: int = 2000, seed: int = 2008) -> Scenario:
    """4x4 separable channel with two streams and uniform power.

    The quantized schemes reproduce the published plans: B=1 holds the
    dominant statistical codeword plus one RVQ codeword, B=2 adds one local
    and one RVQ codeword, B=4 uses 3 statistical, (3, 3, 2) local and 5 RVQ
    codewords. The ``beta`` presets are chosen to give those statistical
    counts. MI runs select by mutual information on -5..25 dB; BER runs
    select by distance on 0..40 dB in 1 dB steps.
    """
    selector = "mi" if metric == "mi" else "distance"
    root = dict(root_n=4, root_theta=0.80, root_trials=20000)
    # a waterfilled perfect-CSI precoder may switch a stream off, which makes
    # raw BER meaningless, so the BER study uses equal power on both modes
    perfect = Scheme("perfect") if metric == "mi" else Scheme("perfect", policy="uniform")
    schemes = [
        Scheme("statistical"),
        Scheme("quantized", b=1, beta=0.6, n_rvq=1, selector=selector, **root),
        Scheme("quantized", b=2, beta=0.6, n_rvq=2, selector=selector, **root),
        Scheme("quantized", b=4, beta=0.1, n_rvq=5, selector=selector, **root),
        perfect,
        Scheme("iid_codebook", b=4),
    ]
    if metric == "mi":
        grid = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0]
    else:
        grid = [float(x) for x in np.arange(0.0, 40.5, 1.0)]
    return Scenario(
        model="fig3", m=2, snr_grid_db=grid,
        schemes=schemes, trials=trials, seed=seed, metric=metric, n_symbols=100,
    )


def scenario_fig4(trials: int = 2000, seed: int = 2008) -> Scenario:
    """4x4 virtual channel with the published variance matrix and three streams."""
    root = dict(root_n=4, root_theta=0.90, root_trials=20000)
    schemes = [
        Scheme("statistical"),
        Scheme("quantized", b=1, beta=0.62, n_rvq=0, **root),
        Scheme("quantized", b=2, beta=0.62, n_rvq=2, **root),
        Scheme("quantized", b=4, beta=0.3, n_rvq=5, **root),
        Scheme("perfect"),
        Scheme("iid_codebook", b=4),
    ]
    return Scenario(
        model="fig4", m=3, snr_grid_db=[-5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
        schemes=schemes, trials=trials, seed=seed, metric="mi",
    )


def scenario_to_dict(sc: Scenario) -> dict:
    model = sc.model if isinstance(sc.model, str) else model_to_dict(sc.model)
    return {
        "model": model,
        "m": sc.m,
        "snr_grid_db": list(sc.snr_grid_db),
        "schemes": [{k: v for k, v in asdict(s).items() if v is not None} for s in sc.schemes],
        "trials": sc.trials,
        "seed": sc.seed,
        "metric": sc.metric,
        "n_symbols": sc.n_symbols,
    }


def scenario_from_dict(d: dict) -> Scenario:
    model = d["model"]
    if isinstance(model, dict):
        model = model_from_dict(model)
    schemes = []
    for s in d["schemes"]:
        s = dict(s)
        kind = s.pop("kind", None) or s.pop("type")
        schemes.append(Scheme(kind, **s))
    return Scenario(
        model=model,
        m=int(d["m"]),
        snr_grid_db=[float(x) for x in d["snr_grid_db"]],
        schemes=schemes,
        trials=int(d.get("trials", 2000)),
        seed=int(d.get("seed", 0)),
        metric=d.get("metric", "mi"),
        n_symbols=int(d.get("n_symbols", 100)),
    )


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def snr_at_level(snr_db: Sequence[float], values: Sequence[float], level: float, decreasing: bool = False) -> float:
    """Linear interpolation of the SNR where a monotone curve crosses ``level``.

    For BER curves pass ``decreasing=True``; interpolation is then done on
    ``log10`` of the values. Returns ``nan`` when the level is never crossed.
    """
    x = np.asarray(snr_db, dtype=float)
    y = np.asarray(values, dtype=float)
    if decreasing:
        with np.errstate(divide="ignore"):
            y = -np.log10(np.maximum(y, 1e-300))
        level = -np.log10(level)
    for i in range(len(x) - 1):
        if y[i] <= level <= y[i + 1] and y[i + 1] > y[i]:
            return float(x[i] + (level - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i]))
    return float("nan")
