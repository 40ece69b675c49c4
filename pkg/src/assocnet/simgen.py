"""Generative benchmark: logistic-linear networks plus noisy correlations.

Networks are drawn from a logistic-linear model: each node gets a
propensity alpha_i (log of a bounded-Pareto draw plus an offset), each
unordered pair an edge with probability sigmoid(alpha_i + alpha_j +
theta_ij), where theta_ij depends on whether the pair shares a planted
community. Pairwise sample correlations are then drawn from 2x2 Wishart
matrices whose population correlation is r_gen on edges and 0 off
edges.

The default Pareto shape and offset are calibrated so that the expected
within-community densities at theta_in in {50, 30, 20, 10} (with
theta_out = 1) are approximately {0.81, 0.34, 0.15, 0.039} and the
between-community density approximately 0.0013.

Every operation draws from seed-derived substreams keyed by purpose and
row, so results are independent of iteration order and identical for a
given seed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .assoc import SymmetricMatrix, fisher_z
from .community import SpectralConfig, detect_communities, spectral_on_continuous
from .ebayes import infer_adjacency
from .errors import InvalidInputError, ParameterError
from .graphs import Partition, SparseAdjacency
from .metrics import edge_confusion, edge_density, nmi

DEFAULT_PARETO_LOW = 1.0
DEFAULT_PARETO_HIGH = 3.3e15
DEFAULT_PARETO_EXPONENT = 0.0022
DEFAULT_ALPHA_OFFSET = -35.73

_STREAM_ALPHA = 0
_STREAM_PLANT = 1
_STREAM_NETWORK = 2
_STREAM_WISHART = 3
_STREAM_DETECT = 4

_QUAD_NODES, _QUAD_WEIGHTS = np.polynomial.legendre.leggauss(240)
_QUAD_U = 0.5 * (_QUAD_NODES + 1.0)
_QUAD_W = 0.5 * _QUAD_WEIGHTS


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one generative configuration."""

    m: int
    k: int
    community_size: int
    theta_in: float
    theta_out: float
    r_gen: float
    nu: int
    pareto_low: float = DEFAULT_PARETO_LOW
    pareto_high: float = DEFAULT_PARETO_HIGH
    pareto_exponent: float = DEFAULT_PARETO_EXPONENT
    alpha_offset: float = DEFAULT_ALPHA_OFFSET
    deterministic_alpha: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ParameterError("m must be at least 2")
        if self.k < 1 or self.community_size < 1:
            raise ParameterError("k and community_size must be positive")
        if self.k * self.community_size > self.m:
            raise ParameterError("k * community_size must not exceed m")
        if not 0.0 < self.r_gen <= 1.0:
            raise ParameterError("r_gen must lie in (0, 1]")
        if self.nu < 4:
            raise ParameterError("nu must be at least 4")
        if not 0.0 < self.pareto_low < self.pareto_high:
            raise ParameterError("need 0 < pareto_low < pareto_high")
        if self.pareto_exponent <= 0.0:
            raise ParameterError("pareto_exponent must be positive")
        if self.seed < 0:
            raise ParameterError("seed must be nonnegative")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, mapping: dict) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        return cls(**mapping)


@dataclass(frozen=True)
class GroundTruth:
    """A generated network with its planted communities and propensities."""

    adjacency: SparseAdjacency
    partition: Partition
    alpha: np.ndarray

    def __post_init__(self) -> None:
        alpha = np.asarray(self.alpha, dtype=np.float64)
        object.__setattr__(self, "alpha", alpha)
        if not (self.adjacency.m == self.partition.m == alpha.size):
            raise InvalidInputError("ground-truth parts must agree on m")


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def derive_seed(seed: int, *key: int) -> int:
    """A stable integer sub-seed for downstream components."""
    return int(
        np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1)[0]
    )


def log_bounded_pareto_ppf(u, low: float, high: float, exponent: float):
    """log of the bounded-Pareto quantile function, stable for tiny exponents."""
    span = np.log(high / low)
    tail = -np.expm1(-exponent * span)
    return np.log(low) - np.log1p(-np.asarray(u) * tail) / exponent


def sample_alpha(config: SimConfig) -> np.ndarray:
    """Node propensities: log of bounded-Pareto draws plus the offset.

    With deterministic_alpha the draws are replaced by the evenly spaced
    quantiles (i + 1/2)/m, giving a fixed-propensity variant of the
    model (provided for completeness, not benchmarked).
    """
    if config.deterministic_alpha:
        u = (np.arange(config.m) + 0.5) / config.m
    else:
        u = _rng(config.seed, _STREAM_ALPHA).random(config.m)
    return (
        log_bounded_pareto_ppf(
            u, config.pareto_low, config.pareto_high, config.pareto_exponent
        )
        + config.alpha_offset
    )


def plant_communities(config: SimConfig) -> Partition:
    """k disjoint uniformly random groups of community_size; rest background 0."""
    rng = _rng(config.seed, _STREAM_PLANT)
    order = rng.permutation(config.m)
    labels = np.zeros(config.m, dtype=np.int64)
    for g in range(config.k):
        members = order[g * config.community_size : (g + 1) * config.community_size]
        labels[members] = g + 1
    return Partition(labels, config.k)


def generate_network(
    alpha: np.ndarray,
    partition: Partition,
    theta_in: float,
    theta_out: float,
    seed: int,
) -> SparseAdjacency:
    """Draw one network: logit(p_ij) = alpha_i + alpha_j + theta_ij.

    theta_ij is theta_in when i and j share a planted (nonzero) label
    and theta_out otherwise. Each unordered pair is drawn once from a
    per-row substream and mirrored.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    m = alpha.size
    if partition.m != m:
        raise InvalidInputError("alpha and partition must agree on m")
    labels = partition.labels
    rows, cols = [], []
    for i in range(m - 1):
        rest = np.arange(i + 1, m)
        same = (labels[rest] == labels[i]) & (labels[i] > 0)
        theta = np.where(same, theta_in, theta_out)
        p = expit(alpha[i] + alpha[rest] + theta)
        hits = _rng(seed, _STREAM_NETWORK, i).random(m - 1 - i) < p
        chosen = rest[hits]
        rows.append(np.full(chosen.size, i, dtype=np.int64))
        cols.append(chosen)
    edges = np.column_stack(
        [np.concatenate(rows) if rows else np.empty(0, dtype=np.int64),
         np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)]
    )
    return SparseAdjacency(m, edges)


def generate_correlations(
    adj: SparseAdjacency, r_gen: float, nu: int, seed: int
) -> SymmetricMatrix:
    """Sample correlations from pairwise 2x2 Wishart(S, nu) draws.

    S has unit diagonal and off-diagonal r_gen on edges, 0 off edges.
    Each draw uses the Bartlett construction: with S = L L^T, the sample
    correlation reduces to y / sqrt(y^2 + s^2 c2^2) where y = r c1 +
    s n, s = sqrt(1 - r^2), c1^2 ~ chi2(nu), c2^2 ~ chi2(nu - 1),
    n ~ N(0, 1). The diagonal is set to 0 by convention.
    """
    if not 0.0 < r_gen <= 1.0:
        raise ParameterError("r_gen must lie in (0, 1]")
    if nu < 4:
        raise ParameterError("nu must be at least 4")
    m = adj.m
    dense = adj.to_dense().astype(bool)
    values = np.zeros((m, m))
    for i in range(m - 1):
        rng = _rng(seed, _STREAM_WISHART, i)
        width = m - 1 - i
        c1 = np.sqrt(rng.chisquare(nu, width))
        c2 = np.sqrt(rng.chisquare(nu - 1, width))
        noise = rng.standard_normal(width)
        r = np.where(dense[i, i + 1 :], r_gen, 0.0)
        s = np.sqrt(1.0 - r * r)
        y = r * c1 + s * noise
        r_hat = y / np.sqrt(y * y + s * s * c2 * c2)
        values[i, i + 1 :] = r_hat
        values[i + 1 :, i] = r_hat
    return SymmetricMatrix(values, "correlation")


def generate_ground_truth(config: SimConfig) -> GroundTruth:
    """Propensities, planted communities, and one network draw."""
    alpha = sample_alpha(config)
    partition = plant_communities(config)
    adjacency = generate_network(
        alpha, partition, config.theta_in, config.theta_out, config.seed
    )
    return GroundTruth(adjacency, partition, alpha)


def expected_density(theta: float, config: SimConfig) -> float:
    """E[sigmoid(alpha_i + alpha_j + theta)] for an i.i.d. pair, by quadrature."""
    t = (
        log_bounded_pareto_ppf(
            _QUAD_U, config.pareto_low, config.pareto_high, config.pareto_exponent
        )
        + config.alpha_offset
    )
    pair = t[:, None] + t[None, :] + theta
    return float(_QUAD_W @ expit(pair) @ _QUAD_W)


def calibrate_alpha_offset(
    config: SimConfig, target_between: float = 0.0013
) -> float:
    """Offset making the expected between-community density hit the target.

    Solves expected_density(theta_out) = target_between in the offset by
    bracketed root-finding; the expectation is strictly increasing in
    the offset. Returns the offset; the caller decides whether to adopt
    it.
    """
    if not 0.0 < target_between < 1.0:
        raise ParameterError("target density must lie in (0, 1)")

    def gap(offset: float) -> float:
        probe = dataclasses.replace(config, alpha_offset=offset)
        return expected_density(config.theta_out, probe) - target_between

    return float(brentq(gap, -300.0, 100.0, xtol=1e-10))


def run_single(config: SimConfig, estimate_a: bool = False, baseline: bool = False):
    """One generate -> infer -> detect run; returns a list of record dicts.

    The first record is the thresholding pipeline; with baseline=True a
    second record clusters |r| directly with the same settings.
    """
    truth = generate_ground_truth(config)
    corr = generate_correlations(truth.adjacency, config.r_gen, config.nu, config.seed)
    assoc = fisher_z(corr, config.nu)
    adjacency, fit = infer_adjacency(assoc, estimate_a=estimate_a)
    spectral = SpectralConfig(K=config.k, seed=derive_seed(config.seed, _STREAM_DETECT))
    partition = detect_communities(adjacency, spectral)
    confusion = edge_confusion(adjacency, truth.adjacency)
    truth_density = edge_density(truth.adjacency, truth.partition)
    record = {
        "method": "threshold-spectral",
        "nmi": nmi(partition, truth.partition),
        "tpr": confusion.tpr,
        "fpr": confusion.fpr,
        "detected_edges": adjacency.edge_count,
        "true_edges": truth.adjacency.edge_count,
        "true_density": truth_density.overall,
        "true_within_density": truth_density.within,
        "true_between_density": truth_density.between,
        "median_w": float(np.median(fit.w)),
        "median_a": float(np.median(fit.a)),
    }
    records = [record]
    if baseline:
        direct = spectral_on_continuous(corr, spectral)
        records.append(
            {
                "method": "spectral-direct",
                "nmi": nmi(direct, truth.partition),
                "tpr": None,
                "fpr": None,
                "detected_edges": None,
                "true_edges": truth.adjacency.edge_count,
                "true_density": truth_density.overall,
                "true_within_density": truth_density.within,
                "true_between_density": truth_density.between,
                "median_w": None,
                "median_a": None,
            }
        )
    return records


def expand_grid(mapping: dict) -> list[SimConfig]:
    """Expand a config mapping into grid points.

    Fields holding lists are swept; the Cartesian product is taken in
    the order the swept fields appear. Scalar fields are shared.
    """
    base = dict(mapping)
    swept = [(name, value) for name, value in base.items() if isinstance(value, list)]
    if not swept:
        return [SimConfig.from_dict(base)]
    configs = []
    indices = [0] * len(swept)
    totals = [len(values) for _, values in swept]
    while True:
        point = dict(base)
        for (name, values), idx in zip(swept, indices):
            point[name] = values[idx]
        configs.append(SimConfig.from_dict(point))
        pos = len(indices) - 1
        while pos >= 0:
            indices[pos] += 1
            if indices[pos] < totals[pos]:
                break
            indices[pos] = 0
            pos -= 1
        if pos < 0:
            return configs


_SUMMARY_METRICS = ("nmi", "tpr", "fpr", "detected_edges")


def run_study(
    configs: list[SimConfig],
    repetitions: int,
    seed: int = 0,
    estimate_a: bool = False,
    baseline: bool = False,
):
    """Repeat run_single over a grid; returns (records, summary_rows).

    Each (grid point, repetition) gets its own derived seed. A failing
    run contributes an error record instead of aborting the study. The
    summary holds per-point, per-method quartiles of each metric.
    """
    if repetitions < 1:
        raise ParameterError("repetitions must be at least 1")
    records = []
    for point, config in enumerate(configs):
        for rep in range(repetitions):
            run_seed = derive_seed(seed, point, rep)
            run_config = dataclasses.replace(config, seed=run_seed)
            meta = {"point": point, "rep": rep, "config": run_config.to_dict()}
            try:
                for rec in run_single(run_config, estimate_a, baseline):
                    records.append({**meta, **rec})
            except Exception as exc:  # fault isolation across runs
                records.append(
                    {
                        **meta,
                        "method": "threshold-spectral",
                        "error": f"{type(exc).__name__}: {exc}",
                    }
                )
    summary = summarize_records(records)
    return records, summary


def summarize_records(records: list[dict]) -> list[dict]:
    """Quartile rows (q1, median, q3) per grid point and method."""
    keys = sorted(
        {(rec["point"], rec["method"]) for rec in records},
        key=lambda pair: (pair[0], pair[1]),
    )
    rows = []
    for point, method in keys:
        group = [r for r in records if r["point"] == point and r["method"] == method]
        good = [r for r in group if "error" not in r]
        row = {
            "point": point,
            "method": method,
            "runs": len(good),
            "failures": len(group) - len(good),
        }
        for metric in _SUMMARY_METRICS:
            values = [r[metric] for r in good if r.get(metric) is not None]
            if values:
                q1, q2, q3 = np.percentile(values, [25.0, 50.0, 75.0])
                row[f"{metric}_q1"] = float(q1)
                row[f"{metric}_median"] = float(q2)
                row[f"{metric}_q3"] = float(q3)
            else:
                row[f"{metric}_q1"] = None
                row[f"{metric}_median"] = None
                row[f"{metric}_q3"] = None
        rows.append(row)
    return rows
