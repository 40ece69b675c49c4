"""Association scores between variables, standardized to a common scale.

Correlations (or covariances reduced to correlations) and one-sided p-values
are mapped to score matrices whose entries behave like unit-variance normal
draws when no association is present. Downstream thresholding assumes that
standard scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, log_ndtr, ndtri

from .errors import DegenerateVarianceError, InvalidInputError, ParameterError

R_MAX = 1.0 - 1e-12
P_MIN = 1e-15

_KINDS = ("covariance", "correlation", "pvalue")
_ORIGINS = ("fisher", "inverse-normal")


@dataclass(frozen=True)
class SymmetricMatrix:
    """Square symmetric matrix tagged with what its entries mean.

    kind == "correlation" requires entries in [-1, 1] with a diagonal of
    ones (classical matrices) or zeros (generated matrices that carry no
    self-association). kind == "pvalue" requires entries in [0, 1] with a
    unit diagonal.
    """

    values: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidInputError("matrix must be square")
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown matrix kind: {self.kind!r}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("matrix entries must be finite")
        if not np.array_equal(values, values.T):
            raise InvalidInputError("matrix must be symmetric")
        diag = np.diag(values)
        if self.kind == "correlation":
            if np.any(np.abs(values) > 1.0):
                raise InvalidInputError("correlations must lie in [-1, 1]")
            if not (np.all(diag == 1.0) or np.all(diag == 0.0)):
                raise InvalidInputError("correlation diagonal must be all ones or all zeros")
        elif self.kind == "pvalue":
            if np.any(values < 0.0) or np.any(values > 1.0):
                raise InvalidInputError("p-values must lie in [0, 1]")
            if not np.all(diag == 1.0):
                raise InvalidInputError("p-value diagonal must be one")

    @property
    def m(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class AssocMatrix:
    """Symmetric matrix of standardized association scores, zero diagonal.

    dof records the effective degrees of freedom behind Fisher-transformed
    correlations; inverse-normal scores carry no dof.
    """

    z: np.ndarray
    origin: str
    dof: float | None = None

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=np.float64)
        object.__setattr__(self, "z", z)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise InvalidInputError("score matrix must be square")
        if self.origin not in _ORIGINS:
            raise ParameterError(f"unknown score origin: {self.origin!r}")
        if not np.all(np.isfinite(z)):
            raise InvalidInputError("scores must be finite")
        if not np.array_equal(z, z.T):
            raise InvalidInputError("score matrix must be symmetric")
        if np.any(np.diag(z) != 0.0):
            raise InvalidInputError("score diagonal must be zero")
        if self.dof is not None and not self.dof > 3:
            raise ParameterError("dof must exceed 3")

    @property
    def m(self) -> int:
        return int(self.z.shape[0])


def covariance_matrix(samples: np.ndarray) -> SymmetricMatrix:
    """Sample covariance of an (n, m) sample matrix, normalized by n.

    Rows are observations, columns are variables. Requires n >= 2, m >= 2,
    finite entries.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInputError("samples must be a 2-D array")
    n, m = x.shape
    if n < 2:
        raise InvalidInputError("need at least two observations")
    if m < 2:
        raise InvalidInputError("need at least two variables")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("samples must be finite")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / n
    cov = (cov + cov.T) / 2.0
    return SymmetricMatrix(cov, "covariance")


def correlation_from_covariance(cov: SymmetricMatrix) -> SymmetricMatrix:
    """Normalize a covariance to correlations; zero variances are an error."""
    if cov.kind != "covariance":
        raise ParameterError("input must be a covariance matrix")
    variances = np.diag(cov.values)
    if np.any(variances <= 0.0):
        bad = int(np.argmax(variances <= 0.0))
        raise DegenerateVarianceError(f"variable {bad} has non-positive variance")
    scale = 1.0 / np.sqrt(variances)
    corr = cov.values * scale[:, None] * scale[None, :]
    corr = np.clip(corr, -1.0, 1.0)
    corr = (corr + corr.T) / 2.0
    np.fill_diagonal(corr, 1.0)
    return SymmetricMatrix(corr, "correlation")


def fisher_z(corr: SymmetricMatrix, dof: float) -> AssocMatrix:
    """Variance-stabilize correlations: z = sqrt(dof - 3) * atanh(r).

    The scaling makes null entries approximately standard normal. Entries
    are clamped to magnitude R_MAX before atanh so that r = +-1 stays
    finite. The diagonal of the result is zero.
    """
    if corr.kind != "correlation":
        raise ParameterError("input must be a correlation matrix")
    if not np.isfinite(dof) or dof <= 3:
        raise ParameterError("dof must be a finite number greater than 3")
    r = np.clip(corr.values, -R_MAX, R_MAX)
    z = np.sqrt(dof - 3.0) * np.arctanh(r)
    z = (z + z.T) / 2.0
    np.fill_diagonal(z, 0.0)
    return AssocMatrix(z, "fisher", float(dof))


def pvalues_to_z(pvals: SymmetricMatrix, tail: str = "upper") -> AssocMatrix:
    """Map one-sided p-values to normal quantile scores.

    Small p-values map to large positive scores for either tail choice.
    P-values are clamped into [P_MIN, 1 - P_MIN] first, so degenerate 0/1
    inputs stay finite. The diagonal of the result is zero.
    """
    if pvals.kind != "pvalue":
        raise ParameterError("input must be a p-value matrix")
    if tail not in ("upper", "lower"):
        raise ParameterError(f"tail must be 'upper' or 'lower', got {tail!r}")
    p = np.clip(pvals.values, P_MIN, 1.0 - P_MIN)
    # Phi^{-1}(1 - p) == -Phi^{-1}(p) exactly; the right-hand form avoids the
    # precision loss of forming 1 - p in floating point when p is tiny, so the
    # significant (small-p) end of either tail keeps full accuracy.
    z = -ndtri(p)
    z = (z + z.T) / 2.0
    np.fill_diagonal(z, 0.0)
    return AssocMatrix(z, "inverse-normal", None)


def cooccurrence_pvalues(incidence: np.ndarray) -> SymmetricMatrix:
    """Upper-tail overlap p-values for all entity pairs of an incidence matrix.

    incidence is an (n_items, m) binary matrix; column j flags the items
    entity j is associated with. For entities with item sets of sizes k_i
    and k_j overlapping in o items out of n, the entry is the probability
    that a uniformly random k_j-subset hits at least o of the k_i items.
    The tail is summed exactly from log-factorial tables. Diagonal is 1.

    Requires every column to contain at least one 1.
    """
    inc = np.asarray(incidence)
    if inc.ndim != 2:
        raise InvalidInputError("incidence must be a 2-D array")
    if not np.isin(inc, (0, 1)).all():
        raise InvalidInputError("incidence entries must be 0 or 1")
    n_items, m = inc.shape
    if n_items < 1 or m < 2:
        raise InvalidInputError("incidence needs at least one item and two entities")
    inc = inc.astype(np.int64)
    sizes = inc.sum(axis=0)
    if np.any(sizes == 0):
        bad = int(np.argmax(sizes == 0))
        raise InvalidInputError(f"entity {bad} has an empty item set")

    overlap = inc.T @ inc
    logfact = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, n_items + 1)))])

    def log_comb(n: int, k: np.ndarray) -> np.ndarray:
        return logfact[n] - logfact[k] - logfact[n - k]

    pmat = np.ones((m, m), dtype=np.float64)
    for i in range(m):
        for j in range(i + 1, m):
            ki, kj = int(sizes[i]), int(sizes[j])
            o = int(overlap[i, j])
            hi = min(ki, kj)
            ks = np.arange(o, hi + 1)
            if ks.size == 0:
                p = 0.0
            else:
                log_terms = (
                    log_comb(ki, ks)
                    + (logfact[n_items - ki] - logfact[kj - ks] - logfact[n_items - ki - kj + ks])
                    - log_comb(n_items, np.array([kj]))
                )
                peak = log_terms.max()
                p = float(np.exp(peak) * np.exp(log_terms - peak).sum())
            pmat[i, j] = pmat[j, i] = min(p, 1.0)
    return SymmetricMatrix(pmat, "pvalue")
