"""Multivariate-normal box probabilities and aggregation-aware traffic rates.

When a node aggregates its subtree's reports into a single uplink packet,
the packet is sent only if at least one group member mispredicts. For
jointly Gaussian measurements that no-transmission probability is the
mass of an axis-aligned box under a multivariate normal law, estimated
here by a sequential-conditioning (separation-of-variables) transform of
the box integral to the unit cube, sampled with seeded scrambled Sobol
points. Estimates are reproducible bit for bit given (inputs, seed,
sample count) and carry a standard error from batch-to-batch variance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from .topology import child_ratio, subtree_size
from .traffic import DisseminationMode, dissemination_cost

logger = logging.getLogger(__name__)

# Fixed internal batch size (power of two keeps Sobol balanced); the
# estimate never depends on how batches would be scheduled.
_BATCH_EXP = 13
_BATCH = 1 << _BATCH_EXP

# Arguments fed to ndtri are kept strictly inside (0, 1).
_TINY = 1e-300
_ONE_MINUS = 1.0 - 1e-16

_DIAG_TOL = 1e-12


@dataclass(frozen=True)
class MvnEstimate:
    """Monte Carlo estimate of a box probability."""

    p: float
    stderr: float
    samples: int
    seed: int


@dataclass(frozen=True)
class CorrelationSpec:
    """Either a single equicorrelation coefficient or a full correlation matrix."""

    rho: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if (self.rho is None) == (self.matrix is None):
            raise ValueError("specify exactly one of rho and matrix")
        if self.rho is not None and not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"correlation must lie in [-1, 1], got {self.rho}")

    def materialize(self, n: int) -> np.ndarray:
        if self.rho is not None:
            return build_equicorrelation_matrix(n, self.rho)
        m = as_correlation_matrix(self.matrix)
        if m.shape[0] != n:
            raise ValueError(f"correlation matrix is {m.shape[0]}x{m.shape[0]}, need {n}x{n}")
        return m


def build_equicorrelation_matrix(n: int, rho: float) -> np.ndarray:
    """n x n matrix with unit diagonal and ``rho`` everywhere else.

    Positive semi-definiteness requires rho >= -1/(n-1) for n >= 2.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    lo = -1.0 / (n - 1) if n > 1 else -1.0
    if not lo <= rho <= 1.0:
        raise ValueError(
            f"equicorrelation with n={n} requires rho in [{lo:.6g}, 1], got {rho}"
        )
    m = np.full((n, n), float(rho))
    np.fill_diagonal(m, 1.0)
    return m


def as_correlation_matrix(matrix: np.ndarray, repair: bool = True) -> np.ndarray:
    """Validate a correlation matrix, repairing slight indefiniteness if allowed.

    Empirical matrices (e.g. from resampled traces with missing data) can
    end up indefinite; the repair clips negative eigenvalues at zero and
    rescales back to a unit diagonal. Repairs are logged.
    """
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"correlation matrix must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, atol=1e-8):
        raise ValueError("correlation matrix must be symmetric")
    m = (m + m.T) / 2.0
    if not np.allclose(np.diag(m), 1.0, atol=1e-8):
        raise ValueError("correlation matrix must have a unit diagonal")
    if np.any(np.abs(m) > 1.0 + 1e-9):
        raise ValueError("correlation entries must lie in [-1, 1]")
    np.clip(m, -1.0, 1.0, out=m)
    eigvals = np.linalg.eigvalsh(m)
    if eigvals[0] < -1e-10:
        if not repair:
            raise ValueError(f"correlation matrix is not PSD (min eigenvalue {eigvals[0]:.3g})")
        vals, vecs = np.linalg.eigh(m)
        vals = np.clip(vals, 0.0, None)
        m = (vecs * vals) @ vecs.T
        scale = np.sqrt(np.diag(m))
        scale[scale == 0.0] = 1.0
        m = m / np.outer(scale, scale)
        np.fill_diagonal(m, 1.0)
        logger.warning(
            "repaired indefinite correlation matrix (min eigenvalue was %.3g)", eigvals[0]
        )
    return m


def _psd_cholesky(m: np.ndarray) -> np.ndarray:
    """Lower-triangular factor tolerating zero pivots (semi-definite input)."""
    n = m.shape[0]
    L = np.zeros_like(m)
    for j in range(n):
        s = m[j, j] - L[j, :j] @ L[j, :j]
        if s > _DIAG_TOL:
            L[j, j] = math.sqrt(s)
            L[j + 1 :, j] = (m[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
        elif s > -1e-8:
            L[j, j] = 0.0
        else:
            raise ValueError("matrix is not positive semi-definite")
    return L


def _phi_edge(bound: float, shift: np.ndarray, diag: float) -> np.ndarray:
    """Phi((bound - shift) / diag), reducing to an indicator when diag is zero."""
    if diag > _DIAG_TOL:
        return ndtr((bound - shift) / diag)
    return (shift <= bound).astype(float)


def _genz_samples(L: np.ndarray, lower: np.ndarray, upper: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Per-sample integrand values of the sequentially conditioned box integral."""
    nsamp = u.shape[0]
    n = L.shape[0]
    zeros = np.zeros(nsamp)
    d = _phi_edge(lower[0], zeros, L[0, 0])
    e = _phi_edge(upper[0], zeros, L[0, 0])
    width = np.maximum(e - d, 0.0)
    f = width.copy() if isinstance(width, np.ndarray) else np.full(nsamp, width)
    y = np.zeros((nsamp, n - 1))
    for i in range(1, n):
        arg = np.clip(d + u[:, i - 1] * width, _TINY, _ONE_MINUS)
        y[:, i - 1] = ndtri(arg)
        shift = y[:, :i] @ L[i, :i]
        d = _phi_edge(lower[i], shift, L[i, i])
        e = _phi_edge(upper[i], shift, L[i, i])
        width = np.maximum(e - d, 0.0)
        f *= width
    return f


def mvn_box_probability(
    sigma: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    samples: int = 1_000_000,
    seed: int = 0,
) -> MvnEstimate:
    """Probability that a standard MVN vector with correlation ``sigma``
    falls inside the axis-aligned box [lower, upper].

    The box integral is transformed to the unit cube by conditioning on
    one coordinate at a time along the Cholesky factor, then averaged
    over scrambled Sobol batches. Requested ``samples`` are rounded up to
    whole batches; the count actually used is reported.
    """
    cov = as_correlation_matrix(np.asarray(sigma, dtype=float))
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    n = cov.shape[0]
    if lo.shape != (n,) or hi.shape != (n,):
        raise ValueError(f"bounds must have shape ({n},), got {lo.shape} and {hi.shape}")
    if np.any(lo > hi):
        raise ValueError("lower bound exceeds upper bound")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    if np.any(lo == hi):
        return MvnEstimate(p=0.0, stderr=0.0, samples=0, seed=seed)
    if n == 1:
        p = float(ndtr(hi[0]) - ndtr(lo[0]))
        return MvnEstimate(p=min(max(p, 0.0), 1.0), stderr=0.0, samples=0, seed=seed)
    if samples < 1:
        raise ValueError(f"sample count must be >= 1, got {samples}")
    L = _psd_cholesky(cov)
    n_batches = max(2, -(-samples // _BATCH))
    means = np.empty(n_batches)
    for b in range(n_batches):
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        sob = qmc.Sobol(d=n - 1, scramble=True, seed=rng)
        means[b] = _genz_samples(L, lo, hi, sob.random(_BATCH)).mean()
    p = float(means.mean())
    stderr = float(means.std(ddof=1) / math.sqrt(n_batches))
    return MvnEstimate(
        p=min(max(p, 0.0), 1.0), stderr=stderr, samples=n_batches * _BATCH, seed=seed
    )


def prob_no_transmission(
    n: int, alpha: float, rho: float, samples: int = 1_000_000, seed: int = 0
) -> MvnEstimate:
    """Probability that none of ``n`` equicorrelated nodes triggers a transmission.

    Each node's standardized deviation must stay inside the symmetric
    acceptance interval [-q, q] with q chosen so that a single node is
    accurate with probability ``alpha``. An empty group never transmits.
    """
    if n < 0:
        raise ValueError(f"node count must be >= 0, got {n}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"accuracy must lie in [0, 1], got {alpha}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"group correlation must lie in [0, 1], got {rho}")
    if n == 0:
        return MvnEstimate(p=1.0, stderr=0.0, samples=0, seed=seed)
    if alpha == 0.0:
        return MvnEstimate(p=0.0, stderr=0.0, samples=0, seed=seed)
    if alpha == 1.0:
        return MvnEstimate(p=1.0, stderr=0.0, samples=0, seed=seed)
    q = -float(ndtri((1.0 - alpha) / 2.0))
    sigma = build_equicorrelation_matrix(n, rho)
    return mvn_box_probability(sigma, np.full(n, -q), np.full(n, q), samples=samples, seed=seed)


def _int_ceil(x: float) -> int:
    """Ceiling that forgives float dust just above/below an integer."""
    nearest = round(x)
    if abs(x - nearest) < 1e-9:
        return int(nearest)
    return int(math.ceil(x))


def aggregated_tx(
    d: int, D: int, alpha: float, rho: float, samples: int = 1_000_000, seed: int = 0
) -> float:
    """Expected uplink transmissions per measurement slot at a ring-``d`` node
    that aggregates: one packet iff the node or any subtree member mispredicts.

    Fractional expected subtree sizes are rounded up before building the
    correlation matrix, giving an upper bound on the transmission count.
    """
    group = 1 + _int_ceil(subtree_size(d, D))
    return 1.0 - prob_no_transmission(group, alpha, rho, samples=samples, seed=seed).p


def aggregated_rx(
    d: int, D: int, alpha: float, rho: float, samples: int = 1_000_000, seed: int = 0
) -> float:
    """Expected receptions per slot at a ring-``d`` node under aggregation.

    Each of the node's direct children forwards at most one aggregate per
    slot, sent iff anyone in that child's subtree (child included)
    mispredicted. Children subtrees are taken equal-sized, K_d / I_d
    members each, rounded up.
    """
    if d == D:
        return 0.0
    k = subtree_size(d, D)
    i = child_ratio(d, D)
    n_children = _int_ceil(i)
    child_group = _int_ceil(k / i)
    p = prob_no_transmission(child_group, alpha, rho, samples=samples, seed=seed).p
    return n_children * (1.0 - p)


def bottleneck_slot_rates(
    D: int, alpha: float, rho: float, samples: int = 1_000_000, seed: int = 0
) -> tuple[float, float, MvnEstimate]:
    """First-ring (tx, rx) rates per slot in the combined prediction+aggregation
    scheme, using the coupled-subtree convention of the parameter study:
    both the uplink and every child link carry a packet iff any of the
    K_1 descendants' predictions failed.

    Returns (tx_rate, rx_rate, estimate); rx is I_1 times tx. A
    single-ring network has no descendants, so the node's own prediction
    drives the rate there.
    """
    group = max(1, _int_ceil(subtree_size(1, D)))
    est = prob_no_transmission(group, alpha, rho, samples=samples, seed=seed)
    miss = 1.0 - est.p
    return miss, child_ratio(1, D) * miss, est


def aggregated_traffic_bound(
    d: int,
    D: int,
    alpha: float,
    f: float,
    T: float,
    mode: DisseminationMode = DisseminationMode.INDEPENDENT,
) -> float:
    """Zero-correlation upper bound on total per-period traffic with aggregation.

    With independent measurements the no-transmission probabilities
    factor into powers of alpha, giving
    [(1 - alpha^(1+K_d)) + I_d (1 - alpha^(K_d/I_d))] f T + X_top
    with real-valued K_d and I_d. Leaves receive nothing.
    """
    if f <= 0 or T <= 0:
        raise ValueError(f"f and T must be > 0, got f={f}, T={T}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"accuracy must lie in [0, 1], got {alpha}")
    k = subtree_size(d, D)
    i = child_ratio(d, D)
    tx = 1.0 - alpha ** (1.0 + k)
    rx = i * (1.0 - alpha ** (k / i)) if i > 0 else 0.0
    return (tx + rx) * f * T + dissemination_cost(mode, D)


def average_correlation(matrix: np.ndarray) -> float:
    """Average of pairwise correlations via Fisher's z-transformation.

    Upper-triangle entries are mapped with atanh, averaged, and mapped
    back with tanh. Perfect correlations have infinite z and are
    rejected.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
        raise ValueError(f"need a square matrix with n >= 2, got shape {m.shape}")
    iu = np.triu_indices(m.shape[0], k=1)
    r = m[iu]
    if np.any(np.abs(r) >= 1.0):
        raise ValueError("off-diagonal correlations must satisfy |r| < 1")
    return float(np.tanh(np.mean(np.arctanh(r))))
