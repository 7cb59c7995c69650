import logging

import numpy as np
from scipy import linalg

from utils.errors import DataError

logger = logging.getLogger(__name__)

# Relative eigenvalue floor below which a covariance counts as near-singular
SINGULAR_TOLERANCE = 1e-10
RIDGE = 1e-10


def _check_pair(a, b, minimum=2):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DataError(f"feature sets must be 2-D (rows x dims), got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[1]:
        raise DataError(f"feature dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if len(a) < minimum or len(b) < minimum:
        raise DataError(f"need at least {minimum} rows per set, got {len(a)} and {len(b)}")
    return a, b


def _covariance(features):
    sigma = np.atleast_2d(np.cov(features, rowvar=False))
    eigenvalues = linalg.eigvalsh(sigma)
    if eigenvalues.min() <= SINGULAR_TOLERANCE * max(eigenvalues.max(), 1.0):
        logger.warning(f"Covariance of {features.shape[0]} samples in {features.shape[1]} dims "
                       f"is near-singular; adding a {RIDGE:g} ridge")
        sigma = sigma + RIDGE * np.eye(len(sigma))
    return sigma


def _psd_sqrt(matrix):
    """Square root of a symmetric matrix with negative eigenvalues clamped at 0."""
    eigenvalues, vectors = linalg.eigh((matrix + matrix.T) / 2.0)
    return (vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ vectors.T


def trace_sqrt_product(sigma_a, sigma_b):
    """Tr((sigma_a sigma_b)^1/2) through the symmetric product sqrt(A) B sqrt(A)."""
    root_a = _psd_sqrt(sigma_a)
    product = root_a @ sigma_b @ root_a
    eigenvalues = linalg.eigvalsh((product + product.T) / 2.0)
    if eigenvalues.min() < 0:
        logger.debug(f"Clamping {int((eigenvalues < 0).sum())} negative eigenvalue(s) at 0")
    return float(np.sqrt(np.clip(eigenvalues, 0.0, None)).sum())


def fid(a, b):
    """Fréchet distance between Gaussian fits of two feature sets (unbiased covariances)."""
    a, b = _check_pair(a, b)
    mean_delta = a.mean(axis=0) - b.mean(axis=0)
    sigma_a, sigma_b = _covariance(a), _covariance(b)
    value = float(mean_delta @ mean_delta + np.trace(sigma_a) + np.trace(sigma_b)
                  - 2.0 * trace_sqrt_product(sigma_a, sigma_b))
    return max(value, 0.0)


def _polynomial_kernel(a, b):
    return (a @ b.T / a.shape[1] + 1.0) ** 3


def mmd2_unbiased(a, b):
    """Unbiased MMD^2 under (x.y / d + 1)^3.

    Within-set sums skip the diagonal. Equal-size sets also skip the i == j
    cross terms, which makes the estimate exactly 0 when a and b coincide.
    """
    n, m = len(a), len(b)
    k_aa = _polynomial_kernel(a, a)
    k_bb = _polynomial_kernel(b, b)
    k_ab = _polynomial_kernel(a, b)
    within = ((k_aa.sum() - np.trace(k_aa)) / (n * (n - 1))
              + (k_bb.sum() - np.trace(k_bb)) / (m * (m - 1)))
    if n == m:
        cross = (k_ab.sum() - np.trace(k_ab)) / (n * (n - 1))
    else:
        cross = k_ab.mean()
    return float(within - 2.0 * cross)


def kid(a, b, n_blocks=1):
    """Kernel distance; with n_blocks > 1 the mean over contiguous row blocks."""
    return kid_with_std(a, b, n_blocks)[0]


def kid_with_std(a, b, n_blocks=1):
    """(mean, std) of the per-block unbiased MMD^2; std is 0 for a single block."""
    a, b = _check_pair(a, b)
    if n_blocks < 1:
        raise DataError(f"n_blocks must be >= 1, got {n_blocks}")
    if n_blocks == 1:
        return mmd2_unbiased(a, b), 0.0
    blocks_a = np.array_split(a, n_blocks)
    blocks_b = np.array_split(b, n_blocks)
    if min(len(block) for block in blocks_a + blocks_b) < 2:
        raise DataError(f"{n_blocks} blocks leave fewer than 2 rows in a block "
                        f"({len(a)} and {len(b)} rows)")
    estimates = np.array([mmd2_unbiased(x, y) for x, y in zip(blocks_a, blocks_b)])
    return float(estimates.mean()), float(estimates.std(ddof=1))
