import numpy as np

from .exceptions import DomainError
from .utils import check_theta

__all__ = ['batch_means', 'batch_standard_error', 'quadratic_risk']

N_BATCHES = 100


def quadratic_risk(estimates, theta):
    """Average squared error of a sequence of estimates.

    Parameters
    ----------
    estimates : array-like of shape (n_samples,)
        Estimates produced along a stream.

    theta : float
        True Bernoulli parameter in [0, 1].

    Returns
    -------
    risk : float
        Mean of ``(estimates - theta) ** 2``.

    Examples
    --------
    >>> from fmest.metrics import quadratic_risk
    >>> quadratic_risk([0., 1.], 0.5)
    0.25
    """

    check_theta(theta, closed=True)

    estimates = np.asarray(estimates, dtype=float).ravel()

    if estimates.size == 0:
        raise DomainError('estimates must not be empty')

    return float(np.mean((estimates - theta) ** 2))


def batch_standard_error(means):
    """Standard error of the overall mean given equally weighted batch
    means."""

    means     = np.asarray(means, dtype=float)
    n_batches = means.shape[0]

    if n_batches < 2:
        raise DomainError(
            f'at least 2 batches are required but got {n_batches}'
        )

    return float(np.std(means, ddof=1) / np.sqrt(n_batches))


def batch_means(samples, n_batches=N_BATCHES):
    """Mean of a correlated sequence and its batch-means standard error.

    The sequence is cut into ``n_batches`` contiguous batches of equal
    length; samples left over at the end are folded into the last batch.

    Parameters
    ----------
    samples : array-like of shape (n_samples,)
        Correlated samples, e.g. the squared error along a chain.

    n_batches : int, default 100
        Number of batches.

    Returns
    -------
    mean : float
        Mean of all samples.

    standard_error : float
        Standard error of ``mean``.

    Examples
    --------
    >>> from fmest.metrics import batch_means
    >>> batch_means([1., 1., 1., 1.], n_batches=2)
    (1.0, 0.0)
    """

    samples    = np.asarray(samples, dtype=float).ravel()
    n_samples, = samples.shape

    if n_batches < 2 or n_samples < n_batches:
        raise DomainError(
            f'n_batches must be in [2, {n_samples}] but was {n_batches}'
        )

    size       = n_samples // n_batches
    index      = np.minimum(np.arange(n_samples) // size, n_batches - 1)
    sums       = np.bincount(index, weights=samples, minlength=n_batches)
    counts     = np.bincount(index, minlength=n_batches)

    return float(np.mean(samples)), batch_standard_error(sums / counts)
