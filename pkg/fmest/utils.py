import numbers
import os

from .exceptions import DomainError

__all__ = [
    'check_epsilon', 'check_n_classes', 'check_theta', 'check_thresholds',
    'get_n_jobs'
]

THREADS_ENV = 'FMEST_THREADS'


def check_theta(theta, closed=False):
    """Raise DomainError if ``theta`` is not a valid Bernoulli parameter."""

    if closed:
        if not 0. <= theta <= 1.:
            raise DomainError(f'theta must be in [0, 1] but was {theta}')

    elif not 0. < theta < 1.:
        raise DomainError(f'theta must be in (0, 1) but was {theta}')


def check_epsilon(epsilon):
    """Raise DomainError if the drift parameter is not valid."""

    if not 0. < epsilon < 0.5:
        raise DomainError(f'epsilon must be in (0, 0.5) but was {epsilon}')


def check_n_classes(K):
    """Raise DomainError if the number of classes is not valid."""

    if isinstance(K, bool) or not isinstance(K, numbers.Integral) or K < 2:
        raise DomainError(f'K must be an integer >= 2 but was {K}')


def check_thresholds(p, q):
    """Raise DomainError unless 0 < q < p < 1."""

    if not 0. < q < p < 1.:
        raise DomainError(
            f'thresholds must satisfy 0 < q < p < 1 but were p={p}, q={q}'
        )


def get_n_jobs(n_jobs=None):
    """Resolve the number of parallel jobs.

    ``n_jobs`` wins when given; otherwise ``FMEST_THREADS`` is read from the
    environment, falling back to 1.
    """

    if n_jobs is not None:
        return n_jobs

    value = os.environ.get(THREADS_ENV)

    if value is None:
        return 1

    try:
        n_jobs = int(value)
    except ValueError:
        n_jobs = 0

    if n_jobs < 1:
        raise DomainError(
            f'{THREADS_ENV} must be a positive integer but was {value!r}'
        )

    return n_jobs
