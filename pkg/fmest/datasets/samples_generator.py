import numpy as np
from sklearn.utils import check_random_state

from ..exceptions import DomainError
from ..utils import check_theta

__all__ = ['make_bernoulli_stream']


def make_bernoulli_stream(n_samples=1000, theta=0.5, random_state=None):
    """Generate a stream of independent Bernoulli bits.

    Parameters
    ----------
    n_samples : int, default 1000
        Number of bits.

    theta : float, default 0.5
        Probability of a one, in [0, 1].

    random_state : int, RandomState instance, default None
        Seed of the pseudo random number generator.

    Returns
    -------
    X : array-like of shape (n_samples,)
        Generated bits.

    Examples
    --------
    >>> from fmest.datasets import make_bernoulli_stream
    >>> X = make_bernoulli_stream(n_samples=10, random_state=0)
    >>> X.shape
    (10,)
    >>> make_bernoulli_stream(n_samples=3, theta=1.).tolist()
    [1, 1, 1]
    """

    check_theta(theta, closed=True)

    if n_samples < 0:
        raise DomainError(
            f'n_samples must be non-negative but was {n_samples}'
        )

    rnd = check_random_state(random_state)

    return (rnd.uniform(size=n_samples) < theta).astype(np.int64)
