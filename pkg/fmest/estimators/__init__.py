from .base import *  # noqa
from .deterministic import *  # noqa
from .randomized import *  # noqa
