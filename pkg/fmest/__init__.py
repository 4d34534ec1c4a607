# PEP0440 compatible formatted version, see:
# https://www.python.org/dev/peps/pep-0440/

__version__          = '0.1.0'

try:
    __FMEST_SETUP__
except NameError:
    __FMEST_SETUP__ = False

if not __FMEST_SETUP__:
    from . import analysis # noqa
    from . import baselines # noqa
    from . import construction # noqa
    from . import datasets # noqa
    from . import estimators # noqa
    from . import exceptions # noqa
    from . import isit # noqa
    from . import machine # noqa
    from . import metrics # noqa
    from . import montecarlo # noqa
    from . import utils # noqa
