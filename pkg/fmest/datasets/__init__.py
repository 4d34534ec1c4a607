from .samples_generator import *  # noqa
