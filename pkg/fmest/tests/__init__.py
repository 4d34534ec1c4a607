from .all_tests import suite

__all__ = ['suite']
