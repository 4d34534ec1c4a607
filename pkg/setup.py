import builtins
from setuptools import setup

builtins.__FMEST_SETUP__ = True

setup()
