# Sphinx configuration of the fmest documentation.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

from fmest import __version__  # noqa

project            = 'fmest'
author             = 'fmest developers'
copyright          = '2018, fmest developers'
version            = __version__
release            = __version__

extensions         = [
    'sphinx.ext.autodoc', 'sphinx.ext.intersphinx', 'sphinx.ext.napoleon',
    'sphinx.ext.viewcode'
]
intersphinx_mapping = {
    'numpy':   ('https://docs.scipy.org/doc/numpy/', None),
    'python':  ('https://docs.python.org/3/', None),
    'sklearn': ('https://scikit-learn.org/stable/', None)
}
autodoc_member_order = 'bysource'
napoleon_use_rtype   = False

master_doc         = 'index'
exclude_patterns   = ['_build']
pygments_style     = 'sphinx'
html_theme         = 'default'
htmlhelp_basename  = 'fmestdoc'
