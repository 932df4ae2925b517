#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Sphinx configuration for the qvision API reference.

import os
import sys

sys.path.insert(0, os.path.abspath('../../src'))

extensions = [
    'sphinx.ext.autodoc',
]

source_suffix = '.rst'
master_doc = 'index'

project = 'qvision'
copyright = '2024, qvision developers'
author = 'qvision developers'
version = '0.3'
release = '0.3.0'

exclude_patterns = []
pygments_style = 'sphinx'

html_theme = 'default'
htmlhelp_basename = 'qvisiondoc'
