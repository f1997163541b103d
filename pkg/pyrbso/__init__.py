"""
:py:mod:`pyrbso` is a Python library for

- simulating a swarm of point robots searching a 2-D arena for beacon-broadcasting targets,
- driving the swarm with Robotic Brain Storm Optimization (grouping, position generation, optimal task allocation and
  Bug-style motion), and
- running seeded, reproducible batch experiments over scenario files.

The source code is organised in sub-packages and sub-modules.
"""

import importlib.metadata

#: :py:mod:`pyrbso` version as per `Semantic Versioning <http://semver.org/>`_.
__version__ = importlib.metadata.version("pyrbso")
