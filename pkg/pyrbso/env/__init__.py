"""
This package provides the world model of the simulation (:py:mod:`pyrbso.env.world`) and scenario documents
(:py:mod:`pyrbso.env.scenario`).
"""
