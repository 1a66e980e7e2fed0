"""Farthest-point iteration on finite sets of unit vectors.

Subpackages cover the iteration itself (exact and float), balance
classification, smallest enclosing balls, example families, the planar
proof apparatus and a command-line front end.
"""
from .geometry import FLOAT, RATIONAL, PointSet, validate
from .iteration import run_iteration, reachable_set, ustar_exact

__all__ = ["FLOAT", "RATIONAL", "PointSet", "validate", "run_iteration", "reachable_set", "ustar_exact"]
