"""Steady p-curl system on boxes: staggered calculus, solver, estimate checks."""
from .grid import BoxDomain, CellField, ContractError, EdgeField, FaceField, NodeField

__all__ = ["BoxDomain", "CellField", "ContractError", "EdgeField", "FaceField", "NodeField"]
__version__ = "0.1.0"
