"""Holomorphic curvature, torsion tensors and complex geodesics of complex Finsler metrics."""

__version__ = "0.1.0"
