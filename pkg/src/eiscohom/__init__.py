"""Exact computation of H^5 of Gamma_0(n) in GL_3 over Z[w], w^2 = w - 1,
with Hecke eigensystems and their classification."""

__version__ = "0.1.0"
