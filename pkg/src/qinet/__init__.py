"""Gaussian-state simulator and estimation toolkit for entanglement-assisted
sensing networks: network state construction, receiver models, Fisher
information engines, classical benchmarks, hypothesis-testing bounds, and
independent verification backends (truncated Fock space, Monte Carlo)."""

__version__ = "0.1.0"
