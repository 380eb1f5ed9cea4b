"""Random walk on dynamical percolation: simulation and analytic oracles."""

__version__ = "0.1.0"
