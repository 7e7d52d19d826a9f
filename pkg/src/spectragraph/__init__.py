"""Neighborhood graphs over segment spectra feeding small numpy classifiers.

Weights are pruned to a fixed connection rate with ADMM.
"""

__version__ = "0.1.0"
