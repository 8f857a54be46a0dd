"""k-greedy equivalence search for learning Bayesian network structure."""

__version__ = "0.1.0"
