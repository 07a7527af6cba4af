"""Risk-sensitive optimal investment with two correlated Brownian noises."""

__version__ = "0.1.0"
