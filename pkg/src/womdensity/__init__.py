"""Ratings-density metrics and weighted panel regression for online
word-of-mouth data.

Subpackages:
  dataset      parsing, validation, deduplication, panel construction
  metrics      histograms, rankings, ECDFs, lag correlations, summaries
  econometrics design building, OLS/WLS, heteroskedasticity test
  simulator    synthetic dataset generation and recovery experiments
  cli          command-line entry points
"""

__version__ = "0.1.0"
