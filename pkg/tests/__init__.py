"""Test package for freecrm.

- Unit tests for measures, transforms, inversion and the bijection
- Model-level tests for regions, laws and additivity
- Oracle tests against random-matrix and Monte Carlo samples
- CLI tests for outputs and exit codes
"""
