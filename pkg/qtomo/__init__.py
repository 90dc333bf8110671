"""Qtomo - monitor placement and Werner-parameter estimation for quantum network tomography."""

__version__ = "0.1.0"
