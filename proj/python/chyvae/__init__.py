"""Covariance-hyperprior VAE: exact samplers, closed-form losses, the
CorrelatedEllipses dataset, and the majority-vote disentanglement metric."""

from ._chyvae import *  # noqa: F401,F403
from ._chyvae import __version__  # noqa: F401
