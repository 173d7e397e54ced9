"""Monte Carlo toolkit for Bayesian inference.

Library layout:

- :mod:`bayescomp.core` -- deterministic random streams and numerical primitives
- :mod:`bayescomp.model` -- sampler-facing model contracts
- :mod:`bayescomp.probit`, :mod:`bayescomp.capture`, :mod:`bayescomp.mixture` -- case-study models
- :mod:`bayescomp.datasets` -- CSV ingestion and bundled data
- :mod:`bayescomp.montecarlo` -- crude Monte Carlo, importance sampling, resampling
- :mod:`bayescomp.pmc` -- population Monte Carlo with adaptive kernel banks
- :mod:`bayescomp.mcmc` -- Metropolis-Hastings, Gibbs, hybrids, diagnostics
- :mod:`bayescomp.evidence` -- marginal-likelihood / Bayes-factor estimators
- :mod:`bayescomp.abc` -- likelihood-free rejection, MCMC and sequential samplers
- :mod:`bayescomp.cli` -- reproducible experiment runner
"""

from .core import RngStream

__version__ = "0.1.0"
__all__ = ["RngStream", "__version__"]
