"""Government environmental attention and per-capita carbon emissions.

Subpackages and modules:

``text_index``
    keyword dictionary, segmenters and the attention index of a report corpus
``carbon``
    fuel-based CO2 accounting
``panel``, ``ols``
    balanced panel container, within transformation, least squares and
    sandwich covariances
``models``
    fixed/random effects, Hausman, 2SLS, moderation, threshold regression
``tables``
    pipe-delimited regression tables
``fixture``, ``config``, ``cli``
    synthetic data, run configuration and the command line
"""

__version__ = "0.1.0"
