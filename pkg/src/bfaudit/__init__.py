"""Bayes factors and information-consistency audits for Gaussian linear
models with dependent errors."""

from .errors import BfauditError
from .model import Dims, ModelSpec, SuffStats, equicorrelation, synthetic_stats
from .priors import (
    AdaptiveGPrior,
    ConjugatePrior,
    FatTailedTPrior,
    GMixturePrior,
    SemiConjugatePrior,
    VariancePrior,
    make_hyper_g,
    make_zellner_siow,
)
from .bayes_precise import (
    BfResult,
    LimitResult,
    bf_adaptive,
    bf_conjugate,
    bf_conjugate_limit,
    bf_fat_tail,
    bf_mixture,
    bf_semiconjugate,
    bf_univariate_t,
)
from .bayes_onesided import (
    MultipleResult,
    OnesidedResult,
    bf_multiple,
    bf_onesided_adaptive_g,
    bf_onesided_conjugate,
    bf_onesided_independence,
    bf_onesided_mixture,
    bf_onesided_univariate,
    onesided_limit_direction,
)
from .consistency import Verdict, audit, empirical_probe, mixture_integral_diverges

__version__ = "0.1.0"
