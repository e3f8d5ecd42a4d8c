"""Cramer-Rao lower bounds for forced oscillations in coloured ambient noise."""

__version__ = "0.1.0"

from .covariance import NotPositiveDefinite, ToeplitzCovariance, solve_spd, whiten
from .crlb_engine import (
    CrlbBounds,
    FisherMatrix,
    IllConditionedWarning,
    SingularFisher,
    bounds_for,
    crlb,
    fisher,
    white_noise_asymptotic,
)
from .fo_signal import FoJacobian, FoParams, jacobian, waveform
from .monte_carlo import DegenerateFit, McConfig, McResult, estimate_fo, generate_ambient, run_mc
from .noise_model import (
    AutocovarianceError,
    AutocovarianceSeq,
    ModalSpec,
    Mode,
    RationalFilter,
    autocovariance,
    build_surrogate,
    default_modal_spec,
    frequency_response,
    psd,
)
