"""Ring-resonator frequency-comb memory: spectra, design and time-domain checks."""

from .core import (
    Block,
    Circuit,
    Comb,
    DelayProfile,
    FrequencyGrid,
    SpectralResponse,
    analyze,
    block_response,
    cascade_response,
    closed_form_tan_phase,
    delay_profile,
    delay_spread,
    equidistant_comb,
    single_resonator_response,
    spectral_response,
    unwrap_phase,
)
from .kernels import BACKEND

__version__ = "0.1.0"
