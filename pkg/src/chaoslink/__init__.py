"""DCSK cooperative relay error-rate analysis under Nakagami-m fading and
generalized Gaussian noise, with Monte Carlo cross-checks."""

from .analytic import AberCurve, aber_df, aber_df_expanded, aber_ef, curve
from .channel import DF, EF, GammaDist, NoiseModel, Scenario, build_links
from .chaos import correlate_detect, generate_chaotic, modulate, receive
from .errors import (ChaosLinkError, ConfigError, DegenerateSeed, DomainError, FitError,
                     TruncationError)
from .fit import ExpSumApprox, expsum_eval, fit_expsum, load_table2
from .montecarlo import McEstimate, sim_system_ber, sim_waveform_ber, sweep
from .special import dcsk_conditional_ber, gamma_sum_pdf, q_generalized

__version__ = "0.1.0"
