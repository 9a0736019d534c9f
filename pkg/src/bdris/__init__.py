"""Channel estimation and prediction for beyond-diagonal RIS MIMO links.

The package covers the full pilot-to-rate pipeline: correlated aged
channel simulation, tensor-based joint estimation of the segment channels,
a conventional composite LS baseline, AR/CNN channel forecasting,
reflection-matrix optimization, and seeded Monte-Carlo experiment drivers
with a batch CLI.
"""

from .aging import (ArModel, PatternBank, ar_predict, build_pattern_bank,
                    classify_pattern, fit_ar_from_history, fit_jakes_ar,
                    jakes_acf, levinson_durbin, preprocess_csi)
from .bals import Tucker2Bals
from .beamforming import (BeamformingSolution, CascadeChannel, optimize,
                          project_symmetric_unitary, sinr, sum_rate, takagi)
from .channel import (ChannelSet, PilotObservation, gen_correlation, gen_E_series,
                      gen_H, generate_channel_set, probe_anchor, simulate_training)
from .cnn import DopplerCnnClassifier
from .config import ExperimentSpec, SystemConfig, load_config
from .dft_ls import DftLs
from .metrics import (FlopCounter, average_overhead, flop_model, nmse,
                      overhead_reduction, pilot_length)
from .reflections import (PilotBook, build_dft_book, build_training_book,
                          dft_pilot_phi, random_symmetric_unitary,
                          validate_identifiability)

__version__ = "0.1.0"

__all__ = [
    "ArModel", "PatternBank", "ar_predict", "build_pattern_bank",
    "classify_pattern", "fit_ar_from_history", "fit_jakes_ar", "jakes_acf",
    "levinson_durbin", "preprocess_csi", "Tucker2Bals",
    "BeamformingSolution", "CascadeChannel", "optimize",
    "project_symmetric_unitary", "sinr", "sum_rate", "takagi",
    "ChannelSet", "PilotObservation", "gen_correlation", "gen_E_series",
    "gen_H", "generate_channel_set", "probe_anchor", "simulate_training",
    "DopplerCnnClassifier", "ExperimentSpec", "SystemConfig", "load_config",
    "DftLs", "FlopCounter", "average_overhead", "flop_model", "nmse",
    "overhead_reduction", "pilot_length", "PilotBook", "build_dft_book",
    "build_training_book", "dft_pilot_phi", "random_symmetric_unitary",
    "validate_identifiability",
]
