"""Location-dependent finite-state Markov channel (FSMC) modeling of
tunnel radio links from distance-stamped SNR traces.

Pipeline: partition a measured trace into spatial intervals, select the
fading family per interval by AICc, fit the Gamma-form SNR density,
design Lloyd-Max SNR levels, estimate tridiagonal transition matrices,
then simulate and score synthetic traces against holdout measurements.
"""

from ._version import __version__
from ._kernels import BACKEND as KERNEL_BACKEND
from .trace import (MeasurementTrace, TraceSample, IntervalPartition,
                    IntervalSlice, load_trace, save_trace,
                    interval_length_from_wavelengths, plan_partition,
                    partition)
from .distfit import (FamilyParams, FitResult, SnrPdf, aicc_score,
                      fit_rayleigh, fit_rice, fit_nakagami, select_model,
                      selection_histogram, snr_pdf, partial_moment)
from .quantizer import (LevelSet, QuantizerConfig, lloyd_max, distortion,
                        quantize, quantize_array)
from .markov import (TransitionMatrix, StateSequence, FsmcInterval,
                     FsmcModel, to_states, estimate_matrix,
                     state_probabilities, stationary_distribution,
                     build_model, save_model, load_model)
from .simulate import (Trajectory, SimulatedTrace, simulate,
                       empirical_stats, save_sim_csv, load_sim_csv,
                       as_measurement_trace)
from .evaluate import (mse_trace, mse_details, bin_means, compare_matrices,
                       sweep, EvaluationReport, SweepCell)
from .synth import FadingSpec, SynthSpec, synth_trace, synth_from_model

__all__ = [
    "__version__", "KERNEL_BACKEND",
    "MeasurementTrace", "TraceSample", "IntervalPartition", "IntervalSlice",
    "load_trace", "save_trace", "interval_length_from_wavelengths",
    "plan_partition", "partition",
    "FamilyParams", "FitResult", "SnrPdf", "aicc_score", "fit_rayleigh",
    "fit_rice", "fit_nakagami", "select_model", "selection_histogram",
    "snr_pdf", "partial_moment",
    "LevelSet", "QuantizerConfig", "lloyd_max", "distortion", "quantize",
    "quantize_array",
    "TransitionMatrix", "StateSequence", "FsmcInterval", "FsmcModel",
    "to_states", "estimate_matrix", "state_probabilities",
    "stationary_distribution", "build_model", "save_model", "load_model",
    "Trajectory", "SimulatedTrace", "simulate", "empirical_stats",
    "save_sim_csv", "load_sim_csv", "as_measurement_trace",
    "mse_trace", "mse_details", "bin_means", "compare_matrices", "sweep",
    "EvaluationReport", "SweepCell",
    "FadingSpec", "SynthSpec", "synth_trace", "synth_from_model",
]
