"""Cavity-field moments, phase, and squeezing from simulated atom signals.

The pipeline: prepare a truncated Fock-space state (`fock`), fly two-level
atoms through the cavity and record their polarization <sigma_+>(T)
(`dynamics`), apply Fresnel or Dirichlet integral transforms (`transforms`),
and divide by the method's calibration constants to estimate field moments,
phase, and quadrature squeezing (`reconstruct`). `harness` and `cli` wrap
the pipeline in reproducible, file-emitting runs.
"""

from .dynamics import (
    AtomEntry,
    PolarizationSignal,
    ShotConfig,
    TimeGrid,
    TransitionKind,
    signal_closed_form,
    signal_from_shots,
    signal_unitary,
)
from .errors import (
    CalibrationError,
    CavityProbeError,
    ConfigError,
    ConvergenceError,
    DictionaryError,
    LeakageError,
    ProvenanceError,
    TruncationEdgeError,
)
from .fock import (
    FockVector,
    HilbertSpec,
    MomentKind,
    expect_moment,
    make_coherent,
    make_fock,
    make_squeezed,
    state_from_amplitudes,
)
from .harness import emit, load_config, parse_config, read_result, result_document, run
from .reconstruct import (
    CalibrationConstants,
    CalibrationRecord,
    MomentEstimate,
    SqueezingReport,
    calibrate_k2,
    estimate_adagger,
    estimate_adagger2,
    estimate_sg,
    k2_calibration_record,
    reference_states,
    squeezing_report,
    systematic_ratio,
)
from .transforms import (
    Backend,
    DirichletKernel,
    FresnelKernel,
    TailPolicy,
    TransformSpec,
    dirichlet_closed_form,
    fit_components,
    fresnel_closed_form,
    transform_report,
    transform_signal,
)

__version__ = "0.1.0"

__all__ = [
    "AtomEntry",
    "Backend",
    "CalibrationConstants",
    "CalibrationError",
    "CalibrationRecord",
    "CavityProbeError",
    "ConfigError",
    "ConvergenceError",
    "DictionaryError",
    "DirichletKernel",
    "FockVector",
    "FresnelKernel",
    "HilbertSpec",
    "LeakageError",
    "MomentEstimate",
    "MomentKind",
    "PolarizationSignal",
    "ProvenanceError",
    "ShotConfig",
    "SqueezingReport",
    "TailPolicy",
    "TimeGrid",
    "TransformSpec",
    "TransitionKind",
    "TruncationEdgeError",
    "calibrate_k2",
    "dirichlet_closed_form",
    "emit",
    "estimate_adagger",
    "estimate_adagger2",
    "estimate_sg",
    "expect_moment",
    "fit_components",
    "fresnel_closed_form",
    "k2_calibration_record",
    "load_config",
    "make_coherent",
    "make_fock",
    "make_squeezed",
    "parse_config",
    "read_result",
    "reference_states",
    "result_document",
    "run",
    "signal_closed_form",
    "signal_from_shots",
    "signal_unitary",
    "squeezing_report",
    "state_from_amplitudes",
    "systematic_ratio",
    "transform_report",
    "transform_signal",
]
