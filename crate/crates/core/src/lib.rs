//! Emission, fluorescence and absorption spectra of a two-level emitter
//! coupled to a lossy single-mode cavity, with exact time-domain dynamics
//! and an independent density-matrix oracle.

pub mod dynamics;
pub mod eigen;
pub mod model;
pub mod ode;
pub mod oracle;
pub mod quad;
pub mod spectra;

pub use dynamics::{
    amplitudes_closed_form, escape_probabilities, escape_probabilities_for, populations_ode,
    trace_closed_form, DynamicsError, EscapeProbabilities, TimeTrace, TraceSource,
};
pub use eigen::{
    eigenfrequencies, eigenfrequencies_closed_form, eigenfrequencies_direct, mixing_angle_limits,
    ClosedFormVariant, EigenError, EigenMethod, EigenResult,
};
pub use model::{
    classify_regime, complex_frequencies, validate_params, ComplexFrequencyPair, Coupling,
    ParamError, Quality, RegimeReport, Role, SystemParams,
};
pub use oracle::{
    compare_spectra, lindblad_evolve, lindblad_trace, numeric_relaxation_spectrum,
    regression_spectrum, ComparisonReport, Curve, DensityMatrix3, FourierWindow, NumericSpectrum,
    OracleError,
};
pub use spectra::{
    d_of_omega, driven_response, relaxation_spectra_classical, role_exchange, s_at, s_cav,
    spectrum_grid, DrivenResponse, Scenario, Spectrum, SpectrumError,
};
