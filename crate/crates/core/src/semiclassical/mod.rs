//! Emission amplitudes, the amplitude-based shift, radiated energy, the
//! reduced emission probability and finite-`ℏ` mode functions.

mod amplitude;
mod modes;
mod spectral;
mod window;

pub use amplitude::{
    accumulate_scalar, accumulate_vector, amplitude_classical, current_transform, derivative_transform, minkowski_c,
    Amplitude4, EmissionAmplitude, LightFront,
};
pub use modes::{amplitude_quantum, phase_product_drift, sigma_squared, solve_mode_function, wkb_deviation, ModeFunction, ModeGrid};
pub use spectral::{
    emission_probability_reduced, emission_spectrum, larmor_energy, radiated_energy, shift_from_amplitudes,
    AmplitudeSettings, AmplitudeShift, EnergyReport, ProbabilityReport, SpectrumSample,
};
pub use window::{plateau_transform, CutoffWindow};
