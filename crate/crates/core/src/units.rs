//! Physical constants in the units used throughout the simulator.

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Boltzmann constant (eV/K).
pub const BOLTZMANN_EV: f64 = 8.617_333_262e-5;

/// Reduced Planck constant (eV s).
pub const HBAR_EV: f64 = 6.582_119_569e-16;

/// Source-drain bias used as the current normalisation point (V).
pub const REFERENCE_BIAS: f64 = 1.0e-3;

/// Thermal energy k_B T in eV.
pub fn thermal_energy(temperature: f64) -> f64 {
    BOLTZMANN_EV * temperature
}
