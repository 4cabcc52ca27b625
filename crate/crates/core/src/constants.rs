//! Physical constants (CODATA 2018) used throughout the crate.
//!
//! All computations keep SI units at the public boundary; these are the only
//! physical constants that enter.

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant ħ, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant k_B, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Matsubara frequency ξ_n = 2π n k_B T / ħ in rad/s.
pub fn matsubara_frequency(n: u32, temperature: f64) -> f64 {
    2.0 * std::f64::consts::PI * n as f64 * BOLTZMANN * temperature / HBAR
}

/// Thermal wavelength λ_T = ħc/(k_B T) in m; infinite at T = 0.
pub fn thermal_wavelength(temperature: f64) -> f64 {
    if temperature <= 0.0 {
        f64::INFINITY
    } else {
        HBAR * SPEED_OF_LIGHT / (BOLTZMANN * temperature)
    }
}
