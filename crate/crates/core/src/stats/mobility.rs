use crate::units::ELEMENTARY_CHARGE;
use crate::{Error, Result};

/// Carrier density at which mobility is quoted (cm⁻²).
pub const DEFAULT_DENSITY_CM2: f64 = 4e11;

/// Gate overdrive ΔV = e·Δn / c_g that induces `density` (cm⁻²) through a
/// gate stack of `capacitance` (F/cm²).
pub fn gate_overdrive(density: f64, capacitance: f64) -> Result<f64> {
    if !(density > 0.0 && capacitance > 0.0) {
        return Err(Error::validation("density and gate capacitance must be positive"));
    }
    Ok(ELEMENTARY_CHARGE * density / capacitance)
}

/// Mobility (cm²/V·s) from a channel resistance at the quoted density,
/// μ = 1/(e·Δn·R_sheet) with R_sheet = R / squares.
pub fn mobility_estimate(resistance: f64, squares: f64, density: f64) -> Result<f64> {
    if !(resistance > 0.0) {
        return Err(Error::validation("channel resistance must be positive"));
    }
    if !(squares > 0.0 && density > 0.0) {
        return Err(Error::validation("channel squares and density must be positive"));
    }
    if resistance.is_infinite() {
        return Ok(0.0);
    }
    let sheet = resistance / squares;
    Ok(1.0 / (ELEMENTARY_CHARGE * density * sheet))
}

/// Factor by which the estimate overstates mobility when a density `pinchoff`
/// is already present at VT.
pub fn overestimate_factor(pinchoff: f64, density: f64) -> f64 {
    1.0 + pinchoff / density
}
