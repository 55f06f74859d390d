use crate::error::{Error, Result};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Photons per second carried by `power` watts at `wavelength` metres.
pub fn photon_flux(power: f64, wavelength: f64) -> Result<f64> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::Domain(format!("power {power} W must be > 0")));
    }
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(Error::Domain(format!(
            "wavelength {wavelength} m must be > 0"
        )));
    }
    Ok(power * wavelength / (PLANCK * SPEED_OF_LIGHT))
}
