//! Linear dispersion of the resonator-loaded junction line.
//!
//! In Josephson units (capacitances over `C_J`, inductances over `L_J`,
//! frequencies over `ω_J`) a plane wave `exp(i(kx - ωτ))` on the continuous
//! line obeys
//!
//! ```text
//! k² (1 - ω²) = ω² c_eff(ω),
//! c_eff(ω)   = c0 + cc (1 - ω² cr lr) / (1 - ω² (cc + cr) lr),
//! ```
//!
//! where the resonator flux has been eliminated from the coupled equations of
//! motion. `c_eff` is the cell admittance divided by `iωC_J`, so it agrees
//! with [`crate::circuit::effective_admittance`] point by point.

use thiserror::Error;

use crate::circuit::{normalize, DeviceParams, NormalizedCell, ResonatorParams, POLE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DispersionError {
    #[error("normalized frequency {omega_norm} must be strictly positive")]
    NonPositiveFrequency { omega_norm: f64 },
    #[error("normalized frequency {omega_norm} sits on the resonator pole")]
    AtPole { omega_norm: f64 },
    #[error("normalized frequency {omega_norm} lies in a stopband")]
    Stopband { omega_norm: f64 },
}

/// Normalized cell plus the plasma frequency used to convert SI angular
/// frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionContext {
    pub cell: NormalizedCell,
    pub plasma_frequency: f64,
}

impl DispersionContext {
    pub fn new(device: &DeviceParams, res: &ResonatorParams) -> Self {
        Self {
            cell: normalize(device, res),
            plasma_frequency: device.plasma_frequency(),
        }
    }

    /// Converts an angular frequency in rad/s to units of `ω_J`.
    pub fn to_normalized(&self, omega: f64) -> f64 {
        omega / self.plasma_frequency
    }

    /// Normalized resonator pole `[(cc + cr) lr]^(-1/2)`.
    pub fn pole(&self) -> f64 {
        ((self.cell.cc + self.cell.cr) * self.cell.lr).sqrt().recip()
    }
}

pub fn effective_capacitance_norm(
    ctx: &DispersionContext,
    omega_norm: f64,
) -> Result<f64, DispersionError> {
    if !(omega_norm > 0.0) {
        return Err(DispersionError::NonPositiveFrequency { omega_norm });
    }
    let NormalizedCell { c0, cc, cr, lr } = ctx.cell;
    let w2 = omega_norm * omega_norm;
    let denominator = 1.0 - w2 * (cc + cr) * lr;
    if denominator.abs() < POLE_TOLERANCE {
        return Err(DispersionError::AtPole { omega_norm });
    }
    Ok(c0 + cc * (1.0 - w2 * cr * lr) / denominator)
}

/// Wavenumber in radians per unit cell.
pub fn wavenumber(ctx: &DispersionContext, omega_norm: f64) -> Result<f64, DispersionError> {
    let c_eff = effective_capacitance_norm(ctx, omega_norm)?;
    let junction = 1.0 - omega_norm * omega_norm;
    // above the plasma frequency the junction branch is capacitive and no
    // wave propagates
    if junction <= 0.0 {
        return Err(DispersionError::Stopband { omega_norm });
    }
    let radicand = c_eff / junction;
    if radicand < 0.0 {
        return Err(DispersionError::Stopband { omega_norm });
    }
    Ok(omega_norm * radicand.sqrt())
}

/// `Δk_L = 2k(ω_p) - k(ω) - k(2ω_p - ω)`.
pub fn linear_mismatch(
    ctx: &DispersionContext,
    omega_signal_norm: f64,
    omega_pump_norm: f64,
) -> Result<f64, DispersionError> {
    let k_pump = wavenumber(ctx, omega_pump_norm)?;
    let k_signal = wavenumber(ctx, omega_signal_norm)?;
    let k_idler = wavenumber(ctx, 2.0 * omega_pump_norm - omega_signal_norm)?;
    Ok(2.0 * k_pump - k_signal - k_idler)
}

/// `Δk = (1 + 2β²) Δk_L - 2β² k(ω_p)`, including self- and cross-phase
/// modulation from the pump.
pub fn total_mismatch(
    ctx: &DispersionContext,
    omega_signal_norm: f64,
    omega_pump_norm: f64,
    beta: f64,
) -> Result<f64, DispersionError> {
    let linear = linear_mismatch(ctx, omega_signal_norm, omega_pump_norm)?;
    let k_pump = wavenumber(ctx, omega_pump_norm)?;
    Ok(phase_mismatch(linear, k_pump, beta))
}

pub(crate) fn phase_mismatch(linear: f64, k_pump: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    (1.0 + 2.0 * b2) * linear - 2.0 * b2 * k_pump
}
