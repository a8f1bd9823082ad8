//! Closed-form three-mode coupled-mode solution.
//!
//! For a strong undepleted pump the signal at position `x` (in unit cells) is
//! `a(x) = u a(0) + i v a†_idler(0)` with
//!
//! ```text
//! u = cosh(gx) + i (Δk / 2g) sinh(gx)
//! v = (κ / g) sinh(gx),            κ = β² sqrt(k_s k_i)
//! g = sqrt(κ² - (Δk/2)²)
//! ```
//!
//! `g²` is real, so `g` is either real (amplifying) or imaginary
//! (oscillating). Both `cosh(gx)` and `sinh(gx)/g` are even in `g`, so the
//! principal complex square root covers both regimes without case splits.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{DeviceParams, ResonatorParams};
use crate::dispersion::{phase_mismatch, wavenumber, DispersionContext, DispersionError};

/// Below this `|gx|` the hyperbolic functions are replaced by their Taylor
/// series.
const SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixerError {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("position {0} must be non-negative")]
    NegativePosition(f64),
    #[error("signal coincides with the pump; the two-mode quadrature angle is undefined")]
    DegeneratePump,
    #[error("transmittance must lie in [0, 1], got {0}")]
    InvalidTransmittance(f64),
    #[error("invalid pump `{name}`: {value}")]
    InvalidPump { name: &'static str, value: f64 },
}

/// Pump drive with its normalized amplitude `β = I_p / 4I_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpConfig {
    pump_current: f64,
    pump_frequency: f64,
    beta: f64,
}

impl PumpConfig {
    /// `pump_current` in A, `pump_frequency` in Hz.
    pub fn new(
        device: &DeviceParams,
        pump_current: f64,
        pump_frequency: f64,
    ) -> Result<Self, MixerError> {
        if !(pump_current >= 0.0) || !pump_current.is_finite() {
            return Err(MixerError::InvalidPump {
                name: "pump_current",
                value: pump_current,
            });
        }
        if !(pump_frequency > 0.0) || !pump_frequency.is_finite() {
            return Err(MixerError::InvalidPump {
                name: "pump_frequency",
                value: pump_frequency,
            });
        }
        let beta = pump_current / (4.0 * device.critical_current());
        if beta >= 0.25 {
            return Err(MixerError::InvalidPump {
                name: "pump_current",
                value: pump_current,
            });
        }
        Ok(Self {
            pump_current,
            pump_frequency,
            beta,
        })
    }

    pub fn pump_current(&self) -> f64 {
        self.pump_current
    }

    /// Pump frequency in Hz.
    pub fn pump_frequency(&self) -> f64 {
        self.pump_frequency
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn pump_omega(&self) -> f64 {
        2.0 * PI * self.pump_frequency
    }
}

/// Solution of the coupled-mode equations at one signal frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients {
    pub u: Complex64,
    pub v: Complex64,
    pub g: Complex64,
    pub delta_k: f64,
    pub delta_k_linear: f64,
    pub position: f64,
    degenerate: bool,
}

impl ModeCoefficients {
    /// True when the signal sits on the pump, so signal and idler are the
    /// same mode.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Evaluates `u`, `v` and `g` for a signal at `omega_signal` (rad/s) after
/// `position` unit cells.
pub fn coefficients(
    ctx: &DispersionContext,
    pump: &PumpConfig,
    omega_signal: f64,
    position: f64,
) -> Result<ModeCoefficients, MixerError> {
    if !(position >= 0.0) {
        return Err(MixerError::NegativePosition(position));
    }
    let ws = ctx.to_normalized(omega_signal);
    let wp = ctx.to_normalized(pump.pump_omega());
    let wi = 2.0 * wp - ws;

    let k_pump = wavenumber(ctx, wp)?;
    let k_signal = wavenumber(ctx, ws)?;
    let k_idler = wavenumber(ctx, wi)?;

    let delta_k_linear = 2.0 * k_pump - k_signal - k_idler;
    let delta_k = phase_mismatch(delta_k_linear, k_pump, pump.beta());
    let kappa = pump.beta().powi(2) * (k_signal * k_idler).sqrt();
    let half_dk = 0.5 * delta_k;

    let g = Complex64::new(kappa * kappa - half_dk * half_dk, 0.0).sqrt();
    let (cosh_gx, sinh_gx_over_g) = hyperbolic_pair(g, position);

    let u = cosh_gx + Complex64::i() * half_dk * sinh_gx_over_g;
    let v = kappa * sinh_gx_over_g;

    Ok(ModeCoefficients {
        u,
        v,
        g,
        delta_k,
        delta_k_linear,
        position,
        degenerate: (ws - wp).abs() <= 1e-12 * wp,
    })
}

/// Returns `(cosh(gx), sinh(gx)/g)`, using the series near `g = 0`.
pub(crate) fn hyperbolic_pair(g: Complex64, x: f64) -> (Complex64, Complex64) {
    let z = g * x;
    if z.norm() < SERIES_THRESHOLD {
        let z2 = z * z;
        let cosh = 1.0 + z2 / 2.0 + z2 * z2 / 24.0;
        let sinc = x * (1.0 + z2 / 6.0 + z2 * z2 / 120.0);
        (cosh, sinc)
    } else {
        (z.cosh(), z.sinh() / g)
    }
}

/// Signal power gain `10 log10 |u|²` with a vacuum idler input.
pub fn gain_db(coeffs: &ModeCoefficients) -> f64 {
    10.0 * coeffs.u.norm_sqr().log10()
}

/// Output beam splitter with power transmittance `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    eta: f64,
}

impl LossModel {
    pub fn new(eta: f64) -> Result<Self, MixerError> {
        if (0.0..=1.0).contains(&eta) {
            Ok(Self { eta })
        } else {
            Err(MixerError::InvalidTransmittance(eta))
        }
    }

    pub fn lossless() -> Self {
        Self { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl Default for LossModel {
    fn default() -> Self {
        Self::lossless()
    }
}

/// Coherent gain after the beam splitter, `10 log10(η |u|²)`.
pub fn lossy_gain_db(coeffs: &ModeCoefficients, loss: &LossModel) -> f64 {
    10.0 * (loss.eta() * coeffs.u.norm_sqr()).log10()
}

/// Quadrature noise spectrum `S(θ) = 1 + 2η|v|² + 2η Re[i e^{-iθ} u v]`.
///
/// Vacuum is 1; values below 1 are squeezed.
pub fn squeezing_spectrum(coeffs: &ModeCoefficients, loss: &LossModel, theta: f64) -> f64 {
    let eta = loss.eta();
    let rotated = Complex64::i() * Complex64::from_polar(1.0, -theta) * coeffs.u * coeffs.v;
    1.0 + 2.0 * eta * coeffs.v.norm_sqr() + 2.0 * eta * rotated.re
}

/// The `θ = π/2` slice, `1 + 2η Re(uv) + 2η|v|²`, which reduces to the usual
/// `2η uv + 2η|v|² + 1` when `uv` is real.
pub fn fixed_quadrature_squeezing(coeffs: &ModeCoefficients, loss: &LossModel) -> f64 {
    let eta = loss.eta();
    1.0 + 2.0 * eta * (coeffs.u * coeffs.v).re + 2.0 * eta * coeffs.v.norm_sqr()
}

/// Extremes of [`squeezing_spectrum`] over the quadrature angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureExtrema {
    pub min: f64,
    pub max: f64,
    pub min_db: f64,
    pub max_db: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl QuadratureExtrema {
    /// Magnitude of the squeezed quadrature in dB.
    pub fn abs_db(&self) -> f64 {
        self.min_db.abs()
    }
}

fn wrap_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// `S(θ) = A + B cos(θ - θ0)` with `A = 1 + 2η|v|²`, `B = 2η|uv|`,
/// `θ0 = arg(uv) + π/2`.
pub fn device_squeezing(coeffs: &ModeCoefficients, loss: &LossModel) -> QuadratureExtrema {
    let eta = loss.eta();
    let (u_abs, v_abs) = (coeffs.u.norm(), coeffs.v.norm());
    let mean = 1.0 + 2.0 * eta * v_abs * v_abs;
    let swing = 2.0 * eta * u_abs * v_abs;
    let min = mean - swing;
    let max = mean + swing;
    let phase = (coeffs.u * coeffs.v).arg();
    QuadratureExtrema {
        min,
        max,
        min_db: 10.0 * min.log10(),
        max_db: 10.0 * max.log10(),
        theta_min: wrap_angle(phase - FRAC_PI_2),
        theta_max: wrap_angle(phase + FRAC_PI_2),
    }
}

/// Like [`device_squeezing`] but refuses the degenerate point where the
/// extremal angle no longer describes a two-mode quadrature.
pub fn squeezing_angles(
    coeffs: &ModeCoefficients,
    loss: &LossModel,
) -> Result<QuadratureExtrema, MixerError> {
    if coeffs.is_degenerate() {
        return Err(MixerError::DegeneratePump);
    }
    Ok(device_squeezing(coeffs, loss))
}

/// A fully specified amplifier: line, resonator and pump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplifier {
    pub ctx: DispersionContext,
    pub pump: PumpConfig,
    pub n_cells: u32,
    resonance_hz: f64,
}

impl Amplifier {
    pub fn new(device: &DeviceParams, res: &ResonatorParams, pump: PumpConfig) -> Self {
        Self {
            ctx: DispersionContext::new(device, res),
            pump,
            n_cells: device.n_cells(),
            resonance_hz: res.resonance_frequency() / (2.0 * PI),
        }
    }

    /// Resonator pole in Hz.
    pub fn resonance_hz(&self) -> f64 {
        self.resonance_hz
    }

    /// Coefficients at the output of the line for a signal at `frequency` Hz.
    pub fn output_coefficients(&self, frequency: f64) -> Result<ModeCoefficients, MixerError> {
        coefficients(
            &self.ctx,
            &self.pump,
            2.0 * PI * frequency,
            f64::from(self.n_cells),
        )
    }
}
