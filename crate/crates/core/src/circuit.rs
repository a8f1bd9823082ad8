//! Unit-cell constants, Josephson normalization and the resonator
//! parametrization.
//!
//! A unit cell consists of one Josephson junction in series along the line,
//! a shunt capacitor `C_0` to ground, and an LC resonator (`C_r`, `L_r`)
//! hanging off the line node through a coupling capacitor `C_c`. Fixing the
//! line impedance and the resonator frequency leaves two free parameters,
//! `(C_c, C_r)`; [`solve_constraints`] fills in the rest.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Magnetic flux quantum h/2e in Wb.
pub const FLUX_QUANTUM: f64 = 2.067833848e-15;

/// Below this magnitude the resonator denominator `1 - ω²(C_c+C_r)L_r` is
/// treated as a pole.
pub const POLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("`{name}` must be strictly positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("`{name}` must be non-negative, got {value}")]
    NegativeInput { name: &'static str, value: f64 },
    #[error(
        "coupling capacitance {c_coupling:e} F exceeds the effective capacitance {c_effective:e} F; \
         the ground capacitance would be negative"
    )]
    NegativeCapacitance { c_coupling: f64, c_effective: f64 },
    #[error("C_c + C_r is zero; the resonator inductance is undefined")]
    ZeroDenominator,
    #[error("angular frequency {omega:e} rad/s sits on the resonator pole")]
    AtPole { omega: f64 },
    #[error("admittance vanishes at {omega:e} rad/s; the impedance is unbounded")]
    ZeroAdmittance { omega: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, CircuitError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CircuitError::NonPositiveInput { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, CircuitError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CircuitError::NegativeInput { name, value })
    }
}

/// Physical constants shared by every unit cell of the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    critical_current: f64,
    junction_capacitance: f64,
    n_cells: u32,
    line_impedance: f64,
    josephson_inductance: f64,
    plasma_frequency: f64,
    josephson_energy: f64,
}

impl DeviceParams {
    pub fn critical_current(&self) -> f64 {
        self.critical_current
    }

    pub fn junction_capacitance(&self) -> f64 {
        self.junction_capacitance
    }

    pub fn n_cells(&self) -> u32 {
        self.n_cells
    }

    pub fn line_impedance(&self) -> f64 {
        self.line_impedance
    }

    pub fn flux_quantum(&self) -> f64 {
        FLUX_QUANTUM
    }

    /// `L_J = Φ0 / (2π I_c)` in H.
    pub fn josephson_inductance(&self) -> f64 {
        self.josephson_inductance
    }

    /// `ω_J = (L_J C_J)^(-1/2)` in rad/s.
    pub fn plasma_frequency(&self) -> f64 {
        self.plasma_frequency
    }

    /// `E_J = I_c Φ0 / 2π` in J.
    pub fn josephson_energy(&self) -> f64 {
        self.josephson_energy
    }

    /// Capacitance per cell that yields the configured line impedance,
    /// `L_J / Z0²`.
    pub fn target_c_effective(&self) -> f64 {
        self.josephson_inductance / (self.line_impedance * self.line_impedance)
    }
}

/// Builds a [`DeviceParams`] from SI inputs and fills in the Josephson
/// normalization constants.
pub fn derive_device(
    critical_current: f64,
    junction_capacitance: f64,
    n_cells: u32,
    line_impedance: f64,
) -> Result<DeviceParams, CircuitError> {
    let critical_current = positive("critical_current", critical_current)?;
    let junction_capacitance = positive("junction_capacitance", junction_capacitance)?;
    if n_cells == 0 {
        return Err(CircuitError::NonPositiveInput {
            name: "n_cells",
            value: 0.0,
        });
    }
    let line_impedance = positive("line_impedance", line_impedance)?;

    let josephson_inductance = FLUX_QUANTUM / (2.0 * PI * critical_current);
    let plasma_frequency = (josephson_inductance * junction_capacitance).sqrt().recip();
    let josephson_energy = critical_current * FLUX_QUANTUM / (2.0 * PI);

    Ok(DeviceParams {
        critical_current,
        junction_capacitance,
        n_cells,
        line_impedance,
        josephson_inductance,
        plasma_frequency,
        josephson_energy,
    })
}

/// Element values of one loaded unit cell, all in SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    c_ground: f64,
    c_coupling: f64,
    c_resonator: f64,
    l_resonator: f64,
}

impl ResonatorParams {
    pub fn new(
        c_ground: f64,
        c_coupling: f64,
        c_resonator: f64,
        l_resonator: f64,
    ) -> Result<Self, CircuitError> {
        Ok(Self {
            c_ground: non_negative("c_ground", c_ground)?,
            c_coupling: non_negative("c_coupling", c_coupling)?,
            c_resonator: non_negative("c_resonator", c_resonator)?,
            l_resonator: non_negative("l_resonator", l_resonator)?,
        })
    }

    pub fn c_ground(&self) -> f64 {
        self.c_ground
    }

    pub fn c_coupling(&self) -> f64 {
        self.c_coupling
    }

    pub fn c_resonator(&self) -> f64 {
        self.c_resonator
    }

    pub fn l_resonator(&self) -> f64 {
        self.l_resonator
    }

    /// `ω_r = [(C_c + C_r) L_r]^(-1/2)`; infinite for an empty resonator.
    pub fn resonance_frequency(&self) -> f64 {
        ((self.c_coupling + self.c_resonator) * self.l_resonator)
            .sqrt()
            .recip()
    }

    /// Low-frequency shunt capacitance `C_0 + C_c`.
    pub fn c_effective(&self) -> f64 {
        self.c_ground + self.c_coupling
    }

    fn pole_denominator(&self, omega: f64) -> f64 {
        1.0 - omega * omega * (self.c_coupling + self.c_resonator) * self.l_resonator
    }
}

/// Completes a unit cell from the two free capacitances.
///
/// The ground capacitance absorbs whatever the coupling capacitor does not
/// contribute to `L_J / Z0²`, and the inductance is chosen so the resonator
/// sits at `target_resonance` (rad/s).
pub fn solve_constraints(
    device: &DeviceParams,
    target_resonance: f64,
    c_coupling: f64,
    c_resonator: f64,
) -> Result<ResonatorParams, CircuitError> {
    let target_resonance = positive("target_resonance", target_resonance)?;
    let c_coupling = non_negative("c_coupling", c_coupling)?;
    let c_resonator = non_negative("c_resonator", c_resonator)?;

    let c_effective = device.target_c_effective();
    if c_coupling > c_effective {
        return Err(CircuitError::NegativeCapacitance {
            c_coupling,
            c_effective,
        });
    }
    let c_loop = c_coupling + c_resonator;
    if c_loop == 0.0 {
        return Err(CircuitError::ZeroDenominator);
    }

    let c_ground = c_effective - c_coupling;
    let l_resonator = 1.0 / (target_resonance * target_resonance * c_loop);
    ResonatorParams::new(c_ground, c_coupling, c_resonator, l_resonator)
}

/// Shunt admittance of the cell, `Y = iωC_0 + iωC_c (1 - ω²C_rL_r) / (1 - ω²(C_c+C_r)L_r)`.
pub fn effective_admittance(res: &ResonatorParams, omega: f64) -> Result<Complex64, CircuitError> {
    let omega = positive("omega", omega)?;
    let denominator = res.pole_denominator(omega);
    if denominator.abs() < POLE_TOLERANCE {
        return Err(CircuitError::AtPole { omega });
    }
    let numerator = 1.0 - omega * omega * res.c_resonator * res.l_resonator;
    let capacitance = res.c_ground + res.c_coupling * numerator / denominator;
    Ok(Complex64::new(0.0, omega * capacitance))
}

/// Shunt impedance of the cell, the inverse of [`effective_admittance`].
pub fn effective_impedance(res: &ResonatorParams, omega: f64) -> Result<Complex64, CircuitError> {
    let admittance = effective_admittance(res, omega)?;
    if admittance.norm() == 0.0 {
        return Err(CircuitError::ZeroAdmittance { omega });
    }
    Ok(admittance.inv())
}

/// Relative gap between the exact shunt capacitance at `omega` and the
/// off-resonance value `C_0 + C_c`. Reported, never enforced.
pub fn c_effective_deviation(res: &ResonatorParams, omega: f64) -> Result<f64, CircuitError> {
    let admittance = effective_admittance(res, omega)?;
    let exact = admittance.im / omega;
    Ok((exact - res.c_effective()).abs() / res.c_effective())
}

/// Cell elements divided by the junction values (`C_J` or `L_J`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedCell {
    pub c0: f64,
    pub cc: f64,
    pub cr: f64,
    pub lr: f64,
}

impl NormalizedCell {
    pub fn new(c0: f64, cc: f64, cr: f64, lr: f64) -> Result<Self, CircuitError> {
        Ok(Self {
            c0: non_negative("c0", c0)?,
            cc: non_negative("cc", cc)?,
            cr: non_negative("cr", cr)?,
            lr: non_negative("lr", lr)?,
        })
    }

    pub fn denormalize(&self, device: &DeviceParams) -> ResonatorParams {
        let cj = device.junction_capacitance();
        ResonatorParams {
            c_ground: self.c0 * cj,
            c_coupling: self.cc * cj,
            c_resonator: self.cr * cj,
            l_resonator: self.lr * device.josephson_inductance(),
        }
    }
}

pub fn normalize(device: &DeviceParams, res: &ResonatorParams) -> NormalizedCell {
    let cj = device.junction_capacitance();
    NormalizedCell {
        c0: res.c_ground / cj,
        cc: res.c_coupling / cj,
        cr: res.c_resonator / cj,
        lr: res.l_resonator / device.josephson_inductance(),
    }
}
