#![allow(dead_code)]

use num_complex::Complex64;
use twpa::circuit::{derive_device, DeviceParams, ResonatorParams};
use twpa::mixer::PumpConfig;
use twpa::sweep::Design;

pub const FF: f64 = 1e-15;
pub const PF: f64 = 1e-12;
pub const GHZ: f64 = 1e9;

pub fn reference_device() -> DeviceParams {
    derive_device(2.75e-6, 39.5e-15, 2000, 50.0).unwrap()
}

pub fn reference_design() -> Design {
    design_with_pump(1.37e-6)
}

pub fn design_with_pump(pump_current: f64) -> Design {
    let device = reference_device();
    let pump = PumpConfig::new(&device, pump_current, 6.0 * GHZ).unwrap();
    Design {
        device,
        pump,
        resonance_hz: 6.06 * GHZ,
    }
}

/// The reference resonator: 20 fF coupling, 11 pF loop capacitance.
pub fn reference_cell(design: &Design) -> ResonatorParams {
    design.cell(20.0 * FF, 11.0 * PF).unwrap()
}

/// Coupled-mode system for `[a, b*]` with constant coefficients.
#[derive(Debug, Clone, Copy)]
pub struct CoupledModes {
    pub delta_k: f64,
    pub kappa: f64,
}

impl CoupledModes {
    fn rhs(&self, y: [Complex64; 2]) -> [Complex64; 2] {
        let i = Complex64::i();
        let half = 0.5 * self.delta_k;
        [
            i * half * y[0] + i * self.kappa * y[1],
            -i * self.kappa * y[0] - i * half * y[1],
        ]
    }

    fn rk4(&self, y0: [Complex64; 2], length: f64, steps: usize) -> [Complex64; 2] {
        let h = length / steps as f64;
        let mut y = y0;
        let axpy = |y: [Complex64; 2], a: f64, k: [Complex64; 2]| [y[0] + k[0] * a, y[1] + k[1] * a];
        for _ in 0..steps {
            let k1 = self.rhs(y);
            let k2 = self.rhs(axpy(y, h / 2.0, k1));
            let k3 = self.rhs(axpy(y, h / 2.0, k2));
            let k4 = self.rhs(axpy(y, h, k3));
            for j in 0..2 {
                y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
            }
        }
        y
    }

    /// Integrates from 0 to `length`, halving the step until two successive
    /// answers agree to `tolerance` (relative). Returns `(u, v)`.
    pub fn integrate(&self, length: f64, tolerance: f64) -> (Complex64, Complex64) {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let solve = |steps| {
            let a_from_signal = self.rk4([one, zero], length, steps)[0];
            let a_from_idler = self.rk4([zero, one], length, steps)[0];
            // a(x) = u a(0) + i v b*(0)
            (a_from_signal, a_from_idler / Complex64::i())
        };
        let mut steps = 64;
        let mut previous = solve(steps);
        loop {
            steps *= 2;
            let next = solve(steps);
            let scale = next.0.norm().max(next.1.norm()).max(1.0);
            let change = (next.0 - previous.0).norm().max((next.1 - previous.1).norm());
            if change <= tolerance * scale || steps >= 1 << 22 {
                return next;
            }
            previous = next;
        }
    }
}
