//! Gain and quadrature-squeezing spectra of resonant phase-matched Josephson
//! traveling-wave parametric amplifiers, plus sweeps and a small optimizer
//! over the two free resonator capacitances.
//!
//! ```
//! use twpa::circuit::derive_device;
//! use twpa::mixer::{gain_db, PumpConfig};
//! use twpa::sweep::Design;
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let device = derive_device(2.75e-6, 39.5e-15, 2000, 50.0)?;
//! let pump = PumpConfig::new(&device, 1.37e-6, 6.0e9)?;
//! let design = Design { device, pump, resonance_hz: 6.06e9 };
//! let amp = design.amplifier(20e-15, 11e-12)?;
//! let g = gain_db(&amp.output_coefficients(5.0e9)?);
//! assert!(g > 16.0);
//! # Ok(())
//! # }
//! ```

pub mod circuit;
pub mod dispersion;
pub mod mixer;
pub mod sweep;
pub mod optimize;
pub mod cli;
