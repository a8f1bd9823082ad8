//! Spectra over frequency grids and scans over the resonator capacitances.
//!
//! Grid cells are independent, so the 1D, 2D and loss sweeps evaluate them
//! with rayon and collect in input order. Run inside a
//! [`rayon::ThreadPool::install`] to bound the thread count; results are
//! bit-identical for any pool size.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{solve_constraints, CircuitError, DeviceParams, ResonatorParams};
use crate::dispersion::DispersionError;
use crate::mixer::{
    device_squeezing, gain_db, lossy_gain_db, Amplifier, LossModel, MixerError, ModeCoefficients,
    PumpConfig,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid unit cell: {0}")]
    InvalidCell(#[from] CircuitError),
    #[error("invalid unit cell: {0}")]
    InconsistentCell(String),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("band [{lo:e}, {hi:e}] Hz contains no grid points")]
    EmptyBand { lo: f64, hi: f64 },
}

/// Uniform frequency axis in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    start: f64,
    stop: f64,
    n_points: usize,
    exclusion_margin: f64,
}

impl FrequencyGrid {
    pub fn new(
        start: f64,
        stop: f64,
        n_points: usize,
        exclusion_margin: f64,
    ) -> Result<Self, SweepError> {
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(SweepError::InvalidGrid(format!(
                "start {start} must be below stop {stop}"
            )));
        }
        if n_points < 2 {
            return Err(SweepError::InvalidGrid(format!(
                "need at least 2 points, got {n_points}"
            )));
        }
        if !(exclusion_margin >= 0.0) {
            return Err(SweepError::InvalidGrid(format!(
                "exclusion margin {exclusion_margin} must be non-negative"
            )));
        }
        Ok(Self {
            start,
            stop,
            n_points,
            exclusion_margin,
        })
    }

    /// 1-11 GHz in 2001 points, skipping 10 MHz either side of the resonator.
    pub fn default_band() -> Self {
        Self {
            start: 1e9,
            stop: 11e9,
            n_points: 2001,
            exclusion_margin: 10e6,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn exclusion_margin(&self) -> f64 {
        self.exclusion_margin
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.n_points - 1) as f64
    }

    pub fn frequency(&self, index: usize) -> f64 {
        if index + 1 == self.n_points {
            self.stop
        } else {
            self.start + (self.stop - self.start) * index as f64 / (self.n_points - 1) as f64
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.frequency(i)).collect()
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self::default_band()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointFlag {
    Ok,
    /// Signal or idler does not propagate (stopband, above the plasma
    /// frequency, or idler at negative frequency).
    Stopband,
    /// Signal or idler within the exclusion margin of the resonator pole.
    PoleSkipped,
}

impl PointFlag {
    pub fn label(&self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::Stopband => "stopband",
            PointFlag::PoleSkipped => "pole-skipped",
        }
    }
}

/// Per-frequency gain and squeezing in dB. Flagged points hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub eta: f64,
    pub frequencies: Vec<f64>,
    pub gain_db: Vec<Option<f64>>,
    pub lossy_gain_db: Vec<Option<f64>>,
    pub squeeze_min_db: Vec<Option<f64>>,
    pub squeeze_max_db: Vec<Option<f64>>,
    pub flags: Vec<PointFlag>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `|S_min|` in dB, the plotted squeezing magnitude.
    pub fn abs_squeeze_db(&self) -> Vec<Option<f64>> {
        self.squeeze_min_db.iter().map(|s| s.map(f64::abs)).collect()
    }

    pub fn quantity(&self, quantity: SpectrumQuantity) -> Vec<Option<f64>> {
        match quantity {
            SpectrumQuantity::Gain => self.gain_db.clone(),
            SpectrumQuantity::LossyGain => self.lossy_gain_db.clone(),
            SpectrumQuantity::AbsSqueezing => self.abs_squeeze_db(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectrumQuantity {
    Gain,
    LossyGain,
    AbsSqueezing,
}

/// Fixed line, pump and resonator frequency; the two capacitances are the
/// remaining degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    pub device: DeviceParams,
    pub pump: PumpConfig,
    /// Resonator frequency in Hz.
    pub resonance_hz: f64,
}

impl Design {
    pub fn cell(&self, c_coupling: f64, c_resonator: f64) -> Result<ResonatorParams, CircuitError> {
        solve_constraints(
            &self.device,
            2.0 * PI * self.resonance_hz,
            c_coupling,
            c_resonator,
        )
    }

    pub fn amplifier(&self, c_coupling: f64, c_resonator: f64) -> Result<Amplifier, CircuitError> {
        let res = self.cell(c_coupling, c_resonator)?;
        Ok(Amplifier::new(&self.device, &res, self.pump))
    }
}

fn check_cell(device: &DeviceParams, res: &ResonatorParams) -> Result<(), SweepError> {
    let target = device.target_c_effective();
    if (res.c_effective() - target).abs() > 1e-9 * target {
        return Err(SweepError::InconsistentCell(format!(
            "C_0 + C_c = {:e} F but the line impedance requires {:e} F",
            res.c_effective(),
            target
        )));
    }
    let wr = res.resonance_frequency();
    if !(wr.is_finite() && wr > 0.0) {
        return Err(SweepError::InconsistentCell(format!(
            "resonance frequency {wr} is not finite"
        )));
    }
    Ok(())
}

/// Output coefficients at one frequency, or the reason the point is skipped.
pub fn evaluate_point(
    amp: &Amplifier,
    frequency: f64,
    exclusion_margin: f64,
) -> Result<ModeCoefficients, PointFlag> {
    let idler = 2.0 * amp.pump.pump_frequency() - frequency;
    let pole = amp.resonance_hz();
    if exclusion_margin > 0.0
        && ((frequency - pole).abs() <= exclusion_margin || (idler - pole).abs() <= exclusion_margin)
    {
        return Err(PointFlag::PoleSkipped);
    }
    amp.output_coefficients(frequency).map_err(|err| match err {
        MixerError::Dispersion(DispersionError::AtPole { .. }) => PointFlag::PoleSkipped,
        _ => PointFlag::Stopband,
    })
}

fn assemble(
    frequencies: &[f64],
    points: &[Result<ModeCoefficients, PointFlag>],
    loss: &LossModel,
) -> SpectrumResult {
    let n = frequencies.len();
    let mut out = SpectrumResult {
        eta: loss.eta(),
        frequencies: frequencies.to_vec(),
        gain_db: Vec::with_capacity(n),
        lossy_gain_db: Vec::with_capacity(n),
        squeeze_min_db: Vec::with_capacity(n),
        squeeze_max_db: Vec::with_capacity(n),
        flags: Vec::with_capacity(n),
    };
    for point in points {
        match point {
            Ok(c) => {
                let sq = device_squeezing(c, loss);
                out.gain_db.push(Some(gain_db(c)));
                out.lossy_gain_db.push(Some(lossy_gain_db(c, loss)));
                out.squeeze_min_db.push(Some(sq.min_db));
                out.squeeze_max_db.push(Some(sq.max_db));
                out.flags.push(PointFlag::Ok);
            }
            Err(flag) => {
                out.gain_db.push(None);
                out.lossy_gain_db.push(None);
                out.squeeze_min_db.push(None);
                out.squeeze_max_db.push(None);
                out.flags.push(*flag);
            }
        }
    }
    out
}

fn amplifier_spectrum(amp: &Amplifier, loss: &LossModel, grid: &FrequencyGrid) -> SpectrumResult {
    let frequencies = grid.frequencies();
    let points: Vec<_> = frequencies
        .iter()
        .map(|&f| evaluate_point(amp, f, grid.exclusion_margin()))
        .collect();
    assemble(&frequencies, &points, loss)
}

/// Gain and squeezing of one unit-cell design over `grid`.
pub fn spectrum(
    device: &DeviceParams,
    resonator: &ResonatorParams,
    pump: &PumpConfig,
    loss: &LossModel,
    grid: &FrequencyGrid,
) -> Result<SpectrumResult, SweepError> {
    check_cell(device, resonator)?;
    let amp = Amplifier::new(device, resonator, *pump);
    Ok(amplifier_spectrum(&amp, loss, grid))
}

/// Measure in Hz of the part of `band` where `quantity` exceeds
/// `threshold_db`, with linear interpolation of threshold crossings.
/// Separate super-threshold intervals are summed; flagged points count as
/// below threshold.
pub fn bandwidth_above(
    spectrum: &SpectrumResult,
    quantity: SpectrumQuantity,
    threshold_db: f64,
    band: (f64, f64),
) -> Result<f64, SweepError> {
    let (lo, hi) = band;
    if !spectrum.frequencies.iter().any(|&f| f >= lo && f <= hi) {
        return Err(SweepError::EmptyBand { lo, hi });
    }
    let values = spectrum.quantity(quantity);
    let clip = |a: f64, b: f64| (b.min(hi) - a.max(lo)).max(0.0);

    let mut total = 0.0;
    for i in 0..spectrum.len().saturating_sub(1) {
        let (f0, f1) = (spectrum.frequencies[i], spectrum.frequencies[i + 1]);
        if f1 < lo || f0 > hi {
            continue;
        }
        let (Some(y0), Some(y1)) = (values[i], values[i + 1]) else {
            continue;
        };
        let (above0, above1) = (y0 > threshold_db, y1 > threshold_db);
        total += match (above0, above1) {
            (true, true) => clip(f0, f1),
            (false, false) => 0.0,
            _ => {
                let crossing = f0 + (threshold_db - y0) / (y1 - y0) * (f1 - f0);
                if above0 {
                    clip(f0, crossing)
                } else {
                    clip(crossing, f1)
                }
            }
        };
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedCapacitance {
    /// Hold `C_c` (F) and vary `C_r`.
    Coupling(f64),
    /// Hold `C_r` (F) and vary `C_c`.
    Resonator(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell1d {
    pub c_coupling: f64,
    pub c_resonator: f64,
    /// `Err` when the pair violates the cell constraints.
    pub spectrum: Result<SpectrumResult, CircuitError>,
}

pub fn sweep_1d(
    design: &Design,
    loss: &LossModel,
    fixed: FixedCapacitance,
    varied: &[f64],
    grid: &FrequencyGrid,
) -> Vec<SweepCell1d> {
    varied
        .par_iter()
        .map(|&value| {
            let (c_coupling, c_resonator) = match fixed {
                FixedCapacitance::Coupling(cc) => (cc, value),
                FixedCapacitance::Resonator(cr) => (value, cr),
            };
            let spectrum = design
                .amplifier(c_coupling, c_resonator)
                .map(|amp| amplifier_spectrum(&amp, loss, grid));
            SweepCell1d {
                c_coupling,
                c_resonator,
                spectrum,
            }
        })
        .collect()
}

/// Scalar figure of merit evaluated per `(C_c, C_r)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    /// Gain after the output loss at one frequency (Hz).
    GainAt { frequency: f64 },
    /// `|S_min|` in dB at one frequency (Hz).
    AbsSqueezingAt { frequency: f64 },
    /// Bandwidth in Hz above `threshold_db` within `band`.
    Bandwidth {
        quantity: SpectrumQuantity,
        threshold_db: f64,
        band: (f64, f64),
        grid: FrequencyGrid,
    },
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::GainAt { .. } => "gain",
            Metric::AbsSqueezingAt { .. } => "squeezing",
            Metric::Bandwidth {
                quantity: SpectrumQuantity::AbsSqueezing,
                ..
            } => "squeezing_bandwidth",
            Metric::Bandwidth { .. } => "gain_bandwidth",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Metric::Bandwidth { .. } => "Hz",
            _ => "dB",
        }
    }
}

/// Evaluates `metric` for the amplifier built from `(cc, cr)`.
///
/// `Ok(None)` means the cell is valid but the metric is undefined there
/// (frequency in a stopband or on the pole).
pub fn evaluate_metric(
    design: &Design,
    loss: &LossModel,
    metric: &Metric,
    cc: f64,
    cr: f64,
) -> Result<Option<f64>, CircuitError> {
    let amp = design.amplifier(cc, cr)?;
    Ok(match metric {
        Metric::GainAt { frequency } => evaluate_point(&amp, *frequency, 0.0)
            .ok()
            .map(|c| lossy_gain_db(&c, loss)),
        Metric::AbsSqueezingAt { frequency } => evaluate_point(&amp, *frequency, 0.0)
            .ok()
            .map(|c| device_squeezing(&c, loss).abs_db()),
        Metric::Bandwidth {
            quantity,
            threshold_db,
            band,
            grid,
        } => {
            let spectrum = amplifier_spectrum(&amp, loss, grid);
            let quantity = match quantity {
                SpectrumQuantity::Gain => SpectrumQuantity::LossyGain,
                other => *other,
            };
            bandwidth_above(&spectrum, quantity, *threshold_db, *band).ok()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellFlag {
    Ok,
    /// `(C_c, C_r)` violates the unit-cell constraints.
    Invalid,
    /// Valid cell, but the metric is undefined there.
    Undefined,
}

impl CellFlag {
    pub fn label(&self) -> &'static str {
        match self {
            CellFlag::Ok => "ok",
            CellFlag::Invalid => "invalid",
            CellFlag::Undefined => "undefined",
        }
    }
}

/// Scalar field over the capacitance plane; rows follow `cr_values`,
/// columns follow `cc_values`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid2D {
    pub cc_values: Vec<f64>,
    pub cr_values: Vec<f64>,
    pub field: Vec<Vec<Option<f64>>>,
    pub flags: Vec<Vec<CellFlag>>,
    pub metric_name: String,
}

impl SweepGrid2D {
    pub fn shape(&self) -> (usize, usize) {
        (self.cr_values.len(), self.cc_values.len())
    }

    /// Largest finite value and its `(row, column)`.
    pub fn max(&self) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (r, row) in self.field.iter().enumerate() {
            for (c, value) in row.iter().enumerate() {
                if let Some(v) = *value {
                    if best.map_or(true, |(b, _, _)| v > b) {
                        best = Some((v, r, c));
                    }
                }
            }
        }
        best
    }
}

pub fn sweep_2d(
    design: &Design,
    loss: &LossModel,
    cc_values: &[f64],
    cr_values: &[f64],
    metric: &Metric,
) -> SweepGrid2D {
    let n_cc = cc_values.len();
    let cells: Vec<(Option<f64>, CellFlag)> = (0..n_cc * cr_values.len())
        .into_par_iter()
        .map(|index| {
            let (cc, cr) = (cc_values[index % n_cc], cr_values[index / n_cc]);
            match evaluate_metric(design, loss, metric, cc, cr) {
                Ok(Some(v)) => (Some(v), CellFlag::Ok),
                Ok(None) => (None, CellFlag::Undefined),
                Err(_) => (None, CellFlag::Invalid),
            }
        })
        .collect();

    let mut field = Vec::with_capacity(cr_values.len());
    let mut flags = Vec::with_capacity(cr_values.len());
    for row in cells.chunks(n_cc.max(1)) {
        field.push(row.iter().map(|(v, _)| *v).collect());
        flags.push(row.iter().map(|(_, f)| *f).collect());
    }
    if n_cc == 0 {
        field = vec![Vec::new(); cr_values.len()];
        flags = vec![Vec::new(); cr_values.len()];
    }

    SweepGrid2D {
        cc_values: cc_values.to_vec(),
        cr_values: cr_values.to_vec(),
        field,
        flags,
        metric_name: metric.name().to_string(),
    }
}

/// Spectra of one design at several transmittances.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSweep {
    pub spectra: Vec<SpectrumResult>,
    /// `S_min` never rises as `η` grows, at every unflagged frequency.
    pub squeezing_monotone: bool,
    /// Lossy gain never falls as `η` grows, at every unflagged frequency.
    pub gain_monotone: bool,
}

pub fn loss_sweep(
    device: &DeviceParams,
    resonator: &ResonatorParams,
    pump: &PumpConfig,
    etas: &[LossModel],
    grid: &FrequencyGrid,
) -> Result<LossSweep, SweepError> {
    check_cell(device, resonator)?;
    let amp = Amplifier::new(device, resonator, *pump);
    let frequencies = grid.frequencies();
    let points: Vec<_> = frequencies
        .par_iter()
        .map(|&f| evaluate_point(&amp, f, grid.exclusion_margin()))
        .collect();
    let spectra: Vec<SpectrumResult> = etas
        .par_iter()
        .map(|loss| assemble(&frequencies, &points, loss))
        .collect();

    let mut order: Vec<usize> = (0..spectra.len()).collect();
    order.sort_by(|&a, &b| spectra[a].eta.total_cmp(&spectra[b].eta));
    let mut squeezing_monotone = true;
    let mut gain_monotone = true;
    for pair in order.windows(2) {
        let (low, high) = (&spectra[pair[0]], &spectra[pair[1]]);
        for i in 0..frequencies.len() {
            if let (Some(a), Some(b)) = (low.squeeze_min_db[i], high.squeeze_min_db[i]) {
                squeezing_monotone &= a >= b;
            }
            if let (Some(a), Some(b)) = (low.lossy_gain_db[i], high.lossy_gain_db[i]) {
                gain_monotone &= a <= b;
            }
        }
    }

    Ok(LossSweep {
        spectra,
        squeezing_monotone,
        gain_monotone,
    })
}
