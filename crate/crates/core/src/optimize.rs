//! Search over the free resonator capacitances `(C_c, C_r)`.
//!
//! A coarse grid scan locates the best region, then a bounded Nelder-Mead
//! simplex refines from the best grid cell. The simplex works in fF for
//! `C_c` and pF for `C_r` so both axes have comparable step sizes.

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{CircuitError, ResonatorParams};
use crate::mixer::LossModel;
use crate::sweep::{evaluate_metric, Design, FrequencyGrid, Metric, SpectrumQuantity};

const CC_UNIT: f64 = 1e-15;
const CR_UNIT: f64 = 1e-12;
/// Simplex extent per axis (in fF and pF) below which refinement stops.
const SIMPLEX_TOLERANCE: f64 = 0.1;
const MAX_REFINE_EVALUATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("infeasible cell: {0}")]
    InvalidCell(#[from] CircuitError),
    #[error("objective undefined at C_c = {cc:e} F, C_r = {cr:e} F")]
    Undefined { cc: f64, cr: f64 },
    #[error("no coarse-grid cell yields a defined objective")]
    NoFeasiblePoint,
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveKind {
    GainAtFrequency { frequency: f64 },
    AbsSqueezingAtFrequency { frequency: f64 },
    BandwidthAboveThreshold {
        quantity: SpectrumQuantity,
        threshold_db: f64,
        band: (f64, f64),
        grid: FrequencyGrid,
    },
    /// `-((cc - a)/1 fF)² - ((cr - b)/1 pF)²`, a known-optimum calibration
    /// target that still respects the cell constraints.
    Paraboloid { center: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub loss: LossModel,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, loss: LossModel) -> Self {
        Self { kind, loss }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ObjectiveKind::GainAtFrequency { .. } => "gain",
            ObjectiveKind::AbsSqueezingAtFrequency { .. } => "squeezing",
            ObjectiveKind::BandwidthAboveThreshold {
                quantity: SpectrumQuantity::AbsSqueezing,
                ..
            } => "squeezing_bandwidth",
            ObjectiveKind::BandwidthAboveThreshold { .. } => "gain_bandwidth",
            ObjectiveKind::Paraboloid { .. } => "paraboloid",
        }
    }

    fn metric(&self) -> Option<Metric> {
        match self.kind {
            ObjectiveKind::GainAtFrequency { frequency } => Some(Metric::GainAt { frequency }),
            ObjectiveKind::AbsSqueezingAtFrequency { frequency } => {
                Some(Metric::AbsSqueezingAt { frequency })
            }
            ObjectiveKind::BandwidthAboveThreshold {
                quantity,
                threshold_db,
                band,
                grid,
            } => Some(Metric::Bandwidth {
                quantity,
                threshold_db,
                band,
                grid,
            }),
            ObjectiveKind::Paraboloid { .. } => None,
        }
    }
}

pub fn evaluate_objective(
    design: &Design,
    objective: &Objective,
    cc: f64,
    cr: f64,
) -> Result<f64, OptimizeError> {
    let value = match objective.metric() {
        Some(metric) => evaluate_metric(design, &objective.loss, &metric, cc, cr)?,
        None => {
            design.cell(cc, cr)?;
            let ObjectiveKind::Paraboloid { center: (a, b) } = objective.kind else {
                unreachable!()
            };
            let (dx, dy) = ((cc - a) / CC_UNIT, (cr - b) / CR_UNIT);
            Some(-(dx * dx) - dy * dy)
        }
    };
    value.ok_or(OptimizeError::Undefined { cc, cr })
}

/// Box in the `(C_c, C_r)` plane plus the coarse grid resolution. A bound
/// with `lower == upper` pins that capacitance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    cc_bounds: (f64, f64),
    cr_bounds: (f64, f64),
    coarse_grid: (usize, usize),
}

impl SearchSpace {
    /// The upper `C_c` bound is clipped to the effective capacitance of the
    /// design; a lower bound above it leaves nothing to search.
    pub fn new(
        design: &Design,
        cc_bounds: (f64, f64),
        cr_bounds: (f64, f64),
        coarse_grid: (usize, usize),
    ) -> Result<Self, OptimizeError> {
        for (name, (lo, hi)) in [("cc", cc_bounds), ("cr", cr_bounds)] {
            if !(lo > 0.0 && hi.is_finite() && lo <= hi) {
                return Err(OptimizeError::InvalidSpace(format!(
                    "{name} bounds ({lo:e}, {hi:e}) must be positive and ordered"
                )));
            }
        }
        if coarse_grid.0 == 0 || coarse_grid.1 == 0 {
            return Err(OptimizeError::InvalidSpace(
                "coarse grid needs at least one point per axis".into(),
            ));
        }
        let c_eff = design.device.target_c_effective();
        if cc_bounds.0 > c_eff {
            return Err(OptimizeError::NoFeasiblePoint);
        }
        Ok(Self {
            cc_bounds: (cc_bounds.0, cc_bounds.1.min(c_eff)),
            cr_bounds,
            coarse_grid,
        })
    }

    pub fn cc_bounds(&self) -> (f64, f64) {
        self.cc_bounds
    }

    pub fn cr_bounds(&self) -> (f64, f64) {
        self.cr_bounds
    }

    pub fn coarse_grid(&self) -> (usize, usize) {
        self.coarse_grid
    }

    pub fn cc_values(&self) -> Vec<f64> {
        axis(self.cc_bounds, self.coarse_grid.0)
    }

    pub fn cr_values(&self) -> Vec<f64> {
        axis(self.cr_bounds, self.coarse_grid.1)
    }

    /// Coarse grid points, `C_c` varying fastest.
    pub fn grid_points(&self) -> Vec<(f64, f64)> {
        let cc = self.cc_values();
        self.cr_values()
            .into_iter()
            .flat_map(|cr| cc.iter().map(move |&c| (c, cr)))
            .collect()
    }
}

fn axis((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if lo == hi || n == 1 {
        vec![lo]
    } else {
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Grid,
    Refine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub cc: f64,
    pub cr: f64,
    pub value: Option<f64>,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    /// `(C_c, C_r)` in F.
    pub best_point: (f64, f64),
    pub best_value: f64,
    pub best_grid_value: f64,
    pub derived_cell: ResonatorParams,
    pub trace: Vec<TraceEntry>,
    pub n_evaluations: usize,
}

/// Ranks by value (higher first), then smaller `C_c`, then smaller `C_r`.
fn rank(a: (f64, f64, f64), b: (f64, f64, f64)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
}

pub fn optimize(
    design: &Design,
    objective: &Objective,
    space: &SearchSpace,
) -> Result<OptimizationReport, OptimizeError> {
    let evaluate = |cc: f64, cr: f64| evaluate_objective(design, objective, cc, cr).ok();

    let mut trace: Vec<TraceEntry> = space
        .grid_points()
        .par_iter()
        .map(|&(cc, cr)| TraceEntry {
            cc,
            cr,
            value: evaluate(cc, cr),
            stage: Stage::Grid,
        })
        .collect();

    let (grid_value, grid_cc, grid_cr) = trace
        .iter()
        .filter_map(|e| e.value.map(|v| (v, e.cc, e.cr)))
        .min_by(|&a, &b| rank(a, b))
        .ok_or(OptimizeError::NoFeasiblePoint)?;

    let mut best = (grid_value, grid_cc, grid_cr);
    let refinement = Refinement::new(space, (grid_cc, grid_cr));
    refinement.run(|cc, cr| {
        let value = evaluate(cc, cr);
        trace.push(TraceEntry {
            cc,
            cr,
            value,
            stage: Stage::Refine,
        });
        if let Some(v) = value {
            if rank((v, cc, cr), best) == Ordering::Less {
                best = (v, cc, cr);
            }
        }
        value
    });

    let (best_value, cc, cr) = best;
    Ok(OptimizationReport {
        best_point: (cc, cr),
        best_value,
        best_grid_value: grid_value,
        derived_cell: design.cell(cc, cr)?,
        n_evaluations: trace.len(),
        trace,
    })
}

/// Bounded Nelder-Mead over whichever of the two axes is free.
struct Refinement {
    free: Vec<usize>,
    start: [f64; 2],
    steps: [f64; 2],
    lower: [f64; 2],
    upper: [f64; 2],
}

impl Refinement {
    fn new(space: &SearchSpace, start: (f64, f64)) -> Self {
        let bounds = [
            (space.cc_bounds.0 / CC_UNIT, space.cc_bounds.1 / CC_UNIT),
            (space.cr_bounds.0 / CR_UNIT, space.cr_bounds.1 / CR_UNIT),
        ];
        let counts = [space.coarse_grid.0, space.coarse_grid.1];
        let mut steps = [0.0; 2];
        let mut free = Vec::new();
        for axis in 0..2 {
            let (lo, hi) = bounds[axis];
            if hi > lo {
                free.push(axis);
                let spacing = if counts[axis] > 1 {
                    (hi - lo) / (counts[axis] - 1) as f64
                } else {
                    0.1 * (hi - lo)
                };
                steps[axis] = 0.5 * spacing;
            }
        }
        Self {
            free,
            start: [start.0 / CC_UNIT, start.1 / CR_UNIT],
            steps,
            lower: [bounds[0].0, bounds[1].0],
            upper: [bounds[0].1, bounds[1].1],
        }
    }

    fn clip(&self, mut x: [f64; 2]) -> [f64; 2] {
        for axis in 0..2 {
            x[axis] = x[axis].clamp(self.lower[axis], self.upper[axis]);
        }
        x
    }

    fn run(&self, mut objective: impl FnMut(f64, f64) -> Option<f64>) {
        if self.free.is_empty() {
            return;
        }
        let mut evaluations = 0usize;
        // minimize the negated objective; undefined points rank last
        let mut cost = |x: [f64; 2], evaluations: &mut usize| -> f64 {
            *evaluations += 1;
            objective(x[0] * CC_UNIT, x[1] * CR_UNIT).map_or(f64::INFINITY, |v| -v)
        };

        let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(self.free.len() + 1);
        let origin = self.clip(self.start);
        simplex.push((origin, f64::NAN));
        for &axis in &self.free {
            let mut vertex = origin;
            vertex[axis] += self.steps[axis];
            if vertex[axis] > self.upper[axis] {
                vertex[axis] = origin[axis] - self.steps[axis];
            }
            simplex.push((self.clip(vertex), f64::NAN));
        }
        // the origin was already scored on the grid; re-scoring keeps the
        // simplex self-contained
        for vertex in simplex.iter_mut() {
            vertex.1 = cost(vertex.0, &mut evaluations);
        }

        let order = |a: &([f64; 2], f64), b: &([f64; 2], f64)| {
            a.1.total_cmp(&b.1)
                .then(a.0[0].total_cmp(&b.0[0]))
                .then(a.0[1].total_cmp(&b.0[1]))
        };

        let n = self.free.len();
        while evaluations < MAX_REFINE_EVALUATIONS {
            simplex.sort_by(order);
            let converged = (0..2).all(|axis| {
                let (lo, hi) = simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, v| {
                    (acc.0.min(v.0[axis]), acc.1.max(v.0[axis]))
                });
                hi - lo < SIMPLEX_TOLERANCE
            });
            if converged {
                break;
            }

            let mut centroid = [0.0; 2];
            for vertex in &simplex[..n] {
                for axis in 0..2 {
                    centroid[axis] += vertex.0[axis] / n as f64;
                }
            }
            let worst = simplex[n];
            let along = |t: f64| {
                let mut x = [0.0; 2];
                for axis in 0..2 {
                    x[axis] = centroid[axis] + t * (worst.0[axis] - centroid[axis]);
                }
                self.clip(x)
            };

            let reflected = along(-1.0);
            let f_reflected = cost(reflected, &mut evaluations);
            if f_reflected < simplex[0].1 {
                let expanded = along(-2.0);
                let f_expanded = cost(expanded, &mut evaluations);
                simplex[n] = if f_expanded < f_reflected {
                    (expanded, f_expanded)
                } else {
                    (reflected, f_reflected)
                };
            } else if f_reflected < simplex[n - 1].1 {
                simplex[n] = (reflected, f_reflected);
            } else {
                let contracted = if f_reflected < worst.1 {
                    along(-0.5)
                } else {
                    along(0.5)
                };
                let f_contracted = cost(contracted, &mut evaluations);
                if f_contracted < worst.1.min(f_reflected) {
                    simplex[n] = (contracted, f_contracted);
                } else {
                    let best = simplex[0].0;
                    for vertex in simplex.iter_mut().skip(1) {
                        let mut x = [0.0; 2];
                        for axis in 0..2 {
                            x[axis] = best[axis] + 0.5 * (vertex.0[axis] - best[axis]);
                        }
                        let x = self.clip(x);
                        *vertex = (x, cost(x, &mut evaluations));
                    }
                }
            }
        }
    }
}

/// One non-dominated coarse-grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    pub cc: f64,
    pub cr: f64,
    pub values: (f64, f64),
}

/// Coarse-grid cells not dominated under joint maximization of both
/// objectives, in grid order.
pub fn pareto_scan(
    design: &Design,
    objectives: (&Objective, &Objective),
    space: &SearchSpace,
) -> Result<Vec<ParetoPoint>, OptimizeError> {
    let candidates: Vec<ParetoPoint> = space
        .grid_points()
        .par_iter()
        .filter_map(|&(cc, cr)| {
            let a = evaluate_objective(design, objectives.0, cc, cr).ok()?;
            let b = evaluate_objective(design, objectives.1, cc, cr).ok()?;
            Some(ParetoPoint {
                cc,
                cr,
                values: (a, b),
            })
        })
        .collect();
    if candidates.is_empty() {
        return Err(OptimizeError::NoFeasiblePoint);
    }
    Ok(non_dominated(&candidates))
}

pub(crate) fn non_dominated(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i].values, points[j].values);
        b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1))
    });

    let mut keep = vec![false; points.len()];
    // best second value among points with a strictly larger first value
    let mut best_second = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let first = points[order[start]].values.0;
        let end = order[start..]
            .iter()
            .position(|&i| points[i].values.0 != first)
            .map_or(order.len(), |offset| start + offset);
        let group_max = points[order[start]].values.1;
        if group_max > best_second {
            for &i in &order[start..end] {
                keep[i] = points[i].values.1 == group_max;
            }
        }
        best_second = best_second.max(group_max);
        start = end;
    }

    points
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}
