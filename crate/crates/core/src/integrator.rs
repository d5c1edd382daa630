//! Explicit midpoint time stepping with physicality guards.

use crate::collision::{CollisionKernel, RhsOptions};
use crate::conservation::{evaluate_conserved, ConservedVector, StructureClass};
use crate::entropy::{entropy, entropy_production};
use crate::error::{Error, Result};
use crate::grid::{l1_distance, ClampReport, MomentWeights, WignerField, CLAMP_TOL, REJECT_TOL};
use crate::model::Model;
use crate::scalar::Real;
use crate::spinalg::hermitian_part;

/// Allowed entropy decrease per step.
pub const ENTROPY_TOL: f64 = 1e-12;

/// Fixed-step integration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Diagnostics are recorded every `stride` steps and at the end.
    pub stride: usize,
    pub include_cons: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: 1e-3,
            t_end: 1.0,
            stride: 10,
            include_cons: true,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end = {} must be non-negative", self.t_end)));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::Config(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps, `t_end / dt` rounded to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn rhs_options(&self) -> RhsOptions {
        RhsOptions {
            include_cons: self.include_cons,
        }
    }
}

fn hermitize<T: Real>(w: &mut WignerField<T>) {
    for b in w.blocks_mut() {
        *b = hermitian_part(b);
    }
}

/// One explicit midpoint step at time `t` (used only for error reports).
///
/// Eigenvalue excursions up to `1e-9` are clamped after the full step;
/// excursions beyond `1e-6` reject the step.
pub fn midpoint_step<T: Real>(
    w: &WignerField<T>,
    dt: T,
    kernel: &CollisionKernel<T>,
    opts: RhsOptions,
    t: f64,
) -> Result<(WignerField<T>, ClampReport)> {
    let half = dt * T::lit(0.5);
    let mut mid = w.axpy(half, &kernel.rhs(w, opts).total);
    hermitize(&mut mid);
    let mut next = w.axpy(dt, &kernel.rhs(&mid, opts).total);
    hermitize(&mut next);
    let (exc, species, shell, lam) = next.worst_eigenvalue();
    if exc.as_f64() > REJECT_TOL {
        return Err(Error::GuardRejected {
            time: t + dt.as_f64(),
            species,
            shell,
            eigenvalue: lam.as_f64(),
        });
    }
    let report = next.clamp_physical(CLAMP_TOL)?;
    Ok((next, report))
}

/// Diagnostics at one sample time.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T: Real> {
    pub t: f64,
    pub entropy: T,
    /// Entropy production, if requested.
    pub sigma: Option<T>,
    pub conserved: ConservedVector<T>,
    /// `L¹` distance to the reference field, if one was given.
    pub l1: Option<T>,
}

/// Recorded run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Real> {
    pub samples: Vec<Sample<T>>,
    /// Fields at selected sample times.
    pub snapshots: Vec<(f64, WignerField<T>)>,
    pub final_field: WignerField<T>,
    /// Entropy after every step, starting with the initial value.
    pub entropy_per_step: Vec<T>,
    /// Blocks clamped and blocks tolerated outside `[0, 1]` over the run.
    pub clamped: usize,
    pub tolerated: usize,
}

/// What to record besides entropy and the conserved moments.
#[derive(Clone, Debug)]
pub struct Diagnostics<T: Real> {
    pub class: StructureClass<T>,
    /// Distance reference, typically the fitted equilibrium.
    pub reference: Option<WignerField<T>>,
    pub record_sigma: bool,
    /// Keep the field at every `k`-th sample, including `t = 0`; 0 keeps none.
    pub snapshot_every: usize,
    /// Check `S(t_{k+1}) ≥ S(t_k) − 1e-12` on every step.
    pub check_entropy: bool,
}

impl<T: Real> Diagnostics<T> {
    pub fn new(class: StructureClass<T>) -> Self {
        Diagnostics {
            class,
            reference: None,
            record_sigma: false,
            snapshot_every: 0,
            check_entropy: true,
        }
    }
}

fn sample<T: Real>(
    t: f64,
    w: &WignerField<T>,
    s: T,
    model: &Model<T>,
    weights: &MomentWeights<T>,
    diag: &Diagnostics<T>,
) -> Result<Sample<T>> {
    Ok(Sample {
        t,
        entropy: s,
        sigma: diag.record_sigma.then(|| entropy_production(w, model)),
        conserved: evaluate_conserved(w, &diag.class, weights),
        l1: diag.reference.as_ref().map(|r| l1_distance(w, r, weights)).transpose()?,
    })
}

/// Integrates from `w0` to `t_end`, recording diagnostics every stride.
///
/// Sample times are `k · dt`. The step count is `t_end / dt` rounded.
pub fn run<T: Real>(
    w0: &WignerField<T>,
    cfg: &StepConfig,
    model: &Model<T>,
    diag: &Diagnostics<T>,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    w0.validate_physical()?;
    let grid = *w0.grid();
    let kernel = CollisionKernel::new(model, grid);
    let weights = MomentWeights::new(&grid, &model.masses);
    let steps = cfg.steps();
    let dt = T::lit(cfg.dt);
    let mut w = w0.clone();
    let mut s = entropy(&w, &weights);
    let mut traj = Trajectory {
        samples: vec![sample(0.0, &w, s, model, &weights, diag)?],
        snapshots: Vec::new(),
        final_field: w0.clone(),
        entropy_per_step: vec![s],
        clamped: 0,
        tolerated: 0,
    };
    if diag.snapshot_every > 0 {
        traj.snapshots.push((0.0, w.clone()));
    }
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let (next, report) = midpoint_step(&w, dt, &kernel, cfg.rhs_options(), t)?;
        traj.clamped += report.clamped;
        traj.tolerated += report.tolerated;
        w = next;
        let s_next = entropy(&w, &weights);
        let t_next = (k + 1) as f64 * cfg.dt;
        if diag.check_entropy && (s_next - s).as_f64() < -ENTROPY_TOL {
            return Err(Error::EntropyDecrease {
                time: t_next,
                decrease: (s - s_next).as_f64(),
            });
        }
        s = s_next;
        traj.entropy_per_step.push(s);
        if (k + 1) % cfg.stride == 0 || k + 1 == steps {
            traj.samples.push(sample(t_next, &w, s, model, &weights, diag)?);
            if diag.snapshot_every > 0 && (traj.samples.len() - 1) % diag.snapshot_every == 0 {
                traj.snapshots.push((t_next, w.clone()));
            }
        }
    }
    traj.final_field = w;
    Ok(traj)
}
