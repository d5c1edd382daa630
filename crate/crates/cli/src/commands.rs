//! The `simulate`, `fit-equilibrium` and `classify` commands.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use spinkin::conservation::{
    classify_vop, classify_with_gauge, conserved_functionals, drift_report, evaluate_conserved,
    independent_count, PatternResiduals,
};
use spinkin::equilibrium::{chemical_potentials, fermi_dirac, fit_equilibrium, FitOptions, SpinShifts};
use spinkin::grid::{fmt17, write_snapshot, ClampReport};
use spinkin::initial::{benchmark_state, build_state};
use spinkin::integrator::run;
use spinkin::{
    Diagnostics, EnergyGrid, FitReport, Model, MomentWeights, Species, StateSpec, StructureClass, Trajectory,
    WignerField,
};

use crate::config::RunConfig;
use crate::error::CliError;

/// Column order of `trajectory.csv` ahead of the class-specific moments.
pub const LEADING_COLUMNS: [&str; 3] = ["t", "S", "sigma"];
/// Last column of `trajectory.csv`.
pub const TRAILING_COLUMN: &str = "L1";

/// Resolved class: the one used for moments and fits, and the one the
/// classifier found.
pub struct Classified {
    pub class: StructureClass,
    pub detected: StructureClass,
    pub residuals: PatternResiduals,
}

pub fn classify(cfg: &RunConfig, model: &Model) -> Result<Classified, CliError> {
    let tol = cfg.fit.pattern_tol;
    let (detected, residuals) = match cfg.gauge()? {
        Some(g) => classify_with_gauge(&model.vop, &g, tol)?,
        None => classify_vop(&model.vop, tol)?,
    };
    let class = match cfg.forced_class()? {
        Some(kind) => StructureClass {
            kind,
            gauge: detected.gauge,
        },
        None => detected,
    };
    Ok(Classified {
        class,
        detected,
        residuals,
    })
}

fn initial_state(spec: &StateSpec, grid: EnergyGrid) -> Result<(WignerField, ClampReport), CliError> {
    Ok(match spec {
        StateSpec::Benchmark => benchmark_state(grid)?,
        _ => (build_state(spec, grid)?, ClampReport::default()),
    })
}

/// A fit plus its check against the moments of the detected class.
pub struct CheckedFit {
    pub report: FitReport,
    pub grid: EnergyGrid,
    /// `(name, |achieved − target| / max |target|)` over the detected class.
    pub mismatch: Vec<(&'static str, f64)>,
}

impl CheckedFit {
    pub fn worst(&self) -> (&'static str, f64) {
        self.mismatch
            .iter()
            .copied()
            .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a })
    }
}

fn fit_checked(w: &WignerField, cls: &Classified, model: &Model) -> Result<CheckedFit, CliError> {
    let report = fit_equilibrium(w, &cls.class, &model.masses, &FitOptions::default())?;
    let grid = *w.grid();
    let weights = MomentWeights::new(&grid, &model.masses);
    let target = evaluate_conserved(w, &cls.detected, &weights);
    let achieved = evaluate_conserved(&fermi_dirac(&report.params, grid)?, &cls.detected, &weights);
    let scale = target.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mismatch = target
        .names()
        .into_iter()
        .zip(achieved.values.iter().zip(&target.values))
        .map(|(n, (a, t))| (n, (a - t).abs() / scale))
        .collect();
    Ok(CheckedFit { report, grid, mismatch })
}

fn require_consistent(fit: &CheckedFit, tol: f64) -> Result<(), CliError> {
    let (name, worst) = fit.worst();
    if worst > tol {
        return Err(CliError::Fit(format!(
            "fitted state misses conserved moment {name} by {worst:.3e} (relative); the structure class is likely wrong"
        )));
    }
    Ok(())
}

/// Text sink for `key = value` summaries with 17-digit numbers.
#[derive(Default)]
pub struct Summary(String);

impl Summary {
    pub fn section(&mut self, name: &str) {
        if !self.0.is_empty() {
            self.0.push('\n');
        }
        let _ = writeln!(self.0, "[{name}]");
    }

    pub fn num(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.0, "{key} = {}", fmt_num(v));
    }

    pub fn int(&mut self, key: &str, v: usize) {
        let _ = writeln!(self.0, "{key} = {v}");
    }

    pub fn flag(&mut self, key: &str, v: bool) {
        let _ = writeln!(self.0, "{key} = {v}");
    }

    pub fn text(&mut self, key: &str, v: &str) {
        let _ = writeln!(self.0, "{key} = {v:?}");
    }

    pub fn nums(&mut self, key: &str, v: &[f64]) {
        let items: Vec<String> = v.iter().map(|&x| fmt_num(x)).collect();
        let _ = writeln!(self.0, "{key} = [{}]", items.join(", "));
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// 17 significant digits; non-finite values in TOML spelling.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        fmt17(v)
    }
}

fn write_class(s: &mut Summary, cls: &Classified) {
    s.section("class");
    s.text("kind", cls.class.kind.name());
    s.text("detected", cls.detected.kind.name());
    s.text("gauge", if cls.class.gauge.is_some() { "supplied" } else { "none" });
    s.num("identity_residual", cls.residuals.identity);
    s.num("zero_frame_residual", cls.residuals.zero_frame);
    s.num("diagonal_residual", cls.residuals.diagonal);
    s.int("independent_moments", independent_count(cls.class.kind));
    let names: Vec<String> = conserved_functionals(cls.class.kind)
        .iter()
        .map(|f| format!("{:?}", f.name()))
        .collect();
    let _ = writeln!(s.0, "conserved = [{}]", names.join(", "));
}

fn write_fit(s: &mut Summary, section: &str, fit: &CheckedFit, cls: &Classified) {
    let p = &fit.report.params;
    s.section(section);
    s.int("grid_n", fit.grid.n());
    s.num("grid_h", fit.grid.h());
    s.num("beta", p.beta);
    s.nums("nu", &Species::ALL.map(|sp| p.nu(sp)));
    match p.spin_shifts {
        SpinShifts::None => {}
        SpinShifts::Common(c) => s.num("spin_shift", c),
        SpinShifts::Paired { ac, bd } => s.nums("spin_shifts_ac_bd", &[ac, bd]),
    }
    if let Ok(mu) = chemical_potentials(cls.class.kind, p) {
        for sp in Species::ALL {
            s.nums(&format!("mu_{sp}"), &mu[sp.index()]);
        }
    }
    s.num("residual", fit.report.residual);
    s.int("iterations", fit.report.iterations);
    for (f, r) in fit.report.residuals() {
        s.num(&format!("residual_{}", f.name()), r);
    }
    for (name, m) in &fit.mismatch {
        s.num(&format!("mismatch_{name}"), *m);
    }
}

/// `classify`: prints the class report.
pub fn cmd_classify(cfg: &RunConfig) -> Result<String, CliError> {
    let model = cfg.model()?;
    let cls = classify(cfg, &model)?;
    let mut s = Summary::default();
    write_class(&mut s, &cls);
    Ok(s.0)
}

/// Same-grid fit and, for analytic initial states, the fit on the refined grid.
struct Fits {
    same_grid: CheckedFit,
    refined: Option<CheckedFit>,
}

fn fits(cfg: &RunConfig, model: &Model, spec: &StateSpec, w0: &WignerField, cls: &Classified) -> Result<Fits, CliError> {
    let same_grid = fit_checked(w0, cls, model)?;
    let refined = if cfg.fit.refine > 1 && !matches!(spec, StateSpec::Custom(_)) {
        let (w, _) = initial_state(spec, w0.grid().refined(cfg.fit.refine))?;
        Some(fit_checked(&w, cls, model)?)
    } else {
        None
    };
    Ok(Fits { same_grid, refined })
}

/// `fit-equilibrium`: prints fitted parameters and per-moment residuals.
pub fn cmd_fit(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let spec = cfg.state_spec()?;
    let (w0, _) = initial_state(&spec, cfg.grid()?)?;
    let cls = classify(cfg, &model)?;
    let f = fits(cfg, &model, &spec, &w0, &cls)?;
    let mut s = Summary::default();
    write_class(&mut s, &cls);
    if let Some(r) = &f.refined {
        write_fit(&mut s, "fit", r, &cls);
    }
    write_fit(&mut s, if f.refined.is_some() { "fit_same_grid" } else { "fit" }, &f.same_grid, &cls);
    for fit in [Some(&f.same_grid), f.refined.as_ref()].into_iter().flatten() {
        if let Err(e) = require_consistent(fit, cfg.fit.moment_tol) {
            print!("{}", s.0);
            return Err(e);
        }
    }
    Ok(s.0)
}

fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let names = traj.samples.first().map(|s| s.conserved.names()).unwrap_or_default();
    let header: Vec<&str> = LEADING_COLUMNS.iter().copied().chain(names).chain([TRAILING_COLUMN]).collect();
    writeln!(out, "{}", header.join(","))?;
    for smp in &traj.samples {
        let mut row = vec![fmt17(smp.t), fmt17(smp.entropy), smp.sigma.map(fmt17).unwrap_or_default()];
        row.extend(smp.conserved.values.iter().map(|&v| fmt17(v)));
        row.push(smp.l1.map(fmt17).unwrap_or_default());
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// `simulate`: runs the configured campaign and writes its artifacts to
/// `out`: `trajectory.csv`, `snapshots/step_<k>.csv`, `summary.toml` and the parsed `config.toml`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let spec = cfg.state_spec()?;
    let step = cfg.step_config()?;
    let (w0, clamp) = initial_state(&spec, grid)?;
    let cls = classify(cfg, &model)?;
    let f = fits(cfg, &model, &spec, &w0, &cls)?;
    for fit in [Some(&f.same_grid), f.refined.as_ref()].into_iter().flatten() {
        require_consistent(fit, cfg.fit.moment_tol)?;
    }
    let w_eq = fermi_dirac(&f.same_grid.report.params, grid)?;
    let mut diag = Diagnostics::new(cls.class);
    diag.reference = Some(w_eq);
    diag.record_sigma = cfg.output.record_sigma;
    diag.snapshot_every = cfg.output.snapshot_every;
    let traj = run(&w0, &step, &model, &diag)?;

    fs::create_dir_all(out)?;
    write_trajectory(&out.join("trajectory.csv"), &traj)?;
    if !traj.snapshots.is_empty() {
        let dir = out.join("snapshots");
        fs::create_dir_all(&dir)?;
        for (t, w) in &traj.snapshots {
            let k = (t / step.dt).round() as usize;
            let file = fs::File::create(dir.join(format!("step_{k:09}.csv")))?;
            write_snapshot(w, BufWriter::new(file))?;
        }
    }

    let mut s = Summary::default();
    s.section("run");
    s.text("preset", cfg.model.preset.as_deref().unwrap_or("custom"));
    s.text("rates", model.rates.name());
    s.int("grid_n", grid.n());
    s.num("grid_h", grid.h());
    s.num("dt", step.dt);
    s.num("t_end", step.t_end);
    s.int("steps", step.steps());
    s.flag("include_cons", step.include_cons);
    s.int("initial_clamped", clamp.clamped);
    s.num("initial_max_excursion", clamp.max_excursion);
    s.int("clamped", traj.clamped);
    s.int("tolerated", traj.tolerated);
    write_class(&mut s, &cls);
    if let Some(r) = &f.refined {
        write_fit(&mut s, "fit", r, &cls);
    }
    write_fit(&mut s, if f.refined.is_some() { "fit_same_grid" } else { "fit" }, &f.same_grid, &cls);
    let drift = drift_report(&traj);
    s.section("drift");
    for (func, d) in drift.functionals.iter().zip(&drift.drifts) {
        s.num(func.name(), *d);
    }
    s.num("max", drift.max());
    let (first, last) = (&traj.samples[0], traj.samples.last().expect("initial sample"));
    s.section("entropy");
    s.num("initial", first.entropy);
    s.num("final", last.entropy);
    if let (Some(a), Some(b)) = (first.l1, last.l1) {
        s.section("distance");
        s.num("l1_initial", a);
        s.num("l1_final", b);
    }
    fs::write(out.join("summary.toml"), s.as_str())?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    Ok(s.0)
}
