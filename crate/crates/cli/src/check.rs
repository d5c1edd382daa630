//! `check`: property suite on random physical fields of a micro-grid.

use rand::{rngs::StdRng, Rng, SeedableRng};

use spinkin::collision::{cons_operator, diss_integrand, heff_integrand, Quad};
use spinkin::conservation::{conserved_functionals, evaluate_functional};
use spinkin::entropy::{entropy_production, entropy_production_from_rate};
use spinkin::equilibrium::fermi_dirac;
use spinkin::reference::{cons_operator_bruteforce, diss_operator_bruteforce, MatrixForm};
use spinkin::scalar::Cplx;
use spinkin::{
    CollisionKernel, EnergyGrid, EquilibriumParams, Model, MomentWeights, Species, SpinBlock, WignerField,
};

use crate::commands::classify;
use crate::config::RunConfig;
use crate::error::CliError;

/// Oracle agreement, relative to the oracle's largest entry.
pub const ORACLE_TOL: f64 = 1e-12;
/// Moment rates and Hermiticity defects, relative to their natural scale.
pub const RATE_TOL: f64 = 1e-12;
/// Closed-form versus rate-route entropy production.
pub const SIGMA_TOL: f64 = 1e-10;
/// Entropy production at equilibrium.
pub const EQUILIBRIUM_SIGMA_TOL: f64 = 1e-12;

/// One invariant of the suite with its worst observed defect.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub tol: f64,
}

/// Block with eigenvalues inside `(0.05, 0.95)`.
pub fn random_block(rng: &mut StdRng) -> SpinBlock {
    let a: f64 = rng.gen_range(0.05..0.95);
    let d: f64 = rng.gen_range(0.05..0.95);
    let r = 0.9 * (a.min(1.0 - a) * d.min(1.0 - d)).sqrt();
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let m: f64 = rng.gen_range(0.0..1.0);
    SpinBlock::hermitian(a, d, Cplx::from_polar(m * r, phi))
}

pub fn random_field(rng: &mut StdRng, grid: EnergyGrid) -> WignerField {
    WignerField::from_fn(grid, |_, _| random_block(rng))
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

struct Tracker {
    name: &'static str,
    tol: f64,
    worst: f64,
}

impl Tracker {
    fn new(name: &'static str, tol: f64) -> Self {
        Tracker { name, tol, worst: 0.0 }
    }

    fn see(&mut self, defect: f64) {
        // NaN counts as a failure
        if !(defect <= self.worst) {
            self.worst = if defect.is_nan() { f64::INFINITY } else { defect };
        }
    }

    fn finish(self) -> Outcome {
        Outcome {
            name: self.name,
            passed: self.worst <= self.tol,
            worst: self.worst,
            tol: self.tol,
        }
    }
}

/// Runs the suite with `model` on `grid` using `weights` for the moments.
pub fn run_suite(
    model: &Model,
    class: &spinkin::StructureClass,
    grid: EnergyGrid,
    weights: &MomentWeights,
    samples: usize,
    seed: u64,
) -> Vec<Outcome> {
    let mut rng = StdRng::seed_from_u64(seed);
    let kernel = CollisionKernel::new(model, grid);
    let mf = MatrixForm::new(&model.interactions);
    let functionals = conserved_functionals(class.kind);
    let moment_scale: f64 = Species::ALL
        .iter()
        .flat_map(|&s| weights.of(s).iter().enumerate().map(move |(j, w)| w * (1.0 + grid.eps(j))))
        .sum();

    let mut forms = Tracker::new("integrand_forms", ORACLE_TOL);
    let mut diss = Tracker::new("diss_oracle", ORACLE_TOL);
    let mut cons = Tracker::new("cons_oracle", ORACLE_TOL);
    let mut herm = Tracker::new("rhs_hermitian", RATE_TOL);
    let mut moments = Tracker::new("rhs_conservation", RATE_TOL);
    let mut positive = Tracker::new("entropy_production_nonnegative", 0.0);
    let mut dual = Tracker::new("entropy_production_dual", SIGMA_TOL);
    for _ in 0..samples {
        let q: Quad<f64> = [0; 4].map(|_| random_block(&mut rng));
        let (a, b) = (diss_integrand(&model.vop, &q), mf.diss(&q));
        let (h, hm) = (heff_integrand(&model.vop, &q), mf.heff(&q));
        for k in 0..4 {
            forms.see(rel((a[k] - b[k]).max_abs(), b[k].max_abs().max(1.0)));
            // the matrix form carries the opposite overall sign
            forms.see(rel((h[k] + hm[k]).max_abs(), hm[k].max_abs().max(1.0)));
        }

        let w = random_field(&mut rng, grid);
        let fast_d = kernel.diss(&w);
        let slow_d = diss_operator_bruteforce(&w, model);
        diss.see(rel(fast_d.zip_map(&slow_d, |x, y| *x - *y).max_abs(), slow_d.max_abs()));
        let fast_c = cons_operator(&w, model);
        let slow_c = cons_operator_bruteforce(&w, model);
        cons.see(rel(fast_c.zip_map(&slow_c, |x, y| *x - *y).max_abs(), slow_c.max_abs()));

        let total = fast_d.zip_map(&fast_c, |x, y| *x + *y);
        let c_max = total.max_abs();
        herm.see(rel(total.max_hermiticity_defect(), c_max));
        let canon = class.canonical_field(&total);
        for &f in &functionals {
            moments.see(rel(evaluate_functional(f, &canon, weights).abs(), c_max * moment_scale));
        }

        let sigma = entropy_production(&w, model);
        positive.see(-sigma);
        let sigma_rate = entropy_production_from_rate(&w, &fast_d, weights);
        dual.see(rel((sigma - sigma_rate).abs(), sigma.abs()));
    }

    let mut eq = Tracker::new("equilibrium_entropy_production", EQUILIBRIUM_SIGMA_TOL);
    for _ in 0..samples.clamp(1, 10) {
        let mut p = EquilibriumParams::simple(
            rng.gen_range(0.3..3.0),
            [0; 3].map(|_| rng.gen_range(-1.0..1.0)),
        );
        p.basis = class.gauge_or_identity().u;
        let w = fermi_dirac(&p, grid).expect("positive beta");
        eq.see(entropy_production(&w, model).abs());
    }

    vec![
        forms.finish(),
        diss.finish(),
        cons.finish(),
        herm.finish(),
        moments.finish(),
        positive.finish(),
        dual.finish(),
        eq.finish(),
    ]
}

/// Formats outcomes one per line.
pub fn format_outcomes(outcomes: &[Outcome]) -> String {
    outcomes
        .iter()
        .map(|o| {
            format!(
                "{} {} worst {:.3e} tol {:.0e}\n",
                if o.passed { "PASS" } else { "FAIL" },
                o.name,
                o.worst,
                o.tol
            )
        })
        .collect()
}

pub fn cmd_check(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let cls = classify(cfg, &model)?;
    let c = &cfg.check;
    let grid = EnergyGrid::new_unchecked_size(c.n, c.h)?;
    let weights = match c.weights.as_str() {
        "trapezoid" => MomentWeights::trapezoid(&grid, &model.masses),
        _ => MomentWeights::new(&grid, &model.masses),
    };
    let outcomes = run_suite(&model, &cls.class, grid, &weights, c.samples, c.seed);
    let report = format_outcomes(&outcomes);
    if outcomes.iter().all(|o| o.passed) {
        Ok(report)
    } else {
        print!("{report}");
        let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
        Err(CliError::Invariant(format!("failed: {}", failed.join(", "))))
    }
}
