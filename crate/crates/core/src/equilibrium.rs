//! Fermi-Dirac fields and the fit of their parameters to a state's
//! conserved moments.

use nalgebra::{DMatrix, DVector};
use rand::{rngs::StdRng, Rng, SeedableRng};

use crate::collision::{CollisionKernel, RhsOptions};
use crate::conservation::{evaluate_functional, ConservedVector, Functional, StructureClass, StructureKind};
use crate::error::{Error, Result};
use crate::grid::{total_density, EnergyGrid, MomentWeights, WignerField};
use crate::model::{GaugeRotation, Masses, Model, Species};
use crate::scalar::Real;
use crate::spinalg::{eig_hermitian_unchecked, SpinBlock};

/// Class-dependent spin dependence of the chemical potentials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpinShifts<T: Real> {
    None,
    /// `μ^α_σ = ν^α + c s_σ` for every species.
    Common(T),
    /// `μ^α_σ = ν^α + c^α s_σ` with `cᵃ = cᶜ = ac`, `cᵇ = cᵈ = bd`.
    Paired { ac: T, bd: T },
}

impl<T: Real> SpinShifts<T> {
    fn shift(&self, s: Species) -> T {
        match *self {
            SpinShifts::None => T::zero(),
            SpinShifts::Common(c) => c,
            SpinShifts::Paired { ac, bd } => match s {
                Species::A | Species::C => ac,
                Species::B | Species::D => bd,
            },
        }
    }
}

/// Parameters of a Fermi-Dirac field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumParams<T: Real> {
    pub beta: T,
    /// `(νᵃ, νᵇ, νᶜ)`; `νᵈ = νᵃ − νᵇ + νᶜ` is derived.
    pub nu_abc: [T; 3],
    pub spin_shifts: SpinShifts<T>,
    /// Per-species unitary whose columns are the modes `|α;↑⟩`, `|α;↓⟩`.
    pub basis: [SpinBlock<T>; 4],
}

impl<T: Real> EquilibriumParams<T> {
    /// Spin-independent potentials in the coordinate basis.
    pub fn simple(beta: T, nu_abc: [T; 3]) -> Self {
        EquilibriumParams {
            beta,
            nu_abc,
            spin_shifts: SpinShifts::None,
            basis: [SpinBlock::identity(); 4],
        }
    }

    pub fn nu(&self, s: Species) -> T {
        let [a, b, c] = self.nu_abc;
        match s {
            Species::A => a,
            Species::B => b,
            Species::C => c,
            Species::D => a - b + c,
        }
    }

    /// `μ^α_σ` with `σ = 0` for the first basis mode.
    pub fn mu(&self, s: Species, sigma: usize) -> T {
        let sign = if sigma == 0 { T::one() } else { -T::one() };
        self.nu(s) + sign * self.spin_shifts.shift(s)
    }

    pub fn cast<U: Real>(&self) -> EquilibriumParams<U> {
        let c = |x: T| U::lit(x.as_f64());
        EquilibriumParams {
            beta: c(self.beta),
            nu_abc: self.nu_abc.map(c),
            spin_shifts: match self.spin_shifts {
                SpinShifts::None => SpinShifts::None,
                SpinShifts::Common(x) => SpinShifts::Common(c(x)),
                SpinShifts::Paired { ac, bd } => SpinShifts::Paired { ac: c(ac), bd: c(bd) },
            },
            basis: self.basis.map(|b| b.cast()),
        }
    }
}

/// `(e^x + 1)⁻¹` without overflow.
pub fn fermi<T: Real>(x: T) -> T {
    if x >= T::zero() {
        let e = (-x).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + x.exp())
    }
}

/// `W^α(ε_j) = Σ_σ f(β(ε_j − μ^α_σ)) |α;σ⟩⟨α;σ|`.
pub fn fermi_dirac<T: Real>(params: &EquilibriumParams<T>, grid: EnergyGrid<T>) -> Result<WignerField<T>> {
    if !(params.beta > T::zero()) || !params.beta.is_finite() {
        return Err(Error::Domain(format!("inverse temperature {} must be positive", params.beta)));
    }
    let mu = Species::ALL.map(|s| [params.mu(s, 0), params.mu(s, 1)]);
    Ok(WignerField::from_fn(grid, |s, j| {
        let e = grid.eps(j);
        let [m0, m1] = mu[s.index()];
        let d = SpinBlock::diag(fermi(params.beta * (e - m0)), fermi(params.beta * (e - m1)));
        let u = params.basis[s.index()];
        if u == SpinBlock::identity() {
            d
        } else {
            d.conjugate_by(&u)
        }
    }))
}

/// `μ^α_σ` per species (rows) and basis mode (columns), checked against
/// `μᵃ_{σ₁} − μᵇ_{σ₂} + μᶜ_{σ₃} − μᵈ_{σ₄} = 0` on every channel the class
/// allows to be coupled, `⟨σ₁σ₃|𝒱|σ₂σ₄⟩ ≠ 0`.
pub fn chemical_potentials<T: Real>(kind: StructureKind, params: &EquilibriumParams<T>) -> Result<[[T; 2]; 4]> {
    let mu = Species::ALL.map(|s| [params.mu(s, 0), params.mu(s, 1)]);
    let scale = mu.iter().flatten().fold(1.0f64, |m, x| m.max(x.as_f64().abs()));
    for row in 0..4 {
        for col in 0..4 {
            if !kind.allows(row, col) {
                continue;
            }
            let (s1, s3) = (row / 2, row % 2);
            let (s2, s4) = (col / 2, col % 2);
            let f = mu[0][s1] - mu[1][s2] + mu[2][s3] - mu[3][s4];
            if f.as_f64().abs() > 1e-12 * scale {
                return Err(Error::InconsistentParams(format!(
                    "channel (σ₁σ₃, σ₂σ₄) = ({row}, {col}) of class {kind} gives μ sum {:.3e}",
                    f.as_f64()
                )));
            }
        }
    }
    Ok(mu)
}

/// Moments matched by the fit, evaluated in the fit frame. The identity
/// family uses the frame where the total density is diagonal, so its two
/// spin entries are the eigenvalues of ρ.
fn fit_functionals(kind: StructureKind) -> Vec<Functional> {
    use Functional::*;
    match kind {
        StructureKind::General => vec![TotalTrace, PairAB, PairAD, Energy],
        StructureKind::DiagonalPattern | StructureKind::IdentityFamily => {
            vec![SpinUp, SpinDown, PairAB, PairAD, Energy]
        }
        StructureKind::ZeroOuterFrame => vec![SpinUp, SpinDown, PairAB, PairAD, Energy, SigmaZAC],
    }
}

/// Unknowns `(log β, νᵃ, νᵇ, νᶜ, shifts…)` to parameters in the fit frame.
fn unpack(kind: StructureKind, x: &[f64]) -> EquilibriumParams<f64> {
    let mut p = EquilibriumParams::simple(x[0].exp(), [x[1], x[2], x[3]]);
    p.spin_shifts = match kind {
        StructureKind::General => SpinShifts::None,
        StructureKind::DiagonalPattern | StructureKind::IdentityFamily => SpinShifts::Common(x[4]),
        StructureKind::ZeroOuterFrame => SpinShifts::Paired { ac: x[4], bd: x[5] },
    };
    p
}

/// Options of [`fit_equilibrium`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Converged when every residual is below `tol` times the largest target.
    pub tol: f64,
    /// Relative central-difference step of the Jacobian.
    pub fd_step: f64,
    /// Run every restart and collect distinct solutions instead of stopping
    /// at the first converged one.
    pub explore: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            restarts: 10,
            seed: 0x5eed,
            tol: 1e-10,
            fd_step: 1e-6,
            explore: false,
        }
    }
}

/// Outcome of [`fit_equilibrium`].
#[derive(Clone, Debug, PartialEq)]
pub struct FitReport<T: Real> {
    pub params: EquilibriumParams<T>,
    /// Conserved moments of the input state.
    pub target: ConservedVector<T>,
    /// Conserved moments of the fitted Fermi-Dirac field.
    pub achieved: ConservedVector<T>,
    /// Largest matched-moment residual relative to the largest target.
    pub residual: f64,
    pub iterations: usize,
    /// Index of the start that converged (0 is the default guess).
    pub start: usize,
    /// Further distinct solutions found with `explore`.
    pub alternatives: Vec<EquilibriumParams<T>>,
}

impl<T: Real> FitReport<T> {
    /// Per-functional `achieved − target`.
    pub fn residuals(&self) -> Vec<(Functional, T)> {
        self.target
            .functionals
            .iter()
            .zip(self.achieved.values.iter().zip(&self.target.values))
            .map(|(&f, (&a, &t))| (f, a - t))
            .collect()
    }
}

struct Problem {
    kind: StructureKind,
    grid: EnergyGrid<f64>,
    weights: MomentWeights<f64>,
    functionals: Vec<Functional>,
    target: Vec<f64>,
    scale: f64,
}

impl Problem {
    fn moments(&self, x: &[f64]) -> Option<Vec<f64>> {
        let p = unpack(self.kind, x);
        let w = fermi_dirac(&p, self.grid).ok()?;
        let q: Vec<f64> = self.functionals.iter().map(|&f| evaluate_functional(f, &w, &self.weights)).collect();
        q.iter().all(|v| v.is_finite()).then_some(q)
    }

    fn residual(&self, x: &[f64]) -> Option<DVector<f64>> {
        let q = self.moments(x)?;
        Some(DVector::from_iterator(q.len(), q.iter().zip(&self.target).map(|(a, t)| a - t)))
    }

    /// Merit with each component scaled by its own target magnitude.
    fn merit(&self, r: &DVector<f64>) -> f64 {
        r.iter()
            .zip(&self.target)
            .map(|(ri, ti)| {
                let s = ti.abs().max(1e-8 * self.scale);
                (ri / s).powi(2)
            })
            .sum()
    }

    fn converged(&self, r: &DVector<f64>, tol: f64) -> bool {
        r.amax() <= tol * self.scale
    }

    fn jacobian(&self, x: &[f64], step: f64) -> Option<DMatrix<f64>> {
        let m = self.target.len();
        let mut jac = DMatrix::zeros(m, x.len());
        for k in 0..x.len() {
            let dx = step * x[k].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += dx;
            xm[k] -= dx;
            let (qp, qm) = (self.moments(&xp)?, self.moments(&xm)?);
            for i in 0..m {
                jac[(i, k)] = (qp[i] - qm[i]) / (2.0 * dx);
            }
        }
        Some(jac)
    }

    /// Damped Newton from `x`. Returns the final point, its residual and the
    /// iteration count.
    fn newton(&self, mut x: Vec<f64>, opts: &FitOptions) -> (Vec<f64>, f64, usize, bool) {
        let Some(mut r) = self.residual(&x) else {
            return (x, f64::INFINITY, 0, false);
        };
        let mut merit = self.merit(&r);
        for it in 0..opts.max_iterations {
            if self.converged(&r, opts.tol) {
                return (x, r.amax() / self.scale, it, true);
            }
            let Some(jac) = self.jacobian(&x, opts.fd_step) else {
                break;
            };
            let Some(step) = jac.lu().solve(&(-&r)) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
                if let Some(rt) = self.residual(&trial) {
                    let mt = self.merit(&rt);
                    if mt < merit {
                        x = trial;
                        r = rt;
                        merit = mt;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let ok = self.converged(&r, opts.tol);
        (x, r.amax() / self.scale, opts.max_iterations, ok)
    }
}

/// The frame the fit works in: the class gauge, further rotated for the
/// identity family into the eigenbasis of the total density.
fn fit_frame<T: Real>(w: &WignerField<f64>, class: &StructureClass<T>, weights: &MomentWeights<f64>) -> GaugeRotation<f64> {
    let g = class.gauge_or_identity().cast::<f64>();
    if class.kind != StructureKind::IdentityFamily {
        return g;
    }
    let canon = g.inverse().rotate_field(w);
    let v = eig_hermitian_unchecked(&total_density(&canon, weights)).vectors();
    GaugeRotation { u: g.u.map(|u| u * v) }
}

/// Fits `β`, `ν` and the class's spin shifts so that the Fermi-Dirac field
/// on `w0`'s grid reproduces the conserved moments of `w0`.
///
/// The number of unknowns equals the number of independent conserved
/// moments of the class: 4, 5, 5 or 6.
pub fn fit_equilibrium<T: Real>(
    w0: &WignerField<T>,
    class: &StructureClass<T>,
    masses: &Masses<T>,
    opts: &FitOptions,
) -> Result<FitReport<T>> {
    let w = w0.cast::<f64>();
    let grid = *w.grid();
    let weights = MomentWeights::new(&grid, &masses.cast());
    let frame = fit_frame(&w, class, &weights);
    let framed = frame.inverse().rotate_field(&w);
    let functionals = fit_functionals(class.kind);
    let target: Vec<f64> = functionals.iter().map(|&f| evaluate_functional(f, &framed, &weights)).collect();
    let scale = target.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        return Err(Error::FitFailure {
            iterations: 0,
            best_residual: f64::INFINITY,
        });
    }
    let problem = Problem {
        kind: class.kind,
        grid,
        weights,
        functionals,
        target,
        scale,
    };
    let dim = problem.functionals.len();
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut solutions: Vec<(Vec<f64>, f64, usize, usize)> = Vec::new();
    let mut best = f64::INFINITY;
    let mut total_iterations = 0;
    for start in 0..=opts.restarts {
        let x0 = if start == 0 {
            vec![0.0; dim]
        } else {
            let mut x = vec![0.0; dim];
            x[0] = rng.gen_range(0.1f64.ln()..10.0f64.ln());
            x
        };
        let (x, res, iters, ok) = problem.newton(x0, opts);
        total_iterations += iters;
        best = best.min(res);
        if ok {
            let distinct = solutions
                .iter()
                .all(|(y, ..)| y.iter().zip(&x).any(|(a, b)| (a - b).abs() > 1e-6 * a.abs().max(1.0)));
            if distinct {
                solutions.push((x, res, iters, start));
            }
            if !opts.explore {
                break;
            }
        }
    }
    let Some((x, res, iters, start)) = solutions.first().cloned() else {
        return Err(Error::FitFailure {
            iterations: total_iterations,
            best_residual: best,
        });
    };
    let to_params = |x: &[f64]| {
        let mut p = unpack(class.kind, x);
        p.basis = frame.u;
        p.cast::<T>()
    };
    let params = to_params(&x);
    let weights_t = MomentWeights::new(w0.grid(), masses);
    let target = crate::conservation::evaluate_conserved(w0, class, &weights_t);
    let achieved = crate::conservation::evaluate_conserved(&fermi_dirac(&params, *w0.grid())?, class, &weights_t);
    Ok(FitReport {
        params,
        target,
        achieved,
        residual: res,
        iterations: iters,
        start,
        alternatives: solutions.iter().skip(1).map(|(y, ..)| to_params(y)).collect(),
    })
}

/// Largest block entry of the full collision rate at `w_eq`.
pub fn stationarity_residual<T: Real>(w_eq: &WignerField<T>, model: &Model<T>) -> T {
    let kernel = CollisionKernel::new(model, *w_eq.grid());
    kernel.rhs(w_eq, RhsOptions::default()).total.max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conservation::evaluate_conserved;
    use crate::model::Preset;

    #[test]
    fn half_occupation_at_the_chemical_potential() {
        let g = EnergyGrid::new(12, 0.5).unwrap();
        let p = EquilibriumParams::<f64>::simple(1.7, [1.5, 0.5, 2.0]);
        let w = fermi_dirac(&p, g).unwrap();
        assert_eq!(w.block(Species::A, 3).e[0][0].re, 0.5);
        assert_eq!(w.block(Species::D, 6).e[1][1].re, 0.5);
        assert!(fermi_dirac(&EquilibriumParams::simple(0.0, [0.0; 3]), g).is_err());
    }

    #[test]
    fn cold_field_is_empty_beyond_the_edge() {
        let g = EnergyGrid::<f64>::default();
        let beta = 40.0;
        let w = fermi_dirac(&EquilibriumParams::simple(beta, [0.0; 3]), g).unwrap();
        for s in Species::ALL {
            for j in 0..g.n() {
                if g.eps(j) > 10.0 / beta {
                    assert!(w.block(s, j).max_abs() <= 1e-3);
                }
            }
        }
    }

    #[test]
    fn potential_tables() {
        let p = EquilibriumParams::<f64>::simple(1.0, [1.0, 2.0, 3.0]);
        let mu = chemical_potentials(StructureKind::General, &p).unwrap();
        assert_eq!(mu[3], [2.0, 2.0]);

        let mut p = EquilibriumParams::<f64>::simple(1.0, [0.1, -0.4, 0.9]);
        p.spin_shifts = SpinShifts::Common(0.3);
        let mu = chemical_potentials(StructureKind::DiagonalPattern, &p).unwrap();
        for row in mu {
            assert!((row[0] - row[1] - 0.6).abs() < 1e-15);
        }
        assert!(chemical_potentials(StructureKind::General, &p).is_err());

        p.spin_shifts = SpinShifts::Paired { ac: 0.2, bd: 0.5 };
        chemical_potentials(StructureKind::ZeroOuterFrame, &p).unwrap();
        assert!(chemical_potentials(StructureKind::DiagonalPattern, &p).is_err());
    }

    #[test]
    fn fit_recovers_known_parameters() {
        let g = EnergyGrid::new(40, 0.3).unwrap();
        let masses = Masses::default();
        let mut p = EquilibriumParams::<f64>::simple(0.9, [0.4, -0.3, 0.2]);
        p.spin_shifts = SpinShifts::Paired { ac: 0.15, bd: -0.1 };
        let w = fermi_dirac(&p, g).unwrap();
        let class = StructureClass::new(StructureKind::ZeroOuterFrame);
        let fit = fit_equilibrium(&w, &class, &masses, &FitOptions::default()).unwrap();
        assert!((fit.params.beta - 0.9).abs() < 1e-8);
        for s in Species::ALL {
            for k in 0..2 {
                assert!((fit.params.mu(s, k) - p.mu(s, k)).abs() < 1e-8);
            }
        }
        let wt = MomentWeights::new(&g, &masses);
        let a = evaluate_conserved(&fermi_dirac(&fit.params, g).unwrap(), &class, &wt);
        let b = evaluate_conserved(&w, &class, &wt);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-8 * y.abs().max(1.0));
        }
    }

    #[test]
    fn fit_in_rotated_frame() {
        let g = EnergyGrid::new(30, 0.4).unwrap();
        let masses = Masses::default();
        let gauge = Preset::ZeroFrameRotated.gauge::<f64>();
        let mut p = EquilibriumParams::<f64>::simple(1.2, [0.3, 0.1, -0.2]);
        p.spin_shifts = SpinShifts::Paired { ac: -0.2, bd: 0.25 };
        p.basis = gauge.u;
        let w = fermi_dirac(&p, g).unwrap();
        let class = StructureClass::with_gauge(StructureKind::ZeroOuterFrame, gauge);
        let fit = fit_equilibrium(&w, &class, &masses, &FitOptions::default()).unwrap();
        let back = fermi_dirac(&fit.params, g).unwrap();
        assert!(back.zip_map(&w, |a, b| *a - *b).max_abs() < 1e-8);
    }
}
