//! Initial states: the analytic benchmark state, uniform fills, Fermi-Dirac
//! fields and tabulated fields read from snapshot CSV.

pub mod special;

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;

use crate::equilibrium::{fermi_dirac, EquilibriumParams};
use crate::error::{Error, Result};
use crate::grid::{read_snapshot, ClampReport, EnergyGrid, WignerField, REJECT_TOL};
use crate::model::Species;
use crate::scalar::{Cplx, Real};
use crate::spinalg::SpinBlock;

use special::{airy_ai, atan, erf, erfc, gamma, si, zeta};

/// Which initial field to build.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec<T: Real> {
    /// The analytic benchmark state with erfc cutoffs near ε ≈ 6–7.
    Benchmark,
    FermiDirac(EquilibriumParams<T>),
    /// Every block equal to `level · I`.
    UniformFill(T),
    /// Snapshot CSV; its shells must coincide with the target grid.
    Custom(PathBuf),
}

/// Entries `(↑↑, ↓↓, ↑↓)` of the analytic benchmark state at energy `e`.
pub fn benchmark_entries(s: Species, e: f64) -> Result<(f64, f64, Complex64)> {
    let i = Complex64::i();
    Ok(match s {
        Species::A => {
            let uu = 2.5 * (-2.0 * e).exp() * (e * e + 0.25).powi(2);
            let phase = 2.0 * i * (e - 1.0 / 3.0) - 0.5 * (e - 3.75).powi(2) - 2.0 * e;
            let ud = 42.0 * phase.exp();
            let dd = erfc(e - 6.0) * (-2.0 * e / 3.0).exp() * atan(e + 1.0) / 6.0
                * (2.0 * erf(e / 2.0) + 0.125)
                * (2.0 + 0.5 * (3.0 * e).sin());
            (uu, dd, ud)
        }
        Species::B => {
            let uu = 2.0 / 3.0 * (2.0 + (2.0 * e).sin()) / (2.0 + gamma(1.0 + e));
            let ud = 0.5 * zeta(Complex64::new(e, e / 2.0))? * (-2.0 * e).exp();
            let dd = (-(1.0 + 2.0 * e / 3.0)).exp();
            (uu, dd, ud)
        }
        Species::C => {
            let uu = 2.0 / 3.0 * erfc(e / 2.0) * (e * e + 0.8) * (0.6 + e * e / 6.0);
            let poly = Complex64::new(0.4, -e) + Complex64::new(4.0, 4.0) * e * e.sin().powi(2);
            let ud = 0.5 * (-1.5 * e).exp() * (1.0 + erf(e - 2.0)) * erfc(e - 6.0) * poly;
            let dd = erfc(e - 6.0) * (-e / 2.0).exp() * (1.0 + e.sin().powi(2)) / (3.0 + 0.6 * e);
            (uu, dd, ud)
        }
        Species::D => {
            let uu = 3.0 / (4.0 * PI) * erfc(e - 7.0) * (-e / 2.0).exp() * si(6.0 * e + 0.5);
            let ud = erfc(e - 6.0) / 24.0
                * Complex64::new(-1.5 * e, PI * 6.0 / 7.0).exp()
                * e.sqrt()
                * (15.0 - 18.0 * e + 3.0 * e * e);
            let dd = airy_ai(e - 1.0)?;
            (uu, dd, ud)
        }
    })
}

/// The analytic benchmark state on `grid`, evaluated in `f64`.
///
/// Eigenvalue excursions up to `1e-6` outside `[0, 1]` are clamped and
/// reported; larger ones are an error naming species and shell.
pub fn benchmark_state<T: Real>(grid: EnergyGrid<T>) -> Result<(WignerField<T>, ClampReport)> {
    let mut blocks = Vec::with_capacity(4 * grid.n());
    for s in Species::ALL {
        for j in 0..grid.n() {
            let (uu, dd, ud) = benchmark_entries(s, grid.eps(j).as_f64())?;
            let off = Cplx::new(T::lit(ud.re), T::lit(ud.im));
            blocks.push(SpinBlock::hermitian(T::lit(uu), T::lit(dd), off));
        }
    }
    let mut w = WignerField::from_blocks(grid, blocks)?;
    let report = w.clamp_physical(REJECT_TOL)?;
    Ok((w, report))
}

/// Builds and validates the field described by `spec`.
pub fn build_state<T: Real>(spec: &StateSpec<T>, grid: EnergyGrid<T>) -> Result<WignerField<T>> {
    let w = match spec {
        StateSpec::Benchmark => benchmark_state(grid)?.0,
        StateSpec::FermiDirac(p) => fermi_dirac(p, grid)?,
        StateSpec::UniformFill(level) => WignerField::from_fn(grid, |_, _| SpinBlock::scalar(*level)),
        StateSpec::Custom(path) => {
            let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let w: WignerField<T> = read_snapshot(std::io::BufReader::new(file))?;
            let g = w.grid();
            let tol = 1e-9 * grid.h().as_f64();
            if g.n() != grid.n() || (g.h().as_f64() - grid.h().as_f64()).abs() > tol {
                return Err(Error::GridMismatch(format!(
                    "snapshot has n = {}, h = {}; expected n = {}, h = {}",
                    g.n(),
                    g.h(),
                    grid.n(),
                    grid.h()
                )));
            }
            WignerField::from_blocks(grid, w.blocks().to_vec())?
        }
    };
    w.validate_physical()?;
    Ok(w)
}
