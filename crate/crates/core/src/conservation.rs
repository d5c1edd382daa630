//! Structure classes of the pair operator and their conserved moments.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{density_matrix, total_density, total_energy, MomentWeights, WignerField};
use crate::model::{GaugeRotation, Species, VOp};
use crate::scalar::Real;
use crate::spinalg::PairBlock;

/// Default pattern tolerance, relative to the largest entry of 𝒱.
pub const PATTERN_TOL: f64 = 1e-12;

/// Zero-pattern family of 𝒱.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StructureKind {
    General,
    /// Nonzero entries only on the diagonal and at (↑↓, ↓↑), (↓↑, ↑↓).
    DiagonalPattern,
    /// `𝒱 = c⁼ 1 + cˣ T`.
    IdentityFamily,
    /// Nonzero entries only in the central 2×2 block.
    ZeroOuterFrame,
}

impl StructureKind {
    pub const ALL: [StructureKind; 4] = [
        StructureKind::General,
        StructureKind::DiagonalPattern,
        StructureKind::IdentityFamily,
        StructureKind::ZeroOuterFrame,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::General => "General",
            StructureKind::DiagonalPattern => "DiagonalPattern",
            StructureKind::IdentityFamily => "IdentityFamily",
            StructureKind::ZeroOuterFrame => "ZeroOuterFrame",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }

    /// Whether 𝒱 may be nonzero at `(row, col)` in the canonical frame.
    /// The identity family is reported with the diagonal pattern it implies.
    pub fn allows(self, row: usize, col: usize) -> bool {
        match self {
            StructureKind::General => true,
            StructureKind::DiagonalPattern | StructureKind::IdentityFamily => {
                row == col || (row, col) == (1, 2) || (row, col) == (2, 1)
            }
            StructureKind::ZeroOuterFrame => (1..3).contains(&row) && (1..3).contains(&col),
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A structure kind together with the gauge that exhibits it: the pattern
/// holds for `(g⁻¹)·𝒱`, and conserved moments are taken of `(g⁻¹)·W`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureClass<T: Real> {
    pub kind: StructureKind,
    pub gauge: Option<GaugeRotation<T>>,
}

impl<T: Real> StructureClass<T> {
    pub fn new(kind: StructureKind) -> Self {
        StructureClass { kind, gauge: None }
    }

    pub fn with_gauge(kind: StructureKind, gauge: GaugeRotation<T>) -> Self {
        StructureClass {
            kind,
            gauge: Some(gauge),
        }
    }

    pub fn gauge_or_identity(&self) -> GaugeRotation<T> {
        self.gauge.unwrap_or_else(GaugeRotation::identity)
    }

    /// `W` expressed in the canonical frame of the class.
    pub fn canonical_field(&self, w: &WignerField<T>) -> WignerField<T> {
        match &self.gauge {
            Some(g) if !g.is_identity() => g.inverse().rotate_field(w),
            _ => w.clone(),
        }
    }
}

/// Relative residuals of the three pattern tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternResiduals {
    /// Distance of 𝒱 from `c⁼ 1 + cˣ T` with the best-matching central coefficients.
    pub identity: f64,
    /// Largest frame entry.
    pub zero_frame: f64,
    /// Largest entry outside the diagonal pattern.
    pub diagonal: f64,
}

/// Pattern residuals of a 4×4 pair operator, each divided by its largest entry.
pub fn pattern_residuals<T: Real>(m: &PairBlock<T>) -> PatternResiduals {
    let scale = m.max_abs().as_f64();
    if scale == 0.0 {
        return PatternResiduals {
            identity: 0.0,
            zero_frame: 0.0,
            diagonal: 0.0,
        };
    }
    let half = T::lit(0.5);
    let c_eq = (m.e[1][1] + m.e[2][2]) * half;
    let c_x = (m.e[1][2] + m.e[2][1]) * half;
    let (id, sw) = (PairBlock::<T>::identity(), PairBlock::<T>::swap());
    let mut ideal = PairBlock::zero();
    for r in 0..4 {
        for c in 0..4 {
            ideal.e[r][c] = id.e[r][c] * c_eq + sw.e[r][c] * c_x;
        }
    }
    let identity = (*m - ideal).max_abs().as_f64();
    let mut zero_frame = 0.0f64;
    let mut diagonal = 0.0f64;
    for r in 0..4 {
        for c in 0..4 {
            let v = m.e[r][c].norm().as_f64();
            if !StructureKind::ZeroOuterFrame.allows(r, c) {
                zero_frame = zero_frame.max(v);
            }
            if !StructureKind::DiagonalPattern.allows(r, c) {
                diagonal = diagonal.max(v);
            }
        }
    }
    PatternResiduals {
        identity: identity / scale,
        zero_frame: zero_frame / scale,
        diagonal: diagonal / scale,
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if (1e-14..=1e-6).contains(&tol) {
        Ok(())
    } else {
        Err(Error::Config(format!("pattern tolerance {tol:e} outside [1e-14, 1e-6]")))
    }
}

fn first_match(r: &PatternResiduals, tol: f64) -> StructureKind {
    if r.identity <= tol {
        StructureKind::IdentityFamily
    } else if r.zero_frame <= tol {
        StructureKind::ZeroOuterFrame
    } else if r.diagonal <= tol {
        StructureKind::DiagonalPattern
    } else {
        StructureKind::General
    }
}

/// Classifies 𝒱 as given. Tests identity family, zero outer frame and
/// diagonal pattern in that order and returns the first match.
pub fn classify_vop<T: Real>(vop: &VOp<T>, tol: f64) -> Result<(StructureClass<T>, PatternResiduals)> {
    check_tol(tol)?;
    let r = pattern_residuals(&vop.matrix);
    Ok((StructureClass::new(first_match(&r, tol)), r))
}

/// Classifies `(g⁻¹)·𝒱` and attaches `g` to the result.
pub fn classify_with_gauge<T: Real>(
    vop: &VOp<T>,
    gauge: &GaugeRotation<T>,
    tol: f64,
) -> Result<(StructureClass<T>, PatternResiduals)> {
    check_tol(tol)?;
    gauge.validate()?;
    let canonical = vop.rotate(&gauge.inverse());
    let r = pattern_residuals(&canonical.matrix);
    Ok((StructureClass::with_gauge(first_match(&r, tol), *gauge), r))
}

/// A conserved moment of the field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Functional {
    /// `tr ρ`
    TotalTrace,
    /// `tr(ρᵃ + ρᵇ)`
    PairAB,
    /// `tr(ρᵃ + ρᵈ)`
    PairAD,
    Energy,
    /// `ρ↑↑`
    SpinUp,
    /// `ρ↓↓`
    SpinDown,
    /// `Re ρ↑↓`
    CoherenceRe,
    /// `Im ρ↑↓`
    CoherenceIm,
    /// `tr σz(ρᵃ + ρᶜ)`
    SigmaZAC,
}

impl Functional {
    pub fn name(self) -> &'static str {
        match self {
            Functional::TotalTrace => "tr_rho",
            Functional::PairAB => "tr_rho_ab",
            Functional::PairAD => "tr_rho_ad",
            Functional::Energy => "energy",
            Functional::SpinUp => "rho_upup",
            Functional::SpinDown => "rho_dndn",
            Functional::CoherenceRe => "re_rho_updn",
            Functional::CoherenceIm => "im_rho_updn",
            Functional::SigmaZAC => "tr_sz_rho_ac",
        }
    }
}

/// The conserved moments of a class, in output order. The first four are
/// shared by every class; the rest are class specific.
pub fn conserved_functionals(kind: StructureKind) -> Vec<Functional> {
    use Functional::*;
    let mut f = vec![TotalTrace, PairAB, PairAD, Energy];
    match kind {
        StructureKind::General => {}
        StructureKind::DiagonalPattern => f.extend([SpinUp, SpinDown]),
        StructureKind::IdentityFamily => f.extend([SpinUp, SpinDown, CoherenceRe, CoherenceIm]),
        StructureKind::ZeroOuterFrame => f.extend([SpinUp, SpinDown, SigmaZAC]),
    }
    f
}

/// Number of independent conserved moments (the list above contains
/// `tr ρ = ρ↑↑ + ρ↓↓` redundantly, and the identity family's full ρ counts
/// as its two eigenvalues once the basis is fixed).
pub fn independent_count(kind: StructureKind) -> usize {
    match kind {
        StructureKind::General => 4,
        StructureKind::DiagonalPattern | StructureKind::IdentityFamily => 5,
        StructureKind::ZeroOuterFrame => 6,
    }
}

/// Evaluates one functional on a field already in the frame of interest.
pub fn evaluate_functional<T: Real>(f: Functional, w: &WignerField<T>, weights: &MomentWeights<T>) -> T {
    let tr = |s: Species| density_matrix(w, weights, s).tr();
    match f {
        Functional::TotalTrace => total_density(w, weights).tr(),
        Functional::PairAB => tr(Species::A) + tr(Species::B),
        Functional::PairAD => tr(Species::A) + tr(Species::D),
        Functional::Energy => total_energy(w, weights),
        Functional::SpinUp => total_density(w, weights).e[0][0].re,
        Functional::SpinDown => total_density(w, weights).e[1][1].re,
        Functional::CoherenceRe => total_density(w, weights).e[0][1].re,
        Functional::CoherenceIm => total_density(w, weights).e[0][1].im,
        Functional::SigmaZAC => {
            let m = density_matrix(w, weights, Species::A) + density_matrix(w, weights, Species::C);
            m.e[0][0].re - m.e[1][1].re
        }
    }
}

/// Named conserved moments of one field.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservedVector<T: Real> {
    pub functionals: Vec<Functional>,
    pub values: Vec<T>,
}

impl<T: Real> ConservedVector<T> {
    pub fn get(&self, f: Functional) -> Option<T> {
        self.functionals.iter().position(|&g| g == f).map(|i| self.values[i])
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.functionals.iter().map(|f| f.name()).collect()
    }
}

/// The class's conserved moments of `W`, evaluated in the canonical frame.
pub fn evaluate_conserved<T: Real>(
    w: &WignerField<T>,
    class: &StructureClass<T>,
    weights: &MomentWeights<T>,
) -> ConservedVector<T> {
    let canon = class.canonical_field(w);
    let functionals = conserved_functionals(class.kind);
    let values = functionals.iter().map(|&f| evaluate_functional(f, &canon, weights)).collect();
    ConservedVector { functionals, values }
}

/// Largest relative change `|Q(t) − Q(0)| / max(|Q(0)|, 1)` per functional.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftReport {
    pub functionals: Vec<Functional>,
    pub drifts: Vec<f64>,
}

impl DriftReport {
    pub fn max(&self) -> f64 {
        self.drifts.iter().fold(0.0, |m, &d| m.max(d))
    }
}

/// Drift of every conserved moment over a sequence of samples.
pub fn drift_of<T: Real>(series: &[ConservedVector<T>]) -> DriftReport {
    let Some(first) = series.first() else {
        return DriftReport {
            functionals: Vec::new(),
            drifts: Vec::new(),
        };
    };
    let drifts = (0..first.values.len())
        .map(|i| {
            let q0 = first.values[i].as_f64();
            let denom = q0.abs().max(1.0);
            series
                .iter()
                .map(|v| (v.values[i].as_f64() - q0).abs() / denom)
                .fold(0.0, f64::max)
        })
        .collect();
    DriftReport {
        functionals: first.functionals.clone(),
        drifts,
    }
}

/// Drift report over the samples of a trajectory.
pub fn drift_report<T: Real>(traj: &crate::integrator::Trajectory<T>) -> DriftReport {
    let series: Vec<_> = traj.samples.iter().map(|s| s.conserved.clone()).collect();
    drift_of(&series)
}
