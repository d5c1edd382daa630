//! Uniform energy grid, Wigner field storage and moment functionals.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{Masses, Species};
use crate::scalar::Real;
use crate::spinalg::{eig_hermitian_unchecked, SpinBlock};

/// Eigenvalue excursion beyond which a block is rejected as unphysical.
pub const REJECT_TOL: f64 = 1e-6;
/// Eigenvalue excursion that is clamped without notice.
pub const CLAMP_TOL: f64 = 1e-9;

/// Uniform shells `ε_j = h j`, `j = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyGrid<T: Real> {
    n: usize,
    h: T,
}

impl<T: Real> EnergyGrid<T> {
    pub fn new(n: usize, h: T) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 shells, got {n}")));
        }
        Self::new_unchecked_size(n, h)
    }

    /// Like [`EnergyGrid::new`] but allows tiny grids (used by oracle tests).
    pub fn new_unchecked_size(n: usize, h: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 shells, got {n}")));
        }
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        Ok(EnergyGrid { n, h })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    #[inline]
    pub fn eps(&self, j: usize) -> T {
        self.h * T::from_usize(j).unwrap()
    }

    pub fn eps_max(&self) -> T {
        self.eps(self.n - 1)
    }

    /// Grid with spacing `h / k` covering the same `[0, ε_max]`.
    pub fn refined(&self, k: usize) -> Self {
        EnergyGrid {
            n: (self.n - 1) * k + 1,
            h: self.h / T::from_usize(k).unwrap(),
        }
    }

    pub fn cast<U: Real>(&self) -> EnergyGrid<U> {
        EnergyGrid {
            n: self.n,
            h: U::lit(self.h.as_f64()),
        }
    }
}

impl<T: Real> Default for EnergyGrid<T> {
    /// `n = 56`, `h = 0.25`.
    fn default() -> Self {
        EnergyGrid { n: 56, h: T::lit(0.25) }
    }
}

/// Per species and shell 2×2 blocks, species-major.
///
/// Also used as storage for collision rates, where physicality does not apply.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField<T: Real> {
    grid: EnergyGrid<T>,
    blocks: Vec<SpinBlock<T>>,
}

impl<T: Real> WignerField<T> {
    pub fn zeros(grid: EnergyGrid<T>) -> Self {
        WignerField {
            grid,
            blocks: vec![SpinBlock::zero(); 4 * grid.n()],
        }
    }

    pub fn from_fn(grid: EnergyGrid<T>, mut f: impl FnMut(Species, usize) -> SpinBlock<T>) -> Self {
        let mut blocks = Vec::with_capacity(4 * grid.n());
        for s in Species::ALL {
            for j in 0..grid.n() {
                blocks.push(f(s, j));
            }
        }
        WignerField { grid, blocks }
    }

    pub fn from_blocks(grid: EnergyGrid<T>, blocks: Vec<SpinBlock<T>>) -> Result<Self> {
        if blocks.len() != 4 * grid.n() {
            return Err(Error::GridMismatch(format!(
                "expected {} blocks, got {}",
                4 * grid.n(),
                blocks.len()
            )));
        }
        Ok(WignerField { grid, blocks })
    }

    #[inline]
    pub fn grid(&self) -> &EnergyGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn block(&self, s: Species, j: usize) -> &SpinBlock<T> {
        &self.blocks[s.index() * self.grid.n() + j]
    }

    #[inline]
    pub fn block_mut(&mut self, s: Species, j: usize) -> &mut SpinBlock<T> {
        let n = self.grid.n();
        &mut self.blocks[s.index() * n + j]
    }

    pub fn species(&self, s: Species) -> &[SpinBlock<T>] {
        let n = self.grid.n();
        &self.blocks[s.index() * n..(s.index() + 1) * n]
    }

    pub fn species_mut(&mut self, s: Species) -> &mut [SpinBlock<T>] {
        let n = self.grid.n();
        &mut self.blocks[s.index() * n..(s.index() + 1) * n]
    }

    pub fn blocks(&self) -> &[SpinBlock<T>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [SpinBlock<T>] {
        &mut self.blocks
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "n = {}, h = {} vs n = {}, h = {}",
                self.grid.n(),
                self.grid.h(),
                other.grid.n(),
                other.grid.h()
            )));
        }
        Ok(())
    }

    /// `self + s · rate`, block by block.
    pub fn axpy(&self, s: T, rate: &Self) -> Self {
        debug_assert_eq!(self.grid, rate.grid);
        let blocks = self
            .blocks
            .iter()
            .zip(&rate.blocks)
            .map(|(w, r)| *w + r.scale(s))
            .collect();
        WignerField { grid: self.grid, blocks }
    }

    pub fn map(&self, f: impl Fn(&SpinBlock<T>) -> SpinBlock<T>) -> Self {
        WignerField {
            grid: self.grid,
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&SpinBlock<T>, &SpinBlock<T>) -> SpinBlock<T>) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        WignerField {
            grid: self.grid,
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// `I − W` on every block.
    pub fn complement(&self) -> Self {
        self.map(|b| b.complement())
    }

    pub fn max_abs(&self) -> T {
        self.blocks.iter().fold(T::zero(), |m, b| m.max(b.max_abs()))
    }

    pub fn max_hermiticity_defect(&self) -> T {
        self.blocks.iter().fold(T::zero(), |m, b| m.max(b.hermiticity_defect()))
    }

    /// Largest excursion of any eigenvalue outside `[0, 1]`, with its location.
    pub fn worst_eigenvalue(&self) -> (T, Species, usize, T) {
        let mut worst = (T::zero(), Species::A, 0, T::zero());
        for s in Species::ALL {
            for (j, b) in self.species(s).iter().enumerate() {
                for lam in eig_hermitian_unchecked(b).values {
                    let exc = (-lam).max(lam - T::one());
                    if exc > worst.0 {
                        worst = (exc, s, j, lam);
                    }
                }
            }
        }
        worst
    }

    /// Rejects non-Hermitian blocks and eigenvalues outside `[−1e-6, 1 + 1e-6]`.
    pub fn validate_physical(&self) -> Result<()> {
        let scale = self.max_abs().as_f64().max(1.0);
        for b in &self.blocks {
            let defect = b.hermiticity_defect().as_f64();
            if defect > crate::spinalg::HERMITIAN_TOL * scale {
                return Err(Error::NotHermitian { defect });
            }
        }
        let (exc, species, shell, lam) = self.worst_eigenvalue();
        if exc.as_f64() > REJECT_TOL {
            return Err(Error::Unphysical {
                species,
                shell,
                eigenvalue: lam.as_f64(),
            });
        }
        Ok(())
    }

    /// Projects eigenvalues that leave `[0, 1]` by at most `window` back onto
    /// the interval. Larger excursions up to `1e-6` are left in place and
    /// counted as tolerated. Fails without modifying anything if an excursion
    /// exceeds `1e-6`.
    pub fn clamp_physical(&mut self, window: f64) -> Result<ClampReport> {
        let (exc, species, shell, lam) = self.worst_eigenvalue();
        if exc.as_f64() > REJECT_TOL {
            return Err(Error::Unphysical {
                species,
                shell,
                eigenvalue: lam.as_f64(),
            });
        }
        let mut report = ClampReport::default();
        for b in &mut self.blocks {
            let eig = eig_hermitian_unchecked(b);
            let [l0, l1] = eig.values;
            if l0 >= T::zero() && l1 <= T::one() {
                continue;
            }
            let exc = (-l0).max(l1 - T::one()).as_f64();
            report.max_excursion = report.max_excursion.max(exc);
            if exc > window {
                report.tolerated += 1;
                continue;
            }
            report.clamped += 1;
            *b = eig.map(|l| l.max(T::zero()).min(T::one()));
        }
        Ok(report)
    }

    pub fn cast<U: Real>(&self) -> WignerField<U> {
        WignerField {
            grid: self.grid.cast(),
            blocks: self.blocks.iter().map(|b| b.cast()).collect(),
        }
    }
}

/// Outcome of [`WignerField::clamp_physical`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClampReport {
    pub clamped: usize,
    pub tolerated: usize,
    pub max_excursion: f64,
}

/// Quadrature weights of `∫ d³p` per species and shell: `4π m sqrt(2 m ε_j) h`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentWeights<T: Real> {
    w: [Vec<T>; 4],
}

impl<T: Real> MomentWeights<T> {
    /// Rectangle rule, matched to the collision quadrature.
    pub fn new(grid: &EnergyGrid<T>, masses: &Masses<T>) -> Self {
        let four_pi = T::lit(4.0) * T::PI();
        let w = Species::ALL.map(|s| {
            let m = masses.of(s);
            (0..grid.n())
                .map(|j| four_pi * m * (T::lit(2.0) * m * grid.eps(j)).sqrt() * grid.h())
                .collect()
        });
        MomentWeights { w }
    }

    /// Trapezoid rule with the last shell at half weight. Not matched to the
    /// collision quadrature, so discrete conservation is lost.
    pub fn trapezoid(grid: &EnergyGrid<T>, masses: &Masses<T>) -> Self {
        let mut mw = Self::new(grid, masses);
        let half = T::lit(0.5);
        for v in &mut mw.w {
            let last = v.len() - 1;
            v[0] = v[0] * half;
            v[last] = v[last] * half;
        }
        mw
    }

    #[inline]
    pub fn of(&self, s: Species) -> &[T] {
        &self.w[s.index()]
    }
}

/// `ρ^α = Σ_j w_j W^α(ε_j)`.
pub fn density_matrix<T: Real>(w: &WignerField<T>, weights: &MomentWeights<T>, s: Species) -> SpinBlock<T> {
    w.species(s)
        .iter()
        .zip(weights.of(s))
        .fold(SpinBlock::zero(), |acc, (b, &wt)| acc + b.scale(wt))
}

/// `ρ = Σ_α ρ^α`.
pub fn total_density<T: Real>(w: &WignerField<T>, weights: &MomentWeights<T>) -> SpinBlock<T> {
    Species::ALL
        .iter()
        .fold(SpinBlock::zero(), |acc, &s| acc + density_matrix(w, weights, s))
}

/// `E = Σ_α Σ_j w_j ε_j tr W^α(ε_j)`.
pub fn total_energy<T: Real>(w: &WignerField<T>, weights: &MomentWeights<T>) -> T {
    let grid = *w.grid();
    Species::ALL
        .iter()
        .map(|&s| {
            w.species(s)
                .iter()
                .zip(weights.of(s))
                .enumerate()
                .map(|(j, (b, &wt))| wt * grid.eps(j) * b.tr())
                .sum::<T>()
        })
        .sum()
}

/// `Σ_α Σ_j w_j ‖W − W'‖_1` with the trace norm per block.
pub fn l1_distance<T: Real>(a: &WignerField<T>, b: &WignerField<T>, weights: &MomentWeights<T>) -> Result<T> {
    a.check_same_grid(b)?;
    let mut total = T::zero();
    for s in Species::ALL {
        for ((x, y), &wt) in a.species(s).iter().zip(b.species(s)).zip(weights.of(s)) {
            let ev = eig_hermitian_unchecked(&(*x - *y)).values;
            total = total + wt * (ev[0].abs() + ev[1].abs());
        }
    }
    Ok(total)
}

const SNAPSHOT_HEADER: [&str; 6] = ["species", "eps", "re_w11", "re_w22", "re_w12", "im_w12"];

/// Writes one CSV record per (species, shell) with 17 significant digits.
pub fn write_snapshot<T: Real, W: Write>(field: &WignerField<T>, out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wr.write_record(SNAPSHOT_HEADER).map_err(io)?;
    let grid = *field.grid();
    for s in Species::ALL {
        for (j, b) in field.species(s).iter().enumerate() {
            let p = b.to_hermitian_parts();
            let mut rec = vec![s.tag().to_string(), fmt17(grid.eps(j).as_f64())];
            rec.extend(p.iter().map(|x| fmt17(x.as_f64())));
            wr.write_record(&rec).map_err(io)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads a snapshot written by [`write_snapshot`], reconstructing the grid
/// from the recorded shell energies.
pub fn read_snapshot<T: Real, R: Read>(input: R) -> Result<WignerField<T>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut per_species: [Vec<(f64, [f64; 4])>; 4] = Default::default();
    for (k, rec) in rd.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Snapshot { line, msg: e.to_string() })?;
        if rec.len() != 6 {
            return Err(Error::Snapshot {
                line,
                msg: format!("expected 6 fields, got {}", rec.len()),
            });
        }
        let tag = rec[0].trim();
        let s = tag
            .chars()
            .next()
            .filter(|_| tag.len() == 1)
            .and_then(Species::from_tag)
            .ok_or_else(|| Error::Snapshot {
                line,
                msg: format!("unknown species tag {tag:?}"),
            })?;
        let mut vals = [0.0f64; 5];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = rec[i + 1].trim().parse().map_err(|e| Error::Snapshot {
                line,
                msg: format!("field {}: {e}", i + 2),
            })?;
        }
        per_species[s.index()].push((vals[0], [vals[1], vals[2], vals[3], vals[4]]));
    }
    let n = per_species[0].len();
    if n < 2 || per_species.iter().any(|v| v.len() != n) {
        return Err(Error::Snapshot {
            line: 0,
            msg: "every species needs the same number (≥ 2) of shells".into(),
        });
    }
    let h = per_species[0][1].0 - per_species[0][0].0;
    for rows in &per_species {
        for (j, (eps, _)) in rows.iter().enumerate() {
            let expect = h * j as f64;
            if (eps - expect).abs() > 1e-9 * h.max(1.0) * (j as f64 + 1.0) {
                return Err(Error::Snapshot {
                    line: 0,
                    msg: format!("shell {j} at ε = {eps} is not on a uniform grid starting at 0"),
                });
            }
        }
    }
    let grid = EnergyGrid::new_unchecked_size(n, T::lit(h))?;
    let blocks = per_species
        .iter()
        .flat_map(|rows| rows.iter().map(|(_, p)| SpinBlock::from_hermitian_parts(p.map(T::lit))))
        .collect();
    WignerField::from_blocks(grid, blocks)
}
