//! Entropy and entropy production.

use rayon::prelude::*;

use crate::collision::CollisionKernel;
use crate::grid::{MomentWeights, WignerField};
use crate::model::{Model, Species};
use crate::scalar::Real;
use crate::spinalg::{eig_hermitian_unchecked, tensor, PairBlock};

/// Eigenvalue clamp inside logarithms.
pub const LOG_CLAMP: f64 = 1e-12;

/// Entropy and its production rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyReport<T: Real> {
    pub entropy: T,
    pub sigma: T,
}

fn mode_entropy<T: Real>(lam: T) -> T {
    let l = lam.max(T::zero()).min(T::one());
    let x = |v: T| if v > T::zero() { v * v.ln() } else { T::zero() };
    -(x(l) + x(T::one() - l))
}

/// `S = −Σ_α Σ_j w_j Σ_λ [λ log λ + (1 − λ) log(1 − λ)]`.
pub fn entropy<T: Real>(w: &WignerField<T>, weights: &MomentWeights<T>) -> T {
    Species::ALL
        .iter()
        .map(|&s| {
            w.species(s)
                .iter()
                .zip(weights.of(s))
                .map(|(b, &wt)| {
                    let [l0, l1] = eig_hermitian_unchecked(b).values;
                    wt * (mode_entropy(l0) + mode_entropy(l1))
                })
                .sum::<T>()
        })
        .sum()
}

/// Per-shell spectral data with clamped eigenvalues.
struct Spectrum<T: Real> {
    lam: [T; 2],
    log_lam: [T; 2],
    log_emp: [T; 2],
    vectors: crate::spinalg::SpinBlock<T>,
}

fn spectra<T: Real>(w: &WignerField<T>, s: Species) -> Vec<Spectrum<T>> {
    let d = T::lit(LOG_CLAMP);
    w.species(s)
        .iter()
        .map(|b| {
            let e = eig_hermitian_unchecked(b);
            let lam = e.values.map(|l| l.max(d).min(T::one() - d));
            Spectrum {
                lam,
                log_lam: lam.map(|l| l.ln()),
                log_emp: lam.map(|l| (T::one() - l).ln()),
                vectors: e.vectors(),
            }
        })
        .collect()
}

/// Entropy production of the dissipative flow by its manifestly
/// non-negative form: a sum over on-shell quadruples and eigenmode
/// combinations of `(Λ_gain − Λ_loss) log(Λ_gain / Λ_loss) |⟨v₁v₃|𝒱|v₂v₄⟩|²`,
/// weighted like the collision quadrature.
pub fn entropy_production<T: Real>(w: &WignerField<T>, model: &Model<T>) -> T {
    let grid = *w.grid();
    let n = grid.n();
    let h = grid.h();
    let [sa, sb, sc, sd] = Species::ALL.map(|s| spectra(w, s));
    let ptil: [Vec<T>; 4] =
        Species::ALL.map(|s| (0..n).map(|j| (model.masses.of(s) * grid.eps(j)).sqrt()).collect());
    // moment weight 4π√2 m p̃ h times the dissipative prefactor; the factor 2
    // collects the a/c and b/d halves of the sum
    let kd = model.rates.diss_constant::<T>();
    let pre = T::lit(8.0) * T::PI() * T::lit(2.0).sqrt() * kd * model.masses.product() * h * h * h;
    // (V_b ⊗ V_d) side, multiplied into 𝒱 once per pair of shells
    let right: Vec<PairBlock<T>> = (0..n * n)
        .map(|k| model.vop.matrix * tensor(&sb[k / n].vectors, &sd[k % n].vectors))
        .collect();
    let per_a: Vec<T> = (0..n)
        .into_par_iter()
        .map(|ia| {
            let mut acc = T::zero();
            for ic in 0..n {
                let left = tensor(&sa[ia].vectors, &sc[ic].vectors).adjoint();
                let (pa, pc) = (&sa[ia], &sc[ic]);
                for ib in 0..n {
                    let Some(id) = (ia + ic).checked_sub(ib).filter(|&id| id < n) else {
                        continue;
                    };
                    let pmin = ptil[0][ia].min(ptil[1][ib]).min(ptil[2][ic]).min(ptil[3][id]);
                    if pmin == T::zero() {
                        continue;
                    }
                    let (pb, pd) = (&sb[ib], &sd[id]);
                    let m = left * right[ib * n + id];
                    let mut sum = T::zero();
                    for r in 0..4 {
                        let (i, k) = (r / 2, r % 2);
                        let occ_ac = pa.lam[i] * pc.lam[k];
                        let emp_ac = (T::one() - pa.lam[i]) * (T::one() - pc.lam[k]);
                        let log_ac = pa.log_emp[i] + pc.log_emp[k] - pa.log_lam[i] - pc.log_lam[k];
                        for col in 0..4 {
                            let (l, q) = (col / 2, col % 2);
                            let amp = m.e[r][col].norm_sqr();
                            if amp == T::zero() {
                                continue;
                            }
                            let occ_bd = pb.lam[l] * pd.lam[q];
                            let emp_bd = (T::one() - pb.lam[l]) * (T::one() - pd.lam[q]);
                            let log_bd = pb.log_lam[l] + pd.log_lam[q] - pb.log_emp[l] - pd.log_emp[q];
                            let gain = emp_ac * occ_bd;
                            let loss = occ_ac * emp_bd;
                            sum = sum + (gain - loss) * (log_ac + log_bd) * amp;
                        }
                    }
                    acc = acc + pmin * sum;
                }
            }
            acc
        })
        .collect();
    pre * per_a.into_iter().sum::<T>()
}

/// Entropy production as `−Σ w tr[(log W − log W̃) C_diss]`, with the same
/// eigenvalue clamp.
pub fn entropy_production_from_rate<T: Real>(
    w: &WignerField<T>,
    c_diss: &WignerField<T>,
    weights: &MomentWeights<T>,
) -> T {
    let d = T::lit(LOG_CLAMP);
    let mut total = T::zero();
    for s in Species::ALL {
        for ((b, c), &wt) in w.species(s).iter().zip(c_diss.species(s)).zip(weights.of(s)) {
            let phi = eig_hermitian_unchecked(b).map(|l| {
                let l = l.max(d).min(T::one() - d);
                l.ln() - (T::one() - l).ln()
            });
            total = total - wt * (phi * *c).tr();
        }
    }
    total
}

/// Entropy and its production at `w`.
pub fn entropy_report<T: Real>(w: &WignerField<T>, model: &Model<T>, weights: &MomentWeights<T>) -> EntropyReport<T> {
    EntropyReport {
        entropy: entropy(w, weights),
        sigma: entropy_production(w, model),
    }
}

/// Dual-route production using a prepared kernel.
pub fn entropy_production_dual<T: Real>(w: &WignerField<T>, kernel: &CollisionKernel<T>, weights: &MomentWeights<T>) -> T {
    entropy_production_from_rate(w, &kernel.diss(w), weights)
}
