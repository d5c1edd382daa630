//! Slow reference evaluations used to cross-check the fast operators.
//!
//! Two independent routes: the 8×8 block-matrix form of the integrands built
//! from the interaction matrices directly, and plain loops over every grid
//! quadruple or triple.

use crate::collision::{denominator_sign, diss_integrand, heff_integrand, commutator_rate, Quad};
use crate::grid::WignerField;
use crate::model::{InteractionSet, Model, Species};
use crate::scalar::{czero, Cplx, Real};
use crate::spinalg::SpinBlock;

/// 8×8 complex matrix on (species ⊗ spin).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat8<T: Real>(pub [[Cplx<T>; 8]; 8]);

impl<T: Real> Mat8<T> {
    pub fn zero() -> Self {
        Mat8([[czero(); 8]; 8])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..8 {
            m.0[i][i] = Cplx::new(T::one(), T::zero());
        }
        m
    }

    /// Places 2×2 blocks at `(row, col)` block positions.
    pub fn from_blocks(blocks: &[(usize, usize, SpinBlock<T>)]) -> Self {
        let mut m = Self::zero();
        for (r, c, b) in blocks {
            for i in 0..2 {
                for j in 0..2 {
                    m.0[2 * r + i][2 * c + j] = b.e[i][j];
                }
            }
        }
        m
    }

    pub fn block_diag(d: [SpinBlock<T>; 4]) -> Self {
        Self::from_blocks(&[(0, 0, d[0]), (1, 1, d[1]), (2, 2, d[2]), (3, 3, d[3])])
    }

    pub fn block(&self, k: usize) -> SpinBlock<T> {
        let m = &self.0;
        SpinBlock::new(m[2 * k][2 * k], m[2 * k][2 * k + 1], m[2 * k + 1][2 * k], m[2 * k + 1][2 * k + 1])
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..8 {
            for j in 0..8 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..8 {
            for k in 0..8 {
                let a = self.0[i][k];
                if a == czero() {
                    continue;
                }
                for j in 0..8 {
                    out.0[i][j] = out.0[i][j] + a * o.0[k][j];
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..8 {
            for j in 0..8 {
                out.0[i][j] = out.0[i][j] + o.0[i][j];
            }
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = *self;
        for i in 0..8 {
            for j in 0..8 {
                out.0[i][j] = out.0[i][j] - o.0[i][j];
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self::zero().sub(self)
    }

    /// `m + m†`.
    pub fn plus_adjoint(&self) -> Self {
        self.add(&self.adjoint())
    }

    /// Replaces each diagonal 2×2 block by its trace times the identity and
    /// drops off-diagonal blocks.
    pub fn block_trace(&self) -> Self {
        Self::block_diag([0, 1, 2, 3].map(|k| SpinBlock::scalar_c(self.block(k).trace())))
    }
}

fn prod<T: Real>(ms: &[&Mat8<T>]) -> Mat8<T> {
    ms.iter().skip(1).fold(*ms[0], |acc, m| acc.mul(m))
}

/// The 8×8 interaction operators `V⁼`, `Vˣ` and the type switch `Y`.
pub struct MatrixForm<T: Real> {
    pub veq: Mat8<T>,
    pub vx: Mat8<T>,
    pub y: Mat8<T>,
}

impl<T: Real> MatrixForm<T> {
    pub fn new(v: &InteractionSet<T>) -> Self {
        let veq = Mat8::from_blocks(&[(0, 1, v.ab), (1, 0, v.ab.adjoint()), (2, 3, v.cd), (3, 2, v.cd.adjoint())]);
        let vx = Mat8::from_blocks(&[(0, 3, v.ad), (1, 2, v.cb.adjoint()), (2, 1, v.cb), (3, 0, v.ad.adjoint())]);
        let id = SpinBlock::identity();
        let y = Mat8::from_blocks(&[(0, 2, id), (1, 3, id), (2, 0, id), (3, 1, id)]);
        MatrixForm { veq, vx, y }
    }

    /// The block-diagonal operand at every momentum slot. Each species
    /// component reads only its own block from each slot, so a single
    /// arrangement serves all four components.
    pub fn positions(q: &Quad<T>) -> [Mat8<T>; 4] {
        let m = Mat8::block_diag(*q);
        [m; 4]
    }

    fn ttr_y(&self, ms: &[&Mat8<T>]) -> Mat8<T> {
        let mut v = vec![&self.y];
        v.extend_from_slice(ms);
        v.push(&self.y);
        prod(&v).block_trace()
    }

    /// `𝒜_quad + 𝒜_tr` at one quadruple.
    pub fn diss(&self, q: &Quad<T>) -> Quad<T> {
        let [w1, w2, w3, w4] = Self::positions(q);
        let one = Mat8::identity();
        let [t1, t2, t3, t4] = [w1, w2, w3, w4].map(|w| one.sub(&w));
        let (e, x) = (&self.veq, &self.vx);
        let quad = prod(&[&t1, e, &w2, x, &t3, e, &w4, x])
            .sub(&prod(&[&w1, e, &t2, x, &w3, e, &t4, x]))
            .add(&prod(&[&t1, x, &w4, e, &t3, x, &w2, e]))
            .sub(&prod(&[&w1, x, &t4, e, &w3, x, &t2, e]))
            .plus_adjoint();
        let tr = prod(&[&t1, e, &w2, e])
            .plus_adjoint()
            .mul(&self.ttr_y(&[&t3, e, &w4, e]))
            .sub(&prod(&[&w1, e, &t2, e]).plus_adjoint().mul(&self.ttr_y(&[&w3, e, &t4, e])))
            .add(&prod(&[&t1, x, &w4, x]).plus_adjoint().mul(&self.ttr_y(&[&t3, x, &w2, x])))
            .sub(&prod(&[&w1, x, &t4, x]).plus_adjoint().mul(&self.ttr_y(&[&w3, x, &t2, x])));
        let a = quad.add(&tr);
        [0, 1, 2, 3].map(|k| a.block(k))
    }

    /// Effective-Hamiltonian integrand with its overall minus sign.
    pub fn heff(&self, q: &Quad<T>) -> Quad<T> {
        let [_, w2, w3, w4] = Self::positions(q);
        let one = Mat8::identity();
        let [t2, t3, t4] = [w2, w3, w4].map(|w| one.sub(&w));
        let (e, x) = (&self.veq, &self.vx);
        let h = prod(&[e, &w2, x, &t3, e, &w4, x])
            .add(&prod(&[x, &w4, e, &t3, x, &w2, e]))
            .add(&prod(&[e, &t2, x, &w3, e, &t4, x]))
            .add(&prod(&[x, &t4, e, &w3, x, &t2, e]))
            .add(&prod(&[e, &w2, e]).mul(&self.ttr_y(&[&t3, e, &w4, e])))
            .add(&prod(&[e, &t2, e]).mul(&self.ttr_y(&[&w3, e, &t4, e])))
            .add(&prod(&[x, &w4, x]).mul(&self.ttr_y(&[&t3, x, &w2, x])))
            .add(&prod(&[x, &t4, x]).mul(&self.ttr_y(&[&w3, x, &t2, x])))
            .neg();
        [0, 1, 2, 3].map(|k| h.block(k))
    }
}

/// `sqrt(min(m ε) / (m_own ε_own))`, 1 when the own shell is at the origin.
fn kinematic<T: Real>(model: &Model<T>, own: Species, eps: [T; 4]) -> T {
    let me = Species::ALL.map(|s| model.masses.of(s) * eps[s.index()]);
    let own_me = me[own.index()];
    if own_me == T::zero() {
        return T::one();
    }
    let min = me.iter().fold(T::infinity(), |a, &b| a.min(b));
    (min / own_me).sqrt()
}

fn quad_at<T: Real>(w: &WignerField<T>, shells: [usize; 4]) -> Quad<T> {
    Species::ALL.map(|s| *w.block(s, shells[s.index()]))
}

/// Dissipative operator by a direct loop over all on-shell quadruples.
pub fn diss_operator_bruteforce<T: Real>(w: &WignerField<T>, model: &Model<T>) -> WignerField<T> {
    let grid = *w.grid();
    let n = grid.n();
    let kd = model.rates.diss_constant::<T>();
    let h = grid.h();
    let mut out = WignerField::zeros(grid);
    for ia in 0..n {
        for ib in 0..n {
            for ic in 0..n {
                for id in 0..n {
                    if ia + ic != ib + id {
                        continue;
                    }
                    let shells = [ia, ib, ic, id];
                    let integrand = diss_integrand(&model.vop, &quad_at(w, shells));
                    let eps = shells.map(|j| grid.eps(j));
                    for s in Species::ALL {
                        let pre = kd * model.masses.others(s) * h * h;
                        let k = pre * kinematic(model, s, eps);
                        let b = out.block_mut(s, shells[s.index()]);
                        *b = *b + integrand[s.index()].scale(k);
                    }
                }
            }
        }
    }
    out
}

/// Effective Hamiltonian by a direct loop over all non-resonant quadruples.
pub fn heff_bruteforce<T: Real>(w: &WignerField<T>, model: &Model<T>) -> WignerField<T> {
    let grid = *w.grid();
    let n = grid.n();
    let kc = model.rates.cons_constant::<T>();
    let h = grid.h();
    let mut out = WignerField::zeros(grid);
    for ia in 0..n {
        for ib in 0..n {
            for ic in 0..n {
                for id in 0..n {
                    let offset = (ia + ic) as isize - (ib + id) as isize;
                    if offset == 0 {
                        continue;
                    }
                    let shells = [ia, ib, ic, id];
                    let integrand = heff_integrand(&model.vop, &quad_at(w, shells));
                    let eps = shells.map(|j| grid.eps(j));
                    let delta = eps[0] - eps[1] + eps[2] - eps[3];
                    for s in Species::ALL {
                        let pre = kc * model.masses.others(s) * h * h * h;
                        let denom = delta * T::from_i32(denominator_sign(s)).unwrap();
                        let k = pre * kinematic(model, s, eps) / denom;
                        let b = out.block_mut(s, shells[s.index()]);
                        *b = *b + integrand[s.index()].scale(k);
                    }
                }
            }
        }
    }
    out
}

/// Conservative operator from [`heff_bruteforce`].
pub fn cons_operator_bruteforce<T: Real>(w: &WignerField<T>, model: &Model<T>) -> WignerField<T> {
    commutator_rate(&heff_bruteforce(w, model), w)
}
