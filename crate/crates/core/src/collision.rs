//! Dissipative and conservative collision operators on the energy grid.
//!
//! Shells of a quadruple are labelled by species: `(ia, ib, ic, id)` with
//! `εa − εb + εc − εd = 0` on shell. The dissipative sum for species `a` at
//! shell `ia` runs over all `(ib, id)` with `ic = ib + id − ia` inside the
//! grid, with uniform weight `h²`. The other species follow by the
//! permutations `a↔b, c↔d`, `a↔c, b↔d` and `a↔d, b↔c`.
//!
//! The fast path precomputes per RHS the pair products
//! `𝒱 (Wb ⊗ Wd) 𝒱†` and `𝒱† (Wa ⊗ Wc) 𝒱` (and their complements), already
//! contracted against a Hermitian basis of the remaining tensor factor. The
//! principal-value sum over the free shell is evaluated from prefix tables
//! split at the shell where the kinematic `min` switches branch.

use rayon::prelude::*;

use crate::grid::{EnergyGrid, WignerField};
use crate::model::{Model, Species, VOp};
use crate::scalar::{Cplx, Real};
use crate::spinalg::{reduce_first, reduce_second, tensor, PairBlock, Side, SpinBlock};

/// Dissipative rate, conservative rate and their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionOutput<T: Real> {
    pub total: WignerField<T>,
    pub diss: WignerField<T>,
    pub cons: WignerField<T>,
}

/// Options for [`rhs`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RhsOptions {
    pub include_cons: bool,
}

impl Default for RhsOptions {
    fn default() -> Self {
        RhsOptions { include_cons: true }
    }
}

/// Hermitian basis matching [`SpinBlock::to_hermitian_parts`].
fn hermitian_basis<T: Real>() -> [SpinBlock<T>; 4] {
    let (o, z) = (T::one(), T::zero());
    let i = Cplx::new(z, o);
    [
        SpinBlock::diag(o, z),
        SpinBlock::diag(z, o),
        SpinBlock::from_real([z, o, o, z]),
        SpinBlock::new(Cplx::new(z, z), i, -i, Cplx::new(z, z)),
    ]
}

#[inline]
fn acc_scaled<T: Real>(acc: &mut SpinBlock<T>, m: &SpinBlock<T>, s: T) {
    for r in 0..2 {
        for c in 0..2 {
            acc.e[r][c] = acc.e[r][c] + m.e[r][c] * s;
        }
    }
}

/// Which pair of species sits opposite the output species.
#[derive(Clone, Copy)]
struct Role {
    own: Species,
    free: Species,
    x: Species,
    y: Species,
    side: Side,
    /// `true` for the `(b, d)` pair products `𝒱 (· ⊗ ·) 𝒱†`.
    left: bool,
}

const ROLES: [Role; 4] = [
    Role { own: Species::A, free: Species::C, x: Species::B, y: Species::D, side: Side::First, left: true },
    Role { own: Species::B, free: Species::D, x: Species::A, y: Species::C, side: Side::First, left: false },
    Role { own: Species::C, free: Species::A, x: Species::B, y: Species::D, side: Side::Second, left: true },
    Role { own: Species::D, free: Species::B, x: Species::A, y: Species::C, side: Side::Second, left: false },
];

/// Pair products contracted with the Hermitian basis of the remaining factor.
struct Reduced<T: Real> {
    /// From the occupied pair `W ⊗ W`.
    occ: [SpinBlock<T>; 4],
    /// From the empty pair `W̃ ⊗ W̃`.
    emp: [SpinBlock<T>; 4],
}

/// Kinematic tables and prefactors for one model on one grid.
#[derive(Clone, Debug)]
pub struct CollisionKernel<T: Real> {
    grid: EnergyGrid<T>,
    vop: PairBlock<T>,
    vop_adj: PairBlock<T>,
    /// `sqrt(m ε_j)` per species; proportional to `|p|`.
    ptil: [Vec<T>; 4],
    /// `1 / ptil`, with 0 at the origin shell.
    inv_ptil: [Vec<T>; 4],
    /// For species `s` and shell `j`, the number of shells of species
    /// `free(own)` with `ptil < ptil[s][j]`, per role.
    thresholds: [[Vec<usize>; 4]; 4],
    pre_diss: [T; 4],
    pre_cons: [T; 4],
}

impl<T: Real> CollisionKernel<T> {
    pub fn new(model: &Model<T>, grid: EnergyGrid<T>) -> Self {
        let n = grid.n();
        let ptil = Species::ALL.map(|s| {
            let m = model.masses.of(s);
            (0..n).map(|j| (m * grid.eps(j)).sqrt()).collect::<Vec<_>>()
        });
        let inv_ptil = ptil
            .clone()
            .map(|v| v.iter().map(|&p| if p > T::zero() { p.recip() } else { T::zero() }).collect());
        let thresholds = ROLES.map(|role| {
            let free = &ptil[role.free.index()];
            Species::ALL.map(|s| ptil[s.index()].iter().map(|&p| free.partition_point(|&f| f < p)).collect())
        });
        let h = grid.h();
        let (kd, kc) = (model.rates.diss_constant::<T>(), model.rates.cons_constant::<T>());
        let pre_diss = Species::ALL.map(|s| kd * model.masses.others(s) * h * h);
        // One factor 1/h of the energy denominator is folded in here.
        let pre_cons = Species::ALL.map(|s| kc * model.masses.others(s) * h * h);
        CollisionKernel {
            grid,
            vop: model.vop.matrix,
            vop_adj: model.vop.adjoint(),
            ptil,
            inv_ptil,
            thresholds,
            pre_diss,
            pre_cons,
        }
    }

    pub fn grid(&self) -> &EnergyGrid<T> {
        &self.grid
    }

    /// Prefactor of the dissipative sum for species `s`, including `h²`.
    pub fn diss_prefactor(&self, s: Species) -> T {
        self.pre_diss[s.index()]
    }

    /// Prefactor of the effective-Hamiltonian sum for species `s`, including `h³`.
    pub fn cons_prefactor(&self, s: Species) -> T {
        self.pre_cons[s.index()] * self.grid.h()
    }

    /// `min(|p|) / |p_own|` for a quadruple, 1 at the origin shell of `own`.
    #[inline]
    pub fn kinematic_factor(&self, own: Species, shells: [usize; 4]) -> T {
        let j = shells[own.index()];
        if j == 0 {
            return T::one();
        }
        let mut m = self.ptil[0][shells[0]];
        for s in 1..4 {
            m = m.min(self.ptil[s][shells[s]]);
        }
        m * self.inv_ptil[own.index()][j]
    }

    fn pair_tables(&self, w: &WignerField<T>) -> [Vec<Reduced<T>>; 4] {
        let n = self.grid.n();
        let basis = hermitian_basis::<T>();
        let one = SpinBlock::identity();
        // (b, d) products feed species a and c; (a, c) products feed b and d.
        let build = |x: Species, y: Species, left: bool| -> Vec<(PairBlock<T>, PairBlock<T>)> {
            (0..n * n)
                .into_par_iter()
                .map(|k| {
                    let (ix, iy) = (k / n, k % n);
                    let wx = w.block(x, ix);
                    let wy = w.block(y, iy);
                    let occ = tensor(wx, wy);
                    let emp = tensor(&(one - *wx), &(one - *wy));
                    if left {
                        (occ.sandwich(&self.vop, &self.vop), emp.sandwich(&self.vop, &self.vop))
                    } else {
                        (occ.sandwich(&self.vop_adj, &self.vop_adj), emp.sandwich(&self.vop_adj, &self.vop_adj))
                    }
                })
                .collect()
        };
        let g = build(Species::B, Species::D, true);
        let r = build(Species::A, Species::C, false);
        ROLES.map(|role| {
            let src = if role.left { &g } else { &r };
            src.par_iter()
                .map(|(occ, emp)| {
                    let red = |m: &PairBlock<T>| {
                        basis.map(|b| match role.side {
                            Side::First => reduce_first(m, &b),
                            Side::Second => reduce_second(m, &b),
                        })
                    };
                    Reduced { occ: red(occ), emp: red(emp) }
                })
                .collect()
        })
    }

    /// Dissipative operator, optionally with the effective Hamiltonian.
    fn evaluate(&self, w: &WignerField<T>, want_cons: bool) -> (WignerField<T>, Option<WignerField<T>>) {
        let n = self.grid.n();
        let tables = self.pair_tables(w);
        let parts: Vec<Vec<[T; 4]>> = Species::ALL
            .iter()
            .map(|&s| w.species(s).iter().map(|b| b.to_hermitian_parts()).collect())
            .collect();
        let mut diss = WignerField::zeros(self.grid);
        let mut heff = want_cons.then(|| WignerField::zeros(self.grid));
        for (r, role) in ROLES.iter().enumerate() {
            let table = &tables[r];
            let free_parts = &parts[role.free.index()];
            let pv = want_cons.then(|| PvTable::new(&self.ptil[role.free.index()], free_parts));
            let out: Vec<(SpinBlock<T>, SpinBlock<T>)> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let d = self.diss_shell(role, i, w, table, free_parts);
                    let h = pv.as_ref().map_or(SpinBlock::zero(), |pv| self.heff_shell(role, i, table, pv));
                    (d, h)
                })
                .collect();
            for (i, (d, h)) in out.into_iter().enumerate() {
                *diss.block_mut(role.own, i) = d;
                if let Some(hf) = heff.as_mut() {
                    *hf.block_mut(role.own, i) = h;
                }
            }
        }
        (diss, heff)
    }

    fn diss_shell(
        &self,
        role: &Role,
        i: usize,
        w: &WignerField<T>,
        table: &[Reduced<T>],
        free_parts: &[[T; 4]],
    ) -> SpinBlock<T> {
        let n = self.grid.n();
        let (o, fr, xs, ys) = (role.own.index(), role.free.index(), role.x.index(), role.y.index());
        let p_own = self.ptil[o][i];
        let inv = if i == 0 { T::zero() } else { self.inv_ptil[o][i] };
        let mut s_occ = SpinBlock::zero();
        let mut s_emp = SpinBlock::zero();
        for ix in 0..n {
            let p_x = self.ptil[xs][ix].min(p_own);
            let lo = i.saturating_sub(ix);
            let hi = (n + i).saturating_sub(ix).min(n);
            for iy in lo..hi {
                let f = ix + iy - i;
                let dk = if i == 0 {
                    T::one()
                } else {
                    p_x.min(self.ptil[ys][iy]).min(self.ptil[fr][f]) * inv
                };
                let y = free_parts[f];
                let yt = [T::one() - y[0], T::one() - y[1], -y[2], -y[3]];
                let red = &table[ix * n + iy];
                // the occupied (x, y) pair meets the empty free block and vice versa
                for k in 0..4 {
                    acc_scaled(&mut s_occ, &red.occ[k], dk * yt[k]);
                    acc_scaled(&mut s_emp, &red.emp[k], dk * y[k]);
                }
            }
        }
        let wo = w.block(role.own, i);
        let wt = wo.complement();
        (wt.anticommutator(&s_occ) - wo.anticommutator(&s_emp)).scale(self.pre_diss[o])
    }

    fn heff_shell(&self, role: &Role, i: usize, table: &[Reduced<T>], pv: &PvTable<T>) -> SpinBlock<T> {
        let n = self.grid.n();
        let (o, xs, ys) = (role.own.index(), role.x.index(), role.y.index());
        let r = ROLES.iter().position(|q| q.own == role.own).unwrap();
        let thr = &self.thresholds[r];
        let p_own = self.ptil[o][i];
        let mut acc = SpinBlock::zero();
        for ix in 0..n {
            let p_x = self.ptil[xs][ix].min(p_own);
            let t_x = thr[xs][ix].min(thr[o][i]);
            for iy in 0..n {
                let q = (ix + iy) as isize - i as isize;
                let ch = if i == 0 {
                    pv.all(q)
                } else {
                    let p = p_x.min(self.ptil[ys][iy]);
                    let t = t_x.min(thr[ys][iy]);
                    pv.split(q, t, p)
                };
                let red = &table[ix * n + iy];
                let ident = red.occ[0] + red.occ[1];
                acc_scaled(&mut acc, &ident, ch[0]);
                for k in 0..4 {
                    acc_scaled(&mut acc, &(red.emp[k] - red.occ[k]), ch[k + 1]);
                }
            }
        }
        let scale = if i == 0 { T::one() } else { self.inv_ptil[o][i] };
        acc.scale(self.pre_cons[o] * scale)
    }

    /// Dissipative operator at every shell.
    pub fn diss(&self, w: &WignerField<T>) -> WignerField<T> {
        self.evaluate(w, false).0
    }

    /// Effective Hamiltonian at every shell.
    pub fn heff(&self, w: &WignerField<T>) -> WignerField<T> {
        let (_, h) = self.evaluate(w, true);
        h.expect("requested")
    }

    /// `−i [H_eff, W]` at every shell.
    pub fn cons(&self, w: &WignerField<T>) -> WignerField<T> {
        commutator_rate(&self.heff(w), w)
    }

    pub fn rhs(&self, w: &WignerField<T>, opts: RhsOptions) -> CollisionOutput<T> {
        let (diss, heff) = self.evaluate(w, opts.include_cons);
        let cons = match heff {
            Some(h) => commutator_rate(&h, w),
            None => WignerField::zeros(self.grid),
        };
        let total = diss.zip_map(&cons, |a, b| *a + *b);
        CollisionOutput { total, diss, cons }
    }
}

/// `−i [H, W]` blockwise.
pub fn commutator_rate<T: Real>(h: &WignerField<T>, w: &WignerField<T>) -> WignerField<T> {
    let mi = Cplx::new(T::zero(), -T::one());
    h.zip_map(w, |h, w| h.commutator(w).scale_c(mi))
}

/// Principal-value sums over the free shell `f` for every offset `q`:
/// channel 0 sums `1 / (f − q)`, channels 1..5 sum the Hermitian parts of the
/// free block over `(f − q)`. Resonant terms `f = q` are omitted.
struct PvTable<T: Real> {
    n: usize,
    /// `Σ_{f < t} ptil_f · g(f) / (f − q)`, indexed `[q][t][channel]`.
    lower: Vec<[T; 5]>,
    /// `Σ_{f ≥ t} g(f) / (f − q)`.
    upper: Vec<[T; 5]>,
}

impl<T: Real> PvTable<T> {
    fn new(ptil: &[T], parts: &[[T; 4]]) -> Self {
        let n = ptil.len();
        let nq = 3 * n - 2;
        let mut lower = vec![[T::zero(); 5]; nq * (n + 1)];
        let mut upper = vec![[T::zero(); 5]; nq * (n + 1)];
        let chan = |f: usize| -> [T; 5] {
            let p = parts[f];
            [T::one(), p[0], p[1], p[2], p[3]]
        };
        for qi in 0..nq {
            let q = qi as isize - (n as isize - 1);
            let base = qi * (n + 1);
            for t in 0..n {
                let mut next = lower[base + t];
                if t as isize != q {
                    let inv = T::from_isize(t as isize - q).unwrap().recip();
                    let g = chan(t);
                    for c in 0..5 {
                        next[c] = next[c] + ptil[t] * g[c] * inv;
                    }
                }
                lower[base + t + 1] = next;
            }
            for t in (0..n).rev() {
                let mut next = upper[base + t + 1];
                if t as isize != q {
                    let inv = T::from_isize(t as isize - q).unwrap().recip();
                    let g = chan(t);
                    for c in 0..5 {
                        next[c] = next[c] + g[c] * inv;
                    }
                }
                upper[base + t] = next;
            }
        }
        PvTable { n, lower, upper }
    }

    #[inline]
    fn index(&self, q: isize, t: usize) -> usize {
        (q + self.n as isize - 1) as usize * (self.n + 1) + t
    }

    /// `Σ_f min(p, ptil_f) g(f) / (f − q)` where `t` shells have `ptil_f < p`.
    #[inline]
    fn split(&self, q: isize, t: usize, p: T) -> [T; 5] {
        let k = self.index(q, t);
        let (l, u) = (&self.lower[k], &self.upper[k]);
        [
            l[0] + p * u[0],
            l[1] + p * u[1],
            l[2] + p * u[2],
            l[3] + p * u[3],
            l[4] + p * u[4],
        ]
    }

    /// `Σ_f g(f) / (f − q)`.
    #[inline]
    fn all(&self, q: isize) -> [T; 5] {
        self.upper[self.index(q, 0)]
    }
}

/// Dissipative operator for a model on the field's grid.
pub fn diss_operator<T: Real>(w: &WignerField<T>, model: &Model<T>) -> WignerField<T> {
    CollisionKernel::new(model, *w.grid()).diss(w)
}

/// Conservative operator `−i [H_eff, W]` for a model on the field's grid.
pub fn cons_operator<T: Real>(w: &WignerField<T>, model: &Model<T>) -> WignerField<T> {
    CollisionKernel::new(model, *w.grid()).cons(w)
}

/// Full collision operator.
pub fn rhs<T: Real>(w: &WignerField<T>, model: &Model<T>, opts: RhsOptions) -> CollisionOutput<T> {
    CollisionKernel::new(model, *w.grid()).rhs(w, opts)
}

/// Blocks of one quadruple, indexed by species.
pub type Quad<T> = [SpinBlock<T>; 4];

fn unit_out<T: Real>(f: impl Fn(&SpinBlock<T>) -> Cplx<T>) -> SpinBlock<T> {
    let mut out = SpinBlock::zero();
    for s in 0..2 {
        for t in 0..2 {
            // |τ⟩⟨σ| has its single unit entry at (τ, σ)
            out.e[s][t] = f(&SpinBlock::unit(t, s));
        }
    }
    out
}

fn tr_prod<T: Real>(a: &PairBlock<T>, b: &PairBlock<T>) -> Cplx<T> {
    (*a * *b).trace()
}

/// Dissipative integrand at one on-shell quadruple in direct trace form;
/// returns the component of every species.
pub fn diss_integrand<T: Real>(vop: &VOp<T>, q: &Quad<T>) -> Quad<T> {
    let [wa, wb, wc, wd] = q;
    let [ta, tb, tc, td] = q.map(|b| b.complement());
    let v = vop.matrix;
    let va = vop.adjoint();
    let g = tensor(wb, wd).sandwich(&v, &v);
    let gt = tensor(&tb, &td).sandwich(&v, &v);
    let r = tensor(wa, wc).sandwich(&va, &va);
    let rt = tensor(&ta, &tc).sandwich(&va, &va);
    let ac = |x: &SpinBlock<T>, e: &SpinBlock<T>| x.anticommutator(e);
    [
        unit_out(|e| tr_prod(&tensor(&ac(&ta, e), &tc), &g) - tr_prod(&tensor(&ac(wa, e), wc), &gt)),
        unit_out(|e| tr_prod(&tensor(&ac(&tb, e), &td), &r) - tr_prod(&tensor(&ac(wb, e), wd), &rt)),
        unit_out(|e| tr_prod(&tensor(&ta, &ac(&tc, e)), &g) - tr_prod(&tensor(wa, &ac(wc, e)), &gt)),
        unit_out(|e| tr_prod(&tensor(&tb, &ac(&td, e)), &r) - tr_prod(&tensor(wb, &ac(wd, e)), &rt)),
    ]
}

/// Effective-Hamiltonian integrand in direct trace form. The own-species
/// block of `q` is ignored for each component.
pub fn heff_integrand<T: Real>(vop: &VOp<T>, q: &Quad<T>) -> Quad<T> {
    let [wa, wb, wc, wd] = q;
    let [ta, tb, tc, td] = q.map(|b| b.complement());
    let v = vop.matrix;
    let va = vop.adjoint();
    let g = tensor(wb, wd).sandwich(&v, &v);
    let gt = tensor(&tb, &td).sandwich(&v, &v);
    let r = tensor(wa, wc).sandwich(&va, &va);
    let rt = tensor(&ta, &tc).sandwich(&va, &va);
    [
        unit_out(|e| tr_prod(&tensor(e, &tc), &g) + tr_prod(&tensor(e, wc), &gt)),
        unit_out(|e| tr_prod(&tensor(e, &td), &r) + tr_prod(&tensor(e, wd), &rt)),
        unit_out(|e| tr_prod(&tensor(&ta, e), &g) + tr_prod(&tensor(wa, e), &gt)),
        unit_out(|e| tr_prod(&tensor(&tb, e), &r) + tr_prod(&tensor(wb, e), &rt)),
    ]
}

/// Sign of the energy denominator for species `s` relative to
/// `εa − εb + εc − εd`.
pub fn denominator_sign(s: Species) -> i32 {
    match s {
        Species::A | Species::C => 1,
        Species::B | Species::D => -1,
    }
}
