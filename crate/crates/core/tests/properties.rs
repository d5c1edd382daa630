//! Property tests of the invariants of every module.

use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

use spinkin::collision::{diss_integrand, CollisionKernel as Kernel, RhsOptions};
use spinkin::conservation::{
    classify_with_gauge, conserved_functionals, evaluate_conserved, evaluate_functional, Functional,
    StructureKind, PATTERN_TOL,
};
use spinkin::entropy::{entropy, entropy_production};
use spinkin::equilibrium::{chemical_potentials, fermi_dirac, fit_equilibrium, FitOptions, SpinShifts};
use spinkin::grid::{density_matrix, l1_distance};
use spinkin::integrator::run;
use spinkin::model::{apply_gauge, build_vop};
use spinkin::scalar::Cplx;
use spinkin::spinalg::{eig_hermitian, partial_trace, tensor, Side};
use spinkin::{
    Diagnostics, EnergyGrid, EquilibriumParams, GaugeRotation, InteractionSet, Masses, Model, MomentWeights, Preset, Species, SpinBlock, StepConfig, StructureClass,
    WignerField,
};

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn any_block(r: &mut StdRng) -> SpinBlock {
    let mut c = || Cplx::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
    SpinBlock::new(c(), c(), c(), c())
}

fn hermitian_block(r: &mut StdRng) -> SpinBlock {
    SpinBlock::hermitian(
        r.gen_range(-1.0..1.0),
        r.gen_range(-1.0..1.0),
        Cplx::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
    )
}

fn physical_block(r: &mut StdRng) -> SpinBlock {
    let a: f64 = r.gen_range(0.02..0.98);
    let d: f64 = r.gen_range(0.02..0.98);
    let rad = 0.95 * (a.min(1.0 - a) * d.min(1.0 - d)).sqrt();
    let m: f64 = r.gen_range(0.0..1.0);
    SpinBlock::hermitian(a, d, Cplx::from_polar(m * rad, r.gen_range(0.0..std::f64::consts::TAU)))
}

fn physical_field(r: &mut StdRng, grid: EnergyGrid) -> WignerField {
    WignerField::from_fn(grid, |_, _| physical_block(r))
}

fn unitary(r: &mut StdRng) -> SpinBlock {
    let h = hermitian_block(r);
    let e = eig_hermitian(&h).unwrap();
    let phase = |x: f64| Cplx::from_polar(1.0, 3.0 * x);
    let v = e.vectors();
    v * SpinBlock::new(phase(e.values[0]), Cplx::new(0.0, 0.0), Cplx::new(0.0, 0.0), phase(e.values[1])) * v.adjoint()
}

fn micro_grid() -> EnergyGrid {
    EnergyGrid::new_unchecked_size(7, 0.45).unwrap()
}

fn diagonal_interactions(r: &mut StdRng) -> InteractionSet {
    let mut d = || SpinBlock::diag(r.gen_range(0.3..2.0), r.gen_range(-2.0..-0.3));
    InteractionSet {
        ab: d(),
        cd: d(),
        ad: d(),
        cb: d(),
    }
}

fn models(seed: u64) -> Vec<(Model, StructureClass)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for p in [Preset::BetaDecay, Preset::ZeroFrame, Preset::ZeroFrameRotated] {
        let m = Model::preset(p);
        let (c, _) = classify_with_gauge(&m.vop, &p.gauge(), PATTERN_TOL).unwrap();
        out.push((m, c));
    }
    let m = Model::new(Masses::default(), diagonal_interactions(&mut r)).unwrap();
    out.push((m, StructureClass::new(StructureKind::DiagonalPattern)));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_bilinear(seed in any::<u64>(), s in -2.0f64..2.0) {
        let mut r = rng(seed);
        let (a, a2, b) = (any_block(&mut r), any_block(&mut r), any_block(&mut r));
        let lhs = tensor(&(a + a2.scale(s)), &b);
        let rhs = tensor(&a, &b) + tensor(&a2, &b).scale(s);
        prop_assert!((lhs - rhs).max_abs() <= 1e-14);
        let lhs = tensor(&b, &(a + a2.scale(s)));
        let rhs = tensor(&b, &a) + tensor(&b, &a2).scale(s);
        prop_assert!((lhs - rhs).max_abs() <= 1e-14);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (any_block(&mut r), any_block(&mut r));
        let m = tensor(&a, &b);
        prop_assert!((partial_trace(Side::First, &m) - b.scale_c(a.trace())).max_abs() <= 1e-14);
        prop_assert!((partial_trace(Side::Second, &m) - a.scale_c(b.trace())).max_abs() <= 1e-14);
    }

    #[test]
    fn eigen_reconstruction(seed in any::<u64>()) {
        let mut r = rng(seed);
        for _ in 0..16 {
            let h = hermitian_block(&mut r);
            let e = eig_hermitian(&h).unwrap();
            prop_assert!(e.values[0] <= e.values[1]);
            prop_assert!((e.reconstruct() - h).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn build_vop_is_linear_in_each_matrix(seed in any::<u64>(), s in 0.5f64..2.0) {
        let mut r = rng(seed);
        let v = InteractionSet { ab: unitary(&mut r), cd: unitary(&mut r), ad: unitary(&mut r), cb: unitary(&mut r) };
        let base = build_vop(&v).unwrap().matrix;
        for k in 0..4 {
            let mut v2 = v;
            let target = [&mut v2.ab, &mut v2.cd, &mut v2.ad, &mut v2.cb];
            let old = *target[k];
            *target[k] = old.scale(s);
            let scaled = build_vop(&v2).unwrap().matrix;
            // the term containing matrix k scales by s, the other is unchanged
            let term = match k {
                0 | 1 => tensor(&v.ab, &v.cd),
                _ => base - tensor(&v.ab, &v.cd),
            };
            prop_assert!((scaled - (base + term.scale(s - 1.0))).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn identity_family_is_rotation_invariant(seed in any::<u64>(), cv in 0.2f64..2.0, ca in -2.0f64..-0.2) {
        let mut r = rng(seed);
        let vop = build_vop(&spinkin::model::beta_decay_interactions(cv, ca).unwrap()).unwrap();
        let u = unitary(&mut r);
        let uu = tensor(&u, &u);
        prop_assert!((vop.matrix.sandwich(&uu, &uu) - vop.matrix).max_abs() <= 1e-12);
    }

    #[test]
    fn gauge_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = GaugeRotation::new([0; 4].map(|_| unitary(&mut r))).unwrap();
        let v = Preset::ZeroFrame.interactions::<f64>();
        let w = physical_field(&mut r, micro_grid());
        let (v1, w1) = apply_gauge(&g, &v, &w).unwrap();
        let (v2, w2) = apply_gauge(&g.inverse(), &v1, &w1).unwrap();
        for (x, y) in [(v2.ab, v.ab), (v2.cd, v.cd), (v2.ad, v.ad), (v2.cb, v.cb)] {
            prop_assert!((x - y).max_abs() <= 1e-12);
        }
        prop_assert!(w2.zip_map(&w, |a, b| *a - *b).max_abs() <= 1e-12);
    }

    #[test]
    fn moments_are_linear_and_hermitian(seed in any::<u64>(), s in -3.0f64..3.0) {
        let mut r = rng(seed);
        let g = micro_grid();
        let wts = MomentWeights::new(&g, &Masses::default());
        let x = physical_field(&mut r, g);
        let y = physical_field(&mut r, g);
        let comb = x.axpy(s, &y);
        for f in conserved_functionals(StructureKind::IdentityFamily).into_iter().chain([Functional::SigmaZAC]) {
            let lhs = evaluate_functional(f, &comb, &wts);
            let rhs = evaluate_functional(f, &x, &wts) + s * evaluate_functional(f, &y, &wts);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
        for sp in Species::ALL {
            prop_assert!(density_matrix(&x, &wts, sp).hermiticity_defect() <= 1e-13);
        }
    }

    #[test]
    fn redundancy_of_pair_traces(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = micro_grid();
        let wts = MomentWeights::new(&g, &Masses::default());
        let w = physical_field(&mut r, g);
        let tr = |s| density_matrix(&w, &wts, s).tr();
        let cd = tr(Species::C) + tr(Species::D);
        let expect = evaluate_functional(Functional::TotalTrace, &w, &wts) - evaluate_functional(Functional::PairAB, &w, &wts);
        prop_assert!((cd - expect).abs() <= 1e-12 * cd.abs());
    }

    #[test]
    fn particle_hole_antisymmetry(seed in any::<u64>()) {
        let mut r = rng(seed);
        let vop = build_vop(&Preset::ZeroFrameRotated.interactions::<f64>()).unwrap();
        let q = [0; 4].map(|_| physical_block(&mut r));
        let a = diss_integrand(&vop, &q);
        let b = diss_integrand(&vop, &q.map(|x| x.complement()));
        for k in 0..4 {
            prop_assert!((a[k] + b[k]).max_abs() <= 1e-12 * a[k].max_abs().max(1.0));
        }
    }

    #[test]
    fn classification_is_gauge_stable(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = GaugeRotation::new([0; 4].map(|_| unitary(&mut r))).unwrap();
        let diag = Model::new(Masses::default(), diagonal_interactions(&mut r)).unwrap();
        for (vop, kind) in [
            (Model::preset(Preset::ZeroFrame).vop, StructureKind::ZeroOuterFrame),
            (diag.vop, StructureKind::DiagonalPattern),
            (Model::preset(Preset::BetaDecay).vop, StructureKind::IdentityFamily),
        ] {
            let (c, _) = classify_with_gauge(&vop.rotate(&g), &g, PATTERN_TOL).unwrap();
            prop_assert_eq!(c.kind, kind);
        }
    }

    #[test]
    fn fermi_dirac_is_physical(beta in 0.05f64..50.0, nu in prop::array::uniform3(-3.3f64..3.3), c in -3.3f64..3.3) {
        let mut p = EquilibriumParams::simple(beta, nu);
        p.spin_shifts = SpinShifts::Common(c);
        let w = fermi_dirac(&p, EnergyGrid::default()).unwrap();
        prop_assert!(w.validate_physical().is_ok());
        prop_assert!(w.max_hermiticity_defect() == 0.0);
    }

    #[test]
    fn chemical_potentials_annihilate_coupled_channels(nu in prop::array::uniform3(-2.0f64..2.0), ac in -1.0f64..1.0, bd in -1.0f64..1.0) {
        let mut p = EquilibriumParams::simple(1.0, nu);
        p.spin_shifts = SpinShifts::Paired { ac, bd };
        let mu = chemical_potentials(StructureKind::ZeroOuterFrame, &p).unwrap();
        for row in 0..4 {
            for col in 0..4 {
                if StructureKind::ZeroOuterFrame.allows(row, col) {
                    let f = mu[0][row / 2] - mu[1][col / 2] + mu[2][row % 2] - mu[3][col % 2];
                    prop_assert!(f.abs() <= 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rhs_is_hermitian_and_conserving(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = micro_grid();
        for (model, class) in models(seed) {
            let w = physical_field(&mut r, g);
            let wts = MomentWeights::new(&g, &model.masses);
            let out = Kernel::new(&model, g).rhs(&w, RhsOptions::default());
            let scale = out.total.max_abs();
            prop_assert!(out.total.max_hermiticity_defect() <= 1e-12 * scale);
            let moment_scale: f64 = Species::ALL.iter()
                .flat_map(|&s| wts.of(s).iter().enumerate().map(move |(j, x)| x * (1.0 + g.eps(j))))
                .sum();
            for part in [&out.diss, &out.cons] {
                let q = evaluate_conserved(part, &class, &wts);
                for (f, v) in q.functionals.iter().zip(&q.values) {
                    prop_assert!(v.abs() <= 1e-12 * scale * moment_scale, "{:?} {} on {:?}", f, v, class.kind);
                }
            }
        }
    }

    #[test]
    fn spin_laws_at_rhs_level(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = micro_grid();
        let wts = MomentWeights::new(&g, &Masses::default());
        let diag = Model::new(Masses::default(), diagonal_interactions(&mut r)).unwrap();
        let w = physical_field(&mut r, g);
        let c = Kernel::new(&diag, g).diss(&w);
        let up: f64 = Species::ALL.iter().map(|&s| density_matrix(&c, &wts, s).e[0][0].re).sum();
        prop_assert!(up.abs() <= 1e-12 * c.max_abs() * wts.of(Species::A).iter().sum::<f64>());
        let zf = Model::preset(Preset::ZeroFrame);
        let c = Kernel::new(&zf, g).rhs(&w, RhsOptions::default()).total;
        let sz = evaluate_functional(Functional::SigmaZAC, &c, &wts);
        prop_assert!(sz.abs() <= 1e-12 * c.max_abs() * wts.of(Species::A).iter().sum::<f64>());
    }

    #[test]
    fn entropy_production_is_nonnegative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = micro_grid();
        for (model, _) in models(seed) {
            for _ in 0..64 {
                prop_assert!(entropy_production(&physical_field(&mut r, g), &model) >= -1e-12);
            }
        }
    }

    #[test]
    fn fit_round_trip(beta in 0.4f64..2.0, nu in prop::array::uniform3(-0.5f64..0.5), c in -0.3f64..0.3) {
        let g = EnergyGrid::new(24, 0.5).unwrap();
        let model = Model::preset(Preset::BetaDecay);
        let mut p = EquilibriumParams::simple(beta, nu);
        p.spin_shifts = SpinShifts::Common(c);
        let w = fermi_dirac(&p, g).unwrap();
        let class = StructureClass::new(StructureKind::IdentityFamily);
        let fit = fit_equilibrium(&w, &class, &model.masses, &FitOptions::default()).unwrap();
        let wts = MomentWeights::new(&g, &model.masses);
        let back = evaluate_conserved(&fermi_dirac(&fit.params, g).unwrap(), &class, &wts);
        let orig = evaluate_conserved(&w, &class, &wts);
        let scale = orig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in back.values.iter().zip(&orig.values) {
            prop_assert!((a - b).abs() <= 1e-8 * scale);
        }
        prop_assert!((fit.params.beta - beta).abs() <= 1e-8 * beta);
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let g = EnergyGrid::new(12, 0.5).unwrap();
    let model = Model::preset(Preset::ZeroFrameRotated);
    let w = physical_field(&mut rng(5), g);
    let cfg = StepConfig {
        dt: 1e-3,
        t_end: 0.02,
        stride: 5,
        include_cons: true,
    };
    let mut diag = Diagnostics::new(StructureClass::new(StructureKind::General));
    diag.record_sigma = true;
    let a = run(&w, &cfg, &model, &diag).unwrap();
    let b = run(&w, &cfg, &model, &diag).unwrap();
    assert_eq!(a, b);
}

#[test]
fn entropy_rate_matches_production() {
    let grid = EnergyGrid::default();
    let model = Model::preset(Preset::BetaDecay);
    let (w0, _) = spinkin::initial::benchmark_state(grid).unwrap();
    let wts = MomentWeights::new(&grid, &model.masses);
    let dt = 1e-4;
    let cfg = StepConfig {
        dt,
        t_end: 2.0 * dt,
        stride: 1,
        include_cons: true,
    };
    let tr = run(&w0, &cfg, &model, &Diagnostics::new(StructureClass::new(StructureKind::IdentityFamily))).unwrap();
    // centred difference around the middle sample
    let rate = (tr.entropy_per_step[2] - tr.entropy_per_step[0]) / (2.0 * dt);
    let mid = &tr.samples[1];
    let w_mid = run(&w0, &StepConfig { t_end: dt, ..cfg }, &model, &Diagnostics::new(StructureClass::new(StructureKind::IdentityFamily)))
        .unwrap()
        .final_field;
    let sigma = entropy_production(&w_mid, &model);
    assert!((mid.entropy - entropy(&w_mid, &wts)).abs() <= 1e-12 * mid.entropy);
    assert!((rate - sigma).abs() <= 0.01 * sigma, "dS/dt {rate} vs sigma {sigma}");
}

#[test]
fn benchmark_moments_converge_under_refinement() {
    // The √ε threshold factor in the weights limits any fixed-node rule to order 3/2.
    const MIN_ORDER: f64 = 1.4;
    let model = Model::preset(Preset::BetaDecay);
    let class = StructureClass::new(StructureKind::IdentityFamily);
    let moments = |k: usize| {
        let g = EnergyGrid::default().refined(k);
        let (w, _) = spinkin::initial::benchmark_state(g).unwrap();
        evaluate_conserved(&w, &class, &MomentWeights::new(&g, &model.masses)).values
    };
    let m: Vec<_> = [1, 2, 4, 8].into_iter().map(moments).collect();
    for i in 0..m[0].len() {
        let d: Vec<f64> = (0..3).map(|k| (m[k][i] - m[k + 1][i]).abs()).collect();
        for k in 0..2 {
            let order = (d[k] / d[k + 1]).log2();
            assert!(order >= MIN_ORDER, "moment {i}: differences {d:?}, order {order}");
        }
    }
}

#[test]
fn distance_is_a_metric_on_samples() {
    let mut r = rng(11);
    let g = micro_grid();
    let wts = MomentWeights::new(&g, &Masses::default());
    let (x, y, z) = (physical_field(&mut r, g), physical_field(&mut r, g), physical_field(&mut r, g));
    let d = |a: &WignerField, b: &WignerField| l1_distance(a, b, &wts).unwrap();
    assert_eq!(d(&x, &x), 0.0);
    assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-13 * d(&x, &y));
    assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
}
