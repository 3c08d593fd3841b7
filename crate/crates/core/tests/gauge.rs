use std::sync::Arc;

use gaugeforge_core::algebra::{AlgebraSpec, BracketConvention, LambdaVector};
use gaugeforge_core::dynamics::{MatterLagrangian, MatterSpec};
use gaugeforge_core::fields::{FieldConfig, PotentialSpec, TranslationSource};
use gaugeforge_core::gauge::{
    action_invariance_check, covariance_scaling_check, vary_internal, vary_spacetime, Ablation, GaugeParams, ScalingReport,
    SCALING_BAND,
};
use gaugeforge_core::{build_poincare, parse, Exec, Expr, GridSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

fn e4(src: [&str; 4]) -> [Expr; 4] {
    src.map(e)
}

fn u1() -> Arc<AlgebraSpec> {
    Arc::new(
        AlgebraSpec::from_table(&["Q"], vec![0.0], BracketConvention::Paper)
            .unwrap()
            .with_representation("charge", vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])])
            .unwrap(),
    )
}

fn so3(conv: BracketConvention) -> Arc<AlgebraSpec> {
    let entries = [("L1", "L2", "L3", 1.0), ("L2", "L3", "L1", 1.0), ("L3", "L1", "L2", 1.0)];
    Arc::new(AlgebraSpec::from_entries(&["L1", "L2", "L3"], &entries, conv).unwrap())
}

fn random_exprs(rng: &mut ChaCha8Rng) -> [Expr; 4] {
    std::array::from_fn(|_| {
        let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        e(&format!("{a:.5}*sin({b:.5}*x0 + x1 - {c:.5}*x3) + {c:.5}*x2"))
    })
}

fn random_internal(alg: &Arc<AlgebraSpec>, seed: u64) -> (FieldConfig, GaugeParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = FieldConfig::new(alg.clone());
    let mut gp = GaugeParams::new(alg, 1e-3);
    for g in alg.generators() {
        cfg = cfg.with_potential(&g.label, PotentialSpec::Frame(random_exprs(&mut rng))).unwrap();
        let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        gp = gp.with(alg, &g.label, e(&format!("{a:.5}*cos(x0 - {b:.5}*x2) + 0.3*x1*x3"))).unwrap();
    }
    (cfg, gp)
}

#[test]
fn constant_abelian_gauge_function() {
    let alg = u1();
    let cfg = FieldConfig::new(alg.clone()).with_potential("Q", PotentialSpec::Frame(e4(["x1", "x2", "0", "1"]))).unwrap();
    let gp = GaugeParams::new(&alg, 1.0).with(&alg, "Q", e("3.5")).unwrap();
    assert_eq!(vary_internal(&cfg, &gp, &[0.1, 0.2, 0.3, 0.4]).unwrap(), vec![[0.0; 4]]);
}

#[test]
fn abelian_gradient_variation() {
    let alg = u1();
    let gp = GaugeParams::new(&alg, 1.0).with(&alg, "Q", e("x1")).unwrap();
    assert_eq!(vary_internal(&FieldConfig::new(alg), &gp, &[0.0; 4]).unwrap(), vec![[0.0, 1.0, 0.0, 0.0]]);
}

#[test]
fn homogeneous_variation_single_term() {
    // C^1_{23} = 1, f^(2) = c, A^(3) given: delta A^(1) = s' c A^(3)
    let c = 0.4;
    for (conv, sign) in [(BracketConvention::Standard, 1.0), (BracketConvention::Paper, -1.0)] {
        let alg = Arc::new(AlgebraSpec::from_entries(&["T1", "T2", "T3"], &[("T1", "T2", "T3", 1.0)], conv).unwrap());
        let cfg = FieldConfig::new(alg.clone()).with_potential("T3", PotentialSpec::Frame(e4(["x0", "2", "0", "-1"]))).unwrap();
        let gp = GaugeParams::new(&alg, 1.0).with(&alg, "T2", e("0.4")).unwrap();
        let x = [1.5, 0.0, 0.0, 0.0];
        let da = vary_internal(&cfg, &gp, &x).unwrap();
        assert_eq!(da[0], [sign * c * 1.5, sign * c * 2.0, 0.0, -sign * c]);
        assert_eq!(da[1], [0.0; 4]);
        assert_eq!(da[2], [0.0; 4]);
    }
}

#[test]
fn variations_scale_with_epsilon() {
    let alg = so3(BracketConvention::Paper);
    let (cfg, gp) = random_internal(&alg, 1);
    let x = [0.2, 0.1, 0.0, -0.3];
    let a = vary_internal(&cfg, &gp.clone().with_epsilon(1.0), &x).unwrap();
    let b = vary_internal(&cfg, &gp.with_epsilon(0.5), &x).unwrap();
    for (va, vb) in a.iter().zip(&b) {
        for m in 0..4 {
            assert_eq!(va[m] * 0.5, vb[m]);
        }
    }
}

#[test]
fn zero_spacetime_variation() {
    let alg = Arc::new(build_poincare());
    let gp = GaugeParams::new(&alg, 1.0);
    assert!(gp.is_zero());
    let (da, dk) = vary_spacetime(&FieldConfig::new(alg), &gp, &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!(da.iter().all(|v| *v == [0.0; 4]));
    assert_eq!(dk, [[0.0; 4]; 4]);
}

#[test]
fn translation_variation() {
    let alg = Arc::new(build_poincare());
    let cfg = FieldConfig::new(alg.clone());
    let gp = GaugeParams::new(&alg, 1.0).with(&alg, "P0", e("x1")).unwrap();
    let (da, dk) = vary_spacetime(&cfg, &gp, &[0.3, 0.2, 0.1, 0.0]).unwrap();
    let mut expected = [[0.0; 4]; 4];
    expected[0][1] = 1.0;
    assert_eq!(dk, expected);
    let p0 = alg.translation_index(0).unwrap();
    assert_eq!(da[p0], [0.0, 1.0, 0.0, 0.0]);
    for (a, v) in da.iter().enumerate() {
        if a != p0 {
            assert_eq!(*v, [0.0; 4]);
        }
    }
}

#[test]
fn constant_boost_leaves_flat_tetrad() {
    let alg = Arc::new(build_poincare());
    let gp = GaugeParams::new(&alg, 1.0).with(&alg, "M01", e("0.8")).unwrap();
    let (_, dk) = vary_spacetime(&FieldConfig::new(alg), &gp, &[0.3, 0.2, 0.1, 0.0]).unwrap();
    assert_eq!(dk, [[0.0; 4]; 4]);
}

#[test]
fn constant_boost_on_curved_tetrad_matches_hand_contraction() {
    // delta k^n_m = c (k^s_m d_s X^n - k^n_s d_m X^s) with d_s X^n = S^n_s
    let alg = Arc::new(build_poincare());
    let k = [[e("1 + 0.1*x1"), e("0.2"), Expr::zero(), Expr::zero()], [Expr::zero(), e("2"), Expr::zero(), Expr::zero()], [Expr::zero(), Expr::zero(), e("1"), e("0.3")], [Expr::zero(), Expr::zero(), Expr::zero(), e("1")]];
    let cfg = FieldConfig::new(alg.clone()).with_tetrad(k);
    let c = 0.8;
    let gp = GaugeParams::new(&alg, 1.0).with(&alg, "M01", e("0.8")).unwrap();
    let x = [0.0, 0.5, 0.0, 0.0];
    let (_, dk) = vary_spacetime(&cfg, &gp, &x).unwrap();
    let kv = cfg.frame_at(&x).unwrap().k;
    let s = gaugeforge_core::algebra::lorentz_vector_matrix(0, 1);
    for n in 0..4 {
        for m in 0..4 {
            let oracle: f64 = c * (0..4).map(|sg| kv[sg][m] * s[n][sg] - kv[n][sg] * s[sg][m]).sum::<f64>();
            assert!((dk[n][m] - oracle).abs() < 1e-15);
        }
    }
}

#[test]
fn spacetime_reduces_to_internal_without_action() {
    let alg = so3(BracketConvention::Paper);
    let (cfg, gp) = random_internal(&alg, 4);
    let x = [0.2, 0.1, 0.0, -0.3];
    let internal = vary_internal(&cfg, &gp, &x).unwrap();
    let (da, dk) = vary_spacetime(&cfg, &gp, &x).unwrap();
    assert_eq!(dk, [[0.0; 4]; 4]);
    for (a, b) in internal.iter().zip(&da) {
        for m in 0..4 {
            assert!((a[m] - b[m]).abs() < 1e-16);
        }
    }
}

#[test]
fn abelian_covariance_is_exact() {
    let alg = u1();
    let cfg = FieldConfig::new(alg.clone()).with_potential("Q", PotentialSpec::Frame(e4(["sin(x1)", "x0*x2", "0", "x3^2"]))).unwrap();
    let gp = GaugeParams::new(&alg, 1e-3).with(&alg, "Q", e("exp(x0)*cos(x1*x2)")).unwrap();
    let r = covariance_scaling_check(&cfg, &gp, &[0.1, 0.2, 0.3, 0.4], Ablation::None).unwrap();
    assert!(r.exact, "{r:?}");
    assert!(r.d_eps <= 1e-12);
    assert!(r.passes(SCALING_BAND));
}

#[test]
fn nonabelian_covariance_scales_quadratically() {
    for conv in [BracketConvention::Paper, BracketConvention::Standard] {
        for seed in 0..5 {
            let (cfg, gp) = random_internal(&so3(conv), seed);
            let r = covariance_scaling_check(&cfg, &gp, &[0.3, -0.2, 0.5, 0.1], Ablation::None).unwrap();
            let ratio = r.ratio().unwrap();
            assert!((ratio - 0.25).abs() <= 0.05, "{conv:?} seed {seed}: {r:?}");
        }
    }
}

#[test]
fn poincare_covariance_scales_quadratically() {
    let alg = Arc::new(AlgebraSpec::extended_poincare(LambdaVector::new(0.6), BracketConvention::Paper));
    let (cfg, gp) = random_internal(&alg, 77);
    let cfg = cfg.with_translation_source(TranslationSource::Potentials);
    let r = covariance_scaling_check(&cfg, &gp, &[0.3, -0.2, 0.5, 0.1], Ablation::None).unwrap();
    assert!(r.passes(SCALING_BAND), "{r:?}");
}

fn ablated(ablation: Ablation) -> ScalingReport {
    let (cfg, gp) = random_internal(&so3(BracketConvention::Paper), 2);
    covariance_scaling_check(&cfg, &gp, &[0.3, -0.2, 0.5, 0.1], ablation).unwrap()
}

#[test]
fn dropping_the_quadratic_term_is_first_order() {
    let r = ablated(Ablation::HalfC);
    assert!(!r.passes(SCALING_BAND));
    assert!((r.ratio().unwrap() - 0.5).abs() < 0.05, "{r:?}");
}

#[test]
fn every_covariance_ablation_fails() {
    for ab in [Ablation::HalfC, Ablation::Inhomogeneous, Ablation::Homogeneous, Ablation::Rotation, Ablation::BracketSign] {
        let r = ablated(ab);
        assert!(!r.passes(SCALING_BAND), "{} {r:?}", ab.name());
    }
}

#[test]
fn ablation_names_round_trip() {
    for ab in Ablation::ALL {
        assert_eq!(Ablation::from_name(ab.name()), Some(ab));
    }
    assert_eq!(Ablation::from_name("everything"), None);
}

fn pair_matter() -> MatterSpec {
    MatterSpec::new(
        "charge",
        vec![e("cos(x1) + 0.3*x0*x2"), e("sin(x0 + x3) - 0.2*x1")],
        MatterLagrangian::FreeScalarPair { mass: 0.7 },
    )
}

fn box_grid(n: usize) -> GridSpec {
    GridSpec::new([-0.5; 4], [0.5; 4], n).unwrap()
}

#[test]
fn zero_gauge_function_leaves_action_unchanged() {
    let alg = u1();
    let cfg = FieldConfig::new(alg.clone()).with_potential("Q", PotentialSpec::Frame(e4(["x1", "0", "x0", "0"]))).unwrap();
    let gp = GaugeParams::new(&alg, 1e-3);
    let r = action_invariance_check(&cfg, &gp, &pair_matter(), &box_grid(4), Ablation::None, Exec::Sequential).unwrap();
    assert_eq!((r.d_eps, r.d_half), (0.0, 0.0));
}

#[test]
fn charged_pair_action_is_invariant() {
    let alg = u1();
    let cfg = FieldConfig::new(alg.clone()).with_potential("Q", PotentialSpec::Frame(e4(["0.5*x1", "sin(x0)", "0", "0.2"]))).unwrap();
    let gp = GaugeParams::new(&alg, 1e-3).with(&alg, "Q", e("0.8*sin(x0 + 2*x1) + x3")).unwrap();
    let r = action_invariance_check(&cfg, &gp, &pair_matter(), &box_grid(16), Ablation::None, Exec::Parallel).unwrap();
    assert!(r.passes(SCALING_BAND), "{r:?}");
}

fn extended_setup(kappa: f64) -> (FieldConfig, GaugeParams, MatterSpec) {
    let alg = Arc::new(AlgebraSpec::extended_poincare(LambdaVector::new(kappa), BracketConvention::Paper));
    let k = [
        [e("1 + 0.1*sin(x1)"), e("0.05*x2"), Expr::zero(), Expr::zero()],
        [Expr::zero(), e("1 + 0.1*x0"), Expr::zero(), e("0.05*cos(x2)")],
        [e("0.03*x3"), Expr::zero(), e("1"), Expr::zero()],
        [Expr::zero(), Expr::zero(), e("0.02*x1"), e("1 - 0.1*x2")],
    ];
    let cfg = FieldConfig::new(alg.clone())
        .with_tetrad(k)
        .with_potential("Phi", PotentialSpec::Frame(e4(["0.3*x1", "0.2*sin(x0)", "0", "0.1"])))
        .unwrap()
        .with_potential("M01", PotentialSpec::Frame(e4(["0.1*x2", "0", "0.2", "0"])))
        .unwrap()
        .with_potential("M23", PotentialSpec::Frame(e4(["0", "0.1*x3", "0", "0.3*x0"])))
        .unwrap();
    let gp = GaugeParams::new(&alg, 1e-3)
        .with(&alg, "Phi", e("0.5*sin(x0 + x3)"))
        .unwrap()
        .with(&alg, "P1", e("0.3*cos(x1 + x2)"))
        .unwrap()
        .with(&alg, "M12", e("0.4*x0"))
        .unwrap();
    let matter = MatterSpec::new("scalar_pair", vec![e("cos(x1) + 0.2*x2"), e("sin(x0*x3)")], MatterLagrangian::FreeScalarPair { mass: 0.7 });
    (cfg, gp, matter)
}

#[test]
fn extended_poincare_action_is_invariant() {
    for kappa in [0.0, 0.5] {
        let (cfg, gp, matter) = extended_setup(kappa);
        let r = action_invariance_check(&cfg, &gp, &matter, &box_grid(8), Ablation::None, Exec::Parallel).unwrap();
        assert!(r.passes(SCALING_BAND), "kappa {kappa}: {r:?}");
    }
}

#[test]
fn dropping_the_volume_factor_breaks_invariance() {
    let (cfg, gp, matter) = extended_setup(0.5);
    let r = action_invariance_check(&cfg, &gp, &matter, &box_grid(8), Ablation::LambdaFactor, Exec::Parallel).unwrap();
    assert!(!r.passes(SCALING_BAND), "{r:?}");
}

#[test]
fn quadrature_is_identical_in_both_modes() {
    let (cfg, gp, matter) = extended_setup(0.5);
    let a = action_invariance_check(&cfg, &gp, &matter, &box_grid(6), Ablation::None, Exec::Parallel).unwrap();
    let b = action_invariance_check(&cfg, &gp, &matter, &box_grid(6), Ablation::None, Exec::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn matter_must_match_representation() {
    let alg = u1();
    let bad = MatterSpec::new("charge", vec![e("x0")], MatterLagrangian::FreeScalarPair { mass: 1.0 });
    let gp = GaugeParams::new(&alg, 1e-3);
    assert!(action_invariance_check(&FieldConfig::new(alg), &gp, &bad, &box_grid(2), Ablation::None, Exec::Sequential).is_err());
}

#[test]
fn unknown_gauge_label() {
    let alg = u1();
    assert!(GaugeParams::new(&alg, 1e-3).with(&alg, "P0", e("x0")).is_err());
}
