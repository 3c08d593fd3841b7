use std::f64::consts::PI;
use std::sync::Arc;

use gaugeforge_core::algebra::{AlgebraSpec, BracketConvention, LambdaVector};
use gaugeforge_core::dynamics::particle::{acceleration, DynamicsError, NORM_DRIFT_LIMIT};
use gaugeforge_core::dynamics::{
    covariant_derivative, el_residual_lorentz, el_residual_lorentz_with, el_residual_u1, electrograv_density,
    generalized_einstein_residual, integrate_particle, stress_tensors, u1_divergence, vacuum_connection,
    yang_mills_density, Eq1Form, GravPotential, L0Form, MatterLagrangian, MatterSpec, ParticleFields, ParticleState,
    Trajectory,
};
use gaugeforge_core::fields::{FieldConfig, LorentzSource, PotentialSpec, TranslationSource};
use gaugeforge_core::geometry::{generalized_curvature, internal_curvature, levi_civita_spin_connection};
use gaugeforge_core::tensor::eta;
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

fn diag(entries: [&str; 4]) -> [[Expr; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { e(entries[i]) } else { Expr::zero() }))
}

fn extended(kappa: f64) -> Arc<AlgebraSpec> {
    Arc::new(AlgebraSpec::extended_poincare(LambdaVector::new(kappa), BracketConvention::Paper))
}

fn charged() -> Arc<AlgebraSpec> {
    Arc::new(
        AlgebraSpec::from_table(&["Q"], vec![0.0], BracketConvention::Paper)
            .unwrap()
            .with_representation("charge", vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])])
            .unwrap(),
    )
}

fn flat() -> FieldConfig {
    FieldConfig::new(Arc::new(build_poincare()))
}

fn pair(lagrangian: MatterLagrangian) -> MatterSpec {
    MatterSpec::new("charge", vec![e("x0"), e("x1")], lagrangian)
}

// covariant derivative

#[test]
fn covariant_derivative_without_potentials_is_the_gradient() {
    let cfg = FieldConfig::new(charged());
    let dphi = vec![[1.0, 2.0, 3.0, 4.0], [-1.0, 0.5, 0.0, 2.0]];
    let cov = covariant_derivative(&cfg, &pair(MatterLagrangian::None), &[0.3, 0.4], &dphi, &[0.0; 4]).unwrap();
    assert_eq!(cov, dphi);
}

#[test]
fn covariant_derivative_scales_with_tetrad() {
    let cfg = FieldConfig::new(charged()).with_tetrad(diag(["2", "2", "2", "2"]));
    let dphi = vec![[1.0, 2.0, 3.0, 4.0], [-1.0, 0.5, 0.0, 2.0]];
    let cov = covariant_derivative(&cfg, &pair(MatterLagrangian::None), &[0.3, 0.4], &dphi, &[0.0; 4]).unwrap();
    for (c, d) in cov.iter().zip(&dphi) {
        assert_eq!(*c, d.map(|v| 2.0 * v));
    }
}

#[test]
fn charged_pair_picks_up_rotation() {
    let a = 0.7;
    let cfg = FieldConfig::new(charged()).with_potential("Q", PotentialSpec::Frame(e4(["0.7", "0", "0", "0"]))).unwrap();
    let phi = [0.3, -0.4];
    let dphi = vec![[0.0; 4]; 2];
    let cov = covariant_derivative(&cfg, &pair(MatterLagrangian::None), &phi, &dphi, &[0.0; 4]).unwrap();
    // J phi = (-phi1, phi0)
    assert_eq!(cov[0][0], -a * -phi[1]);
    assert_eq!(cov[1][0], -a * phi[0]);
    assert_eq!(cov[0][1..], [0.0; 3]);
}

#[test]
fn covariant_derivative_dimension_mismatch() {
    let cfg = FieldConfig::new(charged());
    let m = pair(MatterLagrangian::None);
    assert!(covariant_derivative(&cfg, &m, &[0.3], &[[0.0; 4]], &[0.0; 4]).is_err());
    let wrong = MatterSpec::new("charge", vec![e("x0")], MatterLagrangian::None);
    assert!(covariant_derivative(&cfg, &wrong, &[0.3], &[[0.0; 4]], &[0.0; 4]).is_err());
}

// densities

#[test]
fn yang_mills_of_single_component() {
    let c = 1.3;
    let cfg = FieldConfig::new(charged()).with_potential("Q", PotentialSpec::Frame(e4(["1.3*x1", "0", "0", "0"]))).unwrap();
    let curv = internal_curvature(&cfg, &[0.2, 0.1, 0.0, 0.0]).unwrap();
    assert!((yang_mills_density(&curv) + 2.0 * c * c).abs() < 1e-15);
    let zero = internal_curvature(&FieldConfig::new(charged()), &[0.0; 4]).unwrap();
    assert_eq!(yang_mills_density(&zero), 0.0);
}

#[test]
fn yang_mills_is_additive_over_generators() {
    let alg = Arc::new(AlgebraSpec::from_table(&["Q", "R"], vec![0.0; 8], BracketConvention::Paper).unwrap());
    let a = e4(["x1*x2", "sin(x0)", "0", "x3"]);
    let b = e4(["0", "x2", "cos(x1)", "0"]);
    let x = [0.2, 0.5, -0.3, 0.7];
    let both = FieldConfig::new(alg.clone())
        .with_potential("Q", PotentialSpec::Frame(a.clone()))
        .unwrap()
        .with_potential("R", PotentialSpec::Frame(b.clone()))
        .unwrap();
    let only_a = FieldConfig::new(alg.clone()).with_potential("Q", PotentialSpec::Frame(a)).unwrap();
    let only_b = FieldConfig::new(alg).with_potential("R", PotentialSpec::Frame(b)).unwrap();
    let ym = |cfg: &FieldConfig| yang_mills_density(&internal_curvature(cfg, &x).unwrap());
    assert!((ym(&both) - ym(&only_a) - ym(&only_b)).abs() < 1e-14);
}

#[test]
fn electrograv_density_vanishes_without_fields() {
    assert_eq!(electrograv_density(&FieldConfig::new(extended(0.5)), &[0.1, 0.2, 0.3, 0.4]).unwrap(), 0.0);
    let cfg = FieldConfig::new(extended(0.5)).with_tetrad(diag(["exp(0.3*x1)", "1", "1", "1"]));
    assert_eq!(electrograv_density(&cfg, &[0.1, 0.2, 0.3, 0.4]).unwrap(), 0.0);
}

#[test]
fn electrograv_density_is_maxwell_in_flat_space() {
    let cfg = FieldConfig::new(extended(0.0))
        .with_potential("Phi", PotentialSpec::Coordinate(e4(["0.3*x2", "sin(x0 - x3)", "0.5*x1*x0", "0"])))
        .unwrap();
    let x: [f64; 4] = [0.4, -0.2, 0.6, 0.1];
    // E_i = d_0 A_i - d_i A_0, B = curl of the spatial lower components
    let ex = (x[0] - x[3]).cos();
    let ey = 0.5 * x[1] - 0.3;
    let ez = 0.0;
    let bx = -0.0;
    let by = -(x[0] - x[3]).cos();
    let bz = 0.5 * x[0];
    let oracle = -2.0 * ((ex * ex + ey * ey + ez * ez) - (bx * bx + by * by + bz * bz));
    let got = electrograv_density(&cfg, &x).unwrap();
    assert!((got - oracle).abs() < 1e-14, "{got} vs {oracle}");
}

#[test]
fn electrograv_lorentz_term_is_the_curvature_scalar() {
    let k = diag(["exp(0.3*x1)", "1 + 0.1*x1^2", "1", "1"]);
    let cfg = FieldConfig::new(extended(0.0)).with_tetrad(k).with_lorentz_source(LorentzSource::Vacuum);
    let x = [0.0, 0.4, 0.2, 0.0];
    let alg = cfg.algebra();
    let gen = generalized_curvature(&cfg, &x).unwrap();
    let scalar: f64 = (0..4).flat_map(|m| (0..4).map(move |n| (m, n))).map(|(m, n)| gen.lorentz(alg, m, n)[m][n]).sum();
    let lambda = cfg.frame_at(&x).unwrap().lambda;
    let got = electrograv_density(&cfg, &x).unwrap();
    assert!(scalar.abs() > 1e-3);
    assert!((got - lambda * scalar).abs() < 1e-12, "{got} vs {}", lambda * scalar);
}

// U(1) field equation

fn small_box() -> GridSpec {
    GridSpec::new([-1.0; 4], [1.0; 4], 5).unwrap()
}

#[test]
fn u1_residual_of_zero_field() {
    let scan = el_residual_u1(&FieldConfig::new(extended(0.3)), &small_box(), Exec::Sequential).unwrap();
    assert_eq!(scan.max(), 0.0);
    assert_eq!(scan.records.len(), 625);
}

#[test]
fn plane_wave_solves_maxwell() {
    let cfg = FieldConfig::new(extended(0.3))
        .with_potential("Phi", PotentialSpec::Coordinate(e4(["0", "sin(2*(x0 - x3))", "0.5*cos(x0 - x3)", "0"])))
        .unwrap();
    let scan = el_residual_u1(&cfg, &small_box(), Exec::Parallel).unwrap();
    assert!(scan.max() <= 1e-10, "{}", scan.max());
}

#[test]
fn non_solution_is_reported() {
    let cfg = FieldConfig::new(extended(0.3)).with_potential("Phi", PotentialSpec::Coordinate(e4(["x1^2", "0", "0", "0"]))).unwrap();
    let d = u1_divergence(&cfg, &[0.1, 0.7, -0.2, 0.3]).unwrap();
    assert_eq!(d.map(f64::abs), [2.0, 0.0, 0.0, 0.0]);
    assert_eq!(el_residual_u1(&cfg, &small_box(), Exec::Parallel).unwrap().max(), 2.0);
}

#[test]
fn u1_divergence_matches_finite_differences_on_curved_background() {
    let k = [
        [e("1 + 0.1*sin(x1)"), e("0.05*x2"), Expr::zero(), Expr::zero()],
        [Expr::zero(), e("1 + 0.1*x0"), Expr::zero(), e("0.05*cos(x2)")],
        [e("0.03*x3"), Expr::zero(), e("1"), Expr::zero()],
        [Expr::zero(), Expr::zero(), e("0.02*x1"), e("1 - 0.1*x2")],
    ];
    let cfg = FieldConfig::new(extended(0.4))
        .with_tetrad(k)
        .with_potential("Phi", PotentialSpec::Coordinate(e4(["0.3*x1*x2", "sin(x0)", "x3", "0.2*x0^2"])))
        .unwrap()
        .with_potential("M01", PotentialSpec::Frame(e4(["0.1*x2", "0", "0.2*x3", "0"])))
        .unwrap();
    let x = [0.2, -0.3, 0.4, 0.1];
    // Lambda F^{m s} with indices raised, differentiated numerically
    let density = |x: &[f64; 4]| -> [[f64; 4]; 4] {
        let f = cfg.frame_at(x).unwrap();
        let (_, fphi) = gaugeforge_core::geometry::extended_curvatures(&cfg, x).unwrap();
        std::array::from_fn(|m| {
            std::array::from_fn(|s| {
                let mut v = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        v += f.g_up[m][a] * f.g_up[s][b] * fphi[a][b];
                    }
                }
                f.lambda * v
            })
        })
    };
    let h = 1e-5;
    let mut fd = [0.0; 4];
    for s in 0..4 {
        let (mut xp, mut xm) = (x, x);
        xp[s] += h;
        xm[s] -= h;
        let (p, m) = (density(&xp), density(&xm));
        for (mu, v) in fd.iter_mut().enumerate() {
            *v += (p[mu][s] - m[mu][s]) / (2.0 * h);
        }
    }
    let exact = u1_divergence(&cfg, &x).unwrap();
    for mu in 0..4 {
        assert!((exact[mu] - fd[mu]).abs() < 1e-7, "{mu}: {} vs {}", exact[mu], fd[mu]);
    }
}

#[test]
fn u1_equation_needs_central_generator() {
    assert!(el_residual_u1(&flat(), &small_box(), Exec::Sequential).is_err());
}

// Lorentz field equation and vacuum connection

fn vacuum_cfg(k: [[Expr; 4]; 4]) -> FieldConfig {
    FieldConfig::new(extended(1.0))
        .with_tetrad(k)
        .with_lorentz_source(LorentzSource::Vacuum)
        .with_translation_source(TranslationSource::Potentials)
}

fn tetrad_family() -> Vec<[[Expr; 4]; 4]> {
    vec![
        diag(["exp(0.3*x1)", "1", "1", "1"]),
        diag(["1 + 0.2*x1^2", "1", "1", "1"]),
        diag(["2 + sin(x1)", "1", "1", "1"]),
        diag(["1", "1 + 0.3*x2", "1", "1"]),
        diag(["1/(1 + 0.2*x1)", "1", "1", "1"]),
    ]
}

const POINTS: [[f64; 4]; 3] = [[0.0, 0.3, 0.0, 0.0], [1.0, -0.7, 0.2, 0.4], [0.5, 1.1, -0.3, 0.0]];

#[test]
fn lorentz_residual_of_flat_empty_space() {
    assert_eq!(el_residual_lorentz(&FieldConfig::new(extended(1.0)), &[0.3, 0.1, 0.2, 0.0]).unwrap(), 0.0);
}

#[test]
fn vacuum_connection_solves_lorentz_equation() {
    for k in tetrad_family() {
        let cfg = vacuum_cfg(k);
        for x in POINTS {
            let r = el_residual_lorentz(&cfg, &x).unwrap();
            assert!(r <= 1e-8, "{x:?}: {r}");
        }
    }
}

#[test]
fn vacuum_connection_solves_lorentz_equation_on_generic_tetrads() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let k: [[Expr; 4]; 4] = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let a: f64 = rng.gen_range(-0.2..0.2);
                let w: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let base = if i == j { 1.0 } else { 0.0 };
                e(&format!("{base} + {a:.6}*sin({:.5}*x0 + {:.5}*x1 + {:.5}*x2 + {:.5}*x3)", w[0], w[1], w[2], w[3]))
            })
        });
        let r = el_residual_lorentz(&vacuum_cfg(k), &[0.2, -0.1, 0.4, 0.3]).unwrap();
        assert!(r <= 1e-8, "{r}");
    }
}

#[test]
fn printed_lorentz_equation_fails_on_vacuum() {
    let cfg = vacuum_cfg(diag(["exp(0.3*x1)", "1", "1", "1"]));
    let r = el_residual_lorentz_with(&cfg, &[0.0, 0.3, 0.0, 0.0], Eq1Form::AsPrinted).unwrap();
    assert!(r > 1e-3, "{r}");
}

#[test]
fn arbitrary_lorentz_potentials_are_not_solutions() {
    let cfg = FieldConfig::new(extended(1.0))
        .with_tetrad(diag(["exp(0.3*x1)", "1", "1", "1"]))
        .with_potential("M01", PotentialSpec::Frame(e4(["0.2", "0", "x2", "0"])))
        .unwrap();
    assert!(el_residual_lorentz(&cfg, &[0.0, 0.3, 0.1, 0.0]).unwrap() > 1e-3);
}

#[test]
fn vacuum_connection_of_flat_tetrad_is_zero() {
    assert_eq!(vacuum_connection(&FieldConfig::new(extended(1.0)), &[0.1, 0.2, 0.3, 0.4]).unwrap(), [[0.0; 4]; 6]);
}

#[test]
fn vacuum_connection_is_the_spin_connection() {
    for k in tetrad_family() {
        let cfg = vacuum_cfg(k);
        for x in POINTS {
            let vac = vacuum_connection(&cfg, &x).unwrap();
            let lc = levi_civita_spin_connection(&cfg.frame_at(&x).unwrap());
            for s in 0..6 {
                for m in 0..4 {
                    assert!((vac[s][m] - lc[s][m]).abs() <= 1e-8);
                }
            }
        }
    }
}

// stress tensors

#[test]
fn stress_tensors_vanish_without_fields() {
    let st = stress_tensors(&FieldConfig::new(extended(1.0)), &[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(st.t_phi, [[0.0; 4]; 4]);
    assert_eq!(st.t_mix, [[0.0; 4]; 4]);
}

fn mixed_cfg(kappa: f64) -> FieldConfig {
    FieldConfig::new(extended(kappa))
        .with_tetrad(diag(["1 + 0.1*x1", "1", "1 + 0.05*x3", "1"]))
        .with_potential("Phi", PotentialSpec::Coordinate(e4(["0.4*x1", "0.2*x2", "sin(x0)", "0"])))
        .unwrap()
        .with_potential("M01", PotentialSpec::Frame(e4(["0.3", "0.1*x2", "0", "0.2"])))
        .unwrap()
        .with_potential("M13", PotentialSpec::Frame(e4(["0", "0.2*x0", "0.1", "0"])))
        .unwrap()
}

#[test]
fn mixing_stress_vanishes_at_zero_coupling() {
    let st = stress_tensors(&mixed_cfg(0.0), &[0.2, 0.3, -0.1, 0.5]).unwrap();
    assert_eq!(st.t_mix, [[0.0; 4]; 4]);
    assert!(st.t_phi.iter().flatten().any(|v| v.abs() > 1e-3));
    let st = stress_tensors(&mixed_cfg(1.0), &[0.2, 0.3, -0.1, 0.5]).unwrap();
    assert!(st.t_mix.iter().flatten().any(|v| v.abs() > 1e-3));
}

#[test]
fn mixing_stress_is_linear_in_coupling() {
    let x = [0.2, 0.3, -0.1, 0.5];
    let a = stress_tensors(&mixed_cfg(1e-3), &x).unwrap().t_mix;
    let b = stress_tensors(&mixed_cfg(2e-3), &x).unwrap().t_mix;
    for i in 0..4 {
        for j in 0..4 {
            // F^(Phi) itself carries kappa through the mixing term
            assert!((b[i][j] - 2.0 * a[i][j]).abs() <= 1e-5 * a[i][j].abs().max(1e-9), "{i}{j}");
        }
    }
}

#[test]
fn constant_electric_field_stress() {
    let big_e = 0.8;
    let cfg = FieldConfig::new(extended(0.0)).with_potential("Phi", PotentialSpec::Coordinate(e4(["0.8*x1", "0", "0", "0"]))).unwrap();
    let st = stress_tensors(&cfg, &[0.0; 4]).unwrap();
    // F^0_s F^s_0 = (g^00 F_10)(g^11 F_01), F.F = 2 F_01 F^01
    let f01 = big_e;
    let square = 2.0 * f01 * (eta(0) * eta(1) * f01);
    let oracle = -((eta(0) * -f01) * (eta(1) * f01)) + 0.5 * square;
    assert!((st.t_phi[0][0] - oracle).abs() < 1e-15);
    assert!((st.t_phi[0][0] + 2.0 * big_e * big_e).abs() < 1e-15);
}

#[test]
fn central_stress_trace_is_three_field_squares() {
    let cfg = FieldConfig::new(extended(0.0))
        .with_potential("Phi", PotentialSpec::Coordinate(e4(["0.4*x1", "0.2*x2 + x3", "sin(x0)", "x1*x2"])))
        .unwrap();
    let x = [0.3, -0.2, 0.5, 0.1];
    let st = stress_tensors(&cfg, &x).unwrap();
    let (_, f) = gaugeforge_core::geometry::extended_curvatures(&cfg, &x).unwrap();
    let square: f64 = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| f[a][b] * f[a][b] * eta(a) * eta(b)).sum();
    let trace: f64 = (0..4).map(|m| st.t_phi[m][m]).sum();
    assert!((trace - 3.0 * square).abs() < 1e-13, "{trace} vs {square}");
}

// generalized Einstein equation

fn schwarzschild() -> FieldConfig {
    // x1 = r, x2 = theta, mass 0.5
    let k = diag(["1/sqrt(1 - 1/x1)", "sqrt(1 - 1/x1)", "1/x1", "1/(x1*sin(x2))"]);
    FieldConfig::new(extended(1.0)).with_tetrad(k).with_lorentz_source(LorentzSource::Vacuum)
}

fn rindler() -> FieldConfig {
    let k = diag(["1/(1 + 0.5*x1)", "1", "1", "1"]);
    FieldConfig::new(extended(1.0)).with_tetrad(k).with_lorentz_source(LorentzSource::Vacuum)
}

#[test]
fn flat_configuration_is_an_einstein_solution() {
    let r = generalized_einstein_residual(&FieldConfig::new(extended(1.0)), L0Form::Linear, None, &[0.1; 4]).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn vacuum_metrics_solve_the_generalized_einstein_equation() {
    let pts = [[0.0, 3.0, 1.0, 0.0], [2.0, 1.7, 0.4, 1.0], [-1.0, 5.0, 2.2, 3.0]];
    for cfg in [schwarzschild(), rindler()] {
        for x in pts {
            for form in [L0Form::Linear, L0Form::Quadratic] {
                let r = generalized_einstein_residual(&cfg, form, None, &x).unwrap();
                assert!(r <= 1e-8, "{form:?} {x:?}: {r}");
            }
        }
    }
}

#[test]
fn non_vacuum_metric_leaves_einstein_residual() {
    let cfg = FieldConfig::new(extended(1.0))
        .with_tetrad(diag(["exp(0.3*x1)", "1 + 0.1*x1^2", "1", "1"]))
        .with_lorentz_source(LorentzSource::Vacuum);
    assert!(generalized_einstein_residual(&cfg, L0Form::Linear, None, &[0.0, 0.4, 0.2, 0.0]).unwrap() > 1e-3);
}

#[test]
fn matter_sources_the_einstein_equation() {
    let alg = Arc::new(
        AlgebraSpec::extended_poincare(LambdaVector::new(0.5), BracketConvention::Paper),
    );
    let cfg = FieldConfig::new(alg).with_tetrad(diag(["1/(1 + 0.5*x1)", "1", "1", "1"])).with_lorentz_source(LorentzSource::Vacuum);
    let matter = MatterSpec::new("scalar_pair", vec![e("0.3*x1"), e("0.1")], MatterLagrangian::FreeScalarPair { mass: 1.0 });
    let x = [0.0, 0.2, 0.0, 0.0];
    let without = generalized_einstein_residual(&cfg, L0Form::Linear, None, &x).unwrap();
    let with = generalized_einstein_residual(&cfg, L0Form::Linear, Some(&matter), &x).unwrap();
    assert!(without <= 1e-8);
    assert!(with > 1e-3);
}

// particle

fn cyclotron_fields(b: f64) -> ParticleFields {
    // F_12 = d_2 A_1 - d_1 A_2 = b
    ParticleFields::new(Some(e4(["0", &format!("{b}*x2"), "0", "0"])), GravPotential::None)
}

fn unit_state(v: [f64; 3], m: f64, q: f64, kappa: f64) -> ParticleState {
    let v2: f64 = v.iter().map(|c| c * c).sum();
    let gamma = 1.0 / (1.0 - v2).sqrt();
    ParticleState { x: [0.0; 4], u: [gamma, gamma * v[0], gamma * v[1], gamma * v[2]], m, e: q, kappa }
}

#[test]
fn free_particle_moves_in_a_straight_line() {
    let s = unit_state([0.3, -0.2, 0.1], 1.0, 1.0, 0.0);
    let traj = integrate_particle(&flat(), &s, &ParticleFields::default(), 5.0, Some(0.01)).unwrap();
    assert_eq!(traj.rows.len(), 501);
    for r in &traj.rows {
        assert_eq!(r.u, s.u);
        for m in 0..4 {
            assert!((r.x[m] - s.u[m] * r.tau).abs() < 1e-13);
        }
    }
}

/// Endpoint error against the analytic helix after one proper-time period.
fn cyclotron_error(steps: usize) -> (f64, f64) {
    let (m, q, b) = (1.5, 0.8, 2.0);
    let s = unit_state([0.4, 0.3, 0.1], m, q, 0.0);
    let omega = q * b / m;
    let period = 2.0 * PI / omega;
    let traj = integrate_particle(&flat(), &s, &cyclotron_fields(b), period, Some(period / steps as f64)).unwrap();
    let end = traj.last().unwrap();
    let radius = (s.u[1].hypot(s.u[2])) / omega;
    let exact = [s.u[0] * period, 0.0, 0.0, s.u[3] * period];
    let err = (0..4).map(|i| (end.x[i] - exact[i]).powi(2)).sum::<f64>().sqrt();
    (err / radius, traj.max_norm_drift())
}

#[test]
fn cyclotron_orbit_closes() {
    let (rel, drift) = cyclotron_error(1000);
    assert!(rel <= 1e-6, "{rel}");
    assert!(drift <= 1e-8);
}

#[test]
fn cyclotron_converges_at_fourth_order() {
    let ratio = cyclotron_error(1000).0 / cyclotron_error(2000).0;
    assert!((ratio - 16.0).abs() <= 4.0, "{ratio}");
}

#[test]
fn cyclotron_rotates_the_right_way() {
    // du^2/dtau = (e/m) B u^1 at tau = 0 for u = (g, g v, 0, 0)
    let s = unit_state([0.5, 0.0, 0.0], 2.0, 1.0, 0.0);
    let a = acceleration(&flat(), &s, &cyclotron_fields(3.0), &s.x, &s.u).unwrap();
    assert!((a[2] - 0.5 * 3.0 * s.u[1]).abs() < 1e-15);
    assert_eq!([a[0], a[1], a[3]], [0.0; 3]);
}

#[test]
fn norm_is_conserved_over_default_run() {
    let (m, q, b) = (1.0, 1.0, 1.0);
    let s = unit_state([0.6, 0.0, 0.2], m, q, 0.0);
    let traj = integrate_particle(&flat(), &s, &cyclotron_fields(b), 4.0 * PI, None).unwrap();
    assert_eq!(traj.rows.len(), 10_001);
    assert!(traj.max_norm_drift() <= 1e-8, "{}", traj.max_norm_drift());
}

fn grav_exprs() -> [Expr; 4] {
    // lowered b_grav_nonrel of h = (0.2 x2, -0.1 x0 + 0.3 x3, 0.05 x1)
    let h = ["(0.2*x2)", "(-0.1*x0 + 0.3*x3)", "(0.05*x1)"];
    e4([&format!("-({0}^2 + {1}^2 + {2}^2)/8", h[0], h[1], h[2]), &format!("{}/2", h[0]), &format!("{}/2", h[1]), &format!("{}/2", h[2])])
}

#[test]
fn gravitational_force_single_step() {
    let s = ParticleState { x: [0.3, 0.5, -0.4, 0.2], u: unit_state([0.2, -0.1, 0.3], 1.0, 1.0, 0.0).u, m: 1.7, e: 0.9, kappa: 0.6 };
    let fields = ParticleFields::new(None, GravPotential::Expressions(grav_exprs()));
    let a = acceleration(&flat(), &s, &fields, &s.x, &s.u).unwrap();
    // hand gradients d_s B_m at x
    let x = s.x;
    let h = [0.2 * x[2], -0.1 * x[0] + 0.3 * x[3], 0.05 * x[1]];
    let dh: [[f64; 4]; 3] = [[0.0, 0.0, 0.2, 0.0], [-0.1, 0.0, 0.0, 0.3], [0.0, 0.05, 0.0, 0.0]];
    let mut db = [[0.0; 4]; 4];
    for sg in 0..4 {
        db[0][sg] = -(0..3).map(|i| h[i] * dh[i][sg]).sum::<f64>() / 4.0;
        for i in 0..3 {
            db[i + 1][sg] = dh[i][sg] / 2.0;
        }
    }
    let coef = s.kappa * s.e / s.m;
    for sg in 0..4 {
        let rhs: f64 = -(0..4).map(|m| coef * s.u[m] * (db[m][sg] - db[sg][m])).sum::<f64>();
        // flat g_{ss} = eta(s)
        assert!((a[sg] - eta(sg) * rhs).abs() <= 1e-10, "{sg}: {} vs {}", a[sg], eta(sg) * rhs);
    }
}

#[test]
fn gravitational_potential_from_metric_matches_expressions() {
    // k^i_0 = h_i gives g^{0i} = h_i
    let h = ["0.2*x2", "-0.1*x0 + 0.3*x3", "0.05*x1"];
    let k = [
        [e("1"), Expr::zero(), Expr::zero(), Expr::zero()],
        [e(h[0]), e("1"), Expr::zero(), Expr::zero()],
        [e(h[1]), Expr::zero(), e("1"), Expr::zero()],
        [e(h[2]), Expr::zero(), Expr::zero(), e("1")],
    ];
    let cfg = FieldConfig::new(Arc::new(build_poincare())).with_tetrad(k);
    let x = [0.3, 0.5, -0.4, 0.2];
    let frame = cfg.frame_at(&x).unwrap();
    let from_metric = ParticleFields::new(None, GravPotential::NonRelFromMetric).f_grav(&frame).unwrap();
    let from_exprs = ParticleFields::new(None, GravPotential::Expressions(grav_exprs())).f_grav(&frame).unwrap();
    for m in 0..4 {
        for s in 0..4 {
            assert!((from_metric[m][s] - from_exprs[m][s]).abs() < 1e-14);
        }
    }
}

#[test]
fn weak_field_reproduces_newtonian_acceleration() {
    let g: f64 = 1e-5;
    // g_00 = 1 + 2 phi with phi = g x1
    let cfg = FieldConfig::new(Arc::new(build_poincare())).with_tetrad(diag(["1/sqrt(1 + 2e-5*x1)", "1", "1", "1"]));
    let v: f64 = 1e-3;
    let x = [0.0, 0.5, 0.0, 0.0];
    let g00 = 1.0 + 2.0 * g * x[1];
    let u = [((1.0 + v * v) / g00).sqrt(), 0.0, v, 0.0];
    let s = ParticleState { x, u, m: 1.0, e: 0.0, kappa: 0.0 };
    let a = acceleration(&cfg, &s, &ParticleFields::default(), &x, &u).unwrap();
    let newton = -g;
    assert!(((a[1] - newton) / newton).abs() <= 1e-4, "{} vs {newton}", a[1]);

    let tau = 20.0;
    let traj = integrate_particle(&cfg, &s, &ParticleFields::default(), tau, Some(0.01)).unwrap();
    let end = traj.last().unwrap();
    let drop = end.x[1] - x[1];
    assert!(((drop - 0.5 * newton * tau * tau) / (0.5 * newton * tau * tau)).abs() <= 1e-4, "{drop}");
}

#[test]
fn coupling_limit_is_continuous() {
    let run = |kappa: f64| {
        let s = ParticleState { kappa, ..unit_state([0.3, 0.1, -0.2], 1.0, 1.0, 0.0) };
        let fields = ParticleFields::new(Some(e4(["0", "0.5*x2", "0", "0"])), GravPotential::Expressions(grav_exprs()));
        integrate_particle(&flat(), &s, &fields, 3.0, Some(0.01)).unwrap()
    };
    let sup = |a: &Trajectory, b: &Trajectory| {
        a.rows.iter().zip(&b.rows).flat_map(|(p, q)| (0..4).map(move |i| (p.x[i] - q.x[i]).abs())).fold(0.0, f64::max)
    };
    let base = run(0.0);
    let d1 = sup(&run(1e-6), &base);
    let d2 = sup(&run(2e-6), &base);
    assert!(d1 > 0.0 && d1 < 1e-5, "{d1}");
    assert!((d2 / d1 - 2.0).abs() < 1e-3, "{}", d2 / d1);
}

#[test]
fn singular_metric_is_reported() {
    let cfg = FieldConfig::new(Arc::new(build_poincare())).with_tetrad(diag(["x1", "1", "1", "1"]));
    let s = ParticleState { x: [0.0; 4], u: [1.0, 0.0, 0.0, 0.0], m: 1.0, e: 0.0, kappa: 0.0 };
    let err = integrate_particle(&cfg, &s, &ParticleFields::default(), 1.0, Some(0.1)).unwrap_err();
    assert!(matches!(err, DynamicsError::SingularMetric { tau, .. } if tau == 0.0), "{err:?}");
}

#[test]
fn coarse_steps_are_rejected() {
    let s = unit_state([0.6, 0.0, 0.0], 1.0, 1.0, 0.0);
    let err = integrate_particle(&flat(), &s, &cyclotron_fields(50.0), 1.0, Some(0.5)).unwrap_err();
    assert!(matches!(err, DynamicsError::NormDrift { drift, .. } if drift > NORM_DRIFT_LIMIT), "{err:?}");
}

#[test]
fn invalid_step_sizes() {
    let s = unit_state([0.0; 3], 1.0, 1.0, 0.0);
    for dt in [0.0, -1.0, f64::NAN] {
        assert!(matches!(
            integrate_particle(&flat(), &s, &ParticleFields::default(), 1.0, Some(dt)),
            Err(DynamicsError::InvalidStep(_))
        ));
    }
    assert!(integrate_particle(&flat(), &s, &ParticleFields::default(), -1.0, None).is_err());
}

#[test]
fn csv_layout() {
    let s = unit_state([0.1, 0.0, 0.0], 1.0, 1.0, 0.0);
    let traj = integrate_particle(&flat(), &s, &ParticleFields::default(), 0.2, Some(0.1)).unwrap();
    let csv = traj.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "tau,x0,x1,x2,x3,u0,u1,u2,u3,norm");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0.0000000000000000e0,"));
    for l in &lines[1..] {
        let vals: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(vals.len(), 10);
    }
    // round trip is exact at 17 significant digits
    let row = &traj.rows[2];
    let parsed: Vec<f64> = lines[3].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(parsed[1], row.x[0]);
    assert_eq!(parsed[9], row.norm);
}
