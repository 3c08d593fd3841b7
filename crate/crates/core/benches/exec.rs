use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gaugeforge_core::algebra::{AlgebraSpec, BracketConvention, LambdaVector};
use gaugeforge_core::dynamics::{el_residual_u1, MatterLagrangian, MatterSpec};
use gaugeforge_core::fields::{FieldConfig, PotentialSpec};
use gaugeforge_core::gauge::{action_invariance_check, Ablation, GaugeParams};
use gaugeforge_core::{parse, Exec, GridSpec};

fn exprs(src: [&str; 4]) -> [gaugeforge_core::Expr; 4] {
    src.map(|s| parse(s).unwrap())
}

fn extended() -> Arc<AlgebraSpec> {
    Arc::new(AlgebraSpec::extended_poincare(LambdaVector::new(1.0), BracketConvention::Paper))
}

fn bench_action(c: &mut Criterion) {
    let alg = extended();
    let cfg = FieldConfig::new(alg.clone())
        .with_potential("Phi", PotentialSpec::Frame(exprs(["0.3*sin(x1)", "0.1*x0", "0", "0.2*cos(x2)"])))
        .unwrap();
    let gp = GaugeParams::new(&alg, 1e-3).with(&alg, "Phi", parse("0.5*sin(x0 + x3)").unwrap()).unwrap();
    let matter = MatterSpec::new(
        "scalar_pair",
        vec![parse("cos(x1) + 0.2*x2").unwrap(), parse("sin(x0*x3)").unwrap()],
        MatterLagrangian::FreeScalarPair { mass: 0.7 },
    );
    let mut group = c.benchmark_group("action_invariance");
    for n in [6usize, 10] {
        let grid = GridSpec::new([-1.0; 4], [1.0; 4], n).unwrap();
        for exec in [Exec::Sequential, Exec::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &grid, |b, grid| {
                b.iter(|| action_invariance_check(&cfg, &gp, &matter, grid, Ablation::None, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_u1_scan(c: &mut Criterion) {
    let cfg = FieldConfig::new(extended())
        .with_potential("Phi", PotentialSpec::Coordinate(exprs(["0", "sin(x0 - x1)", "0", "0"])))
        .unwrap();
    let mut group = c.benchmark_group("u1_residual_scan");
    for n in [6usize, 10] {
        let grid = GridSpec::new([-1.0; 4], [1.0; 4], n).unwrap();
        for exec in [Exec::Sequential, Exec::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &grid, |b, grid| {
                b.iter(|| el_residual_u1(&cfg, grid, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_action, bench_u1_scan);
criterion_main!(benches);
