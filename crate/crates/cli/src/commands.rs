//! The five subcommands. Each returns a [`Report`] of PASS/FAIL lines and
//! writes its machine-readable output when an output directory is given.

use std::path::{Path, PathBuf};

use gaugeforge_core::algebra::{jacobi_report, rep_commutator_report, AlgebraSpec};
use gaugeforge_core::dynamics::particle::acceleration;
use gaugeforge_core::dynamics::{
    el_residual_lorentz_with, generalized_einstein_residual, integrate_particle, u1_divergence, Trajectory,
};
use gaugeforge_core::gauge::{action_invariance_check, covariance_scaling_check, ScalingReport};
use gaugeforge_core::geometry::{
    extended_curvatures, generalized_curvature, generalized_from_coordinate, internal_curvature, split_u1, torsion,
    CurvatureField,
};
use gaugeforge_core::tensor::{max_abs, Mat4, Vec4};
use gaugeforge_core::Exec;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::scenario::{Equation, Scenario};

/// Outcome of one command.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn new() -> Self {
        Report { lines: Vec::new(), passed: true, files: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {what}", if ok { "PASS" } else { "FAIL" }));
    }

    fn info(&mut self, what: String) {
        self.lines.push(format!("INFO {what}"));
    }
}

fn write(dir: &Path, name: &str, contents: &str, report: &mut Report) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    report.files.push(path);
    Ok(())
}

fn write_json(dir: Option<&Path>, name: &str, value: &Value, report: &mut Report) -> Result<(), CliError> {
    match dir {
        None => Ok(()),
        Some(dir) => {
            let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
            text.push('\n');
            write(dir, name, &text, report)
        }
    }
}

fn label(alg: &AlgebraSpec, a: usize) -> &str {
    alg.label(a)
}

pub fn check_algebra(sc: &Scenario, out: Option<&Path>) -> Result<Report, CliError> {
    let alg = &sc.algebra;
    let tol = &sc.tolerances;
    let mut report = Report::new();
    let jac = jacobi_report(alg);
    let mut line = format!("jacobi: max residual {:.3e} (tolerance {:.0e})", jac.max, tol.jacobi);
    let worst = jac.worst.map(|[a, b, c, d]| [label(alg, a), label(alg, b), label(alg, c), label(alg, d)]);
    if jac.max > tol.jacobi {
        if let Some([a, b, c, d]) = worst {
            line.push_str(&format!("; offending triple ({a}, {b}, {c}) in component {d}"));
        }
    }
    report.check(jac.max <= tol.jacobi, line);

    let mut reps = Vec::new();
    for name in alg.representation_names() {
        let r = rep_commutator_report(alg, name)?;
        let mut line = format!("representation {name}: max residual {:.3e} (tolerance {:.0e})", r.max, tol.representation);
        if r.max > tol.representation {
            if let Some([a, b]) = r.worst {
                line.push_str(&format!("; offending pair ({}, {})", label(alg, a), label(alg, b)));
            }
        }
        report.check(r.max <= tol.representation, line);
        reps.push(json!({
            "name": name,
            "max": r.max,
            "worst": r.worst.map(|[a, b]| [label(alg, a), label(alg, b)]),
        }));
    }
    let value = json!({
        "command": "check-algebra",
        "passed": report.passed,
        "generators": alg.generators().iter().map(|g| g.label.clone()).collect::<Vec<_>>(),
        "jacobi": { "max": jac.max, "worst": worst, "tolerance": tol.jacobi },
        "representations": reps,
    });
    write_json(out, "check-algebra.json", &value, &mut report)?;
    Ok(report)
}

fn antisymmetry_defect(values: &[Mat4]) -> f64 {
    let mut worst = 0.0f64;
    for f in values {
        for m in 0..4 {
            for n in 0..4 {
                worst = worst.max((f[m][n] + f[n][m]).abs());
            }
        }
    }
    worst
}

fn max_diff(a: &[Mat4], b: &[Mat4]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().flatten().zip(y.iter().flatten()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn curvature_json(alg: &AlgebraSpec, c: &CurvatureField) -> Value {
    let map: serde_json::Map<String, Value> =
        c.values.iter().enumerate().map(|(a, v)| (label(alg, a).to_string(), json!(v))).collect();
    Value::Object(map)
}

struct CurvaturePoint {
    record: Value,
    antisymmetry: f64,
    two_route: Option<f64>,
    split: Option<f64>,
}

pub fn curvature(sc: &Scenario, out: Option<&Path>) -> Result<Report, CliError> {
    let alg = &sc.algebra;
    let cfg = &sc.cfg;
    let points = sc.sample_points()?;
    let spacetime = alg.has_spacetime_generators();
    let per_point = Exec::Parallel.try_map(points.len(), |i| {
        let x = points[i];
        let mut rec = serde_json::Map::new();
        rec.insert("point".into(), json!(x));
        let (antisymmetry, two_route) = if spacetime {
            let gen = generalized_curvature(cfg, &x)?;
            let alt = generalized_from_coordinate(cfg, &x)?;
            let d = max_diff(&gen.values, &alt.values);
            rec.insert("generalized".into(), curvature_json(alg, &gen));
            rec.insert("torsion".into(), json!(torsion(cfg, &x)?.t));
            rec.insert("two_route".into(), json!(d));
            (antisymmetry_defect(&gen.values), Some(d))
        } else {
            let f = internal_curvature(cfg, &x)?;
            rec.insert("internal".into(), curvature_json(alg, &f));
            (antisymmetry_defect(&f.values), None)
        };
        let split = match cfg.u1_split() {
            None => None,
            Some(_) => {
                let (fe, fg) = split_u1(cfg, &x)?;
                let (_, fphi) = extended_curvatures(cfg, &x)?;
                let k = cfg.kappa();
                let combined: Mat4 = std::array::from_fn(|m| std::array::from_fn(|n| fe[m][n] + k * fg[m][n]));
                let d = max_diff(&[fphi], &[combined]);
                rec.insert("u1".into(), json!({ "phi": fphi, "elec": fe, "grav": fg, "split_defect": d }));
                Some(d)
            }
        };
        Ok::<_, CliError>(CurvaturePoint { record: Value::Object(rec), antisymmetry, two_route, split })
    })?;

    let tol = &sc.tolerances;
    let mut report = Report::new();
    let anti = per_point.iter().map(|p| p.antisymmetry).fold(0.0, f64::max);
    report.check(anti == 0.0, format!("antisymmetry: max |F_mn + F_nm| = {anti:.3e} over {} points", points.len()));
    if spacetime {
        let d = per_point.iter().filter_map(|p| p.two_route).fold(0.0, f64::max);
        report.check(d <= tol.two_route, format!("two-route curvature: max difference {d:.3e} (tolerance {:.0e})", tol.two_route));
    }
    if cfg.u1_split().is_some() {
        let d = per_point.iter().filter_map(|p| p.split).fold(0.0, f64::max);
        report.check(d <= tol.split_u1, format!("u1 split: max defect {d:.3e} (tolerance {:.0e})", tol.split_u1));
    }
    let value = json!({
        "command": "curvature",
        "passed": report.passed,
        "records": per_point.into_iter().map(|p| p.record).collect::<Vec<_>>(),
    });
    write_json(out, "curvature.json", &value, &mut report)?;
    Ok(report)
}

fn scaling_json(r: &ScalingReport, band: (f64, f64)) -> Value {
    json!({
        "epsilon": r.epsilon,
        "d_eps": r.d_eps,
        "d_half": r.d_half,
        "ratio": r.ratio(),
        "exact": r.exact,
        "passed": r.passes(band),
    })
}

fn describe(r: &ScalingReport) -> String {
    match r.ratio() {
        _ if r.exact => format!("exact (D = {:.3e})", r.d_eps),
        Some(ratio) => format!("ratio {ratio:.4} (D(eps) = {:.3e}, D(eps/2) = {:.3e})", r.d_eps, r.d_half),
        None => format!("no ratio (D(eps) = {:.3e})", r.d_eps),
    }
}

pub fn invariance(sc: &Scenario, out: Option<&Path>) -> Result<Report, CliError> {
    let gp = sc.gauge.as_ref().ok_or_else(|| CliError::Input("invariance needs a `gauge` block".into()))?;
    if sc.points.is_empty() && sc.matter.is_none() {
        return Err(CliError::Input("invariance needs `points` for covariance or `matter` for the action check".into()));
    }
    let [lo, hi] = sc.tolerances.band;
    let band = (lo, hi);
    let mut report = Report::new();
    if sc.ablation != gaugeforge_core::gauge::Ablation::None {
        report.info(format!("ablation {}", sc.ablation.name()));
    }
    let mut covariance = Vec::new();
    for x in &sc.points {
        let r = covariance_scaling_check(&sc.cfg, gp, x, sc.ablation)?;
        report.check(r.passes(band), format!("covariance at {x:?}: {} band [{lo}, {hi}]", describe(&r)));
        let mut v = scaling_json(&r, band);
        v["point"] = json!(x);
        covariance.push(v);
    }
    let mut action = Value::Null;
    if let Some(matter) = &sc.matter {
        let grid = sc.require_grid()?;
        let r = action_invariance_check(&sc.cfg, gp, matter, grid, sc.ablation, Exec::Parallel)?;
        report.check(
            r.passes(band),
            format!("action on {}^4 grid: {} band [{lo}, {hi}]", grid.points_per_axis(), describe(&r)),
        );
        action = scaling_json(&r, band);
        action["grid_points"] = json!(grid.points_per_axis());
    }
    let value = json!({
        "command": "invariance",
        "passed": report.passed,
        "ablation": sc.ablation.name(),
        "band": [lo, hi],
        "covariance": covariance,
        "action": action,
    });
    write_json(out, "invariance.json", &value, &mut report)?;
    Ok(report)
}

pub fn residuals(sc: &Scenario, out: Option<&Path>) -> Result<Report, CliError> {
    let settings = sc.residuals.as_ref().ok_or_else(|| CliError::Input("residuals needs a `residuals` block".into()))?;
    if settings.equations.is_empty() {
        return Err(CliError::Input("residuals.equations is empty".into()));
    }
    let points = sc.sample_points()?;
    let cfg = &sc.cfg;
    let tol = &sc.tolerances;
    let mut report = Report::new();
    let mut sections = serde_json::Map::new();
    let mut equations = settings.equations.clone();
    equations.sort();
    equations.dedup();
    for eq in equations {
        let values: Vec<f64> = Exec::Parallel.try_map(points.len(), |i| {
            let x = &points[i];
            let r = match eq {
                Equation::U1 => max_abs(u1_divergence(cfg, x)?),
                Equation::Lorentz => el_residual_lorentz_with(cfg, x, settings.eq1_form)?,
                Equation::Einstein => generalized_einstein_residual(cfg, settings.l0, sc.matter.as_ref(), x)?,
            };
            Ok::<_, CliError>(r)
        })?;
        let tolerance = match eq {
            Equation::U1 => tol.u1,
            Equation::Lorentz => tol.lorentz,
            Equation::Einstein => tol.einstein,
        };
        let worst = values.iter().copied().fold(0.0, f64::max);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Numeric(format!("{} residual is not finite", eq.name())));
        }
        report.check(
            worst <= tolerance,
            format!("{} residual: max {worst:.3e} over {} points (tolerance {tolerance:.0e})", eq.name(), points.len()),
        );
        let records: Vec<Value> = points.iter().zip(&values).map(|(p, r)| json!({ "point": p, "residual": r })).collect();
        sections.insert(eq.name().into(), json!({ "max": worst, "tolerance": tolerance, "records": records }));
    }
    let value = json!({ "command": "residuals", "passed": report.passed, "equations": Value::Object(sections) });
    write_json(out, "residuals.json", &value, &mut report)?;
    Ok(report)
}

/// Spatial return distance relative to the orbit radius, half the largest
/// spatial excursion from the start.
pub fn closure_error(traj: &Trajectory) -> Option<f64> {
    let first = traj.rows.first()?;
    let last = traj.last()?;
    let dist = |x: &Vec4| (1..4).map(|i| (x[i] - first.x[i]).powi(2)).sum::<f64>().sqrt();
    let excursion = traj.rows.iter().map(|r| dist(&r.x)).fold(0.0, f64::max);
    (excursion > 0.0).then(|| dist(&last.x) / (0.5 * excursion))
}

pub fn trajectory(sc: &Scenario, out: Option<&Path>) -> Result<Report, CliError> {
    let p = sc.particle.as_ref().ok_or_else(|| CliError::Input("trajectory needs a `particle` block".into()))?;
    let traj = integrate_particle(&sc.cfg, &p.state, &p.fields, p.tau_max, p.dt)?;
    let tol = &sc.tolerances;
    let mut report = Report::new();
    let last = traj.last().expect("trajectory has its initial row");
    report.info(format!("{} steps to tau = {:.6}; final x = {:?}", traj.rows.len() - 1, last.tau, last.x));
    let drift = traj.max_norm_drift();
    report.check(drift <= tol.norm_drift, format!("norm drift: max |g u u - 1| = {drift:.3e} (tolerance {:.0e})", tol.norm_drift));
    if let Some(t) = tol.closure {
        match closure_error(&traj) {
            Some(c) => report.check(c <= t, format!("closure error: {c:.3e} relative to the orbit radius (tolerance {t:.0e})")),
            None => report.check(false, "closure error: particle never left its starting point".into()),
        }
    }
    if let Some(phi) = &p.newtonian_potential {
        let a = acceleration(&sc.cfg, &p.state, &p.fields, &p.state.x, &p.state.u)?;
        let x = &p.state.x;
        let mut grad = [0.0; 3];
        for (i, g) in grad.iter_mut().enumerate() {
            *g = phi
                .diff(i + 1)
                .eval_at(x)
                .map_err(|e| CliError::Numeric(format!("newtonian potential gradient at {x:?}: {e}")))?;
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let err = (0..3).map(|i| (a[i + 1] + grad[i]).powi(2)).sum::<f64>().sqrt();
        let rel = if norm > 0.0 { err / norm } else { err };
        report.check(
            rel <= tol.newtonian,
            format!("newtonian limit: |a + grad phi| / |grad phi| = {rel:.3e} (tolerance {:.0e})", tol.newtonian),
        );
    }
    let dir = out.unwrap_or(Path::new("."));
    write(dir, "trajectory.csv", &traj.to_csv(), &mut report)?;
    Ok(report)
}
