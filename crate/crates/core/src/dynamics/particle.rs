//! Charged test particle under gravity, electromagnetism and the
//! gravitational U(1) force, integrated with fixed-step RK4.

use std::fmt::Write as _;

use crate::expr::Expr;
use crate::fields::{FieldConfig, FieldError, PointFrame};
use crate::geometry::b_grav_nonrel_jet;
use crate::tensor::{eta, solve, Mat4, Vec4};

/// Per-step change of `g u u` above which a step is rejected.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Number of steps used when no step size is given.
pub const DEFAULT_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("singular metric at tau = {tau}, x = {x:?}")]
    SingularMetric { tau: f64, x: Vec4 },
    #[error("norm drift {drift:e} in the step ending at tau = {tau}")]
    NormDrift { tau: f64, drift: f64 },
    #[error("{0}")]
    InvalidStep(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParticleState {
    pub x: Vec4,
    pub u: Vec4,
    pub m: f64,
    pub e: f64,
    pub kappa: f64,
}

/// Source of the gravitational U(1) potential `B^(grav)_mu`.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum GravPotential {
    #[default]
    None,
    /// Lower coordinate components.
    Expressions([Expr; 4]),
    /// The non-relativistic formulas applied to the metric, lowered with `eta`.
    NonRelFromMetric,
}

/// External potentials seen by the particle.
#[derive(Clone, Debug, Default)]
pub struct ParticleFields {
    elec: Option<([Expr; 4], [[Expr; 4]; 4])>,
    grav: GravPotential,
    grav_grad: Option<[[Expr; 4]; 4]>,
}

fn gradient(e: &[Expr; 4]) -> [[Expr; 4]; 4] {
    std::array::from_fn(|m| std::array::from_fn(|s| e[m].diff(s)))
}

impl ParticleFields {
    /// `elec` holds the lower coordinate components of `A^(elec)`.
    pub fn new(elec: Option<[Expr; 4]>, grav: GravPotential) -> Self {
        let grav_grad = match &grav {
            GravPotential::Expressions(e) => Some(gradient(e)),
            _ => None,
        };
        ParticleFields { elec: elec.map(|e| { let g = gradient(&e); (e, g) }), grav, grav_grad }
    }

    pub fn grav(&self) -> &GravPotential {
        &self.grav
    }

    fn eval_grad(g: &[[Expr; 4]; 4], x: &Vec4, what: &str) -> Result<Mat4, FieldError> {
        let mut out = [[0.0; 4]; 4];
        for m in 0..4 {
            for s in 0..4 {
                out[m][s] = g[m][s]
                    .eval_at(x)
                    .map_err(|source| FieldError::Eval { what: format!("d_{s} {what}[{m}]"), x: *x, source })?;
            }
        }
        Ok(out)
    }

    /// `F^(elec)_{ms} = d_s A_m - d_m A_s`.
    pub fn f_elec(&self, x: &Vec4) -> Result<Mat4, FieldError> {
        match &self.elec {
            None => Ok([[0.0; 4]; 4]),
            Some((_, g)) => Ok(curl(&Self::eval_grad(g, x, "A_elec")?)),
        }
    }

    /// `d_s B_m - d_m B_s` for the gravitational potential.
    pub fn f_grav(&self, frame: &PointFrame) -> Result<Mat4, FieldError> {
        match (&self.grav, &self.grav_grad) {
            (GravPotential::Expressions(_), Some(g)) => Ok(curl(&Self::eval_grad(g, &frame.x, "B_grav")?)),
            (GravPotential::NonRelFromMetric, _) => {
                let (_, db) = b_grav_nonrel_jet(frame);
                let lowered: Mat4 = std::array::from_fn(|m| std::array::from_fn(|s| eta(m) * db[m][s]));
                Ok(curl(&lowered))
            }
            _ => Ok([[0.0; 4]; 4]),
        }
    }
}

fn curl(g: &Mat4) -> Mat4 {
    std::array::from_fn(|m| std::array::from_fn(|s| g[m][s] - g[s][m]))
}

/// `g_{ms} u^m u^s`.
pub fn metric_norm(g: &Mat4, u: &Vec4) -> f64 {
    let mut v = 0.0;
    for m in 0..4 {
        for s in 0..4 {
            v += g[m][s] * u[m] * u[s];
        }
    }
    v
}

/// `du/dtau` solved from the covariant motion equation at `(x, u)`.
pub fn acceleration(
    cfg: &FieldConfig,
    state: &ParticleState,
    fields: &ParticleFields,
    x: &Vec4,
    u: &Vec4,
) -> Result<Vec4, DynamicsError> {
    let frame = cfg.frame_at(x)?;
    let dg = frame.dg_down();
    let fe = fields.f_elec(x)?;
    let fg = if state.kappa != 0.0 { fields.f_grav(&frame)? } else { [[0.0; 4]; 4] };
    let qe = state.e / state.m;
    let mut rhs = [0.0; 4];
    for (s, r) in rhs.iter_mut().enumerate() {
        let mut v = 0.0;
        for m in 0..4 {
            for n in 0..4 {
                // Gamma_{mn,s} = (d_m g_ns + d_n g_ms - d_s g_mn) / 2
                let gamma = 0.5 * (dg[n][s][m] + dg[m][s][n] - dg[m][n][s]);
                v -= u[m] * u[n] * gamma;
            }
            v -= qe * u[m] * fe[m][s];
            v -= state.kappa * qe * u[m] * fg[m][s];
        }
        *r = v;
    }
    solve(&frame.g_down, &rhs).ok_or(DynamicsError::SingularMetric { tau: f64::NAN, x: *x })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub tau: f64,
    pub x: Vec4,
    pub u: Vec4,
    pub norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str = "tau,x0,x1,x2,x3,u0,u1,u2,u3,norm";

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    /// Largest `|g u u - 1|` along the trajectory.
    pub fn max_norm_drift(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max((r.norm - 1.0).abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 240);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:.16e}", r.tau);
            for v in r.x.iter().chain(&r.u) {
                let _ = write!(out, ",{v:.16e}");
            }
            let _ = writeln!(out, ",{:.16e}", r.norm);
        }
        out
    }
}

fn axpy(a: &Vec4, h: f64, b: &Vec4) -> Vec4 {
    std::array::from_fn(|i| a[i] + h * b[i])
}

fn norm_at(cfg: &FieldConfig, tau: f64, x: &Vec4, u: &Vec4) -> Result<f64, DynamicsError> {
    let frame = cfg.frame_at(x).map_err(|e| match e {
        FieldError::Singular { x, .. } => DynamicsError::SingularMetric { tau, x },
        other => other.into(),
    })?;
    Ok(metric_norm(&frame.g_down, u))
}

/// Integrates from `tau = 0` to `tau_max`. The step is `tau_max / n` with
/// `n` the nearest whole number of steps to `tau_max / dt`; `None` uses
/// [`DEFAULT_STEPS`].
pub fn integrate_particle(
    cfg: &FieldConfig,
    state0: &ParticleState,
    fields: &ParticleFields,
    tau_max: f64,
    dt: Option<f64>,
) -> Result<Trajectory, DynamicsError> {
    if !(tau_max.is_finite() && tau_max > 0.0) {
        return Err(DynamicsError::InvalidStep(format!("tau_max must be positive, got {tau_max}")));
    }
    let steps = match dt {
        None => DEFAULT_STEPS,
        Some(dt) if dt.is_finite() && dt > 0.0 => ((tau_max / dt).round() as usize).max(1),
        Some(dt) => return Err(DynamicsError::InvalidStep(format!("dt must be positive, got {dt}"))),
    };
    if state0.m == 0.0 {
        return Err(DynamicsError::InvalidStep("particle mass must be nonzero".into()));
    }
    let h = tau_max / steps as f64;
    let (mut x, mut u) = (state0.x, state0.u);
    let mut norm = norm_at(cfg, 0.0, &x, &u)?;
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(TrajectoryRow { tau: 0.0, x, u, norm });
    for i in 1..=steps {
        let tau = i as f64 * h;
        let acc = |x: &Vec4, u: &Vec4| {
            acceleration(cfg, state0, fields, x, u).map_err(|e| match e {
                DynamicsError::SingularMetric { x, .. } | DynamicsError::Field(FieldError::Singular { x, .. }) => {
                    DynamicsError::SingularMetric { tau, x }
                }
                other => other,
            })
        };
        let (k1x, k1u) = (u, acc(&x, &u)?);
        let (x2, u2) = (axpy(&x, 0.5 * h, &k1x), axpy(&u, 0.5 * h, &k1u));
        let (k2x, k2u) = (u2, acc(&x2, &u2)?);
        let (x3, u3) = (axpy(&x, 0.5 * h, &k2x), axpy(&u, 0.5 * h, &k2u));
        let (k3x, k3u) = (u3, acc(&x3, &u3)?);
        let (x4, u4) = (axpy(&x, h, &k3x), axpy(&u, h, &k3u));
        let (k4x, k4u) = (u4, acc(&x4, &u4)?);
        x = std::array::from_fn(|j| x[j] + h / 6.0 * (k1x[j] + 2.0 * k2x[j] + 2.0 * k3x[j] + k4x[j]));
        u = std::array::from_fn(|j| u[j] + h / 6.0 * (k1u[j] + 2.0 * k2u[j] + 2.0 * k3u[j] + k4u[j]));
        let next = norm_at(cfg, tau, &x, &u)?;
        let drift = (next - norm).abs();
        if !(drift <= NORM_DRIFT_LIMIT) {
            return Err(DynamicsError::NormDrift { tau, drift });
        }
        norm = next;
        rows.push(TrajectoryRow { tau, x, u, norm });
    }
    Ok(Trajectory { rows })
}
