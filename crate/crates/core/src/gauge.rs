//! Infinitesimal gauge transformations and numerical invariance checks.
//!
//! Both checks measure a residual at `epsilon` and `epsilon / 2`. A correct
//! first-order identity leaves an `O(epsilon^2)` residual, so the ratio sits
//! near 0.25; a broken one leaves `O(epsilon)` and the ratio near 0.5.

use nalgebra::DVector;

use crate::algebra::AlgebraSpec;
use crate::dynamics::matter::{covariant_derivative_raw, MatterSpec};
use crate::exec::{ordered_sum, Exec};
use crate::expr::Expr;
use crate::fields::{FieldConfig, FieldError, PointFrame, PotentialJet, PotentialSpec};
use crate::geometry::curvature_from_jet;
use crate::grid::GridSpec;
use crate::tensor::{det, Mat4, Vec4};

/// Acceptance band for `D(epsilon/2) / D(epsilon)`.
pub const SCALING_BAND: (f64, f64) = (0.2, 0.3);

/// Default transformation size.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Gauge functions `f^(a)(x)` and the scale `epsilon`.
#[derive(Clone, Debug)]
pub struct GaugeParams {
    f: Vec<Expr>,
    grad: Vec<[Expr; 4]>,
    pub epsilon: f64,
}

impl GaugeParams {
    pub fn new(alg: &AlgebraSpec, epsilon: f64) -> Self {
        GaugeParams {
            f: vec![Expr::zero(); alg.dim()],
            grad: (0..alg.dim()).map(|_| std::array::from_fn(|_| Expr::zero())).collect(),
            epsilon,
        }
    }

    /// Sets `f^(label)`; reversed Lorentz labels store the negation.
    pub fn with(mut self, alg: &AlgebraSpec, label: &str, f: Expr) -> Result<Self, FieldError> {
        let (a, sign) = alg.lookup(label)?;
        let f = if sign < 0.0 { f.neg() } else { f };
        self.grad[a] = std::array::from_fn(|m| f.diff(m));
        self.f[a] = f;
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn function(&self, a: usize) -> &Expr {
        &self.f[a]
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().all(Expr::is_zero)
    }

    fn eval(&self, x: &Vec4) -> Result<(Vec<f64>, Vec<Vec4>), FieldError> {
        let err = |source| FieldError::Eval { what: "gauge function".into(), x: *x, source };
        let mut vals = Vec::with_capacity(self.f.len());
        let mut grads = Vec::with_capacity(self.f.len());
        for (f, g) in self.f.iter().zip(&self.grad) {
            vals.push(f.eval_at(x).map_err(err)?);
            let mut gv = [0.0; 4];
            for m in 0..4 {
                gv[m] = g[m].eval_at(x).map_err(err)?;
            }
            grads.push(gv);
        }
        Ok((vals, grads))
    }
}

/// Term removed from a check to show that the check detects it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Ablation {
    #[default]
    None,
    /// Quadratic term of the curvature.
    HalfC,
    /// `d f` in the potential variation.
    Inhomogeneous,
    /// `f C A` in the potential variation.
    Homogeneous,
    /// `epsilon f C F` in the expected curvature change.
    Rotation,
    /// Opposite sign of `f C A` relative to the curvature.
    BracketSign,
    /// Volume factor `Lambda` replaced by 1.
    LambdaFactor,
}

impl Ablation {
    pub const ALL: [Ablation; 7] = [
        Ablation::None,
        Ablation::HalfC,
        Ablation::Inhomogeneous,
        Ablation::Homogeneous,
        Ablation::Rotation,
        Ablation::BracketSign,
        Ablation::LambdaFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::HalfC => "half-c",
            Ablation::Inhomogeneous => "inhomogeneous",
            Ablation::Homogeneous => "homogeneous",
            Ablation::Rotation => "rotation",
            Ablation::BracketSign => "bracket-sign",
            Ablation::LambdaFactor => "lambda-factor",
        }
    }

    pub fn from_name(name: &str) -> Option<Ablation> {
        Ablation::ALL.into_iter().find(|a| a.name() == name)
    }
}

/// Residuals at `epsilon` and `epsilon / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingReport {
    pub epsilon: f64,
    pub d_eps: f64,
    pub d_half: f64,
    /// Both residuals at round-off level.
    pub exact: bool,
}

impl ScalingReport {
    fn new(epsilon: f64, d_eps: f64, d_half: f64, floor: f64) -> Self {
        ScalingReport { epsilon, d_eps, d_half, exact: d_eps <= floor && d_half <= floor }
    }

    pub fn ratio(&self) -> Option<f64> {
        (self.d_eps > 0.0).then(|| self.d_half / self.d_eps)
    }

    /// Second-order vanishing: exact, or the ratio inside `band`.
    pub fn passes(&self, band: (f64, f64)) -> bool {
        self.exact || self.ratio().is_some_and(|r| r >= band.0 && r <= band.1)
    }
}

/// `epsilon (d_mu f^a + s f^b C^a_{bc} A^c_mu)` with `k = delta`.
pub fn vary_internal(cfg: &FieldConfig, gp: &GaugeParams, x: &Vec4) -> Result<Vec<Vec4>, FieldError> {
    let jet = cfg.internal_jet(x)?;
    let (f, df) = gp.eval(x)?;
    let alg = cfg.algebra();
    let s = alg.convention().sign();
    let mut out: Vec<Vec4> = df.iter().map(|g| g.map(|v| gp.epsilon * v)).collect();
    for e in alg.entries() {
        for m in 0..4 {
            out[e.a][m] += gp.epsilon * s * f[e.b] * e.value * jet.coord[e.c][m];
        }
    }
    Ok(out)
}

/// Unscaled compensating-field variations at a point.
struct SpacetimeVariation {
    da: Vec<Vec4>,
    dk: Mat4,
}

struct ActionData {
    xv: Vec<Vec4>,
    dx: Vec<Mat4>,
}

fn action_at(alg: &AlgebraSpec, x: &Vec4) -> Result<ActionData, FieldError> {
    let err = |source| FieldError::Eval { what: "space-time action".into(), x: *x, source };
    let mut xv = Vec::with_capacity(alg.dim());
    let mut dx = Vec::with_capacity(alg.dim());
    for a in 0..alg.dim() {
        let mut v = [0.0; 4];
        let mut d = [[0.0; 4]; 4];
        for m in 0..4 {
            v[m] = alg.spacetime_action(a)[m].eval_at(x).map_err(err)?;
            for n in 0..4 {
                d[m][n] = alg.spacetime_action_grad(a)[m][n].eval_at(x).map_err(err)?;
            }
        }
        xv.push(v);
        dx.push(d);
    }
    Ok(ActionData { xv, dx })
}

fn spacetime_variation(
    alg: &AlgebraSpec,
    frame: &PointFrame,
    jet: &PotentialJet,
    f: &[f64],
    df: &[Vec4],
    act: &ActionData,
) -> SpacetimeVariation {
    let s = alg.convention().sign();
    let k = &frame.k;
    let n = alg.dim();
    let mut da = vec![[0.0; 4]; n];
    for a in 0..n {
        for m in 0..4 {
            let mut v: f64 = (0..4).map(|nu| k[nu][m] * df[a][nu]).sum();
            for b in 0..n {
                if f[b] != 0.0 {
                    v -= f[b] * (0..4).map(|sg| jet.frame[a][sg] * act.dx[b][sg][m]).sum::<f64>();
                }
            }
            da[a][m] = v;
        }
    }
    for e in alg.entries() {
        for m in 0..4 {
            da[e.a][m] += s * f[e.b] * e.value * jet.frame[e.c][m];
        }
    }
    let mut dk = [[0.0; 4]; 4];
    for nu in 0..4 {
        for mu in 0..4 {
            let mut v = 0.0;
            for a in 0..n {
                let ks_df: f64 = (0..4).map(|sg| k[sg][mu] * df[a][sg]).sum();
                v += act.xv[a][nu] * ks_df;
                if f[a] != 0.0 {
                    let t: f64 = (0..4).map(|sg| k[sg][mu] * act.dx[a][nu][sg] - k[nu][sg] * act.dx[a][sg][mu]).sum();
                    v += f[a] * t;
                }
            }
            dk[nu][mu] = v;
        }
    }
    SpacetimeVariation { da, dk }
}

/// Variations of the frame potentials and the tetrad under the combined
/// internal and space-time transformation, scaled by `epsilon`.
pub fn vary_spacetime(cfg: &FieldConfig, gp: &GaugeParams, x: &Vec4) -> Result<(Vec<Vec4>, Mat4), FieldError> {
    let frame = cfg.frame_for_potentials(x)?;
    let jet = cfg.potential_jet(&frame)?;
    let (f, df) = gp.eval(x)?;
    let act = action_at(cfg.algebra(), x)?;
    let v = spacetime_variation(cfg.algebra(), &frame, &jet, &f, &df, &act);
    let e = gp.epsilon;
    Ok((v.da.iter().map(|r| r.map(|c| e * c)).collect(), v.dk.map(|r| r.map(|c| e * c))))
}

fn internal_exprs(cfg: &FieldConfig) -> Vec<[Expr; 4]> {
    let alg = cfg.algebra();
    (0..alg.dim())
        .map(|a| {
            let tetrad_derived = matches!(
                (alg.kind(a), cfg.translation_source(), cfg.lorentz_source()),
                (crate::algebra::GeneratorKind::Translation(_), crate::fields::TranslationSource::Tetrad, _)
                    | (crate::algebra::GeneratorKind::Lorentz(..), _, crate::fields::LorentzSource::Vacuum)
            );
            match cfg.potential(a) {
                PotentialSpec::Frame(e) | PotentialSpec::Coordinate(e) if !tetrad_derived => e.clone(),
                _ => std::array::from_fn(|_| Expr::zero()),
            }
        })
        .collect()
}

fn eval_jet(exprs: &[[Expr; 4]], x: &Vec4) -> Result<(Vec<Vec4>, Vec<Mat4>), FieldError> {
    let err = |source| FieldError::Eval { what: "transformed potential".into(), x: *x, source };
    let mut vals = Vec::with_capacity(exprs.len());
    let mut grads = Vec::with_capacity(exprs.len());
    for e in exprs {
        let mut v = [0.0; 4];
        let mut g = [[0.0; 4]; 4];
        for m in 0..4 {
            v[m] = e[m].eval_at(x).map_err(err)?;
            for s in 0..4 {
                g[m][s] = e[m].diff(s).eval_at(x).map_err(err)?;
            }
        }
        vals.push(v);
        grads.push(g);
    }
    Ok((vals, grads))
}

/// Measures `D = max |F(A + dA) - F(A) - epsilon s f^b C^a_{bc} F^c|` for the
/// internal curvature at `epsilon` and `epsilon / 2`.
pub fn covariance_scaling_check(
    cfg: &FieldConfig,
    gp: &GaugeParams,
    x: &Vec4,
    ablation: Ablation,
) -> Result<ScalingReport, FieldError> {
    let alg = cfg.algebra();
    let s = alg.convention().sign();
    let n = alg.dim();
    let base = internal_exprs(cfg);
    // symbolic delta A = d f + s' f C A
    let s_var = if ablation == Ablation::BracketSign { -s } else { s };
    let mut delta: Vec<[Expr; 4]> = (0..n)
        .map(|a| {
            if ablation == Ablation::Inhomogeneous {
                std::array::from_fn(|_| Expr::zero())
            } else {
                std::array::from_fn(|m| gp.f[a].diff(m))
            }
        })
        .collect();
    if ablation != Ablation::Homogeneous {
        for e in alg.entries() {
            for m in 0..4 {
                let term = Expr::constant(s_var * e.value).mul(&gp.f[e.b]).mul(&base[e.c][m]);
                delta[e.a][m] = delta[e.a][m].add(&term);
            }
        }
    }
    let quad = if ablation == Ablation::HalfC { 0.0 } else { 1.0 };
    let (v0, g0) = eval_jet(&base, x)?;
    let (dv, dg) = eval_jet(&delta, x)?;
    let (f, _) = gp.eval(x)?;
    let f0 = curvature_from_jet(alg, &v0, &g0, quad);
    let residual = |eps: f64| {
        let v: Vec<Vec4> = (0..n).map(|a| std::array::from_fn(|m| v0[a][m] + eps * dv[a][m])).collect();
        let g: Vec<Mat4> =
            (0..n).map(|a| std::array::from_fn(|m| std::array::from_fn(|q| g0[a][m][q] + eps * dg[a][m][q]))).collect();
        let f1 = curvature_from_jet(alg, &v, &g, quad);
        let mut expected: Vec<Mat4> = (0..n).map(|a| f1[a].map(|r| r.map(|_| 0.0))).collect();
        if ablation != Ablation::Rotation {
            for e in alg.entries() {
                for m in 0..4 {
                    for q in 0..4 {
                        expected[e.a][m][q] += eps * s * f[e.b] * e.value * f0[e.c][m][q];
                    }
                }
            }
        }
        let mut d = 0.0f64;
        for a in 0..n {
            for m in 0..4 {
                for q in m + 1..4 {
                    d = d.max((f1[a][m][q] - f0[a][m][q] - expected[a][m][q]).abs());
                }
            }
        }
        d
    };
    let eps = gp.epsilon;
    let scale = 1.0 + f0.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ScalingReport::new(eps, residual(eps), residual(eps / 2.0), 64.0 * f64::EPSILON * scale))
}

/// Per-point data needed to evaluate the matter action before and after a
/// transformation.
struct MatterPoint {
    k: Mat4,
    jet_frame: Vec<Vec4>,
    phi: Vec<f64>,
    dphi: Vec<Vec4>,
    dphi_var: Vec<Vec4>,
    phi_var: Vec<f64>,
    var: SpacetimeVariation,
    divergence: f64,
}

fn matter_point(
    cfg: &FieldConfig,
    gp: &GaugeParams,
    matter: &MatterSpec,
    x: &Vec4,
) -> Result<MatterPoint, FieldError> {
    let alg = cfg.algebra();
    let mats = &alg.representation(&matter.rep)?.matrices;
    let frame = cfg.frame_for_potentials(x)?;
    let jet = cfg.potential_jet(&frame)?;
    let (f, df) = gp.eval(x)?;
    let act = action_at(alg, x)?;
    let (phi, dphi) = matter.eval(x)?;
    let nf = phi.len();
    let phi_v = DVector::from_column_slice(&phi);
    let mut phi_var = vec![0.0; nf];
    let mut dphi_var = vec![[0.0; 4]; nf];
    let mut divergence = 0.0;
    for a in 0..alg.dim() {
        divergence += (0..4).map(|l| df[a][l] * act.xv[a][l] + f[a] * act.dx[a][l][l]).sum::<f64>();
        let xa_phi = &mats[a] * &phi_v;
        for al in 0..nf {
            phi_var[al] += f[a] * xa_phi[al];
        }
        for nu in 0..4 {
            let dphi_nu = DVector::from_iterator(nf, dphi.iter().map(|d| d[nu]));
            let xa_dphi = &mats[a] * &dphi_nu;
            for al in 0..nf {
                let transport: f64 = (0..4).map(|l| dphi[al][l] * (df[a][nu] * act.xv[a][l] + f[a] * act.dx[a][l][nu])).sum();
                dphi_var[al][nu] += df[a][nu] * xa_phi[al] - transport + f[a] * xa_dphi[al];
            }
        }
    }
    let var = spacetime_variation(alg, &frame, &jet, &f, &df, &act);
    Ok(MatterPoint { k: frame.k, jet_frame: jet.frame, phi, dphi, dphi_var, phi_var, var, divergence })
}

fn matter_density(
    cfg: &FieldConfig,
    matter: &MatterSpec,
    p: &MatterPoint,
    eps: f64,
    ablation: Ablation,
) -> Result<f64, FieldError> {
    let alg = cfg.algebra();
    let mats = &alg.representation(&matter.rep)?.matrices;
    let k: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| p.k[i][j] + eps * p.var.dk[i][j]));
    let pots: Vec<Vec4> =
        p.jet_frame.iter().zip(&p.var.da).map(|(a, d)| std::array::from_fn(|m| a[m] + eps * d[m])).collect();
    let phi: Vec<f64> = p.phi.iter().zip(&p.phi_var).map(|(v, d)| v + eps * d).collect();
    let dphi: Vec<Vec4> = p.dphi.iter().zip(&p.dphi_var).map(|(v, d)| std::array::from_fn(|m| v[m] + eps * d[m])).collect();
    let cov = covariant_derivative_raw(&k, &pots, mats, &phi, &dphi);
    let lambda = if ablation == Ablation::LambdaFactor { 1.0 } else { 1.0 / det(&k) };
    Ok(lambda * matter.lagrangian.density(&phi, &cov) * (1.0 + eps * p.divergence))
}

/// Midpoint-rule `|S(epsilon) - S(0)|` of the matter action at `epsilon` and
/// `epsilon / 2`, with every field transformed to first order.
pub fn action_invariance_check(
    cfg: &FieldConfig,
    gp: &GaugeParams,
    matter: &MatterSpec,
    grid: &GridSpec,
    ablation: Ablation,
    exec: Exec,
) -> Result<ScalingReport, FieldError> {
    matter.validate(cfg.algebra())?;
    let eps = gp.epsilon;
    let per_point = exec.try_map(grid.len(), |i| {
        let x = grid.point(i);
        let p = matter_point(cfg, gp, matter, &x)?;
        let l0 = matter_density(cfg, matter, &p, 0.0, ablation)?;
        let l1 = matter_density(cfg, matter, &p, eps, ablation)?;
        let l2 = matter_density(cfg, matter, &p, eps / 2.0, ablation)?;
        Ok::<_, FieldError>((l1 - l0, l2 - l0, l0.abs()))
    })?;
    let vol = grid.cell_volume();
    let d1 = ordered_sum(&per_point.iter().map(|p| p.0).collect::<Vec<_>>()) * vol;
    let d2 = ordered_sum(&per_point.iter().map(|p| p.1).collect::<Vec<_>>()) * vol;
    let scale = ordered_sum(&per_point.iter().map(|p| p.2).collect::<Vec<_>>()) * vol;
    Ok(ScalingReport::new(eps, d1.abs(), d2.abs(), 64.0 * f64::EPSILON * (1.0 + scale)))
}
