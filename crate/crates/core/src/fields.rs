//! Gauge potentials and tetrads built from expressions, and the pointwise
//! frame data derived from them.

use std::sync::Arc;

use crate::algebra::{AlgebraError, AlgebraSpec, GeneratorKind};
use crate::exec::Exec;
use crate::expr::{EvalError, Expr};
use crate::geometry;
use crate::tensor::{delta, det, eta, inverse, zero3, zero4, Mat4, Rank3, Rank4, Vec4, IDENTITY};

/// Tetrads with `|det k|` at or below this are rejected.
pub const SINGULAR_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("singular tetrad at x = {x:?}: det k = {det:e}")]
    Singular { det: f64, x: Vec4 },
    #[error("evaluating {what} at x = {x:?}: {source}")]
    Eval {
        what: String,
        x: Vec4,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Invalid(String),
}

/// How the four components of a potential are given.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// Tetrad-frame components `calA^(a)_mu`.
    Frame([Expr; 4]),
    /// Coordinate components `A^(a)_mu = q^nu_mu calA^(a)_nu`.
    Coordinate([Expr; 4]),
}

/// Where translation potentials come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TranslationSource {
    /// `calA^(mu)_nu = k^mu_nu - delta^mu_nu`.
    #[default]
    Tetrad,
    /// The configured potentials of the translation generators.
    Potentials,
}

/// Where Lorentz potentials come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LorentzSource {
    #[default]
    Potentials,
    /// The torsion-built vacuum connection of the tetrad.
    Vacuum,
}

/// Electromagnetic and gravitational parts of the central potential.
#[derive(Clone, Debug, PartialEq)]
pub struct U1Split {
    pub elec: [Expr; 4],
    pub grav: [Expr; 4],
}

type Grad = [[Expr; 4]; 4];
type Hess = [[[Expr; 4]; 4]; 4];

#[derive(Clone, Debug)]
struct Compiled {
    spec: PotentialSpec,
    grad: Option<Grad>,
    hess: Option<Box<Hess>>,
}

impl Compiled {
    fn new(spec: PotentialSpec) -> Self {
        let (grad, hess) = match &spec {
            PotentialSpec::Zero => (None, None),
            PotentialSpec::Frame(e) | PotentialSpec::Coordinate(e) => {
                let g: Grad = std::array::from_fn(|m| std::array::from_fn(|s| e[m].diff(s)));
                let h: Hess = std::array::from_fn(|m| std::array::from_fn(|s| std::array::from_fn(|t| g[m][s].diff(t))));
                (Some(g), Some(Box::new(h)))
            }
        };
        Compiled { spec, grad, hess }
    }
}

/// A gauge configuration: one potential per generator plus a tetrad.
#[derive(Clone, Debug)]
pub struct FieldConfig {
    algebra: Arc<AlgebraSpec>,
    potentials: Vec<Compiled>,
    tetrad: [[Expr; 4]; 4],
    tetrad_grad: Box<Hess>,
    tetrad_hess: Box<[[[[Expr; 4]; 4]; 4]; 4]>,
    translation_source: TranslationSource,
    lorentz_source: LorentzSource,
    u1: Option<U1Split>,
}

/// Tetrad data at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointFrame {
    pub x: Vec4,
    /// `k[nu][mu] = k^nu_mu`.
    pub k: Mat4,
    /// `q[mu][nu] = q^mu_nu`, the matrix inverse of `k`.
    pub q: Mat4,
    /// `det q`.
    pub lambda: f64,
    pub g_up: Mat4,
    pub g_down: Mat4,
    /// `dk[nu][mu][sigma] = d_sigma k^nu_mu`.
    pub dk: Rank3,
    /// `dq[mu][nu][sigma] = d_sigma q^mu_nu`.
    pub dq: Rank3,
    /// `ddk[nu][mu][sigma][tau]`, present when requested.
    pub ddk: Option<Box<Rank4>>,
}

impl PointFrame {
    /// `d_sigma Lambda = -Lambda tr(q d_sigma k)`.
    pub fn dlambda(&self) -> Vec4 {
        std::array::from_fn(|s| {
            let mut tr = 0.0;
            for m in 0..4 {
                for n in 0..4 {
                    tr += self.q[m][n] * self.dk[n][m][s];
                }
            }
            -self.lambda * tr
        })
    }

    /// `d_sigma g^{ab}` as `[a][b][sigma]`.
    pub fn dg_up(&self) -> Rank3 {
        let mut out = zero3();
        for a in 0..4 {
            for b in 0..4 {
                for s in 0..4 {
                    out[a][b][s] = (0..4).map(|m| eta(m) * (self.dk[a][m][s] * self.k[b][m] + self.k[a][m] * self.dk[b][m][s])).sum();
                }
            }
        }
        out
    }

    /// `d_sigma g_{ab}` as `[a][b][sigma]`.
    pub fn dg_down(&self) -> Rank3 {
        let mut out = zero3();
        for a in 0..4 {
            for b in 0..4 {
                for s in 0..4 {
                    out[a][b][s] = (0..4).map(|r| eta(r) * (self.dq[r][a][s] * self.q[r][b] + self.q[r][a] * self.dq[r][b][s])).sum();
                }
            }
        }
        out
    }

    /// `dq` differentiated once more, `[mu][nu][sigma][tau]`.
    pub fn ddq(&self) -> Option<Rank4> {
        let ddk = self.ddk.as_ref()?;
        let mut out = zero4();
        // d_t d_s q = -(d_t q d_s k q + q d_s d_t k q + q d_s k d_t q)
        for m in 0..4 {
            for n in 0..4 {
                for s in 0..4 {
                    for t in 0..4 {
                        let mut v = 0.0;
                        for a in 0..4 {
                            for b in 0..4 {
                                v += self.dq[m][a][t] * self.dk[a][b][s] * self.q[b][n]
                                    + self.q[m][a] * ddk[a][b][s][t] * self.q[b][n]
                                    + self.q[m][a] * self.dk[a][b][s] * self.dq[b][n][t];
                            }
                        }
                        out[m][n][s][t] = -v;
                    }
                }
            }
        }
        Some(out)
    }
}

/// Potential values and first derivatives for every generator.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialJet {
    /// `calA^(a)_mu`.
    pub frame: Vec<Vec4>,
    /// `d_sigma calA^(a)_mu` as `[a][mu][sigma]`.
    pub frame_grad: Vec<Mat4>,
    /// `A^(a)_mu`.
    pub coord: Vec<Vec4>,
    pub coord_grad: Vec<Mat4>,
}

fn eval(e: &Expr, x: &Vec4, what: impl FnOnce() -> String) -> Result<f64, FieldError> {
    e.eval_at(x).map_err(|source| FieldError::Eval { what: what(), x: *x, source })
}

fn identity_tetrad() -> [[Expr; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| Expr::constant(delta(i, j))))
}

impl FieldConfig {
    /// Zero potentials and identity tetrad.
    pub fn new(algebra: Arc<AlgebraSpec>) -> Self {
        let n = algebra.dim();
        let mut cfg = FieldConfig {
            potentials: (0..n).map(|_| Compiled::new(PotentialSpec::Zero)).collect(),
            algebra,
            tetrad: identity_tetrad(),
            tetrad_grad: Box::new(std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| Expr::zero())))),
            tetrad_hess: Box::new(std::array::from_fn(|_| {
                std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| Expr::zero())))
            })),
            translation_source: TranslationSource::default(),
            lorentz_source: LorentzSource::default(),
            u1: None,
        };
        cfg.compile_tetrad();
        cfg
    }

    fn compile_tetrad(&mut self) {
        let k = &self.tetrad;
        let g: Hess = std::array::from_fn(|n| std::array::from_fn(|m| std::array::from_fn(|s| k[n][m].diff(s))));
        self.tetrad_hess = Box::new(std::array::from_fn(|n| {
            std::array::from_fn(|m| std::array::from_fn(|s| std::array::from_fn(|t| g[n][m][s].diff(t))))
        }));
        self.tetrad_grad = Box::new(g);
    }

    /// Sets `k^nu_mu = k[nu][mu]`.
    pub fn with_tetrad(mut self, k: [[Expr; 4]; 4]) -> Self {
        self.tetrad = k;
        self.compile_tetrad();
        self
    }

    /// Sets the potential of `label`. Reversed Lorentz labels negate the
    /// components, so `M10` stores `-A` under `M01`.
    pub fn with_potential(mut self, label: &str, spec: PotentialSpec) -> Result<Self, FieldError> {
        let (a, sign) = self.algebra.lookup(label)?;
        let spec = match spec {
            PotentialSpec::Frame(e) if sign < 0.0 => PotentialSpec::Frame(e.map(|c| c.neg())),
            PotentialSpec::Coordinate(e) if sign < 0.0 => PotentialSpec::Coordinate(e.map(|c| c.neg())),
            other => other,
        };
        self.potentials[a] = Compiled::new(spec);
        Ok(self)
    }

    pub fn with_translation_source(mut self, source: TranslationSource) -> Self {
        self.translation_source = source;
        self
    }

    pub fn with_lorentz_source(mut self, source: LorentzSource) -> Self {
        self.lorentz_source = source;
        self
    }

    /// Declares `A^(Phi) = A^(elec) + kappa B^(grav)` in coordinate components.
    pub fn with_u1_split(mut self, elec: [Expr; 4], grav: [Expr; 4]) -> Result<Self, FieldError> {
        let phi = self
            .algebra
            .central_index()
            .ok_or_else(|| FieldError::Unsupported("the U(1) split needs an algebra with a central generator".into()))?;
        let kappa = Expr::constant(self.algebra.kappa());
        let total = std::array::from_fn(|m| elec[m].add(&kappa.mul(&grav[m])));
        self.potentials[phi] = Compiled::new(PotentialSpec::Coordinate(total));
        self.u1 = Some(U1Split { elec, grav });
        Ok(self)
    }

    pub fn algebra(&self) -> &AlgebraSpec {
        &self.algebra
    }

    pub fn algebra_arc(&self) -> &Arc<AlgebraSpec> {
        &self.algebra
    }

    pub fn kappa(&self) -> f64 {
        self.algebra.kappa()
    }

    pub fn tetrad(&self) -> &[[Expr; 4]; 4] {
        &self.tetrad
    }

    pub fn potential(&self, a: usize) -> &PotentialSpec {
        &self.potentials[a].spec
    }

    pub fn translation_source(&self) -> TranslationSource {
        self.translation_source
    }

    pub fn lorentz_source(&self) -> LorentzSource {
        self.lorentz_source
    }

    pub fn u1_split(&self) -> Option<&U1Split> {
        self.u1.as_ref()
    }

    /// True when `k` is the constant identity.
    pub fn is_flat_tetrad(&self) -> bool {
        (0..16).all(|i| self.tetrad[i / 4][i % 4].as_const() == Some(delta(i / 4, i % 4)))
    }

    fn tetrad_derived(&self, a: usize) -> bool {
        matches!(
            (self.algebra.kind(a), self.translation_source, self.lorentz_source),
            (GeneratorKind::Translation(_), TranslationSource::Tetrad, _) | (GeneratorKind::Lorentz(..), _, LorentzSource::Vacuum)
        )
    }

    /// Frame data with first derivatives.
    pub fn frame_at(&self, x: &Vec4) -> Result<PointFrame, FieldError> {
        self.frame_impl(x, false)
    }

    /// Frame data including second derivatives of the tetrad.
    pub fn frame_at_order2(&self, x: &Vec4) -> Result<PointFrame, FieldError> {
        self.frame_impl(x, true)
    }

    fn frame_impl(&self, x: &Vec4, second: bool) -> Result<PointFrame, FieldError> {
        let mut k = [[0.0; 4]; 4];
        let mut dk = zero3();
        for n in 0..4 {
            for m in 0..4 {
                k[n][m] = eval(&self.tetrad[n][m], x, || format!("tetrad k^{n}_{m}"))?;
                for s in 0..4 {
                    dk[n][m][s] = eval(&self.tetrad_grad[n][m][s], x, || format!("d_{s} k^{n}_{m}"))?;
                }
            }
        }
        let ddk = if second {
            let mut h = Box::new(zero4());
            for n in 0..4 {
                for m in 0..4 {
                    for s in 0..4 {
                        for t in s..4 {
                            let v = eval(&self.tetrad_hess[n][m][s][t], x, || format!("d_{s} d_{t} k^{n}_{m}"))?;
                            h[n][m][s][t] = v;
                            h[n][m][t][s] = v;
                        }
                    }
                }
            }
            Some(h)
        } else {
            None
        };
        frame_from_values(*x, k, dk, ddk)
    }

    /// Frames for a batch of points.
    pub fn frames(&self, points: &[Vec4], exec: Exec) -> Result<Vec<PointFrame>, FieldError> {
        exec.try_map(points.len(), |i| self.frame_at(&points[i]))
    }

    fn needs_order2(&self) -> bool {
        self.lorentz_source == LorentzSource::Vacuum
    }

    /// Frame with whatever derivative order the potentials require.
    pub fn frame_for_potentials(&self, x: &Vec4) -> Result<PointFrame, FieldError> {
        self.frame_impl(x, self.needs_order2())
    }

    fn expr_jet(&self, a: usize, x: &Vec4) -> Result<(Vec4, Mat4), FieldError> {
        let c = &self.potentials[a];
        let mut val = [0.0; 4];
        let mut grad = [[0.0; 4]; 4];
        if let (PotentialSpec::Frame(e) | PotentialSpec::Coordinate(e), Some(g)) = (&c.spec, &c.grad) {
            let label = self.algebra.label(a);
            for m in 0..4 {
                val[m] = eval(&e[m], x, || format!("potential {label}[{m}]"))?;
                for s in 0..4 {
                    grad[m][s] = eval(&g[m][s], x, || format!("d_{s} potential {label}[{m}]"))?;
                }
            }
        }
        Ok((val, grad))
    }

    /// Potentials evaluated as if `k = delta`: frame and coordinate
    /// components coincide and tetrad-derived potentials vanish.
    pub fn internal_jet(&self, x: &Vec4) -> Result<PotentialJet, FieldError> {
        let n = self.algebra.dim();
        let mut jet = PotentialJet::zeros(n);
        for a in 0..n {
            if self.tetrad_derived(a) {
                continue;
            }
            let (v, g) = self.expr_jet(a, x)?;
            jet.frame[a] = v;
            jet.frame_grad[a] = g;
            jet.coord[a] = v;
            jet.coord_grad[a] = g;
        }
        Ok(jet)
    }

    /// Frame and coordinate potentials with first derivatives at the frame's
    /// point. Vacuum Lorentz potentials need `frame_at_order2`.
    pub fn potential_jet(&self, frame: &PointFrame) -> Result<PotentialJet, FieldError> {
        let n = self.algebra.dim();
        let x = &frame.x;
        let mut jet = PotentialJet::zeros(n);
        let vacuum = if self.needs_order2() {
            if frame.ddk.is_none() {
                return Err(FieldError::Invalid("vacuum Lorentz potentials need second tetrad derivatives".into()));
            }
            Some(geometry::vacuum_connection_jet(self.algebra.convention(), frame, geometry::VacuumForm::Derived))
        } else {
            None
        };
        for a in 0..n {
            let (fv, fg) = match (self.algebra.kind(a), &vacuum) {
                (GeneratorKind::Translation(e), _) if self.translation_source == TranslationSource::Tetrad => {
                    let v = std::array::from_fn(|m| frame.k[e][m] - delta(e, m));
                    let g = std::array::from_fn(|m| std::array::from_fn(|s| frame.dk[e][m][s]));
                    (v, g)
                }
                (GeneratorKind::Lorentz(p, r), Some(vac)) => {
                    let slot = crate::algebra::pair_slot(p, r).expect("ordered pair").0;
                    (vac.values[slot], vac.grads[slot])
                }
                _ => {
                    let (v, g) = self.expr_jet(a, x)?;
                    if let PotentialSpec::Coordinate(_) = self.potentials[a].spec {
                        jet.coord[a] = v;
                        jet.coord_grad[a] = g;
                        let (fv, fg) = coord_to_frame(frame, &v, &g);
                        jet.frame[a] = fv;
                        jet.frame_grad[a] = fg;
                        continue;
                    }
                    (v, g)
                }
            };
            let (cv, cg) = frame_to_coord(frame, &fv, &fg);
            jet.frame[a] = fv;
            jet.frame_grad[a] = fg;
            jet.coord[a] = cv;
            jet.coord_grad[a] = cg;
        }
        Ok(jet)
    }

    /// `d_sigma d_tau A^(a)_mu` as `[mu][sigma][tau]`, needing `frame_at_order2`
    /// for frame-specified or tetrad-derived potentials.
    pub fn coordinate_hessian(&self, a: usize, frame: &PointFrame) -> Result<Rank3, FieldError> {
        let x = &frame.x;
        let mut out = zero3();
        match (self.algebra.kind(a), self.translation_source, self.lorentz_source) {
            (GeneratorKind::Lorentz(..), _, LorentzSource::Vacuum) => {
                return Err(FieldError::Unsupported("second derivatives of the vacuum connection are not available".into()));
            }
            (GeneratorKind::Translation(e), TranslationSource::Tetrad, _) => {
                let ddq = frame.ddq().ok_or_else(|| FieldError::Invalid("second tetrad derivatives required".into()))?;
                for m in 0..4 {
                    for s in 0..4 {
                        for t in 0..4 {
                            out[m][s][t] = -ddq[e][m][s][t];
                        }
                    }
                }
                return Ok(out);
            }
            _ => {}
        }
        let c = &self.potentials[a];
        let hess = match &c.hess {
            None => return Ok(out),
            Some(h) => h,
        };
        let label = self.algebra.label(a);
        let mut h = zero3();
        for m in 0..4 {
            for s in 0..4 {
                for t in s..4 {
                    let v = eval(&hess[m][s][t], x, || format!("second derivative of potential {label}[{m}]"))?;
                    h[m][s][t] = v;
                    h[m][t][s] = v;
                }
            }
        }
        match &c.spec {
            PotentialSpec::Coordinate(_) => Ok(h),
            PotentialSpec::Frame(_) => {
                let (v, g) = self.expr_jet(a, x)?;
                let ddq = frame.ddq().ok_or_else(|| FieldError::Invalid("second tetrad derivatives required".into()))?;
                // A_m = q^n_m calA_n
                for m in 0..4 {
                    for s in 0..4 {
                        for t in 0..4 {
                            out[m][s][t] = (0..4)
                                .map(|n| {
                                    ddq[n][m][s][t] * v[n]
                                        + frame.dq[n][m][s] * g[n][t]
                                        + frame.dq[n][m][t] * g[n][s]
                                        + frame.q[n][m] * h[n][s][t]
                                })
                                .sum();
                        }
                    }
                }
                Ok(out)
            }
            PotentialSpec::Zero => Ok(out),
        }
    }
}

impl PotentialJet {
    pub fn zeros(n: usize) -> Self {
        PotentialJet {
            frame: vec![[0.0; 4]; n],
            frame_grad: vec![[[0.0; 4]; 4]; n],
            coord: vec![[0.0; 4]; n],
            coord_grad: vec![[[0.0; 4]; 4]; n],
        }
    }
}

/// `A_m = q^n_m calA_n` with its derivative.
pub fn frame_to_coord(frame: &PointFrame, v: &Vec4, g: &Mat4) -> (Vec4, Mat4) {
    let cv = std::array::from_fn(|m| (0..4).map(|n| frame.q[n][m] * v[n]).sum());
    let cg = std::array::from_fn(|m| {
        std::array::from_fn(|s| (0..4).map(|n| frame.dq[n][m][s] * v[n] + frame.q[n][m] * g[n][s]).sum())
    });
    (cv, cg)
}

/// `calA_n = k^m_n A_m` with its derivative.
pub fn coord_to_frame(frame: &PointFrame, v: &Vec4, g: &Mat4) -> (Vec4, Mat4) {
    let fv = std::array::from_fn(|n| (0..4).map(|m| frame.k[m][n] * v[m]).sum());
    let fg = std::array::from_fn(|n| {
        std::array::from_fn(|s| (0..4).map(|m| frame.dk[m][n][s] * v[m] + frame.k[m][n] * g[m][s]).sum())
    });
    (fv, fg)
}

/// Builds a frame from tetrad values and derivatives.
pub fn frame_from_values(x: Vec4, k: Mat4, dk: Rank3, ddk: Option<Box<Rank4>>) -> Result<PointFrame, FieldError> {
    let dk_det = det(&k);
    if !(dk_det.abs() > SINGULAR_THRESHOLD) {
        return Err(FieldError::Singular { det: dk_det, x });
    }
    let q = inverse(&k).ok_or(FieldError::Singular { det: dk_det, x })?;
    let lambda = det(&q);
    let mut g_up = [[0.0; 4]; 4];
    let mut g_down = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            g_up[a][b] = (0..4).map(|m| eta(m) * k[a][m] * k[b][m]).sum();
            g_down[a][b] = (0..4).map(|r| eta(r) * q[r][a] * q[r][b]).sum();
        }
    }
    let mut dq = zero3();
    for s in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                let mut v = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        v += q[m][a] * dk[a][b][s] * q[b][n];
                    }
                }
                dq[m][n][s] = -v;
            }
        }
    }
    Ok(PointFrame { x, k, q, lambda, g_up, g_down, dk, dq, ddk })
}

/// Residuals of the two partial differential equations satisfied by the
/// volume factor `Lambda = det q`, maximised over generators.
pub fn lambda_pde_residual(cfg: &FieldConfig, spec: &AlgebraSpec, x: &Vec4) -> Result<(f64, f64), FieldError> {
    lambda_pde_residual_with_power(cfg, spec, x, 1.0)
}

/// As [`lambda_pde_residual`] for the ansatz `Lambda = (det q)^power`.
pub fn lambda_pde_residual_with_power(
    cfg: &FieldConfig,
    spec: &AlgebraSpec,
    x: &Vec4,
    power: f64,
) -> Result<(f64, f64), FieldError> {
    let f = cfg.frame_at(x)?;
    let lam = f.lambda.powf(power);
    // dLam[n][m] = dLambda / dk^n_m
    let dlam: Mat4 = std::array::from_fn(|n| std::array::from_fn(|m| -power * lam * f.q[m][n]));
    let (mut res_a, mut res_b) = (0.0f64, 0.0f64);
    for a in 0..spec.dim() {
        let mut xv = [0.0; 4];
        let mut dx = [[0.0; 4]; 4];
        for m in 0..4 {
            xv[m] = eval(&spec.spacetime_action(a)[m], x, || format!("space-time action of {}", spec.label(a)))?;
            for s in 0..4 {
                dx[m][s] = eval(&spec.spacetime_action_grad(a)[m][s], x, || "space-time action derivative".into())?;
            }
        }
        let mut ra = 0.0;
        for n in 0..4 {
            for m in 0..4 {
                let mut coef = 0.0;
                for s in 0..4 {
                    coef += f.k[s][m] * dx[n][s] - f.k[n][s] * dx[s][m];
                }
                ra += coef * dlam[n][m];
            }
        }
        res_a = res_a.max(ra.abs());
        for s in 0..4 {
            let mut rb = lam * xv[s];
            for n in 0..4 {
                for m in 0..4 {
                    rb += xv[n] * f.k[s][m] * dlam[n][m];
                }
            }
            res_b = res_b.max(rb.abs());
        }
    }
    Ok((res_a, res_b))
}

/// Translational potentials `(calA^(mu)_nu, A^(mu)_nu)` derived from the tetrad.
pub fn translational_potentials(cfg: &FieldConfig, x: &Vec4) -> Result<(Mat4, Mat4), FieldError> {
    let f = cfg.frame_at(x)?;
    let cal = std::array::from_fn(|m| std::array::from_fn(|n| f.k[m][n] - IDENTITY[m][n]));
    let coord = std::array::from_fn(|m| std::array::from_fn(|n| IDENTITY[m][n] - f.q[m][n]));
    Ok((cal, coord))
}
