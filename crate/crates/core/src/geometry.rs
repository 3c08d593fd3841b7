//! Curvatures, torsion and connections evaluated pointwise.

use nalgebra::DMatrix;

use crate::algebra::{AlgebraSpec, BracketConvention, GeneratorKind, LORENTZ_PAIRS};
use crate::expr::Expr;
use crate::fields::{FieldConfig, FieldError, PointFrame};
use crate::tensor::{eta, zero3, Mat4, Rank3, Vec4};

/// Which curvature a [`CurvatureField`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// `F` of the potentials with the tetrad ignored.
    Internal,
    /// `calF` with tetrad-frame form indices.
    Generalized,
    /// `F` of the coordinate potentials `A = q calA`.
    Extended,
}

/// One antisymmetric 4x4 array per generator.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureField {
    pub flavor: Flavor,
    pub labels: Vec<String>,
    pub values: Vec<Mat4>,
}

impl CurvatureField {
    fn new(alg: &AlgebraSpec, flavor: Flavor, values: Vec<Mat4>) -> Self {
        CurvatureField { flavor, labels: alg.generators().iter().map(|g| g.label.clone()).collect(), values }
    }

    /// Component of generator `a`.
    pub fn get(&self, a: usize) -> &Mat4 {
        &self.values[a]
    }

    /// Component by label; reversed Lorentz labels return the negated array.
    pub fn by_label(&self, alg: &AlgebraSpec, label: &str) -> Result<Mat4, FieldError> {
        let (a, sign) = alg.lookup(label)?;
        Ok(self.values[a].map(|row| row.map(|v| sign * v)))
    }

    /// Curvature of the Lorentz pair `(mu, nu)`, antisymmetric in the pair.
    pub fn lorentz(&self, alg: &AlgebraSpec, mu: usize, nu: usize) -> Mat4 {
        match alg.lorentz_index(mu, nu) {
            Some((a, sign)) => self.values[a].map(|row| row.map(|v| sign * v)),
            None => [[0.0; 4]; 4],
        }
    }
}

/// `T^sigma_{mu nu}` stored as `t[sigma][mu][nu]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionField {
    pub t: Rank3,
}

/// Generic curvature `dP + s (1/2) C (PP - PP)` from values and gradients
/// (`grads[a][mu][sigma] = d_sigma P^a_mu`). `quadratic` scales the
/// quadratic term and is 1 except in ablations.
pub fn curvature_from_jet(alg: &AlgebraSpec, vals: &[Vec4], grads: &[Mat4], quadratic: f64) -> Vec<Mat4> {
    let s = alg.convention().sign() * quadratic;
    let mut out = vec![[[0.0; 4]; 4]; alg.dim()];
    for (a, f) in out.iter_mut().enumerate() {
        for m in 0..4 {
            for n in m + 1..4 {
                f[m][n] = grads[a][m][n] - grads[a][n][m];
            }
        }
    }
    if s != 0.0 {
        for e in alg.entries() {
            let f = &mut out[e.a];
            for m in 0..4 {
                for n in m + 1..4 {
                    f[m][n] += s * e.value * vals[e.b][m] * vals[e.c][n];
                }
            }
        }
    }
    for f in out.iter_mut() {
        for m in 0..4 {
            for n in m + 1..4 {
                f[n][m] = -f[m][n];
            }
        }
    }
    out
}

/// Curvature of the potentials with `k = delta`.
pub fn internal_curvature(cfg: &FieldConfig, x: &Vec4) -> Result<CurvatureField, FieldError> {
    let jet = cfg.internal_jet(x)?;
    let alg = cfg.algebra();
    Ok(CurvatureField::new(alg, Flavor::Internal, curvature_from_jet(alg, &jet.coord, &jet.coord_grad, 1.0)))
}

fn rep_matrices<'a>(cfg: &'a FieldConfig, rep_name: &str) -> Result<&'a [DMatrix<f64>], FieldError> {
    Ok(&cfg.algebra().representation(rep_name)?.matrices)
}

fn contract(mats: &[DMatrix<f64>], coeffs: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let n = mats.first().map_or(0, |m| m.nrows());
    let mut out = DMatrix::zeros(n, n);
    for (m, c) in mats.iter().zip(coeffs) {
        if c != 0.0 {
            out += m * c;
        }
    }
    out
}

/// `Gamma_mu = A^(a)_mu X_(a)`, one matrix per `mu`.
pub fn spin_connection(cfg: &FieldConfig, rep_name: &str, x: &Vec4) -> Result<[DMatrix<f64>; 4], FieldError> {
    let mats = rep_matrices(cfg, rep_name)?;
    let jet = cfg.internal_jet(x)?;
    Ok(std::array::from_fn(|m| contract(mats, jet.coord.iter().map(|v| v[m]))))
}

/// `R_{mu nu} = F^(a)_{mu nu} X_(a)` as `r[mu][nu]`.
pub fn curvature_tensor(cfg: &FieldConfig, rep_name: &str, x: &Vec4) -> Result<[[DMatrix<f64>; 4]; 4], FieldError> {
    let mats = rep_matrices(cfg, rep_name)?;
    let f = internal_curvature(cfg, x)?;
    Ok(std::array::from_fn(|m| std::array::from_fn(|n| contract(mats, f.values.iter().map(|v| v[m][n])))))
}

/// `R_{mu nu} = d_nu Gamma_mu - d_mu Gamma_nu + [Gamma_mu, Gamma_nu]`.
pub fn curvature_tensor_from_connection(
    cfg: &FieldConfig,
    rep_name: &str,
    x: &Vec4,
) -> Result<[[DMatrix<f64>; 4]; 4], FieldError> {
    let mats = rep_matrices(cfg, rep_name)?;
    let jet = cfg.internal_jet(x)?;
    let gamma: [DMatrix<f64>; 4] = std::array::from_fn(|m| contract(mats, jet.coord.iter().map(|v| v[m])));
    let dgamma = |m: usize, s: usize| contract(mats, jet.coord_grad.iter().map(|g| g[m][s]));
    Ok(std::array::from_fn(|m| {
        std::array::from_fn(|n| dgamma(m, n) - dgamma(n, m) + &gamma[m] * &gamma[n] - &gamma[n] * &gamma[m])
    }))
}

/// `T^s_{mn} = q^s_r (k^r_{m,t} k^t_n - k^r_{n,t} k^t_m)`.
pub fn torsion_from_frame(f: &PointFrame) -> TorsionField {
    let mut t = zero3();
    // w[r][m][n] = k^r_{m,t} k^t_n
    let mut w = zero3();
    for r in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                w[r][m][n] = (0..4).map(|tau| f.dk[r][m][tau] * f.k[tau][n]).sum();
            }
        }
    }
    for s in 0..4 {
        for m in 0..4 {
            for n in m + 1..4 {
                let v: f64 = (0..4).map(|r| f.q[s][r] * (w[r][m][n] - w[r][n][m])).sum();
                t[s][m][n] = v;
                t[s][n][m] = -v;
            }
        }
    }
    TorsionField { t }
}

/// Torsion and `d_l T^s_{mn}` as `[s][m][n][l]`; needs second tetrad derivatives.
pub fn torsion_jet(f: &PointFrame) -> Option<(TorsionField, crate::tensor::Rank4)> {
    let ddk = f.ddk.as_ref()?;
    let tor = torsion_from_frame(f);
    let mut w = zero3();
    let mut dw = crate::tensor::zero4();
    for r in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                w[r][m][n] = (0..4).map(|tau| f.dk[r][m][tau] * f.k[tau][n]).sum();
                for l in 0..4 {
                    dw[r][m][n][l] = (0..4).map(|tau| ddk[r][m][tau][l] * f.k[tau][n] + f.dk[r][m][tau] * f.dk[tau][n][l]).sum();
                }
            }
        }
    }
    let mut dt = crate::tensor::zero4();
    for s in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                for l in 0..4 {
                    dt[s][m][n][l] = (0..4)
                        .map(|r| f.dq[s][r][l] * (w[r][m][n] - w[r][n][m]) + f.q[s][r] * (dw[r][m][n][l] - dw[r][n][m][l]))
                        .sum();
                }
            }
        }
    }
    Some((tor, dt))
}

pub fn torsion(cfg: &FieldConfig, x: &Vec4) -> Result<TorsionField, FieldError> {
    Ok(torsion_from_frame(&cfg.frame_at(x)?))
}

/// `calF^(a)_{mn} = calA_{m,s} k^s_n - calA_{n,s} k^s_m + s C calA calA - calA_s T^s_{mn}`.
pub fn generalized_curvature(cfg: &FieldConfig, x: &Vec4) -> Result<CurvatureField, FieldError> {
    let frame = cfg.frame_for_potentials(x)?;
    generalized_curvature_at(cfg, &frame)
}

pub fn generalized_curvature_at(cfg: &FieldConfig, frame: &PointFrame) -> Result<CurvatureField, FieldError> {
    let alg = cfg.algebra();
    let jet = cfg.potential_jet(frame)?;
    let tor = torsion_from_frame(frame);
    // frame derivatives d_n calA_m = calA_{m,s} k^s_n
    let fgrad: Vec<Mat4> = jet
        .frame_grad
        .iter()
        .map(|g| std::array::from_fn(|m| std::array::from_fn(|n| (0..4).map(|s| g[m][s] * frame.k[s][n]).sum())))
        .collect();
    let mut values = curvature_from_jet(alg, &jet.frame, &fgrad, 1.0);
    for (a, f) in values.iter_mut().enumerate() {
        for m in 0..4 {
            for n in 0..4 {
                f[m][n] -= (0..4).map(|s| jet.frame[a][s] * tor.t[s][m][n]).sum::<f64>();
            }
        }
    }
    Ok(CurvatureField::new(alg, Flavor::Generalized, values))
}

/// Curvature of the coordinate potentials `A = q calA` for every generator.
pub fn coordinate_curvature_at(cfg: &FieldConfig, frame: &PointFrame) -> Result<CurvatureField, FieldError> {
    let alg = cfg.algebra();
    let jet = cfg.potential_jet(frame)?;
    Ok(CurvatureField::new(alg, Flavor::Extended, curvature_from_jet(alg, &jet.coord, &jet.coord_grad, 1.0)))
}

/// `k^s_m k^r_n F^(a)_{sr}`: the generalized curvature reached through the
/// coordinate potentials.
pub fn generalized_from_coordinate(cfg: &FieldConfig, x: &Vec4) -> Result<CurvatureField, FieldError> {
    let frame = cfg.frame_for_potentials(x)?;
    let f = coordinate_curvature_at(cfg, &frame)?;
    let k = &frame.k;
    let values = f
        .values
        .iter()
        .map(|fa| {
            std::array::from_fn(|m| {
                std::array::from_fn(|n| {
                    let mut v = 0.0;
                    for s in 0..4 {
                        for r in 0..4 {
                            v += k[s][m] * k[r][n] * fa[s][r];
                        }
                    }
                    v
                })
            })
        })
        .collect();
    Ok(CurvatureField::new(cfg.algebra(), Flavor::Generalized, values))
}

/// Lorentz curvatures and the central `F^(Phi)` of the coordinate potentials.
pub fn extended_curvatures(cfg: &FieldConfig, x: &Vec4) -> Result<(CurvatureField, Mat4), FieldError> {
    let frame = cfg.frame_for_potentials(x)?;
    extended_curvatures_at(cfg, &frame)
}

pub fn extended_curvatures_at(cfg: &FieldConfig, frame: &PointFrame) -> Result<(CurvatureField, Mat4), FieldError> {
    let phi = central(cfg)?;
    let mut all = coordinate_curvature_at(cfg, frame)?;
    let fphi = all.values[phi];
    for (a, v) in all.values.iter_mut().enumerate() {
        if !matches!(cfg.algebra().kind(a), GeneratorKind::Lorentz(..)) {
            *v = [[0.0; 4]; 4];
        }
    }
    Ok((all, fphi))
}

fn central(cfg: &FieldConfig) -> Result<usize, FieldError> {
    cfg.algebra()
        .central_index()
        .ok_or_else(|| FieldError::Unsupported("extended curvatures need the extended Poincare algebra".into()))
}

fn expr_curl(e: &[Expr; 4], x: &Vec4) -> Result<(Vec4, Mat4), FieldError> {
    let mut v = [0.0; 4];
    let mut g = [[0.0; 4]; 4];
    for m in 0..4 {
        v[m] = e[m].eval_at(x).map_err(|source| FieldError::Eval { what: format!("U(1) component {m}"), x: *x, source })?;
        for s in 0..4 {
            g[m][s] = e[m]
                .diff(s)
                .eval_at(x)
                .map_err(|source| FieldError::Eval { what: format!("d_{s} of U(1) component {m}"), x: *x, source })?;
        }
    }
    Ok((v, g))
}

/// `(F^(elec), F^(grav))` with `F^(Phi) = F^(elec) + kappa F^(grav)`.
pub fn split_u1(cfg: &FieldConfig, x: &Vec4) -> Result<(Mat4, Mat4), FieldError> {
    central(cfg)?;
    let split = cfg
        .u1_split()
        .ok_or_else(|| FieldError::Invalid("split_u1 needs separately declared electric and gravitational potentials".into()))?;
    let frame = cfg.frame_for_potentials(x)?;
    let jet = cfg.potential_jet(&frame)?;
    let (_, ge) = expr_curl(&split.elec, x)?;
    let (_, gg) = expr_curl(&split.grav, x)?;
    let s = cfg.algebra().convention().sign();
    let mut felec = [[0.0; 4]; 4];
    let mut fgrav = [[0.0; 4]; 4];
    for m in 0..4 {
        for n in 0..4 {
            felec[m][n] = ge[m][n] - ge[n][m];
            fgrav[m][n] = gg[m][n] - gg[n][m];
        }
    }
    for e in cfg.algebra().central_unit_entries() {
        for m in 0..4 {
            for n in 0..4 {
                fgrav[m][n] += s * e.value * jet.coord[e.b][m] * jet.coord[e.c][n];
            }
        }
    }
    Ok((felec, fgrav))
}

/// `Gamma_{mn,s} = 1/2 (d_m g_ns + d_n g_ms - d_s g_mn)` as `[m][n][s]`.
pub fn levi_civita_from_frame(f: &PointFrame) -> Rank3 {
    let dg = f.dg_down();
    let mut out = zero3();
    for m in 0..4 {
        for n in m..4 {
            for s in 0..4 {
                let v = 0.5 * (dg[n][s][m] + dg[m][s][n] - dg[m][n][s]);
                out[m][n][s] = v;
                out[n][m][s] = v;
            }
        }
    }
    out
}

pub fn levi_civita(cfg: &FieldConfig, x: &Vec4) -> Result<Rank3, FieldError> {
    Ok(levi_civita_from_frame(&cfg.frame_at(x)?))
}

/// `Gamma^l_{mn} = g^{ls} Gamma_{mn,s}` as `[l][m][n]`.
pub fn christoffel_second(f: &PointFrame) -> Rank3 {
    let low = levi_civita_from_frame(f);
    let mut out = zero3();
    for l in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                out[l][m][n] = (0..4).map(|s| f.g_up[l][s] * low[m][n][s]).sum();
            }
        }
    }
    out
}

/// Levi-Civita spin connection `omega^{ab}_c` of the tetrad in frame
/// components, one 4-vector per stored Lorentz pair.
pub fn levi_civita_spin_connection(f: &PointFrame) -> [Vec4; 6] {
    let gam = christoffel_second(f);
    // omega^a_{b mu} = q^a_n (d_mu k^n_b + Gamma^n_{mu l} k^l_b)
    let mut w = zero3();
    for a in 0..4 {
        for b in 0..4 {
            for mu in 0..4 {
                let mut v = 0.0;
                for n in 0..4 {
                    let inner = f.dk[n][b][mu] + (0..4).map(|l| gam[n][mu][l] * f.k[l][b]).sum::<f64>();
                    v += f.q[a][n] * inner;
                }
                w[a][b][mu] = v;
            }
        }
    }
    std::array::from_fn(|slot| {
        let (a, b) = LORENTZ_PAIRS[slot];
        std::array::from_fn(|c| (0..4).map(|mu| w[a][b][mu] * eta(b) * f.k[mu][c]).sum())
    })
}

/// Which vacuum-connection formula to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VacuumForm {
    /// `s (1/2 T_msr - 1/2 (T_srm - T_rsm))`, the solution of the Lorentz
    /// field equations.
    #[default]
    Derived,
    /// `1/2 T_msr + 1/2 (T_srm - T_rsm)` transcribed without change.
    AsPrinted,
}

/// Vacuum Lorentz potentials `calA^(sr)_m` (frame components) and their
/// coordinate gradients, one entry per stored pair.
#[derive(Clone, Debug, PartialEq)]
pub struct VacuumJet {
    pub values: [Vec4; 6],
    /// `grads[slot][m][l] = d_l calA^(slot)_m`; zero without second derivatives.
    pub grads: [Mat4; 6],
}

fn vacuum_from_torsion(conv: BracketConvention, t: &dyn Fn(usize, usize, usize) -> f64, form: VacuumForm) -> [Vec4; 6] {
    // lowered torsion T_{m s r} = eta_{m v} T^v_{s r}
    let tl = |m: usize, s: usize, r: usize| eta(m) * t(m, s, r);
    let (c1, c2) = match form {
        VacuumForm::Derived => (0.5 * conv.sign(), -0.5 * conv.sign()),
        VacuumForm::AsPrinted => (0.5, 0.5),
    };
    std::array::from_fn(|slot| {
        let (s, r) = LORENTZ_PAIRS[slot];
        std::array::from_fn(|m| eta(s) * eta(r) * (c1 * tl(m, s, r) + c2 * (tl(s, r, m) - tl(r, s, m))))
    })
}

pub fn vacuum_connection_jet(conv: BracketConvention, f: &PointFrame, form: VacuumForm) -> VacuumJet {
    match torsion_jet(f) {
        Some((tor, dt)) => {
            let values = vacuum_from_torsion(conv, &|a, b, c| tor.t[a][b][c], form);
            let per_l: Vec<[Vec4; 6]> = (0..4).map(|l| vacuum_from_torsion(conv, &|a, b, c| dt[a][b][c][l], form)).collect();
            let grads = std::array::from_fn(|slot| std::array::from_fn(|m| std::array::from_fn(|l| per_l[l][slot][m])));
            VacuumJet { values, grads }
        }
        None => {
            let tor = torsion_from_frame(f);
            VacuumJet { values: vacuum_from_torsion(conv, &|a, b, c| tor.t[a][b][c], form), grads: [[[0.0; 4]; 4]; 6] }
        }
    }
}

/// Non-relativistic `(B^0, B^1, B^2, B^3)` from `h^i = g^{0i} - eta^{0i}`.
pub fn b_grav_nonrel(g_up: &Mat4) -> Vec4 {
    let h = [g_up[0][1], g_up[0][2], g_up[0][3]];
    let h2: f64 = h.iter().map(|v| v * v).sum();
    [-h2 / 8.0, -h[0] / 2.0, -h[1] / 2.0, -h[2] / 2.0]
}

/// [`b_grav_nonrel`] with coordinate derivatives `[mu][sigma]`.
pub fn b_grav_nonrel_jet(f: &PointFrame) -> (Vec4, Mat4) {
    let b = b_grav_nonrel(&f.g_up);
    let dg = f.dg_up();
    let h = [f.g_up[0][1], f.g_up[0][2], f.g_up[0][3]];
    let mut db = [[0.0; 4]; 4];
    for s in 0..4 {
        let dh = [dg[0][1][s], dg[0][2][s], dg[0][3][s]];
        db[0][s] = -(h[0] * dh[0] + h[1] * dh[1] + h[2] * dh[2]) / 4.0;
        for i in 0..3 {
            db[i + 1][s] = -dh[i] / 2.0;
        }
    }
    (b, db)
}
