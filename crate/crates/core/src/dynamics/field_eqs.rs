//! Euler-Lagrange residuals, the vacuum connection and stress tensors of the
//! electro-gravitational system.

use crate::algebra::{AlgebraSpec, LORENTZ_PAIRS};
use crate::dynamics::density::raise_both;
use crate::dynamics::matter::MatterSpec;
use crate::exec::Exec;
use crate::fields::{FieldConfig, FieldError, PointFrame, PotentialJet};
use crate::geometry::{
    coordinate_curvature_at, generalized_curvature_at, torsion_from_frame, vacuum_connection_jet, VacuumForm,
};
use crate::grid::GridSpec;
use crate::tensor::{delta, eta, max_abs, Mat4, Rank3, Vec4};

/// Residual of a field equation at each scanned point.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualScan {
    pub records: Vec<(Vec4, f64)>,
}

impl ResidualScan {
    pub fn max(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.1))
    }
}

fn central_and_phi(alg: &AlgebraSpec) -> Result<usize, FieldError> {
    alg.central_index()
        .ok_or_else(|| FieldError::Unsupported("this field equation needs the extended Poincare algebra".into()))
}

/// Coordinate `d_s F^(Phi)_{ab}` as `[a][b][s]`.
fn dfphi(cfg: &FieldConfig, frame: &PointFrame, jet: &PotentialJet, phi: usize) -> Result<Rank3, FieldError> {
    let h = cfg.coordinate_hessian(phi, frame)?;
    let s = cfg.algebra().convention().sign();
    let mut out = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for sg in 0..4 {
                out[a][b][sg] = h[a][b][sg] - h[b][a][sg];
            }
        }
    }
    for e in cfg.algebra().entries().iter().filter(|e| e.a == phi) {
        let (vb, vc) = (&jet.coord[e.b], &jet.coord[e.c]);
        let (gb, gc) = (&jet.coord_grad[e.b], &jet.coord_grad[e.c]);
        for a in 0..4 {
            for b in 0..4 {
                for sg in 0..4 {
                    out[a][b][sg] += s * e.value * (gb[a][sg] * vc[b] + vb[a] * gc[b][sg]);
                }
            }
        }
    }
    Ok(out)
}

/// `d_s (Lambda F^(Phi) m s)` for each free index `m`.
pub fn u1_divergence(cfg: &FieldConfig, x: &Vec4) -> Result<Vec4, FieldError> {
    let phi = central_and_phi(cfg.algebra())?;
    let frame = cfg.frame_at_order2(x)?;
    let jet = cfg.potential_jet(&frame)?;
    let f = coordinate_curvature_at(cfg, &frame)?.values[phi];
    let df = dfphi(cfg, &frame, &jet, phi)?;
    let dl = frame.dlambda();
    let dg = frame.dg_up();
    let g = &frame.g_up;
    let mut out = [0.0; 4];
    for (m, o) in out.iter_mut().enumerate() {
        let mut v = 0.0;
        for sg in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    let ggf = g[m][a] * g[sg][b];
                    v += dl[sg] * ggf * f[a][b]
                        + frame.lambda
                            * ((dg[m][a][sg] * g[sg][b] + g[m][a] * dg[sg][b][sg]) * f[a][b] + ggf * df[a][b][sg]);
                }
            }
        }
        *o = v;
    }
    Ok(out)
}

/// Max over components of the central field equation at every grid point.
pub fn el_residual_u1(cfg: &FieldConfig, grid: &GridSpec, exec: Exec) -> Result<ResidualScan, FieldError> {
    let records = exec.try_map(grid.len(), |i| {
        let x = grid.point(i);
        u1_divergence(cfg, &x).map(|d| (x, max_abs(d)))
    })?;
    Ok(ResidualScan { records })
}

/// Which form of the Lorentz-potential field equation to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Eq1Form {
    /// The Euler-Lagrange expression of the electro-gravitational density,
    /// written in the same building blocks as the printed equation.
    #[default]
    Derived,
    /// The printed equation transcribed literally.
    AsPrinted,
}

/// Lorentz-potential field equation residual, max over `(mu, eps, theta)`.
pub fn el_residual_lorentz(cfg: &FieldConfig, x: &Vec4) -> Result<f64, FieldError> {
    el_residual_lorentz_with(cfg, x, Eq1Form::Derived)
}

pub fn el_residual_lorentz_with(cfg: &FieldConfig, x: &Vec4, form: Eq1Form) -> Result<f64, FieldError> {
    let alg = cfg.algebra();
    let phi = central_and_phi(alg)?;
    let frame = cfg.frame_for_potentials(x)?;
    let jet = cfg.potential_jet(&frame)?;
    let tor = torsion_from_frame(&frame).t;
    let fphi = coordinate_curvature_at(cfg, &frame)?.values[phi];
    let fup = raise_both(&frame.g_up, &fphi);
    let k = &frame.k;
    let s = alg.convention().sign();

    // C^Phi_{sigma, (eps theta)}
    let cphi = |sg: usize, e: usize, t: usize| -> f64 {
        match (alg.translation_index(sg), alg.lorentz_index(e, t)) {
            (Some(p), Some((m, sign))) => sign * alg.c(phi, p, m),
            _ => 0.0,
        }
    };
    let atr = |sg: usize, n: usize| alg.translation_index(sg).map_or(0.0, |p| jet.coord[p][n]);
    // tilde A^r_{e n} = eta_{e e} A^(r e)_n
    let at = |r: usize, e: usize, n: usize| alg.lorentz_index(r, e).map_or(0.0, |(m, sign)| sign * eta(e) * jet.coord[m][n]);
    let trace: Vec4 = std::array::from_fn(|e| (0..4).map(|r| tor[r][e][r]).sum());

    let mut worst = 0.0f64;
    for mu in 0..4 {
        for e in 0..4 {
            for t in 0..4 {
                let mut b = [0.0; 8];
                for sg in 0..4 {
                    let c = cphi(sg, e, t);
                    if c != 0.0 {
                        b[0] += c * (0..4).map(|n| atr(sg, n) * fup[mu][n]).sum::<f64>();
                    }
                }
                b[1] = (0..4).map(|r| k[mu][r] * tor[r][e][t]).sum();
                b[2] = k[mu][t] * trace[e];
                b[3] = k[mu][e] * trace[t];
                for r in 0..4 {
                    for n in 0..4 {
                        b[4] += k[mu][r] * k[n][t] * at(r, e, n);
                        b[5] += k[mu][t] * k[n][r] * at(r, e, n);
                        b[6] += k[mu][e] * k[n][r] * at(r, t, n);
                        b[7] += k[mu][r] * k[n][e] * at(r, t, n);
                    }
                }
                let v = match form {
                    Eq1Form::Derived => 2.0 * s * b[0] + b[1] - b[2] + b[3] + s * (b[4] - b[5] + b[6] - b[7]),
                    Eq1Form::AsPrinted => b[0] + b[1] - b[2] + b[3] + b[4] - b[5] - b[6] - b[7],
                };
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Vacuum Lorentz potentials `calA^(sr)_m` of the tetrad, one frame
/// 4-vector per stored pair.
pub fn vacuum_connection(cfg: &FieldConfig, x: &Vec4) -> Result<[Vec4; 6], FieldError> {
    let frame = cfg.frame_at(x)?;
    Ok(vacuum_connection_jet(cfg.algebra().convention(), &frame, VacuumForm::Derived).values)
}

/// Central-field and mixing stress tensors, `[nu][mu]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StressTensors {
    pub t_phi: Mat4,
    pub t_mix: Mat4,
}

pub fn stress_tensors(cfg: &FieldConfig, x: &Vec4) -> Result<StressTensors, FieldError> {
    let alg = cfg.algebra();
    let phi = central_and_phi(alg)?;
    let frame = cfg.frame_for_potentials(x)?;
    let jet = cfg.potential_jet(&frame)?;
    let f = coordinate_curvature_at(cfg, &frame)?.values[phi];
    let g = &frame.g_up;
    // mixed[nu][s] = F^nu_s = g^{l nu} F_{s l}
    let mixed: Mat4 = std::array::from_fn(|nu| std::array::from_fn(|sg| (0..4).map(|l| g[l][nu] * f[sg][l]).sum()));
    let fup = raise_both(g, &f);
    let square: f64 = (0..16).map(|i| f[i / 4][i % 4] * fup[i / 4][i % 4]).sum();
    let t_phi = std::array::from_fn(|nu| {
        std::array::from_fn(|mu| -(0..4).map(|sg| mixed[nu][sg] * mixed[sg][mu]).sum::<f64>() + 0.5 * delta(nu, mu) * square)
    });
    let mut t_mix = [[0.0; 4]; 4];
    for mu in 0..4 {
        let Some(p) = alg.translation_index(mu) else { continue };
        for &(th, ep) in LORENTZ_PAIRS.iter() {
            let Some((m, _)) = alg.lorentz_index(th, ep) else { continue };
            let c = alg.c(phi, p, m);
            if c == 0.0 {
                continue;
            }
            for nu in 0..4 {
                let mut v = 0.0;
                for r in 0..4 {
                    for tau in 0..4 {
                        v += frame.q[nu][r] * fup[r][tau] * jet.coord[m][tau];
                    }
                }
                // stored pairs cover half of the unrestricted (theta, eps) sum
                t_mix[nu][mu] += c * v;
            }
        }
    }
    Ok(StressTensors { t_phi, t_mix })
}

/// Functional form of the free Lagrangian in the generalized Einstein equation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum L0Form {
    /// `calL_0 = calF^(mn)_{mn}`.
    #[default]
    Linear,
    /// `calL_0 = (calF^(mn)_{mn})^2`.
    Quadratic,
}

/// Max over `(eps, mu)` of the generalized Einstein equation residual; with
/// no matter the right-hand side vanishes.
pub fn generalized_einstein_residual(
    cfg: &FieldConfig,
    form: L0Form,
    matter: Option<&MatterSpec>,
    x: &Vec4,
) -> Result<f64, FieldError> {
    let alg = cfg.algebra();
    let frame = cfg.frame_for_potentials(x)?;
    let curv = generalized_curvature_at(cfg, &frame)?;
    let lor = |a: usize, b: usize| curv.lorentz(alg, a, b);
    let mut scalar = 0.0;
    for m in 0..4 {
        for n in 0..4 {
            scalar += lor(m, n)[m][n];
        }
    }
    let lam = frame.lambda;
    let (l0, weight) = match form {
        L0Form::Linear => (lam * scalar, lam),
        L0Form::Quadratic => (lam * scalar * scalar, 2.0 * lam * scalar),
    };
    let mut lhs = [[0.0; 4]; 4];
    for e in 0..4 {
        for mu in 0..4 {
            let contraction: f64 = (0..4).map(|n| lor(e, n)[mu][n]).sum();
            lhs[e][mu] = weight * contraction - 0.5 * delta(e, mu) * l0;
        }
    }
    let mut rhs = [[0.0; 4]; 4];
    if let Some(matter) = matter {
        matter.validate(alg)?;
        let jet = cfg.potential_jet(&frame)?;
        let mats = &alg.representation(&matter.rep)?.matrices;
        let (phi, dphi) = matter.eval(x)?;
        let cov = crate::dynamics::matter::covariant_derivative_raw(&frame.k, &jet.frame, mats, &phi, &dphi);
        let lhat = lam * matter.lagrangian.density(&phi, &cov);
        let dl = matter.lagrangian.d_density_d_cov(&phi, &cov);
        // dLhat / d phi^alpha_{,sigma} = Lambda dcalL/dphi^alpha_r k^sigma_r
        let mut t = [[0.0; 4]; 4];
        for m in 0..4 {
            for n in 0..4 {
                let mut v = 0.0;
                for sg in 0..4 {
                    let mut inner = -delta(sg, n) * lhat;
                    for (al, dla) in dl.iter().enumerate() {
                        let dlhat: f64 = lam * (0..4).map(|r| dla[r] * frame.k[sg][r]).sum::<f64>();
                        inner += dlhat * (0..4).map(|r| cov[al][r] * frame.q[r][n]).sum::<f64>();
                    }
                    v += frame.q[m][sg] * inner;
                }
                t[m][n] = v;
            }
        }
        for e in 0..4 {
            for mu in 0..4 {
                rhs[e][mu] = -0.5 * (0..4).map(|xi| frame.k[e][xi] * t[xi][mu]).sum::<f64>();
            }
        }
    }
    Ok(max_abs((0..16).map(|i| lhs[i / 4][i % 4] - rhs[i / 4][i % 4])))
}
