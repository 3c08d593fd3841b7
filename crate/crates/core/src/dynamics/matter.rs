//! Matter fields and their minimally coupled derivatives.

use nalgebra::{DMatrix, DVector};

use crate::algebra::AlgebraSpec;
use crate::expr::Expr;
use crate::fields::{FieldConfig, FieldError};
use crate::tensor::{eta, Mat4, Vec4};

/// Built-in matter Lagrangians `calL(phi, phi_mu)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatterLagrangian {
    None,
    /// `1/2 eta^{mn} phi_m . phi_n - 1/2 m^2 phi . phi`.
    FreeScalarPair { mass: f64 },
}

impl MatterLagrangian {
    /// `cov[alpha][mu] = phi^alpha_mu` with a frame index `mu`.
    pub fn density(&self, phi: &[f64], cov: &[Vec4]) -> f64 {
        match *self {
            MatterLagrangian::None => 0.0,
            MatterLagrangian::FreeScalarPair { mass } => {
                let kinetic: f64 = cov.iter().map(|c| (0..4).map(|m| eta(m) * c[m] * c[m]).sum::<f64>()).sum();
                let potential: f64 = phi.iter().map(|p| p * p).sum();
                0.5 * kinetic - 0.5 * mass * mass * potential
            }
        }
    }

    /// `d calL / d phi^alpha_mu`.
    pub fn d_density_d_cov(&self, _phi: &[f64], cov: &[Vec4]) -> Vec<Vec4> {
        match *self {
            MatterLagrangian::None => vec![[0.0; 4]; cov.len()],
            MatterLagrangian::FreeScalarPair { .. } => cov.iter().map(|c| std::array::from_fn(|m| eta(m) * c[m])).collect(),
        }
    }
}

/// Matter multiplet: component expressions, representation and Lagrangian.
#[derive(Clone, Debug)]
pub struct MatterSpec {
    pub rep: String,
    pub fields: Vec<Expr>,
    grads: Vec<[Expr; 4]>,
    pub lagrangian: MatterLagrangian,
}

impl MatterSpec {
    pub fn new(rep: &str, fields: Vec<Expr>, lagrangian: MatterLagrangian) -> Self {
        let grads = fields.iter().map(|f| std::array::from_fn(|m| f.diff(m))).collect();
        MatterSpec { rep: rep.to_string(), fields, grads, lagrangian }
    }

    pub fn components(&self) -> usize {
        self.fields.len()
    }

    /// Checks that the representation exists and matches the component count.
    pub fn validate(&self, alg: &AlgebraSpec) -> Result<(), FieldError> {
        let rep = alg.representation(&self.rep)?;
        if rep.dim != self.components() {
            return Err(FieldError::Invalid(format!(
                "matter has {} components but representation `{}` has dimension {}",
                self.components(),
                self.rep,
                rep.dim
            )));
        }
        Ok(())
    }

    /// Field values and coordinate derivatives `dphi[alpha][nu]`.
    pub fn eval(&self, x: &Vec4) -> Result<(Vec<f64>, Vec<Vec4>), FieldError> {
        let err = |source| FieldError::Eval { what: "matter field".into(), x: *x, source };
        let mut phi = Vec::with_capacity(self.fields.len());
        let mut dphi = Vec::with_capacity(self.fields.len());
        for (f, g) in self.fields.iter().zip(&self.grads) {
            phi.push(f.eval_at(x).map_err(err)?);
            let mut d = [0.0; 4];
            for m in 0..4 {
                d[m] = g[m].eval_at(x).map_err(err)?;
            }
            dphi.push(d);
        }
        Ok((phi, dphi))
    }
}

/// `phi^alpha_mu = k^nu_mu phi^alpha_{,nu} - calA^(a)_mu X^alpha_(a)beta phi^beta`.
pub fn covariant_derivative_raw(k: &Mat4, pots: &[Vec4], mats: &[DMatrix<f64>], phi: &[f64], dphi: &[Vec4]) -> Vec<Vec4> {
    let n = phi.len();
    let phi_v = DVector::from_column_slice(phi);
    let mut out: Vec<Vec4> =
        dphi.iter().map(|d| std::array::from_fn(|mu| (0..4).map(|nu| k[nu][mu] * d[nu]).sum())).collect();
    for (pot, x) in pots.iter().zip(mats) {
        if pot.iter().all(|v| *v == 0.0) {
            continue;
        }
        let xphi = x * &phi_v;
        for al in 0..n {
            for mu in 0..4 {
                out[al][mu] -= pot[mu] * xphi[al];
            }
        }
    }
    out
}

/// Covariant derivative of given matter values at `x`.
pub fn covariant_derivative(
    cfg: &FieldConfig,
    matter: &MatterSpec,
    phi: &[f64],
    dphi: &[Vec4],
    x: &Vec4,
) -> Result<Vec<Vec4>, FieldError> {
    matter.validate(cfg.algebra())?;
    if phi.len() != matter.components() || dphi.len() != matter.components() {
        return Err(FieldError::Invalid(format!(
            "expected {} components, got {} values and {} derivatives",
            matter.components(),
            phi.len(),
            dphi.len()
        )));
    }
    let frame = cfg.frame_for_potentials(x)?;
    let jet = cfg.potential_jet(&frame)?;
    let mats = &cfg.algebra().representation(&matter.rep)?.matrices;
    Ok(covariant_derivative_raw(&frame.k, &jet.frame, mats, phi, dphi))
}
