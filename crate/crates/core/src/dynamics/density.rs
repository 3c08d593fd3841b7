//! Free-field Lagrangian densities.

use crate::algebra::LORENTZ_PAIRS;
use crate::fields::{FieldConfig, FieldError};
use crate::geometry::{extended_curvatures_at, CurvatureField};
use crate::tensor::{eta, Mat4, Vec4};

/// `sum_a F^(a)_{mn} F^(a)_{sr} eta^{sm} eta^{rn}`.
pub fn yang_mills_density(curv: &CurvatureField) -> f64 {
    curv.values
        .iter()
        .map(|f| {
            let mut v = 0.0;
            for m in 0..4 {
                for n in 0..4 {
                    v += f[m][n] * f[m][n] * eta(m) * eta(n);
                }
            }
            v
        })
        .sum()
}

/// `g^{ms} g^{nr} F_{mn} F_{sr}`.
pub fn metric_square(g_up: &Mat4, f: &Mat4) -> f64 {
    let up = raise_both(g_up, f);
    let mut v = 0.0;
    for m in 0..4 {
        for n in 0..4 {
            v += f[m][n] * up[m][n];
        }
    }
    v
}

/// `F^{mn} = g^{ma} g^{nb} F_{ab}`.
pub fn raise_both(g_up: &Mat4, f: &Mat4) -> Mat4 {
    std::array::from_fn(|m| {
        std::array::from_fn(|n| {
            let mut v = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    v += g_up[m][a] * g_up[n][b] * f[a][b];
                }
            }
            v
        })
    })
}

/// `Lambda (g g F^(Phi) F^(Phi) + k^s_m k^r_n F^(mn)_{sr})`, the Lorentz
/// term summed over unrestricted label pairs.
pub fn electrograv_density(cfg: &FieldConfig, x: &Vec4) -> Result<f64, FieldError> {
    let frame = cfg.frame_for_potentials(x)?;
    let (lorentz, fphi) = extended_curvatures_at(cfg, &frame)?;
    let alg = cfg.algebra();
    let mut lorentz_term = 0.0;
    for &(m, n) in LORENTZ_PAIRS.iter() {
        let f = lorentz.lorentz(alg, m, n);
        let mut v = 0.0;
        for s in 0..4 {
            for r in 0..4 {
                v += frame.k[s][m] * frame.k[r][n] * f[s][r];
            }
        }
        // (m n) and (n m) contribute equally
        lorentz_term += 2.0 * v;
    }
    Ok(frame.lambda * (metric_square(&frame.g_up, &fphi) + lorentz_term))
}
