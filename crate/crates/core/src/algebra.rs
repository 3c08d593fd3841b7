//! Lie algebras given by structure constants, their matrix representations
//! and their action on space-time coordinates.
//!
//! Structure constants follow the abstract bracket `[T_b, T_c] = C^a_{bc} T_a`.
//! The ordering in which representation matrices and derived objects use
//! them is controlled by [`BracketConvention`].

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::expr::Expr;
use crate::tensor::{delta, Mat4, Vec4, ETA};

/// Lorentz index pairs in storage order.
pub const LORENTZ_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Position of the pair `(mu, nu)` in [`LORENTZ_PAIRS`] with the sign picked
/// up by reordering; `None` on the diagonal.
pub fn pair_slot(mu: usize, nu: usize) -> Option<(usize, f64)> {
    if mu == nu {
        return None;
    }
    let (lo, hi, sign) = if mu < nu { (mu, nu, 1.0) } else { (nu, mu, -1.0) };
    LORENTZ_PAIRS.iter().position(|&p| p == (lo, hi)).map(|i| (i, sign))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgebraError {
    #[error("representation `{0}` not defined")]
    MissingRepresentation(String),
    #[error("unknown generator label `{0}`")]
    UnknownLabel(String),
    #[error("structure-constant table has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("C^{upper}_{{{a},{b}}} = {ab} but C^{upper}_{{{b},{a}}} = {ba}; the table must be antisymmetric")]
    NotAntisymmetric { upper: String, a: String, b: String, ab: f64, ba: f64 },
    #[error("representation `{name}`: {detail}")]
    BadRepresentation { name: String, detail: String },
    #[error("duplicate generator label `{0}`")]
    DuplicateLabel(String),
}

/// Which ordering the structure constants are read with.
///
/// `Paper` reads representation brackets as `X_b X_a - X_a X_b = C^c_{ab} X_c`
/// and carries a minus sign on every quadratic curvature term and every
/// homogeneous gauge-variation term. `Standard` flips all of these together.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BracketConvention {
    #[default]
    Paper,
    Standard,
}

impl BracketConvention {
    /// `-1` for `Paper`, `+1` for `Standard`.
    pub fn sign(self) -> f64 {
        match self {
            BracketConvention::Paper => -1.0,
            BracketConvention::Standard => 1.0,
        }
    }
}

/// Signature and speed of light; fixed to diag(+,-,-,-) and `c = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricConvention {
    pub eta: Mat4,
    pub c: f64,
}

impl Default for MetricConvention {
    fn default() -> Self {
        MetricConvention { eta: ETA, c: 1.0 }
    }
}

/// Mixing covector `lambda_mu = kappa * direction_mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaVector {
    pub direction: Vec4,
    pub kappa: f64,
}

impl LambdaVector {
    /// Default direction `lambda_mu = -kappa delta^0_mu`.
    pub fn new(kappa: f64) -> Self {
        LambdaVector { direction: [-1.0, 0.0, 0.0, 0.0], kappa }
    }

    pub fn lambda(&self) -> Vec4 {
        self.direction.map(|d| self.kappa * d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    Translation(usize),
    /// Ordered pair with the first index smaller.
    Lorentz(usize, usize),
    Central,
    Internal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub label: String,
    pub kind: GeneratorKind,
}

/// Matrices `X^alpha_(a) beta`, one per generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    pub dim: usize,
    pub matrices: Vec<DMatrix<f64>>,
}

impl Representation {
    pub fn trivial(generators: usize, dim: usize) -> Self {
        Representation { dim, matrices: vec![DMatrix::zeros(dim, dim); generators] }
    }
}

/// Sparse nonzero entry `C^a_{bc}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureEntry {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct AlgebraSpec {
    generators: Vec<Generator>,
    c: Vec<f64>,
    entries: Vec<StructureEntry>,
    reps: BTreeMap<String, Representation>,
    action: Vec<[Expr; 4]>,
    action_grad: Vec<[[Expr; 4]; 4]>,
    metric: MetricConvention,
    convention: BracketConvention,
    lambda: Option<LambdaVector>,
    central_unit: Vec<StructureEntry>,
}

/// Poincare algebra in the default convention.
pub fn build_poincare() -> AlgebraSpec {
    AlgebraSpec::poincare(BracketConvention::default())
}

/// Poincare algebra extended by the central generator `Phi`.
pub fn build_extended_poincare(lv: LambdaVector) -> AlgebraSpec {
    AlgebraSpec::extended_poincare(lv, BracketConvention::default())
}

/// `S^sigma_(mu nu) rho = delta^sigma_mu eta_{nu rho} - delta^sigma_nu eta_{mu rho}`.
pub fn lorentz_vector_matrix(mu: usize, nu: usize) -> Mat4 {
    let mut s = [[0.0; 4]; 4];
    for (sigma, row) in s.iter_mut().enumerate() {
        for (rho, v) in row.iter_mut().enumerate() {
            *v = delta(sigma, mu) * ETA[nu][rho] - delta(sigma, nu) * ETA[mu][rho];
        }
    }
    s
}

fn poincare_generators(with_central: bool) -> Vec<Generator> {
    let mut g: Vec<Generator> = (0..4).map(|m| Generator { label: format!("P{m}"), kind: GeneratorKind::Translation(m) }).collect();
    g.extend(LORENTZ_PAIRS.iter().map(|&(m, n)| Generator { label: format!("M{m}{n}"), kind: GeneratorKind::Lorentz(m, n) }));
    if with_central {
        g.push(Generator { label: "Phi".into(), kind: GeneratorKind::Central });
    }
    g
}

impl AlgebraSpec {
    pub fn poincare(convention: BracketConvention) -> Self {
        Self::build_spacetime(None, convention)
    }

    pub fn extended_poincare(lv: LambdaVector, convention: BracketConvention) -> Self {
        Self::build_spacetime(Some(lv), convention)
    }

    fn build_spacetime(lv: Option<LambdaVector>, convention: BracketConvention) -> Self {
        let generators = poincare_generators(lv.is_some());
        let n = generators.len();
        let mut c = vec![0.0; n * n * n];
        let idx = |a: usize, b: usize, cc: usize| (a * n + b) * n + cc;
        let m_index = |mu: usize, nu: usize| pair_slot(mu, nu).map(|(i, s)| (4 + i, s));

        for (slot, &(mu, nu)) in LORENTZ_PAIRS.iter().enumerate() {
            let m = 4 + slot;
            // [M_mn, P_r] = eta_nr P_m - eta_mr P_n
            for rho in 0..4 {
                let v_mu = ETA[nu][rho];
                let v_nu = -ETA[mu][rho];
                c[idx(mu, m, rho)] += v_mu;
                c[idx(mu, rho, m)] -= v_mu;
                c[idx(nu, m, rho)] += v_nu;
                c[idx(nu, rho, m)] -= v_nu;
            }
            // [M_mn, M_rs] = eta_nr M_ms - eta_ns M_mr - eta_mr M_ns + eta_ms M_nr
            for (slot2, &(rho, sig)) in LORENTZ_PAIRS.iter().enumerate() {
                let m2 = 4 + slot2;
                let terms = [
                    (ETA[nu][rho], mu, sig),
                    (-ETA[nu][sig], mu, rho),
                    (-ETA[mu][rho], nu, sig),
                    (ETA[mu][sig], nu, rho),
                ];
                for (coef, a1, a2) in terms {
                    if coef == 0.0 {
                        continue;
                    }
                    if let Some((target, sign)) = m_index(a1, a2) {
                        c[idx(target, m, m2)] += coef * sign;
                    }
                }
            }
        }
        let mut central_unit = Vec::new();
        if let Some(lv) = lv {
            let phi = n - 1;
            for (slot, &(mu, nu)) in LORENTZ_PAIRS.iter().enumerate() {
                let m = 4 + slot;
                for rho in 0..4 {
                    // C^Phi_{(mn),r} = lambda_n eta_mr - lambda_m eta_nr
                    let unit = lv.direction[nu] * ETA[mu][rho] - lv.direction[mu] * ETA[nu][rho];
                    if unit != 0.0 {
                        central_unit.push(StructureEntry { a: phi, b: m, c: rho, value: unit });
                        central_unit.push(StructureEntry { a: phi, b: rho, c: m, value: -unit });
                        c[idx(phi, m, rho)] = lv.kappa * unit;
                        c[idx(phi, rho, m)] = -lv.kappa * unit;
                    }
                }
            }
        }

        let s = convention.sign();
        let x = [Expr::coord(0), Expr::coord(1), Expr::coord(2), Expr::coord(3)];
        let mut action: Vec<[Expr; 4]> = Vec::with_capacity(n);
        let mut vector = Vec::with_capacity(n);
        for g in &generators {
            match g.kind {
                GeneratorKind::Translation(mu) => {
                    action.push(std::array::from_fn(|nu| Expr::constant(-s * delta(nu, mu))));
                    vector.push(DMatrix::zeros(4, 4));
                }
                GeneratorKind::Lorentz(mu, nu) => {
                    let sm = lorentz_vector_matrix(mu, nu);
                    action.push(std::array::from_fn(|sigma| {
                        (0..4).fold(Expr::zero(), |acc, rho| {
                            let coef = -s * sm[sigma][rho];
                            if coef == 0.0 {
                                acc
                            } else {
                                acc.add(&Expr::constant(coef).mul(&x[rho]))
                            }
                        })
                    }));
                    vector.push(DMatrix::from_fn(4, 4, |i, j| s * sm[i][j]));
                }
                GeneratorKind::Central | GeneratorKind::Internal => {
                    action.push(std::array::from_fn(|_| Expr::zero()));
                    vector.push(DMatrix::zeros(4, 4));
                }
            }
        }
        let mut reps = BTreeMap::new();
        reps.insert("vector".to_string(), Representation { dim: 4, matrices: vector });
        if let Some(lv) = lv {
            let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
            let lam = lv.lambda();
            let mats = generators
                .iter()
                .map(|g| match g.kind {
                    GeneratorKind::Translation(mu) => &j * lam[mu],
                    GeneratorKind::Central => j.clone(),
                    _ => DMatrix::zeros(2, 2),
                })
                .collect();
            reps.insert("scalar_pair".to_string(), Representation { dim: 2, matrices: mats });
        }
        let mut spec = AlgebraSpec {
            generators,
            c,
            entries: Vec::new(),
            reps,
            action,
            action_grad: Vec::new(),
            metric: MetricConvention::default(),
            convention,
            lambda: lv,
            central_unit,
        };
        spec.finish();
        spec
    }

    /// Algebra from an explicit table; `table[(a * dim + b) * dim + c] = C^a_{bc}`.
    pub fn from_table(labels: &[&str], table: Vec<f64>, convention: BracketConvention) -> Result<Self, AlgebraError> {
        let n = labels.len();
        if table.len() != n * n * n {
            return Err(AlgebraError::DimensionMismatch { expected: n * n * n, got: table.len() });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(AlgebraError::DuplicateLabel(l.to_string()));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in b..n {
                    let ab = table[(a * n + b) * n + c];
                    let ba = table[(a * n + c) * n + b];
                    if ab != -ba {
                        return Err(AlgebraError::NotAntisymmetric {
                            upper: labels[a].into(),
                            a: labels[b].into(),
                            b: labels[c].into(),
                            ab,
                            ba,
                        });
                    }
                }
            }
        }
        let mut spec = AlgebraSpec {
            generators: labels.iter().map(|l| Generator { label: l.to_string(), kind: GeneratorKind::Internal }).collect(),
            c: table,
            entries: Vec::new(),
            reps: BTreeMap::new(),
            action: (0..n).map(|_| std::array::from_fn(|_| Expr::zero())).collect(),
            action_grad: Vec::new(),
            metric: MetricConvention::default(),
            convention,
            lambda: None,
            central_unit: Vec::new(),
        };
        spec.finish();
        Ok(spec)
    }

    /// Algebra from sparse entries `(upper, lower_b, lower_c, value)`; the
    /// partner `C^a_{cb} = -value` is filled in.
    pub fn from_entries(
        labels: &[&str],
        entries: &[(&str, &str, &str, f64)],
        convention: BracketConvention,
    ) -> Result<Self, AlgebraError> {
        let n = labels.len();
        let find = |l: &str| labels.iter().position(|x| *x == l).ok_or_else(|| AlgebraError::UnknownLabel(l.to_string()));
        let mut table = vec![0.0; n * n * n];
        let mut set = vec![false; n * n * n];
        for &(a, b, c, v) in entries {
            let (a, b, c) = (find(a)?, find(b)?, find(c)?);
            for (i, val) in [((a * n + b) * n + c, v), ((a * n + c) * n + b, -v)] {
                if set[i] && table[i] != val {
                    return Err(AlgebraError::NotAntisymmetric {
                        upper: labels[a].into(),
                        a: labels[b].into(),
                        b: labels[c].into(),
                        ab: table[(a * n + b) * n + c],
                        ba: table[(a * n + c) * n + b],
                    });
                }
                table[i] = val;
                set[i] = true;
            }
        }
        Self::from_table(labels, table, convention)
    }

    fn finish(&mut self) {
        let n = self.dim();
        self.entries = (0..n * n * n)
            .filter(|&i| self.c[i] != 0.0)
            .map(|i| StructureEntry { a: i / (n * n), b: (i / n) % n, c: i % n, value: self.c[i] })
            .collect();
        self.action_grad = self.action.iter().map(|x| std::array::from_fn(|mu| std::array::from_fn(|nu| x[mu].diff(nu)))).collect();
        let s = self.convention.sign();
        let adjoint = (0..n).map(|a| DMatrix::from_fn(n, n, |c, b| s * self.c(c, a, b))).collect();
        self.reps.insert("adjoint".into(), Representation { dim: n, matrices: adjoint });
        self.reps.insert("trivial".into(), Representation::trivial(n, 1));
    }

    /// Adds a named representation after checking its shape.
    pub fn with_representation(mut self, name: &str, matrices: Vec<DMatrix<f64>>) -> Result<Self, AlgebraError> {
        if matrices.len() != self.dim() {
            return Err(AlgebraError::BadRepresentation {
                name: name.into(),
                detail: format!("{} matrices for {} generators", matrices.len(), self.dim()),
            });
        }
        let dim = matrices.first().map_or(0, |m| m.nrows());
        if matrices.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(AlgebraError::BadRepresentation { name: name.into(), detail: "matrices must be square and equal-sized".into() });
        }
        self.reps.insert(name.into(), Representation { dim, matrices });
        Ok(self)
    }

    /// Replaces the space-time action `X^mu_(a)(x)`.
    pub fn with_spacetime_action(mut self, action: Vec<[Expr; 4]>) -> Result<Self, AlgebraError> {
        if action.len() != self.dim() {
            return Err(AlgebraError::DimensionMismatch { expected: self.dim(), got: action.len() });
        }
        self.action = action;
        self.finish();
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn label(&self, a: usize) -> &str {
        &self.generators[a].label
    }

    pub fn kind(&self, a: usize) -> GeneratorKind {
        self.generators[a].kind
    }

    /// Index and access sign of a label. Reversed Lorentz labels such as
    /// `M10` resolve to the stored pair with sign `-1`.
    pub fn lookup(&self, label: &str) -> Result<(usize, f64), AlgebraError> {
        if let Some(i) = self.generators.iter().position(|g| g.label == label) {
            return Ok((i, 1.0));
        }
        let b = label.as_bytes();
        if b.len() == 3 && b[0] == b'M' && b[1].is_ascii_digit() && b[2].is_ascii_digit() {
            let (mu, nu) = ((b[1] - b'0') as usize, (b[2] - b'0') as usize);
            if mu < 4 && nu < 4 {
                if let Some(i) = self.lorentz_index(mu, nu) {
                    return Ok(i);
                }
            }
        }
        Err(AlgebraError::UnknownLabel(label.to_string()))
    }

    pub fn translation_index(&self, mu: usize) -> Option<usize> {
        self.generators.iter().position(|g| g.kind == GeneratorKind::Translation(mu))
    }

    /// Generator of the pair `(mu, nu)` with its reordering sign.
    pub fn lorentz_index(&self, mu: usize, nu: usize) -> Option<(usize, f64)> {
        let (slot, sign) = pair_slot(mu, nu)?;
        let (lo, hi) = LORENTZ_PAIRS[slot];
        self.generators.iter().position(|g| g.kind == GeneratorKind::Lorentz(lo, hi)).map(|i| (i, sign))
    }

    pub fn central_index(&self) -> Option<usize> {
        self.generators.iter().position(|g| g.kind == GeneratorKind::Central)
    }

    pub fn has_spacetime_generators(&self) -> bool {
        self.generators.iter().any(|g| matches!(g.kind, GeneratorKind::Translation(_) | GeneratorKind::Lorentz(..)))
    }

    /// `C^a_{bc}`.
    #[inline]
    pub fn c(&self, a: usize, b: usize, c: usize) -> f64 {
        let n = self.dim();
        self.c[(a * n + b) * n + c]
    }

    /// Nonzero structure constants.
    pub fn entries(&self) -> &[StructureEntry] {
        &self.entries
    }

    /// Nonzero `C^Phi_{bc}` at unit mixing coupling.
    pub fn central_unit_entries(&self) -> &[StructureEntry] {
        &self.central_unit
    }

    pub fn representation(&self, name: &str) -> Result<&Representation, AlgebraError> {
        self.reps.get(name).ok_or_else(|| AlgebraError::MissingRepresentation(name.to_string()))
    }

    pub fn representation_names(&self) -> impl Iterator<Item = &str> {
        self.reps.keys().map(String::as_str)
    }

    /// `X^mu_(a)(x)` as expressions.
    pub fn spacetime_action(&self, a: usize) -> &[Expr; 4] {
        &self.action[a]
    }

    /// `d_nu X^mu_(a)` as `grad[mu][nu]`.
    pub fn spacetime_action_grad(&self, a: usize) -> &[[Expr; 4]; 4] {
        &self.action_grad[a]
    }

    pub fn metric(&self) -> &MetricConvention {
        &self.metric
    }

    pub fn convention(&self) -> BracketConvention {
        self.convention
    }

    pub fn lambda(&self) -> Option<LambdaVector> {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.lambda.map_or(0.0, |l| l.kappa)
    }

    /// Mutable access for deliberate corruption in negative tests.
    pub fn representation_mut(&mut self, name: &str) -> Result<&mut Representation, AlgebraError> {
        self.reps.get_mut(name).ok_or_else(|| AlgebraError::MissingRepresentation(name.to_string()))
    }
}

/// Largest Jacobi violation and where it occurs.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiReport {
    pub max: f64,
    /// `(a, b, c, d)` of the worst cyclic sum, if any is nonzero.
    pub worst: Option<[usize; 4]>,
}

/// Max over `(a, b, c, d)` of `|sum_e C^e_{ab} C^d_{ec} + cyclic|`.
pub fn jacobi_residual(spec: &AlgebraSpec) -> f64 {
    jacobi_report(spec).max
}

pub fn jacobi_report(spec: &AlgebraSpec) -> JacobiReport {
    let n = spec.dim();
    // cc[a][b][c][d] = sum_e C^e_{ab} C^d_{ec}
    let mut cc = vec![0.0; n * n * n * n];
    for e1 in spec.entries() {
        for e2 in spec.entries().iter().filter(|e2| e2.b == e1.a) {
            cc[((e1.b * n + e1.c) * n + e2.c) * n + e2.a] += e1.value * e2.value;
        }
    }
    let at = |a: usize, b: usize, c: usize, d: usize| cc[((a * n + b) * n + c) * n + d];
    let mut report = JacobiReport { max: 0.0, worst: None };
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let r = (at(a, b, c, d) + at(b, c, a, d) + at(c, a, b, d)).abs();
                    if r > report.max {
                        report = JacobiReport { max: r, worst: Some([a, b, c, d]) };
                    }
                }
            }
        }
    }
    report
}

/// Largest violation of the representation bracket and the offending pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RepReport {
    pub max: f64,
    pub worst: Option<[usize; 2]>,
}

/// Max over generator pairs of `|X_b X_a - X_a X_b - C^c_{ab} X_c|` in the
/// `Paper` convention, or of the conventional commutator in `Standard`.
pub fn rep_commutator_residual(spec: &AlgebraSpec, rep_name: &str) -> Result<f64, AlgebraError> {
    rep_commutator_report(spec, rep_name).map(|r| r.max)
}

pub fn rep_commutator_report(spec: &AlgebraSpec, rep_name: &str) -> Result<RepReport, AlgebraError> {
    let rep = spec.representation(rep_name)?;
    let s = spec.convention().sign();
    let n = spec.dim();
    let mut report = RepReport { max: 0.0, worst: None };
    for a in 0..n {
        for b in 0..n {
            let xa = &rep.matrices[a];
            let xb = &rep.matrices[b];
            // s = -1 gives X_b X_a - X_a X_b - C X up to an overall sign
            let mut r = (xa * xb - xb * xa) * s;
            for c in 0..n {
                let v = spec.c(c, a, b);
                if v != 0.0 {
                    r -= &rep.matrices[c] * v;
                }
            }
            let m = r.amax();
            if m > report.max {
                report = RepReport { max: m, worst: Some([a, b]) };
            }
        }
    }
    Ok(report)
}
