//! Scenario files: the JSON document, its validation and the core objects
//! built from it.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use gaugeforge_core::algebra::{AlgebraSpec, BracketConvention, LambdaVector};
use gaugeforge_core::dynamics::particle::metric_norm;
use gaugeforge_core::dynamics::{Eq1Form, GravPotential, L0Form, MatterLagrangian, MatterSpec, ParticleFields, ParticleState};
use gaugeforge_core::expr::{parse_with_params, Params};
use gaugeforge_core::fields::{LorentzSource, PotentialSpec, TranslationSource};
use gaugeforge_core::gauge::{Ablation, GaugeParams, DEFAULT_EPSILON};
use gaugeforge_core::grid::DEFAULT_POINTS;
use gaugeforge_core::tensor::Vec4;
use gaugeforge_core::{Expr, FieldConfig, GridSpec};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// `u0` is rescaled when `|g u u - 1|` exceeds this.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub algebra: AlgebraFile,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub tetrad: Option<[[String; 4]; 4]>,
    #[serde(default)]
    pub potentials: BTreeMap<String, PotentialFile>,
    #[serde(default)]
    pub translation_source: SourceTranslation,
    #[serde(default)]
    pub lorentz_source: SourceLorentz,
    #[serde(default)]
    pub u1: Option<U1File>,
    #[serde(default)]
    pub gauge: Option<GaugeFile>,
    #[serde(default)]
    pub matter: Option<MatterFile>,
    #[serde(default)]
    pub particle: Option<ParticleFile>,
    #[serde(default)]
    pub grid: Option<GridFile>,
    #[serde(default)]
    pub points: Vec<[f64; 4]>,
    #[serde(default)]
    pub residuals: Option<ResidualsFile>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraKind {
    #[default]
    Poincare,
    ExtendedPoincare,
    Custom,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ConventionFile {
    #[default]
    Paper,
    Standard,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub kind: AlgebraKind,
    #[serde(default)]
    pub convention: ConventionFile,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub lambda_direction: Option<[f64; 4]>,
    #[serde(default)]
    pub generators: Vec<String>,
    #[serde(default)]
    pub structure_constants: Vec<StructureConstantFile>,
    /// Name to one square matrix (list of rows) per generator.
    #[serde(default)]
    pub representations: BTreeMap<String, Vec<Vec<Vec<f64>>>>,
}

/// `C^upper_{lower[0], lower[1]} = value`; the antisymmetric partner is implied.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConstantFile {
    pub upper: String,
    pub lower: [String; 2],
    pub value: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialFile {
    Frame([String; 4]),
    Coordinate([String; 4]),
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SourceTranslation {
    #[default]
    Tetrad,
    Potentials,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SourceLorentz {
    #[default]
    Potentials,
    Vacuum,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct U1File {
    pub elec: [String; 4],
    pub grav: [String; 4],
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeFile {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub functions: BTreeMap<String, String>,
    #[serde(default)]
    pub ablation: Option<String>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MatterFile {
    pub rep: String,
    pub fields: Vec<String>,
    pub lagrangian: LagrangianFile,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LagrangianFile {
    None,
    FreeScalarPair { mass: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleFile {
    pub x0: [f64; 4],
    pub u0: [f64; 4],
    pub m: f64,
    pub e: f64,
    #[serde(default)]
    pub kappa: Option<f64>,
    pub tau_max: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Lower coordinate components of `A^(elec)`.
    #[serde(default)]
    pub elec: Option<[String; 4]>,
    #[serde(default)]
    pub grav: GravFile,
    /// Newtonian potential whose gradient the initial acceleration is
    /// compared against.
    #[serde(default)]
    pub newtonian_potential: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GravFile {
    #[default]
    None,
    NonrelFromMetric,
    Expressions([String; 4]),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    U1,
    Lorentz,
    Einstein,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::U1 => "u1",
            Equation::Lorentz => "lorentz",
            Equation::Einstein => "einstein",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum L0File {
    #[default]
    Linear,
    Quadratic,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Eq1File {
    #[default]
    Derived,
    AsPrinted,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualsFile {
    pub equations: Vec<Equation>,
    #[serde(default)]
    pub l0: L0File,
    #[serde(default)]
    pub eq1_form: Eq1File,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub jacobi: f64,
    pub representation: f64,
    pub two_route: f64,
    pub split_u1: f64,
    pub band: [f64; 2],
    pub u1: f64,
    pub lorentz: f64,
    pub einstein: f64,
    /// Relative closure of the spatial orbit; unchecked when absent.
    pub closure: Option<f64>,
    pub norm_drift: f64,
    pub newtonian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            jacobi: 1e-12,
            representation: 1e-12,
            two_route: 1e-10,
            split_u1: 1e-12,
            band: [0.2, 0.3],
            u1: 1e-10,
            lorentz: 1e-8,
            einstein: 1e-8,
            closure: None,
            norm_drift: 1e-8,
            newtonian: 1e-4,
        }
    }
}

/// Command-line values that replace scenario entries.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub grid: Option<usize>,
    pub kappa: Option<f64>,
    pub ablate: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ParticleSetup {
    pub state: ParticleState,
    pub fields: ParticleFields,
    pub tau_max: f64,
    pub dt: Option<f64>,
    pub newtonian_potential: Option<Expr>,
}

#[derive(Clone, Debug)]
pub struct ResidualSettings {
    pub equations: Vec<Equation>,
    pub l0: L0Form,
    pub eq1_form: Eq1Form,
}

/// A validated scenario with every core object built.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub algebra: Arc<AlgebraSpec>,
    pub cfg: FieldConfig,
    pub gauge: Option<GaugeParams>,
    pub ablation: Ablation,
    pub matter: Option<MatterSpec>,
    pub particle: Option<ParticleSetup>,
    pub grid: Option<GridSpec>,
    pub points: Vec<Vec4>,
    pub residuals: Option<ResidualSettings>,
    pub tolerances: Tolerances,
    pub warnings: Vec<String>,
}

/// Reads and parses a scenario file without building it.
pub fn read_file(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_file(&text)
}

pub fn parse_file(text: &str) -> Result<ScenarioFile, CliError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed scenario: {e}")))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "unsupported schema_version {}; this build reads version {SCHEMA_VERSION}",
            file.schema_version
        )));
    }
    Ok(file)
}

struct ExprContext {
    names: Vec<String>,
    params: Params,
}

impl ExprContext {
    fn new(params: &BTreeMap<String, f64>) -> Self {
        ExprContext { names: params.keys().cloned().collect(), params: params.clone() }
    }

    fn parse(&self, src: &str, what: &str) -> Result<Expr, CliError> {
        let names: Vec<&str> = self.names.iter().map(String::as_str).collect();
        let e = parse_with_params(src, &names).map_err(|e| CliError::Input(format!("{what}: `{src}`: {e}")))?;
        Ok(e.bind(&self.params))
    }

    fn parse4(&self, src: &[String; 4], what: &str) -> Result<[Expr; 4], CliError> {
        let mut out: [Expr; 4] = std::array::from_fn(|_| Expr::zero());
        for (m, s) in src.iter().enumerate() {
            out[m] = self.parse(s, &format!("{what}[{m}]"))?;
        }
        Ok(out)
    }
}

fn build_algebra(file: &AlgebraFile) -> Result<AlgebraSpec, CliError> {
    let convention = match file.convention {
        ConventionFile::Paper => BracketConvention::Paper,
        ConventionFile::Standard => BracketConvention::Standard,
    };
    let custom_only = !file.generators.is_empty() || !file.structure_constants.is_empty() || !file.representations.is_empty();
    match file.kind {
        AlgebraKind::Poincare | AlgebraKind::ExtendedPoincare if custom_only => {
            Err(CliError::Input("generators, structure_constants and representations are only read for custom algebras".into()))
        }
        AlgebraKind::Poincare => {
            if file.kappa.is_some() || file.lambda_direction.is_some() {
                return Err(CliError::Input("kappa needs algebra kind `extended_poincare`".into()));
            }
            Ok(AlgebraSpec::poincare(convention))
        }
        AlgebraKind::ExtendedPoincare => {
            let kappa = file.kappa.ok_or_else(|| CliError::Input("extended_poincare needs `kappa`".into()))?;
            let mut lv = LambdaVector::new(kappa);
            if let Some(d) = file.lambda_direction {
                lv.direction = d;
            }
            Ok(AlgebraSpec::extended_poincare(lv, convention))
        }
        AlgebraKind::Custom => {
            if file.kappa.is_some() || file.lambda_direction.is_some() {
                return Err(CliError::Input("kappa needs algebra kind `extended_poincare`".into()));
            }
            if file.generators.is_empty() {
                return Err(CliError::Input("custom algebra needs at least one generator".into()));
            }
            let labels: Vec<&str> = file.generators.iter().map(String::as_str).collect();
            let entries: Vec<(&str, &str, &str, f64)> = file
                .structure_constants
                .iter()
                .map(|c| (c.upper.as_str(), c.lower[0].as_str(), c.lower[1].as_str(), c.value))
                .collect();
            let mut spec = AlgebraSpec::from_entries(&labels, &entries, convention)?;
            for (name, mats) in &file.representations {
                let mut matrices = Vec::with_capacity(mats.len());
                for (a, rows) in mats.iter().enumerate() {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(CliError::Input(format!("representation `{name}`: matrix {a} is not square")));
                    }
                    matrices.push(DMatrix::from_fn(n, n, |i, j| rows[i][j]));
                }
                spec = spec.with_representation(name, matrices)?;
            }
            Ok(spec)
        }
    }
}

impl Scenario {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        Self::build(read_file(path)?, overrides)
    }

    pub fn build(mut file: ScenarioFile, overrides: &Overrides) -> Result<Self, CliError> {
        apply_overrides(&mut file, overrides)?;
        let ctx = ExprContext::new(&file.parameters);
        let algebra = Arc::new(build_algebra(&file.algebra)?);
        let mut warnings = Vec::new();

        let mut cfg = FieldConfig::new(algebra.clone());
        if let Some(k) = &file.tetrad {
            let mut rows: [[Expr; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| Expr::zero()));
            for (i, row) in k.iter().enumerate() {
                rows[i] = ctx.parse4(row, &format!("tetrad[{i}]"))?;
            }
            cfg = cfg.with_tetrad(rows);
        }
        for (label, p) in &file.potentials {
            let spec = match p {
                PotentialFile::Frame(e) => PotentialSpec::Frame(ctx.parse4(e, &format!("potentials.{label}"))?),
                PotentialFile::Coordinate(e) => PotentialSpec::Coordinate(ctx.parse4(e, &format!("potentials.{label}"))?),
            };
            cfg = cfg.with_potential(label, spec)?;
        }
        cfg = cfg.with_translation_source(match file.translation_source {
            SourceTranslation::Tetrad => TranslationSource::Tetrad,
            SourceTranslation::Potentials => TranslationSource::Potentials,
        });
        cfg = cfg.with_lorentz_source(match file.lorentz_source {
            SourceLorentz::Potentials => LorentzSource::Potentials,
            SourceLorentz::Vacuum => LorentzSource::Vacuum,
        });
        if let Some(u1) = &file.u1 {
            if let Some(phi) = algebra.central_index() {
                if file.potentials.keys().any(|l| algebra.lookup(l).map(|(a, _)| a) == Ok(phi)) {
                    return Err(CliError::Input("give the central potential either under `potentials` or under `u1`, not both".into()));
                }
            }
            cfg = cfg.with_u1_split(ctx.parse4(&u1.elec, "u1.elec")?, ctx.parse4(&u1.grav, "u1.grav")?)?;
        }

        let ablation = match file.gauge.as_ref().and_then(|g| g.ablation.as_deref()) {
            None => Ablation::None,
            Some(name) => Ablation::from_name(name).ok_or_else(|| {
                let known: Vec<&str> = Ablation::ALL.iter().map(|a| a.name()).collect();
                CliError::Input(format!("unknown ablation `{name}`; expected one of {}", known.join(", ")))
            })?,
        };
        let gauge = match &file.gauge {
            None => None,
            Some(g) => {
                if !(g.epsilon.is_finite() && g.epsilon > 0.0) {
                    return Err(CliError::Input(format!("gauge.epsilon must be positive, got {}", g.epsilon)));
                }
                let mut gp = GaugeParams::new(&algebra, g.epsilon);
                for (label, src) in &g.functions {
                    gp = gp.with(&algebra, label, ctx.parse(src, &format!("gauge.functions.{label}"))?)?;
                }
                Some(gp)
            }
        };

        let matter = match &file.matter {
            None => None,
            Some(m) => {
                let fields = m
                    .fields
                    .iter()
                    .enumerate()
                    .map(|(i, s)| ctx.parse(s, &format!("matter.fields[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                let lagrangian = match m.lagrangian {
                    LagrangianFile::None => MatterLagrangian::None,
                    LagrangianFile::FreeScalarPair { mass } => MatterLagrangian::FreeScalarPair { mass },
                };
                let spec = MatterSpec::new(&m.rep, fields, lagrangian);
                spec.validate(&algebra)?;
                Some(spec)
            }
        };

        let grid = match &file.grid {
            None => None,
            Some(g) => Some(GridSpec::new(g.lower, g.upper, g.points).map_err(|e| CliError::Input(format!("grid: {e}")))?),
        };

        let particle = match &file.particle {
            None => None,
            Some(p) => Some(build_particle(p, &ctx, &cfg, &mut warnings)?),
        };

        let residuals = file.residuals.as_ref().map(|r| ResidualSettings {
            equations: r.equations.clone(),
            l0: match r.l0 {
                L0File::Linear => L0Form::Linear,
                L0File::Quadratic => L0Form::Quadratic,
            },
            eq1_form: match r.eq1_form {
                Eq1File::Derived => Eq1Form::Derived,
                Eq1File::AsPrinted => Eq1Form::AsPrinted,
            },
        });

        let [lo, hi] = file.tolerances.band;
        if !(lo < hi) {
            return Err(CliError::Input(format!("tolerances.band must be increasing, got [{lo}, {hi}]")));
        }
        let points = file.points.clone();
        let tolerances = file.tolerances.clone();
        Ok(Scenario { file, algebra, cfg, gauge, ablation, matter, particle, grid, points, residuals, tolerances, warnings })
    }

    /// Explicit sample points, or the grid when none are listed.
    pub fn sample_points(&self) -> Result<Vec<Vec4>, CliError> {
        if !self.points.is_empty() {
            return Ok(self.points.clone());
        }
        match &self.grid {
            Some(g) => Ok(g.iter().collect()),
            None => Err(CliError::Input("scenario lists neither `points` nor `grid`".into())),
        }
    }

    pub fn require_grid(&self) -> Result<&GridSpec, CliError> {
        self.grid.as_ref().ok_or_else(|| CliError::Input("scenario has no `grid`".into()))
    }
}

fn apply_overrides(file: &mut ScenarioFile, o: &Overrides) -> Result<(), CliError> {
    if let Some(eps) = o.epsilon {
        let g = file.gauge.as_mut().ok_or_else(|| CliError::Input("--epsilon needs a `gauge` block".into()))?;
        g.epsilon = eps;
    }
    if let Some(n) = o.grid {
        let g = file.grid.as_mut().ok_or_else(|| CliError::Input("--grid needs a `grid` block".into()))?;
        g.points = n;
    }
    if let Some(k) = o.kappa {
        if file.algebra.kind != AlgebraKind::ExtendedPoincare {
            return Err(CliError::Input("--kappa needs algebra kind `extended_poincare`".into()));
        }
        file.algebra.kappa = Some(k);
        if let Some(p) = file.particle.as_mut() {
            p.kappa = Some(k);
        }
    }
    if let Some(name) = &o.ablate {
        let g = file.gauge.as_mut().ok_or_else(|| CliError::Input("--ablate needs a `gauge` block".into()))?;
        g.ablation = Some(name.clone());
    }
    Ok(())
}

fn build_particle(p: &ParticleFile, ctx: &ExprContext, cfg: &FieldConfig, warnings: &mut Vec<String>) -> Result<ParticleSetup, CliError> {
    if !(p.m.is_finite() && p.m > 0.0) {
        return Err(CliError::Input(format!("particle.m must be positive, got {}", p.m)));
    }
    if !(p.tau_max.is_finite() && p.tau_max > 0.0) {
        return Err(CliError::Input(format!("particle.tau_max must be positive, got {}", p.tau_max)));
    }
    if let Some(dt) = p.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CliError::Input(format!("particle.dt must be positive, got {dt}")));
        }
    }
    let elec = p.elec.as_ref().map(|e| ctx.parse4(e, "particle.elec")).transpose()?;
    let grav = match &p.grav {
        GravFile::None => GravPotential::None,
        GravFile::NonrelFromMetric => GravPotential::NonRelFromMetric,
        GravFile::Expressions(e) => GravPotential::Expressions(ctx.parse4(e, "particle.grav")?),
    };
    let kappa = p.kappa.unwrap_or_else(|| cfg.kappa());
    let frame = cfg.frame_at(&p.x0)?;
    let norm = metric_norm(&frame.g_down, &p.u0);
    let mut u = p.u0;
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        if !(norm > 0.0) {
            return Err(CliError::Input(format!("particle.u0 is not timelike at x0: g(u, u) = {norm}")));
        }
        let scale = 1.0 / norm.sqrt();
        u = u.map(|c| c * scale);
        warnings.push(format!("particle.u0 had g(u, u) = {norm:.17e}; rescaled to unit norm"));
    }
    let newtonian_potential = p.newtonian_potential.as_deref().map(|s| ctx.parse(s, "particle.newtonian_potential")).transpose()?;
    Ok(ParticleSetup {
        state: ParticleState { x: p.x0, u, m: p.m, e: p.e, kappa },
        fields: ParticleFields::new(elec, grav),
        tau_max: p.tau_max,
        dt: p.dt,
        newtonian_potential,
    })
}
