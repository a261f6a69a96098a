//! Experiment configuration: JSON schema, parsing with field paths, and
//! semantic validation.

use std::path::PathBuf;

use compactlab::magweyl::setup::{FieldSpec, Grid, MagneticSetup, DEFAULT_QUAD_ORDER};
use compactlab::sigma::SolidSpaceSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub setup: SetupConfig,
    #[serde(default)]
    pub window: WindowConfig,
    pub family: FamilyConfig,
    #[serde(default)]
    pub exhaustion: ExhaustionConfig,
    #[serde(default)]
    pub solid_space: SolidSpaceConfig,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default)]
    pub assertions: Vec<Assertion>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("compactlab-out")
}

fn default_order() -> usize {
    DEFAULT_QUAD_ORDER
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupConfig {
    /// Spatial dimension, 1 or 2.
    pub n: usize,
    /// Grid points per axis.
    pub size: usize,
    /// Grid step; `sqrt(2 pi / size)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default = "zero_field")]
    pub field: FieldSpec,
    #[serde(default = "default_order")]
    pub line_order: usize,
    #[serde(default = "default_order")]
    pub flux_order: usize,
}

fn zero_field() -> FieldSpec {
    FieldSpec::Zero
}

impl SetupConfig {
    pub fn build(&self) -> compactlab::Result<MagneticSetup> {
        let grid = match self.h {
            Some(h) => Grid::centered(self.n, self.size, h)?,
            None => Grid::symmetric(self.n, self.size)?,
        };
        MagneticSetup::new(grid, self.field.potential(self.n)?, self.line_order, self.flux_order)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindowConfig {
    Gaussian { width: f64 },
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig::Gaussian { width: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// Coherent states over the lattice patch of the given radius.
    GaussianOrbit { radius: f64 },
    /// Coherent states on the diagonal towards the phase-space corner.
    EscapingTranslates { count: usize },
    /// `e^{i xi_m y} window` for lattice frequency indices `m`.
    Modulated { frequencies: Vec<i64> },
    /// `{<., e_j> e_1 : j <= J}` for each listed `J`.
    OperatorCounterexample { j: Vec<usize> },
    /// Seeded complex Gaussian vectors.
    RandomStates { count: usize },
    /// Container file whose columns are the members.
    CustomFile { path: PathBuf },
}

impl FamilyConfig {
    pub fn is_operator_family(&self) -> bool {
        matches!(self, FamilyConfig::OperatorCounterexample { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            FamilyConfig::GaussianOrbit { .. } => "gaussian-orbit",
            FamilyConfig::EscapingTranslates { .. } => "escaping-translates",
            FamilyConfig::Modulated { .. } => "modulated",
            FamilyConfig::OperatorCounterexample { .. } => "operator-counterexample",
            FamilyConfig::RandomStates { .. } => "random-states",
            FamilyConfig::CustomFile { .. } => "custom-file",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustionConfig {
    pub levels: usize,
}

impl Default for ExhaustionConfig {
    fn default() -> Self {
        Self { levels: 8 }
    }
}

/// `p` as a number or one of the strings `"inf"`, `"infinity"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Number(f64),
    Text(String),
}

impl Exponent {
    pub fn value(&self) -> Result<f64, String> {
        match self {
            Exponent::Number(p) => Ok(*p),
            Exponent::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
                other => other.parse::<f64>().map_err(|_| format!("cannot read exponent {s:?}")),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidSpaceConfig {
    pub p: Exponent,
    /// Exponent `beta` of the weight `(1 + |s|)^beta`; unweighted when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_beta: Option<f64>,
}

impl Default for SolidSpaceConfig {
    fn default() -> Self {
        Self { p: Exponent::Number(2.0), weight_beta: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagnostic {
    FrameIdentities,
    QuantizerUnitarity,
    WeylCalculus,
    CommutatorRefinement,
    HsExpansion,
    TightnessProfile,
    PiCc,
    Equicontinuity,
    PointApprox,
    UvModulus,
    QpTightness,
    CompactnessProxy,
    OperatorTightness,
    Equicompactness,
    WeakNorm,
}

impl Diagnostic {
    pub const ALL: [Diagnostic; 15] = [
        Diagnostic::FrameIdentities,
        Diagnostic::QuantizerUnitarity,
        Diagnostic::WeylCalculus,
        Diagnostic::CommutatorRefinement,
        Diagnostic::HsExpansion,
        Diagnostic::TightnessProfile,
        Diagnostic::PiCc,
        Diagnostic::Equicontinuity,
        Diagnostic::PointApprox,
        Diagnostic::UvModulus,
        Diagnostic::QpTightness,
        Diagnostic::CompactnessProxy,
        Diagnostic::OperatorTightness,
        Diagnostic::Equicompactness,
        Diagnostic::WeakNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Diagnostic::FrameIdentities => "frame-identities",
            Diagnostic::QuantizerUnitarity => "quantizer-unitarity",
            Diagnostic::WeylCalculus => "weyl-calculus",
            Diagnostic::CommutatorRefinement => "commutator-refinement",
            Diagnostic::HsExpansion => "hs-expansion",
            Diagnostic::TightnessProfile => "tightness-profile",
            Diagnostic::PiCc => "pi-cc",
            Diagnostic::Equicontinuity => "equicontinuity",
            Diagnostic::PointApprox => "point-approx",
            Diagnostic::UvModulus => "uv-modulus",
            Diagnostic::QpTightness => "qp-tightness",
            Diagnostic::CompactnessProxy => "compactness-proxy",
            Diagnostic::OperatorTightness => "operator-tightness",
            Diagnostic::Equicompactness => "equicompactness",
            Diagnostic::WeakNorm => "weak-norm",
        }
    }

    pub fn needs_operator_family(self) -> bool {
        matches!(self, Diagnostic::OperatorTightness | Diagnostic::Equicompactness | Diagnostic::WeakNorm)
    }

    pub fn needs_vector_family(self) -> bool {
        matches!(
            self,
            Diagnostic::TightnessProfile
                | Diagnostic::PiCc
                | Diagnostic::Equicontinuity
                | Diagnostic::PointApprox
                | Diagnostic::UvModulus
                | Diagnostic::QpTightness
                | Diagnostic::CompactnessProxy
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// `metric op value`, with `metric` written `diagnostic.name`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub metric: String,
    pub op: Comparison,
    pub value: f64,
}

impl Assertion {
    pub fn holds(&self, actual: f64) -> bool {
        match self.op {
            Comparison::AtMost => actual <= self.value,
            Comparison::AtLeast => actual >= self.value,
        }
    }
}

/// Parses JSON text; on failure returns one diagnostic naming the path of
/// the offending field.
pub fn parse(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        vec![format!("{path}: {}", e.inner())]
    })
}

/// Semantic checks beyond the schema. An empty list means the configuration
/// can be run.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    let s = &cfg.setup;
    if !(1..=2).contains(&s.n) {
        out.push(format!("setup.n: {} is not 1 or 2", s.n));
    }
    if s.size < 2 || s.size % 2 == 1 {
        out.push(format!("setup.size: {} must be even and at least 2", s.size));
    }
    if out.is_empty() {
        if let Err(e) = s.build() {
            out.push(format!("setup: {e}"));
        }
    }
    let WindowConfig::Gaussian { width } = cfg.window;
    if !(width > 0.0 && width.is_finite()) {
        out.push(format!("window.width: {width} must be positive"));
    }
    match cfg.solid_space.p.value() {
        Err(e) => out.push(format!("solid_space.p: {e}")),
        Ok(p) => {
            if let Err(e) = SolidSpaceSpec::new(p, None) {
                out.push(format!("solid_space.p: {e}"));
            }
        }
    }
    if cfg.exhaustion.levels == 0 {
        out.push("exhaustion.levels: need at least one level".into());
    }
    match &cfg.family {
        FamilyConfig::GaussianOrbit { radius } if !(*radius >= 0.0) => {
            out.push(format!("family.radius: {radius} must be nonnegative"))
        }
        FamilyConfig::EscapingTranslates { count } | FamilyConfig::RandomStates { count } if *count == 0 => {
            out.push("family.count: must be positive".into())
        }
        FamilyConfig::Modulated { frequencies } if frequencies.is_empty() => {
            out.push("family.frequencies: must not be empty".into())
        }
        FamilyConfig::OperatorCounterexample { j } => {
            let d = if s.n == 2 { s.size * s.size } else { s.size };
            if j.is_empty() || j.iter().any(|&v| v == 0 || v > d) {
                out.push(format!("family.j: every J must lie in 1..={d}"));
            }
        }
        FamilyConfig::CustomFile { path } if !path.exists() => {
            out.push(format!("family.path: {} does not exist", path.display()))
        }
        _ => {}
    }
    if cfg.diagnostics.is_empty() {
        out.push("diagnostics: list is empty".into());
    }
    for (i, d) in cfg.diagnostics.iter().enumerate() {
        if d.needs_operator_family() && !cfg.family.is_operator_family() {
            out.push(format!("diagnostics[{i}]: {} needs an operator-counterexample family", d.name()));
        }
        if d.needs_vector_family() && cfg.family.is_operator_family() {
            out.push(format!("diagnostics[{i}]: {} needs a vector family", d.name()));
        }
        if *d == Diagnostic::CommutatorRefinement && s.n != 2 {
            out.push(format!("diagnostics[{i}]: commutator-refinement needs n = 2"));
        }
    }
    for (i, a) in cfg.assertions.iter().enumerate() {
        let known = a
            .metric
            .split_once('.')
            .is_some_and(|(d, _)| cfg.diagnostics.iter().any(|x| x.name() == d));
        if !known {
            out.push(format!("assertions[{i}].metric: {:?} does not name a listed diagnostic", a.metric));
        }
    }
    out
}
