//! Experiment configuration: JSON document, schema validation with
//! JSON-pointer locations, and the per-kind parameter blocks.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = qlevy::acceptance::DEFAULT_SEED;

/// Experiment kinds understood by `qlevy run`.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Axioms,
    Convexp,
    Gns,
    Sweep,
    Reverse,
    FockUnitary,
    AzemaWiener,
    Trotter,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Axioms,
        Kind::Convexp,
        Kind::Gns,
        Kind::Sweep,
        Kind::Reverse,
        Kind::FockUnitary,
        Kind::AzemaWiener,
        Kind::Trotter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Axioms => "axioms",
            Kind::Convexp => "convexp",
            Kind::Gns => "gns",
            Kind::Sweep => "sweep",
            Kind::Reverse => "reverse",
            Kind::FockUnitary => "fock-unitary",
            Kind::AzemaWiener => "azema-wiener",
            Kind::Trotter => "trotter",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Kind::Axioms => "bialgebra laws, rule compatibility, generator hermiticity and positivity",
            Kind::Convexp => "convolution exponentials φ_t(b) against the power-series oracle",
            Kind::Gns => "Lévy triple from the generator and residuals of its identities",
            Kind::Sweep => "Gram data of infinitesimal convolution products along refining meshes",
            Kind::Reverse => "reverse transformation through the induced tensor bialgebra",
            Kind::FockUnitary => "unitary product evolution on truncated Fock space for 𝒰⟨d⟩",
            Kind::AzemaWiener => "Azéma martingale from Wiener increments and vice versa",
            Kind::Trotter => "product-formula bound for families I + rG + 𝔖_r",
        }
    }
}

/// A complex number as `[re, im]`.
pub type Complex = [f64; 2];

/// Where the presented bialgebra comes from: exactly one of the fields.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BialgebraRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<crate::doc::BialgebraDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

/// One entry of a generator table: the value of `ψ` on a normal-form word.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TableEntry {
    pub monomial: String,
    pub value: Complex,
}

/// `(W, L, H)` of a triple on `𝒰⟨d⟩`: `W` is `dm × dm`, `L` lists the
/// `d²` vectors `L_{kl}` row-major, `H` is `d × d`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct UnitaryDoc {
    pub w: Vec<Vec<Complex>>,
    pub l: Vec<Vec<Complex>>,
    pub h: Vec<Vec<Complex>>,
}

/// The generator: a named builtin, a table of monomial values (all other
/// normal words map to zero), or unitary-triple data.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GeneratorRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<TableEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<UnitaryDoc>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PartitionSchedule {
    #[serde(default)]
    pub start: f64,
    #[serde(default = "one")]
    pub end: f64,
    #[serde(default = "dyadic")]
    pub meshes: Vec<usize>,
}

impl Default for PartitionSchedule {
    fn default() -> Self {
        Self { start: 0.0, end: 1.0, meshes: dyadic() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Caps {
    /// degree cap of the GNS Gram basis and of positivity checks
    pub degree: usize,
    /// tensor-length cap of tensor bialgebras built implicitly
    pub tensor: usize,
    /// key-degree cap of group-like bialgebras built implicitly
    pub grouplike: usize,
    /// particle cap per Fock factor
    pub fock: usize,
    /// sub-pieces per interval for nested evaluations
    pub inner: usize,
    /// particle number of the subspace carrying the unitarity defect
    pub defect_particles: usize,
    /// random samples for the law checks
    pub samples: usize,
    /// maximal degree of random samples
    pub sample_degree: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self { degree: 4, tensor: 8, grouplike: 8, fock: 8, inner: 4, defect_particles: 2, samples: 20, sample_degree: 3 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Tolerances {
    /// bialgebra laws and rule compatibility
    pub axioms: f64,
    /// counit preservation of structure maps
    pub counit: f64,
    /// hermiticity of the generator
    pub hermiticity: f64,
    /// relative Gram null-space threshold
    pub null: f64,
    /// identities checked by experiments (oracle agreement, triple residuals)
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { axioms: 1e-10, counit: 1e-12, hermiticity: 1e-10, null: 1e-9, residual: 1e-9 }
    }
}

/// Artifact file names, relative to the output directory.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct OutputPaths {
    pub csv: String,
    pub summary: String,
    /// extra JSON document (Lévy triple, bialgebra document), where produced
    pub document: String,
    /// wall time, kept apart so that the summary is byte-deterministic
    pub timing: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            csv: "results.csv".into(),
            summary: "summary.json".into(),
            document: "document.json".into(),
            timing: "timing.json".into(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bialgebra: Option<BialgebraRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorRef>,
    /// structure maps from the experiment's source to the bialgebra, in order
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morphisms: Option<Vec<String>>,
    #[serde(default)]
    pub partition: PartitionSchedule,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default = "default_seed")]
    pub rng_seed: u64,
    /// acceptance criteria (1-based) evaluated alongside the experiment
    #[serde(default)]
    pub acceptance: Vec<usize>,
    #[serde(default)]
    pub params: Value,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NoParams {}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConvexpParams {
    pub polys: Vec<String>,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepParams {
    /// builder of the source bialgebra; defaults to the bialgebra itself
    #[serde(default)]
    pub source: Option<String>,
    pub c: String,
    #[serde(default)]
    pub d: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ReverseParams {
    pub b: String,
    #[serde(default)]
    pub d: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AzemaWienerParams {
    pub q: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct TrotterParams {
    /// fixed `G`; without it random families are drawn
    pub g: Option<Vec<Vec<Complex>>>,
    pub dimension: usize,
    pub families: usize,
    pub partitions_per_family: usize,
    pub r_max: f64,
}

impl Default for TrotterParams {
    fn default() -> Self {
        Self { g: None, dimension: 4, families: 1000, partitions_per_family: 20, r_max: 0.25 }
    }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn one() -> f64 {
    1.0
}

fn dyadic() -> Vec<usize> {
    vec![2, 4, 8, 16, 32, 64]
}

/// A config together with the document it was read from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub raw: Value,
    /// directory of the config file; relative `file` references resolve here
    pub base_dir: PathBuf,
}

/// Deserializes `value`, reporting failures at their JSON-pointer location
/// below `prefix`.
pub fn from_value<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut pointer = prefix.to_string();
        for seg in e.path().iter() {
            use serde_path_to_error::Segment;
            match seg {
                Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                Segment::Map { key } => pointer.push_str(&format!("/{}", crate::error::pointer_token(key))),
                Segment::Enum { variant } => pointer.push_str(&format!("/{}", crate::error::pointer_token(variant))),
                Segment::Unknown => {}
            }
        }
        CliError::schema(pointer, e.inner().to_string())
    })
}

pub fn parse_json(text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse { line: e.line(), column: e.column(), message: e.to_string() })
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_str(&text, base_dir)
}

pub fn load_str(text: &str, base_dir: PathBuf) -> Result<LoadedConfig, CliError> {
    let raw = parse_json(text)?;
    if !raw.is_object() {
        return Err(CliError::schema("/", "configuration must be a JSON object"));
    }
    let config: ExperimentConfig = from_value(&raw, "")?;
    validate(&config)?;
    Ok(LoadedConfig { config, raw, base_dir })
}

fn validate(c: &ExperimentConfig) -> Result<(), CliError> {
    let p = &c.partition;
    if !(p.start.is_finite() && p.end.is_finite() && p.end > p.start) {
        return Err(CliError::schema("/partition/end", "interval must satisfy start < end"));
    }
    if p.meshes.is_empty() {
        return Err(CliError::schema("/partition/meshes", "at least one mesh is required"));
    }
    for (i, w) in p.meshes.iter().enumerate() {
        if *w == 0 {
            return Err(CliError::schema(format!("/partition/meshes/{i}"), "mesh counts must be positive"));
        }
        if i > 0 && *w <= p.meshes[i - 1] {
            return Err(CliError::schema(format!("/partition/meshes/{i}"), "mesh counts must be strictly increasing"));
        }
    }
    for (name, v) in [
        ("axioms", c.tolerances.axioms),
        ("counit", c.tolerances.counit),
        ("hermiticity", c.tolerances.hermiticity),
        ("null", c.tolerances.null),
        ("residual", c.tolerances.residual),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::schema(format!("/tolerances/{name}"), "tolerances must be positive"));
        }
    }
    for (name, v) in [("degree", c.caps.degree), ("tensor", c.caps.tensor), ("grouplike", c.caps.grouplike), ("inner", c.caps.inner)] {
        if v == 0 {
            return Err(CliError::schema(format!("/caps/{name}"), "caps must be positive"));
        }
    }
    if c.caps.fock < 2 {
        return Err(CliError::schema("/caps/fock", "the particle cap must be at least 2"));
    }
    for (i, id) in c.acceptance.iter().enumerate() {
        if qlevy::acceptance::criterion(*id).is_none() {
            return Err(CliError::schema(format!("/acceptance/{i}"), format!("no acceptance criterion {id}")));
        }
    }
    for (name, v) in [("csv", &c.output.csv), ("summary", &c.output.summary), ("document", &c.output.document), ("timing", &c.output.timing)] {
        let path = Path::new(v);
        if v.is_empty() || path.is_absolute() || path.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
            return Err(CliError::schema(format!("/output/{name}"), "output paths must be relative and stay inside the output directory"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<LoadedConfig, CliError> {
        load_str(text, PathBuf::new())
    }

    #[test]
    fn defaults_fill_in() {
        let c = load(r#"{"kind": "gns", "bialgebra": {"builder": "azema(2)"}}"#).unwrap().config;
        assert_eq!(c.kind, Kind::Gns);
        assert_eq!(c.rng_seed, DEFAULT_SEED);
        assert_eq!(c.partition.meshes, vec![2, 4, 8, 16, 32, 64]);
        assert_eq!(c.caps.degree, 4);
    }

    #[test]
    fn unknown_kind_is_a_schema_error_at_kind() {
        match load(r#"{"kind": "levitate"}"#) {
            Err(CliError::Schema { pointer, .. }) => assert_eq!(pointer, "/kind"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nested_errors_carry_their_pointer() {
        match load(r#"{"kind": "sweep", "partition": {"meshes": [2, "x"]}}"#) {
            Err(CliError::Schema { pointer, .. }) => assert_eq!(pointer, "/partition/meshes/1"),
            other => panic!("{other:?}"),
        }
        match load(r#"{"kind": "sweep", "partition": {"meshes": [4, 2]}}"#) {
            Err(CliError::Schema { pointer, .. }) => assert_eq!(pointer, "/partition/meshes/1"),
            other => panic!("{other:?}"),
        }
        match load(r#"{"kind": "sweep", "colour": 3}"#) {
            Err(CliError::Schema { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(load("{\"kind\": "), Err(CliError::Parse { .. })));
    }

    #[test]
    fn params_errors_are_prefixed() {
        let v: Value = serde_json::from_str(r#"{"polys": ["x"], "times": "soon"}"#).unwrap();
        match from_value::<ConvexpParams>(&v, "/params") {
            Err(CliError::Schema { pointer, .. }) => assert_eq!(pointer, "/params/times"),
            other => panic!("{other:?}"),
        }
    }
}
