//! Resolution of a loaded configuration into built objects and per-kind
//! parameters. Every schema-level problem surfaces here, before any
//! computation starts.

use std::sync::Arc;

use qlevy::bialg::{BialgebraSpec, LinearFunctional};
use qlevy::constructions::make_azema;
use qlevy::gns::UnitaryTripleParams;
use qlevy::ncpoly::{NcPoly, Word};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::builders::{
    build, resolve_bialgebra, resolve_generator, same_algebra, same_presentation, square_matrix, unitary_d,
    unitary_params, Built,
};
use crate::config::{
    from_value, AzemaWienerParams, ConvexpParams, GeneratorRef, Kind, LoadedConfig, NoParams, ReverseParams,
    SweepParams, TrotterParams,
};
use crate::error::CliError;

/// Kind-specific inputs after validation.
#[derive(Clone)]
pub enum Plan {
    Axioms,
    Convexp { polys: Vec<(String, NcPoly)>, times: Vec<f64> },
    Gns,
    Sweep { source: Built, c: String, d: String },
    Reverse { b: NcPoly, d: NcPoly, b_text: String, d_text: String },
    FockUnitary(UnitaryTripleParams),
    AzemaWiener { q: f64 },
    Trotter(TrotterParams),
}

#[derive(Clone)]
pub struct Setup {
    pub loaded: LoadedConfig,
    pub bialgebra: Option<Arc<BialgebraSpec>>,
    pub generator: Option<LinearFunctional<Word>>,
    /// structure maps from the experiment's source into the bialgebra
    pub morphisms: Vec<String>,
    pub plan: Plan,
}

impl Setup {
    pub fn kind(&self) -> Kind {
        self.loaded.config.kind
    }

    pub fn bialgebra(&self) -> &Arc<BialgebraSpec> {
        self.bialgebra.as_ref().expect("kinds that run on a bialgebra resolve one")
    }

    pub fn generator(&self) -> &LinearFunctional<Word> {
        self.generator.as_ref().expect("kinds that need a generator resolve one")
    }
}

fn params<T: DeserializeOwned>(v: &Value) -> Result<T, CliError> {
    let v = if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
    from_value(&v, "/params")
}

fn parse_in(b: &BialgebraSpec, text: &str, pointer: &str) -> Result<NcPoly, CliError> {
    b.parse(text).map_err(|e| CliError::schema(pointer, e.to_string()))
}

/// Validates a configuration and builds everything it references.
pub fn prepare(loaded: LoadedConfig) -> Result<Setup, CliError> {
    let cfg = &loaded.config;
    let kind = cfg.kind;
    let needs = |what: &str| CliError::schema(format!("/{what}"), format!("required for kind `{}`", kind.name()));

    let mut bialgebra = match &cfg.bialgebra {
        Some(r) => Some(resolve_bialgebra(r, &loaded.base_dir)?),
        None => None,
    };
    let mut generator_ref: Option<GeneratorRef> = cfg.generator.clone();
    let mut morphisms: Vec<String> = Vec::new();

    let plan = match kind {
        Kind::Axioms => {
            let _: NoParams = params(&cfg.params)?;
            bialgebra.as_ref().ok_or_else(|| needs("bialgebra"))?;
            Plan::Axioms
        }
        Kind::Gns => {
            let _: NoParams = params(&cfg.params)?;
            bialgebra.as_ref().ok_or_else(|| needs("bialgebra"))?;
            generator_ref.as_ref().ok_or_else(|| needs("generator"))?;
            Plan::Gns
        }
        Kind::Convexp => {
            let p: ConvexpParams = params(&cfg.params)?;
            let b = bialgebra.as_ref().ok_or_else(|| needs("bialgebra"))?;
            generator_ref.as_ref().ok_or_else(|| needs("generator"))?;
            if p.polys.is_empty() {
                return Err(CliError::schema("/params/polys", "at least one polynomial is required"));
            }
            for (i, t) in p.times.iter().enumerate() {
                if !(t.is_finite() && *t >= 0.0) {
                    return Err(CliError::schema(format!("/params/times/{i}"), "times must be finite and non-negative"));
                }
            }
            let polys = p
                .polys
                .iter()
                .enumerate()
                .map(|(i, s)| Ok((s.clone(), parse_in(b, s, &format!("/params/polys/{i}"))?)))
                .collect::<Result<_, CliError>>()?;
            Plan::Convexp { polys, times: p.times }
        }
        Kind::Sweep => {
            let p: SweepParams = params(&cfg.params)?;
            let b = bialgebra.as_ref().ok_or_else(|| needs("bialgebra"))?;
            generator_ref.as_ref().ok_or_else(|| needs("generator"))?;
            let source = match &p.source {
                Some(text) => build(text, "/params/source")?,
                None => Built::Spec(b.clone()),
            };
            if !same_algebra(source.base(), b) {
                return Err(CliError::schema("/params/source", "the source must be built on the bialgebra's algebra"));
            }
            parse_in(source.base(), &p.c, "/params/c")?;
            let d = p.d.clone().unwrap_or_else(|| p.c.clone());
            parse_in(source.base(), &d, "/params/d")?;
            morphisms.push(source.morphism_name().to_string());
            Plan::Sweep { source, c: p.c, d }
        }
        Kind::Reverse => {
            let p: ReverseParams = params(&cfg.params)?;
            let b = bialgebra.as_ref().ok_or_else(|| needs("bialgebra"))?;
            generator_ref.as_ref().ok_or_else(|| needs("generator"))?;
            let d_text = p.d.clone().unwrap_or_else(|| p.b.clone());
            let bp = parse_in(b, &p.b, "/params/b")?;
            let dp = parse_in(b, &d_text, "/params/d")?;
            morphisms.extend(["kappa_tilde".to_string(), "kappa".to_string()]);
            Plan::Reverse { b: bp, d: dp, b_text: p.b, d_text }
        }
        Kind::FockUnitary => {
            let _: NoParams = params(&cfg.params)?;
            let b = bialgebra.as_ref().ok_or_else(|| needs("bialgebra"))?;
            let d = unitary_d(b).ok_or_else(|| CliError::schema("/bialgebra", "fock-unitary runs on unitary(d)"))?;
            let doc = generator_ref
                .as_ref()
                .and_then(|g| g.unitary.as_ref())
                .ok_or_else(|| CliError::schema("/generator/unitary", "fock-unitary needs unitary-triple data"))?;
            let up = unitary_params(doc, d, "/generator/unitary")?;
            if cfg.caps.defect_particles >= cfg.caps.fock {
                return Err(CliError::schema("/caps/defectParticles", "must lie below the particle cap"));
            }
            Plan::FockUnitary(up)
        }
        Kind::AzemaWiener => {
            let p: AzemaWienerParams = params(&cfg.params)?;
            if p.q == 0.0 || !p.q.is_finite() {
                return Err(CliError::schema("/params/q", format!("q must be finite and non-zero, got {}", p.q)));
            }
            let own = make_azema(p.q).map_err(|e| CliError::schema("/params/q", e.to_string()))?.0;
            match &bialgebra {
                Some(b) if !same_presentation(b, &own) => {
                    return Err(CliError::schema("/bialgebra", "azema-wiener runs on azema(q) with q from the parameters"))
                }
                Some(_) => {}
                None => bialgebra = Some(own),
            }
            if generator_ref.is_none() {
                generator_ref = Some(GeneratorRef { builtin: Some("azema".into()), table: None, unitary: None });
            }
            Plan::AzemaWiener { q: p.q }
        }
        Kind::Trotter => {
            let p: TrotterParams = params(&cfg.params)?;
            if !(p.r_max.is_finite() && p.r_max > 0.0) {
                return Err(CliError::schema("/params/rMax", "must be positive"));
            }
            let length = cfg.partition.end - cfg.partition.start;
            match &p.g {
                Some(rows) => {
                    square_matrix(rows, "/params/g")?;
                    for (i, n) in cfg.partition.meshes.iter().enumerate() {
                        if length / *n as f64 > p.r_max {
                            return Err(CliError::schema(
                                format!("/partition/meshes/{i}"),
                                format!("mesh {} exceeds rMax {}", length / *n as f64, p.r_max),
                            ));
                        }
                    }
                }
                None => {
                    if !(1..=16).contains(&p.dimension) {
                        return Err(CliError::schema("/params/dimension", "must lie in 1..=16"));
                    }
                    if p.families == 0 || p.partitions_per_family == 0 {
                        return Err(CliError::schema("/params/families", "families and partitions must be positive"));
                    }
                    if length / p.r_max > 20.0 {
                        return Err(CliError::schema("/params/rMax", "random partitions need length ≤ 20·rMax"));
                    }
                }
            }
            Plan::Trotter(p)
        }
    };

    if let Some(declared) = &cfg.morphisms {
        let same = *declared == morphisms || (morphisms.is_empty() && declared.iter().all(|m| m == "id"));
        if !same {
            return Err(CliError::schema(
                "/morphisms",
                format!("the structure maps of this experiment are {morphisms:?}, not {declared:?}"),
            ));
        }
    }

    let generator = match (&generator_ref, &bialgebra) {
        (Some(g), Some(b)) => Some(resolve_generator(g, b)?),
        (Some(_), None) => return Err(CliError::schema("/generator", "a generator needs a bialgebra")),
        _ => None,
    };
    Ok(Setup { loaded, bialgebra, generator, morphisms, plan })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_str;

    fn prep(text: &str) -> Result<Setup, CliError> {
        prepare(load_str(text, Default::default())?)
    }

    fn pointer(r: Result<Setup, CliError>) -> String {
        match r {
            Err(CliError::Schema { pointer, .. }) => pointer,
            Err(e) => panic!("{e}"),
            Ok(_) => panic!("accepted"),
        }
    }

    #[test]
    fn azema_wiener_defaults_to_its_own_bialgebra_and_generator() {
        let s = prep(r#"{"kind": "azema-wiener", "params": {"q": 2}}"#).unwrap();
        assert!(same_presentation(s.bialgebra(), &make_azema(2.0).unwrap().0));
        assert!(s.generator.is_some());
        let other = r#"{"kind": "azema-wiener", "bialgebra": {"builder": "azema(3)"}, "params": {"q": 2}}"#;
        assert_eq!(pointer(prep(other)), "/bialgebra");
    }

    #[test]
    fn required_blocks_are_reported() {
        assert_eq!(pointer(prep(r#"{"kind": "gns"}"#)), "/bialgebra");
        assert_eq!(pointer(prep(r#"{"kind": "gns", "bialgebra": {"builder": "azema(2)"}}"#)), "/generator");
        let fock = r#"{"kind": "fock-unitary", "bialgebra": {"builder": "azema(2)"}}"#;
        assert_eq!(pointer(prep(fock)), "/bialgebra");
        let params = r#"{"kind": "axioms", "bialgebra": {"builder": "azema(2)"}, "params": {"c": "x"}}"#;
        assert_eq!(pointer(prep(params)), "/params/c");
    }

    #[test]
    fn expressions_are_parsed_before_running() {
        let bad = r#"{"kind": "convexp", "bialgebra": {"builder": "azema(2)"}, "generator": {"builtin": "azema"},
                     "params": {"polys": ["x", "x + z"], "times": [1]}}"#;
        assert_eq!(pointer(prep(bad)), "/params/polys/1");
        let bad = r#"{"kind": "reverse", "bialgebra": {"builder": "azema(2)"}, "generator": {"builtin": "azema"},
                     "params": {"b": "x", "d": "q"}}"#;
        assert_eq!(pointer(prep(bad)), "/params/d");
    }

    #[test]
    fn fixed_trotter_meshes_respect_the_radius() {
        let bad = r#"{"kind": "trotter", "partition": {"meshes": [2, 8]}, "params": {"g": [[[0, 0]]], "rMax": 0.25}}"#;
        assert_eq!(pointer(prep(bad)), "/partition/meshes/0");
        let ok = r#"{"kind": "trotter", "partition": {"meshes": [4, 8]}, "params": {"g": [[[0, 0]]], "rMax": 0.25}}"#;
        assert!(prep(ok).is_ok());
    }

    #[test]
    fn morphism_chains_are_derived() {
        let s = prep(
            r#"{"kind": "sweep", "bialgebra": {"builder": "azema(2)"}, "generator": {"builtin": "azema"},
                "params": {"source": "induced_tensor(azema(2), 4)", "c": "x"}}"#,
        )
        .unwrap();
        assert_eq!(s.morphisms, vec!["tensor_kappa".to_string()]);
        let s = prep(r#"{"kind": "gns", "bialgebra": {"builder": "azema(2)"}, "generator": {"builtin": "azema"}, "morphisms": ["id"]}"#)
            .unwrap();
        assert!(s.morphisms.is_empty());
        let foreign = r#"{"kind": "sweep", "bialgebra": {"builder": "azema(2)"}, "generator": {"builtin": "azema"},
                         "params": {"source": "unitary(1)", "c": "x"}}"#;
        assert_eq!(pointer(prep(foreign)), "/params/source");
    }
}
