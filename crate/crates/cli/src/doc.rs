//! JSON document form of a presented bialgebra.
//!
//! ```json
//! {
//!   "name": "azema(2)",
//!   "alphabet": [{"name": "x", "adjoint": "x*"}, {"name": "x*", "adjoint": "x"}, {"name": "y", "adjoint": "y"}],
//!   "rules": [{"lhs": ["y", "x"], "rhs": [{"coeff": [0.5, 0], "word": ["x", "y"]}]}],
//!   "deltaOnGen": {"y": [{"coeff": [1, 0], "left": ["y"], "right": ["y"]}]},
//!   "counitOnGen": {"y": [1, 0]}
//! }
//! ```
//!
//! Words are lists of generator names; the empty list is the unit.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use qlevy::bialg::BialgebraSpec;
use qlevy::ncpoly::{AlgebraSpec, GeneratorSymbol, NcPoly, RewriteRule, Word};
use qlevy::{c64, LinComb, C64};
use serde::{Deserialize, Serialize};

use crate::config::Complex;
use crate::error::{pointer_token, CliError};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GeneratorDoc {
    pub name: String,
    pub adjoint: String,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TermDoc {
    pub coeff: Complex,
    pub word: Vec<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RuleDoc {
    pub lhs: Vec<String>,
    pub rhs: Vec<TermDoc>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TensorTermDoc {
    pub coeff: Complex,
    pub left: Vec<String>,
    pub right: Vec<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BialgebraDoc {
    #[serde(default)]
    pub name: String,
    pub alphabet: Vec<GeneratorDoc>,
    #[serde(default)]
    pub rules: Vec<RuleDoc>,
    pub delta_on_gen: BTreeMap<String, Vec<TensorTermDoc>>,
    pub counit_on_gen: BTreeMap<String, Complex>,
}

fn cx(z: &Complex) -> C64 {
    c64(z[0], z[1])
}

fn pair(z: C64) -> Complex {
    [z.re, z.im]
}

struct Names<'a> {
    index: HashMap<&'a str, u16>,
}

impl Names<'_> {
    fn word(&self, names: &[String], pointer: &str) -> Result<Word, CliError> {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                self.index
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| CliError::schema(format!("{pointer}/{i}"), format!("unknown generator `{n}`")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }
}

impl BialgebraDoc {
    /// Builds and validates the bialgebra; `pointer` locates this document
    /// inside the configuration.
    pub fn to_spec(&self, pointer: &str) -> Result<Arc<BialgebraSpec>, CliError> {
        if self.alphabet.is_empty() {
            return Err(CliError::schema(format!("{pointer}/alphabet"), "alphabet must be non-empty"));
        }
        let mut index = HashMap::new();
        for (i, g) in self.alphabet.iter().enumerate() {
            if index.insert(g.name.as_str(), i as u16).is_some() {
                return Err(CliError::schema(format!("{pointer}/alphabet/{i}/name"), format!("duplicate generator `{}`", g.name)));
            }
        }
        let names = Names { index };
        let mut alphabet = Vec::new();
        for (i, g) in self.alphabet.iter().enumerate() {
            let adjoint = *names.index.get(g.adjoint.as_str()).ok_or_else(|| {
                CliError::schema(format!("{pointer}/alphabet/{i}/adjoint"), format!("unknown generator `{}`", g.adjoint))
            })?;
            alphabet.push(GeneratorSymbol { name: g.name.clone(), adjoint });
        }
        let mut rules = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            let at = format!("{pointer}/rules/{i}");
            let lhs = names.word(&r.lhs, &format!("{at}/lhs"))?;
            let mut rhs = NcPoly::zero();
            for (j, t) in r.rhs.iter().enumerate() {
                rhs.add_term(names.word(&t.word, &format!("{at}/rhs/{j}/word"))?, cx(&t.coeff));
            }
            rhs.prune();
            rules.push(RewriteRule { lhs, rhs });
        }
        let alg = AlgebraSpec::new(alphabet, rules).map_err(|e| CliError::schema(format!("{pointer}/rules"), e.to_string()))?;
        let mut delta = Vec::new();
        let mut counits = Vec::new();
        for g in &self.alphabet {
            let key = pointer_token(&g.name);
            let terms = self.delta_on_gen.get(&g.name).ok_or_else(|| {
                CliError::schema(format!("{pointer}/deltaOnGen"), format!("missing coproduct of `{}`", g.name))
            })?;
            let mut t = LinComb::zero();
            for (j, term) in terms.iter().enumerate() {
                let at = format!("{pointer}/deltaOnGen/{key}/{j}");
                let l = names.word(&term.left, &format!("{at}/left"))?;
                let r = names.word(&term.right, &format!("{at}/right"))?;
                t.add_term((l, r), cx(&term.coeff));
            }
            t.prune();
            delta.push(t);
            let e = self.counit_on_gen.get(&g.name).ok_or_else(|| {
                CliError::schema(format!("{pointer}/counitOnGen"), format!("missing counit of `{}`", g.name))
            })?;
            counits.push(cx(e));
        }
        for (section, map_keys) in [
            ("deltaOnGen", self.delta_on_gen.keys().collect::<Vec<_>>()),
            ("counitOnGen", self.counit_on_gen.keys().collect::<Vec<_>>()),
        ] {
            if let Some(k) = map_keys.into_iter().find(|k| !names.index.contains_key(k.as_str())) {
                return Err(CliError::schema(
                    format!("{pointer}/{section}/{}", pointer_token(k)),
                    format!("unknown generator `{k}`"),
                ));
            }
        }
        let name = if self.name.is_empty() { "document".to_string() } else { self.name.clone() };
        BialgebraSpec::new(name, alg, delta, counits).map_err(|e| CliError::schema(format!("{pointer}/deltaOnGen"), e.to_string()))
    }

    pub fn from_spec(b: &BialgebraSpec) -> Self {
        let alg = b.algebra();
        let letter = |l: u16| alg.alphabet()[l as usize].name.clone();
        let word = |w: &Word| w.0.iter().map(|&l| letter(l)).collect::<Vec<_>>();
        let alphabet =
            alg.alphabet().iter().map(|g| GeneratorDoc { name: g.name.clone(), adjoint: letter(g.adjoint) }).collect();
        let rules = alg
            .rules()
            .iter()
            .map(|r| RuleDoc {
                lhs: word(&r.lhs),
                rhs: r.rhs.iter().map(|(w, c)| TermDoc { coeff: pair(*c), word: word(w) }).collect(),
            })
            .collect();
        let mut delta_on_gen = BTreeMap::new();
        let mut counit_on_gen = BTreeMap::new();
        for (i, g) in alg.alphabet().iter().enumerate() {
            let terms = b.delta_on_gen()[i]
                .iter()
                .map(|((l, r), c)| TensorTermDoc { coeff: pair(*c), left: word(l), right: word(r) })
                .collect();
            delta_on_gen.insert(g.name.clone(), terms);
            counit_on_gen.insert(g.name.clone(), pair(b.counit_on_gen()[i]));
        }
        BialgebraDoc { name: b.name().to_string(), alphabet, rules, delta_on_gen, counit_on_gen }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qlevy::constructions::{make_azema, make_unitary_bialgebra};

    #[test]
    fn round_trip_preserves_the_structure() {
        let (az, prim, _) = make_azema(2.0).unwrap();
        for b in [az, prim, make_unitary_bialgebra(2).unwrap()] {
            let doc = BialgebraDoc::from_spec(&b);
            let text = serde_json::to_string(&doc).unwrap();
            let back: BialgebraDoc = serde_json::from_str(&text).unwrap();
            assert_eq!(back, doc);
            let rebuilt = back.to_spec("/spec").unwrap();
            assert_eq!(BialgebraDoc::from_spec(&rebuilt), doc);
            let p = b.parse(&b.algebra().format(&b.algebra().gen(&b.algebra().alphabet()[0].name).unwrap())).unwrap();
            assert_eq!(rebuilt.coproduct(&p).unwrap(), b.coproduct(&p).unwrap());
        }
    }

    #[test]
    fn unknown_names_are_located() {
        let (az, _, _) = make_azema(2.0).unwrap();
        let mut doc = BialgebraDoc::from_spec(&az);
        doc.delta_on_gen.get_mut("y").unwrap()[0].left = vec!["z".into()];
        match doc.to_spec("/bialgebra/spec") {
            Err(CliError::Schema { pointer, .. }) => assert_eq!(pointer, "/bialgebra/spec/deltaOnGen/y/0/left/0"),
            other => panic!("{other:?}"),
        }
    }
}
