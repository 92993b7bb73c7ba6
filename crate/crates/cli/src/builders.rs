//! Named builders (`azema(2)`, `grouplike(azema(2), 8)`, ...) and generator
//! construction from configuration.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use qlevy::bialg::{BialgebraSpec, LinearFunctional};
use qlevy::constructions::{
    azema_generator, make_azema, make_grouplike, make_induced_tensor, make_primitive_tensor, make_unitary_bialgebra,
    GroupLikeBialgebra, LetterSeq, Morphism, TensorBialgebra,
};
use qlevy::gns::{unitary_triple, UnitaryTripleParams};
use qlevy::ncpoly::{NcPoly, Word};
use qlevy::{c64, C64};

use crate::config::{BialgebraRef, Complex, GeneratorRef, UnitaryDoc};
use crate::doc::BialgebraDoc;
use crate::error::CliError;

/// Largest `d` accepted by `unitary(d)`.
pub const MAX_UNITARY_D: usize = 4;
/// Largest degree cap accepted by the derived-bialgebra builders.
pub const MAX_BUILDER_CAP: usize = 32;

/// Builder signatures with a one-line description, for `list-builtins`.
pub const BUILDERS: [(&str, &str); 6] = [
    ("azema(q)", "Azéma *-bialgebra: xy = q·yx, Δx = x⊗y + 1⊗x, Δy = y⊗y (q real, non-zero)"),
    ("azema_primitive(q)", "the same algebra with x primitive and y group-like"),
    ("unitary(d)", "𝒰⟨d⟩: Δx_kl = Σ_i x_ki ⊗ x_il with unitarity relations"),
    ("primitive_tensor(of, cap)", "primitive tensor bialgebra over the counit kernel of `of`, tensor length ≤ cap"),
    ("induced_tensor(of, cap)", "tensor bialgebra with the coproduct induced from `of`, tensor length ≤ cap"),
    ("grouplike(of, cap)", "group-like bialgebra of counit-one elements of `of`, key degree ≤ cap"),
];

/// Generator builtins, for `list-builtins`.
pub const GENERATORS: [(&str, &str); 1] =
    [("azema", "ψ(M y^k) = 1 if the x-part M is xx*, else 0; on any structure of the Azéma algebra")];

#[derive(Clone, Debug, PartialEq)]
pub enum Arg {
    Num(f64),
    Call(Call),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Call {
    pub name: String,
    pub args: Vec<Arg>,
}

struct CallParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl CallParser<'_> {
    fn ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn err<T>(&self, m: &str) -> Result<T, String> {
        Err(format!("{m} at offset {}", self.pos))
    }

    fn call(&mut self) -> Result<Call, String> {
        self.ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos || !self.src[start].is_ascii_alphabetic() {
            return self.err("expected a builder name");
        }
        let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        self.ws();
        if self.src.get(self.pos) != Some(&b'(') {
            return self.err("expected `(`");
        }
        self.pos += 1;
        let mut args = Vec::new();
        self.ws();
        if self.src.get(self.pos) == Some(&b')') {
            self.pos += 1;
            return Ok(Call { name, args });
        }
        loop {
            args.push(self.arg()?);
            self.ws();
            match self.src.get(self.pos) {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    return Ok(Call { name, args });
                }
                _ => return self.err("expected `,` or `)`"),
            }
        }
    }

    fn arg(&mut self) -> Result<Arg, String> {
        self.ws();
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() => Ok(Arg::Call(self.call()?)),
            Some(_) => {
                let start = self.pos;
                while self.pos < self.src.len() && matches!(self.src[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E') {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                text.parse::<f64>().map(Arg::Num).or_else(|_| {
                    self.pos = start;
                    self.err("expected a number or a builder call")
                })
            }
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses `name(arg, ...)`; arguments are numbers or nested calls.
pub fn parse_call(text: &str) -> Result<Call, String> {
    let mut p = CallParser { src: text.as_bytes(), pos: 0 };
    let c = p.call()?;
    p.ws();
    if p.pos != p.src.len() {
        return p.err("trailing input");
    }
    Ok(c)
}

/// A structure produced by a builder, with its map into the base bialgebra.
#[derive(Clone)]
pub enum Built {
    Spec(Arc<BialgebraSpec>),
    Tensor { tensor: Arc<TensorBialgebra>, kappa: Morphism<LetterSeq, Word> },
    /// `tensor` is the induced tensor bialgebra `kappa_tilde` starts from
    GroupLike {
        g: Arc<GroupLikeBialgebra>,
        kappa: Morphism<NcPoly, Word>,
        kappa_tilde: Morphism<LetterSeq, NcPoly>,
        tensor: Arc<TensorBialgebra>,
    },
}

impl Built {
    /// The presented bialgebra the structure maps into (itself for `Spec`).
    pub fn base(&self) -> &Arc<BialgebraSpec> {
        match self {
            Built::Spec(b) => b,
            Built::Tensor { tensor, .. } => tensor.base(),
            Built::GroupLike { g, .. } => g.base(),
        }
    }

    /// Name of the structure map into the base.
    pub fn morphism_name(&self) -> &'static str {
        match self {
            Built::Spec(_) => "id",
            Built::Tensor { .. } => "tensor_kappa",
            Built::GroupLike { .. } => "kappa",
        }
    }
}

fn num(call: &Call, i: usize, pointer: &str) -> Result<f64, CliError> {
    match call.args.get(i) {
        Some(Arg::Num(x)) => Ok(*x),
        _ => Err(CliError::schema(pointer, format!("argument {} of `{}` must be a number", i + 1, call.name))),
    }
}

fn count(call: &Call, i: usize, max: usize, pointer: &str) -> Result<usize, CliError> {
    let x = num(call, i, pointer)?;
    if x.fract() != 0.0 || x < 1.0 || x > max as f64 {
        return Err(CliError::schema(
            pointer,
            format!("argument {} of `{}` must be an integer in 1..={max}, got {x}", i + 1, call.name),
        ));
    }
    Ok(x as usize)
}

fn arity(call: &Call, n: usize, pointer: &str) -> Result<(), CliError> {
    if call.args.len() != n {
        return Err(CliError::schema(pointer, format!("`{}` takes {n} argument(s), got {}", call.name, call.args.len())));
    }
    Ok(())
}

fn azema_q(call: &Call, pointer: &str) -> Result<f64, CliError> {
    arity(call, 1, pointer)?;
    let q = num(call, 0, pointer)?;
    if q == 0.0 || !q.is_finite() {
        return Err(CliError::schema(pointer, format!("the Azéma parameter q must be finite and non-zero, got {q}")));
    }
    Ok(q)
}

fn build_spec(call: &Call, pointer: &str) -> Result<Arc<BialgebraSpec>, CliError> {
    match build_call(call, pointer)? {
        Built::Spec(b) => Ok(b),
        _ => Err(CliError::schema(pointer, format!("`{}` is not a presented bialgebra", call.name))),
    }
}

fn build_call(call: &Call, pointer: &str) -> Result<Built, CliError> {
    let schema = |e: qlevy::Error| CliError::schema(pointer, e.to_string());
    match call.name.as_str() {
        "azema" => Ok(Built::Spec(make_azema(azema_q(call, pointer)?).map_err(schema)?.0)),
        "azema_primitive" => Ok(Built::Spec(make_azema(azema_q(call, pointer)?).map_err(schema)?.1)),
        "unitary" => {
            arity(call, 1, pointer)?;
            Ok(Built::Spec(make_unitary_bialgebra(count(call, 0, MAX_UNITARY_D, pointer)?).map_err(schema)?))
        }
        "primitive_tensor" | "induced_tensor" | "grouplike" => {
            arity(call, 2, pointer)?;
            let of = match &call.args[0] {
                Arg::Call(c) => build_spec(c, pointer)?,
                Arg::Num(_) => {
                    return Err(CliError::schema(pointer, format!("argument 1 of `{}` must be a bialgebra", call.name)))
                }
            };
            let cap = count(call, 1, MAX_BUILDER_CAP, pointer)?;
            match call.name.as_str() {
                "primitive_tensor" => {
                    let (tensor, kappa) = make_primitive_tensor(&of, cap).map_err(schema)?;
                    Ok(Built::Tensor { tensor, kappa })
                }
                "induced_tensor" => {
                    let (tensor, kappa, _) = make_induced_tensor(&of, cap).map_err(schema)?;
                    Ok(Built::Tensor { tensor, kappa })
                }
                _ => {
                    let (g, kappa, kappa_tilde) = make_grouplike(&of, cap).map_err(schema)?;
                    let (tensor, _, _) = make_induced_tensor(&of, cap).map_err(schema)?;
                    Ok(Built::GroupLike { g, kappa, kappa_tilde, tensor })
                }
            }
        }
        other => Err(CliError::schema(pointer, format!("unknown builder `{other}`"))),
    }
}

/// Builds a structure from builder text; errors point at `pointer`.
pub fn build(text: &str, pointer: &str) -> Result<Built, CliError> {
    let call = parse_call(text).map_err(|m| CliError::schema(pointer, m))?;
    build_call(&call, pointer)
}

/// Resolves the `bialgebra` block of a configuration.
pub fn resolve_bialgebra(r: &BialgebraRef, base_dir: &Path) -> Result<Arc<BialgebraSpec>, CliError> {
    let given = [r.builder.is_some(), r.spec.is_some(), r.file.is_some()].iter().filter(|b| **b).count();
    if given != 1 {
        return Err(CliError::schema("/bialgebra", "exactly one of `builder`, `spec`, `file` is required"));
    }
    if let Some(b) = &r.builder {
        return match build(b, "/bialgebra/builder")? {
            Built::Spec(s) => Ok(s),
            _ => Err(CliError::schema("/bialgebra/builder", "the bialgebra must be a presented bialgebra")),
        };
    }
    if let Some(doc) = &r.spec {
        return doc.to_spec("/bialgebra/spec");
    }
    let file = r.file.as_ref().expect("one field is present");
    let path = base_dir.join(file);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let value = crate::config::parse_json(&text)?;
    let doc: BialgebraDoc = crate::config::from_value(&value, "/bialgebra/file")?;
    doc.to_spec("/bialgebra/file")
}

/// True when both presentations have the same alphabet, rules and structure.
pub fn same_presentation(a: &BialgebraSpec, b: &BialgebraSpec) -> bool {
    BialgebraDoc::from_spec(a) == BialgebraDoc { name: a.name().to_string(), ..BialgebraDoc::from_spec(b) }
}

/// True when both bialgebras share alphabet and rules (the structure maps
/// may differ).
pub fn same_algebra(a: &BialgebraSpec, b: &BialgebraSpec) -> bool {
    let (da, db) = (BialgebraDoc::from_spec(a), BialgebraDoc::from_spec(b));
    da.alphabet == db.alphabet && da.rules == db.rules
}

fn cx(z: &Complex) -> C64 {
    c64(z[0], z[1])
}

fn matrix(rows: &[Vec<Complex>], r: usize, c: usize, pointer: &str) -> Result<DMatrix<C64>, CliError> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::schema(pointer, format!("expected a {r}×{c} matrix")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| cx(&rows[i][j])))
}

/// Parses a square complex matrix given as rows of `[re, im]` pairs.
pub fn square_matrix(rows: &[Vec<Complex>], pointer: &str) -> Result<DMatrix<C64>, CliError> {
    let n = rows.len();
    if n == 0 {
        return Err(CliError::schema(pointer, "matrix must be non-empty"));
    }
    matrix(rows, n, n, pointer)
}

/// `(W, L, H)` for `𝒰⟨d⟩`, validated.
pub fn unitary_params(doc: &UnitaryDoc, d: usize, pointer: &str) -> Result<UnitaryTripleParams, CliError> {
    if doc.l.len() != d * d {
        return Err(CliError::schema(format!("{pointer}/l"), format!("expected {} vectors L_kl", d * d)));
    }
    let m = doc.l[0].len();
    if m == 0 {
        return Err(CliError::schema(format!("{pointer}/l/0"), "multiplicity space must be non-empty"));
    }
    let mut l = Vec::new();
    for (i, v) in doc.l.iter().enumerate() {
        if v.len() != m {
            return Err(CliError::schema(format!("{pointer}/l/{i}"), format!("expected length {m}")));
        }
        l.push(DVector::from_iterator(m, v.iter().map(cx)));
    }
    let params = UnitaryTripleParams {
        d,
        m,
        w: matrix(&doc.w, d * m, d * m, &format!("{pointer}/w"))?,
        l,
        h: matrix(&doc.h, d, d, &format!("{pointer}/h"))?,
    };
    params.validate().map_err(|e| CliError::schema(pointer, e.to_string()))?;
    Ok(params)
}

/// `d` of a presentation of `𝒰⟨d⟩`, recognised by its generator count.
pub fn unitary_d(b: &BialgebraSpec) -> Option<usize> {
    (1..=MAX_UNITARY_D).find(|&d| make_unitary_bialgebra(d).is_ok_and(|u| same_presentation(b, &u)))
}

fn is_azema_algebra(b: &BialgebraSpec) -> bool {
    let names: Vec<&str> = b.algebra().alphabet().iter().map(|g| g.name.as_str()).collect();
    names == ["x", "x*", "y"]
}

/// The generator `ψ` on `b` described by the configuration.
pub fn resolve_generator(g: &GeneratorRef, b: &Arc<BialgebraSpec>) -> Result<LinearFunctional<Word>, CliError> {
    let given = [g.builtin.is_some(), g.table.is_some(), g.unitary.is_some()].iter().filter(|x| **x).count();
    if given != 1 {
        return Err(CliError::schema("/generator", "exactly one of `builtin`, `table`, `unitary` is required"));
    }
    if let Some(name) = &g.builtin {
        return match name.as_str() {
            "azema" if is_azema_algebra(b) => Ok(azema_generator(b.algebra().clone())),
            "azema" => Err(CliError::schema("/generator/builtin", "the `azema` generator needs the Azéma algebra")),
            other => Err(CliError::schema("/generator/builtin", format!("unknown generator builtin `{other}`"))),
        };
    }
    if let Some(doc) = &g.unitary {
        let d = unitary_d(b)
            .ok_or_else(|| CliError::schema("/generator/unitary", "unitary-triple data needs the bialgebra unitary(d)"))?;
        let params = unitary_params(doc, d, "/generator/unitary")?;
        let triple = unitary_triple(&params, b).map_err(|e| CliError::schema("/generator/unitary", e.to_string()))?;
        return Ok(triple.psi);
    }
    let table = g.table.as_ref().expect("one field is present");
    let alg = b.algebra();
    let mut values: HashMap<Word, C64> = HashMap::new();
    for (i, e) in table.iter().enumerate() {
        let at = format!("/generator/table/{i}/monomial");
        let p = alg.parse(&e.monomial).map_err(|err| CliError::schema(&at, err.to_string()))?;
        let mut terms = p.iter();
        let (w, c) = match (terms.next(), terms.next()) {
            (Some((w, c)), None) => (w.clone(), *c),
            _ => return Err(CliError::schema(&at, "the normal form must be a single monomial")),
        };
        if w.is_unit() {
            return Err(CliError::schema(&at, "a generator vanishes at the unit"));
        }
        if values.insert(w, cx(&e.value) / c).is_some() {
            return Err(CliError::schema(&at, "monomial listed twice"));
        }
    }
    let value_of = |w: &Word| values.get(w).copied().unwrap_or_default();
    let mut hermitian = true;
    for (w, v) in &values {
        let star = alg.star_word(w).map_err(|e| CliError::schema("/generator/table", e.to_string()))?;
        let s: C64 = star.iter().map(|(u, c)| c * value_of(u)).sum();
        hermitian &= (s - v.conj()).norm() <= 1e-12 * v.norm().max(1.0);
    }
    Ok(LinearFunctional::new("table", hermitian, move |w: &Word| Ok(values.get(w).copied().unwrap_or_default())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calls_parse_with_nesting() {
        let c = parse_call(" grouplike( azema(2.5), 8 ) ").unwrap();
        assert_eq!(c.name, "grouplike");
        assert_eq!(c.args[1], Arg::Num(8.0));
        assert_eq!(c.args[0], Arg::Call(Call { name: "azema".into(), args: vec![Arg::Num(2.5)] }));
        assert!(parse_call("azema(2").is_err());
        assert!(parse_call("azema(2) x").is_err());
        assert!(parse_call("(2)").is_err());
    }

    #[test]
    fn builders_validate_their_arguments() {
        for bad in ["azema(0)", "unitary(0)", "unitary(1.5)", "grouplike(2, 8)", "grouplike(azema(2), 0)", "fancy(1)"] {
            assert!(matches!(build(bad, "/b"), Err(CliError::Schema { .. })), "{bad}");
        }
        assert!(matches!(build("grouplike(azema(2), 6)", "/b"), Ok(Built::GroupLike { .. })));
        assert!(matches!(build("induced_tensor(unitary(1), 4)", "/b"), Ok(Built::Tensor { .. })));
    }

    #[test]
    fn unitary_presentations_are_recognised() {
        assert_eq!(unitary_d(&make_unitary_bialgebra(2).unwrap()), Some(2));
        assert_eq!(unitary_d(&make_azema(2.0).unwrap().0), None);
    }

    #[test]
    fn tables_reproduce_the_azema_generator_on_listed_words() {
        let (az, _, psi) = make_azema(2.0).unwrap();
        let g = GeneratorRef {
            builtin: None,
            table: Some(vec![
                crate::config::TableEntry { monomial: "x x^*".into(), value: [1.0, 0.0] },
                crate::config::TableEntry { monomial: "x x^* y".into(), value: [1.0, 0.0] },
            ]),
            unitary: None,
        };
        let t = resolve_generator(&g, &az).unwrap();
        assert!(t.is_hermitian());
        for s in ["x x^*", "x x^* y", "x^* x", "y"] {
            let p = az.parse(s).unwrap();
            assert_eq!(t.eval(&p).unwrap(), psi.eval(&p).unwrap(), "{s}");
        }
        let bad = GeneratorRef { table: Some(vec![crate::config::TableEntry { monomial: "1".into(), value: [1.0, 0.0] }]), ..g };
        assert!(matches!(resolve_generator(&bad, &az), Err(CliError::Schema { .. })));
    }
}
