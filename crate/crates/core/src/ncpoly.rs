//! Free *-algebras over a finite alphabet modulo a terminating rewrite system.
//!
//! Words are ordered degree-lexicographically, letters by declaration order.
//! Every rewrite rule must send its left-hand side to a combination of
//! strictly smaller words, which guarantees termination.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lincomb::{c64, LinComb, C64};

/// Maximum number of rule applications in a single normalization.
pub const REWRITE_BUDGET: usize = 1_000_000;

/// A monomial: a finite sequence of generator indices (empty = unit).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    pub fn letter(i: u16) -> Self {
        Word(vec![i])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Degree-lexicographic order.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

pub type NcPoly = LinComb<Word>;

/// Polynomial consisting of the unit with coefficient one.
pub fn one() -> NcPoly {
    NcPoly::single(Word::unit(), c64(1.0, 0.0))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSymbol {
    pub name: String,
    pub adjoint: u16,
}

#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub lhs: Word,
    pub rhs: NcPoly,
}

/// Alphabet plus oriented relations. The letter order is the declaration order.
#[derive(Debug)]
pub struct AlgebraSpec {
    alphabet: Vec<GeneratorSymbol>,
    rules: Vec<RewriteRule>,
    by_first: HashMap<u16, Vec<usize>>,
    cache: RwLock<HashMap<Word, Arc<NcPoly>>>,
}

impl AlgebraSpec {
    /// Builds and validates an algebra. Rules must be strictly decreasing and
    /// the rule set must be closed under the involution.
    pub fn new(alphabet: Vec<GeneratorSymbol>, rules: Vec<RewriteRule>) -> Result<Arc<Self>> {
        let n = alphabet.len();
        if n == 0 || n > u16::MAX as usize {
            return Err(Error::InvalidSpec("alphabet must be non-empty".into()));
        }
        let mut names = std::collections::HashSet::new();
        for (i, g) in alphabet.iter().enumerate() {
            if !names.insert(g.name.clone()) {
                return Err(Error::InvalidSpec(format!("duplicate generator `{}`", g.name)));
            }
            let a = g.adjoint as usize;
            if a >= n || alphabet[a].adjoint as usize != i {
                return Err(Error::InvalidSpec(format!(
                    "adjoint pairing of `{}` is not an involution",
                    g.name
                )));
            }
        }
        let mut by_first: HashMap<u16, Vec<usize>> = HashMap::new();
        for (ri, r) in rules.iter().enumerate() {
            if r.lhs.is_empty() {
                return Err(Error::InvalidSpec("rule with empty left-hand side".into()));
            }
            for &l in r.lhs.0.iter().chain(r.rhs.keys().flat_map(|w| w.0.iter())) {
                if l as usize >= n {
                    return Err(Error::InvalidSpec(format!("letter index {l} out of range")));
                }
            }
            if let Some(w) = r.rhs.keys().find(|w| **w >= r.lhs) {
                return Err(Error::InvalidSpec(format!(
                    "rule {ri}: right-hand word {:?} is not smaller than the left-hand side {:?}",
                    w.0, r.lhs.0
                )));
            }
            by_first.entry(r.lhs.0[0]).or_default().push(ri);
        }
        let alg = Arc::new(Self {
            alphabet,
            rules,
            by_first,
            cache: RwLock::new(HashMap::new()),
        });
        for (ri, r) in alg.rules.iter().enumerate() {
            let l = alg.normal_form(&alg.star_raw(&NcPoly::single(r.lhs.clone(), c64(1.0, 0.0))))?;
            let rr = alg.normal_form(&alg.star_raw(&r.rhs))?;
            if l.sub(&rr).max_abs() > 1e-12 {
                return Err(Error::InvalidSpec(format!(
                    "rule {ri} is not compatible with the involution"
                )));
            }
        }
        Ok(alg)
    }

    pub fn alphabet(&self) -> &[GeneratorSymbol] {
        &self.alphabet
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn n_generators(&self) -> usize {
        self.alphabet.len()
    }

    pub fn adjoint(&self, letter: u16) -> u16 {
        self.alphabet[letter as usize].adjoint
    }

    pub fn generator_index(&self, name: &str) -> Option<u16> {
        self.alphabet.iter().position(|g| g.name == name).map(|i| i as u16)
    }

    pub fn gen(&self, name: &str) -> Result<NcPoly> {
        let i = self
            .generator_index(name)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))?;
        Ok(NcPoly::single(Word::letter(i), c64(1.0, 0.0)))
    }

    fn find_match(&self, w: &[u16]) -> Option<(usize, usize)> {
        for i in 0..w.len() {
            if let Some(cands) = self.by_first.get(&w[i]) {
                for &ri in cands {
                    let lhs = &self.rules[ri].lhs.0;
                    if w.len() - i >= lhs.len() && w[i..i + lhs.len()] == lhs[..] {
                        return Some((i, ri));
                    }
                }
            }
        }
        None
    }

    /// True if no rule left-hand side occurs as a factor of `w`.
    pub fn is_normal(&self, w: &Word) -> bool {
        self.find_match(&w.0).is_none()
    }

    fn nf_word(&self, w: &Word, applied: &mut usize) -> Result<Arc<NcPoly>> {
        if let Some(p) = self.cache.read().expect("normal-form cache poisoned").get(w) {
            return Ok(p.clone());
        }
        let result = match self.find_match(&w.0) {
            None => NcPoly::single(w.clone(), c64(1.0, 0.0)),
            Some((i, ri)) => {
                *applied += 1;
                if *applied > REWRITE_BUDGET {
                    return Err(Error::RewriteBudgetExceeded(REWRITE_BUDGET));
                }
                let rule = &self.rules[ri];
                let prefix = &w.0[..i];
                let suffix = &w.0[i + rule.lhs.len()..];
                let mut acc = NcPoly::zero();
                for (u, c) in rule.rhs.iter() {
                    let mut v = Vec::with_capacity(prefix.len() + u.len() + suffix.len());
                    v.extend_from_slice(prefix);
                    v.extend_from_slice(&u.0);
                    v.extend_from_slice(suffix);
                    let sub = self.nf_word(&Word(v), applied)?;
                    for (x, d) in sub.iter() {
                        acc.add_term(x.clone(), c * d);
                    }
                }
                acc.prune();
                acc
            }
        };
        let result = Arc::new(result);
        self.cache
            .write()
            .expect("normal-form cache poisoned")
            .entry(w.clone())
            .or_insert_with(|| result.clone());
        Ok(result)
    }

    /// Normal form of a single word.
    pub fn normal_form_word(&self, w: &Word) -> Result<Arc<NcPoly>> {
        let mut applied = 0;
        self.nf_word(w, &mut applied)
    }

    pub fn normal_form(&self, p: &NcPoly) -> Result<NcPoly> {
        let mut applied = 0;
        let mut out = NcPoly::zero();
        for (w, c) in p.iter() {
            for (x, d) in self.nf_word(w, &mut applied)?.iter() {
                out.add_term(x.clone(), c * d);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn multiply(&self, p: &NcPoly, q: &NcPoly) -> Result<NcPoly> {
        let mut applied = 0;
        let mut out = NcPoly::zero();
        for (u, a) in p.iter() {
            for (v, b) in q.iter() {
                for (x, d) in self.nf_word(&u.concat(v), &mut applied)?.iter() {
                    out.add_term(x.clone(), a * b * d);
                }
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn multiply_words(&self, u: &Word, v: &Word) -> Result<Arc<NcPoly>> {
        self.normal_form_word(&u.concat(v))
    }

    pub fn power(&self, p: &NcPoly, k: u32) -> Result<NcPoly> {
        let mut acc = one();
        for _ in 0..k {
            acc = self.multiply(&acc, p)?;
        }
        Ok(acc)
    }

    pub fn star_word_raw(&self, w: &Word) -> Word {
        Word(w.0.iter().rev().map(|&l| self.adjoint(l)).collect())
    }

    fn star_raw(&self, p: &NcPoly) -> NcPoly {
        NcPoly::from_terms(p.iter().map(|(w, c)| (self.star_word_raw(w), c.conj())))
    }

    /// Reverses words, stars letters, conjugates coefficients, renormalizes.
    pub fn involute(&self, p: &NcPoly) -> Result<NcPoly> {
        self.normal_form(&self.star_raw(p))
    }

    pub fn star_word(&self, w: &Word) -> Result<Arc<NcPoly>> {
        self.normal_form_word(&self.star_word_raw(w))
    }

    /// Parses an expression and returns its normal form.
    pub fn parse(&self, text: &str) -> Result<NcPoly> {
        let raw = Parser { src: text.as_bytes(), pos: 0, alg: self }.poly()?;
        self.normal_form(&raw)
    }

    fn letter_text(&self, l: u16) -> String {
        let name = &self.alphabet[l as usize].name;
        match name.strip_suffix('*') {
            Some(base) => format!("{base}^*"),
            None => name.clone(),
        }
    }

    pub fn format_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return "1".into();
        }
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < w.len() {
            let mut j = i + 1;
            while j < w.len() && w.0[j] == w.0[i] {
                j += 1;
            }
            let base = self.letter_text(w.0[i]);
            if j - i > 1 {
                parts.push(format!("{base}^{}", j - i));
            } else {
                parts.push(base);
            }
            i = j;
        }
        parts.join(" ")
    }

    /// Text form that [`AlgebraSpec::parse`] reads back to the same polynomial.
    pub fn format(&self, p: &NcPoly) -> String {
        if p.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, (w, c)) in p.iter().enumerate() {
            if k > 0 {
                s.push_str(" + ");
            }
            if c.im == 0.0 && c.re >= 0.0 {
                let _ = write!(s, "{:?}", c.re);
            } else {
                // negative reals are written as complex scalars so that every
                // term is joined with `+`
                let sign = if c.im < 0.0 { '-' } else { '+' };
                let _ = write!(s, "({:?}{}{:?}i)", c.re, sign, c.im.abs());
            }
            if !w.is_empty() {
                s.push(' ');
                s.push_str(&self.format_word(w));
            }
        }
        s
    }

    /// Uniformly random monomials of length `<= max_deg` with random complex
    /// coefficients, normalized.
    pub fn random_poly<R: Rng>(&self, rng: &mut R, max_deg: usize, n_terms: usize) -> Result<NcPoly> {
        let mut p = NcPoly::zero();
        for _ in 0..n_terms {
            let w = self.random_word(rng, max_deg);
            p.add_term(w, c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        p.prune();
        self.normal_form(&p)
    }

    pub fn random_word<R: Rng>(&self, rng: &mut R, max_deg: usize) -> Word {
        let len = rng.gen_range(0..=max_deg);
        Word((0..len).map(|_| rng.gen_range(0..self.n_generators()) as u16).collect())
    }

    /// Randomized confluence smoke test: rewrites random words with the
    /// rule order shuffled and compares with the canonical normal form.
    /// Returns the number of mismatching words.
    pub fn confluence_smoke_test<R: Rng>(&self, rng: &mut R, n_words: usize, max_deg: usize) -> Result<usize> {
        let mut mismatches = 0;
        for _ in 0..n_words {
            let w = self.random_word(rng, max_deg);
            let canonical = self.normal_form_word(&w)?;
            let mut order: Vec<usize> = (0..self.rules.len()).collect();
            order.shuffle(rng);
            let other = self.rewrite_with_order(&w, &order, rng)?;
            if canonical.sub(&other).max_abs() > 1e-10 {
                mismatches += 1;
            }
        }
        Ok(mismatches)
    }

    /// Uncached rewriting with a given rule priority and random match position.
    fn rewrite_with_order<R: Rng>(&self, w: &Word, order: &[usize], rng: &mut R) -> Result<NcPoly> {
        let mut pending: std::collections::BTreeMap<Word, C64> = std::collections::BTreeMap::new();
        pending.insert(w.clone(), c64(1.0, 0.0));
        let mut out = NcPoly::zero();
        let mut applied = 0usize;
        while let Some((word, c)) = pending.pop_last() {
            let mut matches = Vec::new();
            for i in 0..word.len() {
                for &ri in order {
                    let lhs = &self.rules[ri].lhs.0;
                    if word.len() - i >= lhs.len() && word.0[i..i + lhs.len()] == lhs[..] {
                        matches.push((i, ri));
                    }
                }
            }
            if matches.is_empty() {
                out.add_term(word, c);
                continue;
            }
            applied += 1;
            if applied > REWRITE_BUDGET {
                return Err(Error::RewriteBudgetExceeded(REWRITE_BUDGET));
            }
            let (i, ri) = *matches.choose(rng).expect("non-empty");
            let rule = &self.rules[ri];
            for (u, d) in rule.rhs.iter() {
                let mut v = word.0[..i].to_vec();
                v.extend_from_slice(&u.0);
                v.extend_from_slice(&word.0[i + rule.lhs.len()..]);
                *pending.entry(Word(v)).or_insert(c64(0.0, 0.0)) += c * d;
            }
        }
        out.prune();
        Ok(out)
    }
}

/// Normal form (free-function form of [`AlgebraSpec::normal_form`]).
pub fn normal_form(p: &NcPoly, alg: &AlgebraSpec) -> Result<NcPoly> {
    alg.normal_form(p)
}

pub fn multiply(p: &NcPoly, q: &NcPoly, alg: &AlgebraSpec) -> Result<NcPoly> {
    alg.multiply(p, q)
}

pub fn involute(p: &NcPoly, alg: &AlgebraSpec) -> Result<NcPoly> {
    alg.involute(p)
}

pub fn parse_poly(text: &str, alg: &AlgebraSpec) -> Result<NcPoly> {
    alg.parse(text)
}

/// Coefficient-wise sum `Σ coeffs[i]·polys[i]` with drop-threshold pruning.
pub fn linear_combine<K: Ord + Clone>(coeffs: &[C64], polys: &[LinComb<K>]) -> Result<LinComb<K>> {
    if coeffs.len() != polys.len() {
        return Err(Error::LengthMismatch(coeffs.len(), polys.len()));
    }
    let mut out = LinComb::zero();
    for (c, p) in coeffs.iter().zip(polys) {
        for (k, d) in p.iter() {
            out.add_term(k.clone(), c * d);
        }
    }
    out.prune();
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    alg: &'a AlgebraSpec,
}

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.pos, message: message.into() })
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn poly(&mut self) -> Result<NcPoly> {
        let mut acc = NcPoly::zero();
        self.skip_ws();
        let mut sign = 1.0;
        match self.peek() {
            Some(b'+') => self.pos += 1,
            Some(b'-') => {
                sign = -1.0;
                self.pos += 1
            }
            _ => {}
        }
        loop {
            self.skip_ws();
            let t = self.term()?;
            acc = acc.axpy(c64(sign, 0.0), &t);
            self.skip_ws();
            match self.peek() {
                None => break,
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                Some(c) => return self.err(format!("unexpected `{}`", c as char)),
            }
            self.pos += 1;
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<NcPoly> {
        let coeff = match self.peek() {
            Some(b) if b.is_ascii_digit() || b == b'.' || b == b'(' => Some(self.scalar()?),
            _ => None,
        };
        let mut word: Vec<u16> = Vec::new();
        let mut n_factors = 0;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b) if b.is_ascii_alphabetic() => {
                    let (letter, power) = self.factor()?;
                    for _ in 0..power {
                        word.push(letter);
                    }
                    n_factors += 1;
                }
                _ => break,
            }
        }
        if coeff.is_none() && n_factors == 0 {
            return match self.peek() {
                None => self.err("expected a term"),
                Some(c) => self.err(format!("unexpected `{}`", c as char)),
            };
        }
        Ok(NcPoly::single(Word(word), coeff.unwrap_or(c64(1.0, 0.0))))
    }

    fn factor(&mut self) -> Result<(u16, u32)> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
            self.pos += 1;
        }
        let mut name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        let mut power = 1u32;
        if self.peek() == Some(b'^') && self.src.get(self.pos + 1) == Some(&b'*') {
            self.pos += 2;
            name.push('*');
        }
        let letter = self
            .alg
            .generator_index(&name)
            .ok_or_else(|| Error::UnknownGenerator(name.clone()))?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let s = self.pos;
            while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                self.pos += 1;
            }
            if s == self.pos {
                return self.err("expected exponent");
            }
            power = std::str::from_utf8(&self.src[s..self.pos])
                .expect("ascii digits")
                .parse()
                .map_err(|_| Error::Parse { offset: s, message: "exponent too large".into() })?;
        }
        Ok((letter, power))
    }

    fn real(&mut self) -> Result<f64> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'+') | Some(b'-')) {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(b) if b.is_ascii_digit() || b == b'.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map_err(|_| Error::Parse {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn scalar(&mut self) -> Result<C64> {
        if self.peek() != Some(b'(') {
            return Ok(c64(self.real()?, 0.0));
        }
        self.pos += 1;
        self.skip_ws();
        let re = self.real()?;
        self.skip_ws();
        let sign = match self.peek() {
            Some(b'+') => 1.0,
            Some(b'-') => -1.0,
            _ => return self.err("expected `+` or `-` in complex scalar"),
        };
        self.pos += 1;
        self.skip_ws();
        let im = self.real()?;
        if self.peek() != Some(b'i') {
            return self.err("expected `i`");
        }
        self.pos += 1;
        self.skip_ws();
        if self.peek() != Some(b')') {
            return self.err("expected `)`");
        }
        self.pos += 1;
        Ok(c64(re, sign * im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{azema_algebra, unitary_algebra};

    fn close(a: &NcPoly, b: &NcPoly) -> bool {
        a.sub(b).max_abs() < 1e-12
    }

    #[test]
    fn azema_yx_rewrites_to_scaled_xy() {
        let a = azema_algebra(2.0).unwrap();
        let p = a.parse("y x").unwrap();
        assert!(close(&p, &a.parse("0.5 x y").unwrap()));
        let p = a.parse("x y x").unwrap();
        assert!(close(&p, &a.parse("0.5 x^2 y").unwrap()));
    }

    #[test]
    fn unit_is_normal() {
        let a = azema_algebra(2.0).unwrap();
        assert_eq!(a.normal_form(&one()).unwrap(), one());
    }

    #[test]
    fn multiply_examples() {
        let a = azema_algebra(3.0).unwrap();
        let y = a.gen("y").unwrap();
        let x = a.gen("x").unwrap();
        let p = a.multiply(&y, &x).unwrap();
        assert!(close(&p, &a.parse("0.3333333333333333 x y").unwrap()));
        assert!(close(&a.multiply(&one(), &p).unwrap(), &p));
        let u = unitary_algebra(1);
        let x = u.gen("x").unwrap();
        let xs = u.gen("x*").unwrap();
        assert!(close(&u.multiply(&x, &xs).unwrap(), &one()));
    }

    #[test]
    fn involute_example() {
        let q = 2.0;
        let a = azema_algebra(q).unwrap();
        let p = a.parse("(2+1i) x y").unwrap();
        let expected = a.parse("(4-2i) x^* y").unwrap();
        assert!(close(&a.involute(&p).unwrap(), &expected));
        assert_eq!(a.involute(&one()).unwrap(), one());
    }

    #[test]
    fn linear_combine_examples() {
        let a = azema_algebra(2.0).unwrap();
        let x = a.gen("x").unwrap();
        let y = a.gen("y").unwrap();
        assert!(linear_combine(&[c64(1.0, 0.0), c64(-1.0, 0.0)], &[x.clone(), x.clone()]).unwrap().is_zero());
        let five = linear_combine(&[c64(2.0, 0.0), c64(3.0, 0.0)], &[x.clone(), x.clone()]).unwrap();
        assert_eq!(five, x.scale(c64(5.0, 0.0)));
        let pruned = linear_combine(&[c64(1.0, 0.0), c64(1e-16, 0.0)], &[x.clone(), y]).unwrap();
        assert_eq!(pruned, x);
        assert!(matches!(
            linear_combine(&[c64(1.0, 0.0)], &[x.clone(), x]),
            Err(Error::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn parse_examples() {
        let u = unitary_algebra(1);
        assert!(close(&u.parse("x^* x + 1").unwrap(), &one().scale(c64(2.0, 0.0))));
        let a = azema_algebra(2.0).unwrap();
        let p = a.parse("(2+1i) x y^2").unwrap();
        assert_eq!(p, NcPoly::single(Word(vec![0, 2, 2]), c64(2.0, 1.0)));
        match a.parse("x ^") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(a.parse("x z"), Err(Error::UnknownGenerator(_))));
        assert!(matches!(a.parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn format_round_trips() {
        let a = azema_algebra(2.0).unwrap();
        for text in ["(2+1i) x y^2 - 3 x^* + 1", "(0.5-0.25i) x x^* y", "0"] {
            if text == "0" {
                assert_eq!(a.format(&NcPoly::zero()), "0");
                continue;
            }
            let p = a.parse(text).unwrap();
            let q = a.parse(&a.format(&p)).unwrap();
            assert!(close(&p, &q), "{text} -> {}", a.format(&p));
        }
    }

    #[test]
    fn invalid_rules_rejected() {
        let alphabet = vec![GeneratorSymbol { name: "a".into(), adjoint: 0 }];
        let bad = RewriteRule { lhs: Word(vec![0]), rhs: NcPoly::single(Word(vec![0, 0]), c64(1.0, 0.0)) };
        assert!(matches!(AlgebraSpec::new(alphabet, vec![bad]), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn shipped_orientations_pass_confluence_smoke_test() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = azema_algebra(2.0).unwrap();
        assert_eq!(a.confluence_smoke_test(&mut rng, 200, 6).unwrap(), 0);
        for d in 1..=2 {
            let u = unitary_algebra(d);
            assert_eq!(u.confluence_smoke_test(&mut rng, 200, 5).unwrap(), 0, "d = {d}");
        }
    }
}
