//! Coalgebra and *-bialgebra layer: coproducts, counits, iterated coproducts,
//! convolution of functionals and axiom checking.
//!
//! The traits are generic over the basis key so that the same machinery
//! drives presented bialgebras (keys = normal-form words), tensor bialgebras
//! (keys = sequences of letters) and group-like bialgebras (keys = monoid
//! elements).

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::{Arc, RwLock};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lincomb::{c64, LinComb, C64};
use crate::ncpoly::{AlgebraSpec, NcPoly, Word};

/// Maximum number of terms in any Sweedler expansion.
pub const TERM_BUDGET: usize = 1_000_000;

/// Element of `C ⊗ C`.
pub type Tensor2<K> = LinComb<(K, K)>;
/// Element of the n-fold tensor power, legs stored in order.
pub type Sweedler<K> = LinComb<Vec<K>>;
/// Two-fold tensor over presented bialgebras.
pub type TensorPoly = Tensor2<Word>;

pub trait Coalgebra: Send + Sync {
    type Key: Clone + Ord + Hash + Eq + Debug + Send + Sync + 'static;

    fn coproduct_key(&self, k: &Self::Key) -> Result<Arc<Tensor2<Self::Key>>>;
    fn counit_key(&self, k: &Self::Key) -> C64;
    fn format_key(&self, k: &Self::Key) -> String {
        format!("{k:?}")
    }
}

pub trait StarBialgebra: Coalgebra {
    fn unit_key(&self) -> Self::Key;
    fn multiply_keys(&self, a: &Self::Key, b: &Self::Key) -> Result<LinComb<Self::Key>>;
    fn star_key(&self, a: &Self::Key) -> Result<LinComb<Self::Key>>;
}

pub fn unit<B: StarBialgebra + ?Sized>(b: &B) -> LinComb<B::Key> {
    LinComb::single(b.unit_key(), c64(1.0, 0.0))
}

pub fn coproduct<B: Coalgebra + ?Sized>(b: &B, p: &LinComb<B::Key>) -> Result<Tensor2<B::Key>> {
    p.map_linear(|k| b.coproduct_key(k).map(|t| (*t).clone()))
}

pub fn counit<B: Coalgebra + ?Sized>(b: &B, p: &LinComb<B::Key>) -> C64 {
    p.iter().map(|(k, c)| c * b.counit_key(k)).sum()
}

pub fn multiply<B: StarBialgebra + ?Sized>(
    b: &B,
    p: &LinComb<B::Key>,
    q: &LinComb<B::Key>,
) -> Result<LinComb<B::Key>> {
    let mut out = LinComb::zero();
    for (u, a) in p.iter() {
        for (v, c) in q.iter() {
            for (w, d) in b.multiply_keys(u, v)?.iter() {
                out.add_term(w.clone(), a * c * d);
            }
        }
    }
    out.prune();
    Ok(out)
}

pub fn involute<B: StarBialgebra + ?Sized>(b: &B, p: &LinComb<B::Key>) -> Result<LinComb<B::Key>> {
    let mut out = LinComb::zero();
    for (k, c) in p.iter() {
        for (w, d) in b.star_key(k)?.iter() {
            out.add_term(w.clone(), c.conj() * d);
        }
    }
    out.prune();
    Ok(out)
}

fn check_budget(n: usize) -> Result<()> {
    if n > TERM_BUDGET {
        Err(Error::TermBudgetExceeded(TERM_BUDGET))
    } else {
        Ok(())
    }
}

/// `Δₙ` with `Δ₁ = id` and `Δₙ = (Δₙ₋₁ ⊗ id) ∘ Δ`.
pub fn iterated_coproduct<B: Coalgebra + ?Sized>(
    b: &B,
    p: &LinComb<B::Key>,
    n: usize,
) -> Result<Sweedler<B::Key>> {
    if n == 0 {
        return Err(Error::InvalidParameter("arity must be at least 1".into()));
    }
    let mut memo: HashMap<(usize, B::Key), Arc<Sweedler<B::Key>>> = HashMap::new();
    let mut out = Sweedler::zero();
    for (k, c) in p.iter() {
        let e = iterated_key(b, k, n, &mut memo)?;
        for (legs, d) in e.iter() {
            out.add_term(legs.clone(), c * d);
        }
        check_budget(out.len())?;
    }
    out.prune();
    Ok(out)
}

fn iterated_key<B: Coalgebra + ?Sized>(
    b: &B,
    k: &B::Key,
    n: usize,
    memo: &mut HashMap<(usize, B::Key), Arc<Sweedler<B::Key>>>,
) -> Result<Arc<Sweedler<B::Key>>> {
    if let Some(e) = memo.get(&(n, k.clone())) {
        return Ok(e.clone());
    }
    let result = if n == 1 {
        Sweedler::single(vec![k.clone()], c64(1.0, 0.0))
    } else {
        let mut acc = Sweedler::zero();
        for ((u, v), c) in b.coproduct_key(k)?.iter() {
            let left = iterated_key(b, u, n - 1, memo)?;
            for (legs, d) in left.iter() {
                let mut l = legs.clone();
                l.push(v.clone());
                acc.add_term(l, c * d);
            }
            check_budget(acc.len())?;
        }
        acc.prune();
        acc
    };
    let result = Arc::new(result);
    memo.insert((n, k.clone()), result.clone());
    Ok(result)
}

type Evaluator<K> = dyn Fn(&K) -> Result<C64> + Send + Sync;

/// A linear functional given by its values on basis keys, with a write-once
/// memo table.
pub struct LinearFunctional<K> {
    name: String,
    hermitian: bool,
    eval: Arc<Evaluator<K>>,
    memo: Arc<RwLock<HashMap<K, C64>>>,
}

impl<K> Clone for LinearFunctional<K> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            hermitian: self.hermitian,
            eval: self.eval.clone(),
            memo: self.memo.clone(),
        }
    }
}

impl<K> Debug for LinearFunctional<K> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearFunctional")
            .field("name", &self.name)
            .field("hermitian", &self.hermitian)
            .finish()
    }
}

impl<K: Clone + Ord + Hash + Eq + Send + Sync + 'static> LinearFunctional<K> {
    pub fn new<F>(name: impl Into<String>, hermitian: bool, f: F) -> Self
    where
        F: Fn(&K) -> Result<C64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            hermitian,
            eval: Arc::new(f),
            memo: Arc::new(RwLock::new(HashMap::new())),
        }
    }

    /// The counit of a coalgebra as a functional.
    pub fn counit_of<B: Coalgebra<Key = K> + 'static>(b: Arc<B>) -> Self {
        Self::new("counit", true, move |k| Ok(b.counit_key(k)))
    }

    pub fn zero() -> Self {
        Self::new("zero", true, |_| Ok(c64(0.0, 0.0)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn on_key(&self, k: &K) -> Result<C64> {
        if let Some(v) = self.memo.read().expect("functional memo poisoned").get(k) {
            return Ok(*v);
        }
        let v = (self.eval)(k)?;
        self.memo
            .write()
            .expect("functional memo poisoned")
            .entry(k.clone())
            .or_insert(v);
        Ok(v)
    }

    pub fn eval(&self, p: &LinComb<K>) -> Result<C64> {
        let mut s = c64(0.0, 0.0);
        for (k, c) in p.iter() {
            s += c * self.on_key(k)?;
        }
        Ok(s)
    }

    /// `s·self`.
    pub fn scaled(&self, s: C64) -> Self {
        let f = self.clone();
        Self::new(format!("{}·{s}", self.name), self.hermitian && s.im == 0.0, move |k| {
            Ok(s * f.on_key(k)?)
        })
    }

    /// `self + other`.
    pub fn plus(&self, other: &Self) -> Self {
        let (f, g) = (self.clone(), other.clone());
        Self::new(
            format!("{}+{}", self.name, other.name),
            self.hermitian && other.hermitian,
            move |k| Ok(f.on_key(k)? + g.on_key(k)?),
        )
    }
}

/// Maximum of `|f(p*) − conj f(p)|` over the given elements.
pub fn hermiticity_residual<B: StarBialgebra + ?Sized>(
    b: &B,
    f: &LinearFunctional<B::Key>,
    samples: &[LinComb<B::Key>],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in samples {
        let lhs = f.eval(&involute(b, p)?)?;
        let rhs = f.eval(p)?.conj();
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// `(f₁ ⋆ ⋯ ⋆ fₙ)(p)` as the sum over the legs of `Δₙ(p)`.
pub fn convolve_eval<B: Coalgebra + ?Sized>(
    b: &B,
    fs: &[&LinearFunctional<B::Key>],
    p: &LinComb<B::Key>,
) -> Result<C64> {
    if fs.is_empty() {
        return Err(Error::InvalidParameter("need at least one functional".into()));
    }
    let e = iterated_coproduct(b, p, fs.len())?;
    let mut s = c64(0.0, 0.0);
    for (legs, c) in e.iter() {
        let mut prod = *c;
        for (f, leg) in fs.iter().zip(legs) {
            prod *= f.on_key(leg)?;
            if prod == c64(0.0, 0.0) {
                break;
            }
        }
        s += prod;
    }
    Ok(s)
}

/// Binary convolution as a new functional: `(f ⋆ g)(k) = Σ f(k₁) g(k₂)`.
pub fn convolve<B: Coalgebra + 'static>(
    b: Arc<B>,
    f: &LinearFunctional<B::Key>,
    g: &LinearFunctional<B::Key>,
) -> LinearFunctional<B::Key> {
    let (f, g) = (f.clone(), g.clone());
    let name = format!("({}⋆{})", f.name(), g.name());
    let herm = f.is_hermitian() && g.is_hermitian();
    LinearFunctional::new(name, herm, move |k| {
        let mut s = c64(0.0, 0.0);
        for ((u, v), c) in b.coproduct_key(k)?.iter() {
            let fu = f.on_key(u)?;
            if fu != c64(0.0, 0.0) {
                s += c * fu * g.on_key(v)?;
            }
        }
        Ok(s)
    })
}

/// A *-bialgebra presented by generators and relations; coproduct and counit
/// are given on generators and extended multiplicatively.
pub struct BialgebraSpec {
    name: String,
    alg: Arc<AlgebraSpec>,
    delta_on_gen: Vec<TensorPoly>,
    counit_on_gen: Vec<C64>,
    cache: RwLock<HashMap<Word, Arc<TensorPoly>>>,
}

impl Debug for BialgebraSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BialgebraSpec").field("name", &self.name).finish()
    }
}

impl BialgebraSpec {
    pub fn new(
        name: impl Into<String>,
        alg: Arc<AlgebraSpec>,
        delta_on_gen: Vec<TensorPoly>,
        counit_on_gen: Vec<C64>,
    ) -> Result<Arc<Self>> {
        let n = alg.n_generators();
        if delta_on_gen.len() != n || counit_on_gen.len() != n {
            return Err(Error::InvalidSpec(format!(
                "coproduct/counit must be given on all {n} generators"
            )));
        }
        let mut normalized = Vec::with_capacity(n);
        for t in &delta_on_gen {
            normalized.push(normalize_tensor(&alg, t)?);
        }
        Ok(Arc::new(Self {
            name: name.into(),
            alg,
            delta_on_gen: normalized,
            counit_on_gen,
            cache: RwLock::new(HashMap::new()),
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebra(&self) -> &Arc<AlgebraSpec> {
        &self.alg
    }

    pub fn delta_on_gen(&self) -> &[TensorPoly] {
        &self.delta_on_gen
    }

    pub fn counit_on_gen(&self) -> &[C64] {
        &self.counit_on_gen
    }

    /// Coproduct of an arbitrary (not necessarily normal) word, as the
    /// product of the generator coproducts.
    pub fn coproduct_word(&self, w: &Word) -> Result<Arc<TensorPoly>> {
        if let Some(t) = self.cache.read().expect("coproduct cache poisoned").get(w) {
            return Ok(t.clone());
        }
        let t = match w.len() {
            0 => TensorPoly::single((Word::unit(), Word::unit()), c64(1.0, 0.0)),
            1 => self.delta_on_gen[w.0[0] as usize].clone(),
            n => {
                let head = self.coproduct_word(&Word(w.0[..n - 1].to_vec()))?;
                let last = &self.delta_on_gen[w.0[n - 1] as usize];
                tensor_multiply(&self.alg, &head, last)?
            }
        };
        let t = Arc::new(t);
        self.cache
            .write()
            .expect("coproduct cache poisoned")
            .entry(w.clone())
            .or_insert_with(|| t.clone());
        Ok(t)
    }

    pub fn counit_word(&self, w: &Word) -> C64 {
        w.0.iter()
            .map(|&l| self.counit_on_gen[l as usize])
            .fold(c64(1.0, 0.0), |a, b| a * b)
    }

    pub fn coproduct(&self, p: &NcPoly) -> Result<TensorPoly> {
        coproduct(self, p)
    }

    pub fn counit(&self, p: &NcPoly) -> C64 {
        counit(self, p)
    }

    pub fn parse(&self, text: &str) -> Result<NcPoly> {
        self.alg.parse(text)
    }

    /// Random normal-form elements: every generator, then random monomials
    /// (coefficient one) and random polynomials.
    pub fn sample_elements<R: Rng>(&self, rng: &mut R, max_deg: usize, n: usize) -> Result<Vec<NcPoly>> {
        let mut out: Vec<NcPoly> = (0..self.alg.n_generators())
            .map(|i| NcPoly::single(Word::letter(i as u16), c64(1.0, 0.0)))
            .collect();
        while out.len() < n {
            if out.len() % 2 == 0 {
                let w = self.alg.random_word(rng, max_deg);
                out.push(self.alg.normal_form(&NcPoly::single(w, c64(1.0, 0.0)))?);
            } else {
                out.push(self.alg.random_poly(rng, max_deg, 3)?);
            }
        }
        out.truncate(n.max(self.alg.n_generators()));
        Ok(out)
    }
}

fn normalize_tensor(alg: &AlgebraSpec, t: &TensorPoly) -> Result<TensorPoly> {
    let mut out = TensorPoly::zero();
    for ((u, v), c) in t.iter() {
        let nu = alg.normal_form_word(u)?;
        let nv = alg.normal_form_word(v)?;
        for (a, x) in nu.iter() {
            for (b, y) in nv.iter() {
                out.add_term((a.clone(), b.clone()), c * x * y);
            }
        }
    }
    out.prune();
    Ok(out)
}

/// Legwise product in `B ⊗ B`.
pub fn tensor_multiply(alg: &AlgebraSpec, s: &TensorPoly, t: &TensorPoly) -> Result<TensorPoly> {
    let mut out = TensorPoly::zero();
    for ((a, b), x) in s.iter() {
        for ((c, d), y) in t.iter() {
            let left = alg.multiply_words(a, c)?;
            let right = alg.multiply_words(b, d)?;
            for (u, p) in left.iter() {
                for (v, q) in right.iter() {
                    out.add_term((u.clone(), v.clone()), x * y * p * q);
                }
            }
        }
        check_budget(out.len())?;
    }
    out.prune();
    Ok(out)
}

impl Coalgebra for BialgebraSpec {
    type Key = Word;

    fn coproduct_key(&self, k: &Word) -> Result<Arc<TensorPoly>> {
        self.coproduct_word(k)
    }

    fn counit_key(&self, k: &Word) -> C64 {
        self.counit_word(k)
    }

    fn format_key(&self, k: &Word) -> String {
        self.alg.format_word(k)
    }
}

impl StarBialgebra for BialgebraSpec {
    fn unit_key(&self) -> Word {
        Word::unit()
    }

    fn multiply_keys(&self, a: &Word, b: &Word) -> Result<NcPoly> {
        Ok((*self.alg.multiply_words(a, b)?).clone())
    }

    fn star_key(&self, a: &Word) -> Result<NcPoly> {
        Ok((*self.alg.star_word(a)?).clone())
    }
}

/// Maximal residuals of the bialgebra laws over a sample.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct AxiomReport {
    pub coassociativity: f64,
    pub counit: f64,
    pub multiplicativity: f64,
    pub rule_compatibility: f64,
    pub involution: f64,
    pub samples: usize,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.coassociativity,
            self.counit,
            self.multiplicativity,
            self.rule_compatibility,
            self.involution,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

fn leg_map<K: Clone + Ord, F>(t: &Tensor2<K>, mut f: F) -> Result<Sweedler<K>>
where
    F: FnMut(&K, &K) -> Result<Vec<(Vec<K>, C64)>>,
{
    let mut out = Sweedler::zero();
    for ((u, v), c) in t.iter() {
        for (legs, d) in f(u, v)? {
            out.add_term(legs, c * d);
        }
    }
    out.prune();
    Ok(out)
}

/// Residuals of coassociativity, counit law, multiplicativity of Δ and δ and
/// compatibility with the involution, for any *-bialgebra.
pub fn coalgebra_law_residuals<B: StarBialgebra + ?Sized>(
    b: &B,
    samples: &[LinComb<B::Key>],
) -> Result<AxiomReport> {
    let mut rep = AxiomReport { samples: samples.len(), ..Default::default() };
    for p in samples {
        let d = coproduct(b, p)?;
        let left = leg_map(&d, |u, v| {
            Ok(b.coproduct_key(u)?
                .iter()
                .map(|((a, bb), c)| (vec![a.clone(), bb.clone(), v.clone()], *c))
                .collect())
        })?;
        let right = leg_map(&d, |u, v| {
            Ok(b.coproduct_key(v)?
                .iter()
                .map(|((a, bb), c)| (vec![u.clone(), a.clone(), bb.clone()], *c))
                .collect())
        })?;
        rep.coassociativity = rep.coassociativity.max(left.sub(&right).max_abs());

        let mut l = LinComb::zero();
        let mut r = LinComb::zero();
        for ((u, v), c) in d.iter() {
            l.add_term(v.clone(), c * b.counit_key(u));
            r.add_term(u.clone(), c * b.counit_key(v));
        }
        l.prune();
        r.prune();
        rep.counit = rep.counit.max(l.sub(p).max_abs()).max(r.sub(p).max_abs());

        let ps = involute(b, p)?;
        let dps = coproduct(b, &ps)?;
        let mut starred = Tensor2::zero();
        for ((u, v), c) in d.iter() {
            for (x, a) in b.star_key(u)?.iter() {
                for (y, bb) in b.star_key(v)?.iter() {
                    starred.add_term((x.clone(), y.clone()), c.conj() * a * bb);
                }
            }
        }
        starred.prune();
        rep.involution = rep.involution.max(dps.sub(&starred).max_abs());
        let ds = counit(b, &ps) - counit(b, p).conj();
        rep.involution = rep.involution.max(ds.norm());
    }
    for (i, p) in samples.iter().enumerate() {
        let q = &samples[(i * 7 + 3) % samples.len()];
        let pq = multiply(b, p, q)?;
        let lhs = coproduct(b, &pq)?;
        let (dp, dq) = (coproduct(b, p)?, coproduct(b, q)?);
        let mut rhs = Tensor2::zero();
        for ((a, bb), x) in dp.iter() {
            for ((c, d), y) in dq.iter() {
                for (u, s) in b.multiply_keys(a, c)?.iter() {
                    for (v, t) in b.multiply_keys(bb, d)?.iter() {
                        rhs.add_term((u.clone(), v.clone()), x * y * s * t);
                    }
                }
            }
        }
        rhs.prune();
        // products of random samples carry large coefficients; compare relatively
        let scale = lhs.max_abs().max(rhs.max_abs()).max(1.0);
        rep.multiplicativity = rep.multiplicativity.max(lhs.sub(&rhs).max_abs() / scale);
        let e = counit(b, &pq) - counit(b, p) * counit(b, q);
        rep.multiplicativity = rep.multiplicativity.max(e.norm());
    }
    Ok(rep)
}

/// Full axiom check of a presented bialgebra: the generic laws on random
/// samples of degree `<= sample_degree`, plus compatibility of Δ and δ with
/// every rewrite rule.
pub fn check_bialgebra_axioms<R: Rng>(
    b: &BialgebraSpec,
    sample_degree: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<AxiomReport> {
    let samples = b.sample_elements(rng, sample_degree, n_samples)?;
    let mut rep = coalgebra_law_residuals(b, &samples)?;
    let alg = b.algebra();
    for rule in alg.rules() {
        // Δ of the unreduced left-hand side, computed letter by letter
        let lhs = b.coproduct_word(&rule.lhs)?;
        let rhs = coproduct(b, &rule.rhs)?;
        rep.rule_compatibility = rep.rule_compatibility.max(lhs.sub(&rhs).max_abs());
        let e = b.counit_word(&rule.lhs) - counit(b, &rule.rhs);
        rep.rule_compatibility = rep.rule_compatibility.max(e.norm());
    }
    for (i, t) in b.delta_on_gen().iter().enumerate() {
        let g = NcPoly::single(Word::letter(i as u16), c64(1.0, 0.0));
        let gs = alg.involute(&g)?;
        let dgs = coproduct(b, &gs)?;
        let mut starred = TensorPoly::zero();
        for ((u, v), c) in t.iter() {
            for (x, a) in alg.star_word(u)?.iter() {
                for (y, bb) in alg.star_word(v)?.iter() {
                    starred.add_term((x.clone(), y.clone()), c.conj() * a * bb);
                }
            }
        }
        starred.prune();
        rep.involution = rep.involution.max(dgs.sub(&starred).max_abs());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{azema_generator, make_azema, make_unitary_bialgebra};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t2(b: &BialgebraSpec, terms: &[(&str, &str, C64)]) -> TensorPoly {
        let mut out = TensorPoly::zero();
        for (u, v, c) in terms {
            let pu = b.parse(u).unwrap();
            let pv = b.parse(v).unwrap();
            for (x, a) in pu.iter() {
                for (y, bb) in pv.iter() {
                    out.add_term((x.clone(), y.clone()), c * a * bb);
                }
            }
        }
        out.prune();
        out
    }

    fn one_c() -> C64 {
        c64(1.0, 0.0)
    }

    #[test]
    fn azema_coproduct_examples() {
        let q = 2.0;
        let (az, _, _) = make_azema(q).unwrap();
        let x = az.parse("x").unwrap();
        let expected = t2(&az, &[("x", "y", one_c()), ("1", "x", one_c())]);
        assert!(az.coproduct(&x).unwrap().sub(&expected).max_abs() < 1e-14);
        let unit = az.parse("1").unwrap();
        assert_eq!(az.coproduct(&unit).unwrap(), t2(&az, &[("1", "1", one_c())]));
        let xxs = az.parse("x x^*").unwrap();
        let expected = t2(
            &az,
            &[
                ("x x^*", "y^2", one_c()),
                ("x", "x^* y", c64(q, 0.0)),
                ("x^*", "x y", one_c()),
                ("1", "x x^*", one_c()),
            ],
        );
        assert!(az.coproduct(&xxs).unwrap().sub(&expected).max_abs() < 1e-13);
    }

    #[test]
    fn azema_counit_examples() {
        let (az, _, _) = make_azema(2.0).unwrap();
        assert_eq!(az.counit(&az.parse("x^2 y").unwrap()), c64(0.0, 0.0));
        assert_eq!(az.counit(&az.parse("1").unwrap()), one_c());
        assert_eq!(az.counit(&az.parse("y^3").unwrap()), one_c());
    }

    #[test]
    fn iterated_coproduct_examples() {
        let (az, _, _) = make_azema(2.0).unwrap();
        let y = az.parse("y").unwrap();
        let e = iterated_coproduct(&*az, &y, 3).unwrap();
        let yw = Word::letter(2);
        assert_eq!(e, Sweedler::single(vec![yw.clone(), yw.clone(), yw.clone()], one_c()));
        let x = az.parse("x").unwrap();
        let e = iterated_coproduct(&*az, &x, 3).unwrap();
        let (xw, u) = (Word::letter(0), Word::unit());
        let expected = Sweedler::from_terms([
            (vec![xw.clone(), yw.clone(), yw.clone()], one_c()),
            (vec![u.clone(), xw.clone(), yw.clone()], one_c()),
            (vec![u.clone(), u.clone(), xw.clone()], one_c()),
        ]);
        assert_eq!(e, expected);
        let e = iterated_coproduct(&*az, &az.parse("1").unwrap(), 5).unwrap();
        assert_eq!(e, Sweedler::single(vec![u; 5], one_c()));
        assert_eq!(iterated_coproduct(&*az, &x, 1).unwrap(), Sweedler::single(vec![xw], one_c()));
    }

    #[test]
    fn convolution_examples() {
        let q = 2.0;
        let (az, _, psi) = make_azema(q).unwrap();
        let delta = LinearFunctional::counit_of(az.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = az.algebra().random_poly(&mut rng, 4, 3).unwrap();
            let a = convolve_eval(&*az, &[&delta, &psi], &p).unwrap();
            let b = psi.eval(&p).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
        let xxs = az.parse("x x^*").unwrap();
        assert!(convolve_eval(&*az, &[&psi, &psi], &xxs).unwrap().norm() < 1e-15);
        assert_eq!(convolve_eval(&*az, &[&psi], &xxs).unwrap(), one_c());
    }

    #[test]
    fn shipped_specs_satisfy_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (az, prim, _) = make_azema(2.0).unwrap();
        let r = check_bialgebra_axioms(&az, 4, 100, &mut rng).unwrap();
        assert!(r.passes(1e-12), "{r:?}");
        let r = check_bialgebra_axioms(&prim, 4, 100, &mut rng).unwrap();
        assert!(r.passes(1e-12), "{r:?}");
        let u2 = make_unitary_bialgebra(2).unwrap();
        let r = check_bialgebra_axioms(&u2, 3, 60, &mut rng).unwrap();
        assert!(r.passes(1e-12), "{r:?}");
    }

    #[test]
    fn corrupted_coproduct_reports_counit_residual_one() {
        let (az, _, _) = make_azema(2.0).unwrap();
        let mut delta = az.delta_on_gen().to_vec();
        let x = Word::letter(0);
        delta[0] = TensorPoly::single((x.clone(), x), one_c());
        let bad = BialgebraSpec::new("bad", az.algebra().clone(), delta, az.counit_on_gen().to_vec()).unwrap();
        let r = coalgebra_law_residuals(&*bad, &[bad.parse("x").unwrap()]).unwrap();
        assert!((r.counit - 1.0).abs() < 1e-12, "{r:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = check_bialgebra_axioms(&bad, 3, 20, &mut rng).unwrap();
        assert!(r.counit >= 1.0 - 1e-12, "{r:?}");
    }

    #[test]
    fn azema_generator_is_hermitian() {
        let (az, _, _) = make_azema(0.5).unwrap();
        let psi = azema_generator(az.algebra().clone());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples = az.sample_elements(&mut rng, 4, 100).unwrap();
        assert!(hermiticity_residual(&*az, &psi, &samples).unwrap() < 1e-12);
    }
}
