//! Model bialgebras (Azéma, noncommutative unitary) and the derived
//! bialgebras used by the transformation theorem: primitive and induced
//! tensor bialgebras over the counit kernel, and the group-like bialgebra
//! over the counit-one monoid, together with the connecting morphisms.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::bialg::{
    counit, BialgebraSpec, Coalgebra, LinearFunctional, StarBialgebra, Tensor2, TensorPoly,
};
use crate::error::{Error, Result};
use crate::lincomb::{c64, LinComb, C64};
use crate::ncpoly::{one, AlgebraSpec, GeneratorSymbol, NcPoly, RewriteRule, Word};

fn cone() -> C64 {
    c64(1.0, 0.0)
}

/// `ℂ⟨x, x*, y⟩ / (xy − q yx)` with y self-adjoint, oriented as
/// `yx → q⁻¹ xy`, `yx* → q x*y` (letters ordered x < x* < y).
pub fn azema_algebra(q: f64) -> Result<Arc<AlgebraSpec>> {
    if q == 0.0 || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("Azéma parameter q must be finite and non-zero, got {q}")));
    }
    let alphabet = vec![
        GeneratorSymbol { name: "x".into(), adjoint: 1 },
        GeneratorSymbol { name: "x*".into(), adjoint: 0 },
        GeneratorSymbol { name: "y".into(), adjoint: 2 },
    ];
    let rules = vec![
        RewriteRule { lhs: Word(vec![2, 0]), rhs: NcPoly::single(Word(vec![0, 2]), c64(1.0 / q, 0.0)) },
        RewriteRule { lhs: Word(vec![2, 1]), rhs: NcPoly::single(Word(vec![1, 2]), c64(q, 0.0)) },
    ];
    AlgebraSpec::new(alphabet, rules)
}

/// The Azéma generator: `ψ(M y^k) = 1` if the x-part `M` equals `xx*`, else 0.
pub fn azema_generator(alg: Arc<AlgebraSpec>) -> LinearFunctional<Word> {
    let _ = alg;
    LinearFunctional::new("psi_azema", true, |w: &Word| {
        let mut end = w.len();
        while end > 0 && w.0[end - 1] == 2 {
            end -= 1;
        }
        Ok(if w.0[..end] == [0, 1] { cone() } else { c64(0.0, 0.0) })
    })
}

fn t2(terms: &[(Vec<u16>, Vec<u16>, C64)]) -> TensorPoly {
    TensorPoly::from_terms(terms.iter().map(|(a, b, c)| ((Word(a.clone()), Word(b.clone())), *c)))
}

/// Returns `(Azéma structure, primitive/group-like structure, ψ)` on the same algebra.
pub fn make_azema(q: f64) -> Result<(Arc<BialgebraSpec>, Arc<BialgebraSpec>, LinearFunctional<Word>)> {
    let alg = azema_algebra(q)?;
    let (x, xs, y, u) = (vec![0u16], vec![1u16], vec![2u16], vec![]);
    let counits = vec![c64(0.0, 0.0), c64(0.0, 0.0), cone()];
    let azema = BialgebraSpec::new(
        format!("azema({q})"),
        alg.clone(),
        vec![
            t2(&[(x.clone(), y.clone(), cone()), (u.clone(), x.clone(), cone())]),
            t2(&[(xs.clone(), y.clone(), cone()), (u.clone(), xs.clone(), cone())]),
            t2(&[(y.clone(), y.clone(), cone())]),
        ],
        counits.clone(),
    )?;
    let primitive = BialgebraSpec::new(
        format!("azema_primitive({q})"),
        alg.clone(),
        vec![
            t2(&[(x.clone(), u.clone(), cone()), (u.clone(), x.clone(), cone())]),
            t2(&[(xs.clone(), u.clone(), cone()), (u.clone(), xs, cone())]),
            t2(&[(y.clone(), y, cone())]),
        ],
        counits,
    )?;
    Ok((azema, primitive, azema_generator(alg)))
}

/// Index of `x_{kl}` (0-based) in the unitary alphabet.
pub fn unitary_index(d: usize, k: usize, l: usize, starred: bool) -> u16 {
    ((if starred { d * d } else { 0 }) + k * d + l) as u16
}

fn unitary_name(d: usize, k: usize, l: usize) -> String {
    if d == 1 {
        "x".into()
    } else if d < 10 {
        format!("x{}{}", k + 1, l + 1)
    } else {
        format!("x{}_{}", k + 1, l + 1)
    }
}

/// `ℂ⟨x_{kl}, x*_{kl}⟩ / (xx* = 1, x*x = 1)` with the orientation
/// `x_{kd}x*_{ld} → δ_{kl} − Σ_{i<d} x_{ki}x*_{li}` and
/// `x*_{dk}x_{dl} → δ_{kl} − Σ_{i<d} x*_{ik}x_{il}`.
pub fn unitary_algebra(d: usize) -> Arc<AlgebraSpec> {
    assert!(d >= 1, "dimension must be positive");
    let mut alphabet = Vec::with_capacity(2 * d * d);
    for starred in [false, true] {
        for k in 0..d {
            for l in 0..d {
                let mut name = unitary_name(d, k, l);
                if starred {
                    name.push('*');
                }
                alphabet.push(GeneratorSymbol { name, adjoint: unitary_index(d, k, l, !starred) });
            }
        }
    }
    let idx = |k, l, s| unitary_index(d, k, l, s);
    let mut rules = Vec::new();
    let last = d - 1;
    for k in 0..d {
        for l in 0..d {
            let mut rhs = NcPoly::zero();
            if k == l {
                rhs.add_term(Word::unit(), cone());
            }
            for i in 0..last {
                rhs.add_term(Word(vec![idx(k, i, false), idx(l, i, true)]), c64(-1.0, 0.0));
            }
            rhs.prune();
            rules.push(RewriteRule { lhs: Word(vec![idx(k, last, false), idx(l, last, true)]), rhs });
        }
    }
    for k in 0..d {
        for l in 0..d {
            let mut rhs = NcPoly::zero();
            if k == l {
                rhs.add_term(Word::unit(), cone());
            }
            for i in 0..last {
                rhs.add_term(Word(vec![idx(i, k, true), idx(i, l, false)]), c64(-1.0, 0.0));
            }
            rhs.prune();
            rules.push(RewriteRule { lhs: Word(vec![idx(last, k, true), idx(last, l, false)]), rhs });
        }
    }
    AlgebraSpec::new(alphabet, rules).expect("the unitary relations are a valid rewrite system")
}

/// `𝒰⟨d⟩` with `Δx_{kl} = Σ_i x_{ki} ⊗ x_{il}` and `δx_{kl} = δ_{kl}`.
pub fn make_unitary_bialgebra(d: usize) -> Result<Arc<BialgebraSpec>> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    let alg = unitary_algebra(d);
    let mut delta = Vec::new();
    let mut eps = Vec::new();
    for starred in [false, true] {
        for k in 0..d {
            for l in 0..d {
                let terms: Vec<_> = (0..d)
                    .map(|i| {
                        (
                            vec![unitary_index(d, k, i, starred)],
                            vec![unitary_index(d, i, l, starred)],
                            cone(),
                        )
                    })
                    .collect();
                delta.push(t2(&terms));
                eps.push(if k == l { cone() } else { c64(0.0, 0.0) });
            }
        }
    }
    BialgebraSpec::new(format!("unitary({d})"), alg, delta, eps)
}

/// Kind of a structure map between bialgebras.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MorphismKind {
    AlgebraHomomorphism,
    LinearSection,
}

type KeyMap<S, T> = dyn Fn(&S) -> Result<LinComb<T>> + Send + Sync;

/// A linear map given on source basis keys.
pub struct Morphism<S, T: Ord> {
    pub name: String,
    pub kind: MorphismKind,
    map: Arc<KeyMap<S, T>>,
}

impl<S, T: Ord> Clone for Morphism<S, T> {
    fn clone(&self) -> Self {
        Self { name: self.name.clone(), kind: self.kind, map: self.map.clone() }
    }
}

impl<S: Ord + Clone, T: Ord + Clone> Morphism<S, T> {
    pub fn new<F>(name: impl Into<String>, kind: MorphismKind, f: F) -> Self
    where
        F: Fn(&S) -> Result<LinComb<T>> + Send + Sync + 'static,
    {
        Self { name: name.into(), kind, map: Arc::new(f) }
    }

    pub fn on_key(&self, k: &S) -> Result<LinComb<T>> {
        (self.map)(k)
    }

    pub fn apply(&self, p: &LinComb<S>) -> Result<LinComb<T>> {
        p.map_linear(|k| self.on_key(k))
    }
}

impl<K: Ord + Clone + Send + Sync + 'static> Morphism<K, K> {
    pub fn identity() -> Self {
        Self::new("id", MorphismKind::AlgebraHomomorphism, |k: &K| Ok(LinComb::single(k.clone(), cone())))
    }
}

pub fn apply_morphism<S: Ord + Clone, T: Ord + Clone>(m: &Morphism<S, T>, p: &LinComb<S>) -> Result<LinComb<T>> {
    m.apply(p)
}

/// `max |δ_target(m(p)) − λ_source(p)|` over the samples.
pub fn check_counit_preserving<S, T>(
    m: &Morphism<S::Key, T::Key>,
    source: &S,
    target: &T,
    samples: &[LinComb<S::Key>],
) -> Result<f64>
where
    S: Coalgebra + ?Sized,
    T: Coalgebra + ?Sized,
{
    let mut worst = 0.0f64;
    for p in samples {
        let r = counit(target, &m.apply(p)?) - counit(source, p);
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Pulls a functional back along a morphism: `ψ ∘ ϰ`.
pub fn pullback<S, T>(psi: &LinearFunctional<T>, m: &Morphism<S, T>) -> LinearFunctional<S>
where
    S: Clone + Ord + std::hash::Hash + Eq + Send + Sync + 'static,
    T: Clone + Ord + std::hash::Hash + Eq + Send + Sync + 'static,
{
    let (psi, m2) = (psi.clone(), m.clone());
    LinearFunctional::new(format!("{}∘{}", psi.name(), m.name), psi.is_hermitian(), move |k| {
        psi.eval(&m2.on_key(k)?)
    })
}

/// Which coproduct a tensor bialgebra over the counit kernel carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TensorKind {
    /// every letter primitive
    Primitive,
    /// letters carry the reduced coproduct of the base bialgebra
    Induced,
}

/// Letters are normal-form words `w ≠ 1` standing for `w − δ(w)1`; keys are
/// letter sequences of length at most the degree cap.
pub type LetterSeq = Vec<Word>;

pub struct TensorBialgebra {
    base: Arc<BialgebraSpec>,
    kind: TensorKind,
    degree_cap: usize,
    cache: RwLock<HashMap<LetterSeq, Arc<Tensor2<LetterSeq>>>>,
}

impl std::fmt::Debug for TensorBialgebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TensorBialgebra")
            .field("base", &self.base.name())
            .field("kind", &self.kind)
            .field("degree_cap", &self.degree_cap)
            .finish()
    }
}

impl TensorBialgebra {
    pub fn new(base: Arc<BialgebraSpec>, kind: TensorKind, degree_cap: usize) -> Result<Arc<Self>> {
        if degree_cap == 0 {
            return Err(Error::InvalidParameter("degree cap must be at least 1".into()));
        }
        Ok(Arc::new(Self { base, kind, degree_cap, cache: RwLock::new(HashMap::new()) }))
    }

    pub fn base(&self) -> &Arc<BialgebraSpec> {
        &self.base
    }

    pub fn kind(&self) -> TensorKind {
        self.kind
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n > self.degree_cap {
            Err(Error::DegreeCapExceeded(self.degree_cap))
        } else {
            Ok(())
        }
    }

    /// Expands an element of the counit kernel over the letter basis.
    pub fn letters_of(&self, b: &NcPoly) -> Result<LinComb<LetterSeq>> {
        let d = counit(&*self.base, b);
        if d.norm() > 1e-12 {
            return Err(Error::NotInCarrier(format!("counit {d} ≠ 0")));
        }
        Ok(LinComb::from_terms(
            b.iter().filter(|(w, _)| !w.is_unit()).map(|(w, c)| (vec![w.clone()], *c)),
        ))
    }

    /// The letter for a base-algebra expression `w` (must be a single
    /// normal-form non-unit word).
    pub fn letter(&self, text: &str) -> Result<LinComb<LetterSeq>> {
        let p = self.base.parse(text)?;
        let d = counit(&*self.base, &p);
        let shifted = p.axpy(-d, &one());
        self.letters_of(&shifted)
    }

    /// `Λ(letter w)` for the induced structure: each leg `u` of `Δ(w)` is
    /// written as `δ(u)·1 + [u]`, and `δ(w)·1⊗1` is removed.
    fn induced_letter_coproduct(&self, w: &Word) -> Result<Tensor2<LetterSeq>> {
        let dw = self.base.coproduct_word(w)?;
        let split = |u: &Word| -> Vec<(LetterSeq, C64)> {
            let mut v = vec![(vec![], self.base.counit_word(u))];
            if !u.is_unit() {
                v.push((vec![u.clone()], cone()));
            }
            v
        };
        let mut out = Tensor2::zero();
        for ((u, v), c) in dw.iter() {
            for (a, x) in split(u) {
                for (b, y) in split(v) {
                    out.add_term((a.clone(), b.clone()), c * x * y);
                }
            }
        }
        out.add_term((vec![], vec![]), -self.base.counit_word(w));
        out.prune();
        Ok(out)
    }

    fn compute_coproduct(&self, k: &LetterSeq) -> Result<Tensor2<LetterSeq>> {
        match self.kind {
            TensorKind::Primitive => {
                let n = k.len();
                if n > 20 {
                    return Err(Error::TermBudgetExceeded(1 << 20));
                }
                let mut out = Tensor2::zero();
                for mask in 0u32..(1u32 << n) {
                    let (mut l, mut r) = (Vec::new(), Vec::new());
                    for (i, w) in k.iter().enumerate() {
                        if mask & (1 << i) != 0 {
                            l.push(w.clone());
                        } else {
                            r.push(w.clone());
                        }
                    }
                    out.add_term((l, r), cone());
                }
                out.prune();
                Ok(out)
            }
            TensorKind::Induced => {
                let mut acc = Tensor2::single((vec![], vec![]), cone());
                for w in k {
                    let lw = self.induced_letter_coproduct(w)?;
                    let mut next = Tensor2::zero();
                    for ((a, b), x) in acc.iter() {
                        for ((c, d), y) in lw.iter() {
                            let mut l = a.clone();
                            l.extend_from_slice(c);
                            let mut r = b.clone();
                            r.extend_from_slice(d);
                            next.add_term((l, r), x * y);
                        }
                    }
                    next.prune();
                    acc = next;
                }
                Ok(acc)
            }
        }
    }

    /// Random letter sequences of length `1..=max_len` over letters of degree `<= letter_deg`.
    pub fn sample_elements<R: rand::Rng>(
        &self,
        rng: &mut R,
        letter_deg: usize,
        max_len: usize,
        n: usize,
    ) -> Result<Vec<LinComb<LetterSeq>>> {
        let alg = self.base.algebra();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let len = rng.gen_range(1..=max_len.min(self.degree_cap));
            let mut acc = LinComb::single(vec![], c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let mut fresh = true;
            for _ in 0..len {
                let w = loop {
                    let w = alg.random_word(rng, letter_deg.max(1));
                    if !w.is_unit() {
                        break w;
                    }
                };
                let nf = alg.normal_form_word(&w)?;
                let d = counit(&*self.base, &nf);
                let letters = self.letters_of(&nf.axpy(-d, &one()))?;
                if letters.is_zero() {
                    fresh = false;
                    break;
                }
                acc = crate::bialg::multiply(self, &acc, &letters)?;
            }
            if fresh && !acc.is_zero() {
                out.push(acc);
            }
        }
        Ok(out)
    }
}

impl Coalgebra for TensorBialgebra {
    type Key = LetterSeq;

    fn coproduct_key(&self, k: &LetterSeq) -> Result<Arc<Tensor2<LetterSeq>>> {
        if let Some(t) = self.cache.read().expect("tensor cache poisoned").get(k) {
            return Ok(t.clone());
        }
        let t = Arc::new(self.compute_coproduct(k)?);
        self.cache
            .write()
            .expect("tensor cache poisoned")
            .entry(k.clone())
            .or_insert_with(|| t.clone());
        Ok(t)
    }

    fn counit_key(&self, k: &LetterSeq) -> C64 {
        if k.is_empty() {
            cone()
        } else {
            c64(0.0, 0.0)
        }
    }

    fn format_key(&self, k: &LetterSeq) -> String {
        let alg = self.base.algebra();
        let parts: Vec<String> = k.iter().map(|w| format!("[{}]", alg.format_word(w))).collect();
        if parts.is_empty() {
            "[]".into()
        } else {
            parts.join("⊗")
        }
    }
}

impl StarBialgebra for TensorBialgebra {
    fn unit_key(&self) -> LetterSeq {
        vec![]
    }

    fn multiply_keys(&self, a: &LetterSeq, b: &LetterSeq) -> Result<LinComb<LetterSeq>> {
        self.check_len(a.len() + b.len())?;
        let mut k = a.clone();
        k.extend_from_slice(b);
        Ok(LinComb::single(k, cone()))
    }

    fn star_key(&self, a: &LetterSeq) -> Result<LinComb<LetterSeq>> {
        let alg = self.base.algebra();
        let mut acc = LinComb::single(vec![], cone());
        for w in a.iter().rev() {
            let s = alg.star_word(w)?;
            let d = counit(&*self.base, &s);
            let letters = self.letters_of(&s.axpy(-d, &one()))?;
            let mut next = LinComb::zero();
            for (k, x) in acc.iter() {
                for (l, y) in letters.iter() {
                    let mut kk = k.clone();
                    kk.extend_from_slice(l);
                    next.add_term(kk, x * y);
                }
            }
            next.prune();
            acc = next;
        }
        Ok(acc)
    }
}

/// `ϰ(b₁ ⊗ ⋯ ⊗ bₙ) = b₁⋯bₙ` from a tensor bialgebra into its base.
pub fn tensor_kappa(t: &Arc<TensorBialgebra>) -> Morphism<LetterSeq, Word> {
    let base = t.base().clone();
    Morphism::new("kappa_tensor", MorphismKind::AlgebraHomomorphism, move |k: &LetterSeq| {
        let alg = base.algebra();
        let mut acc = one();
        for w in k {
            let letter = NcPoly::from_terms([(w.clone(), cone()), (Word::unit(), -base.counit_word(w))]);
            acc = alg.multiply(&acc, &letter)?;
        }
        Ok(acc)
    })
}

/// Primitive tensor bialgebra over the counit kernel with `ϰ` into the base.
pub fn make_primitive_tensor(
    b: &Arc<BialgebraSpec>,
    degree_cap: usize,
) -> Result<(Arc<TensorBialgebra>, Morphism<LetterSeq, Word>)> {
    let t = TensorBialgebra::new(b.clone(), TensorKind::Primitive, degree_cap)?;
    let kappa = tensor_kappa(&t);
    Ok((t, kappa))
}

/// Induced tensor bialgebra with `ϰ` into the base and the identity section
/// `κ̃` onto the primitive tensor bialgebra (same letters).
pub fn make_induced_tensor(
    b: &Arc<BialgebraSpec>,
    degree_cap: usize,
) -> Result<(Arc<TensorBialgebra>, Morphism<LetterSeq, Word>, Morphism<LetterSeq, LetterSeq>)> {
    let t = TensorBialgebra::new(b.clone(), TensorKind::Induced, degree_cap)?;
    let kappa = tensor_kappa(&t);
    let mut kt = Morphism::identity();
    kt.name = "kappa_tilde_tensor".into();
    Ok((t, kappa, kt))
}

/// Group-like bialgebra `ℂℬ₁`: basis = normal-form elements of counit one.
pub struct GroupLikeBialgebra {
    base: Arc<BialgebraSpec>,
    degree_cap: usize,
}

impl std::fmt::Debug for GroupLikeBialgebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupLikeBialgebra").field("base", &self.base.name()).finish()
    }
}

/// Rounds coefficients to a fixed relative grid so that equal monoid
/// elements produced by different arithmetic orders get equal keys.
fn canonical_key(p: &NcPoly) -> NcPoly {
    let r = |x: f64| {
        if x == 0.0 {
            0.0
        } else {
            let scale = 10f64.powi(12 - x.abs().log10().ceil() as i32);
            (x * scale).round() / scale + 0.0
        }
    };
    NcPoly::from_terms(p.iter().map(|(w, c)| (w.clone(), c64(r(c.re), r(c.im)))))
}

impl GroupLikeBialgebra {
    pub fn new(base: Arc<BialgebraSpec>, degree_cap: usize) -> Result<Arc<Self>> {
        if degree_cap == 0 {
            return Err(Error::InvalidParameter("degree cap must be at least 1".into()));
        }
        Ok(Arc::new(Self { base, degree_cap }))
    }

    pub fn base(&self) -> &Arc<BialgebraSpec> {
        &self.base
    }

    /// `b̂` for `b` with `δ(b) = 1`.
    pub fn hat(&self, b: &NcPoly) -> Result<NcPoly> {
        let d = counit(&*self.base, b);
        if (d - cone()).norm() > 1e-10 {
            return Err(Error::NotInCarrier(format!("counit {d} ≠ 1")));
        }
        if let Some(w) = b.keys().find(|w| w.len() > self.degree_cap) {
            let _ = w;
            return Err(Error::DegreeCapExceeded(self.degree_cap));
        }
        Ok(canonical_key(b))
    }

    pub fn hat_elem(&self, b: &NcPoly) -> Result<LinComb<NcPoly>> {
        Ok(LinComb::single(self.hat(b)?, cone()))
    }

    pub fn unit_hat(&self) -> LinComb<NcPoly> {
        LinComb::single(one(), cone())
    }
}

impl Coalgebra for GroupLikeBialgebra {
    type Key = NcPoly;

    fn coproduct_key(&self, k: &NcPoly) -> Result<Arc<Tensor2<NcPoly>>> {
        Ok(Arc::new(Tensor2::single((k.clone(), k.clone()), cone())))
    }

    fn counit_key(&self, _k: &NcPoly) -> C64 {
        cone()
    }

    fn format_key(&self, k: &NcPoly) -> String {
        format!("hat({})", self.base.algebra().format(k))
    }
}

impl StarBialgebra for GroupLikeBialgebra {
    fn unit_key(&self) -> NcPoly {
        one()
    }

    fn multiply_keys(&self, a: &NcPoly, b: &NcPoly) -> Result<LinComb<NcPoly>> {
        let p = self.base.algebra().multiply(a, b)?;
        self.hat_elem(&p)
    }

    fn star_key(&self, a: &NcPoly) -> Result<LinComb<NcPoly>> {
        let p = self.base.algebra().involute(a)?;
        self.hat_elem(&p)
    }
}

/// How the section `ν` was realized for a letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SectionMode {
    /// ν defined on a self-adjoint basis; ν is a *-map
    SelfAdjointBasis,
    /// star of the letter is not a single word; plain lift `b̂ − 1̂` used
    PlainLift,
}

/// Section `ν: ℬ₀ → ℂℬ₁` with `ϰ∘ν = id`, on the letter `w − δ(w)1`.
///
/// The letters `b_w` and `b_w* = c·b_{w'}` span a *-invariant plane with
/// self-adjoint basis `h = b_w + b_w*`, `k = −i(b_w − b_w*)`; ν is fixed by
/// `ν(h) = (h+1)^ − 1̂` on that basis and extended linearly, which makes it
/// a *-map. On self-paired letters the phase of `b_w` is rotated instead.
pub fn grouplike_section(g: &GroupLikeBialgebra, w: &Word) -> Result<(LinComb<NcPoly>, SectionMode)> {
    let base = g.base();
    let alg = base.algebra();
    let bw = NcPoly::from_terms([(w.clone(), cone()), (Word::unit(), -base.counit_word(w))]);
    let nu_sa = |h: &NcPoly| -> Result<LinComb<NcPoly>> {
        let shifted = h.add(&one());
        Ok(g.hat_elem(&shifted)?.sub(&g.unit_hat()))
    };
    let ws = alg.star_word(w)?;
    let non_unit: Vec<(&Word, &C64)> = ws.iter().filter(|(u, _)| !u.is_unit()).collect();
    if non_unit.len() != 1 {
        return Ok((nu_sa(&bw)?, SectionMode::PlainLift));
    }
    let (wp, c) = (non_unit[0].0.clone(), *non_unit[0].1);
    let bws = alg.involute(&bw)?;
    if wp == *w {
        // b_w* = c·b_w with |c| = 1; e^{iα} b_w is self-adjoint for c = e^{2iα}
        let alpha = c.arg() / 2.0;
        let phase = C64::from_polar(1.0, alpha);
        let h = bw.scale(phase);
        return Ok((nu_sa(&h)?.scale(phase.conj()), SectionMode::SelfAdjointBasis));
    }
    // orient the pair so that h, k are built from the smaller word
    let (h, k, scale_h, scale_k) = if *w < wp {
        let h = bw.add(&bws);
        let k = bw.sub(&bws).scale(c64(0.0, -1.0));
        // b_w = (h + i k)/2
        (h, k, c64(0.5, 0.0), c64(0.0, 0.5))
    } else {
        // w is the larger word: b_w = b_{w'}*/c̄ ... expressed through the
        // pair basis of w' = the smaller word
        let bwp = NcPoly::from_terms([(wp.clone(), cone()), (Word::unit(), -base.counit_word(&wp))]);
        let bwps = alg.involute(&bwp)?;
        let h = bwp.add(&bwps);
        let k = bwp.sub(&bwps).scale(c64(0.0, -1.0));
        // b_{w'}* = (h − i k)/2 and b_{w'}* = c'·b_w where c' is the coefficient of w in nf(w'*)
        let s = alg.star_word(&wp)?;
        let cp = s.coeff(w);
        (h, k, c64(0.5, 0.0) / cp, c64(0.0, -0.5) / cp)
    };
    let out = nu_sa(&h)?.scale(scale_h).add(&nu_sa(&k)?.scale(scale_k));
    Ok((out, SectionMode::SelfAdjointBasis))
}

/// Group-like bialgebra of `b` with `ϰ(b̂) = b` and `κ̃ = 𝒯(ν)` from the
/// induced tensor bialgebra.
pub fn make_grouplike(
    b: &Arc<BialgebraSpec>,
    degree_cap: usize,
) -> Result<(Arc<GroupLikeBialgebra>, Morphism<NcPoly, Word>, Morphism<LetterSeq, NcPoly>)> {
    let g = GroupLikeBialgebra::new(b.clone(), degree_cap)?;
    let kappa = Morphism::new("kappa_grouplike", MorphismKind::AlgebraHomomorphism, |k: &NcPoly| {
        Ok(k.clone())
    });
    let g2 = g.clone();
    let kappa_tilde = Morphism::new("kappa_tilde_grouplike", MorphismKind::AlgebraHomomorphism, move |k: &LetterSeq| {
        let mut acc = g2.unit_hat();
        for w in k {
            let (nu, _) = grouplike_section(&g2, w)?;
            acc = crate::bialg::multiply(&*g2, &acc, &nu)?;
        }
        Ok(acc)
    });
    Ok((g, kappa, kappa_tilde))
}

/// Section `ν` for the tensor bialgebras: the letter itself.
pub fn tensor_section(t: &TensorBialgebra, b: &NcPoly) -> Result<LinComb<LetterSeq>> {
    t.letters_of(b)
}
