//! Inner products of infinitesimal convolution products through the vacuum
//! functionals `φ_t` alone.
//!
//! Two independent evaluation orders are provided:
//! * [`gram`] expands both vectors as factorized sums over their partitions
//!   and pairs them on the common refinement;
//! * [`PairChain`] evaluates the same quantities as convolution powers of
//!   a functional on `C̄ ⊗ D`, memoized on pairs of basis keys.
//!
//! Sweeps over dyadic meshes use the second order; the first validates it.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::bialg::{
    counit, involute, iterated_coproduct, multiply, BialgebraSpec, Coalgebra, StarBialgebra, TERM_BUDGET,
};
use crate::constructions::{pullback, LetterSeq, Morphism, TensorBialgebra};
use crate::error::{Error, Result};
use crate::lincomb::{c64, LinComb, C64};
use crate::ncpoly::{NcPoly, Word};
use crate::subcoalg::{conv_exp, ConvolutionSemigroup};

pub use crate::partition::Partition;

/// Number of distinct factor evaluations past which a warning is emitted.
pub const FACTOR_WARN: usize = 100_000;

/// `Σ coeff · j_{t₀,t₁}(b₁)Ω ⊗ ⋯ ⊗ j_{tₙ₋₁,tₙ}(bₙ)Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorizedVectorSum {
    pub partition: Partition,
    pub terms: LinComb<Vec<NcPoly>>,
}

impl FactorizedVectorSum {
    pub fn new(partition: Partition, terms: LinComb<Vec<NcPoly>>) -> Result<Self> {
        if let Some((k, _)) = terms.iter().find(|(k, _)| k.len() != partition.len()) {
            return Err(Error::LengthMismatch(k.len(), partition.len()));
        }
        Ok(Self { partition, terms })
    }

    /// `j_{s,t}(b)Ω` on the single interval.
    pub fn single(s: f64, t: f64, b: NcPoly) -> Result<Self> {
        Self::new(Partition::new(vec![s, t])?, LinComb::single(vec![b], c64(1.0, 0.0)))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Re-expands every entry over a refinement using `j_{r,s} ⋆ j_{s,t} = j_{r,t}`.
    pub fn refine_to(&self, gamma: &Partition, b: &BialgebraSpec) -> Result<Self> {
        if !gamma.refines(&self.partition) {
            return Err(Error::InvalidParameter("target is not a refinement".into()));
        }
        let counts = piece_counts(&self.partition, gamma)?;
        let mut out = LinComb::zero();
        for (tuple, c) in self.terms.iter() {
            let mut acc: LinComb<Vec<NcPoly>> = LinComb::single(vec![], *c);
            for (entry, &k) in tuple.iter().zip(&counts) {
                let legs = iterated_coproduct(b, entry, k)?;
                let mut next = LinComb::zero();
                for (prefix, x) in acc.iter() {
                    for (leg, y) in legs.iter() {
                        let mut v = prefix.clone();
                        v.extend(leg.iter().map(|w| NcPoly::single(w.clone(), c64(1.0, 0.0))));
                        next.add_term(v, x * y);
                    }
                }
                next.prune();
                check_budget(next.len())?;
                acc = next;
            }
            out = out.add(&acc);
        }
        Self::new(gamma.clone(), out)
    }
}

fn check_budget(n: usize) -> Result<()> {
    if n > TERM_BUDGET {
        Err(Error::TermBudgetExceeded(TERM_BUDGET))
    } else {
        Ok(())
    }
}

/// Number of pieces of `fine` inside each interval of `coarse`.
fn piece_counts(coarse: &Partition, fine: &Partition) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; coarse.len()];
    for (a, b) in fine.intervals() {
        let i = coarse
            .locate(a, b)
            .ok_or_else(|| Error::InvalidParameter("partition is not a refinement".into()))?;
        counts[i] += 1;
    }
    Ok(counts)
}

/// Caches `ϰ` on basis keys.
struct KappaCache<K: Ord> {
    kappa: Morphism<K, Word>,
    memo: RwLock<HashMap<K, NcPoly>>,
}

impl<K: Clone + Ord + Hash + Eq> KappaCache<K> {
    fn new(kappa: Morphism<K, Word>) -> Self {
        Self { kappa, memo: RwLock::new(HashMap::new()) }
    }

    fn get(&self, k: &K) -> Result<NcPoly> {
        if let Some(p) = self.memo.read().expect("kappa memo poisoned").get(k) {
            return Ok(p.clone());
        }
        let p = self.kappa.on_key(k)?;
        self.memo.write().expect("kappa memo poisoned").insert(k.clone(), p.clone());
        Ok(p)
    }
}

/// `ϑ_α(c) = (j∘ϰ) ⋆ ⋯ ⋆ (j∘ϰ)(c)Ω`: one term per Sweedler summand of the
/// source's n-fold coproduct, each leg mapped into `ℬ`.
pub fn theta_expand<C: Coalgebra + ?Sized>(
    c: &LinComb<C::Key>,
    source: &C,
    kappa: &Morphism<C::Key, Word>,
    alpha: &Partition,
) -> Result<FactorizedVectorSum> {
    let cache = KappaCache::new(kappa.clone());
    let terms = theta_terms(c, source, &cache, alpha.len())?;
    FactorizedVectorSum::new(alpha.clone(), terms)
}

fn theta_terms<C: Coalgebra + ?Sized>(
    c: &LinComb<C::Key>,
    source: &C,
    cache: &KappaCache<C::Key>,
    n: usize,
) -> Result<LinComb<Vec<NcPoly>>> {
    let legs = iterated_coproduct(source, c, n)?;
    check_budget(legs.len())?;
    let mut out = LinComb::zero();
    for (tuple, x) in legs.iter() {
        let mapped: Vec<NcPoly> = tuple.iter().map(|k| cache.get(k)).collect::<Result<_>>()?;
        if mapped.iter().any(|p| p.is_zero()) {
            continue;
        }
        out.add_term(mapped, *x);
    }
    out.prune();
    Ok(out)
}

/// `b ∈ ℬ` as an element of the tensor bialgebra: `δ(b)·[] + letters`.
pub fn lift_to_tensor(t: &TensorBialgebra, b: &NcPoly) -> Result<LinComb<LetterSeq>> {
    let base = t.base();
    let d = counit(&**base, b);
    let shifted = b.axpy(-d, &crate::ncpoly::one());
    let mut out = t.letters_of(&shifted)?;
    out.add_term(vec![], d);
    out.prune();
    Ok(out)
}

/// `ζ_α(b)`: legs of the tensor coproduct of `b`, mapped by `κ̃` into the
/// intermediate bialgebra, each `k_{I}(κ̃ leg)Ω` replaced by `ϑ` over
/// `inner` equal pieces of `I`; flattened over the refined partition.
#[allow(clippy::too_many_arguments)]
pub fn zeta_expand<C: Coalgebra + ?Sized>(
    b: &NcPoly,
    tensor: &TensorBialgebra,
    kappa_tilde: &Morphism<LetterSeq, C::Key>,
    source: &C,
    kappa: &Morphism<C::Key, Word>,
    alpha: &Partition,
    inner: usize,
) -> Result<FactorizedVectorSum> {
    if inner == 0 {
        return Err(Error::InvalidParameter("inner mesh factor must be positive".into()));
    }
    let bt = lift_to_tensor(tensor, b)?;
    let legs = iterated_coproduct(tensor, &bt, alpha.len())?;
    check_budget(legs.len())?;
    let cache = KappaCache::new(kappa.clone());
    let mut leg_memo: HashMap<LetterSeq, LinComb<Vec<NcPoly>>> = HashMap::new();
    let mut out = LinComb::zero();
    for (tuple, x) in legs.iter() {
        let mut acc: LinComb<Vec<NcPoly>> = LinComb::single(vec![], *x);
        for leg in tuple {
            if !leg_memo.contains_key(leg) {
                let image = kappa_tilde.on_key(leg)?;
                let terms = theta_terms(&image, source, &cache, inner)?;
                leg_memo.insert(leg.clone(), terms);
            }
            let piece = &leg_memo[leg];
            let mut next = LinComb::zero();
            for (prefix, a) in acc.iter() {
                for (t, c) in piece.iter() {
                    let mut v = prefix.clone();
                    v.extend(t.iter().cloned());
                    next.add_term(v, a * c);
                }
            }
            next.prune();
            check_budget(next.len())?;
            acc = next;
            if acc.is_zero() {
                break;
            }
        }
        out = out.add(&acc);
    }
    FactorizedVectorSum::new(alpha.refine_uniform(inner)?, out)
}

/// Factor cache `φ_dt(u* v)` on words, shared across gram evaluations.
pub struct GramEngine {
    semigroup: Arc<ConvolutionSemigroup<BialgebraSpec>>,
    factors: RwLock<HashMap<(u64, Word, Word), C64>>,
    warned: std::sync::atomic::AtomicBool,
}

impl GramEngine {
    pub fn new(semigroup: Arc<ConvolutionSemigroup<BialgebraSpec>>) -> Self {
        Self { semigroup, factors: RwLock::new(HashMap::new()), warned: Default::default() }
    }

    pub fn bialgebra(&self) -> &Arc<BialgebraSpec> {
        self.semigroup.bialgebra()
    }

    pub fn semigroup(&self) -> &Arc<ConvolutionSemigroup<BialgebraSpec>> {
        &self.semigroup
    }

    /// `⟨j_dt(u)Ω, j_dt(v)Ω⟩ = φ_dt(u* v)` on words.
    pub fn factor(&self, dt: f64, u: &Word, v: &Word) -> Result<C64> {
        let key = (dt.to_bits(), u.clone(), v.clone());
        if let Some(z) = self.factors.read().expect("factor cache poisoned").get(&key) {
            return Ok(*z);
        }
        let alg = self.bialgebra().algebra();
        let us = alg.star_word(u)?;
        let prod = alg.multiply(&us, &*alg.normal_form_word(v)?)?;
        let z = self.semigroup.eval(dt, &prod)?;
        let mut f = self.factors.write().expect("factor cache poisoned");
        f.entry(key).or_insert(z);
        if f.len() > FACTOR_WARN && !self.warned.swap(true, std::sync::atomic::Ordering::Relaxed) {
            eprintln!("warning: more than {FACTOR_WARN} distinct factor evaluations");
        }
        Ok(z)
    }

    /// `⟨u, v⟩` for factorized sums over partitions of the same interval.
    pub fn gram(&self, u: &FactorizedVectorSum, v: &FactorizedVectorSum) -> Result<C64> {
        let b = self.bialgebra().clone();
        let gamma = u.partition.union(&v.partition)?;
        // τ: points common to both partitions; both sides factor over τ-intervals
        let tau_pts: Vec<f64> = u
            .partition
            .times()
            .iter()
            .copied()
            .filter(|t| v.partition.times().iter().any(|s| (s - t).abs() <= 1e-12 * (1.0 + t.abs())))
            .collect();
        let tau = Partition::new(tau_pts)?;
        let u_counts = piece_counts(&tau, &u.partition)?;
        let v_counts = piece_counts(&tau, &v.partition)?;
        let u_gamma = piece_counts(&u.partition, &gamma)?;
        let v_gamma = piece_counts(&v.partition, &gamma)?;
        let gamma_dt = gamma.increments();
        // offsets of τ-intervals in the α-, β- and γ-index ranges
        let offsets = |counts: &[usize]| -> Vec<usize> {
            let mut o = vec![0];
            for c in counts {
                o.push(o.last().unwrap() + c);
            }
            o
        };
        let (uo, vo) = (offsets(&u_counts), offsets(&v_counts));
        let tau_gamma = piece_counts(&tau, &gamma)?;
        let go = offsets(&tau_gamma);
        let mut local: HashMap<(usize, Vec<NcPoly>, Vec<NcPoly>), C64> = HashMap::new();
        let mut expansions: HashMap<(NcPoly, usize), Arc<LinComb<Vec<Word>>>> = HashMap::new();
        let mut expand = |p: &NcPoly, k: usize| -> Result<Arc<LinComb<Vec<Word>>>> {
            if let Some(e) = expansions.get(&(p.clone(), k)) {
                return Ok(e.clone());
            }
            let e = Arc::new(iterated_coproduct(&*b, p, k)?);
            expansions.insert((p.clone(), k), e.clone());
            Ok(e)
        };
        let mut total = c64(0.0, 0.0);
        for (ut, cu) in u.terms.iter() {
            for (vt, cv) in v.terms.iter() {
                let mut prod = cu.conj() * cv;
                for ti in 0..tau.len() {
                    let a = ut[uo[ti]..uo[ti + 1]].to_vec();
                    let bb = vt[vo[ti]..vo[ti + 1]].to_vec();
                    let key = (ti, a, bb);
                    let val = if let Some(z) = local.get(&key) {
                        *z
                    } else {
                        let left = concat_expansions(
                            &key.1,
                            &u_gamma[uo[ti]..uo[ti + 1]],
                            &mut expand,
                        )?;
                        let right = concat_expansions(
                            &key.2,
                            &v_gamma[vo[ti]..vo[ti + 1]],
                            &mut expand,
                        )?;
                        let dts = &gamma_dt[go[ti]..go[ti + 1]];
                        let mut z = c64(0.0, 0.0);
                        for (lw, x) in left.iter() {
                            for (rw, y) in right.iter() {
                                let mut f = x.conj() * y;
                                for ((l, r), dt) in lw.iter().zip(rw).zip(dts) {
                                    f *= self.factor(*dt, l, r)?;
                                    if f == c64(0.0, 0.0) {
                                        break;
                                    }
                                }
                                z += f;
                            }
                        }
                        local.insert(key, z);
                        z
                    };
                    prod *= val;
                    if prod == c64(0.0, 0.0) {
                        break;
                    }
                }
                total += prod;
            }
        }
        Ok(total)
    }
}

fn concat_expansions<F>(entries: &[NcPoly], counts: &[usize], expand: &mut F) -> Result<LinComb<Vec<Word>>>
where
    F: FnMut(&NcPoly, usize) -> Result<Arc<LinComb<Vec<Word>>>>,
{
    let mut acc: LinComb<Vec<Word>> = LinComb::single(vec![], c64(1.0, 0.0));
    for (e, &k) in entries.iter().zip(counts) {
        let legs = expand(e, k)?;
        let mut next = LinComb::zero();
        for (prefix, x) in acc.iter() {
            for (leg, y) in legs.iter() {
                let mut v = prefix.clone();
                v.extend(leg.iter().cloned());
                next.add_term(v, x * y);
            }
        }
        next.prune();
        check_budget(next.len())?;
        acc = next;
    }
    Ok(acc)
}

/// `gram(u, v)` with a fresh engine.
pub fn gram(
    u: &FactorizedVectorSum,
    v: &FactorizedVectorSum,
    semigroup: &Arc<ConvolutionSemigroup<BialgebraSpec>>,
) -> Result<C64> {
    GramEngine::new(semigroup.clone()).gram(u, v)
}

type PairBase<KA, KB> = dyn Fn(&KA, &KB) -> Result<C64> + Send + Sync;

/// Convolution powers `L^{⋆n}(x̄ ⊗ y)` of a sesquilinear functional on
/// `Ā ⊗ B`, memoized on `(n, x, y)`.
pub struct PairChain<A: Coalgebra, B: Coalgebra> {
    left: Arc<A>,
    right: Arc<B>,
    base: Arc<PairBase<A::Key, B::Key>>,
    base_memo: RwLock<HashMap<(A::Key, B::Key), C64>>,
    memo: RwLock<HashMap<(usize, A::Key, B::Key), C64>>,
}

impl<A: Coalgebra, B: Coalgebra> PairChain<A, B> {
    pub fn new<F>(left: Arc<A>, right: Arc<B>, base: F) -> Arc<Self>
    where
        F: Fn(&A::Key, &B::Key) -> Result<C64> + Send + Sync + 'static,
    {
        Arc::new(Self {
            left,
            right,
            base: Arc::new(base),
            base_memo: RwLock::new(HashMap::new()),
            memo: RwLock::new(HashMap::new()),
        })
    }

    pub fn base(&self, x: &A::Key, y: &B::Key) -> Result<C64> {
        let key = (x.clone(), y.clone());
        if let Some(z) = self.base_memo.read().expect("chain memo poisoned").get(&key) {
            return Ok(*z);
        }
        let z = (self.base)(x, y)?;
        self.base_memo.write().expect("chain memo poisoned").insert(key, z);
        Ok(z)
    }

    /// `L^{⋆n}(x̄ ⊗ y)` on keys.
    pub fn on_keys(&self, n: usize, x: &A::Key, y: &B::Key) -> Result<C64> {
        match n {
            0 => return Ok(self.left.counit_key(x).conj() * self.right.counit_key(y)),
            1 => return self.base(x, y),
            _ => {}
        }
        let key = (n, x.clone(), y.clone());
        if let Some(z) = self.memo.read().expect("chain memo poisoned").get(&key) {
            return Ok(*z);
        }
        let dx = self.left.coproduct_key(x)?;
        let dy = self.right.coproduct_key(y)?;
        let mut s = c64(0.0, 0.0);
        for ((x1, x2), a) in dx.iter() {
            for ((y1, y2), b) in dy.iter() {
                let last = self.base(x2, y2)?;
                if last == c64(0.0, 0.0) {
                    continue;
                }
                s += a.conj() * b * self.on_keys(n - 1, x1, y1)? * last;
            }
        }
        self.memo.write().expect("chain memo poisoned").insert(key, s);
        Ok(s)
    }

    /// `L^{⋆n}(p̄ ⊗ q)`.
    pub fn eval(&self, n: usize, p: &LinComb<A::Key>, q: &LinComb<B::Key>) -> Result<C64> {
        let mut s = c64(0.0, 0.0);
        for (x, a) in p.iter() {
            for (y, b) in q.iter() {
                s += a.conj() * b * self.on_keys(n, x, y)?;
            }
        }
        Ok(s)
    }
}

/// `φ_r(ϰ(x)* ϰ(y))` as a pair functional on `C̄ ⊗ C`.
fn source_pair<C>(
    source: &Arc<C>,
    cache: &Arc<KappaCache<C::Key>>,
    sg: &Arc<ConvolutionSemigroup<BialgebraSpec>>,
    r: f64,
) -> Arc<PairChain<C, C>>
where
    C: Coalgebra + 'static,
{
    let (cache, sg) = (cache.clone(), sg.clone());
    PairChain::new(source.clone(), source.clone(), move |x: &C::Key, y: &C::Key| {
        let alg = sg.bialgebra().algebra();
        let p = alg.multiply(&alg.involute(&cache.get(x)?)?, &cache.get(y)?)?;
        sg.eval(r, &p)
    })
}

/// `M_s(b̄ ⊗ y) = φ_s(b* ϰ(y))` on `ℬ̄ ⊗ C`.
fn mixed_pair<C>(
    source: &Arc<C>,
    cache: &Arc<KappaCache<C::Key>>,
    sg: &Arc<ConvolutionSemigroup<BialgebraSpec>>,
    s: f64,
) -> Arc<PairChain<BialgebraSpec, C>>
where
    C: Coalgebra + 'static,
{
    let (cache, sg2) = (cache.clone(), sg.clone());
    PairChain::new(sg.bialgebra().clone(), source.clone(), move |w: &Word, y: &C::Key| {
        let alg = sg2.bialgebra().algebra();
        let p = alg.multiply(&*alg.star_word(w)?, &cache.get(y)?)?;
        sg2.eval(s, &p)
    })
}

/// `⟨ϑ_α(c), ϑ_α(d)⟩` over `n` equal pieces of `[s, t]` by the pair chain.
#[allow(clippy::too_many_arguments)]
pub fn theta_gram_chain<C>(
    c: &LinComb<C::Key>,
    d: &LinComb<C::Key>,
    source: &Arc<C>,
    kappa: &Morphism<C::Key, Word>,
    semigroup: &Arc<ConvolutionSemigroup<BialgebraSpec>>,
    s: f64,
    t: f64,
    n: usize,
) -> Result<C64>
where
    C: Coalgebra + 'static,
{
    if n == 0 || t <= s {
        return Err(Error::InvalidParameter("need a non-empty interval and n ≥ 1".into()));
    }
    let cache = Arc::new(KappaCache::new(kappa.clone()));
    source_pair(source, &cache, semigroup, (t - s) / n as f64).eval(n, c, d)
}

/// One row of a convergence sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mesh: f64,
    pub norm_sq: f64,
    pub cross: C64,
    pub defect: f64,
    pub bound: f64,
    /// `‖ϑ_{αₙ}(c) − ϑ_{α_prev}(c)‖²` against the previous (coarser) row
    pub cauchy: Option<f64>,
}

/// Result of a sweep with the limit value and fitted constant.
#[derive(Clone, Debug, Serialize)]
pub struct Sweep {
    pub rows: Vec<ConvergenceRow>,
    pub limit: C64,
    pub fitted_constant: f64,
}

impl Sweep {
    /// Defects non-increasing (up to `abs_tol`) over rows with `n >= from`.
    pub fn defects_monotone_from(&self, from: usize, abs_tol: f64) -> bool {
        let d: Vec<f64> = self.rows.iter().filter(|r| r.n >= from).map(|r| r.defect).collect();
        d.windows(2).all(|w| w[1] <= w[0] + abs_tol)
    }

    pub fn defect_at(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.defect)
    }

    pub fn cauchy_monotone(&self, abs_tol: f64) -> bool {
        let c: Vec<f64> = self.rows.iter().filter_map(|r| r.cauchy).collect();
        c.windows(2).all(|w| w[1] <= w[0] + abs_tol)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("mesh,n,norm_sq,re_cross,im_cross,defect,bound\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.mesh, r.n, r.norm_sq, r.cross.re, r.cross.im, r.defect, r.bound
            ));
        }
        s
    }
}

fn fit_bounds(rows: &mut [ConvergenceRow], length: f64) -> f64 {
    let c = rows.iter().map(|r| r.defect / (r.mesh * length)).fold(0.0, f64::max);
    for r in rows.iter_mut() {
        r.bound = c * r.mesh * length;
    }
    c
}

/// Convergence sweep: `⟨ϑ_α(c), ϑ_α(d)⟩` over uniform partitions of `[s, t]`
/// into `n` pieces against `e_⋆^{(t−s)ψ∘ϰ}(c* d)`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_sweep<C>(
    c: &LinComb<C::Key>,
    d: &LinComb<C::Key>,
    source: &Arc<C>,
    kappa: &Morphism<C::Key, Word>,
    semigroup: &Arc<ConvolutionSemigroup<BialgebraSpec>>,
    s: f64,
    t: f64,
    meshes: &[usize],
) -> Result<Sweep>
where
    C: StarBialgebra + 'static,
{
    if meshes.is_empty() || meshes.windows(2).any(|w| w[1] <= w[0]) || meshes[0] == 0 {
        return Err(Error::InvalidParameter("meshes must be positive and increasing".into()));
    }
    let length = t - s;
    if length <= 0.0 {
        return Err(Error::InvalidParameter("empty interval".into()));
    }
    let psi_tilde = pullback(semigroup.generator(), kappa);
    let cd = multiply(&**source, &involute(&**source, c)?, d)?;
    let limit = conv_exp(&psi_tilde, length, &cd, &**source)?;
    let cache = Arc::new(KappaCache::new(kappa.clone()));
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    for &n in meshes {
        let r = length / n as f64;
        let chain = source_pair(source, &cache, semigroup, r);
        let norm_sq = chain.eval(n, c, c)?.re;
        let cross = chain.eval(n, c, d)?;
        let cauchy = match prev {
            Some((m, prev_norm)) if n % m == 0 => {
                let k = n / m;
                let coarse = length / m as f64;
                let inner = mixed_pair(source, &cache, semigroup, coarse / k as f64);
                let cache2 = cache.clone();
                let src = source.clone();
                let outer = PairChain::new(source.clone(), source.clone(), move |x: &C::Key, y: &C::Key| {
                    let _ = &src;
                    inner.eval(k, &cache2.get(x)?, &LinComb::single(y.clone(), c64(1.0, 0.0)))
                });
                let mixed = outer.eval(m, c, c)?;
                Some((prev_norm + norm_sq - 2.0 * mixed.re).max(0.0))
            }
            _ => None,
        };
        rows.push(ConvergenceRow {
            n,
            mesh: r,
            norm_sq,
            cross,
            defect: (cross - limit).norm(),
            bound: 0.0,
            cauchy,
        });
        prev = Some((n, norm_sq));
    }
    let fitted_constant = fit_bounds(&mut rows, length);
    Ok(Sweep { rows, limit, fitted_constant })
}

/// One row of a reverse check.
#[derive(Clone, Debug, Serialize)]
pub struct ReverseRow {
    pub n: usize,
    pub mesh: f64,
    pub value: C64,
    pub defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReverseCheck {
    pub rows: Vec<ReverseRow>,
    pub limit: C64,
    pub inner: usize,
}

impl ReverseCheck {
    pub fn defect_at(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.defect)
    }
}

/// Reverse-direction check: `|⟨ζ_α(b), j_{s,t}(d)Ω⟩ − e_⋆^{(t−s)ψ}(b* d)|` over
/// uniform partitions, with `k` on each piece approximated by `inner`
/// equal sub-pieces.
#[allow(clippy::too_many_arguments)]
pub fn reverse_check<C>(
    b: &NcPoly,
    d: &NcPoly,
    tensor: &Arc<TensorBialgebra>,
    kappa_tilde: &Morphism<LetterSeq, C::Key>,
    source: &Arc<C>,
    kappa: &Morphism<C::Key, Word>,
    semigroup: &Arc<ConvolutionSemigroup<BialgebraSpec>>,
    s: f64,
    t: f64,
    meshes: &[usize],
    inner: usize,
) -> Result<ReverseCheck>
where
    C: Coalgebra + 'static,
{
    if inner == 0 || meshes.is_empty() {
        return Err(Error::InvalidParameter("need meshes and a positive inner factor".into()));
    }
    let length = t - s;
    let base = semigroup.bialgebra().clone();
    let alg = base.algebra();
    let limit = semigroup.eval(length, &alg.multiply(&alg.involute(b)?, d)?)?;
    let bt = lift_to_tensor(tensor, b)?;
    let cache = Arc::new(KappaCache::new(kappa.clone()));
    let mut rows = Vec::new();
    for &n in meshes {
        let r = length / n as f64;
        // inner chain on C̄ ⊗ ℬ: ⟨ϑ_β(c), j(e)Ω⟩ with β = `inner` pieces of length r/inner
        let m_chain = {
            let (cache, sg) = (cache.clone(), semigroup.clone());
            PairChain::new(source.clone(), base.clone(), move |x: &C::Key, w: &Word| {
                let alg = sg.bialgebra().algebra();
                let p = alg.multiply(&alg.involute(&cache.get(x)?)?, &*alg.normal_form_word(w)?)?;
                sg.eval(r / inner as f64, &p)
            })
        };
        let kt = kappa_tilde.clone();
        let outer = PairChain::new(tensor.clone(), base.clone(), move |l: &LetterSeq, w: &Word| {
            m_chain.eval(inner, &kt.on_key(l)?, &LinComb::single(w.clone(), c64(1.0, 0.0)))
        });
        let value = outer.eval(n, &bt, d)?;
        rows.push(ReverseRow { n, mesh: r, value, defect: (value - limit).norm() });
    }
    Ok(ReverseCheck { rows, limit, inner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{make_azema, make_grouplike, make_induced_tensor};
    use crate::ncpoly::one;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn azema(q: f64) -> (Arc<BialgebraSpec>, Arc<BialgebraSpec>, Arc<ConvolutionSemigroup<BialgebraSpec>>) {
        let (az, prim, psi) = make_azema(q).unwrap();
        let sg = ConvolutionSemigroup::new(az.clone(), psi);
        (az, prim, sg)
    }

    #[test]
    fn theta_examples() {
        let (az, _, _) = azema(2.0);
        let id: Morphism<Word, Word> = Morphism::identity();
        let x = az.parse("x").unwrap();
        let th = theta_expand(&x, &*az, &id, &Partition::uniform(0.0, 1.0, 3).unwrap()).unwrap();
        let p = |s: &str| az.parse(s).unwrap();
        let expected = LinComb::from_terms([
            (vec![p("x"), p("y"), p("y")], c64(1.0, 0.0)),
            (vec![p("1"), p("x"), p("y")], c64(1.0, 0.0)),
            (vec![p("1"), p("1"), p("x")], c64(1.0, 0.0)),
        ]);
        assert_eq!(th.terms, expected);
        let (g, kappa, _) = make_grouplike(&az, 4).unwrap();
        let yh = g.hat_elem(&p("y + x")).unwrap();
        let th = theta_expand(&yh, &*g, &kappa, &Partition::uniform(0.0, 1.0, 5).unwrap()).unwrap();
        assert_eq!(th.len(), 1);
        assert!(th.terms.keys().next().unwrap().iter().all(|e| *e == p("y + x")));
    }

    #[test]
    fn singleton_gram_is_the_state() {
        let (az, _, sg) = azema(2.0);
        let b = az.parse("x^* + y").unwrap();
        let c = az.parse("x^* y + 2").unwrap();
        let u = FactorizedVectorSum::single(0.0, 0.7, b.clone()).unwrap();
        let v = FactorizedVectorSum::single(0.0, 0.7, c.clone()).unwrap();
        let g = gram(&u, &v, &sg).unwrap();
        let alg = az.algebra();
        let expected = sg.eval(0.7, &alg.multiply(&alg.involute(&b).unwrap(), &c).unwrap()).unwrap();
        assert!((g - expected).norm() < 1e-12);
    }

    #[test]
    fn grouplike_in_base_is_partition_independent() {
        let (az, _, sg) = azema(0.5);
        let y = az.parse("y").unwrap();
        let id: Morphism<Word, Word> = Morphism::identity();
        let a = theta_expand(&y, &*az, &id, &Partition::new(vec![0.0, 0.3, 1.0]).unwrap()).unwrap();
        let b = theta_expand(&y, &*az, &id, &Partition::uniform(0.0, 1.0, 4).unwrap()).unwrap();
        let g = gram(&a, &b, &sg).unwrap();
        let psi = sg.generator().eval(&az.parse("y^2").unwrap()).unwrap();
        assert!((g - psi.exp()).norm() < 1e-12);
    }

    #[test]
    fn refinement_and_hermitian_symmetry() {
        let (az, _, sg) = azema(2.0);
        let id: Morphism<Word, Word> = Morphism::identity();
        let engine = GramEngine::new(sg.clone());
        let c = az.parse("x^* + x^* y").unwrap();
        let d = az.parse("x^* x^* + y").unwrap();
        let a = theta_expand(&c, &*az, &id, &Partition::uniform(0.0, 1.0, 2).unwrap()).unwrap();
        let b = theta_expand(&d, &*az, &id, &Partition::uniform(0.0, 1.0, 3).unwrap()).unwrap();
        let g = engine.gram(&a, &b).unwrap();
        let gr = engine.gram(&b, &a).unwrap();
        assert!((g - gr.conj()).norm() < 1e-12);
        let gamma = a.partition.union(&b.partition).unwrap();
        let ar = a.refine_to(&gamma, &az).unwrap();
        assert!((engine.gram(&ar, &b).unwrap() - g).norm() < 1e-12);
        let aa = engine.gram(&a, &a).unwrap();
        assert!(aa.re >= -1e-10 && aa.im.abs() < 1e-12);
    }

    #[test]
    fn both_evaluation_orders_agree() {
        let (az, prim, sg) = azema(2.0);
        let id: Morphism<Word, Word> = Morphism::identity();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let engine = GramEngine::new(sg.clone());
        for _ in 0..10 {
            let c = prim.algebra().random_poly(&mut rng, 2, 2).unwrap();
            let d = prim.algebra().random_poly(&mut rng, 2, 2).unwrap();
            let n = rng.gen_range(1..4);
            let alpha = Partition::uniform(0.0, 1.0, n).unwrap();
            let a = theta_expand(&c, &*prim, &id, &alpha).unwrap();
            let b = theta_expand(&d, &*prim, &id, &alpha).unwrap();
            let g1 = engine.gram(&a, &b).unwrap();
            let cache = Arc::new(KappaCache::new(id.clone()));
            let chain = source_pair(&prim, &cache, &sg, 1.0 / n as f64);
            let g2 = chain.eval(n, &c, &d).unwrap();
            assert!((g1 - g2).norm() <= 1e-12 * g1.norm().max(1.0), "{g1} vs {g2}");
        }
        let _ = az;
    }

    #[test]
    fn unit_has_unit_norm() {
        let (az, prim, sg) = azema(2.0);
        let id: Morphism<Word, Word> = Morphism::identity();
        let sw = convergence_sweep(&one(), &one(), &prim, &id, &sg, 0.0, 1.0, &[2, 4, 8]).unwrap();
        for r in &sw.rows {
            assert!((r.norm_sq - 1.0).abs() < 1e-14);
            assert!(r.defect < 1e-14);
        }
        let _ = az;
    }

    #[test]
    fn azema_into_primitive_sweep_converges() {
        let (_, prim, sg) = azema(2.0);
        // source: Azéma structure, target: the primitive structure
        let (az2, _, psi) = make_azema(2.0).unwrap();
        let sg_prim = ConvolutionSemigroup::new(prim.clone(), psi);
        let id: Morphism<Word, Word> = Morphism::identity();
        let c = az2.parse("x^* x^*").unwrap();
        let sw = convergence_sweep(&c, &c, &az2, &id, &sg_prim, 0.0, 1.0, &[2, 4, 8, 16]).unwrap();
        assert!(sw.defects_monotone_from(2, 1e-13), "{:?}", sw.rows);
        assert!(sw.defect_at(16).unwrap() < sw.defect_at(2).unwrap() / 4.0);
        assert!(sw.cauchy_monotone(1e-13));
        let _ = sg;
    }

    #[test]
    fn reverse_check_small() {
        let (az, _, sg) = azema(2.0);
        let (g, kappa, kt) = make_grouplike(&az, 8).unwrap();
        let (t, _, _) = make_induced_tensor(&az, 8).unwrap();
        let one_p = one();
        let rc = reverse_check(&one_p, &one_p, &t, &kt, &g, &kappa, &sg, 0.0, 1.0, &[2, 4], 2).unwrap();
        assert!(rc.rows.iter().all(|r| r.defect < 1e-14));
        let xs = az.parse("x^*").unwrap();
        let rc = reverse_check(&xs, &xs, &t, &kt, &g, &kappa, &sg, 0.0, 1.0, &[2, 4, 8], 2).unwrap();
        assert!(rc.defect_at(8).unwrap() <= rc.defect_at(2).unwrap() + 1e-12, "{rc:?}");
    }

    #[test]
    fn reverse_check_matches_expanded_route() {
        let (az, _, sg) = azema(2.0);
        let (g, kappa, kt) = make_grouplike(&az, 8).unwrap();
        let (t, _, _) = make_induced_tensor(&az, 8).unwrap();
        let engine = GramEngine::new(sg.clone());
        for src in ["x^* x^*", "x^* y + x", "y"] {
            let b = az.parse(src).unwrap();
            let rc = reverse_check(&b, &b, &t, &kt, &g, &kappa, &sg, 0.0, 1.0, &[2, 3], 2).unwrap();
            for row in &rc.rows {
                let alpha = Partition::uniform(0.0, 1.0, row.n).unwrap();
                let z = zeta_expand(&b, &t, &kt, &*g, &kappa, &alpha, 2).unwrap();
                let e = FactorizedVectorSum::single(0.0, 1.0, b.clone()).unwrap();
                let v = engine.gram(&z, &e).unwrap();
                assert!((v - row.value).norm() < 1e-10, "{src}: {v} vs {}", row.value);
            }
        }
    }

    #[test]
    fn zeta_of_unit_is_single_term() {
        let (az, _, _) = azema(2.0);
        let (g, kappa, kt) = make_grouplike(&az, 8).unwrap();
        let (t, _, _) = make_induced_tensor(&az, 8).unwrap();
        let z = zeta_expand(&one(), &t, &kt, &*g, &kappa, &Partition::uniform(0.0, 1.0, 2).unwrap(), 2).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z.partition.len(), 4);
        let (k, c) = z.terms.iter().next().unwrap();
        assert!(k.iter().all(|e| *e == one()) && *c == c64(1.0, 0.0));
    }
}
