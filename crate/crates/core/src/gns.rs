//! Lévy triples `(ρ, η, ψ)`: conditional positivity, the GNS-type
//! construction from a generator, the `𝒰⟨d⟩` triple from `(W, L, H)`, and
//! residual checks of the defining identities.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bialg::{BialgebraSpec, LinearFunctional};
use crate::constructions::unitary_index;
use crate::error::{Error, Result};
use crate::lincomb::{c64, C64};
use crate::linalg::hermitian_eigen;
use crate::ncpoly::{one, NcPoly, Word};

/// Default relative tolerance separating the Gram null space from round-off.
pub const DEFAULT_NULL_TOL: f64 = 1e-9;
/// Least-squares residual above which `ρ` is reported as not well defined.
const RHO_TOL: f64 = 1e-6;

/// `⟨u, v⟩ = Σ conj(uₖ) vₖ`.
pub fn inner(u: &DVector<C64>, v: &DVector<C64>) -> C64 {
    u.dotc(v)
}

/// Normal-form words of degree `1..=cap`, in deg-lex order.
pub fn normal_words(alg: &crate::ncpoly::AlgebraSpec, cap: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut layer = vec![Word::unit()];
    for _ in 0..cap {
        let mut next = Vec::new();
        for w in &layer {
            for g in 0..alg.n_generators() as u16 {
                let mut v = w.0.clone();
                v.push(g);
                let v = Word(v);
                if alg.is_normal(&v) {
                    next.push(v);
                }
            }
        }
        next.sort();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The algebraic data of a triple: `ρ` and `η` on generators, extended to
/// normal words by multiplicativity and the cocycle identity
/// `η(gw) = ρ(g)η(w) + η(g)δ(w)`.
pub struct TripleCore {
    bialgebra: Arc<BialgebraSpec>,
    k_dim: usize,
    rho_on_gen: Vec<DMatrix<C64>>,
    eta_on_gen: Vec<DVector<C64>>,
    eta_memo: RwLock<HashMap<Word, DVector<C64>>>,
}

impl TripleCore {
    pub fn new(
        bialgebra: Arc<BialgebraSpec>,
        k_dim: usize,
        rho_on_gen: Vec<DMatrix<C64>>,
        eta_on_gen: Vec<DVector<C64>>,
    ) -> Result<Self> {
        let n = bialgebra.algebra().n_generators();
        if rho_on_gen.len() != n || eta_on_gen.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rho_on_gen.len().min(eta_on_gen.len()) });
        }
        for (r, e) in rho_on_gen.iter().zip(&eta_on_gen) {
            if r.nrows() != k_dim || r.ncols() != k_dim || e.len() != k_dim {
                return Err(Error::DimensionMismatch { expected: k_dim, got: e.len() });
            }
        }
        Ok(Self { bialgebra, k_dim, rho_on_gen, eta_on_gen, eta_memo: RwLock::new(HashMap::new()) })
    }

    pub fn k_dim(&self) -> usize {
        self.k_dim
    }

    pub fn bialgebra(&self) -> &Arc<BialgebraSpec> {
        &self.bialgebra
    }

    pub fn rho_on_gen(&self) -> &[DMatrix<C64>] {
        &self.rho_on_gen
    }

    pub fn eta_on_gen(&self) -> &[DVector<C64>] {
        &self.eta_on_gen
    }

    /// `ρ(w)` for a word (product of generator images).
    pub fn rho_word(&self, w: &Word) -> DMatrix<C64> {
        let mut m = DMatrix::identity(self.k_dim, self.k_dim);
        for &g in &w.0 {
            m *= &self.rho_on_gen[g as usize];
        }
        m
    }

    pub fn rho(&self, p: &NcPoly) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.k_dim, self.k_dim);
        for (w, c) in p.iter() {
            m += self.rho_word(w) * *c;
        }
        m
    }

    /// `η(w)` for a word, by peeling off the first letter.
    pub fn eta_word(&self, w: &Word) -> DVector<C64> {
        if w.is_unit() {
            return DVector::zeros(self.k_dim);
        }
        if let Some(v) = self.eta_memo.read().expect("eta memo poisoned").get(w) {
            return v.clone();
        }
        let g = w.0[0] as usize;
        let rest = Word(w.0[1..].to_vec());
        let v = &self.rho_on_gen[g] * self.eta_word(&rest)
            + &self.eta_on_gen[g] * self.bialgebra.counit_word(&rest);
        self.eta_memo.write().expect("eta memo poisoned").insert(w.clone(), v.clone());
        v
    }

    /// `η(p)`; equals `η(p − δ(p)1)` since `η(1) = 0`.
    pub fn eta(&self, p: &NcPoly) -> DVector<C64> {
        let mut v = DVector::zeros(self.k_dim);
        for (w, c) in p.iter() {
            v += self.eta_word(w) * *c;
        }
        v
    }
}

/// A Lévy triple on a presented bialgebra.
#[derive(Clone)]
pub struct LevyTriple {
    pub core: Arc<TripleCore>,
    pub psi: LinearFunctional<Word>,
    pub tol_used: f64,
}

impl std::fmt::Debug for LevyTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LevyTriple")
            .field("k_dim", &self.core.k_dim)
            .field("psi", &self.psi.name())
            .field("tol_used", &self.tol_used)
            .finish()
    }
}

/// JSON-friendly form: complex numbers as `[re, im]`.
#[derive(Clone, Debug, Serialize)]
pub struct LevyTripleRecord {
    pub k_dim: usize,
    pub generators: Vec<String>,
    pub rho_on_gen: Vec<Vec<Vec<[f64; 2]>>>,
    pub eta_on_gen: Vec<Vec<[f64; 2]>>,
    pub psi_on_gen: Vec<[f64; 2]>,
    pub tol_used: f64,
}

impl LevyTriple {
    pub fn k_dim(&self) -> usize {
        self.core.k_dim
    }

    pub fn eta(&self, p: &NcPoly) -> DVector<C64> {
        self.core.eta(p)
    }

    pub fn rho(&self, p: &NcPoly) -> DMatrix<C64> {
        self.core.rho(p)
    }

    pub fn record(&self) -> Result<LevyTripleRecord> {
        let alg = self.core.bialgebra.algebra();
        let pair = |z: &C64| [z.re, z.im];
        let mut psi_on_gen = Vec::new();
        for g in 0..alg.n_generators() {
            psi_on_gen.push(pair(&self.psi.on_key(&Word::letter(g as u16))?));
        }
        Ok(LevyTripleRecord {
            k_dim: self.core.k_dim,
            generators: alg.alphabet().iter().map(|g| g.name.clone()).collect(),
            rho_on_gen: self
                .core
                .rho_on_gen
                .iter()
                .map(|m| m.row_iter().map(|r| r.iter().map(pair).collect()).collect())
                .collect(),
            eta_on_gen: self.core.eta_on_gen.iter().map(|v| v.iter().map(pair).collect()).collect(),
            psi_on_gen,
            tol_used: self.tol_used,
        })
    }
}

/// Gram data of `ψ` on the counit kernel.
#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub basis_size: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub hermiticity_residual: f64,
    pub passes: bool,
}

struct GramData {
    words: Vec<Word>,
    gram: DMatrix<C64>,
    herm: f64,
}

fn shifted(b: &BialgebraSpec, w: &Word) -> NcPoly {
    NcPoly::from_terms([(w.clone(), c64(1.0, 0.0)), (Word::unit(), -b.counit_word(w))])
}

fn gram_data(psi: &LinearFunctional<Word>, b: &BialgebraSpec, cap: usize) -> Result<GramData> {
    let alg = b.algebra();
    let words = normal_words(alg, cap);
    let shifted_words: Vec<NcPoly> = words.iter().map(|w| shifted(b, w)).collect();
    let stars: Vec<NcPoly> = shifted_words.iter().map(|p| alg.involute(p)).collect::<Result<_>>()?;
    let n = words.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = psi.eval(&alg.multiply(&stars[i], &shifted_words[j])?)?;
        }
    }
    let mut herm = 0.0f64;
    for (w, ws) in words.iter().zip(&stars) {
        let _ = w;
        let p = alg.involute(ws)?;
        herm = herm.max((psi.eval(ws)? - psi.eval(&p)?.conj()).norm());
    }
    herm = herm.max((gram.adjoint() - &gram).camax());
    Ok(GramData { words, gram, herm })
}

/// Minimal eigenvalue of `G_{vw} = ψ(v*w)` over the counit-kernel basis of
/// degree `<= degree_cap`, and the hermiticity residual of `ψ`.
pub fn check_conditional_positivity(
    psi: &LinearFunctional<Word>,
    b: &BialgebraSpec,
    degree_cap: usize,
) -> Result<PositivityReport> {
    let g = gram_data(psi, b, degree_cap)?;
    let (vals, _) = hermitian_eigen(&g.gram);
    let (min, max) = if vals.is_empty() { (0.0, 0.0) } else { (vals.min(), vals.max()) };
    let scale = max.abs().max(1.0);
    Ok(PositivityReport {
        basis_size: g.words.len(),
        min_eigenvalue: min,
        max_eigenvalue: max,
        hermiticity_residual: g.herm,
        passes: min >= -1e-10 * scale && g.herm <= 1e-10 * scale,
    })
}

/// GNS-type construction: `K` is the range of the Gram matrix, `η` the
/// eigen-coordinates (gauge: descending eigenvalues, first non-zero entry of
/// each coordinate real positive along the basis order), `ρ(g)` the least
/// squares solution of `ρ(g)η(w) = η(gw) − η(g)δ(w)` over words of degree `< cap`.
pub fn gns_construct(
    psi: &LinearFunctional<Word>,
    b: &Arc<BialgebraSpec>,
    degree_cap: usize,
    null_tol: f64,
) -> Result<LevyTriple> {
    if degree_cap == 0 {
        return Err(Error::InvalidParameter("degree cap must be at least 1".into()));
    }
    let alg = b.algebra();
    let g = gram_data(psi, b, degree_cap)?;
    let (vals, vecs) = hermitian_eigen(&g.gram);
    let n = g.words.len();
    let max = if vals.is_empty() { 0.0 } else { vals.max() };
    let min = if vals.is_empty() { 0.0 } else { vals.min() };
    if min < -1e-9 * max.abs().max(1.0) || g.herm > 1e-9 * max.abs().max(1.0) {
        return Err(Error::PositivityViolation(min.min(-g.herm)));
    }
    let mut order: Vec<usize> = (0..n).filter(|&i| max > 0.0 && vals[i] > null_tol * max).collect();
    order.sort_by(|&a, &c| vals[c].total_cmp(&vals[a]).then(a.cmp(&c)));
    let k = order.len();
    // η(v_i)_k = √λ_k conj(U_{ik}), phase-fixed
    let mut eta_basis = DMatrix::<C64>::zeros(k, n);
    for (row, &col) in order.iter().enumerate() {
        let s = vals[col].sqrt();
        let mut entries: Vec<C64> = (0..n).map(|i| vecs[(i, col)].conj() * s).collect();
        let big = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(first) = entries.iter().find(|z| z.norm() > 1e-8 * big).copied() {
            let phase = first.conj() / first.norm();
            for e in entries.iter_mut() {
                *e *= phase;
            }
        }
        for (i, e) in entries.into_iter().enumerate() {
            eta_basis[(row, i)] = e;
        }
    }
    let index: HashMap<&Word, usize> = g.words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let eta_of = |p: &NcPoly| -> Result<DVector<C64>> {
        let mut v = DVector::zeros(k);
        for (w, c) in p.iter() {
            if w.is_unit() {
                continue;
            }
            let i = *index
                .get(w)
                .ok_or_else(|| Error::DegreeCapExceeded(degree_cap))?;
            v += eta_basis.column(i) * *c;
        }
        Ok(v)
    };
    let lower: Vec<&Word> = g.words.iter().filter(|w| w.len() < degree_cap).collect();
    let mut rho_on_gen = Vec::new();
    let mut eta_on_gen = Vec::new();
    let mut worst = 0.0f64;
    for gen in 0..alg.n_generators() as u16 {
        let gw = Word::letter(gen);
        let eta_g = eta_of(&alg.normal_form(&NcPoly::single(gw.clone(), c64(1.0, 0.0)))?)?;
        eta_on_gen.push(eta_g.clone());
        if k == 0 || lower.is_empty() {
            rho_on_gen.push(DMatrix::zeros(k, k));
            continue;
        }
        let mut e = DMatrix::<C64>::zeros(k, lower.len());
        let mut f = DMatrix::<C64>::zeros(k, lower.len());
        for (j, w) in lower.iter().enumerate() {
            e.set_column(j, &eta_basis.column(index[*w]));
            let prod = alg.multiply_words(&gw, w)?;
            // cocycle: ρ(g)η(w) = η(gw) − η(g)δ(w)
            f.set_column(j, &(eta_of(&prod)? - &eta_g * b.counit_word(w)));
        }
        let svd = e.clone().svd(true, true);
        let pinv = svd
            .pseudo_inverse(1e-10 * e.camax().max(1e-300))
            .map_err(|m| Error::InvalidSpec(m.to_string()))?;
        let r = &f * pinv;
        let res = (&r * &e - &f).camax();
        worst = worst.max(res);
        rho_on_gen.push(r);
    }
    if worst > RHO_TOL {
        return Err(Error::RankDeficiency(worst));
    }
    let core = TripleCore::new(b.clone(), k, rho_on_gen, eta_on_gen)?;
    Ok(LevyTriple { core: Arc::new(core), psi: psi.clone(), tol_used: null_tol })
}

/// Parameters of a triple on `𝒰⟨d⟩`: `W` unitary on `ℂ^d ⊗ ℂ^m` (block
/// `(k, l)` = rows `k·m..`, columns `l·m..`), `L_{kl} ∈ ℂ^m`, `H = H*`.
#[derive(Clone, Debug)]
pub struct UnitaryTripleParams {
    pub d: usize,
    pub m: usize,
    pub w: DMatrix<C64>,
    pub l: Vec<DVector<C64>>,
    pub h: DMatrix<C64>,
}

impl UnitaryTripleParams {
    pub fn w_block(&self, k: usize, l: usize) -> DMatrix<C64> {
        self.w.view((k * self.m, l * self.m), (self.m, self.m)).into_owned()
    }

    pub fn l_entry(&self, k: usize, l: usize) -> &DVector<C64> {
        &self.l[k * self.d + l]
    }

    /// `(L*L)_{kl} = Σᵢ ⟨L_{ik}, L_{il}⟩`.
    pub fn lstar_l(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.d, self.d, |k, l| {
            (0..self.d).map(|i| inner(self.l_entry(i, k), self.l_entry(i, l))).sum()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (d, m) = (self.d, self.m);
        if d == 0 {
            return Err(Error::InvalidParameter("d must be positive".into()));
        }
        if self.w.nrows() != d * m || self.w.ncols() != d * m {
            return Err(Error::InvalidParameter(format!("W must be {0}×{0}", d * m)));
        }
        if self.l.len() != d * d || self.l.iter().any(|v| v.len() != m) {
            return Err(Error::InvalidParameter(format!("L must have {} entries of length {m}", d * d)));
        }
        if self.h.nrows() != d || self.h.ncols() != d {
            return Err(Error::InvalidParameter(format!("H must be {d}×{d}")));
        }
        let id = DMatrix::<C64>::identity(d * m, d * m);
        let u = (self.w.adjoint() * &self.w - id).camax();
        if u > 1e-12 {
            return Err(Error::InvalidParameter(format!("W is not unitary (‖W*W − I‖ = {u:e})")));
        }
        let hh = (self.h.adjoint() - &self.h).camax();
        if hh > 1e-12 {
            return Err(Error::InvalidParameter(format!("H is not self-adjoint ({hh:e})")));
        }
        Ok(())
    }
}

/// The triple `ρ(x_{kl}) = W_{kl}`, `η(x_{kl}) = L_{kl}`,
/// `ψ(x_{kl}) = −½(L*L)_{kl} + iH_{kl}`; the starred generators follow from
/// the unitarity relations (`η(x*_{kl}) = −Σᵢ W_{il}* L_{ik}`) and `ψ` is
/// extended to words by `ψ(gw) = δ(g)ψ(w) + ψ(g)δ(w) + ⟨η(g*), η(w)⟩`.
pub fn unitary_triple(params: &UnitaryTripleParams, b: &Arc<BialgebraSpec>) -> Result<LevyTriple> {
    params.validate()?;
    let (d, m) = (params.d, params.m);
    if b.algebra().n_generators() != 2 * d * d {
        return Err(Error::InvalidParameter(format!("bialgebra is not 𝒰⟨{d}⟩")));
    }
    let n = 2 * d * d;
    let mut rho = vec![DMatrix::zeros(m, m); n];
    let mut eta = vec![DVector::zeros(m); n];
    let mut psi_gen = vec![c64(0.0, 0.0); n];
    let ll = params.lstar_l();
    for k in 0..d {
        for l in 0..d {
            let i = unitary_index(d, k, l, false) as usize;
            let is = unitary_index(d, k, l, true) as usize;
            rho[i] = params.w_block(k, l);
            rho[is] = params.w_block(k, l).adjoint();
            eta[i] = params.l_entry(k, l).clone();
            let mut v = DVector::zeros(m);
            for a in 0..d {
                v -= params.w_block(a, l).adjoint() * params.l_entry(a, k);
            }
            eta[is] = v;
            let z = ll[(k, l)] * -0.5 + c64(0.0, 1.0) * params.h[(k, l)];
            psi_gen[i] = z;
            psi_gen[is] = z.conj();
        }
    }
    let core = Arc::new(TripleCore::new(b.clone(), m, rho, eta)?);
    let psi = recursive_generator(core.clone(), psi_gen);
    Ok(LevyTriple { core, psi, tol_used: 0.0 })
}

/// `ψ` on words from its generator values and `(ρ, η)`, recursively:
/// `ψ(ga) = δ(g)ψ(a) + ψ(g)δ(a) + ⟨η(g*), η(a)⟩`.
pub fn recursive_generator(core: Arc<TripleCore>, psi_gen: Vec<C64>) -> LinearFunctional<Word> {
    fn value(core: &TripleCore, psi_gen: &[C64], memo: &RwLock<HashMap<Word, C64>>, w: &Word) -> C64 {
        if w.is_unit() {
            return c64(0.0, 0.0);
        }
        if let Some(v) = memo.read().expect("psi memo poisoned").get(w) {
            return *v;
        }
        let b = core.bialgebra();
        let g = w.0[0];
        let rest = Word(w.0[1..].to_vec());
        let v = if rest.is_unit() {
            psi_gen[g as usize]
        } else {
            let gs = b.algebra().adjoint(g);
            b.counit_word(&Word::letter(g)) * value(core, psi_gen, memo, &rest)
                + psi_gen[g as usize] * b.counit_word(&rest)
                + inner(&core.eta_word(&Word::letter(gs)), &core.eta_word(&rest))
        };
        memo.write().expect("psi memo poisoned").insert(w.clone(), v);
        v
    }
    let memo = Arc::new(RwLock::new(HashMap::new()));
    LinearFunctional::new("psi_triple", true, move |w: &Word| Ok(value(&core, &psi_gen, &memo, w)))
}

/// The Azéma triple: `K = ℂ`, `η(x*) = 1`, `η(x) = η(y) = 0`, `ρ(x) = ρ(x*) = 0`, `ρ(y) = q`.
pub fn azema_triple(b: &Arc<BialgebraSpec>, q: f64, psi: LinearFunctional<Word>) -> Result<LevyTriple> {
    let z = DMatrix::from_element(1, 1, c64(0.0, 0.0));
    let rho = vec![z.clone(), z, DMatrix::from_element(1, 1, c64(q, 0.0))];
    let eta = vec![
        DVector::from_element(1, c64(0.0, 0.0)),
        DVector::from_element(1, c64(1.0, 0.0)),
        DVector::from_element(1, c64(0.0, 0.0)),
    ];
    let core = TripleCore::new(b.clone(), 1, rho, eta)?;
    Ok(LevyTriple { core: Arc::new(core), psi, tol_used: 0.0 })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TripleResiduals {
    pub generator_identity: f64,
    pub cocycle: f64,
    pub rho_multiplicativity: f64,
    pub rho_star: f64,
    pub samples: usize,
}

impl TripleResiduals {
    pub fn max(&self) -> f64 {
        self.generator_identity.max(self.cocycle).max(self.rho_multiplicativity).max(self.rho_star)
    }
}

/// Residuals of `δ(a)ψ(c) − ψ(ac) + ψ(a)δ(c) = −⟨η(a*), η(c)⟩`, the cocycle
/// identity, multiplicativity and *-compatibility of `ρ` on random pairs of
/// normal words of degree `<= 3`.
pub fn levy_triple_residuals(t: &LevyTriple, n_samples: usize, seed: u64) -> Result<TripleResiduals> {
    let b = t.core.bialgebra().clone();
    let alg = b.algebra().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = TripleResiduals { samples: n_samples, ..Default::default() };
    let sample = |rng: &mut ChaCha8Rng| -> Result<NcPoly> {
        if rng.gen_bool(0.5) {
            let w = alg.random_word(rng, 3);
            alg.normal_form(&NcPoly::single(w, c64(1.0, 0.0)))
        } else {
            alg.random_poly(rng, 3, 2)
        }
    };
    for _ in 0..n_samples {
        let a = sample(&mut rng)?;
        let c = sample(&mut rng)?;
        let ac = alg.multiply(&a, &c)?;
        let (da, dc) = (b.counit(&a), b.counit(&c));
        let scale = a.max_abs().max(1.0) * c.max_abs().max(1.0);
        let lhs = da * t.psi.eval(&c)? - t.psi.eval(&ac)? + t.psi.eval(&a)? * dc;
        let rhs = -inner(&t.eta(&alg.involute(&a)?), &t.eta(&c));
        rep.generator_identity = rep.generator_identity.max((lhs - rhs).norm() / scale);
        let coc = t.eta(&ac) - t.rho(&a) * t.eta(&c) - t.eta(&a) * dc;
        rep.cocycle = rep.cocycle.max(coc.camax() / scale);
        let mult = t.rho(&ac) - t.rho(&a) * t.rho(&c);
        rep.rho_multiplicativity = rep.rho_multiplicativity.max(mult.camax() / scale);
        let star = t.rho(&alg.involute(&a)?) - t.rho(&a).adjoint();
        rep.rho_star = rep.rho_star.max(star.camax() / a.max_abs().max(1.0));
    }
    Ok(rep)
}

/// `ψ(b*b) − ψ(b*) − ψ(b) − ‖η(b − 1)‖²` for `b` with `δ(b) = 1`.
pub fn coboundary_residual(t: &LevyTriple, bpoly: &NcPoly) -> Result<C64> {
    let alg = t.core.bialgebra().algebra();
    let bs = alg.involute(bpoly)?;
    let lhs = t.psi.eval(&alg.multiply(&bs, bpoly)?)? - t.psi.eval(&bs)? - t.psi.eval(bpoly)?;
    let e = t.eta(&bpoly.sub(&one()));
    Ok(lhs - inner(&e, &e))
}
