//! Truncated Boson Fock space: ladder operators on occupation bases,
//! exponential vectors, generator processes and their convolution products
//! over partitions, unitary product evolutions and the Azéma/Wiener
//! transformations.
//!
//! Everything is stored per interval (one [`FockFactor`] per partition
//! piece); full tensor products are never materialized.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bialg::{counit, involute, iterated_coproduct, multiply, BialgebraSpec, Coalgebra};
use crate::constructions::{
    make_azema, make_primitive_tensor, make_unitary_bialgebra, pullback, unitary_index,
};
use crate::error::{Error, Result};
use crate::gns::{azema_triple, inner, unitary_triple, LevyTriple, UnitaryTripleParams};
use crate::gram::{lift_to_tensor, PairChain, Partition};
use crate::lincomb::{c64, LinComb, C64};
use crate::ncpoly::{one, NcPoly, Word};
use crate::subcoalg::{conv_exp, ConvolutionSemigroup};

/// Largest number of elementary tensors in a factorized operator or vector.
pub const FOCK_TERM_BUDGET: usize = 100_000;
/// Default particle cap per factor.
pub const DEFAULT_CAP: usize = 8;
/// Predicted truncation error above which exponential vectors are refused.
pub const TAIL_TOL: f64 = 1e-6;

fn budget(n: usize) -> Result<()> {
    if n > FOCK_TERM_BUDGET {
        Err(Error::TermBudgetExceeded(FOCK_TERM_BUDGET))
    } else {
        Ok(())
    }
}

/// `Σ_{p ≤ N} C(m+p−1, p)` occupation states of `m` modes with at most `N` particles.
#[derive(Clone, Debug)]
pub struct FockFactor {
    m: usize,
    cap: usize,
    basis: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    creation: Vec<DMatrix<C64>>,
}

impl FockFactor {
    pub fn new(m: usize, cap: usize) -> Result<Arc<Self>> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        let mut basis = Vec::new();
        for p in 0..=cap {
            compositions(m, p, &mut Vec::new(), &mut basis);
        }
        let index: HashMap<Vec<usize>, usize> = basis.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();
        let dim = basis.len();
        let creation = (0..m)
            .map(|j| {
                let mut a = DMatrix::zeros(dim, dim);
                for (col, occ) in basis.iter().enumerate() {
                    let mut up = occ.clone();
                    up[j] += 1;
                    if let Some(&row) = index.get(&up) {
                        a[(row, col)] = c64(((occ[j] + 1) as f64).sqrt(), 0.0);
                    }
                }
                a
            })
            .collect();
        Ok(Arc::new(Self { m, cap, basis, index, creation }))
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<usize>] {
        &self.basis
    }

    pub fn particles(&self, i: usize) -> usize {
        self.basis[i].iter().sum()
    }

    pub fn state_index(&self, occ: &[usize]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn vacuum(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = c64(1.0, 0.0);
        v
    }

    /// `a_j*` truncated at the cap.
    pub fn creation_ladder(&self, j: usize) -> &DMatrix<C64> {
        &self.creation[j]
    }

    pub fn annihilation_ladder(&self, j: usize) -> DMatrix<C64> {
        self.creation[j].adjoint()
    }

    /// Projector onto states with at most `k` particles.
    pub fn projector(&self, k: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j && self.particles(i) <= k {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        })
    }

    pub fn identity(&self) -> DMatrix<C64> {
        DMatrix::identity(self.dim(), self.dim())
    }
}

fn compositions(m: usize, p: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() + 1 == m {
        prefix.push(p);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=p).rev() {
        prefix.push(first);
        compositions(m, p - first, prefix, out);
        prefix.pop();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NoiseKind {
    Creation,
    Annihilation,
    Preservation,
}

#[derive(Clone, Debug)]
pub enum NoiseArg {
    Vector(DVector<C64>),
    Matrix(DMatrix<C64>),
}

/// An operator on the Fock factor of one interval.
#[derive(Clone, Debug)]
pub struct FockOperator {
    pub interval: (f64, f64),
    pub matrix: DMatrix<C64>,
}

impl FockOperator {
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }

    pub fn adjoint(&self) -> Self {
        Self { interval: self.interval, matrix: self.matrix.adjoint() }
    }
}

/// `A*(k)`, `A(k)` carry `√(t−s)`; `Λ(T)` carries no time factor.
pub fn quantum_noise_op(kind: NoiseKind, arg: &NoiseArg, interval: (f64, f64), factor: &FockFactor) -> Result<FockOperator> {
    let m = factor.modes();
    let dim = factor.dim();
    let scale = (interval.1 - interval.0).max(0.0).sqrt();
    let matrix = match (kind, arg) {
        (NoiseKind::Creation, NoiseArg::Vector(k)) | (NoiseKind::Annihilation, NoiseArg::Vector(k)) => {
            if k.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: k.len() });
            }
            let mut a = DMatrix::zeros(dim, dim);
            for j in 0..m {
                a += factor.creation_ladder(j) * (k[j] * scale);
            }
            if kind == NoiseKind::Creation {
                a
            } else {
                a.adjoint()
            }
        }
        (NoiseKind::Preservation, NoiseArg::Matrix(t)) => {
            if t.nrows() != m || t.ncols() != m {
                return Err(Error::DimensionMismatch { expected: m, got: t.nrows().max(t.ncols()) });
            }
            let mut a = DMatrix::zeros(dim, dim);
            for j in 0..m {
                for l in 0..m {
                    if t[(j, l)] != c64(0.0, 0.0) {
                        a += factor.creation_ladder(j) * factor.annihilation_ladder(l) * t[(j, l)];
                    }
                }
            }
            a
        }
        _ => return Err(Error::InvalidParameter("creation/annihilation take vectors, preservation a matrix".into())),
    };
    Ok(FockOperator { interval, matrix })
}

/// `Σ_{p>N} x^p/p!`.
pub fn exp_tail_bound(x: f64, n: usize) -> f64 {
    let x = x.abs();
    let mut term = 1.0;
    for p in 1..=n {
        term *= x / p as f64;
    }
    let mut tail = 0.0;
    let mut p = n + 1;
    loop {
        term *= x / p as f64;
        tail += term;
        if term <= 1e-18 * tail.max(1e-300) || p > n + 500 {
            break;
        }
        p += 1;
    }
    tail
}

/// A sum of elementary tensors of per-interval vectors.
#[derive(Clone, Debug)]
pub struct FactorizedFockVector {
    pub partition: Partition,
    pub terms: Vec<(C64, Vec<Arc<DVector<C64>>>)>,
}

impl FactorizedFockVector {
    pub fn vacuum(partition: Partition, factor: &FockFactor) -> Self {
        let omega = Arc::new(factor.vacuum());
        let n = partition.len();
        Self { partition, terms: vec![(c64(1.0, 0.0), vec![omega; n])] }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.partition.len() != other.partition.len() {
            return Err(Error::LengthMismatch(self.partition.len(), other.partition.len()));
        }
        let mut memo: HashMap<(usize, *const DVector<C64>, *const DVector<C64>), C64> = HashMap::new();
        let mut s = c64(0.0, 0.0);
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                let mut z = a.conj() * b;
                for (i, (x, y)) in u.iter().zip(v).enumerate() {
                    let key = (i, Arc::as_ptr(x), Arc::as_ptr(y));
                    let f = *memo.entry(key).or_insert_with(|| inner(x, y));
                    z *= f;
                    if z == c64(0.0, 0.0) {
                        break;
                    }
                }
                s += z;
            }
        }
        Ok(s)
    }

    pub fn norm_sq(&self) -> Result<f64> {
        Ok(self.inner(self)?.re)
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            partition: self.partition.clone(),
            terms: self.terms.iter().map(|(a, v)| (a * c, v.clone())).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.partition.len() != other.partition.len() {
            return Err(Error::LengthMismatch(self.partition.len(), other.partition.len()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        budget(terms.len())?;
        Ok(Self { partition: self.partition.clone(), terms })
    }
}

/// `E(k·1_{[s,t]})` truncated at the cap, with its predicted norm tail.
pub fn exponential_vector(k: &DVector<C64>, interval: (f64, f64), factor: &FockFactor) -> Result<(FactorizedFockVector, f64)> {
    let (s, t) = interval;
    let x = k.norm_squared() * (t - s);
    let n = factor.cap();
    if x > std::f64::consts::LN_10 * n as f64 / 3.0 {
        return Err(Error::TailBoundExceeded(exp_tail_bound(x, n)));
    }
    let tail = exp_tail_bound(x, n);
    if tail > TAIL_TOL {
        return Err(Error::TailBoundExceeded(tail));
    }
    let cr = quantum_noise_op(NoiseKind::Creation, &NoiseArg::Vector(k.clone()), interval, factor)?;
    let mut term = factor.vacuum();
    let mut e = term.clone();
    for p in 1..=n {
        term = cr.apply(&term) / c64(p as f64, 0.0);
        e += &term;
    }
    let v = FactorizedFockVector { partition: Partition::new(vec![s, t])?, terms: vec![(c64(1.0, 0.0), vec![Arc::new(e)])] };
    Ok((v, tail))
}

/// `E(f)` for the step profile `f = Σ kᵢ 1_{Iᵢ}`: `⊗ᵢ E(kᵢ 1_{Iᵢ})`.
pub fn exponential_vector_profile(
    ks: &[DVector<C64>],
    partition: &Partition,
    factor: &FockFactor,
) -> Result<(FactorizedFockVector, f64)> {
    if ks.len() != partition.len() {
        return Err(Error::LengthMismatch(ks.len(), partition.len()));
    }
    let mut legs = Vec::new();
    let mut tail = 0.0;
    for (k, iv) in ks.iter().zip(partition.intervals()) {
        let (e, tb) = exponential_vector(k, iv, factor)?;
        legs.push(e.terms[0].1[0].clone());
        tail += tb;
    }
    Ok((FactorizedFockVector { partition: partition.clone(), terms: vec![(c64(1.0, 0.0), legs)] }, tail))
}

/// `I_{s,t}(b) = δ(b)I + A(η(b*)) + Λ(ρ(b) − δ(b)) + A*(η(b)) + ψ(b − δ(b))(t − s)`.
pub fn generator_process(triple: &LevyTriple, b: &NcPoly, interval: (f64, f64), factor: &FockFactor) -> Result<FockOperator> {
    let m = triple.k_dim();
    if factor.modes() != m {
        return Err(Error::DimensionMismatch { expected: m, got: factor.modes() });
    }
    let bialg = triple.core.bialgebra();
    let alg = bialg.algebra();
    let d = counit(&**bialg, b);
    let bs = alg.involute(b)?;
    let id = factor.identity();
    let psi = triple.psi.eval(b)? - d * triple.psi.eval(&one())?;
    let mut mat = &id * (d + psi * (interval.1 - interval.0));
    if m > 0 {
        let a = quantum_noise_op(NoiseKind::Annihilation, &NoiseArg::Vector(triple.eta(&bs)), interval, factor)?;
        let c = quantum_noise_op(NoiseKind::Creation, &NoiseArg::Vector(triple.eta(b)), interval, factor)?;
        let rho = triple.rho(b) - DMatrix::identity(m, m) * d;
        let l = quantum_noise_op(NoiseKind::Preservation, &NoiseArg::Matrix(rho), interval, factor)?;
        mat += a.matrix + l.matrix + c.matrix;
    }
    Ok(FockOperator { interval, matrix: mat })
}

/// A sum of elementary tensors of per-interval operators.
#[derive(Clone, Debug)]
pub struct FactorizedFockOperator {
    pub partition: Partition,
    pub terms: Vec<(C64, Vec<Arc<DMatrix<C64>>>)>,
}

impl FactorizedFockOperator {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn apply(&self, v: &FactorizedFockVector) -> Result<FactorizedFockVector> {
        if v.partition.len() != self.partition.len() {
            return Err(Error::LengthMismatch(v.partition.len(), self.partition.len()));
        }
        budget(self.terms.len() * v.terms.len())?;
        let mut memo: HashMap<(*const DMatrix<C64>, *const DVector<C64>), Arc<DVector<C64>>> = HashMap::new();
        let mut terms = Vec::with_capacity(self.terms.len() * v.terms.len());
        for (a, ops) in &self.terms {
            for (b, vecs) in &v.terms {
                let legs = ops
                    .iter()
                    .zip(vecs)
                    .map(|(o, x)| {
                        memo.entry((Arc::as_ptr(o), Arc::as_ptr(x)))
                            .or_insert_with(|| Arc::new(&**o * &**x))
                            .clone()
                    })
                    .collect();
                terms.push((a * b, legs));
            }
        }
        Ok(FactorizedFockVector { partition: self.partition.clone(), terms })
    }

    pub fn apply_vacuum(&self, factor: &FockFactor) -> Result<FactorizedFockVector> {
        self.apply(&FactorizedFockVector::vacuum(self.partition.clone(), factor))
    }

    /// Operator product (composition `self ∘ other`) factor by factor.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.partition.len() != other.partition.len() {
            return Err(Error::LengthMismatch(self.partition.len(), other.partition.len()));
        }
        budget(self.terms.len() * other.terms.len())?;
        let mut terms = Vec::new();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                terms.push((a * b, x.iter().zip(y).map(|(p, q)| Arc::new(&**p * &**q)).collect()));
            }
        }
        Ok(Self { partition: self.partition.clone(), terms })
    }
}

/// Per-interval generator operators on words, memoized.
struct GeneratorCache<'a> {
    triple: &'a LevyTriple,
    factor: &'a FockFactor,
    memo: HashMap<(usize, Word), Arc<DMatrix<C64>>>,
}

impl<'a> GeneratorCache<'a> {
    fn get(&mut self, i: usize, interval: (f64, f64), w: &Word) -> Result<Arc<DMatrix<C64>>> {
        if let Some(m) = self.memo.get(&(i, w.clone())) {
            return Ok(m.clone());
        }
        let p = NcPoly::single(w.clone(), c64(1.0, 0.0));
        let op = Arc::new(generator_process(self.triple, &p, interval, self.factor)?.matrix);
        self.memo.insert((i, w.clone()), op.clone());
        Ok(op)
    }
}

/// `Σ_{Δₙ(b)} ⊗ᵢ I_{tᵢ₋₁,tᵢ}(legᵢ)` over the coproduct of `bialgebra`.
pub fn convolution_product_process<B>(
    triple: &LevyTriple,
    b: &LinComb<Word>,
    bialgebra: &B,
    partition: &Partition,
    factor: &FockFactor,
) -> Result<FactorizedFockOperator>
where
    B: Coalgebra<Key = Word> + ?Sized,
{
    let legs = iterated_coproduct(bialgebra, b, partition.len())?;
    budget(legs.len())?;
    let intervals: Vec<(f64, f64)> = partition.intervals().collect();
    let mut cache = GeneratorCache { triple, factor, memo: HashMap::new() };
    let mut terms = Vec::with_capacity(legs.len());
    for (tuple, c) in legs.iter() {
        let ops = tuple
            .iter()
            .enumerate()
            .map(|(i, w)| cache.get(i, intervals[i], w))
            .collect::<Result<Vec<_>>>()?;
        terms.push((*c, ops));
    }
    Ok(FactorizedFockOperator { partition: partition.clone(), terms })
}

/// Exact vacuum Gram data of the convolution products, computed without
/// Fock matrices: a pair chain over `Δ` whose base functional is the
/// convolution exponential on the primitive tensor bialgebra,
/// `⟨I_r(u)Ω, I_r(v)Ω⟩ = e_⋆^{r ψ∘ϰ}(κ(u)* κ(v))`.
pub struct ExactProductGram {
    chain: Arc<PairChain<BialgebraSpec, BialgebraSpec>>,
}

impl ExactProductGram {
    pub fn new(triple: &LevyTriple, mesh: f64) -> Result<Self> {
        let b = triple.core.bialgebra().clone();
        let (t, kappa) = make_primitive_tensor(&b, 2)?;
        let sg_t = ConvolutionSemigroup::new(t.clone(), pullback(&triple.psi, &kappa));
        let chain = PairChain::new(b.clone(), b, move |u: &Word, v: &Word| {
            let base = t.base();
            let lu = lift_to_tensor(&t, &base.algebra().normal_form_word(u)?.as_ref().clone())?;
            let lv = lift_to_tensor(&t, &base.algebra().normal_form_word(v)?.as_ref().clone())?;
            let p = multiply(&*t, &involute(&*t, &lu)?, &lv)?;
            sg_t.eval(mesh, &p)
        });
        Ok(Self { chain })
    }

    pub fn eval(&self, n: usize, c: &NcPoly, d: &NcPoly) -> Result<C64> {
        self.chain.eval(n, c, d)
    }
}

/// One comparison of the two vacuum-Gram paths.
#[derive(Clone, Debug, Serialize)]
pub struct CrossCheckRow {
    pub n: usize,
    pub left: String,
    pub right: String,
    pub fock: [f64; 2],
    pub exact: [f64; 2],
    pub diff: f64,
    pub tail_bound: f64,
    pub tolerance: f64,
    pub passes: bool,
}

/// `⟨P(c)Ω, P(d)Ω⟩` from the Fock products against the exact Gram chain.
/// Each `I_r(w)Ω` has at most one particle, so the truncation tail is zero
/// for any cap ≥ 1; the tolerance is `max(10·tail, 1e-12·scale)`.
pub fn cross_check(
    triple: &LevyTriple,
    pairs: &[(NcPoly, NcPoly)],
    s: f64,
    t: f64,
    meshes: &[usize],
    cap: usize,
) -> Result<Vec<CrossCheckRow>> {
    let b = triple.core.bialgebra().clone();
    let factor = FockFactor::new(triple.k_dim().max(1), cap)?;
    if triple.k_dim() == 0 {
        return Err(Error::InvalidParameter("triple has a zero-dimensional cocycle space".into()));
    }
    let mut rows = Vec::new();
    for &n in meshes {
        let alpha = Partition::uniform(s, t, n)?;
        let exact = ExactProductGram::new(triple, (t - s) / n as f64)?;
        for (c, d) in pairs {
            let pc = convolution_product_process(triple, c, &*b, &alpha, &factor)?.apply_vacuum(&factor)?;
            let pd = convolution_product_process(triple, d, &*b, &alpha, &factor)?.apply_vacuum(&factor)?;
            let f = pc.inner(&pd)?;
            let e = exact.eval(n, c, d)?;
            let tail = if cap >= 1 { 0.0 } else { f64::INFINITY };
            let tolerance = (10.0 * tail).max(1e-12 * e.norm().max(1.0));
            let diff = (f - e).norm();
            rows.push(CrossCheckRow {
                n,
                left: b.algebra().format(c),
                right: b.algebra().format(d),
                fock: [f.re, f.im],
                exact: [e.re, e.im],
                diff,
                tail_bound: tail,
                tolerance,
                passes: diff <= tolerance,
            });
        }
    }
    Ok(rows)
}

/// Per-interval generator blocks `(I_f)_{kl} = I_f(x_{kl})` of a unitary
/// product evolution, with the vacuum amplitudes and unitarity defect.
#[derive(Clone, Debug)]
pub struct UnitaryEvolution {
    pub partition: Partition,
    pub d: usize,
    /// `blocks[f][k·d + l]`
    pub blocks: Vec<Vec<Arc<DMatrix<C64>>>>,
    pub vacuum_amplitudes: DMatrix<C64>,
    pub target: DMatrix<C64>,
    pub unitarity_defect: f64,
    pub defect_particles: usize,
}

impl UnitaryEvolution {
    pub fn vacuum_defect(&self) -> f64 {
        (&self.vacuum_amplitudes - &self.target).camax()
    }
}

/// `U_α = I_{t₀,t₁} I_{t₁,t₂} ⋯ I_{tₙ₋₁,tₙ}` as a `d × d` matrix of
/// factorized operators. The unitarity defect is `‖P(U*U − I)P‖` on the
/// states of `ℂ^d ⊗ Γ` with at most `defect_particles` particles in total,
/// computed exactly by transfer matrices over the factors.
pub fn unitary_product_evolution(
    params: &UnitaryTripleParams,
    partition: &Partition,
    factor: &Arc<FockFactor>,
    defect_particles: usize,
) -> Result<UnitaryEvolution> {
    let d = params.d;
    let b = make_unitary_bialgebra(d)?;
    let triple = unitary_triple(params, &b)?;
    if factor.modes() != params.m {
        return Err(Error::DimensionMismatch { expected: params.m, got: factor.modes() });
    }
    if defect_particles >= factor.cap() {
        return Err(Error::InvalidParameter("defect subspace must lie below the particle cap".into()));
    }
    let mut blocks = Vec::with_capacity(partition.len());
    for iv in partition.intervals() {
        let mut row = Vec::with_capacity(d * d);
        for k in 0..d {
            for l in 0..d {
                let x = NcPoly::single(Word::letter(unitary_index(d, k, l, false)), c64(1.0, 0.0));
                row.push(Arc::new(generator_process(&triple, &x, iv, factor)?.matrix));
            }
        }
        blocks.push(row);
    }
    // ⟨Ω, U_{kl} Ω⟩ is the ordered product of per-factor vacuum blocks
    let mut amp = DMatrix::<C64>::identity(d, d);
    for row in &blocks {
        let v = DMatrix::from_fn(d, d, |k, l| row[k * d + l][(0, 0)]);
        amp *= v;
    }
    let psi = DMatrix::from_fn(d, d, |k, l| {
        let x = NcPoly::single(Word::letter(unitary_index(d, k, l, false)), c64(1.0, 0.0));
        triple.psi.eval(&x).unwrap_or(c64(f64::NAN, 0.0))
    });
    let length = partition.end() - partition.start();
    let target = crate::subcoalg::expm(&(psi * c64(length, 0.0)));
    let unitarity_defect = unitarity_defect(&blocks, d, factor, defect_particles);
    Ok(UnitaryEvolution {
        partition: partition.clone(),
        d,
        blocks,
        vacuum_amplitudes: amp,
        target,
        unitarity_defect,
        defect_particles,
    })
}

/// Product states with at most `k` particles in total over `n` factors:
/// list of (factor, local basis index) excitations.
fn low_particle_configs(n: usize, factor: &FockFactor, k: usize) -> Vec<Vec<(usize, usize)>> {
    let local: Vec<usize> = (1..factor.dim()).filter(|&i| factor.particles(i) <= k).collect();
    let mut out = vec![vec![]];
    fn extend(
        start: usize,
        n: usize,
        left: usize,
        local: &[usize],
        factor: &FockFactor,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        for f in start..n {
            for &i in local {
                let p = factor.particles(i);
                if p <= left {
                    cur.push((f, i));
                    out.push(cur.clone());
                    extend(f + 1, n, left - p, local, factor, cur, out);
                    cur.pop();
                }
            }
        }
    }
    extend(0, n, k, &local, factor, &mut Vec::new(), &mut out);
    out
}

fn unitarity_defect(blocks: &[Vec<Arc<DMatrix<C64>>>], d: usize, factor: &FockFactor, k: usize) -> f64 {
    let n = blocks.len();
    let d2 = d * d;
    // per factor: G_f[(kl),(k'l')] = (I_f)_{kl}† (I_f)_{k'l'}
    let grams: Vec<Vec<DMatrix<C64>>> = blocks
        .iter()
        .map(|row| {
            let mut g = Vec::with_capacity(d2 * d2);
            for a in row {
                for b in row {
                    g.push(a.adjoint() * &**b);
                }
            }
            g
        })
        .collect();
    // transfer matrix on path pairs: T[(k,k'),(l,l')] = ⟨(I_f)_{kl}φ_a, (I_f)_{k'l'}φ_b⟩
    let transfer = |f: usize, a: usize, b: usize| -> DMatrix<C64> {
        DMatrix::from_fn(d2, d2, |r, c| {
            let (kk, kp) = (r / d, r % d);
            let (l, lp) = (c / d, c % d);
            grams[f][(kk * d + l) * d2 + kp * d + lp][(a, b)]
        })
    };
    let vac: Vec<DMatrix<C64>> = (0..n).map(|f| transfer(f, 0, 0)).collect();
    // range[i][j − i] = T_i ⋯ T_{j−1} on vacuum pairs
    let range: Vec<Vec<DMatrix<C64>>> = (0..=n)
        .map(|i| {
            let mut row = vec![DMatrix::identity(d2, d2)];
            for f in i..n {
                let next = row.last().unwrap() * &vac[f];
                row.push(next);
            }
            row
        })
        .collect();
    let configs = low_particle_configs(n, factor, k);
    let cols: Vec<(usize, usize)> = (0..d).flat_map(|j| (0..configs.len()).map(move |c| (j, c))).collect();
    let dim = cols.len();
    let mut gm = DMatrix::<C64>::zeros(dim, dim);
    let start = DMatrix::from_fn(1, d2, |_, c| if c / d == c % d { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
    for ci in 0..configs.len() {
        for cp in ci..configs.len() {
            let mut support: Vec<(usize, usize, usize)> = Vec::new();
            let local = |cfg: &[(usize, usize)], f: usize| cfg.iter().find(|(g, _)| *g == f).map(|(_, i)| *i).unwrap_or(0);
            let mut fs: Vec<usize> = configs[ci].iter().chain(&configs[cp]).map(|(f, _)| *f).collect();
            fs.sort_unstable();
            fs.dedup();
            for f in fs {
                support.push((f, local(&configs[ci], f), local(&configs[cp], f)));
            }
            let mut v = start.clone();
            let mut pos = 0;
            for (f, a, b) in support {
                v = v * &range[pos][f - pos] * transfer(f, a, b);
                pos = f + 1;
            }
            v = v * &range[pos][n - pos];
            for j in 0..d {
                for jp in 0..d {
                    let x = j * configs.len() + ci;
                    let y = jp * configs.len() + cp;
                    let mut z = v[(0, j * d + jp)];
                    if x == y {
                        z -= c64(1.0, 0.0);
                    }
                    gm[(x, y)] = z;
                    gm[(y, x)] = z.conj();
                }
            }
        }
    }
    let _ = cols;
    hermitian_norm(&gm)
}

/// Power-iteration iterations bounds and relative stopping tolerance.
const POWER_MIN_ITERS: usize = 20;
const POWER_MAX_ITERS: usize = 2000;
const POWER_TOL: f64 = 1e-8;

/// `‖X‖` for Hermitian `X` by power iteration from a fixed start vector.
pub fn hermitian_norm(x: &DMatrix<C64>) -> f64 {
    let n = x.nrows();
    if n == 0 {
        return 0.0;
    }
    if n <= 64 {
        return crate::linalg::hermitian_eigen(x).0.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    }
    let mut v = DVector::from_fn(n, |i, _| c64(1.0 + (i as f64 * 0.618).fract(), 0.0));
    v /= c64(v.norm(), 0.0);
    let mut est = 0.0;
    for it in 0..POWER_MAX_ITERS {
        let w = x * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        // two steps of X² keep the iteration monotone for indefinite X
        let next = (x * &w).norm() / norm;
        v = w / c64(norm, 0.0);
        if it >= POWER_MIN_ITERS && (next - est).abs() <= POWER_TOL * next {
            return next;
        }
        est = next;
    }
    est
}

/// One row of the Azéma/Wiener experiment.
#[derive(Clone, Debug, Serialize)]
pub struct AzemaWienerRow {
    pub n: usize,
    pub mesh: f64,
    /// `‖(W_{t₀,t₁}Y⋯Y + ⋯ + W_{tₙ₋₁,tₙ})Ω‖²` against the Azéma target
    pub azema_norm_sq: f64,
    pub azema_target: f64,
    /// `‖(Σⱼ Z_{tⱼ,tⱼ₊₁})Ω‖²` against the Wiener target
    pub wiener_norm_sq: f64,
    pub wiener_target: f64,
    /// `⟨Ω, (Σ Z)² Ω⟩`-type cross term: `⟨approx_Z Ω, approx_W Ω⟩`
    pub cross: [f64; 2],
    pub x_vacuum_norm: f64,
    pub qsde_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AzemaWienerReport {
    pub q: f64,
    pub cap: usize,
    pub inner: usize,
    pub rows: Vec<AzemaWienerRow>,
}

/// The two transformations between the Azéma martingale and Brownian motion.
///
/// The Azéma martingale `x + x*` is approximated by convolution products of
/// the Azéma generator processes over the Azéma coproduct; Brownian motion by
/// sums (primitive coproduct) of Azéma increments, each increment itself
/// approximated over `inner` sub-pieces. The discrete QSDE residual checks
/// `X_{t+h} = X_t(1 + (q−1)Λ_{t,t+h}(1)) + A_{t,t+h}(1)` on a vector with
/// low-order creations.
pub fn azema_wiener_experiment(q: f64, s: f64, t: f64, meshes: &[usize], inner: usize, cap: usize) -> Result<AzemaWienerReport> {
    if inner == 0 {
        return Err(Error::InvalidParameter("inner mesh factor must be positive".into()));
    }
    let (az, prim, psi) = make_azema(q)?;
    let triple = azema_triple(&az, q, psi.clone())?;
    let factor = FockFactor::new(1, cap)?;
    let z = az.parse("x + x^*")?;
    let zz = az.algebra().multiply(&z, &z)?;
    let azema_target = conv_exp(&psi, t - s, &zz, &*az)?.re;
    let wiener_target = conv_exp(&psi, t - s, &zz, &*prim)?.re;
    let x = az.parse("x")?;
    let mut rows = Vec::new();
    for &n in meshes {
        let alpha = Partition::uniform(s, t, n)?;
        let zproc = convolution_product_process(&triple, &z, &*az, &alpha, &factor)?;
        let z_vac = zproc.apply_vacuum(&factor)?;
        // Σⱼ Z_{tⱼ,tⱼ₊₁}: primitive sum of Azéma increments over the refined partition
        let fine = alpha.refine_uniform(inner)?;
        let mut w_op = FactorizedFockOperator { partition: fine.clone(), terms: Vec::new() };
        let id = Arc::new(factor.identity());
        let inner_part = Partition::uniform(0.0, (t - s) / n as f64, inner)?;
        for (j, (a, _)) in alpha.intervals().enumerate() {
            let shifted = Partition::new(inner_part.times().iter().map(|u| a + u).collect())?;
            let piece = convolution_product_process(&triple, &z, &*az, &shifted, &factor)?;
            for (c, ops) in piece.terms {
                let mut full = vec![id.clone(); fine.len()];
                for (i, o) in ops.into_iter().enumerate() {
                    full[j * inner + i] = o;
                }
                w_op.terms.push((c, full));
            }
        }
        budget(w_op.terms.len())?;
        let w_vac = w_op.apply_vacuum(&factor)?;
        // compare on a common partition: re-express the Z-approximation on `fine`
        let z_fine = refine_vector(&z_vac, &fine, &factor)?;
        let cross = z_fine.inner(&w_vac)?;
        let x_vac = convolution_product_process(&triple, &x, &*az, &alpha, &factor)?.apply_vacuum(&factor)?;
        rows.push(AzemaWienerRow {
            n,
            mesh: (t - s) / n as f64,
            azema_norm_sq: z_vac.norm_sq()?,
            azema_target,
            wiener_norm_sq: w_vac.norm_sq()?,
            wiener_target,
            cross: [cross.re, cross.im],
            x_vacuum_norm: x_vac.norm_sq()?.max(0.0).sqrt(),
            qsde_residual: qsde_residual(&triple, &x, &az, &alpha, &factor, q)?,
        });
    }
    Ok(AzemaWienerReport { q, cap, inner, rows })
}

/// Splits each factor of a vector that is a product of one-particle or
/// vacuum states into the equivalent vector over a uniform refinement:
/// `Ω ↦ Ω⊗⋯⊗Ω` and `a*(1_I)Ω ↦ Σ_sub a*(1_{I_sub})Ω`.
fn refine_vector(v: &FactorizedFockVector, fine: &Partition, factor: &FockFactor) -> Result<FactorizedFockVector> {
    let k = fine.len() / v.partition.len();
    if k * v.partition.len() != fine.len() {
        return Err(Error::InvalidParameter("refinement must be uniform".into()));
    }
    let omega = Arc::new(factor.vacuum());
    let mut terms = Vec::new();
    for (c, legs) in &v.terms {
        let mut acc: Vec<(C64, Vec<Arc<DVector<C64>>>)> = vec![(*c, vec![])];
        for leg in legs {
            let mut pieces: Vec<(C64, Vec<Arc<DVector<C64>>>)> = Vec::new();
            // vacuum component
            let v0 = leg[0];
            if v0 != c64(0.0, 0.0) {
                pieces.push((v0, vec![omega.clone(); k]));
            }
            for i in 1..leg.len() {
                if leg[i] == c64(0.0, 0.0) {
                    continue;
                }
                if factor.particles(i) != 1 {
                    return Err(Error::InvalidParameter("only ≤1-particle factors can be split".into()));
                }
                let mut one_p = DVector::zeros(factor.dim());
                one_p[i] = c64(1.0, 0.0);
                let one_p = Arc::new(one_p);
                let w = leg[i] / c64((k as f64).sqrt(), 0.0);
                for sub in 0..k {
                    let mut ls = vec![omega.clone(); k];
                    ls[sub] = one_p.clone();
                    pieces.push((w, ls));
                }
            }
            let mut next = Vec::new();
            for (a, pre) in &acc {
                for (b, p) in &pieces {
                    let mut l = pre.clone();
                    l.extend(p.iter().cloned());
                    next.push((a * b, l));
                }
            }
            budget(next.len())?;
            acc = next;
        }
        terms.extend(acc);
    }
    Ok(FactorizedFockVector { partition: fine.clone(), terms })
}

/// `‖(X_{t+h} − X_t − (q−1)X_tΛ_{t,t+h}(1) − A_{t,t+h}(1))Ω′‖` maximized over
/// the partition steps, with `Ω′ = Ω + Σᵢ A*_{Iᵢ}(1)Ω`.
fn qsde_residual(
    triple: &LevyTriple,
    x: &NcPoly,
    az: &Arc<BialgebraSpec>,
    alpha: &Partition,
    factor: &FockFactor,
    q: f64,
) -> Result<f64> {
    let n = alpha.len();
    let id = Arc::new(factor.identity());
    let one_vec = DVector::from_element(1, c64(1.0, 0.0));
    let mut probe = FactorizedFockVector::vacuum(alpha.clone(), factor);
    for (i, iv) in alpha.intervals().enumerate() {
        let cr = quantum_noise_op(NoiseKind::Creation, &NoiseArg::Vector(one_vec.clone()), iv, factor)?;
        let mut legs = vec![Arc::new(factor.vacuum()); n];
        legs[i] = Arc::new(cr.apply(&factor.vacuum()));
        probe.terms.push((c64(1.0, 0.0), legs));
    }
    let mut worst = 0.0_f64;
    // X_{t_k}: the convolution product on [t₀, t_k], identity on later factors
    let x_at = |k: usize| -> Result<FactorizedFockOperator> {
        if k == 0 {
            return Ok(FactorizedFockOperator { partition: alpha.clone(), terms: vec![] });
        }
        let head = Partition::new(alpha.times()[..=k].to_vec())?;
        let p = convolution_product_process(triple, x, &**az, &head, factor)?;
        let terms = p
            .terms
            .into_iter()
            .map(|(c, mut ops)| {
                ops.extend(std::iter::repeat(id.clone()).take(n - k));
                (c, ops)
            })
            .collect();
        Ok(FactorizedFockOperator { partition: alpha.clone(), terms })
    };
    let mut prev = x_at(0)?;
    for (k, iv) in alpha.intervals().enumerate() {
        let next = x_at(k + 1)?;
        let lam = quantum_noise_op(NoiseKind::Preservation, &NoiseArg::Matrix(DMatrix::from_element(1, 1, c64(1.0, 0.0))), iv, factor)?;
        let ann = quantum_noise_op(NoiseKind::Annihilation, &NoiseArg::Vector(one_vec.clone()), iv, factor)?;
        let mut lam_ops = vec![id.clone(); n];
        lam_ops[k] = Arc::new(lam.matrix * c64(q - 1.0, 0.0));
        let mut ann_ops = vec![id.clone(); n];
        ann_ops[k] = Arc::new(ann.matrix);
        let lam_op = FactorizedFockOperator { partition: alpha.clone(), terms: vec![(c64(1.0, 0.0), lam_ops)] };
        let xl = prev.compose(&lam_op)?;
        let mut diff = next.clone();
        for (c, o) in prev.terms.iter().chain(xl.terms.iter()) {
            diff.terms.push((-c, o.clone()));
        }
        diff.terms.push((c64(-1.0, 0.0), ann_ops));
        let r = diff.apply(&probe)?.norm_sq()?.max(0.0).sqrt();
        worst = worst.max(r);
        prev = next;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::make_unitary_bialgebra;
    use crate::gns::gns_construct;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cv(v: &[f64]) -> DVector<C64> {
        DVector::from_iterator(v.len(), v.iter().map(|x| c64(*x, 0.0)))
    }

    #[test]
    fn factor_dimensions() {
        assert_eq!(FockFactor::new(1, 8).unwrap().dim(), 9);
        // Σ_{p≤3} C(p+1, p) = 1 + 2 + 3 + 4
        assert_eq!(FockFactor::new(2, 3).unwrap().dim(), 10);
        assert_eq!(FockFactor::new(3, 2).unwrap().dim(), 10);
    }

    #[test]
    fn ladder_examples_and_ccr() {
        let f = FockFactor::new(2, 5).unwrap();
        let k = cv(&[1.0, 0.0]);
        let a = quantum_noise_op(NoiseKind::Annihilation, &NoiseArg::Vector(k.clone()), (0.0, 1.0), &f).unwrap();
        assert!(a.apply(&f.vacuum()).norm() == 0.0);
        let c = quantum_noise_op(NoiseKind::Creation, &NoiseArg::Vector(k.clone()), (0.0, 1.0), &f).unwrap();
        let one = c.apply(&f.vacuum());
        assert!((one[f.state_index(&[1, 0]).unwrap()] - c64(1.0, 0.0)).norm() < 1e-15);
        let p = f.projector(f.cap() - 1);
        for j in 0..2 {
            for l in 0..2 {
                let aj = f.annihilation_ladder(j);
                let al_s = f.creation_ladder(l);
                let comm = &aj * al_s - al_s * &aj;
                let expected = if j == l { f.identity() } else { DMatrix::zeros(f.dim(), f.dim()) };
                assert!((&p * (comm - expected) * &p).camax() < 1e-14);
            }
        }
        let k2 = cv(&[0.3, -1.2]);
        let c2 = quantum_noise_op(NoiseKind::Creation, &NoiseArg::Vector(k2.clone()), (0.0, 0.7), &f).unwrap();
        let a2 = quantum_noise_op(NoiseKind::Annihilation, &NoiseArg::Vector(k2), (0.0, 0.7), &f).unwrap();
        assert!((c2.matrix.adjoint() - a2.matrix).camax() < 1e-15);
    }

    #[test]
    fn exponential_vectors() {
        let f = FockFactor::new(1, 10).unwrap();
        let (e, tail) = exponential_vector(&cv(&[1.0]), (0.0, 1.0), &f).unwrap();
        let g = e.inner(&e).unwrap();
        assert!((g.re - 1f64.exp()).abs() <= tail * (1.0 + 1e-9));
        assert!((g.re - 1f64.exp()).abs() <= 3e-8);
        let (z, _) = exponential_vector(&cv(&[0.0]), (0.0, 1.0), &f).unwrap();
        assert!((z.terms[0].1[0].as_ref() - f.vacuum()).norm() == 0.0);
        assert!(matches!(
            exponential_vector(&cv(&[3.0]), (0.0, 1.0), &f),
            Err(Error::TailBoundExceeded(_))
        ));
        // step profiles factorize: ⟨E(f), E(g)⟩ = exp ∫ f̄g
        let f2 = FockFactor::new(1, 16).unwrap();
        let p = Partition::new(vec![0.0, 0.3, 1.0]).unwrap();
        let (e1, t1) = exponential_vector_profile(&[cv(&[0.5]), cv(&[1.0])], &p, &f2).unwrap();
        let (e2, t2) = exponential_vector_profile(&[cv(&[1.0]), cv(&[-0.5])], &p, &f2).unwrap();
        let expected = (0.3 * 0.5 - 0.7 * 0.5f64).exp();
        assert!((e1.inner(&e2).unwrap().re - expected).abs() < 1e-10 + t1 + t2);
    }

    #[test]
    fn exponential_tail_formula() {
        let tail: f64 = (11..40).map(|p| 1.0 / (1..=p).map(|i| i as f64).product::<f64>()).sum();
        assert!((exp_tail_bound(1.0, 10) - tail).abs() < 1e-22);
        let x = 2.0f64;
        let partial: f64 = (0..=10).map(|p| x.powi(p) / (1..=p as usize).map(|i| i as f64).product::<f64>()).sum();
        assert!((exp_tail_bound(x, 10) - (x.exp() - partial)).abs() < 1e-13);
    }

    fn azema_setup(q: f64) -> (Arc<BialgebraSpec>, Arc<BialgebraSpec>, LevyTriple) {
        let (az, prim, psi) = make_azema(q).unwrap();
        let t = azema_triple(&az, q, psi).unwrap();
        (az, prim, t)
    }

    #[test]
    fn generator_process_examples() {
        let q = 0.5;
        let (az, _, t) = azema_setup(q);
        let f = FockFactor::new(1, 6).unwrap();
        let one_op = generator_process(&t, &one(), (0.0, 1.0), &f).unwrap();
        assert!((one_op.matrix - f.identity()).camax() < 1e-15);
        let y = generator_process(&t, &az.parse("y").unwrap(), (0.2, 0.9), &f).unwrap();
        let lam = quantum_noise_op(NoiseKind::Preservation, &NoiseArg::Matrix(DMatrix::from_element(1, 1, c64(q - 1.0, 0.0))), (0.2, 0.9), &f).unwrap();
        assert!((y.matrix - (f.identity() + lam.matrix)).camax() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let b = az.algebra().random_poly(&mut rng, 3, 3).unwrap();
            let r: f64 = rng.gen_range(0.0..2.0);
            let op = generator_process(&t, &b, (1.0, 1.0 + r), &f).unwrap();
            let expect = counit(&*az, &b) + t.psi.eval(&b).unwrap() * r;
            assert!((op.matrix[(0, 0)] - expect).norm() < 1e-12 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn second_quantization_of_q() {
        let q = -0.7;
        let (az, _, t) = azema_setup(q);
        let f = FockFactor::new(1, 4).unwrap();
        let alpha = Partition::uniform(0.0, 1.0, 3).unwrap();
        let p = convolution_product_process(&t, &az.parse("y").unwrap(), &*az, &alpha, &f).unwrap();
        assert_eq!(p.len(), 1);
        // each factor acts as 1 + (q−1)N, which is q^N on occupations ≤ 1;
        // multiple occupation of one interval carries vanishing weight as the mesh shrinks
        for n1 in 0..=1usize {
            for n3 in 0..=1usize {
                let mut legs = vec![Arc::new(f.vacuum()); 3];
                let mut e1 = DVector::zeros(f.dim());
                e1[n1] = c64(1.0, 0.0);
                let mut e3 = DVector::zeros(f.dim());
                e3[n3] = c64(1.0, 0.0);
                legs[0] = Arc::new(e1);
                legs[2] = Arc::new(e3);
                let v = FactorizedFockVector { partition: alpha.clone(), terms: vec![(c64(1.0, 0.0), legs)] };
                let w = p.apply(&v).unwrap();
                let z = v.inner(&w).unwrap();
                assert!((z - c64(q.powi((n1 + n3) as i32), 0.0)).norm() < 1e-14, "{n1} {n3} {z}");
            }
        }
    }

    #[test]
    fn convolution_product_legs_of_x() {
        let (az, _, t) = azema_setup(2.0);
        let f = FockFactor::new(1, 4).unwrap();
        let alpha = Partition::uniform(0.0, 1.0, 2).unwrap();
        let p = convolution_product_process(&t, &az.parse("x").unwrap(), &*az, &alpha, &f).unwrap();
        assert_eq!(p.len(), 2);
        let x0 = generator_process(&t, &az.parse("x").unwrap(), (0.0, 0.5), &f).unwrap().matrix;
        let y1 = generator_process(&t, &az.parse("y").unwrap(), (0.5, 1.0), &f).unwrap().matrix;
        assert!(p.terms.iter().any(|(c, o)| *c == c64(1.0, 0.0) && *o[0] == x0 && *o[1] == y1));
        let xs = az.parse("x^*").unwrap();
        let alg = az.algebra();
        let (_, _, psi) = make_azema(2.0).unwrap();
        let target = conv_exp(&psi, 1.0, &alg.multiply(&alg.involute(&xs).unwrap(), &xs).unwrap(), &*az).unwrap();
        let mut last = f64::INFINITY;
        for n in [2, 4, 8] {
            let alpha = Partition::uniform(0.0, 1.0, n).unwrap();
            let v = convolution_product_process(&t, &xs, &*az, &alpha, &f).unwrap().apply_vacuum(&f).unwrap();
            let d = (v.norm_sq().unwrap() - target.re).abs();
            assert!(d <= last + 1e-14);
            last = d;
        }
    }

    #[test]
    fn fock_and_exact_gram_agree() {
        let (az, _, t) = azema_setup(2.0);
        let p = |s: &str| az.parse(s).unwrap();
        let pairs = vec![(p("x^*"), p("x^*")), (p("x^* + y"), p("x^* y + x")), (p("y"), p("y x^*"))];
        let rows = cross_check(&t, &pairs, 0.0, 1.0, &[1, 3, 6], 4).unwrap();
        for r in &rows {
            assert!(r.passes, "{r:?}");
        }
    }

    #[test]
    fn gns_triple_drives_the_same_products() {
        let (az, _, psi) = make_azema(2.0).unwrap();
        let t = gns_construct(&psi, &az, 4, 1e-9).unwrap();
        let xs = az.parse("x^* x^* + y").unwrap();
        let rows = cross_check(&t, &[(xs.clone(), xs)], 0.0, 1.0, &[4], 4).unwrap();
        assert!(rows[0].passes, "{rows:?}");
    }

    fn u1_params(l: f64, h: f64) -> UnitaryTripleParams {
        UnitaryTripleParams {
            d: 1,
            m: 1,
            w: DMatrix::identity(1, 1),
            l: vec![cv(&[l])],
            h: DMatrix::from_element(1, 1, c64(h, 0.0)),
        }
    }

    #[test]
    fn trivial_unitary_evolution_is_identity() {
        let f = FockFactor::new(1, 3).unwrap();
        let ev = unitary_product_evolution(&u1_params(0.0, 0.0), &Partition::uniform(0.0, 1.0, 4).unwrap(), &f, 2).unwrap();
        assert_eq!(ev.unitarity_defect, 0.0);
        assert!((ev.vacuum_amplitudes[(0, 0)] - c64(1.0, 0.0)).norm() == 0.0);
    }

    #[test]
    fn unitary_evolution_converges() {
        let f = FockFactor::new(1, 8).unwrap();
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for n in [4, 8, 16] {
            let ev = unitary_product_evolution(&u1_params(0.3, 0.5), &Partition::uniform(0.0, 0.5, n).unwrap(), &f, 2).unwrap();
            let vd = ev.vacuum_defect();
            assert!(vd < prev.0 && ev.unitarity_defect < prev.1, "{n}: {vd} {}", ev.unitarity_defect);
            prev = (vd, ev.unitarity_defect);
        }
    }

    #[test]
    fn random_d2_unitarity_defect_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (d, m) = (2, 1);
        let raw = DMatrix::from_fn(d * m, d * m, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let w = raw.qr().q();
        let mut l: Vec<DVector<C64>> =
            (0..d * d).map(|_| DVector::from_fn(m, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).collect();
        let norm = l.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
        for v in l.iter_mut() {
            *v *= c64(0.5 / norm, 0.0);
        }
        let hr = DMatrix::from_fn(d, d, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = (&hr + hr.adjoint()) * c64(0.5, 0.0);
        let params = UnitaryTripleParams { d, m, w, l, h };
        let f = FockFactor::new(m, 6).unwrap();
        let d4 = unitary_product_evolution(&params, &Partition::uniform(0.0, 1.0, 4).unwrap(), &f, 1).unwrap();
        let d32 = unitary_product_evolution(&params, &Partition::uniform(0.0, 1.0, 32).unwrap(), &f, 1).unwrap();
        assert!(d32.unitarity_defect < d4.unitarity_defect, "{} {}", d32.unitarity_defect, d4.unitarity_defect);
        assert!(d32.vacuum_defect() < d4.vacuum_defect());
        let _ = make_unitary_bialgebra(2).unwrap();
    }

    #[test]
    fn azema_wiener_examples() {
        let rep = azema_wiener_experiment(0.5, 0.0, 1.0, &[2, 4], 2, 4).unwrap();
        for r in &rep.rows {
            assert!((r.azema_norm_sq - r.azema_target).abs() < 1e-12, "{r:?}");
            assert!((r.wiener_norm_sq - r.wiener_target).abs() < 1e-12, "{r:?}");
            assert!((r.azema_target - 1.0).abs() < 1e-12);
            assert_eq!(r.x_vacuum_norm, 0.0);
            assert!(r.qsde_residual < 1e-12, "{r:?}");
        }
        let rep1 = azema_wiener_experiment(1.0, 0.0, 1.0, &[3], 2, 3).unwrap();
        assert!((rep1.rows[0].cross[0] - 1.0).abs() < 1e-12);
    }
}
