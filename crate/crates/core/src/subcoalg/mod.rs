//! Finite-dimensional subcoalgebras, transfer matrices `T(ψ) = (id ⊗ ψ)∘Δ`
//! and convolution exponentials `e_⋆^{tψ} = δ ∘ exp(t·T(ψ))`.

pub mod bounds;

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::bialg::{convolve, coproduct, counit, Coalgebra, LinearFunctional, Tensor2};
use crate::error::{Error, Result};
use crate::lincomb::{c64, LinComb, C64};

pub use bounds::{
    banach_product_check, coalgebra_product_check, product_bound, CoalgebraCheckReport, FunctionalFamily,
    MatrixFamily, ProductCheckReport,
};

/// Default cap on the dimension of an extracted subcoalgebra.
pub const DEFAULT_DIM_CAP: usize = 512;
/// Pivot tolerance (relative) deciding whether a leg adds a new direction.
pub const PIVOT_TOL: f64 = 1e-10;
/// Relative residual above which an element is reported as outside a subcoalgebra.
const MEMBER_TOL: f64 = 1e-9;

/// A finite-dimensional subcoalgebra in reduced row-echelon form: basis
/// element `i` has coefficient 1 on `pivots[i]` and 0 on every other pivot,
/// so coordinates are read off at the pivot keys.
#[derive(Clone, Debug)]
pub struct Subcoalgebra<K: Ord> {
    basis: Vec<LinComb<K>>,
    pivots: Vec<K>,
    structure: Vec<Vec<(usize, usize, C64)>>,
    counit: Vec<C64>,
    closure_residual: f64,
}

fn reduce<K: Ord + Clone>(basis: &[LinComb<K>], pivots: &[K], v: &LinComb<K>) -> LinComb<K> {
    let mut r = v.clone();
    for (b, k) in basis.iter().zip(pivots) {
        let c = r.coeff(k);
        if c != c64(0.0, 0.0) {
            r = r.axpy(-c, b);
        }
    }
    r
}

impl<K: Ord + Clone + std::fmt::Debug> Subcoalgebra<K> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[LinComb<K>] {
        &self.basis
    }

    pub fn pivots(&self) -> &[K] {
        &self.pivots
    }

    pub fn counit_vector(&self) -> &[C64] {
        &self.counit
    }

    /// Structure constants `c^i_{jk}` of `Δbᵢ = Σ c^i_{jk} bⱼ ⊗ bₖ`, sparse.
    pub fn structure_constants(&self, i: usize) -> &[(usize, usize, C64)] {
        &self.structure[i]
    }

    /// Largest relative residual of `Δbᵢ − Σ c^i_{jk} bⱼ ⊗ bₖ`.
    pub fn closure_residual(&self) -> f64 {
        self.closure_residual
    }

    /// Coordinates of a member; `NotInCarrier` if it is not in the span.
    pub fn coords(&self, p: &LinComb<K>) -> Result<DVector<C64>> {
        let v = DVector::from_iterator(self.dim(), self.pivots.iter().map(|k| p.coeff(k)));
        let back = self.element(v.as_slice());
        let res = back.sub(p).max_abs();
        if res > MEMBER_TOL * p.max_abs().max(1.0) {
            return Err(Error::NotInCarrier(format!("element outside subcoalgebra (residual {res:e})")));
        }
        Ok(v)
    }

    /// `Σ vᵢ bᵢ`.
    pub fn element(&self, v: &[C64]) -> LinComb<K> {
        let mut acc = LinComb::zero();
        for (c, b) in v.iter().zip(&self.basis) {
            if *c != c64(0.0, 0.0) {
                acc = acc.axpy(*c, b);
            }
        }
        acc
    }

    /// `ψ(bᵢ)` for all basis elements.
    pub fn functional_vector(&self, psi: &LinearFunctional<K>) -> Result<Vec<C64>>
    where
        K: std::hash::Hash + Eq + Send + Sync + 'static,
    {
        self.basis.iter().map(|b| psi.eval(b)).collect()
    }
}

/// Smallest Δ-closed span containing `p`: a fixpoint that keeps adding the
/// column and row spaces of the coefficient matrix of `Δv` for every new
/// direction `v`.
pub fn subcoalgebra_of<B: Coalgebra + ?Sized>(
    p: &LinComb<B::Key>,
    b: &B,
    dim_cap: usize,
) -> Result<Subcoalgebra<B::Key>> {
    if dim_cap == 0 {
        return Err(Error::InvalidParameter("dimension cap must be at least 1".into()));
    }
    let mut basis: Vec<LinComb<B::Key>> = Vec::new();
    let mut pivots: Vec<B::Key> = Vec::new();
    let mut queue: VecDeque<LinComb<B::Key>> = VecDeque::new();
    queue.push_back(p.clone());
    while let Some(v) = queue.pop_front() {
        let scale = v.max_abs();
        if scale == 0.0 {
            continue;
        }
        let r = reduce(&basis, &pivots, &v);
        if r.max_abs() <= PIVOT_TOL * scale.max(1.0) {
            continue;
        }
        if basis.len() == dim_cap {
            return Err(Error::DimCapExceeded(dim_cap));
        }
        // pivot on the largest coefficient (first in key order on ties)
        let (pk, pc) = r
            .iter()
            .fold(None::<(&B::Key, C64)>, |best, (k, c)| match best {
                Some((_, bc)) if bc.norm() >= c.norm() => best,
                _ => Some((k, *c)),
            })
            .map(|(k, c)| (k.clone(), c))
            .expect("non-zero residual");
        let mut nv = r.scale(c64(1.0, 0.0) / pc);
        nv.prune();
        for bj in basis.iter_mut() {
            let c = bj.coeff(&pk);
            if c != c64(0.0, 0.0) {
                *bj = bj.axpy(-c, &nv);
            }
        }
        let d = coproduct(b, &nv)?;
        let mut cols: HashMap<B::Key, LinComb<B::Key>> = HashMap::new();
        let mut rows: HashMap<B::Key, LinComb<B::Key>> = HashMap::new();
        for ((u, w), c) in d.iter() {
            cols.entry(w.clone()).or_insert_with(LinComb::zero).add_term(u.clone(), *c);
            rows.entry(u.clone()).or_insert_with(LinComb::zero).add_term(w.clone(), *c);
        }
        let mut legs: Vec<LinComb<B::Key>> = cols.into_values().chain(rows.into_values()).collect();
        legs.sort();
        queue.extend(legs);
        basis.push(nv);
        pivots.push(pk);
    }
    // structure constants read at pivot pairs
    let mut structure = Vec::with_capacity(basis.len());
    let mut closure_residual = 0.0f64;
    let index: HashMap<&B::Key, usize> = pivots.iter().enumerate().map(|(i, k)| (k, i)).collect();
    for bi in &basis {
        let d = coproduct(b, bi)?;
        let mut sc = Vec::new();
        for ((u, w), c) in d.iter() {
            if let (Some(&j), Some(&k)) = (index.get(u), index.get(w)) {
                sc.push((j, k, *c));
            }
        }
        let mut recon = Tensor2::zero();
        for &(j, k, c) in &sc {
            for (u, x) in basis[j].iter() {
                for (w, y) in basis[k].iter() {
                    recon.add_term((u.clone(), w.clone()), c * x * y);
                }
            }
        }
        recon.prune();
        let res = recon.sub(&d).max_abs() / d.max_abs().max(1.0);
        closure_residual = closure_residual.max(res);
        structure.push(sc);
    }
    let counit_vec = basis.iter().map(|v| counit(b, v)).collect();
    Ok(Subcoalgebra { basis, pivots, structure, counit: counit_vec, closure_residual })
}

/// Matrix of `T(ψ) = (id ⊗ ψ)∘Δ` on a subcoalgebra: `M[j][i] = Σₖ c^i_{jk} ψ(bₖ)`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub matrix: DMatrix<C64>,
    pub functional: String,
}

pub fn transfer_matrix<K>(psi: &LinearFunctional<K>, sub: &Subcoalgebra<K>) -> Result<TransferMatrix>
where
    K: Ord + Clone + std::hash::Hash + Eq + std::fmt::Debug + Send + Sync + 'static,
{
    let values = sub.functional_vector(psi)?;
    Ok(TransferMatrix { matrix: transfer_from_values(sub, &values), functional: psi.name().to_string() })
}

/// Transfer matrix from the values `ψ(bₖ)` on the basis.
pub fn transfer_from_values<K: Ord + Clone + std::fmt::Debug>(sub: &Subcoalgebra<K>, values: &[C64]) -> DMatrix<C64> {
    let n = sub.dim();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for &(j, k, c) in sub.structure_constants(i) {
            m[(j, i)] += c * values[k];
        }
    }
    m
}

/// Largest residual `‖M·coords(bᵢ) − coords((id⊗ψ)Δbᵢ)‖` with the right side
/// computed directly from the coproduct.
pub fn transfer_residual<B: Coalgebra + ?Sized>(
    psi: &LinearFunctional<B::Key>,
    sub: &Subcoalgebra<B::Key>,
    tm: &TransferMatrix,
    b: &B,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, bi) in sub.basis().iter().enumerate() {
        let mut direct = LinComb::zero();
        for ((u, w), c) in coproduct(b, bi)?.iter() {
            let v = psi.on_key(w)?;
            if v != c64(0.0, 0.0) {
                direct.add_term(u.clone(), c * v);
            }
        }
        direct.prune();
        let lhs = tm.matrix.column(i).into_owned();
        let rhs = sub.coords(&direct)?;
        worst = worst.max((lhs - rhs).camax());
    }
    Ok(worst)
}

/// Largest power probed for exact nilpotency in [`expm`].
const NILPOTENT_PROBE: usize = 8;

/// `exp(A)` by scaling-and-squaring with Padé approximation; a finite Taylor
/// sum when some power `A^k`, `k <= 8`, vanishes exactly.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let zero = c64(0.0, 0.0);
    let n = a.nrows();
    let mut sum = DMatrix::identity(n, a.ncols());
    if n <= 64 {
        let mut term = a.clone();
        for k in 1..=NILPOTENT_PROBE.min(n) {
            if term.iter().all(|z| *z == zero) {
                return sum;
            }
            sum += &term;
            term = &term * a * c64(1.0 / (k + 1) as f64, 0.0);
        }
        if term.iter().all(|z| *z == zero) {
            return sum;
        }
    } else if a.iter().all(|z| *z == zero) {
        return sum;
    }
    a.exp()
}

/// `δ(exp(tM)·v)`.
pub fn conv_exp_on<K: Ord + Clone + std::fmt::Debug>(
    sub: &Subcoalgebra<K>,
    m: &DMatrix<C64>,
    t: f64,
    v: &DVector<C64>,
) -> C64 {
    let eps = DVector::from_column_slice(sub.counit_vector());
    if t == 0.0 {
        return eps.dot(v);
    }
    let e = expm(&(m * c64(t, 0.0)));
    eps.dot(&(e * v))
}

/// `e_⋆^{tψ}(p) = δ ∘ exp(t·T(ψ))(p)` on the subcoalgebra generated by `p`.
pub fn conv_exp<B: Coalgebra + ?Sized>(psi: &LinearFunctional<B::Key>, t: f64, p: &LinComb<B::Key>, b: &B) -> Result<C64> {
    conv_exp_capped(psi, t, p, b, DEFAULT_DIM_CAP)
}

pub fn conv_exp_capped<B: Coalgebra + ?Sized>(
    psi: &LinearFunctional<B::Key>,
    t: f64,
    p: &LinComb<B::Key>,
    b: &B,
    dim_cap: usize,
) -> Result<C64> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be finite, got {t}")));
    }
    if t == 0.0 {
        return Ok(counit(b, p));
    }
    let sub = subcoalgebra_of(p, b, dim_cap)?;
    if sub.dim() == 0 {
        return Ok(c64(0.0, 0.0));
    }
    let tm = transfer_matrix(psi, &sub)?;
    let v = sub.coords(p)?;
    Ok(conv_exp_on(&sub, &tm.matrix, t, &v))
}

/// Value and number of terms of the power series oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: C64,
    pub terms: usize,
}

/// Maximal number of series terms before giving up.
pub const SERIES_MAX_TERMS: usize = 64;
const SERIES_MIN_TERMS: usize = 8;

/// Partial sums of `Σ tⁿ ψ^{⋆n}(p)/n!` with `ψ^{⋆n} = ψ^{⋆(n−1)} ⋆ ψ`,
/// stopping once three consecutive increments are below `tol`.
pub fn conv_exp_series<B: Coalgebra + 'static>(
    psi: &LinearFunctional<B::Key>,
    t: f64,
    p: &LinComb<B::Key>,
    b: &Arc<B>,
    tol: f64,
) -> Result<SeriesValue> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let mut power = LinearFunctional::counit_of(b.clone());
    let mut sum = c64(0.0, 0.0);
    let mut coeff = 1.0f64;
    let mut last_significant = 0usize;
    let mut small_run = 0usize;
    for n in 0..SERIES_MAX_TERMS {
        if n > 0 {
            power = convolve(b.clone(), &power, psi);
            coeff *= t / n as f64;
        }
        let term = power.eval(p)? * coeff;
        sum += term;
        if term.norm() >= tol {
            last_significant = n;
            small_run = 0;
        } else {
            small_run += 1;
        }
        if n + 1 >= SERIES_MIN_TERMS && small_run >= 3 {
            return Ok(SeriesValue { value: sum, terms: last_significant + 1 });
        }
    }
    Err(Error::NonConvergence(SERIES_MAX_TERMS))
}

struct KeyData<K: Ord> {
    sub: Subcoalgebra<K>,
    matrix: DMatrix<C64>,
    coords: DVector<C64>,
}

/// The convolution semigroup `φ_t = e_⋆^{tψ}` with per-key subcoalgebras and
/// write-once value caches keyed by `(t, key)`.
pub struct ConvolutionSemigroup<B: Coalgebra> {
    bialgebra: Arc<B>,
    psi: LinearFunctional<B::Key>,
    dim_cap: usize,
    keys: RwLock<HashMap<B::Key, Arc<KeyData<B::Key>>>>,
    values: RwLock<HashMap<(u64, B::Key), C64>>,
}

impl<B: Coalgebra + 'static> ConvolutionSemigroup<B> {
    pub fn new(bialgebra: Arc<B>, psi: LinearFunctional<B::Key>) -> Arc<Self> {
        Self::with_cap(bialgebra, psi, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(bialgebra: Arc<B>, psi: LinearFunctional<B::Key>, dim_cap: usize) -> Arc<Self> {
        Arc::new(Self {
            bialgebra,
            psi,
            dim_cap,
            keys: RwLock::new(HashMap::new()),
            values: RwLock::new(HashMap::new()),
        })
    }

    pub fn bialgebra(&self) -> &Arc<B> {
        &self.bialgebra
    }

    pub fn generator(&self) -> &LinearFunctional<B::Key> {
        &self.psi
    }

    fn key_data(&self, k: &B::Key) -> Result<Arc<KeyData<B::Key>>> {
        if let Some(d) = self.keys.read().expect("semigroup cache poisoned").get(k) {
            return Ok(d.clone());
        }
        let p = LinComb::single(k.clone(), c64(1.0, 0.0));
        let sub = subcoalgebra_of(&p, &*self.bialgebra, self.dim_cap)?;
        let matrix = transfer_matrix(&self.psi, &sub)?.matrix;
        let coords = sub.coords(&p)?;
        let d = Arc::new(KeyData { sub, matrix, coords });
        self.keys.write().expect("semigroup cache poisoned").entry(k.clone()).or_insert_with(|| d.clone());
        Ok(d)
    }

    /// `φ_t(k)` on a basis key.
    pub fn on_key(&self, t: f64, k: &B::Key) -> Result<C64> {
        if t == 0.0 {
            return Ok(self.bialgebra.counit_key(k));
        }
        let tag = (t.to_bits(), k.clone());
        if let Some(v) = self.values.read().expect("semigroup cache poisoned").get(&tag) {
            return Ok(*v);
        }
        let d = self.key_data(k)?;
        let v = conv_exp_on(&d.sub, &d.matrix, t, &d.coords);
        self.values.write().expect("semigroup cache poisoned").entry(tag).or_insert(v);
        Ok(v)
    }

    /// `φ_t(p)`.
    pub fn eval(&self, t: f64, p: &LinComb<B::Key>) -> Result<C64> {
        let mut s = c64(0.0, 0.0);
        for (k, c) in p.iter() {
            s += c * self.on_key(t, k)?;
        }
        Ok(s)
    }

    /// `φ_t` as a functional.
    pub fn functional(self: &Arc<Self>, t: f64) -> LinearFunctional<B::Key> {
        let me = self.clone();
        LinearFunctional::new(format!("phi_{t}"), self.psi.is_hermitian(), move |k| me.on_key(t, k))
    }

    /// Number of distinct `(t, key)` evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.values.read().expect("semigroup cache poisoned").len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bialg::{convolve_eval, involute, multiply};
    use crate::constructions::{make_azema, make_grouplike, make_unitary_bialgebra};
    use crate::ncpoly::{one, Word};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn azema_x_generates_three_dimensions() {
        let (az, _, psi) = make_azema(2.0).unwrap();
        let x = az.parse("x").unwrap();
        let sub = subcoalgebra_of(&x, &*az, 64).unwrap();
        assert_eq!(sub.dim(), 3);
        for s in ["1", "x", "y"] {
            assert!(sub.coords(&az.parse(s).unwrap()).is_ok(), "{s}");
        }
        assert!(sub.closure_residual() < 1e-12);
        let tm = transfer_matrix(&psi, &sub).unwrap();
        assert!(tm.matrix.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn azema_xxstar_generates_eight_dimensions() {
        let (az, _, psi) = make_azema(2.0).unwrap();
        let p = az.parse("x x^*").unwrap();
        let sub = subcoalgebra_of(&p, &*az, 64).unwrap();
        assert_eq!(sub.dim(), 8);
        for s in ["1", "x", "x^*", "y", "y^2", "x y", "x^* y", "x x^*"] {
            assert!(sub.coords(&az.parse(s).unwrap()).is_ok(), "{s}");
        }
        assert!(sub.coords(&az.parse("x^* x").unwrap()).is_err());
        let tm = transfer_matrix(&psi, &sub).unwrap();
        assert!(transfer_residual(&psi, &sub, &tm, &*az).unwrap() < 1e-12);
    }

    #[test]
    fn counit_transfer_is_identity() {
        let (az, _, _) = make_azema(0.5).unwrap();
        let delta = LinearFunctional::counit_of(az.clone());
        let p = az.parse("x x^* y + x^* y^2").unwrap();
        let sub = subcoalgebra_of(&p, &*az, 64).unwrap();
        let tm = transfer_matrix(&delta, &sub).unwrap();
        let id = DMatrix::<C64>::identity(sub.dim(), sub.dim());
        assert!((tm.matrix - id).camax() < 1e-14);
    }

    #[test]
    fn grouplike_is_one_dimensional() {
        let (az, _, _) = make_azema(2.0).unwrap();
        let (g, _, _) = make_grouplike(&az, 4).unwrap();
        let yh = g.hat_elem(&az.parse("y").unwrap()).unwrap();
        let sub = subcoalgebra_of(&yh, &*g, 8).unwrap();
        assert_eq!(sub.dim(), 1);
        let z = c64(0.3, -1.1);
        let psi = LinearFunctional::new("const", false, move |_| Ok(z));
        let tm = transfer_matrix(&psi, &sub).unwrap();
        assert_eq!(tm.matrix[(0, 0)], z);
        let v = conv_exp(&psi, 0.7, &yh, &*g).unwrap();
        assert!(close(v, (z * 0.7).exp(), 1e-13));
    }

    #[test]
    fn dim_cap_is_enforced() {
        let (az, _, _) = make_azema(2.0).unwrap();
        let p = az.parse("x x^* y").unwrap();
        assert!(matches!(subcoalgebra_of(&p, &*az, 3), Err(Error::DimCapExceeded(3))));
    }

    #[test]
    fn conv_exp_examples() {
        let (az, _, psi) = make_azema(2.0).unwrap();
        for t in [0.0, 0.3, 1.0, 2.5] {
            assert!(close(conv_exp(&psi, t, &one(), &*az).unwrap(), c64(1.0, 0.0), 1e-14));
            let v = conv_exp(&psi, t, &az.parse("x x^*").unwrap(), &*az).unwrap();
            assert!(close(v, c64(t, 0.0), 1e-12), "{t}: {v}");
        }
        let p = az.parse("3 x y + 2 y^2").unwrap();
        assert_eq!(conv_exp(&psi, 0.0, &p, &*az).unwrap(), c64(2.0, 0.0));
    }

    #[test]
    fn series_examples() {
        let (az, prim, psi) = make_azema(2.0).unwrap();
        let r = conv_exp_series(&psi, 1.3, &one(), &az, 1e-14).unwrap();
        assert_eq!(r.terms, 1);
        assert_eq!(r.value, c64(1.0, 0.0));
        // x is primitive for the primitive structure; ψ(x) = 0, so use a
        // functional with ψ(x) = z
        let z = c64(0.4, 0.2);
        let f = LinearFunctional::new("fx", false, move |w: &Word| Ok(if w.0 == [0] { z } else { c64(0.0, 0.0) }));
        let x = prim.parse("x").unwrap();
        let r = conv_exp_series(&f, 0.8, &x, &prim, 1e-15).unwrap();
        assert!(close(r.value, z * 0.8, 1e-15));
        assert!(close(conv_exp(&f, 0.8, &x, &*prim).unwrap(), z * 0.8, 1e-14));
    }

    #[test]
    fn series_matches_matrix_exponential() {
        let (az, _, psi) = make_azema(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let p = az.algebra().random_poly(&mut rng, 4, 3).unwrap();
            let t = rng.gen_range(0.0..2.0);
            let a = conv_exp(&psi, t, &p, &*az).unwrap();
            let b = conv_exp_series(&psi, t, &p, &az, 1e-14).unwrap().value;
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn semigroup_law_and_positivity() {
        let (az, _, psi) = make_azema(2.0).unwrap();
        let sg = ConvolutionSemigroup::new(az.clone(), psi.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let p = az.algebra().random_poly(&mut rng, 3, 3).unwrap();
            let (s, t) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let lhs = convolve_eval(&*az, &[&sg.functional(s), &sg.functional(t)], &p).unwrap();
            let rhs = sg.eval(s + t, &p).unwrap();
            assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
            let pp = multiply(&*az, &involute(&*az, &p).unwrap(), &p).unwrap();
            let v = sg.eval(t, &pp).unwrap();
            assert!(v.re >= -1e-10 && v.im.abs() <= 1e-10 * v.re.abs().max(1.0), "{v}");
        }
    }

    #[test]
    fn subcoalgebra_choice_is_irrelevant() {
        let (az, _, psi) = make_azema(0.5).unwrap();
        let p = az.parse("x x^* y").unwrap();
        let q = az.parse("x^* y^3 + x y x^*").unwrap();
        let small = subcoalgebra_of(&p, &*az, 128).unwrap();
        let big = subcoalgebra_of(&p.add(&q), &*az, 128).unwrap();
        assert!(big.dim() > small.dim());
        for t in [0.2, 1.0, 1.7] {
            let a = conv_exp_on(&small, &transfer_matrix(&psi, &small).unwrap().matrix, t, &small.coords(&p).unwrap());
            let b = conv_exp_on(&big, &transfer_matrix(&psi, &big).unwrap().matrix, t, &big.coords(&p).unwrap());
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn unitary_subcoalgebras_close() {
        let u2 = make_unitary_bialgebra(2).unwrap();
        let p = u2.parse("x11 x21^* + x12").unwrap();
        let sub = subcoalgebra_of(&p, &*u2, 64).unwrap();
        assert!(sub.closure_residual() < 1e-12);
        assert!(sub.dim() >= 4);
    }

    #[test]
    fn expm_is_exact_on_nilpotent_matrices() {
        let mut g = DMatrix::<C64>::zeros(4, 4);
        g[(0, 2)] = c64(1.5, -0.25);
        g[(0, 3)] = c64(-0.75, 0.5);
        g[(1, 3)] = c64(0.5, 1.0);
        let e = expm(&g);
        assert_eq!(e, DMatrix::identity(4, 4) + &g);
        let a = DMatrix::from_fn(3, 3, |i, j| c64(0.1 * (i + 2 * j) as f64, 0.05 * i as f64));
        assert!((expm(&a) - a.clone().exp()).camax() < 1e-12);
    }
}
