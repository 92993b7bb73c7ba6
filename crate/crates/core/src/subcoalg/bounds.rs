//! Checkers for the product-formula bounds: Banach-algebra products
//! `A_{r₁}⋯A_{rₙ} → e^{(t−s)G}` and their coalgebra counterpart for
//! convolution products of functionals `δ + rψ + O(r²)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::bialg::{Coalgebra, LinearFunctional};
use crate::error::{Error, Result};
use crate::lincomb::{c64, LinComb, C64};
use crate::partition::Partition;

use super::{expm, subcoalgebra_of, transfer_matrix, DEFAULT_DIM_CAP};

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Operator norm induced by the max-norm on coordinates (max row sum).
pub fn inf_norm(m: &DMatrix<C64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `‖α‖(t−s)e^{(t−s)max(g, C)}(C² + g²e^{‖α‖g})/2`.
pub fn product_bound(mesh: f64, length: f64, g: f64, c: f64) -> f64 {
    mesh * length * (length * g.max(c)).exp() * (c * c + g * g * (mesh * g).exp()) / 2.0
}

type MatrixRemainder = dyn Fn(f64, usize) -> DMatrix<C64> + Send + Sync;

/// `A_r^{(μ)} = I + rG + 𝔖_r^{(μ)}` with `‖𝔖_r^{(μ)}‖ ≤ r²C²/2` for `r ≤ R`.
#[derive(Clone)]
pub struct MatrixFamily {
    pub g: DMatrix<C64>,
    pub c: f64,
    pub r_max: f64,
    pub n_choices: usize,
    pub remainder: Arc<MatrixRemainder>,
}

impl MatrixFamily {
    pub fn new<F>(g: DMatrix<C64>, c: f64, r_max: f64, n_choices: usize, remainder: F) -> Self
    where
        F: Fn(f64, usize) -> DMatrix<C64> + Send + Sync + 'static,
    {
        Self { g, c, r_max, n_choices: n_choices.max(1), remainder: Arc::new(remainder) }
    }

    /// Family without remainder.
    pub fn exact(g: DMatrix<C64>, r_max: f64) -> Self {
        let n = g.nrows();
        Self::new(g, 0.0, r_max, 1, move |_, _| DMatrix::zeros(n, n))
    }

    pub fn member(&self, r: f64, mu: usize) -> DMatrix<C64> {
        let n = self.g.nrows();
        DMatrix::identity(n, n) + &self.g * c64(r, 0.0) + (self.remainder)(r, mu)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductCheckReport {
    pub max_lhs: f64,
    pub bound: f64,
    pub mesh: f64,
    pub length: f64,
    pub draws: usize,
    /// every sampled remainder satisfied `‖𝔖_r‖ ≤ r²C²/2`
    pub remainder_condition_ok: bool,
    pub passes: bool,
}

/// Random μ-choices on a fixed partition; compares the product with
/// `e^{(t−s)G}` in spectral norm.
pub fn banach_product_check<R: Rng>(
    spec: &MatrixFamily,
    partition: &Partition,
    draws: usize,
    rng: &mut R,
) -> Result<ProductCheckReport> {
    let mesh = partition.mesh();
    if mesh > spec.r_max {
        return Err(Error::MeshTooCoarse { mesh, max: spec.r_max });
    }
    let length = partition.end() - partition.start();
    let n = spec.g.nrows();
    let target = expm(&(&spec.g * c64(length, 0.0)));
    let mut max_lhs = 0.0f64;
    let mut cond_ok = true;
    for _ in 0..draws.max(1) {
        let mut prod = DMatrix::<C64>::identity(n, n);
        for r in partition.increments() {
            let mu = rng.gen_range(0..spec.n_choices);
            let s = (spec.remainder)(r, mu);
            if spectral_norm(&s) > r * r * spec.c * spec.c / 2.0 * (1.0 + 1e-12) + 1e-300 {
                cond_ok = false;
            }
            prod = prod * spec.member(r, mu);
        }
        max_lhs = max_lhs.max(spectral_norm(&(prod - &target)));
    }
    let bound = product_bound(mesh, length, spectral_norm(&spec.g), spec.c);
    Ok(ProductCheckReport {
        max_lhs,
        bound,
        mesh,
        length,
        draws: draws.max(1),
        remainder_condition_ok: cond_ok,
        passes: max_lhs <= bound * (1.0 + 1e-12) + 1e-14,
    })
}

/// Random `n × n` matrix with entries uniform in `[−scale, scale]²`.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| c64(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
}

/// Random family: `G` with entries in `[−1, 1]²`, `C ∈ [0.2, 2)` and three
/// remainder choices `𝔖_r^{(μ)} = (r²C²/2)M_μ` with `‖M_μ‖ < 1`.
pub fn random_family<R: Rng>(rng: &mut R, n: usize, r_max: f64) -> MatrixFamily {
    let g = random_matrix(rng, n, 1.0);
    let c: f64 = rng.gen_range(0.2..2.0);
    let choices: Vec<DMatrix<C64>> = (0..3)
        .map(|_| {
            let m = random_matrix(rng, n, 1.0);
            let s = spectral_norm(&m);
            m * c64(rng.gen_range(0.0..1.0) / s, 0.0)
        })
        .collect();
    MatrixFamily::new(g, c, r_max, 3, move |r, mu| &choices[mu] * c64(r * r * c * c / 2.0, 0.0))
}

/// Random partition of `[0, length]` with 2 to 23 intervals and mesh at most
/// `r_max`, by rejection.
pub fn random_partition<R: Rng>(rng: &mut R, length: f64, r_max: f64) -> Result<Partition> {
    if !(length > 0.0 && r_max > 0.0) || length / r_max > 20.0 {
        return Err(Error::InvalidParameter(format!(
            "random partitions need 0 < length ≤ 20·r_max (length {length}, r_max {r_max})"
        )));
    }
    loop {
        let n = rng.gen_range(2..24);
        let mut pts: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..length)).collect();
        pts.push(0.0);
        pts.push(length);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if let Ok(p) = Partition::new(pts) {
            if p.mesh() <= r_max {
                return Ok(p);
            }
        }
    }
}

type FunctionalMember<K> = dyn Fn(f64, usize) -> Result<LinearFunctional<K>> + Send + Sync;

/// `f_r^{(μ)} = δ + rψ + 𝔕_r^{(μ)}`.
#[derive(Clone)]
pub struct FunctionalFamily<K> {
    pub psi: LinearFunctional<K>,
    pub r_max: f64,
    pub n_choices: usize,
    pub member: Arc<FunctionalMember<K>>,
}

impl<K: Clone + Ord + std::hash::Hash + Eq + Send + Sync + 'static> FunctionalFamily<K> {
    pub fn new<F>(psi: LinearFunctional<K>, r_max: f64, n_choices: usize, member: F) -> Self
    where
        F: Fn(f64, usize) -> Result<LinearFunctional<K>> + Send + Sync + 'static,
    {
        Self { psi, r_max, n_choices: n_choices.max(1), member: Arc::new(member) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoalgebraCheckReport {
    pub lhs: f64,
    /// bound with the constants `C_c = C√κ`, `Ψ_c = ‖G‖√κ`, `κ = max(1, ‖δ‖‖c‖)`
    pub bound: f64,
    /// `‖δ‖‖c‖` times the matrix bound, the sharper form of the same estimate
    pub direct_bound: f64,
    pub subcoalgebra_dim: usize,
    pub c_matrix: f64,
    pub g_norm: f64,
    pub c_c: f64,
    pub psi_c: f64,
    pub mesh: f64,
    pub passes: bool,
}

/// Evaluates `|f^{(μ₁)}_{r₁} ⋆ ⋯ ⋆ f^{(μₙ)}_{rₙ}(p) − e_⋆^{(t−s)ψ}(p)|` on the
/// subcoalgebra of `p` (convolution is composition of transfer matrices)
/// and the bound with constants computed from the increments actually used.
pub fn coalgebra_product_check<B: Coalgebra + ?Sized>(
    spec: &FunctionalFamily<B::Key>,
    p: &LinComb<B::Key>,
    b: &B,
    partition: &Partition,
    choices: &[usize],
) -> Result<CoalgebraCheckReport> {
    let mesh = partition.mesh();
    if mesh > spec.r_max {
        return Err(Error::MeshTooCoarse { mesh, max: spec.r_max });
    }
    let length = partition.end() - partition.start();
    let sub = subcoalgebra_of(p, b, DEFAULT_DIM_CAP)?;
    let dim = sub.dim();
    let v = sub.coords(p)?;
    let eps = nalgebra::DVector::from_column_slice(sub.counit_vector());
    let g = transfer_matrix(&spec.psi, &sub)?.matrix;
    let id = DMatrix::<C64>::identity(dim, dim);
    let mut prod = id.clone();
    let mut c2 = 0.0f64;
    for (j, r) in partition.increments().into_iter().enumerate() {
        let mu = if choices.is_empty() { 0 } else { choices[j % choices.len()] % spec.n_choices };
        let f = (spec.member)(r, mu)?;
        let a = transfer_matrix(&f, &sub)?.matrix;
        let s = &a - &id - &g * c64(r, 0.0);
        c2 = c2.max(2.0 * inf_norm(&s) / (r * r));
        prod *= a;
    }
    let lhs_val = eps.dot(&(prod * &v));
    let exact = eps.dot(&(expm(&(&g * c64(length, 0.0))) * &v));
    let lhs = (lhs_val - exact).norm();
    let c = c2.sqrt();
    let g_norm = inf_norm(&g);
    let delta_norm: f64 = sub.counit_vector().iter().map(|z| z.norm()).sum();
    let p_norm = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let kappa = (delta_norm * p_norm).max(1.0);
    let (c_c, psi_c) = (c * kappa.sqrt(), g_norm * kappa.sqrt());
    let bound = product_bound(mesh, length, psi_c, c_c);
    let direct_bound = delta_norm * p_norm * product_bound(mesh, length, g_norm, c);
    Ok(CoalgebraCheckReport {
        lhs,
        bound,
        direct_bound,
        subcoalgebra_dim: dim,
        c_matrix: c,
        g_norm,
        c_c,
        psi_c,
        mesh,
        passes: lhs <= bound * (1.0 + 1e-12) + 1e-13,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{make_azema, make_grouplike};
    use crate::subcoalg::ConvolutionSemigroup;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<C64> {
        DMatrix::from_fn(n, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn nilpotent_products_telescope() {
        let mut g = DMatrix::<C64>::zeros(2, 2);
        g[(0, 1)] = c64(1.0, 0.0);
        let fam = MatrixFamily::exact(g, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = banach_product_check(&fam, &Partition::uniform(0.0, 2.0, 8).unwrap(), 3, &mut rng).unwrap();
        assert!(r.max_lhs < 1e-14 && r.passes);
        let zero = MatrixFamily::exact(DMatrix::zeros(3, 3), 1.0);
        let r = banach_product_check(&zero, &Partition::uniform(0.0, 1.0, 4).unwrap(), 3, &mut rng).unwrap();
        assert_eq!(r.max_lhs, 0.0);
    }

    #[test]
    fn random_families_respect_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = random_matrix(&mut rng, 4);
        let units: Vec<DMatrix<C64>> = (0..5)
            .map(|_| {
                let m = random_matrix(&mut rng, 4);
                let n = spectral_norm(&m);
                m / c64(n, 0.0)
            })
            .collect();
        let fam = MatrixFamily::new(g, 1.0, 0.5, units.len(), move |r, mu| &units[mu] * c64(r * r / 2.0, 0.0));
        let part = Partition::new(vec![0.0, 0.1, 0.35, 0.4, 0.8, 1.0]).unwrap();
        let rep = banach_product_check(&fam, &part, 1000, &mut rng).unwrap();
        assert!(rep.remainder_condition_ok);
        assert!(rep.passes, "{rep:?}");
        assert!(rep.max_lhs > 0.0);
    }

    #[test]
    fn coarse_mesh_is_rejected() {
        let fam = MatrixFamily::exact(DMatrix::zeros(2, 2), 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = banach_product_check(&fam, &Partition::uniform(0.0, 1.0, 2).unwrap(), 1, &mut rng);
        assert!(matches!(r, Err(Error::MeshTooCoarse { .. })));
    }

    #[test]
    fn grouplike_scalar_products() {
        let (az, _, _) = make_azema(2.0).unwrap();
        let (g, _, _) = make_grouplike(&az, 4).unwrap();
        let yh = g.hat_elem(&az.parse("y + x").unwrap()).unwrap();
        let z = c64(-0.4, 0.9);
        let psi = LinearFunctional::new("z", false, move |_| Ok(z));
        let fam = FunctionalFamily::new(psi, 1.0, 1, move |r, _| {
            Ok(LinearFunctional::new("f_r", false, move |_| Ok(c64(1.0, 0.0) + z * r)))
        });
        let part = Partition::new(vec![0.0, 0.2, 0.3, 0.7, 1.0]).unwrap();
        let rep = coalgebra_product_check(&fam, &yh, &*g, &part, &[]).unwrap();
        let prod: C64 = part.increments().iter().map(|r| c64(1.0, 0.0) + z * *r).product();
        assert!((rep.lhs - (prod - z.exp()).norm()).abs() < 1e-14);
        assert!(rep.passes, "{rep:?}");
    }

    #[test]
    fn azema_semigroup_family_converges() {
        let (az, _, psi) = make_azema(2.0).unwrap();
        let sg = ConvolutionSemigroup::new(az.clone(), psi.clone());
        let fam = FunctionalFamily::new(psi, 1.0, 1, move |r, _| Ok(sg.functional(r)));
        let p = az.parse("x x^*").unwrap();
        let rep = coalgebra_product_check(&fam, &p, &*az, &Partition::uniform(0.0, 1.0, 4).unwrap(), &[]).unwrap();
        assert!(rep.lhs < 1e-12 && rep.passes);
        let one = crate::ncpoly::one();
        let rep = coalgebra_product_check(&fam, &one, &*az, &Partition::uniform(0.0, 1.0, 2).unwrap(), &[]).unwrap();
        assert!(rep.lhs < 1e-15);
    }
}
