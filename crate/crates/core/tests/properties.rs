//! Randomized invariants across the algebra, semigroup, Gram and Fock layers.

use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qlevy::bialg::{check_bialgebra_axioms, coalgebra_law_residuals, BialgebraSpec};
use qlevy::constructions::{make_azema, make_grouplike, make_primitive_tensor, make_unitary_bialgebra, Morphism};
use qlevy::fock::{exp_tail_bound, exponential_vector, quantum_noise_op, FockFactor, NoiseArg, NoiseKind};
use qlevy::gns::{gns_construct, levy_triple_residuals};
use qlevy::gram::{theta_expand, GramEngine, Partition};
use qlevy::ncpoly::{NcPoly, Word};
use qlevy::subcoalg::{conv_exp, conv_exp_series, ConvolutionSemigroup};
use qlevy::{c64, C64};

fn azema(q: f64) -> (Arc<BialgebraSpec>, Arc<BialgebraSpec>, Arc<ConvolutionSemigroup<BialgebraSpec>>) {
    let (az, prim, psi) = make_azema(q).unwrap();
    let sg = ConvolutionSemigroup::new(az.clone(), psi);
    (az, prim, sg)
}

fn q_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(-1.0), Just(0.5), Just(2.0), -3.0f64..-0.1, 0.1f64..3.0]
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normal_form_is_idempotent_and_product_associative(seed in any::<u64>(), q in q_strategy()) {
        let (az, _, _) = azema(q);
        let alg = az.algebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = alg.random_poly(&mut rng, 3, 3).unwrap();
        let r = alg.random_poly(&mut rng, 3, 3).unwrap();
        let s = alg.random_poly(&mut rng, 2, 3).unwrap();
        let nf = alg.normal_form(&p).unwrap();
        prop_assert_eq!(alg.normal_form(&nf).unwrap(), nf);
        let left = alg.multiply(&alg.multiply(&p, &r).unwrap(), &s).unwrap();
        let right = alg.multiply(&p, &alg.multiply(&r, &s).unwrap()).unwrap();
        prop_assert!(left.sub(&right).max_abs() <= 1e-9 * left.max_abs().max(1.0));
    }

    #[test]
    fn involution_is_antimultiplicative(seed in any::<u64>(), q in q_strategy()) {
        let (az, _, _) = azema(q);
        let alg = az.algebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = alg.random_poly(&mut rng, 3, 3).unwrap();
        let r = alg.random_poly(&mut rng, 3, 3).unwrap();
        let lhs = alg.involute(&alg.multiply(&p, &r).unwrap()).unwrap();
        let rhs = alg.multiply(&alg.involute(&r).unwrap(), &alg.involute(&p).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-9 * lhs.max_abs().max(1.0));
        let pp = alg.involute(&alg.involute(&p).unwrap()).unwrap();
        prop_assert!(pp.sub(&alg.normal_form(&p).unwrap()).max_abs() <= 1e-12 * p.max_abs().max(1.0));
    }

    #[test]
    fn bialgebra_axioms_hold(seed in any::<u64>(), q in q_strategy()) {
        let (az, prim, _) = azema(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for b in [&az, &prim] {
            let rep = check_bialgebra_axioms(b, 3, 6, &mut rng).unwrap();
            prop_assert!(rep.max_residual() <= 1e-10, "{:?}", rep);
        }
    }

    #[test]
    fn constructed_coalgebras_satisfy_the_laws(seed in any::<u64>()) {
        let (az, _, _) = azema(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, _) = make_primitive_tensor(&az, 6).unwrap();
        let samples = t.sample_elements(&mut rng, 2, 3, 4).unwrap();
        let rep = coalgebra_law_residuals(&*t, &samples).unwrap();
        prop_assert!(rep.coassociativity <= 1e-12 && rep.counit <= 1e-12, "{:?}", rep);
        let (g, _, _) = make_grouplike(&az, 6).unwrap();
        let p = az.algebra().random_poly(&mut rng, 2, 3).unwrap();
        let gp = g.hat_elem(&p.axpy(c64(1.0, 0.0) - az.counit(&p), &qlevy::ncpoly::one())).unwrap();
        let rep = coalgebra_law_residuals(&*g, &[gp]).unwrap();
        prop_assert!(rep.coassociativity <= 1e-12 && rep.counit <= 1e-12, "{:?}", rep);
    }

    #[test]
    fn conv_exp_matches_series_and_semigroup(seed in any::<u64>(), s in 0.0f64..1.5, t in 0.0f64..1.5) {
        let (az, _, sg) = azema(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = az.algebra().random_poly(&mut rng, 3, 3).unwrap();
        let a = sg.eval(t, &p).unwrap();
        let b = conv_exp_series(sg.generator(), t, &p, &az, 1e-15).unwrap().value;
        prop_assert!(rel(a, b) <= 1e-10);
        let lhs = qlevy::bialg::convolve_eval(&*az, &[&sg.functional(s), &sg.functional(t)], &p).unwrap();
        prop_assert!(rel(lhs, sg.eval(s + t, &p).unwrap()) <= 1e-9);
    }

    #[test]
    fn states_are_positive(seed in any::<u64>(), t in 0.0f64..2.0, q in q_strategy()) {
        let (az, prim, sg) = azema(q);
        let alg = az.algebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = alg.random_poly(&mut rng, 3, 3).unwrap();
        let pp = alg.multiply(&alg.involute(&p).unwrap(), &p).unwrap();
        let v = sg.eval(t, &pp).unwrap();
        prop_assert!(v.re >= -1e-10 * pp.max_abs().max(1.0) && v.im.abs() <= 1e-10 * v.norm().max(1.0));
        let w = conv_exp(sg.generator(), t, &pp, &*prim).unwrap();
        prop_assert!(w.re >= -1e-10 * pp.max_abs().max(1.0));
    }

    #[test]
    fn gram_is_hermitian_positive_and_refinement_invariant(seed in any::<u64>(), n1 in 1usize..4, n2 in 1usize..4) {
        let (az, prim, sg) = azema(2.0);
        let id: Morphism<Word, Word> = Morphism::identity();
        let engine = GramEngine::new(sg.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = prim.algebra().random_poly(&mut rng, 2, 2).unwrap();
        let d = prim.algebra().random_poly(&mut rng, 2, 2).unwrap();
        let a = theta_expand(&c, &*prim, &id, &Partition::uniform(0.0, 1.0, n1).unwrap()).unwrap();
        let b = theta_expand(&d, &*prim, &id, &Partition::uniform(0.0, 1.0, n2).unwrap()).unwrap();
        let g = engine.gram(&a, &b).unwrap();
        prop_assert!(rel(g, engine.gram(&b, &a).unwrap().conj()) <= 1e-12);
        let aa = engine.gram(&a, &a).unwrap();
        prop_assert!(aa.re >= -1e-10 && aa.im.abs() <= 1e-12 * aa.norm().max(1.0));
        let gamma = a.partition.union(&b.partition).unwrap().refine_uniform(2).unwrap();
        let ar = a.refine_to(&gamma, &az).unwrap();
        prop_assert!(rel(engine.gram(&ar, &b).unwrap(), g) <= 1e-12);
    }

    #[test]
    fn gns_triples_satisfy_their_identities(q in q_strategy(), seed in any::<u64>()) {
        let (az, _, sg) = azema(q);
        let t = gns_construct(sg.generator(), &az, 4, 1e-9).unwrap();
        let r = levy_triple_residuals(&t, 10, seed).unwrap();
        prop_assert!(r.max() <= 1e-9, "{:?}", r);
    }

    #[test]
    fn ladder_adjoints_and_ccr(m in 1usize..3, cap in 2usize..6, re in proptest::collection::vec(-2.0f64..2.0, 2), len in 0.01f64..2.0) {
        let f = FockFactor::new(m, cap).unwrap();
        let k = DVector::from_fn(m, |i, _| c64(re[i % 2], re[(i + 1) % 2]));
        let iv = (0.5, 0.5 + len);
        let c = quantum_noise_op(NoiseKind::Creation, &NoiseArg::Vector(k.clone()), iv, &f).unwrap();
        let a = quantum_noise_op(NoiseKind::Annihilation, &NoiseArg::Vector(k.clone()), iv, &f).unwrap();
        prop_assert!((c.matrix.adjoint() - &a.matrix).camax() <= 1e-14);
        // [A(k), A*(k)] = (t−s)‖k‖² below the cap
        let p = f.projector(cap - 1);
        let comm = &a.matrix * &c.matrix - &c.matrix * &a.matrix;
        let expected = f.identity() * c64(len * k.norm_squared(), 0.0);
        prop_assert!((&p * (comm - expected) * &p).camax() <= 1e-12 * (1.0 + len * k.norm_squared()));
    }

    #[test]
    fn exponential_vector_gram_within_tail(a in -0.9f64..0.9, b in -0.9f64..0.9, cap in 10usize..16) {
        let f = FockFactor::new(1, cap).unwrap();
        let ka = DVector::from_element(1, c64(a, 0.3 * b));
        let kb = DVector::from_element(1, c64(b, -0.2 * a));
        let (ea, _) = exponential_vector(&ka, (0.0, 1.0), &f).unwrap();
        let (eb, _) = exponential_vector(&kb, (0.0, 1.0), &f).unwrap();
        let fg = ka.dotc(&kb);
        let err = (ea.inner(&eb).unwrap() - fg.exp()).norm();
        prop_assert!(err <= exp_tail_bound(fg.norm(), cap) * (1.0 + 1e-9) + 1e-15);
    }
}

#[test]
fn unitary_bialgebra_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in [1, 2] {
        let b = make_unitary_bialgebra(d).unwrap();
        let rep = check_bialgebra_axioms(&b, 2, 6, &mut rng).unwrap();
        assert!(rep.max_residual() <= 1e-10, "d = {d}: {rep:?}");
    }
    let _ = NcPoly::zero();
}
