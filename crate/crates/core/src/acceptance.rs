//! The acceptance criteria as runnable checks: each one builds its objects,
//! evaluates the quantities at the stated tolerances and reports pass/fail
//! with the measured numbers.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bialg::{convolve_eval, counit, BialgebraSpec};
use crate::constructions::{
    make_azema, make_grouplike, make_induced_tensor, make_unitary_bialgebra, unitary_index, Morphism,
};
use crate::fock::{
    cross_check, exp_tail_bound, exponential_vector, unitary_product_evolution, ExactProductGram, FockFactor,
};
use crate::gns::{azema_triple, gns_construct, unitary_triple, UnitaryTripleParams};
use crate::gram::{convergence_sweep, reverse_check, theta_expand, theta_gram_chain, GramEngine, Partition, Sweep};
use crate::ncpoly::{NcPoly, Word};
use crate::subcoalg::bounds::{banach_product_check, random_family, random_partition, MatrixFamily};
use crate::subcoalg::{conv_exp, conv_exp_series, ConvolutionSemigroup};
use crate::{c64, LinComb, Result, C64};

/// Result of one criterion: whether its target was met, and the numbers behind it.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn azema(q: f64) -> Result<(Arc<BialgebraSpec>, Arc<BialgebraSpec>, Arc<ConvolutionSemigroup<BialgebraSpec>>)> {
    let (az, prim, psi) = make_azema(q)?;
    let sg = ConvolutionSemigroup::new(az.clone(), psi);
    Ok((az, prim, sg))
}

fn oracle_equivalence(seed: u64) -> Result<Outcome> {
    let start = Instant::now();
    let (az, _, sg) = azema(2.0)?;
    let psi = sg.generator().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = az.algebra().random_poly(&mut rng, 4, 4)?;
        for t in [0.1, 1.0, 2.0] {
            let a = conv_exp(&psi, t, &p, &*az)?;
            let b = conv_exp_series(&psi, t, &p, &az, 1e-15)?.value;
            worst = worst.max((a - b).norm());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-10 && secs < 30.0, format!("max |Δ| = {worst:.2e}, {secs:.2} s"))
}

fn semigroup_law(seed: u64) -> Result<Outcome> {
    let (az, _, sg) = azema(2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = az.algebra().random_poly(&mut rng, 4, 4)?;
        let s: f64 = rng.gen_range(0.0..1.5);
        let t: f64 = rng.gen_range(0.0..1.5);
        let lhs = convolve_eval(&*az, &[&sg.functional(s), &sg.functional(t)], &p)?;
        let rhs = sg.eval(s + t, &p)?;
        worst = worst.max((lhs - rhs).norm());
    }
    outcome(worst <= 1e-9, format!("max |φ_s⋆φ_t − φ_(s+t)| = {worst:.2e}"))
}

fn closed_form_moments(_seed: u64) -> Result<Outcome> {
    let mut worst_az = 0.0f64;
    for q in [-1.0, 0.5, 2.0] {
        let (az, _, sg) = azema(q)?;
        let xxs = az.parse("x x^*")?;
        for t in [0.3, 1.0, 2.5] {
            worst_az = worst_az.max((sg.eval(t, &xxs)? - c64(t, 0.0)).norm());
        }
    }
    let (az, prim, psi) = make_azema(2.0)?;
    let w = az.parse("x + x^*")?;
    let alg = az.algebra();
    let w4 = alg.multiply(&alg.multiply(&w, &w)?, &alg.multiply(&w, &w)?)?;
    let mut worst_w = 0.0f64;
    for t in [0.3, 1.0, 2.5] {
        worst_w = worst_w.max((conv_exp(&psi, t, &w4, &*prim)? - c64(3.0 * t * t, 0.0)).norm());
    }
    outcome(
        worst_az <= 1e-10 && worst_w <= 1e-8,
        format!("Azéma φ_t(xx*) err {worst_az:.2e}; Wiener 4th moment err {worst_w:.2e}"),
    )
}

fn gns_reproduction(_seed: u64) -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut dims = Vec::new();
    for q in [2.0, 0.5, -1.0] {
        let (az, _, psi) = make_azema(q)?;
        let t = gns_construct(&psi, &az, 4, 1e-9)?;
        dims.push(t.k_dim());
        if t.k_dim() != 1 {
            continue;
        }
        let p = |s: &str| az.parse(s);
        worst = worst
            .max((t.eta(&p("x^*")?)[0] - c64(1.0, 0.0)).norm())
            .max(t.eta(&p("x")?)[0].norm())
            .max(t.rho(&p("x")?)[(0, 0)].norm())
            .max((t.rho(&p("y")?)[(0, 0)] - c64(q, 0.0)).norm());
    }
    outcome(
        dims.iter().all(|&d| d == 1) && worst <= 1e-12,
        format!("kDim {dims:?}, max deviation {worst:.2e} (q = 2, 0.5, −1)"),
    )
}

fn trotter_bound(seed: u64) -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 5);
    let mut failures = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut cond_ok = true;
    for _ in 0..1000 {
        let fam = random_family(&mut rng, 4, 0.25);
        for _ in 0..20 {
            let part = random_partition(&mut rng, 1.0, fam.r_max)?;
            let rep = banach_product_check(&fam, &part, 1, &mut rng)?;
            cond_ok &= rep.remainder_condition_ok;
            if !rep.passes {
                failures += 1;
            }
            worst_ratio = worst_ratio.max(rep.max_lhs / rep.bound);
        }
    }
    // G² = 0 without remainder: the product is exactly I + (t−s)G
    let mut nil = DMatrix::<C64>::zeros(4, 4);
    nil[(0, 2)] = c64(1.3, -0.4);
    nil[(0, 3)] = c64(-0.7, 0.2);
    nil[(1, 3)] = c64(0.5, 0.9);
    let mut nil_worst = 0.0f64;
    let fam = MatrixFamily::exact(nil, 0.25);
    for _ in 0..20 {
        let part = random_partition(&mut rng, 1.0, 0.25)?;
        nil_worst = nil_worst.max(banach_product_check(&fam, &part, 1, &mut rng)?.max_lhs);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && cond_ok && nil_worst <= 1e-13 && secs < 60.0,
        format!(
            "20000 checks, {failures} violations, max LHS/bound {worst_ratio:.3}; nilpotent LHS {nil_worst:.1e}; {secs:.2} s"
        ),
    )
}

const DYADIC: [usize; 6] = [2, 4, 8, 16, 32, 64];

fn sweep_ok(s: &Sweep) -> (bool, String) {
    let mono = s.defects_monotone_from(8, 1e-13);
    let d8 = s.defect_at(8).unwrap_or(f64::NAN);
    let d64 = s.defect_at(64).unwrap_or(f64::NAN);
    let ratio = d64 <= d8 / 4.0 + 1e-14;
    let cauchy = s.cauchy_monotone(1e-13);
    (mono && ratio && cauchy, format!("d8 {d8:.2e} d64 {d64:.2e} C {:.3}", s.fitted_constant))
}

fn transformation_convergence(_seed: u64) -> Result<Outcome> {
    let (az, prim, sg) = azema(2.0)?;
    let (_, _, psi) = make_azema(2.0)?;
    let sg_prim = ConvolutionSemigroup::new(prim.clone(), psi);
    let id: Morphism<Word, Word> = Morphism::identity();
    let (g, kappa, kt) = make_grouplike(&az, 8)?;
    let x = az.parse("x")?;
    let mut all = true;
    let mut parts = Vec::new();
    let mut run = |label: &str, s: Result<Sweep>| -> Result<()> {
        let (ok, d) = sweep_ok(&s?);
        all &= ok;
        parts.push(format!("{label}: {} ({d})", if ok { "ok" } else { "FAIL" }));
        Ok(())
    };
    let cx = kt.on_key(&vec![Word::letter(0)])?;
    run("group-like c=x", convergence_sweep(&cx, &cx, &g, &kappa, &sg, 0.0, 1.0, &DYADIC))?;
    run("Azéma→primitive c=x", convergence_sweep(&x, &x, &az, &id, &sg_prim, 0.0, 1.0, &DYADIC))?;
    run("primitive→Azéma c=x", convergence_sweep(&x, &x, &prim, &id, &sg, 0.0, 1.0, &DYADIC))?;
    // elements with non-vanishing defects
    let cxs = kt.on_key(&vec![Word::letter(1)])?;
    run("group-like c=x*", convergence_sweep(&cxs, &cxs, &g, &kappa, &sg, 0.0, 1.0, &DYADIC))?;
    let xsxs = az.parse("x^* x^*")?;
    run("Azéma→primitive c=x*x*", convergence_sweep(&xsxs, &xsxs, &az, &id, &sg_prim, 0.0, 1.0, &DYADIC))?;
    run("primitive→Azéma c=x*x*", convergence_sweep(&xsxs, &xsxs, &prim, &id, &sg, 0.0, 1.0, &DYADIC))?;
    outcome(all, parts.join("; "))
}

fn reverse_transformation(_seed: u64) -> Result<Outcome> {
    let (az, _, sg) = azema(2.0)?;
    let (g, kappa, kt) = make_grouplike(&az, 8)?;
    let (t, _, _) = make_induced_tensor(&az, 8)?;
    let mut all = true;
    let mut parts = Vec::new();
    for src in ["x", "x^*", "x^* x^* + y"] {
        let b = az.parse(src)?;
        let rc = reverse_check(&b, &b, &t, &kt, &g, &kappa, &sg, 0.0, 1.0, &[8, 16, 32, 64], 4)?;
        let (d8, d64) = (rc.defect_at(8).unwrap(), rc.defect_at(64).unwrap());
        // the absolute target applies to b = d = x; the others check the rate
        let ok = (src != "x" || d64 <= 1e-2) && d64 <= d8 / 4.0 + 1e-14;
        all &= ok;
        parts.push(format!("b=d={src}: d8 {d8:.2e} d64 {d64:.2e}"));
    }
    outcome(all, parts.join("; "))
}

fn exponential_vectors(seed: u64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 8);
    let mut all = true;
    let mut worst_ratio = 0.0f64;
    for m in [1usize, 2, 3] {
        let f = FockFactor::new(m, 10)?;
        for _ in 0..30 {
            let mut draw = || {
                let v = DVector::from_fn(m, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                let n = v.norm();
                v * c64(rng.gen_range(0.0..1.0) / n.max(1e-12), 0.0)
            };
            let (kf, kg) = (draw(), draw());
            let iv = (0.0, rng.gen_range(0.1..1.0));
            let (ef, _) = exponential_vector(&kf, iv, &f)?;
            let (eg, _) = exponential_vector(&kg, iv, &f)?;
            let fg = kf.dotc(&kg) * c64(iv.1 - iv.0, 0.0);
            let err = (ef.inner(&eg)? - fg.exp()).norm();
            let bound = exp_tail_bound(fg.norm(), 10);
            all &= err <= bound * (1.0 + 1e-9) + 1e-15;
            worst_ratio = worst_ratio.max(err - bound);
        }
    }
    let f1 = FockFactor::new(1, 10)?;
    let (e, _) = exponential_vector(&DVector::from_element(1, c64(1.0, 0.0)), (0.0, 1.0), &f1)?;
    let unit = (e.inner(&e)?.re - 1f64.exp()).abs();
    outcome(all && unit <= 3e-8, format!("max (err − tail) {worst_ratio:.1e}; unit case {unit:.2e}"))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.1e}")).collect::<Vec<_>>().join(" ")
}

fn u1_params() -> UnitaryTripleParams {
    UnitaryTripleParams {
        d: 1,
        m: 1,
        w: DMatrix::identity(1, 1),
        l: vec![DVector::from_element(1, c64(0.3, 0.0))],
        h: DMatrix::from_element(1, 1, c64(0.5, 0.0)),
    }
}

fn unitary_evolution(_seed: u64) -> Result<Outcome> {
    let factor = FockFactor::new(1, 8)?;
    let t = 0.25;
    let mut vac = Vec::new();
    let mut uni = Vec::new();
    for n in [4usize, 8, 16, 32, 64] {
        let ev = unitary_product_evolution(&u1_params(), &Partition::uniform(0.0, t, n)?, &factor, 2)?;
        vac.push(ev.vacuum_defect());
        uni.push(ev.unitarity_defect);
    }
    let vac_dec = vac.windows(2).all(|w| w[1] < w[0]);
    let mut uni_ok = false;
    for (i, d) in uni.iter().enumerate() {
        if *d < 1e-4 {
            uni_ok = true;
            break;
        }
        if i + 1 < uni.len() && uni[i + 1] >= *d {
            break;
        }
    }
    let v32 = vac[3];
    // the one-particle compression scales like 2rℓ²; it drops below 1e-4 only at far finer meshes
    let fine = unitary_product_evolution(&u1_params(), &Partition::uniform(0.0, t, 1024)?, &factor, 1)?.unitarity_defect;
    let at_one = unitary_product_evolution(&u1_params(), &Partition::uniform(0.0, 1.0, 32)?, &factor, 2)?.vacuum_defect();
    outcome(
        v32 <= 1e-3 && vac_dec && uni_ok,
        format!(
            "t = {t}: vacuum defect n=32 {v32:.2e} ({}); unitarity defect (≤2 particles) {}; one-particle defect n=1024 {fine:.1e}; at t = 1, n = 32: {at_one:.2e}",
            fmt_list(&vac),
            fmt_list(&uni)
        ),
    )
}

fn cross_path(_seed: u64) -> Result<Outcome> {
    let (az, _, psi) = make_azema(2.0)?;
    let triple = azema_triple(&az, 2.0, psi)?;
    let p = |s: &str| az.parse(s);
    let pairs = vec![
        (p("x^*")?, p("x^*")?),
        (p("x + x^*")?, p("x + x^*")?),
        (p("x^* x^* + y")?, p("x^* y")?),
        (p("1")?, p("y")?),
    ];
    let mut rows = cross_check(&triple, &pairs, 0.0, 1.0, &[2, 4, 8, 16], 8)?;
    let u1 = make_unitary_bialgebra(1)?;
    let ut = unitary_triple(&u1_params(), &u1)?;
    let x = NcPoly::single(Word::letter(unitary_index(1, 0, 0, false)), c64(1.0, 0.0));
    let xs = NcPoly::single(Word::letter(unitary_index(1, 0, 0, true)), c64(1.0, 0.0));
    let one = crate::ncpoly::one();
    rows.extend(cross_check(&ut, &[(one.clone(), x.clone()), (x.clone(), x.clone()), (xs.clone(), x.clone())], 0.0, 1.0, &[2, 4, 8, 16], 8)?);
    // the unitary product evolution's vacuum amplitude against the exact chain
    let factor = FockFactor::new(1, 8)?;
    let mut worst_u = 0.0f64;
    for n in [2usize, 4, 8, 16] {
        let ev = unitary_product_evolution(&u1_params(), &Partition::uniform(0.0, 1.0, n)?, &factor, 1)?;
        let exact = ExactProductGram::new(&ut, 1.0 / n as f64)?.eval(n, &one, &x)?;
        worst_u = worst_u.max((ev.vacuum_amplitudes[(0, 0)] - exact).norm());
    }
    let failed = rows.iter().filter(|r| !r.passes).count();
    let worst = rows.iter().map(|r| r.diff).fold(0.0, f64::max);
    outcome(
        failed == 0 && worst_u <= 1e-12,
        format!("{} comparisons, {failed} outside tolerance, max |Δ| {worst:.2e}; U⟨1⟩ amplitude |Δ| {worst_u:.2e}", rows.len()),
    )
}

fn evaluation_orders(seed: u64) -> Result<Outcome> {
    let (az, prim, sg) = azema(2.0)?;
    let (g, kappa, _) = make_grouplike(&az, 6)?;
    let id: Morphism<Word, Word> = Morphism::identity();
    let engine = GramEngine::new(sg.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 11);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = rng.gen_range(1..5);
        let t: f64 = rng.gen_range(0.2..2.0);
        let alpha = Partition::uniform(0.0, t, n)?;
        let (r1, r2) = match i % 3 {
            0 | 1 => {
                let src = if i % 3 == 0 { az.clone() } else { prim.clone() };
                let c = src.algebra().random_poly(&mut rng, 2, 3)?;
                let d = src.algebra().random_poly(&mut rng, 2, 3)?;
                let a = theta_expand(&c, &*src, &id, &alpha)?;
                let b = theta_expand(&d, &*src, &id, &alpha)?;
                (engine.gram(&a, &b)?, theta_gram_chain(&c, &d, &src, &id, &sg, 0.0, t, n)?)
            }
            _ => {
                let mut hat = |deg| -> Result<LinComb<NcPoly>> {
                    let unital = |p: NcPoly| p.axpy(c64(1.0, 0.0) - counit(&*az, &p), &crate::ncpoly::one());
                    let p = unital(az.algebra().random_poly(&mut rng, deg, 2)?);
                    let q = unital(az.algebra().random_poly(&mut rng, deg, 2)?);
                    Ok(g.hat_elem(&p)?.add(&g.hat_elem(&q)?.scale(c64(0.0, -0.5))))
                };
                let (c, d) = (hat(2)?, hat(2)?);
                let a = theta_expand(&c, &*g, &kappa, &alpha)?;
                let b = theta_expand(&d, &*g, &kappa, &alpha)?;
                (engine.gram(&a, &b)?, theta_gram_chain(&c, &d, &g, &kappa, &sg, 0.0, t, n)?)
            }
        };
        worst = worst.max((r1 - r2).norm() / r1.norm().max(1.0));
    }
    outcome(worst <= 1e-12, format!("50 instances, max relative |Δ| {worst:.2e}"))
}

/// Default seed for every randomized criterion.
pub const DEFAULT_SEED: u64 = 20080131;

/// One acceptance criterion.
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    /// `false` when the target is out of reach for the construction itself;
    /// such a criterion is still run and reported, never forced to pass.
    pub attainable: bool,
    run: fn(u64) -> Result<Outcome>,
}

impl Criterion {
    /// Runs the check; library errors are reported as a failed outcome.
    pub fn run(&self, seed: u64) -> Outcome {
        (self.run)(seed).unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") })
    }
}

/// All criteria, in order.
pub fn criteria() -> &'static [Criterion] {
    const fn c(id: usize, name: &'static str, attainable: bool, run: fn(u64) -> Result<Outcome>) -> Criterion {
        Criterion { id, name, attainable, run }
    }
    static ALL: [Criterion; 11] = [
        c(1, "oracle equivalence", true, oracle_equivalence),
        c(2, "semigroup law", true, semigroup_law),
        c(3, "closed-form moments", true, closed_form_moments),
        c(4, "GNS reproduction", true, gns_reproduction),
        c(5, "Trotter bound", true, trotter_bound),
        c(6, "transformation convergence", true, transformation_convergence),
        c(7, "reverse transformation", true, reverse_transformation),
        c(8, "exponential vectors", true, exponential_vectors),
        // the unitarity target; see the README
        c(9, "unitary evolution", false, unitary_evolution),
        c(10, "cross-path consistency", true, cross_path),
        c(11, "evaluation orders", true, evaluation_orders),
    ];
    &ALL
}

/// The criterion with the given 1-based id.
pub fn criterion(id: usize) -> Option<&'static Criterion> {
    criteria().iter().find(|c| c.id == id)
}
