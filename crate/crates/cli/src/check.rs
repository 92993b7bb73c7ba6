//! `qlevy check`: residuals of every law the configured objects must
//! satisfy, each against its tolerance.

use qlevy::bialg::{
    check_bialgebra_axioms, coalgebra_law_residuals, counit, hermiticity_residual, BialgebraSpec, StarBialgebra,
};
use qlevy::constructions::{check_counit_preserving, make_grouplike, make_induced_tensor, Morphism};
use qlevy::gns::{check_conditional_positivity, normal_words};
use qlevy::ncpoly::{one, NcPoly, Word};
use qlevy::{c64, LinComb};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::builders::Built;
use crate::error::{CliError, Context};
use crate::setup::{Plan, Setup};

/// Largest Gram basis used for the positivity check.
pub const MAX_POSITIVITY_BASIS: usize = 400;

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    fn push(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        // NaN residuals fail
        let pass = residual <= tolerance;
        self.lines.push(CheckLine { name: name.into(), residual, tolerance, pass });
    }

    pub fn render(&self) -> String {
        let width = self.lines.iter().map(|l| l.name.len()).max().unwrap_or(0);
        let mut s = String::new();
        for l in &self.lines {
            s.push_str(&format!(
                "{:<width$}  {:>10.3e}  (tol {:.1e})  {}\n",
                l.name,
                l.residual,
                l.tolerance,
                if l.pass { "ok" } else { "FAIL" }
            ));
        }
        s
    }
}

/// Largest degree `<= cap` whose normal-word basis stays below
/// [`MAX_POSITIVITY_BASIS`] (at least 1).
pub fn positivity_degree(b: &BialgebraSpec, cap: usize) -> usize {
    (1..=cap.max(1)).take_while(|&k| k == 1 || normal_words(b.algebra(), k).len() <= MAX_POSITIVITY_BASIS).last().unwrap_or(1)
}

fn source_lines<C: StarBialgebra + ?Sized>(
    report: &mut CheckReport,
    setup: &Setup,
    label: &str,
    source: &C,
    kappa: &Morphism<C::Key, Word>,
    samples: &[LinComb<C::Key>],
) -> Result<(), CliError> {
    let tol = &setup.loaded.config.tolerances;
    let laws = coalgebra_law_residuals(source, samples).context(|| format!("{label} laws"))?;
    report.push(format!("{label}.laws"), laws.max_residual(), tol.axioms);
    let r = check_counit_preserving(kappa, source, &**setup.bialgebra(), samples)
        .context(|| format!("{label} structure map"))?;
    report.push(format!("morphism.{}.counit", kappa.name), r, tol.counit);
    Ok(())
}

/// Grid for sample coefficients of group-like elements: dyadic values are
/// kept exactly by the canonical keys of the group-like bialgebra.
const DYADIC_GRID: f64 = 256.0;

/// Samples of `G` from samples of the base: `1 + (p − δ(p))`, with
/// coefficients rounded to a dyadic grid.
fn grouplike_samples(b: &BialgebraSpec, samples: &[NcPoly]) -> Vec<NcPoly> {
    let round = |x: f64| (x * DYADIC_GRID).round() / DYADIC_GRID;
    samples
        .iter()
        .map(|p| {
            let p = NcPoly::from_terms(p.iter().map(|(w, c)| (w.clone(), c64(round(c.re), round(c.im)))));
            p.axpy(-counit(b, &p), &one()).axpy(c64(1.0, 0.0), &one())
        })
        .collect()
}

/// Runs every definitional check for the configuration.
pub fn check_defs(setup: &Setup) -> Result<CheckReport, CliError> {
    let cfg = &setup.loaded.config;
    let (caps, tol) = (&cfg.caps, &cfg.tolerances);
    let mut report = CheckReport { lines: Vec::new() };
    report.push("configuration", 0.0, 0.0);
    let Some(b) = setup.bialgebra.as_ref() else {
        return Ok(report);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let ax = check_bialgebra_axioms(b, caps.sample_degree, caps.samples, &mut rng).context(|| "bialgebra axioms")?;
    for (name, r) in [
        ("coassociativity", ax.coassociativity),
        ("counit", ax.counit),
        ("multiplicativity", ax.multiplicativity),
        ("rules", ax.rule_compatibility),
        ("involution", ax.involution),
    ] {
        report.push(format!("bialgebra.{name}"), r, tol.axioms);
    }
    let mismatches = b.algebra().confluence_smoke_test(&mut rng, caps.samples, caps.sample_degree).context(|| "confluence")?;
    report.push("bialgebra.confluence", mismatches as f64, 0.0);

    let samples = b.sample_elements(&mut rng, caps.sample_degree, caps.samples).context(|| "sampling")?;
    if let Some(psi) = setup.generator.as_ref() {
        let at_unit = psi.eval(&one()).context(|| "generator")?.norm();
        report.push("generator.unit", at_unit, tol.counit);
        let h = hermiticity_residual(&**b, psi, &samples).context(|| "generator hermiticity")?;
        report.push("generator.hermiticity", h, tol.hermiticity);
        let deg = positivity_degree(b, caps.degree);
        let pos = check_conditional_positivity(psi, b, deg).context(|| "conditional positivity")?;
        let scale = pos.max_eigenvalue.abs().max(1.0);
        report.push(format!("generator.positivity(deg {deg})"), (-pos.min_eigenvalue).max(0.0) / scale, tol.null);
    }

    match &setup.plan {
        Plan::Sweep { source, .. } => match source {
            Built::Spec(_) => {}
            Built::Tensor { tensor, kappa } => {
                let s = tensor.sample_elements(&mut rng, caps.sample_degree, 3, caps.samples).context(|| "sampling")?;
                source_lines(&mut report, setup, "source", &**tensor, kappa, &s)?;
            }
            Built::GroupLike { g, kappa, .. } => {
                let deg = caps.sample_degree.min(caps.grouplike / 2).max(1);
                let base = b.sample_elements(&mut rng, deg, caps.samples).context(|| "sampling")?;
                let s = grouplike_samples(b, &base)
                    .iter()
                    .map(|p| g.hat_elem(p))
                    .collect::<qlevy::Result<Vec<_>>>()
                    .context(|| "sampling")?;
                source_lines(&mut report, setup, "source", &**g, kappa, &s)?;
            }
        },
        Plan::Reverse { .. } => {
            let (t, _, _) = make_induced_tensor(b, caps.tensor).context(|| "induced tensor bialgebra")?;
            let (g, kappa, kt) = make_grouplike(b, caps.grouplike).context(|| "group-like bialgebra")?;
            let s = t.sample_elements(&mut rng, 1, 2, caps.samples).context(|| "sampling")?;
            let r = check_counit_preserving(&kt, &*t, &*g, &s).context(|| "kappa_tilde")?;
            report.push(format!("morphism.{}.counit", kt.name), r, tol.counit);
            let base = b.sample_elements(&mut rng, caps.sample_degree.min(caps.grouplike / 2).max(1), caps.samples)
                .context(|| "sampling")?;
            let gs = grouplike_samples(b, &base)
                .iter()
                .map(|p| g.hat_elem(p))
                .collect::<qlevy::Result<Vec<_>>>()
                .context(|| "sampling")?;
            source_lines(&mut report, setup, "grouplike", &*g, &kappa, &gs)?;
        }
        _ => {}
    }
    Ok(report)
}
