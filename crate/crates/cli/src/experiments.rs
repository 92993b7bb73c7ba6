//! Experiment runners. Each kind produces a CSV table, optional JSON
//! document, a `results` object and named assertions; [`run`] writes them
//! next to a deterministic `summary.json` and a separate timing file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qlevy::acceptance::criterion;
use qlevy::constructions::{make_grouplike, make_induced_tensor, Morphism};
use qlevy::fock::{azema_wiener_experiment, unitary_product_evolution, FockFactor};
use qlevy::gns::{gns_construct, levy_triple_residuals};
use qlevy::gram::{convergence_sweep, lift_to_tensor, reverse_check, Partition, Sweep};
use qlevy::subcoalg::bounds::{banach_product_check, random_family, random_partition, MatrixFamily};
use qlevy::subcoalg::{conv_exp, conv_exp_series, ConvolutionSemigroup};
use qlevy::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::builders::{square_matrix, Built};
use crate::check::{check_defs, positivity_degree, CheckReport};
use crate::config::TrotterParams;
use crate::doc::BialgebraDoc;
use crate::error::{CliError, Context};
use crate::exec::par_map;
use crate::setup::{Plan, Setup};

/// Tolerance for "non-increasing" comparisons of defects.
const MONOTONE_SLACK: f64 = 1e-13;
/// Relative tolerance of the convolution-exponential series.
const SERIES_TOL: f64 = 1e-15;

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    /// a failure here is a known, documented limitation
    pub documented: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), pass, documented: false, detail: detail.into() }
    }
}

/// Everything an experiment produces, before it is written.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub csv: String,
    pub document: Option<Value>,
    pub results: Value,
    pub assertions: Vec<Assertion>,
}

impl RunOutput {
    /// All assertions hold, except documented ones.
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass || a.documented)
    }
}

/// Fixed-width scientific notation for CSV cells (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn rate_assertion(name: &str, rows: &[(usize, f64)]) -> Assertion {
    let (Some(&(n0, d0)), Some(&(n1, d1))) = (rows.first(), rows.last()) else {
        return Assertion::new(name, false, "no rows");
    };
    let monotone = rows.windows(2).all(|w| w[1].1 <= w[0].1 + MONOTONE_SLACK);
    let rate = n1 < 8 * n0 || d1 <= d0 / 4.0 + MONOTONE_SLACK;
    Assertion::new(name, monotone && rate, format!("defect {d0:.3e} at n={n0}, {d1:.3e} at n={n1}"))
}

/// Runs the experiment described by `setup` on at most `threads` workers.
pub fn execute(setup: &Setup, check: &CheckReport, threads: usize) -> Result<RunOutput, CliError> {
    let mut out = match &setup.plan {
        Plan::Axioms => axioms(setup, check),
        Plan::Convexp { polys, times } => convexp(setup, polys, times),
        Plan::Gns => gns(setup),
        Plan::Sweep { source, c, d } => sweep(setup, source, c, d),
        Plan::Reverse { b, d, .. } => reverse(setup, b, d, threads),
        Plan::FockUnitary(params) => fock_unitary(setup, params, threads),
        Plan::AzemaWiener { q } => azema_wiener(setup, *q, threads),
        Plan::Trotter(p) => trotter(setup, p, threads),
    }?;
    for &id in &setup.loaded.config.acceptance {
        let c = criterion(id).ok_or_else(|| CliError::schema("/acceptance", format!("unknown criterion {id}")))?;
        let o = c.run(setup.loaded.config.rng_seed);
        out.assertions.push(Assertion {
            name: format!("criterion {id}: {}", c.name),
            pass: o.pass,
            documented: !c.attainable,
            detail: o.detail,
        });
    }
    Ok(out)
}

fn axioms(setup: &Setup, check: &CheckReport) -> Result<RunOutput, CliError> {
    let mut csv = String::from("check,residual,tolerance,passes\n");
    for l in &check.lines {
        csv.push_str(&format!("{},{},{},{}\n", l.name, num(l.residual), num(l.tolerance), l.pass));
    }
    let doc = BialgebraDoc::from_spec(setup.bialgebra());
    let worst = check.lines.iter().map(|l| l.residual / l.tolerance.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    Ok(RunOutput {
        csv,
        document: Some(serde_json::to_value(doc).expect("documents serialize")),
        results: json!({ "checks": check.lines.len(), "generators": setup.bialgebra().algebra().alphabet().len() }),
        assertions: vec![Assertion::new("axioms", check.passed(), format!("worst residual/tolerance {worst:.3e}"))],
    })
}

fn convexp(setup: &Setup, polys: &[(String, qlevy::ncpoly::NcPoly)], times: &[f64]) -> Result<RunOutput, CliError> {
    let b = setup.bialgebra();
    let psi = setup.generator();
    let tol = setup.loaded.config.tolerances.residual;
    let mut csv = String::from("poly,t,value_re,value_im,series_re,series_im,diff\n");
    let mut worst = 0.0f64;
    for (text, p) in polys {
        for &t in times {
            let v = conv_exp(psi, t, p, &**b).context(|| format!("convolution exponential of `{text}` at t={t}"))?;
            let s = conv_exp_series(psi, t, p, b, SERIES_TOL).context(|| format!("series of `{text}` at t={t}"))?.value;
            let diff = (v - s).norm() / v.norm().max(1.0);
            worst = worst.max(diff);
            csv.push_str(&format!(
                "\"{}\",{},{},{},{},{},{}\n",
                text.replace('"', "\"\""),
                num(t),
                num(v.re),
                num(v.im),
                num(s.re),
                num(s.im),
                num(diff)
            ));
        }
    }
    Ok(RunOutput {
        csv,
        document: None,
        results: json!({ "maxRelativeDiff": worst }),
        assertions: vec![Assertion::new("series agreement", worst <= tol, format!("max relative diff {worst:.3e}"))],
    })
}

fn gns(setup: &Setup) -> Result<RunOutput, CliError> {
    let cfg = &setup.loaded.config;
    let b = setup.bialgebra();
    let deg = positivity_degree(b, cfg.caps.degree);
    let triple = gns_construct(setup.generator(), b, deg, cfg.tolerances.null).context(|| "GNS construction")?;
    let res = levy_triple_residuals(&triple, cfg.caps.samples, cfg.rng_seed).context(|| "triple residuals")?;
    let record = triple.record().context(|| "triple record")?;
    let mut csv = String::from("quantity,value\n");
    for (name, v) in [
        ("degree", deg as f64),
        ("k_dim", triple.k_dim() as f64),
        ("generator_identity", res.generator_identity),
        ("cocycle", res.cocycle),
        ("rho_multiplicativity", res.rho_multiplicativity),
        ("rho_star", res.rho_star),
    ] {
        csv.push_str(&format!("{name},{}\n", num(v)));
    }
    let worst = res.max();
    Ok(RunOutput {
        csv,
        document: Some(serde_json::to_value(&record).expect("records serialize")),
        results: json!({ "degree": deg, "kDim": triple.k_dim(), "residuals": res }),
        assertions: vec![
            Assertion::new("triple residuals", worst <= cfg.tolerances.residual, format!("max residual {worst:.3e}")),
            Assertion::new("non-trivial K", triple.k_dim() > 0, format!("dim K = {}", triple.k_dim())),
        ],
    })
}

fn sweep_on(setup: &Setup, source: &Built, c: &str, d: &str) -> Result<Sweep, CliError> {
    let cfg = &setup.loaded.config;
    let (s, t, meshes) = (cfg.partition.start, cfg.partition.end, &cfg.partition.meshes);
    let sg = ConvolutionSemigroup::new(setup.bialgebra().clone(), setup.generator().clone());
    let base = source.base();
    let parse = |text: &str| base.parse(text).context(|| format!("parsing `{text}`"));
    let (c, d) = (parse(c)?, parse(d)?);
    let run = || -> qlevy::Result<Sweep> {
        match source {
            Built::Spec(b) => convergence_sweep(&c, &d, b, &Morphism::identity(), &sg, s, t, meshes),
            Built::Tensor { tensor, kappa } => {
                let (c, d) = (lift_to_tensor(tensor, &c)?, lift_to_tensor(tensor, &d)?);
                convergence_sweep(&c, &d, tensor, kappa, &sg, s, t, meshes)
            }
            Built::GroupLike { g, kappa, kappa_tilde, tensor } => {
                let c = kappa_tilde.apply(&lift_to_tensor(tensor, &c)?)?;
                let d = kappa_tilde.apply(&lift_to_tensor(tensor, &d)?)?;
                convergence_sweep(&c, &d, g, kappa, &sg, s, t, meshes)
            }
        }
    };
    run().context(|| "convergence sweep")
}

fn sweep(setup: &Setup, source: &Built, c: &str, d: &str) -> Result<RunOutput, CliError> {
    let sw = sweep_on(setup, source, c, d)?;
    let rows: Vec<(usize, f64)> = sw.rows.iter().map(|r| (r.n, r.defect)).collect();
    let first = rows.first().map(|r| r.0).unwrap_or(0);
    Ok(RunOutput {
        csv: sw.to_csv(),
        document: None,
        results: json!({
            "limit": pair(sw.limit),
            "fittedConstant": sw.fitted_constant,
            "cauchy": sw.rows.iter().map(|r| r.cauchy).collect::<Vec<_>>(),
        }),
        assertions: vec![
            rate_assertion("defect convergence", &rows),
            Assertion::new("cauchy monotone", sw.cauchy_monotone(MONOTONE_SLACK), "successive differences non-increasing"),
            Assertion::new(
                "defects monotone",
                sw.defects_monotone_from(first, MONOTONE_SLACK),
                format!("from n={first}"),
            ),
        ],
    })
}

fn reverse(setup: &Setup, b: &qlevy::ncpoly::NcPoly, d: &qlevy::ncpoly::NcPoly, threads: usize) -> Result<RunOutput, CliError> {
    let cfg = &setup.loaded.config;
    let base = setup.bialgebra();
    let sg = ConvolutionSemigroup::new(base.clone(), setup.generator().clone());
    let (t, _, _) = make_induced_tensor(base, cfg.caps.tensor).context(|| "induced tensor bialgebra")?;
    let (g, kappa, kt) = make_grouplike(base, cfg.caps.grouplike).context(|| "group-like bialgebra")?;
    let (s, e) = (cfg.partition.start, cfg.partition.end);
    let per_mesh = par_map(&cfg.partition.meshes, threads, |_, &n| {
        reverse_check(b, d, &t, &kt, &g, &kappa, &sg, s, e, &[n], cfg.caps.inner)
    });
    let mut csv = String::from("mesh,n,value_re,value_im,defect\n");
    let mut rows = Vec::new();
    let mut limit = None;
    for (n, rc) in cfg.partition.meshes.iter().zip(per_mesh) {
        let rc = rc.context(|| format!("reverse check at n={n}"))?;
        limit = Some(rc.limit);
        for r in &rc.rows {
            csv.push_str(&format!("{},{},{},{},{}\n", num(r.mesh), r.n, num(r.value.re), num(r.value.im), num(r.defect)));
            rows.push((r.n, r.defect));
        }
    }
    Ok(RunOutput {
        csv,
        document: None,
        results: json!({ "limit": limit.map(pair), "inner": cfg.caps.inner }),
        assertions: vec![rate_assertion("defect convergence", &rows)],
    })
}

struct QuantityRow {
    n: usize,
    mesh: f64,
    quantity: String,
    value: C64,
    target: Option<C64>,
}

fn quantity_csv(rows: &[QuantityRow]) -> String {
    let mut csv = String::from("mesh,n,quantity,value_re,value_im,target_re,target_im,defect\n");
    for r in rows {
        let (tr, ti, def) = match r.target {
            Some(t) => (num(t.re), num(t.im), num((r.value - t).norm())),
            None => (String::new(), String::new(), String::new()),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{tr},{ti},{def}\n",
            num(r.mesh),
            r.n,
            r.quantity,
            num(r.value.re),
            num(r.value.im)
        ));
    }
    csv
}

fn fock_unitary(setup: &Setup, params: &qlevy::gns::UnitaryTripleParams, threads: usize) -> Result<RunOutput, CliError> {
    let cfg = &setup.loaded.config;
    let factor = FockFactor::new(params.m, cfg.caps.fock).context(|| "Fock factor")?;
    let (s, t) = (cfg.partition.start, cfg.partition.end);
    let evs = par_map(&cfg.partition.meshes, threads, |_, &n| {
        unitary_product_evolution(params, &Partition::uniform(s, t, n)?, &factor, cfg.caps.defect_particles)
    });
    let mut rows = Vec::new();
    let (mut vac, mut uni) = (Vec::new(), Vec::new());
    for (n, ev) in cfg.partition.meshes.iter().zip(evs) {
        let ev = ev.context(|| format!("unitary evolution at n={n}"))?;
        let mesh = (t - s) / *n as f64;
        for k in 0..ev.d {
            for l in 0..ev.d {
                rows.push(QuantityRow {
                    n: *n,
                    mesh,
                    quantity: format!("vacuum[{k}.{l}]"),
                    value: ev.vacuum_amplitudes[(k, l)],
                    target: Some(ev.target[(k, l)]),
                });
            }
        }
        rows.push(QuantityRow {
            n: *n,
            mesh,
            quantity: "unitarity_defect".into(),
            value: C64::new(ev.unitarity_defect, 0.0),
            target: None,
        });
        vac.push((*n, ev.vacuum_defect()));
        uni.push((*n, ev.unitarity_defect));
    }
    Ok(RunOutput {
        csv: quantity_csv(&rows),
        document: None,
        results: json!({
            "vacuumDefects": vac.iter().map(|r| r.1).collect::<Vec<_>>(),
            "unitarityDefects": uni.iter().map(|r| r.1).collect::<Vec<_>>(),
            "defectParticles": cfg.caps.defect_particles,
        }),
        assertions: vec![
            rate_assertion("vacuum amplitudes converge", &vac),
            Assertion::new(
                "unitarity defect non-increasing",
                uni.windows(2).all(|w| w[1].1 <= w[0].1 + MONOTONE_SLACK),
                format!(
                    "{:.3e} → {:.3e}",
                    uni.first().map(|r| r.1).unwrap_or(f64::NAN),
                    uni.last().map(|r| r.1).unwrap_or(f64::NAN)
                ),
            ),
        ],
    })
}

fn azema_wiener(setup: &Setup, q: f64, threads: usize) -> Result<RunOutput, CliError> {
    let cfg = &setup.loaded.config;
    let (s, t) = (cfg.partition.start, cfg.partition.end);
    let reports = par_map(&cfg.partition.meshes, threads, |_, &n| {
        azema_wiener_experiment(q, s, t, &[n], cfg.caps.inner, cfg.caps.fock)
    });
    let mut rows = Vec::new();
    let mut finite = true;
    let mut azema = Vec::new();
    for (n, rep) in cfg.partition.meshes.iter().zip(reports) {
        let rep = rep.context(|| format!("Azéma/Wiener experiment at n={n}"))?;
        for r in rep.rows {
            let real = |x: f64| C64::new(x, 0.0);
            for (quantity, value, target) in [
                ("azema_norm_sq", real(r.azema_norm_sq), Some(real(r.azema_target))),
                ("wiener_norm_sq", real(r.wiener_norm_sq), Some(real(r.wiener_target))),
                ("cross", C64::new(r.cross[0], r.cross[1]), None),
                ("x_vacuum_norm", real(r.x_vacuum_norm), None),
                ("qsde_residual", real(r.qsde_residual), None),
            ] {
                finite &= value.re.is_finite() && value.im.is_finite();
                rows.push(QuantityRow { n: r.n, mesh: r.mesh, quantity: quantity.into(), value, target });
            }
            azema.push((r.n, (r.azema_norm_sq - r.azema_target).abs()));
        }
    }
    let defects = azema.iter().map(|r| format!("{:.3e}@n={}", r.1, r.0)).collect::<Vec<_>>().join(" ");
    Ok(RunOutput {
        csv: quantity_csv(&rows),
        document: None,
        results: json!({ "q": q, "cap": cfg.caps.fock, "inner": cfg.caps.inner }),
        assertions: vec![Assertion::new("finite values", finite, format!("Azéma norm defects {defects}"))],
    })
}

struct TrotterRow {
    family: usize,
    partition: usize,
    n: usize,
    mesh: f64,
    defect: f64,
    bound: f64,
    passes: bool,
}

fn trotter(setup: &Setup, p: &TrotterParams, threads: usize) -> Result<RunOutput, CliError> {
    let cfg = &setup.loaded.config;
    let (s, t) = (cfg.partition.start, cfg.partition.end);
    let seed = cfg.rng_seed;
    let rows: Vec<TrotterRow> = match &p.g {
        Some(g) => {
            let fam = MatrixFamily::exact(square_matrix(g, "/params/g")?, p.r_max);
            let per = par_map(&cfg.partition.meshes, threads, |i, &n| -> qlevy::Result<TrotterRow> {
                let part = Partition::uniform(s, t, n)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let rep = banach_product_check(&fam, &part, 1, &mut rng)?;
                Ok(TrotterRow {
                    family: 0,
                    partition: i,
                    n,
                    mesh: rep.mesh,
                    defect: rep.max_lhs,
                    bound: rep.bound,
                    passes: rep.passes && rep.remainder_condition_ok,
                })
            });
            per.into_iter().collect::<qlevy::Result<_>>().context(|| "product check")?
        }
        None => {
            let families: Vec<usize> = (0..p.families).collect();
            let per = par_map(&families, threads, |_, &f| -> qlevy::Result<Vec<TrotterRow>> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(f as u64);
                let fam = random_family(&mut rng, p.dimension, p.r_max);
                (0..p.partitions_per_family)
                    .map(|j| {
                        let part = random_partition(&mut rng, t - s, p.r_max)?;
                        let rep = banach_product_check(&fam, &part, 1, &mut rng)?;
                        Ok(TrotterRow {
                            family: f,
                            partition: j,
                            n: part.len(),
                            mesh: rep.mesh,
                            defect: rep.max_lhs,
                            bound: rep.bound,
                            passes: rep.passes && rep.remainder_condition_ok,
                        })
                    })
                    .collect()
            });
            let per: Vec<Vec<TrotterRow>> = per.into_iter().collect::<qlevy::Result<_>>().context(|| "product check")?;
            per.into_iter().flatten().collect()
        }
    };
    let mut csv = String::from("family,partition,n,mesh,defect,bound,passes\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.family,
            r.partition,
            r.n,
            num(r.mesh),
            num(r.defect),
            num(r.bound),
            r.passes
        ));
    }
    let failures = rows.iter().filter(|r| !r.passes).count();
    let worst = rows.iter().map(|r| r.defect).fold(0.0, f64::max);
    Ok(RunOutput {
        csv,
        document: None,
        results: json!({ "checks": rows.len(), "failures": failures, "maxDefect": worst }),
        assertions: vec![Assertion::new(
            "product bound",
            failures == 0,
            format!("{failures} of {} checks above the bound", rows.len()),
        )],
    })
}

/// Paths written by [`run`].
#[derive(Clone, Debug, Serialize)]
pub struct Written {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub document: Option<PathBuf>,
    pub timing: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path.display().to_string(), e))
}

/// Checks, runs and writes an experiment into `out_dir`. Everything except
/// the timing file is a pure function of the configuration.
pub fn run(setup: &Setup, out_dir: &Path, threads: usize) -> Result<(CheckReport, RunOutput, Written), CliError> {
    let started = Instant::now();
    let cfg = &setup.loaded.config;
    let check = check_defs(setup)?;
    let mut output = if check.passed() {
        execute(setup, &check, threads)?
    } else {
        RunOutput { csv: String::new(), document: None, results: Value::Null, assertions: Vec::new() }
    };
    output.assertions.insert(0, Assertion::new("definitions", check.passed(), format!("{} checks", check.lines.len())));

    let paths = &cfg.output;
    let csv_path = out_dir.join(&paths.csv);
    let summary_path = out_dir.join(&paths.summary);
    let timing_path = out_dir.join(&paths.timing);
    let document_path = output.document.as_ref().map(|_| out_dir.join(&paths.document));
    let summary = json!({
        "tool": "qlevy",
        "libraryVersion": qlevy::VERSION,
        "kind": cfg.kind.name(),
        "name": cfg.name,
        "rngSeed": cfg.rng_seed,
        "config": setup.loaded.raw,
        "morphisms": setup.morphisms,
        "check": check,
        "artifacts": {
            "csv": paths.csv,
            "document": output.document.as_ref().map(|_| &paths.document),
            "timing": paths.timing,
        },
        "results": output.results,
        "assertions": output.assertions,
        "passed": output.passed(),
    });
    write(&csv_path, &output.csv)?;
    if let (Some(p), Some(doc)) = (&document_path, &output.document) {
        write(p, &(serde_json::to_string_pretty(doc).expect("values serialize") + "\n"))?;
    }
    write(&summary_path, &(serde_json::to_string_pretty(&summary).expect("values serialize") + "\n"))?;
    let timing = json!({ "wallSeconds": started.elapsed().as_secs_f64(), "threads": threads });
    write(&timing_path, &(serde_json::to_string_pretty(&timing).expect("values serialize") + "\n"))?;
    Ok((check, output, Written { csv: csv_path, summary: summary_path, document: document_path, timing: timing_path }))
}
