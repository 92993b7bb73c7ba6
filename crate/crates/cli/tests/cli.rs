use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qlevy::constructions::make_azema;
use qlevy_cli::doc::BialgebraDoc;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> PathBuf {
    repo().join("configs").join(name)
}

fn qlevy(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qlevy"));
    cmd.args(args).env_remove("QLEVY_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("the binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, name: &str, value: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn csv_column(path: &Path, column: &str) -> Vec<String> {
    let body = std::fs::read_to_string(path).unwrap();
    let mut lines = body.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == column).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn shipped_azema_config_passes_check() {
    let out = qlevy(&["check", config("azema_q2.json").to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("all checks passed"));
}

#[test]
fn zero_q_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "c.json",
        &serde_json::json!({"kind": "axioms", "bialgebra": {"builder": "azema(0)"}}),
    );
    let out = qlevy(&["check", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("schema error at /bialgebra/builder"), "{}", text(&out.stderr));

    let p = write_config(dir.path(), "w.json", &serde_json::json!({"kind": "azema-wiener", "params": {"q": 0}}));
    let out = qlevy(&["check", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("schema error at /params/q"), "{}", text(&out.stderr));
}

#[test]
fn corrupted_coproduct_fails_check_with_its_residual() {
    let (az, _, _) = make_azema(2.0).unwrap();
    let mut doc = BialgebraDoc::from_spec(&az);
    doc.delta_on_gen.get_mut("y").unwrap()[0].coeff = [2.0, 0.0];
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "c.json",
        &serde_json::json!({"kind": "axioms", "bialgebra": {"spec": doc}, "generator": {"builtin": "azema"}}),
    );
    let out = qlevy(&["check", p.to_str().unwrap()], &[]);
    let stdout = text(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{stdout}");
    let failing: Vec<&str> = stdout.lines().filter(|l| l.ends_with("FAIL")).collect();
    assert!(failing.iter().any(|l| l.starts_with("bialgebra.counit")), "{stdout}");
    assert!(stdout.contains("check(s) failed"));
}

#[test]
fn corrupted_coproduct_in_a_file_is_located() {
    let (az, _, _) = make_azema(2.0).unwrap();
    let mut doc = serde_json::to_value(BialgebraDoc::from_spec(&az)).unwrap();
    doc["deltaOnGen"]["x"][0]["left"] = serde_json::json!(["z"]);
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "bialgebra.json", &doc);
    let p = write_config(dir.path(), "c.json", &serde_json::json!({"kind": "axioms", "bialgebra": {"file": "bialgebra.json"}}));
    let out = qlevy(&["check", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("/bialgebra/file/deltaOnGen/x/0/left/0"), "{}", text(&out.stderr));
}

#[test]
fn unknown_kind_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "c.json", &serde_json::json!({"kind": "levitate"}));
    let out = qlevy(&["check", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("schema error at /kind"), "{}", text(&out.stderr));
}

#[test]
fn malformed_json_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, "{\"kind\": \"gns\",\n  \"caps\": {\"degree\": }\n}").unwrap();
    let out = qlevy(&["check", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("parse error at line 2"), "{}", text(&out.stderr));
}

#[test]
fn declared_morphisms_must_match_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "c.json",
        &serde_json::json!({
            "kind": "sweep",
            "bialgebra": {"builder": "azema(2)"},
            "generator": {"builtin": "azema"},
            "morphisms": ["tensor_kappa"],
            "params": {"source": "grouplike(azema(2), 8)", "c": "x"}
        }),
    );
    let out = qlevy(&["check", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("schema error at /morphisms"), "{}", text(&out.stderr));
}

#[test]
fn sweep_defects_decrease_strictly_over_six_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlevy(
        &["run", config("sweep_grouplike_azema.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let defects: Vec<f64> = csv_column(&dir.path().join("results.csv"), "defect").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(defects.len(), 6);
    assert!(defects.windows(2).all(|w| w[1] < w[0]), "{defects:?}");
}

#[test]
fn nilpotent_trotter_defects_are_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlevy(
        &["run", config("trotter_nilpotent.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let defects = csv_column(&dir.path().join("results.csv"), "defect");
    assert!(!defects.is_empty());
    assert!(defects.iter().all(|d| d.parse::<f64>().unwrap() == 0.0), "{defects:?}");
}

#[test]
fn artifacts_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "c.json",
        &serde_json::json!({
            "kind": "reverse",
            "bialgebra": {"builder": "azema(2)"},
            "generator": {"builtin": "azema"},
            "partition": {"meshes": [2, 4, 8]},
            "params": {"b": "x^* x^* + y"}
        }),
    );
    let mut runs = Vec::new();
    for threads in ["1", "3", "3"] {
        let out_dir = dir.path().join(format!("out{}", runs.len()));
        let out = qlevy(&["run", p.to_str().unwrap(), "--out", out_dir.to_str().unwrap()], &[("QLEVY_THREADS", threads)]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
        let read = |f: &str| std::fs::read(out_dir.join(f)).unwrap();
        runs.push((read("results.csv"), read("summary.json")));
        assert!(out_dir.join("timing.json").exists());
    }
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn invalid_thread_cap_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlevy(
        &["run", config("trotter_nilpotent.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        &[("QLEVY_THREADS", "0")],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("QLEVY_THREADS"), "{}", text(&out.stderr));
}

#[test]
fn builtins_are_listed() {
    let out = qlevy(&["list-builtins"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    for k in qlevy_cli::config::Kind::ALL {
        assert!(stdout.contains(k.name()), "{}", k.name());
    }
    assert!(stdout.contains("grouplike(of, cap)"));
    assert!(stdout.contains("known limitation"));
}

#[test]
fn shipped_configs_follow_the_published_schema_and_resolve() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(repo().join("schema/experiment.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(repo().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", path.display());
        let loaded = qlevy_cli::config::load(&path).unwrap();
        qlevy_cli::setup::prepare(loaded).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 13);
    for bad in [
        serde_json::json!({"kind": "levitate"}),
        serde_json::json!({"kind": "gns", "caps": {"fock": 1}}),
        serde_json::json!({"kind": "trotter", "params": {"rMax": 0}}),
        serde_json::json!({"kind": "gns", "bialgebra": {"builder": "azema(2)", "file": "x.json"}}),
    ] {
        assert!(!validator.is_valid(&bad), "{bad}");
    }
}

#[test]
fn every_criterion_has_a_shipped_config() {
    for c in qlevy::acceptance::criteria() {
        let path = config(&format!("criterion_{:02}.json", c.id));
        let loaded = qlevy_cli::config::load(&path).unwrap();
        assert_eq!(loaded.config.acceptance, vec![c.id], "{}", path.display());
    }
}
