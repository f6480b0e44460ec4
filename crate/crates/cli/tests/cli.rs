use std::path::Path;
use std::process::{Command, Output};

use podkit::output::{validate_report, ReportKind};
use serde_json::Value;

fn podkit(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_podkit"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(path: &Path, kind: ReportKind) -> Value {
    let v: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    validate_report(kind, &v).unwrap();
    v
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned()
}

#[test]
fn constants_report_holds_c2() {
    let dir = tempfile::tempdir().unwrap();
    let o = podkit(dir.path(), &["constants", "--mmax", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = report(&dir.path().join("constants.json"), ReportKind::Constants);
    let c2 = v["payload"]["c_m"][1]["c_m"].as_f64().unwrap();
    assert!((c2 - 9.558).abs() < 1e-3, "c_2 = {c2}");
    assert_eq!(v["payload"]["c_m"].as_array().unwrap().len(), 4);
}

#[test]
fn json_flag_prints_the_written_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = podkit(dir.path(), &["--json", "constants", "--mmax", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let file = std::fs::read(dir.path().join("constants.json")).unwrap();
    assert_eq!(o.stdout, file);
}

#[test]
fn bad_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        podkit(dir.path(), &["check-lemmas", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        podkit(dir.path(), &["constants", "--no-such-flag"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        podkit(dir.path(), &["rom", "--scheme", "rk4"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(podkit(dir.path(), &["pod"]).status.code(), Some(2));
}

#[test]
fn lemma_fuzz_passes_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let o = podkit(
        dir.path(),
        &[
            "--seed",
            "3",
            "check-lemmas",
            "--trials",
            "20",
            "--max-order",
            "3",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let v = report(&dir.path().join("lemmas.json"), ReportKind::Lemmas);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["payload"]["violations"], 0);
}

#[test]
fn snapshot_pipeline_writes_valid_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for args in [
        &["gen", "--grid", "64", "--space", "h10"][..],
        &["pod", "--subtract-mean"],
        &["proj-errors", "--r", "3", "--space", "l2"],
    ] {
        let o = podkit(out, args);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let gen = report(&out.join("gen.json"), ReportKind::Generate);
    assert_eq!(gen["payload"]["M"], 64);
    let pod = report(&out.join("pod.json"), ReportKind::Pod);
    let inputs = pod["inputs"].as_object().unwrap();
    assert!(inputs.contains_key("snapshots") && inputs.contains_key("basis"));
    report(&out.join("proj_errors.json"), ReportKind::ProjErrors);

    assert_eq!(header(&out.join("sigma_tail.csv")), "r,gamma");
    assert_eq!(header(&out.join("mode_norms.csv")), "k,norm");
    assert!(header(&out.join("error_vs_r.csv")).starts_with("r,"));
}

#[test]
fn pod_identities_hold_in_both_grams() {
    for space in ["l2", "h10"] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path();
        assert_eq!(
            podkit(out, &["gen", "--grid", "32", "--kind", "general"])
                .status
                .code(),
            Some(0)
        );
        assert_eq!(
            podkit(out, &["pod", "--space", space]).status.code(),
            Some(0)
        );
        let v = report(&out.join("pod.json"), ReportKind::Pod);
        let p = &v["payload"];
        assert_eq!(p["pass"], true);
        for batch in ["energy_identity", "cross_norm_identity"] {
            let gap = p[batch]["max_relative_gap"].as_f64().unwrap();
            assert!(gap <= 1e-10, "{space} {batch}: {gap:e}");
        }
        let sigma: Vec<f64> = serde_json::from_value(p["sigma"].clone()).unwrap();
        assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn bounds_and_sweeps_pass_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = podkit(out, &["bounds", "--r", "3", "--grid", "64", "--m", "2,3"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = report(&out.join("bounds.json"), ReportKind::Bounds);
    assert_eq!(v["payload"]["pass"], true);
    assert!(header(&out.join("deriv_norms.csv")).contains(','));

    let o = podkit(out, &["sweep", "--grid", "64,128", "--r", "4"]);
    assert_eq!(o.status.code(), Some(0));
    report(&out.join("sweep.json"), ReportKind::Sweep);
    assert_eq!(
        header(&out.join("sweep_nondegrade.csv")),
        "M,max_projection_error,degraded_baseline"
    );

    let o = podkit(
        out,
        &[
            "sweep", "--table", "factors", "--grid", "32", "--r", "2", "--m", "2",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        header(&out.join("sweep_factors.csv")),
        "M,scheme,bound,m,lhs,rhs,factor,pass"
    );
}

#[test]
fn rom_report_validates() {
    let dir = tempfile::tempdir().unwrap();
    let o = podkit(
        dir.path(),
        &["rom", "--grid", "32", "--r", "3", "--scheme", "bdf2"],
    );
    assert_eq!(o.status.code(), Some(0));
    report(&dir.path().join("rom.json"), ReportKind::Rom);
}
