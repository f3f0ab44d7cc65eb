use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use maxent_cli::report::{Envelope, Report};
use tempfile::TempDir;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        f.write("k3.json", r#"{"vertices": 3, "edges": [[0,1],[0,2],[1,2]]}"#);
        f.write("k33pm.json", r#"{"left": 3, "right": 3, "edges": [[0,0],[0,1],[0,2],[1,0],[1,1],[1,2],[2,0],[2,1],[2,2]]}"#);
        f.write(
            "atsp4.json",
            r#"{"costs": [[null, 1, 2, 1.5], [1, null, 1.2, 2], [2, 1.2, null, 1], [1.5, 2, 1, null]]}"#,
        );
        f
    }

    fn write(&self, name: &str, body: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

fn maxent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxent")).args(args).output().unwrap()
}

fn report(out: &Output) -> Envelope {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["schema"], 1);
    let env: Envelope = serde_json::from_str(&text).unwrap();
    // re-serializing gives the same document
    let again: serde_json::Value = serde_json::to_value(&env).unwrap();
    assert_eq!(again, value);
    env
}

#[test]
fn solve_k3_centroid() {
    let f = Fixture::new();
    let out = maxent(&["solve", "--family", &f.path("k3.json"), "--theta", "[0.6666666666666666,0.6666666666666666,0.6666666666666666]", "--eta", "0.05", "--eps", "1e-6"]);
    let Report::Solve(r) = report(&out).report else { panic!() };
    assert!((r.result.f_value - 3f64.ln()).abs() < 1e-3);
    assert!(r.result.marginals.iter().all(|&t| (0.0..=1.0).contains(&t)));
    assert_eq!(r.result.lambda.len(), 3);
}

#[test]
fn solve_with_noise_and_certified_eta() {
    let f = Fixture::new();
    let out = maxent(&["solve", "--family", &f.path("k3.json"), "--theta", "[0.5,0.75,0.75]", "--eps", "1e-2", "--noise", "1e-3", "--seed", "4"]);
    let Report::Solve(r) = report(&out).report else { panic!() };
    assert_eq!(r.eta_source, "certified");
    assert!(r.result.f_value <= 1.5 * 2f64.ln() + 1e-2);
}

#[test]
fn count_k33_matchings() {
    let f = Fixture::new();
    let out = maxent(&["count", "--family", &f.path("k33pm.json"), "--eps", "0.1"]);
    let Report::Count(r) = report(&out).report else { panic!() };
    assert!((5.4..=6.6).contains(&r.estimate.z_tilde), "{}", r.estimate.z_tilde);
    assert!(!r.estimate.guess_trace.is_empty());
}

#[test]
fn weighted_count_and_kl_solve() {
    let f = Fixture::new();
    let mu = format!("[{}, 0, 0]", 2f64.ln());
    let out = maxent(&["count-mu", "--family", &f.path("k3.json"), "--mu", &mu, "--eps", "0.1"]);
    let Report::CountMu(r) = report(&out).report else { panic!() };
    assert!((1.8..=2.2).contains(&r.estimate.z_tilde));

    let mu_file = f.write("mu.json", &mu);
    let out = maxent(&[
        "solve-kl", "--family", &f.path("k3.json"), "--theta", "[0.6666666666666666,0.6666666666666666,0.6666666666666666]",
        "--mu", &mu_file.display().to_string(), "--eps", "1e-2",
    ]);
    let Report::SolveKl(r) = report(&out).report else { panic!() };
    assert!(r.result.mu.is_some());
    assert!(r.result.marginal_gap <= (1e-2f64 / 2.0).sqrt());
}

#[test]
fn sample_ten_trees() {
    let f = Fixture::new();
    for method in ["enumerate", "conditional"] {
        let out = maxent(&["sample", "--family", &f.path("k3.json"), "--lambda", "[0,0,0]", "--n", "10", "--seed", "1", "--method", method]);
        let Report::Sample(r) = report(&out).report else { panic!() };
        assert_eq!(r.member_indices.len(), 10);
        for t in &r.member_indices {
            assert!([vec![0, 1], vec![0, 2], vec![1, 2]].contains(t), "{t:?}");
        }
    }
}

#[test]
fn verify_accepts_good_and_flags_tampered_results() {
    let f = Fixture::new();
    let saved = f.path("solve.json");
    let theta = "[0.5,0.75,0.75]";
    let out = maxent(&["solve", "--family", &f.path("k3.json"), "--theta", theta, "--eps", "1e-6", "--output", &saved]);
    assert!(out.status.success());
    let ok = maxent(&["verify", "--family", &f.path("k3.json"), "--theta", theta, "--result", &saved]);
    let Report::Verify(v) = report(&ok).report else { panic!() };
    assert!(v.gap <= v.bound);

    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&saved).unwrap()).unwrap();
    doc["result"]["lambda"] = serde_json::json!([3.0, 0.0, 0.0]);
    let tampered = f.write("tampered.json", &doc.to_string());
    let bad = maxent(&["verify", "--family", &f.path("k3.json"), "--theta", theta, "--result", &tampered.display().to_string()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("gap"));
}

#[test]
fn input_errors_exit_with_one() {
    let f = Fixture::new();
    let missing = maxent(&["solve", "--family", "/nonexistent/family.json", "--theta", "[1]", "--eta", "0.1"]);
    assert_eq!(missing.status.code(), Some(1));
    let short = maxent(&["solve", "--family", &f.path("k3.json"), "--theta", "[0.5,0.5]", "--eta", "0.1"]);
    assert_eq!(short.status.code(), Some(1));
    let off_hull = maxent(&["solve", "--family", &f.path("k3.json"), "--theta", "[0.5,0.5,0.5]", "--eta", "0.1"]);
    assert_eq!(off_hull.status.code(), Some(1));
    let bad_json = f.write("bad.json", "{");
    let unparsable = maxent(&["count", "--family", &bad_json.display().to_string()]);
    assert_eq!(unparsable.status.code(), Some(1));
}

#[test]
fn atsp_demo_returns_a_hamiltonian_tour() {
    let f = Fixture::new();
    let x: Vec<f64> = vec![1.0 / 3.0; 12];
    let x = serde_json::to_string(&x).unwrap();
    let out = maxent(&["atsp-demo", "--instance", &f.path("atsp4.json"), "--x", &x, "--rounds", "3", "--seed", "2"]);
    let Report::AtspDemo(r) = report(&out).report else { panic!() };
    let mut tour = r.best_tour.clone();
    tour.sort_unstable();
    assert_eq!(tour, vec![0, 1, 2, 3]);
    assert!(r.best_cost >= r.optimum.unwrap() - 1e-12);
    assert_eq!(r.trials.len(), 3);

    let infeasible = maxent(&["atsp-demo", "--instance", &f.path("atsp4.json"), "--x", &serde_json::to_string(&vec![0.5; 12]).unwrap()]);
    assert_eq!(infeasible.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&infeasible.stderr).contains("marginals"));
}

#[test]
fn text_format_and_logging() {
    let f = Fixture::new();
    let out = Command::new(env!("CARGO_BIN_EXE_maxent"))
        .args(["--format", "text", "solve", "--family", &f.path("k3.json"), "--theta", "[0.5,0.75,0.75]", "--eps", "1e-4"])
        .env("MAXENT_LOG", "debug")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("solve\n"));
    assert!(text.contains("f_value"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DEBUG"));
}

#[test]
fn output_file_is_written() {
    let f = Fixture::new();
    let target = f.path("count.json");
    let out = maxent(&["count", "--family", &f.path("k3.json"), "--output", &target]);
    assert!(out.status.success() && out.stdout.is_empty());
    let env: Envelope = serde_json::from_str(&std::fs::read_to_string(Path::new(&target)).unwrap()).unwrap();
    assert!(matches!(env.report, Report::Count(_)));
}
