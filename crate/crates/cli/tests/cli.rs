use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn peerpred(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peerpred"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn unnormalized_distribution_is_a_config_error_naming_the_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.txt",
        "algorithm_a=hedge2\np11=0.4\np00=0.4\np10=0.2\np01=0.2\n",
    );
    let o = peerpred(dir.path(), &["simulate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(
        err.starts_with("error: kind=distribution key=p11,p00,p10,p01 "),
        "{err}"
    );
    assert!(!dir.path().join("summary.csv").exists());
}

#[test]
fn override_flag_renormalizes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.txt",
        "algorithm_a=ftl\np11=0.4\np00=0.4\np10=0.2\np01=0.2\nruns=3\nrounds=50\n",
    );
    let o = peerpred(dir.path(), &["simulate", &cfg, "--allow-unnormalized"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.contains("# p11=0.33333333333333"), "{summary}");
}

#[test]
fn unknown_key_is_named() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.txt", "algorithm_a=hedge2\nbogus=1\n");
    let o = peerpred(dir.path(), &["simulate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("key=bogus"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = peerpred(dir.path(), &["simulate", "nope.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flag_is_a_single_line_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = peerpred(dir.path(), &["preset", "fig2", "--seed", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: kind=usage"), "{err}");
}

#[test]
fn simulate_writes_header_and_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.txt",
        "algorithm_a=hedge2\nruns=4\nrounds=60\nseed=11\n",
    );
    let o = peerpred(dir.path(), &["simulate", &cfg, "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("o/summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("# tool=peerpred"));
    assert!(summary.contains("# seed=11\n"));
    assert!(summary.contains("# beta=1\n"));
    assert!(summary.contains("\nalgorithm,t,converge_proportion\nhedge2,1,"));
    assert_eq!(summary.lines().filter(|l| !l.starts_with('#')).count(), 61);
    let regret = fs::read_to_string(dir.path().join("o/regret.csv")).unwrap();
    assert!(regret.contains("\nalgorithm,run,T,regret_a,regret_b\nhedge2,0,60,"));
    assert!(!dir.path().join("o/trace.csv").exists());
}

#[test]
fn header_replay_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.txt",
        "algorithm_a=fpl\nnoise_max=2.5\nalgorithm_b=eps_greedy\nruns=5\nrounds=80\nseed=3\n",
    );
    let o = peerpred(
        dir.path(),
        &["simulate", &cfg, "--out", "a", "--trace", "full"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = peerpred(dir.path(), &["simulate", "a/regret.csv", "--out", "b"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["summary.csv", "regret.csv", "trace.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs after replay");
    }
    let summary = fs::read_to_string(dir.path().join("a/summary.csv")).unwrap();
    assert!(summary.contains("\nfpl2.5_vs_eps_greedy,1,"));
}

#[test]
fn preset_header_replays_the_preset() {
    let dir = TempDir::new().unwrap();
    let o = peerpred(
        dir.path(),
        &[
            "preset",
            "collusion_demo",
            "--runs",
            "6",
            "--rounds",
            "40",
            "--seed",
            "9",
            "--out",
            "a",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = peerpred(dir.path(), &["simulate", "a/summary.csv", "--out", "b"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["summary.csv", "regret.csv", "report.txt"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs after replay");
    }
}

#[test]
fn analyze_matches_simulate_and_emits_events() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.txt",
        "algorithm=hedge1\nruns=4\nrounds=200\n",
    );
    let o = peerpred(
        dir.path(),
        &["simulate", &cfg, "--trace", "full", "--out", "s"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = peerpred(dir.path(), &["analyze", "s/trace.csv", "--out", "a"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let body = |p: &str| -> Vec<String> {
        fs::read_to_string(dir.path().join(p))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    };
    assert_eq!(body("s/summary.csv"), body("a/summary.csv"));
    assert_eq!(body("s/regret.csv"), body("a/regret.csv"));
    let events = body("a/events.csv");
    assert_eq!(events[0], "run,t,state");
    assert_eq!(events.len(), 1 + 4 * 200);
    let states = ["bad12", "bad21", "good11", "good22", "mid"];
    assert!(events[1..]
        .iter()
        .all(|l| states.contains(&l.rsplit(',').next().unwrap())));
}

#[test]
fn analyze_rejects_a_tampered_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.txt", "algorithm=ftl\nruns=2\nrounds=50\n");
    let o = peerpred(
        dir.path(),
        &["simulate", &cfg, "--trace", "full", "--out", "s"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = dir.path().join("s/trace.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let row = lines.iter().position(|l| l.starts_with("0,30,")).unwrap();
    // Flip Alice's reward r on one row.
    let mut fields: Vec<String> = lines[row].split(',').map(str::to_string).collect();
    fields[8] = if fields[8] == "1" {
        "-1".into()
    } else {
        "1".into()
    };
    lines[row] = fields.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    let o = peerpred(dir.path(), &["analyze", "s/trace.csv", "--out", "a"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: kind=invariant"));
}

#[test]
fn analyze_rejects_wrong_columns() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "t.csv", "# tool=peerpred\nrun,t,x\n0,1,1\n");
    let o = peerpred(dir.path(), &["analyze", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("expected columns"));
}

#[test]
fn check_hedge2_passes_everything() {
    let dir = TempDir::new().unwrap();
    let o = peerpred(
        dir.path(),
        &["check", "hedge2", "--beta", "1", "--trials", "60"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for key in ["exchangeability", "order_preservation", "full_exploitation"] {
        assert!(out.contains(&format!("{key}.verdict: PASS")), "{out}");
    }
    assert!(out.contains("necessity.regret_ratio.T10000: "));
}

#[test]
fn check_capped_softmax_fails_full_exploitation() {
    let dir = TempDir::new().unwrap();
    let o = peerpred(
        dir.path(),
        &[
            "check",
            "capped_softmax",
            "--trials",
            "40",
            "--necessity-seeds",
            "20",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("full_exploitation.verdict: FAIL"), "{out}");
    assert!(out.contains("exchangeability.verdict: PASS"), "{out}");
}

#[test]
fn check_rejects_non_update_policies() {
    let dir = TempDir::new().unwrap();
    for name in ["eps_greedy", "collude", "softmax"] {
        let o = peerpred(dir.path(), &["check", name]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(stderr(&o).contains("key=name"));
    }
    let o = peerpred(dir.path(), &["check", "fpl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("key=noise_max"));
}

#[test]
fn bne_report_describes_the_taxonomy() {
    let dir = TempDir::new().unwrap();
    let o = peerpred(dir.path(), &["preset", "bne_report", "--out", "b"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("truthful.best_responses: 1\n"));
    assert!(out.contains("uninformative.best_responses: 441\n"));
    assert!(out.contains("uninformative.equilibrium_points: 21\n"));
    assert!(out.contains("uninformative.equilibrium_on_uninformative_line: true\n"));
    assert!(dir.path().join("b/bne.csv").exists());
}

#[test]
fn errorbars_uses_ten_batches() {
    let dir = TempDir::new().unwrap();
    let o = peerpred(
        dir.path(),
        &[
            "preset",
            "errorbars",
            "--runs",
            "3",
            "--rounds",
            "20",
            "--out",
            "e",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("e/batches.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "algorithm,batch,t,converge_proportion");
    assert_eq!(rows.len(), 1 + 7 * 10 * 20);
    assert!(rows.iter().any(|r| r.starts_with("eps_greedy,9,20,")));
}
