use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "name = \"small\"\n\
[solver]\n\
n = 2048\n\
coarse_n = 1024\n\
refinement = [512, 1024, 2048]\n\
[identities]\n\
samples = 200\n";

fn inwave(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inwave")).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn small_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

#[test]
fn identities_pass_and_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = inwave(dir.path(), &["-o", "out", "verify-identities", "--samples", "300"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(stdout(&out).matches("PASS").count(), 4);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/identities.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 4);
}

#[test]
fn printed_config_reloads_unchanged() {
    let dir = small_dir();
    let first = inwave(dir.path(), &["-c", "small.toml", "print-config"]);
    assert_eq!(code(&first), 0);
    std::fs::write(dir.path().join("full.toml"), &first.stdout).unwrap();
    let second = inwave(dir.path(), &["-c", "full.toml", "print-config"]);
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).contains("coarse_n = 1024"));
    let seeded = inwave(dir.path(), &["-c", "small.toml", "--seed", "7", "print-config"]);
    assert!(stdout(&seeded).contains("seed = 7"));
}

#[test]
fn infrastructure_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "bogus = 1\n").unwrap();
    let out = inwave(dir.path(), &["-c", "bad.toml", "print-config"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    assert_eq!(code(&inwave(dir.path(), &["-c", "missing.toml", "make-ic"])), 2);
    std::fs::write(dir.path().join("cfl.toml"), "[solver]\ncfl = 2.0\n").unwrap();
    assert_eq!(code(&inwave(dir.path(), &["-c", "cfl.toml", "make-ic"])), 2);
}

#[test]
fn violated_hypotheses_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let full = stdout(&inwave(dir.path(), &["print-config"]));
    let viol: String = full
        .lines()
        .map(|l| if l.starts_with("beta_bar =") { "beta_bar = 60.0".to_string() } else { l.to_string() })
        .map(|l| l + "\n")
        .collect();
    assert_ne!(viol, full);
    std::fs::write(dir.path().join("viol.toml"), viol).unwrap();
    let out = inwave(dir.path(), &["-c", "viol.toml", "-o", "out", "make-ic"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("beta_floor"));
    assert!(dir.path().join("out/check.json").is_file());
    assert!(!dir.path().join("out/profile.csv").exists());
}

#[test]
fn generated_profile_checks_from_its_table() {
    let dir = small_dir();
    let out = inwave(dir.path(), &["-c", "small.toml", "-o", "out", "make-ic"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let csv = dir.path().join("out/profile.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# config_hash="));
    assert_eq!(text.lines().count(), 2 + 2048);
    assert!(dir.path().join("out/hypotheses.toml").is_file());

    let out = inwave(dir.path(), &["-c", "small.toml", "-o", "chk", "check-hypotheses", "--profile", "out/profile.csv"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    // Doubling every velocity leaves the velocity band.
    let mut lines = text.lines();
    let mut edited = String::new();
    edited.push_str(lines.next().unwrap());
    edited.push('\n');
    edited.push_str(lines.next().unwrap());
    edited.push('\n');
    for line in lines {
        let mut cells: Vec<String> = line.split(',').map(String::from).collect();
        cells[2] = (2.0 * cells[2].parse::<f64>().unwrap()).to_string();
        edited.push_str(&cells.join(","));
        edited.push('\n');
    }
    std::fs::write(dir.path().join("fast.csv"), edited).unwrap();
    let out = inwave(dir.path(), &["-c", "small.toml", "-o", "chk", "check-hypotheses", "--profile", "fast.csv"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("velocity_band"));
}

#[test]
fn simulate_trace_and_omega_write_tables() {
    let dir = small_dir();
    for (cmd, file) in [("simulate", "snapshots.csv"), ("trace", "trace.csv"), ("omega", "omega.csv")] {
        let out = inwave(dir.path(), &["-c", "small.toml", "-o", "out", cmd, "--n", "1024"]);
        assert_eq!(code(&out), 0, "{cmd}: {}", stdout(&out));
        let text = std::fs::read_to_string(dir.path().join("out").join(file)).unwrap();
        assert!(text.starts_with("# config_hash="), "{file}");
        assert!(text.lines().count() > 3, "{file}");
    }
    let run: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/run.json")).unwrap()).unwrap();
    assert_eq!(run["run"]["n"], 1024);
    let omega: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/omega.json")).unwrap()).unwrap();
    assert_eq!(omega["t_within_t_m"], true);
    let out = inwave(dir.path(), &["-c", "small.toml", "trace", "--n", "1024", "--family", "3"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn report_only_reproduces_the_report() {
    let dir = small_dir();
    let first = inwave(dir.path(), &["-c", "small.toml", "-o", "a", "certify", "--store-fields"]);
    assert!(matches!(code(&first), 0 | 1), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(dir.path().join("a/fields").is_dir());
    let second = inwave(dir.path(), &["-c", "small.toml", "-o", "b", "certify", "--report-only", "a"]);
    assert_eq!(code(&second), code(&first));
    for name in ["report.json", "bound.csv", "omega.csv", "paths.csv", "snapshots.csv", "convergence.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(name)).unwrap(),
            std::fs::read(dir.path().join("b").join(name)).unwrap(),
            "{name}"
        );
    }
    let other = inwave(dir.path(), &["-c", "small.toml", "--seed", "1", "-o", "c", "certify", "--report-only", "a"]);
    assert_eq!(code(&other), 2);
}
