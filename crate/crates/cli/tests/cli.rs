use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const EXE: &str = env!("CARGO_BIN_EXE_fraclb");

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("fraclb-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn config(&self, text: &str) -> PathBuf {
        let p = self.0.join("run.conf");
        std::fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, text: &str) -> Output {
        let conf = self.config(text);
        Command::new(EXE)
            .args(["run", conf.to_str().unwrap()])
            .env("FRACLB_OUTPUT_ROOT", self.0.join("root"))
            .output()
            .unwrap()
    }

    fn output(&self, name: &str) -> PathBuf {
        self.0.join("root").join("out").join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn list_names_every_experiment() {
    let o = Command::new(EXE).arg("list").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["operator-check", "extension-check", "dtn", "gauge", "recovery", "regularity"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{name} "))), "{name} missing");
    }
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn version_prints_package_version() {
    let o = Command::new(EXE).arg("version").output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), format!("fraclb {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn unknown_subcommand_is_rejected() {
    let o = Command::new(EXE).arg("bogus").output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn out_of_range_alpha_reports_its_line() {
    let s = Scratch::new("alpha");
    let o = s.run("experiment = dtn\n# comment\nalpha = 1.5\n");
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("alpha outside (0,1)"), "{err}");
}

#[test]
fn unknown_key_reports_its_line() {
    let s = Scratch::new("key");
    let o = s.run("experiment = dtn\nfoo = 1\n");
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("foo"), "{err}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let o = Command::new(EXE).args(["run", "/nonexistent/fraclb.conf"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flat_operator_check_matches_closed_form_eigenvalues() {
    let s = Scratch::new("operator");
    let o = s.run("experiment = operator-check\nmetric = identity\nN = 16\noutput_dir = out\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let eig = read_csv(&s.output("eigenvalues.csv"));
    assert_eq!(eig.len(), 17);
    let checks = read_csv(&s.output("checks.csv"));
    assert_eq!(checks[0], ["check", "value", "limit", "verdict"]);
    let row = checks.iter().find(|r| r[0] == "eigenvalues_closed_form").expect("closed-form check");
    assert_eq!(row[3], "PASS");
    let manifest = std::fs::read_to_string(s.output("manifest")).unwrap();
    assert!(manifest.contains("verdict") && manifest.contains("fraclb_version"));
}

#[test]
fn identity_gauge_map_runs() {
    let s = Scratch::new("gauge");
    let o = s.run("experiment = gauge\ngauge_strength = 0\nN_list = 24,32\noutput_dir = out\n");
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1), "{}", stderr(&o));
    assert!(s.output("gauge.csv").exists());
}
