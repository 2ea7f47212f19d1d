//! End-to-end runs of the binary: exit codes, outputs, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PURE_DIFFUSION: &str = r#"
[experiment]
name = "pure"
seed = 4

[grid]
dim = 1
n = 64

[operator]
form = "fractional_laplacian"
alpha = 0.5

[initial]
kind = "rough"

[time]
dt = 0.01
t_final = 0.2
record_every = 5
"#;

const CONSTANT_FIELD: &str = r#"
[grid]
dim = 2
n = 32

[operator]
form = "fractional_laplacian"
alpha = 0.5

[initial]
kind = "constant"
value = 2.5
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_levy-smooth"));
    c.env_remove("LEVY_SMOOTH_THREADS");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(csv_files(&p));
        } else if p.extension().is_some_and(|x| x == "csv") {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn assert_rows_carry_hash(dir: &Path) {
    let files = csv_files(dir);
    assert!(!files.is_empty(), "no csv under {}", dir.display());
    for f in files {
        let text = fs::read_to_string(&f).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(
            header.split(',').any(|h| h == "config_hash"),
            "{}: {header}",
            f.display()
        );
        for l in lines {
            let last = l.rsplit(',').next().unwrap();
            assert_eq!(last.len(), 64, "{}: {l}", f.display());
            assert!(
                last.chars().all(|c| c.is_ascii_hexdigit()),
                "{}: {l}",
                f.display()
            );
        }
    }
}

#[test]
fn solve_writes_histories_with_hash_and_svg() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "pure.toml", PURE_DIFFUSION);
    let out = d.path().join("out");
    let o = run(&["solve", "--svg"], &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("scalar_history.csv").exists());
    assert!(out.join("block_history.csv").exists());
    let svg = fs::read_to_string(out.join("history.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_rows_carry_hash(&out);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "pure.toml", PURE_DIFFUSION);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for args in [
        &["solve"][..],
        &["verify", "--checks", "timeweight-33,symbol-41"][..],
    ] {
        assert_eq!(code(&run(args, &cfg, &a)), 0);
        assert_eq!(code(&run(args, &cfg, &b)), 0);
    }
    let names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert!(names.len() >= 4);
    for n in names {
        assert_eq!(
            fs::read(a.join(&n)).unwrap(),
            fs::read(b.join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn single_value_sweep_reproduces_solve() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "pure.toml", PURE_DIFFUSION);
    let (solo, sweep) = (d.path().join("solo"), d.path().join("sweep"));
    assert_eq!(code(&run(&["solve"], &cfg, &solo)), 0);
    let o = run(&["sweep", "--axis", "dt", "--values", "0.01"], &cfg, &sweep);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for n in ["scalar_history.csv", "block_history.csv"] {
        assert_eq!(
            fs::read(solo.join(n)).unwrap(),
            fs::read(sweep.join("run_000").join(n)).unwrap(),
            "{n}"
        );
    }
    assert_rows_carry_hash(&sweep);
}

#[test]
fn epsilon_sweep_writes_convergence_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "pure.toml", PURE_DIFFUSION);
    let out = d.path().join("eps");
    let o = run(
        &["sweep", "--axis", "epsilon", "--values", "0.1,0.05,0.025"],
        &cfg,
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let conv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(conv.lines().count(), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope"));
    assert_rows_carry_hash(&out);
}

#[test]
fn symbol_csv_matches_power_law_and_lambda_sweep_splits_files() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "pure.toml", PURE_DIFFUSION);
    let out = d.path().join("sym");
    let o = run(&["symbol", "--svg"], &cfg, &out);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(out.join("symbol.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let q = header.iter().position(|h| *h == "wavenumber").unwrap();
    let a = header.iter().position(|h| *h == "symbol").unwrap();
    for l in text.lines().skip(1) {
        let cells: Vec<&str> = l.split(',').collect();
        let (q, a): (f64, f64) = (cells[q].parse().unwrap(), cells[a].parse().unwrap());
        assert!((a - q.sqrt()).abs() <= 1e-12 * q.sqrt().max(1.0), "{l}");
    }
    assert!(out.join("symbol.svg").exists());
    assert_rows_carry_hash(&out);

    let logd = PURE_DIFFUSION.replace(
        "form = \"fractional_laplacian\"\nalpha = 0.5",
        "form = \"log_damped\"\nalpha = 1.0\nmu = 1.0\nlambda = 3.0\n\n[symbol]\nlambdas = [2.0, 3.0, 5.0]",
    );
    let cfg = write_config(d.path(), "logd.toml", &logd);
    let out = d.path().join("logd");
    assert_eq!(code(&run(&["symbol"], &cfg, &out)), 0);
    let per_lambda = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("symbol_lambda_")
        })
        .count();
    assert_eq!(per_lambda, 3);
}

#[test]
fn decompose_constant_field_fills_only_the_low_block() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "const.toml", CONSTANT_FIELD);
    let out = d.path().join("dec");
    let o = run(&["decompose", "--svg"], &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("blocks.csv")).unwrap();
    for l in text.lines().skip(1) {
        let cells: Vec<&str> = l.split(',').collect();
        let (j, sup): (i32, f64) = (cells[0].parse().unwrap(), cells[1].parse().unwrap());
        if j == -1 {
            assert!((sup - 2.5).abs() < 1e-12, "{l}");
        } else {
            assert!(sup < 1e-12, "{l}");
        }
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    let residual: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("reconstruction residual: "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(residual < 1e-12);
    assert!(out.join("blocks.svg").exists());
    assert_rows_carry_hash(&out);
}

#[test]
fn decompose_reads_a_solver_snapshot() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "pure.toml", PURE_DIFFUSION);
    let run_dir = d.path().join("run");
    assert_eq!(code(&run(&["solve"], &cfg, &run_dir)), 0);
    let snap = fs::read_dir(&run_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .max()
        .unwrap();
    let out = d.path().join("dec");
    let o = bin()
        .arg("decompose")
        .arg(&snap)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("blocks.csv").exists());
}

#[test]
fn verify_passes_and_writes_summary() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("v");
    let o = bin()
        .args(["verify", "--checks", "timeweight-33,symbol-41", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reports = fs::read_to_string(out.join("reports.csv")).unwrap();
    assert_eq!(reports.lines().count(), 3);
    assert!(out.join("summary.txt").exists());
    assert_rows_carry_hash(&out);
}

#[test]
fn failed_check_exits_with_one() {
    let d = tempfile::tempdir().unwrap();
    let text = r#"
[experiment]
name = "tight-bound"
checks = ["symbol-41"]

[grid]
dim = 1
n = 128

[operator]
form = "log_damped"
alpha = 1.0
sigma = 0.1
mu = 1.0
lambda = 2.718281828459045
"#;
    let cfg = write_config(d.path(), "tight.toml", text);
    let o = run(&["verify"], &cfg, &d.path().join("v"));
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let missing_alpha = PURE_DIFFUSION.replace("alpha = 0.5\n", "");
    let unknown_key = PURE_DIFFUSION.replace("seed = 4", "seed = 4\ncolour = \"red\"");
    for (name, text) in [
        ("noalpha.toml", missing_alpha.as_str()),
        ("unknown.toml", unknown_key.as_str()),
    ] {
        let cfg = write_config(d.path(), name, text);
        let o = run(&["solve"], &cfg, &d.path().join("x"));
        assert_eq!(
            code(&o),
            2,
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
    let o = bin()
        .args(["verify", "--checks", "no-such-check"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = bin().arg("solve").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn cfl_violation_exits_with_three() {
    let d = tempfile::tempdir().unwrap();
    let text = PURE_DIFFUSION.replace(
        "[initial]",
        "[drift]\nmode = \"constant\"\nvelocity = [400.0]\n\n[initial]",
    );
    let cfg = write_config(d.path(), "cfl.toml", &text);
    let o = run(&["solve"], &cfg, &d.path().join("x"));
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
