use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stein_lab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stein-lab"));
    cmd.args(args).env_remove("STEIN_LAB_MAX_STATES");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn uni_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "uni.cfg", "lambda_grid = 25, 50, 100, 200\n");
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = stein_lab(&["uni", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("uni_sup_dg.svg").exists() && out.join("uni_d_tv.svg").exists());
        csvs.push(fs::read(out.join("uni_sweep.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert!(text.starts_with("lambda,k,p_k,d_tv,sup_dg,rel_err_2_7,leak\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert!(text.contains("# status: all assertions passed"));
}

#[test]
fn pp_sweep_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pp.cfg", "lambda_grid = 100\nseed = 1\n");
    let out = dir.path().join("out");
    let args = [
        "pp",
        "--config",
        &cfg,
        "--lambda-grid",
        "16,32,64,128",
        "--out",
        out.to_str().unwrap(),
        "--no-plots",
        "--seed",
        "3",
    ];
    let o = stein_lab(&args, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("pp_sweep.csv")).unwrap();
    let fit = text.lines().find(|l| l.starts_with("# fit d2_proxy/p:")).unwrap();
    assert!(fit.contains(" q=1 "), "{fit}");
    assert!(text.contains("s_size=1 seed=3"));
    assert!(!out.join("pp_d2.svg").exists());
}

#[test]
fn assertion_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // one level above δ_a + δ_b at a and b is too coarse for the count identity
    let cfg = write_config(dir.path(), "pp.cfg", "lambda_grid = 2\nn_total_max = 12\nn_ab_max = 1\n");
    let out = dir.path().join("out");
    let o = stein_lab(&["pp", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let text = fs::read_to_string(out.join("pp_sweep.csv")).unwrap();
    assert!(text.contains("# FAILED: lambda=2: count identity"), "{text}");
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let cases = [
        ("uni", "lambda_grid = 5, 2\n"),
        ("uni", "lambda = 5\n"),
        ("multi", "lambda_grid = 16\nmu = 0.7, 0.3\n"),
        ("multi", "lambda_grid = 16\nmu = 0.4, 0.4\n"),
        ("pp", "lambda_grid = 1.2, 4\n"),
    ];
    for (i, (section, text)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("{i}.cfg"), text);
        let o = stein_lab(&[section, "--config", &cfg, "--out", out], &[]);
        assert_eq!(o.status.code(), Some(2), "{section}: {text}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("invalid config"));
    }
    let missing = dir.path().join("missing.cfg");
    let o = stein_lab(&["uni", "--config", missing.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "cap.cfg", "lambda_grid = 16\nmu = 0.5, 0.5\n");
    let o = stein_lab(&["multi", "--config", &cfg, "--out", out], &[("STEIN_LAB_MAX_STATES", "100")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("maximum of 100"));
    let o = stein_lab(&["bogus", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new(out).exists());
}
