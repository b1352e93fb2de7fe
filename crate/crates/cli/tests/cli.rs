use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).to_str().unwrap().to_string()
}

fn fcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcc")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn estimate_matches_golden() {
    let (x, y) = (fixture("euclid_x.txt"), fixture("euclid_y.txt"));
    let out = fcc(&["estimate", "--x", &x, "--y", &y, "--H", "4", "--min-cell", "3"]);
    assert!(out.status.success());
    let got: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let want: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("euclid_estimate.json")).unwrap()).unwrap();
    assert_eq!(got["M"], want["M"]);
    assert_eq!(got["n"], want["n"]);
    assert_eq!(got["cell_sizes"], want["cell_sizes"]);
    for key in ["rho_hat", "v_f_hat"] {
        let (a, b) = (got[key].as_f64().unwrap(), want[key].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-12, "{key}: {a} vs {b}");
    }
}

#[test]
fn constant_response_exits_degenerate() {
    let (x, y) = (fixture("euclid_x.txt"), fixture("const_y.txt"));
    let out = fcc(&["estimate", "--x", &x, "--y", &y, "--H", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("V_F > 0"));
}

#[test]
fn invalid_input_exit_codes() {
    assert_eq!(fcc(&["estimate", "--setting", "s9"]).status.code(), Some(2));
    assert_eq!(fcc(&["estimate", "--x", "/nonexistent/x", "--y", "/nonexistent/y"]).status.code(), Some(4));
    let x = fixture("euclid_x.txt");
    assert_eq!(fcc(&["estimate", "--x", &x, "--y", &x, "--H", "0"]).status.code(), Some(2));
}

#[test]
fn single_replicate_p_value() {
    let (x, y) = (fixture("euclid_x.txt"), fixture("euclid_y.txt"));
    for seed in ["1", "2", "3", "4"] {
        let out = fcc(&["test", "--x", &x, "--y", &y, "--H", "4", "--B", "1", "--seed", seed]);
        assert!(out.status.success());
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        let p = v["p_value"].as_f64().unwrap();
        assert!(p == 0.5 || p == 1.0, "p = {p}");
        assert_eq!(v["B"], 1);
    }
}

#[test]
fn test_statistic_is_n_rho_hat() {
    let (x, y) = (fixture("euclid_x.txt"), fixture("euclid_y.txt"));
    let out = fcc(&["test", "--x", &x, "--y", &y, "--H", "4", "--min-cell", "3", "--B", "99"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let t = v["statistic_obs"].as_f64().unwrap();
    assert!((t - 24.0 * 0.5253191180736874).abs() < 1e-10);
}

#[test]
fn nulltable_blocks() {
    let out = fcc(&["nulltable", "--setting", "s4", "--n", "120", "--M", "5", "--draws", "4000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let blocks: Vec<&str> = text.trim_end().split("\n\n").collect();
    assert_eq!(blocks.len(), 3);
    assert!(blocks[0].starts_with("index,gamma\n"));
    assert!(blocks[1].starts_with("stat,mu_hat,sigma_hat,z\n"));
    assert!(blocks[2].starts_with("stat,weighted_chi2_p,weighted_chi2_se,chi2_p,df\n"));
    let gammas: Vec<f64> =
        blocks[0].lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(gammas.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn power_csv_header() {
    let out = fcc(&["power", "--setting", "s1", "--n-list", "30", "--reps", "3", "--boot", "19", "--methods", "fcc,pearson"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,n,delta,rejections,replications,rate,se,errors"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn generate_round_trips_through_estimate() {
    let dir = std::env::temp_dir().join(format!("fcc-cli-gen-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (x, y) = (dir.join("x.txt"), dir.join("y.txt"));
    let (xs, ys) = (x.to_str().unwrap(), y.to_str().unwrap());
    let gen = fcc(&["generate", "--setting", "s3", "--n", "80", "--seed", "5", "--out-x", xs, "--out-y", ys]);
    assert!(gen.status.success());
    assert!(stdout(&gen).starts_with("setting = s3"));
    let from_files = fcc(&["estimate", "--x", xs, "--y", ys, "--H", "15", "--min-cell", "5"]);
    let from_setting = fcc(&["estimate", "--setting", "s3", "--n", "80", "--seed", "5"]);
    assert!(from_files.status.success());
    let a: serde_json::Value = serde_json::from_str(&stdout(&from_files)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&from_setting)).unwrap();
    let (ra, rb) = (a["rho_hat"].as_f64().unwrap(), b["rho_hat"].as_f64().unwrap());
    assert!((ra - rb).abs() < 1e-9, "{ra} vs {rb}");
    let _ = std::fs::remove_dir_all(&dir);
}
