//! End-to-end CLI tests against the built binary.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cuspfield"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cuspfield-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_csv_column(path: &PathBuf, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse::<f64>().unwrap())
        .collect()
}

#[test]
fn basis_circle_constant_column() {
    let dir = workdir("basis0");
    let out = dir.join("b0.csv");
    let status = bin()
        .args([
            "basis", "--family", "sym", "--j", "0", "--a0", "2", "--circle", "--n", "64",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let u = read_csv_column(&out, 3);
    assert_eq!(u.len(), 64);
    for v in u {
        assert!((v - 0.5).abs() < 1e-12, "{v}");
    }
}

#[test]
fn basis_zero_contrast_grid_is_harmonic_polynomial() {
    let dir = workdir("basis3");
    let out = dir.join("b3.csv");
    let status = bin()
        .args([
            "basis", "--j", "3", "--a0", "1", "--grid", "16", "--extent", "2.0",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body = fs::read_to_string(&out).unwrap();
    for line in body.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (x1, x2, u) = (f[0], f[1], f[3]);
        // α = 0, j = 3: u = Re((−i z)³)/R0³ = (x2³ − 3 x1² x2)/27
        let lead = (x2.powi(3) - 3.0 * x1 * x1 * x2) / 27.0;
        assert!((u - lead).abs() < 1e-12, "({x1}, {x2}): {u} vs {lead}");
    }
}

#[test]
fn basis_trace_round_trip_through_files() {
    let dir = workdir("trace");
    let field = dir.join("field.csv");
    let trace = dir.join("trace.csv");
    let status = bin()
        .args([
            "basis", "--family", "sym", "--parity", "even", "--j", "4", "--a0", "9", "--r0",
            "3", "--circle", "--n", "4096",
        ])
        .arg("--out")
        .arg(&field)
        .arg("--trace-out")
        .arg(&trace)
        .status()
        .unwrap();
    assert!(status.success());
    // re-analyze the sampled circle data and compare with the trace file
    let u = read_csv_column(&field, 3);
    let coeffs = read_csv_column(&trace, 1);
    // ê_4 = cos 4θ with sign (−1)²: reproject manually
    for (m, &c) in coeffs.iter().enumerate().take(24) {
        let n = u.len();
        let re_analyzed = if m == 0 {
            u.iter().sum::<f64>() / n as f64
        } else {
            let l = m.div_ceil(2);
            let sign = if m % 2 == 0 {
                if l % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            } else if (l - 1) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let mut acc = 0.0;
            for (s, &v) in u.iter().enumerate() {
                let th = std::f64::consts::TAU * s as f64 / n as f64;
                let freq = m as f64;
                acc += v * if m % 2 == 0 {
                    (freq * th).cos()
                } else {
                    (freq * th).sin()
                };
            }
            sign * 2.0 * acc / n as f64
        };
        assert!(
            (re_analyzed - c).abs() < 1e-9,
            "m={m}: {re_analyzed} vs {c}"
        );
    }
}

#[test]
fn matrix_identity_at_zero_contrast_and_dominance_report() {
    let dir = workdir("matrix");
    let out = dir.join("m.csv");
    let report = dir.join("m.json");
    let status = bin()
        .args(["matrix", "--alpha", "0", "--r0", "3", "--n", "8"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body = fs::read_to_string(&out).unwrap();
    for (l, line) in body.lines().filter(|l| !l.starts_with('#')).skip(1).enumerate() {
        for (j, v) in line.split(',').enumerate() {
            let v: f64 = v.parse().unwrap();
            let expect = if l == j { 1.0 } else { 0.0 };
            assert_eq!(v, expect);
        }
    }

    let status = bin()
        .args(["matrix", "--alpha", "0.8", "--r0", "3", "--n", "100"])
        .arg("--out")
        .arg(&out)
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert!(status.success());
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(rep["all_dominant"].as_bool().unwrap());
    let gaps = rep["column_gaps"].as_array().unwrap();
    assert_eq!(gaps.len(), 100);
    assert!(gaps.iter().all(|g| g.as_f64().unwrap() > 0.0));
    // report column sums vs the per-column gaps on the truncated block:
    // odd columns carry one sign so the closed form is exact; even columns
    // report the proven upper bound (≥ the actual sum 1 − gap).
    let sums = rep["column_abs_sums"].as_array().unwrap();
    for j in 0..40 {
        let col = j + 1;
        let gap = gaps[j].as_f64().unwrap();
        let sum = sums[j].as_f64().unwrap();
        if col % 2 == 1 {
            assert!(
                ((1.0 - gap) - sum).abs() < 1e-10,
                "odd column {col}: gap {gap} vs closed-form sum {sum}"
            );
        } else {
            assert!(sum + 1e-12 >= 1.0 - gap, "even column {col}: bound below actual");
            assert!(sum < 1.5 * (1.0 - gap) + 1e-6, "even column {col}: bound too loose");
        }
    }
}

#[test]
fn solve_constant_boundary_gives_constant_field() {
    let dir = workdir("solveconst");
    let cfg = dir.join("p.json");
    fs::write(
        &cfg,
        r#"{
        "medium": {"a0": 5.0, "b0": 0.5},
        "r0": 3.0,
        "boundary": {"type": "fourier", "even": [2.5]},
        "grid": {"n": 12}
    }"#,
    )
    .unwrap();
    let out = dir.join("f.csv");
    let report = dir.join("r.json");
    let status = bin()
        .args(["solve"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert!(status.success());
    for v in read_csv_column(&out, 3) {
        assert!((v - 2.5).abs() < 1e-10, "{v}");
    }
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(rep["residual_max"].as_f64().unwrap() < 1e-10);
}

#[test]
fn solve_unequal_geometry_reports_transmission() {
    let dir = workdir("solveuneq");
    let cfg = dir.join("p.json");
    fs::write(
        &cfg,
        r#"{
        "medium": {"a0": 1.0, "b0": 1.0},
        "r0": 3.0,
        "boundary": {"type": "fourier", "even": [0.0, 0.0, -1.0]},
        "grid": {"n": 10}
    }"#,
    )
    .unwrap();
    let out = dir.join("f.csv");
    let report = dir.join("r.json");
    let status = bin()
        .args(["solve", "--geometry", "r1=1,r2=2"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert!(status.success());
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let tr = &rep["transmission"];
    assert!(tr["worst_value_jump"].as_f64().unwrap() < 1e-8);
    assert!(tr["worst_flux_jump"].as_f64().unwrap() < 1e-6);
}

#[test]
fn solve_with_oracle_comparison() {
    let dir = workdir("solveoracle");
    let cfg = dir.join("p.json");
    fs::write(
        &cfg,
        r#"{
        "medium": {"a0": 5.0, "b0": 0.5},
        "r0": 3.0,
        "boundary": {"type": "fourier", "even": [0.0, 0.3, -1.0]},
        "grid": {"n": 8}
    }"#,
    )
    .unwrap();
    let out = dir.join("f.csv");
    let report = dir.join("r.json");
    let status = bin()
        .args(["solve", "--oracle", "--oracle-h", "0.015625"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert!(status.success());
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let rel = rep["oracle"]["rel_l2"].as_f64().unwrap();
    assert!(rel < 2e-2, "oracle rel L2 {rel}");
}

#[test]
fn exit_codes_for_error_classes() {
    let dir = workdir("exitcodes");
    // схema violation → 2
    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"medium": {"a0": 5.0, "b0": 0.5}, "r0": 3.0, "boundary": {"type": "fourier"}, "unknown_key": 1}"#).unwrap();
    let st = bin()
        .args(["solve"])
        .arg("--config")
        .arg(&bad)
        .arg("--out")
        .arg(dir.join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));

    // R0 ≤ 2 → config class (2)
    let st = bin()
        .args(["matrix", "--alpha", "0.5", "--r0", "2.0", "--n", "4"])
        .arg("--out")
        .arg(dir.join("m.csv"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn verify_batteries_and_negative_control() {
    let st = bin().args(["verify", "--battery", "zero-contrast"]).status().unwrap();
    assert!(st.success());
    let st = bin().args(["verify", "--battery", "default"]).status().unwrap();
    assert!(st.success());
    let dir = workdir("verifyneg");
    let report = dir.join("v.json");
    let out = bin()
        .args(["verify", "--battery", "default", "--negative-control"])
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let failed: Vec<&str> = rep
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| !c["pass"].as_bool().unwrap())
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["transmission"]);
}

#[test]
fn outputs_are_deterministic() {
    let dir = workdir("determinism");
    let cfg = dir.join("p.json");
    fs::write(
        &cfg,
        r#"{
        "medium": {"a0": 5.0, "b0": 0.5},
        "r0": 3.0,
        "boundary": {"type": "fourier", "even": [0.0, 0.3, -1.0], "odd": [0.0, 0.2]},
        "grid": {"n": 16},
        "seed": 7
    }"#,
    )
    .unwrap();
    let out1 = dir.join("f1.csv");
    let out2 = dir.join("f2.csv");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["solve"])
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn green_zero_contrast_table() {
    let dir = workdir("green");
    let out = dir.join("g.csv");
    let status = bin()
        .args([
            "green", "--kind", "disk", "--a0", "1", "--b0", "1", "--y", "0.9,-0.1", "--grid",
            "12",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body = fs::read_to_string(&out).unwrap();
    for line in body.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<f64> = line
            .split(',')
            .map(|v| v.parse::<f64>().unwrap())
            .collect();
        let (x1, x2, y1, y2, g) = (f[0], f[1], f[2], f[3], f[6]);
        let free = ((x1 - y1).powi(2) + (x2 - y2).powi(2)).sqrt().ln();
        assert!((g - free).abs() < 1e-14, "({x1}, {x2}): {g} vs {free}");
    }
}

#[test]
fn potential_gaussian_matches_closed_form() {
    // f = ∇φ with a Gaussian bump: the volume potential equals φ (α = β = 0)
    let dir = workdir("potential");
    let cfg = dir.join("p.json");
    fs::write(
        &cfg,
        r#"{
        "medium": {"a0": 1.0, "b0": 1.0},
        "r0": 3.0,
        "boundary": {"type": "fourier", "even": [0.0]},
        "rhs": {"type": "gaussian", "amplitude": 1.0, "s": 6.0, "center": [0.0, 0.0]},
        "grid": {"n": 5, "extent": 1.5},
        "quadrature": {"n_radial": 32, "n_angular": 128}
    }"#,
    )
    .unwrap();
    let out = dir.join("pot.csv");
    let status = bin()
        .args(["potential"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body = fs::read_to_string(&out).unwrap();
    let mut checked = 0;
    for line in body.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse::<f64>().unwrap()).collect();
        let phi = (-6.0 * (f[0] * f[0] + f[1] * f[1])).exp();
        assert!((f[2] - phi).abs() < 1e-3, "({}, {}): {} vs {phi}", f[0], f[1], f[2]);
        checked += 1;
    }
    assert!(checked > 10);
}

#[test]
fn oracle_grid_dump() {
    let dir = workdir("oracle");
    let cfg = dir.join("p.json");
    fs::write(
        &cfg,
        r#"{
        "medium": {"a0": 5.0, "b0": 0.5},
        "r0": 3.0,
        "boundary": {"type": "fourier", "even": [0.0, 0.0, -1.0]}
    }"#,
    )
    .unwrap();
    let out = dir.join("grid.csv");
    let status = bin()
        .args(["oracle", "--h", "0.05"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = body.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(rows.len() > 10_000);
    // coefficient column matches the region column
    for line in rows.iter().step_by(997) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse::<f64>().unwrap()).collect();
        let (region, a) = (f[2] as i32, f[3]);
        let expect = match region {
            1 => 5.0,
            2 => 0.5,
            _ => 1.0,
        };
        assert_eq!(a, expect);
    }
}
