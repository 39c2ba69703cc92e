use std::path::Path;
use std::process::{Command, Output};

fn cmrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmrp"))
        .args(args)
        .env_remove("CMRP_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn lundberg_at_zero_r_prints_zero_kappa() {
    let o = cmrp(&[
        "lundberg",
        "--scenario",
        "esscher_r.json",
        "--theta",
        "1",
        "--r",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("kappa=0 "), "{}", stdout(&o));
}

#[test]
fn lundberg_accepts_several_thetas() {
    let o = cmrp(&[
        "lundberg",
        "--scenario",
        "esscher_r",
        "--theta",
        "1",
        "--theta",
        "2",
        "--r",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    // Exp(θ) arrivals, Exp(2) claims, c = 2: κ = θ·2/(2-1) - θ - 2
    let kappas: Vec<f64> = out
        .lines()
        .map(|l| {
            l.split_whitespace()
                .find_map(|kv| kv.strip_prefix("kappa="))
                .unwrap()
                .parse()
                .unwrap()
        })
        .collect();
    assert_eq!(kappas.len(), 2, "{out}");
    assert!((kappas[0] + 1.0).abs() < 1e-12, "{out}");
    assert!(kappas[1].abs() < 1e-12, "{out}");
}

#[test]
fn ruin_at_zero_reserve_is_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ruin.csv");
    let o = cmrp(&[
        "ruin",
        "--scenario",
        "dirac_exp.json",
        "--u",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("psi=0.5 "), "{}", stdout(&o));
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "u,psi,method,error_bound\n0,0.5,closed_form,0\n"
    );
}

#[test]
fn unsupported_claims_exit_one_with_error_name() {
    let o = cmrp(&["ruin", "--scenario", "polya_lundberg", "--u", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("UnsupportedClaimLaw"), "{}", stderr(&o));
}

#[test]
fn malformed_scenario_exits_two_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = include_str!("../scenarios/esscher_r.json").replace(
        "\"exponential\", \"rate\": 2",
        "\"exponential\", \"rate\": -2",
    );
    assert!(text.contains("-2"), "fixture edit did not apply");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text).unwrap();
    let o = cmrp(&[
        "lundberg",
        "--scenario",
        s(&bad),
        "--theta",
        "1",
        "--r",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("claims"), "{}", stderr(&o));

    std::fs::write(
        &bad,
        r#"{"name": "x", "mixing": {"family": "gamma", "rate": 1, "shape": 2},
        "interarrival_kernel": {"family": "exponential", "rate": "theta"},
        "claims": {"family": "exponential", "rate": 1}, "premium_rate": 1,
        "measure_change": {"tilt": {"type": "wobble"}}}"#,
    )
    .unwrap();
    let o = cmrp(&[
        "simulate",
        "--scenario",
        s(&bad),
        "--paths",
        "1",
        "--horizon",
        "1",
        "--out",
        s(&dir.path().join("p.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("measure_change.tilt"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        cmrp(&["ruin", "--scenario", "dirac_exp"]).status.code(),
        Some(2)
    );
    assert_eq!(cmrp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        cmrp(&["ruin", "--scenario", "dirac_exp", "--u", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cmrp(&[
            "lundberg",
            "--scenario",
            "no_such_file.json",
            "--theta",
            "1",
            "--r",
            "0"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn simulate_and_density_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = cmrp(&[
            "--workers",
            workers,
            "simulate",
            "--scenario",
            "poisson_beta",
            "--paths",
            "200",
            "--horizon",
            "5",
            "--seed",
            "7",
            "--out",
            s(out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_cmrp"))
        .args([
            "simulate",
            "--scenario",
            "poisson_beta",
            "--paths",
            "200",
            "--horizon",
            "5",
            "--out",
            s(&c),
        ])
        .env("CMRP_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let pa = std::fs::read(&a).unwrap();
    assert_eq!(pa, std::fs::read(&b).unwrap());
    assert_eq!(pa, std::fs::read(&c).unwrap());
    let header = String::from_utf8_lossy(&pa)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, "path_id,theta,theta2,n,T_n,W_n,X_n");

    let w1 = dir.path().join("w1.csv");
    let w2 = dir.path().join("w2.csv");
    for w in [&w1, &w2] {
        let o = cmrp(&[
            "density",
            "--scenario",
            "poisson_beta",
            "--paths-in",
            s(&a),
            "--t",
            "5",
            "--out",
            s(w),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&w1).unwrap();
    assert_eq!(text, std::fs::read_to_string(&w2).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("path_id,log_density,log_conditional,log_xi")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 200);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i as f64);
        assert!((r[1] - r[2] - r[3]).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn density_preset_selects_the_change() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let o = cmrp(&[
        "simulate",
        "--scenario",
        "dirac_exp",
        "--paths",
        "20",
        "--horizon",
        "3",
        "--out",
        s(&p),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let w = dir.path().join("w.csv");
    let o = cmrp(&[
        "density",
        "--scenario",
        "dirac_exp",
        "--preset",
        "esscher_0.3",
        "--paths-in",
        s(&p),
        "--t",
        "3",
        "--out",
        s(&w),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = cmrp(&[
        "density",
        "--scenario",
        "dirac_exp",
        "--preset",
        "nope",
        "--paths-in",
        s(&p),
        "--t",
        "3",
        "--out",
        s(&w),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_reports_failures_through_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.json");
    std::fs::write(
        &suite,
        r#"{"checks": [
            {"check": "esscher_routes", "scenario": "dirac_exp.json", "r": 0.3, "theta": [1.5], "n_paths": 50},
            {"check": "pushforward_counts", "scenario": "polya_lundberg.json", "t": 1, "counts": [0], "n_paths": 2000}
        ]}"#,
    )
    .unwrap();
    let out = dir.path().join("report.csv");
    let o = cmrp(&[
        "verify",
        "--suite",
        s(&suite),
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report = std::fs::read_to_string(&out).unwrap();
    assert!(report.starts_with("check_name,estimate,std_error,target,passed,n_paths,seed\n"));
    assert_eq!(report.lines().count(), 3);

    // One path and no tolerance floor: the estimate of Q(N_1 = 7) misses.
    std::fs::write(
        &suite,
        r#"{"probability_floor": 0, "checks": [
            {"check": "pushforward_counts", "scenario": "polya_lundberg.json", "t": 1, "counts": [7], "n_paths": 1}
        ]}"#,
    )
    .unwrap();
    let o = cmrp(&["verify", "--suite", s(&suite), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL "));

    std::fs::write(&suite, r#"{"checks": [{"check": "normalisation"}]}"#).unwrap();
    let o = cmrp(&["verify", "--suite", s(&suite)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("checks[0]"), "{}", stderr(&o));
}

#[test]
fn help_documents_schemas() {
    let cases = [
        ("simulate", "path_id,theta[,theta2],n,T_n,W_n,X_n"),
        ("density", "path_id,log_density,log_conditional,log_xi"),
        ("ruin", "u,psi,method,error_bound"),
        (
            "verify",
            "check_name,estimate,std_error,target,passed,n_paths,seed",
        ),
        ("lundberg", "--theta"),
    ];
    for (cmd, needle) in cases {
        let o = cmrp(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!(text.contains(needle), "{cmd}: {text}");
        assert!(text.contains("--workers"), "{cmd}: {text}");
    }
    let o = cmrp(&["simulate", "--help"]);
    assert!(stdout(&o).contains("CMRP_SEED"));
}
