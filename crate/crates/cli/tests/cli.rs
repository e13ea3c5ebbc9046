use std::fs;
use std::process::{Command, Output};

fn geophase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geophase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn closed_system_point() {
    let o = geophase(&["dephasing", "--theta", "0.5pi"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("phase = 3.14159265359\n"), "{text}");
    assert!(text.contains("converged = true"));
}

#[test]
fn pole_has_no_phase_at_any_rate() {
    for gamma in ["0", "0.3", "2"] {
        let o = geophase(&["dephasing", "--theta", "0", "--gamma", gamma]);
        assert_eq!(o.status.code(), Some(0));
        assert!(field(&stdout(&o), "phase").abs() < 1e-9);
    }
}

#[test]
fn spinbath_point_reports_visibility() {
    let o = geophase(&[
        "spinbath", "--delta", "1", "--s-n", "0.5", "--px0", "0.6", "--pz0", "0.8",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = field(&stdout(&o), "visibility");
    assert!(v > 0.0 && v <= 1.0);
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        vec!["dephasing", "--thta", "1"],
        vec!["dephasing", "--theta", "abc"],
        vec!["dephasing", "--omega", "-1"],
        vec!["sweep", "--model", "dephasing"],
        vec![
            "sweep",
            "--model",
            "dephasing",
            "--axis1",
            "bogus:0:1:2",
            "--axis2",
            "theta:0:1:2",
        ],
        vec!["spinbath", "--quadrature", "simpson"],
        vec!["verify", "--threads", "0"],
        vec![],
    ] {
        let o = geophase(&args);
        assert_eq!(
            o.status.code(),
            Some(64),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn computation_failures_exit_2() {
    // unpolarized spin: the state never leaves I/2
    let o = geophase(&["spinbath", "--px0", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = geophase(&[
        "dephasing",
        "--theta",
        "0.3pi",
        "--gamma",
        "0.2",
        "--max-levels",
        "2",
        "--phase-tol",
        "1e-15",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no convergence"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "theta = \"0.25pi\"\ngamma = 0\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let from_file = field(&stdout(&geophase(&["dephasing", "--config", cfg])), "phase");
    let expect = std::f64::consts::PI * (1.0 + (std::f64::consts::PI / 4.0).cos())
        - 2.0 * std::f64::consts::PI;
    assert!((from_file - expect).abs() < 1e-6, "{from_file} vs {expect}");

    let overridden = field(
        &stdout(&geophase(&[
            "dephasing",
            "--config",
            cfg,
            "--theta",
            "0.5pi",
        ])),
        "phase",
    );
    assert!((overridden - std::f64::consts::PI).abs() < 1e-9);

    fs::write(dir.path().join("bad.toml"), "thetta = 1\n").unwrap();
    let o = geophase(&[
        "dephasing",
        "--config",
        dir.path().join("bad.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn sweep_csv_is_ordered_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let base = [
        "sweep",
        "--model",
        "dephasing",
        "--axis1",
        "theta:0.1pi:0.9pi:3",
        "--axis2",
        "gamma_over_omega:0:0.5:4",
    ];
    let run = |threads: &str, path: &str| {
        let mut args = base.to_vec();
        args.extend(["--threads", threads, "--out", path]);
        let o = geophase(&args);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        fs::read_to_string(path).unwrap()
    };
    let one = run("1", &out("a.csv"));
    let four = run("4", &out("b.csv"));
    assert_eq!(one, four);
    assert_eq!(one, run("4", &out("c.csv")));

    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines[0], "axis1,axis2,phase,visibility,converged");
    assert_eq!(lines.len(), 1 + 12);
    // axis1-major: the first four rows share theta
    let theta: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert!(theta[..4].iter().all(|t| *t == theta[0]));
    assert_ne!(theta[4], theta[0]);
    assert!(lines[1..]
        .iter()
        .all(|l| l.split(',').count() == 5 && l.ends_with("true")));
}

#[test]
fn degenerate_two_by_two_sweep() {
    let o = geophase(&[
        "sweep",
        "--model",
        "spinbath",
        "--axis1",
        "delta_over_s_n:0.01:100:2:log",
        "--axis2",
        "s_n:0.5:1:2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().starts_with("0.01,0.5,"));
}

#[test]
fn verify_reports_every_check_and_names_the_first_failure() {
    let o = geophase(&["verify", "--surface-grid", "4"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("check=")).collect();
    assert_eq!(lines.len(), 12, "{text}");
    let first_fail = lines.iter().find(|l| l.contains("status=FAIL"));
    match first_fail {
        None => assert_eq!(o.status.code(), Some(0)),
        Some(line) => {
            assert_eq!(o.status.code(), Some(1));
            let id = line
                .split_whitespace()
                .next()
                .unwrap()
                .trim_start_matches("check=");
            let err = String::from_utf8_lossy(&o.stderr);
            assert!(
                err.contains(&format!("first failure: check {id} ")),
                "{err}"
            );
        }
    }
}
