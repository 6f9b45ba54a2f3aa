use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn dressedsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dressedsim"))
        .args(args)
        .env_remove("DRESSEDSIM_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const COHERENCE: &str = "\
# small circular-drive ensemble
scenario = coherence
scheme.variant = circular_dressed
scheme.omega1 = 5
scheme.omega2 = 1
noise.t2_star = 1
noise.sigma_eps = 0.005
noise.n_realizations = 128
coherence.horizon = 200
seed = 11
";

#[test]
fn validate_reports_cost() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", COHERENCE);
    let o = dressedsim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("ok"), "{out}");
    assert!(out.contains("cost estimate"));
    assert!(!dir.path().join("coherence.csv").exists());
}

#[test]
fn oversize_grid_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", &format!("{COHERENCE}budget = 10\n"));
    let o = dressedsim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (COHERENCE.replace("scheme.omega1 = 5", "scheme.omega1 = -5"), "scheme.omega1"),
        (COHERENCE.replace("noise.sigma_eps = 0.005\n", ""), "noise.sigma_eps"),
        (format!("{COHERENCE}gate.eta = 0.1\n"), "gate.eta"),
        ("scenario = gate1q\n".to_string(), "grid.ratio"),
    ];
    for (i, (text, key)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.cfg"), text);
        for cmd in ["validate", "run"] {
            let o = dressedsim(&[cmd, "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(2), "case {i} {cmd}");
            assert!(stderr(&o).contains(key), "case {i}: {}", stderr(&o));
        }
    }
    let o = dressedsim(&["run", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // ten Fock levels cannot hold a thermal state with n̄ = 0.6
    let cfg = write_config(
        dir.path(),
        "g.cfg",
        "scenario = gate2q\ngate.n_fock = 10\ngrid.omega2_hz = 71e3\n",
    );
    let o = dressedsim(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("n_fock"), "{}", stderr(&o));
    assert!(stderr(&o).contains("scan point 0"), "{}", stderr(&o));
}

#[test]
fn rerun_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", COHERENCE);
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = dressedsim(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).starts_with("coherence: T2"), "{}", stdout(&o));
        outputs.push((fs::read(out.join("coherence.csv")).unwrap(), fs::read(out.join("coherence.meta.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(csv.starts_with("time_s,fidelity,envelope\r\n"));
    let meta: serde_json::Value = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["result"]["seed"], 11);
    assert_eq!(meta["rows"].as_u64().unwrap() as usize + 1, csv.lines().count());
    assert!(meta["result"]["t2_seconds"].as_f64().is_some());
}

#[test]
fn seed_flag_changes_the_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", COHERENCE);
    let run = |seed: &str| {
        let out = dir.path().join(format!("s{seed}"));
        let o = dressedsim(&["run", "--quiet", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).is_empty());
        fs::read(out.join("coherence.csv")).unwrap()
    };
    assert_ne!(run("1"), run("2"));
}

#[test]
fn gate1q_rows_match_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.cfg", "scenario = gate1q\ngrid.ratio = lin(1, 30, 30)\n");
    let o = dressedsim(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("gate1q.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<Vec<f64>> =
        rdr.records().map(|r| r.unwrap().iter().map(|s| s.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 30);
    // circular columns stay exact
    assert!(rows.iter().all(|r| r[4..].iter().all(|x| *x < 1e-9)));
}

#[test]
fn optimum_summary_reports_scaled_coherence_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "o.cfg",
        "scenario = optimum\nnoise.t2_star = 1\nnoise.sigma_eps = 0.005\nnoise.n_realizations = 512\n",
    );
    let o = dressedsim(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let value = |label: &str| -> f64 {
        let rest = &out[out.find(label).unwrap_or_else(|| panic!("{label} missing: {out}")) + label.len()..];
        rest.split([',', ' ']).find(|s| !s.is_empty()).unwrap().parse().unwrap()
    };
    let app = value("T2app°/T2* = ");
    let sim = value("simulated T2°/T2* = ");
    assert!((app - 0.0).abs() > 0.0 && (1.0..=2.0).contains(&(sim / app)), "{out}");
    let csv = fs::read_to_string(dir.path().join("optimum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn clock_and_floquet_headers() {
    let dir = tempfile::tempdir().unwrap();
    let clock = write_config(
        dir.path(),
        "k.cfg",
        "scenario = clock\ngrid.omega1 = 10, 40\nnoise.t2_star = 1\nnoise.sigma_eps = 0.005\nnoise.n_realizations = 64\n",
    );
    let o = dressedsim(&["run", "--config", clock.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("clock.csv")).unwrap();
    assert!(csv.starts_with("omega1_scaled,t2_scaled_dd,t2_scaled_circ\r\n"));
    assert_eq!(csv.lines().count(), 3);

    let floquet = write_config(
        dir.path(),
        "f.cfg",
        "scenario = floquet\nfloquet.omega2 = 2.35\ngrid.omega1 = geom(10, 40, 4)\nnoise.t2_star = 1\nnoise.sigma_eps = 0.005\n",
    );
    let o = dressedsim(&["run", "--config", floquet.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("floquet.csv")).unwrap();
    assert!(csv.starts_with("omega1_rad_s,t2_bar_s,t2_app_s\r\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let o = dressedsim(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
        seen += 1;
    }
    assert_eq!(seen, 7);
}
