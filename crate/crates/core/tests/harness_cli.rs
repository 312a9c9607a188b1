use std::path::Path;
use std::process::Command;

use randstab::harness::{
    lemma1_scatter, read_trials, run_experiment, AlgoSelection, ExperimentConfig, Reason,
    SystemSource,
};
use randstab::preset_benchmark;

fn small_config(out: Option<&Path>) -> ExperimentConfig {
    ExperimentConfig {
        algo: AlgoSelection::Both,
        horizons: vec![60, 300],
        episode_counts: vec![2, 4],
        sigmas: vec![1.0],
        replications: 3,
        output: out.map(Path::to_path_buf),
        ..ExperimentConfig::new(17)
    }
}

#[test]
fn single_cell_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.csv");
    let cfg = ExperimentConfig {
        algo: AlgoSelection::Sf,
        horizons: vec![100],
        episode_counts: vec![3],
        replications: 1,
        output: Some(out.clone()),
        ..ExperimentConfig::new(1)
    };
    run_experiment(&cfg).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "algo,T,k,sigma,rep,seed,error_norm,closed_loop_radius,stabilized,overflow,redraws,reason");
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let out = dir.path().join(format!("t{threads}.csv"));
        let cfg = ExperimentConfig {
            threads: Some(threads),
            ..small_config(Some(&out))
        };
        run_experiment(&cfg).unwrap();
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn rows_are_consistent_and_ordered() {
    let records = run_experiment(&small_config(None)).unwrap();
    assert_eq!(records.len(), 2 * 2 * 2 * 3);
    for r in &records {
        assert_eq!(r.stabilized, r.closed_loop_radius < 1.0 && !r.overflow);
        assert!(r.error_norm >= 0.0);
        if r.reason != Reason::Ok {
            assert!(!r.stabilized);
        }
    }
    let keys: Vec<_> = records.iter().map(|r| (r.algo, r.horizon, r.episodes, r.rep)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rt.csv");
    let records = run_experiment(&small_config(Some(&out))).unwrap();
    assert_eq!(read_trials(&out).unwrap(), records);
}

#[test]
fn sf_k5_stabilizes_at_t2000() {
    let cfg = ExperimentConfig {
        algo: AlgoSelection::Sf,
        horizons: vec![2000],
        episode_counts: vec![5],
        replications: 100,
        ..ExperimentConfig::new(2000)
    };
    let records = run_experiment(&cfg).unwrap();
    let stabilized = records.iter().filter(|r| r.stabilized).count();
    assert!(stabilized >= 95, "{stabilized}/100");
}

#[test]
fn invalid_grids_are_rejected() {
    let bad_k = ExperimentConfig {
        episode_counts: vec![1],
        ..small_config(None)
    };
    assert!(matches!(run_experiment(&bad_k), Err(randstab::Error::Config(_))));
    let no_reps = ExperimentConfig {
        replications: 0,
        ..small_config(None)
    };
    assert!(matches!(run_experiment(&no_reps), Err(randstab::Error::Config(_))));
    let missing = ExperimentConfig {
        system: SystemSource::File("/nonexistent/system.json".into()),
        ..small_config(None)
    };
    assert!(run_experiment(&missing).unwrap_err().is_io());
}

#[test]
fn far_perturbations_destabilize() {
    let (plant, costs) = preset_benchmark();
    let records = lemma1_scatter(&plant, &costs, 200, &[100.0], 5).unwrap();
    assert!(records.iter().any(|r| r.closed_loop_radius >= 1.0));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_randstab")).args(args).output().unwrap()
}

#[test]
fn dare_prints_fixed_format() {
    let out = cli(&["dare", "--system", "preset"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("K =\n  2.840006"), "{text}");
    assert!(text.contains("L =\n  0.452859"), "{text}");
    assert!(text.trim_end().ends_with("spectral_radius = 0.509558"), "{text}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let out_s = out.to_str().unwrap();
    let ok = cli(&["run", "--algo", "sf", "--T", "50", "--k", "3", "--reps", "2", "--out", out_s]);
    assert_eq!(ok.status.code(), Some(0));

    let summary = dir.path().join("s.csv");
    let sum = cli(&["summarize", "--in", out_s, "--out", summary.to_str().unwrap()]);
    assert_eq!(sum.status.code(), Some(0));
    let text = std::fs::read_to_string(&summary).unwrap();
    assert!(text.starts_with("algo,T,k,sigma,n,median_error,q1_error,q3_error,iqr_error,stabilized_pct\nsf,50,3,1,2,"));

    let bad_k = cli(&["run", "--T", "50", "--k", "1", "--reps", "1", "--out", out_s]);
    assert_eq!(bad_k.status.code(), Some(1));
    let bad_flag = cli(&["run", "--reps", "many"]);
    assert_eq!(bad_flag.status.code(), Some(1));
    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{\"p\": 1}").unwrap();
    assert_eq!(cli(&["dare", "--system", bad_json.to_str().unwrap()]).status.code(), Some(1));

    assert_eq!(cli(&["dare", "--system", "/nonexistent/sys.json"]).status.code(), Some(2));
    let missing_in = cli(&["summarize", "--in", "/nonexistent/in.csv", "--out", out_s]);
    assert_eq!(missing_in.status.code(), Some(2));
    let unwritable = cli(&["scatter", "--samples", "1", "--radii", "0", "--out", "/nonexistent/dir/s.csv"]);
    assert_eq!(unwritable.status.code(), Some(2));
}

#[test]
fn scatter_cli_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sc.csv");
    let res = cli(&["scatter", "--samples", "4", "--radii", "0,0.5", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "perturbation_norm,closed_loop_radius");
    assert_eq!(lines.len(), 9);
    assert!(lines[1].starts_with("0,0.509"));
}

#[test]
fn system_file_without_costs_uses_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scalar.json");
    std::fs::write(&path, r#"{"p": 1, "r": 1, "A": [[2.0]], "B": [[1.0]]}"#).unwrap();
    let out = cli(&["dare", "--system", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // K = 2 + √5 and |a + bL| = (3 − √5)/2.
    assert!(text.contains("4.236068"), "{text}");
    assert!(text.contains("spectral_radius = 0.381966"), "{text}");
}
