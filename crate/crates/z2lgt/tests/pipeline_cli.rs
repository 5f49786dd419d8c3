use std::fs;
use std::path::PathBuf;
use std::process::Command;

use z2lgt::lattice::BasisState;
use z2lgt::pipeline::{run_pipeline, sha256_hex, Modes, RunConfig, DEMO_STATE};
use z2lgt::plots::emit_plots;
use z2lgt::tomography::{FitOptions, GradientMode};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("z2lgt-it-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn small(dir: PathBuf) -> RunConfig {
    RunConfig {
        n_initial_states: 1,
        initial_states: Some(vec![BasisState::parse(DEMO_STATE).unwrap()]),
        gt_points: vec![0.34, 1.7],
        n_bases: 4,
        n_shots: 200,
        n_boots: 50,
        seed: 5,
        output_dir: dir,
        modes: Modes { exact: true, trotter: true, tomography: true, infinite: true },
        fit: FitOptions { gradient: GradientMode::Analytic, n_restarts: 1, max_iter: 150, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn small_run_writes_checksummed_artifacts_deterministically() {
    let a = small(scratch("run-a"));
    let b = small(scratch("run-b"));
    let ma = run_pipeline(&a).unwrap();
    let mb = run_pipeline(&b).unwrap();
    assert!(ma.files.iter().any(|(p, _)| p == "records/state0_t1.txt"));
    assert!(ma.files.iter().any(|(p, _)| p == "fits/tomography_state0_t0.txt"));
    for src in ["exact", "trotter", "tomography", "infinite"] {
        assert!(a.output_dir.join(format!("entropy_{src}.csv")).exists(), "{src}");
        assert!(a.output_dir.join(format!("gap_ratio_{src}.csv")).exists(), "{src}");
    }
    assert!(a.output_dir.join("observables_trotter.csv").exists());
    assert!(!a.output_dir.join("observables_tomography.csv").exists());
    for (rel, sha) in &ma.files {
        assert_eq!(&sha256_hex(&fs::read(a.output_dir.join(rel)).unwrap()), sha, "{rel}");
    }
    // identical seeds give identical bytes for everything but timings
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.exit_code(), mb.exit_code());
    let manifest = fs::read_to_string(a.output_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("[files]") && manifest.contains("seed = 5"));
}

#[test]
fn product_state_at_time_zero() {
    let config = RunConfig {
        n_initial_states: 1,
        gt_points: vec![0.0],
        modes: Modes { exact: true, trotter: false, tomography: false, infinite: false },
        plots: false,
        ..small(scratch("t0"))
    };
    let (data, partial) = z2lgt::pipeline::simulate(&config, None, &mut Vec::new()).unwrap();
    let s = &data[0].samples[0][0];
    assert!(!partial);
    assert_eq!(s.spectrum.total_rank, 1);
    assert!(s.ratios.is_empty());
    assert!(s.entropy.s_vn.abs() < 1e-12);
    let m = run_pipeline(&config).unwrap();
    assert!(m.notes.iter().any(|n| n.contains("no gap ratios")));
    assert!(!config.output_dir.join("egrd_exact.csv").exists());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = small(scratch("bad"));
    c.gt_points = vec![-1.0];
    assert!(run_pipeline(&c).is_err());
    let mut c = small(scratch("bad2"));
    c.initial_states = Some(vec![BasisState::parse("000000000001").unwrap()]);
    assert!(run_pipeline(&c).is_err());
    let mut c = small(scratch("bad3"));
    c.modes = Modes { exact: false, trotter: false, tomography: true, infinite: false };
    assert!(run_pipeline(&c).is_err());
}

#[test]
fn empty_datasets_produce_no_figure() {
    let dir = scratch("plots");
    fs::write(dir.join("gap_ratio_x.csv"), "gt,r_mean,r_std,n_ratios\n0,nan,nan,0\n").unwrap();
    fs::write(dir.join("entropy_x.csv"), "gt,S_vN,S_sym,S_dist\n0,0.1,0.05,0.05\n1,0.3,0.2,0.1\n").unwrap();
    let report = emit_plots(&dir).unwrap();
    assert!(!dir.join("gap_ratio_x.svg").exists());
    assert!(report.notes.iter().any(|n| n.contains("gap_ratio_x")));
    assert!(dir.join("entropy_x.svg").exists());
    assert_eq!(report.written, vec![PathBuf::from("entropy_x.svg")]);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_z2lgt"))
}

#[test]
fn cli_selftest_passes() {
    let out = cli().arg("selftest").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn cli_unknown_preset_is_fatal() {
    let dir = scratch("cli-preset");
    let out = cli().args(["reproduce", "nonsense", "--out"]).arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cli_measure_fit_analyze_chain() {
    let dir = scratch("cli-chain");
    let rec = dir.join("records.txt");
    let fit = dir.join("fit.txt");
    let rho = dir.join("rho.txt");
    let st = |args: &[&str]| {
        let o = cli().args(args).output().unwrap();
        assert!(o.status.code().is_some_and(|c| c == 0 || c == 2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8_lossy(&o.stdout).into_owned()
    };
    let evolve = st(&["evolve", "--state", DEMO_STATE, "--gt", "0.68", "--steps", "4", "--out", rho.to_str().unwrap()]);
    assert!(evolve.contains("gauss 1.0000000000"));
    st(&["measure", "--state", DEMO_STATE, "--gt", "0.68", "--steps", "4", "--bases", "3", "--shots", "100", "--out", rec.to_str().unwrap()]);
    st(&[
        "fit", "--records", rec.to_str().unwrap(), "--out", fit.to_str().unwrap(), "--restarts", "0", "--gradient", "analytic",
    ]);
    assert!(st(&["analyze", fit.to_str().unwrap()]).contains("sector 4"));
    assert!(st(&["analyze", rho.to_str().unwrap()]).contains("S_vN"));
}
