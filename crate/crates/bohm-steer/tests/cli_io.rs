//! End-to-end checks of the CLI layer and the on-disk formats: determinism,
//! config plumbing, and render output.

use std::path::{Path, PathBuf};

use bohm_steer::cli::{self, Cli, Command};
use bohm_steer::io;

fn run(config: Option<&Path>, out_dir: &Path, command: Command) -> cli::RunOutput {
    let cli = Cli {
        config: config.map(Path::to_path_buf),
        out_dir: out_dir.to_path_buf(),
        command,
    };
    cli::run(&cli).expect("cli run failed")
}

fn read_all(files: &[PathBuf]) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = files
        .iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(p).expect("missing output file"),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(None, &dir.path().join("a"), Command::Simulate);
    let b = run(None, &dir.path().join("b"), Command::Simulate);
    assert!(!a.files.is_empty());
    assert_eq!(read_all(&a.files), read_all(&b.files));
}

#[test]
fn emulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "theta_list = 18.5\nseed = 7\n").unwrap();
    let emulate = || Command::Emulate { plane: Some(0), seed: None };
    let a = run(Some(&config), &dir.path().join("a"), emulate());
    let b = run(Some(&config), &dir.path().join("b"), emulate());
    assert!(!a.files.is_empty());
    assert_eq!(read_all(&a.files), read_all(&b.files));
}

#[test]
fn emulate_seed_flag_changes_the_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "theta_list = 18.5\n").unwrap();
    let emulate = |seed| Command::Emulate { plane: Some(0), seed };
    let a = run(Some(&config), &dir.path().join("a"), emulate(Some(1)));
    let b = run(Some(&config), &dir.path().join("b"), emulate(Some(2)));
    assert_ne!(read_all(&a.files), read_all(&b.files));
}

#[test]
fn config_file_drives_the_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "plane_count = 9\ntrajectories_per_packet = 2\n").unwrap();
    let out = run(Some(&config), dir.path(), Command::Simulate);
    let rows = io::read_trajectories(&out.files[0]).unwrap();
    // 2 seeds per packet, 2 packets, 9 planes each
    assert_eq!(rows.len(), 2 * 2 * 9);
    assert_eq!(rows.iter().filter(|r| r.trajectory_id == 0).count(), 9);
}

#[test]
fn bad_config_is_rejected_with_config_category() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "plane_count = 1\n").unwrap();
    let cli = Cli {
        config: Some(config),
        out_dir: dir.path().to_path_buf(),
        command: Command::Simulate,
    };
    let err = cli::run(&cli).unwrap_err();
    assert_eq!(err.category(), "config");
}

#[test]
fn steer_flags_restrict_the_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(None, dir.path(), Command::Steer {
        theta: Some(18.5),
        outcome: "theta_bar".into(),
        z_switch: Some(2.245),
    });
    assert_eq!(out.files.len(), 1);
    let rows = io::read_trajectories(&out.files[0]).unwrap();
    assert!(rows.iter().all(|r| r.theta_deg == Some(18.5)));
    assert!(rows
        .iter()
        .all(|r| r.outcome.map(|o| o.label()) == Some("theta_bar")));
}

#[test]
fn render_produces_svg_for_each_csv_kind() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    csvs.extend(run(None, dir.path(), Command::Simulate).files);
    csvs.extend(
        run(None, dir.path(), Command::VelocityMap { theta: 18.5, outcome: "theta".into() })
            .files,
    );
    assert_eq!(csvs.len(), 2);
    for csv in csvs {
        let rendered = run(None, dir.path(), Command::Render {
            input: csv.clone(),
            output: None,
        });
        assert_eq!(rendered.files.len(), 1);
        assert_eq!(rendered.files[0].extension().unwrap(), "svg");
        let text = std::fs::read_to_string(&rendered.files[0]).unwrap();
        assert!(text.starts_with("<svg"), "not an svg: {csv:?}");
        assert!(text.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn calibrate_reports_the_fitted_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(None, dir.path(), Command::Calibrate);
    let zeta_line = out
        .report
        .iter()
        .find(|l| l.starts_with("zeta="))
        .expect("missing zeta report line");
    let zeta: f64 = zeta_line.trim_start_matches("zeta=").parse().unwrap();
    assert!((zeta - 336.0).abs() < 2.0, "zeta {zeta}");
}

#[test]
fn detector_images_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "theta_list = 18.5\nseed = 11\n").unwrap();
    let out = run(Some(&config), dir.path(), Command::Emulate { plane: Some(3), seed: None });
    let image_files: Vec<_> = out
        .files
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    assert!(!image_files.is_empty());
    for path in image_files {
        let original = std::fs::read_to_string(path).unwrap();
        let image = io::read_detector_image(path).unwrap();
        assert_eq!(io::detector_image_text(&image), original);
    }
}

#[test]
fn unknown_subcommand_exits_with_usage_code() {
    let code = cli::main_with_args(["bohm-steer", "frobnicate"]);
    assert_ne!(code, 0);
}
