//! Command-line entry points. The binary is a thin wrapper around [`run`], so
//! integration tests drive the same code without spawning processes.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::io::{self, IoError};
use crate::packet::{GaussianPacket, PacketError, Plane};
use crate::state::{make_split_state, project, Outcome, ProjectionBasis, StateError, VelocityField};
use crate::svg;
use crate::trajectory::{
    default_seeds, trace, trace_steered, velocity_change_map, OutcomeLabel, PlaneGrid, Trajectory,
    TrajectoryError,
};
use crate::weakmeas::{
    calibrate_zeta, default_tilt_angles, extract_weak_momentum, fit_gaussian_center,
    normalize_images, synthesize_density_strip, synthesize_images, synthesize_sweep,
    window_positions, ArcsinBranchMode, CouplingModel, KernelInterpolator, SensorGeometry,
    WeakMeasError, DEFAULT_COUNT_FLOOR,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(#[from] IoError),
    #[error("{0}")]
    Packet(#[from] PacketError),
    #[error("{0}")]
    State(#[from] StateError),
    #[error("{0}")]
    Trajectory(#[from] TrajectoryError),
    #[error("{0}")]
    Detector(#[from] WeakMeasError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Stable machine-parsable category for the one-line error output.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Packet(_) | CliError::State(_) | CliError::Trajectory(_) => "physics",
            CliError::Detector(_) => "detector",
            CliError::Usage(_) => "usage",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bohm-steer",
    about = "Bohmian trajectory steering simulator with weak-measurement detector emulation"
)]
pub struct Cli {
    /// Flat key = value config file; defaults apply when omitted
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for generated files
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace unprojected trajectories and write them as CSV
    Simulate,
    /// Trace steered trajectories, one CSV per switching plane
    Steer {
        /// Restrict to one projection angle in degrees (default: config list)
        #[arg(long)]
        theta: Option<f64>,
        /// Remote outcome: theta or theta_bar
        #[arg(long, default_value = "theta")]
        outcome: String,
        /// Restrict to one switching plane in metres (default: config list)
        #[arg(long)]
        z_switch: Option<f64>,
    },
    /// Tabulate the velocity change (v_projected - v_unprojected)/c
    VelocityMap {
        /// Projection angle in degrees
        #[arg(long)]
        theta: f64,
        /// Remote outcome: theta or theta_bar
        #[arg(long, default_value = "theta")]
        outcome: String,
    },
    /// Synthesize detector image files for every plane and state
    Emulate {
        /// Restrict to one plane index (default: all planes)
        #[arg(long)]
        plane: Option<usize>,
        /// Override the config RNG seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the inverse pipeline on emulated images
    Reconstruct,
    /// Fit the coupling strength from a synthetic tilt sweep
    Calibrate,
    /// Render a CSV file produced by the other commands as SVG
    Render {
        /// Input CSV (trajectory, map, or velocity format)
        #[arg(long)]
        input: PathBuf,
        /// Output SVG path (default: input with .svg extension)
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Files written and human-readable report lines from one invocation.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub report: Vec<String>,
}

/// Everything derived from the config that the subcommands share.
struct Context {
    config: ExperimentConfig,
    grid: PlaneGrid,
    template: GaussianPacket,
    unprojected: VelocityField,
}

impl Context {
    fn new(config: ExperimentConfig) -> Result<Self, CliError> {
        config.validate()?;
        let grid = PlaneGrid::uniform(config.plane_min, config.plane_max, config.plane_count)?;
        let k = config.wavenumber();
        let template = GaussianPacket::unit(0.0, config.packet_waist, 0.0, k)?;
        let state = make_split_state(config.slit_separation, &template)?;
        let unprojected = VelocityField::new(state, k);
        Ok(Context { config, grid, template, unprojected })
    }

    fn projected(&self, theta_deg: f64, outcome: Outcome) -> Result<VelocityField, CliError> {
        let state = make_split_state(self.config.slit_separation, &self.template)?;
        let basis = ProjectionBasis::from_degrees(theta_deg)?;
        let (projected, _) = project(&state, basis, outcome)?;
        Ok(VelocityField::new(projected, self.config.wavenumber()))
    }

    fn seeds(&self) -> Vec<f64> {
        let z0 = Plane::new(self.config.plane_min).expect("plane_min is finite");
        let half_span = 2.0 * self.template.width_at(z0);
        let d = self.config.slit_separation;
        default_seeds(&[-d / 2.0, d / 2.0], half_span, self.config.trajectories_per_packet)
    }

    /// Snap a requested switching z to the nearest grid plane; the figure
    /// captions round to the millimetre, so small offsets are expected.
    fn snap_to_grid(&self, z: f64) -> Result<(usize, f64), CliError> {
        let planes = self.grid.planes();
        let (index, &nearest) = planes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - z).abs().total_cmp(&(*b - z).abs()))
            .expect("grid is nonempty");
        let spacing = (planes[planes.len() - 1] - planes[0]) / (planes.len() - 1) as f64;
        if (nearest - z).abs() > 0.5 * spacing {
            return Err(CliError::Usage(format!(
                "z_switch {z} is more than half a plane spacing from any grid plane"
            )));
        }
        Ok((index, nearest))
    }

    fn geometry(&self) -> Result<SensorGeometry, CliError> {
        Ok(SensorGeometry::new(crate::weakmeas::PIXEL_PITCH_MM, self.config.beta)?)
    }

    fn coupling(&self) -> Result<CouplingModel, CliError> {
        Ok(CouplingModel::new(self.config.zeta, self.config.phi0)?)
    }

    /// Emulated states: the unprojected field plus each projection angle with
    /// outcome Theta, with file-name-safe labels.
    fn emulation_states(&self) -> Result<Vec<(String, VelocityField)>, CliError> {
        let mut states = vec![("unproj".to_string(), self.unprojected.clone())];
        for (i, &theta) in self.config.theta_list_deg.iter().enumerate() {
            states.push((format!("theta{i}"), self.projected(theta, Outcome::Theta)?));
        }
        Ok(states)
    }
}

fn parse_outcome(text: &str) -> Result<Outcome, CliError> {
    text.parse().map_err(CliError::Usage)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| {
        CliError::Io(IoError::File { path: dir.display().to_string(), source })
    })
}

/// Sensor-strip midline used by the emulated center-calibration frames; the
/// fractional part exercises the fractional-center plumbing.
const STRIP_MIDLINE: f64 = 480.3;
const STRIP_LEN: usize = 961;

/// SplitMix64-style mixer deriving independent per-image seeds from the base
/// seed and a few tags.
fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = base;
    for &tag in tags {
        state = state
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(tag.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        state ^= state >> 30;
        state = state.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        state ^= state >> 27;
        state = state.wrapping_mul(0x94d0_49bb_1331_11eb);
        state ^= state >> 31;
    }
    state
}

fn image_path(dir: &Path, state: &str, plane_index: usize, port: char) -> PathBuf {
    dir.join(format!("img_{state}_p{plane_index:02}_{port}.txt"))
}

pub fn run(cli: &Cli) -> Result<RunOutput, CliError> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let ctx = Context::new(config)?;
    ensure_dir(&cli.out_dir)?;
    match &cli.command {
        Command::Simulate => run_simulate(&ctx, &cli.out_dir),
        Command::Steer { theta, outcome, z_switch } => {
            run_steer(&ctx, &cli.out_dir, *theta, outcome, *z_switch)
        }
        Command::VelocityMap { theta, outcome } => {
            run_velocity_map(&ctx, &cli.out_dir, *theta, outcome)
        }
        Command::Emulate { plane, seed } => run_emulate(&ctx, &cli.out_dir, *plane, *seed),
        Command::Reconstruct => run_reconstruct(&ctx, &cli.out_dir),
        Command::Calibrate => run_calibrate(&ctx),
        Command::Render { input, output } => run_render(input, output.as_deref()),
    }
}

fn run_simulate(ctx: &Context, out_dir: &Path) -> Result<RunOutput, CliError> {
    let trajectories: Vec<Trajectory> = ctx
        .seeds()
        .iter()
        .map(|&x0| trace(x0, &ctx.grid, &ctx.unprojected))
        .collect();
    let aborted = trajectories.iter().filter(|t| t.node_aborted).count();
    let rows = io::trajectory_rows(&trajectories);
    let path = out_dir.join("trajectories_unprojected.csv");
    io::write_trajectories(&path, &rows)?;
    let mut out = RunOutput::default();
    out.report.push(format!(
        "simulate: {} trajectories, {} planes, {aborted} aborted at nodes",
        trajectories.len(),
        ctx.grid.len()
    ));
    out.files.push(path);
    Ok(out)
}

fn run_steer(
    ctx: &Context,
    out_dir: &Path,
    theta: Option<f64>,
    outcome: &str,
    z_switch: Option<f64>,
) -> Result<RunOutput, CliError> {
    let outcome = parse_outcome(outcome)?;
    let thetas: Vec<f64> = match theta {
        Some(t) => vec![t],
        None => ctx.config.theta_list_deg.clone(),
    };
    let switches: Vec<f64> = match z_switch {
        Some(z) => vec![z],
        None => ctx.config.z_switch_list.clone(),
    };
    let seeds = ctx.seeds();
    let mut out = RunOutput::default();
    for &requested in &switches {
        let (_, z_snapped) = ctx.snap_to_grid(requested)?;
        if (z_snapped - requested).abs() > 1e-9 {
            out.report.push(format!(
                "steer: z_switch {requested} snapped to grid plane {z_snapped}"
            ));
        }
        let mut trajectories = Vec::new();
        for &theta_deg in &thetas {
            let projected = ctx.projected(theta_deg, outcome)?;
            let label = OutcomeLabel { theta: theta_deg.to_radians(), outcome };
            for &x0 in &seeds {
                trajectories.push(trace_steered(
                    x0,
                    &ctx.grid,
                    z_snapped,
                    &ctx.unprojected,
                    &projected,
                    label,
                )?);
            }
        }
        let rows = io::trajectory_rows(&trajectories);
        let path = out_dir.join(format!("steer_z{requested:.3}.csv"));
        io::write_trajectories(&path, &rows)?;
        out.report.push(format!(
            "steer: z_switch {z_snapped}: {} trajectories ({} angles)",
            trajectories.len(),
            thetas.len()
        ));
        out.files.push(path);
    }
    Ok(out)
}

fn run_velocity_map(
    ctx: &Context,
    out_dir: &Path,
    theta: f64,
    outcome: &str,
) -> Result<RunOutput, CliError> {
    let outcome = parse_outcome(outcome)?;
    let projected = ctx.projected(theta, outcome)?;
    let xs: Vec<f64> = (0..321)
        .map(|i| -4e-3 + 8e-3 * i as f64 / 320.0)
        .collect();
    let map = velocity_change_map(&xs, ctx.grid.planes(), &ctx.unprojected, &projected);
    let missing = map.dv_over_c.iter().filter(|v| v.is_none()).count();
    let path = out_dir.join(format!("map_theta{theta:.1}_{}.csv", outcome.label()));
    io::write_map(&path, &map)?;
    let mut out = RunOutput::default();
    out.report.push(format!(
        "velocity-map: {}x{} grid, {missing} node points",
        map.xs.len(),
        map.zs.len()
    ));
    out.files.push(path);
    Ok(out)
}

fn run_emulate(
    ctx: &Context,
    out_dir: &Path,
    plane: Option<usize>,
    seed: Option<u64>,
) -> Result<RunOutput, CliError> {
    let geometry = ctx.geometry()?;
    let model = ctx.coupling()?;
    let base_seed = seed.unwrap_or(ctx.config.seed);
    let image_dir = out_dir.join("images");
    ensure_dir(&image_dir)?;
    let states = ctx.emulation_states()?;
    let plane_indices: Vec<usize> = match plane {
        Some(j) if j >= ctx.grid.len() => {
            return Err(CliError::Usage(format!(
                "plane index {j} out of range (grid has {} planes)",
                ctx.grid.len()
            )))
        }
        Some(j) => vec![j],
        None => (0..ctx.grid.len()).collect(),
    };
    let d = ctx.config.slit_separation;
    let k = ctx.config.wavenumber();
    let branch = |center: f64| -> Result<VelocityField, CliError> {
        let packet = ctx.template.with_center(center);
        let state = crate::state::BranchState::new(vec![crate::state::Branch {
            weight: num_complex::Complex64::new(1.0, 0.0),
            packets: vec![(num_complex::Complex64::new(1.0, 0.0), packet)],
        }])?;
        Ok(VelocityField::new(state, k))
    };
    let h_field = branch(-d / 2.0)?;
    let v_field = branch(d / 2.0)?;
    let mut out = RunOutput::default();
    let mut overrange_total = 0usize;
    for &j in &plane_indices {
        let z = ctx.grid.planes()[j];
        let plane = Plane::new(z).expect("grid planes are finite");
        // four-center calibration: H and V projection frames on both ports
        let center_of = |field: &VelocityField, tag: u64| -> Result<f64, CliError> {
            let mut rng =
                ChaCha12Rng::seed_from_u64(derive_seed(base_seed, &[j as u64, tag, 0xca11]));
            let strip = synthesize_density_strip(
                field,
                plane,
                &geometry,
                STRIP_MIDLINE,
                STRIP_LEN,
                ctx.config.photon_budget,
                Some(&mut rng),
            );
            Ok(fit_gaussian_center(&strip)?.center)
        };
        let x1 = center_of(&h_field, 1)?;
        let x2 = center_of(&v_field, 2)?;
        let x3 = center_of(&h_field, 3)?;
        let x4 = center_of(&v_field, 4)?;
        let r_center = 0.5 * (x1 + x2);
        let l_center = 0.5 * (x3 + x4);
        for (si, (name, field)) in states.iter().enumerate() {
            let pair = synthesize_images(
                field,
                plane,
                &model,
                &geometry,
                r_center,
                l_center,
                ctx.config.photon_budget,
                derive_seed(base_seed, &[j as u64, si as u64, 0x516e]),
            )?;
            if pair.phase_overrange > 0 {
                overrange_total += pair.phase_overrange;
                out.report.push(format!(
                    "warning: plane {j} state {name}: {} pixels left the principal phase range",
                    pair.phase_overrange
                ));
            }
            let r_path = image_path(&image_dir, name, j, 'r');
            let l_path = image_path(&image_dir, name, j, 'l');
            io::write_detector_image(&r_path, &pair.r)?;
            io::write_detector_image(&l_path, &pair.l)?;
            out.files.push(r_path);
            out.files.push(l_path);
        }
    }
    out.report.push(format!(
        "emulate: {} planes x {} states, seed {base_seed}, {overrange_total} overrange pixels",
        plane_indices.len(),
        states.len()
    ));
    Ok(out)
}

/// Per-plane reconstructed velocity: interpolator over the surviving pixels
/// plus the raw per-pixel samples.
struct PlaneReconstruction {
    interpolator: Option<KernelInterpolator>,
    samples: Vec<(f64, Option<f64>)>,
}

fn reconstruct_plane(
    image_dir: &Path,
    state: &str,
    plane_index: usize,
    model: &CouplingModel,
    bandwidth: f64,
) -> Result<PlaneReconstruction, CliError> {
    let r = io::read_detector_image(&image_path(image_dir, state, plane_index, 'r'))?;
    let l = io::read_detector_image(&image_path(image_dir, state, plane_index, 'l'))?;
    let pair = normalize_images(&r, &l)?;
    let profile = extract_weak_momentum(&pair, model, DEFAULT_COUNT_FLOOR);
    let positions = window_positions(r.center_offset, r.pixel_pitch_mm, r.magnification_beta)?;
    let samples: Vec<(f64, Option<f64>)> = positions
        .iter()
        .zip(&profile.k_ratio)
        .map(|(&x, &v)| (x, v))
        .collect();
    let interpolator = if profile.k_ratio.iter().any(Option::is_some) {
        Some(KernelInterpolator::from_profile(&positions, &profile, bandwidth))
    } else {
        None
    };
    Ok(PlaneReconstruction { interpolator, samples })
}

/// Euler-step a trajectory over interpolated velocities; any missing velocity
/// aborts the path like a node does in the analytic tracer.
fn trace_interpolated<F>(
    x0: f64,
    grid: &PlaneGrid,
    mut velocity_over_c: F,
    branch_z: Option<f64>,
    outcome_label: Option<OutcomeLabel>,
) -> Trajectory
where
    F: FnMut(usize, f64) -> Option<f64>,
{
    let planes = grid.planes();
    let c = crate::state::SPEED_OF_LIGHT;
    let mut points = vec![(x0, planes[0])];
    let mut x = x0;
    let mut node_aborted = false;
    for j in 0..planes.len() - 1 {
        let stepped = velocity_over_c(j, x).and_then(|ratio| {
            crate::trajectory::euler_step(x, planes[j], planes[j + 1], ratio * c, c).ok()
        });
        match stepped {
            Some(next) => {
                x = next;
                points.push((x, planes[j + 1]));
            }
            None => {
                node_aborted = true;
                break;
            }
        }
    }
    Trajectory { points, branch_z, outcome_label, node_aborted }
}

fn run_reconstruct(ctx: &Context, out_dir: &Path) -> Result<RunOutput, CliError> {
    let model = ctx.coupling()?;
    let geometry = ctx.geometry()?;
    let bandwidth = ctx.config.kernel_bandwidth_px * geometry.pixel_width_m();
    let image_dir = out_dir.join("images");
    let states = ctx.emulation_states()?;
    let mut out = RunOutput::default();
    // per state, per plane: extraction + interpolator
    let mut reconstructions: Vec<Vec<PlaneReconstruction>> = Vec::new();
    for (name, _) in &states {
        let mut planes = Vec::with_capacity(ctx.grid.len());
        let mut rows: Vec<(f64, f64, Option<f64>)> = Vec::new();
        for j in 0..ctx.grid.len() {
            let recon = reconstruct_plane(&image_dir, name, j, &model, bandwidth)?;
            let z = ctx.grid.planes()[j];
            rows.extend(recon.samples.iter().map(|&(x, v)| (x, z, v)));
            planes.push(recon);
        }
        let path = out_dir.join(format!("recon_velocity_{name}.csv"));
        io::write_velocities(&path, &rows)?;
        out.files.push(path);
        reconstructions.push(planes);
    }
    let velocity_from = |recons: &[PlaneReconstruction], j: usize, x: f64| -> Option<f64> {
        recons[j]
            .interpolator
            .as_ref()
            .and_then(|interp| interp.estimate(x).ok())
    };
    let seeds = ctx.seeds();
    // unprojected trajectories from the reconstructed field
    let unproj_recon = &reconstructions[0];
    let trajectories: Vec<Trajectory> = seeds
        .iter()
        .map(|&x0| {
            trace_interpolated(x0, &ctx.grid, |j, x| velocity_from(unproj_recon, j, x), None, None)
        })
        .collect();
    let path = out_dir.join("recon_trajectories_unprojected.csv");
    io::write_trajectories(&path, &io::trajectory_rows(&trajectories))?;
    out.files.push(path);
    // steered trajectories, one file per switching plane, grouped by angle
    for &requested in &ctx.config.z_switch_list {
        let (switch_index, z_snapped) = ctx.snap_to_grid(requested)?;
        let mut trajectories = Vec::new();
        for (i, &theta_deg) in ctx.config.theta_list_deg.iter().enumerate() {
            let theta_recon = &reconstructions[i + 1];
            let label = OutcomeLabel {
                theta: theta_deg.to_radians(),
                outcome: Outcome::Theta,
            };
            for &x0 in &seeds {
                trajectories.push(trace_interpolated(
                    x0,
                    &ctx.grid,
                    |j, x| {
                        if j >= switch_index {
                            velocity_from(theta_recon, j, x)
                        } else {
                            velocity_from(unproj_recon, j, x)
                        }
                    },
                    Some(z_snapped),
                    Some(label),
                ));
            }
        }
        let aborted = trajectories.iter().filter(|t| t.node_aborted).count();
        let path = out_dir.join(format!("recon_steer_z{requested:.3}.csv"));
        io::write_trajectories(&path, &io::trajectory_rows(&trajectories))?;
        out.report.push(format!(
            "reconstruct: z_switch {z_snapped}: {} trajectories, {aborted} aborted",
            trajectories.len()
        ));
        out.files.push(path);
    }
    out.report.push(format!(
        "reconstruct: {} states x {} planes",
        states.len(),
        ctx.grid.len()
    ));
    Ok(out)
}

fn run_calibrate(ctx: &Context) -> Result<RunOutput, CliError> {
    let sweep = synthesize_sweep(ctx.config.zeta, ctx.config.phi0, &default_tilt_angles(), None);
    let fit = calibrate_zeta(&sweep, ArcsinBranchMode::Unwrap)?;
    let mut out = RunOutput::default();
    out.report.push(format!("zeta={:.6}", fit.model.zeta));
    out.report.push(format!("phi0={:.6}", fit.model.phi0));
    out.report.push(format!("zeta_stderr={:.3e}", fit.zeta_stderr));
    out.report.push(format!("phi0_stderr={:.3e}", fit.phi0_stderr));
    Ok(out)
}

fn run_render(input: &Path, output: Option<&Path>) -> Result<RunOutput, CliError> {
    let text = std::fs::read_to_string(input).map_err(|source| {
        CliError::Io(IoError::File { path: input.display().to_string(), source })
    })?;
    let header = text.lines().next().unwrap_or("");
    let svg_text = if header == io::TRAJECTORY_HEADER {
        let rows = io::read_trajectories(input)?;
        svg::render_trajectories(&rows)
    } else if header == io::MAP_HEADER || header == io::VELOCITY_HEADER {
        let rows = io::read_xz_values(input, header)?;
        svg::render_points(&rows)
    } else {
        return Err(CliError::Usage(format!(
            "unrecognized CSV header {header:?} in {}",
            input.display()
        )));
    };
    let out_path = match output {
        Some(p) => p.to_path_buf(),
        None => input.with_extension("svg"),
    };
    io::write_atomic(&out_path, &svg_text)?;
    let mut out = RunOutput::default();
    out.report.push(format!("render: wrote {}", out_path.display()));
    out.files.push(out_path);
    Ok(out)
}

/// Convenience used by the binary and by tests: parse args, run, and map the
/// outcome to a process exit code, printing the report to stdout and a single
/// categorized line to stderr on failure.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/usage text
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(output) => {
            for line in &output.report {
                println!("{line}");
            }
            for file in &output.files {
                println!("wrote {}", file.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error category={} message={:?}", e.category(), e.to_string());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn snap_matches_exact_and_rounded_switch_planes() {
        let ctx = Context::new(ExperimentConfig::default()).unwrap();
        let (i0, z0) = ctx.snap_to_grid(1.492).unwrap();
        assert_eq!(i0, 0);
        assert_eq!(z0, 1.492);
        // the figure-caption value 2.245 m sits closest to plane 11
        let (i1, z1) = ctx.snap_to_grid(2.245).unwrap();
        assert_eq!(i1, 11);
        assert!((z1 - 2.245).abs() < 0.05);
        assert!(ctx.snap_to_grid(10.0).is_err());
    }

    #[test]
    fn derive_seed_separates_tags() {
        let a = derive_seed(1, &[0, 0]);
        let b = derive_seed(1, &[0, 1]);
        let c = derive_seed(2, &[0, 0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, &[0, 0]));
    }

    #[test]
    fn calibrate_reports_the_config_zeta() {
        let dir = tempfile::tempdir().unwrap();
        let args = cli(&[
            "bohm-steer",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "calibrate",
        ]);
        let out = run(&args).unwrap();
        assert!(out.report.iter().any(|l| l.starts_with("zeta=336.000")), "{:?}", out.report);
        assert!(out.report.iter().any(|l| l.starts_with("phi0=")));
    }

    #[test]
    fn unknown_outcome_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let args = cli(&[
            "bohm-steer",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "steer",
            "--outcome",
            "sideways",
        ]);
        let err = run(&args).unwrap_err();
        assert_eq!(err.category(), "usage");
    }

    #[test]
    fn simulate_writes_the_expected_csv() {
        let dir = tempfile::tempdir().unwrap();
        let args = cli(&[
            "bohm-steer",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "simulate",
        ]);
        let out = run(&args).unwrap();
        assert_eq!(out.files.len(), 1);
        let rows = io::read_trajectories(&out.files[0]).unwrap();
        let config = ExperimentConfig::default();
        assert_eq!(rows.len(), 2 * config.trajectories_per_packet * config.plane_count);
    }

    #[test]
    fn emulate_plane_index_out_of_range_is_usage() {
        let dir = tempfile::tempdir().unwrap();
        let args = cli(&[
            "bohm-steer",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "emulate",
            "--plane",
            "99",
        ]);
        assert_eq!(run(&args).unwrap_err().category(), "usage");
    }
}
