//! Average-trajectory reconstruction by explicit Euler stepping through
//! imaging planes, including mid-flight steering at a chosen plane.

use thiserror::Error;

use crate::packet::Plane;
use crate::state::{Outcome, StateError, VelocityField};

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("plane grid must be strictly increasing with at least 2 planes")]
    InvalidGrid,
    #[error("velocity magnitude {0} m/s is not below c")]
    SuperluminalVelocity(f64),
    #[error("z_next {z_next} must be greater than z {z}")]
    NonIncreasingStep { z: f64, z_next: f64 },
    #[error("z_switch {0} does not coincide with a grid plane")]
    SwitchOffGrid(f64),
}

/// Ordered longitudinal positions of the imaging planes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneGrid {
    planes: Vec<f64>,
}

impl PlaneGrid {
    pub fn new(planes: Vec<f64>) -> Result<Self, TrajectoryError> {
        if planes.len() < 2 || planes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TrajectoryError::InvalidGrid);
        }
        Ok(PlaneGrid { planes })
    }

    /// Uniform grid of `count` planes from `z_min` to `z_max` inclusive.
    pub fn uniform(z_min: f64, z_max: f64, count: usize) -> Result<Self, TrajectoryError> {
        if count < 2 || !(z_max > z_min) {
            return Err(TrajectoryError::InvalidGrid);
        }
        let step = (z_max - z_min) / (count - 1) as f64;
        Self::new((0..count).map(|i| z_min + step * i as f64).collect())
    }

    pub fn planes(&self) -> &[f64] {
        &self.planes
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the plane coinciding with z, within 1e-9 m.
    pub fn index_of(&self, z: f64) -> Option<usize> {
        self.planes.iter().position(|&p| (p - z).abs() < 1e-9)
    }
}

/// Label attached to the steered part of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeLabel {
    pub theta: f64,
    pub outcome: Outcome,
}

/// Ordered (x, z) points of one reconstructed trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<(f64, f64)>,
    pub branch_z: Option<f64>,
    pub outcome_label: Option<OutcomeLabel>,
    /// Set when a node error truncated the path; `points` holds the partial
    /// path up to the failing plane.
    pub node_aborted: bool,
}

impl Trajectory {
    pub fn endpoint(&self) -> (f64, f64) {
        *self.points.last().expect("trajectory has at least one point")
    }

    pub fn is_complete(&self, grid: &PlaneGrid) -> bool {
        !self.node_aborted && self.points.len() == grid.len()
    }
}

/// One explicit Euler step of the trajectory update rule:
/// x + (z_next - z) * v / sqrt(c^2 - v^2).
pub fn euler_step(
    x: f64,
    z: f64,
    z_next: f64,
    v: f64,
    c: f64,
) -> Result<f64, TrajectoryError> {
    if v.abs() >= c {
        return Err(TrajectoryError::SuperluminalVelocity(v));
    }
    if z_next <= z {
        return Err(TrajectoryError::NonIncreasingStep { z, z_next });
    }
    Ok(x + (z_next - z) * v / (c * c - v * v).sqrt())
}

fn velocity_at(field: &VelocityField, x: f64, z: f64) -> Result<f64, StateError> {
    field.velocity(x, Plane::new(z).expect("grid planes are finite"))
}

/// Trace a trajectory through the whole grid under a fixed field.
///
/// The velocity is queried at the left plane of each step. A node aborts the
/// trajectory, leaving the partial path with `node_aborted` set.
pub fn trace(x0: f64, grid: &PlaneGrid, field: &VelocityField) -> Trajectory {
    trace_with(x0, grid, |x, z, _| velocity_at(field, x, z), None, None)
}

/// Trace with steering: the unprojected field applies for z < z_switch, the
/// projected field from z_switch on. `z_switch` must lie on the grid.
pub fn trace_steered(
    x0: f64,
    grid: &PlaneGrid,
    z_switch: f64,
    unprojected: &VelocityField,
    projected: &VelocityField,
    label: OutcomeLabel,
) -> Result<Trajectory, TrajectoryError> {
    let switch_index = grid
        .index_of(z_switch)
        .ok_or(TrajectoryError::SwitchOffGrid(z_switch))?;
    Ok(trace_with(
        x0,
        grid,
        |x, z, j| {
            if j >= switch_index {
                velocity_at(projected, x, z)
            } else {
                velocity_at(unprojected, x, z)
            }
        },
        Some(z_switch),
        Some(label),
    ))
}

fn trace_with<F>(
    x0: f64,
    grid: &PlaneGrid,
    mut velocity: F,
    branch_z: Option<f64>,
    outcome_label: Option<OutcomeLabel>,
) -> Trajectory
where
    F: FnMut(f64, f64, usize) -> Result<f64, StateError>,
{
    let planes = grid.planes();
    let c = crate::state::SPEED_OF_LIGHT;
    let mut points = Vec::with_capacity(planes.len());
    let mut x = x0;
    points.push((x, planes[0]));
    let mut node_aborted = false;
    for j in 0..planes.len() - 1 {
        match velocity(x, planes[j], j) {
            Ok(v) => match euler_step(x, planes[j], planes[j + 1], v, c) {
                Ok(next) => {
                    x = next;
                    points.push((x, planes[j + 1]));
                }
                Err(_) => {
                    node_aborted = true;
                    break;
                }
            },
            Err(_) => {
                node_aborted = true;
                break;
            }
        }
    }
    Trajectory { points, branch_z, outcome_label, node_aborted }
}

/// Default trajectory seeds: `per_packet` equally spaced starts within
/// +-2 w(z0) of each packet center.
pub fn default_seeds(
    centers: &[f64],
    half_span: f64,
    per_packet: usize,
) -> Vec<f64> {
    let mut seeds = Vec::with_capacity(centers.len() * per_packet);
    for &c in centers {
        for i in 0..per_packet {
            let t = if per_packet == 1 {
                0.0
            } else {
                -1.0 + 2.0 * i as f64 / (per_packet - 1) as f64
            };
            seeds.push(c + half_span * t);
        }
    }
    seeds
}

/// Tabulated velocity-change map over an (x, z) grid; nodes are missing.
#[derive(Debug, Clone)]
pub struct VelocityChangeMap {
    pub xs: Vec<f64>,
    pub zs: Vec<f64>,
    /// Row-major over z (outer) then x (inner); dv in units of c.
    pub dv_over_c: Vec<Option<f64>>,
}

impl VelocityChangeMap {
    pub fn get(&self, ix: usize, iz: usize) -> Option<f64> {
        self.dv_over_c[iz * self.xs.len() + ix]
    }
}

/// Tabulate (v_projected - v_unprojected)/c over a grid; node points become
/// missing values rather than errors.
pub fn velocity_change_map(
    xs: &[f64],
    zs: &[f64],
    unprojected: &VelocityField,
    projected: &VelocityField,
) -> VelocityChangeMap {
    let c = unprojected.light_speed();
    let mut dv = Vec::with_capacity(xs.len() * zs.len());
    for &z in zs {
        let plane = Plane::new(z).expect("map planes are finite");
        for &x in xs {
            let value = match (projected.velocity(x, plane), unprojected.velocity(x, plane)) {
                (Ok(vp), Ok(vu)) => Some((vp - vu) / c),
                _ => None,
            };
            dv.push(value);
        }
    }
    VelocityChangeMap { xs: xs.to_vec(), zs: zs.to_vec(), dv_over_c: dv }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::GaussianPacket;
    use crate::state::{
        make_split_state, project, Branch, BranchState, ProjectionBasis, SPEED_OF_LIGHT,
    };
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    const LAMBDA: f64 = 808e-9;
    const W0: f64 = 0.3e-3;
    const D: f64 = 3e-3;
    const Z_MIN: f64 = 1.492;
    const Z_MAX: f64 = 4.5;

    fn wavenumber() -> f64 {
        2.0 * std::f64::consts::PI / LAMBDA
    }

    fn template() -> GaussianPacket {
        GaussianPacket::unit(0.0, W0, 0.0, wavenumber()).unwrap()
    }

    fn unprojected_field() -> VelocityField {
        VelocityField::new(make_split_state(D, &template()).unwrap(), wavenumber())
    }

    fn projected_field(deg: f64, outcome: Outcome) -> VelocityField {
        let state = make_split_state(D, &template()).unwrap();
        let basis = ProjectionBasis::from_degrees(deg).unwrap();
        let (projected, _) = project(&state, basis, outcome).unwrap();
        VelocityField::new(projected, wavenumber())
    }

    fn grid() -> PlaneGrid {
        PlaneGrid::uniform(Z_MIN, Z_MAX, 45).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(PlaneGrid::new(vec![1.0]).is_err());
        assert!(PlaneGrid::new(vec![1.0, 1.0]).is_err());
        assert!(PlaneGrid::new(vec![2.0, 1.0]).is_err());
        assert!(PlaneGrid::uniform(1.0, 2.0, 1).is_err());
        let g = grid();
        assert_eq!(g.len(), 45);
        assert_abs_diff_eq!(g.planes()[1] - g.planes()[0], (Z_MAX - Z_MIN) / 44.0);
    }

    #[test]
    fn euler_step_trivial_cases() {
        let c = SPEED_OF_LIGHT;
        assert_eq!(euler_step(1.0e-3, 1.0, 2.0, 0.0, c).unwrap(), 1.0e-3);
        // v = c/sqrt(2) gives v/sqrt(c^2 - v^2) = 1
        let v = c / 2.0f64.sqrt();
        let stepped = euler_step(0.0, 1.0, 2.0, v, c).unwrap();
        assert_abs_diff_eq!(stepped, 1.0, epsilon = 1e-9);
        assert!(euler_step(0.0, 1.0, 2.0, c, c).is_err());
        assert!(euler_step(0.0, 1.0, 2.0, -1.1 * c, c).is_err());
        assert!(euler_step(0.0, 1.0, 1.0, 0.0, c).is_err());
    }

    #[test]
    fn euler_step_mean_plane_spacing() {
        let c = SPEED_OF_LIGHT;
        let v = 1e-3 * c;
        let dz = 0.0684;
        // independent oracle: the same formula, assembled separately
        let expected = 0.0 + (v / (c * c - v * v).sqrt()) * dz;
        let got = euler_step(0.0, 0.0, dz, v, c).unwrap();
        assert!((got - expected).abs() < 1e-12);
        // the quoted value ignores the relativistic factor of ~1 + 5e-7
        assert_abs_diff_eq!(got, 6.84e-5, epsilon = 1e-9);
    }

    #[test]
    fn euler_step_matches_independent_expression_bitwise() {
        let c = SPEED_OF_LIGHT;
        for i in 0..500 {
            let v = (-0.9 + 1.8 * i as f64 / 499.0) * c;
            let x = 1e-3 * (i as f64 - 250.0);
            let z = 1.0 + i as f64 * 1e-3;
            let dz = 0.01 + i as f64 * 1e-5;
            let got = euler_step(x, z, z + dz, v, c).unwrap();
            // same algebra, multiplications commuted
            let reference = x + v * ((z + dz) - z) / (c * c - v * v).sqrt();
            assert_eq!(got.to_bits(), reference.to_bits(), "i={i}");
        }
    }

    #[test]
    fn packet_center_traces_a_straight_line() {
        let packet = template().with_center(0.7e-3);
        let state = BranchState::new(vec![Branch {
            weight: Complex64::new(1.0, 0.0),
            packets: vec![(Complex64::new(1.0, 0.0), packet)],
        }])
        .unwrap();
        let field = VelocityField::new(state, wavenumber());
        let traj = trace(0.7e-3, &grid(), &field);
        assert!(traj.is_complete(&grid()));
        for &(x, _) in &traj.points {
            assert_abs_diff_eq!(x, 0.7e-3, epsilon = 1e-15);
        }
    }

    #[test]
    fn midline_is_a_straight_unprojected_trajectory() {
        let traj = trace(0.0, &grid(), &unprojected_field());
        assert!(traj.is_complete(&grid()));
        for &(x, _) in &traj.points {
            assert_abs_diff_eq!(x, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn unprojected_trajectories_do_not_cross() {
        let field = unprojected_field();
        let g = grid();
        let plane0 = crate::packet::Plane::new(Z_MIN).unwrap();
        let half_span = 2.0 * template().width_at(plane0);
        let seeds = default_seeds(&[-D / 2.0, D / 2.0], half_span, 8);
        let mut sorted = seeds.clone();
        sorted.sort_by(f64::total_cmp);
        let trajectories: Vec<Trajectory> =
            sorted.iter().map(|&x0| trace(x0, &g, &field)).collect();
        for t in &trajectories {
            assert!(t.is_complete(&g));
        }
        for j in 0..g.len() {
            for pair in trajectories.windows(2) {
                let lo = pair[0].points[j].0;
                let hi = pair[1].points[j].0;
                assert!(hi - lo > 1e-12, "crossing at plane {j}: {lo} !< {hi}");
            }
        }
    }

    #[test]
    fn steered_with_last_plane_switch_equals_unsteered() {
        let g = grid();
        let unproj = unprojected_field();
        let proj = projected_field(18.5, Outcome::Theta);
        let label = OutcomeLabel { theta: 18.5f64.to_radians(), outcome: Outcome::Theta };
        let x0 = -1.2e-3;
        let steered = trace_steered(x0, &g, Z_MAX, &unproj, &proj, label).unwrap();
        let plain = trace(x0, &g, &unproj);
        assert_eq!(steered.points.len(), plain.points.len());
        for (a, b) in steered.points.iter().zip(plain.points.iter()) {
            assert_eq!(a.0.to_bits(), b.0.to_bits());
        }
    }

    #[test]
    fn switch_off_grid_is_rejected() {
        let g = grid();
        let unproj = unprojected_field();
        let proj = projected_field(18.5, Outcome::Theta);
        let label = OutcomeLabel { theta: 18.5f64.to_radians(), outcome: Outcome::Theta };
        assert!(matches!(
            trace_steered(0.0, &g, 2.0, &unproj, &proj, label),
            Err(TrajectoryError::SwitchOffGrid(_))
        ));
    }

    #[test]
    fn early_projection_sends_some_trajectory_across_the_midline() {
        let g = grid();
        let unproj = unprojected_field();
        let proj = projected_field(18.5, Outcome::Theta);
        let label = OutcomeLabel { theta: 18.5f64.to_radians(), outcome: Outcome::Theta };
        let plane0 = crate::packet::Plane::new(Z_MIN).unwrap();
        let half_span = 2.0 * template().width_at(plane0);
        let seeds = default_seeds(&[-D / 2.0, D / 2.0], half_span, 16);
        let crossed = seeds.iter().any(|&x0| {
            let t = trace_steered(x0, &g, Z_MIN, &unproj, &proj, label).unwrap();
            !t.node_aborted && t.points.iter().any(|&(x, _)| x.signum() != x0.signum())
        });
        assert!(crossed, "no steered trajectory crossed the midline");
        let unsteered_crossed = seeds.iter().any(|&x0| {
            let t = trace(x0, &g, &unproj);
            t.points.iter().any(|&(x, _)| x.signum() != x0.signum())
        });
        assert!(!unsteered_crossed, "an unprojected trajectory crossed the midline");
    }

    #[test]
    fn refinement_convergence_of_endpoints() {
        let field = unprojected_field();
        let coarse = PlaneGrid::uniform(Z_MIN, Z_MAX, 45).unwrap();
        let fine = PlaneGrid::uniform(Z_MIN, Z_MAX, 89).unwrap();
        let plane0 = crate::packet::Plane::new(Z_MIN).unwrap();
        let half_span = 2.0 * template().width_at(plane0);
        for &x0 in &default_seeds(&[-D / 2.0, D / 2.0], half_span, 8) {
            let a = trace(x0, &coarse, &field);
            let b = trace(x0, &fine, &field);
            assert!(a.is_complete(&coarse) && b.is_complete(&fine));
            let diff = (a.endpoint().0 - b.endpoint().0).abs();
            assert!(diff < 0.01 * D, "endpoint moved by {diff:e} m for x0={x0:e}");
        }
    }

    #[test]
    fn change_map_is_antisymmetric_at_45_degrees() {
        let unproj = unprojected_field();
        let proj = projected_field(45.0, Outcome::Theta);
        let xs: Vec<f64> = (0..81).map(|i| -4e-3 + 8e-3 * i as f64 / 80.0).collect();
        let zs: Vec<f64> = (0..9).map(|i| Z_MIN + (Z_MAX - Z_MIN) * i as f64 / 8.0).collect();
        let map = velocity_change_map(&xs, &zs, &unproj, &proj);
        let n = xs.len();
        for iz in 0..zs.len() {
            for ix in 0..n {
                let mirrored = n - 1 - ix;
                match (map.get(ix, iz), map.get(mirrored, iz)) {
                    (Some(a), Some(b)) => {
                        assert!((a + b).abs() < 1e-10, "not antisymmetric: {a:e} vs {b:e}")
                    }
                    (None, None) => {}
                    _ => panic!("missing-value pattern is not symmetric"),
                }
            }
        }
    }

    #[test]
    fn change_map_vanishes_outside_the_overlap_region() {
        let unproj = unprojected_field();
        let proj = projected_field(62.9, Outcome::Theta);
        let plane = crate::packet::Plane::new(Z_MIN).unwrap();
        let map = velocity_change_map(&[-4.2e-3, 4.2e-3], &[Z_MIN], &unproj, &proj);
        // both columns sit where the minority branch density ratio is tiny
        let left = template().with_center(-D / 2.0);
        let right = template().with_center(D / 2.0);
        for (ix, &x) in map.xs.iter().enumerate() {
            let (near, far) = if x < 0.0 { (&left, &right) } else { (&right, &left) };
            let ratio = far.evaluate(x, plane).norm_sqr() / near.evaluate(x, plane).norm_sqr();
            assert!(ratio < 1e-8);
            let dv = map.get(ix, 0).expect("density is above the floor here");
            assert!(dv.abs() < 1e-8, "dv/c = {dv:e} at x={x}");
        }
    }

    #[test]
    fn change_map_is_finite_wherever_density_is_above_the_floor() {
        let unproj = unprojected_field();
        let proj = projected_field(31.4, Outcome::Theta);
        let xs: Vec<f64> = (0..161).map(|i| -4e-3 + 8e-3 * i as f64 / 160.0).collect();
        let zs: Vec<f64> = (0..5).map(|i| Z_MIN + (Z_MAX - Z_MIN) * i as f64 / 4.0).collect();
        let map = velocity_change_map(&xs, &zs, &unproj, &proj);
        for v in map.dv_over_c.iter().flatten() {
            assert!(v.is_finite());
        }
    }
}
