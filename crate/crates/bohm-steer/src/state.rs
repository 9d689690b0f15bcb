//! The steered photon's state before and after the remote projection, and the
//! Bohmian velocity field evaluated from it.
//!
//! A `BranchState` is a list of mutually incoherent branches, each a coherent
//! superposition of Gaussian packets. Before the remote measurement the split
//! photon has two branches (one per polarization tag); a projection collapses
//! it to a single branch whose packets interfere.

use num_complex::Complex64;
use thiserror::Error;

use crate::packet::{GaussianPacket, PacketError, Plane};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative density floor below which the velocity is treated as undefined.
pub const DEFAULT_DENSITY_FLOOR_REL: f64 = 1e-12;
/// Absolute floor, guards against a zero peak estimate.
pub const DENSITY_FLOOR_ABS: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("displacement must be positive, got {0}")]
    InvalidDisplacement(f64),
    #[error("projection angle must lie in [0, pi), got {0}")]
    InvalidAngle(f64),
    #[error("projection requires a two-branch split state, got {0} branches")]
    NotTwoBranch(usize),
    #[error("state must have at least one branch with at least one packet")]
    EmptyState,
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error("velocity undefined at a wavefunction node (x={x}, z={z}, density={density:e})")]
    Node { x: f64, z: f64, density: f64 },
}

/// One mutually incoherent branch: a weighted coherent superposition of packets.
#[derive(Debug, Clone)]
pub struct Branch {
    pub weight: Complex64,
    pub packets: Vec<(Complex64, GaussianPacket)>,
}

impl Branch {
    /// Coherent amplitude of the branch at (x, z), excluding the branch weight.
    pub fn amplitude(&self, x: f64, plane: Plane) -> Complex64 {
        self.packets
            .iter()
            .map(|(coeff, p)| coeff * p.evaluate(x, plane))
            .sum()
    }

    pub fn amplitude_gradient(&self, x: f64, plane: Plane) -> Complex64 {
        self.packets
            .iter()
            .map(|(coeff, p)| coeff * p.gradient(x, plane))
            .sum()
    }

    /// Squared L2 norm of the coherent superposition, via analytic overlaps.
    pub fn norm_sqr(&self, plane: Plane) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (ci, pi) in &self.packets {
            for (cj, pj) in &self.packets {
                total += ci.conj() * cj * pi.overlap(pj, plane);
            }
        }
        total.re
    }
}

/// Photon-B state as mutually incoherent branches.
#[derive(Debug, Clone)]
pub struct BranchState {
    branches: Vec<Branch>,
}

impl BranchState {
    pub fn new(branches: Vec<Branch>) -> Result<Self, StateError> {
        if branches.is_empty() || branches.iter().any(|b| b.packets.is_empty()) {
            return Err(StateError::EmptyState);
        }
        Ok(BranchState { branches })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Reference plane for norm computations: the first packet's waist plane.
    fn reference_plane(&self) -> Plane {
        Plane::new(self.branches[0].packets[0].1.waist_z).expect("waist_z is finite")
    }

    /// Total norm Sum_b |w_b|^2 ||branch_b||^2.
    pub fn total_norm(&self) -> f64 {
        let plane = self.reference_plane();
        self.branches
            .iter()
            .map(|b| b.weight.norm_sqr() * b.norm_sqr(plane))
            .sum()
    }

    /// Probability density at (x, z): branches add incoherently.
    pub fn density(&self, x: f64, plane: Plane) -> f64 {
        self.branches
            .iter()
            .map(|b| b.weight.norm_sqr() * b.amplitude(x, plane).norm_sqr())
            .sum()
    }

    /// Im[psi* d psi] summed over branches; the probability current is
    /// (c/k) times this quantity.
    pub fn current_kernel(&self, x: f64, plane: Plane) -> f64 {
        self.branches
            .iter()
            .map(|b| {
                let psi = b.amplitude(x, plane);
                let grad = b.amplitude_gradient(x, plane);
                b.weight.norm_sqr() * (psi.conj() * grad).im
            })
            .sum()
    }

    /// Rough per-plane peak density, sampled at the packet centers and the
    /// midpoints between them. Used only to scale the node floor.
    pub fn peak_density_estimate(&self, plane: Plane) -> f64 {
        let mut xs: Vec<f64> = Vec::new();
        for b in &self.branches {
            for (_, p) in &b.packets {
                xs.push(p.center_x);
            }
        }
        let n = xs.len();
        for i in 0..n {
            for j in (i + 1)..n {
                xs.push(0.5 * (xs[i] + xs[j]));
            }
        }
        xs.iter()
            .map(|&x| self.density(x, plane))
            .fold(0.0, f64::max)
    }

    /// Multiply one branch weight by a phase; the unprojected velocity must be
    /// insensitive to this.
    pub fn with_branch_phase(&self, branch: usize, phase: f64) -> Self {
        let mut branches = self.branches.clone();
        branches[branch].weight *= Complex64::new(0.0, phase).exp();
        BranchState { branches }
    }

    /// Multiply one packet coefficient inside a branch by a phase; for a
    /// single-branch state this changes the interference pattern.
    pub fn with_packet_phase(&self, branch: usize, packet: usize, phase: f64) -> Self {
        let mut branches = self.branches.clone();
        branches[branch].packets[packet].0 *= Complex64::new(0.0, phase).exp();
        BranchState { branches }
    }
}

/// Linear-polarization projection angle for the remote photon, in [0, pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionBasis {
    theta: f64,
}

impl ProjectionBasis {
    pub fn new(theta: f64) -> Result<Self, StateError> {
        if !(0.0..std::f64::consts::PI).contains(&theta) {
            return Err(StateError::InvalidAngle(theta));
        }
        Ok(ProjectionBasis { theta })
    }

    pub fn from_degrees(deg: f64) -> Result<Self, StateError> {
        Self::new(deg.to_radians())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Which of the two orthogonal remote outcomes occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Theta,
    ThetaBar,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Theta => "theta",
            Outcome::ThetaBar => "theta_bar",
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theta" => Ok(Outcome::Theta),
            "theta_bar" | "theta-bar" => Ok(Outcome::ThetaBar),
            other => Err(format!("unknown outcome '{other}', expected theta or theta_bar")),
        }
    }
}

/// Split the template packet into two incoherent branches displaced by +-d/2
/// about the midline, each with weight 1/sqrt(2).
///
/// Branch order is [H tag at -d/2, V tag at +d/2].
pub fn make_split_state(d: f64, template: &GaussianPacket) -> Result<BranchState, StateError> {
    if !(d.is_finite() && d > 0.0) {
        return Err(StateError::InvalidDisplacement(d));
    }
    let unit = template.with_amplitude(Complex64::new(1.0, 0.0));
    let left = unit.with_center(-d / 2.0);
    let right = unit.with_center(d / 2.0);
    let weight = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let one = Complex64::new(1.0, 0.0);
    BranchState::new(vec![
        Branch { weight, packets: vec![(one, left)] },
        Branch { weight, packets: vec![(one, right)] },
    ])
}

/// Collapse a two-branch split state according to the remote projection.
///
/// Theta keeps cos(theta) * branch0 - sin(theta) * branch1 as a coherent
/// superposition, ThetaBar keeps sin(theta) * branch0 + cos(theta) * branch1.
/// Returns the normalized single-branch state and the outcome probability.
pub fn project(
    state: &BranchState,
    basis: ProjectionBasis,
    outcome: Outcome,
) -> Result<(BranchState, f64), StateError> {
    let branches = state.branches();
    if branches.len() != 2 {
        return Err(StateError::NotTwoBranch(branches.len()));
    }
    let (c0, c1) = match outcome {
        Outcome::Theta => (basis.theta().cos(), -basis.theta().sin()),
        Outcome::ThetaBar => (basis.theta().sin(), basis.theta().cos()),
    };
    let mut packets: Vec<(Complex64, GaussianPacket)> = Vec::new();
    for (scale, branch) in [(c0, &branches[0]), (c1, &branches[1])] {
        for (coeff, packet) in &branch.packets {
            packets.push((scale * branch.weight * coeff, *packet));
        }
    }
    let unnormalized = Branch { weight: Complex64::new(1.0, 0.0), packets };
    let plane = state.reference_plane();
    let probability = unnormalized.norm_sqr(plane);
    let inv = Complex64::new(1.0 / probability.sqrt(), 0.0);
    let normalized = Branch {
        weight: unnormalized.weight,
        packets: unnormalized
            .packets
            .into_iter()
            .map(|(c, p)| (c * inv, p))
            .collect(),
    };
    Ok((BranchState::new(vec![normalized])?, probability))
}

/// Evaluator of the transverse Bohmian velocity for a `BranchState`.
#[derive(Debug, Clone)]
pub struct VelocityField {
    state: BranchState,
    wavenumber_k: f64,
    light_speed_c: f64,
    density_floor_rel: f64,
}

impl VelocityField {
    pub fn new(state: BranchState, wavenumber_k: f64) -> Self {
        VelocityField {
            state,
            wavenumber_k,
            light_speed_c: SPEED_OF_LIGHT,
            density_floor_rel: DEFAULT_DENSITY_FLOOR_REL,
        }
    }

    pub fn with_density_floor(mut self, rel: f64) -> Self {
        self.density_floor_rel = rel;
        self
    }

    pub fn state(&self) -> &BranchState {
        &self.state
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber_k
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed_c
    }

    pub fn density(&self, x: f64, plane: Plane) -> f64 {
        self.state.density(x, plane)
    }

    /// Density floor at a plane: `density_floor_rel` times the peak estimate.
    pub fn density_floor(&self, plane: Plane) -> f64 {
        (self.density_floor_rel * self.state.peak_density_estimate(plane)).max(DENSITY_FLOOR_ABS)
    }

    /// Transverse Bohmian velocity v_x(x, z) in m/s.
    ///
    /// v = c * Sum_b |w_b|^2 Im[psi_b* d psi_b] / (k * Sum_b |w_b|^2 |psi_b|^2).
    pub fn velocity(&self, x: f64, plane: Plane) -> Result<f64, StateError> {
        let density = self.state.density(x, plane);
        if density < self.density_floor(plane) {
            return Err(StateError::Node { x, z: plane.z(), density });
        }
        let current = self.state.current_kernel(x, plane);
        Ok(self.light_speed_c * current / (self.wavenumber_k * density))
    }

    /// Density and velocity in one call; `None` velocity marks a node.
    pub fn density_and_velocity(&self, x: f64, plane: Plane) -> (f64, Option<f64>) {
        let density = self.state.density(x, plane);
        if density < self.density_floor(plane) {
            (density, None)
        } else {
            let current = self.state.current_kernel(x, plane);
            (density, Some(self.light_speed_c * current / (self.wavenumber_k * density)))
        }
    }
}

/// v_projected - v_unprojected at one point. Propagates the node error from
/// either field.
pub fn velocity_change(
    unprojected: &VelocityField,
    projected: &VelocityField,
    x: f64,
    plane: Plane,
) -> Result<f64, StateError> {
    Ok(projected.velocity(x, plane)? - unprojected.velocity(x, plane)?)
}
