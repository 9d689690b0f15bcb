//! Analytic paraxial propagation of one-dimensional Gaussian wavepackets.
//!
//! A packet is defined at its waist plane by the 1/e amplitude half-width
//! `waist_w0` and propagates along z with the usual width growth, wavefront
//! curvature and Gouy phase. Evaluation and the spatial derivative are closed
//! form, so no grids or FFTs are involved anywhere in the field model.

use num_complex::Complex64;
use thiserror::Error;

use crate::positive;

#[derive(Debug, Error, PartialEq)]
pub enum PacketError {
    #[error("waist_w0 must be positive, got {0}")]
    InvalidWaist(f64),
    #[error("wavenumber_k must be positive, got {0}")]
    InvalidWavenumber(f64),
    #[error("plane z must be finite, got {0}")]
    NonFinitePlane(f64),
}

/// Longitudinal position of an imaging plane, in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    z: f64,
}

impl Plane {
    pub fn new(z: f64) -> Result<Self, PacketError> {
        if !z.is_finite() {
            return Err(PacketError::NonFinitePlane(z));
        }
        Ok(Plane { z })
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

/// One transverse Gaussian wavepacket.
///
/// `waist_w0` is the 1/e amplitude half-width at the waist plane `waist_z`.
/// The L2 norm over x at any plane equals `|amplitude_scale|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub center_x: f64,
    pub waist_w0: f64,
    pub waist_z: f64,
    pub wavenumber_k: f64,
    pub amplitude_scale: Complex64,
}

/// Plane-dependent beam parameters, shared by `evaluate` and `gradient`.
#[derive(Debug, Clone, Copy)]
struct BeamAtPlane {
    /// width w(z)
    width: f64,
    /// inverse radius of curvature 1/R(z); zero at the waist plane
    inv_radius: f64,
    /// Gouy phase eta(z)
    gouy: f64,
}

impl GaussianPacket {
    pub fn new(
        center_x: f64,
        waist_w0: f64,
        waist_z: f64,
        wavenumber_k: f64,
        amplitude_scale: Complex64,
    ) -> Result<Self, PacketError> {
        if !positive(waist_w0) {
            return Err(PacketError::InvalidWaist(waist_w0));
        }
        if !positive(wavenumber_k) {
            return Err(PacketError::InvalidWavenumber(wavenumber_k));
        }
        Ok(GaussianPacket {
            center_x,
            waist_w0,
            waist_z,
            wavenumber_k,
            amplitude_scale,
        })
    }

    /// Unit-amplitude packet from waist, waist plane and wavenumber.
    pub fn unit(
        center_x: f64,
        waist_w0: f64,
        waist_z: f64,
        wavenumber_k: f64,
    ) -> Result<Self, PacketError> {
        Self::new(center_x, waist_w0, waist_z, wavenumber_k, Complex64::new(1.0, 0.0))
    }

    /// Copy of this packet displaced to a new transverse center.
    pub fn with_center(&self, center_x: f64) -> Self {
        GaussianPacket { center_x, ..*self }
    }

    /// Copy with a different complex amplitude.
    pub fn with_amplitude(&self, amplitude_scale: Complex64) -> Self {
        GaussianPacket { amplitude_scale, ..*self }
    }

    /// Rayleigh range zeta_R = k w0^2 / 2.
    pub fn rayleigh_range(&self) -> f64 {
        self.wavenumber_k * self.waist_w0 * self.waist_w0 / 2.0
    }

    fn at_plane(&self, plane: Plane) -> BeamAtPlane {
        let dz = plane.z() - self.waist_z;
        let zr = self.rayleigh_range();
        let ratio = dz / zr;
        BeamAtPlane {
            width: self.waist_w0 * (1.0 + ratio * ratio).sqrt(),
            // 1/R = dz / (dz^2 + zr^2) is regular at dz = 0
            inv_radius: dz / (dz * dz + zr * zr),
            gouy: ratio.atan(),
        }
    }

    /// Width w(z) of the packet at a plane.
    pub fn width_at(&self, plane: Plane) -> f64 {
        self.at_plane(plane).width
    }

    /// Complex amplitude psi(x, z).
    pub fn evaluate(&self, x: f64, plane: Plane) -> Complex64 {
        let beam = self.at_plane(plane);
        let u = x - self.center_x;
        let norm = (2.0 / (std::f64::consts::PI * beam.width * beam.width)).powf(0.25);
        let envelope = -u * u / (beam.width * beam.width);
        let phase = 0.5 * self.wavenumber_k * u * u * beam.inv_radius - 0.5 * beam.gouy;
        self.amplitude_scale * norm * Complex64::new(envelope, phase).exp()
    }

    /// Analytic transverse derivative d psi / dx.
    pub fn gradient(&self, x: f64, plane: Plane) -> Complex64 {
        let beam = self.at_plane(plane);
        let u = x - self.center_x;
        let log_deriv = Complex64::new(
            -2.0 * u / (beam.width * beam.width),
            self.wavenumber_k * u * beam.inv_radius,
        );
        self.evaluate(x, plane) * log_deriv
    }

    /// Inner product <self|other> over x, evaluated analytically at `plane`.
    ///
    /// For packets sharing a wavenumber the result is plane-independent
    /// (propagation is unitary).
    pub fn overlap(&self, other: &GaussianPacket, plane: Plane) -> Complex64 {
        let b1 = self.at_plane(plane);
        let b2 = other.at_plane(plane);
        // psi_j = amp_j * n_j * exp(a_j (x - c_j)^2 + i g_j)
        let a1 = Complex64::new(
            -1.0 / (b1.width * b1.width),
            0.5 * self.wavenumber_k * b1.inv_radius,
        );
        let a2 = Complex64::new(
            -1.0 / (b2.width * b2.width),
            0.5 * other.wavenumber_k * b2.inv_radius,
        );
        let n1 = (2.0 / (std::f64::consts::PI * b1.width * b1.width)).powf(0.25);
        let n2 = (2.0 / (std::f64::consts::PI * b2.width * b2.width)).powf(0.25);
        // conj(psi1) psi2 = prefactor * exp(A x^2 + B x + C)
        let c1 = self.center_x;
        let c2 = other.center_x;
        let total_a = a1.conj() + a2;
        let total_b = -2.0 * (a1.conj() * c1 + a2 * c2);
        let total_c = a1.conj() * c1 * c1 + a2 * c2 * c2;
        let gouy_phase = Complex64::new(0.0, 0.5 * (b1.gouy - b2.gouy)).exp();
        let gauss = (std::f64::consts::PI / -total_a).sqrt()
            * (total_c - total_b * total_b / (4.0 * total_a)).exp();
        self.amplitude_scale.conj() * other.amplitude_scale * n1 * n2 * gouy_phase * gauss
    }
}
