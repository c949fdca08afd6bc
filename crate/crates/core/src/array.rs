//! Antenna array geometry and far-field steering responses.
//!
//! Models a base-station array with half-wavelength element spacing, either a
//! uniform linear array along the y-axis or a uniform planar array in the
//! y-z plane. Key capabilities:
//!
//! - propagation directions as validated elevation/azimuth pairs,
//! - steering vectors for linear and planar layouts,
//! - the closed-form inner-product magnitude between two steering vectors,
//!   with exact handling of its removable singularities.
//!
//! Linear arrays follow the broadside convention: the elevation angle is
//! taken as zero and only the azimuth enters the element phases.

use crate::error::{Error, Result};
use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::PI;

const HALF_PI: f64 = PI / 2.0;

/// A propagation direction seen from the array, in radians.
///
/// Elevation `theta` and azimuth `phi` both live in `[-pi/2, pi/2]`, which
/// covers the half-space in front of the array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// Validates and stores an elevation/azimuth pair.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("phi", phi)] {
            if !v.is_finite() || v.abs() > HALF_PI + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} outside [-pi/2, pi/2]"
                )));
            }
        }
        Ok(Self {
            theta: theta.clamp(-HALF_PI, HALF_PI),
            phi: phi.clamp(-HALF_PI, HALF_PI),
        })
    }

    /// Direction in the horizontal plane (zero elevation).
    pub fn azimuth_only(phi: f64) -> Result<Self> {
        Self::new(0.0, phi)
    }

    /// Broadside: straight ahead of the array face.
    pub fn broadside() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    /// Builds a direction from sine-space coordinates `(sin theta, sin phi)`.
    /// Values within `1e-9` of the unit interval are clamped.
    pub fn from_sines(sin_theta: f64, sin_phi: f64) -> Result<Self> {
        for (name, v) in [("sin theta", sin_theta), ("sin phi", sin_phi)] {
            if !v.is_finite() || v.abs() > 1.0 + 1e-9 {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [-1, 1]")));
            }
        }
        Ok(Self {
            theta: sin_theta.clamp(-1.0, 1.0).asin(),
            phi: sin_phi.clamp(-1.0, 1.0).asin(),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sin_theta(&self) -> f64 {
        self.theta.sin()
    }

    pub fn cos_theta(&self) -> f64 {
        self.theta.cos()
    }

    pub fn sin_phi(&self) -> f64 {
        self.phi.sin()
    }

    /// Unit vector `[cos t cos p, cos t sin p, sin t]` pointing from the
    /// array towards the direction.
    pub fn unit_vector(&self) -> [f64; 3] {
        [
            self.theta.cos() * self.phi.cos(),
            self.theta.cos() * self.phi.sin(),
            self.theta.sin(),
        ]
    }

    /// Cosine of the angle between two directions.
    pub fn dot(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }
}

/// Array layout: a line of elements along y, or a planar grid in y-z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKind {
    Ula,
    Upa,
}

/// Element layout of the base-station array.
///
/// `m_y` counts elements along the y-axis and `m_z` along the z-axis; a
/// linear array is exactly the `m_z = 1` case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry {
    kind: ArrayKind,
    m_y: usize,
    m_z: usize,
}

impl ArrayGeometry {
    /// Linear array of `m` elements along the y-axis.
    pub fn ula(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("array needs at least one element".into()));
        }
        Ok(Self { kind: ArrayKind::Ula, m_y: m, m_z: 1 })
    }

    /// Planar array with `m_y` columns and `m_z` rows. A single row
    /// degenerates to a linear array.
    pub fn upa(m_y: usize, m_z: usize) -> Result<Self> {
        if m_y == 0 || m_z == 0 {
            return Err(Error::InvalidArgument("array needs at least one element per axis".into()));
        }
        let kind = if m_z == 1 { ArrayKind::Ula } else { ArrayKind::Upa };
        Ok(Self { kind, m_y, m_z })
    }

    pub fn kind(&self) -> ArrayKind {
        self.kind
    }

    pub fn m_y(&self) -> usize {
        self.m_y
    }

    pub fn m_z(&self) -> usize {
        self.m_z
    }

    /// Total element count.
    pub fn elements(&self) -> usize {
        self.m_y * self.m_z
    }

    /// Steering vector towards `d` under this layout's convention.
    pub fn steering(&self, d: &Direction) -> SteeringVector {
        match self.kind {
            ArrayKind::Ula => steering_ula_unchecked(self.m_y, d),
            ArrayKind::Upa => steering_upa(self, d),
        }
    }

    /// Magnitude of the inner product between steering vectors towards `d1`
    /// and `d2`, evaluated through the factored closed form.
    ///
    /// Coincident directions give the element count; directions whose
    /// sine-space separation is a multiple of the full visible span alias
    /// onto each other and also give the element count.
    pub fn beam_pattern(&self, d1: &Direction, d2: &Direction) -> f64 {
        match self.kind {
            ArrayKind::Ula => coherence_pattern(self.m_y, d2.sin_phi() - d1.sin_phi()),
            ArrayKind::Upa => {
                let dz = d2.sin_theta() - d1.sin_theta();
                let dy = d2.cos_theta() * d2.sin_phi() - d1.cos_theta() * d1.sin_phi();
                coherence_pattern(self.m_z, dz) * coherence_pattern(self.m_y, dy)
            }
        }
    }
}

/// Steering vector: per-element unit-modulus phase response.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: DVector<Complex64>,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &DVector<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DVector<Complex64> {
        self.entries
    }

    /// `self^H other`.
    pub fn inner(&self, other: &SteeringVector) -> Complex64 {
        self.entries.dotc(&other.entries)
    }
}

/// Steering vector of an `m`-element linear array towards `d`.
///
/// Element `i` responds with `exp(j pi i sin phi)`; the elevation is ignored
/// under the broadside convention.
pub fn steering_ula(m: usize, d: &Direction) -> Result<SteeringVector> {
    if m == 0 {
        return Err(Error::InvalidArgument("array needs at least one element".into()));
    }
    Ok(steering_ula_unchecked(m, d))
}

fn steering_ula_unchecked(m: usize, d: &Direction) -> SteeringVector {
    let step = PI * d.sin_phi();
    let entries = DVector::from_iterator(
        m,
        (0..m).map(|i| Complex64::from_polar(1.0, step * i as f64)),
    );
    SteeringVector { entries }
}

/// Steering vector of a planar array towards `d`: the Kronecker product of
/// the z-axis response (outer index) with the y-axis response (inner index).
///
/// With a single row this reduces entrywise to the linear-array response at
/// zero elevation.
pub fn steering_upa(g: &ArrayGeometry, d: &Direction) -> SteeringVector {
    let step_z = PI * d.sin_theta();
    let step_y = PI * d.cos_theta() * d.sin_phi();
    let mut entries = DVector::from_element(g.m_y * g.m_z, Complex64::new(0.0, 0.0));
    for iz in 0..g.m_z {
        let az = Complex64::from_polar(1.0, step_z * iz as f64);
        for iy in 0..g.m_y {
            entries[iz * g.m_y + iy] = az * Complex64::from_polar(1.0, step_y * iy as f64);
        }
    }
    SteeringVector { entries }
}

/// Magnitude of the normalized phasor sum `|sum_i exp(j pi i delta)|` over
/// `m` elements, as a function of the sine-space separation `delta`.
///
/// Away from its removable singularities this is
/// `|sin(pi m delta / 2) / sin(pi delta / 2)|`. Near any even-integer
/// `delta`, where the ratio degenerates, the phasor sum is evaluated
/// directly; those points are fully coherent and return `m`.
pub fn coherence_pattern(m: usize, delta: f64) -> f64 {
    assert!(m >= 1, "coherence pattern needs at least one element");
    let den = (PI * delta / 2.0).sin();
    if den.abs() < 1e-8 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            acc += Complex64::from_polar(1.0, PI * delta * i as f64);
        }
        acc.norm()
    } else {
        ((PI * m as f64 * delta / 2.0).sin() / den).abs()
    }
}
