//! Mutually non-interfering direction sets and the capacity they achieve.
//!
//! Steering vectors of a half-wavelength array are orthogonal whenever their
//! sine-space separation is a nonzero multiple of `2/M` along either array
//! axis (excluding the aliased full-span separation). Inside an angular
//! sector this yields a finite family of directions whose channels decouple
//! completely; its size caps how many users can ride the array
//! interference-free, and placing users on the first `K` members at the
//! closest allowed range attains the decoupled capacity bound exactly.
//!
//! For planar arrays the family is organized in elevation rings, with the
//! per-ring azimuth spacing widened by the elevation cosine. Counting a ring
//! involves flooring a product that can sit exactly on an integer boundary
//! in real arithmetic; [`FloorMode`] pins down how such boundaries resolve
//! in IEEE evaluation.

use crate::array::{ArrayGeometry, ArrayKind, Direction};
use crate::error::{Error, Result};
use crate::metrics::{SwarmFormation, UavPlacement};

/// Angular sector in front of the array: `|theta| <= theta_max`,
/// `|phi| <= phi_max`, both in radians within `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularSector {
    theta_max: f64,
    phi_max: f64,
}

impl AngularSector {
    pub fn new(theta_max: f64, phi_max: f64) -> Result<Self> {
        for (name, v) in [("theta_max", theta_max), ("phi_max", phi_max)] {
            if !v.is_finite() || !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} outside [0, pi/2]"
                )));
            }
        }
        Ok(Self {
            theta_max: theta_max.min(std::f64::consts::FRAC_PI_2),
            phi_max: phi_max.min(std::f64::consts::FRAC_PI_2),
        })
    }

    /// Horizontal-only sector (zero elevation span), as used with linear
    /// arrays.
    pub fn azimuth_span(phi_max: f64) -> Result<Self> {
        Self::new(0.0, phi_max)
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }

    /// Sine of the elevation half-span.
    pub fn theta_bar(&self) -> f64 {
        self.theta_max.sin()
    }

    /// Sine of the azimuth half-span.
    pub fn phi_bar(&self) -> f64 {
        self.phi_max.sin()
    }

    /// Whether `d` lies inside the sector, with slack `tol` in sine space.
    pub fn contains(&self, d: &Direction, tol: f64) -> bool {
        d.sin_theta().abs() <= self.theta_bar() + tol && d.sin_phi().abs() <= self.phi_bar() + tol
    }
}

/// Resolution rule for floor expressions that sit on an exact integer
/// boundary in real arithmetic.
///
/// `Strict` floors the IEEE value as computed; `Tolerant(eps)` first nudges
/// the value up by `eps`, admitting boundary members that infinitesimal
/// rounding would otherwise drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FloorMode {
    Strict,
    Tolerant(f64),
}

impl FloorMode {
    /// Tolerant mode with the default `1e-9` nudge.
    pub fn tolerant() -> Self {
        FloorMode::Tolerant(1e-9)
    }

    fn floor_of(&self, x: f64) -> usize {
        let v = match self {
            FloorMode::Strict => x.floor(),
            FloorMode::Tolerant(eps) => (x + eps).floor(),
        };
        if v <= 0.0 {
            0
        } else {
            v as usize
        }
    }
}

impl Default for FloorMode {
    fn default() -> Self {
        FloorMode::Strict
    }
}

/// Size of one elevation ring of a planar non-interfering set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingCount {
    /// Signed ring index; elevation sine is `2 * ring / m_z`.
    pub ring: i64,
    pub sin_theta: f64,
    pub count: usize,
}

/// An enumerated family of mutually non-interfering directions, in the
/// canonical placement order: ascending ring magnitude with positive rings
/// first, then ascending azimuth-index magnitude with positive indices
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalSet {
    directions: Vec<Direction>,
    rings: Vec<RingCount>,
}

impl OrthogonalSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn rings(&self) -> &[RingCount] {
        &self.rings
    }
}

/// Symmetric index ladder `0, +1, -1, ..."` up to `limit`, dropping the
/// negative endpoint when the full ladder would overshoot `m` slots (the
/// two endpoints alias onto each other at full span).
fn axis_indices(m: usize, span_bar: f64, mode: FloorMode) -> Vec<i64> {
    let limit = mode.floor_of(m as f64 * span_bar / 2.0).min(m / 2);
    let trim_negative_end = 2 * limit + 1 > m;
    let mut out = Vec::with_capacity(2 * limit + 1);
    out.push(0i64);
    for l in 1..=limit as i64 {
        out.push(l);
        if !(trim_negative_end && l == limit as i64) {
            out.push(-l);
        }
    }
    out
}

fn axis_count(m: usize, span_bar: f64, mode: FloorMode) -> usize {
    (2 * mode.floor_of(m as f64 * span_bar / 2.0) + 1).min(m)
}

fn check_span(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0 + 1e-12).contains(&v) {
        return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Non-interfering azimuth set of an `m`-element linear array: sines
/// `2l / m` inside the sector's azimuth span.
pub fn ula_orthogonal_set(m: usize, sector: &AngularSector, mode: FloorMode) -> Result<OrthogonalSet> {
    if m == 0 {
        return Err(Error::InvalidArgument("array needs at least one element".into()));
    }
    let phi_bar = sector.phi_bar();
    let indices = axis_indices(m, phi_bar, mode);
    let directions = indices
        .iter()
        .map(|&l| Direction::from_sines(0.0, 2.0 * l as f64 / m as f64))
        .collect::<Result<Vec<_>>>()?;
    let count = directions.len();
    Ok(OrthogonalSet {
        directions,
        rings: vec![RingCount { ring: 0, sin_theta: 0.0, count }],
    })
}

/// Size of the linear-array set without enumerating it:
/// `min(m, 2 floor(m phi_bar / 2) + 1)`.
pub fn n_ula(m: usize, phi_bar: f64, mode: FloorMode) -> Result<usize> {
    if m == 0 {
        return Err(Error::InvalidArgument("array needs at least one element".into()));
    }
    check_span("phi_bar", phi_bar)?;
    Ok(axis_count(m, phi_bar.min(1.0), mode))
}

/// Non-interfering direction set of a planar array, organized in elevation
/// rings: ring sines `2l / m_z`, and per-ring azimuth sines
/// `2p / (m_y cos theta_l)` kept inside the sector. A ring at grazing
/// elevation (`cos theta = 0`) holds the single broadside azimuth.
pub fn upa_orthogonal_set(
    g: &ArrayGeometry,
    sector: &AngularSector,
    mode: FloorMode,
) -> Result<OrthogonalSet> {
    let (m_y, m_z) = (g.m_y(), g.m_z());
    let theta_bar = sector.theta_bar();
    let phi_bar = sector.phi_bar();
    let mut directions = Vec::new();
    let mut rings = Vec::new();
    for l in axis_indices(m_z, theta_bar, mode) {
        let sin_theta = 2.0 * l as f64 / m_z as f64;
        let cos_theta = (1.0 - (sin_theta * sin_theta).min(1.0)).sqrt();
        let start = directions.len();
        if cos_theta == 0.0 {
            directions.push(Direction::from_sines(sin_theta, 0.0)?);
        } else {
            for p in axis_indices(m_y, phi_bar * cos_theta, mode) {
                let sin_phi = 2.0 * p as f64 / (m_y as f64 * cos_theta);
                directions.push(Direction::from_sines(sin_theta, sin_phi)?);
            }
        }
        rings.push(RingCount { ring: l, sin_theta, count: directions.len() - start });
    }
    Ok(OrthogonalSet { directions, rings })
}

/// Size of the planar set without enumerating directions: the ring-by-ring
/// sum `sum_l min(m_y, 2 floor(phi_bar m_y cos theta_l / 2) + 1)`.
pub fn n_upa_exact(g: &ArrayGeometry, sector: &AngularSector, mode: FloorMode) -> Result<usize> {
    let (m_y, m_z) = (g.m_y(), g.m_z());
    let mut total = 0usize;
    for l in axis_indices(m_z, sector.theta_bar(), mode) {
        let sin_theta = 2.0 * l as f64 / m_z as f64;
        let cos_theta = (1.0 - (sin_theta * sin_theta).min(1.0)).sqrt();
        total += axis_count(m_y, sector.phi_bar() * cos_theta, mode);
    }
    Ok(total)
}

/// Closed-form bracket for the planar set size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountBounds {
    pub lower: f64,
    pub upper: f64,
    /// The bracket is derived for elevation apertures well past the first
    /// orthogonality step (`m_z theta_bar >> 2`); outside that regime the
    /// numbers are still evaluated but carry no guarantee.
    pub in_regime: bool,
}

/// Sandwich bounds on the planar set size:
/// `m_z (phi_bar m_y (theta + theta_bar cos theta) / 2 -+ theta_bar) + 1`,
/// with the upper branch additionally capped by the element count.
pub fn n_upa_bounds(g: &ArrayGeometry, sector: &AngularSector) -> Result<CountBounds> {
    let (m_y, m_z) = (g.m_y() as f64, g.m_z() as f64);
    let theta = sector.theta_max();
    let theta_bar = sector.theta_bar();
    let phi_bar = sector.phi_bar();
    let core = phi_bar * m_y * (theta + theta_bar * theta.cos()) / 2.0;
    Ok(CountBounds {
        lower: m_z * (core - theta_bar) + 1.0,
        upper: (m_z * (core + theta_bar) + 1.0).min(m_y * m_z),
        in_regime: m_z * theta_bar >= 8.0,
    })
}

/// Large-array limit of the planar set size for `m` total elements:
/// `phi_bar (theta + theta_bar cos theta) m / 2`. At a full quarter-sphere
/// sector this approaches `pi m / 4`.
pub fn n_upa_asymptotic(m: usize, sector: &AngularSector) -> f64 {
    let theta = sector.theta_max();
    sector.phi_bar() * (theta + sector.theta_bar() * theta.cos()) * m as f64 / 2.0
}

fn direction_budget(g: &ArrayGeometry, sector: &AngularSector, mode: FloorMode) -> Result<usize> {
    match g.kind() {
        ArrayKind::Ula => n_ula(g.m_y(), sector.phi_bar(), mode),
        ArrayKind::Upa => n_upa_exact(g, sector, mode),
    }
}

fn enumerate_set(g: &ArrayGeometry, sector: &AngularSector, mode: FloorMode) -> Result<OrthogonalSet> {
    match g.kind() {
        ArrayKind::Ula => ula_orthogonal_set(g.m_y(), sector, mode),
        ArrayKind::Upa => upa_orthogonal_set(g, sector, mode),
    }
}

/// Sum capacity of `k` users riding mutually non-interfering directions at
/// receive SNR `rho` each: `k log2(1 + rho M)`. Fails when the sector
/// cannot host `k` such directions.
pub fn closed_form_capacity(
    g: &ArrayGeometry,
    sector: &AngularSector,
    k: usize,
    rho: f64,
    mode: FloorMode,
) -> Result<f64> {
    if !rho.is_finite() || rho < 0.0 {
        return Err(Error::InvalidArgument(format!("rho = {rho} must be >= 0")));
    }
    let available = direction_budget(g, sector, mode)?;
    if k > available {
        return Err(Error::NotEnoughDirections { requested: k, available });
    }
    Ok(k as f64 * (1.0 + rho * g.elements() as f64).log2())
}

/// Places `k` users on the first `k` canonical non-interfering directions,
/// all at range `r_min` with a shared reference SNR. The resulting
/// formation attains the decoupled capacity bound exactly.
pub fn build_optimal_formation(
    g: &ArrayGeometry,
    sector: &AngularSector,
    k: usize,
    r_min: f64,
    ref_snr: f64,
    mode: FloorMode,
) -> Result<SwarmFormation> {
    if k == 0 {
        return Err(Error::InvalidArgument("formation needs at least one user".into()));
    }
    let set = enumerate_set(g, sector, mode)?;
    if k > set.len() {
        return Err(Error::NotEnoughDirections { requested: k, available: set.len() });
    }
    let placements = set.directions()[..k]
        .iter()
        .map(|d| UavPlacement::new(r_min, *d))
        .collect::<Result<Vec<_>>>()?;
    SwarmFormation::uniform_snr(placements, ref_snr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{channel_matrix, sic_sum_capacity, tin_sum_rate};

    fn deg(v: f64) -> f64 {
        v.to_radians()
    }

    fn sector(theta_deg: f64, phi_deg: f64) -> AngularSector {
        AngularSector::new(deg(theta_deg), deg(phi_deg)).unwrap()
    }

    #[test]
    fn linear_count_golden_values() {
        assert_eq!(n_ula(16, deg(90.0).sin(), FloorMode::Strict).unwrap(), 16);
        assert_eq!(n_ula(16, deg(60.0).sin(), FloorMode::Strict).unwrap(), 13);
        assert_eq!(n_ula(16, deg(90.0).sin(), FloorMode::tolerant()).unwrap(), 16);
        assert_eq!(n_ula(1, 1.0, FloorMode::Strict).unwrap(), 1);
        assert_eq!(n_ula(15, 1.0, FloorMode::Strict).unwrap(), 15);
        assert!(n_ula(0, 1.0, FloorMode::Strict).is_err());
        assert!(n_ula(8, 1.5, FloorMode::Strict).is_err());
    }

    #[test]
    fn linear_set_full_span_keeps_one_endpoint() {
        let set = ula_orthogonal_set(16, &sector(0.0, 90.0), FloorMode::Strict).unwrap();
        assert_eq!(set.len(), 16);
        let sines: Vec<f64> = set.directions().iter().map(|d| d.sin_phi()).collect();
        assert!(sines.iter().any(|s| (s - 1.0).abs() < 1e-12));
        assert!(!sines.iter().any(|s| (s + 1.0).abs() < 1e-12));
        // canonical order: 0, +1/8, -1/8, ...
        assert!(sines[0].abs() < 1e-12);
        assert!((sines[1] - 0.125).abs() < 1e-12);
        assert!((sines[2] + 0.125).abs() < 1e-12);
    }

    #[test]
    fn linear_set_members_are_pairwise_orthogonal_and_in_sector() {
        let g = ArrayGeometry::ula(16).unwrap();
        for s in [sector(0.0, 90.0), sector(0.0, 60.0)] {
            let set = ula_orthogonal_set(16, &s, FloorMode::Strict).unwrap();
            for d in set.directions() {
                assert!(s.contains(d, 1e-12));
            }
            for i in 0..set.len() {
                for j in (i + 1)..set.len() {
                    let ip = g
                        .steering(&set.directions()[i])
                        .inner(&g.steering(&set.directions()[j]))
                        .norm();
                    assert!(ip < 1e-9 * 16.0, "pair ({i},{j}) inner {ip}");
                }
            }
        }
    }

    #[test]
    fn planar_count_boundary_case_8x8_60() {
        let g = ArrayGeometry::upa(8, 8).unwrap();
        let s = sector(60.0, 60.0);
        // the |ring| = 2 azimuth product sits on an exact integer boundary;
        // IEEE evaluation lands just below it
        assert_eq!(n_upa_exact(&g, &s, FloorMode::Strict).unwrap(), 41);
        assert_eq!(n_upa_exact(&g, &s, FloorMode::tolerant()).unwrap(), 45);
        let set = upa_orthogonal_set(&g, &s, FloorMode::Strict).unwrap();
        assert_eq!(set.len(), 41);
        let sizes: Vec<usize> = set.rings().iter().map(|r| r.count).collect();
        assert_eq!(sizes, vec![7, 7, 7, 5, 5, 5, 5]);
        let rings: Vec<i64> = set.rings().iter().map(|r| r.ring).collect();
        assert_eq!(rings, vec![0, 1, -1, 2, -2, 3, -3]);
    }

    #[test]
    fn planar_count_full_span_8x8() {
        let g = ArrayGeometry::upa(8, 8).unwrap();
        let s = sector(90.0, 90.0);
        assert_eq!(n_upa_exact(&g, &s, FloorMode::Strict).unwrap(), 47);
        assert_eq!(n_upa_exact(&g, &s, FloorMode::tolerant()).unwrap(), 47);
        let set = upa_orthogonal_set(&g, &s, FloorMode::Strict).unwrap();
        assert_eq!(set.len(), 47);
        let sizes: Vec<usize> = set.rings().iter().map(|r| r.count).collect();
        assert_eq!(sizes, vec![8, 7, 7, 7, 7, 5, 5, 1]);
        // grazing ring: single member at +pi/2 elevation, none at -pi/2
        let grazing: Vec<&Direction> = set
            .directions()
            .iter()
            .filter(|d| (d.sin_theta().abs() - 1.0).abs() < 1e-12)
            .collect();
        assert_eq!(grazing.len(), 1);
        assert!(grazing[0].sin_theta() > 0.0);
        assert!(grazing[0].sin_phi().abs() < 1e-12);
    }

    #[test]
    fn planar_set_members_are_pairwise_orthogonal() {
        let g = ArrayGeometry::upa(8, 8).unwrap();
        for s in [sector(60.0, 60.0), sector(90.0, 90.0)] {
            let set = upa_orthogonal_set(&g, &s, FloorMode::Strict).unwrap();
            let vecs: Vec<_> = set.directions().iter().map(|d| g.steering(d)).collect();
            for i in 0..vecs.len() {
                assert!(s.contains(&set.directions()[i], 1e-12));
                for j in (i + 1)..vecs.len() {
                    let ip = vecs[i].inner(&vecs[j]).norm();
                    assert!(ip < 1e-8 * 64.0, "pair ({i},{j}) inner {ip}");
                }
            }
        }
    }

    #[test]
    fn enumeration_matches_count_formula() {
        for m_y in 1..=10usize {
            for m_z in 1..=6usize {
                let g = ArrayGeometry::upa(m_y, m_z).unwrap();
                for th in [0.0, 20.0, 45.0, 60.0, 90.0] {
                    for ph in [0.0, 30.0, 60.0, 90.0] {
                        let s = sector(th, ph);
                        for mode in [FloorMode::Strict, FloorMode::tolerant()] {
                            let n = n_upa_exact(&g, &s, mode).unwrap();
                            let set = upa_orthogonal_set(&g, &s, mode).unwrap();
                            assert_eq!(set.len(), n, "m_y={m_y} m_z={m_z} th={th} ph={ph}");
                            assert_eq!(
                                set.rings().iter().map(|r| r.count).sum::<usize>(),
                                n
                            );
                        }
                    }
                }
            }
        }
        for m in 1..=32usize {
            for ph in [0.0, 15.0, 30.0, 60.0, 75.0, 90.0] {
                let s = sector(0.0, ph);
                for mode in [FloorMode::Strict, FloorMode::tolerant()] {
                    let set = ula_orthogonal_set(m, &s, mode).unwrap();
                    assert_eq!(set.len(), n_ula(m, s.phi_bar(), mode).unwrap());
                }
            }
        }
    }

    #[test]
    fn counts_grow_with_sector_span() {
        let g = ArrayGeometry::upa(8, 8).unwrap();
        let mut prev = 0usize;
        for ph in [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0] {
            let n = n_upa_exact(&g, &sector(ph, ph), FloorMode::Strict).unwrap();
            assert!(n >= prev);
            prev = n;
        }
        let mut prev = 0usize;
        for ph in [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0] {
            let n = n_ula(16, deg(ph).sin(), FloorMode::Strict).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn degenerate_single_row_matches_linear_set() {
        let g = ArrayGeometry::upa(12, 1).unwrap();
        let s = sector(40.0, 70.0);
        let planar = upa_orthogonal_set(&g, &s, FloorMode::Strict).unwrap();
        let linear = ula_orthogonal_set(12, &s, FloorMode::Strict).unwrap();
        assert_eq!(planar.len(), linear.len());
        for (a, b) in planar.directions().iter().zip(linear.directions()) {
            assert!((a.sin_phi() - b.sin_phi()).abs() < 1e-12);
            assert!(a.sin_theta().abs() < 1e-12);
        }
        assert_eq!(
            n_upa_exact(&g, &s, FloorMode::Strict).unwrap(),
            n_ula(12, s.phi_bar(), FloorMode::Strict).unwrap()
        );
    }

    #[test]
    fn bracket_contains_exact_count_in_regime() {
        let s = sector(90.0, 90.0);
        for m_y in [5usize, 10, 20, 40, 80] {
            let g = ArrayGeometry::upa(m_y, 20).unwrap();
            let exact = n_upa_exact(&g, &s, FloorMode::Strict).unwrap() as f64;
            let b = n_upa_bounds(&g, &s).unwrap();
            assert!(b.in_regime);
            assert!(b.lower <= exact && exact <= b.upper, "m_y={m_y}: {} <= {exact} <= {}", b.lower, b.upper);
        }
    }

    #[test]
    fn asymptotic_density_approaches_quarter_pi() {
        let s = sector(90.0, 90.0);
        let m = 20usize * 80;
        let a = n_upa_asymptotic(m, &s);
        assert!((a / m as f64 - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let g = ArrayGeometry::upa(80, 20).unwrap();
        let exact = n_upa_exact(&g, &s, FloorMode::Strict).unwrap() as f64;
        assert!((exact / m as f64 - std::f64::consts::FRAC_PI_4).abs() <= 0.03);
    }

    #[test]
    fn closed_form_capacity_and_budget() {
        let g = ArrayGeometry::ula(16).unwrap();
        let s = sector(0.0, 90.0);
        let c = closed_form_capacity(&g, &s, 16, 400.0, FloorMode::Strict).unwrap();
        assert!((c - 16.0 * (6401.0f64).log2()).abs() < 1e-9);
        assert_eq!(closed_form_capacity(&g, &s, 0, 400.0, FloorMode::Strict).unwrap(), 0.0);
        match closed_form_capacity(&g, &s, 17, 400.0, FloorMode::Strict) {
            Err(Error::NotEnoughDirections { requested: 17, available: 16 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        assert!(closed_form_capacity(&g, &s, 4, -1.0, FloorMode::Strict).is_err());
    }

    #[test]
    fn optimal_formation_attains_decoupled_bound() {
        let g = ArrayGeometry::ula(16).unwrap();
        let s = sector(0.0, 90.0);
        let f = build_optimal_formation(&g, &s, 16, 50.0, 100.0, FloorMode::Strict).unwrap();
        let h = channel_matrix(&g, &f, 100.0).unwrap();
        let want = 16.0 * (6401.0f64).log2();
        let sic = sic_sum_capacity(&h, f.ref_snrs()).unwrap();
        let tin = tin_sum_rate(&h, f.ref_snrs()).unwrap();
        assert!((sic - want).abs() < 1e-9 * want);
        assert!((tin - want).abs() < 1e-6 * want);
        assert!(build_optimal_formation(&g, &s, 17, 50.0, 100.0, FloorMode::Strict).is_err());

        let g = ArrayGeometry::upa(8, 8).unwrap();
        let s = sector(60.0, 60.0);
        let f = build_optimal_formation(&g, &s, 41, 50.0, 100.0, FloorMode::Strict).unwrap();
        let h = channel_matrix(&g, &f, 100.0).unwrap();
        let want = 41.0 * (1.0f64 + 400.0 * 64.0).log2();
        let sic = sic_sum_capacity(&h, f.ref_snrs()).unwrap();
        assert!((sic - want).abs() < 1e-6 * want);
    }
}
