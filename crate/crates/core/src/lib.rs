//! Capacity analysis and formation optimization for swarms of
//! position-controllable single-antenna users served by a multi-antenna
//! base station over line-of-sight links.
//!
//! Because every user can hold a commanded position, the channel matrix
//! itself becomes a design variable. This crate provides the pieces needed
//! to exploit that:
//!
//! - array geometry and steering responses ([`array`]),
//! - per-formation channel construction and rate metrics ([`metrics`]),
//! - enumeration of mutually non-interfering direction sets and the
//!   closed-form capacity they achieve ([`orthogonal`]),
//! - successive convex range refinement under spacing constraints ([`sca`]),
//! - greedy direction assignment over an oversampled codebook ([`greedy`]),
//! - block-coordinate orchestration of the two searches ([`bcd`]).
//!
//! # Example
//!
//! ```
//! use swarm_mimo::array::ArrayGeometry;
//! use swarm_mimo::orthogonal::{AngularSector, FloorMode, build_optimal_formation};
//! use swarm_mimo::metrics::{channel_matrix, sic_sum_capacity};
//!
//! let g = ArrayGeometry::ula(16).unwrap();
//! let sector = AngularSector::azimuth_span(90f64.to_radians()).unwrap();
//! // four users on mutually non-interfering directions at the closest range
//! let f = build_optimal_formation(&g, &sector, 4, 50.0, 100.0, FloorMode::Strict).unwrap();
//! let h = channel_matrix(&g, &f, 100.0).unwrap();
//! let c = sic_sum_capacity(&h, f.ref_snrs()).unwrap();
//! let per_user = (1f64 + 100.0 * (100.0f64 / 50.0).powi(2) * 16.0).log2();
//! assert!((c - 4.0 * per_user).abs() < 1e-9);
//! ```

pub mod array;
pub mod bcd;
pub mod error;
pub mod greedy;
pub mod metrics;
pub mod orthogonal;
pub mod sca;

pub use array::{ArrayGeometry, ArrayKind, Direction, SteeringVector};
pub use bcd::{
    optimize_formation, refine_formation, validate_formation, BcdSettings, FormationReport,
    OptimizationTrace, RateObjective, StopReason,
};
pub use error::{Error, Result};
pub use greedy::{
    greedy_directions_sic, greedy_directions_tin, sinr_reduction, DirectionCodebook,
    GreedyAssignment, GreedyState,
};
pub use metrics::{ChannelMatrix, SwarmFormation, UavPlacement};
pub use sca::{
    FormationConstraints, RangeSubproblemSic, RangeSubproblemTin, ScaSettings, SicRangeSolution,
    TinRangeSolution,
};
