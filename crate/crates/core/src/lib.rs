//! Planar bar-joint linkages and the commuting vector fields built from
//! their contravariant volumes.
//!
//! * [`model`]: linkage specifications, pinning, dimension counts, redundant
//!   bars and the JSON file format.
//! * [`geometry`]: constraint maps, Jacobians and realization solving.
//! * [`nambu`]: Nambu vector fields and scalars.
//! * [`decomposition`]: acyclic semi-rigid connected sums and lifted fields.
//! * [`flows`]: projected integration, commutation and conservation checks.
//! * [`morse`]: critical values of diagonal lengths.

pub mod decomposition;
pub mod error;
pub mod flows;
pub mod geometry;
mod linalg;
pub mod model;
pub mod morse;
pub mod nambu;
pub mod rng;

pub use decomposition::{
    first_integrals, piece_system, system_type, validate_decomposition, Decomposition,
    DecompositionReport, DecompositionViolation, LiftedField, PieceSystem,
};
pub use error::{Error, Result};
pub use flows::{
    commutation_defect, find_return, integral_drift, integrate, lie_bracket_fd, FlowState,
    Trajectory, VectorField,
};
pub use geometry::{ConstraintSystem, Realization, Tolerances};
pub use model::{
    degrees_of_freedom, detect_redundant_bars, homothety_law, pin, LinkageSpec, PinnedSpec, Point,
};
pub use morse::{hexagon_critical_values, numeric_critical_values, CriticalValueReport};
pub use nambu::{snake_volume_check, NambuField};
