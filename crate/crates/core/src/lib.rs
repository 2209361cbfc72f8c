//! Numerical realization of Riemannian geometry through deformed
//! translation groups.
//!
//! Points of a chart are moved by frame vectors through the geodesic
//! exponential map; the group law of translations, its expansion
//! coefficients (connection, anholonomy, curvature) and the group of
//! parallel transports are all computed from that single primitive and
//! checked against classical formulas.

pub mod domain;
pub mod dp;
pub mod dsl;
pub mod error;
pub mod fd;
pub mod geodesic;
pub mod jet;
pub mod manifold;
pub mod metric;
pub mod rt;
pub mod suite;
pub mod tensor;

pub use domain::Domain;
pub use error::{Error, ParseError, Result};
pub use manifold::{ChartPoint, ChartVector, FrameVector, Manifold};
