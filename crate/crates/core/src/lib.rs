//! Simulation and verification toolkit for the multi-nest ants process on
//! triangle series-parallel graphs.
//!
//! * [`sp_graph`]: series-parallel expressions, flattening, heights and
//!   effective conductance.
//! * [`triangle`]: gluing three SP components onto `N1`, `N2`, `F`.
//! * [`walk`]: weighted walks and backward loop-erasure.
//! * [`ants`]: the multi-nest and single-nest reinforcement processes.
//! * [`urns`]: G-urns and the weighted Polya urn used as comparison processes.
//! * [`theory`]: limit probabilities, vector field, zeros and flow.
//! * [`oracle`]: exact loop-erased path laws on small graphs.
//! * [`harness`]: experiment configs, runs, verification reports.

pub mod ants;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod sp_graph;
pub mod theory;
pub mod triangle;
pub mod urns;
pub mod walk;
