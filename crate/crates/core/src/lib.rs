//! Exact computations of global even vector fields, Čech deformations and
//! nildominance degrees for supermanifolds over the projective line.

pub mod chart_geometry;
pub mod cli;
pub mod deformation;
pub mod kernel_analysis;
pub mod linalg;
pub mod report;
pub mod superalgebra;
