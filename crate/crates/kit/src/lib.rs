//! Verification harness for the DDR complex: experiment drivers, manufactured
//! solutions, rate fitting and report emission.

pub mod config;
pub mod experiments;
pub mod fields;
pub mod report;

pub use config::{AlphaSpec, CompactnessSide, ExperimentConfig, GammaSpec, MeshFamily, MuSpec};
pub use report::{fit_rate, ExperimentReport, Row};
