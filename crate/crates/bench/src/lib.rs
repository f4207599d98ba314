//! Fixtures shared by the mubforge benchmarks.

use mubforge_core::constellation::{ConstellationSpec, ParameterPoint};
use mubforge_core::search::random_point;

/// Specs benchmarked across sizes, smallest first.
pub const SPECS: [&str; 4] = ["d=4:3,2,1", "d=5:4^3,2", "d=6:5,4^2,2", "d=7:6^3,1"];

pub fn spec(s: &str) -> ConstellationSpec {
    s.parse().expect("benchmark specs are valid")
}

/// A fixed random start for `spec`.
pub fn start(spec: &ConstellationSpec) -> ParameterPoint {
    random_point(spec, 1, 0).expect("benchmark specs are restricted")
}
