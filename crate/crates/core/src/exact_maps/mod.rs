//! Exact linear-fractional arithmetic, interval-map families, system
//! validation, cylinders and width growth.

mod growth;
mod maps;
mod mobius;
mod system;

pub use growth::{growth_bounds_check, growth_bounds_with, DepthExtremes, GrowthOptions, GrowthReport, DEFAULT_DEPTH_CAP};
pub use maps::{AffineMap, IntervalMap, Lip, LipInfo, Modulus, QuadMap};
pub use mobius::MobiusMap;
pub use system::{
    validate_compatible_system, validate_lf_system, Interval, JointFailure, LfMapFlags, LfReport, MapSystem, SysReport,
    SystemKind, FLOAT_JOINT_TOL,
};

/// `h(x)` for an exact map and rational input.
pub fn map_eval(m: &IntervalMap, x: &crate::rat::Rat) -> crate::error::Result<crate::rat::Rat> {
    m.eval_rat(x)
}
