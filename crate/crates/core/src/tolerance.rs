//! Numerical tolerances shared by every module.

/// Row sums, initial distribution mass, chattering weight sums.
pub const STRUCTURAL: f64 = 1e-12;
/// LP feasibility, optimality and pivoting.
pub const LP: f64 = 1e-9;
/// Cross-checks between two computational routes.
pub const CROSS_CHECK: f64 = 1e-7;
/// Residual accepted from a dense linear solve.
pub const LINEAR_RESIDUAL: f64 = 1e-10;
/// Mass below which an occupancy entry is treated as zero.
pub const SUPPORT: f64 = 1e-9;
/// Mass on a `-∞` pair that makes an expected reward `-∞`.
pub const NEG_INF_MASS: f64 = 1e-12;
/// Maximum deviation accepted by chattering verification.
pub const CHATTERING_VERIFY: f64 = 1e-6;
