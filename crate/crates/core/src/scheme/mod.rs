//! The linearised iteration `(u_k)_t = div(A(u_{k−1})Du_k) + f(u_{k−1}, Du_k)`:
//! implicit time stepping of each linear system, the outer space-time
//! Picard loop with its per-iterate monitors, and the blow-up heuristic.

mod config;
mod diagnostics;
mod iterate;
mod step;
mod trajectory;

pub use config::{FGradientMode, SchemeConfig, SourceFn};
pub use diagnostics::{
    blowup_monitor, blowup_monitor_with, energy_diagnostics, BlowupMonitor, DiagnosticsReport,
    EnergyRecord, SliceDiagnostics,
};
pub use iterate::{default_p_energy, iterate, solve_linearized, IterationOutcome, IterationStatus};
pub use step::{linear_step, pde_residual};
pub use trajectory::Trajectory;
