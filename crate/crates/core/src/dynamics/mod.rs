//! Flux-line integration through the emergent velocity field, initial
//! ensembles drawn from the total intensity, and screen statistics.

mod ensemble;
mod integrator;
mod sampling;
mod screen;

pub use ensemble::{run_ensemble, EnsembleResult, EnsembleSpec, KickStatistics};
pub use integrator::{
    integrate_trajectory, integrate_with, local_flow, IntegratorSettings, MomentumKick, Recording,
    Trajectory,
};
pub use sampling::{draw_uniform, sample_initial_positions, support, CdfTable};
pub use screen::{ks_statistic, prominent_minima, HistogramSpec, ScreenHistogram};

pub use crate::wavefield::{RebirthPolicy, SwitchAction, SwitchingEvent};

use crate::wavefield::WavefieldState;
use crate::Result;

/// Schedules `event` on `state`. Queries at or after the event time see the
/// new slit configuration.
pub fn apply_switching_event(state: &WavefieldState, event: SwitchingEvent) -> Result<WavefieldState> {
    state.with_event(event)
}
