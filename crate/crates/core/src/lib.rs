//! Relational-intensity channel model for n-slit interference.
//!
//! Each slit contributes one analytic Gaussian wavepacket. At any point
//! `(x, t)` the packets are decomposed into three velocity channels per
//! slit (one forward, two osmotic), the channels are projected onto the
//! total amplitude vector, and the resulting intensities and currents
//! yield an emergent velocity field. Integrating that field gives the
//! probability flux lines.
//!
//! Modules:
//!
//! * [`wavefield`]: per-slit analytic packets, their superposition and the
//!   switching schedule.
//! * [`channels`]: the 3n-channel construction, relational intensities and
//!   the emergent velocity.
//! * [`dynamics`]: flux-line integration, ensemble sampling and screen
//!   statistics.
//! * [`diagnostics`]: quantum-potential forms, heat field and residuals of
//!   the Hamilton-Jacobi and continuity equations.
//! * [`oracle`]: an independent split-operator grid solver used to
//!   cross-check everything above.

pub mod channels;
pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod oracle;
pub mod units;
pub mod wavefield;

pub use error::{Error, Result};
pub use units::UnitsConstants;

/// Relative node threshold: a total density below this fraction of the
/// largest density attainable from the local amplitudes is treated as a node.
pub const NODE_THRESHOLD: f64 = 1e-12;
