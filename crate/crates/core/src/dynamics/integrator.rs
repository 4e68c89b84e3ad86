use std::f64::consts::PI;

use smallvec::SmallVec;

use crate::channels::ChannelKind;
use crate::wavefield::{Epoch, FieldSnapshot, WavefieldState};
use crate::{Error, Result, UnitsConstants};

/// Fixed-step classical Runge-Kutta with velocity-based substepping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub dt: f64,
    /// A step is split when `|v| dt` exceeds this fraction of the local fringe scale.
    pub substep_fraction: f64,
    pub max_substeps: u32,
    /// Substep multiplier for the single retry after hitting a node.
    pub node_retry_factor: u32,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            substep_fraction: 0.1,
            max_substeps: 4096,
            node_retry_factor: 8,
        }
    }
}

impl IntegratorSettings {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::NonPositive {
                what: "dt",
                value: self.dt,
            });
        }
        if !(self.substep_fraction > 0.0 && self.substep_fraction.is_finite()) {
            return Err(Error::NonPositive {
                what: "substep_fraction",
                value: self.substep_fraction,
            });
        }
        if self.max_substeps == 0 || self.node_retry_factor == 0 {
            return Err(Error::InvalidArgument(
                "max_substeps and node_retry_factor must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which step nodes end up in [`Trajectory::samples`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    /// Every k-th grid node plus the final one.
    Every(usize),
    /// Start and end only.
    Endpoints,
}

/// Transverse momentum just before and just after a switching event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumKick {
    pub event_time: f64,
    pub before: f64,
    pub after: f64,
}

impl MomentumKick {
    pub fn delta(&self) -> f64 {
        self.after - self.before
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial_position: f64,
    /// `(t, x)` with strictly increasing `t`.
    pub samples: Vec<(f64, f64)>,
    pub dt: f64,
    /// Total RK4 substeps taken.
    pub substeps: u64,
    /// Set when a node stopped the integration; `samples` then ends early.
    pub undefined: bool,
    pub kicks: Vec<MomentumKick>,
}

impl Trajectory {
    pub const SCHEME: &'static str = "rk4-fixed-substepped";

    pub fn final_position(&self) -> Option<f64> {
        if self.undefined {
            None
        } else {
            self.samples.last().map(|s| s.1)
        }
    }
}

/// Emergent velocity and the length scale that bounds a safe step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub velocity: f64,
    pub scale: f64,
}

/// Velocity plus the local fringe scale: the smallest packet width, and
/// `2 pi hbar / (m |v_i - v_j|)` over every pair of slits that is not
/// negligible at `x`.
pub fn local_flow(snap: &FieldSnapshot, x: f64, units: &UnitsConstants) -> Result<Flow> {
    let sys = snap.channels_normalized(x, units);
    let velocity = sys.emergent_velocity()?;
    let mut scale = snap
        .modes()
        .iter()
        .map(|m| m.width())
        .fold(f64::INFINITY, f64::min);
    let fwd: SmallVec<[(f64, f64); 4]> = sys
        .channels()
        .iter()
        .filter(|c| c.kind == ChannelKind::Forward && c.amplitude > 1e-8)
        .map(|c| (c.amplitude, c.velocity))
        .collect();
    for (i, a) in fwd.iter().enumerate() {
        for b in &fwd[i + 1..] {
            let dv = (a.1 - b.1).abs();
            if dv > 0.0 {
                scale = scale.min(2.0 * PI * units.hbar / (units.mass * dv));
            }
        }
    }
    Ok(Flow { velocity, scale })
}

fn velocity(epoch: &Epoch, t: f64, x: f64, units: &UnitsConstants) -> Result<f64> {
    epoch
        .snapshot(t, units)?
        .channels_normalized(x, units)
        .emergent_velocity()
        .map_err(|e| locate(e, x, t))
}

fn locate(e: Error, x: f64, t: f64) -> Error {
    match e {
        Error::Node { density, .. } => Error::Node { x, t, density },
        other => other,
    }
}

fn rk4(
    epoch: &Epoch,
    mut x: f64,
    a: f64,
    b: f64,
    n: u32,
    first: f64,
    units: &UnitsConstants,
) -> Result<f64> {
    let h = (b - a) / n as f64;
    let mut k1 = first;
    for s in 0..n {
        let t = a + s as f64 * h;
        let t_end = if s + 1 == n { b } else { a + (s + 1) as f64 * h };
        if s > 0 {
            k1 = velocity(epoch, t, x, units)?;
        }
        let mid = epoch.snapshot(t + h / 2.0, units)?;
        let k2 = mid
            .channels_normalized(x + h / 2.0 * k1, units)
            .emergent_velocity()
            .map_err(|e| locate(e, x, t))?;
        let k3 = mid
            .channels_normalized(x + h / 2.0 * k2, units)
            .emergent_velocity()
            .map_err(|e| locate(e, x, t))?;
        let k4 = velocity(epoch, t_end, x + h * k3, units)?;
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !x.is_finite() {
            return Err(Error::Node {
                x,
                t: t_end,
                density: 0.0,
            });
        }
    }
    Ok(x)
}

/// One step `[a, b]` inside a single epoch. Returns the new position and the
/// substeps used.
fn advance(
    epoch: &Epoch,
    x: f64,
    a: f64,
    b: f64,
    units: &UnitsConstants,
    settings: &IntegratorSettings,
) -> Result<(f64, u32)> {
    let snap = epoch.snapshot(a, units)?;
    let flow = local_flow(&snap, x, units).map_err(|e| locate(e, x, a))?;
    let h = b - a;
    let wanted = (flow.velocity.abs() * h / (settings.substep_fraction * flow.scale)).ceil();
    let n = if wanted.is_finite() {
        (wanted as u32).clamp(1, settings.max_substeps)
    } else {
        settings.max_substeps
    };
    match rk4(epoch, x, a, b, n, flow.velocity, units) {
        Ok(x) => Ok((x, n)),
        Err(Error::Node { .. }) => {
            let retry = n.saturating_mul(settings.node_retry_factor);
            rk4(epoch, x, a, b, retry, flow.velocity, units).map(|x| (x, retry))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    t: f64,
    grid: Option<usize>,
    event: bool,
}

fn step_nodes(t0: f64, t1: f64, dt: f64, events: impl Iterator<Item = f64>) -> Vec<Node> {
    let span = (t1 - t0) / dt;
    let rounded = span.round();
    let steps = if (span - rounded).abs() < 1e-9 * rounded.max(1.0) {
        rounded as usize
    } else {
        span.ceil() as usize
    };
    let mut nodes: Vec<Node> = (0..steps)
        .map(|k| Node {
            t: t0 + k as f64 * dt,
            grid: Some(k),
            event: false,
        })
        .collect();
    nodes.push(Node {
        t: t1,
        grid: Some(steps),
        event: false,
    });
    let tol = 1e-12 * dt.max(t1.abs()).max(t0.abs()).max(1.0);
    for te in events {
        if te <= t0 || te > t1 {
            continue;
        }
        let at = nodes.partition_point(|n| n.t < te - tol);
        if at < nodes.len() && (nodes[at].t - te).abs() <= tol {
            nodes[at].event = true;
        } else {
            nodes.insert(
                at,
                Node {
                    t: te,
                    grid: None,
                    event: true,
                },
            );
        }
    }
    nodes
}

/// Integrates `dx/dt = v_tot(x, t)` from `t0` to `t1`, recording every step.
pub fn integrate_trajectory(
    x0: f64,
    t0: f64,
    t1: f64,
    state: &WavefieldState,
    units: &UnitsConstants,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    integrate_with(x0, t0, t1, state, units, settings, Recording::Every(1))
}

pub fn integrate_with(
    x0: f64,
    t0: f64,
    t1: f64,
    state: &WavefieldState,
    units: &UnitsConstants,
    settings: &IntegratorSettings,
    recording: Recording,
) -> Result<Trajectory> {
    settings.validate()?;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("t1 = {t1} must exceed t0 = {t0}")));
    }
    if !x0.is_finite() {
        return Err(Error::InvalidArgument("x0 must be finite".into()));
    }
    let nodes = step_nodes(t0, t1, settings.dt, state.events().iter().map(|e| e.time));
    let last = nodes.len() - 1;
    let every = match recording {
        Recording::Every(k) => k.max(1),
        Recording::Endpoints => usize::MAX,
    };

    let mut traj = Trajectory {
        initial_position: x0,
        samples: vec![(t0, x0)],
        dt: settings.dt,
        substeps: 0,
        undefined: false,
        kicks: Vec::new(),
    };
    let mut x = x0;
    let mut before_event = (t0, x0);
    let mut pending: SmallVec<[(f64, f64); 2]> = SmallVec::new();

    for (i, w) in nodes.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let epoch = state.epoch_at(a.t);
        match advance(epoch, x, a.t, b.t, units, settings) {
            Ok((nx, n)) => {
                x = nx;
                traj.substeps += n as u64;
            }
            Err(Error::Node { .. }) => {
                traj.undefined = true;
                break;
            }
            Err(e) => return Err(e),
        }

        if b.event {
            let (tp, xp) = before_event;
            if let Ok(v) = velocity(state.epoch_at(tp), tp, xp, units) {
                pending.push((b.t, units.mass * v));
            }
        } else {
            if !pending.is_empty() {
                if let Ok(v) = velocity(state.epoch_at(b.t), b.t, x, units) {
                    for (event_time, before) in pending.drain(..) {
                        traj.kicks.push(MomentumKick {
                            event_time,
                            before,
                            after: units.mass * v,
                        });
                    }
                }
                pending.clear();
            }
            before_event = (b.t, x);
        }

        let record = i + 1 == last || matches!(b.grid, Some(k) if k % every == 0);
        if record {
            traj.samples.push((b.t, x));
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{GaussianSlitMode, RebirthPolicy, SwitchAction, SwitchingEvent};

    fn gaussian(center: f64, sigma0: f64, v0: f64) -> GaussianSlitMode {
        GaussianSlitMode::new(center, sigma0, v0, 0.0).unwrap()
    }

    #[test]
    fn nodes_split_at_events() {
        let n = step_nodes(0.0, 1.0, 0.25, [0.3, 0.5, 2.0].into_iter());
        let ts: Vec<f64> = n.iter().map(|n| n.t).collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        assert!(n[2].event && n[2].grid.is_none());
        assert!(n[3].event && n[3].grid == Some(2));
    }

    #[test]
    fn uneven_span_ends_at_t1() {
        let n = step_nodes(0.0, 1.05, 0.1, std::iter::empty());
        assert_eq!(n.last().unwrap().t, 1.05);
        assert_eq!(n.len(), 12);
    }

    #[test]
    fn moving_packet_center_is_carried() {
        // the centre of a single packet moves at v0
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(0.0, [gaussian(1.0, 1.0, 0.7)]);
        let tr = integrate_trajectory(1.0, 0.0, 3.0, &st, &u, &IntegratorSettings::with_dt(1e-2))
            .unwrap();
        let (t, x) = *tr.samples.last().unwrap();
        assert_eq!(t, 3.0);
        assert!((x - (1.0 + 0.7 * 3.0)).abs() < 1e-10);
        assert_eq!(tr.samples.len(), 301);
    }

    #[test]
    fn rejects_bad_window() {
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(0.0, [gaussian(0.0, 1.0, 0.0)]);
        let s = IntegratorSettings::default();
        assert!(integrate_trajectory(0.0, 1.0, 1.0, &st, &u, &s).is_err());
        assert!(integrate_trajectory(f64::NAN, 0.0, 1.0, &st, &u, &s).is_err());
        let bad = IntegratorSettings::with_dt(0.0);
        assert!(integrate_trajectory(0.0, 0.0, 1.0, &st, &u, &bad).is_err());
    }

    #[test]
    fn exact_node_is_flagged() {
        // antisymmetric pair: x = 0 is a permanent node
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(
            0.0,
            [
                GaussianSlitMode::new(-1.0, 0.5, 0.0, 0.0).unwrap(),
                GaussianSlitMode::new(1.0, 0.5, 0.0, PI).unwrap(),
            ],
        );
        let tr = integrate_trajectory(0.0, 0.0, 1.0, &st, &u, &IntegratorSettings::default())
            .unwrap();
        assert!(tr.undefined);
        assert_eq!(tr.final_position(), None);
        assert_eq!(tr.samples.len(), 1);
    }

    #[test]
    fn kick_recorded_around_event() {
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(0.0, [gaussian(-1.0, 1.0, 0.0)])
            .with_event(SwitchingEvent {
                time: 0.5,
                action: SwitchAction::Open(GaussianSlitMode::new(1.0, 1.0, 0.0, 1.0).unwrap()),
                rebirth: RebirthPolicy::FreshWidth,
            })
            .unwrap();
        let tr = integrate_trajectory(-0.5, 0.0, 1.0, &st, &u, &IntegratorSettings::with_dt(0.1))
            .unwrap();
        assert_eq!(tr.kicks.len(), 1);
        let k = tr.kicks[0];
        assert_eq!(k.event_time, 0.5);
        assert!(k.delta().abs() > 1e-3);
        // event after the end time is never reached
        let late = st
            .with_event(SwitchingEvent {
                time: 5.0,
                action: SwitchAction::Close(0),
                rebirth: RebirthPolicy::FreshWidth,
            })
            .unwrap();
        let tr2 = integrate_trajectory(-0.5, 0.0, 1.0, &late, &u, &IntegratorSettings::with_dt(0.1))
            .unwrap();
        assert_eq!(tr, tr2);
    }

    #[test]
    fn endpoints_recording() {
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(0.0, [gaussian(0.0, 1.0, 0.0)]);
        let s = IntegratorSettings::with_dt(0.1);
        let full = integrate_trajectory(0.4, 0.0, 1.0, &st, &u, &s).unwrap();
        let ends = integrate_with(0.4, 0.0, 1.0, &st, &u, &s, Recording::Endpoints).unwrap();
        assert_eq!(ends.samples.len(), 2);
        assert_eq!(ends.samples[1], *full.samples.last().unwrap());
        let sparse = integrate_with(0.4, 0.0, 1.0, &st, &u, &s, Recording::Every(3)).unwrap();
        let ts: Vec<f64> = sparse.samples.iter().map(|s| s.0).collect();
        assert_eq!(ts.len(), 5);
        assert_eq!(*ts.last().unwrap(), 1.0);
    }
}
