//! Analytic slit wavepackets and their superposition.
//!
//! Every slit emits a normalized free Gaussian packet
//!
//! ```text
//! psi(x, t) = (2 pi s_t^2)^(-1/4) exp[ -xi^2 / (4 sigma0 s_t)
//!             + i m v0 (xi + v0 tau / 2) / hbar + i phase_offset ]
//! s_t = sigma0 (1 + i hbar tau / (2 m sigma0^2)),  tau = t - birth,
//! xi  = x - center - v0 tau
//! ```
//!
//! All derivatives are closed-form. Working with `log psi` keeps the
//! amplitude finite far out in the tails where `psi` itself underflows.

use std::f64::consts::PI;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::{Error, Result, UnitsConstants, NODE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSlitMode {
    pub center: f64,
    pub sigma0: f64,
    pub v0: f64,
    pub phase_offset: f64,
    pub birth_time: f64,
}

impl GaussianSlitMode {
    pub fn new(center: f64, sigma0: f64, v0: f64, phase_offset: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::NonPositive {
                what: "sigma0",
                value: sigma0,
            });
        }
        for (name, v) in [("center", center), ("v0", v0), ("phase_offset", phase_offset)] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        Ok(Self {
            center,
            sigma0,
            v0,
            phase_offset,
            birth_time: 0.0,
        })
    }

    pub fn born_at(mut self, birth_time: f64) -> Self {
        self.birth_time = birth_time;
        self
    }

    /// Same packet translated by `d`.
    pub fn shifted(mut self, d: f64) -> Self {
        self.center += d;
        self
    }

    /// Complex width `s_t`.
    pub fn complex_width(&self, t: f64, units: &UnitsConstants) -> Complex64 {
        let tau = t - self.birth_time;
        let spread = units.hbar * tau / (2.0 * units.mass * self.sigma0 * self.sigma0);
        Complex64::new(self.sigma0, self.sigma0 * spread)
    }

    /// Real width `sigma_t = |s_t|`.
    pub fn width(&self, t: f64, units: &UnitsConstants) -> f64 {
        self.complex_width(t, units).norm()
    }

    pub fn snapshot(&self, t: f64, units: &UnitsConstants) -> Result<ModeSnapshot> {
        if t < self.birth_time {
            return Err(Error::NotBorn {
                t,
                birth: self.birth_time,
            });
        }
        let tau = t - self.birth_time;
        let s_t = self.complex_width(t, units);
        let k0 = units.mass * self.v0 / units.hbar;
        Ok(ModeSnapshot {
            shift: self.center + self.v0 * tau,
            quad: (4.0 * self.sigma0 * s_t).inv(),
            log_prefactor: -0.25 * (2.0 * PI).ln() - 0.5 * s_t.ln(),
            k0,
            phase: k0 * self.v0 * tau / 2.0 + self.phase_offset,
            width: s_t.norm(),
        })
    }
}

/// A mode frozen at one instant; cheap to evaluate at many positions.
#[derive(Debug, Clone, Copy)]
pub struct ModeSnapshot {
    shift: f64,
    quad: Complex64,
    log_prefactor: Complex64,
    k0: f64,
    phase: f64,
    width: f64,
}

impl ModeSnapshot {
    /// `log psi` and its first x-derivative `psi'/psi`.
    #[inline]
    pub fn log_psi(&self, x: f64) -> (Complex64, Complex64) {
        let xi = x - self.shift;
        let log = self.log_prefactor - self.quad * (xi * xi)
            + Complex64::new(0.0, self.k0 * xi + self.phase);
        let grad = self.quad * (-2.0 * xi) + Complex64::new(0.0, self.k0);
        (log, grad)
    }

    /// Second derivative of `log psi`; position independent for a Gaussian.
    #[inline]
    pub fn log_curvature(&self) -> Complex64 {
        -2.0 * self.quad
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn jet(&self, x: f64) -> WaveJet {
        let (log, g) = self.log_psi(x);
        let psi = log.exp();
        WaveJet {
            psi,
            dpsi: psi * g,
            d2psi: psi * (self.log_curvature() + g * g),
        }
    }

    pub fn sample(&self, x: f64, units: &UnitsConstants) -> FieldSample {
        let (log, g) = self.log_psi(x);
        let r = log.re.exp();
        let h = self.log_curvature();
        FieldSample {
            psi: log.exp(),
            r,
            s: units.hbar * log.im,
            grad_r: r * g.re,
            grad_s: units.hbar * g.im,
            lap_r: r * (h.re + g.re * g.re),
        }
    }
}

/// Amplitude/phase decomposition of one wave at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub psi: Complex64,
    pub r: f64,
    pub s: f64,
    pub grad_r: f64,
    pub grad_s: f64,
    pub lap_r: f64,
}

/// A complex wave value with its first two x-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveJet {
    pub psi: Complex64,
    pub dpsi: Complex64,
    pub d2psi: Complex64,
}

impl WaveJet {
    pub const ZERO: WaveJet = WaveJet {
        psi: Complex64::new(0.0, 0.0),
        dpsi: Complex64::new(0.0, 0.0),
        d2psi: Complex64::new(0.0, 0.0),
    };

    /// Madelung decomposition of the jet; `None` at an exact zero.
    ///
    /// `s` is `hbar * arg(psi)`, wrapped to `(-pi hbar, pi hbar]`.
    pub fn sample(&self, units: &UnitsConstants) -> Option<FieldSample> {
        let r = self.psi.norm();
        if r == 0.0 {
            return None;
        }
        let g = self.dpsi / self.psi;
        let h = self.d2psi / self.psi - g * g;
        Some(FieldSample {
            psi: self.psi,
            r,
            s: units.hbar * self.psi.arg(),
            grad_r: r * g.re,
            grad_s: units.hbar * g.im,
            lap_r: r * (h.re + g.re * g.re),
        })
    }
}

impl std::ops::Add for WaveJet {
    type Output = WaveJet;
    fn add(self, o: WaveJet) -> WaveJet {
        WaveJet {
            psi: self.psi + o.psi,
            dpsi: self.dpsi + o.dpsi,
            d2psi: self.d2psi + o.d2psi,
        }
    }
}

pub fn evaluate_mode(
    mode: &GaussianSlitMode,
    x: f64,
    t: f64,
    units: &UnitsConstants,
) -> Result<FieldSample> {
    Ok(mode.snapshot(t, units)?.sample(x, units))
}

/// Anything that can produce `psi` and its spatial derivatives.
pub trait WaveSource: Sync {
    fn jet(&self, x: f64, t: f64, units: &UnitsConstants) -> Result<WaveJet>;
}

impl WaveSource for GaussianSlitMode {
    fn jet(&self, x: f64, t: f64, units: &UnitsConstants) -> Result<WaveJet> {
        Ok(self.snapshot(t, units)?.jet(x))
    }
}

/// `A exp(i (k x - omega t))` with the free dispersion `omega = hbar k^2 / 2m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub amplitude: f64,
    pub wavenumber: f64,
}

impl WaveSource for PlaneWave {
    fn jet(&self, x: f64, t: f64, units: &UnitsConstants) -> Result<WaveJet> {
        let k = self.wavenumber;
        let omega = units.hbar * k * k / (2.0 * units.mass);
        let psi = Complex64::from_polar(self.amplitude, k * x - omega * t);
        let ik = Complex64::new(0.0, k);
        Ok(WaveJet {
            psi,
            dpsi: ik * psi,
            d2psi: ik * ik * psi,
        })
    }
}

/// What happens to the slit configuration at a switching event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchAction {
    Open(GaussianSlitMode),
    /// Index into the mode list in effect just before the event.
    Close(usize),
}

/// How a slit opened mid-flight is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RebirthPolicy {
    /// Fresh packet of width `sigma0` emitted at the event time.
    #[default]
    FreshWidth,
    /// Packet as if it had been evolving since the state's origin time.
    EvolvedFromOrigin,
}

impl RebirthPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            RebirthPolicy::FreshWidth => "fresh_width",
            RebirthPolicy::EvolvedFromOrigin => "evolved_from_t0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingEvent {
    pub time: f64,
    pub action: SwitchAction,
    pub rebirth: RebirthPolicy,
}

/// A constant mode set in force from `start` until the next epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub start: f64,
    pub modes: Vec<GaussianSlitMode>,
}

impl Epoch {
    pub fn snapshot(&self, t: f64, units: &UnitsConstants) -> Result<FieldSnapshot> {
        let modes = self
            .modes
            .iter()
            .map(|m| m.snapshot(t, units))
            .collect::<Result<_>>()?;
        Ok(FieldSnapshot { modes })
    }
}

/// Ordered slit modes plus a time-ordered schedule of switching events.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefieldState {
    origin: f64,
    events: Vec<SwitchingEvent>,
    epochs: Vec<Epoch>,
}

impl WavefieldState {
    pub fn new(origin: f64, modes: Vec<GaussianSlitMode>) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::InvalidArgument("origin time must be finite".into()));
        }
        Ok(Self {
            origin,
            events: Vec::new(),
            epochs: vec![Epoch {
                start: origin,
                modes,
            }],
        })
    }

    /// Static state built from modes all born at `origin`.
    pub fn from_modes(origin: f64, modes: impl IntoIterator<Item = GaussianSlitMode>) -> Self {
        let modes = modes.into_iter().map(|m| m.born_at(origin)).collect();
        Self {
            origin,
            events: Vec::new(),
            epochs: vec![Epoch {
                start: origin,
                modes,
            }],
        }
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn events(&self) -> &[SwitchingEvent] {
        &self.events
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.epochs
    }

    pub fn initial_modes(&self) -> &[GaussianSlitMode] {
        &self.epochs[0].modes
    }

    /// Returns a new state with `event` added to the schedule.
    pub fn with_event(&self, event: SwitchingEvent) -> Result<Self> {
        if !(event.time.is_finite() && event.time >= self.origin) {
            return Err(Error::Config(format!(
                "event time {} precedes origin {}",
                event.time, self.origin
            )));
        }
        let mut events = self.events.clone();
        let at = events.partition_point(|e| e.time <= event.time);
        events.insert(at, event);
        let epochs = build_epochs(self.origin, &self.epochs[0].modes, &events)?;
        Ok(Self {
            origin: self.origin,
            events,
            epochs,
        })
    }

    /// Mode set in force at `t` (all events with time <= t applied).
    pub fn epoch_at(&self, t: f64) -> &Epoch {
        let idx = self.epochs.partition_point(|e| e.start <= t);
        &self.epochs[idx.saturating_sub(1)]
    }

    pub fn modes_at(&self, t: f64) -> &[GaussianSlitMode] {
        &self.epoch_at(t).modes
    }

    pub fn snapshot(&self, t: f64, units: &UnitsConstants) -> Result<FieldSnapshot> {
        self.epoch_at(t).snapshot(t, units)
    }

    /// The same configuration translated by `d`, events included.
    pub fn shifted(&self, d: f64) -> Result<Self> {
        let base = self.initial_modes().iter().map(|m| m.shifted(d)).collect();
        let mut out = Self::new(self.origin, base)?;
        for ev in &self.events {
            let action = match ev.action {
                SwitchAction::Open(m) => SwitchAction::Open(m.shifted(d)),
                close => close,
            };
            out = out.with_event(SwitchingEvent { action, ..*ev })?;
        }
        Ok(out)
    }
}

fn build_epochs(
    origin: f64,
    base: &[GaussianSlitMode],
    events: &[SwitchingEvent],
) -> Result<Vec<Epoch>> {
    let mut epochs = vec![Epoch {
        start: origin,
        modes: base.to_vec(),
    }];
    for ev in events {
        let mut modes = epochs.last().map(|e| e.modes.clone()).unwrap_or_default();
        match ev.action {
            SwitchAction::Open(mode) => {
                let birth = match ev.rebirth {
                    RebirthPolicy::FreshWidth => ev.time,
                    RebirthPolicy::EvolvedFromOrigin => origin,
                };
                modes.push(mode.born_at(birth));
            }
            SwitchAction::Close(idx) => {
                if idx >= modes.len() {
                    return Err(Error::Config(format!(
                        "cannot close slit {idx} at t = {}: only {} open",
                        ev.time,
                        modes.len()
                    )));
                }
                modes.remove(idx);
            }
        }
        match epochs.last_mut() {
            Some(last) if last.start == ev.time => last.modes = modes,
            _ => epochs.push(Epoch {
                start: ev.time,
                modes,
            }),
        }
    }
    Ok(epochs)
}

impl WaveSource for WavefieldState {
    fn jet(&self, x: f64, t: f64, units: &UnitsConstants) -> Result<WaveJet> {
        Ok(self.snapshot(t, units)?.jet(x))
    }
}

/// All modes of one epoch frozen at one instant.
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub(crate) modes: SmallVec<[ModeSnapshot; 4]>,
}

impl FieldSnapshot {
    pub fn modes(&self) -> &[ModeSnapshot] {
        &self.modes
    }

    pub fn jet(&self, x: f64) -> WaveJet {
        self.modes
            .iter()
            .fold(WaveJet::ZERO, |acc, m| acc + m.jet(x))
    }

    pub fn superpose(&self, x: f64, units: &UnitsConstants) -> Superposed {
        let mut jet = WaveJet::ZERO;
        let mut amp_sum = 0.0;
        for m in &self.modes {
            let j = m.jet(x);
            amp_sum += j.psi.norm();
            jet = jet + j;
        }
        Superposed::from_jet(jet, amp_sum * amp_sum, units)
    }
}

/// Total wave at a point with the quantum-mechanical density, current and
/// guidance velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superposed {
    pub jet: WaveJet,
    pub density: f64,
    pub current: f64,
    /// `None` below the node threshold.
    pub velocity: Option<f64>,
    /// `(sum_i |psi_i|)^2`, the largest density the local amplitudes allow.
    pub max_local_density: f64,
}

impl Superposed {
    fn from_jet(jet: WaveJet, max_local_density: f64, units: &UnitsConstants) -> Self {
        let density = jet.psi.norm_sqr();
        let current = units.hbar_over_mass() * (jet.psi.conj() * jet.dpsi).im;
        let velocity = (density > NODE_THRESHOLD * max_local_density && density > 0.0)
            .then(|| current / density);
        Self {
            jet,
            density,
            current,
            velocity,
            max_local_density,
        }
    }

    pub fn psi(&self) -> Complex64 {
        self.jet.psi
    }
}

/// `Psi = sum psi_alpha`, `P = |Psi|^2`, `J = (hbar/m) Im(Psi* Psi')`, `v = J / P`.
pub fn superpose(
    state: &WavefieldState,
    x: f64,
    t: f64,
    units: &UnitsConstants,
) -> Result<Superposed> {
    Ok(state.snapshot(t, units)?.superpose(x, units))
}
