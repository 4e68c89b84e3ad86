//! Three velocity channels per slit and the emergent velocity they carry.
//!
//! Slit `i` with amplitude `R_i`, phase angle `theta_i = S_i / hbar`,
//! forward velocity `v_i = S_i' / m` and osmotic velocity
//! `u_i = -(hbar/m) R_i' / R_i` contributes
//!
//! | kind            | amplitude | angle              | velocity |
//! |-----------------|-----------|--------------------|----------|
//! | forward         | `R_i`     | `theta_i`          | `v_i`    |
//! | osmotic plus    | `R_i / 2` | `theta_i + pi/2`   | `+u_i`   |
//! | osmotic minus   | `R_i / 2` | `theta_i - pi/2`   | `-u_i`   |
//!
//! The osmotic pair cancels in the resultant amplitude vector, so the total
//! intensity is untouched, but it carries exactly the cross-current that
//! turns `sum v_i P(w_i)` into the quantum-mechanical current.

use smallvec::SmallVec;

use crate::wavefield::{FieldSample, FieldSnapshot, WavefieldState};
use crate::{Error, Result, UnitsConstants, NODE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Forward,
    OsmoticPlus,
    OsmoticMinus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub slit_index: usize,
    pub kind: ChannelKind,
    pub amplitude: f64,
    /// Unit vector `w_hat` in the phase plane.
    pub direction: [f64; 2],
    pub velocity: f64,
    /// Set when the slit amplitude is exactly zero and the phase carries no meaning.
    pub indeterminate: bool,
}

impl Channel {
    pub fn angle(&self) -> f64 {
        self.direction[1].atan2(self.direction[0])
    }
}

/// Per-slit input to the channel construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitChannels {
    pub amplitude: f64,
    pub angle: f64,
    pub forward: f64,
    pub osmotic: f64,
}

impl SlitChannels {
    pub fn from_sample(sample: &FieldSample, units: &UnitsConstants) -> Self {
        let osmotic = if sample.r > 0.0 {
            -units.hbar_over_mass() * sample.grad_r / sample.r
        } else {
            0.0
        };
        Self {
            amplitude: sample.r,
            angle: sample.s / units.hbar,
            forward: sample.grad_s / units.mass,
            osmotic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSystem {
    channels: SmallVec<[Channel; 12]>,
    resultant: [f64; 2],
}

impl ChannelSystem {
    pub fn from_slits<I>(slits: I) -> Self
    where
        I: IntoIterator<Item = SlitChannels>,
    {
        let mut channels: SmallVec<[Channel; 12]> = SmallVec::new();
        for (slit_index, s) in slits.into_iter().enumerate() {
            let (sin, cos) = s.angle.sin_cos();
            let indeterminate = s.amplitude == 0.0;
            let mut push = |kind, amplitude, direction, velocity| {
                channels.push(Channel {
                    slit_index,
                    kind,
                    amplitude,
                    direction,
                    velocity,
                    indeterminate,
                })
            };
            push(ChannelKind::Forward, s.amplitude, [cos, sin], s.forward);
            push(ChannelKind::OsmoticPlus, s.amplitude / 2.0, [-sin, cos], s.osmotic);
            push(ChannelKind::OsmoticMinus, s.amplitude / 2.0, [sin, -cos], -s.osmotic);
        }
        Self::from_channels(channels)
    }

    /// Arbitrary channel set; the resultant is accumulated from all of them.
    pub fn from_channels(channels: impl IntoIterator<Item = Channel>) -> Self {
        let channels: SmallVec<[Channel; 12]> = channels.into_iter().collect();
        let mut resultant = [0.0, 0.0];
        for c in &channels {
            resultant[0] += c.amplitude * c.direction[0];
            resultant[1] += c.amplitude * c.direction[1];
        }
        Self {
            channels,
            resultant,
        }
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// `sum_i w_hat_i R(w_i)`.
    pub fn resultant(&self) -> [f64; 2] {
        self.resultant
    }

    /// Projection of channel `i` onto the resultant; may be negative.
    pub fn relational_intensity(&self, i: usize) -> Result<f64> {
        let c = self.channels.get(i).ok_or_else(|| {
            Error::InvalidArgument(format!("channel {i} out of range ({})", self.len()))
        })?;
        Ok(self.projection(c))
    }

    #[inline]
    fn projection(&self, c: &Channel) -> f64 {
        c.amplitude * (c.direction[0] * self.resultant[0] + c.direction[1] * self.resultant[1])
    }

    pub fn total_intensity(&self) -> f64 {
        self.channels.iter().map(|c| self.projection(c)).sum()
    }

    pub fn total_current(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.velocity * self.projection(c))
            .sum()
    }

    /// Largest total intensity the forward amplitudes could produce.
    fn intensity_scale(&self) -> f64 {
        let s: f64 = self
            .channels
            .iter()
            .filter(|c| c.kind == ChannelKind::Forward)
            .map(|c| c.amplitude)
            .sum();
        s * s
    }

    pub fn is_node(&self) -> bool {
        let p = self.total_intensity();
        !(p > NODE_THRESHOLD * self.intensity_scale() && p > 0.0)
    }

    /// `v_tot = J_tot / P_tot`.
    pub fn emergent_velocity(&self) -> Result<f64> {
        let p = self.total_intensity();
        if !(p > NODE_THRESHOLD * self.intensity_scale() && p > 0.0) {
            return Err(Error::Node {
                x: f64::NAN,
                t: f64::NAN,
                density: p,
            });
        }
        Ok(self.total_current() / p)
    }

    /// Only the forward channels.
    pub fn forward_only(&self) -> Self {
        Self::from_channels(
            self.channels
                .iter()
                .copied()
                .filter(|c| c.kind == ChannelKind::Forward),
        )
    }

    /// Every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_channels(self.channels.iter().map(|c| Channel {
            amplitude: c.amplitude * factor,
            ..*c
        }))
    }
}

impl FieldSnapshot {
    /// Channels with the true slit amplitudes at `x`.
    pub fn channels(&self, x: f64, units: &UnitsConstants) -> ChannelSystem {
        ChannelSystem::from_slits(
            self.modes()
                .iter()
                .map(|m| SlitChannels::from_sample(&m.sample(x, units), units)),
        )
    }

    /// Channels with all amplitudes divided by the largest one.
    ///
    /// Leaves the emergent velocity unchanged but stays finite in the far
    /// tails, where every slit amplitude underflows.
    pub fn channels_normalized(&self, x: f64, units: &UnitsConstants) -> ChannelSystem {
        let logs: SmallVec<[_; 4]> = self.modes().iter().map(|m| m.log_psi(x)).collect();
        let top = logs
            .iter()
            .map(|(l, _)| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let hm = units.hbar_over_mass();
        ChannelSystem::from_slits(logs.iter().map(|(l, g)| SlitChannels {
            amplitude: (l.re - top).exp(),
            angle: l.im,
            forward: hm * g.im,
            osmotic: -hm * g.re,
        }))
    }
}

pub fn build_channels(
    state: &WavefieldState,
    x: f64,
    t: f64,
    units: &UnitsConstants,
) -> Result<ChannelSystem> {
    Ok(state.snapshot(t, units)?.channels(x, units))
}

/// Emergent velocity at `(x, t)` through the channel construction.
pub fn emergent_velocity_at(
    state: &WavefieldState,
    x: f64,
    t: f64,
    units: &UnitsConstants,
) -> Result<f64> {
    state
        .snapshot(t, units)?
        .channels_normalized(x, units)
        .emergent_velocity()
        .map_err(|e| match e {
            Error::Node { density, .. } => Error::Node { x, t, density },
            other => other,
        })
}

/// Phase argument for [`double_slit_closed_form`]: `(S2 - S1) / hbar`.
pub fn closed_form_phase(s1: f64, s2: f64, hbar: f64) -> f64 {
    (s2 - s1) / hbar
}

/// Two-slit emergent velocity written out explicitly:
///
/// ```text
///        R1^2 v1 + R2^2 v2 + R1 R2 (v1 + v2) cos phi + R1 R2 (u1 - u2) sin phi
/// v   = -----------------------------------------------------------------------
///                         R1^2 + R2^2 + 2 R1 R2 cos phi
/// ```
///
/// With `phi = (S2 - S1) / hbar` (see [`closed_form_phase`]) this equals
/// [`ChannelSystem::emergent_velocity`]. With `phi = (S1 - S2) / hbar` the
/// osmotic cross term enters with the wrong sign.
#[allow(clippy::too_many_arguments)]
pub fn double_slit_closed_form(
    r1: f64,
    r2: f64,
    v1: f64,
    v2: f64,
    u1: f64,
    u2: f64,
    phi: f64,
) -> Result<f64> {
    // 1 + cos phi = 2 cos^2(phi/2) avoids the cancellation near a node
    let (sh, ch) = (0.5 * phi).sin_cos();
    let (dr, cc) = (r1 - r2, 2.0 * r1 * r2 * ch * ch);
    let den = dr * dr + 2.0 * cc;
    let scale = (r1 + r2) * (r1 + r2);
    if !(den > NODE_THRESHOLD * scale && den > 0.0) {
        return Err(Error::Node {
            x: f64::NAN,
            t: f64::NAN,
            density: den,
        });
    }
    let num = dr * (r1 * v1 - r2 * v2) + cc * (v1 + v2) + 2.0 * r1 * r2 * (u1 - u2) * sh * ch;
    Ok(num / den)
}

/// `P = sum_i (R_i^2 + sum_{i' > i} 2 R_i R_i' cos(phi_i - phi_i'))`.
pub fn nslit_intensity(amplitudes: &[f64], phases: &[f64]) -> Result<f64> {
    if amplitudes.len() != phases.len() {
        return Err(Error::InvalidArgument(format!(
            "{} amplitudes but {} phases",
            amplitudes.len(),
            phases.len()
        )));
    }
    let mut p = 0.0;
    for i in 0..amplitudes.len() {
        p += amplitudes[i] * amplitudes[i];
        for j in i + 1..amplitudes.len() {
            p += 2.0 * amplitudes[i] * amplitudes[j] * (phases[i] - phases[j]).cos();
        }
    }
    Ok(p)
}

/// Flux-line velocity of every particle, each from its own channel system.
///
/// For a product state the nabla of particle `j` only sees factor `j`, so
/// the `j`-th velocity is the emergent velocity of the `j`-th system.
pub fn emergent_velocity_nparticle(systems: &[ChannelSystem]) -> Vec<Result<f64>> {
    systems.iter().map(ChannelSystem::emergent_velocity).collect()
}

/// Ratio of summed currents to summed intensities over all particles.
///
/// A single number for the whole system; the per-particle flux lines come
/// from [`emergent_velocity_nparticle`].
pub fn aggregated_velocity(systems: &[ChannelSystem]) -> Result<f64> {
    let p: f64 = systems.iter().map(ChannelSystem::total_intensity).sum();
    let j: f64 = systems.iter().map(ChannelSystem::total_current).sum();
    let scale: f64 = systems.iter().map(ChannelSystem::intensity_scale).sum();
    if !(p > NODE_THRESHOLD * scale && p > 0.0) {
        return Err(Error::Node {
            x: f64::NAN,
            t: f64::NAN,
            density: p,
        });
    }
    Ok(j / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{evaluate_mode, superpose, GaussianSlitMode};
    use std::f64::consts::PI;

    fn slit(amplitude: f64, angle: f64, forward: f64, osmotic: f64) -> SlitChannels {
        SlitChannels {
            amplitude,
            angle,
            forward,
            osmotic,
        }
    }

    #[test]
    fn three_channels_per_slit() {
        let sys = ChannelSystem::from_slits([slit(1.0, 0.2, 0.1, 0.3), slit(0.5, 1.0, -0.2, 0.1)]);
        assert_eq!(sys.len(), 6);
    }

    #[test]
    fn osmotic_pair_is_antiparallel() {
        let sys = ChannelSystem::from_slits([slit(0.8, 2.3, 0.0, 0.7)]);
        let c = sys.channels();
        let dot = c[1].direction[0] * c[2].direction[0] + c[1].direction[1] * c[2].direction[1];
        assert!((dot + 1.0).abs() < 1e-15);
        assert_eq!(c[1].amplitude, c[2].amplitude);
        assert_eq!(c[1].velocity, -c[2].velocity);
    }

    #[test]
    fn single_slit_resultant_is_forward() {
        let sys = ChannelSystem::from_slits([slit(0.8, 2.3, 0.4, 0.7)]);
        let r = sys.resultant();
        assert!((r[0] - 0.8 * 2.3f64.cos()).abs() < 1e-15);
        assert!((r[1] - 0.8 * 2.3f64.sin()).abs() < 1e-15);
        assert!((sys.total_intensity() - 0.64).abs() < 1e-15);
        assert!((sys.total_current() - 0.4 * 0.64).abs() < 1e-15);
        assert!((sys.emergent_velocity().unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn single_channel_self_projection() {
        let sys = ChannelSystem::from_channels([Channel {
            slit_index: 0,
            kind: ChannelKind::Forward,
            amplitude: 0.6,
            direction: [0.0, 1.0],
            velocity: 1.0,
            indeterminate: false,
        }]);
        assert!((sys.relational_intensity(0).unwrap() - 0.36).abs() < 1e-15);
        assert!(sys.relational_intensity(1).is_err());
    }

    #[test]
    fn forward_relational_intensity_double_slit() {
        let (r1, r2, t1, t2) = (0.7, 0.4, 0.3, 2.1);
        let sys = ChannelSystem::from_slits([slit(r1, t1, 0.0, 0.5), slit(r2, t2, 0.0, -0.2)]);
        let expected = r1 * r1 + r1 * r2 * (t1 - t2).cos();
        assert!((sys.relational_intensity(0).unwrap() - expected).abs() < 1e-15);
        let p = sys.total_intensity();
        assert!((p - (r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * (t1 - t2).cos())).abs() < 1e-15);
    }

    #[test]
    fn relational_intensity_can_be_negative() {
        let sys = ChannelSystem::from_slits([slit(0.2, 0.0, 0.0, 0.0), slit(1.0, PI, 0.0, 0.0)]);
        assert!(sys.relational_intensity(0).unwrap() < 0.0);
        assert!(sys.total_intensity() >= 0.0);
    }

    #[test]
    fn zero_amplitude_slit_is_inert() {
        let a = ChannelSystem::from_slits([slit(0.9, 0.4, 0.3, 0.2)]);
        let b = ChannelSystem::from_slits([slit(0.9, 0.4, 0.3, 0.2), slit(0.0, 1.7, 5.0, 3.0)]);
        assert!(b.channels()[3].indeterminate);
        assert_eq!(a.total_intensity(), b.total_intensity());
        assert_eq!(a.emergent_velocity().unwrap(), b.emergent_velocity().unwrap());
    }

    #[test]
    fn node_is_reported() {
        let sys = ChannelSystem::from_slits([slit(1.0, 0.0, 1.0, 0.0), slit(1.0, PI, -1.0, 0.0)]);
        assert!(matches!(sys.emergent_velocity(), Err(Error::Node { .. })));
    }

    #[test]
    fn plane_wave_limit_uses_forward_only() {
        let sys = ChannelSystem::from_slits([slit(1.0, 0.3, 2.0, 0.0), slit(0.5, 1.2, -1.0, 0.0)]);
        let fwd: f64 = (0..sys.len())
            .filter(|&i| sys.channels()[i].kind == ChannelKind::Forward)
            .map(|i| sys.channels()[i].velocity * sys.relational_intensity(i).unwrap())
            .sum();
        assert!((sys.total_current() - fwd).abs() < 1e-15);
    }

    #[test]
    fn closed_form_special_values() {
        let v = double_slit_closed_form(0.5, 0.5, 1.0, 3.0, 7.0, -2.0, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        let v = double_slit_closed_form(0.5, 0.5, 1.0, 3.0, 7.0, -2.0, PI / 2.0).unwrap();
        assert!((v - (2.0 + 4.5)).abs() < 1e-12);
        assert!(double_slit_closed_form(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, PI).is_err());
    }

    #[test]
    fn nslit_intensity_small_cases() {
        assert!((nslit_intensity(&[0.7], &[1.0]).unwrap() - 0.49).abs() < 1e-15);
        assert!(nslit_intensity(&[1.0, 1.0], &[0.0, PI]).unwrap().abs() < 1e-15);
        assert!(nslit_intensity(&[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn symmetric_double_slit_midpoint_velocity_vanishes() {
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(
            0.0,
            [
                GaussianSlitMode::new(-2.0, 0.7, 0.3, 0.0).unwrap(),
                GaussianSlitMode::new(2.0, 0.7, -0.3, 0.0).unwrap(),
            ],
        );
        for t in [0.0, 0.5, 2.0, 5.0] {
            let v = emergent_velocity_at(&st, 0.0, t, &u).unwrap();
            assert!(v.abs() < 1e-14, "t={t} v={v}");
        }
    }

    #[test]
    fn normalized_channels_preserve_velocity() {
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(
            0.0,
            [
                GaussianSlitMode::new(-1.0, 0.5, 0.0, 0.0).unwrap(),
                GaussianSlitMode::new(1.5, 0.8, 0.2, 1.0).unwrap(),
            ],
        );
        let snap = st.snapshot(0.8, &u).unwrap();
        let a = snap.channels(0.3, &u).emergent_velocity().unwrap();
        let b = snap.channels_normalized(0.3, &u).emergent_velocity().unwrap();
        assert!((a - b).abs() < 1e-13 * a.abs().max(1.0));
        // far tail: true amplitudes underflow, normalized ones do not
        assert!(snap.channels(80.0, &u).emergent_velocity().is_err());
        let far = snap.channels_normalized(80.0, &u).emergent_velocity().unwrap();
        assert!(far.is_finite());
    }

    #[test]
    fn nparticle_product_state_decouples() {
        let u1 = UnitsConstants::natural();
        let u2 = u1.with_mass(2.5).unwrap();
        let s1 = WavefieldState::from_modes(0.0, [GaussianSlitMode::new(0.0, 1.0, 0.2, 0.0).unwrap()]);
        let s2 = WavefieldState::from_modes(0.0, [GaussianSlitMode::new(1.0, 0.5, -0.4, 0.0).unwrap()]);
        let c1 = build_channels(&s1, 0.4, 1.0, &u1).unwrap();
        let c2 = build_channels(&s2, -0.2, 1.0, &u2).unwrap();
        let v = emergent_velocity_nparticle(&[c1.clone(), c2.clone()]);
        assert_eq!(*v[0].as_ref().unwrap(), c1.emergent_velocity().unwrap());
        assert_eq!(*v[1].as_ref().unwrap(), c2.emergent_velocity().unwrap());
        let single = emergent_velocity_nparticle(std::slice::from_ref(&c1));
        assert_eq!(single[0], c1.emergent_velocity());
        let agg = aggregated_velocity(&[c1.clone(), c2.clone()]).unwrap();
        let expect = (c1.total_current() + c2.total_current())
            / (c1.total_intensity() + c2.total_intensity());
        assert!((agg - expect).abs() < 1e-15);
    }

    #[test]
    fn channel_density_matches_superposition() {
        let u = UnitsConstants::new(1.0, 0.8, 1.0).unwrap();
        let modes = [
            GaussianSlitMode::new(-1.0, 0.6, 0.1, 0.0).unwrap(),
            GaussianSlitMode::new(0.5, 0.9, -0.3, 0.7).unwrap(),
            GaussianSlitMode::new(2.0, 0.4, 0.0, 2.0).unwrap(),
        ];
        let st = WavefieldState::from_modes(0.0, modes);
        for &(x, t) in &[(0.0, 0.4), (1.2, 1.5), (-0.7, 3.0)] {
            let sys = build_channels(&st, x, t, &u).unwrap();
            let q = superpose(&st, x, t, &u).unwrap();
            assert!((sys.total_intensity() - q.density).abs() <= 1e-12 * q.density);
            assert!((sys.total_current() - q.current).abs() <= 1e-12 * q.density.max(q.current.abs()));
            let fs = evaluate_mode(&modes[0], x, t, &u).unwrap();
            let ch = sys.channels()[0];
            assert!((ch.amplitude - fs.r).abs() < 1e-15);
        }
    }
}
