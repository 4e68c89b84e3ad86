//! Quantum-potential identities, the osmotic/forward split, the heat field,
//! and residuals of the Hamilton-Jacobi and continuity equations.
//!
//! Sign convention: the osmotic velocity is `u = -(hbar/m) R'/R
//! = -(hbar/2m) P'/P` and the quantum potential is
//! `U = -(hbar^2/2m) R''/R`. In those terms
//!
//! ```text
//! U = (hbar^2/4m) [ (P'/P)^2 / 2 - P''/P ]
//!   = (hbar/2) u' - m u^2 / 2
//!   = (hbar^2/4m) [ Q''/(hbar w) - (Q'/(hbar w))^2 / 2 ]   with Q' = 2 w m u
//! ```
//!
//! The combination `m u^2/2 - (hbar/2) u'` is exactly `-U`; it is exposed
//! as [`osmotic_kinetic_balance`].

use crate::channels::ChannelSystem;
use crate::wavefield::{FieldSample, WaveJet, WaveSource, WavefieldState};
use crate::{Error, Result, UnitsConstants, NODE_THRESHOLD};

/// Forward and osmotic parts of the velocity at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityDecomposition {
    /// `S' / m`.
    pub forward: f64,
    /// `-(hbar/m) R'/R`.
    pub osmotic: f64,
    /// Momentum fluctuation `m u`.
    pub delta_p: f64,
}

pub fn decompose(sample: &FieldSample, units: &UnitsConstants) -> Result<VelocityDecomposition> {
    if !(sample.r > 0.0) {
        return Err(Error::NonPositive {
            what: "amplitude",
            value: sample.r,
        });
    }
    let osmotic = -units.hbar_over_mass() * sample.grad_r / sample.r;
    Ok(VelocityDecomposition {
        forward: sample.grad_s / units.mass,
        osmotic,
        delta_p: units.mass * osmotic,
    })
}

/// `u = -(hbar/2m) P'/P`.
pub fn osmotic_from_density(p: f64, grad_p: f64, units: &UnitsConstants) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::NonPositive {
            what: "density",
            value: p,
        });
    }
    Ok(-units.hbar / (2.0 * units.mass) * grad_p / p)
}

/// `delta S(t) - delta S(0) = -(hbar/2) ln(P_t / P_0)`.
pub fn action_fluctuation(p_t: f64, p_0: f64, units: &UnitsConstants) -> Result<f64> {
    positive_pair(p_t, p_0)?;
    Ok(-0.5 * units.hbar * (p_t / p_0).ln())
}

fn positive_pair(p_t: f64, p_0: f64) -> Result<()> {
    if !(p_t > 0.0) {
        return Err(Error::NonPositive {
            what: "density",
            value: p_t,
        });
    }
    if !(p_0 > 0.0) {
        return Err(Error::NonPositive {
            what: "reference density",
            value: p_0,
        });
    }
    Ok(())
}

pub fn quantum_potential_grad_form(
    p: f64,
    grad_p: f64,
    lap_p: f64,
    units: &UnitsConstants,
) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::NonPositive {
            what: "density",
            value: p,
        });
    }
    let g = grad_p / p;
    Ok(units.hbar * units.hbar / (4.0 * units.mass) * (0.5 * g * g - lap_p / p))
}

pub fn quantum_potential_r_form(r: f64, lap_r: f64, units: &UnitsConstants) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositive {
            what: "amplitude",
            value: r,
        });
    }
    Ok(-units.hbar * units.hbar / (2.0 * units.mass) * lap_r / r)
}

/// `U = (hbar/2) u' - m u^2/2` for `u = -(hbar/m) R'/R`.
pub fn quantum_potential_u_form(u: f64, div_u: f64, units: &UnitsConstants) -> f64 {
    0.5 * units.hbar * div_u - 0.5 * units.mass * u * u
}

/// `m u^2/2 - (hbar/2) u'`, which equals `-U` under the osmotic sign used here.
pub fn osmotic_kinetic_balance(u: f64, div_u: f64, units: &UnitsConstants) -> f64 {
    -quantum_potential_u_form(u, div_u, units)
}

/// Quantum potential of a total wave from its jet; `None` at a zero.
pub fn quantum_potential(jet: &WaveJet, units: &UnitsConstants) -> Option<f64> {
    let s = jet.sample(units)?;
    quantum_potential_r_form(s.r, s.lap_r, units).ok()
}

/// Osmotic velocity and its divergence from a wave jet.
pub fn osmotic_with_divergence(jet: &WaveJet, units: &UnitsConstants) -> Option<(f64, f64)> {
    if jet.psi.norm() == 0.0 {
        return None;
    }
    let g = jet.dpsi / jet.psi;
    let h = jet.d2psi / jet.psi - g * g;
    let hm = units.hbar_over_mass();
    // (ln R)' = Re g, (ln R)'' = Re h
    Some((-hm * g.re, -hm * h.re))
}

/// Heat exchanged relative to a reference density, tabulated on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatField {
    pub x_min: f64,
    pub step: f64,
    /// `-hbar omega ln(P_t / P_0)` at each grid point.
    pub delta_q: Vec<f64>,
    pub omega: f64,
    pub hbar: f64,
}

/// Per-point heat `-hbar omega ln(P_t / P_0)`.
pub fn heat_exchange(p_t: f64, p_0: f64, omega: f64, units: &UnitsConstants) -> Result<f64> {
    positive_pair(p_t, p_0)?;
    Ok(-units.hbar * omega * (p_t / p_0).ln())
}

pub fn heat_field(
    x_min: f64,
    step: f64,
    p_t: &[f64],
    p_0: &[f64],
    omega: f64,
    units: &UnitsConstants,
) -> Result<HeatField> {
    if p_t.len() != p_0.len() {
        return Err(Error::InvalidArgument(format!(
            "density grids differ in length: {} vs {}",
            p_t.len(),
            p_0.len()
        )));
    }
    if !(omega > 0.0) {
        return Err(Error::NonPositive {
            what: "omega",
            value: omega,
        });
    }
    if !(step > 0.0) {
        return Err(Error::NonPositive {
            what: "grid step",
            value: step,
        });
    }
    let delta_q = p_t
        .iter()
        .zip(p_0)
        .map(|(&a, &b)| heat_exchange(a, b, omega, units))
        .collect::<Result<_>>()?;
    Ok(HeatField {
        x_min,
        step,
        delta_q,
        omega,
        hbar: units.hbar,
    })
}

impl HeatField {
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.step
    }

    fn stencil(&self, i: usize) -> Option<[f64; 5]> {
        if i < 2 || i + 2 >= self.delta_q.len() {
            return None;
        }
        let q = &self.delta_q;
        Some([q[i - 2], q[i - 1], q[i], q[i + 1], q[i + 2]])
    }

    /// Fourth-order central first derivative; `None` within two points of an edge.
    pub fn gradient(&self, i: usize) -> Option<f64> {
        let [a, b, _, d, e] = self.stencil(i)?;
        Some((a - 8.0 * b + 8.0 * d - e) / (12.0 * self.step))
    }

    /// Fourth-order central second derivative.
    pub fn laplacian(&self, i: usize) -> Option<f64> {
        let [a, b, c, d, e] = self.stencil(i)?;
        Some((-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * self.step * self.step))
    }

    /// `Q' / (2 omega m)`.
    pub fn osmotic_velocity(&self, i: usize, units: &UnitsConstants) -> Option<f64> {
        Some(self.gradient(i)? / (2.0 * self.omega * units.mass))
    }
}

/// `U = (hbar^2/4m) [ Q''/(hbar w) - (Q'/(hbar w))^2 / 2 ]`.
pub fn quantum_potential_from_heat(
    grad_q: f64,
    lap_q: f64,
    omega: f64,
    units: &UnitsConstants,
) -> f64 {
    let e = units.hbar * omega;
    let g = grad_q / e;
    units.hbar * units.hbar / (4.0 * units.mass) * (lap_q / e - 0.5 * g * g)
}

/// Heat-form quantum potential at grid point `i`, derivatives by finite
/// differences of the tabulated heat.
pub fn quantum_potential_heat_form(
    heat: &HeatField,
    i: usize,
    units: &UnitsConstants,
) -> Result<f64> {
    let (g, l) = heat
        .gradient(i)
        .zip(heat.laplacian(i))
        .ok_or_else(|| Error::InvalidArgument(format!("grid point {i} too close to the edge")))?;
    Ok(quantum_potential_from_heat(g, l, heat.omega, units))
}

/// Pointwise residuals with norms over the high-probability region.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub xs: Vec<f64>,
    /// `None` at nodes.
    pub residuals: Vec<Option<f64>>,
    /// Points in the smallest set holding the requested probability mass.
    pub included: Vec<bool>,
    pub max_abs: f64,
    pub rms: f64,
}

impl ResidualReport {
    fn new(xs: &[f64], residuals: Vec<Option<f64>>, densities: &[f64], mass: f64) -> Self {
        let included = probability_region(densities, mass);
        let mut max_abs: f64 = 0.0;
        let mut sum = 0.0;
        let mut n = 0usize;
        for (r, &inc) in residuals.iter().zip(&included) {
            if let (Some(r), true) = (r, inc) {
                max_abs = max_abs.max(r.abs());
                sum += r * r;
                n += 1;
            }
        }
        Self {
            xs: xs.to_vec(),
            residuals,
            included,
            max_abs,
            rms: if n > 0 { (sum / n as f64).sqrt() } else { 0.0 },
        }
    }
}

/// Fraction of probability mass over which residual norms are reported.
pub const REPORT_MASS: f64 = 0.99;

/// Marks the fewest points whose densities sum to `mass` of the total,
/// excluding nodes.
pub fn probability_region(densities: &[f64], mass: f64) -> Vec<bool> {
    let peak = densities.iter().copied().fold(0.0, f64::max);
    let total: f64 = densities.iter().sum();
    let mut order: Vec<usize> = (0..densities.len()).collect();
    order.sort_by(|&a, &b| densities[b].total_cmp(&densities[a]).then(a.cmp(&b)));
    let mut out = vec![false; densities.len()];
    let mut acc = 0.0;
    for i in order {
        if acc >= mass * total || densities[i] <= NODE_THRESHOLD * peak {
            break;
        }
        out[i] = true;
        acc += densities[i];
    }
    out
}

/// `dS/dt + (S')^2/2m + V + U` with the time derivative taken by central
/// differences of the phase. `S'` and `U` come from the closed-form jet.
pub fn hj_residual<W: WaveSource + ?Sized>(
    source: &W,
    units: &UnitsConstants,
    potential: &dyn Fn(f64, f64) -> f64,
    xs: &[f64],
    t: f64,
    dt: f64,
) -> Result<ResidualReport> {
    if !(dt > 0.0) {
        return Err(Error::NonPositive { what: "dt", value: dt });
    }
    let mut residuals = Vec::with_capacity(xs.len());
    let mut densities = Vec::with_capacity(xs.len());
    for &x in xs {
        let jet = source.jet(x, t, units)?;
        let p = jet.psi.norm_sqr();
        densities.push(p);
        let later = source.jet(x, t + dt, units)?.psi;
        let earlier = source.jet(x, t - dt, units)?.psi;
        let value = (p > 0.0 && later.norm() > 0.0 && earlier.norm() > 0.0)
            .then(|| {
                let ds_dt = units.hbar * (later * earlier.conj()).arg() / (2.0 * dt);
                let grad_s = units.hbar * (jet.dpsi / jet.psi).im;
                let u = quantum_potential(&jet, units)?;
                Some(ds_dt + grad_s * grad_s / (2.0 * units.mass) + potential(x, t) + u)
            })
            .flatten();
        residuals.push(value);
    }
    Ok(ResidualReport::new(xs, residuals, &densities, REPORT_MASS))
}

/// `dP/dt + (P v)'` with `P` and `J = P v` from the channel construction,
/// central differences of step `dt` in time and `h` in space.
pub fn continuity_residual(
    state: &WavefieldState,
    units: &UnitsConstants,
    xs: &[f64],
    t: f64,
    dt: f64,
    h: f64,
) -> Result<ResidualReport> {
    if !(dt > 0.0) || !(h > 0.0) {
        return Err(Error::InvalidArgument("dt and h must be positive".into()));
    }
    let channels = |x: f64, t: f64| -> Result<ChannelSystem> {
        Ok(state.snapshot(t, units)?.channels(x, units))
    };
    let mut residuals = Vec::with_capacity(xs.len());
    let mut densities = Vec::with_capacity(xs.len());
    for &x in xs {
        densities.push(channels(x, t)?.total_intensity());
        let dp_dt = (channels(x, t + dt)?.total_intensity()
            - channels(x, t - dt)?.total_intensity())
            / (2.0 * dt);
        let dj_dx =
            (channels(x + h, t)?.total_current() - channels(x - h, t)?.total_current()) / (2.0 * h);
        residuals.push(Some(dp_dt + dj_dx));
    }
    Ok(ResidualReport::new(xs, residuals, &densities, REPORT_MASS))
}

/// `log2(coarse / fine)` for one halving of the step.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{evaluate_mode, GaussianSlitMode, PlaneWave};

    fn nat() -> UnitsConstants {
        UnitsConstants::natural()
    }

    #[test]
    fn plane_wave_has_zero_potential() {
        let u = nat();
        assert_eq!(quantum_potential_grad_form(0.3, 0.0, 0.0, &u).unwrap(), 0.0);
        assert_eq!(quantum_potential_u_form(0.0, 0.0, &u), 0.0);
        assert_eq!(quantum_potential_from_heat(0.0, 0.0, 1.0, &u), 0.0);
    }

    #[test]
    fn gaussian_peak_potential() {
        // R = exp(-x^2 / 4 s^2): R''/R at 0 is -1/(2 s^2), so U = 1/(4 s^2)
        let s: f64 = 0.7;
        let expected = 1.0 / (4.0 * s * s);
        let r = 1.0;
        let lap_r = -1.0 / (2.0 * s * s);
        assert!((quantum_potential_r_form(r, lap_r, &nat()).unwrap() - expected).abs() < 1e-15);
        // P = R^2: P'' = 2 R R'' at the peak
        let p = quantum_potential_grad_form(1.0, 0.0, 2.0 * lap_r, &nat()).unwrap();
        assert!((p - expected).abs() < 1e-15);
        // u = x / (2 s^2), u' = 1/(2 s^2)
        let uf = quantum_potential_u_form(0.0, 1.0 / (2.0 * s * s), &nat());
        assert!((uf - expected).abs() < 1e-15);
        assert!((osmotic_kinetic_balance(0.0, 1.0 / (2.0 * s * s), &nat()) + expected).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let u = nat();
        assert!(quantum_potential_grad_form(0.0, 0.0, 0.0, &u).is_err());
        assert!(quantum_potential_r_form(-1.0, 0.0, &u).is_err());
        assert!(heat_exchange(0.0, 1.0, 1.0, &u).is_err());
        assert!(heat_field(0.0, 0.1, &[1.0, 2.0], &[1.0], 1.0, &u).is_err());
    }

    #[test]
    fn osmotic_r_and_p_forms_agree() {
        let u = UnitsConstants::new(0.7, 1.9, 1.0).unwrap();
        let m = GaussianSlitMode::new(0.2, 0.8, 0.5, 0.0).unwrap();
        let f = evaluate_mode(&m, 1.1, 0.9, &u).unwrap();
        let d = decompose(&f, &u).unwrap();
        let p = f.r * f.r;
        let grad_p = 2.0 * f.r * f.grad_r;
        let from_p = osmotic_from_density(p, grad_p, &u).unwrap();
        assert!((d.osmotic - from_p).abs() <= 1e-15 * from_p.abs().max(1.0));
        assert!((d.delta_p - u.mass * d.osmotic).abs() < 1e-15);
    }

    #[test]
    fn heat_at_spreading_gaussian_center() {
        let u = nat();
        let omega = 2.0;
        let m = GaussianSlitMode::new(0.0, 1.0, 0.0, 0.0).unwrap();
        let t = 1.5;
        let p_t = evaluate_mode(&m, 0.0, t, &u).unwrap().r.powi(2);
        let p_0 = evaluate_mode(&m, 0.0, 0.0, &u).unwrap().r.powi(2);
        let q = heat_exchange(p_t, p_0, omega, &u).unwrap();
        let expected = u.hbar * omega * (m.width(t, &u) / m.sigma0).ln();
        assert!((q - expected).abs() < 1e-14);
        assert_eq!(heat_exchange(0.4, 0.4, omega, &u).unwrap(), 0.0);
        let ds = action_fluctuation(p_t, p_0, &u).unwrap();
        assert!((q - 2.0 * omega * ds).abs() < 1e-14);
    }

    #[test]
    fn region_covers_requested_mass() {
        let d = [0.0, 1.0, 5.0, 3.0, 1e-20];
        let r = probability_region(&d, 0.8);
        assert_eq!(r, vec![false, false, true, true, false]);
    }

    #[test]
    fn plane_wave_hj_residual_vanishes() {
        let u = UnitsConstants::new(1.0, 2.0, 1.0).unwrap();
        let w = PlaneWave {
            amplitude: 1.0,
            wavenumber: 1.3,
        };
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let rep = hj_residual(&w, &u, &|_, _| 0.0, &xs, 0.7, 1e-3).unwrap();
        assert!(rep.max_abs < 1e-8, "{}", rep.max_abs);
    }
}
