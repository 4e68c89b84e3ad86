use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::wavefield::WavefieldState;
use crate::{Error, Result, UnitsConstants};

/// Widths beyond which a packet's tail is ignored.
const SUPPORT_WIDTHS: f64 = 12.0;
const CDF_POINTS: usize = 1 << 16;

/// Interval holding all packets at `t` out to twelve widths.
pub fn support(state: &WavefieldState, t: f64, units: &UnitsConstants) -> Result<(f64, f64)> {
    let snap = state.snapshot(t, units)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (mode, s) in state.modes_at(t).iter().zip(snap.modes()) {
        let c = mode.center + mode.v0 * (t - mode.birth_time);
        lo = lo.min(c - SUPPORT_WIDTHS * s.width());
        hi = hi.max(c + SUPPORT_WIDTHS * s.width());
    }
    if !(lo < hi) {
        return Err(Error::Config("field has no open slit".into()));
    }
    Ok((lo, hi))
}

/// Cumulative distribution tabulated with the trapezoid rule and inverted by
/// linear interpolation.
#[derive(Debug, Clone)]
pub struct CdfTable {
    x_min: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl CdfTable {
    pub fn from_density(
        x_min: f64,
        x_max: f64,
        points: usize,
        density: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(x_max > x_min) || points < 2 {
            return Err(Error::InvalidArgument("empty tabulation range".into()));
        }
        let step = (x_max - x_min) / (points - 1) as f64;
        let p: Vec<f64> = (0..points).map(|i| density(x_min + i as f64 * step)).collect();
        let mut cdf = Vec::with_capacity(points);
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in p.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * step;
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) || p.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::Config(format!(
                "density is not normalizable on [{x_min}, {x_max}] (mass {acc})"
            )));
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Self { x_min, step, cdf })
    }

    /// Table of `|Psi(x, t)|^2` over the field's support.
    pub fn for_state(state: &WavefieldState, t: f64, units: &UnitsConstants) -> Result<Self> {
        let (lo, hi) = support(state, t, units)?;
        let snap = state.snapshot(t, units)?;
        Self::from_density(lo, hi, CDF_POINTS, |x| snap.jet(x).psi.norm_sqr())
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.step * (self.cdf.len() - 1) as f64
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let pos = (x - self.x_min) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.cdf.len() {
            return 1.0;
        }
        let f = pos - i as f64;
        self.cdf[i] + f * (self.cdf[i + 1] - self.cdf[i])
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < u);
        if i == 0 {
            return self.x_min;
        }
        if i >= self.cdf.len() {
            return self.x_max();
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.x_min + (i as f64 - 1.0 + f) * self.step
    }
}

/// Uniform draw number `stream` of the run seeded by `seed`.
///
/// Each draw owns a ChaCha stream, so draw `i` is the same whatever order
/// or thread produces it.
pub fn draw_uniform(seed: u64, stream: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.gen::<f64>()
}

/// `n` positions distributed as the total intensity at `t0`.
pub fn sample_initial_positions(
    state: &WavefieldState,
    t0: f64,
    n: usize,
    seed: u64,
    units: &UnitsConstants,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let table = CdfTable::for_state(state, t0, units)?;
    Ok((0..n as u64)
        .map(|i| table.quantile(draw_uniform(seed, i)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::GaussianSlitMode;

    #[test]
    fn narrow_gaussian_stays_within_five_widths() {
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(
            0.0,
            [GaussianSlitMode::new(3.0, 1e-3, 0.0, 0.0).unwrap()],
        );
        let xs = sample_initial_positions(&st, 0.0, 5000, 11, &u).unwrap();
        assert!(xs.iter().all(|x| (x - 3.0).abs() < 5e-3));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(
            0.0,
            [GaussianSlitMode::new(0.0, 1.0, 0.0, 0.0).unwrap()],
        );
        let a = sample_initial_positions(&st, 0.0, 100, 42, &u).unwrap();
        let b = sample_initial_positions(&st, 0.0, 100, 42, &u).unwrap();
        let c = sample_initial_positions(&st, 0.0, 100, 43, &u).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // a prefix of a longer run is the shorter run
        let d = sample_initial_positions(&st, 0.0, 50, 42, &u).unwrap();
        assert_eq!(&a[..50], &d[..]);
    }

    #[test]
    fn zero_draws_rejected() {
        let u = UnitsConstants::natural();
        let st = WavefieldState::from_modes(
            0.0,
            [GaussianSlitMode::new(0.0, 1.0, 0.0, 0.0).unwrap()],
        );
        assert!(sample_initial_positions(&st, 0.0, 0, 1, &u).is_err());
    }

    #[test]
    fn empty_field_is_config_error() {
        let u = UnitsConstants::natural();
        let st = WavefieldState::new(0.0, vec![]).unwrap();
        assert!(matches!(
            sample_initial_positions(&st, 0.0, 10, 1, &u),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn quantile_inverts_cdf() {
        let t = CdfTable::from_density(-1.0, 1.0, 201, |x| 1.0 + x).unwrap();
        for u in [0.01, 0.2, 0.5, 0.77, 0.99] {
            let x = t.quantile(u);
            assert!((t.cdf(x) - u).abs() < 1e-12);
        }
        assert!(CdfTable::from_density(0.0, 1.0, 10, |_| 0.0).is_err());
    }
}
