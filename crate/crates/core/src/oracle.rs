//! Independent reference solver: split-operator spectral evolution of a
//! wavefunction on a periodic grid, with velocities from spectral
//! derivatives. Nothing here reuses the analytic derivative code.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result, UnitsConstants, NODE_THRESHOLD};

/// Fraction of the domain at each end that must stay empty.
const EDGE_FRACTION: f64 = 1.0 / 32.0;
/// Probability allowed inside the edge bands before the boundary flag is raised.
const EDGE_TOLERANCE: f64 = 1e-20;

/// Wavefunction sampled at `x_j = x_min + j (x_max - x_min) / N`, periodic
/// with period `x_max - x_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub x_min: f64,
    pub x_max: f64,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl GridWavefunction {
    pub fn new(x_min: f64, x_max: f64, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(Error::InvalidArgument(format!(
                "grid domain [{x_min}, {x_max}] is empty"
            )));
        }
        if values.len() < 2 || !values.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "grid size {} is not a power of two",
                values.len()
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            values,
            time,
        })
    }

    /// Samples `f` at the `n` grid points.
    pub fn from_fn(
        x_min: f64,
        x_max: f64,
        n: usize,
        time: f64,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let dx = (x_max - x_min) / n as f64;
        let values = (0..n).map(|j| f(x_min + j as f64 * dx)).collect();
        Self::new(x_min, x_max, values, time)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.len() as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.x(j)).collect()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `sum |psi|^2 dx`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx()
    }

    /// Discrete L2 distance to `f` sampled on the same grid.
    pub fn l2_error(&self, f: impl Fn(f64) -> Complex64) -> f64 {
        let dx = self.dx();
        (self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| (v - f(self.x(j))).norm_sqr())
            .sum::<f64>()
            * dx)
            .sqrt()
    }

    /// Discrete L2 distance to another wavefunction on the same grid.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok((self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * self.dx())
        .sqrt())
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() || self.x_min != other.x_min || self.x_max != other.x_max {
            return Err(Error::InvalidArgument("grids differ".into()));
        }
        Ok(())
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.len();
        let dk = 2.0 * PI / (self.x_max - self.x_min);
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                m * dk
            })
            .collect()
    }

    /// True when the edge bands hold more than a negligible share of the norm.
    pub fn touches_boundary(&self) -> bool {
        let band = ((self.len() as f64 * EDGE_FRACTION).ceil() as usize).max(1);
        let dx = self.dx();
        let n = self.len();
        let edge: f64 = self.values[..band]
            .iter()
            .chain(&self.values[n - band..])
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            * dx;
        edge > EDGE_TOLERANCE * self.norm().max(f64::MIN_POSITIVE)
    }

    /// Writes `x,density` rows with a header.
    pub fn write_density_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "x,density")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.x(j), v.norm_sqr())?;
        }
        Ok(())
    }
}

struct Transforms {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Transforms {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    /// Inverse transform including the `1/N` factor.
    fn inverse(&mut self, data: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
        let s = 1.0 / data.len() as f64;
        for v in data {
            *v *= s;
        }
    }
}

/// Result of a grid evolution.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub psi: GridWavefunction,
    /// Set when probability reached the edge bands at any step; periodic
    /// wraparound then invalidates comparisons with free-space solutions.
    pub boundary_warning: bool,
    /// `|norm(end) - norm(start)|`.
    pub norm_drift: f64,
}

/// Strang splitting: half potential kick, full kinetic drift in Fourier
/// space, half potential kick. `potential` is sampled once on the grid.
pub fn split_operator_evolve(
    psi0: &GridWavefunction,
    potential: impl Fn(f64) -> f64,
    units: &UnitsConstants,
    dt: f64,
    steps: usize,
) -> Result<Evolution> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::NonPositive { what: "dt", value: dt });
    }
    let n = psi0.len();
    let v: Vec<f64> = (0..n).map(|j| potential(psi0.x(j))).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("potential is not finite on the grid".into()));
    }
    let half_kick: Vec<Complex64> = v
        .iter()
        .map(|&vj| Complex64::from_polar(1.0, -0.5 * vj * dt / units.hbar))
        .collect();
    let drift: Vec<Complex64> = psi0
        .wavenumbers()
        .iter()
        .map(|&k| Complex64::from_polar(1.0, -units.hbar * k * k * dt / (2.0 * units.mass)))
        .collect();

    let mut fft = Transforms::new(n);
    let mut psi = psi0.clone();
    let start_norm = psi.norm();
    let mut boundary_warning = psi.touches_boundary();
    for _ in 0..steps {
        for (p, k) in psi.values.iter_mut().zip(&half_kick) {
            *p *= k;
        }
        fft.forward(&mut psi.values);
        for (p, d) in psi.values.iter_mut().zip(&drift) {
            *p *= d;
        }
        fft.inverse(&mut psi.values);
        for (p, k) in psi.values.iter_mut().zip(&half_kick) {
            *p *= k;
        }
        boundary_warning |= psi.touches_boundary();
    }
    psi.time = psi0.time + dt * steps as f64;
    let norm_drift = (psi.norm() - start_norm).abs();
    Ok(Evolution {
        psi,
        boundary_warning,
        norm_drift,
    })
}

/// Spectral first derivative; the Nyquist mode is dropped.
pub fn spectral_derivative(psi: &GridWavefunction) -> Vec<Complex64> {
    let n = psi.len();
    let mut fft = Transforms::new(n);
    let mut data = psi.values.clone();
    fft.forward(&mut data);
    for (j, (d, k)) in data.iter_mut().zip(psi.wavenumbers()).enumerate() {
        *d = if j == n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            *d * Complex64::new(0.0, k)
        };
    }
    fft.inverse(&mut data);
    data
}

/// `(hbar/m) Im(psi'/psi)` at each grid point; `None` where
/// `|psi|^2 <= NODE_THRESHOLD * max |psi|^2`.
pub fn bohm_velocity_from_grid(psi: &GridWavefunction, units: &UnitsConstants) -> Vec<Option<f64>> {
    let peak = psi.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let d = spectral_derivative(psi);
    psi.values
        .iter()
        .zip(d)
        .map(|(p, dp)| {
            (p.norm_sqr() > NODE_THRESHOLD * peak && peak > 0.0)
                .then(|| units.hbar_over_mass() * (dp / p).im)
        })
        .collect()
}
