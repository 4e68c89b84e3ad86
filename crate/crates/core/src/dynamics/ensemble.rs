use rayon::prelude::*;

use super::integrator::{integrate_with, IntegratorSettings, Recording, Trajectory};
use super::sampling::{sample_initial_positions, CdfTable};
use super::screen::{HistogramSpec, ScreenHistogram};
use crate::wavefield::WavefieldState;
use crate::{Error, Result, UnitsConstants};

#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub state: WavefieldState,
    pub units: UnitsConstants,
    pub t0: f64,
    pub t_screen: f64,
    pub settings: IntegratorSettings,
    pub count: usize,
    pub seed: u64,
    pub histogram: HistogramSpec,
    /// Number of fully recorded trajectories started at evenly spaced quantiles.
    pub bundle: usize,
    /// Recording stride for bundle trajectories.
    pub record_every: usize,
}

/// Ensemble statistics of the momentum change at one switching event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickStatistics {
    pub event_time: f64,
    pub count: usize,
    pub mean: f64,
    pub std_error: f64,
    pub mean_abs: f64,
    pub std_error_abs: f64,
}

impl KickStatistics {
    fn from_deltas(event_time: f64, deltas: &[f64]) -> Self {
        let (mean, std_error) = mean_and_se(deltas.iter().copied());
        let (mean_abs, std_error_abs) = mean_and_se(deltas.iter().map(|d| d.abs()));
        Self {
            event_time,
            count: deltas.len(),
            mean,
            std_error,
            mean_abs,
            std_error_abs,
        }
    }

    /// `|mean| / std_error`.
    pub fn significance(&self) -> f64 {
        if self.std_error > 0.0 {
            self.mean.abs() / self.std_error
        } else if self.mean != 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub initial_positions: Vec<f64>,
    /// `None` for trajectories stopped at a node.
    pub final_positions: Vec<Option<f64>>,
    pub bundle: Vec<Trajectory>,
    pub histogram: ScreenHistogram,
    pub kicks: Vec<KickStatistics>,
    pub flagged: usize,
    pub substeps: u64,
}

/// Samples `count` starting points from the intensity at `t0`, integrates
/// each to the screen and bins the arrivals. Results are gathered by index,
/// so they do not depend on how rayon schedules the work.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleResult> {
    spec.settings.validate()?;
    spec.histogram.validate()?;
    if !(spec.t_screen > spec.t0) {
        return Err(Error::Config(format!(
            "t_screen = {} must exceed t0 = {}",
            spec.t_screen, spec.t0
        )));
    }
    let initial_positions = if spec.count > 0 {
        sample_initial_positions(&spec.state, spec.t0, spec.count, spec.seed, &spec.units)?
    } else {
        Vec::new()
    };

    let runs: Vec<Trajectory> = initial_positions
        .par_iter()
        .map(|&x0| {
            integrate_with(
                x0,
                spec.t0,
                spec.t_screen,
                &spec.state,
                &spec.units,
                &spec.settings,
                Recording::Endpoints,
            )
        })
        .collect::<Result<_>>()?;

    let bundle = if spec.bundle > 0 {
        let table = CdfTable::for_state(&spec.state, spec.t0, &spec.units)?;
        (0..spec.bundle)
            .into_par_iter()
            .map(|k| {
                let x0 = table.quantile((k as f64 + 0.5) / spec.bundle as f64);
                integrate_with(
                    x0,
                    spec.t0,
                    spec.t_screen,
                    &spec.state,
                    &spec.units,
                    &spec.settings,
                    Recording::Every(spec.record_every.max(1)),
                )
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let final_positions: Vec<Option<f64>> = runs.iter().map(Trajectory::final_position).collect();
    let flagged = final_positions.iter().filter(|p| p.is_none()).count();
    let histogram = ScreenHistogram::from_positions(
        spec.histogram,
        spec.t_screen,
        final_positions.iter().flatten().copied(),
    )?;

    let kicks = spec
        .state
        .events()
        .iter()
        .map(|e| e.time)
        .filter(|&te| te > spec.t0 && te <= spec.t_screen)
        .map(|te| {
            let deltas: Vec<f64> = runs
                .iter()
                .flat_map(|r| r.kicks.iter())
                .filter(|k| k.event_time == te)
                .map(|k| k.delta())
                .collect();
            KickStatistics::from_deltas(te, &deltas)
        })
        .collect();

    Ok(EnsembleResult {
        substeps: runs.iter().map(|r| r.substeps).sum(),
        initial_positions,
        final_positions,
        bundle,
        histogram,
        kicks,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::GaussianSlitMode;

    #[test]
    fn small_symmetric_ensemble() {
        let spec = EnsembleSpec {
            state: WavefieldState::from_modes(
                0.0,
                [
                    GaussianSlitMode::new(-2.0, 0.5, 0.0, 0.0).unwrap(),
                    GaussianSlitMode::new(2.0, 0.5, 0.0, 0.0).unwrap(),
                ],
            ),
            units: UnitsConstants::natural(),
            t0: 0.0,
            t_screen: 1.0,
            settings: IntegratorSettings::with_dt(0.02),
            count: 200,
            seed: 3,
            histogram: HistogramSpec {
                x_min: -10.0,
                x_max: 10.0,
                bins: 40,
            },
            bundle: 5,
            record_every: 10,
        };
        let r = run_ensemble(&spec).unwrap();
        assert_eq!(r.histogram.total() as usize + r.flagged, 200);
        assert_eq!(r.bundle.len(), 5);
        assert_eq!(r.bundle[0].samples.len(), 6);
        assert!(r.kicks.is_empty());
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_and_se([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
