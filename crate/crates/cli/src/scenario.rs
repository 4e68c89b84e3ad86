//! Runs a configured experiment and renders its data artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bouncer::channels::emergent_velocity_at;
use bouncer::diagnostics::{
    continuity_residual, hj_residual, osmotic_with_divergence, probability_region,
    quantum_potential, REPORT_MASS,
};
use bouncer::dynamics::{
    prominent_minima, run_ensemble, support, CdfTable, EnsembleResult, EnsembleSpec,
    KickStatistics, ScreenHistogram,
};
use bouncer::oracle::{bohm_velocity_from_grid, split_operator_evolve, GridWavefunction};
use bouncer::wavefield::{superpose, WaveSource, WavefieldState};
use bouncer::UnitsConstants;
use serde::Serialize;

use crate::config::{linspace, ExperimentConfig};
use crate::error::CliError;
use crate::manifest::{write_bundle, RunManifest};

/// Depth, in Poisson standard deviations, a histogram dip needs to count as a minimum.
pub const MINIMA_K_SIGMA: f64 = 5.0;
/// Step for the finite differences in the residual diagnostics.
const RESIDUAL_STEP: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Compare channel velocities against the grid solver and fail on disagreement.
    pub check_oracle: bool,
    /// Write the intensity field grid even if the config does not ask for it.
    pub emit_fields: bool,
}

/// One emitted file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Screen histogram against the analytic intensity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenAnalysis {
    pub ks_distance: f64,
    /// Bin indices of prominent minima of the expected counts.
    pub analytic_minima: Vec<usize>,
    /// Bin indices of prominent minima of the observed counts.
    pub histogram_minima: Vec<usize>,
    /// Same number of minima, pairwise within one bin.
    pub minima_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KickSummary {
    pub event_time: f64,
    pub count: usize,
    pub mean: f64,
    pub std_error: f64,
    pub significance: f64,
    pub mean_abs: f64,
    pub std_error_abs: f64,
}

impl From<&KickStatistics> for KickSummary {
    fn from(k: &KickStatistics) -> Self {
        Self {
            event_time: k.event_time,
            count: k.count,
            mean: k.mean,
            std_error: k.std_error,
            significance: k.significance(),
            mean_abs: k.mean_abs,
            std_error_abs: k.std_error_abs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleSummary {
    pub particle: usize,
    pub mass: f64,
    pub count: usize,
    pub flagged: usize,
    pub substeps: u64,
    pub screen_time: f64,
    pub histogram_total: u64,
    pub underflow: u64,
    pub overflow: u64,
    pub screen: ScreenAnalysis,
    pub kicks: Vec<KickSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSummary {
    pub time: f64,
    pub hj_residual_max: f64,
    pub hj_residual_rms: f64,
    pub continuity_residual_max: f64,
    pub continuity_residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub particle: usize,
    pub grid_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub t_start: f64,
    pub max_deviation: f64,
    pub boundary_warning: bool,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub particles: Vec<ParticleSummary>,
    pub diagnostics: Option<DiagnosticsSummary>,
    pub oracle: Vec<OracleSummary>,
}

/// Everything a run computes, before anything is written.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub config: ExperimentConfig,
    pub states: Vec<(WavefieldState, UnitsConstants)>,
    pub ensembles: Vec<EnsembleResult>,
    pub summary: Summary,
    /// Data artifacts in write order.
    pub artifacts: Vec<Artifact>,
    pub elapsed_seconds: f64,
}

/// Number formatting shared by every text artifact: shortest round-trip
/// digits, exponent form for very large or small magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn suffix(particle: usize) -> String {
    if particle == 0 {
        String::new()
    } else {
        format!("_p{particle}")
    }
}

/// Compares the ensemble histogram with the analytic intensity at the screen.
pub fn analyse_screen(
    histogram: &ScreenHistogram,
    state: &WavefieldState,
    units: &UnitsConstants,
) -> Result<ScreenAnalysis, CliError> {
    let table = CdfTable::for_state(state, histogram.screen_time, units)?;
    let cdf = |x: f64| table.cdf(x);
    let expected = ScreenHistogram::expected_counts(&histogram.spec, histogram.total(), cdf);
    let observed: Vec<f64> = histogram.counts.iter().map(|&c| c as f64).collect();
    let analytic_minima = prominent_minima(&expected, MINIMA_K_SIGMA);
    let histogram_minima = prominent_minima(&observed, MINIMA_K_SIGMA);
    let minima_match = analytic_minima.len() == histogram_minima.len()
        && analytic_minima
            .iter()
            .zip(&histogram_minima)
            .all(|(a, b)| a.abs_diff(*b) <= 1);
    Ok(ScreenAnalysis {
        ks_distance: histogram.ks_distance(cdf),
        analytic_minima,
        histogram_minima,
        minima_match,
    })
}

fn trajectories_csv(ens: &EnsembleResult) -> Vec<u8> {
    let mut s = String::from("trajectory_id,t,x\n");
    for (id, tr) in ens.bundle.iter().enumerate() {
        for &(t, x) in &tr.samples {
            let _ = writeln!(s, "{id},{},{}", fmt_f64(t), fmt_f64(x));
        }
    }
    s.into_bytes()
}

fn histogram_csv(h: &ScreenHistogram) -> Vec<u8> {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for (k, c) in h.counts.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{c}",
            fmt_f64(h.spec.edge(k)),
            fmt_f64(h.spec.edge(k + 1))
        );
    }
    s.into_bytes()
}

fn field_times(config: &ExperimentConfig) -> Vec<f64> {
    if config.grid.times == 1 {
        vec![config.time.t_screen]
    } else {
        linspace(config.time.t0, config.time.t_screen, config.grid.times)
    }
}

fn fields_csv(
    config: &ExperimentConfig,
    state: &WavefieldState,
    units: &UnitsConstants,
) -> Result<Vec<u8>, CliError> {
    let xs = config.grid.xs();
    let mut s = String::from("t,x,P_tot\n");
    for t in field_times(config) {
        let snap = state.snapshot(t, units)?;
        for &x in &xs {
            let p = snap.superpose(x, units).density;
            let _ = writeln!(s, "{},{},{}", fmt_f64(t), fmt_f64(x), fmt_f64(p));
        }
    }
    Ok(s.into_bytes())
}

fn diagnostics(
    config: &ExperimentConfig,
    state: &WavefieldState,
    units: &UnitsConstants,
) -> Result<(Vec<u8>, DiagnosticsSummary), CliError> {
    let t = config.time.t_screen;
    let xs = config.grid.xs();
    let hj = hj_residual(state, units, &|_, _| 0.0, &xs, t, RESIDUAL_STEP)?;
    let cont = continuity_residual(state, units, &xs, t, RESIDUAL_STEP, RESIDUAL_STEP)?;
    let mut s = String::from(
        "x,density,velocity,osmotic_velocity,quantum_potential,hj_residual,continuity_residual\n",
    );
    for (i, &x) in xs.iter().enumerate() {
        let sup = superpose(state, x, t, units)?;
        let jet = state.jet(x, t, units)?;
        let osmotic = sup
            .velocity
            .and_then(|_| osmotic_with_divergence(&jet, units))
            .map(|(u, _)| u);
        let qp = sup.velocity.and_then(|_| quantum_potential(&jet, units));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(sup.density),
            opt(sup.velocity),
            opt(osmotic),
            opt(qp),
            opt(hj.residuals[i]),
            opt(cont.residuals[i]),
        );
    }
    let summary = DiagnosticsSummary {
        time: t,
        hj_residual_max: hj.max_abs,
        hj_residual_rms: hj.rms,
        continuity_residual_max: cont.max_abs,
        continuity_residual_rms: cont.rms,
    };
    Ok((s.into_bytes(), summary))
}

/// Evolves the field in force at the screen on a periodic grid from the
/// start of its epoch and compares grid and channel velocities over the
/// high-probability region.
pub fn oracle_check(
    particle: usize,
    state: &WavefieldState,
    units: &UnitsConstants,
    t_start: f64,
    t_end: f64,
) -> Result<OracleSummary, CliError> {
    let t_start = t_start.max(state.epoch_at(t_end).start);
    let modes = state.modes_at(t_end);
    let (a0, b0) = support(state, t_start, units)?;
    let (a1, b1) = support(state, t_end, units)?;
    let (lo, hi) = (a0.min(a1), b0.max(b1));
    let margin = 0.1 * (hi - lo);
    let (x_min, x_max) = (lo - margin, hi + margin);
    let sigma = modes.iter().map(|m| m.sigma0).fold(f64::INFINITY, f64::min);
    let k0 = modes
        .iter()
        .map(|m| (units.mass * m.v0 / units.hbar).abs())
        .fold(0.0, f64::max);
    let dx = (sigma / 8.0).min(std::f64::consts::PI / (2.0 * (k0 + 8.0 / sigma)));
    let n = (((x_max - x_min) / dx).ceil() as usize).next_power_of_two().max(64);
    let snap = state.snapshot(t_start, units)?;
    let grid = GridWavefunction::from_fn(x_min, x_max, n, t_start, |x| snap.jet(x).psi)?;
    // free evolution is exact under the splitting, so one step suffices
    let ev = split_operator_evolve(&grid, |_| 0.0, units, t_end - t_start, 1)?;
    let v_grid = bohm_velocity_from_grid(&ev.psi, units);
    let region = probability_region(&ev.psi.density(), REPORT_MASS);
    let mut max_deviation: f64 = 0.0;
    for (j, (vg, inside)) in v_grid.iter().zip(&region).enumerate() {
        if let (Some(vg), true) = (vg, inside) {
            let vc = emergent_velocity_at(state, ev.psi.x(j), t_end, units)?;
            max_deviation = max_deviation.max((vc - vg).abs() / vc.abs().max(1.0));
        }
    }
    Ok(OracleSummary {
        particle,
        grid_points: n,
        x_min,
        x_max,
        t_start,
        max_deviation,
        boundary_warning: ev.boundary_warning,
        norm_drift: ev.norm_drift,
    })
}

/// Runs every particle's ensemble and renders all data artifacts in memory.
pub fn simulate(config: &ExperimentConfig, options: &RunOptions) -> Result<ScenarioOutput, CliError> {
    let started = Instant::now();
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(crate::config::ConfigError { violations }.into());
    }
    let mut states = vec![(config.state()?, config.units()?)];
    states.extend(config.companion_states()?);

    let mut ensembles = Vec::with_capacity(states.len());
    let mut particles = Vec::with_capacity(states.len());
    let mut artifacts = Vec::new();
    for (p, (state, units)) in states.iter().enumerate() {
        let spec = EnsembleSpec {
            state: state.clone(),
            units: *units,
            t0: config.time.t0,
            t_screen: config.time.t_screen,
            settings: config.integrator.settings(),
            count: config.ensemble.count,
            seed: config.ensemble.seed.wrapping_add(p as u64),
            histogram: config.screen.spec(),
            bundle: if config.outputs.trajectories {
                config.bundle.count
            } else {
                0
            },
            record_every: config.bundle.record_every,
        };
        let ens = run_ensemble(&spec)?;
        let screen = analyse_screen(&ens.histogram, state, units)?;
        particles.push(ParticleSummary {
            particle: p,
            mass: units.mass,
            count: config.ensemble.count,
            flagged: ens.flagged,
            substeps: ens.substeps,
            screen_time: config.time.t_screen,
            histogram_total: ens.histogram.total(),
            underflow: ens.histogram.underflow,
            overflow: ens.histogram.overflow,
            screen,
            kicks: ens.kicks.iter().map(KickSummary::from).collect(),
        });
        if config.outputs.trajectories {
            artifacts.push(Artifact {
                name: format!("trajectories{}.csv", suffix(p)),
                bytes: trajectories_csv(&ens),
            });
        }
        if config.outputs.histogram {
            artifacts.push(Artifact {
                name: format!("histogram{}.csv", suffix(p)),
                bytes: histogram_csv(&ens.histogram),
            });
        }
        ensembles.push(ens);
    }

    let (state, units) = &states[0];
    if config.outputs.fields || options.emit_fields {
        artifacts.push(Artifact {
            name: "fields.csv".into(),
            bytes: fields_csv(config, state, units)?,
        });
    }
    let diagnostics_summary = if config.outputs.diagnostics {
        let (bytes, summary) = diagnostics(config, state, units)?;
        artifacts.push(Artifact {
            name: "diagnostics.csv".into(),
            bytes,
        });
        Some(summary)
    } else {
        None
    };

    let mut oracle = Vec::new();
    if options.check_oracle {
        for (p, (state, units)) in states.iter().enumerate() {
            let check = oracle_check(p, state, units, config.time.t0, config.time.t_screen)?;
            if check.boundary_warning || !(check.max_deviation <= config.oracle.tolerance) {
                return Err(CliError::Guard(format!(
                    "particle {p}: channel/grid velocity deviation {} (tolerance {}), boundary warning {}",
                    check.max_deviation, config.oracle.tolerance, check.boundary_warning
                )));
            }
            oracle.push(check);
        }
    }

    let summary = Summary {
        particles,
        diagnostics: diagnostics_summary,
        oracle,
    };
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    json.push(b'\n');
    artifacts.push(Artifact {
        name: "summary.json".into(),
        bytes: json,
    });

    Ok(ScenarioOutput {
        config: config.clone(),
        states,
        ensembles,
        summary,
        artifacts,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Simulates, then writes every artifact and the manifest into `options.out_dir`.
pub fn run_scenario(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<(RunManifest, ScenarioOutput), CliError> {
    prepare_dir(&options.out_dir)?;
    let output = simulate(config, options)?;
    let manifest = write_bundle(&options.out_dir, &output, options)?;
    Ok((manifest, output))
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
