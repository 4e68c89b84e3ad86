mod common;

use bouncer::dynamics::{
    integrate_trajectory, integrate_with, ks_statistic, run_ensemble, sample_initial_positions,
    EnsembleSpec, HistogramSpec, IntegratorSettings, Recording,
};
use bouncer::wavefield::{GaussianSlitMode, WaveSource, WavefieldState};
use bouncer::UnitsConstants;
use common::{double_slit, linspace};

fn streamline(mode: &GaussianSlitMode, x0: f64, t: f64, units: &UnitsConstants) -> f64 {
    let c = mode.center + mode.v0 * t;
    c + (x0 - mode.center) * mode.width(t, units) / mode.sigma0
}

#[test]
fn single_gaussian_streamlines_scale_with_width() {
    let units = UnitsConstants::natural();
    let mode = GaussianSlitMode::new(1.0, 1.0, 0.3, 0.0).unwrap();
    let state = WavefieldState::from_modes(0.0, [mode]);
    let settings = IntegratorSettings::with_dt(1e-3);
    for x0 in [-2.5, -0.4, 1.0, 1.7, 3.9] {
        let tr = integrate_trajectory(x0, 0.0, 2.0, &state, &units, &settings).unwrap();
        for &(t, x) in tr.samples.iter().step_by(100) {
            let exact = streamline(&mode, x0, t, &units);
            assert!((x - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "t={t}: {x} vs {exact}");
        }
    }
}

#[test]
fn rk4_error_is_fourth_order() {
    let units = UnitsConstants::natural();
    let mode = GaussianSlitMode::new(0.0, 0.5, 0.0, 0.0).unwrap();
    let state = WavefieldState::from_modes(0.0, [mode]);
    let err = |dt: f64| {
        let settings = IntegratorSettings {
            substep_fraction: 1e9,
            ..IntegratorSettings::with_dt(dt)
        };
        let tr = integrate_with(1.0, 0.0, 2.0, &state, &units, &settings, Recording::Endpoints)
            .unwrap();
        (tr.final_position().unwrap() - streamline(&mode, 1.0, 2.0, &units)).abs()
    };
    let (a, b) = (err(0.1), err(0.05));
    let order = (a / b).log2();
    assert!(order > 3.8 && order < 4.3, "{a} {b} {order}");
}

#[test]
fn trajectories_never_cross() {
    let units = UnitsConstants::natural();
    let state = double_slit(3.0, 0.5, 0.0);
    let mut x0 = sample_initial_positions(&state, 0.0, 1000, 5, &units).unwrap();
    x0.sort_by(f64::total_cmp);
    x0.dedup();
    let settings = IntegratorSettings::with_dt(0.01);
    let paths: Vec<_> = x0
        .iter()
        .map(|&x| integrate_with(x, 0.0, 3.0, &state, &units, &settings, Recording::Every(10)).unwrap())
        .collect();
    for w in paths.windows(2) {
        for (a, b) in w[0].samples.iter().zip(&w[1].samples) {
            assert_eq!(a.0, b.0);
            assert!(a.1 < b.1, "crossing at t={}: {} >= {}", a.0, a.1, b.1);
        }
    }
}

#[test]
fn symmetric_slits_give_mirror_trajectories() {
    let units = UnitsConstants::natural();
    let state = double_slit(2.0, 0.6, 0.5);
    let settings = IntegratorSettings::with_dt(0.01);
    for x0 in [0.3, 1.1, 2.0, 2.6] {
        let a = integrate_trajectory(x0, 0.0, 3.0, &state, &units, &settings).unwrap();
        let b = integrate_trajectory(-x0, 0.0, 3.0, &state, &units, &settings).unwrap();
        for (p, q) in a.samples.iter().zip(&b.samples) {
            assert!((p.1 + q.1).abs() < 1e-8, "{} {}", p.1, q.1);
        }
    }
}

#[test]
fn translation_equivariance() {
    let units = UnitsConstants::natural();
    let state = double_slit(2.0, 0.6, 0.2);
    let d = 3.7;
    let moved = state.shifted(d).unwrap();
    let settings = IntegratorSettings::with_dt(0.01);
    for x0 in [-2.2, 0.4, 1.9] {
        let a = integrate_trajectory(x0, 0.0, 2.0, &state, &units, &settings).unwrap();
        let b = integrate_trajectory(x0 + d, 0.0, 2.0, &moved, &units, &settings).unwrap();
        let (xa, xb) = (a.final_position().unwrap(), b.final_position().unwrap());
        assert!((xa + d - xb).abs() < 1e-9, "{xa} {xb}");
    }
}

#[test]
fn ensemble_is_identical_for_any_thread_count() {
    let spec = EnsembleSpec {
        state: double_slit(2.0, 0.5, 0.0),
        units: UnitsConstants::natural(),
        t0: 0.0,
        t_screen: 1.5,
        settings: IntegratorSettings::with_dt(0.02),
        count: 400,
        seed: 99,
        histogram: HistogramSpec {
            x_min: -10.0,
            x_max: 10.0,
            bins: 50,
        },
        bundle: 4,
        record_every: 5,
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&spec).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.final_positions, b.final_positions);
    assert_eq!(a.histogram, b.histogram);
    assert_eq!(a.bundle, b.bundle);
}

#[test]
fn sampled_positions_follow_the_intensity() {
    let units = UnitsConstants::natural();
    let state = double_slit(2.0, 0.7, 0.0);
    let xs = linspace(-12.0, 12.0, 24001);
    let h = xs[1] - xs[0];
    let dens: Vec<f64> = xs
        .iter()
        .map(|&x| state.jet(x, 0.0, &units).unwrap().psi.norm_sqr())
        .collect();
    let mut cum = vec![0.0];
    for w in dens.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + 0.5 * h * (w[0] + w[1]));
    }
    let total = *cum.last().unwrap();
    let cdf = |x: f64| {
        let i = ((x - xs[0]) / h).clamp(0.0, (xs.len() - 1) as f64) as usize;
        cum[i] / total
    };
    let n = 20_000;
    let samples = sample_initial_positions(&state, 0.0, n, 17, &units).unwrap();
    let d = ks_statistic(&samples, cdf);
    assert!(d < 1.63 / (n as f64).sqrt(), "{d}");
}
