use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub bins: usize,
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > self.x_min) || self.bins == 0 {
            return Err(Error::InvalidArgument(format!(
                "histogram needs x_max > x_min and bins > 0 (got [{}, {}], {})",
                self.x_min, self.x_max, self.bins
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.x_max - self.x_min) / self.bins as f64
    }

    pub fn edge(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.width()
    }

    pub fn center(&self, k: usize) -> f64 {
        self.x_min + (k as f64 + 0.5) * self.width()
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if x < self.x_min || x >= self.x_max {
            return None;
        }
        Some((((x - self.x_min) / self.width()) as usize).min(self.bins - 1))
    }
}

/// Final positions binned at the screen time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenHistogram {
    pub spec: HistogramSpec,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub screen_time: f64,
}

impl ScreenHistogram {
    pub fn from_positions(
        spec: HistogramSpec,
        screen_time: f64,
        positions: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        spec.validate()?;
        let mut h = Self {
            spec,
            counts: vec![0; spec.bins],
            underflow: 0,
            overflow: 0,
            screen_time,
        };
        for x in positions {
            match spec.bin_of(x) {
                Some(k) => h.counts[k] += 1,
                None if x < spec.x_min => h.underflow += 1,
                None => h.overflow += 1,
            }
        }
        Ok(h)
    }

    /// All binned positions, under- and overflow included.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Largest gap between the binned empirical CDF and `cdf`, taken at
    /// every bin edge.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.total() as f64;
        if n == 0.0 {
            return 1.0;
        }
        let mut acc = self.underflow;
        let mut d = (acc as f64 / n - cdf(self.spec.x_min)).abs();
        for (k, c) in self.counts.iter().enumerate() {
            acc += c;
            d = d.max((acc as f64 / n - cdf(self.spec.edge(k + 1))).abs());
        }
        d
    }

    /// Expected counts per bin for `total` draws from `cdf`.
    pub fn expected_counts(spec: &HistogramSpec, total: u64, cdf: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..spec.bins)
            .map(|k| total as f64 * (cdf(spec.edge(k + 1)) - cdf(spec.edge(k))))
            .collect()
    }
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Interior local minima that survive as separate basins.
///
/// The depth of a minimum is measured to the lower of the two highest
/// values met while walking outward until a lower point (or the edge) is
/// reached. Equal minima are split by position: walking left stops at an
/// equal value, walking right does not, so a flat-bottomed dip counts once.
/// A minimum is kept when its depth exceeds `k_sigma` standard deviations of
/// the difference of two Poisson counts, `sqrt(peak + floor)`.
pub fn prominent_minima(values: &[f64], k_sigma: f64) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if !(values[i] < values[i - 1]) {
            i += 1;
            continue;
        }
        // extend across a flat bottom
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        if j + 1 >= n || values[j + 1] < values[i] {
            i = j + 1;
            continue;
        }
        let floor = values[i];
        let left = values[..i]
            .iter()
            .rev()
            .take_while(|&&v| v > floor)
            .fold(floor, |m, &v| m.max(v));
        let right = values[j + 1..]
            .iter()
            .take_while(|&&v| v >= floor)
            .fold(floor, |m, &v| m.max(v));
        let peak = left.min(right);
        if peak - floor >= k_sigma * (peak + floor).max(1.0).sqrt() {
            out.push((i + j) / 2);
        }
        i = j + 1;
    }
    out
}
