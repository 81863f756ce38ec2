//! Classical additive decomposition by moving averages.
//!
//! `observed = trend + seasonal + irregular`, where
//!
//! 1. the trend is a centred moving average over one period (for an even
//!    period, a 2×period average with half-weight endpoints);
//! 2. the detrended series is `observed - trend`;
//! 3. the seasonal figure for each position in the cycle is the mean of the
//!    detrended values at that position, then the figures are centred to
//!    sum to zero;
//! 4. the irregular part is what remains.
//!
//! Cycle positions count from the first day of the series. The trend, and
//! so the irregular part, is undefined on the first and last `period / 2`
//! days.

use std::io::Write;

use serde::Serialize;

use crate::series::{Observation, TopicSeries};

/// Weekly cycle of daily data.
pub const DEFAULT_PERIOD: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecomposeError {
    #[error("period must be at least 2, got {0}")]
    PeriodTooSmall(usize),
    #[error("series of {len} days is too short for period {period} (need at least {})", 2 * period)]
    TooShort { len: usize, period: usize },
    #[error("series has undefined days (first at index {0}); fill or trim it first")]
    MissingValues(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposedSeries {
    pub observed: TopicSeries,
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    pub irregular: Vec<Option<f64>>,
    pub period: usize,
    /// Centred seasonal figure for each cycle position.
    pub figures: Vec<f64>,
}

/// Centred moving average over `period` points. `None` where the window
/// runs off either end.
pub fn centered_moving_average(values: &[f64], period: usize) -> Vec<Option<f64>> {
    let n = values.len();
    let half = period / 2;
    let mut out = vec![None; n];
    if n < 2 * half + 1 {
        return out;
    }
    for (t, slot) in out.iter_mut().enumerate().take(n - half).skip(half) {
        let window = &values[t - half..=t + half];
        let sum = if period % 2 == 1 {
            window.iter().sum::<f64>()
        } else {
            let inner: f64 = window[1..window.len() - 1].iter().sum();
            inner + 0.5 * (window[0] + window[window.len() - 1])
        };
        *slot = Some(sum / period as f64);
    }
    out
}

pub fn decompose_additive(series: &TopicSeries, period: usize) -> Result<DecomposedSeries, DecomposeError> {
    if period < 2 {
        return Err(DecomposeError::PeriodTooSmall(period));
    }
    let n = series.len();
    if n < 2 * period {
        return Err(DecomposeError::TooShort { len: n, period });
    }
    if let Some(idx) = series.values.iter().position(|o| !o.present) {
        return Err(DecomposeError::MissingValues(idx));
    }
    let observed: Vec<f64> = series.values.iter().map(|o| o.value).collect();
    let trend = centered_moving_average(&observed, period);

    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (t, (x, tr)) in observed.iter().zip(&trend).enumerate() {
        if let Some(tr) = tr {
            sums[t % period] += x - tr;
            counts[t % period] += 1;
        }
    }
    let raw: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / *c as f64).collect();
    let mean = raw.iter().sum::<f64>() / period as f64;
    let figures: Vec<f64> = raw.iter().map(|f| f - mean).collect();

    let seasonal: Vec<f64> = (0..n).map(|t| figures[t % period]).collect();
    let irregular = observed
        .iter()
        .zip(&trend)
        .zip(&seasonal)
        .map(|((x, tr), s)| tr.map(|tr| x - tr - s))
        .collect();

    Ok(DecomposedSeries { observed: series.clone(), trend, seasonal, irregular, period, figures })
}

/// Observed minus seasonal, with the observed presence mask.
pub fn seasonally_adjust(decomposed: &DecomposedSeries) -> TopicSeries {
    let values = decomposed
        .observed
        .values
        .iter()
        .zip(&decomposed.seasonal)
        .map(|(o, s)| Observation { value: if o.present { o.value - s } else { o.value }, present: o.present })
        .collect();
    decomposed.observed.with_values(values)
}

impl DecomposedSeries {
    /// The trend as a series; undefined edges are not present.
    pub fn trend_series(&self) -> TopicSeries {
        self.observed.with_values(self.trend.iter().copied().map(Observation::from).collect())
    }

    pub fn seasonally_adjusted(&self) -> TopicSeries {
        seasonally_adjust(self)
    }

    /// Writes `date,trend,seasonal,irregular`; undefined fields are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["date", "trend", "seasonal", "irregular"])?;
        for (i, day) in self.observed.dates().enumerate() {
            writer.write_record([
                day.format("%Y-%m-%d").to_string(),
                opt(self.trend[i]),
                self.seasonal[i].to_string(),
                opt(self.irregular[i]),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}
