//! Lagged cross-correlation and delay detection.
//!
//! The cross-correlation at lag `h` is the sample Pearson correlation between
//! `x[t + h]` and `y[t]` over the days where both are present. Means and
//! deviations are taken over that overlap, so each lag is a proper
//! correlation in `[-1, 1]`.
//!
//! Orientation: a peak at negative `h` means `x` leads `y`; a peak at positive
//! `h` means `x` lags `y`. The analysis layer always passes the social series
//! as `x` and the call series as `y`.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::series::Observation;

pub const DEFAULT_MAX_LAG: usize = 7;
pub const DEFAULT_MIN_OVERLAP: usize = 8;

/// Correlations closer than this count as tied in [`detect_delay`].
const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrelateError {
    #[error("insufficient data: {n_overlap} jointly present days at lag {lag}, need {min_overlap}")]
    InsufficientData { lag: i64, n_overlap: usize, min_overlap: usize },
    #[error("degenerate series: zero variance over the overlap at lag {lag}")]
    Degenerate { lag: i64 },
    #[error("no admissible lag in [-{max_lag}, {max_lag}]")]
    NoAdmissibleLag { max_lag: usize },
    #[error("empty correlation table")]
    Empty,
}

/// The pairs `(x[t + lag], y[t])` where both values are present.
fn overlap_pairs<'a>(x: &'a [Observation], y: &'a [Observation], lag: i64) -> impl Iterator<Item = (f64, f64)> + 'a {
    y.iter().enumerate().filter_map(move |(t, yo)| {
        let xi = usize::try_from(t as i64 + lag).ok()?;
        let xo = x.get(xi)?;
        (xo.present && yo.present).then_some((xo.value, yo.value))
    })
}

/// Correlation of `x[t + lag]` with `y[t]` plus the number of pairs used.
pub fn cross_correlation_with_overlap(
    x: &[Observation],
    y: &[Observation],
    lag: i64,
    min_overlap: usize,
) -> Result<(f64, usize), CorrelateError> {
    let pairs: Vec<(f64, f64)> = overlap_pairs(x, y, lag).collect();
    let n = pairs.len();
    if n < min_overlap.max(2) {
        return Err(CorrelateError::InsufficientData { lag, n_overlap: n, min_overlap: min_overlap.max(2) });
    }
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        let (dx, dy) = (a - mean_x, b - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Relative to the data scale; exact-zero checks miss constant series
    // whose mean is not representable.
    let scale_x = pairs.iter().map(|p| p.0 * p.0).sum::<f64>().max(f64::MIN_POSITIVE);
    let scale_y = pairs.iter().map(|p| p.1 * p.1).sum::<f64>().max(f64::MIN_POSITIVE);
    if sxx <= 1e-24 * scale_x || syy <= 1e-24 * scale_y {
        return Err(CorrelateError::Degenerate { lag });
    }
    Ok(((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0), n))
}

/// Pearson correlation between `x[t + lag]` and `y[t]`.
pub fn cross_correlation(x: &[Observation], y: &[Observation], lag: i64, min_overlap: usize) -> Result<f64, CorrelateError> {
    cross_correlation_with_overlap(x, y, lag, min_overlap).map(|(c, _)| c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcfEntry {
    pub lag: i64,
    pub correlation: f64,
    pub n_overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmittedLag {
    pub lag: i64,
    pub reason: CorrelateError,
}

/// Correlation by lag over `[-max_lag, max_lag]`, ascending by lag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcfResult {
    pub max_lag: usize,
    pub min_overlap: usize,
    pub entries: Vec<CcfEntry>,
    /// Lags that failed the overlap or variance precondition.
    pub omitted: Vec<OmittedLag>,
}

impl CcfResult {
    pub fn get(&self, lag: i64) -> Option<f64> {
        self.entries.iter().find(|e| e.lag == lag).map(|e| e.correlation)
    }

    pub fn lags(&self) -> Vec<i64> {
        self.entries.iter().map(|e| e.lag).collect()
    }

    pub fn correlations(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.correlation).collect()
    }

    /// Writes `lag,correlation,n_overlap`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["lag", "correlation", "n_overlap"])?;
        for e in &self.entries {
            writer.write_record([e.lag.to_string(), e.correlation.to_string(), e.n_overlap.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

pub fn ccf(x: &[Observation], y: &[Observation], max_lag: usize, min_overlap: usize) -> Result<CcfResult, CorrelateError> {
    let h = max_lag as i64;
    let mut entries = Vec::new();
    let mut omitted = Vec::new();
    for lag in -h..=h {
        match cross_correlation_with_overlap(x, y, lag, min_overlap) {
            Ok((correlation, n_overlap)) => entries.push(CcfEntry { lag, correlation, n_overlap }),
            Err(reason) => omitted.push(OmittedLag { lag, reason }),
        }
    }
    if entries.is_empty() {
        return Err(CorrelateError::NoAdmissibleLag { max_lag });
    }
    Ok(CcfResult { max_lag, min_overlap, entries, omitted })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeadLag {
    XLeadsY,
    XLagsY,
    NoDelay,
}

impl fmt::Display for LeadLag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeadLag::XLeadsY => "x_leads_y",
            LeadLag::XLagsY => "x_lags_y",
            LeadLag::NoDelay => "no_delay",
        })
    }
}

/// The lag of strongest coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagResult {
    /// The lag `h` with the largest `|correlation|`. Its magnitude is the
    /// delay in days.
    pub delay: i64,
    pub peak_correlation: f64,
    pub sign: CorrelationSign,
    pub lead_lag: LeadLag,
}

impl LagResult {
    pub fn delay_days(&self) -> u64 {
        self.delay.unsigned_abs()
    }
}

/// Picks the lag maximizing `|correlation|`, so a strong negative peak
/// counts as much as a positive one. Ties prefer the smallest `|h|`, then
/// the negative lag.
pub fn detect_delay(ccf: &CcfResult) -> Result<LagResult, CorrelateError> {
    let best = ccf
        .entries
        .iter()
        .copied()
        .reduce(|best, e| {
            let (a, b) = (e.correlation.abs(), best.correlation.abs());
            let stronger = a > b + TIE_EPSILON;
            let tied_but_nearer = (a - b).abs() <= TIE_EPSILON && (e.lag.abs(), e.lag) < (best.lag.abs(), best.lag);
            if stronger || tied_but_nearer {
                e
            } else {
                best
            }
        })
        .ok_or(CorrelateError::Empty)?;
    let lead_lag = match best.lag {
        0 => LeadLag::NoDelay,
        h if h < 0 => LeadLag::XLeadsY,
        _ => LeadLag::XLagsY,
    };
    let sign = if best.correlation < 0.0 { CorrelationSign::Negative } else { CorrelationSign::Positive };
    Ok(LagResult { delay: best.lag, peak_correlation: best.correlation, sign, lead_lag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::observations;

    fn table(pairs: &[(i64, f64)]) -> CcfResult {
        CcfResult {
            max_lag: pairs.iter().map(|p| p.0.unsigned_abs() as usize).max().unwrap_or(0),
            min_overlap: 2,
            entries: pairs.iter().map(|&(lag, correlation)| CcfEntry { lag, correlation, n_overlap: 10 }).collect(),
            omitted: vec![],
        }
    }

    #[test]
    fn self_and_negated() {
        let x = observations(&[1.0, 3.0, 2.0, 5.0, 4.0, 7.0, 6.0, 9.0]);
        let neg: Vec<Observation> = x.iter().map(|o| Observation::present(-o.value)).collect();
        assert!((cross_correlation(&x, &x, 0, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!((cross_correlation(&x, &neg, 0, 2).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_ramp() {
        // y[t] = x[t - 2]; the first two y values are unknown.
        let x = observations(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = vec![
            Observation::missing(),
            Observation::missing(),
            Observation::present(1.0),
            Observation::present(2.0),
            Observation::present(3.0),
            Observation::present(4.0),
        ];
        let (c, n) = cross_correlation_with_overlap(&x, &y, -2, 2).unwrap();
        assert_eq!(n, 4);
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn precondition_errors() {
        let x = observations(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            cross_correlation(&x, &x, 0, 8),
            Err(CorrelateError::InsufficientData { n_overlap: 3, .. })
        ));
        let flat = observations(&[0.1; 10]);
        let ramp = observations(&(0..10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(cross_correlation(&flat, &ramp, 0, 2), Err(CorrelateError::Degenerate { lag: 0 }));
        assert_eq!(ccf(&flat, &ramp, 2, 2), Err(CorrelateError::NoAdmissibleLag { max_lag: 2 }));
    }

    #[test]
    fn ccf_omits_inadmissible_lags() {
        let x = observations(&[1.0, 4.0, 2.0, 8.0, 5.0, 7.0, 3.0, 6.0, 9.0, 0.0]);
        let r = ccf(&x, &x, 5, 6).unwrap();
        assert_eq!(r.lags(), (-4..=4).collect::<Vec<_>>());
        assert_eq!(r.omitted.iter().map(|o| o.lag).collect::<Vec<_>>(), [-5, 5]);
        assert!((r.get(0).unwrap() - 1.0).abs() < 1e-12);
        for h in 1..=4 {
            assert!((r.get(h).unwrap() - r.get(-h).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn delay_examples() {
        let r = detect_delay(&table(&[(-1, 0.2), (0, 0.86), (1, 0.5)])).unwrap();
        assert_eq!((r.delay, r.sign, r.lead_lag), (0, CorrelationSign::Positive, LeadLag::NoDelay));

        // Social (x) one day behind calls (y): peak at h = +1.
        let r = detect_delay(&table(&[(-1, 0.1), (0, -0.2), (1, -0.44), (2, 0.3)])).unwrap();
        assert_eq!((r.delay, r.delay_days()), (1, 1));
        assert_eq!((r.sign, r.lead_lag), (CorrelationSign::Negative, LeadLag::XLagsY));
        assert_eq!(r.peak_correlation, -0.44);

        let r = detect_delay(&table(&[(0, 0.3)])).unwrap();
        assert_eq!(r.delay, 0);

        assert_eq!(detect_delay(&table(&[])), Err(CorrelateError::Empty));
    }

    #[test]
    fn tie_break_prefers_small_then_negative_lag() {
        let r = detect_delay(&table(&[(-2, 0.5), (-1, 0.1), (1, -0.5), (2, 0.5)])).unwrap();
        assert_eq!(r.delay, 1);
        let r = detect_delay(&table(&[(-2, 0.5), (0, 0.1), (2, -0.5)])).unwrap();
        assert_eq!(r.delay, -2);
        assert_eq!(r.lead_lag, LeadLag::XLeadsY);
    }

    #[test]
    fn csv_table() {
        let mut buf = Vec::new();
        table(&[(-1, 0.5), (0, -0.25)]).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "lag,correlation,n_overlap\n-1,0.5,10\n0,-0.25,10\n");
    }
}
