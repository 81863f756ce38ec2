//! Weekly aggregation, PAA, SAX words and symbolic trend comparison.

mod normal;

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

pub use normal::{breakpoints, inverse_normal_cdf};

use crate::series::{align, SeriesError, TopicSeries};

pub const DEFAULT_ALPHABET_SIZE: usize = 5;
pub const DEFAULT_THRESHOLD: f64 = 0.3;
/// Standard deviations below this count as a flat series.
pub const FLAT_STD: f64 = 1e-9;
/// Letters limit the alphabet.
pub const MAX_ALPHABET_SIZE: usize = 26;

#[derive(Debug, thiserror::Error)]
pub enum SymbolicError {
    #[error("word length {word_length} exceeds series length {len}")]
    WordTooLong { word_length: usize, len: usize },
    #[error("word length must be at least 1")]
    ZeroWordLength,
    #[error("alphabet size must be in 3..={MAX_ALPHABET_SIZE}, got {0}")]
    AlphabetSize(usize),
    #[error("series has no present values")]
    NoData,
    #[error("words differ in shape: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// The mean of one ISO week's present days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeeklyValue {
    pub iso_year: i32,
    pub iso_week: u32,
    /// Monday of the week.
    pub week_start: NaiveDate,
    pub value: f64,
    pub present_days: usize,
}

/// One value per ISO week (Monday to Sunday): the mean of the week's
/// present days. Weeks without a present day are left out.
pub fn weekly_aggregate(series: &TopicSeries) -> Result<Vec<WeeklyValue>, SymbolicError> {
    let mut weeks: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for (day, obs) in series.dates().zip(&series.values) {
        if obs.present {
            let monday = day.week(Weekday::Mon).first_day();
            let entry = weeks.entry(monday).or_default();
            entry.0 += obs.value;
            entry.1 += 1;
        }
    }
    if weeks.is_empty() {
        return Err(SymbolicError::NoData);
    }
    Ok(weeks
        .into_iter()
        .map(|(monday, (sum, n))| {
            let iso = monday.iso_week();
            WeeklyValue { iso_year: iso.year(), iso_week: iso.week(), week_start: monday, value: sum / n as f64, present_days: n }
        })
        .collect())
}

/// Mean and population standard deviation.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Rescales to mean 0 and standard deviation 1. A flat input becomes all
/// zeros.
pub fn znormalize(x: &[f64]) -> Vec<f64> {
    let (mean, std) = mean_std(x);
    if std < FLAT_STD {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - mean) / std).collect()
}

/// Piecewise aggregate approximation: `word_length` segment means.
///
/// Each segment covers exactly `n / word_length` points; when that is not
/// an integer, a point on a segment boundary is split between the two
/// segments in proportion to its overlap.
pub fn paa(x: &[f64], word_length: usize) -> Result<Vec<f64>, SymbolicError> {
    let n = x.len();
    if word_length == 0 {
        return Err(SymbolicError::ZeroWordLength);
    }
    if word_length > n {
        return Err(SymbolicError::WordTooLong { word_length, len: n });
    }
    if n.is_multiple_of(word_length) {
        let size = n / word_length;
        return Ok(x.chunks(size).map(|c| c.iter().sum::<f64>() / size as f64).collect());
    }
    // Scaled by word_length, point j spans [j*w, (j+1)*w) and segment i
    // spans [i*n, (i+1)*n), so overlaps are integers.
    let w = word_length;
    let mut out = vec![0.0; w];
    for (j, v) in x.iter().enumerate() {
        let (lo, hi) = (j * w, (j + 1) * w);
        for (i, seg) in out.iter_mut().enumerate().take((hi - 1) / n + 1).skip(lo / n) {
            let overlap = hi.min((i + 1) * n) - lo.max(i * n);
            *seg += v * overlap as f64;
        }
    }
    Ok(out.into_iter().map(|s| s / n as f64).collect())
}

/// A SAX word together with what is needed to interpret it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaxWord {
    /// Region indices, `0..alphabet_size`.
    pub symbols: Vec<usize>,
    pub alphabet_size: usize,
    pub word_length: usize,
    pub breakpoints: Vec<f64>,
    /// Length of the series the word was built from.
    pub source_len: usize,
    pub source_mean: f64,
    pub source_std: f64,
}

impl SaxWord {
    /// The word as letters, `a` for the lowest region.
    pub fn letters(&self) -> String {
        self.symbols.iter().map(|&s| (b'a' + s as u8) as char).collect()
    }

    pub fn is_flat(&self) -> bool {
        self.source_std < FLAT_STD
    }
}

impl fmt::Display for SaxWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.letters())
    }
}

fn check_alphabet(alphabet_size: usize) -> Result<(), SymbolicError> {
    if (3..=MAX_ALPHABET_SIZE).contains(&alphabet_size) {
        Ok(())
    } else {
        Err(SymbolicError::AlphabetSize(alphabet_size))
    }
}

/// The region a value falls in: the number of breakpoints at or below it.
pub fn region(value: f64, breakpoints: &[f64]) -> usize {
    breakpoints.partition_point(|b| *b <= value)
}

/// Z-normalizes, reduces with PAA and maps each coefficient to its
/// equiprobable normal region. A flat series gives the middle symbol
/// everywhere.
pub fn sax(x: &[f64], word_length: usize, alphabet_size: usize) -> Result<SaxWord, SymbolicError> {
    check_alphabet(alphabet_size)?;
    if word_length == 0 {
        return Err(SymbolicError::ZeroWordLength);
    }
    if x.is_empty() || word_length > x.len() {
        return Err(SymbolicError::WordTooLong { word_length, len: x.len() });
    }
    let cuts = breakpoints(alphabet_size);
    let (mean, std) = mean_std(x);
    let symbols = if std < FLAT_STD {
        vec![alphabet_size / 2; word_length]
    } else {
        let z: Vec<f64> = x.iter().map(|v| (v - mean) / std).collect();
        paa(&z, word_length)?.into_iter().map(|c| region(c, &cuts)).collect()
    };
    Ok(SaxWord {
        symbols,
        alphabet_size,
        word_length,
        breakpoints: cuts,
        source_len: x.len(),
        source_mean: mean,
        source_std: std,
    })
}

/// Distance between two regions: zero for equal or adjacent symbols,
/// otherwise the gap between the regions' facing breakpoints.
pub fn symbol_distance(r: usize, c: usize, breakpoints: &[f64]) -> f64 {
    if r.abs_diff(c) <= 1 {
        0.0
    } else {
        breakpoints[r.max(c) - 1] - breakpoints[r.min(c)]
    }
}

/// Lower bound on the Euclidean distance between the z-normalized series
/// behind two words.
pub fn mindist(a: &SaxWord, b: &SaxWord, n: usize) -> Result<f64, SymbolicError> {
    if a.word_length != b.word_length || a.alphabet_size != b.alphabet_size {
        return Err(SymbolicError::ShapeMismatch(format!(
            "({}, {}) vs ({}, {})",
            a.word_length, a.alphabet_size, b.word_length, b.alphabet_size
        )));
    }
    if a.source_len != n || b.source_len != n {
        return Err(SymbolicError::ShapeMismatch(format!(
            "source lengths {} and {} vs n = {n}",
            a.source_len, b.source_len
        )));
    }
    let sum: f64 = a
        .symbols
        .iter()
        .zip(&b.symbols)
        .map(|(&r, &c)| symbol_distance(r, c, &a.breakpoints).powi(2))
        .sum();
    Ok((n as f64 / a.word_length as f64).sqrt() * sum.sqrt())
}

/// Pearson correlation, or `None` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let (x, y) = (&x[..n], &y[..n]);
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendLabel {
    PositivelyCorrelated,
    NegativelyCorrelated,
    Uncorrelated,
}

impl fmt::Display for TrendLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrendLabel::PositivelyCorrelated => "positively correlated",
            TrendLabel::NegativelyCorrelated => "negatively correlated",
            TrendLabel::Uncorrelated => "uncorrelated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendComparison {
    /// Pearson correlation of the two symbol index sequences; `None` when
    /// either word is constant.
    pub pearson_on_indices: Option<f64>,
    pub label: TrendLabel,
    pub threshold: f64,
    pub note: Option<String>,
}

impl TrendComparison {
    pub fn from_pearson(pearson: Option<f64>, threshold: f64, note: Option<String>) -> TrendComparison {
        let label = match pearson {
            Some(r) if r >= threshold => TrendLabel::PositivelyCorrelated,
            Some(r) if r <= -threshold => TrendLabel::NegativelyCorrelated,
            _ => TrendLabel::Uncorrelated,
        };
        TrendComparison { pearson_on_indices: pearson, label, threshold, note }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaxOptions {
    /// Defaults to the number of weeks compared.
    pub word_length: Option<usize>,
    pub alphabet_size: usize,
    pub threshold: f64,
}

impl Default for SaxOptions {
    fn default() -> Self {
        Self { word_length: None, alphabet_size: DEFAULT_ALPHABET_SIZE, threshold: DEFAULT_THRESHOLD }
    }
}

/// Both words plus their comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolicComparison {
    pub weeks: Vec<NaiveDate>,
    pub a_weekly: Vec<f64>,
    pub b_weekly: Vec<f64>,
    pub a: SaxWord,
    pub b: SaxWord,
    pub comparison: TrendComparison,
}

/// Aligns the two series, aggregates each by ISO week, encodes both with
/// the same SAX parameters and correlates the symbol indices.
pub fn compare_trends(a: &TopicSeries, b: &TopicSeries, options: SaxOptions) -> Result<SymbolicComparison, SymbolicError> {
    let (a, b) = align(a, b)?;
    let weekly_a = weekly_aggregate(&a)?;
    let weekly_b = weekly_aggregate(&b)?;
    let a_vals: Vec<f64> = weekly_a.iter().map(|w| w.value).collect();
    let b_vals: Vec<f64> = weekly_b.iter().map(|w| w.value).collect();
    let word_length = options.word_length.unwrap_or(a_vals.len());
    let word_a = sax(&a_vals, word_length, options.alphabet_size)?;
    let word_b = sax(&b_vals, word_length, options.alphabet_size)?;

    let to_f64 = |w: &SaxWord| w.symbols.iter().map(|&s| s as f64).collect::<Vec<_>>();
    let comparison = if word_a.is_flat() || word_b.is_flat() {
        TrendComparison::from_pearson(None, options.threshold, Some("degenerate: a weekly series is flat".into()))
    } else {
        match pearson(&to_f64(&word_a), &to_f64(&word_b)) {
            Some(r) => TrendComparison::from_pearson(Some(r), options.threshold, None),
            None => TrendComparison::from_pearson(
                None,
                options.threshold,
                Some("degenerate: a word uses a single symbol".into()),
            ),
        }
    };
    Ok(SymbolicComparison {
        weeks: weekly_a.iter().map(|w| w.week_start).collect(),
        a_weekly: a_vals,
        b_weekly: b_vals,
        a: word_a,
        b: word_b,
        comparison,
    })
}
