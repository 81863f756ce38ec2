//! Request-level analyses over a [`Dataset`], shared by the CLI and the
//! HTTP service so both return the same numbers for the same parameters.
//!
//! Every analysis pairs the social series (`x`) with the call series (`y`)
//! for one category and strategy. A negative lag therefore means social
//! activity leads calls.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::correlate::{ccf, detect_delay, CcfResult, CorrelateError, LagResult, LeadLag, DEFAULT_MAX_LAG, DEFAULT_MIN_OVERLAP};
use crate::dataset::Dataset;
use crate::decompose::{decompose_additive, DecomposeError, DecomposedSeries, DEFAULT_PERIOD};
use crate::series::{align, lowercase_enum_text, DateRange, FillPolicy, SeriesError, Source, Strategy, TopicSeries};
use crate::symbolic::{compare_trends, SaxOptions, SymbolicError, TrendComparison, DEFAULT_ALPHABET_SIZE, DEFAULT_THRESHOLD, MAX_ALPHABET_SIZE};

pub const ORIENTATION: &str = "x = social, y = call; negative lag: social leads call";

/// Upper bound on `max_lag`, to keep requests cheap.
pub const MAX_LAG_LIMIT: usize = 366;

/// What is done to each series before it is analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocessing {
    Raw,
    /// Observed minus the seasonal component.
    Adjusted,
    /// The moving-average trend.
    Trend,
}

lowercase_enum_text!(Preprocessing, Raw => "raw", Adjusted => "adjusted", Trend => "trend");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("insufficient data: {0}")]
    Unprocessable(String),
}

impl AnalysisError {
    /// Machine-readable kind.
    pub fn kind(&self) -> &'static str {
        match self {
            AnalysisError::UnknownCategory(_) => "unknown_category",
            AnalysisError::BadRequest(_) => "bad_request",
            AnalysisError::Unprocessable(_) => "insufficient_data",
        }
    }
}

impl From<SeriesError> for AnalysisError {
    fn from(e: SeriesError) -> Self {
        match e {
            SeriesError::UnknownCategory(c) => AnalysisError::UnknownCategory(c.to_string()),
            SeriesError::EmptyRange { .. } => AnalysisError::BadRequest(e.to_string()),
            other => AnalysisError::Unprocessable(other.to_string()),
        }
    }
}

impl From<DecomposeError> for AnalysisError {
    fn from(e: DecomposeError) -> Self {
        match e {
            DecomposeError::PeriodTooSmall(_) => AnalysisError::BadRequest(e.to_string()),
            _ => AnalysisError::Unprocessable(e.to_string()),
        }
    }
}

impl From<CorrelateError> for AnalysisError {
    fn from(e: CorrelateError) -> Self {
        AnalysisError::Unprocessable(e.to_string())
    }
}

impl From<SymbolicError> for AnalysisError {
    fn from(e: SymbolicError) -> Self {
        match e {
            SymbolicError::AlphabetSize(_) | SymbolicError::ZeroWordLength => AnalysisError::BadRequest(e.to_string()),
            SymbolicError::Series(s) => s.into(),
            other => AnalysisError::Unprocessable(other.to_string()),
        }
    }
}

/// Parameter defaults, usually from the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defaults {
    pub strategy: Strategy,
    pub preprocessing: Preprocessing,
    pub max_lag: usize,
    pub min_overlap: usize,
    pub period: usize,
    pub word_length: Option<usize>,
    pub alphabet_size: usize,
    pub threshold: f64,
    pub fill: Option<FillPolicy>,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            strategy: Strategy::Frequency,
            preprocessing: Preprocessing::Adjusted,
            max_lag: DEFAULT_MAX_LAG,
            min_overlap: DEFAULT_MIN_OVERLAP,
            period: DEFAULT_PERIOD,
            word_length: None,
            alphabet_size: DEFAULT_ALPHABET_SIZE,
            threshold: DEFAULT_THRESHOLD,
            fill: None,
        }
    }
}

/// Everything an analysis needs. Without `from`/`to` the analysis covers
/// the days both sources have data for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRequest {
    pub category: Category,
    pub strategy: Strategy,
    pub preprocessing: Preprocessing,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub max_lag: usize,
    pub min_overlap: usize,
    pub period: usize,
    pub word_length: Option<usize>,
    pub alphabet_size: usize,
    pub threshold: f64,
    pub fill: Option<FillPolicy>,
}

fn parse_param<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, AnalysisError>
where
    T::Err: fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| AnalysisError::BadRequest(format!("`{key}`: {e}")))
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate, AnalysisError> {
    NaiveDate::parse_from_str(value.trim(), "%Y-%m-%d")
        .map_err(|_| AnalysisError::BadRequest(format!("`{key}` must be an ISO date (YYYY-MM-DD), got `{value}`")))
}

impl AnalysisRequest {
    pub fn new(category: Category, defaults: &Defaults) -> AnalysisRequest {
        AnalysisRequest {
            category,
            strategy: defaults.strategy,
            preprocessing: defaults.preprocessing,
            from: None,
            to: None,
            max_lag: defaults.max_lag,
            min_overlap: defaults.min_overlap,
            period: defaults.period,
            word_length: defaults.word_length,
            alphabet_size: defaults.alphabet_size,
            threshold: defaults.threshold,
            fill: defaults.fill,
        }
    }

    /// Builds a request from `key=value` pairs such as a query string.
    /// Unknown keys are rejected.
    pub fn from_pairs<'a, I>(pairs: I, defaults: &Defaults) -> Result<AnalysisRequest, AnalysisError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut category = None;
        let mut req = AnalysisRequest::new(Category::Other, defaults);
        for (key, value) in pairs {
            match key {
                "category" => category = Some(parse_param::<Category>(key, value)?),
                "strategy" => req.strategy = parse_param(key, value)?,
                "preprocessing" => req.preprocessing = parse_param(key, value)?,
                "from" => req.from = Some(parse_date(key, value)?),
                "to" => req.to = Some(parse_date(key, value)?),
                "max_lag" => req.max_lag = parse_param(key, value)?,
                "min_overlap" => req.min_overlap = parse_param(key, value)?,
                "period" => req.period = parse_param(key, value)?,
                "word_length" => req.word_length = Some(parse_param(key, value)?),
                "alphabet_size" => req.alphabet_size = parse_param(key, value)?,
                "threshold" => req.threshold = parse_param(key, value)?,
                "fill" => req.fill = Some(parse_param(key, value)?),
                other => return Err(AnalysisError::BadRequest(format!("unknown parameter `{other}`"))),
            }
        }
        req.category = category.ok_or_else(|| AnalysisError::BadRequest("missing `category`".into()))?;
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::BadRequest(m));
        if let (Some(from), Some(to)) = (self.from, self.to) {
            if to < from {
                return bad(format!("`to` ({to}) is before `from` ({from})"));
            }
        }
        if self.max_lag > MAX_LAG_LIMIT {
            return bad(format!("`max_lag` must be at most {MAX_LAG_LIMIT}"));
        }
        if self.min_overlap < 2 {
            return bad("`min_overlap` must be at least 2".into());
        }
        if self.period < 2 {
            return bad("`period` must be at least 2".into());
        }
        if self.word_length == Some(0) {
            return bad("`word_length` must be at least 1".into());
        }
        if !(3..=MAX_ALPHABET_SIZE).contains(&self.alphabet_size) {
            return bad(format!("`alphabet_size` must be in 3..={MAX_ALPHABET_SIZE}"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("`threshold` must be in [0, 1]".into());
        }
        Ok(())
    }

    fn sax_options(&self) -> SaxOptions {
        SaxOptions { word_length: self.word_length, alphabet_size: self.alphabet_size, threshold: self.threshold }
    }
}

/// A series with `null` for undefined days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesView {
    pub source: Source,
    pub category: Category,
    pub strategy: Strategy,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub values: Vec<Option<f64>>,
}

impl From<&TopicSeries> for SeriesView {
    fn from(s: &TopicSeries) -> Self {
        SeriesView {
            source: s.source,
            category: s.category.clone(),
            strategy: s.strategy,
            start: s.start,
            end: s.end(),
            values: s.values.iter().map(|o| o.get()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub request: AnalysisRequest,
    pub range: DateRange,
    pub social: SeriesView,
    pub call: SeriesView,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionView {
    pub source: Source,
    pub start: NaiveDate,
    pub period: usize,
    pub observed: Vec<Option<f64>>,
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    pub irregular: Vec<Option<f64>>,
    pub figures: Vec<f64>,
}

impl From<&DecomposedSeries> for DecompositionView {
    fn from(d: &DecomposedSeries) -> Self {
        DecompositionView {
            source: d.observed.source,
            start: d.observed.start,
            period: d.period,
            observed: d.observed.values.iter().map(|o| o.get()).collect(),
            trend: d.trend.clone(),
            seasonal: d.seasonal.clone(),
            irregular: d.irregular.clone(),
            figures: d.figures.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub request: AnalysisRequest,
    pub range: DateRange,
    pub social: DecompositionView,
    pub call: DecompositionView,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub request: AnalysisRequest,
    pub range: DateRange,
    pub orientation: &'static str,
    pub ccf: CcfResult,
    pub delay: LagResult,
    pub delay_days: u64,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordView {
    pub source: Source,
    pub letters: String,
    pub symbols: Vec<usize>,
    pub word_length: usize,
    pub alphabet_size: usize,
    pub breakpoints: Vec<f64>,
    pub weekly: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaxReport {
    pub request: AnalysisRequest,
    pub range: DateRange,
    pub weeks: Vec<NaiveDate>,
    pub social: WordView,
    pub call: WordView,
    pub comparison: TrendComparison,
}

fn describe(lag: &LagResult) -> String {
    let days = lag.delay_days();
    let plural = if days == 1 { "" } else { "s" };
    let sign = match lag.sign {
        crate::correlate::CorrelationSign::Positive => "positive",
        crate::correlate::CorrelationSign::Negative => "negative",
    };
    match lag.lead_lag {
        LeadLag::NoDelay => format!("no delay, {sign} correlation {:.3}", lag.peak_correlation),
        LeadLag::XLeadsY => format!("social leads call by {days} day{plural}, {sign} correlation {:.3}", lag.peak_correlation),
        LeadLag::XLagsY => format!("social lags call by {days} day{plural}, {sign} correlation {:.3}", lag.peak_correlation),
    }
}

impl Dataset {
    fn check_category(&self, category: &Category) -> Result<(), AnalysisError> {
        if self.categories().contains(category) {
            Ok(())
        } else {
            Err(AnalysisError::UnknownCategory(category.to_string()))
        }
    }

    /// The requested window, filling open ends from the days both
    /// sources cover.
    pub fn resolve_range(&self, req: &AnalysisRequest) -> Result<DateRange, AnalysisError> {
        let common = match (self.calls.date_span(), self.posts.date_span()) {
            (Some(c), Some(p)) => c.intersect(&p),
            _ => None,
        };
        let from = req.from.or(common.map(|r| r.start()));
        let to = req.to.or(common.map(|r| r.end()));
        match (from, to) {
            (Some(from), Some(to)) => Ok(DateRange::new(from, to)?),
            _ => Err(AnalysisError::Unprocessable("the sources share no days; pass `from` and `to`".into())),
        }
    }

    /// Raw (social, call) series over the resolved window.
    pub fn raw_pair(&self, req: &AnalysisRequest) -> Result<(DateRange, TopicSeries, TopicSeries), AnalysisError> {
        req.validate()?;
        self.check_category(&req.category)?;
        let range = self.resolve_range(req)?;
        let social = self.posts.build_series(&req.category, req.strategy, range)?;
        let call = self.calls.build_series(&req.category, req.strategy, range)?;
        Ok((range, social, call))
    }

    pub fn series(&self, req: &AnalysisRequest) -> Result<SeriesReport, AnalysisError> {
        let (range, social, call) = self.raw_pair(req)?;
        let social = preprocess(&social, req)?;
        let call = preprocess(&call, req)?;
        Ok(SeriesReport { request: req.clone(), range, social: (&social).into(), call: (&call).into() })
    }

    pub fn decomposition(&self, req: &AnalysisRequest) -> Result<DecompositionReport, AnalysisError> {
        let (range, social, call) = self.raw_pair(req)?;
        let social = decompose_for(&social, req)?;
        let call = decompose_for(&call, req)?;
        Ok(DecompositionReport { request: req.clone(), range, social: (&social).into(), call: (&call).into() })
    }

    pub fn correlation(&self, req: &AnalysisRequest) -> Result<CorrelationReport, AnalysisError> {
        let (range, social, call) = self.raw_pair(req)?;
        let (x, y) = align(&preprocess(&social, req)?, &preprocess(&call, req)?)?;
        let table = ccf(&x.values, &y.values, req.max_lag, req.min_overlap)?;
        let delay = detect_delay(&table)?;
        Ok(CorrelationReport {
            request: req.clone(),
            range,
            orientation: ORIENTATION,
            summary: describe(&delay),
            delay_days: delay.delay_days(),
            ccf: table,
            delay,
        })
    }

    pub fn sax(&self, req: &AnalysisRequest) -> Result<SaxReport, AnalysisError> {
        let (range, social, call) = self.raw_pair(req)?;
        let cmp = compare_trends(&preprocess(&social, req)?, &preprocess(&call, req)?, req.sax_options())?;
        let view = |source, word: &crate::symbolic::SaxWord, weekly: &[f64]| WordView {
            source,
            letters: word.letters(),
            symbols: word.symbols.clone(),
            word_length: word.word_length,
            alphabet_size: word.alphabet_size,
            breakpoints: word.breakpoints.clone(),
            weekly: weekly.to_vec(),
        };
        Ok(SaxReport {
            request: req.clone(),
            range,
            social: view(Source::Social, &cmp.a, &cmp.a_weekly),
            call: view(Source::Call, &cmp.b, &cmp.b_weekly),
            weeks: cmp.weeks,
            comparison: cmp.comparison,
        })
    }
}

/// Decomposes one series, filling undefined days first if the request
/// names a fill policy.
pub fn decompose_for(series: &TopicSeries, req: &AnalysisRequest) -> Result<DecomposedSeries, AnalysisError> {
    Ok(decompose_additive(&fill_for_decomposition(series, req)?, req.period)?)
}

fn fill_for_decomposition(series: &TopicSeries, req: &AnalysisRequest) -> Result<TopicSeries, AnalysisError> {
    match (series.has_gaps(), req.fill) {
        (false, _) => Ok(series.clone()),
        (true, Some(policy)) => Ok(series.fill_missing(policy)),
        (true, None) => Err(AnalysisError::Unprocessable(format!(
            "{} series has {} undefined days; choose a fill policy (zero or linear) or use raw preprocessing",
            series.source,
            series.len() - series.present_count()
        ))),
    }
}

/// Applies the request's preprocessing to one series.
pub fn preprocess(series: &TopicSeries, req: &AnalysisRequest) -> Result<TopicSeries, AnalysisError> {
    match req.preprocessing {
        Preprocessing::Raw => Ok(series.clone()),
        Preprocessing::Adjusted => Ok(decompose_for(series, req)?.seasonally_adjusted()),
        Preprocessing::Trend => Ok(decompose_for(series, req)?.trend_series()),
    }
}
