//! Daily topical time series.
//!
//! A [`CategorizedBatch`] holds one source's records reduced to a day and a
//! set of category labels. From it, [`CategorizedBatch::build_series`]
//! produces a [`TopicSeries`] with one observation per calendar day under
//! either strategy:
//!
//! - frequency: the number of records of the category on the day;
//! - percentage: that number divided by all records of the source on the
//!   day. Days with no records at all are marked not present (0/0).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Days, FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::ingest::{CallRecord, PostRecord, RuleSet};

#[derive(Debug, thiserror::Error)]
pub enum SeriesError {
    #[error("empty date range: {start} is after {end}")]
    EmptyRange { start: NaiveDate, end: NaiveDate },
    #[error("unknown category `{0}`")]
    UnknownCategory(Category),
    #[error("series do not overlap")]
    EmptyIntersection,
    #[error("series text: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Call,
    Social,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Frequency,
    Percentage,
}

macro_rules! lowercase_enum_text {
    ($ty:ty, $($variant:ident => $name:literal),+) => {
        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $(Self::$variant => $name),+ })
            }
        }
        impl std::str::FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim().to_lowercase().as_str() {
                    $($name => Ok(Self::$variant),)+
                    other => Err(format!("unknown {} `{other}`", stringify!($ty).to_lowercase())),
                }
            }
        }
    };
}
pub(crate) use lowercase_enum_text;

lowercase_enum_text!(Source, Call => "call", Social => "social");
lowercase_enum_text!(Strategy, Frequency => "frequency", Percentage => "percentage");

/// An inclusive range of calendar days. Never empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    start: NaiveDate,
    end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<DateRange, SeriesError> {
        if start > end {
            return Err(SeriesError::EmptyRange { start, end });
        }
        Ok(DateRange { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn num_days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.num_days())
    }

    pub fn intersect(&self, other: &DateRange) -> Option<DateRange> {
        DateRange::new(self.start.max(other.start), self.end.min(other.end)).ok()
    }
}

/// One day's value. `present == false` means the value is undefined and
/// `value` carries no information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub value: f64,
    pub present: bool,
}

impl Observation {
    pub fn present(value: f64) -> Observation {
        Observation { value, present: true }
    }

    pub fn missing() -> Observation {
        Observation { value: 0.0, present: false }
    }

    pub fn get(&self) -> Option<f64> {
        self.present.then_some(self.value)
    }
}

impl From<Option<f64>> for Observation {
    fn from(v: Option<f64>) -> Self {
        v.map_or_else(Observation::missing, Observation::present)
    }
}

/// Wraps plain values as fully present observations.
pub fn observations(values: &[f64]) -> Vec<Observation> {
    values.iter().copied().map(Observation::present).collect()
}

/// How [`TopicSeries::fill_missing`] replaces undefined days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillPolicy {
    Zero,
    /// Interpolate between the nearest present neighbours; hold the nearest
    /// value past either end.
    Linear,
}

lowercase_enum_text!(FillPolicy, Zero => "zero", Linear => "linear");

/// A daily series for one (source, category, strategy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSeries {
    pub source: Source,
    pub category: Category,
    pub strategy: Strategy,
    pub start: NaiveDate,
    pub values: Vec<Observation>,
}

impl TopicSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last day covered. Equal to `start` for an empty series.
    pub fn end(&self) -> NaiveDate {
        self.start + Days::new(self.values.len().saturating_sub(1) as u64)
    }

    pub fn range(&self) -> Option<DateRange> {
        (!self.values.is_empty()).then(|| DateRange { start: self.start, end: self.end() })
    }

    pub fn date_at(&self, idx: usize) -> NaiveDate {
        self.start + Days::new(idx as u64)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.values.len())
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|o| o.present).count()
    }

    pub fn has_gaps(&self) -> bool {
        self.values.iter().any(|o| !o.present)
    }

    /// Same metadata, new observations starting at the same day.
    pub fn with_values(&self, values: Vec<Observation>) -> TopicSeries {
        TopicSeries { source: self.source, category: self.category.clone(), strategy: self.strategy, start: self.start, values }
    }

    /// The days inside `range`, or `None` if they do not overlap.
    pub fn slice(&self, range: &DateRange) -> Option<TopicSeries> {
        let own = self.range()?;
        let common = own.intersect(range)?;
        let from = (common.start - self.start).num_days() as usize;
        let to = from + common.num_days();
        Some(TopicSeries { start: common.start, ..self.with_values(self.values[from..to].to_vec()) })
    }

    /// Drops undefined days at both ends.
    pub fn trim_missing(&self) -> TopicSeries {
        let Some(first) = self.values.iter().position(|o| o.present) else {
            return TopicSeries { values: Vec::new(), ..self.clone() };
        };
        let last = self.values.iter().rposition(|o| o.present).unwrap_or(first);
        TopicSeries { start: self.date_at(first), ..self.with_values(self.values[first..=last].to_vec()) }
    }

    /// Replaces undefined days so that every day is present. A series with
    /// no present day at all fills with zeros under either policy.
    pub fn fill_missing(&self, policy: FillPolicy) -> TopicSeries {
        let filled = match policy {
            FillPolicy::Zero => self
                .values
                .iter()
                .map(|o| Observation::present(if o.present { o.value } else { 0.0 }))
                .collect(),
            FillPolicy::Linear => {
                let known: Vec<(usize, f64)> =
                    self.values.iter().enumerate().filter(|(_, o)| o.present).map(|(i, o)| (i, o.value)).collect();
                (0..self.values.len())
                    .map(|i| {
                        let value = match known.binary_search_by_key(&i, |(k, _)| *k) {
                            Ok(pos) => known[pos].1,
                            Err(_) if known.is_empty() => 0.0,
                            Err(0) => known[0].1,
                            Err(pos) if pos == known.len() => known[pos - 1].1,
                            Err(pos) => {
                                let (i0, v0) = known[pos - 1];
                                let (i1, v1) = known[pos];
                                v0 + (v1 - v0) * (i - i0) as f64 / (i1 - i0) as f64
                            }
                        };
                        Observation::present(value)
                    })
                    .collect()
            }
        };
        self.with_values(filled)
    }

    /// Writes `date,value,present` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SeriesError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["date", "value", "present"])?;
        for (day, obs) in self.dates().zip(&self.values) {
            let value = if obs.present { obs.value.to_string() } else { String::new() };
            writer.write_record([day.format("%Y-%m-%d").to_string(), value, u8::from(obs.present).to_string()])?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads the format produced by [`TopicSeries::write_csv`]. Dates must
    /// be consecutive.
    pub fn read_csv<R: Read>(
        input: R,
        source: Source,
        category: Category,
        strategy: Strategy,
    ) -> Result<TopicSeries, SeriesError> {
        let mut reader = csv::Reader::from_reader(input);
        let mut start = None;
        let mut values = Vec::new();
        for row in reader.records() {
            let row = row?;
            let bad = |what: &str| SeriesError::Format(format!("{what} in row {:?}", row.iter().collect::<Vec<_>>()));
            let day = NaiveDate::parse_from_str(row.get(0).unwrap_or(""), "%Y-%m-%d").map_err(|_| bad("bad date"))?;
            let first = *start.get_or_insert(day);
            if day != first + Days::new(values.len() as u64) {
                return Err(bad("non-consecutive date"));
            }
            let present = match row.get(2).unwrap_or("").trim() {
                "1" | "true" => true,
                "0" | "false" => false,
                _ => return Err(bad("bad present flag")),
            };
            let value = match row.get(1).unwrap_or("").trim() {
                "" if !present => 0.0,
                raw => raw.parse::<f64>().map_err(|_| bad("bad value"))?,
            };
            values.push(Observation { value, present });
        }
        let start = start.ok_or_else(|| SeriesError::Format("no rows".into()))?;
        Ok(TopicSeries { source, category, strategy, start, values })
    }
}

/// Trims two series to their common days. A day stays present only when it
/// is present in both.
pub fn align(a: &TopicSeries, b: &TopicSeries) -> Result<(TopicSeries, TopicSeries), SeriesError> {
    let (ra, rb) = match (a.range(), b.range()) {
        (Some(ra), Some(rb)) => (ra, rb),
        _ => return Err(SeriesError::EmptyIntersection),
    };
    let common = ra.intersect(&rb).ok_or(SeriesError::EmptyIntersection)?;
    let mut a = a.slice(&common).ok_or(SeriesError::EmptyIntersection)?;
    let mut b = b.slice(&common).ok_or(SeriesError::EmptyIntersection)?;
    for (x, y) in a.values.iter_mut().zip(b.values.iter_mut()) {
        let joint = x.present && y.present;
        x.present = joint;
        y.present = joint;
    }
    Ok((a, b))
}

/// A record reduced to its day and category labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEvent {
    pub date: NaiveDate,
    pub labels: Vec<Category>,
}

/// All categorized records of one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorizedBatch {
    pub source: Source,
    /// Categories a series may be requested for.
    pub catalog: Vec<Category>,
    pub events: Vec<LabeledEvent>,
}

impl CategorizedBatch {
    /// Each call is labeled with its single core category plus overlays.
    pub fn from_calls(records: &[CallRecord], rules: &RuleSet) -> CategorizedBatch {
        let events = records
            .iter()
            .map(|r| {
                let labels = rules.label_call(r);
                let mut all = vec![labels.core];
                all.extend(labels.overlays);
                LabeledEvent { date: r.date, labels: all }
            })
            .collect();
        CategorizedBatch { source: Source::Call, catalog: rules.categories(), events }
    }

    /// Each post carries every matching category. A post matching no core
    /// category is also labeled `other`.
    pub fn from_posts(records: &[PostRecord], rules: &RuleSet, zone: FixedOffset) -> CategorizedBatch {
        let events = records
            .iter()
            .map(|p| {
                let mut labels: Vec<Category> = rules.categorize_post(p).into_iter().collect();
                if !labels.iter().any(Category::is_core) {
                    labels.insert(0, Category::Other);
                }
                LabeledEvent { date: p.post_time.date_in(zone), labels }
            })
            .collect();
        CategorizedBatch { source: Source::Social, catalog: rules.categories(), events }
    }

    /// First and last day with any record.
    pub fn date_span(&self) -> Option<DateRange> {
        let min = self.events.iter().map(|e| e.date).min()?;
        let max = self.events.iter().map(|e| e.date).max()?;
        Some(DateRange { start: min, end: max })
    }

    /// Per-day (category count, total count) inside `range`.
    fn daily_counts(&self, category: &Category, range: &DateRange) -> BTreeMap<NaiveDate, (u64, u64)> {
        let mut counts: BTreeMap<NaiveDate, (u64, u64)> = BTreeMap::new();
        for e in self.events.iter().filter(|e| range.contains(e.date)) {
            let entry = counts.entry(e.date).or_default();
            entry.1 += 1;
            if e.labels.contains(category) {
                entry.0 += 1;
            }
        }
        counts
    }

    pub fn build_series(
        &self,
        category: &Category,
        strategy: Strategy,
        range: DateRange,
    ) -> Result<TopicSeries, SeriesError> {
        if !self.catalog.contains(category) {
            return Err(SeriesError::UnknownCategory(category.clone()));
        }
        let counts = self.daily_counts(category, &range);
        let values = range
            .days()
            .map(|day| {
                let (hits, total) = counts.get(&day).copied().unwrap_or((0, 0));
                match strategy {
                    Strategy::Frequency => Observation::present(hits as f64),
                    Strategy::Percentage if total == 0 => Observation::missing(),
                    Strategy::Percentage => Observation::present(hits as f64 / total as f64),
                }
            })
            .collect();
        Ok(TopicSeries { source: self.source, category: category.clone(), strategy, start: range.start, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2013, m, d).unwrap()
    }

    fn series(start: NaiveDate, vals: &[Option<f64>]) -> TopicSeries {
        TopicSeries {
            source: Source::Call,
            category: Category::Work,
            strategy: Strategy::Frequency,
            start,
            values: vals.iter().copied().map(Observation::from).collect(),
        }
    }

    #[test]
    fn empty_range_is_rejected() {
        assert!(matches!(DateRange::new(day(12, 2), day(12, 1)), Err(SeriesError::EmptyRange { .. })));
        assert_eq!(DateRange::new(day(12, 1), day(12, 1)).unwrap().num_days(), 1);
    }

    #[test]
    fn days_without_records() {
        let batch = CategorizedBatch { source: Source::Call, catalog: Category::CORE.to_vec(), events: vec![] };
        let range = DateRange::new(day(12, 1), day(12, 3)).unwrap();
        let f = batch.build_series(&Category::Work, Strategy::Frequency, range).unwrap();
        assert!(f.values.iter().all(|o| o.present && o.value == 0.0));
        let p = batch.build_series(&Category::Work, Strategy::Percentage, range).unwrap();
        assert!(p.values.iter().all(|o| !o.present));
        let err = batch.build_series(&Category::Extension("refugee".into()), Strategy::Frequency, range);
        assert!(matches!(err, Err(SeriesError::UnknownCategory(_))));
    }

    #[test]
    fn align_intersects_ranges() {
        let a = series(day(12, 1), &[Some(1.0); 21]);
        let b = series(day(12, 10), &[Some(2.0); 22]);
        let (a2, b2) = align(&a, &b).unwrap();
        assert_eq!((a2.start, a2.end()), (day(12, 10), day(12, 21)));
        assert_eq!((b2.start, b2.end()), (day(12, 10), day(12, 21)));

        let (a3, a4) = align(&a, &a).unwrap();
        assert_eq!(a3, a);
        assert_eq!(a4, a);

        let c = series(day(12, 25), &[Some(1.0); 3]);
        assert!(matches!(align(&a, &c), Err(SeriesError::EmptyIntersection)));
    }

    #[test]
    fn align_uses_joint_presence() {
        let a = series(day(12, 1), &[Some(1.0), None, Some(3.0)]);
        let b = series(day(12, 1), &[Some(1.0), Some(2.0), None]);
        let (a2, b2) = align(&a, &b).unwrap();
        let flags: Vec<bool> = a2.values.iter().map(|o| o.present).collect();
        assert_eq!(flags, [true, false, false]);
        assert_eq!(b2.values.iter().map(|o| o.present).collect::<Vec<_>>(), flags);
    }

    #[test]
    fn fill_and_trim() {
        let s = series(day(12, 1), &[None, Some(1.0), None, None, Some(4.0), None]);
        let lin: Vec<f64> = s.fill_missing(FillPolicy::Linear).values.iter().map(|o| o.value).collect();
        assert_eq!(lin, [1.0, 1.0, 2.0, 3.0, 4.0, 4.0]);
        let zero: Vec<f64> = s.fill_missing(FillPolicy::Zero).values.iter().map(|o| o.value).collect();
        assert_eq!(zero, [0.0, 1.0, 0.0, 0.0, 4.0, 0.0]);
        let t = s.trim_missing();
        assert_eq!(t.start, day(12, 2));
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn csv_round_trip() {
        let s = series(day(12, 30), &[Some(0.25), None, Some(3.0)]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "date,value,present\n2013-12-30,0.25,1\n2013-12-31,,0\n2014-01-01,3,1\n");
        let back = TopicSeries::read_csv(buf.as_slice(), Source::Call, Category::Work, Strategy::Frequency).unwrap();
        assert_eq!(back, s);
        let gap = "date,value,present\n2013-12-30,1,1\n2014-01-01,1,1\n";
        assert!(TopicSeries::read_csv(gap.as_bytes(), Source::Call, Category::Work, Strategy::Frequency).is_err());
    }
}
