//! Raw event records and their file formats.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::IngestError;

/// One call-centre interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub id: String,
    pub date: NaiveDate,
    /// Seconds.
    pub duration: Option<u32>,
    pub disposition_code: String,
    pub disposition_text: String,
}

/// One social-media post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: String,
    pub text: String,
    pub post_time: PostTime,
    pub user_name: String,
}

/// When a post was made, at whatever precision the source provides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostTime {
    /// An instant with a known offset.
    Instant(DateTime<FixedOffset>),
    /// A wall-clock time already expressed in the analysis zone.
    Local(NaiveDateTime),
    /// Day precision only.
    Day(NaiveDate),
}

impl PostTime {
    /// The calendar day of this post in the analysis zone.
    pub fn date_in(&self, zone: FixedOffset) -> NaiveDate {
        match self {
            PostTime::Instant(t) => t.with_timezone(&zone).date_naive(),
            PostTime::Local(t) => t.date(),
            PostTime::Day(d) => *d,
        }
    }

    pub fn parse(raw: &str) -> Option<PostTime> {
        let s = raw.trim();
        if s.is_empty() {
            return None;
        }
        if let Ok(t) = DateTime::parse_from_rfc3339(s) {
            return Some(PostTime::Instant(t));
        }
        // Classic Twitter API `created_at`.
        if let Ok(t) = DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y") {
            return Some(PostTime::Instant(t));
        }
        for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%d/%m/%Y %H:%M:%S", "%d/%m/%Y %H:%M"] {
            if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
                return Some(PostTime::Local(t));
            }
        }
        parse_day(s).map(PostTime::Day)
    }
}

impl fmt::Display for PostTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostTime::Instant(t) => write!(f, "{}", t.to_rfc3339()),
            PostTime::Local(t) => write!(f, "{}", t.format("%Y-%m-%dT%H:%M:%S")),
            PostTime::Day(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

impl Serialize for PostTime {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PostTime {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        PostTime::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unparseable post time `{s}`")))
    }
}

/// Parses a calendar day written day-first (`6/12/2013`) or ISO
/// (`2013-12-06`). A trailing time of day is ignored.
pub fn parse_day(raw: &str) -> Option<NaiveDate> {
    let s = raw.trim();
    let day_part = s.split([' ', 'T']).next().unwrap_or(s);
    NaiveDate::parse_from_str(day_part, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(day_part, "%d/%m/%Y"))
        .ok()
}

/// Parses a call duration into seconds: `60`, `90s`, `1min`, `10 min`,
/// `2 h`, `4:05` or `1:02:03`. Empty input is `Ok(None)`.
pub fn parse_duration(raw: &str) -> Result<Option<u32>, String> {
    let s = raw.trim().to_lowercase();
    if s.is_empty() {
        return Ok(None);
    }
    if s.contains(':') {
        let mut total: u32 = 0;
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() > 3 {
            return Err(format!("bad duration `{raw}`"));
        }
        for part in parts {
            let v: u32 = part.trim().parse().map_err(|_| format!("bad duration `{raw}`"))?;
            total = total * 60 + v;
        }
        return Ok(Some(total));
    }
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (digits, unit) = s.split_at(split);
    let value: u32 = digits.parse().map_err(|_| format!("bad duration `{raw}`"))?;
    let scale = match unit.trim() {
        "" | "s" | "sec" | "secs" | "second" | "seconds" => 1,
        "m" | "min" | "mins" | "minute" | "minutes" => 60,
        "h" | "hr" | "hrs" | "hour" | "hours" => 3600,
        _ => return Err(format!("bad duration unit in `{raw}`")),
    };
    Ok(Some(value * scale))
}

/// Lowercase and keep only alphanumerics, so `Disposition Code`,
/// `disposition_code` and `DISPOSITIONCODE` compare equal.
fn normalize_header(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Column names for a call-centre extract. Matching ignores case,
/// spacing and punctuation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CallColumns {
    pub id: String,
    pub date: String,
    pub duration: String,
    pub disposition_code: String,
    pub disposition_text: String,
}

impl Default for CallColumns {
    fn default() -> Self {
        Self {
            id: "id".into(),
            date: "date".into(),
            duration: "duration".into(),
            disposition_code: "disposition code".into(),
            disposition_text: "disposition code text".into(),
        }
    }
}

/// Layout of a delimiter-separated call-centre file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CallFormat {
    pub delimiter: char,
    pub columns: CallColumns,
}

impl Default for CallFormat {
    fn default() -> Self {
        Self { delimiter: ',', columns: CallColumns::default() }
    }
}

/// A data row that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-based line number in the input, header included.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Records parsed from one input plus the rows that were rejected.
#[derive(Debug, Clone)]
pub struct ParseReport<T> {
    pub records: Vec<T>,
    pub errors: Vec<RowError>,
}

impl<T> Default for ParseReport<T> {
    fn default() -> Self {
        Self { records: Vec::new(), errors: Vec::new() }
    }
}

fn delimiter_byte(delimiter: char) -> Result<u8, IngestError> {
    u8::try_from(delimiter)
        .ok()
        .filter(u8::is_ascii)
        .ok_or(IngestError::BadDelimiter(delimiter))
}

fn find_column(headers: &csv::StringRecord, wanted: &[&str]) -> Option<usize> {
    let wanted: Vec<String> = wanted.iter().map(|w| normalize_header(w)).collect();
    headers.iter().position(|h| wanted.contains(&normalize_header(h)))
}

fn field(record: &csv::StringRecord, idx: Option<usize>) -> &str {
    idx.and_then(|i| record.get(i)).unwrap_or("").trim()
}

/// Parses a call-centre extract.
///
/// A missing or malformed header is fatal. Rows with bad dates, empty ids
/// or unreadable durations are collected in the report with their line
/// number and skipped.
pub fn parse_call_records<R: Read>(input: R, format: &CallFormat) -> Result<ParseReport<CallRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_byte(format.delimiter)?)
        .flexible(true)
        .has_headers(true)
        .from_reader(input);
    let headers = reader.headers().map_err(IngestError::Header)?.clone();
    if headers.iter().all(|h| h.trim().is_empty()) {
        return Err(IngestError::MissingHeader);
    }
    let cols = &format.columns;
    let id = find_column(&headers, &[&cols.id]).ok_or_else(|| IngestError::MissingColumn(cols.id.clone()))?;
    let date =
        find_column(&headers, &[&cols.date]).ok_or_else(|| IngestError::MissingColumn(cols.date.clone()))?;
    let duration = find_column(&headers, &[&cols.duration]);
    let code = find_column(&headers, &[&cols.disposition_code]);
    let text = find_column(&headers, &[&cols.disposition_text]);
    if code.is_none() && text.is_none() {
        return Err(IngestError::MissingColumn(format!("{} / {}", cols.disposition_code, cols.disposition_text)));
    }

    let mut report = ParseReport::default();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                report.errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let record_id = field(&row, Some(id));
        if record_id.is_empty() {
            report.errors.push(RowError { line, message: "empty id".into() });
            continue;
        }
        let raw_date = field(&row, Some(date));
        let Some(day) = parse_day(raw_date) else {
            report.errors.push(RowError { line, message: format!("unparseable date `{raw_date}`") });
            continue;
        };
        let seconds = match parse_duration(field(&row, duration)) {
            Ok(s) => s,
            Err(message) => {
                report.errors.push(RowError { line, message });
                continue;
            }
        };
        report.records.push(CallRecord {
            id: record_id.to_string(),
            date: day,
            duration: seconds,
            disposition_code: field(&row, code).to_string(),
            disposition_text: field(&row, text).to_string(),
        });
    }
    Ok(report)
}

/// Writes call records in the default layout with ISO dates.
pub fn write_call_records<W: Write>(out: W, records: &[CallRecord]) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["ID", "Date", "Duration", "Disposition Code", "Disposition Code Text"])?;
    for r in records {
        let duration = r.duration.map(|d| d.to_string()).unwrap_or_default();
        let date = r.date.format("%Y-%m-%d").to_string();
        writer.write_record([r.id.as_str(), &date, &duration, &r.disposition_code, &r.disposition_text])?;
    }
    writer.flush()?;
    Ok(())
}

/// How posts are laid out on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PostFormat {
    /// Delimiter-separated with a header. Columns are found by the usual
    /// names (`post_id`/`tweetID`, `text`/`tweetText`, `post_time`/`postTime`,
    /// `user_name`/`userName`).
    Delimited { delimiter: char },
    /// One JSON object per line with the same field names.
    JsonLines,
}

impl Default for PostFormat {
    fn default() -> Self {
        PostFormat::Delimited { delimiter: ',' }
    }
}

const POST_ID: &[&str] = &["post_id", "tweetID", "id", "id_str"];
const POST_TEXT: &[&str] = &["text", "tweetText", "full_text"];
const POST_TIME: &[&str] = &["post_time", "postTime", "created_at", "date"];
const POST_USER: &[&str] = &["user_name", "userName", "screen_name", "user"];

#[derive(Deserialize)]
struct PostLine {
    #[serde(alias = "tweetID", alias = "id", alias = "id_str")]
    post_id: serde_json::Value,
    #[serde(alias = "tweetText", alias = "full_text")]
    text: String,
    #[serde(alias = "postTime", alias = "created_at")]
    post_time: String,
    #[serde(default, alias = "userName", alias = "screen_name")]
    user_name: String,
}

fn build_post(line: u64, id: &str, text: &str, time: &str, user: &str) -> Result<PostRecord, RowError> {
    if id.is_empty() {
        return Err(RowError { line, message: "empty post id".into() });
    }
    let post_time =
        PostTime::parse(time).ok_or_else(|| RowError { line, message: format!("unparseable post time `{time}`") })?;
    Ok(PostRecord { post_id: id.to_string(), text: text.to_string(), post_time, user_name: user.to_string() })
}

/// Parses social-media posts. Same error policy as [`parse_call_records`].
pub fn parse_post_records<R: Read>(input: R, format: &PostFormat) -> Result<ParseReport<PostRecord>, IngestError> {
    match format {
        PostFormat::Delimited { delimiter } => parse_posts_delimited(input, *delimiter),
        PostFormat::JsonLines => parse_posts_jsonl(input),
    }
}

fn parse_posts_delimited<R: Read>(input: R, delimiter: char) -> Result<ParseReport<PostRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_byte(delimiter)?)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers().map_err(IngestError::Header)?.clone();
    if headers.iter().all(|h| h.trim().is_empty()) {
        return Err(IngestError::MissingHeader);
    }
    let id = find_column(&headers, POST_ID).ok_or_else(|| IngestError::MissingColumn("post_id".into()))?;
    let text = find_column(&headers, POST_TEXT).ok_or_else(|| IngestError::MissingColumn("text".into()))?;
    let time = find_column(&headers, POST_TIME).ok_or_else(|| IngestError::MissingColumn("post_time".into()))?;
    let user = find_column(&headers, POST_USER);

    let mut report = ParseReport::default();
    for row in reader.records() {
        match row {
            Ok(row) => {
                let line = row.position().map(|p| p.line()).unwrap_or(0);
                if row.iter().all(|f| f.trim().is_empty()) {
                    continue;
                }
                match build_post(line, field(&row, Some(id)), field(&row, Some(text)), field(&row, Some(time)), field(&row, user)) {
                    Ok(post) => report.records.push(post),
                    Err(e) => report.errors.push(e),
                }
            }
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                report.errors.push(RowError { line, message: e.to_string() });
            }
        }
    }
    Ok(report)
}

fn parse_posts_jsonl<R: Read>(input: R) -> Result<ParseReport<PostRecord>, IngestError> {
    let mut report = ParseReport::default();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: PostLine = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                report.errors.push(RowError { line: line_no, message: e.to_string() });
                continue;
            }
        };
        let id = match &parsed.post_id {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => {
                report.errors.push(RowError { line: line_no, message: format!("bad post id {other}") });
                continue;
            }
        };
        match build_post(line_no, id.trim(), &parsed.text, &parsed.post_time, parsed.user_name.trim()) {
            Ok(post) => report.records.push(post),
            Err(e) => report.errors.push(e),
        }
    }
    Ok(report)
}

/// Writes posts as JSON lines.
pub fn write_posts_jsonl<W: Write>(mut out: W, posts: &[PostRecord]) -> Result<(), IngestError> {
    for post in posts {
        serde_json::to_writer(&mut out, post).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
