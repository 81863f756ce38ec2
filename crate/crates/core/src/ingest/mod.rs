//! Parsing raw call-centre and social-media records and assigning them to
//! topic categories.

mod records;
mod rules;

pub use records::{
    parse_call_records, parse_day, parse_duration, parse_post_records, write_call_records, write_posts_jsonl,
    CallColumns, CallFormat, CallRecord, ParseReport, PostFormat, PostRecord, PostTime, RowError,
};
pub use rules::{tokenize, CallLabels, Pattern, Rule, RuleSet};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("input has no header row")]
    MissingHeader,
    #[error("malformed header: {0}")]
    Header(#[source] csv::Error),
    #[error("header has no `{0}` column")]
    MissingColumn(String),
    #[error("delimiter {0:?} is not a single ASCII character")]
    BadDelimiter(char),
    #[error("invalid rule set: {0}")]
    Rules(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
