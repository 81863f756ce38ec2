//! Serves the HTTP API over a synthetic snapshot.
//!
//! Usage: `serve_snapshot [ADDR] [STATIC_DIR]`, then for example
//! `curl 'http://127.0.0.1:8080/v1/correlation?category=work'`.

use chrono::NaiveDate;
use coupling::analysis::Defaults;
use coupling::correlate::CorrelationSign;
use coupling::ingest::RuleSet;
use coupling::synth::{generate, SynthSpec};
use coupling::{Category, Dataset, DateRange};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let addr = args.next().unwrap_or_else(|| "127.0.0.1:8080".into()).parse()?;
    let static_dir = args.next().map(Into::into);

    let range = DateRange::new(NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2014, 12, 31).unwrap())?;
    let spec = SynthSpec::coupled(range, Category::Work, 2, CorrelationSign::Positive, 0.9, 7);
    let output = generate(&spec)?;
    let dataset = Dataset::from_records(&output.calls, &output.posts, &RuleSet::default(), chrono::FixedOffset::east_opt(0).unwrap());

    coupling::service::serve(addr, coupling::service::router(dataset, Defaults::default(), static_dir)).await?;
    Ok(())
}
