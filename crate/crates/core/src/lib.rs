//! Coupling analysis between call-centre enquiries and social-media posts.
//!
//! The pipeline turns two timestamped event streams into daily topical
//! series and measures how they move together:
//!
//! 1. [`ingest`]: parse call and post files, assign categories with
//!    merging rules (calls) or keyword search (posts);
//! 2. [`series`]: daily frequency or percentage series per category;
//! 3. [`decompose`]: additive moving-average decomposition and seasonal
//!    adjustment;
//! 4. [`correlate`]: lagged cross-correlation and delay detection;
//! 5. [`symbolic`]: weekly aggregation, PAA/SAX words and trend comparison.
//!
//! [`synth`] generates coupled streams with known lag and sign for testing.
//! [`analysis`] bundles the steps per request; the [`service`] module and
//! the `coupling` binary expose it over HTTP and the command line.
//!
//! ```
//! use coupling::correlate::{ccf, detect_delay, LeadLag};
//! use coupling::series::observations;
//!
//! let x = observations(&[1.0, 5.0, 2.0, 8.0, 3.0, 9.0, 4.0, 7.0, 6.0, 0.0, 2.0, 5.0]);
//! // y[t] = x[t - 2]: x leads y by two days.
//! let mut y = vec![coupling::series::Observation::missing(); 2];
//! y.extend_from_slice(&x[..10]);
//! let table = ccf(&x, &y, 3, 6).unwrap();
//! let lag = detect_delay(&table).unwrap();
//! assert_eq!((lag.delay, lag.lead_lag), (-2, LeadLag::XLeadsY));
//! ```

pub mod analysis;
pub mod category;
pub mod cli;
pub mod config;
pub mod correlate;
pub mod dataset;
pub mod decompose;
pub mod ingest;
pub mod series;
pub mod service;
pub mod symbolic;
pub mod synth;

use std::path::PathBuf;

pub use analysis::{AnalysisError, AnalysisRequest, Preprocessing};
pub use category::Category;
pub use dataset::Dataset;
pub use series::{DateRange, Source, Strategy, TopicSeries};

/// Errors from file-level operations: config, ingestion and the cache.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: ingest::IngestError,
    },
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error("cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
