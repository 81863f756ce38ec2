//! Ingested dataset snapshots and their on-disk cache.
//!
//! A cache directory holds `calls.tsv` and `posts.tsv` (one categorized
//! record per line: ISO date, tab, `|`-separated labels) plus
//! `manifest.json`, which records the categories, the SHA-256 of every
//! source file and of the rule set, and the record counts.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::category::Category;
use crate::config::Config;
use crate::ingest::{parse_call_records, parse_post_records, CallRecord, PostFormat, PostRecord, RowError, RuleSet};
use crate::series::{CategorizedBatch, DateRange, LabeledEvent, Source};
use crate::Error;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CALLS_CACHE: &str = "calls.tsv";
pub const POSTS_CACHE: &str = "posts.tsv";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub source: Source,
    pub path: PathBuf,
    pub sha256: String,
    pub records: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub categories: Vec<Category>,
    pub timezone: String,
    pub rules_sha256: String,
    pub sources: Vec<SourceFile>,
    pub call_records: usize,
    pub post_records: usize,
    pub call_span: Option<DateRange>,
    pub post_span: Option<DateRange>,
}

/// A categorized call batch and post batch sharing one category catalog.
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub calls: CategorizedBatch,
    pub posts: CategorizedBatch,
    pub manifest: Manifest,
}

/// A rejected row and the file it came from.
#[derive(Debug, Clone)]
pub struct Rejection {
    pub path: PathBuf,
    pub error: RowError,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn is_jsonl(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson"))
}

impl Dataset {
    /// Categorizes in-memory records.
    pub fn from_records(calls: &[CallRecord], posts: &[PostRecord], rules: &RuleSet, zone: FixedOffset) -> Dataset {
        let calls = CategorizedBatch::from_calls(calls, rules);
        let posts = CategorizedBatch::from_posts(posts, rules, zone);
        let manifest = Manifest {
            version: CACHE_VERSION,
            categories: rules.categories(),
            timezone: zone.to_string(),
            rules_sha256: sha256_hex(format!("{rules:?}").as_bytes()),
            sources: Vec::new(),
            call_records: calls.events.len(),
            post_records: posts.events.len(),
            call_span: calls.date_span(),
            post_span: posts.date_span(),
        };
        Dataset { calls, posts, manifest }
    }

    /// Parses and categorizes source files. Post files ending in `.jsonl`
    /// or `.ndjson` are read as JSON lines, anything else as delimited text.
    /// Rejected rows are returned rather than failing the ingest.
    pub fn ingest_files(
        call_files: &[PathBuf],
        post_files: &[PathBuf],
        config: &Config,
    ) -> Result<(Dataset, Vec<Rejection>), Error> {
        let rules = config.rule_set()?;
        let rules_text = match &config.rules {
            Some(path) => std::fs::read(path)?,
            None => RuleSet::default_toml().as_bytes().to_vec(),
        };
        let zone = config.zone()?;
        let mut sources = Vec::new();
        let mut rejections = Vec::new();
        let mut calls = Vec::new();
        let mut posts = Vec::new();

        for path in call_files {
            let bytes = std::fs::read(path)?;
            let report = parse_call_records(bytes.as_slice(), &config.call_format)
                .map_err(|e| Error::Input { path: path.clone(), source: e })?;
            sources.push(SourceFile {
                source: Source::Call,
                path: path.clone(),
                sha256: sha256_hex(&bytes),
                records: report.records.len(),
                rejected: report.errors.len(),
            });
            rejections.extend(report.errors.into_iter().map(|error| Rejection { path: path.clone(), error }));
            calls.extend(report.records);
        }
        for path in post_files {
            let bytes = std::fs::read(path)?;
            let format =
                if is_jsonl(path) { PostFormat::JsonLines } else { PostFormat::Delimited { delimiter: config.post_delimiter } };
            let report =
                parse_post_records(bytes.as_slice(), &format).map_err(|e| Error::Input { path: path.clone(), source: e })?;
            sources.push(SourceFile {
                source: Source::Social,
                path: path.clone(),
                sha256: sha256_hex(&bytes),
                records: report.records.len(),
                rejected: report.errors.len(),
            });
            rejections.extend(report.errors.into_iter().map(|error| Rejection { path: path.clone(), error }));
            posts.extend(report.records);
        }

        let mut dataset = Dataset::from_records(&calls, &posts, &rules, zone);
        dataset.manifest.sources = sources;
        dataset.manifest.rules_sha256 = sha256_hex(&rules_text);
        dataset.manifest.timezone = config.timezone.clone();
        Ok((dataset, rejections))
    }

    pub fn categories(&self) -> &[Category] {
        &self.manifest.categories
    }

    pub fn write_cache(&self, dir: &Path) -> Result<(), Error> {
        std::fs::create_dir_all(dir)?;
        write_events(&dir.join(CALLS_CACHE), &self.calls.events)?;
        write_events(&dir.join(POSTS_CACHE), &self.posts.events)?;
        let manifest = BufWriter::new(File::create(dir.join(MANIFEST_FILE))?);
        serde_json::to_writer_pretty(manifest, &self.manifest).map_err(|e| Error::Cache(e.to_string()))?;
        Ok(())
    }

    pub fn load_cache(dir: &Path) -> Result<Dataset, Error> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let file = File::open(&manifest_path)
            .map_err(|e| Error::Cache(format!("cannot open {}: {e}", manifest_path.display())))?;
        let manifest: Manifest =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Cache(format!("bad manifest: {e}")))?;
        if manifest.version != CACHE_VERSION {
            return Err(Error::Cache(format!("cache version {} is not {CACHE_VERSION}", manifest.version)));
        }
        let calls = read_events(&dir.join(CALLS_CACHE))?;
        let posts = read_events(&dir.join(POSTS_CACHE))?;
        if calls.len() != manifest.call_records || posts.len() != manifest.post_records {
            return Err(Error::Cache("record counts do not match the manifest".into()));
        }
        let catalog = manifest.categories.clone();
        Ok(Dataset {
            calls: CategorizedBatch { source: Source::Call, catalog: catalog.clone(), events: calls },
            posts: CategorizedBatch { source: Source::Social, catalog, events: posts },
            manifest,
        })
    }
}

fn write_events(path: &Path, events: &[LabeledEvent]) -> Result<(), Error> {
    let mut out = BufWriter::new(File::create(path)?);
    for e in events {
        let labels: Vec<&str> = e.labels.iter().map(Category::name).collect();
        writeln!(out, "{}\t{}", e.date.format("%Y-%m-%d"), labels.join("|"))?;
    }
    out.flush()?;
    Ok(())
}

fn read_events(path: &Path) -> Result<Vec<LabeledEvent>, Error> {
    let file = File::open(path).map_err(|e| Error::Cache(format!("cannot open {}: {e}", path.display())))?;
    parse_events(BufReader::new(file)).map_err(|m| Error::Cache(format!("{}: {m}", path.display())))
}

fn parse_events<R: Read>(input: BufReader<R>) -> Result<Vec<LabeledEvent>, String> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let (date, labels) = line.split_once('\t').ok_or_else(|| format!("line {}: missing tab", i + 1))?;
        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| format!("line {}: bad date", i + 1))?;
        let labels = labels
            .split('|')
            .filter(|l| !l.is_empty())
            .map(|l| l.parse::<Category>().map_err(|e| format!("line {}: {e}", i + 1)))
            .collect::<Result<_, _>>()?;
        events.push(LabeledEvent { date, labels });
    }
    Ok(events)
}
