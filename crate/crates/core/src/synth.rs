//! Synthetic coupled call/social event streams with known ground truth.
//!
//! Each category gets a latent daily driver: a stationary AR(1) process
//! with unit variance, exponentiated into a positive intensity around the
//! category's base rate. Posts follow the driver directly. Calls of a
//! coupled category follow
//!
//! ```text
//! sign * strength * driver[t - lag] + sqrt(1 - strength^2) * independent[t]
//! ```
//!
//! so calls trail posts by `lag` days. Daily counts are Poisson draws; with
//! weekend closure every Saturday and Sunday (and any listed closed day)
//! has no calls. Records use dispositions and texts that the default rule
//! set maps back to the intended category.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, NaiveTime, TimeZone, Utc, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::correlate::CorrelationSign;
use crate::ingest::{write_call_records, write_posts_jsonl, CallRecord, IngestError, PostRecord, PostTime};
use crate::series::DateRange;

pub const MAX_LAG_DAYS: i64 = 14;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRates {
    pub category: Category,
    /// Mean posts per day.
    pub social_rate: f64,
    /// Mean calls per open day.
    pub call_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub category: Category,
    /// Days by which calls trail posts. Negative means calls lead.
    pub lag: i64,
    pub sign: CorrelationSign,
    /// Weight of the shared driver in the call driver, in `[0, 1]`.
    pub strength: f64,
}

/// Shape of the latent driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentParams {
    /// AR(1) coefficient in `[0, 1)`.
    pub ar: f64,
    /// Standard deviation of the log-intensity.
    pub log_scale: f64,
}

impl Default for LatentParams {
    fn default() -> Self {
        Self { ar: 0.5, log_scale: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub range: DateRange,
    pub categories: Vec<CategoryRates>,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
    #[serde(default)]
    pub weekend_closure: bool,
    /// Extra days with no calls, such as public holidays.
    #[serde(default)]
    pub closed_days: Vec<NaiveDate>,
    /// Extra per-day Gaussian noise on the call log-intensity.
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub latent: LatentParams,
    pub seed: u64,
}

impl SynthSpec {
    /// All six core categories at `base_rate`, with `category` coupled at
    /// four times that rate.
    pub fn coupled(
        range: DateRange,
        category: Category,
        lag: i64,
        sign: CorrelationSign,
        strength: f64,
        seed: u64,
    ) -> SynthSpec {
        let base_rate = 10.0;
        let categories = Category::CORE
            .iter()
            .map(|c| {
                let rate = if *c == category { 4.0 * base_rate } else { base_rate };
                CategoryRates { category: c.clone(), social_rate: rate, call_rate: rate }
            })
            .collect();
        SynthSpec {
            range,
            categories,
            couplings: vec![Coupling { category, lag, sign, strength }],
            weekend_closure: true,
            closed_days: Vec::new(),
            noise_std: 0.0,
            latent: LatentParams::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.categories.is_empty() {
            return bad("no categories".into());
        }
        for (i, c) in self.categories.iter().enumerate() {
            if !c.category.is_core() {
                return bad(format!("`{}` is not a core category", c.category));
            }
            if self.categories[..i].iter().any(|o| o.category == c.category) {
                return bad(format!("category `{}` listed twice", c.category));
            }
            if !(c.social_rate > 0.0 && c.call_rate > 0.0) || !c.social_rate.is_finite() || !c.call_rate.is_finite() {
                return bad(format!("rates for `{}` must be positive", c.category));
            }
        }
        for (i, k) in self.couplings.iter().enumerate() {
            if !self.categories.iter().any(|c| c.category == k.category) {
                return bad(format!("coupled category `{}` has no rates", k.category));
            }
            if self.couplings[..i].iter().any(|o| o.category == k.category) {
                return bad(format!("category `{}` coupled twice", k.category));
            }
            if k.lag.abs() > MAX_LAG_DAYS {
                return bad(format!("lag {} exceeds {MAX_LAG_DAYS} days", k.lag));
            }
            if !(0.0..=1.0).contains(&k.strength) {
                return bad(format!("strength {} outside [0, 1]", k.strength));
            }
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be a nonnegative number".into());
        }
        if !(0.0..1.0).contains(&self.latent.ar) {
            return bad(format!("latent ar {} outside [0, 1)", self.latent.ar));
        }
        if !(self.latent.log_scale >= 0.0 && self.latent.log_scale.is_finite()) {
            return bad("latent log_scale must be nonnegative".into());
        }
        Ok(())
    }

    fn is_closed(&self, day: NaiveDate) -> bool {
        self.weekend_closure && matches!(day.weekday(), Weekday::Sat | Weekday::Sun) || self.closed_days.contains(&day)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub calls: Vec<CallRecord>,
    pub posts: Vec<PostRecord>,
}

fn call_templates(category: &Category) -> &'static [(&'static str, &'static str)] {
    match category {
        Category::Study => &[("student visa", "574 visa"), ("eStudent", "student visa application"), ("570 visa", "course change")],
        Category::Visit => &[("600 visit", "600 visit visa"), ("600 visit", "600 electronic visa"), ("eVisitor", "tourist enquiry")],
        Category::Work => &[("457 visa", "457 visa application progress"), ("temp long", "457 nomination"), ("e400", "short stay work")],
        Category::Permanent => &[("skilled migration", "skilled selection"), ("partner migration", "partner visa enquiry"), ("gsm", "points test")],
        Category::Citizen => &[("citizenship", "citizenship test booking"), ("conferral", "ceremony date"), ("descent", "registration")],
        Category::Other | Category::Extension(_) => &[("general enquiry", "general enquiry"), ("passport", "change of address")],
    }
}

fn post_templates(category: &Category) -> &'static [&'static str] {
    match category {
        Category::Study => &["my 574 visa was granted", "any news on student visa processing?", "lodged a 560 application"],
        Category::Visit => &["applied for a 600 visa today", "eta approved for my trip", "evisitor question"],
        Category::Work => &["457 processing is so slow", "e457 lodged this morning", "whm extension?"],
        Category::Permanent => &["skilled migration points test", "partner migration update", "employer sponsored pathway"],
        Category::Citizen => &["citizenship test booked", "conferral ceremony next week", "citizenship by descent"],
        Category::Other | Category::Extension(_) => &["great weather in canberra", "hello from sydney", "office opening hours?"],
    }
}

/// Stationary AR(1) with unit marginal variance.
fn ar1(rng: &mut ChaCha8Rng, len: usize, ar: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let innovation = (1.0 - ar * ar).sqrt();
    let mut out = Vec::with_capacity(len);
    let mut z: f64 = normal.sample(rng);
    for _ in 0..len {
        out.push(z);
        z = ar * z + innovation * normal.sample(rng);
    }
    out
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Generates both streams. Identical specs give identical output.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let n = spec.range.num_days();
    let pad = MAX_LAG_DAYS as usize;
    let sigma = spec.latent.log_scale;

    // daily_calls[day][category index], daily_posts likewise.
    let mut daily_calls = vec![vec![0u64; spec.categories.len()]; n];
    let mut daily_posts = vec![vec![0u64; spec.categories.len()]; n];
    for (ci, rates) in spec.categories.iter().enumerate() {
        let shared = ar1(&mut rng, n + 2 * pad, spec.latent.ar);
        let own = ar1(&mut rng, n, spec.latent.ar);
        let coupling = spec.couplings.iter().find(|k| k.category == rates.category);
        for t in 0..n {
            let social_driver = shared[t + pad];
            let call_driver = match coupling {
                Some(k) => {
                    let sign = if k.sign == CorrelationSign::Negative { -1.0 } else { 1.0 };
                    // |lag| <= pad, so the index stays inside the padded driver.
                    let lagged = shared[((t + pad) as i64 - k.lag) as usize];
                    sign * k.strength * lagged + (1.0 - k.strength * k.strength).sqrt() * own[t]
                }
                None => own[t],
            };
            let noise = if spec.noise_std > 0.0 { spec.noise_std * normal.sample(&mut rng) } else { 0.0 };
            let social_mean = rates.social_rate * (sigma * social_driver - 0.5 * sigma * sigma).exp();
            let call_mean = rates.call_rate * (sigma * call_driver - 0.5 * sigma * sigma + noise).exp();
            daily_posts[t][ci] = poisson(&mut rng, social_mean);
            let day = spec.range.start() + Days::new(t as u64);
            // Draw even when closed so the stream does not depend on the calendar.
            let calls = poisson(&mut rng, call_mean);
            daily_calls[t][ci] = if spec.is_closed(day) { 0 } else { calls };
        }
    }

    let mut calls = Vec::new();
    let mut posts = Vec::new();
    for t in 0..n {
        let day = spec.range.start() + Days::new(t as u64);
        for (ci, rates) in spec.categories.iter().enumerate() {
            let templates = call_templates(&rates.category);
            for _ in 0..daily_calls[t][ci] {
                let (code, text) = templates[rng.random_range(0..templates.len())];
                calls.push(CallRecord {
                    id: format!("C{:07}", calls.len() + 1),
                    date: day,
                    duration: Some(rng.random_range(30..1200)),
                    disposition_code: code.to_string(),
                    disposition_text: text.to_string(),
                });
            }
            let texts = post_templates(&rates.category);
            for _ in 0..daily_posts[t][ci] {
                let text = texts[rng.random_range(0..texts.len())];
                let second = rng.random_range(0..86_400u32);
                let time = NaiveTime::from_num_seconds_from_midnight_opt(second, 0).expect("second of day");
                let instant = Utc.from_utc_datetime(&day.and_time(time)).fixed_offset();
                posts.push(PostRecord {
                    post_id: format!("P{:07}", posts.len() + 1),
                    text: text.to_string(),
                    post_time: PostTime::Instant(instant),
                    user_name: format!("user{}", rng.random_range(0..500)),
                });
            }
        }
    }
    Ok(SynthOutput { calls, posts })
}

pub const CALLS_FILE: &str = "calls.csv";
pub const POSTS_FILE: &str = "posts.jsonl";
pub const SPEC_FILE: &str = "synth.json";

/// Writes `calls.csv`, `posts.jsonl` and the spec as `synth.json` into
/// `dir`, creating it if needed.
pub fn write_fixture(dir: &Path, spec: &SynthSpec, output: &SynthOutput) -> Result<(), SynthError> {
    std::fs::create_dir_all(dir)?;
    write_call_records(BufWriter::new(File::create(dir.join(CALLS_FILE))?), &output.calls)?;
    write_posts_jsonl(BufWriter::new(File::create(dir.join(POSTS_FILE))?), &output.posts)?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join(SPEC_FILE))?), spec)?;
    Ok(())
}
