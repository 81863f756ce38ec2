//! Acceptance gate. One test per criterion; each prints a single
//! `PASS`/`FAIL` line (run with `--nocapture` to see them) and fails if
//! its criterion is not met.

use std::time::{Duration, Instant};

use chrono::NaiveDate;
use coupling::analysis::{AnalysisRequest, Defaults, Preprocessing};
use coupling::correlate::{cross_correlation, CorrelationSign};
use coupling::decompose::decompose_additive;
use coupling::ingest::{parse_call_records, CallFormat, CallRecord, RuleSet};
use coupling::series::{CategorizedBatch, Observation, Source, Strategy, TopicSeries};
use coupling::symbolic::{breakpoints, mean_std, mindist, sax};
use coupling::synth::{generate, write_fixture, CategoryRates, Coupling, LatentParams, SynthSpec};
use coupling::{Category, Dataset, DateRange};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn gate(name: &str, budget: Duration, check: impl FnOnce() -> Outcome) {
    let started = Instant::now();
    let result = check();
    let elapsed = started.elapsed();
    let in_budget = elapsed <= budget;
    let passed = result.passed && in_budget;
    println!(
        "{} {name}: {} [{:.2}s of {}s]",
        if passed { "PASS" } else { "FAIL" },
        result.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(result.passed, "{name}: {}", result.detail);
    assert!(in_budget, "{name}: took {elapsed:?}, budget {budget:?}");
}

fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn value_on(series: &TopicSeries, date: NaiveDate) -> Observation {
    series.values[(date - series.start).num_days() as usize]
}

#[test]
fn table1_to_table2() {
    gate("table1_to_table2", Duration::from_secs(1), || {
        let csv = "ID,Date,Duration,Disposition Code,Disposition Code Text\n\
                   ID1,6/12/2013,1min,457 visa,457 visa application progress\n\
                   ID2,6/12/2013,10 min,student visa,574 visa\n\
                   ID3,6/12/2013,3 min,457 visa,457 visa application progress\n\
                   ID4,7/12/2013,15 min,600 visit,600 visit visa\n\
                   ID5,7/12/2013,1min,600 visit,600 electronic visa\n\
                   ID6,7/12/2013,5min,skilled migration,skilled selection\n";
        let report = parse_call_records(csv.as_bytes(), &CallFormat::default()).unwrap();
        if !report.errors.is_empty() || report.records.len() != 6 {
            return outcome(false, format!("parsed {} rows, {} errors", report.records.len(), report.errors.len()));
        }
        let batch = CategorizedBatch::from_calls(&report.records, &RuleSet::default());
        let range = DateRange::new(day(2013, 12, 6), day(2013, 12, 7)).unwrap();
        let expected = [
            (Category::Work, day(2013, 12, 6), 2.0, 2.0 / 3.0),
            (Category::Study, day(2013, 12, 6), 1.0, 1.0 / 3.0),
            (Category::Visit, day(2013, 12, 7), 2.0, 2.0 / 3.0),
            (Category::Permanent, day(2013, 12, 7), 1.0, 1.0 / 3.0),
        ];
        let mut mismatches = Vec::new();
        for (category, date, freq, pct) in &expected {
            let f = value_on(&batch.build_series(category, Strategy::Frequency, range).unwrap(), *date);
            let p = value_on(&batch.build_series(category, Strategy::Percentage, range).unwrap(), *date);
            if f != Observation::present(*freq) || p != Observation::present(*pct) {
                mismatches.push(format!("{category} {date}: {f:?} {p:?}"));
            }
        }
        outcome(mismatches.is_empty(), format!("{} rows checked exactly; mismatches: {mismatches:?}", expected.len()))
    });
}

// Transcribed from the five merging rules with their original casing.
const RULE_TOKENS: [(&str, &[&str]); 5] = [
    ("study", &["eStudent", "student", "560", "570", "571", "572", "573", "574", "575", "576", "temp grad"]),
    (
        "visit",
        &[
            "600", "676", "e600", "e651", "e676", "eta", "transit", "business visitor", "eVisitor", "visitor",
            "sponsor visitor", "medical treatment", "carer",
        ],
    ),
    (
        "work",
        &["400", "417", "456", "457", "462", "e400", "e417", "e457", "e462", "temp long", "temp short", "whm"],
    ),
    (
        "permanent",
        &[
            "gsm",
            "family migration",
            "professional migration",
            "partner migration",
            "rrv",
            "adoption",
            "adult migrant English program",
            "business skills",
            "cers",
            "employer sponsored",
            "employees",
            "employers",
            "NZ Family Relationship",
            "parent",
            "refugee",
            "remaining relative",
            "skilled migration",
            "skill select",
            "family and living",
        ],
    ),
    ("citizen", &["citizenship", "conferral", "declaratory visa", "descent", "renunciation", "resumption"]),
];

fn call_with_code(code: &str) -> CallRecord {
    CallRecord {
        id: "ID1".into(),
        date: day(2013, 12, 6),
        duration: None,
        disposition_code: code.into(),
        disposition_text: String::new(),
    }
}

#[test]
fn merging_rule_conformance() {
    gate("merging_rule_conformance", Duration::from_secs(1), || {
        let rules = RuleSet::default();
        let mut total = 0;
        let mut failures = Vec::new();
        for (category, tokens) in RULE_TOKENS {
            let expected: Category = category.parse().unwrap();
            for token in tokens {
                for text in [token.to_string(), format!("Question about {token} application"), token.to_uppercase()] {
                    total += 1;
                    let call = rules.categorize_call(&call_with_code(&text));
                    let post = rules.categorize_text(&text);
                    if call != expected || !post.contains(&expected) {
                        failures.push(format!("{text:?} -> {call}"));
                    }
                }
            }
        }
        let negatives = [
            "5600", "1560", "e560", "4570", "6000", "e6000", "4578", "beta", "transparent", "officers",
            "studentship", "visitors centre", "parents",
        ];
        for text in negatives {
            total += 1;
            if rules.categorize_call(&call_with_code(text)) != Category::Other {
                failures.push(format!("{text:?} -> {}", rules.categorize_call(&call_with_code(text))));
            }
        }
        outcome(failures.is_empty(), format!("{}/{total} cases; failures: {failures:?}", total - failures.len()))
    });
}

fn series_of(values: Vec<f64>) -> TopicSeries {
    TopicSeries {
        source: Source::Call,
        category: Category::Work,
        strategy: Strategy::Frequency,
        start: day(2014, 1, 1),
        values: values.into_iter().map(Observation::present).collect(),
    }
}

/// Trend, seasonal figures and irregular part computed the slow way.
fn decomposition_oracle(x: &[f64], period: usize) -> (Vec<Option<f64>>, Vec<f64>, Vec<Option<f64>>) {
    let n = x.len();
    let half = period / 2;
    let mut trend = vec![None; n];
    for t in half..n - half {
        let mut sum = 0.0;
        let mut weight = 0.0;
        for k in 0..=2 * half {
            let w = if period.is_multiple_of(2) && (k == 0 || k == 2 * half) { 0.5 } else { 1.0 };
            sum += w * x[t - half + k];
            weight += w;
        }
        trend[t] = Some(sum / weight);
    }
    let mut figures = Vec::new();
    for pos in 0..period {
        let detrended: Vec<f64> =
            (0..n).filter(|t| t % period == pos).filter_map(|t| trend[t].map(|tr| x[t] - tr)).collect();
        figures.push(detrended.iter().sum::<f64>() / detrended.len() as f64);
    }
    let mean = figures.iter().sum::<f64>() / period as f64;
    let figures: Vec<f64> = figures.iter().map(|f| f - mean).collect();
    let irregular = (0..n).map(|t| trend[t].map(|tr| x[t] - tr - figures[t % period])).collect();
    (trend, figures, irregular)
}

fn max_gap(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

#[test]
fn decomposition_suite() {
    gate("decomposition_suite", Duration::from_secs(5), || {
        let period = 7;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let n = rng.random_range(2 * period..200);
            let x: Vec<f64> = (0..n)
                .map(|t| 50.0 + 0.1 * t as f64 + 10.0 * ((t % period) as f64) + rng.random_range(-5.0..5.0))
                .collect();
            let d = decompose_additive(&series_of(x.clone()), period).unwrap();
            let (trend, figures, irregular) = decomposition_oracle(&x, period);

            let oracle_gap = max_gap(&d.trend, &trend)
                .max(max_gap(&d.irregular, &irregular))
                .max(d.figures.iter().zip(&figures).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            let centring = d.figures.iter().sum::<f64>().abs();
            let reconstruction = (0..n)
                .filter_map(|t| Some((d.trend[t]? + d.seasonal[t] + d.irregular[t]? - x[t]).abs()))
                .fold(0.0, f64::max);
            let c = rng.random_range(-100.0..100.0);
            let shifted = decompose_additive(&series_of(x.iter().map(|v| v + c).collect()), period).unwrap();
            let moved: Vec<Option<f64>> = d.trend.iter().map(|t| t.map(|t| t + c)).collect();
            let shift = max_gap(&shifted.trend, &moved)
                .max(max_gap(&shifted.irregular, &d.irregular))
                .max(shifted.seasonal.iter().zip(&d.seasonal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            worst = worst.max(oracle_gap).max(centring).max(reconstruction).max(shift);
        }
        outcome(worst <= 1e-9, format!("50 series, worst deviation {worst:.2e} (tolerance 1e-9)"))
    });
}

fn core_percentage_sums(batch: &CategorizedBatch, range: DateRange) -> (usize, f64) {
    let series: Vec<TopicSeries> =
        Category::CORE.iter().map(|c| batch.build_series(c, Strategy::Percentage, range).unwrap()).collect();
    let mut days = 0;
    let mut worst = 0.0f64;
    for t in 0..range.num_days() {
        if series[0].values[t].present {
            days += 1;
            let sum: f64 = series.iter().map(|s| s.values[t].value).sum();
            worst = worst.max((sum - 1.0).abs());
        }
    }
    (days, worst)
}

#[test]
fn percentage_normalization() {
    gate("percentage_normalization", Duration::from_secs(1), || {
        let rules = RuleSet::default();
        let texts = ["457 visa", "574 visa", "600 visit", "skilled migration", "citizenship", "general enquiry", "passport"];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let range = DateRange::new(day(2014, 1, 1), day(2014, 3, 31)).unwrap();
        let calls: Vec<CallRecord> = (0..3000)
            .map(|i| CallRecord {
                id: format!("R{i}"),
                date: range.start() + chrono::Days::new(rng.random_range(0..range.num_days() as u64)),
                duration: None,
                disposition_code: texts[rng.random_range(0..texts.len())].into(),
                disposition_text: String::new(),
            })
            .collect();
        let (random_days, random_worst) = core_percentage_sums(&CategorizedBatch::from_calls(&calls, &rules), range);

        let year = DateRange::new(day(2014, 1, 1), day(2014, 12, 31)).unwrap();
        let spec = SynthSpec::coupled(year, Category::Visit, 2, CorrelationSign::Positive, 0.9, 3);
        let out = generate(&spec).unwrap();
        let dataset = Dataset::from_records(&out.calls, &out.posts, &rules, chrono::FixedOffset::east_opt(0).unwrap());
        let (call_days, call_worst) = core_percentage_sums(&dataset.calls, year);
        let (post_days, post_worst) = core_percentage_sums(&dataset.posts, year);

        let worst = random_worst.max(call_worst).max(post_worst);
        outcome(
            worst <= 1e-9 && random_days > 0 && call_days > 0 && post_days > 0,
            format!(
                "present days: random {random_days}, synth calls {call_days}, synth posts {post_days}; worst |sum - 1| {worst:.2e}"
            ),
        )
    });
}

fn random_observations(rng: &mut ChaCha8Rng, n: usize) -> Vec<Observation> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.1) {
                Observation::missing()
            } else {
                Observation::present(rng.random_range(-10.0..10.0))
            }
        })
        .collect()
}

#[test]
fn ccf_identities() {
    gate("ccf_identities", Duration::from_secs(5), || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0f64;
        let mut compared = 0;
        for _ in 0..100 {
            let n = rng.random_range(30..150);
            let x = random_observations(&mut rng, n);
            let y = random_observations(&mut rng, n);
            worst = worst.max((cross_correlation(&x, &x, 0, 8).unwrap() - 1.0).abs());
            let (a, b) = (rng.random_range(0.5..5.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 }, rng.random_range(-50.0..50.0));
            let (c, d) = (rng.random_range(0.5..5.0), rng.random_range(-50.0..50.0));
            let affine = |s: &[Observation], scale: f64, offset: f64| -> Vec<Observation> {
                s.iter().map(|o| Observation { value: scale * o.value + offset, present: o.present }).collect()
            };
            let (xa, yc) = (affine(&x, a, b), affine(&y, c, d));
            for h in -7i64..=7 {
                let forward = cross_correlation(&x, &y, h, 8).unwrap();
                let backward = cross_correlation(&y, &x, -h, 8).unwrap();
                let transformed = cross_correlation(&xa, &yc, h, 8).unwrap();
                worst = worst.max((forward - backward).abs()).max((transformed - a.signum() * forward).abs());
                compared += 1;
            }
        }
        outcome(worst <= 1e-9, format!("100 pairs, {compared} lags, worst deviation {worst:.2e} (tolerance 1e-9)"))
    });
}

/// Synthetic dataset with one coupled category plus background traffic.
fn delay_spec(lag: i64, strength: f64, seed: u64) -> SynthSpec {
    let range = DateRange::new(day(2014, 1, 1), day(2014, 12, 31)).unwrap();
    SynthSpec {
        range,
        categories: vec![
            CategoryRates { category: Category::Work, social_rate: 30.0, call_rate: 30.0 },
            CategoryRates { category: Category::Other, social_rate: 10.0, call_rate: 10.0 },
        ],
        couplings: vec![Coupling { category: Category::Work, lag, sign: CorrelationSign::Positive, strength }],
        weekend_closure: true,
        closed_days: Vec::new(),
        noise_std: 0.0,
        latent: LatentParams::default(),
        seed,
    }
}

/// Generates, writes and re-ingests the fixture, then correlates the
/// seasonally adjusted frequency series.
fn end_to_end_delay(spec: &SynthSpec) -> (i64, CorrelationSign, f64) {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(spec).unwrap();
    write_fixture(dir.path(), spec, &out).unwrap();
    let (dataset, rejected) = Dataset::ingest_files(
        &[dir.path().join("calls.csv")],
        &[dir.path().join("posts.jsonl")],
        &coupling::config::Config::default(),
    )
    .unwrap();
    assert!(rejected.is_empty());
    let mut req = AnalysisRequest::new(Category::Work, &Defaults::default());
    req.preprocessing = Preprocessing::Adjusted;
    let report = dataset.correlation(&req).unwrap();
    (report.delay.delay, report.delay.sign, report.delay.peak_correlation)
}

#[test]
fn delay_recovery() {
    gate("delay_recovery", Duration::from_secs(60), || {
        let runs = 100;
        let mut lines = Vec::new();
        let mut ok = true;
        for d in 0..=5i64 {
            let hits = (0..runs)
                .filter(|seed| {
                    let (delay, sign, _) = end_to_end_delay(&delay_spec(d, 0.95, 1000 * d as u64 + seed));
                    delay == -d && sign == CorrelationSign::Positive
                })
                .count();
            ok &= hits * 100 >= 95 * runs as usize;
            lines.push(format!("d={d}: {hits}/{runs}"));
        }
        let quiet = (0..runs).filter(|seed| end_to_end_delay(&delay_spec(0, 0.0, 9000 + seed)).2.abs() < 0.3).count();
        ok &= quiet * 100 >= 90 * runs as usize;
        lines.push(format!("rho=0 peak<0.3: {quiet}/{runs}"));
        outcome(ok, lines.join(", "))
    });
}

fn normal_cdf_by_quadrature(z: f64) -> f64 {
    // Composite Simpson on the density from 0 to z.
    let steps = 2000;
    let h = z / steps as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut sum = pdf(0.0) + pdf(z);
    for k in 1..steps {
        sum += pdf(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + sum * h / 3.0
}

fn quantile_by_bisection(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_by_quadrature(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn znorm(x: &[f64]) -> Vec<f64> {
    let (m, s) = mean_std(x);
    x.iter().map(|v| (v - m) / s).collect()
}

#[test]
fn sax_suite() {
    gate("sax_suite", Duration::from_secs(30), || {
        let mut breakpoint_gap = 0.0f64;
        for a in 3..=20 {
            for (k, b) in breakpoints(a).iter().enumerate() {
                breakpoint_gap = breakpoint_gap.max((b - quantile_by_bisection((k + 1) as f64 / a as f64)).abs());
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut violations = 0;
        for _ in 0..1000 {
            let n = rng.random_range(8..128);
            let w = rng.random_range(1..=n.min(32));
            let a = rng.random_range(3..=12);
            let walk = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                let mut level = 0.0;
                (0..n)
                    .map(|_| {
                        level += rng.sample::<f64, _>(StandardNormal);
                        level
                    })
                    .collect()
            };
            let (x, y) = (walk(&mut rng), walk(&mut rng));
            let lower = mindist(&sax(&x, w, a).unwrap(), &sax(&y, w, a).unwrap(), n).unwrap();
            if lower > euclidean(&znorm(&x), &znorm(&y)) * (1.0 + 1e-12) {
                violations += 1;
            }
        }

        let noise: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut spread = 0.0f64;
        for a in 3..=10 {
            let word = sax(&noise, noise.len(), a).unwrap();
            for s in 0..a {
                let share = word.symbols.iter().filter(|&&v| v == s).count() as f64 / noise.len() as f64;
                spread = spread.max((share - 1.0 / a as f64).abs());
            }
        }

        let mut affine_mismatches = 0;
        for _ in 0..200 {
            let n = rng.random_range(10..100);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let (scale, offset) = (rng.random_range(0.1..20.0), rng.random_range(-100.0..100.0));
            let y: Vec<f64> = x.iter().map(|v| scale * v + offset).collect();
            let w = rng.random_range(1..=n);
            if sax(&x, w, 5).unwrap().symbols != sax(&y, w, 5).unwrap().symbols {
                affine_mismatches += 1;
            }
        }

        outcome(
            breakpoint_gap <= 1e-3 && violations == 0 && spread <= 0.05 && affine_mismatches == 0,
            format!(
                "breakpoint gap {breakpoint_gap:.1e}, lower-bound violations {violations}/1000, \
                 worst share deviation {spread:.4}, affine mismatches {affine_mismatches}/200"
            ),
        )
    });
}

#[test]
fn cli_http_parity() {
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    gate("cli_http_parity", Duration::from_secs(5), || {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec::coupled(
            DateRange::new(day(2014, 1, 1), day(2014, 6, 30)).unwrap(),
            Category::Work,
            2,
            CorrelationSign::Positive,
            0.9,
            42,
        );
        write_fixture(dir.path(), &spec, &generate(&spec).unwrap()).unwrap();
        let cache = dir.path().join("cache");
        let cache_arg = cache.to_str().unwrap().to_string();
        let calls = dir.path().join("calls.csv").to_str().unwrap().to_string();
        let posts = dir.path().join("posts.jsonl").to_str().unwrap().to_string();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = coupling::cli::run(
            ["coupling", "--cache", &cache_arg, "ingest", "--calls", &calls, "--posts", &posts],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));

        let dataset = Dataset::load_cache(&cache).unwrap();
        let app = coupling::service::router(dataset, Defaults::default(), None);
        let runtime = tokio::runtime::Builder::new_current_thread().build().unwrap();
        let param_sets: [&[(&str, &str)]; 3] = [
            &[("category", "work"), ("strategy", "frequency"), ("preprocessing", "adjusted"), ("max_lag", "5")],
            &[("category", "work"), ("strategy", "percentage"), ("preprocessing", "raw")],
            &[("category", "visit"), ("strategy", "percentage"), ("preprocessing", "trend"), ("fill", "linear")],
        ];
        let mut identical = 0;
        let mut notes = Vec::new();
        for params in param_sets {
            let mut args = vec!["coupling".to_string(), "--cache".into(), cache_arg.clone(), "correlate".into(), "--json".into()];
            for (k, v) in params {
                args.push(format!("--{}", k.replace('_', "-")));
                args.push(v.to_string());
            }
            let mut cli_out = Vec::new();
            let code = coupling::cli::run(args, &mut cli_out, &mut err);
            let cli_body = String::from_utf8(cli_out).unwrap().trim_end().to_string();

            let query = serde_urlencoded::to_string(params).unwrap();
            let request =
                axum::http::Request::get(format!("/v1/correlation?{query}")).body(axum::body::Body::empty()).unwrap();
            let (status, http_body) = runtime.block_on(async {
                let response = app.clone().oneshot(request).await.unwrap();
                let status = response.status();
                let bytes = response.into_body().collect().await.unwrap().to_bytes();
                (status, String::from_utf8(bytes.to_vec()).unwrap())
            });
            if code == 0 && status == 200 && cli_body == http_body {
                identical += 1;
            } else {
                notes.push(format!("{query}: exit {code}, status {status}"));
            }
        }
        outcome(
            identical == param_sets.len(),
            format!("{identical}/{} parameter sets byte-identical; {notes:?}", param_sets.len()),
        )
    });
}
