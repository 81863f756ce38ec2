//! Additive decomposition of a weekday-heavy call series, then seasonal
//! adjustment.

use chrono::NaiveDate;
use coupling::decompose::decompose_additive;
use coupling::series::{Observation, Source, Strategy, TopicSeries};
use coupling::Category;

fn main() {
    let start = NaiveDate::from_ymd_opt(2014, 1, 6).unwrap(); // a Monday
    let weekly = [40.0, 38.0, 35.0, 36.0, 30.0, 0.0, 0.0];
    let values = (0..56)
        .map(|t| Observation::present(weekly[t % 7] + 0.5 * t as f64 + if t % 11 == 0 { 6.0 } else { 0.0 }))
        .collect();
    let series = TopicSeries { source: Source::Call, category: Category::Work, strategy: Strategy::Frequency, start, values };

    let d = decompose_additive(&series, 7).expect("eight weeks is enough");
    println!("seasonal figures (Mon..Sun):");
    for (weekday, figure) in ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"].iter().zip(&d.figures) {
        println!("  {weekday} {figure:+8.3}");
    }

    let adjusted = d.seasonally_adjusted();
    println!("\n{:<12} {:>8} {:>8} {:>9}", "date", "observed", "trend", "adjusted");
    for (i, day) in series.dates().enumerate().take(14) {
        let trend = d.trend[i].map(|t| format!("{t:.2}")).unwrap_or_else(|| "-".into());
        println!("{:<12} {:>8.1} {trend:>8} {:>9.2}", day.to_string(), series.values[i].value, adjusted.values[i].value);
    }
}
