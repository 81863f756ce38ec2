//! Six call records become daily frequency and percentage series.

use chrono::NaiveDate;
use coupling::ingest::{parse_call_records, CallFormat, RuleSet};
use coupling::series::{CategorizedBatch, Strategy};
use coupling::{Category, DateRange};

const CALLS: &str = "\
ID,Date,Duration,Disposition Code,Disposition Code Text
ID1,6/12/2013,1min,457 visa,457 visa application progress
ID2,6/12/2013,10 min,student visa,574 visa
ID3,6/12/2013,3 min,457 visa,457 visa application progress
ID4,7/12/2013,15 min,600 visit,600 visit visa
ID5,7/12/2013,1min,600 visit,600 electronic visa
ID6,7/12/2013,5min,skilled migration,skilled selection
";

fn main() {
    let report = parse_call_records(CALLS.as_bytes(), &CallFormat::default()).expect("header");
    let batch = CategorizedBatch::from_calls(&report.records, &RuleSet::default());
    let range = DateRange::new(
        NaiveDate::from_ymd_opt(2013, 12, 6).unwrap(),
        NaiveDate::from_ymd_opt(2013, 12, 7).unwrap(),
    )
    .unwrap();

    println!("{:<12} {:<10} {:>9} {:>10}", "date", "category", "frequency", "percentage");
    for category in Category::CORE.iter() {
        let freq = batch.build_series(category, Strategy::Frequency, range).unwrap();
        let pct = batch.build_series(category, Strategy::Percentage, range).unwrap();
        for (i, day) in freq.dates().enumerate() {
            if freq.values[i].value > 0.0 {
                println!("{:<12} {:<10} {:>9} {:>10.4}", day.to_string(), category.to_string(), freq.values[i].value, pct.values[i].value);
            }
        }
    }
}
