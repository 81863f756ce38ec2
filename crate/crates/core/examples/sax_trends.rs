//! SAX words for two series and a comparison of their trends, plus the
//! MINDIST lower bound.

use chrono::NaiveDate;
use coupling::series::{Observation, Source, Strategy, TopicSeries};
use coupling::symbolic::{compare_trends, mindist, sax, SaxOptions};
use coupling::Category;

fn series(source: Source, f: impl Fn(f64) -> f64) -> TopicSeries {
    TopicSeries {
        source,
        category: Category::Citizen,
        strategy: Strategy::Frequency,
        start: NaiveDate::from_ymd_opt(2014, 1, 6).unwrap(),
        values: (0..140).map(|t| Observation::present(f(t as f64))).collect(),
    }
}

fn main() {
    let social = series(Source::Social, |t| 50.0 + 20.0 * (t / 20.0).sin() + (t % 7.0));
    let calls = series(Source::Call, |t| 10.0 + 4.0 * (t / 20.0).sin() - 2.0 * (t / 45.0).cos());

    let result = compare_trends(&social, &calls, SaxOptions { word_length: Some(10), ..SaxOptions::default() }).unwrap();
    println!("weeks     {}", result.weeks.len());
    println!("social    {}", result.a.letters());
    println!("calls     {}", result.b.letters());
    println!("pearson   {:?}", result.comparison.pearson_on_indices);
    println!("trend     {}", result.comparison.label);

    let n = result.a_weekly.len();
    let (a, b) = (sax(&result.a_weekly, 10, 5).unwrap(), sax(&result.b_weekly, 10, 5).unwrap());
    println!("mindist   {:.4} (lower bound on the z-normalized distance, n = {n})", mindist(&a, &b, n).unwrap());
}
