//! Merging rules on call dispositions and keyword search on posts.
//!
//! Pass a rule file as the first argument to use it instead of the
//! bundled rules.

use coupling::ingest::{CallRecord, RuleSet};

fn main() {
    let rules = match std::env::args().nth(1) {
        Some(path) => RuleSet::from_path(path.as_ref()).expect("rule file"),
        None => RuleSet::default(),
    };

    let dispositions = [
        ("457 visa", "457 visa application progress"),
        ("whm", "second year extension"),
        ("5600", "unknown code"),
        ("refugee", "humanitarian stream"),
        ("general enquiry", "change of address"),
    ];
    for (code, text) in dispositions {
        let call = CallRecord {
            id: "example".into(),
            date: chrono::NaiveDate::from_ymd_opt(2014, 1, 6).unwrap(),
            duration: None,
            disposition_code: code.into(),
            disposition_text: text.into(),
        };
        let labels = rules.label_call(&call);
        let overlays: Vec<String> = labels.overlays.iter().map(|c| c.to_string()).collect();
        println!("call {code:<16} -> {:<10} overlays {overlays:?}", labels.core.to_string());
    }

    for post in ["Got my 457 and my partner migration is next", "eta approved!", "lovely day in canberra"] {
        let categories: Vec<String> = rules.categorize_text(post).iter().map(|c| c.to_string()).collect();
        println!("post {post:?} -> {categories:?}");
    }
}
