//! Merging rules: keyword patterns that assign records to categories.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use super::records::{CallRecord, PostRecord};
use super::IngestError;
use crate::category::Category;

const DEFAULT_RULES: &str = include_str!("../../rules/default.toml");

/// Splits text into lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// A token or phrase matched against tokenized text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    tokens: Vec<String>,
    /// When set, the last token matches any token it prefixes.
    prefix: bool,
}

impl Pattern {
    pub fn parse(raw: &str) -> Result<Pattern, IngestError> {
        let trimmed = raw.trim();
        let (body, prefix) = match trimmed.strip_suffix('*') {
            Some(body) => (body, true),
            None => (trimmed, false),
        };
        let tokens = tokenize(body);
        if tokens.is_empty() {
            return Err(IngestError::Rules(format!("empty pattern `{raw}`")));
        }
        let pattern = Pattern { tokens, prefix };
        if prefix && pattern.is_numeric_code() {
            return Err(IngestError::Rules(format!("numeric code `{raw}` must match as a whole token")));
        }
        Ok(pattern)
    }

    /// Codes such as `560` or `e600`. These always match whole tokens.
    pub fn is_numeric_code(&self) -> bool {
        self.tokens.iter().any(|t| t.chars().any(|c| c.is_ascii_digit()))
    }

    pub fn is_prefix(&self) -> bool {
        self.prefix
    }

    /// Case-normalized text of the pattern.
    pub fn text(&self) -> String {
        let mut s = self.tokens.join(" ");
        if self.prefix {
            s.push('*');
        }
        s
    }

    pub fn matches_tokens(&self, text: &[String]) -> bool {
        let k = self.tokens.len();
        if text.len() < k {
            return false;
        }
        let (head, last) = self.tokens.split_at(k - 1);
        text.windows(k).any(|w| {
            w[..k - 1] == *head
                && if self.prefix { w[k - 1].starts_with(&last[0]) } else { w[k - 1] == last[0] }
        })
    }

    pub fn matches(&self, text: &str) -> bool {
        self.matches_tokens(&tokenize(text))
    }
}

/// One category and the patterns that select it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub category: Category,
    pub patterns: Vec<Pattern>,
}

impl Rule {
    fn matches_any(&self, texts: &[&[String]]) -> bool {
        self.patterns.iter().any(|p| texts.iter().any(|t| p.matches_tokens(t)))
    }
}

/// The core category of a call plus any overlay categories it also hits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallLabels {
    pub core: Category,
    pub overlays: Vec<Category>,
}

/// Ordered merging rules plus keyword-only overlay categories.
///
/// Immutable once built; share it freely across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
    overlays: Vec<Rule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default)]
    rule: Vec<RuleEntry>,
    #[serde(default)]
    overlay: Vec<RuleEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleEntry {
    category: String,
    patterns: Vec<String>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::from_toml_str(DEFAULT_RULES).expect("bundled rules are valid")
    }
}

impl RuleSet {
    /// The bundled rule file text.
    pub fn default_toml() -> &'static str {
        DEFAULT_RULES
    }

    pub fn from_toml_str(text: &str) -> Result<RuleSet, IngestError> {
        let file: RuleFile = toml::from_str(text).map_err(|e| IngestError::Rules(e.to_string()))?;
        let parse_entries = |entries: Vec<RuleEntry>, overlay: bool| -> Result<Vec<Rule>, IngestError> {
            entries
                .into_iter()
                .map(|e| {
                    let category = if overlay {
                        Category::extension(&e.category).map_err(|err| IngestError::Rules(err.to_string()))?
                    } else {
                        let c: Category = e.category.parse().map_err(|err: crate::category::CategoryError| {
                            IngestError::Rules(err.to_string())
                        })?;
                        if !c.is_core() {
                            return Err(IngestError::Rules(format!(
                                "`{}` is not a core category; declare it as an overlay",
                                e.category
                            )));
                        }
                        c
                    };
                    let patterns = e.patterns.iter().map(|p| Pattern::parse(p)).collect::<Result<_, _>>()?;
                    Ok(Rule { category, patterns })
                })
                .collect()
        };
        let rules = parse_entries(file.rule, false)?;
        let overlays = parse_entries(file.overlay, true)?;
        RuleSet::new(rules, overlays)
    }

    pub fn from_path(path: &Path) -> Result<RuleSet, IngestError> {
        let text = std::fs::read_to_string(path)?;
        RuleSet::from_toml_str(&text)
    }

    /// Validates and builds a rule set. Every core category except `other`
    /// needs at least one pattern, `other` must have none, and overlay
    /// names must be extension categories.
    pub fn new(rules: Vec<Rule>, overlays: Vec<Rule>) -> Result<RuleSet, IngestError> {
        for rule in &rules {
            if rule.category == Category::Other {
                return Err(IngestError::Rules("`other` is the fallback and takes no patterns".into()));
            }
            if !rule.category.is_core() {
                return Err(IngestError::Rules(format!("rule for non-core category `{}`", rule.category)));
            }
        }
        for core in Category::CORE.iter().filter(|c| **c != Category::Other) {
            let has_pattern = rules.iter().any(|r| &r.category == core && !r.patterns.is_empty());
            if !has_pattern {
                return Err(IngestError::Rules(format!("core category `{core}` has no patterns")));
            }
        }
        for overlay in &overlays {
            if overlay.category.is_core() {
                return Err(IngestError::Rules(format!("overlay `{}` collides with a core category", overlay.category)));
            }
            if overlay.patterns.is_empty() {
                return Err(IngestError::Rules(format!("overlay `{}` has no patterns", overlay.category)));
            }
        }
        Ok(RuleSet { rules, overlays })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn overlays(&self) -> &[Rule] {
        &self.overlays
    }

    /// The six core categories followed by overlay names, without repeats.
    pub fn categories(&self) -> Vec<Category> {
        let mut out: Vec<Category> = Category::CORE.to_vec();
        for o in &self.overlays {
            if !out.contains(&o.category) {
                out.push(o.category.clone());
            }
        }
        out
    }

    /// The first rule, in order, matching the disposition code or text.
    /// Falls back to `other`.
    pub fn categorize_call(&self, record: &CallRecord) -> Category {
        let code = tokenize(&record.disposition_code);
        let text = tokenize(&record.disposition_text);
        self.first_match(&[&code, &text])
    }

    fn first_match(&self, texts: &[&[String]]) -> Category {
        self.rules
            .iter()
            .find(|r| r.matches_any(texts))
            .map(|r| r.category.clone())
            .unwrap_or(Category::Other)
    }

    fn overlay_matches(&self, texts: &[&[String]]) -> Vec<Category> {
        let mut out: Vec<Category> = Vec::new();
        for o in self.overlays.iter().filter(|o| o.matches_any(texts)) {
            if !out.contains(&o.category) {
                out.push(o.category.clone());
            }
        }
        out
    }

    /// Core category plus overlays for a call.
    pub fn label_call(&self, record: &CallRecord) -> CallLabels {
        let code = tokenize(&record.disposition_code);
        let text = tokenize(&record.disposition_text);
        let texts: [&[String]; 2] = [&code, &text];
        CallLabels { core: self.first_match(&texts), overlays: self.overlay_matches(&texts) }
    }

    /// Every category, core or overlay, whose patterns occur in the post.
    /// Empty when nothing matches.
    pub fn categorize_post(&self, record: &PostRecord) -> BTreeSet<Category> {
        self.categorize_text(&record.text)
    }

    pub fn categorize_text(&self, text: &str) -> BTreeSet<Category> {
        let tokens = tokenize(text);
        let texts: [&[String]; 1] = [&tokens];
        let mut out: BTreeSet<Category> =
            self.rules.iter().filter(|r| r.matches_any(&texts)).map(|r| r.category.clone()).collect();
        out.extend(self.overlay_matches(&texts));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn call(code: &str, text: &str) -> CallRecord {
        CallRecord {
            id: "x".into(),
            date: NaiveDate::from_ymd_opt(2013, 12, 6).unwrap(),
            duration: None,
            disposition_code: code.into(),
            disposition_text: text.into(),
        }
    }

    #[test]
    fn call_examples() {
        let rules = RuleSet::default();
        assert_eq!(rules.categorize_call(&call("457 visa", "")), Category::Work);
        assert_eq!(rules.categorize_call(&call("", "574 visa")), Category::Study);
        assert_eq!(rules.categorize_call(&call("zzz unknown", "")), Category::Other);
        assert_eq!(rules.categorize_call(&call("skilled migration", "")), Category::Permanent);
    }

    #[test]
    fn post_examples() {
        let rules = RuleSet::default();
        let set = |cs: &[Category]| cs.iter().cloned().collect::<BTreeSet<_>>();
        assert_eq!(rules.categorize_text("my 574 visa was granted"), set(&[Category::Study]));
        assert_eq!(
            rules.categorize_text("applying for a 457 and citizenship"),
            set(&[Category::Work, Category::Citizen])
        );
        assert!(rules.categorize_text("nice weather").is_empty());
    }

    #[test]
    fn numeric_codes_match_whole_tokens_only() {
        let p = Pattern::parse("560").unwrap();
        assert!(p.matches("subclass 560 visa"));
        assert!(p.matches("(560)"));
        assert!(!p.matches("5600"));
        assert!(!p.matches("1560"));
        assert!(!p.matches("e560"));
        assert!(Pattern::parse("560*").is_err());
    }

    #[test]
    fn phrases_and_prefixes() {
        let p = Pattern::parse("Skill Select").unwrap();
        assert_eq!(p.text(), "skill select");
        assert!(p.matches("via SKILL-select today"));
        assert!(!p.matches("select skill"));
        let p = Pattern::parse("migra*").unwrap();
        assert!(p.matches("Migration"));
        assert!(!p.matches("immigration"));
    }

    #[test]
    fn overlays_do_not_change_core() {
        let rules = RuleSet::default();
        let labels = rules.label_call(&call("refugee", "humanitarian"));
        assert_eq!(labels.core, Category::Permanent);
        assert_eq!(labels.overlays, vec![Category::Extension("refugee".into())]);
        let labels = rules.label_call(&call("417 whm", ""));
        assert_eq!(labels.core, Category::Work);
        assert_eq!(labels.overlays, vec![Category::Extension("working holidays".into())]);
    }

    #[test]
    fn first_match_wins_on_overlap() {
        // "sponsor visitor" (visit) is checked before "employer sponsored" (permanent).
        let rules = RuleSet::default();
        assert_eq!(rules.categorize_call(&call("employer sponsored", "sponsor visitor")), Category::Visit);
    }

    #[test]
    fn validation() {
        let missing_work = r#"
            [[rule]]
            category = "study"
            patterns = ["student"]
        "#;
        assert!(RuleSet::from_toml_str(missing_work).is_err());
        let with_other = format!("{}\n[[rule]]\ncategory = \"other\"\npatterns = [\"x\"]\n", DEFAULT_RULES);
        assert!(RuleSet::from_toml_str(&with_other).is_err());
        let bad_overlay = format!("{}\n[[overlay]]\ncategory = \"work\"\npatterns = [\"x\"]\n", DEFAULT_RULES);
        assert!(RuleSet::from_toml_str(&bad_overlay).is_err());
        let names: Vec<String> = RuleSet::default().categories().iter().map(|c| c.to_string()).collect();
        assert_eq!(
            names,
            ["study", "visit", "work", "permanent", "citizen", "other", "refugee", "skilled permanent", "working holidays"]
        );
    }

    #[test]
    fn patterns_are_case_normalized() {
        let rules = RuleSet::default();
        let study = &rules.rules()[0];
        assert!(study.patterns.iter().all(|p| p.text() == p.text().to_lowercase()));
        assert!(study.patterns.iter().any(|p| p.text() == "estudent"));
    }
}
