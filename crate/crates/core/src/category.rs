//! Topic categories.
//!
//! Six core categories partition every call-centre enquiry. Extension
//! categories are keyword overlays (for example "refugee") that may overlap
//! the core ones and never take part in the partition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A topic category name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Study,
    Visit,
    Work,
    Permanent,
    Citizen,
    Other,
    /// A configured overlay category. Never equal to a core name.
    Extension(String),
}

impl Category {
    /// The core categories, in merging-rule order with the fallback last.
    pub const CORE: [Category; 6] = [
        Category::Study,
        Category::Visit,
        Category::Work,
        Category::Permanent,
        Category::Citizen,
        Category::Other,
    ];

    pub fn is_core(&self) -> bool {
        !matches!(self, Category::Extension(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Category::Study => "study",
            Category::Visit => "visit",
            Category::Work => "work",
            Category::Permanent => "permanent",
            Category::Citizen => "citizen",
            Category::Other => "other",
            Category::Extension(name) => name,
        }
    }

    /// Builds an extension category, rejecting empty names and names that
    /// collide with a core category.
    pub fn extension(name: &str) -> Result<Category, CategoryError> {
        let normalized = normalize(name);
        if normalized.is_empty() {
            return Err(CategoryError::Empty);
        }
        if core_from_name(&normalized).is_some() {
            return Err(CategoryError::CollidesWithCore(normalized));
        }
        Ok(Category::Extension(normalized))
    }
}

fn normalize(name: &str) -> String {
    name.trim()
        .to_lowercase()
        .replace(['_', '-'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn core_from_name(name: &str) -> Option<Category> {
    Category::CORE.iter().find(|c| c.name() == name).cloned()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CategoryError {
    #[error("category name is empty")]
    Empty,
    #[error("extension category `{0}` collides with a core category")]
    CollidesWithCore(String),
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a category name. Core names map to their variant, anything else
/// becomes an extension name. Underscores and hyphens read as spaces, so
/// `working_holidays` and `working holidays` name the same category.
impl FromStr for Category {
    type Err = CategoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = normalize(s);
        if normalized.is_empty() {
            return Err(CategoryError::Empty);
        }
        Ok(core_from_name(&normalized).unwrap_or(Category::Extension(normalized)))
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_core_and_extension_names() {
        assert_eq!("Work".parse::<Category>().unwrap(), Category::Work);
        assert_eq!(
            "working_holidays".parse::<Category>().unwrap(),
            Category::Extension("working holidays".into())
        );
        assert!("  ".parse::<Category>().is_err());
    }

    #[test]
    fn extension_cannot_shadow_core() {
        assert_eq!(
            Category::extension("Visit"),
            Err(CategoryError::CollidesWithCore("visit".into()))
        );
        assert!(Category::extension("refugee").is_ok());
    }

    #[test]
    fn serde_uses_plain_names() {
        let json = serde_json::to_string(&Category::Extension("skilled permanent".into())).unwrap();
        assert_eq!(json, "\"skilled permanent\"");
        let back: Category = serde_json::from_str("\"citizen\"").unwrap();
        assert_eq!(back, Category::Citizen);
    }
}
