//! Declarative dataset schemas.
//!
//! A schema is a TOML document:
//!
//! ```toml
//! name = "census"
//! delimiter = ","            # any single character, or "whitespace"
//! comment_prefix = "|"       # lines starting with this are skipped
//! missing_tokens = ["?"]
//! missing_policy = "drop"    # or "impute" (mode / mean of the loaded rows)
//!
//! [label]
//! column = "income"
//! positive = [">50K", ">50K."]
//! negative = ["<=50K", "<=50K."]   # optional; omitted means "anything else"
//!
//! [protected]
//! column = "sex"
//! equals = ["Female"]        # or: less_than = 25.0
//!
//! [[filter]]                 # optional row filters, all must match
//! column = "marital"
//! equals = ["5"]
//!
//! [[columns]]
//! name = "age"
//! kind = "numeric"           # numeric | categorical | ignore
//!
//! [[columns]]
//! name = "workclass"
//! kind = "categorical"
//! values = ["Private", "State-gov"]   # optional admissible values
//! frozen = true                        # reject values not listed
//! ```
//!
//! Columns are listed in file order. The label column is never a feature;
//! the protected column is a feature unless `exclude_protected_feature`.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Comma,
    Whitespace,
    Char(char),
}

impl Delimiter {
    pub fn tokenize<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Char(c) => line.split(*c).map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

impl<'de> Deserialize<'de> for Delimiter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "," => Ok(Delimiter::Comma),
            "whitespace" => Ok(Delimiter::Whitespace),
            other => {
                let mut chars = other.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(Delimiter::Char(c)),
                    _ => Err(serde::de::Error::custom(format!(
                        "delimiter must be a single character or \"whitespace\", got {other:?}"
                    ))),
                }
            }
        }
    }
}

impl Serialize for Delimiter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Delimiter::Comma => s.serialize_str(","),
            Delimiter::Whitespace => s.serialize_str("whitespace"),
            Delimiter::Char(c) => s.serialize_str(&c.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Drop,
    Impute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
    #[serde(default)]
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    pub column: String,
    pub positive: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtectedSpec {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub less_than: Option<f64>,
}

/// Membership rule for the protected group, resolved from [`ProtectedSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProtectedRule {
    Equals(Vec<String>),
    LessThan(f64),
}

impl ProtectedRule {
    pub fn matches(&self, token: &str) -> std::result::Result<bool, String> {
        match self {
            ProtectedRule::Equals(values) => Ok(values.iter().any(|v| v == token)),
            ProtectedRule::LessThan(t) => token
                .parse::<f64>()
                .map(|v| v < *t)
                .map_err(|_| format!("protected value `{token}` is not numeric")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFilter {
    pub column: String,
    pub equals: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub name: String,
    #[serde(default)]
    pub delimiter: Delimiter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment_prefix: Option<String>,
    #[serde(default = "default_missing_tokens")]
    pub missing_tokens: Vec<String>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    #[serde(default)]
    pub exclude_protected_feature: bool,
    pub label: LabelSpec,
    pub protected: ProtectedSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filter: Vec<RowFilter>,
    pub columns: Vec<ColumnSpec>,
}

fn default_missing_tokens() -> Vec<String> {
    vec!["?".to_string()]
}

impl DatasetSchema {
    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: DatasetSchema =
            toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn protected_rule(&self) -> Result<ProtectedRule> {
        match (&self.protected.equals, self.protected.less_than) {
            (Some(values), None) if !values.is_empty() => Ok(ProtectedRule::Equals(values.clone())),
            (None, Some(t)) => Ok(ProtectedRule::LessThan(t)),
            _ => Err(Error::Schema(
                "protected group needs exactly one rule: `equals` (non-empty) or `less_than`".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("no columns declared".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
            if c.frozen && c.values.is_none() {
                return Err(Error::Schema(format!(
                    "column `{}` is frozen but lists no values",
                    c.name
                )));
            }
            if c.kind != ColumnKind::Categorical && c.values.is_some() {
                return Err(Error::Schema(format!(
                    "column `{}` lists values but is not categorical",
                    c.name
                )));
            }
        }
        if self.column_index(&self.label.column).is_none() {
            return Err(Error::Schema(format!(
                "label column `{}` is not declared",
                self.label.column
            )));
        }
        if self.label.positive.is_empty() {
            return Err(Error::Schema("label needs at least one positive value".into()));
        }
        if let Some(neg) = &self.label.negative {
            if neg.iter().any(|v| self.label.positive.contains(v)) {
                return Err(Error::Schema("a label value is both positive and negative".into()));
            }
        }
        if self.protected.column == self.label.column {
            return Err(Error::Schema("protected column cannot be the label column".into()));
        }
        if self.column_index(&self.protected.column).is_none() {
            return Err(Error::Schema(format!(
                "protected column `{}` is not declared",
                self.protected.column
            )));
        }
        self.protected_rule()?;
        for f in &self.filter {
            if self.column_index(&f.column).is_none() {
                return Err(Error::Schema(format!("filter column `{}` is not declared", f.column)));
            }
        }
        Ok(())
    }

    /// Whether column `idx` contributes encoded features.
    pub(crate) fn is_feature(&self, idx: usize) -> bool {
        let c = &self.columns[idx];
        if c.name == self.label.column || c.kind == ColumnKind::Ignore {
            return false;
        }
        !(self.exclude_protected_feature && c.name == self.protected.column)
    }
}

/// Schemas shipped with the crate, keyed by dataset name.
pub fn packaged(name: &str) -> Option<DatasetSchema> {
    let text = match name {
        "census" => include_str!("../../schemas/census.toml"),
        "german" => include_str!("../../schemas/german.toml"),
        "singles" => include_str!("../../schemas/singles.toml"),
        _ => return None,
    };
    Some(DatasetSchema::from_toml(text).expect("packaged schema is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
[label]
column = "y"
positive = ["1"]
[protected]
column = "g"
equals = ["a"]
[[columns]]
name = "g"
kind = "categorical"
[[columns]]
name = "y"
kind = "ignore"
"#;

    #[test]
    fn parses_minimal_schema_with_defaults() {
        let s = DatasetSchema::from_toml(MINIMAL).unwrap();
        assert_eq!(s.delimiter, Delimiter::Comma);
        assert_eq!(s.missing_policy, MissingPolicy::Drop);
        assert_eq!(s.missing_tokens, vec!["?"]);
        assert_eq!(s.protected_rule().unwrap(), ProtectedRule::Equals(vec!["a".into()]));
        assert!(s.is_feature(0));
        assert!(!s.is_feature(1));
    }

    #[test]
    fn rejects_two_protected_rules() {
        let text = MINIMAL.replace("equals = [\"a\"]", "equals = [\"a\"]\nless_than = 3.0");
        assert!(matches!(DatasetSchema::from_toml(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_undeclared_label() {
        let text = MINIMAL.replace("column = \"y\"", "column = \"nope\"");
        assert!(matches!(DatasetSchema::from_toml(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn whitespace_and_char_delimiters() {
        let text = format!("delimiter = \"whitespace\"\n{MINIMAL}");
        let s = DatasetSchema::from_toml(&text).unwrap();
        assert_eq!(s.delimiter.tokenize("  a   b\tc "), vec!["a", "b", "c"]);
        assert_eq!(Delimiter::Char(';').tokenize("a ; b"), vec!["a", "b"]);
    }

    #[test]
    fn packaged_schemas_load() {
        for name in ["census", "german", "singles"] {
            assert!(packaged(name).is_some(), "{name}");
        }
        assert!(packaged("nope").is_none());
    }
}
