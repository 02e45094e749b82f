//! Label regimes and the raw-label vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::schema::LABEL_FAMILIES_FILE;
use super::FlowRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassificationMode {
    Binary,
    Grouped,
    Multi,
}

impl ClassificationMode {
    pub const ALL: [ClassificationMode; 3] = [Self::Binary, Self::Grouped, Self::Multi];

    pub fn class_count(self) -> usize {
        match self {
            Self::Binary => 2,
            Self::Grouped => 8,
            Self::Multi => 34,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Binary => "binary",
            Self::Grouped => "grouped",
            Self::Multi => "multi",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Self::Binary => 0,
            Self::Grouped => 1,
            Self::Multi => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }
}

impl fmt::Display for ClassificationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassificationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(Self::Binary),
            "grouped" | "group" => Ok(Self::Grouped),
            "multi" | "multiclass" | "multi-class" => Ok(Self::Multi),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

pub const BENIGN_FAMILY: &str = "Benign";
pub const BINARY_CLASSES: [&str; 2] = ["Benign", "Attack"];

/// Raw label to attack-family table, parsed from `raw_label,family` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelFamilies {
    exact: BTreeMap<String, String>,
    prefixes: Vec<(String, String)>,
}

impl LabelFamilies {
    pub fn parse(text: &str) -> Result<Self> {
        let mut exact = BTreeMap::new();
        let mut prefixes = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line == "raw_label,family" {
                continue;
            }
            let Some((raw, family)) = line.split_once(',') else {
                return Err(Error::InvalidConfig(format!("label map line {}: expected `raw_label,family`", n + 1)));
            };
            let (raw, family) = (raw.trim().to_string(), family.trim().to_string());
            if raw.is_empty() || family.is_empty() {
                return Err(Error::InvalidConfig(format!("label map line {}: empty field", n + 1)));
            }
            match raw.strip_suffix('*') {
                Some(prefix) => prefixes.push((prefix.to_string(), family)),
                None => {
                    if exact.insert(raw.clone(), family).is_some() {
                        return Err(Error::InvalidConfig(format!("label `{raw}` listed twice")));
                    }
                }
            }
        }
        let families = Self { exact, prefixes };
        families.validate()?;
        Ok(families)
    }

    fn validate(&self) -> Result<()> {
        let multi = self.exact.len();
        let grouped = self.family_names().len();
        if multi != ClassificationMode::Multi.class_count() || grouped != ClassificationMode::Grouped.class_count() {
            return Err(Error::InvalidConfig(format!(
                "label map defines {multi} labels in {grouped} families; expected 34 labels in 8 families"
            )));
        }
        if !self.exact.values().any(|f| f == BENIGN_FAMILY) {
            return Err(Error::InvalidConfig(format!("label map has no `{BENIGN_FAMILY}` family")));
        }
        Ok(())
    }

    pub fn raw_labels(&self) -> impl Iterator<Item = &str> {
        self.exact.keys().map(String::as_str)
    }

    pub fn family_names(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.exact.values().collect();
        set.into_iter().cloned().collect()
    }

    pub fn family_of(&self, raw: &str) -> Option<&str> {
        self.exact.get(raw).map(String::as_str).or_else(|| {
            self.prefixes
                .iter()
                .find(|(p, _)| raw.starts_with(p.as_str()))
                .map(|(_, f)| f.as_str())
        })
    }
}

impl Default for LabelFamilies {
    fn default() -> Self {
        Self::parse(LABEL_FAMILIES_FILE).expect("bundled label map is valid")
    }
}

/// Maps raw labels onto contiguous class indices for one regime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocabulary {
    pub mode: ClassificationMode,
    /// Class names by index. Binary is `[Benign, Attack]`; the other regimes
    /// are sorted lexicographically.
    pub classes: Vec<String>,
    pub raw_to_class: BTreeMap<String, u16>,
    families: LabelFamilies,
}

impl LabelVocabulary {
    pub fn new(mode: ClassificationMode, families: &LabelFamilies) -> Self {
        let classes: Vec<String> = match mode {
            ClassificationMode::Binary => BINARY_CLASSES.iter().map(|s| s.to_string()).collect(),
            ClassificationMode::Grouped => families.family_names(),
            ClassificationMode::Multi => families.raw_labels().map(String::from).collect(),
        };
        let index: BTreeMap<&str, u16> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u16))
            .collect();
        let raw_to_class = families
            .exact
            .iter()
            .map(|(raw, family)| {
                let class = match mode {
                    ClassificationMode::Binary => u16::from(family != BENIGN_FAMILY),
                    ClassificationMode::Grouped => index[family.as_str()],
                    ClassificationMode::Multi => index[raw.as_str()],
                };
                (raw.clone(), class)
            })
            .collect();
        assert_eq!(classes.len(), mode.class_count());
        Self {
            mode,
            classes,
            raw_to_class,
            families: families.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Class index for a raw label, or `None` if the regime cannot place it.
    pub fn encode(&self, raw: &str) -> Option<u16> {
        if let Some(&c) = self.raw_to_class.get(raw) {
            return Some(c);
        }
        match self.mode {
            ClassificationMode::Binary => Some(1),
            ClassificationMode::Grouped => {
                let family = self.families.family_of(raw)?;
                self.classes.iter().position(|c| c == family).map(|i| i as u16)
            }
            ClassificationMode::Multi => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelPolicy {
    /// Fail on the first label the regime cannot place.
    Strict,
    /// Drop such rows and count them.
    #[default]
    Lenient,
}

/// Builds the regime's vocabulary and checks every record can be encoded
/// under `Strict`.
pub fn build_vocabulary(
    records: &[FlowRecord],
    mode: ClassificationMode,
    families: &LabelFamilies,
    policy: LabelPolicy,
) -> Result<LabelVocabulary> {
    let vocab = LabelVocabulary::new(mode, families);
    if policy == LabelPolicy::Strict {
        if let Some(r) = records.iter().find(|r| vocab.encode(&r.label).is_none()) {
            return Err(Error::UnknownLabel(r.label.clone()));
        }
    }
    Ok(vocab)
}
