use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::lifting::ApMap;
use crate::stl::{tree_equal, Formula};
use crate::syntax::{linearize, parse, FormatSpec, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Framework1,
    Framework2,
    Ingested,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Raw,
    Annotated,
    Crosschecked,
    Rejected,
}

impl Status {
    pub const ALL: [Status; 4] = [
        Status::Raw,
        Status::Annotated,
        Status::Crosschecked,
        Status::Rejected,
    ];

    pub fn can_transition(self, to: Status) -> bool {
        matches!(
            (self, to),
            (Status::Raw, Status::Annotated)
                | (Status::Annotated, Status::Crosschecked)
                | (Status::Annotated, Status::Rejected)
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Raw => "raw",
            Status::Annotated => "annotated",
            Status::Crosschecked => "crosschecked",
            Status::Rejected => "rejected",
        }
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Status::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown status `{s}`"))
    }
}

/// The lifted formula in all four text formats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Renderings {
    pub pre_order_symbol: String,
    pub pre_order_word: String,
    pub in_order_symbol: String,
    pub in_order_word: String,
}

impl Renderings {
    pub fn of(f: &Formula) -> Self {
        Renderings {
            pre_order_symbol: linearize(f, FormatSpec::PRE_SYMBOL),
            pre_order_word: linearize(f, FormatSpec::PRE_WORD),
            in_order_symbol: linearize(f, FormatSpec::IN_SYMBOL),
            in_order_word: linearize(f, FormatSpec::IN_WORD),
        }
    }

    pub fn get(&self, fmt: FormatSpec) -> &str {
        match fmt {
            FormatSpec::PRE_SYMBOL => &self.pre_order_symbol,
            FormatSpec::PRE_WORD => &self.pre_order_word,
            FormatSpec::IN_SYMBOL => &self.in_order_symbol,
            _ => &self.in_order_word,
        }
    }

    pub fn formula(&self) -> Result<Formula, ParseError> {
        parse(&self.pre_order_symbol, FormatSpec::PRE_SYMBOL)
    }

    /// Every rendering parses to the same tree.
    pub fn consistent(&self) -> bool {
        let Ok(base) = self.formula() else {
            return false;
        };
        FormatSpec::ALL.iter().all(|&fmt| {
            parse(self.get(fmt), fmt).is_ok_and(|f| tree_equal(&f, &base))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: String,
    /// Sentence before the change.
    pub nl: String,
    pub status: Status,
    pub actor: Option<String>,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    /// Framework2: the back-translated formula equals the synthesized one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_agreement: Option<bool>,
    /// Framework2: the synthesized formula (in-order/word).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_stl: Option<String>,
    /// Why the sentence and formula disagree, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_note: Option<String>,
    /// Ingestion: the original full sentence and formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_nl: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_stl: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub domain: String,
    pub lifted_nl: String,
    pub lifted_stl: Renderings,
    #[serde(default)]
    pub ap_map: Option<ApMap>,
    pub provenance: Provenance,
    pub status: Status,
    #[serde(default)]
    pub annotator: Option<String>,
    #[serde(default)]
    pub reviewer: Option<String>,
    pub version: u64,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    #[serde(default)]
    pub history: Vec<HistoryEntry>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl DatasetRecord {
    pub fn new(
        id: impl Into<String>,
        domain: impl Into<String>,
        lifted_nl: impl Into<String>,
        lifted_stl: &Formula,
        provenance: Provenance,
    ) -> Self {
        let now = Utc::now();
        DatasetRecord {
            id: id.into(),
            domain: domain.into(),
            lifted_nl: lifted_nl.into(),
            lifted_stl: Renderings::of(lifted_stl),
            ap_map: None,
            provenance,
            status: Status::Raw,
            annotator: None,
            reviewer: None,
            version: 1,
            created_at: now,
            updated_at: now,
            history: Vec::new(),
            metadata: Metadata::default(),
        }
    }

    pub fn formula(&self) -> Result<Formula, ParseError> {
        self.lifted_stl.formula()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renderings_round_trip() {
        let f = parse("((prop_2 imply prop_3) equal finally[55,273] prop_1)", FormatSpec::IN_WORD).unwrap();
        let r = DatasetRecord::new("x", "general", "s", &f, Provenance::Manual);
        assert!(r.lifted_stl.consistent());
        assert_eq!(r.lifted_stl.pre_order_symbol, "<-> -> prop_2 prop_3 F[55,273] prop_1");
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"status\":\"raw\""));
        let back: DatasetRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn inconsistent_renderings_detected() {
        let f = Formula::finally(None, Formula::prop(1));
        let mut r = Renderings::of(&f);
        r.in_order_word = "globally prop_1".into();
        assert!(!r.consistent());
    }

    #[test]
    fn transitions() {
        let allowed: Vec<(Status, Status)> = Status::ALL
            .iter()
            .flat_map(|&a| Status::ALL.iter().map(move |&b| (a, b)))
            .filter(|(a, b)| a.can_transition(*b))
            .collect();
        assert_eq!(allowed.len(), 3);
    }
}
