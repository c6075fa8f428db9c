//! Curve catalog: JSON-lines records mapping labels to short-model
//! coefficients, conductors, and a_p overrides for bad primes.
//!
//! Override values are data supplied by the catalog, validated against the
//! Hasse bound and the model discriminant at load time.

use crate::curve::{CurveError, CurveQ};
use crate::hecke::ApTable;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog line {0}: {1}")]
    Parse(usize, serde_json::Error),
    #[error("catalog line {0}: {1}")]
    Invalid(usize, CurveError),
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("no catalog entry with label {0}")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CurveCatalogEntry {
    pub label: String,
    pub a: i64,
    pub b: i64,
    pub conductor: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ap_overrides: BTreeMap<u64, i64>,
}

impl CurveCatalogEntry {
    pub fn curve(&self) -> Result<CurveQ, CurveError> {
        CurveQ::from_i64(self.a, self.b, self.conductor, &self.label)
    }

    /// Curve plus its a_p table with the catalog overrides installed.
    pub fn ap_table(&self) -> Result<ApTable, CurveError> {
        ApTable::new(self.curve()?, self.ap_overrides.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    pub entries: Vec<CurveCatalogEntry>,
}

impl Catalog {
    /// Parses JSON lines, validating every entry (non-singular model,
    /// conductor support, override primes and Hasse bounds). Blank lines
    /// are allowed.
    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        let mut entries: Vec<CurveCatalogEntry> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: CurveCatalogEntry =
                serde_json::from_str(line).map_err(|e| CatalogError::Parse(i + 1, e))?;
            // full validation: curve model and override constraints
            entry
                .ap_table()
                .map_err(|e| CatalogError::Invalid(i + 1, e))?;
            if entries.iter().any(|e| e.label == entry.label) {
                return Err(CatalogError::DuplicateLabel(entry.label));
            }
            entries.push(entry);
        }
        Ok(Catalog { entries })
    }

    pub fn get(&self, label: &str) -> Result<&CurveCatalogEntry, CatalogError> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| CatalogError::UnknownLabel(label.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{"label":"37a-short","a":-16,"b":16,"conductor":37,"ap_overrides":{"2":-2,"37":-1}}
{"label":"27a-cm","a":0,"b":16,"conductor":27,"ap_overrides":{"2":0,"3":0}}
"#;

    #[test]
    fn parse_sample() {
        let cat = Catalog::parse(SAMPLE).unwrap();
        assert_eq!(cat.entries.len(), 2);
        let e = cat.get("37a-short").unwrap();
        assert_eq!(e.conductor, 37);
        assert_eq!(e.ap_overrides.get(&2), Some(&-2));
        let curve = e.curve().unwrap();
        assert_eq!(curve.disc, 151552);
        assert!(cat.get("nope").is_err());
    }

    #[test]
    fn rejects_bad_entries() {
        // singular model
        assert!(Catalog::parse(r#"{"label":"x","a":0,"b":0,"conductor":1}"#).is_err());
        // Hasse-violating override
        assert!(Catalog::parse(
            r#"{"label":"x","a":-16,"b":16,"conductor":37,"ap_overrides":{"2":9}}"#
        )
        .is_err());
        // override prime not dividing disc
        assert!(Catalog::parse(
            r#"{"label":"x","a":-16,"b":16,"conductor":37,"ap_overrides":{"5":1}}"#
        )
        .is_err());
        // duplicate labels
        let dup = r#"{"label":"x","a":-16,"b":16,"conductor":37}
{"label":"x","a":-16,"b":16,"conductor":37}"#;
        assert!(matches!(
            Catalog::parse(dup),
            Err(CatalogError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn round_trip() {
        let cat = Catalog::parse(SAMPLE).unwrap();
        let line = serde_json::to_string(&cat.entries[0]).unwrap();
        let back: CurveCatalogEntry = serde_json::from_str(&line).unwrap();
        assert_eq!(back, cat.entries[0]);
    }
}
