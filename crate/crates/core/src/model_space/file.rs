//! Family files: TOML, one `[[member]]` record per density.
//!
//! ```toml
//! [[member]]
//! label = "theta=0.30"
//! probs = [0.7, 0.3]
//! ```

use serde::{Deserialize, Serialize};

use super::density::{validate_simplex, FiniteDensity, ModelFamily};
use crate::error::{Error, Result};

/// One family record as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
struct FamilyFile {
    member: Vec<MemberRecord>,
}

/// Validates records in order, reporting the first violation with its index.
pub fn family_from_records(records: &[MemberRecord]) -> Result<ModelFamily<f64>> {
    if records.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let k = records[0].probs.len();
    let mut members = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let invalid = |reason: String| Error::InvalidDensity {
            record: Some(i),
            label: r.label.clone(),
            reason,
        };
        validate_simplex(&r.probs).map_err(invalid)?;
        if r.probs.len() != k {
            return Err(invalid(format!("alphabet size {} differs from {k}", r.probs.len())));
        }
        members.push(FiniteDensity::new(r.probs.clone()).map_err(|e| invalid(e.to_string()))?);
        labels.push(r.label.clone().unwrap_or_else(|| format!("m{i}")));
    }
    ModelFamily::with_labels(members, labels)
}

pub fn family_to_records(family: &ModelFamily<f64>) -> Vec<MemberRecord> {
    family
        .members()
        .iter()
        .zip(family.labels())
        .map(|(m, l)| MemberRecord {
            label: Some(l.clone()),
            probs: m.probs().to_vec(),
        })
        .collect()
}

pub fn parse_family(text: &str) -> Result<ModelFamily<f64>> {
    let file: FamilyFile = toml::from_str(text).map_err(|e| Error::Config {
        field: "member".into(),
        message: e.to_string(),
    })?;
    family_from_records(&file.member)
}

pub fn family_to_toml(family: &ModelFamily<f64>) -> String {
    let file = FamilyFile {
        member: family_to_records(family),
    };
    toml::to_string(&file).expect("family serializes")
}
