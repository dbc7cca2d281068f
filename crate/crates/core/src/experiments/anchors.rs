//! Frozen regression anchors: exact bit patterns of report estimates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ExperimentReport;
use crate::error::{Error, Result};

/// `"check_id/estimate"` → hexadecimal `f64` bits.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnchorFile {
    pub version: String,
    pub seed: u64,
    pub values: BTreeMap<String, String>,
}

impl AnchorFile {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("anchors serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("anchor file parse error: {e}")))
    }
}

pub fn extract_anchors(report: &ExperimentReport) -> AnchorFile {
    let values = report
        .checks
        .iter()
        .flat_map(|c| {
            c.estimates
                .iter()
                .map(move |(k, v)| (format!("{}/{k}", c.id), format!("{:016x}", v.to_bits())))
        })
        .collect();
    AnchorFile {
        version: report.version.clone(),
        seed: report.seed,
        values,
    }
}

fn decode(bits: &str) -> String {
    u64::from_str_radix(bits, 16)
        .map(|b| f64::from_bits(b).to_string())
        .unwrap_or_else(|_| bits.to_string())
}

/// Every mismatch between frozen and fresh anchors, as readable lines.
pub fn compare_anchors(frozen: &AnchorFile, fresh: &AnchorFile) -> Vec<String> {
    let mut out = Vec::new();
    if frozen.seed != fresh.seed {
        out.push(format!("seed {} != {}", frozen.seed, fresh.seed));
    }
    for (key, bits) in &frozen.values {
        match fresh.values.get(key) {
            None => out.push(format!("{key}: missing from report")),
            Some(now) if now != bits => {
                out.push(format!("{key}: frozen {} got {}", decode(bits), decode(now)));
            }
            Some(_) => {}
        }
    }
    for key in fresh.values.keys().filter(|k| !frozen.values.contains_key(*k)) {
        out.push(format!("{key}: not in anchor file"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatches_are_listed() {
        let mut a = AnchorFile::default();
        a.values.insert("x/v".into(), format!("{:016x}", 1.5f64.to_bits()));
        let mut b = a.clone();
        assert!(compare_anchors(&a, &b).is_empty());
        b.values.insert("x/v".into(), format!("{:016x}", 2.5f64.to_bits()));
        b.values.insert("y/v".into(), format!("{:016x}", 0.0f64.to_bits()));
        let diff = compare_anchors(&a, &b);
        assert_eq!(diff.len(), 2);
        assert!(diff[0].contains("1.5") && diff[0].contains("2.5"));
        assert_eq!(AnchorFile::from_json(&a.to_json()).unwrap(), a);
    }
}
