use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::routing::DeploymentProfile;
use crate::telemetry::{ClassLabel, TelemetryRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerWire {
    layer_id: usize,
    loads: Vec<f64>,
}

/// One JSONL line: labels plus dense per-layer loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordWire {
    request_id: String,
    profile_id: String,
    group_id: String,
    class: ClassLabel,
    domain: String,
    wrapper: Option<String>,
    #[serde(default)]
    attributes: BTreeMap<String, bool>,
    layers: Vec<LayerWire>,
}

impl RecordWire {
    fn from_record(r: &TelemetryRecord, profile: &DeploymentProfile) -> Result<Self> {
        let layers = r
            .layers
            .keys()
            .map(|&l| {
                Ok(LayerWire {
                    layer_id: l,
                    loads: r.dense_layer(l, profile.experts(l)?),
                })
            })
            .collect::<Result<_>>()?;
        Ok(RecordWire {
            request_id: r.request_id.clone(),
            profile_id: r.profile_id.clone(),
            group_id: r.group_id.clone(),
            class: r.class_label,
            domain: r.domain.clone(),
            wrapper: r.wrapper.clone(),
            attributes: r.attributes.clone(),
            layers,
        })
    }

    fn into_record(self, profile: &DeploymentProfile) -> std::result::Result<TelemetryRecord, String> {
        let mut layers = BTreeMap::new();
        for l in self.layers {
            let expected = profile.experts(l.layer_id).map_err(|e| e.to_string())?;
            if l.loads.len() != expected {
                return Err(format!(
                    "layer {} has {} loads but profile {} has {} experts there",
                    l.layer_id,
                    l.loads.len(),
                    profile.profile_id,
                    expected
                ));
            }
            if layers.insert(l.layer_id, l.loads.into_iter().enumerate().collect()).is_some() {
                return Err(format!("layer {} listed twice", l.layer_id));
            }
        }
        Ok(TelemetryRecord {
            request_id: self.request_id,
            profile_id: self.profile_id,
            group_id: self.group_id,
            class_label: self.class,
            domain: self.domain,
            wrapper: self.wrapper,
            attributes: self.attributes,
            layers,
        })
    }
}

/// Read records in file order, validating each line against the profile.
/// Blank lines are skipped.
pub fn read_telemetry(path: &Path, profile: &DeploymentProfile) -> Result<Vec<TelemetryRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let wire: RecordWire = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if wire.profile_id != profile.profile_id {
            return Err(Error::Alignment(format!(
                "{}:{}: record {} belongs to profile {}, expected {}",
                path.display(),
                line_no,
                wire.request_id,
                wire.profile_id,
                profile.profile_id
            )));
        }
        let record = wire.into_record(profile).map_err(parse_err)?;
        record
            .validate(profile)
            .map_err(|e| parse_err(e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

/// Serialize records as JSONL; layers are written densely over the profile's experts.
pub fn telemetry_to_jsonl(records: &[TelemetryRecord], profile: &DeploymentProfile) -> Result<String> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(&RecordWire::from_record(r, profile)?)?);
        text.push('\n');
    }
    Ok(text)
}

pub fn write_telemetry(path: &Path, records: &[TelemetryRecord], profile: &DeploymentProfile) -> Result<()> {
    write_atomic(path, telemetry_to_jsonl(records, profile)?.as_bytes())
}
