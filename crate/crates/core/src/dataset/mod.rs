//! Model inputs: classic pcap ingestion with Ethernet stripping and IPv4
//! address masking, CSV feature tables, seeded class balancing and the
//! on-disk bundle format.

mod bundle;
mod pcap;
mod preprocess;
pub mod synthetic;
mod table;
mod undersample;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bundle::{decode_binary, encode_binary, load_bundle, save_bundle, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use pcap::{
    parse_pcap, read_pcap_file, write_pcap, Packet, PcapCapture, PcapHeader, LINKTYPE_ETHERNET,
    PCAP_MAGIC, PCAP_MAGIC_SWAPPED,
};
pub use preprocess::{preprocess_frame, preprocess_packet, PacketError, SkipReason, PACKET_INPUT_LENGTH};
pub use table::{load_csv, LABEL_COLUMN};
pub use undersample::{undersample, ClassCount, DatasetSummary};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedSample {
    pub sample_id: String,
    pub label: Option<usize>,
    pub input: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub input_length: usize,
    pub class_names: Vec<String>,
    pub samples: Vec<PreparedSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<DatasetSummary>,
}

impl DatasetBundle {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for s in &self.samples {
            if s.input.len() != self.input_length {
                return Err(Error::ShapeMismatch(format!(
                    "sample `{}` has {} values, bundle length is {}",
                    s.sample_id,
                    s.input.len(),
                    self.input_length
                )));
            }
            if s.input.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidTable(format!("sample `{}` has values outside [0, 1]", s.sample_id)));
            }
            if let Some(label) = s.label {
                if label >= self.class_names.len() {
                    return Err(Error::LabelOutOfRange { label, num_classes: self.class_names.len() });
                }
            }
            if !seen.insert(s.sample_id.as_str()) {
                return Err(Error::InvalidTable(format!("duplicate sample id `{}`", s.sample_id)));
            }
        }
        Ok(())
    }

    pub fn sample(&self, id: &str) -> Option<&PreparedSample> {
        self.samples.iter().find(|s| s.sample_id == id)
    }
}

/// `{ "files": { "<name>.pcap": "<class>" } }`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelManifest {
    pub files: BTreeMap<String, String>,
}

/// Counters gathered while turning captures into samples.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub files: usize,
    pub packets: usize,
    pub skipped: BTreeMap<SkipReason, usize>,
    pub malformed: usize,
    pub truncated_records: usize,
}

/// Reads every capture named in the manifest from `dir`, labels its packets
/// with the file's class and preprocesses them. Class indices follow the
/// sorted class names. Sample ids are `<file>#<packet index>`.
pub fn ingest_pcaps(dir: &Path, manifest: &LabelManifest) -> Result<(DatasetBundle, IngestReport)> {
    let class_names: Vec<String> =
        manifest.files.values().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut report = IngestReport::default();
    let mut samples = Vec::new();
    for (file, class) in &manifest.files {
        let class_index = class_names.binary_search(class).expect("class collected above");
        let capture = read_pcap_file(dir.join(file)).map_err(|e| e.in_file(file.clone()))?;
        if capture.header.link_type != LINKTYPE_ETHERNET {
            return Err(Error::UnsupportedFormat(format!(
                "link type {} (only Ethernet captures are supported)",
                capture.header.link_type
            ))
            .in_file(file.clone()));
        }
        report.files += 1;
        report.truncated_records += capture.truncated_records;
        for (i, packet) in capture.packets.iter().enumerate() {
            report.packets += 1;
            match preprocess_packet(packet, format!("{file}#{i}")) {
                Ok(mut sample) => {
                    sample.label = Some(class_index);
                    samples.push(sample);
                }
                Err(PacketError::Skipped { reason, .. }) => {
                    *report.skipped.entry(reason).or_default() += 1;
                }
                Err(PacketError::Malformed { .. }) => report.malformed += 1,
            }
        }
    }
    let bundle = DatasetBundle { input_length: PACKET_INPUT_LENGTH, class_names, samples, summary: None };
    Ok((bundle, report))
}
