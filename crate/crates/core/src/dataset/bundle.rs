//! Prepared dataset on disk, either as JSON or as the `CSDS` binary layout:
//!
//! ```text
//! "CSDS" | version u8 (=1) | input_length u32 | n_classes u32
//! n_classes x (name_len u32 | utf-8 name)
//! n_samples u32
//! n_samples x (id_len u32 | utf-8 id | label i32 (-1 = none) | input_length x f32)
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::DatasetBundle;
use super::PreparedSample;
use crate::error::{Error, Result};

pub const BUNDLE_MAGIC: &[u8; 4] = b"CSDS";
pub const BUNDLE_VERSION: u8 = 1;

pub fn encode_binary(bundle: &DatasetBundle) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + bundle.samples.len() * (bundle.input_length * 4 + 24));
    let put_str = |out: &mut Vec<u8>, s: &str| {
        out.extend((s.len() as u32).to_le_bytes());
        out.extend(s.as_bytes());
    };
    out.extend(BUNDLE_MAGIC);
    out.push(BUNDLE_VERSION);
    out.extend((bundle.input_length as u32).to_le_bytes());
    out.extend((bundle.class_names.len() as u32).to_le_bytes());
    for name in &bundle.class_names {
        put_str(&mut out, name);
    }
    out.extend((bundle.samples.len() as u32).to_le_bytes());
    for s in &bundle.samples {
        put_str(&mut out, &s.sample_id);
        out.extend(s.label.map_or(-1, |l| l as i32).to_le_bytes());
        for &v in &s.input {
            out.extend((v as f32).to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.offset < n {
            return Err(Error::Malformed { offset: self.offset, reason: "unexpected end of bundle".into() });
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let at = self.offset;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::Malformed { offset: at, reason: "invalid utf-8".into() })
    }
}

pub fn decode_binary(bytes: &[u8]) -> Result<DatasetBundle> {
    let mut c = Cursor { bytes, offset: 0 };
    if c.take(4)? != BUNDLE_MAGIC {
        return Err(Error::UnsupportedFormat("not a CSDS bundle".into()));
    }
    let version = c.take(1)?[0];
    if version != BUNDLE_VERSION {
        return Err(Error::UnsupportedFormat(format!("CSDS version {version}")));
    }
    let input_length = c.u32()? as usize;
    let n_classes = c.u32()? as usize;
    let class_names = (0..n_classes).map(|_| c.string()).collect::<Result<Vec<_>>>()?;
    let n_samples = c.u32()? as usize;
    let mut samples = Vec::with_capacity(n_samples.min(1 << 20));
    for _ in 0..n_samples {
        let sample_id = c.string()?;
        let label = i32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
        let raw = c.take(input_length * 4)?;
        let input = raw
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes(b.try_into().expect("4 bytes"))))
            .collect();
        let label = match label {
            -1 => None,
            l if l >= 0 => Some(l as usize),
            l => return Err(Error::Malformed { offset: c.offset, reason: format!("label {l}") }),
        };
        samples.push(PreparedSample { sample_id, label, input });
    }
    if c.offset != bytes.len() {
        return Err(Error::Malformed { offset: c.offset, reason: "trailing bytes".into() });
    }
    let bundle = DatasetBundle { input_length, class_names, samples, summary: None };
    bundle.validate()?;
    Ok(bundle)
}

/// Writes JSON when the path ends in `.json`, the binary layout otherwise.
pub fn save_bundle(bundle: &DatasetBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if path.extension().is_some_and(|e| e == "json") {
        serde_json::to_vec(bundle)?
    } else {
        encode_binary(bundle)
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads either encoding, decided by the leading magic.
pub fn load_bundle(path: impl AsRef<Path>) -> Result<DatasetBundle> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(BUNDLE_MAGIC) {
        decode_binary(&bytes)
    } else {
        let bundle: DatasetBundle = serde_json::from_slice(&bytes)?;
        bundle.validate()?;
        Ok(bundle)
    }
}
