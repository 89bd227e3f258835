//! Parameter container shared by every trained model.
//!
//! ```text
//! magic    b"KGRELCK1"
//! u64 LE   header length in bytes
//! header   UTF-8 JSON object; always has "format_version", "kind" and
//!          "segments": [{"name": .., "len": ..}, ..]
//! payload  each segment in header order as little-endian f64 values
//! ```
//!
//! Floats are copied bit-for-bit, so `load(save(x))` is exact.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"KGRELCK1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Deserialize)]
struct Envelope {
    format_version: u32,
    kind: String,
    segments: Vec<SegmentInfo>,
}

/// Write `header` (which must serialize to a JSON object) plus the segments.
pub fn write_container<W: Write, H: Serialize>(
    mut w: W,
    kind: &str,
    header: &H,
    segments: &[(String, &[f64])],
) -> Result<()> {
    let mut value = serde_json::to_value(header)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Format("checkpoint header must be a JSON object".into()))?;
    obj.insert("format_version".into(), FORMAT_VERSION.into());
    obj.insert("kind".into(), kind.into());
    let infos: Vec<SegmentInfo> = segments
        .iter()
        .map(|(name, data)| SegmentInfo {
            name: name.clone(),
            len: data.len(),
        })
        .collect();
    obj.insert("segments".into(), serde_json::to_value(&infos)?);
    let bytes = serde_json::to_vec(&value)?;
    w.write_all(MAGIC)?;
    w.write_all(&(bytes.len() as u64).to_le_bytes())?;
    w.write_all(&bytes)?;
    let mut buf = Vec::new();
    for (_, data) in segments {
        buf.clear();
        buf.reserve(data.len() * 8);
        for v in *data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a container of the expected `kind`, returning its typed header and
/// the segments in file order.
pub fn read_container<R: Read, H: DeserializeOwned>(
    mut r: R,
    kind: &str,
) -> Result<(H, Vec<(String, Vec<f64>)>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut header_bytes = vec![0u8; len];
    r.read_exact(&mut header_bytes)?;
    let value: serde_json::Value = serde_json::from_slice(&header_bytes)?;
    let env: Envelope = serde_json::from_value(value.clone())?;
    if env.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {}",
            env.format_version
        )));
    }
    if env.kind != kind {
        return Err(Error::Format(format!(
            "expected a {kind:?} checkpoint, found {:?}",
            env.kind
        )));
    }
    let header: H = serde_json::from_value(value)?;
    let mut segments = Vec::with_capacity(env.segments.len());
    for info in env.segments {
        let mut raw = vec![0u8; info.len * 8];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        segments.push((info.name, data));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format(
            "trailing bytes after checkpoint payload".into(),
        ));
    }
    Ok((header, segments))
}

/// Pop segments by expected name, in order.
pub(crate) struct SegmentReader {
    inner: std::vec::IntoIter<(String, Vec<f64>)>,
}

impl SegmentReader {
    pub(crate) fn new(segments: Vec<(String, Vec<f64>)>) -> Self {
        Self {
            inner: segments.into_iter(),
        }
    }

    pub(crate) fn take(&mut self, name: &str, len: usize) -> Result<Vec<f64>> {
        match self.inner.next() {
            Some((n, data)) if n == name && data.len() == len => Ok(data),
            Some((n, data)) => Err(Error::Format(format!(
                "expected segment {name:?} of length {len}, found {n:?} of length {}",
                data.len()
            ))),
            None => Err(Error::Format(format!("missing segment {name:?}"))),
        }
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        match self.inner.next() {
            None => Ok(()),
            Some((n, _)) => Err(Error::Format(format!("unexpected segment {n:?}"))),
        }
    }
}
