//! Self-describing binary container shared by datasets and checkpoints.
//!
//! ```text
//! magic      8 bytes
//! hlen       u32 little-endian
//! header     hlen bytes of UTF-8 JSON
//! payload    raw little-endian floats, arrays back to back
//! crc32      u32 little-endian, CRC-32 (IEEE) of the payload
//! ```
//!
//! The header always carries `version`, `dtype` (`"f32"` or `"f64"`) and
//! `arrays`, a list of `{name, shape, offset}` with byte offsets into the payload.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {found} (supported: {supported})")]
    VersionMismatch { found: u64, supported: u32 },
    #[error("truncated payload: header describes {expected} bytes, file holds {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("malformed header: {0}")]
    Header(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayValues {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl ArrayValues {
    pub fn len(&self) -> usize {
        match self {
            ArrayValues::F32(v) => v.len(),
            ArrayValues::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dtype(&self) -> Dtype {
        match self {
            ArrayValues::F32(_) => Dtype::F32,
            ArrayValues::F64(_) => Dtype::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: ArrayValues,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

/// Decoded container: the header (minus the reserved keys) and its arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub meta: Map<String, Value>,
    pub arrays: Vec<NamedArray>,
}

impl Container {
    pub fn array(&self, name: &str) -> Result<&NamedArray, FormatError> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| FormatError::Header(format!("missing array {name:?}")))
    }

    pub fn take_array(&mut self, name: &str) -> Result<NamedArray, FormatError> {
        let pos = self
            .arrays
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| FormatError::Header(format!("missing array {name:?}")))?;
        Ok(self.arrays.remove(pos))
    }

    /// Deserializes a header field.
    pub fn field<T: for<'de> Deserialize<'de>>(&self, key: &str) -> Result<T, FormatError> {
        let v = self
            .meta
            .get(key)
            .ok_or_else(|| FormatError::Header(format!("missing header field {key:?}")))?;
        serde_json::from_value(v.clone()).map_err(|e| FormatError::Header(format!("field {key:?}: {e}")))
    }
}

const RESERVED: [&str; 3] = ["version", "dtype", "arrays"];

/// Serializes `arrays` (all of one dtype) with `meta` merged into the header.
pub fn encode(magic: &[u8; 8], meta: &Map<String, Value>, arrays: &[NamedArray]) -> Result<Vec<u8>, FormatError> {
    let dtype = arrays.first().map(|a| a.values.dtype()).unwrap_or(Dtype::F64);
    let mut entries = Vec::with_capacity(arrays.len());
    let mut offset = 0u64;
    for a in arrays {
        if a.values.dtype() != dtype {
            return Err(FormatError::Header("arrays must share one dtype".into()));
        }
        if a.shape.iter().product::<usize>() != a.values.len() {
            return Err(FormatError::Header(format!("array {:?}: shape/length mismatch", a.name)));
        }
        entries.push(ArrayEntry { name: a.name.clone(), shape: a.shape.clone(), offset });
        offset += (a.values.len() * dtype.size()) as u64;
    }

    let mut header = Map::new();
    for (k, v) in meta {
        if RESERVED.contains(&k.as_str()) {
            return Err(FormatError::Header(format!("reserved header key {k:?}")));
        }
        header.insert(k.clone(), v.clone());
    }
    header.insert("version".into(), Value::from(FORMAT_VERSION));
    header.insert("dtype".into(), serde_json::to_value(dtype).expect("dtype serializes"));
    header.insert("arrays".into(), serde_json::to_value(&entries).expect("entries serialize"));
    let header = serde_json::to_vec(&Value::Object(header)).expect("header serializes");

    let mut payload = Vec::with_capacity(offset as usize);
    for a in arrays {
        match &a.values {
            ArrayValues::F32(v) => v.iter().for_each(|x| payload.extend_from_slice(&x.to_le_bytes())),
            ArrayValues::F64(v) => v.iter().for_each(|x| payload.extend_from_slice(&x.to_le_bytes())),
        }
    }

    let mut out = Vec::with_capacity(8 + 4 + header.len() + payload.len() + 4);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    Ok(out)
}

fn printable(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| if b.is_ascii_graphic() { b as char } else { '.' }).collect()
}

/// Parses a container, checking magic, version, payload size, and checksum
/// in that order.
pub fn decode(magic: &[u8; 8], bytes: &[u8]) -> Result<Container, FormatError> {
    if bytes.len() < 8 || &bytes[..8] != magic {
        return Err(FormatError::BadMagic {
            expected: printable(magic),
            found: printable(&bytes[..bytes.len().min(8)]),
        });
    }
    let rest = &bytes[8..];
    if rest.len() < 4 {
        return Err(FormatError::Truncated { expected: 4, found: rest.len() as u64 });
    }
    let hlen = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes")) as usize;
    let rest = &rest[4..];
    if rest.len() < hlen {
        return Err(FormatError::Truncated { expected: hlen as u64, found: rest.len() as u64 });
    }
    let header: Value = serde_json::from_slice(&rest[..hlen]).map_err(|e| FormatError::Header(e.to_string()))?;
    let Value::Object(mut header) = header else {
        return Err(FormatError::Header("header is not a JSON object".into()));
    };

    let version = header
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| FormatError::Header("missing version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(FormatError::VersionMismatch { found: version, supported: FORMAT_VERSION });
    }
    let dtype: Dtype = serde_json::from_value(header.remove("dtype").unwrap_or(Value::Null))
        .map_err(|e| FormatError::Header(format!("dtype: {e}")))?;
    let entries: Vec<ArrayEntry> = serde_json::from_value(header.remove("arrays").unwrap_or(Value::Null))
        .map_err(|e| FormatError::Header(format!("arrays: {e}")))?;
    header.remove("version");

    let body = &rest[hlen..];
    let mut offsets = Vec::with_capacity(entries.len());
    let mut expected = 0u64;
    for e in &entries {
        let count = e
            .shape
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
            .and_then(|n| n.checked_mul(dtype.size() as u64))
            .ok_or_else(|| FormatError::Header(format!("array {:?}: shape overflows", e.name)))?;
        offsets.push(expected);
        expected = expected
            .checked_add(count)
            .ok_or_else(|| FormatError::Header("payload size overflows".into()))?;
    }
    // sizes first: any shape that disagrees with the payload length is a
    // truncation, whichever array it belongs to
    let found = body.len().saturating_sub(4) as u64;
    if body.len() < 4 || found != expected {
        return Err(FormatError::Truncated { expected: expected.saturating_add(4), found: body.len() as u64 });
    }
    for (e, &at) in entries.iter().zip(&offsets) {
        if e.offset != at {
            return Err(FormatError::Header(format!("array {:?}: offset {} is not contiguous", e.name, e.offset)));
        }
    }
    let (payload, crc) = body.split_at(found as usize);
    let stored = u32::from_le_bytes(crc.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(FormatError::ChecksumMismatch { stored, computed });
    }

    let mut arrays = Vec::with_capacity(entries.len());
    for e in entries {
        let n: usize = e.shape.iter().product();
        let start = e.offset as usize;
        let raw = &payload[start..start + n * dtype.size()];
        let values = match dtype {
            Dtype::F32 => ArrayValues::F32(
                raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect(),
            ),
            Dtype::F64 => ArrayValues::F64(
                raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect(),
            ),
        };
        arrays.push(NamedArray { name: e.name, shape: e.shape, values });
    }
    Ok(Container { meta: header, arrays })
}

/// Writes through a sibling temp file and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let tmp = path.with_extension(format!(
        "{}.partial",
        path.extension().and_then(|e| e.to_str()).unwrap_or("tmp")
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAGIC: &[u8; 8] = b"TESTFMT\0";

    /// Rewrites a substring of the JSON header, fixing up the length prefix.
    pub(crate) fn patch_header(bytes: &[u8], from: &str, to: &str) -> Vec<u8> {
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let header = std::str::from_utf8(&bytes[12..12 + hlen]).unwrap().replace(from, to);
        let mut out = bytes[..8].to_vec();
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&bytes[12 + hlen..]);
        out
    }

    fn sample() -> Vec<u8> {
        let mut meta = Map::new();
        meta.insert("note".into(), Value::from("hello"));
        let arrays = vec![
            NamedArray { name: "a".into(), shape: vec![2, 3], values: ArrayValues::F32(vec![1.0, -2.5, 3.0, f32::MIN_POSITIVE, 0.0, -0.0]) },
            NamedArray { name: "b".into(), shape: vec![1], values: ArrayValues::F32(vec![7.0]) },
        ];
        encode(MAGIC, &meta, &arrays).unwrap()
    }

    #[test]
    fn round_trip() {
        let c = decode(MAGIC, &sample()).unwrap();
        assert_eq!(c.meta["note"], "hello");
        assert_eq!(c.array("a").unwrap().shape, vec![2, 3]);
        match &c.array("a").unwrap().values {
            ArrayValues::F32(v) => assert_eq!(v[5].to_bits(), (-0.0f32).to_bits()),
            _ => panic!(),
        }
    }

    #[test]
    fn error_taxonomy() {
        let good = sample();
        let mut bad = good.clone();
        bad[0] ^= 0xff;
        assert!(matches!(decode(MAGIC, &bad), Err(FormatError::BadMagic { .. })));

        let cut = &good[..good.len() - 6];
        assert!(matches!(decode(MAGIC, cut), Err(FormatError::Truncated { .. })));

        let mut flipped = good.clone();
        let n = flipped.len();
        flipped[n - 6] ^= 0x01;
        assert!(matches!(decode(MAGIC, &flipped), Err(FormatError::ChecksumMismatch { .. })));

        let text = patch_header(&good, "\"version\":1", "\"version\":9");
        assert!(matches!(decode(MAGIC, &text), Err(FormatError::VersionMismatch { found: 9, .. })));

        assert!(matches!(decode(MAGIC, b"TESTFMT\0\xff\xff\xff\xff{}"), Err(FormatError::Truncated { .. })));
        assert!(matches!(decode(MAGIC, b"TESTFMT\0\x02\x00\x00\x00[]"), Err(FormatError::Header(_))));
    }

    #[test]
    fn shape_payload_mismatch_is_truncation() {
        let good = sample();
        let text = patch_header(&good, "\"shape\":[2,3]", "\"shape\":[2,4]");
        assert!(matches!(decode(MAGIC, &text), Err(FormatError::Truncated { .. })));
    }
}
