//! Shared container for the on-disk formats: a text manifest of `key=value`
//! lines introduced by a magic line and closed by a `payload` line, followed
//! by raw little-endian binary data.

use crate::error::{Error, Result};

pub(crate) const PAYLOAD_MARKER: &str = "payload";

pub(crate) struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub(crate) fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub(crate) fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub(crate) fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub(crate) fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::parse(key, "missing from manifest"))
    }

    pub(crate) fn parse_num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::parse(key, format!("cannot parse `{raw}`")))
    }

    /// Serialize as `magic`, the entries, the payload marker, then `payload`.
    pub(crate) fn encode(&self, magic: &str, payload: &[u8]) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(magic);
        out.push('\n');
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out.push_str(PAYLOAD_MARKER);
        out.push('\n');
        let mut bytes = out.into_bytes();
        bytes.extend_from_slice(payload);
        bytes
    }

    /// Split `bytes` into a manifest and the payload that follows it.
    pub(crate) fn decode<'a>(magic: &str, bytes: &'a [u8]) -> Result<(Self, &'a [u8])> {
        let mut pos = 0;
        let next_line = |pos: &mut usize| -> Result<&'a str> {
            let rest = &bytes[*pos..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::parse("manifest", "unterminated header"))?;
            *pos += end + 1;
            std::str::from_utf8(&rest[..end])
                .map_err(|_| Error::parse("manifest", "header is not valid UTF-8"))
        };
        let first = next_line(&mut pos)?;
        if first != magic {
            return Err(Error::parse("magic", format!("expected `{magic}`, found `{first}`")));
        }
        let mut manifest = Manifest::new();
        loop {
            let line = next_line(&mut pos)?;
            if line == PAYLOAD_MARKER {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("manifest", format!("line `{line}` is not key=value")))?;
            if manifest.get(k).is_some() {
                return Err(Error::parse(k, "duplicate key"));
            }
            manifest.push(k, v);
        }
        Ok((manifest, &bytes[pos..]))
    }
}

pub(crate) fn push_f64s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Little-endian payload reader that names the field it was reading on underflow.
pub(crate) struct PayloadReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PayloadReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::parse(field, "payload is truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn f64s(&mut self, count: usize, field: &str) -> Result<Vec<f64>> {
        let raw = self.take(count.checked_mul(8).ok_or_else(|| Error::parse(field, "too large"))?, field)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    pub(crate) fn u32s(&mut self, count: usize, field: &str) -> Result<Vec<u32>> {
        let raw = self.take(count.checked_mul(4).ok_or_else(|| Error::parse(field, "too large"))?, field)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::parse(
                "payload",
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}
