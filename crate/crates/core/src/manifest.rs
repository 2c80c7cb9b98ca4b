//! Config hashing and little-endian container helpers.

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// SHA-256 (hex) of the JSON serialization of `value`.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes to JSON");
    hex::encode(Sha256::digest(&json))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses a JSON object, or flat `key = value` lines with `#` comments.
/// Values are read as JSON where possible and as bare strings otherwise.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed).map_err(|e| Error::InvalidConfig(e.to_string()));
    }
    let mut map = serde_json::Map::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("config line {}: expected key = value", i + 1)))?;
        let v = v.trim();
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
        map.insert(k.trim().to_string(), value);
    }
    serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// Bounds-checked cursor over a binary container.
pub struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Container(format!(
                    "truncated: need {n} bytes at offset {}, {} available",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn string16(&mut self) -> Result<String> {
        let n = self.u16()? as usize;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| Error::Container("invalid UTF-8 string".into()))
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub fn put_string16(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&("x", 1));
        assert_eq!(a, config_hash(&("x", 1)));
        assert_ne!(a, config_hash(&("x", 2)));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn flat_and_json_configs() {
        #[derive(serde::Deserialize, PartialEq, Debug)]
        struct C {
            a: f64,
            b: String,
        }
        let want = C { a: 1.5, b: "x y".into() };
        assert_eq!(parse_config::<C>("a = 1.5 # c\nb = x y\n").unwrap(), want);
        assert_eq!(parse_config::<C>(r#"{"a": 1.5, "b": "x y"}"#).unwrap(), want);
        assert!(parse_config::<C>("a 1").is_err());
    }

    #[test]
    fn reader_bounds() {
        let mut out = Vec::new();
        put_string16(&mut out, "hé");
        out.extend_from_slice(&7u32.to_le_bytes());
        let mut r = ByteReader::new(&out);
        assert_eq!(r.string16().unwrap(), "hé");
        assert_eq!(r.u32().unwrap(), 7);
        assert!(r.is_done());
        assert!(r.u16().is_err());
    }
}
