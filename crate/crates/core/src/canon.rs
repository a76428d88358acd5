//! Canonical serialization: JSON with lexicographically sorted keys and no
//! insignificant whitespace. Used for state hashing, scenario digests and
//! per-event checksums.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Canonical JSON text of `value`.
///
/// Goes through `serde_json::Value`, whose object map is ordered by key.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("engine types serialize to JSON");
    serde_json::to_string(&v).expect("JSON value serializes")
}

pub fn sha256(text: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    h.finalize().into()
}

pub fn sha256_hex(text: &str) -> String {
    to_hex(&sha256(text))
}

pub fn to_hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn crc32(text: &str) -> u32 {
    crc32fast::hash(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_are_sorted_and_compact() {
        let mut m = HashMap::new();
        m.insert("zeta", 1);
        m.insert("alpha", 2);
        m.insert("mid", 3);
        assert_eq!(to_canonical_string(&m), r#"{"alpha":2,"mid":3,"zeta":1}"#);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
