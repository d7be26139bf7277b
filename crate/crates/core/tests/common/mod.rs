#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

pub type Record = BTreeMap<String, String>;

/// Reads a `key = value` vector file; records are separated by blank lines
/// and `#` starts a comment line.
pub fn load_vectors(name: &str) -> Vec<Record> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/vectors")
        .join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut out = Vec::new();
    let mut cur = Record::new();
    for line in text.lines() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let (k, v) = line.split_once('=').expect("key = value");
        cur.insert(k.trim().to_string(), v.trim().to_string());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn unhex(s: &str) -> Vec<u8> {
    hex::decode(s).expect("hex")
}

use proptest::prelude::*;
use wsnsec::trust::NeighborRecord;

/// Records satisfying `NeighborRecord::validate`.
pub fn valid_record() -> impl Strategy<Value = NeighborRecord> {
    (
        (
            0.0..2000.0f64,
            0.0..=1.0f64,
            0.0..=1.0f64,
            0.0..=1.0f64,
            0.0..=1.0f64,
            0.0..50.0f64,
        ),
        (0..500u64, 0..500u64, 0..500u64, 0..500u64),
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64),
    )
        .prop_map(
            |((ae1, ae_frac, pss1, pss2, _, rc), (crf, drf, npt, npr), (a, b, c, d))| {
                let part = |n: u64, f: f64| ((n as f64) * f).floor() as u64;
                NeighborRecord {
                    ae_t1: ae1,
                    ae_t2: ae1 * ae_frac,
                    pss_t1: pss1,
                    pss_t2: pss2,
                    crf,
                    craf: part(crf, a),
                    rc,
                    npc: part(npt, b),
                    drf,
                    draf: part(drf, c),
                    pd: part(npr, d),
                    npt,
                    npr,
                }
            },
        )
}
