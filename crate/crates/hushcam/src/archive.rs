//! Compressed-sample archives and the manifest that binds them to operator
//! seeds.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! header   "HCSA" | version: u32 = 1 | count: u64
//! record   m: u64 | operator_seed: u64 | label: u8 | y: m × f64
//! ```
//!
//! `label` is the valence index (0 positive, 1 neutral, 2 negative) or 255
//! when the sample is unlabelled. The CSV form has a header
//! `m,operator_seed,label,y0,y1,...` with one sample per row, labels written
//! by name and floats in shortest round-trip notation.

use hushcam_core::dataset::Valence;
use hushcam_core::sensing::CompressedSample;

pub const ARCHIVE_MAGIC: [u8; 4] = *b"HCSA";
pub const ARCHIVE_VERSION: u32 = 1;
const NO_LABEL: u8 = 255;

pub fn encode_samples(samples: &[CompressedSample]) -> Vec<u8> {
    let body: usize = samples.iter().map(|s| 17 + 8 * s.m()).sum();
    let mut out = Vec::with_capacity(16 + body);
    out.extend(ARCHIVE_MAGIC);
    out.extend(ARCHIVE_VERSION.to_le_bytes());
    out.extend((samples.len() as u64).to_le_bytes());
    for s in samples {
        out.extend((s.m() as u64).to_le_bytes());
        out.extend(s.operator_seed.to_le_bytes());
        out.push(s.label.map_or(NO_LABEL, |l| l.index() as u8));
        for v in &s.y {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<CompressedSample>, String> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != ARCHIVE_MAGIC {
        return Err("not a sample archive".into());
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
    if version != ARCHIVE_VERSION {
        return Err(format!("unsupported archive version {version}"));
    }
    let count = c.u64()?;
    let mut out = Vec::new();
    for i in 0..count {
        let m = c.u64()? as usize;
        let operator_seed = c.u64()?;
        let label = match c.take(1)?[0] {
            NO_LABEL => None,
            l => Some(Valence::from_index(l as usize).ok_or_else(|| format!("record {i}: bad label {l}"))?),
        };
        let raw = c.take(m.checked_mul(8).ok_or("record length overflow")?)?;
        let y = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        out.push(CompressedSample {
            y,
            label,
            operator_seed,
        });
    }
    if c.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - c.pos));
    }
    Ok(out)
}

pub fn samples_to_csv(samples: &[CompressedSample]) -> Vec<u8> {
    let width = samples.iter().map(CompressedSample::m).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let mut header = vec!["m".to_string(), "operator_seed".into(), "label".into()];
    header.extend((0..width).map(|i| format!("y{i}")));
    w.write_record(&header).expect("in-memory csv");
    for s in samples {
        let mut rec = vec![s.m().to_string(), s.operator_seed.to_string()];
        rec.push(s.label.map_or(String::new(), |l| l.name().to_string()));
        rec.extend(s.y.iter().map(f64::to_string));
        w.write_record(&rec).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn samples_from_csv(bytes: &[u8]) -> Result<Vec<CompressedSample>, String> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let field = |k: usize| rec.get(k).ok_or_else(|| format!("row {}: missing column {k}", i + 1));
        let m: usize = field(0)?.parse().map_err(|e| format!("row {}: m: {e}", i + 1))?;
        let operator_seed = field(1)?.parse().map_err(|e| format!("row {}: operator_seed: {e}", i + 1))?;
        let label = match field(2)? {
            "" => None,
            name => Some(Valence::from_name(name).ok_or_else(|| format!("row {}: label {name:?}", i + 1))?),
        };
        if rec.len() != 3 + m {
            return Err(format!("row {}: m={m} but {} values", i + 1, rec.len() - 3));
        }
        let y = (3..3 + m)
            .map(|k| field(k)?.parse::<f64>().map_err(|e| format!("row {}: y{}: {e}", i + 1, k - 3)))
            .collect::<Result<_, _>>()?;
        out.push(CompressedSample {
            y,
            label,
            operator_seed,
        });
    }
    Ok(out)
}

/// One archive file per measurement count.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArchiveEntry {
    pub m: usize,
    /// Seed of the operator whose first `m` rows produced these samples.
    pub operator_seed: u64,
    pub compression_ratio_percent: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub label: Valence,
}

/// Everything needed to rebuild the operators and transform of an archive.
/// Anyone holding it can reconstruct the images; treat it as a secret.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArchiveManifest {
    pub version: u32,
    pub side: usize,
    pub wavelet_order: usize,
    pub level: usize,
    pub n: usize,
    /// Archives are listed in the order of the configured measurement counts.
    pub archives: Vec<ArchiveEntry>,
    /// Sample order inside every archive.
    pub images: Vec<ImageRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn archive_file_name(m: usize) -> String {
    format!("samples_m{m:05}.bin")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(m: usize, label: Option<Valence>) -> CompressedSample {
        CompressedSample {
            y: (0..m).map(|i| i as f64 * 0.1 - 1.0 / 3.0).collect(),
            label,
            operator_seed: u64::MAX - m as u64,
        }
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let s = vec![sample(3, Some(Valence::Negative)), sample(0, None)];
        let bytes = encode_samples(&s);
        assert_eq!(&bytes[..4], b"HCSA");
        assert_eq!(bytes.len(), 16 + (17 + 24) + 17);
        assert_eq!(bytes[16..24], 3u64.to_le_bytes());
        assert_eq!(bytes[32], 2);
        assert_eq!(bytes[33..41], s[0].y[0].to_le_bytes());
        assert_eq!(decode_samples(&bytes).unwrap(), s);
        assert!(decode_samples(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = vec![sample(4, Some(Valence::Positive)), sample(4, None)];
        let text = samples_to_csv(&s);
        assert!(text.starts_with(b"m,operator_seed,label,y0,y1,y2,y3\n"));
        assert_eq!(samples_from_csv(&text).unwrap(), s);
    }
}
