//! Binary dataset cache ("FSDS").
//!
//! Layout, little-endian: magic `FSDS`, version u8, rows u64, cols u64,
//! `cols` feature names, `rows * cols` f32 features row-major, `rows` u16
//! class labels. Then the regime code u8, class names (u16 count), raw label
//! names (u16 count), `rows` u16 raw label ids, and a CRC-32 of all prior bytes.

use std::path::Path;

use super::{ClassificationMode, FlowDataset};
use crate::binio::{ReadResult, Reader, Writer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FSDS";
const VERSION: u8 = 1;

pub fn to_bytes(ds: &FlowDataset) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u8(VERSION);
    w.u64(ds.rows() as u64);
    w.u64(ds.cols() as u64);
    for n in &ds.feature_names {
        w.str(n);
    }
    for &v in ds.features() {
        w.f32(v);
    }
    for &l in ds.labels() {
        w.u16(l);
    }
    w.u8(ds.mode.code());
    w.u16(ds.classes.len() as u16);
    for c in &ds.classes {
        w.str(c);
    }
    let (raw_names, raw_ids) = ds.raw_parts();
    w.u16(raw_names.len() as u16);
    for r in raw_names {
        w.str(r);
    }
    for &r in raw_ids {
        w.u16(r);
    }
    w.finish_with_crc()
}

pub fn from_bytes(data: &[u8]) -> Result<FlowDataset> {
    parse(data).map_err(Error::CorruptCache)
}

fn parse(data: &[u8]) -> ReadResult<FlowDataset> {
    if data.len() < 5 || &data[..4] != MAGIC {
        return Err("bad magic".into());
    }
    if data[4] != VERSION {
        return Err(format!("unsupported version {}", data[4]));
    }
    let mut r = Reader::with_crc(data)?;
    r.take(5)?;
    let rows = usize::try_from(r.u64()?).map_err(|_| "row count overflow")?;
    let cols = usize::try_from(r.u64()?).map_err(|_| "column count overflow")?;
    // Each feature name needs at least its 4-byte length prefix.
    if cols > data.len() / 4 || rows > data.len() / 2 {
        return Err("dimensions exceed file size".into());
    }
    let feature_names = (0..cols).map(|_| r.str()).collect::<ReadResult<Vec<_>>>()?;
    let n = rows.checked_mul(cols).ok_or("feature count overflow")?;
    let features = r.f32s(n)?;
    let labels = r.u16s(rows)?;
    let mode = ClassificationMode::from_code(r.u8()?).ok_or("unknown classification mode")?;
    let n_classes = r.u16()? as usize;
    let classes = (0..n_classes).map(|_| r.str()).collect::<ReadResult<Vec<_>>>()?;
    let n_raw = r.u16()? as usize;
    let raw_names = (0..n_raw).map(|_| r.str()).collect::<ReadResult<Vec<_>>>()?;
    let raw_ids = r.u16s(rows)?;
    if !r.is_done() {
        return Err("trailing bytes".into());
    }
    FlowDataset::from_parts(mode, feature_names, classes, features, labels, raw_names, raw_ids)
}

pub fn write_cache(ds: &FlowDataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(ds))?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<FlowDataset> {
    let data = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    from_bytes(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FlowRecord, LabelFamilies, LabelVocabulary};

    fn sample() -> FlowDataset {
        let records: Vec<FlowRecord> = (0..7)
            .map(|i| FlowRecord {
                features: vec![i as f32 * 0.5, -(i as f32), f32::MAX],
                label: if i % 3 == 0 { "BenignTraffic".into() } else { format!("Recon-PortScan{}", i % 2) },
            })
            .collect();
        let vocab = LabelVocabulary::new(ClassificationMode::Grouped, &LabelFamilies::default());
        let names = vec!["a".to_string(), "b c".into(), "d".into()];
        FlowDataset::from_records(&records, &names, &vocab).unwrap().0
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = sample();
        assert_eq!(from_bytes(&to_bytes(&ds)).unwrap(), ds);
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = to_bytes(&sample());
        for i in [0, 4, 10, bytes.len() / 2, bytes.len() - 1] {
            let mut b = bytes.clone();
            b[i] ^= 0x40;
            assert!(matches!(from_bytes(&b), Err(Error::CorruptCache(_))), "byte {i}");
        }
        for cut in [0, 3, 12, bytes.len() - 1] {
            assert!(matches!(from_bytes(&bytes[..cut]), Err(Error::CorruptCache(_))));
        }
    }
}
