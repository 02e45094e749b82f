//! Seeded synthetic flow data shaped like CICIoT2023.
//!
//! Class frequencies follow the published label skew (with a floor so every
//! class appears). Each class has a prototype over the canonical top-20
//! features; rows are the prototype plus gaussian noise. The remaining
//! columns are uninformative.

use std::io::Write;
use std::path::Path;

use super::schema::{canonical_top20, CICIOT2023_FEATURES, DEFAULT_LABEL_COLUMN};
use super::FlowRecord;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Approximate full-dataset row counts per raw label.
pub const LABEL_SKEW: [(&str, u64); 34] = [
    ("DDoS-ICMP_Flood", 7_200_504),
    ("DDoS-UDP_Flood", 5_412_287),
    ("DDoS-TCP_Flood", 4_497_667),
    ("DDoS-PSHACK_Flood", 4_094_755),
    ("DDoS-SYN_Flood", 4_059_190),
    ("DDoS-RSTFINFlood", 4_045_285),
    ("DDoS-SynonymousIP_Flood", 3_598_138),
    ("DoS-UDP_Flood", 3_318_595),
    ("DoS-TCP_Flood", 2_671_445),
    ("DoS-SYN_Flood", 2_028_834),
    ("BenignTraffic", 1_098_195),
    ("Mirai-greeth_flood", 991_866),
    ("Mirai-udpplain", 890_576),
    ("Mirai-greip_flood", 751_682),
    ("DDoS-ICMP_Fragmentation", 452_489),
    ("MITM-ArpSpoofing", 307_593),
    ("DDoS-UDP_Fragmentation", 286_925),
    ("DDoS-ACK_Fragmentation", 285_104),
    ("DNS_Spoofing", 178_911),
    ("Recon-HostDiscovery", 134_378),
    ("Recon-OSScan", 98_259),
    ("Recon-PortScan", 82_284),
    ("DoS-HTTP_Flood", 71_864),
    ("VulnerabilityScan", 37_382),
    ("DDoS-HTTP_Flood", 28_790),
    ("DDoS-SlowLoris", 23_426),
    ("DictionaryBruteForce", 13_064),
    ("BrowserHijacking", 5_859),
    ("CommandInjection", 5_409),
    ("SqlInjection", 5_245),
    ("XSS", 3_846),
    ("Backdoor_Malware", 3_218),
    ("Recon-PingSweep", 2_262),
    ("Uploading_Attack", 1_252),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub rows: usize,
    pub seed: u64,
    /// Noise standard deviation relative to each feature's scale.
    pub noise: f64,
    pub min_per_class: usize,
    /// Rows (out of `rows`) replaced by malformed lines when written as CSV.
    pub malformed: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rows: 5_000,
            seed: 2023,
            noise: 0.04,
            min_per_class: 8,
            malformed: 0,
        }
    }
}

/// Rows per label: proportional to `LABEL_SKEW` by largest remainder, with
/// every label raised to `min_per_class`.
pub fn class_counts(rows: usize, min_per_class: usize) -> Result<Vec<usize>> {
    let n = LABEL_SKEW.len();
    if rows < n * min_per_class.max(1) {
        return Err(Error::InvalidConfig(format!(
            "{rows} rows cannot hold {n} classes of at least {} rows",
            min_per_class.max(1)
        )));
    }
    let floor = min_per_class.max(1);
    let mut counts = vec![floor; n];
    let mut fixed = vec![false; n];
    // Labels whose proportional share is under the floor keep the floor; the
    // rest share what is left in proportion.
    loop {
        let budget = rows - counts.iter().zip(&fixed).filter(|(_, f)| **f).map(|(c, _)| c).sum::<usize>();
        let weight: u64 = LABEL_SKEW.iter().zip(&fixed).filter(|(_, f)| !**f).map(|(l, _)| l.1).sum();
        let mut changed = false;
        for i in 0..n {
            if !fixed[i] && (budget as f64 * LABEL_SKEW[i].1 as f64 / weight as f64) < floor as f64 {
                fixed[i] = true;
                changed = true;
            }
        }
        if changed {
            continue;
        }
        let shares: Vec<f64> = (0..n)
            .map(|i| if fixed[i] { 0.0 } else { budget as f64 * LABEL_SKEW[i].1 as f64 / weight as f64 })
            .collect();
        let mut assigned = 0;
        for i in (0..n).filter(|&i| !fixed[i]) {
            counts[i] = shares[i].floor() as usize;
            assigned += counts[i];
        }
        let mut order: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        order.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().take(budget - assigned) {
            counts[i] += 1;
        }
        return Ok(counts);
    }
}

fn feature_scale(name: &str, j: usize) -> f64 {
    match name {
        "Protocol Type" => 17.0,
        "HTTP" | "UDP" | "ack_flag_number" | "syn_flag_number" => 1.0,
        _ => 10f64.powi((j % 4) as i32),
    }
}

/// Generates the rows in a shuffled, seed-determined order over all 46 columns.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<FlowRecord>> {
    let counts = class_counts(cfg.rows, cfg.min_per_class)?;
    if !(cfg.noise.is_finite() && cfg.noise >= 0.0) {
        return Err(Error::InvalidConfig(format!("noise {} must be finite and non-negative", cfg.noise)));
    }
    let informative = canonical_top20();
    let columns: Vec<(f64, bool)> = CICIOT2023_FEATURES
        .iter()
        .enumerate()
        .map(|(j, name)| (feature_scale(name, j), informative.iter().any(|f| f == name)))
        .collect();

    let mut proto_rng = Rng::derive(cfg.seed, 0);
    let prototypes: Vec<Vec<f64>> = (0..LABEL_SKEW.len())
        .map(|_| columns.iter().map(|_| proto_rng.next_f64()).collect())
        .collect();

    let mut rng = Rng::derive(cfg.seed, 1);
    let mut records = Vec::with_capacity(cfg.rows);
    for (c, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let features = columns
                .iter()
                .zip(&prototypes[c])
                .map(|(&(scale, signal), &p)| {
                    let unit = if signal { p + cfg.noise * rng.normal() } else { rng.next_f64() };
                    (scale * unit.max(0.0)) as f32
                })
                .collect();
            records.push(FlowRecord {
                features,
                label: LABEL_SKEW[c].0.to_string(),
            });
        }
    }
    rng.shuffle(&mut records);
    Ok(records)
}

/// Writes a CSV with the dataset's header. When `cfg.malformed > 0`, that many
/// evenly spaced rows are corrupted, cycling through a missing field, a
/// non-numeric value, NaN, infinity and an empty label.
pub fn write_csv(cfg: &SynthConfig, path: &Path) -> Result<Vec<FlowRecord>> {
    if cfg.malformed > cfg.rows {
        return Err(Error::InvalidConfig("more malformed rows than rows".into()));
    }
    let records = generate(cfg)?;
    let stride = if cfg.malformed == 0 { usize::MAX } else { cfg.rows / cfg.malformed };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<&str> = CICIOT2023_FEATURES.iter().copied().chain([DEFAULT_LABEL_COLUMN]).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut kept = Vec::with_capacity(records.len());
    let mut corrupted = 0;
    for (i, r) in records.into_iter().enumerate() {
        let mut fields: Vec<String> = r.features.iter().map(|v| v.to_string()).collect();
        fields.push(r.label.clone());
        if corrupted < cfg.malformed && i % stride == 0 {
            match corrupted % 5 {
                0 => {
                    fields.remove(3);
                }
                1 => fields[5] = "n/a".into(),
                2 => fields[0] = "NaN".into(),
                3 => fields[7] = "inf".into(),
                _ => *fields.last_mut().expect("label field") = String::new(),
            }
            corrupted += 1;
        } else {
            kept.push(r);
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_respect_total_floor_and_skew() {
        let c = class_counts(5_000, 8).unwrap();
        assert_eq!(c.iter().sum::<usize>(), 5_000);
        assert!(c.iter().all(|&n| n >= 8));
        assert!(c.windows(2).all(|w| w[0] >= w[1]));
        assert!(class_counts(30, 1).is_err());
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = SynthConfig {
            rows: 400,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        let b = generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, b);
        assert!(a.iter().all(|r| r.features.len() == 46 && r.features.iter().all(|v| v.is_finite() && *v >= 0.0)));
    }
}
