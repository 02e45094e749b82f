//! Per-epoch training records and their CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc,seconds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean over the epoch's samples, measured in training mode.
    pub train_loss: f64,
    pub train_accuracy: f64,
    /// NaN when the validation carve-out is empty.
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// Bit-for-bit equality of everything except wall-clock time.
    pub fn same_trajectory(&self, other: &TrainHistory) -> bool {
        self.epochs.len() == other.epochs.len()
            && self.epochs.iter().zip(&other.epochs).all(|(a, b)| {
                a.epoch == b.epoch
                    && same(a.train_loss, b.train_loss)
                    && same(a.train_accuracy, b.train_accuracy)
                    && same(a.val_loss, b.val_loss)
                    && same(a.val_accuracy, b.val_accuracy)
            })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{HISTORY_HEADER}\n");
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy, r.seconds
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(HISTORY_HEADER) {
            return Err(Error::InvalidConfig(format!("history CSV must start with `{HISTORY_HEADER}`")));
        }
        let mut epochs = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = || Error::InvalidConfig(format!("history CSV line {}: `{line}`", n + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad());
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
            epochs.push(EpochRecord {
                epoch: f[0].parse().map_err(|_| bad())?,
                train_loss: num(1)?,
                train_accuracy: num(2)?,
                val_loss: num(3)?,
                val_accuracy: num(4)?,
                seconds: num(5)?,
            });
        }
        Ok(Self { epochs })
    }
}

pub fn export_history(history: &TrainHistory, path: &Path) -> Result<()> {
    if history.is_empty() {
        return Err(Error::EmptyInput("history has no epochs"));
    }
    std::fs::write(path, history.to_csv())?;
    Ok(())
}
