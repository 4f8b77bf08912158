//! ROC curves and operating-point rates for PCE score sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub score: f64,
    pub label: Label,
    pub group: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub entries: Vec<Score>,
}

impl ScoreSet {
    pub fn push(&mut self, score: f64, label: Label, group: impl Into<String>) {
        self.entries.push(Score {
            score,
            label,
            group: group.into(),
        });
    }

    fn counts(&self) -> Result<(usize, usize)> {
        if let Some(i) = self.entries.iter().position(|e| !e.score.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let genuine = self
            .entries
            .iter()
            .filter(|e| e.label == Label::Genuine)
            .count();
        let impostor = self.entries.len() - genuine;
        if genuine == 0 || impostor == 0 {
            return Err(Error::SingleClass);
        }
        Ok((genuine, impostor))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: f64,
    pub fpr: f64,
}

fn rates_unchecked(set: &ScoreSet, tau: f64, genuine: usize, impostor: usize) -> Rates {
    let (mut tp, mut fp) = (0usize, 0usize);
    for e in &set.entries {
        if e.score > tau {
            match e.label {
                Label::Genuine => tp += 1,
                Label::Impostor => fp += 1,
            }
        }
    }
    Rates {
        tpr: tp as f64 / genuine as f64,
        fpr: fp as f64 / impostor as f64,
    }
}

/// TPR and FPR counting scores strictly above `tau`.
pub fn rates_at(set: &ScoreSet, tau: f64) -> Result<Rates> {
    let (g, i) = set.counts()?;
    Ok(rates_unchecked(set, tau, g, i))
}

/// One point per distinct score plus `+inf` and `-inf`, by descending threshold.
pub fn roc(set: &ScoreSet) -> Result<Vec<RocPoint>> {
    let (g, i) = set.counts()?;
    let mut thresholds: Vec<f64> = set.entries.iter().map(|e| e.score).collect();
    thresholds.push(f64::INFINITY);
    thresholds.push(f64::NEG_INFINITY);
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    Ok(thresholds
        .into_iter()
        .map(|t| {
            let r = rates_unchecked(set, t, g, i);
            RocPoint {
                fpr: r.fpr,
                tpr: r.tpr,
                threshold: t,
            }
        })
        .collect())
}

/// Trapezoidal area under a curve from [`roc`].
pub fn auc(curve: &[RocPoint]) -> f64 {
    curve
        .windows(2)
        .map(|p| (p[1].fpr - p[0].fpr) * (p[1].tpr + p[0].tpr) / 2.0)
        .sum()
}
