//! The 12-task AMR evaluation suite: Smatch plus 11 subtask scores, each
//! reported as precision, recall and F1 (36 numbers in total).

mod smatch;
mod tasks;

use core::fmt;

use serde::{Deserialize, Serialize};

pub use smatch::{match_count, smatch, smatch_exhaustive, smatch_triples, SmatchOptions, VariableMapping, EXHAUSTIVE_LIMIT};
pub use tasks::{evaluate_all, evaluate_all_with, set_f1};

use crate::{Error, Result};

/// Precision, recall and F1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub const ONE: Prf = Prf { precision: 1.0, recall: 1.0, f1: 1.0 };
    pub const ZERO: Prf = Prf { precision: 0.0, recall: 0.0, f1: 0.0 };

    pub fn new(precision: f64, recall: f64) -> Prf {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf { precision, recall, f1 }
    }
}

/// PRF from raw counts. Both sides empty scores 1, one side empty scores 0.
pub fn prf_from_counts(matched: i64, n_pred: i64, n_gold: i64) -> Result<Prf> {
    if matched < 0 || n_pred < 0 || n_gold < 0 {
        return Err(Error::InvalidArgument(alloc::format!(
            "negative count ({matched}, {n_pred}, {n_gold})"
        )));
    }
    if matched > n_pred.min(n_gold) {
        return Err(Error::InvalidArgument(alloc::format!(
            "matched {matched} exceeds min({n_pred}, {n_gold})"
        )));
    }
    Ok(prf_counts(matched as usize, n_pred as usize, n_gold as usize))
}

pub(crate) fn prf_counts(matched: usize, n_pred: usize, n_gold: usize) -> Prf {
    match (n_pred, n_gold) {
        (0, 0) => Prf::ONE,
        (0, _) | (_, 0) => Prf::ZERO,
        _ => Prf::new(matched as f64 / n_pred as f64, matched as f64 / n_gold as f64),
    }
}

/// The 12 evaluation tasks in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    Smatch,
    Unlabeled,
    NoWsd,
    Concepts,
    NamedEnt,
    Negations,
    Wikification,
    Reentrancies,
    Srl,
    Frames,
    NsFrames,
    IgnoreVars,
}

impl Task {
    pub const ALL: [Task; 12] = [
        Task::Smatch,
        Task::Unlabeled,
        Task::NoWsd,
        Task::Concepts,
        Task::NamedEnt,
        Task::Negations,
        Task::Wikification,
        Task::Reentrancies,
        Task::Srl,
        Task::Frames,
        Task::NsFrames,
        Task::IgnoreVars,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Smatch => "Smatch",
            Task::Unlabeled => "Unlabeled",
            Task::NoWsd => "NoWSD",
            Task::Concepts => "Concepts",
            Task::NamedEnt => "NamedEnt",
            Task::Negations => "Negations",
            Task::Wikification => "Wikification",
            Task::Reentrancies => "Reentrancies",
            Task::Srl => "SRL",
            Task::Frames => "Frames",
            Task::NsFrames => "NSFrames",
            Task::IgnoreVars => "IgnoreVars",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Number of scalar scores.
pub const SCORE_DIM: usize = 36;
/// Number of main-task (Smatch) scalars at the front of the flat layout.
pub const MAIN_DIM: usize = 3;
pub const SUB_DIM: usize = SCORE_DIM - MAIN_DIM;

/// One PRF per task, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: [Prf; 12],
}

impl ScoreVector {
    pub fn all(p: Prf) -> Self {
        ScoreVector { scores: [p; 12] }
    }

    pub fn zeros() -> Self {
        Self::all(Prf::ZERO)
    }

    pub fn get(&self, task: Task) -> Prf {
        self.scores[task.index()]
    }

    pub fn smatch_f1(&self) -> f64 {
        self.scores[0].f1
    }

    /// Flat layout: tasks in canonical order, (P, R, F1) within each.
    pub fn to_array(&self) -> [f64; SCORE_DIM] {
        let mut out = [0.0; SCORE_DIM];
        for (i, p) in self.scores.iter().enumerate() {
            out[3 * i] = p.precision;
            out[3 * i + 1] = p.recall;
            out[3 * i + 2] = p.f1;
        }
        out
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != SCORE_DIM {
            return Err(Error::Shape(alloc::format!("expected {SCORE_DIM} scores, got {}", values.len())));
        }
        let mut scores = [Prf::ZERO; 12];
        for (i, s) in scores.iter_mut().enumerate() {
            *s = Prf { precision: values[3 * i], recall: values[3 * i + 1], f1: values[3 * i + 2] };
        }
        Ok(ScoreVector { scores })
    }

    /// Column headers for the flat layout, e.g. `Smatch_P`.
    pub fn column_names() -> alloc::vec::Vec<alloc::string::String> {
        Task::ALL
            .iter()
            .flat_map(|t| ["P", "R", "F1"].map(|m| alloc::format!("{}_{}", t.name(), m)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prf_counts_conventions() {
        let p = prf_from_counts(7, 9, 11).unwrap();
        assert!((p.f1 - 0.70).abs() < 1e-12);
        assert_eq!(prf_from_counts(0, 0, 0).unwrap(), Prf::ONE);
        assert_eq!(prf_from_counts(0, 5, 0).unwrap(), Prf::ZERO);
        assert_eq!(prf_from_counts(0, 0, 5).unwrap(), Prf::ZERO);
        assert!(prf_from_counts(-1, 3, 3).is_err());
        assert!(prf_from_counts(4, 3, 5).is_err());
    }

    #[test]
    fn flat_layout() {
        let mut sv = ScoreVector::zeros();
        sv.scores[Task::Srl.index()] = Prf::new(0.5, 1.0);
        let flat = sv.to_array();
        assert_eq!(flat[24], 0.5);
        assert_eq!(flat[25], 1.0);
        assert!((flat[26] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ScoreVector::from_slice(&flat).unwrap(), sv);
        assert_eq!(ScoreVector::column_names()[26], "SRL_F1");
        assert_eq!(ScoreVector::column_names().len(), SCORE_DIM);
    }
}
