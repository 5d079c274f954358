use alloc::format;

use crate::metrics::{MAIN_DIM, SCORE_DIM, SUB_DIM};
use crate::{Error, Result};

/// Mean squared error over all 36 outputs.
pub fn loss_flat<P: AsRef<[f64]>, T: AsRef<[f64]>>(preds: &[P], targets: &[T]) -> Result<f64> {
    check_batch(preds.len(), targets.len())?;
    let mut sum = 0.0;
    for (p, t) in preds.iter().zip(targets) {
        let (p, t) = (p.as_ref(), t.as_ref());
        check_width(p.len(), SCORE_DIM, "prediction")?;
        check_width(t.len(), SCORE_DIM, "target")?;
        sum += p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(sum / (SCORE_DIM * preds.len()) as f64)
}

/// Weighted sum of the subtask MSE (33 columns) and the Smatch MSE
/// (3 columns). `targets` use the flat 36-column layout.
pub fn loss_hier<S: AsRef<[f64]>, M: AsRef<[f64]>, T: AsRef<[f64]>>(
    sub_preds: &[S],
    main_preds: &[M],
    targets: &[T],
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    check_batch(sub_preds.len(), targets.len())?;
    check_batch(main_preds.len(), targets.len())?;
    let (mut sub_sum, mut main_sum) = (0.0, 0.0);
    for ((s, m), t) in sub_preds.iter().zip(main_preds).zip(targets) {
        let (s, m, t) = (s.as_ref(), m.as_ref(), t.as_ref());
        check_width(s.len(), SUB_DIM, "subtask prediction")?;
        check_width(m.len(), MAIN_DIM, "main prediction")?;
        check_width(t.len(), SCORE_DIM, "target")?;
        main_sum += m.iter().zip(&t[..MAIN_DIM]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        sub_sum += s.iter().zip(&t[MAIN_DIM..]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let n = targets.len() as f64;
    Ok(lambda1 * sub_sum / (SUB_DIM as f64 * n) + lambda2 * main_sum / (MAIN_DIM as f64 * n))
}

fn check_batch(a: usize, b: usize) -> Result<()> {
    if a == 0 || b == 0 {
        return Err(Error::Empty("loss batch"));
    }
    if a != b {
        return Err(Error::Shape(format!("batch sizes differ: {a} vs {b}")));
    }
    Ok(())
}

fn check_width(got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(Error::Shape(format!("{what} has {got} columns, expected {want}")));
    }
    Ok(())
}

/// The training objective implied by a model configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// MSE over all 36 outputs.
    Flat,
    /// MSE over the 3 Smatch outputs only.
    SmatchOnly,
    Hierarchical { lambda1: f64, lambda2: f64 },
}

impl LossKind {
    /// Loss of a batch of flat 36-column predictions.
    pub fn batch_loss(self, preds: &[[f64; SCORE_DIM]], targets: &[[f64; SCORE_DIM]]) -> Result<f64> {
        let main = || preds.iter().map(|p| &p[..MAIN_DIM]).collect::<alloc::vec::Vec<_>>();
        let sub = || preds.iter().map(|p| &p[MAIN_DIM..]).collect::<alloc::vec::Vec<_>>();
        match self {
            LossKind::Flat => loss_flat(preds, targets),
            LossKind::SmatchOnly => loss_hier(&sub(), &main(), targets, 0.0, 1.0),
            LossKind::Hierarchical { lambda1, lambda2 } => loss_hier(&sub(), &main(), targets, lambda1, lambda2),
        }
    }

    /// Derivative of the batch loss with respect to one instance's outputs,
    /// for a batch of `n` instances.
    pub fn output_grad(self, pred: &[f64; SCORE_DIM], target: &[f64; SCORE_DIM], n: usize) -> [f64; SCORE_DIM] {
        let n = n as f64;
        let (w_main, w_sub) = match self {
            LossKind::Flat => (1.0 / (SCORE_DIM as f64 * n), 1.0 / (SCORE_DIM as f64 * n)),
            LossKind::SmatchOnly => (1.0 / (MAIN_DIM as f64 * n), 0.0),
            LossKind::Hierarchical { lambda1, lambda2 } => {
                (lambda2 / (MAIN_DIM as f64 * n), lambda1 / (SUB_DIM as f64 * n))
            }
        };
        let mut g = [0.0; SCORE_DIM];
        for j in 0..SCORE_DIM {
            let w = if j < MAIN_DIM { w_main } else { w_sub };
            g[j] = 2.0 * w * (pred[j] - target[j]);
        }
        g
    }
}
