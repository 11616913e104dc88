use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

pub(crate) const JITTER_START: f64 = 1e-10;
pub(crate) const JITTER_MAX: f64 = 1e-4;

/// Cholesky factorization with a diagonal jitter ladder: on failure add
/// `1e-10 * mean(diag)` to the diagonal and escalate by x10 up to
/// `1e-4 * mean(diag)`. Returns the factor and the jitter actually added.
pub(crate) fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Ok((ch, 0.0));
    }
    let n = m.nrows().max(1);
    let mean_diag = m.diagonal().sum() / n as f64;
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        let jitter = rel * mean_diag;
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return Ok((ch, jitter));
        }
        rel *= 10.0;
    }
    Err(Error::Singular { max_jitter: JITTER_MAX * mean_diag })
}

/// `log det` from a Cholesky factor.
pub(crate) fn chol_logdet(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}
