//! Fréchet distance between Gaussians fit to embedding clouds.
//!
//! d² = |μ₁−μ₂|² + tr(Σ₁ + Σ₂ − 2·(Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2}), with
//! sample covariances (ddof = 1) and an unconditional 1e−6·I ridge on
//! both. Matrix square roots go through a symmetric eigendecomposition
//! with negative eigenvalues clamped to zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const RIDGE: f64 = 1e-6;

fn check_cloud<'a>(rows: &'a [Vec<f64>], context: &'static str) -> Result<(usize, usize)> {
    if rows.len() < 2 {
        return Err(Error::InsufficientSamples {
            context,
            need: 2,
            got: rows.len(),
        });
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::ShapeMismatch {
            context,
            expected: format!("rows of equal nonzero dim {d}"),
            got: "ragged rows".into(),
        });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite embedding".into()));
    }
    Ok((rows.len(), d))
}

fn moments(rows: &[Vec<f64>], d: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = rows.len();
    let mut mu = DVector::zeros(d);
    for r in rows {
        for (i, v) in r.iter().enumerate() {
            mu[i] += v;
        }
    }
    mu /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for r in rows {
        let c = DVector::from_iterator(d, r.iter().copied()) - &mu;
        cov += &c * c.transpose();
    }
    cov /= (n - 1) as f64;
    for i in 0..d {
        cov[(i, i)] += RIDGE;
    }
    (mu, cov)
}

fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

pub fn frechet_proxy(real: &[Vec<f64>], fake: &[Vec<f64>]) -> Result<f64> {
    let (_, d) = check_cloud(real, "frechet_proxy real")?;
    let (_, d2) = check_cloud(fake, "frechet_proxy fake")?;
    if d != d2 {
        return Err(Error::ShapeMismatch {
            context: "frechet_proxy",
            expected: format!("dim {d}"),
            got: format!("dim {d2}"),
        });
    }
    let (mu1, s1) = moments(real, d);
    let (mu2, s2) = moments(fake, d);
    let r1 = sqrt_psd(&s1);
    let inner = &r1 * &s2 * &r1;
    let sym = (&inner + inner.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let tr_sqrt: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let diff = &mu1 - &mu2;
    Ok(diff.dot(&diff) + s1.trace() + s2.trace() - 2.0 * tr_sqrt)
}
