//! Kernel inception-style distance: unbiased MMD² with the cubic
//! polynomial kernel k(x, y) = (xᵀy/d + 1)³.

use crate::error::{Error, Result};

fn check(rows: &[Vec<f64>], context: &'static str) -> Result<usize> {
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
    Ok(d)
}

fn poly3(x: &[f64], y: &[f64], d: f64) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let base = dot / d + 1.0;
    base * base * base
}

pub fn kid_poly(real: &[Vec<f64>], fake: &[Vec<f64>]) -> Result<f64> {
    let d = check(real, "kid_poly real")?;
    let d2 = check(fake, "kid_poly fake")?;
    if d != d2 {
        return Err(Error::ShapeMismatch {
            context: "kid_poly",
            expected: format!("dim {d}"),
            got: format!("dim {d2}"),
        });
    }
    let df = d as f64;
    let m = real.len();
    let n = fake.len();
    let mut xx = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                xx += poly3(&real[i], &real[j], df);
            }
        }
    }
    let mut yy = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                yy += poly3(&fake[i], &fake[j], df);
            }
        }
    }
    let mut xy = 0.0;
    for r in real {
        for f in fake {
            xy += poly3(r, f, df);
        }
    }
    Ok(xx / (m * (m - 1)) as f64 + yy / (n * (n - 1)) as f64
        - 2.0 * xy / (m * n) as f64)
}
