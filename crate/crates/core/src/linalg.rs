//! Dense elimination for the 2x2 / 3x3 systems of the design-point fit.

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot smaller than `1e-12` times the norm of its (original) row is
/// treated as singular.
pub(crate) fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Result<[f64; N]> {
    let mut norms = [0.0; N];
    for (n, row) in norms.iter_mut().zip(a.iter()) {
        *n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        a.swap(col, piv);
        b.swap(col, piv);
        norms.swap(col, piv);
        if !(a[col][col].abs() > PIVOT_TOL * norms[col]) {
            return Err(Error::SingularSystem);
        }
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let pivot = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}
