//! Log-sum-exp primitives. Terms more than `CUTOFF` below the maximum are
//! dropped; their relative contribution is below e^{−40}.

use rayon::prelude::*;

pub(crate) const CUTOFF: f64 = 40.0;

pub(crate) fn lse(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = values
        .iter()
        .filter(|&&v| v > m - CUTOFF)
        .map(|&v| (v - m).exp())
        .sum();
    m + s.ln()
}

/// out[r][l] = LSE_j (a[r][j] + kernel[j][l]) for a symmetric n×n kernel and
/// `a` with n columns, rows in parallel.
pub(crate) fn lse_matmul(a: &[f64], kernel: &[f64], n: usize, out: &mut [f64]) {
    out.par_chunks_mut(n)
        .zip(a.par_chunks(n))
        .for_each(|(out_row, a_row)| {
            let mut buf = vec![0.0; n];
            for (l, o) in out_row.iter_mut().enumerate() {
                let k_row = &kernel[l * n..(l + 1) * n];
                for ((b, &x), &k) in buf.iter_mut().zip(a_row).zip(k_row) {
                    *b = x + k;
                }
                *o = lse(&buf);
            }
        });
}

/// LSE over rows of a row-major matrix with n columns: out[j] = LSE_r m[r][j].
pub(crate) fn lse_columns(m: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let col: Vec<f64> = m.iter().skip(j).step_by(n).copied().collect();
            lse(&col)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lse_handles_extremes() {
        assert_eq!(lse(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert_relative_eq!(lse(&[0.0, 0.0]), 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(lse(&[-1e4, -1e4 + 2f64.ln()]), -1e4 + 3f64.ln(), epsilon = 1e-10);
        assert_relative_eq!(lse(&[1000.0, f64::NEG_INFINITY]), 1000.0, epsilon = 1e-12);
    }

    #[test]
    fn lse_matmul_matches_direct_product() {
        let n = 3;
        let a = [0.1, -0.4, 0.3, 1.0, 0.2, -2.0];
        let k = [0.0, -1.0, -3.0, -1.0, 0.0, -1.0, -3.0, -1.0, 0.0];
        let mut out = vec![0.0; 6];
        lse_matmul(&a, &k, n, &mut out);
        for r in 0..2 {
            for l in 0..n {
                let direct: f64 = (0..n).map(|j| (a[r * n + j] + k[j * n + l]).exp()).sum();
                assert_relative_eq!(out[r * n + l], direct.ln(), epsilon = 1e-14);
            }
        }
        let cols = lse_columns(&a, n);
        assert_relative_eq!(cols[0], (0.1f64.exp() + 1f64.exp()).ln(), epsilon = 1e-15);
    }
}
