//! Correlation and spectral helpers used by the importance metrics.
//!
//! Everything here works in `f64`; inputs arrive as `f32` activations.

use nalgebra::{DMatrix, SymmetricEigen};

/// Pearson correlation of two equally long series.
///
/// Returns 0 when either series is constant, so a degenerate channel never
/// looks correlated.
pub fn pearson(x: &[f32], y: &[f32]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 || is_constant(x) || is_constant(y) {
        return 0.0;
    }
    let mean = |v: &[f32]| v.iter().map(|&a| a as f64).sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a as f64 - mx;
        let dy = b as f64 - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

fn is_constant(v: &[f32]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Singular values of a `rows x cols` row-major matrix by one-sided Jacobi
/// rotations, sorted descending. Returns `min(rows, cols)` values.
pub fn singular_values(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(data.len(), rows * cols);
    // Orthogonalize the vectors along the longer axis: `k` vectors of length `len`.
    let (k, len) = if cols <= rows { (cols, rows) } else { (rows, cols) };
    let mut vecs: Vec<Vec<f64>> = if cols <= rows {
        (0..cols)
            .map(|j| (0..rows).map(|i| data[i * cols + j]).collect())
            .collect()
    } else {
        data.chunks_exact(cols).map(<[f64]>::to_vec).collect()
    };
    debug_assert!(vecs.iter().all(|v| v.len() == len));

    const MAX_SWEEPS: usize = 80;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (alpha, beta, gamma) = {
                    let (vp, vq) = (&vecs[p], &vecs[q]);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for (x, y) in vp.iter().zip(vq) {
                        a += x * x;
                        b += y * y;
                        g += x * y;
                    }
                    (a, b, g)
                };
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = vecs.split_at_mut(q);
                let (vp, vq) = (&mut lo[p], &mut hi[0]);
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = vecs
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values strictly above `rel_tol * sigma_max`.
pub fn numerical_rank(singular: &[f64], rel_tol: f64) -> usize {
    let max = singular.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Gram matrix `M M^T` of a `rows x cols` row-major matrix.
pub fn gram(data: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    let mut g = DMatrix::<f64>::zeros(rows, rows);
    for i in 0..rows {
        let ri = &data[i * cols..(i + 1) * cols];
        for j in i..rows {
            let rj = &data[j * cols..(j + 1) * cols];
            let v: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Nuclear norm from a Gram matrix: the sum of square roots of its
/// (clamped non-negative) eigenvalues.
pub fn nuclear_norm_from_gram(g: &DMatrix<f64>) -> f64 {
    if g.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(g.clone())
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum()
}

/// For each row `k`, `||M||_* - ||M with row k zeroed||_*`.
pub fn nuclear_norm_row_drops(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let g = gram(data, rows, cols);
    let full = nuclear_norm_from_gram(&g);
    (0..rows)
        .map(|k| {
            let keep: Vec<usize> = (0..rows).filter(|&i| i != k).collect();
            let sub = g.select_rows(&keep).select_columns(&keep);
            full - nuclear_norm_from_gram(&sub)
        })
        .collect()
}
