use nalgebra::{DMatrix, DVector};

/// Column-pivoted Householder QR with an explicitly accumulated full Q,
/// sized for the small dense systems of an MPC working set.
///
/// `matrix * P = Q * R` where `P` permutes columns (`perm[j]` is the original
/// index of pivoted column `j`), `Q` is square orthogonal and `R` is upper
/// trapezoidal with nonincreasing diagonal magnitudes.
pub(crate) struct PivotedQr {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub perm: Vec<usize>,
    pub rank: usize,
}

pub(crate) fn pivoted_qr(matrix: &DMatrix<f64>, rel_tol: f64) -> PivotedQr {
    let rows = matrix.nrows();
    let cols = matrix.ncols();
    let mut r = matrix.clone();
    let mut q = DMatrix::identity(rows, rows);
    let mut perm: Vec<usize> = (0..cols).collect();

    let steps = rows.min(cols);
    let mut rank = 0;
    let mut first_pivot = 0.0;
    for k in 0..steps {
        // Exact trailing column norms; the matrices here are tiny.
        let mut pivot = k;
        let mut best = trailing_norm_sq(&r, k, k);
        for j in k + 1..cols {
            let n = trailing_norm_sq(&r, k, j);
            if n > best {
                best = n;
                pivot = j;
            }
        }
        let col_norm = best.sqrt();
        if k == 0 {
            first_pivot = col_norm;
        }
        if col_norm <= rel_tol * first_pivot.max(f64::MIN_POSITIVE) {
            break;
        }
        if pivot != k {
            r.swap_columns(k, pivot);
            perm.swap(k, pivot);
        }

        // Householder reflection zeroing r[k+1.., k].
        let mut v = DVector::zeros(rows - k);
        for i in k..rows {
            v[i - k] = r[(i, k)];
        }
        let alpha = -v[0].signum() * v.norm();
        v[0] -= alpha;
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
            // r[k.., k..] -= 2 v (v' r[k.., k..])
            for j in k..cols {
                let mut dot = 0.0;
                for i in k..rows {
                    dot += v[i - k] * r[(i, j)];
                }
                for i in k..rows {
                    r[(i, j)] -= 2.0 * v[i - k] * dot;
                }
            }
            // q[:, k..] -= 2 (q[:, k..] v) v'
            for i in 0..rows {
                let mut dot = 0.0;
                for j in k..rows {
                    dot += q[(i, j)] * v[j - k];
                }
                for j in k..rows {
                    q[(i, j)] -= 2.0 * dot * v[j - k];
                }
            }
        }
        r[(k, k)] = alpha;
        for i in k + 1..rows {
            r[(i, k)] = 0.0;
        }
        rank = k + 1;
    }

    // Anything below the detected rank is numerically zero.
    for i in rank..rows {
        for j in 0..cols {
            r[(i, j)] = 0.0;
        }
    }
    PivotedQr { q, r, perm, rank }
}

fn trailing_norm_sq(r: &DMatrix<f64>, from_row: usize, col: usize) -> f64 {
    (from_row..r.nrows()).map(|i| r[(i, col)] * r[(i, col)]).sum()
}
