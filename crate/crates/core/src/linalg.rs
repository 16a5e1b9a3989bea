//! Dense LU with partial pivoting and a preconditioned conjugate-gradient
//! driver. The dense systems here are small (a few hundred unknowns) and
//! diagonally dominant by column; the CG side serves the finite-volume
//! oracle's SPD systems.

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub n: usize,
    pub a: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            a: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        self.a
            .chunks_exact(n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Solve A x = b by LU with partial pivoting. Returns None if a pivot
    /// collapses (singular to working precision).
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let mut lu = self.a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut piv = col;
            let mut max = lu[perm[col] * n + col].abs();
            for (r, &pr) in perm.iter().enumerate().skip(col + 1) {
                let v = lu[pr * n + col].abs();
                if v > max {
                    max = v;
                    piv = r;
                }
            }
            if max < 1e-300 {
                return None;
            }
            perm.swap(col, piv);
            let prow = perm[col];
            let pivval = lu[prow * n + col];
            for &r in perm.iter().skip(col + 1) {
                let factor = lu[r * n + col] / pivval;
                lu[r * n + col] = factor;
                for j in col + 1..n {
                    lu[r * n + j] -= factor * lu[prow * n + j];
                }
            }
        }
        // forward/back substitution
        let mut y = vec![0.0; n];
        for i in 0..n {
            let r = perm[i];
            let mut s = b[r];
            for j in 0..i {
                s -= lu[r * n + j] * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let r = perm[i];
            let mut s = y[i];
            for j in i + 1..n {
                s -= lu[r * n + j] * x[j];
            }
            x[i] = s / lu[r * n + i];
        }
        Some(x)
    }
}

/// Jacobi-preconditioned CG for SPD operators given as closures.
/// Returns (solution, relative residual, iterations).
pub fn pcg<F>(
    apply: F,
    diag: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (vec![0.0; n], 0.0, 0);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iters = 0;
    while iters < max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iters += 1;
        let rn = norm2(&r);
        if rn <= tol * bnorm {
            return (x, rn / bnorm, iters);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rn = norm2(&r);
    (x, rn / bnorm, iters)
}

/// Householder-QR least squares for a dense tall matrix (rows ≥ cols),
/// minimizing ‖A x − b‖₂. Column-pivot-free; callers should normalize
/// columns. Returns None on rank collapse.
pub fn least_squares(rows: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = rows.len();
    let n = rows.first()?.len();
    if m < n {
        return None;
    }
    // column-major working copy
    let mut a = vec![0.0f64; m * n];
    for (i, r) in rows.iter().enumerate() {
        for j in 0..n {
            a[j * m + i] = r[j];
        }
    }
    let mut rhs = b.to_vec();
    for k in 0..n {
        // Householder vector for column k below row k
        let col = &a[k * m..(k + 1) * m];
        let norm_x = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_x < 1e-300 {
            return None;
        }
        let alpha = if col[k] >= 0.0 { -norm_x } else { norm_x };
        let mut v = vec![0.0; m - k];
        v[0] = col[k] - alpha;
        v[1..].copy_from_slice(&col[k + 1..]);
        let vn2 = v.iter().map(|x| x * x).sum::<f64>();
        if vn2 < 1e-300 {
            continue;
        }
        a[k * m + k] = alpha;
        for i in k + 1..m {
            a[k * m + i] = 0.0;
        }
        for j in k + 1..n {
            let cj = &mut a[j * m..(j + 1) * m];
            let dot: f64 = v.iter().zip(&cj[k..]).map(|(x, y)| x * y).sum();
            let s = 2.0 * dot / vn2;
            for (i, vi) in v.iter().enumerate() {
                cj[k + i] -= s * vi;
            }
        }
        let dot: f64 = v.iter().zip(&rhs[k..]).map(|(x, y)| x * y).sum();
        let s = 2.0 * dot / vn2;
        for (i, vi) in v.iter().enumerate() {
            rhs[k + i] -= s * vi;
        }
    }
    // back substitution on the R factor
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= a[j * m + i] * x[j];
        }
        let d = a[i * m + i];
        if d.abs() < 1e-14 {
            return None;
        }
        x[i] = s / d;
    }
    Some(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    #[test]
    fn lu_solves_random_dominant_system() {
        let n = 40;
        let mut rng = SplitMix64::new(2);
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            let mut rowsum = 0.0;
            for j in 0..n {
                if i != j {
                    let v = rng.range(-1.0, 1.0) / n as f64;
                    m.set(i, j, v);
                    rowsum += v.abs();
                }
            }
            m.set(i, i, rowsum + 1.0);
        }
        let xtrue: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = m.matvec(&xtrue);
        let x = m.solve(&b).unwrap();
        let err: f64 = x
            .iter()
            .zip(&xtrue)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "max err {err}");
    }

    #[test]
    fn lu_detects_singular() {
        let mut m = DenseMatrix::zeros(2);
        m.set(0, 0, 1.0);
        m.set(0, 1, 2.0);
        m.set(1, 0, 2.0);
        m.set(1, 1, 4.0);
        assert!(m.solve(&[1.0, 2.0]).is_none());
    }

    #[test]
    fn least_squares_recovers_polynomial_fit() {
        // fit y = 2 − 3t + 0.5t² sampled with exact values
        let ts: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let rows: Vec<Vec<f64>> = ts.iter().map(|&t| vec![1.0, t, t * t]).collect();
        let b: Vec<f64> = ts.iter().map(|&t| 2.0 - 3.0 * t + 0.5 * t * t).collect();
        let x = least_squares(&rows, &b).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] + 3.0).abs() < 1e-12);
        assert!((x[2] - 0.5).abs() < 1e-11);
    }

    #[test]
    fn pcg_solves_laplacian_1d() {
        // -u'' = f on a 1-D grid, SPD tridiagonal
        let n = 200;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r;
            }
        };
        let diag = vec![2.0; n];
        let b = vec![1.0; n];
        let (x, rel, _iters) = pcg(apply, &diag, &b, 1e-12, 10_000);
        let mut y = vec![0.0; n];
        apply(&x, &mut y);
        let res: f64 = y.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(rel <= 1e-12 && res < 1e-9, "rel {rel} res {res}");
    }
}
