use nalgebra::DMatrix;

/// Eigenvalues of the symmetric part of a square row-major matrix, largest first.
pub fn symmetric_eigenvalues_desc(a: &[f64], m: usize) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    let mat = DMatrix::from_fn(m, m, |i, j| 0.5 * (a[i * m + j] + a[j * m + i]));
    let mut ev: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Singular values of a row-major `rows × cols` matrix, largest first.
pub fn singular_values_desc(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mat = DMatrix::from_fn(rows, cols, |i, j| a[i * cols + j]);
    let mut sv: Vec<f64> = mat.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Smallest eigenvalue of a symmetric row-major matrix.
pub fn min_eigenvalue(a: &[f64], m: usize) -> f64 {
    symmetric_eigenvalues_desc(a, m).last().copied().unwrap_or(0.0)
}

/// A factor `R` with `R·Rᵀ = A` for positive semidefinite `A`, built from the
/// eigendecomposition so singular matrices are accepted. `None` if `A` is indefinite.
pub fn psd_square_root(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mat = DMatrix::from_fn(m, m, |i, j| 0.5 * (a[i * m + j] + a[j * m + i]));
    let eig = mat.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |s, &x| s.max(x.abs()));
    if eig.eigenvalues.iter().any(|&x| x < -1e-10 * scale) {
        return None;
    }
    let sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()));
    let root = &eig.eigenvectors * sqrt_d;
    Some((0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| root[(i, j)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diagonal() {
        let ev = symmetric_eigenvalues_desc(&[1.0, 0.0, 0.0, 3.0], 2);
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_root_reproduces_matrix() {
        let a = [2.0, 1.0, 1.0, 2.0];
        let r = psd_square_root(&a, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| r[i * 2 + k] * r[j * 2 + k]).sum();
                assert!((v - a[i * 2 + j]).abs() < 1e-12);
            }
        }
        assert!(psd_square_root(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }
}
