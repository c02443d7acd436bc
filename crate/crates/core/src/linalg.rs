//! Small dense matrices (orders 2 through 8) with symmetric eigen-analysis.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat<const N: usize> = [[f64; N]; N];

/// Square symmetric matrix. Every mutating method writes both `(i, j)` and
/// `(j, i)`, so symmetry holds bit-for-bit by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMatrix<const N: usize> {
    m: Mat<N>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Inertia {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
}

/// Eigen-decomposition with eigenvalues ascending and eigenvectors as the
/// columns of `vectors` (so `vectors[r][c]` is row `r` of eigenvector `c`).
#[derive(Clone, Debug)]
pub struct SymEigen<const N: usize> {
    pub values: [f64; N],
    pub vectors: Mat<N>,
}

impl<const N: usize> SymEigen<N> {
    pub fn vector(&self, c: usize) -> [f64; N] {
        std::array::from_fn(|r| self.vectors[r][c])
    }
}

impl<const N: usize> Default for SymMatrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> SymMatrix<N> {
    pub fn zeros() -> Self {
        Self { m: [[0.0; N]; N] }
    }

    pub fn identity() -> Self {
        let mut s = Self::zeros();
        for i in 0..N {
            s.m[i][i] = 1.0;
        }
        s
    }

    pub fn diagonal(d: [f64; N]) -> Self {
        let mut s = Self::zeros();
        for i in 0..N {
            s.m[i][i] = d[i];
        }
        s
    }

    /// Symmetrize a raw array by averaging; intended for inputs whose symmetry
    /// is known analytically but may be off by round-off.
    pub fn from_symmetric_part(a: &Mat<N>) -> Self {
        let mut s = Self::zeros();
        for i in 0..N {
            for j in i..N {
                s.set(i, j, 0.5 * (a[i][j] + a[j][i]));
            }
        }
        s
    }

    /// Accept an exactly symmetric array, rejecting anything else.
    pub fn try_from_array(a: Mat<N>) -> Result<Self> {
        for i in 0..N {
            for j in 0..i {
                if a[i][j] != a[j][i] {
                    return Err(Error::Usage(format!(
                        "matrix is not symmetric at ({i},{j}): {} vs {}",
                        a[i][j], a[j][i]
                    )));
                }
            }
        }
        Ok(Self { m: a })
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] += v;
        if i != j {
            self.m[j][i] += v;
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn as_array(&self) -> &Mat<N> {
        &self.m
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        (0..N).all(|i| (0..i).all(|j| self.m[i][j].to_bits() == self.m[j][i].to_bits()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for x in row.iter_mut() {
                *x *= a;
            }
        }
        out
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..N {
            for j in 0..N {
                out.m[i][j] += a * other.m[i][j];
            }
        }
        out
    }

    pub fn mul_vec(&self, u: &[f64; N]) -> [f64; N] {
        mat_vec(&self.m, u)
    }

    /// Quadratic form `M u . u`.
    pub fn quad(&self, u: &[f64; N]) -> f64 {
        dot(&self.mul_vec(u), u)
    }

    /// Bilinear form `M u . w`.
    pub fn bilinear(&self, u: &[f64; N], w: &[f64; N]) -> f64 {
        dot(&self.mul_vec(u), w)
    }

    pub fn trace(&self) -> f64 {
        (0..N).map(|i| self.m[i][i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    pub fn eigen(&self) -> SymEigen<N> {
        let a = DMatrix::<f64>::from_fn(N, N, |i, j| self.m[i][j]);
        let se = a.symmetric_eigen();
        let mut order: [usize; N] = std::array::from_fn(|i| i);
        order.sort_by(|&x, &y| se.eigenvalues[x].total_cmp(&se.eigenvalues[y]));
        let values = std::array::from_fn(|k| se.eigenvalues[order[k]]);
        let mut vectors = [[0.0; N]; N];
        for (c, &src) in order.iter().enumerate() {
            // fix the sign so the largest-magnitude component is positive
            let col = se.eigenvectors.column(src);
            let mut best = 0;
            for r in 1..N {
                if col[r].abs() > col[best].abs() + 1e-14 {
                    best = r;
                }
            }
            let sgn = if col[best] < 0.0 { -1.0 } else { 1.0 };
            for r in 0..N {
                vectors[r][c] = sgn * col[r];
            }
        }
        SymEigen { values, vectors }
    }

    pub fn eigenvalues(&self) -> [f64; N] {
        self.eigen().values
    }

    pub fn spectral_radius(&self) -> f64 {
        let v = self.eigenvalues();
        v[0].abs().max(v[N - 1].abs())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Default zero threshold: `1e-8` times the spectral radius.
    pub fn inertia(&self, zero_tol: Option<f64>) -> Inertia {
        let vals = self.eigenvalues();
        let rad = vals[0].abs().max(vals[N - 1].abs());
        let tol = zero_tol.unwrap_or(1e-8 * rad);
        count_inertia(&vals, tol)
    }

    pub fn inverse(&self) -> Result<Mat<N>> {
        invert(&self.m)
    }

    /// Row-major CSV dump with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in &self.m {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

fn count_inertia(vals: &[f64], tol: f64) -> Inertia {
    let mut out = Inertia {
        n_neg: 0,
        n_zero: 0,
        n_pos: 0,
    };
    for &v in vals {
        if v < -tol {
            out.n_neg += 1;
        } else if v > tol {
            out.n_pos += 1;
        } else {
            out.n_zero += 1;
        }
    }
    out
}

/// Inertia of a dynamically sized square matrix given by rows. Rejects
/// matrices that are not exactly symmetric.
pub fn inertia(rows: &[Vec<f64>], zero_tol: Option<f64>) -> Result<Inertia> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Usage("inertia needs a square matrix".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if rows[i][j] != rows[j][i] {
                return Err(Error::Usage(format!(
                    "inertia needs a symmetric matrix; ({i},{j}) differs"
                )));
            }
        }
    }
    if n == 0 {
        return Ok(count_inertia(&[], 0.0));
    }
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let vals: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
    let rad = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(count_inertia(&vals, zero_tol.unwrap_or(1e-8 * rad)))
}

#[inline]
pub fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn mat_vec<const N: usize>(m: &Mat<N>, u: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        let row = &m[i];
        let mut s = 0.0;
        for j in 0..N {
            s += row[j] * u[j];
        }
        out[i] = s;
    }
    out
}

pub fn mat_mul<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut out = [[0.0; N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..N {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn invert<const N: usize>(a: &Mat<N>) -> Result<Mat<N>> {
    let m = DMatrix::<f64>::from_fn(N, N, |i, j| a[i][j]);
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular matrix in inversion".into()))?;
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| inv[(i, j)])
    }))
}

/// Solve `A x = b` for a small dense system.
pub fn solve<const N: usize>(a: &Mat<N>, b: &[f64; N]) -> Result<[f64; N]> {
    let m = DMatrix::<f64>::from_fn(N, N, |i, j| a[i][j]);
    let rhs = DVector::<f64>::from_fn(N, |i, _| b[i]);
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular matrix in solve".into()))?;
    Ok(std::array::from_fn(|i| x[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inertia_of_identity_and_diagonal() {
        assert_eq!(
            SymMatrix::<6>::identity().inertia(None),
            Inertia {
                n_neg: 0,
                n_zero: 0,
                n_pos: 6
            }
        );
        let d = SymMatrix::diagonal([-2.0, 0.0, 3.0]);
        assert_eq!(
            d.inertia(None),
            Inertia {
                n_neg: 1,
                n_zero: 1,
                n_pos: 1
            }
        );
    }

    #[test]
    fn dynamic_inertia_rejects_asymmetry() {
        let rows = vec![vec![1.0, 2.0], vec![2.0 + 1e-15, 1.0]];
        assert!(matches!(inertia(&rows, None), Err(Error::Usage(_))));
        let rows = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let i = inertia(&rows, None).unwrap();
        assert_eq!((i.n_neg, i.n_zero, i.n_pos), (1, 0, 1));
    }

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let mut m = SymMatrix::<4>::zeros();
        m.set(0, 0, 2.0);
        m.set(0, 1, -1.0);
        m.set(1, 1, 2.0);
        m.set(1, 2, -1.0);
        m.set(2, 2, 2.0);
        m.set(2, 3, -1.0);
        m.set(3, 3, 2.0);
        let e = m.eigen();
        for k in 1..4 {
            assert!(e.values[k] >= e.values[k - 1]);
        }
        for c in 0..4 {
            let v = e.vector(c);
            let mv = m.mul_vec(&v);
            for r in 0..4 {
                assert!((mv[r] - e.values[c] * v[r]).abs() < 1e-13);
            }
        }
        // tridiagonal(−1,2,−1) eigenvalues 2 − 2cos(kπ/5)
        for k in 0..4 {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 5.0).cos();
            assert!((e.values[k] - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn inverse_and_solve() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let inv = invert(&a).unwrap();
        let p = mat_mul(&a, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - want).abs() < 1e-14);
            }
        }
        let x = solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        let b = mat_vec(&a, &x);
        assert!((b[0] - 1.0).abs() < 1e-14 && (b[2] - 3.0).abs() < 1e-14);
        assert!(invert(&[[1.0, 2.0], [2.0, 4.0]]).is_err());
    }

    #[test]
    fn csv_roundtrips_to_full_precision() {
        let mut m = SymMatrix::<2>::zeros();
        m.set(0, 1, 1.0 / 3.0);
        let csv = m.to_csv();
        let v: f64 = csv
            .lines()
            .next()
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }
}
