//! Grid fields on the truncated half-spaces and on the interface.
//!
//! Storage is column-major in the normal direction: the `n1 + 1` nodes of one
//! `(j2, j3)` column are contiguous, which keeps the normal sweeps of the
//! solver cache friendly and lets columns be processed in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceGrid {
    pub n2: usize,
    pub n3: usize,
    pub h2: f64,
    pub h3: f64,
}

impl SurfaceGrid {
    pub fn from_spec(spec: &GridSpec) -> Self {
        Self {
            n2: spec.nx2,
            n3: spec.nx3,
            h2: spec.h2(),
            h3: spec.h3(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n2 * self.n3
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, j2: usize, j3: usize) -> usize {
        j2 * self.n3 + j3
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k / self.n3, k % self.n3)
    }

    pub fn x2(&self, j2: usize) -> f64 {
        j2 as f64 * self.h2
    }

    pub fn x3(&self, j3: usize) -> f64 {
        j3 as f64 * self.h3
    }

    /// Periodic neighbours `(j2 - 1, j2 + 1)` and `(j3 - 1, j3 + 1)` of point `k`.
    #[inline]
    pub fn neighbours(&self, k: usize) -> [usize; 4] {
        let (j2, j3) = self.coords(k);
        let m2 = (j2 + self.n2 - 1) % self.n2;
        let p2 = (j2 + 1) % self.n2;
        let m3 = (j3 + self.n3 - 1) % self.n3;
        let p3 = (j3 + 1) % self.n3;
        [
            self.index(m2, j3),
            self.index(p2, j3),
            self.index(j2, m3),
            self.index(j2, p3),
        ]
    }

    pub fn cell_area(&self) -> f64 {
        self.h2 * self.h3
    }

    /// Centered periodic derivative along `axis` (2 or 3) of a scalar surface array.
    pub fn diff(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let (a, b, h) = match axis {
            2 => (0, 1, self.h2),
            _ => (2, 3, self.h3),
        };
        (0..self.len())
            .map(|k| {
                let nb = self.neighbours(k);
                (f[nb[b]] - f[nb[a]]) / (2.0 * h)
            })
            .collect()
    }

    /// Periodic trapezoid (= midpoint) quadrature of a surface array.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        pairwise_sum(f) * self.cell_area()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfGrid {
    pub side: Side,
    /// Normal cell count; columns hold `n1 + 1` nodes.
    pub n1: usize,
    pub h1: f64,
    pub surf: SurfaceGrid,
}

impl HalfGrid {
    pub fn from_spec(spec: &GridSpec, side: Side) -> Self {
        Self {
            side,
            n1: spec.nx1,
            h1: spec.h1(),
            surf: SurfaceGrid::from_spec(spec),
        }
    }

    #[inline]
    pub fn np1(&self) -> usize {
        self.n1 + 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.np1() * self.surf.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i1: usize, j2: usize, j3: usize) -> usize {
        self.surf.index(j2, j3) * self.np1() + i1
    }

    /// Index of node `i1` in surface column `k`.
    #[inline]
    pub fn col_index(&self, k: usize, i1: usize) -> usize {
        k * self.np1() + i1
    }

    /// Signed normal coordinate of node `i1`.
    #[inline]
    pub fn x1(&self, i1: usize) -> f64 {
        self.side.sign() * i1 as f64 * self.h1
    }

    /// Trapezoid weight in the normal direction.
    #[inline]
    pub fn w1(&self, i1: usize) -> f64 {
        if i1 == 0 || i1 == self.n1 {
            0.5 * self.h1
        } else {
            self.h1
        }
    }

    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let k = idx / self.np1();
        let (j2, j3) = self.surf.coords(k);
        (idx % self.np1(), j2, j3)
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (i1, j2, j3) = self.coords(idx);
        [self.x1(i1), self.surf.x2(j2), self.surf.x3(j3)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field<const N: usize> {
    pub grid: HalfGrid,
    pub data: Vec<[f64; N]>,
}

impl<const N: usize> Field<N> {
    pub fn zeros(grid: HalfGrid) -> Self {
        Self {
            grid,
            data: vec![[0.0; N]; grid.len()],
        }
    }

    /// Sample `f(x1, x2, x3)` at every node (`x1` signed).
    pub fn from_fn(grid: HalfGrid, f: impl Fn([f64; 3]) -> [f64; N] + Sync) -> Self {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.position(idx)))
            .collect();
        Self { grid, data }
    }

    #[inline]
    pub fn at(&self, i1: usize, j2: usize, j3: usize) -> &[f64; N] {
        &self.data[self.grid.index(i1, j2, j3)]
    }

    #[inline]
    pub fn at_mut(&mut self, i1: usize, j2: usize, j3: usize) -> &mut [f64; N] {
        let idx = self.grid.index(i1, j2, j3);
        &mut self.data[idx]
    }

    pub fn column(&self, k: usize) -> &[[f64; N]] {
        let n = self.grid.np1();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn check_compatible<const M: usize>(&self, other: &Field<M>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Usage("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = [0.0; N]);
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Field<N>) {
        debug_assert_eq!(self.grid, other.grid);
        self.data
            .par_iter_mut()
            .zip(other.data.par_iter())
            .for_each(|(x, y)| {
                for c in 0..N {
                    x[c] += a * y[c];
                }
            });
    }

    /// `self = a * self + b * other`.
    pub fn lincomb(&mut self, a: f64, b: f64, other: &Field<N>) {
        self.data
            .par_iter_mut()
            .zip(other.data.par_iter())
            .for_each(|(x, y)| {
                for c in 0..N {
                    x[c] = a * x[c] + b * y[c];
                }
            });
    }

    pub fn scale(&mut self, a: f64) {
        self.data.par_iter_mut().for_each(|x| {
            for v in x.iter_mut() {
                *v *= a;
            }
        });
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|x| x.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.iter().all(|v| v.is_finite()))
    }

    /// Trapezoid quadrature of a pointwise scalar density.
    pub fn integrate_with(&self, density: impl Fn(usize, &[f64; N]) -> f64 + Sync) -> f64 {
        let g = self.grid;
        let per_col: Vec<f64> = (0..g.surf.len())
            .into_par_iter()
            .map(|k| {
                let col = self.column(k);
                let vals: Vec<f64> = col
                    .iter()
                    .enumerate()
                    .map(|(i1, u)| g.w1(i1) * density(g.col_index(k, i1), u))
                    .collect();
                pairwise_sum(&vals)
            })
            .collect();
        pairwise_sum(&per_col) * g.surf.cell_area()
    }

    /// Squared discrete L2 norm (Euclidean in components, trapezoid in space).
    pub fn l2_sq(&self) -> f64 {
        self.integrate_with(|_, u| u.iter().map(|v| v * v).sum())
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    /// Values on the interface node layer `i1 = 0`.
    pub fn trace(&self) -> Vec<[f64; N]> {
        (0..self.grid.surf.len())
            .map(|k| self.column(k)[0])
            .collect()
    }

    /// Centered periodic derivative along `axis` (2 or 3).
    pub fn d_tan(&self, axis: usize) -> Result<Field<N>> {
        if axis != 2 && axis != 3 {
            return Err(Error::Usage(format!(
                "tangential axis must be 2 or 3, got {axis}"
            )));
        }
        let g = self.grid;
        let h = if axis == 2 { g.surf.h2 } else { g.surf.h3 };
        let inv = 1.0 / (2.0 * h);
        let np = g.np1();
        let mut out = Field::zeros(g);
        out.data
            .par_chunks_mut(np)
            .enumerate()
            .for_each(|(k, col)| {
                let nb = g.surf.neighbours(k);
                let (km, kp) = if axis == 2 {
                    (nb[0], nb[1])
                } else {
                    (nb[2], nb[3])
                };
                let cm = self.column(km);
                let cp = self.column(kp);
                for i1 in 0..np {
                    for c in 0..N {
                        col[i1][c] = (cp[i1][c] - cm[i1][c]) * inv;
                    }
                }
            });
        Ok(out)
    }

    /// Derivative in the signed normal coordinate `x1`: centered in the
    /// interior, second-order one-sided at both column ends.
    pub fn d_normal(&self) -> Field<N> {
        let g = self.grid;
        let scale = g.side.sign() / g.h1;
        let np = g.np1();
        let mut out = Field::zeros(g);
        out.data
            .par_chunks_mut(np)
            .enumerate()
            .for_each(|(k, col)| {
                d1_column(self.column(k), col, scale);
            });
        out
    }

    /// Derivative along any axis 1..3.
    pub fn d_axis(&self, axis: usize) -> Result<Field<N>> {
        match axis {
            1 => Ok(self.d_normal()),
            2 | 3 => self.d_tan(axis),
            _ => Err(Error::Usage(format!("axis must be 1, 2 or 3, got {axis}"))),
        }
    }

    pub fn component(&self, c: usize) -> Field<1> {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|x| [x[c]]).collect(),
        }
    }
}

/// Index-space derivative of one column scaled by `scale` (pass `±1/h`).
pub fn d1_column<const N: usize>(u: &[[f64; N]], out: &mut [[f64; N]], scale: f64) {
    let n = u.len();
    assert!(n >= 3, "column too short for one-sided differences");
    for c in 0..N {
        out[0][c] = scale * (-1.5 * u[0][c] + 2.0 * u[1][c] - 0.5 * u[2][c]);
        out[n - 1][c] = scale * (1.5 * u[n - 1][c] - 2.0 * u[n - 2][c] + 0.5 * u[n - 3][c]);
    }
    for i in 1..n - 1 {
        for c in 0..N {
            out[i][c] = scale * 0.5 * (u[i + 1][c] - u[i - 1][c]);
        }
    }
}

/// Deterministic pairwise summation; the tree depends only on the length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// A scalar field on the interface with its time derivative and its discrete
/// tangential gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceField {
    grid: SurfaceGrid,
    phi: Vec<f64>,
    dt_phi: Vec<f64>,
    grad_phi: Vec<[f64; 2]>,
}

impl InterfaceField {
    pub fn new(grid: SurfaceGrid, phi: Vec<f64>, dt_phi: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.len() || dt_phi.len() != grid.len() {
            return Err(Error::Usage(
                "interface arrays do not match the grid".into(),
            ));
        }
        let d2 = grid.diff(&phi, 2);
        let d3 = grid.diff(&phi, 3);
        let grad_phi = d2.into_iter().zip(d3).map(|(a, b)| [a, b]).collect();
        Ok(Self {
            grid,
            phi,
            dt_phi,
            grad_phi,
        })
    }

    pub fn zeros(grid: SurfaceGrid) -> Self {
        Self::new(grid, vec![0.0; grid.len()], vec![0.0; grid.len()]).expect("sizes match")
    }

    pub fn from_fn(grid: SurfaceGrid, phi: impl Fn(f64, f64) -> f64) -> Self {
        let v = (0..grid.len())
            .map(|k| {
                let (j2, j3) = grid.coords(k);
                phi(grid.x2(j2), grid.x3(j3))
            })
            .collect();
        Self::new(grid, v, vec![0.0; grid.len()]).expect("sizes match")
    }

    /// Replace the stored gradient by exact values (used for analytic ring states).
    pub fn with_gradient(mut self, grad: Vec<[f64; 2]>) -> Result<Self> {
        if grad.len() != self.grid.len() {
            return Err(Error::Usage(
                "gradient array does not match the grid".into(),
            ));
        }
        self.grad_phi = grad;
        Ok(self)
    }

    pub fn grid(&self) -> &SurfaceGrid {
        &self.grid
    }
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
    pub fn dt_phi(&self) -> &[f64] {
        &self.dt_phi
    }
    pub fn grad_phi(&self) -> &[[f64; 2]] {
        &self.grad_phi
    }

    pub fn max_abs(&self) -> f64 {
        self.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> GridSpec {
        GridSpec {
            nx1: n,
            nx2: n,
            nx3: n,
            l1: 2.0,
            l2: 2.0 * std::f64::consts::PI,
            l3: 2.0 * std::f64::consts::PI,
            dt: None,
        }
    }

    #[test]
    fn layout_roundtrip() {
        let g = HalfGrid::from_spec(&spec(5), Side::Minus);
        for idx in 0..g.len() {
            let (i1, j2, j3) = g.coords(idx);
            assert_eq!(g.index(i1, j2, j3), idx);
        }
        assert!(g.x1(3) < 0.0);
    }

    #[test]
    fn normal_derivative_exact_for_quadratics() {
        for side in [Side::Plus, Side::Minus] {
            let g = HalfGrid::from_spec(&spec(8), side);
            let f = Field::<1>::from_fn(g, |x| [x[0] * x[0] - 3.0 * x[0]]);
            let d = f.d_normal();
            for idx in 0..g.len() {
                let x = g.position(idx)[0];
                assert!((d.data[idx][0] - (2.0 * x - 3.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tangential_derivative_symbol() {
        // centered difference of exp(i k x) has symbol i sin(k h)/h
        let s = spec(16);
        let g = HalfGrid::from_spec(&s, Side::Plus);
        let k = 2.0;
        let f = Field::<2>::from_fn(g, |x| [(k * x[1]).cos(), (k * x[1]).sin()]);
        let d = f.d_tan(2).unwrap();
        let sym = (k * g.surf.h2).sin() / g.surf.h2;
        for idx in 0..g.len() {
            let u = f.data[idx];
            assert!((d.data[idx][0] + sym * u[1]).abs() < 1e-12);
            assert!((d.data[idx][1] - sym * u[0]).abs() < 1e-12);
        }
        assert!(f.d_tan(4).is_err());
    }

    #[test]
    fn trapezoid_integrates_constants() {
        let s = spec(6);
        let g = HalfGrid::from_spec(&s, Side::Plus);
        let f = Field::<1>::from_fn(g, |_| [3.0]);
        let m = s.l1 * s.l2 * s.l3;
        assert!((f.integrate_with(|_, u| u[0]) - 3.0 * m).abs() < 1e-12 * m);
    }

    #[test]
    fn pairwise_is_deterministic() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(pairwise_sum(&v).to_bits(), pairwise_sum(&v).to_bits());
    }
}
