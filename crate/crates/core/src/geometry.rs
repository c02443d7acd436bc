//! Cut-off function, the lift to fixed half-spaces, interface frames and the
//! mean-curvature operator with its linearization.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{HalfGrid, InterfaceField, SurfaceGrid};
use crate::symmetrizers::LiftPoint;

/// Steepness of the smooth step used by the cut-off and the conormal weight.
/// The value keeps `|chi'| <= 2` on the transition `1/4 <= |x1| <= 1`.
pub const STEP_STEEPNESS: f64 = 0.6;

/// Default bound on `|phi|`; with `|chi'| <= 2` it keeps `d1 Phi >= 1/2`.
pub const PHI_MAX: f64 = 0.25;

const PLATEAU: f64 = 0.25;
const SUPPORT: f64 = 1.0;

/// Smooth monotone step on `[0, 1]`: 0 at `t <= 0`, 1 at `t >= 1`, with all
/// derivatives vanishing at both ends. Returns the value and first derivative.
pub fn smooth_step(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let c = STEP_STEEPNESS;
    let z = c * (1.0 / t - 1.0 / (1.0 - t));
    // logistic in z, evaluated without overflow on either tail
    let s = if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    };
    let dz = -c * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)));
    (s, -dz * s * (1.0 - s))
}

/// Cut-off `chi(x1)` and `chi'(x1)`: equal to 1 on `|x1| <= 1/4`, zero for
/// `|x1| >= 1`, even, monotone on each side.
pub fn cutoff_chi(x1: f64) -> (f64, f64) {
    let a = x1.abs();
    if a <= PLATEAU {
        return (1.0, 0.0);
    }
    if a >= SUPPORT {
        return (0.0, 0.0);
    }
    let w = SUPPORT - PLATEAU;
    let (s, ds) = smooth_step((SUPPORT - a) / w);
    (s, -x1.signum() * ds / w)
}

/// Pointwise lift derivatives over a half-space grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftField {
    pub grid: HalfGrid,
    pub points: Vec<LiftPoint>,
}

impl LiftField {
    pub fn identity(grid: HalfGrid) -> Self {
        Self {
            grid,
            points: vec![LiftPoint::IDENTITY; grid.len()],
        }
    }

    pub fn min_d1(&self) -> f64 {
        self.points
            .iter()
            .fold(f64::INFINITY, |m, p| m.min(p.d1_phi))
    }
}

/// Derivatives of `Phi = x1 + chi(x1) phi`: `d1 Phi = 1 + chi' phi`,
/// `dt Phi = chi dt phi`, `dk Phi = chi dk phi`.
pub fn lift_phi(phi: &InterfaceField, grid: &HalfGrid, phi_max: f64) -> Result<LiftField> {
    if *phi.grid() != grid.surf {
        return Err(Error::Usage("interface and half-space grids differ".into()));
    }
    for (k, &v) in phi.phi().iter().enumerate() {
        if v.abs() > phi_max {
            let (j2, j3) = grid.surf.coords(k);
            return Err(Error::Domain(format!(
                "|phi| = {:.6e} exceeds {phi_max} at (j2, j3) = ({j2}, {j3})",
                v.abs()
            )));
        }
    }
    let np = grid.np1();
    let chis: Vec<(f64, f64)> = (0..np).map(|i1| cutoff_chi(grid.x1(i1))).collect();
    let points = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let k = idx / np;
            let (chi, dchi) = chis[idx % np];
            let g = phi.grad_phi()[k];
            LiftPoint {
                dt_phi_lift: chi * phi.dt_phi()[k],
                d1_phi: 1.0 + dchi * phi.phi()[k],
                d2_phi: chi * g[0],
                d3_phi: chi * g[1],
            }
        })
        .collect();
    Ok(LiftField {
        grid: *grid,
        points,
    })
}

/// `N = (1, -d2 phi, -d3 phi)`, `tau2 = (d2 phi, 1, 0)`, `tau3 = (d3 phi, 0, 1)`.
pub fn normal_tangents(d2: f64, d3: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    ([1.0, -d2, -d3], [d2, 1.0, 0.0], [d3, 0.0, 1.0])
}

/// `B = I / |N| - grad phi (x) grad phi / |N|^3` with `|N| = sqrt(1 + |grad phi|^2)`.
pub fn curvature_matrix_at(g: [f64; 2]) -> [[f64; 2]; 2] {
    let n2 = 1.0 + g[0] * g[0] + g[1] * g[1];
    let n = n2.sqrt();
    let n3 = n2 * n;
    [
        [1.0 / n - g[0] * g[0] / n3, -g[0] * g[1] / n3],
        [-g[0] * g[1] / n3, 1.0 / n - g[1] * g[1] / n3],
    ]
}

pub fn curvature_matrix(phi_ring: &InterfaceField) -> Vec<[[f64; 2]; 2]> {
    phi_ring
        .grad_phi()
        .iter()
        .map(|&g| curvature_matrix_at(g))
        .collect()
}

fn divergence(grid: &SurfaceGrid, flux: &[[f64; 2]]) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            let nb = grid.neighbours(k);
            (flux[nb[1]][0] - flux[nb[0]][0]) / (2.0 * grid.h2)
                + (flux[nb[3]][1] - flux[nb[2]][1]) / (2.0 * grid.h3)
        })
        .collect()
}

/// Twice the mean curvature, `div' (grad' phi / sqrt(1 + |grad' phi|^2))`.
pub fn mean_curvature(phi: &InterfaceField) -> Vec<f64> {
    let flux: Vec<[f64; 2]> = phi
        .grad_phi()
        .iter()
        .map(|g| {
            let n = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
            [g[0] / n, g[1] / n]
        })
        .collect();
    divergence(phi.grid(), &flux)
}

/// `div' (B grad' phi)` with `B` from the ring interface. The discrete form is
/// `D^T`-antisymmetric composed with a symmetric pointwise matrix, hence
/// self-adjoint and nonpositive on the periodic grid.
pub fn linearized_curvature(phi: &InterfaceField, phi_ring: &InterfaceField) -> Result<Vec<f64>> {
    if phi.grid() != phi_ring.grid() {
        return Err(Error::Usage("interface grids differ".into()));
    }
    Ok(linearized_curvature_with(
        phi.grid(),
        phi.phi(),
        &curvature_matrix(phi_ring),
    ))
}

/// Same as [`linearized_curvature`] with a precomputed curvature matrix and a raw array.
pub fn linearized_curvature_with(grid: &SurfaceGrid, phi: &[f64], b: &[[[f64; 2]; 2]]) -> Vec<f64> {
    let d2 = grid.diff(phi, 2);
    let d3 = grid.diff(phi, 3);
    let flux: Vec<[f64; 2]> = (0..grid.len())
        .map(|k| {
            let m = &b[k];
            [
                m[0][0] * d2[k] + m[0][1] * d3[k],
                m[1][0] * d2[k] + m[1][1] * d3[k],
            ]
        })
        .collect();
    divergence(grid, &flux)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Side;
    use crate::state::GridSpec;

    #[test]
    fn chi_plateau_and_support() {
        assert_eq!(cutoff_chi(0.0), (1.0, 0.0));
        assert_eq!(cutoff_chi(0.25), (1.0, 0.0));
        assert_eq!(cutoff_chi(1.0), (0.0, 0.0));
        assert_eq!(cutoff_chi(-1.0), (0.0, 0.0));
        let (c, d) = cutoff_chi(0.6);
        assert!(c > 0.0 && c < 1.0 && d < 0.0);
        let (cm, dm) = cutoff_chi(-0.6);
        assert_eq!(c, cm);
        assert_eq!(d, -dm);
    }

    #[test]
    fn chi_derivative_matches_high_order_difference() {
        let h = 1e-4;
        for &x in &[0.3, 0.45, 0.6, 0.75, 0.9, -0.5] {
            let f = |t: f64| cutoff_chi(t).0;
            let fd =
                (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
            assert!(
                (fd - cutoff_chi(x).1).abs() < 1e-8,
                "x = {x}: {fd} vs {}",
                cutoff_chi(x).1
            );
        }
    }

    #[test]
    fn chi_slope_bound() {
        let mut m = 0.0f64;
        for k in 0..=20000 {
            let x = 0.25 + 0.75 * k as f64 / 20000.0;
            m = m.max(cutoff_chi(x).1.abs());
        }
        assert!(m <= 2.0, "max |chi'| = {m}");
        assert!(m > 1.9);
    }

    #[test]
    fn monotone_on_each_side() {
        let mut last = 1.0;
        for k in 0..=1000 {
            let c = cutoff_chi(k as f64 / 1000.0).0;
            assert!(c <= last);
            last = c;
        }
    }

    fn spec(n: usize) -> GridSpec {
        GridSpec {
            nx1: 2 * n,
            nx2: n,
            nx3: n,
            l1: 2.0,
            l2: 2.0,
            l3: 2.0,
            dt: None,
        }
    }

    #[test]
    fn lift_bounds() {
        let s = spec(8);
        let sg = SurfaceGrid::from_spec(&s);
        for side in [Side::Plus, Side::Minus] {
            let g = HalfGrid::from_spec(&s, side);
            let flat = InterfaceField::zeros(sg);
            let l = lift_phi(&flat, &g, PHI_MAX).unwrap();
            assert!(l.points.iter().all(|p| *p == LiftPoint::IDENTITY));
            let c = InterfaceField::from_fn(sg, |_, _| 0.2);
            let l = lift_phi(&c, &g, PHI_MAX).unwrap();
            assert!(l.min_d1() >= 0.5);
            for idx in 0..g.len() {
                if g.position(idx)[0].abs() >= 1.0 {
                    assert_eq!(l.points[idx].d1_phi, 1.0);
                }
            }
            let big = InterfaceField::from_fn(sg, |x2, _| if x2 > 1.0 { 0.3 } else { 0.0 });
            assert!(matches!(lift_phi(&big, &g, PHI_MAX), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn frames() {
        let (n, t2, t3) = normal_tangents(0.0, 0.0);
        assert_eq!(
            (n, t2, t3),
            ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0])
        );
        let (n, t2, _) = normal_tangents(0.75, 0.0);
        assert_eq!(n, [1.0, -0.75, 0.0]);
        assert_eq!(t2, [0.75, 1.0, 0.0]);
    }

    #[test]
    fn curvature_matrix_reference() {
        let b = curvature_matrix_at([0.75, 0.0]);
        assert!((b[0][0] - 0.512).abs() < 1e-15);
        assert!((b[1][1] - 0.8).abs() < 1e-15);
        assert_eq!(b[0][1], 0.0);
    }

    #[test]
    fn mean_curvature_simple_profiles() {
        let g = SurfaceGrid::from_spec(&spec(16));
        let z = mean_curvature(&InterfaceField::zeros(g));
        assert!(z.iter().all(|&v| v == 0.0));
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let g = SurfaceGrid::from_spec(&spec(n));
            let p = InterfaceField::from_fn(g, |x2, x3| {
                0.5 * ((x2 - 1.0).powi(2) + (x3 - 1.0).powi(2))
            });
            let h = mean_curvature(&p);
            errs.push((h[g.index(n / 2, n / 2)] - 2.0).abs());
        }
        assert!(errs[2] < errs[0]);
        assert!(errs[2] < 1e-2, "{errs:?}");
    }
}
