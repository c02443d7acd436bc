//! Frozen-coefficient normal modes: for a constant ring the semi-discrete
//! operator decouples into tangential Fourier modes `exp(i k . x')`. The
//! generator for one `k` is assembled by applying the column operator to unit
//! vectors, with exact tangential symbols, and its spectrum is computed densely.

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::Serialize;

use super::kernel::{column_rhs, interface_closure, Coefficients, ColumnIn};
use crate::error::{Error, Result};
use crate::ring::{BasicState, RingPreset};
use crate::state::{EosModel, GridSpec, PhysicsParams};

/// Normal-direction resolution and domain rule of the modal analysis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModalSetup {
    pub n1: usize,
    /// `L1 = clamp(l1_scale / |k|, l1_min, l1_max)`.
    pub l1_scale: f64,
    pub l1_min: f64,
    pub l1_max: f64,
}

impl Default for ModalSetup {
    fn default() -> Self {
        Self {
            n1: 60,
            l1_scale: 8.0,
            l1_min: 0.5,
            l1_max: 4.0,
        }
    }
}

impl ModalSetup {
    pub fn l1_for(&self, k_abs: f64) -> f64 {
        if k_abs <= 0.0 {
            return self.l1_max;
        }
        (self.l1_scale / k_abs).clamp(self.l1_min, self.l1_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModeGrowth {
    pub k: [f64; 2],
    pub k_abs: f64,
    pub growth_rate: f64,
    /// Imaginary part of the eigenvalue with the largest real part.
    pub frequency: f64,
    pub l1: f64,
    pub n1: usize,
    pub dim: usize,
}

/// Ring sampled on a single-column grid for the modal analysis.
pub fn modal_ring(
    preset: &RingPreset,
    eos: &EosModel,
    params: &PhysicsParams,
    n1: usize,
    l1: f64,
) -> Result<BasicState> {
    if !preset.is_constant() {
        return Err(Error::Domain(format!(
            "frozen-mode analysis needs a constant ring; preset '{}' varies in space",
            preset.name()
        )));
    }
    if n1 < 8 {
        return Err(Error::config("n1", "normal resolution must be at least 8"));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let spec = GridSpec {
        nx1: n1,
        nx2: 4,
        nx3: 4,
        l1,
        l2: two_pi,
        l3: two_pi,
        dt: None,
    };
    BasicState::from_preset(preset, &spec, eos, params)
}

/// Dense generator `G` of `d/dt (U, V, phi) = G (U, V, phi)` for the
/// tangential wave vector `k`, with unknowns ordered as fluid column, vacuum
/// column, `phi`.
pub fn generator(ring: &BasicState, coefs: &Coefficients, k: [f64; 2]) -> Result<Mat<c64>> {
    let np = coefs.np;
    let dim = 14 * np + 1;
    let cf = coefs.column_fluid(0);
    let cv = coefs.column_vac(0);
    let ic = &coefs.iface[0];
    let i = c64::new(0.0, 1.0);
    let ur = ring.u.column(0)[0];
    let e1 = ring.v.column(0)[0][3];
    let s = ring.params.sigma_tension;
    let b = ring.b_ring[0];
    let kbk = k[0] * (b[0][0] * k[0] + b[0][1] * k[1]) + k[1] * (b[1][0] * k[0] + b[1][1] * k[1]);
    let sym_known = [
        i * (k[0] * ur[2] + k[1] * ur[3]) - ring.d1_vn[0],
        i * (k[0] * e1),
        i * (k[1] * e1),
        c64::new(ring.jump_dq[0] + s * kbk, 0.0),
    ];
    let cols: Result<Vec<Vec<c64>>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let zero = c64::new(0.0, 0.0);
            let mut u = vec![[zero; 8]; np];
            let mut v = vec![[zero; 6]; np];
            let mut phi = zero;
            if j < 8 * np {
                u[j / 8][j % 8] = c64::new(1.0, 0.0);
            } else if j < 14 * np {
                let jj = j - 8 * np;
                v[jj / 6][jj % 6] = c64::new(1.0, 0.0);
            } else {
                phi = c64::new(1.0, 0.0);
            }
            let cl = interface_closure(ic, &u[0], &v[0], &sym_known.map(|c| c * phi), &[zero; 4])
                .map_err(|r| {
                Error::Numerical(format!(
                    "interface closure residual {r:.3e} in modal generator"
                ))
            })?;
            let d2u: Vec<[c64; 8]> = u.iter().map(|x| x.map(|c| c * i * k[0])).collect();
            let d3u: Vec<[c64; 8]> = u.iter().map(|x| x.map(|c| c * i * k[1])).collect();
            let d2v: Vec<[c64; 6]> = v.iter().map(|x| x.map(|c| c * i * k[0])).collect();
            let d3v: Vec<[c64; 6]> = v.iter().map(|x| x.map(|c| c * i * k[1])).collect();
            let inp = ColumnIn {
                u: &u,
                d2u: &d2u,
                d3u: &d3u,
                v: &v,
                d2v: &d2v,
                d3v: &d3v,
                outer_u: None,
                outer_v: None,
            };
            let mut ou = vec![[zero; 8]; np];
            let mut ov = vec![[zero; 6]; np];
            column_rhs(
                cf,
                cv,
                ic,
                &coefs.outer_fluid[0],
                &coefs.outer_vac[0],
                coefs.h1,
                &inp,
                &cl,
                &mut ou,
                &mut ov,
            );
            let mut col = Vec::with_capacity(dim);
            col.extend(ou.iter().flatten());
            col.extend(ov.iter().flatten());
            col.push(cl.phi_t);
            Ok(col)
        })
        .collect();
    let cols = cols?;
    Ok(Mat::from_fn(dim, dim, |r, c| cols[c][r]))
}

/// Largest real part of the spectrum for one wave vector.
pub fn mode_growth(
    preset: &RingPreset,
    eos: &EosModel,
    params: &PhysicsParams,
    k: [f64; 2],
    setup: &ModalSetup,
) -> Result<ModeGrowth> {
    let k_abs = (k[0] * k[0] + k[1] * k[1]).sqrt();
    let l1 = setup.l1_for(k_abs);
    let ring = modal_ring(preset, eos, params, setup.n1, l1)?;
    let coefs = Coefficients::build(&ring)?;
    let g = generator(&ring, &coefs, k)?;
    let ev = g
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigenvalue solver failed: {e:?}")))?;
    let best = ev
        .iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or_else(|| Error::Numerical("empty spectrum".into()))?;
    Ok(ModeGrowth {
        k,
        k_abs,
        growth_rate: best.re,
        frequency: best.im,
        l1,
        n1: setup.n1,
        dim: g.nrows(),
    })
}

/// `n` logarithmically spaced values on `[a, b]`.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|j| (la + (lb - la) * j as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Growth rates along the direction `dir` (normalized) for each `|k|`.
pub fn scan(
    preset: &RingPreset,
    eos: &EosModel,
    params: &PhysicsParams,
    k_values: &[f64],
    dir: [f64; 2],
    setup: &ModalSetup,
) -> Result<Vec<ModeGrowth>> {
    let n = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    if n == 0.0 {
        return Err(Error::config("direction", "must be nonzero"));
    }
    k_values
        .iter()
        .map(|&ka| {
            mode_growth(
                preset,
                eos,
                params,
                [ka * dir[0] / n, ka * dir[1] / n],
                setup,
            )
        })
        .collect()
}

/// Growth below this fraction of the scan's supremum counts as neutral when
/// judging trends; it sits above the O(h^2) residual of the discretization.
pub const NEUTRAL_FRACTION: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GrowthTrend {
    pub sup: f64,
    pub k_at_sup: f64,
    pub neutral_floor: f64,
    /// Strictly increasing over the whole scan.
    pub increasing: bool,
    /// Non-increasing from the maximum on, after flooring neutral values to 0.
    pub non_increasing_after_peak: bool,
}

pub fn growth_trend(rows: &[ModeGrowth]) -> GrowthTrend {
    let (mut sup, mut at) = (f64::NEG_INFINITY, 0);
    for (j, m) in rows.iter().enumerate() {
        if m.growth_rate > sup {
            sup = m.growth_rate;
            at = j;
        }
    }
    let floor = NEUTRAL_FRACTION * sup.max(0.0);
    let g: Vec<f64> = rows
        .iter()
        .map(|m| if m.growth_rate < floor { 0.0 } else { m.growth_rate })
        .collect();
    GrowthTrend {
        sup,
        k_at_sup: rows.get(at).map_or(0.0, |m| m.k_abs),
        neutral_floor: floor,
        increasing: rows.len() > 1 && g.windows(2).all(|w| w[1] > w[0]),
        non_increasing_after_peak: g[at.min(g.len().saturating_sub(1))..]
            .windows(2)
            .all(|w| w[1] <= w[0]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spacing_endpoints() {
        let v = log_spaced(1.0, 10.0, 5);
        assert_eq!(v.len(), 5);
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert!((v[4] - 10.0).abs() < 1e-12);
        assert!((v[2] - 10f64.sqrt()).abs() < 1e-12);
    }

    fn rows(g: &[f64]) -> Vec<ModeGrowth> {
        g.iter()
            .enumerate()
            .map(|(j, &r)| ModeGrowth {
                k: [j as f64 + 1.0, 0.0],
                k_abs: j as f64 + 1.0,
                growth_rate: r,
                frequency: 0.0,
                l1: 1.0,
                n1: 4,
                dim: 1,
            })
            .collect()
    }

    #[test]
    fn trend_classification() {
        let t = growth_trend(&rows(&[0.1, 0.2, 0.4]));
        assert!(t.increasing && t.non_increasing_after_peak);
        assert_eq!(t.k_at_sup, 3.0);
        let t = growth_trend(&rows(&[0.5, 0.8, 1e-3, 2e-3, 3e-3]));
        assert!(!t.increasing && t.non_increasing_after_peak);
        let t = growth_trend(&rows(&[0.5, 0.8, 1e-3, 0.1]));
        assert!(!t.non_increasing_after_peak);
    }

    #[test]
    fn domain_rule() {
        let s = ModalSetup::default();
        assert_eq!(s.l1_for(1.0), 4.0);
        assert_eq!(s.l1_for(4.0), 2.0);
        assert_eq!(s.l1_for(10.0), 0.8);
        assert_eq!(s.l1_for(100.0), 0.5);
    }
}
