//! Manufactured solutions for the convergence study.
//!
//! The exact solution is `cos(w t) P(x) + sin(w t) Q(x)` on both sides and on
//! the interface, with `P`, `Q` products of cosines. Sources, interface data
//! and outer data are computed from it with exact derivatives and the
//! solver's own coefficients, so the only error left is truncation.

use serde::{Deserialize, Serialize};

use super::{
    Coefficients, Forcing, ForcingTerm, HalfSpaceSolver, OuterBoundary, SolverConfig,
    SolverState, TimeProfile,
};
use crate::error::{Error, Result};
use crate::field::{Field, HalfGrid};
use crate::linalg::{invert, mat_vec};
use crate::ring::{BasicState, RingPreset};
use crate::state::{dot3, EosModel, GridSpec, PhysicsParams};

/// `amp cos(k1 x1 + a1) cos(x2 + a2) cos(x3 + a3)`.
#[derive(Clone, Copy, Debug)]
struct Wave {
    amp: f64,
    k1: f64,
    a: [f64; 3],
}

impl Wave {
    /// Value and gradient.
    fn eval(&self, x: [f64; 3]) -> (f64, [f64; 3]) {
        let (s1, c1) = (self.k1 * x[0] + self.a[0]).sin_cos();
        let (s2, c2) = (x[1] + self.a[1]).sin_cos();
        let (s3, c3) = (x[2] + self.a[2]).sin_cos();
        let a = self.amp;
        (
            a * c1 * c2 * c3,
            [-a * self.k1 * s1 * c2 * c3, -a * c1 * s2 * c3, -a * c1 * c2 * s3],
        )
    }

    fn for_component(c: usize, second: bool) -> Self {
        let c = c as f64;
        if second {
            Wave {
                amp: 0.2 + 0.03 * c,
                k1: 0.8 + 0.15 * c,
                a: [1.1 - 0.3 * c, 0.2 + 0.7 * c, -0.4 + 0.5 * c],
            }
        } else {
            Wave {
                amp: 0.3 - 0.02 * c,
                k1: 1.0 + 0.2 * c,
                a: [0.4 * c, 0.9 * c, 0.5 + 0.3 * c],
            }
        }
    }
}

/// Exact solution profiles.
#[derive(Clone, Copy, Debug)]
pub struct Manufactured {
    pub omega: f64,
}

impl Default for Manufactured {
    fn default() -> Self {
        Self { omega: 2.0 }
    }
}

impl Manufactured {
    /// Profile `P` (`second = false`) or `Q` of an `N`-vector at `x`, with its
    /// gradient per component. Vacuum components are offset so the two sides
    /// differ.
    fn profile<const N: usize>(&self, x: [f64; 3], second: bool, offset: usize) -> ([f64; N], [[f64; 3]; N]) {
        let mut v = [0.0; N];
        let mut g = [[0.0; 3]; N];
        for c in 0..N {
            let (a, b) = Wave::for_component(c + offset, second).eval(x);
            v[c] = a;
            g[c] = b;
        }
        (v, g)
    }

    fn phi_wave(second: bool) -> Wave {
        if second {
            Wave {
                amp: 0.15,
                k1: 0.0,
                a: [0.0, -0.5, 0.4],
            }
        } else {
            Wave {
                amp: 0.2,
                k1: 0.0,
                a: [0.0, 0.3, -0.2],
            }
        }
    }

    /// Fluid, vacuum and interface values at time `t`.
    pub fn exact(&self, ring: &BasicState, t: f64) -> (Field<8>, Field<6>, Vec<f64>) {
        let (c, s) = ((self.omega * t).cos(), (self.omega * t).sin());
        let u = Field::from_fn(ring.plus, |x| {
            let p = self.profile::<8>(x, false, 0).0;
            let q = self.profile::<8>(x, true, 0).0;
            std::array::from_fn(|i| c * p[i] + s * q[i])
        });
        let v = Field::from_fn(ring.minus, |x| {
            let p = self.profile::<6>(x, false, 8).0;
            let q = self.profile::<6>(x, true, 8).0;
            std::array::from_fn(|i| c * p[i] + s * q[i])
        });
        let sg = ring.plus.surf;
        let phi = (0..sg.len())
            .map(|k| {
                let (j2, j3) = sg.coords(k);
                let x = [0.0, sg.x2(j2), sg.x3(j3)];
                c * Self::phi_wave(false).eval(x).0 + s * Self::phi_wave(true).eval(x).0
            })
            .collect();
        (u, v, phi)
    }

    /// Sources and boundary data for `ring`, as a cosine and a sine term.
    pub fn forcing(&self, ring: &BasicState, coefs: &Coefficients) -> Result<Forcing> {
        if !ring.is_flat() {
            return Err(Error::Usage(
                "manufactured solutions need a flat ring interface".into(),
            ));
        }
        let w = self.omega;
        let terms = [false, true]
            .into_iter()
            .map(|second| -> Result<ForcingTerm> {
                // the cosine term carries P and w Q, the sine term Q and -w P
                let (own, other, sign) = (second, !second, if second { -1.0 } else { 1.0 });
                let fluid = node_field(ring.plus, |idx, x| {
                    let (p, gp) = self.profile::<8>(x, own, 0);
                    let q = self.profile::<8>(x, other, 0).0;
                    let cf = &coefs.fluid[idx];
                    let mut r: [f64; 8] = std::array::from_fn(|i| sign * w * q[i]);
                    for axis in 0..3 {
                        let d: [f64; 8] = std::array::from_fn(|i| gp[i][axis]);
                        let kd = mat_vec(&cf.k[axis], &d);
                        for i in 0..8 {
                            r[i] += kd[i];
                        }
                    }
                    let kc = mat_vec(&cf.kc, &p);
                    for i in 0..8 {
                        r[i] += kc[i];
                    }
                    Ok(mat_vec(&invert(&cf.a0inv)?, &r))
                })?;
                let vacuum = node_field(ring.minus, |idx, x| {
                    let (_, gp) = self.profile::<6>(x, own, 8);
                    let q = self.profile::<6>(x, other, 8).0;
                    let cv = &coefs.vac[idx];
                    let mut r: [f64; 6] = std::array::from_fn(|i| sign * w * q[i]);
                    for axis in 0..3 {
                        let d: [f64; 6] = std::array::from_fn(|i| gp[i][axis]);
                        let kd = mat_vec(&cv.k[axis], &d);
                        for i in 0..6 {
                            r[i] += kd[i];
                        }
                    }
                    // velocity of the mirrored fluid node
                    let up = self.profile::<8>([-x[0], x[1], x[2]], own, 0).0;
                    for (i, row) in cv.kc.iter().enumerate() {
                        r[i] += row[0] * up[1] + row[1] * up[2] + row[2] * up[3];
                    }
                    Ok(mat_vec(&invert(&cv.m0inv)?, &r))
                })?;
                let boundary = self.boundary_data(ring, coefs, own, other, sign);
                let n1 = ring.plus.n1;
                let sg = ring.plus.surf;
                let outer_fluid = (0..sg.len())
                    .map(|k| self.profile::<8>(ring.plus.position(ring.plus.col_index(k, n1)), own, 0).0)
                    .collect();
                let outer_vacuum = (0..sg.len())
                    .map(|k| self.profile::<6>(ring.minus.position(ring.minus.col_index(k, n1)), own, 8).0)
                    .collect();
                let profile = if second {
                    TimeProfile::Sin { omega: w }
                } else {
                    TimeProfile::Cos { omega: w }
                };
                Ok(ForcingTerm {
                    profile,
                    fluid: Some(fluid),
                    vacuum: Some(vacuum),
                    boundary: Some(boundary),
                    outer_fluid: Some(outer_fluid),
                    outer_vacuum: Some(outer_vacuum),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Forcing { terms })
    }

    /// Right-hand sides of the four interface rows for one time profile.
    fn boundary_data(
        &self,
        ring: &BasicState,
        coefs: &Coefficients,
        own: bool,
        other: bool,
        sign: f64,
    ) -> Vec<[f64; 4]> {
        let sg = ring.plus.surf;
        let eps = ring.params.epsilon;
        let s = ring.params.sigma_tension;
        (0..sg.len())
            .map(|k| {
                let (j2, j3) = sg.coords(k);
                let x = [0.0, sg.x2(j2), sg.x3(j3)];
                let u = self.profile::<8>(x, own, 0).0;
                let v = self.profile::<6>(x, own, 8).0;
                let (phi, gphi) = Self::phi_wave(own).eval(x);
                // own-profile Laplacian of the product of cosines
                let lap = -2.0 * phi;
                let phi_t = sign * self.omega * Self::phi_wave(other).eval(x).0;
                let ic = &coefs.iface[k];
                let ur = ring.u.column(k)[0];
                let vr = ring.v.column(k)[0];
                let dvr2 = ring.dv[1].column(k)[0];
                let dvr3 = ring.dv[2].column(k)[0];
                let vel = [u[1], u[2], u[3]];
                let e = [v[3], v[4], v[5]];
                let h = [v[0], v[1], v[2]];
                [
                    -dot3(&ic.normal, &vel) + phi_t + ur[2] * gphi[1] + ur[3] * gphi[2]
                        - ring.d1_vn[k] * phi,
                    dot3(&ic.t2, &e) - eps * ic.h[2] * phi_t + vr[3] * gphi[1] + dvr2[3] * phi,
                    dot3(&ic.t3, &e) + eps * ic.h[1] * phi_t + vr[3] * gphi[2] + dvr3[3] * phi,
                    u[0] - dot3(&ic.h, &h) + dot3(&ic.e, &e) + ring.jump_dq[k] * phi - s * lap,
                ]
            })
            .collect()
    }
}

fn node_field<const N: usize>(
    grid: HalfGrid,
    f: impl Fn(usize, [f64; 3]) -> Result<[f64; N]>,
) -> Result<Field<N>> {
    let data = (0..grid.len())
        .map(|idx| f(idx, grid.position(idx)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Field { grid, data })
}

/// Errors of one refinement level.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceLevel {
    pub n1: usize,
    pub n_tan: usize,
    pub h1: f64,
    pub steps: usize,
    pub error_fluid: f64,
    pub error_vacuum: f64,
    pub error_phi: f64,
    /// Combined discrete `L2` error.
    pub error: f64,
    /// Order against the previous level.
    pub order: Option<f64>,
}

/// `levels` holds `(normal cells, tangential cells)` per refinement level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ConvergenceSetup {
    pub levels: Vec<(usize, usize)>,
    #[serde(rename = "L1_length")]
    pub l1: f64,
    #[serde(rename = "tEnd_time")]
    pub t_end: f64,
    pub omega: f64,
}

impl Default for ConvergenceSetup {
    fn default() -> Self {
        Self {
            levels: vec![(16, 8), (32, 16), (64, 32)],
            l1: 1.5,
            t_end: 0.25,
            omega: 2.0,
        }
    }
}

impl ConvergenceSetup {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::config("convergence.levels", "at least one level is required"));
        }
        if self.levels.iter().any(|&(a, b)| a < 4 || b < 4) {
            return Err(Error::config("convergence.levels", "cell counts must be at least 4"));
        }
        if !(self.l1 > 1.0 && self.l1.is_finite()) {
            return Err(Error::config("convergence.L1_length", "must exceed 1"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("convergence.tEnd_time", "must be positive"));
        }
        if !self.omega.is_finite() {
            return Err(Error::config("convergence.omega", "must be finite"));
        }
        Ok(())
    }
}

/// Runs the manufactured solution on each level and reports errors and orders.
pub fn convergence_study(
    preset: &RingPreset,
    eos: &EosModel,
    params: &PhysicsParams,
    setup: &ConvergenceSetup,
) -> Result<Vec<ConvergenceLevel>> {
    setup.validate()?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mms = Manufactured {
        omega: setup.omega,
    };
    let mut out: Vec<ConvergenceLevel> = Vec::new();
    for &(n1, nt) in &setup.levels {
        let spec = GridSpec {
            nx1: n1,
            nx2: nt,
            nx3: nt,
            l1: setup.l1,
            l2: two_pi,
            l3: two_pi,
            dt: None,
        };
        let ring = BasicState::from_preset(preset, &spec, eos, params)?;
        let coefs = Coefficients::build(&ring)?;
        let forcing = mms.forcing(&ring, &coefs)?;
        let config = SolverConfig {
            outer: OuterBoundary::Prescribed,
            ..SolverConfig::new(setup.t_end)
        };
        let solver = HalfSpaceSolver::with_coefficients(ring, coefs, forcing, config)?;
        let (u0, v0, phi0) = mms.exact(&solver.ring, 0.0);
        let mut st = SolverState {
            t: 0.0,
            step: 0,
            u: u0,
            v: v0,
            phi: phi0,
        };
        solver.run(&mut st, usize::MAX, |_| Ok(()))?;
        let (ue, ve, pe) = mms.exact(&solver.ring, st.t);
        let mut du = st.u.clone();
        du.axpy(-1.0, &ue);
        let mut dv = st.v.clone();
        dv.axpy(-1.0, &ve);
        let sg = solver.ring.plus.surf;
        let dp: Vec<f64> = st.phi.iter().zip(&pe).map(|(a, b)| (a - b) * (a - b)).collect();
        let (ef, ev, ep) = (du.l2(), dv.l2(), sg.integrate(&dp).sqrt());
        let error = (ef * ef + ev * ev + ep * ep).sqrt();
        let h1 = solver.ring.plus.h1;
        let order = out
            .last()
            .map(|prev| (prev.error / error).ln() / (prev.h1 / h1).ln());
        out.push(ConvergenceLevel {
            n1,
            n_tan: nt,
            h1,
            steps: solver.n_steps,
            error_fluid: ef,
            error_vacuum: ev,
            error_phi: ep,
            error,
            order,
        });
    }
    Ok(out)
}
