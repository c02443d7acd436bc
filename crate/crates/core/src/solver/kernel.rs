//! Per-node coefficients and the column operator of the semi-discrete scheme.
//!
//! Normal direction: SBP(2,1) diagonal-norm first derivative. The interface
//! and the outer boundaries are coupled weakly (SAT): each incoming
//! characteristic is penalized towards a target value. On the interface the
//! targets and `dt phi` come from a 4x4 least-squares closure of the
//! linearized interface conditions.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::normal_tangents;
use crate::linalg::{mat_mul, Mat, SymMatrix};
use crate::operators::{c_minus_at, c_plus_at};
use crate::ring::BasicState;
use crate::state::dot3;
use crate::symmetrizers::{build_fluid_set, lift_combination, secondary_set};

/// Scalars the column operator can act on: real fields for time stepping,
/// complex amplitudes for the frozen-mode generator.
pub trait Amp:
    Copy
    + Default
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn abs2(self) -> f64;
}

impl Amp for f64 {
    #[inline]
    fn abs2(self) -> f64 {
        self * self
    }
}

impl Amp for Complex64 {
    #[inline]
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
}

/// Relative residual tolerance of the interface closure.
pub const CLOSURE_TOL: f64 = 1e-9;

#[inline]
fn mv<T: Amp, const R: usize, const C: usize>(m: &[[f64; C]; R], x: &[T; C]) -> [T; R] {
    std::array::from_fn(|i| {
        let mut s = T::default();
        for j in 0..C {
            s = s + x[j] * m[i][j];
        }
        s
    })
}

#[inline]
fn dotv<T: Amp, const N: usize>(a: &[f64; N], x: &[T; N]) -> T {
    let mut s = T::default();
    for j in 0..N {
        s = s + x[j] * a[j];
    }
    s
}

#[inline]
fn add_scaled<T: Amp, const N: usize>(x: &mut [T; N], y: &[T; N], a: f64) {
    for j in 0..N {
        x[j] = x[j] + y[j] * a;
    }
}

/// SBP(2,1) difference in index space at row `i` of a column with `n + 1` nodes.
#[inline]
fn sbp_diff<T: Amp, const N: usize>(u: &[[T; N]], i: usize) -> [T; N] {
    let n = u.len() - 1;
    if i == 0 {
        std::array::from_fn(|c| u[1][c] - u[0][c])
    } else if i == n {
        std::array::from_fn(|c| u[n][c] - u[n - 1][c])
    } else {
        std::array::from_fn(|c| (u[i + 1][c] - u[i - 1][c]) * 0.5)
    }
}

/// Inverse of the boundary weight of the SBP norm, in units of `1 / h`.
const INV_P00: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct FluidCoef {
    pub a0inv: Mat<8>,
    /// `A0^{-1}` times the lifted normal matrix and `A2`, `A3`.
    pub k: [Mat<8>; 3],
    pub kc: Mat<8>,
}

#[derive(Clone, Debug)]
pub struct VacCoef {
    /// `(eps B0)^{-1}`.
    pub m0inv: Mat<6>,
    pub k: [Mat<6>; 3],
    /// `(eps B0)^{-1} C-`, acting on the reflected velocity.
    pub kc: [[f64; 3]; 6],
}

/// Incoming characteristic directions at one boundary point: unit
/// eigenvectors and absolute eigenvalues.
#[derive(Clone, Debug, Default)]
pub struct Incoming<const N: usize> {
    pub dirs: Vec<([f64; N], f64)>,
}

#[derive(Clone, Debug)]
pub struct InterfaceCoef {
    pub xf: [f64; 8],
    pub lf: f64,
    pub xv: [[f64; 6]; 2],
    pub lv: [f64; 2],
    pub normal: [f64; 3],
    pub t2: [f64; 3],
    pub t3: [f64; 3],
    pub h: [f64; 3],
    pub e: [f64; 3],
    pub m: [[f64; 4]; 4],
    pub mpinv: [[f64; 4]; 4],
    /// Smallest over largest singular value of `m`.
    pub conditioning: f64,
}

/// Coefficients of the whole semi-discretization for one ring state.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub np: usize,
    pub h1: f64,
    pub fluid: Vec<FluidCoef>,
    pub vac: Vec<VacCoef>,
    pub iface: Vec<InterfaceCoef>,
    pub outer_fluid: Vec<Incoming<8>>,
    pub outer_vac: Vec<Incoming<6>>,
    /// `max_node sum_j rho_j / h_j` over both half-spaces.
    pub max_rate: f64,
    /// Largest characteristic speed in the normal direction.
    pub max_normal_speed: f64,
}

fn to_mat<const N: usize>(m: &SymMatrix<N>) -> Mat<N> {
    *m.as_array()
}

/// Spectral radius of `A0^{-1} A` for symmetric `A` and positive definite `A0`.
fn generalized_radius<const N: usize>(a0: &SymMatrix<N>, a: &SymMatrix<N>) -> Result<f64> {
    let m0 = DMatrix::<f64>::from_fn(N, N, |i, j| a0.get(i, j));
    let chol = m0
        .cholesky()
        .ok_or_else(|| Error::Numerical("symmetrizer is not positive definite".into()))?;
    let l = chol.l();
    let ma = DMatrix::<f64>::from_fn(N, N, |i, j| a.get(i, j));
    let linv = l
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let s = &linv * ma * linv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let ev = s.symmetric_eigenvalues();
    Ok(ev.iter().fold(0.0f64, |r, x| r.max(x.abs())))
}

fn node_location(ring: &BasicState, side: &str, idx: usize) -> String {
    let (i1, j2, j3) = ring.plus.coords(idx);
    format!("{side} node ({i1}, {j2}, {j3})")
}

impl Coefficients {
    pub fn build(ring: &BasicState) -> Result<Self> {
        let plus = ring.plus;
        let np = plus.np1();
        let eps = ring.params.epsilon;
        let hs = [plus.h1, plus.surf.h2, plus.surf.h3];
        let ncol = plus.surf.len();

        // one column per task; memoize the speed computation on repeated nodes
        let cols: Result<Vec<_>> = (0..ncol)
            .into_par_iter()
            .map(|k| {
                let mut fl = Vec::with_capacity(np);
                let mut va = Vec::with_capacity(np);
                let mut rate: f64 = 0.0;
                let mut speed: f64 = 0.0;
                let mut memo_f: Option<([f64; 8], [f64; 4], f64, f64)> = None;
                let mut memo_v: Option<([f64; 3], [f64; 4], f64, f64)> = None;
                for i in 0..np {
                    let idx = plus.col_index(k, i);
                    let lp = ring.lift_plus.points[idx];
                    let set = build_fluid_set(&ring.fluid_state(idx), &ring.eos).map_err(|e| {
                        Error::Domain(format!("{e} at {}", node_location(ring, "fluid", idx)))
                    })?;
                    let a1 = lift_combination(&set, &lp, 1.0);
                    let a0inv = set[0].inverse()?;
                    let mut c = [[0.0; 8]; 8];
                    for j in 0..8 {
                        let mut e = [0.0; 8];
                        e[j] = 1.0;
                        let col = c_plus_at(ring, idx, &e)?;
                        for r in 0..8 {
                            c[r][j] = col[r];
                        }
                    }
                    fl.push(FluidCoef {
                        a0inv,
                        k: [
                            mat_mul(&a0inv, &to_mat(&a1)),
                            mat_mul(&a0inv, &to_mat(&set[2])),
                            mat_mul(&a0inv, &to_mat(&set[3])),
                        ],
                        kc: mat_mul(&a0inv, &c),
                    });
                    let key = [lp.dt_phi_lift, lp.d1_phi, lp.d2_phi, lp.d3_phi];
                    let (rf, sf) = match memo_f {
                        Some((u, l, r, s)) if u == ring.u.data[idx] && l == key => (r, s),
                        _ => {
                            let r1 = generalized_radius(&set[0], &a1)?;
                            let r2 = generalized_radius(&set[0], &set[2])?;
                            let r3 = generalized_radius(&set[0], &set[3])?;
                            let r = r1 / hs[0] + r2 / hs[1] + r3 / hs[2];
                            memo_f = Some((ring.u.data[idx], key, r, r1));
                            (r, r1)
                        }
                    };
                    rate = rate.max(rf);
                    speed = speed.max(sf);

                    let lm = ring.lift_minus.points[idx];
                    let vm = ring.v_minus(idx);
                    let vset = secondary_set(&[eps * vm[0], eps * vm[1], eps * vm[2]]);
                    let b0 = vset[0].scaled(eps);
                    let b1 = lift_combination(&vset, &lm, eps);
                    let m0inv = b0.inverse()?;
                    let mut cm = [[0.0; 3]; 6];
                    for j in 0..3 {
                        let mut e = [0.0; 3];
                        e[j] = 1.0;
                        let col = c_minus_at(ring, idx, &e);
                        for r in 0..6 {
                            cm[r][j] = col[r];
                        }
                    }
                    let kc = std::array::from_fn(|r| {
                        std::array::from_fn(|j| (0..6).map(|s| m0inv[r][s] * cm[s][j]).sum())
                    });
                    va.push(VacCoef {
                        m0inv,
                        k: [
                            mat_mul(&m0inv, &to_mat(&b1)),
                            mat_mul(&m0inv, &to_mat(&vset[2])),
                            mat_mul(&m0inv, &to_mat(&vset[3])),
                        ],
                        kc,
                    });
                    let keyv = [lm.dt_phi_lift, lm.d1_phi, lm.d2_phi, lm.d3_phi];
                    let (rv, sv) = match memo_v {
                        Some((u, l, r, s)) if u == vm && l == keyv => (r, s),
                        _ => {
                            let r1 = generalized_radius(&b0, &b1)?;
                            let r2 = generalized_radius(&b0, &vset[2])?;
                            let r3 = generalized_radius(&b0, &vset[3])?;
                            let r = r1 / hs[0] + r2 / hs[1] + r3 / hs[2];
                            memo_v = Some((vm, keyv, r, r1));
                            (r, r1)
                        }
                    };
                    rate = rate.max(rv);
                    speed = speed.max(sv);
                }
                let iface = interface_coef(ring, k)?;
                let (of, ov) = outer_coefs(ring, k)?;
                Ok((fl, va, iface, of, ov, rate, speed))
            })
            .collect();
        let cols = cols?;
        let mut out = Coefficients {
            np,
            h1: plus.h1,
            fluid: Vec::with_capacity(plus.len()),
            vac: Vec::with_capacity(plus.len()),
            iface: Vec::with_capacity(ncol),
            outer_fluid: Vec::with_capacity(ncol),
            outer_vac: Vec::with_capacity(ncol),
            max_rate: 0.0,
            max_normal_speed: 0.0,
        };
        for (fl, va, ic, of, ov, r, s) in cols {
            out.fluid.extend(fl);
            out.vac.extend(va);
            out.iface.push(ic);
            out.outer_fluid.push(of);
            out.outer_vac.push(ov);
            out.max_rate = out.max_rate.max(r);
            out.max_normal_speed = out.max_normal_speed.max(s);
        }
        Ok(out)
    }

    pub fn column_fluid(&self, k: usize) -> &[FluidCoef] {
        &self.fluid[k * self.np..(k + 1) * self.np]
    }

    pub fn column_vac(&self, k: usize) -> &[VacCoef] {
        &self.vac[k * self.np..(k + 1) * self.np]
    }
}

fn interface_coef(ring: &BasicState, k: usize) -> Result<InterfaceCoef> {
    let eps = ring.params.epsilon;
    let idx = ring.plus.col_index(k, 0);
    let set = build_fluid_set(&ring.fluid_state(idx), &ring.eos)?;
    let a1 = lift_combination(&set, &ring.lift_plus.points[idx], 1.0);
    let ef = a1.eigen();
    let tol = 1e-8 * a1.spectral_radius();
    let pos: Vec<usize> = (0..8).filter(|&c| ef.values[c] > tol).collect();
    if pos.len() != 1 {
        let (j2, j3) = ring.plus.surf.coords(k);
        return Err(Error::Domain(format!(
            "{} incoming fluid characteristics at interface point ({j2}, {j3}), expected 1",
            pos.len()
        )));
    }
    let xf = ef.vector(pos[0]);
    let lf = ef.values[pos[0]];

    let vm = ring.v_minus(idx);
    let vset = secondary_set(&[eps * vm[0], eps * vm[1], eps * vm[2]]);
    let b1 = lift_combination(&vset, &ring.lift_minus.points[idx], eps);
    let ev = b1.eigen();
    let tolv = 1e-8 * b1.spectral_radius();
    let neg: Vec<usize> = (0..6).filter(|&c| ev.values[c] < -tolv).collect();
    if neg.len() != 2 {
        let (j2, j3) = ring.plus.surf.coords(k);
        return Err(Error::Domain(format!(
            "{} incoming vacuum characteristics at interface point ({j2}, {j3}), expected 2",
            neg.len()
        )));
    }
    let xv = [ev.vector(neg[0]), ev.vector(neg[1])];
    let lv = [ev.values[neg[0]].abs(), ev.values[neg[1]].abs()];

    let g = ring.phi.grad_phi()[k];
    let (normal, t2, t3) = normal_tangents(g[0], g[1]);
    let vr = ring.v.column(k)[0];
    let h = [vr[0], vr[1], vr[2]];
    let e = [vr[3], vr[4], vr[5]];

    let mut m = [[0.0; 4]; 4];
    m[0][0] = -dot3(&normal, &[xf[1], xf[2], xf[3]]);
    m[3][0] = xf[0];
    for (c, x) in xv.iter().enumerate() {
        let xe = [x[3], x[4], x[5]];
        let xh = [x[0], x[1], x[2]];
        m[1][c + 1] = dot3(&t2, &xe);
        m[2][c + 1] = dot3(&t3, &xe);
        m[3][c + 1] = -dot3(&h, &xh) + dot3(&e, &xe);
    }
    m[0][3] = 1.0;
    m[1][3] = -eps * h[2];
    m[2][3] = eps * h[1];

    let mm = Matrix4::from_fn(|i, j| m[i][j]);
    let svd = mm.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let pinv = svd
        .pseudo_inverse(1e-12 * smax.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Numerical(format!("interface closure: {e}")))?;
    Ok(InterfaceCoef {
        xf,
        lf,
        xv,
        lv,
        normal,
        t2,
        t3,
        h,
        e,
        m,
        mpinv: std::array::from_fn(|i| std::array::from_fn(|j| pinv[(i, j)])),
        conditioning: if smax > 0.0 { smin / smax } else { 0.0 },
    })
}

fn outer_coefs(ring: &BasicState, k: usize) -> Result<(Incoming<8>, Incoming<6>)> {
    let eps = ring.params.epsilon;
    let idx = ring.plus.col_index(k, ring.plus.n1);
    let set = build_fluid_set(&ring.fluid_state(idx), &ring.eos)?;
    let a1 = lift_combination(&set, &ring.lift_plus.points[idx], 1.0);
    let ef = a1.eigen();
    let tol = 1e-8 * a1.spectral_radius();
    let fluid = Incoming {
        dirs: (0..8)
            .filter(|&c| ef.values[c] < -tol)
            .map(|c| (ef.vector(c), ef.values[c].abs()))
            .collect(),
    };
    let vm = ring.v_minus(idx);
    let vset = secondary_set(&[eps * vm[0], eps * vm[1], eps * vm[2]]);
    let b1 = lift_combination(&vset, &ring.lift_minus.points[idx], eps);
    let ev = b1.eigen();
    let tolv = 1e-8 * b1.spectral_radius();
    let vac = Incoming {
        dirs: (0..6)
            .filter(|&c| ev.values[c] > tolv)
            .map(|c| (ev.vector(c), ev.values[c]))
            .collect(),
    };
    Ok((fluid, vac))
}

/// Inputs of the column operator at one interface point.
pub struct ColumnIn<'a, T> {
    pub u: &'a [[T; 8]],
    pub d2u: &'a [[T; 8]],
    pub d3u: &'a [[T; 8]],
    pub v: &'a [[T; 6]],
    pub d2v: &'a [[T; 6]],
    pub d3v: &'a [[T; 6]],
    pub outer_u: Option<[T; 8]>,
    pub outer_v: Option<[T; 6]>,
}

/// Closure outputs at one interface point: `dt phi`, the interface states
/// that satisfy the interface conditions, and the incoming characteristic
/// values before (`w`) and after (`a`) the closure.
#[derive(Clone, Copy, Debug)]
pub struct Closure<T> {
    pub phi_t: T,
    pub u_star: [T; 8],
    pub v_star: [T; 6],
    wf: T,
    af: T,
    wv: [T; 2],
    av: [T; 2],
}

/// Solves the interface conditions for the incoming characteristic values
/// and `dt phi`, given the node-0 states, the `phi` terms (`known`) and the
/// interface source (`data`). Returns the relative residual on failure.
pub fn interface_closure<T: Amp>(
    ic: &InterfaceCoef,
    u0: &[T; 8],
    v0: &[T; 6],
    known: &[T; 4],
    data: &[T; 4],
) -> std::result::Result<Closure<T>, f64> {
    let wf = dotv(&ic.xf, u0);
    let wv = [dotv(&ic.xv[0], v0), dotv(&ic.xv[1], v0)];
    let mut ub = *u0;
    add_scaled(&mut ub, &ic.xf.map(|x| wf * x), -1.0);
    let mut vb = *v0;
    for m in 0..2 {
        add_scaled(&mut vb, &ic.xv[m].map(|x| wv[m] * x), -1.0);
    }
    let ubv = [ub[1], ub[2], ub[3]];
    let vbh = [vb[0], vb[1], vb[2]];
    let vbe = [vb[3], vb[4], vb[5]];
    let known_rows = [
        -dotv(&ic.normal, &ubv),
        dotv(&ic.t2, &vbe),
        dotv(&ic.t3, &vbe),
        ub[0] - dotv(&ic.h, &vbh) + dotv(&ic.e, &vbe),
    ];
    let rhs: [T; 4] = std::array::from_fn(|r| data[r] - known[r] - known_rows[r]);
    let z = mv(&ic.mpinv, &rhs);
    let back = mv(&ic.m, &z);
    let mut res2 = 0.0;
    let mut rhs2 = 0.0;
    for r in 0..4 {
        res2 += (back[r] - rhs[r]).abs2();
        rhs2 += rhs[r].abs2();
    }
    if res2 > CLOSURE_TOL * CLOSURE_TOL * (1.0 + rhs2) {
        return Err((res2 / (1.0 + rhs2)).sqrt());
    }
    let af = z[0];
    let av = [z[1], z[2]];
    let mut u_star = *u0;
    add_scaled(&mut u_star, &ic.xf.map(|x| (af - wf) * x), 1.0);
    let mut v_star = *v0;
    for m in 0..2 {
        add_scaled(&mut v_star, &ic.xv[m].map(|x| (av[m] - wv[m]) * x), 1.0);
    }
    Ok(Closure {
        phi_t: z[3],
        u_star,
        v_star,
        wf,
        af,
        wv,
        av,
    })
}

/// Semi-discrete right-hand side on one normal column pair, with the
/// interface penalties taken from `cl`.
#[allow(clippy::too_many_arguments)]
pub fn column_rhs<T: Amp>(
    cf: &[FluidCoef],
    cv: &[VacCoef],
    ic: &InterfaceCoef,
    of: &Incoming<8>,
    ov: &Incoming<6>,
    h1: f64,
    inp: &ColumnIn<T>,
    cl: &Closure<T>,
    out_u: &mut [[T; 8]],
    out_v: &mut [[T; 6]],
) {
    let np = inp.u.len();
    let n = np - 1;
    let inv_h = 1.0 / h1;
    for i in 0..np {
        let c = &cf[i];
        let d1 = sbp_diff(inp.u, i);
        let mut r = mv(&c.k[0], &d1);
        for x in r.iter_mut() {
            *x = *x * inv_h;
        }
        add_scaled(&mut r, &mv(&c.k[1], &inp.d2u[i]), 1.0);
        add_scaled(&mut r, &mv(&c.k[2], &inp.d3u[i]), 1.0);
        add_scaled(&mut r, &mv(&c.kc, &inp.u[i]), 1.0);
        out_u[i] = r.map(|x| -x);

        let c = &cv[i];
        // vacuum columns run towards negative x1
        let d1 = sbp_diff(inp.v, i);
        let mut r = mv(&c.k[0], &d1);
        for x in r.iter_mut() {
            *x = -*x * inv_h;
        }
        add_scaled(&mut r, &mv(&c.k[1], &inp.d2v[i]), 1.0);
        add_scaled(&mut r, &mv(&c.k[2], &inp.d3v[i]), 1.0);
        let vel = [inp.u[i][1], inp.u[i][2], inp.u[i][3]];
        add_scaled(&mut r, &mv(&c.kc, &vel), 1.0);
        out_v[i] = r.map(|x| -x);
    }

    let pen = INV_P00 * inv_h;
    let sf: [T; 8] = ic.xf.map(|x| (cl.wf - cl.af) * (-ic.lf * x));
    add_scaled(&mut out_u[0], &mv(&cf[0].a0inv, &sf), pen);
    let mut sv = [T::default(); 6];
    for m in 0..2 {
        add_scaled(
            &mut sv,
            &ic.xv[m].map(|x| (cl.wv[m] - cl.av[m]) * x),
            -ic.lv[m],
        );
    }
    add_scaled(&mut out_v[0], &mv(&cv[0].m0inv, &sv), pen);

    // outer boundaries
    let mut so = [T::default(); 8];
    for (x, l) in &of.dirs {
        let w = dotv(x, &inp.u[n]);
        let a = inp.outer_u.as_ref().map(|d| dotv(x, d)).unwrap_or_default();
        add_scaled(&mut so, &x.map(|c| (w - a) * c), -l);
    }
    add_scaled(&mut out_u[n], &mv(&cf[n].a0inv, &so), pen);
    let mut so = [T::default(); 6];
    for (x, l) in &ov.dirs {
        let w = dotv(x, &inp.v[n]);
        let a = inp.outer_v.as_ref().map(|d| dotv(x, d)).unwrap_or_default();
        add_scaled(&mut so, &x.map(|c| (w - a) * c), -l);
    }
    add_scaled(&mut out_v[n], &mv(&cv[n].m0inv, &so), pen);
}

/// Interface-condition terms of `phi` on the interface grid.
pub fn interface_knowns(ring: &BasicState, phi: &[f64]) -> Vec<[f64; 4]> {
    let sg = ring.plus.surf;
    let s = ring.params.sigma_tension;
    let d2 = sg.diff(phi, 2);
    let d3 = sg.diff(phi, 3);
    let e1phi: Vec<f64> = (0..sg.len())
        .map(|k| ring.v.column(k)[0][3] * phi[k])
        .collect();
    let d2e = sg.diff(&e1phi, 2);
    let d3e = sg.diff(&e1phi, 3);
    let curv = crate::geometry::linearized_curvature_with(&sg, phi, &ring.b_ring);
    (0..sg.len())
        .map(|k| {
            let ur = ring.u.column(k)[0];
            [
                ur[2] * d2[k] + ur[3] * d3[k] - ring.d1_vn[k] * phi[k],
                d2e[k],
                d3e[k],
                ring.jump_dq[k] * phi[k] - s * curv[k],
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sbp_difference_is_exact_on_linears() {
        let u: Vec<[f64; 1]> = (0..6).map(|i| [3.0 * i as f64 - 1.0]).collect();
        for i in 0..6 {
            assert_eq!(sbp_diff(&u, i)[0], 3.0);
        }
    }

    #[test]
    fn sbp_summation_by_parts() {
        // u . P D w + w . P D u = u_n w_n - u_0 w_0 with P = diag(1/2, 1, .., 1, 1/2)
        let u: Vec<[f64; 1]> = (0..7).map(|i| [((i * i) as f64).sin()]).collect();
        let w: Vec<[f64; 1]> = (0..7).map(|i| [(i as f64 * 0.7).cos()]).collect();
        let p = |i: usize| if i == 0 || i == 6 { 0.5 } else { 1.0 };
        let lhs: f64 = (0..7)
            .map(|i| p(i) * (u[i][0] * sbp_diff(&w, i)[0] + w[i][0] * sbp_diff(&u, i)[0]))
            .sum();
        let rhs = u[6][0] * w[6][0] - u[0][0] * w[0][0];
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
