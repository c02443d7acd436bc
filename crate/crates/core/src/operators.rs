//! Residual evaluators: the nonlinear interior and boundary operators, the
//! linearized problem in good unknowns, constraint functionals.
//!
//! Time derivatives are inputs (rates), spatial derivatives are discrete:
//! centered in the interior, second-order one-sided at the ends of each
//! normal column, centered periodic along the interface.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, HalfGrid, InterfaceField, Side};
use crate::geometry::{
    cutoff_chi, lift_phi, linearized_curvature_with, mean_curvature, normal_tangents, LiftField,
    PHI_MAX,
};
use crate::linalg::SymMatrix;
use crate::ring::BasicState;
use crate::state::{dot3, EosModel, FluidState, FluidVec, PhysicsParams, VacuumVec};
use crate::symmetrizers::{
    build_fluid_set, fluid_set_derivative, lift_combination, secondary_set,
    secondary_set_derivative, symmetrizer_is_hyperbolic, LiftPoint,
};

/// Perturbation in good unknowns, interface displacement (with its rate) and
/// the fluid source.
#[derive(Clone, Debug)]
pub struct LinearPerturbation {
    pub u: Field<8>,
    pub v: Field<6>,
    pub phi: InterfaceField,
    pub f: Field<8>,
}

impl LinearPerturbation {
    pub fn zeros(ring: &BasicState) -> Self {
        Self {
            u: Field::zeros(ring.plus),
            v: Field::zeros(ring.minus),
            phi: InterfaceField::zeros(ring.plus.surf),
            f: Field::zeros(ring.plus),
        }
    }
}

/// Time derivatives of the volume unknowns.
#[derive(Clone, Debug)]
pub struct PerturbationRates {
    pub u_t: Field<8>,
    pub v_t: Field<6>,
}

impl PerturbationRates {
    pub fn zeros(ring: &BasicState) -> Self {
        Self {
            u_t: Field::zeros(ring.plus),
            v_t: Field::zeros(ring.minus),
        }
    }
}

fn mv<const N: usize>(m: &SymMatrix<N>, x: &[f64; N], out: &mut [f64; N]) {
    let y = m.mul_vec(x);
    for c in 0..N {
        out[c] += y[c];
    }
}

/// `A0 dt U + Ã1 d1 U + A2 d2 U + A3 d3 U` with `Phi` lifted from `phi`.
pub fn residual_fluid_nonlinear(
    u: &Field<8>,
    u_t: &Field<8>,
    phi: &InterfaceField,
    eos: &EosModel,
) -> Result<Field<8>> {
    u.check_compatible(u_t)?;
    let lift = lift_phi(phi, &u.grid, PHI_MAX)?;
    let d = [u.d_normal(), u.d_tan(2)?, u.d_tan(3)?];
    let g = u.grid;
    let data: Result<Vec<FluidVec>> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let st = FluidState::from_vec(&u.data[idx]);
            let set = build_fluid_set(&st, eos).map_err(|e| locate(e, &g, idx))?;
            let a1 = lift_combination(&set, &lift.points[idx], 1.0);
            let mut r = [0.0; 8];
            mv(&set[0], &u_t.data[idx], &mut r);
            mv(&a1, &d[0].data[idx], &mut r);
            mv(&set[2], &d[1].data[idx], &mut r);
            mv(&set[3], &d[2].data[idx], &mut r);
            Ok(r)
        })
        .collect();
    Ok(Field {
        grid: g,
        data: data?,
    })
}

fn locate(e: Error, g: &HalfGrid, idx: usize) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("{m} at node {:?}", g.coords(idx))),
        other => other,
    }
}

/// `eps B0 dt V + B1 d1 V + B2 d2 V + B3 d3 V` for the secondary-symmetrized
/// vacuum system with `nu = eps vMinus` (`vMinus` given at vacuum nodes).
pub fn residual_vacuum_secondary(
    v: &Field<6>,
    v_t: &Field<6>,
    v_minus: &Field<3>,
    phi: &InterfaceField,
    eps: f64,
) -> Result<Field<6>> {
    v.check_compatible(v_t)?;
    v.check_compatible(v_minus)?;
    let lift = lift_phi(phi, &v.grid, PHI_MAX)?;
    let d = [v.d_normal(), v.d_tan(2)?, v.d_tan(3)?];
    let g = v.grid;
    let data: Result<Vec<VacuumVec>> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let vm = v_minus.data[idx];
            let nu = [eps * vm[0], eps * vm[1], eps * vm[2]];
            if !symmetrizer_is_hyperbolic(&nu) {
                return Err(Error::Domain(format!(
                    "|eps v-| >= 1 at vacuum node {:?}",
                    g.coords(idx)
                )));
            }
            let set = secondary_set(&nu);
            let b1 = lift_combination(&set, &lift.points[idx], eps);
            let mut r = [0.0; 6];
            mv(&set[0].scaled(eps), &v_t.data[idx], &mut r);
            mv(&b1, &d[0].data[idx], &mut r);
            mv(&set[2], &d[1].data[idx], &mut r);
            mv(&set[3], &d[2].data[idx], &mut r);
            Ok(r)
        })
        .collect();
    Ok(Field {
        grid: g,
        data: data?,
    })
}

/// The four interface conditions at each interface point:
/// kinematic, the two tangential electric jumps, and the normal stress balance.
pub fn residual_boundary_nonlinear(
    u_tr: &[FluidVec],
    v_tr: &[VacuumVec],
    phi: &InterfaceField,
    params: &PhysicsParams,
) -> Result<Vec<[f64; 4]>> {
    let n = phi.grid().len();
    if u_tr.len() != n || v_tr.len() != n {
        return Err(Error::Usage(
            "trace arrays do not match the interface grid".into(),
        ));
    }
    let curv = mean_curvature(phi);
    let eps = params.epsilon;
    Ok((0..n)
        .map(|k| {
            let g = phi.grad_phi()[k];
            let (nrm, t2, t3) = normal_tangents(g[0], g[1]);
            let u = &u_tr[k];
            let v = &v_tr[k];
            let vel = [u[1], u[2], u[3]];
            let h = [v[0], v[1], v[2]];
            let e = [v[3], v[4], v[5]];
            let pt = phi.dt_phi()[k];
            [
                pt - dot3(&vel, &nrm),
                dot3(&e, &t2) - eps * h[2] * pt,
                dot3(&e, &t3) + eps * h[1] * pt,
                u[0] - 0.5 * dot3(&h, &h) + 0.5 * dot3(&e, &e) - params.sigma_tension * curv[k],
            ]
        })
        .collect())
}

/// `Psi / d1 Phi` at every node of a half-space grid, with `Psi = chi phi`.
fn psi_weight(phi: &InterfaceField, lift: &LiftField) -> Vec<f64> {
    let g = lift.grid;
    let np = g.np1();
    (0..g.len())
        .map(|idx| {
            let (chi, _) = cutoff_chi(g.x1(idx % np));
            chi * phi.phi()[idx / np] / lift.points[idx].d1_phi
        })
        .collect()
}

/// Good unknowns `U - (Psi / d1 Phi) d1 U_ring` and the same for `V`.
pub fn good_unknowns(
    u_raw: &Field<8>,
    v_raw: &Field<6>,
    phi: &InterfaceField,
    ring: &BasicState,
) -> Result<(Field<8>, Field<6>)> {
    shift_unknowns(u_raw, v_raw, phi, ring, -1.0)
}

/// Inverse of [`good_unknowns`].
pub fn raw_from_good(
    u_dot: &Field<8>,
    v_dot: &Field<6>,
    phi: &InterfaceField,
    ring: &BasicState,
) -> Result<(Field<8>, Field<6>)> {
    shift_unknowns(u_dot, v_dot, phi, ring, 1.0)
}

fn shift_unknowns(
    u: &Field<8>,
    v: &Field<6>,
    phi: &InterfaceField,
    ring: &BasicState,
    sign: f64,
) -> Result<(Field<8>, Field<6>)> {
    u.check_compatible(&ring.u)?;
    v.check_compatible(&ring.v)?;
    let wp = psi_weight(phi, &ring.lift_plus);
    let wm = psi_weight(phi, &ring.lift_minus);
    let mut uo = u.clone();
    for (idx, x) in uo.data.iter_mut().enumerate() {
        let d = &ring.du[0].data[idx];
        for c in 0..8 {
            x[c] += sign * wp[idx] * d[c];
        }
    }
    let mut vo = v.clone();
    for (idx, x) in vo.data.iter_mut().enumerate() {
        let d = &ring.dv[0].data[idx];
        for c in 0..6 {
            x[c] += sign * wm[idx] * d[c];
        }
    }
    Ok((uo, vo))
}

/// Zero-order coefficient of the fluid linearization at one node:
/// `[dÃ1 . w] d1 U + [dA2 . w] d2 U + [dA3 . w] d3 U` (the ring is steady).
pub(crate) fn c_plus_at(ring: &BasicState, idx: usize, w: &FluidVec) -> Result<FluidVec> {
    let st = ring.fluid_state(idx);
    let d = fluid_set_derivative(&st, w, &ring.eos)?;
    let da1 = lift_combination(&d, &ring.lift_plus.points[idx], 1.0);
    let mut r = [0.0; 8];
    mv(&da1, &ring.du[0].data[idx], &mut r);
    mv(&d[2], &ring.du[1].data[idx], &mut r);
    mv(&d[3], &ring.du[2].data[idx], &mut r);
    Ok(r)
}

/// Zero-order coefficient of the vacuum linearization at one node, acting on
/// the reflected velocity perturbation `wv`.
pub(crate) fn c_minus_at(ring: &BasicState, idx: usize, wv: &[f64; 3]) -> VacuumVec {
    let eps = ring.params.epsilon;
    let d = secondary_set_derivative(&[eps * wv[0], eps * wv[1], eps * wv[2]]);
    let db1 = lift_combination(&d, &ring.lift_minus.points[idx], eps);
    let mut r = [0.0; 6];
    mv(&db1, &ring.dv[0].data[idx], &mut r);
    mv(&d[2], &ring.dv[1].data[idx], &mut r);
    mv(&d[3], &ring.dv[2].data[idx], &mut r);
    r
}

/// `C+ U̇` over the fluid grid.
pub fn coeff_matrix_c_plus(ring: &BasicState, u_dot: &Field<8>) -> Result<Field<8>> {
    u_dot.check_compatible(&ring.u)?;
    let data: Result<Vec<FluidVec>> = (0..ring.plus.len())
        .into_par_iter()
        .map(|idx| c_plus_at(ring, idx, &u_dot.data[idx]))
        .collect();
    Ok(Field {
        grid: ring.plus,
        data: data?,
    })
}

/// `C- v̇⁻` over the vacuum grid, with `v̇⁻` read from the fluid perturbation
/// at the mirrored nodes.
pub fn coeff_matrix_c_minus(ring: &BasicState, u_dot: &Field<8>) -> Result<Field<6>> {
    u_dot.check_compatible(&ring.u)?;
    let data = (0..ring.minus.len())
        .into_par_iter()
        .map(|idx| {
            let w = &u_dot.data[idx];
            c_minus_at(ring, idx, &[w[1], w[2], w[3]])
        })
        .collect();
    Ok(Field {
        grid: ring.minus,
        data,
    })
}

/// Finite-difference construction of `C+ U̇` used to cross-check the analytic one.
pub fn coeff_matrix_c_plus_fd(ring: &BasicState, u_dot: &Field<8>, theta: f64) -> Result<Field<8>> {
    let data: Result<Vec<FluidVec>> = (0..ring.plus.len())
        .into_par_iter()
        .map(|idx| {
            let base = ring.u.data[idx];
            let mut pert = base;
            for c in 0..8 {
                pert[c] += theta * u_dot.data[idx][c];
            }
            let s0 = build_fluid_set(&FluidState::from_vec(&base), &ring.eos)?;
            let s1 = build_fluid_set(&FluidState::from_vec(&pert), &ring.eos)?;
            let lift = &ring.lift_plus.points[idx];
            let a0 = lift_combination(&s0, lift, 1.0);
            let a1 = lift_combination(&s1, lift, 1.0);
            let mut r = [0.0; 8];
            let inv = 1.0 / theta;
            mv(
                &a1.axpy(-1.0, &a0).scaled(inv),
                &ring.du[0].data[idx],
                &mut r,
            );
            mv(
                &s1[2].axpy(-1.0, &s0[2]).scaled(inv),
                &ring.du[1].data[idx],
                &mut r,
            );
            mv(
                &s1[3].axpy(-1.0, &s0[3]).scaled(inv),
                &ring.du[2].data[idx],
                &mut r,
            );
            Ok(r)
        })
        .collect();
    Ok(Field {
        grid: ring.plus,
        data: data?,
    })
}

/// Principal part `L+(ring) U` for a perturbation field and its rate.
fn principal_fluid(ring: &BasicState, u: &Field<8>, u_t: &Field<8>) -> Result<Field<8>> {
    let d = [u.d_normal(), u.d_tan(2)?, u.d_tan(3)?];
    let data: Result<Vec<FluidVec>> = (0..ring.plus.len())
        .into_par_iter()
        .map(|idx| {
            let set = build_fluid_set(&ring.fluid_state(idx), &ring.eos)?;
            let a1 = lift_combination(&set, &ring.lift_plus.points[idx], 1.0);
            let mut r = [0.0; 8];
            mv(&set[0], &u_t.data[idx], &mut r);
            mv(&a1, &d[0].data[idx], &mut r);
            mv(&set[2], &d[1].data[idx], &mut r);
            mv(&set[3], &d[2].data[idx], &mut r);
            Ok(r)
        })
        .collect();
    Ok(Field {
        grid: ring.plus,
        data: data?,
    })
}

fn vacuum_set(ring: &BasicState, idx: usize) -> [SymMatrix<6>; 4] {
    let eps = ring.params.epsilon;
    let vm = ring.v_minus(idx);
    secondary_set(&[eps * vm[0], eps * vm[1], eps * vm[2]])
}

fn principal_vacuum(ring: &BasicState, v: &Field<6>, v_t: &Field<6>) -> Result<Field<6>> {
    let eps = ring.params.epsilon;
    let d = [v.d_normal(), v.d_tan(2)?, v.d_tan(3)?];
    let data = (0..ring.minus.len())
        .into_par_iter()
        .map(|idx| {
            let set = vacuum_set(ring, idx);
            let b1 = lift_combination(&set, &ring.lift_minus.points[idx], eps);
            let mut r = [0.0; 6];
            mv(&set[0].scaled(eps), &v_t.data[idx], &mut r);
            mv(&b1, &d[0].data[idx], &mut r);
            mv(&set[2], &d[1].data[idx], &mut r);
            mv(&set[3], &d[2].data[idx], &mut r);
            r
        })
        .collect();
    Ok(Field {
        grid: ring.minus,
        data,
    })
}

/// Residuals of the linearized interior equations in good unknowns:
/// `(L+ U̇ + C+ U̇ - f, L- V̇ + C- v̇⁻)`.
pub fn linearized_interior(
    pert: &LinearPerturbation,
    rates: &PerturbationRates,
    ring: &BasicState,
) -> Result<(Field<8>, Field<6>)> {
    let mut rf = principal_fluid(ring, &pert.u, &rates.u_t)?;
    rf.axpy(1.0, &coeff_matrix_c_plus(ring, &pert.u)?);
    rf.axpy(-1.0, &pert.f);
    let mut rv = principal_vacuum(ring, &pert.v, &rates.v_t)?;
    rv.axpy(1.0, &coeff_matrix_c_minus(ring, &pert.u)?);
    Ok((rf, rv))
}

/// Lift derivatives of `Psi = chi phi` used by the linearization in raw unknowns.
fn psi_lift(phi: &InterfaceField, grid: &HalfGrid) -> Vec<LiftPoint> {
    let np = grid.np1();
    (0..grid.len())
        .map(|idx| {
            let k = idx / np;
            let (chi, dchi) = cutoff_chi(grid.x1(idx % np));
            let g = phi.grad_phi()[k];
            LiftPoint {
                dt_phi_lift: chi * phi.dt_phi()[k],
                d1_phi: dchi * phi.phi()[k],
                d2_phi: chi * g[0],
                d3_phi: chi * g[1],
            }
        })
        .collect()
}

/// Linearization of the discrete fluid operator in raw unknowns:
/// `L+ U + C+ U - (L+ Psi / d1 Phi) d1 U_ring`.
pub fn linearized_fluid_raw(
    u_raw: &Field<8>,
    u_raw_t: &Field<8>,
    phi: &InterfaceField,
    ring: &BasicState,
) -> Result<Field<8>> {
    let mut r = principal_fluid(ring, u_raw, u_raw_t)?;
    r.axpy(1.0, &coeff_matrix_c_plus(ring, u_raw)?);
    let psi = psi_lift(phi, &ring.plus);
    for idx in 0..ring.plus.len() {
        let set = build_fluid_set(&ring.fluid_state(idx), &ring.eos)?;
        let lp = &ring.lift_plus.points[idx];
        let a1 = lift_combination(&set, lp, 1.0);
        let p = &psi[idx];
        let m = set[0]
            .scaled(p.dt_phi_lift)
            .axpy(p.d1_phi, &a1)
            .axpy(p.d2_phi, &set[2])
            .axpy(p.d3_phi, &set[3])
            .scaled(1.0 / lp.d1_phi);
        let y = m.mul_vec(&ring.du[0].data[idx]);
        for c in 0..8 {
            r.data[idx][c] -= y[c];
        }
    }
    Ok(r)
}

/// Vacuum counterpart of [`linearized_fluid_raw`]; `u_raw` supplies `v⁻`.
pub fn linearized_vacuum_raw(
    v_raw: &Field<6>,
    v_raw_t: &Field<6>,
    u_raw: &Field<8>,
    phi: &InterfaceField,
    ring: &BasicState,
) -> Result<Field<6>> {
    let eps = ring.params.epsilon;
    let mut r = principal_vacuum(ring, v_raw, v_raw_t)?;
    r.axpy(1.0, &coeff_matrix_c_minus(ring, u_raw)?);
    let psi = psi_lift(phi, &ring.minus);
    for idx in 0..ring.minus.len() {
        let set = vacuum_set(ring, idx);
        let lp = &ring.lift_minus.points[idx];
        let b1 = lift_combination(&set, lp, eps);
        let p = &psi[idx];
        let m = set[0]
            .scaled(eps * p.dt_phi_lift)
            .axpy(p.d1_phi, &b1)
            .axpy(p.d2_phi, &set[2])
            .axpy(p.d3_phi, &set[3])
            .scaled(1.0 / lp.d1_phi);
        let y = m.mul_vec(&ring.dv[0].data[idx]);
        for c in 0..6 {
            r.data[idx][c] -= y[c];
        }
    }
    Ok(r)
}

/// Interface operator of the linearized problem, evaluated on the traces of
/// the good unknowns.
pub fn linearized_boundary(
    u_tr: &[FluidVec],
    v_tr: &[VacuumVec],
    phi: &InterfaceField,
    ring: &BasicState,
) -> Result<Vec<[f64; 4]>> {
    let sg = ring.plus.surf;
    if phi.grid() != &sg || u_tr.len() != sg.len() || v_tr.len() != sg.len() {
        return Err(Error::Usage(
            "interface data does not match the ring grid".into(),
        ));
    }
    let eps = ring.params.epsilon;
    let s = ring.params.sigma_tension;
    let curv = linearized_curvature_with(&sg, phi.phi(), &ring.b_ring);
    let e1phi: Vec<f64> = (0..sg.len())
        .map(|k| ring.v.column(k)[0][3] * phi.phi()[k])
        .collect();
    let d2e = sg.diff(&e1phi, 2);
    let d3e = sg.diff(&e1phi, 3);
    Ok((0..sg.len())
        .map(|k| {
            let gr = ring.phi.grad_phi()[k];
            let (n, t2, t3) = normal_tangents(gr[0], gr[1]);
            let ur = ring.u.column(k)[0];
            let vr = ring.v.column(k)[0];
            let g = phi.grad_phi()[k];
            let u = &u_tr[k];
            let v = &v_tr[k];
            let pt = phi.dt_phi()[k];
            let p = phi.phi()[k];
            let hr = [vr[0], vr[1], vr[2]];
            let er = [vr[3], vr[4], vr[5]];
            let h = [v[0], v[1], v[2]];
            let e = [v[3], v[4], v[5]];
            [
                pt + ur[2] * g[0] + ur[3] * g[1]
                    - ring.d1_vn[k] * p
                    - dot3(&[u[1], u[2], u[3]], &n),
                dot3(&e, &t2) - eps * hr[2] * pt + d2e[k],
                dot3(&e, &t3) + eps * hr[1] * pt + d3e[k],
                u[0] - dot3(&hr, &h) + dot3(&er, &e) + ring.jump_dq[k] * p - s * curv[k],
            ]
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstraintReport {
    #[serde(skip)]
    pub div_fluid: Field<1>,
    #[serde(skip)]
    pub div_vac_h: Field<1>,
    #[serde(skip)]
    pub div_vac_e: Field<1>,
    #[serde(skip)]
    pub trace_hn: Vec<f64>,
    #[serde(skip)]
    pub trace_hn_vac: Vec<f64>,
    /// Maxima over the nodes strictly between the interface and the outer
    /// boundary.
    pub div_fluid_max: f64,
    pub div_vac_h_max: f64,
    pub div_vac_e_max: f64,
    /// Maximum of all three divergences on the interface and outer node rows,
    /// where only a one-sided difference is available.
    pub div_boundary_rows_max: f64,
    pub trace_hn_max: f64,
    pub trace_hn_vac_max: f64,
}

/// Lifted divergence `d1 X_N + d2 (X2 d1 Phi) + d3 (X3 d1 Phi)` of the
/// 3-vector stored at component offset `off`.
fn lifted_divergence<const N: usize>(
    f: &Field<N>,
    lift: &LiftField,
    off: usize,
) -> Result<Field<1>> {
    let g = f.grid;
    let mut comps = Field::<3>::zeros(g);
    for idx in 0..g.len() {
        let x = &f.data[idx];
        let l = &lift.points[idx];
        comps.data[idx] = [
            x[off] - x[off + 1] * l.d2_phi - x[off + 2] * l.d3_phi,
            x[off + 1] * l.d1_phi,
            x[off + 2] * l.d1_phi,
        ];
    }
    let d1 = comps.d_normal();
    let d2 = comps.d_tan(2)?;
    let d3 = comps.d_tan(3)?;
    Ok(Field {
        grid: g,
        data: (0..g.len())
            .map(|i| [d1.data[i][0] + d2.data[i][1] + d3.data[i][2]])
            .collect(),
    })
}

/// `(interior max, boundary-row max)` of `|f|`.
fn split_rows(f: &Field<1>) -> (f64, f64) {
    let np = f.grid.np1();
    let mut inner: f64 = 0.0;
    let mut rows: f64 = 0.0;
    for (idx, x) in f.data.iter().enumerate() {
        let i1 = idx % np;
        if i1 == 0 || i1 + 1 == np {
            rows = rows.max(x[0].abs());
        } else {
            inner = inner.max(x[0].abs());
        }
    }
    (inner, rows)
}

/// Linear constraints: lifted divergences of the fluid and vacuum fields and
/// the normal-trace identities on the interface.
pub fn constraints(pert: &LinearPerturbation, ring: &BasicState) -> Result<ConstraintReport> {
    pert.u.check_compatible(&ring.u)?;
    let div_fluid = lifted_divergence(&pert.u, &ring.lift_plus, 4)?;
    let div_vac_h = lifted_divergence(&pert.v, &ring.lift_minus, 0)?;
    let div_vac_e = lifted_divergence(&pert.v, &ring.lift_minus, 3)?;
    let sg = ring.plus.surf;
    let mut trace_hn = vec![0.0; sg.len()];
    let mut trace_hn_vac = vec![0.0; sg.len()];
    for k in 0..sg.len() {
        let gr = ring.phi.grad_phi()[k];
        let (n, _, _) = normal_tangents(gr[0], gr[1]);
        let g = pert.phi.grad_phi()[k];
        let p = pert.phi.phi()[k];
        let u = pert.u.column(k)[0];
        let v = pert.v.column(k)[0];
        let ur = ring.u.column(k)[0];
        let vr = ring.v.column(k)[0];
        trace_hn[k] =
            dot3(&[u[4], u[5], u[6]], &n) - (ur[5] * g[0] + ur[6] * g[1] - p * ring.d1_hn_fluid[k]);
        trace_hn_vac[k] =
            dot3(&[v[0], v[1], v[2]], &n) - (vr[1] * g[0] + vr[2] * g[1] - p * ring.d1_hn_vac[k]);
    }
    let amax = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (fi, fb) = split_rows(&div_fluid);
    let (hi, hb) = split_rows(&div_vac_h);
    let (ei, eb) = split_rows(&div_vac_e);
    Ok(ConstraintReport {
        div_fluid_max: fi,
        div_vac_h_max: hi,
        div_vac_e_max: ei,
        div_boundary_rows_max: fb.max(hb).max(eb),
        trace_hn_max: amax(&trace_hn),
        trace_hn_vac_max: amax(&trace_hn_vac),
        div_fluid,
        div_vac_h,
        div_vac_e,
        trace_hn,
        trace_hn_vac,
    })
}

/// Residual of the interface-normal Ampère identity in the vacuum,
/// `eps dt E_N - d2 (h3 + h1 d2Phi + eps E3 dtPhi) + d3 (h2 + h1 d3Phi - eps E2 dtPhi)`.
pub fn t_en_identity(
    pert: &LinearPerturbation,
    rates: &PerturbationRates,
    ring: &BasicState,
) -> Result<Field<1>> {
    let eps = ring.params.epsilon;
    let g = ring.minus;
    let lift = &ring.lift_minus.points;
    let mut a = Field::<1>::zeros(g);
    let mut b = Field::<1>::zeros(g);
    let mut en_t = vec![0.0; g.len()];
    for idx in 0..g.len() {
        let v = &pert.v.data[idx];
        let vt = &rates.v_t.data[idx];
        let l = &lift[idx];
        en_t[idx] = vt[3] - vt[4] * l.d2_phi - vt[5] * l.d3_phi;
        a.data[idx] = [v[2] + v[0] * l.d2_phi + eps * v[5] * l.dt_phi_lift];
        b.data[idx] = [v[1] + v[0] * l.d3_phi - eps * v[4] * l.dt_phi_lift];
    }
    let da = a.d_tan(2)?;
    let db = b.d_tan(3)?;
    Ok(Field {
        grid: g,
        data: (0..g.len())
            .map(|i| [eps * en_t[i] - da.data[i][0] + db.data[i][0]])
            .collect(),
    })
}

/// Values of `v⁻` at the vacuum nodes for a fluid field on the mirrored grid.
pub fn reflect_velocity(u: &Field<8>, minus: HalfGrid) -> Result<Field<3>> {
    if minus.side != Side::Minus || minus.n1 != u.grid.n1 || minus.surf != u.grid.surf {
        return Err(Error::Usage(
            "vacuum grid does not mirror the fluid grid".into(),
        ));
    }
    Ok(Field {
        grid: minus,
        data: u.data.iter().map(|x| [x[1], x[2], x[3]]).collect(),
    })
}

/// Direction in raw unknowns for the linearization consistency check.
#[derive(Clone, Debug)]
pub struct Direction {
    pub u: Field<8>,
    pub u_t: Field<8>,
    pub v: Field<6>,
    pub v_t: Field<6>,
    pub phi: InterfaceField,
}

impl Direction {
    /// Smooth seeded direction: every component is a random multiple of
    /// `exp(-x1^2) cos(x2 + a) cos(x3 + b)` with random phases.
    pub fn sample(ring: &BasicState, seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut coef = |n: usize| -> Vec<[f64; 3]> {
            (0..n)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.0..6.3),
                        rng.gen_range(0.0..6.3),
                    ]
                })
                .collect()
        };
        let wave = |c: &[f64; 3], x: [f64; 3]| {
            c[0] * (-x[0] * x[0]).exp() * (x[1] + c[1]).cos() * (x[2] + c[2]).cos()
        };
        let (cu, cut, cv, cvt, cp) = (coef(8), coef(8), coef(6), coef(6), coef(2));
        let sg = ring.plus.surf;
        let surf = |c: &[f64; 3]| -> Vec<f64> {
            (0..sg.len())
                .map(|k| {
                    let (j2, j3) = sg.coords(k);
                    wave(c, [0.0, sg.x2(j2), sg.x3(j3)])
                })
                .collect()
        };
        Ok(Self {
            u: Field::from_fn(ring.plus, |x| std::array::from_fn(|c| wave(&cu[c], x))),
            u_t: Field::from_fn(ring.plus, |x| std::array::from_fn(|c| wave(&cut[c], x))),
            v: Field::from_fn(ring.minus, |x| std::array::from_fn(|c| wave(&cv[c], x))),
            v_t: Field::from_fn(ring.minus, |x| std::array::from_fn(|c| wave(&cvt[c], x))),
            phi: InterfaceField::new(sg, surf(&cp[0]), surf(&cp[1]))?,
        })
    }
}

/// Relative sup-norm gaps between difference quotients of the nonlinear
/// operators and their linearizations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinearizationGap {
    pub theta: f64,
    pub fluid: f64,
    pub vacuum: f64,
    pub boundary: f64,
    pub curvature: f64,
}

fn rel_gap(fd: impl Iterator<Item = f64>, lin: impl Iterator<Item = f64>) -> f64 {
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (a, b) in fd.zip(lin) {
        num = num.max((a - b).abs());
        den = den.max(b.abs());
    }
    num / den.max(f64::MIN_POSITIVE)
}

/// `(R(ring + theta d) - R(ring)) / theta` against the linearized operators
/// for the fluid, vacuum and interface residuals and for the mean curvature.
pub fn linearization_gap(ring: &BasicState, dir: &Direction, theta: f64) -> Result<LinearizationGap> {
    let eps = ring.params.epsilon;
    let sg = ring.plus.surf;
    let shifted = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + theta * y).collect() };
    let phi_th = InterfaceField::new(
        sg,
        shifted(ring.phi.phi(), dir.phi.phi()),
        shifted(ring.phi.dt_phi(), dir.phi.dt_phi()),
    )?;
    let mut u_th = ring.u.clone();
    u_th.axpy(theta, &dir.u);
    let mut ut_th = dir.u_t.clone();
    ut_th.scale(theta);
    let mut v_th = ring.v.clone();
    v_th.axpy(theta, &dir.v);
    let mut vt_th = dir.v_t.clone();
    vt_th.scale(theta);
    let zero_u = Field::zeros(ring.plus);
    let zero_v = Field::zeros(ring.minus);

    let quotient = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> {
        a.iter().zip(&b).map(|(x, y)| (x - y) / theta).collect()
    };
    let flat8 = |f: &Field<8>| -> Vec<f64> { f.data.iter().flatten().copied().collect() };
    let flat6 = |f: &Field<6>| -> Vec<f64> { f.data.iter().flatten().copied().collect() };

    let r1 = residual_fluid_nonlinear(&u_th, &ut_th, &phi_th, &ring.eos)?;
    let r0 = residual_fluid_nonlinear(&ring.u, &zero_u, &ring.phi, &ring.eos)?;
    let lin = linearized_fluid_raw(&dir.u, &dir.u_t, &dir.phi, ring)?;
    let fluid = rel_gap(quotient(flat8(&r1), flat8(&r0)).into_iter(), flat8(&lin).into_iter());

    let vm1 = reflect_velocity(&u_th, ring.minus)?;
    let vm0 = reflect_velocity(&ring.u, ring.minus)?;
    let r1 = residual_vacuum_secondary(&v_th, &vt_th, &vm1, &phi_th, eps)?;
    let r0 = residual_vacuum_secondary(&ring.v, &zero_v, &vm0, &ring.phi, eps)?;
    let lin = linearized_vacuum_raw(&dir.v, &dir.v_t, &dir.u, &dir.phi, ring)?;
    let vacuum = rel_gap(quotient(flat6(&r1), flat6(&r0)).into_iter(), flat6(&lin).into_iter());

    let b1 = residual_boundary_nonlinear(&u_th.trace(), &v_th.trace(), &phi_th, &ring.params)?;
    let b0 = residual_boundary_nonlinear(&ring.u.trace(), &ring.v.trace(), &ring.phi, &ring.params)?;
    let (ug, vg) = good_unknowns(&dir.u, &dir.v, &dir.phi, ring)?;
    let lin = linearized_boundary(&ug.trace(), &vg.trace(), &dir.phi, ring)?;
    let flat4 = |r: &[[f64; 4]]| -> Vec<f64> { r.iter().flatten().copied().collect() };
    let boundary = rel_gap(quotient(flat4(&b1), flat4(&b0)).into_iter(), flat4(&lin).into_iter());

    let lin = linearized_curvature_with(&sg, dir.phi.phi(), &ring.b_ring);
    let curvature = rel_gap(
        quotient(mean_curvature(&phi_th), mean_curvature(&ring.phi)).into_iter(),
        lin.into_iter(),
    );
    Ok(LinearizationGap {
        theta,
        fluid,
        vacuum,
        boundary,
        curvature,
    })
}

/// Observed orders `log(gap_j / gap_{j+1}) / log(theta_j / theta_{j+1})`.
pub fn observed_orders(thetas: &[f64], gaps: &[f64]) -> Vec<f64> {
    thetas
        .windows(2)
        .zip(gaps.windows(2))
        .map(|(t, g)| (g[0] / g[1]).ln() / (t[0] / t[1]).ln())
        .collect()
}
