//! Conormal weight and derivatives, `H1_tan` norms, the energy functional,
//! the interface quadratic form with its decomposition, and the running
//! verifier of the a priori estimate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{pairwise_sum, Field, HalfGrid, InterfaceField, SurfaceGrid};
use crate::geometry::{normal_tangents, smooth_step};
use crate::linalg::SymMatrix;
use crate::operators::{constraints, LinearPerturbation};
use crate::ring::BasicState;
use crate::solver::{Forcing, InterfaceTraces, Rates, SolverState};
use crate::state::{dot3, FluidVec, VacuumVec};
use crate::symmetrizers::{build_a0, build_fluid_set, lift_combination, secondary_set};

const SIGMA_KNEE: f64 = 0.5;
const SIGMA_WIDTH: f64 = 1.0;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Conormal weight `sigma(x1)`: `x1` below 1/2, 1 from 3/2 on, with
/// `sigma' = 1 - S(x1 - 1/2)` on the transition.
#[derive(Clone, Debug)]
pub struct ConormalWeight {
    rule: Vec<(f64, f64)>,
}

impl Default for ConormalWeight {
    fn default() -> Self {
        Self::new()
    }
}

impl ConormalWeight {
    pub fn new() -> Self {
        Self {
            rule: gauss_legendre(12),
        }
    }

    /// Integral of the smooth step over `[0, t]`, composite Gauss rule.
    fn integral_s(&self, t: f64) -> f64 {
        let panels = 8;
        let mut acc = 0.0;
        for p in 0..panels {
            let a = t * p as f64 / panels as f64;
            let b = t * (p + 1) as f64 / panels as f64;
            let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
            for &(xi, w) in &self.rule {
                acc += w * r * smooth_step(m + r * xi).0;
            }
        }
        acc
    }

    /// `(sigma, sigma')` at `|x1|`.
    pub fn eval(&self, x1: f64) -> (f64, f64) {
        let x = x1.abs();
        if x <= SIGMA_KNEE {
            return (x, 1.0);
        }
        if x >= SIGMA_KNEE + SIGMA_WIDTH {
            return (1.0, 0.0);
        }
        let t = (x - SIGMA_KNEE) / SIGMA_WIDTH;
        // S(1 - u) = 1 - S(u): integrate the small side only
        let acc = if t <= 0.5 {
            t - self.integral_s(t)
        } else {
            0.5 - self.integral_s(1.0 - t)
        };
        (SIGMA_KNEE + SIGMA_WIDTH * acc, 1.0 - smooth_step(t).0)
    }
}

/// Conormal derivative `dt^a0 (sigma d1)^a1 d2^a2 d3^a3 u`. Time derivatives
/// come from the supplied rate `u_t`; at most one is available.
pub fn conormal_derivative<const N: usize>(
    u: &Field<N>,
    u_t: Option<&Field<N>>,
    alpha: [usize; 4],
    weight: &ConormalWeight,
) -> Result<Field<N>> {
    let mut f = match alpha[0] {
        0 => u.clone(),
        1 => {
            let ut = u_t.ok_or_else(|| {
                Error::Usage("time derivative requested without time history".into())
            })?;
            ut.check_compatible(u)?;
            ut.clone()
        }
        a => {
            return Err(Error::Usage(format!(
                "time derivative of order {a} exceeds the stored history depth 1"
            )))
        }
    };
    for _ in 0..alpha[3] {
        f = f.d_tan(3)?;
    }
    for _ in 0..alpha[2] {
        f = f.d_tan(2)?;
    }
    for _ in 0..alpha[1] {
        f = weighted_normal(&f, weight);
    }
    Ok(f)
}

fn weighted_normal<const N: usize>(f: &Field<N>, weight: &ConormalWeight) -> Field<N> {
    let g = f.grid;
    let np = g.np1();
    let sig: Vec<f64> = (0..np).map(|i| weight.eval(g.x1(i)).0).collect();
    let mut d = f.d_normal();
    for (idx, x) in d.data.iter_mut().enumerate() {
        let s = sig[idx % np];
        for c in x.iter_mut() {
            *c *= s;
        }
    }
    d
}

fn sq<const N: usize>(x: &[f64; N]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Spatial integral of `sum_{|alpha| <= 1} |D_tan^alpha u|^2` at one time.
pub fn h1tan_density<const N: usize>(
    u: &Field<N>,
    u_t: Option<&Field<N>>,
    weight: &ConormalWeight,
) -> Result<f64> {
    let mut total = u.l2_sq();
    if let Some(ut) = u_t {
        ut.check_compatible(u)?;
        total += ut.l2_sq();
    }
    total += u.d_tan(2)?.l2_sq() + u.d_tan(3)?.l2_sq();
    total += weighted_normal(u, weight).l2_sq();
    Ok(total)
}

/// Spatial integral of `|u|^2 + |u_t|^2 + |grad u|^2` at one time.
pub fn h1_density<const N: usize>(u: &Field<N>, u_t: Option<&Field<N>>) -> Result<f64> {
    let mut total = u.l2_sq();
    if let Some(ut) = u_t {
        ut.check_compatible(u)?;
        total += ut.l2_sq();
    }
    Ok(total + u.d_normal().l2_sq() + u.d_tan(2)?.l2_sq() + u.d_tan(3)?.l2_sq())
}

/// Interface integral of `|phi|^2 + |grad' phi|^2` and their first
/// derivatives in `t`, `x2`, `x3`.
pub fn interface_h1_density(grid: &SurfaceGrid, phi: &[f64], phi_t: &[f64]) -> f64 {
    let d2 = grid.diff(phi, 2);
    let d3 = grid.diff(phi, 3);
    let d22 = grid.diff(&d2, 2);
    let d23 = grid.diff(&d2, 3);
    let d32 = grid.diff(&d3, 2);
    let d33 = grid.diff(&d3, 3);
    let t2 = grid.diff(phi_t, 2);
    let t3 = grid.diff(phi_t, 3);
    let dens: Vec<f64> = (0..grid.len())
        .map(|k| {
            phi[k] * phi[k]
                + phi_t[k] * phi_t[k]
                + d2[k] * d2[k]
                + d3[k] * d3[k]
                + t2[k] * t2[k]
                + t3[k] * t3[k]
                + d22[k] * d22[k]
                + d23[k] * d23[k]
                + d32[k] * d32[k]
                + d33[k] * d33[k]
        })
        .collect();
    grid.integrate(&dens)
}

/// Trapezoid rule in time of per-frame spatial integrals.
pub fn time_trapezoid(times: &[f64], values: &[f64]) -> f64 {
    let terms: Vec<f64> = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .collect();
    pairwise_sum(&terms)
}

/// `H1_tan(Omega_T)` norm of a field history given at increasing times, with
/// the time derivative supplied per frame.
pub fn norm_h1tan<const N: usize>(
    times: &[f64],
    u: &[Field<N>],
    u_t: &[Field<N>],
    weight: &ConormalWeight,
) -> Result<f64> {
    if times.len() != u.len() || u.len() != u_t.len() {
        return Err(Error::Usage("history lengths differ".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("frame times must increase".into()));
    }
    let dens: Result<Vec<f64>> = u
        .iter()
        .zip(u_t)
        .map(|(a, b)| h1tan_density(a, Some(b), weight))
        .collect();
    Ok(time_trapezoid(times, &dens?).sqrt())
}

/// Symmetrizers evaluated once per ring for repeated energy evaluations.
#[derive(Clone, Debug)]
pub struct EnergyWeights {
    pub a0: Vec<SymMatrix<8>>,
    pub b0: Vec<SymMatrix<6>>,
}

impl EnergyWeights {
    pub fn new(ring: &BasicState) -> Result<Self> {
        let eps = ring.params.epsilon;
        let a0: Result<Vec<_>> = (0..ring.plus.len())
            .into_par_iter()
            .map(|idx| build_a0(&ring.fluid_state(idx), &ring.eos))
            .collect();
        let b0 = (0..ring.minus.len())
            .into_par_iter()
            .map(|idx| {
                let vm = ring.v_minus(idx);
                secondary_set(&[eps * vm[0], eps * vm[1], eps * vm[2]])[0].scaled(eps)
            })
            .collect();
        Ok(Self { a0: a0?, b0 })
    }

    /// `(int A0 U . U, int eps B0 V . V)`.
    pub fn split(&self, u: &Field<8>, v: &Field<6>) -> (f64, f64) {
        (
            u.integrate_with(|idx, x| self.a0[idx].quad(x)),
            v.integrate_with(|idx, x| self.b0[idx].quad(x)),
        )
    }
}

/// Energy `I(t) = int A0 U̇ . U̇ + int eps B0 V̇ . V̇`.
pub fn energy_i(pert: &LinearPerturbation, ring: &BasicState) -> Result<f64> {
    pert.u.check_compatible(&ring.u)?;
    pert.v.check_compatible(&ring.v)?;
    let w = EnergyWeights::new(ring)?;
    let (a, b) = w.split(&pert.u, &pert.v);
    Ok(a + b)
}

/// `mu = 2 (E1 + eps v2 h3 - eps v3 h2)` on the interface.
pub fn mu_field(ring: &BasicState) -> Vec<f64> {
    let eps = ring.params.epsilon;
    (0..ring.plus.surf.len())
        .map(|k| {
            let u = ring.u.column(k)[0];
            let v = ring.v.column(k)[0];
            2.0 * (v[3] + eps * u[2] * v[2] - eps * u[3] * v[1])
        })
        .collect()
}

/// Pointwise interface form and its decomposition.
#[derive(Clone, Debug, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundaryForm {
    /// `-Ã1 U . U + eps^{-1} B̃1 V . V`.
    pub q_raw: Vec<f64>,
    /// Fluid part `-Ã1 U . U`.
    pub q_fluid: Vec<f64>,
    /// `s dt (B grad' phi . grad' phi)`.
    pub surf_flux: Vec<f64>,
    /// `dt (mu phi E_N)`.
    pub mu_term: Vec<f64>,
    /// Tangential flux divergences.
    pub flux_div: Vec<f64>,
    /// Remainder `q_raw - surf_flux - mu_term - flux_div`.
    pub lower: Vec<f64>,
}

/// Interface quadratic form on the traces, with the decomposition into the
/// surface-tension time derivative, the `mu` term, tangential fluxes and a
/// remainder. `v_t0` is the time derivative of the vacuum trace.
pub fn boundary_form_q(
    u_tr: &[FluidVec],
    v_tr: &[VacuumVec],
    v_t0: &[VacuumVec],
    phi: &InterfaceField,
    ring: &BasicState,
) -> Result<BoundaryForm> {
    let sg = ring.plus.surf;
    let n = sg.len();
    if u_tr.len() != n || v_tr.len() != n || v_t0.len() != n || phi.grid() != &sg {
        return Err(Error::Usage(
            "interface data does not match the ring grid".into(),
        ));
    }
    let eps = ring.params.epsilon;
    let s = ring.params.sigma_tension;
    let mu = mu_field(ring);
    let p = phi.phi();
    let pt = phi.dt_phi();
    let g = phi.grad_phi();
    let gt2 = sg.diff(pt, 2);
    let gt3 = sg.diff(pt, 3);

    let mut out = BoundaryForm {
        q_raw: vec![0.0; n],
        q_fluid: vec![0.0; n],
        surf_flux: vec![0.0; n],
        mu_term: vec![0.0; n],
        flux_div: vec![0.0; n],
        lower: vec![0.0; n],
    };
    let mut fa = vec![0.0; n];
    let mut fb = vec![0.0; n];
    let mut sa = vec![0.0; n];
    let mut sb = vec![0.0; n];
    for k in 0..n {
        let idx = ring.plus.col_index(k, 0);
        let set = build_fluid_set(&ring.fluid_state(idx), &ring.eos)?;
        let a1 = lift_combination(&set, &ring.lift_plus.points[idx], 1.0);
        let vm = ring.v_minus(idx);
        let vset = secondary_set(&[eps * vm[0], eps * vm[1], eps * vm[2]]);
        let b1 = lift_combination(&vset, &ring.lift_minus.points[idx], eps);
        let qf = -a1.quad(&u_tr[k]);
        out.q_fluid[k] = qf;
        out.q_raw[k] = qf + b1.quad(&v_tr[k]) / eps;

        let gr = ring.phi.grad_phi()[k];
        let (nr, t2, t3) = normal_tangents(gr[0], gr[1]);
        let b = ring.b_ring[k];
        let bg = [
            b[0][0] * g[k][0] + b[0][1] * g[k][1],
            b[1][0] * g[k][0] + b[1][1] * g[k][1],
        ];
        out.surf_flux[k] = 2.0 * s * (bg[0] * gt2[k] + bg[1] * gt3[k]);
        sa[k] = pt[k] * bg[0];
        sb[k] = pt[k] * bg[1];

        let e = [v_tr[k][3], v_tr[k][4], v_tr[k][5]];
        let h = [v_tr[k][0], v_tr[k][1], v_tr[k][2]];
        let et = [v_t0[k][3], v_t0[k][4], v_t0[k][5]];
        let en = dot3(&e, &nr);
        let en_t = dot3(&et, &nr);
        out.mu_term[k] = mu[k] * (pt[k] * en + p[k] * en_t);
        // steady ring: the dt phi_ring parts of the fluxes vanish
        fa[k] = -mu[k] * p[k] * dot3(&h, &t3);
        fb[k] = mu[k] * p[k] * dot3(&h, &t2);
    }
    let dfa = sg.diff(&fa, 2);
    let dfb = sg.diff(&fb, 3);
    let dsa = sg.diff(&sa, 2);
    let dsb = sg.diff(&sb, 3);
    for k in 0..n {
        out.flux_div[k] = (dfa[k] + dfb[k]) / eps - 2.0 * s * (dsa[k] + dsb[k]);
        out.lower[k] = out.q_raw[k] - out.surf_flux[k] - out.mu_term[k] - out.flux_div[k];
    }
    Ok(out)
}

/// `s int |grad' phi|^2 / |N_ring|^3`.
pub fn surface_term(phi: &InterfaceField, ring: &BasicState) -> f64 {
    let sg = ring.plus.surf;
    let s = ring.params.sigma_tension;
    let d: Vec<f64> = (0..sg.len())
        .map(|k| {
            let g = phi.grad_phi()[k];
            let gr = ring.phi.grad_phi()[k];
            let n2 = 1.0 + gr[0] * gr[0] + gr[1] * gr[1];
            (g[0] * g[0] + g[1] * g[1]) / (n2 * n2.sqrt())
        })
        .collect();
    s * sg.integrate(&d)
}

/// `s int B grad' phi . grad' phi`.
pub fn surface_energy(phi: &InterfaceField, ring: &BasicState) -> f64 {
    let sg = ring.plus.surf;
    let s = ring.params.sigma_tension;
    let d: Vec<f64> = (0..sg.len())
        .map(|k| {
            let g = phi.grad_phi()[k];
            let b = ring.b_ring[k];
            g[0] * (b[0][0] * g[0] + b[0][1] * g[1]) + g[1] * (b[1][0] * g[0] + b[1][1] * g[1])
        })
        .collect();
    s * sg.integrate(&d)
}

/// One row of the energy time series.
#[derive(Clone, Debug, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EnergyReport {
    pub t: f64,
    #[serde(rename = "I")]
    pub i: f64,
    /// Energies of `dt`, `d2`, `d3` derivatives.
    pub i_ell: [f64; 3],
    pub i_tan1: f64,
    pub i_vac: f64,
    pub q_bnd: f64,
    pub surf_term: f64,
    pub surf_energy: f64,
    pub mu_term: f64,
    pub flux_div: f64,
    /// `int |lower|` and the quadratic scale it is compared with.
    pub lower_abs: f64,
    pub lower_scale: f64,
    pub lhs54: f64,
    pub rhs54: f64,
    pub ratio54: f64,
    pub div_fluid_max: f64,
    pub div_vac_max: f64,
    pub trace_hn_max: f64,
}

/// Sides of the estimate accumulated over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Estimate54 {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `rhs == 0` while `lhs` exceeds the tolerance.
    pub violation_candidate: bool,
}

/// Absolute tolerance below which a left-hand side counts as zero.
pub const LHS_ZERO_TOL: f64 = 1e-14;

impl Estimate54 {
    pub fn from_sides(lhs: f64, rhs: f64) -> Self {
        if rhs > 0.0 {
            Self {
                lhs,
                rhs,
                ratio: lhs / rhs,
                violation_candidate: false,
            }
        } else {
            Self {
                lhs,
                rhs,
                ratio: 0.0,
                violation_candidate: lhs > LHS_ZERO_TOL,
            }
        }
    }
}

/// Accumulates the energy diagnostics frame by frame during a run.
pub struct EnergyMonitor {
    weights: EnergyWeights,
    conormal: ConormalWeight,
    times: Vec<f64>,
    dens_u: Vec<f64>,
    dens_v: Vec<f64>,
    dens_phi: Vec<f64>,
    dens_f: Vec<f64>,
    q_hist: Vec<f64>,
    surf_flux_hist: Vec<f64>,
    pub reports: Vec<EnergyReport>,
}

impl EnergyMonitor {
    pub fn new(ring: &BasicState) -> Result<Self> {
        Ok(Self {
            weights: EnergyWeights::new(ring)?,
            conormal: ConormalWeight::new(),
            times: Vec::new(),
            dens_u: Vec::new(),
            dens_v: Vec::new(),
            dens_phi: Vec::new(),
            dens_f: Vec::new(),
            q_hist: Vec::new(),
            surf_flux_hist: Vec::new(),
            reports: Vec::new(),
        })
    }

    /// Records one frame.
    pub fn record(
        &mut self,
        ring: &BasicState,
        st: &SolverState,
        rates: &Rates,
        traces: &InterfaceTraces,
        forcing: &Forcing,
    ) -> Result<&EnergyReport> {
        if let Some(&last) = self.times.last() {
            if st.t <= last {
                return Err(Error::Usage(
                    "frames must be recorded at increasing times".into(),
                ));
            }
        }
        let sg = ring.plus.surf;
        let (i_f, i_v) = self.weights.split(&st.u, &st.v);
        let d2u = st.u.d_tan(2)?;
        let d3u = st.u.d_tan(3)?;
        let d2v = st.v.d_tan(2)?;
        let d3v = st.v.d_tan(3)?;
        let (a0, b0) = self.weights.split(&rates.u, &rates.v);
        let (a2, b2) = self.weights.split(&d2u, &d2v);
        let (a3, b3) = self.weights.split(&d3u, &d3v);
        let i_ell = [a0 + b0, a2 + b2, a3 + b3];

        let phi = InterfaceField::new(sg, st.phi.clone(), rates.phi.clone())?;
        let v_t0 = rates.v.trace();
        let bf = boundary_form_q(&traces.u_star, &traces.v_star, &v_t0, &phi, ring)?;
        let q_bnd = sg.integrate(&bf.q_raw);
        let lower_abs = sg.integrate(&bf.lower.iter().map(|x| x.abs()).collect::<Vec<_>>());
        let scale: Vec<f64> = (0..sg.len())
            .map(|k| {
                let g = phi.grad_phi()[k];
                sq(&traces.u_star[k])
                    + sq(&traces.v_star[k])
                    + st.phi[k] * st.phi[k]
                    + rates.phi[k] * rates.phi[k]
                    + g[0] * g[0]
                    + g[1] * g[1]
            })
            .collect();

        let fu = h1tan_density(&st.u, Some(&rates.u), &self.conormal)?;
        let fv = h1_density(&st.v, Some(&rates.v))?;
        let fphi = interface_h1_density(&sg, &st.phi, &rates.phi);
        let ff = match (forcing.fluid_at(st.t), forcing.fluid_rate_at(st.t)) {
            (Some(f), Some(ft)) => h1tan_density(&f, Some(&ft), &self.conormal)?,
            _ => 0.0,
        };
        self.times.push(st.t);
        self.dens_u.push(fu);
        self.dens_v.push(fv);
        self.dens_phi.push(fphi);
        self.dens_f.push(ff);
        self.q_hist.push(q_bnd);
        self.surf_flux_hist.push(sg.integrate(&bf.surf_flux));
        let est = self.estimate();

        let pert = LinearPerturbation {
            u: st.u.clone(),
            v: st.v.clone(),
            phi: phi.clone(),
            f: Field::zeros(st.u.grid),
        };
        let cons = constraints(&pert, ring)?;
        self.reports.push(EnergyReport {
            t: st.t,
            i: i_f + i_v,
            i_ell,
            i_tan1: i_ell.iter().sum(),
            i_vac: i_v,
            q_bnd,
            surf_term: surface_term(&phi, ring),
            surf_energy: surface_energy(&phi, ring),
            mu_term: sg.integrate(&bf.mu_term),
            flux_div: sg.integrate(&bf.flux_div),
            lower_abs,
            lower_scale: sg.integrate(&scale),
            lhs54: est.lhs,
            rhs54: est.rhs,
            ratio54: est.ratio,
            div_fluid_max: cons.div_fluid_max,
            div_vac_max: cons.div_vac_h_max.max(cons.div_vac_e_max),
            trace_hn_max: cons.trace_hn_max.max(cons.trace_hn_vac_max),
        });
        Ok(self.reports.last().expect("just pushed"))
    }

    /// Estimate sides over the frames recorded so far.
    pub fn estimate(&self) -> Estimate54 {
        let t = &self.times;
        let lhs = time_trapezoid(t, &self.dens_u).sqrt()
            + time_trapezoid(t, &self.dens_v).sqrt()
            + time_trapezoid(t, &self.dens_phi).sqrt();
        let rhs = time_trapezoid(t, &self.dens_f).sqrt();
        Estimate54::from_sides(lhs, rhs)
    }

    /// Time integral of the interface form and of its surface-tension part.
    pub fn boundary_integrals(&self) -> (f64, f64) {
        (
            time_trapezoid(&self.times, &self.q_hist),
            time_trapezoid(&self.times, &self.surf_flux_hist),
        )
    }
}

/// Estimate verdict for a finished run.
pub fn verify_estimate_54(monitor: &EnergyMonitor) -> Estimate54 {
    monitor.estimate()
}

/// Smallest constant satisfying `lhs <= C rhs` for every run of a suite, or
/// `None` if some run has `rhs = 0` with a nonzero left-hand side.
pub fn fit_suite_constant(runs: &[Estimate54]) -> Option<f64> {
    let mut c: f64 = 0.0;
    for r in runs {
        if r.violation_candidate {
            return None;
        }
        c = c.max(r.ratio);
    }
    Some(c)
}

/// Half-grid helper: fluid/vacuum node weights for custom reductions.
pub fn node_weight(g: &HalfGrid, idx: usize) -> f64 {
    g.w1(idx % g.np1()) * g.surf.cell_area()
}
