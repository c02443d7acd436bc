//! Half-space solver for the linearized problem in good unknowns.
//!
//! Method of lines: SBP-SAT in `x1`, centered periodic differences in `x2`,
//! `x3`, SSP-RK3 in time. The interface displacement is advanced as an ODE
//! whose rate comes from the interface closure.

pub mod kernel;
pub mod mms;
pub mod modal;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, InterfaceField};
use crate::operators::LinearPerturbation;
use crate::ring::BasicState;
use crate::state::{FluidVec, VacuumVec};

use kernel::{column_rhs, interface_closure, interface_knowns, ColumnIn};
pub use kernel::{Coefficients, CLOSURE_TOL};

/// Largest admissible CFL number.
pub const CFL_MAX: f64 = 0.4;

/// Growth factor of the solution norm (relative to the initial and source
/// scales) that is reported as an instability.
pub const BLOWUP_FACTOR: f64 = 1e12;

/// Treatment of the truncated far boundaries `|x1| = L1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub enum OuterBoundary {
    /// Characteristic absorbing condition with zero incoming data.
    #[default]
    Absorbing,
    /// Incoming characteristics taken from the forcing's outer data.
    Prescribed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Fixed time step; the CFL rule is used when absent.
    #[serde(default, rename = "dt_time")]
    pub dt: Option<f64>,
    #[serde(rename = "tEnd_time", default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub outer: OuterBoundary,
}

fn default_cfl() -> f64 {
    CFL_MAX
}

fn default_t_end() -> f64 {
    0.6
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(default_t_end())
    }
}

impl SolverConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            cfl: CFL_MAX,
            dt: None,
            t_end,
            outer: OuterBoundary::Absorbing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= CFL_MAX) {
            return Err(Error::config("cfl", format!("must lie in (0, {CFL_MAX}]")));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("tEnd_time", "must be positive"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config("dt_time", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Time profile of one separable forcing term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum TimeProfile {
    Constant,
    Cos {
        omega: f64,
    },
    Sin {
        omega: f64,
    },
    /// Smooth bump supported on `(start, start + duration)` with peak 1.
    Pulse {
        start: f64,
        duration: f64,
    },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Cos { omega } => (omega * t).cos(),
            TimeProfile::Sin { omega } => (omega * t).sin(),
            TimeProfile::Pulse { start, duration } => {
                let s = 2.0 * (t - start) / duration - 1.0;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 0.0,
            TimeProfile::Cos { omega } => -omega * (omega * t).sin(),
            TimeProfile::Sin { omega } => omega * (omega * t).cos(),
            TimeProfile::Pulse { start, duration } => {
                let s = 2.0 * (t - start) / duration - 1.0;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let d = 1.0 - s * s;
                    let val = (1.0 - 1.0 / d).exp();
                    val * (-2.0 * s / (d * d)) * 2.0 / duration
                }
            }
        }
    }

    fn bound(&self) -> f64 {
        1.0
    }
}

/// One separable forcing term: a time profile times fixed spatial data.
#[derive(Clone, Debug)]
pub struct ForcingTerm {
    pub profile: TimeProfile,
    pub fluid: Option<Field<8>>,
    pub vacuum: Option<Field<6>>,
    /// Right-hand side of the four interface conditions.
    pub boundary: Option<Vec<[f64; 4]>>,
    /// Exterior states at the outer fluid and vacuum boundaries, per column.
    pub outer_fluid: Option<Vec<FluidVec>>,
    pub outer_vacuum: Option<Vec<VacuumVec>>,
}

impl ForcingTerm {
    pub fn fluid(profile: TimeProfile, f: Field<8>) -> Self {
        Self {
            profile,
            fluid: Some(f),
            vacuum: None,
            boundary: None,
            outer_fluid: None,
            outer_vacuum: None,
        }
    }

    fn scale(&self) -> f64 {
        let tr = |v: &Option<Vec<[f64; 4]>>| {
            v.as_ref()
                .map(|x| x.iter().flatten().fold(0.0f64, |m, y| m.max(y.abs())))
                .unwrap_or(0.0)
        };
        self.fluid.as_ref().map(|f| f.l2()).unwrap_or(0.0)
            + self.vacuum.as_ref().map(|f| f.l2()).unwrap_or(0.0)
            + tr(&self.boundary)
            + self
                .outer_fluid
                .as_ref()
                .map(|x| x.iter().flatten().fold(0.0f64, |m, y| m.max(y.abs())))
                .unwrap_or(0.0)
            + self
                .outer_vacuum
                .as_ref()
                .map(|x| x.iter().flatten().fold(0.0f64, |m, y| m.max(y.abs())))
                .unwrap_or(0.0)
    }
}

/// Sum of separable forcing terms.
#[derive(Clone, Debug, Default)]
pub struct Forcing {
    pub terms: Vec<ForcingTerm>,
}

impl Forcing {
    pub fn none() -> Self {
        Self::default()
    }

    /// Fluid source at time `t`, or `None` when no term has one.
    pub fn fluid_at(&self, t: f64) -> Option<Field<8>> {
        self.sum_fields(t, |term| term.fluid.as_ref(), false)
    }

    /// Time derivative of the fluid source.
    pub fn fluid_rate_at(&self, t: f64) -> Option<Field<8>> {
        self.sum_fields(t, |term| term.fluid.as_ref(), true)
    }

    fn sum_fields<'a, const N: usize>(
        &'a self,
        t: f64,
        get: impl Fn(&'a ForcingTerm) -> Option<&'a Field<N>>,
        rate: bool,
    ) -> Option<Field<N>> {
        let mut out: Option<Field<N>> = None;
        for term in &self.terms {
            if let Some(f) = get(term) {
                let p = if rate {
                    term.profile.derivative(t)
                } else {
                    term.profile.eval(t)
                };
                let acc = out.get_or_insert_with(|| Field::zeros(f.grid));
                acc.axpy(p, f);
            }
        }
        out
    }

    fn scale(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.profile.bound() * t.scale())
            .sum()
    }

    fn has_outer(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.outer_fluid.is_some() || t.outer_vacuum.is_some())
    }
}

/// Time-dependent unknowns of the scheme.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub t: f64,
    pub step: usize,
    pub u: Field<8>,
    pub v: Field<6>,
    pub phi: Vec<f64>,
}

impl SolverState {
    pub fn zeros(ring: &BasicState) -> Self {
        Self {
            t: 0.0,
            step: 0,
            u: Field::zeros(ring.plus),
            v: Field::zeros(ring.minus),
            phi: vec![0.0; ring.plus.surf.len()],
        }
    }

    pub fn from_perturbation(p: &LinearPerturbation, t: f64) -> Self {
        Self {
            t,
            step: 0,
            u: p.u.clone(),
            v: p.v.clone(),
            phi: p.phi.phi().to_vec(),
        }
    }

    /// Discrete `L2` size of all unknowns (volume trapezoid rule plus the
    /// interface integral of `phi^2`).
    pub fn norm(&self) -> f64 {
        let sg = self.u.grid.surf;
        let p2: Vec<f64> = self.phi.iter().map(|x| x * x).collect();
        (self.u.l2_sq() + self.v.l2_sq() + sg.integrate(&p2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.phi.iter().all(|x| x.is_finite())
    }

    /// `self = a self + b (other + dt rates)`.
    fn combine(&mut self, a: f64, b: f64, other: &SolverState, rates: &Rates, dt: f64) {
        fn upd<const N: usize>(
            x: &mut Field<N>,
            a: f64,
            b: f64,
            o: &Field<N>,
            r: &Field<N>,
            dt: f64,
        ) {
            x.data
                .par_iter_mut()
                .zip(o.data.par_iter())
                .zip(r.data.par_iter())
                .for_each(|((x, o), r)| {
                    for c in 0..N {
                        x[c] = a * x[c] + b * (o[c] + dt * r[c]);
                    }
                });
        }
        upd(&mut self.u, a, b, &other.u, &rates.u, dt);
        upd(&mut self.v, a, b, &other.v, &rates.v, dt);
        for ((x, o), r) in self.phi.iter_mut().zip(&other.phi).zip(&rates.phi) {
            *x = a * *x + b * (o + dt * r);
        }
    }

    /// Perturbation view (with `dt phi` from the given rates).
    pub fn to_perturbation(&self, rates: &Rates, forcing: &Forcing) -> Result<LinearPerturbation> {
        let sg = self.u.grid.surf;
        Ok(LinearPerturbation {
            u: self.u.clone(),
            v: self.v.clone(),
            phi: InterfaceField::new(sg, self.phi.clone(), rates.phi.clone())?,
            f: forcing
                .fluid_at(self.t)
                .unwrap_or_else(|| Field::zeros(self.u.grid)),
        })
    }
}

/// Time derivatives produced by the semi-discrete operator.
#[derive(Clone, Debug)]
pub struct Rates {
    pub u: Field<8>,
    pub v: Field<6>,
    pub phi: Vec<f64>,
}

impl Rates {
    pub fn zeros(ring: &BasicState) -> Self {
        Self {
            u: Field::zeros(ring.plus),
            v: Field::zeros(ring.minus),
            phi: vec![0.0; ring.plus.surf.len()],
        }
    }
}

/// Interface states selected by the closure (they satisfy the interface
/// conditions exactly, up to the closure tolerance).
#[derive(Clone, Debug)]
pub struct InterfaceTraces {
    pub u_star: Vec<FluidVec>,
    pub v_star: Vec<VacuumVec>,
}

#[derive(Debug)]
pub struct HalfSpaceSolver {
    pub ring: BasicState,
    pub coefs: Coefficients,
    pub forcing: Forcing,
    pub config: SolverConfig,
    pub dt: f64,
    pub n_steps: usize,
}

impl HalfSpaceSolver {
    pub fn new(ring: BasicState, forcing: Forcing, config: SolverConfig) -> Result<Self> {
        let coefs = Coefficients::build(&ring)?;
        Self::with_coefficients(ring, coefs, forcing, config)
    }

    /// Like [`HalfSpaceSolver::new`] with coefficients already built for `ring`.
    pub fn with_coefficients(
        ring: BasicState,
        coefs: Coefficients,
        forcing: Forcing,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        if coefs.np != ring.plus.np1() || coefs.iface.len() != ring.plus.surf.len() {
            return Err(Error::Usage("coefficients were built for another grid".into()));
        }
        if config.outer == OuterBoundary::Absorbing {
            let limit = ring.plus.n1 as f64 * ring.plus.h1 / coefs.max_normal_speed;
            if config.t_end >= limit {
                return Err(Error::config(
                    "tEnd_time",
                    format!(
                        "run length {} reaches the outer boundary (L1 / max normal speed = {limit:.4})",
                        config.t_end
                    ),
                ));
            }
        } else if !forcing.has_outer() {
            return Err(Error::config(
                "outer",
                "prescribed outer boundary needs outer data",
            ));
        }
        let dt_cfl = config.cfl / coefs.max_rate;
        let dt0 = match config.dt {
            Some(dt) if dt > dt_cfl * (1.0 + 1e-12) => {
                return Err(Error::config(
                    "dt_time",
                    format!("{dt} exceeds the CFL limit {dt_cfl:.6e}"),
                ))
            }
            Some(dt) => dt,
            None => dt_cfl,
        };
        let n_steps = (config.t_end / dt0).ceil().max(1.0) as usize;
        let dt = config.t_end / n_steps as f64;
        Ok(Self {
            ring,
            coefs,
            forcing,
            config,
            dt,
            n_steps,
        })
    }

    /// Evaluates the semi-discrete right-hand side; fills `traces` when given.
    pub fn rhs(
        &self,
        st: &SolverState,
        t: f64,
        out: &mut Rates,
        traces: Option<&mut InterfaceTraces>,
    ) -> Result<()> {
        let ring = &self.ring;
        let sg = ring.plus.surf;
        let np = self.coefs.np;
        let known = interface_knowns(ring, &st.phi);

        let mut data = vec![[0.0; 4]; sg.len()];
        let mut outer_u: Option<Vec<FluidVec>> = None;
        let mut outer_v: Option<Vec<VacuumVec>> = None;
        for term in &self.forcing.terms {
            let p = term.profile.eval(t);
            if let Some(b) = &term.boundary {
                for (d, x) in data.iter_mut().zip(b) {
                    for r in 0..4 {
                        d[r] += p * x[r];
                    }
                }
            }
            if self.config.outer == OuterBoundary::Prescribed {
                if let Some(o) = &term.outer_fluid {
                    let acc = outer_u.get_or_insert_with(|| vec![[0.0; 8]; sg.len()]);
                    for (a, x) in acc.iter_mut().zip(o) {
                        for c in 0..8 {
                            a[c] += p * x[c];
                        }
                    }
                }
                if let Some(o) = &term.outer_vacuum {
                    let acc = outer_v.get_or_insert_with(|| vec![[0.0; 6]; sg.len()]);
                    for (a, x) in acc.iter_mut().zip(o) {
                        for c in 0..6 {
                            a[c] += p * x[c];
                        }
                    }
                }
            }
        }
        let sources: Vec<(f64, &ForcingTerm)> = self
            .forcing
            .terms
            .iter()
            .map(|term| (term.profile.eval(t), term))
            .filter(|(p, term)| *p != 0.0 && (term.fluid.is_some() || term.vacuum.is_some()))
            .collect();

        let closures: Vec<std::result::Result<kernel::Closure<f64>, f64>> = (0..sg.len())
            .into_par_iter()
            .map(|k| {
                let col_u = st.u.column(k);
                let col_v = st.v.column(k);
                interface_closure(
                    &self.coefs.iface[k],
                    &col_u[0],
                    &col_v[0],
                    &known[k],
                    &data[k],
                )
            })
            .collect();
        let mut cls = Vec::with_capacity(closures.len());
        for (k, c) in closures.into_iter().enumerate() {
            match c {
                Ok(c) => cls.push(c),
                Err(res) => {
                    let (j2, j3) = sg.coords(k);
                    return Err(Error::Numerical(format!(
                        "interface closure residual {res:.3e} exceeds {CLOSURE_TOL:e} at ({j2}, {j3}), t = {t}"
                    )));
                }
            }
        }

        let h2 = sg.h2;
        let h3 = sg.h3;
        let cls_ref = &cls;
        out.u
            .data
            .par_chunks_mut(np)
            .zip(out.v.data.par_chunks_mut(np))
            .enumerate()
            .for_each(|(k, (ou, ov))| {
                let nb = sg.neighbours(k);
                let tan = |a: usize, b: usize, h: f64| -> Vec<[f64; 8]> {
                    let (f, g) = (st.u.column(a), st.u.column(b));
                    f.iter()
                        .zip(g)
                        .map(|(x, y)| std::array::from_fn(|c| (y[c] - x[c]) / (2.0 * h)))
                        .collect()
                };
                let tanv = |a: usize, b: usize, h: f64| -> Vec<[f64; 6]> {
                    let (f, g) = (st.v.column(a), st.v.column(b));
                    f.iter()
                        .zip(g)
                        .map(|(x, y)| std::array::from_fn(|c| (y[c] - x[c]) / (2.0 * h)))
                        .collect()
                };
                let d2u = tan(nb[0], nb[1], h2);
                let d3u = tan(nb[2], nb[3], h3);
                let d2v = tanv(nb[0], nb[1], h2);
                let d3v = tanv(nb[2], nb[3], h3);
                let inp = ColumnIn {
                    u: st.u.column(k),
                    d2u: &d2u,
                    d3u: &d3u,
                    v: st.v.column(k),
                    d2v: &d2v,
                    d3v: &d3v,
                    outer_u: outer_u.as_ref().map(|o| o[k]),
                    outer_v: outer_v.as_ref().map(|o| o[k]),
                };
                let cf = self.coefs.column_fluid(k);
                let cv = self.coefs.column_vac(k);
                column_rhs(
                    cf,
                    cv,
                    &self.coefs.iface[k],
                    &self.coefs.outer_fluid[k],
                    &self.coefs.outer_vac[k],
                    self.coefs.h1,
                    &inp,
                    &cls_ref[k],
                    ou,
                    ov,
                );
                for (p, term) in &sources {
                    if let Some(f) = &term.fluid {
                        for (i, x) in f.column(k).iter().enumerate() {
                            let a = &cf[i].a0inv;
                            for r in 0..8 {
                                let mut s = 0.0;
                                for c in 0..8 {
                                    s += a[r][c] * x[c];
                                }
                                ou[i][r] += p * s;
                            }
                        }
                    }
                    if let Some(f) = &term.vacuum {
                        for (i, x) in f.column(k).iter().enumerate() {
                            let a = &cv[i].m0inv;
                            for r in 0..6 {
                                let mut s = 0.0;
                                for c in 0..6 {
                                    s += a[r][c] * x[c];
                                }
                                ov[i][r] += p * s;
                            }
                        }
                    }
                }
            });

        for (k, c) in cls.iter().enumerate() {
            out.phi[k] = c.phi_t;
        }
        if let Some(tr) = traces {
            tr.u_star = cls.iter().map(|c| c.u_star).collect();
            tr.v_star = cls.iter().map(|c| c.v_star).collect();
        }
        Ok(())
    }

    /// Rates and closure states at the current state.
    pub fn evaluate(&self, st: &SolverState) -> Result<(Rates, InterfaceTraces)> {
        let mut r = Rates::zeros(&self.ring);
        let mut tr = InterfaceTraces {
            u_star: Vec::new(),
            v_star: Vec::new(),
        };
        self.rhs(st, st.t, &mut r, Some(&mut tr))?;
        Ok((r, tr))
    }

    /// One SSP-RK3 step of size `dt`.
    pub fn step(&self, st: &mut SolverState, dt: f64, work: &mut StepWork) -> Result<()> {
        let t = st.t;
        self.rhs(st, t, &mut work.rates, None)?;
        work.s1.clone_from(st);
        work.s1.combine(0.0, 1.0, st, &work.rates, dt);
        self.rhs(&work.s1, t + dt, &mut work.rates, None)?;
        work.s2.clone_from(st);
        work.s2.combine(0.75, 0.25, &work.s1, &work.rates, dt);
        self.rhs(&work.s2, t + 0.5 * dt, &mut work.rates, None)?;
        st.combine(1.0 / 3.0, 2.0 / 3.0, &work.s2, &work.rates, dt);
        st.t = t + dt;
        st.step += 1;
        Ok(())
    }

    /// Advances to `t_end`, calling `observe` at step 0, every `every` steps
    /// and at the final step.
    pub fn run(
        &self,
        st: &mut SolverState,
        every: usize,
        mut observe: impl FnMut(&SolverState) -> Result<()>,
    ) -> Result<()> {
        let every = every.max(1);
        let mut work = StepWork::new(st);
        let init = st.norm();
        let src = self.forcing.scale();
        observe(st)?;
        for n in 0..self.n_steps {
            self.step(st, self.dt, &mut work)?;
            let norm = st.norm();
            let reference = (init + src * st.t).max(f64::MIN_POSITIVE);
            if !st.is_finite() || norm > BLOWUP_FACTOR * reference {
                return Err(Error::Aborted {
                    step: st.step,
                    time: st.t,
                    reason: format!("solution norm {norm:.3e} exceeds {BLOWUP_FACTOR:e} x reference {reference:.3e}"),
                });
            }
            if (n + 1) % every == 0 || n + 1 == self.n_steps {
                observe(st)?;
            }
        }
        Ok(())
    }
}

/// Scratch states reused across steps.
pub struct StepWork {
    rates: Rates,
    s1: SolverState,
    s2: SolverState,
}

impl StepWork {
    pub fn new(st: &SolverState) -> Self {
        Self {
            rates: Rates {
                u: Field::zeros(st.u.grid),
                v: Field::zeros(st.v.grid),
                phi: vec![0.0; st.phi.len()],
            },
            s1: st.clone(),
            s2: st.clone(),
        }
    }
}

/// Advances a perturbation by `t_end` with zero data.
pub fn advance(
    pert: &LinearPerturbation,
    ring: &BasicState,
    config: &SolverConfig,
) -> Result<LinearPerturbation> {
    let solver = HalfSpaceSolver::new(ring.clone(), Forcing::none(), config.clone())?;
    let mut st = SolverState::from_perturbation(pert, 0.0);
    solver.run(&mut st, usize::MAX, |_| Ok(()))?;
    let (rates, _) = solver.evaluate(&st)?;
    st.to_perturbation(&rates, &solver.forcing)
}
