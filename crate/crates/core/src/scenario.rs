//! Scenario files and the runners behind each command-line kind.
//!
//! A scenario is a TOML document. Every section has defaults, so a file may
//! be as short as `kind = "simulate"`. The resolved configuration (defaults
//! and command-line overrides applied) is echoed into `run.json`.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifact::{self, Artifacts};
use crate::audit::{matrix_audit, AuditSettings};
use crate::energy::{EnergyMonitor, EnergyReport, Estimate54};
use crate::error::{Error, Result};
use crate::field::{Field, InterfaceField};
use crate::operators::LinearPerturbation;
use crate::ring::{BasicState, RingPreset};
use crate::solver::mms::{convergence_study, ConvergenceSetup};
use crate::solver::modal::{growth_trend, log_spaced, scan, ModalSetup};
use crate::solver::{
    Forcing, ForcingTerm, HalfSpaceSolver, SolverConfig, SolverState, TimeProfile,
};
use crate::state::{EosModel, GridSpec, PhysicsParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "matrix-audit")]
    MatrixAudit,
    #[serde(rename = "mode-scan")]
    ModeScan,
    #[serde(rename = "simulate")]
    Simulate,
    #[serde(rename = "verify-54")]
    Verify54,
    #[serde(rename = "convergence")]
    Convergence,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::MatrixAudit => "matrix-audit",
            Kind::ModeScan => "mode-scan",
            Kind::Simulate => "simulate",
            Kind::Verify54 => "verify-54",
            Kind::Convergence => "convergence",
        }
    }
}

/// Separable fluid source
/// `amplitude * exp(-((x1 - center) / width)^2) * sin(2 pi m2 x2 / L2) * cos(2 pi m3 x3 / L3)`
/// with the time profile `profile`. An all-zero amplitude means no source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SourceSpec {
    pub profile: TimeProfile,
    /// Components `(q, v1, v2, v3, H1, H2, H3, S)`.
    pub amplitude: [f64; 8],
    #[serde(rename = "center_length")]
    pub center: f64,
    #[serde(rename = "width_length")]
    pub width: f64,
    pub modes: [u32; 2],
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            profile: TimeProfile::Pulse {
                start: 0.0,
                duration: 0.4,
            },
            amplitude: [0.2, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.3],
            center: 0.5,
            width: 8f64.sqrt().recip(),
            modes: [1, 1],
        }
    }
}

impl SourceSpec {
    pub fn is_zero(&self) -> bool {
        self.amplitude.iter().all(|a| *a == 0.0)
    }

    fn validate(&self) -> Result<()> {
        if self.amplitude.iter().any(|a| !a.is_finite()) {
            return Err(Error::config("source.amplitude", "must be finite"));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::config("source.width_length", "must be positive"));
        }
        if self.modes[0] == 0 {
            return Err(Error::config(
                "source.modes",
                "the x2 mode multiplies a sine and must be at least 1",
            ));
        }
        if let TimeProfile::Pulse { duration, .. } = self.profile {
            if !(duration > 0.0) {
                return Err(Error::config("source.profile.duration", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn forcing(&self, ring: &BasicState) -> Forcing {
        if self.is_zero() {
            return Forcing::none();
        }
        let g = ring.plus;
        let k2 = 2.0 * PI * self.modes[0] as f64 / (g.surf.n2 as f64 * g.surf.h2);
        let k3 = 2.0 * PI * self.modes[1] as f64 / (g.surf.n3 as f64 * g.surf.h3);
        let f = Field::from_fn(g, |x| {
            let r = (x[0] - self.center) / self.width;
            let b = (-r * r).exp() * (k2 * x[1]).sin() * (k3 * x[2]).cos();
            self.amplitude.map(|a| a * b)
        });
        Forcing {
            terms: vec![ForcingTerm::fluid(self.profile, f)],
        }
    }
}

/// Seeded random initial perturbation of `q`, `v`, `S` and `phi`, each a
/// product of a normal bump and one phase-shifted tangential wave. The
/// magnetic and electric components start at zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct InitialSpec {
    pub amplitude: f64,
}

impl InitialSpec {
    fn perturbation(&self, ring: &BasicState, seed: u64) -> LinearPerturbation {
        let mut p = LinearPerturbation::zeros(ring);
        if self.amplitude == 0.0 {
            return p;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut wave = || {
            (
                self.amplitude * rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..2.0 * PI),
            )
        };
        let comps: Vec<(usize, (f64, f64, f64))> =
            [0, 1, 2, 3, 7].iter().map(|&c| (c, wave())).collect();
        let (pa, p2, p3) = wave();
        let sg = ring.plus.surf;
        let (k2, k3) = (
            2.0 * PI / (sg.n2 as f64 * sg.h2),
            2.0 * PI / (sg.n3 as f64 * sg.h3),
        );
        p.u = Field::from_fn(ring.plus, |x| {
            let bump = (-4.0 * x[0] * x[0]).exp();
            let mut u = [0.0; 8];
            for &(c, (a, s2, s3)) in &comps {
                u[c] = a * bump * (k2 * x[1] + s2).cos() * (k3 * x[2] + s3).cos();
            }
            u
        });
        p.phi = InterfaceField::from_fn(sg, |x2, x3| {
            0.1 * pa * (k2 * x2 + p2).cos() * (k3 * x3 + p3).cos()
        });
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ModeScanSpec {
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
    pub direction: [f64; 2],
    pub n1: usize,
    #[serde(rename = "L1Scale_length")]
    pub l1_scale: f64,
    #[serde(rename = "L1Min_length")]
    pub l1_min: f64,
    #[serde(rename = "L1Max_length")]
    pub l1_max: f64,
}

impl Default for ModeScanSpec {
    fn default() -> Self {
        let s = ModalSetup::default();
        Self {
            k_min: 1.0,
            k_max: 10.0,
            points: 8,
            direction: [1.0, 0.0],
            n1: s.n1,
            l1_scale: s.l1_scale,
            l1_min: s.l1_min,
            l1_max: s.l1_max,
        }
    }
}

impl ModeScanSpec {
    pub fn setup(&self) -> ModalSetup {
        ModalSetup {
            n1: self.n1,
            l1_scale: self.l1_scale,
            l1_min: self.l1_min,
            l1_max: self.l1_max,
        }
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        log_spaced(self.k_min, self.k_max, self.points)
    }

    fn validate(&self) -> Result<()> {
        if !(self.k_min > 0.0 && self.k_max >= self.k_min && self.k_max.is_finite()) {
            return Err(Error::config("modeScan.kMin", "need 0 < kMin <= kMax"));
        }
        if self.points == 0 {
            return Err(Error::config("modeScan.points", "must be positive"));
        }
        if self.direction == [0.0, 0.0] {
            return Err(Error::config("modeScan.direction", "must be nonzero"));
        }
        if self.n1 < 4 {
            return Err(Error::config("modeScan.n1", "must be at least 4"));
        }
        if !(self.l1_min > 1.0 / self.n1 as f64 && self.l1_max >= self.l1_min && self.l1_scale > 0.0)
        {
            return Err(Error::config(
                "modeScan.L1Min_length",
                "need 0 < L1Min <= L1Max and a positive L1Scale",
            ));
        }
        Ok(())
    }
}

fn default_output() -> String {
    "out".into()
}
fn default_ring() -> RingPreset {
    RingPreset::Trivial { q0: 1.0 }
}
fn default_snapshot_every() -> usize {
    5
}
fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub physics: PhysicsParams,
    #[serde(default)]
    pub eos: EosModel,
    #[serde(default = "default_ring")]
    pub ring: RingPreset,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Steps between diagnostic frames (series rows and time quadrature).
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    /// Steps between binary field dumps; 0 dumps the initial and final states only.
    #[serde(default)]
    pub field_dump_every: usize,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub audit: AuditSettings,
    #[serde(default)]
    pub mode_scan: ModeScanSpec,
    #[serde(default)]
    pub convergence: ConvergenceSetup,
    /// Refinement factor applied by the command line; echoed, not read.
    #[serde(default = "one", skip_deserializing)]
    pub refine: usize,
}

/// Command-line overrides applied on top of a parsed file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub output: Option<String>,
    pub seed: Option<u64>,
    pub refine: Option<usize>,
    pub sigma_tension: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_kind(text, None)
    }

    /// Parses a scenario whose kind may come from the command instead of the
    /// file. A file that names a different kind is rejected.
    pub fn from_toml_with_kind(text: &str, kind: Option<Kind>) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            field: "<document>".into(),
            message: e.message().to_string(),
        })?;
        if let Some(k) = kind {
            match table.get("kind") {
                Some(toml::Value::String(s)) if s != k.name() => {
                    return Err(Error::config(
                        "kind",
                        format!("file declares '{s}' but the command is '{}'", k.name()),
                    ));
                }
                _ => {
                    table.insert("kind".into(), toml::Value::String(k.name().into()));
                }
            }
        }
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let field = if path.is_empty() || path == "." {
                "<document>".to_string()
            } else {
                path
            };
            Error::Config {
                field,
                message: e.into_inner().message().to_string(),
            }
        })
    }

    pub fn load(path: &Path, kind: Option<Kind>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        Self::from_toml_with_kind(&text, kind)
    }

    /// Applies overrides and resolves derived settings, then validates.
    pub fn resolve(mut self, ov: &Overrides) -> Result<Self> {
        if let Some(o) = &ov.output {
            self.output = o.clone();
        }
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(s) = ov.sigma_tension {
            self.physics.sigma_tension = s;
        }
        let factor = ov.refine.unwrap_or(1);
        if ![1, 2, 4].contains(&factor) {
            return Err(Error::config("refine", "must be one of 1, 2, 4"));
        }
        if factor != 1 {
            if self.kind == Kind::MatrixAudit {
                return Err(Error::config("refine", "matrix-audit has no grid to refine"));
            }
            self.grid = self.grid.refined(factor);
            self.solver.dt = self.solver.dt.map(|d| d / factor as f64);
            self.mode_scan.n1 *= factor;
            for l in &mut self.convergence.levels {
                l.0 *= factor;
                l.1 *= factor;
            }
        }
        self.refine = factor;
        match (self.grid.dt, self.solver.dt) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::config(
                    "solver.dt_time",
                    "conflicts with grid.dt_time; set only one",
                ))
            }
            (Some(a), None) => self.solver.dt = Some(a),
            _ => {}
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.eos.validate()?;
        if self.output.is_empty() {
            return Err(Error::config("output", "must name a directory"));
        }
        match self.kind {
            Kind::MatrixAudit => self.audit.validate(),
            Kind::ModeScan => {
                if !self.ring.is_constant() {
                    return Err(Error::config(
                        "ring.preset",
                        format!(
                            "mode-scan needs a constant ring; '{}' with these parameters varies in space",
                            self.ring.name()
                        ),
                    ));
                }
                self.mode_scan.validate()
            }
            Kind::Simulate | Kind::Verify54 => {
                self.grid.validate()?;
                self.solver.validate().map_err(|e| prefix(e, "solver"))?;
                self.source.validate()?;
                if self.snapshot_every == 0 {
                    return Err(Error::config("snapshotEvery", "must be positive"));
                }
                if self.field_dump_every % self.snapshot_every != 0 {
                    return Err(Error::config(
                        "fieldDumpEvery",
                        "must be a multiple of snapshotEvery",
                    ));
                }
                if !self.initial.amplitude.is_finite() {
                    return Err(Error::config("initial.amplitude", "must be finite"));
                }
                if self.kind == Kind::Verify54 {
                    if self.initial.amplitude != 0.0 {
                        return Err(Error::config(
                            "initial.amplitude",
                            "verify-54 runs start from zero data",
                        ));
                    }
                    if self.source.is_zero() {
                        return Err(Error::config(
                            "source.amplitude",
                            "verify-54 needs a nonzero source",
                        ));
                    }
                }
                Ok(())
            }
            Kind::Convergence => self.convergence.validate(),
        }
    }

    pub fn basic_state(&self) -> Result<BasicState> {
        BasicState::from_preset(&self.ring, &self.grid, &self.eos, &self.physics)
    }
}

fn prefix(e: Error, section: &str) -> Error {
    match e {
        Error::Config { field, message } => Error::Config {
            field: format!("{section}.{field}"),
            message,
        },
        other => other,
    }
}

/// Outcome of a time-dependent run.
pub struct Simulation {
    pub solver: HalfSpaceSolver,
    pub reports: Vec<EnergyReport>,
    pub estimate: Estimate54,
    /// Time integrals of the interface form and of its surface-tension part.
    pub boundary_integrals: (f64, f64),
    pub dumps: Vec<SolverState>,
    pub final_state: SolverState,
}

/// Runs the solver with the energy monitor sampling every `snapshot_every` steps.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation> {
    let ring = cfg.basic_state()?;
    let forcing = cfg.source.forcing(&ring);
    let init = cfg.initial.perturbation(&ring, cfg.seed);
    let solver = HalfSpaceSolver::new(ring, forcing, cfg.solver.clone())?;
    let mut st = SolverState::from_perturbation(&init, 0.0);
    let mut mon = EnergyMonitor::new(&solver.ring)?;
    let mut dumps = Vec::new();
    let dump_every = cfg.field_dump_every;
    let n_steps = solver.n_steps;
    solver.run(&mut st, cfg.snapshot_every, |s| {
        let (r, tr) = solver.evaluate(s)?;
        mon.record(&solver.ring, s, &r, &tr, &solver.forcing)?;
        let due = dump_every > 0 && s.step % dump_every == 0;
        if s.step == 0 || s.step == n_steps || due {
            dumps.push(s.clone());
        }
        Ok(())
    })?;
    Ok(Simulation {
        estimate: mon.estimate(),
        boundary_integrals: mon.boundary_integrals(),
        reports: mon.reports,
        solver,
        dumps,
        final_state: st,
    })
}

pub fn growth_file_name(sigma: f64) -> String {
    format!("growth_s{sigma}.csv")
}

/// Runs one scenario and returns its artifacts, `run.json` included.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let summary = match cfg.kind {
        Kind::MatrixAudit => {
            let r = matrix_audit(&cfg.eos, &cfg.audit, cfg.seed)?;
            json!({
                "audit": r,
                "symmetryOk": r.symmetry_ok(),
                "spectraOk": r.spectra_ok(),
            })
        }
        Kind::ModeScan => {
            let ks = cfg.mode_scan.wavenumbers();
            let rows = scan(
                &cfg.ring,
                &cfg.eos,
                &cfg.physics,
                &ks,
                cfg.mode_scan.direction,
                &cfg.mode_scan.setup(),
            )?;
            let name = growth_file_name(cfg.physics.sigma_tension);
            art.add(&name, artifact::growth_csv(&rows));
            json!({
                "growthFile": name,
                "sigmaTension": cfg.physics.sigma_tension,
                "trend": growth_trend(&rows),
            })
        }
        Kind::Simulate | Kind::Verify54 => {
            let sim = simulate(cfg)?;
            art.add("series.csv", artifact::series_csv(&sim.reports));
            art.add("energy.csv", artifact::energy_csv(&sim.reports));
            for (j, s) in sim.dumps.iter().enumerate() {
                artifact::add_state_dump(&mut art, &format!("fields/state_{j:03}"), s);
            }
            let last = sim.reports.last().cloned().unwrap_or_default();
            let worst = |f: fn(&EnergyReport) -> f64| sim.reports.iter().map(f).fold(0.0, f64::max);
            json!({
                "steps": sim.solver.n_steps,
                "dt_time": sim.solver.dt,
                "tEnd_time": sim.final_state.t,
                "frames": sim.reports.len(),
                "finalI": last.i,
                "estimate54": sim.estimate,
                "boundaryFormIntegral": sim.boundary_integrals.0,
                "surfaceFluxIntegral": sim.boundary_integrals.1,
                "divFluidMax": worst(|r| r.div_fluid_max),
                "divVacMax": worst(|r| r.div_vac_max),
                "traceHNMax": worst(|r| r.trace_hn_max),
            })
        }
        Kind::Convergence => {
            let levels = convergence_study(&cfg.ring, &cfg.eos, &cfg.physics, &cfg.convergence)?;
            art.add("convergence.csv", artifact::convergence_csv(&levels));
            json!({ "levels": levels })
        }
    };
    let mut files: Vec<String> = art.names();
    files.insert(0, "run.json".into());
    let run = json!({
        "kind": cfg.kind.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "summary": summary,
        "files": files,
    });
    art.insert_front("run.json", artifact::json_bytes(&run)?);
    Ok(art)
}
