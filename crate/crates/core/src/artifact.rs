//! Artifact files: CSV tables, `run.json`, and binary field dumps with JSON
//! headers. Everything is assembled in memory first and written in one pass,
//! so a run either leaves a complete directory or reports an error.

use std::path::Path;

use serde_json::json;

use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::solver::mms::ConvergenceLevel;
use crate::solver::modal::ModeGrowth;
use crate::solver::SolverState;

pub const SERIES_COLUMNS: [&str; 9] = [
    "t",
    "I",
    "Itan1",
    "Ivac",
    "surfTerm",
    "ratio54",
    "divFluidMax",
    "divVacMax",
    "traceHNMax",
];

pub const FLUID_COMPONENTS: [&str; 8] = ["q", "v1", "v2", "v3", "H1", "H2", "H3", "S"];
pub const VACUUM_COMPONENTS: [&str; 6] = ["h1", "h2", "h3", "E1", "E2", "E3"];

/// Named files in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn insert_front(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(0, (name.to_string(), bytes));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io_at(parent, e))?;
            }
            std::fs::write(&path, bytes).map_err(|e| Error::io_at(&path, e))?;
        }
        Ok(())
    }
}

pub fn json_bytes(v: &serde_json::Value) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

fn table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s.into_bytes()
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn series_csv(reports: &[EnergyReport]) -> Vec<u8> {
    table(
        &SERIES_COLUMNS,
        reports.iter().map(|r| {
            [
                r.t,
                r.i,
                r.i_tan1,
                r.i_vac,
                r.surf_term,
                r.ratio54,
                r.div_fluid_max,
                r.div_vac_max,
                r.trace_hn_max,
            ]
            .map(num)
            .to_vec()
        }),
    )
}

/// The remaining energy diagnostics, one row per frame.
pub fn energy_csv(reports: &[EnergyReport]) -> Vec<u8> {
    table(
        &[
            "t", "I", "Idt", "Id2", "Id3", "Qbnd", "surfEnergy", "muTerm", "fluxDiv",
            "lowerAbs", "lowerScale", "lhs54", "rhs54",
        ],
        reports.iter().map(|r| {
            [
                r.t,
                r.i,
                r.i_ell[0],
                r.i_ell[1],
                r.i_ell[2],
                r.q_bnd,
                r.surf_energy,
                r.mu_term,
                r.flux_div,
                r.lower_abs,
                r.lower_scale,
                r.lhs54,
                r.rhs54,
            ]
            .map(num)
            .to_vec()
        }),
    )
}

pub fn growth_csv(rows: &[ModeGrowth]) -> Vec<u8> {
    table(
        &["k", "k2", "k3", "growthRate", "frequency", "L1_length", "n1", "dim"],
        rows.iter().map(|m| {
            vec![
                num(m.k_abs),
                num(m.k[0]),
                num(m.k[1]),
                num(m.growth_rate),
                num(m.frequency),
                num(m.l1),
                m.n1.to_string(),
                m.dim.to_string(),
            ]
        }),
    )
}

pub fn convergence_csv(levels: &[ConvergenceLevel]) -> Vec<u8> {
    table(
        &[
            "n1", "nTan", "h1", "steps", "errorFluid", "errorVacuum", "errorPhi", "error", "order",
        ],
        levels.iter().map(|l| {
            vec![
                l.n1.to_string(),
                l.n_tan.to_string(),
                num(l.h1),
                l.steps.to_string(),
                num(l.error_fluid),
                num(l.error_vacuum),
                num(l.error_phi),
                num(l.error),
                l.order.map(num).unwrap_or_default(),
            ]
        }),
    )
}

fn le_bytes<'a>(values: impl Iterator<Item = &'a f64>) -> Vec<u8> {
    values.flat_map(|v| v.to_le_bytes()).collect()
}

/// Adds `<stem>_fluid`, `<stem>_vacuum` and `<stem>_phi` as `.bin` data with
/// `.json` headers. Volume arrays have shape `[n2, n3, n1 + 1, components]`,
/// row-major, with index 0 of the third axis on the interface.
pub fn add_state_dump(art: &mut Artifacts, stem: &str, st: &SolverState) {
    let g = st.u.grid;
    let (n2, n3, np) = (g.surf.n2, g.surf.n3, g.np1());
    let header = |what: &str, shape: Vec<usize>, comps: &[&str], sign: f64| {
        json!({
            "field": what,
            "shape": shape,
            "dtype": "f64",
            "order": "row-major",
            "endianness": "little",
            "components": comps,
            "x1Direction": sign,
            "spacing": [g.h1, g.surf.h2, g.surf.h3],
            "t": st.t,
            "step": st.step,
        })
    };
    let parts = [
        (
            "fluid",
            le_bytes(st.u.data.iter().flatten()),
            header("fluid", vec![n2, n3, np, 8], &FLUID_COMPONENTS, 1.0),
        ),
        (
            "vacuum",
            le_bytes(st.v.data.iter().flatten()),
            header("vacuum", vec![n2, n3, np, 6], &VACUUM_COMPONENTS, -1.0),
        ),
        (
            "phi",
            le_bytes(st.phi.iter()),
            header("phi", vec![n2, n3], &["phi"], 0.0),
        ),
    ];
    for (what, data, head) in parts {
        let mut h = serde_json::to_vec_pretty(&head).expect("header serializes");
        h.push(b'\n');
        art.add(&format!("{stem}_{what}.json"), h);
        art.add(&format!("{stem}_{what}.bin"), data);
    }
}

/// Machine-readable error record.
pub fn error_json(err: &Error, exit_code: i32) -> serde_json::Value {
    let mut v = json!({
        "status": "error",
        "exitCode": exit_code,
        "category": err.category(),
        "message": err.to_string(),
    });
    if let Error::Config { field, .. } = err {
        v["field"] = json!(field);
    }
    if let Error::Aborted { step, time, .. } = err {
        v["step"] = json!(step);
        v["time"] = json!(time);
    }
    v
}
