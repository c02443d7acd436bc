//! Basic ("ring") states: the frozen coefficients of the linearized problem.
//!
//! Ring states are steady. They are sampled on the fixed half-space grids and
//! their spatial derivatives are taken with the same discrete differences the
//! residual evaluators use, so linearizations are exact at the discrete level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, HalfGrid, InterfaceField, Side, SurfaceGrid};
use crate::geometry::{curvature_matrix, lift_phi, normal_tangents, LiftField, PHI_MAX};
use crate::state::{
    check_hyperbolicity, dot3, EosModel, FluidState, FluidVec, GridSpec, PhysicsParams, VacuumVec,
};

/// Named recipes for ring states. All are periodic in `x2`, `x3` and satisfy the
/// kinematic and electric jump conditions on the flat or wavy interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "camelCase", deny_unknown_fields)]
pub enum RingPreset {
    /// Fluid at rest with constant total pressure, empty vacuum.
    Trivial {
        #[serde(default = "one")]
        q0: f64,
    },
    /// Tangential fluid velocity `(0, v2, 0)`, fluid field `(0, 0, hf)`,
    /// vacuum field `(0, 0, hv)`.
    Shear {
        #[serde(default = "one")]
        q0: f64,
        v2: f64,
        #[serde(default)]
        hf: f64,
        #[serde(default)]
        hv: f64,
    },
    /// Fluid at rest, vacuum electric field normal to the interface.
    #[serde(rename = "bigE")]
    BigE {
        #[serde(default = "one")]
        q0: f64,
        e1: f64,
    },
    /// Tangential magnetic fields on both sides of a flat interface.
    TangentialH {
        #[serde(default = "one")]
        q0: f64,
        #[serde(rename = "H")]
        h_fluid: [f64; 2],
        #[serde(rename = "h")]
        h_vac: [f64; 2],
    },
    /// Interface `a sin(2 pi m x2 / L2)` with fields and flow along `x3`.
    Wavy {
        #[serde(default = "one")]
        q0: f64,
        amplitude: f64,
        #[serde(default = "one_usize")]
        mode: usize,
        #[serde(default)]
        v3: f64,
        #[serde(default)]
        h3: f64,
        #[serde(default)]
        hv3: f64,
    },
    /// Fluid quantities varying in `x1` (entropy, total pressure, shear flow,
    /// field strength) next to a constant vacuum with a normal electric field.
    Stratified {
        #[serde(default = "one")]
        q0: f64,
        #[serde(default)]
        q1: f64,
        #[serde(default)]
        s1: f64,
        #[serde(default)]
        v2: f64,
        #[serde(default)]
        h2: f64,
        #[serde(default)]
        h3: f64,
        #[serde(default)]
        e1: f64,
        #[serde(default)]
        hv: [f64; 2],
    },
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}

impl RingPreset {
    pub fn name(&self) -> &'static str {
        match self {
            RingPreset::Trivial { .. } => "trivial",
            RingPreset::Shear { .. } => "shear",
            RingPreset::BigE { .. } => "bigE",
            RingPreset::TangentialH { .. } => "tangentialH",
            RingPreset::Wavy { .. } => "wavy",
            RingPreset::Stratified { .. } => "stratified",
        }
    }

    /// True when every ring quantity is constant, so the frozen-mode analysis applies.
    pub fn is_constant(&self) -> bool {
        match self {
            RingPreset::Wavy { amplitude, .. } => *amplitude == 0.0,
            RingPreset::Stratified { q1, s1, v2, h3, .. } => {
                *q1 == 0.0 && *s1 == 0.0 && *v2 == 0.0 && *h3 == 0.0
            }
            _ => true,
        }
    }

    /// Fluid ring value at signed normal coordinate `x1`, tangential `(x2, x3)`.
    pub fn fluid_at(&self, x: [f64; 3]) -> FluidVec {
        let mut u = [0.0; 8];
        match *self {
            RingPreset::Trivial { q0 } | RingPreset::BigE { q0, .. } => u[0] = q0,
            RingPreset::Shear { q0, v2, hf, .. } => {
                u[0] = q0;
                u[2] = v2;
                u[6] = hf;
            }
            RingPreset::TangentialH { q0, h_fluid, .. } => {
                u[0] = q0;
                u[5] = h_fluid[0];
                u[6] = h_fluid[1];
            }
            RingPreset::Wavy { q0, v3, h3, .. } => {
                u[0] = q0;
                u[3] = v3;
                u[6] = h3;
            }
            RingPreset::Stratified {
                q0,
                q1,
                s1,
                v2,
                h2,
                h3,
                ..
            } => {
                let z = x[0];
                u[0] = q0 + q1 * z.sin();
                u[2] = v2 * (0.5 * z).sin();
                u[5] = h2;
                u[6] = h3 * z.cos();
                u[7] = s1 * (1.0 - (-z * z).exp());
            }
        }
        u
    }

    pub fn vacuum_at(&self, _x: [f64; 3]) -> VacuumVec {
        let mut v = [0.0; 6];
        match *self {
            RingPreset::Trivial { .. } => {}
            RingPreset::Shear { hv, .. } => v[2] = hv,
            RingPreset::BigE { e1, .. } => v[3] = e1,
            RingPreset::TangentialH { h_vac, .. } => {
                v[1] = h_vac[0];
                v[2] = h_vac[1];
            }
            RingPreset::Wavy { hv3, .. } => v[2] = hv3,
            RingPreset::Stratified { e1, hv, .. } => {
                v[1] = hv[0];
                v[2] = hv[1];
                v[3] = e1;
            }
        }
        v
    }

    pub fn phi_at(&self, x2: f64, _x3: f64, l2: f64) -> f64 {
        match *self {
            RingPreset::Wavy {
                amplitude, mode, ..
            } => amplitude * (2.0 * std::f64::consts::PI * mode as f64 * x2 / l2).sin(),
            _ => 0.0,
        }
    }
}

/// Tolerance on the ring's kinematic and electric jump conditions.
pub const ASSEMBLY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct BasicState {
    pub name: String,
    pub eos: EosModel,
    pub params: PhysicsParams,
    pub plus: HalfGrid,
    pub minus: HalfGrid,
    pub u: Field<8>,
    /// Discrete `[d1, d2, d3]` derivatives of the fluid ring.
    pub du: [Field<8>; 3],
    pub v: Field<6>,
    pub dv: [Field<6>; 3],
    pub phi: InterfaceField,
    pub b_ring: Vec<[[f64; 2]; 2]>,
    pub lift_plus: LiftField,
    pub lift_minus: LiftField,
    /// `[d1 q] = d1 q - h . d1 h + E . d1 E` on the interface.
    pub jump_dq: Vec<f64>,
    /// `d1 (v . N)` on the interface.
    pub d1_vn: Vec<f64>,
    /// `d1 (H . N)` and `d1 (h . N)` on the interface.
    pub d1_hn_fluid: Vec<f64>,
    pub d1_hn_vac: Vec<f64>,
    /// Estimated smoothness bound (sum of the three sup-norm scales).
    pub k_bound: f64,
}

impl BasicState {
    pub fn from_preset(
        preset: &RingPreset,
        spec: &GridSpec,
        eos: &EosModel,
        params: &PhysicsParams,
    ) -> Result<Self> {
        let plus = HalfGrid::from_spec(spec, Side::Plus);
        let minus = HalfGrid::from_spec(spec, Side::Minus);
        let u = Field::from_fn(plus, |x| preset.fluid_at(x));
        let v = Field::from_fn(minus, |x| preset.vacuum_at(x));
        let sg = SurfaceGrid::from_spec(spec);
        let phi = InterfaceField::from_fn(sg, |x2, x3| preset.phi_at(x2, x3, spec.l2));
        Self::from_fields(preset.name(), u, v, phi, eos, params)
    }

    pub fn from_fields(
        name: &str,
        u: Field<8>,
        v: Field<6>,
        phi: InterfaceField,
        eos: &EosModel,
        params: &PhysicsParams,
    ) -> Result<Self> {
        params.validate()?;
        eos.validate()?;
        let plus = u.grid;
        let minus = v.grid;
        if plus.side != Side::Plus || minus.side != Side::Minus {
            return Err(Error::Usage("ring fields on the wrong sides".into()));
        }
        if plus.n1 != minus.n1 || plus.h1 != minus.h1 || plus.surf != minus.surf {
            return Err(Error::Usage(
                "fluid and vacuum grids must mirror each other".into(),
            ));
        }
        for (idx, x) in u.data.iter().enumerate() {
            let st = FluidState::from_vec(x);
            if !check_hyperbolicity(&st, eos) {
                let (i1, j2, j3) = plus.coords(idx);
                return Err(Error::Domain(format!(
                    "ring state is not hyperbolic at node ({i1}, {j2}, {j3}): p = {:e}",
                    st.pressure()
                )));
            }
            let ev = [
                params.epsilon * x[1],
                params.epsilon * x[2],
                params.epsilon * x[3],
            ];
            if dot3(&ev, &ev) >= 1.0 {
                return Err(Error::Domain(format!(
                    "|eps v| >= 1 at fluid node {:?}; the vacuum symmetrizer loses positivity",
                    plus.coords(idx)
                )));
            }
        }
        let lift_plus = lift_phi(&phi, &plus, PHI_MAX)?;
        let lift_minus = lift_phi(&phi, &minus, PHI_MAX)?;
        let du = [u.d_normal(), u.d_tan(2)?, u.d_tan(3)?];
        let dv = [v.d_normal(), v.d_tan(2)?, v.d_tan(3)?];

        let sg = plus.surf;
        let mut jump_dq = vec![0.0; sg.len()];
        let mut d1_vn = vec![0.0; sg.len()];
        let mut d1_hn_fluid = vec![0.0; sg.len()];
        let mut d1_hn_vac = vec![0.0; sg.len()];
        let mut worst: f64 = 0.0;
        for k in 0..sg.len() {
            let g = phi.grad_phi()[k];
            let (n, t2, t3) = normal_tangents(g[0], g[1]);
            let uf = u.column(k)[0];
            let vf = v.column(k)[0];
            let d1u = du[0].column(k)[0];
            let d1v = dv[0].column(k)[0];
            let vel = [uf[1], uf[2], uf[3]];
            let e = [vf[3], vf[4], vf[5]];
            // steady ring: dt phi = 0
            worst = worst
                .max(dot3(&vel, &n).abs())
                .max(dot3(&e, &t2).abs())
                .max(dot3(&e, &t3).abs());
            let h = [vf[0], vf[1], vf[2]];
            let dh = [d1v[0], d1v[1], d1v[2]];
            let de = [d1v[3], d1v[4], d1v[5]];
            jump_dq[k] = d1u[0] - dot3(&h, &dh) + dot3(&e, &de);
            d1_vn[k] = dot3(&[d1u[1], d1u[2], d1u[3]], &n);
            d1_hn_fluid[k] = dot3(&[d1u[4], d1u[5], d1u[6]], &n);
            d1_hn_vac[k] = dot3(&dh, &n);
        }
        let scale = 1.0 + u.max_abs() + v.max_abs();
        if worst > ASSEMBLY_TOL * scale {
            return Err(Error::Domain(format!(
                "ring violates the interface conditions (residual {worst:e})"
            )));
        }

        let k_bound = smoothness_bound(&u) + smoothness_bound(&v) + interface_bound(&phi);
        let b_ring = curvature_matrix(&phi);
        Ok(Self {
            name: name.to_string(),
            eos: *eos,
            params: *params,
            plus,
            minus,
            u,
            du,
            v,
            dv,
            phi,
            b_ring,
            lift_plus,
            lift_minus,
            jump_dq,
            d1_vn,
            d1_hn_fluid,
            d1_hn_vac,
            k_bound,
        })
    }

    pub fn fluid_state(&self, idx: usize) -> FluidState {
        FluidState::from_vec(&self.u.data[idx])
    }

    /// `v⁻` at vacuum node `idx`: the fluid velocity at the mirrored node.
    #[inline]
    pub fn v_minus(&self, idx: usize) -> [f64; 3] {
        let u = &self.u.data[idx];
        [u[1], u[2], u[3]]
    }

    pub fn is_flat(&self) -> bool {
        self.phi.max_abs() == 0.0
    }
}

fn smoothness_bound<const N: usize>(f: &Field<N>) -> f64 {
    // sup norms of the field and of its first three derivatives along each axis
    let mut total = f.max_abs();
    for axis in 1..=3 {
        let mut g = f.clone();
        for _ in 0..3 {
            g = g.d_axis(axis).expect("valid axis");
            total = total.max(g.max_abs());
        }
    }
    total
}

fn interface_bound(phi: &InterfaceField) -> f64 {
    let g = *phi.grid();
    let mut total = phi.max_abs();
    for axis in [2, 3] {
        let mut f = phi.phi().to_vec();
        for _ in 0..4 {
            f = g.diff(&f, axis);
            total = total.max(f.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec {
            nx1: 8,
            nx2: 8,
            nx3: 4,
            l1: 4.0,
            l2: 2.0 * std::f64::consts::PI,
            l3: 2.0 * std::f64::consts::PI,
            dt: None,
        }
    }

    fn all_presets() -> Vec<RingPreset> {
        vec![
            RingPreset::Trivial { q0: 1.0 },
            RingPreset::Shear {
                q0: 1.0,
                v2: 0.5,
                hf: 0.3,
                hv: 0.4,
            },
            RingPreset::BigE { q0: 1.0, e1: 0.6 },
            RingPreset::TangentialH {
                q0: 1.0,
                h_fluid: [0.4, 0.2],
                h_vac: [0.1, 0.5],
            },
            RingPreset::Wavy {
                q0: 1.0,
                amplitude: 0.1,
                mode: 1,
                v3: 0.3,
                h3: 0.4,
                hv3: 0.2,
            },
            RingPreset::Stratified {
                q0: 1.0,
                q1: 0.1,
                s1: 0.2,
                v2: 0.3,
                h2: 0.2,
                h3: 0.3,
                e1: 0.2,
                hv: [0.2, 0.1],
            },
        ]
    }

    #[test]
    fn presets_are_admissible() {
        let eos = EosModel::default();
        let params = PhysicsParams::default();
        for p in all_presets() {
            let r = BasicState::from_preset(&p, &spec(), &eos, &params)
                .unwrap_or_else(|e| panic!("{}: {e}", p.name()));
            assert!(r.k_bound.is_finite() && r.k_bound > 0.0);
        }
    }

    #[test]
    fn inadmissible_rings_rejected() {
        let eos = EosModel::default();
        let params = PhysicsParams::default();
        let bad = RingPreset::TangentialH {
            q0: 0.1,
            h_fluid: [1.0, 0.0],
            h_vac: [0.0, 0.0],
        };
        assert!(matches!(
            BasicState::from_preset(&bad, &spec(), &eos, &params),
            Err(Error::Domain(_))
        ));
        let fast = RingPreset::Shear {
            q0: 1.0,
            v2: 5.0,
            hf: 0.0,
            hv: 0.0,
        };
        assert!(BasicState::from_preset(&fast, &spec(), &eos, &params).is_err());
        let steep = RingPreset::Wavy {
            q0: 1.0,
            amplitude: 0.3,
            mode: 1,
            v3: 0.0,
            h3: 0.0,
            hv3: 0.0,
        };
        assert!(BasicState::from_preset(&steep, &spec(), &eos, &params).is_err());
    }

    #[test]
    fn jump_coefficient_for_stratified_pressure() {
        let p = RingPreset::Stratified {
            q0: 1.0,
            q1: 0.1,
            s1: 0.0,
            v2: 0.0,
            h2: 0.0,
            h3: 0.0,
            e1: 0.0,
            hv: [0.0, 0.0],
        };
        let mut s = spec();
        s.nx1 = 64;
        let r = BasicState::from_preset(&p, &s, &EosModel::default(), &PhysicsParams::default())
            .unwrap();
        // d1 q = 0.1 cos(0) = 0.1 up to the one-sided difference error
        assert!((r.jump_dq[0] - 0.1).abs() < 1e-3);
    }

    #[test]
    fn preset_serde_roundtrip() {
        for p in all_presets() {
            let s = toml::to_string(&p).unwrap();
            let back: RingPreset = toml::from_str(&s).unwrap();
            assert_eq!(back, p);
        }
        let p: RingPreset = toml::from_str("preset = \"bigE\"\ne1 = 0.6").unwrap();
        assert_eq!(p, RingPreset::BigE { q0: 1.0, e1: 0.6 });
    }
}
