//! Physical state vectors, the equation of state, and grid specifications.
//!
//! The fluid unknown is packed as `U = (q, v1, v2, v3, H1, H2, H3, S)` and the
//! vacuum unknown as `V = (h1, h2, h3, E1, E2, E3)`. Everything is
//! nondimensional; the only scale left in the vacuum system is `epsilon`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FLUID_DIM: usize = 8;
pub const VACUUM_DIM: usize = 6;

pub type FluidVec = [f64; FLUID_DIM];
pub type VacuumVec = [f64; VACUUM_DIM];

/// Component offsets inside a packed fluid vector.
pub mod idx {
    pub const Q: usize = 0;
    pub const V: usize = 1;
    pub const H: usize = 4;
    pub const S: usize = 7;
    /// Vacuum magnetic field offset.
    pub const VH: usize = 0;
    /// Vacuum electric field offset.
    pub const VE: usize = 3;
}

/// Polytropic equation of state `rho = (p / A(S))^(1/gamma)` with
/// `A(S) = exp(S * entropy_scale)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct EosModel {
    pub gamma: f64,
    pub entropy_scale: f64,
}

impl Default for EosModel {
    fn default() -> Self {
        Self {
            gamma: 5.0 / 3.0,
            entropy_scale: 1.0,
        }
    }
}

/// Thermodynamic quantities at one `(p, S)` point, with the partial
/// derivatives needed by the linearized coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EosPoint {
    pub rho: f64,
    pub sound_speed: f64,
    pub rho_p: f64,
    pub rho_s: f64,
    /// `1 / (rho a^2)`.
    pub inv_rho_a2: f64,
    /// `d/dp (1 / (rho a^2))`; the polytropic law makes this independent of `S`.
    pub inv_rho_a2_p: f64,
}

impl EosModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 1.0) {
            return Err(Error::config("eos.gamma", "gamma must be >= 1"));
        }
        if !self.entropy_scale.is_finite() {
            return Err(Error::config("eos.entropyScale", "must be finite"));
        }
        Ok(())
    }

    pub fn entropy_factor(&self, s: f64) -> f64 {
        (s * self.entropy_scale).exp()
    }

    pub fn eval(&self, p: f64, s: f64) -> Result<EosPoint> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "equation of state needs p > 0, got p = {p:e}"
            )));
        }
        let g = self.gamma;
        let rho = (p / self.entropy_factor(s)).powf(1.0 / g);
        let rho_p = rho / (g * p);
        let rho_s = -rho * self.entropy_scale / g;
        let inv_rho_a2 = 1.0 / (g * p);
        Ok(EosPoint {
            rho,
            sound_speed: (g * p / rho).sqrt(),
            rho_p,
            rho_s,
            inv_rho_a2,
            inv_rho_a2_p: -inv_rho_a2 / p,
        })
    }
}

/// Density and sound speed at `(p, S)`.
pub fn eos_eval(p: f64, s: f64, eos: &EosModel) -> Result<(f64, f64)> {
    let pt = eos.eval(p, s)?;
    Ok((pt.rho, pt.sound_speed))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    /// Total pressure `p + |H|^2 / 2`.
    pub q: f64,
    pub v: [f64; 3],
    #[serde(rename = "H")]
    pub h: [f64; 3],
    #[serde(rename = "S")]
    pub s: f64,
}

impl FluidState {
    pub fn from_vec(u: &FluidVec) -> Self {
        Self {
            q: u[idx::Q],
            v: [u[1], u[2], u[3]],
            h: [u[4], u[5], u[6]],
            s: u[idx::S],
        }
    }

    pub fn to_vec(&self) -> FluidVec {
        [
            self.q, self.v[0], self.v[1], self.v[2], self.h[0], self.h[1], self.h[2], self.s,
        ]
    }

    pub fn pressure(&self) -> f64 {
        self.q - 0.5 * dot3(&self.h, &self.h)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VacuumState {
    pub h: [f64; 3],
    #[serde(rename = "E")]
    pub e: [f64; 3],
}

impl VacuumState {
    pub fn from_vec(v: &VacuumVec) -> Self {
        Self {
            h: [v[0], v[1], v[2]],
            e: [v[3], v[4], v[5]],
        }
    }

    pub fn to_vec(&self) -> VacuumVec {
        [
            self.h[0], self.h[1], self.h[2], self.e[0], self.e[1], self.e[2],
        ]
    }
}

/// Hyperbolicity gate: the derived pressure must be positive (and finite),
/// which under the polytropic law gives `rho > 0` and `rho_p > 0`.
pub fn check_hyperbolicity(u: &FluidState, eos: &EosModel) -> bool {
    let p = u.pressure();
    if !(p > 0.0 && p.is_finite() && u.s.is_finite()) {
        return false;
    }
    match eos.eval(p, u.s) {
        Ok(pt) => pt.rho > 0.0 && pt.rho_p > 0.0 && pt.rho.is_finite(),
        Err(_) => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct PhysicsParams {
    /// Ratio of the fluid speed scale to the speed of light.
    pub epsilon: f64,
    /// Surface-tension coefficient.
    pub sigma_tension: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            epsilon: 0.25,
            sigma_tension: 0.1,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::config("physics.epsilon", "epsilon must be positive"));
        }
        if self.epsilon > 0.5 {
            return Err(Error::config(
                "physics.epsilon",
                "epsilon must not exceed 0.5",
            ));
        }
        if !(self.sigma_tension >= 0.0) || !self.sigma_tension.is_finite() {
            return Err(Error::config(
                "physics.sigmaTension",
                "surface tension must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}

/// Cell counts and extents of the two truncated half-spaces. Both sides share
/// the normal resolution so that the vacuum node at `x1 = -i h1` mirrors the
/// fluid node at `x1 = +i h1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub nx1: usize,
    pub nx2: usize,
    pub nx3: usize,
    #[serde(rename = "L1_length")]
    pub l1: f64,
    #[serde(rename = "L2_length")]
    pub l2: f64,
    #[serde(rename = "L3_length")]
    pub l3: f64,
    /// Time step; `None` lets the solver pick the largest stable one.
    #[serde(rename = "dt_time", default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self {
            nx1: 16,
            nx2: 16,
            nx3: 16,
            l1: 2.0,
            l2: two_pi,
            l3: two_pi,
            dt: None,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("grid.nx1", self.nx1),
            ("grid.nx2", self.nx2),
            ("grid.nx3", self.nx3),
        ] {
            if n < 4 {
                return Err(Error::config(name, "cell counts must be at least 4"));
            }
        }
        for (name, l) in [
            ("grid.L1_length", self.l1),
            ("grid.L2_length", self.l2),
            ("grid.L3_length", self.l3),
        ] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::config(name, "lengths must be positive"));
            }
        }
        if self.l1 <= 1.0 {
            return Err(Error::config(
                "grid.L1_length",
                "the normal extent must exceed the cut-off support (1)",
            ));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::config("grid.dt_time", "time step must be positive"));
            }
        }
        Ok(())
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self {
            nx1: self.nx1 * factor,
            nx2: self.nx2 * factor,
            nx3: self.nx3 * factor,
            dt: self.dt.map(|d| d / factor as f64),
            ..*self
        }
    }

    pub fn h1(&self) -> f64 {
        self.l1 / self.nx1 as f64
    }
    pub fn h2(&self) -> f64 {
        self.l2 / self.nx2 as f64
    }
    pub fn h3(&self) -> f64 {
        self.l3 / self.nx3 as f64
    }
}

#[inline]
pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eos_reference_points() {
        let eos = EosModel::default();
        let (rho, a) = eos_eval(1.0, 0.0, &eos).unwrap();
        assert!((rho - 1.0).abs() < 1e-15);
        assert!((a - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);

        let iso = EosModel {
            gamma: 1.0,
            entropy_scale: 1.0,
        };
        let (rho, a) = eos_eval(1.0, 0.0, &iso).unwrap();
        assert_eq!((rho, a), (1.0, 1.0));
    }

    #[test]
    fn eos_scripted_point() {
        // independent evaluation: rho = (2 / e^0.3)^(3/5), a = sqrt(5/3 * 2 / rho)
        let rho_ref = (2.0f64 / 0.3f64.exp()).powf(0.6);
        let a_ref = (5.0 / 3.0 * 2.0 / rho_ref).sqrt();
        let (rho, a) = eos_eval(2.0, 0.3, &EosModel::default()).unwrap();
        assert!((rho - rho_ref).abs() < 1e-14 * rho_ref);
        assert!((a - a_ref).abs() < 1e-14 * a_ref);
        // a^2 = 1 / rho_p
        let pt = EosModel::default().eval(2.0, 0.3).unwrap();
        assert!((pt.sound_speed.powi(2) * pt.rho_p - 1.0).abs() < 1e-13);
    }

    #[test]
    fn eos_rejects_nonpositive_pressure() {
        assert!(matches!(
            eos_eval(0.0, 0.0, &EosModel::default()),
            Err(Error::Domain(_))
        ));
        assert!(eos_eval(-1.0, 0.0, &EosModel::default()).is_err());
    }

    #[test]
    fn hyperbolicity_gate() {
        let eos = EosModel::default();
        let mut u = FluidState {
            q: 1.0,
            ..Default::default()
        };
        assert!(check_hyperbolicity(&u, &eos));
        u.q = 0.5;
        u.h = [2f64.sqrt(), 0.0, 0.0];
        assert!(!check_hyperbolicity(&u, &eos));
        u.q = 1.0;
        u.h = [(2.0f64 - 1e-12).sqrt(), 0.0, 0.0];
        assert!(check_hyperbolicity(&u, &eos));
    }

    #[test]
    fn params_validation_messages() {
        let p = PhysicsParams {
            epsilon: 0.0,
            sigma_tension: 0.1,
        };
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("epsilon must be positive"), "{err}");
        assert!(PhysicsParams {
            epsilon: 0.1,
            sigma_tension: -1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn density_increases_with_pressure() {
        let eos = EosModel::default();
        let mut last = 0.0;
        for k in 1..200 {
            let (rho, _) = eos_eval(0.05 * k as f64, 0.4, &eos).unwrap();
            assert!(rho > last);
            last = rho;
        }
    }
}
