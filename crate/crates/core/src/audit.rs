//! Randomized audit of the coefficient matrices: symmetry, definiteness and
//! the spectral signatures of the boundary matrices on the interface.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Inertia, SymMatrix};
use crate::state::{check_hyperbolicity, dot3, EosModel, FluidState};
use crate::symmetrizers::{
    build_a0, build_ai, build_boundary_fluid, build_boundary_maxwell, build_bj,
    build_secondary_boundary, build_secondary_symmetrizer, fluid_boundary_form, LiftPoint,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct AuditSettings {
    pub samples: usize,
    pub nu_magnitudes: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            samples: 1000,
            nu_magnitudes: vec![0.9, 0.99, 1.01],
            epsilons: vec![0.01, 0.05, 0.1],
        }
    }
}

impl AuditSettings {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::config("audit.samples", "must be positive"));
        }
        if self.nu_magnitudes.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return Err(Error::config("audit.nuMagnitudes", "must be finite and nonnegative"));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e <= 0.5)) {
            return Err(Error::config("audit.epsilons", "must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NuCheck {
    pub magnitude: f64,
    pub expected_spd: bool,
    pub spd_count: usize,
    pub mismatches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KernelCheck {
    pub epsilon: f64,
    pub min_zero_count: usize,
    pub max_zero_count: usize,
    /// Samples whose inertia differs from (2, 2, 2).
    pub inertia_mismatches: usize,
    pub max_zero_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditReport {
    pub samples: usize,
    pub matrices_checked: usize,
    pub asymmetric: usize,
    pub a0_not_spd: usize,
    pub min_a0_eigenvalue: f64,
    pub nu_checks: Vec<NuCheck>,
    /// Largest gap between the closed-form and numeric eigenvalues of the
    /// Maxwell boundary matrix.
    pub maxwell_eig_max_err: f64,
    pub fluid_inertia_mismatches: usize,
    /// Largest relative gap between `Ã1 u . u` and `2 u_q u_vN`.
    pub fluid_form_max_err: f64,
    pub kernel_checks: Vec<KernelCheck>,
}

impl AuditReport {
    pub fn symmetry_ok(&self) -> bool {
        self.asymmetric == 0 && self.a0_not_spd == 0 && self.nu_checks.iter().all(|c| c.mismatches == 0)
    }

    pub fn spectra_ok(&self) -> bool {
        self.maxwell_eig_max_err <= 1e-10
            && self.fluid_inertia_mismatches == 0
            && self.fluid_form_max_err <= 1e-10
            && self
                .kernel_checks
                .iter()
                .all(|k| k.min_zero_count == 2 && k.max_zero_count == 2)
    }
}

fn bitwise_symmetric<const N: usize>(m: &SymMatrix<N>) -> bool {
    let a = m.as_array();
    (0..N).all(|i| (0..i).all(|j| a[i][j].to_bits() == a[j][i].to_bits()))
}

/// Eigenvalues from an eigensolver independent of [`SymMatrix::eigenvalues`].
fn reference_eigenvalues<const N: usize>(m: &SymMatrix<N>) -> Result<Vec<f64>> {
    let a = m.as_array();
    let mat = Mat::<f64>::from_fn(N, N, |i, j| a[i][j]);
    let mut v = mat
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let x = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = dot3(&x, &x).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return [x[0] / n, x[1] / n, x[2] / n];
        }
    }
}

/// Random state with positive gas pressure.
pub fn random_fluid_state(rng: &mut ChaCha8Rng) -> FluidState {
    let h = [
        rng.gen_range(-1.5..1.5),
        rng.gen_range(-1.5..1.5),
        rng.gen_range(-1.5..1.5),
    ];
    let p: f64 = rng.gen_range(0.05..4.0);
    FluidState {
        q: p + 0.5 * dot3(&h, &h),
        v: [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ],
        h,
        s: rng.gen_range(-1.0..1.0),
    }
}

fn random_lift(rng: &mut ChaCha8Rng) -> LiftPoint {
    LiftPoint {
        dt_phi_lift: rng.gen_range(-1.0..1.0),
        d1_phi: rng.gen_range(0.5..2.0),
        d2_phi: rng.gen_range(-1.0..1.0),
        d3_phi: rng.gen_range(-1.0..1.0),
    }
}

pub fn matrix_audit(eos: &EosModel, settings: &AuditSettings, seed: u64) -> Result<AuditReport> {
    settings.validate()?;
    eos.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut asym = 0;
    let mut a0_bad = 0;
    let mut min_a0 = f64::INFINITY;
    let mut tally = |ok: bool| {
        checked += 1;
        if !ok {
            asym += 1;
        }
    };
    for j in 1..=3 {
        tally(bitwise_symmetric(&build_bj(j)?));
    }
    let mut nu_checks: Vec<NuCheck> = settings
        .nu_magnitudes
        .iter()
        .map(|&m| NuCheck {
            magnitude: m,
            expected_spd: m < 1.0,
            spd_count: 0,
            mismatches: 0,
        })
        .collect();
    let mut maxwell_err: f64 = 0.0;
    for _ in 0..settings.samples {
        let u = random_fluid_state(&mut rng);
        if !check_hyperbolicity(&u, eos) {
            return Err(Error::Domain("audit generated a non-hyperbolic state".into()));
        }
        let a0 = build_a0(&u, eos)?;
        tally(bitwise_symmetric(&a0));
        let lam = a0.min_eigenvalue();
        min_a0 = min_a0.min(lam);
        if !(lam > 0.0) {
            a0_bad += 1;
        }
        for axis in 1..=3 {
            tally(bitwise_symmetric(&build_ai(&u, eos, axis)?));
        }
        let lift = random_lift(&mut rng);
        tally(bitwise_symmetric(&build_boundary_fluid(&u, eos, &lift)?));

        let dir = unit_vector(&mut rng);
        let inside: f64 = rng.gen_range(0.0..0.999);
        let nu = [inside * dir[0], inside * dir[1], inside * dir[2]];
        for j in 0..4 {
            tally(bitwise_symmetric(&build_secondary_symmetrizer(&nu, j)?));
        }
        let eps: f64 = rng.gen_range(0.01..0.5);
        let vm = [nu[0] / eps, nu[1] / eps, nu[2] / eps];
        tally(bitwise_symmetric(&build_secondary_boundary(&vm, &lift, eps)?));

        for c in nu_checks.iter_mut() {
            let nu = [c.magnitude * dir[0], c.magnitude * dir[1], c.magnitude * dir[2]];
            let b0 = build_secondary_symmetrizer(&nu, 0)?;
            let spd = b0.min_eigenvalue() > 0.0;
            if spd {
                c.spd_count += 1;
            }
            if spd != c.expected_spd {
                c.mismatches += 1;
            }
        }

        let (m, closed) = build_boundary_maxwell(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            eps,
        );
        tally(bitwise_symmetric(&m));
        let mut closed = closed.to_vec();
        closed.sort_by(f64::total_cmp);
        for (a, b) in closed.iter().zip(reference_eigenvalues(&m)?) {
            maxwell_err = maxwell_err.max((a - b).abs());
        }
    }

    let (fluid_inertia_mismatches, fluid_form_max_err) = fluid_signature(&mut rng, eos, settings.samples)?;
    let kernel_checks = settings
        .epsilons
        .iter()
        .map(|&eps| vacuum_kernel(&mut rng, eps, settings.samples))
        .collect::<Result<Vec<_>>>()?;

    Ok(AuditReport {
        samples: settings.samples,
        matrices_checked: checked,
        asymmetric: asym,
        a0_not_spd: a0_bad,
        min_a0_eigenvalue: min_a0,
        nu_checks,
        maxwell_eig_max_err: maxwell_err,
        fluid_inertia_mismatches,
        fluid_form_max_err,
        kernel_checks,
    })
}

/// `Ã1` at interface points where the state satisfies the kinematic
/// condition and `H . N = 0`.
fn fluid_signature(rng: &mut ChaCha8Rng, eos: &EosModel, samples: usize) -> Result<(usize, f64)> {
    let want = Inertia {
        n_neg: 1,
        n_zero: 6,
        n_pos: 1,
    };
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut u = random_fluid_state(rng);
        let g = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = [1.0, -g[0], -g[1]];
        let nn = dot3(&n, &n);
        let hn = dot3(&u.h, &n) / nn;
        for c in 0..3 {
            u.h[c] -= hn * n[c];
        }
        let p: f64 = rng.gen_range(0.05..4.0);
        u.q = p + 0.5 * dot3(&u.h, &u.h);
        let lift = LiftPoint::on_interface(dot3(&u.v, &n), g[0], g[1]);
        let a1 = build_boundary_fluid(&u, eos, &lift)?;
        if a1.inertia(None) != want {
            mismatches += 1;
        }
        let w: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let (quad, expected) = fluid_boundary_form(&a1, &w, &n);
        let scale = 1.0 + expected.abs();
        worst = worst.max((quad - expected).abs() / scale);
    }
    Ok((mismatches, worst))
}

/// Lifted vacuum boundary matrix on the interface with `nu = eps v` and the
/// kinematic condition `dt phi = v . N`.
fn vacuum_kernel(rng: &mut ChaCha8Rng, eps: f64, samples: usize) -> Result<KernelCheck> {
    let want = Inertia {
        n_neg: 2,
        n_zero: 2,
        n_pos: 2,
    };
    let mut out = KernelCheck {
        epsilon: eps,
        min_zero_count: usize::MAX,
        max_zero_count: 0,
        inertia_mismatches: 0,
        max_zero_eigenvalue: 0.0,
    };
    for _ in 0..samples {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let g = [rng.gen_range(-0.25..0.25), rng.gen_range(-0.25..0.25)];
        let n = [1.0, -g[0], -g[1]];
        let lift = LiftPoint::on_interface(dot3(&v, &n), g[0], g[1]);
        let b1 = build_secondary_boundary(&v, &lift, eps)?;
        let vals = b1.eigenvalues();
        let zeros: Vec<f64> = vals.iter().copied().filter(|x| x.abs() < 1e-10).collect();
        out.min_zero_count = out.min_zero_count.min(zeros.len());
        out.max_zero_count = out.max_zero_count.max(zeros.len());
        if let Some(m) = zeros.iter().map(|x| x.abs()).reduce(f64::max) {
            out.max_zero_eigenvalue = out.max_zero_eigenvalue.max(m);
        }
        if b1.inertia(None) != want {
            out.inertia_mismatches += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_audit_passes() {
        let s = AuditSettings {
            samples: 50,
            ..Default::default()
        };
        let r = matrix_audit(&EosModel::default(), &s, 3).unwrap();
        assert!(r.symmetry_ok(), "{r:?}");
        assert!(r.spectra_ok(), "{r:?}");
        assert_eq!(r.nu_checks[2].spd_count, 0);
        assert_eq!(r.nu_checks[0].spd_count, 50);
    }

    #[test]
    fn audit_is_seeded() {
        let s = AuditSettings {
            samples: 20,
            ..Default::default()
        };
        let a = matrix_audit(&EosModel::default(), &s, 9).unwrap();
        let b = matrix_audit(&EosModel::default(), &s, 9).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn rejects_bad_settings() {
        let s = AuditSettings {
            epsilons: vec![0.0],
            ..Default::default()
        };
        assert!(matrix_audit(&EosModel::default(), &s, 0).is_err());
    }
}
