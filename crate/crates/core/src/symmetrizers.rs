//! Coefficient matrices of the fluid and vacuum systems.
//!
//! Entries are written once, generically over a scalar that is either `f64`
//! or a forward-mode dual number. The dual instantiation gives the exact
//! directional derivative of every entry, which the linearized zero-order
//! coefficients are built from.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Inertia, SymMatrix};
use crate::state::{check_hyperbolicity, dot3, EosModel, FluidState, FluidVec, VacuumVec};

pub type Sym8 = SymMatrix<8>;
pub type Sym6 = SymMatrix<6>;

/// Pointwise derivatives of the lift `Phi = x1 + chi(x1) phi(t, x')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LiftPoint {
    pub dt_phi_lift: f64,
    pub d1_phi: f64,
    pub d2_phi: f64,
    pub d3_phi: f64,
}

impl LiftPoint {
    pub const IDENTITY: LiftPoint = LiftPoint {
        dt_phi_lift: 0.0,
        d1_phi: 1.0,
        d2_phi: 0.0,
        d3_phi: 0.0,
    };

    /// Lift on the interface itself, where `chi = 1` and `chi' = 0`.
    pub fn on_interface(dt_phi: f64, d2: f64, d3: f64) -> Self {
        Self {
            dt_phi_lift: dt_phi,
            d1_phi: 1.0,
            d2_phi: d2,
            d3_phi: d3,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.d1_phi > 0.0) {
            return Err(Error::Domain(format!(
                "degenerate lift: d1Phi = {:e}",
                self.d1_phi
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}
impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}
impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

pub(crate) trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
}

impl Scalar for Dual {
    fn zero() -> Self {
        Dual::new(0.0, 0.0)
    }
    fn one() -> Self {
        Dual::new(1.0, 0.0)
    }
}

/// The scalar inputs of the fluid matrices: `c = 1/(rho a^2)`, `rho`, `v`, `H`.
#[derive(Clone, Copy)]
struct FluidCoef<T> {
    c: T,
    rho: T,
    v: [T; 3],
    h: [T; 3],
}

type Raw8<T> = [[T; 8]; 8];

fn put<T: Scalar>(m: &mut Raw8<T>, i: usize, j: usize, x: T) {
    m[i][j] = x;
    m[j][i] = x;
}

fn raw_a0<T: Scalar>(k: &FluidCoef<T>) -> Raw8<T> {
    let mut m = [[T::zero(); 8]; 8];
    m[0][0] = k.c;
    for a in 0..3 {
        put(&mut m, 0, 4 + a, -(k.c * k.h[a]));
        m[1 + a][1 + a] = k.rho;
        for b in a..3 {
            let mut x = k.c * k.h[a] * k.h[b];
            if a == b {
                x = x + T::one();
            }
            put(&mut m, 4 + a, 4 + b, x);
        }
    }
    m[7][7] = T::one();
    m
}

fn raw_ai<T: Scalar>(k: &FluidCoef<T>, i: usize) -> Raw8<T> {
    let vi = k.v[i];
    let hi = k.h[i];
    let mut m = [[T::zero(); 8]; 8];
    m[0][0] = vi * k.c;
    put(&mut m, 0, 1 + i, T::one());
    for a in 0..3 {
        put(&mut m, 0, 4 + a, -(vi * k.c * k.h[a]));
        m[1 + a][1 + a] = k.rho * vi;
        put(&mut m, 1 + a, 4 + a, -hi);
        for b in a..3 {
            let mut x = vi * k.c * k.h[a] * k.h[b];
            if a == b {
                x = x + vi;
            }
            put(&mut m, 4 + a, 4 + b, x);
        }
    }
    m[7][7] = vi;
    m
}

fn to_sym8(m: &Raw8<f64>) -> Sym8 {
    // raw builders fill both triangles through `put`, so the array is exactly symmetric
    Sym8::try_from_array(*m).expect("fluid matrix builder is symmetric")
}

fn tangent8(m: &Raw8<Dual>) -> Sym8 {
    let a: [[f64; 8]; 8] = std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].d));
    Sym8::try_from_array(a).expect("fluid matrix derivative is symmetric")
}

fn fluid_coef(u: &FluidState, eos: &EosModel) -> Result<FluidCoef<f64>> {
    if !check_hyperbolicity(u, eos) {
        return Err(Error::Domain(format!(
            "non-hyperbolic fluid state: p = {:e}",
            u.pressure()
        )));
    }
    let pt = eos.eval(u.pressure(), u.s)?;
    Ok(FluidCoef {
        c: pt.inv_rho_a2,
        rho: pt.rho,
        v: u.v,
        h: u.h,
    })
}

fn fluid_coef_dual(u: &FluidState, du: &FluidVec, eos: &EosModel) -> Result<FluidCoef<Dual>> {
    if !check_hyperbolicity(u, eos) {
        return Err(Error::Domain(format!(
            "non-hyperbolic fluid state: p = {:e}",
            u.pressure()
        )));
    }
    let p = u.pressure();
    let pt = eos.eval(p, u.s)?;
    let dh = [du[4], du[5], du[6]];
    let dp = du[0] - dot3(&u.h, &dh);
    let ds = du[7];
    Ok(FluidCoef {
        c: Dual::new(pt.inv_rho_a2, pt.inv_rho_a2_p * dp),
        rho: Dual::new(pt.rho, pt.rho_p * dp + pt.rho_s * ds),
        v: std::array::from_fn(|a| Dual::new(u.v[a], du[1 + a])),
        h: std::array::from_fn(|a| Dual::new(u.h[a], dh[a])),
    })
}

fn check_axis(i: usize) -> Result<usize> {
    if (1..=3).contains(&i) {
        Ok(i - 1)
    } else {
        Err(Error::Usage(format!("axis must be 1, 2 or 3, got {i}")))
    }
}

pub fn build_a0(u: &FluidState, eos: &EosModel) -> Result<Sym8> {
    Ok(to_sym8(&raw_a0(&fluid_coef(u, eos)?)))
}

pub fn build_ai(u: &FluidState, eos: &EosModel, axis: usize) -> Result<Sym8> {
    let i = check_axis(axis)?;
    Ok(to_sym8(&raw_ai(&fluid_coef(u, eos)?, i)))
}

/// All four fluid matrices `[A0, A1, A2, A3]` from one EOS evaluation.
pub fn build_fluid_set(u: &FluidState, eos: &EosModel) -> Result<[Sym8; 4]> {
    let k = fluid_coef(u, eos)?;
    Ok([
        to_sym8(&raw_a0(&k)),
        to_sym8(&raw_ai(&k, 0)),
        to_sym8(&raw_ai(&k, 1)),
        to_sym8(&raw_ai(&k, 2)),
    ])
}

/// Directional derivatives `[dA0, dA1, dA2, dA3]` of the fluid matrices at `u`
/// in direction `du`.
pub fn fluid_set_derivative(u: &FluidState, du: &FluidVec, eos: &EosModel) -> Result<[Sym8; 4]> {
    let k = fluid_coef_dual(u, du, eos)?;
    Ok([
        tangent8(&raw_a0(&k)),
        tangent8(&raw_ai(&k, 0)),
        tangent8(&raw_ai(&k, 1)),
        tangent8(&raw_ai(&k, 2)),
    ])
}

/// `(A1 - dtPhi A0 - d2Phi A2 - d3Phi A3) / d1Phi` from precomputed matrices.
pub fn lift_combination<const N: usize>(
    m: &[SymMatrix<N>; 4],
    lift: &LiftPoint,
    time_weight: f64,
) -> SymMatrix<N> {
    m[1].axpy(-lift.dt_phi_lift * time_weight, &m[0])
        .axpy(-lift.d2_phi, &m[2])
        .axpy(-lift.d3_phi, &m[3])
        .scaled(1.0 / lift.d1_phi)
}

pub fn build_boundary_fluid(u: &FluidState, eos: &EosModel, lift: &LiftPoint) -> Result<Sym8> {
    lift.check()?;
    let set = build_fluid_set(u, eos)?;
    Ok(lift_combination(&set, lift, 1.0))
}

fn b_block(j: usize) -> [[f64; 3]; 3] {
    match j {
        0 => [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]],
        1 => [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        _ => [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    }
}

fn raw_bj(j: usize) -> Sym6 {
    let b = b_block(j);
    let mut m = Sym6::zeros();
    for r in 0..3 {
        for c in 0..3 {
            if b[r][c] != 0.0 {
                m.set(r, 3 + c, b[r][c]);
            }
        }
    }
    m
}

/// Constant Maxwell matrices `B_j`, `j = 1, 2, 3`.
pub fn build_bj(axis: usize) -> Result<Sym6> {
    Ok(raw_bj(check_axis(axis)?))
}

/// Maxwell boundary matrix at an interface point,
/// `B1 - eps dtPhi I - d2 phi B2 - d3 phi B3`, with its closed-form eigenvalues
/// `-eps dt phi -/+ sqrt(1 + |grad' phi|^2)` (each double) and `-eps dt phi` (double).
pub fn build_boundary_maxwell(dt_phi: f64, d2: f64, d3: f64, eps: f64) -> (Sym6, [f64; 6]) {
    let m = raw_bj(0)
        .axpy(-eps * dt_phi, &Sym6::identity())
        .axpy(-d2, &raw_bj(1))
        .axpy(-d3, &raw_bj(2));
    let shift = -eps * dt_phi;
    let r = (1.0 + d2 * d2 + d3 * d3).sqrt();
    (
        m,
        [shift - r, shift - r, shift, shift, shift + r, shift + r],
    )
}

/// Secondary symmetrizer matrices `B0(nu) .. B3(nu)` of the Maxwell system
/// (`j = 0` is the time coefficient).
pub fn build_secondary_symmetrizer(nu: &[f64; 3], j: usize) -> Result<Sym6> {
    if j > 3 {
        return Err(Error::Usage(format!(
            "secondary symmetrizer index must be 0..3, got {j}"
        )));
    }
    Ok(secondary(nu, j))
}

pub(crate) fn secondary(nu: &[f64; 3], j: usize) -> Sym6 {
    let [n1, n2, n3] = *nu;
    let rows: [[f64; 6]; 6] = match j {
        0 => [
            [1.0, 0.0, 0.0, 0.0, n3, -n2],
            [0.0, 1.0, 0.0, -n3, 0.0, n1],
            [0.0, 0.0, 1.0, n2, -n1, 0.0],
            [0.0, -n3, n2, 1.0, 0.0, 0.0],
            [n3, 0.0, -n1, 0.0, 1.0, 0.0],
            [-n2, n1, 0.0, 0.0, 0.0, 1.0],
        ],
        1 => [
            [n1, n2, n3, 0.0, 0.0, 0.0],
            [n2, -n1, 0.0, 0.0, 0.0, -1.0],
            [n3, 0.0, -n1, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, n1, n2, n3],
            [0.0, 0.0, 1.0, n2, -n1, 0.0],
            [0.0, -1.0, 0.0, n3, 0.0, -n1],
        ],
        2 => [
            [-n2, n1, 0.0, 0.0, 0.0, 1.0],
            [n1, n2, n3, 0.0, 0.0, 0.0],
            [0.0, n3, -n2, -1.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, -n2, n1, 0.0],
            [0.0, 0.0, 0.0, n1, n2, n3],
            [1.0, 0.0, 0.0, 0.0, n3, -n2],
        ],
        _ => [
            [-n3, 0.0, n1, 0.0, -1.0, 0.0],
            [0.0, -n3, n2, 1.0, 0.0, 0.0],
            [n1, n2, n3, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, -n3, 0.0, n1],
            [-1.0, 0.0, 0.0, 0.0, -n3, n2],
            [0.0, 0.0, 0.0, n1, n2, n3],
        ],
    };
    Sym6::try_from_array(rows).expect("printed secondary matrices are symmetric")
}

/// `[B0(nu), B1(nu), B2(nu), B3(nu)]`.
pub fn secondary_set(nu: &[f64; 3]) -> [Sym6; 4] {
    [
        secondary(nu, 0),
        secondary(nu, 1),
        secondary(nu, 2),
        secondary(nu, 3),
    ]
}

/// The part of the secondary set that is linear in `nu`; since the matrices are
/// affine in `nu`, this is also their derivative in direction `dnu`.
pub fn secondary_set_derivative(dnu: &[f64; 3]) -> [Sym6; 4] {
    let zero = secondary_set(&[0.0; 3]);
    let full = secondary_set(dnu);
    std::array::from_fn(|j| full[j].axpy(-1.0, &zero[j]))
}

/// Lifted secondary boundary matrix with `nu = eps * vMinus`:
/// `(B1(nu) - eps dtPhi B0(nu) - d2Phi B2(nu) - d3Phi B3(nu)) / d1Phi`.
pub fn build_secondary_boundary(v_minus: &[f64; 3], lift: &LiftPoint, eps: f64) -> Result<Sym6> {
    lift.check()?;
    let nu = [eps * v_minus[0], eps * v_minus[1], eps * v_minus[2]];
    Ok(lift_combination(&secondary_set(&nu), lift, eps))
}

/// `B0(nu)` is positive definite exactly when `|nu| < 1`.
pub fn symmetrizer_is_hyperbolic(nu: &[f64; 3]) -> bool {
    dot3(nu, nu) < 1.0
}

pub fn inertia_of<const N: usize>(m: &SymMatrix<N>, zero_tol: Option<f64>) -> Inertia {
    m.inertia(zero_tol)
}

/// Vacuum symmetrizer parameter `nu = eps v` for a velocity (or velocity increment).
pub fn nu_direction(dv: &[f64; 3], eps: f64) -> [f64; 3] {
    [eps * dv[0], eps * dv[1], eps * dv[2]]
}

/// Returns `Ã1 u . u` together with `2 u_q (v . N)`; the two agree on the
/// interface when the kinematic condition holds for the basic state.
pub fn fluid_boundary_form(a1: &Sym8, u: &FluidVec, n: &[f64; 3]) -> (f64, f64) {
    let vn = u[1] * n[0] + u[2] * n[1] + u[3] * n[2];
    (a1.quad(u), 2.0 * u[0] * vn)
}

/// `(1/eps) B1 V . V`, the vacuum half of the boundary quadratic form.
pub fn vacuum_boundary_form(b1: &Sym6, v: &VacuumVec, eps: f64) -> f64 {
    b1.quad(v) / eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::VacuumState;

    fn eos1() -> EosModel {
        EosModel {
            gamma: 1.0,
            entropy_scale: 1.0,
        }
    }

    #[test]
    fn a0_static_blocks() {
        let u = FluidState {
            q: 1.0,
            ..Default::default()
        };
        let a0 = build_a0(&u, &EosModel::default()).unwrap();
        let mut want = [1.0; 8];
        want[0] = 0.6;
        for i in 0..8 {
            for j in 0..8 {
                let w = if i == j { want[i] } else { 0.0 };
                assert!((a0.get(i, j) - w).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn a0_magnetic_coupling_entry() {
        // rho = 1, a = 1 needs p = 1 with gamma = 1; q = p + |H|^2/2
        let u = FluidState {
            q: 1.5,
            h: [1.0, 0.0, 0.0],
            ..Default::default()
        };
        let a0 = build_a0(&u, &eos1()).unwrap();
        assert_eq!(a0.get(0, 4), -1.0);
        assert_eq!(a0.get(4, 4), 2.0);
    }

    #[test]
    fn ai_entries() {
        let u = FluidState {
            q: 1.0,
            ..Default::default()
        };
        let a1 = build_ai(&u, &EosModel::default(), 1).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let w = if (i, j) == (0, 1) || (i, j) == (1, 0) {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(a1.get(i, j), w);
            }
        }
        let u = FluidState {
            q: 1.0,
            v: [1.0, 0.0, 0.0],
            ..Default::default()
        };
        let a1 = build_ai(&u, &eos1(), 1).unwrap();
        assert_eq!(a1.get(0, 0), 1.0);
        assert_eq!(a1.get(1, 1), 1.0);
        assert_eq!(a1.get(7, 7), 1.0);
        assert!(build_ai(&u, &eos1(), 4).is_err());
        assert!(build_ai(&u, &eos1(), 0).is_err());
    }

    #[test]
    fn non_hyperbolic_rejected() {
        let u = FluidState {
            q: 0.5,
            h: [2f64.sqrt(), 0.0, 0.0],
            ..Default::default()
        };
        assert!(matches!(
            build_a0(&u, &EosModel::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn maxwell_matrices() {
        let b1 = build_bj(1).unwrap();
        assert_eq!(b1.get(1, 5), -1.0);
        assert_eq!(b1.get(2, 4), 1.0);
        for j in 1..=3 {
            let b = build_bj(j).unwrap();
            assert!(b.is_exactly_symmetric());
            assert_eq!(b.trace(), 0.0);
            let e = b.eigenvalues();
            let want = [-1.0, -1.0, 0.0, 0.0, 1.0, 1.0];
            for k in 0..6 {
                assert!((e[k] - want[k]).abs() < 1e-14);
            }
            let i = b.inertia(None);
            assert_eq!((i.n_neg, i.n_zero, i.n_pos), (2, 2, 2));
        }
    }

    #[test]
    fn boundary_maxwell_reference_points() {
        let (_, e) = build_boundary_maxwell(0.0, 0.0, 0.0, 0.1);
        assert_eq!(e, [-1.0, -1.0, 0.0, 0.0, 1.0, 1.0]);
        let (m, e) = build_boundary_maxwell(-1.0, 0.75, 0.0, 0.1);
        let want = [-1.15, -1.15, 0.1, 0.1, 1.35, 1.35];
        let num = m.eigenvalues();
        for k in 0..6 {
            assert!((e[k] - want[k]).abs() < 1e-14);
            assert!((num[k] - want[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn secondary_reduces_to_maxwell() {
        let z = [0.0; 3];
        assert_eq!(secondary(&z, 0), Sym6::identity());
        for j in 1..=3 {
            assert_eq!(secondary(&z, j), build_bj(j).unwrap());
        }
        assert!(build_secondary_symmetrizer(&z, 4).is_err());
    }

    #[test]
    fn secondary_b0_spectrum() {
        let nu = [0.3, 0.0, 0.4];
        let e = secondary(&nu, 0).eigenvalues();
        let want = [0.5, 0.5, 1.0, 1.0, 1.5, 1.5];
        for k in 0..6 {
            assert!((e[k] - want[k]).abs() < 1e-13);
        }
        let nu = [1.001, 0.0, 0.0];
        assert!(secondary(&nu, 0).min_eigenvalue() <= 0.0);
    }

    #[test]
    fn secondary_boundary_flat() {
        let b = build_secondary_boundary(&[0.0; 3], &LiftPoint::IDENTITY, 0.0).unwrap();
        let e = b.eigenvalues();
        let want = [-1.0, -1.0, 0.0, 0.0, 1.0, 1.0];
        for k in 0..6 {
            assert!((e[k] - want[k]).abs() < 1e-14);
        }
        let bad = LiftPoint {
            d1_phi: 0.0,
            ..LiftPoint::IDENTITY
        };
        assert!(build_secondary_boundary(&[0.0; 3], &bad, 0.1).is_err());
        assert!(build_boundary_fluid(
            &FluidState {
                q: 1.0,
                ..Default::default()
            },
            &eos1(),
            &bad
        )
        .is_err());
    }

    #[test]
    fn identity_lift_gives_a1() {
        let u = FluidState {
            q: 2.0,
            v: [0.1, -0.2, 0.3],
            h: [0.5, 0.2, -0.1],
            s: 0.2,
        };
        let eos = EosModel::default();
        let a1 = build_ai(&u, &eos, 1).unwrap();
        let at = build_boundary_fluid(&u, &eos, &LiftPoint::IDENTITY).unwrap();
        assert_eq!(a1, at);
    }

    #[test]
    fn dual_derivative_matches_difference_quotient() {
        let u = FluidState {
            q: 2.0,
            v: [0.1, -0.2, 0.3],
            h: [0.5, 0.2, -0.1],
            s: 0.2,
        };
        let du = [0.3, -0.1, 0.2, 0.05, 0.4, -0.3, 0.1, 0.7];
        let eos = EosModel::default();
        let d = fluid_set_derivative(&u, &du, &eos).unwrap();
        let base = build_fluid_set(&u, &eos).unwrap();
        let mut errs = Vec::new();
        for th in [1e-2, 1e-3, 1e-4] {
            let mut v = u.to_vec();
            for k in 0..8 {
                v[k] += th * du[k];
            }
            let pert = build_fluid_set(&FluidState::from_vec(&v), &eos).unwrap();
            let mut e = 0.0f64;
            for m in 0..4 {
                let fd = pert[m].axpy(-1.0, &base[m]).scaled(1.0 / th);
                e = e.max(fd.axpy(-1.0, &d[m]).max_abs());
            }
            errs.push(e);
        }
        assert!(
            errs[0] / errs[1] > 8.0 && errs[1] / errs[2] > 8.0,
            "{errs:?}"
        );
    }

    #[test]
    fn vacuum_form_helper() {
        let b1 = build_bj(1).unwrap();
        let v = VacuumState {
            h: [0.0, 1.0, 0.0],
            e: [0.0, 0.0, 1.0],
        }
        .to_vec();
        // B1 V . V = 2 (h2 (-E3) + h3 E2)
        assert_eq!(vacuum_boundary_form(&b1, &v, 0.5), -4.0);
    }
}
