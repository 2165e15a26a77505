//! Pointwise algebra of Euler states and their lifts to the relaxed variables
//! `z = (ρ, m, U, q)`.
//!
//! The relaxed system `∂ₜρ + div m = 0`, `∂ₜm + div U + ∇q = 0` is linear, and
//! a lifted state is stored in the 8-slot layout used by its coefficient
//! matrices:
//!
//! ```text
//! slot:  0  1   2   3    4    5    6    7
//!        ρ  m₁  m₂  U₁₁  U₁₂  U₂₁  U₂₂  q
//! ```
//!
//! `U` is symmetric and trace-free, so slots 5 and 6 are redundant copies
//! (`U₂₁ = U₁₂`, `U₂₂ = −U₁₁`); the operator never reads them.

use nalgebra::{Matrix3, SVector, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of the 8-dimensional relaxed state space.
pub type StateVector = SVector<f64, 8>;

/// The 3×3 "capital letter" matrix `Z` of a lifted state, rows and columns
/// ordered `(t, x₁, x₂)`.
pub type CapitalMatrix = Matrix3<f64>;

/// Adiabatic exponent of the quadratic pressure law `p(ρ) = ρ²`.
pub const QUADRATIC_PRESSURE: f64 = 2.0;

/// A pointwise Euler state: density and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub rho: f64,
    pub u: [f64; 2],
}

impl State {
    pub const fn new(rho: f64, u: [f64; 2]) -> Self {
        State { rho, u }
    }

    pub fn speed_sq(&self) -> f64 {
        self.u[0] * self.u[0] + self.u[1] * self.u[1]
    }

    /// Phase-space coordinate `ξ′ = √ρ u`.
    pub fn xi_prime(&self) -> [f64; 2] {
        let s = self.rho.max(0.0).sqrt();
        [s * self.u[0], s * self.u[1]]
    }
}

/// A state of the relaxed linear system.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LiftedState {
    pub rho: f64,
    pub m: [f64; 2],
    /// `U₁₁`; `U₂₂ = −U₁₁`.
    pub u11: f64,
    /// `U₁₂ = U₂₁`.
    pub u12: f64,
    pub q: f64,
}

impl LiftedState {
    pub const ZERO: LiftedState = LiftedState {
        rho: 0.0,
        m: [0.0, 0.0],
        u11: 0.0,
        u12: 0.0,
        q: 0.0,
    };

    pub fn to_vector(&self) -> StateVector {
        StateVector::from([
            self.rho, self.m[0], self.m[1], self.u11, self.u12, self.u12, -self.u11, self.q,
        ])
    }

    /// Reads slots 0–4 and 7; the redundant `U₂₁`, `U₂₂` slots are ignored.
    pub fn from_vector(v: &StateVector) -> Self {
        LiftedState {
            rho: v[0],
            m: [v[1], v[2]],
            u11: v[3],
            u12: v[4],
            q: v[7],
        }
    }

    /// The full symmetric trace-free `U`.
    pub fn u_matrix(&self) -> [[f64; 2]; 2] {
        [[self.u11, self.u12], [self.u12, -self.u11]]
    }

    /// Velocity `m/ρ`, or `None` at vacuum.
    pub fn velocity(&self) -> Option<[f64; 2]> {
        (self.rho > 0.0).then(|| [self.m[0] / self.rho, self.m[1] / self.rho])
    }

    /// Galilean boost of the momentum flux by `c` in the `x₂` direction.
    ///
    /// The full flux `S = U + qI` maps to `S + c(e₂⊗m + m⊗e₂) + ρc² e₂⊗e₂`;
    /// `U` and `q` are re-read as its trace-free part and half trace.
    pub fn boost_x2(&self, c: f64) -> LiftedState {
        let s11 = self.u11 + self.q;
        let s12 = self.u12 + c * self.m[0];
        let s22 = -self.u11 + self.q + 2.0 * c * self.m[1] + self.rho * c * c;
        LiftedState {
            rho: self.rho,
            m: [self.m[0], self.m[1] + c * self.rho],
            u11: 0.5 * (s11 - s22),
            u12: s12,
            q: 0.5 * (s11 + s22),
        }
    }
}

impl std::ops::Sub for LiftedState {
    type Output = LiftedState;

    fn sub(self, rhs: LiftedState) -> LiftedState {
        LiftedState {
            rho: self.rho - rhs.rho,
            m: [self.m[0] - rhs.m[0], self.m[1] - rhs.m[1]],
            u11: self.u11 - rhs.u11,
            u12: self.u12 - rhs.u12,
            q: self.q - rhs.q,
        }
    }
}

/// The lift `Q_γ(ρ, √ρ u)`.
///
/// With `ξ′ = √ρ u` this is `(ρ, √ρ ξ′, ξ′⊗ξ′ − |ξ′|²/2 I, ρ^γ + |ξ′|²/2)`.
/// Vacuum maps to the zero state whatever the velocity.
pub fn lift(s: &State, gamma: f64) -> Result<LiftedState> {
    if !s.rho.is_finite() || !s.u.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain(format!("non-finite state {s:?}")));
    }
    if s.rho < 0.0 {
        return Err(Error::Domain(format!("negative density rho = {}", s.rho)));
    }
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!(
            "adiabatic exponent gamma = {gamma} must exceed 1"
        )));
    }
    if s.rho == 0.0 {
        return Ok(LiftedState::ZERO);
    }
    let sq = s.rho.sqrt();
    let xi = s.xi_prime();
    let half_sq = 0.5 * (xi[0] * xi[0] + xi[1] * xi[1]);
    Ok(LiftedState {
        rho: s.rho,
        m: [sq * xi[0], sq * xi[1]],
        u11: xi[0] * xi[0] - half_sq,
        u12: xi[0] * xi[1],
        q: s.rho.powf(gamma) + half_sq,
    })
}

pub fn capital_matrix(z: &LiftedState) -> CapitalMatrix {
    Matrix3::new(
        z.rho,
        z.m[0],
        z.m[1],
        z.m[0],
        z.u11 + z.q,
        z.u12,
        z.m[1],
        z.u12,
        -z.u11 + z.q,
    )
}

/// Capital matrix of a raw 8-vector (slots 5 and 6 do not enter).
pub fn capital_matrix_of(v: &StateVector) -> CapitalMatrix {
    capital_matrix(&LiftedState::from_vector(v))
}

/// Closed form of `det(Z − Z̃)` for two lifted `p(ρ) = ρ²` states:
/// `(ρ² − ρ̃²)(−ρρ̃|u − ũ|² + (ρ² − ρ̃²)(ρ − ρ̃))`.
pub fn det_factored(s: &State, t: &State) -> f64 {
    let dr2 = s.rho * s.rho - t.rho * t.rho;
    let du = [s.u[0] - t.u[0], s.u[1] - t.u[1]];
    let du_sq = du[0] * du[0] + du[1] * du[1];
    dr2 * (-s.rho * t.rho * du_sq + dr2 * (s.rho - t.rho))
}

/// Membership test for the wave cone via rank deficiency of the capital matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveCone {
    /// `|det Z| ≤ rel_tol · ‖Z‖_F³` counts as singular.
    pub rel_tol: f64,
}

impl Default for WaveCone {
    fn default() -> Self {
        WaveCone { rel_tol: 1e-9 }
    }
}

/// Outcome of a connectedness test between two states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Connectedness {
    /// The lifted difference vanishes or lies in the wave cone.
    pub connected: bool,
    pub difference_zero: bool,
    /// `det(Z − Z̃)` computed directly.
    pub det: f64,
}

impl Connectedness {
    /// The rigidity hypothesis: a nonzero difference outside the cone.
    pub fn is_rigid_pair(&self) -> bool {
        !self.difference_zero && !self.connected
    }
}

impl WaveCone {
    pub fn new(rel_tol: f64) -> Self {
        WaveCone { rel_tol }
    }

    fn is_singular(&self, z: &CapitalMatrix) -> bool {
        let norm = z.norm();
        z.determinant().abs() <= self.rel_tol * norm * norm * norm
    }

    pub fn member(&self, zbar: &StateVector) -> bool {
        if zbar.iter().all(|&c| c == 0.0) {
            return false;
        }
        self.is_singular(&capital_matrix_of(zbar))
    }

    /// Connectedness of the `γ = 2` lifts of two states.
    pub fn connected(&self, s: &State, t: &State) -> Result<Connectedness> {
        let diff =
            lift(s, QUADRATIC_PRESSURE)?.to_vector() - lift(t, QUADRATIC_PRESSURE)?.to_vector();
        let difference_zero = diff.iter().all(|&c| c == 0.0);
        let det = capital_matrix_of(&diff).determinant();
        Ok(Connectedness {
            connected: difference_zero || self.member(&diff),
            difference_zero,
            det,
        })
    }

    /// A unit `ξ` with `Z̄ξ = 0`, or `None` if `zbar` is not in the cone.
    ///
    /// When the kernel has dimension above one, the projection of the first
    /// standard basis vector with a non-negligible component is returned, so
    /// the choice does not depend on the eigensolver's basis.
    pub fn direction(&self, zbar: &StateVector) -> Option<Vector3<f64>> {
        if !self.member(zbar) {
            return None;
        }
        let z = capital_matrix_of(zbar);
        let scale = z.norm();
        if scale == 0.0 {
            return Some(Vector3::x());
        }
        let eig = SymmetricEigen::new(z);
        let smallest = eig
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(f64::INFINITY, f64::min);
        let cutoff = (1e-9 * scale).max(smallest);
        let basis: Vec<Vector3<f64>> = (0..3)
            .filter(|&i| eig.eigenvalues[i].abs() <= cutoff)
            .map(|i| eig.eigenvectors.column(i).into_owned())
            .collect();
        for e in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let p: Vector3<f64> = basis.iter().map(|b| b * b.dot(&e)).sum();
            if p.norm() > 1e-6 {
                return Some(p.normalize());
            }
        }
        // unreachable for a nonempty orthonormal basis; kept total
        basis.first().map(|b| canonical_sign(b.normalize()))
    }
}

fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    match v.iter().find(|c| c.abs() > 1e-12) {
        Some(&c) if c < 0.0 => -v,
        _ => v,
    }
}

pub fn wave_cone_member(zbar: &StateVector) -> bool {
    WaveCone::default().member(zbar)
}

pub fn wave_cone_connected(s: &State, t: &State) -> Result<Connectedness> {
    WaveCone::default().connected(s, t)
}

pub fn wave_direction(zbar: &StateVector) -> Option<Vector3<f64>> {
    WaveCone::default().direction(zbar)
}
