//! Two-atom (generalized) Young measures over fan-valued or constant state
//! fields: moments, measure-valued residuals and the selection verdict.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fan::{FanRegion, FanSubsolution, ShockDatum};
use crate::lifted::{lift, LiftedState, State, WaveCone, QUADRATIC_PRESSURE};
use crate::weak::{
    matrix_field_residual, weak_entropy_residual, wedge_state, SectorField, TestFunctionSet,
};

/// A state field that a single atom follows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomField {
    Constant(State),
    /// Exact shock states outside the wedge; inside it, oscillating states
    /// with density `ρ₁`, `|u|² = C₁` and lifted mean `z₁`.
    Fan(FanSubsolution),
}

/// What an atom looks like at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomSample {
    Exact(State),
    Oscillatory {
        rho: f64,
        speed_sq: f64,
        mean: LiftedState,
    },
}

impl AtomField {
    pub fn speeds(&self) -> Vec<f64> {
        match self {
            AtomField::Constant(_) => vec![],
            AtomField::Fan(f) => vec![f.nu_minus, f.nu_plus],
        }
    }

    /// Sector index of `(t, x₂)` among [`AtomField::speeds`].
    pub fn sector(&self, t: f64, x2: f64) -> usize {
        match self {
            AtomField::Constant(_) => 0,
            AtomField::Fan(f) => match f.partition().region(t, x2) {
                FanRegion::Minus => 0,
                FanRegion::Wedge => 1,
                FanRegion::Plus => 2,
            },
        }
    }

    pub fn sample(&self, t: f64, x2: f64) -> AtomSample {
        self.sample_sector(self.sector(t, x2))
    }

    fn sample_sector(&self, k: usize) -> AtomSample {
        match self {
            AtomField::Constant(s) => AtomSample::Exact(*s),
            AtomField::Fan(f) => {
                let shock = ShockDatum::standard();
                match k {
                    0 => AtomSample::Exact(shock.minus()),
                    2 => AtomSample::Exact(shock.plus()),
                    _ => AtomSample::Oscillatory {
                        rho: f.rho1,
                        speed_sq: f.c1,
                        mean: wedge_state(f),
                    },
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoAtomYM {
    /// Mass of `atom_a`.
    pub lambda: f64,
    pub atom_a: AtomField,
    pub atom_b: AtomField,
    pub gamma: f64,
}

impl TwoAtomYM {
    pub fn new(lambda: f64, atom_a: AtomField, atom_b: AtomField, gamma: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Domain(format!(
                "lambda = {lambda} must lie in (0, 1)"
            )));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!("gamma = {gamma} must exceed 1")));
        }
        let has_fan = matches!(atom_a, AtomField::Fan(_)) || matches!(atom_b, AtomField::Fan(_));
        if has_fan && gamma != QUADRATIC_PRESSURE {
            return Err(Error::Domain(format!(
                "fan atoms need gamma = 2, got {gamma}"
            )));
        }
        for atom in [&atom_a, &atom_b] {
            match atom {
                AtomField::Constant(s)
                    if !(s.rho >= 0.0
                        && s.rho.is_finite()
                        && s.u.iter().all(|c| c.is_finite())) =>
                {
                    return Err(Error::Domain(format!("atom state {s:?} is not physical")));
                }
                AtomField::Fan(f)
                    if !f.is_finite() || !f.partition().is_valid() || f.rho1 <= 0.0 =>
                {
                    return Err(Error::Domain(format!("fan atom {f:?} is not a valid fan")));
                }
                _ => {}
            }
        }
        Ok(TwoAtomYM {
            lambda,
            atom_a,
            atom_b,
            gamma,
        })
    }

    /// Union of the atoms' rays, sorted.
    pub fn speeds(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .atom_a
            .speeds()
            .into_iter()
            .chain(self.atom_b.speeds())
            .collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }
}

/// A point of the generalized sphere `|β₁|^{2γ} + |β′|⁴ = 1`, `β₁ ≥ 0`, with
/// its probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereAtom {
    pub beta1: f64,
    pub beta_prime: [f64; 2],
    pub weight: f64,
}

/// Concentration measure with spatially uniform density `weight` and angular
/// part given by finitely many sphere atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPart {
    pub weight: f64,
    pub atoms: Vec<SphereAtom>,
}

impl ConcentrationPart {
    pub fn new(weight: f64, atoms: Vec<SphereAtom>, gamma: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::Domain(format!(
                "concentration weight {weight} must be nonnegative"
            )));
        }
        for a in &atoms {
            let bp2 = a.beta_prime[0].powi(2) + a.beta_prime[1].powi(2);
            let sphere = a.beta1.powf(2.0 * gamma) + bp2 * bp2;
            if a.beta1 < 0.0 || (sphere - 1.0).abs() > 1e-12 || a.weight < 0.0 {
                return Err(Error::Domain(format!(
                    "{a:?} is not a weighted point of the generalized sphere"
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if weight > 0.0 && (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "sphere atom weights sum to {total}, not 1"
            )));
        }
        Ok(ConcentrationPart { weight, atoms })
    }

    /// `(m ∫ β′⊗β′, m ∫ β₁^γ)`.
    fn terms(&self, gamma: f64) -> ([[f64; 2]; 2], f64) {
        let mut uu = [[0.0; 2]; 2];
        let mut p = 0.0;
        for a in &self.atoms {
            let w = self.weight * a.weight;
            let b = a.beta_prime;
            for i in 0..2 {
                for j in 0..2 {
                    uu[i][j] += w * b[i] * b[j];
                }
            }
            p += w * a.beta1.powf(gamma);
        }
        (uu, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentFields {
    pub rho_bar: f64,
    pub rho_u_bar: [f64; 2],
    pub rho_uu_bar: [[f64; 2]; 2],
    pub p_rho_bar: f64,
    pub rho_usq_bar: f64,
}

impl MomentFields {
    fn add_scaled(&mut self, w: f64, o: &MomentFields) {
        self.rho_bar += w * o.rho_bar;
        self.p_rho_bar += w * o.p_rho_bar;
        self.rho_usq_bar += w * o.rho_usq_bar;
        for i in 0..2 {
            self.rho_u_bar[i] += w * o.rho_u_bar[i];
            for j in 0..2 {
                self.rho_uu_bar[i][j] += w * o.rho_uu_bar[i][j];
            }
        }
    }

    /// `[[ρ̄, ρu̅ᵀ], [ρu̅, ρu⊗u̅ + p̅ I]]`, the momentum-system analogue of the
    /// capital matrix.
    pub fn flux_matrix(&self) -> Matrix3<f64> {
        let [m1, m2] = self.rho_u_bar;
        let s = self.rho_uu_bar;
        let p = self.p_rho_bar;
        Matrix3::new(
            self.rho_bar,
            m1,
            m2,
            m1,
            s[0][0] + p,
            s[0][1],
            m2,
            s[1][0],
            s[1][1] + p,
        )
    }
}

fn atom_moments(sample: &AtomSample, gamma: f64) -> MomentFields {
    match *sample {
        AtomSample::Exact(s) => {
            let xi = s.xi_prime();
            let pr = s.rho.powf(gamma);
            MomentFields {
                rho_bar: s.rho,
                rho_u_bar: [s.rho * s.u[0], s.rho * s.u[1]],
                rho_uu_bar: [
                    [xi[0] * xi[0], xi[0] * xi[1]],
                    [xi[1] * xi[0], xi[1] * xi[1]],
                ],
                p_rho_bar: pr,
                rho_usq_bar: xi[0] * xi[0] + xi[1] * xi[1],
            }
        }
        AtomSample::Oscillatory { mean: z, .. } => {
            let pr = z.rho.powf(gamma);
            let k = z.q - pr;
            MomentFields {
                rho_bar: z.rho,
                rho_u_bar: z.m,
                rho_uu_bar: [[z.u11 + k, z.u12], [z.u12, -z.u11 + k]],
                p_rho_bar: pr,
                rho_usq_bar: 2.0 * k,
            }
        }
    }
}

/// Energy `½ρ|u|² + ρ^γ/(γ−1)` and `x₂`-flux `(½ρ|u|² + γρ^γ/(γ−1)) u₂` of
/// one atom; in a wedge, `|u|² = C₁` and `u₂` is the mean velocity.
fn atom_energy_flux(sample: &AtomSample, gamma: f64) -> (f64, f64) {
    let (rho, usq, u2) = match *sample {
        AtomSample::Exact(s) => (s.rho, s.speed_sq(), s.u[1]),
        AtomSample::Oscillatory {
            rho,
            speed_sq,
            mean,
        } => (rho, speed_sq, mean.m[1] / rho),
    };
    let kin = 0.5 * rho * usq;
    let pr = rho.powf(gamma);
    (
        kin + pr / (gamma - 1.0),
        (kin + gamma * pr / (gamma - 1.0)) * u2,
    )
}

fn sector_moments(
    ym: &TwoAtomYM,
    conc: Option<&ConcentrationPart>,
    ka: usize,
    kb: usize,
) -> MomentFields {
    let mut m = MomentFields::default();
    m.add_scaled(
        ym.lambda,
        &atom_moments(&ym.atom_a.sample_sector(ka), ym.gamma),
    );
    m.add_scaled(
        1.0 - ym.lambda,
        &atom_moments(&ym.atom_b.sample_sector(kb), ym.gamma),
    );
    if let Some(c) = conc {
        let (uu, p) = c.terms(ym.gamma);
        for i in 0..2 {
            for j in 0..2 {
                m.rho_uu_bar[i][j] += uu[i][j];
            }
        }
        m.p_rho_bar += p;
    }
    m
}

/// Moments at `(t, x)`; the fields do not depend on `x₁`.
pub fn moments(ym: &TwoAtomYM, conc: Option<&ConcentrationPart>, t: f64, x2: f64) -> MomentFields {
    sector_moments(ym, conc, ym.atom_a.sector(t, x2), ym.atom_b.sector(t, x2))
}

/// Sector index pairs of the two atoms, one per sector of the merged rays.
fn sector_pairs(ym: &TwoAtomYM) -> (Vec<f64>, Vec<(usize, usize)>) {
    let speeds = ym.speeds();
    let n = speeds.len();
    let pairs = (0..=n)
        .map(|k| {
            let x2 = match (k, n) {
                (_, 0) => 0.0,
                (0, _) => speeds[0] - 1.0,
                (k, n) if k == n => speeds[n - 1] + 1.0,
                (k, _) => 0.5 * (speeds[k - 1] + speeds[k]),
            };
            (ym.atom_a.sector(1.0, x2), ym.atom_b.sector(1.0, x2))
        })
        .collect();
    (speeds, pairs)
}

pub fn moment_sector_field(
    ym: &TwoAtomYM,
    conc: Option<&ConcentrationPart>,
) -> SectorField<Matrix3<f64>> {
    let (speeds, pairs) = sector_pairs(ym);
    let values = pairs
        .iter()
        .map(|&(a, b)| sector_moments(ym, conc, a, b).flux_matrix())
        .collect();
    SectorField { speeds, values }
}

/// Largest weak-form residual of the averaged mass and momentum equations.
pub fn mvs_residual(
    ym: &TwoAtomYM,
    conc: Option<&ConcentrationPart>,
    tests: &TestFunctionSet,
) -> f64 {
    matrix_field_residual(&moment_sector_field(ym, conc), tests)
}

/// Averaged energy and atomwise-averaged flux per sector. Concentration adds
/// `½ tr(m∫β′⊗β′) + m∫β₁^γ/(γ−1)` to the energy and nothing to the flux.
pub fn energy_sector_field(
    ym: &TwoAtomYM,
    conc: Option<&ConcentrationPart>,
) -> SectorField<(f64, f64)> {
    let (speeds, pairs) = sector_pairs(ym);
    let extra = conc.map_or(0.0, |c| {
        let (uu, p) = c.terms(ym.gamma);
        0.5 * (uu[0][0] + uu[1][1]) + p / (ym.gamma - 1.0)
    });
    let values = pairs
        .iter()
        .map(|&(ka, kb)| {
            let (ea, fa) = atom_energy_flux(&ym.atom_a.sample_sector(ka), ym.gamma);
            let (eb, fb) = atom_energy_flux(&ym.atom_b.sample_sector(kb), ym.gamma);
            let l = ym.lambda;
            (l * ea + (1.0 - l) * eb + extra, l * fa + (1.0 - l) * fb)
        })
        .collect();
    SectorField { speeds, values }
}

/// Most positive violation of the averaged energy inequality over the test set.
pub fn admissibility_residual(
    ym: &TwoAtomYM,
    conc: Option<&ConcentrationPart>,
    tests: &TestFunctionSet,
) -> f64 {
    weak_entropy_residual(&energy_sector_field(ym, conc), tests)
}

/// Cell-centered sample grid on `[t0, t1] × [x2_lo, x2_hi]`, `t0 ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub t_range: (f64, f64),
    pub x2_range: (f64, f64),
    pub nt: usize,
    pub nx2: usize,
}

impl RegionGrid {
    /// `(0, 1] × [lo − 0.5, hi + 0.5]` around the given rays, `64 × 256`.
    pub fn around(speeds: &[f64]) -> Self {
        let lo = speeds.iter().copied().fold(0.0, f64::min);
        let hi = speeds.iter().copied().fold(0.0, f64::max);
        RegionGrid {
            t_range: (0.0, 1.0),
            x2_range: (lo - 0.5, hi + 0.5),
            nt: 64,
            nx2: 256,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (t0, t1) = self.t_range;
        let (x0, x1) = self.x2_range;
        let (dt, dx) = ((t1 - t0) / self.nt as f64, (x1 - x0) / self.nx2 as f64);
        (0..self.nt).flat_map(move |i| {
            (0..self.nx2).map(move |j| (t0 + (i as f64 + 0.5) * dt, x0 + (j as f64 + 0.5) * dx))
        })
    }

    fn validate(&self) -> Result<()> {
        let (t0, t1) = self.t_range;
        let (x0, x1) = self.x2_range;
        if self.nt == 0 || self.nx2 == 0 || !(t0 >= 0.0 && t1 > t0) || !(x1 > x0) {
            return Err(Error::Config(format!("degenerate region grid {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    /// Witness fraction above which the verdict is `NOT_GENERABLE`.
    pub theta: f64,
    /// Velocity angles sampled for each oscillating atom.
    pub angles: usize,
    pub wave_cone: WaveCone,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            theta: 0.01,
            angles: 64,
            wave_cone: WaveCone::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PointClass {
    DifferenceZero,
    Connected,
    /// Nonzero difference outside the wave cone for every sampled state.
    NotConnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Selection {
    NotGenerable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subregion {
    pub t_range: (f64, f64),
    pub x2_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionVerdict {
    pub verdict: Selection,
    pub witness_fraction: f64,
    pub witness_points: usize,
    pub sampled_points: usize,
    /// Bounding box of the witness points.
    pub witness_region: Option<Subregion>,
    pub theta: f64,
}

fn candidate_states(sample: &AtomSample, angles: usize) -> Vec<State> {
    match *sample {
        AtomSample::Exact(s) => vec![s],
        AtomSample::Oscillatory { rho, speed_sq, .. } => {
            let r = speed_sq.max(0.0).sqrt();
            (0..angles)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / angles as f64;
                    State::new(rho, [r * th.cos(), r * th.sin()])
                })
                .collect()
        }
    }
}

/// Classifies one pair of samples. Oscillating atoms are replaced by states
/// at sampled angles; the pair is a witness only if every combination is a
/// nonzero difference outside the cone and `det(Z − Z̃)` keeps one sign, so
/// no combination between the samples can reach the cone either.
pub fn classify(a: &AtomSample, b: &AtomSample, opts: &SelectionOptions) -> Result<PointClass> {
    let sa = candidate_states(a, opts.angles.max(1));
    let sb = candidate_states(b, opts.angles.max(1));
    let mut sign = 0.0;
    let mut all_zero = true;
    for s in &sa {
        for t in &sb {
            let c = opts.wave_cone.connected(s, t)?;
            all_zero &= c.difference_zero;
            if c.connected || c.det == 0.0 {
                if !c.difference_zero {
                    return Ok(PointClass::Connected);
                }
                continue;
            }
            if sign == 0.0 {
                sign = c.det.signum();
            } else if sign != c.det.signum() {
                return Ok(PointClass::Connected);
            }
        }
    }
    if all_zero {
        Ok(PointClass::DifferenceZero)
    } else if sign == 0.0 {
        Ok(PointClass::Connected)
    } else if sa.len() * sb.len() > 1 && has_zero_difference(&sa, &sb) {
        // a zero difference at some angle means the atoms can coincide
        Ok(PointClass::Connected)
    } else {
        Ok(PointClass::NotConnected)
    }
}

fn has_zero_difference(sa: &[State], sb: &[State]) -> bool {
    sa.iter().any(|s| sb.iter().any(|t| s == t))
}

/// Samples the grid and reports `NOT_GENERABLE` when the fraction of points
/// whose two atoms have lifts that differ and are not wave-cone-connected
/// exceeds `theta`.
pub fn selection_verdict(
    ym: &TwoAtomYM,
    grid: &RegionGrid,
    opts: &SelectionOptions,
) -> Result<SelectionVerdict> {
    if !(ym.lambda > 0.0 && ym.lambda < 1.0) {
        return Err(Error::Domain(format!(
            "lambda = {} must lie in (0, 1)",
            ym.lambda
        )));
    }
    grid.validate()?;
    let points: Vec<(f64, f64)> = grid.points().collect();
    let keys: Vec<(usize, usize)> = points
        .iter()
        .map(|&(t, x)| (ym.atom_a.sector(t, x), ym.atom_b.sector(t, x)))
        .collect();
    let mut distinct: Vec<(usize, usize)> = keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let classes: HashMap<(usize, usize), PointClass> = distinct
        .par_iter()
        .map(|&(ka, kb)| {
            let c = classify(
                &ym.atom_a.sample_sector(ka),
                &ym.atom_b.sample_sector(kb),
                opts,
            )?;
            Ok(((ka, kb), c))
        })
        .collect::<Result<_>>()?;

    let mut count = 0;
    let mut bbox: Option<Subregion> = None;
    for (&(t, x), key) in points.iter().zip(&keys) {
        if classes[key] == PointClass::NotConnected {
            count += 1;
            let b = bbox.get_or_insert(Subregion {
                t_range: (t, t),
                x2_range: (x, x),
            });
            b.t_range = (b.t_range.0.min(t), b.t_range.1.max(t));
            b.x2_range = (b.x2_range.0.min(x), b.x2_range.1.max(x));
        }
    }
    let fraction = count as f64 / points.len() as f64;
    Ok(SelectionVerdict {
        verdict: if fraction > opts.theta {
            Selection::NotGenerable
        } else {
            Selection::Inconclusive
        },
        witness_fraction: fraction,
        witness_points: count,
        sampled_points: points.len(),
        witness_region: bbox,
        theta: opts.theta,
    })
}

/// Lifted mean of the measure at a point, `λ z_a + (1 − λ) z_b`.
pub fn barycenter(ym: &TwoAtomYM, t: f64, x2: f64) -> Result<LiftedState> {
    let mean = |s: AtomSample| -> Result<LiftedState> {
        match s {
            AtomSample::Exact(st) => lift(&st, ym.gamma),
            AtomSample::Oscillatory { mean, .. } => Ok(mean),
        }
    };
    let za = mean(ym.atom_a.sample(t, x2))?.to_vector();
    let zb = mean(ym.atom_b.sample(t, x2))?.to_vector();
    Ok(LiftedState::from_vector(
        &(za * ym.lambda + zb * (1.0 - ym.lambda)),
    ))
}
