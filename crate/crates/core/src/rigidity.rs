//! Finite oscillation experiments: laminates for wave-cone-connected pairs,
//! projected two-valued fields for pairs that are not.
//!
//! The rigidity statements concern all generating sequences, so a finite run
//! can only be consistent with them; the report vocabulary says as much.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifted::{lift, State, StateVector, WaveCone, QUADRATIC_PRESSURE};
use crate::torus::{
    afree_projection, afree_residual, empirical_ym, laminate_along, lattice_direction,
    mean_distance, Profile, TorusDims,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityConfig {
    pub lambda: f64,
    pub n_list: Vec<u32>,
    pub grid: usize,
    /// `N × 1 × N` instead of `N³`.
    pub slice: bool,
    /// Floor the projected distance must stay above.
    pub delta0: f64,
    pub profile: Profile,
    /// Candidate oscillation directions have integer entries up to this size.
    pub max_entry: i64,
    pub bins: usize,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        RigidityConfig {
            lambda: 0.5,
            n_list: vec![1, 2, 4, 8, 16],
            grid: 128,
            slice: true,
            delta0: 1e-3,
            profile: Profile::Indicator,
            max_entry: 2,
            bins: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RigidityVerdict {
    OscillationObserved,
    RigidityConsistent,
    Degenerate,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub n: u32,
    /// Residual of the unprojected two-valued field.
    pub afree_residual: f64,
    /// `mean ‖P f − f‖ / ‖z_b − z_a‖`, minimized over candidate directions.
    pub d_n: f64,
    pub direction: [i64; 3],
    /// Empirical masses at segment parameters 0 and 1 of the field that is
    /// `𝒜`-free: the laminate itself, or the projection.
    pub atom_masses: [f64; 2],
    /// `(segment parameter, mass)` of the same field.
    pub histogram: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub pair: [State; 2],
    pub connected: bool,
    pub det: f64,
    pub config: RigidityConfig,
    pub rows: Vec<FrequencyRow>,
    pub verdict: RigidityVerdict,
}

/// Candidate directions, one of each `±k` pair.
fn candidate_directions(dims: TorusDims, max_entry: i64) -> Vec<[i64; 3]> {
    let axes = dims.active_axes();
    let range: Vec<i64> = (-max_entry..=max_entry).collect();
    let mut out = Vec::new();
    let mut push = |k: [i64; 3]| {
        let first = k.iter().find(|&&c| c != 0);
        if matches!(first, Some(&c) if c > 0) {
            out.push(k);
        }
    };
    for &a in &range {
        for &b in &range {
            for &c in &range {
                let k = [a, b, c];
                if (0..3).all(|ax| axes.contains(&ax) || k[ax] == 0) {
                    push(k);
                }
            }
        }
    }
    out
}

pub fn rigidity_experiment(
    pair: (State, State),
    config: &RigidityConfig,
) -> Result<RigidityReport> {
    if !(config.lambda > 0.0 && config.lambda < 1.0) {
        return Err(Error::Domain(format!(
            "lambda = {} must lie in (0, 1)",
            config.lambda
        )));
    }
    if config.n_list.is_empty() || config.n_list.contains(&0) {
        return Err(Error::Config(
            "frequency list must be nonempty and positive".into(),
        ));
    }
    let dims = if config.slice {
        TorusDims::slice(config.grid)?
    } else {
        TorusDims::cube(config.grid)?
    };
    let za = lift(&pair.0, QUADRATIC_PRESSURE)?.to_vector();
    let zb = lift(&pair.1, QUADRATIC_PRESSURE)?.to_vector();
    let cone = WaveCone::default();
    let conn = cone.connected(&pair.0, &pair.1)?;
    let mut report = RigidityReport {
        pair: [pair.0, pair.1],
        connected: conn.connected,
        det: conn.det,
        config: config.clone(),
        rows: Vec::new(),
        verdict: RigidityVerdict::Inconclusive,
    };
    if conn.difference_zero {
        report.rows = config
            .n_list
            .iter()
            .map(|&n| FrequencyRow {
                n,
                afree_residual: 0.0,
                d_n: 0.0,
                direction: [0; 3],
                atom_masses: [1.0, 0.0],
                histogram: vec![[0.0, 1.0]],
            })
            .collect();
        report.verdict = RigidityVerdict::Degenerate;
        return Ok(report);
    }
    let scale = (zb - za).norm();
    let tol_mass = 2.0 / config.grid as f64;
    if conn.connected {
        let xi = cone.direction(&(zb - za)).expect("member has a direction");
        let k = lattice_direction(&xi, 8).ok_or_else(|| {
            Error::Domain(format!("wave direction {xi:?} is not a lattice direction"))
        })?;
        let mut ok = true;
        for &n in &config.n_list {
            let row = examine(&za, &zb, config, dims, n, k, scale)?;
            ok &= row.afree_residual <= 1e-10
                && row.d_n <= 1e-10
                && (row.atom_masses[0] - config.lambda).abs() <= tol_mass
                && (row.atom_masses[1] - (1.0 - config.lambda)).abs() <= tol_mass;
            report.rows.push(row);
        }
        report.verdict = if ok {
            RigidityVerdict::OscillationObserved
        } else {
            RigidityVerdict::Inconclusive
        };
    } else {
        let dirs = candidate_directions(dims, config.max_entry);
        for &n in &config.n_list {
            let rows: Vec<FrequencyRow> = dirs
                .par_iter()
                .map(|&k| examine(&za, &zb, config, dims, n, k, scale))
                .collect::<Result<_>>()?;
            // first minimizer in direction order, for reproducibility
            let best = rows
                .into_iter()
                .reduce(|a, b| if b.d_n < a.d_n { b } else { a })
                .ok_or_else(|| Error::Config("no candidate directions on this grid".into()))?;
            report.rows.push(best);
        }
        let d: Vec<f64> = report.rows.iter().map(|r| r.d_n).collect();
        let above = d.iter().all(|&x| x > config.delta0);
        let trend = d.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
        report.verdict = if above && trend {
            RigidityVerdict::RigidityConsistent
        } else {
            RigidityVerdict::Inconclusive
        };
    }
    Ok(report)
}

fn examine(
    za: &StateVector,
    zb: &StateVector,
    config: &RigidityConfig,
    dims: TorusDims,
    n: u32,
    k: [i64; 3],
    scale: f64,
) -> Result<FrequencyRow> {
    let f = laminate_along(za, zb, config.lambda, n, k, dims, config.profile)?;
    let p = afree_projection(&f)?;
    let d_n = mean_distance(&f, &p) / scale;
    let e = empirical_ym(&p, za, zb, config.bins)?;
    Ok(FrequencyRow {
        n,
        afree_residual: afree_residual(&f),
        d_n,
        direction: k,
        atom_masses: [e.mass_at(0.0), e.mass_at(1.0)],
        histogram: e
            .centers
            .iter()
            .zip(&e.masses)
            .map(|(&c, &m)| [c, m])
            .collect(),
    })
}
