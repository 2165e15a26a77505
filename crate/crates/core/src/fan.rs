//! Admissible fan subsolutions for the shock
//! `(ρ₋, u₋) = (1, (−1/4, 2√2))`, `(ρ₊, u₊) = (4, (−1/4, 0))` with `p(ρ) = ρ²`.
//!
//! A fan subsolution is piecewise constant on `P₋ = {x₂ < ν₋t}`,
//! `P₁ = {ν₋t < x₂ < ν₊t}` and `P₊ = {x₂ > ν₊t}`: the exact shock states
//! outside, and `(ρ₁, u₁ = (α, β), w₁ = [[γ, δ], [δ, −γ]])` with kinetic
//! level `C₁` inside the wedge. It is admissible iff six jump equalities,
//! two strict subsolution inequalities and two entropy jump inequalities hold;
//! [`check_conditions`] evaluates all ten.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifted::State;

pub const RHO_MINUS: f64 = 1.0;
pub const RHO_PLUS: f64 = 4.0;

/// The outer states of the shock, fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockDatum {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub u_minus: [f64; 2],
    pub u_plus: [f64; 2],
}

impl ShockDatum {
    pub fn standard() -> Self {
        ShockDatum {
            rho_minus: RHO_MINUS,
            rho_plus: RHO_PLUS,
            u_minus: [
                -1.0 / RHO_PLUS,
                2.0 * SQRT_2 * (RHO_PLUS.sqrt() - RHO_MINUS.sqrt()),
            ],
            u_plus: [-1.0 / RHO_PLUS, 0.0],
        }
    }

    pub fn minus(&self) -> State {
        State::new(self.rho_minus, self.u_minus)
    }

    pub fn plus(&self) -> State {
        State::new(self.rho_plus, self.u_plus)
    }
}

/// Interface speeds of a fan; `P₁ = {ν₋t < x₂ < ν₊t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanPartition {
    pub nu_minus: f64,
    pub nu_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FanRegion {
    Minus,
    Wedge,
    Plus,
}

impl FanPartition {
    pub fn is_valid(&self) -> bool {
        self.nu_minus < self.nu_plus
    }

    /// Region containing `(t, x₂)`, `t > 0`. Points on an interface (a null
    /// set) are assigned to the wedge.
    pub fn region(&self, t: f64, x2: f64) -> FanRegion {
        if x2 < self.nu_minus * t {
            FanRegion::Minus
        } else if x2 > self.nu_plus * t {
            FanRegion::Plus
        } else {
            FanRegion::Wedge
        }
    }
}

/// Parameters of a fan subsolution. Field names follow the scenario schema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanSubsolution {
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub rho1: f64,
    /// `u₁ = (alpha, beta)`
    pub alpha: f64,
    pub beta: f64,
    /// `w₁ = [[gamma, delta], [delta, −gamma]]`
    pub gamma: f64,
    pub delta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
}

impl FanSubsolution {
    pub fn partition(&self) -> FanPartition {
        FanPartition {
            nu_minus: self.nu_minus,
            nu_plus: self.nu_plus,
        }
    }

    pub fn u1(&self) -> [f64; 2] {
        [self.alpha, self.beta]
    }

    pub fn w1(&self) -> [[f64; 2]; 2] {
        [[self.gamma, self.delta], [self.delta, -self.gamma]]
    }

    fn values(&self) -> [f64; 8] {
        [
            self.nu_minus,
            self.nu_plus,
            self.rho1,
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.c1,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Relative tolerance used to compare the two sides of an exact relation:
/// `|lhs − rhs| ≤ rel · (1 + |lhs| + |rhs|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionTolerance {
    pub rel: f64,
}

impl Default for ConditionTolerance {
    fn default() -> Self {
        ConditionTolerance { rel: 1e-10 }
    }
}

impl ConditionTolerance {
    fn bound(&self, scale: f64) -> f64 {
        self.rel * (1.0 + scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityCheck {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`
    pub residual: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub label: String,
    /// Positive means satisfied.
    pub margin: f64,
    pub strict: bool,
    pub tolerance: f64,
    pub ok: bool,
}

/// Result of evaluating the ten conditions on a fan subsolution.
///
/// A strict inequality needs `margin > tolerance`; a non-strict one accepts
/// `margin ≥ −tolerance`. Margins within tolerance of zero are therefore
/// treated as equalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub equalities: Vec<EqualityCheck>,
    pub inequalities: Vec<InequalityCheck>,
    pub overall: bool,
}

impl ConditionReport {
    pub fn violated(&self) -> Vec<String> {
        self.equalities
            .iter()
            .filter(|e| !e.ok)
            .map(|e| e.label.clone())
            .chain(
                self.inequalities
                    .iter()
                    .filter(|i| !i.ok)
                    .map(|i| i.label.clone()),
            )
            .collect()
    }

    pub fn max_equality_residual(&self) -> f64 {
        self.equalities
            .iter()
            .map(|e| e.residual.abs())
            .fold(0.0, f64::max)
    }

    pub fn min_strict_margin(&self) -> f64 {
        self.inequalities
            .iter()
            .filter(|i| i.strict)
            .map(|i| i.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn admissibility_margins(&self) -> [f64; 2] {
        [self.inequalities[2].margin, self.inequalities[3].margin]
    }
}

pub const EQUALITY_LABELS: [&str; 6] = [
    "mass jump at nu_-",
    "x1-momentum jump at nu_-",
    "x2-momentum jump at nu_-",
    "mass jump at nu_+",
    "x1-momentum jump at nu_+",
    "x2-momentum jump at nu_+",
];

pub const INEQUALITY_LABELS: [&str; 4] = [
    "kinetic bound alpha^2+beta^2 < C1",
    "subsolution determinant > 0",
    "entropy inequality at nu_-",
    "entropy inequality at nu_+",
];

pub fn check_conditions(f: &FanSubsolution) -> Result<ConditionReport> {
    check_conditions_with(f, ConditionTolerance::default())
}

pub fn check_conditions_with(
    f: &FanSubsolution,
    tol: ConditionTolerance,
) -> Result<ConditionReport> {
    if !f.is_finite() {
        return Err(Error::Domain(format!("non-finite fan parameters {f:?}")));
    }
    let FanSubsolution {
        nu_minus: nm,
        nu_plus: np,
        rho1: r,
        alpha: a,
        beta: b,
        gamma: g,
        delta: d,
        c1: c,
    } = *f;
    let s2 = SQRT_2;
    // ρ₋|u₋|² and ρ₊|u₊|²
    let e_minus = 1.0 / 16.0 + 8.0;
    let e_plus_half = 1.0 / 8.0;

    let sides = [
        (nm * (1.0 - r), 2.0 * s2 - r * b),
        (nm * (-0.25 - r * a), -1.0 / s2 - r * d),
        (
            nm * (2.0 * s2 - r * b),
            8.0 + r * g + 1.0 - r * r - r * c / 2.0,
        ),
        (np * (r - 4.0), r * b - 0.0),
        (np * (r * a - (-1.0)), r * d - 0.0),
        (
            np * (r * b - 0.0),
            -r * g - 0.0 + r * r - 16.0 + r * c / 2.0,
        ),
    ];
    let equalities = sides
        .iter()
        .zip(EQUALITY_LABELS)
        .map(|(&(lhs, rhs), label)| {
            let residual = lhs - rhs;
            let tolerance = tol.bound(lhs.abs() + rhs.abs());
            EqualityCheck {
                label: label.into(),
                lhs,
                rhs,
                residual,
                tolerance,
                ok: residual.abs() <= tolerance,
            }
        })
        .collect();

    let pd_a = c / 2.0 - a * a + g;
    let pd_b = c / 2.0 - b * b - g;
    let off = d - a * b;

    let adm_minus_lhs = nm * (1.0 - r * r) + nm * (e_minus / 2.0 - r * c / 2.0);
    let adm_minus_rhs =
        (1.0 + 1.0) * 2.0 * s2 - (r * r + r * r) * b + s2 * e_minus - r * b * c / 2.0;
    let adm_plus_lhs = np * (r * r - 16.0) + np * (r * c / 2.0 - e_plus_half);
    let adm_plus_rhs = (r * r + r * r) * b - 0.0 + r * b * c / 2.0 - 0.0;

    let ineq = [
        (c - a * a - b * b, true, c.abs() + a * a + b * b),
        (
            pd_a * pd_b - off * off,
            true,
            (pd_a * pd_b).abs() + off * off,
        ),
        (
            adm_minus_rhs - adm_minus_lhs,
            false,
            adm_minus_lhs.abs() + adm_minus_rhs.abs(),
        ),
        (
            adm_plus_rhs - adm_plus_lhs,
            false,
            adm_plus_lhs.abs() + adm_plus_rhs.abs(),
        ),
    ];
    let inequalities: Vec<InequalityCheck> = ineq
        .iter()
        .zip(INEQUALITY_LABELS)
        .map(|(&(margin, strict, scale), label)| {
            let tolerance = tol.bound(scale);
            let ok = if strict {
                margin > tolerance
            } else {
                margin >= -tolerance
            };
            InequalityCheck {
                label: label.into(),
                margin,
                strict,
                tolerance,
                ok,
            }
        })
        .collect();

    let mut report = ConditionReport {
        equalities,
        inequalities,
        overall: false,
    };
    report.overall = f.partition().is_valid() && report.violated().is_empty();
    Ok(report)
}

/// Left end of the baseline `C₁` range (open).
pub const BASELINE_C1_MIN: f64 = 9049.0 / 1680.0;

/// The baseline choice `β = δ = ν₊ = 0`, which forces `α = −1/4`,
/// `ν₋ = −7/(2√2)`, `ρ₁ = 15/7` and `γ = C₁/2 − 559/105`.
pub fn baseline_family(c1: f64) -> Result<FanSubsolution> {
    let f = baseline_unchecked(c1);
    require_admissible(f, "C1", c1)
}

/// The baseline closed forms without any admissibility check.
pub fn baseline_unchecked(c1: f64) -> FanSubsolution {
    FanSubsolution {
        nu_minus: -7.0 / (2.0 * SQRT_2),
        nu_plus: 0.0,
        rho1: 15.0 / 7.0,
        alpha: -0.25,
        beta: 0.0,
        gamma: c1 / 2.0 - 559.0 / 105.0,
        delta: 0.0,
        c1,
    }
}

fn require_admissible(
    f: FanSubsolution,
    value_name: &'static str,
    value: f64,
) -> Result<FanSubsolution> {
    let report = check_conditions(&f)?;
    if report.overall {
        Ok(f)
    } else {
        let mut violated = report.violated();
        if !f.partition().is_valid() {
            violated.push("nu_- < nu_+".into());
        }
        Err(Error::Range {
            value_name,
            value,
            violated,
        })
    }
}

/// Lower end of the perturbation range, `−2√2/3`.
pub const ETA_MIN: f64 = -2.0 * SQRT_2 / 3.0;

/// The perturbed family with `α̃ = −1/4`, `ν̃₊ = η`, `η ∈ (−2√2/3, 0)`.
pub fn perturbed_family(eta: f64, c1: f64) -> Result<FanSubsolution> {
    if !(eta > ETA_MIN && eta < 0.0) {
        return Err(Error::Domain(format!(
            "eta = {eta} outside (-2*sqrt(2)/3, 0)"
        )));
    }
    require_admissible(perturbed_unchecked(eta, c1), "C1_tilde", c1)
}

/// Closed forms of the perturbed family; at `η = 0` they reduce to the
/// baseline.
pub fn perturbed_unchecked(eta: f64, c1: f64) -> FanSubsolution {
    let s2 = SQRT_2;
    let rho1 =
        (15.0 + 16.0 * s2 * eta + 12.0 * eta * eta) / (7.0 + 4.0 * s2 * eta + 3.0 * eta * eta);
    let beta = eta * (rho1 - 4.0) / rho1;
    let den = 3.0 * eta + 2.0 * s2;
    FanSubsolution {
        nu_minus: -(14.0 * s2 + 29.0 * eta + 6.0 * s2 * eta * eta) / (den * den),
        nu_plus: eta,
        rho1,
        alpha: -0.25,
        beta,
        gamma: rho1 - 16.0 / rho1 + c1 / 2.0 - eta * beta,
        delta: -beta / 4.0,
        c1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub value: f64,
    pub closed: bool,
    /// Label of the condition that binds here, or `"scan window"`.
    pub binding: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum C1Interval {
    Empty,
    Interval { lo: Endpoint, hi: Endpoint },
}

impl C1Interval {
    pub fn is_empty(&self) -> bool {
        matches!(self, C1Interval::Empty)
    }

    pub fn contains(&self, c: f64) -> bool {
        match self {
            C1Interval::Empty => false,
            C1Interval::Interval { lo, hi } => {
                (c > lo.value || (lo.closed && c == lo.value))
                    && (c < hi.value || (hi.closed && c == hi.value))
            }
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            C1Interval::Empty => None,
            C1Interval::Interval { lo, hi } => Some((lo.value, hi.value)),
        }
    }
}

impl std::fmt::Display for C1Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            C1Interval::Empty => write!(f, "empty"),
            C1Interval::Interval { lo, hi } => write!(
                f,
                "{}{:.10}, {:.10}{}",
                if lo.closed { '[' } else { '(' },
                lo.value,
                hi.value,
                if hi.closed { ']' } else { ')' }
            ),
        }
    }
}

/// Search window and resolution for [`admissible_c1_interval_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSearch {
    pub c_min: f64,
    pub c_max: f64,
    pub scan_points: usize,
    /// Bisection stops once the bracket is narrower than this.
    pub bisection_tol: f64,
}

impl Default for IntervalSearch {
    fn default() -> Self {
        IntervalSearch {
            c_min: 0.0,
            c_max: 64.0,
            scan_points: 512,
            bisection_tol: 1e-13,
        }
    }
}

pub fn admissible_c1_interval(eta: f64) -> Result<C1Interval> {
    admissible_c1_interval_with(eta, IntervalSearch::default())
}

/// The set of `C̃₁` for which the perturbed family at `η` passes every
/// condition.
///
/// Each inequality margin is scanned for sign changes over the window and
/// every change is refined by bisection. Between consecutive roots the pass
/// or fail status is constant, so it is decided at the midpoint. If the
/// feasible set has several components the widest is returned.
pub fn admissible_c1_interval_with(eta: f64, search: IntervalSearch) -> Result<C1Interval> {
    if !(eta > ETA_MIN && eta <= 0.0) {
        return Err(Error::Domain(format!(
            "eta = {eta} outside (-2*sqrt(2)/3, 0]"
        )));
    }
    if search.scan_points < 2 || !(search.c_max > search.c_min) {
        return Err(Error::Config(
            "interval scan needs a nonempty window and >= 2 points".into(),
        ));
    }
    let margin = |k: usize, c: f64| -> f64 {
        check_conditions(&perturbed_unchecked(eta, c))
            .map_or(f64::NAN, |r| r.inequalities[k].margin)
    };
    let passes = |c: f64| check_conditions(&perturbed_unchecked(eta, c)).is_ok_and(|r| r.overall);

    let n = search.scan_points;
    let grid: Vec<f64> = (0..n)
        .map(|i| search.c_min + (search.c_max - search.c_min) * i as f64 / (n - 1) as f64)
        .collect();

    // (location, label index)
    let mut roots: Vec<(f64, usize)> = Vec::new();
    for k in 0..INEQUALITY_LABELS.len() {
        let values: Vec<f64> = grid.iter().map(|&c| margin(k, c)).collect();
        for i in 0..n - 1 {
            let (fa, fb) = (values[i], values[i + 1]);
            if fa == 0.0 && fb == 0.0 {
                continue;
            }
            if fa.signum() != fb.signum() && fb != 0.0 {
                roots.push((
                    bisect(|c| margin(k, c), grid[i], grid[i + 1], search.bisection_tol),
                    k,
                ));
            }
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut cuts: Vec<(f64, Option<usize>)> = vec![(search.c_min, None)];
    cuts.extend(roots.iter().map(|&(c, k)| (c, Some(k))));
    cuts.push((search.c_max, None));

    let mut best: Option<(Endpoint, Endpoint)> = None;
    let mut current: Option<Endpoint> = None;
    for w in cuts.windows(2) {
        let (a, ka) = w[0];
        let (b, kb) = w[1];
        if b <= a {
            continue;
        }
        let inside = passes(0.5 * (a + b));
        match (inside, current.is_some()) {
            (true, false) => current = Some(endpoint(a, ka, &passes)),
            (false, true) => {
                let lo = current.take().unwrap();
                let hi = endpoint(a, ka, &passes);
                keep_widest(&mut best, lo, hi);
            }
            _ => {}
        }
        if inside && b == search.c_max {
            if let Some(lo) = current.take() {
                keep_widest(&mut best, lo, endpoint(b, kb, &passes));
            }
        }
    }
    Ok(match best {
        Some((lo, hi)) => C1Interval::Interval { lo, hi },
        None => C1Interval::Empty,
    })
}

fn endpoint(c: f64, binding: Option<usize>, passes: &impl Fn(f64) -> bool) -> Endpoint {
    match binding {
        Some(k) => Endpoint {
            value: c,
            closed: passes(c),
            binding: INEQUALITY_LABELS[k].into(),
        },
        None => Endpoint {
            value: c,
            closed: passes(c),
            binding: "scan window".into(),
        },
    }
}

fn keep_widest(best: &mut Option<(Endpoint, Endpoint)>, lo: Endpoint, hi: Endpoint) {
    let wider = best
        .as_ref()
        .is_none_or(|(l, h)| hi.value - lo.value > h.value - l.value);
    if wider {
        *best = Some((lo, hi));
    }
}

/// Root of `f` in `[a, b]` given a sign change.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub holds: bool,
    /// `√((ρ₁ + ρ̃₁)(ρ₁ − ρ̃₁)² / (ρ₁ρ̃₁))`
    pub lhs: f64,
    /// `|√C₁ − √C̃₁|`
    pub rhs: f64,
    /// `rhs − lhs`
    pub margin: f64,
}

/// Sufficient condition for the two fans' exact solutions to have lifts that
/// are nowhere wave-cone-connected on the overlap of their wedges.
pub fn separation_holds(f: &FanSubsolution, g: &FanSubsolution) -> Separation {
    let (r, s) = (f.rho1, g.rho1);
    let lhs = ((r + s) * (r - s) * (r - s) / (r * s)).sqrt();
    let rhs = (f.c1.sqrt() - g.c1.sqrt()).abs();
    Separation {
        holds: lhs < rhs,
        lhs,
        rhs,
        margin: rhs - lhs,
    }
}

/// `P₁ ∩ P̃₁` as a fan wedge, or `None` if the wedges do not overlap.
pub fn overlap_wedge(f: &FanSubsolution, g: &FanSubsolution) -> Option<FanPartition> {
    let w = FanPartition {
        nu_minus: f.nu_minus.max(g.nu_minus),
        nu_plus: f.nu_plus.min(g.nu_plus),
    };
    w.is_valid().then_some(w)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub etas: Vec<f64>,
    pub c1s: Vec<f64>,
    /// Values of `C̃₁` for the perturbed fan; the `C₁` grid is reused when empty.
    #[serde(default)]
    pub c1_tildes: Vec<f64>,
    #[serde(default)]
    pub margin_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCandidate {
    pub eta: f64,
    pub c1: f64,
    pub c1_tilde: f64,
    pub baseline: FanSubsolution,
    pub perturbed: FanSubsolution,
    pub separation: Separation,
    pub wedge: FanPartition,
}

/// Every grid pair (baseline(C₁), perturbed(η, C̃₁)) whose fans are both
/// admissible, separated with margin at least the floor, and overlapping.
/// Results are ordered lexicographically by grid index `(η, C₁, C̃₁)`.
pub fn search_pairs(config: &SearchConfig) -> Vec<PairCandidate> {
    let tildes = if config.c1_tildes.is_empty() {
        &config.c1s
    } else {
        &config.c1_tildes
    };
    let (ne, nc, nt) = (config.etas.len(), config.c1s.len(), tildes.len());
    (0..ne * nc * nt)
        .into_par_iter()
        .filter_map(|idx| {
            let (ie, rest) = (idx / (nc * nt), idx % (nc * nt));
            let (ic, it) = (rest / nt, rest % nt);
            let (eta, c1, c1_tilde) = (config.etas[ie], config.c1s[ic], tildes[it]);
            let baseline = baseline_family(c1).ok()?;
            let perturbed = perturbed_family(eta, c1_tilde).ok()?;
            let separation = separation_holds(&baseline, &perturbed);
            if !separation.holds || separation.margin < config.margin_floor {
                return None;
            }
            let wedge = overlap_wedge(&baseline, &perturbed)?;
            Some(PairCandidate {
                eta,
                c1,
                c1_tilde,
                baseline,
                perturbed,
                separation,
                wedge,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shock_datum_values() {
        let s = ShockDatum::standard();
        assert_eq!(s.u_minus[0], -0.25);
        assert_relative_eq!(s.u_minus[1], 2.0 * SQRT_2, epsilon = 1e-15);
        assert_eq!(s.u_plus, [-0.25, 0.0]);
    }

    #[test]
    fn baseline_at_six() {
        let f = baseline_family(6.0).unwrap();
        assert_relative_eq!(f.nu_minus, -2.474873734152916, epsilon = 1e-14);
        assert_relative_eq!(f.gamma, 3.0 - 559.0 / 105.0, epsilon = 1e-15);
        assert_relative_eq!(f.gamma, -2.323809523809524, epsilon = 1e-14);
        let r = check_conditions(&f).unwrap();
        assert!(r.overall);
        assert!(r.max_equality_residual() <= 1e-14);
    }

    #[test]
    fn baseline_rejects_small_c1() {
        let f = baseline_unchecked(5.0);
        let r = check_conditions(&f).unwrap();
        assert!(!r.overall);
        assert_eq!(r.violated(), vec![INEQUALITY_LABELS[1].to_string()]);
        match baseline_family(5.0) {
            Err(Error::Range { violated, .. }) => assert_eq!(violated, vec![INEQUALITY_LABELS[1]]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn baseline_endpoints() {
        assert!(baseline_family(BASELINE_C1_MIN).is_err());
        assert!(baseline_family(BASELINE_C1_MIN + 1e-8).is_ok());
        // 11273/1680 sits inside the computed range
        let f = baseline_family(11273.0 / 1680.0).unwrap();
        assert!(check_conditions(&f).unwrap().admissibility_margins()[0] >= 0.0);
        // right end of the computed range is closed
        assert!(baseline_family(11497.0 / 1680.0).is_ok());
        assert!(baseline_family(11497.0 / 1680.0 + 1e-8).is_err());
    }

    #[test]
    fn perturbed_witness() {
        let f = perturbed_family(-0.001, 5.8).unwrap();
        assert!(f.nu_minus < f.nu_plus);
        let r = check_conditions(&f).unwrap();
        assert!(r.overall, "{r:#?}");
        assert!(r.max_equality_residual() <= 1e-13);
    }

    #[test]
    fn perturbed_domain() {
        assert!(matches!(
            perturbed_family(ETA_MIN, 5.8),
            Err(Error::Domain(_))
        ));
        assert!(matches!(perturbed_family(0.0, 5.8), Err(Error::Domain(_))));
        assert!(matches!(perturbed_family(0.1, 5.8), Err(Error::Domain(_))));
        assert!(matches!(
            perturbed_family(-0.001, 2.0),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn perturbed_reduces_to_baseline() {
        let p = perturbed_unchecked(0.0, 6.0);
        let b = baseline_unchecked(6.0);
        assert_relative_eq!(p.rho1, 15.0 / 7.0, epsilon = 1e-15);
        assert_eq!(p.beta, 0.0);
        assert_relative_eq!(p.nu_minus, b.nu_minus, epsilon = 1e-14);
        assert_relative_eq!(p.gamma, b.gamma, epsilon = 1e-14);
    }

    #[test]
    fn non_finite_is_domain_error() {
        let mut f = baseline_unchecked(6.0);
        f.rho1 = f64::NAN;
        assert!(matches!(check_conditions(&f), Err(Error::Domain(_))));
    }

    #[test]
    fn interval_at_zero() {
        let i = admissible_c1_interval(0.0).unwrap();
        let C1Interval::Interval { lo, hi } = &i else {
            panic!("empty")
        };
        assert!((lo.value - 9049.0 / 1680.0).abs() < 1e-9);
        assert!(!lo.closed);
        assert_eq!(lo.binding, INEQUALITY_LABELS[1]);
        assert!((hi.value - 11497.0 / 1680.0).abs() < 1e-9);
        assert!(hi.closed);
        assert_eq!(hi.binding, INEQUALITY_LABELS[2]);
        assert!(i.contains(6.0) && !i.contains(5.0) && !i.contains(6.9));
    }

    #[test]
    fn interval_contains_witness() {
        assert!(admissible_c1_interval(-0.001).unwrap().contains(5.8));
        assert!(admissible_c1_interval(ETA_MIN).is_err());
    }

    #[test]
    fn separation_examples() {
        let b = baseline_family(6.0).unwrap();
        let p = perturbed_family(-0.001, 5.8).unwrap();
        let s = separation_holds(&b, &p);
        assert!(s.holds);
        assert!(s.margin > 0.039);
        let s = separation_holds(&b, &b);
        assert!(!s.holds);
        assert_eq!(s.lhs, 0.0);
        assert_eq!(s.rhs, 0.0);
        // equal ρ₁: any distinct C₁ separates
        let s = separation_holds(&b, &baseline_family(6.0000001).unwrap());
        assert!(s.holds && s.lhs == 0.0 && s.rhs > 0.0);
    }

    #[test]
    fn overlap_examples() {
        let b = baseline_family(6.0).unwrap();
        let p = perturbed_family(-0.001, 5.8).unwrap();
        let w = overlap_wedge(&b, &p).unwrap();
        assert_relative_eq!(w.nu_minus, -7.0 / (2.0 * SQRT_2), epsilon = 1e-15);
        assert_eq!(w.nu_plus, -0.001);
        assert_eq!(overlap_wedge(&b, &b).unwrap(), b.partition());
        let mut far = b;
        far.nu_minus = 1.0;
        far.nu_plus = 2.0;
        assert!(overlap_wedge(&b, &far).is_none());
    }

    #[test]
    fn search_examples() {
        assert!(search_pairs(&SearchConfig::default()).is_empty());
        let found = search_pairs(&SearchConfig {
            etas: vec![-0.01, -0.001],
            c1s: vec![5.5, 6.0],
            c1_tildes: vec![5.8, 6.0],
            margin_floor: 0.0,
        });
        assert!(found
            .iter()
            .any(|p| p.eta == -0.001 && p.c1 == 6.0 && p.c1_tilde == 5.8));
        let none = search_pairs(&SearchConfig {
            etas: vec![-0.5],
            c1s: vec![6.0],
            c1_tildes: vec![40.0, 50.0],
            margin_floor: 0.0,
        });
        assert!(none.is_empty());
    }
}
