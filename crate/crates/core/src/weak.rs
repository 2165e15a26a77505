//! Distributional checks for self-similar piecewise-constant fields: jump
//! conditions, mollified weak forms and entropy jumps.

use std::sync::OnceLock;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fan::{check_conditions, FanPartition, FanSubsolution, ShockDatum};
use crate::lifted::{capital_matrix, lift, CapitalMatrix, LiftedState, QUADRATIC_PRESSURE};

/// Lifted states on `P₋`, `P₁`, `P₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseFan {
    pub partition: FanPartition,
    pub states: [LiftedState; 3],
}

/// Wedge state `(ρ₁, ρ₁u₁, ρ₁w₁, ρ₁² + ρ₁C₁/2)` of a fan subsolution.
pub fn wedge_state(f: &FanSubsolution) -> LiftedState {
    let r = f.rho1;
    LiftedState {
        rho: r,
        m: [r * f.alpha, r * f.beta],
        u11: r * f.gamma,
        u12: r * f.delta,
        q: r * r + r * f.c1 / 2.0,
    }
}

impl PiecewiseFan {
    pub fn new(partition: FanPartition, states: [LiftedState; 3]) -> Result<Self> {
        if !partition.is_valid() {
            return Err(Error::Domain(format!(
                "fan speeds must satisfy nu_- < nu_+, got {} and {}",
                partition.nu_minus, partition.nu_plus
            )));
        }
        let finite = states
            .iter()
            .all(|z| z.to_vector().iter().all(|c| c.is_finite()));
        if !finite || !partition.nu_minus.is_finite() || !partition.nu_plus.is_finite() {
            return Err(Error::Domain("fan has non-finite entries".into()));
        }
        Ok(PiecewiseFan { partition, states })
    }

    /// The subsolution with the exact shock states outside the wedge.
    pub fn from_subsolution(f: &FanSubsolution) -> Self {
        let shock = ShockDatum::standard();
        let lift2 = |s| lift(&s, QUADRATIC_PRESSURE).expect("shock states are physical");
        PiecewiseFan {
            partition: f.partition(),
            states: [lift2(shock.minus()), wedge_state(f), lift2(shock.plus())],
        }
    }

    pub fn constant(z: LiftedState) -> Self {
        PiecewiseFan {
            partition: FanPartition {
                nu_minus: -1.0,
                nu_plus: 1.0,
            },
            states: [z; 3],
        }
    }

    pub fn speeds(&self) -> [f64; 2] {
        [self.partition.nu_minus, self.partition.nu_plus]
    }

    pub fn state_at(&self, t: f64, x2: f64) -> LiftedState {
        use crate::fan::FanRegion::*;
        match self.partition.region(t, x2) {
            Minus => self.states[0],
            Wedge => self.states[1],
            Plus => self.states[2],
        }
    }

    /// Boost by `c` in `x₂`: states are boosted and speeds shifted by `c`.
    pub fn boost_x2(&self, c: f64) -> Self {
        PiecewiseFan {
            partition: FanPartition {
                nu_minus: self.partition.nu_minus + c,
                nu_plus: self.partition.nu_plus + c,
            },
            states: self.states.map(|z| z.boost_x2(c)),
        }
    }

    pub fn sector_field(&self) -> SectorField<CapitalMatrix> {
        SectorField {
            speeds: self.speeds().to_vec(),
            values: self.states.iter().map(capital_matrix).collect(),
        }
    }
}

/// Terms `(−ν[a], [b])` of each row of the jump condition across `x₂ = νt`.
fn jump_terms(nu: f64, left: &LiftedState, right: &LiftedState) -> [(f64, f64); 3] {
    let d = *right - *left;
    [
        (-nu * d.rho, d.m[1]),
        (-nu * d.m[0], d.u12),
        (-nu * d.m[1], -d.u11 + d.q),
    ]
}

/// Jump residuals `(−ν[ρ] + [m₂], −ν[m₁] + [U₁₂], −ν[m₂] + [−U₁₁ + q])` at
/// the left and right interface, with `[·]` = right minus left.
pub fn rh_residual(fan: &PiecewiseFan) -> [[f64; 3]; 2] {
    let [nl, nr] = fan.speeds();
    let [zm, z1, zp] = fan.states;
    [
        jump_terms(nl, &zm, &z1).map(|(a, b)| a + b),
        jump_terms(nr, &z1, &zp).map(|(a, b)| a + b),
    ]
}

/// Energy `q` and `x₂`-flux `(q + ρ²) m₂/ρ` of a `p(ρ) = ρ²` lifted state.
pub fn entropy_pair(z: &LiftedState) -> (f64, f64) {
    let flux = if z.rho > 0.0 {
        (z.q + z.rho * z.rho) * z.m[1] / z.rho
    } else {
        0.0
    };
    (z.q, flux)
}

/// Slack `ν[E] − [F]` of the entropy inequality at each interface; a fan is
/// admissible iff both are nonnegative. The wedge energy carries `C₁` through
/// `q₁`.
pub fn entropy_jump_residual(fan: &PiecewiseFan) -> [f64; 2] {
    entropy_terms(fan).map(|(a, b)| a + b)
}

fn entropy_terms(fan: &PiecewiseFan) -> [(f64, f64); 2] {
    let [nl, nr] = fan.speeds();
    let e = fan.states.map(|z| entropy_pair(&z));
    let term = |nu: f64, l: (f64, f64), r: (f64, f64)| (nu * (r.0 - l.0), -(r.1 - l.1));
    [term(nl, e[0], e[1]), term(nr, e[1], e[2])]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Worst residual or smallest margin behind the check.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    fn from_checks(checks: Vec<Check>) -> Self {
        Verdict {
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }
}

const REL_TOL: f64 = 1e-10;

/// Jump conditions, strict subsolution inequalities and entropy slack of a
/// fan subsolution, checked from its lifted states.
pub fn verify_subsolution(f: &FanSubsolution) -> Verdict {
    if !f.is_finite() {
        return Verdict::from_checks(vec![Check {
            name: "finite parameters".into(),
            pass: false,
            value: f64::NAN,
        }]);
    }
    let fan = PiecewiseFan::from_subsolution(f);
    let mut checks = vec![Check {
        name: "ordered speeds".into(),
        pass: fan.partition.is_valid(),
        value: fan.partition.nu_plus - fan.partition.nu_minus,
    }];

    let [nl, nr] = fan.speeds();
    let [zm, z1, zp] = fan.states;
    let mut rh_ok = true;
    let mut rh_worst: f64 = 0.0;
    for (a, b) in jump_terms(nl, &zm, &z1)
        .into_iter()
        .chain(jump_terms(nr, &z1, &zp))
    {
        rh_ok &= (a + b).abs() <= REL_TOL * (1.0 + a.abs() + b.abs());
        rh_worst = rh_worst.max((a + b).abs());
    }
    checks.push(Check {
        name: "rh residual".into(),
        pass: rh_ok,
        value: rh_worst,
    });

    let report = check_conditions(f).expect("finite parameters");
    for i in report.inequalities.iter().filter(|i| i.strict) {
        checks.push(Check {
            name: i.label.clone(),
            pass: i.ok,
            value: i.margin,
        });
    }

    for (k, (a, b)) in entropy_terms(&fan).into_iter().enumerate() {
        let margin = a + b;
        checks.push(Check {
            name: format!("entropy slack at {}", ["nu_-", "nu_+"][k]),
            pass: margin >= -REL_TOL * (1.0 + a.abs() + b.abs()),
            value: margin,
        });
    }
    Verdict::from_checks(checks)
}

/// Values constant on the sectors cut out of `{t > 0}` by the rays
/// `x₂ = νⱼt`; `values.len() == speeds.len() + 1` and speeds increase.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorField<T> {
    pub speeds: Vec<f64>,
    pub values: Vec<T>,
}

impl<T: Clone + PartialEq> SectorField<T> {
    /// Drops rays across which the value does not change.
    pub fn merged(&self) -> Self {
        let mut speeds = Vec::new();
        let mut values = vec![self.values[0].clone()];
        for (nu, v) in self.speeds.iter().zip(&self.values[1..]) {
            if v != values.last().unwrap() {
                speeds.push(*nu);
                values.push(v.clone());
            }
        }
        SectorField { speeds, values }
    }

    pub fn value_at(&self, t: f64, x2: f64) -> &T {
        let k = self.speeds.iter().take_while(|&&nu| x2 > nu * t).count();
        &self.values[k]
    }
}

/// `ψ(t, x) = b((t − c₀)/r) b((x₁ − c₁)/r) b((x₂ − c₂)/r)` with the
/// mollifier `b(s) = exp(1 − 1/(1 − s²))` on `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    /// `(t, x₁, x₂)`
    pub center: [f64; 3],
    pub radius: f64,
}

/// `b(s)` and `b′(s)`.
fn profile(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let w = 1.0 - s * s;
    let b = (1.0 - 1.0 / w).exp();
    (b, b * (-2.0 * s / (w * w)))
}

/// `∫ b`.
fn profile_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let n = 20_000;
        let h = 2.0 / n as f64;
        (0..n)
            .map(|i| profile(-1.0 + (i as f64 + 0.5) * h).0)
            .sum::<f64>()
            * h
    })
}

impl Bump {
    pub fn value(&self, t: f64, x1: f64, x2: f64) -> f64 {
        let r = self.radius;
        profile((t - self.center[0]) / r).0
            * profile((x1 - self.center[1]) / r).0
            * profile((x2 - self.center[2]) / r).0
    }

    /// `∫ ψ dx₁`, the factor contributed by the direction no field depends on.
    pub fn x1_mass(&self) -> f64 {
        self.radius * profile_mass()
    }

    pub fn t_support(&self) -> (f64, f64) {
        (self.center[0] - self.radius, self.center[0] + self.radius)
    }
}

pub const MIN_RESOLUTION: usize = 16;

/// Bumps supported in `(0, 1] × ℝ²`, integrated on a midpoint grid with
/// `resolution` nodes per bump diameter in `t` and `x₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSet {
    pub bumps: Vec<Bump>,
    pub resolution: usize,
}

impl TestFunctionSet {
    pub fn new(bumps: Vec<Bump>, resolution: usize) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::Config(format!(
                "quadrature resolution {resolution} is below {MIN_RESOLUTION} nodes per bump"
            )));
        }
        for (i, b) in bumps.iter().enumerate() {
            let (t0, t1) = b.t_support();
            let ok = b.radius > 0.0
                && b.radius.is_finite()
                && b.center.iter().all(|c| c.is_finite())
                && t0 > 0.0
                && t1 <= 1.0;
            if !ok {
                return Err(Error::Config(format!(
                    "bump {i} is not supported inside (0, 1] in time: {b:?}"
                )));
            }
        }
        Ok(TestFunctionSet { bumps, resolution })
    }

    /// `count` bumps with radius in `[0.05, 0.25]`, time support in `(0, 1]`
    /// and `x₂` center uniform in `x2_window`.
    pub fn random(
        count: usize,
        seed: u64,
        x2_window: (f64, f64),
        resolution: usize,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..count)
            .map(|_| {
                let radius = rng.gen_range(0.05..=0.25);
                let t = rng.gen_range(radius * 1.001..=1.0 - radius);
                let x2 = rng.gen_range(x2_window.0..=x2_window.1);
                Bump {
                    center: [t, 0.0, x2],
                    radius,
                }
            })
            .collect();
        Self::new(bumps, resolution)
    }

    /// One bump of radius `0.2` centered on each ray at `t = 1/2`.
    pub fn on_rays(speeds: &[f64], resolution: usize) -> Result<Self> {
        let bumps = speeds
            .iter()
            .map(|&nu| Bump {
                center: [0.5, 0.0, 0.5 * nu],
                radius: 0.2,
            })
            .collect();
        Self::new(bumps, resolution)
    }

    /// Default set for fans with speeds in `[lo, hi]`: rays plus 20 random
    /// bumps around them.
    pub fn for_speeds(lo: f64, hi: f64, seed: u64, resolution: usize) -> Result<Self> {
        let mut set = Self::random(20, seed, (lo - 0.3, hi + 0.3), resolution)?;
        set.bumps
            .extend(Self::on_rays(&[lo, hi], resolution)?.bumps);
        Ok(set)
    }
}

/// Midpoint sum of `g` over `[a, b]` with spacing at most `h`.
fn midpoint(a: f64, b: f64, h: f64, g: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = ((b - a) / h).ceil().max(1.0) as usize;
    let step = (b - a) / n as f64;
    (0..n).map(|i| g(a + (i as f64 + 0.5) * step)).sum::<f64>() * step
}

/// For each sector, `(∫∫ ∂ₜψ, ∫∫ ∂ₓ₂ψ)` over the sector (times the `x₁`
/// mass). The `∂ₓ₁ψ` integrals vanish because nothing depends on `x₁`.
pub fn sector_gradients(speeds: &[f64], bump: &Bump, resolution: usize) -> Vec<[f64; 2]> {
    let r = bump.radius;
    let h = 2.0 * r / resolution as f64;
    let [ct, _, cx] = bump.center;
    let (xlo, xhi) = (cx - r, cx + r);
    let mut out = vec![[0.0; 2]; speeds.len() + 1];
    for k in 0..resolution {
        let t = ct - r + (k as f64 + 0.5) * h;
        let (bt, dbt) = profile((t - ct) / r);
        if bt == 0.0 {
            continue;
        }
        let mut lo = xlo;
        for (j, slot) in out.iter_mut().enumerate() {
            let hi = if j < speeds.len() {
                (speeds[j] * t).clamp(xlo, xhi)
            } else {
                xhi
            };
            if hi > lo {
                let val = midpoint(lo, hi, h, |x| profile((x - cx) / r).0);
                let der = midpoint(lo, hi, h, |x| profile((x - cx) / r).1) / r;
                slot[0] += h * dbt / r * val;
                slot[1] += h * bt * der;
            }
            lo = lo.max(hi);
        }
    }
    let m1 = bump.x1_mass();
    out.iter().map(|[a, b]| [a * m1, b * m1]).collect()
}

/// `∫ Z ∇ψ`: row `i` is the weak form of `∂ₜZᵢ₀ + ∂ₓ₁Zᵢ₁ + ∂ₓ₂Zᵢ₂ = 0`.
pub fn matrix_weak_form(
    field: &SectorField<CapitalMatrix>,
    bump: &Bump,
    resolution: usize,
) -> Vector3<f64> {
    let field = field.merged();
    sector_gradients(&field.speeds, bump, resolution)
        .iter()
        .zip(&field.values)
        .map(|(g, z)| z.column(0) * g[0] + z.column(2) * g[1])
        .sum()
}

/// `∫ E ∂ₜψ + F ∂ₓ₂ψ` for sectorwise energy/flux pairs.
pub fn scalar_weak_form(field: &SectorField<(f64, f64)>, bump: &Bump, resolution: usize) -> f64 {
    let field = field.merged();
    sector_gradients(&field.speeds, bump, resolution)
        .iter()
        .zip(&field.values)
        .map(|(g, (e, f))| e * g[0] + f * g[1])
        .sum()
}

/// Largest Euclidean norm of `∫ Z ∇ψ` over the test set.
pub fn matrix_field_residual(field: &SectorField<CapitalMatrix>, tests: &TestFunctionSet) -> f64 {
    tests
        .bumps
        .par_iter()
        .map(|b| matrix_weak_form(field, b, tests.resolution).norm())
        .reduce(|| 0.0, f64::max)
}

/// Weak-form residual of the relaxed system for a fan.
pub fn weak_form_residual(fan: &PiecewiseFan, tests: &TestFunctionSet) -> f64 {
    matrix_field_residual(&fan.sector_field(), tests)
}

/// Largest violation `−∫ (E ∂ₜψ + F ∂ₓ₂ψ)` of the entropy inequality over
/// the (nonnegative) test set; nonpositive for admissible fans up to
/// quadrature error.
pub fn weak_entropy_residual(field: &SectorField<(f64, f64)>, tests: &TestFunctionSet) -> f64 {
    tests
        .bumps
        .par_iter()
        .map(|b| -scalar_weak_form(field, b, tests.resolution))
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

pub fn fan_entropy_field(fan: &PiecewiseFan) -> SectorField<(f64, f64)> {
    SectorField {
        speeds: fan.speeds().to_vec(),
        values: fan.states.iter().map(entropy_pair).collect(),
    }
}
