//! Subcommands of the `eulerwave` binary.
//!
//! Every command prints a JSON report on stdout. Exit codes: 0 pass,
//! 1 semantic failure, 2 input or configuration error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use eulerwave::fan::{
    admissible_c1_interval, baseline_unchecked, check_conditions_with, perturbed_family,
    perturbed_unchecked, search_pairs, ConditionTolerance, FanSubsolution, SearchConfig,
};
use eulerwave::lifted::{
    capital_matrix_of, det_factored, lift, State, StateVector, WaveCone, QUADRATIC_PRESSURE,
};
use eulerwave::rigidity::{rigidity_experiment, RigidityConfig, RigidityVerdict};
use eulerwave::scenario::{audit, parse_scenario, AuditOptions};
use eulerwave::torus::Profile;
use eulerwave::weak::verify_subsolution;
use eulerwave::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "eulerwave",
    version,
    about = "Wave cones, fan subsolutions and Young-measure audits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wave-cone test for two states or one raw difference vector.
    Wavecone(WaveconeArgs),
    /// Fan subsolution checks and families.
    #[command(subcommand)]
    Subsolution(SubsolutionCmd),
    /// Grid search for separated baseline/perturbed pairs.
    PairSearch(PairSearchArgs),
    /// Audit every entry of a scenario file.
    Audit(AuditArgs),
    /// Oscillation-versus-rigidity experiment on the torus.
    Rigidity(RigidityArgs),
}

/// `rho,ux,uy`
pub fn parse_state(s: &str) -> Result<State, String> {
    let v = parse_numbers(s, 3)?;
    if v[0] < 0.0 {
        return Err(format!("density (component 1) is negative: {}", v[0]));
    }
    Ok(State::new(v[0], [v[1], v[2]]))
}

pub fn parse_vector(s: &str) -> Result<StateVector, String> {
    Ok(StateVector::from_iterator(parse_numbers(s, 8)?))
}

fn parse_numbers(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!(
            "expected {n} comma-separated numbers, got {}",
            parts.len()
        ));
    }
    parts
        .iter()
        .enumerate()
        .map(|(i, p)| match p.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(format!(
                "component {} ('{p}') is not a finite number",
                i + 1
            )),
        })
        .collect()
}

/// Values of one search axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec(pub Vec<f64>);

/// `a,b,c` or `lo:hi:count` (inclusive, evenly spaced).
pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    parse_grid_values(s).map(GridSpec)
}

fn parse_grid_values(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    if let [lo, hi, n] = s.split(':').collect::<Vec<_>>()[..] {
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|_| format!("range start '{lo}' is not a number"))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|_| format!("range end '{hi}' is not a number"))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| format!("range count '{n}' is not a count"))?;
        return Ok(match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        });
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("grid value '{p}' is not a number"))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct WaveconeArgs {
    /// Euler state `rho,ux,uy`; give exactly two.
    #[arg(long = "state", value_parser = parse_state)]
    pub states: Vec<State>,
    /// Raw 8-component difference vector `rho,m1,m2,U11,U12,U21,U22,q`.
    #[arg(long, value_parser = parse_vector, conflicts_with = "states")]
    pub vector: Option<StateVector>,
    /// Relative determinant tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum SubsolutionCmd {
    /// Check the ten conditions for explicit parameters.
    Check(FanArgs),
    /// Baseline family at a given C1.
    Baseline {
        #[arg(long)]
        c1: f64,
        /// Exit 1 unless the fan passes every condition.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Perturbed family at (eta, C1).
    Perturb {
        #[arg(long, allow_hyphen_values = true)]
        eta: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Admissible C1 range of the perturbed family at eta (eta = 0: baseline).
    Interval {
        #[arg(long, allow_hyphen_values = true)]
        eta: f64,
    },
}

#[derive(Debug, Args)]
pub struct FanArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub nu_minus: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub nu_plus: f64,
    #[arg(long)]
    pub rho1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long)]
    pub c1: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct PairSearchArgs {
    /// eta grid: `a,b,c` or `lo:hi:count`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    pub etas: Option<GridSpec>,
    #[arg(long, value_parser = parse_grid)]
    pub c1s: Option<GridSpec>,
    /// Perturbed C1 grid; defaults to the C1 grid.
    #[arg(long, value_parser = parse_grid)]
    pub c1_tildes: Option<GridSpec>,
    /// JSON file with `etas`, `c1s` and optionally `c1_tildes`, `margin_floor`.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Minimum separation margin.
    #[arg(long)]
    pub floor: Option<f64>,
    /// CSV output path.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 256)]
    pub resolution: usize,
    #[arg(long, default_value_t = 20)]
    pub tests: usize,
    #[arg(long, default_value_t = 0.01)]
    pub theta: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub residual_tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RigidityArgs {
    /// Euler state `rho,ux,uy`; give exactly two.
    #[arg(long = "state", value_parser = parse_state)]
    pub states: Vec<State>,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    pub n_list: Vec<u32>,
    /// Nodes per axis, a power of two.
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    /// Full 3-D grid instead of the (t, x2) slice.
    #[arg(long)]
    pub cube: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub delta0: f64,
    /// Use the cell-averaged profile instead of the sharp indicator.
    #[arg(long)]
    pub smoothed: bool,
    /// CSV of `n, afree_residual, d_n, atom masses`.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// CSV of `n, bin_center, mass`.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

/// A finished command: its report and exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub code: i32,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Lib(Error),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Lib(Error::Range { .. }) => EXIT_FAIL,
            _ => EXIT_INPUT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Lib(Error::Schema(list)) => {
                writeln!(f, "scenario has {} problem(s):", list.len())?;
                for p in list {
                    writeln!(f, "  - {p}")?;
                }
                Ok(())
            }
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult = Result<Outcome, CliError>;

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Applies `EULERWAVE_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("EULERWAVE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Input(format!("EULERWAVE_THREADS='{v}' is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot size the worker pool: {e}")))
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Wavecone(a) => wavecone(a),
        Command::Subsolution(c) => subsolution(c),
        Command::PairSearch(a) => pair_search(a),
        Command::Audit(a) => audit_cmd(a),
        Command::Rigidity(a) => rigidity(a),
    }
}

fn wavecone(a: WaveconeArgs) -> CliResult {
    let cone = WaveCone::new(a.tol);
    let direction = |z: &StateVector| cone.direction(z).map(|d| [d[0], d[1], d[2]]);
    if let Some(z) = a.vector {
        let det = capital_matrix_of(&z).determinant();
        let report = json!({
            "vector": z.as_slice(),
            "member": cone.member(&z),
            "det": det,
            "direction": direction(&z),
        });
        return Ok(Outcome {
            report,
            code: EXIT_PASS,
        });
    }
    let [s, t] = a.states[..] else {
        return Err(CliError::Input(format!(
            "--state: expected exactly 2 states, got {}",
            a.states.len()
        )));
    };
    let c = cone.connected(&s, &t)?;
    let zs = lift(&s, QUADRATIC_PRESSURE)?;
    let zt = lift(&t, QUADRATIC_PRESSURE)?;
    let diff = zt.to_vector() - zs.to_vector();
    let report = json!({
        "states": [s, t],
        "lifted": [zs, zt],
        "difference_zero": c.difference_zero,
        "connected": c.connected,
        "det": c.det,
        "det_factored": det_factored(&s, &t),
        "direction": if c.difference_zero { None } else { direction(&diff) },
    });
    Ok(Outcome {
        report,
        code: EXIT_PASS,
    })
}

fn fan_report(f: &FanSubsolution, tol: f64, check: bool) -> CliResult {
    let conditions = check_conditions_with(f, ConditionTolerance { rel: tol })?;
    let verification = verify_subsolution(f);
    let pass = conditions.overall;
    let report = json!({
        "fan": f,
        "pass": pass,
        "violated": conditions.violated(),
        "conditions": conditions,
        "verification": verification,
    });
    Ok(Outcome {
        report,
        code: if check && !pass { EXIT_FAIL } else { EXIT_PASS },
    })
}

fn subsolution(c: SubsolutionCmd) -> CliResult {
    match c {
        SubsolutionCmd::Check(a) => {
            let f = FanSubsolution {
                nu_minus: a.nu_minus,
                nu_plus: a.nu_plus,
                rho1: a.rho1,
                alpha: a.alpha,
                beta: a.beta,
                gamma: a.gamma,
                delta: a.delta,
                c1: a.c1,
            };
            fan_report(&f, a.tol, true)
        }
        SubsolutionCmd::Baseline { c1, check, tol } => {
            fan_report(&baseline_unchecked(c1), tol, check)
        }
        SubsolutionCmd::Perturb {
            eta,
            c1,
            check,
            tol,
        } => {
            // domain errors (eta out of range) are input errors; range errors are reported
            match perturbed_family(eta, c1) {
                Err(e @ Error::Domain(_)) => Err(e.into()),
                _ => fan_report(&perturbed_unchecked(eta, c1), tol, check),
            }
        }
        SubsolutionCmd::Interval { eta } => {
            let i = admissible_c1_interval(eta)?;
            let report = json!({
                "eta": eta,
                "display": i.to_string(),
                "interval": i,
            });
            Ok(Outcome {
                report,
                code: if i.is_empty() { EXIT_FAIL } else { EXIT_PASS },
            })
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("cannot write {}: {e}", path.display()))
}

fn pair_search(a: PairSearchArgs) -> CliResult {
    let mut config = match &a.grid {
        Some(p) => serde_json::from_str::<SearchConfig>(&read_to_string(p)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => SearchConfig::default(),
    };
    if let Some(v) = a.etas {
        config.etas = v.0;
    }
    if let Some(v) = a.c1s {
        config.c1s = v.0;
    }
    if let Some(v) = a.c1_tildes {
        config.c1_tildes = v.0;
    }
    if let Some(f) = a.floor {
        config.margin_floor = f;
    }
    let found = search_pairs(&config);
    let mut w = csv_writer(&a.output)?;
    let err = csv_err(&a.output);
    w.write_record([
        "eta",
        "C1",
        "C1_tilde",
        "separation_margin",
        "wedge_lo",
        "wedge_hi",
    ])
    .map_err(&err)?;
    for p in &found {
        let row = [
            p.eta,
            p.c1,
            p.c1_tilde,
            p.separation.margin,
            p.wedge.nu_minus,
            p.wedge.nu_plus,
        ]
        .map(fmt_float);
        w.write_record(&row).map_err(&err)?;
    }
    w.flush()
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", a.output.display())))?;
    let best = found
        .iter()
        .max_by(|x, y| x.separation.margin.total_cmp(&y.separation.margin));
    let report = json!({
        "grid_sizes": [config.etas.len(), config.c1s.len(),
            if config.c1_tildes.is_empty() { config.c1s.len() } else { config.c1_tildes.len() }],
        "margin_floor": config.margin_floor,
        "pairs": found.len(),
        "best": best,
        "output": a.output,
    });
    Ok(Outcome {
        report,
        code: EXIT_PASS,
    })
}

fn audit_cmd(a: AuditArgs) -> CliResult {
    let scenario = parse_scenario(&read_to_string(&a.scenario)?)?;
    let mut opts = AuditOptions {
        tests: a.tests,
        resolution: a.resolution,
        residual_tol: a.residual_tol,
        ..Default::default()
    };
    opts.selection.theta = a.theta;
    let mut scenario = scenario;
    if let Some(seed) = a.seed {
        scenario.seed = Some(seed);
    }
    let report = audit(&scenario, &opts)?;
    let code = if report.pass { EXIT_PASS } else { EXIT_FAIL };
    let value = to_value(&report);
    if let Some(p) = &a.output {
        let text = serde_json::to_string_pretty(&value).expect("report serializes");
        fs::write(p, text + "\n")
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(Outcome {
        report: value,
        code,
    })
}

fn rigidity(a: RigidityArgs) -> CliResult {
    let [s, t] = a.states[..] else {
        return Err(CliError::Input(format!(
            "--state: expected exactly 2 states, got {}",
            a.states.len()
        )));
    };
    let config = RigidityConfig {
        lambda: a.lambda,
        n_list: a.n_list,
        grid: a.grid,
        slice: !a.cube,
        delta0: a.delta0,
        profile: if a.smoothed {
            Profile::Smoothed
        } else {
            Profile::Indicator
        },
        ..Default::default()
    };
    let r = rigidity_experiment((s, t), &config)?;
    if let Some(p) = &a.output {
        let mut w = csv_writer(p)?;
        let err = csv_err(p);
        w.write_record(["n", "afree_residual", "d_n", "atom_mass_a", "atom_mass_b"])
            .map_err(&err)?;
        for row in &r.rows {
            let mut rec = vec![row.n.to_string()];
            rec.extend(
                [
                    row.afree_residual,
                    row.d_n,
                    row.atom_masses[0],
                    row.atom_masses[1],
                ]
                .map(fmt_float),
            );
            w.write_record(&rec).map_err(&err)?;
        }
        w.flush()
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display())))?;
    }
    if let Some(p) = &a.histogram {
        let mut w = csv_writer(p)?;
        let err = csv_err(p);
        w.write_record(["n", "bin_center", "mass"]).map_err(&err)?;
        for row in &r.rows {
            for [c, m] in &row.histogram {
                w.write_record([row.n.to_string(), fmt_float(*c), fmt_float(*m)])
                    .map_err(&err)?;
            }
        }
        w.flush()
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display())))?;
    }
    let code = if r.verdict == RigidityVerdict::Inconclusive {
        EXIT_FAIL
    } else {
        EXIT_PASS
    };
    Ok(Outcome {
        report: to_value(&r),
        code,
    })
}
