//! Versioned JSON scenarios and the audit that turns them into reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fan::{check_conditions_with, ConditionReport, ConditionTolerance, FanSubsolution};
use crate::lifted::{lift, LiftedState, State, QUADRATIC_PRESSURE};
use crate::rigidity::{rigidity_experiment, RigidityConfig, RigidityReport, RigidityVerdict};
use crate::weak::{
    entropy_jump_residual, rh_residual, verify_subsolution, PiecewiseFan, TestFunctionSet, Verdict,
};
use crate::young::{
    admissibility_residual, mvs_residual, selection_verdict, AtomField, RegionGrid,
    SelectionOptions, SelectionVerdict, TwoAtomYM,
};

pub const SCHEMA_MAJOR: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub entries: Vec<Entry>,
}

fn default_gamma() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Entry {
    Fan {
        id: String,
        #[serde(flatten)]
        params: FanSubsolution,
    },
    State {
        id: String,
        rho: f64,
        u: [f64; 2],
    },
    Ym {
        id: String,
        lambda: f64,
        atom_a: String,
        atom_b: String,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Experiment {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        kind: String,
        #[serde(default)]
        params: Value,
    },
}

impl Entry {
    pub fn id(&self) -> Option<&str> {
        match self {
            Entry::Fan { id, .. } | Entry::State { id, .. } | Entry::Ym { id, .. } => Some(id),
            Entry::Experiment { id, .. } => id.as_deref(),
        }
    }
}

/// Parameters of an experiment of kind `rigidity`; `a` and `b` name states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidityParams {
    pub a: String,
    pub b: String,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub n_list: Option<Vec<u32>>,
    #[serde(default)]
    pub grid: Option<usize>,
}

pub const EXPERIMENT_KINDS: [&str; 1] = ["rigidity"];

fn major_version(v: &str) -> Option<u64> {
    let mut parts = v.split('.');
    let major = parts.next()?.parse().ok()?;
    let rest: Vec<&str> = parts.collect();
    (rest.len() == 2 && rest.iter().all(|p| p.parse::<u64>().is_ok())).then_some(major)
}

fn finite_problems(v: &Value, path: &str, out: &mut Vec<String>) {
    match v {
        Value::Number(n) if n.as_f64().is_none_or(|x| !x.is_finite()) => {
            out.push(format!("{path}: number is not finite"))
        }
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, x)| finite_problems(x, &format!("{path}[{i}]"), out)),
        Value::Object(o) => o
            .iter()
            .for_each(|(k, x)| finite_problems(x, &format!("{path}.{k}"), out)),
        _ => {}
    }
}

/// Parses and validates a scenario, reporting every schema violation found.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: Value = serde_json::from_str(text).map_err(|e| {
        Error::Schema(vec![format!(
            "line {} column {}: {e}",
            e.line(),
            e.column()
        )])
    })?;
    let mut problems = Vec::new();
    let Some(obj) = raw.as_object() else {
        return Err(Error::Schema(vec!["top level must be an object".into()]));
    };
    for key in obj.keys() {
        if !["version", "seed", "entries"].contains(&key.as_str()) {
            problems.push(format!("unknown top-level field '{key}'"));
        }
    }
    let version = match obj.get("version") {
        Some(Value::String(s)) => match major_version(s) {
            Some(SCHEMA_MAJOR) => Some(s.clone()),
            Some(m) => {
                problems.push(format!(
                    "version: unsupported major version {m} (expected {SCHEMA_MAJOR})"
                ));
                None
            }
            None => {
                problems.push(format!("version: '{s}' is not a semantic version"));
                None
            }
        },
        Some(_) => {
            problems.push("version: must be a string".into());
            None
        }
        None => {
            problems.push("version: missing".into());
            None
        }
    };
    let seed = match obj.get("seed") {
        None | Some(Value::Null) => None,
        Some(v) => v.as_u64().or_else(|| {
            problems.push("seed: must be a nonnegative integer".into());
            None
        }),
    };
    let mut entries = Vec::new();
    match obj.get("entries") {
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                finite_problems(item, &format!("entries[{i}]"), &mut problems);
                match serde_json::from_value::<Entry>(item.clone()) {
                    Ok(e) => entries.push((i, e)),
                    Err(e) => problems.push(format!("entries[{i}]: {e}")),
                }
            }
        }
        Some(_) => problems.push("entries: must be an array".into()),
        None => problems.push("entries: missing".into()),
    }

    let mut kinds: BTreeMap<String, &'static str> = BTreeMap::new();
    for (i, e) in &entries {
        if let Some(id) = e.id() {
            let kind = match e {
                Entry::Fan { .. } => "fan",
                Entry::State { .. } => "state",
                Entry::Ym { .. } => "ym",
                Entry::Experiment { .. } => "experiment",
            };
            if kinds.insert(id.to_string(), kind).is_some() {
                problems.push(format!("entries[{i}]: duplicate id '{id}'"));
            }
        }
    }
    for (i, e) in &entries {
        match e {
            Entry::Ym { atom_a, atom_b, .. } => {
                for (field, r) in [("atom_a", atom_a), ("atom_b", atom_b)] {
                    match kinds.get(r.as_str()) {
                        Some(&"fan") | Some(&"state") => {}
                        Some(k) => problems.push(format!(
                            "entries[{i}].{field}: '{r}' is a {k}, not a fan or state"
                        )),
                        None => problems.push(format!("entries[{i}].{field}: unknown id '{r}'")),
                    }
                }
            }
            Entry::Experiment { kind, params, .. } => {
                if kind == "rigidity" {
                    match serde_json::from_value::<RigidityParams>(params.clone()) {
                        Ok(p) => {
                            for (field, r) in [("a", &p.a), ("b", &p.b)] {
                                if kinds.get(r.as_str()) != Some(&"state") {
                                    problems.push(format!(
                                        "entries[{i}].params.{field}: '{r}' is not a state id"
                                    ));
                                }
                            }
                        }
                        Err(err) => problems.push(format!("entries[{i}].params: {err}")),
                    }
                } else {
                    problems.push(format!(
                        "entries[{i}].kind: unknown experiment kind '{kind}' (known: {})",
                        EXPERIMENT_KINDS.join(", ")
                    ));
                }
            }
            _ => {}
        }
    }
    match version {
        Some(version) if problems.is_empty() => Ok(Scenario {
            version,
            seed,
            entries: entries.into_iter().map(|(_, e)| e).collect(),
        }),
        _ => Err(Error::Schema(problems)),
    }
}

pub fn to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(s).expect("scenario serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub seed: u64,
    /// Random bumps per measure, in addition to one per ray.
    pub tests: usize,
    pub resolution: usize,
    /// Bound on measure-valued and admissibility residuals for a pass.
    pub residual_tol: f64,
    pub selection: SelectionOptions,
    pub grid_nt: usize,
    pub grid_nx2: usize,
    pub condition_tol: ConditionTolerance,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            seed: 7,
            tests: 20,
            resolution: 256,
            residual_tol: 1e-6,
            selection: SelectionOptions::default(),
            grid_nt: 64,
            grid_nx2: 256,
            condition_tol: ConditionTolerance::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub schema_version: String,
    pub options: AuditOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EntryReport {
    Fan {
        id: String,
        pass: bool,
        conditions: ConditionReport,
        verification: Verdict,
        rh_residual: [[f64; 3]; 2],
        entropy_margins: [f64; 2],
    },
    State {
        id: String,
        lifted: LiftedState,
    },
    Ym {
        id: String,
        pass: bool,
        mvs_residual: f64,
        admissibility_residual: f64,
        selection: SelectionVerdict,
        /// How the energy flux of the measure is averaged.
        flux_convention: String,
    },
    Experiment {
        id: Option<String>,
        kind: String,
        pass: bool,
        rigidity: RigidityReport,
    },
}

impl EntryReport {
    pub fn pass(&self) -> bool {
        match self {
            EntryReport::Fan { pass, .. }
            | EntryReport::Ym { pass, .. }
            | EntryReport::Experiment { pass, .. } => *pass,
            EntryReport::State { .. } => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub provenance: Provenance,
    pub pass: bool,
    pub entries: Vec<EntryReport>,
}

impl Report {
    pub fn ym(&self, id: &str) -> Option<&EntryReport> {
        self.entries
            .iter()
            .find(|e| matches!(e, EntryReport::Ym { id: i, .. } if i == id))
    }
}

pub const FLUX_CONVENTION: &str =
    "atomwise: lambda-weighted sum of each atom's (rho|u|^2/2 + gamma/(gamma-1) rho^gamma) u";

/// Audits every entry. A scenario-level seed overrides the option seed.
pub fn audit(s: &Scenario, opts: &AuditOptions) -> Result<Report> {
    let mut opts = opts.clone();
    if let Some(seed) = s.seed {
        opts.seed = seed;
    }
    let mut fans: BTreeMap<&str, FanSubsolution> = BTreeMap::new();
    let mut states: BTreeMap<&str, State> = BTreeMap::new();
    for e in &s.entries {
        match e {
            Entry::Fan { id, params } => {
                fans.insert(id, *params);
            }
            Entry::State { id, rho, u } => {
                states.insert(id, State::new(*rho, *u));
            }
            _ => {}
        }
    }
    let atom = |r: &str| -> AtomField {
        match fans.get(r) {
            Some(f) => AtomField::Fan(*f),
            None => AtomField::Constant(states[r]),
        }
    };

    let mut reports = Vec::new();
    for e in &s.entries {
        let report = match e {
            Entry::Fan { id, params } => {
                let conditions = check_conditions_named(id, params, &opts)?;
                let verification = verify_subsolution(params);
                let fan = PiecewiseFan::from_subsolution(params);
                EntryReport::Fan {
                    id: id.clone(),
                    pass: conditions.overall && verification.pass,
                    conditions,
                    verification,
                    rh_residual: rh_residual(&fan),
                    entropy_margins: entropy_jump_residual(&fan),
                }
            }
            Entry::State { id, rho, u } => EntryReport::State {
                id: id.clone(),
                lifted: lift(&State::new(*rho, *u), QUADRATIC_PRESSURE)
                    .map_err(|err| Error::Domain(format!("state '{id}': {err}")))?,
            },
            Entry::Ym {
                id,
                lambda,
                atom_a,
                atom_b,
                gamma,
            } => {
                let ym = TwoAtomYM::new(*lambda, atom(atom_a), atom(atom_b), *gamma)
                    .map_err(|err| Error::Domain(format!("ym '{id}': {err}")))?;
                audit_ym(id, &ym, &opts)?
            }
            Entry::Experiment { id, kind, params } => {
                let p: RigidityParams = serde_json::from_value(params.clone())
                    .map_err(|err| Error::Schema(vec![format!("experiment {kind}: {err}")]))?;
                let defaults = RigidityConfig::default();
                let config = RigidityConfig {
                    lambda: p.lambda.unwrap_or(defaults.lambda),
                    n_list: p.n_list.clone().unwrap_or(defaults.n_list.clone()),
                    grid: p.grid.unwrap_or(64),
                    ..defaults
                };
                let rigidity =
                    rigidity_experiment((states[p.a.as_str()], states[p.b.as_str()]), &config)?;
                EntryReport::Experiment {
                    id: id.clone(),
                    kind: kind.clone(),
                    pass: rigidity.verdict != RigidityVerdict::Inconclusive,
                    rigidity,
                }
            }
        };
        reports.push(report);
    }
    Ok(Report {
        provenance: Provenance {
            tool: "eulerwave".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            schema_version: s.version.clone(),
            options: opts,
        },
        pass: reports.iter().all(EntryReport::pass),
        entries: reports,
    })
}

fn check_conditions_named(
    id: &str,
    f: &FanSubsolution,
    opts: &AuditOptions,
) -> Result<ConditionReport> {
    check_conditions_with(f, opts.condition_tol)
        .map_err(|err| Error::Domain(format!("fan '{id}': {err}")))
}

fn audit_ym(id: &str, ym: &TwoAtomYM, opts: &AuditOptions) -> Result<EntryReport> {
    let speeds = ym.speeds();
    let (lo, hi) = match (speeds.first(), speeds.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (-1.0, 1.0),
    };
    let mut tests =
        TestFunctionSet::random(opts.tests, opts.seed, (lo - 0.3, hi + 0.3), opts.resolution)?;
    tests
        .bumps
        .extend(TestFunctionSet::on_rays(&speeds, opts.resolution)?.bumps);
    let mvs = mvs_residual(ym, None, &tests);
    let adm = admissibility_residual(ym, None, &tests);
    let grid = RegionGrid {
        nt: opts.grid_nt,
        nx2: opts.grid_nx2,
        ..RegionGrid::around(&speeds)
    };
    let selection = selection_verdict(ym, &grid, &opts.selection)?;
    Ok(EntryReport::Ym {
        id: id.to_string(),
        pass: mvs <= opts.residual_tol && adm <= opts.residual_tol,
        mvs_residual: mvs,
        admissibility_residual: adm,
        selection,
        flux_convention: FLUX_CONVENTION.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "version": "1.0.0",
        "entries": [
            {"type": "state", "id": "a", "rho": 2, "u": [1, 1]},
            {"type": "state", "id": "b", "rho": 2, "u": [0, 3]},
            {"type": "ym", "id": "mix", "lambda": 0.5, "atom_a": "a", "atom_b": "b"}
        ]
    }"#;

    #[test]
    fn parse_and_round_trip() {
        let s = parse_scenario(SMALL).unwrap();
        assert_eq!(s.entries.len(), 3);
        let again = parse_scenario(&to_json(&s)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn errors_are_collected() {
        let text = r#"{
            "version": "2.0.0",
            "entries": [
                {"type": "state", "id": "a", "rho": 1, "u": [0, 0]},
                {"type": "state", "id": "a", "rho": 1, "u": [0, 0]},
                {"type": "ym", "id": "m", "lambda": 0.5, "atom_a": "a", "atom_b": "zz"},
                {"type": "state", "id": "c", "rho": "x", "u": [0, 0]},
                {"type": "experiment", "kind": "warp", "params": {}}
            ]
        }"#;
        let Err(Error::Schema(p)) = parse_scenario(text) else {
            panic!()
        };
        assert_eq!(p.len(), 5, "{p:#?}");
        assert!(p[0].contains("major version 2"));
    }

    #[test]
    fn malformed_json_reports_position() {
        let Err(Error::Schema(p)) = parse_scenario("{\"version\": ") else {
            panic!()
        };
        assert!(p[0].starts_with("line 1"));
    }

    #[test]
    fn zero_lambda_names_the_measure() {
        let text = SMALL.replace("\"lambda\": 0.5", "\"lambda\": 0");
        let s = parse_scenario(&text).unwrap();
        match audit(
            &s,
            &AuditOptions {
                resolution: 32,
                ..Default::default()
            },
        ) {
            Err(Error::Domain(m)) => assert!(m.contains("ym 'mix'"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equal_density_audit_is_inconclusive() {
        let s = parse_scenario(SMALL).unwrap();
        let r = audit(
            &s,
            &AuditOptions {
                resolution: 32,
                ..Default::default()
            },
        )
        .unwrap();
        let Some(EntryReport::Ym {
            selection,
            mvs_residual,
            ..
        }) = r.ym("mix")
        else {
            panic!()
        };
        assert_eq!(selection.verdict, crate::young::Selection::Inconclusive);
        assert!(*mvs_residual < 1e-12);
    }

    #[test]
    fn versions() {
        assert_eq!(major_version("1.2.3"), Some(1));
        assert_eq!(major_version("1.2"), None);
        assert_eq!(major_version("x.0.0"), None);
    }
}
