//! Scenario, acceptance-set and dual-sample files.
//!
//! Scenario files are JSON, or CSV with a JSON sidecar holding the initial
//! values. Errors carry the file name plus a line or field path.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::acceptance::{AcceptanceSet, DualMeasure};
use crate::error::{Result, RiskError};
use crate::scenario::{EligibleAsset, Payoff, Position, ScenarioSpace};

fn input_error(source: &str, message: impl Into<String>) -> RiskError {
    RiskError::Input {
        source_name: source.to_string(),
        message: message.into(),
    }
}

fn json_error(source: &str, e: &serde_json::Error) -> RiskError {
    input_error(source, format!("line {}, column {}: {e}", e.line(), e.column()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| input_error(&path.display().to_string(), format!("cannot read file: {e}")))
}

/// Everything a scenario file defines.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub space: ScenarioSpace,
    pub positions: BTreeMap<String, Position>,
    pub assets: BTreeMap<String, EligibleAsset>,
}

impl ScenarioFile {
    pub fn position(&self, name: &str) -> Result<&Position> {
        self.positions.get(name).ok_or_else(|| {
            input_error(
                "scenarios",
                format!(
                    "no position named {name:?}; available: {}",
                    self.positions.keys().cloned().collect::<Vec<_>>().join(", ")
                ),
            )
        })
    }

    pub fn asset(&self, name: &str) -> Result<&EligibleAsset> {
        self.assets.get(name).ok_or_else(|| {
            input_error(
                "scenarios",
                format!(
                    "no asset named {name:?}; available: {}",
                    self.assets.keys().cloned().collect::<Vec<_>>().join(", ")
                ),
            )
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPosition {
    initial_value: f64,
    payoff: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAsset {
    initial_price: f64,
    payoff: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenarioFile {
    probabilities: Vec<f64>,
    #[serde(default)]
    positions: BTreeMap<String, RawPosition>,
    #[serde(default)]
    assets: BTreeMap<String, RawAsset>,
}

fn payoff_at(source: &str, field: &str, values: Vec<f64>, n: usize) -> Result<Payoff> {
    if values.len() != n {
        return Err(input_error(
            source,
            format!("{field}: expected {n} values, found {}", values.len()),
        ));
    }
    Payoff::new(values).map_err(|e| input_error(source, format!("{field}: {e}")))
}

fn assemble(
    source: &str,
    probabilities: Vec<f64>,
    positions: Vec<(String, f64, Vec<f64>)>,
    assets: Vec<(String, f64, Vec<f64>)>,
) -> Result<ScenarioFile> {
    let space = ScenarioSpace::new(probabilities)
        .map_err(|e| input_error(source, format!("probabilities: {e}")))?;
    let n = space.len();
    let mut out = ScenarioFile {
        space,
        positions: BTreeMap::new(),
        assets: BTreeMap::new(),
    };
    for (name, x0, values) in positions {
        let payoff = payoff_at(source, &format!("positions.{name}.payoff"), values, n)?;
        let pos = Position::new(x0, payoff)
            .map_err(|e| input_error(source, format!("positions.{name}.initial_value: {e}")))?;
        out.positions.insert(name, pos);
    }
    for (name, s0, values) in assets {
        let payoff = payoff_at(source, &format!("assets.{name}.payoff"), values, n)?;
        let asset = EligibleAsset::new(s0, payoff)
            .map_err(|e| input_error(source, format!("assets.{name}: {e}")))?;
        out.assets.insert(name, asset);
    }
    Ok(out)
}

pub fn parse_scenario_json(text: &str, source: &str) -> Result<ScenarioFile> {
    let raw: RawScenarioFile = serde_json::from_str(text).map_err(|e| json_error(source, &e))?;
    assemble(
        source,
        raw.probabilities,
        raw.positions
            .into_iter()
            .map(|(k, v)| (k, v.initial_value, v.payoff))
            .collect(),
        raw.assets
            .into_iter()
            .map(|(k, v)| (k, v.initial_price, v.payoff))
            .collect(),
    )
}

/// Initial values for the columns of a CSV scenario file. Columns named under
/// `assets` are eligible assets, the rest positions.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    #[serde(default)]
    positions: BTreeMap<String, f64>,
    #[serde(default)]
    assets: BTreeMap<String, f64>,
}

/// Parses `scenario,probability,<name>,...` rows, one per scenario.
pub fn parse_scenario_csv(
    text: &str,
    source: &str,
    sidecar: &str,
    sidecar_source: &str,
) -> Result<ScenarioFile> {
    let meta: Sidecar = serde_json::from_str(sidecar).map_err(|e| json_error(sidecar_source, &e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| input_error(source, format!("line 1: {e}")))?
        .clone();
    if headers.len() < 3 || &headers[0] != "scenario" || &headers[1] != "probability" {
        return Err(input_error(
            source,
            "line 1: header must start with \"scenario,probability\" followed by at least one column",
        ));
    }
    let names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    for name in &names {
        match (meta.positions.contains_key(name), meta.assets.contains_key(name)) {
            (false, false) => {
                return Err(input_error(
                    sidecar_source,
                    format!("column {name:?} has no initial value under \"positions\" or \"assets\""),
                ))
            }
            (true, true) => {
                return Err(input_error(
                    sidecar_source,
                    format!("column {name:?} is listed both as a position and as an asset"),
                ))
            }
            _ => {}
        }
    }
    for name in meta.positions.keys().chain(meta.assets.keys()) {
        if !names.contains(name) {
            return Err(input_error(
                sidecar_source,
                format!("{name:?} does not match any CSV column"),
            ));
        }
    }

    let mut probabilities = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            input_error(source, format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |k: usize, field: &str| -> Result<f64> {
            let cell = &record[k];
            cell.parse::<f64>().map_err(|_| {
                input_error(
                    source,
                    format!("line {line}, field {field:?}: cannot parse {cell:?} as a number"),
                )
            })
        };
        probabilities.push(number(1, "probability")?);
        for (j, name) in names.iter().enumerate() {
            columns[j].push(number(j + 2, name)?);
        }
    }
    if probabilities.is_empty() {
        return Err(input_error(source, "no scenario rows after the header"));
    }

    let mut positions = Vec::new();
    let mut assets = Vec::new();
    for (name, values) in names.into_iter().zip(columns) {
        if let Some(&s0) = meta.assets.get(&name) {
            assets.push((name, s0, values));
        } else {
            let x0 = meta.positions[&name];
            positions.push((name, x0, values));
        }
    }
    assemble(source, probabilities, positions, assets)
}

/// Default sidecar location for a CSV file: `name.csv` → `name.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Loads a scenario file, dispatching on the `.csv` extension. CSV files use
/// `sidecar` or, when absent, the default sidecar next to them.
pub fn load_scenarios(path: &Path, sidecar: Option<&Path>) -> Result<ScenarioFile> {
    let source = path.display().to_string();
    let text = read(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let meta_path = sidecar.map_or_else(|| sidecar_path(path), Path::to_path_buf);
        let meta = read(&meta_path)?;
        parse_scenario_csv(&text, &source, &meta, &meta_path.display().to_string())
    } else {
        parse_scenario_json(&text, &source)
    }
}

/// Acceptance-set configuration.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetConfig {
    Var {
        alpha: f64,
    },
    Es {
        alpha: f64,
    },
    Generator {
        generators: Vec<Vec<f64>>,
        bounds: Vec<f64>,
    },
}

impl SetConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| json_error(source, &e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?, &path.display().to_string())
    }

    /// Replaces the level of VaR and ES configurations.
    pub fn with_alpha(self, level: f64) -> Result<Self> {
        match self {
            SetConfig::Var { .. } => Ok(SetConfig::Var { alpha: level }),
            SetConfig::Es { .. } => Ok(SetConfig::Es { alpha: level }),
            SetConfig::Generator { .. } => Err(input_error(
                "--alpha",
                "generator sets have no probability level",
            )),
        }
    }

    pub fn build(&self, space: &ScenarioSpace, source: &str) -> Result<AcceptanceSet> {
        let wrap = |field: &str, e: RiskError| input_error(source, format!("{field}: {e}"));
        match self {
            SetConfig::Var { alpha } => {
                AcceptanceSet::value_at_risk(space, *alpha).map_err(|e| wrap("alpha", e))
            }
            SetConfig::Es { alpha } => {
                AcceptanceSet::expected_shortfall(space, *alpha).map_err(|e| wrap("alpha", e))
            }
            SetConfig::Generator { generators, bounds } => {
                let mut measures = Vec::with_capacity(generators.len());
                for (j, g) in generators.iter().enumerate() {
                    let field = format!("generators[{j}]");
                    if g.len() != space.len() {
                        return Err(input_error(
                            source,
                            format!("{field}: expected {} weights, found {}", space.len(), g.len()),
                        ));
                    }
                    measures.push(DualMeasure::new(g.clone()).map_err(|e| wrap(&field, e))?);
                }
                AcceptanceSet::generator(space, measures, bounds.clone())
                    .map_err(|e| wrap("generators", e))
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDualSample {
    measures: Vec<Vec<f64>>,
}

pub fn parse_dual_sample(text: &str, source: &str, space: &ScenarioSpace) -> Result<Vec<DualMeasure>> {
    let raw: RawDualSample = serde_json::from_str(text).map_err(|e| json_error(source, &e))?;
    raw.measures
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            if w.len() != space.len() {
                return Err(input_error(
                    source,
                    format!("measures[{i}]: expected {} weights, found {}", space.len(), w.len()),
                ));
            }
            DualMeasure::new(w).map_err(|e| input_error(source, format!("measures[{i}]: {e}")))
        })
        .collect()
}

pub fn load_dual_sample(path: &Path, space: &ScenarioSpace) -> Result<Vec<DualMeasure>> {
    parse_dual_sample(&read(path)?, &path.display().to_string(), space)
}
