//! Scenario files, figure reproduction and CSV output.
//!
//! A scenario is a JSON document with `"schema": 1`, a base operating point,
//! a list of scans (each optionally overriding base fields) and an optional
//! trace section. All tables are computed before anything is written, and each
//! file is written atomically, so a failing scenario leaves no output behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::laws;
use crate::optimizer::{
    self, EvalOptions, OperatingPoint, ScanAxis, ScanRow, WeightPattern, Weights,
};
use crate::trace::{self, AnalyzerSettings, TraceTiming};

pub const SCHEMA_VERSION: u32 = 1;

/// Figure panels with a bundled scenario.
pub const FIGURES: [&str; 7] = ["fig2", "fig3a", "fig3b", "fig3c", "fig4", "fig5a", "fig5b"];

/// Bundled scenario source for a figure panel.
pub fn bundled(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2" => include_str!("../scenarios/fig2.json"),
        "fig3a" => include_str!("../scenarios/fig3a.json"),
        "fig3b" => include_str!("../scenarios/fig3b.json"),
        "fig3c" => include_str!("../scenarios/fig3c.json"),
        "fig4" => include_str!("../scenarios/fig4.json"),
        "fig5a" => include_str!("../scenarios/fig5a.json"),
        "fig5b" => include_str!("../scenarios/fig5b.json"),
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Numeric,
    Analytic,
    Oracle,
    Trace,
}

fn default_engines() -> Vec<Engine> {
    vec![Engine::Numeric, Engine::Analytic]
}

/// Grid of axis values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Grid {
    Values(Vec<f64>),
    Linear {
        start: f64,
        stop: f64,
        points: usize,
    },
    Log {
        start: f64,
        stop: f64,
        points: usize,
    },
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let spaced = |start: f64, stop: f64, points: usize, f: &dyn Fn(f64) -> f64| {
            if points == 0 {
                return Err(Error::config("grid", "needs at least one point"));
            }
            if points == 1 {
                return Ok(vec![f(0.0)]);
            }
            let _ = (start, stop);
            Ok((0..points)
                .map(|i| f(i as f64 / (points - 1) as f64))
                .collect())
        };
        let values = match *self {
            Grid::Values(ref v) => {
                if v.is_empty() {
                    return Err(Error::config("grid", "empty value list"));
                }
                v.clone()
            }
            Grid::Linear {
                start,
                stop,
                points,
            } => spaced(start, stop, points, &|u| start + (stop - start) * u)?,
            Grid::Log {
                start,
                stop,
                points,
            } => {
                if !(start > 0.0 && stop > 0.0) {
                    return Err(Error::config("grid", "log grid needs positive bounds"));
                }
                let (a, b) = (start.log10(), stop.log10());
                spaced(start, stop, points, &|u| 10f64.powf(a + (b - a) * u))?
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("grid", "values must be finite"));
        }
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::config("grid", "values must be strictly monotone"));
        }
        Ok(values)
    }
}

/// One scan: either an axis with a grid, or a list of weight patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<ScanAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patterns: Option<Vec<WeightPattern>>,
    /// Fields replacing those of the base operating point.
    #[serde(default)]
    pub overrides: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRun {
    pub label: String,
    #[serde(default)]
    pub overrides: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSpec {
    pub runs: Vec<TraceRun>,
    #[serde(default)]
    pub timing: TraceTiming,
    #[serde(default)]
    pub analyzer: AnalyzerSettings,
    /// Phase drive amplitude `δθ_j` applied to every sensor, rad.
    pub drive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default = "default_engines")]
    pub engines: Vec<Engine>,
    #[serde(default)]
    pub seed: u64,
    pub base: OperatingPoint,
    #[serde(default)]
    pub scans: Vec<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSpec>,
}

/// Parses scenario JSON, reporting syntax and schema errors with their position.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text)?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let scenario: Scenario = crate::error::read_json(path)?;
    scenario.validate()?;
    Ok(scenario)
}

fn apply_overrides(
    base: &OperatingPoint,
    overrides: &Map<String, Value>,
) -> Result<OperatingPoint> {
    if overrides.is_empty() {
        return Ok(base.clone());
    }
    let mut value = serde_json::to_value(base).map_err(|e| Error::config("base", e.to_string()))?;
    let obj = value
        .as_object_mut()
        .expect("operating point serializes to an object");
    for (k, v) in overrides {
        obj.insert(k.clone(), v.clone());
    }
    serde_json::from_value(value).map_err(|e| Error::config("overrides", e.to_string()))
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(
                "schema",
                format!(
                    "version {} is not supported (expected {SCHEMA_VERSION})",
                    self.schema
                ),
            ));
        }
        if self.scans.is_empty() && self.trace.is_none() {
            return Err(Error::config("scans", "scenario has nothing to run"));
        }
        if self.engines.is_empty() {
            return Err(Error::config("engines", "at least one engine"));
        }
        if self.engines.contains(&Engine::Trace) != self.trace.is_some() {
            return Err(Error::config(
                "engines",
                "the trace engine and the trace section go together",
            ));
        }
        let mut names = std::collections::BTreeSet::new();
        for scan in &self.scans {
            if !names.insert(scan.name.as_str()) {
                return Err(Error::config(
                    "scans",
                    format!("duplicate scan `{}`", scan.name),
                ));
            }
            let point = apply_overrides(&self.base, &scan.overrides)?;
            let points: Vec<OperatingPoint> = match (&scan.axis, &scan.grid, &scan.patterns) {
                (Some(axis), Some(grid), None) => grid
                    .points()?
                    .iter()
                    .map(|&x| axis.apply(&point, x))
                    .collect::<Result<_>>()?,
                (None, None, Some(p)) if !p.is_empty() => p
                    .iter()
                    .map(|&w| OperatingPoint {
                        weights: Weights::Pattern(w),
                        ..point.clone()
                    })
                    .collect(),
                _ => {
                    return Err(Error::config(
                        format!("scans.{}", scan.name),
                        "give either axis and grid, or a nonempty pattern list",
                    ))
                }
            };
            if self.engines.contains(&Engine::Oracle) {
                for p in &points {
                    if p.d > crate::fock::ORACLE_MAX_MODES
                        || (p.n_total.is_none() && p.r > crate::fock::ORACLE_MAX_R)
                    {
                        return Err(Error::config(
                            format!("scans.{}", scan.name),
                            "oracle engine needs d <= 3 and r <= 0.4",
                        ));
                    }
                }
            }
        }
        if let Some(t) = &self.trace {
            t.timing.validate()?;
            if t.runs.is_empty() {
                return Err(Error::config("trace.runs", "at least one run"));
            }
            if !(t.drive >= 0.0 && t.drive.is_finite()) {
                return Err(Error::config("trace.drive", "must be finite and >= 0"));
            }
            for run in &t.runs {
                apply_overrides(&self.base, &run.overrides)?;
            }
        }
        Ok(())
    }
}

/// A rendered CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file_name: String, header: &[&str]) -> Self {
        Self {
            file_name,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = line.iter().map(|c| csv_cell(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed numeric column; empty cells become `None`.
    pub fn numbers(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let c = self.column(name)?;
        Some(self.rows.iter().map(|r| r[c].parse().ok()).collect())
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace(['\n', '\r'], " "))
    } else {
        s.to_string()
    }
}

/// Scientific notation with 17 significant digits; non-finite values are empty.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Everything a scenario produced, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    /// Rows whose status is not `ok`.
    pub failed_rows: usize,
}

impl ScenarioOutput {
    pub fn table(&self, file_name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file_name == file_name)
    }

    /// Writes every table into `dir`, each file atomically.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(&t.file_name);
            let csv = t.to_csv();
            write_atomic(&path, |w| Ok(w.write_all(csv.as_bytes())?))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn scan_table(
    scenario: &Scenario,
    spec: &ScanSpec,
    point: &OperatingPoint,
) -> Result<(Table, Option<Table>, usize)> {
    let engines = &scenario.engines;
    let numeric = engines.contains(&Engine::Numeric);
    let analytic = engines.contains(&Engine::Analytic);
    let oracle = engines.contains(&Engine::Oracle);
    let options = EvalOptions { oracle };

    let (axis_name, labels, rows): (&str, Option<Vec<&str>>, Vec<ScanRow>) =
        match (&spec.axis, &spec.grid, &spec.patterns) {
            (Some(axis), Some(grid), _) => {
                let grid = grid.points()?;
                let rows = optimizer::scan_with(*axis, &grid, point, &options)?;
                (axis.name(), None, rows)
            }
            (_, _, Some(patterns)) => {
                let points: Vec<_> = patterns
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| {
                        let p = OperatingPoint {
                            weights: Weights::Pattern(w),
                            ..point.clone()
                        };
                        (i as f64, Ok(p))
                    })
                    .collect();
                let rows = optimizer::evaluate_all(&points, &options)?;
                (
                    "pattern",
                    Some(patterns.iter().map(|p| p.name()).collect()),
                    rows,
                )
            }
            _ => return Err(Error::config(format!("scans.{}", spec.name), "no grid")),
        };

    let with_limits = spec.axis == Some(ScanAxis::TotalPhotons);
    let mut header = vec![
        axis_name,
        "variance_numeric",
        "variance_closed_form",
        "variance_qcrb",
        "sql",
        "db_below_sql",
        "regime",
        "n_s_opt",
    ];
    if oracle {
        header.push("variance_oracle");
    }
    if with_limits {
        header.extend(["limit_low_n", "limit_heisenberg", "limit_loss_floor"]);
    }
    header.push("status");
    let mut table = Table::new(format!("{}_{}.csv", scenario.name, spec.name), &header);

    let lambda = point.loss_model().map(|m| m.lambda()).ok();
    let k = point.enhancement();
    let mut failed = 0;
    let mut curves = (Vec::new(), Vec::new(), Vec::new());
    for (i, row) in rows.iter().enumerate() {
        if !row.is_ok() {
            failed += 1;
        }
        let db = if numeric {
            row.db_below_sql
        } else {
            row.sql
                .zip(row.variance_closed_form)
                .map(|(s, v)| 10.0 * (s / v).log10())
        };
        let mut cells = vec![
            match &labels {
                Some(l) => l[i].to_string(),
                None => fmt_num(row.axis_value),
            },
            fmt_opt(row.variance_numeric.filter(|_| numeric)),
            fmt_opt(row.variance_closed_form.filter(|_| analytic)),
            fmt_opt(row.variance_qcrb.filter(|_| analytic)),
            fmt_opt(row.sql),
            fmt_opt(db),
            row.regime
                .map(|r| r.label().to_string())
                .unwrap_or_default(),
            fmt_opt(row.n_s_opt),
        ];
        if oracle {
            cells.push(fmt_opt(row.variance_oracle));
        }
        if with_limits {
            let limits = lambda.and_then(|l| laws::regime_limits(row.axis_value, l, k).ok());
            cells.push(fmt_opt(limits.map(|l| l.low_n)));
            cells.push(fmt_opt(limits.map(|l| l.heisenberg)));
            cells.push(fmt_opt(limits.map(|l| l.loss_floor)));
            if let Some(l) = limits {
                curves.0.push(row.axis_value.ln());
                curves.1.push((l.low_n / l.heisenberg).ln());
                curves.2.push((l.heisenberg / l.loss_floor).ln());
            }
        }
        cells.push(row.status.clone());
        table.rows.push(cells);
    }

    let mut summary = Vec::new();
    if spec.axis == Some(ScanAxis::EtaDis) {
        let xs: Vec<f64> = rows.iter().map(|r| r.axis_value).collect();
        let ys: Vec<f64> = rows
            .iter()
            .map(|r| r.db_below_sql.unwrap_or(f64::NAN))
            .collect();
        summary.push(("sub_sql_threshold", optimizer::crossover(&xs, &ys, 0.0)));
    }
    if with_limits {
        let (x, a, b) = &curves;
        summary.push((
            "crossover_low_n_heisenberg",
            optimizer::crossover(x, a, 0.0).map(f64::exp),
        ));
        summary.push((
            "crossover_heisenberg_loss_floor",
            optimizer::crossover(x, b, 0.0).map(f64::exp),
        ));
    }
    let summary_table = (!summary.is_empty()).then(|| {
        let mut t = Table::new(String::new(), &["scan", "quantity", "value"]);
        t.rows = summary
            .into_iter()
            .map(|(q, v)| vec![spec.name.clone(), q.to_string(), fmt_opt(v)])
            .collect();
        t
    });
    Ok((table, summary_table, failed))
}

/// Longest band-power excerpt written per run.
const BAND_POWER_ROWS: usize = 2000;

fn trace_tables(scenario: &Scenario, spec: &TraceSpec, seed: u64) -> Result<(Table, Table, usize)> {
    let mut results = Table::new(
        format!("{}.csv", scenario.name),
        &[
            "run",
            "d",
            "r",
            "K",
            "lambda",
            "model_db_below_sql",
            "trace_db_below_sql",
            "model_db_below_reference",
            "trace_db_below_reference",
            "trace_snr_gain_db",
            "snr_db",
            "snr_reference_db",
            "drive",
            "recovered_drive",
            "status",
        ],
    );
    let mut series = Table::new(
        format!("{}_band_power.csv", scenario.name),
        &["run", "time", "power_db", "reference_power_db"],
    );
    let mut failed = 0;
    for run in &spec.runs {
        let point = apply_overrides(&scenario.base, &run.overrides)?;
        let outcome = (|| -> Result<_> {
            let res = point.resolve()?;
            let drive = vec![spec.drive; res.config.d];
            let traces = trace::synthesize(&res.config, &drive, &spec.timing, seed)?;
            let (joint, main_bp, ref_bp) =
                trace::joint_noise_series(&traces, &res.nu, &res.config, &drive, &spec.analyzer)?;
            Ok((res, joint, main_bp, ref_bp))
        })();
        match outcome {
            Ok((res, joint, main_bp, ref_bp)) => {
                // same-K SQL is the reference run's noise divided by k
                let model_db = laws::db_below_sql(res.r, res.lambda);
                let k_db = 10.0 * res.k.log10();
                let joint_drive: f64 = res.nu.iter().map(|w| w * spec.drive).sum();
                results.rows.push(vec![
                    run.label.clone(),
                    res.config.d.to_string(),
                    fmt_num(res.r),
                    res.config.passes.to_string(),
                    fmt_num(res.lambda),
                    fmt_num(model_db),
                    fmt_num(joint.db_below_sql - k_db),
                    fmt_num(model_db + k_db),
                    fmt_num(joint.db_below_sql),
                    fmt_num(joint.snr_gain_db),
                    fmt_num(joint.snr_db),
                    fmt_num(joint.snr_reference_db),
                    fmt_num(joint_drive.abs()),
                    fmt_num(joint.recovered_drive),
                    "ok".into(),
                ]);
                let in_first_cycle = main_bp
                    .times
                    .iter()
                    .take_while(|&&t| t <= spec.timing.cycle)
                    .count();
                let stride = in_first_cycle.div_ceil(BAND_POWER_ROWS).max(1);
                let main_db = main_bp.db();
                let ref_db = ref_bp.db();
                for i in (0..in_first_cycle).step_by(stride) {
                    series.rows.push(vec![
                        run.label.clone(),
                        fmt_num(main_bp.times[i]),
                        fmt_num(main_db[i]),
                        fmt_num(ref_db[i]),
                    ]);
                }
            }
            Err(e) => {
                failed += 1;
                let mut row = vec![String::new(); results.header.len()];
                row[0] = run.label.clone();
                *row.last_mut().expect("nonempty header") = format!("error: {e}");
                results.rows.push(row);
            }
        }
    }
    Ok((results, series, failed))
}

/// Runs every scan and the trace section. `seed` overrides the scenario seed.
pub fn run_scenario(scenario: &Scenario, seed: Option<u64>) -> Result<ScenarioOutput> {
    scenario.validate()?;
    let mut tables = Vec::new();
    let mut failed_rows = 0;
    let mut summary = Table::new(
        format!("{}_summary.csv", scenario.name),
        &["scan", "quantity", "value"],
    );
    for spec in &scenario.scans {
        let point = apply_overrides(&scenario.base, &spec.overrides)?;
        let (table, extra, failed) = scan_table(scenario, spec, &point)?;
        failed_rows += failed;
        tables.push(table);
        if let Some(t) = extra {
            summary.rows.extend(t.rows);
        }
    }
    if !summary.rows.is_empty() {
        tables.push(summary);
    }
    if let Some(spec) = &scenario.trace {
        let (results, series, failed) =
            trace_tables(scenario, spec, seed.unwrap_or(scenario.seed))?;
        failed_rows += failed;
        tables.push(results);
        tables.push(series);
    }
    Ok(ScenarioOutput {
        tables,
        failed_rows,
    })
}

/// Runs the bundled scenario of a figure panel.
pub fn reproduce(figure: &str, seed: Option<u64>) -> Result<ScenarioOutput> {
    let text = bundled(figure).ok_or_else(|| {
        Error::config(
            "figure",
            format!(
                "unknown figure `{figure}`; expected one of {}",
                FIGURES.join(", ")
            ),
        )
    })?;
    run_scenario(&parse_scenario(text)?, seed)
}
