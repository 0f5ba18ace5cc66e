//! Library behind the `sim` command: config ingestion, deterministic run
//! records, parameter sweeps and figure tables.

pub mod config;
pub mod error;
pub mod exec;
pub mod format;

use std::io::Write;
use std::path::Path;

use rindler_core::figures::{self, FigureId};
use serde_json::{json, Map, Value};

pub use config::{Kind, OutputFormat, ScenarioConfig};
pub use error::CliError;
pub use exec::{Execution, RunOptions};
use format::{Cell, Table};

pub const TOOL_NAME: &str = "sim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fails when a parameter still carries a `range`/`values` object.
fn reject_ranges(cfg: &ScenarioConfig) -> Result<(), CliError> {
    for (k, v) in &cfg.parameters {
        if config::ranged_values(v)?.is_some() {
            return Err(CliError::validation("no ranged parameters", format!("parameter `{k}` is ranged; use `sim sweep`")));
        }
    }
    Ok(())
}

pub fn validate(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Value, CliError> {
    reject_ranges(cfg)?;
    let checked = exec::validate(cfg.kind, cfg.params(), opts)?;
    Ok(json!({ "valid": true, "kind": cfg.kind.name(), "checked": checked }))
}

/// Full run record: tool, seed, echoed config, results and derived values.
/// Wall time is only included on request since it breaks byte equality.
pub fn run_record(cfg: &ScenarioConfig, opts: RunOptions, wall_time: bool) -> Result<(Value, Execution), CliError> {
    reject_ranges(cfg)?;
    let start = std::time::Instant::now();
    let ex = exec::execute(cfg.kind, cfg.params(), opts)?;
    let mut record = json!({
        "tool": { "name": TOOL_NAME, "version": TOOL_VERSION },
        "seed": opts.seed,
        "config": cfg.raw,
        "results": ex.results,
        "derived": ex.derived,
    });
    if wall_time {
        record["wall_time_s"] = json!(start.elapsed().as_secs_f64());
    }
    Ok((record, ex))
}

/// What a command produced, before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub json: Option<String>,
    pub csv: Option<String>,
}

pub fn run(cfg: &ScenarioConfig, opts: RunOptions, wall_time: bool) -> Result<Artifacts, CliError> {
    let (record, ex) = run_record(cfg, opts, wall_time)?;
    let json = Some(format::to_json_string(&record));
    let csv = Some(ex.table.to_csv());
    Ok(match cfg.output.as_ref().map(|o| o.format) {
        None | Some(OutputFormat::Json) => Artifacts { json, csv: None },
        Some(OutputFormat::Csv) => Artifacts { json: None, csv },
        Some(OutputFormat::JsonCsv) => Artifacts { json, csv },
    })
}

/// Cartesian sweep over one or two ranged parameters. Rows follow the
/// order in which the ranged parameters appear in the config, the first
/// one outermost. Rows whose point violates an invariant are kept with the
/// error in `status`.
pub fn sweep(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Table, CliError> {
    let mut ranged: Vec<(String, Vec<f64>)> = Vec::new();
    for (k, v) in &cfg.parameters {
        if let Some(values) = config::ranged_values(v)? {
            ranged.push((k.clone(), values));
        }
    }
    if ranged.is_empty() || ranged.len() > 2 {
        return Err(CliError::validation(
            "one or two ranged parameters",
            format!("sweep needs one or two ranged parameters, found {}", ranged.len()),
        ));
    }
    let columns = exec::summary_columns(cfg.kind);
    let mut table = Table::new(ranged.iter().map(|(k, _)| k.clone()).chain(["status".to_string()]).chain(columns.iter().map(|c| c.to_string())));

    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for (_, values) in &ranged {
        points = points.into_iter().flat_map(|p| values.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
    }
    if ranged.iter().any(|(_, v)| v.is_empty()) {
        points.clear();
    }
    // validate every point before computing any
    let point_params = |point: &[f64]| -> Map<String, Value> {
        let mut m = cfg.parameters.clone();
        for ((k, _), v) in ranged.iter().zip(point) {
            m.insert(k.clone(), json!(v));
        }
        m
    };
    if cfg.kind == Kind::UnruhSweep {
        for point in &points {
            let m = point_params(point);
            if config::Params(&m).num_list("alpha")?.is_some_and(|a| a.len() != 1) {
                return Err(CliError::parse("`alpha` must be a single value or the ranged parameter in a sweep"));
            }
        }
    }
    for point in &points {
        let m = point_params(point);
        let mut row: Vec<Cell> = point.iter().map(|v| Cell::Num(*v)).collect();
        match exec::execute(cfg.kind, config::Params(&m), opts) {
            Ok(ex) => {
                row.push("ok".into());
                row.extend(ex.summary.into_iter().map(|(_, c)| c));
            }
            Err(e @ (CliError::Validation { .. } | CliError::Solver(_))) => {
                let status = match e.invariant() {
                    Some(inv) => format!("{}: {inv}", e.code()),
                    None => e.code().to_string(),
                };
                row.push(status.into());
                row.extend(columns.iter().map(|_| Cell::Empty));
            }
            Err(e) => return Err(e),
        }
        table.push(row);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureOptions {
    pub x0: f64,
    pub alpha1: f64,
    pub samples: usize,
    pub rs: f64,
    pub r0: f64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions { x0: 1.0, alpha1: 1.5, samples: 201, rs: 1.0, r0: 1e5 }
    }
}

pub fn figure(id: FigureId, opts: &FigureOptions) -> Result<Table, CliError> {
    Ok(match id {
        FigureId::A2 => {
            let mut t = Table::new(["X", "Y", "phi"]);
            for r in figures::a2_default_rows() {
                t.push(vec![r.x.into(), r.y.into(), r.phi.into()]);
            }
            t
        }
        FigureId::Worldlines => {
            let mut t = Table::new(["series", "t", "x"]);
            for r in figures::worldline_rows(opts.x0, opts.alpha1, opts.samples)? {
                t.push(vec![r.series.into(), r.t.into(), r.x.into()]);
            }
            t
        }
        FigureId::TauVsR => {
            let mut t = Table::new(["r", "tau"]);
            for r in figures::tau_vs_r_rows(opts.rs, opts.r0)? {
                t.push(vec![r.r.into(), r.tau.into()]);
            }
            t
        }
    })
}

/// Writes through a temporary sibling file so a failed write never leaves
/// a truncated output behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!("{}.tmp", path.extension().and_then(|e| e.to_str()).unwrap_or("out")));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v: Value) -> ScenarioConfig {
        ScenarioConfig::from_value(v, Path::new(".")).unwrap()
    }

    #[test]
    fn run_rejects_ranges_and_sweep_requires_them() {
        let c = cfg(json!({"version": 1, "kind": "kinematics", "parameters": {"x0": 1.0, "alpha1": {"values": [1.5]}}}));
        assert_eq!(run_record(&c, RunOptions::default(), false).unwrap_err().invariant(), Some("no ranged parameters"));
        let c = cfg(json!({"version": 1, "kind": "kinematics", "parameters": {"x0": 1.0, "alpha1": 1.5}}));
        assert_eq!(sweep(&c, RunOptions::default()).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn sweep_over_two_parameters_is_cartesian() {
        let c = cfg(json!({"version": 1, "kind": "kinematics", "parameters": {
            "x0": {"values": [1.0, 2.0]}, "alpha1": {"values": [0.5, 1.5, 2.5]}}}));
        let t = sweep(&c, RunOptions::default()).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.header[..3], ["x0", "alpha1", "status"]);
        assert_eq!(t.rows[1][..2], [Cell::Num(1.0), Cell::Num(1.5)]);
        assert_eq!(t.rows[3][..2], [Cell::Num(2.0), Cell::Num(0.5)]);
    }

    #[test]
    fn sweep_records_row_failures() {
        let c = cfg(json!({"version": 1, "kind": "switch", "parameters": {
            "x0": 1.0, "alpha1": {"values": [0.5, 1.5]}, "u_a": "H", "u_b": "Z", "psi": "+"}}));
        let t = sweep(&c, RunOptions::default()).unwrap();
        assert_eq!(t.rows[0][1], Cell::from("validation: alpha1*x0>1"));
        assert_eq!(t.rows[1][1], Cell::from("ok"));
    }

    #[test]
    fn three_ranged_parameters_are_rejected() {
        let c = cfg(json!({"version": 1, "kind": "schwarzschild", "parameters": {
            "rs": {"values": [1.0]}, "r0": {"values": [1e5]}, "observers": {"values": [2.0]}}}));
        assert_eq!(sweep(&c, RunOptions::default()).unwrap_err().invariant(), Some("one or two ranged parameters"));
    }

    #[test]
    fn figure_tables_have_expected_headers() {
        let o = FigureOptions { samples: 8, ..FigureOptions::default() };
        assert_eq!(figure(FigureId::A2, &o).unwrap().header, ["X", "Y", "phi"]);
        assert_eq!(figure(FigureId::Worldlines, &o).unwrap().rows.len(), 6 * 8);
        assert_eq!(figure(FigureId::TauVsR, &o).unwrap().header, ["r", "tau"]);
    }
}
