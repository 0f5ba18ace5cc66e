//! Scenario configuration: `{version, kind, parameters, output}`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rindler_core::kinematics::Wedge;
use rindler_core::protocols::{AccelerationChoice, LabSlot, Speed};
use rindler_core::quantum::{Ket, Unitary, C64};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Switch,
    Bell,
    Kinematics,
    Schwarzschild,
    UnruhSweep,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::Switch, Kind::Bell, Kind::Kinematics, Kind::Schwarzschild, Kind::UnruhSweep];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Switch => "switch",
            Kind::Bell => "bell",
            Kind::Kinematics => "kinematics",
            Kind::Schwarzschild => "schwarzschild",
            Kind::UnruhSweep => "unruh_sweep",
        }
    }

    /// Parameter names accepted by this kind.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            Kind::Switch => &["length_unit", "x0", "alpha1", "alpha2", "u_a", "u_b", "psi", "t_m", "visibility", "control"],
            Kind::Bell => &[
                "length_unit", "x0", "alpha1", "alpha2", "u_a", "u_b", "u_c", "psi_l", "psi_r", "labels", "settings", "t_m",
                "visibility", "control",
            ],
            Kind::Kinematics => &["length_unit", "x0", "alpha1", "configuration"],
            Kind::Schwarzschild => &["length_unit", "rs", "r0", "observers", "r1_hint", "tol", "threshold"],
            Kind::UnruhSweep => &["alpha", "model", "scenario"],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::parse(format!("unknown kind `{s}` (expected switch, bell, kinematics, schwarzschild or unruh_sweep)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    JsonCsv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    /// Resolved against the directory holding the config file.
    pub path: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: Kind,
    pub parameters: Map<String, Value>,
    pub output: Option<OutputSpec>,
    /// The config as read, echoed into run records.
    pub raw: Value,
}

impl ScenarioConfig {
    pub fn from_str_in(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: Value = serde_json::from_str(text).map_err(|e| CliError::parse(format!("invalid JSON: {e}")))?;
        Self::from_value(raw, base)
    }

    pub fn from_value(raw: Value, base: &Path) -> Result<Self, CliError> {
        let top = raw.as_object().ok_or_else(|| CliError::parse("config must be a JSON object"))?;
        for key in top.keys() {
            if !["version", "kind", "parameters", "output"].contains(&key.as_str()) {
                return Err(CliError::parse(format!("unknown top-level field `{key}`")));
            }
        }
        match top.get("version").and_then(Value::as_u64) {
            Some(SCHEMA_VERSION) => {}
            Some(v) => return Err(CliError::parse(format!("unsupported schema version {v} (expected {SCHEMA_VERSION})"))),
            None => return Err(CliError::parse("missing integer field `version`")),
        }
        let kind: Kind = top
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::parse("missing string field `kind`"))?
            .parse()?;
        let parameters = match top.get("parameters") {
            Some(Value::Object(m)) => m.clone(),
            None => Map::new(),
            Some(_) => return Err(CliError::parse("`parameters` must be an object")),
        };
        for key in parameters.keys() {
            if !kind.parameters().contains(&key.as_str()) {
                return Err(CliError::parse(format!("unknown parameter `{key}` for kind {kind}")));
            }
        }
        let output = match top.get("output") {
            None | Some(Value::Null) => None,
            Some(Value::Object(o)) => Some(parse_output(o, base)?),
            Some(_) => return Err(CliError::parse("`output` must be an object or null")),
        };
        Ok(ScenarioConfig { kind, parameters, output, raw })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_str_in(&text, base)
    }

    pub fn params(&self) -> Params<'_> {
        Params(&self.parameters)
    }
}

fn parse_output(o: &Map<String, Value>, base: &Path) -> Result<OutputSpec, CliError> {
    let path = o.get("path").and_then(Value::as_str).ok_or_else(|| CliError::parse("`output.path` must be a string"))?;
    let format = match o.get("format").and_then(Value::as_str).unwrap_or("json") {
        "json" => OutputFormat::Json,
        "csv" => OutputFormat::Csv,
        "json+csv" => OutputFormat::JsonCsv,
        other => return Err(CliError::parse(format!("unknown output format `{other}` (expected json, csv or json+csv)"))),
    };
    Ok(OutputSpec { path: base.join(path), format })
}

/// A parameter swept by `sim sweep`: `{"range": {start, stop, count, scale}}`
/// or `{"values": [...]}`.
pub fn ranged_values(v: &Value) -> Result<Option<Vec<f64>>, CliError> {
    let Some(o) = v.as_object() else { return Ok(None) };
    if let Some(values) = o.get("values") {
        let arr = values.as_array().ok_or_else(|| CliError::parse("`values` must be an array"))?;
        return arr
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| CliError::parse("`values` entries must be numbers")))
            .collect::<Result<Vec<_>, _>>()
            .map(Some);
    }
    let Some(range) = o.get("range") else { return Ok(None) };
    let r = Params(range.as_object().ok_or_else(|| CliError::parse("`range` must be an object"))?);
    let start = r.num("start")?;
    let stop = r.num("stop")?;
    let count = r.0.get("count").and_then(Value::as_u64).ok_or_else(|| CliError::parse("`range.count` must be a non-negative integer"))?
        as usize;
    let log = match r.0.get("scale").and_then(Value::as_str).unwrap_or("linear") {
        "linear" => false,
        "log" => true,
        other => return Err(CliError::parse(format!("unknown range scale `{other}`"))),
    };
    if log && !(start > 0.0 && stop > 0.0) {
        return Err(CliError::validation("log range positive", format!("log range needs positive bounds, got [{start}, {stop}]")));
    }
    let at = |i: usize| {
        if count == 1 {
            return start;
        }
        let s = i as f64 / (count - 1) as f64;
        if log {
            (start.ln() + s * (stop.ln() - start.ln())).exp()
        } else {
            start + s * (stop - start)
        }
    };
    Ok(Some((0..count).map(at).collect()))
}

/// Typed read access to a parameter object.
#[derive(Debug, Clone, Copy)]
pub struct Params<'a>(pub &'a Map<String, Value>);

impl<'a> Params<'a> {
    pub fn get(&self, key: &str) -> Option<&'a Value> {
        self.0.get(key).filter(|v| !v.is_null())
    }

    pub fn num(&self, key: &str) -> Result<f64, CliError> {
        self.opt_num(key)?.ok_or_else(|| CliError::parse(format!("missing numeric parameter `{key}`")))
    }

    pub fn opt_num(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| CliError::parse(format!("parameter `{key}` must be a number"))),
        }
    }

    pub fn num_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.opt_num(key)?.unwrap_or(default))
    }

    pub fn num_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| CliError::parse(format!("`{key}` entries must be numbers"))))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => v.as_f64().map(|x| Some(vec![x])).ok_or_else(|| CliError::parse(format!("`{key}` must be a number or an array"))),
        }
    }

    pub fn acceleration(&self, key: &str) -> Result<AccelerationChoice, CliError> {
        match self.get(key) {
            None => Ok(AccelerationChoice::DERIVE),
            Some(Value::String(s)) if s == "derive" => Ok(AccelerationChoice::DERIVE),
            Some(v) => v
                .as_f64()
                .map(AccelerationChoice::Explicit)
                .ok_or_else(|| CliError::parse(format!("`{key}` must be a number or \"derive\""))),
        }
    }

    pub fn control(&self) -> Result<[f64; 2], CliError> {
        match self.num_list("control")? {
            None => Ok([1.0, 1.0]),
            Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
            Some(_) => Err(CliError::parse("`control` must hold two branch amplitudes")),
        }
    }

    pub fn unitary(&self, key: &str) -> Result<Unitary, CliError> {
        let v = self.get(key).ok_or_else(|| CliError::parse(format!("missing unitary `{key}`")))?;
        parse_unitary(v).map_err(|e| match e {
            CliError::Parse(m) => CliError::parse(format!("`{key}`: {m}")),
            other => other,
        })
    }

    pub fn ket(&self, key: &str) -> Result<Ket, CliError> {
        let v = self.get(key).ok_or_else(|| CliError::parse(format!("missing state `{key}`")))?;
        parse_ket(v).map_err(|e| match e {
            CliError::Parse(m) => CliError::parse(format!("`{key}`: {m}")),
            other => other,
        })
    }
}

fn complex(v: &Value) -> Result<C64, CliError> {
    if let Some(x) = v.as_f64() {
        return Ok(C64::new(x, 0.0));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(CliError::parse("complex entries are numbers or [re, im]")),
        },
        _ => Err(CliError::parse("complex entries are numbers or [re, im]")),
    }
}

/// `"I" | "X" | "Y" | "Z" | "H" | "S" | "T"`, `{"phase": phi}` or
/// `{"matrix": [[a, b], [c, d]]}` with complex entries.
pub fn parse_unitary(v: &Value) -> Result<Unitary, CliError> {
    if let Some(name) = v.as_str() {
        return Ok(match name.to_ascii_uppercase().as_str() {
            "I" => Unitary::identity(2),
            "X" => Unitary::pauli_x(),
            "Y" => Unitary::pauli_y(),
            "Z" => Unitary::pauli_z(),
            "H" => Unitary::hadamard(),
            "S" => Unitary::phase(std::f64::consts::FRAC_PI_2),
            "T" => Unitary::phase(std::f64::consts::FRAC_PI_4),
            _ => return Err(CliError::parse(format!("unknown gate `{name}`"))),
        });
    }
    let o = v.as_object().ok_or_else(|| CliError::parse("unitary must be a gate name or an object"))?;
    if let Some(phi) = o.get("phase") {
        let phi = phi.as_f64().ok_or_else(|| CliError::parse("`phase` must be a number"))?;
        return Ok(Unitary::phase(phi));
    }
    let rows = o
        .get("matrix")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::parse("unitary object needs `phase` or `matrix`"))?;
    let row = |i: usize| -> Result<[C64; 2], CliError> {
        match rows.get(i).and_then(Value::as_array).map(Vec::as_slice) {
            Some([a, b]) => Ok([complex(a)?, complex(b)?]),
            _ => Err(CliError::parse("`matrix` must be 2x2")),
        }
    };
    if rows.len() != 2 {
        return Err(CliError::parse("`matrix` must be 2x2"));
    }
    Ok(Unitary::from_rows2([row(0)?, row(1)?])?)
}

/// `"0" | "1" | "+" | "-"` or two complex amplitudes (normalized here).
pub fn parse_ket(v: &Value) -> Result<Ket, CliError> {
    if let Some(name) = v.as_str() {
        return Ok(match name {
            "0" => Ket::zero(),
            "1" => Ket::one(),
            "+" => Ket::plus(),
            "-" => Ket::minus(),
            _ => return Err(CliError::parse(format!("unknown state `{name}`"))),
        });
    }
    match v.as_array().map(Vec::as_slice) {
        Some([a, b]) => Ok(Ket::qubit(complex(a)?, complex(b)?)?.normalized()?),
        _ => Err(CliError::parse("state must be \"0\", \"1\", \"+\", \"-\" or [a, b]")),
    }
}

/// `"alpha1" | "alpha2" | "-alpha1" | "-alpha2"`, the signed acceleration a
/// laboratory carries in one branch.
pub fn parse_slot(s: &str) -> Result<LabSlot, CliError> {
    let (wedge, rest) = match s.strip_prefix('-') {
        Some(r) => (Wedge::Left, r),
        None => (Wedge::Right, s.strip_prefix('+').unwrap_or(s)),
    };
    let speed = match rest {
        "alpha1" => Speed::Slow,
        "alpha2" => Speed::Fast,
        _ => return Err(CliError::parse(format!("unknown lab slot `{s}` (expected [-]alpha1 or [-]alpha2)"))),
    };
    Ok(LabSlot::new(speed, wedge))
}

pub fn slot_name(slot: LabSlot) -> String {
    let sign = if slot.wedge == Wedge::Left { "-" } else { "" };
    let speed = match slot.speed {
        Speed::Slow => "alpha1",
        Speed::Fast => "alpha2",
    };
    format!("{sign}{speed}")
}

pub fn parse_wedge(v: &Value) -> Result<Wedge, CliError> {
    match v.as_str() {
        Some("R") | Some("right") => Ok(Wedge::Right),
        Some("L") | Some("left") => Ok(Wedge::Left),
        _ => Err(CliError::parse("wedge must be \"R\" or \"L\"")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn cfg(v: Value) -> Result<ScenarioConfig, CliError> {
        ScenarioConfig::from_value(v, Path::new("."))
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        assert!(matches!(cfg(json!({"version": 2, "kind": "switch"})), Err(CliError::Parse(_))));
        assert!(matches!(cfg(json!({"version": 1, "kind": "warp"})), Err(CliError::Parse(_))));
        assert!(matches!(cfg(json!({"version": 1, "kind": "switch", "extra": 0})), Err(CliError::Parse(_))));
        let e = cfg(json!({"version": 1, "kind": "switch", "parameters": {"alpha3": 1.0}})).unwrap_err();
        assert!(e.to_string().contains("alpha3"));
    }

    #[test]
    fn ranges() {
        let lin = ranged_values(&json!({"range": {"start": 0.0, "stop": 1.0, "count": 5}})).unwrap().unwrap();
        assert_eq!(lin, [0.0, 0.25, 0.5, 0.75, 1.0]);
        let log = ranged_values(&json!({"range": {"start": 1.0, "stop": 100.0, "count": 3, "scale": "log"}})).unwrap().unwrap();
        assert!((log[1] - 10.0).abs() < 1e-12);
        assert_eq!(ranged_values(&json!({"range": {"start": 1.0, "stop": 2.0, "count": 0}})).unwrap().unwrap(), Vec::<f64>::new());
        assert_eq!(ranged_values(&json!(3.0)).unwrap(), None);
        assert!(ranged_values(&json!({"range": {"start": 0.0, "stop": 1.0, "count": 2, "scale": "log"}})).is_err());
    }

    #[test]
    fn unitaries_and_states() {
        assert_eq!(parse_unitary(&json!("h")).unwrap(), Unitary::hadamard());
        let m = parse_unitary(&json!({"matrix": [[0, 1], [1, 0]]})).unwrap();
        assert_eq!(m, Unitary::pauli_x());
        let bad = parse_unitary(&json!({"matrix": [[1, 1], [0, 1]]})).unwrap_err();
        assert_eq!(bad.invariant(), Some("unitary"));
        let k = parse_ket(&json!([[3, 0], [0, 4]])).unwrap();
        assert!((k.norm() - 1.0).abs() < 1e-15);
        assert_eq!(parse_ket(&json!([0, 0])).unwrap_err().invariant(), Some("nonzero state"));
    }

    #[test]
    fn slots_round_trip() {
        for s in ["alpha1", "alpha2", "-alpha1", "-alpha2"] {
            assert_eq!(slot_name(parse_slot(s).unwrap()), s);
        }
        assert!(parse_slot("alpha3").is_err());
    }
}
