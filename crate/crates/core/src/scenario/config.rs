//! Plain-text scenario configuration: a line-oriented format with
//! `[section]` headers, `key = value` entries, `#` comments, and bracketed
//! vectors/matrices like `matrix = [[2,-1,-1],[-1,1,0],[-1,0,1]]`. Keys are
//! case-insensitive and stored canonically in lower case; unknown sections,
//! unknown keys, and duplicate keys are rejected.

use crate::control::{GainSet, PdGains};
use crate::dynamics::QuadParams;
use crate::frames::Vec3;
use crate::laws::MinMaxMagnitude;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("invalid value for key '{key}': {message}")]
    Validation { key: String, message: String },
}

impl ConfigError {
    fn parse(line: usize, col: usize, message: impl Into<String>) -> Self {
        ConfigError::Parse { line, col, message: message.into() }
    }

    fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Validation { key: key.into(), message: message.into() }
    }
}

/// How agents are initially placed.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialPositions {
    /// Uniform in the box, drawn from a seeded ChaCha8 stream.
    Random { seed: u64, bounds: [(f64, f64); 3] },
    Explicit(Vec<Vec3>),
}

pub const DEFAULT_BOUNDS: [(f64, f64); 3] = [(-5.0, 5.0), (-5.0, 5.0), (1.0, 1.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfig {
    pub count: usize,
    pub initial: InitialPositions,
    pub params: QuadParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Adjacency,
    Laplacian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointConfig {
    pub p_gain: f64,
    pub d_gain: f64,
    /// Horizontal waypoints; altitude stays at each agent's spawn height.
    pub waypoints: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusConfig {
    /// 1-based leader index; 0 selects the leaderless case.
    pub leader: usize,
    pub matrix_kind: MatrixKind,
    pub matrix: Vec<Vec<f64>>,
    /// Velocity damping of the consensus law.
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxConfig {
    /// 1-based root agent.
    pub root: usize,
    /// Per-agent input bounds.
    pub bounds: Vec<f64>,
    /// Explicit tree as (child, parent) pairs, 1-based. When absent the tree
    /// is extracted from the matrix.
    pub tree: Option<Vec<(usize, usize)>>,
    pub matrix_kind: MatrixKind,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub deadband: f64,
    pub magnitude: MinMaxMagnitude,
    /// Optional waypoint list for the root; zero input otherwise.
    pub root_waypoints: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawConfig {
    Waypoint(WaypointConfig),
    Consensus(ConsensusConfig),
    MinMax(MinMaxConfig),
    Custom { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputConfig {
    pub velocity_plot: bool,
    pub position_plot: bool,
    pub save_plot: bool,
    /// Headless build: showing a plot means emitting its file, same as
    /// saving it.
    pub show_plot: bool,
    pub save_data: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            velocity_plot: false,
            position_plot: false,
            save_plot: false,
            show_plot: false,
            save_data: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingConfig {
    pub duration: f64,
    pub physics_dt: f64,
    pub control_dt: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { duration: 80.0, physics_dt: 1e-3, control_dt: 1e-2 }
    }
}

impl TimingConfig {
    /// Physics substeps per control tick; validation guarantees the ratio is
    /// integral.
    pub fn substeps(&self) -> u32 {
        (self.control_dt / self.physics_dt).round() as u32
    }

    /// Number of control ticks over the full duration.
    pub fn ticks(&self) -> usize {
        (self.duration / self.control_dt + 1e-9).floor() as usize
    }
}

/// A fully parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub robot: RobotConfig,
    pub law: LawConfig,
    pub output: OutputConfig,
    pub timing: TimingConfig,
    pub gains: GainSet,
}

// ---------------------------------------------------------------------------
// Lexing: sections of (key, value, position) entries.

struct RawEntry {
    key: String,
    value: String,
    line: usize,
    col: usize,
}

struct RawSection {
    name: String,
    entries: Vec<RawEntry>,
}

fn lex(text: &str) -> Result<Vec<RawSection>, ConfigError> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let trimmed = stripped.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| {
                ConfigError::parse(line_no, trimmed.len(), "section header missing closing ']'")
            })?;
            let name = name.trim().to_ascii_lowercase();
            if name.is_empty() {
                return Err(ConfigError::parse(line_no, 2, "empty section name"));
            }
            sections.push(RawSection { name, entries: Vec::new() });
            continue;
        }
        let eq = trimmed.find('=').ok_or_else(|| {
            ConfigError::parse(line_no, 1, format!("expected 'key = value', got '{trimmed}'"))
        })?;
        let key = trimmed[..eq].trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(ConfigError::parse(line_no, 1, "empty key before '='"));
        }
        let value = trimmed[eq + 1..].trim().to_string();
        if value.is_empty() {
            return Err(ConfigError::parse(line_no, eq + 2, format!("key '{key}' has no value")));
        }
        let col = stripped.find('=').map(|p| p + 2).unwrap_or(1);
        match sections.last_mut() {
            Some(section) => section.entries.push(RawEntry { key, value, line: line_no, col }),
            None => {
                return Err(ConfigError::parse(
                    line_no,
                    1,
                    format!("key '{key}' appears before any [section] header"),
                ))
            }
        }
    }
    Ok(sections)
}

// ---------------------------------------------------------------------------
// Value parsers.

fn parse_f64(e: &RawEntry) -> Result<f64, ConfigError> {
    e.value.parse::<f64>().map_err(|_| {
        ConfigError::parse(e.line, e.col, format!("key '{}': expected a number, got '{}'", e.key, e.value))
    })
}

fn parse_usize(e: &RawEntry) -> Result<usize, ConfigError> {
    e.value.parse::<usize>().map_err(|_| {
        ConfigError::parse(
            e.line,
            e.col,
            format!("key '{}': expected a non-negative integer, got '{}'", e.key, e.value),
        )
    })
}

fn parse_u64(e: &RawEntry) -> Result<u64, ConfigError> {
    e.value.parse::<u64>().map_err(|_| {
        ConfigError::parse(
            e.line,
            e.col,
            format!("key '{}': expected a non-negative integer, got '{}'", e.key, e.value),
        )
    })
}

fn parse_bool(e: &RawEntry) -> Result<bool, ConfigError> {
    match e.value.to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(ConfigError::parse(
            e.line,
            e.col,
            format!("key '{}': expected true or false, got '{other}'", e.key),
        )),
    }
}

/// Parse `[a, b, c]` into numbers.
fn parse_vector(e: &RawEntry) -> Result<Vec<f64>, ConfigError> {
    let v = e.value.trim();
    let inner = v
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| {
            ConfigError::parse(e.line, e.col, format!("key '{}': expected [a, b, ...]", e.key))
        })?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|piece| {
            piece.trim().parse::<f64>().map_err(|_| {
                ConfigError::parse(
                    e.line,
                    e.col,
                    format!("key '{}': '{}' is not a number", e.key, piece.trim()),
                )
            })
        })
        .collect()
}

/// Parse `[[a,b],[c,d],...]` into rows.
fn parse_matrix(e: &RawEntry) -> Result<Vec<Vec<f64>>, ConfigError> {
    let v = e.value.trim();
    let inner = v
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| {
            ConfigError::parse(e.line, e.col, format!("key '{}': expected [[...],[...]]", e.key))
        })?;
    let mut rows = Vec::new();
    let mut depth = 0usize;
    let mut row_start = None;
    for (i, ch) in inner.char_indices() {
        match ch {
            '[' => {
                if depth == 0 {
                    row_start = Some(i + 1);
                }
                depth += 1;
                if depth > 1 {
                    return Err(ConfigError::parse(
                        e.line,
                        e.col,
                        format!("key '{}': nested brackets deeper than a matrix", e.key),
                    ));
                }
            }
            ']' => {
                if depth == 0 {
                    return Err(ConfigError::parse(e.line, e.col, format!("key '{}': unbalanced ']'", e.key)));
                }
                depth -= 1;
                let start = row_start.take().unwrap();
                let row_text = &inner[start..i];
                let row: Result<Vec<f64>, _> = row_text
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| {
                        p.trim().parse::<f64>().map_err(|_| {
                            ConfigError::parse(
                                e.line,
                                e.col,
                                format!("key '{}': '{}' is not a number", e.key, p.trim()),
                            )
                        })
                    })
                    .collect();
                rows.push(row?);
            }
            ',' | ' ' | '\t' => {}
            other if depth == 0 => {
                return Err(ConfigError::parse(
                    e.line,
                    e.col,
                    format!("key '{}': unexpected '{other}' between rows", e.key),
                ));
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(ConfigError::parse(e.line, e.col, format!("key '{}': unbalanced '['", e.key)));
    }
    Ok(rows)
}

fn parse_pairs(e: &RawEntry) -> Result<Vec<(f64, f64)>, ConfigError> {
    let rows = parse_matrix(e)?;
    rows.into_iter()
        .map(|row| {
            if row.len() != 2 {
                Err(ConfigError::invalid(
                    e.key.clone(),
                    format!("each entry must have exactly 2 values, got {}", row.len()),
                ))
            } else {
                Ok((row[0], row[1]))
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Interpretation.

#[derive(Default)]
struct Sections<'a> {
    robot: Vec<&'a RawEntry>,
    control: Vec<&'a RawEntry>,
    waypoint: Vec<&'a RawEntry>,
    consensus: Vec<&'a RawEntry>,
    minmax: Vec<&'a RawEntry>,
    output: Vec<&'a RawEntry>,
    timing: Vec<&'a RawEntry>,
    gains: Vec<&'a RawEntry>,
}

fn check_duplicates(entries: &[&RawEntry]) -> Result<(), ConfigError> {
    let mut seen = std::collections::HashSet::new();
    for e in entries {
        if !seen.insert(e.key.as_str()) {
            return Err(ConfigError::parse(e.line, e.col, format!("duplicate key '{}'", e.key)));
        }
    }
    Ok(())
}

/// Parse and fully validate a scenario config.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw = lex(text)?;
    let mut sections = Sections::default();
    for section in &raw {
        let bucket = match section.name.as_str() {
            "robot" => &mut sections.robot,
            "control" => &mut sections.control,
            "control.waypoint" => &mut sections.waypoint,
            "control.consensus" => &mut sections.consensus,
            "control.minmax" => &mut sections.minmax,
            "output" => &mut sections.output,
            "timing" => &mut sections.timing,
            "gains" => &mut sections.gains,
            other => {
                return Err(ConfigError::invalid(
                    other.to_string(),
                    "unknown section; expected one of [robot], [control], [control.waypoint], \
                     [control.consensus], [control.minmax], [output], [timing], [gains]",
                ))
            }
        };
        bucket.extend(section.entries.iter());
    }
    for bucket in [
        &sections.robot,
        &sections.control,
        &sections.waypoint,
        &sections.consensus,
        &sections.minmax,
        &sections.output,
        &sections.timing,
        &sections.gains,
    ] {
        check_duplicates(bucket)?;
    }

    let robot = interpret_robot(&sections.robot)?;
    let law = interpret_control(&sections, robot.count)?;
    let output = interpret_output(&sections.output)?;
    let timing = interpret_timing(&sections.timing)?;
    let gains = interpret_gains(&sections.gains)?;

    Ok(ScenarioConfig { robot, law, output, timing, gains })
}

fn interpret_robot(entries: &[&RawEntry]) -> Result<RobotConfig, ConfigError> {
    let mut count = None;
    let mut mode: Option<&str> = None;
    let mut seed = 0u64;
    let mut bounds = DEFAULT_BOUNDS;
    let mut positions: Vec<(usize, Vec3)> = Vec::new();
    let mut params = QuadParams::default();

    for e in entries {
        match e.key.as_str() {
            "count" => count = Some(parse_usize(e)?),
            "initial_position" => match e.value.to_ascii_lowercase().as_str() {
                "random" => mode = Some("random"),
                "explicit" => mode = Some("explicit"),
                other => {
                    return Err(ConfigError::invalid(
                        "initial_position",
                        format!("expected random or explicit, got '{other}'"),
                    ))
                }
            },
            "seed" => seed = parse_u64(e)?,
            "box" => {
                let rows = parse_matrix(e)?;
                if rows.len() != 3 || rows.iter().any(|r| r.len() != 2) {
                    return Err(ConfigError::invalid("box", "expected [[xmin,xmax],[ymin,ymax],[zmin,zmax]]"));
                }
                for (axis, row) in rows.iter().enumerate() {
                    if row[0] > row[1] {
                        return Err(ConfigError::invalid(
                            "box",
                            format!("axis {axis}: min {} exceeds max {}", row[0], row[1]),
                        ));
                    }
                    bounds[axis] = (row[0], row[1]);
                }
            }
            "mass" => params.mass = parse_f64(e)?,
            "gravity" => params.gravity = parse_f64(e)?,
            "inertia" => {
                let v = parse_vector(e)?;
                if v.len() != 3 {
                    return Err(ConfigError::invalid("inertia", "expected [jx, jy, jz]"));
                }
                params.inertia = [[v[0], 0.0, 0.0], [0.0, v[1], 0.0], [0.0, 0.0, v[2]]];
            }
            "lift" => params.lift_coeff = parse_f64(e)?,
            "torque" => params.torque_coeff = parse_f64(e)?,
            "arm" => params.arm_len = parse_f64(e)?,
            "drag" => {
                let v = parse_vector(e)?;
                if v.len() != 3 {
                    return Err(ConfigError::invalid("drag", "expected [dx, dy, dz]"));
                }
                params.drag_diag = Vec3::new(v[0], v[1], v[2]);
            }
            "rotor_max" => params.rotor_max = parse_f64(e)?,
            key if key.starts_with("position_") => {
                let idx: usize = key["position_".len()..].parse().map_err(|_| {
                    ConfigError::invalid(key.to_string(), "expected position_<agent-number>")
                })?;
                let v = parse_vector(e)?;
                if v.len() != 3 {
                    return Err(ConfigError::invalid(key.to_string(), "expected [x, y, z]"));
                }
                positions.push((idx, Vec3::new(v[0], v[1], v[2])));
            }
            other => {
                return Err(ConfigError::invalid(other.to_string(), "unknown key in [robot]"));
            }
        }
    }

    let count = count.ok_or_else(|| ConfigError::invalid("count", "required key missing in [robot]"))?;
    if count < 1 {
        return Err(ConfigError::invalid("count", "at least one robot is required"));
    }

    if params.mass <= 0.0 {
        return Err(ConfigError::invalid("mass", "must be positive"));
    }
    if params.gravity <= 0.0 {
        return Err(ConfigError::invalid("gravity", "must be positive"));
    }
    if params.lift_coeff <= 0.0 {
        return Err(ConfigError::invalid("lift", "must be positive"));
    }
    if params.torque_coeff <= 0.0 {
        return Err(ConfigError::invalid("torque", "must be positive"));
    }
    if params.arm_len <= 0.0 {
        return Err(ConfigError::invalid("arm", "must be positive"));
    }
    if params.rotor_max <= 0.0 {
        return Err(ConfigError::invalid("rotor_max", "must be positive"));
    }
    for (i, d) in [params.drag_diag.x, params.drag_diag.y, params.drag_diag.z].iter().enumerate() {
        if *d < 0.0 {
            return Err(ConfigError::invalid("drag", format!("axis {i} must be non-negative")));
        }
    }
    for i in 0..3 {
        if params.inertia[i][i] <= 0.0 {
            return Err(ConfigError::invalid("inertia", "diagonal entries must be positive"));
        }
    }

    let mode = mode.unwrap_or(if positions.is_empty() { "random" } else { "explicit" });
    let initial = match mode {
        "random" => {
            if !positions.is_empty() {
                return Err(ConfigError::invalid(
                    format!("position_{}", positions[0].0),
                    "explicit positions given but initial_position = random",
                ));
            }
            InitialPositions::Random { seed, bounds }
        }
        _ => {
            let mut out = vec![None; count];
            for (idx, p) in positions {
                if idx < 1 || idx > count {
                    return Err(ConfigError::invalid(
                        format!("position_{idx}"),
                        format!("agent index out of range 1..={count}"),
                    ));
                }
                if out[idx - 1].replace(p).is_some() {
                    return Err(ConfigError::invalid(format!("position_{idx}"), "given twice"));
                }
            }
            let mut resolved = Vec::with_capacity(count);
            for (i, p) in out.into_iter().enumerate() {
                match p {
                    Some(p) => resolved.push(p),
                    None => {
                        return Err(ConfigError::invalid(
                            format!("position_{}", i + 1),
                            "missing explicit position for this agent",
                        ))
                    }
                }
            }
            InitialPositions::Explicit(resolved)
        }
    };

    Ok(RobotConfig { count, initial, params })
}

fn parse_matrix_kind(e: &RawEntry) -> Result<MatrixKind, ConfigError> {
    match e.value.to_ascii_lowercase().as_str() {
        "adjacency" => Ok(MatrixKind::Adjacency),
        "laplacian" => Ok(MatrixKind::Laplacian),
        other => Err(ConfigError::invalid(
            "matrix_kind",
            format!("expected adjacency or laplacian, got '{other}'"),
        )),
    }
}

/// Structural checks shared by every matrix input: square of size n, and
/// either adjacency-shaped or laplacian-shaped.
fn validate_matrix(kind: MatrixKind, matrix: &[Vec<f64>], n: usize) -> Result<(), ConfigError> {
    if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
        return Err(ConfigError::invalid(
            "matrix",
            format!("must be {n}x{n} to match the robot count"),
        ));
    }
    match kind {
        MatrixKind::Adjacency => {
            for (i, row) in matrix.iter().enumerate() {
                if row[i] != 0.0 {
                    return Err(ConfigError::invalid(
                        "matrix",
                        format!("adjacency diagonal entry ({},{}) must be zero", i + 1, i + 1),
                    ));
                }
                for (j, &w) in row.iter().enumerate() {
                    if w < 0.0 {
                        return Err(ConfigError::invalid(
                            "matrix",
                            format!("adjacency entry ({},{}) must be non-negative", i + 1, j + 1),
                        ));
                    }
                }
            }
        }
        MatrixKind::Laplacian => {
            for (i, row) in matrix.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if i != j && v > 0.0 {
                        return Err(ConfigError::invalid(
                            "matrix",
                            format!("laplacian off-diagonal ({},{}) must be non-positive", i + 1, j + 1),
                        ));
                    }
                }
                let sum: f64 = row.iter().sum();
                if sum.abs() > 1e-9 {
                    return Err(ConfigError::invalid(
                        "matrix",
                        format!("laplacian row {} sums to {sum}, expected zero", i + 1),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn interpret_control(sections: &Sections, count: usize) -> Result<LawConfig, ConfigError> {
    let mut law_name = None;
    let mut custom_name = None;
    for e in &sections.control {
        match e.key.as_str() {
            "law" => law_name = Some(e.value.to_ascii_lowercase()),
            "name" => custom_name = Some(e.value.clone()),
            other => return Err(ConfigError::invalid(other.to_string(), "unknown key in [control]")),
        }
    }
    let law_name =
        law_name.ok_or_else(|| ConfigError::invalid("law", "required key missing in [control]"))?;

    let reject_unused = |entries: &[&RawEntry], section: &str| -> Result<(), ConfigError> {
        if let Some(e) = entries.first() {
            return Err(ConfigError::invalid(
                e.key.clone(),
                format!("[{section}] entries are not used by law = {law_name}"),
            ));
        }
        Ok(())
    };

    match law_name.as_str() {
        "waypoint" => {
            reject_unused(&sections.consensus, "control.consensus")?;
            reject_unused(&sections.minmax, "control.minmax")?;
            let mut cfg = WaypointConfig { p_gain: 1.0, d_gain: 1.0, waypoints: Vec::new() };
            for e in &sections.waypoint {
                match e.key.as_str() {
                    "p_gain" => cfg.p_gain = parse_f64(e)?,
                    "d_gain" => cfg.d_gain = parse_f64(e)?,
                    "waypoints" => cfg.waypoints = parse_pairs(e)?,
                    other => {
                        return Err(ConfigError::invalid(
                            other.to_string(),
                            "unknown key in [control.waypoint]",
                        ))
                    }
                }
            }
            if cfg.waypoints.is_empty() {
                return Err(ConfigError::invalid("waypoints", "waypoint law needs at least one waypoint"));
            }
            if cfg.p_gain < 0.0 || cfg.d_gain < 0.0 {
                return Err(ConfigError::invalid("p_gain", "gains must be non-negative"));
            }
            Ok(LawConfig::Waypoint(cfg))
        }
        "consensus" => {
            reject_unused(&sections.waypoint, "control.waypoint")?;
            reject_unused(&sections.minmax, "control.minmax")?;
            let mut leader = 0usize;
            let mut kind = MatrixKind::Laplacian;
            let mut matrix = None;
            let mut beta = 1.0;
            for e in &sections.consensus {
                match e.key.as_str() {
                    "leader" => leader = parse_usize(e)?,
                    "matrix_kind" => kind = parse_matrix_kind(e)?,
                    "matrix" => matrix = Some(parse_matrix(e)?),
                    "beta" => beta = parse_f64(e)?,
                    other => {
                        return Err(ConfigError::invalid(
                            other.to_string(),
                            "unknown key in [control.consensus]",
                        ))
                    }
                }
            }
            let matrix = matrix
                .ok_or_else(|| ConfigError::invalid("matrix", "consensus law needs a matrix"))?;
            validate_matrix(kind, &matrix, count)?;
            if leader > count {
                return Err(ConfigError::invalid(
                    "leader",
                    format!("agent index out of range 0..={count} (0 means leaderless)"),
                ));
            }
            if beta <= 0.0 {
                return Err(ConfigError::invalid("beta", "must be positive"));
            }
            Ok(LawConfig::Consensus(ConsensusConfig { leader, matrix_kind: kind, matrix, beta }))
        }
        "minmax" => {
            reject_unused(&sections.waypoint, "control.waypoint")?;
            reject_unused(&sections.consensus, "control.consensus")?;
            let mut cfg = MinMaxConfig {
                root: 1,
                bounds: Vec::new(),
                tree: None,
                matrix_kind: MatrixKind::Laplacian,
                matrix: None,
                deadband: 0.05,
                magnitude: MinMaxMagnitude::Full,
                root_waypoints: None,
            };
            for e in &sections.minmax {
                match e.key.as_str() {
                    "root" => cfg.root = parse_usize(e)?,
                    "bounds" => cfg.bounds = parse_vector(e)?,
                    "tree" => {
                        let pairs = parse_pairs(e)?;
                        let mut out = Vec::with_capacity(pairs.len());
                        for (c, p) in pairs {
                            if c.fract() != 0.0 || p.fract() != 0.0 || c < 1.0 || p < 1.0 {
                                return Err(ConfigError::invalid(
                                    "tree",
                                    "entries must be [child, parent] agent numbers",
                                ));
                            }
                            out.push((c as usize, p as usize));
                        }
                        cfg.tree = Some(out);
                    }
                    "matrix_kind" => cfg.matrix_kind = parse_matrix_kind(e)?,
                    "matrix" => cfg.matrix = Some(parse_matrix(e)?),
                    "deadband" => cfg.deadband = parse_f64(e)?,
                    "magnitude" => match e.value.to_ascii_lowercase().as_str() {
                        "full" => cfg.magnitude = MinMaxMagnitude::Full,
                        "relative" => cfg.magnitude = MinMaxMagnitude::Relative,
                        other => {
                            return Err(ConfigError::invalid(
                                "magnitude",
                                format!("expected full or relative, got '{other}'"),
                            ))
                        }
                    },
                    "root_waypoints" => cfg.root_waypoints = Some(parse_pairs(e)?),
                    other => {
                        return Err(ConfigError::invalid(
                            other.to_string(),
                            "unknown key in [control.minmax]",
                        ))
                    }
                }
            }
            if cfg.root < 1 || cfg.root > count {
                return Err(ConfigError::invalid("root", format!("agent index out of range 1..={count}")));
            }
            if cfg.bounds.len() != count {
                return Err(ConfigError::invalid(
                    "bounds",
                    format!("need one bound per agent ({count}), got {}", cfg.bounds.len()),
                ));
            }
            if cfg.bounds.iter().any(|&b| b <= 0.0) {
                return Err(ConfigError::invalid("bounds", "every bound must be positive"));
            }
            if cfg.deadband < 0.0 {
                return Err(ConfigError::invalid("deadband", "must be non-negative"));
            }
            if let Some(matrix) = &cfg.matrix {
                validate_matrix(cfg.matrix_kind, matrix, count)?;
            }
            match &cfg.tree {
                None => {
                    if cfg.matrix.is_none() {
                        return Err(ConfigError::invalid(
                            "tree",
                            "minmax law needs an explicit tree or a matrix to extract one from",
                        ));
                    }
                }
                Some(edges) => {
                    validate_tree(edges, cfg.root, count)?;
                    for &(c, p) in edges {
                        if cfg.bounds[c - 1] <= cfg.bounds[p - 1] {
                            return Err(ConfigError::invalid(
                                "bounds",
                                format!(
                                    "agent {c}'s bound {} must strictly exceed its parent {p}'s bound {}",
                                    cfg.bounds[c - 1],
                                    cfg.bounds[p - 1]
                                ),
                            ));
                        }
                    }
                }
            }
            Ok(LawConfig::MinMax(cfg))
        }
        "custom" => {
            reject_unused(&sections.waypoint, "control.waypoint")?;
            reject_unused(&sections.consensus, "control.consensus")?;
            reject_unused(&sections.minmax, "control.minmax")?;
            let name = custom_name
                .ok_or_else(|| ConfigError::invalid("name", "custom law needs a registered name"))?;
            Ok(LawConfig::Custom { name })
        }
        other => Err(ConfigError::invalid(
            "law",
            format!("expected waypoint, consensus, minmax or custom, got '{other}'"),
        )),
    }
}

fn validate_tree(edges: &[(usize, usize)], root: usize, count: usize) -> Result<(), ConfigError> {
    let mut parent = vec![None; count];
    for &(c, p) in edges {
        if c > count || p > count {
            return Err(ConfigError::invalid("tree", format!("agent index out of range 1..={count}")));
        }
        if c == root {
            return Err(ConfigError::invalid("tree", "the root cannot have a parent"));
        }
        if parent[c - 1].replace(p).is_some() {
            return Err(ConfigError::invalid("tree", format!("agent {c} has two parents")));
        }
    }
    for (i, p) in parent.iter().enumerate() {
        if i + 1 != root && p.is_none() {
            return Err(ConfigError::invalid("tree", format!("agent {} has no parent", i + 1)));
        }
    }
    // Every chain must reach the root without cycles.
    for start in 1..=count {
        let mut node = start;
        let mut hops = 0;
        while node != root {
            node = parent[node - 1].unwrap();
            hops += 1;
            if hops > count {
                return Err(ConfigError::invalid("tree", format!("cycle involving agent {start}")));
            }
        }
    }
    Ok(())
}

fn interpret_output(entries: &[&RawEntry]) -> Result<OutputConfig, ConfigError> {
    let mut out = OutputConfig::default();
    for e in entries {
        match e.key.as_str() {
            "velocity_plot" => out.velocity_plot = parse_bool(e)?,
            "position_plot" => out.position_plot = parse_bool(e)?,
            "save_plot" => out.save_plot = parse_bool(e)?,
            "show_plot" => out.show_plot = parse_bool(e)?,
            "save_data" => out.save_data = parse_bool(e)?,
            other => return Err(ConfigError::invalid(other.to_string(), "unknown key in [output]")),
        }
    }
    Ok(out)
}

fn interpret_timing(entries: &[&RawEntry]) -> Result<TimingConfig, ConfigError> {
    let mut t = TimingConfig::default();
    for e in entries {
        match e.key.as_str() {
            "duration" => t.duration = parse_f64(e)?,
            "physics_dt" => t.physics_dt = parse_f64(e)?,
            "control_dt" => t.control_dt = parse_f64(e)?,
            other => return Err(ConfigError::invalid(other.to_string(), "unknown key in [timing]")),
        }
    }
    validate_timing(&t)?;
    Ok(t)
}

pub(crate) fn validate_timing(t: &TimingConfig) -> Result<(), ConfigError> {
    if t.duration.is_nan() || t.duration <= 0.0 {
        return Err(ConfigError::invalid("duration", "must be positive"));
    }
    if t.physics_dt.is_nan() || t.physics_dt <= 0.0 {
        return Err(ConfigError::invalid("physics_dt", "must be positive"));
    }
    if t.physics_dt > t.control_dt {
        return Err(ConfigError::invalid("physics_dt", "must not exceed control_dt"));
    }
    let ratio = t.control_dt / t.physics_dt;
    if (ratio - ratio.round()).abs() > 1e-9 {
        return Err(ConfigError::invalid(
            "physics_dt",
            "control_dt must be an integer multiple of physics_dt",
        ));
    }
    Ok(())
}

fn interpret_gains(entries: &[&RawEntry]) -> Result<GainSet, ConfigError> {
    let mut g = GainSet::default();
    for e in entries {
        let v = parse_f64(e)?;
        match e.key.as_str() {
            "altitude_kp" => g.altitude.kp = v,
            "altitude_kd" => g.altitude.kd = v,
            "heading_kp" => g.heading.kp = v,
            "heading_kd" => g.heading.kd = v,
            "roll_kp" => g.roll.kp = v,
            "roll_kd" => g.roll.kd = v,
            "pitch_kp" => g.pitch.kp = v,
            "pitch_kd" => g.pitch.kd = v,
            "pos_x_kp" => g.pos_x.kp = v,
            "pos_x_kd" => g.pos_x.kd = v,
            "pos_y_kp" => g.pos_y.kp = v,
            "pos_y_kd" => g.pos_y.kd = v,
            "rotor_bias" => g.rotor_bias = v,
            "tilt_clamp" => g.tilt_clamp = v,
            "accel_clamp" => g.accel_clamp = v,
            other => return Err(ConfigError::invalid(other.to_string(), "unknown key in [gains]")),
        }
    }
    for (name, gains) in [
        ("altitude", g.altitude),
        ("heading", g.heading),
        ("roll", g.roll),
        ("pitch", g.pitch),
        ("pos_x", g.pos_x),
        ("pos_y", g.pos_y),
    ] {
        if gains.kp < 0.0 || gains.kd < 0.0 {
            return Err(ConfigError::invalid(format!("{name}_kp"), "gains must be non-negative"));
        }
    }
    if g.rotor_bias < 0.0 {
        return Err(ConfigError::invalid("rotor_bias", "must be non-negative"));
    }
    if g.tilt_clamp.is_nan() || g.tilt_clamp <= 0.0 || g.tilt_clamp > 0.5 {
        return Err(ConfigError::invalid("tilt_clamp", "must lie in (0, 0.5]"));
    }
    if g.accel_clamp.is_nan() || g.accel_clamp <= 0.0 {
        return Err(ConfigError::invalid("accel_clamp", "must be positive"));
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// Canonical printer.

fn fmt_vec(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    format!("[{}]", inner.join(", "))
}

fn fmt_matrix(rows: &[Vec<f64>]) -> String {
    let inner: Vec<String> = rows.iter().map(|r| fmt_vec(r)).collect();
    format!("[{}]", inner.join(", "))
}

fn fmt_pairs(pairs: &[(f64, f64)]) -> String {
    let inner: Vec<String> = pairs.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
    format!("[{}]", inner.join(", "))
}

impl ScenarioConfig {
    /// Deterministic canonical form that re-parses to an equal value.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        s.push_str("[robot]\n");
        s.push_str(&format!("count = {}\n", self.robot.count));
        match &self.robot.initial {
            InitialPositions::Random { seed, bounds } => {
                s.push_str("initial_position = random\n");
                s.push_str(&format!("seed = {seed}\n"));
                let rows: Vec<Vec<f64>> = bounds.iter().map(|&(a, b)| vec![a, b]).collect();
                s.push_str(&format!("box = {}\n", fmt_matrix(&rows)));
            }
            InitialPositions::Explicit(positions) => {
                s.push_str("initial_position = explicit\n");
                for (i, p) in positions.iter().enumerate() {
                    s.push_str(&format!("position_{} = {}\n", i + 1, fmt_vec(&[p.x, p.y, p.z])));
                }
            }
        }
        let p = &self.robot.params;
        s.push_str(&format!("mass = {}\n", p.mass));
        s.push_str(&format!("gravity = {}\n", p.gravity));
        s.push_str(&format!(
            "inertia = {}\n",
            fmt_vec(&[p.inertia[0][0], p.inertia[1][1], p.inertia[2][2]])
        ));
        s.push_str(&format!("lift = {}\n", p.lift_coeff));
        s.push_str(&format!("torque = {}\n", p.torque_coeff));
        s.push_str(&format!("arm = {}\n", p.arm_len));
        s.push_str(&format!("drag = {}\n", fmt_vec(&[p.drag_diag.x, p.drag_diag.y, p.drag_diag.z])));
        s.push_str(&format!("rotor_max = {}\n", p.rotor_max));

        s.push_str("\n[control]\n");
        match &self.law {
            LawConfig::Waypoint(w) => {
                s.push_str("law = waypoint\n");
                s.push_str("\n[control.waypoint]\n");
                s.push_str(&format!("p_gain = {}\n", w.p_gain));
                s.push_str(&format!("d_gain = {}\n", w.d_gain));
                s.push_str(&format!("waypoints = {}\n", fmt_pairs(&w.waypoints)));
            }
            LawConfig::Consensus(c) => {
                s.push_str("law = consensus\n");
                s.push_str("\n[control.consensus]\n");
                s.push_str(&format!("leader = {}\n", c.leader));
                let kind = match c.matrix_kind {
                    MatrixKind::Adjacency => "adjacency",
                    MatrixKind::Laplacian => "laplacian",
                };
                s.push_str(&format!("matrix_kind = {kind}\n"));
                s.push_str(&format!("matrix = {}\n", fmt_matrix(&c.matrix)));
                s.push_str(&format!("beta = {}\n", c.beta));
            }
            LawConfig::MinMax(m) => {
                s.push_str("law = minmax\n");
                s.push_str("\n[control.minmax]\n");
                s.push_str(&format!("root = {}\n", m.root));
                s.push_str(&format!("bounds = {}\n", fmt_vec(&m.bounds)));
                if let Some(tree) = &m.tree {
                    let pairs: Vec<(f64, f64)> =
                        tree.iter().map(|&(c, p)| (c as f64, p as f64)).collect();
                    s.push_str(&format!("tree = {}\n", fmt_pairs(&pairs)));
                }
                if let Some(matrix) = &m.matrix {
                    let kind = match m.matrix_kind {
                        MatrixKind::Adjacency => "adjacency",
                        MatrixKind::Laplacian => "laplacian",
                    };
                    s.push_str(&format!("matrix_kind = {kind}\n"));
                    s.push_str(&format!("matrix = {}\n", fmt_matrix(matrix)));
                }
                s.push_str(&format!("deadband = {}\n", m.deadband));
                let mag = match m.magnitude {
                    MinMaxMagnitude::Full => "full",
                    MinMaxMagnitude::Relative => "relative",
                };
                s.push_str(&format!("magnitude = {mag}\n"));
                if let Some(wp) = &m.root_waypoints {
                    s.push_str(&format!("root_waypoints = {}\n", fmt_pairs(wp)));
                }
            }
            LawConfig::Custom { name } => {
                s.push_str("law = custom\n");
                s.push_str(&format!("name = {name}\n"));
            }
        }

        s.push_str("\n[output]\n");
        s.push_str(&format!("velocity_plot = {}\n", self.output.velocity_plot));
        s.push_str(&format!("position_plot = {}\n", self.output.position_plot));
        s.push_str(&format!("save_plot = {}\n", self.output.save_plot));
        s.push_str(&format!("show_plot = {}\n", self.output.show_plot));
        s.push_str(&format!("save_data = {}\n", self.output.save_data));

        s.push_str("\n[timing]\n");
        s.push_str(&format!("duration = {}\n", self.timing.duration));
        s.push_str(&format!("physics_dt = {}\n", self.timing.physics_dt));
        s.push_str(&format!("control_dt = {}\n", self.timing.control_dt));

        let g = &self.gains;
        s.push_str("\n[gains]\n");
        for (name, pd) in [
            ("altitude", g.altitude),
            ("heading", g.heading),
            ("roll", g.roll),
            ("pitch", g.pitch),
            ("pos_x", g.pos_x),
            ("pos_y", g.pos_y),
        ] {
            s.push_str(&format!("{name}_kp = {}\n", pd.kp));
            s.push_str(&format!("{name}_kd = {}\n", pd.kd));
        }
        s.push_str(&format!("rotor_bias = {}\n", g.rotor_bias));
        s.push_str(&format!("tilt_clamp = {}\n", g.tilt_clamp));
        s.push_str(&format!("accel_clamp = {}\n", g.accel_clamp));
        s
    }

    /// FNV-1a hash of the canonical form, recorded in trajectory logs.
    pub fn content_hash(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        for byte in self.canonical().bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash
    }
}

/// Reusable `PdGains` from the waypoint block.
impl WaypointConfig {
    pub fn gains(&self) -> PdGains {
        PdGains::new(self.p_gain, self.d_gain)
    }
}
