//! Trajectory logging and the CSV on-disk format.
//!
//! One row per control tick: `t`, then for each agent `i` the columns
//! `pX_i, pY_i, pZ_i, vX_i, vY_i, vZ_i, aX_i, aY_i, aZ_i, roll_i, pitch_i,
//! yaw_i`. Values carry 9 significant digits; newlines are LF.

use crate::dynamics::QuadState;
use crate::frames::{Attitude, Vec3};
use crate::laws::AccelCommand;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum CsvError {
    #[error("csv parse error at line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Run provenance recorded alongside the samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogMeta {
    pub config_hash: u64,
    pub seed: u64,
    pub version: String,
}

/// One agent's sample at one control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSample {
    pub position: Vec3,
    pub velocity: Vec3,
    /// The outer-law acceleration command computed at this tick.
    pub accel_cmd: Vec3,
    pub attitude: Attitude,
}

/// Complete run log: uniformly spaced control ticks for every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub meta: LogMeta,
    pub agent_count: usize,
    pub times: Vec<f64>,
    /// `samples[tick][agent]`.
    pub samples: Vec<Vec<AgentSample>>,
}

impl TrajectoryLog {
    pub fn new(meta: LogMeta, agent_count: usize) -> Self {
        TrajectoryLog { meta, agent_count, times: Vec::new(), samples: Vec::new() }
    }

    pub fn push_tick(&mut self, time: f64, states: &[QuadState], commands: &[AccelCommand]) {
        debug_assert_eq!(states.len(), self.agent_count);
        debug_assert_eq!(commands.len(), self.agent_count);
        self.times.push(time);
        self.samples.push(
            states
                .iter()
                .zip(commands)
                .map(|(s, c)| AgentSample {
                    position: s.position,
                    velocity: s.velocity,
                    accel_cmd: c.accel,
                    attitude: s.attitude,
                })
                .collect(),
        );
    }

    pub fn tick_count(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Position trace of one agent as (t, position) pairs.
    pub fn position_trace(&self, agent: usize) -> impl Iterator<Item = (f64, Vec3)> + '_ {
        self.times
            .iter()
            .zip(self.samples.iter())
            .map(move |(&t, row)| (t, row[agent].position))
    }

    pub fn velocity_trace(&self, agent: usize) -> impl Iterator<Item = (f64, Vec3)> + '_ {
        self.times
            .iter()
            .zip(self.samples.iter())
            .map(move |(&t, row)| (t, row[agent].velocity))
    }

    pub fn header(agent_count: usize) -> String {
        let mut cols = vec!["t".to_string()];
        for i in 1..=agent_count {
            for field in ["pX", "pY", "pZ", "vX", "vY", "vZ", "aX", "aY", "aZ", "roll", "pitch", "yaw"] {
                cols.push(format!("{field}_{i}"));
            }
        }
        cols.join(",")
    }

    /// Render the full CSV, LF newlines, 9 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&Self::header(self.agent_count));
        out.push('\n');
        for (t, row) in self.times.iter().zip(self.samples.iter()) {
            let mut fields = Vec::with_capacity(1 + 12 * self.agent_count);
            fields.push(fmt_sig(*t));
            for s in row {
                for v in [
                    s.position.x,
                    s.position.y,
                    s.position.z,
                    s.velocity.x,
                    s.velocity.y,
                    s.velocity.z,
                    s.accel_cmd.x,
                    s.accel_cmd.y,
                    s.accel_cmd.z,
                    s.attitude.roll,
                    s.attitude.pitch,
                    s.attitude.yaw,
                ] {
                    fields.push(fmt_sig(v));
                }
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Write the CSV to a file.
    pub fn write_csv(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    /// Parse a CSV produced by [`Self::to_csv`]. Provenance metadata is not
    /// stored in the file, so `meta` comes back default.
    pub fn from_csv(text: &str) -> Result<TrajectoryLog, CsvError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(CsvError::Format { line: 1, message: "empty file".to_string() })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 13 || !(cols.len() - 1).is_multiple_of(12) {
            return Err(CsvError::Format {
                line: 1,
                message: format!("expected 1 + 12n columns, got {}", cols.len()),
            });
        }
        let agent_count = (cols.len() - 1) / 12;
        if header != Self::header(agent_count) {
            return Err(CsvError::Format { line: 1, message: "unexpected header columns".to_string() });
        }
        let mut log = TrajectoryLog::new(LogMeta::default(), agent_count);
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 1 + 12 * agent_count {
                return Err(CsvError::Format {
                    line: line_no,
                    message: format!("expected {} fields, got {}", 1 + 12 * agent_count, fields.len()),
                });
            }
            let num = |s: &str| -> Result<f64, CsvError> {
                s.parse::<f64>().map_err(|_| CsvError::Format {
                    line: line_no,
                    message: format!("'{s}' is not a number"),
                })
            };
            log.times.push(num(fields[0])?);
            let mut row = Vec::with_capacity(agent_count);
            for a in 0..agent_count {
                let base = 1 + 12 * a;
                let f: Vec<f64> = fields[base..base + 12]
                    .iter()
                    .map(|s| num(s))
                    .collect::<Result<_, _>>()?;
                row.push(AgentSample {
                    position: Vec3::new(f[0], f[1], f[2]),
                    velocity: Vec3::new(f[3], f[4], f[5]),
                    accel_cmd: Vec3::new(f[6], f[7], f[8]),
                    attitude: Attitude { roll: f[9], pitch: f[10], yaw: f[11] },
                });
            }
            log.samples.push(row);
        }
        Ok(log)
    }
}

/// 9 significant digits in scientific notation.
fn fmt_sig(v: f64) -> String {
    format!("{v:.8e}")
}
