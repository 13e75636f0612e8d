//! File persistence: alarm-log round trips and table writes, all
//! funneled through helpers that attach the offending path to I/O
//! errors.

use std::path::{Path, PathBuf};

use superlum_core::optics::{cycle_seed, parse_alarm_lines, render_alarm_lines, AlarmLog};
use superlum_core::protocol::CycleSchedule;

use crate::CliError;

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_alarm_logs(path: &Path, logs: &[AlarmLog]) -> Result<(), CliError> {
    write_file(path, &render_alarm_lines(logs))
}

/// Loads alarm logs and reconciles them with the schedule: the wire
/// format carries no record for alarm-free cycles, so missing indices
/// are reconstructed as empty logs with their deterministic seeds.
/// Indices outside the schedule are an error.
pub fn read_alarm_logs(
    path: &Path,
    schedule: &CycleSchedule,
    master_seed: u64,
) -> Result<Vec<AlarmLog>, CliError> {
    let text = read_file(path)?;
    let parsed = parse_alarm_lines(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let expected = schedule.total_cycles() as u64;
    let mut by_index: std::collections::BTreeMap<u64, AlarmLog> = std::collections::BTreeMap::new();
    for log in parsed {
        if log.cycle_index >= expected {
            return Err(CliError::Runtime(format!(
                "{}: cycle index {} outside the scheduled {} cycles",
                path.display(),
                log.cycle_index,
                expected
            )));
        }
        by_index.insert(log.cycle_index, log);
    }
    Ok((0..expected)
        .map(|index| {
            by_index.remove(&index).unwrap_or_else(|| AlarmLog {
                cycle_index: index,
                seed: cycle_seed(master_seed, index),
                alarm_times: Vec::new(),
            })
        })
        .collect())
}

pub fn out_path(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(name)
}
