//! Readers for movingai `.map` / `.scen` files and the JSON task format.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::grid::{Agent, Cell, GridMap, MapfInstance};

/// Largest input file any reader accepts.
pub const MAX_FILE_BYTES: u64 = 64 * 1024 * 1024;

fn read_limited(path: &FsPath) -> Result<String, ParseError> {
    let size = fs::metadata(path)?.len();
    if size > MAX_FILE_BYTES {
        return Err(ParseError::TooLarge { size, limit: MAX_FILE_BYTES });
    }
    Ok(fs::read_to_string(path)?)
}

/// Parse movingai map text. Line numbers in errors are 1-based.
pub fn parse_map(text: &str) -> Result<GridMap, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let mut height = None;
    let mut width = None;
    let mut saw_type = false;
    let mut body_start = None;

    for (no, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let value = parts.next();
        let number = |v: Option<&str>| -> Result<u32, ParseError> {
            v.and_then(|s| s.parse().ok())
                .ok_or_else(|| ParseError::at(no, format!("expected a number after `{key}`")))
        };
        match key {
            "type" => saw_type = true,
            "height" => height = Some(number(value)?),
            "width" => width = Some(number(value)?),
            "map" => {
                body_start = Some(no);
                break;
            }
            other => return Err(ParseError::at(no, format!("unexpected header line `{other}`"))),
        }
    }

    let header_end = body_start.ok_or_else(|| ParseError::at(1, "missing `map` line"))?;
    if !saw_type {
        return Err(ParseError::at(1, "missing `type` line"));
    }
    let height = height.ok_or_else(|| ParseError::at(header_end, "missing `height`"))?;
    let width = width.ok_or_else(|| ParseError::at(header_end, "missing `width`"))?;

    let mut map = GridMap::new(width, height);
    let mut rows = 0u32;
    let mut last_line = header_end;
    for (no, line) in lines {
        last_line = no;
        if line.is_empty() && rows == height {
            continue;
        }
        if rows == height {
            return Err(ParseError::at(no, format!("more than {height} map rows")));
        }
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != width as usize {
            return Err(ParseError::at(no, format!("row has {} cells, expected {width}", chars.len())));
        }
        for (col, ch) in chars.into_iter().enumerate() {
            let blocked = match ch {
                '.' | 'G' => false,
                '@' | 'T' | 'O' => true,
                other => return Err(ParseError::at(no, format!("unknown terrain `{other}`"))),
            };
            map.set_blocked(Cell::new(rows, col as u32), blocked);
        }
        rows += 1;
    }
    if rows != height {
        return Err(ParseError::at(last_line, format!("found {rows} map rows, expected {height}")));
    }
    Ok(map)
}

pub fn read_map(path: impl AsRef<FsPath>) -> Result<GridMap, ParseError> {
    parse_map(&read_limited(path.as_ref())?)
}

/// One line of a version-1 `.scen` file. Coordinates are converted from
/// movingai (x = column, y = row) to [`Cell`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScenEntry {
    pub bucket: u32,
    pub map: String,
    pub width: u32,
    pub height: u32,
    pub start: Cell,
    pub goal: Cell,
    pub optimal_length: f64,
}

pub fn parse_scen(text: &str) -> Result<Vec<ScenEntry>, ParseError> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match lines.next() {
        Some((_, l)) if l.split_whitespace().collect::<Vec<_>>() == ["version", "1"] => {}
        Some((_, l)) if l.starts_with("version") => {
            return Err(ParseError::at(1, format!("unsupported scenario `{l}`")));
        }
        _ => return Err(ParseError::at(1, "missing `version 1` line")),
    }
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let fields = if fields.len() == 9 { fields } else { line.split_whitespace().collect() };
        if fields.len() != 9 {
            return Err(ParseError::at(no, format!("expected 9 fields, found {}", fields.len())));
        }
        let num = |i: usize| -> Result<u32, ParseError> {
            fields[i].parse().map_err(|_| ParseError::at(no, format!("field {} is not an integer", i + 1)))
        };
        let optimal_length = fields[8]
            .parse()
            .map_err(|_| ParseError::at(no, "field 9 is not a number"))?;
        out.push(ScenEntry {
            bucket: num(0)?,
            map: fields[1].to_string(),
            width: num(2)?,
            height: num(3)?,
            start: Cell::new(num(5)?, num(4)?),
            goal: Cell::new(num(7)?, num(6)?),
            optimal_length,
        });
    }
    Ok(out)
}

pub fn read_scen(path: impl AsRef<FsPath>) -> Result<Vec<ScenEntry>, ParseError> {
    parse_scen(&read_limited(path.as_ref())?)
}

/// Render entries as a version-1 scenario.
pub fn write_scen(entries: &[ScenEntry]) -> String {
    let mut out = String::from("version 1\n");
    for e in entries {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            e.bucket, e.map, e.width, e.height, e.start.col, e.start.row, e.goal.col, e.goal.row, e.optimal_length
        ));
    }
    out
}

/// Instance from the first `k` scenario entries (all when `k` is `None`).
pub fn instance_from_scen(
    map: GridMap,
    entries: &[ScenEntry],
    k: Option<usize>,
) -> Result<MapfInstance, ParseError> {
    let take = k.unwrap_or(entries.len());
    if take > entries.len() {
        return Err(ParseError::at(0, format!("scenario holds {} agents, {take} requested", entries.len())));
    }
    let agents = entries[..take].iter().map(|e| Agent { start: e.start, goal: e.goal }).collect();
    Ok(MapfInstance::new(map, agents)?)
}

/// Self-contained task description: a map file plus agents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFile {
    pub map_path: PathBuf,
    pub agents: Vec<Agent>,
}

/// Load a JSON task; `map_path` is resolved relative to the task file.
pub fn read_task(path: impl AsRef<FsPath>) -> Result<MapfInstance, ParseError> {
    let path = path.as_ref();
    let task: TaskFile = serde_json::from_str(&read_limited(path)?)?;
    let map_path = match path.parent() {
        Some(dir) if task.map_path.is_relative() => dir.join(&task.map_path),
        _ => task.map_path.clone(),
    };
    let map = read_map(map_path)?;
    Ok(MapfInstance::new(map, task.agents)?)
}
