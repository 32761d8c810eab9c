//! Map families used for evaluation.
//!
//! Random maps are redrawn per instance. Maze, room and warehouse layouts
//! are deterministic; their 25×25 versions are frozen under `fixtures/maps`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::grid::{Cell, GridMap};

/// Blocked fraction of the 25×25 maze.
pub const MAZE_RATE: f64 = 0.4576;
/// Doors left closed in the room layout, as a fraction of all doors.
const ROOM_CLOSED_DOORS: f64 = 5.0 / 24.0;
const MAZE_SEED: u64 = 0x6d617a65;
const ROOM_SEED: u64 = 0x726f6f6d;
const RANDOM_RETRIES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Random,
    Empty,
    Maze,
    Room,
    Warehouse,
}

impl MapKind {
    pub const ALL: [MapKind; 5] = [MapKind::Random, MapKind::Empty, MapKind::Maze, MapKind::Room, MapKind::Warehouse];

    pub fn name(self) -> &'static str {
        match self {
            MapKind::Random => "random",
            MapKind::Empty => "empty",
            MapKind::Maze => "maze",
            MapKind::Room => "room",
            MapKind::Warehouse => "warehouse",
        }
    }

    /// Whether every instance gets a fresh layout.
    pub fn is_random(self) -> bool {
        self == MapKind::Random
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MapKind {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| BenchError::UnknownKind(s.to_string()))
    }
}

/// Number of blocked cells for `rate` on `cells` cells, half rounded up.
pub fn blocked_target(rate: f64, cells: usize) -> usize {
    (rate * cells as f64).round() as usize
}

/// Generate a `size`×`size` map. `obstacle_rate` applies to random maps
/// only; `seed` affects random maps only.
pub fn gen_map(kind: MapKind, size: u32, obstacle_rate: f64, seed: u64) -> Result<GridMap, BenchError> {
    match kind {
        MapKind::Random => random_map(size, size, obstacle_rate, seed),
        MapKind::Empty => Ok(GridMap::new(size, size)),
        MapKind::Maze => Ok(maze_map(size, size)),
        MapKind::Room => Ok(room_map(size, size)),
        MapKind::Warehouse => Ok(warehouse_map(size, size)),
    }
}

/// Exactly `round(rate · cells)` blocked cells drawn without replacement.
/// Redraws while the largest free region holds fewer than two cells.
pub fn random_map(width: u32, height: u32, rate: f64, seed: u64) -> Result<GridMap, BenchError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(BenchError::Infeasible(rate));
    }
    let n = (width * height) as usize;
    let k = blocked_target(rate, n);
    if n.saturating_sub(k) < 2 {
        return Err(BenchError::Infeasible(rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: Vec<Cell> = (0..height).flat_map(|r| (0..width).map(move |c| Cell::new(r, c))).collect();
    for _ in 0..RANDOM_RETRIES {
        cells.shuffle(&mut rng);
        let map = GridMap::with_blocked(width, height, cells[..k].iter().copied());
        if map.largest_region().len() >= 2 {
            return Ok(map);
        }
    }
    Err(BenchError::Infeasible(rate))
}

/// Shelf blocks six cells wide on every other row, with one-cell aisles
/// between blocks and a two- or three-cell margin around the shelving.
pub fn warehouse_map(width: u32, height: u32) -> GridMap {
    let mut blocked = Vec::new();
    let mut r = 3;
    while r + 4 <= height {
        let mut c0 = 2;
        while c0 + 6 + 3 <= width {
            blocked.extend((c0..c0 + 6).map(|c| Cell::new(r, c)));
            c0 += 7;
        }
        r += 2;
    }
    GridMap::with_blocked(width, height, blocked)
}

fn wall_lines(len: u32) -> Vec<u32> {
    (1..).map(|k| 6 * k).take_while(|&x| x + 1 < len).collect()
}

/// Rooms separated by walls every sixth row and column. Every wall segment
/// between two wall crossings has a one-cell door at its middle, and a
/// fixed fifth of the doors stay shut without disconnecting any room.
pub fn room_map(width: u32, height: u32) -> GridMap {
    let rows = wall_lines(height);
    let cols = wall_lines(width);
    let mut map = GridMap::new(width, height);
    for &r in &rows {
        for c in 0..width {
            map.set_blocked(Cell::new(r, c), true);
        }
    }
    for &c in &cols {
        for r in 0..height {
            map.set_blocked(Cell::new(r, c), true);
        }
    }
    let segments = |cuts: &[u32], len: u32| -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        let mut lo = 0;
        for &x in cuts.iter().chain(std::iter::once(&len)) {
            out.push((lo, x - 1));
            lo = x + 1;
        }
        out
    };
    let mut doors = Vec::new();
    for &r in &rows {
        for (a, b) in segments(&cols, width) {
            doors.push(Cell::new(r, (a + b) / 2));
        }
    }
    for &c in &cols {
        for (a, b) in segments(&rows, height) {
            doors.push(Cell::new((a + b) / 2, c));
        }
    }
    for &d in &doors {
        map.set_blocked(d, false);
    }
    let want_closed = (ROOM_CLOSED_DOORS * doors.len() as f64).round() as usize;
    let free = map.free_cells().len();
    let mut rng = ChaCha8Rng::seed_from_u64(ROOM_SEED);
    doors.shuffle(&mut rng);
    let mut closed = 0;
    for d in doors {
        if closed == want_closed {
            break;
        }
        map.set_blocked(d, true);
        if map.largest_region().len() == free - closed - 1 {
            closed += 1;
        } else {
            map.set_blocked(d, false);
        }
    }
    map
}

/// Recursive-division maze with one-cell corridors, then loops opened in
/// random interior walls until the blocked fraction reaches [`MAZE_RATE`].
pub fn maze_map(width: u32, height: u32) -> GridMap {
    let mut map = GridMap::new(width, height);
    let mut rng = ChaCha8Rng::seed_from_u64(MAZE_SEED);
    // Corridor cells sit on odd coordinates; everything else starts as wall
    // on the border and is drawn in by the division.
    let last_odd = |n: u32| if n < 3 { 0 } else if (n - 2) % 2 == 1 { n - 2 } else { n - 3 };
    let (r1, c1) = (last_odd(height), last_odd(width));
    for r in 0..height {
        for c in 0..width {
            if r == 0 || c == 0 || r > r1 || c > c1 {
                map.set_blocked(Cell::new(r, c), true);
            }
        }
    }
    if r1 == 0 || c1 == 0 {
        return map;
    }
    divide(&mut map, 1, r1, 1, c1, &mut rng);

    let target = blocked_target(MAZE_RATE, map.num_cells());
    let mut candidates: Vec<Cell> = (1..r1)
        .flat_map(|r| (1..c1).map(move |c| Cell::new(r, c)))
        .filter(|c| (c.row + c.col) % 2 == 1 && map.is_blocked(*c))
        .collect();
    candidates.shuffle(&mut rng);
    let surplus = map.blocked_count().saturating_sub(target);
    for c in candidates.into_iter().take(surplus) {
        map.set_blocked(c, false);
    }
    map
}

/// Split the chamber of corridor cells `[r0, r1] × [c0, c1]` (odd bounds).
fn divide(map: &mut GridMap, r0: u32, r1: u32, c0: u32, c1: u32, rng: &mut ChaCha8Rng) {
    let (h, w) = ((r1 - r0) / 2 + 1, (c1 - c0) / 2 + 1);
    if h < 2 && w < 2 {
        return;
    }
    let horizontal = if h == w { rng.gen_bool(0.5) } else { h > w };
    if horizontal {
        let wall = r0 + 1 + 2 * rng.gen_range(0..h - 1);
        let gap = c0 + 2 * rng.gen_range(0..w);
        for c in c0..=c1 {
            if c != gap {
                map.set_blocked(Cell::new(wall, c), true);
            }
        }
        // The wall row also covers the pillars just outside the chamber's columns.
        for c in [c0 - 1, c1 + 1] {
            map.set_blocked(Cell::new(wall, c), true);
        }
        divide(map, r0, wall - 1, c0, c1, rng);
        divide(map, wall + 1, r1, c0, c1, rng);
    } else {
        let wall = c0 + 1 + 2 * rng.gen_range(0..w - 1);
        let gap = r0 + 2 * rng.gen_range(0..h);
        for r in r0 - 1..=r1 + 1 {
            if r != gap {
                map.set_blocked(Cell::new(r, wall), true);
            }
        }
        divide(map, r0, r1, c0, wall - 1, rng);
        divide(map, r0, r1, wall + 1, c1, rng);
    }
}
