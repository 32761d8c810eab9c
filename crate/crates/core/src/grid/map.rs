use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A grid cell addressed as (row, col), origin top-left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Cell {
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub const fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }

    /// True when `other` is this cell or one of its four neighbours.
    pub fn adjacent_or_same(self, other: Cell) -> bool {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col) <= 1
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn euclidean(self, other: Cell) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        (dr * dr + dc * dc).sqrt()
    }

    /// Cell reached by applying a signed offset, if it stays non-negative.
    pub fn offset(self, drow: i32, dcol: i32) -> Option<Cell> {
        let row = self.row as i64 + drow as i64;
        let col = self.col as i64 + dcol as i64;
        if row < 0 || col < 0 || row > u32::MAX as i64 || col > u32::MAX as i64 {
            return None;
        }
        Some(Cell::new(row as u32, col as u32))
    }
}

impl From<[u32; 2]> for Cell {
    fn from(rc: [u32; 2]) -> Self {
        Cell::new(rc[0], rc[1])
    }
}

impl From<Cell> for [u32; 2] {
    fn from(c: Cell) -> Self {
        [c.row, c.col]
    }
}

impl From<(u32, u32)> for Cell {
    fn from((row, col): (u32, u32)) -> Self {
        Cell::new(row, col)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Distance value used for cells that cannot reach the source.
pub const UNREACHABLE: u32 = u32::MAX;

/// Static 4-connected grid world. Blocked cells are hard obstacles.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridMap {
    width: u32,
    height: u32,
    blocked: Vec<bool>,
}

impl GridMap {
    /// An obstacle-free map.
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            blocked: vec![false; (width as usize) * (height as usize)],
        }
    }

    /// Build a map from a list of blocked cells. Cells outside the bounds are ignored.
    pub fn with_blocked<I: IntoIterator<Item = Cell>>(width: u32, height: u32, blocked: I) -> Self {
        let mut map = Self::new(width, height);
        for c in blocked {
            if map.in_bounds(c) {
                let idx = map.index(c);
                map.blocked[idx] = true;
            }
        }
        map
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.blocked.len()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.row < self.height && c.col < self.width
    }

    /// Row-major linear index. Caller guarantees `c` is in bounds.
    #[inline]
    pub fn index(&self, c: Cell) -> usize {
        c.row as usize * self.width as usize + c.col as usize
    }

    #[inline]
    pub fn cell(&self, idx: usize) -> Cell {
        Cell::new((idx / self.width as usize) as u32, (idx % self.width as usize) as u32)
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.blocked[self.index(c)]
    }

    /// In bounds and not a hard obstacle.
    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked[self.index(c)]
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        if self.in_bounds(c) {
            let idx = self.index(c);
            self.blocked[idx] = blocked;
        }
    }

    pub fn blocked_cells(&self) -> Vec<Cell> {
        (0..self.blocked.len())
            .filter(|&i| self.blocked[i])
            .map(|i| self.cell(i))
            .collect()
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.blocked.len())
            .filter(|&i| !self.blocked[i])
            .map(|i| self.cell(i))
            .collect()
    }

    /// Free 4-neighbours of `c`, in the fixed order up, down, left, right.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        crate::grid::MOVES
            .iter()
            .filter_map(move |&(dr, dc)| c.offset(dr, dc))
            .filter(move |&n| self.is_free(n))
    }

    /// Breadth-first distances from `source` over free cells, indexed by
    /// [`GridMap::index`]. Unreachable cells hold [`UNREACHABLE`].
    pub fn bfs_distances(&self, source: Cell) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.blocked.len()];
        if !self.is_free(source) {
            return dist;
        }
        let mut queue = VecDeque::new();
        dist[self.index(source)] = 0;
        queue.push_back(source);
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c)];
            for n in self.neighbors(c) {
                let ni = self.index(n);
                if dist[ni] == UNREACHABLE {
                    dist[ni] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Connected-component label per cell (`u32::MAX` for blocked cells).
    /// Labels are assigned in row-major order of first discovery.
    pub fn components(&self) -> Vec<u32> {
        let mut label = vec![u32::MAX; self.blocked.len()];
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..self.blocked.len() {
            if self.blocked[start] || label[start] != u32::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(self.cell(start));
            while let Some(c) = queue.pop_front() {
                for n in self.neighbors(c) {
                    let ni = self.index(n);
                    if label[ni] == u32::MAX {
                        label[ni] = next;
                        queue.push_back(n);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Free cells of the largest connected region (ties broken by lowest label).
    pub fn largest_region(&self) -> Vec<Cell> {
        let labels = self.components();
        let count = labels.iter().filter(|&&l| l != u32::MAX).map(|&l| l as usize + 1).max().unwrap_or(0);
        if count == 0 {
            return Vec::new();
        }
        let mut sizes = vec![0usize; count];
        for &l in &labels {
            if l != u32::MAX {
                sizes[l as usize] += 1;
            }
        }
        let best = (0..count).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
        (0..labels.len())
            .filter(|&i| labels[i] == best as u32)
            .map(|i| self.cell(i))
            .collect()
    }

    /// Render in movingai `.map` format.
    pub fn to_movingai(&self) -> String {
        let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        for r in 0..self.height {
            for c in 0..self.width {
                out.push(if self.is_blocked(Cell::new(r, c)) { '@' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}
