//! Environment geometry: occupancy grid, free-space queries, segment casting
//! against walls, neighborhoods and obstacle-aware shortest paths.
//!
//! Cells are indexed `(col, row)` with row 0 at `y = 0`. A position belongs to
//! the cell found by floor division, so a point on a cell's max edge belongs
//! to the next cell.
//!
//! World files are plain text. The first non-comment line holds
//! `width_m height_m cell_size`; each following line is one grid row, listed
//! from the top (largest `y`) down. `#` marks a blocked cell, `.` a free cell
//! and `S` the (free) cell holding the gas source. Lines starting with `;`
//! are comments.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Slack, in cell units, applied before flooring so that exact boundaries
/// computed in floating point land in the next cell.
const FLOOR_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Which grid line a segment crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Crossing {
    Start,
    /// A line `x = const`.
    Vertical,
    /// A line `y = const`.
    Horizontal,
}

/// Immutable 2-D occupancy grid with a known source location.
#[derive(Debug, Clone)]
pub struct GridWorld {
    cols: usize,
    rows: usize,
    cell_size: f64,
    blocked: Vec<bool>,
    source: Vec2,
    /// Dense cell -> free id map (`u32::MAX` for blocked cells).
    free_id: Vec<u32>,
    free_cells: Vec<CellIndex>,
    /// Center of each free cell, by free id.
    centers: Vec<Vec2>,
    /// Free 4-neighbors of each free cell, by free id.
    neighbors4: Vec<Vec<u32>>,
}

impl GridWorld {
    /// Builds a world from a row-major occupancy vector (`true` = blocked).
    pub fn new(
        width_m: f64,
        height_m: f64,
        cell_size: f64,
        blocked: Vec<bool>,
        source: Vec2,
    ) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Parameter(format!("cell_size must be positive, got {cell_size}")));
        }
        let cols = whole_cells(width_m, cell_size, "width_m")?;
        let rows = whole_cells(height_m, cell_size, "height_m")?;
        if blocked.len() != cols * rows {
            return Err(Error::Geometry(format!(
                "occupancy has {} cells, expected {cols}x{rows}",
                blocked.len()
            )));
        }

        let mut free_id = vec![u32::MAX; cols * rows];
        let mut free_cells = Vec::new();
        for row in 0..rows {
            for col in 0..cols {
                let k = row * cols + col;
                if !blocked[k] {
                    free_id[k] = free_cells.len() as u32;
                    free_cells.push(CellIndex::new(col, row));
                }
            }
        }
        if free_cells.is_empty() {
            return Err(Error::Geometry("world has no free cell".into()));
        }

        let mut neighbors4 = Vec::with_capacity(free_cells.len());
        for c in &free_cells {
            let mut nb = Vec::with_capacity(4);
            for (dc, dr) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (nc, nr) = (c.col as i64 + dc, c.row as i64 + dr);
                if nc < 0 || nr < 0 || nc >= cols as i64 || nr >= rows as i64 {
                    continue;
                }
                let id = free_id[nr as usize * cols + nc as usize];
                if id != u32::MAX {
                    nb.push(id);
                }
            }
            neighbors4.push(nb);
        }

        let centers = free_cells
            .iter()
            .map(|c| Vec2::new((c.col as f64 + 0.5) * cell_size, (c.row as f64 + 0.5) * cell_size))
            .collect();
        let world = Self {
            cols,
            rows,
            cell_size,
            blocked,
            source,
            free_id,
            free_cells,
            centers,
            neighbors4,
        };
        if !world.is_free(source) {
            return Err(Error::Geometry(format!("source {source} is not in a free cell")));
        }
        world.check_connected()?;
        Ok(world)
    }

    /// An obstacle-free world.
    pub fn open(width_m: f64, height_m: f64, cell_size: f64, source: Vec2) -> Result<Self> {
        let cols = whole_cells(width_m, cell_size, "width_m")?;
        let rows = whole_cells(height_m, cell_size, "height_m")?;
        Self::new(width_m, height_m, cell_size, vec![false; cols * rows], source)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config { field, msg, .. } => Error::config(path, field, msg),
            other => Error::config(path, "world", other.to_string()),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::config("<world>", "world", msg);
        let mut lines = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with(';'));
        let header = lines.next().ok_or_else(|| bad("missing header line".into()))?;
        let nums: Vec<f64> = header
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("header `{header}`: {e}")))?;
        let [width_m, height_m, cell_size] = nums[..] else {
            return Err(bad(format!(
                "header must be `width_m height_m cell_size`, got `{header}`"
            )));
        };
        let cols = whole_cells(width_m, cell_size, "width_m").map_err(|e| bad(e.to_string()))?;
        let rows = whole_cells(height_m, cell_size, "height_m").map_err(|e| bad(e.to_string()))?;

        let grid: Vec<&str> = lines.map(str::trim).collect();
        if grid.len() != rows {
            return Err(bad(format!("expected {rows} grid rows, found {}", grid.len())));
        }
        let mut blocked = vec![false; cols * rows];
        let mut source = None;
        for (i, line) in grid.iter().enumerate() {
            let row = rows - 1 - i;
            let chars: Vec<char> = line.chars().collect();
            if chars.len() != cols {
                return Err(bad(format!(
                    "grid line {} has {} cells, expected {cols}",
                    i + 1,
                    chars.len()
                )));
            }
            for (col, ch) in chars.into_iter().enumerate() {
                match ch {
                    '#' => blocked[row * cols + col] = true,
                    '.' => {}
                    'S' => {
                        if source.is_some() {
                            return Err(bad("more than one `S` cell".into()));
                        }
                        source = Some(Vec2::new(
                            (col as f64 + 0.5) * cell_size,
                            (row as f64 + 0.5) * cell_size,
                        ));
                    }
                    other => {
                        return Err(bad(format!("unexpected character `{other}` in grid")));
                    }
                }
            }
        }
        let source = source.ok_or_else(|| bad("no `S` source cell".into()))?;
        Self::new(width_m, height_m, cell_size, blocked, source).map_err(|e| bad(e.to_string()))
    }

    /// Serializes back into the world file format.
    pub fn to_text(&self) -> String {
        let src = self.cell_of(self.source).ok();
        let mut out = format!("{} {} {}\n", self.width_m(), self.height_m(), self.cell_size);
        for row in (0..self.rows).rev() {
            for col in 0..self.cols {
                let c = CellIndex::new(col, row);
                out.push(if Some(c) == src {
                    'S'
                } else if self.is_blocked(c) {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }

    /// Same geometry with a different source position.
    pub fn with_source(&self, source: Vec2) -> Result<Self> {
        if !self.is_free(source) {
            return Err(Error::Geometry(format!("source {source} is not in a free cell")));
        }
        let mut w = self.clone();
        w.source = source;
        Ok(w)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width_m(&self) -> f64 {
        self.cols as f64 * self.cell_size
    }

    pub fn height_m(&self) -> f64 {
        self.rows as f64 * self.cell_size
    }

    pub fn source_pos(&self) -> Vec2 {
        self.source
    }

    pub fn n_free(&self) -> usize {
        self.free_cells.len()
    }

    /// Free cells in free-id order.
    pub fn free_cells(&self) -> &[CellIndex] {
        &self.free_cells
    }

    /// Cell centers in free-id order.
    pub fn free_centers(&self) -> &[Vec2] {
        &self.centers
    }

    pub fn free_id(&self, c: CellIndex) -> Option<usize> {
        if c.col >= self.cols || c.row >= self.rows {
            return None;
        }
        let id = self.free_id[c.row * self.cols + c.col];
        (id != u32::MAX).then_some(id as usize)
    }

    pub(crate) fn neighbors4(&self, id: usize) -> &[u32] {
        &self.neighbors4[id]
    }

    pub fn is_blocked(&self, c: CellIndex) -> bool {
        self.blocked[c.row * self.cols + c.col]
    }

    pub fn in_bounds(&self, pos: Vec2) -> bool {
        pos.x >= 0.0 && pos.y >= 0.0 && pos.x < self.width_m() && pos.y < self.height_m()
    }

    pub fn cell_of(&self, pos: Vec2) -> Result<CellIndex> {
        self.try_cell_of(pos).ok_or(Error::OutOfBounds(pos))
    }

    fn try_cell_of(&self, pos: Vec2) -> Option<CellIndex> {
        if !pos.is_finite() || pos.x < 0.0 || pos.y < 0.0 {
            return None;
        }
        let col = (pos.x / self.cell_size + FLOOR_EPS).floor();
        let row = (pos.y / self.cell_size + FLOOR_EPS).floor();
        if col >= self.cols as f64 || row >= self.rows as f64 {
            return None;
        }
        Some(CellIndex::new(col as usize, row as usize))
    }

    pub fn cell_center(&self, c: CellIndex) -> Vec2 {
        Vec2::new(
            (c.col as f64 + 0.5) * self.cell_size,
            (c.row as f64 + 0.5) * self.cell_size,
        )
    }

    /// In bounds and inside a free cell.
    pub fn is_free(&self, pos: Vec2) -> bool {
        self.try_cell_of(pos).is_some_and(|c| !self.is_blocked(c))
    }

    /// All free cells whose center lies within `radius_m` of `center`'s center.
    pub fn neighborhood(&self, center: CellIndex, radius_m: f64) -> Vec<CellIndex> {
        self.neighborhood_ids(center, radius_m)
            .into_iter()
            .map(|id| self.free_cells[id])
            .collect()
    }

    /// Same as [`GridWorld::neighborhood`], returned as free ids.
    pub fn neighborhood_ids(&self, center: CellIndex, radius_m: f64) -> Vec<usize> {
        let r = radius_m.max(0.0);
        let reach = (r / self.cell_size).floor() as i64 + 1;
        let r_cells_sq = (r / self.cell_size).powi(2) + 1e-9;
        let mut out = Vec::new();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                if (dc * dc + dr * dr) as f64 > r_cells_sq {
                    continue;
                }
                let (c, rw) = (center.col as i64 + dc, center.row as i64 + dr);
                if c < 0 || rw < 0 {
                    continue;
                }
                if let Some(id) = self.free_id(CellIndex::new(c as usize, rw as usize)) {
                    out.push(id);
                }
            }
        }
        out
    }

    /// Splits the segment `a -> b` at every grid line it crosses. Returns the
    /// crossing parameters in `[0, 1]` (starting with 0) and, for each
    /// sub-interval, the cell containing its midpoint (`None` out of bounds).
    pub(crate) fn segment_intervals(&self, a: Vec2, b: Vec2) -> Vec<(f64, Crossing, Option<CellIndex>)> {
        let d = b - a;
        let mut ts: Vec<(f64, Crossing)> = vec![(0.0, Crossing::Start)];
        let cs = self.cell_size;
        let mut push_axis = |p0: f64, p1: f64, dp: f64, kind: Crossing| {
            if dp == 0.0 {
                return;
            }
            let (lo, hi) = if p0 < p1 { (p0, p1) } else { (p1, p0) };
            let first = (lo / cs).floor() as i64 + 1;
            let last = (hi / cs).ceil() as i64 - 1;
            for k in first..=last {
                let t = (k as f64 * cs - p0) / dp;
                if t > 0.0 && t < 1.0 {
                    ts.push((t, kind));
                }
            }
        };
        push_axis(a.x, b.x, d.x, Crossing::Vertical);
        push_axis(a.y, b.y, d.y, Crossing::Horizontal);
        ts.sort_by(|p, q| p.0.total_cmp(&q.0));

        let mut out = Vec::with_capacity(ts.len());
        for (i, &(t0, kind)) in ts.iter().enumerate() {
            let t1 = ts.get(i + 1).map_or(1.0, |p| p.0);
            if t1 - t0 <= 1e-12 && !(i == 0 && ts.len() == 1) {
                continue;
            }
            let mid = a + d * (0.5 * (t0 + t1));
            out.push((t0, kind, self.try_cell_of(mid)));
        }
        out
    }

    /// Parameter in `[0, 1]` where `a -> b` first enters a blocked cell (or
    /// leaves the world when `bounds_block` is set), with the crossed line.
    pub(crate) fn first_obstruction(
        &self,
        a: Vec2,
        b: Vec2,
        bounds_block: bool,
    ) -> Option<(f64, Crossing)> {
        self.segment_intervals(a, b)
            .into_iter()
            .find(|(_, _, cell)| match cell {
                Some(c) => self.is_blocked(*c),
                None => bounds_block,
            })
            .map(|(t, kind, _)| (t, kind))
    }

    /// True when the straight segment stays inside free cells.
    pub fn line_of_sight(&self, a: Vec2, b: Vec2) -> bool {
        self.first_obstruction(a, b, true).is_none()
    }

    /// Moves from `from` toward `to`, stopping `margin` before the first
    /// blocked cell or world edge on the way.
    pub fn truncate_segment(&self, from: Vec2, to: Vec2, margin: f64) -> Vec2 {
        let len = from.dist(to);
        if len == 0.0 {
            return from;
        }
        match self.first_obstruction(from, to, true) {
            None => to,
            Some((t, _)) => {
                let t = (t - margin / len).max(0.0);
                from + (to - from) * t
            }
        }
    }

    /// Length of the shortest path on the 8-connected free-cell graph between
    /// the cells containing `a` and `b`. Diagonal steps cost `sqrt(2)` cells
    /// and may not cut a blocked corner.
    pub fn grid_path_len(&self, a: Vec2, b: Vec2) -> Result<f64> {
        let (sa, sb) = (self.free_cell_of(a)?, self.free_cell_of(b)?);
        let start = self.free_id(sa).unwrap_or_default();
        let goal = self.free_id(sb).unwrap_or_default();
        let mut dist = vec![f64::INFINITY; self.n_free()];
        let mut heap = BinaryHeap::new();
        dist[start] = 0.0;
        heap.push(HeapEntry(0.0, start));
        while let Some(HeapEntry(d, u)) = heap.pop() {
            if u == goal {
                return Ok(d * self.cell_size);
            }
            if d > dist[u] {
                continue;
            }
            let c = self.free_cells[u];
            for (dc, dr) in NEIGHBORS8 {
                let (nc, nr) = (c.col as i64 + dc, c.row as i64 + dr);
                let Some(v) = self.free_id_i(nc, nr) else { continue };
                let diagonal = dc != 0 && dr != 0;
                if diagonal
                    && (self.free_id_i(c.col as i64 + dc, c.row as i64).is_none()
                        || self.free_id_i(c.col as i64, c.row as i64 + dr).is_none())
                {
                    continue;
                }
                let nd = d + if diagonal { std::f64::consts::SQRT_2 } else { 1.0 };
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(HeapEntry(nd, v));
                }
            }
        }
        Err(Error::Geometry(format!("no path between {a} and {b}")))
    }

    /// Length of the shortest obstacle-avoiding path between two free points.
    pub fn shortest_path_len(&self, a: Vec2, b: Vec2) -> Result<f64> {
        self.shortest_path(a, b).map(|(len, _)| len)
    }

    /// Euclidean shortest path between two free points, as its length and
    /// waypoints (`a` first, `b` last). Blocked cells and the world edge are
    /// walls; the path may graze wall faces and bends only at convex wall
    /// corners, so this is a visibility-graph search over those corners.
    pub fn shortest_path(&self, a: Vec2, b: Vec2) -> Result<(f64, Vec<Vec2>)> {
        self.free_cell_of(a)?;
        self.free_cell_of(b)?;
        if self.line_of_sight(a, b) {
            return Ok((a.dist(b), vec![a, b]));
        }
        let mut nodes = vec![a, b];
        nodes.extend(self.convex_corners());
        let n = nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[0] = 0.0;
        heap.push(HeapEntry(0.0, 0));
        while let Some(HeapEntry(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u == 1 {
                let mut path = vec![nodes[1]];
                let mut k = 1;
                while prev[k] != usize::MAX {
                    k = prev[k];
                    path.push(nodes[k]);
                }
                path.reverse();
                return Ok((d, path));
            }
            for v in 1..n {
                if done[v] {
                    continue;
                }
                let nd = d + nodes[u].dist(nodes[v]);
                if nd < dist[v] && self.line_of_sight(nodes[u], nodes[v]) {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(HeapEntry(nd, v));
                }
            }
        }
        Err(Error::Geometry(format!("no path between {a} and {b}")))
    }

    /// Grid vertices with exactly one blocked (or out-of-bounds) cell among
    /// the four around them, nudged a hair into the free quadrant.
    fn convex_corners(&self) -> Vec<Vec2> {
        let nudge = 1e-6 * self.cell_size;
        let mut out = Vec::new();
        for j in 0..=self.rows as i64 {
            for i in 0..=self.cols as i64 {
                // Cells around vertex (i, j): SW, SE, NW, NE.
                let around = [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)];
                let blocked: Vec<bool> =
                    around.iter().map(|&(c, r)| self.free_id_i(c, r).is_none()).collect();
                if blocked.iter().filter(|&&b| b).count() != 1 {
                    continue;
                }
                let k = blocked.iter().position(|&b| b).unwrap_or_default();
                // Direction from the blocked cell's center toward the vertex.
                let (sx, sy) = match k {
                    0 => (1.0, 1.0),
                    1 => (-1.0, 1.0),
                    2 => (1.0, -1.0),
                    _ => (-1.0, -1.0),
                };
                let v = Vec2::new(i as f64 * self.cell_size, j as f64 * self.cell_size);
                let p = v + Vec2::new(sx * nudge, sy * nudge);
                if self.is_free(p) {
                    out.push(p);
                }
            }
        }
        out
    }

    fn free_id_i(&self, col: i64, row: i64) -> Option<usize> {
        if col < 0 || row < 0 {
            return None;
        }
        self.free_id(CellIndex::new(col as usize, row as usize))
    }

    fn free_cell_of(&self, pos: Vec2) -> Result<CellIndex> {
        let c = self.cell_of(pos)?;
        if self.is_blocked(c) {
            return Err(Error::Geometry(format!("position {pos} is inside a blocked cell")));
        }
        Ok(c)
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.n_free()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors4[u] {
                let v = v as usize;
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        if count != self.n_free() {
            return Err(Error::Geometry(format!(
                "free space is not connected ({count} of {} cells reachable)",
                self.n_free()
            )));
        }
        Ok(())
    }
}

const NEIGHBORS8: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

fn whole_cells(extent: f64, cell_size: f64, what: &str) -> Result<usize> {
    let n = extent / cell_size;
    let r = n.round();
    if !(r >= 1.0) || (n - r).abs() > 1e-6 {
        return Err(Error::Geometry(format!(
            "{what} = {extent} is not a positive multiple of cell_size = {cell_size}"
        )));
    }
    Ok(r as usize)
}

/// Min-heap entry keyed on distance.
#[derive(Debug, Clone, Copy)]
struct HeapEntry(f64, usize);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}
