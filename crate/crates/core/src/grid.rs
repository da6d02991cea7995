//! Grid maps: MovingAI parsing, the 8-connected octile cost model and
//! connectivity queries.
//!
//! Coordinates are `(x, y)` with `x` the column (west to east) and `y` the
//! row (north to south), so row `y` of a map file is `y` here.

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::SQRT_2;
use core::fmt;
use core::ops::{Add, AddAssign};

/// A grid cell.
///
/// Ordering is lexicographic on `(x, y)`; planners rely on it for
/// deterministic tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub x: u32,
    pub y: u32,
}

impl NodeId {
    pub const fn new(x: u32, y: u32) -> Self {
        NodeId { x, y }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Cost of a single edge traversal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeCost {
    /// Self-loop: the agent waits.
    Zero,
    Cardinal,
    Diagonal,
}

impl EdgeCost {
    pub fn value(self) -> f64 {
        match self {
            EdgeCost::Zero => 0.0,
            EdgeCost::Cardinal => 1.0,
            EdgeCost::Diagonal => SQRT_2,
        }
    }
}

/// An exact path cost `cardinal + diagonal * sqrt(2)`.
///
/// Because `sqrt(2)` is irrational, two paths have the same real cost iff
/// they have the same counts, so equality and ordering here are exact and
/// independent of summation order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PathCost {
    pub cardinal: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub const ZERO: PathCost = PathCost { cardinal: 0, diagonal: 0 };

    pub const fn new(cardinal: u32, diagonal: u32) -> Self {
        PathCost { cardinal, diagonal }
    }

    pub fn value(self) -> f64 {
        self.cardinal as f64 + self.diagonal as f64 * SQRT_2
    }
}

impl From<EdgeCost> for PathCost {
    fn from(c: EdgeCost) -> Self {
        match c {
            EdgeCost::Zero => PathCost::ZERO,
            EdgeCost::Cardinal => PathCost::new(1, 0),
            EdgeCost::Diagonal => PathCost::new(0, 1),
        }
    }
}

impl Add for PathCost {
    type Output = PathCost;
    fn add(self, rhs: PathCost) -> PathCost {
        PathCost::new(self.cardinal + rhs.cardinal, self.diagonal + rhs.diagonal)
    }
}

impl Add<EdgeCost> for PathCost {
    type Output = PathCost;
    fn add(self, rhs: EdgeCost) -> PathCost {
        self + PathCost::from(rhs)
    }
}

impl AddAssign<EdgeCost> for PathCost {
    fn add_assign(&mut self, rhs: EdgeCost) {
        *self = *self + rhs;
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // Compare a1 + b1*r against a2 + b2*r, i.e. (a1 - a2) against (b2 - b1)*r.
        let da = self.cardinal as i64 - other.cardinal as i64;
        let db = other.diagonal as i64 - self.diagonal as i64;
        if da >= 0 && db <= 0 {
            if da == 0 && db == 0 {
                Ordering::Equal
            } else {
                Ordering::Greater
            }
        } else if da <= 0 && db >= 0 {
            Ordering::Less
        } else if da > 0 {
            (da * da).cmp(&(2 * db * db))
        } else {
            (2 * db * db).cmp(&(da * da))
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact octile distance between two cells.
pub fn octile_cost(a: NodeId, b: NodeId) -> PathCost {
    let dx = a.x.abs_diff(b.x);
    let dy = a.y.abs_diff(b.y);
    let diag = dx.min(dy);
    PathCost::new(dx.max(dy) - diag, diag)
}

/// Octile heuristic `sqrt(2) * min(dx, dy) + |dx - dy|`.
pub fn octile_h(a: NodeId, b: NodeId) -> f64 {
    octile_cost(a, b).value()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseError {
    /// Header line missing or malformed; `line` is 1-based.
    Header { line: usize, message: String },
    RowCount { expected: usize, found: usize },
    RowLength { line: usize, expected: usize, found: usize },
    UnknownCell { line: usize, column: usize, ch: char },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Header { line, message } => write!(f, "line {line}: {message}"),
            ParseError::RowCount { expected, found } => {
                write!(f, "expected {expected} map rows, found {found}")
            }
            ParseError::RowLength { line, expected, found } => {
                write!(f, "line {line}: expected {expected} cells, found {found}")
            }
            ParseError::UnknownCell { line, column, ch } => {
                write!(f, "line {line}, column {column}: unknown cell character {ch:?}")
            }
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GridError {
    OutOfBounds(NodeId),
    Blocked(NodeId),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::OutOfBounds(n) => write!(f, "cell {n} is outside the map"),
            GridError::Blocked(n) => write!(f, "cell {n} is blocked"),
        }
    }
}

impl core::error::Error for GridError {}

// Cardinal directions first so that neighbor order is N, E, S, W, then diagonals.
const DIRECTIONS: [(i32, i32); 8] = [
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, 0),
    (1, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
];

/// Rectangular map with binary passability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    name: String,
    width: u32,
    height: u32,
    passable: Vec<bool>,
}

impl GridMap {
    /// Builds a map from row-major passability flags.
    ///
    /// Panics if `passable.len() != width * height` or either dimension is 0.
    pub fn new(name: impl Into<String>, width: u32, height: u32, passable: Vec<bool>) -> Self {
        assert!(width >= 1 && height >= 1, "map dimensions must be positive");
        assert_eq!(passable.len(), width as usize * height as usize);
        GridMap { name: name.into(), width, height, passable }
    }

    /// A fully passable map.
    pub fn open(name: impl Into<String>, width: u32, height: u32) -> Self {
        Self::new(name, width, height, vec![true; width as usize * height as usize])
    }

    /// Builds a map from rows of `.` (passable) and `@` (blocked); handy in tests.
    ///
    /// Panics on ragged rows or other characters.
    pub fn from_ascii(name: impl Into<String>, rows: &[&str]) -> Self {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len()) as u32;
        let mut passable = Vec::with_capacity((width * height) as usize);
        for row in rows {
            assert_eq!(row.len() as u32, width, "ragged ascii map");
            for ch in row.chars() {
                passable.push(match cell_passability(ch) {
                    Some(p) => p,
                    None => panic!("unknown cell character {ch:?}"),
                });
            }
        }
        Self::new(name, width, height, passable)
    }

    /// Parses the MovingAI `.map` format.
    pub fn parse_movingai(name: impl Into<String>, text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

        let mut next_header = |what: &str| -> Result<(usize, String), ParseError> {
            match lines.next() {
                Some((no, l)) => Ok((no, l.trim().to_string())),
                None => Err(ParseError::Header {
                    line: 0,
                    message: alloc::format!("unexpected end of input, expected `{what}`"),
                }),
            }
        };

        let (no, ty) = next_header("type octile")?;
        if ty != "type octile" {
            return Err(ParseError::Header {
                line: no,
                message: alloc::format!("expected `type octile`, found `{ty}`"),
            });
        }
        let mut height = None;
        let mut width = None;
        for _ in 0..2 {
            let (no, l) = next_header("height/width")?;
            let mut parts = l.split_whitespace();
            let key = parts.next().unwrap_or("");
            let value = parts.next().and_then(|v| v.parse::<u32>().ok()).filter(|v| *v > 0);
            let slot = match key {
                "height" => &mut height,
                "width" => &mut width,
                _ => {
                    return Err(ParseError::Header {
                        line: no,
                        message: alloc::format!("expected `height H` or `width W`, found `{l}`"),
                    })
                }
            };
            if slot.is_some() || parts.next().is_some() {
                return Err(ParseError::Header { line: no, message: alloc::format!("malformed `{l}`") });
            }
            *slot = Some(value.ok_or_else(|| ParseError::Header {
                line: no,
                message: alloc::format!("invalid dimension in `{l}`"),
            })?);
        }
        let (no, m) = next_header("map")?;
        if m != "map" {
            return Err(ParseError::Header { line: no, message: alloc::format!("expected `map`, found `{m}`") });
        }
        // Both slots were filled by the loop above.
        let (width, height) = (width.unwrap(), height.unwrap());

        let mut passable = Vec::with_capacity(width as usize * height as usize);
        let mut rows = 0usize;
        for (no, line) in lines {
            if rows == height as usize {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(ParseError::RowCount { expected: height as usize, found: rows + 1 });
            }
            let found = line.chars().count();
            if found != width as usize {
                return Err(ParseError::RowLength { line: no, expected: width as usize, found });
            }
            for (col, ch) in line.chars().enumerate() {
                match cell_passability(ch) {
                    Some(p) => passable.push(p),
                    None => return Err(ParseError::UnknownCell { line: no, column: col + 1, ch }),
                }
            }
            rows += 1;
        }
        if rows != height as usize {
            return Err(ParseError::RowCount { expected: height as usize, found: rows });
        }
        Ok(GridMap::new(name, width, height, passable))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.passable.len()
    }

    pub fn in_bounds(&self, n: NodeId) -> bool {
        n.x < self.width && n.y < self.height
    }

    pub fn is_passable(&self, n: NodeId) -> bool {
        self.in_bounds(n) && self.passable[self.index(n)]
    }

    /// Row-major cell index. `n` must be in bounds.
    #[inline]
    pub fn index(&self, n: NodeId) -> usize {
        n.y as usize * self.width as usize + n.x as usize
    }

    #[inline]
    pub fn node(&self, index: usize) -> NodeId {
        NodeId::new((index % self.width as usize) as u32, (index / self.width as usize) as u32)
    }

    pub fn passable_cells(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.passable.iter().enumerate().filter(|(_, p)| **p).map(|(i, _)| self.node(i))
    }

    pub fn passable_count(&self) -> usize {
        self.passable.iter().filter(|p| **p).count()
    }

    /// Cell offset by `(dx, dy)`, if inside the map.
    pub fn offset(&self, n: NodeId, dx: i32, dy: i32) -> Option<NodeId> {
        let x = n.x as i64 + dx as i64;
        let y = n.y as i64 + dy as i64;
        (x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64)
            .then(|| NodeId::new(x as u32, y as u32))
    }

    fn passable_at(&self, n: NodeId, dx: i32, dy: i32) -> Option<NodeId> {
        self.offset(n, dx, dy).filter(|m| self.passable[self.index(*m)])
    }

    /// Passable neighbors of `n` with their edge costs. Diagonal moves need
    /// both flanking cardinal cells passable. The self-loop is not included.
    pub fn neighbors(&self, n: NodeId) -> Result<Neighbors<'_>, GridError> {
        if !self.in_bounds(n) {
            return Err(GridError::OutOfBounds(n));
        }
        if !self.passable[self.index(n)] {
            return Err(GridError::Blocked(n));
        }
        Ok(self.neighbors_unchecked(n))
    }

    /// Like [`GridMap::neighbors`] without validating `n`.
    pub fn neighbors_unchecked(&self, n: NodeId) -> Neighbors<'_> {
        Neighbors { map: self, from: n, dir: 0 }
    }

    /// Cost of moving `from -> to`, or `None` if that is not an edge or self-loop.
    pub fn edge_cost(&self, from: NodeId, to: NodeId) -> Option<EdgeCost> {
        if !self.is_passable(from) || !self.is_passable(to) {
            return None;
        }
        if from == to {
            return Some(EdgeCost::Zero);
        }
        self.neighbors_unchecked(from).find(|(m, _)| *m == to).map(|(_, c)| c)
    }

    /// Connected-component label for every cell (`None` for blocked cells).
    pub fn components(&self) -> Vec<Option<u32>> {
        let mut label = vec![None; self.cell_count()];
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..self.cell_count() {
            if !self.passable[start] || label[start].is_some() {
                continue;
            }
            label[start] = Some(next);
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                for (m, _) in self.neighbors_unchecked(self.node(i)) {
                    let j = self.index(m);
                    if label[j].is_none() {
                        label[j] = Some(next);
                        queue.push_back(j);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// True iff `b` can be reached from `a`.
    pub fn reachable(&self, a: NodeId, b: NodeId) -> bool {
        if !self.is_passable(a) || !self.is_passable(b) {
            return false;
        }
        if a == b {
            return true;
        }
        let mut seen = vec![false; self.cell_count()];
        let mut queue = VecDeque::new();
        seen[self.index(a)] = true;
        queue.push_back(a);
        while let Some(n) = queue.pop_front() {
            for (m, _) in self.neighbors_unchecked(n) {
                if m == b {
                    return true;
                }
                let j = self.index(m);
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(m);
                }
            }
        }
        false
    }
}

/// `.` and `G` are passable; `@`, `O`, `T`, `S`, `W` are blocked.
fn cell_passability(ch: char) -> Option<bool> {
    match ch {
        '.' | 'G' => Some(true),
        '@' | 'O' | 'T' | 'S' | 'W' => Some(false),
        _ => None,
    }
}

pub struct Neighbors<'a> {
    map: &'a GridMap,
    from: NodeId,
    dir: usize,
}

impl Iterator for Neighbors<'_> {
    type Item = (NodeId, EdgeCost);

    fn next(&mut self) -> Option<Self::Item> {
        while self.dir < DIRECTIONS.len() {
            let (dx, dy) = DIRECTIONS[self.dir];
            self.dir += 1;
            let Some(m) = self.map.passable_at(self.from, dx, dy) else { continue };
            if dx == 0 || dy == 0 {
                return Some((m, EdgeCost::Cardinal));
            }
            if self.map.passable_at(self.from, dx, 0).is_some()
                && self.map.passable_at(self.from, 0, dy).is_some()
            {
                return Some((m, EdgeCost::Diagonal));
            }
        }
        None
    }
}
