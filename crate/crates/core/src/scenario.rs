//! Start/goal generation for the seven problem types.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use hashbrown::HashSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridMap, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioType {
    Random,
    CrossSides,
    SwapSides,
    InsideOut,
    OutsideIn,
    TightToTight,
    TightToWide,
}

impl ScenarioType {
    pub const ALL: [ScenarioType; 7] = [
        ScenarioType::Random,
        ScenarioType::CrossSides,
        ScenarioType::SwapSides,
        ScenarioType::InsideOut,
        ScenarioType::OutsideIn,
        ScenarioType::TightToTight,
        ScenarioType::TightToWide,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioType::Random => "random",
            ScenarioType::CrossSides => "cross_sides",
            ScenarioType::SwapSides => "swap_sides",
            ScenarioType::InsideOut => "inside_out",
            ScenarioType::OutsideIn => "outside_in",
            ScenarioType::TightToTight => "tight_to_tight",
            ScenarioType::TightToWide => "tight_to_wide",
        }
    }

    /// Human-readable row title, e.g. "Swap sides".
    pub fn title(self) -> &'static str {
        match self {
            ScenarioType::Random => "Random",
            ScenarioType::CrossSides => "Cross sides",
            ScenarioType::SwapSides => "Swap sides",
            ScenarioType::InsideOut => "Inside out",
            ScenarioType::OutsideIn => "Outside in",
            ScenarioType::TightToTight => "Tight to tight",
            ScenarioType::TightToWide => "Tight to wide",
        }
    }
}

impl fmt::Display for ScenarioType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownScenario(pub String);

impl fmt::Display for UnknownScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown scenario type `{}`", self.0)
    }
}

impl FromStr for ScenarioType {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().replace(['-', ' '], "_");
        ScenarioType::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(&t))
            .ok_or_else(|| UnknownScenario(s.into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemInstance {
    pub id: String,
    pub map_name: String,
    pub scenario: ScenarioType,
    pub seed: u64,
    /// `(start, goal)` per agent.
    pub agents: Vec<(NodeId, NodeId)>,
}

impl ProblemInstance {
    /// Checks that cells are passable, starts and goals are pairwise distinct,
    /// and each goal is reachable from its start.
    pub fn check(&self, map: &GridMap) -> Result<(), String> {
        let labels = map.components();
        let mut starts = HashSet::new();
        let mut goals = HashSet::new();
        for (i, &(s, g)) in self.agents.iter().enumerate() {
            if !map.is_passable(s) || !map.is_passable(g) {
                return Err(format!("agent {i}: start {s} or goal {g} not passable"));
            }
            if !starts.insert(s) {
                return Err(format!("agent {i}: duplicate start {s}"));
            }
            if !goals.insert(g) {
                return Err(format!("agent {i}: duplicate goal {g}"));
            }
            if labels[map.index(s)] != labels[map.index(g)] {
                return Err(format!("agent {i}: goal {g} unreachable from {s}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Top, Side::Bottom];

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
        }
    }
}

/// `ceil(num/den · d)` for small non-negative integers.
fn frac_ceil(d: u32, num: u32, den: u32) -> u32 {
    (d * num).div_ceil(den)
}

/// A set of cells that starts or goals are drawn from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    All,
    /// Cells within `ceil(0.1 · dimension)` of one edge.
    Band(Side),
    /// Cells within Chebyshev radius `ceil(0.15 · min(w, h))` of the midpoint.
    Center,
    /// Cells within `ceil(0.1 · min(w, h))` of any edge.
    Border,
    /// An explicit cell set, sorted.
    Cluster(Vec<NodeId>),
    /// Euclidean disc.
    Disc { center: NodeId, radius: u32 },
}

impl Region {
    pub fn contains(&self, map: &GridMap, n: NodeId) -> bool {
        let (w, h) = (map.width(), map.height());
        let m = w.min(h);
        match self {
            Region::All => true,
            Region::Band(side) => {
                let (dim, pos) = match side {
                    Side::Left | Side::Right => (w, n.x),
                    Side::Top | Side::Bottom => (h, n.y),
                };
                let b = frac_ceil(dim, 1, 10);
                match side {
                    Side::Left | Side::Top => pos < b,
                    Side::Right | Side::Bottom => pos >= dim.saturating_sub(b),
                }
            }
            Region::Center => {
                let r = frac_ceil(m, 15, 100);
                let (cx, cy) = ((w - 1) / 2, (h - 1) / 2);
                n.x.abs_diff(cx) <= r && n.y.abs_diff(cy) <= r
            }
            Region::Border => {
                let b = frac_ceil(m, 1, 10);
                n.x < b || n.y < b || n.x >= w.saturating_sub(b) || n.y >= h.saturating_sub(b)
            }
            Region::Cluster(cells) => cells.binary_search(&n).is_ok(),
            Region::Disc { center, radius } => {
                let dx = n.x.abs_diff(center.x) as u64;
                let dy = n.y.abs_diff(center.y) as u64;
                dx * dx + dy * dy <= (*radius as u64) * (*radius as u64)
            }
        }
    }
}

/// Agents `agents` start in `start` and have goals in `goal`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub agents: Range<usize>,
    pub start: Region,
    pub goal: Region,
}

/// The regions an instance was sampled from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub groups: Vec<Group>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenError {
    pub map: String,
    pub scenario: ScenarioType,
    pub seed: u64,
    pub reason: String,
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot generate {} on map {} (seed {}): {}", self.scenario, self.map, self.seed, self.reason)
    }
}

impl core::error::Error for GenError {}

/// Generates a `scenario` instance with `n_agents` agents. Everything is drawn
/// from the largest connected component, so every goal is reachable.
pub fn generate(map: &GridMap, scenario: ScenarioType, n_agents: usize, seed: u64) -> Result<ProblemInstance, GenError> {
    generate_with_layout(map, scenario, n_agents, seed).map(|(inst, _)| inst)
}

pub fn generate_with_layout(
    map: &GridMap,
    scenario: ScenarioType,
    n_agents: usize,
    seed: u64,
) -> Result<(ProblemInstance, Layout), GenError> {
    let fail = |reason: String| GenError { map: map.name().into(), scenario, seed, reason };
    if n_agents == 0 {
        return Err(fail("at least one agent is required".into()));
    }
    let component = largest_component(map);
    if component.len() < 2 * n_agents {
        return Err(fail(format!(
            "largest component has {} cells, {} agents need at least {}",
            component.len(),
            n_agents,
            2 * n_agents
        )));
    }
    let mut g = Sampler {
        map,
        component,
        rng: ChaCha8Rng::seed_from_u64(seed),
        retries_left: 100 * n_agents,
    };
    let half = n_agents.div_ceil(2);
    let result = match scenario {
        ScenarioType::Random => g.paired(&[(0..n_agents, Region::All, Region::All)]),
        ScenarioType::CrossSides => {
            let side = Side::ALL[g.rng.random_range(0..4)];
            g.paired(&[(0..n_agents, Region::Band(side), Region::Band(side.opposite()))])
        }
        ScenarioType::SwapSides => {
            let a = if g.rng.random_bool(0.5) { Side::Left } else { Side::Top };
            let (a, b) = (Region::Band(a), Region::Band(a.opposite()));
            g.paired(&[(0..half, a.clone(), b.clone()), (half..n_agents, b, a)])
        }
        ScenarioType::InsideOut => g.paired(&[(0..n_agents, Region::Center, Region::Border)]),
        ScenarioType::OutsideIn => g.paired(&[(0..n_agents, Region::Border, Region::Center)]),
        ScenarioType::TightToTight => g.tight(n_agents, false),
        ScenarioType::TightToWide => g.tight(n_agents, true),
    };
    let (agents, layout) = result.map_err(fail)?;
    let inst = ProblemInstance {
        id: format!("{}_{}_{:016x}", map.name(), scenario, seed),
        map_name: map.name().into(),
        scenario,
        seed,
        agents,
    };
    debug_assert!(inst.check(map).is_ok());
    Ok((inst, layout))
}

/// Cells of the largest component, in row-major order. Ties go to the
/// component found first.
fn largest_component(map: &GridMap) -> Vec<NodeId> {
    let labels = map.components();
    let n_labels = labels.iter().flatten().max().map_or(0, |m| *m as usize + 1);
    let mut sizes = vec![0usize; n_labels];
    for l in labels.iter().flatten() {
        sizes[*l as usize] += 1;
    }
    let Some(best) = (0..n_labels).max_by_key(|&l| (sizes[l], core::cmp::Reverse(l))) else {
        return Vec::new();
    };
    let mut cells: Vec<NodeId> = map.passable_cells().filter(|c| labels[map.index(*c)] == Some(best as u32)).collect();
    cells.sort_unstable_by_key(|c| (c.y, c.x));
    cells
}

type Agents = Vec<(NodeId, NodeId)>;

struct Sampler<'a> {
    map: &'a GridMap,
    component: Vec<NodeId>,
    rng: ChaCha8Rng,
    retries_left: usize,
}

impl Sampler<'_> {
    fn spend_retry(&mut self) -> Result<(), String> {
        if self.retries_left == 0 {
            return Err("retry bound exhausted; map too small or fragmented for this type".into());
        }
        self.retries_left -= 1;
        Ok(())
    }

    fn pool(&self, region: &Region) -> Vec<NodeId> {
        self.component.iter().copied().filter(|c| region.contains(self.map, *c)).collect()
    }

    /// Independent start and goal draws per group.
    fn paired(&mut self, groups: &[(Range<usize>, Region, Region)]) -> Result<(Agents, Layout), String> {
        let mut starts = HashSet::new();
        let mut goals = HashSet::new();
        let mut agents = Vec::new();
        for (range, sr, gr) in groups {
            let (sp, gp) = (self.pool(sr), self.pool(gr));
            if sp.is_empty() || gp.is_empty() {
                return Err(format!("empty region ({sr:?} -> {gr:?})"));
            }
            for _ in range.clone() {
                loop {
                    let s = sp[self.rng.random_range(0..sp.len())];
                    let g = gp[self.rng.random_range(0..gp.len())];
                    if s != g && !starts.contains(&s) && !goals.contains(&g) {
                        starts.insert(s);
                        goals.insert(g);
                        agents.push((s, g));
                        break;
                    }
                    self.spend_retry()?;
                }
            }
        }
        let groups =
            groups.iter().map(|(r, s, g)| Group { agents: r.clone(), start: s.clone(), goal: g.clone() }).collect();
        Ok((agents, Layout { groups }))
    }

    /// Breadth-first cluster of `n` cells around a random seed cell, avoiding
    /// `exclude`. Retries with a new seed cell when the cluster runs out of room.
    fn cluster(&mut self, n: usize, exclude: &HashSet<NodeId>) -> Result<Vec<NodeId>, String> {
        loop {
            let seed = self.component[self.rng.random_range(0..self.component.len())];
            if !exclude.contains(&seed) {
                let mut seen: HashSet<NodeId> = HashSet::from_iter([seed]);
                let mut queue = VecDeque::from([seed]);
                let mut cells = Vec::with_capacity(n);
                while let Some(c) = queue.pop_front() {
                    cells.push(c);
                    if cells.len() == n {
                        return Ok(cells);
                    }
                    for (m, _) in self.map.neighbors_unchecked(c) {
                        if !exclude.contains(&m) && seen.insert(m) {
                            queue.push_back(m);
                        }
                    }
                }
            }
            self.spend_retry()?;
        }
    }

    fn tight(&mut self, n: usize, wide: bool) -> Result<(Agents, Layout), String> {
        let mut starts = self.cluster(n, &HashSet::new())?;
        let start_set: HashSet<NodeId> = starts.iter().copied().collect();
        let (mut goals, goal_region) = if wide {
            let radius = frac_ceil(self.map.width().min(self.map.height()), 1, 5);
            loop {
                let center = self.component[self.rng.random_range(0..self.component.len())];
                let region = Region::Disc { center, radius };
                let mut pool = self.pool(&region);
                if pool.len() >= n {
                    pool.shuffle(&mut self.rng);
                    pool.truncate(n);
                    break (pool, region);
                }
                self.spend_retry()?;
            }
        } else {
            let goals = self.cluster(n, &start_set)?;
            let mut sorted = goals.clone();
            sorted.sort_unstable();
            (goals, Region::Cluster(sorted))
        };
        starts.shuffle(&mut self.rng);
        goals.shuffle(&mut self.rng);
        // Break any start == goal coincidence by rotating goals.
        let mut tries = 0;
        while starts.iter().zip(&goals).any(|(s, g)| s == g) {
            if n == 1 || tries == n {
                return Err("could not pair starts and goals without coincidences".into());
            }
            goals.rotate_left(1);
            tries += 1;
        }
        let mut start_sorted = starts.clone();
        start_sorted.sort_unstable();
        let layout = Layout { groups: vec![Group { agents: 0..n, start: Region::Cluster(start_sorted), goal: goal_region }] };
        Ok((starts.into_iter().zip(goals).collect(), layout))
    }
}
