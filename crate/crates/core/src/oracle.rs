//! Deterministic ground truth over the exposure-weighted grid graph.
//!
//! Vertices are cells weighted by exposure; every pair of 8-neighbours is
//! joined by an undirected edge weighing the mean of its endpoint exposures.
//! Among minimum-weight routes the one with fewest steps wins, then the
//! lexicographically smallest cell sequence.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use crate::env::Action;
use crate::error::PathError;
use crate::field::{exposure_at, reward_at};
use crate::scenario::{Cell, Scenario};
use crate::trainer::discounted_return;

/// Largest grid, in cells, accepted by [`brute_force_path`].
pub const BRUTE_FORCE_LIMIT: usize = 16;

/// Weight tolerance used when deciding whether two routes tie.
pub fn weight_tolerance(w: f64) -> f64 {
    1e-10 * w.abs().max(1.0)
}

#[derive(Debug, Clone)]
pub struct ExposureGraph {
    pub width: usize,
    pub height: usize,
    pub vertex_weight: Vec<f64>,
    /// `(neighbour, edge weight)` lists in canonical move order.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl ExposureGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_weight.len()
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        self.adjacency[u].iter().find(|(n, _)| *n == v).map(|(_, w)| *w)
    }

    /// Sum of edge weights along consecutive cells.
    pub fn path_weight(&self, cells: &[Cell]) -> Option<f64> {
        cells
            .windows(2)
            .map(|w| self.edge_weight(self.index(w[0]), self.index(w[1])))
            .sum()
    }
}

pub fn build_graph(scenario: &Scenario) -> ExposureGraph {
    let vertex_weight: Vec<f64> = scenario.cells().map(|c| exposure_at(c, scenario)).collect();
    let adjacency = scenario
        .cells()
        .map(|c| {
            let u = scenario.index(c);
            Action::all()
                .filter_map(|a| a.apply(c, scenario))
                .map(|n| {
                    let v = scenario.index(n);
                    (v, 0.5 * (vertex_weight[u] + vertex_weight[v]))
                })
                .collect()
        })
        .collect();
    ExposureGraph { width: scenario.width, height: scenario.height, vertex_weight, adjacency }
}

/// A validated route with its exposure and reward summary.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    pub step_count: usize,
    /// Sum of averaged edge exposures.
    pub edge_weight: f64,
    /// Exposure summed over every cell after the first.
    pub total_exposure: f64,
    pub cumulative_reward: f64,
    pub avg_reward_per_step: f64,
    pub discounted_return: f64,
}

impl GridPath {
    pub fn new(cells: Vec<Cell>, scenario: &Scenario, discount: f64) -> Result<Self, PathError> {
        let m = path_metrics(&cells, scenario, discount)?;
        let edge_weight = build_graph(scenario).path_weight(&cells).expect("validated adjacency");
        Ok(Self {
            cells,
            step_count: m.step_count,
            edge_weight,
            total_exposure: m.total_exposure,
            cumulative_reward: m.cumulative_reward,
            avg_reward_per_step: m.avg_reward_per_step,
            discounted_return: m.discounted_return,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathMetrics {
    pub total_exposure: f64,
    pub step_count: usize,
    pub cumulative_reward: f64,
    pub avg_reward_per_step: f64,
    pub discounted_return: f64,
}

/// Checks that `cells` is a non-empty, in-grid, self-avoiding chain of
/// 8-adjacent cells.
pub fn validate_path(cells: &[Cell], scenario: &Scenario) -> Result<(), PathError> {
    if cells.is_empty() {
        return Err(PathError::Empty);
    }
    let mut seen = vec![false; scenario.num_cells()];
    for (i, &c) in cells.iter().enumerate() {
        if !scenario.contains(c) {
            return Err(PathError::OutOfGrid(c.to_string()));
        }
        if std::mem::replace(&mut seen[scenario.index(c)], true) {
            return Err(PathError::Repeated(c.to_string()));
        }
        if i > 0 && !cells[i - 1].is_adjacent(&c) {
            return Err(PathError::NotAdjacent(cells[i - 1].to_string(), c.to_string()));
        }
    }
    Ok(())
}

/// Exposure and reward totals over the cells entered after the first.
pub fn path_metrics(
    cells: &[Cell],
    scenario: &Scenario,
    discount: f64,
) -> Result<PathMetrics, PathError> {
    validate_path(cells, scenario)?;
    let entered = &cells[1..];
    let rewards: Vec<f64> = entered.iter().map(|&c| reward_at(c, scenario)).collect();
    let cumulative_reward: f64 = rewards.iter().sum();
    let step_count = entered.len();
    Ok(PathMetrics {
        total_exposure: entered.iter().map(|&c| exposure_at(c, scenario)).sum(),
        step_count,
        cumulative_reward,
        avg_reward_per_step: if step_count == 0 { 0.0 } else { cumulative_reward / step_count as f64 },
        discounted_return: discounted_return(&rewards, discount),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Single-source Dijkstra distances.
pub fn distances_from(graph: &ExposureGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((Dist(0.0), source)));
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &graph.adjacency[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((Dist(nd), v)));
            }
        }
    }
    dist
}

/// Minimum-weight route from `start` to `exit` under the tie-break rules.
pub fn shortest_path(graph: &ExposureGraph, start: Cell, exit: Cell) -> Vec<Cell> {
    let (s, t) = (graph.index(start), graph.index(exit));
    let dist = distances_from(graph, t);
    let tight =
        |u: usize, v: usize, w: f64| w + dist[v] <= dist[u] + weight_tolerance(dist[u]);

    // Fewest hops to the exit using only edges that lie on some optimal route.
    let mut hops = vec![usize::MAX; graph.vertex_count()];
    hops[t] = 0;
    let mut queue = VecDeque::from([t]);
    while let Some(v) = queue.pop_front() {
        for &(u, w) in &graph.adjacency[v] {
            if hops[u] == usize::MAX && tight(u, v, w) {
                hops[u] = hops[v] + 1;
                queue.push_back(u);
            }
        }
    }

    let mut cells = vec![start];
    let mut u = s;
    while u != t {
        u = graph.adjacency[u]
            .iter()
            .filter(|&&(v, w)| hops[v] != usize::MAX && hops[v] + 1 == hops[u] && tight(u, v, w))
            .map(|&(v, _)| v)
            .min_by_key(|&v| graph.cell(v))
            .expect("grid graph is connected");
        cells.push(graph.cell(u));
    }
    cells
}

/// Ground-truth route for a scenario, with metrics.
pub fn ground_truth(scenario: &Scenario, discount: f64) -> GridPath {
    let graph = build_graph(scenario);
    let cells = shortest_path(&graph, scenario.start, scenario.exit);
    GridPath::new(cells, scenario, discount).expect("shortest path is a valid route")
}

/// Orders candidate routes: lower weight, then fewer steps, then
/// lexicographically smaller cells.
fn better(a_w: f64, a: &[Cell], b_w: f64, b: &[Cell]) -> bool {
    let tol = weight_tolerance(a_w.min(b_w));
    if a_w < b_w - tol {
        return true;
    }
    if a_w > b_w + tol {
        return false;
    }
    (a.len(), a) < (b.len(), b)
}

/// Exhaustive search over every simple 8-connected route from start to exit.
pub fn brute_force_path(scenario: &Scenario, discount: f64) -> Result<GridPath, PathError> {
    if scenario.num_cells() > BRUTE_FORCE_LIMIT {
        return Err(PathError::TooLarge { cells: scenario.num_cells(), limit: BRUTE_FORCE_LIMIT });
    }
    let graph = build_graph(scenario);
    let mut best: Option<(f64, Vec<Cell>)> = None;
    let mut route = vec![scenario.start];
    let mut on_route = vec![false; graph.vertex_count()];
    on_route[graph.index(scenario.start)] = true;
    enumerate(&graph, scenario.exit, &mut route, &mut on_route, &mut best);
    let (_, cells) = best.expect("grid graph is connected");
    GridPath::new(cells, scenario, discount)
}

fn enumerate(
    graph: &ExposureGraph,
    exit: Cell,
    route: &mut Vec<Cell>,
    on_route: &mut [bool],
    best: &mut Option<(f64, Vec<Cell>)>,
) {
    let here = *route.last().unwrap();
    if here == exit {
        let w = graph.path_weight(route).unwrap();
        if best.as_ref().is_none_or(|(bw, bc)| better(w, route, *bw, bc)) {
            *best = Some((w, route.clone()));
        }
        return;
    }
    for &(v, _) in &graph.adjacency[graph.index(here)] {
        if !on_route[v] {
            on_route[v] = true;
            route.push(graph.cell(v));
            enumerate(graph, exit, route, on_route, best);
            route.pop();
            on_route[v] = false;
        }
    }
}
