//! Optimal offline placement.
//!
//! Finds a legal orientation that places as many keys as possible and, among
//! those, stores the fewest keys on their backup page. This is a minimum cost
//! left-maximum matching with cost 0 on primary edges and cost 1 on backup
//! edges, solved by successive shortest paths where each batch of shortest
//! augmenting paths comes from a Hopcroft–Karp style round:
//!
//! * a layered breadth-first search from all unmatched keys that records,
//!   per node, its layer and the cost of the best path found so far; a node
//!   is relabeled (and explored again) whenever a cheaper path reaches it;
//! * the search stops at the first layer holding a cell with spare capacity
//!   reached at cost exactly `gamma_hat`;
//! * node-disjoint augmenting paths are then traced back from those cells
//!   along edges between successive layers whose costs are tight, and
//!   flipped.
//!
//! When no augmenting path of cost `gamma_hat` remains but a costlier one
//! exists, `gamma_hat` grows by one. The minimum augmenting-path cost never
//! decreases, so every accepted path is a shortest one and the final
//! matching has minimum cost.
//!
//! Cells of capacity `ell > 1` are handled directly: a cell accepts keys
//! while its load is below `ell`, which is equivalent to matching against
//! `ell` copies of the cell.

use crate::graph::{Cell, CuckooGraph, KeyId};
use crate::placement::{Placement, UNPLACED};

const UNSEEN: u32 = u32::MAX;

/// Edge type in the cuckoo graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Primary,
    Backup,
}

/// Direction an edge is traversed in the residual graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Key to cell: the edge is not in the matching.
    Forward,
    /// Cell to key: the edge is in the matching.
    Backward,
}

/// Residual cost of traversing an edge.
///
/// Flipping an edge negates its cost, so a matched backup edge walked
/// backwards is worth −1 (the key leaves a backup cell).
pub fn residual_cost(kind: EdgeKind, direction: Direction) -> i32 {
    match (kind, direction) {
        (EdgeKind::Primary, _) => 0,
        (EdgeKind::Backup, Direction::Forward) => 1,
        (EdgeKind::Backup, Direction::Backward) => -1,
    }
}

/// Result of one augmentation round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundOutcome {
    pub paths_found: u32,
    /// Cost target after the round.
    pub gamma_hat: i32,
    /// No augmenting path of any cost exists; the matching is final.
    pub terminated: bool,
}

enum Search {
    /// Free cells at the stopping layer reached at cost `gamma_hat`.
    Found(Vec<Cell>),
    /// Search exhausted; cheapest cost of any reached free cell.
    Exhausted(Option<i32>),
}

/// Incremental solver state.
pub struct Solver<'g> {
    graph: &'g CuckooGraph,
    ell: u32,
    key_cell: Vec<Cell>,
    key_on_backup: Vec<bool>,
    cell_load: Vec<u32>,
    cell_slots: Vec<KeyId>,
    // Keys having each cell as a choice, with the backup flag in bit 0.
    incidence_start: Vec<u32>,
    incidence: Vec<u32>,
    key_layer: Vec<u32>,
    key_dist: Vec<i32>,
    cell_layer: Vec<u32>,
    cell_dist: Vec<i32>,
    key_used: Vec<bool>,
    cell_used: Vec<bool>,
    free_keys: Vec<KeyId>,
    gamma_hat: i32,
    path_cost_total: i64,
    rounds: u64,
    done: bool,
}

impl<'g> Solver<'g> {
    pub fn new(graph: &'g CuckooGraph) -> Self {
        let config = graph.config();
        let m = config.m as usize;
        let n = graph.len();

        let mut degree = vec![0u32; m + 1];
        for key in graph.keys() {
            for &y in key.cells() {
                degree[y as usize + 1] += 1;
            }
        }
        for i in 0..m {
            degree[i + 1] += degree[i];
        }
        let incidence_start = degree;
        let mut fill = incidence_start.clone();
        let mut incidence = vec![0u32; *incidence_start.last().unwrap() as usize];
        for (x, key) in graph.keys().iter().enumerate() {
            for (slot, &y) in key.cells().iter().enumerate() {
                let tag = (x as u32) << 1 | u32::from(key.is_backup_slot(slot));
                incidence[fill[y as usize] as usize] = tag;
                fill[y as usize] += 1;
            }
        }

        Self {
            graph,
            ell: config.ell,
            key_cell: vec![UNPLACED; n],
            key_on_backup: vec![false; n],
            cell_load: vec![0; m],
            cell_slots: vec![0; m * config.ell as usize],
            incidence_start,
            incidence,
            key_layer: vec![UNSEEN; n],
            key_dist: vec![0; n],
            cell_layer: vec![UNSEEN; m],
            cell_dist: vec![0; m],
            key_used: vec![false; n],
            cell_used: vec![false; m],
            free_keys: (0..n as u32).rev().collect(),
            gamma_hat: 0,
            path_cost_total: 0,
            rounds: 0,
            done: n == 0,
        }
    }

    pub fn gamma_hat(&self) -> i32 {
        self.gamma_hat
    }

    /// Sum of the costs of all accepted augmenting paths; equals the current
    /// number of backup keys.
    pub fn path_cost_total(&self) -> i64 {
        self.path_cost_total
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn matched(&self) -> usize {
        self.graph.len() - self.free_keys.len()
    }

    fn has_room(&self, y: Cell) -> bool {
        self.cell_load[y as usize] < self.ell
    }

    /// One BFS + DFS round.
    pub fn augment_round(&mut self) -> RoundOutcome {
        if self.done {
            return self.outcome(0);
        }
        self.rounds += 1;
        match self.search() {
            Search::Found(targets) => {
                let mut found = 0;
                for y in targets {
                    if !self.cell_used[y as usize] && self.trace_and_flip(y) {
                        found += 1;
                    }
                }
                // A cell reached at exactly gamma_hat always leads back to a
                // free key along tight successive-layer edges, so the first
                // target cannot fail.
                debug_assert!(found > 0);
                if found == 0 {
                    self.raise_gamma();
                }
                self.free_keys.retain(|&x| self.key_cell[x as usize] == UNPLACED);
                if self.free_keys.is_empty() {
                    self.done = true;
                }
                self.outcome(found)
            }
            Search::Exhausted(None) => {
                self.done = true;
                self.outcome(0)
            }
            Search::Exhausted(Some(cheapest)) => {
                debug_assert!(cheapest > self.gamma_hat);
                self.raise_gamma();
                self.outcome(0)
            }
        }
    }

    fn raise_gamma(&mut self) {
        let before = self.gamma_hat;
        self.gamma_hat += 1;
        assert!(self.gamma_hat > before);
    }

    fn outcome(&self, paths_found: u32) -> RoundOutcome {
        RoundOutcome {
            paths_found,
            gamma_hat: self.gamma_hat,
            terminated: self.done,
        }
    }

    /// Runs rounds until no augmenting path is left.
    pub fn run(&mut self) {
        while !self.done {
            self.augment_round();
        }
    }

    pub fn placement(&self) -> Placement {
        Placement::from_assignment(self.graph, self.key_cell.clone())
    }

    fn search(&mut self) -> Search {
        self.key_layer.fill(UNSEEN);
        self.cell_layer.fill(UNSEEN);
        self.key_used.fill(false);
        self.cell_used.fill(false);

        let gamma = self.gamma_hat;
        let mut left: Vec<KeyId> = self.free_keys.clone();
        for &x in &left {
            self.key_layer[x as usize] = 0;
            self.key_dist[x as usize] = 0;
        }
        let mut right: Vec<Cell> = Vec::new();
        let mut layer = 0u32;

        loop {
            // Keys at `layer` -> cells at `layer + 1`.
            right.clear();
            let cell_layer = layer + 1;
            for &x in &left {
                let xi = x as usize;
                let d = self.key_dist[xi];
                let own = self.key_cell[xi];
                let key = self.graph.key(x);
                for (slot, &y) in key.cells().iter().enumerate() {
                    if y == own {
                        continue;
                    }
                    let kind = if key.is_backup_slot(slot) {
                        EdgeKind::Backup
                    } else {
                        EdgeKind::Primary
                    };
                    let nd = d + residual_cost(kind, Direction::Forward);
                    let yi = y as usize;
                    if self.cell_layer[yi] == UNSEEN || nd < self.cell_dist[yi] {
                        if self.cell_layer[yi] != cell_layer {
                            right.push(y);
                        }
                        self.cell_layer[yi] = cell_layer;
                        self.cell_dist[yi] = nd;
                    }
                }
            }
            if right.is_empty() {
                break;
            }

            let targets: Vec<Cell> = right
                .iter()
                .copied()
                .filter(|&y| self.has_room(y) && self.cell_dist[y as usize] == gamma)
                .collect();
            debug_assert!(right
                .iter()
                .all(|&y| !self.has_room(y) || self.cell_dist[y as usize] >= gamma));
            if !targets.is_empty() {
                return Search::Found(targets);
            }

            // Cells at `layer + 1` -> keys at `layer + 2`.
            left.clear();
            let key_layer = layer + 2;
            for &y in &right {
                let d = self.cell_dist[y as usize];
                let start = y as usize * self.ell as usize;
                for i in start..start + self.cell_load[y as usize] as usize {
                    let x = self.cell_slots[i];
                    let xi = x as usize;
                    let kind = if self.key_on_backup[xi] {
                        EdgeKind::Backup
                    } else {
                        EdgeKind::Primary
                    };
                    let nd = d + residual_cost(kind, Direction::Backward);
                    if self.key_layer[xi] == UNSEEN || nd < self.key_dist[xi] {
                        if self.key_layer[xi] != key_layer {
                            left.push(x);
                        }
                        self.key_layer[xi] = key_layer;
                        self.key_dist[xi] = nd;
                    }
                }
            }
            if left.is_empty() {
                break;
            }
            layer = key_layer;
        }

        let cheapest = (0..self.cell_layer.len())
            .filter(|&y| self.cell_layer[y] != UNSEEN && self.has_room(y as Cell))
            .map(|y| self.cell_dist[y])
            .min();
        Search::Exhausted(cheapest)
    }

    /// Traces a node-disjoint tight path from free cell `target` back to a
    /// free key and flips it. Nodes touched are consumed for this round.
    fn trace_and_flip(&mut self, target: Cell) -> bool {
        // Each frame is a cell and the position reached in its incidence list.
        let mut frames: Vec<(Cell, u32)> = vec![(target, self.incidence_start[target as usize])];
        // moves[i] = key entering frames[i].0
        let mut moves: Vec<KeyId> = Vec::new();
        self.cell_used[target as usize] = true;

        while let Some(&(y, resume)) = frames.last() {
            let mut pos = resume;
            let yi = y as usize;
            let end = self.incidence_start[yi + 1];
            let layer = self.cell_layer[yi];
            let dist = self.cell_dist[yi];
            let mut advanced = false;
            while pos < end {
                let tag = self.incidence[pos as usize];
                pos += 1;
                let x = tag >> 1;
                let xi = x as usize;
                let kind = if tag & 1 == 1 {
                    EdgeKind::Backup
                } else {
                    EdgeKind::Primary
                };
                if self.key_used[xi]
                    || self.key_cell[xi] == y
                    || self.key_layer[xi] == UNSEEN
                    || self.key_layer[xi] + 1 != layer
                    || self.key_dist[xi] + residual_cost(kind, Direction::Forward) != dist
                {
                    continue;
                }
                self.key_used[xi] = true;
                if self.key_layer[xi] == 0 {
                    debug_assert_eq!(self.key_cell[xi], UNPLACED);
                    moves.push(x);
                    let cost = self.flip(&frames, &moves);
                    debug_assert_eq!(cost, self.gamma_hat);
                    self.path_cost_total += i64::from(cost);
                    return true;
                }
                let from = self.key_cell[xi];
                let fi = from as usize;
                let back = if self.key_on_backup[xi] {
                    EdgeKind::Backup
                } else {
                    EdgeKind::Primary
                };
                if self.cell_used[fi]
                    || self.cell_layer[fi] == UNSEEN
                    || self.cell_layer[fi] + 1 != self.key_layer[xi]
                    || self.cell_dist[fi] + residual_cost(back, Direction::Backward)
                        != self.key_dist[xi]
                {
                    continue;
                }
                self.cell_used[fi] = true;
                moves.push(x);
                frames.last_mut().unwrap().1 = pos;
                frames.push((from, self.incidence_start[fi]));
                advanced = true;
                break;
            }
            if !advanced {
                frames.pop();
                moves.pop();
            }
        }
        false
    }

    /// Applies a traced path. `moves[i]` enters `frames[i].0`. Returns the
    /// change in the number of backup keys.
    fn flip(&mut self, frames: &[(Cell, u32)], moves: &[KeyId]) -> i32 {
        let mut delta = 0;
        for (&(y, _), &x) in frames.iter().zip(moves) {
            let xi = x as usize;
            let old = self.key_cell[xi];
            if old != UNPLACED {
                self.remove_from_cell(old, x);
                if self.key_on_backup[xi] {
                    delta -= 1;
                }
            }
            let on_backup = self.graph.key(x).is_backup_cell(y);
            let yi = y as usize;
            debug_assert!(self.cell_load[yi] < self.ell);
            let slot = yi * self.ell as usize + self.cell_load[yi] as usize;
            self.cell_slots[slot] = x;
            self.cell_load[yi] += 1;
            self.key_cell[xi] = y;
            self.key_on_backup[xi] = on_backup;
            if on_backup {
                delta += 1;
            }
        }
        delta
    }

    fn remove_from_cell(&mut self, y: Cell, x: KeyId) {
        let yi = y as usize;
        let start = yi * self.ell as usize;
        let load = self.cell_load[yi] as usize;
        let pos = self.cell_slots[start..start + load]
            .iter()
            .position(|&k| k == x)
            .expect("key missing from its cell");
        self.cell_slots.swap(start + pos, start + load - 1);
        self.cell_load[yi] -= 1;
    }
}

/// Computes an optimal placement of all keys of `graph`.
///
/// Keys that cannot be placed in any legal orientation are left
/// [`UNPLACED`]; the placement is then incomplete, which the experiments
/// count as a failure.
pub fn solve(graph: &CuckooGraph) -> Placement {
    let mut solver = Solver::new(graph);
    solver.run();
    solver.placement()
}
