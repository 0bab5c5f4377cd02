//! Key-to-cell assignments and the quantities derived from them.

use crate::graph::{Cell, CuckooGraph, Page};

/// Marker for a key that has no cell.
pub const UNPLACED: Cell = Cell::MAX;

/// An assignment of every key of a graph to one of its cells (or none).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    assignment: Vec<Cell>,
    pages: u32,
    cells: u32,
    primary: u32,
    backup: u32,
    w: Vec<u32>,
}

impl Placement {
    /// Derives counters from a raw assignment. `assignment[i]` must be one of
    /// key `i`'s cells or [`UNPLACED`].
    pub fn from_assignment(graph: &CuckooGraph, assignment: Vec<Cell>) -> Self {
        assert_eq!(assignment.len(), graph.len());
        let config = graph.config();
        let mut w = vec![0u32; config.pages() as usize];
        let (mut primary, mut backup) = (0, 0);
        for (key, &y) in graph.keys().iter().zip(&assignment) {
            if y == UNPLACED {
                continue;
            }
            if key.is_primary_cell(y) {
                primary += 1;
            } else {
                assert!(key.is_backup_cell(y), "cell {y} is not a choice of its key");
                backup += 1;
                w[key.primary_page as usize] += 1;
            }
        }
        Self {
            assignment,
            pages: config.pages(),
            cells: config.m,
            primary,
            backup,
            w,
        }
    }

    pub fn assignment(&self) -> &[Cell] {
        &self.assignment
    }

    pub fn cell_of(&self, key: u32) -> Option<Cell> {
        match self.assignment[key as usize] {
            UNPLACED => None,
            y => Some(y),
        }
    }

    /// Keys stored on their primary page (`n_p`).
    pub fn n_primary(&self) -> u32 {
        self.primary
    }

    /// Keys stored on their backup page (`n_b`).
    pub fn n_backup(&self) -> u32 {
        self.backup
    }

    pub fn n_placed(&self) -> u32 {
        self.primary + self.backup
    }

    pub fn n_keys(&self) -> u32 {
        self.assignment.len() as u32
    }

    pub fn unplaced(&self) -> u32 {
        self.n_keys() - self.n_placed()
    }

    /// True when every key has a cell.
    pub fn is_complete(&self) -> bool {
        self.unplaced() == 0
    }

    /// `r_p = n_p / n` (1 for an empty key set).
    pub fn primary_fraction(&self) -> f64 {
        if self.assignment.is_empty() {
            1.0
        } else {
            f64::from(self.primary) / self.assignment.len() as f64
        }
    }

    /// `alpha_p = n_p / m`.
    pub fn primary_load(&self) -> f64 {
        f64::from(self.primary) / f64::from(self.cells)
    }

    /// Per page: keys with that primary page stored on their backup page.
    pub fn backup_per_page(&self) -> &[u32] {
        &self.w
    }

    pub fn pages(&self) -> Page {
        self.pages
    }

    /// Checks that every cell holds at most `ell` keys and every placed key
    /// sits in one of its choices.
    pub fn is_legal(&self, graph: &CuckooGraph) -> bool {
        let config = graph.config();
        let mut load = vec![0u32; config.m as usize];
        for (key, &y) in graph.keys().iter().zip(&self.assignment) {
            if y == UNPLACED {
                continue;
            }
            if !key.cells().contains(&y) {
                return false;
            }
            load[y as usize] += 1;
        }
        load.iter().all(|&l| l <= config.ell)
    }
}
