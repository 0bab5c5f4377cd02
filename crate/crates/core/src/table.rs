//! Online paged cuckoo table with biased random-walk insertion.
//!
//! An insertion places the nestless key in a free primary cell when one
//! exists. Otherwise a coin with bias `a_bias` decides whether the walk
//! stays on the primary page (evicting a random occupant of a random primary
//! cell) or moves to the backup page (taking a free backup cell, or evicting
//! from a random backup cell). The evicted key becomes nestless and the walk
//! continues. A key may not immediately evict the key that just evicted it
//! while it has another option on the same page.
//!
//! A global counter, initialised to `b_factor * n`, is decremented once per
//! basic step across all insertions; an insertion fails when it hits zero.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::bloom::PageFilters;
use crate::error::Error;
use crate::graph::{Cell, Config, KeyChoices, KeyId, Page};
use crate::placement::UNPLACED;
use crate::rng::Rng;

/// Random-walk parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkParams {
    /// Probability that a blocked key continues on its primary page.
    pub a_bias: f64,
    /// Step budget per key; `f64::INFINITY` disables the budget.
    #[serde(serialize_with = "serialize_factor")]
    pub b_factor: f64,
}

/// Writes an infinite budget factor as the string `"inf"`.
pub(crate) fn serialize_factor<S: Serializer>(b: &f64, ser: S) -> Result<S::Ok, S::Error> {
    if b.is_infinite() {
        ser.serialize_str("inf")
    } else {
        ser.serialize_f64(*b)
    }
}

impl WalkParams {
    pub fn new(a_bias: f64, b_factor: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&a_bias) {
            return Err(Error::WalkParams(format!("a_bias {a_bias} outside [0, 1]")));
        }
        if b_factor.is_nan() || b_factor <= 0.0 {
            return Err(Error::WalkParams(format!("b_factor {b_factor} must be positive")));
        }
        Ok(Self { a_bias, b_factor })
    }

    /// Global step budget for `n` keys, `None` when unbounded.
    pub fn budget(&self, n: u32) -> Option<u64> {
        if self.b_factor.is_infinite() {
            None
        } else {
            Some((self.b_factor * f64::from(n)).floor() as u64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertOutcome {
    pub success: bool,
    pub steps: u64,
    pub page_requests: u64,
    /// Key left out of the table when the budget ran out.
    pub unplaced: Option<KeyId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupOutcome {
    pub found: bool,
    pub page_requests: u32,
}

/// One basic step of a walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceStep {
    pub step_index: u64,
    pub nestless: KeyId,
    pub page: Page,
    pub cell: Cell,
    /// `None` when the key went into a free slot.
    pub evicted: Option<KeyId>,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} ",
            self.step_index, self.nestless, self.page, self.cell
        )?;
        match self.evicted {
            Some(x) => write!(f, "{x}"),
            None => write!(f, "FREE"),
        }
    }
}

/// Counts of primary and backup keys and per-page spill.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSnapshot {
    pub live: u32,
    pub n_primary: u32,
    pub n_backup: u32,
    /// Per page: keys with that primary page stored on their backup page.
    pub w: Vec<u32>,
}

#[derive(Debug, Clone)]
struct Entry {
    choices: KeyChoices,
    cell: Cell,
}

/// Which half of a key's choices a sub-step works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Primary,
    Backup,
}

#[derive(Debug, Clone)]
pub struct PagedTable {
    config: Config,
    params: WalkParams,
    slots: Vec<KeyId>,
    load: Vec<u32>,
    entries: Vec<Option<Entry>>,
    live: u32,
    n_primary: u32,
    budget: Option<u64>,
    total_steps: u64,
    total_page_requests: u64,
    inserts: u64,
}

impl PagedTable {
    /// Empty table; the step budget is `b_factor * config.n()`.
    pub fn new(config: Config, params: WalkParams) -> Result<Self, Error> {
        config.validate()?;
        let budget = params.budget(config.n());
        Ok(Self::with_budget(config, params, budget))
    }

    /// Empty table with an explicit global step budget.
    pub fn with_budget(config: Config, params: WalkParams, budget: Option<u64>) -> Self {
        let m = config.m as usize;
        Self {
            config,
            params,
            slots: vec![0; m * config.ell as usize],
            load: vec![0; m],
            entries: Vec::new(),
            live: 0,
            n_primary: 0,
            budget,
            total_steps: 0,
            total_page_requests: 0,
            inserts: 0,
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn params(&self) -> &WalkParams {
        &self.params
    }

    pub fn live_keys(&self) -> u32 {
        self.live
    }

    pub fn n_primary(&self) -> u32 {
        self.n_primary
    }

    pub fn n_backup(&self) -> u32 {
        self.live - self.n_primary
    }

    /// Remaining global budget, `None` when unbounded.
    pub fn remaining_budget(&self) -> Option<u64> {
        self.budget
    }

    /// Replaces the remaining global budget.
    pub fn set_budget(&mut self, budget: Option<u64>) {
        self.budget = budget;
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn total_page_requests(&self) -> u64 {
        self.total_page_requests
    }

    /// Number of insert calls that reached the walk.
    pub fn inserts(&self) -> u64 {
        self.inserts
    }

    pub fn contains(&self, key: KeyId) -> bool {
        self.entry(key).is_some()
    }

    /// Cell currently holding `key`.
    pub fn cell_of(&self, key: KeyId) -> Option<Cell> {
        self.entry(key).map(|e| e.cell)
    }

    /// Choice set stored with `key`.
    pub fn choices_of(&self, key: KeyId) -> Option<&KeyChoices> {
        self.entry(key).map(|e| &e.choices)
    }

    fn entry(&self, key: KeyId) -> Option<&Entry> {
        self.entries
            .get(key as usize)
            .and_then(|e| e.as_ref())
            .filter(|e| e.cell != UNPLACED)
    }

    fn occupants(&self, y: Cell) -> &[KeyId] {
        let start = y as usize * self.config.ell as usize;
        &self.slots[start..start + self.load[y as usize] as usize]
    }

    fn has_room(&self, y: Cell) -> bool {
        self.load[y as usize] < self.config.ell
    }

    fn push_slot(&mut self, y: Cell, key: KeyId) {
        let yi = y as usize;
        debug_assert!(self.load[yi] < self.config.ell);
        self.slots[yi * self.config.ell as usize + self.load[yi] as usize] = key;
        self.load[yi] += 1;
    }

    fn remove_slot(&mut self, y: Cell, key: KeyId) {
        let yi = y as usize;
        let start = yi * self.config.ell as usize;
        let len = self.load[yi] as usize;
        let pos = self.slots[start..start + len]
            .iter()
            .position(|&k| k == key)
            .expect("key missing from its cell");
        // Keep occupant order stable so victim indices stay reproducible.
        self.slots.copy_within(start + pos + 1..start + len, start + pos);
        self.load[yi] -= 1;
    }

    fn place(&mut self, key: KeyId, y: Cell) {
        self.push_slot(y, key);
        let entry = self.entries[key as usize].as_mut().unwrap();
        entry.cell = y;
        if entry.choices.is_primary_cell(y) {
            self.n_primary += 1;
        }
        self.live += 1;
    }

    fn unplace(&mut self, key: KeyId) {
        let entry = self.entries[key as usize].as_mut().unwrap();
        let y = entry.cell;
        entry.cell = UNPLACED;
        if entry.choices.is_primary_cell(y) {
            self.n_primary -= 1;
        }
        self.live -= 1;
        self.remove_slot(y, key);
    }

    /// Inserts `key` with the given choices.
    ///
    /// Returns an error if the key is already stored. A failed walk (budget
    /// exhausted) leaves the table legal and reports the key left out, which
    /// may be an older key displaced by the walk.
    pub fn insert(
        &mut self,
        key: KeyId,
        choices: KeyChoices,
        rng: &mut Rng,
    ) -> Result<InsertOutcome, Error> {
        self.insert_inner(key, choices, rng, None)
    }

    /// Like [`insert`](Self::insert) and appends one [`TraceStep`] per
    /// basic step to `trace`.
    pub fn insert_traced(
        &mut self,
        key: KeyId,
        choices: KeyChoices,
        rng: &mut Rng,
        trace: &mut Vec<TraceStep>,
    ) -> Result<InsertOutcome, Error> {
        self.insert_inner(key, choices, rng, Some(trace))
    }

    fn insert_inner(
        &mut self,
        key: KeyId,
        choices: KeyChoices,
        rng: &mut Rng,
        mut trace: Option<&mut Vec<TraceStep>>,
    ) -> Result<InsertOutcome, Error> {
        if self.contains(key) {
            return Err(Error::DuplicateKey(key));
        }
        if self.budget == Some(0) {
            return Ok(InsertOutcome {
                success: false,
                steps: 0,
                page_requests: 0,
                unplaced: Some(key),
            });
        }
        let ki = key as usize;
        if self.entries.len() <= ki {
            self.entries.resize(ki + 1, None);
        }
        self.entries[ki] = Some(Entry {
            choices,
            cell: UNPLACED,
        });
        self.inserts += 1;

        let mut nestless = key;
        let mut evicted_by: Option<KeyId> = None;
        let mut page_seen: Option<Page> = None;
        let mut steps = 0u64;
        let mut requests = 0u64;
        let mut visit = |page: Page, requests: &mut u64| {
            if page_seen != Some(page) {
                *requests += 1;
                page_seen = Some(page);
            }
        };
        let mut candidates: Vec<Cell> = Vec::with_capacity(self.config.k() as usize);

        let success = loop {
            match self.budget {
                Some(0) => break false,
                Some(ref mut b) => *b -= 1,
                None => {}
            }
            steps += 1;
            let step_index = steps - 1;
            let choices = &self.entries[nestless as usize].as_ref().unwrap().choices;
            let primary_page = choices.primary_page;
            let backup_page = choices.backup_page;

            visit(primary_page, &mut requests);
            candidates.clear();
            candidates.extend(choices.primary_cells().iter().copied().filter(|&y| self.has_room(y)));
            if !candidates.is_empty() {
                let y = candidates[rng.index_below(candidates.len())];
                self.place(nestless, y);
                record(&mut trace, step_index, nestless, primary_page, y, None);
                break true;
            }

            let side = match backup_page {
                Some(_) if rng.next_f64() >= self.params.a_bias => Side::Backup,
                _ => Side::Primary,
            };
            let page = match side {
                Side::Primary => primary_page,
                Side::Backup => {
                    let b = backup_page.unwrap();
                    visit(b, &mut requests);
                    let choices = &self.entries[nestless as usize].as_ref().unwrap().choices;
                    candidates.clear();
                    candidates
                        .extend(choices.backup_cells().iter().copied().filter(|&y| self.has_room(y)));
                    if !candidates.is_empty() {
                        let y = candidates[rng.index_below(candidates.len())];
                        self.place(nestless, y);
                        record(&mut trace, step_index, nestless, b, y, None);
                        break true;
                    }
                    b
                }
            };

            let (y, victim) = self.choose_victim(nestless, side, evicted_by, rng);
            self.unplace(victim);
            self.place(nestless, y);
            record(&mut trace, step_index, nestless, page, y, Some(victim));
            evicted_by = Some(nestless);
            nestless = victim;
        };

        self.total_steps += steps;
        self.total_page_requests += requests;
        let unplaced = if success {
            None
        } else {
            self.entries[nestless as usize] = None;
            Some(nestless)
        };
        Ok(InsertOutcome {
            success,
            steps,
            page_requests: requests,
            unplaced,
        })
    }

    /// Picks a random cell on the chosen side and a random occupant of it.
    /// The key that just evicted `nestless` is excluded as long as another
    /// (cell, occupant) option exists on that side.
    fn choose_victim(
        &self,
        nestless: KeyId,
        side: Side,
        evicted_by: Option<KeyId>,
        rng: &mut Rng,
    ) -> (Cell, KeyId) {
        let choices = &self.entries[nestless as usize].as_ref().unwrap().choices;
        let cells = match side {
            Side::Primary => choices.primary_cells(),
            Side::Backup => choices.backup_cells(),
        };
        let forbidden = evicted_by.filter(|&x| {
            cells
                .iter()
                .any(|&y| self.occupants(y).iter().any(|&o| o != x))
        });
        let allowed = |y: Cell| match forbidden {
            Some(x) => self.occupants(y).iter().any(|&o| o != x),
            None => true,
        };
        let open: smallvec::SmallVec<[Cell; 4]> = cells.iter().copied().filter(|&y| allowed(y)).collect();
        let y = open[rng.index_below(open.len())];
        let occupants = self.occupants(y);
        let victim = match forbidden {
            Some(x) if occupants.contains(&x) => {
                let others: smallvec::SmallVec<[KeyId; 8]> =
                    occupants.iter().copied().filter(|&o| o != x).collect();
                others[rng.index_below(others.len())]
            }
            _ => occupants[rng.index_below(occupants.len())],
        };
        (y, victim)
    }

    /// Removes `key`, checking its primary cells first, then its backup
    /// cells. The global step budget is not touched.
    pub fn delete(&mut self, key: KeyId) -> bool {
        let Some(entry) = self.entry(key) else {
            return false;
        };
        let choices = &entry.choices;
        let holder = choices
            .primary_cells()
            .iter()
            .chain(choices.backup_cells())
            .copied()
            .find(|&y| self.occupants(y).contains(&key));
        debug_assert_eq!(holder, Some(entry.cell));
        if holder.is_none() {
            return false;
        }
        self.unplace(key);
        self.entries[key as usize] = None;
        true
    }

    /// Searches `key` on its primary page, then (unless the filter for its
    /// primary page rules it out) on its backup page.
    pub fn lookup(
        &self,
        key: KeyId,
        choices: &KeyChoices,
        filters: Option<&PageFilters>,
    ) -> LookupOutcome {
        let holds = |y: &Cell| self.occupants(*y).contains(&key);
        if choices.primary_cells().iter().any(holds) {
            return LookupOutcome {
                found: true,
                page_requests: 1,
            };
        }
        let miss_on_primary = LookupOutcome {
            found: false,
            page_requests: 1,
        };
        if choices.backup_cells().is_empty() {
            return miss_on_primary;
        }
        if let Some(f) = filters {
            if !f.may_contain(choices.primary_page, key) {
                return miss_on_primary;
            }
        }
        LookupOutcome {
            found: choices.backup_cells().iter().any(holds),
            page_requests: 2,
        }
    }

    /// Builds per-page filters of `bits_per_cell * s` bits over the keys
    /// stored on their backup page, grouped by primary page.
    pub fn build_page_filters(&self, bits_per_cell: f64, hashes: u32, seed: u32) -> PageFilters {
        let mut filters = PageFilters::new(
            self.config.pages(),
            self.config.s,
            bits_per_cell,
            hashes,
            seed,
        );
        for (key, entry) in self.live_entries() {
            if entry.choices.is_backup_cell(entry.cell) {
                filters.insert(entry.choices.primary_page, key);
            }
        }
        filters
    }

    fn live_entries(&self) -> impl Iterator<Item = (KeyId, &Entry)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(k, e)| e.as_ref().filter(|e| e.cell != UNPLACED).map(|e| (k as KeyId, e)))
    }

    /// Live key ids in increasing order.
    pub fn live_key_ids(&self) -> impl Iterator<Item = KeyId> + '_ {
        self.live_entries().map(|(k, _)| k)
    }

    pub fn snapshot(&self) -> TableSnapshot {
        let mut w = vec![0u32; self.config.pages() as usize];
        for (_, entry) in self.live_entries() {
            if !entry.choices.is_primary_cell(entry.cell) {
                w[entry.choices.primary_page as usize] += 1;
            }
        }
        TableSnapshot {
            live: self.live,
            n_primary: self.n_primary,
            n_backup: self.live - self.n_primary,
            w,
        }
    }

    /// Full legality check: every live key sits in one of its cells and is
    /// listed there exactly once, no cell exceeds capacity, counters agree.
    pub fn check_legal(&self) -> Result<(), String> {
        let mut live = 0;
        let mut primary = 0;
        for (key, entry) in self.live_entries() {
            live += 1;
            if !entry.choices.cells().contains(&entry.cell) {
                return Err(format!("key {key} stored outside its choices"));
            }
            if entry.choices.is_primary_cell(entry.cell) {
                primary += 1;
            }
            let copies: usize = entry
                .choices
                .cells()
                .iter()
                .map(|&y| self.occupants(y).iter().filter(|&&o| o == key).count())
                .sum();
            if copies != 1 || !self.occupants(entry.cell).contains(&key) {
                return Err(format!("key {key} stored {copies} times"));
            }
        }
        if self.load.iter().any(|&l| l > self.config.ell) {
            return Err("cell over capacity".into());
        }
        let slots: u64 = self.load.iter().map(|&l| u64::from(l)).sum();
        if slots != live {
            return Err(format!("{slots} occupied slots for {live} live keys"));
        }
        if live != u64::from(self.live) || primary != self.n_primary {
            return Err("counters out of sync".into());
        }
        Ok(())
    }
}

fn record(
    trace: &mut Option<&mut Vec<TraceStep>>,
    step_index: u64,
    nestless: KeyId,
    page: Page,
    cell: Cell,
    evicted: Option<KeyId>,
) {
    if let Some(t) = trace.as_deref_mut() {
        t.push(TraceStep {
            step_index,
            nestless,
            page,
            cell,
            evicted,
        });
    }
}
