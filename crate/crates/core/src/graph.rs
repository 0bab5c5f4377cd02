//! Table configuration and random bipartite cuckoo graphs.
//!
//! Keys are the integers `0..n` and cells the integers `0..m`. Cells are
//! grouped into `t = m / s` pages of `s` consecutive cells. Each key draws a
//! primary page, `k_p` distinct cells on it, a different backup page, and
//! `k_b` distinct cells there.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{ConfigError, Error};
use crate::rng::Rng;

/// Cell index into the table, `0..m`.
pub type Cell = u32;
/// Page index, `0..t`.
pub type Page = u32;
/// Key identifier.
pub type KeyId = u32;

/// Experiment configuration `(c, m, s, k_p, k_b, ell)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Load factor: keys per cell.
    pub c: f64,
    /// Number of cells.
    pub m: u32,
    /// Page size in cells.
    pub s: u32,
    /// Primary choices per key.
    pub kp: u32,
    /// Backup choices per key.
    pub kb: u32,
    /// Keys per cell.
    pub ell: u32,
}

impl Config {
    pub fn new(c: f64, m: u32, s: u32, kp: u32, kb: u32, ell: u32) -> Result<Self, ConfigError> {
        let config = Self {
            c,
            m,
            s,
            kp,
            kb,
            ell,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.c.is_finite() || self.c < 0.0 {
            return Err(ConfigError::LoadFactor(self.c));
        }
        if self.s == 0 || self.m == 0 || !self.m.is_multiple_of(self.s) {
            return Err(ConfigError::PageSize {
                m: self.m,
                s: self.s,
            });
        }
        if self.kp == 0 || self.kp > self.s {
            return Err(ConfigError::PrimaryChoices {
                kp: self.kp,
                s: self.s,
            });
        }
        if self.kb > self.s {
            return Err(ConfigError::BackupChoices {
                kb: self.kb,
                s: self.s,
            });
        }
        if self.kb > 0 && self.pages() < 2 {
            return Err(ConfigError::SinglePageBackup);
        }
        if self.ell == 0 {
            return Err(ConfigError::Capacity);
        }
        if self.c * f64::from(self.m) > f64::from(u32::MAX - 1) {
            return Err(ConfigError::TooManyKeys);
        }
        Ok(())
    }

    /// Page count `t = m / s`.
    pub fn pages(&self) -> u32 {
        self.m / self.s
    }

    /// Choices per key, `k_p + k_b`.
    pub fn k(&self) -> u32 {
        self.kp + self.kb
    }

    /// Key count `n = round(c * m)`, ties rounded up.
    pub fn n(&self) -> u32 {
        (self.c * f64::from(self.m) + 0.5).floor() as u32
    }

    /// Same configuration at a different load factor.
    pub fn with_load(&self, c: f64) -> Self {
        Self { c, ..*self }
    }

    /// Page holding `cell`.
    ///
    /// # Panics
    ///
    /// Panics if `cell >= m`.
    pub fn page_of(&self, cell: Cell) -> Page {
        assert!(cell < self.m, "cell {cell} out of range 0..{}", self.m);
        cell / self.s
    }

    pub(crate) fn page_start(&self, page: Page) -> Cell {
        page * self.s
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c={} m={} s={} kp={} kb={} ell={}",
            self.c, self.m, self.s, self.kp, self.kb, self.ell
        )
    }
}

/// Cell choices of one key.
///
/// `cells` lists the `k_p` primary cells followed by the `k_b` backup cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyChoices {
    pub primary_page: Page,
    pub backup_page: Option<Page>,
    cells: SmallVec<[Cell; 4]>,
    kp: u32,
}

impl KeyChoices {
    /// Builds a choice set from explicit cells, checking it against `config`.
    pub fn from_cells(
        config: &Config,
        primary_page: Page,
        primary: &[Cell],
        backup_page: Option<Page>,
        backup: &[Cell],
    ) -> Result<Self, Error> {
        let invalid = |why: &str| Error::InvalidChoices(why.to_string());
        if primary_page >= config.pages() {
            return Err(invalid("primary page out of range"));
        }
        if primary.len() != config.kp as usize || backup.len() != config.kb as usize {
            return Err(invalid("wrong number of cells"));
        }
        match (backup_page, config.kb) {
            (None, 0) => {}
            (Some(b), kb) if kb > 0 && b != primary_page && b < config.pages() => {}
            _ => return Err(invalid("backup page missing, out of range or equal to primary")),
        }
        let on_page = |cells: &[Cell], page: Page| {
            cells
                .iter()
                .all(|&y| y < config.m && config.page_of(y) == page)
        };
        if !on_page(primary, primary_page) {
            return Err(invalid("primary cell off its page"));
        }
        if let Some(b) = backup_page {
            if !on_page(backup, b) {
                return Err(invalid("backup cell off its page"));
            }
        }
        let mut cells: SmallVec<[Cell; 4]> = SmallVec::new();
        cells.extend_from_slice(primary);
        cells.extend_from_slice(backup);
        for (i, y) in cells.iter().enumerate() {
            if cells[..i].contains(y) {
                return Err(invalid("duplicate cell"));
            }
        }
        Ok(Self {
            primary_page,
            backup_page,
            cells,
            kp: config.kp,
        })
    }

    /// Draws a fresh choice set.
    ///
    /// Consumes the generator in a fixed order: primary page, primary
    /// cells, backup page (uniform over the other pages via skipping), backup
    /// cells.
    pub fn draw(config: &Config, rng: &mut Rng) -> Self {
        let t = config.pages();
        let primary_page = rng.uniform_below(t);
        let mut cells: SmallVec<[Cell; 4]> = SmallVec::new();
        rng.sample_distinct_into(
            config.kp,
            config.page_start(primary_page),
            config.s,
            &mut cells,
        );
        let backup_page = if config.kb > 0 {
            let mut b = rng.uniform_below(t - 1);
            if b >= primary_page {
                b += 1;
            }
            rng.sample_distinct_into(config.kb, config.page_start(b), config.s, &mut cells);
            Some(b)
        } else {
            None
        };
        Self {
            primary_page,
            backup_page,
            cells,
            kp: config.kp,
        }
    }

    pub fn primary_cells(&self) -> &[Cell] {
        &self.cells[..self.kp as usize]
    }

    pub fn backup_cells(&self) -> &[Cell] {
        &self.cells[self.kp as usize..]
    }

    /// All cells, primary first.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Whether choice slot `i` of [`cells`](Self::cells) is a backup choice.
    pub fn is_backup_slot(&self, i: usize) -> bool {
        i >= self.kp as usize
    }

    pub fn is_primary_cell(&self, cell: Cell) -> bool {
        self.primary_cells().contains(&cell)
    }

    pub fn is_backup_cell(&self, cell: Cell) -> bool {
        self.backup_cells().contains(&cell)
    }
}

/// Random bipartite cuckoo graph: one [`KeyChoices`] per key.
#[derive(Debug, Clone)]
pub struct CuckooGraph {
    config: Config,
    keys: Vec<KeyChoices>,
}

impl CuckooGraph {
    /// Generates `n` keys in order `0..n`.
    pub fn generate(config: &Config, rng: &mut Rng) -> Result<Self, Error> {
        config.validate()?;
        let keys = (0..config.n())
            .map(|_| KeyChoices::draw(config, rng))
            .collect();
        Ok(Self {
            config: *config,
            keys,
        })
    }

    /// Wraps explicit choice sets. Each must be valid for `config`; the key
    /// count is taken from `keys`, not from `config.c`.
    pub fn from_keys(config: Config, keys: Vec<KeyChoices>) -> Result<Self, Error> {
        config.validate()?;
        for key in &keys {
            let rebuilt = KeyChoices::from_cells(
                &config,
                key.primary_page,
                key.primary_cells(),
                key.backup_page,
                key.backup_cells(),
            )?;
            debug_assert_eq!(&rebuilt, key);
        }
        Ok(Self { config, keys })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn keys(&self) -> &[KeyChoices] {
        &self.keys
    }

    pub fn key(&self, key: KeyId) -> &KeyChoices {
        &self.keys[key as usize]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Writes one line per key: `key p b cell1 ... cellk`. A missing backup
    /// page is written as `-`.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, key) in self.keys.iter().enumerate() {
            write!(out, "{i} {}", key.primary_page)?;
            match key.backup_page {
                Some(b) => write!(out, " {b}")?,
                None => write!(out, " -")?,
            }
            for y in key.cells() {
                write!(out, " {y}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Parses the format produced by [`write_dump`](Self::write_dump).
    pub fn read_dump(config: Config, text: &str) -> Result<Self, Error> {
        let mut keys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Parse(format!("graph dump line {}: {line:?}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 + config.k() as usize {
                return Err(bad());
            }
            let key: usize = fields[0].parse().map_err(|_| bad())?;
            if key != keys.len() {
                return Err(bad());
            }
            let p: Page = fields[1].parse().map_err(|_| bad())?;
            let b = match fields[2] {
                "-" => None,
                f => Some(f.parse::<Page>().map_err(|_| bad())?),
            };
            let cells = fields[3..]
                .iter()
                .map(|f| f.parse::<Cell>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            let (primary, backup) = cells.split_at(config.kp as usize);
            keys.push(KeyChoices::from_cells(&config, p, primary, b, backup)?);
        }
        Self::from_keys(config, keys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(c: f64, m: u32, s: u32, kp: u32, kb: u32) -> Config {
        Config::new(c, m, s, kp, kb, 1).unwrap()
    }

    #[test]
    fn page_of_examples() {
        let config = cfg(0.5, 1000, 100, 3, 1);
        assert_eq!(config.page_of(0), 0);
        assert_eq!(config.page_of(999), 9);
        assert_eq!(config.page_of(100), 1);
    }

    #[test]
    #[should_panic]
    fn page_of_out_of_range() {
        cfg(0.5, 1000, 100, 3, 1).page_of(1000);
    }

    #[test]
    fn key_count_rounding() {
        assert_eq!(cfg(0.95, 1000, 100, 3, 1).n(), 950);
        assert_eq!(cfg(0.0005, 1000, 100, 3, 1).n(), 1);
        assert_eq!(cfg(0.0004, 1000, 100, 3, 1).n(), 0);
    }

    #[test]
    fn config_rejections() {
        assert_eq!(
            Config::new(0.5, 100, 100, 3, 1, 1),
            Err(ConfigError::SinglePageBackup)
        );
        assert!(matches!(
            Config::new(0.5, 1000, 300, 3, 1, 1),
            Err(ConfigError::PageSize { .. })
        ));
        assert!(matches!(
            Config::new(0.5, 1000, 100, 0, 1, 1),
            Err(ConfigError::PrimaryChoices { .. })
        ));
        assert!(matches!(
            Config::new(0.5, 10, 2, 3, 0, 1),
            Err(ConfigError::PrimaryChoices { .. })
        ));
        assert!(matches!(
            Config::new(0.5, 10, 2, 1, 3, 1),
            Err(ConfigError::BackupChoices { .. })
        ));
        assert_eq!(
            Config::new(0.5, 10, 2, 1, 1, 0),
            Err(ConfigError::Capacity)
        );
        assert!(Config::new(0.5, 100, 100, 4, 0, 1).is_ok());
    }

    #[test]
    fn generated_keys_respect_structure() {
        let config = cfg(0.95, 1000, 100, 3, 1);
        let g = CuckooGraph::generate(&config, &mut Rng::new(1)).unwrap();
        assert_eq!(g.len(), 950);
        for key in g.keys() {
            let b = key.backup_page.unwrap();
            assert_ne!(b, key.primary_page);
            assert_eq!(key.primary_cells().len(), 3);
            assert_eq!(key.backup_cells().len(), 1);
            for &y in key.primary_cells() {
                assert_eq!(config.page_of(y), key.primary_page);
            }
            assert_eq!(config.page_of(key.backup_cells()[0]), b);
            let mut cells = key.cells().to_vec();
            cells.sort_unstable();
            cells.dedup();
            assert_eq!(cells.len(), 4);
        }
    }

    #[test]
    fn no_backup_keeps_one_page() {
        let config = cfg(0.9, 1000, 100, 4, 0);
        let g = CuckooGraph::generate(&config, &mut Rng::new(3)).unwrap();
        for key in g.keys() {
            assert!(key.backup_page.is_none());
            assert!(key.cells().iter().all(|&y| config.page_of(y) == key.primary_page));
        }
    }

    #[test]
    fn generation_consumes_rng_in_documented_order() {
        let config = cfg(0.002, 1000, 100, 2, 1);
        let g = CuckooGraph::generate(&config, &mut Rng::new(8)).unwrap();
        let mut rng = Rng::new(8);
        for key in g.keys() {
            let p = rng.uniform_below(10);
            let primary = rng.sample_distinct(2, p * 100, 100);
            let mut b = rng.uniform_below(9);
            if b >= p {
                b += 1;
            }
            let backup = rng.sample_distinct(1, b * 100, 100);
            assert_eq!(key.primary_page, p);
            assert_eq!(key.backup_page, Some(b));
            assert_eq!(key.primary_cells(), &primary[..]);
            assert_eq!(key.backup_cells(), &backup[..]);
        }
    }

    #[test]
    fn primary_pages_are_uniform() {
        let config = cfg(1.0, 100_000, 10_000, 3, 1);
        let g = CuckooGraph::generate(&config, &mut Rng::new(17)).unwrap();
        let mut counts = [0f64; 10];
        for key in g.keys() {
            counts[key.primary_page as usize] += 1.0;
        }
        let expected = g.len() as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 9 degrees of freedom; 99.9% quantile is 27.88.
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    #[test]
    fn dump_round_trip() {
        let config = cfg(0.5, 40, 10, 2, 1);
        let g = CuckooGraph::generate(&config, &mut Rng::new(5)).unwrap();
        let mut buf = Vec::new();
        g.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 20);
        let back = CuckooGraph::read_dump(config, &text).unwrap();
        assert_eq!(back.keys(), g.keys());
    }

    #[test]
    fn from_cells_rejects_bad_sets() {
        let config = cfg(0.5, 40, 10, 2, 1);
        assert!(KeyChoices::from_cells(&config, 0, &[1, 2], Some(1), &[15]).is_ok());
        assert!(KeyChoices::from_cells(&config, 0, &[1, 1], Some(1), &[15]).is_err());
        assert!(KeyChoices::from_cells(&config, 0, &[1, 12], Some(1), &[15]).is_err());
        assert!(KeyChoices::from_cells(&config, 0, &[1, 2], Some(0), &[5]).is_err());
        assert!(KeyChoices::from_cells(&config, 0, &[1, 2], None, &[]).is_err());
    }
}
