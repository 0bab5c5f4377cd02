use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("load factor must be finite and non-negative, got {0}")]
    LoadFactor(f64),
    #[error("page size {s} must be positive and divide the table size {m}")]
    PageSize { m: u32, s: u32 },
    #[error("primary choices kp={kp} must be in 1..={s}")]
    PrimaryChoices { kp: u32, s: u32 },
    #[error("backup choices kb={kb} exceed the page size {s}")]
    BackupChoices { kb: u32, s: u32 },
    #[error("backup choices need at least two pages")]
    SinglePageBackup,
    #[error("cell capacity must be at least 1")]
    Capacity,
    #[error("key count does not fit in 32 bits")]
    TooManyKeys,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid key choices: {0}")]
    InvalidChoices(String),
    #[error("invalid walk parameters: {0}")]
    WalkParams(String),
    #[error("key {0} is already stored")]
    DuplicateKey(u32),
    #[error("sigmoid fit refused: {0}")]
    Fit(String),
    #[error("invalid experiment: {0}")]
    Experiment(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
