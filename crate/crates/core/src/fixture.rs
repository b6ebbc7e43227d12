//! The bundled 63-container sample manifest and its configuration.

use crate::config::EngineConfig;
use crate::manifest::parse_manifest;
use crate::scenario::Dataset;

pub const MANIFEST_CSV: &str = include_str!("../fixtures/containers.csv");
pub const CONFIG_TOML: &str = include_str!("../fixtures/fixture.toml");

pub fn config() -> EngineConfig {
    EngineConfig::from_toml(CONFIG_TOML).expect("bundled config is valid")
}

pub fn dataset() -> Dataset {
    let manifest = parse_manifest(MANIFEST_CSV.as_bytes()).expect("bundled manifest is valid");
    assert!(
        manifest.rejected.is_empty(),
        "bundled manifest has rejected rows"
    );
    Dataset {
        containers: manifest.containers,
        current_date: config().planning_date(),
    }
}
