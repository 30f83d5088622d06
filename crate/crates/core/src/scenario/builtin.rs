//! Curated scenarios embedded in the binary.

use super::config::{Config, ConfigError};

pub struct Builtin {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! builtin {
    ($name:literal) => {
        Builtin {
            name: $name,
            source: include_str!(concat!("scenarios/", $name, ".toml")),
        }
    };
}

pub static BUILTINS: &[Builtin] = &[
    builtin!("small-sphere-inclusion"),
    builtin!("warped-product-projection"),
    builtin!("cubic-curve-s2"),
    builtin!("sphere-family-s2-lambda"),
    builtin!("homothety-law"),
    builtin!("conformal-surface-law"),
    builtin!("gauss-oracle-corpus"),
    builtin!("sphere-willmore"),
    builtin!("clifford-willmore"),
    builtin!("cylinder-negative-witness"),
    builtin!("gauss-bonnet-integrals"),
    builtin!("killing-fields"),
];

pub fn find(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

impl Builtin {
    pub fn config(&self) -> Result<Config, ConfigError> {
        Config::from_toml(self.source)
    }

    /// The anchor phrase declared in the scenario header.
    pub fn anchor(&self) -> String {
        self.config()
            .ok()
            .and_then(|c| c.raw.scenario.map(|s| s.anchor))
            .unwrap_or_default()
    }
}

/// `(name, anchor)` rows in registry order.
pub fn list_scenarios() -> Vec<(&'static str, String)> {
    BUILTINS.iter().map(|b| (b.name, b.anchor())).collect()
}
