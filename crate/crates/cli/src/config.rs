use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use wghz::analysis::{Grid, SurfaceSpec};
use wghz::model::SystemParams;
use wghz::network::NetworkLayout;

/// JSON configuration shared by all subcommands. Every section is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: SystemParams,
    /// Alternative PBS routing; the canonical table when absent.
    pub layout: Option<NetworkLayout>,
    pub decay_sweep: DecaySweep,
    pub surface: SurfaceSpec,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySweep {
    pub eta_over_kappa: Vec<f64>,
    pub kappa_t: Grid,
}

impl Default for DecaySweep {
    fn default() -> Self {
        Self { eta_over_kappa: vec![100.0, 50.0, 20.0], kappa_t: Grid { min: 0.0, max: 1.0, steps: 201 } }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                e.into_inner().to_string()
            } else {
                format!("field `{path}`: {}", e.into_inner())
            }
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                Self::parse(&text).map_err(|e| format!("{}: {e}", p.display()))
            }
        }
    }

    pub fn layout(&self) -> NetworkLayout {
        self.layout.clone().unwrap_or_else(NetworkLayout::canonical)
    }
}
