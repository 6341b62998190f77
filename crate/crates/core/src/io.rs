//! Curve description files.
//!
//! ```json
//! {"n": 2, "name": "conic",
//!  "components": [[[1, 0]], [[0, 0], [1.4142135623730951, 0]], [[0, 0], [0, 0], [1, 0]]]}
//! ```
//!
//! Component `k` lists `[re, im]` coefficient pairs by ascending power of `w`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{CurveAtlas, CurveError};
use crate::poly::Poly;
use crate::C64;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed curve file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("curve file declares n = {declared} but has {found} components")]
    ComponentCount { declared: usize, found: usize },
    #[error("invalid curve: {0}")]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub n: usize,
    pub components: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl CurveFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_atlas(&self) -> Result<CurveAtlas, IoError> {
        if self.components.len() != self.n + 1 {
            return Err(IoError::ComponentCount {
                declared: self.n,
                found: self.components.len(),
            });
        }
        let comps = self
            .components
            .iter()
            .map(|cs| Poly::new(cs.iter().map(|&[re, im]| C64::new(re, im)).collect()))
            .collect();
        let name = self.name.clone().unwrap_or_else(|| "curve".to_string());
        Ok(CurveAtlas::from_components(name, comps)?)
    }

    pub fn from_atlas(atlas: &CurveAtlas) -> Self {
        let chart = atlas.chart(crate::curve::ChartId::Zero);
        Self {
            n: atlas.n(),
            components: chart
                .components()
                .iter()
                .map(|p| p.coeffs().iter().map(|c| [c.re, c.im]).collect())
                .collect(),
            name: Some(atlas.name.clone()),
        }
    }
}
