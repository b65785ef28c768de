//! Run configuration: a TOML document, overridden field by field by flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use geosimplex::chains::parse_coeff;
use geosimplex::gaussbonnet::Budgets;
use geosimplex::presets::preset;
use geosimplex::{ChartedMetric, GeomError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// Gauss–Legendre points per collapsed coordinate; command default when unset.
    pub simplex_order: Option<usize>,
    pub mc_samples: usize,
    pub cone_lattice: usize,
    pub arc_lattice: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let b = Budgets::default();
        Self { simplex_order: None, mc_samples: b.mc_samples, cone_lattice: b.cone_lattice, arc_lattice: b.arc_lattice }
    }
}

impl BudgetConfig {
    pub fn budgets(&self, default_order: usize) -> Budgets {
        Budgets {
            order: self.simplex_order.unwrap_or(default_order),
            mc_samples: self.mc_samples,
            cone_lattice: self.cone_lattice,
            arc_lattice: self.arc_lattice,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// One simplex of a chain: a preset, or a model with explicit vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainEntry {
    pub id: String,
    /// Exact coefficient: an integer, `p/q` or a finite decimal.
    #[serde(default = "one")]
    pub coefficient: String,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub vertices: Option<Vec<Vec<f64>>>,
}

fn one() -> String {
    "1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<String>,
    pub vertices: Option<Vec<Vec<f64>>>,
    /// Named presets; `verify` and `budget` use the first, `2d` runs each.
    pub presets: Vec<String>,
    pub seed: u64,
    pub budgets: BudgetConfig,
    pub tol: Option<f64>,
    pub output: OutputConfig,
    pub trials: usize,
    pub chain: Vec<ChainEntry>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: None,
            vertices: None,
            presets: Vec::new(),
            seed: 0,
            budgets: BudgetConfig::default(),
            tol: None,
            output: OutputConfig::default(),
            trials: 1000,
            chain: Vec::new(),
        }
    }
}

/// A resolved simplex: model, vertices and a display label.
#[derive(Debug, Clone)]
pub struct SimplexSpec {
    pub label: String,
    pub model: ChartedMetric,
    pub vertices: Vec<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| GeomError::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| GeomError::InvalidInput(format!("config {}: {e}", path.display())))
    }

    /// The simplex named by the first preset, or by `model` plus `vertices`.
    pub fn simplex(&self) -> Result<SimplexSpec> {
        if let Some(name) = self.presets.first() {
            if self.vertices.is_some() {
                return Err(GeomError::InvalidInput("give either a preset or explicit vertices, not both".into()));
            }
            let p = preset(name)?;
            return Ok(SimplexSpec { label: p.name, model: p.model, vertices: p.vertices });
        }
        resolve(None, self.model.as_deref(), self.vertices.as_ref())
    }

    pub fn triangles(&self) -> Result<Vec<SimplexSpec>> {
        if !self.presets.is_empty() {
            return self
                .presets
                .iter()
                .map(|n| {
                    let p = preset(n)?;
                    Ok(SimplexSpec { label: p.name, model: p.model, vertices: p.vertices })
                })
                .collect();
        }
        if self.vertices.is_some() {
            return Ok(vec![self.simplex()?]);
        }
        ["flat-triangle", "s2-octant", "h2-small", "h2-medium", "h2-near-ideal"]
            .iter()
            .map(|n| {
                let p = preset(n)?;
                Ok(SimplexSpec { label: p.name, model: p.model, vertices: p.vertices })
            })
            .collect()
    }

    /// Chain entries with exact coefficients; a lone simplex becomes `s0` with coefficient 1.
    pub fn chain_entries(&self) -> Result<Vec<(String, geosimplex::chains::Coeff, SimplexSpec)>> {
        if self.chain.is_empty() {
            return Ok(vec![("s0".into(), parse_coeff("1")?, self.simplex()?)]);
        }
        self.chain
            .iter()
            .map(|e| {
                let spec =
                    resolve(e.preset.as_deref(), e.model.as_deref().or(self.model.as_deref()), e.vertices.as_ref())?;
                Ok((e.id.clone(), parse_coeff(&e.coefficient)?, spec))
            })
            .collect()
    }
}

fn resolve(preset_name: Option<&str>, model: Option<&str>, vertices: Option<&Vec<Vec<f64>>>) -> Result<SimplexSpec> {
    match (preset_name, model, vertices) {
        (Some(name), _, None) => {
            let p = preset(name)?;
            Ok(SimplexSpec { label: p.name, model: p.model, vertices: p.vertices })
        }
        (None, Some(m), Some(v)) => {
            let model: ChartedMetric = m.parse()?;
            Ok(SimplexSpec { label: m.to_string(), model, vertices: v.clone() })
        }
        (Some(_), _, Some(_)) => {
            Err(GeomError::InvalidInput("give either a preset or explicit vertices, not both".into()))
        }
        (None, None, Some(_)) => Err(GeomError::InvalidInput("explicit vertices need --model".into())),
        (None, _, None) => {
            Err(GeomError::InvalidInput("no simplex given: use --preset or --model with vertices".into()))
        }
    }
}

/// Vertices from a file: a JSON array of arrays, or one vertex per line with
/// whitespace- or comma-separated coordinates (`#` starts a comment).
pub fn read_vertices(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)
        .map_err(|e| GeomError::InvalidInput(format!("cannot read vertices {}: {e}", path.display())))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed)
            .map_err(|e| GeomError::InvalidInput(format!("vertices {}: {e}", path.display())));
    }
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(str::parse).collect();
        out.push(row.map_err(|_| {
            GeomError::InvalidInput(format!("vertices {} line {}: bad number", path.display(), no + 1))
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let text = r#"
            model = "hyperbolic:4:-1"
            presets = ["regular-h4-side=1"]
            seed = 9
            [budgets]
            mc_samples = 1000
            [[chain]]
            id = "a"
            coefficient = "-1/2"
            preset = "flat-4simplex"
        "#;
        let c: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.budgets.mc_samples, 1000);
        assert_eq!(c.budgets.simplex_order, None);
        assert_eq!(c.chain_entries().unwrap()[0].1, parse_coeff("-1/2").unwrap());
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn vertex_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        fs::write(&p, "# comment\n0 0\n1, 0\n\n0.5 1 # apex\n").unwrap();
        assert_eq!(read_vertices(&p).unwrap(), vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 1.0]]);
        fs::write(&p, "[[0,0],[1,0]]").unwrap();
        assert_eq!(read_vertices(&p).unwrap().len(), 2);
        fs::write(&p, "0 x\n").unwrap();
        assert!(read_vertices(&p).is_err());
    }
}
