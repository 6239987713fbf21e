//! Experiment configuration: a flat TOML file (or mirroring command-line
//! flags) with per-experiment sections. Unknown keys are rejected.

use freebnd::domains::{self, Domain};
use freebnd::error::{Error, Result};
use freebnd::grid::GridSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub box_min: Vec<f64>,
    pub box_max: Vec<f64>,
    pub n_cells: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolesConfig {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RadiiConfig {
    #[serde(default)]
    pub list: Option<Vec<f64>>,
    #[serde(default)]
    pub r_min: Option<f64>,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default = "default_true")]
    pub log: bool,
}

fn default_true() -> bool {
    true
}

impl RadiiConfig {
    /// Decreasing radius list.
    pub fn resolve(&self) -> Result<Vec<f64>> {
        if let Some(list) = &self.list {
            let mut v = list.clone();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if v.is_empty() || v.iter().any(|r| *r <= 0.0) {
                return Err(Error::validation("radii list must be positive"));
            }
            return Ok(v);
        }
        let (r_min, r_max, count) = match (self.r_min, self.r_max, self.count) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(Error::validation(
                    "radii need either `list` or all of r_min/r_max/count",
                ))
            }
        };
        if !(r_min > 0.0 && r_max > r_min && count >= 2) {
            return Err(Error::validation("invalid radii range"));
        }
        let mut v = Vec::with_capacity(count);
        for i in 0..count {
            let t = i as f64 / (count - 1) as f64;
            let r = if self.log {
                r_max * (r_min / r_max).powf(t)
            } else {
                r_max - (r_max - r_min) * t
            };
            v.push(r);
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlatnessConfig {
    pub r0: f64,
    pub rbar: f64,
    pub n_steps: usize,
    #[serde(default = "default_eps_threshold")]
    pub eps_threshold: f64,
}

fn default_eps_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SyscheckConfig {
    /// t1,t2,s1,s2,m1,m2,h1,h2,p1,p2,h0
    pub weights: Vec<i64>,
    #[serde(default = "default_draws")]
    pub draws: usize,
}

fn default_draws() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HarnackConfig {
    pub eps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub poles: Option<PolesConfig>,
    #[serde(default)]
    pub radii: Option<RadiiConfig>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub n_boundary_samples: Option<usize>,
    #[serde(default)]
    pub flatness: Option<FlatnessConfig>,
    #[serde(default)]
    pub syscheck: Option<SyscheckConfig>,
    #[serde(default)]
    pub harnack: Option<HarnackConfig>,
}

fn default_output_dir() -> String {
    "out".to_string()
}

pub const EXPERIMENTS: [&str; 12] = [
    "solve",
    "acf",
    "frequency",
    "monneau",
    "density",
    "beta",
    "tangent",
    "flatness",
    "harnack",
    "transmission",
    "hodograph",
    "syscheck",
];

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| {
            // toml errors carry line/column spans
            Error::validation(format!("{}: {e}", path.display()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::validation(format!(
                "unknown experiment '{}' (expected one of {:?})",
                self.experiment, EXPERIMENTS
            )));
        }
        if let Some(g) = &self.grid {
            // constructing the spec runs the invariant checks
            let _ = GridSpec::new(&g.box_min, &g.box_max, &g.n_cells)?;
        }
        if let Some(r) = &self.radii {
            let _ = r.resolve()?;
        }
        Ok(())
    }

    /// The resolved grid, falling back to per-domain defaults.
    pub fn grid_spec(&self) -> Result<GridSpec> {
        if let Some(g) = &self.grid {
            return GridSpec::new(&g.box_min, &g.box_max, &g.n_cells);
        }
        let name = self.domain.as_deref().unwrap_or("halfplane");
        default_grid(name)
    }

    pub fn poles(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if let Some(p) = &self.poles {
            return Ok((p.plus.clone(), p.minus.clone()));
        }
        let name = self.domain.as_deref().unwrap_or("halfplane");
        default_poles(name)
    }

    pub fn domain(&self) -> Result<Domain> {
        let name = self.domain.as_deref().unwrap_or("halfplane");
        load_domain(name)
    }
}

pub fn default_grid(domain: &str) -> Result<GridSpec> {
    if domain.starts_with("graph") {
        return GridSpec::square(&[-0.8, -0.8], &[0.8, 0.8], 512);
    }
    match domain {
        "halfplane" => GridSpec::square(&[-1.0, -1.0], &[1.0, 1.0], 512),
        "disk" => GridSpec::square(&[-1.6, -1.6], &[1.6, 1.6], 512),
        "lewy3" => GridSpec::square(&[-1.0; 3], &[1.0; 3], 96),
        other => Err(Error::validation(format!(
            "no default grid for domain '{other}'"
        ))),
    }
}

pub fn default_poles(domain: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    if domain.starts_with("graph") {
        return Ok((vec![0.0, 0.5], vec![0.0, -0.5]));
    }
    match domain {
        "halfplane" => Ok((vec![0.0, 0.5], vec![0.0, -0.5])),
        "disk" => Ok((vec![0.0, 0.0], vec![0.0, -1.35])),
        other => Err(Error::validation(format!(
            "no default poles for domain '{other}'"
        ))),
    }
}

/// Description of a graph boundary loaded from a file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum GraphFile {
    /// f(x') = amp |x'|^exponent, C^{1, exponent - 1} for exponent in (1, 2)
    Pow { amp: f64, exponent: f64 },
    /// sampled graph with cubic Hermite interpolation
    Samples {
        alpha: f64,
        seminorm: f64,
        x: Vec<f64>,
        f: Vec<f64>,
    },
}

/// Load a zoo domain by CLI name; "graph:<file>" reads a graph description.
pub fn load_domain(name: &str) -> Result<Domain> {
    if let Some(path) = name.strip_prefix("graph:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read graph file {path}: {e}")))?;
        let gf: GraphFile =
            toml::from_str(&text).map_err(|e| Error::validation(format!("{path}: {e}")))?;
        return match gf {
            GraphFile::Pow { amp, exponent } => {
                if !(1.0 < exponent && exponent < 2.0) {
                    return Err(Error::validation(
                        "pow graph exponent must lie in (1, 2) for C^{1,alpha} data",
                    ));
                }
                let mut d = domains::make_graph_domain(
                    move |t: f64| amp * t.abs().powf(exponent),
                    exponent - 1.0,
                    amp * exponent,
                )?;
                d.label = format!("graph-pow(amp={amp},exp={exponent})");
                Ok(d)
            }
            GraphFile::Samples {
                alpha,
                seminorm,
                x,
                f,
            } => {
                if x.len() != f.len() || x.len() < 4 {
                    return Err(Error::validation(
                        "samples graph needs >= 4 matching x/f values",
                    ));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::validation("samples x must be increasing"));
                }
                let interp = HermiteGraph::new(x, f);
                let mut d =
                    domains::make_graph_domain(move |t| interp.eval(t), alpha, seminorm)?;
                d.label = "graph-samples".to_string();
                Ok(d)
            }
        };
    }
    domains::by_name(name)
}

/// Cubic Hermite interpolation with centered-difference slopes, clamped to
/// linear extension outside the sample window.
#[derive(Debug, Clone)]
struct HermiteGraph {
    x: Vec<f64>,
    f: Vec<f64>,
    slope: Vec<f64>,
}

impl HermiteGraph {
    fn new(x: Vec<f64>, f: Vec<f64>) -> HermiteGraph {
        let n = x.len();
        let mut slope = vec![0.0; n];
        for i in 0..n {
            slope[i] = if i == 0 {
                (f[1] - f[0]) / (x[1] - x[0])
            } else if i == n - 1 {
                (f[n - 1] - f[n - 2]) / (x[n - 1] - x[n - 2])
            } else {
                (f[i + 1] - f[i - 1]) / (x[i + 1] - x[i - 1])
            };
        }
        HermiteGraph { x, f, slope }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.f[0] + self.slope[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.f[n - 1] + self.slope[n - 1] * (t - self.x[n - 1]);
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.x[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let hseg = self.x[hi] - self.x[lo];
        let u = (t - self.x[lo]) / hseg;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.f[lo]
            + h10 * hseg * self.slope[lo]
            + h01 * self.f[hi]
            + h11 * hseg * self.slope[hi]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_resolution() {
        let r = RadiiConfig {
            list: None,
            r_min: Some(0.1),
            r_max: Some(0.4),
            count: Some(3),
            log: true,
        };
        let v = r.resolve().unwrap();
        assert_eq!(v.len(), 3);
        assert!(v[0] > v[1] && v[1] > v[2]);
        assert!((v[0] - 0.4).abs() < 1e-12 && (v[2] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "experiment = \"frequency\"\nnonsense = 3\n";
        let err = toml::from_str::<ExperimentConfig>(text);
        assert!(err.is_err());
    }

    #[test]
    fn hermite_reproduces_smooth_samples() {
        let x: Vec<f64> = (0..40).map(|i| -2.0 + 4.0 * i as f64 / 39.0).collect();
        let f: Vec<f64> = x.iter().map(|t| 0.1 * t.sin()).collect();
        let g = HermiteGraph::new(x, f);
        for i in 0..100 {
            let t = -1.9 + 3.8 * i as f64 / 99.0;
            assert!((g.eval(t) - 0.1 * t.sin()).abs() < 1e-4);
        }
    }
}
