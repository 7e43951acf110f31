//! TOML run configuration.
//!
//! ```toml
//! [domain]
//! curve = "cranioid"          # or "circle", with optional radius
//!
//! [problem]
//! eps1 = 1e-11
//! eps2 = 1e-3
//! kappa = 1.0
//! p = 4
//! forcing = "10x"             # "10x" | "inverse-distance" | "manufactured-disk"
//! coefficient = "1"           # a constant or "2+x"
//! # quad_order = 7            # default p + 3
//!
//! [mesh]
//! m = 2
//! strip_fraction = 0.5
//!
//! [sweep]
//! p = [2, 3, 4, 5, 6, 7, 8]
//! eps1 = [1e-11]
//! eps2 = [1e-3, 1e-4, 1e-5]
//! mode = "reference"          # or "exact"
//!
//! [output]
//! csv = "example1.csv"
//! svg = "example1.svg"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::ComparisonKind;
use crate::assembly::{Coefficient, Forcing, ProblemConfig};
use crate::error::{Error, Result};
use crate::geometry::CurveSpec;
use crate::mesh::GridParams;

/// Degrees swept when `[sweep] p` is not given.
pub const DEFAULT_SWEEP_DEGREES: std::ops::RangeInclusive<usize> = 2..=10;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    domain: DomainSection,
    problem: ProblemSection,
    #[serde(default)]
    mesh: MeshSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    output: OutputPaths,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    curve: String,
    radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSection {
    eps1: f64,
    eps2: f64,
    #[serde(default = "one")]
    kappa: f64,
    #[serde(default = "default_p")]
    p: usize,
    forcing: String,
    #[serde(default = "default_coefficient")]
    coefficient: String,
    quad_order: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn default_p() -> usize {
    4
}

fn default_coefficient() -> String {
    "1".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshSection {
    #[serde(default = "default_m")]
    m: usize,
    #[serde(default = "default_strip")]
    strip_fraction: f64,
}

fn default_m() -> usize {
    GridParams::default().m
}

fn default_strip() -> f64 {
    GridParams::default().strip_fraction
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { m: default_m(), strip_fraction: default_strip() }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    p: Option<Vec<usize>>,
    eps1: Option<Vec<f64>>,
    eps2: Option<Vec<f64>>,
    mode: Option<String>,
}

/// Output files named in `[output]`; all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub solution: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

/// A parsed and validated configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub sweep: super::SweepSpec,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text)?;
        let curve = match (file.domain.curve.as_str(), file.domain.radius) {
            ("circle", r) => CurveSpec::Circle { radius: r.unwrap_or(1.0) },
            ("cranioid", None) => CurveSpec::Cranioid,
            ("cranioid", Some(_)) => {
                return Err(Error::InvalidParameter("the cranioid takes no radius".into()));
            }
            (other, _) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown curve {other:?} (expected \"circle\" or \"cranioid\")"
                )))
            }
        };
        let pr = &file.problem;
        let problem = ProblemConfig {
            curve,
            grid: GridParams { m: file.mesh.m, strip_fraction: file.mesh.strip_fraction },
            eps1: pr.eps1,
            eps2: pr.eps2,
            kappa: pr.kappa,
            p: pr.p,
            quad_order: pr.quad_order,
            coefficient: Coefficient::parse(&pr.coefficient)?,
            forcing: Forcing::parse(&pr.forcing)?,
        };
        let sw = file.sweep;
        let sweep = super::SweepSpec {
            p: sw.p.unwrap_or_else(|| DEFAULT_SWEEP_DEGREES.collect()),
            eps1: sw.eps1.unwrap_or_else(|| vec![problem.eps1]),
            eps2: sw.eps2.unwrap_or_else(|| vec![problem.eps2]),
            mode: sw.mode.as_deref().unwrap_or("reference").parse()?,
            base: problem.clone(),
            output: file.output,
        };
        problem.validate()?;
        sweep.validate()?;
        Ok(Self { problem, sweep })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn output(&self) -> &OutputPaths {
        &self.sweep.output
    }
}

/// Serializable form of a [`ProblemConfig`] with named data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub curve: CurveSpec,
    pub grid: GridParams,
    pub eps1: f64,
    pub eps2: f64,
    pub kappa: f64,
    pub p: usize,
    pub quad_order: Option<usize>,
    pub coefficient: String,
    pub forcing: String,
}

impl ProblemRecord {
    pub fn from_config(c: &ProblemConfig) -> Result<Self> {
        if matches!(c.forcing, Forcing::Custom(_)) || matches!(c.coefficient, Coefficient::Custom(_)) {
            return Err(Error::InvalidParameter("custom data functions cannot be stored".into()));
        }
        Ok(Self {
            curve: c.curve,
            grid: c.grid,
            eps1: c.eps1,
            eps2: c.eps2,
            kappa: c.kappa,
            p: c.p,
            quad_order: c.quad_order,
            coefficient: c.coefficient.to_string(),
            forcing: c.forcing.name().to_string(),
        })
    }

    pub fn to_config(&self) -> Result<ProblemConfig> {
        Ok(ProblemConfig {
            curve: self.curve,
            grid: self.grid,
            eps1: self.eps1,
            eps2: self.eps2,
            kappa: self.kappa,
            p: self.p,
            quad_order: self.quad_order,
            coefficient: Coefficient::parse(&self.coefficient)?,
            forcing: Forcing::parse(&self.forcing)?,
        })
    }
}

impl ComparisonKind {
    /// Checks that `mode` can be used with `base`.
    pub fn check_usable(self, base: &ProblemConfig) -> Result<()> {
        if self == ComparisonKind::Exact {
            let unit_disk = base.curve == (CurveSpec::Circle { radius: 1.0 });
            let unit_c = matches!(base.coefficient, Coefficient::Constant(c) if c == 1.0);
            if !(unit_disk && unit_c && matches!(base.forcing, Forcing::ManufacturedDisk)) {
                return Err(Error::InvalidParameter(
                    "exact mode needs the manufactured forcing on the unit disk with c = 1".into(),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[domain]
curve = "cranioid"

[problem]
eps1 = 1e-11
eps2 = 1e-3
forcing = "10x"

[sweep]
p = [2, 3, 4]
eps2 = [1e-3, 1e-4, 1e-5]

[output]
csv = "out.csv"
"#;

    #[test]
    fn example_with_defaults() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(cfg.problem.curve, CurveSpec::Cranioid);
        assert_eq!(cfg.problem.p, 4);
        assert_eq!(cfg.problem.kappa, 1.0);
        assert_eq!(cfg.problem.grid, GridParams::default());
        assert_eq!(cfg.problem.quad_order(), 7);
        assert_eq!(cfg.sweep.eps1, vec![1e-11]);
        assert_eq!(cfg.sweep.n_rows(), 9);
        assert_eq!(cfg.sweep.mode, ComparisonKind::Reference);
        assert_eq!(cfg.output().csv.as_deref(), Some(Path::new("out.csv")));
    }

    #[test]
    fn default_degree_range() {
        let text = EXAMPLE.replace("p = [2, 3, 4]\n", "");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.sweep.p, DEFAULT_SWEEP_DEGREES.collect::<Vec<_>>());
    }

    #[test]
    fn config_errors_exit_with_one() {
        let cases = [
            EXAMPLE.replace("curve = \"cranioid\"", "curve = \"ellipse\""),
            EXAMPLE.replace("forcing = \"10x\"", "forcing = \"sin\""),
            EXAMPLE.replace("eps1 = 1e-11", "eps1 = 0.0"),
            EXAMPLE.replace("eps1 = 1e-11", "eps1 = 1e-11\nunknown = 3"),
            EXAMPLE.replace("[sweep]", "[sweep]\nmode = \"exact\""),
            "[domain\n".to_string(),
        ];
        for text in &cases {
            assert_eq!(RunConfig::from_toml_str(text).unwrap_err().exit_code(), 1, "{text}");
        }
        assert!(matches!(RunConfig::from_toml_str(&cases[5]), Err(Error::Parse(_))));
    }

    #[test]
    fn problem_record_round_trip() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        let rec = ProblemRecord::from_config(&cfg.problem).unwrap();
        let back = rec.to_config().unwrap();
        assert_eq!(ProblemRecord::from_config(&back).unwrap(), rec);
    }
}
