use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog name or an immersion such as `"(t, r*cos(s), r*sin(s))"`.
    pub surface: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
    #[serde(default)]
    pub ambient: AmbientSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub deformations: Vec<DeformationRequest>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_resolution() -> [usize; 2] {
    [65, 65]
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub s: [f64; 2],
    pub t: [f64; 2],
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AmbientSpec {
    #[default]
    Minkowski,
    ConstantCurvature {
        curvature: f64,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Classification tolerance; derived from the identity residuals if absent.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default = "default_eps")]
    pub umbilic: f64,
    #[serde(default = "default_eps")]
    pub phi: f64,
}

fn default_eps() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol: None,
            umbilic: default_eps(),
            phi: default_eps(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DeformationRequest {
    T0(f64),
    Phi0(f64),
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Dat,
    Obj,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Dat, Format::Obj]
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: all_formats(),
        }
    }
}

/// A named surface with default parameters and domain.
pub struct CatalogEntry {
    pub name: &'static str,
    pub immersion: &'static str,
    pub parameters: &'static [(&'static str, f64)],
    pub domain: Domain,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "cylinder",
        immersion: "(t, r*cos(s), r*sin(s))",
        parameters: &[("r", 1.0)],
        domain: Domain {
            s: [0.0, 2.0 * PI],
            t: [-1.0, 1.0],
        },
    },
    CatalogEntry {
        name: "plane",
        immersion: "(t, s, 0)",
        parameters: &[],
        domain: Domain {
            s: [-1.0, 1.0],
            t: [-1.0, 1.0],
        },
    },
    CatalogEntry {
        name: "graph-quadratic",
        immersion: "(t, s, A*s^2 + B*s*t + C*t^2)",
        parameters: &[("A", 0.15), ("B", 0.05), ("C", 0.1)],
        domain: Domain {
            s: [-1.0, 1.0],
            t: [-1.0, 1.0],
        },
    },
];

pub fn catalog_entry(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub resolution: Option<[usize; 2]>,
    pub tol: Option<f64>,
    pub t0: Option<Vec<f64>>,
}

/// A validated configuration with catalog defaults filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub catalog: Option<&'static str>,
    pub immersion: String,
    pub parameters: BTreeMap<String, f64>,
    pub domain: Domain,
    pub resolution: [usize; 2],
    pub ambient: AmbientSpec,
    pub tolerances: Tolerances,
    pub deformations: Vec<DeformationRequest>,
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn resolve(mut self, ov: &Overrides) -> Result<Resolved, CliError> {
        if let Some(dir) = &ov.out {
            self.output.dir = dir.clone();
        }
        if let Some(r) = ov.resolution {
            self.resolution = r;
        }
        if let Some(tol) = ov.tol {
            self.tolerances.tol = Some(tol);
        }
        if let Some(t0) = &ov.t0 {
            self.deformations = t0.iter().map(|v| DeformationRequest::T0(*v)).collect();
        }

        let entry = catalog_entry(self.surface.trim());
        let (immersion, mut parameters, domain) = match entry {
            Some(e) => (
                e.immersion.to_string(),
                e.parameters
                    .iter()
                    .map(|(k, v)| (k.to_string(), *v))
                    .collect(),
                self.domain.unwrap_or(e.domain),
            ),
            None => {
                let domain = self.domain.ok_or_else(|| {
                    CliError::Config(format!(
                        "surface {:?} is not a catalog name, so a domain is required",
                        self.surface
                    ))
                })?;
                (self.surface.clone(), BTreeMap::new(), domain)
            }
        };
        parameters.extend(self.parameters);

        let [ns, nt] = self.resolution;
        if ns.is_multiple_of(2) || nt.is_multiple_of(2) {
            return Err(CliError::Config(format!(
                "resolution {ns}x{nt} must be odd in both axes"
            )));
        }
        for (name, v) in parameters.iter() {
            if !v.is_finite() {
                return Err(CliError::Config(format!("parameter {name} is not finite")));
            }
        }
        let tol = &self.tolerances;
        if tol.tol.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return Err(CliError::Config(
                "tol must be a finite non-negative number".into(),
            ));
        }
        if !(tol.umbilic > 0.0 && tol.phi > 0.0) {
            return Err(CliError::Config(
                "umbilic and phi tolerances must be positive".into(),
            ));
        }
        if let AmbientSpec::ConstantCurvature { curvature } = self.ambient {
            if !curvature.is_finite() {
                return Err(CliError::Config("ambient curvature is not finite".into()));
            }
        }
        Ok(Resolved {
            catalog: entry.map(|e| e.name),
            immersion,
            parameters,
            domain,
            resolution: self.resolution,
            ambient: self.ambient,
            tolerances: self.tolerances,
            deformations: self.deformations,
            output: self.output,
        })
    }
}

pub fn parse_resolution(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok([p(a)?, p(b)?])
}
