use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use bonnet_core::{BonnetReport, GridScalar, IdentityResiduals};

/// Pretty JSON with every float written as `{:.16e}` (17 significant digits).
/// Non-finite values are emitted as `null` by the serializer itself.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        // drop the sign of negative zero
        let v = if v == 0.0 { 0.0 } else { v };
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FixedFloat(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub meta: Meta,
    pub surface: SurfaceInfo,
    pub invariants: BTreeMap<String, Stats>,
    #[serde(rename = "classificationInput")]
    pub classification_input: ClassificationInput,
    pub residuals: Residuals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bonnet: Option<BonnetSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deformations: Option<Vec<DeformationEntry>>,
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub resolution: [usize; 2],
    pub spacing: [f64; 2],
    pub ambient: String,
    pub tolerances: TolerancesUsed,
}

#[derive(Debug, Serialize)]
pub struct TolerancesUsed {
    pub umbilic: f64,
    pub phi: f64,
}

#[derive(Debug, Serialize)]
pub struct SurfaceInfo {
    pub catalog: Option<&'static str>,
    pub immersion: String,
    pub parameters: BTreeMap<String, f64>,
    pub domain: DomainInfo,
}

#[derive(Debug, Serialize)]
pub struct DomainInfo {
    pub s: [f64; 2],
    pub t: [f64; 2],
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    pub fn of(f: &GridScalar) -> Self {
        let v = &f.values;
        let (min, max) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(*x), hi.max(*x))
            });
        Stats {
            min,
            max,
            mean: v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ClassificationInput {
    #[serde(rename = "dHnorm")]
    pub dh_norm: f64,
    #[serde(rename = "betaNorm")]
    pub beta_norm: f64,
    #[serde(rename = "betaExactZero")]
    pub beta_exact_zero: bool,
    #[serde(rename = "minH2minusK")]
    pub min_h2_minus_k: f64,
    #[serde(rename = "defaultTol")]
    pub default_tol: f64,
}

#[derive(Debug, Serialize)]
pub struct Residuals {
    pub margin: usize,
    pub structure: f64,
    pub gauss: f64,
    pub codazzi: f64,
    pub mean_differential: f64,
    pub mean_gradient: f64,
    pub gap_log: f64,
    pub scale: f64,
}

impl From<&IdentityResiduals> for Residuals {
    fn from(r: &IdentityResiduals) -> Self {
        Residuals {
            margin: r.margin,
            structure: r.structure.max,
            gauss: r.gauss.max,
            codazzi: r.codazzi.max,
            mean_differential: r.mean_differential.max,
            mean_gradient: r.mean_gradient.max,
            gap_log: r.gap_log.max,
            scale: r.scale(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BonnetSection {
    pub classification: String,
    #[serde(rename = "normR1")]
    pub norm_r1: f64,
    #[serde(rename = "normR2")]
    pub norm_r2: f64,
    #[serde(rename = "dHnorm")]
    pub dh_norm: f64,
    #[serde(rename = "betaNorm")]
    pub beta_norm: f64,
    pub tol: f64,
}

impl From<&BonnetReport> for BonnetSection {
    fn from(r: &BonnetReport) -> Self {
        BonnetSection {
            classification: r.classification.to_string(),
            norm_r1: r.norm_r1,
            norm_r2: r.norm_r2,
            dh_norm: r.dh_norm,
            beta_norm: r.beta_norm,
            tol: r.tol,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DeformationEntry {
    pub t0: Option<f64>,
    pub phi0: f64,
    #[serde(rename = "pathResidual")]
    pub path_residual: f64,
    #[serde(rename = "validFraction")]
    pub valid_fraction: f64,
    #[serde(rename = "metricErr")]
    pub metric_err: f64,
    #[serde(rename = "curvErr")]
    pub curv_err: f64,
    #[serde(rename = "loopResidual")]
    pub loop_residual: f64,
    pub files: Vec<String>,
}
