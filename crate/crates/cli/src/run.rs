use std::collections::BTreeMap;

use bonnet_core::bonnet::{
    bonnet_check, default_tolerance, phi_field, solve_t, PfaffianSystem, PhiField,
};
use bonnet_core::deformation::{deform_bundle, reconstruct, DeformError};
use bonnet_core::{
    build_grid, identity_suite, parse_immersion, AmbientModel, FrameOptions, Grid, GridScalar,
    InvariantBundle, SurfacePatch,
};

use crate::config::{AmbientSpec, DeformationRequest, Format, Resolved};
use crate::error::CliError;
use crate::output::{csv_field, dat_field, obj_mesh, Outputs};
use crate::report::{
    to_json_bytes, BonnetSection, ClassificationInput, DeformationEntry, DomainInfo, Meta, Report,
    Residuals, Stats, SurfaceInfo, TolerancesUsed,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Check,
    Deform,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Check => "check",
            Command::Deform => "deform",
        }
    }
}

/// What a run produced, before anything is written.
#[derive(Debug)]
pub struct RunResult {
    pub report: Report,
    pub outputs: Outputs,
}

fn ambient_model(spec: AmbientSpec) -> AmbientModel {
    match spec {
        AmbientSpec::Minkowski => AmbientModel::MinkowskiFlat,
        AmbientSpec::ConstantCurvature { curvature } => AmbientModel::ConstantCurvature(curvature),
    }
}

fn ambient_label(spec: AmbientSpec) -> String {
    match spec {
        AmbientSpec::Minkowski => "minkowski".into(),
        AmbientSpec::ConstantCurvature { curvature } => format!("constant-curvature({curvature})"),
    }
}

fn build_bundle(cfg: &Resolved) -> Result<InvariantBundle, CliError> {
    let config = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
    let imm = parse_immersion(&cfg.immersion).map_err(|e| config(&e))?;
    let d = cfg.domain;
    let [ns, nt] = cfg.resolution;
    let grid = Grid::new((d.s[0], d.s[1]), (d.t[0], d.t[1]), ns, nt).map_err(|e| config(&e))?;
    let patch = SurfacePatch::new(imm, cfg.parameters.clone(), grid).map_err(|e| config(&e))?;
    let jets = build_grid(&patch).map_err(|e| config(&e))?;
    let opts = FrameOptions {
        umbilic_rel: cfg.tolerances.umbilic,
        ..Default::default()
    };
    InvariantBundle::compute(&jets, &ambient_model(cfg.ambient), &opts)
        .map_err(|e| CliError::Geometry(e.to_string()))
}

fn field_table(b: &InvariantBundle) -> Vec<(&'static str, GridScalar)> {
    let ids = identity_suite(b);
    let mut out = vec![
        ("a", b.frame.a.clone()),
        ("c", b.frame.c.clone()),
        ("mean_H", b.mean.clone()),
        ("gauss_K", b.gauss.clone()),
        ("half_gap_J", b.half_gap.clone()),
        ("h", b.connection.h.clone()),
        ("k", b.connection.k.clone()),
        ("p", b.codazzi.p.clone()),
        ("q", b.codazzi.q.clone()),
        ("u", b.codazzi.u.clone()),
        ("v", b.codazzi.v.clone()),
        ("lambda1", b.ambient.lambda1.clone()),
        ("lambda2", b.ambient.lambda2.clone()),
    ];
    let names = [
        "residual_structure",
        "residual_gauss",
        "residual_codazzi",
        "residual_mean_differential",
        "residual_mean_gradient",
        "residual_gap_log",
    ];
    for (name, (_, r)) in names.into_iter().zip(ids.entries()) {
        out.push((name, r.field.clone()));
    }
    out
}

fn emit_field(
    outputs: &mut Outputs,
    formats: &[Format],
    name: &str,
    f: &GridScalar,
) -> Result<(), CliError> {
    if formats.contains(&Format::Csv) {
        outputs.add(format!("{name}.csv"), csv_field(f)?);
    }
    if formats.contains(&Format::Dat) {
        outputs.add(format!("{name}.dat"), dat_field(f));
    }
    Ok(())
}

fn deform_error(label: &str, e: DeformError) -> CliError {
    match e {
        DeformError::MaskMismatch { .. } | DeformError::CurvedAmbient => {
            CliError::Deformation(format!("{label}: {e}"))
        }
        DeformError::Geometry(_) => CliError::Geometry(format!("{label}: {e}")),
        DeformError::Seed(_) | DeformError::Transport { .. } | DeformError::Form(_) => {
            CliError::Internal(format!("{label}: {e}"))
        }
    }
}

pub fn execute(cmd: Command, cfg: &Resolved) -> Result<RunResult, CliError> {
    let bundle = build_bundle(cfg)?;
    let grid = bundle.grid();
    let formats = &cfg.output.formats;
    let ids = identity_suite(&bundle);
    let sys = PfaffianSystem::from_bundle(&bundle);
    let default_tol = default_tolerance(&ids);
    let cmc = sys.cmc.expect("bundle-derived system carries surface data");

    let mut outputs = Outputs::default();
    let mut invariants = BTreeMap::new();
    for (name, f) in field_table(&bundle) {
        if !name.starts_with("residual_") {
            invariants.insert(name.to_string(), Stats::of(&f));
        }
        emit_field(&mut outputs, formats, name, &f)?;
    }

    let mut report = Report {
        meta: Meta {
            tool: "bonnetlab",
            version: env!("CARGO_PKG_VERSION"),
            command: cmd.name(),
            resolution: cfg.resolution,
            spacing: [grid.hs(), grid.ht()],
            ambient: ambient_label(cfg.ambient),
            tolerances: TolerancesUsed {
                umbilic: cfg.tolerances.umbilic,
                phi: cfg.tolerances.phi,
            },
        },
        surface: SurfaceInfo {
            catalog: cfg.catalog,
            immersion: cfg.immersion.clone(),
            parameters: cfg.parameters.clone(),
            domain: DomainInfo {
                s: cfg.domain.s,
                t: cfg.domain.t,
            },
        },
        invariants,
        classification_input: ClassificationInput {
            dh_norm: cmc.dh_norm,
            beta_norm: cmc.beta_norm,
            beta_exact_zero: cmc.beta_exact_zero,
            min_h2_minus_k: cmc.min_h2_minus_k,
            default_tol,
        },
        residuals: Residuals::from(&ids),
        bonnet: None,
        deformations: None,
    };

    if cmd != Command::Analyze {
        let tol = cfg.tolerances.tol.unwrap_or(default_tol);
        report.bonnet = Some(BonnetSection::from(&bonnet_check(&sys, tol)));
    }

    if cmd == Command::Deform {
        let (ic, jc) = grid.center();
        let center = grid.idx(ic, jc);
        let mut entries = Vec::new();
        for (k, req) in cfg.deformations.iter().enumerate() {
            let stem = format!("deform_{k:02}");
            let mut files = Vec::new();
            let (t0, field, path_residual) = match *req {
                DeformationRequest::T0(t0) => {
                    let label = format!("T0 = {t0}");
                    let sol = solve_t(&sys, t0);
                    let field = phi_field(&sol.t, cfg.tolerances.phi)
                        .map_err(|e| CliError::Deformation(format!("{label}: {e}")))?;
                    if formats.contains(&Format::Csv) {
                        outputs.add(format!("{stem}_T.csv"), csv_field(&sol.t)?);
                        files.push(format!("{stem}_T.csv"));
                    }
                    (Some(t0), field, sol.path_residual)
                }
                DeformationRequest::Phi0(phi0) => (None, PhiField::constant(grid, phi0), 0.0),
            };
            let label = match t0 {
                Some(t0) => format!("T0 = {t0}"),
                None => format!("phi0 = {}", field.phi.values[center]),
            };
            let valid_fraction = field.valid_count() as f64 / grid.len() as f64;
            let deformed = deform_bundle(&bundle, &field).map_err(|e| match e {
                DeformError::MaskMismatch { .. } => CliError::Deformation(format!(
                    "{label}: |T| <= 1 + eps_phi at {} of {} nodes, a deformation needs all of them ({e})",
                    grid.len() - field.valid_count(),
                    grid.len()
                )),
                other => deform_error(&label, other),
            })?;
            let rec = reconstruct(&deformed, deformed.center_seed())
                .map_err(|e| deform_error(&label, e))?;
            if formats.contains(&Format::Csv) {
                outputs.add(format!("{stem}_phi.csv"), csv_field(&field.phi)?);
                files.push(format!("{stem}_phi.csv"));
            }
            if formats.contains(&Format::Obj) {
                outputs.add(format!("{stem}.obj"), obj_mesh(grid, &rec.points));
                files.push(format!("{stem}.obj"));
            }
            entries.push(DeformationEntry {
                t0,
                phi0: field.phi.values[center],
                path_residual,
                valid_fraction,
                metric_err: rec.metric_err,
                curv_err: rec.curv_err,
                loop_residual: rec.loop_residual,
                files,
            });
        }
        report.deformations = Some(entries);
    }

    let json = to_json_bytes(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    outputs.add("report.json", json);
    Ok(RunResult { report, outputs })
}
