use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bonnet_core::{Grid, GridScalar, LVec3};

use crate::error::CliError;

/// Files produced by a run, written together at the end.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
        self.files
            .iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                std::fs::write(&path, bytes).map_err(|e| {
                    CliError::Internal(format!("cannot write {}: {e}", path.display()))
                })?;
                Ok(path)
            })
            .collect()
    }
}

/// `i,j,s,t,value`, row-major with `i` outer.
pub fn csv_field(field: &GridScalar) -> Result<Vec<u8>, CliError> {
    let g = field.grid;
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(["i", "j", "s", "t", "value"])
        .map_err(internal)?;
    for i in 0..g.ns {
        for j in 0..g.nt {
            w.write_record([
                i.to_string(),
                j.to_string(),
                g.s(i).to_string(),
                g.t(j).to_string(),
                field.at(i, j).to_string(),
            ])
            .map_err(internal)?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Gnuplot grid data: one `s t value` block per `i`, blank-line separated,
/// ready for `splot 'f.dat' with pm3d`.
pub fn dat_field(field: &GridScalar) -> Vec<u8> {
    let g = field.grid;
    let mut out = String::new();
    for i in 0..g.ns {
        if i > 0 {
            out.push('\n');
        }
        for j in 0..g.nt {
            let _ = writeln!(out, "{} {} {}", g.s(i), g.t(j), field.at(i, j));
        }
    }
    out.into_bytes()
}

/// Wavefront OBJ with one vertex per node and quad faces.
pub fn obj_mesh(grid: Grid, points: &[LVec3]) -> Vec<u8> {
    let mut out = String::new();
    for p in points {
        let _ = writeln!(out, "v {} {} {}", p.x0, p.x1, p.x2);
    }
    for i in 0..grid.ns - 1 {
        for j in 0..grid.nt - 1 {
            let v = |i: usize, j: usize| grid.idx(i, j) + 1;
            let _ = writeln!(
                out,
                "f {} {} {} {}",
                v(i, j),
                v(i + 1, j),
                v(i + 1, j + 1),
                v(i, j + 1)
            );
        }
    }
    out.into_bytes()
}
