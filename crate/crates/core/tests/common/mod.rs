#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use bonnet_core::expr::parse_immersion;
use bonnet_core::frame::{AmbientModel, FrameOptions, InvariantBundle, NormalOrientation};
use bonnet_core::grid::Grid;
use bonnet_core::jets::{build_grid, JetGrid, SurfacePatch};

pub const CYLINDER: &str = "(t, r*cos(s), r*sin(s))";
pub const GRAPH_QUADRATIC: &str = "(t, s, A*s^2 + B*s*t + C*t^2)";

pub fn jets(src: &str, params: &[(&str, f64)], s: (f64, f64), t: (f64, f64), n: usize) -> JetGrid {
    let params: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let grid = Grid::new(s, t, n, n).unwrap();
    let patch = SurfacePatch::new(parse_immersion(src).unwrap(), params, grid).unwrap();
    build_grid(&patch).unwrap()
}

pub fn cylinder_jets(r: f64, n: usize) -> JetGrid {
    jets(CYLINDER, &[("r", r)], (0.0, 2.0 * PI), (-1.0, 1.0), n)
}

pub fn quadratic_jets(n: usize) -> JetGrid {
    jets(
        GRAPH_QUADRATIC,
        &[("A", 0.15), ("B", 0.05), ("C", 0.1)],
        (-1.0, 1.0),
        (-1.0, 1.0),
        n,
    )
}

pub fn bundle(jets: &JetGrid, orientation: NormalOrientation) -> InvariantBundle {
    let opts = FrameOptions {
        orientation,
        ..Default::default()
    };
    InvariantBundle::compute(jets, &AmbientModel::MinkowskiFlat, &opts).unwrap()
}
