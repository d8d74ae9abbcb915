//! Fixtures shared by the benchmarks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use bonnet_core::{parse_immersion, Grid, SurfacePatch};

pub fn cylinder_patch(n: usize) -> SurfacePatch {
    let grid = Grid::new((0.0, 2.0 * PI), (-1.0, 1.0), n, n).expect("valid grid");
    let params = BTreeMap::from([("r".to_string(), 1.0)]);
    SurfacePatch::new(
        parse_immersion("(t, r*cos(s), r*sin(s))").unwrap(),
        params,
        grid,
    )
    .unwrap()
}

pub fn quadratic_patch(n: usize) -> SurfacePatch {
    let grid = Grid::new((-1.0, 1.0), (-1.0, 1.0), n, n).expect("valid grid");
    let params = BTreeMap::from([
        ("A".to_string(), 0.15),
        ("B".to_string(), 0.05),
        ("C".to_string(), 0.1),
    ]);
    let imm = parse_immersion("(t, s, A*s^2 + B*s*t + C*t^2)").unwrap();
    SurfacePatch::new(imm, params, grid).unwrap()
}
