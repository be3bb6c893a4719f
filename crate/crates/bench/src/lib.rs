//! Fixtures shared by the benches.

use lod1::pointcloud::PointCloud;
use lod1::raster::{rasterize_polygon, Grid, DEFAULT_NODATA};
use lod1::synth::{generate_scene, SceneSpec};
use lod1::{Footprint, Point2};

pub fn scene(n_buildings: usize, extent: f64, seed: u64) -> (PointCloud, Vec<Footprint>) {
    let spec = SceneSpec::from_toml(&format!(
        "seed = {seed}\nextent = [{extent}, {extent}]\nn_buildings = {n_buildings}\nheight_range = [3.0, 15.0]\nroof = \"gabled\"\ndensity = 8.0\nz_noise = 0.03\n"
    ))
    .expect("bench spec");
    let (pc, truth) = generate_scene(&spec).expect("bench scene");
    (pc, truth.footprints())
}

/// Binary building mask over `[0, extent]²`.
pub fn mask(fps: &[Footprint], extent: f64, cell: f64) -> Grid {
    let n = (extent / cell).ceil() as usize;
    let mut out = Grid::new(Point2::new(cell / 2.0, cell / 2.0), cell, n, n, 0.0, DEFAULT_NODATA).expect("grid");
    for fp in fps {
        let g = rasterize_polygon(fp, &out);
        for r in 0..n {
            for c in 0..n {
                if g.get(c, r) == 1.0 {
                    out.set(c, r, 1.0);
                }
            }
        }
    }
    out
}
