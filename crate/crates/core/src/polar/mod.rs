//! Reference-centered polar projection and compass binning.

mod compass;
mod geometry;

pub use compass::{compass_bin, flip_compass, CompassDistribution, PolarConfig, SigmaForm};
pub use geometry::{
    build_grid_geometry, cell_center, center_distance, compass_angle, true_direction, CellPolar,
    GridGeometry,
};
