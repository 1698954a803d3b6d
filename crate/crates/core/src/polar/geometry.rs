use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::BBox;

/// Screen-space offset to compass angle in degrees, range `[0, 360)`.
/// `dx` points right, `dy` points down (image rows), so the vertical axis is
/// inverted before `atan2`. A zero offset maps to 0.
pub fn compass_angle(dx: f64, dy: f64) -> f64 {
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    let deg = (-dy).atan2(dx).to_degrees();
    let wrapped = if deg < 0.0 { deg + 360.0 } else { deg };
    if wrapped >= 360.0 {
        0.0
    } else {
        wrapped
    }
}

/// Pixel center of grid cell `(row, col)`, both zero-based.
pub fn cell_center(
    row: usize,
    col: usize,
    grid_h: usize,
    grid_w: usize,
    image_w: f64,
    image_h: f64,
) -> (f64, f64) {
    (
        (col as f64 + 0.5) * image_w / grid_w as f64,
        (row as f64 + 0.5) * image_h / grid_h as f64,
    )
}

/// Direction from the reference box center to the target box center.
pub fn true_direction(ref_box: &BBox, tgt_box: &BBox) -> Result<f64> {
    let (ax, ay) = ref_box.center();
    let (bx, by) = tgt_box.center();
    let (dx, dy) = (bx - ax, by - ay);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::CoincidentCenters);
    }
    Ok(compass_angle(dx, dy))
}

/// Distance between the two box centers.
pub fn center_distance(ref_box: &BBox, tgt_box: &BBox) -> f64 {
    let (ax, ay) = ref_box.center();
    let (bx, by) = tgt_box.center();
    (bx - ax).hypot(by - ay)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellPolar {
    pub x: f64,
    pub y: f64,
    /// Offset from the reference center in screen axes.
    pub dx: f64,
    pub dy: f64,
    pub theta_deg: f64,
    pub rho: f64,
    pub zero_radius: bool,
}

impl CellPolar {
    fn from_offset(x: f64, y: f64, dx: f64, dy: f64) -> Self {
        CellPolar {
            x,
            y,
            dx,
            dy,
            theta_deg: compass_angle(dx, dy),
            rho: dx.hypot(dy),
            zero_radius: dx == 0.0 && dy == 0.0,
        }
    }
}

/// Pixel centers and reference-centered polar coordinates of every grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub grid_h: usize,
    pub grid_w: usize,
    pub image_w: f64,
    pub image_h: f64,
    pub ref_center: (f64, f64),
    /// Row-major cells.
    pub cells: Vec<CellPolar>,
}

impl GridGeometry {
    pub fn cell(&self, row: usize, col: usize) -> &CellPolar {
        &self.cells[row * self.grid_w + col]
    }

    /// Geometry of the horizontally mirrored image. Offsets are negated
    /// rather than recomputed, so radii match the original bit for bit.
    pub fn mirrored(&self) -> Self {
        let mut cells = Vec::with_capacity(self.cells.len());
        for row in self.cells.chunks(self.grid_w) {
            for c in row.iter().rev() {
                cells.push(CellPolar::from_offset(self.image_w - c.x, c.y, -c.dx, c.dy));
            }
        }
        GridGeometry {
            ref_center: (self.image_w - self.ref_center.0, self.ref_center.1),
            cells,
            ..*self
        }
    }
}

pub fn build_grid_geometry(
    grid_h: usize,
    grid_w: usize,
    image_w: f64,
    image_h: f64,
    ref_center: (f64, f64),
) -> Result<GridGeometry> {
    if grid_h == 0 || grid_w == 0 || !(image_w > 0.0) || !(image_h > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "grid {grid_h}x{grid_w} over image {image_w}x{image_h}"
        )));
    }
    let (ax, ay) = ref_center;
    if !(0.0..=image_w).contains(&ax) || !(0.0..=image_h).contains(&ay) {
        return Err(Error::CenterOutsideImage {
            x: ax,
            y: ay,
            w: image_w,
            h: image_h,
        });
    }
    let mut cells = Vec::with_capacity(grid_h * grid_w);
    for u in 0..grid_h {
        for v in 0..grid_w {
            let (x, y) = cell_center(u, v, grid_h, grid_w, image_w, image_h);
            cells.push(CellPolar::from_offset(x, y, x - ax, y - ay));
        }
    }
    Ok(GridGeometry {
        grid_h,
        grid_w,
        image_w,
        image_h,
        ref_center,
        cells,
    })
}
