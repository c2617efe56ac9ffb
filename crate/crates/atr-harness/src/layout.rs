//! Probing hole layouts in normalized lid coordinates.
//!
//! The geometric layouts are synthetic: the box lid carries a 32 x 13 grid
//! (416 holes, 2 cm pitch on a 60 x 31 cm lid), the server lid exposes a
//! 13 x 9 grid of 117 probe-worthy positions inside the sensitive region,
//! away from the shadowed power-supply side.

use atr_core::channel::Position;

/// One probing hole.
#[derive(Debug, Clone, PartialEq)]
pub struct Hole {
    pub id: String,
    pub position: Position,
    /// Outermost ring of its grid.
    pub border: bool,
}

fn grid(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<Hole> {
    let mut holes = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        for col in 0..nx {
            let x = if nx == 1 {
                (x0 + x1) / 2.0
            } else {
                x0 + (x1 - x0) * col as f64 / (nx - 1) as f64
            };
            let y = if ny == 1 {
                (y0 + y1) / 2.0
            } else {
                y0 + (y1 - y0) * row as f64 / (ny - 1) as f64
            };
            holes.push(Hole {
                id: format!("r{row:02}c{col:02}"),
                position: Position::new(x, y),
                border: row == 0 || row == ny - 1 || col == 0 || col == nx - 1,
            });
        }
    }
    holes
}

/// Full 416-hole grid of the box lid.
pub fn box_grid() -> Vec<Hole> {
    grid(32, 13, 0.035, 0.965, 0.05, 0.95)
}

/// `count` holes sampled evenly (by index) from a larger set.
pub fn sample_evenly(holes: &[Hole], count: usize) -> Vec<Hole> {
    let count = count.min(holes.len());
    if count == holes.len() {
        return holes.to_vec();
    }
    (0..count)
        .map(|i| {
            let idx = if count == 1 {
                holes.len() / 2
            } else {
                (i as f64 * (holes.len() - 1) as f64 / (count - 1) as f64).round() as usize
            };
            holes[idx].clone()
        })
        .collect()
}

/// Holes spread along the main axis between the antennas (the lid center
/// row).
pub fn box_center_row(count: usize) -> Vec<Hole> {
    let all = box_grid();
    let center: Vec<Hole> = all
        .into_iter()
        .filter(|h| h.id.starts_with("r06"))
        .collect();
    sample_evenly(&center, count)
}

/// The server's 117 sensitive probing positions, a 13 x 9 grid clear of the
/// shadowed power-supply region.
pub fn server_sensitive_grid() -> Vec<Hole> {
    grid(13, 9, 0.08, 0.60, 0.12, 0.88)
}

/// Dense lid-wide grid for sensitivity heatmaps (covers the shadowed region
/// and the border strips).
pub fn heatmap_grid(nx: usize, ny: usize) -> Vec<Hole> {
    grid(nx, ny, 0.02, 0.98, 0.03, 0.97)
}
