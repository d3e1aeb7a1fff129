use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Area identifier, row-major over the grid.
pub type AreaId = usize;

/// A `rows x cols` grid of unit-width square areas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    rows: usize,
    cols: usize,
}

impl Grid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid(format!("grid dimensions must be positive, got {rows}x{cols}"));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn area_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, (row, col): (usize, usize)) -> bool {
        row < self.rows && col < self.cols
    }

    pub fn area_id(&self, tile: (usize, usize)) -> Option<AreaId> {
        self.contains(tile).then(|| tile.0 * self.cols + tile.1)
    }

    pub fn tile(&self, area: AreaId) -> Option<(usize, usize)> {
        (area < self.area_count()).then(|| (area / self.cols, area % self.cols))
    }
}

/// Builds a grid; identical to [`Grid::new`].
pub fn generate_grid(rows: usize, cols: usize) -> Result<Grid> {
    Grid::new(rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_sized_grid() {
        let g = generate_grid(21, 11).unwrap();
        assert_eq!(g.area_count(), 231);
    }

    #[test]
    fn degenerate_grid() {
        assert_eq!(generate_grid(1, 1).unwrap().area_count(), 1);
    }

    #[test]
    fn row_major_ids() {
        let g = generate_grid(3, 2).unwrap();
        assert_eq!(g.area_count(), 6);
        assert_eq!(g.area_id((2, 1)), Some(5));
        assert_eq!(g.tile(5), Some((2, 1)));
        assert_eq!(g.area_id((3, 0)), None);
        for a in 0..6 {
            assert_eq!(g.area_id(g.tile(a).unwrap()), Some(a));
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(generate_grid(0, 4).is_err());
        assert!(generate_grid(4, 0).is_err());
    }
}
