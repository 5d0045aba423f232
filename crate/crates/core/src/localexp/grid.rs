use crate::image::Rect;

/// Number of mutually disjoint expansion groups per grid level.
pub const GROUP_COUNT: usize = 16;

/// Group of cell `(i, j)`: cells four apart in both axes share a group.
#[inline]
pub fn group_index(i: usize, j: usize) -> usize {
    4 * (j % 4) + (i % 4)
}

/// Square-cell tiling of the image. The last column and row may be narrower.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridLevel {
    pub cell_size: usize,
    pub width: usize,
    pub height: usize,
}

impl GridLevel {
    pub fn new(width: usize, height: usize, cell_size: usize) -> Self {
        assert!(cell_size >= 1, "cell size must be positive");
        GridLevel {
            cell_size,
            width,
            height,
        }
    }

    /// Cells along x.
    pub fn cols(&self) -> usize {
        self.width.div_ceil(self.cell_size)
    }

    /// Cells along y.
    pub fn rows(&self) -> usize {
        self.height.div_ceil(self.cell_size)
    }

    /// Cell `C_ij`; `i` indexes columns, `j` rows.
    pub fn cell(&self, i: usize, j: usize) -> Rect {
        let s = self.cell_size;
        Rect::new(i * s, j * s, ((i + 1) * s).min(self.width), ((j + 1) * s).min(self.height))
    }

    /// Union of the 3×3 cells around `(i, j)`, clipped to the grid.
    pub fn expansion_region(&self, i: usize, j: usize) -> Rect {
        let lo = self.cell(i.saturating_sub(1), j.saturating_sub(1));
        let hi = self.cell((i + 1).min(self.cols() - 1), (j + 1).min(self.rows() - 1));
        lo.union(&hi)
    }

    pub fn unit(&self, i: usize, j: usize) -> ExpansionUnit {
        ExpansionUnit {
            i,
            j,
            center: self.cell(i, j),
            region: self.expansion_region(i, j),
            group: group_index(i, j),
        }
    }

    /// Units of one group, row-major.
    pub fn group(&self, k: usize) -> Vec<ExpansionUnit> {
        let mut out = Vec::new();
        for j in (k / 4..self.rows()).step_by(4) {
            for i in (k % 4..self.cols()).step_by(4) {
                out.push(self.unit(i, j));
            }
        }
        out
    }

    pub fn units(&self) -> impl Iterator<Item = ExpansionUnit> + '_ {
        (0..self.rows()).flat_map(move |j| (0..self.cols()).map(move |i| self.unit(i, j)))
    }
}

/// One local α-expansion site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpansionUnit {
    pub i: usize,
    pub j: usize,
    /// Cell the candidate label is drawn from.
    pub center: Rect,
    /// Pixels allowed to switch to the candidate.
    pub region: Rect,
    pub group: usize,
}

pub fn build_grids(width: usize, height: usize, cell_sizes: &[usize]) -> Vec<GridLevel> {
    cell_sizes.iter().map(|&s| GridLevel::new(width, height, s)).collect()
}
