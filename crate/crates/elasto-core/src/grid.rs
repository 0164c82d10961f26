//! Minimal dense 2-D array used for strain maps, shift maps, and
//! per-window quality grids.

/// Dense row-major 2-D array.
///
/// Rows index window depth (axial), columns index A-lines (lateral).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Clone> Grid2<E> {
    /// Creates a `rows x cols` grid filled with `fill`.
    pub fn filled(rows: usize, cols: usize, fill: E) -> Self {
        Grid2 { rows, cols, data: vec![fill; rows * cols] }
    }
}

impl<E> Grid2<E> {
    /// Builds a grid from row-major data. Panics if the length is not
    /// `rows * cols`; this is an internal construction error, not input data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), rows * cols, "grid data length mismatch");
        Grid2 { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &E {
        &self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: E) {
        self.data[row * self.cols + col] = value;
    }

    /// Row `row` as a contiguous slice.
    pub fn row(&self, row: usize) -> &[E] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// All elements in row-major order.
    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    /// Iterates `(row, col, &value)` in row-major order.
    pub fn iter_indexed(&self) -> impl Iterator<Item = (usize, usize, &E)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / cols, i % cols, v))
    }

    /// Element-wise conversion into a grid of another type.
    pub fn map<F, G>(&self, f: F) -> Grid2<G>
    where
        F: FnMut(&E) -> G,
    {
        Grid2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Builds a grid column-by-column from per-column vectors.
    /// Each vector is one column (one A-line's windows, top to bottom).
    pub fn from_columns(columns: &[Vec<E>]) -> Self
    where
        E: Clone,
    {
        let cols = columns.len();
        assert!(cols > 0, "grid needs at least one column");
        let rows = columns[0].len();
        assert!(
            columns.iter().all(|c| c.len() == rows),
            "grid columns must share a length"
        );
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for column in columns {
                data.push(column[r].clone());
            }
        }
        Grid2 { rows, cols, data }
    }
}
