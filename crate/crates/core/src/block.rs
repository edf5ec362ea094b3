use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::config::Point3;

/// Number of constellation components per subcarrier.
pub const COMPONENTS: usize = 3;

/// A `3 x n` complex matrix, one column per subcarrier.
///
/// Storage is column-major: entry `(i, phi)` lives at `phi * 3 + i`, which is
/// also the flattening order of the detector features.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    cols: usize,
    data: Vec<Complex64>,
}

impl BlockMatrix {
    pub fn zeros(cols: usize) -> Self {
        Self {
            cols,
            data: vec![Complex64::new(0.0, 0.0); COMPONENTS * cols],
        }
    }

    pub fn from_fn(cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(COMPONENTS * cols);
        for phi in 0..cols {
            for i in 0..COMPONENTS {
                data.push(f(i, phi));
            }
        }
        Self { cols, data }
    }

    pub fn from_columns(columns: &[Point3]) -> Self {
        Self {
            cols: columns.len(),
            data: columns.iter().flatten().copied().collect(),
        }
    }

    /// Wraps column-major data; the length must be a multiple of 3.
    pub fn from_column_major(data: Vec<Complex64>) -> Self {
        assert_eq!(data.len() % COMPONENTS, 0, "column-major data length");
        Self { cols: data.len() / COMPONENTS, data }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, phi: usize) -> Point3 {
        let c = &self.data[phi * COMPONENTS..(phi + 1) * COMPONENTS];
        [c[0], c[1], c[2]]
    }

    /// Entries in column-major order.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.cols == other.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for BlockMatrix {
    type Output = Complex64;

    fn index(&self, (i, phi): (usize, usize)) -> &Complex64 {
        assert!(i < COMPONENTS);
        &self.data[phi * COMPONENTS + i]
    }
}

impl IndexMut<(usize, usize)> for BlockMatrix {
    fn index_mut(&mut self, (i, phi): (usize, usize)) -> &mut Complex64 {
        assert!(i < COMPONENTS);
        &mut self.data[phi * COMPONENTS + i]
    }
}
