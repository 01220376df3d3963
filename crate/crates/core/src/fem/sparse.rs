//! Compressed sparse row matrices.

/// Unsorted (row, col, value) entries; duplicates are summed on conversion.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder { nrows, ncols, rows: Vec::new(), cols: Vec::new(), vals: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.rows.push(i);
        self.cols.push(j);
        self.vals.push(v);
    }

    /// Appends every stored entry of `m`, shifted by (`row0`, `col0`) and scaled.
    pub fn push_block(&mut self, row0: usize, col0: usize, scale: f64, m: &CsrMatrix) {
        for i in 0..m.nrows {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                self.push(row0 + i, col0 + m.col_idx[k], scale * m.values[k]);
            }
        }
    }

    pub fn build(self) -> CsrMatrix {
        let mut counts = vec![0usize; self.nrows + 1];
        for &r in &self.rows {
            counts[r + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; self.rows.len()];
        let mut vals = vec![0.0; self.rows.len()];
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            let k = next[r];
            cols[k] = c;
            vals[k] = v;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::with_capacity(cols.len());
        let mut values = Vec::with_capacity(cols.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..self.nrows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            // Stable sort keeps the summation order fixed, so results are reproducible.
            scratch.sort_by_key(|e| e.0);
            for &(c, v) in &scratch {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

/// CSR matrix with sorted, unique column indices in each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut b = TripletBuilder::new(rows.len(), ncols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    /// Assembles a block matrix; `None` blocks are zero. Block sizes are
    /// taken from the first present block in each block row and column.
    pub fn from_blocks(blocks: &[Vec<Option<&CsrMatrix>>]) -> Self {
        let nbr = blocks.len();
        let nbc = blocks[0].len();
        let mut row_sizes = vec![usize::MAX; nbr];
        let mut col_sizes = vec![usize::MAX; nbc];
        for (bi, row) in blocks.iter().enumerate() {
            assert_eq!(row.len(), nbc);
            for (bj, blk) in row.iter().enumerate() {
                if let Some(m) = blk {
                    if row_sizes[bi] == usize::MAX {
                        row_sizes[bi] = m.nrows;
                    }
                    if col_sizes[bj] == usize::MAX {
                        col_sizes[bj] = m.ncols;
                    }
                    assert_eq!(row_sizes[bi], m.nrows, "block row {bi} height mismatch");
                    assert_eq!(col_sizes[bj], m.ncols, "block column {bj} width mismatch");
                }
            }
        }
        assert!(row_sizes.iter().chain(&col_sizes).all(|&s| s != usize::MAX), "empty block row or column");
        let offsets = |sizes: &[usize]| {
            sizes.iter().scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            }).collect::<Vec<_>>()
        };
        let (ro, co) = (offsets(&row_sizes), offsets(&col_sizes));
        let nnz = blocks.iter().flatten().flatten().map(|m| m.nnz()).sum();
        let mut b = TripletBuilder::with_capacity(row_sizes.iter().sum(), col_sizes.iter().sum(), nnz);
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, blk) in row.iter().enumerate() {
                if let Some(m) = blk {
                    b.push_block(ro[bi], co[bj], 1.0, m);
                }
            }
        }
        b.build()
    }

    /// Σ scale_k · M_k over matrices of equal shape.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Self {
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        let nnz = terms.iter().map(|t| t.1.nnz()).sum();
        let mut b = TripletBuilder::with_capacity(nrows, ncols, nnz);
        for (s, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols), "shape mismatch in linear combination");
            b.push_block(0, 0, *s, m);
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    /// Stored value at (i, j), zero if absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&j).map_or(0.0, |k| self.values[self.row_ptr[i] + k])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                b.push(j, i, v);
            }
        }
        b.build()
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Largest |A_ij - A_ji| relative to the largest |A_ij|.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Largest absolute entry difference with another matrix of equal shape.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        let d = CsrMatrix::linear_combination(&[(1.0, self), (-1.0, other)]);
        d.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn from_raw(nrows: usize, ncols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(row_ptr.len(), nrows + 1);
        debug_assert!(row_ptr.windows(2).all(|w| {
            let cols = &col_idx[w[0]..w[1]];
            cols.windows(2).all(|c| c[0] < c[1])
        }));
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }
}
