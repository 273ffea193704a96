//! Compressed sparse row matrices over `Complex64`, with just the products
//! the Fock-space generator needs.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<C64>,
}

impl Csr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Csr {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Csr::from_triplets(n, n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    /// Duplicates are summed; exact zeros are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            assert!(r < rows && c < cols, "triplet ({r},{c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Csr { rows, cols, indptr, indices, values }.pruned()
    }

    fn pruned(self) -> Self {
        if self.values.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return self;
        }
        Csr::from_triplets(self.rows, self.cols, self.triplets().filter(|t| t.2 != C64::new(0.0, 0.0)))
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        (self.indptr[r]..self.indptr[r + 1])
            .find(|&k| self.indices[k] == c)
            .map_or(C64::new(0.0, 0.0), |k| self.values[k])
    }

    pub fn adjoint(&self) -> Self {
        Csr::from_triplets(self.cols, self.rows, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn transpose(&self) -> Self {
        Csr::from_triplets(self.cols, self.rows, self.triplets().map(|(r, c, v)| (c, r, v)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Csr::from_triplets(self.rows, self.cols, self.triplets().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &Csr) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Csr::from_triplets(self.rows, self.cols, self.triplets().chain(other.triplets()))
    }

    pub fn matmul(&self, other: &Csr) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut t = Vec::new();
        for (r, k, v) in self.triplets() {
            for idx in other.indptr[k]..other.indptr[k + 1] {
                t.push((r, other.indices[idx], v * other.values[idx]));
            }
        }
        Csr::from_triplets(self.rows, other.cols, t)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Csr) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                t.push((r1 * other.rows + r2, c1 * other.cols + c2, v1 * v2));
            }
        }
        Csr::from_triplets(self.rows * other.rows, self.cols * other.cols, t)
    }

    /// `y += self · x` for vectors.
    pub fn mul_vec_add(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.rows) {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yr += acc;
        }
    }

    /// `out += s · self · m` with `m` dense row-major `cols × n`.
    pub fn left_mul_add(&self, m: &[C64], n: usize, s: C64, out: &mut [C64]) {
        for r in 0..self.rows {
            let orow = &mut out[r * n..(r + 1) * n];
            for k in self.indptr[r]..self.indptr[r + 1] {
                let v = self.values[k] * s;
                let mrow = &m[self.indices[k] * n..(self.indices[k] + 1) * n];
                for (o, x) in orow.iter_mut().zip(mrow) {
                    *o += v * x;
                }
            }
        }
    }

    /// `out += s · m · self` with `m` dense row-major `n × rows`.
    pub fn right_mul_add(&self, m: &[C64], n: usize, s: C64, out: &mut [C64]) {
        let inner = self.rows;
        for i in 0..n {
            let mrow = &m[i * inner..(i + 1) * inner];
            let orow = &mut out[i * self.cols..(i + 1) * self.cols];
            for (k, mv) in mrow.iter().enumerate() {
                if *mv == C64::new(0.0, 0.0) {
                    continue;
                }
                let mv = *mv * s;
                for idx in self.indptr[k]..self.indptr[k + 1] {
                    orow[self.indices[idx]] += mv * self.values[idx];
                }
            }
        }
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut d = vec![C64::new(0.0, 0.0); self.rows * self.cols];
        for (r, c, v) in self.triplets() {
            d[r * self.cols + c] += v;
        }
        d
    }
}
