//! Symmetric banded matrices and their Cholesky factorization.

/// Symmetric matrix stored by its lower band: `diag(d)[i] = a[i][i - d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    /// `bands[d][i]` holds entry `(i, i - d)`; only `i >= d` is used.
    bands: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBanded {
            n,
            bw,
            bands: vec![vec![0.0; n]; bw + 1],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        if d > self.bw {
            0.0
        } else {
            self.bands[d][i]
        }
    }

    /// Adds `x` to entries `(i, j)` and `(j, i)`; panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, x: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.bands[i - j][i] += x;
    }

    pub fn add_diagonal(&mut self, x: f64) {
        for v in self.bands[0].iter_mut() {
            *v += x;
        }
    }

    pub fn max_diagonal(&self) -> f64 {
        self.bands[0].iter().cloned().fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            y[i] += self.bands[0][i] * x[i];
            for d in 1..=self.bw.min(i) {
                let a = self.bands[d][i];
                y[i] += a * x[i - d];
                y[i - d] += a * x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Cholesky factor `L` with `A = L L^T`, or the index of the first
    /// non-positive pivot.
    pub fn cholesky(&self) -> Result<BandedCholesky, usize> {
        let n = self.n;
        let bw = self.bw;
        let mut l = self.bands.clone();
        for i in 0..n {
            // off-diagonal entries of row i
            for d in (1..=bw.min(i)).rev() {
                let j = i - d;
                let mut s = l[d][i];
                for k in 1..=(bw - d).min(j) {
                    // L[i][j-k] * L[j][j-k]
                    s -= l[d + k][i] * l[k][j];
                }
                l[d][i] = s / l[0][j];
            }
            let mut s = l[0][i];
            for d in 1..=bw.min(i) {
                s -= l[d][i] * l[d][i];
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(i);
            }
            l[0][i] = s.sqrt();
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<Vec<f64>>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, l) = (self.n, self.bw, &self.l);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for d in 1..=bw.min(i) {
                s -= l[d][i] * y[i - d];
            }
            y[i] = s / l[0][i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for d in 1..=bw.min(n - 1 - i) {
                s -= l[d][i + d] * y[i + d];
            }
            y[i] = s / l[0][i];
        }
        y
    }
}
