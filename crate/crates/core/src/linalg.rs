//! Sparse assembly and the two linear solvers used by the time stepper.

/// Compressed sparse rows, assembled from triplets with duplicates summed.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `(lower, upper)` bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for r in 0..self.n {
            for (c, _) in self.row(r) {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).find(|&(c, _)| c == r).map_or(0.0, |(_, v)| v))
            .collect()
    }

    /// `‖A‖_∞`, the largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖Ax − b‖_∞`.
    pub fn residual_inf(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.mul_vec(x, &mut ax);
        ax.iter()
            .zip(b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Banded LU with partial pivoting. Row `i` stores columns
/// `i−kl ..= i+ku+kl`; the extra `kl` diagonals absorb pivoting fill.
pub struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Number of stored entries a factorization would need.
    pub fn storage(n: usize, kl: usize, ku: usize) -> usize {
        n * (2 * kl + ku + 1)
    }

    /// Factorizes `a`; `None` when a zero pivot is met.
    pub fn factor(a: &CsrMatrix) -> Option<Self> {
        let n = a.n();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            width,
            data: vec![0.0; n * width],
            piv: vec![0; n],
        };
        for r in 0..n {
            for (c, v) in a.row(r) {
                *lu.at_mut(r, c) += v;
            }
        }
        let reach = kl + ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut p = k;
            let mut best = lu.at(k, k).abs();
            for r in k + 1..=last_row {
                let v = lu.at(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) {
                return None;
            }
            lu.piv[k] = p;
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (lu.idx(k, c), lu.idx(p, c));
                    lu.data.swap(a, b);
                }
            }
            let pivot = lu.at(k, k);
            for r in k + 1..=last_row {
                let factor = lu.at(r, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                *lu.at_mut(r, k) = factor;
                let (rk, rr) = (lu.idx(k, k + 1), lu.idx(r, k + 1));
                let len = last_col - k;
                for j in 0..len {
                    let v = lu.data[rk + j];
                    lu.data[rr + j] -= factor * v;
                }
            }
        }
        Some(lu)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c + self.kl - r < self.width);
        r * self.width + (c + self.kl - r)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[self.idx(r, c)]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        let i = self.idx(r, c);
        &mut self.data[i]
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + self.kl).min(n - 1) {
                    b[r] -= self.at(r, k) * bk;
                }
            }
        }
        let reach = self.width - self.kl - 1;
        for i in (0..n).rev() {
            let mut s = b[i];
            for c in i + 1..=(i + reach).min(n - 1) {
                s -= self.at(i, c) * b[c];
            }
            b[i] = s / self.at(i, i);
        }
    }
}

/// Jacobi-preconditioned BiCGSTAB from the initial guess `x`. Returns the
/// final relative residual.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> f64 {
    let n = a.n();
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let (mut y, mut z, mut s, mut t) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    for _ in 0..max_iter {
        if rel <= tol {
            break;
        }
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = dinv[i] * p[i];
        }
        a.mul_vec(&y, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
            z[i] = dinv[i] * s[i];
        }
        a.mul_vec(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if !rel.is_finite() {
            break;
        }
    }
    rel
}
