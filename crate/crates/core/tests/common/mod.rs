#![allow(dead_code)]

use cspriv_core::keys::KeyStream;
use cspriv_core::operators::LinearOperator;
use cspriv_core::Result;

/// Row-major dense matrix used as an independent oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn random(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = KeyStream::new(seed);
        let data = (0..rows * cols).map(|_| 2.0 * rng.unit() - 1.0).collect();
        Self { rows, cols, data }
    }

    /// Materializes an operator column by column.
    pub fn from_operator<L: LinearOperator>(op: &L) -> Self {
        let mut out = Self::zeros(op.rows(), op.cols());
        for c in 0..op.cols() {
            let mut e = vec![0.0; op.cols()];
            e[c] = 1.0;
            let col = op.apply(&e).unwrap();
            for r in 0..op.rows() {
                out.set(r, c, col[r]);
            }
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }

    pub fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c) * y[r]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Dense) -> Dense {
        assert_eq!(self.cols, other.rows);
        let mut out = Dense::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let v = (0..self.cols).map(|k| self.get(r, k) * other.get(k, c)).sum();
                out.set(r, c, v);
            }
        }
        out
    }

    /// Largest entrywise deviation from the identity.
    pub fn identity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((self.get(r, c) - target).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl LinearOperator for Dense {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(x.len(), self.cols);
        Ok(self.mul(x))
    }
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(y.len(), self.rows);
        Ok(self.mul_t(y))
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn random_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = KeyStream::new(seed);
    (0..len).map(|_| 2.0 * rng.unit() - 1.0).collect()
}

/// Relative adjoint mismatch `|⟨Lx, y⟩ − ⟨x, Lᵀy⟩| / (‖Lx‖‖y‖ + ‖x‖‖Lᵀy‖)`
/// for random probes.
pub fn adjoint_error<L: LinearOperator>(op: &L, seed: u64) -> f64 {
    let x = random_vec(op.cols(), seed);
    let y = random_vec(op.rows(), seed ^ 0x5555);
    let lx = op.apply(&x).unwrap();
    let lty = op.apply_adjoint(&y).unwrap();
    let scale = norm(&lx) * norm(&y) + norm(&x) * norm(&lty);
    (dot(&lx, &y) - dot(&x, &lty)).abs() / scale
}

/// Solves a square system by Gaussian elimination with partial pivoting;
/// `None` if (numerically) singular.
pub fn solve_square(a: &Dense, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m.get(i, col).abs().total_cmp(&m.get(j, col).abs()))?;
        if m.get(pivot, col).abs() < 1e-10 {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                let (p, q) = (m.get(pivot, c), m.get(col, c));
                m.set(pivot, c, q);
                m.set(col, c, p);
            }
            rhs.swap(pivot, col);
        }
        for r in col + 1..n {
            let f = m.get(r, col) / m.get(col, col);
            for c in col..n {
                let v = m.get(r, c) - f * m.get(col, c);
                m.set(r, c, v);
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m.get(r, c) * x[c]).sum();
        x[r] = (rhs[r] - s) / m.get(r, r);
    }
    Some(x)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Basis pursuit optimum `min ‖x‖₁ s.t. Lx = y` by enumerating every basis
/// (the LP optimum sits at a basic solution).
pub fn basis_pursuit_by_enumeration(l: &Dense, y: &[f64]) -> (f64, Vec<f64>) {
    let mut best = (f64::INFINITY, vec![0.0; l.cols]);
    for support in subsets(l.cols, l.rows) {
        let mut sub_matrix = Dense::zeros(l.rows, l.rows);
        for (j, &c) in support.iter().enumerate() {
            for r in 0..l.rows {
                sub_matrix.set(r, j, l.get(r, c));
            }
        }
        if let Some(coeffs) = solve_square(&sub_matrix, y) {
            let cost = l1(&coeffs);
            if cost < best.0 {
                let mut x = vec![0.0; l.cols];
                for (&c, v) in support.iter().zip(coeffs) {
                    x[c] = v;
                }
                best = (cost, x);
            }
        }
    }
    best
}

/// LASSO `min ½‖y − Lx‖² + λ‖x‖₁` by cyclic coordinate descent.
pub fn lasso(l: &Dense, y: &[f64], lambda: f64) -> Vec<f64> {
    let n = l.cols;
    let col_sq: Vec<f64> = (0..n)
        .map(|c| (0..l.rows).map(|r| l.get(r, c).powi(2)).sum())
        .collect();
    let mut x = vec![0.0; n];
    let mut resid = y.to_vec();
    for _ in 0..200_000 {
        let mut biggest: f64 = 0.0;
        for c in 0..n {
            let rho: f64 = (0..l.rows).map(|r| l.get(r, c) * resid[r]).sum::<f64>() + col_sq[c] * x[c];
            let next = if rho > lambda {
                (rho - lambda) / col_sq[c]
            } else if rho < -lambda {
                (rho + lambda) / col_sq[c]
            } else {
                0.0
            };
            let delta = next - x[c];
            if delta != 0.0 {
                for r in 0..l.rows {
                    resid[r] -= l.get(r, c) * delta;
                }
                x[c] = next;
                biggest = biggest.max(delta.abs());
            }
        }
        if biggest < 1e-15 {
            break;
        }
    }
    x
}

/// BPDN optimum via the LASSO path: bisection on λ until the LASSO
/// residual equals ε.
pub fn bpdn_by_lasso(l: &Dense, y: &[f64], epsilon: f64) -> (f64, Vec<f64>) {
    let mut lo = 0.0;
    let mut hi = l.mul_t(y).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut x = vec![0.0; l.cols];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        x = lasso(l, y, mid);
        let r = norm(&sub(y, &l.mul(&x)));
        if r > epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    (l1(&x), x)
}

/// Real noiselet for an even number of stages straight from the closed
/// form: `2^{-k/2}·(Re + Im)(i^{popcount(r xor c)})`.
pub fn dense_noiselet(n: usize) -> Dense {
    let k = n.trailing_zeros();
    assert!(n.is_power_of_two() && k.is_multiple_of(2), "closed form needs even k");
    let scale = (n as f64).sqrt().recip();
    let mut out = Dense::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            // i^0 = 1, i^1 = i, i^2 = -1, i^3 = -i; Re + Im of each
            let v = match (r ^ c).count_ones() % 4 {
                0 | 1 => 1.0,
                _ => -1.0,
            };
            out.set(r, c, scale * v);
        }
    }
    out
}

/// `A[i][j] = R[row_subset[i]][col_perm[j]]`.
pub fn dense_sensing(key: &cspriv_core::keys::SensingKey) -> Dense {
    let r = dense_noiselet(key.n);
    let perm = key.col_perm.as_slice();
    let mut a = Dense::zeros(key.m, key.n);
    for (i, &row) in key.row_subset.iter().enumerate() {
        for j in 0..key.n {
            a.set(i, j, r.get(row, perm[j]));
        }
    }
    a
}

/// Orthonormal DCT-II matrix.
pub fn dense_dct(m: usize) -> Dense {
    let mut c = Dense::zeros(m, m);
    for k in 0..m {
        let alpha = if k == 0 { (1.0 / m as f64).sqrt() } else { (2.0 / m as f64).sqrt() };
        for j in 0..m {
            let angle = std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2 * m) as f64;
            c.set(k, j, alpha * angle.cos());
        }
    }
    c
}

/// `(B, F)`: DCT rows `col_subset` as columns of `B`, rows `complement`
/// as rows of `F`.
pub fn dense_embedding(key: &cspriv_core::keys::EmbeddingKey) -> (Dense, Dense) {
    let c = dense_dct(key.m);
    let mut b = Dense::zeros(key.m, key.t);
    for (k, &row) in key.col_subset.iter().enumerate() {
        for r in 0..key.m {
            b.set(r, k, c.get(row, r));
        }
    }
    let mut f = Dense::zeros(key.p(), key.m);
    for (q, &row) in key.complement.iter().enumerate() {
        for r in 0..key.m {
            f.set(q, r, c.get(row, r));
        }
    }
    (b, f)
}

/// Dense reference encoder: `Ã = A` with the flipped region columns
/// negated, `a = ratio·‖Ãs‖/√|C|`, `w_k = ±a` (minus for flipped) for
/// `k < |C|` and zero beyond, `y = Ãs + Bw`. Returns `(y, a)`.
pub fn dense_encode(
    pixels: &[f64],
    key_a: &cspriv_core::keys::SensingKey,
    key_b: &cspriv_core::keys::EmbeddingKey,
    region: &[usize],
    flips: &[bool],
    ratio: f64,
) -> (Vec<f64>, f64) {
    let a = dense_sensing(key_a);
    let (b, _) = dense_embedding(key_b);
    let mut tilde = a.clone();
    for (&j, &f) in region.iter().zip(flips) {
        if f {
            for i in 0..key_a.m {
                tilde.set(i, j, -a.get(i, j));
            }
        }
    }
    let sensed = tilde.mul(pixels);
    let amp = if region.is_empty() {
        0.0
    } else {
        ratio * norm(&sensed) / (region.len() as f64).sqrt()
    };
    let mut w = vec![0.0; key_b.t];
    for (k, &f) in flips.iter().enumerate() {
        w[k] = if f { -amp } else { amp };
    }
    let bw = b.mul(&w);
    (sensed.iter().zip(&bw).map(|(s, e)| s + e).collect(), amp)
}
