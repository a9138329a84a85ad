//! Independent oracles for the integration tests.
//!
//! Nothing here shares a code path with the library: the eigensolver is
//! cyclic Jacobi instead of implicit-shift QL, the Hamiltonians come
//! from explicit Pauli sums on the full 2^N space instead of ladder
//! algebra, and the phase reduction runs in compensated double-double
//! arithmetic instead of plain f64.

use lmg::sector::Parity;

/// Cyclic Jacobi diagonalization of a dense symmetric matrix (row
/// major), returning ascending eigenvalues. O(dim^3) per sweep and
/// proud of it; the point is simplicity, not speed.
pub fn jacobi_eigenvalues(matrix: &[f64], dim: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), dim * dim);
    let mut a = matrix.to_vec();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for _sweep in 0..60 {
            let mut off = 0.0;
            for p in 0..dim {
                for q in (p + 1)..dim {
                    off += a[p * dim + q] * a[p * dim + q];
                }
            }
            if off.sqrt() <= 1e-15 * norm {
                break;
            }
            for p in 0..dim {
                for q in (p + 1)..dim {
                    rotate(&mut a, dim, p, q);
                }
            }
        }
    }
    let mut evs: Vec<f64> = (0..dim).map(|i| a[i * dim + i]).collect();
    evs.sort_by(f64::total_cmp);
    evs
}

/// One Jacobi rotation zeroing a[p][q], the textbook update.
fn rotate(a: &mut [f64], dim: usize, p: usize, q: usize) {
    let apq = a[p * dim + q];
    if apq == 0.0 {
        return;
    }
    let theta = (a[q * dim + q] - a[p * dim + p]) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        1.0 / (theta - (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);
    a[p * dim + p] -= t * apq;
    a[q * dim + q] += t * apq;
    a[p * dim + q] = 0.0;
    a[q * dim + p] = 0.0;
    for r in 0..dim {
        if r == p || r == q {
            continue;
        }
        let arp = a[r * dim + p];
        let arq = a[r * dim + q];
        a[r * dim + p] = arp - s * (arq + tau * arp);
        a[p * dim + r] = a[r * dim + p];
        a[r * dim + q] = arq + s * (arp - tau * arq);
        a[q * dim + r] = a[r * dim + q];
    }
}

/// Expand a sector tridiagonal into a dense row-major matrix.
pub fn dense_from_tridiagonal(diag: &[f64], offdiag: &[f64]) -> Vec<f64> {
    let dim = diag.len();
    let mut a = vec![0.0; dim * dim];
    for (i, &d) in diag.iter().enumerate() {
        a[i * dim + i] = d;
    }
    for (i, &e) in offdiag.iter().enumerate() {
        a[i * dim + (i + 1)] = e;
        a[(i + 1) * dim + i] = e;
    }
    a
}

/// The permutation-symmetric subspace of N spin-1/2 sites, with
/// collective operators evaluated as explicit Pauli sums on the full
/// 2^N space. Brute force by construction; keep N at 8 or below.
pub struct SymmetricSubspace {
    n: u32,
    /// basis[j] is the normalized j-up Dicke state (m = j - N/2).
    basis: Vec<Vec<f64>>,
}

impl SymmetricSubspace {
    pub fn new(n: u32) -> Self {
        assert!((1..=12).contains(&n));
        let full = 1usize << n;
        let mut basis = vec![vec![0.0; full]; n as usize + 1];
        for b in 0..full {
            basis[b.count_ones() as usize][b] = 1.0;
        }
        for v in &mut basis {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
        SymmetricSubspace { n, basis }
    }

    pub fn dim(&self) -> usize {
        self.n as usize + 1
    }

    /// S_z = sum_i sigma_z^i / 2, diagonal in the bit basis.
    fn apply_sz(&self, v: &[f64]) -> Vec<f64> {
        let n = i64::from(self.n);
        v.iter()
            .enumerate()
            .map(|(b, &x)| {
                let up = i64::from((b as u64).count_ones());
                x * (2 * up - n) as f64 / 2.0
            })
            .collect()
    }

    /// S_x = sum_i sigma_x^i / 2, one bit flip per site.
    fn apply_sx(&self, v: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; v.len()];
        for (b, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for i in 0..self.n {
                w[b ^ (1usize << i)] += 0.5 * x;
            }
        }
        w
    }

    /// sum_{i != j} c(i, j) sigma_x^i sigma_x^j with c symmetric.
    fn apply_pairwise_xx(&self, v: &[f64], c: &dyn Fn(u32, u32) -> f64) -> Vec<f64> {
        let mut w = vec![0.0; v.len()];
        for (b, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for i in 0..self.n {
                for j in (i + 1)..self.n {
                    let mask = (1usize << i) | (1usize << j);
                    w[b ^ mask] += 2.0 * c(i, j) * x;
                }
            }
        }
        w
    }

    /// Project a full-space operator onto the Dicke basis, (N+1)^2
    /// row-major entries over ascending m.
    fn project(&self, image: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let dim = self.dim();
        let mut m = vec![0.0; dim * dim];
        for q in 0..dim {
            let w = image(&self.basis[q]);
            for p in 0..dim {
                m[p * dim + q] = dot(&self.basis[p], &w);
            }
        }
        m
    }

    pub fn sz_matrix(&self) -> Vec<f64> {
        self.project(&|v| self.apply_sz(v))
    }

    pub fn sx_matrix(&self) -> Vec<f64> {
        self.project(&|v| self.apply_sx(v))
    }

    pub fn sx2_over_n_matrix(&self) -> Vec<f64> {
        let scale = 1.0 / f64::from(self.n);
        self.project(&|v| {
            self.apply_sx(&self.apply_sx(v))
                .into_iter()
                .map(|x| x * scale)
                .collect()
        })
    }

    /// h S_z - S_x^2 / N from raw Pauli sums.
    pub fn hamiltonian_matrix(&self, h: f64) -> Vec<f64> {
        self.project(&|v| {
            let sz = self.apply_sz(v);
            let sx2 = self.apply_sx(&self.apply_sx(v));
            sz.iter()
                .zip(&sx2)
                .map(|(&z, &xx)| h * z - xx / f64::from(self.n))
                .collect()
        })
    }

    /// The collective projection of the site-resolved power-law
    /// deviation, sum_{i != j} (|i-j|^-alpha - 1) sigma_x sigma_x / N.
    pub fn power_law_deviation_matrix(&self, alpha: f64) -> Vec<f64> {
        let scale = 1.0 / f64::from(self.n);
        let c = move |i: u32, j: u32| f64::from(i.abs_diff(j)).powf(-alpha) - 1.0;
        self.project(&|v| {
            self.apply_pairwise_xx(v, &c)
                .into_iter()
                .map(|x| x * scale)
                .collect()
        })
    }

    /// Restrict a full-multiplet matrix to one parity block, in the
    /// ascending-m order the sector code uses. Parity even means the
    /// up-spin count j = s + m is even.
    pub fn parity_block(&self, matrix: &[f64], parity: Parity) -> Vec<f64> {
        let dim = self.dim();
        let keep: Vec<usize> = (0..dim)
            .filter(|j| (j % 2 == 0) == (parity == Parity::Even))
            .collect();
        let mut block = vec![0.0; keep.len() * keep.len()];
        for (r, &p) in keep.iter().enumerate() {
            for (s, &q) in keep.iter().enumerate() {
                block[r * keep.len() + s] = matrix[p * dim + q];
            }
        }
        block
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Error-free sum: s + err == a + b exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// x - 2 pi m with m the nearest integer, reduced in double-double
/// arithmetic: both products m * hi and m * lo carry their exact
/// rounding errors via fused multiply-add, and 2 pi itself is the
/// two-word expansion. The residue is good to roughly 30 digits where
/// the plain f64 route keeps 16, so it adjudicates collisions the
/// single-word path decides near its own rounding floor.
pub fn dd_phase_residue(x: f64) -> (f64, i64) {
    const HI: f64 = std::f64::consts::TAU;
    const LO: f64 = 2.4492935982947064e-16;
    let m = (x / HI).round();
    let p1 = m * HI;
    let e1 = m.mul_add(HI, -p1);
    let p2 = m * LO;
    let e2 = m.mul_add(LO, -p2);
    let (s1, e3) = two_sum(x, -p1);
    let (s2, e4) = two_sum(s1, -p2);
    let r = s2 + (e4 + e3 - e1 - e2);
    (r, m as i64)
}

/// Collision scan in double-double reduction, mirroring the library's
/// contract: pairs (k, l, m) with |(E_k - E_l) dt - 2 pi m| <= pi/2^d.
pub fn dd_collisions(energies: &[f64], dt: f64, register_bits: u32) -> Vec<(usize, usize, i64)> {
    let eps = std::f64::consts::PI / 2f64.powi(register_bits as i32);
    let mut out = Vec::new();
    for k in 0..energies.len() {
        for l in (k + 1)..energies.len() {
            let x = (energies[k] - energies[l]) * dt;
            let (r, m) = dd_phase_residue(x);
            if r.abs() <= eps {
                out.push((k, l, m));
            }
        }
    }
    out
}
