//! Fixed-parity bases of the maximal-spin sector.
//!
//! The collective operators S_alpha = sum_i sigma_alpha^i / 2 act on the
//! (N+1)-dimensional Dicke ladder |s, m>, s = N/2, m = -s..s. The parity
//! operator (-1)^{s+Sz} commutes with the LMG Hamiltonian and splits the
//! ladder into two sub-lattices of step Delta m = 2: the even sector (which
//! always contains the all-down state m = -s) of dimension floor(1 + N/2),
//! and the odd sector holding the remaining N + 1 - floor(1 + N/2) states.
//!
//! Within one sector, Sz is diagonal and Sx^2 is tridiagonal; the matrix
//! elements follow from the ladder algebra
//! S+-|s,m> = sqrt(s(s+1) - m(m+-1)) |s,m+-1>:
//!
//! ```text
//!   <m|Sx^2|m>   = (s(s+1) - m^2) / 2
//!   <m+2|Sx^2|m> = sqrt((s(s+1)-m(m+1)) (s(s+1)-(m+1)(m+2))) / 4
//! ```
//!
//! All quantum numbers are kept as exact integers (2s and 2m) internally so
//! that half-integer spins (odd N) carry no floating-point drift; the
//! closed-form products above are evaluated in double precision directly,
//! not by repeated ladder application, so no error accumulates at
//! N ~ 10^3..10^4.

use crate::{Error, Result};

/// Parity label of a sector: the eigenvalue of (-1)^{s+Sz}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Human-readable lowercase label, used in reports and CSV columns.
    pub fn label(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Basis of one fixed-parity subspace of the s = N/2 multiplet.
///
/// `m_values` is strictly increasing with constant step 2 and is exact:
/// every m is an integer or half-integer, both representable in f64.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSector {
    n_spins: u32,
    parity: Parity,
    /// Doubled magnetic quantum numbers 2m, ascending, step 4.
    two_m: Vec<i64>,
    /// m = two_m / 2 as floats, kept alongside for arithmetic convenience.
    m_values: Vec<f64>,
}

impl SpinSector {
    /// System size N.
    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    /// Total spin s = N/2.
    pub fn total_spin(&self) -> f64 {
        f64::from(self.n_spins) / 2.0
    }

    /// s(s+1) = N(N+2)/4, exact in f64 for all supported N.
    pub fn casimir(&self) -> f64 {
        let n = i64::from(self.n_spins);
        (n * (n + 2)) as f64 / 4.0
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Sector dimension (number of m values).
    pub fn dim(&self) -> usize {
        self.two_m.len()
    }

    /// Magnetic quantum numbers m, ascending, step 2.
    pub fn m_values(&self) -> &[f64] {
        &self.m_values
    }

    /// Doubled quantum numbers 2m (exact integers), ascending, step 4.
    pub fn two_m(&self) -> &[i64] {
        &self.two_m
    }
}

/// Build the fixed-parity basis of the s = N/2 sector.
///
/// The parity of |s, m> is (-1)^{s+m}; s+m = (N + 2m)/2 is always an
/// integer. Ordering is by increasing m, which makes the sector
/// Hamiltonian tridiagonal with a canonical layout.
pub fn build_sector(n_spins: u32, parity: Parity) -> Result<SpinSector> {
    if n_spins == 0 {
        return Err(Error::invalid("system size N must be at least 1"));
    }
    let n = i64::from(n_spins);
    let mut two_m = Vec::with_capacity(n_spins as usize / 2 + 1);
    let mut tm = -n;
    while tm <= n {
        // s + m = (N + 2m)/2; even parity means this is an even integer.
        let even = (n + tm) % 4 == 0;
        if even == (parity == Parity::Even) {
            two_m.push(tm);
        }
        tm += 2;
    }
    let m_values = two_m.iter().map(|&t| t as f64 / 2.0).collect();
    Ok(SpinSector {
        n_spins,
        parity,
        two_m,
        m_values,
    })
}

/// Matrix elements of Sz (diagonal) and Sx^2 (tridiagonal) in one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorElements {
    /// <m|Sz|m> = m, one entry per basis state.
    pub sz_diag: Vec<f64>,
    /// <m|Sx^2|m> = (s(s+1) - m^2)/2, one entry per basis state.
    pub sx2_diag: Vec<f64>,
    /// <m+2|Sx^2|m>, one entry per adjacent pair (length dim - 1).
    /// Strictly positive, which makes every sector spectrum nondegenerate.
    pub sx2_offdiag: Vec<f64>,
}

/// Compute the collective-operator matrix elements for a sector.
///
/// The products under the square root are assembled from exact integers:
/// s(s+1) - m(m+1) = (N(N+2) - 2m(2m+2))/4 with every piece an i64, so the
/// only rounding is the final double-precision sqrt and multiply.
pub fn operator_elements(sector: &SpinSector) -> OperatorElements {
    let n = i64::from(sector.n_spins());
    let casimir4 = n * (n + 2); // 4 s(s+1)

    let sz_diag = sector.m_values().to_vec();
    let sx2_diag = sector
        .two_m()
        .iter()
        .map(|&tm| (casimir4 - tm * tm) as f64 / 8.0)
        .collect();
    // 4(s(s+1) - m(m+1)) as an exact integer, for m given as 2m.
    let ladder4 = |tm: i64| casimir4 - tm * (tm + 2);
    let sx2_offdiag = sector
        .two_m()
        .iter()
        .take(sector.dim().saturating_sub(1))
        .map(|&tm| {
            let f1 = ladder4(tm) as f64 / 4.0;
            let f2 = ladder4(tm + 2) as f64 / 4.0;
            0.25 * (f1 * f2).sqrt()
        })
        .collect();

    OperatorElements {
        sz_diag,
        sx2_diag,
        sx2_offdiag,
    }
}
