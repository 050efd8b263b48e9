//! Two-mode squeezed eigenstates in the sublattice (a, b) Fock basis.
//!
//! The hybridized vacuum is Σ p_n |n⟩_a|n⟩_b with
//! p_n = e^{inφ} tanhⁿ r / cosh r. Excited eigenstates (α†)ˣ(β†)ʸ|ψ₀⟩ keep a
//! single off-diagonal band n_a − n_b = x − y; their amplitudes come from the
//! q-recursion in [`excited_coefficients`]. [`oracle_excited_state`] builds the
//! same states by applying α†, β† as explicit matrices, with no knowledge of
//! the recursion.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock;

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
pub const DEFAULT_TRUNCATION_CAP: usize = 4096;

/// Which mode carries the δm surplus quanta.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeExcess {
    A,
    B,
    None,
}

/// Amplitudes p_n of Σ p_n |n+δm⟩_a|n⟩_b (or the mirrored band for excess B).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeq {
    pub values: Vec<Complex64>,
    pub offset: usize,
    pub excess: ModeExcess,
}

impl CoefficientSeq {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum()
    }

    /// −Σ |p_n|² ln |p_n|², with 0·ln 0 = 0.
    pub fn entropy(&self) -> f64 {
        shannon(self.values.iter().map(|c| c.norm_sqr()))
    }

    pub fn n_trunc(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

pub(crate) fn shannon(probs: impl Iterator<Item = f64>) -> f64 {
    probs.filter(|&p| p > 0.0).fold(0.0, |acc, p| acc - p * p.ln())
}

pub fn ground_coefficients(r: f64, phi: f64, n_trunc: usize) -> CoefficientSeq {
    let t = r.tanh();
    let mut values = Vec::with_capacity(n_trunc + 1);
    // real modulus recursion plus exact phase nφ, so |p_n| does not depend on φ
    let mut modulus = 1.0 / r.cosh();
    for n in 0..=n_trunc {
        if n > 0 {
            modulus *= t;
        }
        values.push(Complex64::from_polar(modulus, n as f64 * phi));
    }
    CoefficientSeq { values, offset: 0, excess: ModeExcess::None }
}

pub fn choose_truncation(r: f64, tail_tol: f64) -> Result<usize> {
    choose_truncation_with_cap(r, tail_tol, DEFAULT_TRUNCATION_CAP)
}

/// Smallest N with Σ_{n>N} |p_n|² = tanh^{2(N+1)} r ≤ `tail_tol`.
pub fn choose_truncation_with_cap(r: f64, tail_tol: f64, cap: usize) -> Result<usize> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::InvalidParameter {
            name: "tail_tol",
            reason: format!("must lie in (0, 1), got {tail_tol}"),
        });
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter { name: "r", reason: format!("must be >= 0, got {r}") });
    }
    let t2 = r.tanh().powi(2);
    if t2 == 0.0 {
        return Ok(0);
    }
    if t2 >= 1.0 {
        return Err(Error::TruncationCapExceeded { cap });
    }
    let tail = |n: usize| t2.powf((n + 1) as f64);
    let guess = (tail_tol.ln() / t2.ln()).ceil() - 1.0;
    if !guess.is_finite() || guess > cap as f64 {
        return Err(Error::TruncationCapExceeded { cap });
    }
    let mut n = guess.max(0.0) as usize;
    while n > 0 && tail(n - 1) <= tail_tol {
        n -= 1;
    }
    while tail(n) > tail_tol {
        n += 1;
    }
    if n > cap {
        return Err(Error::TruncationCapExceeded { cap });
    }
    Ok(n)
}

/// [cosh²r ln cosh²r − sinh²r ln sinh²r], natural log.
pub fn ground_entropy(r: f64) -> f64 {
    let c2 = r.cosh().powi(2);
    let s2 = r.sinh().powi(2);
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    xlnx(c2) - xlnx(s2)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Amplitudes of (α†)ˣ(β†)ʸ|ψ₀⟩/√(x!y!) for n = 0..=n_trunc.
///
/// With m = min(x, y) and δm = |x − y|, the p^(x,y)_n are
/// (1/√(x!y!)) (1/u*)^δm (1/(u*v))^m q^(m,δm)_n p_n, where q starts from
/// q^(0,0) = 1, climbs m levels of the three-term recursion in m and then δm
/// levels of the two-term recursion in δm. Each level consumes one entry at
/// the top of the buffer, so q is seeded on n_trunc + 1 + m + δm entries.
pub fn excited_coefficients(r: f64, phi: f64, x: usize, y: usize, n_trunc: usize) -> Result<CoefficientSeq> {
    if x == 0 && y == 0 {
        return Ok(ground_coefficients(r, phi, n_trunc));
    }
    let m = x.min(y);
    let dm = x.abs_diff(y);
    if m >= 1 && r == 0.0 {
        return Err(Error::ExcitedAtZeroSqueezing);
    }
    let u = r.cosh();
    let v = Complex64::from_polar(r.sinh(), phi);
    let u2 = u * u;
    let v2 = v.norm_sqr();
    let (u4, uv2, v4) = (u2 * u2, u2 * v2, v2 * v2);

    let mut q = vec![1.0f64; n_trunc + 1 + m + dm];
    for _ in 0..m {
        let len = q.len() - 1;
        let next: Vec<f64> = (0..len)
            .map(|n| {
                let nf = n as f64;
                let below = if n == 0 { 0.0 } else { q[n - 1] };
                nf * u4 * below - (2.0 * nf + 1.0) * uv2 * q[n] + (nf + 1.0) * v4 * q[n + 1]
            })
            .collect();
        q = next;
    }
    for level in 1..=dm {
        let len = q.len() - 1;
        let next: Vec<f64> = (0..len)
            .map(|n| {
                let nf = n as f64;
                u2 * (nf + level as f64).sqrt() * q[n] - v2 * (nf + 1.0).sqrt() * q[n + 1]
            })
            .collect();
        q = next;
    }
    debug_assert_eq!(q.len(), n_trunc + 1);

    let ground = ground_coefficients(r, phi, n_trunc);
    let prefactor = (1.0 / u).powi(dm as i32) * (Complex64::new(1.0, 0.0) / (u * v)).powi(m as i32)
        / (factorial(x) * factorial(y)).sqrt();
    let values = ground.values.iter().zip(&q).map(|(p, qn)| prefactor * *qn * *p).collect();
    let excess = if x > y {
        ModeExcess::A
    } else if y > x {
        ModeExcess::B
    } else {
        ModeExcess::None
    };
    Ok(CoefficientSeq { values, offset: dm, excess })
}

/// The r = 0 eigenstate |x⟩_a|y⟩_b written as a band sequence.
pub fn fock_product_coefficients(x: usize, y: usize) -> CoefficientSeq {
    let m = x.min(y);
    let mut values = vec![Complex64::new(0.0, 0.0); m + 1];
    values[m] = Complex64::new(1.0, 0.0);
    let excess = match x.cmp(&y) {
        std::cmp::Ordering::Greater => ModeExcess::A,
        std::cmp::Ordering::Less => ModeExcess::B,
        std::cmp::Ordering::Equal => ModeExcess::None,
    };
    CoefficientSeq { values, offset: x.abs_diff(y), excess }
}

/// Eigenstate amplitudes for any r ≥ 0: the recursion for r > 0 and the
/// exact Fock product at r = 0.
pub fn eigenstate_coefficients(r: f64, phi: f64, x: usize, y: usize, n_trunc: usize) -> Result<CoefficientSeq> {
    if r == 0.0 && x.min(y) >= 1 {
        return Ok(fock_product_coefficients(x, y));
    }
    excited_coefficients(r, phi, x, y, n_trunc)
}

/// Smallest N such that the discarded tail Σ_{n>N} |p^(x,y)_n|² ≤ `tail_tol`.
///
/// The tail is summed directly from the far end of a long sequence rather
/// than as 1 − Σ_{n≤N}, so it stays accurate at small tolerances.
pub fn choose_excited_truncation(r: f64, x: usize, y: usize, tail_tol: f64) -> Result<usize> {
    let base = choose_truncation(r, tail_tol)?;
    if x == 0 && y == 0 {
        return Ok(base);
    }
    if r == 0.0 {
        return Ok(x.min(y));
    }
    let cap = DEFAULT_TRUNCATION_CAP;
    let mut len = 2 * base + 8 * (x + y) + 16;
    loop {
        if len > 4 * cap {
            return Err(Error::TruncationCapExceeded { cap });
        }
        let seq = excited_coefficients(r, 0.0, x, y, len)?;
        let probs: Vec<f64> = seq.values.iter().map(|c| c.norm_sqr()).collect();
        let last = probs[len];
        let ratio = probs[len] / probs[len - 1];
        // the sequence must be decaying geometrically by the end of the buffer
        if ratio < 1.0 && last / (1.0 - ratio) < tail_tol * 1e-3 {
            let mut tail = 0.0;
            let mut n = len;
            while n > 0 && tail + probs[n] <= tail_tol {
                tail += probs[n];
                n -= 1;
            }
            if n > cap {
                return Err(Error::TruncationCapExceeded { cap });
            }
            return Ok(n);
        }
        len *= 2;
    }
}

/// Dense amplitude array C[n_a][n_b] on levels 0..=n_trunc of both modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    n_trunc: usize,
    coeffs: DMatrix<Complex64>,
    norm_deficit: f64,
}

impl TwoModeState {
    pub fn from_coeffs(coeffs: DMatrix<Complex64>) -> Self {
        assert_eq!(coeffs.nrows(), coeffs.ncols(), "two-mode arrays are square");
        let n_trunc = coeffs.nrows() - 1;
        let norm_sqr: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        Self { n_trunc, coeffs, norm_deficit: (1.0 - norm_sqr).max(0.0) }
    }

    /// |n_a⟩|n_b⟩ with unit amplitude.
    pub fn fock(n_a: usize, n_b: usize, n_trunc: usize) -> Self {
        let dim = n_trunc.max(n_a).max(n_b) + 1;
        let mut c = DMatrix::zeros(dim, dim);
        c[(n_a, n_b)] = Complex64::new(1.0, 0.0);
        Self::from_coeffs(c)
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn amplitude(&self, n_a: usize, n_b: usize) -> Complex64 {
        if n_a > self.n_trunc || n_b > self.n_trunc {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n_a, n_b)]
        }
    }

    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::from_coeffs(self.coeffs.map(|c| c / n))
    }

    /// ⟨self|other⟩; arrays of different size are compared on the common
    /// levels (the missing entries are zero).
    pub fn overlap(&self, other: &Self) -> Complex64 {
        fock::inner(&self.coeffs, &other.coeffs)
    }
}

/// Places a band sequence into a dense array of at least `n_trunc + 1`
/// levels (enlarged if the band needs more).
pub fn assemble_state(seq: &CoefficientSeq, n_trunc: usize) -> TwoModeState {
    let needed = seq.n_trunc() + seq.offset;
    let dim = n_trunc.max(needed) + 1;
    let mut c = DMatrix::zeros(dim, dim);
    for (n, value) in seq.values.iter().enumerate() {
        let (i, j) = match seq.excess {
            ModeExcess::A => (n + seq.offset, n),
            ModeExcess::B => (n, n + seq.offset),
            ModeExcess::None => (n, n),
        };
        c[(i, j)] = *value;
    }
    TwoModeState::from_coeffs(c)
}

/// Von Neumann entropy of mode a's reduced state, from the Schmidt
/// coefficients (singular values) of the amplitude array.
pub fn entropy_of_state(state: &TwoModeState, tail_tol: f64) -> Result<f64> {
    if state.norm_deficit > tail_tol {
        return Err(Error::UnderTruncated { deficit: state.norm_deficit, tolerance: tail_tol });
    }
    let sv = state.coeffs.clone().singular_values();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    Ok(shannon(sv.iter().map(|s| s * s / total)))
}

/// Oracle output: the normalized state and the norm it had before
/// normalization (ideally √(x!y!)).
#[derive(Debug, Clone)]
pub struct OracleState {
    pub state: TwoModeState,
    pub prenorm: f64,
}

/// Bound on the norm² that the ground-state tail beyond `n_trunc` can reach
/// after x raisings of α and y of β.
///
/// Each α† or β† acting on levels up to M has norm at most e^r √(M+1), so
/// the tail mass tanh^{2(N+1)} r grows by at most (e^{2r}(N+x+y+1))^{x+y}.
pub fn amplified_leakage(r: f64, x: usize, y: usize, n_trunc: usize) -> f64 {
    let k = (x + y) as i32;
    let tail = r.tanh().powi(2).powf((n_trunc + 1) as f64);
    tail * ((2.0 * r).exp() * (n_trunc + x + y + 1) as f64).powi(k)
}

/// Smallest ground truncation for which [`amplified_leakage`] ≤ `tail_tol`.
pub fn oracle_truncation(r: f64, x: usize, y: usize, tail_tol: f64) -> Result<usize> {
    let mut n = choose_truncation(r, tail_tol)?;
    while amplified_leakage(r, x, y, n) > tail_tol {
        n += 1;
        if n > DEFAULT_TRUNCATION_CAP {
            return Err(Error::TruncationCapExceeded { cap: DEFAULT_TRUNCATION_CAP });
        }
    }
    Ok(n)
}

/// Builds (α†)ˣ(β†)ʸ|ψ₀⟩ by explicit operator application.
///
/// Inverting the Bogoliubov map (unit determinant) gives
/// α† = u a† − v* b and β† = u b† − v* a. The ground state array is padded by
/// x + y levels, so the raising operators never hit the cutoff; the only
/// truncation error is the ground-state tail, which the ladder operators
/// amplify. `n_trunc` is rejected unless [`amplified_leakage`] ≤ `tail_tol`
/// (see [`oracle_truncation`]).
pub fn oracle_excited_state(r: f64, phi: f64, x: usize, y: usize, n_trunc: usize, tail_tol: f64) -> Result<OracleState> {
    let leakage = amplified_leakage(r, x, y, n_trunc);
    if leakage > tail_tol {
        return Err(Error::IncreaseTruncation { leakage, tolerance: tail_tol });
    }
    let dim = n_trunc + x + y + 1;
    let mut c = DMatrix::zeros(dim, dim);
    for (n, p) in ground_coefficients(r, phi, n_trunc).values.iter().enumerate() {
        c[(n, n)] = *p;
    }
    let u = Complex64::new(r.cosh(), 0.0);
    let v_conj = Complex64::from_polar(r.sinh(), phi).conj();
    for _ in 0..x {
        c = fock::raise_a(&c) * u - fock::lower_b(&c) * v_conj;
    }
    for _ in 0..y {
        c = fock::raise_b(&c) * u - fock::lower_a(&c) * v_conj;
    }
    let prenorm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let state = TwoModeState::from_coeffs(c / Complex64::new(prenorm, 0.0));
    Ok(OracleState { state, prenorm })
}
