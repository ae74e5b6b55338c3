//! Dense-matrix reference implementations used only by tests.
//!
//! Everything here builds full `2^n x 2^n` matrices, so it is only usable for
//! a handful of qubits.

use num_complex::Complex64;

pub type Matrix = Vec<Vec<Complex64>>;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn identity(dim: usize) -> Matrix {
    let mut m = vec![vec![zero(); dim]; dim];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let dim = a.len();
    let mut c = vec![vec![zero(); dim]; dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            if aik == zero() {
                continue;
            }
            for j in 0..dim {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn matvec(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// `sum_j X_j` with qubit `j` as bit `j` of the basis index.
pub fn transverse_field(n: usize) -> Matrix {
    let dim = 1 << n;
    let mut m = vec![vec![zero(); dim]; dim];
    for (k, row) in m.iter_mut().enumerate() {
        for j in 0..n {
            row[k ^ (1 << j)] += Complex64::new(1.0, 0.0);
        }
    }
    m
}

/// `exp(t * a)` by Taylor series with scaling and squaring.
pub fn expm(a: &Matrix, t: Complex64) -> Matrix {
    let dim = a.len();
    let norm = a
        .iter()
        .map(|row| row.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.norm();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let ts = t * scale;
    let mut result = identity(dim);
    let mut term = identity(dim);
    for k in 1..=30 {
        term = matmul(&term, a);
        let f = ts / k as f64;
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x *= f;
            }
        }
        for (r, t) in result.iter_mut().zip(&term) {
            for (x, y) in r.iter_mut().zip(t) {
                *x += y;
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// `exp(-i gamma diag(costs))`.
pub fn cost_unitary(costs: &[f64], gamma: f64) -> Matrix {
    let dim = costs.len();
    let mut m = vec![vec![zero(); dim]; dim];
    for (k, &c) in costs.iter().enumerate() {
        m[k][k] = Complex64::from_polar(1.0, -gamma * c);
    }
    m
}

/// Final state of the layered circuit from `|+>^n`, built as an explicit
/// product of dense unitaries.
pub fn dense_qaoa(costs: &[f64], gammas: &[f64], betas: &[f64]) -> Vec<Complex64> {
    let dim = costs.len();
    let n = dim.trailing_zeros() as usize;
    let h_mix = transverse_field(n);
    let mut u = identity(dim);
    for (&g, &b) in gammas.iter().zip(betas) {
        let layer = matmul(
            &expm(&h_mix, Complex64::new(0.0, -b)),
            &cost_unitary(costs, g),
        );
        u = matmul(&layer, &u);
    }
    let plus = vec![Complex64::new((dim as f64).powf(-0.5), 0.0); dim];
    matvec(&u, &plus)
}

/// `<psi| diag(costs) |psi>`.
pub fn dense_expectation(psi: &[Complex64], costs: &[f64]) -> f64 {
    psi.iter().zip(costs).map(|(a, c)| a.norm_sqr() * c).sum()
}
