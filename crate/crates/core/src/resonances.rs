//! Complex electronic resonances of the scalar drift matrix.

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::JunctionModel;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Imaginary splitting applied to exactly degenerate spectra.
pub const DEGENERACY_SPLITTING: f64 = 1e-12;

/// Largest accepted 1-norm condition number of the eigenvector basis. The
/// coefficient tables lose about cond²·ε to cancellation, so beyond this the
/// matrix sits numerically on an exceptional point.
pub const MAX_BASIS_CONDITION: f64 = 1e5;

/// Complex-symmetric tridiagonal matrix with the lead broadening on its corners.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix {
    pub diagonal: Vec<Complex64>,
    /// Entries (n, n+1) = (n+1, n).
    pub off_diagonal: Vec<Complex64>,
}

pub fn build_m0(model: &JunctionModel) -> DriftMatrix {
    let n = model.n_sites();
    let mut diagonal: Vec<Complex64> = model.site_energies.iter().map(|&e| I * e).collect();
    diagonal[0] += model.gamma_left;
    diagonal[n - 1] += model.gamma_right;
    DriftMatrix {
        diagonal,
        off_diagonal: model.hoppings.iter().map(|&g| I * g).collect(),
    }
}

impl DriftMatrix {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (k, d) in self.diagonal.iter().enumerate() {
            m[(k, k)] = *d;
        }
        for (k, o) in self.off_diagonal.iter().enumerate() {
            m[(k, k + 1)] = *o;
            m[(k + 1, k)] = *o;
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal.iter().sum()
    }

    /// det(M − λI) by the three-term continuant recurrence.
    pub fn continuant(&self, lambda: Complex64) -> Complex64 {
        let mut prev = Complex64::new(1.0, 0.0);
        let mut cur = self.diagonal[0] - lambda;
        for k in 1..self.dim() {
            let o = self.off_diagonal[k - 1];
            let next = (self.diagonal[k] - lambda) * cur - o * o * prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    fn scale(&self) -> f64 {
        self.diagonal
            .iter()
            .chain(&self.off_diagonal)
            .map(|z| z.norm())
            .fold(1.0, f64::max)
    }
}

/// Coefficient tables of the current formula.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficients {
    pub phi_left: Vec<Complex64>,
    pub phi_right: Vec<Complex64>,
    pub psi_left: DMatrix<Complex64>,
    pub psi_right: DMatrix<Complex64>,
    pub psi_tilde_left: DMatrix<Complex64>,
    pub psi_tilde_right: DMatrix<Complex64>,
}

/// Projections of the boundary sites on every resonance, built from the
/// left-eigenvector matrix `s_tilde` and its inverse `s`.
pub fn coefficients(s_tilde: &DMatrix<Complex64>, s: &DMatrix<Complex64>) -> Coefficients {
    let n = s.nrows();
    let last = n - 1;
    // a: site 1 ← lead L, b: site 1 ← lead R, c: site N ← lead L, d: site N ← lead R
    let a: Vec<Complex64> = (0..n).map(|k| s[(0, k)] * s_tilde[(k, 0)]).collect();
    let b: Vec<Complex64> = (0..n).map(|k| s[(0, k)] * s_tilde[(k, last)]).collect();
    let c: Vec<Complex64> = (0..n).map(|k| s[(last, k)] * s_tilde[(k, 0)]).collect();
    let d: Vec<Complex64> = (0..n).map(|k| s[(last, k)] * s_tilde[(k, last)]).collect();
    let outer = |x: &[Complex64]| DMatrix::from_fn(n, n, |i, j| x[i].conj() * x[j]);
    Coefficients {
        psi_left: outer(&a),
        psi_right: outer(&b),
        psi_tilde_left: outer(&c),
        psi_tilde_right: outer(&d),
        phi_left: a,
        phi_right: d,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceSet {
    /// Sorted by ascending imaginary part, then real part.
    pub eigenvalues: Vec<Complex64>,
    /// Rows are unit-norm left eigenvectors.
    pub s_tilde: DMatrix<Complex64>,
    pub s: DMatrix<Complex64>,
    pub coefficients: Coefficients,
    /// Whether the degeneracy splitting was applied.
    pub perturbed: bool,
}

impl ResonanceSet {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn min_width(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    /// ‖S̃‖₁‖S‖₁.
    pub fn basis_condition(&self) -> f64 {
        let norm1 = |m: &DMatrix<Complex64>| {
            m.column_iter()
                .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        norm1(&self.s_tilde) * norm1(&self.s)
    }

    /// max |(S̃S − I)_ij|.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.len();
        let p = &self.s_tilde * &self.s;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - target).norm());
            }
        }
        worst
    }
}

fn sorted_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    let mut eig: Vec<Complex64> = if n == 1 {
        vec![m[(0, 0)]]
    } else {
        let schur = m
            .clone()
            .try_schur(f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Defective("Schur iteration did not converge".into()))?;
        let (_, t) = schur.unpack();
        (0..n).map(|k| t[(k, k)]).collect()
    };
    eig.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    Ok(eig)
}

fn min_separation(eig: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..eig.len() {
        for j in i + 1..eig.len() {
            best = best.min((eig[i] - eig[j]).norm());
        }
    }
    best
}

/// Right eigenvector for `lambda` by inverse iteration.
fn eigenvector(m: &DMatrix<Complex64>, lambda: Complex64, scale: f64) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![Complex64::new(1.0, 0.0)]);
    }
    let shift = lambda + Complex64::new(1.0, 1.0) * (64.0 * f64::EPSILON * scale);
    let mut a = m.clone();
    for k in 0..n {
        a[(k, k)] -= shift;
    }
    let lu = a.lu();
    let mut x = nalgebra::DVector::from_fn(n, |k, _| Complex64::new(1.0, 0.1 * k as f64));
    for _ in 0..3 {
        x = lu
            .solve(&x)
            .ok_or_else(|| Error::Defective("singular shifted matrix in inverse iteration".into()))?;
        let norm = x.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Defective("inverse iteration diverged".into()));
        }
        x /= Complex64::new(norm, 0.0);
    }
    Ok(x.iter().copied().collect())
}

fn decompose_dense(m: &DMatrix<Complex64>, scale: f64, perturbed: bool) -> Result<ResonanceSet> {
    let n = m.nrows();
    let eigenvalues = sorted_eigenvalues(m)?;
    let mut s_tilde = DMatrix::zeros(n, n);
    for (row, &lambda) in eigenvalues.iter().enumerate() {
        // Complex symmetric: the left eigenvector is the transposed right one.
        let v = eigenvector(m, lambda, scale)?;
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (col, z) in v.iter().enumerate() {
            s_tilde[(row, col)] = z / norm;
        }
    }
    let s = s_tilde
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Defective("eigenvector basis is rank-deficient".into()))?;
    let coefficients = coefficients(&s_tilde, &s);
    let set = ResonanceSet {
        eigenvalues,
        s_tilde,
        s,
        coefficients,
        perturbed,
    };
    let condition = set.basis_condition();
    if !(condition < MAX_BASIS_CONDITION) {
        return Err(Error::Defective(format!(
            "eigenvector basis is numerically rank-deficient (condition {condition:e})"
        )));
    }
    let residual = set.inverse_residual();
    if !(residual < 1e-8) {
        return Err(Error::Defective(format!(
            "eigenvector basis is rank-deficient (|S̃S − I| = {residual:e})"
        )));
    }
    Ok(set)
}

/// Eigen-decomposition into resonances with S = S̃⁻¹.
pub fn decompose(m0: &DriftMatrix) -> Result<ResonanceSet> {
    let n = m0.dim();
    if n == 0 {
        return Err(Error::invalid("junction.n_sites", "must be at least 1"));
    }
    let scale = m0.scale();
    let dense = m0.to_dense();
    let eig = sorted_eigenvalues(&dense)?;
    let threshold = 1e3 * f64::EPSILON * scale;
    if min_separation(&eig) > threshold {
        return decompose_dense(&dense, scale, false);
    }
    warn!(
        "degenerate resonances; splitting the drift matrix diagonal by {DEGENERACY_SPLITTING:e} eV"
    );
    let mut split = dense;
    for k in 0..n {
        split[(k, k)] += I * (DEGENERACY_SPLITTING * k as f64);
    }
    let eig = sorted_eigenvalues(&split)?;
    if min_separation(&eig) <= threshold {
        return Err(Error::Defective("resonances remain degenerate after splitting".into()));
    }
    decompose_dense(&split, scale, true)
}

pub fn resonances(model: &JunctionModel) -> Result<ResonanceSet> {
    decompose(&build_m0(model))
}
