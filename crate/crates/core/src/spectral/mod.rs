//! Eigenvalue-modulus splittings of unimodular integer matrices.
//!
//! For `A` in `GL_n(Z)`, `E(A)` is the sum of generalized eigenspaces with
//! `|λ| > 1 + tol_unit` and `F(A)` the sum of the rest. Eigenvalues in the
//! neutral band `||λ| - 1| <= tol_unit` always go to `F`, so `A^{-1}|_E` is a
//! strict contraction in spectral radius and the series built on `E`
//! are summable.

mod certificate;
mod charpoly;
mod intmatrix;

pub use certificate::{weak_hyperbolicity_certificate, word_matrix, CertificateVerdict, HyperbolicityCertificate};
pub use intmatrix::IntMatrix;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub const DEFAULT_TOL_UNIT: f64 = 1e-9;
/// Default tolerance for the splitting invariants (invariance, idempotence).
pub const DEFAULT_TOL_INV: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusClass {
    Expanding,
    Neutral,
    Contracting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvalue {
    pub value: Complex<f64>,
    pub modulus: f64,
    pub class: ModulusClass,
}

/// Eigenvalues with multiplicity, each classified against the unit circle.
#[derive(Debug, Clone)]
pub struct EigenData {
    pub eigenvalues: Vec<Eigenvalue>,
}

impl EigenData {
    pub fn count(&self, class: ModulusClass) -> usize {
        self.eigenvalues.iter().filter(|e| e.class == class).count()
    }

    pub fn has_neutral(&self) -> bool {
        self.count(ModulusClass::Neutral) > 0
    }
}

pub fn eigen_data(a: &IntMatrix, tol_unit: f64) -> Result<EigenData> {
    let ev = charpoly::eigenvalues(a).map_err(|e| match e {
        Error::EigenNonConvergence { .. } => Error::EigenNonConvergence { matrix: a.to_string() },
        other => other,
    })?;
    let mut eigenvalues = Vec::with_capacity(a.n());
    for (z, mult) in ev {
        let modulus = z.norm();
        let class = if modulus > 1.0 + tol_unit {
            ModulusClass::Expanding
        } else if modulus < 1.0 - tol_unit {
            ModulusClass::Contracting
        } else {
            ModulusClass::Neutral
        };
        for _ in 0..mult {
            eigenvalues.push(Eigenvalue { value: z, modulus, class });
        }
    }
    eigenvalues.sort_by(|x, y| y.modulus.total_cmp(&x.modulus).then(y.value.im.total_cmp(&x.value.im)));
    Ok(EigenData { eigenvalues })
}

/// `true` iff no eigenvalue lies in the neutral band.
pub fn is_hyperbolic(a: &IntMatrix, tol_unit: f64) -> Result<bool> {
    Ok(!eigen_data(a, tol_unit)?.has_neutral())
}

/// `R^n = E ⊕ F` with `E` expanding, `F` the rest (neutral included).
#[derive(Debug, Clone)]
pub struct Splitting {
    matrix: IntMatrix,
    /// Orthonormal basis of `E`, as columns.
    e_basis: DMatrix<f64>,
    /// Orthonormal basis of `F`, as columns.
    f_basis: DMatrix<f64>,
    /// `dim E x n`; coordinates along `E` of the decomposition, so `proj_e = e_basis * e_coords`.
    e_coords: DMatrix<f64>,
    proj_e: DMatrix<f64>,
    modulus_gap: Option<f64>,
}

impl Splitting {
    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn dim_e(&self) -> usize {
        self.e_basis.ncols()
    }

    pub fn dim_f(&self) -> usize {
        self.f_basis.ncols()
    }

    pub fn e_basis(&self) -> &DMatrix<f64> {
        &self.e_basis
    }

    pub fn f_basis(&self) -> &DMatrix<f64> {
        &self.f_basis
    }

    pub fn e_coords(&self) -> &DMatrix<f64> {
        &self.e_coords
    }

    pub fn proj_e(&self) -> &DMatrix<f64> {
        &self.proj_e
    }

    /// Smallest `|λ|` assigned to `E`; `None` when `E = 0`.
    pub fn modulus_gap(&self) -> Option<f64> {
        self.modulus_gap
    }

    /// `A^{-1}` restricted to `E`, in the orthonormal `e_basis` coordinates.
    pub fn restricted_inverse(&self) -> DMatrix<f64> {
        &self.e_coords * self.matrix.inverse().to_f64() * &self.e_basis
    }

    /// Largest defect of `A·E ⊆ E`, `A·F ⊆ F` over basis vectors.
    pub fn invariance_residual(&self) -> f64 {
        let a = self.matrix.to_f64();
        let id = DMatrix::<f64>::identity(self.n(), self.n());
        let ae = &a * &self.e_basis;
        let af = &a * &self.f_basis;
        let res_e = (&id - &self.proj_e) * ae;
        let res_f = &self.proj_e * af;
        res_e.abs().max().max(res_f.abs().max())
    }

    pub fn idempotence_residual(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        (&self.proj_e * &self.proj_e - &self.proj_e).abs().max()
    }
}

/// Real coefficients (low to high) of `∏ (x - λ)` over the given roots.
fn real_poly(roots: &[Complex<f64>]) -> Vec<f64> {
    let mut c = vec![Complex::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= ci * r;
        }
        c = next;
    }
    c.into_iter().map(|z| z.re).collect()
}

fn poly_at_matrix(c: &[f64], a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for &ci in c.iter().rev() {
        p = &p * a + DMatrix::<f64>::identity(n, n) * ci;
    }
    p
}

/// Orthonormal basis (columns) of the `dim`-dimensional numerical kernel.
fn kernel(m: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let n = m.ncols();
    if dim == 0 {
        return DMatrix::zeros(n, 0);
    }
    if dim == n {
        return DMatrix::identity(n, n);
    }
    let scale = m.abs().max().max(1.0);
    let svd = (m / scale).svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut basis = DMatrix::zeros(n, dim);
    for (col, &i) in idx.iter().take(dim).enumerate() {
        basis.set_column(col, &v_t.row(i).transpose());
    }
    basis
}

pub fn splitting(a: &IntMatrix, tol_unit: f64) -> Result<Splitting> {
    let data = eigen_data(a, tol_unit)?;
    let n = a.n();
    let (exp, rest): (Vec<&Eigenvalue>, Vec<&Eigenvalue>) =
        data.eigenvalues.iter().partition(|e| e.class == ModulusClass::Expanding);
    let af = a.to_f64();
    let e_basis = kernel(&poly_at_matrix(&real_poly(&exp.iter().map(|e| e.value).collect::<Vec<_>>()), &af), exp.len());
    let f_basis =
        kernel(&poly_at_matrix(&real_poly(&rest.iter().map(|e| e.value).collect::<Vec<_>>()), &af), rest.len());
    let mut basis = DMatrix::zeros(n, n);
    basis.columns_mut(0, exp.len()).copy_from(&e_basis);
    basis.columns_mut(exp.len(), rest.len()).copy_from(&f_basis);
    let inv = basis
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::EigenNonConvergence { matrix: format!("{a} (E and F bases are not complementary)") })?;
    let e_coords = inv.rows(0, exp.len()).into_owned();
    let proj_e = &e_basis * &e_coords;
    let modulus_gap = exp.iter().map(|e| e.modulus).reduce(f64::min);
    Ok(Splitting { matrix: a.clone(), e_basis, f_basis, e_coords, proj_e, modulus_gap })
}

/// `‖A^{-i}|_E‖` for `i = 1..=N` and a certified geometric tail bound.
#[derive(Debug, Clone)]
pub struct RestrictedNorms {
    /// `norms[i-1] = ‖A^{-i}|_E‖`.
    pub norms: Vec<f64>,
    /// Power `k` with `q = ‖A^{-k}|_E‖ < 1`; 0 when `E = 0`.
    pub k: usize,
    pub q: f64,
    /// `max(1, ‖A^{-r}|_E‖)` over `r < k`.
    pub prefix_max: f64,
}

impl RestrictedNorms {
    /// Upper bound on `Σ_{i > n} ‖A^{-i}|_E‖` by writing `i = s k + r`, `r < k`,
    /// and bounding each term by `prefix_max · q^s`.
    pub fn tail_after(&self, n: usize) -> f64 {
        if self.k == 0 {
            return 0.0;
        }
        let k = self.k;
        let start = n + 1;
        let s0 = start / k;
        let first_block = (s0 + 1) * k - start;
        let q = self.q;
        self.prefix_max * (first_block as f64 * q.powi(s0 as i32) + k as f64 * q.powi(s0 as i32 + 1) / (1.0 - q))
    }

    /// Upper bound on the full sum `Σ_{i >= 1} ‖A^{-i}|_E‖`.
    pub fn total_bound(&self) -> f64 {
        if self.k == 0 {
            return 0.0;
        }
        let n = self.norms.len();
        self.norms.iter().sum::<f64>() + self.tail_after(n)
    }
}

pub fn restricted_inverse_norms(s: &Splitting, n: usize) -> Result<RestrictedNorms> {
    if s.dim_e() == 0 {
        return Ok(RestrictedNorms { norms: Vec::new(), k: 0, q: 0.0, prefix_max: 0.0 });
    }
    let b = s.restricted_inverse();
    let mut p = b.clone();
    let mut norms = Vec::with_capacity(n);
    for _ in 0..n {
        norms.push(p.singular_values().max());
        p = &p * &b;
    }
    let k = norms.iter().position(|&c| c < 1.0).map(|i| i + 1).ok_or(Error::TailNotSummable { max_power: n })?;
    let q = norms[k - 1];
    let prefix_max = norms[..k - 1].iter().copied().fold(1.0, f64::max);
    Ok(RestrictedNorms { norms, k, q, prefix_max })
}
