//! Scaled unscented transform.
//!
//! Sigma points are `mean` and `mean ± gamma * S[:, i]` where `S` is a lower
//! triangular factor of the covariance. Moments are reconstructed with the
//! usual single-index weights and mean-centred outer products.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

const SYMMETRY_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;
const JITTER: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnscentedError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mean component {0} is not finite")]
    NonFiniteMean(usize),
    #[error("covariance entry ({0}, {1}) is not finite")]
    NonFiniteCovariance(usize, usize),
    #[error("covariance is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("covariance is indefinite (minimum eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("covariance is indefinite at pivot {pivot} (pivot value {value})")]
    Indefinite { pivot: usize, value: f64 },
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("beta must be non-negative, got {0}")]
    BadBeta(f64),
    #[error("degenerate scaling: L + lambda = {0} must be positive")]
    DegenerateScaling(f64),
    #[error("expected {expected} output rows, got {got}")]
    RowCount { expected: usize, got: usize },
    #[error("function failed at sigma point {index}: {message}")]
    Function { index: usize, message: String },
}

/// A Gaussian described by its mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianVector {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianVector {
    /// Validates finiteness, symmetry (relative 1e-9) and positive
    /// semidefiniteness (eigenvalues >= -1e-9 * trace).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, UnscentedError> {
        let l = mean.len();
        if l == 0 {
            return Err(UnscentedError::ZeroDimension);
        }
        if cov.nrows() != l || cov.ncols() != l {
            return Err(UnscentedError::DimensionMismatch {
                expected: l,
                got: cov.nrows().max(cov.ncols()),
            });
        }
        if let Some(i) = mean.iter().position(|x| !x.is_finite()) {
            return Err(UnscentedError::NonFiniteMean(i));
        }
        check_covariance(&cov)?;
        Ok(Self { mean, cov })
    }

    /// A point mass at `mean`.
    pub fn certain(mean: DVector<f64>) -> Result<Self, UnscentedError> {
        let l = mean.len();
        Self::new(mean, DMatrix::zeros(l, l))
    }

    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
}

/// Symmetric PSD check used for every covariance entering the library.
pub fn check_covariance(cov: &DMatrix<f64>) -> Result<(), UnscentedError> {
    let l = cov.nrows();
    if cov.ncols() != l {
        return Err(UnscentedError::DimensionMismatch { expected: l, got: cov.ncols() });
    }
    for j in 0..l {
        for i in 0..l {
            if !cov[(i, j)].is_finite() {
                return Err(UnscentedError::NonFiniteCovariance(i, j));
            }
        }
    }
    let scale = cov.amax().max(f64::MIN_POSITIVE);
    for j in 0..l {
        for i in (j + 1)..l {
            if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(UnscentedError::NotSymmetric(i, j));
            }
        }
    }
    let trace = cov.trace();
    let sym = (cov + cov.transpose()) * 0.5;
    let min_eigenvalue = SymmetricEigen::new(sym).eigenvalues.min();
    if min_eigenvalue < -PSD_TOL * trace.abs() {
        return Err(UnscentedError::NotPsd { min_eigenvalue });
    }
    Ok(())
}

/// Scaling parameters and the weights derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct UtParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    dim: usize,
    lambda: f64,
    gamma: f64,
    weights_mean: Vec<f64>,
    weights_cov: Vec<f64>,
}

impl UtParams {
    pub const DEFAULT_ALPHA: f64 = 1.0;
    pub const DEFAULT_BETA: f64 = 2.0;
    pub const DEFAULT_KAPPA: f64 = 0.0;

    pub fn new(dim: usize, alpha: f64, beta: f64, kappa: f64) -> Result<Self, UnscentedError> {
        if dim == 0 {
            return Err(UnscentedError::ZeroDimension);
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(UnscentedError::BadAlpha(alpha));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(UnscentedError::BadBeta(beta));
        }
        let l = dim as f64;
        let lambda = alpha * alpha * (l + kappa) - l;
        let spread = l + lambda;
        if !(spread > 0.0) || !spread.is_finite() {
            return Err(UnscentedError::DegenerateScaling(spread));
        }
        let w0 = lambda / spread;
        let wi = 1.0 / (2.0 * spread);
        let mut weights_mean = vec![wi; 2 * dim + 1];
        weights_mean[0] = w0;
        let mut weights_cov = weights_mean.clone();
        weights_cov[0] = w0 + (1.0 - alpha * alpha + beta);
        Ok(Self {
            alpha,
            beta,
            kappa,
            dim,
            lambda,
            gamma: spread.sqrt(),
            weights_mean,
            weights_cov,
        })
    }

    /// alpha = 1, beta = 2, kappa = 0, so gamma = sqrt(L).
    pub fn with_defaults(dim: usize) -> Result<Self, UnscentedError> {
        Self::new(dim, Self::DEFAULT_ALPHA, Self::DEFAULT_BETA, Self::DEFAULT_KAPPA)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn num_points(&self) -> usize {
        2 * self.dim + 1
    }

    pub fn weights_mean(&self) -> &[f64] {
        &self.weights_mean
    }

    pub fn weights_cov(&self) -> &[f64] {
        &self.weights_cov
    }
}

/// Lower-triangular `S` with `S * S^T = cov`.
///
/// Plain Cholesky is tried first. If a pivot is not strictly positive the
/// factorization is redone on `cov + 1e-12 * trace * I`, and any pivot that is
/// still non-positive (but within the PSD tolerance) gets a zero column.
/// A pivot below `-1e-9 * trace` is reported as indefinite.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>, UnscentedError> {
    let l = cov.nrows();
    if cov.ncols() != l {
        return Err(UnscentedError::DimensionMismatch { expected: l, got: cov.ncols() });
    }
    let trace = cov.trace();
    let floor = -PSD_TOL * trace.abs();
    match cholesky_semidefinite(cov, floor, false) {
        Ok(s) => Ok(s),
        Err(Factorization::Indefinite(pivot, value)) => Err(UnscentedError::Indefinite { pivot, value }),
        Err(Factorization::Singular) => {
            let jitter = JITTER * trace.max(0.0);
            let mut reg = cov.clone();
            for i in 0..l {
                reg[(i, i)] += jitter;
            }
            cholesky_semidefinite(&reg, floor, true).map_err(|e| match e {
                Factorization::Indefinite(pivot, value) => UnscentedError::Indefinite { pivot, value },
                Factorization::Singular => unreachable!("zero pivots allowed on the regularized pass"),
            })
        }
    }
}

enum Factorization {
    Indefinite(usize, f64),
    Singular,
}

fn cholesky_semidefinite(a: &DMatrix<f64>, floor: f64, allow_zero: bool) -> Result<DMatrix<f64>, Factorization> {
    let l = a.nrows();
    let mut s = DMatrix::<f64>::zeros(l, l);
    for k in 0..l {
        let mut d = 0.5 * (a[(k, k)] + a[(k, k)]);
        for p in 0..k {
            d -= s[(k, p)] * s[(k, p)];
        }
        if d < floor {
            return Err(Factorization::Indefinite(k, d));
        }
        if d <= 0.0 {
            if !allow_zero {
                return Err(Factorization::Singular);
            }
            continue;
        }
        let root = d.sqrt();
        s[(k, k)] = root;
        for i in (k + 1)..l {
            let mut x = 0.5 * (a[(i, k)] + a[(k, i)]);
            for p in 0..k {
                x -= s[(i, p)] * s[(k, p)];
            }
            s[(i, k)] = x / root;
        }
    }
    Ok(s)
}

/// The `2L + 1` sigma points of a Gaussian, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet {
    pub points: DMatrix<f64>,
    pub params: UtParams,
}

impl SigmaPointSet {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }
}

pub fn generate_sigma_points(g: &GaussianVector, p: &UtParams) -> Result<SigmaPointSet, UnscentedError> {
    let l = g.dim();
    if p.dim() != l {
        return Err(UnscentedError::DimensionMismatch { expected: p.dim(), got: l });
    }
    let s = psd_factor(g.cov())?;
    let mut points = DMatrix::zeros(2 * l + 1, l);
    for c in 0..l {
        let mu = g.mean()[c];
        points[(0, c)] = mu;
        for i in 0..l {
            let offset = p.gamma() * s[(c, i)];
            points[(1 + i, c)] = mu + offset;
            points[(1 + l + i, c)] = mu - offset;
        }
    }
    Ok(SigmaPointSet { points, params: p.clone() })
}

/// Weighted mean and covariance of transformed sigma points (one per row).
/// The covariance is symmetrized but not otherwise checked: with a negative
/// centre weight it need not be PSD.
pub fn reconstruct_moments(outputs: &DMatrix<f64>, p: &UtParams) -> Result<GaussianVector, UnscentedError> {
    let n = p.num_points();
    if outputs.nrows() != n {
        return Err(UnscentedError::RowCount { expected: n, got: outputs.nrows() });
    }
    let d = outputs.ncols();
    let mut mean = DVector::zeros(d);
    for (i, w) in p.weights_mean().iter().enumerate() {
        mean += outputs.row(i).transpose() * *w;
    }
    let mut cov = DMatrix::zeros(d, d);
    for (i, w) in p.weights_cov().iter().enumerate() {
        let r = outputs.row(i).transpose() - &mean;
        cov += (&r * r.transpose()) * *w;
    }
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianVector::from_parts(mean, cov))
}

/// `sum_i wc[i] (x_i - x_mean)(y_i - y_mean)^T`.
pub fn cross_covariance(
    sigma: &SigmaPointSet,
    outputs: &DMatrix<f64>,
    output_mean: &DVector<f64>,
) -> Result<DMatrix<f64>, UnscentedError> {
    let p = &sigma.params;
    if outputs.nrows() != sigma.len() {
        return Err(UnscentedError::RowCount { expected: sigma.len(), got: outputs.nrows() });
    }
    let mut x_mean = DVector::zeros(sigma.points.ncols());
    for (i, w) in p.weights_mean().iter().enumerate() {
        x_mean += sigma.points.row(i).transpose() * *w;
    }
    let mut cross = DMatrix::zeros(sigma.points.ncols(), outputs.ncols());
    for (i, w) in p.weights_cov().iter().enumerate() {
        let dx = sigma.points.row(i).transpose() - &x_mean;
        let dy = outputs.row(i).transpose() - output_mean;
        cross += (dx * dy.transpose()) * *w;
    }
    Ok(cross)
}

/// Everything produced by one pass of the transform.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub output: GaussianVector,
    pub sigma_points: SigmaPointSet,
    /// Transformed sigma points, one per row.
    pub outputs: DMatrix<f64>,
    pub cross_cov: DMatrix<f64>,
}

pub fn propagate<F>(g: &GaussianVector, p: &UtParams, f: F) -> Result<Propagation, UnscentedError>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    try_propagate(g, p, |x| Ok::<_, std::convert::Infallible>(f(x)))
}

/// Like [`propagate`] for a fallible function; the first failure aborts with
/// the index of the offending sigma point.
pub fn try_propagate<F, E>(g: &GaussianVector, p: &UtParams, f: F) -> Result<Propagation, UnscentedError>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>, E>,
    E: std::fmt::Display,
{
    let sigma_points = generate_sigma_points(g, p)?;
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(sigma_points.len());
    for i in 0..sigma_points.len() {
        let y = f(&sigma_points.point(i)).map_err(|e| UnscentedError::Function {
            index: i,
            message: e.to_string(),
        })?;
        if let Some(first) = rows.first() {
            if first.len() != y.len() {
                return Err(UnscentedError::Function {
                    index: i,
                    message: format!("output length {} differs from {}", y.len(), first.len()),
                });
            }
        }
        rows.push(y);
    }
    let d = rows[0].len();
    let outputs = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let output = reconstruct_moments(&outputs, p)?;
    let cross_cov = cross_covariance(&sigma_points, &outputs, output.mean())?;
    Ok(Propagation { output, sigma_points, outputs, cross_cov })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn params_one_dim() {
        let p = UtParams::new(1, 1.0, 0.0, 2.0).unwrap();
        assert!(close(p.lambda(), 2.0, 1e-15));
        assert!(close(p.gamma(), 3f64.sqrt(), 1e-15));
        let wm = p.weights_mean();
        assert!(close(wm[0], 2.0 / 3.0, 1e-15));
        assert!(close(wm[1], 1.0 / 6.0, 1e-15));
        assert!(close(wm[2], 1.0 / 6.0, 1e-15));
        assert!(close(p.weights_cov()[0], 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn params_eight_dim_defaults() {
        let p = UtParams::with_defaults(8).unwrap();
        assert_eq!(p.lambda(), 0.0);
        assert!(close(p.gamma(), 8f64.sqrt(), 1e-15));
        assert_eq!(p.weights_mean()[0], 0.0);
        assert!(p.weights_mean()[1..].iter().all(|&w| w == 1.0 / 16.0));
        assert_eq!(p.weights_cov()[0], 2.0);
        assert!(close(p.weights_mean().iter().sum::<f64>(), 1.0, 1e-12));
    }

    #[test]
    fn params_rejections() {
        assert!(matches!(UtParams::new(2, 0.0, 2.0, 0.0), Err(UnscentedError::BadAlpha(_))));
        assert!(matches!(UtParams::new(2, 1.5, 2.0, 0.0), Err(UnscentedError::BadAlpha(_))));
        assert!(matches!(UtParams::new(2, 1.0, -1.0, 0.0), Err(UnscentedError::BadBeta(_))));
        assert!(matches!(UtParams::new(2, 1.0, 2.0, -2.0), Err(UnscentedError::DegenerateScaling(_))));
        assert!(matches!(UtParams::new(0, 1.0, 2.0, 0.0), Err(UnscentedError::ZeroDimension)));
    }

    #[test]
    fn factor_identity() {
        let s = psd_factor(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(s, DMatrix::identity(2, 2));
    }

    #[test]
    fn factor_isotropic_robot_cov() {
        let cov = DMatrix::from_diagonal_element(2, 2, 1.25);
        let s = psd_factor(&cov).unwrap();
        assert_eq!(s, DMatrix::from_diagonal_element(2, 2, 1.25f64.sqrt()));
    }

    #[test]
    fn factor_rank_deficient() {
        // rank one: [1 1; 1 1]
        let cov = DMatrix::from_element(2, 2, 1.0);
        let s = psd_factor(&cov).unwrap();
        assert_eq!(s[(0, 1)], 0.0);
        let err = (&s * s.transpose() - &cov).norm() / cov.norm();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn factor_zero_is_zero() {
        let s = psd_factor(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(s, DMatrix::zeros(3, 3));
    }

    #[test]
    fn factor_indefinite_names_pivot() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match psd_factor(&cov) {
            Err(UnscentedError::Indefinite { pivot: 1, value }) => assert!(close(value, -3.0, 1e-12)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            GaussianVector::new(DVector::zeros(2), cov),
            Err(UnscentedError::NotPsd { .. })
        ));
    }

    #[test]
    fn gaussian_rejects_asymmetric() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            GaussianVector::new(DVector::zeros(2), cov),
            Err(UnscentedError::NotSymmetric(1, 0))
        ));
    }

    #[test]
    fn unit_sigma_points() {
        // gamma = 1 needs L + lambda = 1: L = 1, alpha = 1, kappa = 0.
        let p = UtParams::new(1, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(p.gamma(), 1.0);
        let g = GaussianVector::new(DVector::from_element(1, 0.0), DMatrix::identity(1, 1)).unwrap();
        let sp = generate_sigma_points(&g, &p).unwrap();
        assert_eq!(sp.points.as_slice(), &[0.0, 1.0, -1.0]);
    }

    #[test]
    fn zero_covariance_collapses() {
        let g = GaussianVector::certain(DVector::from_vec(vec![1.0, -2.0, 3.5])).unwrap();
        let p = UtParams::with_defaults(3).unwrap();
        let sp = generate_sigma_points(&g, &p).unwrap();
        for i in 0..sp.len() {
            assert_eq!(sp.point(i), *g.mean());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let g = GaussianVector::certain(DVector::zeros(2)).unwrap();
        let p = UtParams::with_defaults(3).unwrap();
        assert!(matches!(
            generate_sigma_points(&g, &p),
            Err(UnscentedError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn constant_rows_reconstruct() {
        let p = UtParams::with_defaults(2).unwrap();
        let c = [4.0, -1.0, 0.5];
        let outputs = DMatrix::from_fn(5, 3, |_, j| c[j]);
        let g = reconstruct_moments(&outputs, &p).unwrap();
        for j in 0..3 {
            assert!(close(g.mean()[j], c[j], 1e-14));
        }
        assert!(g.cov().amax() < 1e-14);
        assert!(matches!(
            reconstruct_moments(&DMatrix::zeros(4, 3), &p),
            Err(UnscentedError::RowCount { expected: 5, got: 4 })
        ));
    }

    #[test]
    fn norm_of_certain_point() {
        let g = GaussianVector::certain(DVector::from_vec(vec![3.0, 4.0])).unwrap();
        let p = UtParams::with_defaults(2).unwrap();
        let out = propagate(&g, &p, |x| DVector::from_element(1, x.norm())).unwrap();
        assert!(close(out.output.mean()[0], 5.0, 1e-12));
        assert!(out.output.cov()[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn constant_function() {
        let g = GaussianVector::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::identity(2, 2)).unwrap();
        let p = UtParams::with_defaults(2).unwrap();
        let out = propagate(&g, &p, |_| DVector::from_vec(vec![7.0, 8.0])).unwrap();
        assert!(close(out.output.mean()[0], 7.0, 1e-12));
        assert!(close(out.output.mean()[1], 8.0, 1e-12));
        assert!(out.output.cov().amax() < 1e-12);
    }

    #[test]
    fn identity_and_cross_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let g = GaussianVector::new(DVector::from_vec(vec![1.0, -1.0]), cov.clone()).unwrap();
        let p = UtParams::with_defaults(2).unwrap();
        let out = propagate(&g, &p, |x| x.clone()).unwrap();
        assert!((out.output.mean() - g.mean()).amax() < 1e-12);
        assert!((out.output.cov() - &cov).norm() / cov.norm() < 1e-8);
        assert!((&out.cross_cov - &cov).norm() / cov.norm() < 1e-8);
    }

    #[test]
    fn failing_function_reports_index() {
        let g = GaussianVector::new(DVector::from_vec(vec![0.0]), DMatrix::identity(1, 1)).unwrap();
        let p = UtParams::with_defaults(1).unwrap();
        let err = try_propagate(&g, &p, |x| {
            if x[0] < 0.0 {
                Err("negative")
            } else {
                Ok(x.clone())
            }
        })
        .unwrap_err();
        assert_eq!(err, UnscentedError::Function { index: 2, message: "negative".into() });
    }
}
