//! Finite-dimensional complex linear-algebra substrate: state vectors,
//! operators, density operators, tensor products, partial traces and
//! deterministic unitary completion.
//!
//! All spaces are explicit full tensor-product spaces; factor dimensions are
//! carried alongside the flat data so that partial traces and permutation
//! operators can address individual factors. Symmetric and antisymmetric
//! sectors are represented by projectors acting inside the full space.

use ndarray::linalg::kron;
use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::{Error, Result, DEGENERACY_THRESHOLD, TOL_OPERATOR, TOL_VECTOR};

/// Residual-norm threshold below which a candidate basis vector is skipped
/// during Gram-Schmidt completion.
const GRAM_SCHMIDT_SKIP: f64 = 1e-8;

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Largest entry magnitude of a matrix; zero for empty matrices.
pub fn max_abs(m: &Array2<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Row-major strides for a factor-dimension list.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets of every multi-index combination over the selected factors,
/// in row-major (odometer) order of the selected dims.
fn factor_offsets(dims: &[usize], selected: &[usize]) -> Vec<usize> {
    let all_strides = strides(dims);
    let sel_dims: Vec<usize> = selected.iter().map(|&k| dims[k]).collect();
    let sel_strides: Vec<usize> = selected.iter().map(|&k| all_strides[k]).collect();
    let total = product(&sel_dims);
    let mut offsets = Vec::with_capacity(total);
    let mut idx = vec![0usize; sel_dims.len()];
    for _ in 0..total {
        offsets.push(idx.iter().zip(&sel_strides).map(|(i, s)| i * s).sum());
        for pos in (0..idx.len()).rev() {
            idx[pos] += 1;
            if idx[pos] < sel_dims[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
    offsets
}

/// A vector in a tensor-product space, carrying its factor dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amplitudes: Array1<Complex64>,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amplitudes: Array1<Complex64>) -> Result<Self> {
        if product(&dims) != amplitudes.len() || dims.is_empty() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "state vector has {} amplitudes but factor dims {:?}",
                    amplitudes.len(),
                    dims
                ),
            });
        }
        Ok(Self { dims, amplitudes })
    }

    /// Canonical basis vector `e_index` of a single factor of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[index] = Complex64::ONE;
        Self {
            dims: vec![dim],
            amplitudes,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    /// Reinterprets the factor structure without touching amplitudes.
    pub fn reshaped(&self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.amplitudes.clone())
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= TOL_VECTOR
    }

    /// Inner product `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            dims: self.dims.clone(),
            amplitudes: self.amplitudes.mapv(|z| z * factor),
        }
    }

    /// Kronecker product; factor dims concatenate with `self` first.
    pub fn tensor(&self, other: &Self) -> Self {
        let m = other.total_dim();
        let mut amplitudes = Array1::zeros(self.total_dim() * m);
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in other.amplitudes.iter().enumerate() {
                amplitudes[i * m + j] = a * b;
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims, amplitudes }
    }

    /// Projection to the unit sphere. Norms below the degeneracy threshold
    /// signal annihilation (e.g. fermionic exclusion) rather than roundoff.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm <= DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateVector {
                norm,
                threshold: DEGENERACY_THRESHOLD,
            });
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    /// The pure-state projector `|v><v|`.
    pub fn outer(&self) -> Array2<Complex64> {
        let n = self.total_dim();
        Array2::from_shape_fn((n, n), |(i, j)| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        })
    }
}

/// `sum_k coefficients[k] * vectors[k]`; all vectors must share dims.
pub fn linear_combination(terms: &[(Complex64, &StateVector)]) -> Result<StateVector> {
    let (_, first) = terms.first().ok_or_else(|| Error::DimensionMismatch {
        context: "linear combination of zero terms".into(),
    })?;
    let mut amplitudes = Array1::zeros(first.total_dim());
    for (c, v) in terms {
        if v.dims() != first.dims() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "linear combination mixes dims {:?} and {:?}",
                    first.dims(),
                    v.dims()
                ),
            });
        }
        amplitudes = amplitudes + v.amplitudes.mapv(|z| z * *c);
    }
    StateVector::new(first.dims.clone(), amplitudes)
}

/// A linear map between tensor-product spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dims_in: Vec<usize>,
    dims_out: Vec<usize>,
    entries: Array2<Complex64>,
}

impl Operator {
    pub fn new(dims_in: Vec<usize>, dims_out: Vec<usize>, entries: Array2<Complex64>) -> Result<Self> {
        if entries.nrows() != product(&dims_out) || entries.ncols() != product(&dims_in) {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "operator shape {:?} does not match dims_out {:?} x dims_in {:?}",
                    entries.dim(),
                    dims_out,
                    dims_in
                ),
            });
        }
        Ok(Self {
            dims_in,
            dims_out,
            entries,
        })
    }

    /// Square operator on a single space.
    pub fn square(dims: Vec<usize>, entries: Array2<Complex64>) -> Result<Self> {
        Self::new(dims.clone(), dims, entries)
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = product(&dims);
        Self {
            dims_in: dims.clone(),
            dims_out: dims,
            entries: Array2::eye(n),
        }
    }

    pub fn dims_in(&self) -> &[usize] {
        &self.dims_in
    }

    pub fn dims_out(&self) -> &[usize] {
        &self.dims_out
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dims_in: self.dims_out.clone(),
            dims_out: self.dims_in.clone(),
            entries: self.entries.t().mapv(|z| z.conj()),
        }
    }

    /// Kronecker product; factor dims concatenate with `self` first.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims_in = self.dims_in.clone();
        dims_in.extend_from_slice(&other.dims_in);
        let mut dims_out = self.dims_out.clone();
        dims_out.extend_from_slice(&other.dims_out);
        Self {
            dims_in,
            dims_out,
            entries: kron(&self.entries, &other.entries),
        }
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if product(&self.dims_in) != v.total_dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "operator expects dimension {}, vector has {}",
                    product(&self.dims_in),
                    v.total_dim()
                ),
            });
        }
        StateVector::new(self.dims_out.clone(), self.entries.dot(v.amplitudes()))
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if product(&self.dims_in) != product(&other.dims_out) {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "cannot compose: left expects {}, right produces {}",
                    product(&self.dims_in),
                    product(&other.dims_out)
                ),
            });
        }
        Ok(Self {
            dims_in: other.dims_in.clone(),
            dims_out: self.dims_out.clone(),
            entries: self.entries.dot(&other.entries),
        })
    }

    /// Max-entry norm of `M - M†`; zero for exactly Hermitian operators.
    pub fn hermiticity_residual(&self) -> f64 {
        max_abs(&(&self.entries - &self.adjoint().entries))
    }

    pub fn is_hermitian(&self) -> bool {
        self.dims_in == self.dims_out && self.hermiticity_residual() <= TOL_OPERATOR
    }

    /// Max-entry norm of `U†U - I`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.entries.ncols();
        let gram = self.adjoint().entries.dot(&self.entries);
        max_abs(&(&gram - &Array2::<Complex64>::eye(n)))
    }

    pub fn is_unitary(&self) -> bool {
        self.entries.is_square() && self.unitarity_residual() <= TOL_OPERATOR
    }

    /// `<v|M v>` without further checks; callers wanting real expectations
    /// should verify Hermiticity first.
    pub fn expectation(&self, v: &StateVector) -> Result<Complex64> {
        Ok(v.inner(&self.apply(v)?))
    }
}

/// A trace-one positive operator on a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    entries: Array2<Complex64>,
}

impl DensityOperator {
    /// Validating constructor: checks shape, Hermiticity, unit trace and
    /// positive semidefiniteness (eigenvalues >= -tolerance).
    pub fn new(dims: Vec<usize>, entries: Array2<Complex64>) -> Result<Self> {
        let candidate = Self::trusted(dims, entries)?;
        let eigenvalues = hermitian_eigenvalues(&candidate.entries)?;
        if let Some(lambda) = eigenvalues.iter().find(|&&x| x < -TOL_OPERATOR) {
            return Err(Error::InvalidDensity {
                reason: format!("negative eigenvalue {lambda:.3e}"),
            });
        }
        Ok(candidate)
    }

    /// Constructor for matrices positive by construction (pure projectors,
    /// convex mixtures, conjugations, partial traces, tensor products).
    /// Cheap invariants are still enforced.
    pub(crate) fn trusted(dims: Vec<usize>, entries: Array2<Complex64>) -> Result<Self> {
        let n = product(&dims);
        if entries.dim() != (n, n) || dims.is_empty() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "density operator shape {:?} does not match dims {:?}",
                    entries.dim(),
                    dims
                ),
            });
        }
        let herm = max_abs(&(&entries - &entries.t().mapv(|z| z.conj())));
        if herm > TOL_OPERATOR {
            return Err(Error::InvalidDensity {
                reason: format!("Hermiticity residual {herm:.3e}"),
            });
        }
        let trace: Complex64 = entries.diag().iter().sum();
        if (trace.re - 1.0).abs() > TOL_OPERATOR || trace.im.abs() > TOL_OPERATOR {
            return Err(Error::InvalidDensity {
                reason: format!("trace is {trace} instead of 1"),
            });
        }
        Ok(Self { dims, entries })
    }

    /// `|v><v|` for a normalised vector.
    pub fn from_pure(v: &StateVector) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > TOL_VECTOR {
            return Err(Error::NotNormalized { norm });
        }
        Self::trusted(v.dims().to_vec(), v.outer())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().iter().sum()
    }

    /// Reinterprets the factor structure without touching entries.
    pub fn reshaped(&self, dims: Vec<usize>) -> Result<Self> {
        if product(&dims) != self.total_dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "cannot refactor total dimension {} as {:?}",
                    self.total_dim(),
                    dims
                ),
            });
        }
        Ok(Self {
            dims,
            entries: self.entries.clone(),
        })
    }

    /// Kronecker product; factor dims concatenate with `self` first.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            entries: kron(&self.entries, &other.entries),
        }
    }

    /// Standard partial trace retaining the factors listed in `keep`
    /// (ascending, deduplicated). Trace is preserved.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::NothingRetained);
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.iter().any(|&k| k >= self.dims.len()) {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "keep set {:?} exceeds factor count {}",
                    keep,
                    self.dims.len()
                ),
            });
        }
        let traced: Vec<usize> = (0..self.dims.len()).filter(|k| !keep.contains(k)).collect();
        let kept_offsets = factor_offsets(&self.dims, &keep);
        let traced_offsets = factor_offsets(&self.dims, &traced);
        let out_dims: Vec<usize> = keep.iter().map(|&k| self.dims[k]).collect();
        let out_total = product(&out_dims);
        let mut out = Array2::<Complex64>::zeros((out_total, out_total));
        for (r, &row_base) in kept_offsets.iter().enumerate() {
            for (c, &col_base) in kept_offsets.iter().enumerate() {
                let mut acc = Complex64::ZERO;
                for &t in &traced_offsets {
                    acc += self.entries[(row_base + t, col_base + t)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(Self {
            dims: out_dims,
            entries: out,
        })
    }

    /// `U * rho * U†` for unitary `U`.
    pub fn conjugated_by(&self, u: &Operator) -> Result<Self> {
        let residual = u.unitarity_residual();
        if residual > TOL_OPERATOR {
            return Err(Error::NotUnitary { residual });
        }
        if product(u.dims_in()) != self.total_dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "unitary acts on dimension {}, state has {}",
                    product(u.dims_in()),
                    self.total_dim()
                ),
            });
        }
        let entries = u.entries().dot(&self.entries).dot(&u.adjoint().entries);
        Ok(Self {
            dims: u.dims_out().to_vec(),
            entries,
        })
    }

    /// Largest entrywise distance to another operator of equal total size.
    pub fn max_entry_distance(&self, other: &Self) -> f64 {
        max_abs(&(&self.entries - &other.entries))
    }
}

/// Extends the map `inputs[i] -> images[i]` to a full unitary.
///
/// Both families must be orthonormal within the operator tolerance. The
/// extension on the orthocomplement is produced by Gram-Schmidt over the
/// canonical basis vectors in index order (candidates with residual norm
/// below 1e-8 are skipped), which makes the result deterministic:
/// identical input produces a bit-identical matrix.
pub fn complete_to_unitary(
    pairs: &[(StateVector, StateVector)],
    dims: &[usize],
) -> Result<Operator> {
    let d = product(dims);
    for (i, (input, image)) in pairs.iter().enumerate() {
        for (v, label) in [(input, "input"), (image, "image")] {
            if v.total_dim() != d {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "{label} vector {i} has dimension {}, expected {}",
                        v.total_dim(),
                        d
                    ),
                });
            }
        }
    }
    let sides: [(&'static str, Vec<&StateVector>); 2] = [
        ("input", pairs.iter().map(|p| &p.0).collect()),
        ("image", pairs.iter().map(|p| &p.1).collect()),
    ];
    for (label, family) in &sides {
        for i in 0..family.len() {
            for j in i..family.len() {
                let inner = family[i].inner(family[j]);
                let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
                if (inner - expected).norm() > TOL_OPERATOR {
                    return Err(Error::NotOrthonormal {
                        side: label,
                        i,
                        j,
                        inner,
                    });
                }
            }
        }
    }

    let inputs: Vec<Array1<Complex64>> = pairs.iter().map(|p| p.0.amplitudes.clone()).collect();
    let images: Vec<Array1<Complex64>> = pairs.iter().map(|p| p.1.amplitudes.clone()).collect();
    let input_basis = complete_basis(inputs, d);
    let image_basis = complete_basis(images, d);
    debug_assert_eq!(input_basis.len(), d);
    debug_assert_eq!(image_basis.len(), d);

    let mut entries = Array2::<Complex64>::zeros((d, d));
    for (u, v) in input_basis.iter().zip(&image_basis) {
        for r in 0..d {
            for c in 0..d {
                entries[(r, c)] += v[r] * u[c].conj();
            }
        }
    }
    Operator::new(dims.to_vec(), dims.to_vec(), entries)
}

/// Completes an orthonormal family to a basis of C^d by Gram-Schmidt over
/// canonical basis vectors in index order.
fn complete_basis(mut basis: Vec<Array1<Complex64>>, d: usize) -> Vec<Array1<Complex64>> {
    for j in 0..d {
        if basis.len() == d {
            break;
        }
        let mut candidate = Array1::<Complex64>::zeros(d);
        candidate[j] = Complex64::ONE;
        // Two projection passes keep the completion orthogonal to working
        // precision even when the candidate nearly lies in the span.
        for _ in 0..2 {
            for b in &basis {
                let overlap: Complex64 = b.iter().zip(candidate.iter()).map(|(x, y)| x.conj() * y).sum();
                candidate = candidate - b.mapv(|z| z * overlap);
            }
        }
        let norm = candidate.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm >= GRAM_SCHMIDT_SKIP {
            basis.push(candidate.mapv(|z| z / norm));
        }
    }
    basis
}

/// Eigenvalues of a Hermitian matrix, ascending, by cyclic complex Jacobi
/// rotations. Deterministic; intended for the desk-scale dimensions this
/// crate works at.
pub fn hermitian_eigenvalues(m: &Array2<Complex64>) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: format!("eigenvalues of non-square matrix {:?}", m.dim()),
        });
    }
    let residual = max_abs(&(m - &m.t().mapv(|z| z.conj())));
    if residual > 1e-8 {
        return Err(Error::NotHermitian { residual });
    }
    let n = m.nrows();
    let mut a = m.clone();
    let scale = max_abs(&a).max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                if g.norm() <= 1e-300 {
                    continue;
                }
                let phase = g / g.norm();
                let alpha = a[(p, p)].re;
                let beta = a[(q, q)].re;
                // Rotation angle for the phase-aligned real 2x2 block.
                let tau = (beta - alpha) / (2.0 * g.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J differs from the identity only in rows/columns p and q:
                // J[p,p] = c, J[p,q] = s,
                // J[q,p] = -s*conj(phase), J[q,q] = c*conj(phase).
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * phase.conj() * s;
                    a[(i, q)] = aip * s + aiq * phase.conj() * c;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * phase * s;
                    a[(q, j)] = apj * s + aqj * phase * c;
                }
            }
        }
    }
    let mut eigenvalues: Vec<f64> = a.diag().iter().map(|z| z.re).collect();
    eigenvalues.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eigenvalues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_tensor_basis_is_product_basis() {
        let a = StateVector::basis(2, 0);
        let b = StateVector::basis(2, 0);
        let t = a.tensor(&b);
        assert_eq!(t.dims(), &[2, 2]);
        assert_eq!(t.amplitudes()[0], Complex64::ONE);
        assert!(t.amplitudes().iter().skip(1).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = Operator::identity(vec![2]);
        let i4 = i2.tensor(&i2);
        assert_eq!(i4.entries(), &Array2::<Complex64>::eye(4));
        assert_eq!(i4.dims_in(), &[2, 2]);
    }

    #[test]
    fn normalize_scales_and_rejects_zero() {
        let v = StateVector::basis(3, 0).scaled(c(2.0, 0.0));
        let n = v.normalized().unwrap();
        assert_abs_diff_eq!(n.norm(), 1.0, epsilon = 1e-15);
        assert_eq!(n.amplitudes()[0], Complex64::ONE);

        let zero = StateVector::new(vec![3], Array1::zeros(3)).unwrap();
        match zero.normalized() {
            Err(Error::DegenerateVector { .. }) => {}
            other => panic!("expected degenerate vector, got {other:?}"),
        }
    }

    #[test]
    fn partial_trace_keep_all_is_identity() {
        let v = StateVector::basis(2, 0)
            .tensor(&StateVector::basis(2, 1))
            .normalized()
            .unwrap();
        let rho = DensityOperator::from_pure(&v).unwrap();
        let back = rho.partial_trace(&[0, 1]).unwrap();
        assert_eq!(back.entries(), rho.entries());
    }

    #[test]
    fn partial_trace_rejects_empty_keep() {
        let rho = DensityOperator::from_pure(&StateVector::basis(2, 0)).unwrap();
        assert_eq!(rho.partial_trace(&[]), Err(Error::NothingRetained));
    }

    #[test]
    fn completion_of_empty_list_is_identity() {
        let u = complete_to_unitary(&[], &[3]).unwrap();
        assert_eq!(u.entries(), &Array2::<Complex64>::eye(3));
    }

    #[test]
    fn completion_of_single_pair_is_swap() {
        // Hand Gram-Schmidt: inputs complete to {e0, e1}, images to {e1, e0},
        // so U = |e1><e0| + |e0><e1|.
        let pairs = [(StateVector::basis(2, 0), StateVector::basis(2, 1))];
        let u = complete_to_unitary(&pairs, &[2]).unwrap();
        let expected = Array2::from_shape_vec(
            (2, 2),
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(u.entries(), &expected);
    }

    #[test]
    fn completion_rejects_non_orthonormal_inputs() {
        let v = StateVector::basis(2, 0);
        let pairs = [
            (v.clone(), StateVector::basis(2, 0)),
            (v, StateVector::basis(2, 1)),
        ];
        match complete_to_unitary(&pairs, &[2]) {
            Err(Error::NotOrthonormal { side: "input", i: 0, j: 1, .. }) => {}
            other => panic!("expected input orthonormality failure, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_reproduces_known_spectra() {
        // diag(3, -1, 2) permuted through a similarity the solver must undo.
        let m = Array2::from_shape_vec(
            (2, 2),
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let ev = hermitian_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-12);

        let m = Array2::from_shape_vec(
            (2, 2),
            vec![c(1.0, 0.0), c(0.0, -2.0), c(0.0, 2.0), c(1.0, 0.0)],
        )
        .unwrap();
        let ev = hermitian_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn density_constructor_rejects_indefinite_matrices() {
        // Hermitian, trace one, but with a negative eigenvalue.
        let m = Array2::from_shape_vec(
            (2, 2),
            vec![c(1.5, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-0.5, 0.0)],
        )
        .unwrap();
        match DensityOperator::new(vec![2], m) {
            Err(Error::InvalidDensity { reason }) => {
                assert!(reason.contains("negative eigenvalue"), "{reason}");
            }
            other => panic!("expected invalid density, got {other:?}"),
        }
    }
}
