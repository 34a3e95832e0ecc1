//! The premeasurement coupling for a discrete observable: a unitary mapping
//! `eigenstate x ready -> post-state x pointer`, the outcome probabilities
//! and conditional post-states it induces, and the objectification check.
//!
//! The coupling alone registers eigenstate inputs faithfully but leaves a
//! superposition input in a pure entangled state, whose apparatus marginal
//! generally has pointer-basis off-diagonals and whose decomposition carries
//! no preparation provenance. Both objectification conditions are testable
//! here; the repaired dynamics lives in [`crate::registration`].

use ndarray::Array2;
use num_complex::Complex64;

use crate::gemenge::GemengeState;
use crate::hilbert::{
    complete_to_unitary, linear_combination, max_abs, DensityOperator, Operator, StateVector,
};
use crate::{Error, Result, DEGENERACY_THRESHOLD, TOL_OPERATOR, TOL_VECTOR};

/// Eigenvalues and a grouped orthonormal eigenvector family of a discrete
/// observable.
///
/// A *complete* structure spans the whole system space. A *partial* one
/// spans a subspace; it arises when a finite grid cannot host a complete
/// family whose post-states all fit inside disjoint detector regions, and
/// callers are then responsible for keeping inputs inside the span (see
/// [`Self::span_projector`]).
#[derive(Debug, Clone)]
pub struct EigenStructure {
    eigenvalues: Vec<f64>,
    groups: Vec<Vec<StateVector>>,
    dim: usize,
    complete: bool,
}

impl EigenStructure {
    /// A complete structure: the family must resolve the identity.
    pub fn new(eigenvalues: Vec<f64>, groups: Vec<Vec<StateVector>>) -> Result<Self> {
        let dim = groups
            .first()
            .and_then(|g| g.first())
            .map(|v| v.total_dim())
            .ok_or_else(|| Error::InvalidModel {
                reason: "eigenstructure needs at least one eigenvector".into(),
            })?;
        Self::validate(&eigenvalues, &groups, dim, true)?;
        Ok(Self {
            eigenvalues,
            groups,
            dim,
            complete: true,
        })
    }

    /// A partial structure spanning a subspace of `C^dim`.
    pub fn partial(eigenvalues: Vec<f64>, groups: Vec<Vec<StateVector>>, dim: usize) -> Result<Self> {
        Self::validate(&eigenvalues, &groups, dim, false)?;
        let complete = groups.iter().map(|g| g.len()).sum::<usize>() == dim;
        Ok(Self {
            eigenvalues,
            groups,
            dim,
            complete,
        })
    }

    fn validate(
        eigenvalues: &[f64],
        groups: &[Vec<StateVector>],
        dim: usize,
        require_complete: bool,
    ) -> Result<()> {
        if eigenvalues.len() != groups.len() || groups.is_empty() {
            return Err(Error::InvalidModel {
                reason: format!(
                    "{} eigenvalues for {} eigenvector groups",
                    eigenvalues.len(),
                    groups.len()
                ),
            });
        }
        for k in 0..eigenvalues.len() {
            if groups[k].is_empty() {
                return Err(Error::InvalidModel {
                    reason: format!("eigenvalue {k} has no eigenvectors"),
                });
            }
            for m in (k + 1)..eigenvalues.len() {
                if (eigenvalues[k] - eigenvalues[m]).abs() <= 1e-12 {
                    return Err(Error::InvalidModel {
                        reason: format!(
                            "eigenvalues {k} and {m} coincide ({})",
                            eigenvalues[k]
                        ),
                    });
                }
            }
        }
        let flat: Vec<&StateVector> = groups.iter().flatten().collect();
        if flat.len() > dim {
            return Err(Error::InvalidModel {
                reason: format!("{} eigenvectors cannot be orthonormal in dim {dim}", flat.len()),
            });
        }
        for (i, v) in flat.iter().enumerate() {
            if v.total_dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "eigenvector {i} has dimension {}, expected {dim}",
                        v.total_dim()
                    ),
                });
            }
            for (j, w) in flat.iter().enumerate().skip(i) {
                let inner = v.inner(w);
                let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
                if (inner - expected).norm() > TOL_OPERATOR {
                    return Err(Error::NotOrthonormal {
                        side: "eigenvector",
                        i,
                        j,
                        inner,
                    });
                }
            }
        }
        if require_complete {
            let mut resolution = Array2::<Complex64>::zeros((dim, dim));
            for v in &flat {
                resolution = resolution + v.outer();
            }
            let residual = max_abs(&(&resolution - &Array2::<Complex64>::eye(dim)));
            if residual > TOL_OPERATOR {
                return Err(Error::InvalidModel {
                    reason: format!(
                        "eigenvector family does not resolve the identity: residual {residual:.3e}"
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn groups(&self) -> &[Vec<StateVector>] {
        &self.groups
    }

    pub fn outcome_count(&self) -> usize {
        self.groups.len()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// `P_k = sum_l |phi_kl><phi_kl|`.
    pub fn spectral_projector(&self, k: usize) -> Operator {
        let mut entries = Array2::<Complex64>::zeros((self.dim, self.dim));
        for v in &self.groups[k] {
            entries = entries + v.outer();
        }
        Operator::square(vec![self.dim], entries).expect("square by construction")
    }

    /// Projector onto the span of the whole family.
    pub fn span_projector(&self) -> Operator {
        let mut entries = Array2::<Complex64>::zeros((self.dim, self.dim));
        for v in self.groups.iter().flatten() {
            entries = entries + v.outer();
        }
        Operator::square(vec![self.dim], entries).expect("square by construction")
    }
}

/// The premeasurement data: eigenstructure, apparatus ready state, pointer
/// states, post-states, and the explicit unitary extension of
/// `phi_kl x ready -> post_kl x pointer_k`.
#[derive(Debug, Clone)]
pub struct MeasurementCoupling {
    eig: EigenStructure,
    apparatus_ready: StateVector,
    pointer_states: Vec<StateVector>,
    post_states: Vec<Vec<StateVector>>,
    unitary: Operator,
}

impl MeasurementCoupling {
    /// Builds the coupling from explicit post-states. Within each outcome the
    /// post-states must be orthonormal; across outcomes they are free to
    /// overlap (the pointers keep the image family orthonormal).
    pub fn new(
        eig: EigenStructure,
        apparatus_ready: StateVector,
        pointer_states: Vec<StateVector>,
        post_states: Vec<Vec<StateVector>>,
    ) -> Result<Self> {
        let ready_norm = apparatus_ready.norm();
        if (ready_norm - 1.0).abs() > TOL_VECTOR {
            return Err(Error::NotNormalized { norm: ready_norm });
        }
        let apparatus_dim = apparatus_ready.total_dim();
        if pointer_states.len() != eig.outcome_count() {
            return Err(Error::InvalidModel {
                reason: format!(
                    "{} pointer states for {} outcomes",
                    pointer_states.len(),
                    eig.outcome_count()
                ),
            });
        }
        for (i, v) in pointer_states.iter().enumerate() {
            if v.total_dim() != apparatus_dim {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "pointer state {i} has dimension {}, apparatus has {apparatus_dim}",
                        v.total_dim()
                    ),
                });
            }
            for (j, w) in pointer_states.iter().enumerate().skip(i) {
                let inner = v.inner(w);
                let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
                if (inner - expected).norm() > TOL_OPERATOR {
                    return Err(Error::NotOrthonormal {
                        side: "pointer",
                        i,
                        j,
                        inner,
                    });
                }
            }
        }
        if post_states.len() != eig.outcome_count()
            || post_states
                .iter()
                .zip(eig.multiplicities())
                .any(|(g, m)| g.len() != m)
        {
            return Err(Error::InvalidModel {
                reason: "post-state family must match the eigenvector multiplicities".into(),
            });
        }
        for (k, group) in post_states.iter().enumerate() {
            for (l, v) in group.iter().enumerate() {
                if v.total_dim() != eig.dim() {
                    return Err(Error::DimensionMismatch {
                        context: format!(
                            "post-state ({k},{l}) has dimension {}, system has {}",
                            v.total_dim(),
                            eig.dim()
                        ),
                    });
                }
                for (j, w) in group.iter().enumerate().skip(l) {
                    let inner = v.inner(w);
                    let expected = if l == j { Complex64::ONE } else { Complex64::ZERO };
                    if (inner - expected).norm() > TOL_OPERATOR {
                        return Err(Error::NotOrthonormal {
                            side: "post-state",
                            i: l,
                            j,
                            inner,
                        });
                    }
                }
            }
        }

        let mut pairs = Vec::new();
        for (k, group) in eig.groups().iter().enumerate() {
            for (l, eigenvector) in group.iter().enumerate() {
                pairs.push((
                    eigenvector.tensor(&apparatus_ready),
                    post_states[k][l].tensor(&pointer_states[k]),
                ));
            }
        }
        let unitary = complete_to_unitary(&pairs, &[eig.dim(), apparatus_dim])?;
        Ok(Self {
            eig,
            apparatus_ready,
            pointer_states,
            post_states,
            unitary,
        })
    }

    /// The standard choice: post-states equal to the eigenvectors.
    pub fn standard(
        eig: EigenStructure,
        apparatus_ready: StateVector,
        pointer_states: Vec<StateVector>,
    ) -> Result<Self> {
        let post_states = eig.groups().to_vec();
        Self::new(eig, apparatus_ready, pointer_states, post_states)
    }

    pub fn eigenstructure(&self) -> &EigenStructure {
        &self.eig
    }

    pub fn apparatus_ready(&self) -> &StateVector {
        &self.apparatus_ready
    }

    pub fn pointer_states(&self) -> &[StateVector] {
        &self.pointer_states
    }

    pub fn post_states(&self) -> &[Vec<StateVector>] {
        &self.post_states
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    pub fn system_dim(&self) -> usize {
        self.eig.dim()
    }

    pub fn apparatus_dim(&self) -> usize {
        self.apparatus_ready.total_dim()
    }

    /// `U (system x ready)` without normalisation requirements; the coupling
    /// is linear in the system input.
    pub fn premeasurement_map(&self, system: &StateVector) -> Result<StateVector> {
        self.unitary.apply(&system.tensor(&self.apparatus_ready))
    }
}

/// Result of running the coupling on one input vector.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    /// `U (input x ready)` on the system-apparatus space.
    pub final_state: StateVector,
    /// Outcome probabilities `p_k = sum_l |<phi_kl|input>|^2`.
    pub probabilities: Vec<f64>,
    /// Conditional post-states of the system; `None` where `p_k` vanishes
    /// (the defining quotient is 0/0 there).
    pub conditional_states: Vec<Option<StateVector>>,
    /// Partial trace of the final state over the system.
    pub apparatus_rho: DensityOperator,
    /// The pointer basis, carried along for objectification checks.
    pub pointer_states: Vec<StateVector>,
}

impl MeasurementOutcome {
    pub fn probability_sum(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Norm of `final_state - sum_k sqrt(p_k) Phi_k x pointer_k` over the
    /// defined conditional states; zero when the premeasurement identity
    /// holds (it always does for complete eigenstructures). Compared on the
    /// flat amplitudes: the reconstruction carries the pointer factors of
    /// each `pointer_k` while the final state carries the apparatus as one
    /// factor, but both share the same layout.
    pub fn reconstruction_residual(&self) -> f64 {
        let mut residual = self.final_state.amplitudes().clone();
        for (k, conditional) in self.conditional_states.iter().enumerate() {
            if let Some(state) = conditional {
                let weight = Complex64::new(self.probabilities[k].sqrt(), 0.0);
                let term = state.tensor(&self.pointer_states[k]);
                residual = residual - term.amplitudes().mapv(|z| z * weight);
            }
        }
        residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise distance between the apparatus state and its
    /// closed form `sum_km sqrt(p_k p_m) <Phi_m|Phi_k> |pointer_k><pointer_m|`.
    pub fn apparatus_closed_form_residual(&self) -> f64 {
        let dim = self.apparatus_rho.total_dim();
        let mut expected = Array2::<Complex64>::zeros((dim, dim));
        for (k, phi_k) in self.conditional_states.iter().enumerate() {
            for (m, phi_m) in self.conditional_states.iter().enumerate() {
                let coefficient = match (phi_k, phi_m) {
                    (Some(a), Some(b)) => {
                        b.inner(a) * (self.probabilities[k] * self.probabilities[m]).sqrt()
                    }
                    _ => Complex64::ZERO,
                };
                let pk = self.pointer_states[k].amplitudes();
                let pm = self.pointer_states[m].amplitudes();
                for r in 0..dim {
                    for c in 0..dim {
                        expected[(r, c)] += coefficient * pk[r] * pm[c].conj();
                    }
                }
            }
        }
        max_abs(&(self.apparatus_rho.entries() - &expected))
    }
}

/// Runs the coupling on a normalised input vector.
pub fn measure(coupling: &MeasurementCoupling, input: &StateVector) -> Result<MeasurementOutcome> {
    if input.total_dim() != coupling.system_dim() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "input has dimension {}, system has {}",
                input.total_dim(),
                coupling.system_dim()
            ),
        });
    }
    let norm = input.norm();
    if (norm - 1.0).abs() > TOL_VECTOR {
        return Err(Error::NotNormalized { norm });
    }

    let mut probabilities = Vec::with_capacity(coupling.eig.outcome_count());
    let mut conditional_states = Vec::with_capacity(coupling.eig.outcome_count());
    for (group, posts) in coupling.eig.groups().iter().zip(coupling.post_states()) {
        let coefficients: Vec<Complex64> = group.iter().map(|v| v.inner(input)).collect();
        let p: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        probabilities.push(p);
        if p > DEGENERACY_THRESHOLD {
            let scale = Complex64::new(1.0 / p.sqrt(), 0.0);
            let terms: Vec<(Complex64, &StateVector)> = coefficients
                .iter()
                .zip(posts)
                .map(|(c, v)| (c * scale, v))
                .collect();
            conditional_states.push(Some(linear_combination(&terms)?));
        } else {
            conditional_states.push(None);
        }
    }

    let final_state = coupling.premeasurement_map(input)?;
    let apparatus_rho = DensityOperator::from_pure(&final_state)?.partial_trace(&[1])?;
    Ok(MeasurementOutcome {
        final_state,
        probabilities,
        conditional_states,
        apparatus_rho,
        pointer_states: coupling.pointer_states().to_vec(),
    })
}

/// Verdict of the objectification check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Failed,
}

/// Both objectification conditions evaluated against an apparatus state and
/// a claimed decomposition.
#[derive(Debug, Clone)]
pub struct ObjectificationReport {
    /// The apparatus state is the pointer-diagonal convex combination with
    /// weights `p_k`.
    pub condition_a: bool,
    /// The claimed gemenge is that combination: one component per nonzero
    /// outcome, correct weights, pointer marginals equal to the pointer
    /// projectors, and non-trivial whenever two or more outcomes remain.
    pub condition_b: bool,
    /// Largest apparatus matrix element between distinct pointer states.
    pub off_diagonal_norm: f64,
    /// Largest entry of the apparatus state outside the pointer span.
    pub pointer_span_residual: f64,
    /// Largest deviation of the pointer-diagonal entries from `p_k`.
    pub diagonal_weight_error: f64,
    pub verdict: Verdict,
}

/// Evaluates conditions (A) and (B) for the given apparatus state,
/// probabilities and pointer basis against a claimed gemenge.
///
/// Components of the claimed gemenge are matched to the nonzero outcomes in
/// order; each component's *last* factor must be the pointer sector.
pub fn objectification_report(
    apparatus_rho: &DensityOperator,
    probabilities: &[f64],
    pointer_states: &[StateVector],
    claimed: &GemengeState,
) -> ObjectificationReport {
    let count = pointer_states.len();
    let images: Vec<_> = pointer_states
        .iter()
        .map(|v| apparatus_rho.entries().dot(v.amplitudes()))
        .collect();
    let mut matrix = Array2::<Complex64>::zeros((count, count));
    for (k, vk) in pointer_states.iter().enumerate() {
        for (m, image) in images.iter().enumerate() {
            matrix[(k, m)] = vk
                .amplitudes()
                .iter()
                .zip(image.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
        }
    }
    let mut off_diagonal_norm = 0.0f64;
    let mut diagonal_weight_error = 0.0f64;
    for k in 0..count {
        diagonal_weight_error = diagonal_weight_error.max((matrix[(k, k)].re - probabilities[k]).abs());
        diagonal_weight_error = diagonal_weight_error.max(matrix[(k, k)].im.abs());
        for m in 0..count {
            if k != m {
                off_diagonal_norm = off_diagonal_norm.max(matrix[(k, m)].norm());
            }
        }
    }
    // Residual of the apparatus state outside span{pointer_k}.
    let dim = apparatus_rho.total_dim();
    let mut projected = Array2::<Complex64>::zeros((dim, dim));
    for k in 0..count {
        for m in 0..count {
            let pk = pointer_states[k].amplitudes();
            let pm = pointer_states[m].amplitudes();
            for r in 0..dim {
                for c in 0..dim {
                    projected[(r, c)] += matrix[(k, m)] * pk[r] * pm[c].conj();
                }
            }
        }
    }
    let pointer_span_residual = max_abs(&(apparatus_rho.entries() - &projected));

    let condition_a = off_diagonal_norm <= TOL_OPERATOR
        && diagonal_weight_error <= TOL_OPERATOR
        && pointer_span_residual <= TOL_OPERATOR;

    let active: Vec<usize> = probabilities
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > DEGENERACY_THRESHOLD)
        .map(|(k, _)| k)
        .collect();
    let condition_b = check_condition_b(claimed, &active, probabilities, pointer_states);

    ObjectificationReport {
        condition_a,
        condition_b,
        off_diagonal_norm,
        pointer_span_residual,
        diagonal_weight_error,
        verdict: if condition_a && condition_b {
            Verdict::Satisfied
        } else {
            Verdict::Failed
        },
    }
}

fn check_condition_b(
    claimed: &GemengeState,
    active: &[usize],
    probabilities: &[f64],
    pointer_states: &[StateVector],
) -> bool {
    if claimed.len() != active.len() {
        return false;
    }
    if active.len() >= 2 && claimed.is_trivial() {
        return false;
    }
    for ((weight, component), &k) in claimed.components().iter().zip(active) {
        if (weight - probabilities[k]).abs() > TOL_OPERATOR {
            return false;
        }
        let last = component.dims().len() - 1;
        let marginal = match component.partial_trace(&[last]) {
            Ok(m) => m,
            Err(_) => return false,
        };
        if marginal.total_dim() != pointer_states[k].total_dim() {
            return false;
        }
        let expected = match DensityOperator::from_pure(&pointer_states[k]) {
            Ok(p) => p,
            Err(_) => return false,
        };
        if marginal.max_entry_distance(&expected) > TOL_OPERATOR {
            return false;
        }
    }
    true
}

/// Convenience form: evaluates the report for a measurement outcome's own
/// apparatus state.
pub fn check_objectification(
    outcome: &MeasurementOutcome,
    claimed: &GemengeState,
) -> ObjectificationReport {
    objectification_report(
        &outcome.apparatus_rho,
        &outcome.probabilities,
        &outcome.pointer_states,
        claimed,
    )
}
