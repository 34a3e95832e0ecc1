//! The modified registration-apparatus model: an array of detectors with
//! mutually disjoint separation statuses, each containing a bath of
//! particles identical with the measured one.
//!
//! On entering detector `k` the measured particle is absorbed into the
//! bath: its conditional post-state is symmetrised into the bath state
//! (`W_kk`, trace-normalised by `nu_k^2`), and the intermediate state of the
//! whole arrangement is *postulated* to be the pointer-diagonal mixture of
//! those absorption products at the outcome probabilities, carried as a
//! genuine preparation-level gemenge. Both objectification conditions then
//! hold by construction, in contrast to the bare coupling.

use ndarray::linalg::kron;
use ndarray::Array2;
use num_complex::Complex64;

use crate::bcl::{
    measure, objectification_report, EigenStructure, MeasurementCoupling, MeasurementOutcome,
    ObjectificationReport, Verdict,
};
use crate::gemenge::GemengeState;
use crate::grid::{GridSpace, Region};
use crate::hilbert::{max_abs, DensityOperator, StateVector};
use crate::identicals::{build_symmetrizer, Statistics};
use crate::{Error, Result, DEGENERACY_THRESHOLD, TOL_OPERATOR, TOL_VECTOR};

/// Support threshold used when checking that post-states live inside their
/// detector regions.
const SUPPORT_TOLERANCE: f64 = 1e-12;

/// One detector: its separation-status region, the bath of particles
/// identical with the measured one, and the ready/fired states of its
/// pointer degree of freedom.
#[derive(Debug, Clone)]
pub struct DetectorSpec {
    region: Region,
    bath: Option<DensityOperator>,
    pointer_ready: StateVector,
    pointer_fired: StateVector,
}

impl DetectorSpec {
    pub fn new(
        region: Region,
        bath: Option<DensityOperator>,
        pointer_ready: StateVector,
        pointer_fired: StateVector,
    ) -> Result<Self> {
        if region.is_empty() {
            return Err(Error::InvalidModel {
                reason: "detector region must be non-empty".into(),
            });
        }
        if pointer_ready.total_dim() != pointer_fired.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "pointer ready and fired states live on different spaces".into(),
            });
        }
        for (label, v) in [("ready", &pointer_ready), ("fired", &pointer_fired)] {
            let norm = v.norm();
            if (norm - 1.0).abs() > TOL_VECTOR {
                return Err(Error::InvalidModel {
                    reason: format!("pointer {label} state has norm {norm}"),
                });
            }
        }
        let overlap = pointer_ready.inner(&pointer_fired);
        if overlap.norm() > TOL_OPERATOR {
            return Err(Error::NotOrthonormal {
                side: "pointer",
                i: 0,
                j: 1,
                inner: overlap,
            });
        }
        if let Some(state) = &bath {
            if state.dims().is_empty() {
                return Err(Error::InvalidModel {
                    reason: "bath state must have at least one particle factor".into(),
                });
            }
        }
        Ok(Self {
            region,
            bath,
            pointer_ready,
            pointer_fired,
        })
    }

    /// A detector with a two-level pointer: ready = e0, fired = e1.
    pub fn with_qubit_pointer(region: Region, bath: Option<DensityOperator>) -> Result<Self> {
        Self::new(
            region,
            bath,
            StateVector::basis(2, 0),
            StateVector::basis(2, 1),
        )
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn bath(&self) -> Option<&DensityOperator> {
        self.bath.as_ref()
    }

    /// Number of bath particles identical with the measured one.
    pub fn bath_size(&self) -> usize {
        self.bath.as_ref().map_or(0, |b| b.dims().len())
    }

    pub fn pointer_ready(&self) -> &StateVector {
        &self.pointer_ready
    }

    pub fn pointer_fired(&self) -> &StateVector {
        &self.pointer_fired
    }
}

/// The full registration arrangement: measured particle, detector array and
/// the coupling built from them.
///
/// The apparatus pointer sector is the tensor product of the per-detector
/// pointer spaces; the ready state has every detector ready and the pointer
/// state for outcome `k` has exactly detector `k` fired.
#[derive(Debug, Clone)]
pub struct RegistrationModel {
    space: GridSpace,
    preparation_region: Region,
    stats: Statistics,
    detectors: Vec<DetectorSpec>,
    coupling: MeasurementCoupling,
}

impl RegistrationModel {
    pub fn new(
        space: GridSpace,
        preparation_region: Region,
        eig: EigenStructure,
        post_states: Vec<Vec<StateVector>>,
        detectors: Vec<DetectorSpec>,
        stats: Statistics,
    ) -> Result<Self> {
        if detectors.is_empty() {
            return Err(Error::InvalidModel {
                reason: "registration needs at least one detector".into(),
            });
        }
        if detectors.len() != eig.outcome_count() {
            return Err(Error::InvalidModel {
                reason: format!(
                    "{} detectors for {} outcomes",
                    detectors.len(),
                    eig.outcome_count()
                ),
            });
        }
        if eig.dim() != space.len() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "eigenstructure lives on dim {}, grid has {} points",
                    eig.dim(),
                    space.len()
                ),
            });
        }
        if preparation_region.is_empty() {
            return Err(Error::InvalidModel {
                reason: "preparation region must be non-empty".into(),
            });
        }
        if let Some(out_of_range) = preparation_region
            .max_index()
            .into_iter()
            .chain(detectors.iter().filter_map(|d| d.region.max_index()))
            .find(|&i| i >= space.len())
        {
            return Err(Error::InvalidModel {
                reason: format!("region index {out_of_range} outside the {}-point grid", space.len()),
            });
        }
        for (k, detector) in detectors.iter().enumerate() {
            if detector.region.intersects(&preparation_region) {
                return Err(Error::InvalidModel {
                    reason: format!("detector {k} region overlaps the preparation region"),
                });
            }
            for (m, other) in detectors.iter().enumerate().skip(k + 1) {
                if detector.region.intersects(&other.region) {
                    return Err(Error::InvalidModel {
                        reason: format!("detector regions {k} and {m} overlap"),
                    });
                }
            }
        }

        // Bath states must be valid on the grid's one-particle space and lie
        // in the exchange sector.
        for (k, detector) in detectors.iter().enumerate() {
            if let Some(bath) = &detector.bath {
                if bath.dims().iter().any(|&d| d != space.len()) {
                    return Err(Error::DimensionMismatch {
                        context: format!(
                            "detector {k} bath factors {:?} do not match the {}-point grid",
                            bath.dims(),
                            space.len()
                        ),
                    });
                }
                let m = bath.dims().len();
                if m >= 2 {
                    let projector = build_symmetrizer(m, space.len(), stats)?;
                    let p = projector.matrix().entries();
                    let sandwiched = p.dot(bath.entries()).dot(p);
                    let residual = max_abs(&(&sandwiched - bath.entries()));
                    if residual > TOL_OPERATOR {
                        return Err(Error::InvalidModel {
                            reason: format!(
                                "detector {k} bath is not in the {stats:?} sector: residual {residual:.3e}"
                            ),
                        });
                    }
                }
            }
        }

        // Post-states must be supported inside their detector's region; the
        // resulting cross-outcome orthonormality is still checked
        // independently by the coupling constructor below.
        if post_states.len() != detectors.len() {
            return Err(Error::InvalidModel {
                reason: format!(
                    "{} post-state groups for {} detectors",
                    post_states.len(),
                    detectors.len()
                ),
            });
        }
        for (k, group) in post_states.iter().enumerate() {
            for (l, state) in group.iter().enumerate() {
                if state.total_dim() != space.len() {
                    return Err(Error::DimensionMismatch {
                        context: format!(
                            "post-state ({k},{l}) has dimension {}, grid has {}",
                            state.total_dim(),
                            space.len()
                        ),
                    });
                }
                for (index, amp) in state.amplitudes().iter().enumerate() {
                    if !detectors[k].region.contains(index) && amp.norm() > SUPPORT_TOLERANCE {
                        return Err(Error::InvalidModel {
                            reason: format!(
                                "post-state ({k},{l}) has weight {:.3e} at grid point {index} \
                                 outside detector {k}'s region",
                                amp.norm()
                            ),
                        });
                    }
                }
            }
        }
        let mut eq14_residual = 0.0f64;
        let flat: Vec<&StateVector> = post_states.iter().flatten().collect();
        for i in 0..flat.len() {
            for j in i..flat.len() {
                let inner = flat[i].inner(flat[j]);
                let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
                eq14_residual = eq14_residual.max((inner - expected).norm());
            }
        }
        if eq14_residual > TOL_OPERATOR {
            return Err(Error::InvalidModel {
                reason: format!(
                    "post-state family is not orthonormal: residual {eq14_residual:.3e}"
                ),
            });
        }

        let ready = detectors
            .iter()
            .skip(1)
            .fold(detectors[0].pointer_ready.clone(), |acc, d| {
                acc.tensor(&d.pointer_ready)
            });
        let pointers: Vec<StateVector> = (0..detectors.len())
            .map(|k| {
                let mut state: Option<StateVector> = None;
                for (j, d) in detectors.iter().enumerate() {
                    let factor = if j == k { &d.pointer_fired } else { &d.pointer_ready };
                    state = Some(match state {
                        None => factor.clone(),
                        Some(s) => s.tensor(factor),
                    });
                }
                state.expect("at least one detector")
            })
            .collect();
        let coupling = MeasurementCoupling::new(eig, ready, pointers, post_states)?;

        Ok(Self {
            space,
            preparation_region,
            stats,
            detectors,
            coupling,
        })
    }

    pub fn space(&self) -> GridSpace {
        self.space
    }

    pub fn preparation_region(&self) -> &Region {
        &self.preparation_region
    }

    pub fn stats(&self) -> Statistics {
        self.stats
    }

    pub fn detectors(&self) -> &[DetectorSpec] {
        &self.detectors
    }

    pub fn coupling(&self) -> &MeasurementCoupling {
        &self.coupling
    }

    /// Largest deviation of the post-state family from orthonormality.
    pub fn post_state_orthonormality_residual(&self) -> f64 {
        let flat: Vec<&StateVector> = self.coupling.post_states().iter().flatten().collect();
        let mut residual = 0.0f64;
        for i in 0..flat.len() {
            for j in i..flat.len() {
                let inner = flat[i].inner(flat[j]);
                let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
                residual = residual.max((inner - expected).norm());
            }
        }
        residual
    }
}

/// Symmetrises the absorbed particle's state into a bath of `M` identical
/// particles: `W = nu^2 P (|phi><phi| x T) P` with `P` the `(M+1)`-particle
/// symmetrizer and `nu^2 = 1/tr(P (|phi><phi| x T) P)`.
///
/// With no bath particles this degenerates to `|phi><phi|` and `nu^2 = 1`.
/// A vanishing trace (fermionic exclusion: the bath already occupies `phi`)
/// is the degenerate-absorption error.
pub fn build_w(
    phi: &StateVector,
    bath: Option<&DensityOperator>,
    stats: Statistics,
) -> Result<(DensityOperator, f64)> {
    let d = phi.total_dim();
    let bath = match bath {
        None => return Ok((DensityOperator::from_pure(phi)?, 1.0)),
        Some(b) => b,
    };
    if bath.dims().iter().any(|&f| f != d) {
        return Err(Error::DimensionMismatch {
            context: format!(
                "absorbed particle has dim {d}, bath factors are {:?}",
                bath.dims()
            ),
        });
    }
    let m = bath.dims().len();
    let projector = build_symmetrizer(m + 1, d, stats)?;
    let p = projector.matrix().entries();
    let product = kron(&phi.outer(), bath.entries());
    let raw = p.dot(&product).dot(p);
    let trace: Complex64 = raw.diag().iter().sum();
    if trace.re <= DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateAbsorption { trace: trace.re });
    }
    let nu_squared = 1.0 / trace.re;
    let w = DensityOperator::trusted(vec![d; m + 1], raw.mapv(|z| z * nu_squared))?;
    Ok((w, nu_squared))
}

/// The post-absorption, pre-amplification state of measured particle, baths
/// and pointers, with its postulated gemenge structure.
#[derive(Debug, Clone)]
pub struct IntermediateState {
    /// One component per detector that can fire; weights are the outcome
    /// probabilities (renormalised proportionally if some outcome was
    /// dropped as numerically impossible). Component factor order:
    /// absorption blocks per detector, then the pointer sector last.
    pub gemenge: GemengeState,
    /// BCL outcome probabilities for all detectors, including dropped ones.
    pub probabilities: Vec<f64>,
    /// Normalisation factor `nu_k^2` per detector; `None` where the outcome
    /// was dropped.
    pub nu_squared: Vec<Option<f64>>,
    /// Detector indices retained in the gemenge, in component order.
    pub outcome_indices: Vec<usize>,
}

/// Runs the coupling on `input` and assembles the intermediate state of the
/// absorption rule.
pub fn intermediate_state(
    model: &RegistrationModel,
    input: &StateVector,
) -> Result<IntermediateState> {
    // Inputs must lie in the registered span, otherwise outcome
    // probabilities do not exhaust the state.
    let projected = model
        .coupling()
        .eigenstructure()
        .span_projector()
        .apply(input)?;
    let residual = crate::hilbert::linear_combination(&[
        (Complex64::ONE, &projected),
        (-Complex64::ONE, input),
    ])?
    .norm();
    if residual > TOL_OPERATOR {
        return Err(Error::OutsideRegisteredSpan { residual });
    }

    let outcome = measure(model.coupling(), input)?;
    let retained: Vec<usize> = outcome
        .probabilities
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > DEGENERACY_THRESHOLD)
        .map(|(k, _)| k)
        .collect();
    if retained.is_empty() {
        return Err(Error::InvalidModel {
            reason: "no detector can fire on this input".into(),
        });
    }
    let retained_mass: f64 = retained.iter().map(|&k| outcome.probabilities[k]).sum();
    let dropped_any = retained.len() < outcome.probabilities.len();

    let mut nu_squared: Vec<Option<f64>> = vec![None; model.detectors().len()];
    let mut components = Vec::with_capacity(retained.len());
    for &k in &retained {
        let phi_k = outcome.conditional_states[k]
            .as_ref()
            .expect("retained outcomes have conditional states");
        let (w_kk, nu) = build_w(phi_k, model.detectors()[k].bath(), model.stats())?;
        nu_squared[k] = Some(nu);

        // T_1 x ... x W_kk x ... x T_N x |pointer_k><pointer_k|, each
        // detector's matter sector flattened to a single factor so the
        // absorbed particle never appears as a standalone factor.
        let mut block_dims = Vec::with_capacity(model.detectors().len() + 1);
        let mut entries: Option<Array2<Complex64>> = None;
        for (j, detector) in model.detectors().iter().enumerate() {
            let (block_entries, block_dim) = if j == k {
                (w_kk.entries().clone(), w_kk.total_dim())
            } else {
                match detector.bath() {
                    Some(bath) => (bath.entries().clone(), bath.total_dim()),
                    None => (Array2::eye(1), 1),
                }
            };
            block_dims.push(block_dim);
            entries = Some(match entries {
                None => block_entries,
                Some(acc) => kron(&acc, &block_entries),
            });
        }
        let pointer = outcome.pointer_states[k].outer();
        block_dims.push(outcome.pointer_states[k].total_dim());
        let full = kron(&entries.expect("at least one detector"), &pointer);
        let weight = if dropped_any {
            outcome.probabilities[k] / retained_mass
        } else {
            outcome.probabilities[k]
        };
        components.push((weight, DensityOperator::trusted(block_dims, full)?));
    }

    let matter_dim: usize = components[0].1.dims()[..model.detectors().len()]
        .iter()
        .product();
    let pointer_dim = model.coupling().apparatus_dim();
    let gemenge = GemengeState::mixed(components, vec![matter_dim, pointer_dim])?;
    Ok(IntermediateState {
        gemenge,
        probabilities: outcome.probabilities,
        nu_squared,
        outcome_indices: retained,
    })
}

/// One named numeric check of the registration report.
#[derive(Debug, Clone)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Assertion {
    pub fn residual(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: value <= tolerance,
            value,
            tolerance,
        }
    }
}

/// Everything `verify_model` establishes about one registration run.
#[derive(Debug, Clone)]
pub struct RegistrationReport {
    pub assertions: Vec<Assertion>,
    pub objectification: ObjectificationReport,
    pub intermediate: IntermediateState,
    pub outcome: MeasurementOutcome,
    pub satisfied: bool,
}

/// Recomputes the model's defining identities for one input and reports
/// them: post-state orthonormality, trace normalisations, weight/probability
/// agreement, the pointer marginal, and the objectification verdict on the
/// intermediate state.
pub fn verify_model(model: &RegistrationModel, input: &StateVector) -> Result<RegistrationReport> {
    let intermediate = intermediate_state(model, input)?;
    let outcome = measure(model.coupling(), input)?;
    let mixture = intermediate.gemenge.mixture();

    let mut assertions = Vec::new();
    assertions.push(Assertion::residual(
        "post_state_orthonormality",
        model.post_state_orthonormality_residual(),
        TOL_OPERATOR,
    ));
    assertions.push(Assertion::residual(
        "intermediate_trace",
        (mixture.trace().re - 1.0).abs().max(mixture.trace().im.abs()),
        TOL_OPERATOR,
    ));
    let component_trace_error = intermediate
        .gemenge
        .components()
        .iter()
        .map(|(_, t)| {
            let tr = t.trace();
            (tr.re - 1.0).abs().max(tr.im.abs())
        })
        .fold(0.0f64, f64::max);
    assertions.push(Assertion::residual(
        "component_traces",
        component_trace_error,
        TOL_OPERATOR,
    ));
    let weight_error = intermediate
        .gemenge
        .weights()
        .iter()
        .zip(&intermediate.outcome_indices)
        .map(|(w, &k)| (w - intermediate.probabilities[k]).abs())
        .fold(0.0f64, f64::max);
    assertions.push(Assertion::residual(
        "weight_probability_match",
        weight_error,
        TOL_OPERATOR,
    ));

    // Pointer marginal of the mixture against sum_k w_k |pointer_k><pointer_k|.
    let pointer_marginal = mixture.partial_trace(&[1])?;
    let pointer_dim = model.coupling().apparatus_dim();
    let mut expected = Array2::<Complex64>::zeros((pointer_dim, pointer_dim));
    for (w, &k) in intermediate
        .gemenge
        .weights()
        .iter()
        .zip(&intermediate.outcome_indices)
    {
        expected = expected + outcome.pointer_states[k].outer().mapv(|z| z * *w);
    }
    assertions.push(Assertion::residual(
        "pointer_marginal",
        max_abs(&(pointer_marginal.entries() - &expected)),
        TOL_OPERATOR,
    ));

    let objectification = objectification_report(
        &pointer_marginal,
        &intermediate.probabilities,
        &outcome.pointer_states,
        &intermediate.gemenge,
    );
    let satisfied =
        assertions.iter().all(|a| a.pass) && objectification.verdict == Verdict::Satisfied;
    Ok(RegistrationReport {
        assertions,
        objectification,
        intermediate,
        outcome,
        satisfied,
    })
}
