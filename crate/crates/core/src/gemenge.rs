//! Density operators carrying their finest known convex decomposition.
//!
//! The decomposition is preparation provenance, not a mathematical property
//! of the matrix: it is only created by constructors that model preparations
//! (explicit mixing, pure states, the registration rule) and is propagated
//! through unitary dynamics and composition, never inferred from a bare
//! density operator.

use ndarray::Array2;
use num_complex::Complex64;

use crate::hilbert::{DensityOperator, Operator, StateVector};
use crate::{Error, Result, TOL_OPERATOR};

/// A density operator together with its finest known convex decomposition.
///
/// Component states may carry finer factor structures than the container's
/// `dims` (they only have to match in total dimension); `dims` is the factor
/// bookkeeping used for the mixed state itself.
#[derive(Debug, Clone, PartialEq)]
pub struct GemengeState {
    components: Vec<(f64, DensityOperator)>,
    dims: Vec<usize>,
}

impl GemengeState {
    /// A preparation that mixes the given states at the given rates.
    pub fn mixed(components: Vec<(f64, DensityOperator)>, dims: Vec<usize>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel {
                reason: "a gemenge needs at least one component".into(),
            });
        }
        let total: usize = dims.iter().product();
        for (index, (weight, state)) in components.iter().enumerate() {
            if !(*weight > 0.0 && *weight <= 1.0 + TOL_OPERATOR) {
                return Err(Error::InvalidModel {
                    reason: format!("component {index} has weight {weight} outside (0, 1]"),
                });
            }
            if state.total_dim() != total {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "component {index} has total dimension {}, container expects {}",
                        state.total_dim(),
                        total
                    ),
                });
            }
        }
        let weight_sum: f64 = components.iter().map(|(w, _)| w).sum();
        if (weight_sum - 1.0).abs() > TOL_OPERATOR {
            return Err(Error::InvalidModel {
                reason: format!("component weights sum to {weight_sum}, expected 1"),
            });
        }
        Ok(Self { components, dims })
    }

    /// The trivial gemenge of a pure state: exactly one component.
    pub fn pure(v: &StateVector) -> Result<Self> {
        let state = DensityOperator::from_pure(v)?;
        let dims = state.dims().to_vec();
        Ok(Self {
            components: vec![(1.0, state)],
            dims,
        })
    }

    /// The trivial gemenge of a state whose preparation is not known to mix.
    pub fn single(state: DensityOperator) -> Self {
        let dims = state.dims().to_vec();
        Self {
            components: vec![(1.0, state)],
            dims,
        }
    }

    pub fn components(&self) -> &[(f64, DensityOperator)] {
        &self.components
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|(w, _)| *w).collect()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `sum_k w_k T_k` as a plain density operator (forgets provenance).
    pub fn mixture(&self) -> DensityOperator {
        let total: usize = self.dims.iter().product();
        let mut entries = Array2::<Complex64>::zeros((total, total));
        for (weight, state) in &self.components {
            entries = entries + state.entries().mapv(|z| z * *weight);
        }
        DensityOperator::trusted(self.dims.clone(), entries)
            .expect("convex mixture of valid states")
    }

    /// Componentwise conjugation by a unitary; weights are untouched.
    pub fn evolve(&self, u: &Operator) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|(w, t)| Ok((*w, t.conjugated_by(u)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            dims: u.dims_out().to_vec(),
        })
    }

    /// Componentwise composition with partner states, one per component;
    /// models a per-preparation attachment of a second system.
    pub fn compose(&self, partners: &[DensityOperator]) -> Result<Self> {
        if partners.len() != self.components.len() {
            return Err(Error::PartnerCountMismatch {
                components: self.components.len(),
                partners: partners.len(),
            });
        }
        if let Some(first) = partners.first() {
            if partners.iter().any(|p| p.dims() != first.dims()) {
                return Err(Error::DimensionMismatch {
                    context: "all partner states must live on the same space".into(),
                });
            }
        }
        let components: Vec<(f64, DensityOperator)> = self
            .components
            .iter()
            .zip(partners)
            .map(|((w, t), partner)| (*w, t.tensor(partner)))
            .collect();
        let mut dims = self.dims.clone();
        dims.extend_from_slice(partners[0].dims());
        Ok(Self { components, dims })
    }

    /// Merges component groups into single components; `groups` must
    /// partition the component indices. The mixture is invariant.
    pub fn coarsen(&self, groups: &[Vec<usize>]) -> Result<Self> {
        let mut seen = vec![false; self.components.len()];
        for group in groups {
            if group.is_empty() {
                return Err(Error::InvalidPartition {
                    reason: "empty group".into(),
                });
            }
            for &index in group {
                if index >= self.components.len() {
                    return Err(Error::InvalidPartition {
                        reason: format!("index {index} out of range"),
                    });
                }
                if seen[index] {
                    return Err(Error::InvalidPartition {
                        reason: format!("index {index} appears twice"),
                    });
                }
                seen[index] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidPartition {
                reason: "groups do not cover every component".into(),
            });
        }
        let total: usize = self.dims.iter().product();
        let components = groups
            .iter()
            .map(|group| {
                let weight: f64 = group.iter().map(|&k| self.components[k].0).sum();
                let mut entries = Array2::<Complex64>::zeros((total, total));
                for &k in group {
                    let (w, state) = &self.components[k];
                    entries = entries + state.entries().mapv(|z| z * (*w / weight));
                }
                Ok((
                    weight,
                    DensityOperator::trusted(self.dims.clone(), entries)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            dims: self.dims.clone(),
        })
    }

    /// True iff the decomposition carries no information: one component, or
    /// all components equal within the operator tolerance.
    pub fn is_trivial(&self) -> bool {
        let (_, first) = &self.components[0];
        self.components
            .iter()
            .skip(1)
            .all(|(_, state)| state.max_entry_distance(first) <= TOL_OPERATOR)
    }
}
