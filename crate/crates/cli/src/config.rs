//! Experiment configuration: the JSON schema and its conversion into
//! library objects.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sepsim_core::bcl::EigenStructure;
use sepsim_core::grid::{GridSpace, KernelOperator, Region, WaveFunction};
use sepsim_core::hilbert::{DensityOperator, StateVector};
use sepsim_core::identicals::{build_symmetrizer, Statistics};
use sepsim_core::registration::{DetectorSpec, RegistrationModel};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Separability,
    Bcl,
    Registration,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Separability => "separability",
            ExperimentKind::Bcl => "bcl",
            ExperimentKind::Registration => "registration",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticsConfig {
    Bose,
    Fermi,
}

impl From<StatisticsConfig> for Statistics {
    fn from(value: StatisticsConfig) -> Self {
        match value {
            StatisticsConfig::Bose => Statistics::Bose,
            StatisticsConfig::Fermi => Statistics::Fermi,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub spacing: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Amplitudes at or below this count as zero when computing supports.
    pub support_threshold: f64,
    /// Pair/single experiment agreement bound for separation status.
    pub agreement: f64,
    /// Bound asserted on the discrepancy in the region-local geometry.
    pub discrepancy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            support_threshold: 1e-12,
            agreement: 1e-10,
            discrepancy: 1e-12,
        }
    }
}

/// Either a uniform superposition of basis points or explicit amplitudes as
/// `[re, im]` pairs. Exactly one field must be present.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

impl StateSpec {
    fn raw_amplitudes(&self, dim: usize, field: &str) -> CliResult<Array1<Complex64>> {
        match (&self.basis, &self.amplitudes) {
            (Some(indices), None) => {
                if indices.is_empty() {
                    return Err(CliError::validation(format!(
                        "{field}.basis: at least one basis index required"
                    )));
                }
                let mut raw = Array1::<Complex64>::zeros(dim);
                for &index in indices {
                    if index >= dim {
                        return Err(CliError::validation(format!(
                            "{field}.basis: index {index} outside dimension {dim}"
                        )));
                    }
                    raw[index] += Complex64::ONE;
                }
                Ok(raw)
            }
            (None, Some(pairs)) => {
                if pairs.len() != dim {
                    return Err(CliError::validation(format!(
                        "{field}.amplitudes: expected {dim} entries, got {}",
                        pairs.len()
                    )));
                }
                Ok(Array1::from_iter(
                    pairs.iter().map(|[re, im]| Complex64::new(*re, *im)),
                ))
            }
            _ => Err(CliError::validation(format!(
                "{field}: exactly one of 'basis' or 'amplitudes' must be given"
            ))),
        }
    }

    pub fn to_wavefunction(&self, space: GridSpace, field: &str) -> CliResult<WaveFunction> {
        let raw = self.raw_amplitudes(space.len(), field)?;
        WaveFunction::normalized(space, raw).map_err(|e| CliError::from_core(e, field))
    }

    pub fn to_state_vector(&self, dim: usize, field: &str) -> CliResult<StateVector> {
        let raw = self.raw_amplitudes(dim, field)?;
        StateVector::new(vec![dim], raw)
            .and_then(|v| v.normalized())
            .map_err(|e| CliError::from_core(e, field))
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableSpec {
    /// Seeded random Hermitian kernel truncated to the region.
    #[default]
    LocalizedRandom,
    /// The resolution of identity truncated to the region.
    LocalizedProjector,
    /// The untruncated resolution of identity (not region-local).
    ResolutionOfIdentity,
    /// Explicit kernel entries as `[re, im]` pairs, row by row.
    Matrix { entries: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SeparabilityConfig {
    pub psi: StateSpec,
    pub phi: StateSpec,
    pub region: Vec<usize>,
    #[serde(default)]
    pub observable: ObservableSpec,
    /// Rotates `phi` towards `psi` by this angle (radians), sweeping the
    /// overlap between the two preparations.
    #[serde(default)]
    pub rotation_angle: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BclConfig {
    pub system_dim: usize,
    /// Basis-index groups defining the eigenvector family; must partition
    /// `0..system_dim`.
    pub outcomes: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    pub input: StateSpec,
    /// Post-states per outcome and multiplicity slot; defaults to the
    /// eigenvectors themselves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_states: Option<Vec<Vec<StateSpec>>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub region: Vec<usize>,
    /// Basis indices of the post-states for this detector, one per
    /// multiplicity slot of the matching outcome.
    pub post: Vec<usize>,
    /// Number of bath particles identical with the measured one.
    #[serde(default)]
    pub m: usize,
    /// Basis indices occupied by the bath; the first `m` are used, so `m`
    /// can be swept without editing the list.
    #[serde(default)]
    pub bath_indices: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RegistrationConfig {
    pub input: StateSpec,
    pub prep_region: Vec<usize>,
    /// Basis-index groups defining the registered eigenvectors; a partial
    /// family is allowed (the input must lie in its span).
    pub outcomes: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    pub detectors: Vec<DetectorConfig>,
    /// Include the full intermediate gemenge (weights and component
    /// matrices as `[re, im]` pairs) in the report metrics.
    #[serde(default)]
    pub emit_components: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: GridConfig,
    pub statistics: StatisticsConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separability: Option<SeparabilityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bcl: Option<BclConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registration: Option<RegistrationConfig>,
}

fn default_trials() -> usize {
    20
}

impl ExperimentConfig {
    pub fn space(&self) -> CliResult<GridSpace> {
        GridSpace::new(self.grid.n, self.grid.spacing)
            .map_err(|e| CliError::from_core(e, "grid"))
    }
}

/// Canonical-basis eigenvector groups from index lists.
pub fn build_eigenstructure(
    outcomes: &[Vec<usize>],
    eigenvalues: Option<&Vec<f64>>,
    dim: usize,
    complete: bool,
    field: &str,
) -> CliResult<EigenStructure> {
    if outcomes.is_empty() {
        return Err(CliError::validation(format!("{field}.outcomes: empty")));
    }
    let mut seen = vec![false; dim];
    let mut groups = Vec::with_capacity(outcomes.len());
    for (k, indices) in outcomes.iter().enumerate() {
        if indices.is_empty() {
            return Err(CliError::validation(format!(
                "{field}.outcomes[{k}]: empty outcome group"
            )));
        }
        let mut group = Vec::with_capacity(indices.len());
        for &index in indices {
            if index >= dim {
                return Err(CliError::validation(format!(
                    "{field}.outcomes[{k}]: index {index} outside dimension {dim}"
                )));
            }
            if seen[index] {
                return Err(CliError::validation(format!(
                    "{field}.outcomes: basis index {index} used twice"
                )));
            }
            seen[index] = true;
            group.push(StateVector::basis(dim, index));
        }
        groups.push(group);
    }
    let eigenvalues = match eigenvalues {
        Some(values) => {
            if values.len() != outcomes.len() {
                return Err(CliError::validation(format!(
                    "{field}.eigenvalues: {} values for {} outcomes",
                    values.len(),
                    outcomes.len()
                )));
            }
            values.clone()
        }
        None => (0..outcomes.len()).map(|k| k as f64).collect(),
    };
    let result = if complete {
        if seen.iter().any(|s| !s) {
            return Err(CliError::validation(format!(
                "{field}.outcomes: groups must partition 0..{dim} for a complete observable"
            )));
        }
        EigenStructure::new(eigenvalues, groups)
    } else {
        EigenStructure::partial(eigenvalues, groups, dim)
    };
    result.map_err(|e| CliError::from_core(e, field))
}

/// Builds the kernel observable of a separability experiment. Random
/// observables are drawn from the config seed.
pub fn build_observable(
    config: &SeparabilityConfig,
    space: GridSpace,
    seed: u64,
) -> CliResult<KernelOperator> {
    let region = Region::new(config.region.iter().copied());
    match &config.observable {
        ObservableSpec::LocalizedRandom => {
            let mut rng = sepsim_core::random::rng_from_seed(seed);
            Ok(sepsim_core::separability::sample_d_local_observable(
                space, &region, &mut rng,
            ))
        }
        ObservableSpec::LocalizedProjector => {
            Ok(KernelOperator::resolution_of_identity(space).localize(&region))
        }
        ObservableSpec::ResolutionOfIdentity => {
            Ok(KernelOperator::resolution_of_identity(space))
        }
        ObservableSpec::Matrix { entries } => {
            let n = space.len();
            if entries.len() != n || entries.iter().any(|row| row.len() != n) {
                return Err(CliError::validation(format!(
                    "separability.observable.matrix: expected {n}x{n} entries"
                )));
            }
            let matrix = Array2::from_shape_fn((n, n), |(i, j)| {
                Complex64::new(entries[i][j][0], entries[i][j][1])
            });
            KernelOperator::new(space, matrix)
                .map_err(|e| CliError::from_core(e, "separability.observable"))
        }
    }
}

/// Bath state of a detector: the symmetrised pure product of the first `m`
/// listed basis points.
pub fn build_bath(
    detector: &DetectorConfig,
    space: GridSpace,
    stats: Statistics,
    field: &str,
) -> CliResult<Option<DensityOperator>> {
    if detector.m == 0 {
        return Ok(None);
    }
    if detector.bath_indices.len() < detector.m {
        return Err(CliError::validation(format!(
            "{field}: m = {} but only {} bath_indices",
            detector.m,
            detector.bath_indices.len()
        )));
    }
    let indices = &detector.bath_indices[..detector.m];
    for &index in indices {
        if index >= space.len() {
            return Err(CliError::validation(format!(
                "{field}.bath_indices: index {index} outside the {}-point grid",
                space.len()
            )));
        }
    }
    let mut product = StateVector::basis(space.len(), indices[0]);
    for &index in &indices[1..] {
        product = product.tensor(&StateVector::basis(space.len(), index));
    }
    let state = if detector.m >= 2 {
        let symmetrizer = build_symmetrizer(detector.m, space.len(), stats)
            .map_err(|e| CliError::from_core(e, field))?;
        symmetrizer
            .apply(&product)
            .and_then(|v| v.normalized())
            .map_err(|e| CliError::from_core(e, field))?
    } else {
        product
    };
    DensityOperator::from_pure(&state)
        .map(Some)
        .map_err(|e| CliError::from_core(e, field))
}

/// Assembles the full registration model and its input vector.
pub fn build_registration_model(
    config: &ExperimentConfig,
) -> CliResult<(RegistrationModel, StateVector)> {
    let section = config.registration.as_ref().ok_or_else(|| {
        CliError::validation("missing section 'registration' for this experiment".to_string())
    })?;
    let space = config.space()?;
    let stats: Statistics = config.statistics.into();
    let eig = build_eigenstructure(
        &section.outcomes,
        section.eigenvalues.as_ref(),
        space.len(),
        false,
        "registration",
    )?;
    if section.detectors.len() != section.outcomes.len() {
        return Err(CliError::validation(format!(
            "registration: {} detectors for {} outcomes",
            section.detectors.len(),
            section.outcomes.len()
        )));
    }
    let mut post_states = Vec::with_capacity(section.detectors.len());
    let mut detectors = Vec::with_capacity(section.detectors.len());
    for (k, detector) in section.detectors.iter().enumerate() {
        let field = format!("registration.detectors[{k}]");
        if detector.post.len() != section.outcomes[k].len() {
            return Err(CliError::validation(format!(
                "{field}.post: {} post-states for multiplicity {}",
                detector.post.len(),
                section.outcomes[k].len()
            )));
        }
        let mut group = Vec::with_capacity(detector.post.len());
        for &index in &detector.post {
            if index >= space.len() {
                return Err(CliError::validation(format!(
                    "{field}.post: index {index} outside the {}-point grid",
                    space.len()
                )));
            }
            group.push(StateVector::basis(space.len(), index));
        }
        post_states.push(group);
        let bath = build_bath(detector, space, stats, &field)?;
        let spec = DetectorSpec::with_qubit_pointer(
            Region::new(detector.region.iter().copied()),
            bath,
        )
        .map_err(|e| CliError::from_core(e, &field))?;
        detectors.push(spec);
    }
    let model = RegistrationModel::new(
        space,
        Region::new(section.prep_region.iter().copied()),
        eig,
        post_states,
        detectors,
        stats,
    )
    .map_err(|e| CliError::from_core(e, "registration"))?;
    let input = section
        .input
        .to_state_vector(space.len(), "registration.input")?;
    Ok((model, input))
}
