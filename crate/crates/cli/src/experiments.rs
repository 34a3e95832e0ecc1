//! Executes one experiment from a parsed config. All physics numbers come
//! from library operations; this module only assembles them into reports.

use ndarray::Array1;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sepsim_core::bcl::{self, MeasurementCoupling, Verdict};
use sepsim_core::gemenge::GemengeState;
use sepsim_core::grid::{Region, WaveFunction};
use sepsim_core::hilbert::StateVector;
use sepsim_core::separability;
use sepsim_core::TOL_OPERATOR;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct AssertionRecord {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl AssertionRecord {
    fn residual(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: value <= tolerance,
            value,
            tolerance,
        }
    }
}

/// Headline numbers for one sweep row; fields stay empty where the
/// experiment does not produce them.
#[derive(Debug, Clone, Default)]
pub struct SweepMetrics {
    pub discrepancy: Option<f64>,
    pub off_diagonal_norm: Option<f64>,
    pub probabilities: Option<Vec<f64>>,
    pub nu_squared: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub metrics: Map<String, Value>,
    pub assertions: Vec<AssertionRecord>,
    pub sweep: SweepMetrics,
}

pub fn run_experiment(config: &ExperimentConfig) -> CliResult<ExperimentOutput> {
    if config.trials == 0 {
        return Err(CliError::validation("trials: must be at least 1"));
    }
    match config.experiment {
        ExperimentKind::Separability => run_separability(config),
        ExperimentKind::Bcl => run_bcl(config),
        ExperimentKind::Registration => run_registration(config),
    }
}

fn run_separability(config: &ExperimentConfig) -> CliResult<ExperimentOutput> {
    let section = config.separability.as_ref().ok_or_else(|| {
        CliError::validation("missing section 'separability' for experiment=separability")
    })?;
    let space = config.space()?;
    let stats = config.statistics.into();
    let psi = section.psi.to_wavefunction(space, "separability.psi")?;
    let phi_base = section.phi.to_wavefunction(space, "separability.phi")?;
    let phi = if section.rotation_angle == 0.0 {
        phi_base
    } else {
        let (sin, cos) = section.rotation_angle.sin_cos();
        let raw = Array1::from_iter(
            phi_base
                .amplitudes()
                .iter()
                .zip(psi.amplitudes().iter())
                .map(|(p, q)| p * cos + q * sin),
        );
        WaveFunction::normalized(space, raw)
            .map_err(|e| CliError::from_core(e, "separability.rotation_angle"))?
    };
    for &index in &section.region {
        if index >= space.len() {
            return Err(CliError::validation(format!(
                "separability.region: index {index} outside the {}-point grid",
                space.len()
            )));
        }
    }
    let region = Region::new(section.region.iter().copied());
    let observable = crate::config::build_observable(section, space, config.seed)?;

    let report = separability::check_cluster_separability(&psi, &phi, &observable, &region, stats)
        .map_err(|e| CliError::from_core(e, "separability"))?;
    let status = separability::separation_status(
        &psi,
        std::slice::from_ref(&phi),
        &region,
        config.trials,
        config.seed,
    )
    .map_err(|e| CliError::from_core(e, "separability"))?;
    let overlap = psi.overlap(&phi).norm();

    let threshold = config.tolerances.support_threshold;
    let psi_inside = psi.support(threshold).is_subset_of(&region);
    let phi_outside = !phi.support(threshold).intersects(&region);

    let mut assertions = Vec::new();
    if report.d_local && psi_inside && phi_outside {
        assertions.push(AssertionRecord::residual(
            "cluster_separability_agreement",
            report.discrepancy,
            config.tolerances.discrepancy,
        ));
    }
    if overlap <= config.tolerances.agreement {
        assertions.push(AssertionRecord::residual(
            "disturbance_identity",
            (report.avg_experiment_two - report.avg_experiment_one - report.disturbance_term)
                .abs(),
            config.tolerances.agreement,
        ));
    }

    let mut metrics = Map::new();
    metrics.insert("avg_experiment_one".into(), json!(report.avg_experiment_one));
    metrics.insert("avg_experiment_two".into(), json!(report.avg_experiment_two));
    metrics.insert("discrepancy".into(), json!(report.discrepancy));
    metrics.insert("disturbance_term".into(), json!(report.disturbance_term));
    metrics.insert("d_local".into(), json!(report.d_local));
    metrics.insert("supports_disjoint".into(), json!(report.supports_disjoint));
    metrics.insert("overlap_abs".into(), json!(overlap));
    metrics.insert("separation_status_holds".into(), json!(status.holds));
    metrics.insert(
        "separation_status_witness".into(),
        status.witness.map_or(Value::Null, Value::String),
    );

    Ok(ExperimentOutput {
        metrics,
        assertions,
        sweep: SweepMetrics {
            discrepancy: Some(report.discrepancy),
            ..SweepMetrics::default()
        },
    })
}

/// The coupling and input for a measurement-model run: either the
/// standalone `bcl` section, or the coupling of the `registration` section
/// (which lets one config core drive both experiments).
fn measurement_setup(config: &ExperimentConfig) -> CliResult<(MeasurementCoupling, StateVector)> {
    if let Some(section) = &config.bcl {
        let dim = section.system_dim;
        if dim < 2 {
            return Err(CliError::validation("bcl.system_dim: must be at least 2"));
        }
        let eig = crate::config::build_eigenstructure(
            &section.outcomes,
            section.eigenvalues.as_ref(),
            dim,
            true,
            "bcl",
        )?;
        let outcome_count = eig.outcome_count();
        let apparatus_dim = outcome_count + 1;
        let ready = StateVector::basis(apparatus_dim, 0);
        let pointers: Vec<StateVector> = (1..=outcome_count)
            .map(|k| StateVector::basis(apparatus_dim, k))
            .collect();
        let coupling = match &section.post_states {
            None => MeasurementCoupling::standard(eig, ready, pointers),
            Some(specs) => {
                let mut posts = Vec::with_capacity(specs.len());
                for (k, group) in specs.iter().enumerate() {
                    let mut states = Vec::with_capacity(group.len());
                    for (l, spec) in group.iter().enumerate() {
                        states.push(
                            spec.to_state_vector(dim, &format!("bcl.post_states[{k}][{l}]"))?,
                        );
                    }
                    posts.push(states);
                }
                MeasurementCoupling::new(eig, ready, pointers, posts)
            }
        }
        .map_err(|e| CliError::from_core(e, "bcl"))?;
        let input = section.input.to_state_vector(dim, "bcl.input")?;
        Ok((coupling, input))
    } else if config.registration.is_some() {
        let (model, input) = crate::config::build_registration_model(config)?;
        Ok((model.coupling().clone(), input))
    } else {
        Err(CliError::validation(
            "missing section 'bcl' (or 'registration') for experiment=bcl",
        ))
    }
}

fn verdict_name(verdict: Verdict) -> &'static str {
    match verdict {
        Verdict::Satisfied => "satisfied",
        Verdict::Failed => "failed",
    }
}

fn run_bcl(config: &ExperimentConfig) -> CliResult<ExperimentOutput> {
    let (coupling, input) = measurement_setup(config)?;
    let outcome =
        bcl::measure(&coupling, &input).map_err(|e| CliError::from_core(e, "bcl.input"))?;
    let claimed = GemengeState::pure(&outcome.final_state)
        .map_err(|e| CliError::from_core(e, "bcl"))?;
    let objectification = bcl::check_objectification(&outcome, &claimed);

    let probability_sum = outcome.probability_sum();
    let reconstruction = outcome.reconstruction_residual();
    let closed_form = outcome.apparatus_closed_form_residual();

    let assertions = vec![
        AssertionRecord::residual(
            "probability_sum",
            (probability_sum - 1.0).abs(),
            TOL_OPERATOR,
        ),
        AssertionRecord::residual("premeasurement_reconstruction", reconstruction, TOL_OPERATOR),
        AssertionRecord::residual("apparatus_closed_form", closed_form, TOL_OPERATOR),
    ];

    let mut metrics = Map::new();
    metrics.insert("probabilities".into(), json!(outcome.probabilities));
    metrics.insert("probability_sum".into(), json!(probability_sum));
    metrics.insert("reconstruction_residual".into(), json!(reconstruction));
    metrics.insert("apparatus_closed_form_residual".into(), json!(closed_form));
    metrics.insert(
        "off_diagonal_norm".into(),
        json!(objectification.off_diagonal_norm),
    );
    metrics.insert(
        "pointer_span_residual".into(),
        json!(objectification.pointer_span_residual),
    );
    metrics.insert(
        "diagonal_weight_error".into(),
        json!(objectification.diagonal_weight_error),
    );
    metrics.insert("condition_a".into(), json!(objectification.condition_a));
    metrics.insert("condition_b".into(), json!(objectification.condition_b));
    metrics.insert(
        "objectification".into(),
        json!(verdict_name(objectification.verdict)),
    );

    Ok(ExperimentOutput {
        metrics,
        assertions,
        sweep: SweepMetrics {
            off_diagonal_norm: Some(objectification.off_diagonal_norm),
            probabilities: Some(outcome.probabilities.clone()),
            ..SweepMetrics::default()
        },
    })
}

/// `{weight, matrix}` rows for a gemenge, matrices as `[re, im]` pairs.
fn gemenge_components(gemenge: &GemengeState) -> Value {
    let rows: Vec<Value> = gemenge
        .components()
        .iter()
        .map(|(weight, state)| {
            let n = state.total_dim();
            let matrix: Vec<Vec<[f64; 2]>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let z = state.entries()[(i, j)];
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect();
            json!({ "weight": weight, "matrix": matrix })
        })
        .collect();
    Value::Array(rows)
}

fn run_registration(config: &ExperimentConfig) -> CliResult<ExperimentOutput> {
    let (model, input) = crate::config::build_registration_model(config)?;
    let report = sepsim_core::registration::verify_model(&model, &input)
        .map_err(|e| CliError::from_core(e, "registration"))?;

    let mut assertions: Vec<AssertionRecord> = report
        .assertions
        .iter()
        .map(|a| AssertionRecord {
            name: a.name.clone(),
            pass: a.pass,
            value: a.value,
            tolerance: a.tolerance,
        })
        .collect();
    assertions.push(AssertionRecord {
        name: "objectification_satisfied".into(),
        pass: report.objectification.verdict == Verdict::Satisfied,
        value: report.objectification.off_diagonal_norm,
        tolerance: TOL_OPERATOR,
    });

    let nu_squared: Vec<Value> = report
        .intermediate
        .nu_squared
        .iter()
        .map(|nu| nu.map_or(Value::Null, |x| json!(x)))
        .collect();

    let mut metrics = Map::new();
    metrics.insert(
        "probabilities".into(),
        json!(report.intermediate.probabilities),
    );
    metrics.insert(
        "weights".into(),
        json!(report.intermediate.gemenge.weights()),
    );
    metrics.insert(
        "outcome_indices".into(),
        json!(report.intermediate.outcome_indices),
    );
    metrics.insert("nu_squared".into(), Value::Array(nu_squared));
    metrics.insert(
        "component_count".into(),
        json!(report.intermediate.gemenge.len()),
    );
    metrics.insert(
        "gemenge_trivial".into(),
        json!(report.intermediate.gemenge.is_trivial()),
    );
    metrics.insert(
        "off_diagonal_norm".into(),
        json!(report.objectification.off_diagonal_norm),
    );
    metrics.insert(
        "pointer_span_residual".into(),
        json!(report.objectification.pointer_span_residual),
    );
    metrics.insert(
        "diagonal_weight_error".into(),
        json!(report.objectification.diagonal_weight_error),
    );
    metrics.insert(
        "condition_a".into(),
        json!(report.objectification.condition_a),
    );
    metrics.insert(
        "condition_b".into(),
        json!(report.objectification.condition_b),
    );
    metrics.insert(
        "objectification".into(),
        json!(verdict_name(report.objectification.verdict)),
    );
    metrics.insert("satisfied".into(), json!(report.satisfied));
    if config
        .registration
        .as_ref()
        .is_some_and(|section| section.emit_components)
    {
        metrics.insert(
            "gemenge".into(),
            gemenge_components(&report.intermediate.gemenge),
        );
    }

    Ok(ExperimentOutput {
        metrics,
        assertions,
        sweep: SweepMetrics {
            off_diagonal_norm: Some(report.objectification.off_diagonal_norm),
            probabilities: Some(report.intermediate.probabilities.clone()),
            nu_squared: Some(report.intermediate.nu_squared.clone()),
            ..SweepMetrics::default()
        },
    })
}
