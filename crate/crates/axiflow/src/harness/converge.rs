//! Convergence studies over a mesh refinement sequence, with experimental
//! orders of convergence. Rows run in parallel; output order is fixed by
//! the refinement sequence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harness::config::ExperimentConfig;
use crate::harness::run::{run_simulation, TerminalStatus};
use crate::schemes::FlowSpec;
use crate::Result;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub base: ExperimentConfig,
    pub j_values: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub j: usize,
    pub h_gamma0: f64,
    pub error: Option<f64>,
    pub eoc: Option<f64>,
    pub status: TerminalStatus,
    pub detail: String,
    pub max_newton_iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub flow: FlowSpec,
    pub t_end: f64,
    pub rows: Vec<ConvergenceRow>,
}

pub fn run_convergence_study(study: &ConvergenceStudy) -> Result<ConvergenceReport> {
    let mut base = study.base.clone();
    base.track_radius_error = true;
    base.validate()?;

    let results: Vec<Result<ConvergenceRow>> = study
        .j_values
        .par_iter()
        .map(|&j| {
            let mut config = base.clone();
            config.j = j;
            let outcome = run_simulation(&config)?;
            Ok(ConvergenceRow {
                j,
                h_gamma0: outcome.h_gamma0,
                error: (outcome.status == TerminalStatus::Completed)
                    .then_some(outcome.max_radius_error)
                    .flatten(),
                eoc: None,
                status: outcome.status,
                detail: outcome.detail,
                max_newton_iterations: outcome.max_newton_iterations,
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    for k in 1..rows.len() {
        if let (Some(e_prev), Some(e_cur)) = (rows[k - 1].error, rows[k].error) {
            let (h_prev, h_cur) = (rows[k - 1].h_gamma0, rows[k].h_gamma0);
            rows[k].eoc = Some((e_prev / e_cur).ln() / (h_prev / h_cur).ln());
        }
    }

    Ok(ConvergenceReport {
        flow: base.flow,
        t_end: base.t_end,
        rows,
    })
}
