use serde::{Deserialize, Serialize};

use cvconj::channels::{apply_channel, conjugation_channel, fidelity_coherent};
use cvconj::constraints::{
    ancilla_row_family, check_constraints, grid_scan_row1, random_search_uniqueness, solve_row1, BranchAnalysis,
    UniquenessSummary,
};
use cvconj::gaussian::coherent_state;
use cvconj::protocols::{
    conjugation_fidelity_experiment, epr_bound_experiment, epr_bound_experiment_unchecked, measure_prepare_fidelity_mc,
    run_estimation, MeasurePrepareFidelity,
};
use cvconj::{EprReport, EstimationReport, VACUUM_VARIANCE};

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;
use crate::serialize::render;

/// Grid used by `solve` for the exhaustive first-row scan.
pub const SOLVE_GRID_STEP: f64 = 1e-3;
pub const SOLVE_GRID_UPPER: f64 = 3.0;
pub const SOLVE_GRID_TOL: f64 = 1e-3;
/// Residual tolerance for a projected random first row to count as feasible.
pub const SOLVE_SEARCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateReport {
    pub alpha_x: f64,
    pub alpha_p: f64,
    pub sigma2: f64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    /// Overlap with the ideal conjugate `|α*⟩`.
    pub fidelity: f64,
    /// Output quadrature variance above the vacuum level.
    pub added_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row1Report {
    pub m12: f64,
    pub l12: f64,
    pub branches: Vec<BranchAnalysis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub step: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub points_checked: usize,
    pub feasible_cells: usize,
    pub unique_near_solution: bool,
    pub feasible: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub constraint: String,
    pub residual: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncillaReport {
    pub parameterization: String,
    pub u: f64,
    pub phi: f64,
    pub m21: [f64; 2],
    pub m22: [f64; 2],
    pub l21: [f64; 2],
    pub l22: [f64; 2],
    pub residuals: Vec<ResidualEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub row1: Row1Report,
    pub grid_scan: GridReport,
    pub ancilla_row: AncillaReport,
    pub random_search: UniquenessSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub alpha_x: f64,
    pub alpha_p: f64,
    pub sigma2: f64,
    /// Closed form for the conjugation channel with noise `sigma2`.
    pub fidelity: f64,
    /// Heterodyne / flip / re-prepare simulation (always unit noise).
    pub measure_prepare: MeasurePrepareFidelity,
}

pub fn conjugate(c: &ExperimentConfig) -> Result<ConjugateReport, CliError> {
    let channel = conjugation_channel(c.sigma2)?;
    let out = apply_channel(&channel, &coherent_state(c.alpha_x, c.alpha_p))?;
    let (mean, cov) = out.mode_block(0)?;
    let fidelity = fidelity_coherent(&out, c.alpha_x, -c.alpha_p)?;
    Ok(ConjugateReport {
        alpha_x: c.alpha_x,
        alpha_p: c.alpha_p,
        sigma2: c.sigma2,
        mean: [mean[0], mean[1]],
        cov: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
        fidelity,
        added_noise: cov[(0, 0)] - VACUUM_VARIANCE,
    })
}

pub fn estimate(c: &ExperimentConfig) -> Result<EstimationReport, CliError> {
    let strategy = c
        .strategy
        .ok_or_else(|| CliError::Config("estimate requires --strategy".into()))?;
    Ok(run_estimation(strategy, c.alpha_x, c.alpha_p, c.shots, c.seed)?)
}

pub fn epr_bound(c: &ExperimentConfig) -> Result<Vec<EprReport>, CliError> {
    let grid = c
        .r_grid
        .ok_or_else(|| CliError::Config("epr-bound requires --r-grid".into()))?;
    grid.points()
        .into_iter()
        .map(|r| {
            if c.allow_unphysical {
                epr_bound_experiment_unchecked(r, c.sigma2)
            } else {
                epr_bound_experiment(r, c.sigma2)
            }
            .map_err(CliError::from)
        })
        .collect()
}

pub fn solve(c: &ExperimentConfig) -> Result<SolveReport, CliError> {
    let row1 = solve_row1::<f64>();
    let scan = grid_scan_row1(SOLVE_GRID_STEP, SOLVE_GRID_UPPER, SOLVE_GRID_TOL)?;
    let (u, phi) = (0.0, 0.0);
    let row = ancilla_row_family(u, phi);
    let (m, l) = row.coefficients();
    let report = check_constraints(&m, &l);
    Ok(SolveReport {
        row1: Row1Report {
            m12: row1.m12,
            l12: row1.l12,
            branches: row1.branches,
        },
        grid_scan: GridReport {
            step: scan.step,
            upper: scan.upper,
            tolerance: scan.tolerance,
            points_checked: scan.points_checked,
            feasible_cells: scan.feasible.len(),
            unique_near_solution: scan.unique_near_solution(),
            feasible: scan.feasible.clone(),
        },
        ancilla_row: AncillaReport {
            parameterization: "m22 = u*exp(i*phi), l22 = sqrt(1+u^2), m21 = sqrt2*l22, l21 = sqrt2*m22 \
                               (u >= 0, phi real; output phase of b2 fixed so l22 > 0)"
                .into(),
            u,
            phi,
            m21: [row.m21.re, row.m21.im],
            m22: [row.m22.re, row.m22.im],
            l21: [row.l21.re, row.l21.im],
            l22: [row.l22.re, row.l22.im],
            residuals: report
                .residuals
                .iter()
                .map(|r| ResidualEntry {
                    constraint: r.constraint.name().into(),
                    residual: r.residual,
                    satisfied: r.satisfied,
                })
                .collect(),
        },
        random_search: random_search_uniqueness(c.shots, c.seed, SOLVE_SEARCH_TOL)?,
    })
}

pub fn fidelity(c: &ExperimentConfig) -> Result<FidelityReport, CliError> {
    Ok(FidelityReport {
        alpha_x: c.alpha_x,
        alpha_p: c.alpha_p,
        sigma2: c.sigma2,
        fidelity: conjugation_fidelity_experiment(c.alpha_x, c.alpha_p, c.sigma2)?,
        measure_prepare: measure_prepare_fidelity_mc(c.alpha_x, c.alpha_p, c.shots, c.seed)?,
    })
}

/// Runs the configured experiment and renders its report.
pub fn execute(c: &ExperimentConfig) -> Result<String, CliError> {
    match c.command {
        Command::Conjugate => render(&conjugate(c)?, c.format),
        Command::Estimate => render(&estimate(c)?, c.format),
        Command::EprBound => render(&epr_bound(c)?, c.format),
        Command::Solve => render(&solve(c)?, c.format),
        Command::Fidelity => render(&fidelity(c)?, c.format),
    }
}
