//! Monte-Carlo comparison of the identification cases against the optimal
//! estimator of the true system.
//!
//! Every cell `(case, N, repetition)` is independent. The training
//! trajectory of repetition `m` at length `N` is simulated with seed
//! `derive_seed(derive_seed(seed, N), m)` and shared by all cases; the
//! validation trajectory of repetition `m` uses
//! `derive_seed(seed ^ VALIDATION_STREAM, m)`; the optimizer of case `c`
//! starts from `derive_seed(training seed, c)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{build_parameterization, identify, validate_estimator, Case, Dims, FixedBlocks, IdentifyConfig};
use crate::error::{Error, Result};
use crate::estimator;
use crate::linalg::{self, Matrix};
use crate::metrics::average_stats;
use crate::models::TriangularJointModel;
use crate::series::Trajectory;
use crate::simulation::{derive_seed, SimConfig, Simulate};

/// Dimensions of the benchmark system.
pub const TABLE_DIMS: Dims = Dims { n: 10, p1: 4, p2: 6, p: 3, q: 2 };

/// Seed of the benchmark system.
pub const SYSTEM_SEED: u64 = 2021;

/// Spectral radius of `A11` and `A22`.
pub const SYSTEM_RADIUS: f64 = 0.9;

/// `K` is shrunk until `ρ(A − K C)` is below this.
pub const PREDICTOR_RADIUS: f64 = 0.95;

/// Tag separating validation seeds from training seeds.
pub const VALIDATION_STREAM: u64 = 0x5641_4C49_4441_5445;

fn normal_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let v: f64 = StandardNormal.sample(rng);
            m[(i, j)] = scale * v;
        }
    }
    m
}

fn with_radius(m: Matrix, radius: f64) -> Result<Matrix> {
    let r = linalg::spectral_radius(&m)?;
    Ok(if r > 0.0 { m * (radius / r) } else { m })
}

/// Random feedback-free system in triangular coordinates (`T = I`).
///
/// Draw order from `ChaCha20Rng::seed_from_u64(seed)`, all entries standard
/// normal times the listed scale, row by row: `A11` (1), `A12` (0.5), `A22`
/// (1), `K11` (0.5), `K12` (0.5), `K22` (0.5), `C11` (1), `C12` (1), `C22`
/// (1), then `L` (0.5) with `Q = L Lᵀ + 0.5 I`. `A11` and `A22` are scaled to
/// spectral radius 0.9 and `K` is multiplied by 0.9 until
/// `ρ(A − K C) < 0.95`.
pub fn random_feedback_free_system(dims: Dims, seed: u64) -> Result<TriangularJointModel> {
    let Dims { n, p1, p2, p, q } = dims;
    if p1 + p2 != n || p == 0 || q == 0 || p2 == 0 {
        return Err(Error::Dimension(format!("invalid benchmark dims {dims:?}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let a11 = with_radius(normal_matrix(&mut rng, p1, p1, 1.0), SYSTEM_RADIUS)?;
    let a12 = normal_matrix(&mut rng, p1, p2, 0.5);
    let a22 = with_radius(normal_matrix(&mut rng, p2, p2, 1.0), SYSTEM_RADIUS)?;
    let mut t = TriangularJointModel {
        a11,
        a12,
        a22,
        k11: normal_matrix(&mut rng, p1, p, 0.5),
        k12: normal_matrix(&mut rng, p1, q, 0.5),
        k22: normal_matrix(&mut rng, p2, q, 0.5),
        c11: normal_matrix(&mut rng, p, p1, 1.0),
        c12: normal_matrix(&mut rng, p, p2, 1.0),
        c22: normal_matrix(&mut rng, q, p2, 1.0),
        q11: Matrix::zeros(p, p),
        q12: Matrix::zeros(p, q),
        q22: Matrix::zeros(q, q),
        t: Matrix::identity(n, n),
        p1,
        p2,
        p,
        q,
    };
    let l = normal_matrix(&mut rng, p + q, p + q, 0.5);
    let cov = &l * l.transpose() + Matrix::identity(p + q, p + q) * 0.5;
    t.q11 = linalg::block(&cov, 0, 0, p, p);
    t.q12 = linalg::block(&cov, 0, p, p, q);
    t.q22 = linalg::block(&cov, p, p, q, q);
    for _ in 0..500 {
        if linalg::spectral_radius(&(t.a() - t.k() * t.c()))? < PREDICTOR_RADIUS {
            return Ok(t);
        }
        for k in [&mut t.k11, &mut t.k12, &mut t.k22] {
            *k *= 0.9;
        }
    }
    Err(Error::NoConvergence { solver: "benchmark gain scaling", iterations: 500, residual: f64::NAN })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub cases: Vec<Case>,
    pub n_samples: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub validation_len: usize,
    pub validation_burn_in: usize,
    /// Optimizer settings; the seed is replaced per cell.
    pub identify: IdentifyConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            cases: Case::TABLE.to_vec(),
            n_samples: alloc::vec![150, 1000],
            repetitions: 20,
            seed: 1,
            validation_len: 5000,
            validation_burn_in: 100,
            identify: IdentifyConfig::default(),
        }
    }
}

/// Table column: the optimal estimator or an identified case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Column {
    Optimal,
    Identified(Case),
}

impl Column {
    pub fn name(&self) -> &'static str {
        match self {
            Column::Optimal => "case_0",
            Column::Identified(c) => c.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSpec {
    pub column: Column,
    pub n_samples: usize,
    pub repetition: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub spec: CellSpec,
    pub theta_dim: Option<usize>,
    pub training_mse: Option<f64>,
    pub validation_mse: Option<f64>,
    pub vaf: Vec<f64>,
    pub overparameterized: bool,
    pub converged: bool,
    pub error: Option<String>,
}

/// The true system and its optimal estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub system: TriangularJointModel,
    pub fixed: FixedBlocks,
    pub optimal: crate::models::EstimatorModel,
    pub config: BenchmarkConfig,
}

impl Benchmark {
    pub fn new(system: TriangularJointModel, config: BenchmarkConfig) -> Result<Self> {
        let optimal = estimator::synthesize(&system)?;
        Ok(Self { fixed: FixedBlocks::of(&system), system, optimal, config })
    }

    pub fn dims(&self) -> Dims {
        let s = &self.system;
        Dims { n: s.n(), p1: s.p1, p2: s.p2, p: s.p, q: s.q }
    }

    /// All cells in a fixed order: for each `N`, each repetition, Case 0 then
    /// the configured cases.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut out = Vec::new();
        for &n_samples in &self.config.n_samples {
            for repetition in 0..self.config.repetitions {
                out.push(CellSpec { column: Column::Optimal, n_samples, repetition });
                for &case in &self.config.cases {
                    out.push(CellSpec { column: Column::Identified(case), n_samples, repetition });
                }
            }
        }
        out
    }

    pub fn training_seed(&self, n_samples: usize, repetition: usize) -> u64 {
        derive_seed(derive_seed(self.config.seed, n_samples as u64), repetition as u64)
    }

    pub fn validation_seed(&self, repetition: usize) -> u64 {
        derive_seed(self.config.seed ^ VALIDATION_STREAM, repetition as u64)
    }

    pub fn training_data(&self, n_samples: usize, repetition: usize) -> Result<Trajectory> {
        let joint = self.system.assemble()?;
        joint.simulate(&SimConfig::new(n_samples, self.training_seed(n_samples, repetition)))
    }

    pub fn validation_data(&self, repetition: usize) -> Result<Trajectory> {
        let joint = self.system.assemble()?;
        joint.simulate(&SimConfig::new(self.config.validation_len, self.validation_seed(repetition)))
    }

    /// Runs one cell. Failures are recorded in the result.
    pub fn run_cell(&self, spec: CellSpec) -> CellResult {
        let mut cell = CellResult {
            spec,
            theta_dim: None,
            training_mse: None,
            validation_mse: None,
            vaf: Vec::new(),
            overparameterized: false,
            converged: false,
            error: None,
        };
        if let Err(e) = self.fill_cell(&mut cell) {
            cell.error = Some(format!("{e}"));
        }
        cell
    }

    fn fill_cell(&self, cell: &mut CellResult) -> Result<()> {
        let spec = cell.spec;
        let validation = self.validation_data(spec.repetition)?;
        let burn_in = self.config.validation_burn_in;
        let est = match spec.column {
            Column::Optimal => {
                cell.converged = true;
                self.optimal.clone()
            }
            Column::Identified(case) => {
                let fixed = matches!(case, Case::PredPartial | Case::GenPartial).then(|| self.fixed.clone());
                let par = build_parameterization(case, self.dims(), fixed)?;
                cell.theta_dim = Some(par.theta_dim);
                let train = self.training_data(spec.n_samples, spec.repetition)?;
                let case_index = Case::TABLE.iter().position(|c| *c == case).unwrap_or(0) as u64;
                let cfg = IdentifyConfig {
                    seed: derive_seed(self.training_seed(spec.n_samples, spec.repetition), case_index),
                    ..self.config.identify.clone()
                };
                let fit = identify(&par, &train, &cfg)?;
                cell.training_mse = Some(fit.training_mse);
                cell.overparameterized = fit.overparameterized;
                cell.converged = fit.converged;
                fit.estimator
            }
        };
        let (mse, vaf) = validate_estimator(&est, &validation, burn_in)?;
        cell.validation_mse = Some(mse);
        cell.vaf = vaf;
        Ok(())
    }

    /// Runs every cell sequentially.
    pub fn run(&self) -> Vec<CellResult> {
        self.cells().into_iter().map(|c| self.run_cell(c)).collect()
    }
}

/// Averages over the successful repetitions of one `(column, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub column: Column,
    pub n_samples: usize,
    pub total_parameters: Option<usize>,
    pub training_mse: Option<f64>,
    pub validation_mse: Option<f64>,
    pub vaf: Vec<Option<f64>>,
    pub mean_vaf: Option<f64>,
    pub successes: usize,
    pub failures: usize,
}

/// Groups cells by `(N, column)` in first-seen order.
pub fn summarize(cells: &[CellResult], p: usize) -> Vec<Summary> {
    let mut keys: Vec<(usize, Column)> = Vec::new();
    for c in cells {
        let key = (c.spec.n_samples, c.spec.column);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(n_samples, column)| {
            let group: Vec<&CellResult> =
                cells.iter().filter(|c| c.spec.n_samples == n_samples && c.spec.column == column).collect();
            let ok: Vec<&CellResult> = group.iter().copied().filter(|c| c.error.is_none()).collect();
            let avg = |f: &dyn Fn(&CellResult) -> Option<f64>| {
                let vals: Vec<f64> = ok.iter().filter_map(|c| f(c)).collect();
                average_stats(&vals).ok()
            };
            let vaf: Vec<Option<f64>> = (0..p).map(|i| avg(&|c: &CellResult| c.vaf.get(i).copied())).collect();
            let mean_vaf = vaf.iter().copied().collect::<Option<Vec<f64>>>().and_then(|v| average_stats(&v).ok());
            Summary {
                column,
                n_samples,
                total_parameters: group.iter().find_map(|c| c.theta_dim),
                training_mse: avg(&|c: &CellResult| c.training_mse),
                validation_mse: avg(&|c: &CellResult| c.validation_mse),
                vaf,
                mean_vaf,
                successes: ok.len(),
                failures: group.len() - ok.len(),
            }
        })
        .collect()
}

/// Column order of the summary table.
pub const TABLE_COLUMNS: [Column; 5] = [
    Column::Optimal,
    Column::Identified(Case::PredFull),
    Column::Identified(Case::GenFull),
    Column::Identified(Case::PredPartial),
    Column::Identified(Case::GenPartial),
];

/// Rows `Total Parameters, Training MSE, Validation MSE, VAF_1..VAF_p,
/// mean VAF` against [`TABLE_COLUMNS`] for one `N`. Missing entries are
/// `None`; Case 0 has no parameters and no training MSE.
pub fn table_rows(summaries: &[Summary], n_samples: usize, p: usize) -> Vec<(String, Vec<Option<f64>>)> {
    let find = |col: Column| summaries.iter().find(|s| s.n_samples == n_samples && s.column == col);
    let row = |f: &dyn Fn(&Summary) -> Option<f64>| -> Vec<Option<f64>> {
        TABLE_COLUMNS.iter().map(|&c| find(c).and_then(f)).collect()
    };
    let mut rows = alloc::vec![
        ("Total Parameters".into(), row(&|s| s.total_parameters.map(|v| v as f64))),
        ("Training MSE".into(), row(&|s| s.training_mse)),
        ("Validation MSE".into(), row(&|s| s.validation_mse)),
    ];
    for i in 0..p {
        rows.push((format!("VAF_{}", i + 1), row(&|s| s.vaf.get(i).copied().flatten())));
    }
    rows.push(("mean VAF".into(), row(&|s| s.mean_vaf)));
    rows
}
