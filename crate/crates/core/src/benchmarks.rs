//! The five reference problems and the family-comparison matrix.

use std::sync::Arc;

use rayon::prelude::*;

use crate::approximators::{parse_structure, FamilySpec};
use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::integrand::parse_integrand;
use crate::loss::{Problem, SolutionFn};
use crate::optimizer::{train, TrainConfig, TrainReport, TrainStatus};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct BenchmarkCase<T> {
    /// 1-based case number.
    pub id: usize,
    /// Name accepted on the command line.
    pub slug: &'static str,
    pub problem: Problem<T>,
    pub j_exact_analytic: T,
    /// Exact value as printed alongside the original results.
    pub j_paper_reported: Option<f64>,
    pub default_structures: Vec<FamilySpec>,
}

impl<T: Scalar> BenchmarkCase<T> {
    pub fn exact_solution(&self, x: T) -> (T, T) {
        let exact = self.problem.exact.as_ref().expect("builtin cases carry a solution");
        (exact.solution)(x)
    }

    /// True when the printed reference disagrees with the analytic value by
    /// more than 1e-2 relative (beyond rounding of the printed digits).
    pub fn reference_discrepancy(&self) -> bool {
        let analytic = self.j_exact_analytic.as_f64();
        self.j_paper_reported
            .is_some_and(|p| (p - analytic).abs() > 1e-2 * analytic.abs())
    }
}

pub const BUILTIN_SLUGS: [&str; 5] = [
    "shortest-path",
    "minimum-drag",
    "quadratic-drift",
    "forced-cosine",
    "harmonic-forcing",
];

fn structures(list: &[&str]) -> Vec<FamilySpec> {
    list.iter()
        .map(|s| parse_structure(s).expect("builtin structure"))
        .collect()
}

fn case<T: Scalar>(
    id: usize,
    integrand: &str,
    (x_a, x_b, y_a, y_b): (T, T, T, T),
    solution: SolutionFn<T>,
    j_exact: T,
    j_printed: f64,
    default_structures: &[&str],
) -> BenchmarkCase<T> {
    let slug = BUILTIN_SLUGS[id - 1];
    let bc = BoundaryCondition::new(x_a, x_b, y_a, y_b).expect("builtin interval");
    let problem = Problem::new(slug, parse_integrand(integrand).expect("builtin integrand"), bc)
        .with_exact(solution, j_exact);
    BenchmarkCase {
        id,
        slug,
        problem,
        j_exact_analytic: j_exact,
        j_paper_reported: Some(j_printed),
        default_structures: structures(default_structures),
    }
}

/// The five reference problems in order.
pub fn builtin_cases<T: Scalar>() -> Vec<BenchmarkCase<T>> {
    let l = T::lit;
    let (zero, one) = (T::zero(), T::one());
    let pi = T::PI();
    let half_pi = T::FRAC_PI_2();
    vec![
        case(
            1,
            "sqrt(1 + dy^2)",
            (-one, one, zero, l(2.0)),
            Arc::new(move |x: T| (x + one, one)),
            l(2.0) * T::SQRT_2(),
            2.8284,
            &["Pade-[5/5]", "RBF-[8]", "MLP-[[8,sigmoid]]", "Leg-10", "Poly-10"],
        ),
        case(
            2,
            "y * dy^3",
            (zero, one, zero, one),
            Arc::new(move |x: T| (x.powf(l(0.75)), l(0.75) * x.powf(l(-0.25)))),
            l(27.0) / l(64.0),
            0.4219,
            &["Pade-[8/10]", "RBF-[8]", "MLP-[[16,sigmoid]]", "Leg-15", "Poly-15"],
        ),
        case(
            3,
            "dy^2 + x*dy",
            (zero, one, zero, l(0.25)),
            Arc::new(move |x: T| (l(0.5) * x * (one - l(0.5) * x), l(0.5) * (one - x))),
            one / l(6.0),
            5.0 / 3.0,
            &["Pade-[8/10]", "RBF-[16]", "MLP-[[16,sigmoid]]", "Leg-15"],
        ),
        case(
            4,
            "dy^2 - 2*y*cos(x + pi/2)",
            (-half_pi, half_pi, zero, zero),
            Arc::new(move |x: T| ((x + half_pi).cos() + l(2.0) / pi * x, -(x + half_pi).sin() + l(2.0) / pi)),
            l(4.0) / pi - half_pi,
            -0.2976,
            &["Pade-[4/5]", "RBF-[16]", "MLP-[[16,sigmoid]]", "Leg-15"],
        ),
        case(
            5,
            "dy^2 - y^2 - 2*x*y",
            (zero, one, zero, zero),
            Arc::new(move |x: T| (x.sin() / one.sin() - x, x.cos() / one.sin() - one)),
            one / one.tan() - l(2.0) / l(3.0),
            -0.0246,
            &["Pade-[4/5]", "RBF-[16]", "MLP-[[16,sigmoid]]", "Leg-15"],
        ),
    ]
}

/// Looks up a builtin case by slug or by its number (`"1"`..`"5"`).
pub fn builtin_case<T: Scalar>(name: &str) -> Result<BenchmarkCase<T>> {
    let index = match name.parse::<usize>() {
        Ok(i @ 1..=5) => i - 1,
        _ => BUILTIN_SLUGS.iter().position(|s| *s == name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown builtin problem `{name}`; available: {}",
                BUILTIN_SLUGS.join(", ")
            ))
        })?,
    };
    Ok(builtin_cases().swap_remove(index))
}

/// `(j_exact - j_net) / j_exact`.
pub fn relative_error<T: Scalar>(j_exact: T, j_net: T) -> Result<T> {
    if j_exact.abs() < T::lit(1e-300) {
        return Err(Error::DegenerateReference(j_exact.as_f64()));
    }
    Ok((j_exact - j_net) / j_exact)
}

#[derive(Debug, Clone)]
pub struct MatrixOptions {
    pub seeds: Vec<u64>,
    /// Maximum concurrently running pairs; 1 runs serially.
    pub parallel: usize,
    /// Retry a failed run once with `seed + 1`.
    pub retry_on_failure: bool,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        Self {
            seeds: vec![42],
            parallel: 1,
            retry_on_failure: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixRow<T> {
    pub case_id: usize,
    pub structure: FamilySpec,
    pub n_params: usize,
    /// One report per seed, in seed order.
    pub runs: Vec<TrainReport<T>>,
    /// Median `j_final` over successful runs; NaN if all failed.
    pub j_final: T,
    pub relative_error: T,
    /// Index into `runs` of the run whose curve represents the row.
    pub representative: usize,
}

impl<T: Scalar> MatrixRow<T> {
    pub fn failed(&self) -> bool {
        self.runs.iter().all(|r| r.status.is_failed())
    }

    pub fn any_failed(&self) -> bool {
        self.runs.iter().any(|r| r.status.is_failed())
    }

    pub fn curve(&self) -> &TrainReport<T> {
        &self.runs[self.representative]
    }

    pub fn status(&self) -> &TrainStatus {
        &self.curve().status
    }
}

#[derive(Debug, Clone)]
pub struct CaseTable<T> {
    pub case_id: usize,
    pub slug: &'static str,
    pub j_exact: T,
    pub j_paper_reported: Option<f64>,
    pub rows: Vec<MatrixRow<T>>,
}

#[derive(Debug, Clone)]
pub struct MatrixReport<T> {
    /// Sorted by case id, rows in structure order.
    pub tables: Vec<CaseTable<T>>,
}

impl<T: Scalar> MatrixReport<T> {
    pub fn all_succeeded(&self) -> bool {
        self.tables.iter().flat_map(|t| &t.rows).all(|r| !r.any_failed())
    }
}

fn run_with_retry<T: Scalar>(
    problem: &Problem<T>,
    spec: &FamilySpec,
    cfg: &TrainConfig,
    retry: bool,
) -> Result<TrainReport<T>> {
    let report = train(problem, spec, cfg)?;
    if retry && report.status.is_failed() {
        let cfg = TrainConfig {
            seed: cfg.seed.wrapping_add(1),
            ..cfg.clone()
        };
        return train(problem, spec, &cfg);
    }
    Ok(report)
}

/// Trains every `(case, structure, seed)` combination.
///
/// `structures = None` uses each case's default structures. Individual
/// training failures are recorded in the rows; the matrix always completes.
pub fn run_matrix<T: Scalar>(
    cases: &[BenchmarkCase<T>],
    structures: Option<&[FamilySpec]>,
    cfg: &TrainConfig,
    opts: &MatrixOptions,
) -> Result<MatrixReport<T>> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument("no benchmark cases selected".into()));
    }
    if structures.is_some_and(|s| s.is_empty()) {
        return Err(Error::InvalidArgument("no structures selected".into()));
    }
    if opts.seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    cfg.validate()?;

    let mut cases: Vec<&BenchmarkCase<T>> = cases.iter().collect();
    cases.sort_by_key(|c| c.id);

    let mut jobs = Vec::new();
    for (ci, case) in cases.iter().enumerate() {
        let specs = structures.unwrap_or(&case.default_structures);
        for (si, spec) in specs.iter().enumerate() {
            for &seed in &opts.seeds {
                jobs.push((ci, si, spec.clone(), seed));
            }
        }
    }

    let run = |(ci, _, spec, seed): &(usize, usize, FamilySpec, u64)| {
        let cfg = TrainConfig {
            seed: *seed,
            ..cfg.clone()
        };
        run_with_retry(&cases[*ci].problem, spec, &cfg, opts.retry_on_failure)
    };
    let reports: Vec<TrainReport<T>> = if opts.parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.parallel)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect::<Result<_>>())?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };

    let mut tables: Vec<CaseTable<T>> = cases
        .iter()
        .map(|c| CaseTable {
            case_id: c.id,
            slug: c.slug,
            j_exact: c.j_exact_analytic,
            j_paper_reported: c.j_paper_reported,
            rows: Vec::new(),
        })
        .collect();

    let per_row = opts.seeds.len();
    for (chunk, job_chunk) in reports.chunks(per_row).zip(jobs.chunks(per_row)) {
        let (ci, _, spec, _) = &job_chunk[0];
        let j_exact = cases[*ci].j_exact_analytic;
        let runs = chunk.to_vec();
        let (j_final, representative) = median_run(&runs);
        let relative_error = if j_final.is_nan() {
            T::nan()
        } else {
            relative_error(j_exact, j_final)?
        };
        tables[*ci].rows.push(MatrixRow {
            case_id: cases[*ci].id,
            structure: spec.clone(),
            n_params: spec.param_count(),
            runs,
            j_final,
            relative_error,
            representative,
        });
    }
    Ok(MatrixReport { tables })
}

/// Median `j_final` over successful runs (lower median for even counts) and
/// the index of the run attaining it.
fn median_run<T: Scalar>(runs: &[TrainReport<T>]) -> (T, usize) {
    let mut ok: Vec<(T, usize)> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.status.is_failed())
        .map(|(i, r)| (r.j_final, i))
        .collect();
    if ok.is_empty() {
        return (T::nan(), 0);
    }
    ok.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite losses").then(a.1.cmp(&b.1)));
    ok[(ok.len() - 1) / 2]
}
