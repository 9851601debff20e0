//! Experiment plumbing: multi-seed runs, aggregation, verification of saved
//! solutions, comparison against best-known records and the neighbor
//! maintenance timing study.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::error::Result;
use crate::geometry::{check_feasible, density, FeasibilityReport, Solution};
use crate::io::{self, AnmExperimentRow, RecordsTable, SummaryRow};
use crate::lbfgs::{minimize, OptimizerSettings};
use crate::objective::ElasticEnergy;
use crate::pipeline::{solve, SolveConfig, SolveResult};
use crate::rng::{run_seed, seeded};
use crate::sed::random_layout;

/// Two radii closer than this are the same result.
pub const MATCH_TOL: f64 = 1e-9;

/// Aggregate of several independent runs on one instance.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub n: usize,
    pub radii: Vec<f64>,
    pub r_best: f64,
    pub r_avg: f64,
    pub delta_best: Option<f64>,
    pub delta_avg: Option<f64>,
    pub hr: f64,
    pub rr: Option<f64>,
    pub density_best: f64,
    pub time_to_best: Vec<Duration>,
    pub seeds: Vec<u64>,
    pub seed_base: u64,
    pub best: Solution,
}

impl RunRecord {
    /// Summarizes finished runs. `results` must be non-empty.
    pub fn aggregate(results: &[SolveResult], seed_base: u64, records: Option<&RecordsTable>) -> Self {
        assert!(!results.is_empty(), "aggregate needs at least one run");
        let n = results[0].best.n();
        let radii: Vec<f64> = results.iter().map(|r| r.best_radius).collect();
        let best_run = results.iter().min_by(|a, b| a.best_radius.total_cmp(&b.best_radius)).unwrap();
        let r_best = best_run.best_radius;
        let r_avg = if radii.len() == 1 { r_best } else { radii.iter().sum::<f64>() / radii.len() as f64 };
        let runs = radii.len() as f64;
        let hr = radii.iter().filter(|&&r| r - r_best <= MATCH_TOL).count() as f64 / runs;
        let record = records.and_then(|t| t.get(n));
        let rr = record.map(|rec| radii.iter().filter(|&&r| r <= rec + MATCH_TOL).count() as f64 / runs);
        Self {
            n,
            r_best,
            r_avg,
            delta_best: record.map(|rec| r_best - rec),
            delta_avg: record.map(|rec| r_avg - rec),
            hr,
            rr,
            density_best: density(&best_run.best),
            time_to_best: results.iter().map(|r| r.time_to_best).collect(),
            seeds: results.iter().map(|r| r.seed).collect(),
            seed_base,
            best: best_run.best.clone(),
            radii,
        }
    }

    pub fn summary_row(&self) -> SummaryRow {
        let ttb = self.time_to_best.iter().map(Duration::as_secs_f64).sum::<f64>() / self.time_to_best.len() as f64;
        SummaryRow {
            n: self.n,
            r_best: self.r_best,
            r_avg: self.r_avg,
            delta_best: self.delta_best,
            delta_avg: self.delta_avg,
            hr: self.hr,
            rr: self.rr,
            density_best: self.density_best,
            time_to_best_s: ttb,
            seed_base: self.seed_base,
            runs: self.radii.len(),
        }
    }
}

/// Runs `runs` solves with seeds derived from `seed_base`. When `out_dir` is
/// given, each run's best solution is written there and a row is appended to
/// `summary.csv`.
pub fn run_instance(
    config: &SolveConfig,
    runs: usize,
    seed_base: u64,
    records: Option<&RecordsTable>,
    out_dir: Option<&Path>,
) -> Result<(RunRecord, Vec<SolveResult>)> {
    if runs == 0 {
        return Err(crate::PessError::InvalidArgument("runs must be at least 1".into()));
    }
    let mut results = Vec::with_capacity(runs);
    for i in 0..runs {
        let seed = run_seed(seed_base, i as u64);
        let result = solve(&SolveConfig { seed, ..config.clone() })?;
        log::info!("n={} run {i} seed {seed}: radius {:.12}", config.n, result.best_radius);
        if let Some(dir) = out_dir {
            io::write_solution(&io::solution_file_name(dir, config.n, seed), &result.best)?;
        }
        results.push(result);
    }
    let record = RunRecord::aggregate(&results, seed_base, records);
    if let Some(dir) = out_dir {
        io::append_csv(&dir.join("summary.csv"), &[record.summary_row()])?;
    }
    Ok((record, results))
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub solution: Solution,
    pub feasibility: FeasibilityReport,
    pub density: f64,
}

impl Verdict {
    pub fn feasible(&self) -> bool {
        self.feasibility.feasible
    }
}

/// Re-checks a stored solution using only the geometric constraints.
pub fn verify_solution(path: &Path, geom_tol: f64) -> Result<Verdict> {
    let solution = io::read_solution(path)?;
    let feasibility = check_feasible(&solution, geom_tol);
    Ok(Verdict { density: density(&solution), feasibility, solution })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Improved,
    Equal,
    Worse,
    /// Present on only one side.
    Absent,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Improved => "improved",
            Self::Equal => "equal",
            Self::Worse => "worse",
            Self::Absent => "absent",
        };
        f.write_str(s)
    }
}

pub fn classify(r_best: f64, record: f64, tol: f64) -> Classification {
    let diff = r_best - record;
    if diff.abs() <= tol {
        Classification::Equal
    } else if diff < 0.0 {
        Classification::Improved
    } else {
        Classification::Worse
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub n: usize,
    pub r_best: Option<f64>,
    pub record: Option<f64>,
    pub class: Classification,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub improved: usize,
    pub equal: usize,
    pub worse: usize,
    pub absent: usize,
}

/// Outer join of summary rows and records on `n`. Repeated summary rows for
/// the same `n` are merged by taking the smallest radius.
pub fn compare_records(summary: &[SummaryRow], records: &RecordsTable, tol: f64) -> Comparison {
    let mut ours = std::collections::BTreeMap::new();
    for row in summary {
        ours.entry(row.n).and_modify(|r: &mut f64| *r = r.min(row.r_best)).or_insert(row.r_best);
    }
    let mut keys: Vec<usize> = ours.keys().copied().chain(records.iter().map(|(n, _)| n)).collect();
    keys.sort_unstable();
    keys.dedup();

    let mut out = Comparison::default();
    for n in keys {
        let r_best = ours.get(&n).copied();
        let record = records.get(n);
        let class = match (r_best, record) {
            (Some(r), Some(rec)) => classify(r, rec, tol),
            _ => Classification::Absent,
        };
        match class {
            Classification::Improved => out.improved += 1,
            Classification::Equal => out.equal += 1,
            Classification::Worse => out.worse += 1,
            Classification::Absent => out.absent += 1,
        }
        out.rows.push(ComparisonRow { n, r_best, record, class });
    }
    out
}

pub fn compare_files(summary: &Path, records: &Path) -> Result<Comparison> {
    let rows: Vec<SummaryRow> = io::read_csv(summary)?;
    let table = RecordsTable::read(records)?;
    Ok(compare_records(&rows, &table, MATCH_TOL))
}

/// One paired run of the maintenance study.
#[derive(Debug, Clone, Copy)]
pub struct AnmSample {
    pub runtime_anm: Duration,
    pub runtime_brute: Duration,
    pub deferring_ratio: f64,
    pub iterations_anm: usize,
    pub iterations_brute: usize,
    pub value_anm: f64,
    pub value_brute: f64,
}

#[derive(Debug, Clone)]
pub struct AnmStudy {
    pub row: AnmExperimentRow,
    pub samples: Vec<AnmSample>,
}

/// Minimizes the same random layouts twice, once with deferred neighbor
/// maintenance and once rebuilding every iteration, and compares runtimes.
pub fn anm_experiment(n_list: &[usize], runs: usize, seed_base: u64, opt: &OptimizerSettings) -> Result<Vec<AnmStudy>> {
    if runs == 0 {
        return Err(crate::PessError::InvalidArgument("runs must be at least 1".into()));
    }
    let anm = OptimizerSettings { maintenance: crate::Maintenance::Adaptive, ..opt.clone() };
    let brute = opt.rebuild_every_iteration();
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n < 2 {
            return Err(crate::PessError::InvalidArgument(format!("maintenance study needs n >= 2, got {n}")));
        }
        let radius = (n as f64 / 0.6).cbrt();
        let objective = ElasticEnergy::new(n, radius);
        let mut samples = Vec::with_capacity(runs);
        for i in 0..runs {
            let mut rng = seeded(run_seed(seed_base.wrapping_add(n as u64), i as u64));
            let x0 = random_layout(n, radius, &mut rng).into_vec();

            let t = Instant::now();
            let a = minimize(&objective, &x0, &anm)?;
            let runtime_anm = t.elapsed();
            let t = Instant::now();
            let b = minimize(&objective, &x0, &brute)?;
            let runtime_brute = t.elapsed();

            samples.push(AnmSample {
                runtime_anm,
                runtime_brute,
                deferring_ratio: a.report.deferring_ratio(),
                iterations_anm: a.report.iterations,
                iterations_brute: b.report.iterations,
                value_anm: a.value,
                value_brute: b.value,
            });
        }
        let mean = |f: &dyn Fn(&AnmSample) -> f64| samples.iter().map(f).sum::<f64>() / runs as f64;
        let avg_anm = mean(&|s| s.runtime_anm.as_secs_f64());
        let avg_brute = mean(&|s| s.runtime_brute.as_secs_f64());
        let row = AnmExperimentRow {
            n,
            runs,
            avg_runtime_anm_s: avg_anm,
            avg_runtime_brute_s: avg_brute,
            runtime_ratio: avg_anm / avg_brute,
            avg_deferring_ratio: mean(&|s| s.deferring_ratio),
        };
        log::info!("maintenance study n={n}: {row:?}");
        out.push(AnmStudy { row, samples });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Layout;
    use std::time::Duration;

    fn result(radius: f64, seed: u64) -> SolveResult {
        let best = Solution::new(Layout::new(&[[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap(), radius).unwrap();
        SolveResult {
            best,
            best_radius: radius,
            iterations: 1,
            elapsed: Duration::from_secs(2),
            time_to_best: Duration::from_secs(seed),
            seed,
            feasible: true,
            radius_history: vec![radius],
        }
    }

    #[test]
    fn aggregate_identities() {
        let rs = [result(2.0, 1), result(2.0 + 5e-10, 2), result(2.1, 3)];
        let rec = RunRecord::aggregate(&rs, 0, None);
        assert_eq!(rec.r_best, 2.0);
        assert!((rec.r_avg - (4.1 + 5e-10) / 3.0 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(rec.hr, 2.0 / 3.0);
        assert_eq!(rec.rr, None);
        assert_eq!(rec.delta_best, None);
        assert!(rec.r_avg >= rec.r_best);
        assert_eq!(rec.density_best, 0.25);
        assert_eq!(rec.summary_row().time_to_best_s, 2.0);

        let table = RecordsTable::from_pairs([(2, 2.0)]).unwrap();
        let rec = RunRecord::aggregate(&rs, 0, Some(&table));
        assert_eq!(rec.rr, Some(2.0 / 3.0));
        assert_eq!(rec.delta_best, Some(0.0));

        let single = RunRecord::aggregate(&[result(2.3, 4)], 0, None);
        assert_eq!(single.r_avg, single.r_best);
        assert_eq!(single.hr, 1.0);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(2.5, 2.5, MATCH_TOL), Classification::Equal);
        assert_eq!(classify(2.5 - 1e-4, 2.5, MATCH_TOL), Classification::Improved);
        assert_eq!(classify(2.5 + 1e-4, 2.5, MATCH_TOL), Classification::Worse);
        assert_eq!(classify(2.5 + 1e-10, 2.5, MATCH_TOL), Classification::Equal);
    }

    #[test]
    fn comparison_outer_join() {
        let row = |n, r_best| SummaryRow {
            n,
            r_best,
            r_avg: r_best,
            delta_best: None,
            delta_avg: None,
            hr: 1.0,
            rr: None,
            density_best: 0.5,
            time_to_best_s: 0.0,
            seed_base: 0,
            runs: 1,
        };
        let summary = [row(5, 2.4), row(5, 2.3), row(6, 2.5), row(9, 3.0)];
        let records = RecordsTable::from_pairs([(5, 2.3), (6, 2.4), (7, 2.6)]).unwrap();
        let c = compare_records(&summary, &records, MATCH_TOL);
        let classes: Vec<_> = c.rows.iter().map(|r| (r.n, r.class)).collect();
        assert_eq!(
            classes,
            vec![
                (5, Classification::Equal),
                (6, Classification::Worse),
                (7, Classification::Absent),
                (9, Classification::Absent)
            ]
        );
        assert_eq!((c.improved, c.equal, c.worse, c.absent), (0, 1, 1, 2));
    }

    #[test]
    fn run_instance_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = SolveConfig { max_rounds: Some(1), ..SolveConfig::new(2, Duration::from_secs(30), 0) };
        let table = RecordsTable::from_pairs([(2, 2.0)]).unwrap();
        let (rec, results) = run_instance(&config, 2, 40, Some(&table), Some(dir.path())).unwrap();
        assert_eq!(results.len(), 2);
        assert_eq!(rec.rr, Some(1.0));
        assert_eq!(rec.hr, 1.0);
        for r in &results {
            let v = verify_solution(&io::solution_file_name(dir.path(), 2, r.seed), 1e-7).unwrap();
            assert!(v.feasible());
            assert!((v.solution.radius() - r.best_radius).abs() <= 1e-12);
        }
        let rows: Vec<SummaryRow> = io::read_csv(&dir.path().join("summary.csv")).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].runs, 2);
    }

    #[test]
    fn small_maintenance_study() {
        let studies = anm_experiment(&[20], 3, 1, &OptimizerSettings::default()).unwrap();
        let row = &studies[0].row;
        assert_eq!(row.runs, 3);
        assert!((0.0..=1.0).contains(&row.avg_deferring_ratio));
        assert!(row.runtime_ratio > 0.0);
        assert!(anm_experiment(&[1], 1, 1, &OptimizerSettings::default()).is_err());
    }
}
