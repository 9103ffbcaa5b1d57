use std::time::Instant;

use nalgebra::DMatrix;
use rand::RngCore;
use rayon::prelude::*;

use super::output::{format_float, trace_table, Table};
use super::ExperimentConfig;
use crate::channel::{MultipathParams, ParamKind};
use crate::crlb::per_parameter_rmse;
use crate::fim::SensingProblem;
use crate::optim::{repms, RunResult, SphereSpec};
use crate::scenario::{generate_scenario, substream, Alpha, Scenario, Stream};
use crate::stochastic::{draw_parameter_set, mean_objective, srepms, StochasticConfig};
use crate::{column_powers, Error, Result, Waveform};

type Traces = Vec<(String, Table)>;

/// A drawn scenario, its problem and the shared initial waveform.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub index: usize,
    pub scenario: Scenario,
    pub problem: SensingProblem,
    pub x0: Waveform,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig, index: usize) -> Result<Self> {
        let scenario = generate_scenario(&cfg.scenario, &mut substream(cfg.seed, index, Stream::Scenario))?;
        let problem = scenario.problem()?;
        let sphere = SphereSpec::for_power(scenario.geometry.n_tx, scenario.grid.len(), scenario.constraints.power)?;
        let x0 = sphere.random_point(&mut substream(cfg.seed, index, Stream::InitialPoint));
        Ok(Self { index, scenario, problem, x0 })
    }
}

/// Runs `f` on every scenario in parallel; results come back in scenario
/// order and the first failing scenario's error wins.
fn per_scenario<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Prepared) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> =
        (0..cfg.scenarios).into_par_iter().map(|i| Prepared::new(cfg, i).and_then(&f)).collect();
    results.into_iter().collect()
}

fn checked(scenario: usize, run: Result<RunResult>) -> Result<RunResult> {
    let run = run.map_err(|e| match e {
        Error::SingularFim { .. } | Error::DegenerateRetraction => {
            Error::Numerical { scenario, iteration: 0, reason: e.to_string() }
        }
        other => other,
    })?;
    if let Some(iteration) = run.failed_iteration() {
        return Err(Error::Numerical { scenario, iteration, reason: "Fisher information became singular".into() });
    }
    Ok(run)
}

fn keep_trace(cfg: &ExperimentConfig, traces: &mut Traces, scenario: usize, label: &str, run: &RunResult) {
    if cfg.traces {
        traces.push((format!("scenario{scenario:03}_{label}.csv"), trace_table(&run.trace)));
    }
}

fn alpha_label(alpha: Alpha) -> String {
    format!("alpha{alpha}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityRow {
    pub scenario: usize,
    pub alpha: Alpha,
    /// `max_m ‖x_m‖² − αP`.
    pub excess: f64,
    /// `αP`.
    pub cap: f64,
}

impl FeasibilityRow {
    pub fn table(rows: &[Self]) -> Table {
        let mut t = Table::new(["scenario_id", "alpha", "max_power_excess"]);
        for r in rows {
            t.push(vec![r.scenario.to_string(), alpha_field(r.alpha), format_float(r.excess)]);
        }
        t
    }
}

fn alpha_field(alpha: Alpha) -> String {
    format_float(alpha.value())
}

/// Converged REPMS per scenario and α; reports how far the largest symbol
/// power overshoots its cap.
pub fn feasibility(cfg: &ExperimentConfig, alphas: &[Alpha]) -> Result<(Vec<FeasibilityRow>, Traces)> {
    let per = per_scenario(cfg, |p| {
        let mut rows = Vec::new();
        let mut traces = Vec::new();
        for &alpha in alphas {
            let sc = p.scenario.with_alpha(alpha)?;
            let run = checked(p.index, repms(&p.problem, &sc.constraints, &cfg.optimizer, &p.x0))?;
            keep_trace(cfg, &mut traces, p.index, &alpha_label(alpha), &run);
            rows.push(FeasibilityRow {
                scenario: p.index,
                alpha,
                excess: sc.constraints.max_violation(&run.x),
                cap: alpha.value() * sc.constraints.power,
            });
        }
        Ok((rows, traces))
    })?;
    Ok(flatten(per))
}

fn flatten<T>(per: Vec<(Vec<T>, Traces)>) -> (Vec<T>, Traces) {
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (r, t) in per {
        rows.extend(r);
        traces.extend(t);
    }
    (rows, traces)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub scenario: usize,
    pub alpha: Alpha,
    pub objective: f64,
    pub iterations: usize,
    /// Seconds; informational only.
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct AlphaSweep {
    pub alphas: Vec<Alpha>,
    pub rows: Vec<SweepRow>,
    pub traces: Traces,
}

impl AlphaSweep {
    fn mean_of(&self, alpha: Alpha, f: impl Fn(&SweepRow) -> f64) -> f64 {
        let vals: Vec<f64> = self.rows.iter().filter(|r| r.alpha == alpha).map(f).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    pub fn mean_objective(&self, alpha: Alpha) -> f64 {
        self.mean_of(alpha, |r| r.objective)
    }

    /// Per-scenario rows followed by one `mean` row per α.
    pub fn table(&self) -> Table {
        let mut t = Table::new(["scenario_id", "alpha", "final_objective", "iterations", "wall_time_s"]);
        for r in &self.rows {
            t.push(vec![
                r.scenario.to_string(),
                alpha_field(r.alpha),
                format_float(r.objective),
                r.iterations.to_string(),
                format_float(r.wall_time),
            ]);
        }
        for &alpha in &self.alphas {
            t.push(vec![
                "mean".into(),
                alpha_field(alpha),
                format_float(self.mean_objective(alpha)),
                format_float(self.mean_of(alpha, |r| r.iterations as f64)),
                format_float(self.mean_of(alpha, |r| r.wall_time)),
            ]);
        }
        t
    }
}

/// REPMS final objective, iteration count and wall time per scenario and α.
pub fn alpha_sweep(cfg: &ExperimentConfig, alphas: &[Alpha]) -> Result<AlphaSweep> {
    let per = per_scenario(cfg, |p| {
        let mut rows = Vec::new();
        let mut traces = Vec::new();
        for &alpha in alphas {
            let sc = p.scenario.with_alpha(alpha)?;
            let start = Instant::now();
            let run = checked(p.index, repms(&p.problem, &sc.constraints, &cfg.optimizer, &p.x0))?;
            let wall_time = start.elapsed().as_secs_f64();
            keep_trace(cfg, &mut traces, p.index, &alpha_label(alpha), &run);
            rows.push(SweepRow {
                scenario: p.index,
                alpha,
                objective: run.final_record().objective,
                iterations: run.iterations(),
                wall_time,
            });
        }
        Ok((rows, traces))
    })?;
    let (rows, traces) = flatten(per);
    Ok(AlphaSweep { alphas: alphas.to_vec(), rows, traces })
}

/// Symbol powers `‖x_m‖²` laid out subcarrier × symbol.
#[derive(Debug, Clone)]
pub struct PowerMap {
    pub per_scenario: Vec<DMatrix<f64>>,
    pub traces: Traces,
}

impl PowerMap {
    pub fn mean(&self) -> DMatrix<f64> {
        let mut acc = self.per_scenario[0].clone() * 0.0;
        for m in &self.per_scenario {
            acc += m;
        }
        acc / self.per_scenario.len() as f64
    }

    /// Share of the total power in the four corner blocks, each spanning a
    /// quarter (rounded up) of the subcarriers and of the symbols.
    pub fn corner_fraction(map: &DMatrix<f64>) -> f64 {
        let (n, k) = map.shape();
        let (qn, qk) = (n.div_ceil(4), k.div_ceil(4));
        let edge = |i: usize, len: usize, q: usize| i < q || i >= len - q;
        let mut corner = 0.0;
        for i in 0..n {
            for j in 0..k {
                if edge(i, n, qn) && edge(j, k, qk) {
                    corner += map[(i, j)];
                }
            }
        }
        corner / map.sum()
    }

    /// The scenario-averaged map, one row per subcarrier.
    pub fn matrix_table(&self) -> Table {
        let mean = self.mean();
        let mut header = vec!["subcarrier".to_string()];
        header.extend((0..mean.ncols()).map(|k| format!("symbol_{k}")));
        let mut t = Table::new(header);
        for (i, row) in mean.row_iter().enumerate() {
            let mut fields = vec![i.to_string()];
            fields.extend(row.iter().map(|&v| format_float(v)));
            t.push(fields);
        }
        t
    }

    pub fn corner_table(&self) -> Table {
        let mut t = Table::new(["scenario_id", "total_power", "corner_fraction"]);
        for (i, m) in self.per_scenario.iter().enumerate() {
            t.push(vec![i.to_string(), format_float(m.sum()), format_float(Self::corner_fraction(m))]);
        }
        let mean = self.mean();
        t.push(vec!["mean".into(), format_float(mean.sum()), format_float(Self::corner_fraction(&mean))]);
        t
    }
}

/// REPMS at `scenario.alpha` on every scenario; collects the power map.
pub fn power_map(cfg: &ExperimentConfig) -> Result<PowerMap> {
    let (n, k) = (cfg.scenario.subcarriers, cfg.scenario.symbols);
    let per = per_scenario(cfg, |p| {
        let run = checked(p.index, repms(&p.problem, &p.scenario.constraints, &cfg.optimizer, &p.x0))?;
        let mut traces = Vec::new();
        keep_trace(cfg, &mut traces, p.index, "repms", &run);
        let powers = column_powers(&run.x);
        Ok((DMatrix::from_row_slice(n, k, &powers), traces))
    })?;
    let mut per_scenario = Vec::new();
    let mut traces = Vec::new();
    for (m, t) in per {
        per_scenario.push(m);
        traces.extend(t);
    }
    Ok(PowerMap { per_scenario, traces })
}

/// Which optimizer produced a waveform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    Repms,
    /// Robust design with `N` samples per batch.
    Srepms(usize),
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Design::Repms => f.write_str("repms"),
            Design::Srepms(n) => write!(f, "srepms_n{n}"),
        }
    }
}

/// The REPMS design followed by one SREPMS design per batch size, all
/// started from the scenario's shared initial waveform.
pub fn design_waveforms(cfg: &ExperimentConfig, p: &Prepared) -> Result<(Vec<(Design, Waveform)>, Traces)> {
    let mut designs = Vec::new();
    let mut traces = Vec::new();
    let run = checked(p.index, repms(&p.problem, &p.scenario.constraints, &cfg.optimizer, &p.x0))?;
    keep_trace(cfg, &mut traces, p.index, "repms", &run);
    designs.push((Design::Repms, run.x));

    let seed = substream(cfg.seed, p.index, Stream::Design).next_u64();
    for &samples in &cfg.sample_sizes {
        let stoch = StochasticConfig { samples, seed };
        let run = checked(
            p.index,
            srepms(&p.problem, &cfg.perturbation, &stoch, &p.scenario.constraints, &cfg.stochastic_optimizer, &p.x0),
        )?;
        let design = Design::Srepms(samples);
        keep_trace(cfg, &mut traces, p.index, &design.to_string(), &run);
        designs.push((design, run.x));
    }
    Ok((designs, traces))
}

/// For every σ_e level, parameter draws around the scenario's true
/// parameters with the configured per-type scales. Shared by all designs.
pub fn evaluation_draws(cfg: &ExperimentConfig, p: &Prepared) -> Vec<(f64, Vec<MultipathParams>)> {
    let mut rng = substream(cfg.seed, p.index, Stream::Evaluation);
    cfg.sigma_e
        .iter()
        .map(|&s| (s, draw_parameter_set(p.problem.params(), &cfg.perturbation.at_sigma_e(s), cfg.eval_draws, &mut rng)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustRow {
    pub scenario: usize,
    pub design: Design,
    pub sigma_e: f64,
    pub mean_objective: f64,
}

impl RobustRow {
    pub fn table(rows: &[Self]) -> Table {
        let mut t = Table::new(["scenario_id", "design", "sigma_e", "mean_objective"]);
        for r in rows {
            t.push(vec![
                r.scenario.to_string(),
                r.design.to_string(),
                format_float(r.sigma_e),
                format_float(r.mean_objective),
            ]);
        }
        t
    }
}

/// Mean objective of every design over fresh parameter draws at each σ_e.
pub fn robust(cfg: &ExperimentConfig) -> Result<(Vec<RobustRow>, Traces)> {
    let per = per_scenario(cfg, |p| {
        let (designs, traces) = design_waveforms(cfg, &p)?;
        let draws = evaluation_draws(cfg, &p);
        let mut rows = Vec::new();
        for (design, x) in &designs {
            for (sigma_e, set) in &draws {
                rows.push(RobustRow {
                    scenario: p.index,
                    design: *design,
                    sigma_e: *sigma_e,
                    mean_objective: mean_objective(x, &p.problem, set)?,
                });
            }
        }
        Ok((rows, traces))
    })?;
    Ok(flatten(per))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbRow {
    pub scenario: usize,
    pub design: Design,
    pub sigma_e: f64,
    pub param: ParamKind,
    /// Path-averaged square-root CRLB, averaged over the draws; NaN when no
    /// draw yields a usable bound.
    pub sqrt_crlb: f64,
}

impl CrlbRow {
    pub fn table(rows: &[Self]) -> Table {
        let mut t = Table::new(["scenario_id", "design", "sigma_e", "param_type", "sqrt_crlb"]);
        for r in rows {
            t.push(vec![
                r.scenario.to_string(),
                r.design.to_string(),
                format_float(r.sigma_e),
                r.param.name().into(),
                format_float(r.sqrt_crlb),
            ]);
        }
        t
    }

    /// Rows for the given designs, using the unweighted FIM at each drawn
    /// parameter set. Draws with a singular FIM are skipped.
    pub fn evaluate(
        scenario: usize,
        problem: &SensingProblem,
        designs: &[(Design, Waveform)],
        draws: &[(f64, Vec<MultipathParams>)],
    ) -> Result<Vec<Self>> {
        let paths = problem.params().num_paths();
        let mut rows = Vec::new();
        for (design, x) in designs {
            for (sigma_e, set) in draws {
                let mut sum = [0.0; 6];
                let mut count = [0usize; 6];
                for params in set {
                    let fim = problem.with_params(params.clone())?.fim(x)?;
                    let report = match per_parameter_rmse(&fim, paths) {
                        Ok(r) => r,
                        Err(Error::SingularFim { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    for (k, v) in report.per_type.iter().enumerate() {
                        if !v.is_nan() {
                            sum[k] += v;
                            count[k] += 1;
                        }
                    }
                }
                for kind in ParamKind::ALL {
                    let k = kind.block();
                    rows.push(CrlbRow {
                        scenario,
                        design: *design,
                        sigma_e: *sigma_e,
                        param: kind,
                        sqrt_crlb: if count[k] == 0 { f64::NAN } else { sum[k] / count[k] as f64 },
                    });
                }
            }
        }
        Ok(rows)
    }
}

/// Square-root CRLBs of every design at each σ_e level.
pub fn crlb_curves(cfg: &ExperimentConfig) -> Result<(Vec<CrlbRow>, Traces)> {
    let per = per_scenario(cfg, |p| {
        let (designs, traces) = design_waveforms(cfg, &p)?;
        let draws = evaluation_draws(cfg, &p);
        Ok((CrlbRow::evaluate(p.index, &p.problem, &designs, &draws)?, traces))
    })?;
    Ok(flatten(per))
}
