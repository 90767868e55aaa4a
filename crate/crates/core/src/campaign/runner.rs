use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::design::{gen_inputs, DesignConfig};
use crate::error::{Error, Result};
use crate::optimise::InputSpace;
use crate::testfuncs::TestFunction;

use super::config::CampaignConfig;
use super::session::{ask, derive_seed, initialise, tell};
use super::state::{CampaignState, Source};

const STREAM_RANDOM: u64 = 5;
const STREAM_LHS: u64 = 6;
const STREAM_OBJECTIVE: u64 = 4;

fn evaluate<F>(objective: &mut F, x: &DMatrix<f64>) -> Result<DVector<f64>>
where
    F: FnMut(&DMatrix<f64>) -> Result<DVector<f64>>,
{
    let y = objective(x).map_err(|e| match e {
        Error::Objective(m) => Error::Objective(m),
        other => Error::Objective(other.to_string()),
    })?;
    if y.len() != x.nrows() {
        return Err(Error::Objective(format!(
            "{} outputs for {} inputs",
            y.len(),
            x.nrows()
        )));
    }
    Ok(y)
}

fn checkpoint(state: &CampaignState, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => state.save(p),
        None => Ok(()),
    }
}

/// Continues a campaign until its budget is spent, evaluating pending
/// points first. The state is saved to `checkpoint_path` after every tell
/// and before returning an objective failure.
pub fn resume_loop<F>(state: &mut CampaignState, mut objective: F, checkpoint_path: Option<&Path>) -> Result<()>
where
    F: FnMut(&DMatrix<f64>) -> Result<DVector<f64>>,
{
    loop {
        if state.pending.is_empty() {
            if state.remaining_budget() == 0 {
                return Ok(());
            }
            ask(state)?;
        }
        // evaluate the initial design apart from later candidates
        let init = state.pending_from(Source::Init);
        let x = if init.nrows() > 0 { init } else { state.pending_matrix() };
        let y = match evaluate(&mut objective, &x) {
            Ok(y) => y,
            Err(e) => {
                checkpoint(state, checkpoint_path)?;
                return Err(e);
            }
        };
        tell(state, &x, &y, false)?;
        checkpoint(state, checkpoint_path)?;
    }
}

/// Closed-loop optimisation of `objective` over `space` with budget
/// `config.budget`.
pub fn run_loop<F>(
    space: InputSpace,
    config: CampaignConfig,
    objective: F,
    seed: u64,
    checkpoint_path: Option<&Path>,
) -> Result<CampaignState>
where
    F: FnMut(&DMatrix<f64>) -> Result<DVector<f64>>,
{
    let mut state = initialise(space, config, seed)?;
    resume_loop(&mut state, objective, checkpoint_path)?;
    Ok(state)
}

/// Running maximum of a sequence.
pub fn cumulative_best(y: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    y.iter()
        .map(|v| {
            best = best.max(*v);
            best
        })
        .collect()
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let h = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkMethod {
    Bo,
    Random,
    Lhs,
}

impl BenchmarkMethod {
    pub const ALL: [BenchmarkMethod; 3] = [BenchmarkMethod::Bo, BenchmarkMethod::Random, BenchmarkMethod::Lhs];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkMethod::Bo => "bo",
            BenchmarkMethod::Random => "random",
            BenchmarkMethod::Lhs => "lhs",
        }
    }
}

/// Cumulative-best trace of one method on one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub method: BenchmarkMethod,
    pub seed: u64,
    pub best: Vec<f64>,
}

/// Final-best statistics over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: BenchmarkMethod,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub traces: Vec<Trace>,
    pub summary: Vec<SummaryRow>,
}

impl Comparison {
    pub fn final_bests(&self, method: BenchmarkMethod) -> Vec<f64> {
        self.traces
            .iter()
            .filter(|t| t.method == method)
            .map(|t| *t.best.last().unwrap_or(&f64::NAN))
            .collect()
    }

    pub fn summary_for(&self, method: BenchmarkMethod) -> &SummaryRow {
        self.summary
            .iter()
            .find(|r| r.method == method)
            .expect("every method is summarised")
    }

    /// Long-format traces: `method,seed,eval_index,cumulative_best`.
    pub fn traces_csv(&self) -> String {
        let mut out = String::from("method,seed,eval_index,cumulative_best\n");
        for t in &self.traces {
            for (i, b) in t.best.iter().enumerate() {
                out.push_str(&format!("{},{},{},{:?}\n", t.method.as_str(), t.seed, i, b));
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,median,lower_quartile,upper_quartile\n");
        for r in &self.summary {
            out.push_str(&format!(
                "{},{:?},{:?},{:?}\n",
                r.method.as_str(),
                r.median,
                r.lower_quartile,
                r.upper_quartile
            ));
        }
        out
    }
}

/// Closed loop on a test function; the noise stream is the one
/// [`benchmark_compare`] uses for its BO run with the same seed.
pub fn run_test_function(
    space: InputSpace,
    config: CampaignConfig,
    function: &TestFunction,
    seed: u64,
    checkpoint_path: Option<&Path>,
) -> Result<CampaignState> {
    run_loop(
        space,
        config,
        function.objective(derive_seed(seed, STREAM_OBJECTIVE, 0)),
        seed,
        checkpoint_path,
    )
}

/// Resumes [`run_test_function`] from a checkpoint. Noise draws restart
/// from the stream position implied by the recorded evaluations.
pub fn resume_test_function(
    state: &mut CampaignState,
    function: &TestFunction,
    checkpoint_path: Option<&Path>,
) -> Result<()> {
    let mut objective = function.objective(derive_seed(state.seed, STREAM_OBJECTIVE, 0));
    if function.noise_std > 0.0 && state.num_observations() > 0 {
        objective(&state.inputs.clone())?;
    }
    resume_loop(state, objective, checkpoint_path)
}

/// Runs BO, uniform random sampling and a single Latin hypercube, each
/// with `config.budget` evaluations, for seeds `0..n_seeds`.
///
/// `make_objective(seed)` builds an independent objective instance; it is
/// called with a distinct seed for every method and run.
pub fn benchmark_compare<M, F>(
    space: &InputSpace,
    config: &CampaignConfig,
    make_objective: M,
    n_seeds: u64,
) -> Result<Comparison>
where
    M: Fn(u64) -> F + Sync,
    F: FnMut(&DMatrix<f64>) -> Result<DVector<f64>>,
{
    config.validate()?;
    let n = config.budget;
    let bounds = space.bounds();
    let d = space.dims();
    let runs: Vec<Result<Vec<Trace>>> = (0..n_seeds)
        .into_par_iter()
        .map(|seed| {
            let bo = run_loop(
                space.clone(),
                config.clone(),
                make_objective(derive_seed(seed, STREAM_OBJECTIVE, 0)),
                seed,
                None,
            )?;

            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_RANDOM, 0));
            let random = DMatrix::from_fn(n, d, |_, j| rng.random_range(bounds.lower()[j]..=bounds.upper()[j]));
            let y_random = evaluate(&mut make_objective(derive_seed(seed, STREAM_OBJECTIVE, 1)), &random)?;

            let lhs = gen_inputs(&DesignConfig::new(n, bounds.clone(), derive_seed(seed, STREAM_LHS, 0)))?;
            let y_lhs = evaluate(&mut make_objective(derive_seed(seed, STREAM_OBJECTIVE, 2)), &lhs)?;

            Ok(vec![
                Trace {
                    method: BenchmarkMethod::Bo,
                    seed,
                    best: cumulative_best(bo.outputs.as_slice()),
                },
                Trace {
                    method: BenchmarkMethod::Random,
                    seed,
                    best: cumulative_best(y_random.as_slice()),
                },
                Trace {
                    method: BenchmarkMethod::Lhs,
                    seed,
                    best: cumulative_best(y_lhs.as_slice()),
                },
            ])
        })
        .collect();
    let mut traces = Vec::new();
    for r in runs {
        traces.extend(r?);
    }
    traces.sort_by_key(|t| (t.method as u8, t.seed));
    let mut cmp = Comparison {
        traces,
        summary: Vec::new(),
    };
    cmp.summary = BenchmarkMethod::ALL
        .iter()
        .map(|&m| {
            let finals = cmp.final_bests(m);
            SummaryRow {
                method: m,
                median: quantile(&finals, 0.5),
                lower_quartile: quantile(&finals, 0.25),
                upper_quartile: quantile(&finals, 0.75),
            }
        })
        .collect();
    Ok(cmp)
}
