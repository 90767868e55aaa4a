use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acquisition::Acquisition;
use crate::design::{candidate_designs, normalise, unnormalise, DesignConfig, Standardiser};
use crate::error::{Error, Result};
use crate::optimise::{
    multi_joint, multi_sequential, optimise_mixed, single, ContinuousOptimiser, FnObjective, InputSpace,
    OptimiserConfig, FEASIBILITY_TOL,
};
use crate::surrogate::{Dataset, FitOptions, GpModel};

use super::config::{CampaignConfig, Strategy};
use super::state::{CampaignState, EvaluationRecord, PendingPoint, Source};

/// Tolerance per coordinate when matching told points to pending ones.
pub const MATCH_TOL: f64 = 1e-9;

const STREAM_DESIGN: u64 = 0;
const STREAM_OPTIMISER: u64 = 1;
const STREAM_BASE_SAMPLES: u64 = 2;
const STREAM_FIT: u64 = 3;

/// Independent sub-seed `index` of stream `stream` under `seed`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Moves an infeasible point to the nearest feasible one (in unit-cube
/// distance), keeping discrete coordinates on their grids.
fn repair(space: &InputSpace, x: &[f64]) -> Result<Vec<f64>> {
    if space.is_feasible(x, FEASIBILITY_TOL) {
        return Ok(x.to_vec());
    }
    let width: Vec<f64> = space
        .bounds()
        .lower()
        .iter()
        .zip(space.bounds().upper())
        .map(|(l, u)| u - l)
        .collect();
    let target = x.to_vec();
    let mut f = FnObjective::new(|z: &[f64]| {
        let mut v = 0.0;
        let mut g = vec![0.0; z.len()];
        for j in 0..z.len() {
            let t = (z[j] - target[j]) / width[j];
            v -= t * t;
            g[j] = -2.0 * t / width[j];
        }
        (v, g)
    });
    let starts = DMatrix::from_row_slice(1, x.len(), x);
    Ok(optimise_mixed(&mut f, space, &starts, &ContinuousOptimiser::Constrained, usize::MAX)?.x)
}

/// Starts a campaign: draws the initial maximin design, snaps discrete
/// inputs and leaves every design point pending.
pub fn initialise(space: InputSpace, config: CampaignConfig, seed: u64) -> Result<CampaignState> {
    config.validate()?;
    let design_cfg = DesignConfig::new(
        config.init_points,
        space.bounds().clone(),
        derive_seed(seed, STREAM_DESIGN, 0),
    );
    let x = crate::design::gen_inputs(&design_cfg)?;
    let mut pending = Vec::with_capacity(x.nrows());
    for row in x.row_iter() {
        let mut p: Vec<f64> = row.iter().copied().collect();
        space.snap(&mut p);
        let p = repair(&space, &p)?;
        pending.push(PendingPoint {
            x: p,
            source: Source::Init,
        });
    }
    let d = space.dims();
    Ok(CampaignState {
        space,
        inputs: DMatrix::zeros(0, d),
        outputs: DVector::zeros(0),
        pending,
        config,
        iteration: 0,
        seed,
        asks: 0,
        hyperparameters: None,
        history: Vec::new(),
    })
}

/// Unit-cube designs considered for the initial design of `state`.
pub fn initial_candidate_designs(state: &CampaignState) -> Result<Vec<DMatrix<f64>>> {
    candidate_designs(&DesignConfig::new(
        state.config.init_points,
        state.space.bounds().clone(),
        derive_seed(state.seed, STREAM_DESIGN, 0),
    ))
}

fn output_scaling(y: &DVector<f64>) -> Standardiser {
    Standardiser::fit(y).unwrap_or(Standardiser {
        mean: if y.is_empty() { 0.0 } else { y.mean() },
        std: 1.0,
    })
}

/// Proposes the next batch and records it as pending.
pub fn ask(state: &mut CampaignState) -> Result<DMatrix<f64>> {
    if state.outputs.is_empty() {
        return Err(Error::Ordering("tell the initial design results before asking".into()));
    }
    if state.pending.iter().any(|p| p.source == Source::Init) {
        return Err(Error::Ordering("initial design points are still pending".into()));
    }
    let remaining = state.remaining_budget();
    if remaining == 0 {
        return Err(Error::Budget {
            used: state.committed(),
            budget: state.config.budget,
        });
    }
    let cfg = &state.config;
    let q = cfg.batch_size().min(remaining);
    let bounds = state.space.bounds();

    let u = normalise(&state.inputs, bounds)?;
    let scaling = output_scaling(&state.outputs);
    let z = scaling.apply(&state.outputs);
    let data = Dataset::new(u, z.clone())?;
    let mut model = GpModel::with_config(data, cfg.model.mean, cfg.model.kernel, cfg.model.ard, true);
    if cfg.warm_start {
        if let Some(theta) = &state.hyperparameters {
            if theta.len() == model.num_free_parameters() {
                model = model.with_free_parameters(theta)?;
            }
        }
    }
    let fit = FitOptions {
        seed: derive_seed(state.seed, STREAM_FIT, state.asks),
        ..cfg.gp_fit.clone()
    };
    let model = model.fit(&fit)?;
    let theta = model.free_parameters();
    let gp = Arc::new(model.condition()?);

    let y_best = z.max();
    let spec = cfg
        .acquisition
        .to_spec(y_best, derive_seed(state.seed, STREAM_BASE_SAMPLES, state.asks));
    let mut acq = Acquisition::new(gp, spec)?;
    if !state.pending.is_empty() {
        if !acq.is_monte_carlo() {
            return Err(Error::Ordering(
                "pending candidates need a Monte-Carlo acquisition; tell their results first".into(),
            ));
        }
        acq = acq.with_pending(&normalise(&state.pending_matrix(), bounds)?)?;
    }

    let unit_space = state.space.on_unit_cube();
    let opt_cfg = OptimiserConfig {
        seed: derive_seed(state.seed, STREAM_OPTIMISER, state.asks),
        batch_size: q,
        ..cfg.optimiser.clone()
    };
    let points_u = match cfg.strategy {
        Strategy::Single => {
            let (x, _) = single(&acq, &unit_space, &opt_cfg)?;
            DMatrix::from_row_slice(1, x.len(), &x)
        }
        Strategy::MultiJoint => multi_joint(&acq, &unit_space, &opt_cfg)?.points,
        Strategy::MultiSequential => multi_sequential(&acq, &unit_space, &opt_cfg)?.points,
    };
    let mut points = unnormalise(&points_u, bounds);
    for i in 0..points.nrows() {
        let mut row: Vec<f64> = points.row(i).iter().copied().collect();
        state.space.project(&mut row);
        for (j, v) in row.iter().enumerate() {
            points[(i, j)] = *v;
        }
    }

    state.hyperparameters = Some(theta);
    state.asks += 1;
    for row in points.row_iter() {
        state.pending.push(PendingPoint {
            x: row.iter().copied().collect(),
            source: Source::Bo,
        });
    }
    Ok(points)
}

/// Records observations; each row of `x` must match a pending point unless
/// `force` is set. On error the state is left unchanged.
pub fn tell(state: &mut CampaignState, x: &DMatrix<f64>, y: &DVector<f64>, force: bool) -> Result<()> {
    let d = state.dims();
    if x.ncols() != d {
        return Err(Error::Parameter(format!(
            "told points have {} columns, expected {d}",
            x.ncols()
        )));
    }
    if x.nrows() != y.len() {
        return Err(Error::Parameter(format!(
            "{} points but {} outputs",
            x.nrows(),
            y.len()
        )));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("observed output {v} is not finite")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("told inputs must be finite".into()));
    }

    let mut taken = vec![false; state.pending.len()];
    let mut matched: Vec<(Vec<f64>, Source, Option<usize>)> = Vec::with_capacity(x.nrows());
    let mut extra = 0;
    for row in x.row_iter() {
        let r: Vec<f64> = row.iter().copied().collect();
        let hit = state
            .pending
            .iter()
            .enumerate()
            .position(|(k, p)| !taken[k] && p.x.iter().zip(&r).all(|(a, b)| (a - b).abs() <= MATCH_TOL));
        match hit {
            Some(k) => {
                taken[k] = true;
                let p = &state.pending[k];
                matched.push((p.x.clone(), p.source, Some(k)));
            }
            None if force => {
                extra += 1;
                matched.push((r, Source::Bo, None));
            }
            None => return Err(Error::UnmatchedCandidate(r)),
        }
    }
    if state.committed() + extra > state.config.budget {
        return Err(Error::Budget {
            used: state.committed() + extra,
            budget: state.config.budget,
        });
    }

    state.iteration += 1;
    let n0 = state.outputs.len();
    let n = n0 + matched.len();
    let mut inputs = state.inputs.clone().resize_vertically(n, 0.0);
    let mut outputs = state.outputs.clone().resize_vertically(n, 0.0);
    for (i, (xi, source, _)) in matched.into_iter().enumerate() {
        for (j, v) in xi.iter().enumerate() {
            inputs[(n0 + i, j)] = *v;
        }
        outputs[n0 + i] = y[i];
        state.history.push(EvaluationRecord {
            eval_index: n0 + i,
            x: xi,
            y: y[i],
            source,
            iteration: state.iteration,
        });
    }
    state.inputs = inputs;
    state.outputs = outputs;
    let mut k = 0;
    state.pending.retain(|_| {
        k += 1;
        !taken[k - 1]
    });
    Ok(())
}

/// Incumbent: the highest observation, earliest on ties.
pub fn best(state: &CampaignState) -> Result<(Vec<f64>, f64, usize)> {
    let mut idx = None;
    for (i, v) in state.outputs.iter().enumerate() {
        if idx.is_none_or(|b: usize| *v > state.outputs[b]) {
            idx = Some(i);
        }
    }
    let i = idx.ok_or_else(|| Error::Ordering("no observations yet".into()))?;
    Ok((state.inputs.row(i).iter().copied().collect(), state.outputs[i], i))
}
