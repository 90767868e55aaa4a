use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acquisition::Acquisition;
use crate::design::{gen_inputs, DesignConfig};
use crate::error::{Error, Result};

use super::config::{OptimiserConfig, OptimiserMethod};
use super::local::{bounded_maximise, constrained_maximise, stochastic_maximise, LocalResult, FEASIBILITY_TOL};
use super::objective::{Objective, Restricted};
use super::space::{Bounds, Constraint, InputSpace};

const SEQUENTIAL_SEED_STEP: u64 = 0x9E37_79B9_7F4A_7C15;

/// Selected batch and the acquisition value(s) that chose it.
///
/// `values` holds one entry for a joint batch and one per greedy step for
/// a sequential batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    pub points: DMatrix<f64>,
    pub values: Vec<f64>,
}

/// Local optimiser applied from each start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuousOptimiser {
    Bounded,
    Constrained,
    Stochastic { lr: f64, steps: usize },
}

impl ContinuousOptimiser {
    pub fn run(
        &self,
        objective: &mut dyn Objective,
        x0: &[f64],
        bounds: &Bounds,
        constraints: &[Constraint],
    ) -> Result<LocalResult> {
        match *self {
            ContinuousOptimiser::Bounded if constraints.is_empty() => bounded_maximise(objective, x0, bounds),
            ContinuousOptimiser::Bounded | ContinuousOptimiser::Constrained => {
                constrained_maximise(objective, x0, bounds, constraints)
            }
            ContinuousOptimiser::Stochastic { lr, steps } => {
                if !constraints.is_empty() {
                    return Err(Error::Parameter(
                        "the stochastic optimiser does not support constraints".into(),
                    ));
                }
                stochastic_maximise(objective, x0, bounds, lr, steps)
            }
        }
    }
}

/// Acquisition over a flattened row-major `q x d` batch.
pub struct AcquisitionObjective<'a> {
    acq: &'a Acquisition,
    q: usize,
    d: usize,
    base_samples: Option<DMatrix<f64>>,
    rng: ChaCha8Rng,
}

impl<'a> AcquisitionObjective<'a> {
    pub fn new(acq: &'a Acquisition, q: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(Self {
            acq,
            q,
            d: acq.dims(),
            base_samples: acq.fixed_base_samples(q)?,
            rng,
        })
    }

    fn batch(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.q, self.d, x)
    }
}

impl Objective for AcquisitionObjective<'_> {
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        let b = self.batch(x);
        match &self.base_samples {
            Some(z) => Ok(self.acq.evaluate_with_base_samples(&b, z, false)?.0),
            None => self.acq.evaluate(&b, &mut self.rng),
        }
    }

    fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let b = self.batch(x);
        let (v, g) = match &self.base_samples {
            Some(z) => {
                let (v, g) = self.acq.evaluate_with_base_samples(&b, z, true)?;
                (v, g.expect("gradient requested"))
            }
            None => self.acq.evaluate_with_gradient(&b, &mut self.rng)?,
        };
        // row-major flatten
        Ok((v, g.transpose().iter().copied().collect()))
    }
}

/// Best `num_starts` points of a snapped maximin-LHS sample, by descending
/// objective value (ties keep the lower candidate index).
pub fn multistart_candidates(
    f: &mut dyn Objective,
    space: &InputSpace,
    num_samples: usize,
    num_starts: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if num_starts == 0 || num_starts > num_samples {
        return Err(Error::Parameter(format!(
            "need 1 <= num_starts ({num_starts}) <= num_samples ({num_samples})"
        )));
    }
    let mut pts = gen_inputs(&DesignConfig::new(num_samples, space.bounds().clone(), seed))?;
    let d = space.dims();
    let mut scored = Vec::with_capacity(num_samples);
    for i in 0..num_samples {
        let mut row: Vec<f64> = pts.row(i).iter().copied().collect();
        space.snap(&mut row);
        for (j, v) in row.iter().enumerate() {
            pts[(i, j)] = *v;
        }
        scored.push((i, f.value(&row)?));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(DMatrix::from_fn(num_starts, d, |r, c| pts[(scored[r].0, c)]))
}

fn run_starts(
    objective: &mut dyn Objective,
    starts: &[Vec<f64>],
    bounds: &Bounds,
    constraints: &[Constraint],
    opt: &ContinuousOptimiser,
) -> Result<Option<LocalResult>> {
    let mut best: Option<LocalResult> = None;
    for x0 in starts {
        let r = match opt.run(objective, x0, bounds, constraints) {
            Ok(r) => r,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    Ok(best)
}

/// Iterates the Cartesian product of discrete values, last dimension fastest.
fn combinations(space: &InputSpace) -> Vec<Vec<(usize, f64)>> {
    let sets: Vec<(usize, &Vec<f64>)> = space.discrete().iter().map(|(&k, v)| (k, v)).collect();
    let mut out = vec![Vec::new()];
    for (k, values) in sets {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push((k, v));
                    p
                })
            })
            .collect();
    }
    out
}

/// Maximises over a space with discrete dimensions by fixing every
/// combination of discrete values and optimising the rest from `starts`.
pub fn optimise_mixed(
    objective: &mut dyn Objective,
    space: &InputSpace,
    starts: &DMatrix<f64>,
    optimiser: &ContinuousOptimiser,
    enumeration_cap: usize,
) -> Result<LocalResult> {
    let d = space.dims();
    let start_rows: Vec<Vec<f64>> = starts.row_iter().map(|r| r.iter().copied().collect()).collect();
    if space.discrete().is_empty() {
        return run_starts(objective, &start_rows, space.bounds(), space.constraints(), optimiser)?
            .ok_or_else(|| Error::Infeasible("no start reached a feasible point".into()));
    }
    let n_comb = space.num_combinations();
    if n_comb > enumeration_cap {
        return Err(Error::CombinatorialExplosion {
            combinations: n_comb,
            cap: enumeration_cap,
        });
    }
    let free: Vec<usize> = (0..d).filter(|j| !space.discrete().contains_key(j)).collect();
    let mut best: Option<LocalResult> = None;
    for combo in combinations(space) {
        let mut template = start_rows
            .first()
            .cloned()
            .unwrap_or_else(|| space.bounds().lower().to_vec());
        for &(k, v) in &combo {
            template[k] = v;
        }
        let result = if free.is_empty() {
            if space
                .constraints()
                .iter()
                .any(|c| c.violation(&template) > FEASIBILITY_TOL)
            {
                continue;
            }
            let value = objective.value(&template)?;
            LocalResult {
                x: template,
                value,
                iterations: 0,
            }
        } else {
            let lo: Vec<f64> = free.iter().map(|&j| space.bounds().lower()[j]).collect();
            let hi: Vec<f64> = free.iter().map(|&j| space.bounds().upper()[j]).collect();
            let sub_bounds = Bounds::new(lo, hi)?;
            let sub_constraints: Vec<Constraint> = space
                .constraints()
                .iter()
                .map(|c| c.restricted(&template, &free))
                .collect();
            let sub_starts: Vec<Vec<f64>> = start_rows
                .iter()
                .map(|r| free.iter().map(|&j| r[j]).collect())
                .collect();
            let mut restricted = Restricted::new(objective, template, free.clone());
            let Some(r) = run_starts(&mut restricted, &sub_starts, &sub_bounds, &sub_constraints, optimiser)? else {
                continue;
            };
            LocalResult {
                x: restricted.expand(&r.x),
                value: r.value,
                iterations: r.iterations,
            }
        };
        if best.as_ref().is_none_or(|b| result.value > b.value) {
            best = Some(result);
        }
    }
    best.ok_or_else(|| Error::Infeasible("no discrete combination admits a feasible point".into()))
}

fn check(acq: &Acquisition, space: &InputSpace, config: &OptimiserConfig) -> Result<()> {
    config.validate()?;
    if acq.dims() != space.dims() {
        return Err(Error::Parameter(format!(
            "acquisition has {} dimensions, space has {}",
            acq.dims(),
            space.dims()
        )));
    }
    let constrained = !space.constraints().is_empty();
    match config.method {
        OptimiserMethod::Stochastic if constrained => Err(Error::Parameter(
            "constraints require a deterministic optimiser, not the stochastic method".into(),
        )),
        OptimiserMethod::BoundedDeterministic | OptimiserMethod::ConstrainedDeterministic
            if !acq.is_deterministic() =>
        {
            Err(Error::Parameter(
                "deterministic optimisers need fixed base samples for Monte-Carlo acquisitions".into(),
            ))
        }
        _ => Ok(()),
    }
}

fn continuous_optimiser(config: &OptimiserConfig, space: &InputSpace) -> ContinuousOptimiser {
    match config.method {
        OptimiserMethod::Stochastic => ContinuousOptimiser::Stochastic {
            lr: config.lr,
            steps: config.steps,
        },
        _ if !space.constraints().is_empty() => ContinuousOptimiser::Constrained,
        OptimiserMethod::ConstrainedDeterministic => ContinuousOptimiser::Constrained,
        OptimiserMethod::BoundedDeterministic => ContinuousOptimiser::Bounded,
    }
}

fn maximise_batch(
    acq: &Acquisition,
    space: &InputSpace,
    config: &OptimiserConfig,
    q: usize,
) -> Result<(DMatrix<f64>, f64)> {
    let flat = space.tile(q);
    if flat.num_combinations() > config.enumeration_cap {
        return Err(Error::CombinatorialExplosion {
            combinations: flat.num_combinations(),
            cap: config.enumeration_cap,
        });
    }
    let mut objective = AcquisitionObjective::new(acq, q, config.seed)?;
    let starts = if flat.discrete().len() == flat.dims() {
        DMatrix::zeros(0, flat.dims())
    } else {
        multistart_candidates(
            &mut objective,
            &flat,
            config.num_samples,
            config.num_starts,
            config.seed,
        )?
    };
    let opt = continuous_optimiser(config, space);
    let best = optimise_mixed(&mut objective, &flat, &starts, &opt, config.enumeration_cap)?;
    let mut x = best.x;
    flat.bounds().clamp(&mut x);
    Ok((DMatrix::from_row_slice(q, space.dims(), &x), best.value))
}

/// Best single point from multistart local optimisation.
pub fn single(acq: &Acquisition, space: &InputSpace, config: &OptimiserConfig) -> Result<(Vec<f64>, f64)> {
    check(acq, space, config)?;
    let (x, v) = maximise_batch(acq, space, config, 1)?;
    Ok((x.row(0).iter().copied().collect(), v))
}

fn require_mc(acq: &Acquisition) -> Result<()> {
    if acq.is_monte_carlo() {
        Ok(())
    } else {
        Err(Error::Parameter(
            "batch strategies need a Monte-Carlo acquisition".into(),
        ))
    }
}

/// Batch of `config.batch_size` points optimised jointly.
pub fn multi_joint(acq: &Acquisition, space: &InputSpace, config: &OptimiserConfig) -> Result<Candidates> {
    check(acq, space, config)?;
    require_mc(acq)?;
    let (points, v) = maximise_batch(acq, space, config, config.batch_size)?;
    Ok(Candidates {
        points,
        values: vec![v],
    })
}

/// Greedy batch: each point is optimised with the user's pending points and
/// all earlier picks held fixed.
pub fn multi_sequential(acq: &Acquisition, space: &InputSpace, config: &OptimiserConfig) -> Result<Candidates> {
    check(acq, space, config)?;
    require_mc(acq)?;
    let d = space.dims();
    let user_pending = acq.spec().x_pending.clone().unwrap_or_else(|| DMatrix::zeros(0, d));
    let mut points = DMatrix::zeros(0, d);
    let mut values = Vec::with_capacity(config.batch_size);
    for i in 0..config.batch_size {
        let step_acq = if i == 0 {
            acq.clone()
        } else {
            let mut pending = user_pending.clone().resize_vertically(user_pending.nrows() + i, 0.0);
            for r in 0..i {
                pending.set_row(user_pending.nrows() + r, &points.row(r));
            }
            acq.with_pending(&pending)?
        };
        let step_config = OptimiserConfig {
            seed: config.seed.wrapping_add((i as u64).wrapping_mul(SEQUENTIAL_SEED_STEP)),
            batch_size: 1,
            ..config.clone()
        };
        let (x, v) = maximise_batch(&step_acq, space, &step_config, 1)?;
        points = points.resize_vertically(i + 1, 0.0);
        points.set_row(i, &x.row(0));
        values.push(v);
    }
    Ok(Candidates { points, values })
}
