use std::sync::Arc;

use bayesopt::acquisition::{Acquisition, AcquisitionSpec};
use bayesopt::design::{gen_inputs, DesignConfig};
use bayesopt::optimise::{
    bounded_maximise, constrained_maximise, multi_joint, multi_sequential, multistart_candidates, single,
    stochastic_maximise, AcquisitionObjective, Bounds, Constraint, ConstraintKind, FnObjective, InputSpace, Objective,
    OptimiserConfig, OptimiserMethod,
};
use bayesopt::surrogate::{ConditionedGp, Dataset, GpModel, KernelKind, MeanKind};
use nalgebra::{DMatrix, DVector};

fn gp(d: usize, n: usize, seed: u64) -> Arc<ConditionedGp> {
    let x = gen_inputs(&DesignConfig::new(n, Bounds::unit(d), seed)).unwrap();
    let y = DVector::from_fn(n, |i, _| {
        (0..d).map(|j| ((j + 2) as f64 * x[(i, j)]).sin()).sum::<f64>()
    });
    let mut m = GpModel::with_config(
        Dataset::new(x, y).unwrap(),
        MeanKind::Constant,
        KernelKind::Matern52,
        true,
        true,
    );
    m.hyper.lengthscales = vec![0.3; d];
    m.hyper.noise_variance = 1e-4;
    Arc::new(m.condition().unwrap())
}

#[test]
fn stochastic_finds_parabola_peak() {
    let mut f = FnObjective::new(|x: &[f64]| (-(x[0] - 0.5).powi(2), vec![-2.0 * (x[0] - 0.5)]));
    let r = stochastic_maximise(&mut f, &[0.0], &Bounds::unit(1), 0.1, 200).unwrap();
    assert!((r.x[0] - 0.5).abs() < 1e-2);
    let mut up = FnObjective::new(|x: &[f64]| (x[0], vec![1.0]));
    let r = stochastic_maximise(&mut up, &[0.9], &Bounds::unit(1), 0.1, 200).unwrap();
    assert_eq!(r.x, vec![1.0]);
}

#[test]
fn bounded_oracles() {
    let mut f = FnObjective::new(|x: &[f64]| {
        let v = -x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
        (v, x.iter().map(|v| -2.0 * (v - 0.3)).collect())
    });
    for x0 in [[0.9, 0.1, 0.5, 0.7], [0.01, 0.99, 0.2, 0.6]] {
        let r = bounded_maximise(&mut f, &x0, &Bounds::unit(4)).unwrap();
        assert!(r.x.iter().all(|v| (v - 0.3).abs() < 1e-6), "{:?}", r.x);
    }
    let at_opt = bounded_maximise(&mut f, &[0.3; 4], &Bounds::unit(4)).unwrap();
    assert_eq!(at_opt.x, vec![0.3; 4]);
    assert_eq!(at_opt.iterations, 0);
    let mut lin = FnObjective::new(|x: &[f64]| (x[0], vec![1.0]));
    assert_eq!(
        bounded_maximise(&mut lin, &[0.2], &Bounds::unit(1)).unwrap().x,
        vec![1.0]
    );
}

#[test]
fn constrained_oracles() {
    let mut f = FnObjective::new(|x: &[f64]| (x[0] + x[1], vec![1.0, 1.0]));
    let h = Constraint::custom(ConstraintKind::Inequality, |x: &[f64]| 0.5 - x[0] - x[1]);
    let r = constrained_maximise(&mut f, &[0.9, 0.8], &Bounds::unit(2), &[h]).unwrap();
    assert!((r.value - 0.5).abs() < 1e-5);
    assert!(0.5 - r.x[0] - r.x[1] >= -1e-6);

    let mut q = FnObjective::new(|x: &[f64]| {
        (
            -(x[0] - 0.7).powi(2) - (x[1] - 0.1).powi(2),
            vec![-2.0 * (x[0] - 0.7), -2.0 * (x[1] - 0.1)],
        )
    });
    let g = Constraint::linear(ConstraintKind::Equality, vec![1.0, 0.0], -0.25);
    let r = constrained_maximise(&mut q, &[0.5, 0.5], &Bounds::unit(2), &[g]).unwrap();
    assert!((r.x[0] - 0.25).abs() < 1e-6);

    let a = constrained_maximise(&mut q, &[0.5, 0.5], &Bounds::unit(2), &[]).unwrap();
    let b = bounded_maximise(&mut q, &[0.5, 0.5], &Bounds::unit(2)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mixed_enumeration_matches_brute_force() {
    let acq = Acquisition::new(gp(3, 12, 5), AcquisitionSpec::ucb(2.0)).unwrap();
    let levels = [
        vec![0.0, 0.5, 1.0],
        vec![0.1, 0.4, 0.6, 0.9],
        vec![0.0, 0.2, 0.45, 0.7, 1.0],
    ];
    let mut space = InputSpace::new(Bounds::unit(3));
    for (k, v) in levels.iter().enumerate() {
        space = space.with_discrete(k, v.clone()).unwrap();
    }
    let (x, v) = single(&acq, &space, &OptimiserConfig::default()).unwrap();
    let mut obj = AcquisitionObjective::new(&acq, 1, 0).unwrap();
    let mut best = (vec![], f64::NEG_INFINITY);
    for a in &levels[0] {
        for b in &levels[1] {
            for c in &levels[2] {
                let p = vec![*a, *b, *c];
                let val = obj.value(&p).unwrap();
                if val > best.1 {
                    best = (p, val);
                }
            }
        }
    }
    assert_eq!(x, best.0);
    assert_eq!(v, best.1);
}

#[test]
fn returned_value_beats_every_start_and_grows_with_starts() {
    let acq = Acquisition::new(gp(2, 8, 1), AcquisitionSpec::ei(1.2)).unwrap();
    let space = InputSpace::new(Bounds::unit(2));
    let mut previous = f64::NEG_INFINITY;
    for num_starts in 1..=6 {
        let cfg = OptimiserConfig {
            num_starts,
            num_samples: 30,
            seed: 8,
            ..Default::default()
        };
        let (_, v) = single(&acq, &space, &cfg).unwrap();
        assert!(v >= previous);
        previous = v;
        let mut obj = AcquisitionObjective::new(&acq, 1, cfg.seed).unwrap();
        let starts = multistart_candidates(&mut obj, &space, 30, num_starts, cfg.seed).unwrap();
        for r in starts.row_iter() {
            assert!(v >= obj.value(&[r[0], r[1]]).unwrap());
        }
    }
}

fn constrained_space() -> InputSpace {
    InputSpace::new(Bounds::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]).unwrap())
        .with_discrete(2, vec![0.0, 0.25, 0.5, 0.75, 1.0])
        .unwrap()
        .with_constraint(Constraint::linear(
            ConstraintKind::Inequality,
            vec![-1.0, -1.0, 0.0],
            1.0,
        ))
        .unwrap()
        .with_constraint(Constraint::custom(ConstraintKind::Inequality, |x: &[f64]| x[1] - 0.1))
        .unwrap()
}

#[test]
fn every_candidate_is_feasible() {
    let space = constrained_space();
    let g = gp(3, 10, 2);
    let cfg = OptimiserConfig {
        batch_size: 3,
        num_starts: 2,
        num_samples: 20,
        ..Default::default()
    };
    for seed in 0..3 {
        let cfg = OptimiserConfig { seed, ..cfg.clone() };
        let analytic = Acquisition::new(g.clone(), AcquisitionSpec::ucb(2.0)).unwrap();
        let (x, _) = single(&analytic, &space, &cfg).unwrap();
        assert!(space.is_feasible(&x, 1e-6), "{x:?}");
        let mc = Acquisition::new(
            g.clone(),
            AcquisitionSpec::mc_ei(1.0)
                .with_samples(64)
                .with_fixed_base_samples(seed),
        )
        .unwrap();
        for c in [
            multi_joint(&mc, &space, &cfg).unwrap(),
            multi_sequential(&mc, &space, &cfg).unwrap(),
        ] {
            for r in c.points.row_iter() {
                let x: Vec<f64> = r.iter().copied().collect();
                assert!(space.bounds().contains(&x, 0.0));
                assert!(space.is_feasible(&x, 1e-6), "{x:?}");
            }
        }
    }
}

#[test]
fn sequential_steps_condition_on_earlier_picks() {
    let g = gp(2, 8, 4);
    let user = DMatrix::from_row_slice(2, 2, &[0.1, 0.9, 0.8, 0.8]);
    let acq = Acquisition::new(
        g,
        AcquisitionSpec::mc_ucb(2.0)
            .with_samples(128)
            .with_fixed_base_samples(3),
    )
    .unwrap()
    .with_pending(&user)
    .unwrap();
    let space = InputSpace::new(Bounds::unit(2));
    let cfg = OptimiserConfig {
        batch_size: 3,
        num_starts: 3,
        num_samples: 30,
        seed: 41,
        ..Default::default()
    };
    let batch = multi_sequential(&acq, &space, &cfg).unwrap();
    for i in 0..3 {
        let mut pending = user.clone().resize_vertically(2 + i, 0.0);
        for r in 0..i {
            pending.set_row(2 + r, &batch.points.row(r));
        }
        let step = acq.with_pending(&pending).unwrap();
        assert_eq!(step.spec().num_pending(), 2 + i);
        let step_cfg = OptimiserConfig {
            seed: 41u64.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            batch_size: 1,
            ..cfg.clone()
        };
        let (x, v) = single(&step, &space, &step_cfg).unwrap();
        assert_eq!(x, batch.points.row(i).iter().copied().collect::<Vec<_>>());
        assert_eq!(v, batch.values[i]);
    }
}

#[test]
fn joint_batch_covers_both_modes() {
    let x = DMatrix::from_row_slice(5, 1, &[0.0, 0.25, 0.5, 0.75, 1.0]);
    let y = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0, 0.0]);
    let mut m = GpModel::with_config(
        Dataset::new(x, y).unwrap(),
        MeanKind::Zero,
        KernelKind::Matern52,
        true,
        true,
    );
    m.hyper.lengthscales = vec![0.15];
    m.hyper.signal_variance = 1.0;
    m.hyper.noise_variance = 1e-3;
    let g = Arc::new(m.condition().unwrap());
    let space = InputSpace::new(Bounds::unit(1));
    let mut split = 0;
    for seed in 0..10 {
        let acq = Acquisition::new(
            g.clone(),
            AcquisitionSpec::mc_ucb(1.0)
                .with_samples(256)
                .with_fixed_base_samples(seed),
        )
        .unwrap();
        let cfg = OptimiserConfig {
            batch_size: 2,
            seed,
            ..Default::default()
        };
        let b = multi_joint(&acq, &space, &cfg).unwrap();
        let (a, c) = (b.points[(0, 0)], b.points[(1, 0)]);
        if (a < 0.5) != (c < 0.5) {
            split += 1;
        }
    }
    assert!(split >= 7, "{split}/10");
}

#[test]
fn deterministic_runs_are_bitwise_identical() {
    let acq = Acquisition::new(
        gp(2, 8, 6),
        AcquisitionSpec::mc_ei(1.0).with_samples(64).with_fixed_base_samples(2),
    )
    .unwrap();
    let space = InputSpace::new(Bounds::unit(2));
    for method in [OptimiserMethod::BoundedDeterministic, OptimiserMethod::Stochastic] {
        let cfg = OptimiserConfig {
            method,
            batch_size: 2,
            seed: 13,
            ..Default::default()
        };
        assert_eq!(single(&acq, &space, &cfg).unwrap(), single(&acq, &space, &cfg).unwrap());
        assert_eq!(
            multi_joint(&acq, &space, &cfg).unwrap(),
            multi_joint(&acq, &space, &cfg).unwrap()
        );
        assert_eq!(
            multi_sequential(&acq, &space, &cfg).unwrap(),
            multi_sequential(&acq, &space, &cfg).unwrap()
        );
    }
}
