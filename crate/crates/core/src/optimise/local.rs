use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::adam::Adam;
use super::objective::Objective;
use super::space::{Bounds, Constraint, ConstraintKind};

/// Outcome of a single local run.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Settings for the projected quasi-Newton solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsbOptions {
    pub memory: usize,
    pub max_iter: usize,
    pub pg_tol: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 200,
            pg_tol: 1e-8,
            max_backtracks: 40,
        }
    }
}

/// Maximum-violation tolerance for a constrained result.
pub const FEASIBILITY_TOL: f64 = 1e-6;

fn check_finite(v: f64, g: &[f64], x: &[f64]) -> Result<()> {
    if v.is_finite() && g.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(Error::Optimisation {
            message: "objective or gradient is not finite".into(),
            iterate: x.to_vec(),
        })
    }
}

/// Clipped Adam ascent; returns the best iterate seen.
pub fn stochastic_maximise(
    objective: &mut dyn Objective,
    x0: &[f64],
    bounds: &Bounds,
    lr: f64,
    steps: usize,
) -> Result<LocalResult> {
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let (mut v, mut g) = objective.value_and_gradient(&x)?;
    check_finite(v, &g, &x)?;
    let mut best = LocalResult {
        x: x.clone(),
        value: v,
        iterations: 0,
    };
    let mut adam = Adam::new(lr, x.len());
    for it in 1..=steps {
        let descent: Vec<f64> = g.iter().map(|g| -g).collect();
        adam.step(&mut x, &descent);
        bounds.clamp(&mut x);
        (v, g) = objective.value_and_gradient(&x)?;
        check_finite(v, &g, &x)?;
        if v > best.value {
            best = LocalResult {
                x: x.clone(),
                value: v,
                iterations: it,
            };
        }
        best.iterations = it;
    }
    Ok(best)
}

/// Box-constrained maximisation with a projected limited-memory BFGS.
pub fn bounded_maximise(objective: &mut dyn Objective, x0: &[f64], bounds: &Bounds) -> Result<LocalResult> {
    bounded_maximise_with(objective, x0, bounds, LbfgsbOptions::default())
}

pub fn bounded_maximise_with(
    objective: &mut dyn Objective,
    x0: &[f64],
    bounds: &Bounds,
    opts: LbfgsbOptions,
) -> Result<LocalResult> {
    let mut f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (v, g) = objective.value_and_gradient(x)?;
        Ok((-v, g.into_iter().map(|g| -g).collect()))
    };
    let (x, fx, iterations) = minimise_box(&mut f, x0, bounds, opts)?;
    Ok(LocalResult {
        x,
        value: -fx,
        iterations,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

type Eval<'a> = dyn FnMut(&[f64]) -> Result<(f64, Vec<f64>)> + 'a;

/// Projected L-BFGS minimisation on a box.
fn minimise_box(f: &mut Eval<'_>, x0: &[f64], bounds: &Bounds, opts: LbfgsbOptions) -> Result<(Vec<f64>, f64, usize)> {
    let (lo, hi) = (bounds.lower(), bounds.upper());
    let n = x0.len();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let (mut fx, mut g) = f(&x)?;
    check_finite(fx, &g, &x)?;
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let pg = (0..n)
            .map(|i| ((x[i] - g[i]).clamp(lo[i], hi[i]) - x[i]).abs())
            .fold(0.0, f64::max);
        if pg < opts.pg_tol {
            break;
        }
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(&free).map(|(v, &f)| if f { *v } else { 0.0 }).collect() };

        // two-loop recursion on the free subspace
        let mut q = mask(&g);
        let mut coeffs = Vec::with_capacity(mem.len());
        for (s, y) in mem.iter().rev() {
            let (s, y) = (mask(s), mask(y));
            let sy = dot(&s, &y);
            if sy <= 1e-16 {
                coeffs.push(None);
                continue;
            }
            let a = dot(&s, &q) / sy;
            q.iter_mut().zip(&y).for_each(|(q, y)| *q -= a * y);
            coeffs.push(Some((a, sy, s, y)));
        }
        if let Some((s, y)) = mem.back() {
            let (s, y) = (mask(s), mask(y));
            let yy = dot(&y, &y);
            let sy = dot(&s, &y);
            if sy > 1e-16 && yy > 0.0 {
                let gamma = sy / yy;
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for c in coeffs.into_iter().rev().flatten() {
            let (a, sy, s, y) = c;
            let b = dot(&y, &q) / sy;
            q.iter_mut().zip(&s).for_each(|(q, s)| *q += (a - b) * s);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut gd = dot(&g, &d);
        if gd.is_nan() || gd >= 0.0 {
            mem.clear();
            d = mask(&g).iter().map(|v| -v).collect();
            gd = dot(&g, &d);
            if gd.is_nan() || gd >= 0.0 {
                break;
            }
        }
        let mut t = if mem.is_empty() {
            let dn = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (1.0 / dn).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(x, d)| x + t * d).collect();
            bounds.clamp(&mut xn);
            if xn == x {
                break;
            }
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &step);
            if let Ok((fn_, gn)) = f(&xn) {
                if fn_.is_finite() && gn.iter().all(|v| v.is_finite()) && fn_ <= fx + 1e-4 * decrease {
                    accepted = Some((xn, fn_, gn));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if mem.is_empty() {
                break;
            }
            mem.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-16 {
            mem.push_back((s, y));
            if mem.len() > opts.memory {
                mem.pop_front();
            }
        }
        x = xn;
        fx = fn_;
        g = gn;
        iterations += 1;
    }
    Ok((x, fx, iterations))
}

fn max_violation(constraints: &[Constraint], x: &[f64]) -> f64 {
    constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max)
}

/// Maximisation under bounds plus equality/inequality constraints, using
/// an augmented Lagrangian with a final feasibility correction.
pub fn constrained_maximise(
    objective: &mut dyn Objective,
    x0: &[f64],
    bounds: &Bounds,
    constraints: &[Constraint],
) -> Result<LocalResult> {
    if constraints.is_empty() {
        return bounded_maximise(objective, x0, bounds);
    }
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut mult = vec![0.0; constraints.len()];
    let mut rho = 10.0;
    let mut prev_viol = f64::INFINITY;
    let mut iterations = 0;

    for outer in 0..40 {
        let m = mult.clone();
        let mut lagrangian = |z: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (v, g) = objective.value_and_gradient(z)?;
            let mut val = -v;
            let mut grad: Vec<f64> = g.into_iter().map(|g| -g).collect();
            for (c, &lam) in constraints.iter().zip(&m) {
                let cv = c.eval(z);
                let w = match c.kind {
                    ConstraintKind::Equality => {
                        val += lam * cv + 0.5 * rho * cv * cv;
                        lam + rho * cv
                    }
                    ConstraintKind::Inequality => {
                        let p = (lam - rho * cv).max(0.0);
                        val += (p * p - lam * lam) / (2.0 * rho);
                        -p
                    }
                };
                if w != 0.0 {
                    for (gi, ci) in grad.iter_mut().zip(c.gradient(z)) {
                        *gi += w * ci;
                    }
                }
            }
            Ok((val, grad))
        };
        let (xn, _, it) = minimise_box(&mut lagrangian, &x, bounds, LbfgsbOptions::default())?;
        iterations += it;
        let moved = xn.iter().zip(&x).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        x = xn;
        for (c, lam) in constraints.iter().zip(mult.iter_mut()) {
            let cv = c.eval(&x);
            *lam = match c.kind {
                ConstraintKind::Equality => *lam + rho * cv,
                ConstraintKind::Inequality => (*lam - rho * cv).max(0.0),
            };
        }
        let viol = max_violation(constraints, &x);
        if viol <= 1e-10 && outer > 0 && moved <= 1e-9 {
            break;
        }
        if viol > 0.25 * prev_viol {
            rho = (rho * 10.0).min(1e10);
        }
        prev_viol = viol;
    }

    restore_feasibility(&mut x, bounds, constraints);
    let viol = max_violation(constraints, &x);
    if viol.is_nan() || viol > FEASIBILITY_TOL {
        return Err(Error::Infeasible(format!(
            "constraint violation {viol:.3e} remains after optimisation"
        )));
    }
    let value = objective.value(&x)?;
    Ok(LocalResult { x, value, iterations })
}

/// Minimum-norm Newton corrections onto the active constraint set.
fn restore_feasibility(x: &mut Vec<f64>, bounds: &Bounds, constraints: &[Constraint]) {
    for _ in 0..50 {
        let active: Vec<&Constraint> = constraints
            .iter()
            .filter(|c| match c.kind {
                ConstraintKind::Equality => c.eval(x) != 0.0,
                ConstraintKind::Inequality => c.eval(x) < 0.0,
            })
            .collect();
        if max_violation(constraints, x) <= 1e-13 || active.is_empty() {
            return;
        }
        let n = x.len();
        let k = active.len();
        let mut jac = DMatrix::zeros(k, n);
        let mut r = DVector::zeros(k);
        for (i, c) in active.iter().enumerate() {
            r[i] = c.eval(x);
            for (j, v) in c.gradient(x).into_iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        let mut jjt = &jac * jac.transpose();
        for i in 0..k {
            jjt[(i, i)] += 1e-14;
        }
        let Some(lambda) = jjt.lu().solve(&r) else {
            return;
        };
        let delta = jac.transpose() * lambda;
        let before = max_violation(constraints, x);
        let mut candidate: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a - b).collect();
        bounds.clamp(&mut candidate);
        if max_violation(constraints, &candidate) >= before {
            return;
        }
        *x = candidate;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimise::objective::FnObjective;

    fn quadratic(c: Vec<f64>) -> impl FnMut(&[f64]) -> (f64, Vec<f64>) {
        move |x: &[f64]| {
            let v = -x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let g = x.iter().zip(&c).map(|(a, b)| -2.0 * (a - b)).collect();
            (v, g)
        }
    }

    #[test]
    fn bounded_finds_interior_optimum() {
        let mut obj = FnObjective::new(quadratic(vec![0.3, 0.7]));
        let r = bounded_maximise(&mut obj, &[0.9, 0.1], &Bounds::unit(2)).unwrap();
        assert!((r.x[0] - 0.3).abs() < 1e-6 && (r.x[1] - 0.7).abs() < 1e-6);
    }

    #[test]
    fn bounded_stops_at_box() {
        let mut obj = FnObjective::new(quadratic(vec![1.5, -0.5]));
        let r = bounded_maximise(&mut obj, &[0.5, 0.5], &Bounds::unit(2)).unwrap();
        assert_eq!(r.x, vec![1.0, 0.0]);
    }

    #[test]
    fn bounded_handles_rosenbrock() {
        let mut obj = FnObjective::new(|x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = -((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2));
            let g = vec![2.0 * (1.0 - a) + 400.0 * a * (b - a * a), -200.0 * (b - a * a)];
            (v, g)
        });
        let b = Bounds::uniform(2, -2.0, 2.0).unwrap();
        let r = bounded_maximise(&mut obj, &[-1.2, 1.0], &b).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r);
    }

    #[test]
    fn stochastic_with_zero_lr_returns_start() {
        let mut obj = FnObjective::new(quadratic(vec![0.3]));
        let r = stochastic_maximise(&mut obj, &[0.9], &Bounds::unit(1), 0.0, 50).unwrap();
        assert_eq!(r.x, vec![0.9]);
    }

    #[test]
    fn stochastic_climbs_to_the_bound() {
        let mut obj = FnObjective::new(|x: &[f64]| (x[0], vec![1.0]));
        let r = stochastic_maximise(&mut obj, &[0.0], &Bounds::unit(1), 0.1, 30).unwrap();
        assert_eq!(r.x, vec![1.0]);
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let mut obj = FnObjective::new(|_: &[f64]| (f64::NAN, vec![0.0]));
        assert!(matches!(
            bounded_maximise(&mut obj, &[0.5], &Bounds::unit(1)),
            Err(Error::Optimisation { .. })
        ));
    }

    #[test]
    fn linear_inequality_is_active() {
        let mut obj = FnObjective::new(|x: &[f64]| (x[0] + x[1], vec![1.0, 1.0]));
        let c = Constraint::linear(ConstraintKind::Inequality, vec![-1.0, -1.0], 0.5);
        let r = constrained_maximise(&mut obj, &[0.1, 0.1], &Bounds::unit(2), &[c]).unwrap();
        assert!((r.x[0] + r.x[1] - 0.5).abs() < 1e-6);
        assert!(r.x[0] + r.x[1] <= 0.5 + 1e-6);
    }

    #[test]
    fn custom_equality_is_met() {
        let mut obj = FnObjective::new(quadratic(vec![0.8, 0.2]));
        let c = Constraint::custom(ConstraintKind::Equality, |x: &[f64]| x[0] - 0.25);
        let r = constrained_maximise(&mut obj, &[0.9, 0.9], &Bounds::unit(2), &[c]).unwrap();
        assert!((r.x[0] - 0.25).abs() < 1e-6);
        assert!((r.x[1] - 0.2).abs() < 1e-5);
    }

    #[test]
    fn impossible_constraint_is_infeasible() {
        let mut obj = FnObjective::new(quadratic(vec![0.5]));
        let c = Constraint::linear(ConstraintKind::Inequality, vec![1.0], -2.0);
        assert!(matches!(
            constrained_maximise(&mut obj, &[0.5], &Bounds::unit(1), &[c]),
            Err(Error::Infeasible(_))
        ));
    }
}
