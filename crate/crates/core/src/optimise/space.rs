use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Axis-aligned box, serialised as `[[lower..], [upper..]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Parameter(format!(
                "bounds need matching non-empty rows, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::Parameter(format!(
                    "dimension {j}: lower {l} must be below upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dims: usize) -> Self {
        Self {
            lower: vec![0.0; dims],
            upper: vec![1.0; dims],
        }
    }

    pub fn uniform(dims: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dims], vec![upper; dims])
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dims()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, l), u)| *v >= l - tol && *v <= u + tol)
    }

    /// The box repeated `q` times, for a flattened `q x d` batch.
    pub fn tile(&self, q: usize) -> Self {
        Self {
            lower: self.lower.repeat(q),
            upper: self.upper.repeat(q),
        }
    }
}

impl Serialize for Bounds {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [&self.lower, &self.upper].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Bounds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let [lower, upper]: [Vec<f64>; 2] = rows
            .try_into()
            .map_err(|_| D::Error::custom("bounds must have exactly two rows"))?;
        Bounds::new(lower, upper).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Feasible when the function is zero.
    Equality,
    /// Feasible when the function is non-negative.
    Inequality,
}

pub type ConstraintCallable = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Constraint function over an input vector.
#[derive(Clone)]
pub enum ConstraintFn {
    /// `constant + coefficients . x`
    Linear {
        coefficients: Vec<f64>,
        constant: f64,
    },
    Custom(ConstraintCallable),
}

impl fmt::Debug for ConstraintFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintFn::Linear { coefficients, constant } => f
                .debug_struct("Linear")
                .field("coefficients", coefficients)
                .field("constant", constant)
                .finish(),
            ConstraintFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A single equality or inequality constraint.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub func: ConstraintFn,
}

impl Constraint {
    pub fn linear(kind: ConstraintKind, coefficients: Vec<f64>, constant: f64) -> Self {
        Self {
            kind,
            func: ConstraintFn::Linear { coefficients, constant },
        }
    }

    pub fn custom(kind: ConstraintKind, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind,
            func: ConstraintFn::Custom(Arc::new(f)),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.func {
            ConstraintFn::Linear { coefficients, constant } => {
                constant + coefficients.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
            }
            ConstraintFn::Custom(f) => f(x),
        }
    }

    /// Exact gradient for linear constraints, central differences otherwise.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.func {
            ConstraintFn::Linear { coefficients, .. } => {
                let mut g = coefficients.clone();
                g.resize(x.len(), 0.0);
                g
            }
            ConstraintFn::Custom(f) => {
                let mut xp = x.to_vec();
                (0..x.len())
                    .map(|i| {
                        let h = 1e-6 * x[i].abs().max(1.0);
                        let orig = xp[i];
                        xp[i] = orig + h;
                        let up = f(&xp);
                        xp[i] = orig - h;
                        let down = f(&xp);
                        xp[i] = orig;
                        (up - down) / (2.0 * h)
                    })
                    .collect()
            }
        }
    }

    /// Amount by which `x` violates the constraint (zero when feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let v = self.eval(x);
        match self.kind {
            ConstraintKind::Equality => v.abs(),
            ConstraintKind::Inequality => (-v).max(0.0),
        }
    }

    /// Same constraint applied to the block `[offset, offset + d)` of a longer vector.
    pub fn shifted(&self, offset: usize, d: usize) -> Constraint {
        if offset == 0 {
            return self.clone();
        }
        let func = match &self.func {
            ConstraintFn::Linear { coefficients, constant } => {
                let mut c = vec![0.0; offset];
                c.extend_from_slice(coefficients);
                ConstraintFn::Linear {
                    coefficients: c,
                    constant: *constant,
                }
            }
            ConstraintFn::Custom(f) => {
                let f = f.clone();
                ConstraintFn::Custom(Arc::new(move |x: &[f64]| f(&x[offset..offset + d])))
            }
        };
        Constraint { kind: self.kind, func }
    }

    /// Constraint over the `free` coordinates of `template`, the rest held fixed.
    pub fn restricted(&self, template: &[f64], free: &[usize]) -> Constraint {
        let func = match &self.func {
            ConstraintFn::Linear { coefficients, constant } => {
                let mut c = *constant;
                let coef_at = |i: usize| coefficients.get(i).copied().unwrap_or(0.0);
                for (i, v) in template.iter().enumerate() {
                    if !free.contains(&i) {
                        c += coef_at(i) * v;
                    }
                }
                ConstraintFn::Linear {
                    coefficients: free.iter().map(|&i| coef_at(i)).collect(),
                    constant: c,
                }
            }
            ConstraintFn::Custom(f) => {
                let f = f.clone();
                let template = template.to_vec();
                let free = free.to_vec();
                ConstraintFn::Custom(Arc::new(move |x: &[f64]| {
                    let mut full = template.clone();
                    for (k, &i) in free.iter().enumerate() {
                        full[i] = x[k];
                    }
                    f(&full)
                }))
            }
        };
        Constraint { kind: self.kind, func }
    }

    /// Re-expresses the constraint over unit-cube coordinates.
    pub fn on_unit_cube(&self, bounds: &Bounds) -> Constraint {
        let func = match &self.func {
            ConstraintFn::Linear { coefficients, constant } => {
                let mut c = *constant;
                let mut coef = coefficients.clone();
                for (j, a) in coef.iter_mut().enumerate() {
                    c += *a * bounds.lower[j];
                    *a *= bounds.upper[j] - bounds.lower[j];
                }
                ConstraintFn::Linear {
                    coefficients: coef,
                    constant: c,
                }
            }
            ConstraintFn::Custom(f) => {
                let f = f.clone();
                let b = bounds.clone();
                ConstraintFn::Custom(Arc::new(move |u: &[f64]| {
                    let x: Vec<f64> = u
                        .iter()
                        .enumerate()
                        .map(|(j, v)| b.lower[j] + v * (b.upper[j] - b.lower[j]))
                        .collect();
                    f(&x)
                }))
            }
        };
        Constraint { kind: self.kind, func }
    }
}

/// Serialisable form; only linear constraints can be persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraintRecord {
    pub kind: ConstraintKind,
    pub coefficients: Vec<f64>,
    pub constant: f64,
}

impl TryFrom<&Constraint> for LinearConstraintRecord {
    type Error = Error;

    fn try_from(c: &Constraint) -> Result<Self> {
        match &c.func {
            ConstraintFn::Linear { coefficients, constant } => Ok(Self {
                kind: c.kind,
                coefficients: coefficients.clone(),
                constant: *constant,
            }),
            ConstraintFn::Custom(_) => Err(Error::Persistence(
                "custom constraint functions cannot be serialised".into(),
            )),
        }
    }
}

/// Bounded search space with optional discrete dimensions and constraints.
#[derive(Debug, Clone)]
pub struct InputSpace {
    bounds: Bounds,
    discrete: BTreeMap<usize, Vec<f64>>,
    constraints: Vec<Constraint>,
}

impl InputSpace {
    pub fn new(bounds: Bounds) -> Self {
        Self {
            bounds,
            discrete: BTreeMap::new(),
            constraints: Vec::new(),
        }
    }

    /// Restricts dimension `dim` to a finite set of values.
    pub fn with_discrete(mut self, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim >= self.dims() {
            return Err(Error::Parameter(format!("discrete dimension {dim} out of range")));
        }
        let mut values = values;
        if values.is_empty() {
            return Err(Error::Parameter(format!("dimension {dim} has no allowed values")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("dimension {dim} has non-finite values")));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        let (l, u) = (self.bounds.lower[dim], self.bounds.upper[dim]);
        if let Some(v) = values.iter().find(|v| **v < l || **v > u) {
            return Err(Error::Parameter(format!(
                "discrete value {v} outside [{l}, {u}] in dimension {dim}"
            )));
        }
        self.discrete.insert(dim, values);
        Ok(self)
    }

    pub fn with_constraint(mut self, c: Constraint) -> Result<Self> {
        if let ConstraintFn::Linear { coefficients, .. } = &c.func {
            if coefficients.len() != self.dims() {
                return Err(Error::Parameter(format!(
                    "linear constraint has {} coefficients for {} dimensions",
                    coefficients.len(),
                    self.dims()
                )));
            }
        }
        self.constraints.push(c);
        Ok(self)
    }

    pub fn dims(&self) -> usize {
        self.bounds.dims()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn discrete(&self) -> &BTreeMap<usize, Vec<f64>> {
        &self.discrete
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Moves every discrete coordinate to its nearest allowed value (ties
    /// go to the smaller value).
    pub fn snap(&self, x: &mut [f64]) {
        for (&dim, values) in &self.discrete {
            x[dim] = nearest(values, x[dim]);
        }
    }

    /// Clamps to the bounds and snaps discrete coordinates.
    pub fn project(&self, x: &mut [f64]) {
        self.bounds.clamp(x);
        self.snap(x);
    }

    /// Bounds, exact discrete membership and constraints within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.bounds.contains(x, 1e-12)
            && self.discrete.iter().all(|(&d, v)| v.contains(&x[d]))
            && self.constraints.iter().all(|c| c.violation(x) <= tol)
    }

    /// Space of a flattened `q x d` batch: bounds, discrete sets and
    /// constraints repeated per row.
    pub fn tile(&self, q: usize) -> InputSpace {
        let d = self.dims();
        let mut discrete = BTreeMap::new();
        let mut constraints = Vec::new();
        for r in 0..q {
            for (&k, v) in &self.discrete {
                discrete.insert(k + r * d, v.clone());
            }
            constraints.extend(self.constraints.iter().map(|c| c.shifted(r * d, d)));
        }
        InputSpace {
            bounds: self.bounds.tile(q),
            discrete,
            constraints,
        }
    }

    /// The same space expressed in unit-cube coordinates.
    pub fn on_unit_cube(&self) -> InputSpace {
        let b = &self.bounds;
        let discrete = self
            .discrete
            .iter()
            .map(|(&k, v)| {
                let w = b.upper[k] - b.lower[k];
                (k, v.iter().map(|x| ((x - b.lower[k]) / w).clamp(0.0, 1.0)).collect())
            })
            .collect();
        InputSpace {
            bounds: Bounds::unit(self.dims()),
            discrete,
            constraints: self.constraints.iter().map(|c| c.on_unit_cube(b)).collect(),
        }
    }

    /// Number of discrete combinations, saturating on overflow.
    pub fn num_combinations(&self) -> usize {
        self.discrete
            .values()
            .fold(1usize, |acc, v| acc.saturating_mul(v.len()))
    }
}

fn nearest(values: &[f64], x: f64) -> f64 {
    let mut best = values[0];
    let mut dist = (x - best).abs();
    for &v in &values[1..] {
        let d = (x - v).abs();
        if d < dist {
            best = v;
            dist = d;
        }
    }
    best
}
