use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimise::{Bounds, Constraint, ConstraintFn, InputSpace, LinearConstraintRecord};

use super::config::CampaignConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Init,
    Bo,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Init => "init",
            Source::Bo => "bo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingPoint {
    pub x: Vec<f64>,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub eval_index: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub source: Source,
    /// Tell call that delivered the observation.
    pub iteration: usize,
}

/// Full state of an ask/tell campaign.
#[derive(Debug, Clone)]
pub struct CampaignState {
    pub space: InputSpace,
    pub inputs: DMatrix<f64>,
    pub outputs: DVector<f64>,
    pub pending: Vec<PendingPoint>,
    pub config: CampaignConfig,
    pub iteration: usize,
    pub seed: u64,
    /// Completed asks, used to derive per-ask seeds.
    pub asks: u64,
    /// Free hyperparameters of the last fit, reused when warm starting.
    pub hyperparameters: Option<Vec<f64>>,
    pub history: Vec<EvaluationRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceRecord {
    bounds: Bounds,
    #[serde(default)]
    discrete: BTreeMap<usize, Vec<f64>>,
    #[serde(default)]
    constraints: Vec<LinearConstraintRecord>,
}

impl SpaceRecord {
    fn from_space(space: &InputSpace) -> Result<Self> {
        Ok(Self {
            bounds: space.bounds().clone(),
            discrete: space.discrete().clone(),
            constraints: space
                .constraints()
                .iter()
                .map(LinearConstraintRecord::try_from)
                .collect::<Result<_>>()?,
        })
    }

    fn into_space(self) -> Result<InputSpace> {
        let mut space = InputSpace::new(self.bounds);
        for (k, v) in self.discrete {
            space = space.with_discrete(k, v)?;
        }
        for c in self.constraints {
            space = space.with_constraint(Constraint {
                kind: c.kind,
                func: ConstraintFn::Linear {
                    coefficients: c.coefficients,
                    constant: c.constant,
                },
            })?;
        }
        Ok(space)
    }
}

/// Space description as stored in state and config files.
pub fn space_to_json(space: &InputSpace) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(SpaceRecord::from_space(space)?)?)
}

pub fn space_from_json(value: serde_json::Value) -> Result<InputSpace> {
    serde_json::from_value::<SpaceRecord>(value)?.into_space()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataRecord {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRecord {
    schema_version: u32,
    space: SpaceRecord,
    data: DataRecord,
    pending: Vec<PendingPoint>,
    config: CampaignConfig,
    iteration: usize,
    seed: u64,
    asks: u64,
    hyperparameters: Option<Vec<f64>>,
    history: Vec<EvaluationRecord>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl CampaignState {
    pub fn dims(&self) -> usize {
        self.space.dims()
    }

    pub fn num_observations(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluations observed or pending.
    pub fn committed(&self) -> usize {
        self.outputs.len() + self.pending.len()
    }

    pub fn remaining_budget(&self) -> usize {
        self.config.budget.saturating_sub(self.committed())
    }

    pub fn pending_matrix(&self) -> DMatrix<f64> {
        let d = self.dims();
        let flat: Vec<f64> = self.pending.iter().flat_map(|p| p.x.iter().copied()).collect();
        DMatrix::from_row_slice(self.pending.len(), d, &flat)
    }

    /// Pending points of one origin.
    pub fn pending_from(&self, source: Source) -> DMatrix<f64> {
        let d = self.dims();
        let flat: Vec<f64> = self
            .pending
            .iter()
            .filter(|p| p.source == source)
            .flat_map(|p| p.x.iter().copied())
            .collect();
        DMatrix::from_row_slice(flat.len() / d.max(1), d, &flat)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dims();
        let n = self.outputs.len();
        let bad = |m: &str| Err(Error::Persistence(m.to_string()));
        if self.inputs.nrows() != n || (n > 0 && self.inputs.ncols() != d) {
            return bad("data inputs and outputs disagree");
        }
        if self.history.len() != n {
            return bad("history length differs from data length");
        }
        for (i, h) in self.history.iter().enumerate() {
            if h.eval_index != i || h.x.len() != d || h.y != self.outputs[i] {
                return bad("history does not match data");
            }
            if h.x.iter().zip(self.inputs.row(i).iter()).any(|(a, b)| a != b) {
                return bad("history does not match data");
            }
        }
        if self.pending.iter().any(|p| p.x.len() != d) {
            return bad("pending point has the wrong dimension");
        }
        if self.committed() > self.config.budget {
            return bad("more evaluations than the budget allows");
        }
        self.config.validate()
    }

    pub fn to_json(&self) -> Result<String> {
        let record = StateRecord {
            schema_version: SCHEMA_VERSION,
            space: SpaceRecord::from_space(&self.space)?,
            data: DataRecord {
                inputs: rows(&self.inputs),
                outputs: self.outputs.iter().copied().collect(),
            },
            pending: self.pending.clone(),
            config: self.config.clone(),
            iteration: self.iteration,
            seed: self.seed,
            asks: self.asks,
            hyperparameters: self.hyperparameters.clone(),
            history: self.history.clone(),
        };
        let mut s = serde_json::to_string_pretty(&record)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses a state document; anything unreadable is reported as a
    /// schema-version error.
    pub fn from_json(text: &str) -> Result<Self> {
        let schema_err = |found| Error::SchemaVersion {
            expected: SCHEMA_VERSION,
            found,
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(|_| schema_err(None))?;
        let found = value.get("schema_version").and_then(|v| v.as_u64());
        if found != Some(u64::from(SCHEMA_VERSION)) {
            return Err(schema_err(found));
        }
        let r: StateRecord = serde_json::from_value(value).map_err(|_| schema_err(found))?;
        let space = r.space.into_space()?;
        let d = space.dims();
        let n = r.data.outputs.len();
        if r.data.inputs.len() != n || r.data.inputs.iter().any(|row| row.len() != d) {
            return Err(Error::Persistence("data inputs and outputs disagree".into()));
        }
        let flat: Vec<f64> = r.data.inputs.into_iter().flatten().collect();
        let state = CampaignState {
            space,
            inputs: DMatrix::from_row_slice(n, d, &flat),
            outputs: DVector::from_vec(r.data.outputs),
            pending: r.pending,
            config: r.config,
            iteration: r.iteration,
            seed: r.seed,
            asks: r.asks,
            hyperparameters: r.hyperparameters,
            history: r.history,
        };
        state.validate()?;
        Ok(state)
    }

    /// Atomically replaces `path` with the serialised state.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// History as CSV: `eval_index, x_1..x_d, y, source, cumulative_best`.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("eval_index");
        for j in 1..=self.dims() {
            let _ = write!(out, ",x_{j}");
        }
        out.push_str(",y,source,cumulative_best\n");
        let mut best = f64::NEG_INFINITY;
        for h in &self.history {
            best = best.max(h.y);
            let _ = write!(out, "{}", h.eval_index);
            for v in &h.x {
                let _ = write!(out, ",{v:?}");
            }
            let _ = writeln!(out, ",{:?},{},{:?}", h.y, h.source.as_str(), best);
        }
        out
    }
}
