//! JSON interchange format for models, error functions and baselines.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpiError};
use crate::mdp::{Kernel, Mdp, MdpParts, Policy};
use crate::uncertainty::ErrorFunction;

/// Probability tolerance applied when reading a file.
pub const LOAD_TOL: f64 = 1e-9;

/// On-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub r_max: f64,
    #[serde(default)]
    pub absorbing: bool,
    pub p0: Vec<f64>,
    /// `reward[x][a]`.
    pub reward: Vec<Vec<f64>>,
    /// `transition[x][a][y]`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// Optional `error[x][a]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<Vec<Vec<f64>>>,
    /// Optional deterministic baseline, one action per state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<Vec<usize>>,
}

/// A loaded model with its optional extras.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub mdp: Mdp,
    pub error: Option<ErrorFunction>,
    pub baseline: Option<Policy>,
}

impl MdpFile {
    pub fn from_model(
        mdp: &Mdp,
        error: Option<&ErrorFunction>,
        baseline: Option<&Policy>,
    ) -> Result<Self> {
        let (n, m) = (mdp.n_states(), mdp.n_actions());
        let baseline = baseline
            .map(|b| {
                b.actions().ok_or_else(|| {
                    SpiError::InvalidArgument("only deterministic baselines are exported".into())
                })
            })
            .transpose()?;
        Ok(Self {
            n_states: n,
            n_actions: m,
            gamma: mdp.discount(),
            r_max: mdp.r_max(),
            absorbing: mdp.is_absorbing(),
            p0: mdp.initial().to_vec(),
            reward: (0..n)
                .map(|x| (0..m).map(|a| mdp.reward(x, a)).collect())
                .collect(),
            transition: (0..n)
                .map(|x| {
                    (0..m)
                        .map(|a| mdp.transition().row(x, a).to_vec())
                        .collect()
                })
                .collect(),
            error: error.map(|e| {
                (0..n)
                    .map(|x| (0..m).map(|a| e.get(x, a)).collect())
                    .collect()
            }),
            baseline,
        })
    }

    /// Validates shapes and probabilities (to [`LOAD_TOL`]) and builds the model.
    pub fn into_model(self) -> Result<LoadedModel> {
        let (n, m) = (self.n_states, self.n_actions);
        let shape_err = |what: &str| SpiError::Dimension(format!("{what} has the wrong shape"));
        if self.reward.len() != n || self.reward.iter().any(|r| r.len() != m) {
            return Err(shape_err("reward"));
        }
        if self.transition.len() != n
            || self
                .transition
                .iter()
                .any(|r| r.len() != m || r.iter().any(|p| p.len() != n))
        {
            return Err(shape_err("transition"));
        }
        let probs: Vec<f64> = self.transition.into_iter().flatten().flatten().collect();
        let kernel = Kernel::with_tolerance(n, m, probs, LOAD_TOL)?;
        crate::mdp::check_distribution(&self.p0, LOAD_TOL, "p0")?;
        let total: f64 = self.p0.iter().sum();
        let initial = self.p0.iter().map(|p| p / total).collect();
        let mdp = Mdp::from_parts(MdpParts {
            n_states: n,
            n_actions: m,
            reward: self.reward.into_iter().flatten().collect(),
            transition: kernel,
            initial,
            discount: self.gamma,
            r_max: Some(self.r_max),
            absorbing: self.absorbing,
        })?;
        let error = self
            .error
            .map(|e| {
                if e.len() != n || e.iter().any(|r| r.len() != m) {
                    return Err(shape_err("error"));
                }
                ErrorFunction::new(n, m, e.into_iter().flatten().collect())
            })
            .transpose()?;
        let baseline = self
            .baseline
            .map(|b| {
                if b.len() != n {
                    return Err(shape_err("baseline"));
                }
                Policy::deterministic(&b, m)
            })
            .transpose()?;
        Ok(LoadedModel {
            mdp,
            error,
            baseline,
        })
    }
}

pub fn read_model(path: &Path) -> Result<LoadedModel> {
    let file: MdpFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    file.into_model()
}

pub fn write_model(
    path: &Path,
    mdp: &Mdp,
    error: Option<&ErrorFunction>,
    baseline: Option<&Policy>,
) -> Result<()> {
    let doc = MdpFile::from_model(mdp, error, baseline)?;
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
