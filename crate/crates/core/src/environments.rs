//! Ground-truth reward generators: the bundled synthetic and medical
//! settings, their zero-noise variants, and environments loaded from TOML.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::primitives::{gap_unchecked, GapValue};

/// Source of reward vectors for the arms of a bandit problem.
pub trait RewardSource {
    fn num_arms(&self) -> usize;

    fn num_objectives(&self) -> usize;

    /// Overwrites `out` with one reward vector for `arm` (0-based).
    fn sample_into<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R, out: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    /// Rewards equal the mean row exactly.
    Degenerate,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditEnvironment {
    name: String,
    means: Vec<Vec<f64>>,
    sigma: f64,
    family: Family,
    thresholds: Option<Vec<f64>>,
}

/// On-disk layout of an environment document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentDocument {
    name: String,
    #[serde(rename = "K")]
    num_arms: usize,
    #[serde(rename = "M")]
    num_objectives: usize,
    sigma: f64,
    family: Family,
    means: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thresholds: Option<Vec<f64>>,
}

impl BanditEnvironment {
    pub fn new(
        name: impl Into<String>,
        means: Vec<Vec<f64>>,
        sigma: f64,
        family: Family,
        thresholds: Option<Vec<f64>>,
    ) -> Result<Self> {
        let num_arms = means.len();
        let num_objectives = means.first().map_or(0, Vec::len);
        Self::validated(EnvironmentDocument {
            name: name.into(),
            num_arms,
            num_objectives,
            sigma,
            family,
            means,
            thresholds,
        })
    }

    fn validated(doc: EnvironmentDocument) -> Result<Self> {
        if doc.num_arms == 0 {
            return Err(Error::Parse("field `K`: must be at least 1".into()));
        }
        if doc.num_objectives == 0 {
            return Err(Error::Parse("field `M`: must be at least 1".into()));
        }
        if !(doc.sigma >= 0.0 && doc.sigma.is_finite()) {
            return Err(Error::Parse(format!(
                "field `sigma`: must be finite and >= 0, got {}",
                doc.sigma
            )));
        }
        if doc.means.len() != doc.num_arms {
            return Err(Error::Parse(format!(
                "field `means`: expected K = {} rows, found {}",
                doc.num_arms,
                doc.means.len()
            )));
        }
        for (i, row) in doc.means.iter().enumerate() {
            if row.len() != doc.num_objectives {
                return Err(Error::Parse(format!(
                    "field `means`: row {} has {} entries but M = {}",
                    i + 1,
                    row.len(),
                    doc.num_objectives
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Parse(format!(
                    "field `means`: row {} contains non-finite value {v}",
                    i + 1
                )));
            }
        }
        if let Some(xi) = &doc.thresholds {
            if xi.len() != doc.num_objectives {
                return Err(Error::Parse(format!(
                    "field `thresholds`: expected M = {} entries, found {}",
                    doc.num_objectives,
                    xi.len()
                )));
            }
            if let Some(x) = xi.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::Parse(format!(
                    "field `thresholds`: value {x} is outside [0, 1]"
                )));
            }
        }
        let sigma = match doc.family {
            Family::Gaussian => doc.sigma,
            Family::Degenerate => 0.0,
        };
        Ok(Self {
            name: doc.name,
            means: doc.means,
            sigma,
            family: doc.family,
            thresholds: doc.thresholds,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn num_objectives(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn mean(&self, arm: usize) -> Result<&[f64]> {
        self.means
            .get(arm)
            .map(Vec::as_slice)
            .ok_or(Error::Index {
                index: arm,
                num_arms: self.means.len(),
            })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn thresholds(&self) -> Option<&[f64]> {
        self.thresholds.as_deref()
    }

    /// Same means and thresholds with the noise switched off.
    pub fn degenerate(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            means: self.means.clone(),
            sigma: 0.0,
            family: Family::Degenerate,
            thresholds: self.thresholds.clone(),
        }
    }

    pub fn true_gaps(&self, thresholds: &[f64]) -> Result<Vec<GapValue>> {
        check_len("true_gaps", self.num_objectives(), thresholds.len())?;
        Ok(self
            .means
            .iter()
            .map(|row| GapValue(gap_unchecked(row, thresholds)))
            .collect())
    }

    pub fn means_in_unit_interval(&self) -> bool {
        self.means
            .iter()
            .flatten()
            .all(|v| (0.0..=1.0).contains(v))
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.num_objectives()];
        self.sample_into(arm, rng, &mut out)?;
        Ok(out)
    }

    pub fn to_toml(&self) -> String {
        let doc = EnvironmentDocument {
            name: self.name.clone(),
            num_arms: self.num_arms(),
            num_objectives: self.num_objectives(),
            sigma: self.sigma,
            family: self.family,
            means: self.means.clone(),
            thresholds: self.thresholds.clone(),
        };
        toml::to_string(&doc).expect("environment document serializes")
    }
}

impl RewardSource for BanditEnvironment {
    fn num_arms(&self) -> usize {
        BanditEnvironment::num_arms(self)
    }

    fn num_objectives(&self) -> usize {
        BanditEnvironment::num_objectives(self)
    }

    /// Gaussian: one standard-normal draw per objective, in objective order.
    /// Degenerate: no draws.
    fn sample_into<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R, out: &mut [f64]) -> Result<()> {
        let row = self.mean(arm)?;
        check_len("sample_into", row.len(), out.len())?;
        match self.family {
            Family::Degenerate => out.copy_from_slice(row),
            Family::Gaussian => {
                for (o, mu) in out.iter_mut().zip(row) {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = mu + self.sigma * z;
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a TOML environment document.
pub fn load_environment(text: &str) -> Result<BanditEnvironment> {
    let doc: EnvironmentDocument =
        toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
    BanditEnvironment::validated(doc)
}

/// Default thresholds of the synthetic setting.
pub const SYNTHETIC_THRESHOLDS: [f64; 4] = [0.6, 0.5, 0.6, 0.5];

/// Default thresholds of the medical setting.
pub const MEDICAL_THRESHOLDS: [f64; 2] = [0.48, 0.75];

/// K = 10, M = 4, sigma = 1.2.
pub fn synthetic_environment() -> BanditEnvironment {
    let obj1 = [0.1, 0.1, 0.1, 0.35, 0.45, 0.55, 0.65, 0.2, 0.2, 0.2];
    // 0.4 - 0.2^j for arms 1..4, 0.6 + 0.1^(5-j) for arms 7..10
    let obj2 = [
        0.4 - 0.2,
        0.4 - 0.2f64.powi(2),
        0.4 - 0.2f64.powi(3),
        0.4 - 0.2f64.powi(4),
        0.45,
        0.55,
        0.6 + 0.1f64.powi(4),
        0.6 + 0.1f64.powi(3),
        0.6 + 0.1f64.powi(2),
        0.6 + 0.1,
    ];
    let obj3 = [0.05, 0.10, 0.15, 0.20, 0.45, 0.55, 0.65, 0.70, 0.75, 0.80];
    let obj4 = [0.4, 0.4, 0.4, 0.4, 0.5, 0.5, 0.5, 0.5, 0.6, 0.6];
    let means = (0..10)
        .map(|i| vec![obj1[i], obj2[i], obj3[i], obj4[i]])
        .collect();
    BanditEnvironment::new(
        "synthetic",
        means,
        1.2,
        Family::Gaussian,
        Some(SYNTHETIC_THRESHOLDS.to_vec()),
    )
    .expect("bundled environment is valid")
}

/// K = 5, M = 2, sigma = 1.0: two dose-finding studies combined.
pub fn medical_environment() -> BanditEnvironment {
    let obj1 = [0.36, 0.59, 0.85, 0.95, 0.79];
    let obj2 = [0.375, 0.475, 0.7625, 0.8375, 0.975];
    let means = (0..5).map(|i| vec![obj1[i], obj2[i]]).collect();
    BanditEnvironment::new(
        "medical",
        means,
        1.0,
        Family::Gaussian,
        Some(MEDICAL_THRESHOLDS.to_vec()),
    )
    .expect("bundled environment is valid")
}

/// Names accepted by [`bundled`].
pub const BUNDLED_NAMES: [&str; 4] = [
    "synthetic",
    "synthetic-degenerate",
    "medical",
    "medical-degenerate",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundled {
    Synthetic,
    SyntheticDegenerate,
    Medical,
    MedicalDegenerate,
}

impl FromStr for Bundled {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Self::Synthetic),
            "synthetic-degenerate" => Ok(Self::SyntheticDegenerate),
            "medical" => Ok(Self::Medical),
            "medical-degenerate" => Ok(Self::MedicalDegenerate),
            other => Err(Error::Config(format!(
                "unknown environment `{other}` (expected one of {})",
                BUNDLED_NAMES.join("|")
            ))),
        }
    }
}

pub fn bundled(which: Bundled) -> BanditEnvironment {
    match which {
        Bundled::Synthetic => synthetic_environment(),
        Bundled::SyntheticDegenerate => synthetic_environment().degenerate("synthetic-degenerate"),
        Bundled::Medical => medical_environment(),
        Bundled::MedicalDegenerate => medical_environment().degenerate("medical-degenerate"),
    }
}
