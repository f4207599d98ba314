//! JSON state-set files:
//!
//! ```json
//! {"d": 2, "groups": [[[1.0, 0.0], [0.0, 0.0]], ...], "provenance": "qubit"}
//! ```
//!
//! `groups` is a list of groups, each a list of vectors, each a list of `d`
//! `[re, im]` pairs. Floats are written in shortest round-trip form, so a
//! write/read cycle reproduces every bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constellation::StateSet;
use crate::states::CVector;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSetFile {
    pub d: usize,
    pub groups: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub provenance: String,
}

impl StateSetFile {
    pub fn from_state_set(states: &StateSet, provenance: impl Into<String>) -> Self {
        Self {
            d: states.d(),
            groups: states
                .groups()
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|v| v.entries().iter().map(|z| [z.re, z.im]).collect())
                        .collect()
                })
                .collect(),
            provenance: provenance.into(),
        }
    }

    fn vectors(&self) -> Result<Vec<Vec<CVector>>> {
        self.groups
            .iter()
            .enumerate()
            .map(|(b, g)| {
                g.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        if v.len() != self.d {
                            return Err(Error::StateFile(format!(
                                "vector {j} of group {b} has {} components, expected {}",
                                v.len(),
                                self.d
                            )));
                        }
                        CVector::new(v.iter().map(|&[re, im]| C64::new(re, im)).collect())
                    })
                    .collect()
            })
            .collect()
    }

    /// Validated state set: every vector must be unit.
    pub fn to_state_set(&self) -> Result<StateSet> {
        StateSet::new(self.d, self.vectors()?)
    }

    /// Shape-checked only; norms are left for verification to report.
    pub fn to_raw_state_set(&self) -> Result<StateSet> {
        if !(2..=crate::MAX_DIM).contains(&self.d) {
            return Err(Error::UnsupportedDimension(self.d));
        }
        Ok(StateSet::from_parts_unchecked(self.d, self.vectors()?))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
