//! Generalized counting oracles: `ln Z^λ = ln Σ_M e^{−λ(M)}` together with
//! `ln Z^λ_e` for every ground element, exactly or with multiplicative noise.

mod enumerate;
pub(crate) mod matrix_tree;
mod noisy;
mod permanent;

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Family, FamilyKind};
use crate::linalg::serde_log_dvector;

pub use enumerate::{count_enumerate, EnumerationOracle};
pub use matrix_tree::{count_spanning_trees, SpanningTreeOracle};
pub use noisy::{noisy_oracle, NoiseMode, NoiseSpec, NoisyOracle};
pub use permanent::{count_bipartite_pm, count_cycle_covers, CycleCoverOracle, PerfectMatchingOracle, MAX_PERMANENT_SIZE};

/// Log-domain partition function and per-element partial sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub log_z: f64,
    /// `ln Z_e`; `-inf` encodes an element in no member.
    #[serde(with = "serde_log_dvector")]
    pub log_z_e: DVector<f64>,
}

impl CountResult {
    /// `Z_e / Z` per element.
    pub fn ratios(&self) -> DVector<f64> {
        self.log_z_e.map(|l| (l - self.log_z).exp())
    }
}

/// A generalized counting oracle over a fixed ground set.
pub trait CountingOracle: Send + Sync {
    /// Ground-set size.
    fn m(&self) -> usize;

    fn count(&self, lambda: &DVector<f64>) -> Result<CountResult>;

    /// Whether outputs are exact (up to floating point).
    fn is_exact(&self) -> bool {
        true
    }
}

impl<T: CountingOracle + ?Sized> CountingOracle for Arc<T> {
    fn m(&self) -> usize {
        (**self).m()
    }

    fn count(&self, lambda: &DVector<f64>) -> Result<CountResult> {
        (**self).count(lambda)
    }

    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }
}

impl<T: CountingOracle + ?Sized> CountingOracle for Box<T> {
    fn m(&self) -> usize {
        (**self).m()
    }

    fn count(&self, lambda: &DVector<f64>) -> Result<CountResult> {
        (**self).count(lambda)
    }

    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }
}

/// The specialized exact oracle for a family kind; enumeration for explicit
/// families.
pub fn exact_oracle(family: &Family) -> Result<Arc<dyn CountingOracle>> {
    Ok(match family.kind() {
        FamilyKind::SpanningTrees(g) => Arc::new(SpanningTreeOracle::new(g.clone())?),
        FamilyKind::BipartitePerfectMatchings(g) => Arc::new(PerfectMatchingOracle::new(g.clone())?),
        FamilyKind::CycleCovers(g) => Arc::new(CycleCoverOracle::new(g.clone())?),
        FamilyKind::Explicit { .. } => Arc::new(EnumerationOracle::new(family)?),
    })
}

pub(crate) fn check_len(m: usize, lambda: &DVector<f64>) -> Result<()> {
    if lambda.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: lambda.len(),
        });
    }
    if lambda.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("λ must be finite".into()));
    }
    Ok(())
}
