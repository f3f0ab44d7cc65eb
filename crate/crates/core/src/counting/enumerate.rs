use nalgebra::DVector;

use super::{check_len, CountResult, CountingOracle};
use crate::error::{Error, Result};
use crate::family::{Family, Member};
use crate::linalg::log_sum_exp;

/// Brute-force oracle over the enumerated members.
#[derive(Debug, Clone)]
pub struct EnumerationOracle {
    m: usize,
    members: Vec<Member>,
}

impl EnumerationOracle {
    pub fn new(family: &Family) -> Result<Self> {
        Ok(Self::from_members(family.m(), family.members()?))
    }

    pub fn from_members(m: usize, members: Vec<Member>) -> Self {
        Self { m, members }
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    /// `−λ(M)` per member.
    pub fn log_weights(&self, lambda: &DVector<f64>) -> Vec<f64> {
        self.members.iter().map(|s| -s.iter().map(|&e| lambda[e]).sum::<f64>()).collect()
    }
}

impl CountingOracle for EnumerationOracle {
    fn m(&self) -> usize {
        self.m
    }

    fn count(&self, lambda: &DVector<f64>) -> Result<CountResult> {
        check_len(self.m, lambda)?;
        if self.members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let w = self.log_weights(lambda);
        let log_z = log_sum_exp(w.iter().copied());
        let mut per: Vec<Vec<f64>> = vec![Vec::new(); self.m];
        for (s, &wm) in self.members.iter().zip(&w) {
            for &e in s {
                per[e].push(wm);
            }
        }
        let log_z_e = DVector::from_iterator(self.m, per.into_iter().map(log_sum_exp));
        Ok(CountResult { log_z, log_z_e })
    }
}

pub fn count_enumerate(family: &Family, lambda: &DVector<f64>) -> Result<CountResult> {
    EnumerationOracle::new(family)?.count(lambda)
}
