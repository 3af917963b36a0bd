//! Function-evaluation accounting.

use crate::error::{Error, Result};

/// Evaluation budget handle. Algorithms reserve evaluations before
/// performing them, so a run never silently exceeds its allowance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalBudget {
    limit: u64,
    used: u64,
}

impl EvalBudget {
    pub fn new(limit: u64) -> Self {
        Self { limit, used: 0 }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }

    /// Charges `count` evaluations, failing without side effects if fewer remain.
    pub fn reserve(&mut self, count: u64) -> Result<()> {
        if count > self.remaining() {
            return Err(Error::BudgetExhausted {
                requested: count,
                remaining: self.remaining(),
            });
        }
        self.used += count;
        Ok(())
    }
}
