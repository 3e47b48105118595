use serde::{Deserialize, Serialize};

/// Desk-scale guardrails applied before any table is built or sum evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceCaps {
    /// Largest x (and table limit) accepted by exact counting routines.
    pub max_x: u64,
    /// Largest number of entries a smooth-number enumeration may produce.
    pub max_enumeration: usize,
    /// Largest number of breakpoints a single piecewise integral may carry.
    pub max_breakpoints: usize,
    /// Largest u for which special-function tables may be built.
    pub max_u: f64,
    /// Largest truncation point X of ∫_0^∞ δ; only smooth numbers up to X are
    /// enumerated there, so this may exceed `max_x`.
    pub max_truncation_x: u64,
}

impl Default for ResourceCaps {
    fn default() -> Self {
        Self {
            max_x: 100_000_000,
            max_enumeration: 100_000_000,
            max_breakpoints: 1_000_000,
            max_u: 50.0,
            max_truncation_x: 1_000_000_000_000,
        }
    }
}

impl ResourceCaps {
    pub(crate) fn check_x(&self, x: u64, what: &str) -> crate::Result<()> {
        if x > self.max_x {
            return Err(crate::error::resource(format!(
                "{what} = {x} exceeds max_x = {}",
                self.max_x
            )));
        }
        Ok(())
    }

    pub(crate) fn check_breakpoints(&self, n: usize, what: &str) -> crate::Result<()> {
        if n > self.max_breakpoints {
            return Err(crate::error::resource(format!(
                "{what} needs {n} breakpoints, cap is {}",
                self.max_breakpoints
            )));
        }
        Ok(())
    }
}
