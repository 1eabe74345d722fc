//! Concave group coverage `D(S) = sum_i h(|G_i ∩ S|)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Nonnegative, nondecreasing, concave `h` with `h(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcaveH {
    /// `min(1, x)`: plain group counting.
    #[default]
    Count,
    Sqrt,
    Log1p,
}

impl ConcaveH {
    pub const ALL: [ConcaveH; 3] = [ConcaveH::Count, ConcaveH::Sqrt, ConcaveH::Log1p];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            ConcaveH::Count => x.min(1.0),
            ConcaveH::Sqrt => x.sqrt(),
            ConcaveH::Log1p => x.ln_1p(),
        }
    }

    /// `h(count + 1) - h(count)`.
    pub fn marginal(self, count: usize) -> f64 {
        match self {
            ConcaveH::Count => {
                if count == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.eval(count as f64 + 1.0) - self.eval(count as f64),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConcaveH::Count => "count",
            ConcaveH::Sqrt => "sqrt",
            ConcaveH::Log1p => "log1p",
        }
    }
}

impl fmt::Display for ConcaveH {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConcaveH {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count" => Ok(ConcaveH::Count),
            "sqrt" => Ok(ConcaveH::Sqrt),
            "log1p" => Ok(ConcaveH::Log1p),
            other => Err(format!("unknown concave function '{other}'")),
        }
    }
}

/// `sum_i h(counts[i])`.
pub fn coverage_value(counts: &[usize], h: ConcaveH) -> f64 {
    counts.iter().map(|&c| h.eval(c as f64)).sum()
}

/// Gain of an item belonging to `member_groups`:
/// `sum_{i in member_groups} h(counts[i] + 1) - h(counts[i])`.
pub fn coverage_gain(member_groups: &[usize], counts: &[usize], h: ConcaveH) -> f64 {
    member_groups.iter().map(|&g| h.marginal(counts[g])).sum()
}
