//! Hybrid time: pairs of physical time and cumulative jump count, ordered
//! lexicographically and added componentwise.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridTime {
    /// Physical time, `>= 0`.
    pub t: f64,
    /// Jumps taken so far.
    pub k: u64,
}

impl HybridTime {
    pub const ZERO: HybridTime = HybridTime { t: 0.0, k: 0 };

    pub fn new(t: f64, k: u64) -> HybridTime {
        debug_assert!(t >= 0.0 && t.is_finite());
        HybridTime { t, k }
    }

    /// The moment right after a jump taken at `self`.
    pub fn successor(self) -> HybridTime {
        HybridTime {
            t: self.t,
            k: self.k + 1,
        }
    }
}

impl Eq for HybridTime {}

impl Ord for HybridTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t.total_cmp(&other.t).then(self.k.cmp(&other.k))
    }
}

impl PartialOrd for HybridTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for HybridTime {
    type Output = HybridTime;

    fn add(self, rhs: HybridTime) -> HybridTime {
        HybridTime {
            t: self.t + rhs.t,
            k: self.k + rhs.k,
        }
    }
}

impl fmt::Display for HybridTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.t, self.k)
    }
}
