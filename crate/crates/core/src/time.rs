use std::fmt;

/// A point on the half-integer time grid `1, 1.5, 2, ...`, stored doubled so
/// that arithmetic and comparisons stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfTime(pub u32);

impl HalfTime {
    pub fn from_snapshot(t: usize) -> Self {
        HalfTime(2 * t as u32)
    }

    /// Union position between snapshots `t` and `t + 1`.
    pub fn between(t: usize) -> Self {
        HalfTime(2 * t as u32 + 1)
    }

    /// Position of the `p`-th complex in a zigzag that starts at time 1.
    pub fn from_zigzag_index(p: usize) -> Self {
        HalfTime(p as u32 + 2)
    }

    pub fn doubled(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn is_union(self) -> bool {
        self.0 % 2 == 1
    }
}

impl fmt::Display for HalfTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}
