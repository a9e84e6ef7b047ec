use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::time::HalfTime;

/// One bar of a zigzag barcode.
///
/// `birth` is the first position where the feature is alive. For a closed
/// bar `death` is the first position where it is gone; an open bar is still
/// alive at the last complex and carries that position as its death.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub dim: usize,
    pub birth: HalfTime,
    pub death: HalfTime,
    pub open: bool,
}

impl Interval {
    pub fn closed(dim: usize, birth: HalfTime, death: HalfTime) -> Self {
        Interval {
            dim,
            birth,
            death,
            open: false,
        }
    }

    pub fn open(dim: usize, birth: HalfTime, last: HalfTime) -> Self {
        Interval {
            dim,
            birth,
            death: last,
            open: true,
        }
    }

    /// Whether the feature is alive at `p`.
    pub fn covers(&self, p: HalfTime) -> bool {
        self.birth <= p && (p < self.death || (self.open && p == self.death))
    }

    pub fn birth_value(&self) -> f64 {
        self.birth.value()
    }

    pub fn death_value(&self) -> f64 {
        self.death.value()
    }

    pub fn persistence(&self) -> f64 {
        self.death_value() - self.birth_value()
    }
}

/// Multiset of bars kept sorted by `(dim, birth, death, open)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PersistenceDiagram {
    intervals: Vec<Interval>,
}

impl PersistenceDiagram {
    pub fn new(mut intervals: Vec<Interval>) -> Self {
        intervals.sort_unstable();
        PersistenceDiagram { intervals }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &Interval> + '_ {
        self.intervals.iter().filter(move |i| i.dim == dim)
    }

    pub fn max_dim(&self) -> Option<usize> {
        self.intervals.iter().map(|i| i.dim).max()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Number of `dim`-bars alive at `p`.
    pub fn rank_at(&self, dim: usize, p: HalfTime) -> usize {
        self.in_dim(dim).filter(|i| i.covers(p)).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth_x2,death_x2,open\n");
        for i in &self.intervals {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                i.dim,
                i.birth.doubled(),
                i.death.doubled(),
                u8::from(i.open)
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "dim,birth_x2,death_x2,open" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected header `dim,birth_x2,death_x2,open`".into(),
                })
            }
        }
        let mut intervals = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: i as u64 + 1,
                message,
            };
            let fields: Vec<u32> = line
                .split(',')
                .map(|f| f.trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(e.to_string()))?;
            let [dim, birth, death, open] = fields.as_slice() else {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            };
            if birth > death || *open > 1 {
                return Err(bad("malformed interval".into()));
            }
            intervals.push(Interval {
                dim: *dim as usize,
                birth: HalfTime(*birth),
                death: HalfTime(*death),
                open: *open == 1,
            });
        }
        Ok(Self::new(intervals))
    }
}
