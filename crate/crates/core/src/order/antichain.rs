use serde::Serialize;

use super::OrthantSignature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Keeps the maximal points of everything inserted (known-inside set).
    TrackMaximal,
    /// Keeps the minimal points of everything inserted (known-outside set).
    TrackMinimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertOutcome {
    /// False when the point was already covered by a member.
    pub added: bool,
    /// Members removed because the new point dominates them.
    pub removed: Vec<Vec<f64>>,
}

/// Pairwise incomparable point set, stored flat with linear-scan updates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Antichain {
    points: Vec<Vec<f64>>,
    direction: Direction,
    sig: OrthantSignature,
}

impl Antichain {
    pub fn new(direction: Direction, sig: OrthantSignature) -> Self {
        Antichain { points: Vec::new(), direction, sig }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn signature(&self) -> &OrthantSignature {
        &self.sig
    }

    // a "beats" b when b is redundant in the presence of a
    fn beats(&self, a: &[f64], b: &[f64]) -> bool {
        match self.direction {
            Direction::TrackMaximal => self.sig.leq(b, a),
            Direction::TrackMinimal => self.sig.leq(a, b),
        }
    }

    /// First member that makes `z` redundant: `z <= m` when tracking
    /// maxima, `m <= z` when tracking minima.
    pub fn covering(&self, z: &[f64]) -> Option<&[f64]> {
        self.points.iter().find(|m| self.beats(m, z)).map(|m| m.as_slice())
    }

    pub fn covers(&self, z: &[f64]) -> bool {
        self.covering(z).is_some()
    }

    pub fn insert(&mut self, z: &[f64]) -> InsertOutcome {
        if self.covers(z) {
            return InsertOutcome { added: false, removed: Vec::new() };
        }
        let mut removed = Vec::new();
        let mut kept = Vec::with_capacity(self.points.len() + 1);
        for m in self.points.drain(..) {
            let dominated = match self.direction {
                Direction::TrackMaximal => self.sig.leq(&m, z),
                Direction::TrackMinimal => self.sig.leq(z, &m),
            };
            if dominated {
                removed.push(m);
            } else {
                kept.push(m);
            }
        }
        kept.push(z.to_vec());
        self.points = kept;
        InsertOutcome { added: true, removed }
    }

    pub fn contains_point(&self, z: &[f64]) -> bool {
        self.points.iter().any(|m| m.as_slice() == z)
    }

    /// True if no two members are comparable.
    pub fn is_valid(&self) -> bool {
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                if self.sig.comparable(a, b) {
                    return false;
                }
            }
        }
        true
    }
}
