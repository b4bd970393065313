use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Antichain, Direction, InsertOutcome, Interval, OrderError, OrthantSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Class {
    Known0,
    Known1,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Mmin,
    Mmax,
    Pruned,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Mmin => "mmin",
            Role::Mmax => "mmax",
            Role::Pruned => "pruned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub iter: usize,
    pub point: Vec<f64>,
    pub value: u8,
}

/// Inner and outer order-convex covers of the sublevel set of an increasing
/// 0/1 oracle on a box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinApproximation {
    pub bounds: Interval,
    pub sig: OrthantSignature,
    /// Maximal points known to have oracle value 0.
    pub m_min: Antichain,
    /// Minimal points known to have oracle value 1.
    pub m_max: Antichain,
    pub log: Vec<SampleRecord>,
}

/// Interval form of the two covers. The inner cover is the union of
/// `inner`; the outer cover is the box minus the union of `outer_excluded`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverReport {
    pub inner: Vec<Interval>,
    pub outer_excluded: Vec<Interval>,
}

impl BasinApproximation {
    /// Starts from the two corners, `O(lower) = 0` and `O(upper) = 1`.
    pub fn new(bounds: Interval, sig: OrthantSignature) -> Self {
        let mut m_min = Antichain::new(Direction::TrackMaximal, sig.clone());
        let mut m_max = Antichain::new(Direction::TrackMinimal, sig.clone());
        m_min.insert(&bounds.lower);
        m_max.insert(&bounds.upper);
        let log = vec![
            SampleRecord { iter: 0, point: bounds.lower.clone(), value: 0 },
            SampleRecord { iter: 0, point: bounds.upper.clone(), value: 1 },
        ];
        BasinApproximation { bounds, sig, m_min, m_max, log }
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn classify(&self, z: &[f64]) -> Result<Class, OrderError> {
        match (self.m_min.covering(z), self.m_max.covering(z)) {
            (Some(a), Some(b)) => Err(OrderError::Contradiction {
                point: z.to_vec(),
                inside: a.to_vec(),
                outside: b.to_vec(),
            }),
            (Some(_), None) => Ok(Class::Known0),
            (None, Some(_)) => Ok(Class::Known1),
            (None, None) => Ok(Class::Unknown),
        }
    }

    /// Logs an oracle value and updates the matching antichain. A value that
    /// contradicts the opposite antichain is rejected with a witness.
    pub fn record(&mut self, iter: usize, z: &[f64], value: u8) -> Result<InsertOutcome, OrderError> {
        let conflict = if value == 0 { self.m_max.covering(z) } else { self.m_min.covering(z) };
        if let Some(w) = conflict {
            let (inside, outside) =
                if value == 0 { (z.to_vec(), w.to_vec()) } else { (w.to_vec(), z.to_vec()) };
            return Err(OrderError::Contradiction { point: z.to_vec(), inside, outside });
        }
        self.log.push(SampleRecord { iter, point: z.to_vec(), value });
        Ok(if value == 0 { self.m_min.insert(z) } else { self.m_max.insert(z) })
    }

    /// Monte Carlo estimate of the undecided fraction of the box.
    pub fn undecided_volume(&self, budget: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let budget = budget.max(1);
        let unknown = (0..budget)
            .filter(|_| {
                let z = self.bounds.sample(&mut rng);
                !matches!(self.classify(&z), Ok(Class::Known0) | Ok(Class::Known1))
            })
            .count();
        unknown as f64 / budget as f64
    }

    pub fn in_inner(&self, z: &[f64]) -> bool {
        self.m_min.covers(z)
    }

    pub fn in_outer(&self, z: &[f64]) -> bool {
        !self.m_max.covers(z)
    }

    pub fn cover_report(&self) -> CoverReport {
        let inner = self
            .m_min
            .points()
            .iter()
            .map(|m| Interval { lower: self.bounds.lower.clone(), upper: m.clone() })
            .collect();
        let outer_excluded = self
            .m_max
            .points()
            .iter()
            .map(|m| Interval { lower: m.clone(), upper: self.bounds.upper.clone() })
            .collect();
        CoverReport { inner, outer_excluded }
    }

    /// Role of a logged sample in the final antichains, matched exactly.
    pub fn role(&self, rec: &SampleRecord) -> Role {
        let chain = if rec.value == 0 { &self.m_min } else { &self.m_max };
        if chain.contains_point(&rec.point) {
            if rec.value == 0 {
                Role::Mmin
            } else {
                Role::Mmax
            }
        } else {
            Role::Pruned
        }
    }

    pub fn is_valid(&self) -> bool {
        self.m_min.is_valid()
            && self.m_max.is_valid()
            && !self.m_min.points().iter().any(|a| self.m_max.covers(a))
    }

    /// `iter,x_1..x_n,oracle,role`.
    pub fn write_samples_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.dim();
        let mut header = vec!["iter".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.push("oracle".into());
        header.push("role".into());
        writeln!(w, "{}", header.join(","))?;
        for rec in &self.log {
            let mut row = vec![rec.iter.to_string()];
            row.extend(rec.point.iter().map(|v| v.to_string()));
            row.push(rec.value.to_string());
            row.push(self.role(rec).as_str().into());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}
