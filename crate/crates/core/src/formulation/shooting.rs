use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One shooting segment: start state `x0^i` and signed duration `t_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: DVector<f64>,
    pub duration: f64,
}

/// The multiple-shooting parameter vector, kept as a list of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingVector {
    segments: Vec<Segment>,
}

impl ShootingVector {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidInput("at least one segment is required".into()));
        };
        let n = first.start.len();
        if n == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        if let Some(bad) = segments.iter().find(|s| s.start.len() != n) {
            return Err(Error::DimensionMismatch {
                what: "segment start state",
                expected: n,
                found: bad.start.len(),
            });
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segments_mut(&mut self) -> &mut [Segment] {
        &mut self.segments
    }

    /// Number of segments `N`.
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        self.segments[0].start.len()
    }

    /// Length `N (n + 1)` of the packed vector.
    pub fn packed_len(&self) -> usize {
        self.len() * (self.dim() + 1)
    }

    pub fn durations(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().map(|s| s.duration)
    }

    pub fn total_duration(&self) -> f64 {
        self.durations().sum()
    }

    pub fn pack(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.packed_len());
        for s in &self.segments {
            out.extend(s.start.iter());
            out.push(s.duration);
        }
        DVector::from_vec(out)
    }

    pub fn unpack(flat: &DVector<f64>, n: usize, segments: usize) -> Result<Self> {
        let expected = segments * (n + 1);
        if flat.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "packed shooting vector",
                expected,
                found: flat.len(),
            });
        }
        let segs = flat
            .as_slice()
            .chunks_exact(n + 1)
            .map(|c| Segment {
                start: DVector::from_column_slice(&c[..n]),
                duration: c[n],
            })
            .collect();
        Self::new(segs)
    }

    /// `X + alpha * d` in packed coordinates.
    pub fn step(&self, direction: &DVector<f64>, alpha: f64) -> Result<Self> {
        let flat = self.pack() + direction * alpha;
        Self::unpack(&flat, self.dim(), self.len())
    }
}
