use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Axis-aligned box in `ℝᵐ` on which suprema over `u` are sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(LabError::InvalidArgument(format!(
                "bad sample box lo={lo:?} hi={hi:?}"
            )));
        }
        Ok(SampleBox { lo, hi })
    }

    /// `[−r, r]ᵐ`.
    pub fn symmetric(m: usize, r: f64) -> Self {
        SampleBox {
            lo: vec![-r; m],
            hi: vec![r; m],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// The box scaled by `factor` about its center.
    pub fn scaled(&self, factor: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| {
                let (c, r) = (0.5 * (a + b), 0.5 * (b - a) * factor);
                (c - r, c + r)
            })
            .unzip();
        SampleBox { lo, hi }
    }

    /// Center, every corner (for `m ≤ 10`), then `n` Latin-hypercube points
    /// drawn from a ChaCha stream seeded with `seed`.
    pub fn samples(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let m = self.dim();
        let mut out = vec![self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect::<Vec<_>>()];
        if m <= 10 {
            for mask in 0..(1usize << m) {
                out.push(
                    (0..m)
                        .map(|c| {
                            if mask >> c & 1 == 1 {
                                self.hi[c]
                            } else {
                                self.lo[c]
                            }
                        })
                        .collect(),
                );
            }
        }
        if n == 0 {
            return out;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strata: Vec<Vec<usize>> = (0..m)
            .map(|_| {
                let mut s: Vec<usize> = (0..n).collect();
                s.shuffle(&mut rng);
                s
            })
            .collect();
        for i in 0..n {
            out.push(
                (0..m)
                    .map(|c| {
                        let t = (strata[c][i] as f64 + rng.random::<f64>()) / n as f64;
                        self.lo[c] + t * (self.hi[c] - self.lo[c])
                    })
                    .collect(),
            );
        }
        out
    }
}

/// Unit vectors in `ℝᵏ`: the coordinate axes, then `n` random directions.
pub fn xi_samples(k: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < k + n {
        let v: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let norm = super::norm(&v);
        if norm > 1e-3 && norm <= 1.0 {
            out.push(v.iter().map(|x| x / norm).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latin_hypercube_fills_each_stratum() {
        let b = SampleBox::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let s = b.samples(16, 3);
        assert_eq!(s.len(), 1 + 4 + 16);
        let mut seen = [false; 16];
        for p in &s[5..] {
            seen[((p[0] * 16.0).floor() as usize).min(15)] = true;
            assert!((-1.0..=1.0).contains(&p[1]));
        }
        assert!(seen.iter().all(|&x| x));
        assert_eq!(s, b.samples(16, 3));
    }

    #[test]
    fn xi_are_unit() {
        for v in xi_samples(4, 20, 1) {
            assert!((super::super::norm(&v) - 1.0).abs() < 1e-12);
        }
    }
}
