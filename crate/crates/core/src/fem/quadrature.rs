//! Symmetric Gauss rules on the reference triangle.
//!
//! Points are barycentric; weights sum to the reference area 1/2.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Exact for polynomials of total degree `order` (1..=6).
pub fn quadrature_rule(order: usize) -> Result<QuadratureRule> {
    let mut rule = Builder::default();
    match order {
        1 => rule.centroid(1.0),
        2 => rule.orbit3(1.0 / 6.0, 1.0 / 3.0),
        // No positive-weight degree-3 rule is cheaper than the 6-point degree-4 one.
        3 | 4 => {
            rule.orbit3(0.445_948_490_915_965, 0.223_381_589_678_011);
            rule.orbit3(0.091_576_213_509_771, 0.109_951_743_655_322);
        }
        5 => {
            rule.centroid(0.225);
            rule.orbit3(0.470_142_064_105_115, 0.132_394_152_788_506);
            rule.orbit3(0.101_286_507_323_456, 0.125_939_180_544_827);
        }
        6 => {
            rule.orbit3(0.249_286_745_170_910, 0.116_786_275_726_379);
            rule.orbit3(0.063_089_014_491_502, 0.050_844_906_370_207);
            rule.orbit6(0.053_145_049_844_817, 0.310_352_451_033_784, 0.082_851_075_618_374);
        }
        _ => return Err(Error::UnsupportedQuadrature(order)),
    }
    Ok(rule.finish(order))
}

#[derive(Default)]
struct Builder {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl Builder {
    fn centroid(&mut self, w: f64) {
        self.points.push([1.0 / 3.0; 3]);
        self.weights.push(w);
    }

    /// The three permutations of (a, a, 1-2a).
    fn orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// The six permutations of (a, b, 1-a-b).
    fn orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    fn finish(self, degree: usize) -> QuadratureRule {
        // Tabulated weights are normalized to sum to one; rescale to the reference area.
        let total: f64 = self.weights.iter().sum();
        let weights = self.weights.iter().map(|w| 0.5 * w / total).collect();
        QuadratureRule { points: self.points, weights, degree }
    }
}
