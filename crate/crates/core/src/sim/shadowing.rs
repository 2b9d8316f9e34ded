//! Static, spatially correlated shadowing.
//!
//! Each transmitter gets its own frozen Gaussian field: standard normal
//! values on a square lattice of pitch `correlation_length`, hashed from the
//! seed, the transmitter id and the lattice node, then blended with
//! smoothstep weights. The blend is divided by the weight norm so every
//! point has marginal standard deviation exactly `sigma`. Evaluation needs
//! no state, so the field is the same whichever order points are visited.

use crate::model::{ApId, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticShadowing {
    /// Marginal standard deviation (dB); zero disables the field.
    pub sigma: f64,
    /// Lattice pitch (m); points further apart than this are independent.
    pub correlation_length: f64,
    pub seed: u64,
}

impl Default for StaticShadowing {
    fn default() -> Self {
        StaticShadowing {
            sigma: 0.0,
            correlation_length: 3.0,
            seed: 0,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn id_hash(id: &ApId) -> u64 {
    id.as_str()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn unit(bits: u64) -> f64 {
    // 53 random bits in (0, 1]
    ((bits >> 11) + 1) as f64 / (1u64 << 53) as f64
}

/// Standard normal value attached to a lattice node (Box-Muller).
fn node_value(key: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix64(key ^ splitmix64(ix as u64 ^ splitmix64(iy as u64)));
    let u1 = unit(h);
    let u2 = unit(splitmix64(h));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

impl StaticShadowing {
    pub fn is_active(&self) -> bool {
        self.sigma > 0.0
    }

    /// Field value (dB) for transmitter `id` at `p`.
    pub fn offset(&self, id: &ApId, p: Point) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        let key = splitmix64(self.seed ^ id_hash(id));
        let gx = p.x / self.correlation_length;
        let gy = p.y / self.correlation_length;
        let (fx, fy) = (gx.floor(), gy.floor());
        let (tx, ty) = (smoothstep(gx - fx), smoothstep(gy - fy));
        let (ix, iy) = (fx as i64, fy as i64);
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (dx, wx) in [(0, 1.0 - tx), (1, tx)] {
            for (dy, wy) in [(0, 1.0 - ty), (1, ty)] {
                let w = wx * wy;
                acc += w * node_value(key, ix + dx, iy + dy);
                norm += w * w;
            }
        }
        self.sigma * acc / norm.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(sigma: f64) -> StaticShadowing {
        StaticShadowing {
            sigma,
            correlation_length: 2.0,
            seed: 42,
        }
    }

    #[test]
    fn disabled_field_is_zero() {
        let id = ApId::new("ap01").unwrap();
        assert_eq!(field(0.0).offset(&id, Point::new(3.3, 4.4)), 0.0);
    }

    #[test]
    fn marginal_moments_match_sigma() {
        let f = field(5.0);
        let id = ApId::new("ap01").unwrap();
        let vals: Vec<f64> = (0..200)
            .flat_map(|i| (0..200).map(move |j| Point::new(i as f64 * 2.3 + 0.37, j as f64 * 2.9 + 0.61)))
            .map(|p| f.offset(&id, p))
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.15, "{mean}");
        assert!((var.sqrt() - 5.0).abs() < 0.15, "{}", var.sqrt());
    }

    #[test]
    fn continuous_and_id_specific() {
        let f = field(4.0);
        let a = ApId::new("a").unwrap();
        let b = ApId::new("b").unwrap();
        let p = Point::new(7.0, 3.0);
        let q = Point::new(7.0 + 1e-7, 3.0);
        assert!((f.offset(&a, p) - f.offset(&a, q)).abs() < 1e-5);
        assert_ne!(f.offset(&a, p), f.offset(&b, p));
        let other = StaticShadowing { seed: 43, ..f };
        assert_ne!(f.offset(&a, p), other.offset(&a, p));
    }
}
