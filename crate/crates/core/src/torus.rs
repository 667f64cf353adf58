//! Canonical coordinates and the quotient flat distance on T² = R²/Z².
//!
//! Points live in [0,1)². The distance between two points is the minimum
//! over the nine integer shifts k ∈ {−1,0,1}² of the Euclidean norm of
//! a − b + k, which is the quotient metric restricted to canonical
//! representatives. `torus_distance` is defined as the norm of
//! `torus_displacement`, so the identity d(a,b) = |displacement(a,b)| holds
//! bit-exactly.

use crate::error::{Error, Result};

/// A point of the flat torus, coordinates always in [0,1).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TorusPoint {
    x1: f64,
    x2: f64,
}

impl TorusPoint {
    /// Wraps arbitrary finite coordinates into [0,1)².
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        if !x1.is_finite() || !x2.is_finite() {
            return Err(Error::NonFinite(x1, x2));
        }
        Ok(Self {
            x1: wrap_coord(x1),
            x2: wrap_coord(x2),
        })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn coords(&self) -> (f64, f64) {
        (self.x1, self.x2)
    }

    /// The point shifted by (dx1, dx2), wrapped back into [0,1)².
    pub fn translate(&self, dx1: f64, dx2: f64) -> Result<Self> {
        Self::new(self.x1 + dx1, self.x2 + dx2)
    }
}

/// Reduce a coordinate modulo 1 into [0,1).
///
/// `rem_euclid` can round to exactly 1.0 for tiny negative inputs, hence
/// the fixup.
fn wrap_coord(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Wrap a real pair into canonical torus coordinates. Idempotent.
pub fn wrap(v: (f64, f64)) -> Result<TorusPoint> {
    TorusPoint::new(v.0, v.1)
}

/// The minimal-norm representative of b − a, in [−1/2, 1/2)².
///
/// Enumerates the nine integer shifts in lexicographic order with strict
/// improvement, so on ties the negative representative wins and the result
/// stays in the half-open square.
pub fn torus_displacement(a: TorusPoint, b: TorusPoint) -> (f64, f64) {
    let dx = b.x1 - a.x1;
    let dy = b.x2 - a.x2;
    let mut best = f64::INFINITY;
    let mut disp = (0.0, 0.0);
    for k1 in [-1.0, 0.0, 1.0] {
        for k2 in [-1.0, 0.0, 1.0] {
            let u = dx + k1;
            let v = dy + k2;
            let s = u * u + v * v;
            if s < best {
                best = s;
                disp = (u, v);
            }
        }
    }
    disp
}

/// Quotient flat distance d(a, b) = min over shifts |a − b + k| ≤ √2/2.
pub fn torus_distance(a: TorusPoint, b: TorusPoint) -> f64 {
    let (u, v) = torus_displacement(a, b);
    (u * u + v * v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x1: f64, x2: f64) -> TorusPoint {
        TorusPoint::new(x1, x2).unwrap()
    }

    #[test]
    fn wrap_reduces_mod_one() {
        assert_eq!(wrap((1.25, -0.5)).unwrap().coords(), (0.25, 0.5));
        assert_eq!(wrap((0.0, 0.0)).unwrap().coords(), (0.0, 0.0));
        assert_eq!(wrap((3.0, 2.75)).unwrap().coords(), (0.0, 0.75));
    }

    #[test]
    fn wrap_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let v = (rng.random::<f64>() * 20.0 - 10.0, rng.random::<f64>() * 20.0 - 10.0);
            let once = wrap(v).unwrap();
            let twice = wrap(once.coords()).unwrap();
            assert_eq!(once, twice);
            assert!(once.x1() >= 0.0 && once.x1() < 1.0);
            assert!(once.x2() >= 0.0 && once.x2() < 1.0);
        }
    }

    #[test]
    fn wrap_rejects_non_finite() {
        assert!(wrap((f64::NAN, 0.0)).is_err());
        assert!(wrap((0.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(torus_distance(pt(0.0, 0.0), pt(0.75, 0.0)), 0.25);
        assert_eq!(torus_distance(pt(0.3, 0.9), pt(0.3, 0.9)), 0.0);
        // minimizing shift by hand: (0.9,0.9)-(0.1,0.1) = (0.8,0.8) -> (-0.2,-0.2)
        let d = torus_distance(pt(0.1, 0.1), pt(0.9, 0.9));
        assert!((d - 0.08f64.sqrt()).abs() < 1e-15, "d = {d}");
    }

    #[test]
    fn displacement_examples() {
        assert_eq!(torus_displacement(pt(0.0, 0.0), pt(0.75, 0.0)), (-0.25, 0.0));
        assert_eq!(torus_displacement(pt(0.4, 0.6), pt(0.4, 0.6)), (0.0, 0.0));
        let (u, v) = torus_displacement(pt(0.9, 0.1), pt(0.1, 0.9));
        assert!((u - 0.2).abs() < 1e-15 && (v + 0.2).abs() < 1e-15);
    }

    #[test]
    fn displacement_lives_in_half_open_square() {
        // tie at half-integer separation resolves to -1/2
        assert_eq!(torus_displacement(pt(0.0, 0.0), pt(0.5, 0.5)), (-0.5, -0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5000 {
            let a = pt(rng.random(), rng.random());
            let b = pt(rng.random(), rng.random());
            let (u, v) = torus_displacement(a, b);
            assert!((-0.5..0.5).contains(&u) && (-0.5..0.5).contains(&v));
        }
    }

    #[test]
    fn distance_equals_displacement_norm_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let a = pt(rng.random(), rng.random());
            let b = pt(rng.random(), rng.random());
            let (u, v) = torus_displacement(a, b);
            assert_eq!(torus_distance(a, b), (u * u + v * v).sqrt());
        }
    }

    #[test]
    fn distance_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let half_diag = 0.5f64.sqrt();
        for _ in 0..10_000 {
            let a = pt(rng.random(), rng.random());
            let b = pt(rng.random(), rng.random());
            assert_eq!(torus_distance(a, b), torus_distance(b, a));
            assert!(torus_distance(a, b) <= half_diag + 1e-15);
        }
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let a = pt(rng.random(), rng.random());
            let b = pt(rng.random(), rng.random());
            let c = pt(rng.random(), rng.random());
            let dab = torus_distance(a, b);
            let dbc = torus_distance(b, c);
            let dac = torus_distance(a, c);
            assert!(dac <= dab + dbc, "violation: {dac} > {dab} + {dbc}");
        }
    }

    #[test]
    fn distance_is_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..2000 {
            let a = pt(rng.random(), rng.random());
            let b = pt(rng.random(), rng.random());
            let z = (rng.random::<f64>(), rng.random::<f64>());
            let at = a.translate(z.0, z.1).unwrap();
            let bt = b.translate(z.0, z.1).unwrap();
            let d0 = torus_distance(a, b);
            let d1 = torus_distance(at, bt);
            assert!((d0 - d1).abs() <= 1e-15, "{d0} vs {d1}");
        }
    }
}
