//! Reproducible uniform point clouds on the torus.
//!
//! Sub-stream derivation is fixed and documented here: a cloud keyed by
//! (root seed, stream tag, trial index) is drawn from
//! `ChaCha8Rng::seed_from_u64(root_seed)` with
//! `set_stream(2 * trial_index + tag_bit)`, tag_bit = 0 for X and 1 for Y.
//! ChaCha streams are statistically independent, so the X and Y clouds of a
//! trial, and clouds across trials, never share randomness. Points are the
//! next 2n `f64` draws of that stream in order, making regeneration
//! bit-identical regardless of scheduling.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::torus::TorusPoint;

/// Which of the two independent empirical measures a cloud feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StreamTag {
    X,
    Y,
}

impl StreamTag {
    fn bit(self) -> u64 {
        match self {
            StreamTag::X => 0,
            StreamTag::Y => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StreamTag::X => "X",
            StreamTag::Y => "Y",
        }
    }
}

impl std::str::FromStr for StreamTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(StreamTag::X),
            "Y" | "y" => Ok(StreamTag::Y),
            other => Err(Error::Parse(format!("unknown stream tag {other:?}"))),
        }
    }
}

/// n torus points with their provenance key.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<TorusPoint>,
    seed: u64,
    tag: StreamTag,
    trial_index: u64,
}

impl PointCloud {
    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tag(&self) -> StreamTag {
        self.tag
    }

    pub fn trial_index(&self) -> u64 {
        self.trial_index
    }

    /// A new cloud with every point shifted by z (wrapped).
    pub fn translate(&self, z1: f64, z2: f64) -> Result<PointCloud> {
        let points = self
            .points
            .iter()
            .map(|p| p.translate(z1, z2))
            .collect::<Result<Vec<_>>>()?;
        Ok(PointCloud {
            points,
            ..self.clone()
        })
    }

    /// Build a cloud from explicit points (tests, file input).
    pub fn from_points(points: Vec<TorusPoint>, seed: u64, tag: StreamTag, trial_index: u64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(Self {
            points,
            seed,
            tag,
            trial_index,
        })
    }

    /// CSV layout: a metadata header (names, then values), then one
    /// `x1,x2` row per point at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,seed,tag,trial")?;
        writeln!(
            w,
            "{},{},{},{}",
            self.points.len(),
            self.seed,
            self.tag.as_str(),
            self.trial_index
        )?;
        for p in &self.points {
            writeln!(w, "{:.16e},{:.16e}", p.x1(), p.x2())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty cloud file".into()))??;
        if header.trim() != "n,seed,tag,trial" {
            return Err(Error::Parse(format!("bad cloud header {header:?}")));
        }
        let meta = lines
            .next()
            .ok_or_else(|| Error::Parse("missing cloud metadata".into()))??;
        let fields: Vec<&str> = meta.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("bad cloud metadata {meta:?}")));
        }
        let n: usize = fields[0]
            .parse()
            .map_err(|e| Error::Parse(format!("bad n: {e}")))?;
        let seed: u64 = fields[1]
            .parse()
            .map_err(|e| Error::Parse(format!("bad seed: {e}")))?;
        let tag: StreamTag = fields[2].parse()?;
        let trial: u64 = fields[3]
            .parse()
            .map_err(|e| Error::Parse(format!("bad trial: {e}")))?;
        let mut points = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line
                .trim()
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad point row {line:?}")))?;
            let x1: f64 = a
                .parse()
                .map_err(|e| Error::Parse(format!("bad x1: {e}")))?;
            let x2: f64 = b
                .parse()
                .map_err(|e| Error::Parse(format!("bad x2: {e}")))?;
            points.push(TorusPoint::new(x1, x2)?);
        }
        if points.len() != n {
            return Err(Error::Parse(format!(
                "cloud header says {n} points, file has {}",
                points.len()
            )));
        }
        PointCloud::from_points(points, seed, tag, trial)
    }
}

/// Draw n i.i.d. uniform points on T² from the (seed, tag, trial) stream.
pub fn sample_uniform(n: usize, seed: u64, tag: StreamTag, trial_index: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * trial_index + tag.bit());
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x1: f64 = rng.random();
        let x2: f64 = rng.random();
        points.push(TorusPoint::new(x1, x2)?);
    }
    Ok(PointCloud {
        points,
        seed,
        tag,
        trial_index,
    })
}

/// One-sided Kolmogorov-Smirnov distance of a sample against Uniform[0,1).
pub fn ks_statistic_uniform(sample: &mut [f64]) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((x - lo).abs()).max((hi - x).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::torus_distance;

    #[test]
    fn rejects_empty() {
        assert!(sample_uniform(0, 1, StreamTag::X, 0).is_err());
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let a = sample_uniform(257, 42, StreamTag::X, 3).unwrap();
        let b = sample_uniform(257, 42, StreamTag::X, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn streams_differ_between_tags_and_trials() {
        let n = 500;
        let x = sample_uniform(n, 42, StreamTag::X, 0).unwrap();
        let y = sample_uniform(n, 42, StreamTag::Y, 0).unwrap();
        let x1 = sample_uniform(n, 42, StreamTag::X, 1).unwrap();
        // same seed, different stream: no coincident pair anywhere
        for (a, b) in x.points().iter().zip(y.points()) {
            assert!(torus_distance(*a, *b) > 0.0);
        }
        for (a, b) in x.points().iter().zip(x1.points()) {
            assert!(torus_distance(*a, *b) > 0.0);
        }
    }

    #[test]
    fn coordinate_means_match_uniform() {
        // CLT: std of the mean is 1/sqrt(12 n) ~ 0.0029 at n = 1e4;
        // [0.47, 0.53] is a ten-sigma corridor.
        let cloud = sample_uniform(10_000, 987, StreamTag::X, 0).unwrap();
        let m1: f64 = cloud.points().iter().map(|p| p.x1()).sum::<f64>() / 1e4;
        let m2: f64 = cloud.points().iter().map(|p| p.x2()).sum::<f64>() / 1e4;
        assert!((0.47..=0.53).contains(&m1), "mean x1 = {m1}");
        assert!((0.47..=0.53).contains(&m2), "mean x2 = {m2}");
    }

    #[test]
    fn ks_sanity_check_each_coordinate() {
        // critical value at significance 1e-3: sqrt(ln(2/alpha)/2)/sqrt(n).
        // Statistical test, documented flaky-tolerant: rerun once with the
        // next trial index before failing.
        let n = 10_000usize;
        let crit = ((2.0f64 / 1e-3).ln() / 2.0).sqrt() / (n as f64).sqrt();
        let mut attempt = |trial: u64| -> bool {
            let cloud = sample_uniform(n, 20240516, StreamTag::X, trial).unwrap();
            let mut c1: Vec<f64> = cloud.points().iter().map(|p| p.x1()).collect();
            let mut c2: Vec<f64> = cloud.points().iter().map(|p| p.x2()).collect();
            ks_statistic_uniform(&mut c1) <= crit && ks_statistic_uniform(&mut c2) <= crit
        };
        assert!(attempt(0) || attempt(1), "KS check failed twice");
    }

    #[test]
    fn cloud_csv_roundtrip() {
        let cloud = sample_uniform(17, 7, StreamTag::Y, 5).unwrap();
        let mut buf = Vec::new();
        cloud.write_csv(&mut buf).unwrap();
        let back = PointCloud::read_csv(&buf[..]).unwrap();
        assert_eq!(cloud, back);
    }
}
