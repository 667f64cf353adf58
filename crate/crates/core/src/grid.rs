//! Periodic scalar fields on a uniform N×N grid with spectral and
//! finite-difference calculus.
//!
//! Node-sampling convention: entry (i, j) is the field value at the point
//! (i/N, j/N), so spectral differentiation is exact for resolved
//! trigonometric polynomials. Integrals against the unit-area Lebesgue
//! measure are plain node means (cell area 1/N²).
//!
//! Spectral coefficients follow the mean-normalized convention
//! f(x) = Σ_k f̂(k) e^{2πi k·x}; the constant field 1 has a single unit
//! coefficient at k = (0,0).

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::parallel::*;

/// Finite-difference / spectral scheme selector for gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    /// Fourier multiplier i·2πk, exact for resolved modes (Nyquist row
    /// annihilated to keep real fields real).
    Spectral,
    /// Second-order centered periodic differences with step 1/N.
    Centered2,
}

/// Real scalar field sampled at the N² nodes (i/N, j/N), row-major in i.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    values: Vec<f64>,
}

/// Discrete Fourier coefficients of a real field, FFT bin layout:
/// bin m holds frequency k = m for m < N/2 and k = m − N otherwise.
#[derive(Debug, Clone)]
pub struct SpectralField {
    n: usize,
    coeffs: Vec<Complex64>,
}

fn check_resolution(n: usize) -> Result<()> {
    if n >= 8 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::BadResolution(n))
    }
}

impl GridField {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        check_resolution(n)?;
        if values.len() != n * n {
            return Err(Error::Parse(format!(
                "expected {} values for resolution {n}, got {}",
                n * n,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField(bad));
        }
        Ok(Self { n, values })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_values(n, vec![c; n * n])
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::constant(n, 0.0)
    }

    /// Sample f(x1, x2) at the grid nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_resolution(n)?;
        let h = 1.0 / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x1 = i as f64 * h;
            for j in 0..n {
                values.push(f(x1, j as f64 * h));
            }
        }
        Self::from_values(n, values)
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// In-place map; the caller guarantees finiteness of the image.
    pub(crate) fn map_values(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.values {
            *v = f(*v);
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// self + s·other.
    pub fn add_scaled(&self, other: &GridField, s: f64) -> Result<GridField> {
        if self.n != other.n {
            return Err(Error::GridMismatch(self.n, other.n));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + s * b)
            .collect();
        GridField::from_values(self.n, values)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, s: f64) -> GridField {
        let values = self.values.iter().map(|v| v * s).collect();
        GridField { n: self.n, values }
    }

    pub fn add_constant(&self, c: f64) -> GridField {
        let values = self.values.iter().map(|v| v + c).collect();
        GridField { n: self.n, values }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// ‖f − c‖∞ over the nodes.
    pub fn sup_distance_to(&self, c: f64) -> f64 {
        self.values
            .iter()
            .map(|v| (v - c).abs())
            .fold(0.0, f64::max)
    }

    /// L² norm, (∫ f²)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        (pairwise_sum(&sq) / (self.n * self.n) as f64).sqrt()
    }

    /// Lᵖ norm, (∫ |f|^p)^{1/p}.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let pw: Vec<f64> = self.values.iter().map(|v| v.abs().powf(p)).collect();
        (pairwise_sum(&pw) / (self.n * self.n) as f64).powf(1.0 / p)
    }

    /// Subtract the mean, making the field exactly mean-zero up to rounding.
    pub fn project_mean_zero(&self) -> GridField {
        self.add_constant(-integrate(self))
    }

    /// Serialize as CSV: one header line with N, then N row-major lines of
    /// N comma-separated values at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.n)?;
        for row in self.values.chunks(self.n) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))??;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad resolution header: {e}")))?;
        let mut values = Vec::with_capacity(n * n);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for tok in line.split(',') {
                let v: f64 = tok
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad field value {tok:?}: {e}")))?;
                values.push(v);
            }
        }
        GridField::from_values(n, values)
    }
}

impl SpectralField {
    pub fn resolution(&self) -> usize {
        self.n
    }

    /// Coefficient at integer frequency k ∈ {−N/2, …, N/2−1}².
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.n as i64;
        let m1 = k1.rem_euclid(n) as usize;
        let m2 = k2.rem_euclid(n) as usize;
        self.coeffs[m1 * self.n + m2]
    }

    pub(crate) fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub(crate) fn from_coeffs(n: usize, coeffs: Vec<Complex64>) -> Self {
        Self { n, coeffs }
    }

    /// Integer frequency of FFT bin m.
    pub fn bin_to_freq(n: usize, m: usize) -> i64 {
        if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    /// Apply a real multiplier g(k1, k2) to every coefficient.
    pub(crate) fn apply_multiplier(&mut self, g: impl Fn(i64, i64) -> f64) {
        let n = self.n;
        for m1 in 0..n {
            let k1 = Self::bin_to_freq(n, m1);
            for m2 in 0..n {
                let k2 = Self::bin_to_freq(n, m2);
                self.coeffs[m1 * n + m2] *= g(k1, k2);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// FFT plumbing
// ---------------------------------------------------------------------------

type PlanKey = (usize, bool);

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().unwrap();
    guard
        .entry((n, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let dir = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            planner.plan_fft(n, dir)
        })
        .clone()
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized 2D FFT in place (rows, transpose, rows, transpose).
fn fft2(buf: &mut [Complex64], n: usize, forward: bool) {
    let fft = plan(n, forward);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for _ in 0..2 {
        for row in buf.chunks_mut(n) {
            fft.process_with_scratch(row, &mut scratch);
        }
        transpose(buf, n);
    }
}

/// Forward transform with the mean-normalized convention (divide by N²).
pub fn to_spectral(f: &GridField) -> SpectralField {
    let n = f.n;
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, n, true);
    let scale = 1.0 / (n * n) as f64;
    for c in &mut buf {
        *c *= scale;
    }
    SpectralField { n, coeffs: buf }
}

/// Inverse of [`to_spectral`]; imaginary parts (rounding noise for Hermitian
/// inputs) are discarded.
pub fn from_spectral(sf: &SpectralField) -> GridField {
    let n = sf.n;
    let mut buf = sf.coeffs.clone();
    fft2(&mut buf, n, false);
    GridField {
        n,
        values: buf.iter().map(|c| c.re).collect(),
    }
}

// ---------------------------------------------------------------------------
// Calculus
// ---------------------------------------------------------------------------

/// ∫ f dm over the unit-area torus: the node mean.
pub fn integrate(f: &GridField) -> f64 {
    pairwise_sum(&f.values) / (f.n * f.n) as f64
}

/// L² pairing ∫ f·g dm.
pub fn inner_product(f: &GridField, g: &GridField) -> Result<f64> {
    if f.n != g.n {
        return Err(Error::GridMismatch(f.n, g.n));
    }
    let prods: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect();
    Ok(pairwise_sum(&prods) / (f.n * f.n) as f64)
}

/// Deterministic pairwise summation (O(log n) rounding growth).
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Both components of ∇f.
pub fn gradient(f: &GridField, scheme: Scheme) -> (GridField, GridField) {
    match scheme {
        Scheme::Spectral => gradient_spectral(f),
        Scheme::Centered2 => gradient_centered2(f),
    }
}

fn gradient_spectral(f: &GridField) -> (GridField, GridField) {
    let sf = to_spectral(f);
    let n = f.n;
    let two_pi = std::f64::consts::TAU;
    let mut g1 = sf.clone();
    let mut g2 = sf;
    let nyquist = -(n as i64) / 2;
    for m1 in 0..n {
        let k1 = SpectralField::bin_to_freq(n, m1);
        for m2 in 0..n {
            let k2 = SpectralField::bin_to_freq(n, m2);
            let idx = m1 * n + m2;
            // i·2πk multiplier; the unpaired Nyquist mode is dropped so the
            // derivative of a real field stays real.
            let f1 = if k1 == nyquist { 0.0 } else { two_pi * k1 as f64 };
            let f2 = if k2 == nyquist { 0.0 } else { two_pi * k2 as f64 };
            g1.coeffs[idx] *= Complex64::new(0.0, f1);
            g2.coeffs[idx] *= Complex64::new(0.0, f2);
        }
    }
    (from_spectral(&g1), from_spectral(&g2))
}

fn gradient_centered2(f: &GridField) -> (GridField, GridField) {
    let n = f.n;
    let half_over_h = 0.5 * n as f64;
    let mut d1 = vec![0.0; n * n];
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        for j in 0..n {
            let jp = (j + 1) % n;
            let jm = (j + n - 1) % n;
            d1[i * n + j] = (f.values[ip * n + j] - f.values[im * n + j]) * half_over_h;
            d2[i * n + j] = (f.values[i * n + jp] - f.values[i * n + jm]) * half_over_h;
        }
    }
    (
        GridField { n, values: d1 },
        GridField { n, values: d2 },
    )
}

/// Spectral divergence of a vector field (adjoint of the spectral gradient,
/// same Nyquist convention, so summation by parts is exact on the grid).
pub fn divergence(f1: &GridField, f2: &GridField) -> Result<GridField> {
    if f1.n != f2.n {
        return Err(Error::GridMismatch(f1.n, f2.n));
    }
    let n = f1.n;
    let two_pi = std::f64::consts::TAU;
    let nyquist = -(n as i64) / 2;
    let mut s1 = to_spectral(f1);
    let s2 = to_spectral(f2);
    for m1 in 0..n {
        let k1 = SpectralField::bin_to_freq(n, m1);
        for m2 in 0..n {
            let k2 = SpectralField::bin_to_freq(n, m2);
            let idx = m1 * n + m2;
            let f1m = if k1 == nyquist { 0.0 } else { two_pi * k1 as f64 };
            let f2m = if k2 == nyquist { 0.0 } else { two_pi * k2 as f64 };
            s1.coeffs[idx] = Complex64::new(0.0, f1m) * s1.coeffs[idx]
                + Complex64::new(0.0, f2m) * s2.coeffs[idx];
        }
    }
    Ok(from_spectral(&s1))
}

/// ∫ |∇f|^q dm with the spectral gradient (the energy of the q-Poisson
/// ansatz). Zero iff f is constant, up to rounding.
pub fn q_energy(f: &GridField, q: f64) -> Result<f64> {
    q_energy_with_scheme(f, q, Scheme::Spectral)
}

/// Same as [`q_energy`] but with a selectable gradient scheme; the
/// centered-difference variant is the right one for fields that are merely
/// Lipschitz (Hopf-Lax outputs after shocks).
pub fn q_energy_with_scheme(f: &GridField, q: f64, scheme: Scheme) -> Result<f64> {
    if q <= 1.0 {
        return Err(Error::BadParameter {
            name: "q",
            bound: "> 1",
            value: q,
        });
    }
    let (g1, g2) = gradient(f, scheme);
    let half_q = 0.5 * q;
    let pw: Vec<f64> = g1
        .values
        .iter()
        .zip(&g2.values)
        .map(|(a, b)| {
            let s = a * a + b * b;
            if q == 2.0 {
                s
            } else {
                s.powf(half_q)
            }
        })
        .collect();
    Ok(pairwise_sum(&pw) / (f.n * f.n) as f64)
}

/// Pointwise |∇f| from the two gradient components.
pub fn gradient_magnitude(f: &GridField, scheme: Scheme) -> GridField {
    let (g1, g2) = gradient(f, scheme);
    let values = g1
        .values
        .iter()
        .zip(&g2.values)
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect();
    GridField { n: f.n, values }
}

/// Parallel map over grid rows writing disjoint output rows; summation
/// inside a row stays sequential, keeping results thread-count independent.
pub(crate) fn fill_rows(n: usize, out: &mut [f64], row_fn: impl Fn(usize, &mut [f64]) + Sync) {
    chunks_mut(out, n).enumerate().for_each(|(i, row)| row_fn(i, row));
}
