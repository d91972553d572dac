//! Transfer-operator numerics: the bin-transition (Ulam) approximation of
//! the transfer operator, its twisted versions, the invariant density, the
//! asymptotic variance, an aperiodicity scan, and direct local-limit
//! profiles computed on preimage trees.
//!
//! The bin matrix is assembled from exact rational interval intersections
//! of the map's branches, so untwisted row sums are exactly one before the
//! final conversion to `f64`.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

use crate::automaton::Automaton;
use crate::beta::{Beta, BetaError};
use crate::skew::{Group, Observable};
use crate::word::Word;

#[derive(Debug, thiserror::Error)]
pub enum SpectralError {
    #[error("power iteration did not converge: residual {residual} after {iterations} iterations")]
    NoConvergence { iterations: u64, residual: f64 },
    #[error(transparent)]
    Beta(#[from] BetaError),
    #[error("discrete profile needs an integer observable constant on branch cells")]
    NotCellInteger,
}

/// Iteration cap for the eigen-solvers.
const POWER_ITERATION_CAP: u64 = 100_000;

/// Sparse row-stochastic bin-transition matrix, optionally twisted by a
/// character `exp(i t phi)` evaluated at bin midpoints.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    bins: usize,
    rows: Vec<Vec<(u32, f64)>>,
    twist: Option<Twist>,
}

#[derive(Debug, Clone)]
struct Twist {
    t: f64,
    phases: Vec<Complex64>,
}

/// Invariant density estimate on bin midpoints, normalized to mean one.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub bins: usize,
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: u64,
}

impl DensityEstimate {
    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Mean absolute difference against another bin profile.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        assert_eq!(self.values.len(), other.len());
        self.values
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / self.bins as f64
    }
}

/// Asymptotic-variance estimate.
#[derive(Debug, Clone)]
pub struct SigmaEstimate {
    pub sigma2: f64,
    pub method: SigmaMethod,
    pub n_used: u64,
    pub trials: u64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMethod {
    MonteCarlo,
    Spectral,
}

impl std::fmt::Display for SigmaMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SigmaMethod::MonteCarlo => write!(f, "monte-carlo"),
            SigmaMethod::Spectral => write!(f, "spectral"),
        }
    }
}

/// Builds the bin-transition operator at the given resolution; `twist`
/// multiplies row `i` by `exp(i t phi(mid_i))`.
pub fn build_ulam(beta: &Beta, bins: usize, twist: Option<(f64, &Observable)>) -> UlamOperator {
    assert!(bins >= 2, "need at least two bins");
    let b_rat = BigRational::from_integer((bins as u64).into());
    let one = BigRational::from_integer(1.into());
    let beta_rat = beta.value().clone();
    let digit_max = beta.digit_max();

    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(bins);
    for i in 0..bins {
        let lo_i = BigRational::from_integer((i as u64).into()) / &b_rat;
        let hi_i = BigRational::from_integer((i as u64 + 1).into()) / &b_rat;
        let mut row: Vec<(u32, BigRational)> = Vec::with_capacity(8);
        for d in 0..=digit_max {
            let dom_lo = BigRational::from_integer(d.into()) / &beta_rat;
            let dom_hi = (BigRational::from_integer((d + 1).into()) / &beta_rat).min(one.clone());
            let a = (&lo_i).max(&dom_lo).clone();
            let b = (&hi_i).min(&dom_hi).clone();
            if a >= b {
                continue;
            }
            // The branch maps [a,b) affinely onto [beta a - d, beta b - d).
            let img_lo = &a * &beta_rat - BigRational::from_integer(d.into());
            let img_hi = &b * &beta_rat - BigRational::from_integer(d.into());
            let mut j = (&img_lo * &b_rat).floor().to_integer();
            loop {
                let bin_lo = BigRational::from_integer(j.clone()) / &b_rat;
                if bin_lo >= img_hi {
                    break;
                }
                let bin_hi = BigRational::from_integer(&j + 1) / &b_rat;
                let overlap_lo = (&img_lo).max(&bin_lo).clone();
                let overlap_hi = (&img_hi).min(&bin_hi).clone();
                if overlap_lo < overlap_hi {
                    // Relative measure within bin i: lambda(overlap)/lambda(bin_i)
                    // after pulling back through the affine branch.
                    let weight = (overlap_hi - overlap_lo) / &beta_rat * &b_rat;
                    let idx = num_traits::ToPrimitive::to_u32(&j).expect("bin index");
                    match row.iter_mut().find(|(jj, _)| *jj == idx) {
                        Some((_, w)) => *w += weight,
                        None => row.push((idx, weight)),
                    }
                }
                j += 1;
            }
        }
        row.sort_by_key(|(j, _)| *j);
        rows.push(
            row.into_iter()
                .map(|(j, w)| (j, crate::ratio::ratio_to_f64(&w)))
                .collect(),
        );
    }

    let twist = twist.map(|(t, obs)| {
        let phases = (0..bins)
            .map(|i| {
                let mid = (i as f64 + 0.5) / bins as f64;
                let phi = obs.value_f64_at(mid);
                Complex64::from_polar(1.0, t * phi)
            })
            .collect();
        Twist { t, phases }
    });

    UlamOperator { bins, rows, twist }
}

impl UlamOperator {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn twist_t(&self) -> Option<f64> {
        self.twist.as_ref().map(|t| t.t)
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|(_, w)| w).sum()
    }

    /// Pushforward of a density profile (values on bin midpoints).
    pub fn apply_to_density(&self, h: &[f64]) -> Vec<f64> {
        assert_eq!(h.len(), self.bins);
        let mut out = vec![0.0f64; self.bins];
        for (i, row) in self.rows.iter().enumerate() {
            let hi = h[i];
            if hi == 0.0 {
                continue;
            }
            for &(j, w) in row {
                out[j as usize] += hi * w;
            }
        }
        out
    }

    fn apply_left_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::zero(); self.bins];
        match &self.twist {
            None => {
                for (i, row) in self.rows.iter().enumerate() {
                    let vi = v[i];
                    for &(j, w) in row {
                        out[j as usize] += vi * w;
                    }
                }
            }
            Some(twist) => {
                for (i, row) in self.rows.iter().enumerate() {
                    let vi = v[i] * twist.phases[i];
                    for &(j, w) in row {
                        out[j as usize] += vi * w;
                    }
                }
            }
        }
        out
    }

    /// Modulus of the leading eigenvalue, by two-column subspace iteration
    /// with a 2x2 Rayleigh-Ritz projection. The two-dimensional block keeps
    /// the iteration convergent when the dominant eigenvalues form a
    /// complex-conjugate pair (which happens for real signed twists).
    pub fn leading_modulus(&self, tol: f64) -> Result<f64, SpectralError> {
        let n = self.bins;
        let mut q1: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); n];
        let mut q2: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.3 * (i % 3) as f64))
            .collect();
        orthonormalize_pair(&mut q1, &mut q2);
        let mut prev = f64::NAN;
        for it in 0..POWER_ITERATION_CAP {
            let a1 = self.apply_left_complex(&q1);
            let a2 = self.apply_left_complex(&q2);
            let h = [
                [dot(&q1, &a1), dot(&q1, &a2)],
                [dot(&q2, &a1), dot(&q2, &a2)],
            ];
            let est = eig2_max_modulus(&h);
            let n1 = l2_norm(&a1);
            if n1 < 1e-300 {
                return Ok(0.0);
            }
            q1 = a1.into_iter().map(|c| c / n1).collect();
            q2 = a2;
            orthonormalize_against(&q1, &mut q2);
            if it > 8 && (est - prev).abs() < tol {
                return Ok(est);
            }
            prev = est;
        }
        Err(SpectralError::NoConvergence {
            iterations: POWER_ITERATION_CAP,
            residual: prev,
        })
    }

    /// Stationary density of the untwisted operator, by power iteration.
    pub fn invariant_density(&self, tol: f64) -> Result<DensityEstimate, SpectralError> {
        assert!(self.twist.is_none(), "density needs the untwisted operator");
        let mut v = vec![1.0f64; self.bins];
        let mut residual = f64::INFINITY;
        for it in 0..POWER_ITERATION_CAP {
            let w = self.apply_to_density(&v);
            residual = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let mean: f64 = w.iter().sum::<f64>() / self.bins as f64;
            v = w.into_iter().map(|x| x / mean).collect();
            if residual < tol {
                return Ok(DensityEstimate {
                    bins: self.bins,
                    values: v,
                    residual,
                    iterations: it + 1,
                });
            }
        }
        Err(SpectralError::NoConvergence {
            iterations: POWER_ITERATION_CAP,
            residual,
        })
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn orthonormalize_pair(q1: &mut [Complex64], q2: &mut Vec<Complex64>) {
    let n1 = l2_norm(q1);
    for c in q1.iter_mut() {
        *c /= n1;
    }
    orthonormalize_against(q1, q2);
}

/// Makes `q2` unit length and orthogonal to the unit vector `q1`,
/// reseeding deterministically if the pair degenerates.
fn orthonormalize_against(q1: &[Complex64], q2: &mut Vec<Complex64>) {
    let proj = dot(q1, q2);
    for (c, &u) in q2.iter_mut().zip(q1) {
        *c -= proj * u;
    }
    let mut n2 = l2_norm(q2);
    if n2 < 1e-13 {
        for (i, c) in q2.iter_mut().enumerate() {
            *c = Complex64::new(((i * 7919) % 23) as f64 / 23.0 - 0.5, 0.0);
        }
        let proj = dot(q1, q2);
        for (c, &u) in q2.iter_mut().zip(q1) {
            *c -= proj * u;
        }
        n2 = l2_norm(q2);
    }
    for c in q2.iter_mut() {
        *c /= n2;
    }
}

/// Largest eigenvalue modulus of a complex 2x2 matrix.
fn eig2_max_modulus(h: &[[Complex64; 2]; 2]) -> f64 {
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    l1.norm().max(l2.norm())
}

/// Pointwise invariant density via the normalized indicator series
/// `h(x) = (1/F) sum_m beta^{-m} 1_{[0, T^m 1)}(x)`, truncated at `terms`.
pub fn parry_density(beta: &Beta, x: f64, terms: usize) -> f64 {
    let terms = terms.min(beta.one_depth());
    let betaf = beta.value_f64();
    let mut norm = 0.0f64;
    let mut acc = 0.0f64;
    for m in 0..terms {
        let t = beta.one_tail_f64(m).unwrap_or(0.0);
        let w = betaf.powi(-(m as i32));
        norm += w * t;
        if x < t {
            acc += w;
        }
    }
    acc / norm
}

/// Bin averages of the series density, the independent check for the
/// operator fixed point.
pub fn parry_density_bins(beta: &Beta, bins: usize, terms: usize) -> Vec<f64> {
    let terms = terms.min(beta.one_depth());
    let betaf = beta.value_f64();
    let mut norm = 0.0f64;
    let mut acc = vec![0.0f64; bins];
    for m in 0..terms {
        let t = beta.one_tail_f64(m).unwrap_or(0.0);
        let w = betaf.powi(-(m as i32));
        norm += w * t;
        for (i, slot) in acc.iter_mut().enumerate() {
            let lo = i as f64 / bins as f64;
            let hi = (i + 1) as f64 / bins as f64;
            let overlap = (hi.min(t) - lo).max(0.0);
            *slot += w * overlap * bins as f64;
        }
    }
    for slot in &mut acc {
        *slot /= norm;
    }
    acc
}

/// Asymptotic variance of the centered Birkhoff sums.
pub fn sigma_squared(
    beta: &Beta,
    obs: &Observable,
    method: SigmaMethodSpec,
) -> Result<SigmaEstimate, SpectralError> {
    match method {
        SigmaMethodSpec::MonteCarlo { n, trials, seed } => {
            let mut sums = Vec::with_capacity(trials as usize);
            let h_max = 1.0 / (1.0 - 1.0 / beta.value_f64());
            for trial in 0..trials {
                let mut rng = crate::experiments::rng_stream(seed, trial);
                let word = sample_invariant_word(beta, n as usize, h_max, &mut rng)?;
                sums.push(crate::skew::birkhoff_forward_f64(beta, obs, &word, n as usize));
            }
            let var = crate::stats::variance(&sums);
            let sigma2 = var / n as f64;
            Ok(SigmaEstimate {
                sigma2,
                method: SigmaMethod::MonteCarlo,
                n_used: n,
                trials,
                stderr: sigma2 * (2.0 / trials as f64).sqrt(),
            })
        }
        SigmaMethodSpec::Spectral { bins, dt } => {
            let log_mod = |t: f64| -> Result<f64, SpectralError> {
                let op = build_ulam(beta, bins, Some((t, obs)));
                Ok(op.leading_modulus(1e-12)?.ln())
            };
            let l0 = log_mod(0.0)?;
            let second = |d: f64| -> Result<f64, SpectralError> {
                Ok(-(log_mod(d)? - 2.0 * l0 + log_mod(-d)?) / (d * d))
            };
            let coarse = second(dt)?;
            let fine = second(dt / 2.0)?;
            // One Richardson step against the O(dt^2) truncation error.
            let sigma2 = (4.0 * fine - coarse) / 3.0;
            Ok(SigmaEstimate {
                sigma2,
                method: SigmaMethod::Spectral,
                n_used: bins as u64,
                trials: 0,
                stderr: (fine - coarse).abs() / 3.0,
            })
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SigmaMethodSpec {
    MonteCarlo { n: u64, trials: u64, seed: u64 },
    Spectral { bins: usize, dt: f64 },
}

/// Rejection sampler for the invariant measure: uniform digit words
/// reweighted by the density.
pub fn sample_invariant_word<R: Rng + ?Sized>(
    beta: &Beta,
    depth: usize,
    h_max: f64,
    rng: &mut R,
) -> Result<Word, BetaError> {
    loop {
        let word = beta.sample_uniform_markov(depth, rng)?;
        let x = beta.value_f64_of_slice(&word.digits()[..depth.min(48)]);
        let h = parry_density(beta, x, 64);
        if rng.gen::<f64>() * h_max <= h {
            return Ok(word);
        }
    }
}

/// Scan of the twisted leading eigenvalue over a character grid.
#[derive(Debug, Clone)]
pub struct AperiodicityReport {
    pub points: Vec<(f64, f64)>,
    pub max_modulus: f64,
    pub argmax_t: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Margin demanded of the scan: the twisted spectrum must stay below
/// `1 - APERIODICITY_MARGIN` away from `t = 0`.
pub const APERIODICITY_MARGIN: f64 = 1e-3;

pub fn aperiodicity_scan(
    beta: &Beta,
    obs: &Observable,
    t_grid: &[f64],
    bins: usize,
) -> Result<AperiodicityReport, SpectralError> {
    let mut points = Vec::with_capacity(t_grid.len());
    let mut max_modulus = 0.0f64;
    let mut argmax_t = 0.0f64;
    for &t in t_grid {
        let op = build_ulam(beta, bins, Some((t, obs)));
        let modulus = op.leading_modulus(1e-11)?;
        if modulus > max_modulus {
            max_modulus = modulus;
            argmax_t = t;
        }
        points.push((t, modulus));
    }
    let margin = 1.0 - max_modulus;
    Ok(AperiodicityReport {
        points,
        max_modulus,
        argmax_t,
        margin,
        pass: margin > APERIODICITY_MARGIN,
    })
}

/// Default scan grid: for the integer group, characters over `(0, pi]`.
pub fn default_t_grid(group: Group, points: usize) -> Vec<f64> {
    let hi = match group {
        Group::Integers => std::f64::consts::PI,
        Group::Reals => 8.0,
    };
    (1..=points).map(|i| hi * i as f64 / points as f64).collect()
}

/// One point of a local-limit profile.
#[derive(Debug, Clone)]
pub struct LltPoint {
    /// The integer level `k` of the sum.
    pub target: i64,
    /// Centered and scaled coordinate `(k - n mean) / (sigma sqrt n)`.
    pub t: f64,
    /// The conjugated operator mass `T^n`-value at the level set.
    pub raw: f64,
    /// `sigma sqrt(n)` times `raw`, to compare against the Gaussian density.
    pub scaled: f64,
    /// The Gaussian reference `exp(-t^2/2)/sqrt(2 pi)`.
    pub gauss: f64,
}

#[derive(Debug, Clone)]
pub struct LltProfile {
    pub n: usize,
    pub points: Vec<LltPoint>,
    /// Total operator mass over all levels; should be close to one.
    pub mass: f64,
    pub leaves: u64,
}

/// Direct discrete local-limit profile: enumerates `T^{-n}(x)` through the
/// admissibility automaton, weights each preimage `z` by
/// `h(z) / (beta^n h(x))`, and buckets by the exact integer Birkhoff level.
pub fn llt_profile(
    beta: &Beta,
    obs: &Observable,
    x: &Word,
    n: usize,
    targets: Option<&[i64]>,
    sigma2: f64,
) -> Result<LltProfile, SpectralError> {
    let cell_values = obs.cell_int_values().ok_or(SpectralError::NotCellInteger)?;
    let automaton = Automaton::new(beta);
    let min_v = *cell_values.iter().min().unwrap();
    let max_v = *cell_values.iter().max().unwrap();
    let lo = min_v * n as i64;
    let hi = max_v * n as i64;
    let mut buckets = vec![0.0f64; (hi - lo + 1) as usize];

    let betaf = beta.value_f64();
    let x_value = beta.value_f64_of(x);
    let h_x = parry_density(beta, x_value, 64);
    let scale = betaf.powi(-(n as i32)) / h_x;
    let tail_scaled = x_value * betaf.powi(-(n as i32));

    let leaves = automaton.for_each_preimage(n, x, |prefix| {
        let mut level = 0i64;
        let mut v = 0.0f64;
        // value(z) = value(prefix) + beta^{-n} value(x).
        for &d in prefix.iter().rev() {
            v = (v + d as f64) / betaf;
            level += cell_values[d as usize];
        }
        let z_value = v + tail_scaled;
        let h_z = parry_density(beta, z_value, 64);
        buckets[(level - lo) as usize] += h_z * scale;
    })?;

    let sigma = sigma2.sqrt();
    let mean = obs.mean_m();
    let mass: f64 = buckets.iter().sum();
    let mut points = Vec::new();
    for (idx, &raw) in buckets.iter().enumerate() {
        let k = lo + idx as i64;
        if let Some(wanted) = targets {
            if !wanted.contains(&k) {
                continue;
            }
        } else if raw == 0.0 {
            continue;
        }
        let t = (k as f64 - n as f64 * mean) / (sigma * (n as f64).sqrt());
        let scaled = sigma * (n as f64).sqrt() * raw;
        points.push(LltPoint {
            target: k,
            t,
            raw,
            scaled,
            gauss: (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        });
    }
    Ok(LltProfile {
        n,
        points,
        mass,
        leaves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::parse_ratio;
    use crate::skew::Observable;

    fn beta52() -> Beta {
        Beta::with_depth(parse_ratio("5/2").unwrap(), 256).unwrap()
    }

    #[test]
    fn row_sums_are_one() {
        let b = beta52();
        for bins in [4usize, 64, 257] {
            let op = build_ulam(&b, bins, None);
            for i in 0..bins {
                assert!((op.row_sum(i) - 1.0).abs() < 1e-12, "bin {i} of {bins}");
            }
        }
    }

    #[test]
    fn leading_eigenvalue_is_one_untwisted() {
        let b = beta52();
        let op = build_ulam(&b, 1024, None);
        let lambda = op.leading_modulus(1e-12).unwrap();
        assert!((lambda - 1.0).abs() < 1e-8, "lambda = {lambda}");
    }

    #[test]
    fn zero_twist_reduces_to_untwisted() {
        let b = beta52();
        let obs = Observable::first_digit(&b);
        let plain = build_ulam(&b, 128, None);
        let twisted = build_ulam(&b, 128, Some((0.0, &obs)));
        let a = plain.leading_modulus(1e-12).unwrap();
        let c = twisted.leading_modulus(1e-12).unwrap();
        assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn density_matches_series_and_bounds() {
        let b = beta52();
        let op = build_ulam(&b, 1024, None);
        let dens = op.invariant_density(1e-13).unwrap();
        // Renyi bounds 1 - 1/beta <= h <= 1/(1 - 1/beta).
        assert!(dens.min() >= 0.6 - 0.02, "min {}", dens.min());
        assert!(dens.max() <= 1.0 / 0.6 + 0.02, "max {}", dens.max());
        let oracle = parry_density_bins(&b, 1024, 64);
        let l1 = dens.l1_distance(&oracle);
        assert!(l1 < 0.01, "l1 = {l1}");
        // Normalization: mean one.
        let mean: f64 = dens.values.iter().sum::<f64>() / dens.bins as f64;
        assert!((mean - 1.0).abs() < 1e-10);
    }

    #[test]
    fn density_is_flat_for_integer_base() {
        let b = Beta::with_depth(parse_ratio("2").unwrap(), 64).unwrap();
        let op = build_ulam(&b, 256, None);
        let dens = op.invariant_density(1e-13).unwrap();
        for v in &dens.values {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn pushforward_fixes_the_series_density() {
        // L h = beta h, expressed on bins: the density pushforward leaves
        // the series density unchanged up to bin resolution.
        let b = beta52();
        let op = build_ulam(&b, 2048, None);
        let h = parry_density_bins(&b, 2048, 64);
        let pushed = op.apply_to_density(&h);
        let sup = pushed
            .iter()
            .zip(&h)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup < 0.02, "sup deviation {sup}");
    }

    #[test]
    fn sigma_of_constant_observable_is_zero() {
        let b = beta52();
        let c = Observable::constant(&b, Group::Integers, parse_ratio("3").unwrap());
        let est = sigma_squared(
            &b,
            &c,
            SigmaMethodSpec::MonteCarlo {
                n: 500,
                trials: 200,
                seed: 5,
            },
        )
        .unwrap();
        assert!(est.sigma2.abs() < 1e-3, "sigma2 = {}", est.sigma2);
        let est = sigma_squared(&b, &c, SigmaMethodSpec::Spectral { bins: 512, dt: 1e-3 }).unwrap();
        assert!(est.sigma2.abs() < 1e-6, "sigma2 = {}", est.sigma2);
    }

    #[test]
    fn sigma_of_coboundary_shrinks_with_n() {
        // phi = g(Tx) - g(x) for a step g has vanishing asymptotic variance.
        let b = beta52();
        let g = Observable::first_digit(&b);
        let mut rng = crate::experiments::rng_stream(6, 0);
        let mut var_small = Vec::new();
        let mut var_large = Vec::new();
        for (n, out) in [(100usize, &mut var_small), (3200usize, &mut var_large)] {
            for _ in 0..400 {
                let w = b.sample_uniform_markov(n + 1, &mut rng).unwrap();
                // Coboundary sum telescopes: phi_n = g(T^n x) - g(x).
                let head = crate::skew::birkhoff_forward_f64(&b, &g, &w.shift(n), 1);
                let tail = crate::skew::birkhoff_forward_f64(&b, &g, &w, 1);
                out.push(head - tail);
            }
        }
        let v_small = crate::stats::variance(&var_small) / 100.0;
        let v_large = crate::stats::variance(&var_large) / 3200.0;
        assert!(v_large < v_small / 4.0, "{v_small} -> {v_large}");
    }

    #[test]
    fn sigma_methods_agree_for_first_digit() {
        let b = beta52();
        let obs = Observable::first_digit(&b);
        let spec = sigma_squared(&b, &obs, SigmaMethodSpec::Spectral { bins: 2048, dt: 1e-3 })
            .unwrap();
        let mc = sigma_squared(
            &b,
            &obs,
            SigmaMethodSpec::MonteCarlo {
                n: 2000,
                trials: 3000,
                seed: 7,
            },
        )
        .unwrap();
        assert!(spec.sigma2 > 0.0 && mc.sigma2 > 0.0);
        let rel = (spec.sigma2 - mc.sigma2).abs() / spec.sigma2;
        assert!(rel < 0.05, "spectral {} vs mc {}", spec.sigma2, mc.sigma2);
    }

    #[test]
    fn aperiodicity_scan_flags_degenerate_observables() {
        let b = beta52();
        let zero = Observable::constant(&b, Group::Integers, parse_ratio("0").unwrap());
        let grid = default_t_grid(Group::Integers, 16);
        let report = aperiodicity_scan(&b, &zero, &grid, 256).unwrap();
        assert!(!report.pass);
        assert!(report.max_modulus > 1.0 - 1e-9);

        // Integer constant c = 2: the character at t = pi sees exp(2 pi i) = 1,
        // so that grid point reports full modulus and the scan fails.
        let two = Observable::constant(&b, Group::Integers, parse_ratio("2").unwrap());
        let report = aperiodicity_scan(&b, &two, &grid, 256).unwrap();
        assert!(!report.pass);
        let at_pi = report
            .points
            .iter()
            .find(|(t, _)| (*t - std::f64::consts::PI).abs() < 1e-12)
            .expect("grid covers pi");
        assert!(at_pi.1 > 1.0 - 1e-9, "modulus at pi = {}", at_pi.1);
    }

    #[test]
    fn aperiodicity_scan_passes_for_first_digit() {
        let b = beta52();
        let obs = Observable::first_digit(&b);
        let grid = default_t_grid(Group::Integers, 32);
        let report = aperiodicity_scan(&b, &obs, &grid, 512).unwrap();
        assert!(report.pass, "max modulus {}", report.max_modulus);
    }

    #[test]
    fn llt_profile_mass_and_center() {
        let b = beta52();
        let obs = Observable::first_digit(&b);
        let sigma2 = sigma_squared(&b, &obs, SigmaMethodSpec::Spectral { bins: 2048, dt: 1e-3 })
            .unwrap()
            .sigma2;
        let x = {
            let (w, _) = b.expand(&parse_ratio("1/3").unwrap(), 20).unwrap();
            w
        };
        let profile = llt_profile(&b, &obs, &x, 12, None, sigma2).unwrap();
        assert!((profile.mass - 1.0).abs() < 0.02, "mass {}", profile.mass);
        // The scaled profile near t = 0 approaches the Gaussian peak.
        let peak = profile
            .points
            .iter()
            .min_by(|a, b| a.t.abs().total_cmp(&b.t.abs()))
            .unwrap();
        let target = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!(
            (peak.scaled / target - 1.0).abs() < 0.25,
            "peak {} vs {target}",
            peak.scaled
        );
    }
}
