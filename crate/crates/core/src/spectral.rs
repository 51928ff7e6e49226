//! Scalar spectral quantities: the kernels `K_T(s)`, `L_T(s)` that rebuild
//! `A T^s + B T^{1-s}` from its values at heights 1 and `b`, the choice of
//! `b`, the `λ = s(1 - s)` conversion and the power-law fit of orbit counts.

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("height must exceed 1, got {0}")]
    Height(f64),
    #[error("base point b must differ from 1")]
    BaseIsOne,
    #[error("s = 1/2 is a removable singularity of the kernels")]
    CriticalCenter,
    #[error("kernel denominator vanishes at b = {b}, s = {s}")]
    SingularDenominator { b: f64, s: Complex64 },
    #[error("growth fit needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("growth fit heights must be strictly increasing")]
    Unordered,
    #[error("growth fit heights span {0:.3} decades, need at least 2")]
    NarrowSpan(f64),
    #[error("growth fit needs positive counts")]
    ZeroCount,
    #[error("fitted slope {0} is not a positive exponent")]
    DegenerateSlope(f64),
}

/// `b = exp(log T / ⌈log T⌉)`, so that `b ∈ (1, e]` and `log T / log b`
/// is the integer `⌈log T⌉`.
pub fn choose_b(height: f64) -> Result<f64, SpectralError> {
    if !(height > 1.0) {
        return Err(SpectralError::Height(height));
    }
    let log_t = height.ln();
    Ok((log_t / steps(log_t)).exp())
}

/// `⌈log T⌉`, snapping values within rounding of an integer.
fn steps(log_t: f64) -> f64 {
    let nearest = log_t.round();
    if (log_t - nearest).abs() < 1e-12 && nearest >= 1.0 {
        nearest
    } else {
        log_t.ceil()
    }
}

fn check_kernel_args(b: f64, s: Complex64) -> Result<Complex64, SpectralError> {
    if b == 1.0 {
        return Err(SpectralError::BaseIsOne);
    }
    if s == Complex64::new(0.5, 0.0) {
        return Err(SpectralError::CriticalCenter);
    }
    let one = Complex64::new(1.0, 0.0);
    let denom = Complex64::from(b).powc(one - s) - Complex64::from(b).powc(s);
    if denom.norm() < 1e-300 {
        return Err(SpectralError::SingularDenominator { b, s });
    }
    Ok(denom)
}

/// `K_T(s) = (T^s b^{1-s} - T^{1-s} b^s) / (b^{1-s} - b^s)`.
pub fn kernel_k(height: f64, b: f64, s: Complex64) -> Result<Complex64, SpectralError> {
    let denom = check_kernel_args(b, s)?;
    let one = Complex64::new(1.0, 0.0);
    let (t, b) = (Complex64::from(height), Complex64::from(b));
    Ok((t.powc(s) * b.powc(one - s) - t.powc(one - s) * b.powc(s)) / denom)
}

/// `L_T(s) = (T^{1-s} - T^s) / (b^{1-s} - b^s)`.
pub fn kernel_l(height: f64, b: f64, s: Complex64) -> Result<Complex64, SpectralError> {
    let denom = check_kernel_args(b, s)?;
    let one = Complex64::new(1.0, 0.0);
    let t = Complex64::from(height);
    Ok((t.powc(one - s) - t.powc(s)) / denom)
}

pub fn kernel_k_real(height: f64, b: f64, s: f64) -> Result<f64, SpectralError> {
    kernel_k(height, b, Complex64::new(s, 0.0)).map(|z| z.re)
}

pub fn kernel_l_real(height: f64, b: f64, s: f64) -> Result<f64, SpectralError> {
    kernel_l(height, b, Complex64::new(s, 0.0)).map(|z| z.re)
}

/// `K_T(1/2 + it) = -T^{1/2} sin(t log(T/b)) / sin(t log b)`.
pub fn kernel_k_critical(height: f64, b: f64, t: f64) -> f64 {
    -height.sqrt() * (t * (height / b).ln()).sin() / (t * b.ln()).sin()
}

/// `L_T(1/2 + it) = (T/b)^{1/2} sin(t log T) / sin(t log b)`.
pub fn kernel_l_critical(height: f64, b: f64, t: f64) -> f64 {
    (height / b).sqrt() * (t * height.ln()).sin() / (t * b.ln()).sin()
}

/// `|K_T(s)| <= C T^s` holds with this `C` for real `s ∈ (1/2, 1]`.
pub fn kernel_bound_constant(b: f64, s: f64) -> f64 {
    2.0 / (b.powf(1.0 - s) - b.powf(s)).abs()
}

/// `K_T(s) F_1 + L_T(s) F_b`.
pub fn reconstruct(height: f64, b: f64, s: f64, f_one: f64, f_b: f64) -> Result<f64, SpectralError> {
    Ok(kernel_k_real(height, b, s)? * f_one + kernel_l_real(height, b, s)? * f_b)
}

/// Spectral parameter corresponding to an eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralParameter {
    /// `s ∈ [1/2, 1]` for `λ <= 1/4`.
    Real(f64),
    /// `s = 1/2 + it` with `t > 0` for `λ > 1/4`.
    Critical(f64),
}

impl SpectralParameter {
    pub fn as_complex(&self) -> Complex64 {
        match *self {
            SpectralParameter::Real(s) => Complex64::new(s, 0.0),
            SpectralParameter::Critical(t) => Complex64::new(0.5, t),
        }
    }
}

/// `λ = s(1 - s)`.
pub fn lambda_from_s(s: f64) -> f64 {
    s * (1.0 - s)
}

pub fn s_from_lambda(lambda: f64) -> SpectralParameter {
    if lambda <= 0.25 {
        SpectralParameter::Real(0.5 + (0.25 - lambda).sqrt())
    } else {
        SpectralParameter::Critical((lambda - 0.25).sqrt())
    }
}

/// Bundle of spectral quantities at one height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub s: f64,
    pub lambda: f64,
    pub delta: f64,
    pub theta: f64,
    pub b: f64,
    #[serde(rename = "T")]
    pub height: f64,
}

impl SpectralParams {
    /// Uses `s = δ`, the base eigenvalue `λ0 = δ(1 - δ)` and `b = choose_b(T)`.
    pub fn at_base_eigenvalue(delta: f64, theta: f64, height: f64) -> Result<Self, SpectralError> {
        Ok(SpectralParams { s: delta, lambda: lambda_from_s(delta), delta, theta, b: choose_b(height)?, height })
    }

    /// `log T / log b`, an integer by construction.
    pub fn steps(&self) -> f64 {
        self.height.ln() / self.b.ln()
    }
}

/// Least-squares fit of `log count = δ log T + log c0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub heights: Vec<f64>,
    pub counts: Vec<f64>,
    pub delta_hat: f64,
    pub c0_hat: f64,
    /// Largest absolute residual in log-log space.
    pub residual: f64,
}

pub fn fit_growth(points: &[(f64, f64)]) -> Result<GrowthFit, SpectralError> {
    if points.len() < 4 {
        return Err(SpectralError::TooFewPoints(points.len()));
    }
    if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(SpectralError::Unordered);
    }
    let span = (points[points.len() - 1].0 / points[0].0).log10();
    if span < 2.0 - 1e-9 {
        return Err(SpectralError::NarrowSpan(span));
    }
    if points.iter().any(|&(_, n)| !(n > 0.0)) {
        return Err(SpectralError::ZeroCount);
    }
    let xs: Vec<f64> = points.iter().map(|&(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, n)| n.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(SpectralError::DegenerateSlope(slope));
    }
    let intercept = my - slope * mx;
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - (intercept + slope * x)).abs()).fold(0.0, f64::max);
    Ok(GrowthFit {
        heights: points.iter().map(|p| p.0).collect(),
        counts: points.iter().map(|p| p.1).collect(),
        delta_hat: slope,
        c0_hat: intercept.exp(),
        residual,
    })
}

/// [`fit_growth`] after dropping points in the smallest decade.
pub fn fit_growth_trimmed(points: &[(f64, f64)]) -> Result<GrowthFit, SpectralError> {
    let Some(&(first, _)) = points.first() else {
        return Err(SpectralError::TooFewPoints(0));
    };
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|&(t, _)| t >= 10.0 * first).collect();
    fit_growth(&kept)
}

/// A named spectral gap θ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapPreset {
    pub name: &'static str,
    pub theta: Ratio<i64>,
}

impl GapPreset {
    pub fn theta_f64(&self) -> f64 {
        *self.theta.numer() as f64 / *self.theta.denom() as f64
    }
}

/// `gamburd = 5/6`, `kim_sarnak = 39/64`, `selberg_conj = 1/2`.
pub fn gap_presets() -> Vec<GapPreset> {
    vec![
        GapPreset { name: "gamburd", theta: Ratio::new(5, 6) },
        GapPreset { name: "kim_sarnak", theta: Ratio::new(39, 64) },
        GapPreset { name: "selberg_conj", theta: Ratio::new(1, 2) },
    ]
}

pub fn gap_preset(name: &str) -> Option<GapPreset> {
    gap_presets().into_iter().find(|p| p.name == name)
}
