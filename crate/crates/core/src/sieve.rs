//! The combinatorial sieve on the sequence `a_n(T)`.
//!
//! `𝒳` is taken as the exact mass `Σ a_n`, so the lower-order terms at the
//! ramified divisors vanish and `r(q) = |𝒜_q| - ω(q) 𝒳`. The sifted sum
//! `S(z)` is computed both directly and through Möbius inversion over the
//! divisors of `P(z)`; the two must agree exactly.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{is_squarefree, primes_below};
use crate::congruence::{self, CongruenceError, DensityTable};
use crate::orbit::{self, sum_rationals, FactorCount, OrbitError, OrbitSlice, WeightMode, WeightTable};
use crate::ratio;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Error)]
pub enum SieveError {
    #[error("modulus {0} is not square-free")]
    NotSquarefree(u64),
    #[error("sifting cutoff z must be at least 2, got {0}")]
    Cutoff(f64),
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain { name: &'static str, value: f64, domain: &'static str },
    #[error("spectral gap θ = {theta} must be below δ = {delta}")]
    GapAboveDimension { delta: f64, theta: f64 },
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Congruence(#[from] CongruenceError),
}

/// The weights `a_n` with their total mass `𝒳`.
#[derive(Clone, Debug)]
pub struct SieveSequence {
    table: WeightTable,
    total: BigRational,
}

impl SieveSequence {
    pub fn new(table: WeightTable) -> Self {
        let total = table.total();
        SieveSequence { table, total }
    }

    pub fn table(&self) -> &WeightTable {
        &self.table
    }

    /// `𝒳 = Σ_n a_n`.
    pub fn total(&self) -> &BigRational {
        &self.total
    }
}

/// `|𝒜_q| = Σ_{n ≡ 0 (q)} a_n`.
pub fn progression_sum(seq: &SieveSequence, q: u64) -> Result<BigRational, SieveError> {
    if !is_squarefree(q) {
        return Err(SieveError::NotSquarefree(q));
    }
    Ok(progression_sum_unchecked(seq, q))
}

fn progression_sum_unchecked(seq: &SieveSequence, q: u64) -> BigRational {
    if q == 1 {
        return seq.total.clone();
    }
    let q = q as u128;
    sum_rationals(seq.table.entries().iter().filter(|(&n, _)| n % q == 0).map(|(_, w)| w))
}

/// `r(q) = |𝒜_q| - ω(q) 𝒳`.
pub fn remainder(seq: &SieveSequence, q: u64, omega: &BigRational) -> Result<BigRational, SieveError> {
    Ok(progression_sum(seq, q)? - omega * &seq.total)
}

/// `Σ |r(q)|` over square-free `q <= q_max` coprime to 𝔅.
pub fn remainder_sum(seq: &SieveSequence, densities: &DensityTable, q_max: u64) -> Result<BigRational, SieveError> {
    let mut sum = BigRational::zero();
    for q in (1..=q_max).filter(|&q| is_squarefree(q) && densities.is_coprime_to_bad(q)) {
        sum += remainder(seq, q, &densities.omega(q)?)?.abs();
    }
    Ok(sum)
}

/// `S(z)` computed two ways.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegendreSums {
    /// `Σ_{(n, P(z)) = 1} a_n`.
    pub direct: BigRational,
    /// `Σ_{q | P(z)} μ(q) |𝒜_q|`.
    pub mobius: BigRational,
}

impl LegendreSums {
    pub fn exact(&self) -> bool {
        self.direct == self.mobius
    }
}

pub fn legendre_sum(seq: &SieveSequence, z: f64) -> Result<LegendreSums, SieveError> {
    if !(z >= 2.0) {
        return Err(SieveError::Cutoff(z));
    }
    let primes: Vec<u64> = primes_below(z.ceil() as u64).into_iter().filter(|&p| (p as f64) < z).collect();

    let direct = sum_rationals(
        seq.table.entries().iter().filter(|(&n, _)| primes.iter().all(|&p| n % p as u128 != 0)).map(|(_, w)| w),
    );

    // Divisors of P(z) above the largest index contribute nothing, and
    // neither do their multiples, so the product P(z) is never formed.
    let max_n = seq.table.max_index().unwrap_or(0);
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    let mut stack: Vec<(usize, u128, bool)> = vec![(0, 1, true)];
    while let Some((start, q, even)) = stack.pop() {
        let a_q = progression_sum_unchecked(seq, q as u64);
        if even {
            positive.push(a_q);
        } else {
            negative.push(a_q);
        }
        for (i, &p) in primes.iter().enumerate().skip(start) {
            let next = q * p as u128;
            if next <= max_n {
                stack.push((i + 1, next, !even));
            }
        }
    }
    let mobius = sum_rationals(&positive) - sum_rationals(&negative);
    Ok(LegendreSums { direct, mobius })
}

/// Both sides of `Σ_{q | P(z)} μ(q) ω(q) = V(z) · Σ_{q' | 𝔅, q' | P(z)} μ(q') ω(q')`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MainTermFactorization {
    #[serde(with = "crate::ratio::serde_str")]
    pub lhs: BigRational,
    #[serde(with = "crate::ratio::serde_str")]
    pub rhs: BigRational,
    pub exact: bool,
}

/// Evaluates the factorization with `ω(q)` supplied per square-free `q`.
/// Enumerates every divisor of `P(z)`; keep `π(z)` modest.
pub fn main_term_factorization(
    z: f64,
    ramified: &BTreeSet<u64>,
    omega: impl Fn(u64) -> Result<BigRational, CongruenceError>,
) -> Result<MainTermFactorization, SieveError> {
    if !(z >= 2.0) {
        return Err(SieveError::Cutoff(z));
    }
    let primes: Vec<u64> = primes_below(z.ceil() as u64).into_iter().filter(|&p| (p as f64) < z).collect();
    let signed_sum = |ps: &[u64]| -> Result<BigRational, CongruenceError> {
        let mut total = BigRational::zero();
        for mask in 0u64..(1 << ps.len()) {
            let (q, k) = ps
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .fold((1u64, 0u32), |(q, k), (_, &p)| (q * p, k + 1));
            let w = omega(q)?;
            if k % 2 == 0 {
                total += w;
            } else {
                total -= w;
            }
        }
        Ok(total)
    };
    let lhs = signed_sum(&primes)?;
    let bad: Vec<u64> = primes.iter().copied().filter(|p| ramified.contains(p)).collect();
    let mut v = BigRational::one();
    for p in primes.iter().filter(|p| !ramified.contains(p)) {
        v *= BigRational::one() - omega(*p)?;
    }
    let rhs = v * signed_sum(&bad)?;
    let exact = lhs == rhs;
    Ok(MainTermFactorization { lhs, rhs, exact })
}

/// `c ≈ 3.5911`, the root of `(c/e)^c = e`, i.e. `c (ln c - 1) = 1`.
pub fn beta_sieve_constant() -> f64 {
    let mut c: f64 = 3.5;
    for _ in 0..50 {
        let g = c * (c.ln() - 1.0) - 1.0;
        let dg = c.ln();
        c -= g / dg;
    }
    c
}

/// Lower sieve function `f(s) = 2 e^γ log(s - 1) / s` on `[2, 4]`.
pub fn lower_sieve_function(s: f64) -> Result<f64, SieveError> {
    if !(2.0..=4.0).contains(&s) {
        return Err(SieveError::Domain { name: "s", value: s, domain: "[2, 4]" });
    }
    Ok(2.0 * EULER_GAMMA.exp() * (s - 1.0).ln() / s)
}

/// Upper sieve function `F(s) = 2 e^γ / s` on `[1, 3]`.
pub fn upper_sieve_function(s: f64) -> Result<f64, SieveError> {
    if !(1.0..=3.0).contains(&s) {
        return Err(SieveError::Domain { name: "s", value: s, domain: "[1, 3]" });
    }
    Ok(2.0 * EULER_GAMMA.exp() / s)
}

/// Values of the β-sieve envelope at one `(s, Q, K)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SieveBounds {
    pub s: f64,
    /// `f(s)`, when `s ∈ [2, 4]`.
    pub f_lower: Option<f64>,
    /// `F(s)`, when `s ∈ [1, 3]`.
    pub f_upper: Option<f64>,
    /// `D = c K^11 (log log log Q)^3 / log log Q`.
    pub d: f64,
    pub gamma_euler: f64,
    pub c_const: f64,
    pub k: f64,
}

pub fn beta_bounds(s: f64, level: f64, k: f64) -> Result<SieveBounds, SieveError> {
    if !(1.0..=4.0).contains(&s) {
        return Err(SieveError::Domain { name: "s", value: s, domain: "[1, 4]" });
    }
    if !(level > (2.0 * k).exp()) || !(level > 1.0_f64.exp()) {
        return Err(SieveError::Domain { name: "Q", value: level, domain: "Q > max(e, e^(2K))" });
    }
    let c = beta_sieve_constant();
    let ll = level.ln().ln();
    let d = c * k.powi(11) * ll.ln().powi(3) / ll;
    Ok(SieveBounds {
        s,
        f_lower: lower_sieve_function(s).ok(),
        f_upper: upper_sieve_function(s).ok(),
        d,
        gamma_euler: EULER_GAMMA,
        c_const: c,
        k,
    })
}

/// Sieve level `Q = T^{(δ - θ) / (2(1 + ε))}`.
pub fn sieve_level(height: f64, delta: f64, theta: f64, eps: f64) -> Result<f64, SieveError> {
    if !(0.5..=1.0).contains(&theta) {
        return Err(SieveError::Domain { name: "θ", value: theta, domain: "[1/2, 1]" });
    }
    if !(delta <= 1.0) {
        return Err(SieveError::Domain { name: "δ", value: delta, domain: "(θ, 1]" });
    }
    if !(theta < delta) {
        return Err(SieveError::GapAboveDimension { delta, theta });
    }
    if !(eps >= 0.0) {
        return Err(SieveError::Domain { name: "ε", value: eps, domain: "[0, ∞)" });
    }
    Ok(height.powf((delta - theta) / (2.0 * (1.0 + eps))))
}

/// Least integer `R > 4 / (δ - θ)`.
pub fn admissible_r(delta: f64, theta: f64) -> Result<u32, SieveError> {
    if !(theta < delta) {
        return Err(SieveError::GapAboveDimension { delta, theta });
    }
    Ok((4.0 / (delta - theta)).floor() as u32 + 1)
}

/// [`admissible_r`] in exact arithmetic, for boundary cases such as
/// `4 / (δ - θ) = 25`.
pub fn admissible_r_exact(delta: &BigRational, theta: &BigRational) -> Result<u32, SieveError> {
    if theta >= delta {
        return Err(SieveError::GapAboveDimension { delta: ratio::to_f64(delta), theta: ratio::to_f64(theta) });
    }
    let bound = BigRational::from_integer(BigInt::from(4)) / (delta - theta);
    let floor = ratio::floor_u128(&bound).expect("positive bound");
    Ok(floor as u32 + 1)
}

/// Inputs to [`run_sieve`].
#[derive(Clone, Debug)]
pub struct SieveConfig {
    pub height: BigRational,
    pub mode: WeightMode,
    /// Growth exponent estimate δ̂.
    pub delta: f64,
    pub theta: f64,
    pub level_override: Option<u64>,
    pub z: Option<f64>,
    pub r_list: Vec<u32>,
    pub factor_count: FactorCount,
}

/// Levels derived from a config before any sieving.
#[derive(Clone, Debug, PartialEq)]
pub struct SievePlan {
    pub q_theory: Option<f64>,
    pub q_used: u64,
    pub z: f64,
}

impl SieveConfig {
    pub fn plan(&self) -> SievePlan {
        let eps = ratio::to_f64(&self.mode.epsilon());
        let t = ratio::to_f64(&self.height);
        let q_theory = sieve_level(t, self.delta, self.theta, eps).ok();
        let q_used = self.level_override.unwrap_or_else(|| q_theory.map_or(1, |q| q.floor().max(1.0) as u64));
        let s = 2.0 * (1.0 + eps);
        let z = self.z.unwrap_or_else(|| (q_used as f64).powf(1.0 / s)).max(2.0);
        SievePlan { q_theory, q_used, z }
    }

    /// Primes that need a density for this run.
    pub fn prime_limit(&self) -> u64 {
        let plan = self.plan();
        plan.q_used.max(plan.z.ceil() as u64) + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderRow {
    pub q: u64,
    #[serde(with = "crate::ratio::serde_str")]
    pub a_q: BigRational,
    #[serde(with = "crate::ratio::serde_str")]
    pub omega: BigRational,
    #[serde(with = "crate::ratio::serde_str")]
    pub r: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostPrimeRow {
    pub r: u32,
    pub count: u64,
    /// `|𝒪(T, R)| log T / T^δ̂`.
    pub ratio: f64,
}

/// Two-sided β-sieve envelope around `S*(z)`; a diagnostic only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeDiagnostic {
    pub bounds: SieveBounds,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub s_star: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SieveReport {
    #[serde(rename = "T", with = "crate::ratio::serde_str")]
    pub height: BigRational,
    #[serde(with = "crate::ratio::serde_str")]
    pub epsilon: BigRational,
    pub delta_hat: f64,
    pub theta: f64,
    pub q_theory: Option<f64>,
    pub q_used: u64,
    pub z: f64,
    #[serde(with = "crate::ratio::serde_str")]
    pub total_mass: BigRational,
    #[serde(with = "crate::ratio::serde_str")]
    pub s_direct: BigRational,
    #[serde(with = "crate::ratio::serde_str")]
    pub s_mobius: BigRational,
    pub legendre_exact: bool,
    #[serde(with = "crate::ratio::serde_str")]
    pub v_z: BigRational,
    pub v_z_approx: f64,
    pub main_term: Option<MainTermFactorization>,
    pub remainders: Vec<RemainderRow>,
    #[serde(with = "crate::ratio::serde_str")]
    pub remainder_sum: BigRational,
    pub remainder_ratio: f64,
    pub density_constant: f64,
    pub envelope: Option<EnvelopeDiagnostic>,
    pub almost_primes: Vec<AlmostPrimeRow>,
    pub ramified: Vec<u64>,
    pub notes: Vec<String>,
}

impl SieveReport {
    fn empty(cfg: &SieveConfig, plan: &SievePlan, densities: &DensityTable) -> Self {
        SieveReport {
            height: cfg.height.clone(),
            epsilon: cfg.mode.epsilon(),
            delta_hat: cfg.delta,
            theta: cfg.theta,
            q_theory: plan.q_theory,
            q_used: plan.q_used,
            z: plan.z,
            total_mass: BigRational::zero(),
            s_direct: BigRational::zero(),
            s_mobius: BigRational::zero(),
            legendre_exact: true,
            v_z: BigRational::one(),
            v_z_approx: 1.0,
            main_term: None,
            remainders: Vec::new(),
            remainder_sum: BigRational::zero(),
            remainder_ratio: 0.0,
            density_constant: 0.0,
            envelope: None,
            almost_primes: cfg.r_list.iter().map(|&r| AlmostPrimeRow { r, count: 0, ratio: 0.0 }).collect(),
            ramified: densities.ramified.iter().copied().collect(),
            notes: Vec::new(),
        }
    }
}

/// Largest `π(z)` for which the main-term factorization is enumerated.
const MAIN_TERM_MAX_PRIMES: usize = 16;

/// Runs the full sieve on an exhausted slice.
pub fn run_sieve(slice: &OrbitSlice, densities: &DensityTable, cfg: &SieveConfig) -> Result<SieveReport, SieveError> {
    let plan = cfg.plan();
    let mut report = SieveReport::empty(cfg, &plan, densities);
    report.notes.push(format!(
        "ramified primes determined empirically up to {}; moduli sharing a factor with them are excluded from remainders",
        densities.prime_bound
    ));
    if plan.q_theory.is_none() {
        report.notes.push(format!(
            "theoretical level undefined: θ = {} is not below δ̂ = {}",
            cfg.theta, cfg.delta
        ));
    }
    if cfg.height <= BigRational::one() {
        return Ok(report);
    }
    let count_slice = slice.restrict(&cfg.height)?;
    orbit::count(&count_slice)?;

    let seq = SieveSequence::new(orbit::weight_table(slice, &cfg.height, &cfg.mode)?);
    let x = seq.total().clone();
    report.total_mass = x.clone();

    let sums = legendre_sum(&seq, plan.z)?;
    report.legendre_exact = sums.exact();
    report.s_direct = sums.direct.clone();
    report.s_mobius = sums.mobius;

    let omega = |p: u64| densities.omega(p);
    let v = congruence::local_density_product(plan.z, &densities.ramified, omega)?;
    report.v_z = v.value;
    report.v_z_approx = v.approx;

    if primes_below(plan.z.ceil() as u64).len() <= MAIN_TERM_MAX_PRIMES {
        report.main_term = Some(main_term_factorization(plan.z, &densities.ramified, omega)?);
    }

    for q in (1..=plan.q_used).filter(|&q| is_squarefree(q) && densities.is_coprime_to_bad(q)) {
        let w = densities.omega(q)?;
        let a_q = progression_sum(&seq, q)?;
        let r = &a_q - &w * &x;
        report.remainder_sum += r.abs();
        report.remainders.push(RemainderRow { q, a_q, omega: w, r });
    }
    report.remainder_ratio =
        if x.is_zero() { 0.0 } else { ratio::to_f64(&(&report.remainder_sum / &x)) };

    let k_limit = densities.max_prime().min(plan.z.ceil().max(densities.prime_bound as f64) as u64);
    report.density_constant = congruence::estimate_density_constant(k_limit, &densities.ramified, omega)?;

    let level = plan.q_used as f64;
    let s_env = level.ln() / plan.z.ln();
    if let Ok(bounds) = beta_bounds(s_env, level, report.density_constant) {
        let xv = ratio::to_f64(&x) * report.v_z_approx;
        let r_q = ratio::to_f64(&report.remainder_sum);
        let s_star = ratio::to_f64(&sums.direct);
        let lower = bounds.f_lower.map(|f| (f - bounds.d) * xv - r_q);
        let upper = bounds.f_upper.map(|f| (f + bounds.d) * xv + r_q);
        let within = lower.is_none_or(|l| l <= s_star) && upper.is_none_or(|u| s_star <= u);
        report.envelope = Some(EnvelopeDiagnostic { bounds, lower, upper, s_star, within });
    }

    let t = ratio::to_f64(&cfg.height);
    let scale = t.ln() / t.powf(cfg.delta);
    report.almost_primes = cfg
        .r_list
        .iter()
        .map(|&r| {
            let count = orbit::almost_prime_count(&count_slice, r, cfg.factor_count)? as u64;
            Ok(AlmostPrimeRow { r, count, ratio: count as f64 * scale })
        })
        .collect::<Result<_, SieveError>>()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::{density, project, DEFAULT_ELEMENT_BUDGET};
    use crate::group::GroupPresentation;
    use crate::orbit::{enumerate_orbit, weight_table, EnumerateOptions};
    use crate::ratio::parse_rational;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn sharp_seq(t: &str) -> (OrbitSlice, SieveSequence) {
        let h = parse_rational(t).unwrap();
        let slice = enumerate_orbit(&GroupPresentation::hecke4(), &h, 4.0, EnumerateOptions::default()).unwrap();
        let seq = SieveSequence::new(weight_table(&slice, &h, &WeightMode::Sharp).unwrap());
        (slice, seq)
    }

    #[test]
    fn progression_sums() {
        let (_, seq) = sharp_seq("1.5");
        assert_eq!(progression_sum(&seq, 1).unwrap(), r(4, 1));
        assert_eq!(progression_sum(&seq, 2).unwrap(), r(0, 1));
        assert_eq!(progression_sum(&seq, 101).unwrap(), r(0, 1));
        assert!(matches!(progression_sum(&seq, 4), Err(SieveError::NotSquarefree(4))));
    }

    #[test]
    fn remainder_at_one_vanishes() {
        let (_, seq) = sharp_seq("2000");
        assert_eq!(remainder(&seq, 1, &BigRational::one()).unwrap(), BigRational::zero());
    }

    #[test]
    fn primes_three_mod_four_never_divide() {
        let (_, seq) = sharp_seq("1e4");
        for p in primes_below(200).into_iter().filter(|p| p % 4 == 3) {
            assert_eq!(progression_sum(&seq, p).unwrap(), BigRational::zero(), "p = {p}");
        }
    }

    #[test]
    fn legendre_examples() {
        let (_, seq) = sharp_seq("1.5");
        let s = legendre_sum(&seq, 2.0).unwrap();
        assert_eq!((s.direct.clone(), s.mobius.clone()), (r(4, 1), r(4, 1)));
        let s = legendre_sum(&seq, 10.0).unwrap();
        assert_eq!((s.direct, s.mobius), (r(4, 1), r(4, 1)));
        assert!(legendre_sum(&seq, 1.5).is_err());
    }

    #[test]
    fn legendre_identity_holds_on_smooth_weights() {
        let h = parse_rational("3000").unwrap();
        let slice = enumerate_orbit(
            &GroupPresentation::hecke4(),
            &parse_rational("4000").unwrap(),
            4.0,
            EnumerateOptions::default(),
        )
        .unwrap();
        let mode = WeightMode::smooth(parse_rational("0.2").unwrap()).unwrap();
        let seq = SieveSequence::new(weight_table(&slice, &h, &mode).unwrap());
        for z in [2.0, 3.0, 7.5, 13.0, 30.0] {
            assert!(legendre_sum(&seq, z).unwrap().exact(), "z = {z}");
        }
    }

    #[test]
    fn main_term_factorization_with_closure_densities() {
        let pres = GroupPresentation::hecke4();
        let bad = BTreeSet::from([2]);
        for z in [3.0, 6.0, 8.0] {
            let omega = |q: u64| Ok(density(&project(&pres, q, DEFAULT_ELEMENT_BUDGET)?).omega);
            let m = main_term_factorization(z, &bad, omega).unwrap();
            assert!(m.exact, "z = {z}: {} vs {}", m.lhs, m.rhs);
        }
    }

    #[test]
    fn sieve_function_values() {
        assert_eq!(lower_sieve_function(2.0).unwrap(), 0.0);
        assert!((upper_sieve_function(2.0).unwrap() - 1.781_072_417_990_198).abs() < 1e-12);
        assert!(lower_sieve_function(2.0 * 1.01).unwrap() > 0.0);
        assert!(lower_sieve_function(1.5).is_err());
        assert!(upper_sieve_function(3.5).is_err());
        let mut prev_f = f64::NEG_INFINITY;
        let mut prev_big_f = f64::INFINITY;
        for i in 0..=200 {
            let s = 2.0 + 2.0 * i as f64 / 200.0;
            let f = lower_sieve_function(s).unwrap();
            assert!(f > prev_f || i == 0);
            prev_f = f;
            let s = 1.0 + 2.0 * i as f64 / 200.0;
            let big_f = upper_sieve_function(s).unwrap();
            assert!(big_f < prev_big_f);
            prev_big_f = big_f;
            if (2.0..=3.0).contains(&s) {
                assert!(lower_sieve_function(s).unwrap() <= big_f);
            }
        }
    }

    #[test]
    fn constant_c_solves_its_equation() {
        let c = beta_sieve_constant();
        assert!((c - 3.591_121).abs() < 1e-5);
        assert!(((c / std::f64::consts::E).powf(c) - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn bounds_domain_and_decay() {
        assert!(beta_bounds(0.5, 1e6, 1.0).is_err());
        assert!(beta_bounds(2.0, 5.0, 1.0).is_err());
        let b = beta_bounds(2.0, 1e6, 1.0).unwrap();
        assert_eq!(b.f_lower, Some(0.0));
        let ll = 1e6f64.ln().ln();
        let expect = beta_sieve_constant() * ll.ln().powi(3) / ll;
        assert!((b.d - expect).abs() < 1e-12);
        let k2 = beta_bounds(2.0, 1e6, 1.5).unwrap();
        assert!((k2.d / b.d - 1.5f64.powi(11)).abs() < 1e-6);
    }

    #[test]
    fn sieve_levels() {
        let q = sieve_level(1e6, 1.0, 0.5, 0.0).unwrap();
        assert!((q - 10f64.powf(1.5)).abs() < 1e-9);
        assert!(matches!(sieve_level(1e6, 0.8, 0.8, 0.0), Err(SieveError::GapAboveDimension { .. })));
        assert!(sieve_level(1e6, 0.9, 0.5, 0.0).unwrap() > sieve_level(1e6, 0.8, 0.5, 0.0).unwrap());
        assert!(sieve_level(1e6, 0.9, 0.6, 0.0).unwrap() < sieve_level(1e6, 0.9, 0.5, 0.0).unwrap());
    }

    #[test]
    fn admissible_r_corollary_rows() {
        assert_eq!(admissible_r(0.995, 5.0 / 6.0).unwrap(), 25);
        assert_eq!(admissible_r(1.0, 39.0 / 64.0).unwrap(), 11);
        assert_eq!(admissible_r(0.95, 0.5).unwrap(), 9);
        assert_eq!(admissible_r_exact(&r(1, 1), &r(39, 64)).unwrap(), 11);
        // Exactly on the boundary 4 / (δ - θ) = 25 the strict inequality gives 26.
        assert_eq!(admissible_r_exact(&r(149, 150), &r(5, 6)).unwrap(), 26);
        assert!(admissible_r(0.7, 5.0 / 6.0).is_err());
    }

    #[test]
    fn degenerate_height_gives_empty_report() {
        let pres = GroupPresentation::hecke4();
        let h = parse_rational("1").unwrap();
        let slice = enumerate_orbit(&pres, &h, 4.0, EnumerateOptions::default()).unwrap();
        let densities = DensityTable::build(&pres, 50, 10, DEFAULT_ELEMENT_BUDGET).unwrap();
        let cfg = SieveConfig {
            height: h,
            mode: WeightMode::Sharp,
            delta: 0.7,
            theta: 0.5,
            level_override: None,
            z: None,
            r_list: vec![1, 2],
            factor_count: FactorCount::WithMultiplicity,
        };
        let report = run_sieve(&slice, &densities, &cfg).unwrap();
        assert!(report.total_mass.is_zero());
        assert!(report.almost_primes.iter().all(|row| row.count == 0));
    }

    #[test]
    fn full_run_at_ten_thousand() {
        let pres = GroupPresentation::hecke4();
        let (slice, _) = sharp_seq("1e4");
        let cfg = SieveConfig {
            height: parse_rational("1e4").unwrap(),
            mode: WeightMode::Sharp,
            delta: 0.68,
            theta: 0.5,
            level_override: Some(20),
            z: Some(20.0),
            r_list: vec![1, 2, 14],
            factor_count: FactorCount::WithMultiplicity,
        };
        let densities = DensityTable::build(&pres, 50, cfg.prime_limit(), DEFAULT_ELEMENT_BUDGET).unwrap();
        let report = run_sieve(&slice, &densities, &cfg).unwrap();
        assert!(report.legendre_exact);
        assert_eq!(report.total_mass, r(452, 1));
        assert!(report.main_term.as_ref().unwrap().exact);
        assert_eq!(report.almost_primes[2].count, 452);
        assert_eq!(report.remainders[0].q, 1);
        assert!(report.remainders[0].r.is_zero());
        assert!(report.remainders.iter().all(|row| row.q % 2 == 1));
        let q_theory = report.q_theory.unwrap();
        assert!((q_theory - 1e4f64.powf(0.09)).abs() < 1e-9);
        let json = serde_json::to_string(&report).unwrap();
        let back: SieveReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.s_direct, report.s_direct);
    }
}
