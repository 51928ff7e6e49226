//! Images of Γ in SL2(Z/qZ) and the local densities ω(q) of the sieve.
//!
//! `G_q` is computed as the closure of the reduced generators. From it we
//! read off the row orbit `(0, 1) G_q` (the orbit mod q), the stabilizer of
//! `(0, 1)` (the image of Γ1(q)) and hence
//!
//! ```text
//! |𝒪_q| = #{(c, d) ∈ (0,1)G_q : c^2 + d^2 ≡ 0 (q)}
//! [Γ : Γ1(q)] = |G_q| / |Stab(0, 1)| = |(0,1)G_q|
//! ω(q) = |𝒪_q| / [Γ : Γ1(q)].
//! ```
//!
//! All densities are exact rationals.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factorize, is_prime, is_squarefree, primes_below, sl2_order};
use crate::group::GroupPresentation;
use crate::ratio;

/// Largest |SL2(Z/qZ)| we are willing to close over by default.
pub const DEFAULT_ELEMENT_BUDGET: u128 = 10_000_000;
pub const DEFAULT_PRIME_BOUND: u64 = 50;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CongruenceError {
    #[error("modulus must be at least 1")]
    ZeroModulus,
    #[error("|SL2(Z/{q}Z)| = {order} exceeds the element budget {budget}")]
    Budget { q: u64, order: u128, budget: u128 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not square-free")]
    NotSquarefree(u64),
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("no density available for prime {0}")]
    MissingPrime(u64),
}

/// A matrix over Z/qZ; the modulus lives in the owning [`ProjectionGroup`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResidueMatrix {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

impl ResidueMatrix {
    fn mul(&self, rhs: &ResidueMatrix, q: u64) -> ResidueMatrix {
        let f = |x: u32, y: u32, u: u32, v: u32| ((x as u64 * y as u64 + u as u64 * v as u64) % q) as u32;
        ResidueMatrix {
            a: f(self.a, rhs.a, self.b, rhs.c),
            b: f(self.a, rhs.b, self.b, rhs.d),
            c: f(self.c, rhs.a, self.d, rhs.c),
            d: f(self.c, rhs.b, self.d, rhs.d),
        }
    }

    fn key(&self, q: u64) -> u64 {
        ((self.a as u64 * q + self.b as u64) * q + self.c as u64) * q + self.d as u64
    }

    fn determinant(&self, q: u64) -> u64 {
        let ad = self.a as u64 * self.d as u64 % q;
        let bc = self.b as u64 * self.c as u64 % q;
        (ad + q - bc) % q
    }
}

/// The image `G_q` of Γ in SL2(Z/qZ).
#[derive(Clone, Debug)]
pub struct ProjectionGroup {
    q: u64,
    /// Sorted.
    elements: Vec<ResidueMatrix>,
    row_orbit: BTreeSet<(u32, u32)>,
    unipotent_count: u64,
}

/// Closes the reduced generators of `pres` under multiplication mod `q`.
pub fn project(pres: &GroupPresentation, q: u64, budget: u128) -> Result<ProjectionGroup, CongruenceError> {
    if q == 0 {
        return Err(CongruenceError::ZeroModulus);
    }
    let order = sl2_order(q);
    if order > budget || q > u16::MAX as u64 {
        return Err(CongruenceError::Budget { q, order, budget });
    }
    let reduce = |x: i128| x.rem_euclid(q as i128) as u32;
    let gens: Vec<ResidueMatrix> = pres
        .symmetric_generators()
        .iter()
        .map(|g| {
            let [a, b, c, d] = g.entries();
            ResidueMatrix { a: reduce(a), b: reduce(b), c: reduce(c), d: reduce(d) }
        })
        .collect();
    let identity = ResidueMatrix { a: reduce(1), b: 0, c: 0, d: reduce(1) };

    let mut seen: FxHashSet<u64> = FxHashSet::default();
    seen.insert(identity.key(q));
    let mut elements = vec![identity];
    let mut next = 0;
    while next < elements.len() {
        let x = elements[next];
        next += 1;
        for g in &gens {
            let y = x.mul(g, q);
            if seen.insert(y.key(q)) {
                elements.push(y);
            }
        }
    }
    elements.sort_unstable();
    let row_orbit = elements.iter().map(|m| (m.c, m.d)).collect();
    let one = reduce(1);
    let unipotent_count = elements.iter().filter(|m| m.a == one && m.c == 0 && m.d == one).count() as u64;
    Ok(ProjectionGroup { q, elements, row_orbit, unipotent_count })
}

impl ProjectionGroup {
    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn elements(&self) -> &[ResidueMatrix] {
        &self.elements
    }

    pub fn row_orbit(&self) -> &BTreeSet<(u32, u32)> {
        &self.row_orbit
    }

    pub fn unipotent_count(&self) -> u64 {
        self.unipotent_count
    }

    pub fn contains(&self, m: &ResidueMatrix) -> bool {
        self.elements.binary_search(m).is_ok()
    }

    /// Group product mod q.
    pub fn mul(&self, x: &ResidueMatrix, y: &ResidueMatrix) -> ResidueMatrix {
        x.mul(y, self.q)
    }

    pub fn inverse(&self, x: &ResidueMatrix) -> ResidueMatrix {
        let q = self.q as u32;
        let neg = |v: u32| (q - v) % q;
        ResidueMatrix { a: x.d, b: neg(x.b), c: neg(x.c), d: x.a }
    }

    pub fn all_determinants_one(&self) -> bool {
        let one = 1 % self.q;
        self.elements.iter().all(|m| m.determinant(self.q) == one)
    }
}

/// Whether `G_p = SL2(F_p)`, judged by its order `p(p^2 - 1)`.
pub fn is_onto(pg: &ProjectionGroup) -> Result<bool, CongruenceError> {
    if !is_prime(pg.q) {
        return Err(CongruenceError::NotPrime(pg.q));
    }
    Ok(pg.order() as u128 == sl2_order(pg.q))
}

/// Primes `p <= p_max` at which Γ fails to surject onto SL2(F_p).
pub fn ramified_set(pres: &GroupPresentation, p_max: u64, budget: u128) -> Result<BTreeSet<u64>, CongruenceError> {
    let primes = primes_below(p_max + 1);
    let flags: Vec<Result<Option<u64>, CongruenceError>> = primes
        .par_iter()
        .map(|&p| {
            let pg = project(pres, p, budget)?;
            Ok((!is_onto(&pg)?).then_some(p))
        })
        .collect();
    flags.into_iter().filter_map(Result::transpose).collect()
}

/// `q`, `|𝒪_q|`, `[Γ : Γ1(q)]` and `ω(q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub q: u64,
    #[serde(with = "crate::ratio::serde_str")]
    pub omega: BigRational,
    pub o_q: u64,
    pub index: u64,
}

pub fn density(pg: &ProjectionGroup) -> DensityRecord {
    let q = pg.q;
    let o_q = pg
        .row_orbit
        .iter()
        .filter(|&&(c, d)| (c as u64 * c as u64 + d as u64 * d as u64) % q == 0)
        .count() as u64;
    let index = pg.order() / pg.unipotent_count;
    debug_assert_eq!(index, pg.row_orbit.len() as u64);
    DensityRecord { q, omega: BigRational::new(BigInt::from(o_q), BigInt::from(index)), o_q, index }
}

/// Both sides of the Goursat product check for coprime moduli.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoursatCheck {
    pub q1: u64,
    pub q2: u64,
    pub order_q1: u64,
    pub order_q2: u64,
    pub order_product: u64,
    pub omega_q1: BigRational,
    pub omega_q2: BigRational,
    pub omega_product: BigRational,
}

impl GoursatCheck {
    pub fn holds(&self) -> bool {
        self.order_product == self.order_q1 * self.order_q2 && self.omega_product == &self.omega_q1 * &self.omega_q2
    }
}

/// Verifies `|G_{q1 q2}| = |G_{q1}| |G_{q2}|` and `ω(q1 q2) = ω(q1) ω(q2)`.
pub fn check_goursat(
    pres: &GroupPresentation,
    q1: u64,
    q2: u64,
    budget: u128,
) -> Result<GoursatCheck, CongruenceError> {
    if num_integer::gcd(q1, q2) != 1 {
        return Err(CongruenceError::NotCoprime(q1, q2));
    }
    for q in [q1, q2] {
        if !is_squarefree(q) {
            return Err(CongruenceError::NotSquarefree(q));
        }
    }
    let g1 = project(pres, q1, budget)?;
    let g2 = project(pres, q2, budget)?;
    let g12 = project(pres, q1 * q2, budget)?;
    Ok(GoursatCheck {
        q1,
        q2,
        order_q1: g1.order(),
        order_q2: g2.order(),
        order_product: g12.order(),
        omega_q1: density(&g1).omega,
        omega_q2: density(&g2).omega,
        omega_product: density(&g12).omega,
    })
}

/// Reduction mod q1 x mod q2 maps the row orbit mod q1*q2 bijectively onto
/// the product of the row orbits.
pub fn crt_rows_consistent(g1: &ProjectionGroup, g2: &ProjectionGroup, g12: &ProjectionGroup) -> bool {
    let (q1, q2) = (g1.q as u32, g2.q as u32);
    if g12.q != g1.q * g2.q {
        return false;
    }
    let images: BTreeSet<((u32, u32), (u32, u32))> =
        g12.row_orbit.iter().map(|&(c, d)| ((c % q1, d % q1), (c % q2, d % q2))).collect();
    images.len() == g12.row_orbit.len()
        && images.len() == g1.row_orbit.len() * g2.row_orbit.len()
        && images.iter().all(|(r1, r2)| g1.row_orbit.contains(r1) && g2.row_orbit.contains(r2))
}

/// ω(p) at a prime where Γ surjects: `1/3` at 2, `2/(p+1)` for `p ≡ 1 (4)`
/// and 0 for `p ≡ 3 (4)`.
pub fn closed_form_omega(p: u64) -> BigRational {
    let r = |n: u64, d: u64| BigRational::new(BigInt::from(n), BigInt::from(d));
    match p % 4 {
        _ if p == 2 => r(1, 3),
        1 => r(2, p + 1),
        _ => BigRational::zero(),
    }
}

/// ω(p) assuming `G_p = SL2(F_p)`, by counting nonzero `(c, d)` mod p with
/// `c^2 + d^2 ≡ 0` directly instead of closing the group.
pub fn assumed_onto_density(p: u64) -> DensityRecord {
    let o_q = (0..p)
        .flat_map(|c| (0..p).map(move |d| (c, d)))
        .filter(|&(c, d)| (c, d) != (0, 0) && (c * c + d * d) % p == 0)
        .count() as u64;
    let index = p * p - 1;
    DensityRecord { q: p, omega: BigRational::new(BigInt::from(o_q), BigInt::from(index)), o_q, index }
}

/// `V(z) = Π_{p < z, p ∤ 𝔅} (1 - ω(p))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityProduct {
    pub z: f64,
    pub value: BigRational,
    pub approx: f64,
    /// `V(z)^{-1} / log z`, which tends to a constant for these densities.
    pub landau_ratio: f64,
}

pub fn local_density_product(
    z: f64,
    ramified: &BTreeSet<u64>,
    omega: impl Fn(u64) -> Result<BigRational, CongruenceError>,
) -> Result<DensityProduct, CongruenceError> {
    assert!(z >= 2.0, "sifting cutoff must be at least 2");
    let mut value = BigRational::one();
    for p in primes_below(z.ceil() as u64) {
        if (p as f64) < z && !ramified.contains(&p) {
            value *= BigRational::one() - omega(p)?;
        }
    }
    let approx = ratio::to_f64(&value);
    Ok(DensityProduct { z, value, approx, landau_ratio: 1.0 / (approx * z.ln()) })
}

/// Empirical constant `K` in the local density bound
/// `Π_{v <= p <= w, p ∤ 𝔅} (1 - ω(p))^{-1} <= (log w / log v)(1 + K / log v)`,
/// maximised over primes `2 <= v <= w <= limit`. Never negative.
pub fn estimate_density_constant(
    limit: u64,
    ramified: &BTreeSet<u64>,
    omega: impl Fn(u64) -> Result<BigRational, CongruenceError>,
) -> Result<f64, CongruenceError> {
    let primes = primes_below(limit + 1);
    let inv: Vec<f64> = primes
        .iter()
        .map(|&p| {
            if ramified.contains(&p) {
                Ok(1.0)
            } else {
                Ok(1.0 / (1.0 - ratio::to_f64(&omega(p)?)))
            }
        })
        .collect::<Result<_, CongruenceError>>()?;
    let mut k: f64 = 0.0;
    for i in 0..primes.len() {
        let log_v = (primes[i] as f64).ln();
        let mut prod = 1.0;
        for j in i..primes.len() {
            prod *= inv[j];
            let log_w = (primes[j] as f64).ln();
            k = k.max(log_v * (prod * log_v / log_w - 1.0));
        }
    }
    Ok(k)
}

/// How a prime's density was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySource {
    /// Closure of the generators mod p.
    Closure,
    /// Beyond the element budget; surjectivity assumed and the orbit mod p
    /// counted directly.
    AssumedOnto,
}

/// Densities for the sieve: per-prime records, the empirical ramified set
/// 𝔅 and the densities of the divisors of 𝔅. ω of any square-free q is
/// `ω(q') Π_{p | q''} ω(p)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityTable {
    pub ramified: BTreeSet<u64>,
    pub prime_bound: u64,
    pub primes: BTreeMap<u64, (DensityRecord, DensitySource)>,
    pub ramified_parts: BTreeMap<u64, DensityRecord>,
}

impl DensityTable {
    /// Scans primes up to `prime_bound` for ramification and records ω(p)
    /// for every prime below `max(prime_bound + 1, primes_below)`.
    pub fn build(
        pres: &GroupPresentation,
        prime_bound: u64,
        primes_below_limit: u64,
        budget: u128,
    ) -> Result<Self, CongruenceError> {
        let ramified = ramified_set(pres, prime_bound, budget)?;
        let limit = primes_below_limit.max(prime_bound + 1);
        let records: Vec<Result<(u64, (DensityRecord, DensitySource)), CongruenceError>> = primes_below(limit)
            .into_par_iter()
            .map(|p| {
                if sl2_order(p) <= budget || ramified.contains(&p) {
                    Ok((p, (density(&project(pres, p, budget)?), DensitySource::Closure)))
                } else {
                    Ok((p, (assumed_onto_density(p), DensitySource::AssumedOnto)))
                }
            })
            .collect();
        let primes = records.into_iter().collect::<Result<_, _>>()?;

        let bad: Vec<u64> = ramified.iter().copied().collect();
        let mut ramified_parts = BTreeMap::new();
        for mask in 1u32..(1 << bad.len()) {
            let q: u64 = bad.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p).product();
            ramified_parts.insert(q, density(&project(pres, q, budget)?));
        }
        Ok(DensityTable { ramified, prime_bound, primes, ramified_parts })
    }

    /// Product of the ramified primes.
    pub fn bad_product(&self) -> u64 {
        self.ramified.iter().product()
    }

    pub fn is_coprime_to_bad(&self, q: u64) -> bool {
        num_integer::gcd(q, self.bad_product()) == 1
    }

    pub fn prime_omega(&self, p: u64) -> Result<BigRational, CongruenceError> {
        self.primes.get(&p).map(|(r, _)| r.omega.clone()).ok_or(CongruenceError::MissingPrime(p))
    }

    /// ω(q) for square-free q, multiplicative away from 𝔅.
    pub fn omega(&self, q: u64) -> Result<BigRational, CongruenceError> {
        if q == 0 {
            return Err(CongruenceError::ZeroModulus);
        }
        let mut bad_part = 1;
        let mut value = BigRational::one();
        for (p, e) in factorize(q) {
            if e > 1 {
                return Err(CongruenceError::NotSquarefree(q));
            }
            if self.ramified.contains(&p) {
                bad_part *= p;
            } else {
                value *= self.prime_omega(p)?;
            }
        }
        if bad_part > 1 {
            let rec = self.ramified_parts.get(&bad_part).ok_or(CongruenceError::MissingPrime(bad_part))?;
            value *= &rec.omega;
        }
        Ok(value)
    }

    /// Largest prime with a recorded density.
    pub fn max_prime(&self) -> u64 {
        self.primes.keys().next_back().copied().unwrap_or(1)
    }
}
