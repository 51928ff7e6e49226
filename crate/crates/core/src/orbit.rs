//! Enumeration of the orbit of bottom rows `(0, 1)Γ` up to a height, and the
//! arithmetic sequences built from it.
//!
//! Cosets Γ∞\Γ are in bijection with bottom rows `(c, d)`, so the search runs
//! over the Schreier graph of Γ∞-cosets: from a canonical representative
//! `x` the neighbours are the canonical representatives of `x g` for each
//! generator or inverse `g`. A node is expanded only while its Frobenius
//! norm stays below `β^2 * 2T`. Exhaustiveness is audited by repeating the
//! search at `2β` and requiring the same point set.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::PrimeTable;
use crate::group::{GroupElement, GroupError, GroupPresentation};
use crate::ratio;

/// Version of the JSON orbit cache schema.
pub const CACHE_VERSION: u32 = 1;
pub const DEFAULT_BETA: f64 = 4.0;
pub const DEFAULT_NODE_CAP: usize = 20_000_000;

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("overflow in matrix arithmetic at word length {word_length}")]
    Overflow { word_length: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(
        "node cap {cap} exceeded at depth {depth}: {visited} nodes visited, {expanded} expanded, {points} points found"
    )]
    NodeCap { cap: usize, depth: usize, visited: usize, expanded: usize, points: usize },
    #[error("height must be positive")]
    NonPositiveHeight,
    #[error("prune factor must be at least 1, got {0}")]
    Beta(f64),
    #[error("slice was not certified exhausted; its count is unreliable")]
    NotExhausted,
    #[error("slice enumerated to height {have} but {need} is required")]
    HeightShortfall { have: String, need: String },
    #[error("smoothing width must lie in (0, 1/2), got {0}")]
    Epsilon(String),
    #[error("orbit cache version {found} does not match {expected}")]
    CacheVersion { found: u32, expected: u32 },
    #[error("malformed orbit cache: {0}")]
    Cache(String),
}

/// A bottom row `(c, d)` of Γ with its value `f = c^2 + d^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrbitPoint {
    pub fvalue: u128,
    pub c: i128,
    pub d: i128,
}

impl OrbitPoint {
    pub fn new(c: i128, d: i128) -> Self {
        let f = c.unsigned_abs().pow(2) + d.unsigned_abs().pow(2);
        OrbitPoint { fvalue: f, c, d }
    }
}

/// Counters from one breadth-first search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub visited: usize,
    pub expanded: usize,
    pub depth: usize,
}

/// The orbit points of height below `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSlice {
    height: BigRational,
    beta: f64,
    exhausted: bool,
    presentation_name: String,
    /// Sorted by `(fvalue, c, d)`.
    points: Vec<OrbitPoint>,
    stats: SearchStats,
    audit_stats: Option<SearchStats>,
}

#[derive(Clone, Copy, Debug)]
pub struct EnumerateOptions {
    pub node_cap: usize,
    /// Repeat the search at twice the prune factor and certify the slice
    /// only if both agree.
    pub audit: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions { node_cap: DEFAULT_NODE_CAP, audit: true }
    }
}

/// Enumerates `{(c, d) ∈ (0, 1)Γ : c^2 + d^2 < T}`.
pub fn enumerate_orbit(
    pres: &GroupPresentation,
    height: &BigRational,
    beta: f64,
    opts: EnumerateOptions,
) -> Result<OrbitSlice, OrbitError> {
    if !height.is_positive() {
        return Err(OrbitError::NonPositiveHeight);
    }
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(OrbitError::Beta(beta));
    }
    let (points, stats) = search(pres, height, beta, opts.node_cap)?;
    let (exhausted, audit_stats) = if opts.audit {
        match search(pres, height, 2.0 * beta, opts.node_cap) {
            Ok((audit_points, audit_stats)) => (audit_points == points, Some(audit_stats)),
            Err(OrbitError::NodeCap { .. }) => (false, None),
            Err(e) => return Err(e),
        }
    } else {
        (false, None)
    };
    Ok(OrbitSlice {
        height: height.clone(),
        beta,
        exhausted,
        presentation_name: pres.name().to_string(),
        points,
        stats,
        audit_stats,
    })
}

/// Smallest integer `B` with `n < T  <=>  n < B` for integers `n`.
fn strict_integer_bound(height: &BigRational) -> u128 {
    ratio::floor_u128(&height.ceil()).unwrap_or(u128::MAX)
}

fn search(
    pres: &GroupPresentation,
    height: &BigRational,
    beta: f64,
    node_cap: usize,
) -> Result<(Vec<OrbitPoint>, SearchStats), OrbitError> {
    let h = pres.cusp_width();
    let gens = pres.symmetric_generators();
    let bound = strict_integer_bound(height);
    let prune = beta * beta * 2.0 * ratio::to_f64(height);

    let start = GroupElement::IDENTITY;
    let mut seen: FxHashSet<(i128, i128)> = FxHashSet::default();
    seen.insert(start.bottom_row());
    let mut points = Vec::new();
    let mut frontier = vec![start];
    let mut stats = SearchStats { visited: 1, ..Default::default() };

    let keep = |x: &GroupElement, points: &mut Vec<OrbitPoint>| {
        let (c, d) = x.bottom_row();
        let p = OrbitPoint::new(c, d);
        if p.fvalue < bound {
            points.push(p);
        }
    };
    keep(&start, &mut points);

    while !frontier.is_empty() {
        let depth = stats.depth;
        let children: Vec<Result<Option<Vec<GroupElement>>, GroupError>> = frontier
            .par_iter()
            .map(|x| {
                if x.frobenius_norm_sq()? as f64 > prune {
                    return Ok(None);
                }
                gens.iter()
                    .map(|g| x.multiply(g)?.canonical_coset_rep(h))
                    .collect::<Result<Vec<_>, _>>()
                    .map(Some)
            })
            .collect();

        let mut next = Vec::new();
        for child in children {
            let Some(ys) = child.map_err(|_| OrbitError::Overflow { word_length: depth + 1 })? else {
                continue;
            };
            stats.expanded += 1;
            for y in ys {
                if seen.insert(y.bottom_row()) {
                    keep(&y, &mut points);
                    next.push(y);
                }
            }
        }
        stats.visited = seen.len();
        if seen.len() > node_cap {
            return Err(OrbitError::NodeCap {
                cap: node_cap,
                depth,
                visited: seen.len(),
                expanded: stats.expanded,
                points: points.len(),
            });
        }
        if !next.is_empty() {
            stats.depth += 1;
        }
        frontier = next;
    }
    points.sort_unstable();
    Ok((points, stats))
}

impl OrbitSlice {
    pub fn height(&self) -> &BigRational {
        &self.height
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn presentation_name(&self) -> &str {
        &self.presentation_name
    }

    pub fn points(&self) -> &[OrbitPoint] {
        &self.points
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    pub fn audit_stats(&self) -> Option<SearchStats> {
        self.audit_stats
    }

    /// True when `-I` was reached, i.e. the coset with bottom row `(0, -1)`
    /// is in the slice (requires `T > 1`).
    pub fn contains_negative_identity(&self) -> bool {
        self.points.binary_search(&OrbitPoint::new(0, -1)).is_ok()
    }

    /// Points below a smaller height, as a slice of its own.
    pub fn restrict(&self, height: &BigRational) -> Result<OrbitSlice, OrbitError> {
        if height > &self.height {
            return Err(OrbitError::HeightShortfall {
                have: ratio::to_string(&self.height),
                need: ratio::to_string(height),
            });
        }
        let bound = strict_integer_bound(height);
        let end = self.points.partition_point(|p| p.fvalue < bound);
        Ok(OrbitSlice { height: height.clone(), points: self.points[..end].to_vec(), ..self.clone() })
    }

    /// Number of points with `f < bound` for an integer bound, without
    /// copying.
    pub fn count_below(&self, bound: u128) -> usize {
        self.points.partition_point(|p| p.fvalue < bound)
    }

    /// Serializes to the versioned cache schema
    /// `{version, presentation_name, T, beta, exhausted, points: [[c, d], ...]}`.
    pub fn to_cache_json(&self) -> String {
        let file = CacheFile {
            version: CACHE_VERSION,
            presentation_name: self.presentation_name.clone(),
            height: ratio::to_string(&self.height),
            beta: self.beta,
            exhausted: self.exhausted,
            points: self.points.iter().map(|p| [p.c, p.d]).collect(),
        };
        serde_json::to_string(&file).expect("orbit cache serializes")
    }

    pub fn from_cache_json(text: &str) -> Result<OrbitSlice, OrbitError> {
        let file: CacheFile = serde_json::from_str(text).map_err(|e| OrbitError::Cache(e.to_string()))?;
        if file.version != CACHE_VERSION {
            return Err(OrbitError::CacheVersion { found: file.version, expected: CACHE_VERSION });
        }
        let height = ratio::parse_rational(&file.height).map_err(|e| OrbitError::Cache(e.to_string()))?;
        let bound = strict_integer_bound(&height);
        let mut points: Vec<OrbitPoint> = file.points.iter().map(|&[c, d]| OrbitPoint::new(c, d)).collect();
        points.sort_unstable();
        if points.windows(2).any(|w| w[0] == w[1]) || points.iter().any(|p| p.fvalue >= bound) {
            return Err(OrbitError::Cache("points are not distinct rows below the height".into()));
        }
        Ok(OrbitSlice {
            height,
            beta: file.beta,
            exhausted: file.exhausted,
            presentation_name: file.presentation_name,
            points,
            stats: SearchStats::default(),
            audit_stats: None,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    presentation_name: String,
    #[serde(rename = "T")]
    height: String,
    beta: f64,
    exhausted: bool,
    points: Vec<[i128; 2]>,
}

/// `|𝒪(T)|`, refused for slices that failed the prune audit.
pub fn count(slice: &OrbitSlice) -> Result<usize, OrbitError> {
    if !slice.exhausted {
        return Err(OrbitError::NotExhausted);
    }
    Ok(slice.points.len())
}

/// How orbit points are weighted in `a_n(T)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// Indicator of `f < T`.
    Sharp,
    /// Linear ramp from 1 at `T/(1+ε)` down to 0 at `T/(1-ε)`.
    Smooth(BigRational),
}

impl WeightMode {
    pub fn smooth(epsilon: BigRational) -> Result<Self, OrbitError> {
        check_epsilon(&epsilon)?;
        Ok(WeightMode::Smooth(epsilon))
    }

    /// `ε = 0` selects the sharp cutoff.
    pub fn from_epsilon(epsilon: BigRational) -> Result<Self, OrbitError> {
        if epsilon.is_zero() {
            Ok(WeightMode::Sharp)
        } else {
            Self::smooth(epsilon)
        }
    }

    pub fn epsilon(&self) -> BigRational {
        match self {
            WeightMode::Sharp => BigRational::zero(),
            WeightMode::Smooth(eps) => eps.clone(),
        }
    }

    /// Height an orbit slice must reach so that every point of positive
    /// weight at height `T` is present.
    pub fn enumeration_height(&self, height: &BigRational) -> BigRational {
        match self {
            WeightMode::Sharp => height.clone(),
            WeightMode::Smooth(eps) => height / (BigRational::one() - eps),
        }
    }
}

fn check_epsilon(eps: &BigRational) -> Result<(), OrbitError> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if !eps.is_positive() || eps >= &half {
        return Err(OrbitError::Epsilon(ratio::to_string(eps)));
    }
    Ok(())
}

/// `w_T` evaluated at an f-value: 1 up to `T/(1+ε)`, 0 from `T/(1-ε)` on,
/// linear in between.
pub fn smoothed_weight(n: u128, height: &BigRational, eps: &BigRational) -> Result<BigRational, OrbitError> {
    check_epsilon(eps)?;
    let one = BigRational::one();
    let lower = height / (&one + eps);
    let upper = height / (&one - eps);
    let n = ratio::from_u128(n);
    Ok(if n <= lower {
        one
    } else if n >= upper {
        BigRational::zero()
    } else {
        (&upper - &n) / (&upper - &lower)
    })
}

/// Finitely supported `n -> a_n(T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    height: BigRational,
    mode: WeightMode,
    entries: BTreeMap<u128, BigRational>,
}

impl WeightTable {
    pub fn height(&self) -> &BigRational {
        &self.height
    }

    pub fn mode(&self) -> &WeightMode {
        &self.mode
    }

    pub fn entries(&self) -> &BTreeMap<u128, BigRational> {
        &self.entries
    }

    pub fn get(&self, n: u128) -> BigRational {
        self.entries.get(&n).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `Σ_n a_n`.
    pub fn total(&self) -> BigRational {
        sum_rationals(self.entries.values())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<u128> {
        self.entries.keys().next_back().copied()
    }
}

/// Sums rationals through a common-denominator accumulator; much cheaper
/// than repeated normalizing `BigRational` additions when most terms share
/// a denominator.
pub(crate) fn sum_rationals<'a>(terms: impl IntoIterator<Item = &'a BigRational>) -> BigRational {
    let mut by_denom: BTreeMap<&BigInt, BigInt> = BTreeMap::new();
    for t in terms {
        *by_denom.entry(t.denom()).or_insert_with(BigInt::zero) += t.numer();
    }
    by_denom.into_iter().fold(BigRational::zero(), |acc, (den, num)| acc + BigRational::new(num, den.clone()))
}

/// `a_n(T) = Σ_{f(γ) = n} w_T(γ)`.
pub fn weight_table(slice: &OrbitSlice, height: &BigRational, mode: &WeightMode) -> Result<WeightTable, OrbitError> {
    let need = mode.enumeration_height(height);
    if slice.height < need {
        return Err(OrbitError::HeightShortfall {
            have: ratio::to_string(&slice.height),
            need: ratio::to_string(&need),
        });
    }
    let mut entries: BTreeMap<u128, BigRational> = BTreeMap::new();
    for p in &slice.points {
        let w = match mode {
            WeightMode::Sharp => {
                if ratio::from_u128(p.fvalue) < *height {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
            WeightMode::Smooth(eps) => smoothed_weight(p.fvalue, height, eps)?,
        };
        if !w.is_zero() {
            *entries.entry(p.fvalue).or_insert_with(BigRational::zero) += w;
        }
    }
    Ok(WeightTable { height: height.clone(), mode: mode.clone(), entries })
}

/// Which prime-factor count defines "at most R prime factors".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorCount {
    /// Ω(n), with multiplicity.
    #[default]
    WithMultiplicity,
    /// ω(n), distinct primes.
    Distinct,
}

/// `|𝒪(T, R)|`: points whose f-value has at most `r` prime factors.
pub fn almost_prime_count(slice: &OrbitSlice, r: u32, kind: FactorCount) -> Result<usize, OrbitError> {
    if !slice.exhausted {
        return Err(OrbitError::NotExhausted);
    }
    let Some(max) = slice.points.last().map(|p| p.fvalue) else {
        return Ok(0);
    };
    let table = PrimeTable::for_values_up_to(max);
    Ok(slice
        .points
        .par_iter()
        .filter(|p| {
            let k = match kind {
                FactorCount::WithMultiplicity => table.big_omega(p.fvalue),
                FactorCount::Distinct => table.small_omega(p.fvalue),
            };
            k <= r
        })
        .count())
}

/// Checks that `n -> f((0, 1) γ α^n)`, with `α = (1, h; 0, 1)`, is a
/// polynomial of degree at most two on `0..=n_max` (third differences
/// vanish).
pub fn unipotent_slice_check(pres: &GroupPresentation, gamma: &GroupElement, n_max: usize) -> Result<bool, GroupError> {
    let alpha = pres.cusp_generator();
    let mut values = Vec::with_capacity(n_max + 1);
    let mut g = *gamma;
    for _ in 0..=n_max {
        let (c, d) = g.bottom_row();
        let f = c.checked_mul(c).zip(d.checked_mul(d)).and_then(|(x, y)| x.checked_add(y));
        values.push(f.ok_or(GroupError::Overflow)?);
        g = g.multiply(&alpha)?;
    }
    let mut diffs = values;
    for _ in 0..3 {
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(diffs.iter().all(|&x| x == 0))
}
