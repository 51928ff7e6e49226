//! Exact SL2(Z) arithmetic, group presentations and Γ∞-coset
//! canonicalization.
//!
//! Entries are `i128` and every product is overflow-checked. Γ∞ is the
//! strictly unipotent stabilizer `(1, *; 0, 1)`, so `-I` is not in it and the
//! rows `(c, d)` and `(-c, -d)` label different cosets.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("matrix ({a}, {b}; {c}, {d}) has determinant {det}, expected 1")]
    Determinant { a: i128, b: i128, c: i128, d: i128, det: i128 },
    #[error("integer overflow in 128-bit matrix arithmetic")]
    Overflow,
    #[error("cusp width must be positive")]
    CuspWidth,
    #[error("presentation `{name}` has no generators")]
    NoGenerators { name: String },
    #[error("(1, {cusp_width}; 0, 1) is not a word of length <= {max_len} in the generators of `{name}`")]
    CuspNotExpressible { name: String, cusp_width: u64, max_len: usize },
    #[error("presentation parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown presentation preset `{0}`")]
    UnknownPreset(String),
}

/// A matrix `(a, b; c, d)` in SL2(Z).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    a: i128,
    b: i128,
    c: i128,
    d: i128,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 1, b: 0, c: 0, d: 1 };
    pub const NEG_IDENTITY: GroupElement = GroupElement { a: -1, b: 0, c: 0, d: -1 };
    /// `S: z -> -1/z`.
    pub const S: GroupElement = GroupElement { a: 0, b: -1, c: 1, d: 0 };

    pub fn new(a: i128, b: i128, c: i128, d: i128) -> Result<Self, GroupError> {
        let det = a
            .checked_mul(d)
            .zip(b.checked_mul(c))
            .and_then(|(ad, bc)| ad.checked_sub(bc))
            .ok_or(GroupError::Overflow)?;
        if det != 1 {
            return Err(GroupError::Determinant { a, b, c, d, det });
        }
        Ok(GroupElement { a, b, c, d })
    }

    /// `(1, n; 0, 1)`, i.e. `z -> z + n`.
    pub fn translation(n: i128) -> Self {
        GroupElement { a: 1, b: n, c: 0, d: 1 }
    }

    pub fn entries(&self) -> [i128; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn bottom_row(&self) -> (i128, i128) {
        (self.c, self.d)
    }

    pub fn multiply(&self, rhs: &GroupElement) -> Result<GroupElement, GroupError> {
        let dot = |x: i128, y: i128, u: i128, v: i128| -> Result<i128, GroupError> {
            x.checked_mul(y)
                .zip(u.checked_mul(v))
                .and_then(|(p, q)| p.checked_add(q))
                .ok_or(GroupError::Overflow)
        };
        let out = GroupElement {
            a: dot(self.a, rhs.a, self.b, rhs.c)?,
            b: dot(self.a, rhs.b, self.b, rhs.d)?,
            c: dot(self.c, rhs.a, self.d, rhs.c)?,
            d: dot(self.c, rhs.b, self.d, rhs.d)?,
        };
        debug_assert_eq!(out.determinant(), Some(1));
        Ok(out)
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn negate(&self) -> GroupElement {
        GroupElement { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    pub fn determinant(&self) -> Option<i128> {
        self.a.checked_mul(self.d)?.checked_sub(self.b.checked_mul(self.c)?)
    }

    /// True iff the element is `(1, *; 0, 1)`.
    pub fn stabilizes_infinity(&self) -> bool {
        self.a == 1 && self.c == 0 && self.d == 1
    }

    /// Representative of the coset `Γ∞ x` where Γ∞ is generated by
    /// `(1, h; 0, 1)`. The bottom row is untouched. For `c != 0` the top-left
    /// entry is reduced into `[0, h|c|)`; for `c == 0` the top-right entry is
    /// reduced into `[0, h)`.
    pub fn canonical_coset_rep(&self, cusp_width: u64) -> Result<GroupElement, GroupError> {
        assert!(cusp_width >= 1, "cusp width must be positive");
        let h = cusp_width as i128;
        if self.c == 0 {
            return Ok(GroupElement { b: self.b.rem_euclid(h), ..*self });
        }
        let modulus = h.checked_mul(self.c.abs()).ok_or(GroupError::Overflow)?;
        let a = self.a.rem_euclid(modulus);
        // ad - bc = 1 determines b once a is fixed.
        let b = a
            .checked_mul(self.d)
            .and_then(|ad| ad.checked_sub(1))
            .ok_or(GroupError::Overflow)?
            / self.c;
        Ok(GroupElement { a, b, c: self.c, d: self.d })
    }

    pub fn frobenius_norm_sq(&self) -> Result<u128, GroupError> {
        self.entries().iter().try_fold(0u128, |acc, &x| {
            let ux = x.unsigned_abs();
            ux.checked_mul(ux).and_then(|sq| acc.checked_add(sq)).ok_or(GroupError::Overflow)
        })
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}; {}, {})", self.a, self.b, self.c, self.d)
    }
}

/// Default cap on word length when verifying the cusp generator.
pub const DEFAULT_CUSP_WORD_CAP: usize = 8;

/// A finitely generated subgroup Γ of SL2(Z) with a trusted cusp width `h`:
/// Γ∞ = <(1, h; 0, 1)>.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPresentation {
    name: String,
    generators: Vec<GroupElement>,
    cusp_width: u64,
}

impl GroupPresentation {
    /// Builds a presentation and checks that `(1, h; 0, 1)` is a word of length
    /// at most `word_cap` in the generators and their inverses.
    pub fn new(
        name: impl Into<String>,
        generators: Vec<GroupElement>,
        cusp_width: u64,
        word_cap: usize,
    ) -> Result<Self, GroupError> {
        let name = name.into();
        if cusp_width == 0 {
            return Err(GroupError::CuspWidth);
        }
        if generators.is_empty() {
            return Err(GroupError::NoGenerators { name });
        }
        for g in &generators {
            let [a, b, c, d] = g.entries();
            GroupElement::new(a, b, c, d)?;
        }
        let pres = GroupPresentation { name, generators, cusp_width };
        if !pres.cusp_generator_within(word_cap)? {
            return Err(GroupError::CuspNotExpressible {
                name: pres.name,
                cusp_width,
                max_len: word_cap,
            });
        }
        Ok(pres)
    }

    /// Hecke group <T^4, S>, cusp width 4.
    pub fn hecke4() -> Self {
        GroupPresentation {
            name: "hecke4".into(),
            generators: vec![GroupElement::translation(4), GroupElement::S],
            cusp_width: 4,
        }
    }

    /// The full modular group <T, S>, cusp width 1.
    pub fn sl2z() -> Self {
        GroupPresentation {
            name: "sl2z".into(),
            generators: vec![GroupElement::translation(1), GroupElement::S],
            cusp_width: 1,
        }
    }

    pub fn preset(name: &str) -> Result<Self, GroupError> {
        match name {
            "hecke4" => Ok(Self::hecke4()),
            "sl2z" => Ok(Self::sl2z()),
            other => Err(GroupError::UnknownPreset(other.to_string())),
        }
    }

    /// Parses the plain-text presentation format:
    ///
    /// ```text
    /// # comment
    /// name = hecke4
    /// cusp_width = 4
    /// generator = 1 4 0 1
    /// generator = 0 -1 1 0
    /// ```
    pub fn parse(text: &str) -> Result<Self, GroupError> {
        let mut name = None;
        let mut cusp_width = None;
        let mut word_cap = DEFAULT_CUSP_WORD_CAP;
        let mut generators = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let parse_err = |message: String| GroupError::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let value = value.trim();
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "cusp_width" => {
                    cusp_width = Some(value.parse().map_err(|_| parse_err(format!("bad cusp_width `{value}`")))?)
                }
                "word_cap" => {
                    word_cap = value.parse().map_err(|_| parse_err(format!("bad word_cap `{value}`")))?
                }
                "generator" => {
                    let nums: Vec<i128> = value
                        .split_whitespace()
                        .map(|t| t.parse::<i128>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| parse_err(format!("bad generator `{value}`")))?;
                    let [a, b, c, d] = nums[..] else {
                        return Err(parse_err(format!("generator needs 4 integers, got {}", nums.len())));
                    };
                    generators.push(GroupElement::new(a, b, c, d)?);
                }
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        let name = name.ok_or(GroupError::Parse { line: 0, message: "missing `name`".into() })?;
        let cusp_width =
            cusp_width.ok_or(GroupError::Parse { line: 0, message: "missing `cusp_width`".into() })?;
        Self::new(name, generators, cusp_width, word_cap)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn cusp_width(&self) -> u64 {
        self.cusp_width
    }

    /// `(1, h; 0, 1)`.
    pub fn cusp_generator(&self) -> GroupElement {
        GroupElement::translation(self.cusp_width as i128)
    }

    /// Generators followed by their inverses, without duplicates, in a fixed
    /// order.
    pub fn symmetric_generators(&self) -> Vec<GroupElement> {
        let mut out: Vec<GroupElement> = Vec::with_capacity(2 * self.generators.len());
        for g in self.generators.iter().copied().chain(self.generators.iter().map(|g| g.inverse())) {
            if !out.contains(&g) {
                out.push(g);
            }
        }
        out
    }

    /// Breadth-first word search for the cusp generator.
    fn cusp_generator_within(&self, max_len: usize) -> Result<bool, GroupError> {
        let target = self.cusp_generator();
        let gens = self.symmetric_generators();
        let mut seen = HashSet::from([GroupElement::IDENTITY]);
        let mut frontier = vec![GroupElement::IDENTITY];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for x in &frontier {
                for g in &gens {
                    let y = x.multiply(g)?;
                    if y == target {
                        return Ok(true);
                    }
                    if seen.insert(y) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        Ok(false)
    }
}
