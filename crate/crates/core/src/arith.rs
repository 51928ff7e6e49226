//! Small-integer number theory: prime tables, trial-division factorization,
//! the Möbius function and square-free enumeration.

use num_integer::Roots;

/// All primes strictly below `limit` (sieve of Eratosthenes).
pub fn primes_below(limit: u64) -> Vec<u64> {
    if limit <= 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n];
    let mut primes = Vec::new();
    for i in 2..n {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i.saturating_mul(i);
        while j < n {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut p = 3;
    while p * p <= n {
        if n % p == 0 {
            return false;
        }
        p += 2;
    }
    true
}

/// Prime factorization `[(p, e), ...]` with `p` increasing. `factorize(1)`
/// is empty.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

/// Möbius function; `mobius(0)` is defined as 0.
pub fn mobius(n: u64) -> i8 {
    if n == 0 {
        return 0;
    }
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn is_squarefree(n: u64) -> bool {
    n != 0 && factorize(n).iter().all(|&(_, e)| e == 1)
}

/// Square-free integers in `1..=limit`.
pub fn squarefree_up_to(limit: u64) -> Vec<u64> {
    (1..=limit).filter(|&n| is_squarefree(n)).collect()
}

/// Order of SL2(Z/qZ): `q^3 * prod_{p | q} (1 - p^-2)`.
pub fn sl2_order(q: u64) -> u128 {
    let mut order = (q as u128).pow(3);
    for (p, _) in factorize(q) {
        let p = p as u128;
        order = order / (p * p) * (p * p - 1);
    }
    order
}

/// Counts prime factors using a precomputed table of primes up to the
/// square root of the largest value that will be queried.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    primes: Vec<u64>,
    max_value: u128,
}

impl PrimeTable {
    /// Table able to factor every `n <= max_value`.
    pub fn for_values_up_to(max_value: u128) -> Self {
        let root = max_value.sqrt() as u64;
        PrimeTable { primes: primes_below(root + 2), max_value }
    }

    pub fn max_value(&self) -> u128 {
        self.max_value
    }

    /// Exponents of the prime factorization of `n`, by trial division.
    ///
    /// # Panics
    /// If `n` exceeds the table's range.
    pub fn exponents(&self, n: u128) -> Vec<(u128, u32)> {
        assert!(n <= self.max_value, "{n} is outside the prime table range {}", self.max_value);
        let mut m = n;
        let mut out = Vec::new();
        for &p in &self.primes {
            let p = p as u128;
            if p * p > m {
                break;
            }
            if m % p == 0 {
                let mut e = 0;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                out.push((p, e));
            }
        }
        if m > 1 {
            out.push((m, 1));
        }
        out
    }

    /// Ω(n): prime factors counted with multiplicity. Ω(1) = 0.
    pub fn big_omega(&self, n: u128) -> u32 {
        self.exponents(n).iter().map(|&(_, e)| e).sum()
    }

    /// ω(n): distinct prime factors.
    pub fn small_omega(&self, n: u128) -> u32 {
        self.exponents(n).len() as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_primes() {
        assert_eq!(primes_below(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(primes_below(2).is_empty());
        assert!(primes_below(30).iter().all(|&p| is_prime(p)));
        assert!(!is_prime(1) && !is_prime(91) && is_prime(97));
    }

    #[test]
    fn mobius_values() {
        let expected = [1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0];
        for (n, &mu) in (1..=12).zip(&expected) {
            assert_eq!(mobius(n), mu, "mu({n})");
        }
    }

    #[test]
    fn sl2_orders() {
        assert_eq!(sl2_order(2), 6);
        assert_eq!(sl2_order(5), 120);
        assert_eq!(sl2_order(65), 120 * 2184);
        assert_eq!(sl2_order(4), 48);
    }

    #[test]
    fn omega_counts() {
        let table = PrimeTable::for_values_up_to(10_000);
        assert_eq!(table.big_omega(1), 0);
        assert_eq!(table.big_omega(8), 3);
        assert_eq!(table.small_omega(8), 1);
        assert_eq!(table.big_omega(9_973), 1);
        assert_eq!(table.big_omega(2 * 4_999), 2);
        assert_eq!(table.exponents(360), vec![(2, 3), (3, 2), (5, 1)]);
    }

    #[test]
    fn factorize_agrees_with_table() {
        let table = PrimeTable::for_values_up_to(5_000);
        for n in 1..5_000u64 {
            let a: Vec<(u128, u32)> = factorize(n).into_iter().map(|(p, e)| (p as u128, e)).collect();
            assert_eq!(a, table.exponents(n as u128));
        }
    }
}
