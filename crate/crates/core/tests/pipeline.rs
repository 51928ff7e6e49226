use num_rational::BigRational;
use num_traits::One;
use thinsieve::congruence::DEFAULT_ELEMENT_BUDGET;
use thinsieve::orbit::{self, enumerate_orbit, EnumerateOptions, FactorCount, WeightMode};
use thinsieve::ratio::parse_rational;
use thinsieve::sieve::run_sieve;
use thinsieve::{DensityTable, GroupPresentation, OrbitSlice, SieveConfig};

fn slice(height: &str) -> OrbitSlice {
    let h = parse_rational(height).unwrap();
    enumerate_orbit(&GroupPresentation::hecke4(), &h, 4.0, EnumerateOptions::default()).unwrap()
}

fn config(height: &str, mode: WeightMode, r_list: Vec<u32>) -> SieveConfig {
    SieveConfig {
        height: parse_rational(height).unwrap(),
        mode,
        delta: 0.7,
        theta: 0.5,
        level_override: Some(30),
        z: Some(12.0),
        r_list,
        factor_count: FactorCount::WithMultiplicity,
    }
}

#[test]
fn sharp_report_is_consistent_with_the_slice() {
    let s = slice("2e4");
    let cfg = config("2e4", WeightMode::Sharp, vec![1, 2, 40]);
    let densities = DensityTable::build(&GroupPresentation::hecke4(), 50, cfg.prime_limit(), DEFAULT_ELEMENT_BUDGET)
        .unwrap();
    let report = run_sieve(&s, &densities, &cfg).unwrap();

    assert!(report.legendre_exact);
    assert_eq!(report.total_mass, BigRational::from_integer((s.points().len() as i64).into()));
    assert_eq!(report.ramified, vec![2]);
    assert!(report.remainders.iter().all(|r| r.q % 2 == 1));
    assert_eq!(report.remainders.first().map(|r| r.q), Some(1));
    assert!(report.main_term.as_ref().is_some_and(|m| m.exact));

    // S(z) counts points with no prime factor below z, so it cannot exceed X.
    assert!(report.s_direct <= report.total_mass);
    let counts: Vec<u64> = report.almost_primes.iter().map(|a| a.count).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(counts[2] as usize, s.points().len());
}

#[test]
fn smoothed_mass_is_sandwiched_by_sharp_counts() {
    let eps = parse_rational("1/10").unwrap();
    let mode = WeightMode::smooth(eps.clone()).unwrap();
    let h = parse_rational("1e4").unwrap();
    let wide = slice(&format!("{}", 1e4 / 0.9 + 1.0));
    let table = orbit::weight_table(&wide, &h, &mode).unwrap();
    let below = |t: BigRational| BigRational::from_integer((wide.restrict(&t).unwrap().points().len() as i64).into());
    let one = BigRational::one();
    assert!(below(&h / (&one + &eps)) <= table.total());
    assert!(table.total() <= below(&h / (&one - &eps)));

    let cfg = config("1e4", mode, vec![]);
    let densities = DensityTable::build(&GroupPresentation::hecke4(), 50, cfg.prime_limit(), DEFAULT_ELEMENT_BUDGET)
        .unwrap();
    let report = run_sieve(&wide, &densities, &cfg).unwrap();
    assert!(report.legendre_exact);
    assert_eq!(report.total_mass, table.total());
}
