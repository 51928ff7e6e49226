//! The five subcommands. Each writes its artifacts under `out_dir`, prints a
//! short summary to `out` and returns whether its checks passed. Timings and
//! cache status go to stderr so that artifacts and stdout depend on the
//! config alone.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use sha2::{Digest, Sha256};
use thinsieve::arith::{factorize, is_prime, squarefree_up_to};
use thinsieve::congruence::{density, is_onto, project, CongruenceError, DensityRecord};
use thinsieve::orbit::{
    self, enumerate_orbit, EnumerateOptions, FactorCount, OrbitError, OrbitSlice, WeightMode,
};
use thinsieve::ratio;
use thinsieve::sieve::{admissible_r, run_sieve, sieve_level, SieveConfig};
use thinsieve::spectral::{self, choose_b, fit_growth, gap_presets, GrowthFit};
use thinsieve::DensityTable;

use crate::artifact::*;
use crate::config::RunConfig;

/// Smallest height sampled for the growth table.
const GROWTH_MIN_HEIGHT: f64 = 10.0;
/// Growth samples span at most this many decades below T.
const GROWTH_DECADES: i32 = 3;

fn weight_mode(cfg: &RunConfig) -> Result<WeightMode> {
    Ok(WeightMode::from_epsilon(cfg.epsilon.clone())?)
}

fn cache_path(cfg: &RunConfig, height: &BigRational) -> Result<PathBuf> {
    let mut h = Sha256::new();
    h.update(serde_json::to_string(&cfg.group)?.as_bytes());
    h.update(ratio::to_string(height).as_bytes());
    h.update(cfg.beta.to_string().as_bytes());
    let key = hex::encode(h.finalize());
    let name: String =
        cfg.group.name().chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    Ok(cfg.cache_dir.join(format!("orbit-{name}-{}.json", &key[..16])))
}

/// The slice up to the enumeration height for `cfg`, from the cache when a
/// matching entry exists. Returns the slice and whether the cache was hit.
pub fn load_or_enumerate(cfg: &RunConfig) -> Result<(OrbitSlice, bool)> {
    let height = weight_mode(cfg)?.enumeration_height(&cfg.height);
    let path = cache_path(cfg, &height)?;
    if path.exists() {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        match OrbitSlice::from_cache_json(&text) {
            Ok(slice)
                if slice.presentation_name() == cfg.group.name()
                    && slice.height() == &height
                    && slice.beta() == cfg.beta =>
            {
                eprintln!("orbit cache hit: {}", path.display());
                return Ok((slice, true));
            }
            Ok(_) => eprintln!("warning: {} does not match this run; re-enumerating", path.display()),
            Err(e @ OrbitError::CacheVersion { .. }) => eprintln!("warning: {e}; re-enumerating"),
            Err(e) => eprintln!("warning: {}: {e}; re-enumerating", path.display()),
        }
    }
    let start = Instant::now();
    let slice =
        enumerate_orbit(&cfg.group, &height, cfg.beta, EnumerateOptions { node_cap: cfg.node_cap, audit: true })?;
    let st = slice.stats();
    eprintln!(
        "enumerated {} points in {:.2?} (visited {}, expanded {}, depth {})",
        slice.points().len(),
        start.elapsed(),
        st.visited,
        st.expanded,
        st.depth
    );
    write_text(&path, &slice.to_cache_json())?;
    Ok((slice, false))
}

/// Counts at `T 10^{-j/2}` for `j = 0, 1, ...`, never below
/// [`GROWTH_MIN_HEIGHT`] and at most [`GROWTH_DECADES`] decades below `T`.
pub fn growth_points(slice: &OrbitSlice, height: f64) -> Vec<GrowthPoint> {
    let mut pts = Vec::new();
    for j in 0..=2 * GROWTH_DECADES {
        let h = height / 10f64.powf(j as f64 / 2.0);
        if h < GROWTH_MIN_HEIGHT {
            break;
        }
        pts.push(GrowthPoint { height: h, count: slice.count_below(h.ceil() as u128) as u64 });
    }
    pts.reverse();
    pts
}

fn fit_points(points: &[GrowthPoint]) -> Result<GrowthFit> {
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.height, p.count as f64)).collect();
    fit_growth(&pairs).map_err(|e| anyhow!("cannot fit the growth exponent ({e}); pass --delta or raise --height"))
}

/// The growth exponent: `--delta` if set, otherwise a fit on the slice.
fn growth_exponent(cfg: &RunConfig, slice: &OrbitSlice) -> Result<(f64, &'static str, Option<GrowthFit>)> {
    let counted = slice.restrict(&cfg.height)?;
    let fit = fit_points(&growth_points(&counted, cfg.height_f64()));
    match (cfg.delta, fit) {
        (Some(d), fit) => Ok((d, "override", fit.ok())),
        (None, Ok(fit)) => Ok((fit.delta_hat, "fit", Some(fit))),
        (None, Err(e)) => Err(e),
    }
}

fn require_exhausted(slice: &OrbitSlice) -> Result<()> {
    if !slice.exhausted() {
        bail!("orbit slice failed the prune audit at beta = {}; raise --beta", slice.beta());
    }
    Ok(())
}

pub fn cmd_orbit(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let (slice, _) = load_or_enumerate(cfg)?;
    let counted = slice.restrict(&cfg.height)?;
    let count = counted.points().len() as u64;
    let parity = if count % 2 == 0 { "even" } else { "odd" };
    writeln!(out, "group {}  T {}  beta {}", cfg.group.name(), ratio::to_string(&cfg.height), cfg.beta)?;
    writeln!(out, "count {count}{}", if slice.exhausted() { "" } else { " (not certified)" })?;
    writeln!(out, "parity {parity}")?;
    writeln!(out, "exhausted {}", slice.exhausted())?;
    let data = OrbitData {
        presentation: cfg.group.clone(),
        height: ratio::to_string(&cfg.height),
        enumeration_height: ratio::to_string(slice.height()),
        beta: cfg.beta,
        exhausted: slice.exhausted(),
        count,
        parity: parity.into(),
        contains_negative_identity: counted.contains_negative_identity(),
        growth: growth_points(&counted, cfg.height_f64()),
    };
    write_artifact(&cfg.out_dir, "orbit.json", "orbit", &cfg.hash(), data)?;
    Ok(slice.exhausted())
}

fn density_row(rec: &DensityRecord, bad: u64, onto: Option<bool>) -> DensityRow {
    DensityRow {
        q: rec.q,
        o_q: rec.o_q,
        index: rec.index,
        omega: ratio::to_string(&rec.omega),
        ramified_flag: num_integer::gcd(rec.q, bad) > 1,
        onto,
    }
}

pub fn cmd_density(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let qs = squarefree_up_to(cfg.prime_bound);
    let results: Vec<(u64, Result<(DensityRecord, Option<bool>), CongruenceError>)> = {
        use rayon::prelude::*;
        qs.par_iter()
            .map(|&q| {
                let r = project(&cfg.group, q, cfg.element_budget).and_then(|pg| {
                    let onto = if is_prime(q) { Some(is_onto(&pg)?) } else { None };
                    Ok((density(&pg), onto))
                });
                (q, r)
            })
            .collect()
    };

    let mut records = std::collections::BTreeMap::new();
    let mut budget_failures = Vec::new();
    for (q, r) in results {
        match r {
            Ok(v) => {
                records.insert(q, v);
            }
            Err(e) => {
                eprintln!("warning: q = {q}: {e}");
                budget_failures.push(BudgetFailure { q, message: e.to_string() });
            }
        }
    }
    let ramified: Vec<u64> =
        records.iter().filter(|(_, (_, onto))| *onto == Some(false)).map(|(&q, _)| q).collect();
    let bad: u64 = ramified.iter().product();

    // ω(q) against ω(bad part) Π ω(p) over the unramified primes of q.
    let mut checked = 0;
    let mut failures = Vec::new();
    for (&q, (rec, _)) in &records {
        let factors = factorize(q);
        if factors.len() < 2 {
            continue;
        }
        let bad_part: u64 = factors.iter().map(|&(p, _)| p).filter(|p| ramified.contains(p)).product();
        let mut predicted = BigRational::one();
        let mut complete = true;
        let divisors = factors.iter().map(|&(p, _)| p).filter(|p| !ramified.contains(p)).chain(Some(bad_part));
        for d in divisors.filter(|&d| d > 1) {
            match records.get(&d) {
                Some((r, _)) => predicted *= &r.omega,
                None => complete = false,
            }
        }
        if !complete {
            continue;
        }
        checked += 1;
        if predicted != rec.omega {
            failures.push(q);
        }
    }

    let rows: Vec<DensityRow> = records.values().map(|(rec, onto)| density_row(rec, bad, *onto)).collect();
    let joined: Vec<String> = ramified.iter().map(u64::to_string).collect();
    writeln!(out, "ramified {}", if joined.is_empty() { "none".to_string() } else { joined.join(" ") })?;
    for row in &rows {
        let flag = if row.ramified_flag { "  ramified" } else { "" };
        writeln!(out, "q {:>4}  omega {:>8}  ({} / {}){flag}", row.q, row.omega, row.o_q, row.index)?;
    }
    writeln!(out, "multiplicativity {}/{} agree", checked - failures.len(), checked)?;
    if !budget_failures.is_empty() {
        writeln!(out, "budget exceeded for {} moduli", budget_failures.len())?;
    }

    let csv_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            let w = ratio::parse_rational(&r.omega).expect("own output");
            format!("{},{},{},{},{},{}", r.q, r.o_q, r.index, w.numer(), w.denom(), u8::from(r.ramified_flag))
        })
        .collect();
    let hash = cfg.hash();
    write_csv(&cfg.out_dir.join("density.csv"), &hash, "q,o_q,index,omega_num,omega_den,ramified_flag", &csv_rows)?;
    let data = DensityData {
        prime_bound: cfg.prime_bound,
        ramified,
        rows,
        multiplicativity: Multiplicativity { checked, failures: failures.clone() },
        budget_failures,
    };
    write_artifact(&cfg.out_dir, "density.json", "density", &hash, data)?;
    Ok(failures.is_empty())
}

fn decade_ratios(slice: &OrbitSlice, height: &BigRational, delta: f64, r_list: &[u32]) -> Result<Vec<DecadeRatio>> {
    let mut rows = Vec::new();
    let mut k = 1u32;
    loop {
        let h = BigRational::from_integer(BigInt::from(10u32).pow(k));
        if &h > height {
            break;
        }
        let sub = slice.restrict(&h)?;
        let t = 10f64.powi(k as i32);
        for &r in r_list {
            let count = orbit::almost_prime_count(&sub, r, FactorCount::WithMultiplicity)? as u64;
            rows.push(DecadeRatio { decade: k, r, count, ratio: count as f64 * t.ln() / t.powf(delta) });
        }
        k += 1;
    }
    Ok(rows)
}

pub fn cmd_sieve(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let (slice, _) = load_or_enumerate(cfg)?;
    require_exhausted(&slice)?;
    let (delta, delta_source, _) = growth_exponent(cfg, &slice)?;
    let theta = cfg.theta_value();

    let (r_list, r_source) = if !cfg.r_list.is_empty() {
        (cfg.r_list.clone(), "config")
    } else {
        match admissible_r(delta, theta) {
            Ok(r) => (vec![r], "admissible"),
            Err(e) => {
                eprintln!("note: no admissible R ({e}); pass --r-list to count almost primes");
                (Vec::new(), "undefined")
            }
        }
    };
    let sieve_cfg = SieveConfig {
        height: cfg.height.clone(),
        mode: weight_mode(cfg)?,
        delta,
        theta,
        level_override: cfg.level_q,
        z: cfg.z,
        r_list: r_list.clone(),
        factor_count: FactorCount::WithMultiplicity,
    };
    let start = Instant::now();
    let densities = DensityTable::build(&cfg.group, cfg.prime_bound, sieve_cfg.prime_limit(), cfg.element_budget)?;
    let report = run_sieve(&slice, &densities, &sieve_cfg)?;
    eprintln!("sieve finished in {:.2?}", start.elapsed());

    let t_text = ratio::to_string(&cfg.height);
    writeln!(out, "T {t_text}  delta_hat {delta:.6} ({delta_source})  theta {theta} ({})", cfg.theta)?;
    match report.q_theory {
        Some(q) => writeln!(out, "Q_theory {q:.6}")?,
        None => writeln!(out, "Q_theory undefined (theta >= delta_hat)")?,
    }
    writeln!(out, "Q_used {}  z {}", report.q_used, report.z)?;
    writeln!(out, "X {}", ratio::to_string(&report.total_mass))?;
    writeln!(out, "S_direct == S_mobius: {}", if report.legendre_exact { "exact" } else { "MISMATCH" })?;
    writeln!(out, "S(z) {}", ratio::to_string(&report.s_direct))?;
    writeln!(out, "V(z) {} ~ {:.6}", ratio::to_string(&report.v_z), report.v_z_approx)?;
    writeln!(out, "remainder_sum {:.6}  ratio {:.6e}", ratio::to_f64(&report.remainder_sum), report.remainder_ratio)?;
    for row in &report.almost_primes {
        writeln!(out, "R {}  count {}  ratio {:.6}", row.r, row.count, row.ratio)?;
    }

    let hash = cfg.hash();
    let q_theory = report.q_theory.map(|q| q.to_string()).unwrap_or_default();
    let prefix = format!(
        "{},{},{},{},{},{},{}",
        ratio::to_string(&report.height),
        q_theory,
        report.q_used,
        report.z,
        ratio::to_string(&report.s_direct),
        ratio::to_string(&report.v_z),
        ratio::to_string(&report.remainder_sum)
    );
    let mut rows: Vec<String> =
        report.almost_primes.iter().map(|a| format!("{prefix},{},{},{}", a.r, a.count, a.ratio)).collect();
    if rows.is_empty() {
        rows.push(format!("{prefix},,,"));
    }
    write_csv(
        &cfg.out_dir.join("sieve.csv"),
        &hash,
        "T,Q_theory,Q_used,z,S_value,V_z,remainder_sum,R,count_R,ratio",
        &rows,
    )?;
    let counted = slice.restrict(&cfg.height)?;
    let ok = report.legendre_exact;
    let data = SieveData {
        delta_hat: delta,
        delta_source: delta_source.into(),
        theta_preset: cfg.theta.clone(),
        r_source: r_source.into(),
        decade_ratios: decade_ratios(&counted, &cfg.height, delta, &r_list)?,
        report,
    };
    write_artifact(&cfg.out_dir, "sieve.json", "sieve", &hash, data)?;
    Ok(ok)
}

/// Representative `(δ, θ)` pairs for the three corollary rows.
fn corollary_rows() -> Result<Vec<CorollaryRow>> {
    [("i", 0.995, "5/6", 5.0 / 6.0), ("ii", 1.0, "39/64", 39.0 / 64.0), ("iii", 0.95, "1/2", 0.5)]
        .into_iter()
        .map(|(label, delta, theta_text, theta)| {
            Ok(CorollaryRow { label: label.into(), delta, theta: theta_text.into(), r: admissible_r(delta, theta)? })
        })
        .collect()
}

pub fn cmd_spectral(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let (slice, _) = load_or_enumerate(cfg)?;
    require_exhausted(&slice)?;
    let counted = slice.restrict(&cfg.height)?;
    let fit = fit_points(&growth_points(&counted, cfg.height_f64()))?;
    let (delta, delta_source) = match cfg.delta {
        Some(d) => (d, "override"),
        None => (fit.delta_hat, "fit"),
    };
    let t = cfg.height_f64();
    let b = choose_b(t)?;
    let s = delta;
    // Both kernels are singular at s = 1/2.
    let kernel_k = spectral::kernel_k_real(t, b, s).ok();
    let kernel_l = spectral::kernel_l_real(t, b, s).ok();
    let model = |x: f64| fit.c0_hat * x.powf(s);
    let reconstruction_error =
        spectral::reconstruct(t, b, s, model(1.0), model(b)).ok().map(|r| (r - model(t)).abs() / model(t));
    let eps = ratio::to_f64(&cfg.epsilon);
    let presets: Vec<PresetRow> = gap_presets()
        .into_iter()
        .map(|p| PresetRow {
            name: p.name.into(),
            theta: p.theta.to_string(),
            admissible_r: admissible_r(delta, p.theta_f64()).ok(),
            q_theory: sieve_level(t, delta, p.theta_f64(), eps).ok(),
        })
        .collect();
    let corollary = corollary_rows()?;

    writeln!(out, "delta_hat {:.6} ({delta_source})  c0 {:.6}  residual {:.3e}", delta, fit.c0_hat, fit.residual)?;
    for (h, n) in fit.heights.iter().zip(&fit.counts) {
        writeln!(out, "  T {h:>14.3}  count {n}")?;
    }
    writeln!(out, "b {b:.9}  steps {}", (t.ln() / b.ln()).round())?;
    writeln!(out, "lambda0 {:.6}", spectral::lambda_from_s(s))?;
    if let Some(e) = reconstruction_error {
        writeln!(out, "kernel reconstruction relative error {e:.3e}")?;
    }
    for p in &presets {
        let r = p.admissible_r.map_or_else(|| "undefined".to_string(), |r| r.to_string());
        writeln!(out, "preset {} theta {}  R {r}", p.name, p.theta)?;
    }
    for c in &corollary {
        writeln!(out, "corollary ({}) delta {} theta {}  R {}", c.label, c.delta, c.theta, c.r)?;
    }
    let data = SpectralData {
        delta_hat: delta,
        delta_source: delta_source.into(),
        height: t,
        b,
        steps: (t.ln() / b.ln()).round(),
        s,
        lambda0: spectral::lambda_from_s(s),
        kernel_k,
        kernel_l,
        reconstruction_error,
        presets,
        corollary,
        fit,
    };
    write_artifact(&cfg.out_dir, "spectral.json", "spectral", &cfg.hash(), data)?;
    Ok(true)
}

pub fn cmd_report(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool> {
    let dir = &cfg.out_dir;
    let orbit = read_artifact::<OrbitData>(dir, "orbit.json", "orbit")?;
    let dens = read_artifact::<DensityData>(dir, "density.json", "density")?;
    let sieve = read_artifact::<SieveData>(dir, "sieve.json", "sieve")?;
    let spec = read_artifact::<SpectralData>(dir, "spectral.json", "spectral")?;

    let present = [
        orbit.as_ref().map(|a| a.config_hash.clone()),
        dens.as_ref().map(|a| a.config_hash.clone()),
        sieve.as_ref().map(|a| a.config_hash.clone()),
        spec.as_ref().map(|a| a.config_hash.clone()),
    ];
    let missing: Vec<String> =
        STEPS.iter().zip(&present).filter(|(_, h)| h.is_none()).map(|((step, _), _)| step.to_string()).collect();
    if missing.len() == STEPS.len() {
        bail!("no artifacts in {}; run these steps first: {}", dir.display(), missing.join(", "));
    }
    let hash = cfg.hash();
    let mismatched: Vec<String> = STEPS
        .iter()
        .zip(&present)
        .filter_map(|((_, file), h)| h.as_ref().filter(|h| **h != hash).map(|h| format!("{file} ({})", &h[..12])))
        .collect();
    if !mismatched.is_empty() {
        bail!(
            "refusing to mix artifacts: config hash {} does not match {}",
            &hash[..12],
            mismatched.join(", ")
        );
    }

    let bundle = ReportBundle {
        config_hash: hash.clone(),
        config: cfg.canonical_text(),
        missing: missing.clone(),
        orbit: orbit.map(|a| a.data),
        density: dens.map(|a| a.data),
        sieve: sieve.map(|a| a.data),
        spectral: spec.map(|a| a.data),
    };

    let growth: Vec<(f64, f64)> = match (&bundle.spectral, &bundle.orbit) {
        (Some(s), _) => s.fit.heights.iter().zip(&s.fit.counts).map(|(&h, &n)| (h, n)).collect(),
        (None, Some(o)) => o.growth.iter().map(|p| (p.height, p.count as f64)).collect(),
        (None, None) => Vec::new(),
    };
    let growth_rows: Vec<String> =
        growth.iter().filter(|(_, n)| *n > 0.0).map(|(h, n)| format!("{},{}", h.ln(), n.ln())).collect();
    write_csv(&dir.join("growth.csv"), &hash, "log_T,log_count", &growth_rows)?;
    let ratio_rows: Vec<String> = bundle
        .sieve
        .iter()
        .flat_map(|s| s.decade_ratios.iter().map(|d| format!("{},{},{}", d.decade, d.r, d.ratio)))
        .collect();
    write_csv(&dir.join("ratio.csv"), &hash, "decade,R,ratio", &ratio_rows)?;
    write_text(&dir.join("bundle.json"), &(serde_json::to_string_pretty(&bundle)? + "\n"))?;

    if let Some(s) = &bundle.spectral {
        writeln!(out, "delta_hat {:.6}", s.delta_hat)?;
        for c in &s.corollary {
            writeln!(out, "corollary ({}) R {}", c.label, c.r)?;
        }
    }
    if let Some(s) = &bundle.sieve {
        writeln!(out, "legendre {}", if s.report.legendre_exact { "exact" } else { "MISMATCH" })?;
    }
    if let Some(d) = &bundle.density {
        writeln!(out, "ramified {:?}", d.ramified)?;
    }
    if missing.is_empty() {
        writeln!(out, "bundle complete")?;
        Ok(true)
    } else {
        writeln!(out, "partial bundle; missing steps: {}", missing.join(", "))?;
        Ok(false)
    }
}

