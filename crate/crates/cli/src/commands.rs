use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use omegadist_core::{
    count_distribution, decay_profile, densities_hp, densities_omega_a, densities_omega_k,
    density_from_stream, evaluate_genfun, expectation_variance_omega_a,
    expectation_variance_omega_k, load_or_build, powerful_tail_bound, powerful_up_to,
    prime_tail_estimate, primes_up_to, spf_up_to, CacheOutcome, CoeffFlag, DensitySeries,
    Error, MultiplicityWeights, PrimeTable, Result, DEFAULT_J_CUTOFF, F64_DIGITS,
};

use crate::cli::{
    Cli, Command, DecayArgs, DensitiesArgs, GenfunEvalArgs, MomentsArgs, PowerfulSumArgs,
    VerifyArgs, WeightSelector,
};
use crate::output::{
    budget_lines, emit, fmt_value, Emission, ErrorBudget, Format, Row, VerifyBlock, VerifyRow,
};

/// Exit code 5 is reserved for a verification-threshold breach; operational
/// failures map per error kind below.
pub struct Outcome {
    pub emission: Emission,
    pub exit: i32,
}

impl Outcome {
    fn ok(emission: Emission) -> Self {
        Outcome { emission, exit: 0 }
    }
}

pub fn dispatch(cli: Cli) -> i32 {
    let started = Instant::now();
    let format = cli.command.format();
    let outcome = match &cli.command {
        Command::Densities(a) => cmd_densities(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Verify(a) => cmd_verify(a),
        Command::PowerfulSum(a) => cmd_powerful_sum(a),
        Command::Decay(a) => cmd_decay(a),
        Command::GenfunEval(a) => cmd_genfun_eval(a),
    };
    match outcome {
        Ok(o) => {
            emit(&o.emission, format, started);
            o.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnsupportedWeights(_) => 3,
        Error::PrecisionExhausted(_) => 4,
        _ => 2,
    }
}

fn resolve_weights(sel: &WeightSelector) -> Result<MultiplicityWeights> {
    match (sel.k, sel.weights.as_deref()) {
        (Some(k), None) => {
            if k < 2 {
                return Err(Error::InvalidArgument(format!(
                    "omega_{k} has no unnormalized limiting distribution \
                     (multiplicity-{k} prime counts do not stabilize); use k >= 2"
                )));
            }
            MultiplicityWeights::omega_k(k)
        }
        (None, Some(s)) => s.parse(),
        _ => Err(Error::InvalidArgument(
            "pass exactly one of --k and --weights".into(),
        )),
    }
}

fn load_primes(limit: u64, cache_dir: Option<&Path>) -> Result<PrimeTable> {
    match cache_dir {
        Some(dir) => {
            let (table, outcome) = load_or_build(dir, limit)?;
            if outcome == CacheOutcome::Corrupt {
                eprintln!("warning: prime cache for limit {limit} was corrupt; rebuilt");
            }
            Ok(table)
        }
        None => primes_up_to(limit),
    }
}

fn parse_k_range(spec: &str) -> Result<(u32, u32)> {
    let err = || {
        Error::InvalidArgument(format!(
            "--k-range wants an inclusive range like 2..5, got {spec:?}"
        ))
    };
    let (lo, hi) = spec.split_once("..").ok_or_else(err)?;
    let lo: u32 = lo.trim().parse().map_err(|_| err())?;
    let hi: u32 = hi.trim().parse().map_err(|_| err())?;
    if lo < 2 || hi < lo {
        return Err(err());
    }
    Ok((lo, hi))
}

fn parse_z(spec: &str) -> Result<Complex64> {
    let err = || {
        Error::InvalidArgument(format!(
            "--z wants a complex point as re,im (e.g. 1,0), got {spec:?}"
        ))
    };
    match spec.split_once(',') {
        Some((re, im)) => {
            let re: f64 = re.trim().parse().map_err(|_| err())?;
            let im: f64 = im.trim().parse().map_err(|_| err())?;
            Ok(Complex64::new(re, im))
        }
        None => {
            let re: f64 = spec.trim().parse().map_err(|_| err())?;
            Ok(Complex64::new(re, 0.0))
        }
    }
}

fn flag_note(flag: CoeffFlag) -> &'static str {
    match flag {
        CoeffFlag::Normal => "",
        CoeffFlag::ClampedNegative => "  (clamped negative)",
        CoeffFlag::StructuralZero => "  (structural zero)",
    }
}

fn run_density_series(
    weights: &MultiplicityWeights,
    m_max: usize,
    precision: u32,
    primes: &PrimeTable,
) -> Result<DensitySeries> {
    if precision > F64_DIGITS {
        return Ok(densities_hp(weights, m_max, precision, primes)?.to_density_series(primes));
    }
    match weights.as_single_omega_k() {
        Some(k) => densities_omega_k(k, m_max, primes),
        None => densities_omega_a(weights, m_max, primes, DEFAULT_J_CUTOFF),
    }
}

fn cmd_densities(a: &DensitiesArgs) -> Result<Outcome> {
    if let Some(range) = &a.k_range {
        return densities_grid(a, range);
    }
    let weights = resolve_weights(&a.selector)?;
    let primes = load_primes(a.prime_limit, a.cache_dir.as_deref())?;
    let series = run_density_series(&weights, a.m_max, a.precision, &primes)?;

    let results: Vec<Row> = series
        .values()
        .iter()
        .enumerate()
        .map(|(m, &value)| Row { m: m as i64, value })
        .collect();
    let mut table = format!("weights   {weights}\n    m  e_m\n");
    for (m, (&v, &flag)) in series.values().iter().zip(series.flags()).enumerate() {
        let _ = writeln!(table, "{m:>5}  {}{}", fmt_value(v), flag_note(flag));
    }
    let emission = Emission {
        command: "densities",
        params: density_params(&weights, a.m_max, a.prime_limit),
        results,
        budget: ErrorBudget {
            prime_tail: Some(series.tail_estimate()),
            powerful_tail: None,
            mass_beyond_m_max: Some(series.mass_beyond_m_max()),
        },
        prime_limit: Some(a.prime_limit),
        precision_digits: series.precision_digits(),
        table: String::new(),
        verify: None,
    };
    budget_lines(&mut table, &emission);
    Ok(Outcome::ok(Emission { table, ..emission }))
}

fn densities_grid(a: &DensitiesArgs, range: &str) -> Result<Outcome> {
    if a.format != Format::Table {
        return Err(Error::InvalidArgument(
            "--k-range renders the multi-k table; use --format table".into(),
        ));
    }
    let (lo, hi) = parse_k_range(range)?;
    let primes = load_primes(a.prime_limit, a.cache_dir.as_deref())?;
    let mut table = String::from("      ");
    for m in 0..=a.m_max {
        let _ = write!(table, "  m={m:<12}");
    }
    table.push('\n');
    for k in lo..=hi {
        let series = run_density_series(
            &MultiplicityWeights::omega_k(k)?,
            a.m_max,
            a.precision,
            &primes,
        )?;
        let _ = write!(table, "k={k:<4}");
        for &v in series.values() {
            let _ = write!(table, "  {:<13}", fmt_value(v));
        }
        table.push('\n');
    }
    let _ = writeln!(table, "prime_limit        {}", a.prime_limit);
    let mut params = Map::new();
    params.insert("k_range".into(), json!(format!("{lo}..{hi}")));
    params.insert("m_max".into(), json!(a.m_max));
    Ok(Outcome::ok(Emission {
        command: "densities",
        params,
        results: Vec::new(),
        budget: ErrorBudget::default(),
        prime_limit: Some(a.prime_limit),
        precision_digits: a.precision,
        table,
        verify: None,
    }))
}

fn density_params(
    weights: &MultiplicityWeights,
    m_max: usize,
    prime_limit: u64,
) -> Map<String, Value> {
    let mut params = Map::new();
    params.insert("weights".into(), json!(weights.to_string()));
    params.insert("m_max".into(), json!(m_max));
    params.insert("prime_limit".into(), json!(prime_limit));
    params
}

fn cmd_moments(a: &MomentsArgs) -> Result<Outcome> {
    if let Some(range) = &a.k_range {
        return moments_grid(a, range);
    }
    let weights = resolve_weights(&a.selector)?;
    let primes = load_primes(a.prime_limit, a.cache_dir.as_deref())?;
    let (e, v) = match weights.as_single_omega_k() {
        Some(k) => expectation_variance_omega_k(k, &primes)?,
        None => expectation_variance_omega_a(&weights, &primes, DEFAULT_J_CUTOFF)?,
    };
    let table = format!(
        "weights      {weights}\nexpectation  {}\nvariance     {}\nprime_limit  {}\n",
        fmt_value(e),
        fmt_value(v),
        a.prime_limit
    );
    let mut params = Map::new();
    params.insert("weights".into(), json!(weights.to_string()));
    params.insert("prime_limit".into(), json!(a.prime_limit));
    let tail = weights
        .min_nonzero_j()
        .map(|k_eff| prime_tail_estimate(k_eff, a.prime_limit));
    Ok(Outcome::ok(Emission {
        command: "moments",
        params,
        results: vec![Row { m: 1, value: e }, Row { m: 2, value: v }],
        budget: ErrorBudget {
            prime_tail: tail,
            powerful_tail: None,
            mass_beyond_m_max: None,
        },
        prime_limit: Some(a.prime_limit),
        precision_digits: F64_DIGITS,
        table,
        verify: None,
    }))
}

fn moments_grid(a: &MomentsArgs, range: &str) -> Result<Outcome> {
    if a.format != Format::Table {
        return Err(Error::InvalidArgument(
            "--k-range renders the multi-k table; use --format table".into(),
        ));
    }
    let (lo, hi) = parse_k_range(range)?;
    let primes = load_primes(a.prime_limit, a.cache_dir.as_deref())?;
    let mut table = String::from("      expectation    variance\n");
    for k in lo..=hi {
        let (e, v) = expectation_variance_omega_k(k, &primes)?;
        let _ = writeln!(table, "k={k:<4}{:<15}{}", fmt_value(e), fmt_value(v));
    }
    let _ = writeln!(table, "prime_limit  {}", a.prime_limit);
    let mut params = Map::new();
    params.insert("k_range".into(), json!(format!("{lo}..{hi}")));
    Ok(Outcome::ok(Emission {
        command: "moments",
        params,
        results: Vec::new(),
        budget: ErrorBudget::default(),
        prime_limit: Some(a.prime_limit),
        precision_digits: F64_DIGITS,
        table,
        verify: None,
    }))
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let weights = resolve_weights(&a.selector)?;
    let report_only = a.x < 1000;
    let spf = spf_up_to(a.x)?;
    let report = count_distribution(a.x, &weights, &spf)?;
    let targets: Vec<i64> = match a.m {
        Some(m) => vec![m],
        None => (0..=a.m_max as i64).collect(),
    };

    let mut budget = ErrorBudget::default();
    let mut prime_limit = None;
    let references: Vec<f64> = if weights.nonneg() {
        let top = targets.iter().copied().max().unwrap_or(0).max(0) as usize;
        let primes = load_primes(a.prime_limit, a.cache_dir.as_deref())?;
        let series = run_density_series(&weights, top, F64_DIGITS, &primes)?;
        budget.prime_tail = Some(series.tail_estimate());
        budget.mass_beyond_m_max = Some(series.mass_beyond_m_max());
        prime_limit = Some(a.prime_limit);
        targets
            .iter()
            .map(|&m| {
                if m < 0 {
                    0.0
                } else {
                    series.values()[m as usize]
                }
            })
            .collect()
    } else {
        let stream = powerful_up_to(a.x_bound)?;
        budget.powerful_tail = Some(powerful_tail_bound(a.x_bound));
        targets
            .iter()
            .map(|&m| density_from_stream(&stream, &weights, m).partial_sum)
            .collect()
    };

    let rows: Vec<VerifyRow> = targets
        .iter()
        .zip(&references)
        .map(|(&m, &reference)| {
            let d = report.deviation_for(m, reference);
            VerifyRow {
                m,
                count: d.count,
                empirical: d.empirical,
                reference: d.reference,
                abs_dev: d.abs_dev,
                c_hat: d.c_hat,
            }
        })
        .collect();
    let passed = rows.iter().all(|r| r.c_hat <= a.c_hat_threshold);

    let mut table = format!("weights   {weights}\nx         {}\n", a.x);
    table.push_str("    m       count  empirical      reference      |dev|        c_hat\n");
    for r in &rows {
        let _ = writeln!(
            table,
            "{:>5}  {:>10}  {:<13}  {:<13}  {:<11}  {:.4}",
            r.m,
            r.count,
            fmt_value(r.empirical),
            fmt_value(r.reference),
            format!("{:.3e}", r.abs_dev),
            r.c_hat
        );
    }
    if report_only {
        let _ = writeln!(
            table,
            "note: x = {} is below the asymptotic regime; c_hat reported, not enforced",
            a.x
        );
    }
    let _ = writeln!(
        table,
        "verdict: {} (threshold c_hat <= {})",
        if passed { "PASS" } else { "FAIL" },
        a.c_hat_threshold
    );

    let mut params = Map::new();
    params.insert("weights".into(), json!(weights.to_string()));
    params.insert("x".into(), json!(a.x));
    params.insert("c_hat_threshold".into(), json!(a.c_hat_threshold));
    if weights.nonneg() {
        params.insert("prime_limit".into(), json!(a.prime_limit));
    } else {
        params.insert("x_bound".into(), json!(a.x_bound));
    }
    let results = rows
        .iter()
        .map(|r| Row { m: r.m, value: r.empirical })
        .collect();
    let exit = if passed || report_only { 0 } else { 5 };
    Ok(Outcome {
        emission: Emission {
            command: "verify",
            params,
            results,
            budget,
            prime_limit,
            precision_digits: F64_DIGITS,
            table,
            verify: Some(VerifyBlock {
                c_hat_threshold: a.c_hat_threshold,
                report_only,
                passed,
                rows,
            }),
        },
        exit,
    })
}

fn cmd_powerful_sum(a: &PowerfulSumArgs) -> Result<Outcome> {
    let weights = resolve_weights(&a.selector)?;
    let stream = powerful_up_to(a.x_bound)?;
    let r = density_from_stream(&stream, &weights, a.m);
    let table = format!(
        "weights        {weights}\nm              {}\nX              {}\n\
         partial_sum    {}\ntail_bound     {:.3e}\nmatched_terms  {}\n",
        a.m,
        a.x_bound,
        fmt_value(r.partial_sum),
        r.tail_bound,
        r.matched_count
    );
    let mut params = Map::new();
    params.insert("weights".into(), json!(weights.to_string()));
    params.insert("m".into(), json!(a.m));
    params.insert("x_bound".into(), json!(a.x_bound));
    Ok(Outcome::ok(Emission {
        command: "powerful-sum",
        params,
        results: vec![Row { m: a.m, value: r.partial_sum }],
        budget: ErrorBudget {
            prime_tail: None,
            powerful_tail: Some(r.tail_bound),
            mass_beyond_m_max: None,
        },
        prime_limit: None,
        precision_digits: F64_DIGITS,
        table,
        verify: None,
    }))
}

fn cmd_decay(a: &DecayArgs) -> Result<Outcome> {
    let weights = resolve_weights(&a.selector)?;
    let primes = load_primes(a.prime_limit, a.cache_dir.as_deref())?;
    let profile = decay_profile(&weights, a.m_from, a.m_to, a.precision, &primes)?;
    let mut table = format!("weights   {weights}\n    m  log10(e_m)    mu_m\n");
    for entry in profile.entries() {
        let _ = writeln!(
            table,
            "{:>5}  {:>11.4}  {:.4}",
            entry.m, entry.log10_e, entry.mu
        );
    }
    if !profile.skipped().is_empty() {
        let skipped: Vec<String> =
            profile.skipped().iter().map(|m| m.to_string()).collect();
        let _ = writeln!(table, "skipped structural zeros at m = {}", skipped.join(", "));
    }
    let _ = writeln!(table, "prime_limit        {}", a.prime_limit);
    let _ = writeln!(table, "precision_digits   {}", a.precision);
    let mut params = Map::new();
    params.insert("weights".into(), json!(weights.to_string()));
    params.insert("m_from".into(), json!(a.m_from));
    params.insert("m_to".into(), json!(a.m_to));
    params.insert("prime_limit".into(), json!(a.prime_limit));
    Ok(Outcome::ok(Emission {
        command: "decay",
        params,
        results: profile
            .entries()
            .iter()
            .map(|e| Row { m: e.m as i64, value: e.mu })
            .collect(),
        budget: ErrorBudget::default(),
        prime_limit: Some(a.prime_limit),
        precision_digits: a.precision,
        table,
        verify: None,
    }))
}

fn cmd_genfun_eval(a: &GenfunEvalArgs) -> Result<Outcome> {
    let weights = resolve_weights(&a.selector)?;
    let z = parse_z(&a.z)?;
    let primes = load_primes(a.prime_limit, a.cache_dir.as_deref())?;
    let value = evaluate_genfun(&weights, z, &primes, DEFAULT_J_CUTOFF)?;
    let table = format!(
        "weights  {weights}\nz        {} + {}i\nP(z)     {} + {}i\n",
        z.re, z.im, value.re, value.im
    );
    let mut params = Map::new();
    params.insert("weights".into(), json!(weights.to_string()));
    params.insert("z".into(), json!([z.re, z.im]));
    params.insert("prime_limit".into(), json!(a.prime_limit));
    Ok(Outcome::ok(Emission {
        command: "genfun-eval",
        params,
        results: vec![
            Row { m: 0, value: value.re },
            Row { m: 1, value: value.im },
        ],
        budget: ErrorBudget::default(),
        prime_limit: Some(a.prime_limit),
        precision_digits: F64_DIGITS,
        table,
        verify: None,
    }))
}
