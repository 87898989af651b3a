//! End-to-end tests of the command-line surface: exit codes, the versioned
//! JSON document, CSV/JSON numeric agreement, the prime cache, and the
//! table renderings. Every test drives the real binary.

use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

const SIX_OVER_PI_SQUARED: f64 = 0.6079271018540267;

fn omegadist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omegadist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_str(&stdout_of(out)).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn exit_codes_cover_the_contract() {
    let ok = omegadist(&["densities", "--k", "2", "--m-max", "2", "--prime-limit", "10000"]);
    assert_eq!(code(&ok), 0, "stderr: {}", stderr_of(&ok));

    let usage = omegadist(&["moments", "--k", "1", "--prime-limit", "10000"]);
    assert_eq!(code(&usage), 2);
    assert!(stderr_of(&usage).contains("no unnormalized limiting distribution"));

    let both = omegadist(&["densities", "--k", "2", "--weights", "S"]);
    assert_eq!(code(&both), 2);

    let neither = omegadist(&["densities", "--m-max", "2", "--prime-limit", "10000"]);
    assert_eq!(code(&neither), 2);
    assert!(stderr_of(&neither).contains("exactly one of --k and --weights"));

    let malformed = omegadist(&["densities", "--weights", "custom:abc", "--prime-limit", "10000"]);
    assert_eq!(code(&malformed), 2);

    let signed = omegadist(&["densities", "--weights", "custom:1,-1", "--prime-limit", "10000"]);
    assert_eq!(code(&signed), 3);
    assert!(stderr_of(&signed).contains("unsupported weights"));

    let exhausted = omegadist(&[
        "densities", "--k", "2", "--m-max", "25", "--prime-limit", "10000",
    ]);
    assert_eq!(code(&exhausted), 4);
    assert!(stderr_of(&exhausted).contains("precision exhausted"));

    let breached = omegadist(&[
        "verify", "--k", "2", "--x", "100000", "--m-max", "3",
        "--prime-limit", "100000", "--c-hat-threshold", "0.0000001",
    ]);
    assert_eq!(code(&breached), 5);
}

#[test]
fn json_document_matches_the_schema() {
    let out = omegadist(&[
        "densities", "--k", "2", "--m-max", "3",
        "--prime-limit", "100000", "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout_of(&out);
    let doc = json_of(&out);

    assert_eq!(doc["schema"], "omegadist/1");
    assert_eq!(doc["command"], "densities");
    assert_eq!(doc["params"]["weights"], "omega_k:2");
    assert_eq!(doc["params"]["m_max"], 3);
    assert_eq!(doc["params"]["prime_limit"], 100000);

    let results = doc["results"].as_array().expect("results array");
    assert_eq!(results.len(), 4);
    for (m, row) in results.iter().enumerate() {
        assert_eq!(row["m"].as_i64(), Some(m as i64));
        assert!(row["value"].as_f64().expect("value is a number") > 0.0);
    }

    assert!(doc["error_budget"]["prime_tail"].as_f64().expect("prime_tail") > 0.0);
    assert!(doc["error_budget"]["mass_beyond_m_max"].as_f64().expect("mass") >= 0.0);
    assert!(doc["error_budget"]["powerful_tail"].is_null());
    assert_eq!(doc["prime_limit"], 100000);
    assert_eq!(doc["precision_digits"], 15);
    assert!(doc["runtime_ms"].is_u64());

    // Field order is part of the format. prime_limit also appears inside
    // params, so the top-level occurrence is the last one.
    let pos = |key: &str| text.find(&format!("\"{key}\"")).expect(key);
    assert!(text.starts_with("{\n  \"schema\": \"omegadist/1\",\n  \"command\":"));
    assert!(pos("params") < pos("results"));
    assert!(pos("results") < pos("error_budget"));
    let top_prime_limit = text.rfind("\"prime_limit\"").expect("prime_limit");
    assert!(pos("error_budget") < top_prime_limit);
    assert!(top_prime_limit < pos("precision_digits"));
    assert!(pos("precision_digits") < pos("runtime_ms"));
}

#[test]
fn json_params_echo_a_rerunnable_spec() {
    let first = json_of(&omegadist(&[
        "densities", "--k", "3", "--m-max", "3",
        "--prime-limit", "100000", "--format", "json",
    ]));
    let weights = first["params"]["weights"].as_str().expect("weights echoed");
    assert_eq!(weights, "omega_k:3");

    let second = json_of(&omegadist(&[
        "densities", "--weights", weights, "--m-max", "3",
        "--prime-limit", "100000", "--format", "json",
    ]));
    assert_eq!(first["results"], second["results"]);
    assert_eq!(first["params"], second["params"]);
}

#[test]
fn csv_and_json_agree_to_twelve_significant_digits() {
    let args = |fmt: &str| {
        [
            "densities", "--k", "2", "--m-max", "6",
            "--prime-limit", "100000", "--format", fmt,
        ]
        .map(String::from)
    };
    let csv_args = args("csv");
    let json_args = args("json");
    let csv = stdout_of(&omegadist(&csv_args.each_ref().map(String::as_str)));
    let doc = json_of(&omegadist(&json_args.each_ref().map(String::as_str)));

    assert!(!csv.contains('\r'), "CSV must use LF line endings");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("m,value"));
    let rows: Vec<(i64, f64)> = lines
        .map(|line| {
            let (m, v) = line.split_once(',').expect("two columns");
            (m.parse().expect("integer m"), v.parse().expect("float value"))
        })
        .collect();

    let json_rows = doc["results"].as_array().expect("results");
    assert_eq!(rows.len(), json_rows.len());
    for ((m, csv_value), row) in rows.iter().zip(json_rows) {
        assert_eq!(row["m"].as_i64(), Some(*m));
        let json_value = row["value"].as_f64().expect("value");
        let scale = json_value.abs().max(f64::MIN_POSITIVE);
        assert!(
            (csv_value - json_value).abs() / scale <= 1e-12,
            "m={m}: csv {csv_value} vs json {json_value}"
        );
    }
}

#[test]
fn corrupt_prime_cache_warns_and_rebuilds() {
    let dir = tempfile::tempdir().expect("tempdir");
    let dir_arg = dir.path().to_str().expect("utf-8 path");
    let args = [
        "densities", "--k", "2", "--m-max", "2", "--prime-limit", "10000",
        "--cache-dir", dir_arg, "--format", "json",
    ];

    let first = omegadist(&args);
    assert_eq!(code(&first), 0);
    assert!(stderr_of(&first).is_empty(), "clean first run: {}", stderr_of(&first));
    let cache_file = dir.path().join("primes-10000.omgd1");
    assert!(cache_file.exists());

    let mut bytes = fs::read(&cache_file).expect("cache readable");
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x55;
    fs::write(&cache_file, &bytes).expect("cache writable");

    let second = omegadist(&args);
    assert_eq!(code(&second), 0);
    assert!(
        stderr_of(&second).contains("warning: prime cache for limit 10000 was corrupt; rebuilt"),
        "stderr: {}",
        stderr_of(&second)
    );
    assert_eq!(json_of(&first)["results"], json_of(&second)["results"]);

    let third = omegadist(&args);
    assert_eq!(code(&third), 0);
    assert!(stderr_of(&third).is_empty(), "cache rewritten clean: {}", stderr_of(&third));
}

#[test]
fn k_range_renders_the_multi_k_table() {
    let out = omegadist(&[
        "densities", "--k-range", "2..4", "--m-max", "2", "--prime-limit", "100000",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout_of(&out);
    let header = text.lines().next().expect("header line");
    for m in 0..=2 {
        assert!(header.contains(&format!("m={m}")), "header: {header}");
    }
    for k in 2..=4 {
        assert!(text.contains(&format!("k={k}")), "missing row k={k}");
    }
    assert!(text.contains("0.904708927"), "k=3 m=0 value missing:\n{text}");

    let json_refused = omegadist(&[
        "densities", "--k-range", "2..4", "--prime-limit", "10000", "--format", "json",
    ]);
    assert_eq!(code(&json_refused), 2);

    let bad_range = omegadist(&["densities", "--k-range", "5..2", "--prime-limit", "10000"]);
    assert_eq!(code(&bad_range), 2);
}

#[test]
fn genfun_eval_is_exact_at_one_and_matches_e0_at_zero() {
    let at_one = json_of(&omegadist(&[
        "genfun-eval", "--k", "2", "--z", "1,0", "--prime-limit", "10000", "--format", "json",
    ]));
    assert_eq!(at_one["results"][0]["value"].as_f64(), Some(1.0));
    assert_eq!(at_one["results"][1]["value"].as_f64(), Some(0.0));

    let at_zero = json_of(&omegadist(&[
        "genfun-eval", "--k", "2", "--z", "0,0", "--prime-limit", "10000", "--format", "json",
    ]));
    let densities = json_of(&omegadist(&[
        "densities", "--k", "2", "--m-max", "0", "--prime-limit", "10000", "--format", "json",
    ]));
    let p0 = at_zero["results"][0]["value"].as_f64().expect("P(0)");
    let e0 = densities["results"][0]["value"].as_f64().expect("e_0");
    assert!((p0 - e0).abs() <= 1e-12 * e0);
    assert_eq!(at_zero["results"][1]["value"].as_f64(), Some(0.0));

    let bare_real = omegadist(&[
        "genfun-eval", "--k", "2", "--z", "0.5", "--prime-limit", "10000",
    ]);
    assert_eq!(code(&bare_real), 0);
}

#[test]
fn powerful_sum_single_term_is_six_over_pi_squared() {
    let doc = json_of(&omegadist(&[
        "powerful-sum", "--weights", "renyi", "--m", "0", "--X", "1000", "--format", "json",
    ]));
    let value = doc["results"][0]["value"].as_f64().expect("partial sum");
    assert!(
        (value - SIX_OVER_PI_SQUARED).abs() <= 1e-15,
        "got {value}"
    );
    assert!(doc["error_budget"]["powerful_tail"].as_f64().expect("tail") > 0.0);
    assert!(doc["prime_limit"].is_null());
}

#[test]
fn verify_below_the_asymptotic_regime_reports_without_enforcing() {
    let out = omegadist(&[
        "verify", "--k", "2", "--x", "10", "--m-max", "1",
        "--prime-limit", "10000", "--c-hat-threshold", "0.0000001",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout_of(&out).contains("c_hat reported, not enforced"));

    let doc = json_of(&omegadist(&[
        "verify", "--k", "2", "--x", "10", "--m-max", "1",
        "--prime-limit", "10000", "--c-hat-threshold", "0.0000001", "--format", "json",
    ]));
    assert_eq!(doc["verify"]["report_only"], true);
    assert_eq!(doc["verify"]["passed"], false);
    let rows = doc["verify"]["rows"].as_array().expect("rows");
    assert_eq!(rows[0]["count"].as_u64(), Some(8));
    assert_eq!(rows[1]["count"].as_u64(), Some(2));
    assert!(rows[0]["abs_dev"].as_f64().expect("abs_dev") > 0.0);
    assert!(rows[0]["c_hat"].as_f64().expect("c_hat") > 0.0);
}

#[test]
fn decay_emits_mu_values_at_high_precision() {
    let doc = json_of(&omegadist(&[
        "decay", "--k", "2", "--m-from", "10", "--m-to", "12",
        "--precision", "60", "--prime-limit", "1000000", "--format", "json",
    ]));
    assert_eq!(doc["precision_digits"], 60);
    let results = doc["results"].as_array().expect("results");
    assert_eq!(results.len(), 3);
    for (row, m) in results.iter().zip(10..=12) {
        assert_eq!(row["m"].as_i64(), Some(m));
        let mu = row["value"].as_f64().expect("mu");
        assert!((0.4..0.65).contains(&mu), "m={m}: mu={mu}");
    }
}

#[test]
fn named_weight_specs_run_end_to_end() {
    for weights in ["S", "E", "O", "renyi", "custom:0,1;tail=periodic:1,0", "custom:1;tail=const:1"] {
        let out = omegadist(&[
            "densities", "--weights", weights, "--m-max", "2", "--prime-limit", "10000",
        ]);
        assert_eq!(code(&out), 0, "weights {weights}: {}", stderr_of(&out));
    }
    let s_doc = json_of(&omegadist(&[
        "densities", "--weights", "S", "--m-max", "2",
        "--prime-limit", "100000", "--format", "json",
    ]));
    let e0 = s_doc["results"][0]["value"].as_f64().expect("e_0");
    assert!((e0 - SIX_OVER_PI_SQUARED).abs() <= 2e-6, "got {e0}");
}
