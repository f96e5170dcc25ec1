//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
//! gating criterion fails. Runs offline against the shipped fixtures.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;
#[path = "../../core/tests/support/props.rs"]
#[allow(dead_code)]
mod props;
mod support;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::strategy::Strategy;
use proptest::test_runner::{Config as ProptestConfig, TestCaseError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use support::{read_input, shipped_fixtures, shipped_input};
use transpec_core::{build_prompt, cosine, dense_rank, parse_spec, Embedding, PromptStrategy, SourceSegment};

const BIN: &str = env!("CARGO_BIN_EXE_transpec");

/// Absolute tolerance of `cosine` against the double-double oracle.
const COSINE_TOL: f64 = 1e-12;
const COSINE_PAIRS: usize = 1000;
const COSINE_DIM: usize = 1536;
const COSINE_BUDGET: Duration = Duration::from_secs(1);
/// Wall-clock budget for one offline `translate` run.
const REPLAY_BUDGET: Duration = Duration::from_secs(2);
/// Generated cases per property.
const PROPERTY_CASES: u32 = 256;

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    gating: bool,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { name: "cosine_oracle", gating: true, run: cosine_oracle },
        Criterion { name: "ranks_pot_idiom", gating: true, run: ranks_pot_idiom },
        Criterion { name: "ranks_singer_dynamic_equivalence", gating: true, run: ranks_singer },
        Criterion { name: "ranks_marketing_copy_erratum", gating: true, run: ranks_marketing_erratum },
        Criterion { name: "prompt_golden_files", gating: true, run: prompt_golden_files },
        Criterion { name: "e2e_replay_pot_idiom", gating: true, run: e2e_replay },
        Criterion { name: "substitution_singer", gating: true, run: substitution },
        Criterion { name: "property_suite", gating: true, run: property_suite },
        Criterion { name: "live_rank_diagnostic", gating: false, run: live_diagnostic },
    ];
    let mut failed = 0;
    for c in &criteria {
        let outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        match (&outcome, c.gating) {
            (Ok(detail), true) => println!("PASS {}: {detail}", c.name),
            (Ok(detail), false) => println!("INFO {} (non-gating): {detail}", c.name),
            (Err(detail), true) => {
                failed += 1;
                println!("FAIL {}: {detail}", c.name);
            }
            (Err(detail), false) => println!("INFO {} (non-gating): {detail}", c.name),
        }
    }
    let gating = criteria.iter().filter(|c| c.gating).count();
    println!("acceptance: {}/{gating} gating criteria passed", gating - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cosine_oracle() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(0x00c0_5e1e);
    let mut draw = || -> Vec<f64> { (0..COSINE_DIM).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let pairs: Vec<(Embedding, Embedding)> = (0..COSINE_PAIRS)
        .map(|_| (Embedding::new(draw(), "m").unwrap(), Embedding::new(draw(), "m").unwrap()))
        .collect();
    let start = Instant::now();
    let got: Vec<f64> = pairs.iter().map(|(a, b)| cosine(a, b).unwrap()).collect();
    let elapsed = start.elapsed();
    let max_err = pairs
        .iter()
        .zip(&got)
        .map(|((a, b), g)| (g - oracle::oracle_cosine(a.values(), b.values())).abs())
        .fold(0.0, f64::max);
    check(max_err <= COSINE_TOL, || format!("max |error| {max_err:e} > {COSINE_TOL:e}"))?;
    check(elapsed < COSINE_BUDGET, || format!("{elapsed:?} exceeds {COSINE_BUDGET:?}"))?;
    Ok(format!(
        "{COSINE_PAIRS} pairs, dim {COSINE_DIM}, max |error| {max_err:.1e} (tol {COSINE_TOL:e}), {:.1} ms (budget 1 s)",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn exact_ranks(scores: &[f64], expected: &[usize]) -> Outcome {
    let ranks = dense_rank(scores).map_err(|e| e.to_string())?;
    check(ranks == expected, || format!("dense_rank({scores:?}) = {ranks:?}, expected {expected:?}"))?;
    Ok(format!("dense_rank({scores:?}) = {ranks:?}"))
}

fn ranks_pot_idiom() -> Outcome {
    exact_ranks(&[0.772, 0.727, 0.727, 0.743, 0.759, 0.744], &[1, 5, 5, 4, 2, 3])
}

fn ranks_singer() -> Outcome {
    exact_ranks(&[0.876, 0.876, 0.873, 0.830, 0.823, 0.826], &[1, 1, 2, 3, 5, 4])
}

fn ranks_marketing_erratum() -> Outcome {
    // Labels DL, GT, GPT, v1, v2, v3.
    let scores = [0.861, 0.868, 0.873, 0.870, 0.863, 0.875];
    let printed = [5usize, 3, 2, 3, 4, 1];
    let ranks = dense_rank(&scores).map_err(|e| e.to_string())?;
    check(ranks == [6, 4, 2, 3, 5, 1], || format!("got {ranks:?}"))?;
    check(ranks[5] == 1 && ranks[2] == 2 && printed[5] == 1 && printed[2] == 2, || "top-2 order differs".into())?;
    let duplicated: Vec<usize> = (1..=6).filter(|r| printed.iter().filter(|p| *p == r).count() > 1).collect();
    check(duplicated == [3], || format!("printed ranks duplicate {duplicated:?}"))?;
    // The shipped replay store must agree with the rule, not with the printed column.
    let dir = tempfile::tempdir().unwrap();
    let out = translate(dir.path(), "marketing_copy", &[])?;
    let replay: Vec<usize> = rows(&out).iter().map(|r| r.3).collect();
    check(replay == ranks, || format!("replay ranks {replay:?}"))?;
    Ok(format!(
        "DL 6, GT 4, GPT 2, v1 3, v2 5, v3 1; top-2 (v3, GPT) preserved; printed ranks {printed:?} repeat rank 3 (source inconsistency)"
    ))
}

fn golden(name: &str) -> String {
    let path = shipped_fixtures().join("../prompts").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn prompt_golden_files() -> Outcome {
    let cases = [
        ("marketing_copy", "spec", "spec_conditioned.v1__cosmetics_marketing.txt"),
        ("pot_idiom", "spec", "spec_conditioned.v1__pot_idiom.txt"),
        ("singer_dynamic_equivalence", "dynamic", "dynamic_equivalence.v1__misora_singer.txt"),
        ("pot_idiom", "baseline", "baseline.v1__pot_idiom.txt"),
    ];
    for (set, kind, file) in cases {
        let spec = parse_spec(&read_input(&format!("{set}_spec.json"))).map_err(|e| e.to_string())?;
        let strategy = match kind {
            "spec" => PromptStrategy::SpecConditioned,
            "dynamic" => PromptStrategy::default_dynamic_equivalence(&spec.pair),
            _ => PromptStrategy::Baseline,
        };
        let source = read_input(&format!("{set}_source.txt"));
        let segment = SourceSegment::new("seg-1", source.trim_end()).map_err(|e| e.to_string())?;
        let prompt = build_prompt(&segment, &spec, &strategy, 1).map_err(|e| e.to_string())?;
        let expected = golden(file);
        check(prompt.text == expected, || {
            let at = prompt.text.bytes().zip(expected.bytes()).take_while(|(a, b)| a == b).count();
            format!("{file}: first difference at byte {at}")
        })?;
        if file.starts_with("dynamic") {
            let lines: Vec<&str> = prompt.text.lines().collect();
            check(
                lines.contains(&"[source text] Lamb of God") && lines.contains(&"[target text] Seal of God"),
                || "exemplar lines missing".into(),
            )?;
        }
    }
    Ok("4 prompts byte-identical, exemplar lines \"[source text] Lamb of God\" / \"[target text] Seal of God\" present"
        .into())
}

fn translate(sessions: &Path, set: &str, extra: &[&str]) -> Result<String, String> {
    let out = Command::new(BIN)
        .arg("--fixtures")
        .arg(shipped_fixtures())
        .arg("--sessions")
        .arg(sessions)
        .arg("translate")
        .arg(shipped_input(&format!("{set}_spec.json")))
        .arg("--source-file")
        .arg(shipped_input(&format!("{set}_source.txt")))
        .arg("--refs")
        .arg(shipped_input(&format!("{set}_refs.json")))
        .args(["--n", "3"])
        .args(extra)
        .env_remove("TRANSPEC_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.code() == Some(0), || {
        format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

/// (label, text, score as printed, rank) per table row.
fn rows(table: &str) -> Vec<(String, String, String, usize)> {
    table
        .lines()
        .skip(2)
        .map(|l| {
            let cells: Vec<&str> = l.split(" | ").collect();
            (cells[0].into(), cells[1].into(), cells[2].into(), cells[3].parse().unwrap())
        })
        .collect()
}

fn e2e_replay() -> Outcome {
    let expected = [
        ("DL", "We are friends who ate out of the same pot.", "0.772", 1),
        ("GT", "We ate rice from the same pot.", "0.727", 5),
        ("GPT", "We ate rice from the same pot.", "0.727", 5),
        ("v1", "We have shared the same pot of rice.", "0.743", 4),
        ("v2", "We have been through thick and thin together.", "0.759", 2),
        ("v3", "We’ve broken bread together.", "0.744", 3),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    let mut slowest = Duration::ZERO;
    for _ in 0..3 {
        let start = Instant::now();
        outputs.push(translate(dir.path(), "pot_idiom", &["--strategy", "spec"])?);
        slowest = slowest.max(start.elapsed());
    }
    let got = rows(&outputs[0]);
    check(got.len() == 6, || format!("{} rows", got.len()))?;
    for (g, e) in got.iter().zip(expected) {
        check((g.0.as_str(), g.1.as_str(), g.2.as_str(), g.3) == e, || format!("row {g:?} != {e:?}"))?;
    }
    check(outputs.iter().all(|o| o.as_bytes() == outputs[0].as_bytes()), || "runs differ".into())?;
    check(slowest < REPLAY_BUDGET, || format!("slowest run {slowest:?}"))?;
    Ok(format!("6 rows match, 3 runs byte-identical, slowest {:.0} ms (budget 2 s)", slowest.as_secs_f64() * 1e3))
}

fn substitution() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .arg("--fixtures")
        .arg(shipped_fixtures())
        .arg("--sessions")
        .arg(dir.path())
        .args(["--format", "json", "substitute", "--frame"])
        .arg(read_input("singer_substitution_frame.txt").trim_end())
        .arg("--entities")
        .arg(shipped_input("singer_substitution_entities.json"))
        .arg("--source")
        .arg(read_input("singer_dynamic_equivalence_source.txt").trim_end())
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.code() == Some(0), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let entries = v["entries"].as_array().ok_or("no entries")?;
    let scores: Vec<f64> = entries.iter().map(|e| (e["score"].as_f64().unwrap() * 1e3).round() / 1e3).collect();
    let ranks: Vec<u64> = entries.iter().map(|e| e["rank"].as_u64().unwrap()).collect();
    check(scores == [0.876, 0.826, 0.823, 0.833], || format!("scores {scores:?}"))?;
    check(ranks == [1, 3, 4, 2], || format!("ranks {ranks:?}"))?;
    Ok(format!("scores {scores:?}, ranks {ranks:?}"))
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<String, String> {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))?;
    Ok(name.to_owned())
}

fn property_suite() -> Outcome {
    let passed = [
        run_property("spec_round_trip", props::spec(), props::check_spec_round_trip)?,
        run_property("candidates_round_trip", props::enumerated_response(), props::check_candidates_round_trip)?,
        run_property("candidates_count_contract", props::arbitrary_response(), props::check_candidate_count_contract)?,
        run_property("cosine_symmetry_bounds_scale", props::cosine_case(), props::check_cosine)?,
        run_property("dense_rank_structure", props::scores(), props::check_dense_rank)?,
        run_property("rank_permutation_equivariance", props::ranking_case(), props::check_permutation_equivariance)?,
        run_property("prompt_determinism", props::prompt_case(), props::check_prompt)?,
        run_property(
            "session_persistence_round_trip",
            support::persistence::saveable_record(),
            support::persistence::check_session_round_trip,
        )?,
    ];
    Ok(format!("{} properties x {PROPERTY_CASES} cases: {}", passed.len(), passed.join(", ")))
}

fn live_diagnostic() -> Outcome {
    let has_key =
        ["TRANSPEC_API_KEY", "OPENAI_API_KEY"].iter().any(|k| std::env::var(k).is_ok_and(|v| !v.trim().is_empty()));
    if !has_key {
        return Ok("skipped, no credentials in TRANSPEC_API_KEY or OPENAI_API_KEY".into());
    }
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .arg("--sessions")
        .arg(dir.path())
        .args(["--format", "json", "diagnose-live"])
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(0) {
        return Err(format!("live call failed: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    Ok(format!(
        "model {}, ranks agree: {}, max |score deviation| {:.3}",
        v["embed_model"],
        v["ranks_agree"],
        v["max_abs_score_deviation"].as_f64().unwrap_or(f64::NAN)
    ))
}
