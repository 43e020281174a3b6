//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test --release --test acceptance -- --nocapture` to see the table.

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use cqed::dynamics::{parity_experiment, parity_experiment_on, Classification, TrajectoryRecord};
use cqed::hilbert::HilbertSpec;
use cqed::models::ModelParams;
use cqed::verify::{
    random_decoupled_params, suite_canonicity, suite_coefficients, suite_constants_of_motion, suite_decoupling,
    suite_frame_equivalence, suite_reduced_model, CheckResult,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;
const DRAWS: usize = 8;
const N_MAX: usize = 10;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Option<Duration>,
}

fn timed<F: FnOnce() -> (bool, String)>(id: usize, name: &'static str, budget: Option<Duration>, f: F) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let within = budget.is_none_or(|b| elapsed <= b);
    Outcome {
        id,
        name,
        pass: ok && within,
        detail,
        elapsed,
        budget,
    }
}

/// All listed checks present and passing; returns the worst residual ratio.
fn require(checks: &[CheckResult], ids: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut worst = (0.0f64, String::new());
    let mut missing = Vec::new();
    for id in ids {
        let matching: Vec<&CheckResult> = checks.iter().filter(|c| c.check_id == *id).collect();
        if matching.is_empty() {
            missing.push(*id);
            ok = false;
        }
        for c in matching {
            ok &= c.passed();
            let ratio = c.residual / c.tolerance;
            if ratio.is_nan() || ratio > worst.0 {
                worst = (
                    ratio,
                    format!("{} residual {:.3e} / tol {:.1e}", c.check_id, c.residual, c.tolerance),
                );
            }
        }
    }
    let mut detail = format!("worst {}", worst.1);
    if !missing.is_empty() {
        detail.push_str(&format!("; missing {missing:?}"));
    }
    (ok, detail)
}

fn draws() -> Vec<ModelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..DRAWS).map(|_| random_decoupled_params(&mut rng)).collect()
}

fn criterion_canonicity() -> (bool, String) {
    let checks = suite_canonicity(SEED, 100, 25, 8);
    require(
        &checks,
        &[
            "canonicity.mode_map_unitarity",
            "canonicity.v_unitarity",
            "canonicity.v_mode_map",
        ],
    )
}

fn criterion_coefficients() -> (bool, String) {
    let checks = suite_coefficients(SEED, 50);
    require(
        &checks,
        &["coefficients.tilde_vs_conjugation", "coefficients.diagonal_angle"],
    )
}

fn criterion_decoupling(ps: &[ModelParams]) -> (bool, String) {
    let checks: Vec<CheckResult> = ps.iter().flat_map(|p| suite_decoupling(p, N_MAX)).collect();
    require(
        &checks,
        &[
            "decoupling.forbidden_coefficients",
            "decoupling.target_coefficients",
            "decoupling.target_matrix",
            "decoupling.negative_control",
        ],
    )
}

fn criterion_constant_of_motion(ps: &[ModelParams]) -> (bool, String) {
    let mut checks: Vec<CheckResult> = Vec::new();
    for (k, p) in ps.iter().enumerate() {
        checks.extend(suite_constants_of_motion(p, N_MAX, SEED + k as u64));
        checks.extend(
            suite_decoupling(p, N_MAX)
                .into_iter()
                .filter(|c| c.check_id == "decoupling.free_mode_commutator"),
        );
    }
    require(
        &checks,
        &[
            "decoupling.free_mode_commutator",
            "constants_of_motion.free_mode",
            "constants_of_motion.drift",
        ],
    )
}

fn criterion_frame(ps: &[ModelParams]) -> (bool, String) {
    let checks: Vec<CheckResult> = ps
        .iter()
        .enumerate()
        .flat_map(|(k, p)| suite_frame_equivalence(p, N_MAX, SEED + k as u64, 200))
        .collect();
    require(
        &checks,
        &["frame_equivalence.state_deviation", "frame_equivalence.block_spectra"],
    )
}

fn criterion_reduced(ps: &[ModelParams]) -> (bool, String) {
    let checks: Vec<CheckResult> = ps.iter().flat_map(|p| suite_reduced_model(p, N_MAX, 3)).collect();
    require(
        &checks,
        &[
            "reduced_model.spectrum_n2_0",
            "reduced_model.spectrum_n2_1",
            "reduced_model.spectrum_n2_2",
            "reduced_model.spectrum_n2_3",
        ],
    )
}

fn golden(n0: usize) -> Vec<Vec<f64>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/parity_n0_{n0}.csv"));
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().expect("number")).collect())
        .collect()
}

fn golden_deviation(rec: &TrajectoryRecord, rows: &[Vec<f64>]) -> f64 {
    if rows.len() != rec.len() {
        return f64::INFINITY;
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let mine = [
                rec.times[i],
                rec.n1_mean[i],
                rec.n2_mean[i],
                rec.sz_mean[i],
                rec.norm_err[i],
                rec.excitation[i],
            ];
            mine.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn criterion_parity() -> (bool, String) {
    let p = ModelParams::parity_default();
    let mut ok = true;
    let mut notes = Vec::new();
    let mut worst_golden = 0.0f64;
    for n0 in 2..=7usize {
        let expected = if n0 % 2 == 0 {
            Classification::Inversion
        } else {
            Classification::Return
        };
        let (rec, sig) = parity_experiment(&p, n0, 100.0, 1000).expect("parity run");
        let (_, fine) = parity_experiment(&p, n0, 100.0, 2000).expect("doubled steps");
        let (_, wide) =
            parity_experiment_on(&HilbertSpec::two_mode(n0 + 2), &p, n0, 100.0, 1000).expect("wider truncation");
        let dev = golden_deviation(&rec, &golden(n0));
        worst_golden = worst_golden.max(dev);
        let good = sig.classification == expected
            && fine.classification == expected
            && wide.classification == expected
            && dev <= 1e-8;
        ok &= good;
        notes.push(format!("{n0}:{}", sig.classification));
    }
    (
        ok,
        format!("{}; golden deviation {worst_golden:.2e} / tol 1e-8", notes.join(" ")),
    )
}

#[test]
fn acceptance_criteria() {
    let ps = draws();
    let secs = |s| Some(Duration::from_secs(s));
    let outcomes = [
        timed(1, "canonicity", secs(10), criterion_canonicity),
        timed(2, "coefficient formulas", secs(5), criterion_coefficients),
        timed(3, "decoupling", secs(30), || criterion_decoupling(&ps)),
        timed(4, "constant of motion", None, || criterion_constant_of_motion(&ps)),
        timed(5, "frame equivalence", None, || criterion_frame(&ps)),
        timed(6, "reduced model", None, || criterion_reduced(&ps)),
        timed(7, "parity effect", secs(60), criterion_parity),
    ];
    for o in &outcomes {
        let budget = o
            .budget
            .map_or_else(String::new, |b| format!(" (budget {} s)", b.as_secs()));
        println!(
            "criterion {} {:<22} {}  {:.2} s{budget}  {}",
            o.id,
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.detail
        );
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
