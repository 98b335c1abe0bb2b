//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use bivirus_core::harness::{
    parse_config, run_scenario, run_sweep, Config, ParamName, RunStatus, SweepAxis, SweepConfig,
    Target,
};
use bivirus_core::stability::closed_form_line;
use bivirus_core::{
    classify_point, coexistence_lines, enumerate_isolated, integrate, jacobian, ClosedFormVerdict,
    EquilibriumKind, EquilibriumLine, LineKind, ModelParams, NumericVerdict,
    SimConfig, State, LINE_SAMPLES, R0_REL_TOL, ZERO_TOL,
};
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn scenario_text(params: &str, sim: &str, states: &[[f64; 5]]) -> String {
    let mut text = format!("{params}\n{sim}\n");
    for x in states {
        let coords: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        text.push_str(&format!("x0 = {}\n", coords.join(", ")));
    }
    text
}

const FIG1_PARAMS: &str = "beta1 = 0.8\nbeta2 = 0.8\ndelta1 = 0.2\ndelta2 = 0.2\nr1 = 0.5\nr2 = 0.5\nc1 = 0.5\nc2 = 0.5\nc_d = 0.4\nq = 0.1";
const FIG2_PARAMS: &str = "beta1 = 0.5\nbeta2 = 0.4\ndelta1 = 0.06\ndelta2 = 0.3\nr1 = 0.6\nr2 = 0.4\nc1 = 1.0\nc2 = 0.9\nc_d = 0.6\nq = 0.4";
const FIG3_PARAMS: &str = "beta1 = 0.3\nbeta2 = 0.3\ndelta1 = 0.1\ndelta2 = 0.1\nr1 = 0.5\nr2 = 0.1\nc1 = 3.0\nc2 = 3.0\nc_d = 2.0\nq = 0.8";
const FIG4_PARAMS: &str = "beta1 = 0.3\nbeta2 = 0.3\ndelta1 = 0.1\ndelta2 = 0.1\nr1 = 0.4\nr2 = 0.4\nc1 = 0.9\nc2 = 0.9\nc_d = 0.1\nq = 0.8";
const FIG34_Y: [[f64; 2]; 4] = [[0.5, 0.4], [0.1, 0.8], [0.1, 0.1], [0.8, 0.1]];

fn scenario(text: &str) -> bivirus_core::harness::ScenarioConfig {
    match parse_config(text, false).expect("scenario config parses").config {
        Config::Scenario(s) => s,
        Config::Sweep(_) => unreachable!(),
    }
}

fn terminal_states(cfg: &bivirus_core::harness::ScenarioConfig) -> Result<Vec<(State, f64)>, String> {
    let result = run_scenario(cfg);
    result
        .runs
        .iter()
        .map(|r| {
            let t = r.trajectory.as_ref().map_err(|e| e.to_string())?;
            let x = *t.terminal_state().ok_or("empty trajectory")?;
            Ok((x, t.converged_at.or(t.final_time()).unwrap()))
        })
        .collect()
}

fn fig1() -> Outcome {
    let cfg = scenario(&scenario_text(
        FIG1_PARAMS,
        "h = 1e-4\nt_max = 200",
        &[[0.6, 0.4, 0.1, 0.9, 0.7]],
    ));
    let start = Instant::now();
    // One trajectory: the scenario runner spawns a single worker.
    let result = run_scenario(&cfg);
    let secs = start.elapsed().as_secs_f64();
    let run = &result.runs[0];
    let Ok(t) = &run.trajectory else {
        return outcome(false, "integration failed");
    };
    let x = t.terminal_state().unwrap();
    let d = max_norm(&sub(x.to_array(), [0.0, 0.0, 0.0, 1.0, 1.0]));
    let t_end = t.converged_at.or(t.final_time()).unwrap();
    let stable = matches!(&run.stability, Some(Ok(r)) if r.numeric_verdict == NumericVerdict::Stable);
    let matched = run.status() == RunStatus::Matched
        && run.nearest.unwrap().target == Target::Point(EquilibriumKind::Dfe0);
    outcome(
        d < 1e-3 && t_end <= 200.0 && secs < 30.0 && matched && stable,
        format!("|x(T) - DFE0| = {d:.2e} at T = {t_end:.1}, matched DFE0 (stable) = {}, {secs:.2} s", matched && stable),
    )
}

fn sub(a: [f64; 5], b: [f64; 5]) -> [f64; 5] {
    std::array::from_fn(|i| a[i] - b[i])
}

fn fig2() -> Outcome {
    let p = scenario(&scenario_text(FIG2_PARAMS, "", &[[0.0; 5]])).model;
    // Closed forms of the partial-distancing point of strain 1.
    let y1 = p.c_d / (2.0 * p.r1);
    let zs = 1.0 / (1.0 - p.q) - p.delta1 / (p.beta1 * (1.0 - y1) * p.q * (1.0 - p.q));
    let target = [y1, 0.0, zs, 1.0, 1.0];
    let cfg = scenario(&scenario_text(
        FIG2_PARAMS,
        "h = 1e-4\nt_max = 1000",
        &[[0.5, 0.2, 0.7, 0.9, 0.8]],
    ));
    match terminal_states(&cfg) {
        Ok(v) => {
            let d = max_norm(&sub(v[0].0.to_array(), target));
            outcome(
                d < 1e-3 && (zs - 2.0 / 3.0).abs() < 1e-12,
                format!("target ({y1}, 0, {zs:.6}, 1, 1), |x(T) - target| = {d:.2e} at T = {:.1}", v[0].1),
            )
        }
        Err(e) => outcome(false, e),
    }
}

fn fig34(params: &str, zs0: f64, total: f64, zs_ok: impl Fn(f64) -> bool) -> Outcome {
    let states: Vec<[f64; 5]> = FIG34_Y.iter().map(|y| [y[0], y[1], zs0, 1.0, 1.0]).collect();
    let cfg = scenario(&scenario_text(params, "h = 1e-4\nt_max = 200", &states));
    match terminal_states(&cfg) {
        Ok(v) => {
            let worst = v.iter().map(|(x, _)| (x.y1 + x.y2 - total).abs()).fold(0.0, f64::max);
            let zs_fine = v.iter().all(|(x, _)| zs_ok(x.z_s));
            let y1s: Vec<f64> = v.iter().map(|(x, _)| x.y1).collect();
            let spread = y1s.iter().cloned().fold(f64::MIN, f64::max) - y1s.iter().cloned().fold(f64::MAX, f64::min);
            outcome(
                worst < 1e-4 && zs_fine && spread > 0.05,
                format!(
                    "max |y1 + y2 - {total:.6}| = {worst:.2e}, z_s condition {zs_fine}, y1 spread {spread:.3}"
                ),
            )
        }
        Err(e) => outcome(false, e),
    }
}

fn fig3() -> Outcome {
    fig34(FIG3_PARAMS, 0.0, 7.0 / 12.0, |zs| zs < 1e-6)
}

fn fig4() -> Outcome {
    fig34(FIG4_PARAMS, 1.0, 23.0 / 48.0, |zs| zs > 1.0 - 1e-6)
}

fn invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let trials: Vec<(ModelParams, [f64; 5])> = (0..100)
        .map(|k| {
            let p = if k % 4 == 0 { random_equal_r0_params(&mut rng) } else { random_params(&mut rng) };
            (p, random_state(&mut rng))
        })
        .collect();
    // Unprojected steps, so that any excursion from the region is visible.
    let sim = SimConfig {
        h: 1e-4,
        t_max: 50.0,
        record_every: 10,
        conv_eps: 0.0,
        conv_window: 0.0,
        project: false,
    };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let results: Vec<Result<usize, String>> = std::thread::scope(|s| {
        let handles: Vec<_> = trials
            .chunks(trials.len().div_ceil(workers))
            .map(|chunk| {
                s.spawn(move || {
                    chunk
                        .iter()
                        .map(|(p, x0)| {
                            let t = integrate(p, &State::from_array(*x0), &sim).map_err(|e| e.to_string())?;
                            Ok(t.states.iter().filter(|x| !in_gamma(x.to_array(), 1e-9)).count())
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    let errors = results.iter().filter(|r| r.is_err()).count();
    let escapes: usize = results.iter().filter_map(|r| r.as_ref().ok()).sum();
    outcome(
        errors == 0 && escapes == 0,
        format!("{} trials, {escapes} recorded states outside the region, {errors} integration errors", trials.len()),
    )
}

fn residuals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    let mut line_points = 0;
    for k in 0..50 {
        let p = if k % 2 == 0 { random_equal_r0_params(&mut rng) } else { random_params(&mut rng) };
        for e in enumerate_isolated(&p).iter().filter(|e| e.exists) {
            worst = worst.max(max_norm(&field(&p, e.point.to_array())));
            points += 1;
        }
        for l in coexistence_lines(&p, R0_REL_TOL).iter().filter(|l| l.exists) {
            for y1 in l.sample_params(LINE_SAMPLES) {
                worst = worst.max(max_norm(&field(&p, l.point_unchecked(y1).to_array())));
                line_points += 1;
            }
        }
    }
    outcome(
        worst < 1e-10 && line_points > 0,
        format!("{points} isolated points, {line_points} line samples, max residual {worst:.2e}"),
    )
}

fn jacobian_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..10 {
        let p = random_params(&mut rng);
        for _ in 0..10 {
            let x = random_interior_state(&mut rng);
            let a = jacobian(&p, &State::from_array(x));
            let fd = central_jacobian(&p, x, 1e-6);
            for r in 0..5 {
                for c in 0..5 {
                    let err = (a[(r, c)] - fd[r][c]).abs() / a[(r, c)].abs().max(1e-3);
                    worst = worst.max(err);
                }
            }
            count += 1;
        }
    }
    outcome(worst < 1e-5, format!("{count} points, max entrywise error {worst:.2e} (relative, floored at 1e-3)"))
}

fn stability_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut applicable = 0;
    let mut undecided = 0;
    let mut per_kind = std::collections::BTreeMap::new();
    let mut mismatches = Vec::new();
    for _ in 0..200 {
        let p = random_params(&mut rng);
        for e in enumerate_isolated(&p) {
            let strictly_exists = e.exists && e.existence_conditions.iter().all(|c| c.margin.abs() > 1e-6);
            let hypotheses = hypothesis_margins(&p, e.kind).iter().all(|m| *m > 1e-6);
            if !(strictly_exists && hypotheses) {
                continue;
            }
            let Some((expected, margin)) = expected_stability(&p, e.kind) else { continue };
            let report = match classify_point(&p, &e, ZERO_TOL) {
                Ok(r) => r,
                Err(err) => {
                    mismatches.push(format!("{}: {err}", e.kind));
                    continue;
                }
            };
            let closed = report.closed_form.as_ref().unwrap();
            if margin <= 1e-6 || closed.min_abs_margin() <= 1e-6 {
                continue;
            }
            // The stability conditions are sufficient only; where neither
            // they nor an instability clause fire, there is no verdict to
            // compare against.
            if closed.verdict == ClosedFormVerdict::Inconclusive {
                undecided += 1;
                continue;
            }
            applicable += 1;
            *per_kind.entry(e.kind).or_insert(0) += 1;
            let want_closed = match expected {
                Expected::Stable => ClosedFormVerdict::Stable,
                Expected::Unstable => ClosedFormVerdict::Unstable,
            };
            let want_numeric = match expected {
                Expected::Stable => NumericVerdict::Stable,
                Expected::Unstable => NumericVerdict::Unstable,
            };
            if closed.verdict != want_closed || report.numeric_verdict != want_numeric {
                mismatches.push(format!(
                    "{} expected {expected:?}, closed form {}, numeric {}",
                    e.kind, closed.verdict, report.numeric_verdict
                ));
            }
        }
    }
    let coverage: Vec<String> = per_kind.iter().map(|(k, n)| format!("{k} {n}")).collect();
    outcome(
        mismatches.is_empty() && per_kind.len() == EquilibriumKind::ALL.len(),
        format!(
            "{applicable} applicable cases ({}), {} disagreements, {undecided} left undecided by the closed form{}",
            coverage.join(", "),
            mismatches.len(),
            mismatches.first().map_or(String::new(), |m| format!(" (first: {m})"))
        ),
    )
}

/// Sweeps `c_d` across the closed-form boundary of `kind` through the
/// harness and returns (threshold, grid spacing, flip interval) per set.
fn threshold_sweep(p: &ModelParams, kind: LineKind, threshold: f64, offset: f64) -> Result<(f64, f64), String> {
    let steps = 41;
    let min = threshold * (0.5 + 0.01 * offset);
    let max = threshold * (1.5 + 0.01 * offset);
    let cfg = SweepConfig {
        base: bivirus_core::harness::ScenarioConfig {
            model: *p,
            sim: SimConfig::default(),
            initial_states: vec![State::new(0.0, 0.0, 0.0, 1.0, 1.0)],
            outputs: "unused".into(),
            formats: Default::default(),
        },
        axes: vec![SweepAxis { param: ParamName::CD, min, max, steps }],
        targets: vec![Target::Line(kind)],
    };
    let result = run_sweep(&cfg);
    let stable: Vec<bool> = result
        .cells
        .iter()
        .map(|c| {
            c.verdicts[0]
                .map(|v| v.numeric == NumericVerdict::Stable)
                .ok_or_else(|| format!("{kind} missing at c_d = {}", c.coords[0]))
        })
        .collect::<Result<_, _>>()?;
    let flips: Vec<usize> = (1..stable.len()).filter(|&k| stable[k] != stable[k - 1]).collect();
    if flips.len() != 1 {
        return Err(format!("{kind}: {} flips", flips.len()));
    }
    let k = flips[0];
    let (lo, hi) = (result.cells[k - 1].coords[0], result.cells[k].coords[0]);
    let cell = (max - min) / (steps - 1) as f64;
    let inside = lo - cell * 1e-9 <= threshold && threshold <= hi + cell * 1e-9;
    if !inside {
        return Err(format!("{kind}: flip in [{lo}, {hi}], threshold {threshold}"));
    }
    Ok((threshold, cell))
}

fn thresholds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut checked = 0;
    let mut failures = Vec::new();
    for k in 0..20 {
        let mut p = random_equal_r0_params(&mut rng);
        let big_r = p.beta1 / p.delta1;
        p.c1 = 10.0;
        p.c2 = 10.0;
        let (kind, threshold) = if k % 2 == 0 {
            // L0 stable above 2 max(r) (1 - 1/(q R0))
            if p.q * big_r <= 1.05 {
                continue;
            }
            (LineKind::L0, 2.0 * p.r1.max(p.r2) * (1.0 - 1.0 / (p.q * big_r)))
        } else {
            // L1 stable below 2 min(r) (1 - 1/(q^2 R0))
            if p.q * p.q * big_r <= 1.05 {
                p.beta1 = 3.0 * p.delta1 / (p.q * p.q);
                p.beta2 = p.delta2 * p.beta1 / p.delta1;
            }
            let big_r = p.beta1 / p.delta1;
            (LineKind::L1, 2.0 * p.r1.min(p.r2) * (1.0 - 1.0 / (p.q * p.q * big_r)))
        };
        match threshold_sweep(&p, kind, threshold, k as f64 / 20.0) {
            Ok(_) => checked += 1,
            Err(e) => failures.push(e),
        }
    }
    outcome(
        failures.is_empty() && checked >= 15,
        format!(
            "{checked} c_d sweeps flipped within one grid cell of the threshold{}",
            failures.first().map_or(String::new(), |f| format!("; failure: {f}"))
        ),
    )
}

fn exclusivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let (mut draws, mut both, mut l0_stable, mut l1_stable) = (0, 0, 0, 0);
    while draws < 10_000 {
        let p = random_equal_r0_params(&mut rng);
        let lines = coexistence_lines(&p, R0_REL_TOL);
        if !(lines[0].exists && lines[1].exists) {
            continue;
        }
        draws += 1;
        let stable = |l: &EquilibriumLine| {
            closed_form_line(&p, l).is_some_and(|c| c.verdict == ClosedFormVerdict::Stable)
        };
        let (s0, s1) = (stable(&lines[0]), stable(&lines[1]));
        l0_stable += usize::from(s0);
        l1_stable += usize::from(s1);
        both += usize::from(s0 && s1);
    }
    outcome(
        both == 0 && l0_stable > 0 && l1_stable > 0,
        format!("{draws} draws with both lines, L0 stable {l0_stable}, L1 stable {l1_stable}, both {both}"),
    )
}

fn distance_to_enumerated(p: &ModelParams, x: [f64; 5]) -> f64 {
    let state = State::from_array(x);
    let points = enumerate_isolated(p)
        .into_iter()
        .filter(|e| e.exists)
        .map(|e| e.point.distance(&state));
    let lines = coexistence_lines(p, R0_REL_TOL)
        .into_iter()
        .filter(|l| l.exists)
        .map(|l| bivirus_core::harness::scenario::nearest_on_line(&l, &state).distance(&state));
    points.chain(lines).fold(f64::INFINITY, f64::min)
}

fn exhaustiveness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    let mut roots = 0;
    let mut worst: f64 = 0.0;
    let mut far = None;
    let grid: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
    let zgrid: Vec<f64> = (0..=5).map(|k| k as f64 / 5.0).collect();
    for set in 0..20 {
        let p = if set % 3 == 0 { random_equal_r0_params(&mut rng) } else { random_params(&mut rng) };
        for &a in &grid {
            for &b in grid.iter().filter(|b| a + **b <= 1.0) {
                for &z in &zgrid {
                    let Some(u) = slice_root(&p, [a, b, z]) else { continue };
                    let x = [u[0], u[1], u[2], 1.0, 1.0];
                    if !in_gamma(x, 1e-9) {
                        continue;
                    }
                    roots += 1;
                    let d = distance_to_enumerated(&p, x);
                    if d > worst {
                        worst = d;
                        far = Some((set, x));
                    }
                }
            }
        }
    }
    outcome(
        worst <= 1e-6 && roots > 0,
        format!(
            "{roots} roots found in the region, largest distance to the enumerated set {worst:.2e}{}",
            match far {
                Some((s, x)) if worst > 1e-6 => format!(" (set {s}, {x:?})"),
                _ => String::new(),
            }
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("fig1 converges to DFE0", fig1),
        ("fig2 converges to U1S", fig2),
        ("fig3 converges onto L0", fig3),
        ("fig4 converges onto L1", fig4),
        ("positive invariance", invariance),
        ("fixed-point residuals", residuals),
        ("jacobian vs central differences", jacobian_oracle),
        ("closed-form vs numeric stability", stability_agreement),
        ("line stability thresholds", thresholds),
        ("L0/L1 mutual exclusivity", exclusivity),
        ("equilibrium exhaustiveness", exhaustiveness),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {}  {name}: {} [{:.2} s]",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
