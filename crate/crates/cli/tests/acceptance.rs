//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fail.

mod common;

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lhv_audit_core::audit::{
    audit_outcome_independence, audit_parameter_independence, audit_signal_locality, chsh,
    chsh_settings, compare_to_qm, AuditReport, Quantity,
};
use lhv_audit_core::combinatorics::{
    binom_divisibility, census_e_a, fixture, perm_integrality, scan_even_n, toy_census_enumeration,
    validate_family, FIXTURE_NAMES,
};
use lhv_audit_core::geometry::uniform_direction;
use lhv_audit_core::montecarlo::{estimate_moments, MomentEstimate};
use lhv_audit_core::rng::RngStream;
use lhv_audit_core::signaling::{run_protocol, ChannelConfig};
use lhv_audit_core::{
    Direction, HpModel, LhvModel, LocalFixture, ModelParams, QmSinglet, SettingGrid, Version,
};
use num_bigint::BigUint;
use num_traits::{One, Zero};

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn hp(v: Version) -> HpModel {
    HpModel::new(v, ModelParams::default())
}

fn index_of(grid: &SettingGrid, d: &Direction) -> usize {
    grid.iter()
        .position(|g| g == d)
        .unwrap_or_else(|| panic!("{d} missing from grid"))
}

fn within_sigmas(est: f64, expected: f64, trials: u64, k: f64) -> bool {
    let se = MomentEstimate::standard_error(expected, trials).max(1.0 / trials as f64);
    (est - expected).abs() <= k * se
}

fn random_pairs(count: usize, seed: u64) -> Vec<(Direction, Direction)> {
    let mut rng = RngStream::new(seed, 0);
    (0..count)
        .map(|_| (uniform_direction(&mut rng), uniform_direction(&mut rng)))
        .collect()
}

fn binomial_mod(n: u64, k: u64, m: u64) -> bool {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    (acc % BigUint::from(m)).is_zero()
}

fn divisibility_scan() -> Check {
    let start = Instant::now();
    let hits = scan_even_n(100);
    let took = start.elapsed();
    ensure(hits == [10, 40, 44, 84], || format!("scan gave {hits:?}"))?;
    ensure(took < Duration::from_secs(5), || format!("scan took {took:?}"))?;
    for n in (2..=20u64).step_by(2) {
        let exact = binomial_mod(9 * n * n, 3 * n, 9 * n * n);
        let fast = binom_divisibility(n as i64).map_err(|e| e.to_string())?.binom_divisible;
        ensure(exact == fast, || format!("n={n}: valuation says {fast}, big integers say {exact}"))?;
    }
    Ok(())
}

fn station2_row(r: &AuditReport, a: usize, b: usize, alt: usize) -> Option<(f64, f64)> {
    r.rows
        .iter()
        .find(|row| row.station == 2 && row.a == a && row.b == b && row.alt == Some(alt))
        .map(|row| (row.value, row.value_alt))
}

fn signal_locality_v1() -> Check {
    let (x, y, mx) = (Direction::X, Direction::Y, Direction::X.neg());
    let grid = SettingGrid::default_audit();
    let sl = audit_signal_locality(&hp(Version::V1), &grid).map_err(|e| e.to_string())?;
    let max2 = sl.station_max(2).unwrap_or(0.0);
    ensure(max2 >= 0.5, || format!("station-2 max {max2}"))?;
    let (v, v_alt) = station2_row(&sl, index_of(&grid, &x), index_of(&grid, &mx), index_of(&grid, &y))
        .ok_or("no row for b=(-1,0,0) with a=(1,0,0) vs (0,1,0)")?;
    ensure((v - 1.0).abs() < 1e-12 && (v_alt - 0.5).abs() < 1e-12, || {
        format!("p2 values {v} vs {v_alt}")
    })?;

    // On a grid holding only the witness settings it is also the reported witness.
    let small = SettingGrid::explicit(vec![x, mx, y]).map_err(|e| e.to_string())?;
    let sl = audit_signal_locality(&hp(Version::V1), &small).map_err(|e| e.to_string())?;
    let w = sl.station_witness(2).ok_or("no station-2 witness")?;
    ensure(
        w.a == x && w.b == mx && w.alt == Some(y) && w.value == 1.0 && (w.value_alt - 0.5).abs() < 1e-12,
        || format!("witness {w:?}"),
    )
}

fn parameter_independence_v2() -> Check {
    let grid = SettingGrid::default_audit();
    let model = hp(Version::V2);
    let states = model.audit_states();
    ensure(states.len() == 2 && states[0].r() != states[1].r(), || "both signs of r".into())?;
    let pi = audit_parameter_independence(&model, &grid, &states).map_err(|e| e.to_string())?;
    ensure(pi.max_violation >= 0.5, || format!("PI max {}", pi.max_violation))?;
    let sl = audit_signal_locality(&model, &grid).map_err(|e| e.to_string())?;
    let s2 = sl.station_max(2).unwrap_or(f64::NAN);
    ensure(s2.abs() < 1e-12, || format!("SL station 2 = {s2}"))
}

fn qm_disagreement() -> Check {
    let grid = SettingGrid::default_audit();
    let (ia, ib) = (index_of(&grid, &Direction::X), index_of(&grid, &Direction::X.neg()));
    let v1 = compare_to_qm(&hp(Version::V1), &grid).map_err(|e| e.to_string())?;
    let row = v1
        .rows
        .iter()
        .find(|r| r.quantity == Quantity::ExpB && r.a == ia && r.b == ib)
        .ok_or("no E(B) row at a=(1,0,0), b=(-1,0,0)")?;
    ensure((row.violation - 1.0).abs() < 1e-12, || format!("E(B) deviation {}", row.violation))?;
    let v2 = compare_to_qm(&hp(Version::V2), &grid).map_err(|e| e.to_string())?;
    ensure(v2.max_violation < 1e-12, || format!("v2 deviation {}", v2.max_violation))
}

fn correlation_reproduction() -> Check {
    const TRIALS: usize = 1_000_000;
    let policy = ModelParams::default().theta_policy();
    for v in [Version::V1, Version::V2] {
        let model = hp(v);
        for (i, (a, b)) in random_pairs(20, 2024).iter().enumerate() {
            let m = model.uncond_moments(a, b).map_err(|e| e.to_string())?;
            ensure((m.gamma + a.dot(b)).abs() < 1e-12, || format!("{v:?} pair {i}: E(AB)={}", m.gamma))?;
            let est = estimate_moments(&model, a, b, TRIALS, 7 + i as u64).map_err(|e| e.to_string())?;
            let t = TRIALS as u64;
            let ok = within_sigmas(est.mean_ab, m.gamma, t, 3.0)
                && within_sigmas(est.mean_a, m.alpha.resolve(policy), t, 3.0)
                && within_sigmas(est.mean_b, m.beta, t, 3.0);
            ensure(ok, || format!("{v:?} pair {i}: {est:?} vs {m:?}"))?;
        }
        let [a, a2, b, b2] = chsh_settings();
        let s = chsh(&model, &a, &a2, &b, &b2).map_err(|e| e.to_string())?;
        ensure((s.abs() - 2.0 * 2f64.sqrt()).abs() < 1e-12, || format!("{v:?}: S = {s}"))?;
    }
    Ok(())
}

fn signaling_protocol() -> Check {
    let start = Instant::now();
    for k in [1u32, 5, 10] {
        let r = run_protocol(&ChannelConfig::new(Version::V1, k, 100_000, 11)).map_err(|e| e.to_string())?;
        let p = 0.5f64.powi(k as i32 + 1);
        let se = (p * (1.0 - p) / 1e5).sqrt();
        ensure((r.empirical_error_rate - p).abs() <= 3.0 * se, || {
            format!("k={k}: empirical {} vs {p}", r.empirical_error_rate)
        })?;
        ensure(r.confusion[0][1] == 0 && r.bit0_plus == r.bit0_pairs, || {
            format!("k={k}: bit 0 errors {:?}", r.confusion[0])
        })?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))
}

fn census_consistency() -> Check {
    let grid = SettingGrid::default_audit();
    ensure(grid.len() == 26, || format!("grid has {} directions", grid.len()))?;
    for n in [2u32, 4, 8] {
        for name in FIXTURE_NAMES {
            let fam = fixture(name, n).map_err(|e| e.to_string())?;
            validate_family(&fam, &grid).map_err(|e| format!("{name} n={n}: {e}"))?;
            for a in grid.iter() {
                for b in grid.iter() {
                    let r = census_e_a(&fam, a, b).map_err(|e| e.to_string())?;
                    ensure(r.formula_e_a.contains(r.census_e_a, 1e-12), || {
                        format!("{name} n={n} a={a} b={b}: {} outside {:?}", r.census_e_a, r.formula_e_a)
                    })?;
                }
            }
        }
    }
    Ok(())
}

fn permutation_fix() -> Check {
    for n in (2..=200i64).step_by(2) {
        let r = perm_integrality(n).map_err(|e| e.to_string())?;
        ensure(r.div_by_9 && r.div_by_9n2, || format!("n={n}: {r:?}"))?;
    }
    for (side, select) in [(2u32, 1u32), (3, 2), (4, 2), (6, 3)] {
        let t = toy_census_enumeration(side, select).map_err(|e| e.to_string())?;
        let per_slot = t.selections / u64::from(side * side);
        let exact = t.by_position.iter().flatten().all(|&c| c == per_slot);
        ensure(t.uniform && exact, || format!("({side}, {select}) not uniform"))?;
    }
    Ok(())
}

fn negative_control() -> Check {
    let local = LocalFixture::new(1_000_000, 3).map_err(|e| e.to_string())?;
    let grid = SettingGrid::default_audit();
    let states = local.audit_states();
    let reports = [
        audit_parameter_independence(&local, &grid, &states),
        audit_signal_locality(&local, &grid),
        audit_outcome_independence(&local, &grid, &states),
    ];
    for r in reports {
        let r = r.map_err(|e| e.to_string())?;
        ensure(r.max_violation <= 1e-9, || format!("{:?}: {}", r.condition, r.max_violation))?;
    }
    for (a, b) in random_pairs(5, 99) {
        let closed = -(1.0 - 2.0 * a.dot(&b).clamp(-1.0, 1.0).acos() / PI);
        let g = local.uncond_moments(&a, &b).map_err(|e| e.to_string())?.gamma;
        ensure(within_sigmas(g, closed, 1_000_000, 3.0), || format!("E(AB) {g} vs {closed}"))?;
    }
    let [a, a2, b, b2] = chsh_settings();
    let s = chsh(&local, &a, &a2, &b, &b2).map_err(|e| e.to_string())?;
    ensure(s.abs() <= 2.01, || format!("S = {s}"))?;
    let q = chsh(&QmSinglet, &a, &a2, &b, &b2).map_err(|e| e.to_string())?;
    ensure(q.abs() > 2.8, || format!("QM S = {q}"))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases: [(&str, &[&str]); 5] = [
        ("audit", &["audit", "--model", "local-fixture", "--trials", "20000", "--seed", "5"]),
        ("signal", &["signal", "--version", "2", "--k", "4", "--trials", "50000", "--seed", "5"]),
        ("sample", &["sample", "--model", "hp-v2", "--trials", "100000", "--random-pairs", "3", "--seed", "5"]),
        ("scan", &["combinat", "scan", "--limit", "100", "--format", "csv"]),
        ("census", &["combinat", "census", "--n", "2", "--family", "fixture-1", "--format", "table"]),
    ];
    for (tag, args) in cases {
        let one = common::report_bytes(args, 1, dir.path(), tag);
        let rerun = common::report_bytes(args, 1, dir.path(), &format!("{tag}-rerun"));
        let many = common::report_bytes(args, 4, dir.path(), tag);
        ensure(!one.is_empty() && one == rerun && one == many, || format!("{tag} output differs"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("divisibility scan", divisibility_scan),
        ("signal-locality violation, version 1", signal_locality_v1),
        ("parameter-independence violation, version 2", parameter_independence_v2),
        ("QM disagreement, version 1", qm_disagreement),
        ("correlation reproduction", correlation_reproduction),
        ("signaling protocol", signaling_protocol),
        ("census consistency", census_consistency),
        ("permutation fix", permutation_fix),
        ("negative control", negative_control),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(()) => println!("PASS {:>2} {name}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
