//! Acceptance suite: one line per criterion, all must pass.
//!
//! Library calls cover the closed forms; everything user-facing goes through
//! the `cclab` binary and its JSON/CSV reports.

use std::f64::consts::PI;
use std::io::Write;
use std::process::Command;

use cclab::geodesics::{cc_distance, horizontal_basis, integrate_geodesic, ShootConfig};
use cclab::identities::hypothesis_margins;
use cclab::numerics::{rng_for, Vector};
use cclab::riccati::model::comparison_residual;
use cclab::riccati::{
    bbar, det_bbar, first_blowup_time, orbit_jacobi, sbar0, sbar0_asymptotic, sbar0_with_derivative, BlowupMode,
    ModelParams,
};
use cclab::Manifold;
use serde_json::Value;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

struct Run {
    code: i32,
    stdout: Vec<u8>,
    stderr: String,
}

fn cclab(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_cclab"))
        .args(args)
        .env_remove("CCLAB_SEED")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: out.stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn report(args: &[&str]) -> Result<(i32, Value), String> {
    let r = cclab(args);
    let v = serde_json::from_slice(&r.stdout).map_err(|e| format!("{args:?}: bad JSON ({e}); stderr: {}", r.stderr))?;
    Ok((r.code, v))
}

fn check<'a>(r: &'a Value, id: &str) -> Result<&'a Value, String> {
    r["checks"]
        .as_array()
        .and_then(|cs| cs.iter().find(|c| c["id"] == id))
        .ok_or_else(|| format!("check {id} missing"))
}

fn value(r: &Value, id: &str) -> Result<f64, String> {
    check(r, id)?["value"].as_f64().ok_or_else(|| format!("check {id} has no value"))
}

fn passed(r: &Value, id: &str) -> Result<bool, String> {
    Ok(check(r, id)?["pass"] == Value::Bool(true))
}

fn column(r: &Value, series: &str, col: &str) -> Result<Vec<f64>, String> {
    let s = r["series"]
        .as_array()
        .and_then(|ss| ss.iter().find(|s| s["name"] == series))
        .ok_or_else(|| format!("series {series} missing"))?;
    let idx = s["columns"]
        .as_array()
        .and_then(|cs| cs.iter().position(|c| c == col))
        .ok_or_else(|| format!("column {col} missing"))?;
    Ok(s["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row[idx].as_f64().unwrap_or(f64::NAN))
        .collect())
}

/// Plain bisection, the independent oracle for root locations.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    while b - a > 1e-14 {
        let mid = 0.5 * (a + b);
        if (f(mid) > 0.0) == (fa > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

fn c1_model_geodesics() -> Outcome {
    let m = Manifold::hopf(1.0, 1, 1).unwrap();
    let p = Vector::from_vec(vec![2.0, 0.0, 0.0, 0.0]);
    let v = Vector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
    let exact = |t: f64| Vector::from_vec(vec![2.0 * (t / 2.0).cos(), 0.0, 2.0 * (t / 2.0).sin(), 0.0]);
    let rec = integrate_geodesic(&m, &p, &v, 0.0, PI).map_err(|e| e.to_string())?;
    let lib_err = grid(0.0, PI, 200)
        .into_iter()
        .map(|t| (rec.state(t).position - exact(t)).amax())
        .fold(0.0, f64::max);
    ensure!(lib_err <= 1e-8, "library geodesic deviates by {lib_err:.2e}");

    let run = cclab(&["geodesic", "--direction", "0,0,1,0", "--output", "csv"]);
    ensure!(run.code == 0, "geodesic exit {}: {}", run.code, run.stderr);
    let text = String::from_utf8(run.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (ct, cx) = (col("t"), col("x0"));
    let mut cli_err: f64 = 0.0;
    for line in lines {
        let row: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let want = exact(row[ct]);
        for i in 0..4 {
            cli_err = cli_err.max((row[cx + i] - want[i]).abs());
        }
    }
    ensure!(cli_err <= 1e-8, "CLI geodesic deviates by {cli_err:.2e}");

    let q = Vector::from_vec(vec![0.0, 0.0, 2.0, 0.0]);
    let d = cc_distance(&m, &p, &q, &ShootConfig::default()).map_err(|e| e.to_string())?;
    ensure!((d.distance - PI).abs() <= 1e-4, "cc_distance = {}", d.distance);
    Ok(format!("max deviation {:.1e} (library) / {cli_err:.1e} (CLI), d_CC = {:.8}", lib_err, d.distance))
}

fn c2_closed_form_riccati() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for (k1, a) in [(1.0, 0.0), (1.0, 1.0), (2.0, 0.5)] {
        let p = ModelParams::matched(k1, a, 1).unwrap();
        let end = 0.95 * first_blowup_time(&p, BlowupMode::Holomorphic).map_err(|e| e.to_string())?;
        for t in grid(0.05, end, 400) {
            let r = comparison_residual(&p, t).map_err(|e| e.to_string())?.amax();
            ensure!(r <= 1e-8, "(k1,a)=({k1},{a}) t={t}: residual {r:.2e}");
            worst = worst.max(r);
            // The exact derivative against a central difference of the values.
            let h = 1e-6 * t;
            let (_, ds) = sbar0_with_derivative(&p, t).unwrap();
            let fd = (sbar0(&p, t + h).unwrap() - sbar0(&p, t - h).unwrap()) / (2.0 * h);
            let rel = (&fd - &ds).amax() / (1.0 + ds.amax());
            ensure!(rel <= 1e-5, "(k1,a)=({k1},{a}) t={t}: derivative mismatch {rel:.2e}");
            worst_fd = worst_fd.max(rel);
        }
        let t = 1e-3;
        let s = sbar0(&p, t).unwrap();
        let asym = sbar0_asymptotic(a, t);
        for i in 0..3 {
            for j in 0..3 {
                let (x, y) = (s[(i, j)], asym[(i, j)]);
                ensure!((x - y).abs() <= 0.01 * y.abs() + 1e-12, "asymptotic entry ({i},{j}): {x} vs {y}");
            }
        }
    }
    Ok(format!("max residual {worst:.1e}, derivative check {worst_fd:.1e}, asymptotics within 1%"))
}

fn c3_diameter_bounds() -> Outcome {
    let mut notes = Vec::new();
    for (manifold, mode) in [("hopf:k=1,m=1,n=1", "holomorphic"), ("hopf:k=1,m=1,n=2", "trace")] {
        let (code, r) = report(&["diameter", "--manifold", manifold, "--mode", mode])?;
        let c = check(&r, "diameter.blowup_within_bound")?;
        let bound = c["details"]["bound"].as_f64().unwrap_or(f64::NAN);
        let max = value(&r, "diameter.blowup_within_bound")?;
        ensure!((bound - 2.0 * PI).abs() <= 1e-6, "{manifold} {mode}: bound {bound}");
        ensure!(max <= 2.0 * PI + 1e-6, "{manifold} {mode}: blow-up {max} beyond 2π");
        ensure!(code == 0, "{manifold} {mode}: exit {code}");
        notes.push(format!("{mode} max {max:.6}"));
    }
    let p = ModelParams::matched(1.0, 0.0, 1).unwrap();
    let root = first_blowup_time(&p, BlowupMode::Holomorphic).map_err(|e| e.to_string())?;
    let oracle = bisect(|t| 2.0 - 2.0 * t.cos() - t * t.sin(), PI, 3.0 * PI);
    ensure!((root - 2.0 * PI).abs() <= 1e-9, "root of s = {root}");
    ensure!((oracle - 2.0 * PI).abs() <= 1e-9, "bisection oracle = {oracle}");
    Ok(format!("{}, root of s {root:.12}", notes.join(", ")))
}

fn c4_closed_orbit() -> Outcome {
    let p = ModelParams::matched(1.0, 0.0, 1).unwrap();
    let zero = first_blowup_time(&p, BlowupMode::Jacobi).map_err(|e| e.to_string())?;
    ensure!((zero - PI).abs() <= 1e-8, "first zero of det B̄ = {zero}");
    ensure!(grid(1e-3, PI - 1e-3, 500).iter().all(|&t| det_bbar(&p, t) > 0.0), "det B̄ not positive before π");

    let m = Manifold::hopf(1.0, 1, 1).unwrap();
    let times = grid(0.05, 3.0, 60);
    let mut worst: f64 = 0.0;
    for seed in 0..3u64 {
        let (x, v) = if seed == 0 {
            let x = m.origin();
            let v = horizontal_basis(&m, &x)[0].clone();
            (x, v)
        } else {
            let x = m.sample_point(&mut rng_for(seed, 0));
            let h = m.horizontal(&x, &m.sample_point(&mut rng_for(seed, 1)));
            let v = &h / m.norm(&x, &h);
            (x, v)
        };
        let oj = orbit_jacobi(&m, &x, &v, &times).map_err(|e| e.to_string())?;
        for (i, &t) in times.iter().enumerate() {
            let err = (&oj.b[i] - bbar(&p, t)).amax();
            ensure!(err <= 1e-6, "start {seed}, t={t}: B deviates by {err:.2e}");
            worst = worst.max(err);
        }
    }
    Ok(format!("first zero {zero:.12}, max |B − B̄| {worst:.1e}"))
}

fn c5_saturation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut n_max: f64 = 0.0;
    for (m, n) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2)] {
        let manifold = format!("hopf:k=1,m={m},n={n}");
        let k2 = format!("{}", ((2 * n - 2) as f64).sqrt() / 2.0);
        let (_, r) = report(&["hypotheses", "--manifold", &manifold, "--k1", "1", "--k2", &k2])?;
        let m1 = value(&r, "hypotheses.margin1")?;
        ensure!(m1.abs() <= 1e-5, "{manifold}: margin1 {m1}");
        worst = worst.max(m1.abs());
        if n >= 2 {
            let m2 = value(&r, "hypotheses.margin2")?;
            ensure!(m2.abs() <= 1e-5, "{manifold}: margin2 {m2}");
            worst = worst.max(m2.abs());
        }
        let nv = value(&r, "hypotheses.nijenhuis")?;
        ensure!(nv <= 1e-6, "{manifold}: |N| {nv}");
        n_max = n_max.max(nv);
    }
    Ok(format!("max |margin| {worst:.1e}, max |N| {n_max:.1e}"))
}

fn c6_tube_volumes() -> Outcome {
    let mut notes = Vec::new();
    for (m, target, tol) in [(1u32, 1.0, 1e-3), (2, 0.5, 1e-2)] {
        let manifold = format!("hopf:k=1,m={m},n=1");
        let (_, r) = report(&["tube", "--manifold", &manifold])?;
        let detected = value(&r, "tube.detected_m")?;
        ensure!(detected == f64::from(m), "{manifold}: detected m = {detected}");
        let ratio = column(&r, "tube", "ratio")?;
        let dev = ratio.iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
        ensure!(dev <= tol, "{manifold}: ratio off by {dev:.2e}");
        let t = column(&r, "tube", "T")?;
        ensure!((t[0] - 0.1).abs() < 1e-12 && (t[t.len() - 1] - (PI - 0.1)).abs() < 1e-12, "grid {t:?}");
        ensure!(passed(&r, "tube.monotone")?, "{manifold}: ratio not monotone");
        ensure!(passed(&r, "tube.routes_agree")?, "{manifold}: routes disagree");
        let z = value(&r, "tube.routes_agree")?;
        notes.push(format!("m={m}: |ratio − {target}| ≤ {dev:.1e}, z ≤ {z:.2}"));
    }
    Ok(notes.join("; "))
}

fn c7_equality() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in 1u32..=3 {
        let manifold = format!("hopf:k=1,m={m},n=1");
        let (code, r) = report(&["equality", "--manifold", &manifold])?;
        for id in ["equality.shape_operator", "equality.xi_tangency", "equality.j_invariance"] {
            let v = value(&r, id)?;
            ensure!(v <= 1e-6, "{manifold}: {id} = {v:.2e}");
            worst = worst.max(v);
        }
        let k = value(&r, "equality.multiplicity")?;
        ensure!(k == f64::from(m), "{manifold}: multiplicity {k}");
        ensure!(code == 0, "{manifold}: exit {code}");
    }
    Ok(format!("max residual {worst:.1e}, multiplicities 1,2,3"))
}

fn c8_symplectic() -> Outcome {
    let mut notes = Vec::new();
    for (manifold, want) in [("base:k=1,n=2", PI), ("base:k=2,n=1", PI / 2.0)] {
        let (code, r) = report(&["symplectic", "--manifold", manifold])?;
        let d = &check(&r, "symplectic.first_conjugate")?["details"];
        let (lo, hi) = (d["min"].as_f64().unwrap_or(f64::NAN), d["max"].as_f64().unwrap_or(f64::NAN));
        let dev = (lo - want).abs().max((hi - want).abs());
        ensure!(dev <= 1e-4, "{manifold}: conjugate times in [{lo}, {hi}]");
        ensure!(code == 0, "{manifold}: exit {code}");
        notes.push(format!("{manifold}: |t − {want:.6}| ≤ {dev:.1e}"));
    }
    Ok(notes.join("; "))
}

fn c9_identities() -> Outcome {
    let families = ["J.", "h.", "Rm.", "bRm.", "Ricci."];
    let mut worst: f64 = 0.0;
    for manifold in ["hopf:k=1,m=1,n=1", "heisenberg"] {
        let (code, r) = report(&["identities", "--manifold", manifold, "--samples", "200"])?;
        let checks = r["checks"].as_array().ok_or("no checks")?;
        for c in checks {
            let id = c["id"].as_str().unwrap_or_default();
            let (v, t) = (c["value"].as_f64().unwrap_or(f64::NAN), c["tolerance"].as_f64().unwrap_or(0.0));
            ensure!(t <= 1e-4, "{manifold} {id}: tolerance {t}");
            ensure!(v <= t && c["pass"] == Value::Bool(true), "{manifold} {id}: residual {v:.2e} > {t:.0e}");
            worst = worst.max(v);
        }
        let count = |prefix: &str| checks.iter().filter(|c| c["id"].as_str().unwrap_or_default().starts_with(prefix)).count();
        let want = [5, 9, 4, 6];
        for (f, w) in families.iter().zip(want) {
            ensure!(count(f) == w, "{manifold}: {} items of {f}", count(f));
        }
        ensure!(count("Ricci.") >= 2, "{manifold}: Ricci items missing");
        ensure!(r["config"]["samples"] == 200, "samples not recorded");
        ensure!(code == 0, "{manifold}: exit {code}");
    }
    Ok(format!("all items pass at 200 samples, max residual {worst:.1e}"))
}

fn c10_negative_control() -> Outcome {
    let m = Manifold::heisenberg();
    for k1 in [0.1, 0.5, 1.0, 2.0, 3.0] {
        let h = hypothesis_margins(&m, k1, 0.0, 200, 7);
        ensure!((h.margin1 + k1 * k1).abs() <= 1e-6, "k1={k1}: margin1 {}", h.margin1);
        let (code, r) = report(&["hypotheses", "--manifold", "heisenberg", "--k1", &k1.to_string()])?;
        let cli = value(&r, "hypotheses.margin1")?;
        ensure!((cli + k1 * k1).abs() <= 1e-6 && code == 1, "CLI k1={k1}: margin1 {cli}, exit {code}");
    }
    for mode in ["full", "holomorphic", "orbit"] {
        let (code, r) = report(&["riccati", "--manifold", "heisenberg", "--mode", mode, "--t-max", "20"])?;
        ensure!(passed(&r, "riccati.blowup_time")?, "{mode}: blow-up before t = 20");
        ensure!(r["config"]["command"]["t_max"] == 20.0, "{mode}: horizon not recorded");
        let t = column(&r, "riccati", "t")?;
        ensure!((t[t.len() - 1] - 20.0).abs() < 1e-9, "{mode}: integration stopped at {}", t[t.len() - 1]);
        ensure!(code == 0, "{mode}: exit {code}");
    }
    let (_, r) = report(&["diameter", "--manifold", "heisenberg"])?;
    ensure!(!passed(&r, "diameter.hypothesis")?, "heisenberg passes the hypothesis");
    ensure!(passed(&r, "diameter.no_blowup")?, "diameter run found a blow-up");
    Ok("margin1 = −k₁² for k₁ ∈ {0.1,0.5,1,2,3}; no blow-up up to t = 20".into())
}

fn c11_determinism() -> Outcome {
    let runs: &[&[&str]] = &[
        &["identities", "--samples", "20"],
        &["hypotheses", "--manifold", "hopf:k=1,m=2,n=2", "--samples", "20"],
        &["geodesic", "--a", "0.3", "--rows", "11"],
        &["geodesic", "--output", "csv", "--rows", "11"],
        &["riccati", "--mode", "full", "--a", "0.5", "--rows", "11"],
        &["diameter", "--samples", "2", "--pairs", "1"],
        &["tube", "--grid", "3", "--angular", "4", "--pieces", "8", "--samples", "100", "--t-max", "2"],
        &["equality", "--samples", "4", "--seed", "11"],
        &["symplectic", "--manifold", "base:k=1,n=1", "--samples", "2"],
    ];
    for args in runs {
        let a = cclab(args);
        let b = cclab(args);
        ensure!(!a.stdout.is_empty(), "{args:?}: empty output ({})", a.stderr);
        ensure!(a.stdout == b.stdout && a.code == b.code, "{args:?}: outputs differ");
    }
    Ok(format!("{} subcommand configurations reproduced byte for byte", runs.len()))
}

/// Straight to the stderr handle: the harness only captures the print
/// macros, so these lines show up even when the test passes.
fn line(text: String) {
    let _ = writeln!(std::io::stderr(), "{text}");
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("model geodesics", c1_model_geodesics),
        ("closed-form Riccati residual", c2_closed_form_riccati),
        ("diameter bounds", c3_diameter_bounds),
        ("closed-orbit bound", c4_closed_orbit),
        ("hypothesis saturation", c5_saturation),
        ("tube volumes", c6_tube_volumes),
        ("equality diagnostics", c7_equality),
        ("symplectic analogue", c8_symplectic),
        ("identity suite", c9_identities),
        ("negative control", c10_negative_control),
        ("determinism", c11_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let outcome = run();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => line(format!("criterion {}: PASS ({name}) {msg} [{secs:.1}s]", i + 1)),
            Err(msg) => {
                line(format!("criterion {}: FAIL ({name}) {msg} [{secs:.1}s]", i + 1));
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
