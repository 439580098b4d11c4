//! Subcommand bodies: call the library, turn results into checks and series.

use std::f64::consts::PI;

use cclab::comparison::{
    diameter_check, equality_diagnostics, symplectic_conjugate_check, tube_volume, EstimateKind, TubeConfig,
    MARGIN_SAMPLES,
};
use cclab::geodesics::{first_return, horizontal_basis, integrate_geodesic, integrate_geodesic_with, GeodesicOptions};
use cclab::identities::{hypothesis_margins, run_identity_suite};
use cclab::numerics::{max_eigenvalue, min_eigenvalue, Vector};
use cclab::riccati::{
    first_blowup_time, integrate_riccati_holomorphic, integrate_riccati_orbit, integrate_riccati_s1,
    integrate_riccati_symplectic, integrate_riccati_trace, integrate_symplectic_block, integrate_symplectic_trace,
    s1_initial, sbar0, BlowupMode, ModelParams, RiccatiTrace, SINGULAR_T0,
};
use cclab::{Error, Manifold, Model};
use serde_json::{json, Value};

use crate::report::{opt, Check, Report, Series};
use crate::{Cli, Command, DiameterKind, RiccatiKind, Usage};

pub enum Failure {
    Usage(Usage),
    Run(String),
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(Usage(format!("{flag}: {msg}")))
}

/// Library errors: bad inputs are usage errors naming `flag`, the rest are
/// run failures.
fn lib(flag: &'static str) -> impl Fn(Error) -> Failure {
    move |e| match e {
        Error::Parse { .. } | Error::InvalidParameter(_) | Error::NotApplicable(_) => usage(flag, e),
        e => Failure::Run(e.to_string()),
    }
}

type Output = (Vec<Check>, Vec<Series>);

pub fn run(cli: &Cli) -> Result<Report, Failure> {
    let m = Manifold::parse(&cli.manifold).map_err(|e| usage("--manifold", e))?;
    let tol = |default: f64| cli.tol.unwrap_or(default);
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(usage("--tol", "must be positive"));
        }
    }
    let samples = |default: usize| cli.samples.unwrap_or(default);
    if cli.samples == Some(0) {
        return Err(usage("--samples", "must be positive"));
    }
    // Defaults that depend on the manifold, written back into the config.
    let mut resolved: Vec<(&str, Value)> = Vec::new();
    let (used, (checks, series)) = match &cli.command {
        Command::Identities { select } => (samples(200), identities(&m, select, samples(200), cli.seed, cli.tol)?),
        Command::Hypotheses { k1, k2 } => (samples(200), hypotheses(&m, *k1, *k2, samples(200), cli.seed, tol)?),
        Command::Geodesic { a, t_max, point, direction, rows } => {
            (0, geodesic(&m, *a, *t_max, point.as_deref(), direction.as_deref(), *rows, tol)?)
        }
        Command::Riccati { mode, a, t_max, rows } => {
            let (out, horizon) = riccati(&m, *mode, *a, *t_max, *rows, tol)?;
            resolved.push(("t_max", json!(horizon)));
            (0, out)
        }
        Command::Diameter { mode, pairs } => (samples(8), diameter(&m, *mode, samples(8), *pairs, cli.seed, tol)?),
        Command::Tube { t_min, t_max, grid, angular, pieces } => {
            let cfg = TubeConfig {
                angular: *angular,
                mc_samples: samples(2000),
                pieces: *pieces,
                ..TubeConfig::uniform(*t_min, *t_max, *grid, cli.seed)
            };
            if !(*t_min > 0.0 && t_max > t_min) {
                return Err(usage("--t-min", "need 0 < t-min < t-max"));
            }
            if *grid == 0 || *angular == 0 || *pieces == 0 {
                return Err(usage("--grid", "grid, angular and pieces must be positive"));
            }
            (samples(2000), tube(&m, &cfg, tol)?)
        }
        Command::Equality { k1 } => {
            let (out, k1) = equality(&m, *k1, samples(50), cli.seed, tol)?;
            resolved.push(("k1", json!(k1)));
            (samples(50), out)
        }
        Command::Symplectic => (samples(8), symplectic(&m, samples(8), cli.seed, tol)?),
    };
    let mut config = serde_json::to_value(cli).expect("config serializes");
    config["manifold"] = Value::String(m.to_string());
    config["samples"] = json!(used);
    for (key, v) in resolved {
        config["command"][key] = v;
    }
    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        checks,
        series,
    })
}

fn parse_vector(flag: &str, s: &str, len: usize) -> Result<Vector, Failure> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(flag, e))?;
    if xs.len() != len || xs.iter().any(|x| !x.is_finite()) {
        return Err(usage(flag, format!("expected {len} finite comma-separated numbers")));
    }
    Ok(Vector::from_vec(xs))
}

fn identities(m: &Manifold, select: &[String], samples: usize, seed: u64, tol: Option<f64>) -> Result<Output, Failure> {
    let rep = run_identity_suite(m, select, samples, seed);
    if let Some(reason) = &rep.not_applicable {
        let c = Check::new("identities.applicable", None, None, false).with_details(json!({ "reason": reason }));
        return Ok((vec![c], vec![]));
    }
    if rep.results.is_empty() {
        return Err(usage("--select", "no identity matches the selection"));
    }
    let mut series = Series::new("identities", &["item", "samples", "max_residual", "tolerance", "pass"]);
    let mut checks = Vec::new();
    for (i, r) in rep.results.iter().enumerate() {
        let t = tol.unwrap_or(r.tolerance);
        let pass = r.max_residual <= t;
        series.push(vec![i as f64, r.samples as f64, r.max_residual, t, f64::from(u8::from(pass))]);
        checks.push(Check::new(r.id.clone(), Some(r.max_residual), Some(t), pass).with_details(json!({ "samples": r.samples })));
    }
    Ok((checks, vec![series]))
}

fn hypotheses(m: &Manifold, k1: f64, k2: f64, samples: usize, seed: u64, tol: impl Fn(f64) -> f64) -> Result<Output, Failure> {
    if !(k1 >= 0.0 && k1.is_finite()) {
        return Err(usage("--k1", "must be a finite non-negative number"));
    }
    if !(k2 >= 0.0 && k2.is_finite()) {
        return Err(usage("--k2", "must be a finite non-negative number"));
    }
    let h = hypothesis_margins(m, k1, k2, samples, seed);
    let t = tol(1e-5);
    let details = json!({
        "holomorphic_min": h.holomorphic_min,
        "trace_min": h.trace_min,
        "samples": h.samples,
        "seed": h.seed,
    });
    let mut checks = vec![Check::new("hypotheses.margin1", Some(h.margin1), Some(t), h.margin1 >= -t).with_details(details)];
    if let Some(m2) = h.margin2 {
        checks.push(Check::new("hypotheses.margin2", Some(m2), Some(t), m2 >= -t));
    }
    checks.push(Check::at_most("hypotheses.nijenhuis", h.n_max, 1e-6));
    let mut s = Series::new("margins", &["k1", "k2", "margin1", "margin2", "holomorphic_min", "trace_min", "n_max"]);
    s.push(vec![k1, k2, h.margin1, opt(h.margin2), h.holomorphic_min, opt(h.trace_min), h.n_max]);
    Ok((checks, vec![s]))
}

fn geodesic(
    m: &Manifold,
    a: f64,
    t_max: f64,
    point: Option<&str>,
    direction: Option<&str>,
    rows: usize,
    tol: impl Fn(f64) -> f64,
) -> Result<Output, Failure> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(usage("--t-max", "must be positive"));
    }
    if rows < 2 {
        return Err(usage("--rows", "need at least 2 rows"));
    }
    if !a.is_finite() || (!m.is_contact() && a != 0.0) {
        return Err(usage("--a", "a must be finite, and 0 on CP^n"));
    }
    let dim = m.ambient_dim();
    let p = match point {
        Some(s) => parse_vector("--point", s, dim)?,
        None => m.origin(),
    };
    if m.constraint_residual(&p) > 1e-9 {
        return Err(usage("--point", "the point is not on the manifold"));
    }
    let v = match direction {
        Some(s) => {
            let w = m.horizontal(&p, &m.tangent_project(&p, &parse_vector("--direction", s, dim)?));
            let len = m.norm(&p, &w);
            if !(len > 1e-12) {
                return Err(usage("--direction", "no horizontal component"));
            }
            w / len
        }
        None => horizontal_basis(m, &p)[0].clone(),
    };
    let rec = integrate_geodesic(m, &p, &v, a, t_max).map_err(lib("--t-max"))?;
    let mut cols = vec!["t".to_string()];
    cols.extend((0..dim).map(|i| format!("x{i}")));
    cols.extend((0..dim).map(|i| format!("v{i}")));
    let mut s = Series::with_columns("geodesic", cols);
    let (mut speed, mut constraint, mut horizontal): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..rows {
        let t = t_max * i as f64 / (rows - 1) as f64;
        let st = rec.state(t);
        speed = speed.max((m.norm(&st.position, &st.velocity) - 1.0).abs());
        constraint = constraint.max(m.constraint_residual(&st.position));
        if m.is_contact() {
            horizontal = horizontal.max(m.eta(&st.position, &st.velocity).abs());
        }
        let mut row = vec![t];
        row.extend(st.position.iter());
        row.extend(st.velocity.iter());
        s.push(row);
    }
    let checks = vec![
        Check::at_most("geodesic.unit_speed", speed, tol(1e-8)),
        Check::at_most("geodesic.on_manifold", constraint, tol(1e-9)),
        Check::at_most("geodesic.horizontal", horizontal, tol(1e-8)),
    ];
    Ok((checks, vec![s]))
}

/// What the model predicts for the blow-up time of a Riccati run.
enum Expect {
    At(f64),
    Never,
    Unknown,
}

fn riccati_expectation(m: &Manifold, mode: RiccatiKind, a: f64) -> Result<Expect, Failure> {
    let n = m.n();
    Ok(match m.model() {
        Model::Hopf { k, .. } => {
            let p = ModelParams::matched(k, a, n).map_err(lib("--a"))?;
            let at = |mode| first_blowup_time(&p, mode).map(Expect::At).map_err(lib("--mode"));
            match mode {
                RiccatiKind::Holomorphic => at(BlowupMode::Holomorphic)?,
                RiccatiKind::Full if n == 1 => at(BlowupMode::Holomorphic)?,
                RiccatiKind::Trace if a == 0.0 => at(BlowupMode::Trace)?,
                RiccatiKind::Orbit => at(BlowupMode::Jacobi)?,
                _ => Expect::Unknown,
            }
        }
        Model::Base { k, .. } => match mode {
            RiccatiKind::Symplectic | RiccatiKind::SymplecticBlock => Expect::At(PI / k),
            // Transverse sectional curvature k²/4 on every 2n−2 directions.
            RiccatiKind::SymplecticTrace => Expect::At(2.0 * PI / k),
            _ => Expect::Unknown,
        },
        Model::Heisenberg if a == 0.0 => Expect::Never,
        Model::Heisenberg => Expect::Unknown,
    })
}

fn riccati(
    m: &Manifold,
    mode: RiccatiKind,
    a: f64,
    t_max: Option<f64>,
    rows: usize,
    tol: impl Fn(f64) -> f64,
) -> Result<(Output, f64), Failure> {
    let symplectic = matches!(
        mode,
        RiccatiKind::Symplectic | RiccatiKind::SymplecticBlock | RiccatiKind::SymplecticTrace
    );
    if symplectic == m.is_contact() {
        return Err(usage("--mode", format!("mode {mode:?} does not apply to {m}")));
    }
    if !a.is_finite() || (symplectic && a != 0.0) {
        return Err(usage("--a", "a must be finite, and 0 on CP^n"));
    }
    if rows < 2 {
        return Err(usage("--rows", "need at least 2 rows"));
    }
    let expect = riccati_expectation(m, mode, a)?;
    let t_max = match (t_max, &expect) {
        (Some(t), _) => t,
        (None, Expect::At(t)) => 1.1 * t + 0.5,
        (None, _) => 20.0,
    };
    if !(t_max > SINGULAR_T0 && t_max.is_finite()) {
        return Err(usage("--t-max", format!("must exceed {SINGULAR_T0}")));
    }
    let p = m.origin();
    let v = horizontal_basis(m, &p)[0].clone();
    let rec = integrate_geodesic_with(m, &p, &v, a, t_max, &GeodesicOptions::with_frame()).map_err(lib("--t-max"))?;
    let t0 = SINGULAR_T0;
    let trace: RiccatiTrace = match mode {
        RiccatiKind::Full => {
            let d = rec.frame(0.0).len();
            integrate_riccati_s1(&rec, &s1_initial(d, a, t0), t0, t_max)
        }
        RiccatiKind::Holomorphic => integrate_riccati_holomorphic(&rec, t0, t_max),
        RiccatiKind::Trace => integrate_riccati_trace(&rec, t0, t_max),
        RiccatiKind::Orbit => integrate_riccati_orbit(&rec, t0, t_max),
        RiccatiKind::Symplectic => integrate_riccati_symplectic(&rec, t0, t_max),
        RiccatiKind::SymplecticBlock => integrate_symplectic_block(&rec, t0, t_max),
        RiccatiKind::SymplecticTrace => integrate_symplectic_trace(&rec, t0, t_max),
    }
    .map_err(lib("--mode"))?;

    let model = match (m.model(), mode) {
        (Model::Hopf { k, .. }, RiccatiKind::Holomorphic) => Some(ModelParams::matched(k, a, m.n()).map_err(lib("--a"))?),
        _ => None,
    };
    let mut s = Series::new("riccati", &["t", "lambda_min", "lambda_max", "trace", "model_trace"]);
    let t_end = trace.t_end();
    for i in 0..rows {
        let t = t0 + (t_end - t0) * i as f64 / (rows - 1) as f64;
        let sm = trace.eval(t);
        let model_trace = model.as_ref().and_then(|p| sbar0(p, t).ok()).map(|x| x.trace());
        s.push(vec![t, min_eigenvalue(&sm), max_eigenvalue(&sm), sm.trace(), opt(model_trace)]);
    }
    let mut checks = vec![Check::at_most("riccati.symmetry", trace.max_asymmetry, 1e-6)];
    let t = tol(1e-4);
    checks.push(match expect {
        Expect::At(want) => {
            let got = trace.blowup_time;
            let err = got.map_or(f64::INFINITY, |g| (g - want).abs());
            Check::new("riccati.blowup_time", got, Some(t), err <= t).with_details(json!({ "model": want }))
        }
        Expect::Never => Check::new("riccati.blowup_time", trace.blowup_time, None, trace.blowup_time.is_none())
            .with_details(json!({ "model": null, "horizon": t_max })),
        Expect::Unknown => {
            Check::new("riccati.blowup_time", trace.blowup_time, None, true).with_details(json!({ "model": "unavailable" }))
        }
    });
    Ok(((checks, vec![s]), t_max))
}

fn blowup_series(est: &cclab::comparison::DiameterEstimate) -> Series {
    let mut s = Series::new("blowup", &["sample", "a", "first", "block", "trace"]);
    for (i, b) in est.samples.iter().enumerate() {
        s.push(vec![i as f64, b.a, opt(b.first), opt(b.block), opt(b.trace)]);
    }
    s
}

fn diameter(m: &Manifold, mode: DiameterKind, samples: usize, pairs: usize, seed: u64, tol: impl Fn(f64) -> f64) -> Result<Output, Failure> {
    let kind = match mode {
        DiameterKind::Holomorphic => EstimateKind::Holomorphic,
        DiameterKind::Trace => EstimateKind::Trace,
    };
    let est = diameter_check(m, kind, samples, pairs, seed).map_err(lib("--mode"))?;
    let mut checks = vec![Check::new("diameter.hypothesis", Some(est.k), None, est.applicable)
        .with_details(json!({ "note": est.note, "margin_samples": MARGIN_SAMPLES }))];
    if est.applicable {
        let t = tol(1e-6);
        let bound = est.bound.unwrap_or(f64::NAN);
        checks.push(
            Check::new("diameter.blowup_within_bound", est.max_blowup, Some(t), est.within_bound(t))
                .with_details(json!({ "bound": bound, "min_blowup": est.min_blowup })),
        );
        if let Some(d) = est.empirical_max_distance {
            checks.push(
                Check::new("diameter.empirical_distance", Some(d), Some(1e-4), d <= bound + 1e-4)
                    .with_details(json!({ "bound": bound, "pairs": pairs })),
            );
        }
    } else {
        checks.push(
            Check::new("diameter.no_blowup", Some(est.horizon), None, est.no_blowup())
                .with_details(json!({ "horizon": est.horizon })),
        );
    }
    Ok((checks, vec![blowup_series(&est)]))
}

fn tube(m: &Manifold, cfg: &TubeConfig, tol: impl Fn(f64) -> f64) -> Result<Output, Failure> {
    let rep = tube_volume(m, cfg).map_err(lib("--manifold"))?;
    let max_ratio = rep.ratio.iter().cloned().fold(f64::MIN, f64::max);
    let t = tol(1e-3);
    let mut checks = vec![
        Check::new("tube.detected_m", rep.detected_m.map(f64::from), None, rep.detected_m.is_some())
            .with_details(json!({ "orbit_length": rep.orbit_length, "cover_orbit_length": rep.cover_orbit_length })),
        Check::new("tube.ratio_at_most_one", Some(max_ratio), Some(t), max_ratio <= 1.0 + t),
        Check::new("tube.monotone", None, None, rep.monotone),
    ];
    if let (Some(z), Some(agree)) = (&rep.route_z, rep.routes_agree) {
        let zmax = z.iter().cloned().fold(0.0, f64::max);
        checks.push(
            Check::new("tube.routes_agree", Some(zmax), Some(3.0), agree)
                .with_details(json!({ "mc_samples": cfg.mc_samples, "unresolved": rep.mc_unresolved })),
        );
    }
    let mut s = Series::new(
        "tube",
        &["T", "volume", "volume_err", "model_volume", "ratio", "ratio_err", "mc_volume", "mc_err", "z"],
    );
    for i in 0..rep.t_grid.len() {
        let pick = |v: &Option<Vec<f64>>| v.as_ref().map_or(f64::NAN, |v| v[i]);
        s.push(vec![
            rep.t_grid[i],
            rep.volume[i],
            rep.volume_err[i],
            rep.model_volume[i],
            rep.ratio[i],
            rep.ratio_err[i],
            pick(&rep.mc_volume),
            pick(&rep.mc_err),
            pick(&rep.route_z),
        ]);
    }
    Ok((checks, vec![s]))
}

fn equality(m: &Manifold, k1: Option<f64>, samples: usize, seed: u64, tol: impl Fn(f64) -> f64) -> Result<(Output, f64), Failure> {
    if !m.is_contact() {
        return Err(usage("--manifold", format!("{m} has no Reeb orbits")));
    }
    let k1 = match k1 {
        Some(k) => k,
        None => {
            let h = hypothesis_margins(m, 0.0, 0.0, MARGIN_SAMPLES, seed);
            if h.holomorphic_min <= 1e-9 {
                return Err(usage("--k1", format!("{m} has no positive holomorphic curvature bound")));
            }
            h.holomorphic_min.sqrt()
        }
    };
    let d = equality_diagnostics(m, k1, samples, seed).map_err(lib("--k1"))?;
    let x = m.origin();
    let cover = first_return(m, &x, false).map_err(lib("--manifold"))?;
    let own = first_return(m, &x, true).map_err(lib("--manifold"))?;
    let expected = (cover / own).round();
    let t = tol(1e-6);
    let tp = tol(1e-4);
    let checks = vec![
        Check::at_most("equality.collapse", d.collapse_residual, t),
        Check::at_most("equality.shape_operator", d.shape_norm, t),
        Check::at_most("equality.xi_tangency", d.xi_tangency, t),
        Check::at_most("equality.j_invariance", d.j_invariance, t),
        Check::at_most("equality.focal_circle_on_orbit", d.circle_residual, t),
        Check::new(
            "equality.rotation_period",
            Some(d.rotation_period),
            Some(tp),
            (d.rotation_period - d.reeb_period).abs() <= tp,
        )
        .with_details(json!({
            "reeb_period": d.reeb_period,
            "rotation_rate": d.rotation_rate,
            "rotation_spread": d.rotation_spread,
            "rate_reading": d.rate_reading,
        })),
        Check::new(
            "equality.reeb_time_per_turn",
            Some(d.reeb_time_per_turn),
            Some(tp),
            (d.reeb_time_per_turn - d.reeb_period).abs() <= tp,
        ),
        Check::new(
            "equality.multiplicity",
            d.multiplicity.map(f64::from),
            None,
            d.multiplicity.is_some_and(|k| f64::from(k) == expected),
        )
        .with_details(json!({ "expected": expected })),
    ];
    let dim = m.ambient_dim();
    let mut s = Series::with_columns("focal_points", (0..dim).map(|i| format!("x{i}")).collect());
    for p in &d.focal_points {
        s.push(p.clone());
    }
    Ok(((checks, vec![s]), k1))
}

fn symplectic(m: &Manifold, samples: usize, seed: u64, tol: impl Fn(f64) -> f64) -> Result<Output, Failure> {
    let est = symplectic_conjugate_check(m, samples, seed).map_err(lib("--manifold"))?;
    let mut checks = vec![Check::new("symplectic.hypothesis", Some(est.k), None, est.applicable)];
    if let Some(bound) = est.bound {
        let t = tol(1e-4);
        let dev = |f: fn(&cclab::comparison::BlowupSample) -> Option<f64>, b: f64| {
            est.samples
                .iter()
                .map(|s| f(s).map_or(f64::INFINITY, |x| (x - b).abs()))
                .fold(0.0, f64::max)
        };
        checks.push(
            Check::new("symplectic.first_conjugate", Some(dev(|s| s.first, bound)), Some(t), dev(|s| s.first, bound) <= t)
                .with_details(json!({ "bound": bound, "max": est.max_blowup, "min": est.min_blowup })),
        );
        checks.push(Check::new(
            "symplectic.within_bound",
            est.max_blowup,
            Some(1e-6),
            est.within_bound(1e-6),
        ));
        checks.push(Check::at_most("symplectic.block", dev(|s| s.block, bound), t));
        if let Some(tb) = est.trace_bound {
            let tt = tol(1e-3);
            checks.push(Check::at_most("symplectic.trace", dev(|s| s.trace, tb), tt).with_details(json!({ "bound": tb, "k2": est.k2 })));
        }
    }
    Ok((checks, vec![blowup_series(&est)]))
}
