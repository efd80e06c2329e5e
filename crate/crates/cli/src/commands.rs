use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use weingarten::integrator::{integrate_cm, umbilic_slope_estimate, RunReport, SampledCurve, StopReason};
use weingarten::mesh::revolve_table;
use weingarten::mobius::{ads_invariants, decompose, induced_surface, transform_relation, MoebiusElement, SurfaceKind};
use weingarten::relations::{parse_relation, WeingartenRelation};
use weingarten::roc_core::{cm_residual, fmt17, support_with_constant, ProfileTable, RoCProfile, SupportProfile};
use weingarten::semiquadratic::{classify, reduce_to_pure_linear};
use weingarten::variational::{
    general_lagrangian, report, states_along, Lagrangian, LagrangianSpec, BASIS_SIZE,
};
use weingarten::{Pole, RoCPoint};

use crate::config::RunConfig;
use crate::io::{emit, json, read_table, write_atomic};
use crate::CliError;

pub fn dispatch(name: &str, cfg: &RunConfig) -> Result<(), CliError> {
    let result = match name {
        "parse" => parse(cfg)?,
        "integrate" => integrate(cfg)?,
        "transform" => transform(cfg)?,
        "classify" => classify_cmd(cfg)?,
        "reduce" => reduce(cfg)?,
        "variational" => variational(cfg)?,
        "export-mesh" => export_mesh(cfg)?,
        "report" => profile_report(cfg)?,
        _ => unreachable!(),
    };
    let out = json(&json!({ "schema": 1, "command": name, "config": cfg.to_json(), "result": result }));
    match name {
        // these write a data file; the JSON goes beside it or to --report
        "integrate" | "transform" | "export-mesh" => match report_path(cfg) {
            Some(p) => write_atomic(&p, &out),
            None => Ok(()),
        },
        _ => emit(cfg.report.as_deref().or(cfg.output.as_deref()), &out),
    }
}

fn report_path(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.report.clone().or_else(|| cfg.output.as_ref().map(|p| p.with_extension("json")))
}

fn relation(cfg: &RunConfig) -> Result<WeingartenRelation, CliError> {
    let text = cfg.relation.as_deref().ok_or_else(|| CliError::usage("--relation is required"))?;
    Ok(parse_relation(text)?)
}

fn input(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.input.as_deref().ok_or_else(|| CliError::usage("--input is required"))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

fn parse(cfg: &RunConfig) -> Result<Value, CliError> {
    let rel = relation(cfg)?;
    Ok(json!({ "render": rel.render(), "relation": to_value(&rel), "k_coefficients": rel.k_coefficients() }))
}

fn run_profile(rel: &WeingartenRelation, cfg: &RunConfig) -> Result<(RoCProfile, RunReport), CliError> {
    let r1 = cfg.r1.ok_or_else(|| CliError::usage("--r1 is required"))?;
    let [a, b] = cfg.interval;
    let run = integrate_cm(rel, cfg.theta0, r1, (a, b), &cfg.step)?;
    for stop in [&run.stop_low, &run.stop_high] {
        if !matches!(stop, StopReason::Completed | StopReason::PoleApproach { .. }) {
            eprintln!("warning: integration stopped early: {}", serde_json::to_string(stop).unwrap());
        }
    }
    let rep = RunReport::new(rel, cfg.theta0, r1, &run, &cfg.step)?;
    Ok((run.profile, rep))
}

fn integrate(cfg: &RunConfig) -> Result<Value, CliError> {
    let rel = relation(cfg)?;
    let (profile, rep) = run_profile(&rel, cfg)?;
    let meta = vec![
        ("relation".to_string(), rel.render()),
        ("theta0".to_string(), fmt17(cfg.theta0)),
        ("r1".to_string(), fmt17(cfg.r1.unwrap())),
        ("tolerance".to_string(), fmt17(profile.tolerance)),
    ];
    emit(cfg.output.as_deref(), &ProfileTable::from_profile(&profile, meta).to_csv())?;
    Ok(to_value(&rep))
}

fn transform(cfg: &RunConfig) -> Result<Value, CliError> {
    let table = read_table(input(cfg)?)?;
    let [a, b, c, d] = cfg.matrix.ok_or_else(|| CliError::usage("--matrix is required"))?;
    let m = MoebiusElement::strict(a, b, c, d)?;
    let p = table.to_profile()?;
    let h = table.h.iter().all(|x| x.is_finite()).then_some(table.h.as_slice());
    let s = induced_surface(&m, &p, h, cfg.calibration, cfg.branch)?;
    let factors = decompose(&m);
    let mut out = json!({
        "factors": factors.to_string(),
        "factor_list": to_value(&factors),
        "calibration": s.calibration,
        "kind": to_value(&s.kind),
    });
    let Some(profile) = &s.profile else {
        let what = match s.kind {
            SurfaceKind::Plane => "a plane".to_string(),
            SurfaceKind::Cone { theta } => format!("a cone with Gauss angle {theta}"),
            SurfaceKind::Regular => unreachable!(),
        };
        eprintln!("warning: the image is {what}; no profile written");
        return Ok(out);
    };
    let mut meta = vec![("matrix".to_string(), [a, b, c, d].map(fmt17).join(","))];
    meta.push(("calibration".into(), fmt17(s.calibration)));
    let source_rel = cfg.relation.clone().or_else(|| table.meta_value("relation").map(String::from));
    if let Some(text) = source_rel {
        if let Ok(image) = parse_relation(&text).and_then(|r| transform_relation(&m, &r)) {
            meta.push(("relation".into(), image.render()));
        }
    }
    meta.push(("tolerance".into(), fmt17(profile.tolerance)));
    let mut t = ProfileTable::from_profile(profile, meta);
    if let Some(curve) = &s.curve {
        t.rho = curve.rho.clone();
        t.h = curve.h.clone();
    }
    emit(cfg.output.as_deref(), &t.to_csv())?;
    out["samples"] = json!(profile.len());
    out["source_range"] = json!([p.grid[s.source_index[0]], p.grid[*s.source_index.last().unwrap()]]);
    out["cm_residual_max"] = json!(cm_residual(profile).ok().map(|r| r.max_abs()));
    Ok(out)
}

fn classify_cmd(cfg: &RunConfig) -> Result<Value, CliError> {
    Ok(to_value(&classify(&relation(cfg)?)?))
}

fn reduce(cfg: &RunConfig) -> Result<Value, CliError> {
    let r = reduce_to_pure_linear(&relation(cfg)?)?;
    Ok(json!({ "lambda": r.lambda, "matrix": to_value(&r.matrix), "factors": decompose(&r.matrix).to_string() }))
}

/// Support function with the homogeneous term fixed at π/2, or at the middle
/// sample when the profile does not reach the equator.
fn support_of(p: &RoCProfile) -> Result<(SupportProfile, f64), CliError> {
    let (lo, hi) = (p.grid[0], *p.grid.last().unwrap());
    let anchor = if lo <= FRAC_PI_2 && FRAC_PI_2 <= hi { FRAC_PI_2 } else { p.grid[p.len() / 2] };
    let s = support_with_constant(p, anchor, 0.0)?;
    let i = (0..p.len()).min_by(|&i, &j| (p.grid[i] - anchor).abs().total_cmp(&(p.grid[j] - anchor).abs())).unwrap();
    let base = p.points[i].r1.finite().ok_or_else(|| CliError::usage("r1 is infinite at the anchor"))?;
    Ok((s, base))
}

fn variational(cfg: &RunConfig) -> Result<Value, CliError> {
    let (rel, profile) = match &cfg.input {
        Some(path) => {
            let t = read_table(path)?;
            let text = cfg.relation.clone().or_else(|| t.meta_value("relation").map(String::from));
            let text = text.ok_or_else(|| CliError::usage("--relation is required"))?;
            (parse_relation(&text)?, t.to_profile()?)
        }
        None => {
            let rel = relation(cfg)?;
            let (p, _) = run_profile(&rel, cfg)?;
            (rel, p)
        }
    };
    let (support, base) = support_of(&profile)?;
    let window = (cfg.window[0], cfg.window[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let combos: Vec<Vec<f64>> =
        (0..cfg.combos).map(|_| (0..BASIS_SIZE).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let spec = match cfg.lagrangian.as_str() {
        "l0" => LagrangianSpec::L0,
        "l1" => match rel {
            WeingartenRelation::LinearHopf { lambda, c } => LagrangianSpec::HopfL1 { lambda, c },
            WeingartenRelation::CubicRoC { gamma } => LagrangianSpec::CubicL1 { gamma },
            _ => return Err(CliError::usage("l1 is defined for r2 = lambda*r1 + C and r2 = gamma^2*r1^3 only")),
        },
        "general" => {
            let n = cfg.samples.max(2);
            let thetas: Vec<f64> = (0..=n).map(|i| window.0 + (window.1 - window.0) * i as f64 / n as f64).collect();
            let states = states_along(&support, &thetas)?;
            let g = general_lagrangian(&rel, cfg.f, base, &states)?;
            let rep = match g.spec {
                LagrangianSpec::General { .. } => None,
                spec => Some(report(&Lagrangian::new(spec, &rel, base)?, &support, window, cfg.samples, &combos)?),
            };
            return Ok(json!({ "general": to_value(&g), "report": rep.map(|r| to_value(&r)) }));
        }
        other => return Err(CliError::usage(format!("unknown lagrangian '{other}': use l0, l1 or general"))),
    };
    let lag = Lagrangian::new(spec, &rel, base)?;
    Ok(to_value(&report(&lag, &support, window, cfg.samples, &combos)?))
}

fn export_mesh(cfg: &RunConfig) -> Result<Value, CliError> {
    let mut t = read_table(input(cfg)?)?;
    if !t.theta.is_empty() && t.rho.iter().chain(&t.h).all(|x| x.is_nan()) {
        let full = ProfileTable::from_profile(&t.to_profile()?, Vec::new());
        t.rho = full.rho;
        t.h = full.h;
    }
    let mesh = revolve_table(&t, cfg.segments)?;
    for w in &mesh.warnings {
        eprintln!("warning: {w}");
    }
    emit(cfg.output.as_deref(), &mesh.to_obj())?;
    Ok(json!({
        "vertices": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "euler_characteristic": mesh.euler_characteristic(),
        "watertight": mesh.is_watertight(),
        "boundary_loops": mesh.boundary_loops(),
        "warnings": mesh.warnings,
    }))
}

fn endpoint(p: &RoCProfile, i: usize) -> Option<RoCPoint> {
    Some(p.points[i]).filter(|q| q.finite().is_some())
}

fn profile_report(cfg: &RunConfig) -> Result<Value, CliError> {
    let t = read_table(input(cfg)?)?;
    let mut p = t.to_profile()?;
    let n = p.len();
    if p.grid[0] == 0.0 {
        p.pole_values.north = endpoint(&p, 0);
    }
    if p.grid[n - 1] == PI {
        p.pole_values.south = endpoint(&p, n - 1);
    }
    let err = |e: weingarten::Error| json!({ "error": e.to_string() });
    let mut umbilic = Vec::new();
    for (pole, present) in [(Pole::North, p.pole_values.north.is_some()), (Pole::South, p.pole_values.south.is_some())] {
        if present {
            let a = umbilic_slope_estimate(&SampledCurve { profile: &p, pole });
            umbilic.push(a.map(|a| to_value(&a)).unwrap_or_else(err));
        }
    }
    let ads = ads_invariants(&p).map(|a| json!({ "drift": a.drift, "skipped": a.skipped })).unwrap_or_else(err);
    let mut out = json!({
        "samples": n,
        "theta_range": [p.grid[0], p.grid[n - 1]],
        "cm_residual_max": cm_residual(&p).map(|r| json!(r.max_abs())).unwrap_or_else(err),
        "umbilic": umbilic,
        "ads": ads,
    });
    let text = cfg.relation.clone().or_else(|| t.meta_value("relation").map(String::from));
    if let Some(text) = text {
        let rel = parse_relation(&text)?;
        // relative defect |r₂ − F(r₁)| / (1 + |r₂|) over finite samples
        let defect = p
            .points
            .iter()
            .filter_map(|q| q.finite())
            .filter_map(|(a, b)| rel.f(a).ok().map(|f| (b - f).abs() / (1.0 + b.abs())))
            .fold(0.0f64, f64::max);
        out["relation"] = json!({
            "render": rel.render(),
            "consistency_max": defect,
            "classification": classify(&rel).ok().map(|c| to_value(&c)),
        });
    }
    Ok(out)
}
