use std::f64::consts::{FRAC_PI_2, PI};

use weingarten::integrator::{integrate_cm, RunReport, StepControl};
use weingarten::mobius::{induced_surface, verify_transform_properties, Branch, CalibrationChoice, MoebiusElement};
use weingarten::relations::parse_relation;
use weingarten::roc_core::{cm_residual, embed_profile, support_with_constant, ProfileTable};
use weingarten::semiquadratic::{classify, reduce_to_pure_linear, QwClass};
use weingarten::variational::{report, Lagrangian, LagrangianSpec};

#[test]
fn integrate_export_and_reload() {
    let rel = parse_relation("r2 = 2*r1").unwrap();
    let ctrl = StepControl { intervals: 512, ..Default::default() };
    let run = integrate_cm(&rel, FRAC_PI_2, 1.0, (0.1, PI - 0.1), &ctrl).unwrap();
    let table = ProfileTable::from_profile(&run.profile, vec![("relation".into(), rel.render())]);
    let back = ProfileTable::from_csv(&table.to_csv()).unwrap();
    assert_eq!(back.meta_value("relation"), Some(rel.render().as_str()));
    let p = back.to_profile().unwrap();
    assert_eq!(p.points, run.profile.points);
    assert!(cm_residual(&p).unwrap().max_abs() < 1e-8);
    let e = embed_profile(&p, 0.0).unwrap();
    assert!(e.slope_defect().unwrap() < 1e-8);
    let rep = RunReport::new(&rel, FRAC_PI_2, 1.0, &run, &ctrl).unwrap();
    assert_eq!(rep.grid_stats.samples, 513);
}

#[test]
fn transformed_cmc_profile_is_a_surface() {
    let rel = parse_relation("k1 + k2 = 4").unwrap();
    let run = integrate_cm(&rel, FRAC_PI_2, 0.55, (0.2, PI - 0.2), &StepControl::default()).unwrap();
    let m = MoebiusElement::new(1.0, 0.2, 0.5, 1.1).unwrap();
    let s = induced_surface(&m, &run.profile, None, CalibrationChoice::Auto, Branch::Standard).unwrap();
    assert!(cm_residual(&s.profile.unwrap()).unwrap().max_abs() < 1e-6);
    let check = verify_transform_properties(&m, &run.profile, None).unwrap();
    assert!(check.ellipticity_preserved);
}

#[test]
fn classification_and_reduction_agree() {
    let rel = parse_relation("2*H + 3*K = 1").unwrap();
    let c = classify(&rel).unwrap();
    assert!(c.lambda1.abs() < 1e-12);
    assert_eq!(c.class, QwClass::Elliptic);
    assert!((reduce_to_pure_linear(&rel).unwrap().lambda + 1.0).abs() < 1e-12);
}

#[test]
fn variational_report_on_integrated_hopf() {
    let rel = parse_relation("r2 = 2*r1").unwrap();
    let run = integrate_cm(&rel, FRAC_PI_2, 1.0, (0.2, PI - 0.2), &StepControl::default()).unwrap();
    let s = support_with_constant(&run.profile, FRAC_PI_2, 0.0).unwrap();
    let lag = Lagrangian::new(LagrangianSpec::L0, &rel, 1.0).unwrap();
    let r = report(&lag, &s, (0.3, 1.2), 40, &[]).unwrap();
    assert_eq!(r.lagrangian_kind, "L0");
    assert!(r.el_residual_max < 1e-6 && r.helmholtz_residual_max < 1e-6);
    assert!(r.i_drift.unwrap() < 1e-8 && r.q_drift.unwrap() < 1e-8);
    assert!(r.second_variation.min > 0.0);
    assert!(report(&lag, &s, (1.0, 2.0), 40, &[]).is_err());
}
