//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weingarten::integrator::{
    integrate_cm, umbilic_slope_estimate, vanishing_rate_estimate, CmRun, FnCurve, IntegratedCurve, StepControl,
    VanishingRate,
};
use weingarten::mesh::revolve_table;
use weingarten::mobius::{
    ads_invariants, apply_roc, decompose, induced_surface, reciprocal_transform_closed, transform_relation, Branch,
    CalibrationChoice, MoebiusElement,
};
use weingarten::numeric::interp::linspace;
use weingarten::numeric::quad::gauss_kronrod;
use weingarten::relations::WeingartenRelation as W;
use weingarten::roc_core::{cm_residual, support_with_constant, PoleValues, ProfileTable, RoCProfile, SupportProfile};
use weingarten::semiquadratic::{
    invariants_of, normalize_coeffs, push_forward, reduce_to_pure_linear, transitivity_solve_coeffs, Coeffs, QwClass,
};
use weingarten::variational::{
    helmholtz_residual, i_drift, q_drift, second_variation, stability_scan, Lagrangian, LagrangianSpec, Multiplier,
    Perturbation, VariationalState,
};
use weingarten::{ExtReal, Pole, RoCPoint};

type Outcome = Result<String, String>;

const SEED: u64 = 20240917;

/// Criteria whose stated target contradicts the implemented (and
/// independently checked) mathematics. They still print FAIL; the process
/// only exits nonzero when an outcome differs from this list.
///
/// 11: for 𝓛 = (2Cr − (1−λ)r² + ṙ²)/(2 sin^λ θ), ∂²𝓛/∂r² = −(1−λ)/sin^λ θ,
/// so δ²S = ∫(v̇² − (1−λ)v²)/sin^λ θ, not ∫((1−λ)v² + v̇²)/sin^λ θ.
const EXPECTED_FAILURES: [usize; 1] = [11];

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// The six relations of the test matrix with a start radius at π/2.
fn families() -> Vec<(&'static str, W, f64)> {
    vec![
        ("hopf(-0.5,1)", W::LinearHopf { lambda: -0.5, c: 1.0 }, 1.0),
        ("hopf(0.1,3)", W::LinearHopf { lambda: 0.1, c: 3.0 }, 4.0),
        ("hopf(2,0)", W::LinearHopf { lambda: 2.0, c: 0.0 }, 1.0),
        ("hopf(3,-3)", W::LinearHopf { lambda: 3.0, c: -3.0 }, 1.25),
        ("cmc k1+k2=4", W::SemiQuadratic { alpha: 0.0, beta: 1.0, gamma: 1.0, delta: -4.0 }, 0.55),
        ("cubic(1)", W::CubicRoC { gamma: 1.0 }, 0.8),
    ]
}

fn run(rel: &W, r1: f64) -> CmRun {
    integrate_cm(rel, FRAC_PI_2, r1, (0.2, PI - 0.2), &StepControl::default()).unwrap()
}

/// Chordal distance on the projective line.
fn chordal(x: ExtReal, y: ExtReal) -> f64 {
    match (x, y) {
        (ExtReal::Infinity, ExtReal::Infinity) => 0.0,
        (ExtReal::Finite(a), ExtReal::Infinity) | (ExtReal::Infinity, ExtReal::Finite(a)) => 1.0 / (1.0 + a * a).sqrt(),
        (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() / ((1.0 + a * a).sqrt() * (1.0 + b * b).sqrt()),
    }
}

fn roc_dist(p: RoCPoint, q: RoCPoint) -> f64 {
    chordal(p.r1, q.r1).max(chordal(p.r2, q.r2))
}

fn random_matrix(rng: &mut ChaCha8Rng, upper: bool) -> MoebiusElement {
    let mut a: f64 = rng.gen_range(0.25..2.0);
    if rng.gen_bool(0.5) {
        a = -a;
    }
    let b = rng.gen_range(-2.0..2.0);
    let c = if upper { 0.0 } else { rng.gen_range(-2.0..2.0) };
    MoebiusElement::new(a, b, c, (1.0 + b * c) / a).unwrap()
}

fn random_coeffs(rng: &mut ChaCha8Rng) -> Coeffs {
    loop {
        let c: Coeffs = [0; 4].map(|_| rng.gen_range(-2.0..2.0));
        let inv = invariants_of(&c);
        if inv.lambda2 > 0.05 && (inv.lambda2 - inv.lambda1 * inv.lambda1).abs() > 1e-3 {
            return c;
        }
    }
}

fn sup_up_to_sign(a: &Coeffs, b: &Coeffs) -> f64 {
    let p = (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
    let m = (0..4).map(|i| (a[i] + b[i]).abs()).fold(0.0, f64::max);
    p.min(m)
}

// ---------------------------------------------------------------- criteria

fn c1() -> Outcome {
    let r = run(&W::LinearHopf { lambda: 2.0, c: 0.0 }, 1.0);
    let p = &r.profile;
    let e1 = p.grid.iter().zip(&p.points).map(|(t, q)| (q.r1.to_f64() - t.sin()).abs()).fold(0.0, f64::max);
    let s = support_with_constant(p, FRAC_PI_2, 0.0).unwrap();
    let base: Vec<f64> = p.grid.iter().map(|t| t.sin() - t * t.cos()).collect();
    let k = p.grid.iter().enumerate().map(|(i, t)| (s.r[i] - base[i]) * t.cos()).sum::<f64>()
        / p.grid.iter().map(|t| t.cos().powi(2)).sum::<f64>();
    let e2 = p.grid.iter().enumerate().map(|(i, t)| (s.r[i] - base[i] - k * t.cos()).abs()).fold(0.0, f64::max);
    ensure(e1 <= 1e-7 && e2 <= 1e-7, format!("sup|r1 - sin| = {e1:.2e}, support sup error = {e2:.2e} (K = {k:.6})"))
}

fn c2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, rel, r1) in families() {
        let res = cm_residual(&run(&rel, r1).profile).unwrap().max_abs();
        parts.push(format!("{name} {res:.1e}"));
        worst = worst.max(res);
    }
    ensure(worst <= 1e-8, format!("max CM residual {worst:.2e} [{}]", parts.join(", ")))
}

fn c3() -> Outcome {
    let ctrl = StepControl::default();
    let a = W::LinearHopf { lambda: 3.0, c: -3.0 };
    let m1 = umbilic_slope_estimate(&IntegratedCurve { rel: &a, theta: FRAC_PI_2, r1: 1.25, pole: Pole::North, ctrl })
        .map_err(|e| e.to_string())?
        .slope_estimate;
    let b = W::LinearHopf { lambda: 0.1, c: 3.0 };
    let m2 = umbilic_slope_estimate(&IntegratedCurve { rel: &b, theta: FRAC_PI_2, r1: 4.0, pole: Pole::South, ctrl })
        .map_err(|e| e.to_string())?
        .slope_estimate;
    ensure((m1 - 3.0).abs() <= 5e-2 && (m2 - 0.1).abs() <= 5e-2, format!("mu = {m1:.5} (want 3), {m2:.5} (want 0.1)"))
}

fn c4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [1.5, 2.5] {
        for delta in [-1.0, 0.0, 1.0f64] {
            let s = move |t: f64| t.sin().powf(alpha) * (2.0 / t.sin()).ln().powf(delta);
            let f = move |t: f64| {
                let d1 = gauss_kronrod(
                    |u: f64| u.sin().powf(alpha - 1.0) * u.cos() * (2.0 / u.sin()).ln().powf(delta),
                    0.0,
                    t,
                    0.0,
                    1e-13,
                )
                .unwrap();
                (d1, d1 + s(t))
            };
            let c = FnCurve { pole: Pole::North, r0: ExtReal::Finite(1.0), f };
            let mu = umbilic_slope_estimate(&c).map_err(|e| e.to_string())?.slope_estimate;
            let g = vanishing_rate_estimate(&c, alpha).map_err(|e| e.to_string())?;
            let want_g = match (delta as i32, g) {
                (-1, VanishingRate::Zero) | (1, VanishingRate::Divergent) => true,
                (0, VanishingRate::Finite { .. }) => true,
                _ => false,
            };
            let good = (mu - (alpha + 1.0)).abs() <= 5e-2 && want_g;
            ok &= good;
            if !good {
                parts.push(format!("({alpha},{delta}) mu {mu:.4} gamma {g:?}"));
            }
        }
    }
    ensure(ok, if parts.is_empty() { "6 fixtures: mu = alpha + 1, gamma zero/finite/divergent".into() } else { parts.join("; ") })
}

fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (m1, m2) = (random_matrix(&mut rng, false), random_matrix(&mut rng, false));
        let m12 = m1.compose(&m2);
        for _ in 0..100 {
            let p = RoCPoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            worst = worst.max(roc_dist(apply_roc(&m12, p), apply_roc(&m1, apply_roc(&m2, p))));
        }
    }
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..100 {
        let c = random_coeffs(&mut rng);
        let rel = W::SemiQuadratic { alpha: c[0], beta: c[1], gamma: c[2], delta: c[3] };
        let m = random_matrix(&mut rng, false);
        let img = transform_relation(&m, &rel).map_err(|e| e.to_string())?;
        let (a, b) = (invariants_of(&c), invariants_of(&img.k_coefficients().unwrap()));
        let (ra, rb) = (a.ratio.unwrap(), b.ratio.unwrap_or(f64::NAN));
        worst_ratio = worst_ratio.max((ra - rb).abs() / ra.abs().max(1.0));
    }
    ensure(worst <= 1e-12 && worst_ratio <= 1e-9, format!("composition {worst:.2e}, Lambda1^2/Lambda2 drift {worst_ratio:.2e}"))
}

fn c6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (mut prod, mut act): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let m = random_matrix(&mut rng, i % 2 == 0);
        let f = decompose(&m);
        prod = prod.max(f.product().max_diff(&m));
        for _ in 0..20 {
            let p = RoCPoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            act = act.max(roc_dist(f.apply_roc(p), apply_roc(&m, p)));
        }
    }
    ensure(prod <= 1e-12 && act <= 1e-10, format!("product error {prod:.2e}, factorwise action error {act:.2e}"))
}

fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let (mut worst, mut det): (f64, f64) = (0.0, 0.0);
    for i in 0..50 {
        let from = normalize_coeffs(&random_coeffs(&mut rng)).unwrap();
        let l1 = invariants_of(&from).lambda1;
        let to = if i % 3 == 0 {
            // δ′ = 0: β − γ = Λ₁ and (β + γ)² = 1
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            [rng.gen_range(-2.0..2.0), (s + l1) / 2.0, (s - l1) / 2.0, 0.0]
        } else {
            let t = normalize_coeffs(&push_forward(&random_matrix(&mut rng, false), &from)).unwrap();
            if rng.gen_bool(0.5) {
                t.map(|x| -x)
            } else {
                t
            }
        };
        let m = transitivity_solve_coeffs(&from, &to).map_err(|e| format!("pair {i}: {e}"))?;
        det = det.max((m.det() - 1.0).abs());
        let rel = W::SemiQuadratic { alpha: from[0], beta: from[1], gamma: from[2], delta: from[3] };
        let img = transform_relation(&m, &rel).map_err(|e| e.to_string())?;
        let got = normalize_coeffs(&img.k_coefficients().unwrap()).unwrap();
        worst = worst.max(sup_up_to_sign(&got, &to));
    }
    ensure(worst <= 1e-9 && det <= 1e-12, format!("coefficient error {worst:.2e}, |det - 1| {det:.2e}"))
}

fn c8() -> Outcome {
    let cmc = reduce_to_pure_linear(&W::SemiQuadratic { alpha: 0.0, beta: 1.0, gamma: 1.0, delta: -4.0 })
        .map_err(|e| e.to_string())?
        .lambda;
    let mut lam2 = Vec::new();
    for (a, b, g, d) in [(0.0, 1.5, -0.5, 0.0), (0.5, 1.75, -0.25, 0.625)] {
        lam2.push(reduce_to_pure_linear(&W::SemiQuadratic { alpha: a, beta: b, gamma: g, delta: d }).map_err(|e| e.to_string())?.lambda);
    }
    let in_set = lam2.iter().all(|l| (l - 3.0).abs() < 1e-9 || (l - 1.0 / 3.0).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut mismatches = 0;
    for _ in 0..200 {
        let c = random_coeffs(&mut rng);
        let rel = W::SemiQuadratic { alpha: c[0], beta: c[1], gamma: c[2], delta: c[3] };
        let r = reduce_to_pure_linear(&rel).map_err(|e| e.to_string())?;
        let class = invariants_of(&c).class;
        let agree = match class {
            QwClass::Elliptic => r.lambda < 0.0,
            QwClass::Hyperbolic => r.lambda > 0.0,
            QwClass::Parabolic => false,
        };
        if !agree {
            mismatches += 1;
        }
    }
    ensure(
        (cmc + 1.0).abs() < 1e-9 && in_set && mismatches == 0,
        format!("CMC lambda {cmc}, Lambda1 = 2 lambdas {lam2:?}, sign mismatches {mismatches}/200"),
    )
}

fn c9() -> Outcome {
    let fams: Vec<(W, f64, f64)> = vec![
        (W::LinearHopf { lambda: -0.5, c: 1.0 }, 0.9, 2.0),
        (W::LinearHopf { lambda: 0.1, c: 3.0 }, 3.6, 6.0),
        (W::LinearHopf { lambda: 2.0, c: 0.0 }, 0.5, 2.0),
        (W::LinearHopf { lambda: 3.0, c: -3.0 }, 1.7, 3.0),
        (W::CubicRoC { gamma: 1.0 }, 0.3, 0.8),
        (W::SemiQuadratic { alpha: 0.0, beta: 1.0, gamma: 1.0, delta: -4.0 }, 0.6, 1.5),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (mut el, mut hm, mut raw): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (rel, lo, hi) in &fams {
        let lag = Lagrangian::new(LagrangianSpec::L0, rel, 0.5 * (lo + hi)).map_err(|e| e.to_string())?;
        let mut states = Vec::new();
        while states.len() < 100 {
            let t: f64 = rng.gen_range(0.15..PI - 0.15);
            if (t - FRAC_PI_2).abs() < 0.1 {
                continue;
            }
            let r1 = rng.gen_range(*lo..*hi);
            let rd = rng.gen_range(-0.5..0.5);
            let s = VariationalState::new(t, r1 - rd / t.tan(), rd).unwrap();
            let rdd = rng.gen_range(-1.0..1.0);
            let d = lag.euler_lagrange(&s, rdd).map_err(|e| e.to_string())? - lag.multiplier_form(&s, rdd).map_err(|e| e.to_string())?;
            el = el.max(d.abs());
            states.push(s);
        }
        let h = helmholtz_residual(rel, &|s| lag.mult.phi0(s.r1()), &states).map_err(|e| e.to_string())?;
        hm = hm.max(h.iter().fold(0.0, |m, x| m.max(x.abs())));
        if let W::LinearHopf { lambda, .. } = rel {
            let r = helmholtz_residual(rel, &|_| Ok(1.0), &states).map_err(|e| e.to_string())?;
            for (s, v) in states.iter().zip(&r) {
                raw = raw.max((v - lambda / s.theta.tan()).abs());
            }
        }
    }
    ensure(
        el <= 1e-6 && hm <= 1e-6 && raw <= 1e-9,
        format!("EL identity {el:.2e}, Helmholtz (Phi0) {hm:.2e}, raw minus F'cot {raw:.2e}"),
    )
}

fn support_of(p: &RoCProfile) -> SupportProfile {
    support_with_constant(p, FRAC_PI_2, 0.0).unwrap()
}

fn states_on(s: &SupportProfile, thetas: &[f64]) -> Vec<VariationalState> {
    thetas
        .iter()
        .map(|&t| {
            let (r, rd, _) = s.eval(t);
            VariationalState::new(t, r, rd).unwrap()
        })
        .collect()
}

fn c10() -> Outcome {
    let (mut wi, mut wq): (f64, f64) = (0.0, 0.0);
    for (_, rel, r1) in families() {
        let p = run(&rel, r1).profile;
        let m = Multiplier::new(&rel, r1).map_err(|e| e.to_string())?;
        let all: Vec<VariationalState> = p
            .grid
            .iter()
            .zip(&p.points)
            .map(|(&t, q)| VariationalState::new(t, q.r1.to_f64(), 0.0).unwrap())
            .collect();
        wi = wi.max(i_drift(&m, &all).map_err(|e| e.to_string())?);
        let mut t = linspace(0.25, 1.5, 24);
        t.extend(linspace(PI - 1.5, PI - 0.25, 24));
        let st = states_on(&support_of(&p), &t);
        wq = wq.max(q_drift(&m, &st, 0.05).map_err(|e| e.to_string())?);
    }
    let rel = W::LinearHopf { lambda: 2.0, c: 0.0 };
    let m = Multiplier::new(&rel, 1.0).unwrap();
    let mut exact: f64 = 0.0;
    for k in [-1.0, 0.0, 2.0] {
        for t in [0.3, 0.7, 1.1, 1.45] {
            let (s, c) = f64::sin_cos(t);
            let st = VariationalState::new(t, s - t * c + k * c, t * s - k * s).unwrap();
            exact = exact.max((m.first_integral_i(&st).unwrap() - 1.0).abs());
            exact = exact.max((m.first_integral_q(&st, 0.0).map_err(|e| e.to_string())? - k).abs());
        }
    }
    ensure(
        wi <= 1e-6 && wq <= 1e-5 && exact <= 1e-8,
        format!("I drift {wi:.2e}, Q drift {wq:.2e}, closed-form I/Q error {exact:.2e}"),
    )
}

fn c11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let interval = (0.3, 1.2);
    let combos: Vec<Vec<f64>> = (0..40)
        .map(|_| (1..=10).map(|n| rng.gen_range(-1.0..1.0) / (n * n) as f64).collect())
        .collect();
    let mut min_l0 = f64::INFINITY;
    let mut ident: f64 = 0.0;
    for (_, rel, r1) in families() {
        let p = run(&rel, r1).profile;
        let s = support_of(&p);
        let lag = Lagrangian::new(LagrangianSpec::L0, &rel, r1).map_err(|e| e.to_string())?;
        let (sum, _) = stability_scan(&lag, &s, interval, &combos).map_err(|e| e.to_string())?;
        min_l0 = min_l0.min(sum.min);
        let v = Perturbation { coeffs: combos[0].clone(), interval };
        let got = second_variation(&lag, &s, &v).map_err(|e| e.to_string())?;
        let want = gauss_kronrod(
            |t| {
                let (r, rd, _) = s.eval(t);
                let st = VariationalState { theta: t, r, rdot: rd };
                let (x, dx) = v.eval(t);
                lag.mult.phi0(st.r1()).unwrap() * (t.tan() * x + dx).powi(2)
            },
            interval.0,
            interval.1,
            1e-14,
            1e-12,
        )
        .unwrap();
        ident = ident.max((got - want).abs() / want.abs().max(1.0));
    }
    let l = 0.5;
    let rel = W::LinearHopf { lambda: l, c: 1.0 };
    let s = support_of(&run(&rel, 1.0).profile);
    let lag = Lagrangian::new(LagrangianSpec::HopfL1 { lambda: l, c: 1.0 }, &rel, 1.0).map_err(|e| e.to_string())?;
    let mut hopf: f64 = 0.0;
    let mut got_first = 0.0;
    let mut want_first = 0.0;
    for n in 1..=3 {
        let v = Perturbation::basis(n, interval);
        let got = second_variation(&lag, &s, &v).map_err(|e| e.to_string())?;
        let want = gauss_kronrod(
            |t| {
                let (x, dx) = v.eval(t);
                ((1.0 - l) * x * x + dx * dx) / t.sin().powf(l)
            },
            interval.0,
            interval.1,
            1e-14,
            1e-12,
        )
        .unwrap();
        if n == 1 {
            got_first = got;
            want_first = want;
        }
        hopf = hopf.max((got - want).abs());
    }
    ensure(
        min_l0 > 0.0 && ident <= 1e-8 && hopf <= 1e-8,
        format!(
            "L0 min d2S {min_l0:.3e} over 6 families x 50 fields, integrand identity {ident:.2e}; \
             HopfL1 d2S(v1) = {got_first:.6} vs target {want_first:.6} (max gap {hopf:.2e})"
        ),
    )
}

fn c12() -> Outcome {
    let cmc = ads_invariants(&run(&W::SemiQuadratic { alpha: 0.0, beta: 1.0, gamma: 1.0, delta: -4.0 }, 0.55).profile)
        .map_err(|e| e.to_string())?;
    let hopf = ads_invariants(&run(&W::LinearHopf { lambda: 2.0, c: 0.0 }, 1.0).profile).map_err(|e| e.to_string())?;
    let a = cmc.drift.iter().copied().fold(0.0, f64::max);
    let b = hopf.drift.iter().copied().fold(0.0, f64::max);
    ensure(a <= 1e-6 && b >= 1e-2, format!("CMC drift {:?}, hopf(2,0) max drift {b:.3e}", cmc.drift.map(|x| format!("{x:.1e}"))))
}

fn closed_sphere(r: f64, n: usize) -> RoCProfile {
    let mut p = RoCProfile::from_fn(linspace(0.0, PI, n), |_| (r, r)).unwrap();
    p.pole_values = PoleValues { north: Some(RoCPoint::new(r, r)), south: Some(RoCPoint::new(r, r)) };
    p
}

fn c13() -> Outcome {
    let s = reciprocal_transform_closed(&closed_sphere(2.0, 512)).map_err(|e| e.to_string())?;
    let sp = s.profile.unwrap();
    let e = sp
        .points
        .iter()
        .map(|q| (q.r1.to_f64().abs() - 0.5).abs().max((q.r2.to_f64().abs() - 0.5).abs()))
        .fold(0.0, f64::max);
    let rel = W::LinearHopf { lambda: 3.0, c: -3.0 };
    let ctrl = StepControl::default();
    let run = integrate_cm(&rel, FRAC_PI_2, 1.25, (0.0, PI), &ctrl).map_err(|e| e.to_string())?;
    let img = reciprocal_transform_closed(&run.profile).map_err(|e| e.to_string())?;
    let c = img.curve.unwrap();
    let ends = c.rho[0].abs().max(c.rho.last().unwrap().abs());
    let res = cm_residual(&img.profile.unwrap()).map_err(|e| e.to_string())?.max_abs();
    ensure(
        e <= 1e-10 && ends <= 1e-6 && res <= 1e-6,
        format!("sphere radius error {e:.2e}; hopf(3,-3) image pole rho {ends:.2e}, CM residual {res:.2e}"),
    )
}

fn c14() -> Outcome {
    let src = run(&W::LinearHopf { lambda: 2.0, c: 0.0 }, 1.0).profile;
    let text = ProfileTable::from_profile(&src, vec![]).to_csv();
    let p0 = ProfileTable::from_csv(&text).unwrap().to_profile().unwrap();
    let m = MoebiusElement::new(1.0, 0.3, 0.4, 1.2).unwrap();
    let fwd = induced_surface(&m, &p0, None, CalibrationChoice::Auto, Branch::Standard).map_err(|e| e.to_string())?;
    let text = ProfileTable::from_profile(fwd.profile.as_ref().unwrap(), vec![]).to_csv();
    let p1 = ProfileTable::from_csv(&text).unwrap().to_profile().unwrap();
    let back = induced_surface(&m.inverse(), &p1, None, CalibrationChoice::Fixed(1.0 / fwd.calibration), Branch::Standard)
        .map_err(|e| e.to_string())?;
    let bp = back.profile.unwrap();
    if bp.len() != src.len() {
        return Err(format!("domain shrank: {} of {} samples recovered", bp.len(), src.len()));
    }
    // θ is recovered through sin θ, so near π/2 the angle itself is only good to √ε
    let (mut worst, mut angle): (f64, f64) = (0.0, 0.0);
    for i in 0..src.len() {
        let (o, q) = (src.points[i], bp.points[i]);
        worst = worst.max((src.grid[i].sin() - bp.grid[i].sin()).abs()).max(o.r1.dist(q.r1)).max(o.r2.dist(q.r2));
        angle = angle.max((src.grid[i] - bp.grid[i]).abs());
    }
    let sphere = closed_sphere(1.0, 128);
    let text = ProfileTable::from_profile(&sphere, vec![]).to_csv();
    let mesh = revolve_table(&ProfileTable::from_csv(&text).unwrap(), 64).map_err(|e| e.to_string())?;
    let chi = mesh.euler_characteristic();
    ensure(
        worst <= 1e-8 && chi == 2 && mesh.is_watertight(),
        format!("round trip error {worst:.2e} in (sin theta, r1, r2), raw angle drift {angle:.1e}; sphere mesh chi = {chi}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("closed-form agreement", c1),
        ("Codazzi-Mainardi residual", c2),
        ("umbilic slope of linear relations", c3),
        ("general slope restriction fixtures", c4),
        ("group action and invariance", c5),
        ("decomposition", c6),
        ("transitivity", c7),
        ("reduction", c8),
        ("variational identity", c9),
        ("conservation", c10),
        ("stability", c11),
        ("geodesic invariants", c12),
        ("reciprocal transform", c13),
        ("round trips", c14),
    ];
    let start = Instant::now();
    let (mut failed, mut unexpected) = (0, Vec::new());
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let known = EXPECTED_FAILURES.contains(&(i + 1));
        let (tag, detail) = match out {
            Ok(d) => {
                if known {
                    unexpected.push(i + 1);
                }
                ("PASS", d)
            }
            Err(d) => {
                failed += 1;
                if !known {
                    unexpected.push(i + 1);
                }
                ("FAIL", if known { format!("{d} [expected failure]") } else { d })
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{:.1}s]", i + 1, t.elapsed().as_secs_f64());
    }
    println!("{} of 14 criteria passed in {:.1}s", 14 - failed, start.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        println!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
