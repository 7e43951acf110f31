//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbl_core::analysis::{
    coercivity_probe, error_against_exact, error_against_reference, integrate_parts, ComparisonKind, ErrorReport,
    ExactSolution, ManufacturedCase, PointValues,
};
use sbl_core::assembly::{Forcing, ProblemConfig};
use sbl_core::femspace::{build_dof_map, Field, Solution};
use sbl_core::geometry::{inverse_map, CurveSpec, ElementMap, TransfiniteMap, Vec2};
use sbl_core::harness::{run_sweep, SweepOptions, SweepSpec};
use sbl_core::mesh::{AsymptoticMesh, GridParams, LayerParams, LayerTag, Regime, SblMesh};
use sbl_core::refspace::{gauss_rule, gll_nodes};
use sbl_core::solver::{solve_on_base, RESIDUAL_BOUND};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Everything the criteria share: residuals of every accepted solve and
/// every error report produced along the way.
#[derive(Default)]
struct Ledger {
    residuals: Vec<(String, f64)>,
    reports: Vec<(f64, f64, ErrorReport)>,
}

struct StudyRow {
    p: usize,
    eps1: f64,
    eps2: f64,
    report: ErrorReport,
}

/// Solves every `(p, ε₁, ε₂)` of a study directly (not through the sweep
/// driver), each series with its own cache so the `p + 2` references are
/// shared with later rows.
fn study(base: &ProblemConfig, ps: &[usize], eps1s: &[f64], eps2s: &[f64], mode: ComparisonKind, ledger: &mut Ledger) -> Vec<StudyRow> {
    let mesh = base.mesh_spec().build_base().unwrap();
    let mut rows = Vec::new();
    for &eps1 in eps1s {
        for &eps2 in eps2s {
            let mut cache: HashMap<usize, Arc<Solution>> = HashMap::new();
            let mut get = |p: usize, ledger: &mut Ledger| -> Arc<Solution> {
                cache
                    .entry(p)
                    .or_insert_with(|| {
                        let cfg = ProblemConfig { eps1, eps2, ..base.with_degree(p) };
                        let sol = solve_on_base(&cfg, mesh.clone()).unwrap();
                        ledger.residuals.push((format!("p={p} eps1={eps1:e} eps2={eps2:e}"), sol.residual()));
                        Arc::new(sol)
                    })
                    .clone()
            };
            for &p in ps {
                let sol = get(p, ledger);
                let report = match mode {
                    ComparisonKind::Exact => error_against_exact(&sol, &ManufacturedCase::new(eps1, eps2)).unwrap(),
                    ComparisonKind::Reference => error_against_reference(&sol, &get(p + 2, ledger)).unwrap(),
                };
                ledger.reports.push((eps1, eps2, report.clone()));
                rows.push(StudyRow { p, eps1, eps2, report });
            }
        }
    }
    rows
}

/// The sweep driver must reproduce the direct study bit for bit.
fn driver_agrees(base: &ProblemConfig, ps: &[usize], eps1s: &[f64], eps2s: &[f64], mode: ComparisonKind, rows: &[StudyRow]) -> bool {
    let spec = SweepSpec::new(base.clone(), ps.to_vec(), eps1s.to_vec(), eps2s.to_vec(), mode);
    let swept = run_sweep(&spec, SweepOptions::default()).unwrap();
    swept.len() == rows.len()
        && swept.iter().all(|s| {
            rows.iter().any(|r| {
                r.p == s.p
                    && r.eps1 == s.eps1
                    && r.eps2 == s.eps2
                    && r.report.energy_error == s.energy_error
                    && r.report.balanced_error == s.balanced_error
            })
        })
}

fn series(rows: &[StudyRow], eps1: f64, eps2: f64) -> Vec<&StudyRow> {
    let mut s: Vec<&StudyRow> = rows.iter().filter(|r| r.eps1 == eps1 && r.eps2 == eps2).collect();
    s.sort_by_key(|r| r.p);
    s
}

fn criterion_1_coercivity() -> Outcome {
    let mut worst = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    for curve in [CurveSpec::Circle { radius: 1.0 }, CurveSpec::Cranioid] {
        let cfg = ProblemConfig::new(curve, 1e-9, 1e-3, 4, Forcing::TenX);
        let mesh = Arc::new(cfg.mesh_spec().build().unwrap());
        let du = Arc::new(build_dof_map(&mesh, 4, Field::U).unwrap());
        let dw = Arc::new(build_dof_map(&mesh, 4, Field::W).unwrap());
        let r = coercivity_probe(&mesh, &du, &dw, &cfg, 100).unwrap();
        assert_eq!(r.trials, 100);
        worst = worst.max(r.max_defect);
        min_ratio = min_ratio.min(r.min_ratio);
    }
    outcome(worst <= 1e-12, format!("max defect {worst:.2e} (tol 1e-12), min ratio {min_ratio:.15}"))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_2_manufactured(ledger: &mut Ledger) -> Outcome {
    let (eps1, eps2) = (1e-3, 0.1);
    let base = ProblemConfig::new(CurveSpec::Circle { radius: 1.0 }, eps1, eps2, 2, Forcing::ManufacturedDisk);
    let ps: Vec<usize> = (2..=8).collect();
    let rows = study(&base, &ps, &[eps1], &[eps2], ComparisonKind::Exact, ledger);
    let errs: Vec<f64> = rows.iter().map(|r| r.report.energy_error).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.p as f64, r.report.energy_error.log10())).collect();
    let slope = least_squares_slope(&pts);
    let agree = driver_agrees(&base, &ps, &[eps1], &[eps2], ComparisonKind::Exact, &rows);
    let list: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    outcome(
        decreasing && slope <= -0.5 && agree,
        format!(
            "energy errors [{}], strictly decreasing {decreasing}, slope {slope:.3} (tol <= -0.5), sweep driver agrees {agree}",
            list.join(", ")
        ),
    )
}

fn cranioid_example(eps1: f64, eps2: f64) -> ProblemConfig {
    ProblemConfig { kappa: 1.0, ..ProblemConfig::new(CurveSpec::Cranioid, eps1, eps2, 2, Forcing::TenX) }
}

fn criterion_3_varying_eps2(ledger: &mut Ledger) -> Outcome {
    let ps: Vec<usize> = (2..=8).collect();
    let eps2s = [1e-3, 1e-4, 1e-5];
    let base = cranioid_example(1e-11, 1e-3);
    let rows = study(&base, &ps, &[1e-11], &eps2s, ComparisonKind::Reference, ledger);
    let mut monotone = true;
    for &e2 in &eps2s {
        let s = series(&rows, 1e-11, e2);
        monotone &= s.windows(2).filter(|w| w[0].p >= 3).all(|w| w[1].report.energy_error < w[0].report.energy_error);
    }
    // worst violation factor of error(small eps2) <= error(larger eps2)
    let mut worst_factor = 0.0f64;
    for &p in &ps {
        let at = |e2: f64| rows.iter().find(|r| r.p == p && r.eps2 == e2).unwrap().report.energy_error;
        worst_factor = worst_factor.max(at(1e-5) / at(1e-4)).max(at(1e-4) / at(1e-3));
    }
    let agree = driver_agrees(&base, &ps, &[1e-11], &eps2s, ComparisonKind::Reference, &rows);
    let fmt = |e2: f64| {
        let s = series(&rows, 1e-11, e2);
        format!("eps2={e2:e}: {:.3e} -> {:.3e}", s[0].report.energy_error, s[s.len() - 1].report.energy_error)
    };
    outcome(
        monotone && worst_factor <= 1.5 && agree,
        format!(
            "monotone for p >= 3 {monotone}, worst ordering factor {worst_factor:.3} (tol 1.5), sweep driver agrees {agree}; {}; {}; {}",
            fmt(1e-3),
            fmt(1e-4),
            fmt(1e-5)
        ),
    )
}

fn criterion_4_fixed_eps2(ledger: &mut Ledger) -> Outcome {
    let ps: Vec<usize> = (2..=8).collect();
    let eps1s = [1e-7, 1e-8, 1e-9, 1e-10];
    let base = cranioid_example(1e-9, 1e-3);
    let rows = study(&base, &ps, &eps1s, &[1e-3], ComparisonKind::Reference, ledger);
    let (mut worst_e, mut worst_b) = (0.0f64, 0.0f64);
    for &p in &ps {
        let at: Vec<&ErrorReport> = rows.iter().filter(|r| r.p == p).map(|r| &r.report).collect();
        let ratio = |f: &dyn Fn(&ErrorReport) -> f64| {
            let v: Vec<f64> = at.iter().map(|r| f(r)).collect();
            v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        worst_e = worst_e.max(ratio(&|r| r.energy_error));
        worst_b = worst_b.max(ratio(&|r| r.balanced_error));
    }
    let agree = driver_agrees(&base, &ps, &eps1s, &[1e-3], ComparisonKind::Reference, &rows);
    outcome(
        worst_e <= 3.0 && worst_b <= 3.0 && agree,
        format!("max/min across eps1: energy {worst_e:.3}, balanced {worst_b:.3} (tol 3), sweep driver agrees {agree}"),
    )
}

fn criterion_5_residuals(ledger: &Ledger) -> Outcome {
    let (label, worst) = ledger
        .residuals
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(l, r)| (l.clone(), *r))
        .unwrap_or_default();
    let extreme = ledger.residuals.iter().filter(|(l, _)| l.contains("eps1=1e-11")).count();
    outcome(
        worst <= RESIDUAL_BOUND && extreme > 0,
        format!(
            "{} solves ({extreme} at eps1 = 1e-11), worst relative residual {worst:.2e} at {label} (tol {RESIDUAL_BOUND:e})",
            ledger.residuals.len()
        ),
    )
}

fn criterion_6_mesh_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let base = Arc::new(AsymptoticMesh::build(&CurveSpec::Cranioid.build().unwrap(), GridParams::default()).unwrap());
    let (n1, n2) = (base.n_elements(), base.n_boundary());
    let mut exact = 0;
    let mut counts_ok = true;
    for _ in 0..20 {
        // admissible: eps1 < eps2², kappa p eps2 < 1/2
        let p = rng.gen_range(1..=12usize);
        let kappa = rng.gen_range(0.25..2.0);
        let eps2 = 10f64.powf(rng.gen_range(-6.0..0.0)).min(0.49 / (kappa * p as f64));
        let eps1 = eps2 * eps2 * 10f64.powf(rng.gen_range(-6.0..-0.01));
        let params = LayerParams { kappa, p, eps1, eps2 };
        let bp = params.breakpoints().expect("pre-asymptotic");
        let expected = [0.0, kappa * p as f64 * eps1 / eps2, kappa * p as f64 * eps2, 1.0];
        let bits = |a: [f64; 4]| a.map(f64::to_bits);
        let mesh = SblMesh::build(base.clone(), params).unwrap();
        let on_mesh = mesh.elements().iter().all(|el| match el.tag {
            LayerTag::Inner => el.xi_interval() == [expected[0], expected[1]],
            LayerTag::Outer => el.xi_interval() == [expected[1], expected[2]],
            LayerTag::Regular => el.xi_interval() == [expected[2], expected[3]],
            _ => el.xi_interval() == [0.0, 1.0],
        });
        if bits(bp.as_array()) == bits(expected) && on_mesh && !bp.clamped && !bp.widened {
            exact += 1;
        }
        counts_ok &= mesh.regime() == Regime::PreAsymptotic && mesh.n_elements() == n1 + 2 * n2;
    }
    // kappa p eps1/eps2 = 4 * 2^-6 / 2^-3 = 1/2 exactly
    let at_half = LayerParams { kappa: 1.0, p: 4, eps1: 2f64.powi(-6), eps2: 2f64.powi(-3) };
    let below = LayerParams { eps1: f64::from_bits(at_half.eps1.to_bits() - 1), ..at_half };
    let half_mesh = SblMesh::build(base.clone(), at_half).unwrap();
    let dichotomy = at_half.inner_width() == 0.5
        && at_half.regime() == Regime::Asymptotic
        && at_half.breakpoints().is_none()
        && half_mesh.n_elements() == n1
        && below.regime() == Regime::PreAsymptotic
        && SblMesh::build(base, below).unwrap().n_elements() == n1 + 2 * n2;
    outcome(
        exact == 20 && counts_ok && dichotomy,
        format!(
            "{exact}/20 bit-exact breakpoint sets, N = N1 + 2 N2 ({n1} + 2*{n2}) {counts_ok}, regime dichotomy at 1/2 {dichotomy}"
        ),
    )
}

/// Legendre P_n and P_n' at x by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (p0 - x * p1) / (1.0 - x * x))
}

/// Roots of P_p' on (-1, 1) by sign-change scan and bisection, mapped to [0, 1].
fn gll_oracle(p: usize) -> Vec<f64> {
    let f = |x: f64| legendre(p, x).1;
    let m = 4000;
    let mut out = vec![0.0];
    for k in 0..m {
        let (mut a, mut b) = (-1.0 + 2.0 * k as f64 / m as f64, -1.0 + 2.0 * (k + 1) as f64 / m as f64);
        if k == 0 {
            a += 1e-12;
        }
        if k == m - 1 {
            b -= 1e-12;
        }
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            out.push(0.5 * (1.0 + a));
            continue;
        }
        if fa * fb < 0.0 {
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                if f(a) * f(c) <= 0.0 {
                    b = c;
                } else {
                    a = c;
                }
            }
            out.push(0.5 * (1.0 + 0.5 * (a + b)));
        }
    }
    out.push(1.0);
    out
}

fn criterion_7_geometry() -> Outcome {
    // Gauss exactness for monomials up to degree 2n - 1
    let mut gauss_err = 0.0f64;
    for n in 1..=24 {
        let rule = gauss_rule(n).unwrap();
        for k in 0..2 * n {
            let got = rule.integrate(|x| x.powi(k as i32));
            gauss_err = gauss_err.max((got - 1.0 / (k as f64 + 1.0)).abs());
        }
    }
    // GLL nodes against bisection roots
    let mut gll_err = 0.0f64;
    let mut gll_count_ok = true;
    for p in 1..=20 {
        let nodes = gll_nodes(p).unwrap();
        let oracle = gll_oracle(p);
        gll_count_ok &= oracle.len() == p + 1;
        for (a, b) in nodes.nodes().iter().zip(&oracle) {
            gll_err = gll_err.max((a - b).abs());
        }
    }
    // inverse map round trips on built-in element shapes plus a thin element
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut maps: Vec<(String, ElementMap)> = Vec::new();
    for curve in [CurveSpec::Circle { radius: 1.0 }, CurveSpec::Cranioid] {
        let base = Arc::new(AsymptoticMesh::build(&curve.build().unwrap(), GridParams::default()).unwrap());
        maps.push((format!("{} ring", curve.name()), ElementMap::new(base.map(0).clone())));
        maps.push((format!("{} core", curve.name()), ElementMap::new(base.map(base.n_elements() - 1).clone())));
        let params = LayerParams { kappa: 1.0, p: 4, eps1: 1e-5, eps2: 1e-2 };
        let mesh = SblMesh::build(base, params).unwrap();
        for el in mesh.elements().iter().filter(|e| e.parent == 0) {
            maps.push((format!("{} {}", curve.name(), el.tag.as_str()), el.map.clone()));
        }
    }
    let square = Arc::new(TransfiniteMap::bilinear([
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(0.0, 1.0),
        Vec2::new(1.0, 1.0),
    ]));
    maps.push(("thin 1e-8 x 1".into(), ElementMap::restricted(square, 0.0, 1e-8)));
    let mut inv_err = 0.0f64;
    let mut inv_worst = String::new();
    for (name, map) in &maps {
        let corners = map.corners();
        let scale = corners.iter().map(|c| (c - corners[0]).norm()).fold(0.0, f64::max);
        for _ in 0..1000 {
            let (xi, eta) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let x = map.point(xi, eta);
            let (a, b) = inverse_map(map, x, 1e-15 * scale.max(1.0)).unwrap_or((f64::NAN, f64::NAN));
            let e = (a - xi).abs().max((b - eta).abs());
            if !(e <= inv_err) {
                inv_err = if e.is_nan() { f64::INFINITY } else { e };
                inv_worst = name.clone();
            }
        }
    }
    // area of the unit disk from the mesh
    let disk = ProblemConfig::new(CurveSpec::Circle { radius: 1.0 }, 1e-6, 1e-3, 4, Forcing::TenX).mesh_spec().build().unwrap();
    let ones = |_: usize, _: f64, _: f64, _: Vec2| Ok(PointValues { u: 1.0, grad_u: Vec2::zeros(), w: 0.0 });
    let area = integrate_parts(&disk, 16, ones).unwrap().l2_u_sq;
    let area_err = (area - PI).abs() / PI;
    // tubular coordinates of the unit circle: |det ∂(x,y)/∂(θ,ρ)| = 1 − ρ
    let circle = CurveSpec::Circle { radius: 1.0 }.build().unwrap();
    let mut jac_err = 0.0f64;
    let h = 1e-5;
    for k in 0..50 {
        let theta = 2.0 * PI * k as f64 / 50.0;
        for rho in [0.0, 0.1, 0.25, 0.4] {
            let at = |t: f64, r: f64| circle.offset_point(t, r, 0.5).unwrap().point;
            let dt = (at(theta + h, rho) - at(theta - h, rho)) / (2.0 * h);
            let dr = (at(theta, rho + h) - at(theta, (rho - h).max(0.0))) / (h + h.min(rho));
            let det = (dt.x * dr.y - dt.y * dr.x).abs();
            jac_err = jac_err.max((det - (1.0 - rho)).abs());
        }
    }
    let pass = gauss_err <= 1e-14 && gll_err <= 1e-13 && gll_count_ok && inv_err <= 1e-10 && area_err <= 1e-8 && jac_err <= 1e-6;
    outcome(
        pass,
        format!(
            "gauss {gauss_err:.1e} (1e-14), gll {gll_err:.1e} (1e-13), inverse round trip {inv_err:.1e} (1e-10, worst on {inv_worst}, {} shapes), disk area {area_err:.1e} (1e-8), tubular jacobian {jac_err:.1e} (1e-6)",
            maps.len()
        ),
    )
}

fn criterion_8_norms(ledger: &Ledger) -> Outcome {
    let eps1 = 1e-3;
    let case = ManufacturedCase::new(eps1, 0.1);
    let mesh = ProblemConfig::new(CurveSpec::Circle { radius: 1.0 }, eps1, 0.1, 6, Forcing::ManufacturedDisk)
        .mesh_spec()
        .build()
        .unwrap();
    let parts = integrate_parts(&mesh, 20, |_, _, _, x| {
        Ok(PointValues { u: case.u(x), grad_u: case.grad_u(x), w: case.w(x) })
    })
    .unwrap();
    let u_err = (parts.l2_u_sq - PI / 5.0).abs() / (PI / 5.0);
    let w_exact = 64.0 / 3.0 * PI * eps1 * eps1;
    let w_err = (parts.l2_w_sq - w_exact).abs() / w_exact;
    let in_regime: Vec<&ErrorReport> = ledger.reports.iter().filter(|(e1, e2, _)| e1 <= e2).map(|r| &r.2).collect();
    let balanced_ok = in_regime.iter().all(|r| r.balanced_error >= r.energy_error);
    outcome(
        u_err <= 1e-10 && w_err <= 1e-10 && balanced_ok && !in_regime.is_empty(),
        format!(
            "|u|^2 rel {u_err:.1e}, |w|^2 rel {w_err:.1e} (tol 1e-10); balanced >= energy on {}/{} reports",
            in_regime.iter().filter(|r| r.balanced_error >= r.energy_error).count(),
            in_regime.len()
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags; only a name filter is honored
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    if filter.as_deref().is_some_and(|f| !"acceptance".contains(f) && !f.contains("criterion")) {
        return;
    }
    let mut ledger = Ledger::default();
    let mut failed = 0;
    let mut run = |n: usize, name: &str, f: &mut dyn FnMut(&mut Ledger) -> Outcome| {
        let start = Instant::now();
        let o = f(&mut ledger);
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("[{status}] criterion {n} {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    };
    run(1, "coercivity identity", &mut |_| criterion_1_coercivity());
    run(2, "manufactured convergence", &mut |l| criterion_2_manufactured(l));
    run(3, "example 1, varying eps2", &mut |l| criterion_3_varying_eps2(l));
    run(4, "example 1, fixed eps2", &mut |l| criterion_4_fixed_eps2(l));
    run(5, "solver residuals", &mut |l| criterion_5_residuals(l));
    run(6, "mesh exactness", &mut |_| criterion_6_mesh_exactness());
    run(7, "geometry and quadrature", &mut |_| criterion_7_geometry());
    run(8, "norm identities", &mut |l| criterion_8_norms(l));
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
