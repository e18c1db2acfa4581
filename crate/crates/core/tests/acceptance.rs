//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::sync::Arc;

use ldg_core::basis::gauss_rule;
use ldg_core::corrections::{build_stack, initial_data, BcKind, CorrectionStack, FluxWeights};
use ldg_core::exact::{DriftingWave, ExactSolution, PeriodicWave};
use ldg_core::projections::{
    circulant_solve, moment_residual, project_dirichlet_endpoint, project_gauss_radau,
    project_local, project_modified, project_one_sided, CirculantSystem, Side,
};
use ldg_core::solver::{integrate, integrate_from, BoundaryCondition, IntegrateOptions, LdgOperator, SchemeConfig};
use ldg_core::study::{run_study, ConvergenceTable, StudyConfig};
use ldg_core::{Field, Mesh};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn study(case: &str, k: usize, ns: &[usize], lambda: f64, theta: f64, cfl: f64) -> ConvergenceTable {
    let cfg = StudyConfig {
        case: case.into(),
        k,
        n_list: ns.to_vec(),
        lambda,
        theta,
        cfl,
        final_time: 1.0,
        ..StudyConfig::default()
    };
    run_study(&cfg).unwrap_or_else(|e| panic!("{case} k={k}: {e}"))
}

fn finest_order(t: &ConvergenceTable, col: &str) -> f64 {
    t.orders(col)
        .and_then(|o| o.last())
        .and_then(|e| e.order)
        .unwrap_or(f64::NAN)
}

fn in_band(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

/// Orders of the listed columns against closed bands.
fn check_orders(t: &ConvergenceTable, bands: &[(&str, f64, f64)], detail: &mut Vec<String>) -> bool {
    let mut ok = true;
    for &(col, lo, hi) in bands {
        let o = finest_order(t, col);
        let good = in_band(o, lo, hi);
        ok &= good;
        detail.push(format!("{col} {o:.2}{}", if good { "" } else { "(!)" }));
    }
    ok
}

fn periodic_u() -> Outcome {
    let t = study("periodic-ex1", 2, &[20, 40, 80, 160], 0.8, 0.8, 0.01);
    let mut d = Vec::new();
    let mut ok = check_orders(
        &t,
        &[("e_un", 4.7, 5.3), ("e_uc", 4.7, 5.3), ("e_ur", 3.85, 4.15), ("e_urx", 2.85, 3.15)],
        &mut d,
    );
    let reference: [(&str, [f64; 4]); 4] = [
        ("e_un", [5.20e-8, 1.83e-9, 6.09e-11, 1.96e-12]),
        ("e_uc", [1.91e-7, 6.23e-9, 1.99e-10, 6.32e-12]),
        ("e_ur", [4.53e-6, 2.80e-7, 1.74e-8, 1.08e-9]),
        ("e_urx", [6.95e-5, 8.74e-6, 1.10e-6, 1.38e-7]),
    ];
    let mut worst: f64 = 1.0;
    for (col, expected) in reference {
        for (ours, theirs) in t.column(col).unwrap().iter().zip(expected) {
            worst = worst.max((ours / theirs).max(theirs / ours));
        }
    }
    ok &= worst <= 3.0;
    d.push(format!("max ratio to reference {worst:.3} (<= 3)"));
    Outcome {
        id: "1",
        title: "periodic u-functionals, k=2, lambda=theta=0.8",
        pass: ok,
        detail: d.join(", "),
    }
}

fn periodic_q() -> Outcome {
    let t = study("periodic-ex1", 2, &[20, 40, 80, 160], 0.7, 0.7, 0.01);
    let mut d = Vec::new();
    let ok = check_orders(
        &t,
        &[("e_qn", 4.6, 5.3), ("e_qc", 4.6, 5.3), ("e_ql", 3.85, 4.15), ("e_qlx", 2.85, 3.15)],
        &mut d,
    );
    Outcome {
        id: "2",
        title: "periodic q-functionals, k=2, lambda=theta=0.7",
        pass: ok,
        detail: d.join(", "),
    }
}

fn periodic_split() -> Outcome {
    let t = study("periodic-ex1", 2, &[20, 40, 80, 160], 1.2, 0.8, 0.01);
    let mut d = Vec::new();
    let ok = check_orders(
        &t,
        &[("e_un", 4.7, 5.3), ("e_uc", 4.7, 5.3), ("e_ur", 3.85, 4.15), ("e_urx", 2.85, 3.15)],
        &mut d,
    );
    for col in ["e_qn", "e_qc", "e_ql", "e_qlx"] {
        d.push(format!("{col} {:.2} (not gated)", finest_order(&t, col)));
    }
    Outcome {
        id: "3",
        title: "periodic split weights, k=2, lambda=1.2, theta=0.8",
        pass: ok,
        detail: d.join(", "),
    }
}

/// Boundary-condition blocks; P3 is run and printed without a gate.
fn boundary_blocks() -> (Outcome, Vec<String>) {
    let blocks: [(&str, [f64; 2]); 2] = [("mixed-ex2", [0.8, 1.2]), ("dirichlet-ex2", [0.7, 0.9])];
    let mut ok = true;
    let mut d = Vec::new();
    let mut info = Vec::new();
    for (case, weights) in blocks {
        for w in weights {
            for (k, ns, cfl) in [
                (1usize, vec![40, 80, 160, 320], 0.01),
                (2, vec![20, 40, 80, 160], 0.005),
                (3, vec![20, 30, 40, 50], 0.001),
            ] {
                let t = study(case, k, &ns, w, w, cfl);
                let target = (2 * k + 1) as f64;
                let (un, uc) = (finest_order(&t, "e_un"), finest_order(&t, "e_uc"));
                let label = format!("{case} w={w} P{k}: e_un {un:.2}, e_uc {uc:.2}");
                if k == 3 {
                    info.push(label);
                    continue;
                }
                let good = (un - target).abs() <= 0.3 && (uc - target).abs() <= 0.3;
                ok &= good;
                d.push(if good { label } else { format!("{label}(!)") });
            }
        }
    }
    (
        Outcome {
            id: "4",
            title: "mixed and Dirichlet, P1/P2 orders 2k+1 +- 0.3",
            pass: ok,
            detail: d.join("; "),
        },
        info,
    )
}

fn supercloseness() -> Outcome {
    let cfg = StudyConfig {
        k: 2,
        depth: Some(2),
        n_list: vec![10, 20, 40],
        ..StudyConfig::default()
    };
    let t = run_study(&cfg).unwrap();
    let e = t.column("superclose").unwrap();
    let xs: Vec<f64> = cfg.n_list.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = -xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let bound = 2.0 + 2.0 + 0.7;
    Outcome {
        id: "5",
        title: "supercloseness ||u_I - u_h||, k=2, ell=2",
        pass: slope >= bound,
        detail: format!("least-squares slope {slope:.3} (>= {bound}), errors {}", e.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" ")),
    }
}

fn random_smooth(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 + Clone {
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(1..4) as f64, rng.gen_range(0.0..6.0)))
        .collect();
    move |x: f64| terms.iter().map(|(a, b, c)| a * (b * x + c).sin()).sum()
}

fn weighted(f: &Field, i: usize, w: f64) -> f64 {
    f.weighted_trace(i, w, true).unwrap()
}

fn projection_conditions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..20 {
        let n = rng.gen_range(5..40);
        let k = rng.gen_range(1..=4);
        let theta = if rng.gen_bool(0.5) {
            rng.gen_range(0.55..1.0)
        } else {
            rng.gen_range(1.0..1.5)
        };
        let lambda = rng.gen_range(0.5..1.5);
        let mesh = Arc::new(Mesh::perturbed(n, 2.0 * PI, rng.gen_range(0.0..0.3), rng.gen()).unwrap());
        let l = mesh.length();
        let x = |i: usize| mesh.boundaries()[i];
        let z = random_smooth(&mut rng);
        let dz = random_smooth(&mut rng);
        let zscale = 3.0;
        let mut record = |name: &str, v: f64| {
            worst = worst.max(v);
            if !(v <= 1e-11) {
                failures += 1;
                eprintln!("  projection {name}: residual {v:e} (n={n} k={k} theta={theta})");
            }
        };

        let p = project_gauss_radau(&z, mesh.clone(), k, theta).unwrap();
        record("P_theta moments", moment_residual(&p, &z, k));
        let t = (1..=n).map(|i| (weighted(&p, i, theta) - z(x(i))).abs()).fold(0.0, f64::max);
        record("P_theta traces", t / zscale);

        let pq = project_modified(&dz, &z, mesh.clone(), k, theta, lambda).unwrap();
        record("P* moments", moment_residual(&pq, &dz, k));
        let t = (1..=n)
            .map(|i| {
                let (minus, plus) = p.traces(i, true).unwrap();
                let jump = (z(x(i)) - plus) - (z(x(i)) - minus);
                (weighted(&pq, i, 1.0 - theta) - dz(x(i)) - (lambda - theta) * jump).abs()
            })
            .fold(0.0, f64::max);
        record("P* traces", t / zscale);

        let pr = project_one_sided(&z, mesh.clone(), k, theta, Side::Right).unwrap();
        record("right-pinned moments", moment_residual(&pr, &z, k));
        let t = (1..n)
            .map(|i| (weighted(&pr, i, theta) - z(x(i))).abs())
            .fold((pr.right_end(n - 1) - z(l)).abs(), f64::max);
        record("right-pinned traces", t / zscale);

        let pl = project_one_sided(&dz, mesh.clone(), k, 1.0 - theta, Side::Left).unwrap();
        record("left-pinned moments", moment_residual(&pl, &dz, k));
        let t = (1..n)
            .map(|i| (weighted(&pl, i, 1.0 - theta) - dz(x(i))).abs())
            .fold((pl.left_end(0) - dz(0.0)).abs(), f64::max);
        record("left-pinned traces", t / zscale);

        let pd = project_dirichlet_endpoint(&z, &dz, &pl, theta).unwrap();
        record("Dirichlet moments", moment_residual(&pd, &z, k));
        let pin = z(l) + pl.right_end(n - 1) - dz(l);
        let t = (1..n)
            .map(|i| (weighted(&pd, i, theta) - z(x(i))).abs())
            .fold((pd.right_end(n - 1) - pin).abs(), f64::max);
        record("Dirichlet traces", t / zscale);

        if let Ok(ph) = project_local(&z, mesh.clone(), k, theta) {
            record("P_h moments", moment_residual(&ph, &z, k));
            let t = (0..n)
                .map(|j| {
                    (theta * ph.right_end(j) + (1.0 - theta) * ph.left_end(j)
                        - theta * z(x(j + 1))
                        - (1.0 - theta) * z(x(j)))
                    .abs()
                })
                .fold(0.0, f64::max);
            record("P_h traces", t / zscale);
        }
    }
    Outcome {
        id: "6a",
        title: "projection conditions a posteriori, 20 random configurations",
        pass: failures == 0,
        detail: format!("worst relative residual {worst:.2e} (<= 1e-11)"),
    }
}

fn circulant_vs_dense() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for n in [4usize, 9, 16] {
        for theta in [0.7, 0.8, 1.2] {
            for k in [1usize, 2] {
                let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let sys = CirculantSystem::new(theta, k, rhs.clone());
                let x = circulant_solve(&sys).unwrap();
                let mut m = DMatrix::zeros(n, n);
                for j in 0..n {
                    m[(j, j)] += theta;
                    m[(j, (j + 1) % n)] += if k % 2 == 0 { 1.0 } else { -1.0 } * (1.0 - theta);
                }
                let xd = m.lu().solve(&DVector::from_vec(rhs)).unwrap();
                let err = (0..n).map(|j| (x[j] - xd[j]).abs()).fold(0.0, f64::max) / xd.amax();
                worst = worst.max(err);
            }
        }
    }
    Outcome {
        id: "6b",
        title: "circulant solve vs dense LU",
        pass: worst <= 1e-12,
        detail: format!("worst relative difference {worst:.2e} (<= 1e-12)"),
    }
}

fn solution_for(bc: BcKind) -> &'static dyn ExactSolution {
    match bc {
        BcKind::Periodic => &PeriodicWave,
        _ => &DriftingWave,
    }
}

const VARIANTS: [(BcKind, f64, f64); 4] = [
    (BcKind::Periodic, 0.8, 0.8),
    (BcKind::Periodic, 1.2, 0.8),
    (BcKind::Mixed, 1.2, 1.2),
    (BcKind::Dirichlet, 0.7, 0.7),
];

fn coefficient_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for (bc, lambda, theta) in VARIANTS {
        for k in 1..=4 {
            let mesh = Arc::new(Mesh::perturbed(14, 2.0 * PI, 0.2, 7).unwrap());
            let s = build_stack(solution_for(bc), 0.3, mesh.clone(), k, 1, FluxWeights::new(lambda, theta), bc).unwrap();
            for j in 0..14 {
                let factor = 0.5 * mesh.width(j) / (2 * k + 1) as f64;
                let beta = -s.w_q[0][0].coeff(j, k) * factor;
                let gamma = beta - s.w_u[0][1].coeff(j, k) * factor;
                let got_beta = s.w_u[1][0].coeff(j, k - 1);
                let got_gamma = s.w_q[1][0].coeff(j, k - 1);
                worst = worst.max((got_beta - beta).abs() / beta.abs());
                worst = worst.max((got_gamma - gamma).abs() / gamma.abs());
            }
        }
    }
    Outcome {
        id: "6c",
        title: "level-1 correction coefficient identities",
        pass: worst <= 1e-12,
        detail: format!("worst relative difference {worst:.2e} (<= 1e-12)"),
    }
}

/// Per cell: |lhs - rhs| / scale of the residual identity with random `v`.
fn residual_identity(sol: &dyn ExactSolution, s: &CorrectionStack, v: &Field) -> f64 {
    let rule = gauss_rule(2 * s.k + 12);
    let mesh = s.mesh().clone();
    let (wu, wq, wu_t) = (s.aggregate_u(), s.aggregate_q(), s.aggregate_u_dt());
    let last = &s.w_u[s.depth][1];
    let mut worst: f64 = 0.0;
    for j in 0..mesh.n_cells() {
        let hbar = 0.5 * mesh.width(j);
        let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
        for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = mesh.to_physical(j, xi);
            let (vv, vx) = (v.eval(j, xi), v.eval_deriv(j, xi));
            let ut = sol.eval(0, 1, x, s.t);
            let err_t = ut - s.proj_u[1].eval(j, xi) + wu_t.eval(j, xi);
            lhs += w * hbar * (err_t * vv - wu.eval(j, xi) * vx + wq.eval(j, xi) * vx);
            rhs += w * hbar * last.eval(j, xi) * vv;
            scale += w * hbar * (ut * vv).abs();
        }
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}

fn residual_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for (bc, lambda, theta) in VARIANTS {
        for k in 1..=4 {
            for depth in 1..=k {
                let mesh = Arc::new(Mesh::perturbed(11, 2.0 * PI, 0.25, 12).unwrap());
                let sol = solution_for(bc);
                let s = build_stack(sol, 0.6, mesh.clone(), k, depth, FluxWeights::new(lambda, theta), bc).unwrap();
                let coeffs = (0..11 * (k + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v = Field::from_coeffs(mesh, k, coeffs).unwrap();
                worst = worst.max(residual_identity(sol, &s, &v));
            }
        }
    }
    Outcome {
        id: "6d",
        title: "correction residual identity on random test fields",
        pass: worst <= 1e-10,
        detail: format!("worst scaled residual {worst:.2e} (<= 1e-10)"),
    }
}

fn energy_and_mass() -> Outcome {
    let mut max_rise: f64 = 0.0;
    let mut max_drift: f64 = 0.0;
    for n in [20, 40, 80, 160] {
        let mesh = Arc::new(Mesh::uniform(n, 2.0 * PI).unwrap());
        let cfg = SchemeConfig {
            k: 2,
            weights: FluxWeights::equal(0.8),
            bc: BoundaryCondition::Periodic,
            cfl: 0.01,
            final_time: 1.0,
            depth: 2,
        };
        let op = LdgOperator::new(mesh.clone(), &cfg).unwrap();
        let u0 = initial_data(&PeriodicWave, mesh.clone(), 2, 2, cfg.weights, BcKind::Periodic).unwrap();
        let mass = |u: &Field| (0..n).map(|j| u.coeff(j, 0) * mesh.width(j)).sum::<f64>();
        let m0 = mass(&u0);
        let mut prev = u0.l2_norm();
        integrate_from(&cfg, &op, u0, |_, _, u| {
            let norm = u.l2_norm();
            max_rise = max_rise.max(norm - prev);
            prev = norm;
            max_drift = max_drift.max((mass(u) - m0).abs());
            Ok(())
        })
        .unwrap();
    }
    Outcome {
        id: "6e",
        title: "energy decay and mean conservation, periodic k=2 runs",
        pass: max_rise <= 1e-10 && max_drift <= 1e-10,
        detail: format!("max per-step norm increase {max_rise:.2e}, max mass drift {max_drift:.2e} (<= 1e-10)"),
    }
}

fn initial_supercloseness() -> Outcome {
    let mut worst: f64 = 0.0;
    for (bc, lambda, theta) in VARIANTS {
        for k in 1..=4 {
            let mesh = Arc::new(Mesh::uniform(16, 2.0 * PI).unwrap());
            let sol: Arc<dyn ExactSolution> = match bc {
                BcKind::Periodic => Arc::new(PeriodicWave),
                _ => Arc::new(DriftingWave),
            };
            let cfg = SchemeConfig {
                k,
                weights: FluxWeights::new(lambda, theta),
                bc: BoundaryCondition::from_exact(bc, sol.clone()),
                cfl: 0.01,
                final_time: 0.0,
                depth: k,
            };
            let s = integrate(&cfg, mesh.clone(), sol.as_ref(), &IntegrateOptions::default()).unwrap();
            let stack = build_stack(sol.as_ref(), 0.0, mesh, k, k, cfg.weights, bc).unwrap();
            worst = worst.max(stack.interpolant().0.sub(&s.u).unwrap().l2_norm());
        }
    }
    Outcome {
        id: "6f",
        title: "initial-data supercloseness ||u_I(0) - u_h(0)||",
        pass: worst <= 1e-13,
        detail: format!("max {worst:.2e} (<= 1e-13)"),
    }
}

fn floor_handling() -> Outcome {
    let t = study("periodic-ex1", 4, &[10, 15, 20, 25], 1.2, 1.2, 0.001);
    let mut flagged = 0;
    let mut ok = true;
    let mut d = Vec::new();
    for col in ["e_un", "e_uc"] {
        let orders = t.orders(col).unwrap();
        for i in 1..orders.len() {
            let o = orders[i].order.unwrap();
            if orders[i].floor || orders[i - 1].floor {
                flagged += 1;
                d.push(format!("{col} N={} {o:.2} floor", t.rows[i].n));
            } else if o < 9.0 - 0.3 {
                ok = false;
                d.push(format!("{col} N={} {o:.2}(!)", t.rows[i].n));
            }
        }
    }
    let finest = t.rows.last().unwrap().e_un;
    ok &= flagged > 0 && finest <= 1e-14 * t.floor_scale;
    d.push(format!("finest e_un {finest:.2e}, floor {:.2e}", 1e-14 * t.floor_scale));
    Outcome {
        id: "7",
        title: "round-off floor, k=4, lambda=theta=1.2",
        pass: ok,
        detail: d.join(", "),
    }
}

fn main() {
    let (c4, info) = boundary_blocks();
    let outcomes = vec![
        periodic_u(),
        periodic_q(),
        periodic_split(),
        c4,
        supercloseness(),
        projection_conditions(),
        circulant_vs_dense(),
        coefficient_identities(),
        residual_identities(),
        energy_and_mass(),
        initial_supercloseness(),
        floor_handling(),
    ];
    println!();
    for o in &outcomes {
        println!(
            "[{}] criterion {}: {} | {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.detail
        );
    }
    for line in info {
        println!("[INFO] P3 (not gated): {line}");
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} passed, {} failed", outcomes.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
