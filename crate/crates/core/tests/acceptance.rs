//! One test per acceptance criterion. Each prints a single PASS/FAIL line.

use opgeom::cli::invariants::{becker_nessel_excess, mkz_moment_asymptotic_error, symmetric_sandwich_excess};
use opgeom::cli::runners::reconstruction_error;
use opgeom::cli::{run, ConfigOverrides, Experiment, ExperimentConfig, Rows};
use opgeom::funcspace::{check_f_second_derivative, f_transform_default, project_to_cpsi, psi, psi_norm, EvaluationGrid, Function01, Polynomial};
use opgeom::operators::durrmeyer::{beta_expectation, beta_expectation_quadrature};
use opgeom::operators::{Family, OperatorSpec};
use opgeom::series::SeriesEngine;

const REGISTRY: [&str; 10] = ["e0", "e1", "e2", "e3", "e4", "psi", "sin_pi", "exp", "abs_half", "osc"];

fn grid() -> EvaluationGrid {
    EvaluationGrid::chebyshev(1001).unwrap()
}

fn verdict(id: &str, pass: bool, detail: String) {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id}: {detail}");
}

fn sup<F: FnMut(f64) -> f64>(g: &EvaluationGrid, mut f: F) -> f64 {
    g.points().iter().map(|&x| f(x)).fold(f64::NEG_INFINITY, f64::max)
}

/// Registry entries moved into C_ψ: f − B₁f, except osc which becomes ψ·osc.
fn cpsi_registry() -> Vec<Function01> {
    REGISTRY
        .iter()
        .map(|name| {
            let f = Function01::registry(name).unwrap();
            if *name == "osc" {
                Function01::psi_times(&f)
            } else {
                project_to_cpsi(&f)
            }
        })
        .collect()
}

fn config(experiment: Experiment, family: Family, function: &str, n_list: Option<Vec<u32>>) -> ExperimentConfig {
    ExperimentConfig::resolve(ConfigOverrides {
        experiment: Some(experiment),
        family: Some(family),
        function: Some(function.to_string()),
        n_list,
        rho: (family == Family::Durrmeyer).then_some(1.0),
        ..Default::default()
    })
    .unwrap()
}

fn error_column(cfg: &ExperimentConfig) -> Vec<f64> {
    match run(cfg).unwrap().rows {
        Rows::Geom(r) => r.iter().map(|r| r.error_psi).collect(),
        Rows::Voronovskaya(r) | Rows::InverseVoronovskaya(r) => r.iter().map(|r| r.error_psi).collect(),
        _ => unreachable!(),
    }
}

fn worst_ratio(col: &[f64]) -> f64 {
    col.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max)
}

fn fmt_col(col: &[f64]) -> String {
    col.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(",")
}

#[test]
fn ac01_bernstein_moments() {
    let g = grid();
    let (mut e2, mut e4) = (0.0f64, 0.0f64);
    for n in 2..=32u32 {
        let op = OperatorSpec::bernstein(n).unwrap();
        let nf = n as f64;
        e2 = e2.max(sup(&g, |x| (op.moment(2, x).unwrap() - psi(x) / nf).abs()));
        e4 = e4.max(sup(&g, |x| {
            let r = op.moment(4, x).unwrap() / op.moment(2, x).unwrap();
            (r - ((3.0 / nf - 6.0 / (nf * nf)) * psi(x) + 1.0 / (nf * nf))).abs()
        }));
    }
    verdict("AC01", e2 <= 1e-12 && e4 <= 1e-10, format!("bernstein moments: M2 err {e2:.2e} (<=1e-12), M4/M2 err {e4:.2e} (<=1e-10)"));
}

#[test]
fn ac02_bernstein_condition_bound() {
    let g = grid();
    let mut worst = f64::NEG_INFINITY;
    for n in 2..=32u32 {
        let op = OperatorSpec::bernstein(n).unwrap();
        let nf = n as f64;
        let s = sup(&g, |x| op.moment(4, x).unwrap() / op.moment(2, x).unwrap());
        worst = worst.max(s - (0.75 / nf - 0.5 / (nf * nf)));
    }
    verdict("AC02", worst <= 1e-12, format!("max of sup M4/M2 - (3/(4n) - 1/(2n^2)) = {worst:.2e} (<=1e-12)"));
}

#[test]
fn ac03_durrmeyer_moments() {
    let g = grid();
    let (mut e2, mut e4) = (0.0f64, 0.0f64);
    for n in [4u32, 8, 16] {
        for rho in [0.5, 1.0, 2.0] {
            let op = OperatorSpec::durrmeyer(n, rho).unwrap();
            let nf = n as f64;
            let nr = nf * rho;
            let den = (nr + 1.0) * (nr + 2.0) * (nr + 3.0);
            e2 = e2.max(sup(&g, |x| (op.moment(2, x).unwrap() - (rho + 1.0) * psi(x) / (nr + 1.0)).abs()));
            e4 = e4.max(sup(&g, |x| {
                let p = psi(x);
                let m4 = (3.0 * rho * (rho + 1.0).powi(2) * p * p * nf
                    - 6.0 * (rho + 1.0) * (rho * rho + 3.0 * rho + 3.0) * p * p
                    + (rho + 1.0) * (rho + 2.0) * (rho + 3.0) * p)
                    / den;
                (op.moment(4, x).unwrap() - m4).abs()
            }));
        }
    }
    let mut polys: Vec<Function01> = (0..=4).map(|k| Function01::registry(&format!("e{k}")).unwrap()).collect();
    polys.push(Function01::registry("psi").unwrap());
    polys.push(Function01::polynomial("p7", Polynomial::new(vec![0.3, -1.0, 2.5, 0.0, -4.0, 1.0, 0.5, -2.0])));
    let mut eq = 0.0f64;
    for f in &polys {
        for (a, b) in [(0.5, 7.5), (2.0, 6.0), (4.0, 4.0), (15.0, 1.0), (3.5, 12.5)] {
            let c = beta_expectation(f, a, b).unwrap();
            let q = beta_expectation_quadrature(f, a, b).unwrap();
            eq = eq.max((c - q).abs());
        }
    }
    let pass = e2 <= 1e-10 && e4 <= 1e-8 && eq <= 1e-8;
    verdict("AC03", pass, format!("durrmeyer M2 err {e2:.2e} (<=1e-10), M4 err {e4:.2e} (<=1e-8), closed form vs Gauss-Jacobi {eq:.2e} (<=1e-8)"));
}

#[test]
fn ac04_eigenfunction_oracle() {
    let g = grid();
    let p = Function01::registry("psi").unwrap();
    let mut worst = 0.0f64;
    for n in 2..=32u32 {
        let op = OperatorSpec::bernstein(n).unwrap();
        let engine = SeriesEngine::new(&op, &g).unwrap();
        let nf = n as f64;
        for r in [engine.neumann(&p, 1e-8).unwrap(), engine.solve(&p).unwrap()] {
            let e = sup(&engine.grid, |x| ((r.g.eval(x) - nf * psi(x)) / psi(x)).abs());
            worst = worst.max(e / (1e-6 * nf));
        }
    }
    let eps = 1e-8;
    let mut agree = 0.0f64;
    for op in [
        OperatorSpec::bernstein(4).unwrap(),
        OperatorSpec::bernstein(16).unwrap(),
        OperatorSpec::bernstein(32).unwrap(),
        OperatorSpec::durrmeyer(8, 1.0).unwrap(),
        OperatorSpec::durrmeyer(8, 0.5).unwrap(),
    ] {
        let engine = SeriesEngine::new(&op, &g).unwrap();
        let tol = eps / (1.0 - engine.b_norm()) + 1e-9;
        for f in cpsi_registry() {
            let a = engine.neumann(&f, eps).unwrap();
            let b = engine.solve(&f).unwrap();
            let d = sup(&engine.grid, |x| ((a.g.eval(x) - b.g.eval(x)) / psi(x)).abs());
            agree = agree.max(d / tol);
        }
    }
    let pass = worst <= 1.0 && agree <= 1.0;
    verdict("AC04", pass, format!("|G(psi) - n psi| / (1e-6 n) max {worst:.2e}; path disagreement / (eps/(1-b) + 1e-9) max {agree:.2e}"));
}

#[test]
fn ac05_inversion_residuals() {
    let g = grid();
    let p = Function01::registry("psi").unwrap();
    let inputs = [p.clone(), p.scale(-1.0), project_to_cpsi(&Function01::registry("e3").unwrap())];
    let mut exact = 0.0f64;
    for op in [
        OperatorSpec::bernstein(4).unwrap(),
        OperatorSpec::bernstein(16).unwrap(),
        OperatorSpec::durrmeyer(4, 1.0).unwrap(),
        OperatorSpec::durrmeyer(16, 2.0).unwrap(),
    ] {
        let engine = SeriesEngine::new(&op, &g).unwrap();
        for f in &inputs {
            let (r7, r8) = engine.inversion_residuals(f, 1e-8).unwrap();
            exact = exact.max(r7).max(r8);
        }
    }
    let mut mkz = 0.0f64;
    for n in [4u32, 8] {
        let op = OperatorSpec::mkz_symmetric(n, 1e-12).unwrap();
        let engine = SeriesEngine::new(&op, &g).unwrap();
        for f in &inputs {
            let trunc = engine.neumann(f, 1e-6).unwrap().truncation_bound;
            let (r7, r8) = engine.inversion_residuals(f, 1e-6).unwrap();
            mkz = mkz.max(r7.max(r8) / (10.0 * (1e-6 + trunc)));
        }
    }
    let pass = exact <= 1e-7 && mkz <= 1.0;
    verdict("AC05", pass, format!("exact carriers max residual {exact:.2e} (<=1e-7); mkz-symmetric residual / 10(eps+trunc) max {mkz:.2e}"));
}

#[test]
fn ac06_norm_bounds() {
    let g = grid();
    let p = Function01::registry("psi").unwrap();
    let fs = cpsi_registry();
    let mut ops = Vec::new();
    for n in [4u32, 8, 16] {
        ops.push((OperatorSpec::bernstein(n).unwrap(), 1e-8));
        ops.push((OperatorSpec::durrmeyer(n, 1.0).unwrap(), 1e-8));
    }
    for n in [4u32, 8] {
        ops.push((OperatorSpec::mkz_symmetric(n, 1e-12).unwrap(), 1e-6));
    }
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for (op, eps) in &ops {
        let engine = SeriesEngine::new(op, &g).unwrap();
        let bn = engine.b_norm();
        let gp = engine.neumann(&p, *eps).unwrap();
        a = a.max((1.0 - bn) * psi_norm(&gp.g, &engine.grid).unwrap().value);
        for f in &fs {
            let nf = psi_norm(f, &engine.grid).unwrap().value;
            if nf == 0.0 {
                continue;
            }
            let gf = engine.neumann(f, *eps).unwrap();
            b = b.max((1.0 - bn) * psi_norm(&gf.g, &engine.grid).unwrap().value / nf);
        }
    }
    let pass = a <= 1.0 + 1e-6 && b <= 1.0 + 1e-6;
    verdict("AC06", pass, format!("(1-b)|G(psi)| max {a:.6}; (1-b)|G f|/|f| max {b:.6} (both <=1+1e-6)"));
}

#[test]
fn ac07_iterate_rate() {
    let g = grid();
    let f = Function01::registry("e2").unwrap();
    let mut worst = 0.0f64;
    for n in [4u32, 8] {
        for op in [
            OperatorSpec::bernstein(n).unwrap(),
            OperatorSpec::durrmeyer(n, 1.0).unwrap(),
            OperatorSpec::mkz_symmetric(n, 1e-12).unwrap(),
        ] {
            let engine = SeriesEngine::new(&op, &g).unwrap();
            let it = engine.iterates(&f, 29).unwrap();
            let b = engine.b_norm();
            let n1 = psi_norm(&it.f1, &engine.grid).unwrap().value;
            for k in 0..=30usize {
                let e = sup(&engine.grid, |x| it.cpsi_ratio(k, x).unwrap().abs());
                worst = worst.max(e / (b.powi(k as i32) * n1));
            }
        }
    }
    verdict("AC07", worst <= 1.0 + 1e-9, format!("max |L^k f - B1 f| / (b^k |f - B1 f|) = {worst:.12} (<=1+1e-9)"));
}

#[test]
fn ac08_geometric_series_limit() {
    let col = error_column(&config(Experiment::Geom, Family::Bernstein, "e0", None));
    let mut pass = col.iter().all(|&e| e <= 1e-6);
    let mut detail = format!("bernstein e0 [{}] (<=1e-6)", fmt_col(&col));
    for family in [Family::Bernstein, Family::Durrmeyer, Family::MkzSymmetric] {
        for f in ["e1", "sin_pi", "osc"] {
            let col = error_column(&config(Experiment::Geom, family, f, None));
            let r = worst_ratio(&col);
            pass &= r <= 0.9;
            detail.push_str(&format!("; {family} {f} ratio {r:.3}"));
        }
    }
    verdict("AC08", pass, detail);
}

#[test]
fn ac09_becker_nessel_sandwich() {
    let g = grid();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut slo, mut shi) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in 3..=16u32 {
        let (a, b) = becker_nessel_excess(n, 1e-10, &g).unwrap();
        lo = lo.max(a);
        hi = hi.max(b);
        let (a, b) = symmetric_sandwich_excess(n, 1e-10, &g).unwrap();
        slo = slo.max(a);
        shi = shi.max(b);
    }
    let pass = [lo, hi, slo, shi].iter().all(|&v| v <= 1e-10);
    verdict(
        "AC09",
        pass,
        format!("max excess over bounds (<=1e-10): Z_n lower {lo:.2e} upper {hi:.2e}; Z_n* lower {slo:.2e} upper {shi:.2e}"),
    );
}

#[test]
fn ac10_mkz_moment_asymptotic() {
    let g = grid();
    let mut pass = true;
    let mut detail = String::new();
    for r in [2u32, 3, 4] {
        let col: Vec<f64> = [4u32, 8, 16, 32].iter().map(|&n| mkz_moment_asymptotic_error(n, r, 1e-12, &g).unwrap()).collect();
        let q = worst_ratio(&col);
        pass &= q <= 0.7;
        detail.push_str(&format!("e{r} [{}] ratio {q:.3}; ", fmt_col(&col)));
    }
    verdict("AC10", pass, format!("{detail}(ratio <=0.7)"));
}

#[test]
fn ac11_voronovskaya() {
    let cfg = config(Experiment::Voronovskaya, Family::Bernstein, "e3", None);
    let col = error_column(&cfg);
    let mut pass = cfg.n_list.iter().zip(&col).all(|(&n, &e)| e <= 1.01 / n as f64);
    let mut detail = format!("e3 n*err [{}] (<=1.01)", fmt_col(&cfg.n_list.iter().zip(&col).map(|(&n, &e)| n as f64 * e).collect::<Vec<_>>()));
    for f in ["e4", "sin_pi", "exp"] {
        let r = worst_ratio(&error_column(&config(Experiment::Voronovskaya, Family::Bernstein, f, None)));
        pass &= r <= 0.6;
        detail.push_str(&format!("; {f} ratio {r:.3}"));
    }
    verdict("AC11", pass, format!("{detail} (<=0.6)"));
}

#[test]
fn ac12_inverse_voronovskaya() {
    let g = grid();
    let mut rec = 0.0f64;
    for f in ["e2", "e3", "e4", "sin_pi"] {
        rec = rec.max(reconstruction_error(&Function01::registry(f).unwrap(), &g).unwrap());
    }
    let mut pass = rec <= 1e-8;
    let mut detail = format!("reconstruction max {rec:.2e} (<=1e-8)");
    for family in [Family::Bernstein, Family::Durrmeyer, Family::MkzSymmetric] {
        for f in ["e3", "sin_pi"] {
            let col = error_column(&config(Experiment::InverseVoronovskaya, family, f, None));
            let dec = col.windows(2).all(|w| w[1] < w[0]);
            pass &= dec;
            detail.push_str(&format!("; {family} {f} premise [{}]", fmt_col(&col)));
        }
    }
    verdict("AC12", pass, detail);
}

#[test]
fn ac13_f_transform() {
    let g = grid();
    let f0 = f_transform_default(&Function01::registry("e0").unwrap()).unwrap();
    let f1 = f_transform_default(&Function01::registry("e1").unwrap()).unwrap();
    let d0 = sup(&g, |x| (f0.eval(x) - psi(x) / 2.0).abs());
    let d1 = sup(&g, |x| (f1.eval(x) - psi(x) * (1.0 + x) / 6.0).abs());
    let mut pass = d0 <= 1e-10 && d1 <= 1e-10;
    let mut detail = format!("F(e0) err {d0:.2e}, F(e1) err {d1:.2e} (<=1e-10)");

    let hs: Vec<f64> = (0..4).map(|i| 1e-2 / 2f64.powi(i)).collect();
    let mut flat = 0.0f64;
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for name in ["e0", "e1", "psi"] {
        let f = Function01::registry(name).unwrap();
        for x in [0.2, 0.5, 0.7] {
            let errs: Vec<f64> = hs.iter().map(|&h| (check_f_second_derivative(&f, x, h).unwrap() + f.eval(x)).abs()).collect();
            if name == "psi" {
                for w in errs.windows(2) {
                    rmin = rmin.min(w[0] / w[1]);
                    rmax = rmax.max(w[0] / w[1]);
                }
            } else {
                // F of a linear function is a cubic: the central difference is exact
                flat = flat.max(errs.iter().cloned().fold(0.0, f64::max));
            }
        }
    }
    pass &= flat <= 1e-8 && rmin >= 3.5 && rmax <= 4.5;
    detail.push_str(&format!("; e0/e1 |F''+f| max {flat:.2e} (<=1e-8); psi halving ratios in [{rmin:.3}, {rmax:.3}]"));
    verdict("AC13", pass, detail);
}
