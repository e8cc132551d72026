//! Dispatch from a parsed config to the compute modules, producing a CSV
//! table and the headline numbers and checks of the JSON summary.

use anyhow::{bail, Result};
use capdual_core::haar::{mc_isotypic_norm, mc_weight_norm, GroupAction};
use capdual_core::laurent::{critical_values, laurent_cst_power, laurent_cst_power_exact, LaurentPoly};
use capdual_core::projection::{duality_report, prefactor_at, prefactor_sequence, projection_norm_table};
use capdual_core::repr::rational::to_f64;
use capdual_core::repr::{Partition, ProbVector, Rational};
use capdual_core::scaling::{perm_dual_report, perm_rc_exact};
use capdual_core::spectrum::{ldp_report, schur_weyl_measure, su2_multiplicity_rows, LdpFamily};
use capdual_core::torus::{capacity_kl_form, moment_map, moment_polytope_contains, theta_capacity};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::*;

/// CSV cell for a double: 17 significant digits, scientific notation.
pub fn num(x: f64) -> String {
    // no "-0" cells
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Short human-readable form for thresholds and console output.
pub fn show(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

fn check(name: impl Into<String>, value: f64, threshold: impl Into<String>, pass: bool) -> Check {
    Check {
        name: name.into(),
        value,
        threshold: threshold.into(),
        pass,
    }
}

pub struct Outcome {
    pub table: Table,
    pub headline: Map<String, Value>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn json_f64(x: f64) -> Value {
    // JSON has no infinities; keep them readable
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn point(p: &[i64]) -> String {
    p.iter().map(i64::to_string).collect::<Vec<_>>().join(";")
}

pub fn run(experiment: &Experiment, seed: u64) -> Result<Outcome> {
    match experiment {
        Experiment::Duality(c) => duality(c),
        Experiment::Prefactor(c) => prefactor(c),
        Experiment::PermDual(c) => perm(c),
        Experiment::SchurWeylLdp(c) => schur_weyl(c),
        Experiment::DuffieldLdp(c) => duffield(c),
        Experiment::McCheck(c) => mc(c, seed),
        Experiment::Capacity(c) => capacity(c),
        Experiment::Laurent(c) => laurent(c),
    }
}

fn duality(c: &DualityConfig) -> Result<Outcome> {
    let v = c.vector.build()?;
    let theta = rationals(&c.theta)?;
    let report = duality_report(&v, &theta, c.k_max)?;
    let ln_cap = report.log_cap.log_mag();
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                point(&r.point),
                num(r.log_value.log_mag()),
                num(r.rate),
                num(ln_cap),
                num(r.gap),
                num(r.norm_ratio()),
            ]
        })
        .collect();
    let mut headline = Map::new();
    headline.insert("ln_cap".into(), json_f64(ln_cap));
    headline.insert("period".into(), json!(report.period));
    let mut checks = Vec::new();
    let worst_gap = report.rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    match report.last() {
        Some(last) => {
            headline.insert("final_k".into(), json!(last.k));
            headline.insert("final_ratio".into(), json_f64(last.norm_ratio()));
            let t = &c.tolerances;
            checks.push(check(
                "final ratio",
                last.norm_ratio(),
                format!(">= {}", t.min_ratio),
                last.norm_ratio() >= t.min_ratio,
            ));
            checks.push(check(
                "weak duality",
                worst_gap,
                format!(">= -{}", show(t.weak_duality_slack)),
                worst_gap >= -t.weak_duality_slack,
            ));
        }
        None => checks.push(check("rows reported", 0.0, ">= 1", false)),
    }
    Ok(Outcome {
        table: Table {
            header: vec!["k", "lambda", "ln_norm_sq", "rate_ln", "ln_cap", "gap_ln", "norm_ratio"],
            rows,
        },
        headline,
        checks,
    })
}

fn prefactor(c: &PrefactorConfig) -> Result<Outcome> {
    let v = c.vector.build()?;
    let seq = match (&c.ks, c.k_max) {
        (Some(ks), None) => prefactor_at(&v, ks)?,
        (None, Some(k_max)) => prefactor_sequence(&v, k_max)?,
        _ => bail!("give exactly one of k_max (dynamic programming) and ks (quadrature)"),
    };
    let rows = seq
        .rows
        .iter()
        .map(|&(k, p)| vec![k.to_string(), num(p), num(p.ln())])
        .collect();
    let mut headline = Map::new();
    headline.insert("exponent_dim".into(), json!(seq.exponent_dim));
    headline.insert("period".into(), json!(seq.period));
    let t = &c.tolerances;
    let mut checks = Vec::new();
    let Some(&(k_last, last)) = seq.rows.last() else {
        bail!("no k in the period-{} subsemigroup was requested", seq.period);
    };
    headline.insert("final_k".into(), json!(k_last));
    headline.insert("final_prefactor".into(), json_f64(last));
    checks.push(check("positive", last, "> 0", last > 0.0));
    if let Some(target) = t.target {
        checks.push(check(
            "distance to target",
            (last - target).abs(),
            format!("<= {}", show(t.target_tolerance)),
            (last - target).abs() <= t.target_tolerance,
        ));
    }
    if let Some(from) = t.cauchy_from {
        let tail: Vec<f64> = seq.rows.iter().filter(|r| r.0 >= from).map(|r| r.1).collect();
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(0.0, f64::max);
        let spread = if tail.is_empty() { f64::INFINITY } else { hi / lo - 1.0 };
        checks.push(check(
            format!("relative spread for k >= {from}"),
            spread,
            format!("<= {}", show(t.cauchy_relative)),
            spread <= t.cauchy_relative,
        ));
    }
    Ok(Outcome {
        table: Table {
            header: vec!["k", "prefactor", "ln_prefactor"],
            rows,
        },
        headline,
        checks,
    })
}

fn perm(c: &PermDualConfig) -> Result<Outcome> {
    let m: Vec<Vec<Rational>> = c.matrix.iter().map(|row| rationals(row)).collect::<Result<_>>()?;
    let r = rationals(&c.r)?;
    let cc = rationals(&c.c)?;
    let report = perm_dual_report(&m, &r, &cc, c.k_max)?;
    let n = r.len();
    let mut rows = Vec::new();
    for row in &report.report.rows {
        let (kr, kc) = row.point.split_at(n);
        let kr: Vec<u64> = kr.iter().map(|&x| x as u64).collect();
        let kc: Vec<u64> = kc.iter().map(|&x| x as u64).collect();
        let exact = perm_rc_exact(&m, &kr, &kc)?.exact
            * Rational::from_integer(capdual_core::repr::factorial(row.k).into());
        rows.push(vec![
            row.k.to_string(),
            num(row.log_value.log_mag()),
            exact.to_string(),
            num(row.rate),
            num(row.target),
            num(row.gap),
        ]);
    }
    let mut headline = Map::new();
    headline.insert("ln_cap_sq".into(), json_f64(report.cap_sq.log_mag()));
    headline.insert("cap_sq".into(), json_f64(report.cap_sq.to_f64()));
    let t = &c.tolerances;
    let mut checks = Vec::new();
    let worst = report.report.rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    checks.push(check(
        "finite-k values below cap²",
        worst,
        format!(">= -{}", show(t.slack)),
        report.report.rows.is_empty() || worst >= -t.slack,
    ));
    if let (Some([lo, hi]), Some(last)) = (t.final_window, report.report.last()) {
        let value = last.rate.exp();
        checks.push(check(
            format!("(k!·perm)^(1/k) at k = {}", last.k),
            value,
            format!("in [{lo}, {hi}]"),
            (lo..=hi).contains(&value),
        ));
    }
    if let Some(s) = &report.sandwich {
        headline.insert(
            "sandwich".into(),
            json!({
                "perm_exact": s.perm.to_string(),
                "lower": json_f64(s.lower),
                "upper": json_f64(s.upper),
                "lower_holds": s.lower_holds,
                "upper_holds": s.upper_holds,
            }),
        );
        checks.push(check("sandwich lower bound", s.lower, format!("<= {}", to_f64(&s.perm)), s.lower_holds));
        checks.push(check("sandwich upper bound", s.upper, format!(">= {}", to_f64(&s.perm)), s.upper_holds));
    }
    Ok(Outcome {
        table: Table {
            header: vec!["k", "ln_k_factorial_perm", "k_factorial_perm_exact", "rate_ln", "ln_cap_sq", "gap_ln"],
            rows,
        },
        headline,
        checks,
    })
}

fn ldp_checks(report: &capdual_core::report::ConvergenceReport, t: &LdpTolerances) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut previous: Option<f64> = None;
    for &(k, bound) in &t.checkpoints {
        let Some(row) = report.row(k) else {
            checks.push(check(format!("row k = {k} present"), 0.0, "k <= k_max", false));
            continue;
        };
        let dev = row.gap.abs();
        checks.push(check(format!("|rate gap| at k = {k}"), dev, format!("<= {bound}"), dev <= bound));
        if t.decreasing {
            if let Some(p) = previous {
                checks.push(check(format!("decrease into k = {k}"), dev - p, "< 0", dev < p));
            }
        }
        previous = Some(dev);
    }
    checks
}

fn ldp_rows(report: &capdual_core::report::ConvergenceReport) -> Vec<Vec<String>> {
    report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                point(&r.point),
                num(r.log_value.log_mag()),
                num(r.rate),
                num(r.target),
                num(r.gap),
            ]
        })
        .collect()
}

fn schur_weyl(c: &SchurWeylConfig) -> Result<Outcome> {
    let q = ProbVector::new(c.q.clone())?;
    let theta = rationals(&c.theta)?;
    let report = ldp_report(&LdpFamily::SchurWeyl(q), &theta, c.k_max)?;
    let mut rows = ldp_rows(&report);
    for (row, r) in rows.iter_mut().zip(&report.rows) {
        let parts = r.point.iter().map(|&p| p as u64).collect();
        row.push(Partition::new(parts)?.standard_tableaux().to_string());
    }
    let mut headline = Map::new();
    headline.insert("rate_target".into(), json_f64(report.rows.first().map_or(f64::NAN, |r| r.target)));
    Ok(Outcome {
        table: Table {
            header: vec!["k", "lambda", "ln_prob", "rate_ln", "target_rate_ln", "gap_ln", "f_lambda_exact"],
            rows,
        },
        headline,
        checks: ldp_checks(&report, &c.tolerances),
    })
}

fn duffield(c: &DuffieldConfig) -> Result<Outcome> {
    let theta = c.theta.to_rational()?;
    let report = ldp_report(&LdpFamily::Duffield(c.weights.clone()), &[theta], c.k_max)?;
    let mut rows = ldp_rows(&report);
    let mut header = vec!["k", "lambda", "ln_prob", "rate_ln", "target_rate_ln", "gap_ln"];
    let mut sorted = c.weights.clone();
    sorted.sort();
    if sorted == [-1, 1] && c.k_max <= capdual_core::spectrum::MAX_SU2_K {
        // W = C²: the multiplicities are the Clebsch–Gordan numbers
        header.push("multiplicity_exact");
        let mut values = Vec::with_capacity(rows.len());
        su2_multiplicity_rows(c.k_max, |table| {
            if let Some(r) = report.row(table.k) {
                values.push(table.get(r.point[0] as u64).to_string());
            }
        })?;
        for (row, value) in rows.iter_mut().zip(values) {
            row.push(value);
        }
    }
    let mut headline = Map::new();
    headline.insert("rate_target".into(), json_f64(report.rows.first().map_or(f64::NAN, |r| r.target)));
    Ok(Outcome {
        table: Table { header, rows },
        headline,
        checks: ldp_checks(&report, &c.tolerances),
    })
}

fn matrix(m: &[[Amplitude; 2]; 2]) -> [[Complex64; 2]; 2] {
    [[m[0][0].value(), m[0][1].value()], [m[1][0].value(), m[1][1].value()]]
}

/// `‖Π_λ A^⊗k‖² = ‖A‖^{2k} f^λ s_λ(q)` with `q` the normalized spectrum of
/// `AA†`; for `SU(2)` all `λ` with the same `λ₁ − λ₂` contribute.
fn left_matrix_exact(a: &[[Complex64; 2]; 2], k: u32, lambda: &[u64], special: bool) -> Result<f64> {
    let h = |i: usize, j: usize| a[i][0] * a[j][0].conj() + a[i][1] * a[j][1].conj();
    let tr = (h(0, 0) + h(1, 1)).re;
    let det = (h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0)).re;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let q = ProbVector::new(vec![(tr + disc) / (2.0 * tr), ((tr - disc) / (2.0 * tr)).max(0.0)])?;
    let diff = lambda[0] as i64 - lambda[1] as i64;
    let total: f64 = schur_weyl_measure(&q, k as u64)?
        .iter()
        .filter(|row| {
            let p = row.lambda.parts();
            let (l1, l2) = (p.first().copied().unwrap_or(0), p.get(1).copied().unwrap_or(0));
            if special {
                l1 as i64 - l2 as i64 == diff
            } else {
                [l1, l2] == [lambda[0], lambda[1]]
            }
        })
        .map(|row| row.prob.to_f64())
        .sum();
    Ok(total * tr.powi(k as i32))
}

fn mc(c: &McConfig, seed: u64) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut within = 0usize;
    for (i, case) in c.cases.iter().enumerate() {
        let case_seed = seed.wrapping_add(i as u64);
        let (name, exact, est) = match &case.action {
            ActionSpec::Torus { weights, amplitudes } => {
                let v = VectorSpec {
                    weights: weights.clone(),
                    amplitudes: amplitudes.clone(),
                }
                .build()?;
                let table = projection_norm_table(&v, case.k as usize)?;
                let exact = table.get(case.k as usize, &case.lambda).to_f64();
                ("torus", exact, mc_weight_norm(&v, case.k, &case.lambda, c.samples, case_seed)?)
            }
            other => {
                if case.lambda.len() != 2 || case.lambda.iter().any(|&x| x < 0) || case.lambda[0] < case.lambda[1] {
                    bail!("case {i}: λ must be a partition [λ₁, λ₂]");
                }
                let lambda = [case.lambda[0] as u64, case.lambda[1] as u64];
                let (action, exact) = match other {
                    ActionSpec::U2Vector { vector } | ActionSpec::Su2Vector { vector } => {
                        let v = [vector[0].value(), vector[1].value()];
                        let norm_sq = v[0].norm_sqr() + v[1].norm_sqr();
                        let special = matches!(other, ActionSpec::Su2Vector { .. });
                        // v^⊗k lies in the symmetric power, highest weight k
                        let hit = if special {
                            lambda[0] - lambda[1] == case.k as u64
                        } else {
                            lambda == [case.k as u64, 0]
                        };
                        let exact = if hit { norm_sq.powi(case.k as i32) } else { 0.0 };
                        let action = if special { GroupAction::Su2Vector(v) } else { GroupAction::U2Vector(v) };
                        (action, exact)
                    }
                    ActionSpec::U2LeftMatrix { matrix: m } => {
                        let a = matrix(m);
                        let exact = if lambda[0] + lambda[1] == case.k as u64 {
                            left_matrix_exact(&a, case.k, &lambda, false)?
                        } else {
                            0.0
                        };
                        (GroupAction::U2LeftMatrix(a), exact)
                    }
                    ActionSpec::Su2LeftMatrix { matrix: m } => {
                        let a = matrix(m);
                        (GroupAction::Su2LeftMatrix(a), left_matrix_exact(&a, case.k, &lambda, true)?)
                    }
                    ActionSpec::Torus { .. } => unreachable!(),
                };
                let est = mc_isotypic_norm(&action, case.k, &Partition::new(lambda.to_vec())?, c.samples, case_seed)?;
                (action.name(), exact, est)
            }
        };
        let z = est.z_score(exact);
        if z <= c.tolerances.sigmas {
            within += 1;
        }
        rows.push(vec![
            i.to_string(),
            name.to_string(),
            case.k.to_string(),
            point(&case.lambda),
            num(exact),
            num(est.mean.re),
            num(est.mean.im),
            num(est.stderr),
            num(z),
            case_seed.to_string(),
        ]);
    }
    let total = c.cases.len();
    let fraction = if total == 0 { 0.0 } else { within as f64 / total as f64 };
    let mut headline = Map::new();
    headline.insert("within".into(), json!(within));
    headline.insert("cases".into(), json!(total));
    headline.insert("samples".into(), json!(c.samples));
    Ok(Outcome {
        table: Table {
            header: vec![
                "case", "action", "k", "lambda", "exact", "estimate_re", "estimate_im", "stderr", "z_score", "seed",
            ],
            rows,
        },
        headline,
        checks: vec![check(
            format!("fraction within {} standard errors", c.tolerances.sigmas),
            fraction,
            format!(">= {}", c.tolerances.min_fraction),
            total > 0 && fraction >= c.tolerances.min_fraction,
        )],
    })
}

fn capacity(c: &CapacityConfig) -> Result<Outcome> {
    let v = c.vector.build()?;
    let theta = rationals(&c.theta)?;
    let inside = moment_polytope_contains(&v, &theta)?.is_inside();
    let newton = theta_capacity(&v, &theta)?;
    let unit = v.normalized()?;
    let kl = capacity_kl_form(&unit, &theta)?;
    let ln_norm_sq = v.norm_sq().ln();
    // both routes as ln cap²(v); the KL route works on v/‖v‖
    let ln_newton = if newton.is_stable() { 2.0 * newton.ln_cap() } else { f64::NEG_INFINITY };
    let ln_kl = if kl.is_zero() { f64::NEG_INFINITY } else { kl.log_mag() + ln_norm_sq };
    let rows = vec![
        vec!["newton".to_string(), num(ln_newton), newton.iterations.to_string(), num(newton.gradient_norm)],
        vec!["kl".to_string(), num(ln_kl), String::new(), String::new()],
    ];
    let mut headline = Map::new();
    headline.insert("inside_polytope".into(), json!(inside));
    headline.insert("ln_cap".into(), json_f64(ln_newton / 2.0));
    headline.insert("moment_map".into(), json!(moment_map(&v)?));
    let t = &c.tolerances;
    let agreement = if inside { (ln_newton - ln_kl).abs() } else { 0.0 };
    let both_zero = !inside && !newton.is_stable() && kl.is_zero();
    let checks = vec![
        check(
            "route agreement",
            agreement,
            format!("<= {}", show(t.solver_agreement)),
            both_zero || (inside && agreement <= t.solver_agreement),
        ),
        check(
            "membership matches positivity",
            inside as u8 as f64,
            "cap > 0 iff inside",
            inside == newton.is_stable(),
        ),
    ];
    Ok(Outcome {
        table: Table {
            header: vec!["route", "ln_cap_sq", "iterations", "gradient_norm"],
            rows,
        },
        headline,
        checks,
    })
}

fn laurent(c: &LaurentConfig) -> Result<Outcome> {
    let mut complex_terms = Vec::new();
    let mut rational_terms = Some(Vec::new());
    for term in &c.terms {
        match term {
            Term::Real(e, x) => {
                complex_terms.push((*e, Complex64::new(x.to_f64()?, 0.0)));
                if let (Some(rt), Num::Int(_) | Num::Text(_)) = (rational_terms.as_mut(), x) {
                    rt.push((*e, x.to_rational()?));
                } else {
                    rational_terms = None;
                }
            }
            Term::Complex(e, re, im) => {
                complex_terms.push((*e, Complex64::new(*re, *im)));
                rational_terms = None;
            }
        }
    }
    let f = LaurentPoly::new(complex_terms);
    let mut rows = Vec::new();
    let mut growth_at = std::collections::BTreeMap::new();
    for k in 1..=c.k_max {
        let cst = laurent_cst_power(&f, k);
        let growth = cst.norm().powf(1.0 / k as f64);
        growth_at.insert(k, growth);
        let mut row = vec![k.to_string(), num(cst.re), num(cst.im), num(cst.norm().ln()), num(growth)];
        if let Some(rt) = &rational_terms {
            row.push(laurent_cst_power_exact(rt, k).to_string());
        }
        rows.push(row);
    }
    let mut header = vec!["k", "cst_re", "cst_im", "ln_abs_cst", "growth"];
    if rational_terms.is_some() {
        header.push("cst_exact");
    }
    let mut headline = Map::new();
    let mut checks = Vec::new();
    let t = &c.tolerances;
    if !f.is_constant() {
        let cv = critical_values(&f)?;
        headline.insert(
            "critical_values".into(),
            Value::Array(
                cv.iter()
                    .map(|p| {
                        json!({
                            "point": [p.point.re, p.point.im],
                            "value": [p.value.re, p.value.im],
                            "modulus": p.value.norm(),
                            "positive_real": p.positive_real,
                        })
                    })
                    .collect(),
            ),
        );
        if let Some(cap_sq) = t.cap_sq {
            match cv.iter().find(|p| p.positive_real) {
                Some(p) => checks.push(check(
                    "positive-real critical value vs cap²",
                    (p.value.re - cap_sq).abs(),
                    format!("<= {}", show(t.cap_sq_tolerance)),
                    (p.value.re - cap_sq).abs() <= t.cap_sq_tolerance,
                )),
                None => checks.push(check("positive-real critical value exists", 0.0, "present", false)),
            }
        }
    }
    if let Some((k, lo, hi)) = t.growth {
        let g = growth_at.get(&k).copied().unwrap_or(f64::NAN);
        checks.push(check(
            format!("|cst(f^{k})|^(1/{k})"),
            g,
            format!("in [{lo}, {hi}]"),
            (lo..=hi).contains(&g),
        ));
    }
    Ok(Outcome {
        table: Table { header, rows },
        headline,
        checks,
    })
}
