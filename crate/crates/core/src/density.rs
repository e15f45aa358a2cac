//! Race densities from the Gaussian approximation.
//!
//! For classes `C_1, ..., C_{r+1}` the race vector is
//! `t_i = t_{C_i, C_{i+1}}` and the density of
//! `{x : pi(x; t_i) < 0 for all i}` is approximated by
//! `P(Z <= -B)` with `Z ~ N(0, Delta)`. Two- and three-class races have
//! dedicated formulas; longer races go through the orthant kernel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{bvn_cdf, mvn_cdf, std_normal_cdf, MvnOptions};
use crate::group::GroupElement;
use crate::race::{CovarianceReport, RaceSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    TwoWay,
    ThreeWay,
    RWay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub report: CovarianceReport,
    /// Error bracket of the Gaussian approximation with implied constant 1.
    /// A relative indicator only; never folded into `stderr`.
    pub error_diagnostic: f64,
    pub formula: Formula,
    /// Three-way only: the exact bivariate orthant probability `P(Z <= -B)`,
    /// reported beside the linearized closed form.
    pub gaussian_value: Option<f64>,
    /// Three-way only: `1/sqrt(log d_L)`, the unquantified remainder of the
    /// linearization, kept separate from `error_diagnostic`.
    pub remainder_scale: Option<f64>,
}

fn diagnostic(report: &CovarianceReport) -> f64 {
    let r = report.dim() as i32;
    let v = report.v.iter().copied().fold(f64::INFINITY, f64::min);
    let t = report.t_hat_inf;
    let lam = report.lambda_min;
    let base = t.powi(4 * r) / v.powi(2 * r) + t / v.sqrt();
    if r == 1 {
        base
    } else {
        base * (1.0 + 1.0 / lam + 1.0 / lam.powi(r))
    }
}

fn require_classes(spec: &RaceSpec, n: usize) -> Result<()> {
    if spec.classes().len() != n {
        return Err(Error::invalid(
            "density",
            format!("expected {n} classes, got {}", spec.classes().len()),
        ));
    }
    Ok(())
}

/// `Phi(-B(t_{C1,C2}))`.
pub fn delta_two_way(spec: &RaceSpec) -> Result<DensityEstimate> {
    require_classes(spec, 2)?;
    let report = spec.covariance_report()?;
    Ok(DensityEstimate {
        value: std_normal_cdf(-report.b[0]),
        stderr: 0.0,
        error_diagnostic: diagnostic(&report),
        report,
        formula: Formula::TwoWay,
        gaussian_value: None,
        remainder_scale: None,
    })
}

/// `1/4 + arcsin(rho)/(2 pi) - (B_1 + B_2)/(2 sqrt(2 pi))`.
pub fn delta_three_way(spec: &RaceSpec) -> Result<DensityEstimate> {
    require_classes(spec, 3)?;
    let report = spec.covariance_report()?;
    let rho = report.delta[0][1];
    let (b1, b2) = (report.b[0], report.b[1]);
    let value = 0.25 + rho.asin() / (2.0 * PI) - (b1 + b2) / (2.0 * (2.0 * PI).sqrt());
    let exact = bvn_cdf(-b1, -b2, rho)?;
    Ok(DensityEstimate {
        value,
        stderr: 0.0,
        error_diagnostic: diagnostic(&report),
        report,
        formula: Formula::ThreeWay,
        gaussian_value: Some(exact),
        remainder_scale: Some(1.0 / spec.field().log_discriminant().sqrt()),
    })
}

/// `P(Z <= -B)` with `Z ~ N(0, Delta)`; two classes route to
/// [`delta_two_way`].
pub fn delta_r_way(spec: &RaceSpec, opts: &MvnOptions) -> Result<DensityEstimate> {
    if spec.classes().len() == 2 {
        return delta_two_way(spec);
    }
    let report = spec.covariance_report()?;
    let x: Vec<f64> = report.b.iter().map(|b| -b).collect();
    let est = mvn_cdf(&x, &report.matrix(), opts)?;
    Ok(DensityEstimate {
        value: est.value,
        stderr: est.stderr,
        error_diagnostic: diagnostic(&report),
        report,
        formula: Formula::RWay,
        gaussian_value: None,
        remainder_scale: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResidual {
    pub residual: f64,
    pub combined_stderr: f64,
    /// `delta^{(r)}` of the original classes.
    pub base: f64,
    /// `delta^{(r+1)}` for each insertion position of the extra class.
    pub insertions: Vec<f64>,
}

/// `delta(C_1..C_r) - sum_{positions} delta(C_1..C..C_r)`; zero up to sampling
/// error because the inserted class lands in exactly one position.
pub fn decomposition_check(
    spec: &RaceSpec,
    extra: &GroupElement,
    opts: &MvnOptions,
) -> Result<DecompositionResidual> {
    let classes = spec.classes();
    if classes.contains(extra) {
        return Err(Error::invalid("density", format!("class {extra} is already in the race")));
    }
    spec.field().group().check_element(extra)?;
    let base = delta_r_way(spec, opts)?;
    let mut var = base.stderr * base.stderr;
    let mut insertions = Vec::with_capacity(classes.len() + 1);
    for pos in 0..=classes.len() {
        let mut c = classes.to_vec();
        c.insert(pos, extra.clone());
        let est = delta_r_way(&spec.with_classes(c)?, opts)?;
        var += est.stderr * est.stderr;
        insertions.push(est.value);
    }
    Ok(DecompositionResidual {
        residual: base.value - insertions.iter().sum::<f64>(),
        combined_stderr: var.sqrt(),
        base: base.value,
        insertions,
    })
}

/// Sum of `delta^{(r)}` over every ordering of the race's classes, with the
/// combined standard error. Equals 1 because ties have density zero.
pub fn permutation_sum(spec: &RaceSpec, opts: &MvnOptions) -> Result<(f64, f64)> {
    let classes = spec.classes().to_vec();
    if classes.len() > 6 {
        return Err(Error::invalid("density", "permutation sums are limited to 6 classes"));
    }
    let mut total = 0.0;
    let mut var = 0.0;
    for perm in permutations(classes.len()) {
        let c = perm.iter().map(|&i| classes[i].clone()).collect();
        let est = delta_r_way(&spec.with_classes(c)?, opts)?;
        total += est.value;
        var += est.stderr * est.stderr;
    }
    Ok((total, var.sqrt()))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldModel;

    fn e(v: &[u32]) -> GroupElement {
        GroupElement(v.to_vec())
    }

    fn spec(classes: &[&[u32]]) -> RaceSpec {
        let f = FieldModel::multiquadratic_u64(&[5, 13]).unwrap();
        RaceSpec::asymptotic(f, classes.iter().map(|c| e(c)).collect()).unwrap()
    }

    #[test]
    fn two_way_chebyshev_direction() {
        let s = spec(&[&[0, 0], &[1, 0]]);
        let d = delta_two_way(&s).unwrap();
        let v = d.report.v[0];
        assert!((d.value - std_normal_cdf(4.0 / v.sqrt())).abs() < 1e-15);
        assert!(d.value > 0.5);
        let swapped = delta_two_way(&spec(&[&[1, 0], &[0, 0]])).unwrap();
        assert!((d.value + swapped.value - 1.0).abs() < 1e-15);
        let nonsquares = delta_two_way(&spec(&[&[1, 0], &[0, 1]])).unwrap();
        assert!((nonsquares.value - 0.5).abs() < 1e-15);
        assert!(delta_two_way(&spec(&[&[0, 0], &[1, 0], &[0, 1]])).is_err());
    }

    #[test]
    fn three_way_consistency() {
        let s = spec(&[&[0, 0], &[1, 0], &[0, 1]]);
        let d = delta_three_way(&s).unwrap();
        assert!(d.report.lambda_min >= 0.25 - 1e-12);
        let lo = 0.25 - (0.75f64).asin() / (2.0 * PI);
        assert!(d.gaussian_value.unwrap() > 0.0 && d.value > lo - 0.5);
        let r = delta_r_way(&s, &MvnOptions::with_seed(1)).unwrap();
        assert!((r.value - d.gaussian_value.unwrap()).abs() < 1e-14);
        // nonsquare-only races have B = 0, where the linearization is exact
        let z = delta_three_way(&spec(&[&[1, 0], &[0, 1], &[1, 1]])).unwrap();
        assert!((z.value - z.gaussian_value.unwrap()).abs() < 1e-14);
    }

    #[test]
    fn decomposition_and_permutations() {
        let opts = MvnOptions::with_seed(3);
        let s = spec(&[&[0, 0], &[1, 1]]);
        let res = decomposition_check(&s, &e(&[1, 0]), &opts).unwrap();
        assert!(res.residual.abs() <= 3.0 * res.combined_stderr + 1e-12);
        assert_eq!(res.insertions.len(), 3);
        assert!(decomposition_check(&s, &e(&[0, 0]), &opts).is_err());
        let s3 = spec(&[&[0, 0], &[1, 1], &[0, 1]]);
        let res = decomposition_check(&s3, &e(&[1, 0]), &opts).unwrap();
        assert!(res.residual.abs() <= 3.0 * res.combined_stderr + 1e-12);
        let (sum, se) = permutation_sum(&s3, &opts).unwrap();
        assert!((sum - 1.0).abs() <= 3.0 * se + 1e-12);
        let s4 = spec(&[&[0, 0], &[1, 1], &[0, 1], &[1, 0]]);
        let (sum, se) = permutation_sum(&s4, &opts).unwrap();
        assert!((sum - 1.0).abs() <= 3.0 * se + 1e-12, "{sum} {se}");
    }

    #[test]
    fn central_order_response() {
        let mut s = spec(&[&[1, 0], &[0, 0]]);
        let before = delta_two_way(&s).unwrap().value;
        // chi = "10" has <t_{sigma_1, 1}, chi> = -2, so a central zero raises E
        s.set_central_order("10", 1).unwrap();
        let after = delta_two_way(&s).unwrap().value;
        assert!(after < before);
    }
}
