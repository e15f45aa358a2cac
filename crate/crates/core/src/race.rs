//! Statistics of a prime race: means, variances, biases, the `U`/`S`/`T`
//! maps, correlations and the covariance matrix of the race vector.
//!
//! For a class function `t` with `<t, 1> = 0` and Fourier coefficients
//! `t^(chi) = <t, chi>`:
//!
//! * `E(t) = -<t, r_G> - sum_{chi != 1} t^(chi) ord(chi)`
//! * `V(t) = sum_{chi != 1} |t^(chi)|^2 Z(chi)`
//! * `rho(t1, t2) = sum_{chi != 1} Re(t1^(chi) conj t2^(chi)) Z(chi) / sqrt(V(t1) V(t2))`
//!
//! where `Z(chi)` is the two-sided zero sum of [`crate::zeros`]. With
//! `U(a) = N_L^{-1} sum_{chi != 1} Re chi(a) Z(chi)` one has
//! `V(t_{a,b}) = N_L (2 - 2 U(a b^-1))`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldModel;
use crate::group::{ClassFunction, GroupElement};
use crate::zeros::{ZeroArchive, ZeroSumMode, ZeroSums};

/// Imaginary parts of real quantities above this are reported as errors.
pub const IMAG_TOL: f64 = 1e-9;
/// Smallest eigenvalue accepted for a covariance matrix.
pub const DEGENERACY: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct RaceSpec {
    field: FieldModel,
    classes: Vec<GroupElement>,
    mode: ZeroSumMode,
    sums: ZeroSums,
    /// `table[chi][g]`, both in canonical order.
    table: Vec<Vec<Complex64>>,
    central_orders: BTreeMap<String, u32>,
    root_counts: Vec<u64>,
}

impl RaceSpec {
    pub fn new(
        field: FieldModel,
        classes: Vec<GroupElement>,
        mode: ZeroSumMode,
        archive: Option<&ZeroArchive>,
    ) -> Result<RaceSpec> {
        if classes.len() < 2 {
            return Err(Error::invalid("race", "a race needs at least two classes"));
        }
        for (i, c) in classes.iter().enumerate() {
            field.group().check_element(c)?;
            if classes[..i].contains(c) {
                return Err(Error::invalid("race", format!("class {c} appears twice")));
            }
        }
        let sums = ZeroSums::new(&field, archive, mode)?;
        let table = field.group().character_table();
        let root_counts = field.group().square_root_counts();
        Ok(RaceSpec {
            field,
            classes,
            mode,
            sums,
            table,
            central_orders: BTreeMap::new(),
            root_counts,
        })
    }

    pub fn asymptotic(field: FieldModel, classes: Vec<GroupElement>) -> Result<RaceSpec> {
        Self::new(field, classes, ZeroSumMode::Asymptotic, None)
    }

    /// Same field and zero sums, different classes.
    pub fn with_classes(&self, classes: Vec<GroupElement>) -> Result<RaceSpec> {
        if classes.len() < 2 {
            return Err(Error::invalid("race", "a race needs at least two classes"));
        }
        for (i, c) in classes.iter().enumerate() {
            self.field.group().check_element(c)?;
            if classes[..i].contains(c) {
                return Err(Error::invalid("race", format!("class {c} appears twice")));
            }
        }
        Ok(RaceSpec {
            classes,
            ..self.clone()
        })
    }

    /// Set `ord_{s=1/2} L(s, chi)` for a nontrivial character.
    pub fn set_central_order(&mut self, label: &str, order: u32) -> Result<()> {
        let chi = self.field.parse_character_label(label)?;
        if chi.is_trivial() {
            return Err(Error::invalid("race", "central orders are defined on nontrivial characters only"));
        }
        let key = self.field.character_label(&chi)?;
        if order == 0 {
            self.central_orders.remove(&key);
        } else {
            self.central_orders.insert(key, order);
        }
        Ok(())
    }

    pub fn field(&self) -> &FieldModel {
        &self.field
    }

    pub fn classes(&self) -> &[GroupElement] {
        &self.classes
    }

    pub fn mode(&self) -> ZeroSumMode {
        self.mode
    }

    pub fn n_l(&self) -> f64 {
        self.sums.n_l()
    }

    pub fn zero_sums(&self) -> &ZeroSums {
        &self.sums
    }

    fn gidx(&self, g: &GroupElement) -> usize {
        self.field.group().index_of(&g.0)
    }

    /// `<t, chi>` for every character, in canonical order.
    pub fn coefficients(&self, t: &ClassFunction) -> Result<Vec<Complex64>> {
        let n = self.field.group().order();
        if t.values.len() != n {
            return Err(Error::invalid("race", "class function has the wrong length"));
        }
        Ok(self
            .table
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&t.values)
                    .map(|(c, v)| v * c.conj())
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect())
    }

    fn mean_zero_coefficients(&self, t: &ClassFunction) -> Result<Vec<Complex64>> {
        let coeffs = self.coefficients(t)?;
        let scale = 1.0 + t.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if coeffs[0].norm() > IMAG_TOL * scale {
            return Err(Error::invalid("race", format!("<t, 1> = {} is not zero", coeffs[0])));
        }
        Ok(coeffs)
    }

    /// `t_{a,b} = |G| 1_a - |G| 1_b`.
    pub fn pair_function(&self, a: &GroupElement, b: &GroupElement) -> Result<ClassFunction> {
        self.field.group().race_class_function(a, b)
    }

    /// `t_i = t_{C_i, C_{i+1}}` for `i = 1..r`.
    pub fn race_functions(&self) -> Vec<ClassFunction> {
        self.classes
            .windows(2)
            .map(|w| self.pair_function(&w[0], &w[1]).expect("classes validated"))
            .collect()
    }

    pub fn mean_e(&self, t: &ClassFunction) -> Result<f64> {
        let coeffs = self.mean_zero_coefficients(t)?;
        let n = self.field.group().order() as f64;
        let mut e: Complex64 = -t
            .values
            .iter()
            .zip(&self.root_counts)
            .map(|(v, &r)| v * r as f64)
            .sum::<Complex64>()
            / n;
        for (label, &ord) in &self.central_orders {
            let chi = self.field.parse_character_label(label)?;
            e -= coeffs[self.field.group().index_of(&chi.0)] * ord as f64;
        }
        real_part(e, "mean")
    }

    pub fn variance_v(&self, t: &ClassFunction) -> Result<f64> {
        let coeffs = self.mean_zero_coefficients(t)?;
        Ok(self.variance_from(&coeffs))
    }

    fn variance_from(&self, coeffs: &[Complex64]) -> f64 {
        coeffs
            .iter()
            .zip(self.sums.values())
            .skip(1)
            .map(|(c, z)| c.norm_sqr() * z)
            .sum()
    }

    pub fn bias_b(&self, t: &ClassFunction) -> Result<f64> {
        let v = self.variance_v(t)?;
        if !(v > 0.0) {
            return Err(Error::numerical("race", "zero variance; the bias is undefined"));
        }
        Ok(self.mean_e(t)? / v.sqrt())
    }

    /// `U(a)`; `U(1) = 1` by convention so the pair formulas cover `a = b`.
    pub fn u(&self, a: &GroupElement) -> Result<f64> {
        self.field.group().check_element(a)?;
        if a.is_identity() {
            return Ok(1.0);
        }
        let n_l = self.n_l();
        if !(n_l > 0.0) {
            return Err(Error::numerical("race", "N_L vanishes; U is undefined"));
        }
        match self.mode {
            ZeroSumMode::Asymptotic => Ok(self.field.signed_conductor_sum(a)? / n_l),
            ZeroSumMode::ZeroData { .. } => {
                let gi = self.gidx(a);
                let s: f64 = self
                    .table
                    .iter()
                    .zip(self.sums.values())
                    .skip(1)
                    .map(|(row, z)| row[gi].re * z)
                    .sum();
                Ok(s / n_l)
            }
        }
    }

    /// `U` on every nonidentity element, in canonical order.
    pub fn u_map(&self) -> Result<Vec<(GroupElement, f64)>> {
        self.field
            .group()
            .elements()
            .skip(1)
            .map(|a| Ok((a.clone(), self.u(&a)?)))
            .collect()
    }

    /// `S(a, b) = U(a) - U(b)` for nonidentity `a, b`.
    pub fn s(&self, a: &GroupElement, b: &GroupElement) -> Result<f64> {
        if a.is_identity() || b.is_identity() {
            return Err(Error::invalid("race", "S is defined on nonidentity elements"));
        }
        Ok(self.u(a)? - self.u(b)?)
    }

    /// `T(a, b) = 2 - 2 U(a b^-1) = V(t_{a,b}) / N_L`.
    pub fn t(&self, a: &GroupElement, b: &GroupElement) -> Result<f64> {
        let g = self.field.group();
        g.check_element(a)?;
        g.check_element(b)?;
        Ok(2.0 - 2.0 * self.u(&g.div(a, b))?)
    }

    /// All `S` and `T` values over ordered pairs.
    #[allow(clippy::type_complexity)]
    pub fn s_and_t_maps(
        &self,
    ) -> Result<(
        Vec<((GroupElement, GroupElement), f64)>,
        Vec<((GroupElement, GroupElement), f64)>,
    )> {
        let elems: Vec<GroupElement> = self.field.group().elements().collect();
        let mut s = Vec::new();
        let mut t = Vec::new();
        for a in &elems {
            for b in &elems {
                if !a.is_identity() && !b.is_identity() {
                    s.push(((a.clone(), b.clone()), self.s(a, b)?));
                }
                t.push(((a.clone(), b.clone()), self.t(a, b)?));
            }
        }
        Ok((s, t))
    }

    pub fn correlation_rho(&self, t1: &ClassFunction, t2: &ClassFunction) -> Result<f64> {
        let c1 = self.mean_zero_coefficients(t1)?;
        let c2 = self.mean_zero_coefficients(t2)?;
        self.rho_from(&c1, &c2)
    }

    fn rho_from(&self, c1: &[Complex64], c2: &[Complex64]) -> Result<f64> {
        let v1 = self.variance_from(c1);
        let v2 = self.variance_from(c2);
        if !(v1 > 0.0 && v2 > 0.0) {
            return Err(Error::numerical("race", "zero variance; the correlation is undefined"));
        }
        let num: f64 = c1
            .iter()
            .zip(c2)
            .zip(self.sums.values())
            .skip(1)
            .map(|((x, y), z)| (x * y.conj()).re * z)
            .sum();
        Ok((num / (v1 * v2).sqrt()).clamp(-1.0, 1.0))
    }

    /// Closed form for adjacent pairs `rho(t_{a,b}, t_{b,c})`.
    pub fn rho_adjacent(&self, a: &GroupElement, b: &GroupElement, c: &GroupElement) -> Result<f64> {
        let g = self.field.group();
        let uab = self.u(&g.div(a, b))?;
        let ubc = self.u(&g.div(b, c))?;
        let uac = self.u(&g.div(a, c))?;
        Ok((-1.0 + uab + ubc - uac) / ((2.0 - 2.0 * uab) * (2.0 - 2.0 * ubc)).sqrt())
    }

    /// Closed form for `rho(t_{a,b}, t_{c,d})` with general (possibly
    /// overlapping) classes, `a != b`, `c != d`.
    pub fn rho_pairs(
        &self,
        a: &GroupElement,
        b: &GroupElement,
        c: &GroupElement,
        d: &GroupElement,
    ) -> Result<f64> {
        let g = self.field.group();
        let u = |x: &GroupElement, y: &GroupElement| self.u(&g.div(x, y));
        let num = u(a, c)? + u(b, d)? - u(b, c)? - u(a, d)?;
        let den = ((2.0 - 2.0 * u(a, b)?) * (2.0 - 2.0 * u(c, d)?)).sqrt();
        Ok(num / den)
    }

    pub fn covariance_report(&self) -> Result<CovarianceReport> {
        let ts = self.race_functions();
        let coeffs: Vec<Vec<Complex64>> = ts
            .iter()
            .map(|t| self.mean_zero_coefficients(t))
            .collect::<Result<_>>()?;
        let r = ts.len();
        let mut delta = vec![vec![0.0; r]; r];
        for i in 0..r {
            delta[i][i] = 1.0;
            for j in 0..i {
                let v = self.rho_from(&coeffs[i], &coeffs[j])?;
                delta[i][j] = v;
                delta[j][i] = v;
            }
        }
        let v: Vec<f64> = coeffs.iter().map(|c| self.variance_from(c)).collect();
        let b = ts
            .iter()
            .zip(&v)
            .map(|(t, &vi)| Ok(self.mean_e(t)? / vi.sqrt()))
            .collect::<Result<Vec<f64>>>()?;
        let t_hat_inf = coeffs
            .iter()
            .flat_map(|c| c.iter().map(|x| x.norm()))
            .fold(0.0, f64::max);
        let lambda_min = min_eigenvalue(&to_matrix(&delta));
        if !(lambda_min > DEGENERACY) {
            return Err(Error::numerical(
                "race",
                format!("covariance matrix is numerically degenerate (lambda_min = {lambda_min:e})"),
            ));
        }
        Ok(CovarianceReport {
            delta,
            lambda_min,
            b,
            v,
            t_hat_inf,
        })
    }
}

fn real_part(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * (1.0 + z.re.abs()) {
        return Err(Error::numerical("race", format!("{what} has imaginary part {}", z.im)));
    }
    Ok(z.re)
}

/// Correlation matrix of the race vector with its summary statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub delta: Vec<Vec<f64>>,
    pub lambda_min: f64,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    pub t_hat_inf: f64,
}

impl CovarianceReport {
    pub fn matrix(&self) -> DMatrix<f64> {
        to_matrix(&self.delta)
    }

    pub fn dim(&self) -> usize {
        self.delta.len()
    }
}

pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `Gamma_r`: unit diagonal, `-1/2` on the first off-diagonals.
pub fn gamma_matrix(r: usize) -> DMatrix<f64> {
    sigma_matrix(r, -0.5)
}

/// `Sigma_r(rho)`: `Gamma_r` with the (1,2) and (2,1) entries set to `rho`.
pub fn sigma_matrix(r: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, r, |i, j| {
        if i == j {
            1.0
        } else if (i == 0 && j == 1) || (i == 1 && j == 0) {
            rho
        } else if i.abs_diff(j) == 1 {
            -0.5
        } else {
            0.0
        }
    })
}

/// `det Sigma_r(rho) = (r - 2(r-1) rho^2) / 2^{r-1}` (valid for `r >= 2`;
/// `1` for `r = 1`).
pub fn det_sigma_closed(r: usize, rho: f64) -> f64 {
    if r == 1 {
        return 1.0;
    }
    (r as f64 - 2.0 * (r as f64 - 1.0) * rho * rho) / 2f64.powi(r as i32 - 1)
}

/// `(Gamma_r, Sigma_r(rho), det Sigma_r(rho))`.
pub fn structured_matrices(r: usize, rho: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    if r == 0 {
        return Err(Error::invalid("race", "matrix dimension must be at least 1"));
    }
    Ok((gamma_matrix(r), sigma_matrix(r, rho), det_sigma_closed(r, rho)))
}
