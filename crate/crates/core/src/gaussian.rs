//! Gaussian orthant probabilities.
//!
//! Dimensions 1 and 2 use closed forms (`Phi` and Genz's bivariate
//! algorithm). Higher dimensions use the separation-of-variables transform
//! of Genz: with `Sigma = L L^T`,
//!
//! ```text
//! e_1 = Phi(b_1 / L_11)
//! y_{i-1} = Phi^{-1}(w_{i-1} e_{i-1})
//! e_i = Phi((b_i - sum_{j<i} L_ij y_j) / L_ii)
//! P(Z <= b) = E_w[e_1 e_2 ... e_r]
//! ```
//!
//! integrated over `w in [0,1]^{r-1}` with a Richtmyer (Kronecker) lattice,
//! periodized by the tent map and randomized by independent uniform shifts.
//! The standard error is the spread of the per-shift means.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::race::sigma_matrix;

pub const DEFAULT_POINTS: usize = 1 << 17;
pub const DEFAULT_SHIFTS: usize = 16;
pub const MIN_SAMPLES: usize = 10_000;

/// `Phi(x)` from `erfc`, accurate in both tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `Phi^{-1}(p)` for `0 < p < 1`.
pub fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// `P(X <= 0, Y <= 0)` for a standard bivariate normal with correlation `rho`.
pub fn bvn_orthant_zero(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid("gaussian", "|rho| must be below 1"));
    }
    Ok(0.25 + rho.asin() / (2.0 * PI))
}

const GL_W: [&[f64]; 3] = [
    &[0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4],
    &[
        0.047_175_336_386_511_77,
        0.106_939_325_995_318_3,
        0.160_078_328_543_346_4,
        0.203_167_426_723_065_9,
        0.233_492_536_538_354_7,
        0.249_147_045_813_402_9,
    ],
    &[
        0.017_614_007_139_152_12,
        0.040_601_429_800_386_94,
        0.062_672_048_334_109_06,
        0.083_276_741_576_704_75,
        0.101_930_119_817_240_4,
        0.118_194_531_961_518_4,
        0.131_688_638_449_176_6,
        0.142_096_109_318_382_1,
        0.149_172_986_472_603_7,
        0.152_753_387_130_725_9,
    ],
];
const GL_X: [&[f64]; 3] = [
    &[-0.932_469_514_203_152_2, -0.661_209_386_466_264_7, -0.238_619_186_083_197_0],
    &[
        -0.981_560_634_246_719_1,
        -0.904_117_256_370_475_0,
        -0.769_902_674_194_305_0,
        -0.587_317_954_286_617_1,
        -0.367_831_498_998_180_2,
        -0.125_233_408_511_469_2,
    ],
    &[
        -0.993_128_599_185_094_9,
        -0.963_971_927_277_913_8,
        -0.912_234_428_251_325_9,
        -0.839_116_971_822_218_8,
        -0.746_331_906_460_150_8,
        -0.636_053_680_726_515_0,
        -0.510_867_001_950_827_1,
        -0.373_706_088_715_419_6,
        -0.227_785_851_141_645_1,
        -0.076_526_521_133_497_33,
    ],
];

/// Upper orthant `P(X > h, Y > k)` for a standard bivariate normal with
/// correlation `r` (Genz's algorithm, about 1e-15 absolute accuracy).
fn bvnu(h: f64, k: f64, r: f64) -> f64 {
    let ng = if r.abs() < 0.3 {
        0
    } else if r.abs() < 0.75 {
        1
    } else {
        2
    };
    let (w, x) = (GL_W[ng], GL_X[ng]);
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for (wi, xi) in w.iter().zip(x) {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (1.0 + sign * xi) / 2.0).sin();
                bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (4.0 * PI) + std_normal_cdf(-h) * std_normal_cdf(-k);
    }
    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / as_ + hk) / 2.0).exp()
            * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp()
                * (2.0 * PI).sqrt()
                * std_normal_cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (wi, xi) in w.iter().zip(x) {
            for sign in [-1.0, 1.0] {
                let xs = (a * (sign * xi + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                bvn += a
                    * wi
                    * ((-bs / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                        - (-(bs / xs + hk) / 2.0).exp() * (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / (2.0 * PI);
    }
    if r > 0.0 {
        bvn + std_normal_cdf(-h.max(k))
    } else {
        let mut v = -bvn;
        if k > h {
            v += std_normal_cdf(k) - std_normal_cdf(h);
        }
        v
    }
}

/// `P(X <= x, Y <= y)` for a standard bivariate normal with correlation `r`.
pub fn bvn_cdf(x: f64, y: f64, r: f64) -> Result<f64> {
    if !(r.abs() <= 1.0) || x.is_nan() || y.is_nan() {
        return Err(Error::invalid("gaussian", "bivariate CDF needs |r| <= 1 and finite limits"));
    }
    Ok(bvnu(-x, -y, r).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Mc,
}

/// Point set for the Monte-Carlo path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PointSet {
    /// Randomly shifted Richtmyer lattice (quasi-Monte Carlo).
    #[default]
    Lattice,
    /// Independent pseudo-random points (plain Monte Carlo).
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthantEstimate {
    pub value: f64,
    pub stderr: f64,
    pub sample_count: usize,
    pub method: Method,
}

impl OrthantEstimate {
    fn closed(value: f64) -> Self {
        OrthantEstimate {
            value,
            stderr: 0.0,
            sample_count: 0,
            method: Method::ClosedForm,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MvnOptions {
    /// Points per shift.
    pub points: usize,
    pub shifts: usize,
    pub seed: u64,
    /// Use the Monte-Carlo path even where a closed form exists.
    pub force_mc: bool,
    pub point_set: PointSet,
    pub exec: Exec,
}

impl Default for MvnOptions {
    fn default() -> Self {
        MvnOptions {
            points: DEFAULT_POINTS,
            shifts: DEFAULT_SHIFTS,
            seed: 0,
            force_mc: false,
            point_set: PointSet::Lattice,
            exec: Exec::default(),
        }
    }
}

impl MvnOptions {
    pub fn with_seed(seed: u64) -> Self {
        MvnOptions {
            seed,
            ..Self::default()
        }
    }
}

fn validate(x: &[f64], sigma: &DMatrix<f64>) -> Result<()> {
    let r = x.len();
    if r == 0 {
        return Err(Error::invalid("gaussian", "dimension must be at least 1"));
    }
    if sigma.nrows() != r || sigma.ncols() != r {
        return Err(Error::invalid(
            "gaussian",
            format!("covariance is {}x{}, expected {r}x{r}", sigma.nrows(), sigma.ncols()),
        ));
    }
    if x.iter().any(|v| v.is_nan()) || sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("gaussian", "NaN or infinite input"));
    }
    let scale = sigma.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..r {
        for j in 0..i {
            if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::invalid("gaussian", "covariance is not symmetric"));
            }
        }
    }
    Ok(())
}

/// `P(Z <= x)` componentwise for `Z ~ N(0, sigma)`.
pub fn mvn_cdf(x: &[f64], sigma: &DMatrix<f64>, opts: &MvnOptions) -> Result<OrthantEstimate> {
    validate(x, sigma)?;
    let r = x.len();
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("gaussian", "covariance is not positive-definite"))?;
    if !opts.force_mc && r <= 2 {
        let sd: Vec<f64> = (0..r).map(|i| sigma[(i, i)].sqrt()).collect();
        let value = if r == 1 {
            std_normal_cdf(x[0] / sd[0])
        } else {
            bvn_cdf(x[0] / sd[0], x[1] / sd[1], sigma[(0, 1)] / (sd[0] * sd[1]))?
        };
        return Ok(OrthantEstimate::closed(value));
    }
    if opts.points * opts.shifts < MIN_SAMPLES || opts.shifts < 2 {
        return Err(Error::invalid(
            "gaussian",
            format!("need at least {MIN_SAMPLES} samples over at least 2 shifts"),
        ));
    }
    let l = chol.l();
    let dim = r - 1;
    let gen: Vec<f64> = richtmyer_generator(dim);
    let means = opts.exec.map(opts.shifts, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(s as u64 + 1);
        let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let mut w = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        let mut acc = 0.0;
        for k in 0..opts.points {
            for j in 0..dim {
                w[j] = match opts.point_set {
                    PointSet::Lattice => {
                        let u = ((k as f64 + 1.0) * gen[j] + shift[j]).fract();
                        (2.0 * u - 1.0).abs()
                    }
                    PointSet::Random => rng.gen::<f64>(),
                };
            }
            acc += sov_integrand(&l, x, &w, &mut y);
        }
        acc / opts.points as f64
    });
    let m = means.len() as f64;
    let value = means.iter().sum::<f64>() / m;
    let var = means.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(OrthantEstimate {
        value: value.clamp(0.0, 1.0),
        stderr: (var / m).sqrt(),
        sample_count: opts.points * opts.shifts,
        method: Method::Mc,
    })
}

/// Fractional parts of square roots of the first primes.
fn richtmyer_generator(dim: usize) -> Vec<f64> {
    let mut primes = Vec::with_capacity(dim);
    let mut n = 2u64;
    while primes.len() < dim {
        if crate::primes::is_prime_u64(n) {
            primes.push((n as f64).sqrt().fract());
        }
        n += 1;
    }
    primes
}

fn sov_integrand(l: &DMatrix<f64>, b: &[f64], w: &[f64], y: &mut [f64]) -> f64 {
    let r = b.len();
    let mut e = std_normal_cdf(b[0] / l[(0, 0)]);
    let mut f = e;
    for i in 1..r {
        let p = (w[i - 1] * e).clamp(1e-300, 1.0 - 1e-16);
        y[i - 1] = std_normal_quantile(p);
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * y[j];
        }
        e = std_normal_cdf(s / l[(i, i)]);
        f *= e;
        if f == 0.0 {
            break;
        }
    }
    f
}

/// `W_r(rho) = P(Z <= 0)` for `Z ~ N(0, Sigma_r(rho))`.
pub fn w_r(r: usize, rho: f64, opts: &MvnOptions) -> Result<OrthantEstimate> {
    if r < 2 {
        return Err(Error::invalid("gaussian", "W_r needs r >= 2"));
    }
    if rho.abs() > FRAC_1_SQRT_2 + 1e-12 {
        return Err(Error::invalid("gaussian", "|rho| must not exceed 1/sqrt(2)"));
    }
    mvn_cdf(&vec![0.0; r], &sigma_matrix(r, rho), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::race::gamma_matrix;

    const BV_REF: [(f64, f64, f64, f64); 6] = [
        (0.3, -0.5, 0.4, 0.243_575_889_201_104_65),
        (1.0, 0.7, -0.8, 0.599_668_355_417_964_3),
        (-1.2, 0.4, 0.95, 0.115_069_665_662_272_03),
        (0.5, 0.5, -0.95, 0.382_952_084_204_398_36),
        (-0.3, 2.0, 0.2, 0.377_194_129_400_461_6),
        (0.1, -0.1, 0.99, 0.458_163_727_636_199_1),
    ];

    #[test]
    fn phi_basics() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        for x in [-5.0, -1.3, 0.2, 2.7] {
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-15);
            assert!((std_normal_quantile(std_normal_cdf(x)) - x).abs() < 1e-9);
        }
        assert!((std_normal_cdf(1.959964) - 0.975).abs() < 1e-6);
    }

    #[test]
    fn bivariate_orthant() {
        assert_eq!(bvn_orthant_zero(0.0).unwrap(), 0.25);
        assert!((bvn_orthant_zero(-0.5).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((bvn_orthant_zero(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(bvn_orthant_zero(1.0).is_err());
        for k in -9..=9 {
            let rho = k as f64 / 10.0;
            let a = bvn_cdf(0.0, 0.0, rho).unwrap();
            assert!((a - bvn_orthant_zero(rho).unwrap()).abs() < 1e-14, "rho = {rho}");
        }
    }

    #[test]
    fn bivariate_reference_values() {
        for (x, y, r, v) in BV_REF {
            let got = bvn_cdf(x, y, r).unwrap();
            assert!((got - v).abs() < 1e-12, "{x} {y} {r}: {got}");
            assert!((bvn_cdf(y, x, r).unwrap() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn trivariate_reference() {
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.0, -0.4, 0.1, -0.4, 1.0]);
        let est = mvn_cdf(&[0.2, -0.3, 0.5], &s, &MvnOptions::with_seed(3)).unwrap();
        assert!((est.value - 0.155_621_768_626_858_14).abs() < 3.0 * est.stderr + 1e-6);
        assert!(est.stderr < 1e-4);
    }

    #[test]
    fn forced_mc_matches_closed_form() {
        let opts = MvnOptions {
            force_mc: true,
            points: 1 << 14,
            ..MvnOptions::with_seed(11)
        };
        for (x, y, r, v) in BV_REF {
            let s = DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]);
            let est = mvn_cdf(&[x, y], &s, &opts).unwrap();
            assert_eq!(est.method, Method::Mc);
            assert!((est.value - v).abs() <= 3.0 * est.stderr + 1e-5);
        }
    }

    #[test]
    fn orthant_of_gamma_r() {
        let mut fact = 1.0;
        for r in 1..=5usize {
            fact *= (r + 1) as f64;
            let est = mvn_cdf(&vec![0.0; r], &gamma_matrix(r), &MvnOptions::with_seed(1)).unwrap();
            assert!((est.value - 1.0 / fact).abs() <= 3.0 * est.stderr + 1e-12, "r = {r}");
            assert!(est.stderr <= 5e-4);
        }
    }

    #[test]
    fn identity_gives_powers_of_two() {
        for r in 3..=6 {
            let est = mvn_cdf(&vec![0.0; r], &DMatrix::identity(r, r), &MvnOptions::with_seed(2)).unwrap();
            assert!((est.value - 0.5f64.powi(r as i32)).abs() <= 3.0 * est.stderr + 1e-12);
        }
    }

    #[test]
    fn seeded_determinism_and_policy_agreement() {
        let s = gamma_matrix(4);
        let mut o = MvnOptions::with_seed(5);
        o.points = 1 << 12;
        let a = mvn_cdf(&[0.0; 4], &s, &o).unwrap();
        let b = mvn_cdf(&[0.0; 4], &s, &o).unwrap();
        assert_eq!(a, b);
        o.exec = Exec::Sequential;
        assert_eq!(mvn_cdf(&[0.0; 4], &s, &o).unwrap(), a);
    }

    #[test]
    fn w_r_special_values() {
        let o = MvnOptions::with_seed(9);
        let w3 = w_r(3, 0.0, &o).unwrap();
        assert!((w3.value - 1.0 / 12.0).abs() <= 3.0 * w3.stderr + 1e-12);
        let lo = w_r(3, -0.7, &o).unwrap();
        let hi = w_r(3, -0.5, &o).unwrap();
        assert!(hi.value - lo.value > 3.0 * (lo.stderr.hypot(hi.stderr)));
        assert!(w_r(3, 0.8, &o).is_err());
        assert!(w_r(1, 0.0, &o).is_err());
    }

    #[test]
    fn plain_mc_stderr_rate() {
        let s = gamma_matrix(3);
        let base = MvnOptions {
            point_set: PointSet::Random,
            points: 1 << 11,
            ..MvnOptions::with_seed(4)
        };
        let small = mvn_cdf(&[0.0; 3], &s, &base).unwrap();
        let big = mvn_cdf(&[0.0; 3], &s, &MvnOptions { points: 1 << 15, ..base }).unwrap();
        let ratio = small.stderr / big.stderr;
        assert!((2.0..=8.0).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn rejects_bad_input() {
        let o = MvnOptions::default();
        assert!(mvn_cdf(&[0.0, f64::NAN], &DMatrix::identity(2, 2), &o).is_err());
        assert!(mvn_cdf(&[0.0, 0.0, 0.0], &DMatrix::identity(2, 2), &o).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(mvn_cdf(&[0.0, 0.0], &bad, &o).is_err());
        let small = MvnOptions {
            points: 100,
            ..MvnOptions::default()
        };
        assert!(mvn_cdf(&[0.0; 3], &gamma_matrix(3), &small).is_err());
    }
}
