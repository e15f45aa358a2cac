//! Random-phase sampler for the limiting distribution of a race vector.
//!
//! Each sample draws one phase `theta` per (character, ordinate) pair and
//! sets
//!
//! `X_i = E(t_i) + sum_chi sum_{0 < gamma <= T} 2 Re(<t_i, chi> e^{i theta}) / sqrt(1/4 + gamma^2)`.
//!
//! The phases are shared across the coordinates of a sample. Because every
//! `t_i` is a difference `t_{a,b}`, the random part is computed once per
//! class as `W_g = sum 2 Re(conj chi(g) e^{i theta}) / sqrt(1/4 + gamma^2)`
//! and `X_i - E(t_i) = W_{C_i} - W_{C_{i+1}}`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::race::RaceSpec;
use crate::zeros::ZeroArchive;

const BLOCK: usize = 4096;

#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    /// Truncation height for the ordinates.
    pub height: f64,
    pub samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl SimConfig {
    pub fn new(height: f64, samples: usize, seed: u64) -> Self {
        SimConfig {
            height,
            samples,
            seed,
            exec: Exec::default(),
        }
    }
}

/// Row-major `rows x cols` sample matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl SampleMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column_mean(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).sum::<f64>() / self.rows as f64
    }

    pub fn column_variance(&self, j: usize) -> f64 {
        let m = self.column_mean(j);
        (0..self.rows)
            .map(|i| (self.data[i * self.cols + j] - m).powi(2))
            .sum::<f64>()
            / (self.rows as f64 - 1.0)
    }
}

/// One (character, ordinate) term: amplitude and `chi(C_k)` for each class.
struct Term {
    amp: f64,
    values: Vec<Complex64>,
}

fn terms(spec: &RaceSpec, archive: &ZeroArchive, height: f64) -> Result<Vec<Term>> {
    let field = spec.field();
    if archive.fingerprint() != field.fingerprint() {
        return Err(Error::invalid("simulator", "archive belongs to a different field"));
    }
    if height > archive.height() {
        return Err(Error::invalid(
            "simulator",
            format!("truncation height {height} exceeds archive height {}", archive.height()),
        ));
    }
    let group = field.group();
    let mut out = Vec::new();
    for chi in group.characters().skip(1) {
        let label = field.character_label(&chi)?;
        let gammas = archive
            .ordinates(&label)
            .ok_or_else(|| Error::invalid("simulator", format!("archive has no entry for {label}")))?;
        let values: Vec<Complex64> = spec
            .classes()
            .iter()
            .map(|g| group.character_value(&chi, g))
            .collect::<Result<_>>()?;
        for &g in gammas.iter().take_while(|&&g| g <= height) {
            out.push(Term {
                amp: 2.0 / (0.25 + g * g).sqrt(),
                values: values.clone(),
            });
        }
    }
    Ok(out)
}

/// Draw `config.samples` rows of `(X_1, ..., X_r)`.
pub fn sample_mu(spec: &RaceSpec, archive: &ZeroArchive, config: &SimConfig) -> Result<SampleMatrix> {
    if config.samples == 0 {
        return Err(Error::invalid("simulator", "sample count must be positive"));
    }
    let terms = terms(spec, archive, config.height)?;
    let means: Vec<f64> = spec
        .race_functions()
        .iter()
        .map(|t| spec.mean_e(t))
        .collect::<Result<_>>()?;
    let r = means.len();
    let k = r + 1;
    let blocks = config.samples.div_ceil(BLOCK);
    let chunks = config.exec.map(blocks, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(b as u64);
        let n = BLOCK.min(config.samples - b * BLOCK);
        let mut out = Vec::with_capacity(n * r);
        let mut w = vec![0.0; k];
        for _ in 0..n {
            w.iter_mut().for_each(|x| *x = 0.0);
            for term in &terms {
                let theta = rng.gen::<f64>() * std::f64::consts::TAU;
                let (s, c) = theta.sin_cos();
                for (wg, v) in w.iter_mut().zip(&term.values) {
                    // 2 Re(conj chi(g) e^{i theta}) = 2 (Re chi cos + Im chi sin)
                    *wg += term.amp * (v.re * c + v.im * s);
                }
            }
            for i in 0..r {
                out.push(means[i] + w[i] - w[i + 1]);
            }
        }
        out
    });
    Ok(SampleMatrix {
        rows: config.samples,
        cols: r,
        data: chunks.concat(),
    })
}

/// Fraction of rows with every coordinate negative, with its binomial
/// standard error.
pub fn empirical_delta(samples: &SampleMatrix) -> Result<(f64, f64)> {
    if samples.rows == 0 {
        return Err(Error::invalid("simulator", "empty sample matrix"));
    }
    let hits = (0..samples.rows)
        .filter(|&i| samples.row(i).iter().all(|&x| x < 0.0))
        .count();
    let n = samples.rows as f64;
    let p = hits as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}

/// `E exp(-i <x, X>)` over the samples, with its standard error.
pub fn empirical_cf(samples: &SampleMatrix, x: &[f64]) -> Result<(Complex64, f64)> {
    if x.len() != samples.cols {
        return Err(Error::invalid("simulator", "test point has the wrong dimension"));
    }
    let n = samples.rows as f64;
    let (mut sc, mut ss, mut sc2, mut ss2) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..samples.rows {
        let phase: f64 = samples.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        let (s, c) = phase.sin_cos();
        sc += c;
        ss -= s;
        sc2 += c * c;
        ss2 += s * s;
    }
    let mc = sc / n;
    let ms = ss / n;
    let var = (sc2 / n - mc * mc) + (ss2 / n - ms * ms);
    Ok((Complex64::new(mc, ms), (var.max(0.0) / n).sqrt()))
}

/// `e^{-i <E, x>} prod J_0(2 |sum_i x_i <t_i, chi>| / sqrt(1/4 + gamma^2))`
/// over the ordinates up to `height`.
pub fn truncated_cf(spec: &RaceSpec, archive: &ZeroArchive, height: f64, x: &[f64]) -> Result<Complex64> {
    let ts = spec.race_functions();
    if x.len() != ts.len() {
        return Err(Error::invalid("simulator", "test point has the wrong dimension"));
    }
    let terms = terms(spec, archive, height)?;
    let mut prod = 1.0;
    for term in &terms {
        // sum_i x_i (conj chi(C_i) - conj chi(C_{i+1}))
        let w: Complex64 = (0..x.len())
            .map(|i| (term.values[i].conj() - term.values[i + 1].conj()) * x[i])
            .sum();
        prod *= libm::j0(term.amp * w.norm());
    }
    let mean_phase: f64 = ts
        .iter()
        .zip(x)
        .map(|(t, xi)| Ok(spec.mean_e(t)? * xi))
        .sum::<Result<f64>>()?;
    Ok(Complex64::from_polar(prod, -mean_phase))
}
