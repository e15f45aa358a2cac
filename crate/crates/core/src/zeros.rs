//! Zeros of Dirichlet L-functions and the zero sums built from them.
//!
//! Ordinates are found for primitive real characters `(D/.)` by scanning the
//! Hardy-type function `Z(t) = e^{i theta(t)} L(1/2 + it)`, which is real on
//! the critical line, for sign changes and bisecting. `L` is evaluated as
//! `q^{-s} sum_a chi(a) zeta(s, a/q)` with an Euler-Maclaurin Hurwitz zeta
//! whose remainder bound is kept below `1e-12`.
//!
//! Zero sums are two-sided: `zero_sum(chi)` is the sum of `1/(1/4 + gamma^2)`
//! over all nontrivial zeros of `L(s, chi)`, that is the positive ordinates
//! of `chi` plus those of `conj(chi)`. Its main term is `log A(chi)`, which is
//! exactly what the asymptotic mode substitutes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{sum_in_order, FieldModel};
use crate::group::CharacterIndex;
use crate::primes;

pub const DEFAULT_STEP: f64 = 0.05;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_HEIGHT: f64 = 200.0;
const EM_BOUND: f64 = 1e-12;
const AUDIT_SLACK: f64 = 2.0;
const MAX_HALVINGS: u32 = 4;

/// `B_{2k}/(2k)!` for `k = 1..=40`.
fn em_coefficients() -> &'static [f64] {
    static COEFFS: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    COEFFS.get_or_init(|| {
        let zeta_even = |k: usize| -> f64 {
            let p2 = PI * PI;
            match k {
                1 => p2 / 6.0,
                2 => p2 * p2 / 90.0,
                3 => p2.powi(3) / 945.0,
                4 => p2.powi(4) / 9450.0,
                5 => p2.powi(5) / 93555.0,
                6 => 691.0 * p2.powi(6) / 638_512_875.0,
                _ => {
                    let s = 2 * k as i32;
                    let head: f64 = (1..=20).map(|n| (n as f64).powi(-s)).sum();
                    head + 20f64.powi(1 - s) / (s - 1) as f64 * 0.5
                }
            }
        };
        (1..=40)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * 2.0 * zeta_even(k) / (2.0 * PI).powi(2 * k as i32)
            })
            .collect()
    })
}

/// Euler-Maclaurin parameters: `n` explicit terms and `m` correction terms.
#[derive(Clone, Copy, Debug)]
struct EmParams {
    n: usize,
    m: usize,
}

impl EmParams {
    /// Smallest `n` (from a height-dependent start) whose remainder bound at
    /// order `m` is below [`EM_BOUND`].
    fn choose(s: Complex64, a: f64, m: usize) -> EmParams {
        let mut n = ((s.im.abs() / (2.0 * PI)).ceil() as usize).max(8);
        while remainder_bound(s, a, n, m) > EM_BOUND {
            n += 4;
        }
        EmParams { n, m }
    }
}

fn rising(s: Complex64, len: usize) -> Complex64 {
    (0..len).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (s + j as f64))
}

fn remainder_bound(s: Complex64, a: f64, n: usize, m: usize) -> f64 {
    let c = em_coefficients()[m]; // index m is c_{m+1}
    let x = n as f64 + a;
    let sigma = s.re;
    c.abs() * rising(s, 2 * m + 1).norm() * x.powf(-sigma - 2.0 * m as f64 - 1.0)
        * (s + (2 * m + 1) as f64).norm()
        / (sigma + (2 * m + 1) as f64)
}

/// Hurwitz zeta `zeta(s, a)` for `0 < a <= 1`, `Re s > 0`, `s != 1`.
fn hurwitz(s: Complex64, a: f64, p: EmParams) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..p.n {
        sum += (-s * (k as f64 + a).ln()).exp();
    }
    let x = p.n as f64 + a;
    let lx = x.ln();
    let x_ms = (-s * lx).exp();
    sum += x_ms * x / (s - 1.0) + x_ms * 0.5;
    // c_k (s)_{2k-1} x^{-s-2k+1}
    let coeffs = em_coefficients();
    let mut poch = s; // (s)_1
    let mut xpow = x_ms / x; // x^{-s-1}
    let inv_x2 = 1.0 / (x * x);
    for (k, &ck) in coeffs.iter().enumerate().take(p.m) {
        sum += poch * xpow * ck;
        let j = (2 * k + 1) as f64;
        poch *= (s + j) * (s + j + 1.0);
        xpow *= inv_x2;
    }
    sum
}

/// A primitive real Dirichlet character `(D/.)` with its Hurwitz data.
#[derive(Clone, Debug)]
pub struct RealCharacter {
    d: i64,
    q: u64,
    values: Vec<(f64, f64)>, // (a/q, chi(a)) for chi(a) != 0
}

impl RealCharacter {
    pub fn new(d: i64) -> Result<RealCharacter> {
        if !primes::is_fundamental_discriminant(d) {
            return Err(Error::invalid(
                "zeros",
                format!("{d} is not a fundamental discriminant; the character is not primitive real"),
            ));
        }
        let q = d.unsigned_abs();
        let values = (1..q)
            .filter_map(|a| {
                let c = primes::kronecker(d, a);
                (c != 0).then(|| (a as f64 / q as f64, c as f64))
            })
            .collect();
        Ok(RealCharacter { d, q, values })
    }

    /// All primitive real characters of conductor `q`.
    pub fn all_with_conductor(q: u64) -> Vec<RealCharacter> {
        let q = q as i64;
        [-q, q]
            .into_iter()
            .filter_map(|d| RealCharacter::new(d).ok())
            .collect()
    }

    pub fn discriminant(&self) -> i64 {
        self.d
    }

    pub fn conductor(&self) -> u64 {
        self.q
    }

    fn kappa(&self) -> f64 {
        if self.d < 0 {
            1.0
        } else {
            0.0
        }
    }

    fn l_value_with(&self, s: Complex64, m: usize) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for &(a, c) in &self.values {
            let p = EmParams::choose(s, a, m);
            total += hurwitz(s, a, p) * c;
        }
        total * (-s * (self.q as f64).ln()).exp()
    }

    /// `L(s, chi)` at the default Euler-Maclaurin order.
    pub fn l_value(&self, s: Complex64) -> Complex64 {
        self.l_value_with(s, 12)
    }

    /// `L(s, chi)` at doubled Euler-Maclaurin order, for verification.
    pub fn l_value_verify(&self, s: Complex64) -> Complex64 {
        self.l_value_with(s, 24)
    }

    /// `theta(t) = (t/2) log(q/pi) + Im log Gamma((1/2 + kappa + it)/2)`.
    pub fn theta(&self, t: f64) -> f64 {
        let z = Complex64::new((0.5 + self.kappa()) / 2.0, t / 2.0);
        t / 2.0 * (self.q as f64 / PI).ln() + ln_gamma(z).im
    }

    /// The real-valued rotation `Z(t) = e^{i theta(t)} L(1/2 + it)`.
    pub fn hardy_z(&self, t: f64) -> f64 {
        let l = self.l_value(Complex64::new(0.5, t));
        (Complex64::from_polar(1.0, self.theta(t)) * l).re
    }

    /// Counting estimate for zeros with `0 < gamma <= t`.
    pub fn counting_estimate(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let e = t / (2.0 * PI) * (self.q as f64 * t / (2.0 * PI * std::f64::consts::E)).ln();
        e.max(0.0)
    }

    /// Ordinates in `(0, height]`, scanned at `DEFAULT_STEP` and refined to
    /// `tol`; the step halves up to four times if the count audit fails.
    pub fn find_zeros(&self, height: f64, tol: f64) -> Result<Vec<f64>> {
        if !(height > 0.0 && height <= MAX_HEIGHT) {
            return Err(Error::invalid("zeros", format!("height must lie in (0, {MAX_HEIGHT}]")));
        }
        if !(tol >= 1e-10) {
            return Err(Error::invalid("zeros", "bisection tolerance must be at least 1e-10"));
        }
        let mut step = DEFAULT_STEP;
        let mut last_err = None;
        for _ in 0..=MAX_HALVINGS {
            let zeros = self.scan(height, step, tol);
            match self.audit(&zeros, height) {
                Ok(()) => return Ok(zeros),
                Err(e) => last_err = Some(e),
            }
            step /= 2.0;
        }
        Err(last_err.expect("at least one scan ran"))
    }

    fn scan(&self, height: f64, step: f64, tol: f64) -> Vec<f64> {
        let n = (height / step).ceil() as usize;
        let grid: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(height)).collect();
        let values: Vec<f64> = grid.iter().map(|&t| self.hardy_z(t)).collect();
        let mut zeros = Vec::new();
        for k in 0..n {
            let (t0, t1) = (grid[k], grid[k + 1]);
            let (z0, z1) = (values[k], values[k + 1]);
            if z1 == 0.0 && t1 > 0.0 {
                zeros.push(t1);
            } else if z0 * z1 < 0.0 {
                zeros.push(self.bisect(t0, t1, z0, tol));
            }
        }
        zeros.dedup();
        zeros
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, mut zlo: f64, tol: f64) -> f64 {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let zm = self.hardy_z(mid);
            if zm == 0.0 {
                return mid;
            }
            if zlo * zm < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                zlo = zm;
            }
        }
        0.5 * (lo + hi)
    }

    /// Compare the count below each integer height with the estimate.
    fn audit(&self, zeros: &[f64], height: f64) -> Result<()> {
        let mut checkpoints: Vec<f64> = (1..=height.floor() as usize).map(|h| h as f64).collect();
        checkpoints.push(height);
        let mut prev = 0.0;
        for &h in &checkpoints {
            let found = zeros.partition_point(|&g| g <= h);
            let expected = self.counting_estimate(h);
            if (found as f64 - expected).abs() > AUDIT_SLACK {
                return Err(Error::ZeroAudit {
                    label: format!("({}/.)", self.d),
                    lo: prev,
                    hi: h,
                    found,
                    expected,
                });
            }
            prev = h;
        }
        Ok(())
    }
}

/// Continuous branch of `log Gamma(z)` for `Re z > 0`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    // shift to |z| >= 15, summing principal logs keeps the branch continuous
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    // Stirling series with B_{2k} / (2k (2k-1))
    const B: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let mut series = (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln();
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut p = inv;
    for (k, b) in B.iter().enumerate() {
        let k2 = 2.0 * (k + 1) as f64;
        series += p * (b / (k2 * (k2 - 1.0)));
        p *= inv2;
    }
    series - shift
}

/// Zeros of the real character `(D/.)` in `(0, height]`.
pub fn find_zeros_real_character(d: i64, height: f64, tol: f64) -> Result<Vec<f64>> {
    RealCharacter::new(d)?.find_zeros(height, tol)
}

/// Zeros for every primitive real character of conductor `q`, keyed by `D`.
pub fn find_zeros_by_conductor(q: u64, height: f64, tol: f64) -> Result<Vec<(i64, Vec<f64>)>> {
    let chars = RealCharacter::all_with_conductor(q);
    if chars.is_empty() {
        return Err(Error::invalid(
            "zeros",
            format!("no primitive real character has conductor {q}"),
        ));
    }
    chars
        .into_iter()
        .map(|c| Ok((c.discriminant(), c.find_zeros(height, tol)?)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Computed,
    Ingested,
}

/// Positive ordinates per nontrivial character, complete below `height`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroArchive {
    entries: BTreeMap<String, Vec<f64>>,
    height: f64,
    provenance: Provenance,
    fingerprint: String,
}

impl ZeroArchive {
    /// Validate entries against `field`; labels are canonicalized.
    pub fn new(
        field: &FieldModel,
        height: f64,
        entries: BTreeMap<String, Vec<f64>>,
        provenance: Provenance,
    ) -> Result<ZeroArchive> {
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::invalid("zeros", "archive height must be positive"));
        }
        let mut canonical = BTreeMap::new();
        for (label, gammas) in entries {
            let chi = field.parse_character_label(&label)?;
            if chi.is_trivial() {
                return Err(Error::invalid("zeros", "archive lists the trivial character"));
            }
            for w in gammas.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(Error::invalid(
                        "zeros",
                        format!("ordinates for {label} not strictly increasing at {}", w[1]),
                    ));
                }
            }
            if let Some(&g) = gammas.iter().find(|&&g| !(g > 0.0 && g <= height)) {
                return Err(Error::invalid(
                    "zeros",
                    format!("ordinate {g} for {label} outside (0, {height}]"),
                ));
            }
            canonical.insert(field.character_label(&chi)?, gammas);
        }
        let missing: Vec<String> = field
            .group()
            .characters()
            .skip(1)
            .map(|c| field.character_label(&c).expect("valid character"))
            .filter(|l| !canonical.contains_key(l))
            .collect();
        if !missing.is_empty() {
            return Err(Error::invalid(
                "zeros",
                format!("archive is missing characters: {}", missing.join(", ")),
            ));
        }
        Ok(ZeroArchive {
            entries: canonical,
            height,
            provenance,
            fingerprint: field.fingerprint(),
        })
    }

    /// Compute zeros for every nontrivial character of `field`. Requires all
    /// characters to be real; complex characters need an ingested archive.
    pub fn compute(field: &FieldModel, height: f64, exec: Exec) -> Result<ZeroArchive> {
        let chars: Vec<CharacterIndex> = field.group().characters().skip(1).collect();
        let mut discs = Vec::with_capacity(chars.len());
        for chi in &chars {
            let d = field.real_character_discriminant(chi)?.ok_or_else(|| {
                Error::invalid(
                    "zeros",
                    format!(
                        "character {} is not real with a small conductor; ingest its zeros instead",
                        field.character_label(chi).unwrap_or_default()
                    ),
                )
            })?;
            discs.push(d);
        }
        let mut unique = discs.clone();
        unique.sort_unstable();
        unique.dedup();
        let found = exec.map_slice(&unique, |&d| find_zeros_real_character(d, height, DEFAULT_TOL));
        let mut by_disc = BTreeMap::new();
        for (d, z) in unique.into_iter().zip(found) {
            by_disc.insert(d, z?);
        }
        let entries = chars
            .iter()
            .zip(&discs)
            .map(|(chi, d)| Ok((field.character_label(chi)?, by_disc[d].clone())))
            .collect::<Result<BTreeMap<_, _>>>()?;
        ZeroArchive::new(field, height, entries, Provenance::Computed)
    }

    /// Parse the text format: `height=<T>` then `<label>,<gamma>` lines.
    pub fn parse(text: &str, field: &FieldModel) -> Result<ZeroArchive> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            module: "zeros",
            line,
            msg,
        };
        let mut height = None;
        let mut entries: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if height.is_none() {
                let h = line
                    .strip_prefix("height=")
                    .ok_or_else(|| parse_err(line_no, "expected 'height=<T>' header".into()))?;
                let h: f64 = h
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad height '{h}'")))?;
                if !(h.is_finite() && h > 0.0) {
                    return Err(parse_err(line_no, "height must be positive".into()));
                }
                height = Some(h);
                continue;
            }
            // a bare label declares a character with no zeros below the height
            let Some((label, gamma)) = line.rsplit_once(',') else {
                let chi = field
                    .parse_character_label(line)
                    .map_err(|e| parse_err(line_no, e.to_string()))?;
                entries.entry(field.character_label(&chi)?).or_default();
                continue;
            };
            let chi = field
                .parse_character_label(label)
                .map_err(|e| parse_err(line_no, e.to_string()))?;
            if chi.is_trivial() {
                return Err(parse_err(line_no, "the trivial character has no zero sum".into()));
            }
            let label = field.character_label(&chi)?;
            let g: f64 = gamma
                .trim()
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad ordinate '{}'", gamma.trim())))?;
            let h = height.unwrap();
            if !(g > 0.0 && g <= h) {
                return Err(parse_err(line_no, format!("ordinate {g} outside (0, {h}]")));
            }
            let list = entries.entry(label.clone()).or_default();
            if let Some(&last) = list.last() {
                if !(g > last) {
                    return Err(parse_err(
                        line_no,
                        format!("ordinates for {label} not ascending ({g} after {last})"),
                    ));
                }
            }
            list.push(g);
        }
        let height = height.ok_or_else(|| parse_err(1, "empty archive".into()))?;
        ZeroArchive::new(field, height, entries, Provenance::Ingested)
    }

    pub fn ingest(path: &Path, field: &FieldModel) -> Result<ZeroArchive> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, field)
    }

    /// Serialize; characters without zeros appear as bare label lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("height={}\n", self.height);
        for (label, gammas) in &self.entries {
            if gammas.is_empty() {
                let _ = writeln!(out, "{label}");
            }
            for g in gammas {
                let _ = writeln!(out, "{label},{g:?}");
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn ordinates(&self, label: &str) -> Option<&[f64]> {
        self.entries.get(label).map(Vec::as_slice)
    }

    /// The same archive cut at a lower height.
    pub fn truncated(&self, height: f64) -> Result<ZeroArchive> {
        if !(height > 0.0 && height <= self.height) {
            return Err(Error::invalid(
                "zeros",
                format!("truncation height {height} exceeds archive height {}", self.height),
            ));
        }
        let entries = self
            .entries
            .iter()
            .map(|(l, g)| (l.clone(), g.iter().copied().filter(|&x| x <= height).collect()))
            .collect();
        Ok(ZeroArchive {
            entries,
            height,
            provenance: self.provenance,
            fingerprint: self.fingerprint.clone(),
        })
    }

    fn check_field(&self, field: &FieldModel) -> Result<()> {
        if self.fingerprint != field.fingerprint() {
            return Err(Error::invalid("zeros", "archive belongs to a different field"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Tail {
    #[default]
    None,
    /// Heuristic `(1/(pi T)) (log(A T / 2pi) + 1)` for the zeros above `T`.
    DensityTail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ZeroSumMode {
    /// Every zero sum replaced by its main term `log A(chi)`.
    #[default]
    Asymptotic,
    ZeroData { tail: Tail },
}

/// Zero sums for a field, resolved once per mode.
#[derive(Clone, Debug)]
pub struct ZeroSums {
    /// Indexed by character index; entry 0 (trivial character) is 0.
    values: Vec<f64>,
    n_l: f64,
}

impl ZeroSums {
    pub fn new(field: &FieldModel, archive: Option<&ZeroArchive>, mode: ZeroSumMode) -> Result<ZeroSums> {
        let group = field.group();
        let values: Vec<f64> = match mode {
            ZeroSumMode::Asymptotic => field.log_conductors().to_vec(),
            ZeroSumMode::ZeroData { tail } => {
                let archive = archive.ok_or_else(|| {
                    Error::invalid("zeros", "zero-data mode needs a zero archive")
                })?;
                archive.check_field(field)?;
                group
                    .characters()
                    .map(|chi| {
                        if chi.is_trivial() {
                            Ok(0.0)
                        } else {
                            zero_sum_from_archive(field, archive, &chi, tail)
                        }
                    })
                    .collect::<Result<_>>()?
            }
        };
        let n_l = sum_in_order(&values);
        Ok(ZeroSums { values, n_l })
    }

    pub fn get(&self, field: &FieldModel, chi: &CharacterIndex) -> Result<f64> {
        field.group().check_character(chi)?;
        if chi.is_trivial() {
            return Err(Error::invalid("zeros", "the trivial character has no zero sum"));
        }
        Ok(self.values[field.group().index_of(&chi.0)])
    }

    /// By character index (entry 0 is the trivial character, set to 0).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_l(&self) -> f64 {
        self.n_l
    }
}

fn one_sided(gammas: &[f64]) -> f64 {
    gammas.iter().map(|g| 1.0 / (0.25 + g * g)).sum()
}

fn zero_sum_from_archive(
    field: &FieldModel,
    archive: &ZeroArchive,
    chi: &CharacterIndex,
    tail: Tail,
) -> Result<f64> {
    let label = field.character_label(chi)?;
    let conj_label = field.character_label(&field.group().conj_character(chi))?;
    let own = archive
        .ordinates(&label)
        .ok_or_else(|| Error::invalid("zeros", format!("archive has no entry for {label}")))?;
    let mirror = archive
        .ordinates(&conj_label)
        .ok_or_else(|| Error::invalid("zeros", format!("archive has no entry for {conj_label}")))?;
    let mut s = one_sided(own) + one_sided(mirror);
    if tail == Tail::DensityTail {
        s += density_tail(field.log_artin_conductor(chi)?, archive.height());
    }
    Ok(s)
}

/// Heuristic two-sided contribution of the zeros above `height`.
pub fn density_tail(log_conductor: f64, height: f64) -> f64 {
    ((log_conductor + (height / (2.0 * PI)).ln()) + 1.0) / (PI * height)
}

/// `sum over all zeros of L(s, chi)` of `1/(1/4 + gamma^2)` under `mode`.
pub fn zero_sum(
    field: &FieldModel,
    archive: Option<&ZeroArchive>,
    chi: &CharacterIndex,
    mode: ZeroSumMode,
) -> Result<f64> {
    field.group().check_character(chi)?;
    if chi.is_trivial() {
        return Err(Error::invalid("zeros", "the trivial character has no zero sum"));
    }
    match mode {
        ZeroSumMode::Asymptotic => field.log_artin_conductor(chi),
        ZeroSumMode::ZeroData { tail } => {
            let archive =
                archive.ok_or_else(|| Error::invalid("zeros", "zero-data mode needs a zero archive"))?;
            archive.check_field(field)?;
            zero_sum_from_archive(field, archive, chi, tail)
        }
    }
}

/// `N_L = sum_{chi != 1} zero_sum(chi)`; equals `log d_L` in asymptotic mode.
pub fn n_l(field: &FieldModel, archive: Option<&ZeroArchive>, mode: ZeroSumMode) -> Result<f64> {
    Ok(ZeroSums::new(field, archive, mode)?.n_l())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_real_values() {
        for &x in &[0.5f64, 1.0, 2.5, 7.0, 20.0] {
            let g = ln_gamma(Complex64::new(x, 0.0));
            let expect = statrs::function::gamma::ln_gamma(x);
            assert!((g.re - expect).abs() < 1e-12, "x = {x}");
            assert!(g.im.abs() < 1e-14);
        }
        // |Gamma(1/2 + it)|^2 = pi / cosh(pi t)
        for &t in &[0.3f64, 2.0, 9.0] {
            let g = ln_gamma(Complex64::new(0.5, t));
            assert!((2.0 * g.re - (PI / (PI * t).cosh()).ln()).abs() < 1e-11);
        }
    }

    #[test]
    fn hurwitz_at_real_points() {
        // zeta(2, 1) = pi^2/6, zeta(2, 1/2) = pi^2/2
        let s = Complex64::new(2.0, 0.0);
        let z1 = hurwitz(s, 1.0, EmParams::choose(s, 1.0, 12));
        assert!((z1.re - PI * PI / 6.0).abs() < 1e-12);
        let zh = hurwitz(s, 0.5, EmParams::choose(s, 0.5, 12));
        assert!((zh.re - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn l_function_known_values() {
        // L(1, chi_{-4}) = pi/4 is outside Re s < 1 but inside the EM domain
        let c = RealCharacter::new(-4).unwrap();
        let l = c.l_value(Complex64::new(1.0 + 1e-9, 0.0));
        assert!((l.re - PI / 4.0).abs() < 1e-7);
        // L(2, chi_5) = 4 pi^2 / (25 sqrt 5)
        let c5 = RealCharacter::new(5).unwrap();
        let l = c5.l_value(Complex64::new(2.0, 0.0));
        assert!((l.re - 4.0 * PI * PI / (25.0 * 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn z_function_is_real() {
        let c = RealCharacter::new(8).unwrap();
        for &t in &[1.0, 7.3, 40.0] {
            let z = Complex64::from_polar(1.0, c.theta(t)) * c.l_value(Complex64::new(0.5, t));
            assert!(z.im.abs() < 1e-9 * (1.0 + z.re.abs()), "t = {t}: {z}");
        }
    }

    #[test]
    fn first_zero_mod_4() {
        let z = find_zeros_real_character(-4, 10.0, 1e-10).unwrap();
        assert_eq!(z.len(), 1);
        assert!(z[0] > 6.0 && z[0] < 6.1);
        assert!((z[0] - 6.020_948_904_697_6).abs() < 1e-8);
        let c = RealCharacter::new(-4).unwrap();
        assert!(c.l_value_verify(Complex64::new(0.5, z[0])).norm() < 1e-8);
    }

    #[test]
    fn tiny_height_is_empty() {
        for d in [-4, 5, 8, -8, 12] {
            assert!(find_zeros_real_character(d, 0.1, DEFAULT_TOL).unwrap().is_empty());
        }
    }

    #[test]
    fn rejects_non_primitive() {
        assert!(find_zeros_real_character(9, 10.0, 1e-9).is_err());
        assert!(find_zeros_real_character(-12, 10.0, 1e-9).is_err());
        assert!(find_zeros_real_character(-4, 10.0, 1e-12).is_err());
        assert!(find_zeros_real_character(-4, 250.0, 1e-9).is_err());
        assert!(find_zeros_by_conductor(6, 10.0, 1e-9).is_err());
        let by8 = find_zeros_by_conductor(8, 5.0, 1e-9).unwrap();
        assert_eq!(by8.iter().map(|x| x.0).collect::<Vec<_>>(), vec![-8, 8]);
    }

    #[test]
    fn mod4_zero_sum_against_explicit_formula() {
        // 2 Re Lambda'/Lambda(1) = log(4/pi) + psi(1) + 2 L'/L(1, chi_{-4})
        let exact = 0.155_567_979_901_464_1;
        let field = FieldModel::cyclotomic_subgroup(4, &[1]).unwrap();
        let archive = ZeroArchive::compute(&field, 100.0, Exec::default()).unwrap();
        let chi = CharacterIndex(vec![1]);
        let mode = ZeroSumMode::ZeroData {
            tail: Tail::DensityTail,
        };
        let s = zero_sum(&field, Some(&archive), &chi, mode).unwrap();
        assert!((s - exact).abs() < 5e-3, "s = {s}");
        let bare = zero_sum(&field, Some(&archive), &chi, ZeroSumMode::ZeroData { tail: Tail::None }).unwrap();
        assert!(bare < exact && bare > 0.8 * exact);
    }

    #[test]
    fn asymptotic_mode() {
        let f = FieldModel::multiquadratic_u64(&[5, 13]).unwrap();
        let chi = CharacterIndex(vec![1, 0]);
        let s = zero_sum(&f, None, &chi, ZeroSumMode::Asymptotic).unwrap();
        assert_eq!(s, 5f64.ln());
        assert!(zero_sum(&f, None, &CharacterIndex(vec![0, 0]), ZeroSumMode::Asymptotic).is_err());
        let nl = n_l(&f, None, ZeroSumMode::Asymptotic).unwrap();
        assert_eq!(nl.to_bits(), f.log_discriminant().to_bits());
        assert!((nl - 2.0 * 65f64.ln()).abs() < 1e-13);
        let c5 = FieldModel::cyclotomic_subgroup(5, &[]).unwrap();
        assert!((n_l(&c5, None, ZeroSumMode::Asymptotic).unwrap() - 3.0 * 5f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn empty_archive_sums_to_zero() {
        let f = FieldModel::multiquadratic_u64(&[5, 13]).unwrap();
        let entries = ["10", "01", "11"].iter().map(|l| (l.to_string(), vec![])).collect();
        let a = ZeroArchive::new(&f, 1.0, entries, Provenance::Ingested).unwrap();
        let mode = ZeroSumMode::ZeroData { tail: Tail::None };
        assert_eq!(zero_sum(&f, Some(&a), &CharacterIndex(vec![1, 1]), mode).unwrap(), 0.0);
        assert_eq!(n_l(&f, Some(&a), mode).unwrap(), 0.0);
        assert!(n_l(&f, None, mode).is_err());
    }

    #[test]
    fn archive_parse_and_round_trip() {
        let f = FieldModel::cyclotomic_subgroup(7, &[1, 6]).unwrap();
        let labels: Vec<String> = f
            .group()
            .characters()
            .skip(1)
            .map(|c| f.character_label(&c).unwrap())
            .collect();
        assert_eq!(labels.len(), 2);
        let text = format!(
            "height=10\n{a},2.5\n{a},7.25\n{b},3.0\n",
            a = labels[0],
            b = labels[1]
        );
        let a = ZeroArchive::parse(&text, &f).unwrap();
        assert_eq!(a.height(), 10.0);
        assert_eq!(a.provenance(), Provenance::Ingested);
        assert_eq!(ZeroArchive::parse(&a.to_text(), &f).unwrap(), a);
        // complex pair: the two-sided sum uses both entries
        let s = zero_sum(&f, Some(&a), &f.parse_character_label(&labels[0]).unwrap(), ZeroSumMode::ZeroData { tail: Tail::None }).unwrap();
        let expect = 1.0 / (0.25 + 6.25) + 1.0 / (0.25 + 7.25f64 * 7.25) + 1.0 / (0.25 + 9.0);
        assert!((s - expect).abs() < 1e-15);

        let neg = format!("height=10\n{},-3.2\n{},1\n", labels[0], labels[1]);
        match ZeroArchive::parse(&neg, &f) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let unsorted = format!("height=10\n{a},5\n{a},4\n{b},1\n", a = labels[0], b = labels[1]);
        assert!(matches!(ZeroArchive::parse(&unsorted, &f), Err(Error::Parse { line: 3, .. })));
        let missing = format!("height=10\n{},5\n", labels[0]);
        let err = ZeroArchive::parse(&missing, &f).unwrap_err();
        assert!(err.to_string().contains(&labels[1]));
        let unknown = "height=10\n7.5,1.0\n";
        assert!(ZeroArchive::parse(unknown, &f).is_err());
    }

    #[test]
    fn zero_sum_monotone_in_height() {
        let f = FieldModel::multiquadratic_u64(&[5]).unwrap();
        let a = ZeroArchive::compute(&f, 40.0, Exec::default()).unwrap();
        let chi = CharacterIndex(vec![1]);
        let mode = ZeroSumMode::ZeroData { tail: Tail::None };
        let mut prev = 0.0;
        for h in [5.0, 10.0, 20.0, 40.0] {
            let s = zero_sum(&f, Some(&a.truncated(h).unwrap()), &chi, mode).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }
}
