//! Prime-selection constructions for multiquadratic towers and family-level
//! moderacy diagnostics.
//!
//! Every construction returns the primes it picked together with a
//! certificate. `verify()` recomputes the defining inequalities from the
//! primes alone, so a certificate can be checked independently of the search
//! that produced it.
//!
//! Inequalities are evaluated on `f64` logarithms of big integers (relative
//! error about 1e-15). Searches aim a small margin inside each open interval
//! so that rounding cannot flip a strict inequality during verification.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{sum_in_order, FieldModel};
use crate::primes::{ceil_exp, is_prime, log_big, next_prime_1_mod_4};
use crate::zeros::{n_l, ZeroSumMode};

const LN2: f64 = std::f64::consts::LN_2;

/// Search limits shared by every construction.
#[derive(Clone, Copy, Debug)]
pub struct Caps {
    /// Candidates must stay below `2^max_bits`.
    pub max_bits: u64,
    /// Longest run of consecutive primes inside one block.
    pub block_len: usize,
    /// How many times an empty Bertrand window `(x, 2x)` may double.
    pub max_doublings: u32,
    pub exec: Exec,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_bits: 256,
            block_len: 8,
            max_doublings: 8,
            exec: Exec::default(),
        }
    }
}

fn margin(x: f64) -> f64 {
    1e-10 * x.abs().max(1.0)
}

fn bound(caps: &Caps) -> BigUint {
    BigUint::one() << caps.max_bits
}

fn log_sum(primes: &[BigUint]) -> f64 {
    sum_in_order(&primes.iter().map(log_big).collect::<Vec<_>>())
}

/// Smallest prime `p == 1 (mod 4)` with `p > e^lo`, searched in `(x, 2x)` and
/// then in windows doubled up to `caps.max_doublings` times. An optional
/// `hi` keeps `p < e^hi`. Returns the prime and the number of doublings used.
fn window_prime(lo: f64, hi: Option<f64>, caps: &Caps) -> Result<(BigUint, u32)> {
    let x = ceil_exp((lo + margin(lo)).max(0.0));
    let cap = bound(caps);
    if x >= cap {
        return Err(Error::CapExhausted(format!(
            "window start e^{lo:.3} exceeds 2^{}",
            caps.max_bits
        )));
    }
    let limit = match hi {
        Some(h) => ceil_exp((h - margin(h)).max(0.0)).min(cap.clone()),
        None => cap.clone(),
    };
    let mut from = x.clone();
    for d in 0..=caps.max_doublings {
        let stop = (&x << (d + 1)).min(limit.clone());
        if from < stop {
            if let Some(p) = next_prime_1_mod_4(&from, Some(&stop), caps.exec) {
                return Ok((p, d));
            }
        }
        if stop >= limit {
            break;
        }
        from = stop;
    }
    Err(Error::CapExhausted(format!(
        "no prime == 1 mod 4 above e^{lo:.3} within {} window doublings",
        caps.max_doublings
    )))
}

fn next_after(p: &BigUint, caps: &Caps) -> Result<BigUint> {
    next_prime_1_mod_4(&(p + 1u32), Some(&bound(caps)), caps.exec)
        .ok_or_else(|| Error::CapExhausted(format!("no prime == 1 mod 4 above {p} below 2^{}", caps.max_bits)))
}

fn check_primes(primes: &[BigUint], above: &BigUint) -> Result<()> {
    let mut prev = above;
    for p in primes {
        if p <= prev {
            return Err(Error::numerical("constructions", format!("{p} does not exceed {prev}")));
        }
        if (p % 4u32) != BigUint::one() || !is_prime(p) {
            return Err(Error::numerical("constructions", format!("{p} is not a prime == 1 mod 4")));
        }
        prev = p;
    }
    Ok(())
}

fn fail(what: &str) -> Error {
    Error::numerical("constructions", format!("certificate check failed: {what}"))
}

/// Output of [`prime_density_step`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepCertificate {
    pub ell: BigUint,
    pub alpha: f64,
    pub theta: f64,
    /// `p_1 < ... < p_m`; the first `m - 1` are consecutive primes above `ell`.
    pub primes: Vec<BigUint>,
    /// `log p_m / (log ell + sum log p_i)`.
    pub ratio: f64,
    pub achieved_gap: f64,
    /// `log 2 / log(ell p_1 ... p_{m-1})`.
    pub gap_bound: f64,
    /// `log 2^{d+1} / log(ell p_1 ... p_{m-1})` after `d` window doublings.
    pub window_bound: f64,
    pub doublings: u32,
}

impl StepCertificate {
    pub fn last(&self) -> &BigUint {
        self.primes.last().expect("nonempty block")
    }

    pub fn meets_gap_bound(&self) -> bool {
        self.achieved_gap <= self.gap_bound
    }

    pub fn verify(&self) -> Result<()> {
        check_primes(&self.primes, &self.ell)?;
        let m = self.primes.len();
        if m < 2 {
            return Err(fail("a block needs at least two primes"));
        }
        // consecutive run: no prime == 1 mod 4 skipped between ell and p_{m-1}
        let mut q = self.ell.clone();
        for p in &self.primes[..m - 1] {
            let next = next_prime_1_mod_4(&(&q + 1u32), Some(&(p + 1u32)), Exec::Sequential);
            if next.as_ref() != Some(p) {
                return Err(fail("the first m - 1 primes are not consecutive"));
            }
            q = p.clone();
        }
        let base = log_big(&self.ell) + log_sum(&self.primes[..m - 1]);
        let last = log_big(&self.primes[m - 1]);
        if !(self.theta * base > log_big(&self.primes[m - 2])) {
            return Err(fail("theta (log ell + sum log p_i) > log p_{m-1}"));
        }
        let ratio = last / (base + last);
        let gap = (ratio - self.alpha).abs();
        if ratio != self.ratio || gap != self.achieved_gap {
            return Err(fail("recorded ratio disagrees with the primes"));
        }
        if !(gap <= ((self.doublings + 1) as f64 * LN2) / base) || self.window_bound != (self.doublings + 1) as f64 * LN2 / base {
            return Err(fail("|ratio - alpha| <= log 2^{d+1} / log(ell p_1 ... p_{m-1})"));
        }
        Ok(())
    }
}

/// Primes `p_1 < ... < p_m` above `ell`, all `== 1 (mod 4)`, with
/// `log p_m / (log ell + sum log p_i)` close to `alpha`.
///
/// `p_1 .. p_{m-1}` are consecutive until `theta (log ell + sum) > log p_{m-1}`
/// with `theta = alpha / (1 - alpha)`; `p_m` is the first prime above
/// `(ell p_1 ... p_{m-1})^theta`. `caps.block_len` bounds `m - 1`.
pub fn prime_density_step(ell: &BigUint, alpha: f64, caps: &Caps) -> Result<StepCertificate> {
    if *ell < BigUint::from(5u32) {
        return Err(Error::invalid("constructions", "ell must be at least 5"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("constructions", "alpha must lie in (0, 1)"));
    }
    let theta = alpha / (1.0 - alpha);
    let mut primes = Vec::new();
    let mut base = log_big(ell);
    let mut prev = ell.clone();
    loop {
        if primes.len() >= caps.block_len {
            return Err(Error::CapExhausted(format!(
                "theta (log ell + sum log p_i) > log p_(m-1) not reached within {} consecutive primes",
                caps.block_len
            )));
        }
        let p = next_after(&prev, caps)?;
        let lp = log_big(&p);
        base += lp;
        primes.push(p.clone());
        prev = p;
        if theta * base > lp {
            break;
        }
    }
    // recompute the base exactly as verification will
    let base = log_big(ell) + log_sum(&primes);
    let (pm, doublings) = window_prime(theta * base, None, caps)?;
    let last = log_big(&pm);
    primes.push(pm);
    let ratio = last / (base + last);
    let cert = StepCertificate {
        ell: ell.clone(),
        alpha,
        theta,
        primes,
        ratio,
        achieved_gap: (ratio - alpha).abs(),
        gap_bound: LN2 / base,
        window_bound: (doublings + 1) as f64 * LN2 / base,
        doublings,
    };
    cert.verify()?;
    Ok(cert)
}

/// Concatenated blocks from repeated [`prime_density_step`] calls.
#[derive(Clone, Debug, PartialEq)]
pub struct UDenseFamily {
    /// `5` followed by every block in order.
    pub primes: Vec<BigUint>,
    pub blocks: Vec<StepCertificate>,
}

impl UDenseFamily {
    pub fn verify(&self) -> Result<()> {
        if self.primes.first() != Some(&BigUint::from(5u32)) {
            return Err(fail("family must start at 5"));
        }
        let mut at = 1;
        for b in &self.blocks {
            let product: BigUint = self.primes[..at].iter().product();
            if b.ell != product {
                return Err(fail("block base is not the product of all earlier primes"));
            }
            if self.primes.get(at..at + b.primes.len()) != Some(&b.primes[..]) {
                return Err(fail("blocks do not concatenate to the prime sequence"));
            }
            b.verify()?;
            at += b.primes.len();
        }
        if at != self.primes.len() {
            return Err(fail("trailing primes outside any block"));
        }
        Ok(())
    }
}

/// One block per target, each based at the product of every earlier prime.
pub fn build_u_dense_family(targets: &[f64], caps: &Caps) -> Result<UDenseFamily> {
    let mut primes = vec![BigUint::from(5u32)];
    if targets.is_empty() {
        return Ok(UDenseFamily { primes: Vec::new(), blocks: Vec::new() });
    }
    let mut blocks = Vec::with_capacity(targets.len());
    for (k, &alpha) in targets.iter().enumerate() {
        let ell: BigUint = primes.iter().product();
        let cert = prime_density_step(&ell, alpha, caps).map_err(|e| match e {
            Error::CapExhausted(m) => Error::CapExhausted(format!("block {k}: {m}")),
            other => other,
        })?;
        primes.extend(cert.primes.iter().cloned());
        blocks.push(cert);
    }
    Ok(UDenseFamily { primes, blocks })
}

/// One block of [`build_b_dense_family`].
#[derive(Clone, Debug, PartialEq)]
pub struct BDenseBlock {
    pub target: f64,
    pub eps: f64,
    /// Index range of the block in the family's prime sequence.
    pub start: usize,
    pub end: usize,
    /// `2^N / (x + eps) - log(q_1 ... p_{n-1})` and the matching upper end.
    pub lower: f64,
    pub upper: f64,
    pub log_last: f64,
    /// `2^N / log(q_1 ... p_n)` with `N` the number of primes so far.
    pub value: f64,
    pub doublings: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BDenseFamily {
    pub primes: Vec<BigUint>,
    pub blocks: Vec<BDenseBlock>,
}

impl BDenseFamily {
    pub fn verify(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return if self.primes.is_empty() { Ok(()) } else { Err(fail("primes without blocks")) };
        }
        if self.primes.first() != Some(&BigUint::from(5u32)) {
            return Err(fail("family must start at 5"));
        }
        check_primes(&self.primes[1..], &self.primes[0])?;
        let mut at = 1;
        for b in &self.blocks {
            if b.start != at || b.end <= b.start || b.end > self.primes.len() {
                return Err(fail("blocks do not tile the prime sequence"));
            }
            let n = b.end as i32;
            let before = log_sum(&self.primes[..b.end - 1]);
            let last = log_big(&self.primes[b.end - 1]);
            let lower = 2f64.powi(n) / (b.target + b.eps) - before;
            let upper = 2f64.powi(n) / (b.target - b.eps) - before;
            if lower != b.lower || upper != b.upper || last != b.log_last {
                return Err(fail("recorded window disagrees with the primes"));
            }
            if !(lower < last && last < upper) {
                return Err(fail("window inequality on log p_n"));
            }
            let value = 2f64.powi(n) / (before + last);
            if value != b.value || !((value - b.target).abs() < b.eps) {
                return Err(fail("|2^N / log(q_1 ... p_n) - x| < eps"));
            }
            at = b.end;
        }
        if at != self.primes.len() {
            return Err(fail("trailing primes outside any block"));
        }
        Ok(())
    }
}

/// Blocks driving `2^N / log(q_1 ... p_n)` to within `eps` of each target,
/// starting from the prime 5. Each `(x, eps)` needs `0 < eps < x`.
pub fn build_b_dense_family(targets: &[(f64, f64)], caps: &Caps) -> Result<BDenseFamily> {
    if targets.is_empty() {
        return Ok(BDenseFamily { primes: Vec::new(), blocks: Vec::new() });
    }
    for &(x, eps) in targets {
        if !(x > 0.0 && eps > 0.0 && eps < x) {
            return Err(Error::invalid("constructions", format!("need 0 < eps < x, got x = {x}, eps = {eps}")));
        }
    }
    let mut primes = vec![BigUint::from(5u32)];
    let mut blocks = Vec::new();
    for (k, &(x, eps)) in targets.iter().enumerate() {
        let start = primes.len();
        let mut found = None;
        for _ in 0..=caps.block_len {
            let n = primes.len() as i32 + 1;
            let before = log_sum(&primes);
            let last = log_big(primes.last().unwrap());
            let lower = 2f64.powi(n) / (x + eps) - before;
            let upper = 2f64.powi(n) / (x - eps) - before;
            if lower > last && upper - lower > LN2 {
                match window_prime(lower, Some(upper), caps) {
                    Ok((p, d)) => {
                        found = Some((p, d, lower, upper));
                        break;
                    }
                    Err(Error::CapExhausted(m)) if !(ceil_exp(lower.max(0.0)) < bound(caps)) => {
                        return Err(Error::CapExhausted(format!("block {k}: {m}")));
                    }
                    Err(Error::CapExhausted(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            if primes.len() - start >= caps.block_len {
                break;
            }
            let next = next_after(primes.last().unwrap(), caps)?;
            primes.push(next);
        }
        let (p, doublings, lower, upper) = found.ok_or_else(|| {
            Error::CapExhausted(format!("block {k}: window condition not met within {} primes", caps.block_len))
        })?;
        let log_last = log_big(&p);
        primes.push(p);
        let n = primes.len() as i32;
        blocks.push(BDenseBlock {
            target: x,
            eps,
            start,
            end: primes.len(),
            lower,
            upper,
            log_last,
            value: 2f64.powi(n) / (log_sum(&primes[..primes.len() - 1]) + log_last),
            doublings,
        });
    }
    let fam = BDenseFamily { primes, blocks };
    fam.verify()?;
    Ok(fam)
}

/// Primes with `log(p_1 ... p_k) / 2^{k+1} > 2^{2k}` for every `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremCPrefix {
    pub primes: Vec<BigUint>,
    /// `log(p_1 ... p_k) / 2^{k+1} - 2^{2k}` per depth.
    pub margins: Vec<f64>,
}

impl TheoremCPrefix {
    pub fn verify(&self) -> Result<()> {
        check_primes(&self.primes, &BigUint::from(4u32))?;
        if self.margins.len() != self.primes.len() {
            return Err(fail("one margin per depth"));
        }
        for k in 1..=self.primes.len() {
            let m = log_sum(&self.primes[..k]) / 2f64.powi(k as i32 + 1) - 2f64.powi(2 * k as i32);
            if m != self.margins[k - 1] || !(m > 0.0) {
                return Err(fail(&format!("log(p_1 ... p_{k}) / 2^{} > 2^{}", k + 1, 2 * k)));
            }
        }
        Ok(())
    }
}

/// Smallest admissible prime at each depth `k = 1..=n`.
pub fn build_theorem_c_prefix(n: usize, caps: &Caps) -> Result<TheoremCPrefix> {
    let mut primes: Vec<BigUint> = Vec::with_capacity(n);
    let mut margins = Vec::with_capacity(n);
    for k in 1..=n {
        let need = 2f64.powi(3 * k as i32 + 1) - log_sum(&primes);
        let x = ceil_exp((need + margin(need)).max(0.0));
        let start = match primes.last() {
            Some(p) if *p >= x => p + 1u32,
            _ => x,
        };
        let p = next_prime_1_mod_4(&start, Some(&bound(caps)), caps.exec).ok_or_else(|| {
            Error::CapExhausted(format!("depth {k} needs a prime above e^{need:.1}, beyond 2^{}", caps.max_bits))
        })?;
        primes.push(p);
        margins.push(log_sum(&primes) / 2f64.powi(k as i32 + 1) - 2f64.powi(2 * k as i32));
    }
    let out = TheoremCPrefix { primes, margins };
    out.verify()?;
    Ok(out)
}

/// One block of [`build_two_mod_u_dense`].
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModBlock {
    pub alpha: f64,
    pub theta: f64,
    pub start: usize,
    /// `2^{m+1} / log(q_1 ... q_m p_1)`, required below `1 / (2m)`.
    pub index_value: f64,
    pub ratio: f64,
    pub achieved_gap: f64,
    pub window_bound: f64,
    pub doublings: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoModFamily {
    pub primes: Vec<BigUint>,
    pub blocks: Vec<TwoModBlock>,
}

impl TwoModFamily {
    pub fn verify(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return if self.primes.is_empty() { Ok(()) } else { Err(fail("primes without blocks")) };
        }
        if self.primes.first() != Some(&BigUint::from(5u32)) || self.primes.len() != 1 + 2 * self.blocks.len() {
            return Err(fail("family is 5 followed by two primes per block"));
        }
        check_primes(&self.primes[1..], &self.primes[0])?;
        for (i, b) in self.blocks.iter().enumerate() {
            let m = b.start;
            if m != 1 + 2 * i {
                return Err(fail("block offsets"));
            }
            let base = log_sum(&self.primes[..m + 1]);
            let idx = 2f64.powi(m as i32 + 1) / base;
            if idx != b.index_value || !(idx < 1.0 / (2 * m) as f64) {
                return Err(fail("2^{m+1} / log(q_1 ... q_m p_1) < 1/(2m)"));
            }
            let last = log_big(&self.primes[m + 1]);
            let ratio = last / (base + last);
            let gap = (ratio - b.alpha).abs();
            let wb = (b.doublings + 1) as f64 * LN2 / base;
            if ratio != b.ratio || gap != b.achieved_gap || wb != b.window_bound || !(gap <= wb) {
                return Err(fail("|ratio - alpha| <= log 2^{d+1} / log(q_1 ... q_m p_1)"));
            }
        }
        Ok(())
    }
}

/// Tower whose `|U|` values approach each target in `(1/2, 1)` while
/// `r(G) / sqrt(log d)` is pushed below `1/(2m)` at every block. The target
/// list is the growth schedule.
pub fn build_two_mod_u_dense(targets: &[f64], caps: &Caps) -> Result<TwoModFamily> {
    if targets.is_empty() {
        return Ok(TwoModFamily { primes: Vec::new(), blocks: Vec::new() });
    }
    if let Some(a) = targets.iter().find(|&&a| !(a > 0.5 && a < 1.0)) {
        return Err(Error::invalid("constructions", format!("targets must lie in (1/2, 1), got {a}")));
    }
    let mut primes = vec![BigUint::from(5u32)];
    let mut blocks = Vec::new();
    for &alpha in targets {
        let m = primes.len();
        let theta = alpha / (1.0 - alpha);
        let need = 2f64.powi(m as i32 + 1) * (2 * m) as f64 - log_sum(&primes);
        let x = ceil_exp((need + margin(need)).max(0.0));
        let last = primes.last().unwrap();
        let start = if *last >= x { last + 1u32 } else { x };
        let p1 = next_prime_1_mod_4(&start, Some(&bound(caps)), caps.exec)
            .ok_or_else(|| Error::CapExhausted(format!("first prime of block above 2^{}", caps.max_bits)))?;
        primes.push(p1);
        let base = log_sum(&primes);
        let (p2, doublings) = window_prime(theta * base, None, caps)?;
        let l2 = log_big(&p2);
        primes.push(p2);
        let ratio = l2 / (base + l2);
        blocks.push(TwoModBlock {
            alpha,
            theta,
            start: m,
            index_value: 2f64.powi(m as i32 + 1) / base,
            ratio,
            achieved_gap: (ratio - alpha).abs(),
            window_bound: (doublings + 1) as f64 * LN2 / base,
            doublings,
        });
    }
    let fam = TwoModFamily { primes, blocks };
    fam.verify()?;
    Ok(fam)
}

/// `Q(sqrt p_1, ..., sqrt p_k)` for `k = 1..=primes.len()`.
pub fn multiquadratic_tower(primes: &[BigUint]) -> Result<Vec<FieldModel>> {
    (1..=primes.len())
        .map(|k| FieldModel::multiquadratic(&primes[..k]))
        .collect()
}

/// Moderacy diagnostics for one field of a family.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FamilyReport {
    pub depth: usize,
    pub degree: usize,
    pub log_discriminant: f64,
    /// Number of square roots of the identity in the Galois group.
    pub r_g: u64,
    /// `r(G) / sqrt(log d_L)`.
    pub two_moderacy_index: f64,
    /// `max_{a, b != 1} |sum_chi (chi(a) - chi(b)) log A(chi)| / log d_L`.
    pub uniform_criterion: f64,
    /// Distinct values of `|U(a)|` over `a != 1`, ascending.
    pub u_range: Vec<f64>,
}

impl FamilyReport {
    pub fn max_abs_u(&self) -> f64 {
        self.u_range.last().copied().unwrap_or(0.0)
    }
}

/// One [`FamilyReport`] per field, in the given order.
pub fn moderacy_report(family: &[FieldModel]) -> Result<Vec<FamilyReport>> {
    family
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let g = f.group();
            let log_d = f.log_discriminant();
            let nl = n_l(f, None, ZeroSumMode::Asymptotic)?;
            let sums: Vec<f64> = g
                .elements()
                .skip(1)
                .map(|a| f.signed_conductor_sum(&a))
                .collect::<Result<_>>()?;
            let (lo, hi) = sums
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
            let mut u: Vec<f64> = sums.iter().map(|s| (s / nl).abs()).collect();
            u.sort_by(f64::total_cmp);
            u.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
            let r_g = g.square_roots_of_identity();
            Ok(FamilyReport {
                depth: i + 1,
                degree: f.degree(),
                log_discriminant: log_d,
                r_g,
                two_moderacy_index: r_g as f64 / log_d.sqrt(),
                uniform_criterion: if sums.is_empty() { 0.0 } else { (hi - lo) / log_d },
                u_range: u,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;
    use crate::race::RaceSpec;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn density_step_half() {
        let c = prime_density_step(&big(5), 0.5, &Caps::default()).unwrap();
        assert!((c.theta - 1.0).abs() < 1e-15);
        assert_eq!(c.primes[0], big(13));
        assert!(c.meets_gap_bound());
        c.verify().unwrap();
    }

    #[test]
    fn density_step_guards() {
        let caps = Caps::default();
        assert!(prime_density_step(&big(5), 0.0, &caps).unwrap_err().is_validation());
        assert!(prime_density_step(&big(5), 1.0, &caps).unwrap_err().is_validation());
        assert!(prime_density_step(&big(3), 0.5, &caps).unwrap_err().is_validation());
        // small alpha needs a long consecutive run
        let short = Caps { block_len: 2, ..caps };
        assert!(matches!(prime_density_step(&big(5), 0.05, &short), Err(Error::CapExhausted(_))));
        // alpha near 1 gives a very short block
        let c = prime_density_step(&big(5), 0.9, &caps).unwrap();
        assert_eq!(c.primes.len(), 2);
    }

    #[test]
    fn tampered_certificate_fails() {
        let mut c = prime_density_step(&big(5), 0.4, &Caps::default()).unwrap();
        c.alpha = 0.1;
        assert!(c.verify().is_err());
    }

    #[test]
    fn u_dense_matches_field_u() {
        let fam = build_u_dense_family(&[0.5], &Caps::default()).unwrap();
        fam.verify().unwrap();
        let f = FieldModel::multiquadratic(&fam.primes).unwrap();
        let n = fam.primes.len();
        let mut last = vec![0u32; n];
        last[n - 1] = 1;
        let spec = RaceSpec::asymptotic(f.clone(), vec![f.group().identity(), GroupElement(last.clone())]).unwrap();
        let u = spec.u(&GroupElement(last)).unwrap();
        assert!((u.abs() - fam.blocks[0].ratio).abs() < 1e-12);
        assert!(build_u_dense_family(&[], &Caps::default()).unwrap().primes.is_empty());
    }

    #[test]
    fn u_dense_two_targets() {
        let fam = build_u_dense_family(&[1.0 / 3.0, 2.0 / 3.0], &Caps::default()).unwrap();
        fam.verify().unwrap();
        assert!(fam.blocks.iter().all(|b| b.meets_gap_bound()));
    }

    #[test]
    fn b_dense_single_target() {
        for x in [0.5, 2.0] {
            let fam = build_b_dense_family(&[(x, x / 10.0)], &Caps::default()).unwrap();
            fam.verify().unwrap();
            let f = FieldModel::multiquadratic(&fam.primes).unwrap();
            let rep = &moderacy_report(&[f]).unwrap()[0];
            let n = fam.primes.len() as i32;
            let identity = 2f64.sqrt() * (2f64.powi(n) / log_sum(&fam.primes)).sqrt();
            assert!((rep.two_moderacy_index - identity).abs() < 1e-12 * identity);
        }
        assert!(build_b_dense_family(&[], &Caps::default()).unwrap().primes.is_empty());
        assert!(build_b_dense_family(&[(1.0, 2.0)], &Caps::default()).unwrap_err().is_validation());
    }

    #[test]
    fn theorem_c_prefix() {
        let c = build_theorem_c_prefix(2, &Caps::default()).unwrap();
        c.verify().unwrap();
        let reps = moderacy_report(&multiquadratic_tower(&c.primes).unwrap()).unwrap();
        for r in &reps {
            assert!(r.two_moderacy_index < 2f64.powi(-(r.depth as i32)));
        }
        assert!(build_theorem_c_prefix(0, &Caps::default()).unwrap().primes.is_empty());
        assert!(matches!(build_theorem_c_prefix(3, &Caps::default()), Err(Error::CapExhausted(_))));
    }

    #[test]
    fn two_mod_tower() {
        let fam = build_two_mod_u_dense(&[0.6, 0.55], &Caps::default()).unwrap();
        fam.verify().unwrap();
        let ends: Vec<FieldModel> = fam
            .blocks
            .iter()
            .map(|b| FieldModel::multiquadratic(&fam.primes[..b.start + 2]).unwrap())
            .collect();
        let reps = moderacy_report(&ends).unwrap();
        assert!(reps[1].two_moderacy_index < reps[0].two_moderacy_index);
        assert!(reps.iter().all(|r| r.max_abs_u() >= 0.5 - 1e-9));
    }

    #[test]
    fn report_basics() {
        let f = FieldModel::multiquadratic_u64(&[13]).unwrap();
        let r = &moderacy_report(&[f]).unwrap()[0];
        assert_eq!(r.r_g, 2);
        assert!((r.two_moderacy_index - 2.0 / 13f64.ln().sqrt()).abs() < 1e-15);
        assert_eq!(r.uniform_criterion, 0.0);
        // prime-order cyclic fields, totally ramified at one prime
        let fam: Vec<FieldModel> = [(7, vec![1, 6]), (11, vec![1, 10]), (31, vec![1, 5, 6, 25, 26, 30]), (13, vec![1, 5, 8, 12])]
            .into_iter()
            .map(|(q, h)| FieldModel::cyclotomic_subgroup(q, &h).unwrap())
            .collect();
        for r in moderacy_report(&fam).unwrap() {
            assert_eq!(r.uniform_criterion, 0.0);
            assert!(r.u_range.iter().all(|&u| (0.0..=1.0).contains(&u)));
        }
    }
}
