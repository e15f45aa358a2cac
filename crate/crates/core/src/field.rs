//! Abelian extensions of Q with computable Artin conductors.
//!
//! Two models are supported:
//!
//! * **Multiquadratic** `Q(sqrt p1, ..., sqrt pn)` with every `p_i = 1 mod 4`.
//!   The Galois group is `(Z/2)^n`, element coordinate `i` is `sigma_i`, and
//!   the inertia group at `p_i` is `<sigma_i>` with trivial higher
//!   ramification groups. Conductor exponents are evaluated from the inertia
//!   data with
//!   `n(chi, p) = (1/|G_0|) sum_{i>=0} sum_{b in G_i} (chi(1) - chi(b^-1))`.
//! * **Cyclotomic subgroup**: the fixed field of `H` in `Q(zeta_q)`, with
//!   group `(Z/q)^* / H`. Characters of the quotient are Dirichlet characters
//!   mod `q` trivial on `H`, and their conductor exponents are read off the
//!   attached primitive character.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::{AbelianGroup, CharacterIndex, GroupElement};
use crate::primes;

/// Tolerance on imaginary parts and integrality of exact character sums.
pub const SUM_TOL: f64 = 1e-9;

/// A prime that may exceed 64 bits (construction output).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrimeRepr {
    Small(u64),
    Big(String),
}

impl PrimeRepr {
    fn to_big(&self) -> Result<BigUint> {
        match self {
            PrimeRepr::Small(p) => Ok(BigUint::from(*p)),
            PrimeRepr::Big(s) => s
                .trim()
                .parse::<BigUint>()
                .map_err(|_| Error::invalid("field", format!("'{s}' is not an integer"))),
        }
    }

    fn from_big(p: &BigUint) -> Self {
        match p.to_u64() {
            Some(v) => PrimeRepr::Small(v),
            None => PrimeRepr::Big(p.to_string()),
        }
    }
}

/// Serializable description of a field, as accepted on the command line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FieldSpec {
    Multiquadratic {
        primes: Vec<PrimeRepr>,
    },
    Cyclotomic {
        modulus: u64,
        #[serde(default)]
        subgroup: Vec<u64>,
    },
}

impl FieldSpec {
    pub fn parse(text: &str) -> Result<FieldSpec> {
        serde_json::from_str(text)
            .map_err(|e| Error::invalid("field", format!("bad field spec: {e}")))
    }

    pub fn build(&self) -> Result<FieldModel> {
        match self {
            FieldSpec::Multiquadratic { primes } => {
                let ps = primes
                    .iter()
                    .map(PrimeRepr::to_big)
                    .collect::<Result<Vec<_>>>()?;
                FieldModel::multiquadratic(&ps)
            }
            FieldSpec::Cyclotomic { modulus, subgroup } => {
                FieldModel::cyclotomic_subgroup(*modulus, subgroup)
            }
        }
    }

    /// Canonical JSON text, stable across runs.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("field spec serializes")
    }
}

/// Ramification groups above one ramified prime, `G_0 ⊇ G_1 ⊇ ...`, listing
/// only the nontrivial ones.
#[derive(Clone, Debug)]
pub struct RamificationData {
    pub prime: BigUint,
    pub groups: Vec<Vec<GroupElement>>,
}

impl RamificationData {
    pub fn inertia_order(&self) -> usize {
        self.groups.first().map_or(1, |g| g.len())
    }

    /// True when the listed groups form a decreasing chain.
    pub fn is_decreasing(&self) -> bool {
        self.groups
            .windows(2)
            .all(|w| w[1].iter().all(|b| w[0].contains(b)))
    }
}

#[derive(Clone, Debug)]
pub enum FieldKind {
    Multiquadratic {
        primes: Vec<BigUint>,
    },
    CyclotomicSubgroup {
        modulus: u64,
        subgroup: Vec<u64>,
    },
}

#[derive(Clone, Debug)]
struct CyclotomicData {
    modulus: u64,
    /// Units mod q in ascending order with their image in the quotient group.
    units: Vec<(u64, GroupElement)>,
    /// Conrey index of the Dirichlet character attached to each character.
    conrey: Vec<u64>,
    /// `chi(-1)` for each character.
    parity: Vec<i32>,
}

#[derive(Clone, Debug)]
pub struct FieldModel {
    kind: FieldKind,
    group: AbelianGroup,
    ramified: Vec<BigUint>,
    log_ramified: Vec<f64>,
    /// `exponents[chi][j]` is `n(chi, ramified[j])`.
    exponents: Vec<Vec<u32>>,
    log_conductors: Vec<f64>,
    ramification: Vec<RamificationData>,
    cyclotomic: Option<CyclotomicData>,
    spec: FieldSpec,
}

impl FieldModel {
    pub fn multiquadratic(primes: &[BigUint]) -> Result<FieldModel> {
        if primes.is_empty() {
            return Err(Error::invalid("field", "multiquadratic field needs at least one prime"));
        }
        for w in primes.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::invalid(
                    "field",
                    format!("primes must be strictly increasing ({} >= {})", w[0], w[1]),
                ));
            }
        }
        for p in primes {
            if !primes::is_prime(p) {
                return Err(Error::invalid("field", format!("{p} is not prime")));
            }
            if (p % 4u32) != BigUint::from(1u32) {
                return Err(Error::invalid("field", format!("{p} is not 1 mod 4")));
            }
        }
        let n = primes.len();
        let group = AbelianGroup::new(&vec![2; n])?;
        let ramification: Vec<RamificationData> = (0..n)
            .map(|i| {
                let mut sigma = vec![0u32; n];
                sigma[i] = 1;
                RamificationData {
                    prime: primes[i].clone(),
                    groups: vec![vec![group.identity(), GroupElement(sigma)]],
                }
            })
            .collect();
        let exponents = group
            .characters()
            .map(|chi| {
                ramification
                    .iter()
                    .map(|r| conductor_exponent_from_ramification(&group, &chi, r))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = FieldSpec::Multiquadratic {
            primes: primes.iter().map(PrimeRepr::from_big).collect(),
        };
        Ok(Self::assemble(
            FieldKind::Multiquadratic {
                primes: primes.to_vec(),
            },
            group,
            primes.to_vec(),
            exponents,
            ramification,
            None,
            spec,
        ))
    }

    pub fn multiquadratic_u64(primes: &[u64]) -> Result<FieldModel> {
        let ps: Vec<BigUint> = primes.iter().map(|&p| BigUint::from(p)).collect();
        Self::multiquadratic(&ps)
    }

    pub fn cyclotomic_subgroup(modulus: u64, subgroup: &[u64]) -> Result<FieldModel> {
        if modulus < 3 {
            return Err(Error::invalid("field", "cyclotomic modulus must be at least 3"));
        }
        if modulus > 1_000_000 {
            return Err(Error::invalid("field", "cyclotomic modulus above 10^6 not supported"));
        }
        let q = modulus;
        let mut h: Vec<u64> = subgroup.to_vec();
        if h.is_empty() {
            h.push(1);
        }
        for &x in &h {
            if x >= q {
                return Err(Error::invalid("field", format!("subgroup element {x} not reduced mod {q}")));
            }
            if primes::gcd(x, q) != 1 {
                return Err(Error::invalid("field", format!("subgroup element {x} is not a unit mod {q}")));
            }
        }
        h.sort_unstable();
        h.dedup();
        for &x in &h {
            for &y in &h {
                let z = ((x as u128 * y as u128) % q as u128) as u64;
                if h.binary_search(&z).is_err() {
                    return Err(Error::invalid(
                        "field",
                        format!("subgroup not closed: {x}*{y} = {z} mod {q}"),
                    ));
                }
            }
        }

        let units = UnitGroup::new(q);
        // relations: n_j e_j and the exponent vectors of H
        let k = units.orders.len();
        let mut rel: Vec<Vec<i128>> = (0..k)
            .map(|j| {
                let mut row = vec![0i128; k];
                row[j] = units.orders[j] as i128;
                row
            })
            .collect();
        for &x in &h {
            rel.push(units.log(x).iter().map(|&e| e as i128).collect());
        }
        let (diag, qmat) = smith_normal_form(rel, k);
        let kept: Vec<usize> = (0..k).filter(|&i| diag[i] > 1).collect();
        if kept.is_empty() {
            return Err(Error::invalid(
                "field",
                "subgroup is the whole unit group; the fixed field is Q",
            ));
        }
        let factors: Vec<u32> = kept.iter().map(|&i| diag[i] as u32).collect();
        let group = AbelianGroup::new(&factors)?;
        let project = |exps: &[u32]| -> GroupElement {
            let coords: Vec<i64> = kept
                .iter()
                .map(|&i| {
                    let s: i128 = exps
                        .iter()
                        .enumerate()
                        .map(|(j, &x)| x as i128 * qmat[j][i])
                        .sum();
                    s.rem_euclid(diag[i]) as i64
                })
                .collect();
            group.reduce(&coords)
        };
        let unit_images: Vec<(u64, GroupElement)> = units
            .elements
            .iter()
            .map(|(u, exps)| (*u, project(exps)))
            .collect();

        let ramified: Vec<BigUint> = primes::factor_u64(q)
            .iter()
            .map(|&(p, _)| BigUint::from(p))
            .collect();
        let divisors = divisors_ascending(q);
        let mut exponents = Vec::with_capacity(group.order());
        let mut conrey = Vec::with_capacity(group.order());
        let mut parity = Vec::with_capacity(group.order());
        for chi in group.characters() {
            let values: Vec<(u64, Complex64)> = unit_images
                .iter()
                .map(|(u, g)| (*u, group.chi(&chi, g)))
                .collect();
            let conductor = divisors
                .iter()
                .copied()
                .find(|&f| {
                    values
                        .iter()
                        .filter(|(u, _)| u % f == 1 % f)
                        .all(|(_, v)| (v - Complex64::new(1.0, 0.0)).norm() < 1e-9)
                })
                .expect("q itself is always a valid modulus");
            let fac = primes::factor_u64(conductor);
            exponents.push(
                primes::factor_u64(q)
                    .iter()
                    .map(|&(p, _)| fac.iter().find(|&&(r, _)| r == p).map_or(0, |&(_, e)| e))
                    .collect(),
            );
            conrey.push(units.conrey_index(|u| {
                let g = &unit_images[unit_images.binary_search_by_key(&u, |x| x.0).unwrap()].1;
                group.chi(&chi, g)
            }));
            let minus_one = &unit_images
                [unit_images.binary_search_by_key(&(q - 1), |x| x.0).unwrap()]
            .1;
            parity.push(if group.chi(&chi, minus_one).re > 0.0 { 1 } else { -1 });
        }
        let spec = FieldSpec::Cyclotomic {
            modulus: q,
            subgroup: h.clone(),
        };
        Ok(Self::assemble(
            FieldKind::CyclotomicSubgroup {
                modulus: q,
                subgroup: h,
            },
            group,
            ramified,
            exponents,
            Vec::new(),
            Some(CyclotomicData {
                modulus: q,
                units: unit_images,
                conrey,
                parity,
            }),
            spec,
        ))
    }

    fn assemble(
        kind: FieldKind,
        group: AbelianGroup,
        ramified: Vec<BigUint>,
        exponents: Vec<Vec<u32>>,
        ramification: Vec<RamificationData>,
        cyclotomic: Option<CyclotomicData>,
        spec: FieldSpec,
    ) -> FieldModel {
        let log_ramified: Vec<f64> = ramified.iter().map(primes::log_big).collect();
        let log_conductors = exponents
            .iter()
            .map(|ex| {
                ex.iter()
                    .zip(&log_ramified)
                    .map(|(&e, &lp)| e as f64 * lp)
                    .sum()
            })
            .collect();
        // keep only primes that actually ramify
        let keep: Vec<usize> = (0..ramified.len())
            .filter(|&j| exponents.iter().any(|ex| ex[j] > 0))
            .collect();
        let ramified = keep.iter().map(|&j| ramified[j].clone()).collect();
        let log_ramified = keep.iter().map(|&j| log_ramified[j]).collect();
        let exponents = exponents
            .iter()
            .map(|ex| keep.iter().map(|&j| ex[j]).collect())
            .collect();
        FieldModel {
            kind,
            group,
            ramified,
            log_ramified,
            exponents,
            log_conductors,
            ramification,
            cyclotomic,
            spec,
        }
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn degree(&self) -> usize {
        self.group.order()
    }

    pub fn ramified_primes(&self) -> &[BigUint] {
        &self.ramified
    }

    /// Explicit ramification groups (multiquadratic model only).
    pub fn ramification_data(&self) -> &[RamificationData] {
        &self.ramification
    }

    /// Short stable identifier derived from the canonical spec.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.spec.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn char_index(&self, chi: &CharacterIndex) -> Result<usize> {
        self.group.check_character(chi)?;
        Ok(self.group.index_of(&chi.0))
    }

    /// `n(chi, p)`; zero when `p` is unramified.
    pub fn conductor_exponent(&self, chi: &CharacterIndex, p: &BigUint) -> Result<u32> {
        let i = self.char_index(chi)?;
        Ok(self
            .ramified
            .iter()
            .position(|r| r == p)
            .map_or(0, |j| self.exponents[i][j]))
    }

    /// `log A(chi) = sum_p n(chi, p) log p`.
    pub fn log_artin_conductor(&self, chi: &CharacterIndex) -> Result<f64> {
        Ok(self.log_conductors[self.char_index(chi)?])
    }

    /// `log A(chi)` for every character, in canonical order.
    pub fn log_conductors(&self) -> &[f64] {
        &self.log_conductors
    }

    /// Conductor as an integer, when it fits in 64 bits.
    pub fn conductor_u64(&self, chi: &CharacterIndex) -> Result<Option<u64>> {
        let i = self.char_index(chi)?;
        let mut acc: u64 = 1;
        for (p, &e) in self.ramified.iter().zip(&self.exponents[i]) {
            let Some(p) = p.to_u64() else {
                if e > 0 {
                    return Ok(None);
                }
                continue;
            };
            for _ in 0..e {
                match acc.checked_mul(p) {
                    Some(v) => acc = v,
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(acc))
    }

    /// `log d_L` as the sum of `log A(chi)` over all characters.
    pub fn log_discriminant(&self) -> f64 {
        sum_in_order(&self.log_conductors)
    }

    /// `sum_chi chi(a) log A(chi)` for `a != 1`.
    ///
    /// Each ramified prime contributes `log p` times the character sum
    /// `sum_chi chi(a) n(chi, p)`, which is an integer; the integer is
    /// recovered exactly before weighting, so equal sums compare equal.
    pub fn signed_conductor_sum(&self, a: &GroupElement) -> Result<f64> {
        self.group.check_element(a)?;
        if a.is_identity() {
            return Err(Error::invalid("field", "signed conductor sum needs a != 1"));
        }
        let mut total = 0.0;
        for (j, &lp) in self.log_ramified.iter().enumerate() {
            let s: Complex64 = self
                .group
                .characters()
                .zip(&self.exponents)
                .map(|(chi, ex)| self.group.chi(&chi, a) * ex[j] as f64)
                .sum();
            let rounded = s.re.round();
            if s.im.abs() > SUM_TOL || (s.re - rounded).abs() > SUM_TOL {
                return Err(Error::numerical(
                    "field",
                    format!("character sum {s} is not an integer; character table is inconsistent"),
                ));
            }
            total += rounded * lp;
        }
        Ok(total)
    }

    /// Canonical archive label of a character.
    ///
    /// Multiquadratic: bit string over prime positions (`"10"` is the
    /// character with `chi(sigma_1) = -1`, `chi(sigma_2) = 1`).
    /// Cyclotomic: Conrey label `"q.c"`.
    pub fn character_label(&self, chi: &CharacterIndex) -> Result<String> {
        let i = self.char_index(chi)?;
        Ok(match &self.cyclotomic {
            None => chi.0.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect(),
            Some(c) => format!("{}.{}", c.modulus, c.conrey[i]),
        })
    }

    /// Inverse of [`character_label`](Self::character_label); also accepts
    /// the `c:(...)` notation.
    pub fn parse_character_label(&self, label: &str) -> Result<CharacterIndex> {
        let label = label.trim();
        if label.starts_with("c:") {
            return self.group.parse_character(label);
        }
        self.group
            .characters()
            .find(|chi| self.character_label(chi).ok().as_deref() == Some(label))
            .ok_or_else(|| Error::invalid("field", format!("unknown character label '{label}'")))
    }

    /// Fundamental discriminant `D` when `chi` is real and nontrivial, so
    /// that the attached primitive character is the Kronecker symbol `(D/.)`.
    pub fn real_character_discriminant(&self, chi: &CharacterIndex) -> Result<Option<i64>> {
        let i = self.char_index(chi)?;
        if chi.is_trivial() || self.group.conj_character(chi) != *chi {
            return Ok(None);
        }
        let Some(cond) = self.conductor_u64(chi)? else {
            return Ok(None);
        };
        let Ok(cond) = i64::try_from(cond) else {
            return Ok(None);
        };
        let sign = match &self.cyclotomic {
            None => 1, // every p_i = 1 mod 4, so the character is even
            Some(c) => c.parity[i] as i64,
        };
        let d = sign * cond;
        Ok(primes::is_fundamental_discriminant(d).then_some(d))
    }

    /// Dirichlet-character value `chi(u)` for a unit `u` mod q (cyclotomic model).
    pub fn dirichlet_value(&self, chi: &CharacterIndex, u: u64) -> Option<Complex64> {
        let c = self.cyclotomic.as_ref()?;
        let pos = c.units.binary_search_by_key(&(u % c.modulus), |x| x.0).ok()?;
        Some(self.group.chi(chi, &c.units[pos].1))
    }

    /// Image of the unit `u` in the Galois group (cyclotomic model).
    pub fn unit_image(&self, u: u64) -> Option<GroupElement> {
        let c = self.cyclotomic.as_ref()?;
        let pos = c.units.binary_search_by_key(&(u % c.modulus), |x| x.0).ok()?;
        Some(c.units[pos].1.clone())
    }
}

impl fmt::Display for FieldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec.canonical())
    }
}

/// Left-to-right sum; shared by every place that needs `log d_L` so the
/// results agree bit for bit.
pub(crate) fn sum_in_order(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |acc, &x| acc + x)
}

/// `n(chi, p)` from the ramification groups.
fn conductor_exponent_from_ramification(
    group: &AbelianGroup,
    chi: &CharacterIndex,
    data: &RamificationData,
) -> Result<u32> {
    let g0 = data.inertia_order() as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for gi in &data.groups {
        for b in gi {
            s += Complex64::new(1.0, 0.0) - group.chi(chi, &group.inv(b));
        }
    }
    let n = s / g0;
    let rounded = n.re.round();
    if n.im.abs() > SUM_TOL || (n.re - rounded).abs() > SUM_TOL || rounded < 0.0 {
        return Err(Error::numerical(
            "field",
            format!("conductor exponent {n} is not a nonnegative integer"),
        ));
    }
    Ok(rounded as u32)
}

fn divisors_ascending(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=n).take_while(|d| d * d <= n).filter(|d| n % d == 0).flat_map(|d| [d, n / d]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// `(Z/q)^*` with the Conrey generators: for odd `p^k` the least primitive
/// root modulo `p^2`, for `2^e` the pair `-1, 5`.
struct UnitGroup {
    q: u64,
    /// Per cyclic factor: the prime-power modulus it lives on.
    moduli: Vec<u64>,
    orders: Vec<u64>,
    /// Generator lifted to a unit mod q (1 on the other prime powers).
    generators: Vec<u64>,
    /// Base generator mod its prime power (used for Conrey labels).
    local_generators: Vec<u64>,
    elements: Vec<(u64, Vec<u32>)>,
    logs: HashMap<u64, Vec<u32>>,
}

impl UnitGroup {
    fn new(q: u64) -> UnitGroup {
        let mut moduli = Vec::new();
        let mut orders = Vec::new();
        let mut local = Vec::new();
        for (p, k) in primes::factor_u64(q) {
            let pk = p.pow(k);
            if p == 2 {
                if k >= 2 {
                    moduli.push(pk);
                    orders.push(2);
                    local.push(pk - 1);
                }
                if k >= 3 {
                    moduli.push(pk);
                    orders.push(1 << (k - 2));
                    local.push(5);
                }
            } else {
                let g = primes::primitive_root_prime_power(p, k.max(2)) % pk;
                moduli.push(pk);
                orders.push(pk / p * (p - 1));
                local.push(g);
            }
        }
        let generators: Vec<u64> = moduli
            .iter()
            .zip(&local)
            .map(|(&m, &g)| crt_lift(q, m, g))
            .collect();
        let mut elements = Vec::new();
        let total: u64 = orders.iter().product();
        for idx in 0..total {
            let mut rem = idx;
            let mut exps = vec![0u32; orders.len()];
            for j in (0..orders.len()).rev() {
                exps[j] = (rem % orders[j]) as u32;
                rem /= orders[j];
            }
            let u = exps
                .iter()
                .zip(&generators)
                .fold(1 % q, |acc, (&e, &g)| mulmod(acc, powmod(g, e as u64, q), q));
            elements.push((u, exps));
        }
        elements.sort_unstable();
        let logs = elements.iter().cloned().collect();
        UnitGroup {
            q,
            moduli,
            orders,
            generators,
            local_generators: local,
            elements,
            logs,
        }
    }

    fn log(&self, u: u64) -> Vec<u32> {
        self.logs[&u].clone()
    }

    /// Conrey index of the Dirichlet character with the given values.
    fn conrey_index(&self, value: impl Fn(u64) -> Complex64) -> u64 {
        let q = self.q;
        // per prime-power part: accumulate c mod p^k
        let mut parts: BTreeMap<u64, u64> = BTreeMap::new();
        for j in 0..self.generators.len() {
            let v = value(self.generators[j]);
            let n = self.orders[j];
            let k = ((v.arg() / (2.0 * std::f64::consts::PI) * n as f64).round() as i64)
                .rem_euclid(n as i64) as u64;
            let m = self.moduli[j];
            let entry = parts.entry(m).or_insert(1 % m);
            // on 2-power parts the -1 factor contributes -1, the 5 factor 5^k
            let factor = powmod(self.local_generators[j], k, m);
            *entry = mulmod(*entry, factor, m);
        }
        parts
            .iter()
            .fold(1 % q, |acc, (&m, &c)| mulmod(acc, crt_lift(q, m, c), q))
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// The unit mod `q` that is `x` mod `m` and 1 mod `q/m` (`gcd(m, q/m) = 1`).
fn crt_lift(q: u64, m: u64, x: u64) -> u64 {
    let rest = q / m;
    (0..m)
        .map(|t| 1 + t * rest)
        .find(|&u| u % m == x % m)
        .map(|u| u % q)
        .expect("CRT lift exists for coprime parts")
}

/// Smith normal form of an integer matrix with `cols` columns. Returns the
/// diagonal (length `cols`) and the unimodular column transform `Q`.
fn smith_normal_form(mut a: Vec<Vec<i128>>, cols: usize) -> (Vec<i128>, Vec<Vec<i128>>) {
    let rows = a.len();
    let mut q: Vec<Vec<i128>> = (0..cols)
        .map(|i| (0..cols).map(|j| i128::from(i == j)).collect())
        .collect();
    let mut diag = vec![0i128; cols];
    for t in 0..cols.min(rows) {
        loop {
            // pivot: smallest nonzero magnitude in the trailing block
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if a[i][j] != 0
                        && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                break;
            };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            for row in q.iter_mut() {
                row.swap(t, pj);
            }
            let pivot = a[t][t];
            let mut clean = true;
            for i in (t + 1)..rows {
                let f = a[i][t] / pivot;
                if f != 0 {
                    for j in t..cols {
                        a[i][j] -= f * a[t][j];
                    }
                }
                if a[i][t] != 0 {
                    clean = false;
                }
            }
            for j in (t + 1)..cols {
                let f = a[t][j] / pivot;
                if f != 0 {
                    for row in a.iter_mut() {
                        row[j] -= f * row[t];
                    }
                    for row in q.iter_mut() {
                        row[j] -= f * row[t];
                    }
                }
                if a[t][j] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility of the trailing block
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % pivot != 0));
            if let Some(i) = bad {
                for j in t..cols {
                    let v = a[i][j];
                    a[t][j] += v;
                }
                continue;
            }
            break;
        }
        if t < rows {
            if a[t][t] < 0 {
                for row in a.iter_mut() {
                    row[t] = -row[t];
                }
                for row in q.iter_mut() {
                    row[t] = -row[t];
                }
            }
            diag[t] = a[t][t];
        }
    }
    (diag, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mq(ps: &[u64]) -> FieldModel {
        FieldModel::multiquadratic_u64(ps).unwrap()
    }

    fn chi(v: &[u32]) -> CharacterIndex {
        CharacterIndex(v.to_vec())
    }

    #[test]
    fn multiquadratic_basics() {
        let f = mq(&[5, 13]);
        assert_eq!(f.degree(), 4);
        let ram: Vec<u64> = f.ramified_primes().iter().map(|p| p.to_u64().unwrap()).collect();
        assert_eq!(ram, vec![5, 13]);
        assert!(f.ramification_data().iter().all(|r| r.is_decreasing()));
        let q = mq(&[5]);
        assert!((q.log_discriminant() - 5f64.ln()).abs() < 1e-15);
        assert!(FieldModel::multiquadratic_u64(&[13, 5]).is_err());
        assert!(FieldModel::multiquadratic_u64(&[5, 5]).is_err());
        assert!(FieldModel::multiquadratic_u64(&[7]).is_err());
        assert!(FieldModel::multiquadratic_u64(&[21]).is_err());
    }

    #[test]
    fn multiquadratic_conductors() {
        let f = mq(&[5, 13]);
        let five = BigUint::from(5u32);
        assert_eq!(f.conductor_exponent(&chi(&[1, 0]), &five).unwrap(), 1);
        assert_eq!(f.conductor_exponent(&chi(&[0, 1]), &five).unwrap(), 0);
        assert_eq!(f.conductor_exponent(&chi(&[0, 0]), &five).unwrap(), 0);
        assert_eq!(f.conductor_exponent(&chi(&[1, 1]), &BigUint::from(7u32)).unwrap(), 0);
        assert!((f.log_artin_conductor(&chi(&[1, 1])).unwrap() - 65f64.ln()).abs() < 1e-14);
        assert_eq!(f.log_artin_conductor(&chi(&[0, 0])).unwrap(), 0.0);
        assert!((f.log_discriminant() - 2.0 * 65f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn multiquadratic_signed_sums() {
        let f = mq(&[5, 13]);
        let s1 = f.signed_conductor_sum(&GroupElement(vec![1, 0])).unwrap();
        assert!((s1 + 2.0 * 5f64.ln()).abs() < 1e-13);
        let total: f64 = f
            .group()
            .elements()
            .skip(1)
            .map(|a| f.signed_conductor_sum(&a).unwrap())
            .sum();
        assert!((total + f.log_discriminant()).abs() < 1e-12);
        assert!(f.signed_conductor_sum(&GroupElement(vec![0, 0])).is_err());
    }

    #[test]
    fn cyclotomic_mod4() {
        let f = FieldModel::cyclotomic_subgroup(4, &[1]).unwrap();
        assert_eq!(f.group().factor_orders(), &[2]);
        let nt = chi(&[1]);
        assert_eq!(f.conductor_u64(&nt).unwrap(), Some(4));
        assert!((f.log_artin_conductor(&nt).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(f.character_label(&nt).unwrap(), "4.3");
        assert_eq!(f.real_character_discriminant(&nt).unwrap(), Some(-4));
    }

    #[test]
    fn cyclotomic_mod5() {
        let f = FieldModel::cyclotomic_subgroup(5, &[]).unwrap();
        assert_eq!(f.degree(), 4);
        assert!((f.log_discriminant() - 3.0 * 5f64.ln()).abs() < 1e-14);
        let sub = FieldModel::cyclotomic_subgroup(5, &[1, 4]).unwrap();
        let mut a: Vec<f64> = sub.log_conductors().to_vec();
        let mut b: Vec<f64> = mq(&[5]).log_conductors().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        // Conrey labels of the characters mod 5: 5.1, 5.2, 5.4, 5.3
        let mut labels: Vec<String> = f
            .group()
            .characters()
            .map(|c| f.character_label(&c).unwrap())
            .collect();
        labels.sort();
        assert_eq!(labels, vec!["5.1", "5.2", "5.3", "5.4"]);
        let real = f.parse_character_label("5.4").unwrap();
        assert_eq!(f.real_character_discriminant(&real).unwrap(), Some(5));
    }

    #[test]
    fn cyclotomic_mod9_order3() {
        let f = FieldModel::cyclotomic_subgroup(9, &[1, 8]).unwrap();
        assert_eq!(f.degree(), 3);
        let three = BigUint::from(3u32);
        for c in f.group().characters().skip(1) {
            assert_eq!(f.conductor_exponent(&c, &three).unwrap(), 2);
        }
    }

    #[test]
    fn cyclotomic_validation() {
        assert!(FieldModel::cyclotomic_subgroup(2, &[1]).is_err());
        assert!(FieldModel::cyclotomic_subgroup(12, &[1, 5, 7]).is_err()); // not closed
        assert!(FieldModel::cyclotomic_subgroup(12, &[1, 2]).is_err()); // not a unit
        assert!(FieldModel::cyclotomic_subgroup(5, &[1, 2, 3, 4]).is_err()); // fixed field Q
        let f = FieldModel::cyclotomic_subgroup(60, &[1, 49]).unwrap();
        assert_eq!(f.degree(), 8);
    }

    #[test]
    fn conrey_labels_mod_8_and_60() {
        let f = FieldModel::cyclotomic_subgroup(8, &[1]).unwrap();
        let mut labels: Vec<String> = f
            .group()
            .characters()
            .map(|c| f.character_label(&c).unwrap())
            .collect();
        labels.sort();
        assert_eq!(labels, vec!["8.1", "8.3", "8.5", "8.7"]);
        // 8.5 is the primitive even character (8/.), 8.3 the odd one (-8/.)
        let c5 = f.parse_character_label("8.5").unwrap();
        assert_eq!(f.real_character_discriminant(&c5).unwrap(), Some(8));
        let c3 = f.parse_character_label("8.3").unwrap();
        assert_eq!(f.real_character_discriminant(&c3).unwrap(), Some(-8));
        let c7 = f.parse_character_label("8.7").unwrap();
        assert_eq!(f.conductor_u64(&c7).unwrap(), Some(4));
        // Dirichlet values agree with Kronecker symbols
        for u in [1u64, 3, 5, 7] {
            let v = f.dirichlet_value(&c5, u).unwrap();
            assert!((v.re - primes::kronecker(8, u) as f64).abs() < 1e-12);
        }
        let g = FieldModel::cyclotomic_subgroup(60, &[]).unwrap();
        assert_eq!(g.degree(), 16);
        for c in g.group().characters() {
            let label = g.character_label(&c).unwrap();
            let cr: u64 = label.split('.').nth(1).unwrap().parse().unwrap();
            assert_eq!(primes::gcd(cr, 60), 1);
            if let Some(d) = g.real_character_discriminant(&c).unwrap() {
                for u in [1u64, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 49, 53, 59] {
                    let v = g.dirichlet_value(&c, u).unwrap();
                    assert!((v.re - primes::kronecker(d, u) as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn conductor_discriminant_small_cyclotomics() {
        // discriminants of Q(zeta_q): q=7 -> 7^5, q=8 -> 2^8, q=9 -> 3^9, q=12 -> 144
        for (q, d) in [(7u64, 5.0 * 7f64.ln()), (8, 8.0 * 2f64.ln()), (9, 9.0 * 3f64.ln()), (12, 144f64.ln())] {
            let f = FieldModel::cyclotomic_subgroup(q, &[]).unwrap();
            assert!((f.log_discriminant() - d).abs() < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn negativity_across_models() {
        let fields = vec![
            mq(&[5, 13, 17]),
            FieldModel::cyclotomic_subgroup(60, &[1, 49]).unwrap(),
            FieldModel::cyclotomic_subgroup(16, &[]).unwrap(),
            FieldModel::cyclotomic_subgroup(63, &[]).unwrap(),
        ];
        for f in &fields {
            for a in f.group().elements().skip(1) {
                assert!(f.signed_conductor_sum(&a).unwrap() <= SUM_TOL);
            }
        }
    }

    #[test]
    fn tower_stability() {
        // |signed sum over L_{n+1} of a lift| <= 2 |G_{n+1}| log d_{L_n}
        let primes = [5u64, 13, 17, 29, 37];
        for depth in 1..=4 {
            let small = mq(&primes[..depth]);
            let big = mq(&primes[..depth + 1]);
            for a in small.group().elements().skip(1) {
                let mut lift = a.0.clone();
                lift.push(0);
                let s = big.signed_conductor_sum(&GroupElement(lift)).unwrap();
                assert!(s.abs() <= 2.0 * big.degree() as f64 * small.log_discriminant());
            }
        }
    }

    #[test]
    fn spec_parsing() {
        let s = FieldSpec::parse(r#"{"type":"multiquadratic","primes":[5,13,17]}"#).unwrap();
        assert_eq!(s.build().unwrap().degree(), 8);
        let s = FieldSpec::parse(r#"{"type":"cyclotomic","modulus":60,"subgroup":[1,49]}"#).unwrap();
        let f = s.build().unwrap();
        assert_eq!(f.spec(), &s);
        let big = FieldSpec::parse(
            r#"{"type":"multiquadratic","primes":[5,"340282366920938463463374607431768211457"]}"#,
        );
        // 2^128 + 1 is composite
        assert!(big.unwrap().build().is_err());
        assert!(FieldSpec::parse(r#"{"type":"quartic"}"#).is_err());
        assert_eq!(mq(&[5, 13]).fingerprint().len(), 16);
        assert_ne!(mq(&[5, 13]).fingerprint(), mq(&[5, 17]).fingerprint());
    }

    #[test]
    fn smith_form_z12() {
        // Z^2 / <(4,0),(0,3)> = Z/12 -> invariant factors (1, 12)
        let (d, _) = smith_normal_form(vec![vec![4, 0], vec![0, 3]], 2);
        let mut d: Vec<i128> = d.into_iter().filter(|&x| x != 1).collect();
        d.sort();
        assert_eq!(d, vec![12]);
    }
}
