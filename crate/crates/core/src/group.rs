//! Finite abelian groups given by a cyclic decomposition `Z/n1 x ... x Z/nk`.
//!
//! Elements and characters share the exponent-vector representation and are
//! enumerated lexicographically (first factor most significant). Character
//! values come from a single table of `e`-th roots of unity, `e` being the
//! exponent of the group, with the values `1, i, -1, -i` stored exactly.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for unit-modulus and orthogonality checks on character values.
pub const CHARACTER_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement(pub Vec<u32>);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharacterIndex(pub Vec<u32>);

#[derive(Clone, Debug)]
pub struct AbelianGroup {
    factor_orders: Vec<u32>,
    order: usize,
    exponent: u32,
    roots: Vec<Complex64>,
}

impl PartialEq for AbelianGroup {
    fn eq(&self, other: &Self) -> bool {
        self.factor_orders == other.factor_orders
    }
}

impl AbelianGroup {
    pub fn new(factor_orders: &[u32]) -> Result<Self> {
        if factor_orders.is_empty() {
            return Err(Error::invalid("group", "empty factor list"));
        }
        if let Some(&n) = factor_orders.iter().find(|&&n| n < 2) {
            return Err(Error::invalid(
                "group",
                format!("factor order {n} is below 2"),
            ));
        }
        let order = factor_orders
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n as usize))
            .ok_or_else(|| Error::invalid("group", "group order overflows"))?;
        let exponent = factor_orders.iter().fold(1u32, |acc, &n| acc.lcm(&n));
        let roots = (0..exponent).map(|k| root_of_unity(k, exponent)).collect();
        Ok(AbelianGroup {
            factor_orders: factor_orders.to_vec(),
            order,
            exponent,
            roots,
        })
    }

    pub fn factor_orders(&self) -> &[u32] {
        &self.factor_orders
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.factor_orders.len()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.rank()])
    }

    pub fn trivial_character(&self) -> CharacterIndex {
        CharacterIndex(vec![0; self.rank()])
    }

    /// Lexicographic position of an exponent vector.
    pub fn index_of(&self, exps: &[u32]) -> usize {
        exps.iter()
            .zip(&self.factor_orders)
            .fold(0usize, |acc, (&x, &n)| acc * n as usize + x as usize)
    }

    fn exps_at(&self, mut index: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.rank()];
        for (slot, &n) in out.iter_mut().zip(&self.factor_orders).rev() {
            *slot = (index % n as usize) as u32;
            index /= n as usize;
        }
        out
    }

    pub fn element(&self, index: usize) -> GroupElement {
        GroupElement(self.exps_at(index))
    }

    pub fn character(&self, index: usize) -> CharacterIndex {
        CharacterIndex(self.exps_at(index))
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.order).map(|i| self.element(i))
    }

    pub fn characters(&self) -> impl Iterator<Item = CharacterIndex> + '_ {
        (0..self.order).map(|i| self.character(i))
    }

    fn check_shape(&self, exps: &[u32], what: &str) -> Result<()> {
        if exps.len() != self.rank() {
            return Err(Error::invalid(
                "group",
                format!(
                    "{what} has {} coordinates, group has rank {}",
                    exps.len(),
                    self.rank()
                ),
            ));
        }
        for (&x, &n) in exps.iter().zip(&self.factor_orders) {
            if x >= n {
                return Err(Error::invalid(
                    "group",
                    format!("{what} coordinate {x} not reduced mod {n}"),
                ));
            }
        }
        Ok(())
    }

    pub fn check_element(&self, g: &GroupElement) -> Result<()> {
        self.check_shape(&g.0, "element")
    }

    pub fn check_character(&self, chi: &CharacterIndex) -> Result<()> {
        self.check_shape(&chi.0, "character")
    }

    /// Reduce an arbitrary integer vector componentwise.
    pub fn reduce(&self, exps: &[i64]) -> GroupElement {
        GroupElement(
            exps.iter()
                .zip(&self.factor_orders)
                .map(|(&x, &n)| x.rem_euclid(n as i64) as u32)
                .collect(),
        )
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.factor_orders)
                .map(|((&x, &y), &n)| (x + y) % n)
                .collect(),
        )
    }

    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&self.factor_orders)
                .map(|(&x, &n)| (n - x) % n)
                .collect(),
        )
    }

    /// `a * b^{-1}`.
    pub fn div(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.mul(a, &self.inv(b))
    }

    pub fn conj_character(&self, chi: &CharacterIndex) -> CharacterIndex {
        CharacterIndex(self.inv(&GroupElement(chi.0.clone())).0)
    }

    /// Position of `chi(g)` in the root table: `sum_j c_j g_j e / n_j mod e`.
    fn phase(&self, chi: &[u32], g: &[u32]) -> usize {
        let e = self.exponent as u64;
        let k = chi
            .iter()
            .zip(g)
            .zip(&self.factor_orders)
            .fold(0u64, |acc, ((&c, &x), &n)| {
                (acc + (c as u64 * x as u64 % n as u64) * (e / n as u64)) % e
            });
        k as usize
    }

    /// `exp(2 pi i sum_j chi_j g_j / n_j)`.
    pub fn character_value(&self, chi: &CharacterIndex, g: &GroupElement) -> Result<Complex64> {
        self.check_character(chi)?;
        self.check_element(g)?;
        Ok(self.chi(chi, g))
    }

    /// Unchecked character value for hot loops over validated indices.
    pub(crate) fn chi(&self, chi: &CharacterIndex, g: &GroupElement) -> Complex64 {
        self.roots[self.phase(&chi.0, &g.0)]
    }

    /// Full character table, `table[chi_index][element_index]`.
    pub fn character_table(&self) -> Vec<Vec<Complex64>> {
        let elements: Vec<_> = self.elements().collect();
        self.characters()
            .map(|chi| elements.iter().map(|g| self.chi(&chi, g)).collect())
            .collect()
    }

    /// The character as a class function.
    pub fn character_function(&self, chi: &CharacterIndex) -> ClassFunction {
        ClassFunction {
            values: self.elements().map(|g| self.chi(chi, &g)).collect(),
        }
    }

    /// `r_G(g) = #{x : x^2 = g}`, indexed by element position.
    pub fn square_root_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.order];
        for x in self.elements() {
            let sq = self.mul(&x, &x);
            counts[self.index_of(&sq.0)] += 1;
        }
        counts
    }

    /// `r(G)`, the number of square roots of the identity.
    pub fn square_roots_of_identity(&self) -> u64 {
        self.square_root_counts()[0]
    }

    /// `(1/|G|) sum_x f(x) conj(h(x))`.
    pub fn inner_product(&self, f: &ClassFunction, h: &ClassFunction) -> Result<Complex64> {
        if f.values.len() != self.order || h.values.len() != self.order {
            return Err(Error::invalid(
                "group",
                "class function not defined on every group element",
            ));
        }
        let s: Complex64 = f
            .values
            .iter()
            .zip(&h.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s / self.order as f64)
    }

    /// `t_{a,b} = |G| 1_a - |G| 1_b`.
    pub fn race_class_function(&self, a: &GroupElement, b: &GroupElement) -> Result<ClassFunction> {
        self.check_element(a)?;
        self.check_element(b)?;
        if a == b {
            return Err(Error::invalid("group", "race classes must be distinct"));
        }
        let mut values = vec![Complex64::new(0.0, 0.0); self.order];
        let n = self.order as f64;
        values[self.index_of(&a.0)] = Complex64::new(n, 0.0);
        values[self.index_of(&b.0)] = Complex64::new(-n, 0.0);
        Ok(ClassFunction { values })
    }

    /// `<t_{a,b}, chi> = conj(chi(a)) - conj(chi(b))`, evaluated without the
    /// averaging sum.
    pub fn race_coefficient(
        &self,
        a: &GroupElement,
        b: &GroupElement,
        chi: &CharacterIndex,
    ) -> Complex64 {
        self.chi(chi, a).conj() - self.chi(chi, b).conj()
    }

    pub fn parse_element(&self, s: &str) -> Result<GroupElement> {
        let g: GroupElement = s.parse()?;
        self.check_element(&g)?;
        Ok(g)
    }

    pub fn parse_character(&self, s: &str) -> Result<CharacterIndex> {
        let c: CharacterIndex = s.parse()?;
        self.check_character(&c)?;
        Ok(c)
    }
}

fn root_of_unity(k: u32, n: u32) -> Complex64 {
    // exact values at the quarter turns
    let k4 = 4 * k as u64;
    if k4 % n as u64 == 0 {
        return match (k4 / n as u64) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
    Complex64::new(theta.cos(), theta.sin())
}

/// A complex-valued function on the group, indexed by element position.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassFunction {
    pub values: Vec<Complex64>,
}

impl ClassFunction {
    pub fn zero(order: usize) -> Self {
        ClassFunction {
            values: vec![Complex64::new(0.0, 0.0); order],
        }
    }

    pub fn constant(order: usize, c: f64) -> Self {
        ClassFunction {
            values: vec![Complex64::new(c, 0.0); order],
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        ClassFunction {
            values: values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn add(&self, other: &ClassFunction) -> ClassFunction {
        ClassFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> ClassFunction {
        ClassFunction {
            values: self.values.iter().map(|a| a * c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm() == 0.0)
    }
}

fn parse_tuple(s: &str, prefix: char) -> Result<Vec<u32>> {
    let bad = || Error::invalid("group", format!("cannot parse '{s}' as {prefix}:(x1,...,xk)"));
    let rest = s.trim().strip_prefix(prefix).ok_or_else(bad)?;
    let rest = rest.strip_prefix(':').ok_or_else(bad)?;
    let inner = rest
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(bad)?;
    inner
        .split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|_| bad()))
        .collect()
}

fn fmt_tuple(f: &mut fmt::Formatter<'_>, prefix: char, xs: &[u32]) -> fmt::Result {
    write!(f, "{prefix}:(")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

impl FromStr for GroupElement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_tuple(s, 'e').map(GroupElement)
    }
}

impl FromStr for CharacterIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_tuple(s, 'c').map(CharacterIndex)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_tuple(f, 'e', &self.0)
    }
}

impl fmt::Display for CharacterIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_tuple(f, 'c', &self.0)
    }
}

impl CharacterIndex {
    pub fn is_trivial(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }
}
