//! Set partitions and the alternating partition operator
//!
//! `Lambda_K(h)(s) = sum_{alpha in Pi_K} mu_alpha prod_{J in alpha} h(psi_J(s))`
//!
//! with `mu_alpha = (-1)^{|alpha|-1} (|alpha|-1)!` and `psi_J` zeroing every
//! coordinate outside `J`. For `|K| >= 2` and `h(0) = 1` the operator
//! vanishes whenever a coordinate of `s` indexed by `K` is zero.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_SET_SIZE: usize = 12;

/// A partition of an index set into disjoint nonempty blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetPartition {
    pub blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn size(&self) -> usize {
        self.blocks.len()
    }

    /// `(-1)^{|alpha|-1} (|alpha|-1)!`.
    pub fn moebius_weight(&self) -> f64 {
        moebius(self.blocks.len())
    }
}

fn moebius(blocks: usize) -> f64 {
    let f: f64 = (1..blocks).map(|k| k as f64).product();
    if blocks % 2 == 1 {
        f
    } else {
        -f
    }
}

type RgsTable = Arc<Vec<Vec<u8>>>;

fn rgs_cache() -> &'static RwLock<HashMap<usize, RgsTable>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, RgsTable>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Restricted-growth strings of length `n` in lexicographic order.
fn restricted_growth_strings(n: usize) -> RgsTable {
    if let Some(t) = rgs_cache().read().expect("cache lock").get(&n) {
        return Arc::clone(t);
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
    } else {
        let mut a = vec![0u8; n];
        let mut maxes = vec![0u8; n]; // max of a[0..=i]
        loop {
            out.push(a.clone());
            // rightmost position that can still grow
            let mut i = n - 1;
            loop {
                if i == 0 {
                    break;
                }
                if a[i] <= maxes[i - 1] {
                    break;
                }
                i -= 1;
            }
            if i == 0 {
                break;
            }
            a[i] += 1;
            maxes[i] = maxes[i - 1].max(a[i]);
            for j in i + 1..n {
                a[j] = 0;
                maxes[j] = maxes[i];
            }
        }
    }
    let table = Arc::new(out);
    rgs_cache()
        .write()
        .expect("cache lock")
        .insert(n, Arc::clone(&table));
    table
}

/// All partitions of `k` (distinct indices), deterministically ordered.
pub fn set_partitions(k: &[usize]) -> Result<Vec<SetPartition>> {
    check_index_set(k)?;
    let table = restricted_growth_strings(k.len());
    Ok(table
        .iter()
        .map(|rgs| {
            let nblocks = rgs.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
            let mut blocks = vec![Vec::new(); nblocks];
            for (pos, &b) in rgs.iter().enumerate() {
                blocks[b as usize].push(k[pos]);
            }
            SetPartition { blocks }
        })
        .collect())
}

fn check_index_set(k: &[usize]) -> Result<()> {
    if k.len() > MAX_SET_SIZE {
        return Err(Error::invalid(
            "partitions",
            format!("index sets above {MAX_SET_SIZE} elements are not enumerated"),
        ));
    }
    let mut sorted = k.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("partitions", "index set has repeated entries"));
    }
    Ok(())
}

/// Bell number `B_n` by the Bell triangle.
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row[0]
}

/// `Lambda_K(h)(s)` for an evaluator `h` on `r`-vectors.
pub fn lambda_operator<H>(h: H, k: &[usize], s: &[f64]) -> Result<Complex64>
where
    H: Fn(&[f64]) -> Result<Complex64>,
{
    check_index_set(k)?;
    if let Some(&bad) = k.iter().find(|&&i| i >= s.len()) {
        return Err(Error::invalid(
            "partitions",
            format!("index {bad} outside a vector of length {}", s.len()),
        ));
    }
    let table = restricted_growth_strings(k.len());
    // h at psi_J(s) for every block J, cached by bitmask over positions of K
    let mut memo: HashMap<u32, Complex64> = HashMap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut proj = vec![0.0; s.len()];
    for rgs in table.iter() {
        let nblocks = rgs.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
        let mut masks = vec![0u32; nblocks];
        for (pos, &b) in rgs.iter().enumerate() {
            masks[b as usize] |= 1 << pos;
        }
        let mut prod = Complex64::new(moebius(nblocks), 0.0);
        for m in masks {
            let v = match memo.get(&m) {
                Some(v) => *v,
                None => {
                    proj.iter_mut().for_each(|x| *x = 0.0);
                    for (pos, &i) in k.iter().enumerate() {
                        if m & (1 << pos) != 0 {
                            proj[i] = s[i];
                        }
                    }
                    let v = h(&proj)?;
                    memo.insert(m, v);
                    v
                }
            };
            prod *= v;
        }
        total += prod;
    }
    Ok(total)
}
