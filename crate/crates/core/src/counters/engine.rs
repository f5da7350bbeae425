//! Enumeration backends.
//!
//! Both backends work on a [`Prepared`] system: per-variable tables of
//! `σ_i f_j(x)`, already reduced mod `q` when there is a modulus. The
//! search space is cut into prefix blocks processed in parallel; block
//! results are merged in block order so totals and witness lists do not
//! depend on the worker count.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::system::{CongruenceSystem, Modulus};
use super::{Caps, CountError};

/// Integer sums must stay below this in magnitude.
const INT_SUM_LIMIT: i128 = 1 << 125;

/// Prefix blocks per parallel pass, at least.
const MIN_BLOCKS: u128 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ring {
    Mod(i128),
    Int,
}

impl Ring {
    #[inline(always)]
    fn add(self, a: i128, b: i128) -> i128 {
        match self {
            Ring::Mod(q) => {
                let s = a + b;
                if s >= q {
                    s - q
                } else {
                    s
                }
            }
            Ring::Int => a + b,
        }
    }

    #[inline(always)]
    fn neg(self, a: i128) -> i128 {
        match self {
            Ring::Mod(q) => {
                if a == 0 {
                    0
                } else {
                    q - a
                }
            }
            Ring::Int => -a,
        }
    }
}

pub(crate) struct Prepared {
    pub ring: Ring,
    pub m: usize,
    pub size: usize,
    /// `contrib[i][x*m + j] = σ_i f_j(x)`
    pub contrib: Vec<Vec<i128>>,
    pub targets: Vec<i128>,
}

impl Prepared {
    pub fn new(system: &CongruenceSystem) -> Result<Self, CountError> {
        let values = system.value_table()?;
        let m = system.equations();
        let size = system.domain().len();
        let ring = match system.modulus() {
            Modulus::Prime(q) => Ring::Mod(q.get() as i128),
            Modulus::Integers => Ring::Int,
        };
        let contrib: Vec<Vec<i128>> = system
            .signs()
            .iter()
            .map(|&s| match system.modulus() {
                Modulus::Prime(q) => {
                    let s = q.reduce(s as i128);
                    values.iter().map(|&v| q.mul(s, v as u64) as i128).collect()
                }
                Modulus::Integers => values.iter().map(|&v| if s > 0 { v } else { -v }).collect(),
            })
            .collect();
        if ring == Ring::Int {
            let mut bound: i128 = system.targets().iter().map(|t| t.abs()).max().unwrap_or(0);
            for table in &contrib {
                let worst = table.iter().map(|v| v.abs()).max().unwrap_or(0);
                bound = bound.checked_add(worst).ok_or(CountError::Overflow)?;
            }
            if bound >= INT_SUM_LIMIT {
                return Err(CountError::Overflow);
            }
        }
        Ok(Prepared {
            ring,
            m,
            size,
            contrib,
            targets: system.targets().to_vec(),
        })
    }

    pub fn arity(&self) -> usize {
        self.contrib.len()
    }

    /// `|X|^t`, or `None` past `u128`.
    pub fn space(&self, vars: usize) -> Option<u128> {
        (self.size as u128).checked_pow(vars as u32)
    }

    #[inline]
    fn row<'a>(&self, table: &'a [i128], x: usize) -> &'a [i128] {
        &table[x * self.m..(x + 1) * self.m]
    }
}

/// Visits every tuple over `tables` in lexicographic order, passing the
/// running sums `start + Σ tables[l][idx[l]]` and the indices.
fn enumerate<F: FnMut(&[i128], &[usize])>(
    p: &Prepared,
    tables: &[&[i128]],
    start: &[i128],
    mut visit: F,
) {
    let m = p.m;
    let depth = tables.len();
    if depth == 0 {
        visit(start, &[]);
        return;
    }
    let mut sums = vec![0i128; (depth + 1) * m];
    sums[..m].copy_from_slice(start);
    let mut idx = vec![0usize; depth];
    let mut level = 0;
    loop {
        for l in level..depth {
            let row = p.row(tables[l], idx[l]);
            let (head, tail) = sums.split_at_mut((l + 1) * m);
            let prev = &head[l * m..];
            for j in 0..m {
                tail[j] = p.ring.add(prev[j], row[j]);
            }
        }
        visit(&sums[depth * m..], &idx);
        let mut l = depth;
        loop {
            if l == 0 {
                return;
            }
            l -= 1;
            idx[l] += 1;
            if idx[l] < p.size {
                break;
            }
            idx[l] = 0;
        }
        level = l;
    }
}

/// Number of leading variables used to split `vars` variables into blocks.
fn prefix_depth(size: usize, vars: usize) -> usize {
    let mut d = 0;
    let mut blocks: u128 = 1;
    while d < vars && blocks < MIN_BLOCKS {
        blocks *= size as u128;
        d += 1;
    }
    d
}

fn decode_prefix(mut b: u128, size: usize, depth: usize) -> Vec<usize> {
    let mut out = vec![0; depth];
    for slot in out.iter_mut().rev() {
        *slot = (b % size as u128) as usize;
        b /= size as u128;
    }
    out
}

/// Runs `visit` on every full solution tuple (domain indices), folding
/// per-block accumulators and merging them in block order.
pub(crate) fn fold_solutions<A, Make, Visit, Merge>(
    p: &Prepared,
    caps: &Caps,
    make: Make,
    visit: Visit,
    merge: Merge,
) -> Result<A, CountError>
where
    A: Send,
    Make: Fn() -> A + Sync,
    Visit: Fn(&mut A, &[usize]) + Sync,
    Merge: Fn(A, A) -> A,
{
    let t = p.arity();
    let space = p.space(t).ok_or(CountError::EnumerationCap {
        needed: None,
        cap: caps.enumeration,
    })?;
    if space > caps.enumeration {
        return Err(CountError::EnumerationCap {
            needed: Some(space),
            cap: caps.enumeration,
        });
    }
    let d = prefix_depth(p.size, t);
    let blocks = p.space(d).expect("prefix space is below the full space");
    let tables: Vec<&[i128]> = p.contrib.iter().map(|v| v.as_slice()).collect();
    let zero = vec![0i128; p.m];
    let parts: Vec<A> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let prefix = decode_prefix(b, p.size, d);
            let mut start = zero.clone();
            for (l, &x) in prefix.iter().enumerate() {
                let row = p.row(tables[l], x);
                for j in 0..p.m {
                    start[j] = p.ring.add(start[j], row[j]);
                }
            }
            let mut acc = make();
            let mut full = prefix.clone();
            full.resize(t, 0);
            enumerate(p, &tables[d..], &start, |sums, idx| {
                if sums == p.targets.as_slice() {
                    full[d..].copy_from_slice(idx);
                    visit(&mut acc, &full);
                }
            });
            acc
        })
        .collect();
    Ok(parts.into_iter().reduce(merge).unwrap_or_else(make))
}

pub(crate) fn count_naive(p: &Prepared, caps: &Caps) -> Result<u128, CountError> {
    fold_solutions(p, caps, || 0u128, |c, _| *c += 1, |a, b| a + b)
}

/// Map from packed left-half sums to their multiplicity.
enum KeyTable {
    Packed {
        lo: Vec<i128>,
        hi: Vec<i128>,
        shifts: Vec<u32>,
        map: FxHashMap<u128, u64>,
    },
    Wide(FxHashMap<Box<[i128]>, u64>),
}

impl KeyTable {
    fn new(lo: Vec<i128>, hi: Vec<i128>) -> Self {
        let mut shifts = Vec::with_capacity(lo.len());
        let mut total: u32 = 0;
        for (l, h) in lo.iter().zip(&hi) {
            shifts.push(total);
            let width = (h - l) as u128;
            total = total.saturating_add(128 - width.leading_zeros());
        }
        if total <= 128 {
            KeyTable::Packed {
                lo,
                hi,
                shifts,
                map: FxHashMap::default(),
            }
        } else {
            KeyTable::Wide(FxHashMap::default())
        }
    }

    #[inline]
    fn pack(lo: &[i128], hi: &[i128], shifts: &[u32], sums: &[i128]) -> Option<u128> {
        let mut key = 0u128;
        for j in 0..sums.len() {
            let v = sums[j];
            if v < lo[j] || v > hi[j] {
                return None;
            }
            key |= ((v - lo[j]) as u128) << shifts[j];
        }
        Some(key)
    }

    fn insert(&mut self, sums: &[i128]) {
        match self {
            KeyTable::Packed { lo, hi, shifts, map } => {
                let key = Self::pack(lo, hi, shifts, sums).expect("left sums lie within their own range");
                *map.entry(key).or_insert(0) += 1;
            }
            KeyTable::Wide(map) => {
                *map.entry(sums.into()).or_insert(0) += 1;
            }
        }
    }

    #[inline]
    fn get(&self, sums: &[i128]) -> u64 {
        match self {
            KeyTable::Packed { lo, hi, shifts, map } => Self::pack(lo, hi, shifts, sums)
                .and_then(|k| map.get(&k).copied())
                .unwrap_or(0),
            KeyTable::Wide(map) => map.get(sums).copied().unwrap_or(0),
        }
    }

}

/// Meet-in-the-middle counter for one system and any number of target
/// vectors. The first `⌈t/2⌉` variables go into a collision table keyed on
/// their partial sums; the rest are enumerated against it.
pub(crate) struct MitmCounter<'a> {
    p: &'a Prepared,
    left: usize,
    table: KeyTable,
    /// `-σ_i f_j(x)` for the right-half variables
    right_neg: Vec<Vec<i128>>,
}

impl<'a> MitmCounter<'a> {
    pub fn new(p: &'a Prepared, caps: &Caps) -> Result<Self, CountError> {
        let t = p.arity();
        let left = t.div_ceil(2);
        let left_space = p.space(left).unwrap_or(u128::MAX);
        if left_space > caps.table_entries as u128 {
            return Err(CountError::MemoryCap {
                needed: left_space,
                cap: caps.table_entries,
            });
        }
        let right_space = p.space(t - left).unwrap_or(u128::MAX);
        if right_space > caps.enumeration {
            return Err(CountError::EnumerationCap {
                needed: p.space(t - left),
                cap: caps.enumeration,
            });
        }

        let (lo, hi) = match p.ring {
            Ring::Mod(q) => (vec![0; p.m], vec![q - 1; p.m]),
            Ring::Int => {
                let mut lo = vec![0i128; p.m];
                let mut hi = vec![0i128; p.m];
                for table in &p.contrib[..left] {
                    for j in 0..p.m {
                        let col = table.iter().skip(j).step_by(p.m);
                        lo[j] += col.clone().copied().min().unwrap_or(0);
                        hi[j] += col.copied().max().unwrap_or(0);
                    }
                }
                (lo, hi)
            }
        };
        let mut table = KeyTable::new(lo, hi);
        let tables: Vec<&[i128]> = p.contrib[..left].iter().map(|v| v.as_slice()).collect();
        enumerate(p, &tables, &vec![0; p.m], |sums, _| table.insert(sums));

        let right_neg = p.contrib[left..]
            .iter()
            .map(|v| v.iter().map(|&x| p.ring.neg(x)).collect())
            .collect();
        Ok(MitmCounter {
            p,
            left,
            table,
            right_neg,
        })
    }

    /// Solutions of `Σ σ_i f_j(x_i) = λ_j`; `targets` must already be reduced.
    pub fn count(&self, targets: &[i128]) -> Result<u128, CountError> {
        let p = self.p;
        let vars = p.arity() - self.left;
        let tables: Vec<&[i128]> = self.right_neg.iter().map(|v| v.as_slice()).collect();
        let d = prefix_depth(p.size, vars);
        let blocks = p.space(d).expect("prefix space is small");
        let parts: Vec<Option<u128>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let prefix = decode_prefix(b, p.size, d);
                let mut start = targets.to_vec();
                for (l, &x) in prefix.iter().enumerate() {
                    let row = p.row(tables[l], x);
                    for j in 0..p.m {
                        start[j] = p.ring.add(start[j], row[j]);
                    }
                }
                let mut acc: Option<u128> = Some(0);
                enumerate(p, &tables[d..], &start, |need, _| {
                    let hits = self.table.get(need);
                    if hits > 0 {
                        acc = acc.and_then(|a| a.checked_add(hits as u128));
                    }
                });
                acc
            })
            .collect();
        parts
            .into_iter()
            .try_fold(0u128, |a, b| b.and_then(|b| a.checked_add(b)))
            .ok_or(CountError::Overflow)
    }
}

/// Distinct partial-sum vectors of the first `⌈t/2⌉` variables, and of the
/// negated remaining ones, with multiplicities. A tuple solves the system
/// for target `λ` exactly when `left - right = λ`.
pub(crate) fn half_histograms(
    p: &Prepared,
    caps: &Caps,
) -> Result<(FxHashMap<Vec<i128>, u64>, FxHashMap<Vec<i128>, u64>), CountError> {
    let t = p.arity();
    let left = t.div_ceil(2);
    let left_space = p.space(left).unwrap_or(u128::MAX);
    if left_space > caps.table_entries as u128 {
        return Err(CountError::MemoryCap {
            needed: left_space,
            cap: caps.table_entries,
        });
    }
    let zero = vec![0i128; p.m];
    let histogram = |tables: Vec<&[i128]>| {
        let mut map: FxHashMap<Vec<i128>, u64> = FxHashMap::default();
        enumerate(p, &tables, &zero, |sums, _| *map.entry(sums.to_vec()).or_insert(0) += 1);
        map
    };
    let negated: Vec<Vec<i128>> = p.contrib[left..]
        .iter()
        .map(|v| v.iter().map(|&x| p.ring.neg(x)).collect())
        .collect();
    let l = histogram(p.contrib[..left].iter().map(|v| v.as_slice()).collect());
    let r = histogram(negated.iter().map(|v| v.as_slice()).collect());
    Ok((l, r))
}
