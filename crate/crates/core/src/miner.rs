//! Level-wise Apriori over bitset tidsets, and injection of the frequent
//! itemsets back into the matrix as conjunction features.
//!
//! Every frequent itemset keeps its tidset (the AND of its member columns).
//! A level-k candidate joins two level-(k-1) itemsets that share a (k-2)
//! prefix, so its tidset is the AND of its two parents' tidsets and its
//! support is one popcount.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;

use crate::binarize::BinaryMatrix;
use crate::bits::BitVec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Itemset {
    /// Column indices, strictly increasing.
    pub items: Vec<usize>,
    pub support_count: usize,
    pub support: f64,
}

impl Itemset {
    pub fn k(&self) -> usize {
        self.items.len()
    }

    pub fn name(&self, feature_names: &[String]) -> String {
        itemset_name(&self.items, feature_names)
    }
}

/// Member names sorted and joined with `^`, independent of column order.
pub fn itemset_name(items: &[usize], feature_names: &[String]) -> String {
    let mut names: Vec<&str> = items.iter().map(|&i| feature_names[i].as_str()).collect();
    names.sort_unstable();
    names.join("^")
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MinerConfig {
    pub min_sup: f64,
    pub max_k: Option<usize>,
}

impl MinerConfig {
    pub fn new(min_sup: f64, max_k: Option<usize>) -> Result<Self> {
        let c = Self { min_sup, max_k };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_sup > 0.0 && self.min_sup < 1.0) {
            return Err(Error::Param(format!(
                "min_sup must lie strictly between 0 and 1, got {}",
                self.min_sup
            )));
        }
        if self.max_k == Some(0) {
            return Err(Error::Param("max_k must be at least 1".into()));
        }
        Ok(())
    }

    /// Smallest support count that is frequent: `ceil(min_sup * n)`.
    pub fn min_count(&self, n_records: usize) -> usize {
        // absorb representation error so that e.g. 0.1 * 30 counts as 3
        let x = self.min_sup * n_records as f64;
        ((x - 1e-9 * x.max(1.0)).ceil() as usize).max(1)
    }
}

/// Join frequent (k-1)-itemsets sharing their first k-2 items, then drop
/// candidates with an infrequent (k-1)-subset. Input must be canonical and
/// sorted; output is canonical, sorted and duplicate-free.
pub fn apriori_gen(frequent_prev: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let known: HashSet<&[usize]> = frequent_prev.iter().map(Vec::as_slice).collect();
    join_pairs(frequent_prev)
        .into_iter()
        .filter_map(|(a, b)| {
            let cand = joined(&frequent_prev[a], &frequent_prev[b]);
            all_subsets_frequent(&cand, &known).then_some(cand)
        })
        .collect()
}

/// Index pairs (i, j), i < j, of itemsets that agree on all but the last item.
fn join_pairs(level: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut start = 0;
    while start < level.len() {
        let k = level[start].len();
        let prefix = &level[start][..k.saturating_sub(1)];
        let mut end = start + 1;
        while end < level.len() && &level[end][..k - 1] == prefix {
            end += 1;
        }
        for i in start..end {
            for j in i + 1..end {
                pairs.push((i, j));
            }
        }
        start = end;
    }
    pairs
}

fn joined(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut c = a.to_vec();
    c.push(*b.last().expect("non-empty itemset"));
    c
}

/// The two subsets that drop one of the last two items are the join parents,
/// so only the first k-2 drops need checking.
fn all_subsets_frequent(cand: &[usize], known: &HashSet<&[usize]>) -> bool {
    let k = cand.len();
    let mut sub = Vec::with_capacity(k - 1);
    (0..k.saturating_sub(2)).all(|skip| {
        sub.clear();
        sub.extend(cand.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x));
        known.contains(sub.as_slice())
    })
}

pub fn mine_frequent_itemsets(matrix: &BinaryMatrix, config: &MinerConfig) -> Result<Vec<Itemset>> {
    config.validate()?;
    let n = matrix.n_records;
    if n == 0 {
        return Ok(Vec::new());
    }
    let min_count = config.min_count(n);
    let max_k = config.max_k.unwrap_or(usize::MAX);
    let mut out = Vec::new();

    let mut items: Vec<Vec<usize>> = Vec::new();
    let mut tids: Vec<BitVec> = Vec::new();
    for (c, col) in matrix.columns.iter().enumerate() {
        let count = col.count_ones();
        if count >= min_count {
            items.push(vec![c]);
            tids.push(col.clone());
            out.push(Itemset { items: vec![c], support_count: count, support: count as f64 / n as f64 });
        }
    }

    let mut k = 1;
    while !items.is_empty() && k < max_k {
        k += 1;
        let known: HashSet<&[usize]> = items.iter().map(Vec::as_slice).collect();
        let pairs = join_pairs(&items);
        let next: Vec<(Vec<usize>, BitVec, usize)> = pairs
            .par_iter()
            .filter_map(|&(a, b)| {
                let count = tids[a].and_count(&tids[b]);
                if count < min_count {
                    return None;
                }
                let cand = joined(&items[a], &items[b]);
                if !all_subsets_frequent(&cand, &known) {
                    return None;
                }
                Some((cand, tids[a].and(&tids[b]), count))
            })
            .collect();
        log::debug!("level {k}: {} candidates joined, {} frequent", pairs.len(), next.len());
        drop(known);
        items = Vec::with_capacity(next.len());
        tids = Vec::with_capacity(next.len());
        for (cand, tid, count) in next {
            out.push(Itemset {
                items: cand.clone(),
                support_count: count,
                support: count as f64 / n as f64,
            });
            items.push(cand);
            tids.push(tid);
        }
    }
    Ok(out)
}

pub fn sweep_min_sup(matrix: &BinaryMatrix, values: &[f64]) -> Result<Vec<(f64, usize)>> {
    values
        .iter()
        .map(|&v| {
            let cfg = MinerConfig::new(v, None)?;
            Ok((v, mine_frequent_itemsets(matrix, &cfg)?.len()))
        })
        .collect()
}

/// Base matrix plus one conjunction column per injected itemset.
///
/// 1-itemsets are the base columns themselves, so they are recorded as
/// aliases instead of being duplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMatrix {
    pub base: BinaryMatrix,
    pub injected: Vec<(Itemset, BitVec)>,
    /// (itemset, base column index) for itemsets identical to a base column.
    pub aliases: Vec<(Itemset, usize)>,
}

impl AugmentedMatrix {
    pub fn feature_count(&self) -> usize {
        self.base.n_features() + self.injected.len()
    }

    pub fn extracted_count(&self) -> usize {
        self.injected.len() + self.aliases.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = self.base.feature_names.clone();
        names.extend(self.injected.iter().map(|(s, _)| s.name(&self.base.feature_names)));
        names
    }

    /// Base and injected columns as one matrix.
    pub fn combined(&self) -> BinaryMatrix {
        let mut columns = self.base.columns.clone();
        columns.extend(self.injected.iter().map(|(_, c)| c.clone()));
        BinaryMatrix {
            feature_names: self.feature_names(),
            columns,
            target_name: self.base.target_name.clone(),
            target: self.base.target.clone(),
            n_records: self.base.n_records,
        }
    }
}

pub fn inject_features(matrix: &BinaryMatrix, itemsets: &[Itemset]) -> Result<AugmentedMatrix> {
    let mut injected = Vec::new();
    let mut aliases = Vec::new();
    let mut names: HashSet<String> = matrix.feature_names.iter().cloned().collect();
    names.insert(matrix.target_name.clone());
    for s in itemsets {
        if s.items.is_empty() || s.items.iter().any(|&i| i >= matrix.n_features()) {
            return Err(Error::Data(format!("itemset {:?} does not fit the matrix", s.items)));
        }
        if s.items.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!("itemset {:?} is not canonical", s.items)));
        }
        if let [single] = s.items[..] {
            aliases.push((s.clone(), single));
            continue;
        }
        let mut col = matrix.columns[s.items[0]].clone();
        for &i in &s.items[1..] {
            col.and_assign(&matrix.columns[i]);
        }
        let name = s.name(&matrix.feature_names);
        if !names.insert(name.clone()) {
            return Err(Error::Data(format!("injected feature {name:?} clashes with an existing column")));
        }
        injected.push((s.clone(), col));
    }
    Ok(AugmentedMatrix {
        base: matrix.clone(),
        injected,
        aliases,
    })
}

/// Tab-separated `name, k, support_count, support` table.
pub fn write_itemset_table<W: Write>(mut w: W, itemsets: &[Itemset], feature_names: &[String]) -> Result<()> {
    let io = |e| Error::io("<itemsets>", e);
    writeln!(w, "name\tk\tsupport_count\tsupport").map_err(io)?;
    for s in itemsets {
        writeln!(w, "{}\t{}\t{}\t{:.6}", s.name(feature_names), s.k(), s.support_count, s.support).map_err(io)?;
    }
    Ok(())
}
