//! Selection of low-abnormality, mean-proximal and high-abnormality examples.
//!
//! Ties are always broken by ascending ordinal and every output list is
//! sorted by ordinal, so selections are a pure function of their inputs.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum Strategy {
    #[default]
    Global,
    /// Select within buckets of `floor(char_length / bucket_width)`.
    Bucketed { bucket_width: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SelectionSpec {
    pub k_low: usize,
    pub k_high: usize,
    pub k_mean: usize,
    pub strategy: Strategy,
    /// Tails claim indices first; mean-proximal picks come from the rest.
    pub disjoint: bool,
}

impl Default for SelectionSpec {
    fn default() -> Self {
        SelectionSpec {
            k_low: 3500,
            k_high: 3500,
            k_mean: 3500,
            strategy: Strategy::Global,
            disjoint: true,
        }
    }
}

impl SelectionSpec {
    pub fn uniform(k: usize) -> Self {
        SelectionSpec {
            k_low: k,
            k_high: k,
            k_mean: k,
            ..SelectionSpec::default()
        }
    }

    pub fn total(&self) -> usize {
        self.k_low + self.k_high + self.k_mean
    }

    fn check_capacity(&self, n: usize) -> Result<()> {
        let fits = if self.disjoint {
            self.total() <= n
        } else {
            self.k_low.max(self.k_high).max(self.k_mean) <= n
        };
        if fits {
            Ok(())
        } else {
            Err(Error::Capacity {
                available: n,
                requested: self.total(),
            })
        }
    }
}

/// Per-bucket score mean used as the mean-proximal target.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BucketEcho {
    pub bucket: usize,
    pub population: usize,
    pub score_mean: f64,
    pub k_low: usize,
    pub k_high: usize,
    pub k_mean: usize,
}

/// The policy that produced a selection.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicyEcho {
    pub spec: SelectionSpec,
    /// Arithmetic mean of all scores.
    pub score_mean: f64,
    /// Filled for the bucketed strategy only.
    pub buckets: Vec<BucketEcho>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub low: Vec<usize>,
    pub high: Vec<usize>,
    pub mean_proximal: Vec<usize>,
    pub policy: PolicyEcho,
}

impl Selection {
    pub fn empty() -> Self {
        Selection {
            low: Vec::new(),
            high: Vec::new(),
            mean_proximal: Vec::new(),
            policy: PolicyEcho {
                spec: SelectionSpec::uniform(0),
                score_mean: 0.0,
                buckets: Vec::new(),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.low.len() + self.high.len() + self.mean_proximal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every selected ordinal with its category, ascending by ordinal.
    /// An ordinal in several lists (overlap mode) appears once per list.
    pub fn entries(&self) -> Vec<(usize, Category)> {
        let mut out: Vec<(usize, Category)> = self
            .low
            .iter()
            .map(|&i| (i, Category::Low))
            .chain(self.mean_proximal.iter().map(|&i| (i, Category::Mutual)))
            .chain(self.high.iter().map(|&i| (i, Category::High)))
            .collect();
        out.sort();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Category {
    Low,
    Mutual,
    High,
    Unselected,
}

impl Category {
    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Low => "low",
            Category::Mutual => "mutual",
            Category::High => "high",
            Category::Unselected => "unselected",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "low" => Some(Category::Low),
            "mutual" => Some(Category::Mutual),
            "high" => Some(Category::High),
            "unselected" => Some(Category::Unselected),
            _ => None,
        }
    }
}

impl core::fmt::Display for Category {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn mean_of(scores: &[f64], members: &[usize]) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    members.iter().map(|&i| scores[i]).sum::<f64>() / members.len() as f64
}

struct Picked {
    low: Vec<usize>,
    high: Vec<usize>,
    mean_proximal: Vec<usize>,
}

/// Core rule over a candidate set. Assumes quotas fit the candidates.
fn pick(
    scores: &[f64],
    candidates: &[usize],
    k_low: usize,
    k_high: usize,
    k_mean: usize,
    target: f64,
    disjoint: bool,
) -> Picked {
    let mut ascending = candidates.to_vec();
    ascending.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let low: Vec<usize> = ascending[..k_low.min(ascending.len())].to_vec();

    let mut taken = vec![false; scores.len()];
    if disjoint {
        for &i in &low {
            taken[i] = true;
        }
    }
    let mut descending = candidates.to_vec();
    descending.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let high: Vec<usize> = descending
        .into_iter()
        .filter(|&i| !taken[i])
        .take(k_high)
        .collect();
    if disjoint {
        for &i in &high {
            taken[i] = true;
        }
    }

    let mut proximal: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&i| !taken[i])
        .collect();
    proximal.sort_by(|&a, &b| {
        let da = libm::fabs(scores[a] - target);
        let db = libm::fabs(scores[b] - target);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    proximal.truncate(k_mean);

    Picked {
        low,
        high,
        mean_proximal: proximal,
    }
}

fn finish(mut picked: Picked, policy: PolicyEcho) -> Selection {
    picked.low.sort_unstable();
    picked.high.sort_unstable();
    picked.mean_proximal.sort_unstable();
    Selection {
        low: picked.low,
        high: picked.high,
        mean_proximal: picked.mean_proximal,
        policy,
    }
}

fn check_finite(scores: &[f64]) -> Result<()> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("scores contain non-finite values".into()));
    }
    Ok(())
}

/// k smallest, k largest, and k nearest to the mean of all scores.
pub fn select_global(scores: &[f64], spec: &SelectionSpec) -> Result<Selection> {
    check_finite(scores)?;
    spec.check_capacity(scores.len())?;
    let all: Vec<usize> = (0..scores.len()).collect();
    let mean = mean_of(scores, &all);
    let picked = pick(scores, &all, spec.k_low, spec.k_high, spec.k_mean, mean, spec.disjoint);
    Ok(finish(
        picked,
        PolicyEcho {
            spec: *spec,
            score_mean: mean,
            buckets: Vec::new(),
        },
    ))
}

/// Largest-remainder apportionment of `k` across `populations`.
/// Remainder ties go to the lower index.
pub fn apportion(k: usize, populations: &[usize]) -> Vec<usize> {
    let total: usize = populations.iter().sum();
    if total == 0 {
        return vec![0; populations.len()];
    }
    let mut quotas: Vec<usize> = populations.iter().map(|&p| k * p / total).collect();
    let assigned: usize = quotas.iter().sum();
    // remainder numerators (k·p mod total) compare exactly
    let mut order: Vec<usize> = (0..populations.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = (k * populations[a]) % total;
        let rb = (k * populations[b]) % total;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for &b in order.iter().take(k - assigned) {
        quotas[b] += 1;
    }
    quotas
}

/// Moves quota a bucket cannot hold to the next bucket in `visit` order,
/// cycling until everything is placed. `capacity[b]` is the room left in `b`.
fn spill(quota: &mut [usize], capacity: &mut [usize], visit: &[usize]) {
    let mut carry = 0usize;
    for &b in visit {
        let want = quota[b] + carry;
        let got = want.min(capacity[b]);
        quota[b] = got;
        capacity[b] -= got;
        carry = want - got;
    }
    while carry > 0 {
        let before = carry;
        for &b in visit {
            if carry == 0 {
                break;
            }
            let extra = carry.min(capacity[b]);
            quota[b] += extra;
            capacity[b] -= extra;
            carry -= extra;
        }
        if carry == before {
            break;
        }
    }
}

/// Applies the global rule inside character-length buckets.
pub fn select_bucketed(scores: &[f64], char_lengths: &[usize], spec: &SelectionSpec) -> Result<Selection> {
    let width = match spec.strategy {
        Strategy::Bucketed { bucket_width } => bucket_width,
        Strategy::Global => return select_global(scores, spec),
    };
    if width < 1 {
        return Err(Error::Parameter("bucket width must be at least 1".into()));
    }
    if char_lengths.len() != scores.len() {
        return Err(Error::Bounds {
            expected: scores.len(),
            found: char_lengths.len(),
        });
    }
    check_finite(scores)?;
    spec.check_capacity(scores.len())?;

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &len) in char_lengths.iter().enumerate() {
        groups.entry(len / width).or_default().push(i);
    }
    let keys: Vec<usize> = groups.keys().copied().collect();
    let members: Vec<&Vec<usize>> = groups.values().collect();
    let pops: Vec<usize> = members.iter().map(|m| m.len()).collect();

    let mut visit: Vec<usize> = (0..pops.len()).collect();
    visit.sort_by(|&a, &b| pops[b].cmp(&pops[a]).then(a.cmp(&b)));

    let mut q_low = apportion(spec.k_low, &pops);
    let mut q_high = apportion(spec.k_high, &pops);
    let mut q_mean = apportion(spec.k_mean, &pops);
    if spec.disjoint {
        let mut room = pops.clone();
        spill(&mut q_low, &mut room, &visit);
        spill(&mut q_high, &mut room, &visit);
        spill(&mut q_mean, &mut room, &visit);
    } else {
        spill(&mut q_low, &mut pops.clone(), &visit);
        spill(&mut q_high, &mut pops.clone(), &visit);
        spill(&mut q_mean, &mut pops.clone(), &visit);
    }

    let all: Vec<usize> = (0..scores.len()).collect();
    let global_mean = mean_of(scores, &all);
    let mut picked = Picked {
        low: Vec::new(),
        high: Vec::new(),
        mean_proximal: Vec::new(),
    };
    let mut buckets = Vec::with_capacity(keys.len());
    for (b, &key) in keys.iter().enumerate() {
        let local_mean = mean_of(scores, members[b]);
        let p = pick(scores, members[b], q_low[b], q_high[b], q_mean[b], local_mean, spec.disjoint);
        picked.low.extend(p.low);
        picked.high.extend(p.high);
        picked.mean_proximal.extend(p.mean_proximal);
        buckets.push(BucketEcho {
            bucket: key,
            population: pops[b],
            score_mean: local_mean,
            k_low: q_low[b],
            k_high: q_high[b],
            k_mean: q_mean[b],
        });
    }
    Ok(finish(
        picked,
        PolicyEcho {
            spec: *spec,
            score_mean: global_mean,
            buckets,
        },
    ))
}

/// Dispatches on `spec.strategy`.
pub fn select(scores: &[f64], char_lengths: &[usize], spec: &SelectionSpec) -> Result<Selection> {
    match spec.strategy {
        Strategy::Global => select_global(scores, spec),
        Strategy::Bucketed { .. } => select_bucketed(scores, char_lengths, spec),
    }
}

/// Category of every example. In overlap mode an example in several lists
/// takes the first of high, low, mutual.
pub fn label_all(n: usize, selection: &Selection) -> Result<Vec<Category>> {
    let mut labels = vec![Category::Unselected; n];
    let lists = [
        (&selection.mean_proximal, Category::Mutual),
        (&selection.low, Category::Low),
        (&selection.high, Category::High),
    ];
    for (list, cat) in lists {
        for &i in list.iter() {
            let slot = labels.get_mut(i).ok_or(Error::Bounds {
                expected: n,
                found: i,
            })?;
            *slot = cat;
        }
    }
    Ok(labels)
}
