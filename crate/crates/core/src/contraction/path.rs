use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ContractionError, TensorNetwork};
use crate::numerics::RngStream;

const PATH_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathOptions {
    /// Largest number of elements any intermediate may hold.
    pub target_size: usize,
    /// Greedy trials; trial 0 is noiseless, later ones perturb pair scores.
    pub max_repeats: usize,
    pub seed: u64,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            target_size: 1 << 28,
            max_repeats: 8,
            seed: 0,
        }
    }
}

/// Per-slice cost of one pairwise contraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeCost {
    pub flops: f64,
    pub size: usize,
}

/// Totals over all slices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeCosts {
    pub flops: f64,
    pub write: f64,
    pub largest_intermediate: usize,
    pub slices: usize,
}

/// Binary contraction tree in SSA form: leaves are ids 0..leaves and step i
/// creates node leaves + i from two live nodes. The last node is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionTree {
    pub version: u32,
    pub signature: String,
    pub leaves: usize,
    pub steps: Vec<(usize, usize)>,
    pub sliced_labels: Vec<String>,
    pub node_costs: Vec<NodeCost>,
    pub costs: TreeCosts,
}

impl ContractionTree {
    /// Checks the format version, the network signature and that every node
    /// is consumed exactly once.
    pub fn check(&self, net: &TensorNetwork) -> Result<(), ContractionError> {
        if self.version != PATH_FORMAT_VERSION {
            return Err(ContractionError::PathFile(format!(
                "format version {} (expected {PATH_FORMAT_VERSION})",
                self.version
            )));
        }
        let found = net.signature();
        if found != self.signature {
            return Err(ContractionError::SignatureMismatch {
                expected: self.signature.clone(),
                found,
            });
        }
        if self.leaves != net.tensors().len() || self.steps.len() + 1 != self.leaves {
            return Err(ContractionError::CorruptTree(format!(
                "{} leaves and {} steps for {} tensors",
                self.leaves,
                self.steps.len(),
                net.tensors().len()
            )));
        }
        let mut live = vec![true; self.leaves];
        for (i, &(a, b)) in self.steps.iter().enumerate() {
            let ok = |x: usize| x < live.len() && live[x];
            if a == b || !ok(a) || !ok(b) {
                return Err(ContractionError::CorruptTree(format!(
                    "step {i} joins ({a}, {b})"
                )));
            }
            live[a] = false;
            live[b] = false;
            live.push(true);
        }
        let sizes = net.label_sizes();
        if let Some(l) = self
            .sliced_labels
            .iter()
            .find(|l| !sizes.contains_key(*l) || net.open().contains(l))
        {
            return Err(ContractionError::CorruptTree(format!(
                "cannot slice label '{l}'"
            )));
        }
        if self.node_costs.len() != self.steps.len() {
            return Err(ContractionError::CorruptTree("cost list length".into()));
        }
        Ok(())
    }
}

/// Label sets of the network as sorted indices into the sorted label list.
pub(super) struct Indexed {
    pub names: Vec<String>,
    pub sizes: Vec<f64>,
    pub sets: Vec<Vec<usize>>,
    pub open: BTreeSet<usize>,
}

pub(super) fn index_network(net: &TensorNetwork) -> Indexed {
    let label_sizes = net.label_sizes();
    let pos: BTreeMap<&str, usize> = label_sizes
        .keys()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let sets = net
        .tensors()
        .iter()
        .map(|t| {
            let mut s: Vec<usize> = t.labels().iter().map(|l| pos[l.as_str()]).collect();
            s.sort_unstable();
            s
        })
        .collect();
    let open = net.open().iter().map(|l| pos[l.as_str()]).collect();
    Indexed {
        sizes: label_sizes.values().map(|&s| s as f64).collect(),
        names: label_sizes.into_keys().collect(),
        sets,
        open,
    }
}

fn sym_diff(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (sa, sb): (BTreeSet<_>, BTreeSet<_>) = (a.iter().collect(), b.iter().collect());
    sa.symmetric_difference(&sb).map(|&&x| x).collect()
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let s: BTreeSet<usize> = a.iter().chain(b).copied().collect();
    s.into_iter().collect()
}

fn volume(set: &[usize], sizes: &[f64], sliced: &BTreeSet<usize>) -> f64 {
    set.iter()
        .filter(|l| !sliced.contains(l))
        .map(|&l| sizes[l])
        .product()
}

/// Greedy pairing by size(result) − size(a) − size(b); `noise` adds a
/// Gumbel perturbation scaled by size(a) + size(b).
fn greedy(ix: &Indexed, mut noise: Option<&mut RngStream>) -> Vec<(usize, usize)> {
    let none = BTreeSet::new();
    let mut nodes: Vec<Vec<usize>> = ix.sets.clone();
    let mut live: BTreeSet<usize> = (0..nodes.len()).collect();
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); ix.names.len()];
    for (t, s) in nodes.iter().enumerate() {
        for &l in s {
            holders[l].push(t);
        }
    }
    let mut steps = Vec::with_capacity(nodes.len().saturating_sub(1));
    while live.len() > 1 {
        let mut pairs = BTreeSet::new();
        for h in &holders {
            if let [a, b] = h.as_slice() {
                pairs.insert((*a.min(b), *a.max(b)));
            }
        }
        let mut best: Option<(f64, (usize, usize))> = None;
        for &(a, b) in &pairs {
            let sa = volume(&nodes[a], &ix.sizes, &none);
            let sb = volume(&nodes[b], &ix.sizes, &none);
            let mut score = volume(&sym_diff(&nodes[a], &nodes[b]), &ix.sizes, &none) - sa - sb;
            if let Some(rng) = noise.as_deref_mut() {
                let u = rng.uniform().max(f64::MIN_POSITIVE);
                score -= 0.5 * (sa + sb) * -(-u.ln()).ln();
            }
            if best.map_or(true, |(s, _)| score < s) {
                best = Some((score, (a, b)));
            }
        }
        let (a, b) = match best {
            Some((_, p)) => p,
            None => {
                // disconnected components: outer product of the two smallest
                let mut by_size: Vec<usize> = live.iter().copied().collect();
                by_size.sort_by(|&x, &y| {
                    volume(&nodes[x], &ix.sizes, &none)
                        .total_cmp(&volume(&nodes[y], &ix.sizes, &none))
                        .then(x.cmp(&y))
                });
                (by_size[0].min(by_size[1]), by_size[0].max(by_size[1]))
            }
        };
        let id = nodes.len();
        let result = sym_diff(&nodes[a], &nodes[b]);
        for h in holders.iter_mut() {
            h.retain(|&x| x != a && x != b);
        }
        for &l in &result {
            holders[l].push(id);
        }
        live.remove(&a);
        live.remove(&b);
        live.insert(id);
        nodes.push(result);
        steps.push((a, b));
    }
    steps
}

/// Label sets of every node (leaves then steps) and of each step's operands.
pub(super) fn node_sets(ix: &Indexed, steps: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut nodes = ix.sets.clone();
    for &(a, b) in steps {
        let r = sym_diff(&nodes[a], &nodes[b]);
        nodes.push(r);
    }
    nodes
}

/// Repeatedly slices the closed label found in the most oversized
/// intermediates (ties: larger label, then lexicographically first).
fn slice(
    ix: &Indexed,
    steps: &[(usize, usize)],
    target: usize,
) -> Result<BTreeSet<usize>, ContractionError> {
    let nodes = node_sets(ix, steps);
    let inter = &nodes[ix.sets.len()..];
    let mut sliced = BTreeSet::new();
    loop {
        let oversized: Vec<&Vec<usize>> = inter
            .iter()
            .filter(|s| volume(s, &ix.sizes, &sliced) > target as f64)
            .collect();
        if oversized.is_empty() {
            return Ok(sliced);
        }
        let mut count: BTreeMap<usize, usize> = BTreeMap::new();
        for s in &oversized {
            for &l in s.iter() {
                if !sliced.contains(&l) && !ix.open.contains(&l) && ix.sizes[l] > 1.0 {
                    *count.entry(l).or_default() += 1;
                }
            }
        }
        let pick = count
            .iter()
            .max_by(|(la, ca), (lb, cb)| {
                ca.cmp(cb)
                    .then(ix.sizes[**la].total_cmp(&ix.sizes[**lb]))
                    .then(lb.cmp(la))
            })
            .map(|(&l, _)| l);
        match pick {
            Some(l) => {
                sliced.insert(l);
            }
            None => {
                return Err(ContractionError::CannotSlice {
                    size: volume(oversized[0], &ix.sizes, &sliced) as usize,
                    target,
                })
            }
        }
    }
}

fn costs(
    ix: &Indexed,
    steps: &[(usize, usize)],
    sliced: &BTreeSet<usize>,
) -> (Vec<NodeCost>, TreeCosts) {
    let nodes = node_sets(ix, steps);
    let slices: usize = sliced.iter().map(|&l| ix.sizes[l] as usize).product();
    let node_costs: Vec<NodeCost> = steps
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| NodeCost {
            flops: volume(&union(&nodes[a], &nodes[b]), &ix.sizes, sliced),
            size: volume(&nodes[ix.sets.len() + i], &ix.sizes, sliced) as usize,
        })
        .collect();
    let totals = TreeCosts {
        flops: slices as f64 * node_costs.iter().map(|c| c.flops).sum::<f64>(),
        write: slices as f64 * node_costs.iter().map(|c| c.size as f64).sum::<f64>(),
        largest_intermediate: node_costs.iter().map(|c| c.size).max().unwrap_or(0),
        slices,
    };
    (node_costs, totals)
}

/// Greedy search with `max_repeats` seeded trials, each sliced down to the
/// target; keeps the trial with the fewest total flops (earliest on ties).
pub fn find_path(
    net: &TensorNetwork,
    opts: &PathOptions,
) -> Result<ContractionTree, ContractionError> {
    let largest = net.largest_tensor();
    if opts.target_size < largest {
        return Err(ContractionError::TargetTooSmall {
            target: opts.target_size,
            largest,
        });
    }
    let ix = index_network(net);
    let root = RngStream::new(opts.seed);
    type Trial = (
        Vec<(usize, usize)>,
        BTreeSet<usize>,
        Vec<NodeCost>,
        TreeCosts,
    );
    let mut best: Option<Trial> = None;
    let mut last_err = None;
    for trial in 0..opts.max_repeats.max(1) {
        let mut rng = root.child(trial as u64);
        let steps = greedy(&ix, (trial > 0).then_some(&mut rng));
        let sliced = match slice(&ix, &steps, opts.target_size) {
            Ok(s) => s,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let (nc, tc) = costs(&ix, &steps, &sliced);
        if best.as_ref().map_or(true, |b| tc.flops < b.3.flops) {
            best = Some((steps, sliced, nc, tc));
        }
    }
    let (steps, sliced, node_costs, costs) =
        best.ok_or_else(|| last_err.expect("at least one trial"))?;
    Ok(ContractionTree {
        version: PATH_FORMAT_VERSION,
        signature: net.signature(),
        leaves: net.tensors().len(),
        steps,
        sliced_labels: sliced.into_iter().map(|l| ix.names[l].clone()).collect(),
        node_costs,
        costs,
    })
}

pub fn save_path(tree: &ContractionTree, path: &Path) -> Result<(), ContractionError> {
    let text = serde_json::to_string_pretty(tree)
        .map_err(|e| ContractionError::PathFile(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| ContractionError::PathFile(e.to_string()))
}

/// Reads a path file and checks it against `net`.
pub fn load_path(path: &Path, net: &TensorNetwork) -> Result<ContractionTree, ContractionError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ContractionError::PathFile(e.to_string()))?;
    let tree: ContractionTree =
        serde_json::from_str(&text).map_err(|e| ContractionError::PathFile(e.to_string()))?;
    tree.check(net)?;
    Ok(tree)
}
