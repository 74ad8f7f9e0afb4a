use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{ContractionError, ContractionTree, Tensor, TensorNetwork};
use crate::numerics::C64;

/// Slices evaluated concurrently before their partial results are added in
/// ascending order.
const SLICE_WINDOW: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContractionStats {
    pub slices: usize,
    /// Largest pairwise result materialized in any slice.
    pub largest_intermediate: usize,
}

/// Copies `t` with axes reordered so that new axis i is old axis `order[i]`.
fn permute(t: &Tensor, order: &[usize]) -> Tensor {
    let rank = t.shape.len();
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return t.clone();
    }
    let mut strides = vec![1usize; rank];
    for i in (0..rank.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * t.shape[i + 1];
    }
    let shape: Vec<usize> = order.iter().map(|&o| t.shape[o]).collect();
    let src_strides: Vec<usize> = order.iter().map(|&o| strides[o]).collect();
    let mut data = Vec::with_capacity(t.data.len());
    let mut idx = vec![0usize; rank];
    let mut offset = 0usize;
    for _ in 0..t.data.len() {
        data.push(t.data[offset]);
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            offset += src_strides[ax];
            if idx[ax] < shape[ax] {
                break;
            }
            offset -= src_strides[ax] * shape[ax];
            idx[ax] = 0;
        }
    }
    Tensor {
        labels: order.iter().map(|&o| t.labels[o].clone()).collect(),
        shape,
        data,
    }
}

/// Sums over the labels `a` and `b` share; result axes are the free axes of
/// `a` then those of `b`, each in their original order.
fn pair(a: &Tensor, b: &Tensor) -> Tensor {
    let shared: Vec<usize> = (0..a.labels.len())
        .filter(|&i| b.labels.contains(&a.labels[i]))
        .collect();
    let free_a: Vec<usize> = (0..a.labels.len())
        .filter(|i| !shared.contains(i))
        .collect();
    let shared_b: Vec<usize> = shared
        .iter()
        .map(|&i| {
            b.labels
                .iter()
                .position(|l| *l == a.labels[i])
                .expect("shared")
        })
        .collect();
    let free_b: Vec<usize> = (0..b.labels.len())
        .filter(|i| !shared_b.contains(i))
        .collect();
    let pa = permute(a, &[free_a.clone(), shared.clone()].concat());
    let pb = permute(b, &[shared_b, free_b.clone()].concat());
    let k: usize = shared.iter().map(|&i| a.shape[i]).product();
    let rows = pa.data.len() / k;
    let cols = pb.data.len() / k;
    let mut out = vec![C64::new(0.0, 0.0); rows * cols];
    for i in 0..rows {
        let row = &mut out[i * cols..(i + 1) * cols];
        for kk in 0..k {
            let x = pa.data[i * k + kk];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, y) in row.iter_mut().zip(&pb.data[kk * cols..(kk + 1) * cols]) {
                *o += x * y;
            }
        }
    }
    Tensor {
        labels: free_a
            .iter()
            .map(|&i| a.labels[i].clone())
            .chain(free_b.iter().map(|&i| b.labels[i].clone()))
            .collect(),
        shape: free_a
            .iter()
            .map(|&i| a.shape[i])
            .chain(free_b.iter().map(|&i| b.shape[i]))
            .collect(),
        data: out,
    }
}

/// Fixes the sliced labels of `t` to the given indices.
fn restrict(t: &Tensor, fixed: &BTreeMap<&str, usize>) -> Tensor {
    let axes: Vec<usize> = (0..t.labels.len())
        .filter(|&i| fixed.contains_key(t.labels[i].as_str()))
        .collect();
    if axes.is_empty() {
        return t.clone();
    }
    let keep: Vec<usize> = (0..t.labels.len()).filter(|i| !axes.contains(i)).collect();
    let p = permute(t, &[axes.clone(), keep.clone()].concat());
    let block: usize = keep.iter().map(|&i| t.shape[i]).product();
    let mut offset = 0;
    for &ax in &axes {
        offset = offset * t.shape[ax] + fixed[t.labels[ax].as_str()];
    }
    Tensor {
        labels: keep.iter().map(|&i| t.labels[i].clone()).collect(),
        shape: keep.iter().map(|&i| t.shape[i]).collect(),
        data: p.data[offset * block..(offset + 1) * block].to_vec(),
    }
}

fn run_slice(
    net: &TensorNetwork,
    tree: &ContractionTree,
    fixed: &BTreeMap<&str, usize>,
) -> Result<(Tensor, usize), ContractionError> {
    let mut nodes: Vec<Option<Tensor>> = net
        .tensors
        .iter()
        .map(|t| Some(restrict(t, fixed)))
        .collect();
    let mut largest = 0;
    for &(a, b) in &tree.steps {
        let ta = nodes[a]
            .take()
            .ok_or_else(|| ContractionError::CorruptTree(format!("node {a} reused")))?;
        let tb = nodes[b]
            .take()
            .ok_or_else(|| ContractionError::CorruptTree(format!("node {b} reused")))?;
        let r = pair(&ta, &tb);
        largest = largest.max(r.size());
        nodes.push(Some(r));
    }
    let root = nodes
        .pop()
        .flatten()
        .ok_or_else(|| ContractionError::CorruptTree("no root".into()))?;
    let order: Vec<usize> = net
        .open
        .iter()
        .map(|l| {
            root.labels.iter().position(|x| x == l).ok_or_else(|| {
                ContractionError::CorruptTree(format!("open label '{l}' was summed"))
            })
        })
        .collect::<Result<_, _>>()?;
    if order.len() != root.labels.len() {
        return Err(ContractionError::CorruptTree(
            "root keeps closed labels".into(),
        ));
    }
    Ok((permute(&root, &order), largest))
}

/// Contracts `net` along `tree` on a pool of `workers` threads. The result
/// does not depend on the worker count.
pub fn contract(
    net: &TensorNetwork,
    tree: &ContractionTree,
    workers: usize,
) -> Result<Tensor, ContractionError> {
    contract_with_stats(net, tree, workers).map(|(t, _)| t)
}

pub fn contract_with_stats(
    net: &TensorNetwork,
    tree: &ContractionTree,
    workers: usize,
) -> Result<(Tensor, ContractionStats), ContractionError> {
    tree.check(net)?;
    let sizes = net.label_sizes();
    let sliced: Vec<(&str, usize)> = tree
        .sliced_labels
        .iter()
        .map(|l| (l.as_str(), sizes[l]))
        .collect();
    let slices: usize = sliced.iter().map(|(_, s)| s).product();
    let assignment = |mut s: usize| {
        let mut fixed = BTreeMap::new();
        for &(l, size) in sliced.iter().rev() {
            fixed.insert(l, s % size);
            s /= size;
        }
        fixed
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ContractionError::Workers(e.to_string()))?;
    let mut total: Option<Tensor> = None;
    let mut largest = 0;
    for start in (0..slices).step_by(SLICE_WINDOW) {
        let end = (start + SLICE_WINDOW).min(slices);
        let parts: Vec<(Tensor, usize)> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|s| run_slice(net, tree, &assignment(s)))
                .collect::<Result<_, _>>()
        })?;
        for (t, l) in parts {
            largest = largest.max(l);
            match total.as_mut() {
                None => total = Some(t),
                Some(acc) => acc.data.iter_mut().zip(&t.data).for_each(|(x, y)| *x += y),
            }
        }
    }
    let result = total.ok_or_else(|| ContractionError::CorruptTree("no slices".into()))?;
    Ok((
        result,
        ContractionStats {
            slices,
            largest_intermediate: largest,
        },
    ))
}
