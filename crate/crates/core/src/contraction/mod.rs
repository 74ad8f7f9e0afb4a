//! Tensor networks for circuit expectations and amplitudes, greedy path
//! search with memory-capped slicing, path files, and parallel sliced
//! execution.
//!
//! Costs count complex multiply-adds: contracting A and B costs the product
//! of the sizes of every label on either tensor.

mod exec;
mod path;

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::circuit::gates::pauli_matrix;
use crate::circuit::{Circuit, CircuitError};
use crate::numerics::{RngStream, C64};

pub use exec::{contract, contract_with_stats, ContractionStats};
pub use path::{find_path, load_path, save_path, ContractionTree, PathOptions, TreeCosts};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContractionError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("target size {target} is below the largest input tensor ({largest})")]
    TargetTooSmall { target: usize, largest: usize },
    #[error("an intermediate of size {size} has no closed label left to slice (target {target})")]
    CannotSlice { size: usize, target: usize },
    #[error("network signature mismatch: path was found for {expected}, not {found}")]
    SignatureMismatch { expected: String, found: String },
    #[error("corrupt contraction tree: {0}")]
    CorruptTree(String),
    #[error("path file: {0}")]
    PathFile(String),
    #[error("worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Dense tensor in row-major order, one label per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    labels: Vec<String>,
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl Tensor {
    pub fn new(
        labels: Vec<String>,
        shape: Vec<usize>,
        data: Vec<C64>,
    ) -> Result<Self, ContractionError> {
        if labels.len() != shape.len() {
            return Err(ContractionError::InvalidNetwork(format!(
                "{} labels for {} axes",
                labels.len(),
                shape.len()
            )));
        }
        if shape.contains(&0) {
            return Err(ContractionError::InvalidNetwork("zero-sized axis".into()));
        }
        let size: usize = shape.iter().product();
        if data.len() != size {
            return Err(ContractionError::InvalidNetwork(format!(
                "shape {shape:?} with {} entries",
                data.len()
            )));
        }
        Ok(Self {
            labels,
            shape,
            data,
        })
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            labels: Vec::new(),
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn size(&self) -> usize {
        self.data.len()
    }

    /// The single entry of a rank-0 tensor.
    pub fn value(&self) -> Option<C64> {
        self.labels.is_empty().then(|| self.data[0])
    }
}

/// A label with its dimension and the (tensor, axis) pairs it joins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub label: String,
    pub size: usize,
    pub attachments: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorNetwork {
    tensors: Vec<Tensor>,
    open: Vec<String>,
}

impl TensorNetwork {
    /// Every label joins at most two axes on distinct tensors; a label on one
    /// axis must be listed in `open` and vice versa.
    pub fn new(tensors: Vec<Tensor>, open: Vec<String>) -> Result<Self, ContractionError> {
        if tensors.is_empty() {
            return Err(ContractionError::InvalidNetwork("no tensors".into()));
        }
        let net = Self { tensors, open };
        let edges = net.edges();
        for e in &edges {
            let sizes: Vec<usize> = e
                .attachments
                .iter()
                .map(|&(t, a)| net.tensors[t].shape[a])
                .collect();
            if sizes.iter().any(|&s| s != e.size) {
                return Err(ContractionError::InvalidNetwork(format!(
                    "label '{}' has sizes {sizes:?}",
                    e.label
                )));
            }
            let is_open = net.open.contains(&e.label);
            match e.attachments.as_slice() {
                [_] if is_open => {}
                [(a, _), (b, _)] if !is_open && a != b => {}
                [_] => {
                    return Err(ContractionError::InvalidNetwork(format!(
                        "dangling label '{}' is not open",
                        e.label
                    )))
                }
                _ => {
                    return Err(ContractionError::InvalidNetwork(format!(
                        "label '{}' has attachments {:?}{}",
                        e.label,
                        e.attachments,
                        if is_open { " and is open" } else { "" }
                    )))
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &net.open {
            if !seen.insert(l) || !edges.iter().any(|e| &e.label == l) {
                return Err(ContractionError::InvalidNetwork(format!(
                    "open label '{l}' is repeated or unused"
                )));
            }
        }
        Ok(net)
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn open(&self) -> &[String] {
        &self.open
    }

    /// Edges sorted by label.
    pub fn edges(&self) -> Vec<Edge> {
        let mut map: BTreeMap<&str, Edge> = BTreeMap::new();
        for (t, tensor) in self.tensors.iter().enumerate() {
            for (a, l) in tensor.labels.iter().enumerate() {
                map.entry(l)
                    .or_insert_with(|| Edge {
                        label: l.clone(),
                        size: tensor.shape[a],
                        attachments: Vec::new(),
                    })
                    .attachments
                    .push((t, a));
            }
        }
        map.into_values().collect()
    }

    pub fn label_sizes(&self) -> BTreeMap<String, usize> {
        self.edges()
            .into_iter()
            .map(|e| (e.label, e.size))
            .collect()
    }

    pub fn largest_tensor(&self) -> usize {
        self.tensors.iter().map(Tensor::size).max().unwrap_or(1)
    }

    /// SHA-256 over the labels and shapes of every tensor and the open list;
    /// tensor entries do not enter.
    pub fn signature(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tensors {
            h.update(b"T");
            for (l, s) in t.labels.iter().zip(&t.shape) {
                h.update(l.as_bytes());
                h.update(b":");
                h.update(s.to_string().as_bytes());
                h.update(b",");
            }
        }
        h.update(b"O");
        for l in &self.open {
            h.update(l.as_bytes());
            h.update(b",");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn qubit_vector(v: [f64; 2], label: String) -> Tensor {
    Tensor {
        labels: vec![label],
        shape: vec![2],
        data: v.iter().map(|&x| C64::new(x, 0.0)).collect(),
    }
}

/// Gate tensors of `c` with axes (outputs, inputs) on labels `{prefix}{wire}.{version}`.
/// Returns the tensors and the final label of every wire.
fn circuit_layer(
    c: &Circuit,
    prefix: &str,
    conjugate: bool,
) -> Result<(Vec<Tensor>, Vec<String>), ContractionError> {
    if c.d() != 2 {
        return Err(ContractionError::InvalidNetwork(format!(
            "tensor networks need qubits, got d = {}",
            c.d()
        )));
    }
    if c.initial_state().is_some() {
        return Err(ContractionError::InvalidNetwork(
            "circuits with a custom initial state are not captured".into(),
        ));
    }
    let n = c.n();
    let mut version = vec![0usize; n];
    let label = |w: usize, v: usize| format!("{prefix}{w}.{v}");
    let mut tensors: Vec<Tensor> = (0..n)
        .map(|w| qubit_vector([1.0, 0.0], label(w, 0)))
        .collect();
    for op in c.ops() {
        op.validate(n, 2)?;
        let m = op.matrix(2)?;
        let inputs: Vec<String> = op.wires.iter().map(|&w| label(w, version[w])).collect();
        for &w in &op.wires {
            version[w] += 1;
        }
        let outputs: Vec<String> = op.wires.iter().map(|&w| label(w, version[w])).collect();
        let data = if conjugate {
            m.data().iter().map(|z| z.conj()).collect()
        } else {
            m.into_data()
        };
        tensors.push(Tensor {
            labels: outputs.into_iter().chain(inputs).collect(),
            shape: vec![2; 2 * op.wires.len()],
            data,
        });
    }
    let finals = (0..n).map(|w| label(w, version[w])).collect();
    Ok((tensors, finals))
}

/// Closed network for ⟨ψ|P|ψ⟩ with ψ = C|0…0⟩ and P the Pauli word `codes`
/// (0 = I, 1 = X, 2 = Y, 3 = Z). Identity sites join ket and bra directly.
pub fn capture_expectation_network(
    c: &Circuit,
    codes: &[u8],
) -> Result<TensorNetwork, ContractionError> {
    if codes.len() != c.n() || codes.iter().any(|&p| p > 3) {
        return Err(ContractionError::InvalidNetwork(format!(
            "observable {codes:?} on {} qubits",
            c.n()
        )));
    }
    let (mut tensors, ket_final) = circuit_layer(c, "k", false)?;
    let (mut bra, bra_final) = circuit_layer(c, "b", true)?;
    for (w, &p) in codes.iter().enumerate() {
        if p == 0 {
            for t in &mut bra {
                for l in &mut t.labels {
                    if *l == bra_final[w] {
                        *l = ket_final[w].clone();
                    }
                }
            }
        } else {
            tensors.push(Tensor {
                labels: vec![bra_final[w].clone(), ket_final[w].clone()],
                shape: vec![2, 2],
                data: pauli_matrix(p).into_data(),
            });
        }
    }
    tensors.extend(bra);
    TensorNetwork::new(tensors, Vec::new())
}

/// Closed network for ⟨bits|C|0…0⟩.
pub fn capture_amplitude_network(
    c: &Circuit,
    bits: &[u8],
) -> Result<TensorNetwork, ContractionError> {
    if bits.len() != c.n() || bits.iter().any(|&b| b > 1) {
        return Err(ContractionError::InvalidNetwork(format!(
            "bitstring {bits:?} on {} qubits",
            c.n()
        )));
    }
    let (mut tensors, finals) = circuit_layer(c, "k", false)?;
    for (w, &b) in bits.iter().enumerate() {
        let v = if b == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        tensors.push(qubit_vector(v, finals[w].clone()));
    }
    TensorNetwork::new(tensors, Vec::new())
}

/// Random closed network: tensors joined along a spanning chain plus extra
/// random bonds, every bond of dimension `bond`, entries uniform in the unit
/// square. Tensors carry at most `max_rank` axes.
pub fn random_network(
    tensors: usize,
    extra_bonds: usize,
    bond: usize,
    max_rank: usize,
    rng: &mut RngStream,
) -> Result<TensorNetwork, ContractionError> {
    if tensors < 2 || bond == 0 || max_rank < 2 {
        return Err(ContractionError::InvalidNetwork(
            "need at least two tensors, bond ≥ 1 and rank ≥ 2".into(),
        ));
    }
    let mut axes: Vec<Vec<String>> = vec![Vec::new(); tensors];
    let mut bonds = 0;
    for t in 1..tensors {
        let partner = loop {
            let p = rng.below(t as u64) as usize;
            if axes[p].len() < max_rank {
                break p;
            }
        };
        let l = format!("e{bonds}");
        bonds += 1;
        axes[t].push(l.clone());
        axes[partner].push(l);
    }
    let mut attempts = 0;
    let mut added = 0;
    while added < extra_bonds && attempts < 100 * (extra_bonds + 1) {
        attempts += 1;
        let a = rng.below(tensors as u64) as usize;
        let b = rng.below(tensors as u64) as usize;
        if a == b || axes[a].len() >= max_rank || axes[b].len() >= max_rank {
            continue;
        }
        let l = format!("e{bonds}");
        bonds += 1;
        added += 1;
        axes[a].push(l.clone());
        axes[b].push(l);
    }
    let list = axes
        .into_iter()
        .map(|labels| {
            let shape = vec![bond; labels.len()];
            let size = shape.iter().product();
            let data = (0..size)
                .map(|_| C64::new(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0))
                .collect();
            Tensor::new(labels, shape, data)
        })
        .collect::<Result<_, _>>()?;
    TensorNetwork::new(list, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(labels: &[&str], shape: &[usize]) -> Tensor {
        let size = shape.iter().product();
        Tensor::new(
            labels.iter().map(|s| s.to_string()).collect(),
            shape.to_vec(),
            vec![C64::new(1.0, 0.0); size],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(TensorNetwork::new(vec![t(&["a"], &[2]), t(&["a"], &[3])], vec![]).is_err());
        assert!(TensorNetwork::new(vec![t(&["a"], &[2])], vec![]).is_err());
        assert!(TensorNetwork::new(vec![t(&["a", "a"], &[2, 2])], vec![]).is_err());
        let three = vec![t(&["a"], &[2]), t(&["a"], &[2]), t(&["a"], &[2])];
        assert!(TensorNetwork::new(three, vec![]).is_err());
        let ok = TensorNetwork::new(
            vec![t(&["a", "b"], &[2, 3]), t(&["b"], &[3])],
            vec!["a".into()],
        )
        .unwrap();
        assert_eq!(ok.edges()[1].attachments, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn signature_ignores_entries_but_not_shapes() {
        let a = TensorNetwork::new(vec![t(&["x"], &[2]), t(&["x"], &[2])], vec![]).unwrap();
        let mut b = a.clone();
        b.tensors[0].data[0] = C64::new(5.0, 0.0);
        assert_eq!(a.signature(), b.signature());
        let c = TensorNetwork::new(vec![t(&["x"], &[3]), t(&["x"], &[3])], vec![]).unwrap();
        assert_ne!(a.signature(), c.signature());
        assert_eq!(a.signature().len(), 64);
    }
}
