//! Uniform sampling of the two-qubit Clifford group (modulo global phase).
//!
//! Every element is written uniquely as C1⊗C1 followed by one of four
//! entangling classes: nothing, CNOT then S1⊗S1, iSWAP then S1⊗S1, or SWAP.
//! C1 is the 24-element single-qubit group and S1 = {I, R, R²} with R cycling
//! X → Y → Z.

use std::collections::{HashSet, VecDeque};
use std::sync::OnceLock;

use super::{CliffordGate, StabilizerTableau};
use crate::numerics::RngStream;

pub const TWO_QUBIT_CLIFFORD_COUNT: usize = 11520;

/// A gate on local wires 0 and 1; single-qubit gates use only the first slot.
pub type LocalGate = (CliffordGate, [usize; 2]);

fn single_qubit_cliffords() -> &'static [Vec<CliffordGate>] {
    static C1: OnceLock<Vec<Vec<CliffordGate>>> = OnceLock::new();
    C1.get_or_init(|| {
        let mut seen = HashSet::new();
        let mut words = Vec::new();
        let mut queue = VecDeque::from([Vec::<CliffordGate>::new()]);
        while let Some(word) = queue.pop_front() {
            let mut t = StabilizerTableau::new(1);
            for &g in &word {
                t.apply(g, &[0]).expect("single-qubit word");
            }
            if !seen.insert(t) {
                continue;
            }
            for g in [CliffordGate::H, CliffordGate::S] {
                let mut next = word.clone();
                next.push(g);
                queue.push_back(next);
            }
            words.push(word);
        }
        debug_assert_eq!(words.len(), 24);
        words
    })
}

fn push_word(out: &mut Vec<LocalGate>, word: &[CliffordGate], wire: usize) {
    out.extend(word.iter().map(|&g| (g, [wire, wire])));
}

fn push_s1(out: &mut Vec<LocalGate>, k: usize, wire: usize) {
    for _ in 0..k {
        push_word(out, &[CliffordGate::S, CliffordGate::H], wire);
    }
}

fn push_swap(out: &mut Vec<LocalGate>) {
    out.push((CliffordGate::Cx, [0, 1]));
    out.push((CliffordGate::Cx, [1, 0]));
    out.push((CliffordGate::Cx, [0, 1]));
}

/// Gate sequence of the Clifford with the given index in `0..11520`.
pub fn two_qubit_clifford_gates(index: usize) -> Vec<LocalGate> {
    assert!(
        index < TWO_QUBIT_CLIFFORD_COUNT,
        "Clifford index {index} out of range"
    );
    let c1 = single_qubit_cliffords();
    let mut out = Vec::new();
    let (class, k) = match index {
        i if i < 576 => (0, i),
        i if i < 576 + 5184 => (1, i - 576),
        i if i < 576 + 2 * 5184 => (2, i - 576 - 5184),
        i => (3, i - 576 - 2 * 5184),
    };
    let (a, b, rest) = if class == 1 || class == 2 {
        (k / 216, (k / 9) % 24, k % 9)
    } else {
        (k / 24, k % 24, 0)
    };
    push_word(&mut out, &c1[a], 0);
    push_word(&mut out, &c1[b], 1);
    match class {
        1 => out.push((CliffordGate::Cx, [0, 1])),
        2 => {
            // iSWAP = (S ⊗ S) · SWAP · CZ
            out.push((CliffordGate::Cz, [0, 1]));
            push_swap(&mut out);
            out.push((CliffordGate::S, [0, 0]));
            out.push((CliffordGate::S, [1, 1]));
        }
        3 => push_swap(&mut out),
        _ => {}
    }
    if class == 1 || class == 2 {
        push_s1(&mut out, rest / 3, 0);
        push_s1(&mut out, rest % 3, 1);
    }
    out
}

/// Gate sequence of a uniformly random two-qubit Clifford.
pub fn random_two_qubit_clifford_gates(rng: &mut RngStream) -> Vec<LocalGate> {
    two_qubit_clifford_gates(rng.below(TWO_QUBIT_CLIFFORD_COUNT as u64) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tableau_of(index: usize) -> StabilizerTableau {
        let mut t = StabilizerTableau::new(2);
        for (g, w) in two_qubit_clifford_gates(index) {
            t.apply(g, &w[..g.arity()]).unwrap();
        }
        t
    }

    #[test]
    fn single_qubit_group_has_24_elements() {
        assert_eq!(single_qubit_cliffords().len(), 24);
    }

    #[test]
    fn enumeration_covers_the_group_without_repeats() {
        let distinct: HashSet<StabilizerTableau> =
            (0..TWO_QUBIT_CLIFFORD_COUNT).map(tableau_of).collect();
        assert_eq!(distinct.len(), TWO_QUBIT_CLIFFORD_COUNT);
    }
}
