use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_unit, NoiseError};
use crate::circuit::Circuit;
use crate::numerics::RngStream;

/// Shot counts keyed by bitstring, site 0 first.
pub type Counts = BTreeMap<String, usize>;

/// Flips every measured bit independently: 0 → 1 with probability 1 − p00
/// and 1 → 0 with probability 1 − p11, per qubit.
pub fn apply_readout_error(
    counts: &Counts,
    per_qubit: &[(f64, f64)],
    rng: &mut RngStream,
) -> Result<Counts, NoiseError> {
    for &(p00, p11) in per_qubit {
        check_unit("p(0|0)", p00)?;
        check_unit("p(1|1)", p11)?;
    }
    let mut out = Counts::new();
    for (bits, &count) in counts {
        if bits.len() != per_qubit.len() {
            return Err(NoiseError::InvalidParameter(format!(
                "bitstring '{bits}' for {} readout entries",
                per_qubit.len()
            )));
        }
        for _ in 0..count {
            let noisy: String = bits
                .chars()
                .zip(per_qubit)
                .map(|(ch, &(p00, p11))| {
                    let u = rng.uniform();
                    match ch {
                        '0' if u >= p00 => Ok('1'),
                        '1' if u >= p11 => Ok('0'),
                        '0' | '1' => Ok(ch),
                        _ => Err(NoiseError::InvalidParameter(format!("bitstring '{bits}'"))),
                    }
                })
                .collect::<Result<_, _>>()?;
            *out.entry(noisy).or_default() += 1;
        }
    }
    Ok(out)
}

/// Per-qubit confusion matrices M[q][measured][prepared].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutMitigator {
    pub confusion: Vec<[[f64; 2]; 2]>,
}

/// Quasi-probabilities after mitigation; entries may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiDistribution {
    pub n: usize,
    pub probs: BTreeMap<String, f64>,
    pub has_negative: bool,
}

impl QuasiDistribution {
    /// Σ_x q(x) (−1)^{x_q}.
    pub fn expectation_z(&self, q: usize) -> f64 {
        self.probs
            .iter()
            .map(|(bits, p)| if bits.as_bytes()[q] == b'1' { -p } else { *p })
            .sum()
    }
}

fn marginals(counts: &Counts, n: usize) -> Result<(Vec<[usize; 2]>, usize), NoiseError> {
    let mut tally = vec![[0usize; 2]; n];
    let mut total = 0;
    for (bits, &c) in counts {
        if bits.len() != n || !bits.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(NoiseError::InvalidParameter(format!(
                "bitstring '{bits}' on {n} qubits"
            )));
        }
        for (q, b) in bits.bytes().enumerate() {
            tally[q][(b - b'0') as usize] += c;
        }
        total += c;
    }
    if total == 0 {
        return Err(NoiseError::InvalidParameter("no calibration shots".into()));
    }
    Ok((tally, total))
}

/// Runs the all-zeros and all-ones preparation circuits through `execute`
/// and estimates each qubit's confusion matrix from the marginal frequencies.
pub fn readout_calibrate(
    mut execute: impl FnMut(&Circuit) -> Result<Counts, NoiseError>,
    n: usize,
) -> Result<ReadoutMitigator, NoiseError> {
    let zeros = Circuit::new(n);
    let mut ones = Circuit::new(n);
    for q in 0..n {
        ones.x(q)?;
    }
    let (t0, n0) = marginals(&execute(&zeros)?, n)?;
    let (t1, n1) = marginals(&execute(&ones)?, n)?;
    let confusion = (0..n)
        .map(|q| {
            let p00 = t0[q][0] as f64 / n0 as f64;
            let p11 = t1[q][1] as f64 / n1 as f64;
            [[p00, 1.0 - p11], [1.0 - p00, p11]]
        })
        .collect();
    Ok(ReadoutMitigator { confusion })
}

/// Applies ⊗_q M_q⁻¹ to the empirical distribution of `counts`.
pub fn readout_correct(
    mit: &ReadoutMitigator,
    counts: &Counts,
) -> Result<QuasiDistribution, NoiseError> {
    let n = mit.confusion.len();
    let (_, total) = marginals(counts, n)?;
    let inverses: Vec<[[f64; 2]; 2]> = mit
        .confusion
        .iter()
        .enumerate()
        .map(|(q, m)| {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() < 1e-12 {
                return Err(NoiseError::SingularConfusion { qubit: q });
            }
            Ok([
                [m[1][1] / det, -m[0][1] / det],
                [-m[1][0] / det, m[0][0] / det],
            ])
        })
        .collect::<Result<_, _>>()?;
    let dim = 1usize << n;
    let mut v = vec![0.0; dim];
    for (bits, &c) in counts {
        let idx = usize::from_str_radix(bits, 2).expect("validated bitstring");
        v[idx] += c as f64 / total as f64;
    }
    for (q, inv) in inverses.iter().enumerate() {
        let stride = 1usize << (n - 1 - q);
        for block in v.chunks_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = inv[0][0] * x + inv[0][1] * y;
                *b = inv[1][0] * x + inv[1][1] * y;
            }
        }
    }
    let mut probs = BTreeMap::new();
    let mut has_negative = false;
    for (idx, &p) in v.iter().enumerate() {
        if p != 0.0 {
            has_negative |= p < 0.0;
            probs.insert(format!("{idx:0n$b}"), p);
        }
    }
    Ok(QuasiDistribution {
        n,
        probs,
        has_negative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(&str, usize)]) -> Counts {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn perfect_readout_changes_nothing() {
        let c = counts(&[("01", 10), ("11", 5)]);
        assert_eq!(
            apply_readout_error(&c, &[(1.0, 1.0); 2], &mut RngStream::new(0)).unwrap(),
            c
        );
    }

    #[test]
    fn flip_rate_matches_p00() {
        let c = counts(&[("0", 100_000)]);
        let noisy = apply_readout_error(&c, &[(0.95, 0.92)], &mut RngStream::new(1)).unwrap();
        let frac = noisy["1"] as f64 / 1e5;
        let sigma = (0.05f64 * 0.95 / 1e5).sqrt();
        assert!((frac - 0.05).abs() < 3.0 * sigma, "{frac}");
    }

    #[test]
    fn exact_confusion_inverts_exactly() {
        let mit = ReadoutMitigator {
            confusion: vec![[[0.9, 0.2], [0.1, 0.8]], [[0.95, 0.08], [0.05, 0.92]]],
        };
        // distribution of |01⟩ pushed through both confusion matrices
        let (a, b) = (mit.confusion[0], mit.confusion[1]);
        let mut c = Counts::new();
        for x in 0..2 {
            for y in 0..2 {
                let p = a[x][0] * b[y][1];
                c.insert(format!("{x}{y}"), (p * 1e6).round() as usize);
            }
        }
        let q = readout_correct(&mit, &c).unwrap();
        assert!((q.probs["01"] - 1.0).abs() < 1e-6);
        assert!((q.expectation_z(0) - 1.0).abs() < 1e-6 && (q.expectation_z(1) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn identity_confusion_and_singular_matrices() {
        let id = ReadoutMitigator {
            confusion: vec![[[1.0, 0.0], [0.0, 1.0]]],
        };
        let q = readout_correct(&id, &counts(&[("0", 3), ("1", 1)])).unwrap();
        assert_eq!(q.probs["0"], 0.75);
        assert!(!q.has_negative);
        let bad = ReadoutMitigator {
            confusion: vec![[[0.5, 0.5], [0.5, 0.5]]],
        };
        assert!(matches!(
            readout_correct(&bad, &counts(&[("0", 1)])),
            Err(NoiseError::SingularConfusion { qubit: 0 })
        ));
    }
}
