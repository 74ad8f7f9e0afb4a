use serde::{Deserialize, Serialize};

use super::CircuitError;
use crate::numerics::{expm_hermitian, qr, ComplexMatrix, RngStream, C64};

const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateName {
    H,
    X,
    Y,
    Z,
    S,
    Rx,
    Ry,
    Rz,
    Rzz,
    Cx,
    Cz,
    Su4,
    Csum,
    SubspaceRy,
    SubspaceRz,
    Unitary,
}

impl GateName {
    pub fn as_str(self) -> &'static str {
        match self {
            GateName::H => "h",
            GateName::X => "x",
            GateName::Y => "y",
            GateName::Z => "z",
            GateName::S => "s",
            GateName::Rx => "rx",
            GateName::Ry => "ry",
            GateName::Rz => "rz",
            GateName::Rzz => "rzz",
            GateName::Cx => "cx",
            GateName::Cz => "cz",
            GateName::Su4 => "su4",
            GateName::Csum => "csum",
            GateName::SubspaceRy => "subspace_ry",
            GateName::SubspaceRz => "subspace_rz",
            GateName::Unitary => "unitary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "h" => GateName::H,
            "x" => GateName::X,
            "y" => GateName::Y,
            "z" => GateName::Z,
            "s" => GateName::S,
            "rx" => GateName::Rx,
            "ry" => GateName::Ry,
            "rz" => GateName::Rz,
            "rzz" => GateName::Rzz,
            "cx" | "cnot" => GateName::Cx,
            "cz" => GateName::Cz,
            "su4" => GateName::Su4,
            "csum" => GateName::Csum,
            "subspace_ry" => GateName::SubspaceRy,
            "subspace_rz" => GateName::SubspaceRz,
            "unitary" => GateName::Unitary,
            _ => return None,
        })
    }

    /// Wire count, or `None` for `unitary` (given by its matrix).
    pub fn arity(self) -> Option<usize> {
        match self {
            GateName::Rzz | GateName::Cx | GateName::Cz | GateName::Su4 | GateName::Csum => Some(2),
            GateName::Unitary => None,
            _ => Some(1),
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateName::Rx
            | GateName::Ry
            | GateName::Rz
            | GateName::Rzz
            | GateName::SubspaceRy
            | GateName::SubspaceRz => 1,
            GateName::Su4 => 15,
            _ => 0,
        }
    }

    /// Gates defined for any local dimension; the rest are qubit-only.
    pub fn allowed_for_qudits(self) -> bool {
        matches!(
            self,
            GateName::X
                | GateName::Z
                | GateName::Csum
                | GateName::SubspaceRy
                | GateName::SubspaceRz
                | GateName::Unitary
        )
    }
}

/// One circuit instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateInstruction {
    pub name: GateName,
    pub wires: Vec<usize>,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<ComplexMatrix>,
    /// Two-level subspace `(j, k)` for subspace rotations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<(usize, usize)>,
}

impl GateInstruction {
    pub fn new(name: GateName, wires: Vec<usize>, params: Vec<f64>) -> Self {
        Self {
            name,
            wires,
            params,
            matrix: None,
            levels: None,
        }
    }

    /// Checks arity, parameters and levels against wire count `n` and local dimension `d`.
    pub fn validate(&self, n: usize, d: usize) -> Result<(), CircuitError> {
        let name = self.name.as_str();
        if d != 2 && !self.name.allowed_for_qudits() {
            return Err(CircuitError::QubitOnlyGate {
                name: name.into(),
                d,
            });
        }
        let arity = match self.name.arity() {
            Some(a) => a,
            None => {
                let m = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| CircuitError::InvalidGate("unitary without matrix".into()))?;
                let dim = d.checked_pow(self.wires.len() as u32).unwrap_or(usize::MAX);
                if m.rows() != dim || m.cols() != dim {
                    return Err(CircuitError::InvalidGate(format!(
                        "unitary on {} wires needs a {dim}x{dim} matrix, got {}x{}",
                        self.wires.len(),
                        m.rows(),
                        m.cols()
                    )));
                }
                m.check_finite()?;
                if m.unitarity_defect() > UNITARY_TOL {
                    return Err(CircuitError::NotUnitary(m.unitarity_defect()));
                }
                self.wires.len()
            }
        };
        if self.wires.len() != arity {
            return Err(CircuitError::Arity {
                name: name.into(),
                expected: arity,
                got: self.wires.len(),
            });
        }
        for (k, &w) in self.wires.iter().enumerate() {
            if w >= n {
                return Err(CircuitError::WireOutOfRange { wire: w, n });
            }
            if self.wires[..k].contains(&w) {
                return Err(CircuitError::DuplicateWire(w));
            }
        }
        if self.params.len() != self.name.param_count() {
            return Err(CircuitError::ParamCount {
                name: name.into(),
                expected: self.name.param_count(),
                got: self.params.len(),
            });
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(CircuitError::NonFiniteParam);
        }
        if matches!(self.name, GateName::SubspaceRy | GateName::SubspaceRz) {
            match self.levels {
                Some((j, k)) if j != k && j < d && k < d => {}
                other => return Err(CircuitError::BadLevels { levels: other, d }),
            }
        }
        Ok(())
    }

    /// Local matrix of the gate; wires[0] is the most significant local digit.
    pub fn matrix(&self, d: usize) -> Result<ComplexMatrix, CircuitError> {
        let p = |k: usize| self.params[k];
        Ok(match self.name {
            GateName::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                real(2, &[s, s, s, -s])
            }
            GateName::X => shift(d),
            GateName::Y => {
                ComplexMatrix::from_vec(2, 2, vec![zero(), c(0.0, -1.0), c(0.0, 1.0), zero()])?
            }
            GateName::Z => clock(d),
            GateName::S => ComplexMatrix::diag(&[one(), c(0.0, 1.0)]),
            GateName::Rx => rx(p(0)),
            GateName::Ry => ry(p(0)),
            GateName::Rz => rz(p(0)),
            GateName::Rzz => {
                let (a, b) = (
                    C64::from_polar(1.0, -p(0) / 2.0),
                    C64::from_polar(1.0, p(0) / 2.0),
                );
                ComplexMatrix::diag(&[a, b, b, a])
            }
            GateName::Cx => csum(2),
            GateName::Cz => ComplexMatrix::diag(&[one(), one(), one(), -one()]),
            GateName::Su4 => su4(&self.params)?,
            GateName::Csum => csum(d),
            GateName::SubspaceRy | GateName::SubspaceRz => {
                let (j, k) = self
                    .levels
                    .ok_or(CircuitError::BadLevels { levels: None, d })?;
                let block = if self.name == GateName::SubspaceRy {
                    ry(p(0))
                } else {
                    rz(p(0))
                };
                embed_two_level(d, j, k, &block)
            }
            GateName::Unitary => self
                .matrix
                .clone()
                .ok_or_else(|| CircuitError::InvalidGate("unitary without matrix".into()))?,
        })
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn zero() -> C64 {
    c(0.0, 0.0)
}

fn one() -> C64 {
    c(1.0, 0.0)
}

fn real(n: usize, data: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_real(n, n, data).expect("static gate data")
}

/// e^{2πi j/d}, exact at multiples of a quarter turn.
pub fn root_of_unity(j: usize, d: usize) -> C64 {
    let j = j % d;
    if (4 * j) % d == 0 {
        return match 4 * j / d {
            0 => one(),
            1 => c(0.0, 1.0),
            2 => c(-1.0, 0.0),
            _ => c(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / d as f64)
}

/// Generalized Z: diag(1, ω, …, ω^{d−1}).
pub fn clock(d: usize) -> ComplexMatrix {
    ComplexMatrix::diag(&(0..d).map(|j| root_of_unity(j, d)).collect::<Vec<_>>())
}

/// Generalized X: |j⟩ → |j+1 mod d⟩.
pub fn shift(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(
        d,
        d,
        |r, col| if r == (col + 1) % d { one() } else { zero() },
    )
}

/// |x, y⟩ → |x, x+y mod d⟩.
pub fn csum(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, col| {
        let (x, y) = (col / d, col % d);
        if r == x * d + (x + y) % d {
            one()
        } else {
            zero()
        }
    })
}

pub fn rx(theta: f64) -> ComplexMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    ComplexMatrix::from_vec(2, 2, vec![c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
        .expect("2x2")
}

pub fn ry(theta: f64) -> ComplexMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    real(2, &[co, -s, s, co])
}

pub fn rz(theta: f64) -> ComplexMatrix {
    ComplexMatrix::diag(&[
        C64::from_polar(1.0, -theta / 2.0),
        C64::from_polar(1.0, theta / 2.0),
    ])
}

/// Places a 2×2 block on span{|j⟩, |k⟩} of a d-level system.
pub fn embed_two_level(d: usize, j: usize, k: usize, block: &ComplexMatrix) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(d);
    m[(j, j)] = block[(0, 0)];
    m[(j, k)] = block[(0, 1)];
    m[(k, j)] = block[(1, 0)];
    m[(k, k)] = block[(1, 1)];
    m
}

/// Single-qubit Pauli matrix for code 0..=3.
pub fn pauli_matrix(code: u8) -> ComplexMatrix {
    match code {
        0 => ComplexMatrix::identity(2),
        1 => shift(2),
        2 => ComplexMatrix::from_vec(2, 2, vec![zero(), c(0.0, -1.0), c(0.0, 1.0), zero()])
            .expect("2x2"),
        _ => clock(2),
    }
}

/// The 15 non-identity two-qubit Pauli words in order (a, b) ≠ (0, 0),
/// with `a` on the first wire varying slowest.
pub fn su4_basis() -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(15);
    for a in 0..4u8 {
        for b in 0..4u8 {
            if a == 0 && b == 0 {
                continue;
            }
            out.push(pauli_matrix(a).kron(&pauli_matrix(b)));
        }
    }
    out
}

/// exp(−i Σ_k θ_k P_k / 2) over [`su4_basis`].
pub fn su4(theta: &[f64]) -> Result<ComplexMatrix, CircuitError> {
    if theta.len() != 15 {
        return Err(CircuitError::ParamCount {
            name: "su4".into(),
            expected: 15,
            got: theta.len(),
        });
    }
    let mut gen = ComplexMatrix::zeros(4, 4);
    for (t, p) in theta.iter().zip(su4_basis()) {
        gen = gen.add(&p.scale(c(t / 2.0, 0.0)))?;
    }
    Ok(expm_hermitian(&gen, 1.0)?)
}

/// Haar-random element of SU(4): QR of a complex Ginibre matrix with the
/// phases of R's diagonal moved into Q, then divided by a fourth root of det.
pub fn haar_su4(rng: &mut RngStream) -> ComplexMatrix {
    haar_unitary(4, rng, true)
}

/// Haar-random d×d unitary; with `special`, rescaled to unit determinant.
pub fn haar_unitary(dim: usize, rng: &mut RngStream, special: bool) -> ComplexMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re * s, im * s)
    });
    let (q, r) = qr(&g).expect("finite Gaussian draws");
    let mut u = ComplexMatrix::from_fn(dim, dim, |row, col| {
        let rd = r[(col, col)];
        let phase = if rd.norm() > 0.0 {
            rd / rd.norm()
        } else {
            one()
        };
        q[(row, col)] * phase
    });
    if special {
        let det = crate::numerics::determinant(&u).expect("square");
        let root = C64::from_polar(1.0, -det.arg() / dim as f64);
        u = u.scale(root);
    }
    u
}
