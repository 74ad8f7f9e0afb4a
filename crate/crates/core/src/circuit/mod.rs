//! Exact state-vector engine for qubits and qudits.
//!
//! Rotations follow rx(θ) = exp(−iθX/2) (likewise ry, rz), rzz(θ) =
//! exp(−iθ Z⊗Z/2), and su4(θ) = exp(−i Σ_k θ_k P_k/2) over the 15
//! non-identity two-qubit Pauli words ordered by [`gates::su4_basis`].
//! Entropies are in bits.

pub mod gates;
pub mod mipt;
mod state;

use serde::{Deserialize, Serialize};

use crate::numerics::{ComplexMatrix, NumericsError};

pub use gates::{haar_su4, GateInstruction, GateName};
pub use state::{MeasureMode, StateVector, ZERO_PROB_TOL};

/// Default cap on the number of amplitudes a run may allocate.
pub const DEFAULT_MAX_AMPLITUDES: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error("wire {wire} out of range for {n} wires")]
    WireOutOfRange { wire: usize, n: usize },
    #[error("wire {0} listed twice")]
    DuplicateWire(usize),
    #[error("gate {name} takes {expected} wires, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("gate {name} takes {expected} parameters, got {got}")]
    ParamCount {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("non-finite gate parameter")]
    NonFiniteParam,
    #[error("gate {name} is only defined for qubits (d = {d})")]
    QubitOnlyGate { name: String, d: usize },
    #[error("subspace levels {levels:?} invalid for d = {d}")]
    BadLevels {
        levels: Option<(usize, usize)>,
        d: usize,
    },
    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("state needs {dim} amplitudes, above the guard of {max}")]
    MemoryGuard { dim: u128, max: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("malformed bitstring '{0}'")]
    MalformedBitstring(String),
    #[error("outcome {outcome} on wire {wire} has zero probability")]
    ZeroProbability { wire: usize, outcome: usize },
    #[error("invalid subsystem {0}")]
    InvalidSubsystem(String),
    #[error("instruction {index} ({name}) has no OpenQASM 2.0 form")]
    UnsupportedExport { index: usize, name: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// An ordered gate list over `n` wires of local dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    d: usize,
    ops: Vec<GateInstruction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_state: Option<StateVector>,
}

macro_rules! fixed_gate {
    ($fn_name:ident, $gate:ident) => {
        pub fn $fn_name(&mut self, w: usize) -> Result<&mut Self, CircuitError> {
            self.push(GateInstruction::new(GateName::$gate, vec![w], vec![]))
        }
    };
}

macro_rules! rotation_gate {
    ($fn_name:ident, $gate:ident) => {
        pub fn $fn_name(&mut self, w: usize, theta: f64) -> Result<&mut Self, CircuitError> {
            self.push(GateInstruction::new(GateName::$gate, vec![w], vec![theta]))
        }
    };
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            d: 2,
            ops: Vec::new(),
            initial_state: None,
        }
    }

    pub fn new_qudit(n: usize, d: usize) -> Result<Self, CircuitError> {
        if d < 2 {
            return Err(CircuitError::InvalidGate(format!(
                "local dimension {d} < 2"
            )));
        }
        Ok(Self {
            n,
            d,
            ops: Vec::new(),
            initial_state: None,
        })
    }

    pub fn with_initial_state(mut self, psi: StateVector) -> Result<Self, CircuitError> {
        if psi.n() != self.n || psi.d() != self.d {
            return Err(CircuitError::SizeMismatch("initial state shape".into()));
        }
        self.initial_state = Some(psi);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ops(&self) -> &[GateInstruction] {
        &self.ops
    }

    pub fn initial_state(&self) -> Option<&StateVector> {
        self.initial_state.as_ref()
    }

    pub fn push(&mut self, instr: GateInstruction) -> Result<&mut Self, CircuitError> {
        instr.validate(self.n, self.d)?;
        self.ops.push(instr);
        Ok(self)
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self, CircuitError> {
        if other.n != self.n || other.d != self.d {
            return Err(CircuitError::SizeMismatch(
                "appending a circuit of different shape".into(),
            ));
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(self)
    }

    fixed_gate!(h, H);
    fixed_gate!(x, X);
    fixed_gate!(y, Y);
    fixed_gate!(z, Z);
    fixed_gate!(s, S);
    rotation_gate!(rx, Rx);
    rotation_gate!(ry, Ry);
    rotation_gate!(rz, Rz);

    pub fn rzz(&mut self, a: usize, b: usize, theta: f64) -> Result<&mut Self, CircuitError> {
        self.push(GateInstruction::new(GateName::Rzz, vec![a, b], vec![theta]))
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<&mut Self, CircuitError> {
        self.push(GateInstruction::new(
            GateName::Cx,
            vec![control, target],
            vec![],
        ))
    }

    pub fn cz(&mut self, a: usize, b: usize) -> Result<&mut Self, CircuitError> {
        self.push(GateInstruction::new(GateName::Cz, vec![a, b], vec![]))
    }

    pub fn su4(&mut self, a: usize, b: usize, theta: &[f64]) -> Result<&mut Self, CircuitError> {
        self.push(GateInstruction::new(
            GateName::Su4,
            vec![a, b],
            theta.to_vec(),
        ))
    }

    pub fn csum(&mut self, control: usize, target: usize) -> Result<&mut Self, CircuitError> {
        self.push(GateInstruction::new(
            GateName::Csum,
            vec![control, target],
            vec![],
        ))
    }

    pub fn subspace_ry(
        &mut self,
        w: usize,
        theta: f64,
        j: usize,
        k: usize,
    ) -> Result<&mut Self, CircuitError> {
        let mut g = GateInstruction::new(GateName::SubspaceRy, vec![w], vec![theta]);
        g.levels = Some((j, k));
        self.push(g)
    }

    pub fn subspace_rz(
        &mut self,
        w: usize,
        theta: f64,
        j: usize,
        k: usize,
    ) -> Result<&mut Self, CircuitError> {
        let mut g = GateInstruction::new(GateName::SubspaceRz, vec![w], vec![theta]);
        g.levels = Some((j, k));
        self.push(g)
    }

    pub fn unitary(
        &mut self,
        wires: &[usize],
        m: ComplexMatrix,
    ) -> Result<&mut Self, CircuitError> {
        let mut g = GateInstruction::new(GateName::Unitary, wires.to_vec(), vec![]);
        g.matrix = Some(m);
        self.push(g)
    }

    /// Applies every instruction in order to the initial state.
    pub fn run(&self) -> Result<StateVector, CircuitError> {
        self.run_with_guard(DEFAULT_MAX_AMPLITUDES)
    }

    pub fn run_with_guard(&self, max_amplitudes: usize) -> Result<StateVector, CircuitError> {
        let dim = (self.d as u128).pow(self.n as u32);
        if dim > max_amplitudes as u128 {
            return Err(CircuitError::MemoryGuard {
                dim,
                max: max_amplitudes,
            });
        }
        let mut psi = match &self.initial_state {
            Some(s) => s.clone(),
            None => StateVector::zero(self.n, self.d),
        };
        self.apply_to(&mut psi)?;
        Ok(psi)
    }

    /// Applies the instructions to an existing state.
    pub fn apply_to(&self, psi: &mut StateVector) -> Result<(), CircuitError> {
        if psi.n() != self.n || psi.d() != self.d {
            return Err(CircuitError::SizeMismatch(
                "state does not match circuit".into(),
            ));
        }
        for op in &self.ops {
            op.validate(self.n, self.d)?;
            psi.apply_matrix(&op.wires, &op.matrix(self.d)?)?;
        }
        Ok(())
    }

    /// OpenQASM 2.0 text. `rzz` is lowered to cx · rz · cx.
    pub fn to_openqasm(&self) -> Result<String, CircuitError> {
        if self.d != 2 {
            return Err(CircuitError::QubitOnlyGate {
                name: "openqasm export".into(),
                d: self.d,
            });
        }
        let mut out = format!(
            "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{}];\n",
            self.n
        );
        for (index, op) in self.ops.iter().enumerate() {
            let w = &op.wires;
            let line = match op.name {
                GateName::H | GateName::X | GateName::Y | GateName::Z | GateName::S => {
                    format!("{} q[{}];\n", op.name.as_str(), w[0])
                }
                GateName::Rx | GateName::Ry | GateName::Rz => {
                    format!("{}({}) q[{}];\n", op.name.as_str(), op.params[0], w[0])
                }
                GateName::Cx | GateName::Cz => {
                    format!("{} q[{}],q[{}];\n", op.name.as_str(), w[0], w[1])
                }
                GateName::Rzz => format!(
                    "cx q[{a}],q[{b}];\nrz({t}) q[{b}];\ncx q[{a}],q[{b}];\n",
                    a = w[0],
                    b = w[1],
                    t = op.params[0]
                ),
                _ => {
                    return Err(CircuitError::UnsupportedExport {
                        index,
                        name: op.name.as_str().into(),
                    })
                }
            };
            out.push_str(&line);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("circuit serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, CircuitError> {
        let raw: Circuit = serde_json::from_value(v.clone())
            .map_err(|e| CircuitError::InvalidGate(e.to_string()))?;
        let mut c = Circuit::new_qudit(raw.n, raw.d)?;
        if let Some(s) = raw.initial_state {
            c = c.with_initial_state(s)?;
        }
        for op in raw.ops {
            c.push(op)?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::PauliSum;
    use crate::numerics::C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn basic_runs() {
        let mut circ = Circuit::new(1);
        circ.h(0).unwrap();
        let psi = circ.run().unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((psi.amplitudes()[0] - c(s, 0.0)).norm() < 1e-15);
        assert!((psi.amplitudes()[1] - c(s, 0.0)).norm() < 1e-15);

        let mut bell = Circuit::new(2);
        bell.h(0).unwrap().cx(0, 1).unwrap();
        let zz = PauliSum::from_labels(&[(1.0, "ZZ")]).unwrap();
        assert!((bell.run().unwrap().energy(&zz).unwrap() - 1.0).abs() < 1e-12);

        let mut flip = Circuit::new(1);
        flip.rx(0, std::f64::consts::PI).unwrap();
        let psi = flip.run().unwrap();
        assert!((psi.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn validation_errors() {
        let mut circ = Circuit::new(2);
        assert!(matches!(circ.cx(0, 0), Err(CircuitError::DuplicateWire(0))));
        assert!(matches!(
            circ.h(2),
            Err(CircuitError::WireOutOfRange { .. })
        ));
        assert!(matches!(
            circ.rx(0, f64::NAN),
            Err(CircuitError::NonFiniteParam)
        ));
        assert!(circ
            .unitary(
                &[0],
                ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap()
            )
            .is_err());
        let mut q = Circuit::new_qudit(2, 3).unwrap();
        assert!(matches!(q.h(0), Err(CircuitError::QubitOnlyGate { .. })));
        assert!(matches!(
            q.subspace_ry(0, 1.0, 1, 1),
            Err(CircuitError::BadLevels { .. })
        ));
        assert!(matches!(
            q.subspace_ry(0, 1.0, 0, 3),
            Err(CircuitError::BadLevels { .. })
        ));
        let big = Circuit::new(30);
        assert!(matches!(big.run(), Err(CircuitError::MemoryGuard { .. })));
    }

    #[test]
    fn qudit_gates() {
        let mut q = Circuit::new_qudit(2, 3).unwrap();
        q.x(0)
            .unwrap()
            .x(1)
            .unwrap()
            .x(1)
            .unwrap()
            .csum(0, 1)
            .unwrap();
        let psi = q.run().unwrap();
        assert_eq!(psi.amplitude("10").unwrap(), c(1.0, 0.0));

        for y in 0..3 {
            let mut q = Circuit::new_qudit(2, 3).unwrap();
            for _ in 0..y {
                q.x(1).unwrap();
            }
            q.csum(0, 1).unwrap();
            let psi = q.run().unwrap();
            assert_eq!(psi.amplitudes()[y], c(1.0, 0.0));
        }

        let mut q = Circuit::new_qudit(1, 3).unwrap();
        q.subspace_ry(0, std::f64::consts::PI, 0, 2).unwrap();
        let psi = q.run().unwrap();
        assert!((psi.amplitudes()[2].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qasm_export() {
        let mut bell = Circuit::new(2);
        bell.h(0).unwrap().cx(0, 1).unwrap().rx(0, 1.5).unwrap();
        let text = bell.to_openqasm().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "OPENQASM 2.0;");
        assert_eq!(lines[2], "qreg q[2];");
        assert_eq!(&lines[3..], &["h q[0];", "cx q[0],q[1];", "rx(1.5) q[0];"]);

        let mut bad = Circuit::new(2);
        bad.h(0).unwrap().su4(0, 1, &[0.1; 15]).unwrap();
        assert!(matches!(
            bad.to_openqasm(),
            Err(CircuitError::UnsupportedExport { index: 1, .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let mut circ = Circuit::new(2);
        circ.h(0)
            .unwrap()
            .rzz(0, 1, 0.3)
            .unwrap()
            .unitary(&[1], gates::ry(0.2))
            .unwrap();
        let back = Circuit::from_json(&circ.to_json()).unwrap();
        assert_eq!(back, circ);
    }
}
