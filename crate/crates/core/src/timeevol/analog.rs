use super::{ode_evol, Generator, OdeSettings, TimeEvolError};
use crate::circuit::{CircuitError, GateInstruction, StateVector};

#[derive(Debug, Clone)]
pub enum AnalogBlock {
    Digital(GateInstruction),
    /// Evolution under `generator` for `duration`, integrated with `settings`.
    Analog {
        generator: Generator,
        duration: f64,
        settings: OdeSettings,
    },
}

/// Ordered digital gates and analog evolution blocks on `n` qubits.
#[derive(Debug, Clone)]
pub struct AnalogCircuit {
    n: usize,
    blocks: Vec<AnalogBlock>,
}

impl AnalogCircuit {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            blocks: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[AnalogBlock] {
        &self.blocks
    }

    pub fn add_gate(&mut self, instr: GateInstruction) -> Result<&mut Self, TimeEvolError> {
        instr.validate(self.n, 2)?;
        self.blocks.push(AnalogBlock::Digital(instr));
        Ok(self)
    }

    pub fn add_analog_block(
        &mut self,
        generator: Generator,
        duration: f64,
        settings: OdeSettings,
    ) -> Result<&mut Self, TimeEvolError> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(TimeEvolError::InvalidArgument(format!(
                "analog block duration {duration}"
            )));
        }
        if generator.dim() != 1 << self.n {
            return Err(CircuitError::SizeMismatch(format!(
                "generator of dimension {} on {} qubits",
                generator.dim(),
                self.n
            ))
            .into());
        }
        self.blocks.push(AnalogBlock::Analog {
            generator,
            duration,
            settings,
        });
        Ok(self)
    }
}

/// Applies the blocks in order: gates through the state-vector engine and
/// analog blocks through [`ode_evol`].
pub fn run_analog_circuit(
    c: &AnalogCircuit,
    psi0: &StateVector,
) -> Result<StateVector, TimeEvolError> {
    if psi0.n() != c.n || psi0.d() != 2 {
        return Err(CircuitError::SizeMismatch(format!(
            "{}-qubit circuit on a state with {} wires",
            c.n,
            psi0.n()
        ))
        .into());
    }
    let mut psi = psi0.clone();
    for block in &c.blocks {
        match block {
            AnalogBlock::Digital(instr) => psi.apply_matrix(&instr.wires, &instr.matrix(2)?)?,
            AnalogBlock::Analog {
                generator,
                duration,
                settings,
            } => {
                if *duration > 0.0 {
                    psi = ode_evol(generator, &psi, &[*duration], settings)?
                        .states
                        .remove(0);
                }
            }
        }
    }
    Ok(psi)
}
