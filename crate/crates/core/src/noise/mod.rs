//! Kraus channels, rule-based noise placement, trajectory and density-matrix
//! simulation, and tensored readout mitigation.
//!
//! Depolarizing noise of strength p keeps the identity with weight 1 − p and
//! spreads p uniformly over the 4ᵏ − 1 non-identity Pauli words. Channels act
//! after the gate they are attached to.

mod density;
mod readout;
mod trajectory;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circuit::gates::pauli_matrix;
use crate::circuit::{CircuitError, GateInstruction, GateName};
use crate::numerics::{ComplexMatrix, NumericsError, C64};

pub use density::{density_matrix_run, DensityMatrix, DM_MAX_QUBITS};
pub use readout::{
    apply_readout_error, readout_calibrate, readout_correct, Counts, QuasiDistribution,
    ReadoutMitigator,
};
pub use trajectory::{mc_trajectory, trajectory_average, TrajectoryStats};

/// Tolerance of the completeness check Σ K†K = I.
pub const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Kraus operators are not complete (defect {0:.3e})")]
    Incomplete(f64),
    #[error("channel on {channel} wires attached to {target}")]
    ArityMismatch { channel: usize, target: String },
    #[error("{n} qubits exceed the density-matrix limit of {max}")]
    MemoryGuard { n: usize, max: usize },
    #[error("confusion matrix of qubit {qubit} is singular")]
    SingularConfusion { qubit: usize },
    #[error("every Kraus branch has zero probability")]
    AllBranchesZero,
    #[error("noise simulation needs qubits, got d = {0}")]
    QubitsOnly(usize),
    #[error("rule {0} has a predicate matcher or an unnamed channel and cannot be serialized")]
    NotSerializable(usize),
    #[error("JSON: {0}")]
    Json(String),
}

/// Parameterized channel families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    Depolarizing {
        p: f64,
        k: usize,
    },
    AmplitudeDamping {
        gamma: f64,
    },
    PhaseDamping {
        lambda: f64,
    },
    /// Resets to |0⟩ with probability p.
    Reset {
        p: f64,
    },
    /// Amplitude damping followed by phase damping.
    ThermalRelaxation {
        gamma: f64,
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    name: String,
    k: usize,
    operators: Vec<ComplexMatrix>,
    kind: Option<ChannelKind>,
}

impl KrausChannel {
    /// Validates shapes and completeness.
    pub fn new(
        name: impl Into<String>,
        k: usize,
        operators: Vec<ComplexMatrix>,
    ) -> Result<Self, NoiseError> {
        if k == 0 || operators.is_empty() {
            return Err(NoiseError::InvalidParameter(
                "a channel needs at least one wire and one operator".into(),
            ));
        }
        let dim = 1usize << k;
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for op in &operators {
            if op.rows() != dim || op.cols() != dim {
                return Err(NoiseError::InvalidParameter(format!(
                    "{}x{} operator in a {k}-qubit channel",
                    op.rows(),
                    op.cols()
                )));
            }
            op.check_finite()?;
            sum = sum.add(&op.adjoint().matmul(op)?)?;
        }
        let defect = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if defect > COMPLETENESS_TOL {
            return Err(NoiseError::Incomplete(defect));
        }
        Ok(Self {
            name: name.into(),
            k,
            operators,
            kind: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn kind(&self) -> Option<ChannelKind> {
        self.kind
    }

    /// max |Σ K†K − I|.
    pub fn completeness_defect(&self) -> f64 {
        let dim = 1usize << self.k;
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for op in &self.operators {
            sum = sum
                .add(&op.adjoint().matmul(op).expect("square"))
                .expect("same shape");
        }
        sum.max_abs_diff(&ComplexMatrix::identity(dim))
    }

    /// `second ∘ self`: the operators K'_j K_i over all pairs.
    pub fn then(&self, second: &KrausChannel) -> Result<KrausChannel, NoiseError> {
        if self.k != second.k {
            return Err(NoiseError::ArityMismatch {
                channel: second.k,
                target: format!("a {}-wire channel", self.k),
            });
        }
        let mut ops = Vec::with_capacity(self.operators.len() * second.operators.len());
        for b in &second.operators {
            for a in &self.operators {
                ops.push(b.matmul(a)?);
            }
        }
        KrausChannel::new(format!("{}+{}", self.name, second.name), self.k, ops)
    }
}

fn check_unit(name: &str, x: f64) -> Result<(), NoiseError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(NoiseError::InvalidParameter(format!(
            "{name} = {x} is outside [0, 1]"
        )));
    }
    Ok(())
}

fn real_diag(v: &[f64]) -> ComplexMatrix {
    ComplexMatrix::diag(&v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
}

fn pauli_word(code: usize, k: usize) -> ComplexMatrix {
    (0..k).fold(ComplexMatrix::identity(1), |acc, i| {
        let digit = (code >> (2 * (k - 1 - i))) & 3;
        acc.kron(&pauli_matrix(digit as u8))
    })
}

pub fn make_channel(kind: ChannelKind) -> Result<KrausChannel, NoiseError> {
    let mut ch = match kind {
        ChannelKind::Depolarizing { p, k } => {
            check_unit("p", p)?;
            if !(1..=4).contains(&k) {
                return Err(NoiseError::InvalidParameter(format!(
                    "depolarizing arity {k}"
                )));
            }
            let words = (1usize << (2 * k)) - 1;
            let mut ops =
                vec![ComplexMatrix::identity(1 << k).scale(C64::new((1.0 - p).sqrt(), 0.0))];
            if p > 0.0 {
                let w = C64::new((p / words as f64).sqrt(), 0.0);
                ops.extend((1..=words).map(|code| pauli_word(code, k).scale(w)));
            }
            KrausChannel::new("depolarizing", k, ops)?
        }
        ChannelKind::AmplitudeDamping { gamma } => {
            check_unit("gamma", gamma)?;
            let mut k1 = ComplexMatrix::zeros(2, 2);
            k1[(0, 1)] = C64::new(gamma.sqrt(), 0.0);
            KrausChannel::new(
                "amplitude_damping",
                1,
                vec![real_diag(&[1.0, (1.0 - gamma).sqrt()]), k1],
            )?
        }
        ChannelKind::PhaseDamping { lambda } => {
            check_unit("lambda", lambda)?;
            KrausChannel::new(
                "phase_damping",
                1,
                vec![
                    real_diag(&[1.0, (1.0 - lambda).sqrt()]),
                    real_diag(&[0.0, lambda.sqrt()]),
                ],
            )?
        }
        ChannelKind::Reset { p } => {
            check_unit("p", p)?;
            let mut from_one = ComplexMatrix::zeros(2, 2);
            from_one[(0, 1)] = C64::new(p.sqrt(), 0.0);
            KrausChannel::new(
                "reset",
                1,
                vec![
                    ComplexMatrix::identity(2).scale(C64::new((1.0 - p).sqrt(), 0.0)),
                    real_diag(&[p.sqrt(), 0.0]),
                    from_one,
                ],
            )?
        }
        ChannelKind::ThermalRelaxation { gamma, lambda } => {
            let amp = make_channel(ChannelKind::AmplitudeDamping { gamma })?;
            let mut t = amp.then(&make_channel(ChannelKind::PhaseDamping { lambda })?)?;
            t.name = "thermal_relaxation".into();
            t
        }
    };
    ch.kind = Some(kind);
    Ok(ch)
}

/// Which instructions a rule applies to.
#[derive(Clone)]
pub enum Matcher {
    /// Every instruction with this gate name, optionally only on the listed
    /// wire tuples (order-sensitive).
    Gate {
        name: GateName,
        qubits: Option<Vec<Vec<usize>>>,
    },
    /// Instructions on exactly one of the listed wire tuples, any gate.
    Qubits(Vec<Vec<usize>>),
    /// Arbitrary test on the instruction; not serializable.
    Predicate(Arc<dyn Fn(&GateInstruction) -> bool + Send + Sync>),
}

impl std::fmt::Debug for Matcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Matcher::Gate { name, qubits } => f
                .debug_struct("Gate")
                .field("name", name)
                .field("qubits", qubits)
                .finish(),
            Matcher::Qubits(q) => f.debug_tuple("Qubits").field(q).finish(),
            Matcher::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

impl Matcher {
    pub fn gate(name: GateName) -> Self {
        Matcher::Gate { name, qubits: None }
    }

    pub fn gate_on(name: GateName, qubits: Vec<Vec<usize>>) -> Self {
        Matcher::Gate {
            name,
            qubits: Some(qubits),
        }
    }

    pub fn predicate(f: impl Fn(&GateInstruction) -> bool + Send + Sync + 'static) -> Self {
        Matcher::Predicate(Arc::new(f))
    }

    pub fn matches(&self, instr: &GateInstruction) -> bool {
        match self {
            Matcher::Gate { name, qubits } => {
                *name == instr.name && qubits.as_ref().map_or(true, |q| q.contains(&instr.wires))
            }
            Matcher::Qubits(q) => q.contains(&instr.wires),
            Matcher::Predicate(f) => f(instr),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseRule {
    pub matcher: Matcher,
    pub channel: KrausChannel,
}

/// Ordered noise rules plus optional per-qubit readout error (p(0|0), p(1|1)).
/// Every rule that matches an instruction contributes its channel, in
/// insertion order; a rule that does not match simply falls through.
#[derive(Debug, Clone, Default)]
pub struct NoiseConf {
    rules: Vec<NoiseRule>,
    readout: Option<Vec<(f64, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct RuleJson {
    gate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    qubits: Option<Vec<Vec<usize>>>,
    channel: ChannelKind,
}

#[derive(Serialize, Deserialize)]
struct ConfJson {
    #[serde(default)]
    rules: Vec<RuleJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    readout: Option<Vec<(f64, f64)>>,
}

impl NoiseConf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rules(&self) -> &[NoiseRule] {
        &self.rules
    }

    pub fn readout(&self) -> Option<&[(f64, f64)]> {
        self.readout.as_deref()
    }

    /// Adds a rule. Named gates and wire tuples must have the channel's arity.
    pub fn attach(
        &mut self,
        matcher: Matcher,
        channel: KrausChannel,
    ) -> Result<&mut Self, NoiseError> {
        let k = channel.arity();
        let tuples = match &matcher {
            Matcher::Gate { name, qubits } => {
                if let Some(a) = name.arity() {
                    if a != k {
                        return Err(NoiseError::ArityMismatch {
                            channel: k,
                            target: format!("gate {}", name.as_str()),
                        });
                    }
                }
                qubits.clone().unwrap_or_default()
            }
            Matcher::Qubits(q) => q.clone(),
            Matcher::Predicate(_) => vec![],
        };
        if let Some(t) = tuples.iter().find(|t| t.len() != k) {
            return Err(NoiseError::ArityMismatch {
                channel: k,
                target: format!("wires {t:?}"),
            });
        }
        self.rules.push(NoiseRule { matcher, channel });
        Ok(self)
    }

    pub fn set_readout(&mut self, per_qubit: Vec<(f64, f64)>) -> Result<&mut Self, NoiseError> {
        for &(p00, p11) in &per_qubit {
            check_unit("p(0|0)", p00)?;
            check_unit("p(1|1)", p11)?;
        }
        self.readout = Some(per_qubit);
        Ok(self)
    }

    /// Channels to apply after `instr`, in rule order.
    pub fn channels_for(&self, instr: &GateInstruction) -> Result<Vec<&KrausChannel>, NoiseError> {
        let mut out = Vec::new();
        for rule in &self.rules {
            if rule.matcher.matches(instr) {
                if rule.channel.arity() != instr.wires.len() {
                    return Err(NoiseError::ArityMismatch {
                        channel: rule.channel.arity(),
                        target: format!("{} on {:?}", instr.name.as_str(), instr.wires),
                    });
                }
                out.push(&rule.channel);
            }
        }
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn to_json(&self) -> Result<String, NoiseError> {
        let rules = self
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let channel = r.channel.kind().ok_or(NoiseError::NotSerializable(i))?;
                match &r.matcher {
                    Matcher::Gate { name, qubits } => Ok(RuleJson {
                        gate: Some(name.as_str().to_string()),
                        qubits: qubits.clone(),
                        channel,
                    }),
                    Matcher::Qubits(q) => Ok(RuleJson {
                        gate: None,
                        qubits: Some(q.clone()),
                        channel,
                    }),
                    Matcher::Predicate(_) => Err(NoiseError::NotSerializable(i)),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        serde_json::to_string_pretty(&ConfJson {
            rules,
            readout: self.readout.clone(),
        })
        .map_err(|e| NoiseError::Json(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, NoiseError> {
        let parsed: ConfJson =
            serde_json::from_str(text).map_err(|e| NoiseError::Json(e.to_string()))?;
        let mut conf = NoiseConf::new();
        for r in parsed.rules {
            let channel = make_channel(r.channel)?;
            let matcher = match (r.gate, r.qubits) {
                (Some(g), qubits) => {
                    let name = GateName::parse(&g)
                        .ok_or_else(|| NoiseError::Json(format!("unknown gate '{g}'")))?;
                    Matcher::Gate { name, qubits }
                }
                (None, Some(q)) => Matcher::Qubits(q),
                (None, None) => return Err(NoiseError::Json("rule needs a gate or qubits".into())),
            };
            conf.attach(matcher, channel)?;
        }
        if let Some(ro) = parsed.readout {
            conf.set_readout(ro)?;
        }
        Ok(conf)
    }
}
