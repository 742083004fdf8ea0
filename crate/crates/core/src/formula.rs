//! Symbolic qubit-formula engine.
//!
//! Every qubit carries a formula: a sum over GF(2) of symbols, one symbol per
//! `|+>` initialisation. CNOT adds the control's formula into the target's.
//! A qubit is removed by an X-basis measurement whose outcome drives Pauli-Z
//! corrections on qubits whose formulas sum to the removed one. Whatever is
//! left with a single symbol is a Bell pair (two holders) or a GHZ state.
//!
//! The engine also records the circuit it executed so that the same gate
//! sequence, including measurement outcomes, can be replayed on a stabilizer
//! tableau.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, AddAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u32);

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Dense qubit index. Doubles as the tableau column when a circuit is replayed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitId(pub u32);

impl QubitId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// A GF(2) sum of symbols. The empty formula is the label `0`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct QubitFormula {
    symbols: BTreeSet<SymbolId>,
}

impl QubitFormula {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn symbol(s: SymbolId) -> Self {
        let mut symbols = BTreeSet::new();
        symbols.insert(s);
        Self { symbols }
    }

    pub fn is_zero(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The symbol, if the formula is a single symbol.
    pub fn single(&self) -> Option<SymbolId> {
        if self.symbols.len() == 1 {
            self.symbols.iter().next().copied()
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, s: SymbolId) -> bool {
        self.symbols.contains(&s)
    }

    pub fn symbols(&self) -> impl Iterator<Item = SymbolId> + '_ {
        self.symbols.iter().copied()
    }

    /// Adds a single symbol (mod 2).
    pub fn toggle(&mut self, s: SymbolId) {
        if !self.symbols.remove(&s) {
            self.symbols.insert(s);
        }
    }
}

impl FromIterator<SymbolId> for QubitFormula {
    /// Sums the symbols, so repeated symbols cancel in pairs.
    fn from_iter<I: IntoIterator<Item = SymbolId>>(iter: I) -> Self {
        let mut f = QubitFormula::zero();
        for s in iter {
            f.toggle(s);
        }
        f
    }
}

impl AddAssign<&QubitFormula> for QubitFormula {
    fn add_assign(&mut self, rhs: &QubitFormula) {
        for &s in &rhs.symbols {
            self.toggle(s);
        }
    }
}

impl Add<&QubitFormula> for &QubitFormula {
    type Output = QubitFormula;

    fn add(self, rhs: &QubitFormula) -> QubitFormula {
        let symbols = self
            .symbols
            .symmetric_difference(&rhs.symbols)
            .copied()
            .collect();
        QubitFormula { symbols }
    }
}

impl fmt::Display for QubitFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for s in &self.symbols {
            if !first {
                write!(f, "+")?;
            }
            first = false;
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitStatus {
    Active,
    Terminated,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("qubit {0} does not exist")]
    UnknownQubit(QubitId),
    #[error("qubit {0} is terminated")]
    TerminatedQubit(QubitId),
    #[error("qubit {0} cannot act on itself")]
    SelfTarget(QubitId),
    #[error("qubit {0} appears twice in the correction set")]
    DuplicateCorrection(QubitId),
    #[error("corrections sum to {found}, but {victim} carries {expected}")]
    FormulaMismatch {
        victim: QubitId,
        expected: QubitFormula,
        found: QubitFormula,
    },
}

/// One executed operation, in execution order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CircuitOp {
    PreparePlus(QubitId),
    PrepareZero(QubitId),
    Cnot {
        control: QubitId,
        target: QubitId,
    },
    /// An explicit Pauli-Z, not tied to a termination.
    PauliZ(QubitId),
    /// X-basis measurement of `victim`; a 1 outcome applies Z to every
    /// correction qubit.
    Terminate {
        victim: QubitId,
        corrections: Vec<QubitId>,
        outcome: bool,
    },
}

/// A Pauli-Z that was actually applied, for correction-traffic accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZRecord {
    pub target: QubitId,
    /// The terminated qubit whose outcome triggered this Z, if any.
    pub cause: Option<QubitId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub symbol: SymbolId,
    pub qubits: Vec<QubitId>,
}

/// Grouping of active qubits by their formula.
///
/// Every active qubit lands in exactly one of `clusters`, `unresolved`
/// (more than one symbol) or `idle` (formula `0`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterReport {
    pub clusters: Vec<Cluster>,
    pub unresolved: Vec<QubitId>,
    pub idle: Vec<QubitId>,
}

impl ClusterReport {
    pub fn cluster_of(&self, s: SymbolId) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.symbol == s)
    }
}

#[derive(Clone, Debug)]
struct QubitRecord {
    formula: QubitFormula,
    status: QubitStatus,
}

#[derive(Clone, Debug)]
pub struct FormulaEngine {
    qubits: Vec<QubitRecord>,
    next_symbol: u32,
    rng: ChaCha8Rng,
    circuit: Vec<CircuitOp>,
    z_log: Vec<ZRecord>,
}

impl FormulaEngine {
    /// Engine whose measurement outcomes are drawn from `seed`.
    pub fn new(seed: u64) -> Self {
        Self::with_rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(rng: ChaCha8Rng) -> Self {
        Self {
            qubits: Vec::new(),
            next_symbol: 0,
            rng,
            circuit: Vec::new(),
            z_log: Vec::new(),
        }
    }

    pub fn new_plus(&mut self) -> (QubitId, SymbolId) {
        let s = SymbolId(self.next_symbol);
        self.next_symbol += 1;
        let q = self.push(QubitFormula::symbol(s));
        self.circuit.push(CircuitOp::PreparePlus(q));
        (q, s)
    }

    pub fn new_zero(&mut self) -> QubitId {
        let q = self.push(QubitFormula::zero());
        self.circuit.push(CircuitOp::PrepareZero(q));
        q
    }

    fn push(&mut self, formula: QubitFormula) -> QubitId {
        let q = QubitId(self.qubits.len() as u32);
        self.qubits.push(QubitRecord {
            formula,
            status: QubitStatus::Active,
        });
        q
    }

    fn active(&self, q: QubitId) -> Result<&QubitRecord, FormulaError> {
        let rec = self
            .qubits
            .get(q.index())
            .ok_or(FormulaError::UnknownQubit(q))?;
        match rec.status {
            QubitStatus::Active => Ok(rec),
            QubitStatus::Terminated => Err(FormulaError::TerminatedQubit(q)),
        }
    }

    pub fn apply_cnot(&mut self, control: QubitId, target: QubitId) -> Result<(), FormulaError> {
        if control == target {
            return Err(FormulaError::SelfTarget(control));
        }
        let added = self.active(control)?.formula.clone();
        self.active(target)?;
        self.qubits[target.index()].formula += &added;
        self.circuit.push(CircuitOp::Cnot { control, target });
        Ok(())
    }

    /// Z acts on the phase only; the formula is untouched.
    pub fn apply_pauli_z(&mut self, target: QubitId) -> Result<(), FormulaError> {
        self.active(target)?;
        self.z_log.push(ZRecord {
            target,
            cause: None,
        });
        self.circuit.push(CircuitOp::PauliZ(target));
        Ok(())
    }

    /// Measures `victim` in the X basis and removes it.
    ///
    /// The formulas of `corrections` must sum to the victim's formula. The
    /// outcome is drawn from the engine's seeded stream; on a 1 a Z is logged
    /// against every correction qubit.
    pub fn terminate(
        &mut self,
        victim: QubitId,
        corrections: &[QubitId],
    ) -> Result<bool, FormulaError> {
        let expected = self.active(victim)?.formula.clone();
        let mut seen = BTreeSet::new();
        let mut found = QubitFormula::zero();
        for &c in corrections {
            if c == victim {
                return Err(FormulaError::SelfTarget(c));
            }
            if !seen.insert(c) {
                return Err(FormulaError::DuplicateCorrection(c));
            }
            found += &self.active(c)?.formula;
        }
        if found != expected {
            return Err(FormulaError::FormulaMismatch {
                victim,
                expected,
                found,
            });
        }

        let outcome: bool = self.rng.gen();
        self.qubits[victim.index()].status = QubitStatus::Terminated;
        if outcome {
            for &c in corrections {
                self.z_log.push(ZRecord {
                    target: c,
                    cause: Some(victim),
                });
            }
        }
        self.circuit.push(CircuitOp::Terminate {
            victim,
            corrections: corrections.to_vec(),
            outcome,
        });
        Ok(outcome)
    }

    pub fn classify(&self) -> ClusterReport {
        let mut by_symbol: BTreeMap<SymbolId, Vec<QubitId>> = BTreeMap::new();
        let mut report = ClusterReport::default();
        for (i, rec) in self.qubits.iter().enumerate() {
            if rec.status != QubitStatus::Active {
                continue;
            }
            let q = QubitId(i as u32);
            match (rec.formula.single(), rec.formula.is_zero()) {
                (Some(s), _) => by_symbol.entry(s).or_default().push(q),
                (None, true) => report.idle.push(q),
                (None, false) => report.unresolved.push(q),
            }
        }
        report.clusters = by_symbol
            .into_iter()
            .map(|(symbol, qubits)| Cluster { symbol, qubits })
            .collect();
        report
    }

    pub fn formula(&self, q: QubitId) -> Result<&QubitFormula, FormulaError> {
        self.qubits
            .get(q.index())
            .map(|r| &r.formula)
            .ok_or(FormulaError::UnknownQubit(q))
    }

    pub fn status(&self, q: QubitId) -> Result<QubitStatus, FormulaError> {
        self.qubits
            .get(q.index())
            .map(|r| r.status)
            .ok_or(FormulaError::UnknownQubit(q))
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits.len()
    }

    pub fn symbol_count(&self) -> usize {
        self.next_symbol as usize
    }

    pub fn circuit(&self) -> &[CircuitOp] {
        &self.circuit
    }

    pub fn z_log(&self) -> &[ZRecord] {
        &self.z_log
    }
}
