//! Stabilizer tableau simulator (destabilizer + stabilizer rows, CHP style).
//!
//! This is the amplitude-level referee for the symbolic formula engine: a
//! circuit recorded by [`FormulaEngine`](crate::formula::FormulaEngine) can be
//! replayed here gate by gate and the resulting pairs checked for `|Phi+>`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::formula::{CircuitOp, QubitId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableauError {
    #[error("qubit index {index} out of range for {n} qubits")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("gate control and target are both qubit {0}")]
    SelfTarget(usize),
    #[error("pauli string has {found} letters but the tableau has {expected} qubits")]
    LengthMismatch { expected: usize, found: usize },
    #[error("tableau needs at least one qubit")]
    Empty,
    #[error("invalid pauli string {0:?}")]
    BadPauli(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    Cnot { control: usize, target: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

/// A signed tensor product of single-qubit Paulis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub negative: bool,
    pub letters: Vec<Pauli>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            negative: false,
            letters: vec![Pauli::I; n],
        }
    }

    /// `letter` on each qubit in `support`, identity elsewhere.
    pub fn on(n: usize, letter: Pauli, support: &[usize]) -> Self {
        let mut p = Self::identity(n);
        for &q in support {
            p.letters[q] = letter;
        }
        p
    }

    pub fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl FromStr for PauliString {
    type Err = TableauError;

    /// Parses strings like `"+XZI"` or `"-YY"`; the sign is optional.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let letters = body
            .chars()
            .map(|c| match c {
                'I' | '_' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(TableauError::BadPauli(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { negative, letters })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.negative { '-' } else { '+' })?;
        for l in &self.letters {
            let c = match l {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Result of a single-qubit measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub bit: bool,
    /// True when the measured operator was already in the stabilizer group.
    pub deterministic: bool,
}

/// Rows `0..n` are destabilizers, `n..2n` stabilizers, `2n` is scratch.
#[derive(Clone, Debug)]
pub struct Tableau {
    n: usize,
    words: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
    signs: Vec<bool>,
}

impl Tableau {
    /// The all-zero state on `n` qubits.
    pub fn new(n: usize) -> Result<Self, TableauError> {
        if n == 0 {
            return Err(TableauError::Empty);
        }
        let words = n.div_ceil(64);
        let rows = 2 * n + 1;
        let mut t = Self {
            n,
            words,
            xs: vec![0; rows * words],
            zs: vec![0; rows * words],
            signs: vec![false; rows],
        };
        for q in 0..n {
            t.set_x(q, q, true);
            t.set_z(n + q, q, true);
        }
        Ok(t)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    fn x(&self, row: usize, q: usize) -> bool {
        self.xs[row * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    fn z(&self, row: usize, q: usize) -> bool {
        self.zs[row * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    fn set_x(&mut self, row: usize, q: usize, v: bool) {
        let w = &mut self.xs[row * self.words + q / 64];
        let m = 1u64 << (q % 64);
        if v {
            *w |= m
        } else {
            *w &= !m
        }
    }

    fn set_z(&mut self, row: usize, q: usize, v: bool) {
        let w = &mut self.zs[row * self.words + q / 64];
        let m = 1u64 << (q % 64);
        if v {
            *w |= m
        } else {
            *w &= !m
        }
    }

    fn check(&self, q: usize) -> Result<(), TableauError> {
        if q < self.n {
            Ok(())
        } else {
            Err(TableauError::IndexOutOfRange {
                index: q,
                n: self.n,
            })
        }
    }

    pub fn apply(&mut self, gate: Gate) -> Result<(), TableauError> {
        match gate {
            Gate::H(a) => {
                self.check(a)?;
                for row in 0..2 * self.n {
                    let (x, z) = (self.x(row, a), self.z(row, a));
                    self.signs[row] ^= x & z;
                    self.set_x(row, a, z);
                    self.set_z(row, a, x);
                }
            }
            Gate::X(a) => {
                self.check(a)?;
                for row in 0..2 * self.n {
                    self.signs[row] ^= self.z(row, a);
                }
            }
            Gate::Z(a) => {
                self.check(a)?;
                for row in 0..2 * self.n {
                    self.signs[row] ^= self.x(row, a);
                }
            }
            Gate::Cnot { control, target } => {
                self.check(control)?;
                self.check(target)?;
                if control == target {
                    return Err(TableauError::SelfTarget(control));
                }
                for row in 0..2 * self.n {
                    let (xa, za) = (self.x(row, control), self.z(row, control));
                    let (xb, zb) = (self.x(row, target), self.z(row, target));
                    self.signs[row] ^= xa & zb & !(xb ^ za);
                    self.set_x(row, target, xb ^ xa);
                    self.set_z(row, control, za ^ zb);
                }
            }
        }
        debug_assert!(self.commutation_ok(), "commutation broken after {gate:?}");
        Ok(())
    }

    pub fn h(&mut self, q: usize) -> Result<(), TableauError> {
        self.apply(Gate::H(q))
    }

    pub fn x_gate(&mut self, q: usize) -> Result<(), TableauError> {
        self.apply(Gate::X(q))
    }

    pub fn z_gate(&mut self, q: usize) -> Result<(), TableauError> {
        self.apply(Gate::Z(q))
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<(), TableauError> {
        self.apply(Gate::Cnot { control, target })
    }

    fn anticommute_rows(&self, a: usize, b: usize) -> bool {
        let mut parity = 0u32;
        for w in 0..self.words {
            let (xa, za) = (self.xs[a * self.words + w], self.zs[a * self.words + w]);
            let (xb, zb) = (self.xs[b * self.words + w], self.zs[b * self.words + w]);
            parity ^= ((xa & zb) ^ (za & xb)).count_ones() & 1;
        }
        parity == 1
    }

    /// Destabilizer `i` anticommutes with stabilizer `i` only; every other
    /// pair of rows commutes.
    pub fn commutation_ok(&self) -> bool {
        let n = self.n;
        for a in 0..2 * n {
            for b in a + 1..2 * n {
                let expect = a < n && b == a + n;
                if self.anticommute_rows(a, b) != expect {
                    return false;
                }
            }
        }
        true
    }

    /// Row `h` <- row `i` * row `h`, tracking the sign.
    fn rowsum(&mut self, h: usize, i: usize) {
        let mut plus = 0i64;
        let mut minus = 0i64;
        for w in 0..self.words {
            let (x1, z1) = (self.xs[i * self.words + w], self.zs[i * self.words + w]);
            let (x2, z2) = (self.xs[h * self.words + w], self.zs[h * self.words + w]);
            let y1 = x1 & z1;
            let xo = x1 & !z1;
            let zo = !x1 & z1;
            let p = (y1 & z2 & !x2) | (xo & z2 & x2) | (zo & x2 & !z2);
            let m = (y1 & x2 & !z2) | (xo & z2 & !x2) | (zo & x2 & z2);
            plus += p.count_ones() as i64;
            minus += m.count_ones() as i64;
        }
        let total = 2 * i64::from(self.signs[h]) + 2 * i64::from(self.signs[i]) + plus - minus;
        let total = total.rem_euclid(4);
        debug_assert!(total == 0 || total == 2);
        self.signs[h] = total == 2;
        for w in 0..self.words {
            self.xs[h * self.words + w] ^= self.xs[i * self.words + w];
            self.zs[h * self.words + w] ^= self.zs[i * self.words + w];
        }
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        for w in 0..self.words {
            self.xs[dst * self.words + w] = self.xs[src * self.words + w];
            self.zs[dst * self.words + w] = self.zs[src * self.words + w];
        }
        self.signs[dst] = self.signs[src];
    }

    fn clear_row(&mut self, row: usize) {
        for w in 0..self.words {
            self.xs[row * self.words + w] = 0;
            self.zs[row * self.words + w] = 0;
        }
        self.signs[row] = false;
    }

    /// Z-basis measurement. `choose` supplies the bit when the outcome is
    /// random and is not called otherwise.
    pub fn measure_z_with(
        &mut self,
        a: usize,
        choose: impl FnOnce() -> bool,
    ) -> Result<Outcome, TableauError> {
        self.check(a)?;
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&row| self.x(row, a)) {
            for row in 0..2 * n {
                if row != p && self.x(row, a) {
                    self.rowsum(row, p);
                }
            }
            self.copy_row(p - n, p);
            self.clear_row(p);
            let bit = choose();
            self.signs[p] = bit;
            self.set_z(p, a, true);
            debug_assert!(self.commutation_ok());
            Ok(Outcome {
                bit,
                deterministic: false,
            })
        } else {
            let scratch = 2 * n;
            self.clear_row(scratch);
            for i in 0..n {
                if self.x(i, a) {
                    self.rowsum(scratch, i + n);
                }
            }
            Ok(Outcome {
                bit: self.signs[scratch],
                deterministic: true,
            })
        }
    }

    pub fn measure_z(&mut self, a: usize, rng: &mut impl Rng) -> Result<Outcome, TableauError> {
        self.measure_z_with(a, || rng.gen())
    }

    /// X-basis measurement, as H-conjugated Z measurement.
    pub fn measure_x_with(
        &mut self,
        a: usize,
        choose: impl FnOnce() -> bool,
    ) -> Result<Outcome, TableauError> {
        self.h(a)?;
        let out = self.measure_z_with(a, choose)?;
        self.h(a)?;
        Ok(out)
    }

    pub fn measure_x(&mut self, a: usize, rng: &mut impl Rng) -> Result<Outcome, TableauError> {
        self.measure_x_with(a, || rng.gen())
    }

    /// Whether `p`, sign included, belongs to the stabilizer group.
    pub fn stabilizes(&mut self, p: &PauliString) -> Result<bool, TableauError> {
        if p.len() != self.n {
            return Err(TableauError::LengthMismatch {
                expected: self.n,
                found: p.len(),
            });
        }
        let n = self.n;
        let scratch = 2 * n;
        // Load p into the scratch row so commutation uses the packed path.
        self.clear_row(scratch);
        for (q, l) in p.letters.iter().enumerate() {
            let (x, z) = l.bits();
            self.set_x(scratch, q, x);
            self.set_z(scratch, q, z);
        }
        if (n..2 * n).any(|row| self.anticommute_rows(row, scratch)) {
            return Ok(false);
        }
        // p is +-(product of the stabilizers whose destabilizer anticommutes with it).
        let mut members = Vec::new();
        for i in 0..n {
            if self.anticommute_rows(i, scratch) {
                members.push(i + n);
            }
        }
        self.clear_row(scratch);
        for row in members {
            self.rowsum(scratch, row);
        }
        for (q, l) in p.letters.iter().enumerate() {
            let (x, z) = l.bits();
            if self.x(scratch, q) != x || self.z(scratch, q) != z {
                return Ok(false);
            }
        }
        Ok(self.signs[scratch] == p.negative)
    }

    /// True iff `+XX` and `+ZZ` on `(a, b)` both stabilize, i.e. the pair is
    /// in `|Phi+>` and in a product state with everything else.
    pub fn is_bell(&mut self, a: usize, b: usize) -> Result<bool, TableauError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(TableauError::SelfTarget(a));
        }
        let xx = PauliString::on(self.n, Pauli::X, &[a, b]);
        let zz = PauliString::on(self.n, Pauli::Z, &[a, b]);
        Ok(self.stabilizes(&xx)? && self.stabilizes(&zz)?)
    }

    /// The stabilizer generators, for debugging and tests.
    pub fn generators(&self) -> Vec<PauliString> {
        (self.n..2 * self.n)
            .map(|row| {
                let letters = (0..self.n)
                    .map(|q| match (self.x(row, q), self.z(row, q)) {
                        (false, false) => Pauli::I,
                        (true, false) => Pauli::X,
                        (true, true) => Pauli::Y,
                        (false, true) => Pauli::Z,
                    })
                    .collect();
                PauliString {
                    negative: self.signs[row],
                    letters,
                }
            })
            .collect()
    }
}

/// A recorded formula-engine circuit after replay on a tableau.
#[derive(Clone, Debug)]
pub struct Replay {
    pub tableau: Tableau,
    /// Measurement outcomes in circuit order.
    pub outcomes: Vec<Outcome>,
    /// Terminations whose tableau outcome differed from the recorded bit.
    /// Only deterministic measurements can disagree.
    pub disagreements: usize,
}

/// Replays `circuit` on a fresh tableau of `qubits` qubits.
///
/// Random X outcomes are forced to the bits the formula engine drew, so both
/// layers route the same correction traffic. Conditional Z corrections follow
/// the tableau's own outcome.
pub fn replay(circuit: &[CircuitOp], qubits: usize) -> Result<Replay, TableauError> {
    let mut t = Tableau::new(qubits.max(1))?;
    let mut outcomes = Vec::new();
    let mut disagreements = 0;
    let idx = |q: &QubitId| q.index();
    for op in circuit {
        match op {
            CircuitOp::PreparePlus(q) => t.h(idx(q))?,
            CircuitOp::PrepareZero(_) => {}
            CircuitOp::Cnot { control, target } => t.cnot(idx(control), idx(target))?,
            CircuitOp::PauliZ(q) => t.z_gate(idx(q))?,
            CircuitOp::Terminate {
                victim,
                corrections,
                outcome,
            } => {
                let forced = *outcome;
                let out = t.measure_x_with(idx(victim), || forced)?;
                if out.bit != forced {
                    disagreements += 1;
                }
                if out.bit {
                    for c in corrections {
                        t.z_gate(idx(c))?;
                    }
                }
                outcomes.push(out);
            }
        }
    }
    Ok(Replay {
        tableau: t,
        outcomes,
        disagreements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn bell() -> Tableau {
        let mut t = Tableau::new(2).unwrap();
        t.h(0).unwrap();
        t.cnot(0, 1).unwrap();
        t
    }

    #[test]
    fn fresh_state_is_all_zero() {
        let mut t = Tableau::new(1).unwrap();
        assert!(t.stabilizes(&ps("Z")).unwrap());
        let mut t = Tableau::new(2).unwrap();
        assert!(t.stabilizes(&ps("ZI")).unwrap());
        assert!(t.stabilizes(&ps("IZ")).unwrap());
        assert!(!t.stabilizes(&ps("XI")).unwrap());
        assert!(Tableau::new(0).is_err());
    }

    #[test]
    fn hadamard_makes_plus() {
        let mut t = Tableau::new(1).unwrap();
        t.h(0).unwrap();
        assert!(t.stabilizes(&ps("X")).unwrap());
        t.z_gate(0).unwrap();
        assert!(t.stabilizes(&ps("-X")).unwrap());
        assert!(!t.stabilizes(&ps("X")).unwrap());
    }

    #[test]
    fn x_flips_zero() {
        let mut t = Tableau::new(1).unwrap();
        t.x_gate(0).unwrap();
        assert!(t.stabilizes(&ps("-Z")).unwrap());
    }

    #[test]
    fn bell_stabilizers() {
        let mut t = bell();
        assert!(t.stabilizes(&ps("XX")).unwrap());
        assert!(t.stabilizes(&ps("ZZ")).unwrap());
        assert!(!t.stabilizes(&ps("-XX")).unwrap());
        assert!(t.stabilizes(&ps("-YY")).unwrap());
        assert!(t.is_bell(0, 1).unwrap());
        let mut zero = Tableau::new(2).unwrap();
        assert!(!zero.is_bell(0, 1).unwrap());
    }

    #[test]
    fn ghz_three() {
        let mut t = Tableau::new(3).unwrap();
        t.h(0).unwrap();
        t.cnot(0, 1).unwrap();
        t.cnot(0, 2).unwrap();
        assert!(t.stabilizes(&ps("XXX")).unwrap());
        assert!(t.stabilizes(&ps("ZZI")).unwrap());
        assert!(t.stabilizes(&ps("IZZ")).unwrap());
        assert!(!t.is_bell(0, 1).unwrap());
    }

    #[test]
    fn errors() {
        let mut t = Tableau::new(2).unwrap();
        assert_eq!(t.cnot(0, 0), Err(TableauError::SelfTarget(0)));
        assert!(matches!(t.h(2), Err(TableauError::IndexOutOfRange { .. })));
        assert!(matches!(
            t.stabilizes(&ps("X")),
            Err(TableauError::LengthMismatch { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(t.measure_x(5, &mut rng).is_err());
    }

    #[test]
    fn x_measurement_of_eigenstates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = Tableau::new(1).unwrap();
        t.h(0).unwrap();
        let out = t.measure_x(0, &mut rng).unwrap();
        assert_eq!(
            out,
            Outcome {
                bit: false,
                deterministic: true
            }
        );
        t.z_gate(0).unwrap();
        let out = t.measure_x(0, &mut rng).unwrap();
        assert_eq!(
            out,
            Outcome {
                bit: true,
                deterministic: true
            }
        );
    }

    #[test]
    fn bell_half_measures_randomly() {
        let mut seen = [false; 2];
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = bell();
            let out = t.measure_x(0, &mut rng).unwrap();
            assert!(!out.deterministic);
            seen[out.bit as usize] = true;
            // Partner collapses to the same X eigenstate.
            let again = t.measure_x(1, &mut rng).unwrap();
            assert!(again.deterministic);
            assert_eq!(again.bit, out.bit);
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn deterministic_measurement_leaves_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut t = bell();
        let before = t.generators();
        // ZZ is in the group, so Z on qubit 0 after CNOT is deterministic.
        t.cnot(0, 1).unwrap();
        t.h(0).unwrap();
        let a = t.measure_z(1, &mut rng).unwrap();
        assert!(a.deterministic);
        let after_once = t.generators();
        t.measure_z(1, &mut rng).unwrap();
        assert_eq!(after_once, t.generators());
        assert_ne!(before, after_once);
    }

    #[test]
    fn seeded_measurements_reproduce() {
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Tableau::new(4).unwrap();
            for q in 0..4 {
                t.h(q).unwrap();
            }
            (0..4)
                .map(|q| t.measure_z(q, &mut rng).unwrap().bit)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn pauli_string_round_trip() {
        let p = ps("-XIYZ");
        assert_eq!(p.to_string(), "-XIYZ");
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn wide_tableau_crosses_word_boundary() {
        let n = 70;
        let mut t = Tableau::new(n).unwrap();
        t.h(3).unwrap();
        t.cnot(3, 67).unwrap();
        assert!(t.is_bell(3, 67).unwrap());
        assert!(t.is_bell(67, 3).unwrap());
        assert!(!t.is_bell(3, 66).unwrap());
    }
}
