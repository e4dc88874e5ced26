use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use crate::trace::QubitId;

/// Single-qubit Pauli letter; phases are not tracked.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// `(x, z)` symplectic bits.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn anticommutes(self, other: Pauli) -> bool {
        let (x1, z1) = self.bits();
        let (x2, z2) = other.bits();
        (x1 & z2) ^ (z1 & x2)
    }
}

impl Mul for Pauli {
    type Output = Pauli;

    fn mul(self, rhs: Pauli) -> Pauli {
        let (x1, z1) = self.bits();
        let (x2, z2) = rhs.bits();
        Pauli::from_bits(x1 ^ x2, z1 ^ z2)
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// A tensor product of Pauli letters over named qubits. Identity letters are
/// not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PauliString {
    letters: BTreeMap<QubitId, Pauli>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(q: QubitId, p: Pauli) -> Self {
        let mut s = Self::default();
        s.set(q, p);
        s
    }

    pub fn get(&self, q: QubitId) -> Pauli {
        self.letters.get(&q).copied().unwrap_or(Pauli::I)
    }

    pub fn set(&mut self, q: QubitId, p: Pauli) {
        if p == Pauli::I {
            self.letters.remove(&q);
        } else {
            self.letters.insert(q, p);
        }
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = (QubitId, Pauli)> + '_ {
        self.letters.iter().map(|(&q, &p)| (q, p))
    }

    pub fn anticommutes(&self, other: &PauliString) -> bool {
        self.support().filter(|&(q, p)| p.anticommutes(other.get(q))).count() % 2 == 1
    }
}

impl Mul for &PauliString {
    type Output = PauliString;

    fn mul(self, rhs: &PauliString) -> PauliString {
        let mut out = self.clone();
        for (q, p) in rhs.support() {
            out.set(q, out.get(q) * p);
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "I");
        }
        let mut first = true;
        for (q, p) in self.support() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{p}_{}", q.0)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pauli() -> impl Strategy<Value = Pauli> {
        prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
    }

    #[test]
    fn letter_products() {
        assert_eq!(Pauli::X * Pauli::Z, Pauli::Y);
        assert_eq!(Pauli::Y * Pauli::Y, Pauli::I);
        assert!(Pauli::X.anticommutes(Pauli::Z));
        assert!(!Pauli::Z.anticommutes(Pauli::Z));
    }

    #[test]
    fn string_product_drops_identities() {
        let a = PauliString::single(QubitId(0), Pauli::Z);
        let b = PauliString::single(QubitId(0), Pauli::Z);
        assert!((&a * &b).is_identity());
        let c = PauliString::single(QubitId(1), Pauli::X);
        assert_eq!(format!("{}", &a * &c), "Z_0 X_1");
        assert!(!a.anticommutes(&c));
    }

    proptest! {
        #[test]
        fn product_is_a_group(a in pauli(), b in pauli(), c in pauli()) {
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!(a * a, Pauli::I);
        }
    }
}
