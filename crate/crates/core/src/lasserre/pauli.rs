use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::infotools::combinations;
use crate::scalar::C;
use crate::tensor::gates;
use crate::{Error, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NONTRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i & 3]
    }

    /// `self · other = i^s · out`.
    pub fn mul(self, other: Pauli) -> (Pauli, u8) {
        let (a, b) = (self.index(), other.index());
        if a == 0 {
            return (other, 0);
        }
        if b == 0 {
            return (self, 0);
        }
        if a == b {
            return (Pauli::I, 0);
        }
        // XY = iZ, YZ = iX, ZX = iY; reversed order picks up −i.
        let s = if (b + 3 - a) % 3 == 1 { 1 } else { 3 };
        (Pauli::from_index(6 - a - b), s)
    }

    pub fn matrix(self) -> Matrix {
        match self {
            Pauli::I => Matrix::identity(2),
            Pauli::X => gates::pauli_x(),
            Pauli::Y => gates::pauli_y(),
            Pauli::Z => gates::pauli_z(),
        }
    }

    fn letter(self) -> char {
        ['I', 'X', 'Y', 'Z'][self.index()]
    }
}

/// Tensor product of single-qubit Paulis; phases of products are tracked as
/// exact powers of `i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { letters: vec![Pauli::I; n] }
    }

    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    /// `letters[t]` on `sites[t]`, identity elsewhere.
    pub fn on_sites(n: usize, sites: &[usize], letters: &[Pauli]) -> Self {
        let mut out = Self::identity(n);
        for (&s, &p) in sites.iter().zip(letters) {
            out.letters[s] = p;
        }
        out
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&s| self.letters[s] != Pauli::I).collect()
    }

    /// `self · other = i^s · out`, `s ∈ {0,1,2,3}`.
    pub fn mul(&self, other: &PauliString) -> (PauliString, u8) {
        debug_assert_eq!(self.n(), other.n());
        let mut s = 0u8;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (p, phase) = a.mul(b);
                s = (s + phase) & 3;
                p
            })
            .collect();
        (PauliString { letters }, s)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        self.mul(other).1.is_multiple_of(2)
    }

    /// Dense `2^n × 2^n` matrix, site 0 most significant.
    pub fn matrix(&self) -> Matrix {
        self.letters.iter().fold(Matrix::identity(1), |acc, p| acc.kron(&p.matrix()))
    }

    /// Compact label such as `X2Z5`; the identity is `I`.
    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn parse(n: usize, label: &str) -> crate::Result<Self> {
        let bad = || Error::Invalid(format!("bad Pauli label {label:?}"));
        let mut out = Self::identity(n);
        if label == "I" {
            return Ok(out);
        }
        let mut chars = label.chars().peekable();
        while let Some(c) = chars.next() {
            let p = match c {
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(bad()),
            };
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let site = usize::from_str(&digits).map_err(|_| bad())?;
            if site >= n || out.letters[site] != Pauli::I {
                return Err(bad());
            }
            out.letters[site] = p;
        }
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weight() == 0 {
            return f.write_str("I");
        }
        for (s, p) in self.letters.iter().enumerate().filter(|(_, p)| **p != Pauli::I) {
            write!(f, "{}{}", p.letter(), s)?;
        }
        Ok(())
    }
}

/// `i^s`
pub fn phase(s: u8) -> C<f64> {
    match s & 3 {
        0 => C::new(1.0, 0.0),
        1 => C::new(0.0, 1.0),
        2 => C::new(-1.0, 0.0),
        _ => C::new(0.0, -1.0),
    }
}

/// All strings on `n` sites of weight at most `max_weight`, ordered by
/// weight, then support (lexicographic), then letters.
pub fn strings_up_to_weight(n: usize, max_weight: usize) -> Vec<PauliString> {
    let sites: Vec<usize> = (0..n).collect();
    let mut out = vec![PauliString::identity(n)];
    for w in 1..=max_weight.min(n) {
        for support in combinations(&sites, w) {
            for code in 0..3usize.pow(w as u32) {
                let mut rest = code;
                let mut letters = vec![Pauli::X; w];
                for slot in letters.iter_mut().rev() {
                    *slot = Pauli::NONTRIVIAL[rest % 3];
                    rest /= 3;
                }
                out.push(PauliString::on_sites(n, &support, &letters));
            }
        }
    }
    out
}

/// Real coefficients `c_{PQ} = tr(h (P ⊗ Q)) / 4` of a Hermitian two-qubit
/// operator, indexed `[P][Q]`.
pub fn two_qubit_expansion(h: &Matrix) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for p in Pauli::ALL {
        for q in Pauli::ALL {
            out[p.index()][q.index()] = h.real_inner(&p.matrix().kron(&q.matrix())) / 4.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        proptest::collection::vec(0usize..4, n).prop_map(|v| PauliString::new(v.into_iter().map(Pauli::from_index).collect()))
    }

    #[test]
    fn single_site_table_matches_matrices() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let (c, s) = a.mul(b);
                let want = a.matrix().matmul(&b.matrix());
                assert!(c.matrix().scale_c(phase(s)).sub(&want).max_abs() < 1e-15, "{a:?}{b:?}");
            }
        }
    }

    #[test]
    fn labels_round_trip() {
        let p = PauliString::on_sites(6, &[2, 5], &[Pauli::X, Pauli::Z]);
        assert_eq!(p.label(), "X2Z5");
        assert_eq!(PauliString::parse(6, "X2Z5").unwrap(), p);
        assert_eq!(PauliString::parse(3, "I").unwrap(), PauliString::identity(3));
        assert!(PauliString::parse(3, "X7").is_err());
        assert!(PauliString::parse(3, "X1X1").is_err());
    }

    #[test]
    fn enumeration_counts() {
        // Σ_{w≤2} C(5,w) 3^w = 1 + 15 + 90
        assert_eq!(strings_up_to_weight(5, 2).len(), 106);
        assert_eq!(strings_up_to_weight(3, 3).len(), 64);
    }

    #[test]
    fn expansion_of_swap() {
        // SWAP = (II + XX + YY + ZZ)/2
        let c = two_qubit_expansion(&gates::swap(2));
        for p in 0..4 {
            for q in 0..4 {
                let want = if p == q { 0.5 } else { 0.0 };
                assert!((c[p][q] - want).abs() < 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn product_is_associative(a in arb_string(4), b in arb_string(4), c in arb_string(4)) {
            let (ab, s1) = a.mul(&b);
            let (ab_c, s2) = ab.mul(&c);
            let (bc, t1) = b.mul(&c);
            let (a_bc, t2) = a.mul(&bc);
            prop_assert_eq!(ab_c, a_bc);
            prop_assert_eq!((s1 + s2) & 3, (t1 + t2) & 3);
        }

        #[test]
        fn product_matches_dense(a in arb_string(3), b in arb_string(3)) {
            let (c, s) = a.mul(&b);
            let want = a.matrix().matmul(&b.matrix());
            prop_assert!(c.matrix().scale_c(phase(s)).sub(&want).max_abs() < 1e-14);
        }
    }
}
