//! Pauli words in symplectic (x-mask, z-mask) form.
//!
//! Bit `q` of each mask refers to qubit `q`. The letter on a qubit is read
//! from the pair `(x, z)`: `(0,0) = I`, `(1,0) = X`, `(1,1) = Y`, `(0,1) = Z`,
//! where `Y` is the Hermitian Pauli-Y. A [`PauliString`] carries an exact
//! Gaussian-integer coefficient so that products and commutators never
//! accumulate floating-point phase error.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

/// Largest register the symplectic masks can address.
pub const MAX_PAULI_QUBITS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },
    #[error("pauli strings support at most {MAX_PAULI_QUBITS} qubits, got {0}")]
    TooManyQubits(usize),
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("cannot parse pauli string {0:?}")]
    Parse(String),
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
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

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Exact complex coefficient: Gaussian integer.
pub type Coeff = Complex<i64>;

const ONE: Coeff = Complex { re: 1, im: 0 };

fn i_pow(k: u32) -> Coeff {
    match k & 3 {
        0 => Complex::new(1, 0),
        1 => Complex::new(0, 1),
        2 => Complex::new(-1, 0),
        _ => Complex::new(0, -1),
    }
}

/// A scaled Pauli word `coeff · σ_0 ⊗ σ_1 ⊗ … ⊗ σ_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
    coeff: Coeff,
}

impl PauliString {
    /// Unit-coefficient word from masks.
    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Result<Self, PauliError> {
        if n_qubits > MAX_PAULI_QUBITS {
            return Err(PauliError::TooManyQubits(n_qubits));
        }
        let valid = if n_qubits == 64 {
            u64::MAX
        } else {
            (1u64 << n_qubits) - 1
        };
        if (x | z) & !valid != 0 {
            let top = 63 - (x | z).leading_zeros() as usize;
            return Err(PauliError::QubitOutOfRange {
                index: top,
                n_qubits,
            });
        }
        Ok(Self {
            n_qubits,
            x,
            z,
            coeff: ONE,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            x: 0,
            z: 0,
            coeff: ONE,
        }
    }

    /// `letter` on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, letter: Pauli) -> Result<Self, PauliError> {
        if qubit >= n_qubits {
            return Err(PauliError::QubitOutOfRange {
                index: qubit,
                n_qubits,
            });
        }
        let (xb, zb) = letter.bits();
        Self::from_masks(n_qubits, (xb as u64) << qubit, (zb as u64) << qubit)
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<Self, PauliError> {
        let n = letters.len();
        if n > MAX_PAULI_QUBITS {
            return Err(PauliError::TooManyQubits(n));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, l) in letters.iter().enumerate() {
            let (xb, zb) = l.bits();
            x |= (xb as u64) << q;
            z |= (zb as u64) << q;
        }
        Self::from_masks(n, x, z)
    }

    /// `Z_0 Z_1 … Z_{n-1}`.
    pub fn all_z(n_qubits: usize) -> Self {
        let mask = if n_qubits == 64 {
            u64::MAX
        } else {
            (1u64 << n_qubits) - 1
        };
        Self {
            n_qubits,
            x: 0,
            z: mask,
            coeff: ONE,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn key(&self) -> (u64, u64) {
        (self.x, self.z)
    }

    pub fn coeff(&self) -> Coeff {
        self.coeff
    }

    /// Same word with unit coefficient.
    pub fn word(&self) -> Self {
        Self {
            coeff: ONE,
            ..*self
        }
    }

    pub fn scaled(&self, factor: Coeff) -> Self {
        Self {
            coeff: self.coeff * factor,
            ..*self
        }
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n_qubits).map(|q| self.letter(q)).collect()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_identity_word(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of `Y` letters.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Letters only, e.g. `"ZIY"` (qubit 0 first).
    pub fn label(&self) -> String {
        self.letters().into_iter().map(Pauli::as_char).collect()
    }

    fn check_same_size(&self, other: &Self) -> Result<(), PauliError> {
        if self.n_qubits != other.n_qubits {
            Err(PauliError::QubitMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    pub fn commutes_with(&self, other: &Self) -> Result<bool, PauliError> {
        self.check_same_size(other)?;
        Ok(symplectic(self, other) == 0)
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self, PauliError> {
        self.check_same_size(other)?;
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let e = (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 4 * 64
            - (x & z).count_ones();
        Ok(Self {
            n_qubits: self.n_qubits,
            x,
            z,
            coeff: self.coeff * other.coeff * i_pow(e),
        })
    }

    /// `[self, other] = self·other − other·self`, or `None` when the words commute.
    pub fn commutator(&self, other: &Self) -> Result<Option<Self>, PauliError> {
        if self.commutes_with(other)? {
            return Ok(None);
        }
        Ok(Some(self.mul(other)?.scaled(Complex::new(2, 0))))
    }

    /// Dense `2^n` action helper: the word's masks and phase expressed in
    /// amplitude-index bit order (qubit 0 is the most significant bit).
    pub(crate) fn index_masks(&self) -> (usize, usize) {
        let n = self.n_qubits;
        let rev = |m: u64| -> usize {
            let mut out = 0usize;
            for q in 0..n {
                if m >> q & 1 == 1 {
                    out |= 1 << (n - 1 - q);
                }
            }
            out
        };
        (rev(self.x), rev(self.z))
    }
}

fn symplectic(a: &PauliString, b: &PauliString) -> u32 {
    ((a.x & b.z).count_ones() + (a.z & b.x).count_ones()) & 1
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.coeff;
        let prefix = match (c.re, c.im) {
            (1, 0) => String::new(),
            (-1, 0) => "-".into(),
            (0, 1) => "i".into(),
            (0, -1) => "-i".into(),
            (r, 0) => format!("{r}·"),
            (0, i) => format!("{i}i·"),
            (r, i) => format!("({r}{i:+}i)·"),
        };
        write!(f, "{prefix}{}", self.label())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Accepts an optional `+`, `-`, `i`, `-i` or `+i` prefix followed by
    /// the letters `IXYZ` (qubit 0 first).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (coeff, body) = if let Some(rest) = t.strip_prefix("-i") {
            (Complex::new(0, -1), rest)
        } else if let Some(rest) = t.strip_prefix("+i") {
            (Complex::new(0, 1), rest)
        } else if let Some(rest) = t.strip_prefix('i') {
            (Complex::new(0, 1), rest)
        } else if let Some(rest) = t.strip_prefix('-') {
            (Complex::new(-1, 0), rest)
        } else if let Some(rest) = t.strip_prefix('+') {
            (ONE, rest)
        } else {
            (ONE, t)
        };
        if body.is_empty() {
            return Err(PauliError::Parse(s.to_string()));
        }
        let letters = body
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(PauliError::Parse(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_letters(&letters)?.scaled(coeff))
    }
}

impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Real linear combination of Hermitian Pauli words.
///
/// Terms are keyed by `(x_mask, z_mask)` so iteration order is stable.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum<T: Real> {
    n_qubits: usize,
    terms: BTreeMap<(u64, u64), T>,
}

impl<T: Real> PauliSum<T> {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    /// A single Hermitian word. The coefficient must be real (±1, ±2, …).
    pub fn from_pauli(p: &PauliString) -> Self {
        let mut s = Self::zero(p.n_qubits());
        debug_assert_eq!(p.coeff().im, 0, "PauliSum holds Hermitian terms only");
        s.add_term(p.key(), T::lit(p.coeff().re as f64));
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn add_term(&mut self, key: (u64, u64), coeff: T) {
        let e = self.terms.entry(key).or_insert_with(T::zero);
        *e += coeff;
    }

    pub fn coeff(&self, key: (u64, u64)) -> T {
        self.terms.get(&key).copied().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (PauliString, T)> + '_ {
        self.terms.iter().map(move |(&(x, z), &c)| {
            (
                PauliString {
                    n_qubits: self.n_qubits,
                    x,
                    z,
                    coeff: ONE,
                },
                c,
            )
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Drop terms with `|c| <= tol`.
    pub fn pruned(mut self, tol: T) -> Self {
        self.terms.retain(|_, c| c.abs() > tol);
        self
    }

    /// `Tr(S²)/2^n`, the squared Hilbert–Schmidt norm normalised per dimension.
    pub fn norm_sqr(&self) -> T {
        self.terms.values().map(|&c| c * c).sum()
    }

    pub fn scale(mut self, k: T) -> Self {
        for c in self.terms.values_mut() {
            *c *= k;
        }
        self
    }
}
