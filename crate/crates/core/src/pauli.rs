//! Exact algebra of multi-site Pauli words.
//!
//! A [`PauliString`] stores one letter per site in the symplectic (x, z) bit
//! encoding with `Y` = both bits set, and a global phase `i^phase_exp`. The
//! letter `Y` denotes the Hermitian matrix σ_y itself, so a word with
//! `phase_exp` 0 or 2 is a Hermitian operator with sign ±1.
//!
//! Products are computed word-at-a-time with bitwise operations; the per-site
//! phase rule is the one in [`PauliLetter::mul`].

use std::fmt;
use std::ops::{Mul, Neg};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitRow;
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

/// Phase exponent `p` in `a * b = i^p * c`, indexed by `[a][b]` in I, X, Y, Z order.
const PRODUCT_PHASE: [[u8; 4]; 4] = [[0, 0, 0, 0], [0, 0, 1, 3], [0, 3, 0, 1], [0, 1, 3, 0]];

impl PauliLetter {
    pub const ALL: [PauliLetter; 4] = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
    pub const NON_IDENTITY: [PauliLetter; 3] = [PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliLetter::I,
            (true, false) => PauliLetter::X,
            (true, true) => PauliLetter::Y,
            (false, true) => PauliLetter::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            PauliLetter::I => (false, false),
            PauliLetter::X => (true, false),
            PauliLetter::Y => (true, true),
            PauliLetter::Z => (false, true),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Position among X, Y, Z; `None` for the identity.
    pub fn variable_index(self) -> Option<usize> {
        match self {
            PauliLetter::I => None,
            PauliLetter::X => Some(0),
            PauliLetter::Y => Some(1),
            PauliLetter::Z => Some(2),
        }
    }

    /// Single-site product as `(phase_exp, letter)` with `a * b = i^phase_exp * letter`.
    pub fn product(self, other: PauliLetter) -> (u8, PauliLetter) {
        let (ax, az) = self.bits();
        let (bx, bz) = other.bits();
        (
            PRODUCT_PHASE[self.index()][other.index()],
            PauliLetter::from_bits(ax ^ bx, az ^ bz),
        )
    }

    pub fn commutes_with(self, other: PauliLetter) -> bool {
        self == PauliLetter::I || other == PauliLetter::I || self == other
    }

    pub fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliLetter::I),
            'X' => Some(PauliLetter::X),
            'Y' => Some(PauliLetter::Y),
            'Z' => Some(PauliLetter::Z),
            _ => None,
        }
    }
}

impl fmt::Display for PauliLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn from_parity(odd: bool) -> Self {
        if odd {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_parity(self.is_minus() != rhs.is_minus())
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        self * Sign::Minus
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Pauli word on a fixed number of sites with global phase `i^phase_exp`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: BitRow,
    z: BitRow,
    phase_exp: u8,
}

impl PauliString {
    pub fn identity(sites: usize) -> Self {
        PauliString {
            x: BitRow::zeros(sites),
            z: BitRow::zeros(sites),
            phase_exp: 0,
        }
    }

    pub fn from_letters(letters: &[PauliLetter]) -> Self {
        let mut word = PauliString::identity(letters.len());
        for (site, &letter) in letters.iter().enumerate() {
            word.set_letter(site, letter);
        }
        word
    }

    /// `letter` on `site`, identity elsewhere.
    pub fn single(sites: usize, site: usize, letter: PauliLetter) -> Self {
        let mut word = PauliString::identity(sites);
        word.set_letter(site, letter);
        word
    }

    pub fn with_phase(mut self, phase_exp: u8) -> Self {
        self.phase_exp = phase_exp % 4;
        self
    }

    pub fn with_sign(self, sign: Sign) -> Self {
        self.with_phase(if sign.is_minus() { 2 } else { 0 })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase_exp
    }

    pub fn letter(&self, site: usize) -> PauliLetter {
        PauliLetter::from_bits(self.x.get(site), self.z.get(site))
    }

    pub fn set_letter(&mut self, site: usize, letter: PauliLetter) {
        let (x, z) = letter.bits();
        self.x.set(site, x);
        self.z.set(site, z);
    }

    pub fn letters(&self) -> impl Iterator<Item = PauliLetter> + '_ {
        (0..self.len()).map(|s| self.letter(s))
    }

    pub fn x_bits(&self) -> &BitRow {
        &self.x
    }

    pub fn z_bits(&self) -> &BitRow {
        &self.z
    }

    /// Sites carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&s| self.letter(s) != PauliLetter::I).collect()
    }

    pub fn weight(&self) -> usize {
        self.support().len()
    }

    /// True when every letter is `I`, regardless of phase.
    pub fn is_identity_letters(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Same letters with phase reset to zero.
    pub fn unsigned(&self) -> PauliString {
        self.clone().with_phase(0)
    }

    fn check_len(&self, other: &PauliString) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    /// Operator product `self * other` with the phase accumulated exactly.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        self.check_len(other)?;
        let mut phase = u32::from(self.phase_exp) + u32::from(other.phase_exp);
        let (ax, az, bx, bz) = (self.x.words(), self.z.words(), other.x.words(), other.z.words());
        let mut xw: Vec<u64> = Vec::with_capacity(ax.len());
        let mut zw: Vec<u64> = Vec::with_capacity(ax.len());
        for i in 0..ax.len() {
            let (a_x, a_z, b_x, b_z) = (ax[i], az[i], bx[i], bz[i]);
            let a_xo = a_x & !a_z;
            let a_yo = a_x & a_z;
            let a_zo = !a_x & a_z;
            let b_xo = b_x & !b_z;
            let b_yo = b_x & b_z;
            let b_zo = !b_x & b_z;
            // XY = iZ, YZ = iX, ZX = iY and their reverses with -i.
            let plus = (a_xo & b_yo) | (a_yo & b_zo) | (a_zo & b_xo);
            let minus = (a_yo & b_xo) | (a_zo & b_yo) | (a_xo & b_zo);
            phase += plus.count_ones() + 3 * minus.count_ones();
            xw.push(a_x ^ b_x);
            zw.push(a_z ^ b_z);
        }
        Ok(PauliString {
            x: BitRow::from_words(self.len(), &xw),
            z: BitRow::from_words(self.len(), &zw),
            phase_exp: (phase % 4) as u8,
        })
    }

    /// True iff the words commute, i.e. an even number of sites anticommute.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_len(other)?;
        let odd = self
            .x
            .words()
            .iter()
            .zip(self.z.words())
            .zip(other.x.words().iter().zip(other.z.words()))
            .map(|((ax, az), (bx, bz))| ((ax & bz) ^ (az & bx)).count_ones())
            .sum::<u32>()
            % 2;
        Ok(odd == 0)
    }

    /// Sign of a Hermitian word; fails when the phase is `±i`.
    pub fn sign(&self) -> Result<Sign> {
        match self.phase_exp {
            0 => Ok(Sign::Plus),
            2 => Ok(Sign::Minus),
            p => Err(Error::NonHermitian { phase_exp: p }),
        }
    }

    /// Classical reading of the word: one bit per (site, letter) with X, Y, Z
    /// treated as independent variables.
    pub fn letter_parity_vector(&self) -> LetterParity {
        let mut bits = BitRow::zeros(3 * self.len());
        for site in 0..self.len() {
            if let Some(v) = self.letter(site).variable_index() {
                bits.set(3 * site + v, true);
            }
        }
        LetterParity(bits)
    }
}

/// Free-function form of [`PauliString::multiply`].
pub fn multiply(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.multiply(b)
}

pub fn commutes(a: &PauliString, b: &PauliString) -> Result<bool> {
    a.commutes(b)
}

pub fn sign_of(a: &PauliString) -> Result<Sign> {
    a.sign()
}

/// GF(2) vector of length `3N` indexed by `3 * site + {X: 0, Y: 1, Z: 2}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LetterParity(pub BitRow);

impl LetterParity {
    pub fn zeros(sites: usize) -> Self {
        LetterParity(BitRow::zeros(3 * sites))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn xor_assign(&mut self, other: &LetterParity) {
        self.0.xor_assign(&other.0);
    }

    pub fn get(&self, site: usize, letter: PauliLetter) -> bool {
        letter.variable_index().is_some_and(|v| self.0.get(3 * site + v))
    }

    /// Set (site, letter) pairs in ascending variable order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, PauliLetter)> + '_ {
        self.0.ones().map(|i| (i / 3, PauliLetter::NON_IDENTITY[i % 3]))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.phase_exp {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })?;
        for letter in self.letters() {
            write!(f, "{letter}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts an optional `+`, `-` or `−` sign, an optional `i`, then the letters.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (minus, rest) = if let Some(r) = s.strip_prefix('+') {
            (false, r)
        } else if let Some(r) = s.strip_prefix('-').or_else(|| s.strip_prefix('\u{2212}')) {
            (true, r)
        } else {
            (false, s)
        };
        let (imag, rest) = match rest.strip_prefix('i') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let letters = rest
            .chars()
            .map(|c| {
                PauliLetter::from_char(c).ok_or_else(|| Error::Parse(format!("invalid Pauli letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let phase = u8::from(imag) + if minus { 2 } else { 0 };
        Ok(PauliString::from_letters(&letters).with_phase(phase))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn paper_products() {
        let e1 = p("XZII");
        let e2 = p("ZXZI");
        let e3 = p("IZXZ");
        let e4 = p("IIZX");
        assert_eq!(e1.multiply(&e3).unwrap(), p("+XIXZ"));
        assert_eq!(e1.multiply(&e1).unwrap(), p("+IIII"));
        let c3 = e2.multiply(&e3).unwrap().multiply(&e4).unwrap();
        assert_eq!(c3, p("-ZYXY"));
        assert_eq!(c3.sign().unwrap(), Sign::Minus);
        assert_eq!(e1.multiply(&e3).unwrap().sign().unwrap(), Sign::Plus);
    }

    #[test]
    fn zxz_is_minus_x() {
        let zxz = p("Z").multiply(&p("X")).unwrap().multiply(&p("Z")).unwrap();
        assert_eq!(zxz, p("-X"));
    }

    #[test]
    fn commutation_examples() {
        assert!(p("XZII").commutes(&p("ZXZI")).unwrap());
        assert!(!p("XIII").commutes(&p("ZIII")).unwrap());
        assert!(p("XYZI").commutes(&PauliString::identity(4)).unwrap());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let err = p("XZ").multiply(&p("XZI")).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
        assert!(p("XZ").commutes(&p("X")).is_err());
    }

    #[test]
    fn sign_of_odd_phase_fails() {
        let xz = p("X").multiply(&p("Z")).unwrap();
        assert_eq!(xz, p("-iY"));
        assert_eq!(xz.sign(), Err(Error::NonHermitian { phase_exp: 3 }));
        assert_eq!(sign_of(&PauliString::identity(3)).unwrap(), Sign::Plus);
    }

    #[test]
    fn parity_vector_examples() {
        let v = p("XZII").letter_parity_vector();
        assert_eq!(
            v.entries().collect::<Vec<_>>(),
            vec![(0, PauliLetter::X), (1, PauliLetter::Z)]
        );
        assert!(PauliString::identity(4).letter_parity_vector().is_zero());

        let mut acc = LetterParity::zeros(4);
        for w in ["XIXZ", "ZYYZ", "XIYY", "ZYXY"] {
            acc.xor_assign(&p(w).letter_parity_vector());
        }
        assert!(acc.is_zero());
    }

    /// Dense 2x2 matrices of the four letters, as (re, im) pairs.
    fn matrix(letter: PauliLetter) -> [[(i32, i32); 2]; 2] {
        match letter {
            PauliLetter::I => [[(1, 0), (0, 0)], [(0, 0), (1, 0)]],
            PauliLetter::X => [[(0, 0), (1, 0)], [(1, 0), (0, 0)]],
            PauliLetter::Y => [[(0, 0), (0, -1)], [(0, 1), (0, 0)]],
            PauliLetter::Z => [[(1, 0), (0, 0)], [(0, 0), (-1, 0)]],
        }
    }

    fn matmul(a: [[(i32, i32); 2]; 2], b: [[(i32, i32); 2]; 2]) -> [[(i32, i32); 2]; 2] {
        let mut out = [[(0, 0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let (ar, ai) = a[i][k];
                    let (br, bi) = b[k][j];
                    out[i][j].0 += ar * br - ai * bi;
                    out[i][j].1 += ar * bi + ai * br;
                }
            }
        }
        out
    }

    fn scale(m: [[(i32, i32); 2]; 2], phase_exp: u8) -> [[(i32, i32); 2]; 2] {
        let mut out = m;
        for row in out.iter_mut() {
            for (re, im) in row.iter_mut() {
                for _ in 0..phase_exp {
                    (*re, *im) = (-*im, *re);
                }
            }
        }
        out
    }

    #[test]
    fn letter_table_matches_matrices() {
        for a in PauliLetter::ALL {
            for b in PauliLetter::ALL {
                let (phase, c) = a.product(b);
                assert_eq!(matmul(matrix(a), matrix(b)), scale(matrix(c), phase), "{a}{b}");
                let word = PauliString::from_letters(&[a])
                    .multiply(&PauliString::from_letters(&[b]))
                    .unwrap();
                assert_eq!(word, PauliString::from_letters(&[c]).with_phase(phase));
            }
        }
    }

    #[test]
    fn parity_of_product_on_single_sites() {
        // XOR holds unless two distinct non-identity letters meet on a site.
        for a in PauliLetter::ALL {
            for b in PauliLetter::ALL {
                let (wa, wb) = (PauliString::from_letters(&[a]), PauliString::from_letters(&[b]));
                let prod = wa.multiply(&wb).unwrap().letter_parity_vector();
                let mut xor = wa.letter_parity_vector();
                xor.xor_assign(&wb.letter_parity_vector());
                let mixes = a != PauliLetter::I && b != PauliLetter::I && a != b;
                assert_eq!(prod == xor, !mixes, "{a}{b}");
            }
        }
    }

    #[test]
    fn associativity_exhaustive_single_site() {
        for a in PauliLetter::ALL {
            for b in PauliLetter::ALL {
                for c in PauliLetter::ALL {
                    let (a, b, c) = (
                        PauliString::from_letters(&[a]),
                        PauliString::from_letters(&[b]),
                        PauliString::from_letters(&[c]),
                    );
                    let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
                    let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn wide_words_cross_word_boundary() {
        let mut a = PauliString::identity(130);
        let mut b = PauliString::identity(130);
        a.set_letter(0, PauliLetter::X);
        a.set_letter(100, PauliLetter::Z);
        b.set_letter(100, PauliLetter::X);
        b.set_letter(129, PauliLetter::Y);
        let prod = a.multiply(&b).unwrap();
        assert_eq!(prod.letter(100), PauliLetter::Y);
        assert_eq!(prod.phase_exp(), 1);
        assert_eq!(prod.support(), vec![0, 100, 129]);
        assert!(!a.commutes(&b).unwrap());
    }

    #[test]
    fn text_round_trip_and_unicode_minus() {
        assert_eq!(p("\u{2212}ZYXY"), p("-ZYXY"));
        assert_eq!(p("XZ").to_string(), "+XZ");
        assert_eq!(p("-iXZ").to_string(), "-iXZ");
        assert!("XA".parse::<PauliString>().is_err());
    }

    fn word(max_len: usize) -> impl Strategy<Value = PauliString> {
        (1..=max_len).prop_flat_map(|n| {
            (prop::collection::vec(0usize..4, n), 0u8..4).prop_map(|(ls, ph)| {
                let letters: Vec<_> = ls.into_iter().map(|i| PauliLetter::ALL[i]).collect();
                PauliString::from_letters(&letters).with_phase(ph)
            })
        })
    }

    fn triple(max_len: usize) -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
        (1..=max_len).prop_flat_map(|n| {
            let one = move || {
                (prop::collection::vec(0usize..4, n), 0u8..4).prop_map(|(ls, ph)| {
                    let letters: Vec<_> = ls.into_iter().map(|i| PauliLetter::ALL[i]).collect();
                    PauliString::from_letters(&letters).with_phase(ph)
                })
            };
            (one(), one(), one())
        })
    }

    proptest! {
        #[test]
        fn multiply_is_associative((a, b, c) in triple(8)) {
            let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn square_is_signed_identity(a in word(8)) {
            let sq = a.unsigned().multiply(&a.unsigned()).unwrap();
            prop_assert!(sq.is_identity_letters());
            prop_assert_eq!(sq.phase_exp(), 0);
            let full = a.multiply(&a).unwrap();
            prop_assert!(full.phase_exp() % 2 == 0);
        }

        #[test]
        fn commutation_matches_phase_comparison((a, b, _c) in triple(8)) {
            let ab = a.multiply(&b).unwrap();
            let ba = b.multiply(&a).unwrap();
            prop_assert_eq!(a.commutes(&b).unwrap(), ab.phase_exp() == ba.phase_exp());
        }

        #[test]
        fn display_parse_round_trip(a in word(12)) {
            prop_assert_eq!(a.to_string().parse::<PauliString>().unwrap(), a);
        }
    }
}
