//! Dense state-vector and density-matrix simulation at desk scale.
//!
//! Basis states are ordered site-0-major: site `s` of an `n`-site register is
//! bit `n - 1 - s` of the basis index, so the bitstring `b0 b1 ... b(n-1)`
//! reads left to right in site order.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pauli::{PauliLetter, PauliString};

pub const MAX_STATE_SITES: usize = 16;
pub const MAX_DENSITY_SITES: usize = 12;

const NORM_TOL: f64 = 1e-12;
const IMAG_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// Action of a Pauli word on basis states: `P|i> = coeff(i) |i ^ flip>`.
struct WordAction {
    flip: usize,
    phase_mask: usize,
    base: u32,
}

impl WordAction {
    fn new(word: &PauliString) -> Self {
        let n = word.len();
        let (mut flip, mut phase_mask, mut ys) = (0usize, 0usize, 0u32);
        for s in 0..n {
            let bit = 1 << (n - 1 - s);
            match word.letter(s) {
                PauliLetter::I => {}
                PauliLetter::X => flip |= bit,
                PauliLetter::Z => phase_mask |= bit,
                PauliLetter::Y => {
                    flip |= bit;
                    phase_mask |= bit;
                    ys += 1;
                }
            }
        }
        // Y = i X Z on each site.
        WordAction {
            flip,
            phase_mask,
            base: u32::from(word.phase_exp()) + ys,
        }
    }

    fn coeff(&self, i: usize) -> Complex64 {
        let odd = (i & self.phase_mask).count_ones() % 2;
        i_pow(self.base + 2 * odd)
    }
}

/// Unit Bloch vector `n`, standing for the observable `n · (X, Y, Z)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    bloch: [f64; 3],
}

impl MeasurementSetting {
    pub fn new(bloch: [f64; 3]) -> Result<Self> {
        let norm = bloch.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !bloch.iter().all(|v| v.is_finite()) || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidSetting(format!("Bloch vector {bloch:?} has norm {norm}")));
        }
        Ok(MeasurementSetting { bloch })
    }

    /// Normalizes a nonzero direction.
    pub fn from_direction(v: [f64; 3]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidSetting(format!("cannot normalize {v:?}")));
        }
        Ok(MeasurementSetting {
            bloch: [v[0] / norm, v[1] / norm, v[2] / norm],
        })
    }

    /// Coordinate axis for a non-identity letter.
    pub fn axis(letter: PauliLetter) -> Result<Self> {
        let bloch = match letter {
            PauliLetter::X => [1.0, 0.0, 0.0],
            PauliLetter::Y => [0.0, 1.0, 0.0],
            PauliLetter::Z => [0.0, 0.0, 1.0],
            PauliLetter::I => return Err(Error::InvalidSetting("the identity has no Bloch axis".into())),
        };
        Ok(MeasurementSetting { bloch })
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    /// The letter whose axis this is, if any.
    pub fn as_letter(&self) -> Option<PauliLetter> {
        PauliLetter::NON_IDENTITY
            .into_iter()
            .zip(self.bloch)
            .find(|(_, v)| (v - 1.0).abs() < NORM_TOL)
            .map(|(l, _)| l)
    }
}

/// Local observable on one site: the identity or a ±1-valued spin direction.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    Identity,
    Spin(MeasurementSetting),
}

impl Observable {
    pub fn letter(letter: PauliLetter) -> Self {
        match letter {
            PauliLetter::I => Observable::Identity,
            l => Observable::Spin(MeasurementSetting::axis(l).expect("non-identity")),
        }
    }

    /// Coefficients on (I, X, Y, Z).
    pub fn components(&self) -> [f64; 4] {
        match self {
            Observable::Identity => [1.0, 0.0, 0.0, 0.0],
            Observable::Spin(s) => {
                let [x, y, z] = s.bloch();
                [0.0, x, y, z]
            }
        }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let [i, x, y, z] = self.components();
        [[c(i + z, 0.0), c(x, -y)], [c(x, y), c(i - z, 0.0)]]
    }

    pub fn as_letter(&self) -> Option<PauliLetter> {
        match self {
            Observable::Identity => Some(PauliLetter::I),
            Observable::Spin(s) => s.as_letter(),
        }
    }
}

/// Common interface of pure and mixed states.
pub trait QuantumState {
    fn sites(&self) -> usize;

    /// `<P>` for a word on all sites, phase included.
    fn word_expectation(&self, word: &PauliString) -> Result<Complex64>;

    /// Reduced state on `keep`, in the given order.
    fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix>;

    fn check_sites(&self, found: usize) -> Result<()> {
        if found != self.sites() {
            return Err(Error::DimensionMismatch {
                expected: self.sites(),
                found,
            });
        }
        Ok(())
    }
}

/// Real expectation of a Hermitian (signed) Pauli word.
pub fn expectation_pauli<S: QuantumState + ?Sized>(state: &S, word: &PauliString) -> Result<f64> {
    word.sign()?;
    let value = state.word_expectation(word)?;
    if value.im.abs() > IMAG_TOL {
        return Err(Error::InvalidState(format!(
            "expectation of Hermitian word {word} has imaginary part {}",
            value.im
        )));
    }
    Ok(value.re)
}

/// Expectation of the tensor product of one observable per site.
pub fn expectation_settings<S: QuantumState + ?Sized>(state: &S, settings: &[Observable]) -> Result<f64> {
    state.check_sites(settings.len())?;
    let n = settings.len();
    let mut total = 0.0;
    let mut word = PauliString::identity(n);
    expand(state, settings, 0, 1.0, &mut word, &mut total)?;
    Ok(total)
}

fn expand<S: QuantumState + ?Sized>(
    state: &S,
    settings: &[Observable],
    site: usize,
    weight: f64,
    word: &mut PauliString,
    total: &mut f64,
) -> Result<()> {
    if site == settings.len() {
        *total += weight * state.word_expectation(word)?.re;
        return Ok(());
    }
    let comps = settings[site].components();
    for letter in PauliLetter::ALL {
        let w = comps[letter.index()];
        if w != 0.0 {
            word.set_letter(site, letter);
            expand(state, settings, site + 1, weight * w, word, total)?;
        }
    }
    word.set_letter(site, PauliLetter::I);
    Ok(())
}

/// Dense matrix of `⊗ observables`, site 0 as the most significant factor.
pub fn observable_matrix(settings: &[Observable]) -> DMatrix<Complex64> {
    let mut acc = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for obs in settings {
        let m = obs.matrix();
        let local = DMatrix::from_fn(2, 2, |i, j| m[i][j]);
        acc = acc.kronecker(&local);
    }
    acc
}

fn check_keep(sites: usize, keep: &[usize]) -> Result<()> {
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    if keep.len() > MAX_DENSITY_SITES {
        return Err(Error::TooManySites {
            sites: keep.len(),
            limit: MAX_DENSITY_SITES,
        });
    }
    for (i, &s) in keep.iter().enumerate() {
        if s >= sites {
            return Err(Error::SiteOutOfRange {
                site: s,
                site_count: sites,
            });
        }
        if keep[..i].contains(&s) {
            return Err(Error::InvalidState(format!("site {s} listed twice")));
        }
    }
    Ok(())
}

/// Splits basis index `i` into (kept index, environment index).
fn split_index(i: usize, n: usize, keep: &[usize], env: &[usize]) -> (usize, usize) {
    let bit = |s: usize| (i >> (n - 1 - s)) & 1;
    let k = keep.iter().fold(0, |acc, &s| (acc << 1) | bit(s));
    let e = env.iter().fold(0, |acc, &s| (acc << 1) | bit(s));
    (k, e)
}

fn environment(n: usize, keep: &[usize]) -> Vec<usize> {
    (0..n).filter(|s| !keep.contains(s)).collect()
}

/// Pure state of `sites` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    sites: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(sites: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if sites > MAX_STATE_SITES {
            return Err(Error::TooManySites {
                sites,
                limit: MAX_STATE_SITES,
            });
        }
        if amplitudes.len() != 1 << sites {
            return Err(Error::DimensionMismatch {
                expected: 1 << sites,
                found: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(StateVector { sites, amplitudes })
    }

    /// Normalizes before validating.
    pub fn normalized(sites: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        StateVector::new(sites, amplitudes)
    }

    /// Computational basis state `|index>`.
    pub fn basis(sites: usize, index: usize) -> Result<Self> {
        let mut amps = vec![c(0.0, 0.0); 1 << sites.min(MAX_STATE_SITES + 1)];
        if index >= amps.len() {
            return Err(Error::DimensionMismatch {
                expected: amps.len(),
                found: index,
            });
        }
        amps[index] = c(1.0, 0.0);
        StateVector::new(sites, amps)
    }

    /// Tensor product of single-site states `(a0, a1)`.
    pub fn product(local: &[[Complex64; 2]]) -> Result<Self> {
        let mut amps = vec![c(1.0, 0.0)];
        for q in local {
            amps = amps.iter().flat_map(|&a| [a * q[0], a * q[1]]).collect();
        }
        StateVector::normalized(local.len(), amps)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, bits: &str) -> Result<Complex64> {
        let index = usize::from_str_radix(bits, 2).map_err(|_| Error::Parse(format!("invalid bitstring {bits:?}")))?;
        if bits.len() != self.sites {
            return Err(Error::DimensionMismatch {
                expected: self.sites,
                found: bits.len(),
            });
        }
        Ok(self.amplitudes[index])
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_sites(other.sites)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `P|ψ>` for a Pauli word (not renormalized; Pauli words are unitary).
    pub fn apply_word(&self, word: &PauliString) -> Result<StateVector> {
        self.check_sites(word.len())?;
        let action = WordAction::new(word);
        let mut out = vec![c(0.0, 0.0); self.amplitudes.len()];
        for (i, &a) in self.amplitudes.iter().enumerate() {
            out[i ^ action.flip] += action.coeff(i) * a;
        }
        Ok(StateVector {
            sites: self.sites,
            amplitudes: out,
        })
    }

    /// Applies a 2x2 unitary to one site.
    pub fn apply_single(&self, site: usize, u: [[Complex64; 2]; 2]) -> Result<StateVector> {
        if site >= self.sites {
            return Err(Error::SiteOutOfRange {
                site,
                site_count: self.sites,
            });
        }
        let bit = 1 << (self.sites - 1 - site);
        let mut out = self.amplitudes.clone();
        for i in 0..out.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
                out[i] = u[0][0] * a0 + u[0][1] * a1;
                out[i | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
        StateVector::normalized(self.sites, out)
    }

    /// Small rotation `exp(-i angle Y / 2)` on site 0; a deliberate defect for negative controls.
    pub fn perturbed(&self, angle: f64) -> Result<StateVector> {
        let (cs, sn) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        self.apply_single(0, [[c(cs, 0.0), c(-sn, 0.0)], [c(sn, 0.0), c(cs, 0.0)]])
    }

    /// Multiplies every amplitude by `e^{i theta}`.
    pub fn with_global_phase(&self, theta: f64) -> StateVector {
        let phase = Complex64::from_polar(1.0, theta);
        StateVector {
            sites: self.sites,
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        DensityMatrix {
            sites: self.sites,
            matrix: &v * v.adjoint(),
        }
    }

    /// One line per basis state: `bitstring real imag`, 17 significant digits.
    pub fn amplitude_dump(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.amplitudes.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:0width$b} {:.16e} {:.16e}",
                i,
                a.re,
                a.im,
                width = self.sites.max(1)
            );
        }
        out
    }

    pub fn from_amplitude_dump(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [bits, re, im] = parts[..] else {
                return Err(Error::Parse(format!("expected `bits re im`, found {line:?}")));
            };
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("invalid number {s:?}")))
            };
            let index =
                usize::from_str_radix(bits, 2).map_err(|_| Error::Parse(format!("invalid bitstring {bits:?}")))?;
            entries.push((bits.len(), index, c(num(re)?, num(im)?)));
        }
        let sites = entries.first().map_or(0, |e| e.0);
        let mut amps = vec![c(0.0, 0.0); 1 << sites.min(MAX_STATE_SITES + 1)];
        for (width, index, a) in entries {
            if width != sites || index >= amps.len() {
                return Err(Error::Parse("inconsistent bitstring widths".into()));
            }
            amps[index] = a;
        }
        StateVector::new(sites, amps)
    }
}

impl QuantumState for StateVector {
    fn sites(&self) -> usize {
        self.sites
    }

    fn word_expectation(&self, word: &PauliString) -> Result<Complex64> {
        self.check_sites(word.len())?;
        let action = WordAction::new(word);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| self.amplitudes[i ^ action.flip].conj() * action.coeff(i) * a)
            .sum())
    }

    fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }
}

/// Reduced density matrix of a pure state on `keep` (order preserved).
pub fn partial_trace(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.sites;
    check_keep(n, keep)?;
    let env = environment(n, keep);
    let mut m = DMatrix::from_element(1 << keep.len(), 1 << env.len(), c(0.0, 0.0));
    for (i, &a) in state.amplitudes.iter().enumerate() {
        let (k, e) = split_index(i, n, keep, &env);
        m[(k, e)] = a;
    }
    Ok(DensityMatrix {
        sites: keep.len(),
        matrix: &m * m.adjoint(),
    })
}

/// Mixed state on at most [`MAX_DENSITY_SITES`] sites.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    sites: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(sites: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        if sites > MAX_DENSITY_SITES {
            return Err(Error::TooManySites {
                sites,
                limit: MAX_DENSITY_SITES,
            });
        }
        let dim = 1 << sites;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        let rho = DensityMatrix { sites, matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub fn maximally_mixed(sites: usize) -> Result<Self> {
        let dim = 1 << sites;
        DensityMatrix::new(sites, DMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (&self.matrix - self.matrix.adjoint()).camax();
        if herm > NORM_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm})")));
        }
        let tr = self.trace();
        if (tr - c(1.0, 0.0)).norm() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        if let Some(&min) = self.eigenvalues().last() {
            if min < -1e-10 {
                return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
            }
        }
        Ok(())
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `<P>` for every Pauli word on all sites, indexed base 4 with site 0 most
    /// significant and digits in I, X, Y, Z order.
    pub fn pauli_expectations(&self) -> Vec<f64> {
        let n = self.sites;
        let mut out = Vec::with_capacity(1 << (2 * n));
        let mut letters = vec![PauliLetter::I; n];
        for code in 0..(1usize << (2 * n)) {
            for (s, l) in letters.iter_mut().enumerate() {
                *l = PauliLetter::ALL[(code >> (2 * (n - 1 - s))) & 3];
            }
            let word = PauliString::from_letters(&letters);
            out.push(self.word_expectation(&word).expect("sizes match").re);
        }
        out
    }
}

impl QuantumState for DensityMatrix {
    fn sites(&self) -> usize {
        self.sites
    }

    fn word_expectation(&self, word: &PauliString) -> Result<Complex64> {
        self.check_sites(word.len())?;
        let action = WordAction::new(word);
        Ok((0..self.matrix.nrows())
            .map(|j| action.coeff(j) * self.matrix[(j, j ^ action.flip)])
            .sum())
    }

    fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let n = self.sites;
        check_keep(n, keep)?;
        let env = environment(n, keep);
        let dim = 1 << keep.len();
        let mut out = DMatrix::from_element(dim, dim, c(0.0, 0.0));
        let mut by_env: Vec<Vec<(usize, usize)>> = vec![Vec::new(); 1 << env.len()];
        for i in 0..(1 << n) {
            let (k, e) = split_index(i, n, keep, &env);
            by_env[e].push((k, i));
        }
        for group in &by_env {
            for &(ka, ia) in group {
                for &(kb, ib) in group {
                    out[(ka, kb)] += self.matrix[(ia, ib)];
                }
            }
        }
        Ok(DensityMatrix {
            sites: keep.len(),
            matrix: out,
        })
    }
}

/// Graph state: `|+>` on every site, then a controlled-Z on every edge.
pub fn make_cluster_state(g: &Graph) -> Result<StateVector> {
    let n = g.site_count();
    if n > MAX_STATE_SITES {
        return Err(Error::TooManySites {
            sites: n,
            limit: MAX_STATE_SITES,
        });
    }
    let edges: Vec<usize> = g
        .edges()
        .map(|(a, b)| (1 << (n - 1 - a)) | (1 << (n - 1 - b)))
        .collect();
    let amp = (0.5f64).powf(n as f64 / 2.0);
    let amplitudes = (0..1usize << n)
        .map(|i| {
            let odd = edges.iter().filter(|&&m| i & m == m).count() % 2;
            c(if odd == 1 { -amp } else { amp }, 0.0)
        })
        .collect();
    StateVector::new(n, amplitudes)
}

/// `(|0…0> + |1…1>)/√2`.
pub fn make_ghz(n: usize) -> Result<StateVector> {
    if !(2..=MAX_STATE_SITES).contains(&n) {
        return Err(Error::TooManySites {
            sites: n,
            limit: MAX_STATE_SITES,
        });
    }
    let mut amps = vec![c(0.0, 0.0); 1 << n];
    amps[0] = c(FRAC_1_SQRT_2, 0.0);
    amps[(1 << n) - 1] = c(FRAC_1_SQRT_2, 0.0);
    StateVector::new(n, amps)
}

/// `(|0001> + |0010> + |0100> + |1000>)/2`.
pub fn make_w4() -> StateVector {
    let mut amps = vec![c(0.0, 0.0); 16];
    for k in 0..4 {
        amps[1 << k] = c(0.5, 0.0);
    }
    StateVector::new(4, amps).expect("normalized")
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_lattice, full_group, generators, LatticeSpec, DEFAULT_GROUP_LIMIT};
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn chain(n: usize) -> Graph {
        build_lattice(&LatticeSpec::chain(n)).unwrap()
    }

    fn plus() -> [Complex64; 2] {
        [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]
    }
    fn minus() -> [Complex64; 2] {
        [c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)]
    }
    fn zero() -> [Complex64; 2] {
        [c(1.0, 0.0), c(0.0, 0.0)]
    }
    fn one() -> [Complex64; 2] {
        [c(0.0, 0.0), c(1.0, 0.0)]
    }

    /// The displayed four-qubit cluster state, built term by term.
    fn displayed_phi4() -> StateVector {
        let terms = [
            [plus(), zero(), plus(), zero()],
            [plus(), zero(), minus(), one()],
            [minus(), one(), minus(), zero()],
            [minus(), one(), plus(), one()],
        ];
        let mut amps = vec![c(0.0, 0.0); 16];
        for t in &terms {
            let prod = StateVector::product(t).unwrap();
            for (a, b) in amps.iter_mut().zip(prod.amplitudes()) {
                *a += b * 0.5;
            }
        }
        StateVector::new(4, amps).unwrap()
    }

    #[test]
    fn cluster4_matches_displayed_state() {
        let psi = make_cluster_state(&chain(4)).unwrap();
        let overlap = psi.inner(&displayed_phi4()).unwrap().norm();
        assert!((overlap - 1.0).abs() < 1e-12, "overlap {overlap}");
    }

    #[test]
    fn single_site_cluster_is_plus() {
        let psi = make_cluster_state(&chain(1)).unwrap();
        for a in psi.amplitudes() {
            assert!((a - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn grid_cluster_eigen_equations() {
        let g = build_lattice(&LatticeSpec::new([3, 3])).unwrap();
        let psi = make_cluster_state(&g).unwrap();
        for gen in generators(&g) {
            let moved = psi.apply_word(&gen.word).unwrap();
            let diff: f64 = moved
                .amplitudes()
                .iter()
                .zip(psi.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12, "{gen}");
        }
    }

    #[test]
    fn ghz_and_bell() {
        let ghz = make_ghz(4).unwrap();
        assert!((ghz.amplitude("0000").unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((ghz.amplitude("1111").unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
        let bell = make_ghz(2).unwrap();
        assert_eq!(bell.amplitudes()[1], c(0.0, 0.0));
        assert!((bell.amplitudes()[3].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(make_ghz(1).is_err());
        assert!(make_ghz(17).is_err());
    }

    #[test]
    fn ghz4_projector_has_only_even_weight_terms() {
        // Oracle: coefficients Tr(Q σ_w) / 16 over all 256 words.
        let rho = make_ghz(4).unwrap().to_density_matrix();
        let coeffs = rho.pauli_expectations();
        let mut odd_nonzero = 0;
        let mut even_nonzero = 0;
        for (code, v) in coeffs.iter().enumerate() {
            let weight = (0..4).filter(|s| (code >> (2 * s)) & 3 != 0).count();
            if v.abs() > 1e-12 {
                if weight % 2 == 1 {
                    odd_nonzero += 1;
                } else {
                    even_nonzero += 1;
                }
            }
        }
        assert_eq!(odd_nonzero, 0);
        assert_eq!(even_nonzero, 16);
    }

    #[test]
    fn w4_definition_and_marginal() {
        let w = make_w4();
        assert!((w.amplitude("0001").unwrap().re - 0.5).abs() < 1e-15);
        let norm: f64 = w.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
        for site in 0..4 {
            let ev = partial_trace(&w, &[site]).unwrap().eigenvalues();
            assert!((ev[0] - 0.75).abs() < 1e-12 && (ev[1] - 0.25).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn cluster4_stabilizer_expectations() {
        let psi = make_cluster_state(&chain(4)).unwrap();
        let group = full_group(&chain(4), DEFAULT_GROUP_LIMIT).unwrap();
        for e in group.nontrivial() {
            assert!((expectation_pauli(&psi, &e.word).unwrap() - 1.0).abs() < 1e-12, "{e}");
        }
        let zeros = StateVector::basis(4, 0).unwrap();
        assert_eq!(expectation_pauli(&zeros, &p("XIZI")).unwrap(), 0.0);
        let ghz = make_ghz(4).unwrap();
        for w in ["XIII", "XYZI", "IZIZ"] {
            let expect = if w == "IZIZ" { 1.0 } else { 0.0 };
            assert!((expectation_pauli(&ghz, &p(w)).unwrap() - expect).abs() < 1e-12, "{w}");
        }
    }

    #[test]
    fn expectation_errors() {
        let psi = make_ghz(3).unwrap();
        assert!(matches!(
            expectation_pauli(&psi, &p("XX")),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            expectation_pauli(&psi, &p("iXXX")),
            Err(Error::NonHermitian { .. })
        ));
        assert!(expectation_settings(&psi, &[Observable::Identity]).is_err());
    }

    #[test]
    fn settings_examples() {
        let psi = make_cluster_state(&chain(4)).unwrap();
        let obs = |s: &str| -> Vec<Observable> {
            s.chars()
                .map(|ch| Observable::letter(PauliLetter::from_char(ch).unwrap()))
                .collect()
        };
        assert!((expectation_settings(&psi, &obs("XIXZ")).unwrap() - 1.0).abs() < 1e-12);
        assert!((expectation_settings(&psi, &obs("ZYXY")).unwrap() + 1.0).abs() < 1e-12);
        assert!((expectation_settings(&psi, &obs("IIII")).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let psi = make_cluster_state(&chain(8)).unwrap();
        let rho = partial_trace(&psi, &[0, 1, 2, 3, 4]).unwrap();
        rho.validate().unwrap();
        assert!(rho.purity() < 1.0 - 1e-6);

        let prod = StateVector::product(&[plus(), zero(), minus(), one()]).unwrap();
        for keep in [&[0][..], &[1, 3], &[3, 0, 2]] {
            assert!((partial_trace(&prod, keep).unwrap().purity() - 1.0).abs() < 1e-12);
        }

        let ghz = make_ghz(4).unwrap();
        let rho = partial_trace(&ghz, &[0, 1, 2]).unwrap();
        let mut expected = DMatrix::from_element(8, 8, c(0.0, 0.0));
        expected[(0, 0)] = c(0.5, 0.0);
        expected[(7, 7)] = c(0.5, 0.0);
        assert!((rho.matrix() - expected).camax() < 1e-15);

        assert_eq!(partial_trace(&ghz, &[]), Err(Error::EmptySubset));
        assert!(matches!(partial_trace(&ghz, &[4]), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn window_purity_of_chain10() {
        let psi = make_cluster_state(&chain(10)).unwrap();
        let p5 = partial_trace(&psi, &[2, 3, 4, 5, 6]).unwrap().purity();
        // Oracle: a graph-state marginal has purity |S_A| / 2^|A| where S_A is
        // the set of stabilizer elements supported in A. Here S_A is generated
        // by the three generators lying wholly inside the window: 8 / 32.
        assert!((p5 - 0.25).abs() < 1e-12, "{p5}");
        assert_eq!(purity(&DensityMatrix::maximally_mixed(1).unwrap()), 0.5);
    }

    #[test]
    fn full_trace_reproduces_projector() {
        let psi = make_cluster_state(&chain(4)).unwrap();
        let rho = partial_trace(&psi, &[0, 1, 2, 3]).unwrap();
        assert!((rho.matrix() - psi.to_density_matrix().matrix()).camax() < 1e-15);
        let swapped = partial_trace(&psi, &[1, 0, 2, 3]).unwrap();
        let zx = p("XZII");
        let zx_swapped = p("ZXII");
        let a = expectation_pauli(&rho, &zx).unwrap();
        let b = expectation_pauli(&swapped, &zx_swapped).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn density_reduce_matches_vector_reduce() {
        let psi = make_cluster_state(&chain(6)).unwrap();
        let rho = psi.to_density_matrix();
        let a = rho.reduce(&[4, 1, 2]).unwrap();
        let b = partial_trace(&psi, &[4, 1, 2]).unwrap();
        assert!((a.matrix() - b.matrix()).camax() < 1e-14);
    }

    #[test]
    fn observable_matrix_matches_expectation() {
        let psi = make_w4();
        let s = MeasurementSetting::from_direction([0.3, -0.2, 0.9]).unwrap();
        let obs = [
            Observable::Spin(s),
            Observable::Identity,
            Observable::letter(PauliLetter::Y),
            Observable::Spin(s),
        ];
        let m = observable_matrix(&obs);
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let direct = (v.adjoint() * &m * &v)[(0, 0)].re;
        assert!((direct - expectation_settings(&psi, &obs).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn amplitude_dump_round_trip() {
        let psi = make_cluster_state(&chain(3)).unwrap().with_global_phase(0.3);
        let dump = psi.amplitude_dump();
        assert_eq!(dump.lines().count(), 8);
        assert!(dump.starts_with("000 "));
        let first = dump.lines().next().unwrap();
        let re = first.split_whitespace().nth(1).unwrap();
        let mantissa = re.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17);
        assert_eq!(StateVector::from_amplitude_dump(&dump).unwrap(), psi);
    }

    #[test]
    fn setting_validation() {
        assert!(MeasurementSetting::new([1.0, 1.0, 0.0]).is_err());
        assert!(MeasurementSetting::new([0.6, 0.8, 0.0]).is_ok());
        assert!(MeasurementSetting::from_direction([0.0; 3]).is_err());
        assert!(MeasurementSetting::axis(PauliLetter::I).is_err());
    }

    #[test]
    fn dense_limits() {
        assert!(matches!(
            make_cluster_state(&chain(17)),
            Err(Error::TooManySites { .. })
        ));
        let psi = make_cluster_state(&chain(13)).unwrap();
        assert!(matches!(
            partial_trace(&psi, &(0..13).collect::<Vec<_>>()),
            Err(Error::TooManySites { .. })
        ));
    }

    fn unit_vector() -> impl Strategy<Value = MeasurementSetting> {
        (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
            let r = (1.0 - z * z).sqrt();
            MeasurementSetting::from_direction([r * phi.cos(), r * phi.sin(), z]).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn group_expectations_are_one(n in 1usize..=6, extra in prop::collection::vec((0usize..6, 0usize..6), 0..6)) {
            let mut edges: Vec<(usize, usize)> = (1..n).map(|a| (a - 1, a)).collect();
            for (a, b) in extra {
                let (a, b) = (a % n, b % n);
                if a != b && !edges.contains(&(a.min(b), a.max(b))) {
                    edges.push((a.min(b), a.max(b)));
                }
            }
            let g = Graph::new(n, edges).unwrap();
            let psi = make_cluster_state(&g).unwrap();
            for e in full_group(&g, DEFAULT_GROUP_LIMIT).unwrap().elements() {
                prop_assert!((expectation_pauli(&psi, &e.word).unwrap() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn axis_settings_agree_with_words(letters in prop::collection::vec(0usize..4, 4)) {
            let psi = make_w4();
            let ls: Vec<PauliLetter> = letters.iter().map(|&i| PauliLetter::ALL[i]).collect();
            let obs: Vec<Observable> = ls.iter().map(|&l| Observable::letter(l)).collect();
            let a = expectation_settings(&psi, &obs).unwrap();
            let b = expectation_pauli(&psi, &PauliString::from_letters(&ls)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn global_phase_invariance(theta in 0.0f64..6.3, s in unit_vector(), t in unit_vector()) {
            let psi = make_cluster_state(&chain(4)).unwrap();
            let shifted = psi.with_global_phase(theta);
            let obs = [Observable::Spin(s), Observable::Spin(t), Observable::Identity, Observable::Spin(s)];
            let a = expectation_settings(&psi, &obs).unwrap();
            let b = expectation_settings(&shifted, &obs).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn partial_trace_is_a_state(keep in prop::sample::subsequence(vec![0usize, 1, 2, 3, 4, 5], 1..=6)) {
            let psi = make_cluster_state(&chain(6)).unwrap().perturbed(0.4).unwrap();
            let rho = partial_trace(&psi, &keep).unwrap();
            prop_assert!(rho.validate().is_ok());
        }
    }
}
