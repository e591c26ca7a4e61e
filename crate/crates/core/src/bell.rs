//! Bell polynomials: constructors, classical and algebraic bounds, quantum
//! values and a best-response settings optimizer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::StabilizerGroup;
use crate::lhv::{best_code, GhzArgument, MAX_LHV_VARIABLES};
use crate::pauli::{PauliLetter, PauliString, Sign};
use crate::quantum::{observable_matrix, DensityMatrix, MeasurementSetting, Observable, QuantumState};

/// Largest group accepted by [`stabilizer_sum_polynomial`].
pub const MAX_STABILIZER_SUM_ELEMENTS: usize = 1 << 10;

const BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Party {
    /// Site of the state this party measures.
    pub site: usize,
    pub name: String,
    pub labels: Vec<String>,
}

/// One correlation term: a coefficient and, per party, a label index or
/// `None` for the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellTerm {
    pub coefficient: f64,
    pub settings: Vec<Option<usize>>,
}

impl BellTerm {
    /// Number of parties measured nontrivially.
    pub fn weight(&self) -> usize {
        self.settings.iter().filter(|s| s.is_some()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellPolynomial {
    name: String,
    parties: Vec<Party>,
    terms: Vec<BellTerm>,
}

impl BellPolynomial {
    pub fn new(name: impl Into<String>, parties: Vec<Party>, terms: Vec<BellTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidPolynomial("no terms".into()));
        }
        if parties.is_empty() {
            return Err(Error::InvalidPolynomial("no parties".into()));
        }
        let mut sites = BTreeSet::new();
        for p in &parties {
            if !sites.insert(p.site) {
                return Err(Error::InvalidPolynomial(format!("site {} used by two parties", p.site)));
            }
            if p.labels.is_empty() {
                return Err(Error::InvalidPolynomial(format!("party {} has no labels", p.name)));
            }
        }
        for t in &terms {
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidPolynomial(format!("coefficient {}", t.coefficient)));
            }
            if t.settings.len() != parties.len() {
                return Err(Error::DimensionMismatch {
                    expected: parties.len(),
                    found: t.settings.len(),
                });
            }
            for (party, s) in t.settings.iter().enumerate() {
                if let Some(label) = *s {
                    if label >= parties[party].labels.len() {
                        return Err(Error::UnboundLabel {
                            party,
                            label: label.to_string(),
                        });
                    }
                }
            }
        }
        Ok(BellPolynomial {
            name: name.into(),
            parties,
            terms,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn terms(&self) -> &[BellTerm] {
        &self.terms
    }

    pub fn party_sites(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p.site).collect()
    }

    /// Moves the parties to sites `0..parties`, keeping their order.
    pub fn localized(mut self) -> Self {
        for (i, p) in self.parties.iter_mut().enumerate() {
            p.site = i;
        }
        self
    }

    /// Sum of absolute coefficients.
    pub fn algebraic_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// (party, label) pairs used by at least one term.
    fn used_labels(&self) -> Vec<(usize, usize)> {
        self.terms
            .iter()
            .flat_map(|t| t.settings.iter().enumerate().filter_map(|(p, s)| s.map(|l| (p, l))))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Term written as a word of Pauli letters under letter-valued settings,
    /// with the coefficient's sign attached. Coefficients must be ±1.
    pub fn instantiate(&self, settings: &SettingsChoice) -> Result<Vec<PauliString>> {
        settings.check(self)?;
        self.terms
            .iter()
            .map(|t| {
                let sign = if t.coefficient == 1.0 {
                    Sign::Plus
                } else if t.coefficient == -1.0 {
                    Sign::Minus
                } else {
                    return Err(Error::InvalidSetting(format!(
                        "coefficient {} is not ±1",
                        t.coefficient
                    )));
                };
                let letters = t
                    .settings
                    .iter()
                    .enumerate()
                    .map(|(p, s)| match s {
                        None => Ok(PauliLetter::I),
                        Some(l) => settings.observables[p][*l].as_letter().ok_or_else(|| {
                            Error::InvalidSetting(format!("{} is not a Pauli axis", self.parties[p].labels[*l]))
                        }),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PauliString::from_letters(&letters).with_sign(sign))
            })
            .collect()
    }

    fn term_string(&self, t: &BellTerm) -> String {
        t.settings
            .iter()
            .enumerate()
            .map(|(p, s)| match s {
                None => "I".to_string(),
                Some(l) => self.parties[p].labels[*l].clone(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for BellPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            let c = t.coefficient;
            let sep = match (i, c < 0.0) {
                (0, false) => "",
                (0, true) => "-",
                (_, false) => " + ",
                (_, true) => " - ",
            };
            write!(f, "{sep}")?;
            if c.abs() != 1.0 {
                write!(f, "{} ", c.abs())?;
            }
            write!(f, "[{}]", self.term_string(t))?;
        }
        Ok(())
    }
}

fn party(site: usize, name: &str, labels: &[&str]) -> Party {
    Party {
        site,
        name: name.into(),
        labels: labels.iter().map(|s| s.to_string()).collect(),
    }
}

fn term(coefficient: f64, settings: &[Option<usize>]) -> BellTerm {
    BellTerm {
        coefficient,
        settings: settings.to_vec(),
    }
}

/// `A I C' D + A I C D' + A' B C D - A' B C' D'`; party B has one label.
pub fn cluster4_polynomial() -> BellPolynomial {
    let (u, p) = (Some(0), Some(1));
    BellPolynomial::new(
        "cluster4",
        vec![
            party(0, "A", &["A", "A'"]),
            party(1, "B", &["B"]),
            party(2, "C", &["C", "C'"]),
            party(3, "D", &["D", "D'"]),
        ],
        vec![
            term(1.0, &[u, None, p, u]),
            term(1.0, &[u, None, u, p]),
            term(1.0, &[p, u, u, u]),
            term(-1.0, &[p, u, p, p]),
        ],
    )
    .expect("well formed")
}

/// `(AB)C'(DE) + (A'B')C(DE) + (AB)C(D'E') - (A'B')C'(D'E')`.
pub fn window5_polynomial() -> BellPolynomial {
    let (u, p) = (Some(0), Some(1));
    let parties = ["A", "B", "C", "D", "E"]
        .iter()
        .enumerate()
        .map(|(i, n)| party(i, n, &[n, &format!("{n}'")]))
        .collect();
    BellPolynomial::new(
        "window5",
        parties,
        vec![
            term(1.0, &[u, u, p, u, u]),
            term(1.0, &[p, p, u, u, u]),
            term(1.0, &[u, u, u, p, p]),
            term(-1.0, &[p, p, p, p, p]),
        ],
    )
    .expect("well formed")
}

/// Three-party Mermin polynomial `a c' d + a c d' + a' c d - a' c' d'`.
pub fn mermin3_polynomial() -> BellPolynomial {
    let (u, p) = (Some(0), Some(1));
    BellPolynomial::new(
        "mermin3",
        vec![
            party(0, "A", &["A", "A'"]),
            party(1, "B", &["B", "B'"]),
            party(2, "C", &["C", "C'"]),
        ],
        vec![
            term(1.0, &[u, p, u]),
            term(1.0, &[u, u, p]),
            term(1.0, &[p, u, u]),
            term(-1.0, &[p, p, p]),
        ],
    )
    .expect("well formed")
}

/// One term per group element with the element's sign as coefficient, so
/// every term has expectation +1 on the graph state. Each party carries the
/// three labels X, Y, Z.
pub fn stabilizer_sum_polynomial(group: &StabilizerGroup) -> Result<BellPolynomial> {
    if group.len() > MAX_STABILIZER_SUM_ELEMENTS {
        return Err(Error::GroupTooLarge {
            sites: group.generators().len(),
            limit: MAX_STABILIZER_SUM_ELEMENTS.trailing_zeros() as usize,
        });
    }
    let n = group.sites();
    let parties = (0..n).map(|s| party(s, &format!("q{s}"), &["X", "Y", "Z"])).collect();
    let terms = group
        .elements()
        .iter()
        .map(|e| BellTerm {
            coefficient: e.sign.as_f64(),
            settings: (0..n).map(|s| e.word.letter(s).variable_index()).collect(),
        })
        .collect();
    BellPolynomial::new("stabsum", parties, terms)
}

/// Four-party Mermin–Klyshko polynomial scaled so its local bound is 2.
pub fn mabk4_polynomial() -> BellPolynomial {
    mabk_polynomial(4).expect("four parties")
}

/// `M_n = ½ M_{n-1}(a_n + a_n') + ½ M'_{n-1}(a_n - a_n')`, with `M'` the same
/// recursion under primed/unprimed exchange, scaled by 2.
pub fn mabk_polynomial(n: usize) -> Result<BellPolynomial> {
    if n < 2 {
        return Err(Error::InvalidPolynomial("MABK needs at least two parties".into()));
    }
    type Poly = BTreeMap<Vec<usize>, f64>;
    let mut m: Poly = BTreeMap::from([(vec![0], 1.0)]);
    let mut mp: Poly = BTreeMap::from([(vec![1], 1.0)]);
    let extend = |a: &Poly, b: &Poly, first: usize| -> Poly {
        let mut out = Poly::new();
        let second = 1 - first;
        for (k, c) in a {
            for (label, s) in [(first, 0.5), (second, 0.5)] {
                let mut key = k.clone();
                key.push(label);
                *out.entry(key).or_default() += s * c;
            }
        }
        for (k, c) in b {
            for (label, s) in [(first, 0.5), (second, -0.5)] {
                let mut key = k.clone();
                key.push(label);
                *out.entry(key).or_default() += s * c;
            }
        }
        out.retain(|_, c| *c != 0.0);
        out
    };
    for _ in 1..n {
        let next = extend(&m, &mp, 0);
        let next_p = extend(&mp, &m, 1);
        m = next;
        mp = next_p;
    }
    let names: Vec<String> = (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    let parties = names
        .iter()
        .enumerate()
        .map(|(i, nm)| party(i, nm, &[nm, &format!("{nm}'")]))
        .collect();
    let terms = m
        .into_iter()
        .map(|(k, c)| BellTerm {
            coefficient: 2.0 * c,
            settings: k.into_iter().map(Some).collect(),
        })
        .collect();
    BellPolynomial::new(format!("mabk{n}"), parties, terms)
}

/// One term per argument element with coefficient equal to its sign. Parties
/// are the window sites; each gets one label per distinct letter it carries.
pub fn from_ghz_argument(arg: &GhzArgument) -> Result<BellPolynomial> {
    let mut parties = Vec::new();
    for &site in arg.window() {
        let letters = arg.letters_on(site);
        if letters.len() > 2 {
            return Err(Error::UnsupportedArity { site });
        }
        let labels: Vec<String> = letters.iter().map(|l| l.as_char().to_string()).collect();
        parties.push(Party {
            site,
            name: format!("q{site}"),
            labels,
        });
    }
    let terms = arg
        .elements()
        .iter()
        .map(|e| BellTerm {
            coefficient: e.sign.as_f64(),
            settings: parties
                .iter()
                .map(|p| {
                    let l = e.word.letter(p.site);
                    (l != PauliLetter::I)
                        .then(|| p.labels.iter().position(|x| x.starts_with(l.as_char())).expect("label"))
                })
                .collect(),
        })
        .collect();
    BellPolynomial::new("ghz-argument", parties, terms)
}

/// Observable bound to every (party, label) of a polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct SettingsChoice {
    observables: Vec<Vec<Observable>>,
}

impl SettingsChoice {
    pub fn new(observables: Vec<Vec<Observable>>) -> Self {
        SettingsChoice { observables }
    }

    /// Binds labels by name; every label of `p` must appear exactly once.
    pub fn from_named(p: &BellPolynomial, named: &[(&str, Observable)]) -> Result<Self> {
        let mut observables = Vec::new();
        for (pi, party) in p.parties.iter().enumerate() {
            let mut row = Vec::new();
            for label in &party.labels {
                let obs =
                    named
                        .iter()
                        .find(|(n, _)| n == label)
                        .map(|(_, o)| *o)
                        .ok_or_else(|| Error::UnboundLabel {
                            party: pi,
                            label: label.clone(),
                        })?;
                row.push(obs);
            }
            observables.push(row);
        }
        Ok(SettingsChoice { observables })
    }

    /// Settings for polynomials whose labels are letter names (`X`, `Y`, `Z`).
    pub fn from_label_letters(p: &BellPolynomial) -> Result<Self> {
        let observables = p
            .parties
            .iter()
            .enumerate()
            .map(|(pi, party)| {
                party
                    .labels
                    .iter()
                    .map(|l| {
                        let mut chars = l.chars();
                        match (chars.next().and_then(PauliLetter::from_char), chars.next()) {
                            (Some(letter), None) => Ok(Observable::letter(letter)),
                            _ => Err(Error::UnboundLabel {
                                party: pi,
                                label: l.clone(),
                            }),
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SettingsChoice { observables })
    }

    pub fn observables(&self) -> &[Vec<Observable>] {
        &self.observables
    }

    pub fn get(&self, party: usize, label: usize) -> Option<&Observable> {
        self.observables.get(party).and_then(|r| r.get(label))
    }

    fn check(&self, p: &BellPolynomial) -> Result<()> {
        if self.observables.len() != p.parties.len() {
            return Err(Error::DimensionMismatch {
                expected: p.parties.len(),
                found: self.observables.len(),
            });
        }
        for (pi, party) in p.parties.iter().enumerate() {
            if let Some(label) = party.labels.get(self.observables[pi].len()) {
                return Err(Error::UnboundLabel {
                    party: pi,
                    label: label.clone(),
                });
            }
        }
        Ok(())
    }

    /// Per-term observables in party order.
    fn term_observables(&self, t: &BellTerm) -> Vec<Observable> {
        t.settings
            .iter()
            .enumerate()
            .map(|(p, s)| match s {
                None => Observable::Identity,
                Some(l) => self.observables[p][*l],
            })
            .collect()
    }

    /// `party -> label -> Bloch vector`, identity bound as `[0, 0, 0]`.
    pub fn to_map(&self, p: &BellPolynomial) -> BTreeMap<String, BTreeMap<String, [f64; 3]>> {
        p.parties
            .iter()
            .zip(&self.observables)
            .map(|(party, row)| {
                let labels = party
                    .labels
                    .iter()
                    .zip(row)
                    .map(|(l, o)| {
                        let [_, x, y, z] = o.components();
                        (l.clone(), [x, y, z])
                    })
                    .collect();
                (party.name.clone(), labels)
            })
            .collect()
    }
}

/// Reduced state on the party sites, in party order.
fn party_state<S: QuantumState + ?Sized>(p: &BellPolynomial, state: &S) -> Result<DensityMatrix> {
    let sites = p.party_sites();
    for &s in &sites {
        if s >= state.sites() {
            return Err(Error::DimensionMismatch {
                expected: s + 1,
                found: state.sites(),
            });
        }
    }
    state.reduce(&sites)
}

/// `Σ coefficient · <term>` on `state`.
pub fn quantum_value<S: QuantumState + ?Sized>(
    p: &BellPolynomial,
    settings: &SettingsChoice,
    state: &S,
) -> Result<f64> {
    settings.check(p)?;
    let rho = party_state(p, state)?;
    p.terms
        .iter()
        .map(|t| Ok(t.coefficient * crate::quantum::expectation_settings(&rho, &settings.term_observables(t))?))
        .sum()
}

/// Expectation of each term separately (coefficients not applied).
pub fn term_expectations<S: QuantumState + ?Sized>(
    p: &BellPolynomial,
    settings: &SettingsChoice,
    state: &S,
) -> Result<Vec<f64>> {
    settings.check(p)?;
    let rho = party_state(p, state)?;
    p.terms
        .iter()
        .map(|t| crate::quantum::expectation_settings(&rho, &settings.term_observables(t)))
        .collect()
}

/// Dense Bell operator on the party sites, party 0 most significant.
pub fn bell_operator(p: &BellPolynomial, settings: &SettingsChoice) -> Result<DMatrix<Complex64>> {
    settings.check(p)?;
    let dim = 1 << p.parties.len();
    let mut op = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for t in &p.terms {
        op += observable_matrix(&settings.term_observables(t)) * Complex64::new(t.coefficient, 0.0);
    }
    Ok(op)
}

/// `<B²> - <B>²`; zero exactly when the state is an eigenstate of `B`.
pub fn operator_variance<S: QuantumState + ?Sized>(
    p: &BellPolynomial,
    settings: &SettingsChoice,
    state: &S,
) -> Result<f64> {
    let rho = party_state(p, state)?;
    let op = bell_operator(p, settings)?;
    let rb = rho.matrix() * &op;
    let mean = rb.trace().re;
    let second = (&rb * &op).trace().re;
    Ok(second - mean * mean)
}

/// Exact local bound by enumerating ±1 outcomes for every used
/// (party, label). Returns the bound and a lexicographically first witness
/// keyed by label name.
pub fn classical_bound(p: &BellPolynomial) -> Result<(f64, BTreeMap<String, i8>)> {
    let vars = p.used_labels();
    if vars.len() > MAX_LHV_VARIABLES {
        return Err(Error::SearchSpaceTooLarge {
            variables: vars.len(),
            limit: MAX_LHV_VARIABLES,
        });
    }
    let n = vars.len();
    let masks: Vec<(u32, f64)> = p
        .terms
        .iter()
        .map(|t| {
            let mask = t.settings.iter().enumerate().fold(0u32, |m, (pi, s)| match s {
                Some(l) => {
                    let idx = vars.binary_search(&(pi, *l)).expect("used label");
                    m | (1 << (n - 1 - idx))
                }
                None => m,
            });
            (mask, t.coefficient)
        })
        .collect();
    let (best, code) = best_code(n, |code| {
        masks
            .iter()
            .map(|&(m, c)| if (code & m).count_ones() % 2 == 0 { c } else { -c })
            .sum()
    });
    let witness = vars
        .iter()
        .enumerate()
        .map(|(i, &(pi, l))| {
            let party = &p.parties[pi];
            let key = if party.labels[l].starts_with(&party.name) {
                party.labels[l].clone()
            } else {
                format!("{}.{}", party.name, party.labels[l])
            };
            (key, if (code >> (n - 1 - i)) & 1 == 1 { -1 } else { 1 })
        })
        .collect();
    Ok((best, witness))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub max_sweeps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 64,
            tolerance: 1e-10,
            seed: 0,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub polynomial: String,
    pub classical_bound: f64,
    pub classical_witness: BTreeMap<String, i8>,
    pub quantum_value: f64,
    pub algebraic_bound: f64,
    pub settings: BTreeMap<String, BTreeMap<String, [f64; 3]>>,
    /// The classical bound comes from exhaustive enumeration.
    pub classical_exact: bool,
    /// The quantum value reaches the algebraic bound, so no better settings exist.
    pub quantum_certified: bool,
    pub violation: bool,
}

impl BoundReport {
    pub fn check(&self) -> Result<()> {
        let finite = [self.classical_bound, self.quantum_value, self.algebraic_bound]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidPolynomial("non-finite bound".into()));
        }
        if self.quantum_value > self.algebraic_bound + BOUND_TOL {
            return Err(Error::InvalidPolynomial(format!(
                "quantum value {} exceeds algebraic bound {}",
                self.quantum_value, self.algebraic_bound
            )));
        }
        if self.classical_bound > self.algebraic_bound + BOUND_TOL {
            return Err(Error::InvalidPolynomial(format!(
                "classical bound {} exceeds algebraic bound {}",
                self.classical_bound, self.algebraic_bound
            )));
        }
        for row in self.settings.values() {
            for b in row.values() {
                let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm != 0.0 && (norm - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSetting(format!("Bloch vector {b:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Correlation tensor contraction. `vectors[p]` is the four-component
/// `(I, X, Y, Z)` weight of party `p`; `free` keeps that party open and
/// returns its four partial sums.
fn contract(tensor: &[f64], vectors: &[[f64; 4]], free: Option<usize>) -> [f64; 4] {
    let n = vectors.len();
    let mut buf: Vec<f64> = tensor.to_vec();
    // From the back: parties after `free`.
    let stop = free.map_or(0, |f| f + 1);
    for p in (stop..n).rev() {
        let v = &vectors[p];
        let len = buf.len() / 4;
        for j in 0..len {
            buf[j] = buf[4 * j] * v[0] + buf[4 * j + 1] * v[1] + buf[4 * j + 2] * v[2] + buf[4 * j + 3] * v[3];
        }
        buf.truncate(len);
    }
    // From the front: parties before `free`.
    if let Some(f) = free {
        for v in &vectors[..f] {
            let stride = buf.len() / 4;
            for j in 0..stride {
                buf[j] =
                    buf[j] * v[0] + buf[stride + j] * v[1] + buf[2 * stride + j] * v[2] + buf[3 * stride + j] * v[3];
            }
            buf.truncate(stride);
        }
        [buf[0], buf[1], buf[2], buf[3]]
    } else {
        [buf[0], 0.0, 0.0, 0.0]
    }
}

struct Ascent<'a> {
    p: &'a BellPolynomial,
    tensor: &'a [f64],
}

impl Ascent<'_> {
    fn vectors(&self, t: &BellTerm, bloch: &[Vec<[f64; 4]>]) -> Vec<[f64; 4]> {
        t.settings
            .iter()
            .enumerate()
            .map(|(p, s)| match s {
                None => IDENTITY,
                Some(l) => bloch[p][*l],
            })
            .collect()
    }

    fn objective(&self, bloch: &[Vec<[f64; 4]>]) -> f64 {
        self.p
            .terms
            .iter()
            .map(|t| t.coefficient * contract(self.tensor, &self.vectors(t, bloch), None)[0])
            .sum()
    }

    /// Linear functional of `(party, label)` with all other settings fixed.
    fn gradient(&self, bloch: &[Vec<[f64; 4]>], party: usize, label: usize) -> [f64; 4] {
        let mut f = [0.0; 4];
        for t in &self.p.terms {
            if t.settings[party] != Some(label) {
                continue;
            }
            let r = contract(self.tensor, &self.vectors(t, bloch), Some(party));
            for a in 0..4 {
                f[a] += t.coefficient * r[a];
            }
        }
        f
    }

    fn run(&self, mut bloch: Vec<Vec<[f64; 4]>>, config: &OptimizerConfig) -> (f64, Vec<Vec<[f64; 4]>>) {
        let slots = self.p.used_labels();
        let mut value = self.objective(&bloch);
        for _ in 0..config.max_sweeps {
            let start = value;
            for &(party, label) in &slots {
                let f = self.gradient(&bloch, party, label);
                let norm = (f[1] * f[1] + f[2] * f[2] + f[3] * f[3]).sqrt();
                if norm > 0.0 {
                    bloch[party][label] = [0.0, f[1] / norm, f[2] / norm, f[3] / norm];
                }
                let next = self.objective(&bloch);
                assert!(
                    next >= value - 1e-12,
                    "best response decreased the objective: {value} -> {next}"
                );
                value = next.max(value);
            }
            if value - start < config.tolerance {
                break;
            }
        }
        (value, bloch)
    }
}

const IDENTITY: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [0.0, r * phi.cos(), r * phi.sin(), z]
}

/// Best-response ascent from `config.restarts` seeded random starts, plus the
/// exact classical bound. Every optimized setting is a unit spin.
pub fn optimize_settings<S: QuantumState + ?Sized>(
    p: &BellPolynomial,
    state: &S,
    config: &OptimizerConfig,
) -> Result<BoundReport> {
    let rho = party_state(p, state)?;
    let tensor = rho.pauli_expectations();
    let ascent = Ascent { p, tensor: &tensor };
    let restarts = config.restarts.max(1);
    let best = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let start: Vec<Vec<[f64; 4]>> = p
                .parties
                .iter()
                .map(|party| party.labels.iter().map(|_| random_unit(&mut rng)).collect())
                .collect();
            let (v, b) = ascent.run(start, config);
            (v, r, b)
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("at least one restart");
    let (value, _, bloch) = best;
    let settings = SettingsChoice::new(
        bloch
            .iter()
            .map(|row| {
                row.iter()
                    .map(|b| {
                        Ok(Observable::Spin(MeasurementSetting::from_direction([
                            b[1], b[2], b[3],
                        ])?))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?,
    );
    let (classical, witness) = classical_bound(p)?;
    let algebraic = p.algebraic_bound();
    let report = BoundReport {
        polynomial: p.name.clone(),
        classical_bound: classical,
        classical_witness: witness,
        quantum_value: value,
        algebraic_bound: algebraic,
        settings: settings.to_map(p),
        classical_exact: true,
        quantum_certified: value >= algebraic - BOUND_TOL,
        violation: value > classical + BOUND_TOL,
    };
    report.check()?;
    Ok(report)
}

/// Report for fixed settings: the quantum value is evaluated, not optimized.
pub fn evaluate_settings<S: QuantumState + ?Sized>(
    p: &BellPolynomial,
    settings: &SettingsChoice,
    state: &S,
) -> Result<BoundReport> {
    let value = quantum_value(p, settings, state)?;
    let (classical, witness) = classical_bound(p)?;
    let algebraic = p.algebraic_bound();
    let report = BoundReport {
        polynomial: p.name.clone(),
        classical_bound: classical,
        classical_witness: witness,
        quantum_value: value,
        algebraic_bound: algebraic,
        settings: settings.to_map(p),
        classical_exact: true,
        quantum_certified: value >= algebraic - BOUND_TOL,
        violation: value > classical + BOUND_TOL,
    };
    report.check()?;
    Ok(report)
}

/// The settings under which [`cluster4_polynomial`] reaches 4 on the
/// four-site chain state.
pub fn cluster4_settings() -> SettingsChoice {
    use PauliLetter::*;
    SettingsChoice::from_named(
        &cluster4_polynomial(),
        &[
            ("A", Observable::letter(X)),
            ("A'", Observable::letter(Z)),
            ("B", Observable::letter(Y)),
            ("C", Observable::letter(Y)),
            ("C'", Observable::letter(X)),
            ("D", Observable::letter(Z)),
            ("D'", Observable::letter(Y)),
        ],
    )
    .expect("all labels bound")
}

/// The settings under which [`window5_polynomial`] reaches 4 on a five-site
/// window of a chain state; the outer parties' unprimed labels are trivial.
pub fn window5_settings() -> SettingsChoice {
    use PauliLetter::*;
    SettingsChoice::from_named(
        &window5_polynomial(),
        &[
            ("A", Observable::Identity),
            ("A'", Observable::letter(Z)),
            ("B", Observable::letter(Z)),
            ("B'", Observable::letter(Y)),
            ("C", Observable::letter(Y)),
            ("C'", Observable::letter(X)),
            ("D", Observable::letter(Z)),
            ("D'", Observable::letter(Y)),
            ("E", Observable::Identity),
            ("E'", Observable::letter(Z)),
        ],
    )
    .expect("all labels bound")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_lattice, full_group, LatticeSpec, DEFAULT_GROUP_LIMIT};
    use crate::lhv::{find_ghz_arguments, window_argument_1d, Constraint};
    use crate::quantum::{make_cluster_state, make_ghz, make_w4, StateVector};
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    fn chain(n: usize) -> crate::graph::Graph {
        build_lattice(&LatticeSpec::chain(n)).unwrap()
    }

    fn phi4() -> StateVector {
        make_cluster_state(&chain(4)).unwrap()
    }

    fn quick() -> OptimizerConfig {
        OptimizerConfig {
            restarts: 16,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn cluster4_bounds_and_eigenstate() {
        let p = cluster4_polynomial();
        assert_eq!(p.to_string(), "[A I C' D] + [A I C D'] + [A' B C D] - [A' B C' D']");
        assert_eq!(classical_bound(&p).unwrap().0, 2.0);
        assert_eq!(p.algebraic_bound(), 4.0);
        let s = cluster4_settings();
        assert!((quantum_value(&p, &s, &phi4()).unwrap() - 4.0).abs() < 1e-10);
        assert!(operator_variance(&p, &s, &phi4()).unwrap().abs() < 1e-10);
        let words: Vec<String> = p.instantiate(&s).unwrap().iter().map(|w| w.to_string()).collect();
        assert_eq!(words, ["+XIXZ", "+XIYY", "+ZYYZ", "-ZYXY"]);
    }

    #[test]
    fn cluster4_on_w4_with_fixed_settings() {
        let p = cluster4_polynomial();
        let v = quantum_value(&p, &cluster4_settings(), &make_w4()).unwrap();
        assert!(v <= 2.618 + 5e-3);
        let terms = term_expectations(&p, &cluster4_settings(), &make_w4()).unwrap();
        let direct: f64 = terms.iter().zip(p.terms()).map(|(e, t)| e * t.coefficient).sum();
        assert!((direct - v).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_keeps_identity_terms() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let p = cluster4_polynomial();
        assert!(quantum_value(&p, &cluster4_settings(), &rho).unwrap().abs() < 1e-15);
        let group = full_group(&chain(4), DEFAULT_GROUP_LIMIT).unwrap();
        let s = stabilizer_sum_polynomial(&group).unwrap();
        let v = quantum_value(&s, &SettingsChoice::from_label_letters(&s).unwrap(), &rho).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window5_values() {
        let p = window5_polynomial();
        assert_eq!(classical_bound(&p).unwrap().0, 2.0);
        let all_identity = SettingsChoice::new(vec![vec![Observable::Identity; 2]; 5]);
        let terms = term_expectations(&p, &all_identity, &make_cluster_state(&chain(5)).unwrap()).unwrap();
        assert!(terms.iter().all(|e| (e - 1.0).abs() < 1e-12));
        assert!((quantum_value(&p, &all_identity, &phi4_window()).unwrap() - 2.0).abs() < 1e-12);
        let v = quantum_value(&p, &window5_settings(), &phi4_window()).unwrap();
        assert!((v - 4.0).abs() < 1e-10);
    }

    fn phi4_window() -> DensityMatrix {
        make_cluster_state(&chain(8)).unwrap().reduce(&[1, 2, 3, 4, 5]).unwrap()
    }

    #[test]
    fn window_argument_polynomial_matches_window5() {
        for k in 2..=4 {
            let arg = window_argument_1d(8, k).unwrap();
            let p = from_ghz_argument(&arg).unwrap();
            let mut a: Vec<String> = p
                .instantiate(&SettingsChoice::from_label_letters(&p).unwrap())
                .unwrap()
                .iter()
                .map(|w| w.to_string())
                .collect();
            let mut b: Vec<String> = window5_polynomial()
                .instantiate(&window5_settings())
                .unwrap()
                .iter()
                .map(|w| w.to_string())
                .collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
            let psi = make_cluster_state(&chain(8)).unwrap();
            let v = quantum_value(&p, &SettingsChoice::from_label_letters(&p).unwrap(), &psi).unwrap();
            assert!((v - p.algebraic_bound()).abs() < 1e-10);
        }
    }

    #[test]
    fn phi4_argument_polynomial_matches_cluster4() {
        let group = full_group(&chain(4), DEFAULT_GROUP_LIMIT).unwrap();
        let arg = find_ghz_arguments(&group, 4)
            .into_iter()
            .find(|a| {
                a.elements().iter().any(|e| e.to_string() == "-ZYXY")
                    && a.elements().iter().any(|e| e.to_string() == "+XIXZ")
            })
            .unwrap();
        let p = from_ghz_argument(&arg).unwrap();
        assert_eq!(p.parties()[1].labels, vec!["Y"]);
        let mut a: Vec<String> = p
            .instantiate(&SettingsChoice::from_label_letters(&p).unwrap())
            .unwrap()
            .iter()
            .map(|w| w.to_string())
            .collect();
        a.sort();
        let mut b: Vec<String> = cluster4_polynomial()
            .instantiate(&cluster4_settings())
            .unwrap()
            .iter()
            .map(|w| w.to_string())
            .collect();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(classical_bound(&p).unwrap().0, 2.0);
    }

    #[test]
    fn three_letter_site_is_rejected() {
        let group = full_group(&chain(4), DEFAULT_GROUP_LIMIT).unwrap();
        let args = find_ghz_arguments(&group, 6);
        let wide = args
            .iter()
            .find(|a| a.window().iter().any(|&s| a.letters_on(s).len() == 3));
        if let Some(a) = wide {
            assert!(matches!(from_ghz_argument(a), Err(Error::UnsupportedArity { .. })));
        }
    }

    #[test]
    fn stabilizer_sum_bounds() {
        let group = full_group(&chain(4), DEFAULT_GROUP_LIMIT).unwrap();
        let p = stabilizer_sum_polynomial(&group).unwrap();
        assert_eq!(p.terms().len(), 16);
        let (classical, _) = classical_bound(&p).unwrap();
        assert_eq!(classical, 12.0);
        // Oracle: same number from the constraint formulation.
        let weighted: Vec<(Constraint, f64)> = group
            .elements()
            .iter()
            .map(|e| (Constraint::from_element(e), 1.0))
            .collect();
        assert_eq!(crate::lhv::max_weighted_sum(&weighted).unwrap().0, classical);
        let letters = SettingsChoice::from_label_letters(&p).unwrap();
        assert!((quantum_value(&p, &letters, &phi4()).unwrap() - 16.0).abs() < 1e-10);
        let ghz = optimize_settings(&p, &make_ghz(4).unwrap(), &quick()).unwrap();
        assert!((ghz.quantum_value - 8.0).abs() < 1e-2, "{}", ghz.quantum_value);
    }

    #[test]
    fn stabilizer_sum_splits_into_two_arguments_and_eight_more() {
        let group = full_group(&chain(4), DEFAULT_GROUP_LIMIT).unwrap();
        let p = stabilizer_sum_polynomial(&group).unwrap();
        let terms: BTreeSet<String> = p
            .instantiate(&SettingsChoice::from_label_letters(&p).unwrap())
            .unwrap()
            .iter()
            .map(|w| w.to_string())
            .collect();
        assert_eq!(terms.len(), 16);
        let first: BTreeSet<String> = cluster4_polynomial()
            .instantiate(&cluster4_settings())
            .unwrap()
            .iter()
            .map(|w| w.to_string())
            .collect();
        assert!(first.is_subset(&terms));
        let second: Vec<BTreeSet<String>> = find_ghz_arguments(&group, 4)
            .iter()
            .map(|a| a.elements().iter().map(|e| e.to_string()).collect::<BTreeSet<_>>())
            .filter(|a| a.contains("-YXYZ") && a.is_disjoint(&first))
            .collect();
        assert_eq!(second.len(), 1);
        let expected: BTreeSet<String> = ["+IZXZ", "+IZYY", "+YXXY", "-YXYZ"].map(String::from).into();
        assert_eq!(second[0], expected);
        assert_eq!(terms.len() - first.len() - second[0].len(), 8);
    }

    #[test]
    fn mabk_structure_and_bounds() {
        let m2 = mabk_polynomial(2).unwrap();
        assert_eq!(m2.terms().len(), 4);
        assert_eq!(classical_bound(&m2).unwrap().0, 2.0);
        let m3 = mabk_polynomial(3).unwrap();
        assert_eq!(m3.terms().len(), 4);
        assert!(m3.terms().iter().all(|t| t.coefficient.abs() == 1.0));
        let m4 = mabk4_polynomial();
        assert_eq!(m4.terms().len(), 16);
        assert!(m4.terms().iter().all(|t| t.coefficient.abs() == 0.5));
        assert_eq!(classical_bound(&m4).unwrap().0, 2.0);
        assert_eq!(m4.algebraic_bound(), 8.0);
        assert!(mabk_polynomial(1).is_err());
    }

    #[test]
    fn mabk_optimized_values() {
        let m4 = mabk4_polynomial();
        let ghz = optimize_settings(&m4, &make_ghz(4).unwrap(), &quick()).unwrap();
        assert!((ghz.quantum_value - 4.0 * SQRT_2).abs() < 1e-3, "{}", ghz.quantum_value);
        let phi = optimize_settings(&m4, &phi4(), &quick()).unwrap();
        assert!((phi.quantum_value - 2.0 * SQRT_2).abs() < 1e-3, "{}", phi.quantum_value);
    }

    #[test]
    fn cluster4_optimized_values() {
        let p = cluster4_polynomial();
        let ghz = optimize_settings(&p, &make_ghz(4).unwrap(), &quick()).unwrap();
        assert!((ghz.quantum_value - 2.0).abs() < 1e-3, "{}", ghz.quantum_value);
        let w = optimize_settings(&p, &make_w4(), &OptimizerConfig::default()).unwrap();
        assert!((w.quantum_value - 2.618).abs() < 5e-3, "{}", w.quantum_value);
        let phi = optimize_settings(&p, &phi4(), &quick()).unwrap();
        assert!((phi.quantum_value - 4.0).abs() < 1e-9);
        assert!(phi.quantum_certified && phi.violation);
    }

    #[test]
    fn window5_needs_trivial_settings() {
        // Ascent over spins ends at the classical value; the violation uses A = E = I.
        let p = window5_polynomial();
        let r = optimize_settings(&p, &phi4_window(), &quick()).unwrap();
        assert!((r.quantum_value - 2.0).abs() < 1e-6, "{}", r.quantum_value);
        let fixed = evaluate_settings(&p, &window5_settings(), &phi4_window()).unwrap();
        assert!((fixed.quantum_value - 4.0).abs() < 1e-10 && fixed.quantum_certified);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let p = cluster4_polynomial();
        let a = optimize_settings(&p, &make_w4(), &quick()).unwrap();
        let b = optimize_settings(&p, &make_w4(), &quick()).unwrap();
        assert_eq!(a, b);
        let json = serde_json::to_string(&a).unwrap();
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn mermin_grouping() {
        // Grouping parties A and B: setting a -> (a), setting a' -> (a' b).
        let p = cluster4_polynomial();
        let m = mermin3_polynomial();
        let mut agree = true;
        for code in 0u32..1 << 7 {
            let v = |i: usize| if (code >> i) & 1 == 1 { -1.0 } else { 1.0 };
            // Variables: a, a', b, c, c', d, d'.
            let (a, ap, b, c, cp, d, dp) = (v(0), v(1), v(2), v(3), v(4), v(5), v(6));
            let eq9 = a * cp * d + a * c * dp + ap * b * c * d - ap * b * cp * dp;
            let (x, xp) = (a, ap * b);
            let mermin = x * cp * d + x * c * dp + xp * c * d - xp * cp * dp;
            agree &= eq9 == mermin;
        }
        assert!(agree);
        assert_eq!(classical_bound(&p).unwrap().0, classical_bound(&m).unwrap().0);
    }

    #[test]
    fn errors() {
        let p = cluster4_polynomial();
        assert!(matches!(
            SettingsChoice::from_named(&p, &[("A", Observable::Identity)]),
            Err(Error::UnboundLabel { .. })
        ));
        let short = SettingsChoice::new(vec![vec![Observable::Identity; 2]; 3]);
        assert!(quantum_value(&p, &short, &phi4()).is_err());
        assert!(quantum_value(&p, &cluster4_settings(), &make_ghz(3).unwrap()).is_err());
        assert!(BellPolynomial::new("x", vec![party(0, "A", &["A"])], vec![]).is_err());
        assert!(BellPolynomial::new("x", vec![party(0, "A", &["A"])], vec![term(1.0, &[Some(3)])]).is_err());
        assert!(BellPolynomial::new("x", vec![party(0, "A", &["A"])], vec![term(f64::NAN, &[None])]).is_err());
        let big = full_group(&chain(11), DEFAULT_GROUP_LIMIT).unwrap();
        assert!(matches!(
            stabilizer_sum_polynomial(&big),
            Err(Error::GroupTooLarge { .. })
        ));
    }

    #[test]
    fn contraction_matches_direct_evaluation() {
        let p = cluster4_polynomial();
        let rho = make_w4().to_density_matrix();
        let tensor = rho.pauli_expectations();
        let ascent = Ascent { p: &p, tensor: &tensor };
        let bloch: Vec<Vec<[f64; 4]>> = vec![
            vec![[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
            vec![[0.0, 0.0, 1.0, 0.0]],
            vec![[0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0]],
            vec![[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]],
        ];
        let direct = quantum_value(&p, &cluster4_settings(), &rho).unwrap();
        assert!((ascent.objective(&bloch) - direct).abs() < 1e-12);
        // Linearity: value = const + f · b for every slot.
        for &(party, label) in &p.used_labels() {
            let f = ascent.gradient(&bloch, party, label);
            let b = bloch[party][label];
            let mut flipped = bloch.clone();
            flipped[party][label] = b.map(|x| -x);
            let dot: f64 = (0..4).map(|a| f[a] * b[a]).sum();
            assert!((ascent.objective(&bloch) - ascent.objective(&flipped) - 2.0 * dot).abs() < 1e-12);
        }
    }

    fn unit() -> impl Strategy<Value = [f64; 3]> {
        (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
            let r = (1.0 - z * z).sqrt();
            [r * phi.cos(), r * phi.sin(), z]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn ghz4_weight_three_terms_vanish(bs in prop::collection::vec(unit(), 7)) {
            let p = cluster4_polynomial();
            let obs = |b: [f64; 3]| Observable::Spin(MeasurementSetting::new(b).unwrap());
            let s = SettingsChoice::new(vec![
                vec![obs(bs[0]), obs(bs[1])],
                vec![obs(bs[2])],
                vec![obs(bs[3]), obs(bs[4])],
                vec![obs(bs[5]), obs(bs[6])],
            ]);
            let e = term_expectations(&p, &s, &make_ghz(4).unwrap()).unwrap();
            prop_assert!(e[0].abs() < 1e-10 && e[1].abs() < 1e-10);
        }

        #[test]
        fn random_settings_stay_below_algebraic_bound(bs in prop::collection::vec(unit(), 8)) {
            let p = mabk4_polynomial();
            let obs = |b: [f64; 3]| Observable::Spin(MeasurementSetting::new(b).unwrap());
            let s = SettingsChoice::new(bs.chunks(2).map(|c| vec![obs(c[0]), obs(c[1])]).collect());
            let v = quantum_value(&p, &s, &make_ghz(4).unwrap()).unwrap();
            prop_assert!(v.abs() <= 4.0 * SQRT_2 + 1e-9);
        }
    }
}
