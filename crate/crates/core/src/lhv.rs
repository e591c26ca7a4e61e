//! Local hidden variables: deterministic assignments, exhaustive
//! satisfiability and automated GHZ-paradox search.
//!
//! A hidden-variable model pre-assigns ±1 to every (site, letter) pair that a
//! constraint set mentions. A stabilizer element then becomes an ordinary
//! product of numbers, so a set of elements in which every variable appears
//! an even number of times while the signs multiply to −1 cannot be
//! satisfied by any assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitRow;
use crate::error::{Error, Result};
use crate::graph::{build_lattice, element_from_mask, Graph, LatticeSpec, StabilizerElement, StabilizerGroup};
use crate::pauli::{LetterParity, PauliLetter, PauliString, Sign};

/// Ceiling on the number of hidden variables enumerated exhaustively.
pub const MAX_LHV_VARIABLES: usize = 24;

/// Default subset-size cap for paradox search.
pub const DEFAULT_MAX_SUBSET: usize = 6;

/// Pre-established outcome of measuring `letter` on `site`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LhvVariable {
    pub site: usize,
    pub letter: PauliLetter,
}

impl fmt::Display for LhvVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.letter.as_char().to_ascii_lowercase(), self.site)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LhvAssignment {
    values: BTreeMap<LhvVariable, Sign>,
}

impl LhvAssignment {
    pub fn all_plus(variables: impl IntoIterator<Item = LhvVariable>) -> Self {
        LhvAssignment {
            values: variables.into_iter().map(|v| (v, Sign::Plus)).collect(),
        }
    }

    pub fn set(&mut self, site: usize, letter: PauliLetter, value: Sign) {
        self.values.insert(LhvVariable { site, letter }, value);
    }

    pub fn get(&self, site: usize, letter: PauliLetter) -> Option<Sign> {
        self.values.get(&LhvVariable { site, letter }).copied()
    }

    pub fn variables(&self) -> impl Iterator<Item = LhvVariable> + '_ {
        self.values.keys().copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (LhvVariable, Sign)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_all_plus(&self) -> bool {
        self.values.values().all(|&s| s == Sign::Plus)
    }
}

/// A perfect-correlation property: the product of the outcomes on the
/// non-identity sites of `word` must equal `sign`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    word: PauliString,
    sign: Sign,
}

impl Constraint {
    /// From a signed Hermitian word such as `-ZYXY`.
    pub fn new(signed_word: &PauliString) -> Result<Self> {
        let sign = signed_word.sign()?;
        Ok(Constraint {
            word: signed_word.unsigned(),
            sign,
        })
    }

    pub fn from_element(e: &StabilizerElement) -> Self {
        Constraint {
            word: e.word.unsigned(),
            sign: e.sign,
        }
    }

    pub fn word(&self) -> &PauliString {
        &self.word
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn variables(&self) -> impl Iterator<Item = LhvVariable> + '_ {
        self.word.support().into_iter().map(|site| LhvVariable {
            site,
            letter: self.word.letter(site),
        })
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.word.clone().with_sign(self.sign), f)
    }
}

pub fn constraint_satisfied(lam: &LhvAssignment, c: &Constraint) -> Result<bool> {
    let mut product = Sign::Plus;
    for v in c.variables() {
        let value = lam.get(v.site, v.letter).ok_or(Error::MissingVariable {
            site: v.site,
            letter: v.letter,
        })?;
        product = product * value;
    }
    Ok(product == c.sign)
}

/// Constraints compiled to bit masks over the sorted variable list. Bit
/// `V - 1 - i` of an assignment code holds variable `i` (set = −1), so
/// ascending codes enumerate assignments lexicographically with +1 < −1.
struct Compiled {
    variables: Vec<LhvVariable>,
    masks: Vec<u32>,
    minus: Vec<bool>,
}

impl Compiled {
    fn new<'a>(constraints: impl IntoIterator<Item = &'a Constraint> + Clone) -> Result<Self> {
        let variables: Vec<LhvVariable> = constraints
            .clone()
            .into_iter()
            .flat_map(|c| c.variables().collect::<Vec<_>>())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if variables.len() > MAX_LHV_VARIABLES {
            return Err(Error::SearchSpaceTooLarge {
                variables: variables.len(),
                limit: MAX_LHV_VARIABLES,
            });
        }
        let position: HashMap<LhvVariable, usize> = variables.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = variables.len();
        let (masks, minus) = constraints
            .into_iter()
            .map(|c| {
                let mask = c.variables().fold(0u32, |m, v| m | (1 << (n - 1 - position[&v])));
                (mask, c.sign.is_minus())
            })
            .unzip();
        Ok(Compiled {
            variables,
            masks,
            minus,
        })
    }

    fn satisfied(&self, code: u32, i: usize) -> bool {
        ((code & self.masks[i]).count_ones() % 2 == 1) == self.minus[i]
    }

    fn assignment(&self, code: u32) -> LhvAssignment {
        let n = self.variables.len();
        LhvAssignment {
            values: self
                .variables
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, Sign::from_parity((code >> (n - 1 - i)) & 1 == 1)))
                .collect(),
        }
    }
}

/// Maximizes `score` over all `2^vars` codes; ties go to the smallest code.
pub(crate) fn best_code(vars: usize, score: impl Fn(u32) -> f64 + Sync) -> (f64, u32) {
    let total: u64 = 1 << vars;
    let chunk: u64 = 1 << 14;
    let chunks = total.div_ceil(chunk);
    (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut best = (f64::NEG_INFINITY, 0u32);
            for code in ci * chunk..(ci * chunk + chunk).min(total) {
                let s = score(code as u32);
                if s > best.0 {
                    best = (s, code as u32);
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, u32::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        )
}

/// Largest number of constraints any single assignment satisfies, with the
/// lexicographically smallest witness.
pub fn max_satisfied(constraints: &[Constraint]) -> Result<(usize, LhvAssignment)> {
    let compiled = Compiled::new(constraints)?;
    let (best, code) = best_code(compiled.variables.len(), |code| {
        (0..compiled.masks.len())
            .filter(|&i| compiled.satisfied(code, i))
            .count() as f64
    });
    Ok((best as usize, compiled.assignment(code)))
}

/// Maximum of `Σ weight · (±1 correlation of each constraint)` where a
/// satisfied constraint contributes `+weight` and a violated one `-weight`.
pub fn max_weighted_sum(constraints: &[(Constraint, f64)]) -> Result<(f64, LhvAssignment)> {
    let compiled = Compiled::new(constraints.iter().map(|(c, _)| c))?;
    let weights: Vec<f64> = constraints.iter().map(|(_, w)| *w).collect();
    let (best, code) = best_code(compiled.variables.len(), |code| {
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| if compiled.satisfied(code, i) { *w } else { -*w })
            .sum()
    });
    Ok((best, compiled.assignment(code)))
}

/// Largest number of constraints that hold simultaneously, found by testing
/// constraint subsets for solvability over GF(2) from the largest down.
/// Agrees with [`max_satisfied`] but costs `2^constraints` instead of
/// `2^variables`.
pub fn max_consistent(constraints: &[Constraint]) -> Result<usize> {
    let variables: Vec<LhvVariable> = constraints
        .iter()
        .flat_map(|c| c.variables().collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if variables.len() > 64 || constraints.len() > MAX_LHV_VARIABLES {
        return Err(Error::SearchSpaceTooLarge {
            variables: variables.len().max(constraints.len()),
            limit: MAX_LHV_VARIABLES,
        });
    }
    let rows: Vec<(u64, bool)> = constraints
        .iter()
        .map(|c| {
            let mask = c
                .variables()
                .map(|v| 1u64 << variables.binary_search(&v).expect("collected"))
                .fold(0, |a, b| a | b);
            (mask, c.sign.is_minus())
        })
        .collect();
    let m = rows.len();
    for size in (0..=m).rev() {
        let consistent = (0u32..1 << m)
            .filter(|s| s.count_ones() as usize == size)
            .any(|subset| solvable((0..m).filter(|i| (subset >> i) & 1 == 1).map(|i| rows[i])));
        if consistent {
            return Ok(size);
        }
    }
    unreachable!("the empty subset is always solvable")
}

/// Whether `parity(x & mask) == rhs` has a solution for every row.
fn solvable(rows: impl Iterator<Item = (u64, bool)>) -> bool {
    let mut basis: Vec<(u64, bool)> = Vec::new();
    for (mut mask, mut rhs) in rows {
        for &(b, r) in &basis {
            if mask & (1 << (63 - b.leading_zeros())) != 0 {
                mask ^= b;
                rhs ^= r;
            }
        }
        if mask == 0 {
            if rhs {
                return false;
            }
        } else {
            basis.push((mask, rhs));
            basis.sort_by_key(|b| b.0.leading_zeros());
        }
    }
    true
}

/// A set of stabilizer elements that no local assignment satisfies jointly:
/// every (site, letter) variable occurs an even number of times while the
/// signs multiply to −1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhzArgument {
    elements: Vec<StabilizerElement>,
    window: Vec<usize>,
    cooperating_sites: Vec<usize>,
}

impl GhzArgument {
    /// Validates the parity and sign conditions; elements are stored sorted by
    /// generator mask.
    pub fn new(mut elements: Vec<StabilizerElement>) -> Result<Self> {
        if elements.len() < 3 {
            return Err(Error::NotAnArgument(format!(
                "{} elements; at least 3 are needed",
                elements.len()
            )));
        }
        let sites = elements[0].word.len();
        let mut parity = LetterParity::zeros(sites);
        let mut sign = Sign::Plus;
        for e in &elements {
            if e.word.len() != sites {
                return Err(Error::DimensionMismatch {
                    expected: sites,
                    found: e.word.len(),
                });
            }
            parity.xor_assign(&e.word.letter_parity_vector());
            sign = sign * e.sign;
        }
        if !parity.is_zero() {
            let odd: Vec<String> = parity
                .entries()
                .map(|(s, l)| LhvVariable { site: s, letter: l }.to_string())
                .collect();
            return Err(Error::NotAnArgument(format!(
                "variables {} occur an odd number of times",
                odd.join(", ")
            )));
        }
        if sign != Sign::Minus {
            return Err(Error::NotAnArgument("signs multiply to +1".into()));
        }
        elements.sort_by(|a, b| a.generator_mask.cmp(&b.generator_mask));
        let window: Vec<usize> = (0..sites)
            .filter(|&s| elements.iter().any(|e| e.word.letter(s) != PauliLetter::I))
            .collect();
        let cooperating_sites = window
            .iter()
            .copied()
            .filter(|&s| {
                elements
                    .iter()
                    .all(|e| matches!(e.word.letter(s), PauliLetter::I | PauliLetter::Z))
            })
            .collect();
        Ok(GhzArgument {
            elements,
            window,
            cooperating_sites,
        })
    }

    pub fn elements(&self) -> &[StabilizerElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Sites on which some element acts nontrivially.
    pub fn window(&self) -> &[usize] {
        &self.window
    }

    /// Window sites that are only ever asked to measure `Z`.
    pub fn cooperating_sites(&self) -> &[usize] {
        &self.cooperating_sites
    }

    /// Distinct non-identity letters used on `site`, in X, Y, Z order.
    pub fn letters_on(&self, site: usize) -> Vec<PauliLetter> {
        self.elements
            .iter()
            .map(|e| e.word.letter(site))
            .filter(|&l| l != PauliLetter::I)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn constraints(&self) -> Vec<Constraint> {
        self.elements.iter().map(Constraint::from_element).collect()
    }

    /// Whether the window is a run of consecutive site indices.
    pub fn window_is_consecutive(&self) -> bool {
        self.window.windows(2).all(|w| w[1] == w[0] + 1)
    }

    /// Exact check that no assignment satisfies every element. Returns the
    /// best achievable count.
    pub fn verify(&self) -> Result<usize> {
        let best = max_consistent(&self.constraints())?;
        if best >= self.elements.len() {
            return Err(Error::NotAnArgument(
                "a local assignment satisfies every element".into(),
            ));
        }
        Ok(best)
    }
}

impl fmt::Display for GhzArgument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<String> = self.elements.iter().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", words.join(", "))
    }
}

/// All GHZ arguments of size 3..=`max_subset_size` among the nontrivial group elements.
pub fn find_ghz_arguments(group: &StabilizerGroup, max_subset_size: usize) -> Vec<GhzArgument> {
    find_ghz_arguments_among(group.nontrivial(), max_subset_size)
}

/// GHZ arguments among `elements` whose support lies inside `sites`.
pub fn find_ghz_arguments_within(group: &StabilizerGroup, sites: &[usize], max_subset_size: usize) -> Vec<GhzArgument> {
    let allowed: Vec<StabilizerElement> = group
        .nontrivial()
        .iter()
        .filter(|e| e.support().iter().all(|s| sites.contains(s)))
        .cloned()
        .collect();
    find_ghz_arguments_among(&allowed, max_subset_size)
}

/// GHZ arguments among an arbitrary set of elements of one group.
///
/// A product of stabilizer elements can only have even letter parity when
/// their generator masks XOR to zero, so the last element of each candidate
/// subset is looked up from the masks of the others. Results are ordered by
/// size, then lexicographically by generator mask.
pub fn find_ghz_arguments_among(elements: &[StabilizerElement], max_subset_size: usize) -> Vec<GhzArgument> {
    let mut sorted: Vec<&StabilizerElement> = elements.iter().filter(|e| !e.is_identity()).collect();
    sorted.sort_by(|a, b| a.generator_mask.cmp(&b.generator_mask));
    sorted.dedup_by(|a, b| a.generator_mask == b.generator_mask);
    let by_mask: HashMap<&BitRow, usize> = sorted.iter().enumerate().map(|(i, e)| (&e.generator_mask, i)).collect();
    let parities: Vec<LetterParity> = sorted.iter().map(|e| e.word.letter_parity_vector()).collect();

    let mut found = Vec::new();
    for size in 3..=max_subset_size.min(sorted.len()) {
        let per_first: Vec<Vec<Vec<usize>>> = (0..sorted.len())
            .into_par_iter()
            .map(|first| {
                let mut hits = Vec::new();
                let mut chosen = vec![first];
                extend_subsets(
                    &sorted,
                    &by_mask,
                    &parities,
                    size,
                    &mut chosen,
                    sorted[first].generator_mask.clone(),
                    parities[first].clone(),
                    sorted[first].sign,
                    &mut hits,
                );
                hits
            })
            .collect();
        for idxs in per_first.into_iter().flatten() {
            let subset = idxs.iter().map(|&i| sorted[i].clone()).collect();
            found.push(GhzArgument::new(subset).expect("search only yields valid arguments"));
        }
    }
    found
}

#[allow(clippy::too_many_arguments)]
fn extend_subsets(
    sorted: &[&StabilizerElement],
    by_mask: &HashMap<&BitRow, usize>,
    parities: &[LetterParity],
    size: usize,
    chosen: &mut Vec<usize>,
    mask: BitRow,
    parity: LetterParity,
    sign: Sign,
    hits: &mut Vec<Vec<usize>>,
) {
    let last = *chosen.last().expect("nonempty");
    if chosen.len() == size - 1 {
        if let Some(&closing) = by_mask.get(&mask) {
            if closing > last && sign * sorted[closing].sign == Sign::Minus {
                let mut p = parity;
                p.xor_assign(&parities[closing]);
                if p.is_zero() {
                    let mut subset = chosen.clone();
                    subset.push(closing);
                    hits.push(subset);
                }
            }
        }
        return;
    }
    for next in last + 1..sorted.len() {
        let mut p = parity.clone();
        p.xor_assign(&parities[next]);
        chosen.push(next);
        extend_subsets(
            sorted,
            by_mask,
            parities,
            size,
            chosen,
            mask.xor(&sorted[next].generator_mask),
            p,
            sign * sorted[next].sign,
            hits,
        );
        chosen.pop();
    }
}

/// The window argument of a chain of `n` sites built from the three
/// consecutive generators `E_k, E_{k+1}, E_{k+2}` (1-based `k`):
/// `E_{k+1}`, `E_k E_{k+1}`, `E_{k+1} E_{k+2}` and `E_k E_{k+1} E_{k+2}`, the
/// last one carrying the minus sign.
pub fn window_argument_1d(n: usize, k: usize) -> Result<GhzArgument> {
    if n < 3 || k < 1 || k > n - 2 {
        return Err(Error::WindowOutOfRange {
            n,
            k,
            max: n.saturating_sub(2),
        });
    }
    let g = build_lattice(&LatticeSpec::chain(n))?;
    let (a, b, c) = (k - 1, k, k + 1);
    triple_elements(&g, a, b, c)
}

/// Argument from the generators of three sites forming a path `a – b – c`.
pub fn path_triple_argument(g: &Graph, path: [usize; 3]) -> Result<GhzArgument> {
    let [a, b, c] = path;
    for s in path {
        if s >= g.site_count() {
            return Err(Error::SiteOutOfRange {
                site: s,
                site_count: g.site_count(),
            });
        }
    }
    if a == c || !g.are_adjacent(a, b) || !g.are_adjacent(b, c) {
        return Err(Error::NoPath(path));
    }
    triple_elements(g, a, b, c)
}

/// Like [`path_triple_argument`] but accepts the three sites in any order.
pub fn triple_argument(g: &Graph, sites: [usize; 3]) -> Result<GhzArgument> {
    let [a, b, c] = sites;
    for path in [[b, a, c], [a, b, c], [a, c, b]] {
        if let Ok(arg) = path_triple_argument(g, path) {
            return Ok(arg);
        }
    }
    path_triple_argument(g, sites).map_err(|_| Error::NoPath(sites))
}

fn triple_elements(g: &Graph, a: usize, b: usize, c: usize) -> Result<GhzArgument> {
    let n = g.site_count();
    let masks: [&[usize]; 4] = [&[b], &[a, b], &[b, c], &[a, b, c]];
    let elements = masks
        .iter()
        .map(|m| element_from_mask(g, &BitRow::from_indices(n, m.iter().copied())))
        .collect::<Result<Vec<_>>>()?;
    GhzArgument::new(elements)
}
