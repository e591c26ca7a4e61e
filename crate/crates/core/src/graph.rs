//! Graphs, square lattices, graph-state generators and stabilizer groups.
//!
//! Every site `a` of a graph contributes the generator `X_a ⊗ Z_neigh(a)`.
//! Lattice sites are numbered row-major (last coordinate fastest) with open
//! boundaries; loops and other periodic structures are built from explicit
//! edge lists.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::bits::BitRow;
use crate::error::{Error, Result};
use crate::pauli::{PauliLetter, PauliString, Sign};

pub const DEFAULT_GROUP_LIMIT: usize = 20;

/// Simple undirected graph on sites `0..site_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    site_count: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(site_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if site_count == 0 {
            return Err(Error::InvalidGraph("a graph needs at least one site".into()));
        }
        let mut graph = Graph {
            site_count,
            edges: BTreeSet::new(),
            neighbors: vec![BTreeSet::new(); site_count],
        };
        for (a, b) in edges {
            for s in [a, b] {
                if s >= site_count {
                    return Err(Error::SiteOutOfRange { site: s, site_count });
                }
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on site {a}")));
            }
            if !graph.edges.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGraph(format!("duplicate edge {a}-{b}")));
            }
            graph.neighbors[a].insert(b);
            graph.neighbors[b].insert(a);
        }
        Ok(graph)
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, site: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[site].iter().copied()
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        a < self.site_count && self.neighbors[a].contains(&b)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.site_count {
            return Err(Error::SiteOutOfRange {
                site,
                site_count: self.site_count,
            });
        }
        Ok(())
    }

    /// Plain-text form: `sites N` followed by one `edge i j` line per edge.
    pub fn to_file_format(&self) -> String {
        let mut out = format!("sites {}\n", self.site_count);
        for (a, b) in self.edges() {
            out.push_str(&format!("edge {a} {b}\n"));
        }
        out
    }

    /// Parses the plain-text form. Blank lines and `#` comments are ignored.
    pub fn from_file_format(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let sites = match lines.next() {
            Some((_, line)) => match line.split_whitespace().collect::<Vec<_>>()[..] {
                ["sites", n] => parse_count(n)?,
                _ => return Err(Error::Parse(format!("expected `sites N`, found {line:?}"))),
            },
            None => return Err(Error::Parse("empty graph file".into())),
        };
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            match line.split_whitespace().collect::<Vec<_>>()[..] {
                ["edge", a, b] => edges.push((parse_count(a)?, parse_count(b)?)),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `edge i j`, found {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Graph::new(sites, edges)
    }
}

fn parse_count(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Parse(format!("expected a non-negative integer, found {s:?}")))
}

/// Extents of an open square lattice, one per dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeSpec {
    pub extents: Vec<usize>,
}

impl LatticeSpec {
    pub fn new(extents: impl Into<Vec<usize>>) -> Self {
        LatticeSpec {
            extents: extents.into(),
        }
    }

    pub fn chain(n: usize) -> Self {
        LatticeSpec::new(vec![n])
    }

    pub fn site_count(&self) -> usize {
        self.extents.iter().product()
    }

    /// Row-major site index of a coordinate vector.
    pub fn site_index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.extents.len() {
            return Err(Error::DimensionMismatch {
                expected: self.extents.len(),
                found: coords.len(),
            });
        }
        let mut index = 0;
        for (&c, &e) in coords.iter().zip(&self.extents) {
            if c >= e {
                return Err(Error::SiteOutOfRange { site: c, site_count: e });
            }
            index = index * e + c;
        }
        Ok(index)
    }

    pub fn coords(&self, mut site: usize) -> Vec<usize> {
        let mut coords = vec![0; self.extents.len()];
        for (c, &e) in coords.iter_mut().zip(&self.extents).rev() {
            *c = site % e;
            site /= e;
        }
        coords
    }
}

pub fn build_lattice(spec: &LatticeSpec) -> Result<Graph> {
    if spec.extents.is_empty() || spec.extents.contains(&0) {
        return Err(Error::ZeroExtent);
    }
    let n = spec.site_count();
    let mut edges = Vec::new();
    for site in 0..n {
        let coords = spec.coords(site);
        for (dim, &extent) in spec.extents.iter().enumerate() {
            if coords[dim] + 1 < extent {
                let mut next = coords.clone();
                next[dim] += 1;
                edges.push((site, spec.site_index(&next)?));
            }
        }
    }
    Graph::new(n, edges)
}

/// Site 0 joined to each of `n_leaves` leaves. Its graph state is locally a GHZ state.
pub fn star_graph(n_leaves: usize) -> Result<Graph> {
    if n_leaves == 0 {
        return Err(Error::InvalidGraph("a star needs at least one leaf".into()));
    }
    Graph::new(n_leaves + 1, (1..=n_leaves).map(|leaf| (0, leaf)))
}

/// Command-line graph shorthand: `1d:N`, `AxB`, `AxBxC`, ... or `star:K` (K leaves).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Lattice(LatticeSpec),
    Star(usize),
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Lattice(spec) => build_lattice(spec),
            GraphSpec::Star(leaves) => star_graph(*leaves),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(n) = s.strip_prefix("1d:") {
            return Ok(GraphSpec::Lattice(LatticeSpec::chain(parse_count(n)?)));
        }
        if let Some(k) = s.strip_prefix("star:") {
            return Ok(GraphSpec::Star(parse_count(k)?));
        }
        if s.contains('x') {
            let extents = s.split('x').map(parse_count).collect::<Result<Vec<_>>>()?;
            return Ok(GraphSpec::Lattice(LatticeSpec::new(extents)));
        }
        Err(Error::Parse(format!(
            "unrecognized graph spec {s:?} (expected 1d:N, AxB[xC...], or star:K)"
        )))
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Lattice(spec) if spec.extents.len() == 1 => write!(f, "1d:{}", spec.extents[0]),
            GraphSpec::Lattice(spec) => {
                let parts: Vec<String> = spec.extents.iter().map(|e| e.to_string()).collect();
                f.write_str(&parts.join("x"))
            }
            GraphSpec::Star(k) => write!(f, "star:{k}"),
        }
    }
}

/// Signed element of a stabilizer group together with the generators that produce it.
///
/// `word` carries the sign in its phase (`phase_exp` 0 or 2); `sign` mirrors it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StabilizerElement {
    pub word: PauliString,
    pub sign: Sign,
    pub generator_mask: BitRow,
}

impl StabilizerElement {
    pub fn new(word: PauliString, generator_mask: BitRow) -> Result<Self> {
        let sign = word.sign()?;
        Ok(StabilizerElement {
            word,
            sign,
            generator_mask,
        })
    }

    pub fn identity(sites: usize, generators: usize) -> Self {
        StabilizerElement {
            word: PauliString::identity(sites),
            sign: Sign::Plus,
            generator_mask: BitRow::zeros(generators),
        }
    }

    /// Operator product; masks combine by XOR.
    pub fn compose(&self, other: &StabilizerElement) -> Result<StabilizerElement> {
        let word = self.word.multiply(&other.word)?;
        StabilizerElement::new(word, self.generator_mask.xor(&other.generator_mask))
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_identity_letters()
    }

    pub fn support(&self) -> Vec<usize> {
        self.word.support()
    }

    pub fn mask_indices(&self) -> Vec<usize> {
        self.generator_mask.ones().collect()
    }
}

impl fmt::Display for StabilizerElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.word, f)
    }
}

impl fmt::Debug for StabilizerElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}", self.word, self.generator_mask)
    }
}

/// `X` on `site`, `Z` on each neighbor, sign +1.
pub fn generator(g: &Graph, site: usize) -> Result<StabilizerElement> {
    g.check_site(site)?;
    let mut word = PauliString::single(g.site_count(), site, PauliLetter::X);
    for nb in g.neighbors(site) {
        word.set_letter(nb, PauliLetter::Z);
    }
    StabilizerElement::new(word, BitRow::from_indices(g.site_count(), [site]))
}

pub fn generators(g: &Graph) -> Vec<StabilizerElement> {
    (0..g.site_count())
        .map(|a| generator(g, a).expect("site in range"))
        .collect()
}

/// Product of the generators selected by `mask` (length = site count).
pub fn element_from_mask(g: &Graph, mask: &BitRow) -> Result<StabilizerElement> {
    if mask.len() != g.site_count() {
        return Err(Error::DimensionMismatch {
            expected: g.site_count(),
            found: mask.len(),
        });
    }
    let mut acc = StabilizerElement::identity(g.site_count(), g.site_count());
    for a in mask.ones() {
        acc = acc.compose(&generator(g, a)?)?;
    }
    Ok(acc)
}

/// All `2^n` elements generated by `n` independent commuting generators,
/// stored so that `elements()[m]` has generator mask `m`.
#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    sites: usize,
    generators: Vec<StabilizerElement>,
    elements: Vec<StabilizerElement>,
}

impl StabilizerGroup {
    pub fn from_generators(generators: Vec<StabilizerElement>, limit: usize) -> Result<Self> {
        let count = generators.len();
        if count > limit || count >= 64 {
            return Err(Error::GroupTooLarge {
                sites: count,
                limit: limit.min(63),
            });
        }
        let sites = generators.first().map_or(0, |g| g.word.len());
        for (i, a) in generators.iter().enumerate() {
            if a.word.len() != sites {
                return Err(Error::DimensionMismatch {
                    expected: sites,
                    found: a.word.len(),
                });
            }
            for b in &generators[i + 1..] {
                if !a.word.commutes(&b.word)? {
                    return Err(Error::InvalidGraph(format!(
                        "generators {} and {} do not commute",
                        a.word, b.word
                    )));
                }
            }
        }
        // Re-key generator masks to positions in this generating set.
        let generators: Vec<_> = generators
            .into_iter()
            .enumerate()
            .map(|(i, g)| StabilizerElement {
                generator_mask: BitRow::from_indices(count, [i]),
                ..g
            })
            .collect();
        let mut elements = Vec::with_capacity(1 << count);
        elements.push(StabilizerElement::identity(sites, count));
        for m in 1usize..(1 << count) {
            let low = m.trailing_zeros() as usize;
            let next = elements[m & (m - 1)].compose(&generators[low])?;
            elements.push(next);
        }
        let group = StabilizerGroup {
            sites,
            generators,
            elements,
        };
        if group.elements[1..].iter().any(|e| e.is_identity()) {
            return Err(Error::InvalidGraph("generators are not independent".into()));
        }
        Ok(group)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn generators(&self) -> &[StabilizerElement] {
        &self.generators
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

    pub fn element(&self, mask: u64) -> &StabilizerElement {
        &self.elements[mask as usize]
    }

    /// Elements other than the identity, in mask order.
    pub fn nontrivial(&self) -> &[StabilizerElement] {
        &self.elements[1..]
    }

    /// Index from unsigned letters to element, for membership checks.
    pub fn word_index(&self) -> HashMap<PauliString, usize> {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.unsigned(), i))
            .collect()
    }

    /// Signed element with these letters, if present.
    pub fn find(&self, letters: &PauliString) -> Option<&StabilizerElement> {
        let target = letters.unsigned();
        self.elements.iter().find(|e| e.word.unsigned() == target)
    }

    pub fn sign_counts(&self) -> (usize, usize) {
        let minus = self.elements.iter().filter(|e| e.sign.is_minus()).count();
        (self.elements.len() - minus, minus)
    }
}

/// Stabilizer group of the graph state with every generator eigenvalue +1.
pub fn full_group(g: &Graph, limit: usize) -> Result<StabilizerGroup> {
    if g.site_count() > limit {
        return Err(Error::GroupTooLarge {
            sites: g.site_count(),
            limit,
        });
    }
    StabilizerGroup::from_generators(generators(g), limit)
}

/// Group for another eigenvalue sector: generator `a` is negated when
/// `eigenvalues[a]` is [`Sign::Minus`].
pub fn full_group_in_sector(g: &Graph, eigenvalues: &[Sign], limit: usize) -> Result<StabilizerGroup> {
    if eigenvalues.len() != g.site_count() {
        return Err(Error::DimensionMismatch {
            expected: g.site_count(),
            found: eigenvalues.len(),
        });
    }
    if g.site_count() > limit {
        return Err(Error::GroupTooLarge {
            sites: g.site_count(),
            limit,
        });
    }
    let gens = generators(g)
        .into_iter()
        .zip(eigenvalues)
        .map(|(e, &s)| StabilizerElement::new(e.word.with_sign(s), e.generator_mask))
        .collect::<Result<Vec<_>>>()?;
    StabilizerGroup::from_generators(gens, limit)
}
