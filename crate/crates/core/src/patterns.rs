//! Voter-graph patterns: small graphs whose vertices carry an opinion.
//!
//! Isomorphism and automorphisms are decided by exhaustive permutation
//! search, which is why patterns are capped at [`MAX_PATTERN_VERTICES`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest pattern accepted by the permutation-based routines.
pub const MAX_PATTERN_VERTICES: usize = 8;

/// Opinions by vertex and sorted edge list under some labeling.
pub type Encoding = (Vec<Opinion>, Vec<(usize, usize)>);

/// Largest label set accepted by [`enumerate_labeled_copies`].
pub const MAX_LABEL_SET: usize = 12;

/// Hard cap for pattern construction (adjacency is kept as a `u64` mask).
const MAX_BUILD_VERTICES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Opinion {
    Minus,
    Plus,
}

impl Opinion {
    #[inline]
    pub fn flip(self) -> Self {
        match self {
            Opinion::Plus => Opinion::Minus,
            Opinion::Minus => Opinion::Plus,
        }
    }

    #[inline]
    pub fn is_plus(self) -> bool {
        self == Opinion::Plus
    }

    pub fn symbol(self) -> char {
        match self {
            Opinion::Plus => '+',
            Opinion::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Opinion::Plus),
            '-' | '\u{2212}' => Some(Opinion::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Opinion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// An abstract voter graph `H`.
///
/// Edges are stored as ordered pairs `(a, b)` with `a < b`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VoterPattern {
    opinions: Vec<Opinion>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<u64>,
}

impl VoterPattern {
    /// Validates and canonicalizes a pattern.
    pub fn new(opinions: Vec<Opinion>, edges: &[(usize, usize)]) -> Result<Self> {
        let v = opinions.len();
        if v == 0 {
            return Err(Error::InvalidPattern("a pattern needs at least one vertex".into()));
        }
        if v > MAX_BUILD_VERTICES {
            return Err(Error::SizeLimit {
                what: "pattern vertex count",
                actual: v,
                limit: MAX_BUILD_VERTICES,
            });
        }
        let mut adjacency = vec![0u64; v];
        let mut canonical = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= v || b >= v {
                return Err(Error::InvalidEdge(a, b, "endpoint out of range"));
            }
            if a == b {
                return Err(Error::InvalidEdge(a, b, "self-loop"));
            }
            if adjacency[a] & (1 << b) != 0 {
                return Err(Error::InvalidEdge(a, b, "duplicate edge"));
            }
            adjacency[a] |= 1 << b;
            adjacency[b] |= 1 << a;
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort_unstable();
        Ok(Self {
            opinions,
            edges: canonical,
            adjacency,
        })
    }

    /// Single edge between two vertices with the given opinions.
    pub fn edge(a: Opinion, b: Opinion) -> Self {
        Self::new(vec![a, b], &[(0, 1)]).expect("edge pattern is valid")
    }

    pub fn vertex(o: Opinion) -> Self {
        Self::new(vec![o], &[]).expect("vertex pattern is valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.opinions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn opinions(&self) -> &[Opinion] {
        &self.opinions
    }

    pub fn opinion(&self, v: usize) -> Opinion {
        self.opinions[v]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a] & (1 << b) != 0
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].count_ones() as usize
    }

    fn check_search_budget(&self) -> Result<()> {
        if self.vertex_count() > MAX_PATTERN_VERTICES {
            return Err(Error::SizeLimit {
                what: "pattern vertex count",
                actual: self.vertex_count(),
                limit: MAX_PATTERN_VERTICES,
            });
        }
        Ok(())
    }

    /// Encoding of the pattern relabeled by `perm` (old vertex `a` becomes
    /// `perm[a]`).
    fn encode(&self, perm: &[usize]) -> Encoding {
        let mut opinions = vec![Opinion::Minus; self.vertex_count()];
        for (a, &o) in self.opinions.iter().enumerate() {
            opinions[perm[a]] = o;
        }
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (perm[a], perm[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        edges.sort_unstable();
        (opinions, edges)
    }

    /// Lexicographically smallest encoding over all relabelings.
    pub fn canonical_form(&self) -> Result<Encoding> {
        self.check_search_budget()?;
        let mut best: Option<Encoding> = None;
        for_each_permutation(self.vertex_count(), |perm| {
            let enc = self.encode(perm);
            if best.as_ref().is_none_or(|b| enc < *b) {
                best = Some(enc);
            }
        });
        Ok(best.expect("at least one permutation"))
    }

    /// Pattern literal, e.g. `V=3; opinions=+-+; edges=0-1,1-2`.
    pub fn literal(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for VoterPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opinions: String = self.opinions.iter().map(|o| o.symbol()).collect();
        let edges: Vec<String> = self.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        write!(
            f,
            "V={}; opinions={}; edges={}",
            self.vertex_count(),
            opinions,
            edges.join(",")
        )
    }
}

impl FromStr for VoterPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut count: Option<usize> = None;
        let mut opinions: Option<Vec<Opinion>> = None;
        let mut edges: Option<Vec<(usize, usize)>> = None;
        for field in compact.split(';').filter(|f| !f.is_empty()) {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::PatternSyntax(format!("field `{field}` lacks `=`")))?;
            match key.to_ascii_lowercase().as_str() {
                "v" => {
                    let n = value
                        .parse()
                        .map_err(|_| Error::PatternSyntax(format!("bad vertex count `{value}`")))?;
                    count = Some(n);
                }
                "opinions" => {
                    let parsed = value
                        .chars()
                        .map(|c| {
                            Opinion::from_symbol(c)
                                .ok_or_else(|| Error::PatternSyntax(format!("bad opinion symbol `{c}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    opinions = Some(parsed);
                }
                "edges" => {
                    let mut list = Vec::new();
                    for item in value.split(',').filter(|e| !e.is_empty()) {
                        let (a, b) = item
                            .split_once('-')
                            .ok_or_else(|| Error::PatternSyntax(format!("bad edge `{item}`")))?;
                        let a = a
                            .parse()
                            .map_err(|_| Error::PatternSyntax(format!("bad edge `{item}`")))?;
                        let b = b
                            .parse()
                            .map_err(|_| Error::PatternSyntax(format!("bad edge `{item}`")))?;
                        list.push((a, b));
                    }
                    edges = Some(list);
                }
                other => {
                    return Err(Error::PatternSyntax(format!("unknown field `{other}`")));
                }
            }
        }
        let opinions = opinions.ok_or_else(|| Error::PatternSyntax("missing `opinions`".into()))?;
        if let Some(n) = count {
            if n != opinions.len() {
                return Err(Error::PatternSyntax(format!(
                    "V={n} but {} opinions given",
                    opinions.len()
                )));
            }
        }
        VoterPattern::new(opinions, &edges.unwrap_or_default())
    }
}

impl Serialize for VoterPattern {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.literal())
    }
}

impl<'de> Deserialize<'de> for VoterPattern {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Visits every permutation of `0..k` (Heap's algorithm).
pub(crate) fn for_each_permutation(k: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut c = vec![0usize; k];
    f(&perm);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn preserves(h: &VoterPattern, h2: &VoterPattern, perm: &[usize]) -> bool {
    h.opinions.iter().enumerate().all(|(a, &o)| h2.opinion(perm[a]) == o)
        && h.edges.iter().all(|&(a, b)| h2.has_edge(perm[a], perm[b]))
}

/// True iff an edge- and opinion-preserving bijection exists.
pub fn are_isomorphic(h: &VoterPattern, h2: &VoterPattern) -> Result<bool> {
    h.check_search_budget()?;
    h2.check_search_budget()?;
    if h.vertex_count() != h2.vertex_count() || h.edge_count() != h2.edge_count() {
        return Ok(false);
    }
    let mut counts = [0usize; 2];
    for &o in h.opinions() {
        counts[o.is_plus() as usize] += 1;
    }
    for &o in h2.opinions() {
        counts[o.is_plus() as usize] = counts[o.is_plus() as usize].wrapping_sub(1);
    }
    if counts != [0, 0] {
        return Ok(false);
    }
    let mut found = false;
    for_each_permutation(h.vertex_count(), |perm| {
        // edge counts agree, so an injective edge map is a bijection
        if !found && preserves(h, h2, perm) {
            found = true;
        }
    });
    Ok(found)
}

/// Number of opinion-preserving automorphisms `A(H)`.
pub fn automorphism_count(h: &VoterPattern) -> Result<u64> {
    h.check_search_budget()?;
    let mut count = 0u64;
    for_each_permutation(h.vertex_count(), |perm| {
        if preserves(h, h, perm) {
            count += 1;
        }
    });
    Ok(count)
}

/// `|S|! / ((|S| - V)! A(H))`, the number of labeled copies of `H` on a set
/// of `set_size` labels.
pub fn labeled_copy_count(set_size: usize, h: &VoterPattern) -> Result<u128> {
    let v = h.vertex_count();
    if set_size < v {
        return Ok(0);
    }
    let falling = (0..v).fold(1u128, |acc, i| acc * (set_size - i) as u128);
    Ok(falling / automorphism_count(h)? as u128)
}

/// A pattern placed on concrete vertex names (an element of `G_S(H)`).
///
/// Position `i` carries label `labels[i]`; labels are strictly increasing.
/// Edges are stored as label pairs `(u, v)` with `u < v`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledVoterGraph {
    labels: Vec<usize>,
    opinions: Vec<Opinion>,
    edges: Vec<(usize, usize)>,
}

impl LabeledVoterGraph {
    /// Places `pattern` so that pattern vertex `a` gets `labels[a]`.
    /// Labels must be distinct; they are sorted internally.
    pub fn place(pattern: &VoterPattern, labels: &[usize]) -> Result<Self> {
        if labels.len() != pattern.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: pattern.vertex_count(),
                got: labels.len(),
            });
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by_key(|&a| labels[a]);
        if order.windows(2).any(|w| labels[w[0]] == labels[w[1]]) {
            return Err(Error::InvalidPattern("labels must be distinct".into()));
        }
        let sorted: Vec<usize> = order.iter().map(|&a| labels[a]).collect();
        let opinions = order.iter().map(|&a| pattern.opinion(a)).collect();
        let mut edges: Vec<(usize, usize)> = pattern
            .edges()
            .iter()
            .map(|&(a, b)| (labels[a].min(labels[b]), labels[a].max(labels[b])))
            .collect();
        edges.sort_unstable();
        Ok(Self {
            labels: sorted,
            opinions,
            edges,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// `(label, opinion)` pairs in increasing label order.
    pub fn vertices(&self) -> impl Iterator<Item = (usize, Opinion)> + '_ {
        self.labels.iter().copied().zip(self.opinions.iter().copied())
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn opinion_of(&self, label: usize) -> Option<Opinion> {
        self.labels.binary_search(&label).ok().map(|i| self.opinions[i])
    }

    /// The underlying abstract pattern, vertex `i` being `labels()[i]`.
    pub fn pattern(&self) -> VoterPattern {
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| {
                (
                    self.labels.binary_search(&u).expect("edge label"),
                    self.labels.binary_search(&v).expect("edge label"),
                )
            })
            .collect();
        VoterPattern::new(self.opinions.clone(), &edges).expect("labeled graph is a valid pattern")
    }

    /// `self ⊏ other`: vertex and edge sets included, opinions agreeing.
    pub fn is_subgraph_of(&self, other: &LabeledVoterGraph) -> bool {
        self.vertices().all(|(l, o)| other.opinion_of(l) == Some(o))
            && self.edges.iter().all(|e| other.edges.binary_search(e).is_ok())
    }
}

/// Every element of `G_S(H)` exactly once, in sorted order.
pub fn enumerate_labeled_copies(label_set: &[usize], h: &VoterPattern) -> Result<Vec<LabeledVoterGraph>> {
    h.check_search_budget()?;
    let mut labels: Vec<usize> = label_set.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() > MAX_LABEL_SET {
        return Err(Error::SizeLimit {
            what: "label set size",
            actual: labels.len(),
            limit: MAX_LABEL_SET,
        });
    }
    let v = h.vertex_count();
    let mut out = Vec::new();
    if labels.len() < v {
        return Ok(out);
    }
    for_each_combination(labels.len(), v, |comb| {
        let chosen: Vec<usize> = comb.iter().map(|&i| labels[i]).collect();
        let mut seen = BTreeSet::new();
        for_each_permutation(v, |perm| {
            let placed: Vec<usize> = perm.iter().map(|&p| chosen[p]).collect();
            seen.insert(LabeledVoterGraph::place(h, &placed).expect("distinct labels"));
        });
        out.extend(seen);
    });
    Ok(out)
}

/// Visits the `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut comb: Vec<usize> = (0..k).collect();
    loop {
        f(&comb);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if comb[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        comb[i] += 1;
        for j in i + 1..k {
            comb[j] = comb[j - 1] + 1;
        }
    }
}
