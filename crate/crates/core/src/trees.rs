//! Stable labeled trees.
//!
//! A [`LabeledTree`] has vertices `0..n`, undirected edges and a map from
//! labels (positive integers) to vertices. The special points of a vertex
//! are its labels together with its incident edges; a tree is stable when
//! every vertex has at least three.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("a tree needs at least one vertex")]
    Empty,
    #[error("edge ({0}, {1}) references a missing vertex")]
    BadEdge(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("expected {expected} edges for {vertices} vertices, found {found}")]
    EdgeCount { vertices: usize, expected: usize, found: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("label {label} points to missing vertex {vertex}")]
    BadLabel { label: usize, vertex: usize },
    #[error("labels must be positive")]
    ZeroLabel,
    #[error("stable trees need at least 3 labels, got {0}")]
    TooFewLabels(usize),
    #[error("cannot stabilize: a lone vertex with {0} labels has fewer than 3 special points")]
    Unstabilizable(usize),
    #[error("vertex map has length {found}, expected {expected}")]
    MapLength { expected: usize, found: usize },
    #[error("vertex {vertex} maps outside the target tree")]
    MapRange { vertex: usize },
    #[error("label sets differ")]
    LabelSetMismatch,
    #[error("label {0} is not preserved")]
    LabelNotPreserved(usize),
    #[error("edge ({0}, {1}) maps to a non-edge")]
    EdgeNotPreserved(usize, usize),
}

#[derive(Clone, PartialEq, Eq)]
pub struct LabeledTree {
    n: usize,
    edges: Vec<(usize, usize)>,
    labels: BTreeMap<usize, usize>,
    adjacency: Vec<Vec<usize>>,
}

impl LabeledTree {
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        labels: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TreeError> {
        if n == 0 {
            return Err(TreeError::Empty);
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(TreeError::BadEdge(u, v));
            }
            if u == v {
                return Err(TreeError::SelfLoop(u));
            }
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(TreeError::DuplicateEdge(e.0, e.1));
            }
        }
        if set.len() != n - 1 {
            return Err(TreeError::EdgeCount { vertices: n, expected: n - 1, found: set.len() });
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for a in adjacency.iter_mut() {
            a.sort_unstable();
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(TreeError::Disconnected);
        }
        let mut map = BTreeMap::new();
        for (label, vertex) in labels {
            if label == 0 {
                return Err(TreeError::ZeroLabel);
            }
            if vertex >= n {
                return Err(TreeError::BadLabel { label, vertex });
            }
            map.insert(label, vertex);
        }
        Ok(LabeledTree { n, edges, labels: map, adjacency })
    }

    /// One vertex carrying labels `1..=k`.
    pub fn single_vertex(k: usize) -> Self {
        Self::new(1, [], (1..=k).map(|i| (i, 0))).expect("single vertex is a tree")
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> &BTreeMap<usize, usize> {
        &self.labels
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn label_vertex(&self, label: usize) -> Option<usize> {
        self.labels.get(&label).copied()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency.get(u).is_some_and(|a| a.binary_search(&v).is_ok())
    }

    /// Labels at `v` in ascending order.
    pub fn labels_at(&self, v: usize) -> Vec<usize> {
        self.labels.iter().filter(|(_, &w)| w == v).map(|(&l, _)| l).collect()
    }

    /// Number of special points `#Y_v`: labels plus incident edges.
    pub fn special_count(&self, v: usize) -> usize {
        self.labels_at(v).len() + self.degree(v)
    }

    pub fn is_stable(&self) -> bool {
        (0..self.n).all(|v| self.special_count(v) >= 3)
    }

    /// Labels reachable from `to` without crossing back over `from`.
    pub fn far_side_labels(&self, from: usize, to: usize) -> Vec<usize> {
        let mut side = vec![false; self.n];
        let mut stack = vec![to];
        side[to] = true;
        while let Some(u) = stack.pop() {
            for &w in &self.adjacency[u] {
                if !side[w] && !(u == to && w == from) {
                    side[w] = true;
                    stack.push(w);
                }
            }
        }
        self.labels.iter().filter(|(_, &v)| side[v]).map(|(&l, _)| l).collect()
    }

    /// Renames vertex `v` to `perm[v]`.
    pub fn permute_vertices(&self, perm: &[usize]) -> Result<Self, TreeError> {
        if perm.len() != self.n {
            return Err(TreeError::MapLength { expected: self.n, found: perm.len() });
        }
        Self::new(
            self.n,
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
            self.labels.iter().map(|(&l, &v)| (l, perm[v])),
        )
    }

    fn centroids(&self) -> Vec<usize> {
        let n = self.n;
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0];
        parent[0] = 0;
        while let Some(u) = stack.pop() {
            order.push(u);
            for &w in &self.adjacency[u] {
                if parent[w] == usize::MAX {
                    parent[w] = u;
                    stack.push(w);
                }
            }
        }
        let mut size = vec![1usize; n];
        for &u in order.iter().rev() {
            if u != 0 {
                size[parent[u]] += size[u];
            }
        }
        let mut best = usize::MAX;
        let mut out = Vec::new();
        for u in 0..n {
            let mut heaviest = n - size[u];
            for &w in &self.adjacency[u] {
                if w != 0 && parent[w] == u {
                    heaviest = heaviest.max(size[w]);
                }
            }
            match heaviest.cmp(&best) {
                std::cmp::Ordering::Less => {
                    best = heaviest;
                    out = vec![u];
                }
                std::cmp::Ordering::Equal => out.push(u),
                std::cmp::Ordering::Greater => {}
            }
        }
        out
    }

    /// AHU encoding of the tree rooted at `root`, plus the vertex order in
    /// which the encoding visits the vertices.
    fn rooted_encoding(&self, root: usize) -> (String, Vec<usize>) {
        fn enc(t: &LabeledTree, v: usize, parent: Option<usize>) -> (String, Vec<usize>) {
            let mut children: Vec<(String, Vec<usize>)> =
                t.adjacency[v].iter().filter(|&&w| Some(w) != parent).map(|&w| enc(t, w, Some(v))).collect();
            children.sort();
            let labels: Vec<String> = t.labels_at(v).iter().map(|l| l.to_string()).collect();
            let mut s = format!("({}", labels.join(","));
            let mut order = vec![v];
            for (cs, co) in children {
                s.push_str(&cs);
                order.extend(co);
            }
            s.push(')');
            (s, order)
        }
        enc(self, root, None)
    }

    fn canonical_rooting(&self) -> (String, Vec<usize>) {
        self.centroids().into_iter().map(|c| self.rooted_encoding(c)).min().expect("a tree has a centroid")
    }

    /// Encoding that agrees for two trees iff they are isomorphic as
    /// labeled trees.
    pub fn canonical_form(&self) -> String {
        self.canonical_rooting().0
    }

    /// Vertices listed in canonical order; isomorphic trees have their
    /// canonical orders matched by an isomorphism.
    pub fn canonical_order(&self) -> Vec<usize> {
        self.canonical_rooting().1
    }

    /// A label-preserving isomorphism `self → other` as a vertex map.
    pub fn isomorphism_to(&self, other: &LabeledTree) -> Option<Vec<usize>> {
        let (a, oa) = self.canonical_rooting();
        let (b, ob) = other.canonical_rooting();
        if a != b {
            return None;
        }
        let mut map = vec![0; self.n];
        for (u, v) in oa.into_iter().zip(ob) {
            map[u] = v;
        }
        Some(map)
    }

    pub fn is_isomorphic(&self, other: &LabeledTree) -> bool {
        self.canonical_form() == other.canonical_form()
    }
}

impl fmt::Debug for LabeledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LabeledTree(n={}, edges={:?}, labels={:?})", self.n, self.edges, self.labels)
    }
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    n: usize,
    edges: Vec<(usize, usize)>,
    labels: BTreeMap<usize, usize>,
}

impl Serialize for LabeledTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TreeJson { n: self.n, edges: self.edges.clone(), labels: self.labels.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabeledTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = TreeJson::deserialize(deserializer)?;
        LabeledTree::new(raw.n, raw.edges, raw.labels).map_err(serde::de::Error::custom)
    }
}

/// All stable trees labeled by `1..=k` with at most `max_vertices` vertices,
/// one per isomorphism class, sorted by vertex count and canonical form.
///
/// Stable trees correspond to laminar families of splits: each edge cuts
/// the labels into two sides of size at least two. Splits are represented
/// by the side not containing label 1.
pub fn enumerate_stable(k: usize, max_vertices: usize) -> Result<Vec<LabeledTree>, TreeError> {
    if k < 3 {
        return Err(TreeError::TooFewLabels(k));
    }
    let max_splits = max_vertices.min(k - 2).saturating_sub(1);
    let others = (1u64 << k) - 2; // labels 2..=k as bits 1..k
    let mut splits: Vec<u64> = (1..=others)
        .filter(|&m| m & !others == 0)
        .filter(|m| (2..=k - 2).contains(&(m.count_ones() as usize)))
        .collect();
    splits.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));

    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn compatible(a: u64, b: u64) -> bool {
        a & b == 0 || a & b == a || a & b == b
    }
    fn walk(splits: &[u64], start: usize, limit: usize, chosen: &mut Vec<u64>, k: usize, out: &mut Vec<LabeledTree>) {
        out.push(tree_from_splits(chosen, k));
        if chosen.len() == limit {
            return;
        }
        for i in start..splits.len() {
            if chosen.iter().all(|&c| compatible(c, splits[i])) {
                chosen.push(splits[i]);
                walk(splits, i + 1, limit, chosen, k, out);
                chosen.pop();
            }
        }
    }
    if max_vertices >= 1 {
        walk(&splits, 0, max_splits, &mut chosen, k, &mut out);
    }
    let mut keyed: Vec<(usize, String, LabeledTree)> =
        out.into_iter().map(|t| (t.num_vertices(), t.canonical_form(), t)).collect();
    keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    keyed.dedup_by(|a, b| a.1 == b.1);
    Ok(keyed.into_iter().map(|(_, _, t)| t).collect())
}

fn tree_from_splits(splits: &[u64], k: usize) -> LabeledTree {
    let n = splits.len() + 1;
    let smallest_containing = |mask: u64, exclude: Option<usize>| -> usize {
        splits
            .iter()
            .enumerate()
            .filter(|(i, &s)| Some(*i) != exclude && s & mask == mask && s != mask)
            .min_by_key(|(_, s)| s.count_ones())
            .map(|(i, _)| i + 1)
            .unwrap_or(0)
    };
    let edges: Vec<(usize, usize)> =
        splits.iter().enumerate().map(|(i, &s)| (smallest_containing(s, Some(i)), i + 1)).collect();
    let labels = (1..=k).map(|l| {
        let bit = 1u64 << (l - 1);
        let holder = splits
            .iter()
            .enumerate()
            .filter(|(_, &s)| s & bit != 0)
            .min_by_key(|(_, s)| s.count_ones())
            .map(|(i, _)| i + 1)
            .unwrap_or(0);
        (l, holder)
    });
    LabeledTree::new(n, edges, labels).expect("laminar split family yields a tree")
}

/// Number of stable trees per edge count.
pub fn count_by_edges(k: usize) -> Result<BTreeMap<usize, usize>, TreeError> {
    let mut out = BTreeMap::new();
    for t in enumerate_stable(k, k.saturating_sub(2).max(1))? {
        *out.entry(t.num_edges()).or_insert(0) += 1;
    }
    Ok(out)
}

/// Result of [`stabilize`].
#[derive(Debug, Clone)]
pub struct Stabilized {
    pub tree: LabeledTree,
    /// New index of each surviving vertex of the input, `None` if collapsed.
    pub vertex_map: Vec<Option<usize>>,
}

/// Collapses vertices with fewer than three special points until none are
/// left. Vertices with a positive `extra_special` entry are never collapsed.
///
/// A leaf hands its label (if any) to its neighbour; an unlabeled vertex of
/// degree two is replaced by an edge between its neighbours.
pub fn stabilize(t: &LabeledTree, extra_special: &BTreeMap<usize, usize>) -> Result<Stabilized, TreeError> {
    let n = t.n;
    let mut alive = vec![true; n];
    let mut adj: Vec<BTreeSet<usize>> = t.adjacency.iter().map(|a| a.iter().copied().collect()).collect();
    let mut labels: BTreeMap<usize, usize> = t.labels.clone();
    let protected = |v: usize| extra_special.get(&v).copied().unwrap_or(0) > 0;
    loop {
        let mut changed = false;
        for v in 0..n {
            if !alive[v] || protected(v) {
                continue;
            }
            let own: Vec<usize> = labels.iter().filter(|(_, &w)| w == v).map(|(&l, _)| l).collect();
            let deg = adj[v].len();
            if own.len() + deg >= 3 {
                continue;
            }
            match deg {
                0 => return Err(TreeError::Unstabilizable(own.len())),
                1 => {
                    let w = *adj[v].iter().next().expect("degree one");
                    for l in own {
                        labels.insert(l, w);
                    }
                    adj[w].remove(&v);
                    adj[v].clear();
                }
                _ => {
                    let mut it = adj[v].iter().copied();
                    let (x, y) = (it.next().expect("degree two"), it.next().expect("degree two"));
                    adj[x].remove(&v);
                    adj[y].remove(&v);
                    adj[x].insert(y);
                    adj[y].insert(x);
                    adj[v].clear();
                }
            }
            alive[v] = false;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let mut vertex_map = vec![None; n];
    let mut next = 0;
    for v in 0..n {
        if alive[v] {
            vertex_map[v] = Some(next);
            next += 1;
        }
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for &w in &adj[u] {
            if u < w {
                edges.push((vertex_map[u].expect("alive"), vertex_map[w].expect("alive")));
            }
        }
    }
    let tree = LabeledTree::new(next, edges, labels.into_iter().map(|(l, v)| (l, vertex_map[v].expect("alive"))))?;
    Ok(Stabilized { tree, vertex_map })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HomKind {
    /// Every edge maps to an edge.
    Strict,
    /// Some edge collapses to a vertex.
    Collapsing,
}

/// A map of vertex sets `source → target` preserving labels, mapping each
/// edge to an edge or collapsing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeHom {
    pub vertex_map: Vec<usize>,
}

impl TreeHom {
    pub fn new(vertex_map: Vec<usize>) -> Self {
        TreeHom { vertex_map }
    }

    pub fn identity(n: usize) -> Self {
        TreeHom { vertex_map: (0..n).collect() }
    }

    pub fn apply(&self, v: usize) -> usize {
        self.vertex_map[v]
    }

    pub fn check(&self, source: &LabeledTree, target: &LabeledTree) -> Result<HomKind, TreeError> {
        if self.vertex_map.len() != source.n {
            return Err(TreeError::MapLength { expected: source.n, found: self.vertex_map.len() });
        }
        if let Some(v) = self.vertex_map.iter().position(|&w| w >= target.n) {
            return Err(TreeError::MapRange { vertex: v });
        }
        if source.labels.keys().ne(target.labels.keys()) {
            return Err(TreeError::LabelSetMismatch);
        }
        for (&l, &v) in &source.labels {
            if target.labels[&l] != self.vertex_map[v] {
                return Err(TreeError::LabelNotPreserved(l));
            }
        }
        let mut kind = HomKind::Strict;
        for &(u, v) in &source.edges {
            let (fu, fv) = (self.vertex_map[u], self.vertex_map[v]);
            if fu == fv {
                kind = HomKind::Collapsing;
            } else if !target.has_edge(fu, fv) {
                return Err(TreeError::EdgeNotPreserved(u, v));
            }
        }
        Ok(kind)
    }
}
