//! Simple undirected graphs, file formats, clique search, (k−1)-trees and
//! brute-force coloring oracles.
//!
//! Vertices are stored 0-based (`0..n`). Every text format and every printed
//! label is 1-based, so vertex `v` is shown as `v + 1`.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest vertex count supported (adjacency rows are 64-bit masks).
pub const MAX_VERTICES: usize = 64;

/// Simple undirected graph on vertices `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<u64>,
    edges: Vec<(usize, usize)>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n, self.edges.len())
    }
}

impl Graph {
    /// Graph with `n` vertices and no edges.
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_VERTICES, "at most {MAX_VERTICES} vertices supported");
        Graph { n, adj: vec![0; n], edges: Vec::new() }
    }

    /// Builds a graph from 0-based edges; duplicates collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::domain(format!("{n} vertices exceeds the limit of {MAX_VERTICES}")));
        }
        let mut g = Graph::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::domain(format!("edge ({}, {}) out of range for n = {n}", i + 1, j + 1)));
            }
            if i == j {
                return Err(Error::domain(format!("self-loop at vertex {}", i + 1)));
            }
            g.add_edge(i, j);
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.add_edge(i, j);
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n);
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 1..n {
            g.add_edge(i - 1, i);
        }
        g
    }

    fn add_edge(&mut self, i: usize, j: usize) {
        if self.adj[i] >> j & 1 == 1 {
            return;
        }
        self.adj[i] |= 1 << j;
        self.adj[j] |= 1 << i;
        let e = (i.min(j), i.max(j));
        let pos = self.edges.binary_search(&e).unwrap_err();
        self.edges.insert(pos, e);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as sorted pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i] >> j & 1 == 1
    }

    pub fn neighbor_mask(&self, v: usize) -> u64 {
        self.adj[v]
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        bits(self.adj[v]).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    /// Number of common neighbours of `i` and `j`.
    pub fn common_neighbors(&self, i: usize, j: usize) -> usize {
        (self.adj[i] & self.adj[j]).count_ones() as usize
    }

    pub fn is_clique(&self, vs: &[usize]) -> bool {
        vs.iter().enumerate().all(|(a, &u)| vs[a + 1..].iter().all(|&w| self.has_edge(u, w)))
    }
}

/// Iterates the set bits of a mask in increasing order.
pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Assignment of vertices to colors `0..k` (printed as `1..k`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    k: usize,
    colors: Vec<usize>,
}

impl Coloring {
    pub fn new(k: usize, colors: Vec<usize>) -> Result<Self> {
        if let Some(&c) = colors.iter().find(|&&c| c >= k) {
            return Err(Error::domain(format!("color {} outside palette of size {k}", c + 1)));
        }
        Ok(Coloring { k, colors })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn color(&self, v: usize) -> usize {
        self.colors[v]
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Color classes indexed by color, each sorted by vertex.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut cl = vec![Vec::new(); self.k];
        for (v, &c) in self.colors.iter().enumerate() {
            cl[c].push(v);
        }
        cl
    }

    /// Nonempty classes ordered by their smallest vertex: a canonical form
    /// that identifies colorings differing only by a color permutation.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut cl: Vec<Vec<usize>> = self.classes().into_iter().filter(|c| !c.is_empty()).collect();
        cl.sort();
        cl
    }

    pub fn same_partition(&self, other: &Coloring) -> bool {
        self.partition() == other.partition()
    }

    pub fn used_colors(&self) -> usize {
        self.colors.iter().collect::<BTreeSet<_>>().len()
    }
}

/// True when every edge joins differently colored vertices.
pub fn validate_coloring(g: &Graph, c: &Coloring) -> bool {
    c.len() == g.n() && g.edges().iter().all(|&(i, j)| c.color(i) != c.color(j))
}

/// Construction sequence of a (k−1)-tree: `order[..k]` is the initial `K_k`,
/// and `attach[t]` is the (k−1)-clique that `order[k + t]` attaches to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KTreeTrace {
    pub k: usize,
    pub order: Vec<usize>,
    pub attach: Vec<Vec<usize>>,
}

impl KTreeTrace {
    /// Checks the trace against `g`: it must describe exactly `g`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let k = self.k;
        let n = g.n();
        if k < 2 || self.order.len() != n || n < k || self.attach.len() != n - k {
            return Err(Error::domain("trace length does not match the graph"));
        }
        let mut seen = vec![false; n];
        for &v in &self.order {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::domain("trace order is not a permutation"));
            }
        }
        let mut h = Graph::empty(n);
        let base = &self.order[..k];
        for (a, &u) in base.iter().enumerate() {
            for &w in &base[a + 1..] {
                h.add_edge(u, w);
            }
        }
        let mut placed: u64 = base.iter().fold(0, |m, &v| m | 1 << v);
        for (t, &v) in self.order[k..].iter().enumerate() {
            let att = &self.attach[t];
            if att.len() != k - 1 || att.iter().any(|&u| placed >> u & 1 == 0) || !h.is_clique(att) {
                return Err(Error::domain(format!("attach set of vertex {} is not an earlier (k-1)-clique", v + 1)));
            }
            for &u in att {
                h.add_edge(u, v);
            }
            placed |= 1 << v;
        }
        if h.edges != g.edges {
            return Err(Error::domain("trace does not reproduce the graph's edge set"));
        }
        Ok(())
    }
}

/// Parses plantri's ascii output: one graph per nonempty line.
pub fn parse_plantri_ascii(text: &str) -> Result<Vec<Graph>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(line_no, "expected '<n> <adjacency lists>'"))?;
        let n: usize = head.parse().map_err(|_| Error::parse(line_no, format!("bad vertex count '{head}'")))?;
        if n == 0 || n > 26 {
            return Err(Error::parse(line_no, format!("vertex count {n} outside 1..=26")));
        }
        let lists: Vec<&str> = rest.trim().split(',').collect();
        if lists.len() != n {
            return Err(Error::parse(line_no, format!("expected {n} adjacency lists, found {}", lists.len())));
        }
        let mut g = Graph::empty(n);
        let mut rows = vec![0u64; n];
        for (i, s) in lists.iter().enumerate() {
            for ch in s.chars() {
                if !ch.is_ascii_lowercase() || (ch as usize - 'a' as usize) >= n {
                    return Err(Error::parse(line_no, format!("letter '{ch}' out of range")));
                }
                let j = ch as usize - 'a' as usize;
                if j == i {
                    return Err(Error::parse(line_no, format!("self-loop at vertex {}", i + 1)));
                }
                rows[i] |= 1 << j;
            }
        }
        for i in 0..n {
            for j in bits(rows[i]) {
                if rows[j] >> i & 1 == 0 {
                    return Err(Error::parse(
                        line_no,
                        format!("asymmetric adjacency: {} lists {} but not vice versa", i + 1, j + 1),
                    ));
                }
                g.add_edge(i, j);
            }
        }
        out.push(g);
    }
    Ok(out)
}

/// Encodes a graph as one plantri ascii line (neighbours in increasing order).
pub fn to_plantri_ascii(g: &Graph) -> String {
    assert!(g.n() <= 26, "plantri ascii encoding supports at most 26 vertices");
    let lists: Vec<String> =
        (0..g.n()).map(|v| g.neighbors(v).into_iter().map(|u| (b'a' + u as u8) as char).collect()).collect();
    format!("{} {}", g.n(), lists.join(","))
}

/// Parses the edge-list format: header "n m", then m lines "i j" (1-based).
/// Lines starting with '#' are comments.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| Error::parse(1, "missing 'n m' header"))?;
    let nums: Vec<&str> = header.split_whitespace().collect();
    let parse_num = |line: usize, s: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::parse(line, format!("expected a nonnegative integer, found '{s}'")))
    };
    if nums.len() != 2 {
        return Err(Error::parse(hl, "header must be 'n m'"));
    }
    let n = parse_num(hl, nums[0])?;
    let m = parse_num(hl, nums[1])?;
    if n > MAX_VERTICES {
        return Err(Error::parse(hl, format!("{n} vertices exceeds the limit of {MAX_VERTICES}")));
    }
    let mut g = Graph::empty(n);
    let mut count = 0;
    for (ln, l) in lines {
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::parse(ln, "edge line must be 'i j'"));
        }
        let i = parse_num(ln, parts[0])?;
        let j = parse_num(ln, parts[1])?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::parse(ln, format!("vertex index out of range 1..={n}")));
        }
        if i == j {
            return Err(Error::parse(ln, format!("self-loop at vertex {i}")));
        }
        g.add_edge(i - 1, j - 1);
        count += 1;
    }
    if count != m {
        return Err(Error::parse(hl, format!("header declares {m} edges but {count} were listed")));
    }
    Ok(g)
}

/// Writes the edge-list format (1-based).
pub fn to_edge_list(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.edge_count());
    for &(i, j) in g.edges() {
        s.push_str(&format!("{} {}\n", i + 1, j + 1));
    }
    s
}

/// Lexicographically smallest `k`-clique (by sorted vertex list), if any.
pub fn find_clique(g: &Graph, k: usize) -> Option<Vec<usize>> {
    fn rec(g: &Graph, k: usize, cand: u64, cur: &mut Vec<usize>) -> bool {
        if cur.len() == k {
            return true;
        }
        if (cand.count_ones() as usize) < k - cur.len() {
            return false;
        }
        for v in bits(cand) {
            cur.push(v);
            let next = cand & g.adj[v] & !((2u64 << v) - 1);
            if rec(g, k, next, cur) {
                return true;
            }
            cur.pop();
        }
        false
    }
    if k == 0 {
        return Some(Vec::new());
    }
    let mut cur = Vec::with_capacity(k);
    rec(g, k, full_mask(g.n()), &mut cur).then_some(cur)
}

/// Every `k`-clique, each sorted, in lexicographic order.
pub fn all_cliques(g: &Graph, k: usize) -> Vec<Vec<usize>> {
    fn rec(g: &Graph, k: usize, cand: u64, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        if (cand.count_ones() as usize) < k - cur.len() {
            return;
        }
        for v in bits(cand) {
            cur.push(v);
            rec(g, k, cand & g.adj[v] & !((2u64 << v) - 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(g, k, full_mask(g.n()), &mut Vec::new(), &mut out);
    }
    out
}

/// Random (k−1)-tree on `n` vertices, reproducible from `seed`.
///
/// Starts from `K_k` on vertices `0..k`; each new vertex picks a random
/// existing k-clique, drops one random member and attaches to the rest.
pub fn generate_ktree(k: usize, n: usize, seed: u64) -> Result<(Graph, KTreeTrace)> {
    if k < 2 || n < k {
        return Err(Error::domain(format!("need n >= k >= 2, got k = {k}, n = {n}")));
    }
    if n > MAX_VERTICES {
        return Err(Error::domain(format!("{n} vertices exceeds the limit of {MAX_VERTICES}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::complete(k);
    g.n = n;
    g.adj.resize(n, 0);
    let mut cliques: Vec<Vec<usize>> = vec![(0..k).collect()];
    let mut attach = Vec::with_capacity(n - k);
    for v in k..n {
        let base = cliques.choose(&mut rng).expect("clique list is never empty");
        let drop = rng.random_range(0..k);
        let att: Vec<usize> = base.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &u)| u).collect();
        for &u in &att {
            g.add_edge(u, v);
        }
        let mut clique = att.clone();
        clique.push(v);
        cliques.push(clique);
        attach.push(att);
    }
    let trace = KTreeTrace { k, order: (0..n).collect(), attach };
    Ok((g, trace))
}

/// Recognises a (k−1)-tree by repeatedly deleting a vertex of degree k−1
/// whose neighbourhood is a clique; returns a construction trace.
pub fn is_ktree(g: &Graph, k: usize) -> Option<KTreeTrace> {
    let n = g.n();
    if k < 2 || n < k {
        return None;
    }
    let expected_edges = (2 * n - k) * (k - 1) / 2;
    if g.edge_count() != expected_edges {
        return None;
    }
    let mut alive = full_mask(n);
    let mut removed: Vec<(usize, Vec<usize>)> = Vec::with_capacity(n - k);
    while (alive.count_ones() as usize) > k {
        let v = bits(alive).find(|&v| {
            let nb = g.adj[v] & alive;
            nb.count_ones() as usize == k - 1 && g.is_clique(&bits(nb).collect::<Vec<_>>())
        })?;
        removed.push((v, bits(g.adj[v] & alive).collect()));
        alive &= !(1 << v);
    }
    let base: Vec<usize> = bits(alive).collect();
    if !g.is_clique(&base) {
        return None;
    }
    let mut order = base;
    let mut attach = Vec::with_capacity(removed.len());
    for (v, att) in removed.into_iter().rev() {
        order.push(v);
        attach.push(att);
    }
    Some(KTreeTrace { k, order, attach })
}

/// Exact edge and triangle counts.
pub fn count_edges_triangles(g: &Graph) -> (usize, usize) {
    let tri = g.edges().iter().map(|&(i, j)| bits(g.adj[i] & g.adj[j]).filter(|&w| w > j).count()).sum();
    (g.edge_count(), tri)
}

/// Vertex order for backtracking: repeatedly pick the vertex with most
/// neighbours among those already ordered (ties by degree, then index).
fn search_order(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut order = Vec::with_capacity(n);
    let mut placed = 0u64;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| placed >> v & 1 == 0)
            .max_by_key(|&v| ((g.adj[v] & placed).count_ones(), g.degree(v), std::cmp::Reverse(v)))
            .expect("unplaced vertex exists");
        order.push(v);
        placed |= 1 << v;
    }
    order
}

/// Backtracking over colorings with symmetry breaking (a vertex may open at
/// most one new color), so each vertex partition is visited exactly once.
/// `visit` returns `false` to stop the enumeration.
fn enumerate_partitions(g: &Graph, k: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    fn rec(
        g: &Graph,
        k: usize,
        order: &[usize],
        pos: usize,
        used: usize,
        col: &mut [usize],
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if pos == order.len() {
            return visit(col);
        }
        let v = order[pos];
        let limit = (used + 1).min(k);
        for c in 0..limit {
            if bits(g.adj[v]).any(|u| col[u] == c) {
                continue;
            }
            col[v] = c;
            if !rec(g, k, order, pos + 1, used.max(c + 1), col, visit) {
                return false;
            }
            col[v] = usize::MAX;
        }
        true
    }
    let order = search_order(g);
    let mut col = vec![usize::MAX; g.n()];
    rec(g, k, &order, 0, 0, &mut col, &mut visit);
}

/// Some proper `k`-coloring, if one exists.
pub fn find_coloring(g: &Graph, k: usize) -> Option<Coloring> {
    let mut found = None;
    enumerate_partitions(g, k, |col| {
        found = Some(col.to_vec());
        false
    });
    found.map(|c| Coloring { k, colors: c })
}

/// Exact chromatic number with a witness coloring.
pub fn chromatic_oracle(g: &Graph) -> (usize, Coloring) {
    if g.n() == 0 {
        return (0, Coloring { k: 0, colors: Vec::new() });
    }
    for k in 1..=g.n() {
        if let Some(c) = find_coloring(g, k) {
            return (k, c);
        }
    }
    unreachable!("n colors always suffice")
}

/// Number of proper `k`-colorings up to color permutation (distinct vertex
/// partitions into at most `k` independent sets).
pub fn count_colorings(g: &Graph, k: usize) -> u64 {
    let mut count = 0u64;
    enumerate_partitions(g, k, |_| {
        count += 1;
        true
    });
    count
}

/// Up to `limit` pairwise distinct colorings (as partitions), in search order.
pub fn enumerate_colorings(g: &Graph, k: usize, limit: usize) -> Vec<Coloring> {
    let mut out = Vec::new();
    if limit == 0 {
        return out;
    }
    enumerate_partitions(g, k, |col| {
        out.push(Coloring { k, colors: col.to_vec() });
        out.len() < limit
    });
    out
}

/// Random labels for testing: applies a permutation drawn from `rng`.
pub fn relabel<R: Rng>(g: &Graph, rng: &mut R) -> (Graph, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..g.n()).collect();
    perm.shuffle(rng);
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(i, j)| (perm[i], perm[j])).collect();
    (Graph::from_edges(g.n(), &edges).expect("relabeling preserves validity"), perm)
}
