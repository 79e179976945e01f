//! Domain types shared by every module: spins, rooted trees, couplings.

use std::fmt;

use crate::distributions::CouplingDistribution;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense vertex index; the root is always `0`.
pub type Vertex = usize;

/// A spin in `{+1, -1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpinValue {
    Plus,
    Minus,
}

impl SpinValue {
    pub const BOTH: [SpinValue; 2] = [SpinValue::Plus, SpinValue::Minus];

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(SpinValue::Plus),
            -1 => Ok(SpinValue::Minus),
            other => Err(Error::domain(format!("spin must be +1 or -1, got {other}"))),
        }
    }

    #[inline]
    pub fn sign(self) -> i8 {
        match self {
            SpinValue::Plus => 1,
            SpinValue::Minus => -1,
        }
    }

    #[inline]
    pub fn flip(self) -> Self {
        match self {
            SpinValue::Plus => SpinValue::Minus,
            SpinValue::Minus => SpinValue::Plus,
        }
    }

    #[inline]
    pub fn as_scalar<S: Scalar>(self) -> S {
        match self {
            SpinValue::Plus => S::one(),
            SpinValue::Minus => -S::one(),
        }
    }
}

impl fmt::Display for SpinValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpinValue::Plus => "+1",
            SpinValue::Minus => "-1",
        })
    }
}

/// A tree edge, identified by its child endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge(pub Vertex);

impl Edge {
    #[inline]
    pub fn child(self) -> Vertex {
        self.0
    }
}

/// A finite rooted tree over vertices `0..n` with root `0`.
///
/// Vertices are topologically ordered: `parent(v) < v` for every non-root `v`.
/// A forward scan therefore visits parents before children and a reverse scan
/// visits children before parents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<Vertex>,
    children: Vec<Vec<Vertex>>,
    depth: Vec<usize>,
    levels: Vec<Vec<Vertex>>,
}

impl RootedTree {
    /// The single-vertex tree.
    pub fn singleton() -> Self {
        TreeBuilder::new().build()
    }

    /// Builds a tree from the parent of each non-root vertex: `parents[i]` is the
    /// parent of vertex `i + 1`, and must be smaller than `i + 1`.
    pub fn from_parents(parents: &[Vertex]) -> Result<Self> {
        let mut builder = TreeBuilder::with_capacity(parents.len() + 1);
        for (i, &p) in parents.iter().enumerate() {
            let v = i + 1;
            if p >= v {
                return Err(Error::domain(format!(
                    "parent of vertex {v} is {p}; parents must precede their children"
                )));
            }
            builder.add_child(p)?;
        }
        Ok(builder.build())
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.parent.len() - 1
    }

    #[inline]
    pub fn root(&self) -> Vertex {
        0
    }

    #[inline]
    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        if v == 0 {
            None
        } else {
            self.parent.get(v).copied()
        }
    }

    #[inline]
    pub fn children(&self, v: Vertex) -> &[Vertex] {
        &self.children[v]
    }

    #[inline]
    pub fn depth(&self, v: Vertex) -> usize {
        self.depth[v]
    }

    /// Largest depth of any vertex.
    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    /// Vertices at depth exactly `h`, in index order; empty beyond the height.
    pub fn level_set(&self, h: usize) -> &[Vertex] {
        self.levels.get(h).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn level_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.levels.iter().map(Vec::len)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> {
        (1..self.vertex_count()).map(Edge)
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v < self.vertex_count()
    }

    fn check(&self, v: Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "vertex {v} not in tree with {} vertices",
                self.vertex_count()
            )))
        }
    }

    /// The deepest common ancestor of `u` and `v`.
    pub fn common_ancestor(&self, u: Vertex, v: Vertex) -> Result<Vertex> {
        self.check(u)?;
        self.check(v)?;
        let (mut a, mut b) = (u, v);
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        Ok(a)
    }

    /// Edges of the unique `u`–`w` path, ordered from `u` toward `w`.
    pub fn path_edges(&self, u: Vertex, w: Vertex) -> Result<Vec<Edge>> {
        let top = self.common_ancestor(u, w)?;
        let mut up = Vec::new();
        let mut a = u;
        while a != top {
            up.push(Edge(a));
            a = self.parent[a];
        }
        let mut down = Vec::new();
        let mut b = w;
        while b != top {
            down.push(Edge(b));
            b = self.parent[b];
        }
        up.extend(down.into_iter().rev());
        Ok(up)
    }

    /// Whether `a` is an ancestor of `v` (every vertex is its own ancestor).
    pub fn is_ancestor(&self, a: Vertex, mut v: Vertex) -> bool {
        if !self.contains(a) || !self.contains(v) {
            return false;
        }
        while self.depth[v] > self.depth[a] {
            v = self.parent[v];
        }
        v == a
    }
}

/// Incremental construction of a [`RootedTree`]; children keep insertion order.
#[derive(Debug, Clone, Default)]
pub struct TreeBuilder {
    parent: Vec<Vertex>,
    children: Vec<Vec<Vertex>>,
    depth: Vec<usize>,
}

impl TreeBuilder {
    /// A builder holding only the root.
    pub fn new() -> Self {
        Self::with_capacity(1)
    }

    pub fn with_capacity(n: usize) -> Self {
        let mut parent = Vec::with_capacity(n);
        let mut children = Vec::with_capacity(n);
        let mut depth = Vec::with_capacity(n);
        parent.push(0);
        children.push(Vec::new());
        depth.push(0);
        Self {
            parent,
            children,
            depth,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn add_child(&mut self, parent: Vertex) -> Result<Vertex> {
        if parent >= self.parent.len() {
            return Err(Error::domain(format!("unknown parent vertex {parent}")));
        }
        let v = self.parent.len();
        self.parent.push(parent);
        self.children.push(Vec::new());
        self.depth.push(self.depth[parent] + 1);
        self.children[parent].push(v);
        Ok(v)
    }

    pub fn build(self) -> RootedTree {
        let height = self.depth.iter().copied().max().unwrap_or(0);
        let mut levels = vec![Vec::new(); height + 1];
        for (v, &d) in self.depth.iter().enumerate() {
            levels[d].push(v);
        }
        RootedTree {
            parent: self.parent,
            children: self.children,
            depth: self.depth,
            levels,
        }
    }
}

/// Inverse temperature together with the coupling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsParams {
    beta: f64,
    phi: CouplingDistribution,
}

impl GibbsParams {
    pub fn new(beta: f64, phi: CouplingDistribution) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::domain(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(Self { beta, phi })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn phi(&self) -> &CouplingDistribution {
        &self.phi
    }
}

/// One finite coupling per edge, stored by child vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingAssignment<S> {
    // slot 0 (the root) is unused and held at zero
    values: Vec<S>,
}

impl<S: Scalar> CouplingAssignment<S> {
    /// Couplings for a tree with `edge_values.len() + 1` vertices; entry `i`
    /// belongs to the edge above vertex `i + 1`.
    pub fn from_edge_values(edge_values: Vec<S>) -> Result<Self> {
        if let Some(bad) = edge_values.iter().find(|j| !j.is_finite()) {
            return Err(Error::domain(format!("coupling must be finite, got {bad}")));
        }
        let mut values = Vec::with_capacity(edge_values.len() + 1);
        values.push(S::zero());
        values.extend(edge_values);
        Ok(Self { values })
    }

    /// The same coupling on every edge of `tree`.
    pub fn constant(tree: &RootedTree, j: S) -> Result<Self> {
        Self::from_edge_values(vec![j; tree.edge_count()])
    }

    pub(crate) fn from_dense_unchecked(values: Vec<S>) -> Self {
        Self { values }
    }

    /// Number of vertices of the tree these couplings belong to.
    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    /// The coupling on the edge above `child`; `None` for the root.
    pub fn get(&self, child: Vertex) -> Option<S> {
        if child == 0 {
            None
        } else {
            self.values.get(child).copied()
        }
    }

    #[inline]
    pub(crate) fn dense(&self) -> &[S] {
        &self.values
    }

    pub fn edge_values(&self) -> &[S] {
        &self.values[1..]
    }

    pub fn matches(&self, tree: &RootedTree) -> bool {
        self.values.len() == tree.vertex_count()
    }
}

/// A `±1` assignment on a subset of the vertices of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    spins: Vec<Option<SpinValue>>,
}

impl SpinConfig {
    /// The empty assignment over `n` vertices.
    pub fn empty(n: usize) -> Self {
        Self {
            spins: vec![None; n],
        }
    }

    /// A full assignment.
    pub fn full(spins: Vec<SpinValue>) -> Self {
        Self {
            spins: spins.into_iter().map(Some).collect(),
        }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (Vertex, SpinValue)>) -> Result<Self> {
        let mut cfg = Self::empty(n);
        for (v, s) in pairs {
            cfg.set(v, s)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, v: Vertex, s: SpinValue) -> Result<()> {
        let n = self.spins.len();
        let slot = self
            .spins
            .get_mut(v)
            .ok_or_else(|| Error::domain(format!("vertex {v} out of range for {n} vertices")))?;
        *slot = Some(s);
        Ok(())
    }

    pub fn clear(&mut self, v: Vertex) {
        if let Some(slot) = self.spins.get_mut(v) {
            *slot = None;
        }
    }

    #[inline]
    pub fn get(&self, v: Vertex) -> Option<SpinValue> {
        self.spins.get(v).copied().flatten()
    }

    /// Number of vertices of the underlying tree.
    pub fn vertex_count(&self) -> usize {
        self.spins.len()
    }

    pub fn support(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.spins
            .iter()
            .enumerate()
            .filter_map(|(v, s)| s.map(|_| v))
    }

    pub fn support_len(&self) -> usize {
        self.spins.iter().filter(|s| s.is_some()).count()
    }

    /// Keeps only the spins on `vertices`.
    pub fn restrict(&self, vertices: &[Vertex]) -> Self {
        let mut out = Self::empty(self.spins.len());
        for &v in vertices {
            if let Some(s) = self.get(v) {
                out.spins[v] = Some(s);
            }
        }
        out
    }

    pub fn covers(&self, vertices: &[Vertex]) -> bool {
        vertices.iter().all(|&v| self.get(v).is_some())
    }

    #[inline]
    pub(crate) fn raw(&self) -> &[Option<SpinValue>] {
        &self.spins
    }
}

/// A log-ratio `log(μ(+1)/μ(−1))`; `±∞` encodes a vertex pinned to `±1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogRatio<S>(pub S);

impl<S: Scalar> LogRatio<S> {
    pub fn pinned(s: SpinValue) -> Self {
        match s {
            SpinValue::Plus => LogRatio(S::infinity()),
            SpinValue::Minus => LogRatio(S::neg_infinity()),
        }
    }

    #[inline]
    pub fn value(self) -> S {
        self.0
    }

    pub fn is_pinned(self) -> bool {
        self.0.is_infinite()
    }

    /// `μ(+1)`, exact at `±∞`.
    pub fn prob_plus(self) -> S {
        S::logistic(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_h2() -> RootedTree {
        RootedTree::from_parents(&[0, 0, 1, 1, 2, 2]).unwrap()
    }

    /// Breadth-first search over the undirected tree, returning the path as
    /// child-keyed edges ordered from `u`.
    fn bfs_path(tree: &RootedTree, u: Vertex, w: Vertex) -> Vec<Edge> {
        let n = tree.vertex_count();
        let mut adj = vec![Vec::new(); n];
        for v in 1..n {
            let p = tree.parent(v).unwrap();
            adj[v].push(p);
            adj[p].push(v);
        }
        let mut prev = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::from([u]);
        prev[u] = u;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if prev[y] == usize::MAX {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        let mut verts = vec![w];
        while *verts.last().unwrap() != u {
            let x = *verts.last().unwrap();
            verts.push(prev[x]);
        }
        verts.reverse();
        verts
            .windows(2)
            .map(|p| {
                if tree.parent(p[1]) == Some(p[0]) {
                    Edge(p[1])
                } else {
                    Edge(p[0])
                }
            })
            .collect()
    }

    #[test]
    fn path_on_a_path_graph() {
        let t = RootedTree::from_parents(&[0, 1]).unwrap();
        assert_eq!(t.path_edges(0, 2).unwrap(), vec![Edge(1), Edge(2)]);
        assert_eq!(t.path_edges(2, 0).unwrap(), vec![Edge(2), Edge(1)]);
        assert!(t.path_edges(1, 1).unwrap().is_empty());
    }

    #[test]
    fn path_between_leaves_goes_through_root() {
        let t = binary_h2();
        let p = t.path_edges(3, 6).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p, bfs_path(&t, 3, 6));
        assert_eq!(p, vec![Edge(3), Edge(1), Edge(2), Edge(6)]);
    }

    #[test]
    fn common_ancestor_cases() {
        let t = binary_h2();
        assert_eq!(t.common_ancestor(4, 4).unwrap(), 4);
        assert_eq!(t.common_ancestor(3, 4).unwrap(), 1);
        assert_eq!(t.common_ancestor(0, 5).unwrap(), 0);
        assert_eq!(t.common_ancestor(3, 6).unwrap(), 0);
    }

    #[test]
    fn unknown_vertices_are_domain_errors() {
        let t = binary_h2();
        assert!(matches!(t.path_edges(0, 7), Err(Error::Domain(_))));
        assert!(matches!(t.common_ancestor(9, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn parents_must_precede_children() {
        assert!(RootedTree::from_parents(&[0, 2]).is_err());
        assert!(RootedTree::from_parents(&[1]).is_err());
    }

    #[test]
    fn depth_and_levels_are_consistent() {
        let t = binary_h2();
        assert_eq!(t.height(), 2);
        assert_eq!(t.level_set(0), &[0]);
        assert_eq!(t.level_set(2), &[3, 4, 5, 6]);
        assert!(t.level_set(3).is_empty());
        for v in 1..t.vertex_count() {
            let p = t.parent(v).unwrap();
            assert_eq!(t.depth(v), t.depth(p) + 1);
            assert!(t.children(p).contains(&v));
        }
    }

    #[test]
    fn spin_values() {
        assert_eq!(SpinValue::from_sign(1).unwrap(), SpinValue::Plus);
        assert_eq!(SpinValue::from_sign(-1).unwrap(), SpinValue::Minus);
        assert!(SpinValue::from_sign(0).is_err());
        assert_eq!(SpinValue::Plus.flip(), SpinValue::Minus);
        assert_eq!(SpinValue::Minus.as_scalar::<f64>(), -1.0);
    }

    #[test]
    fn couplings_reject_non_finite_values() {
        assert!(CouplingAssignment::from_edge_values(vec![1.0, f64::NAN]).is_err());
        let c = CouplingAssignment::from_edge_values(vec![0.5f64, -1.0]).unwrap();
        assert_eq!(c.get(0), None);
        assert_eq!(c.get(2), Some(-1.0));
        assert_eq!(c.vertex_count(), 3);
    }

    #[test]
    fn params_reject_bad_beta() {
        use crate::distributions::CouplingDistribution as D;
        assert!(GibbsParams::new(f64::INFINITY, D::Rademacher).is_err());
        assert!(GibbsParams::new(-1.0, D::Rademacher).is_err());
        assert!(GibbsParams::new(0.0, D::Rademacher).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_tree() -> impl Strategy<Value = RootedTree> {
            (1usize..40).prop_flat_map(|n| {
                let parents: Vec<BoxedStrategy<usize>> =
                    (1..n).map(|v| (0..v).boxed()).collect();
                parents.prop_map(|p| RootedTree::from_parents(&p).unwrap())
            })
        }

        proptest! {
            #[test]
            fn path_length_matches_depths(t in arb_tree(), a in 0usize..1000, b in 0usize..1000) {
                let n = t.vertex_count();
                let (u, v) = (a % n, b % n);
                let z = t.common_ancestor(u, v).unwrap();
                let len = t.path_edges(u, v).unwrap().len();
                prop_assert_eq!(len, t.depth(u) + t.depth(v) - 2 * t.depth(z));
                prop_assert_eq!(t.path_edges(u, v).unwrap(), bfs_path(&t, u, v));
                prop_assert!(t.is_ancestor(z, u) && t.is_ancestor(z, v));
            }

            #[test]
            fn same_level_path_is_twice_the_depth_gap(t in arb_tree(), a in 0usize..1000, b in 0usize..1000) {
                let h = t.height();
                let leaves = t.level_set(h);
                let (u, v) = (leaves[a % leaves.len()], leaves[b % leaves.len()]);
                let z = t.common_ancestor(u, v).unwrap();
                prop_assert_eq!(t.path_edges(u, v).unwrap().len(), 2 * (h - t.depth(z)));
            }

            #[test]
            fn level_sizes_sum_to_vertex_count(t in arb_tree()) {
                prop_assert_eq!(t.level_sizes().sum::<usize>(), t.vertex_count());
            }
        }
    }
}
