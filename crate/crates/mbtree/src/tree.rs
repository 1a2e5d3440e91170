//! Finite unordered rooted trees stored in a dense arena.
//!
//! Child lists are storage order only. Equality and hashing go through the
//! canonical code, so two trees compare equal iff they are isomorphic as
//! unordered rooted trees.

use std::collections::VecDeque;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub struct Tree {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    root: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeStats {
    pub vertices: usize,
    pub leaves: usize,
    pub height: usize,
}

/// Parent-array record; `parents[root]` is `None`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub parents: Vec<Option<usize>>,
}

/// Sorted recursive parenthesization. A leaf is `()`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCode(pub Vec<u8>);

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(std::str::from_utf8(&self.0).expect("ascii code"))
    }
}

impl Default for Tree {
    fn default() -> Self {
        Tree::single()
    }
}

impl Tree {
    /// The tree reduced to its root.
    pub fn single() -> Tree {
        Tree { parent: vec![None], children: vec![Vec::new()], root: 0 }
    }

    /// Root with two leaf children.
    pub fn cherry() -> Tree {
        Tree::concatenate(&[Tree::single(), Tree::single()])
    }

    /// The branch `b_n`: a path with `n` edges hanging from the root.
    pub fn branch(n: usize) -> Tree {
        let mut parent = Vec::with_capacity(n + 1);
        parent.push(None);
        for i in 0..n {
            parent.push(Some(i));
        }
        Tree::from_parents_unchecked(parent, 0)
    }

    /// Star: a root with `k` leaf children.
    pub fn star(k: usize) -> Tree {
        let mut parent = vec![None];
        parent.extend(std::iter::repeat_n(Some(0), k));
        Tree::from_parents_unchecked(parent, 0)
    }

    pub(crate) fn from_parents_unchecked(parent: Vec<Option<NodeId>>, root: NodeId) -> Tree {
        let mut children = vec![Vec::new(); parent.len()];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(v);
            }
        }
        Tree { parent, children, root }
    }

    /// Build from a parent array, validating a single root and acyclicity.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Tree> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::Parse("empty parent array".into()));
        }
        let mut root = None;
        for (v, p) in parents.iter().enumerate() {
            match p {
                None if root.is_some() => return Err(Error::Parse("more than one root".into())),
                None => root = Some(v),
                Some(p) if *p >= n => return Err(Error::InvalidNode(*p)),
                Some(p) if *p == v => return Err(Error::Parse(format!("self loop at {v}"))),
                _ => {}
            }
        }
        let root = root.ok_or_else(|| Error::Parse("no root".into()))?;
        let t = Tree::from_parents_unchecked(parents.to_vec(), root);
        if t.bfs_order().len() != n {
            return Err(Error::Parse("parent array contains a cycle".into()));
        }
        Ok(t)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// `#t`, the number of vertices.
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        self.parent[u]
    }

    pub fn children(&self, u: NodeId) -> &[NodeId] {
        &self.children[u]
    }

    pub fn contains(&self, u: NodeId) -> bool {
        u < self.len()
    }

    pub fn is_leaf(&self, u: NodeId) -> bool {
        self.children[u].is_empty()
    }

    /// `#_L t`.
    pub fn n_leaves(&self) -> usize {
        self.children.iter().filter(|c| c.is_empty()).count()
    }

    pub fn bfs_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.len());
        let mut queue = VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            queue.extend(self.children[u].iter().copied());
        }
        order
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.len()];
        for u in self.bfs_order() {
            for &c in &self.children[u] {
                depth[c] = depth[u] + 1;
            }
        }
        depth
    }

    /// `|t|`, the height.
    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    pub fn stats(&self) -> TreeStats {
        TreeStats { vertices: self.len(), leaves: self.n_leaves(), height: self.height() }
    }

    /// Histogram of depths: entry `h` counts nodes at depth `h`.
    pub fn nodes_at_depth(&self) -> Vec<usize> {
        let depth = self.depths();
        let mut hist = vec![0; depth.iter().max().map_or(1, |h| h + 1)];
        for d in depth {
            hist[d] += 1;
        }
        hist
    }

    /// `⟦t_1, …, t_p⟧`: a new root whose children are the roots of `parts`.
    pub fn concatenate(parts: &[Tree]) -> Tree {
        let total = 1 + parts.iter().map(Tree::len).sum::<usize>();
        let mut parent = Vec::with_capacity(total);
        parent.push(None);
        for t in parts {
            let offset = parent.len();
            for (v, p) in t.parent.iter().enumerate() {
                parent.push(Some(match p {
                    Some(p) => p + offset,
                    None => {
                        debug_assert_eq!(v, t.root);
                        0
                    }
                }));
            }
        }
        Tree::from_parents_unchecked(parent, 0)
    }

    /// Graft `s` on `self` at `u`, identifying the root of `s` with `u`.
    pub fn graft(&self, u: NodeId, s: &Tree) -> Result<Tree> {
        if !self.contains(u) {
            return Err(Error::InvalidNode(u));
        }
        let mut parent = self.parent.clone();
        let offset = parent.len();
        // index map for s: root -> u, others appended in order
        let mut map = vec![0usize; s.len()];
        let mut next = offset;
        for v in 0..s.len() {
            if v == s.root {
                map[v] = u;
            } else {
                map[v] = next;
                next += 1;
            }
        }
        parent.resize(next, None);
        for v in 0..s.len() {
            if let Some(p) = s.parent[v] {
                parent[map[v]] = Some(map[p]);
            }
        }
        Ok(Tree::from_parents_unchecked(parent, self.root))
    }

    /// The subtree rooted at `u`, reindexed.
    pub fn subtree(&self, u: NodeId) -> Result<Tree> {
        if !self.contains(u) {
            return Err(Error::InvalidNode(u));
        }
        Ok(self.extract(u, usize::MAX))
    }

    /// `t|_R`: the nodes at depth at most `r`.
    pub fn ball(&self, r: usize) -> Tree {
        self.extract(self.root, r)
    }

    fn extract(&self, top: NodeId, r: usize) -> Tree {
        let mut parent = vec![None];
        let mut queue = VecDeque::from([(top, 0usize, 0usize)]);
        while let Some((u, new_u, d)) = queue.pop_front() {
            if d == r {
                continue;
            }
            for &c in &self.children[u] {
                let new_c = parent.len();
                parent.push(Some(new_u));
                queue.push_back((c, new_c, d + 1));
            }
        }
        Tree::from_parents_unchecked(parent, 0)
    }

    /// Per-node codes are built bottom-up and moved into their parent, so no
    /// recursion depth limit applies.
    pub fn canonical_code(&self) -> CanonicalCode {
        let order = self.bfs_order();
        let mut codes: Vec<Vec<u8>> = vec![Vec::new(); self.len()];
        for &u in order.iter().rev() {
            let mut kids: Vec<Vec<u8>> =
                self.children[u].iter().map(|&c| std::mem::take(&mut codes[c])).collect();
            kids.sort_unstable();
            let mut code = Vec::with_capacity(2 + kids.iter().map(Vec::len).sum::<usize>());
            code.push(b'(');
            for k in kids {
                code.extend_from_slice(&k);
            }
            code.push(b')');
            codes[u] = code;
        }
        CanonicalCode(std::mem::take(&mut codes[self.root]))
    }

    /// Parse the nested-parenthesis text form, e.g. `(()(()))`.
    pub fn from_code(text: &str) -> Result<Tree> {
        let bytes: Vec<u8> = text.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        let mut parent: Vec<Option<NodeId>> = Vec::new();
        let mut stack: Vec<NodeId> = Vec::new();
        let mut closed_root = false;
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                b'(' => {
                    if closed_root {
                        return Err(Error::Parse(format!("trailing input at byte {i}")));
                    }
                    let id = parent.len();
                    parent.push(stack.last().copied());
                    stack.push(id);
                }
                b')' => {
                    stack.pop().ok_or_else(|| Error::Parse(format!("unbalanced ')' at byte {i}")))?;
                    if stack.is_empty() {
                        closed_root = true;
                    }
                }
                other => {
                    return Err(Error::Parse(format!("unexpected byte {:?} at {i}", other as char)))
                }
            }
        }
        if !closed_root || !stack.is_empty() {
            return Err(Error::Parse("unbalanced parentheses".into()));
        }
        Ok(Tree::from_parents_unchecked(parent, 0))
    }

    pub fn to_record(&self) -> TreeRecord {
        TreeRecord { parents: self.parent.clone() }
    }

    pub fn from_record(rec: &TreeRecord) -> Result<Tree> {
        Tree::from_parents(&rec.parents)
    }

    /// Comma separated parent list with `-` for the root, e.g. `-,0,0,1`.
    pub fn to_parent_text(&self) -> String {
        self.parent
            .iter()
            .map(|p| p.map_or_else(|| "-".to_string(), |p| p.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_parent_text(text: &str) -> Result<Tree> {
        let parents = text
            .split(',')
            .map(|tok| match tok.trim() {
                "-" => Ok(None),
                tok => tok
                    .parse::<usize>()
                    .map(Some)
                    .map_err(|e| Error::Parse(format!("bad parent {tok:?}: {e}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Tree::from_parents(&parents)
    }

    pub fn isomorphic(&self, other: &Tree) -> bool {
        self.len() == other.len() && self.canonical_code() == other.canonical_code()
    }

    /// Sizes of the root subtrees, `Λ(t)`.
    pub fn first_split_vertices(&self) -> Partition {
        let sizes = self.subtree_sizes(|_| 1);
        Partition::from_finite(self.children[self.root].iter().map(|&c| sizes[c] as u64).collect())
    }

    /// Leaf counts of the root subtrees, `Λ^L(t)`.
    pub fn first_split_leaves(&self) -> Partition {
        let sizes = self.subtree_sizes(usize::from);
        Partition::from_finite(self.children[self.root].iter().map(|&c| sizes[c] as u64).collect())
    }

    fn subtree_sizes(&self, weight: impl Fn(bool) -> usize) -> Vec<usize> {
        let mut size = vec![0usize; self.len()];
        for u in self.bfs_order().into_iter().rev() {
            size[u] += weight(self.is_leaf(u));
            if let Some(p) = self.parent[u] {
                size[p] += size[u];
            }
        }
        size
    }
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.isomorphic(other)
    }
}

impl Eq for Tree {}

impl Hash for Tree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical_code().hash(state);
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical_code())
    }
}

/// `exp(-inf{R : t|_R ≠ s|_R})`, zero when the trees are isomorphic.
///
/// Ball disagreement is monotone in `R`, so the first disagreeing radius is
/// found by bisection.
pub fn d_loc(t: &Tree, s: &Tree) -> f64 {
    if t == s {
        return 0.0;
    }
    // balls agree at R = 0 and differ at R = max height + 1 at the latest
    let mut lo = 0usize;
    let mut hi = t.height().max(s.height()) + 1;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if t.ball(mid) == s.ball(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (-(hi as f64)).exp()
}
