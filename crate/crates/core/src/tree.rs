//! Depth-first traversal of the `A`-ary tree of symbol sequences with
//! pruning, shared by the exact series pipeline and the numeric oracle.
//!
//! The tree is cut at a fixed split depth that depends only on the alphabet
//! size and the horizon. Subtrees below the cut are walked in parallel and
//! their accumulators are combined by a fixed pairwise reduction in
//! lexicographic order, so results do not depend on the thread count.

use rayon::prelude::*;

/// A sequence tree: nodes are prefixes, leaves are full sequences.
pub(crate) trait SequenceTree: Sync {
    type Node: Send + Sync;
    type Leaf;

    fn symbols(&self) -> usize;

    /// Extends a prefix by `symbol`; `None` prunes the whole branch.
    fn child(&self, node: &Self::Node, symbol: usize) -> Option<Self::Node>;

    /// Closes a prefix with its final symbol; `None` drops the sequence.
    fn leaf(&self, node: &Self::Node, symbol: usize) -> Option<Self::Leaf>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WalkStats {
    /// Sequences handed to the visitor.
    pub sequences: u64,
    /// Branches cut (prefixes or final symbols).
    pub pruned: u64,
}

impl WalkStats {
    fn merge(self, other: Self) -> Self {
        Self {
            sequences: self.sequences + other.sequences,
            pruned: self.pruned + other.pruned,
        }
    }
}

/// Frontier target: enough subtrees to keep a thread pool busy.
const MIN_BLOCKS: usize = 64;

/// Visits every surviving sequence of `prefix_len + 1` symbols below each
/// root, in lexicographic order within a root and root order across roots.
pub(crate) fn walk<T, A, I, V, M>(
    tree: &T,
    roots: Vec<T::Node>,
    prefix_len: usize,
    init: I,
    visit: V,
    merge: M,
) -> (A, WalkStats)
where
    T: SequenceTree,
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[usize], T::Leaf) + Sync,
    M: Fn(A, A) -> A,
{
    let symbols = tree.symbols().max(1);
    let mut split = 0;
    while split < prefix_len && symbols.pow(split as u32) < MIN_BLOCKS {
        split += 1;
    }

    let mut stats = WalkStats::default();
    let mut frontier: Vec<(Vec<usize>, T::Node)> =
        roots.into_iter().map(|r| (Vec::new(), r)).collect();
    for _ in 0..split {
        let mut next = Vec::with_capacity(frontier.len() * symbols);
        for (prefix, node) in frontier {
            for a in 0..symbols {
                match tree.child(&node, a) {
                    Some(c) => {
                        let mut p = prefix.clone();
                        p.push(a);
                        next.push((p, c));
                    }
                    None => stats.pruned += 1,
                }
            }
        }
        frontier = next;
    }

    let blocks: Vec<(A, WalkStats)> = frontier
        .into_par_iter()
        .map(|(mut prefix, node)| {
            let mut acc = init();
            let mut local = WalkStats::default();
            dfs(tree, &node, &mut prefix, prefix_len, &mut acc, &visit, &mut local);
            (acc, local)
        })
        .collect();

    let mut level = blocks;
    if level.is_empty() {
        return (init(), stats);
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some((a, sa)) = it.next() {
            match it.next() {
                Some((b, sb)) => next.push((merge(a, b), sa.merge(sb))),
                None => next.push((a, sa)),
            }
        }
        level = next;
    }
    let (acc, s) = level.pop().expect("non-empty");
    (acc, stats.merge(s))
}

fn dfs<T, A, V>(
    tree: &T,
    node: &T::Node,
    seq: &mut Vec<usize>,
    prefix_len: usize,
    acc: &mut A,
    visit: &V,
    stats: &mut WalkStats,
) where
    T: SequenceTree,
    V: Fn(&mut A, &[usize], T::Leaf),
{
    let symbols = tree.symbols();
    if seq.len() == prefix_len {
        for a in 0..symbols {
            match tree.leaf(node, a) {
                Some(leaf) => {
                    seq.push(a);
                    visit(acc, seq, leaf);
                    seq.pop();
                    stats.sequences += 1;
                }
                None => stats.pruned += 1,
            }
        }
        return;
    }
    for a in 0..symbols {
        match tree.child(node, a) {
            Some(c) => {
                seq.push(a);
                dfs(tree, &c, seq, prefix_len, acc, visit, stats);
                seq.pop();
            }
            None => stats.pruned += 1,
        }
    }
}
