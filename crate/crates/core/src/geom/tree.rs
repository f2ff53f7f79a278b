use std::collections::HashMap;

use super::PointSet;
use crate::error::{invalid, Result};

/// Subdivision stops at this depth even if a box still holds too many
/// points, which only happens for (near-)coincident points.
pub const MAX_TREE_DEPTH: usize = 48;

const ROOT_PADDING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub center: [f64; 3],
    pub half: f64,
    /// Tree-order index range `[lo, hi)`.
    pub lo: usize,
    pub hi: usize,
    /// Root has depth 0.
    pub depth: usize,
    pub parent: Option<usize>,
    /// Nonempty children in Morton order.
    pub children: Vec<usize>,
}

impl Node {
    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.lo..self.hi
    }
}

/// Adaptive 2^d-ary tree with contiguous per-node index ranges.
///
/// Node ids are assigned breadth first, so nodes of equal depth have
/// consecutive ids sorted by `lo`.
#[derive(Clone, Debug)]
pub struct OrthTree {
    dim: usize,
    nodes: Vec<Node>,
    perm: Vec<usize>,
    max_leaf_size: usize,
    max_depth: usize,
    by_depth: Vec<Vec<usize>>,
    grid: Vec<HashMap<[i64; 3], usize>>,
    root_lo: [f64; 3],
}

pub fn build_tree(points: &PointSet, max_leaf_size: usize) -> Result<OrthTree> {
    if max_leaf_size == 0 {
        return invalid("max_leaf_size must be at least 1");
    }
    if points.is_empty() {
        return invalid("empty point set");
    }
    let d = points.dim();
    let (lo, hi) = points.bounds();
    let mut center = [0.0; 3];
    let mut half: f64 = 0.0;
    for a in 0..d {
        center[a] = 0.5 * (lo[a] + hi[a]);
        half = half.max(0.5 * (hi[a] - lo[a]));
    }
    let scale = half.max(center.iter().fold(0.0f64, |m, c| m.max(c.abs())));
    half += ROOT_PADDING * scale.max(f64::MIN_POSITIVE);
    if half == 0.0 {
        half = 0.5;
    }

    let n = points.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut nodes = vec![Node {
        center,
        half,
        lo: 0,
        hi: n,
        depth: 0,
        parent: None,
        children: Vec::new(),
    }];
    let nchild = 1usize << d;
    let mut codes = Vec::new();
    let mut scratch = Vec::new();
    let mut cur = 0;
    while cur < nodes.len() {
        let node = nodes[cur].clone();
        if node.len() <= max_leaf_size || node.depth >= MAX_TREE_DEPTH {
            cur += 1;
            continue;
        }
        // Stable counting sort of the node's points by child code.
        codes.clear();
        let mut counts = vec![0usize; nchild];
        for &p in &perm[node.range()] {
            let x = points.point(p);
            let mut code = 0;
            for a in 0..d {
                if x[a] >= node.center[a] {
                    code |= 1 << a;
                }
            }
            codes.push(code);
            counts[code] += 1;
        }
        let mut start = vec![0usize; nchild + 1];
        for c in 0..nchild {
            start[c + 1] = start[c] + counts[c];
        }
        scratch.clear();
        scratch.resize(node.len(), 0);
        let mut fill = start.clone();
        for (k, &p) in perm[node.range()].iter().enumerate() {
            let c = codes[k];
            scratch[fill[c]] = p;
            fill[c] += 1;
        }
        perm[node.range()].copy_from_slice(&scratch);

        let h = 0.5 * node.half;
        for c in 0..nchild {
            if counts[c] == 0 {
                continue;
            }
            let mut cc = node.center;
            for a in 0..d {
                cc[a] += if c >> a & 1 == 1 { h } else { -h };
            }
            let id = nodes.len();
            nodes.push(Node {
                center: cc,
                half: h,
                lo: node.lo + start[c],
                hi: node.lo + start[c + 1],
                depth: node.depth + 1,
                parent: Some(cur),
                children: Vec::new(),
            });
            nodes[cur].children.push(id);
        }
        cur += 1;
    }

    let max_depth = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
    let mut by_depth = vec![Vec::new(); max_depth + 1];
    for (i, nd) in nodes.iter().enumerate() {
        by_depth[nd.depth].push(i);
    }
    let mut root_lo = [0.0; 3];
    for a in 0..d {
        root_lo[a] = center[a] - half;
    }
    let mut tree = OrthTree {
        dim: d,
        nodes,
        perm,
        max_leaf_size,
        max_depth,
        by_depth,
        grid: Vec::new(),
        root_lo,
    };
    tree.grid = (0..=max_depth)
        .map(|depth| tree.by_depth[depth].iter().map(|&i| (tree.grid_coord(i), i)).collect())
        .collect();
    Ok(tree)
}

impl OrthTree {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_points(&self) -> usize {
        self.perm.len()
    }

    /// `perm[t]` is the original index of the point at tree position `t`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn max_leaf_size(&self) -> usize {
        self.max_leaf_size
    }

    /// Depth of the deepest leaf (root = 0). This is the number of
    /// compression levels.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Number of levels in the hierarchy, counting the root.
    pub fn depth(&self) -> usize {
        self.max_depth + 1
    }

    pub fn nodes_at_depth(&self, depth: usize) -> &[usize] {
        self.by_depth.get(depth).map_or(&[], |v| v.as_slice())
    }

    /// Leaves in depth-first order (ascending `lo`).
    pub fn leaves(&self) -> Vec<usize> {
        let mut l: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect();
        l.sort_by_key(|&i| self.nodes[i].lo);
        l
    }

    /// Nodes of level `l`, with level 1 the finest and level `depth()` the
    /// root. A level holds the nodes at depth `depth() - l` together with all
    /// shallower leaves, so every level partitions the index set. Sorted by
    /// `lo`.
    pub fn level(&self, l: usize) -> Vec<usize> {
        assert!(l >= 1 && l <= self.depth(), "level {l} out of range");
        let target = self.depth() - l;
        let mut out: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| {
                let nd = &self.nodes[i];
                nd.depth == target || (nd.depth < target && nd.is_leaf())
            })
            .collect();
        out.sort_by_key(|&i| self.nodes[i].lo);
        out
    }

    /// All levels, finest first.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        (1..=self.depth()).map(|l| self.level(l)).collect()
    }

    /// Original indices owned by a node.
    pub fn indices(&self, id: usize) -> &[usize] {
        &self.perm[self.nodes[id].range()]
    }

    fn grid_coord(&self, id: usize) -> [i64; 3] {
        let nd = &self.nodes[id];
        let w = 2.0 * nd.half;
        let mut g = [0i64; 3];
        for a in 0..self.dim {
            g[a] = ((nd.center[a] - self.root_lo[a]) / w).floor() as i64;
        }
        g
    }

    /// Same-depth nodes whose boxes touch `id`'s box, ascending by id.
    pub fn neighbors(&self, id: usize) -> Result<Vec<usize>> {
        if id >= self.nodes.len() {
            return invalid(format!("node {id} does not exist ({} nodes)", self.nodes.len()));
        }
        let depth = self.nodes[id].depth;
        let g = self.grid_coord(id);
        let grid = &self.grid[depth];
        let mut out = Vec::new();
        let r = |a: usize| if a < self.dim { -1..=1 } else { 0..=0 };
        for dx in r(0) {
            for dy in r(1) {
                for dz in r(2) {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    if let Some(&j) = grid.get(&[g[0] + dx, g[1] + dy, g[2] + dz]) {
                        out.push(j);
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Whether original point `p` lies in the closed box of node `id`.
    pub fn contains(&self, id: usize, p: &[f64]) -> bool {
        let nd = &self.nodes[id];
        (0..self.dim).all(|a| (p[a] - nd.center[a]).abs() <= nd.half)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;

    fn check_invariants(pts: &PointSet, t: &OrthTree) {
        let n = pts.len();
        let mut sorted = t.perm().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        for (i, nd) in t.nodes().iter().enumerate() {
            assert!(!nd.is_empty());
            if !nd.is_leaf() {
                let mut at = nd.lo;
                for &c in &nd.children {
                    assert_eq!(t.node(c).lo, at);
                    at = t.node(c).hi;
                }
                assert_eq!(at, nd.hi);
            } else {
                assert!(nd.len() <= t.max_leaf_size());
            }
            for &p in t.indices(i) {
                assert!(t.contains(i, pts.point(p)));
            }
        }
        for lvl in t.levels() {
            let mut at = 0;
            for &i in &lvl {
                assert_eq!(t.node(i).lo, at);
                at = t.node(i).hi;
            }
            assert_eq!(at, n);
        }
    }

    #[test]
    fn unit_square_corners() {
        let p = PointSet::from_points(2, &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let t = build_tree(&p, 1).unwrap();
        assert_eq!(t.depth(), 2);
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 4);
        assert!(leaves.iter().all(|&l| t.node(l).len() == 1));
        // Morton order: (lo,lo), (hi,lo), (lo,hi), (hi,hi).
        assert_eq!(t.perm(), &[0, 1, 2, 3]);
        check_invariants(&p, &t);
    }

    #[test]
    fn empty_quadrants_are_pruned() {
        let mut pts = vec![[0.0, 0.0], [1.0, 1.0]];
        for i in 0..10 {
            pts.push([0.01 * i as f64, 0.02]);
        }
        let p = PointSet::from_points(2, &pts).unwrap();
        let t = build_tree(&p, 3).unwrap();
        check_invariants(&p, &t);
        // Only the lower-left and upper-right quadrants hold points.
        assert_eq!(t.node(0).children.len(), 2);
    }

    #[test]
    fn uniform_square_leaf_count() {
        let p = shapes::square(8192, 1);
        let t = build_tree(&p, 64).unwrap();
        let nl = t.leaves().len();
        assert!((128..=256).contains(&nl), "{nl} leaves");
        check_invariants(&p, &t);
    }

    #[test]
    fn grid_neighbors() {
        // 4x4 grid of cell centers, one point per leaf.
        let mut pts = Vec::new();
        for j in 0..4 {
            for i in 0..4 {
                pts.push([i as f64 + 0.5, j as f64 + 0.5]);
            }
        }
        // Pin the root box to [0, 4]^2.
        pts.push([0.0, 0.0]);
        pts.push([4.0, 4.0]);
        let p = PointSet::from_points(2, &pts).unwrap();
        let t = build_tree(&p, 2).unwrap();
        let d2 = t.nodes_at_depth(2);
        assert_eq!(d2.len(), 16);
        let counts: Vec<usize> = d2.iter().map(|&i| t.neighbors(i).unwrap().len()).collect();
        assert_eq!(counts.iter().filter(|&&c| c == 3).count(), 4);
        assert_eq!(counts.iter().filter(|&&c| c == 8).count(), 4);
        assert_eq!(counts.iter().filter(|&&c| c == 5).count(), 8);
        assert!(t.neighbors(t.num_nodes()).is_err());
    }

    #[test]
    fn pruned_neighbor_absent() {
        // Points only in the bottom-left and top-right quadrants.
        let p = PointSet::from_points(2, &[[0.0, 0.0], [0.1, 0.1], [1.0, 1.0], [0.9, 0.9]]).unwrap();
        let t = build_tree(&p, 2).unwrap();
        let kids = &t.node(0).children;
        assert_eq!(kids.len(), 2);
        // The two quadrants touch at the center point, so they are neighbors,
        // and the missing quadrants are not reported.
        assert_eq!(t.neighbors(kids[0]).unwrap(), vec![kids[1]]);
    }

    #[test]
    fn coincident_points_stop_at_depth_cap() {
        let p = PointSet::from_points(2, &[[0.5, 0.5]; 5]).unwrap();
        let t = build_tree(&p, 1).unwrap();
        assert_eq!(t.max_depth(), MAX_TREE_DEPTH);
        assert_eq!(t.leaves().len(), 1);
        let mut pts = vec![[0.0, 0.0], [1.0, 1.0]];
        pts.extend([[0.3, 0.3]; 4]);
        let p = PointSet::from_points(2, &pts).unwrap();
        let t = build_tree(&p, 1).unwrap();
        assert!(t.max_depth() <= MAX_TREE_DEPTH);
    }

    #[test]
    fn errors() {
        let p = shapes::circle(10);
        assert!(build_tree(&p, 0).is_err());
    }
}
