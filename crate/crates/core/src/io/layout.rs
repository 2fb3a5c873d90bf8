//! Deterministic plot coordinates for a network.
//!
//! Every tree gets a horizontal interval as wide as its node count, trees
//! side by side with a unit gap in root order. Within a tree, children are
//! ordered by subtree size (larger first, then id) and split the parent's
//! interval in proportion to their sizes. The side view plots the interval
//! midpoint against fitness. The top view wraps each tree's interval around
//! a circle centered over it, with the radius growing with depth.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::graph::NbnGraph;
use crate::model::SolutionId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutPoint {
    pub id: SolutionId,
    /// Top view coordinates.
    pub x: f64,
    pub z: f64,
    /// Side view horizontal coordinate.
    pub side_x: f64,
    /// Side view vertical coordinate, the fitness.
    pub height: f64,
    pub parent: Option<SolutionId>,
}

pub fn layout_2d(graph: &NbnGraph) -> Vec<LayoutPoint> {
    let n = graph.len();
    let (offsets, mut children) = graph.children();
    let kids = |v: usize| offsets[v]..offsets[v + 1];

    // Subtree sizes, children before parents via reverse preorder.
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<usize> = graph.roots().iter().rev().map(|&r| r as usize).collect();
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(children[kids(v)].iter().map(|&c| c as usize));
    }
    let mut size = vec![1usize; n];
    for &v in order.iter().rev() {
        if let Some(p) = graph.parent(v as SolutionId) {
            size[p as usize] += size[v];
        }
    }
    for v in 0..n {
        children[kids(v)].sort_by(|&a, &b| size[b as usize].cmp(&size[a as usize]).then(a.cmp(&b)));
    }

    let mut lo = vec![0f64; n];
    let mut depth = vec![0usize; n];
    let mut tree = vec![0usize; n];
    let mut cursor = 0f64;
    let mut stack = Vec::new();
    for &r in graph.roots() {
        let r = r as usize;
        lo[r] = cursor;
        tree[r] = r;
        cursor += size[r] as f64 + 1.0;
        stack.push(r);
        while let Some(v) = stack.pop() {
            // A node sits at the start of its own interval slot of width 1;
            // children fill the rest.
            let mut next = lo[v] + 1.0;
            for &c in &children[kids(v)] {
                let c = c as usize;
                lo[c] = next;
                depth[c] = depth[v] + 1;
                tree[c] = tree[v];
                next += size[c] as f64;
                stack.push(c);
            }
        }
    }
    let mut max_depth = vec![0usize; n];
    for v in 0..n {
        let t = tree[v];
        max_depth[t] = max_depth[t].max(depth[v]);
    }

    (0..n)
        .map(|v| {
            let t = tree[v];
            let width = size[t] as f64;
            let side_x = lo[v] + size[v] as f64 / 2.0;
            let center = lo[t] + width / 2.0;
            let (x, z) = if depth[v] == 0 {
                (center, 0.0)
            } else {
                let angle = TAU * (side_x - lo[t]) / width;
                let radius = width / 2.0 * depth[v] as f64 / max_depth[t] as f64;
                (center + radius * angle.cos(), radius * angle.sin())
            };
            LayoutPoint {
                id: v as SolutionId,
                x,
                z,
                side_x,
                height: graph.fitness(v as SolutionId),
                parent: graph.parent(v as SolutionId),
            }
        })
        .collect()
}
