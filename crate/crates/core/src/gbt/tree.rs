use alloc::boxed::Box;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Dataset, GbtParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

/// A regression tree. Splits send `x < threshold` left and missing
/// values to `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        weight: f64,
        cover: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        default: Direction,
        gain: f64,
        cover: usize,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut n = self;
        loop {
            match n {
                Node::Leaf { weight, .. } => return *weight,
                Node::Split { feature, threshold, default, left, right, .. } => {
                    let v = x[*feature];
                    let go_left = if v.is_nan() { *default == Direction::Left } else { v < *threshold };
                    n = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn visit_splits(&self, f: &mut impl FnMut(usize, f64, f64)) {
        if let Node::Split { feature, gain, cover, left, right, .. } = self {
            f(*feature, *gain, *cover as f64);
            left.visit_splits(f);
            right.visit_splits(f);
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_splits(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.n_splits() + right.n_splits(),
        }
    }
}

/// Per-feature sample order by value, with missing samples set aside.
pub(super) struct FeatureIndex {
    sorted: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
    /// Column-major copy of the feature values.
    cols: Vec<Vec<f64>>,
}

impl FeatureIndex {
    pub fn new(data: &Dataset) -> Self {
        let p = data.n_features();
        let mut sorted = Vec::with_capacity(p);
        let mut missing = Vec::with_capacity(p);
        for f in 0..p {
            let (mut present, absent): (Vec<u32>, Vec<u32>) =
                (0..data.len() as u32).partition(|&i| !data.samples[i as usize].x[f].is_nan());
            present.sort_by(|&a, &b| data.samples[a as usize].x[f].total_cmp(&data.samples[b as usize].x[f]));
            sorted.push(present);
            missing.push(absent);
        }
        let cols = (0..p).map(|f| data.samples.iter().map(|s| s.x[f]).collect()).collect();
        Self { sorted, missing, cols }
    }
}

struct Ctx<'a> {
    cols: &'a [Vec<f64>],
    residuals: &'a [f64],
    scores: &'a [f64],
    params: &'a GbtParams,
    goes_left: Vec<bool>,
}

/// Rows of one node, plus each feature's sorted and missing rows restricted
/// to the node (stable partitions of the parent's lists).
struct NodeRows {
    idx: Vec<usize>,
    sorted: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    default: Direction,
    gain: f64,
}

pub(super) fn grow(data: &Dataset, index: &FeatureIndex, residuals: &[f64], scores: &[f64], params: &GbtParams) -> Node {
    let mut ctx = Ctx { cols: &index.cols, residuals, scores, params, goes_left: alloc::vec![false; data.len()] };
    let rows = NodeRows { idx: (0..data.len()).collect(), sorted: index.sorted.clone(), missing: index.missing.clone() };
    build(&mut ctx, rows, 0)
}

fn leaf(ctx: &Ctx, idx: &[usize]) -> Node {
    let r: Vec<f64> = idx.iter().map(|&i| ctx.residuals[i]).collect();
    let s: Vec<f64> = idx.iter().map(|&i| ctx.scores[i]).collect();
    Node::Leaf { weight: ctx.params.loss.leaf_weight(&r, &s), cover: idx.len() }
}

fn above(v: f64) -> f64 {
    let t = v + 1.0;
    if t > v {
        t
    } else {
        v.next_up()
    }
}

fn build(ctx: &mut Ctx, rows: NodeRows, depth: usize) -> Node {
    let msl = ctx.params.min_samples_leaf;
    if depth >= ctx.params.max_depth || rows.idx.len() < 2 * msl {
        return leaf(ctx, &rows.idx);
    }
    let best = best_split(ctx, &rows);
    let Some(c) = best else { return leaf(ctx, &rows.idx) };
    let cover = rows.idx.len();
    for &i in &rows.idx {
        let v = ctx.cols[c.feature][i];
        ctx.goes_left[i] = if v.is_nan() { c.default == Direction::Left } else { v < c.threshold };
    }
    let (l, r) = split_rows(&ctx.goes_left, rows);
    let left = build(ctx, l, depth + 1);
    let right = build(ctx, r, depth + 1);
    Node::Split {
        feature: c.feature,
        threshold: c.threshold,
        default: c.default,
        gain: c.gain,
        cover,
        left: Box::new(left),
        right: Box::new(right),
    }
}

fn split_rows(goes_left: &[bool], rows: NodeRows) -> (NodeRows, NodeRows) {
    let part = |v: Vec<u32>| -> (Vec<u32>, Vec<u32>) { v.into_iter().partition(|&i| goes_left[i as usize]) };
    let (il, ir) = rows.idx.into_iter().partition(|&i| goes_left[i]);
    let (mut sl, mut sr) = (Vec::with_capacity(rows.sorted.len()), Vec::with_capacity(rows.sorted.len()));
    for v in rows.sorted {
        let (a, b) = part(v);
        sl.push(a);
        sr.push(b);
    }
    let (mut ml, mut mr) = (Vec::with_capacity(rows.missing.len()), Vec::with_capacity(rows.missing.len()));
    for v in rows.missing {
        let (a, b) = part(v);
        ml.push(a);
        mr.push(b);
    }
    (NodeRows { idx: il, sorted: sl, missing: ml }, NodeRows { idx: ir, sorted: sr, missing: mr })
}

fn best_split(ctx: &Ctx, rows: &NodeRows) -> Option<Candidate> {
    let idx = &rows.idx;
    let msl = ctx.params.min_samples_leaf;
    let n = idx.len();
    let g: f64 = idx.iter().map(|&i| ctx.residuals[i]).sum();
    let ss: f64 = idx.iter().map(|&i| ctx.residuals[i] * ctx.residuals[i]).sum();
    let parent = g * g / n as f64;
    let tol = 1e-12 * ss.max(1.0);
    let mut best: Option<Candidate> = None;
    let mut consider = |cand: Candidate| {
        if best.is_none_or(|b| cand.gain > b.gain) {
            best = Some(cand);
        }
    };
    let mut vals: Vec<(f64, f64)> = Vec::new();
    for f in 0..ctx.cols.len() {
        let (mut gm, mut nm) = (0.0, 0usize);
        for &i in &rows.missing[f] {
            gm += ctx.residuals[i as usize];
            nm += 1;
        }
        vals.clear();
        let col = &ctx.cols[f];
        vals.extend(rows.sorted[f].iter().map(|&i| (col[i as usize], ctx.residuals[i as usize])));
        if vals.is_empty() {
            continue;
        }
        let gain = |gl: f64, nl: usize, gr: f64, nr: usize| -> Option<f64> {
            (nl >= msl && nr >= msl).then(|| gl * gl / nl as f64 + gr * gr / nr as f64 - parent)
        };
        let (mut gl, mut nl) = (0.0, 0usize);
        for k in 0..vals.len() - 1 {
            gl += vals[k].1;
            nl += 1;
            let (a, b) = (vals[k].0, vals[k + 1].0);
            if b <= a {
                continue;
            }
            let mid = a + (b - a) / 2.0;
            let threshold = if mid > a { mid } else { b };
            let gr = g - gl - gm;
            let nr = n - nl - nm;
            if nm == 0 {
                let default = if nl >= nr { Direction::Left } else { Direction::Right };
                if let Some(gain) = gain(gl, nl, gr, nr) {
                    consider(Candidate { feature: f, threshold, default, gain });
                }
            } else {
                if let Some(gain) = gain(gl, nl, gr + gm, nr + nm) {
                    consider(Candidate { feature: f, threshold, default: Direction::Right, gain });
                }
                if let Some(gain) = gain(gl + gm, nl + nm, gr, nr) {
                    consider(Candidate { feature: f, threshold, default: Direction::Left, gain });
                }
            }
        }
        if nm > 0 {
            let vmax = vals[vals.len() - 1].0;
            if let Some(gain) = gain(g - gm, n - nm, gm, nm) {
                consider(Candidate { feature: f, threshold: above(vmax), default: Direction::Right, gain });
            }
        }
    }
    best.filter(|b| b.gain > tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::{fit, GbtParams};
    use alloc::vec;

    #[test]
    fn missing_goes_with_high_targets() {
        let nan = f64::NAN;
        let mut d = Dataset::new(vec!["x".into()], "y");
        for (x, y) in [(1.0, 0.0), (2.0, 0.0), (3.0, 10.0), (4.0, 10.0), (nan, 10.0), (nan, 10.0)] {
            d.push(vec![x], y);
        }
        let p = GbtParams { num_trees: 1, max_depth: 1, learning_rate: 1.0, min_samples_leaf: 1, ..Default::default() };
        let m = fit(&d, &p).unwrap();
        let Node::Split { default, threshold, .. } = &m.trees[0] else { panic!("expected a split") };
        assert_eq!(*default, Direction::Right);
        assert_eq!(*threshold, 2.5);
        assert_eq!(m.predict(&[nan]).unwrap(), 10.0);
    }

    #[test]
    fn present_vs_missing_split() {
        let nan = f64::NAN;
        let mut d = Dataset::new(vec!["x".into()], "y");
        for (x, y) in [(1.0, 0.0), (1.0, 0.0), (nan, 5.0), (nan, 5.0)] {
            d.push(vec![x], y);
        }
        let p = GbtParams { num_trees: 1, max_depth: 1, learning_rate: 1.0, min_samples_leaf: 1, ..Default::default() };
        let m = fit(&d, &p).unwrap();
        let Node::Split { threshold, default, .. } = &m.trees[0] else { panic!("expected a split") };
        assert_eq!((*threshold, *default), (2.0, Direction::Right));
        assert_eq!(m.rmse(&d).unwrap(), 0.0);
    }

    #[test]
    fn min_samples_leaf_is_enforced() {
        let mut d = Dataset::new(vec!["x".into()], "y");
        for i in 0..7 {
            d.push(vec![i as f64], if i == 0 { 100.0 } else { 0.0 });
        }
        let p = GbtParams { num_trees: 1, max_depth: 3, learning_rate: 1.0, min_samples_leaf: 3, ..Default::default() };
        let m = fit(&d, &p).unwrap();
        fn check(n: &Node, msl: usize) {
            match n {
                Node::Leaf { cover, .. } => assert!(*cover >= msl),
                Node::Split { left, right, .. } => {
                    check(left, msl);
                    check(right, msl);
                }
            }
        }
        check(&m.trees[0], 3);
        assert!(m.trees[0].depth() <= 3);
    }
}
