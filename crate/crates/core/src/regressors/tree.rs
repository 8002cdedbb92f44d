//! CART regression trees.
//!
//! Splits minimize the summed squared error of the two children (equivalently
//! the sample-weighted child variance). Leaves predict the mean of their
//! training targets. Growth is best-first when a leaf budget is given and
//! breadth-first otherwise.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;
use rand::Rng;
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted regression tree over `width` input columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    width: usize,
    /// Per-feature sum of `(node weight / total weight) * impurity decrease`.
    importance: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub max_leaves: Option<usize>,
    /// Random candidate features per split; `None` means all.
    pub max_features: Option<usize>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Unnormalized mean-decrease-in-impurity contributions per feature.
    pub fn impurity_importance(&self) -> &[f64] {
        &self.importance
    }

    /// Fits a tree on the rows `samples` of `x` (repeats allowed, as in a
    /// bootstrap draw). `rng` is only consulted when `max_features` is set.
    pub(crate) fn grow<R: Rng>(
        x: ArrayView2<'_, f64>,
        y: &[f64],
        samples: Vec<usize>,
        params: TreeParams,
        rng: &mut R,
    ) -> Self {
        Grower {
            x,
            y,
            params,
            total: samples.len() as f64,
            pairs: Vec::with_capacity(samples.len()),
            importance: vec![0.0; x.ncols()],
        }
        .run(samples, rng)
    }
}

struct Pending {
    node: usize,
    depth: usize,
    samples: Vec<usize>,
    split: Option<SplitChoice>,
}

#[derive(Clone, Copy)]
struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    params: TreeParams,
    total: f64,
    pairs: Vec<(f64, f64)>,
    importance: Vec<f64>,
}

impl Grower<'_> {
    fn run<R: Rng>(mut self, samples: Vec<usize>, rng: &mut R) -> RegressionTree {
        let mut nodes = vec![Node::Leaf {
            value: self.mean(&samples),
        }];
        let split = self.find_split(&samples, 0, rng);
        let mut queue = VecDeque::from([Pending {
            node: 0,
            depth: 0,
            samples,
            split,
        }]);
        let mut leaves = 1usize;
        let max_leaves = self.params.max_leaves.unwrap_or(usize::MAX);

        while leaves < max_leaves {
            let next = if self.params.max_leaves.is_some() {
                // Best-first: largest gain, earliest node on ties.
                let best = queue
                    .iter()
                    .enumerate()
                    .filter_map(|(i, p)| p.split.map(|s| (i, s.gain)))
                    .fold(None::<(usize, f64)>, |acc, (i, g)| match acc {
                        Some((_, bg)) if bg >= g => acc,
                        _ => Some((i, g)),
                    });
                match best {
                    Some((i, _)) => queue.remove(i),
                    None => None,
                }
            } else {
                queue.pop_front()
            };
            let Some(pending) = next else { break };
            let Some(choice) = pending.split else { continue };

            let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = pending
                .samples
                .iter()
                .partition(|&&i| self.x[[i, choice.feature]] <= choice.threshold);
            self.importance[choice.feature] += choice.gain / self.total;

            let left = nodes.len();
            nodes.push(Node::Leaf {
                value: self.mean(&left_samples),
            });
            nodes.push(Node::Leaf {
                value: self.mean(&right_samples),
            });
            nodes[pending.node] = Node::Split {
                feature: choice.feature,
                threshold: choice.threshold,
                left,
                right: left + 1,
            };
            leaves += 1;

            let depth = pending.depth + 1;
            for (node, samples) in [(left, left_samples), (left + 1, right_samples)] {
                let split = self.find_split(&samples, depth, rng);
                queue.push_back(Pending {
                    node,
                    depth,
                    samples,
                    split,
                });
            }
        }

        RegressionTree {
            nodes,
            width: self.x.ncols(),
            importance: self.importance,
        }
    }

    fn mean(&self, samples: &[usize]) -> f64 {
        samples.iter().map(|&i| self.y[i]).sum::<f64>() / samples.len() as f64
    }

    fn find_split<R: Rng>(&mut self, samples: &[usize], depth: usize, rng: &mut R) -> Option<SplitChoice> {
        if samples.len() < 2 || self.params.max_depth.is_some_and(|d| depth >= d) {
            return None;
        }
        let first = self.y[samples[0]];
        if samples.iter().all(|&i| self.y[i] == first) {
            return None;
        }
        let w = self.x.ncols();
        let (sum, sumsq) = samples.iter().fold((0.0, 0.0), |(s, q), &i| {
            let v = self.y[i];
            (s + v, q + v * v)
        });
        let n = samples.len() as f64;
        let parent_sse = (sumsq - sum * sum / n).max(0.0);

        let mut order: Vec<usize> = match self.params.max_features {
            Some(k) if k < w => {
                let mut all: Vec<usize> = index::sample(rng, w, w).into_vec();
                all[..k].sort_unstable();
                all[k..].sort_unstable();
                all
            }
            _ => (0..w).collect(),
        };
        let mtry = self.params.max_features.unwrap_or(w).clamp(1, w);

        let mut best: Option<SplitChoice> = None;
        for (rank, &f) in order.iter().enumerate() {
            // Keep looking past the random subset only if nothing valid was found.
            if rank >= mtry && best.is_some() {
                break;
            }
            if let Some(c) = self.best_for_feature(samples, f, sum, n) {
                if best.is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        order.clear();
        best.filter(|b| b.gain > 1e-12 * parent_sse && b.gain > 0.0)
    }

    fn best_for_feature(&mut self, samples: &[usize], f: usize, sum: f64, n: f64) -> Option<SplitChoice> {
        self.pairs.clear();
        self.pairs
            .extend(samples.iter().map(|&i| (self.x[[i, f]], self.y[i])));
        self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let base = sum * sum / n;
        let mut left_sum = 0.0;
        let mut best: Option<SplitChoice> = None;
        for p in 0..self.pairs.len() - 1 {
            left_sum += self.pairs[p].1;
            let (v, next) = (self.pairs[p].0, self.pairs[p + 1].0);
            if v >= next {
                continue;
            }
            let nl = (p + 1) as f64;
            let nr = n - nl;
            let right_sum = sum - left_sum;
            let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - base;
            if best.is_none_or(|b| gain > b.gain) {
                let mid = 0.5 * (v + next);
                let threshold = if mid < next { mid } else { v };
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
        best
    }
}
