//! Static 3-d kd-tree for M-nearest-sample queries.
//!
//! The tree is built once over sample locations and queried read-only from
//! many threads. Results are ordered by `(distance, index)` so that equal
//! distances never make the neighbour set depend on traversal order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geom::Vec3;
use crate::num::Real;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: T,
        left: Box<Node<T>>,
        right: Box<Node<T>>,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree<T> {
    points: Vec<Vec3<T>>,
    /// Permutation of point indices; leaves reference contiguous ranges.
    order: Vec<usize>,
    root: Option<Node<T>>,
}

/// A neighbour returned by [`KdTree::nearest`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T> {
    pub index: usize,
    pub distance_squared: T,
}

struct HeapItem<T>(Neighbor<T>);

impl<T: Real> PartialEq for HeapItem<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for HeapItem<T> {}
impl<T: Real> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for HeapItem<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .distance_squared
            .cmp_partial(&other.0.distance_squared)
            .then(self.0.index.cmp(&other.0.index))
    }
}

impl<T: Real> KdTree<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let root = if points.is_empty() {
            None
        } else {
            let n = order.len();
            Some(build(&points, &mut order, 0, n))
        };
        Self {
            points,
            order,
            root,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Vec3<T> {
        self.points[i]
    }

    /// Up to `k` nearest points within `radius` (inclusive), closest first.
    pub fn nearest(&self, query: Vec3<T>, k: usize, radius: T) -> Vec<Neighbor<T>> {
        let mut heap: BinaryHeap<HeapItem<T>> = BinaryHeap::with_capacity(k + 1);
        if k == 0 {
            return Vec::new();
        }
        if let Some(root) = &self.root {
            let r2 = radius * radius;
            self.search(root, query, k, r2, &mut heap);
        }
        let mut out: Vec<Neighbor<T>> = heap.into_iter().map(|h| h.0).collect();
        out.sort_by(|a, b| {
            a.distance_squared
                .cmp_partial(&b.distance_squared)
                .then(a.index.cmp(&b.index))
        });
        out
    }

    fn search(
        &self,
        node: &Node<T>,
        q: Vec3<T>,
        k: usize,
        r2: T,
        heap: &mut BinaryHeap<HeapItem<T>>,
    ) {
        match node {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    let d2 = self.points[i].distance_squared(q);
                    if d2 > r2 {
                        continue;
                    }
                    let item = HeapItem(Neighbor {
                        index: i,
                        distance_squared: d2,
                    });
                    if heap.len() < k {
                        heap.push(item);
                    } else if let Some(worst) = heap.peek() {
                        if item < *worst {
                            heap.pop();
                            heap.push(item);
                        }
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q.axis(*axis) - *value;
                let (near, far) = if delta <= T::zero() {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, k, r2, heap);
                let plane2 = delta * delta;
                let worst = if heap.len() < k {
                    r2
                } else {
                    heap.peek().map(|h| h.0.distance_squared).unwrap_or(r2)
                };
                if plane2 <= worst && plane2 <= r2 {
                    self.search(far, q, k, r2, heap);
                }
            }
        }
    }
}

fn build<T: Real>(points: &[Vec3<T>], order: &mut [usize], start: usize, end: usize) -> Node<T> {
    let slice = &mut order[start..end];
    if slice.len() <= LEAF_SIZE {
        return Node::Leaf { start, end };
    }
    // Split on the axis of largest spread.
    let mut lo = points[slice[0]];
    let mut hi = lo;
    for &i in slice.iter() {
        let p = points[i];
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    let spread = hi - lo;
    let axis = if spread.x >= spread.y && spread.x >= spread.z {
        0
    } else if spread.y >= spread.z {
        1
    } else {
        2
    };
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a]
            .axis(axis)
            .cmp_partial(&points[b].axis(axis))
            .then(a.cmp(&b))
    });
    let value = points[slice[mid]].axis(axis);
    let split = start + mid;
    let left = build(points, order, start, split);
    let right = build(points, order, split, end);
    Node::Split {
        axis,
        value,
        left: Box::new(left),
        right: Box::new(right),
    }
}
