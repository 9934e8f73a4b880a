//! Nearest-neighbour index over a [`PointSet`], backed by a static k-d tree.

use kiddo::{ImmutableKdTree, SquaredEuclidean};

use crate::error::{Error, Result};
use crate::geom::PointSet;

enum Tree {
    D1(ImmutableKdTree<f64, 1>),
    D2(ImmutableKdTree<f64, 2>),
    D3(ImmutableKdTree<f64, 3>),
    D4(ImmutableKdTree<f64, 4>),
}

/// Read-only spatial index. Item ids are indices into the indexed [`PointSet`].
pub struct PointIndex {
    tree: Tree,
    len: usize,
}

impl std::fmt::Debug for PointIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PointIndex").field("len", &self.len).finish()
    }
}

fn arrays<const K: usize>(points: &PointSet) -> Vec<[f64; K]> {
    points
        .iter()
        .map(|p| {
            let mut a = [0.0; K];
            a.copy_from_slice(p);
            a
        })
        .collect()
}

fn as_array<const K: usize>(p: &[f64]) -> [f64; K] {
    let mut a = [0.0; K];
    a.copy_from_slice(p);
    a
}

macro_rules! dispatch {
    ($self:expr, $t:ident, $k:ident => $body:expr) => {
        match &$self.tree {
            Tree::D1($t) => {
                const $k: usize = 1;
                $body
            }
            Tree::D2($t) => {
                const $k: usize = 2;
                $body
            }
            Tree::D3($t) => {
                const $k: usize = 3;
                $body
            }
            Tree::D4($t) => {
                const $k: usize = 4;
                $body
            }
        }
    };
}

impl PointIndex {
    pub fn build(points: &PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        let construction = |e: kiddo::kd_tree::ConstructionError| Error::Domain(format!("k-d tree: {e:?}"));
        let tree = match points.dim() {
            1 => Tree::D1(ImmutableKdTree::new_from_slice(&arrays::<1>(points)).map_err(construction)?),
            2 => Tree::D2(ImmutableKdTree::new_from_slice(&arrays::<2>(points)).map_err(construction)?),
            3 => Tree::D3(ImmutableKdTree::new_from_slice(&arrays::<3>(points)).map_err(construction)?),
            4 => Tree::D4(ImmutableKdTree::new_from_slice(&arrays::<4>(points)).map_err(construction)?),
            d => {
                return Err(Error::Domain(format!(
                    "spatial index supports dimensions 1..=4, got {d}"
                )))
            }
        };
        Ok(Self {
            tree,
            len: points.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index of a nearest point and the Euclidean distance to it.
    pub fn nearest(&self, p: &[f64]) -> (usize, f64) {
        dispatch!(self, t, K => {
            let r = t.query(&as_array::<K>(p)).nearest_one::<SquaredEuclidean<f64>>().execute();
            (r.item as usize, r.distance.max(0.0).sqrt())
        })
    }

    /// All indices within Euclidean distance `radius` of `p` (inclusive), ascending.
    pub fn within(&self, p: &[f64], radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out: Vec<usize> = dispatch!(self, t, K => {
            t.query(&as_array::<K>(p))
                .within::<SquaredEuclidean<f64>>(r2)
                .unsorted()
                .execute()
                .into_iter()
                .map(|r| r.item as usize)
                .collect()
        });
        out.sort_unstable();
        out
    }
}
