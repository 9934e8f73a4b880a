//! Separable upper envelope of equal-opening paraboloids.
//!
//! Evaluates `t(x) = max_j (v_j - (a/2)|p_j - x|^2)` for every `x` of a
//! product grid `L_0 × … × L_{n-1}`. The squared distance splits into per-axis
//! terms, so the maximum is taken one axis at a time: samples sharing all
//! coordinates but the current one form a 1-D problem, the upper envelope of
//! parabolas `v - (a/2)(p - s)^2` in `s`, which is built in linear time after
//! sorting (the lower-envelope scheme of generalized distance transforms).
//! Sample positions are arbitrary; only the query points need product
//! structure.

use std::cmp::Ordering;

use rayon::prelude::*;

/// Upper envelope of `v_j - (a/2)(s - p_j)^2` over `s ∈ R`.
#[derive(Debug, Clone)]
pub(crate) struct Envelope1d {
    half_a: f64,
    vertex: Vec<f64>,
    value: Vec<f64>,
    /// `bound[k]` is where parabola `k` stops dominating (`bound.len() == vertex.len() - 1`).
    bound: Vec<f64>,
}

impl Envelope1d {
    /// `items` must be sorted by position.
    pub(crate) fn build(a: f64, items: impl Iterator<Item = (f64, f64)>) -> Self {
        let half_a = 0.5 * a;
        let mut vertex: Vec<f64> = Vec::new();
        let mut value: Vec<f64> = Vec::new();
        let mut bound: Vec<f64> = Vec::new();
        for (p, v) in items {
            if let Some(&last) = vertex.last() {
                if p == last {
                    let k = value.len() - 1;
                    if v <= value[k] {
                        continue;
                    }
                    vertex.pop();
                    value.pop();
                    bound.pop();
                }
            }
            loop {
                let Some(&q) = vertex.last() else { break };
                let w = *value.last().unwrap();
                // Crossing of the new parabola with the last one kept.
                let s = ((w - v) / half_a + p * p - q * q) / (2.0 * (p - q));
                match bound.last() {
                    Some(&b) if s <= b => {
                        vertex.pop();
                        value.pop();
                        bound.pop();
                    }
                    _ => {
                        bound.push(s);
                        break;
                    }
                }
            }
            vertex.push(p);
            value.push(v);
        }
        Self {
            half_a,
            vertex,
            value,
            bound,
        }
    }

    #[inline]
    fn eval_piece(&self, k: usize, s: f64) -> f64 {
        let d = s - self.vertex[k];
        self.value[k] - self.half_a * d * d
    }

    /// Value at `s`, taking the larger of the two pieces adjacent to the
    /// located breakpoint so rounding in the crossing never loses a maximum.
    pub(crate) fn eval(&self, s: f64) -> f64 {
        let k = self.bound.partition_point(|&b| b < s);
        let mut best = self.eval_piece(k, s);
        if k > 0 {
            best = best.max(self.eval_piece(k - 1, s));
        }
        if k + 1 < self.vertex.len() {
            best = best.max(self.eval_piece(k + 1, s));
        }
        best
    }

    /// Values at ascending query points in one sweep.
    pub(crate) fn eval_sorted(&self, queries: &[f64], out: &mut [f64]) {
        let mut k = 0;
        for (s, o) in queries.iter().zip(out.iter_mut()) {
            while k < self.bound.len() && self.bound[k] < *s {
                k += 1;
            }
            let mut best = self.eval_piece(k, *s);
            if k > 0 {
                best = best.max(self.eval_piece(k - 1, *s));
            }
            if k + 1 < self.vertex.len() {
                best = best.max(self.eval_piece(k + 1, *s));
            }
            *o = best;
        }
    }
}

/// Value-independent grouping of sample positions for one level of the recursion.
enum Plan {
    /// Single remaining axis: sample order sorted by position.
    Line { order: Vec<usize>, pos: Vec<f64> },
    /// Groups of samples sharing the trailing coordinates, each sorted by the
    /// leading coordinate; `child` plans over the distinct trailing tuples.
    Split {
        groups: Vec<Vec<usize>>,
        lead: Vec<f64>,
        child: Box<Plan>,
    },
}

fn cmp_f(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

impl Plan {
    /// `pos` holds `count` tuples of length `dim`, flat.
    fn new(pos: &[f64], dim: usize) -> Plan {
        let count = pos.len() / dim;
        if dim == 1 {
            let mut order: Vec<usize> = (0..count).collect();
            order.sort_by(|&i, &j| cmp_f(pos[i], pos[j]).then(i.cmp(&j)));
            return Plan::Line {
                order,
                pos: pos.to_vec(),
            };
        }
        let tail = |i: usize| &pos[i * dim + 1..(i + 1) * dim];
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&i, &j| {
            tail(i)
                .iter()
                .zip(tail(j))
                .map(|(x, y)| cmp_f(*x, *y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
                .then(cmp_f(pos[i * dim], pos[j * dim]))
                .then(i.cmp(&j))
        });
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut child_pos: Vec<f64> = Vec::new();
        for &i in &order {
            let new_group = match groups.last() {
                None => true,
                Some(g) => tail(g[0]) != tail(i),
            };
            if new_group {
                groups.push(Vec::new());
                child_pos.extend_from_slice(tail(i));
            }
            groups.last_mut().unwrap().push(i);
        }
        let lead = (0..count).map(|i| pos[i * dim]).collect();
        Plan::Split {
            groups,
            lead,
            child: Box::new(Plan::new(&child_pos, dim - 1)),
        }
    }

    /// Writes the field over `axes` (row-major, first axis slowest) into `out`.
    fn run(&self, a: f64, values: &[f64], axes: &[Vec<f64>], out: &mut [f64]) {
        match self {
            Plan::Line { order, pos } => {
                let env = Envelope1d::build(a, order.iter().map(|&i| (pos[i], values[i])));
                env.eval_sorted(&axes[0], out);
            }
            Plan::Split {
                groups,
                lead,
                child,
            } => {
                let envs: Vec<Envelope1d> = groups
                    .iter()
                    .map(|g| Envelope1d::build(a, g.iter().map(|&i| (lead[i], values[i]))))
                    .collect();
                let stride: usize = axes[1..].iter().map(Vec::len).product();
                out.par_chunks_mut(stride)
                    .zip(axes[0].par_iter())
                    .for_each(|(row, &s)| {
                        let child_values: Vec<f64> = envs.iter().map(|e| e.eval(s)).collect();
                        child.run(a, &child_values, &axes[1..], row);
                    });
            }
        }
    }
}

/// `max_j (values_j - (a/2)|positions_j - x|^2)` for all `x` in the product of
/// the ascending coordinate lists `axes`; row-major with the first axis slowest.
pub(crate) fn product_grid_field(
    a: f64,
    positions: &[f64],
    values: &[f64],
    axes: &[Vec<f64>],
) -> Vec<f64> {
    let dim = axes.len();
    debug_assert_eq!(positions.len(), values.len() * dim);
    let total: usize = axes.iter().map(Vec::len).product();
    let mut out = vec![f64::NEG_INFINITY; total];
    if values.is_empty() || total == 0 {
        return out;
    }
    Plan::new(positions, dim).run(a, values, axes, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: f64, pos: &[f64], val: &[f64], dim: usize, x: &[f64]) -> f64 {
        (0..val.len())
            .map(|j| {
                let d2: f64 = (0..dim).map(|k| (pos[j * dim + k] - x[k]).powi(2)).sum();
                val[j] - 0.5 * a * d2
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn one_dimensional_envelope() {
        let pos = [0.3, -0.2, 0.3, 0.9, -0.7];
        let val = [0.1, 0.5, 0.2, -0.3, 0.0];
        let axis: Vec<f64> = (0..41).map(|k| -1.0 + k as f64 * 0.05).collect();
        let f = product_grid_field(2.0, &pos, &val, std::slice::from_ref(&axis));
        for (x, v) in axis.iter().zip(&f) {
            assert!((v - brute(2.0, &pos, &val, 1, &[*x])).abs() < 1e-15);
        }
    }

    #[test]
    fn scattered_samples_in_three_axes() {
        let mut pos = Vec::new();
        let mut val = Vec::new();
        for j in 0..300 {
            let t = j as f64;
            pos.extend_from_slice(&[(0.37 * t).sin(), (0.91 * t).cos(), ((j % 7) as f64) * 0.1]);
            val.push((1.3 * t).sin() * 0.2);
        }
        let axes: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..9).map(|k| -1.0 + k as f64 * 0.25).collect())
            .collect();
        let f = product_grid_field(0.7, &pos, &val, &axes);
        let mut idx = 0;
        for x0 in &axes[0] {
            for x1 in &axes[1] {
                for x2 in &axes[2] {
                    let b = brute(0.7, &pos, &val, 3, &[*x0, *x1, *x2]);
                    assert!((f[idx] - b).abs() < 1e-12);
                    idx += 1;
                }
            }
        }
    }
}
