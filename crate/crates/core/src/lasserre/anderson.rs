//! Type-II Anderson acceleration for a fixed-point map `x ↦ T(x)`.

use std::collections::VecDeque;

pub(crate) struct Anderson {
    memory: usize,
    previous: Option<(Vec<f64>, Vec<f64>)>,
    /// Differences `(Δx_i, Δg_i)` of consecutive iterates, oldest first.
    deltas: VecDeque<(Vec<f64>, Vec<f64>)>,
    /// Gram matrix `⟨Δg_i, Δg_j⟩`, maintained incrementally.
    gram: VecDeque<VecDeque<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorise.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4 * 4;
    for (x, y) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        for t in 0..4 {
            acc[t] += x[t] * y[t];
        }
    }
    let tail: f64 = a[chunks..].iter().zip(&b[chunks..]).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

impl Anderson {
    pub(crate) fn new(memory: usize) -> Self {
        Self { memory, previous: None, deltas: VecDeque::new(), gram: VecDeque::new() }
    }

    pub(crate) fn reset(&mut self) {
        self.previous = None;
        self.deltas.clear();
        self.gram.clear();
    }

    /// Records `(x, g = T(x) − x)` and returns the extrapolated next iterate;
    /// with no usable history this is the plain step `x + g`.
    pub(crate) fn step(&mut self, x: Vec<f64>, g: Vec<f64>) -> Vec<f64> {
        let mut out: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + b).collect();
        if self.memory == 0 {
            return out;
        }
        if let Some((px, pg)) = self.previous.take() {
            let dx = diff(&x, &px);
            let dg = diff(&g, &pg);
            if self.deltas.len() == self.memory {
                self.deltas.pop_front();
                self.gram.pop_front();
                for row in self.gram.iter_mut() {
                    row.pop_front();
                }
            }
            let row: VecDeque<f64> = self.deltas.iter().map(|(_, d)| dot(d, &dg)).collect();
            for (r, &v) in self.gram.iter_mut().zip(&row) {
                r.push_back(v);
            }
            let mut row = row;
            row.push_back(dot(&dg, &dg));
            self.gram.push_back(row);
            self.deltas.push_back((dx, dg));
        }
        let k = self.deltas.len();
        if k > 0 {
            // Normal equations for min ‖g − ΔG γ‖, lightly regularised.
            let scale = (0..k).map(|i| self.gram[i][i]).fold(0.0, f64::max);
            if scale > 0.0 {
                let a: Vec<Vec<f64>> = (0..k)
                    .map(|i| (0..k).map(|j| self.gram[i][j] + if i == j { 1e-10 * scale } else { 0.0 }).collect())
                    .collect();
                let b: Vec<f64> = self.deltas.iter().map(|(_, d)| dot(d, &g)).collect();
                if let Some(gamma) = solve(a, b) {
                    for ((dx, dg), &c) in self.deltas.iter().zip(&gamma) {
                        for (o, (p, q)) in out.iter_mut().zip(dx.iter().zip(dg)) {
                            *o -= c * (p + q);
                        }
                    }
                }
            }
        }
        self.previous = Some((x, g));
        out
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}
