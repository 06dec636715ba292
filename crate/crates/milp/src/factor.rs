//! Product-form basis inverse: `B⁻¹ = E_k ⋯ E_1` with sparse column etas.

/// Entries below this magnitude are dropped from eta columns.
const DROP: f64 = 1e-14;
/// A pivot must be at least this fraction of the largest candidate.
const THRESHOLD: f64 = 0.1;

/// `E = I + (η - e_r) e_rᵀ`, stored as the pivot position, the pivot
/// entry `η_r` and the other nonzeros of `η`.
#[derive(Debug, Clone)]
struct Eta {
    pivot: usize,
    diag: f64,
    rest: Vec<(usize, f64)>,
}

/// Result of a refactorization.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factored {
    /// Variable basic at each position after the refactor.
    pub basis: Vec<usize>,
    /// Basic variables dropped as linearly dependent.
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct BasisFactor {
    m: usize,
    etas: Vec<Eta>,
    base_len: usize,
}

impl BasisFactor {
    pub fn updates(&self) -> usize {
        self.etas.len() - self.base_len
    }

    /// `x ← B⁻¹ x`.
    pub fn ftran(&self, x: &mut [f64]) {
        for e in &self.etas {
            let xr = x[e.pivot];
            if xr == 0.0 {
                continue;
            }
            x[e.pivot] = xr * e.diag;
            for &(i, v) in &e.rest {
                x[i] += xr * v;
            }
        }
    }

    /// `yᵀ ← yᵀ B⁻¹`.
    pub fn btran(&self, y: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut s = y[e.pivot] * e.diag;
            for &(i, v) in &e.rest {
                s += y[i] * v;
            }
            y[e.pivot] = s;
        }
    }

    /// Records a basis change at position `r`, where `alpha = B⁻¹ a_q` is the
    /// entering column expressed in the old basis.
    pub fn update(&mut self, r: usize, alpha: &[f64]) {
        let inv = 1.0 / alpha[r];
        let rest: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != r && a.abs() > DROP)
            .map(|(i, &a)| (i, -a * inv))
            .collect();
        self.etas.push(Eta {
            pivot: r,
            diag: inv,
            rest,
        });
    }

    /// Builds a fresh factorization of the basis whose columns are produced
    /// by `column(var, out)` (which writes the column densely into `out`).
    /// Logical columns (`is_logical(var) == Some(row)`) are pivoted on their
    /// own row. Dependent structural columns are replaced by the logicals of
    /// the rows left without a pivot.
    pub fn refactor(
        &mut self,
        m: usize,
        basis: &[usize],
        is_logical: impl Fn(usize) -> Option<usize>,
        logical_of_row: impl Fn(usize) -> usize,
        column: impl Fn(usize, &mut Vec<(usize, f64)>),
        singular_tol: f64,
    ) -> Factored {
        self.m = m;
        self.etas.clear();
        let mut new_basis = vec![usize::MAX; m];
        let mut row_done = vec![false; m];
        let mut structural: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        for &var in basis {
            match is_logical(var) {
                Some(row) if !row_done[row] => {
                    row_done[row] = true;
                    new_basis[row] = var;
                }
                Some(_) => {}
                None => {
                    let mut col = Vec::new();
                    column(var, &mut col);
                    structural.push((var, col));
                }
            }
        }
        // Sparse columns first keeps fill-in low.
        structural.sort_by_key(|(var, col)| (col.len(), *var));

        let mut dropped = Vec::new();
        let mut work = vec![0.0; m];
        let mut touched: Vec<usize> = Vec::new();
        for (var, col) in structural {
            for &(i, v) in &col {
                if work[i] == 0.0 {
                    touched.push(i);
                }
                work[i] += v;
            }
            // Etas only spread mass into rows already pivoted or present.
            self.ftran_tracked(&mut work, &mut touched);
            let mut best = 0.0f64;
            for &i in &touched {
                if !row_done[i] {
                    best = best.max(work[i].abs());
                }
            }
            if best <= singular_tol {
                dropped.push(var);
            } else {
                // Among acceptable pivots, the row with the smallest index.
                let mut pick = usize::MAX;
                for &i in &touched {
                    if !row_done[i] && work[i].abs() >= THRESHOLD * best && i < pick {
                        pick = i;
                    }
                }
                row_done[pick] = true;
                new_basis[pick] = var;
                let inv = 1.0 / work[pick];
                let rest: Vec<(usize, f64)> = touched
                    .iter()
                    .filter(|&&i| i != pick && work[i].abs() > DROP)
                    .map(|&i| (i, -work[i] * inv))
                    .collect();
                if !(rest.is_empty() && inv == 1.0) {
                    self.etas.push(Eta {
                        pivot: pick,
                        diag: inv,
                        rest,
                    });
                }
            }
            for &i in &touched {
                work[i] = 0.0;
            }
            touched.clear();
        }
        for (row, slot) in new_basis.iter_mut().enumerate() {
            if *slot == usize::MAX {
                *slot = logical_of_row(row);
            }
        }
        self.base_len = self.etas.len();
        Factored {
            basis: new_basis,
            dropped,
        }
    }

    fn ftran_tracked(&self, x: &mut [f64], touched: &mut Vec<usize>) {
        for e in &self.etas {
            let xr = x[e.pivot];
            if xr == 0.0 {
                continue;
            }
            x[e.pivot] = xr * e.diag;
            for &(i, v) in &e.rest {
                if x[i] == 0.0 {
                    touched.push(i);
                }
                x[i] += xr * v;
            }
        }
        touched.sort_unstable();
        touched.dedup();
    }
}
