//! Rank of sparse integer matrices by exact elimination.
//!
//! Over the prime field the computed rank is a lower bound for the rank over ℚ;
//! over [`num_rational::BigRational`] it is the rank over ℚ itself.

use std::collections::HashMap;

use crate::scalar::ExactField;

/// Integer matrix in triplet form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, value)`, at most one entry per position.
    pub entries: Vec<(usize, usize, i64)>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<(usize, usize, i64)>) -> Self {
        Self { rows, cols, entries }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        }
    }

    /// Exact product; zero entries are dropped.
    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); other.rows];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let mut acc: HashMap<(usize, usize), i64> = HashMap::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &by_row[k] {
                *acc.entry((r, c)).or_insert(0) += v * w;
            }
        }
        let mut entries: Vec<_> = acc.into_iter().filter(|(_, v)| *v != 0).map(|((r, c), v)| (r, c, v)).collect();
        entries.sort_unstable();
        IntMatrix { rows: self.rows, cols: other.cols, entries }
    }

    fn sorted_rows<F: ExactField>(&self) -> Vec<Vec<(usize, F)>> {
        let mut rows: Vec<Vec<(usize, F)>> = vec![Vec::new(); self.rows];
        for &(r, c, v) in &self.entries {
            let x = F::from_i64(v);
            if !x.is_zero() {
                rows[r].push((c, x));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
        }
        rows
    }
}

/// `a − factor·b` for sparse rows sorted by column.
fn axpy_row<F: ExactField>(a: &[(usize, F)], factor: &F, b: &[(usize, F)]) -> Vec<(usize, F)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i].clone());
            i += 1;
        } else if take_b {
            out.push((b[j].0, -(factor.clone() * b[j].1.clone())));
            j += 1;
        } else {
            let v = a[i].1.clone() - factor.clone() * b[j].1.clone();
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Rank over the field `F` by incremental row echelon reduction.
pub fn rank<F: ExactField>(m: &IntMatrix) -> usize {
    // pivot rows keyed by leading column, normalized to leading coefficient one
    let mut pivots: HashMap<usize, Vec<(usize, F)>> = HashMap::new();
    for mut row in m.sorted_rows::<F>() {
        while let Some((lead, coef)) = row.first().cloned() {
            match pivots.get(&lead) {
                Some(p) => row = axpy_row(&row, &coef, p),
                None => {
                    let inv = coef.inv();
                    let normalized = row.into_iter().map(|(c, v)| (c, v * inv.clone())).collect();
                    pivots.insert(lead, normalized);
                    break;
                }
            }
        }
    }
    pivots.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ModPrime;
    use num_rational::BigRational;

    fn dense(rows: usize, cols: usize, data: &[i64]) -> IntMatrix {
        let entries = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .zip(data.iter())
            .filter(|(_, v)| **v != 0)
            .map(|((r, c), v)| (r, c, *v))
            .collect();
        IntMatrix::new(rows, cols, entries)
    }

    #[test]
    fn small_ranks() {
        let a = dense(3, 3, &[1, 2, 3, 4, 5, 6, 7, 8, 9]);
        assert_eq!(rank::<ModPrime>(&a), 2);
        assert_eq!(rank::<BigRational>(&a), 2);
        assert_eq!(rank::<ModPrime>(&dense(2, 2, &[0, 0, 0, 0])), 0);
        assert_eq!(rank::<BigRational>(&dense(2, 3, &[1, 0, 0, 0, 0, 5])), 2);
    }

    #[test]
    fn prime_rank_can_drop_but_never_exceeds() {
        let p = ModPrime::P as i64;
        let a = dense(2, 2, &[p, 0, 0, 1]);
        assert_eq!(rank::<ModPrime>(&a), 1);
        assert_eq!(rank::<BigRational>(&a), 2);
    }

    #[test]
    fn product_and_transpose() {
        let a = dense(2, 3, &[1, -1, 0, 0, 1, -1]);
        let ones = dense(3, 1, &[1, 1, 1]);
        assert!(a.mul(&ones).entries.is_empty());
        assert_eq!(a.transpose().transpose(), a);
    }
}
