//! Exterior powers Λ^m(C^n) in the lexicographic basis of sorted index sets.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Basis bookkeeping for Λ^m(C^n).
#[derive(Debug, Clone)]
pub struct ExteriorBasis {
    pub n: usize,
    pub m: usize,
    /// Sorted index sets, in lexicographic order.
    pub sets: Vec<Vec<usize>>,
    /// Nonzero pattern of the additive compound: (row set, column set, source row, source column, sign).
    compound_terms: Vec<(usize, usize, usize, usize, f64)>,
}

fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut Vec::new(), &mut out);
    out
}

/// Sign of the permutation sorting `v` (entries distinct).
fn sort_sign(v: &mut [usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    sign
}

impl ExteriorBasis {
    pub fn new(n: usize, m: usize) -> Self {
        assert!(m <= n && n > 0);
        let sets = combinations(n, m);
        let index_of = |s: &[usize]| sets.iter().position(|t| t.as_slice() == s).unwrap();
        let mut compound_terms = Vec::new();
        for (col, set) in sets.iter().enumerate() {
            for r in 0..m {
                let jr = set[r];
                for i in 0..n {
                    if i != jr && set.contains(&i) {
                        continue;
                    }
                    let mut image = set.clone();
                    image[r] = i;
                    let sign = sort_sign(&mut image);
                    compound_terms.push((index_of(&image), col, i, jr, sign));
                }
            }
        }
        Self {
            n,
            m,
            sets,
            compound_terms,
        }
    }

    pub fn dim(&self) -> usize {
        self.sets.len()
    }

    /// Additive compound A^{(m)}: the generator induced on Λ^m by V' = AV.
    pub fn additive_compound(&self, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for &(row, col, i, j, sign) in &self.compound_terms {
            out[(row, col)] += a[(i, j)] * sign;
        }
        out
    }

    /// In-place `out = A^{(m)} w` without forming the compound matrix.
    pub fn apply_compound(&self, a: &DMatrix<Complex64>, w: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for &(row, col, i, j, sign) in &self.compound_terms {
            out[row] += a[(i, j)] * w[col] * sign;
        }
    }

    /// Plücker coordinates of the span of the columns of `v` (n × m).
    pub fn wedge_columns(&self, v: &DMatrix<Complex64>) -> Vec<Complex64> {
        assert_eq!(v.ncols(), self.m);
        self.sets
            .iter()
            .map(|set| {
                if self.m == 0 {
                    return Complex64::new(1.0, 0.0);
                }
                let sub = DMatrix::from_fn(self.m, self.m, |r, c| v[(set[r], c)]);
                sub.determinant()
            })
            .collect()
    }
}

/// The scalar `w1 ∧ w2 ∈ Λ^n(C^n)` for `w1 ∈ Λ^{m1}`, `w2 ∈ Λ^{n−m1}`.
pub fn pair(b1: &ExteriorBasis, w1: &[Complex64], b2: &ExteriorBasis, w2: &[Complex64]) -> Complex64 {
    assert_eq!(b1.n, b2.n);
    assert_eq!(b1.m + b2.m, b1.n);
    let mut total = Complex64::new(0.0, 0.0);
    for (i1, s1) in b1.sets.iter().enumerate() {
        let complement: Vec<usize> = (0..b1.n).filter(|i| !s1.contains(i)).collect();
        let i2 = b2.sets.iter().position(|s| *s == complement).unwrap();
        let mut perm: Vec<usize> = s1.iter().chain(complement.iter()).copied().collect();
        let sign = sort_sign(&mut perm);
        total += w1[i1] * w2[i2] * sign;
    }
    total
}

pub fn norm(w: &[Complex64]) -> f64 {
    w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: usize, cols: usize, data: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(rows, cols, &data.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn pairing_is_determinant() {
        let a = cm(
            4,
            4,
            &[1.0, 2.0, 0.5, -1.0, 0.0, 1.0, 3.0, 2.0, 4.0, -2.0, 1.0, 0.0, 1.0, 1.0, 1.0, 5.0],
        );
        for m in 0..=4 {
            let b1 = ExteriorBasis::new(4, m);
            let b2 = ExteriorBasis::new(4, 4 - m);
            let w1 = b1.wedge_columns(&a.columns(0, m).into_owned());
            let w2 = b2.wedge_columns(&a.columns(m, 4 - m).into_owned());
            let d = pair(&b1, &w1, &b2, &w2);
            assert!((d - a.determinant()).norm() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn additive_compound_generates_wedge_flow() {
        // d/dx (v1 ∧ v2) with v_i' = A v_i equals A^{(2)} (v1 ∧ v2); check by finite differences.
        let a = cm(
            4,
            4,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -0.3, -1.2, 1.0, 0.4],
        );
        let v = cm(4, 2, &[1.0, 0.2, -0.5, 1.0, 0.3, 0.7, 2.0, -1.0]);
        let basis = ExteriorBasis::new(4, 2);
        let h = 1e-6;
        let eye = DMatrix::<Complex64>::identity(4, 4);
        let vp = (&eye + &a * Complex64::new(h, 0.0)) * &v;
        let vm = (&eye - &a * Complex64::new(h, 0.0)) * &v;
        let wp = basis.wedge_columns(&vp);
        let wm = basis.wedge_columns(&vm);
        let w = basis.wedge_columns(&v);
        let mut aw = vec![Complex64::new(0.0, 0.0); basis.dim()];
        basis.apply_compound(&a, &w, &mut aw);
        let dense = basis.additive_compound(&a);
        for i in 0..basis.dim() {
            let fd = (wp[i] - wm[i]) / (2.0 * h);
            assert!((fd - aw[i]).norm() < 1e-6);
            let row: Complex64 = (0..basis.dim()).map(|j| dense[(i, j)] * w[j]).sum();
            assert!((row - aw[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn compound_trace_is_sum_over_sets() {
        let a = cm(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0]);
        let b = ExteriorBasis::new(3, 2);
        // trace A^{(2)} = (m choose ...) = (n-1) tr A for m = 2, n = 3.
        let tr = b.additive_compound(&a).trace();
        assert!((tr.re - 2.0 * 16.0).abs() < 1e-12);
    }
}
