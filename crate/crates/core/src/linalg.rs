//! Dense LU factorization with partial pivoting, row-major storage.

#[derive(Debug, Clone, PartialEq)]
pub struct SingularMatrix {
    pub column: usize,
    pub pivot: f64,
}

pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Solves `A x = b`, consuming the matrix. A pivot smaller than
    /// `rel_tol * max|A|` is reported as singular.
    pub fn solve(mut self, b: &[f64], rel_tol: f64) -> Result<Vec<f64>, SingularMatrix> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut rhs = b.to_vec();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|r| (r, self.get(r, k).abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= rel_tol * scale {
                return Err(SingularMatrix { column: k, pivot: pmax });
            }
            if p != k {
                for c in 0..n {
                    self.data.swap(k * n + c, p * n + c);
                }
                rhs.swap(k, p);
            }
            let (top, bottom) = self.data.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..];
            let inv = 1.0 / pivot_row[k];
            for (i, row) in bottom.chunks_exact_mut(n).enumerate() {
                let f = row[k] * inv;
                if f == 0.0 {
                    continue;
                }
                row[k] = 0.0;
                for c in k + 1..n {
                    row[c] -= f * pivot_row[c];
                }
                rhs[k + 1 + i] -= f * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let row = &self.data[k * n..(k + 1) * n];
            let s: f64 = row[k + 1..].iter().zip(&x[k + 1..]).map(|(a, b)| a * b).sum();
            x[k] = (rhs[k] - s) / row[k];
        }
        Ok(x)
    }
}
