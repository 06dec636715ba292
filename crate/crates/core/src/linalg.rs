//! Small dense complex helpers sized for antenna arrays.

use num_complex::Complex64;

pub type C64 = Complex64;

/// `aᴴ b`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// Square complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m.data[r * n + c] = f(r, c);
            }
        }
        m
    }

    /// `scale · v vᴴ`.
    pub fn outer(v: &[C64], scale: f64) -> Self {
        Self::from_fn(v.len(), |r, c| v[r] * v[c].conj() * scale)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.n + c]
    }

    pub fn add_assign(&mut self, other: &CMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(self · other)`.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        let n = self.n;
        let mut s = C64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                s += self.get(r, c) * other.get(c, r);
            }
        }
        s
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    /// `vᴴ A v`, real part only (exact for Hermitian `A`).
    pub fn quad_form(&self, v: &[C64]) -> f64 {
        inner(v, &self.mul_vec(v)).re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.n)
            .all(|r| (0..self.n).all(|c| (self.get(r, c) - self.get(c, r).conj()).norm() <= tol))
    }
}
