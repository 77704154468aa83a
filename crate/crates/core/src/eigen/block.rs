use crate::sparse::SparseSymMatrix;

/// Dense `n × cols` block of column vectors.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub n: usize,
    pub cols: Vec<Vec<f64>>,
}

impl Block {
    pub fn new(n: usize) -> Self {
        Block { n, cols: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.cols.len()
    }

    pub fn apply(&self, a: &SparseSymMatrix) -> Block {
        Block { n: self.n, cols: self.cols.iter().map(|c| a.mul_vec(c)).collect() }
    }

    pub fn select(&self, idx: &[usize]) -> Block {
        Block { n: self.n, cols: idx.iter().map(|&i| self.cols[i].clone()).collect() }
    }

    pub fn extend(&mut self, other: &Block) {
        self.cols.extend(other.cols.iter().cloned());
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators: fixed order, independent of thread count
    let mut s = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s[0] += a[i] * b[i];
        s[1] += a[i + 1] * b[i + 1];
        s[2] += a[i + 2] * b[i + 2];
        s[3] += a[i + 3] * b[i + 3];
    }
    for i in 4 * chunks..a.len() {
        s[0] += a[i] * b[i];
    }
    (s[0] + s[1]) + (s[2] + s[3])
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Row-major `aᵀ b` of size `a.width() × b.width()`.
pub(crate) fn gram(a: &Block, b: &Block) -> Vec<f64> {
    let (p, q) = (a.width(), b.width());
    let mut g = vec![0.0; p * q];
    for i in 0..p {
        for j in 0..q {
            g[i * q + j] = dot(&a.cols[i], &b.cols[j]);
        }
    }
    g
}

/// Symmetric Gram `sᵀ t`, averaged with its transpose.
pub(crate) fn sym_gram(s: &Block, t: &Block) -> Vec<f64> {
    let p = s.width();
    let mut g = gram(s, t);
    for i in 0..p {
        for j in i + 1..p {
            let v = 0.5 * (g[i * p + j] + g[j * p + i]);
            g[i * p + j] = v;
            g[j * p + i] = v;
        }
    }
    g
}

/// `s c` where `c` is row-major `s.width() × q`.
pub(crate) fn combine(s: &Block, c: &[f64], q: usize) -> Block {
    let p = s.width();
    debug_assert_eq!(c.len(), p * q);
    let mut cols = Vec::with_capacity(q);
    for j in 0..q {
        let mut out = vec![0.0; s.n];
        for i in 0..p {
            let w = c[i * q + j];
            if w != 0.0 {
                for (o, x) in out.iter_mut().zip(&s.cols[i]) {
                    *o += w * x;
                }
            }
        }
        cols.push(out);
    }
    Block { n: s.n, cols }
}
