//! Dense exact linear algebra over a [`Field`].

use serde_json::Value;

use crate::field::Field;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Clone> Matrix<E> {
    pub fn filled(rows: usize, cols: usize, value: E) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<E>>, cols: usize) -> Self {
        let r = rows.len();
        let data: Vec<E> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), r * cols, "ragged matrix rows");
        Matrix {
            rows: r,
            cols,
            data,
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<E>], rows: usize, zero: E) -> Self {
        let mut m = Matrix::filled(rows, cols.len(), zero);
        for (j, c) in cols.iter().enumerate() {
            for (i, e) in c.iter().enumerate() {
                m.set(i, j, e.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &E {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: E) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<E>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

pub fn zeros<F: Field>(f: &F, rows: usize, cols: usize) -> Matrix<F::Elem> {
    Matrix::filled(rows, cols, f.zero())
}

pub fn identity<F: Field>(f: &F, n: usize) -> Matrix<F::Elem> {
    let mut m = zeros(f, n, n);
    for i in 0..n {
        m.set(i, i, f.one());
    }
    m
}

pub fn block_diag<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &Matrix<F::Elem>) -> Matrix<F::Elem> {
    let mut m = zeros(f, a.rows + b.rows, a.cols + b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            m.set(i, j, a.get(i, j).clone());
        }
    }
    for i in 0..b.rows {
        for j in 0..b.cols {
            m.set(a.rows + i, a.cols + j, b.get(i, j).clone());
        }
    }
    m
}

pub fn mat_mul<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &Matrix<F::Elem>) -> Matrix<F::Elem> {
    assert_eq!(a.cols, b.rows, "dimension mismatch in product");
    let mut out = zeros(f, a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            if f.is_zero(aik) {
                continue;
            }
            for j in 0..b.cols {
                let bkj = b.get(k, j);
                if !f.is_zero(bkj) {
                    let idx = i * out.cols + j;
                    f.mul_add(&mut out.data[idx], aik, bkj);
                }
            }
        }
    }
    out
}

pub fn mat_sub<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &Matrix<F::Elem>) -> Matrix<F::Elem> {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    Matrix {
        rows: a.rows,
        cols: a.cols,
        data: a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| f.sub(x, y))
            .collect(),
    }
}

pub fn is_zero_matrix<F: Field>(f: &F, a: &Matrix<F::Elem>) -> bool {
    a.data.iter().all(|e| f.is_zero(e))
}

pub fn mat_vec<F: Field>(f: &F, a: &Matrix<F::Elem>, v: &[F::Elem]) -> Vec<F::Elem> {
    assert_eq!(a.cols, v.len());
    let mut out = vec![f.zero(); a.rows];
    for (j, vj) in v.iter().enumerate() {
        if f.is_zero(vj) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let aij = a.get(i, j);
            if !f.is_zero(aij) {
                f.mul_add(o, aij, vj);
            }
        }
    }
    out
}

pub fn matrix_to_json<F: Field>(f: &F, a: &Matrix<F::Elem>) -> Value {
    Value::Array(
        (0..a.rows)
            .map(|i| Value::Array(a.row(i).iter().map(|e| f.to_json(e)).collect()))
            .collect(),
    )
}

/// Column-sparse copy of a matrix for repeated matrix-vector products.
#[derive(Debug, Clone)]
pub struct SparseOp<E> {
    rows: usize,
    cols: Vec<Vec<(usize, E)>>,
}

impl<E: Clone> SparseOp<E> {
    pub fn new<F: Field<Elem = E>>(f: &F, a: &Matrix<E>) -> Self {
        let cols = (0..a.cols)
            .map(|j| {
                (0..a.rows)
                    .filter(|&i| !f.is_zero(a.get(i, j)))
                    .map(|i| (i, a.get(i, j).clone()))
                    .collect()
            })
            .collect();
        SparseOp { rows: a.rows, cols }
    }

    pub fn apply<F: Field<Elem = E>>(&self, f: &F, v: &[E]) -> Vec<E> {
        let mut out = vec![f.zero(); self.rows];
        for (j, vj) in v.iter().enumerate() {
            if f.is_zero(vj) {
                continue;
            }
            for (i, a) in &self.cols[j] {
                f.mul_add(&mut out[*i], a, vj);
            }
        }
        out
    }
}

/// A subspace held as a fully reduced row echelon basis.
#[derive(Debug, Clone)]
pub struct Echelon<E> {
    ambient: usize,
    rows: Vec<Vec<E>>,
    pivots: Vec<usize>,
}

impl<E: Clone + PartialEq> Echelon<E> {
    pub fn new(ambient: usize) -> Self {
        Echelon {
            ambient,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn span<F: Field<Elem = E>>(
        f: &F,
        ambient: usize,
        vecs: impl IntoIterator<Item = Vec<E>>,
    ) -> Self {
        let mut e = Echelon::new(ambient);
        for v in vecs {
            e.insert(f, v);
        }
        e
    }

    pub fn full<F: Field<Elem = E>>(f: &F, ambient: usize) -> Self {
        let mut e = Echelon::new(ambient);
        for i in 0..ambient {
            let mut v = vec![f.zero(); ambient];
            v[i] = f.one();
            e.rows.push(v);
            e.pivots.push(i);
        }
        e
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[Vec<E>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn reduce<F: Field<Elem = E>>(&self, f: &F, v: &[E]) -> Vec<E> {
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if f.is_zero(&v[p]) {
                continue;
            }
            let c = v[p].clone();
            for (x, r) in v.iter_mut().zip(row) {
                if !f.is_zero(r) {
                    *x = f.sub(x, &f.mul(&c, r));
                }
            }
        }
        v
    }

    /// Adds `v` to the span; returns whether the dimension grew.
    pub fn insert<F: Field<Elem = E>>(&mut self, f: &F, v: Vec<E>) -> bool {
        debug_assert_eq!(v.len(), self.ambient);
        let mut v = self.reduce(f, &v);
        let Some(p) = v.iter().position(|x| !f.is_zero(x)) else {
            return false;
        };
        let inv = f.inv(&v[p]).expect("nonzero pivot");
        for x in v.iter_mut() {
            *x = f.mul(x, &inv);
        }
        for row in self.rows.iter_mut() {
            if f.is_zero(&row[p]) {
                continue;
            }
            let c = row[p].clone();
            for (x, r) in row.iter_mut().zip(&v) {
                if !f.is_zero(r) {
                    *x = f.sub(x, &f.mul(&c, r));
                }
            }
        }
        self.rows.push(v);
        self.pivots.push(p);
        true
    }

    pub fn contains<F: Field<Elem = E>>(&self, f: &F, v: &[E]) -> bool {
        self.reduce(f, v).iter().all(|x| f.is_zero(x))
    }

    /// Coordinates of `v` in the echelon basis, or `None` if `v` is outside the span.
    pub fn coords<F: Field<Elem = E>>(&self, f: &F, v: &[E]) -> Option<Vec<E>> {
        if !self.contains(f, v) {
            return None;
        }
        Some(self.pivots.iter().map(|&p| v[p].clone()).collect())
    }

    pub fn contains_space<F: Field<Elem = E>>(&self, f: &F, other: &Echelon<E>) -> bool {
        other.rows.iter().all(|v| self.contains(f, v))
    }

    /// Image of the subspace under an operator.
    pub fn image<F: Field<Elem = E>>(&self, f: &F, op: &SparseOp<E>) -> Self {
        Echelon::span(f, op.rows, self.rows.iter().map(|v| op.apply(f, v)))
    }
}

/// Basis of the null space of `a` (column vectors `v` with `a v = 0`).
pub fn nullspace<F: Field>(f: &F, a: &Matrix<F::Elem>) -> Vec<Vec<F::Elem>> {
    let ech = Echelon::span(f, a.cols(), (0..a.rows()).map(|i| a.row(i).to_vec()));
    let pivots = ech.pivots();
    let mut out = Vec::new();
    for free in (0..a.cols()).filter(|c| !pivots.contains(c)) {
        let mut v = vec![f.zero(); a.cols()];
        v[free] = f.one();
        for (row, &p) in ech.basis().iter().zip(pivots) {
            v[p] = f.neg(&row[free]);
        }
        out.push(v);
    }
    out
}

pub fn rank<F: Field>(f: &F, a: &Matrix<F::Elem>) -> usize {
    Echelon::span(f, a.cols(), (0..a.rows()).map(|i| a.row(i).to_vec())).dim()
}

/// Matrix of the operator induced on `u / w`; requires `w ⊂ u`, both stable.
pub fn subquotient_op<F: Field>(
    f: &F,
    op: &SparseOp<F::Elem>,
    u: &Echelon<F::Elem>,
    w: &Echelon<F::Elem>,
) -> Option<Matrix<F::Elem>> {
    let mut q = Echelon::new(u.ambient());
    for v in u.basis() {
        q.insert(f, w.reduce(f, v));
    }
    let d = q.dim();
    let mut m = zeros(f, d, d);
    for (j, v) in q.basis().iter().enumerate() {
        let img = w.reduce(f, &op.apply(f, v));
        let c = q.coords(f, &img)?;
        for (i, x) in c.into_iter().enumerate() {
            m.set(i, j, x);
        }
    }
    Some(m)
}

/// Matrix of the operator restricted to a stable subspace, in its echelon basis.
pub fn restrict_op<F: Field>(
    f: &F,
    op: &SparseOp<F::Elem>,
    s: &Echelon<F::Elem>,
) -> Option<Matrix<F::Elem>> {
    let d = s.dim();
    let mut m = zeros(f, d, d);
    for (j, v) in s.basis().iter().enumerate() {
        let c = s.coords(f, &op.apply(f, v))?;
        for (i, x) in c.into_iter().enumerate() {
            m.set(i, j, x);
        }
    }
    Some(m)
}

/// Jordan block sizes of a nilpotent matrix, weakly decreasing.
/// Returns `None` when the matrix is not nilpotent.
pub fn nilpotent_partition<F: Field>(f: &F, a: &Matrix<F::Elem>) -> Option<Vec<usize>> {
    let d = a.rows();
    let op = SparseOp::new(f, a);
    let mut ranks = vec![d];
    let mut cur = Echelon::full(f, d);
    while cur.dim() > 0 {
        if ranks.len() > d + 1 {
            return None;
        }
        cur = cur.image(f, &op);
        ranks.push(cur.dim());
    }
    // at_least[j] = number of blocks of size >= j + 1
    let at_least: Vec<usize> = ranks.windows(2).map(|w| w[0] - w[1]).collect();
    let mut parts = Vec::new();
    for (j, &c) in at_least.iter().enumerate() {
        let next = at_least.get(j + 1).copied().unwrap_or(0);
        if c < next {
            return None;
        }
        parts.extend(std::iter::repeat(j + 1).take(c - next));
    }
    parts.sort_unstable_by(|a, b| b.cmp(a));
    Some(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;

    fn shift(f: &Fp, sizes: &[usize]) -> Matrix<u64> {
        let d: usize = sizes.iter().sum();
        let mut m = zeros(f, d, d);
        let mut off = 0;
        for &s in sizes {
            for i in 1..s {
                m.set(off + i, off + i - 1, 1);
            }
            off += s;
        }
        m
    }

    #[test]
    fn partition_of_direct_shift_blocks() {
        let f = Fp::default();
        assert_eq!(
            nilpotent_partition(&f, &shift(&f, &[3, 1, 2])),
            Some(vec![3, 2, 1])
        );
        assert_eq!(nilpotent_partition(&f, &zeros(&f, 0, 0)), Some(vec![]));
        assert_eq!(nilpotent_partition(&f, &identity(&f, 2)), None);
    }

    #[test]
    fn nullspace_and_rank_agree() {
        let f = Fp::default();
        let a = Matrix::from_rows(vec![vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]], 3);
        assert_eq!(rank(&f, &a), 2);
        let ns = nullspace(&f, &a);
        assert_eq!(ns.len(), 1);
        assert!(mat_vec(&f, &a, &ns[0]).iter().all(|x| *x == 0));
    }

    #[test]
    fn subquotient_of_shift() {
        let f = Fp::default();
        let m = shift(&f, &[4]);
        let op = SparseOp::new(&f, &m);
        let u = Echelon::full(&f, 4);
        let w = u.image(&f, &op).image(&f, &op);
        let q = subquotient_op(&f, &op, &u, &w).unwrap();
        assert_eq!(nilpotent_partition(&f, &q), Some(vec![2]));
    }
}
