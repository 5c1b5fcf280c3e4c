//! Truncated power series k[x]/(x^P) and matrices over it.
//!
//! All arithmetic is exact in the quotient ring; a valuation of `None` means the
//! element vanishes modulo x^P.

use crate::field::Field;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Series<E> {
    c: Vec<E>,
}

impl<E: Clone + PartialEq> Series<E> {
    pub fn zero<F: Field<Elem = E>>(f: &F, prec: usize) -> Self {
        Series {
            c: vec![f.zero(); prec],
        }
    }

    pub fn one<F: Field<Elem = E>>(f: &F, prec: usize) -> Self {
        Self::x_pow(f, prec, 0)
    }

    pub fn x_pow<F: Field<Elem = E>>(f: &F, prec: usize, k: usize) -> Self {
        let mut s = Self::zero(f, prec);
        if k < prec {
            s.c[k] = f.one();
        }
        s
    }

    /// Coefficients beyond the precision are dropped.
    pub fn from_coeffs<F: Field<Elem = E>>(f: &F, prec: usize, coeffs: &[E]) -> Self {
        let mut s = Self::zero(f, prec);
        for (d, c) in s.c.iter_mut().zip(coeffs) {
            *d = c.clone();
        }
        s
    }

    pub fn prec(&self) -> usize {
        self.c.len()
    }

    pub fn coeffs(&self) -> &[E] {
        &self.c
    }

    pub fn coeff(&self, k: usize) -> &E {
        &self.c[k]
    }

    pub fn valuation<F: Field<Elem = E>>(&self, f: &F) -> Option<usize> {
        self.c.iter().position(|x| !f.is_zero(x))
    }

    pub fn is_zero<F: Field<Elem = E>>(&self, f: &F) -> bool {
        self.valuation(f).is_none()
    }

    pub fn add<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Self {
        Series {
            c: self.c.iter().zip(&o.c).map(|(a, b)| f.add(a, b)).collect(),
        }
    }

    pub fn sub<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Self {
        Series {
            c: self.c.iter().zip(&o.c).map(|(a, b)| f.sub(a, b)).collect(),
        }
    }

    pub fn neg<F: Field<Elem = E>>(&self, f: &F) -> Self {
        Series {
            c: self.c.iter().map(|a| f.neg(a)).collect(),
        }
    }

    pub fn scale<F: Field<Elem = E>>(&self, f: &F, k: &E) -> Self {
        Series {
            c: self.c.iter().map(|a| f.mul(a, k)).collect(),
        }
    }

    pub fn mul<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Self {
        let prec = self.prec();
        let mut out = Self::zero(f, prec);
        for (i, a) in self.c.iter().enumerate() {
            if f.is_zero(a) {
                continue;
            }
            for (j, b) in o.c.iter().take(prec - i).enumerate() {
                if !f.is_zero(b) {
                    f.mul_add(&mut out.c[i + j], a, b);
                }
            }
        }
        out
    }

    /// Multiplication by x^k.
    pub fn shift_up<F: Field<Elem = E>>(&self, f: &F, k: usize) -> Self {
        let prec = self.prec();
        let mut out = Self::zero(f, prec);
        for i in k..prec {
            out.c[i] = self.c[i - k].clone();
        }
        out
    }

    /// Some `y` with `x^k y = self`; requires valuation at least `k`.
    /// The top `k` coefficients of `y` are not determined and are set to zero.
    pub fn shift_down<F: Field<Elem = E>>(&self, f: &F, k: usize) -> Self {
        let prec = self.prec();
        let mut out = Self::zero(f, prec);
        for i in k..prec {
            out.c[i - k] = self.c[i].clone();
        }
        out
    }

    /// Inverse of a unit; `None` when the constant term vanishes.
    pub fn inverse<F: Field<Elem = E>>(&self, f: &F) -> Option<Self> {
        let prec = self.prec();
        let c0inv = f.inv(&self.c[0])?;
        let mut out = Self::zero(f, prec);
        out.c[0] = c0inv.clone();
        for k in 1..prec {
            let mut acc = f.zero();
            for j in 1..=k {
                f.mul_add(&mut acc, &self.c[j], &out.c[k - j]);
            }
            out.c[k] = f.neg(&f.mul(&acc, &c0inv));
        }
        Some(out)
    }

    pub fn with_prec<F: Field<Elem = E>>(&self, f: &F, prec: usize) -> Self {
        Self::from_coeffs(f, prec, &self.c)
    }
}

/// Row-major matrix over the truncated series ring.
pub type SMat<E> = Vec<Vec<Series<E>>>;

pub fn smat_zero<F: Field>(f: &F, rows: usize, cols: usize, prec: usize) -> SMat<F::Elem> {
    vec![vec![Series::zero(f, prec); cols]; rows]
}

pub fn smat_identity<F: Field>(f: &F, n: usize, prec: usize) -> SMat<F::Elem> {
    let mut m = smat_zero(f, n, n, prec);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Series::one(f, prec);
    }
    m
}

pub fn smat_mul<F: Field>(
    f: &F,
    a: &SMat<F::Elem>,
    b: &SMat<F::Elem>,
    prec: usize,
) -> SMat<F::Elem> {
    let cols = b.first().map_or(0, |r| r.len());
    let mut out = smat_zero(f, a.len(), cols, prec);
    for (i, row) in a.iter().enumerate() {
        for (k, aik) in row.iter().enumerate() {
            if aik.is_zero(f) {
                continue;
            }
            for j in 0..cols {
                if !b[k][j].is_zero(f) {
                    out[i][j] = out[i][j].add(f, &aik.mul(f, &b[k][j]));
                }
            }
        }
    }
    out
}

pub fn smat_vec<F: Field>(
    f: &F,
    a: &SMat<F::Elem>,
    v: &[Series<F::Elem>],
    prec: usize,
) -> Vec<Series<F::Elem>> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(Series::zero(f, prec), |acc, (x, y)| {
                    acc.add(f, &x.mul(f, y))
                })
        })
        .collect()
}

pub fn smat_is_zero<F: Field>(f: &F, a: &SMat<F::Elem>) -> bool {
    a.iter().all(|r| r.iter().all(|e| e.is_zero(f)))
}

/// Result of diagonalizing `a` as `left * a * right = diag(x^{v_1}, …, x^{v_rank}, 0, …)`.
#[derive(Debug, Clone)]
pub struct SmithForm<E> {
    pub valuations: Vec<usize>,
    pub left: SMat<E>,
    pub left_inv: SMat<E>,
    pub right: SMat<E>,
    pub right_inv: SMat<E>,
    pub rows: usize,
    pub cols: usize,
}

impl<E> SmithForm<E> {
    pub fn rank(&self) -> usize {
        self.valuations.len()
    }
}

fn swap_rows<E>(m: &mut SMat<E>, i: usize, j: usize) {
    m.swap(i, j);
}

fn swap_cols<E>(m: &mut SMat<E>, i: usize, j: usize) {
    for row in m.iter_mut() {
        row.swap(i, j);
    }
}

/// row_i -= c * row_j
fn row_axpy<F: Field>(f: &F, m: &mut SMat<F::Elem>, i: usize, j: usize, c: &Series<F::Elem>) {
    let src = m[j].clone();
    for (d, s) in m[i].iter_mut().zip(&src) {
        if !s.is_zero(f) {
            *d = d.sub(f, &c.mul(f, s));
        }
    }
}

/// col_i -= c * col_j
fn col_axpy<F: Field>(f: &F, m: &mut SMat<F::Elem>, i: usize, j: usize, c: &Series<F::Elem>) {
    for row in m.iter_mut() {
        if !row[j].is_zero(f) {
            let t = c.mul(f, &row[j]);
            row[i] = row[i].sub(f, &t);
        }
    }
}

/// Smith reduction over k[x]/(x^prec) by minimal-valuation pivoting
/// (row-major first among ties). Transforms and their inverses are tracked.
pub fn smith<F: Field>(
    f: &F,
    a: &SMat<F::Elem>,
    rows: usize,
    cols: usize,
    prec: usize,
) -> SmithForm<F::Elem> {
    let mut m: SMat<F::Elem> = a
        .iter()
        .map(|r| r.iter().map(|e| e.with_prec(f, prec)).collect())
        .collect();
    let mut left = smat_identity(f, rows, prec);
    let mut left_inv = smat_identity(f, rows, prec);
    let mut right = smat_identity(f, cols, prec);
    let mut right_inv = smat_identity(f, cols, prec);
    let mut valuations = Vec::new();
    for t in 0..rows.min(cols) {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if let Some(v) = m[i][j].valuation(f) {
                    if best.map_or(true, |(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, pi, pj)) = best else { break };
        if pi != t {
            swap_rows(&mut m, t, pi);
            swap_rows(&mut left, t, pi);
            swap_cols(&mut left_inv, t, pi);
        }
        if pj != t {
            swap_cols(&mut m, t, pj);
            swap_cols(&mut right, t, pj);
            swap_rows(&mut right_inv, t, pj);
        }
        let unit = m[t][t].shift_down(f, v);
        let uinv = unit.inverse(f).expect("pivot quotient is a unit");
        for e in m[t].iter_mut() {
            *e = e.mul(f, &uinv);
        }
        for e in left[t].iter_mut() {
            *e = e.mul(f, &uinv);
        }
        for row in left_inv.iter_mut() {
            row[t] = row[t].mul(f, &unit);
        }
        for i in t + 1..rows {
            if m[i][t].is_zero(f) {
                continue;
            }
            let c = m[i][t].shift_down(f, v);
            row_axpy(f, &mut m, i, t, &c);
            row_axpy(f, &mut left, i, t, &c);
            // inverse: col_t += c * col_i
            col_axpy(f, &mut left_inv, t, i, &c.neg(f));
        }
        for j in t + 1..cols {
            if m[t][j].is_zero(f) {
                continue;
            }
            let c = m[t][j].shift_down(f, v);
            col_axpy(f, &mut m, j, t, &c);
            col_axpy(f, &mut right, j, t, &c);
            // inverse: row_t += c * row_j
            row_axpy(f, &mut right_inv, t, j, &c.neg(f));
        }
        valuations.push(v);
    }
    SmithForm {
        valuations,
        left,
        left_inv,
        right,
        right_inv,
        rows,
        cols,
    }
}

/// A basis of the kernel (over the valuation ring) as columns of the right transform.
pub fn kernel_basis<F: Field>(s: &SmithForm<F::Elem>) -> Vec<Vec<Series<F::Elem>>> {
    (s.rank()..s.cols)
        .map(|j| s.right.iter().map(|row| row[j].clone()).collect())
        .collect()
}
