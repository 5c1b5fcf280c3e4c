//! Modules that are free over k[[x]] (torsion-free modules), stored as a basis
//! together with the matrix of z. Used where truncation would blur the answer:
//! duals, reflexivity and Ext groups with torsion-free targets.

use crate::error::{defect, precision, Result};
use crate::field::Field;
use crate::linalg::{zeros, Matrix};
use crate::ring::RingElem;
use crate::series::{smat_identity, smat_mul, smat_vec, smat_zero, smith, SMat, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<F: Field> {
    n: usize,
    rank: usize,
    prec: usize,
    /// Column `j` holds the coordinates of `z * e_j`.
    z: SMat<F::Elem>,
    label: String,
}

impl<F: Field> Lattice<F> {
    pub fn new(n: usize, prec: usize, z: SMat<F::Elem>, label: impl Into<String>) -> Self {
        Lattice {
            n,
            rank: z.len(),
            prec,
            z,
            label: label.into(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn prec(&self) -> usize {
        self.prec
    }

    pub fn z(&self) -> &SMat<F::Elem> {
        &self.z
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// O_i = O_n/(z^i) with basis 1, z, …, z^{i-1}.
    pub fn structure(f: &F, n: usize, i: usize, prec: usize) -> Self {
        let mut z = smat_zero(f, i, i, prec);
        for b in 0..i.saturating_sub(1) {
            z[b + 1][b] = Series::one(f, prec);
        }
        Lattice::new(n, prec, z, format!("O_{i}"))
    }

    /// An ideal of O_n given by generators, as a sublattice of O_n = ⊕ k[[x]] z^b.
    pub fn ideal(
        f: &F,
        n: usize,
        gens: &[RingElem<F::Elem>],
        prec: usize,
        label: &str,
    ) -> Result<Self> {
        let mut cols: Vec<Vec<Series<F::Elem>>> = Vec::new();
        for g in gens {
            for c in 0..n {
                let mut v = vec![Series::zero(f, prec); n];
                for (a, b, coef) in g.terms(f) {
                    if b + c < n && a < prec {
                        let mut s = v[b + c].coeffs().to_vec();
                        s[a] = f.add(&s[a], coef);
                        v[b + c] = Series::from_coeffs(f, prec, &s);
                    }
                }
                cols.push(v);
            }
        }
        let ambient = Lattice::structure(f, n, n, prec);
        Lattice::span_in(f, &ambient, &cols, label)
    }

    /// The sublattice spanned by `cols` (coordinate vectors in `ambient`), which must be z-stable.
    pub fn span_in(
        f: &F,
        ambient: &Lattice<F>,
        cols: &[Vec<Series<F::Elem>>],
        label: &str,
    ) -> Result<Self> {
        let (n, m, prec) = (ambient.n, ambient.rank, ambient.prec);
        let gmat: SMat<F::Elem> = (0..m)
            .map(|i| cols.iter().map(|c| c[i].clone()).collect())
            .collect();
        let s = smith(f, &gmat, m, cols.len(), prec);
        let r = s.rank();
        if s.valuations.iter().any(|&v| 2 * v >= prec) {
            return precision(format!(
                "sublattice valuations {:?} too large for precision {prec}",
                s.valuations
            ));
        }
        // basis b_t = left_inv[:, t] * x^{v_t}
        let basis: Vec<Vec<Series<F::Elem>>> = (0..r)
            .map(|t| {
                (0..m)
                    .map(|i| s.left_inv[i][t].shift_up(f, s.valuations[t]))
                    .collect()
            })
            .collect();
        let mut z = smat_zero(f, r, r, prec);
        for (t, b) in basis.iter().enumerate() {
            let zb = smat_vec(f, &ambient.z, b, prec);
            let lz = smat_vec(f, &s.left, &zb, prec);
            for (u, e) in lz.iter().enumerate() {
                if u >= r {
                    if !e.is_zero(f) {
                        return defect("sublattice is not stable under z");
                    }
                    continue;
                }
                match e.valuation(f) {
                    Some(v) if v < s.valuations[u] => {
                        return defect("sublattice is not stable under z")
                    }
                    _ => z[u][t] = e.shift_down(f, s.valuations[u]),
                }
            }
        }
        Ok(Lattice::new(n, prec, z, label))
    }

    pub fn direct_sum(&self, f: &F, other: &Self) -> Self {
        let r = self.rank + other.rank;
        let mut z = smat_zero(f, r, r, self.prec);
        for i in 0..self.rank {
            for j in 0..self.rank {
                z[i][j] = self.z[i][j].clone();
            }
        }
        for i in 0..other.rank {
            for j in 0..other.rank {
                z[self.rank + i][self.rank + j] = other.z[i][j].with_prec(f, self.prec);
            }
        }
        Lattice::new(
            self.n,
            self.prec,
            z,
            format!("{} + {}", self.label, other.label),
        )
    }

    /// Action of a ring element, as a k[[x]]-matrix.
    pub fn action(&self, f: &F, r: &RingElem<F::Elem>) -> SMat<F::Elem> {
        let prec = self.prec;
        let mut zpow = vec![smat_identity(f, self.rank, prec)];
        for b in 1..self.n {
            let next = smat_mul(f, &self.z, &zpow[b - 1], prec);
            zpow.push(next);
        }
        let mut out = smat_zero(f, self.rank, self.rank, prec);
        for (a, b, c) in r.terms(f) {
            let mono = Series::x_pow(f, prec, a).scale(f, c);
            for i in 0..self.rank {
                for j in 0..self.rank {
                    if !zpow[b][i][j].is_zero(f) {
                        out[i][j] = out[i][j].add(f, &mono.mul(f, &zpow[b][i][j]));
                    }
                }
            }
        }
        out
    }

    /// Field-level matrices of x and z on L / x^p L, basis x^a e_j at index `a * rank + j`.
    pub fn truncate(&self, f: &F, p: usize) -> Result<(Matrix<F::Elem>, Matrix<F::Elem>)> {
        if 2 * p > self.prec {
            return precision(format!(
                "lattice stored at precision {} cannot be read at {p}",
                self.prec
            ));
        }
        let r = self.rank;
        let d = r * p;
        let mut x = zeros(f, d, d);
        let mut z = zeros(f, d, d);
        for a in 0..p {
            for j in 0..r {
                let src = a * r + j;
                if a + 1 < p {
                    x.set((a + 1) * r + j, src, f.one());
                }
                for l in 0..r {
                    for (t, c) in self.z[l][j].coeffs().iter().enumerate().take(p - a) {
                        if !f.is_zero(c) {
                            z.set((a + t) * r + l, src, c.clone());
                        }
                    }
                }
            }
        }
        Ok((x, z))
    }

    /// Hom(M, O_n) as a lattice, together with its basis written as vectors of
    /// n x rank(M) matrices (index `i * rank + j`).
    pub fn dual(&self, f: &F) -> (Lattice<F>, Vec<Vec<Series<F::Elem>>>) {
        let (n, r, prec) = (self.n, self.rank, self.prec);
        let zo = Lattice::structure(f, n, n, prec).z;
        let dim = n * r;
        let mut c = smat_zero(f, dim, dim, prec);
        for i in 0..n {
            for j in 0..r {
                let row = i * r + j;
                for k in 0..r {
                    c[row][i * r + k] = c[row][i * r + k].add(f, &self.z[k][j]);
                }
                for k in 0..n {
                    c[row][k * r + j] = c[row][k * r + j].sub(f, &zo[i][k]);
                }
            }
        }
        let s = smith(f, &c, dim, dim, prec);
        let rk = s.rank();
        let basis: Vec<Vec<Series<F::Elem>>> = (rk..dim)
            .map(|col| (0..dim).map(|i| s.right[i][col].clone()).collect())
            .collect();
        let m = basis.len();
        let mut zd = smat_zero(f, m, m, prec);
        for (t, phi) in basis.iter().enumerate() {
            // (z . phi)[i][j] = sum_k zo[i][k] phi[k][j]
            let mut v = vec![Series::zero(f, prec); dim];
            for i in 0..n {
                for j in 0..r {
                    for k in 0..n {
                        if !zo[i][k].is_zero(f) {
                            v[i * r + j] = v[i * r + j].add(f, &zo[i][k].mul(f, &phi[k * r + j]));
                        }
                    }
                }
            }
            for u in 0..m {
                let coord = (0..dim).fold(Series::zero(f, prec), |acc, k| {
                    acc.add(f, &s.right_inv[rk + u][k].mul(f, &v[k]))
                });
                zd[u][t] = coord;
            }
        }
        (
            Lattice::new(n, prec, zd, format!("dual({})", self.label)),
            basis,
        )
    }

    /// Whether the natural map into the double dual is an isomorphism.
    pub fn is_reflexive(&self, f: &F) -> bool {
        let (d1, k1) = self.dual(f);
        let (d2, k2) = d1.dual(f);
        let (n, r, s1, s2, prec) = (self.n, self.rank, d1.rank, d2.rank, self.prec);
        if s2 != r {
            return false;
        }
        // ev(e_i) is the n x s1 matrix whose column s is phi_s(e_i)
        let dim2 = n * s1;
        let mut vecs: SMat<F::Elem> = smat_zero(f, dim2, r, prec);
        for i in 0..r {
            for a in 0..n {
                for (s, phi) in k1.iter().enumerate() {
                    vecs[a * s1 + s][i] = phi[a * r + i].clone();
                }
            }
        }
        // coordinates in the double-dual basis: solve K2 y = v via the saturated basis
        let k2m: SMat<F::Elem> = (0..dim2)
            .map(|row| k2.iter().map(|b| b[row].clone()).collect())
            .collect();
        let aug_rows = dim2;
        let mut aug = smat_zero(f, aug_rows, s2 + r, prec);
        for row in 0..aug_rows {
            for c in 0..s2 {
                aug[row][c] = k2m[row][c].clone();
            }
            for c in 0..r {
                aug[row][s2 + c] = vecs[row][c].clone();
            }
        }
        // the evaluation image equals the double dual iff both span the same lattice
        let sk = smith(f, &k2m, dim2, s2, prec);
        let sa = smith(f, &aug, aug_rows, s2 + r, prec);
        let se = smith(f, &vecs, dim2, r, prec);
        sk.valuations == sa.valuations && se.valuations.iter().all(|&v| v == 0) && se.rank() == s2
    }
}
