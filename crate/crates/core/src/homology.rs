//! Periodic free resolutions over O_n and Ext groups computed from their Hom complexes.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{defect, invalid, precision, precondition, Result};
use crate::field::Field;
use crate::filtrations::{analyze, generalized_rank};
use crate::lattice::Lattice;
use crate::linalg::{mat_mul, nullspace, rank, zeros, Matrix};
use crate::module::{module_from_presentation, standard_module, LocalModule, StandardKind};
use crate::normal_forms::{certificate, Certificate, ExtMatrix};
use crate::ring::{PresentationMatrix, RingElem};
use crate::series::{smat_mul, smat_zero, smith, SMat, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResolutionTarget {
    /// O_i over O_n
    Structure { i: usize },
    /// O_C/(x^i) over O_2
    Torsion { i: usize },
    /// the ideal (x, z) of a point of C in O_n
    IdealStalk,
}

/// F_L -> ... -> F_1 -> F_0 with `ranks[k]` = rank F_k and `differentials[k - 1]` = d_k.
#[derive(Debug, Clone)]
pub struct Resolution<E> {
    pub target: ResolutionTarget,
    pub n: usize,
    pub ranks: Vec<usize>,
    pub differentials: Vec<PresentationMatrix<E>>,
}

impl<E: Clone + PartialEq> Resolution<E> {
    pub fn len(&self) -> usize {
        self.differentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.differentials.is_empty()
    }

    /// Entry (row, col) of d_k.
    pub fn entry(&self, k: usize, row: usize, col: usize) -> &RingElem<E> {
        &self.differentials[k - 1].relations()[col][row]
    }

    pub fn to_json<F: Field<Elem = E>>(&self, f: &F) -> Value {
        json!({
            "target": self.target,
            "n": self.n,
            "ranks": self.ranks,
            "differentials": self.differentials.iter().map(|d| d.to_json(f)).collect::<Vec<_>>(),
        })
    }
}

fn elem<F: Field>(f: &F, n: usize, p: usize, terms: &[(i64, usize, usize)]) -> RingElem<F::Elem> {
    RingElem::from_terms(f, n, p, terms).expect("exponents fit the base precision")
}

/// Columns are the images of the basis of the source.
fn matrix_from_cols<F: Field>(
    n: usize,
    p: usize,
    rows: usize,
    cols: Vec<Vec<RingElem<F::Elem>>>,
) -> PresentationMatrix<F::Elem> {
    PresentationMatrix::new(n, p, rows, cols).expect("well-formed differential")
}

/// The first `length` differentials of the periodic resolution of `target`.
pub fn resolution_of<F: Field>(
    f: &F,
    target: ResolutionTarget,
    n: usize,
    length: usize,
) -> Result<Resolution<F::Elem>> {
    if length == 0 {
        return invalid("resolution length must be at least 1");
    }
    match target {
        ResolutionTarget::Structure { i } => {
            if i == 0 || i > n {
                return invalid(format!("O_{i} requires 1 <= i <= n = {n}"));
            }
            let p = 2;
            if i == n {
                let ranks = std::iter::once(1)
                    .chain(std::iter::repeat(0).take(length))
                    .collect::<Vec<_>>();
                let differentials = (1..=length)
                    .map(|k| matrix_from_cols::<F>(n, p, ranks[k - 1], vec![]))
                    .collect();
                return Ok(Resolution {
                    target,
                    n,
                    ranks,
                    differentials,
                });
            }
            let differentials = (1..=length)
                .map(|k| {
                    let e = if k % 2 == 1 { i } else { n - i };
                    matrix_from_cols::<F>(n, p, 1, vec![vec![elem(f, n, p, &[(1, 0, e)])]])
                })
                .collect();
            Ok(Resolution {
                target,
                n,
                ranks: vec![1; length + 1],
                differentials,
            })
        }
        ResolutionTarget::Torsion { i } => {
            if n != 2 {
                return precondition("torsion resolutions are built over O_2");
            }
            if i == 0 {
                return invalid("torsion exponent must be at least 1");
            }
            let p = i + 1;
            let z = elem(f, n, p, &[(1, 0, 1)]);
            let xi = elem(f, n, p, &[(1, i, 0)]);
            let zero = RingElem::zero(f, n, p);
            let mut differentials = vec![matrix_from_cols::<F>(
                n,
                p,
                1,
                vec![vec![z.clone()], vec![xi.clone()]],
            )];
            for k in 2..=length {
                // f on even steps, its sign twin on odd steps, so consecutive products vanish
                let off = if k % 2 == 0 { xi.neg(f) } else { xi.clone() };
                differentials.push(matrix_from_cols::<F>(
                    n,
                    p,
                    2,
                    vec![vec![z.clone(), zero.clone()], vec![off, z.clone()]],
                ));
            }
            let mut ranks = vec![2; length + 1];
            ranks[0] = 1;
            Ok(Resolution {
                target,
                n,
                ranks,
                differentials,
            })
        }
        ResolutionTarget::IdealStalk => {
            if n < 2 {
                return invalid("point ideals are resolved over O_n with n >= 2");
            }
            let p = 2;
            let x = elem(f, n, p, &[(1, 1, 0)]);
            let z = elem(f, n, p, &[(1, 0, 1)]);
            let zn = elem(f, n, p, &[(1, 0, n - 1)]);
            let zero = RingElem::zero(f, n, p);
            let differentials = (1..=length)
                .map(|k| {
                    if k % 2 == 1 {
                        matrix_from_cols::<F>(
                            n,
                            p,
                            2,
                            vec![vec![x.clone(), z.clone()], vec![zn.clone(), zero.clone()]],
                        )
                    } else {
                        matrix_from_cols::<F>(
                            n,
                            p,
                            2,
                            vec![vec![zero.clone(), z.clone()], vec![zn.clone(), x.neg(f)]],
                        )
                    }
                })
                .collect();
            Ok(Resolution {
                target,
                n,
                ranks: vec![2; length + 1],
                differentials,
            })
        }
    }
}

/// The augmentation F_0 -> O_n for the point ideal: e_1 -> z, e_2 -> -x.
pub fn ideal_augmentation<F: Field>(f: &F, n: usize, p: usize) -> Vec<RingElem<F::Elem>> {
    vec![elem(f, n, p, &[(1, 0, 1)]), elem(f, n, p, &[(-1, 1, 0)])]
}

/// The module resolved, realized at precision `p`.
pub fn target_module<F: Field>(
    f: &F,
    target: ResolutionTarget,
    n: usize,
    p: usize,
) -> Result<LocalModule<F>> {
    match target {
        ResolutionTarget::Structure { i } => {
            standard_module(f, &StandardKind::Structure { i }, n, p)
        }
        ResolutionTarget::Torsion { i } => {
            standard_module(f, &StandardKind::Torsion { k: i }, n, p)
        }
        ResolutionTarget::IdealStalk => standard_module(f, &StandardKind::PointIdeal, n, p),
    }
}

/// Field matrix of a ring matrix between free modules A_p^c -> A_p^r,
/// basis x^a z^b e_j at index j n p + a n + b.
pub fn free_matrix<F: Field>(f: &F, d: &PresentationMatrix<F::Elem>, p: usize) -> Matrix<F::Elem> {
    let n = d.n();
    let block = n * p;
    let (r, c) = (d.rows(), d.relations().len());
    let mut m = zeros(f, r * block, c * block);
    for (j, col) in d.relations().iter().enumerate() {
        for (i, e) in col.iter().enumerate() {
            for (a2, b2, coef) in e.terms(f) {
                for a in 0..p.saturating_sub(a2) {
                    for b in 0..n.saturating_sub(b2) {
                        let (row, src) = (i * block + (a + a2) * n + b + b2, j * block + a * n + b);
                        let v = f.add(m.get(row, src), coef);
                        m.set(row, src, v);
                    }
                }
            }
        }
    }
    m
}

fn compose_is_zero<F: Field>(
    f: &F,
    a: &PresentationMatrix<F::Elem>,
    b: &PresentationMatrix<F::Elem>,
    p: usize,
) -> Result<bool> {
    let (a, b) = (a.lift(f, p)?, b.lift(f, p)?);
    for col in b.relations() {
        for i in 0..a.rows() {
            let mut acc = RingElem::zero(f, a.n(), p);
            for (l, e) in col.iter().enumerate() {
                acc = acc.add(f, &a.relations()[l][i].mul(f, e));
            }
            if !acc.is_zero(f) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionCheck {
    /// dim H_k of the truncated complex at p and 2p, k = 0..L-1.
    pub homology: Vec<usize>,
    pub homology_doubled: Vec<usize>,
    pub composition_zero: bool,
}

fn homology_dims<F: Field>(f: &F, res: &Resolution<F::Elem>, p: usize) -> Vec<usize> {
    let mats: Vec<Matrix<F::Elem>> = res
        .differentials
        .iter()
        .map(|d| free_matrix(f, d, p))
        .collect();
    let block = res.n * p;
    (0..res.len())
        .map(|k| {
            let ker = if k == 0 {
                res.ranks[0] * block
            } else {
                nullspace(f, &mats[k - 1]).len()
            };
            ker - rank(f, &mats[k])
        })
        .collect()
}

/// Composition zero, vanishing homology in degrees >= 2, stable H_1, and
/// H_0 = coker d_1 matching the resolved module.
pub fn check_resolution<F: Field>(
    f: &F,
    res: &Resolution<F::Elem>,
    p: usize,
) -> Result<ResolutionCheck> {
    let mut composition_zero = true;
    for w in res.differentials.windows(2) {
        for q in [p, 2 * p] {
            composition_zero &= compose_is_zero(f, &w[0], &w[1], q)?;
        }
    }
    if !composition_zero {
        return defect("consecutive differentials do not compose to zero");
    }
    let homology = homology_dims(f, res, p);
    let homology_doubled = homology_dims(f, res, 2 * p);
    if homology.iter().skip(2).any(|&h| h != 0) {
        return defect(format!("resolution is not exact: homology {homology:?}"));
    }
    if homology.get(1) != homology_doubled.get(1) {
        return precision(format!(
            "first homology {homology:?} is not stable at 2p: {homology_doubled:?}"
        ));
    }
    let h0 = module_from_presentation(f, res.differentials[0].lift(f, p)?)?;
    let target = target_module(f, res.target, res.n, p)?;
    let (a, b) = (analyze(&h0)?, analyze(&target)?);
    if a.rank != b.rank || a.first.graded != b.first.graded {
        return defect("cokernel of the first differential is not the resolved module");
    }
    Ok(ResolutionCheck {
        homology,
        homology_doubled,
        composition_zero,
    })
}

/// One Ext group: free rank over k[[x]] and torsion lengths; `dim` is the
/// k-dimension when the group has finite length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtGroup {
    pub degree: usize,
    pub slope: usize,
    pub torsion: Vec<usize>,
    pub dim: Option<usize>,
}

impl ExtGroup {
    fn new(degree: usize, slope: usize, mut torsion: Vec<usize>) -> Self {
        torsion.sort_unstable_by(|a, b| b.cmp(a));
        let dim = (slope == 0).then(|| torsion.iter().sum());
        ExtGroup {
            degree,
            slope,
            torsion,
            dim,
        }
    }
}

/// delta^k : Hom(F_k, N) -> Hom(F_{k+1}, N) over k[[x]].
fn lattice_coboundary<F: Field>(
    f: &F,
    res: &Resolution<F::Elem>,
    lat: &Lattice<F>,
    k: usize,
) -> SMat<F::Elem> {
    let m = lat.rank();
    let (rk, rk1) = (res.ranks[k], res.ranks[k + 1]);
    let mut out = smat_zero(f, rk1 * m, rk * m, lat.prec());
    for j in 0..rk1 {
        for l in 0..rk {
            let act = lat.action(f, res.entry(k + 1, l, j));
            for u in 0..m {
                for v in 0..m {
                    out[j * m + u][l * m + v] = act[u][v].clone();
                }
            }
        }
    }
    out
}

fn lattice_ext<F: Field>(
    f: &F,
    res: &Resolution<F::Elem>,
    lat: &Lattice<F>,
    max_degree: usize,
) -> Vec<ExtGroup> {
    let m = lat.rank();
    let prec = lat.prec();
    let deltas: Vec<_> = (0..=max_degree)
        .map(|k| {
            let d = lattice_coboundary(f, res, lat, k);
            smith(f, &d, res.ranks[k + 1] * m, res.ranks[k] * m, prec)
        })
        .collect();
    (0..=max_degree)
        .map(|k| {
            let a = res.ranks[k] * m;
            let (rk, rprev) = (
                deltas[k].rank(),
                if k == 0 { 0 } else { deltas[k - 1].rank() },
            );
            let torsion = if k == 0 {
                vec![]
            } else {
                deltas[k - 1]
                    .valuations
                    .iter()
                    .copied()
                    .filter(|&v| v > 0)
                    .collect()
            };
            ExtGroup::new(k, a - rk - rprev, torsion)
        })
        .collect()
}

fn field_coboundary<F: Field>(
    f: &F,
    res: &Resolution<F::Elem>,
    nm: &LocalModule<F>,
    k: usize,
) -> Result<Matrix<F::Elem>> {
    let d = nm.dim();
    let (rk, rk1) = (res.ranks[k], res.ranks[k + 1]);
    let mut out = zeros(f, rk1 * d, rk * d);
    for j in 0..rk1 {
        for l in 0..rk {
            let e = res.entry(k + 1, l, j).lift(f, nm.p())?;
            for v in 0..d {
                let mut unit = vec![f.zero(); d];
                unit[v] = f.one();
                for (u, c) in nm.act(f, &e, &unit).into_iter().enumerate() {
                    out.set(j * d + u, l * d + v, c);
                }
            }
        }
    }
    Ok(out)
}

fn field_ext_dims<F: Field>(
    f: &F,
    res: &Resolution<F::Elem>,
    nm: &LocalModule<F>,
    max_degree: usize,
) -> Result<Vec<usize>> {
    let deltas = (0..=max_degree)
        .map(|k| field_coboundary(f, res, nm, k))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..=max_degree)
        .map(|k| {
            let ker = nullspace(f, &deltas[k]).len();
            ker - if k == 0 { 0 } else { rank(f, &deltas[k - 1]) }
        })
        .collect())
}

fn lattice_precision(res_len: usize) -> usize {
    32.max(8 * res_len)
}

/// Ext^k(target, N) for k = 0..=max_degree. Torsion-free targets with a structural
/// lattice are handled over k[[x]]; finite-length targets over the field, both at two precisions.
pub fn ext_dims<F: Field>(
    f: &F,
    res: &Resolution<F::Elem>,
    nm: &LocalModule<F>,
    max_degree: usize,
) -> Result<Vec<ExtGroup>> {
    if res.n != nm.n() {
        return invalid("resolution and coefficient module live over different rings");
    }
    if max_degree + 1 > res.len() {
        return invalid(format!(
            "Ext up to degree {max_degree} needs a resolution of length {}",
            max_degree + 1
        ));
    }
    let prec = lattice_precision(res.len());
    if let Certificate::TorsionFree(lo) = certificate(f, nm.expr(), prec)? {
        let Certificate::TorsionFree(hi) = certificate(f, nm.expr(), 2 * prec)? else {
            return defect("certificate changed with precision");
        };
        let (a, b) = (
            lattice_ext(f, res, &lo, max_degree),
            lattice_ext(f, res, &hi, max_degree),
        );
        if a != b {
            return precision(format!(
                "Ext groups differ between precisions {prec} and {}",
                2 * prec
            ));
        }
        return Ok(a);
    }
    if generalized_rank(nm)? != 0 {
        return precondition("coefficient module is neither finite nor structurally torsion-free");
    }
    let lo = field_ext_dims(f, res, nm, max_degree)?;
    if nm.expr().rebuildable() {
        let hi = field_ext_dims(f, res, &nm.at_precision(2 * nm.p())?, max_degree)?;
        if lo != hi {
            return precision(format!(
                "Ext dimensions {lo:?} at p differ from {hi:?} at 2p"
            ));
        }
    }
    Ok(lo
        .into_iter()
        .enumerate()
        .map(|(k, d)| ExtGroup {
            degree: k,
            slope: 0,
            torsion: vec![],
            dim: Some(d),
        })
        .collect())
}

/// Sum of Smith valuations and rank of the lattice spanned by the columns.
fn index_and_rank<F: Field>(
    f: &F,
    cols: &[Vec<Series<F::Elem>>],
    dim: usize,
    prec: usize,
) -> (usize, usize) {
    let m: SMat<F::Elem> = (0..dim)
        .map(|i| cols.iter().map(|c| c[i].clone()).collect())
        .collect();
    let s = smith(f, &m, dim, cols.len(), prec);
    (s.valuations.iter().sum(), s.rank())
}

/// Cocycles and coboundaries of Ext^1(T_i, N) for a lattice N.
fn ext1_pieces<F: Field>(
    f: &F,
    res: &Resolution<F::Elem>,
    lat: &Lattice<F>,
) -> (Vec<Vec<Series<F::Elem>>>, Vec<Vec<Series<F::Elem>>>) {
    let prec = lat.prec();
    let m = lat.rank();
    let d1 = lattice_coboundary(f, res, lat, 1);
    let s1 = smith(f, &d1, res.ranks[2] * m, res.ranks[1] * m, prec);
    let cocycles = crate::series::kernel_basis::<F>(&s1);
    let d0 = lattice_coboundary(f, res, lat, 0);
    let a = res.ranks[1] * m;
    let cob: Vec<Vec<Series<F::Elem>>> = (0..d0[0].len())
        .map(|j| (0..a).map(|i| d0[i][j].clone()).collect())
        .collect();
    (cocycles, cob)
}

/// Applies a lattice map blockwise to Hom(F_1, N) vectors.
fn push_forward<F: Field>(
    f: &F,
    map: &SMat<F::Elem>,
    blocks: usize,
    src_rank: usize,
    v: &[Series<F::Elem>],
    prec: usize,
) -> Vec<Series<F::Elem>> {
    let tr = map.len();
    let mut out = vec![Series::zero(f, prec); blocks * tr];
    for b in 0..blocks {
        for u in 0..tr {
            for w in 0..src_rank {
                if !map[u][w].is_zero(f) {
                    out[b * tr + u] =
                        out[b * tr + u].add(f, &map[u][w].mul(f, &v[b * src_rank + w]));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectingReport {
    pub exponent: usize,
    /// Ext^1(T_i, O_2) -> Ext^1(T_i, O_C) induced by reduction mod z is zero.
    pub vanishes: bool,
    /// Ext^1(T_i, zO_2) -> Ext^1(T_i, O_2) induced by inclusion is injective.
    pub inclusion_injective: bool,
    pub source_length: usize,
    pub line_length: usize,
}

fn connecting_at<F: Field>(f: &F, i: usize, prec: usize) -> Result<ConnectingReport> {
    let res = resolution_of(f, ResolutionTarget::Torsion { i }, 2, 3)?;
    let o2 = Lattice::structure(f, 2, 2, prec);
    let oc = Lattice::structure(f, 2, 1, prec);
    let r1 = res.ranks[1];
    let (k2, b2) = ext1_pieces(f, &res, &o2);
    let (kc, bc) = ext1_pieces(f, &res, &oc);
    let (nu_b2, rk_b2) = index_and_rank(f, &b2, r1 * 2, prec);
    let (nu_k2, _) = index_and_rank(f, &k2, r1 * 2, prec);
    let (nu_bc, rk_bc) = index_and_rank(f, &bc, r1, prec);
    let (nu_kc, _) = index_and_rank(f, &kc, r1, prec);
    // reduction O_2 -> O_C sends (1, z) to (1, 0)
    let mut red = smat_zero(f, 1, 2, prec);
    red[0][0] = Series::one(f, prec);
    let mut pushed: Vec<_> = k2
        .iter()
        .map(|v| push_forward(f, &red, r1, 2, v, prec))
        .collect();
    pushed.extend(bc.iter().cloned());
    let (nu_sum, rk_sum) = index_and_rank(f, &pushed, r1, prec);
    let vanishes = rk_sum == rk_bc && nu_sum == nu_bc;
    // inclusion O_C = zO_2 -> O_2 sends 1 to z
    let mut inc = smat_zero(f, 2, 1, prec);
    inc[1][0] = Series::one(f, prec);
    let mut pushed: Vec<_> = kc
        .iter()
        .map(|v| push_forward(f, &inc, r1, 1, v, prec))
        .collect();
    pushed.extend(b2.iter().cloned());
    let (nu_isum, rk_isum) = index_and_rank(f, &pushed, r1 * 2, prec);
    let line_length = nu_bc - nu_kc;
    let image_length = nu_b2 - nu_isum;
    Ok(ConnectingReport {
        exponent: i,
        vanishes,
        inclusion_injective: rk_isum == rk_b2 && image_length == line_length,
        source_length: nu_b2 - nu_k2,
        line_length,
    })
}

/// The canonical map Ext^1(T_i, O_2) -> Ext^1(T_i, O_C) and its companion from zO_2.
pub fn connecting_map<F: Field>(f: &F, i: usize) -> Result<ConnectingReport> {
    if i == 0 {
        return invalid("torsion exponent must be at least 1");
    }
    let prec = 32.max(8 * i);
    let lo = connecting_at(f, i, prec)?;
    let hi = connecting_at(f, i, 2 * prec)?;
    if lo != hi {
        return precision(format!(
            "connecting map differs between precisions {prec} and {}",
            2 * prec
        ));
    }
    Ok(lo)
}

pub fn connecting_map_vanishing<F: Field>(f: &F, i: usize) -> Result<bool> {
    Ok(connecting_map(f, i)?.vanishes)
}

/// Whether sigma^2 = 0 over k[x]/(x^prec).
pub fn obstruction_square<F: Field>(f: &F, sigma: &ExtMatrix<F::Elem>) -> Result<bool> {
    if sigma.rows != sigma.cols {
        return invalid("obstruction class must be a square matrix");
    }
    let sq = smat_mul(f, &sigma.entries, &sigma.entries, sigma.prec);
    Ok(sq.iter().all(|r| r.iter().all(|e| e.is_zero(f))))
}

/// Field-level check that an equivariant matrix squares to zero (used by the obstruction tests).
pub fn square_is_zero<F: Field>(f: &F, m: &Matrix<F::Elem>) -> bool {
    crate::linalg::is_zero_matrix(f, &mat_mul(f, m, m))
}
