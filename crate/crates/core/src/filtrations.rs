//! The two canonical filtrations, graded invariants over k[[x]], generalized rank,
//! characteristic functions and quasi-free types.

use serde::{Deserialize, Serialize};

use crate::error::{defect, precision, Result};
use crate::field::Field;
use crate::linalg::{mat_mul, nilpotent_partition, nullspace, subquotient_op, Echelon, SparseOp};
use crate::module::LocalModule;

/// A finitely generated k[[x]]-module: free rank plus torsion lengths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CxInvariants {
    pub rank: usize,
    pub torsion: Vec<usize>,
}

impl CxInvariants {
    pub fn zero() -> Self {
        CxInvariants {
            rank: 0,
            torsion: vec![],
        }
    }

    pub fn torsion_length(&self) -> usize {
        self.torsion.iter().sum()
    }

    pub fn is_free(&self) -> bool {
        self.torsion.is_empty()
    }
}

/// Splits the Jordan partitions of one piece at precisions `p` and `2p` into
/// free blocks (those that grow by exactly `p`) and torsion blocks (those that do not move).
pub fn invariants_from_partitions(lam: &[usize], mu: &[usize], p: usize) -> Result<CxInvariants> {
    let (sl, sm): (usize, usize) = (lam.iter().sum(), mu.iter().sum());
    if sm < sl || (sm - sl) % p != 0 {
        return precision(format!(
            "blocks {lam:?} at p = {p} and {mu:?} at 2p do not follow the growth law"
        ));
    }
    let r = (sm - sl) / p;
    let mut mu = mu.to_vec();
    mu.sort_unstable_by(|a, b| b.cmp(a));
    if r > mu.len() || mu[..r].iter().any(|&s| s < p) {
        return precision(format!(
            "free rank {r} does not fit the blocks {mu:?} at 2p = {}",
            2 * p
        ));
    }
    let torsion = mu[r..].to_vec();
    let mut shrunk: Vec<usize> = mu[..r].iter().map(|&s| s - p).filter(|&s| s > 0).collect();
    shrunk.extend(&torsion);
    shrunk.sort_unstable_by(|a, b| b.cmp(a));
    let mut lam = lam.to_vec();
    lam.sort_unstable_by(|a, b| b.cmp(a));
    if shrunk != lam {
        return precision(format!(
            "blocks {lam:?} at p = {p} and {mu:?} at 2p do not stabilize"
        ));
    }
    if let Some(&t) = torsion.first() {
        if t >= p {
            return precision(format!("torsion length {t} reaches the precision {p}"));
        }
    }
    Ok(CxInvariants { rank: r, torsion })
}

/// Single-precision reading used when a module cannot be rebuilt:
/// blocks of full length `p` are free, all others torsion.
pub fn invariants_single_precision(lam: &[usize], p: usize) -> CxInvariants {
    let rank = lam.iter().filter(|&&s| s >= p).count();
    let mut torsion: Vec<usize> = lam.iter().copied().filter(|&s| s < p).collect();
    torsion.sort_unstable_by(|a, b| b.cmp(a));
    CxInvariants { rank, torsion }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiltrationReport {
    pub which: Which,
    /// Dimensions of M_1, ..., M_{n+1} at the working precision.
    pub chain: Vec<usize>,
    /// Invariants of M_i / M_{i+1} for i = 1..n.
    pub graded: Vec<CxInvariants>,
    /// Dimensions of the graded pieces at the working precision.
    pub graded_dims: Vec<usize>,
}

impl FiltrationReport {
    pub fn ranks(&self) -> Vec<usize> {
        self.graded.iter().map(|g| g.rank).collect()
    }

    pub fn torsion_total(&self) -> usize {
        self.graded.iter().map(|g| g.torsion_length()).sum()
    }

    /// F(k) = sum of the ranks of the top k graded pieces.
    pub fn char_function(&self) -> CharFunction {
        let n = self.graded.len();
        let mut values = vec![0i64; n + 1];
        for k in 1..=n {
            values[k] = values[k - 1] + self.graded[n - k].rank as i64;
        }
        CharFunction {
            which: self.which,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharFunction {
    pub which: Which,
    pub values: Vec<i64>,
}

impl CharFunction {
    pub fn increments(&self) -> Vec<i64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn is_convex(&self) -> bool {
        self.increments().windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_concave(&self) -> bool {
        self.increments().windows(2).all(|w| w[0] >= w[1])
    }

    pub fn dominated_by(&self, other: &CharFunction) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

struct Pieces {
    chain: Vec<usize>,
    partitions: Vec<Vec<usize>>,
    dims: Vec<usize>,
}

/// Subspaces M_1 ⊃ ... ⊃ M_{n+1} of either filtration, as echelon spans.
fn chain_spaces<F: Field>(m: &LocalModule<F>, which: Which) -> Vec<Echelon<F::Elem>> {
    let f = m.field();
    let (n, d) = (m.n(), m.dim());
    match which {
        Which::First => {
            let zs = SparseOp::new(f, m.z());
            let mut out = vec![Echelon::full(f, d)];
            for _ in 0..n {
                let next = out.last().unwrap().image(f, &zs);
                out.push(next);
            }
            out
        }
        Which::Second => {
            // ker Z^j for j = 0..n, then reversed so that index i - 1 holds ker Z^{n+1-i}
            let mut kers = vec![Echelon::new(d)];
            let mut pow = m.z().clone();
            for j in 1..=n {
                kers.push(Echelon::span(f, d, nullspace(f, &pow)));
                if j < n {
                    pow = mat_mul(f, &pow, m.z());
                }
            }
            kers.reverse();
            kers
        }
    }
}

fn pieces<F: Field>(m: &LocalModule<F>, which: Which) -> Result<Pieces> {
    let f = m.field();
    let spaces = chain_spaces(m, which);
    let xs = SparseOp::new(f, m.x());
    let mut partitions = Vec::with_capacity(m.n());
    let mut dims = Vec::with_capacity(m.n());
    for w in spaces.windows(2) {
        let op = subquotient_op(f, &xs, &w[0], &w[1])
            .ok_or_else(|| crate::error::Error::Defect("filtration step is not x-stable".into()))?;
        dims.push(op.rows());
        partitions.push(
            nilpotent_partition(f, &op)
                .ok_or_else(|| crate::error::Error::Defect("x is not nilpotent".into()))?,
        );
    }
    Ok(Pieces {
        chain: spaces.iter().map(|s| s.dim()).collect(),
        partitions,
        dims,
    })
}

fn report<F: Field>(
    m: &LocalModule<F>,
    m2: Option<&LocalModule<F>>,
    which: Which,
) -> Result<FiltrationReport> {
    let lo = pieces(m, which)?;
    let graded = match m2 {
        Some(m2) => {
            let hi = pieces(m2, which)?;
            lo.partitions
                .iter()
                .zip(&hi.partitions)
                .map(|(l, h)| invariants_from_partitions(l, h, m.p()))
                .collect::<Result<Vec<_>>>()?
        }
        None => lo
            .partitions
            .iter()
            .map(|l| invariants_single_precision(l, m.p()))
            .collect(),
    };
    if lo.dims.iter().sum::<usize>() != m.dim() {
        return defect("graded pieces do not add up to the module");
    }
    Ok(FiltrationReport {
        which,
        chain: lo.chain,
        graded,
        graded_dims: lo.dims,
    })
}

fn doubled<F: Field>(m: &LocalModule<F>) -> Result<Option<LocalModule<F>>> {
    if m.expr().rebuildable() {
        Ok(Some(m.at_precision(2 * m.p())?))
    } else {
        Ok(None)
    }
}

pub fn first_filtration<F: Field>(m: &LocalModule<F>) -> Result<FiltrationReport> {
    report(m, doubled(m)?.as_ref(), Which::First)
}

pub fn second_filtration<F: Field>(m: &LocalModule<F>) -> Result<FiltrationReport> {
    report(m, doubled(m)?.as_ref(), Which::Second)
}

pub fn filtration<F: Field>(m: &LocalModule<F>, which: Which) -> Result<FiltrationReport> {
    report(m, doubled(m)?.as_ref(), which)
}

/// Invariants of the module itself over k[[x]], forgetting z.
pub fn cx_invariants<F: Field>(m: &LocalModule<F>) -> Result<CxInvariants> {
    let f = m.field();
    let part = |m: &LocalModule<F>| {
        nilpotent_partition(f, m.x())
            .ok_or_else(|| crate::error::Error::Defect("x is not nilpotent".into()))
    };
    let lam = part(m)?;
    match doubled(m)? {
        Some(m2) => invariants_from_partitions(&lam, &part(&m2)?, m.p()),
        None => Ok(invariants_single_precision(&lam, m.p())),
    }
}

/// Both filtrations and the rank data, sharing one doubled-precision rebuild.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analysis {
    pub rank: usize,
    pub first: FiltrationReport,
    pub second: FiltrationReport,
    /// dim(M) - p * R: stable under the growth law, additive along exact sequences.
    pub kappa: i64,
    pub two_precision: bool,
}

pub fn analyze<F: Field>(m: &LocalModule<F>) -> Result<Analysis> {
    let m2 = doubled(m)?;
    let first = report(m, m2.as_ref(), Which::First)?;
    let second = report(m, m2.as_ref(), Which::Second)?;
    let rank = rank_from(m, m2.as_ref(), &first)?;
    let sr: usize = second.ranks().iter().sum();
    if sr != rank {
        return defect(format!(
            "second filtration has total rank {sr}, first has {rank}"
        ));
    }
    check_inclusion(m)?;
    Ok(Analysis {
        rank,
        kappa: m.dim() as i64 - (m.p() * rank) as i64,
        first,
        second,
        two_precision: m2.is_some(),
    })
}

fn rank_from<F: Field>(
    m: &LocalModule<F>,
    m2: Option<&LocalModule<F>>,
    first: &FiltrationReport,
) -> Result<usize> {
    let graded: usize = first.ranks().iter().sum();
    let Some(m2) = m2 else {
        return Ok(graded);
    };
    let grow = m2.dim() as i64 - m.dim() as i64;
    if grow < 0 || grow % m.p() as i64 != 0 {
        return precision(format!(
            "dimension grows by {grow} from p = {} to 2p, not a multiple of p",
            m.p()
        ));
    }
    let slope = grow as usize / m.p();
    if slope != graded {
        return precision(format!(
            "precision slope {slope} differs from the graded rank {graded}"
        ));
    }
    Ok(slope)
}

/// Generalized rank from the precision slope, cross-checked against the graded ranks.
pub fn generalized_rank<F: Field>(m: &LocalModule<F>) -> Result<usize> {
    let m2 = doubled(m)?;
    let first = report(m, m2.as_ref(), Which::First)?;
    rank_from(m, m2.as_ref(), &first)
}

/// The precision slope alone: (dim at 2p - dim at p) / p.
pub fn precision_slope<F: Field>(m: &LocalModule<F>) -> Result<usize> {
    let m2 = m.at_precision(2 * m.p())?;
    let grow = m2.dim() as i64 - m.dim() as i64;
    if grow < 0 || grow % m.p() as i64 != 0 {
        return precision(format!(
            "dimension grows by {grow} from p = {} to 2p",
            m.p()
        ));
    }
    Ok(grow as usize / m.p())
}

pub fn char_function<F: Field>(m: &LocalModule<F>, which: Which) -> Result<CharFunction> {
    Ok(filtration(m, which)?.char_function())
}

/// Asserts M_i ⊂ M^{(i)} as subspaces.
pub fn check_inclusion<F: Field>(m: &LocalModule<F>) -> Result<()> {
    let f = m.field();
    let first = chain_spaces(m, Which::First);
    let second = chain_spaces(m, Which::Second);
    for (i, (a, b)) in first.iter().zip(&second).enumerate() {
        if !b.contains_space(f, a) {
            return defect(format!(
                "first filtration step {} is not inside the second",
                i + 1
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiFreeReport {
    /// (m_1, ..., m_n) when the module is quasi-free.
    pub m: Option<Vec<usize>>,
    /// dim z^i M / x z^i M for i = 0..n-1.
    pub generator_dims: Vec<usize>,
    /// Second differences of `generator_dims`; equals the type when quasi-free.
    pub from_generators: Vec<i64>,
}

impl QuasiFreeReport {
    pub fn is_quasi_free(&self) -> bool {
        self.m.is_some()
    }
}

/// dim Z^i M / X Z^i M for i = 0..n-1.
pub fn generator_dims<F: Field>(m: &LocalModule<F>) -> Vec<usize> {
    let f = m.field();
    let xs = SparseOp::new(f, m.x());
    chain_spaces(m, Which::First)[..m.n()]
        .iter()
        .map(|u| u.dim() - u.image(f, &xs).dim())
        .collect()
}

/// Quasi-free type by graded freeness, confirmed by the generator-count system.
pub fn quasi_free_type<F: Field>(m: &LocalModule<F>) -> Result<QuasiFreeReport> {
    quasi_free_from(m, &first_filtration(m)?)
}

pub fn quasi_free_from<F: Field>(
    m: &LocalModule<F>,
    first: &FiltrationReport,
) -> Result<QuasiFreeReport> {
    let n = m.n();
    let d = generator_dims(m);
    let at = |i: usize| d.get(i).copied().unwrap_or(0) as i64;
    let from_generators: Vec<i64> = (0..n).map(|i| at(i) - 2 * at(i + 1) + at(i + 2)).collect();
    let m_vec = if first.graded.iter().all(|g| g.is_free()) {
        let r = first.ranks();
        let ty: Vec<usize> = (0..n)
            .map(|i| r[i] - r.get(i + 1).copied().unwrap_or(0))
            .collect();
        if ty.iter().map(|&v| v as i64).collect::<Vec<_>>() != from_generators {
            return defect(format!(
                "graded type {ty:?} disagrees with generator counts {from_generators:?}"
            ));
        }
        Some(ty)
    } else {
        None
    };
    Ok(QuasiFreeReport {
        m: m_vec,
        generator_dims: d,
        from_generators,
    })
}

/// dim M / (xM + zM): minimal number of generators.
pub fn naive_min_generators<F: Field>(m: &LocalModule<F>) -> usize {
    let f = m.field();
    let d = m.dim();
    let cols = (0..d).flat_map(|j| [m.x().col(j), m.z().col(j)]);
    d - Echelon::span(f, d, cols).dim()
}

/// Generalized rank of the quasi-free type (m_1..m_n).
pub fn type_rank(m: &[usize]) -> usize {
    m.iter().enumerate().map(|(i, &v)| (i + 1) * v).sum()
}

/// Graded ranks of the first filtration of a quasi-free type: r_i = sum_{j >= i} m_j.
pub fn type_graded_ranks(m: &[usize]) -> Vec<usize> {
    (0..m.len()).map(|i| m[i..].iter().sum()).collect()
}

/// First characteristic function of a quasi-free type in closed form.
pub fn type_char_function(m: &[usize]) -> CharFunction {
    let r = type_graded_ranks(m);
    let n = m.len();
    let mut values = vec![0i64; n + 1];
    for k in 1..=n {
        values[k] = values[k - 1] + r[n - k] as i64;
    }
    CharFunction {
        which: Which::First,
        values,
    }
}

/// The generic type p O_n + O_m of generalized rank R = p n + m.
pub fn generic_type(r: usize, n: usize) -> Vec<usize> {
    let mut ty = vec![0; n];
    ty[n - 1] = r / n;
    if r % n > 0 {
        ty[r % n - 1] += 1;
    }
    ty
}
