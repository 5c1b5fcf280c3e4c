//! Torsion-free modules over O_2: the normal form ⊕ I_{n_i} ⊕ m O_2 ⊕ q O_C,
//! valuation Smith reduction, extension and kernel classification, duals and reflexivity.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{defect, invalid, precision, precondition, Error, Result};
use crate::field::Field;
use crate::filtrations::{analyze, Analysis, CharFunction, CxInvariants, Which};
use crate::lattice::Lattice;
use crate::linalg::rank;
use crate::module::{realize, standard_expr, LocalModule, ModuleExpr, ModuleMap, StandardKind};
use crate::ring::{PresentationMatrix, RingElem};
use crate::series::{kernel_basis, smat_zero, smith, SMat, Series, SmithForm};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorsionFreeNF {
    pub ideals: Vec<usize>,
    pub free: usize,
    pub line: usize,
}

impl TorsionFreeNF {
    pub fn new(mut ideals: Vec<usize>, free: usize, line: usize) -> Result<Self> {
        if ideals.contains(&0) {
            return invalid("ideal indices must be at least 1");
        }
        ideals.sort_unstable_by(|a, b| b.cmp(a));
        Ok(TorsionFreeNF { ideals, free, line })
    }

    pub fn rank(&self) -> usize {
        2 * self.ideals.len() + 2 * self.free + self.line
    }

    pub fn index(&self) -> usize {
        self.ideals.iter().sum()
    }

    pub fn to_json(&self) -> Value {
        json!({ "ideals": self.ideals, "free": self.free, "line": self.line })
    }
}

/// An r x s matrix over k[[x]] known modulo x^prec.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtMatrix<E> {
    pub rows: usize,
    pub cols: usize,
    pub prec: usize,
    pub entries: SMat<E>,
}

impl<E: Clone + PartialEq> ExtMatrix<E> {
    pub fn new(rows: usize, cols: usize, prec: usize, entries: SMat<E>) -> Result<Self> {
        if entries.len() != rows
            || entries
                .iter()
                .any(|r| r.len() != cols || r.iter().any(|s| s.prec() != prec))
        {
            return invalid(format!(
                "matrix entries do not form a {rows}x{cols} array at precision {prec}"
            ));
        }
        Ok(ExtMatrix {
            rows,
            cols,
            prec,
            entries,
        })
    }

    /// Entries given as coefficient lists of polynomials in x.
    pub fn from_polys<F: Field<Elem = E>>(
        f: &F,
        prec: usize,
        polys: &[Vec<Vec<i64>>],
    ) -> Result<Self> {
        let rows = polys.len();
        let cols = polys.first().map_or(0, |r| r.len());
        let mut entries = smat_zero(f, rows, cols, prec);
        for (i, row) in polys.iter().enumerate() {
            if row.len() != cols {
                return invalid("ragged matrix rows");
            }
            for (j, poly) in row.iter().enumerate() {
                if poly.iter().skip(prec).any(|&c| c != 0) {
                    return precision(format!(
                        "entry ({i},{j}) has degree beyond the precision {prec}"
                    ));
                }
                let c: Vec<E> = poly.iter().take(prec).map(|&c| f.from_i64(c)).collect();
                entries[i][j] = Series::from_coeffs(f, prec, &c);
            }
        }
        Ok(ExtMatrix {
            rows,
            cols,
            prec,
            entries,
        })
    }

    /// Entry valuations, `None` standing for a zero entry.
    pub fn valuations<F: Field<Elem = E>>(&self, f: &F) -> Vec<Vec<Option<usize>>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(|s| s.valuation(f)).collect())
            .collect()
    }

    /// Zero-padded to a higher precision; exact when the entries are polynomials.
    pub fn lift<F: Field<Elem = E>>(&self, f: &F, prec: usize) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|r| r.iter().map(|s| s.with_prec(f, prec)).collect())
            .collect();
        ExtMatrix {
            rows: self.rows,
            cols: self.cols,
            prec,
            entries,
        }
    }

    pub fn to_json<F: Field<Elem = E>>(&self, f: &F) -> Value {
        let entries: Vec<Vec<Vec<Value>>> = self
            .entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| s.coeffs().iter().map(|c| f.to_json(c)).collect())
                    .collect()
            })
            .collect();
        json!({ "rows": self.rows, "cols": self.cols, "prec": self.prec, "entries": entries })
    }
}

#[derive(Debug, Clone)]
pub struct DvrSmith<E> {
    /// Pivot valuations in pivot order.
    pub valuations: Vec<usize>,
    pub zero_rows: usize,
    pub zero_cols: usize,
    pub form: SmithForm<E>,
}

impl<E> DvrSmith<E> {
    pub fn sorted_valuations(&self) -> Vec<usize> {
        let mut v = self.valuations.clone();
        v.sort_unstable();
        v
    }

    pub fn to_json(&self) -> Value {
        json!({ "valuations": self.sorted_valuations(), "zero_rows": self.zero_rows, "zero_cols": self.zero_cols })
    }
}

/// Minimal-valuation pivoting over k[x]/(x^prec).
pub fn dvr_smith<F: Field>(f: &F, a: &ExtMatrix<F::Elem>) -> DvrSmith<F::Elem> {
    let form = smith(f, &a.entries, a.rows, a.cols, a.prec);
    let r = form.rank();
    DvrSmith {
        valuations: form.valuations.clone(),
        zero_rows: a.rows - r,
        zero_cols: a.cols - r,
        form,
    }
}

fn nf_from_smith<E>(s: &DvrSmith<E>) -> TorsionFreeNF {
    let ideals: Vec<usize> = s.valuations.iter().copied().filter(|&v| v > 0).collect();
    let free = s.valuations.iter().filter(|&&v| v == 0).count();
    TorsionFreeNF::new(ideals, free, s.zero_rows + s.zero_cols).expect("positive valuations")
}

/// Middle term of 0 -> r O_C -> N -> s O_C -> 0 with class `a`, read at a single precision.
pub fn classify_extension_at<F: Field>(
    f: &F,
    r: usize,
    s: usize,
    a: &ExtMatrix<F::Elem>,
) -> Result<TorsionFreeNF> {
    if a.rows != r || a.cols != s {
        return invalid(format!("class is {}x{}, expected {r}x{s}", a.rows, a.cols));
    }
    Ok(nf_from_smith(&dvr_smith(f, a)))
}

/// As `classify_extension_at`, confirmed at doubled precision with polynomial entries.
pub fn classify_extension<F: Field>(
    f: &F,
    r: usize,
    s: usize,
    a: &ExtMatrix<F::Elem>,
) -> Result<TorsionFreeNF> {
    let lo = classify_extension_at(f, r, s, a)?;
    let hi = classify_extension_at(f, r, s, &a.lift(f, 2 * a.prec))?;
    if lo != hi {
        return precision(format!(
            "extension class reads as {lo:?} at {} but {hi:?} at {}",
            a.prec,
            2 * a.prec
        ));
    }
    Ok(lo)
}

/// Generators e_1..e_r, f_1..f_s with z e_i = 0 and z f_j = sum_i a_ij e_i, over A_{2,p}.
pub fn extension_presentation<F: Field>(
    f: &F,
    a: &ExtMatrix<F::Elem>,
    p: usize,
) -> Result<PresentationMatrix<F::Elem>> {
    let (r, s) = (a.rows, a.cols);
    let z = RingElem::monomial(f, 2, p, f.one(), 0, 1);
    let mut rels = Vec::with_capacity(r + s);
    for i in 0..r {
        let mut col = vec![RingElem::zero(f, 2, p); r + s];
        col[i] = z.clone();
        rels.push(col);
    }
    for j in 0..s {
        let mut col = vec![RingElem::zero(f, 2, p); r + s];
        col[r + j] = z.clone();
        for i in 0..r {
            let e = &a.entries[i][j];
            for (deg, c) in e.coeffs().iter().enumerate().take(p) {
                if !f.is_zero(c) {
                    col[i] = col[i].sub(f, &RingElem::monomial(f, 2, p, c.clone(), deg, 0));
                }
            }
        }
        rels.push(col);
    }
    PresentationMatrix::new(2, p, r + s, rels)
}

/// A surjection from a quasi-free O_2-module onto a torsion O_C-module.
/// Source generators: `line` copies of O_C first, then `free` copies of O_2.
/// `images[j][l]` is the coefficient of the generator of T_{torsion[l]} in the image of generator j.
#[derive(Debug, Clone)]
pub struct KernelDatum<E> {
    pub line: usize,
    pub free: usize,
    pub torsion: Vec<usize>,
    pub images: Vec<Vec<RingElem<E>>>,
}

impl<E: Clone> KernelDatum<E> {
    pub fn generators(&self) -> usize {
        self.line + self.free
    }
}

/// Source, target and map of a kernel datum as provenance expressions.
pub fn kernel_datum_map<F: Field>(
    f: &F,
    d: &KernelDatum<F::Elem>,
    p: usize,
) -> Result<Arc<ModuleMap<F>>> {
    if d.images.len() != d.generators() || d.images.iter().any(|r| r.len() != d.torsion.len()) {
        return invalid("map images do not match the generator and torsion counts");
    }
    let mut src = Vec::new();
    for j in 0..d.generators() {
        let i = if j < d.line { 1 } else { 2 };
        src.push(standard_expr(f, &StandardKind::Structure { i }, 2, p)?);
    }
    let tgt = d
        .torsion
        .iter()
        .map(|&k| standard_expr(f, &StandardKind::Torsion { k }, 2, p))
        .collect::<Result<Vec<_>>>()?;
    let source = Arc::new(ModuleExpr::Sum { n: 2, terms: src });
    let target = Arc::new(ModuleExpr::Sum { n: 2, terms: tgt });
    let images = d
        .images
        .iter()
        .map(|r| r.iter().map(|e| e.lift(f, p)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(Arc::new(ModuleMap::new(f, source, target, images, p)?))
}

/// Reduction of the map mod z as a k[[x]]-matrix (rows: torsion summands, columns: generators).
fn reduced_map<F: Field>(f: &F, d: &KernelDatum<F::Elem>, prec: usize) -> SMat<F::Elem> {
    let mut out = smat_zero(f, d.torsion.len(), d.generators(), prec);
    for (j, row) in d.images.iter().enumerate() {
        for (l, e) in row.iter().enumerate() {
            let c: Vec<F::Elem> = (0..e.p().min(prec))
                .map(|a| e.coeff(a, 0).clone())
                .collect();
            out[l][j] = Series::from_coeffs(f, prec, &c);
        }
    }
    out
}

/// Basis of the kernel of `pi : k[[x]]^g -> ⊕ k[[x]]/(x^{t_l})`, as columns.
fn torsion_kernel<F: Field>(
    f: &F,
    pi: &SMat<F::Elem>,
    g: usize,
    torsion: &[usize],
    prec: usize,
) -> Vec<Vec<Series<F::Elem>>> {
    let t = torsion.len();
    let mut k = smat_zero(f, t, g + t, prec);
    for l in 0..t {
        for j in 0..g {
            k[l][j] = pi[l][j].clone();
        }
        k[l][g + l] = Series::x_pow(f, prec, torsion[l]);
    }
    kernel_basis::<F>(&smith(f, &k, t, g + t, prec))
        .into_iter()
        .map(|v| v[..g].to_vec())
        .collect()
}

fn classify_kernel_at<F: Field>(
    f: &F,
    d: &KernelDatum<F::Elem>,
    prec: usize,
) -> Result<TorsionFreeNF> {
    let g = d.generators();
    let basis = torsion_kernel(f, &reduced_map(f, d, prec), g, &d.torsion, prec);
    if basis.len() != g {
        return precision(format!(
            "kernel of the reduction has rank {} instead of {g} at precision {prec}",
            basis.len()
        ));
    }
    // z acts on a lift of each kernel vector through its O_2 coordinates
    let mut a = smat_zero(f, d.free, g, prec);
    for (j, v) in basis.iter().enumerate() {
        for i in 0..d.free {
            a[i][j] = v[d.line + i].clone();
        }
    }
    classify_extension_at(f, d.free, g, &ExtMatrix::new(d.free, g, prec, a)?)
}

/// Normal form of ker(pi), validated against the realization of the answer.
pub fn classify_kernel<F: Field>(
    f: &F,
    d: &KernelDatum<F::Elem>,
    p: usize,
) -> Result<TorsionFreeNF> {
    if let Some(&t) = d.torsion.iter().max() {
        if t >= p {
            return precision(format!("torsion length {t} reaches the precision {p}"));
        }
    }
    let map = kernel_datum_map(f, d, p)?;
    let src = realize(f, &map.source, p)?;
    let tgt = realize(f, &map.target, p)?;
    let fm = map.matrix(f, &src, &tgt)?;
    if rank(f, &fm) != tgt.dim() {
        return precondition("map onto the torsion module is not surjective");
    }
    let nf = classify_kernel_at(f, d, p)?;
    let nf2 = classify_kernel_at(f, d, 2 * p)?;
    if nf != nf2 {
        return precision(format!(
            "kernel reads as {nf:?} at {p} but {nf2:?} at {}",
            2 * p
        ));
    }
    let ker = realize(f, &Arc::new(ModuleExpr::Kernel(map)), p)?;
    let witness = nf_realize(f, &nf, p)?;
    let (a, b) = (analyze(&ker)?, analyze(&witness)?);
    // dimensions are not compared: a truncated kernel loses the length of the torsion target
    if !same_invariants(&a, &b) {
        return defect(format!(
            "kernel invariants do not match the normal form {nf:?}"
        ));
    }
    Ok(nf)
}

fn same_invariants(a: &Analysis, b: &Analysis) -> bool {
    a.rank == b.rank
        && a.first.graded == b.first.graded
        && a.second.graded == b.second.graded
        && a.first.char_function() == b.first.char_function()
        && a.second.char_function() == b.second.char_function()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NfInvariants {
    pub rank: usize,
    pub index: usize,
    pub first: CharFunction,
    pub second: CharFunction,
    /// Graded invariants of the first filtration.
    pub graded: Vec<CxInvariants>,
}

pub fn nf_invariants(nf: &TorsionFreeNF) -> NfInvariants {
    let t = nf.ideals.len();
    let (top, bottom) = (t + nf.free + nf.line, t + nf.free);
    NfInvariants {
        rank: nf.rank(),
        index: nf.index(),
        first: CharFunction {
            which: Which::First,
            values: vec![0, bottom as i64, nf.rank() as i64],
        },
        second: CharFunction {
            which: Which::Second,
            values: vec![0, top as i64, nf.rank() as i64],
        },
        graded: vec![
            CxInvariants {
                rank: top,
                torsion: nf.ideals.clone(),
            },
            CxInvariants {
                rank: bottom,
                torsion: vec![],
            },
        ],
    }
}

pub fn nf_expr<F: Field>(f: &F, nf: &TorsionFreeNF, p: usize) -> Result<Arc<ModuleExpr<F>>> {
    if let Some(&k) = nf.ideals.first() {
        if k >= p {
            return precision(format!("I_{k} needs precision above {k}, got {p}"));
        }
    }
    let mut terms = Vec::new();
    for &k in &nf.ideals {
        terms.push(standard_expr(f, &StandardKind::IdealPoint { k }, 2, p)?);
    }
    for _ in 0..nf.free {
        terms.push(standard_expr(f, &StandardKind::Structure { i: 2 }, 2, p)?);
    }
    for _ in 0..nf.line {
        terms.push(standard_expr(f, &StandardKind::Structure { i: 1 }, 2, p)?);
    }
    Ok(Arc::new(ModuleExpr::Sum { n: 2, terms }))
}

pub fn nf_realize<F: Field>(f: &F, nf: &TorsionFreeNF, p: usize) -> Result<LocalModule<F>> {
    realize(f, &nf_expr(f, nf, p)?, p)
}

/// Normal form read off the first filtration of a torsion-free O_2-module.
pub fn nf_from_analysis(a: &Analysis) -> Result<TorsionFreeNF> {
    let [g1, g2] = a.first.graded.as_slice() else {
        return precondition("normal forms are defined over O_2");
    };
    if !g2.is_free() {
        return precondition("second graded piece has torsion; module is not torsion-free");
    }
    let t = g1.torsion.len();
    if g2.rank < t || g1.rank < g2.rank {
        return precondition("graded ranks are incompatible with a torsion-free module");
    }
    TorsionFreeNF::new(g1.torsion.clone(), g2.rank - t, g1.rank - g2.rank)
}

pub fn nf_of_module<F: Field>(m: &LocalModule<F>) -> Result<TorsionFreeNF> {
    if m.n() != 2 {
        return precondition("normal forms are defined over O_2");
    }
    nf_from_analysis(&analyze(m)?)
}

fn random_poly<F: Field, R: Rng + ?Sized>(
    f: &F,
    rng: &mut R,
    p: usize,
    constant: bool,
) -> RingElem<F::Elem> {
    let mut e = RingElem::zero(f, 2, p);
    for a in usize::from(!constant)..p {
        if rng.gen_bool(0.5) {
            e = e.add(f, &RingElem::monomial(f, 2, p, f.random(rng), a, 0));
        }
    }
    e
}

/// A kernel datum whose kernel is `nf`: the reduction (t + m) O_2 ⊕ q O_C -> ⊕ T_{n_i}
/// composed with a random automorphism of the source.
pub fn round_trip_datum<F: Field, R: Rng + ?Sized>(
    f: &F,
    nf: &TorsionFreeNF,
    p: usize,
    rng: &mut R,
) -> KernelDatum<F::Elem> {
    let (q, m2) = (nf.line, nf.ideals.len() + nf.free);
    let g = q + m2;
    let t = nf.ideals.len();
    // constant-in-z part of the automorphism; O_C -> O_2 entries lie in zO_2 and vanish here
    let mut aut = vec![vec![RingElem::zero(f, 2, p); g]; g];
    for (i, row) in aut.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let same_block = (i < q) == (j < q);
            *e = if i == j {
                RingElem::one(f, 2, p).add(f, &random_poly(f, rng, p, false))
            } else if j < q && i >= q {
                RingElem::zero(f, 2, p)
            } else {
                random_poly(f, rng, p, !same_block || i < j)
            };
        }
    }
    let images = (0..g)
        .map(|j| (0..t).map(|l| aut[q + l][j].clone()).collect())
        .collect();
    KernelDatum {
        line: q,
        free: m2,
        torsion: nf.ideals.clone(),
        images,
    }
}

/// What is known structurally about the torsion of a module.
#[derive(Debug, Clone)]
pub enum Certificate<F: Field> {
    TorsionFree(Lattice<F>),
    HasTorsion,
    Unknown,
}

fn structure_index<F: Field>(f: &F, pres: &PresentationMatrix<F::Elem>) -> Option<usize> {
    if pres.rows() != 1 {
        return None;
    }
    match pres.relations() {
        [] => Some(pres.n()),
        [col] => {
            let terms: Vec<_> = col[0].terms(f).collect();
            match terms.as_slice() {
                [(0, b, c)] if f.is_one(c) && *b >= 1 => Some(*b),
                _ => None,
            }
        }
        _ => None,
    }
}

fn is_torsion_presentation<F: Field>(f: &F, pres: &PresentationMatrix<F::Elem>) -> Option<usize> {
    if pres.rows() != 1 || pres.relations().len() != 2 {
        return None;
    }
    let single = |e: &RingElem<F::Elem>| {
        let t: Vec<_> = e.terms(f).map(|(a, b, c)| (a, b, f.is_one(c))).collect();
        match t.as_slice() {
            [(a, b, true)] => Some((*a, *b)),
            _ => None,
        }
    };
    match (
        single(&pres.relations()[0][0]),
        single(&pres.relations()[1][0]),
    ) {
        (Some((k, 0)), Some((0, 1))) if k >= 1 => Some(k),
        _ => None,
    }
}

/// Structural lattice of a module expression, stored at precision `prec`.
pub fn certificate<F: Field>(
    f: &F,
    expr: &Arc<ModuleExpr<F>>,
    prec: usize,
) -> Result<Certificate<F>> {
    Ok(match &**expr {
        ModuleExpr::Presented { pres, .. } => {
            if let Some(i) = structure_index(f, pres) {
                Certificate::TorsionFree(Lattice::structure(f, pres.n(), i, prec))
            } else if is_torsion_presentation(f, pres).is_some() {
                Certificate::HasTorsion
            } else {
                Certificate::Unknown
            }
        }
        ModuleExpr::Ideal { n, gens, label } => {
            Certificate::TorsionFree(Lattice::ideal(f, *n, gens, prec, label)?)
        }
        ModuleExpr::Sum { n, terms } => {
            let mut acc = Lattice::new(*n, prec, vec![], "0");
            let mut unknown = false;
            for t in terms {
                match certificate(f, t, prec)? {
                    Certificate::HasTorsion => return Ok(Certificate::HasTorsion),
                    Certificate::Unknown => unknown = true,
                    Certificate::TorsionFree(l) => {
                        acc = if acc.rank() == 0 {
                            l
                        } else {
                            acc.direct_sum(f, &l)
                        }
                    }
                }
            }
            if unknown {
                Certificate::Unknown
            } else {
                Certificate::TorsionFree(acc)
            }
        }
        ModuleExpr::Lattice(l) => Certificate::TorsionFree((**l).clone()),
        ModuleExpr::Kernel(map) => kernel_certificate(f, map, prec)?,
        _ => Certificate::Unknown,
    })
}

/// Lattice of the kernel of a map from a sum of O_i onto a sum of T_k.
fn kernel_certificate<F: Field>(f: &F, map: &ModuleMap<F>, prec: usize) -> Result<Certificate<F>> {
    let mut ambient: Option<Lattice<F>> = None;
    let mut offsets = Vec::new();
    for leaf in map.source.summands() {
        let ModuleExpr::Presented { pres, .. } = &*leaf else {
            return Ok(Certificate::Unknown);
        };
        let Some(i) = structure_index(f, pres) else {
            return Ok(Certificate::Unknown);
        };
        let l = Lattice::structure(f, map.n, i, prec);
        offsets.push(ambient.as_ref().map_or(0, |a| a.rank()));
        ambient = Some(match ambient {
            None => l,
            Some(a) => a.direct_sum(f, &l),
        });
    }
    let mut torsion = Vec::new();
    for leaf in map.target.summands() {
        let ModuleExpr::Presented { pres, .. } = &*leaf else {
            return Ok(Certificate::Unknown);
        };
        match is_torsion_presentation(f, pres) {
            Some(k) => torsion.push(k),
            None => return Ok(Certificate::Unknown),
        }
    }
    let Some(ambient) = ambient else {
        return Ok(Certificate::TorsionFree(Lattice::new(
            map.n,
            prec,
            vec![],
            "0",
        )));
    };
    let g = ambient.rank();
    let mut pi = smat_zero(f, torsion.len(), g, prec);
    for (j, row) in map.images.iter().enumerate() {
        for (l, e) in row.iter().enumerate() {
            let c: Vec<F::Elem> = (0..e.p().min(prec))
                .map(|a| e.coeff(a, 0).clone())
                .collect();
            pi[l][offsets[j]] = Series::from_coeffs(f, prec, &c);
        }
    }
    let cols = torsion_kernel(f, &pi, g, &torsion, prec);
    let label = format!(
        "ker({} -> {})",
        map.source.describe(),
        map.target.describe()
    );
    Ok(Certificate::TorsionFree(Lattice::span_in(
        f, &ambient, &cols, &label,
    )?))
}

fn lattice_precision(p: usize) -> usize {
    (4 * p).max(24)
}

/// Whether M -> M^{**} is an isomorphism, decided on the structural lattice of M
/// at two precisions; modules with a torsion summand are never reflexive.
pub fn reflexivity_check<F: Field>(m: &LocalModule<F>) -> Result<bool> {
    let f = m.field();
    let prec = lattice_precision(m.p());
    match (
        certificate(f, m.expr(), prec)?,
        certificate(f, m.expr(), 2 * prec)?,
    ) {
        (Certificate::TorsionFree(a), Certificate::TorsionFree(b)) => {
            let (ra, rb) = (a.is_reflexive(f), b.is_reflexive(f));
            if ra != rb {
                return precision(format!(
                    "reflexivity differs between precisions {prec} and {}",
                    2 * prec
                ));
            }
            Ok(ra)
        }
        (Certificate::HasTorsion, _) => Ok(false),
        _ => precondition("module carries no structural torsion certificate"),
    }
}

/// Normal form of Hom(M, O_2) for M realizing `nf`.
pub fn nf_dual<F: Field>(f: &F, nf: &TorsionFreeNF, p: usize) -> Result<TorsionFreeNF> {
    let prec = lattice_precision(p);
    let Certificate::TorsionFree(l) = certificate(f, &nf_expr(f, nf, p)?, prec)? else {
        return Err(Error::Defect("normal form has no lattice".into()));
    };
    let (dual, _) = l.dual(f);
    let m = realize(f, &Arc::new(ModuleExpr::Lattice(Arc::new(dual))), p)?;
    nf_of_module(&m)
}

/// Jordan type of x on coker(A) over k[x]/(x^prec): one block per Smith factor.
pub fn cokernel_blocks<F: Field>(f: &F, a: &ExtMatrix<F::Elem>) -> Vec<usize> {
    let s = dvr_smith(f, a);
    let mut blocks: Vec<usize> = s.valuations.iter().copied().filter(|&v| v > 0).collect();
    blocks.extend(std::iter::repeat(a.prec).take(s.zero_rows));
    blocks.sort_unstable_by(|x, y| y.cmp(x));
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;
    use crate::filtrations::quasi_free_type;
    use crate::module::{module_from_presentation, standard_module};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f() -> Fp {
        Fp::default()
    }

    #[test]
    fn smith_examples() {
        let f = f();
        let a = ExtMatrix::from_polys(&f, 8, &[vec![vec![0, 1]]]).unwrap();
        assert_eq!(dvr_smith(&f, &a).sorted_valuations(), vec![1]);
        let a = ExtMatrix::from_polys(&f, 8, &[vec![vec![1]]]).unwrap();
        assert_eq!(dvr_smith(&f, &a).sorted_valuations(), vec![0]);
        let a = ExtMatrix::from_polys(
            &f,
            8,
            &[
                vec![vec![0, 1], vec![0, 0, 1]],
                vec![vec![0, 0, 1], vec![0, 0, 0, 1]],
            ],
        )
        .unwrap();
        let s = dvr_smith(&f, &a);
        assert_eq!(
            (s.sorted_valuations(), s.zero_rows, s.zero_cols),
            (vec![1], 1, 1)
        );
    }

    #[test]
    fn extension_classes() {
        let f = f();
        for m in 1..4 {
            let mut poly = vec![0; m + 1];
            poly[m] = 1;
            let a = ExtMatrix::from_polys(&f, 8, &[vec![poly]]).unwrap();
            assert_eq!(
                classify_extension(&f, 1, 1, &a).unwrap(),
                TorsionFreeNF::new(vec![m], 0, 0).unwrap()
            );
        }
        let unit = ExtMatrix::from_polys(&f, 8, &[vec![vec![3, 1]]]).unwrap();
        assert_eq!(
            classify_extension(&f, 1, 1, &unit).unwrap(),
            TorsionFreeNF::new(vec![], 1, 0).unwrap()
        );
        let m =
            module_from_presentation(&f, extension_presentation(&f, &unit, 6).unwrap()).unwrap();
        assert_eq!(quasi_free_type(&m).unwrap().m, Some(vec![0, 1]));
        let zero = ExtMatrix::from_polys(&f, 8, &[vec![vec![0]]]).unwrap();
        assert_eq!(
            classify_extension(&f, 1, 1, &zero).unwrap(),
            TorsionFreeNF::new(vec![], 0, 2).unwrap()
        );
    }

    #[test]
    fn kernel_examples() {
        let f = f();
        let p = 8;
        for k in 1..4 {
            let d = KernelDatum {
                line: 0,
                free: 1,
                torsion: vec![k],
                images: vec![vec![RingElem::one(&f, 2, p)]],
            };
            assert_eq!(
                classify_kernel(&f, &d, p).unwrap(),
                TorsionFreeNF::new(vec![k], 0, 0).unwrap()
            );
        }
        let d = KernelDatum {
            line: 1,
            free: 1,
            torsion: vec![],
            images: vec![vec![], vec![]],
        };
        assert_eq!(
            classify_kernel(&f, &d, p).unwrap(),
            TorsionFreeNF::new(vec![], 1, 1).unwrap()
        );
        let e = |c: i64| RingElem::from_terms(&f, 2, p, &[(c, 0, 0)]).unwrap();
        let d = KernelDatum {
            line: 0,
            free: 2,
            torsion: vec![1, 1],
            images: vec![vec![e(1), e(2)], vec![e(3), e(5)]],
        };
        assert_eq!(
            classify_kernel(&f, &d, p).unwrap(),
            TorsionFreeNF::new(vec![1, 1], 0, 0).unwrap()
        );
        let bad = KernelDatum {
            line: 0,
            free: 1,
            torsion: vec![1],
            images: vec![vec![RingElem::zero(&f, 2, p)]],
        };
        assert!(matches!(
            classify_kernel(&f, &bad, p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn invariants_and_realization() {
        let f = f();
        let nf = TorsionFreeNF::new(vec![3], 0, 0).unwrap();
        let inv = nf_invariants(&nf);
        assert_eq!((inv.rank, inv.index), (2, 3));
        let a = analyze(&nf_realize(&f, &nf, 6).unwrap()).unwrap();
        assert_eq!(a.first.graded, inv.graded);
        assert_eq!(a.first.char_function(), inv.first);
        assert_eq!(a.second.char_function(), inv.second);
        let nf = TorsionFreeNF::new(vec![1], 1, 1).unwrap();
        assert_eq!(nf_realize(&f, &nf, 4).unwrap().dim(), 19);
        assert_eq!(
            nf_invariants(&TorsionFreeNF::new(vec![1], 0, 2).unwrap()).rank,
            4
        );
    }

    #[test]
    fn round_trip_small() {
        let f = f();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for nf in [
            TorsionFreeNF::new(vec![2, 1], 1, 1).unwrap(),
            TorsionFreeNF::new(vec![3], 0, 2).unwrap(),
            TorsionFreeNF::new(vec![], 2, 0).unwrap(),
        ] {
            let d = round_trip_datum(&f, &nf, 6, &mut rng);
            assert_eq!(classify_kernel(&f, &d, 6).unwrap(), nf);
        }
    }

    #[test]
    fn reflexivity() {
        let f = f();
        for k in 1..4 {
            let i = standard_module(&f, &StandardKind::IdealPoint { k }, 2, 6).unwrap();
            assert!(reflexivity_check(&i).unwrap());
            let t = standard_module(&f, &StandardKind::Torsion { k }, 2, 6).unwrap();
            assert!(!reflexivity_check(&t).unwrap());
        }
        let o2 = standard_module(&f, &StandardKind::Structure { i: 2 }, 2, 6).unwrap();
        assert!(reflexivity_check(&o2).unwrap());
    }

    #[test]
    fn duals_are_self_dual() {
        let f = f();
        for nf in [
            TorsionFreeNF::new(vec![2], 0, 0).unwrap(),
            TorsionFreeNF::new(vec![1], 1, 1).unwrap(),
        ] {
            assert_eq!(nf_dual(&f, &nf, 5).unwrap(), nf);
        }
    }

    #[test]
    fn cokernel_blocks_match_smith() {
        let f = f();
        let a = ExtMatrix::from_polys(&f, 8, &[vec![vec![0, 1], vec![0]], vec![vec![0], vec![0]]])
            .unwrap();
        assert_eq!(cokernel_blocks(&f, &a), vec![8, 1]);
    }
}
