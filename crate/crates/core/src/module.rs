//! Finite-dimensional realizations of modules over A_{n,p} and their provenance.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{defect, invalid, precision, precondition, Error, Result};
use crate::field::Field;
use crate::lattice::Lattice;
use crate::linalg::{
    block_diag, identity, is_zero_matrix, mat_mul, mat_sub, matrix_to_json, nullspace, restrict_op,
    zeros, Echelon, Matrix, SparseOp,
};
use crate::ring::{PresentationMatrix, RingElem};

/// Basis label of a presented module: `(generator, a, b)` for the class of x^a z^b e_gen.
pub type Label = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StandardKind {
    /// O_i = A/(z^i)
    Structure { i: usize },
    /// (x^k, z), only for n = 2
    IdealPoint { k: usize },
    /// (x, z^{n-1})
    J,
    /// (x, z), the ideal of the reduced point
    PointIdeal,
    /// A/(x^k, z)
    Torsion { k: usize },
    /// (x^{p+q}, z x^q)
    SubschemeA { p: usize, q: usize },
    /// (x^{q+m+p} + z x^q alpha, z x^{q+m}) with alpha(0) != 0
    SubschemeB {
        p: usize,
        q: usize,
        m: usize,
        #[serde(default = "unit_alpha")]
        alpha: Vec<i64>,
    },
}

fn unit_alpha() -> Vec<i64> {
    vec![1]
}

/// How a module was built; lets every invariant be recomputed at another precision.
#[derive(Debug, Clone)]
pub enum ModuleExpr<F: Field> {
    Presented {
        label: String,
        pres: PresentationMatrix<F::Elem>,
    },
    Ideal {
        label: String,
        n: usize,
        gens: Vec<RingElem<F::Elem>>,
    },
    Sum {
        n: usize,
        terms: Vec<Arc<ModuleExpr<F>>>,
    },
    Kernel(Arc<ModuleMap<F>>),
    Cokernel(Arc<ModuleMap<F>>),
    Image(Arc<ModuleMap<F>>),
    Lattice(Arc<Lattice<F>>),
    Raw {
        label: String,
        n: usize,
    },
}

impl<F: Field> ModuleExpr<F> {
    pub fn n(&self) -> usize {
        match self {
            ModuleExpr::Presented { pres, .. } => pres.n(),
            ModuleExpr::Ideal { n, .. } | ModuleExpr::Sum { n, .. } | ModuleExpr::Raw { n, .. } => {
                *n
            }
            ModuleExpr::Kernel(m) | ModuleExpr::Cokernel(m) | ModuleExpr::Image(m) => m.n,
            ModuleExpr::Lattice(l) => l.n(),
        }
    }

    pub fn rebuildable(&self) -> bool {
        match self {
            ModuleExpr::Raw { .. } => false,
            ModuleExpr::Sum { terms, .. } => terms.iter().all(|t| t.rebuildable()),
            _ => true,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ModuleExpr::Presented { label, .. }
            | ModuleExpr::Ideal { label, .. }
            | ModuleExpr::Raw { label, .. } => label.clone(),
            ModuleExpr::Sum { terms, .. } if terms.is_empty() => "0".into(),
            ModuleExpr::Sum { terms, .. } => terms
                .iter()
                .map(|t| t.describe())
                .collect::<Vec<_>>()
                .join(" + "),
            ModuleExpr::Kernel(m) => {
                format!("ker({} -> {})", m.source.describe(), m.target.describe())
            }
            ModuleExpr::Cokernel(m) => {
                format!("coker({} -> {})", m.source.describe(), m.target.describe())
            }
            ModuleExpr::Image(m) => {
                format!("im({} -> {})", m.source.describe(), m.target.describe())
            }
            ModuleExpr::Lattice(l) => l.label().to_string(),
        }
    }

    /// Leaves of a direct-sum tree.
    pub fn summands(self: &Arc<Self>) -> Vec<Arc<Self>> {
        match &**self {
            ModuleExpr::Sum { terms, .. } => terms.iter().flat_map(|t| t.summands()).collect(),
            _ => vec![self.clone()],
        }
    }
}

/// An equivariant map given by the images of the source generators,
/// `images[j][i]` being the coefficient of target generator `i` in the image of source generator `j`.
#[derive(Debug, Clone)]
pub struct ModuleMap<F: Field> {
    pub n: usize,
    pub source: Arc<ModuleExpr<F>>,
    pub target: Arc<ModuleExpr<F>>,
    pub images: Vec<Vec<RingElem<F::Elem>>>,
}

impl<F: Field> ModuleMap<F> {
    /// Builds the map and checks that it is well defined at precisions `p` and `2p`.
    pub fn new(
        f: &F,
        source: Arc<ModuleExpr<F>>,
        target: Arc<ModuleExpr<F>>,
        images: Vec<Vec<RingElem<F::Elem>>>,
        p: usize,
    ) -> Result<Self> {
        let n = source.n();
        if target.n() != n {
            return invalid("source and target of a map live over different rings");
        }
        let map = ModuleMap {
            n,
            source,
            target,
            images,
        };
        for q in [p, 2 * p] {
            let s = realize(f, &map.source, q)?;
            let t = realize(f, &map.target, q)?;
            let m = map.matrix(f, &s, &t)?;
            if !commutes(f, &m, &s, &t) {
                return precondition("map does not commute with the x and z actions");
            }
        }
        Ok(map)
    }

    /// Field matrix of the map between realizations at a common precision.
    pub fn matrix(&self, f: &F, s: &LocalModule<F>, t: &LocalModule<F>) -> Result<Matrix<F::Elem>> {
        let labels = s.labels.as_ref().ok_or_else(|| {
            Error::Precondition("map source must be given by generators and relations".into())
        })?;
        let tgens = t.gens.as_ref().ok_or_else(|| {
            Error::Precondition("map target has no distinguished generators".into())
        })?;
        let ngen = s.gens.as_ref().map_or(0, |g| g.len());
        if self.images.len() != ngen {
            return invalid(format!(
                "map gives {} images for {ngen} source generators",
                self.images.len()
            ));
        }
        let p = s.p;
        let mut w = Vec::with_capacity(ngen);
        for (j, img) in self.images.iter().enumerate() {
            if img.len() != tgens.len() {
                return invalid(format!(
                    "image {j} has {} coefficients for {} target generators",
                    img.len(),
                    tgens.len()
                ));
            }
            let mut v = vec![f.zero(); t.dim()];
            for (c, g) in img.iter().zip(tgens) {
                let c = c.lift(f, p)?;
                let cv = t.act(f, &c, g);
                for (a, b) in v.iter_mut().zip(cv) {
                    *a = f.add(a, &b);
                }
            }
            w.push(v);
        }
        // table[j][b][a] = x^a z^b w_j
        let xs = SparseOp::new(f, &t.x);
        let zs = SparseOp::new(f, &t.z);
        let table: Vec<Vec<Vec<Vec<F::Elem>>>> = w
            .iter()
            .map(|wj| {
                let mut rows = Vec::with_capacity(self.n);
                let mut zb = wj.clone();
                for _ in 0..self.n {
                    let mut col = Vec::with_capacity(p);
                    let mut xa = zb.clone();
                    for _ in 0..p {
                        col.push(xa.clone());
                        xa = xs.apply(f, &xa);
                    }
                    rows.push(col);
                    zb = zs.apply(f, &zb);
                }
                rows
            })
            .collect();
        let cols: Vec<Vec<F::Elem>> = labels
            .iter()
            .map(|&(j, a, b)| table[j][b][a].clone())
            .collect();
        Ok(Matrix::from_cols(&cols, t.dim(), f.zero()))
    }
}

fn commutes<F: Field>(f: &F, m: &Matrix<F::Elem>, s: &LocalModule<F>, t: &LocalModule<F>) -> bool {
    mat_mul(f, m, &s.x) == mat_mul(f, &t.x, m) && mat_mul(f, m, &s.z) == mat_mul(f, &t.z, m)
}

/// A module over A_{n,p} as a vector space with commuting nilpotent x and z.
#[derive(Debug, Clone)]
pub struct LocalModule<F: Field> {
    field: F,
    n: usize,
    p: usize,
    x: Matrix<F::Elem>,
    z: Matrix<F::Elem>,
    expr: Arc<ModuleExpr<F>>,
    gens: Option<Vec<Vec<F::Elem>>>,
    labels: Option<Vec<Label>>,
}

impl<F: Field> LocalModule<F> {
    fn assemble(
        f: &F,
        n: usize,
        p: usize,
        x: Matrix<F::Elem>,
        z: Matrix<F::Elem>,
        expr: Arc<ModuleExpr<F>>,
        gens: Option<Vec<Vec<F::Elem>>>,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        let m = LocalModule {
            field: f.clone(),
            n,
            p,
            x,
            z,
            expr,
            gens,
            labels,
        };
        m.check()?;
        Ok(m)
    }

    /// Asserts XZ = ZX, Z^n = 0 and X^p = 0.
    pub fn check(&self) -> Result<()> {
        let f = &self.field;
        if mat_mul(f, &self.x, &self.z) != mat_mul(f, &self.z, &self.x) {
            return defect("x and z actions do not commute");
        }
        let power_vanishes = |a: &Matrix<F::Elem>, k: usize| {
            let mut acc = identity(f, a.rows());
            for _ in 0..k {
                acc = mat_mul(f, a, &acc);
                if is_zero_matrix(f, &acc) {
                    return true;
                }
            }
            is_zero_matrix(f, &acc)
        };
        if !power_vanishes(&self.z, self.n) {
            return defect("z^n does not vanish");
        }
        if !power_vanishes(&self.x, self.p) {
            return defect("x^p does not vanish");
        }
        Ok(())
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn x(&self) -> &Matrix<F::Elem> {
        &self.x
    }

    pub fn z(&self) -> &Matrix<F::Elem> {
        &self.z
    }

    pub fn expr(&self) -> &Arc<ModuleExpr<F>> {
        &self.expr
    }

    pub fn gens(&self) -> Option<&[Vec<F::Elem>]> {
        self.gens.as_deref()
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    /// The same module realized at another precision.
    pub fn at_precision(&self, p: usize) -> Result<Self> {
        if p == self.p {
            return Ok(self.clone());
        }
        if !self.expr.rebuildable() {
            return precision("module has no structural provenance and cannot be rebuilt");
        }
        realize(&self.field, &self.expr, p)
    }

    /// `r . v` for a ring element `r`.
    pub fn act(&self, f: &F, r: &RingElem<F::Elem>, v: &[F::Elem]) -> Vec<F::Elem> {
        let xs = SparseOp::new(f, &self.x);
        let zs = SparseOp::new(f, &self.z);
        let mut out = vec![f.zero(); self.dim()];
        let mut zb = v.to_vec();
        for b in 0..self.n {
            let mut xa = zb.clone();
            for a in 0..self.p {
                let c = r.coeff(a, b);
                if !f.is_zero(c) {
                    for (o, e) in out.iter_mut().zip(&xa) {
                        f.mul_add(o, c, e);
                    }
                }
                xa = xs.apply(f, &xa);
            }
            zb = zs.apply(f, &zb);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let f = &self.field;
        json!({
            "n": self.n,
            "p": self.p,
            "q": f.spec().modulus(),
            "dim": self.dim(),
            "X": matrix_to_json(f, &self.x),
            "Z": matrix_to_json(f, &self.z),
            "provenance": self.expr.describe(),
        })
    }
}

pub fn presented_expr<F: Field>(
    label: String,
    pres: PresentationMatrix<F::Elem>,
) -> Arc<ModuleExpr<F>> {
    Arc::new(ModuleExpr::Presented { label, pres })
}

/// Realizes a provenance expression at precision `p`.
pub fn realize<F: Field>(f: &F, expr: &Arc<ModuleExpr<F>>, p: usize) -> Result<LocalModule<F>> {
    if p == 0 {
        return invalid("precision must be at least 1");
    }
    match &**expr {
        ModuleExpr::Presented { pres, .. } => realize_presented(f, expr.clone(), &pres.lift(f, p)?),
        ModuleExpr::Ideal { n, gens, .. } => {
            let gens = gens
                .iter()
                .map(|g| g.lift(f, p))
                .collect::<Result<Vec<_>>>()?;
            realize_ideal(f, expr.clone(), *n, p, &gens)
        }
        ModuleExpr::Sum { n, terms } => {
            let parts = terms
                .iter()
                .map(|t| realize(f, t, p))
                .collect::<Result<Vec<_>>>()?;
            sum_of(f, *n, p, &parts, expr.clone())
        }
        ModuleExpr::Kernel(map) | ModuleExpr::Cokernel(map) | ModuleExpr::Image(map) => {
            let s = realize(f, &map.source, p)?;
            let t = realize(f, &map.target, p)?;
            let m = map.matrix(f, &s, &t)?;
            if !commutes(f, &m, &s, &t) {
                return precondition(format!("map is not equivariant at precision {p}"));
            }
            match &**expr {
                ModuleExpr::Kernel(_) => kernel_of(f, &m, &s, expr.clone()),
                ModuleExpr::Cokernel(_) => cokernel_of(f, &m, &t, expr.clone()),
                _ => image_of(f, &m, &s, &t, expr.clone()),
            }
        }
        ModuleExpr::Lattice(l) => {
            let (x, z) = l.truncate(f, p)?;
            let r = l.rank();
            let gens = (0..r)
                .map(|j| {
                    let mut v = vec![f.zero(); r * p];
                    v[j] = f.one();
                    v
                })
                .collect();
            LocalModule::assemble(f, l.n(), p, x, z, expr.clone(), Some(gens), None)
        }
        ModuleExpr::Raw { .. } => {
            precision("module has no structural provenance and cannot be rebuilt")
        }
    }
}

fn realize_presented<F: Field>(
    f: &F,
    expr: Arc<ModuleExpr<F>>,
    pres: &PresentationMatrix<F::Elem>,
) -> Result<LocalModule<F>> {
    let (n, p, g) = (pres.n(), pres.p(), pres.rows());
    let block = n * p;
    let total = g * block;
    let idx = |j: usize, a: usize, b: usize| j * block + a * n + b;
    let mut rel = Echelon::new(total);
    for col in pres.relations() {
        let terms: Vec<Vec<(usize, usize, F::Elem)>> = col
            .iter()
            .map(|e| e.terms(f).map(|(a, b, c)| (a, b, c.clone())).collect())
            .collect();
        for a0 in 0..p {
            for b0 in 0..n {
                let mut v = vec![f.zero(); total];
                let mut any = false;
                for (j, ts) in terms.iter().enumerate() {
                    for (a, b, c) in ts {
                        if a + a0 < p && b + b0 < n {
                            let i = idx(j, a + a0, b + b0);
                            v[i] = f.add(&v[i], c);
                            any = true;
                        }
                    }
                }
                if any {
                    rel.insert(f, v);
                }
            }
        }
    }
    let mut is_pivot = vec![false; total];
    for &pv in rel.pivots() {
        is_pivot[pv] = true;
    }
    let basis: Vec<usize> = (0..total).filter(|&i| !is_pivot[i]).collect();
    let mut pos = vec![usize::MAX; total];
    for (k, &i) in basis.iter().enumerate() {
        pos[i] = k;
    }
    let d = basis.len();
    // class of the unit vector at `i`, in quotient coordinates
    let class = |i: usize| -> Vec<F::Elem> {
        let mut e = vec![f.zero(); total];
        e[i] = f.one();
        let r = rel.reduce(f, &e);
        basis.iter().map(|&k| r[k].clone()).collect()
    };
    let mut x = zeros(f, d, d);
    let mut z = zeros(f, d, d);
    let mut labels = Vec::with_capacity(d);
    for (col, &i) in basis.iter().enumerate() {
        let (j, a, b) = (i / block, (i % block) / n, i % n);
        labels.push((j, a, b));
        if a + 1 < p {
            for (row, v) in class(idx(j, a + 1, b)).into_iter().enumerate() {
                x.set(row, col, v);
            }
        }
        if b + 1 < n {
            for (row, v) in class(idx(j, a, b + 1)).into_iter().enumerate() {
                z.set(row, col, v);
            }
        }
    }
    let _ = pos;
    let gens = (0..g).map(|j| class(idx(j, 0, 0))).collect();
    LocalModule::assemble(f, n, p, x, z, expr, Some(gens), Some(labels))
}

fn algebra_ops<F: Field>(f: &F, n: usize, p: usize) -> (Matrix<F::Elem>, Matrix<F::Elem>) {
    let d = n * p;
    let mut x = zeros(f, d, d);
    let mut z = zeros(f, d, d);
    for a in 0..p {
        for b in 0..n {
            if a + 1 < p {
                x.set((a + 1) * n + b, a * n + b, f.one());
            }
            if b + 1 < n {
                z.set(a * n + b + 1, a * n + b, f.one());
            }
        }
    }
    (x, z)
}

fn realize_ideal<F: Field>(
    f: &F,
    expr: Arc<ModuleExpr<F>>,
    n: usize,
    p: usize,
    gens: &[RingElem<F::Elem>],
) -> Result<LocalModule<F>> {
    let (ax, az) = algebra_ops(f, n, p);
    let mut span = Echelon::new(n * p);
    for g in gens {
        for a0 in 0..p {
            for b0 in 0..n {
                let mono = RingElem::monomial(f, n, p, f.one(), a0, b0);
                let prod = mono.mul(f, g);
                if !prod.is_zero(f) {
                    span.insert(f, prod.coeffs().to_vec());
                }
            }
        }
    }
    let x = restrict_op(f, &SparseOp::new(f, &ax), &span)
        .ok_or_else(|| Error::Defect("ideal not x-stable".into()))?;
    let z = restrict_op(f, &SparseOp::new(f, &az), &span)
        .ok_or_else(|| Error::Defect("ideal not z-stable".into()))?;
    let gvecs = gens
        .iter()
        .map(|g| {
            span.coords(f, g.coeffs())
                .ok_or_else(|| Error::Defect("generator outside its ideal".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    LocalModule::assemble(f, n, p, x, z, expr, Some(gvecs), None)
}

fn sum_of<F: Field>(
    f: &F,
    n: usize,
    p: usize,
    parts: &[LocalModule<F>],
    expr: Arc<ModuleExpr<F>>,
) -> Result<LocalModule<F>> {
    let mut x = zeros(f, 0, 0);
    let mut z = zeros(f, 0, 0);
    for m in parts {
        if m.n != n || m.p != p {
            return invalid("direct sum of modules over different rings");
        }
        x = block_diag(f, &x, &m.x);
        z = block_diag(f, &z, &m.z);
    }
    let total = x.rows();
    let gens = if parts.iter().all(|m| m.gens.is_some()) {
        let mut out = Vec::new();
        let mut off = 0;
        for m in parts {
            for g in m.gens.as_ref().unwrap() {
                let mut v = vec![f.zero(); total];
                v[off..off + g.len()].clone_from_slice(g);
                out.push(v);
            }
            off += m.dim();
        }
        Some(out)
    } else {
        None
    };
    let labels = if parts.iter().all(|m| m.labels.is_some() && m.gens.is_some()) {
        let mut out = Vec::new();
        let mut goff = 0;
        for m in parts {
            out.extend(
                m.labels
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|&(j, a, b)| (j + goff, a, b)),
            );
            goff += m.gens.as_ref().unwrap().len();
        }
        Some(out)
    } else {
        None
    };
    LocalModule::assemble(f, n, p, x, z, expr, gens, labels)
}

fn kernel_of<F: Field>(
    f: &F,
    m: &Matrix<F::Elem>,
    s: &LocalModule<F>,
    expr: Arc<ModuleExpr<F>>,
) -> Result<LocalModule<F>> {
    let k = Echelon::span(f, s.dim(), nullspace(f, m));
    let x = restrict_op(f, &SparseOp::new(f, &s.x), &k)
        .ok_or_else(|| Error::Precondition("kernel not x-stable".into()))?;
    let z = restrict_op(f, &SparseOp::new(f, &s.z), &k)
        .ok_or_else(|| Error::Precondition("kernel not z-stable".into()))?;
    LocalModule::assemble(f, s.n, s.p, x, z, expr, None, None)
}

fn image_of<F: Field>(
    f: &F,
    m: &Matrix<F::Elem>,
    s: &LocalModule<F>,
    t: &LocalModule<F>,
    expr: Arc<ModuleExpr<F>>,
) -> Result<LocalModule<F>> {
    let w = Echelon::span(f, t.dim(), (0..m.cols()).map(|j| m.col(j)));
    let x = restrict_op(f, &SparseOp::new(f, &t.x), &w)
        .ok_or_else(|| Error::Precondition("image not x-stable".into()))?;
    let z = restrict_op(f, &SparseOp::new(f, &t.z), &w)
        .ok_or_else(|| Error::Precondition("image not z-stable".into()))?;
    let gens = s.gens.as_ref().map(|gs| {
        gs.iter()
            .map(|g| {
                w.coords(f, &crate::linalg::mat_vec(f, m, g))
                    .expect("image of a generator lies in the image")
            })
            .collect()
    });
    LocalModule::assemble(f, t.n, t.p, x, z, expr, gens, None)
}

fn cokernel_of<F: Field>(
    f: &F,
    m: &Matrix<F::Elem>,
    t: &LocalModule<F>,
    expr: Arc<ModuleExpr<F>>,
) -> Result<LocalModule<F>> {
    let w = Echelon::span(f, t.dim(), (0..m.cols()).map(|j| m.col(j)));
    quotient_module(f, t, &w, expr)
}

fn quotient_module<F: Field>(
    f: &F,
    t: &LocalModule<F>,
    w: &Echelon<F::Elem>,
    expr: Arc<ModuleExpr<F>>,
) -> Result<LocalModule<F>> {
    let d = t.dim();
    let mut is_pivot = vec![false; d];
    for &pv in w.pivots() {
        is_pivot[pv] = true;
    }
    let basis: Vec<usize> = (0..d).filter(|&i| !is_pivot[i]).collect();
    let project = |v: &[F::Elem]| -> Vec<F::Elem> {
        let r = w.reduce(f, v);
        basis.iter().map(|&k| r[k].clone()).collect()
    };
    let q = basis.len();
    let mut x = zeros(f, q, q);
    let mut z = zeros(f, q, q);
    for (col, &i) in basis.iter().enumerate() {
        for (row, v) in project(&t.x.col(i)).into_iter().enumerate() {
            x.set(row, col, v);
        }
        for (row, v) in project(&t.z.col(i)).into_iter().enumerate() {
            z.set(row, col, v);
        }
    }
    let gens = t
        .gens
        .as_ref()
        .map(|gs| gs.iter().map(|g| project(g)).collect());
    let labels = t
        .labels
        .as_ref()
        .map(|ls| basis.iter().map(|&i| ls[i]).collect());
    LocalModule::assemble(f, t.n, t.p, x, z, expr, gens, labels)
}

/// The regular module A_{n,p}.
pub fn build_algebra<F: Field>(f: &F, n: usize, p: usize) -> Result<LocalModule<F>> {
    if n == 0 || p == 0 {
        return invalid("n and p must be at least 1");
    }
    let pres = PresentationMatrix::new(n, p, 1, vec![])?;
    realize(f, &presented_expr("A".into(), pres), p)
}

pub fn module_from_presentation<F: Field>(
    f: &F,
    pres: PresentationMatrix<F::Elem>,
) -> Result<LocalModule<F>> {
    let p = pres.p();
    realize(f, &presented_expr("coker".into(), pres), p)
}

fn mono<F: Field>(f: &F, n: usize, p: usize, a: usize, b: usize) -> Result<RingElem<F::Elem>> {
    RingElem::from_terms(f, n, p, &[(1, a, b)])
}

/// Provenance expression of a catalog module. Ring elements are stored at precision `p`.
pub fn standard_expr<F: Field>(
    f: &F,
    kind: &StandardKind,
    n: usize,
    p: usize,
) -> Result<Arc<ModuleExpr<F>>> {
    if n == 0 || p == 0 {
        return invalid("n and p must be at least 1");
    }
    let ideal = |label: String, gens: Vec<RingElem<F::Elem>>| {
        Arc::new(ModuleExpr::Ideal { label, n, gens })
    };
    let need_exp = |e: usize| -> Result<()> {
        if e >= p {
            precision(format!("exponent {e} is not below the precision {p}"))
        } else {
            Ok(())
        }
    };
    Ok(match kind {
        StandardKind::Structure { i } => {
            if *i == 0 || *i > n {
                return invalid(format!("O_{i} requires 1 <= i <= n = {n}"));
            }
            let rels = if *i < n {
                vec![vec![mono(f, n, p, 0, *i)?]]
            } else {
                vec![]
            };
            presented_expr(format!("O_{i}"), PresentationMatrix::new(n, p, 1, rels)?)
        }
        StandardKind::Torsion { k } => {
            if *k == 0 {
                return invalid("T_k requires k >= 1");
            }
            need_exp(*k)?;
            let rels = vec![vec![mono(f, n, p, *k, 0)?], vec![mono(f, n, p, 0, 1)?]];
            presented_expr(format!("T_{k}"), PresentationMatrix::new(n, p, 1, rels)?)
        }
        StandardKind::IdealPoint { k } => {
            if n != 2 {
                return precondition("ideal_point I_k is defined for n = 2 only");
            }
            if *k == 0 {
                return invalid("I_k requires k >= 1");
            }
            need_exp(*k)?;
            ideal(
                format!("I_{k}"),
                vec![mono(f, n, p, *k, 0)?, mono(f, n, p, 0, 1)?],
            )
        }
        StandardKind::J => {
            if n < 2 {
                return invalid("J_n requires n >= 2");
            }
            need_exp(1)?;
            ideal(
                format!("J_{n}"),
                vec![mono(f, n, p, 1, 0)?, mono(f, n, p, 0, n - 1)?],
            )
        }
        StandardKind::PointIdeal => {
            need_exp(1)?;
            ideal(
                "(x,z)".into(),
                vec![mono(f, n, p, 1, 0)?, mono(f, n, p, 0, 1)?],
            )
        }
        StandardKind::SubschemeA { p: pp, q } => {
            if n != 2 {
                return precondition("finite subscheme ideals are described for n = 2 only");
            }
            if pp + q == 0 {
                return invalid("subscheme_A requires p + q > 0");
            }
            need_exp(pp + q)?;
            ideal(
                format!("(x^{}, zx^{q})", pp + q),
                vec![mono(f, n, p, pp + q, 0)?, mono(f, n, p, *q, 1)?],
            )
        }
        StandardKind::SubschemeB { p: pp, q, m, alpha } => {
            if n != 2 {
                return precondition("finite subscheme ideals are described for n = 2 only");
            }
            if *m == 0 {
                return invalid("subscheme_B requires m > 0");
            }
            if alpha.is_empty() || f.is_zero(&f.from_i64(alpha[0])) {
                return invalid("alpha must be a unit (nonzero constant term)");
            }
            need_exp(q + m + pp)?;
            need_exp(q + alpha.len() - 1)?;
            let mut terms = vec![(1, q + m + pp, 0)];
            terms.extend(alpha.iter().enumerate().map(|(t, &c)| (c, q + t, 1)));
            let g1 = RingElem::from_terms(f, n, p, &terms)?;
            ideal(
                format!("(x^{} + zx^{q}a, zx^{})", q + m + pp, q + m),
                vec![g1, mono(f, n, p, q + m, 1)?],
            )
        }
    })
}

pub fn standard_module<F: Field>(
    f: &F,
    kind: &StandardKind,
    n: usize,
    p: usize,
) -> Result<LocalModule<F>> {
    realize(f, &standard_expr(f, kind, n, p)?, p)
}

/// Colength of an ideal module, read off at two precisions.
pub fn colength<F: Field>(m: &LocalModule<F>) -> Result<usize> {
    if !matches!(&**m.expr(), ModuleExpr::Ideal { .. }) {
        return precondition("colength is defined for ideal modules");
    }
    let m2 = m.at_precision(2 * m.p())?;
    let c1 = m.n() * m.p() - m.dim();
    let c2 = m.n() * m2.p() - m2.dim();
    if c1 != c2 {
        return precision(format!("colength {c1} at p = {} but {c2} at 2p", m.p()));
    }
    Ok(c1)
}

pub fn direct_sum<F: Field>(m: &LocalModule<F>, o: &LocalModule<F>) -> Result<LocalModule<F>> {
    if m.n != o.n || m.p != o.p || m.field != o.field {
        return invalid("direct sum of modules over different rings or fields");
    }
    let expr = if m.expr.rebuildable() && o.expr.rebuildable() {
        Arc::new(ModuleExpr::Sum {
            n: m.n,
            terms: vec![m.expr.clone(), o.expr.clone()],
        })
    } else {
        Arc::new(ModuleExpr::Raw {
            label: format!("{} + {}", m.expr.describe(), o.expr.describe()),
            n: m.n,
        })
    };
    sum_of(&m.field, m.n, m.p, &[m.clone(), o.clone()], expr)
}

/// Direct sum of realizations sharing ring and precision.
pub fn direct_sum_all<F: Field>(
    f: &F,
    n: usize,
    p: usize,
    parts: &[LocalModule<F>],
) -> Result<LocalModule<F>> {
    let expr = Arc::new(ModuleExpr::Sum {
        n,
        terms: parts.iter().map(|m| m.expr.clone()).collect(),
    });
    if !expr.rebuildable() {
        let label = expr.describe();
        return sum_of(f, n, p, parts, Arc::new(ModuleExpr::Raw { label, n }));
    }
    sum_of(f, n, p, parts, expr)
}

pub fn kernel<F: Field>(f: &F, map: &Arc<ModuleMap<F>>, p: usize) -> Result<LocalModule<F>> {
    realize(f, &Arc::new(ModuleExpr::Kernel(map.clone())), p)
}

pub fn cokernel<F: Field>(f: &F, map: &Arc<ModuleMap<F>>, p: usize) -> Result<LocalModule<F>> {
    realize(f, &Arc::new(ModuleExpr::Cokernel(map.clone())), p)
}

pub fn image<F: Field>(f: &F, map: &Arc<ModuleMap<F>>, p: usize) -> Result<LocalModule<F>> {
    realize(f, &Arc::new(ModuleExpr::Image(map.clone())), p)
}

/// Which construction `field_map_construction` performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapPart {
    Kernel,
    Cokernel,
    Image,
}

/// Reads a field-level map between presented modules as generator images.
fn lift_field_map<F: Field>(
    fm: &Matrix<F::Elem>,
    m: &LocalModule<F>,
    o: &LocalModule<F>,
) -> Option<ModuleMap<F>> {
    let f = &m.field;
    let gens = m.gens.as_ref()?;
    let tl = o.labels.as_ref()?;
    let tg = o.gens.as_ref()?.len();
    if !m.expr.rebuildable() || !o.expr.rebuildable() || m.labels.is_none() {
        return None;
    }
    let mut images = Vec::with_capacity(gens.len());
    for g in gens {
        let v = crate::linalg::mat_vec(f, fm, g);
        let mut coeffs = vec![RingElem::zero(f, m.n, m.p); tg];
        for (k, c) in v.iter().enumerate() {
            if f.is_zero(c) {
                continue;
            }
            let (i, a, b) = tl[k];
            coeffs[i] = coeffs[i].add(f, &RingElem::monomial(f, m.n, m.p, c.clone(), a, b));
        }
        images.push(coeffs);
    }
    ModuleMap::new(f, m.expr.clone(), o.expr.clone(), images, m.p).ok()
}

/// Kernel, cokernel or image of an equivariant field matrix `fm : m -> o`.
/// When both ends are presented and the map is determined by generator images
/// that stay well defined at doubled precision, the result keeps a rebuildable
/// provenance; otherwise it is a raw single-precision module.
pub fn field_map_construction<F: Field>(
    fm: &Matrix<F::Elem>,
    m: &LocalModule<F>,
    o: &LocalModule<F>,
    part: MapPart,
) -> Result<LocalModule<F>> {
    let f = &m.field;
    if m.n != o.n || m.p != o.p || m.field != o.field {
        return invalid("map between modules over different rings or fields");
    }
    if fm.rows() != o.dim() || fm.cols() != m.dim() {
        return invalid(format!(
            "map matrix is {}x{}, expected {}x{}",
            fm.rows(),
            fm.cols(),
            o.dim(),
            m.dim()
        ));
    }
    if !commutes(f, fm, m, o) {
        return precondition("map does not commute with the x and z actions");
    }
    if let Some(map) = lift_field_map(fm, m, o) {
        let map = Arc::new(map);
        if map.matrix(f, m, o).ok().as_ref() == Some(fm) {
            let expr = Arc::new(match part {
                MapPart::Kernel => ModuleExpr::Kernel(map),
                MapPart::Cokernel => ModuleExpr::Cokernel(map),
                MapPart::Image => ModuleExpr::Image(map),
            });
            return realize(f, &expr, m.p);
        }
    }
    let label = format!("{part:?}({} -> {})", m.expr.describe(), o.expr.describe()).to_lowercase();
    let expr = Arc::new(ModuleExpr::Raw { label, n: m.n });
    match part {
        MapPart::Kernel => kernel_of(f, fm, m, expr),
        MapPart::Cokernel => cokernel_of(f, fm, o, expr),
        MapPart::Image => image_of(f, fm, m, o, expr),
    }
}

pub fn map_kernel<F: Field>(
    fm: &Matrix<F::Elem>,
    m: &LocalModule<F>,
    o: &LocalModule<F>,
) -> Result<LocalModule<F>> {
    field_map_construction(fm, m, o, MapPart::Kernel)
}

pub fn map_cokernel<F: Field>(
    fm: &Matrix<F::Elem>,
    m: &LocalModule<F>,
    o: &LocalModule<F>,
) -> Result<LocalModule<F>> {
    field_map_construction(fm, m, o, MapPart::Cokernel)
}

pub fn map_image<F: Field>(
    fm: &Matrix<F::Elem>,
    m: &LocalModule<F>,
    o: &LocalModule<F>,
) -> Result<LocalModule<F>> {
    field_map_construction(fm, m, o, MapPart::Image)
}

/// Dimension of the space of equivariant maps `m -> o`, solved directly from
/// the commutation equations FX = XF and FZ = ZF.
pub fn hom_dimension<F: Field>(m: &LocalModule<F>, o: &LocalModule<F>) -> Result<usize> {
    let f = &m.field;
    if m.n != o.n || m.p != o.p {
        return invalid("hom between modules over different rings");
    }
    let (dm, dn) = (m.dim(), o.dim());
    let unknowns = dm * dn;
    let mut eqs = Echelon::new(unknowns);
    for (a, b) in [(&m.x, &o.x), (&m.z, &o.z)] {
        // (F a - b F)[i][j] = sum_k F[i][k] a[k][j] - sum_k b[i][k] F[k][j]
        for i in 0..dn {
            for j in 0..dm {
                let mut row = vec![f.zero(); unknowns];
                for k in 0..dm {
                    let c = a.get(k, j);
                    if !f.is_zero(c) {
                        row[i * dm + k] = f.add(&row[i * dm + k], c);
                    }
                }
                for k in 0..dn {
                    let c = b.get(i, k);
                    if !f.is_zero(c) {
                        row[k * dm + j] = f.sub(&row[k * dm + j], c);
                    }
                }
                eqs.insert(f, row);
            }
        }
    }
    Ok(unknowns - eqs.dim())
}

/// Whether a field matrix commutes with both actions.
pub fn is_equivariant<F: Field>(
    fm: &Matrix<F::Elem>,
    m: &LocalModule<F>,
    o: &LocalModule<F>,
) -> bool {
    fm.rows() == o.dim() && fm.cols() == m.dim() && commutes(&m.field, fm, m, o)
}

pub fn zero_map<F: Field>(f: &F, m: &LocalModule<F>, o: &LocalModule<F>) -> Matrix<F::Elem> {
    zeros(f, o.dim(), m.dim())
}

pub fn matrices_equal<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &Matrix<F::Elem>) -> bool {
    a.rows() == b.rows() && a.cols() == b.cols() && is_zero_matrix(f, &mat_sub(f, a, b))
}
