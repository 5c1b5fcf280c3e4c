//! Seeded random constructions used by property tests and the acceptance suite.

use std::sync::Arc;

use rand::Rng;

use crate::error::{defect, Result};
use crate::field::Field;
use crate::filtrations::type_rank;
use crate::linalg::rank;
use crate::module::{realize, standard_expr, LocalModule, ModuleExpr, ModuleMap, StandardKind};
use crate::ring::RingElem;

/// A catalogue module valid over O_n at precision p.
pub fn random_kind<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize) -> StandardKind {
    let kmax = (p / 2).max(1);
    loop {
        let kind = match rng.gen_range(0..8) {
            0 | 1 => StandardKind::Structure {
                i: rng.gen_range(1..=n),
            },
            2 => StandardKind::Torsion {
                k: rng.gen_range(1..=kmax),
            },
            3 => StandardKind::PointIdeal,
            4 if n >= 2 => StandardKind::J,
            5 if n == 2 => StandardKind::IdealPoint {
                k: rng.gen_range(1..=kmax),
            },
            6 if n == 2 => {
                let q = rng.gen_range(0..kmax);
                StandardKind::SubschemeA {
                    p: rng.gen_range(1..=kmax - q.min(kmax - 1)),
                    q,
                }
            }
            7 if n == 2 => {
                let (pp, q, m) = (
                    rng.gen_range(0..2),
                    rng.gen_range(0..2),
                    rng.gen_range(1..3),
                );
                // the colength must stay below the precision
                if 2 * (q + m) + pp >= p {
                    continue;
                }
                StandardKind::SubschemeB {
                    p: pp,
                    q,
                    m,
                    alpha: vec![rng.gen_range(1..5), rng.gen_range(-3..4)],
                }
            }
            _ => continue,
        };
        return kind;
    }
}

/// Direct sum of 1..=terms random catalogue modules.
pub fn random_structural_expr<F: Field, R: Rng + ?Sized>(
    f: &F,
    rng: &mut R,
    n: usize,
    p: usize,
    terms: usize,
) -> Result<Arc<ModuleExpr<F>>> {
    let count = rng.gen_range(1..=terms.max(1));
    let parts = (0..count)
        .map(|_| standard_expr(f, &random_kind(rng, n, p), n, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(if parts.len() == 1 {
        parts.into_iter().next().expect("one part")
    } else {
        Arc::new(ModuleExpr::Sum { n, terms: parts })
    })
}

/// A type (m_1..m_n) of generalized rank between 1 and `max_rank`.
pub fn random_type<R: Rng + ?Sized>(rng: &mut R, n: usize, max_rank: usize) -> Vec<usize> {
    loop {
        let ty: Vec<usize> = (1..=n).map(|i| rng.gen_range(0..=max_rank / i)).collect();
        let r = type_rank(&ty);
        if (1..=max_rank).contains(&r) {
            return ty;
        }
    }
}

/// Generators of the quasi-free module of the given type: the list of i with O_i summands.
pub fn type_summands(ty: &[usize]) -> Vec<usize> {
    ty.iter()
        .enumerate()
        .flat_map(|(i, &m)| std::iter::repeat(i + 1).take(m))
        .collect()
}

pub fn quasi_free_expr<F: Field>(f: &F, ty: &[usize], p: usize) -> Result<Arc<ModuleExpr<F>>> {
    let n = ty.len();
    let terms = type_summands(ty)
        .into_iter()
        .map(|i| standard_expr(f, &StandardKind::Structure { i }, n, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(ModuleExpr::Sum { n, terms }))
}

pub fn quasi_free_module<F: Field>(f: &F, ty: &[usize], p: usize) -> Result<LocalModule<F>> {
    realize(f, &quasi_free_expr(f, ty, p)?, p)
}

/// Random element of A_{n,p} with small x-degree, optionally without constant term.
pub fn random_elem<F: Field, R: Rng + ?Sized>(
    f: &F,
    rng: &mut R,
    n: usize,
    p: usize,
    nilpotent: bool,
) -> RingElem<F::Elem> {
    let mut e = RingElem::zero(f, n, p);
    for a in 0..p.min(3) {
        for b in 0..n {
            if (a, b) == (0, 0) && nilpotent || rng.gen_bool(0.5) {
                continue;
            }
            e = e.add(
                f,
                &RingElem::monomial(f, n, p, f.from_i64(rng.gen_range(-4..5)), a, b),
            );
        }
    }
    e
}

fn z_pow<F: Field>(f: &F, n: usize, p: usize, k: usize) -> RingElem<F::Elem> {
    if k >= n {
        RingElem::zero(f, n, p)
    } else {
        RingElem::monomial(f, n, p, f.one(), 0, k)
    }
}

/// A surjection between quasi-free modules: every target summand O_j receives a
/// source summand O_j with unit coefficient; extra source summands map anywhere.
pub fn random_quasi_free_surjection<F: Field, R: Rng + ?Sized>(
    f: &F,
    rng: &mut R,
    n: usize,
    p: usize,
    max_rank: usize,
) -> Result<Arc<ModuleMap<F>>> {
    let target_ty = random_type(rng, n, max_rank);
    let extra = random_type(rng, n, max_rank);
    let tgt = type_summands(&target_ty);
    let mut src = tgt.clone();
    src.extend(type_summands(&extra));
    let mut source_ty = vec![0; n];
    for &i in &src {
        source_ty[i - 1] += 1;
    }
    let src_sorted = type_summands(&source_ty);
    // pair each target summand with a distinct source summand of the same index
    let mut used = vec![false; src_sorted.len()];
    let mut images = vec![vec![RingElem::zero(f, n, p); tgt.len()]; src_sorted.len()];
    for (t, &j) in tgt.iter().enumerate() {
        let s = (0..src_sorted.len())
            .find(|&s| !used[s] && src_sorted[s] == j)
            .expect("paired summand");
        used[s] = true;
        images[s][t] = RingElem::one(f, n, p).add(f, &random_elem(f, rng, n, p, true));
    }
    for (s, &i) in src_sorted.iter().enumerate() {
        for (t, &j) in tgt.iter().enumerate() {
            // z^i kills the image: it lies in z^(j - i) O_j
            let shift = z_pow(f, n, p, j.saturating_sub(i));
            let noise = shift.mul(f, &random_elem(f, rng, n, p, true));
            images[s][t] = images[s][t].add(f, &noise);
        }
    }
    let map = Arc::new(ModuleMap::new(
        f,
        quasi_free_expr(f, &source_ty, p)?,
        quasi_free_expr(f, &target_ty, p)?,
        images,
        p,
    )?);
    let (s, t) = (realize(f, &map.source, p)?, realize(f, &map.target, p)?);
    if rank(f, &map.matrix(f, &s, &t)?) != t.dim() {
        return defect("constructed map is not surjective");
    }
    Ok(map)
}

/// A surjection from a quasi-free module onto a sum of torsion modules O_C/(x^k).
pub fn random_torsion_surjection<F: Field, R: Rng + ?Sized>(
    f: &F,
    rng: &mut R,
    n: usize,
    p: usize,
    max_rank: usize,
) -> Result<Arc<ModuleMap<F>>> {
    let source_ty = random_type(rng, n, max_rank);
    let src = type_summands(&source_ty);
    let count = rng.gen_range(1..=src.len().min(2));
    let ks: Vec<usize> = (0..count)
        .map(|_| rng.gen_range(1..=(p / 2).max(1)))
        .collect();
    let mut images = vec![vec![RingElem::zero(f, n, p); count]; src.len()];
    for (s, row) in images.iter_mut().enumerate() {
        for (t, e) in row.iter_mut().enumerate() {
            *e = if s == t {
                RingElem::one(f, n, p)
            } else {
                RingElem::zero(f, n, p)
            }
            .add(f, &random_elem(f, rng, n, p, true));
        }
    }
    let target = Arc::new(ModuleExpr::Sum {
        n,
        terms: ks
            .iter()
            .map(|&k| standard_expr(f, &StandardKind::Torsion { k }, n, p))
            .collect::<Result<Vec<_>>>()?,
    });
    let map = Arc::new(ModuleMap::new(
        f,
        quasi_free_expr(f, &source_ty, p)?,
        target,
        images,
        p,
    )?);
    let (s, t) = (realize(f, &map.source, p)?, realize(f, &map.target, p)?);
    if rank(f, &map.matrix(f, &s, &t)?) != t.dim() {
        return defect("constructed map is not surjective");
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;
    use crate::filtrations::quasi_free_type;
    use crate::module::kernel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_build() {
        let f = Fp::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..5 {
            for _ in 0..5 {
                let e = random_structural_expr(&f, &mut rng, n, 6, 3).unwrap();
                realize(&f, &e, 6).unwrap();
                let m = random_quasi_free_surjection(&f, &mut rng, n, 5, 4).unwrap();
                assert!(quasi_free_type(&kernel(&f, &m, 5).unwrap())
                    .unwrap()
                    .is_quasi_free());
                random_torsion_surjection(&f, &mut rng, n, 6, 4).unwrap();
            }
        }
    }
}
