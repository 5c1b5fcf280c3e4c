//! Deformations of quasi-free modules: the proved criterion on O_2, the order by
//! characteristic functions in general, and the poset of types of fixed rank.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{defect, invalid, precondition, Result};
use crate::field::Field;
use crate::filtrations::{
    generalized_rank, generic_type, quasi_free_type, type_char_function, type_rank,
};
use crate::module::{
    direct_sum_all, module_from_presentation, standard_module, LocalModule, StandardKind,
};
use crate::normal_forms::{extension_presentation, ExtMatrix};

/// (m_1, ..., m_n): the module sum of m_i copies of O_i.
pub type QuasiFreeType = Vec<usize>;

pub fn type_label(t: &[usize]) -> String {
    let parts: Vec<String> = t.iter().map(|m| m.to_string()).collect();
    format!("({})", parts.join(","))
}

fn check_type(t: &[usize]) -> Result<()> {
    if t.is_empty() {
        return invalid("a quasi-free type needs at least one entry");
    }
    Ok(())
}

/// Whether a module of type `from` deforms to modules of type `to` on O_2.
/// `from` is the special fiber: the rank of the free part may only grow.
pub fn deforms_to(from: &[usize], to: &[usize]) -> Result<bool> {
    check_type(from)?;
    if from.len() != 2 || to.len() != 2 {
        return precondition("the deformation criterion is proved only for n = 2; use char_order");
    }
    Ok(type_rank(from) == type_rank(to) && to[1] >= from[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeOrder {
    Below,
    Equal,
    Above,
    Incomparable,
}

/// Pointwise comparison of first characteristic functions; types of different rank are incomparable.
pub fn char_order(a: &[usize], b: &[usize]) -> Result<TypeOrder> {
    check_type(a)?;
    if a.len() != b.len() {
        return invalid("types over different multiplicities");
    }
    if type_rank(a) != type_rank(b) {
        return Ok(TypeOrder::Incomparable);
    }
    let (fa, fb) = (type_char_function(a), type_char_function(b));
    Ok(match (fa.dominated_by(&fb), fb.dominated_by(&fa)) {
        (true, true) => TypeOrder::Equal,
        (true, false) => TypeOrder::Below,
        (false, true) => TypeOrder::Above,
        (false, false) => TypeOrder::Incomparable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub deforms: bool,
    /// The answer rests on the unproved characteristic-function criterion (n >= 3).
    pub conjectural: bool,
}

/// The proved criterion for n = 2, the characteristic-function order otherwise.
pub fn deformation_verdict(from: &[usize], to: &[usize]) -> Result<Verdict> {
    if from.len() == 2 {
        return Ok(Verdict {
            deforms: deforms_to(from, to)?,
            conjectural: false,
        });
    }
    let o = char_order(from, to)?;
    Ok(Verdict {
        deforms: matches!(o, TypeOrder::Below | TypeOrder::Equal),
        conjectural: from.len() >= 3,
    })
}

/// All types of generalized rank `r` over O_n, in lexicographic order.
pub fn types_of_rank(r: usize, n: usize) -> Vec<QuasiFreeType> {
    fn go(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<QuasiFreeType>) {
        if i == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for m in 0..=left / i {
            cur[i - 1] = m;
            go(i - 1, left - m * i, cur, out);
        }
        cur[i - 1] = 0;
    }
    let mut out = Vec::new();
    if n > 0 {
        go(n, r, &mut vec![0; n], &mut out);
    }
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeNode {
    #[serde(rename = "type")]
    pub ty: QuasiFreeType,
    pub rank: usize,
    pub char_function: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypePoset {
    pub rank: usize,
    pub n: usize,
    pub conjectural: bool,
    pub nodes: Vec<TypeNode>,
    /// Covering relations (special, generic) as node indices.
    pub edges: Vec<(usize, usize)>,
    pub maximal: Vec<usize>,
}

pub fn type_poset(r: usize, n: usize) -> Result<TypePoset> {
    if r < 1 || n < 2 {
        return invalid("type poset needs R >= 1 and n >= 2");
    }
    let types = types_of_rank(r, n);
    let k = types.len();
    let mut below = vec![vec![false; k]; k];
    for i in 0..k {
        for j in 0..k {
            below[i][j] = char_order(&types[i], &types[j])? == TypeOrder::Below;
        }
    }
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if below[i][j] && !(0..k).any(|c| below[i][c] && below[c][j]) {
                edges.push((i, j));
            }
        }
    }
    let maximal = (0..k).filter(|&i| !(0..k).any(|j| below[i][j])).collect();
    let nodes = types
        .into_iter()
        .map(|ty| TypeNode {
            rank: r,
            char_function: type_char_function(&ty).values,
            ty,
        })
        .collect();
    Ok(TypePoset {
        rank: r,
        n,
        conjectural: n >= 3,
        nodes,
        edges,
        maximal,
    })
}

impl TypePoset {
    pub fn generic_index(&self) -> Option<usize> {
        let g = generic_type(self.rank, self.n);
        self.nodes.iter().position(|v| v.ty == g)
    }

    pub fn to_json(&self) -> Value {
        let label = |i: usize| type_label(&self.nodes[i].ty);
        let mut adjacency = serde_json::Map::new();
        for (i, v) in self.nodes.iter().enumerate() {
            let out: Vec<String> = self
                .edges
                .iter()
                .filter(|e| e.0 == i)
                .map(|e| label(e.1))
                .collect();
            adjacency.insert(type_label(&v.ty), json!(out));
        }
        json!({
            "rank": self.rank,
            "n": self.n,
            "status": if self.conjectural { "conjectural" } else { "proved" },
            "nodes": self.nodes,
            "adjacency": adjacency,
            "maximal": self.maximal.iter().map(|&i| label(i)).collect::<Vec<_>>(),
        })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph types {\n");
        if self.conjectural {
            s.push_str("  label=\"conjectural\";\n");
        }
        for v in &self.nodes {
            let _ = writeln!(s, "  \"{}\";", type_label(&v.ty));
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\";",
                type_label(&self.nodes[a].ty),
                type_label(&self.nodes[b].ty)
            );
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub from: QuasiFreeType,
    pub to: QuasiFreeType,
    /// Types observed at class 0 and at the unit class.
    pub observed: (QuasiFreeType, QuasiFreeType),
    pub ranks: (usize, usize),
}

/// The module (m_1 - 2) O_C + m_2 O_2 + N_t, with N_t the extension of O_C by O_C of class t.
fn family_member<F: Field>(f: &F, base: &[usize], t: i64, p: usize) -> Result<LocalModule<F>> {
    let a = ExtMatrix::from_polys(f, p, &[vec![vec![t]]])?;
    let mut parts = vec![module_from_presentation(
        f,
        extension_presentation(f, &a, p)?,
    )?];
    for (i, &m) in base.iter().enumerate() {
        for _ in 0..m {
            parts.push(standard_module(
                f,
                &StandardKind::Structure { i: i + 1 },
                2,
                p,
            )?);
        }
    }
    direct_sum_all(f, 2, p, &parts)
}

/// Realizes the covering edge (m_1, m_2) -> (m_1 - 2, m_2 + 1) by a two-point family of extensions.
pub fn witness_family<F: Field>(f: &F, from: &[usize], to: &[usize], p: usize) -> Result<Witness> {
    if from.len() != 2 || to.len() != 2 || from[0] < 2 || to != [from[0] - 2, from[1] + 1] {
        return precondition(format!(
            "{} -> {} is not a covering edge on O_2",
            type_label(from),
            type_label(to)
        ));
    }
    let base = [from[0] - 2, from[1]];
    let (m0, m1) = (
        family_member(f, &base, 0, p)?,
        family_member(f, &base, 1, p)?,
    );
    let observed = |m: &LocalModule<F>| -> Result<QuasiFreeType> {
        quasi_free_type(m)?
            .m
            .ok_or_else(|| crate::Error::Defect("family member is not quasi-free".into()))
    };
    let w = Witness {
        from: from.to_vec(),
        to: to.to_vec(),
        observed: (observed(&m0)?, observed(&m1)?),
        ranks: (generalized_rank(&m0)?, generalized_rank(&m1)?),
    };
    if w.observed != (w.from.clone(), w.to.clone()) {
        return defect(format!("family endpoints have types {:?}", w.observed));
    }
    Ok(w)
}

/// Covering edges of the O_2 poset, each checked against the proved criterion.
pub fn n2_edges(r: usize) -> Result<Vec<(QuasiFreeType, QuasiFreeType)>> {
    let poset = type_poset(r, 2)?;
    let mut out = BTreeSet::new();
    for &(a, b) in &poset.edges {
        let (x, y) = (&poset.nodes[a].ty, &poset.nodes[b].ty);
        if !deforms_to(x, y)? {
            return defect("covering edge violates the deformation criterion");
        }
        out.insert((x.clone(), y.clone()));
    }
    Ok(out.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp;

    #[test]
    fn criterion_examples() {
        assert!(deforms_to(&[2, 0], &[0, 1]).unwrap());
        assert!(!deforms_to(&[0, 1], &[2, 0]).unwrap());
        assert!(deforms_to(&[1, 1], &[1, 1]).unwrap());
        assert!(deforms_to(&[1, 0, 0], &[1, 0, 0]).is_err());
        let v = deformation_verdict(&[3, 0, 0], &[1, 1, 0]).unwrap();
        assert!(v.deforms && v.conjectural);
    }

    #[test]
    fn orders() {
        assert_eq!(
            char_order(&[3, 0, 0], &[1, 1, 0]).unwrap(),
            TypeOrder::Below
        );
        assert_eq!(type_char_function(&[1, 1, 0]).values, vec![0, 0, 1, 3]);
        assert_eq!(
            char_order(&[0, 0, 1], &[1, 1, 0]).unwrap(),
            TypeOrder::Above
        );
        assert_eq!(
            char_order(&[1, 0], &[0, 1]).unwrap(),
            TypeOrder::Incomparable
        );
    }

    #[test]
    fn posets() {
        let p = type_poset(2, 2).unwrap();
        assert_eq!((p.nodes.len(), p.edges.len()), (2, 1));
        assert_eq!(
            p.to_dot(),
            "digraph types {\n  \"(0,1)\";\n  \"(2,0)\";\n  \"(2,0)\" -> \"(0,1)\";\n}\n"
        );
        let p = type_poset(3, 2).unwrap();
        assert_eq!((p.nodes.len(), p.edges.len()), (2, 1));
        let p = type_poset(1, 3).unwrap();
        assert_eq!((p.nodes.len(), p.edges.len()), (1, 0));
        for r in 1..7 {
            for n in 2..5 {
                let p = type_poset(r, n).unwrap();
                assert_eq!(p.maximal, vec![p.generic_index().unwrap()]);
            }
        }
    }

    #[test]
    fn witnesses() {
        let f = Fp::default();
        for r in 2..5 {
            for (a, b) in n2_edges(r).unwrap() {
                let w = witness_family(&f, &a, &b, 4).unwrap();
                assert_eq!(w.ranks, (r, r));
            }
        }
    }
}
