//! Batch jobs: a JSON document names a field, a precision, a seed and one command.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::deform::{char_order, deformation_verdict, type_poset, witness_family};
use crate::descriptors::{
    deformation_threshold, ideal_ext_dims, ideal_points_descriptor, locally_free_descriptor,
    qlf2_relations, qlf2_tensor, rank2_relations, rank3_analysis, rr_invariants, semistability,
    Bundle, IdealExtInput, Rank3Datum, SheafDescriptor,
};
use crate::error::{invalid, Error, Result};
use crate::field::{Field, FieldSpec, Fp, Rationals};
use crate::filtrations::{analyze, quasi_free_from};
use crate::homology::{
    check_resolution, connecting_map, ext_dims, obstruction_square, resolution_of, ResolutionTarget,
};
use crate::module::{presented_expr, realize, standard_expr, ModuleExpr, ModuleMap, StandardKind};
use crate::normal_forms::{
    classify_extension, classify_kernel, extension_presentation, nf_dual, nf_expr, nf_invariants,
    nf_of_module, reflexivity_check, round_trip_datum, ExtMatrix, KernelDatum, TorsionFreeNF,
};
use crate::ring::{PresentationMatrix, RingElem};

pub const DEFAULT_PRECISION: usize = 8;

/// `(c, a, b)` stands for c x^a z^b.
pub type Term = (i64, usize, usize);
pub type Poly = Vec<Term>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleSpec {
    Standard {
        n: usize,
        #[serde(flatten)]
        kind: StandardKind,
    },
    /// Cokernel of A_n^relations -> A_n^rows; each relation is a column.
    Presentation {
        n: usize,
        rows: usize,
        relations: Vec<Vec<Poly>>,
    },
    Ideal {
        n: usize,
        gens: Vec<Poly>,
    },
    Sum(Vec<ModuleSpec>),
    Kernel(MapSpec),
    Cokernel(MapSpec),
    Image(MapSpec),
    NormalForm(TorsionFreeNF),
    /// Extension of s O_C by r O_C over O_2 with an r x s class of polynomials in x.
    Extension {
        class: Vec<Vec<Vec<i64>>>,
    },
}

/// `images[j][i]`: coefficient of target generator i in the image of source generator j.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub source: Box<ModuleSpec>,
    pub target: Box<ModuleSpec>,
    pub images: Vec<Vec<Poly>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default)]
    pub line: usize,
    #[serde(default)]
    pub free: usize,
    pub torsion: Vec<usize>,
    pub images: Vec<Vec<Poly>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifyInput {
    Module(ModuleSpec),
    Kernel(KernelSpec),
    Extension { class: Vec<Vec<Vec<i64>>> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorSpec {
    LocallyFree {
        n: usize,
        r: u64,
        d: i64,
        g: i64,
        deg_l: i64,
    },
    IdealPoints {
        n: usize,
        g: i64,
        deg_l: i64,
        p0: u64,
    },
    Graded(SheafDescriptor),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Realize {
        module: ModuleSpec,
    },
    Invariants {
        module: ModuleSpec,
    },
    QuasiFree {
        module: ModuleSpec,
    },
    Classify(ClassifyInput),
    Reflexivity {
        module: ModuleSpec,
    },
    Dual {
        nf: TorsionFreeNF,
    },
    RoundTrip {
        nf: TorsionFreeNF,
    },
    Resolution {
        target: ResolutionTarget,
        n: usize,
        #[serde(default = "default_length")]
        length: usize,
    },
    Ext {
        target: ResolutionTarget,
        n: usize,
        coefficients: ModuleSpec,
        max_degree: usize,
    },
    Connecting {
        i: usize,
    },
    Obstruction {
        sigma: Vec<Vec<Vec<i64>>>,
    },
    Descriptor {
        descriptor: DescriptorSpec,
        #[serde(default)]
        delta: Option<i64>,
    },
    Semistability {
        sub: DescriptorSpec,
        whole: DescriptorSpec,
        #[serde(default)]
        strict: bool,
    },
    Qlf2 {
        e: Bundle,
        f: Bundle,
        deg_l: i64,
        #[serde(default)]
        tensor_with: Option<(Bundle, Bundle)>,
    },
    Rank2 {
        d: i64,
        deg_l: i64,
        i: u64,
    },
    Threshold {
        d: i64,
        deg_l: i64,
        p: i64,
    },
    Rank3(Rank3Datum),
    IdealExt(IdealExtInput),
    DeformsTo {
        from: Vec<usize>,
        to: Vec<usize>,
    },
    CharOrder {
        a: Vec<usize>,
        b: Vec<usize>,
    },
    Poset {
        rank: usize,
        n: usize,
    },
    Witness {
        from: Vec<usize>,
        to: Vec<usize>,
    },
}

fn default_length() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    #[default]
    Json,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobSpec {
    #[serde(default, deserialize_with = "field_from_doc")]
    pub field: FieldSpec,
    #[serde(default = "default_precision")]
    pub precision: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub emit: Emit,
    #[serde(flatten)]
    pub command: Command,
}

/// Accepts the command-line spelling ("rationals", "32003", "fp:7") or the tagged object.
fn field_from_doc<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<FieldSpec, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Doc {
        Text(String),
        Number(u64),
        Tagged(FieldSpec),
    }
    match Doc::deserialize(d)? {
        Doc::Text(t) => parse_field(&t).map_err(serde::de::Error::custom),
        Doc::Number(q) => parse_field(&q.to_string()).map_err(serde::de::Error::custom),
        Doc::Tagged(spec) => Ok(spec),
    }
}

fn default_precision() -> usize {
    DEFAULT_PRECISION
}

/// Values given on the command line take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub field: Option<FieldSpec>,
    pub precision: Option<usize>,
    pub seed: Option<u64>,
    pub emit: Option<Emit>,
}

impl JobSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("job document: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        self.field = o.field.unwrap_or(self.field);
        self.precision = o.precision.unwrap_or(self.precision);
        self.seed = o.seed.unwrap_or(self.seed);
        self.emit = o.emit.unwrap_or(self.emit);
    }
}

pub fn parse_field(s: &str) -> Result<FieldSpec> {
    match s {
        "rationals" | "q" | "Q" => Ok(FieldSpec::Rationals),
        _ => {
            let q = s
                .trim_start_matches("fp:")
                .parse::<u64>()
                .map_err(|_| Error::Invalid(format!("unknown field {s:?}")))?;
            Fp::new(q)?;
            Ok(FieldSpec::Prime { q })
        }
    }
}

/// Process exit status for an error: 2 parse or input, 3 precision, 4 precondition, 5 defect.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invalid(_) => 2,
        Error::Precision(_) => 3,
        Error::Precondition(_) => 4,
        Error::Defect(_) => 5,
    }
}

fn poly<F: Field>(f: &F, n: usize, p: usize, terms: &[Term]) -> Result<RingElem<F::Elem>> {
    RingElem::from_terms(f, n, p, terms)
}

pub fn build_expr<F: Field>(f: &F, spec: &ModuleSpec, p: usize) -> Result<Arc<ModuleExpr<F>>> {
    Ok(match spec {
        ModuleSpec::Standard { n, kind } => standard_expr(f, kind, *n, p)?,
        ModuleSpec::Presentation { n, rows, relations } => {
            let rels = relations
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|t| poly(f, *n, p, t))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            presented_expr(
                "presentation".into(),
                PresentationMatrix::new(*n, p, *rows, rels)?,
            )
        }
        ModuleSpec::Ideal { n, gens } => {
            let gens = gens
                .iter()
                .map(|t| poly(f, *n, p, t))
                .collect::<Result<Vec<_>>>()?;
            Arc::new(ModuleExpr::Ideal {
                label: "ideal".into(),
                n: *n,
                gens,
            })
        }
        ModuleSpec::Sum(parts) => {
            let terms = parts
                .iter()
                .map(|s| build_expr(f, s, p))
                .collect::<Result<Vec<_>>>()?;
            let Some(n) = terms.first().map(|t| t.n()) else {
                return invalid("empty direct sum");
            };
            if terms.iter().any(|t| t.n() != n) {
                return invalid("direct sum of modules over different rings");
            }
            Arc::new(ModuleExpr::Sum { n, terms })
        }
        ModuleSpec::Kernel(m) => Arc::new(ModuleExpr::Kernel(build_map(f, m, p)?)),
        ModuleSpec::Cokernel(m) => Arc::new(ModuleExpr::Cokernel(build_map(f, m, p)?)),
        ModuleSpec::Image(m) => Arc::new(ModuleExpr::Image(build_map(f, m, p)?)),
        ModuleSpec::NormalForm(nf) => nf_expr(
            f,
            &TorsionFreeNF::new(nf.ideals.clone(), nf.free, nf.line)?,
            p,
        )?,
        ModuleSpec::Extension { class } => {
            let a = ExtMatrix::from_polys(f, p, class)?;
            presented_expr("extension".into(), extension_presentation(f, &a, p)?)
        }
    })
}

fn build_map<F: Field>(f: &F, m: &MapSpec, p: usize) -> Result<Arc<ModuleMap<F>>> {
    let source = build_expr(f, &m.source, p)?;
    let target = build_expr(f, &m.target, p)?;
    let n = source.n();
    let images = m
        .images
        .iter()
        .map(|r| {
            r.iter()
                .map(|t| poly(f, n, p, t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(ModuleMap::new(f, source, target, images, p)?))
}

fn build_descriptor(d: &DescriptorSpec) -> Result<SheafDescriptor> {
    match d {
        DescriptorSpec::LocallyFree { n, r, d, g, deg_l } => {
            locally_free_descriptor(*n, *r, *d, *g, *deg_l)
        }
        DescriptorSpec::IdealPoints { n, g, deg_l, p0 } => {
            ideal_points_descriptor(*n, *g, *deg_l, *p0)
        }
        DescriptorSpec::Graded(s) => SheafDescriptor::new(s.n, s.g, s.deg_l, s.gr.clone()),
    }
}

fn kernel_datum<F: Field>(f: &F, k: &KernelSpec, p: usize) -> Result<KernelDatum<F::Elem>> {
    let images = k
        .images
        .iter()
        .map(|r| {
            r.iter()
                .map(|t| poly(f, 2, p, t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelDatum {
        line: k.line,
        free: k.free,
        torsion: k.torsion.clone(),
        images,
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// The report body of a job over a concrete field; DOT text for posets when requested.
fn execute<F: Field>(f: &F, job: &JobSpec) -> Result<(Value, Option<String>)> {
    let p = job.precision;
    if p == 0 {
        return invalid("precision must be at least 1");
    }
    let module = |s: &ModuleSpec| realize(f, &build_expr(f, s, p)?, p);
    let value = match &job.command {
        Command::Realize { module: s } => module(s)?.to_json(),
        Command::Invariants { module: s } => {
            let m = module(s)?;
            let a = analyze(&m)?;
            let qf = quasi_free_from(&m, &a.first)?;
            json!({
                "rank": a.rank,
                "index": a.first.torsion_total(),
                "dim": m.dim(),
                "kappa": a.kappa,
                "first": a.first,
                "second": a.second,
                "char_functions": {"first": a.first.char_function().values, "second": a.second.char_function().values},
                "quasi_free_type": qf.m,
                "two_precision": a.two_precision,
            })
        }
        Command::QuasiFree { module: s } => {
            let m = module(s)?;
            let a = analyze(&m)?;
            to_value(&quasi_free_from(&m, &a.first)?)
        }
        Command::Classify(input) => {
            let nf = match input {
                ClassifyInput::Module(s) => nf_of_module(&module(s)?)?,
                ClassifyInput::Kernel(k) => classify_kernel(f, &kernel_datum(f, k, p)?, p)?,
                ClassifyInput::Extension { class } => {
                    let a = ExtMatrix::from_polys(f, p, class)?;
                    classify_extension(f, a.rows, a.cols, &a)?
                }
            };
            json!({"normal_form": nf.to_json(), "invariants": nf_invariants(&nf)})
        }
        Command::Reflexivity { module: s } => json!({"reflexive": reflexivity_check(&module(s)?)?}),
        Command::Dual { nf } => {
            json!({"normal_form": nf.to_json(), "dual": nf_dual(f, nf, p)?.to_json()})
        }
        Command::RoundTrip { nf } => {
            let nf = TorsionFreeNF::new(nf.ideals.clone(), nf.free, nf.line)?;
            let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
            let datum = round_trip_datum(f, &nf, p, &mut rng);
            let got = classify_kernel(f, &datum, p)?;
            let images: Vec<Vec<Value>> = datum
                .images
                .iter()
                .map(|r| r.iter().map(|e| e.to_json(f)).collect())
                .collect();
            json!({"normal_form": nf.to_json(), "recovered": got.to_json(), "agrees": got == nf, "images": images})
        }
        Command::Resolution { target, n, length } => {
            let res = resolution_of(f, *target, *n, *length)?;
            json!({"resolution": res.to_json(f), "check": check_resolution(f, &res, p)?})
        }
        Command::Ext {
            target,
            n,
            coefficients,
            max_degree,
        } => {
            let res = resolution_of(f, *target, *n, max_degree + 1)?;
            json!({"target": target, "groups": ext_dims(f, &res, &module(coefficients)?, *max_degree)?})
        }
        Command::Connecting { i } => to_value(&connecting_map(f, *i)?),
        Command::Obstruction { sigma } => {
            let a = ExtMatrix::from_polys(f, p, sigma)?;
            json!({"square_zero": obstruction_square(f, &a)?})
        }
        Command::Descriptor { descriptor, delta } => {
            let d = build_descriptor(descriptor)?;
            json!({"descriptor": d, "invariants": rr_invariants(&d, *delta)?})
        }
        Command::Semistability { sub, whole, strict } => {
            json!({"semistable": semistability(&build_descriptor(sub)?, &build_descriptor(whole)?, *strict)?, "strict": strict})
        }
        Command::Qlf2 {
            e,
            f: fb,
            deg_l,
            tensor_with,
        } => {
            let q = qlf2_relations(*e, *fb, *deg_l)?;
            let tensor = match tensor_with {
                Some((e2, f2)) => {
                    Some(qlf2_tensor(&q, &qlf2_relations(*e2, *f2, *deg_l)?, *deg_l)?)
                }
                None => None,
            };
            json!({"relations": q, "tensor": tensor})
        }
        Command::Rank2 { d, deg_l, i } => json!({"deg_e": rank2_relations(*d, *deg_l, *i)}),
        Command::Threshold { d, deg_l, p } => {
            json!({"deg_v": deformation_threshold(*d, *deg_l, *p)})
        }
        Command::Rank3(d) => to_value(&rank3_analysis(d)?),
        Command::IdealExt(i) => to_value(&ideal_ext_dims(i)?),
        Command::DeformsTo { from, to } => to_value(&deformation_verdict(from, to)?),
        Command::CharOrder { a, b } => {
            json!({"order": char_order(a, b)?, "conjectural": a.len() >= 3})
        }
        Command::Poset { rank, n } => {
            let poset = type_poset(*rank, *n)?;
            let dot = (job.emit == Emit::Dot).then(|| poset.to_dot());
            return Ok((poset.to_json(), dot));
        }
        Command::Witness { from, to } => to_value(&witness_family(f, from, to, p)?),
    };
    if job.emit == Emit::Dot {
        return invalid("DOT output is available for the poset command only");
    }
    Ok((value, None))
}

fn command_name(c: &Command) -> String {
    to_value(c)["command"]
        .as_str()
        .unwrap_or_default()
        .to_string()
}

/// Runs a job and renders its output text: a JSON report with a provenance header, or DOT.
pub fn run(job: &JobSpec) -> Result<String> {
    let (body, dot) = match job.field {
        FieldSpec::Prime { q } => execute(&Fp::new(q)?, job)?,
        FieldSpec::Rationals => execute(&Rationals, job)?,
    };
    if let Some(dot) = dot {
        return Ok(format!(
            "// q={} p={} seed={}\n{dot}",
            job.field.modulus(),
            job.precision,
            job.seed
        ));
    }
    let report = json!({
        "header": {"q": job.field.modulus(), "p": job.precision, "seed": job.seed},
        "command": command_name(&job.command),
        "result": body,
    });
    Ok(serde_json::to_string_pretty(&report).expect("JSON values serialize") + "\n")
}

/// Parses, applies overrides and runs; returns the text for stdout or the error.
pub fn run_text(text: &str, o: &Overrides) -> Result<String> {
    let mut job = JobSpec::parse(text)?;
    job.apply(o);
    run(&job)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_json(text: &str) -> Value {
        serde_json::from_str(&run_text(text, &Overrides::default()).unwrap()).unwrap()
    }

    #[test]
    fn invariants_of_ideal() {
        let v = run_json(
            r#"{"command":"invariants","module":{"standard":{"n":2,"kind":"ideal_point","k":2}}}"#,
        );
        assert_eq!(v["result"]["rank"], 2);
        assert_eq!(v["result"]["index"], 2);
        assert_eq!(v["header"]["q"], 32003);
    }

    #[test]
    fn classify_kernel_job() {
        let v = run_json(
            r#"{"command":"classify","kernel":{"free":1,"torsion":[3],"images":[[[[1,0,0]]]]}}"#,
        );
        assert_eq!(
            v["result"]["normal_form"],
            json!({"ideals":[3],"free":0,"line":0})
        );
    }

    #[test]
    fn poset_dot() {
        let o = Overrides {
            emit: Some(Emit::Dot),
            ..Default::default()
        };
        let s = run_text(r#"{"command":"poset","rank":2,"n":2}"#, &o).unwrap();
        assert_eq!(s.matches("->").count(), 1);
        assert!(s.contains("\"(2,0)\" -> \"(0,1)\""));
    }

    #[test]
    fn error_codes() {
        let e = run_text("{", &Overrides::default()).unwrap_err();
        assert_eq!(exit_code(&e), 2);
        let e = run_text(
            r#"{"command":"classify","extension":{"class":[[[0,0,0,0,0,0,0,0,1]]]}}"#,
            &Overrides::default(),
        )
        .unwrap_err();
        assert_eq!(exit_code(&e), 3);
        let e = run_text(
            r#"{"command":"witness","from":[0,1],"to":[2,0]}"#,
            &Overrides::default(),
        )
        .unwrap_err();
        assert_eq!(exit_code(&e), 4);
    }

    #[test]
    fn rationals_and_overrides() {
        let o = Overrides {
            field: Some(parse_field("rationals").unwrap()),
            precision: Some(5),
            seed: Some(9),
            emit: None,
        };
        let s = run_text(
            r#"{"command":"round_trip","nf":{"ideals":[2],"free":1,"line":1}}"#,
            &o,
        )
        .unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["header"], json!({"q": 0, "p": 5, "seed": 9}));
        assert_eq!(v["result"]["agrees"], true);
        assert_eq!(
            s,
            run_text(
                r#"{"command":"round_trip","nf":{"ideals":[2],"free":1,"line":1}}"#,
                &o
            )
            .unwrap()
        );
    }
}
