//! JSON descriptors for triples, algebra elements, forms, modules and
//! unitaries.
//!
//! Matrices are nested row-major arrays of `[re, im]` pairs. Parse errors
//! carry the JSON path of the offending value.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, Automorphism, Representation, StarAlgebra};
use crate::error::{Error, Result};
use crate::forms::{form_from_generators, Side, TwistedOneForm};
use crate::manifold::DerivativeKind;
use crate::morita::{Connection, HermitianModule, ModuleSide};
use crate::opcore::{AntilinearOp, LinearOp, Tolerance, C64};
use crate::triple::{KOSignature, RealTwistedTriple};

/// A square complex matrix as rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

impl TryFrom<Vec<Vec<[f64; 2]>>> for MatrixJson {
    type Error = String;
    fn try_from(rows: Vec<Vec<[f64; 2]>>) -> std::result::Result<Self, String> {
        let n = rows.len();
        if n == 0 {
            return Err("matrix has no rows".into());
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(format!("row {i} has length {}, expected {n}", r.len()));
        }
        if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err("matrix entries must be finite".into());
        }
        Ok(MatrixJson(rows))
    }
}

impl From<MatrixJson> for Vec<Vec<[f64; 2]>> {
    fn from(m: MatrixJson) -> Self {
        m.0
    }
}

impl MatrixJson {
    pub fn from_op(op: &LinearOp) -> Self {
        MatrixJson(
            (0..op.dim())
                .map(|i| op.row(i).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        )
    }

    pub fn to_op(&self) -> Result<LinearOp> {
        let rows: Vec<Vec<C64>> = self
            .0
            .iter()
            .map(|r| r.iter().map(|[re, im]| C64::new(*re, *im)).collect())
            .collect();
        LinearOp::from_rows(&rows)
    }
}

/// The algebra, its representation and its twist.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraJson {
    pub blocks: Vec<usize>,
    pub rep: RepresentationJson,
    pub auto: TwistJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationJson {
    pub hilbert_dim: usize,
    pub multiplicities: Vec<usize>,
    /// Hilbert basis index of each (block, copy, row); omitted for the
    /// standard consecutive layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistJson {
    pub perm: Vec<usize>,
    /// One unitary per block; identities when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitaries: Option<Vec<MatrixJson>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealStructureJson {
    /// `U` in `J = U∘conj`.
    pub unitary: MatrixJson,
}

/// A preset name (`"ko6"`), a KO dimension (`6`) or explicit signs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignsJson {
    Named(String),
    KoDimension(u8),
    Explicit(KOSignature),
}

impl SignsJson {
    pub fn resolve(&self) -> Result<KOSignature> {
        match self {
            SignsJson::Named(n) => KOSignature::preset_named(n),
            SignsJson::KoDimension(d) => KOSignature::preset(*d),
            SignsJson::Explicit(s) => Ok(*s),
        }
    }
}

/// Informational lattice provenance for emitted lattice fixtures.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeJson {
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub derivative: DerivativeKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub algebra: AlgebraJson,
    pub dirac: MatrixJson,
    pub real_structure: RealStructureJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<MatrixJson>,
    pub signs: SignsJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeJson>,
}

impl TripleJson {
    pub fn from_triple(t: &RealTwistedTriple, name: Option<&str>) -> Self {
        let rep = t.rep();
        let identity_twist = t
            .twist()
            .unitaries()
            .iter()
            .all(|w| w == &LinearOp::identity(w.dim()));
        TripleJson {
            name: name.map(str::to_owned),
            algebra: AlgebraJson {
                blocks: t.algebra().blocks().to_vec(),
                rep: RepresentationJson {
                    hilbert_dim: rep.hilbert_dim(),
                    multiplicities: rep.multiplicities().to_vec(),
                    assignment: Some(rep.assignment().to_vec()),
                },
                auto: TwistJson {
                    perm: t.twist().perm().to_vec(),
                    unitaries: if identity_twist {
                        None
                    } else {
                        Some(t.twist().unitaries().iter().map(MatrixJson::from_op).collect())
                    },
                },
            },
            dirac: MatrixJson::from_op(t.dirac()),
            real_structure: RealStructureJson {
                unitary: MatrixJson::from_op(t.real_structure().unitary_part()),
            },
            grading: t.grading().map(MatrixJson::from_op),
            signs: SignsJson::Explicit(t.signs()),
            lattice: None,
        }
    }

    pub fn build(&self, tol: &Tolerance) -> Result<RealTwistedTriple> {
        let alg = StarAlgebra::new(self.algebra.blocks.clone())?;
        let r = &self.algebra.rep;
        let rep = match &r.assignment {
            Some(a) => Representation::new(alg.clone(), r.hilbert_dim, r.multiplicities.clone(), a.clone())?,
            None => {
                let rep = Representation::standard(alg.clone(), r.multiplicities.clone())?;
                if rep.hilbert_dim() != r.hilbert_dim {
                    return Err(Error::Dimension(format!(
                        "standard layout fills {} dimensions, hilbert_dim is {}",
                        rep.hilbert_dim(),
                        r.hilbert_dim
                    )));
                }
                rep
            }
        };
        let auto = &self.algebra.auto;
        let unitaries = match &auto.unitaries {
            Some(us) => us.iter().map(MatrixJson::to_op).collect::<Result<Vec<_>>>()?,
            None => alg.blocks().iter().map(|&n| LinearOp::identity(n)).collect(),
        };
        let twist = Automorphism::new(alg, auto.perm.clone(), unitaries, tol)?;
        let signs = self.signs.resolve()?;
        RealTwistedTriple::new(
            rep,
            self.dirac.to_op()?,
            AntilinearOp::new(self.real_structure.unitary.to_op()?),
            self.grading.as_ref().map(MatrixJson::to_op).transpose()?,
            twist,
            signs,
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementJson {
    pub parts: Vec<MatrixJson>,
}

impl ElementJson {
    pub fn from_element(a: &AlgebraElement) -> Self {
        ElementJson {
            parts: a.parts().iter().map(MatrixJson::from_op).collect(),
        }
    }

    pub fn build(&self, alg: &StarAlgebra) -> Result<AlgebraElement> {
        alg.element(self.parts.iter().map(MatrixJson::to_op).collect::<Result<_>>()?)
    }
}

/// `Σ a_j δ(b_j)` on the plain side, `Σ a_j° δ°(b_j)` on the opposite one.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormJson {
    pub side: Side,
    pub pairs: Vec<[ElementJson; 2]>,
}

impl FormJson {
    pub fn from_form(w: &TwistedOneForm) -> Self {
        FormJson {
            side: w.side(),
            pairs: w
                .pairs()
                .iter()
                .map(|(a, b)| [ElementJson::from_element(a), ElementJson::from_element(b)])
                .collect(),
        }
    }

    pub fn build(&self, t: &RealTwistedTriple, tol: &Tolerance) -> Result<TwistedOneForm> {
        let pairs = self
            .pairs
            .iter()
            .map(|[a, b]| Ok((a.build(t.algebra())?, b.build(t.algebra())?)))
            .collect::<Result<Vec<_>>>()?;
        form_from_generators(t, pairs, self.side, tol)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionJson {
    /// `N×N` forms; the Grassmann connection when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<Vec<FormJson>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleJson {
    pub side: ModuleSide,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: Vec<Vec<ElementJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionJson>,
    /// The triple the module lives over, when bundled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<TripleJson>,
}

impl ModuleJson {
    pub fn from_module(m: &HermitianModule, c: Option<&Connection>, triple: Option<TripleJson>) -> Self {
        let connection = c.map(|c| ConnectionJson {
            potential: if c.is_grassmann() {
                None
            } else {
                Some(
                    c.potential()
                        .iter()
                        .map(|row| row.iter().map(FormJson::from_form).collect())
                        .collect(),
                )
            },
        });
        ModuleJson {
            side: m.side(),
            n: m.n(),
            p: m
                .p()
                .iter()
                .map(|row| row.iter().map(ElementJson::from_element).collect())
                .collect(),
            connection,
            triple,
        }
    }

    pub fn build(
        &self,
        t: &RealTwistedTriple,
        tol: &Tolerance,
    ) -> Result<(HermitianModule, Connection)> {
        if self.p.len() != self.n {
            return Err(Error::Dimension(format!(
                "N = {} but p has {} rows",
                self.n,
                self.p.len()
            )));
        }
        let p = self
            .p
            .iter()
            .map(|row| row.iter().map(|x| x.build(t.algebra())).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let m = HermitianModule::new(t.algebra(), self.side, p, tol)?;
        let c = match self.connection.as_ref().and_then(|c| c.potential.as_ref()) {
            None => Connection::grassmann(t, &m)?,
            Some(rows) => {
                let pot = rows
                    .iter()
                    .map(|row| row.iter().map(|f| f.build(t, tol)).collect())
                    .collect::<Result<Vec<Vec<_>>>>()?;
                Connection::new(t, &m, pot)?
            }
        };
        Ok((m, c))
    }
}

/// A unitary given by phases on `1×1` blocks or by explicit block matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum UnitaryJson {
    Theta { theta: Vec<f64> },
    Parts { parts: Vec<MatrixJson> },
}

impl UnitaryJson {
    pub fn build(&self, alg: &StarAlgebra) -> Result<AlgebraElement> {
        match self {
            UnitaryJson::Theta { theta } => {
                if alg.blocks().iter().any(|&n| n != 1) || theta.len() != alg.num_blocks() {
                    return Err(Error::Invalid(format!(
                        "theta needs one phase per 1×1 block ({} blocks)",
                        alg.num_blocks()
                    )));
                }
                alg.element(
                    theta
                        .iter()
                        .map(|t| LinearOp::from_diagonal(&[C64::from_polar(1.0, *t)]))
                        .collect(),
                )
            }
            UnitaryJson::Parts { parts } => {
                alg.element(parts.iter().map(MatrixJson::to_op).collect::<Result<_>>()?)
            }
        }
    }
}

/// Parses JSON text, reporting the path of the first offending value.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Schema {
            path: if path.is_empty() { "$".into() } else { format!("$.{path}") },
            message: e.into_inner().to_string(),
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_json(&text)
}

pub fn read_triple(path: &Path, tol: &Tolerance) -> Result<RealTwistedTriple> {
    read_json::<TripleJson>(path)?.build(tol)
}

pub fn to_json_pretty<T: Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(x).expect("descriptors serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn triple_round_trip() {
        let tol = Tolerance::default();
        let t = fixtures::fuzzy(fixtures::FuzzyVariant::Ko6, 2, 3).unwrap();
        let text = to_json_pretty(&TripleJson::from_triple(&t, Some("fuzzy-ko6")));
        let back = parse_json::<TripleJson>(&text).unwrap().build(&tol).unwrap();
        assert_eq!(back.dirac(), t.dirac());
        assert_eq!(back.signs(), t.signs());
        assert_eq!(back.rep().assignment(), t.rep().assignment());
    }

    #[test]
    fn ragged_matrix_is_rejected_with_a_path() {
        let text = r#"{"algebra":{"blocks":[1,1],"rep":{"hilbert_dim":2,"multiplicities":[1,1]},
            "auto":{"perm":[1,0]}},"dirac":[[[0,0],[1,0]],[[1,0]]],
            "real_structure":{"unitary":[[[0,0],[1,0]],[[1,0],[0,0]]]},"signs":"ko6"}"#;
        match parse_json::<TripleJson>(text) {
            Err(Error::Schema { path, message }) => {
                assert_eq!(path, "$.dirac");
                assert!(message.contains("row 1"), "{message}");
            }
            other => panic!("{other:?}"),
        }

        let bad = r#"{"algebra":{"blocks":"two"}}"#;
        match parse_json::<TripleJson>(bad) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.algebra.blocks"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presets_and_theta() {
        let tol = Tolerance::default();
        let t = fixtures::two_point();
        let mut j = TripleJson::from_triple(&t, None);
        j.signs = SignsJson::KoDimension(6);
        let back = j.build(&tol).unwrap();
        assert_eq!(back.signs().eps_second, -1);
        let u: UnitaryJson = parse_json(r#"{"theta":[0.5,-1.0]}"#).unwrap();
        assert!(u.build(t.algebra()).unwrap().is_unitary(&tol));
    }

    #[test]
    fn module_round_trip() {
        let tol = Tolerance::default();
        let (t, m, c) = fixtures::pa2_module().unwrap();
        let text = to_json_pretty(&ModuleJson::from_module(&m, Some(&c), None));
        let (m2, c2) = parse_json::<ModuleJson>(&text).unwrap().build(&t, &tol).unwrap();
        assert_eq!(m2.n(), 2);
        assert!(c2.is_grassmann());
    }
}
