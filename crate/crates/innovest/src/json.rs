//! Model documents: a `kind` tag, integer dimensions and each matrix as an
//! array of row arrays. Matrices are shaped by the dimensions, so zero-width
//! blocks are written as `[[], …]` and zero-height blocks as `[]`.

use std::path::Path;

use innovest_core::{EstimatorModel, InnovationJointModel, Matrix, StateSpaceModel, TriangularJointModel};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelDoc {
    StateSpace(StateSpaceModel),
    InnovationJoint(InnovationJointModel),
    TriangularJoint(TriangularJointModel),
    Estimator(EstimatorModel),
}

impl ModelDoc {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelDoc::StateSpace(_) => "state_space",
            ModelDoc::InnovationJoint(_) => "innovation_joint",
            ModelDoc::TriangularJoint(_) => "triangular_joint",
            ModelDoc::Estimator(_) => "estimator",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Raw {
    StateSpace(RawStateSpace),
    InnovationJoint(RawInnovation),
    TriangularJoint(RawTriangular),
    Estimator(RawEstimator),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStateSpace {
    n: usize,
    p: usize,
    q: usize,
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "D")]
    d: Rows,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInnovation {
    n: usize,
    p: usize,
    q: usize,
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "K")]
    k: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "Q")]
    cov: Rows,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTriangular {
    n: usize,
    p: usize,
    q: usize,
    p1: usize,
    p2: usize,
    #[serde(rename = "A11")]
    a11: Rows,
    #[serde(rename = "A12")]
    a12: Rows,
    #[serde(rename = "A22")]
    a22: Rows,
    #[serde(rename = "K11")]
    k11: Rows,
    #[serde(rename = "K12")]
    k12: Rows,
    #[serde(rename = "K22")]
    k22: Rows,
    #[serde(rename = "C11")]
    c11: Rows,
    #[serde(rename = "C12")]
    c12: Rows,
    #[serde(rename = "C22")]
    c22: Rows,
    #[serde(rename = "Q11")]
    q11: Rows,
    #[serde(rename = "Q12")]
    q12: Rows,
    #[serde(rename = "Q22")]
    q22: Rows,
    #[serde(rename = "T")]
    t: Rows,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimator {
    n: usize,
    p: usize,
    q: usize,
    #[serde(rename = "Atil")]
    atil: Rows,
    #[serde(rename = "Ktil")]
    ktil: Rows,
    #[serde(rename = "Ctil")]
    ctil: Rows,
    #[serde(rename = "D0")]
    d0: Rows,
}

fn rows(m: &Matrix) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(name: &str, r: &Rows, nrows: usize, ncols: usize) -> Result<Matrix> {
    if r.len() != nrows {
        return Err(CliError::Parse(format!("{name} has {} rows, expected {nrows}", r.len())));
    }
    let mut flat = Vec::with_capacity(nrows * ncols);
    for (i, row) in r.iter().enumerate() {
        if row.len() != ncols {
            return Err(CliError::Parse(format!(
                "{name} row {} has {} entries, expected {ncols}",
                i + 1,
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok(Matrix::from_row_slice(nrows, ncols, &flat))
}

impl Raw {
    fn from_doc(doc: &ModelDoc) -> Raw {
        match doc {
            ModelDoc::StateSpace(m) => Raw::StateSpace(RawStateSpace {
                n: m.n(),
                p: m.p,
                q: m.q,
                a: rows(&m.a),
                b: rows(&m.b),
                c: rows(&m.c),
                d: rows(&m.d),
            }),
            ModelDoc::InnovationJoint(m) => Raw::InnovationJoint(RawInnovation {
                n: m.n(),
                p: m.p,
                q: m.q,
                a: rows(&m.a),
                k: rows(&m.k),
                c: rows(&m.c),
                cov: rows(&m.cov),
            }),
            ModelDoc::TriangularJoint(m) => Raw::TriangularJoint(RawTriangular {
                n: m.n(),
                p: m.p,
                q: m.q,
                p1: m.p1,
                p2: m.p2,
                a11: rows(&m.a11),
                a12: rows(&m.a12),
                a22: rows(&m.a22),
                k11: rows(&m.k11),
                k12: rows(&m.k12),
                k22: rows(&m.k22),
                c11: rows(&m.c11),
                c12: rows(&m.c12),
                c22: rows(&m.c22),
                q11: rows(&m.q11),
                q12: rows(&m.q12),
                q22: rows(&m.q22),
                t: rows(&m.t),
            }),
            ModelDoc::Estimator(m) => Raw::Estimator(RawEstimator {
                n: m.n(),
                p: m.p(),
                q: m.q(),
                atil: rows(&m.atil),
                ktil: rows(&m.ktil),
                ctil: rows(&m.ctil),
                d0: rows(&m.d0),
            }),
        }
    }

    fn into_doc(self) -> Result<ModelDoc> {
        Ok(match self {
            Raw::StateSpace(r) => {
                let out = r.p + r.q;
                // Noise width is read off D, which always has rows.
                let m = r.d.first().map_or(0, Vec::len);
                ModelDoc::StateSpace(StateSpaceModel {
                    a: matrix("A", &r.a, r.n, r.n)?,
                    b: matrix("B", &r.b, r.n, m)?,
                    c: matrix("C", &r.c, out, r.n)?,
                    d: matrix("D", &r.d, out, m)?,
                    p: r.p,
                    q: r.q,
                })
            }
            Raw::InnovationJoint(r) => {
                let out = r.p + r.q;
                ModelDoc::InnovationJoint(InnovationJointModel {
                    a: matrix("A", &r.a, r.n, r.n)?,
                    k: matrix("K", &r.k, r.n, out)?,
                    c: matrix("C", &r.c, out, r.n)?,
                    cov: matrix("Q", &r.cov, out, out)?,
                    p: r.p,
                    q: r.q,
                })
            }
            Raw::TriangularJoint(r) => {
                let (p1, p2, p, q) = (r.p1, r.p2, r.p, r.q);
                if p1 + p2 != r.n {
                    return Err(CliError::Parse(format!("p1 + p2 = {} differs from n = {}", p1 + p2, r.n)));
                }
                ModelDoc::TriangularJoint(TriangularJointModel {
                    a11: matrix("A11", &r.a11, p1, p1)?,
                    a12: matrix("A12", &r.a12, p1, p2)?,
                    a22: matrix("A22", &r.a22, p2, p2)?,
                    k11: matrix("K11", &r.k11, p1, p)?,
                    k12: matrix("K12", &r.k12, p1, q)?,
                    k22: matrix("K22", &r.k22, p2, q)?,
                    c11: matrix("C11", &r.c11, p, p1)?,
                    c12: matrix("C12", &r.c12, p, p2)?,
                    c22: matrix("C22", &r.c22, q, p2)?,
                    q11: matrix("Q11", &r.q11, p, p)?,
                    q12: matrix("Q12", &r.q12, p, q)?,
                    q22: matrix("Q22", &r.q22, q, q)?,
                    t: matrix("T", &r.t, r.n, r.n)?,
                    p1,
                    p2,
                    p,
                    q,
                })
            }
            Raw::Estimator(r) => ModelDoc::Estimator(EstimatorModel {
                atil: matrix("Atil", &r.atil, r.n, r.n)?,
                ktil: matrix("Ktil", &r.ktil, r.n, r.q)?,
                ctil: matrix("Ctil", &r.ctil, r.p, r.n)?,
                d0: matrix("D0", &r.d0, r.p, r.q)?,
            }),
        })
    }
}

/// Parses a document. Only the layout is checked here; model validation is
/// left to the consumer.
pub fn from_str(s: &str) -> Result<ModelDoc> {
    let raw: Raw = serde_json::from_str(s)?;
    raw.into_doc()
}

pub fn to_string(doc: &ModelDoc) -> String {
    let mut s = serde_json::to_string_pretty(&Raw::from_doc(doc)).expect("model documents serialize");
    s.push('\n');
    s
}

pub fn to_value(doc: &ModelDoc) -> serde_json::Value {
    serde_json::to_value(Raw::from_doc(doc)).expect("model documents serialize")
}

pub fn read(path: &Path) -> Result<ModelDoc> {
    from_str(&std::fs::read_to_string(path).map_err(io_err(path))?)
}

pub fn write(path: &Path, doc: &ModelDoc) -> Result<()> {
    std::fs::write(path, to_string(doc)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use innovest_core::fixtures;

    use super::*;

    fn round_trip(doc: ModelDoc) {
        let back = from_str(&to_string(&doc)).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn every_kind_round_trips() {
        round_trip(ModelDoc::StateSpace(fixtures::state_space()));
        round_trip(ModelDoc::InnovationJoint(fixtures::exact_joint()));
        round_trip(ModelDoc::TriangularJoint(fixtures::exact_triangular()));
        round_trip(ModelDoc::Estimator(innovest_core::synthesize(&fixtures::exact_triangular()).unwrap()));
    }

    #[test]
    fn awkward_floats_round_trip() {
        let mut m = fixtures::exact_joint();
        m.a[(0, 0)] = 0.1 + 0.2;
        m.a[(0, 1)] = 1e-300;
        m.a[(1, 0)] = -f64::MIN_POSITIVE;
        m.k[(1, 1)] = 123_456_789.123_456_78;
        round_trip(ModelDoc::InnovationJoint(m));
    }

    #[test]
    fn zero_size_blocks() {
        let t = fixtures::exact_triangular();
        let doc = ModelDoc::TriangularJoint(TriangularJointModel {
            p1: 0,
            p2: 2,
            a11: Matrix::zeros(0, 0),
            a12: Matrix::zeros(0, 2),
            k11: Matrix::zeros(0, 1),
            k12: Matrix::zeros(0, 1),
            c11: Matrix::zeros(1, 0),
            a22: Matrix::identity(2, 2) * 0.5,
            k22: Matrix::zeros(2, 1),
            c12: Matrix::zeros(1, 2),
            c22: Matrix::zeros(1, 2),
            t: Matrix::identity(2, 2),
            ..t
        });
        let s = to_string(&doc);
        assert!(s.contains("\"A12\": []"));
        round_trip(doc);
    }

    #[test]
    fn reads_a_hand_written_document() {
        let s = r#"{"kind":"state_space","n":2,"p":1,"q":1,
            "A":[[0.85,0],[0,0.5]],"B":[[1,0.3],[0,0.7]],
            "C":[[1.41,2],[0,1]],"D":[[1,0],[0,-0.6]]}"#;
        let ModelDoc::StateSpace(m) = from_str(s).unwrap() else { panic!("kind") };
        assert_eq!(m.b.shape(), (2, 2));
        assert_eq!(m.d[(1, 1)], -0.6);
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let good = to_string(&ModelDoc::InnovationJoint(fixtures::exact_joint()));
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(from_str(&v.to_string()).is_err(), "unknown field");
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["kind"] = serde_json::json!("kalman");
        assert!(from_str(&v.to_string()).is_err(), "unknown kind");
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["A"][0] = serde_json::json!([1.0]);
        assert!(matches!(from_str(&v.to_string()), Err(CliError::Parse(_))), "ragged row");
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["n"] = serde_json::json!(3);
        assert!(from_str(&v.to_string()).is_err(), "dims disagree");
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v.as_object_mut().unwrap().remove("Q");
        assert!(from_str(&v.to_string()).is_err(), "missing matrix");
        assert!(from_str("{not json").is_err());
    }
}
