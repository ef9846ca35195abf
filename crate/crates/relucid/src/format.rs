//! JSON documents for models, rule sets and reports.
//!
//! Every float is written with 17 significant digits so a parse of the
//! output reproduces the in-memory value bit for bit.

use std::io;

use relucid_core::{
    Activation, ActivationPattern, AffineConsequence, Consequence, Decision, Layer,
    LinearConstraint, Matrix, Mlp, Op, Rule, RuleSet, RuleSetKind,
};
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter};

use crate::error::{Error, Result};

/// `CompactFormatter` with exact float output.
#[derive(Default)]
pub struct ExactFloats {
    inner: CompactFormatter,
    indent: usize,
    pretty: bool,
    has_value: bool,
}

impl ExactFloats {
    pub fn pretty() -> Self {
        ExactFloats {
            pretty: true,
            ..Default::default()
        }
    }

    fn newline<W: ?Sized + io::Write>(&self, w: &mut W) -> io::Result<()> {
        if self.pretty {
            w.write_all(b"\n")?;
            for _ in 0..self.indent {
                w.write_all(b"  ")?;
            }
        }
        Ok(())
    }
}

pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        // Keep the sign of negative zero out of the files.
        return "0.0".into();
    }
    format!("{v:.16e}")
}

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    // Pretty layout for objects; arrays stay on one line so weight rows read as rows.
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(w)?;
        }
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(if self.pretty { b": " } else { b":" })
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloats::pretty());
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    /// `fan_in × fan_out`, row-major.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub activation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub input_dim: usize,
    pub layers: Vec<LayerDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], cols_if_empty: usize, what: &str) -> Result<Matrix> {
    let cols = rows.first().map_or(cols_if_empty, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Format(format!("{what}: ragged rows")));
    }
    let data = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_vec(rows.len(), cols, data)?)
}

impl ModelDoc {
    pub fn from_model(model: &Mlp, metadata: Option<serde_json::Value>) -> Self {
        ModelDoc {
            input_dim: model.input_dim(),
            layers: model
                .layers()
                .map(|l| LayerDoc {
                    weights: matrix_rows(&l.weights),
                    biases: l.biases.clone(),
                    activation: l.activation.name().into(),
                })
                .collect(),
            metadata,
        }
    }

    pub fn to_model(&self) -> Result<Mlp> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, l) in self.layers.iter().enumerate() {
            let activation = Activation::from_name(&l.activation)
                .ok_or_else(|| Error::Format(format!("layer {k}: unknown activation {:?}", l.activation)))?;
            let weights = matrix_from_rows(&l.weights, l.biases.len(), "layer weights")?;
            layers.push(Layer::new(weights, l.biases.clone(), activation)?);
        }
        Ok(Mlp::new(self.input_dim, layers)?)
    }
}

pub fn serialize_model(model: &Mlp, metadata: Option<serde_json::Value>) -> String {
    to_json(&ModelDoc::from_model(model, metadata))
}

pub fn parse_model_doc(text: &str) -> Result<ModelDoc> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("model: {e}")))
}

pub fn parse_model(text: &str) -> Result<Mlp> {
    parse_model_doc(text)?.to_model()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub coeffs: Vec<f64>,
    pub op: String,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConsequenceDoc {
    Affine {
        /// `input_dim × output_width`.
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        decision: String,
    },
    Label {
        label: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDoc {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Vec<Vec<u8>>>,
    pub constraints: Vec<ConstraintDoc>,
    pub consequence: ConsequenceDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSetDoc {
    pub kind: String,
    pub input_dim: usize,
    pub class_count: usize,
    pub default_class: usize,
    pub rules: Vec<RuleDoc>,
}

fn op_name(op: Op) -> &'static str {
    match op {
        Op::Le => "LE",
        Op::Gt => "GT",
    }
}

fn decision_name(d: Decision) -> &'static str {
    match d {
        Decision::Threshold => "threshold",
        Decision::Argmax => "argmax",
    }
}

impl RuleSetDoc {
    pub fn from_ruleset(rs: &RuleSet) -> Self {
        let rules = rs
            .rules()
            .iter()
            .map(|r| RuleDoc {
                id: r.id,
                pattern: r.pattern.as_ref().map(|p| {
                    p.per_layer
                        .iter()
                        .map(|l| l.iter().map(|&b| b as u8).collect())
                        .collect()
                }),
                constraints: r
                    .constraints
                    .iter()
                    .map(|c| ConstraintDoc {
                        coeffs: c.coeffs.clone(),
                        op: op_name(c.op).into(),
                        rhs: c.rhs,
                    })
                    .collect(),
                consequence: match &r.consequence {
                    Consequence::Affine(a) => ConsequenceDoc::Affine {
                        weights: matrix_rows(&a.weights),
                        bias: a.bias.clone(),
                        decision: decision_name(a.decision).into(),
                    },
                    Consequence::Label(l) => ConsequenceDoc::Label { label: *l },
                },
            })
            .collect();
        RuleSetDoc {
            kind: rs.kind().name().into(),
            input_dim: rs.input_dim(),
            class_count: rs.class_count(),
            default_class: rs.default_class(),
            rules,
        }
    }

    pub fn to_ruleset(&self) -> Result<RuleSet> {
        let kind = RuleSetKind::from_name(&self.kind)
            .ok_or_else(|| Error::Format(format!("unknown rule-set kind {:?}", self.kind)))?;
        let mut rules = Vec::with_capacity(self.rules.len());
        for r in &self.rules {
            let mut constraints = Vec::with_capacity(r.constraints.len());
            for c in &r.constraints {
                let op = match c.op.as_str() {
                    "LE" => Op::Le,
                    "GT" => Op::Gt,
                    other => return Err(Error::Format(format!("rule {}: unknown op {other:?}", r.id))),
                };
                constraints.push(LinearConstraint::new(c.coeffs.clone(), op, c.rhs));
            }
            let consequence = match &r.consequence {
                ConsequenceDoc::Affine { weights, bias, decision } => {
                    let decision = match decision.as_str() {
                        "threshold" => Decision::Threshold,
                        "argmax" => Decision::Argmax,
                        other => {
                            return Err(Error::Format(format!("rule {}: unknown decision {other:?}", r.id)))
                        }
                    };
                    Consequence::Affine(AffineConsequence {
                        weights: matrix_from_rows(weights, bias.len(), "consequence weights")?,
                        bias: bias.clone(),
                        decision,
                    })
                }
                ConsequenceDoc::Label { label } => Consequence::Label(*label),
            };
            let pattern = match &r.pattern {
                None => None,
                Some(layers) => {
                    let mut per_layer = Vec::with_capacity(layers.len());
                    for l in layers {
                        let mut bits = Vec::with_capacity(l.len());
                        for &b in l {
                            match b {
                                0 => bits.push(false),
                                1 => bits.push(true),
                                _ => return Err(Error::Format(format!("rule {}: pattern bit {b}", r.id))),
                            }
                        }
                        per_layer.push(bits);
                    }
                    Some(ActivationPattern::new(per_layer))
                }
            };
            rules.push(Rule {
                id: r.id,
                constraints,
                consequence,
                pattern,
            });
        }
        Ok(RuleSet::new(kind, self.input_dim, self.class_count, self.default_class, rules)?)
    }
}

pub fn serialize_ruleset(rs: &RuleSet) -> String {
    to_json(&RuleSetDoc::from_ruleset(rs))
}

pub fn parse_ruleset(text: &str) -> Result<RuleSet> {
    let doc: RuleSetDoc =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("rule set: {e}")))?;
    doc.to_ruleset()
}

/// Either kind of predictor file, told apart by its top-level keys.
pub enum PredictorFile {
    Model(Mlp),
    Rules(RuleSet),
}

pub fn parse_predictor(text: &str) -> Result<PredictorFile> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("predictor: {e}")))?;
    if value.get("rules").is_some() {
        Ok(PredictorFile::Rules(parse_ruleset(text)?))
    } else if value.get("layers").is_some() {
        Ok(PredictorFile::Model(parse_model(text)?))
    } else {
        Err(Error::Format("predictor is neither a model nor a rule set".into()))
    }
}
