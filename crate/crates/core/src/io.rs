//! On-disk formats. JSON numbers are written with 17 significant digits so
//! every `f64` (and every `f32`, widened) round-trips exactly, and fields are
//! emitted in declaration order so identical inputs give identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::eval::{GridRow, RobustnessRow, WindowHistory};
use crate::mlp::{MlpParams, Normalization, TrainMeta};
use crate::network::{CompactModel, DerSpec, FeederSpec};
use crate::oracle::{Label, Provenance, SamplePoint};
use crate::robust_box::{AffinePolicy, InnerBox};
use crate::scalar::Scalar;

/// Pretty JSON with fixed-precision floats; non-finite values become `null`.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        if v.is_finite() {
            write!(w, "{v:.16e}")
        } else {
            w.write_all(b"null")
        }
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        self.write_f64(w, f64::from(v))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn rows_of<S: Scalar>(a: &Array2<S>) -> Vec<Vec<S>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows<S: Scalar>(rows: &[Vec<S>], ncols: usize, what: &str) -> Result<Array2<S>> {
    let mut a = Array2::zeros((rows.len(), ncols));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::Format(format!("{what}: row {i} has {} entries, expected {ncols}", r.len())));
        }
        a.row_mut(i).assign(&ndarray::ArrayView1::from(r.as_slice()));
    }
    Ok(a)
}

/// `network.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile<S> {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "W")]
    pub w: Vec<Vec<S>>,
    pub z: Vec<S>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<S>>,
    pub b: Vec<S>,
    pub meta: String,
}

impl<S: Scalar> From<&CompactModel<S>> for NetworkFile<S> {
    fn from(m: &CompactModel<S>) -> Self {
        Self {
            n: m.n,
            m: m.m,
            t: m.t,
            w: rows_of(&m.w),
            z: m.z.to_vec(),
            d: rows_of(&m.d),
            b: m.b.to_vec(),
            meta: m.meta.clone(),
        }
    }
}

impl<S: Scalar> NetworkFile<S> {
    pub fn into_model(self) -> Result<CompactModel<S>> {
        let cols = self.m * self.t;
        let w = from_rows(&self.w, cols, "W")?;
        let d = from_rows(&self.d, cols, "D")?;
        let mut model =
            CompactModel::from_parts(self.m, self.t, w, Array1::from(self.z), d, Array1::from(self.b), self.meta)?;
        model.n = self.n;
        Ok(model)
    }
}

pub fn write_network<S: Scalar>(path: impl AsRef<Path>, model: &CompactModel<S>) -> Result<()> {
    write_json(path, &NetworkFile::from(model))
}

pub fn read_network<S: Scalar>(path: impl AsRef<Path>) -> Result<CompactModel<S>> {
    read_json::<NetworkFile<S>>(path)?.into_model()
}

/// `feeder.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct FeederFile<S: Scalar> {
    pub feeder: FeederSpec<S>,
    pub ders: Vec<DerSpec<S>>,
}

/// `model.json`: weights as per-layer `fan_in × fan_out` row lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile<S> {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<Vec<S>>>,
    pub biases: Vec<Vec<S>>,
    pub norm: Normalization<S>,
    pub frozen: Vec<bool>,
    pub meta: TrainMeta,
}

impl<S: Scalar> From<&MlpParams<S>> for CheckpointFile<S> {
    fn from(p: &MlpParams<S>) -> Self {
        Self {
            layer_sizes: p.layer_sizes.clone(),
            weights: p.weights.iter().map(rows_of).collect(),
            biases: p.biases.iter().map(|b| b.to_vec()).collect(),
            norm: p.norm.clone(),
            frozen: p.frozen.clone(),
            meta: p.meta.clone(),
        }
    }
}

impl<S: Scalar> CheckpointFile<S> {
    pub fn into_params(self) -> Result<MlpParams<S>> {
        if self.layer_sizes.len() < 2 || self.weights.len() != self.layer_sizes.len() - 1 {
            return Err(Error::InvalidArchitecture("weights do not match layer_sizes".into()));
        }
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(l, w)| from_rows(w, self.layer_sizes[l + 1], "weights"))
            .collect::<Result<Vec<_>>>()?;
        let p = MlpParams {
            layer_sizes: self.layer_sizes,
            weights,
            biases: self.biases.into_iter().map(Array1::from).collect(),
            norm: self.norm,
            frozen: self.frozen,
            meta: self.meta,
        };
        p.validate()?;
        Ok(p)
    }
}

pub fn write_checkpoint<S: Scalar>(path: impl AsRef<Path>, params: &MlpParams<S>) -> Result<()> {
    write_json(path, &CheckpointFile::from(params))
}

pub fn read_checkpoint<S: Scalar>(path: impl AsRef<Path>) -> Result<MlpParams<S>> {
    read_json::<CheckpointFile<S>>(path)?.into_params()
}

/// `innerbox.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerBoxFile<S> {
    pub p0_minus: Vec<S>,
    pub p0_plus: Vec<S>,
    pub objective: S,
    pub degenerate: bool,
    pub center: Vec<S>,
    pub radius: Vec<S>,
    pub e_hat: Vec<Vec<S>>,
    pub f_hat: Vec<S>,
}

impl<S: Scalar> From<&InnerBox<S>> for InnerBoxFile<S> {
    fn from(b: &InnerBox<S>) -> Self {
        Self {
            p0_minus: b.p0_minus.clone(),
            p0_plus: b.p0_plus.clone(),
            objective: b.objective,
            degenerate: b.degenerate,
            center: b.policy.center.clone(),
            radius: b.policy.radius.clone(),
            e_hat: rows_of(&b.policy.e_hat),
            f_hat: b.policy.f_hat.to_vec(),
        }
    }
}

impl<S: Scalar> InnerBoxFile<S> {
    pub fn into_box(self) -> Result<InnerBox<S>> {
        let t = self.center.len();
        Ok(InnerBox {
            p0_minus: self.p0_minus,
            p0_plus: self.p0_plus,
            objective: self.objective,
            degenerate: self.degenerate,
            policy: AffinePolicy {
                e_hat: from_rows(&self.e_hat, t, "e_hat")?,
                f_hat: Array1::from(self.f_hat),
                center: self.center,
                radius: self.radius,
            },
        })
    }
}

/// Writes `samples.csv`; labels as `1/0/-1`, provenance as `oracle/hull/none`.
pub fn write_samples<S: Scalar>(path: impl AsRef<Path>, samples: &[SamplePoint<S>], dim: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = (1..=dim).map(|k| format!("p0_{k}")).collect();
    header.extend(["label".into(), "provenance".into()]);
    w.write_record(&header)?;
    for s in samples {
        if s.p0.len() != dim {
            return Err(Error::DimensionMismatch(format!("sample has {} coordinates, expected {dim}", s.p0.len())));
        }
        let mut rec: Vec<String> = s.p0.iter().map(|v| format!("{}", v.as_f64())).collect();
        rec.push(s.label.code().to_string());
        rec.push(s.provenance.as_str().into());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `samples.csv`. The `label` and `provenance` columns are optional;
/// missing ones read as unlabeled.
pub fn read_samples<S: Scalar>(path: impl AsRef<Path>) -> Result<Vec<SamplePoint<S>>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header = r.headers()?.clone();
    let coord: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.starts_with("p0_")).map(|(i, _)| i).collect();
    if coord.is_empty() {
        return Err(Error::Format("samples file has no p0_ columns".into()));
    }
    let label_col = header.iter().position(|h| h == "label");
    let prov_col = header.iter().position(|h| h == "provenance");
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Format(format!("record {line}: missing column {i}")));
        let p0 = coord
            .iter()
            .map(|&i| {
                let f = field(i)?;
                f.trim()
                    .parse::<f64>()
                    .map(S::lit)
                    .map_err(|_| Error::Format(format!("record {line}: bad number `{f}`")))
            })
            .collect::<Result<Vec<S>>>()?;
        let label = match label_col {
            Some(i) => {
                let f = field(i)?;
                f.trim()
                    .parse::<i64>()
                    .ok()
                    .and_then(Label::from_code)
                    .ok_or_else(|| Error::Format(format!("record {line}: bad label `{f}`")))?
            }
            None => Label::Unlabeled,
        };
        let provenance = match prov_col {
            Some(i) => {
                let f = field(i)?;
                Provenance::parse(f.trim())
                    .ok_or_else(|| Error::Format(format!("record {line}: bad provenance `{f}`")))?
            }
            None if label == Label::Unlabeled => Provenance::None,
            None => Provenance::OracleLp,
        };
        let s = SamplePoint { p0, label, provenance };
        if !s.is_consistent() {
            return Err(Error::Format(format!("record {line}: label and provenance disagree")));
        }
        out.push(s);
    }
    Ok(out)
}

/// Serializes records with a header derived from their field names.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid(path: impl AsRef<Path>, rows: &[GridRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_robustness(path: impl AsRef<Path>, rows: &[RobustnessRow]) -> Result<()> {
    write_csv(path, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingRow {
    pub window: usize,
    pub epoch: usize,
    pub f1_warm: f64,
    pub f1_cold: f64,
}

pub fn rolling_rows(hist: &[WindowHistory]) -> Vec<RollingRow> {
    hist.iter()
        .flat_map(|h| {
            h.warm.iter().zip(&h.cold).map(move |(w, c)| RollingRow {
                window: h.window,
                epoch: w.epoch,
                f1_warm: w.f1,
                f1_cold: c.f1,
            })
        })
        .collect()
}
