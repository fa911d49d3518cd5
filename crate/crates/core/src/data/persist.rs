//! Versioned JSON model files with a SHA-256 checksum over the payload.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::dataset::write_atomic;
use super::ScalingTransform;
use crate::baseline::{FeatureSubset, ModelKernel};
use crate::basis::{MonomialBasis, MultiIndex};
use crate::error::{Error, Result};
use crate::kernel::{BlockPMatrix, TessellatedKernel};
use crate::model::{ModelInfo, SvmModel};
use crate::region::DomainBox;

pub const FORMAT_NAME: &str = "tesskern-model";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    format_version: u64,
    checksum: String,
    payload: Value,
}

#[derive(Serialize, Deserialize)]
struct Payload {
    learner: String,
    degree: Option<u32>,
    c: f64,
    config_digest: String,
    kernel: KernelDoc,
    support_points: Vec<Vec<f64>>,
    labels: Vec<f64>,
    alpha: Vec<f64>,
    bias: f64,
    scaling: ScalingDoc,
}

#[derive(Serialize, Deserialize)]
struct ScalingDoc {
    observed_min: Vec<f64>,
    observed_max: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BasisElementDoc {
    z: Vec<u32>,
    x: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum KernelDoc {
    Tessellated {
        n: usize,
        degree: u32,
        basis: Vec<BasisElementDoc>,
        box_lower: Vec<f64>,
        box_upper: Vec<f64>,
        /// Row-major `q x q` blocks.
        q1: Vec<f64>,
        q2: Vec<f64>,
        q3: Vec<f64>,
        q4: Vec<f64>,
        /// Row-major `2q x 2q` PSD certificate, when known.
        p: Option<Vec<f64>>,
    },
    Gaussian {
        bandwidth: f64,
        feature: Option<usize>,
    },
    Polynomial {
        degree: u32,
        feature: Option<usize>,
    },
    Mixture {
        components: Vec<(f64, KernelDoc)>,
    },
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn from_row_major(rows: usize, data: &[f64]) -> Result<DMatrix<f64>> {
    if data.len() != rows * rows {
        return Err(Error::Corrupted(format!(
            "matrix has {} entries, expected {}",
            data.len(),
            rows * rows
        )));
    }
    Ok(DMatrix::from_row_slice(rows, rows, data))
}

fn subset_doc(s: FeatureSubset) -> Option<usize> {
    match s {
        FeatureSubset::All => None,
        FeatureSubset::Single(j) => Some(j),
    }
}

fn subset_from(doc: Option<usize>) -> FeatureSubset {
    doc.map_or(FeatureSubset::All, FeatureSubset::Single)
}

impl KernelDoc {
    fn from_kernel(k: &ModelKernel) -> KernelDoc {
        match k {
            ModelKernel::Tessellated(t) => {
                let [q1, q2, q3, q4] = t.q();
                KernelDoc::Tessellated {
                    n: t.basis().n(),
                    degree: t.basis().degree(),
                    basis: t
                        .basis()
                        .elements()
                        .iter()
                        .map(|e| BasisElementDoc {
                            z: e.z_exp.exponents().to_vec(),
                            x: e.x_exp.exponents().to_vec(),
                        })
                        .collect(),
                    box_lower: t.domain().lower().to_vec(),
                    box_upper: t.domain().upper().to_vec(),
                    q1: row_major(q1),
                    q2: row_major(q2),
                    q3: row_major(q3),
                    q4: row_major(q4),
                    p: t.psd_certificate().map(|p| row_major(&p.to_full())),
                }
            }
            ModelKernel::Gaussian {
                bandwidth,
                features,
            } => KernelDoc::Gaussian {
                bandwidth: *bandwidth,
                feature: subset_doc(*features),
            },
            ModelKernel::Polynomial { degree, features } => KernelDoc::Polynomial {
                degree: *degree,
                feature: subset_doc(*features),
            },
            ModelKernel::Mixture(parts) => KernelDoc::Mixture {
                components: parts.iter().map(|(w, k)| (*w, KernelDoc::from_kernel(k))).collect(),
            },
        }
    }

    fn into_kernel(self) -> Result<ModelKernel> {
        Ok(match self {
            KernelDoc::Tessellated {
                n,
                degree,
                basis,
                box_lower,
                box_upper,
                q1,
                q2,
                q3,
                q4,
                p,
            } => {
                if n == 0 {
                    return Err(Error::Corrupted("tessellated kernel with zero features".into()));
                }
                let b = MonomialBasis::enumerate(n, degree);
                let matches = b.len() == basis.len()
                    && b.elements().iter().zip(&basis).all(|(e, d)| {
                        e.z_exp == MultiIndex::new(d.z.clone()) && e.x_exp == MultiIndex::new(d.x.clone())
                    });
                if !matches {
                    return Err(Error::Corrupted("basis descriptor does not match (n, degree)".into()));
                }
                let q = b.len();
                let domain = DomainBox::new(box_lower, box_upper)?;
                let kernel = TessellatedKernel::new(
                    b,
                    domain,
                    from_row_major(q, &q1)?,
                    from_row_major(q, &q2)?,
                    from_row_major(q, &q3)?,
                    from_row_major(q, &q4)?,
                )?;
                let kernel = match p {
                    Some(p) => kernel.with_certificate(BlockPMatrix::from_full(&from_row_major(2 * q, &p)?)?),
                    None => kernel,
                };
                ModelKernel::Tessellated(kernel)
            }
            KernelDoc::Gaussian { bandwidth, feature } => ModelKernel::Gaussian {
                bandwidth,
                features: subset_from(feature),
            },
            KernelDoc::Polynomial { degree, feature } => ModelKernel::Polynomial {
                degree,
                features: subset_from(feature),
            },
            KernelDoc::Mixture { components } => ModelKernel::Mixture(
                components
                    .into_iter()
                    .map(|(w, k)| Ok((w, k.into_kernel()?)))
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

fn checksum(payload: &Value) -> Result<String> {
    let canonical = serde_json::to_string(payload)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

/// Serializes a model to the versioned JSON document.
pub fn model_to_json(model: &SvmModel) -> Result<String> {
    let payload = Payload {
        learner: model.info.learner.clone(),
        degree: model.info.degree,
        c: model.info.c,
        config_digest: model.info.config_digest.clone(),
        kernel: KernelDoc::from_kernel(&model.kernel),
        support_points: model.points.clone(),
        labels: model.labels.clone(),
        alpha: model.alpha.clone(),
        bias: model.bias,
        scaling: ScalingDoc {
            observed_min: model.scaling.observed_min().to_vec(),
            observed_max: model.scaling.observed_max().to_vec(),
        },
    };
    let payload = serde_json::to_value(payload)?;
    let envelope = Envelope {
        format: FORMAT_NAME.into(),
        format_version: FORMAT_VERSION,
        checksum: checksum(&payload)?,
        payload,
    };
    Ok(serde_json::to_string_pretty(&envelope)?)
}

/// Parses and verifies a model document.
pub fn model_from_json(text: &str) -> Result<SvmModel> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::Corrupted(format!("checksum cannot be verified: {e}")))?;
    let version = doc
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Corrupted("missing format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let envelope: Envelope =
        serde_json::from_value(doc).map_err(|e| Error::Corrupted(format!("bad envelope: {e}")))?;
    if envelope.format != FORMAT_NAME {
        return Err(Error::Corrupted(format!("unknown format {:?}", envelope.format)));
    }
    let actual = checksum(&envelope.payload)?;
    if actual != envelope.checksum {
        return Err(Error::Corrupted(format!(
            "checksum mismatch (stored {}, computed {actual})",
            envelope.checksum
        )));
    }
    let payload: Payload =
        serde_json::from_value(envelope.payload).map_err(|e| Error::Corrupted(format!("bad payload: {e}")))?;
    let m = payload.alpha.len();
    if payload.labels.len() != m || payload.support_points.len() != m {
        return Err(Error::Corrupted("support vector arrays differ in length".into()));
    }
    if payload.scaling.observed_min.len() != payload.scaling.observed_max.len() {
        return Err(Error::Corrupted("scaling ranges differ in length".into()));
    }
    Ok(SvmModel {
        kernel: payload.kernel.into_kernel()?,
        points: payload.support_points,
        labels: payload.labels,
        alpha: payload.alpha,
        bias: payload.bias,
        scaling: ScalingTransform::from_ranges(payload.scaling.observed_min, payload.scaling.observed_max),
        info: ModelInfo {
            learner: payload.learner,
            degree: payload.degree,
            c: payload.c,
            config_digest: payload.config_digest,
        },
    })
}

pub fn save_model(model: &SvmModel, path: impl AsRef<Path>) -> Result<()> {
    let text = model_to_json(model)?;
    write_atomic(path.as_ref(), text.as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvmModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

/// Short hex digest of any debug-printable configuration.
pub fn config_digest(config: &impl std::fmt::Debug) -> String {
    let text = format!("{config:?}");
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}
