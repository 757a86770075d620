//! Plain-text weights files.
//!
//! ```text
//! SEQCAST-W v1
//! gru hidden=64
//! w_z 64 65
//! 1.2345678901234567e-1
//! ...
//! ```
//!
//! Values are written with 17 significant digits, which round-trips every
//! finite `f64` exactly.

use std::fs;
use std::path::Path;

use super::{GruParams, LstmParams, ModelKind, ModelParams, TransformerParams};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamSet};

const MAGIC: &str = "SEQCAST-W v1";

fn header(params: &ModelParams) -> String {
    match params {
        ModelParams::Lstm(p) => format!("lstm hidden={}", p.hidden()),
        ModelParams::Gru(p) => format!("gru hidden={}", p.hidden()),
        ModelParams::Transformer(p) => format!(
            "transformer d_model={} heads={} layers={} d_ff={} positional={}",
            p.d_model(),
            p.heads(),
            p.layers.len(),
            p.d_ff(),
            u8::from(p.positional)
        ),
    }
}

/// Serializes `params` to the weights text format.
pub fn write_weights(params: &ModelParams) -> String {
    let mut out = String::with_capacity(24 * params.num_params() + 256);
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&header(params));
    out.push('\n');
    params.visit(&mut |name, m| {
        out.push_str(&format!("{name} {} {}\n", m.rows(), m.cols()));
        for v in m.as_slice() {
            out.push_str(&format!("{v:.16e}\n"));
        }
    });
    out
}

pub fn save_weights(params: &ModelParams, path: &Path) -> Result<()> {
    if !params.is_finite() {
        return Err(Error::NonFinite("parameters to save".into()));
    }
    fs::write(path, write_weights(params)).map_err(|e| Error::io(path, e))
}

fn dim(fields: &[(&str, &str)], key: &str) -> Result<usize> {
    let raw = fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Weights(format!("header is missing {key}")))?;
    raw.parse()
        .map_err(|_| Error::Weights(format!("header field {key}={raw:?} is not an integer")))
}

fn layout_from_header(line: &str) -> Result<ModelParams> {
    let mut parts = line.split_whitespace();
    let kind: ModelKind = parts
        .next()
        .ok_or_else(|| Error::Weights("empty header line".into()))?
        .parse()
        .map_err(|_| Error::Weights(format!("unknown model kind in header {line:?}")))?;
    let fields: Vec<(&str, &str)> = parts
        .map(|p| {
            p.split_once('=')
                .ok_or_else(|| Error::Weights(format!("malformed header field {p:?}")))
        })
        .collect::<Result<_>>()?;
    let bad = |e: Error| Error::Weights(format!("invalid dimensions in header: {e}"));
    Ok(match kind {
        ModelKind::Lstm => {
            let h = dim(&fields, "hidden")?;
            if h == 0 {
                return Err(Error::Weights("hidden size must be positive".into()));
            }
            ModelParams::Lstm(LstmParams::zeros(h))
        }
        ModelKind::Gru => {
            let h = dim(&fields, "hidden")?;
            if h == 0 {
                return Err(Error::Weights("hidden size must be positive".into()));
            }
            ModelParams::Gru(GruParams::zeros(h))
        }
        ModelKind::Transformer => ModelParams::Transformer(
            TransformerParams::zeros(
                dim(&fields, "d_model")?,
                dim(&fields, "heads")?,
                dim(&fields, "layers")?,
                dim(&fields, "d_ff")?,
                dim(&fields, "positional")? != 0,
            )
            .map_err(bad)?,
        ),
    })
}

/// Parses weights text; `expected` rejects files of another model kind.
pub fn parse_weights(text: &str, expected: Option<ModelKind>) -> Result<ModelParams> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        Some((_, l)) => {
            return Err(Error::Weights(format!(
                "bad magic line {l:?} (expected {MAGIC:?})"
            )))
        }
        None => return Err(Error::Weights("empty weights file".into())),
    }
    let (_, head) = lines
        .next()
        .ok_or_else(|| Error::Weights("missing header line".into()))?;
    let mut params = layout_from_header(head)?;
    if let Some(kind) = expected {
        if params.kind() != kind {
            return Err(Error::Weights(format!(
                "file holds {} weights but {} was requested",
                params.kind(),
                kind
            )));
        }
    }

    let mut failure: Option<Error> = None;
    params.visit_mut(&mut |name, m: &mut Matrix| {
        if failure.is_some() {
            return;
        }
        let mut read = || -> Result<()> {
            let (lineno, block) = lines
                .next()
                .ok_or_else(|| Error::Weights(format!("truncated before block {name}")))?;
            let expected_block = format!("{name} {} {}", m.rows(), m.cols());
            if block.trim_end() != expected_block {
                return Err(Error::Weights(format!(
                    "line {}: expected block {expected_block:?}, found {block:?}",
                    lineno + 1
                )));
            }
            for slot in m.as_mut_slice() {
                let (lineno, raw) = lines
                    .next()
                    .ok_or_else(|| Error::Weights(format!("truncated inside block {name}")))?;
                let v: f64 = raw.trim().parse().map_err(|_| {
                    Error::Weights(format!("line {}: invalid number {raw:?}", lineno + 1))
                })?;
                if !v.is_finite() {
                    return Err(Error::Weights(format!(
                        "line {}: non-finite value in {name}",
                        lineno + 1
                    )));
                }
                *slot = v;
            }
            Ok(())
        };
        if let Err(e) = read() {
            failure = Some(e);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some((lineno, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Weights(format!(
            "line {}: unexpected trailing content {extra:?}",
            lineno + 1
        )));
    }
    Ok(params)
}

pub fn load_weights(path: &Path, expected: Option<ModelKind>) -> Result<ModelParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_weights(&text, expected)
}
