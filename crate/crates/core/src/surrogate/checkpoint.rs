//! Single-file checkpoint: a versioned text header followed by row-major
//! weight blocks as little-endian f64.
//!
//! ```text
//! axlesim-checkpoint 1
//! kind mtl
//! widths 6 64 64 76 6
//! mask 16 12            (or: mask none)
//! input_mean …          (17 significant digits)
//! input_std …
//! input_min …
//! input_max …
//! target_min …
//! target_max …
//! end
//! <per layer: weights in×out row-major, then bias>
//! ```

use std::io::{BufRead, Read, Write};

use ndarray::{Array1, Array2};

use super::network::{Layer, ModelKind, MtlNetwork, TaskMask};
use super::norm::{InputScaler, TargetScaler};
use crate::fmt::{f64_17, parse_f64};
use crate::{Error, Result};

const MAGIC: &str = "axlesim-checkpoint";
const VERSION: u32 = 1;

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| f64_17(x)).collect::<Vec<_>>().join(" ")
}

pub fn write_checkpoint<W: Write>(net: &MtlNetwork, mut w: W) -> Result<()> {
    let mut widths = vec![net.inputs()];
    widths.extend(net.layers.iter().map(Layer::outputs));
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "kind {}", net.kind.as_str())?;
    writeln!(
        w,
        "widths {}",
        widths.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    )?;
    match &net.mask {
        Some(m) => writeln!(w, "mask {} {}", m.window, m.stride)?,
        None => writeln!(w, "mask none")?,
    }
    let s = &net.input_scaler;
    writeln!(w, "input_mean {}", join(&s.mean))?;
    writeln!(w, "input_std {}", join(&s.std))?;
    writeln!(w, "input_min {}", join(&s.min))?;
    writeln!(w, "input_max {}", join(&s.max))?;
    writeln!(w, "target_min {}", join(&net.target_scaler.min))?;
    writeln!(w, "target_max {}", join(&net.target_scaler.max))?;
    writeln!(w, "end")?;
    for layer in &net.layers {
        for &v in layer.weights.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        for &v in layer.bias.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn header_line<R: BufRead>(r: &mut R, key: &str) -> Result<String> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(Error::Parse(format!("checkpoint ends before {key:?}")));
    }
    let line = line.trim_end_matches(['\n', '\r']);
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| Error::Parse(format!("expected checkpoint line {key:?}, found {line:?}")))?;
    Ok(rest.trim().to_string())
}

fn floats(s: &str, what: &str, expected: usize) -> Result<Vec<f64>> {
    let v = s
        .split_whitespace()
        .map(|f| parse_f64(f, what))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != expected {
        return Err(Error::Parse(format!(
            "{what}: expected {expected} values, got {}",
            v.len()
        )));
    }
    Ok(v)
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Parse(format!("truncated checkpoint weights: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn read_checkpoint<R: BufRead>(mut r: R) -> Result<MtlNetwork> {
    let magic = header_line(&mut r, MAGIC)?;
    if magic != VERSION.to_string() {
        return Err(Error::Parse(format!("unsupported checkpoint version {magic:?}")));
    }
    let kind: ModelKind = header_line(&mut r, "kind")?.parse()?;
    let widths = header_line(&mut r, "widths")?
        .split_whitespace()
        .map(|w| w.parse::<usize>().map_err(|_| Error::Parse(format!("bad width {w:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if widths.len() < 2 {
        return Err(Error::Parse("checkpoint needs at least two widths".into()));
    }
    let (inputs, outputs) = (widths[0], *widths.last().unwrap());
    let mask_line = header_line(&mut r, "mask")?;
    let mask = if mask_line == "none" {
        None
    } else {
        let parts: Vec<usize> = mask_line
            .split_whitespace()
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad mask {mask_line:?}")))
            })
            .collect::<Result<_>>()?;
        if parts.len() != 2 {
            return Err(Error::Parse(format!("bad mask {mask_line:?}")));
        }
        Some(TaskMask {
            tasks: outputs,
            window: parts[0],
            stride: parts[1],
        })
    };
    let input_scaler = InputScaler {
        mean: floats(&header_line(&mut r, "input_mean")?, "input_mean", inputs)?,
        std: floats(&header_line(&mut r, "input_std")?, "input_std", inputs)?,
        min: floats(&header_line(&mut r, "input_min")?, "input_min", inputs)?,
        max: floats(&header_line(&mut r, "input_max")?, "input_max", inputs)?,
    };
    let target_scaler = TargetScaler {
        min: floats(&header_line(&mut r, "target_min")?, "target_min", outputs)?,
        max: floats(&header_line(&mut r, "target_max")?, "target_max", outputs)?,
    };
    header_line(&mut r, "end")?;

    let mut layers = Vec::with_capacity(widths.len() - 1);
    for w in widths.windows(2) {
        let weights =
            Array2::from_shape_vec((w[0], w[1]), read_f64s(&mut r, w[0] * w[1])?).expect("length matches shape");
        let bias = Array1::from_vec(read_f64s(&mut r, w[1])?);
        layers.push(Layer { weights, bias });
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Parse(format!(
            "{} trailing bytes after checkpoint weights",
            rest.len()
        )));
    }
    MtlNetwork::new(kind, layers, mask, input_scaler, target_scaler)
}
