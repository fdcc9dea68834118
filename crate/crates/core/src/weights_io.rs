//! Binary container for sparse weight matrices.
//!
//! Layout: `u32` little-endian header length, the JSON header, then `nnz`
//! little-endian triplets `(row: u32, col: u32, value: f32)` in row-major
//! order. The header records the image dimensions and matrix shape; state
//! files also carry the RGBXY vertices and the XY scale.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::decompose::{DecompositionState, LayerWeights};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsKind {
    /// Pixel × palette weights.
    Layers,
    /// Pixel × RGBXY-vertex weights plus the vertices.
    State,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsHeader {
    pub kind: WeightsKind,
    /// Image width and height.
    pub dims: [usize; 2],
    #[serde(rename = "N")]
    pub n: usize,
    /// Palette size for layer weights.
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    /// RGBXY vertex count for states.
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    pub nnz: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xy_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 5]>>,
}

fn write_container(out: &mut impl Write, header: &WeightsHeader, m: &CsrMatrix<f32>) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    let len = u32::try_from(json.len()).map_err(|_| Error::Format("header too large".into()))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(&json)?;
    let mut buf = Vec::with_capacity(m.nnz() * 12);
    for (r, c, v) in m.triplets() {
        buf.extend_from_slice(&(r as u32).to_le_bytes());
        buf.extend_from_slice(&(c as u32).to_le_bytes());
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn read_container(input: &mut impl Read) -> Result<(WeightsHeader, CsrMatrix<f32>)> {
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let header: WeightsHeader = serde_json::from_slice(&json)?;
    let cols = match header.kind {
        WeightsKind::Layers => header.p,
        WeightsKind::State => header.q,
    }
    .ok_or_else(|| Error::Format("header lacks the column count".into()))?;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != header.nnz * 12 {
        return Err(Error::Format(format!(
            "expected {} triplet bytes, found {}",
            header.nnz * 12,
            body.len()
        )));
    }
    let word = |b: &[u8]| [b[0], b[1], b[2], b[3]];
    let triplets = body.chunks_exact(12).map(|t| {
        (
            u32::from_le_bytes(word(&t[0..4])) as usize,
            u32::from_le_bytes(word(&t[4..8])) as usize,
            f32::from_le_bytes(word(&t[8..12])),
        )
    });
    let m = CsrMatrix::from_sorted_triplets(header.n, cols, triplets).map_err(Error::Format)?;
    Ok((header, m))
}

pub fn write_layer_weights(out: &mut impl Write, w: &LayerWeights) -> Result<()> {
    let header = WeightsHeader {
        kind: WeightsKind::Layers,
        dims: [w.width(), w.height()],
        n: w.matrix().rows(),
        p: Some(w.palette_size()),
        q: None,
        nnz: w.matrix().nnz(),
        xy_scale: None,
        vertices: None,
    };
    write_container(out, &header, w.matrix())
}

pub fn read_layer_weights(input: &mut impl Read) -> Result<LayerWeights> {
    let (h, m) = read_container(input)?;
    if h.kind != WeightsKind::Layers {
        return Err(Error::Format("file holds a decomposition state, not layer weights".into()));
    }
    LayerWeights::new(h.dims[0], h.dims[1], m)
}

pub fn write_state(out: &mut impl Write, s: &DecompositionState) -> Result<()> {
    let header = WeightsHeader {
        kind: WeightsKind::State,
        dims: [s.width(), s.height()],
        n: s.pixel_count(),
        p: None,
        q: Some(s.q()),
        nnz: s.w_rgbxy().nnz(),
        xy_scale: Some(s.xy_scale()),
        vertices: Some(s.vertices().to_vec()),
    };
    write_container(out, &header, s.w_rgbxy())
}

pub fn read_state(input: &mut impl Read) -> Result<DecompositionState> {
    let (h, m) = read_container(input)?;
    if h.kind != WeightsKind::State {
        return Err(Error::Format("file holds layer weights, not a decomposition state".into()));
    }
    let vertices = h.vertices.ok_or_else(|| Error::Format("state header lacks vertices".into()))?;
    DecompositionState::from_parts(h.dims[0], h.dims[1], h.xy_scale.unwrap_or(1.0), vertices, m)
}
