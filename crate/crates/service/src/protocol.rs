//! JSON message types.

use serde::{Deserialize, Serialize};

/// Messages a client sends as text frames. `load` announces that the next
/// binary frame holds the image (PNG or JPEG); a binary frame without a
/// preceding `load` is treated the same way.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Load,
    /// `rmse` is in 0–255 units.
    AutoPalette {
        #[serde(default)]
        rmse: Option<f64>,
    },
    SetPalette {
        colors: Vec<[f64; 3]>,
    },
    AddColor {
        rgb: [f64; 3],
    },
    /// Harmonizes the current palette. Repeated requests start from the
    /// same palette; they do not accumulate.
    Harmonize {
        #[serde(default)]
        kind: Option<String>,
        #[serde(default)]
        beta: Option<f64>,
    },
    Fit {
        #[serde(default)]
        kinds: Option<Vec<String>>,
    },
    Lc {
        kind: String,
    },
    Contrast {
        kind: String,
        #[serde(default)]
        beta: Option<f64>,
    },
    Transfer {
        mode: String,
        ref_palette: Vec<[f64; 3]>,
        #[serde(default)]
        ref_weights: Option<Vec<f64>>,
    },
    GetLayers,
    /// Full-resolution preview of the last shown palette.
    Render,
    Debug,
}

impl ClientMessage {
    /// Every `type` tag a client may send.
    pub const TYPES: [&'static str; 12] = [
        "load",
        "auto_palette",
        "set_palette",
        "add_color",
        "harmonize",
        "fit",
        "lc",
        "contrast",
        "transfer",
        "get_layers",
        "render",
        "debug",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    UnknownType,
    NoImage,
    TooLarge,
    Failed,
}

/// Messages the server sends as text frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Ready {
        palette: Vec<[f64; 3]>,
        q: usize,
        width: usize,
        height: usize,
    },
    /// `source` names the request that produced the colors.
    Palette {
        colors: Vec<[f64; 3]>,
        source: String,
    },
    FitReport {
        kind: String,
        alpha1: f64,
        alpha2: f64,
        #[serde(rename = "D")]
        d: f64,
    },
    /// Followed by one binary PNG frame.
    Preview {
        width: usize,
        height: usize,
    },
    /// Followed by `count` binary RGBA PNG frames in palette order.
    Layers {
        count: usize,
        width: usize,
        height: usize,
    },
    Debug {
        precomputes: usize,
        pixels: usize,
        q: usize,
        palette_size: usize,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}
