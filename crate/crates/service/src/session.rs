//! Per-connection session state machine, independent of the transport.

use std::sync::{Arc, Condvar, Mutex};

use chroma_layers::decompose::{
    export_layers, precompute_rgbxy, reconstruct, relayer, relayer_into, DecomposeOptions, DecompositionState, LayerWeights,
};
use chroma_layers::harmony::contrast::{contrast_operator, ContrastKind};
use chroma_layers::harmony::lc::{lc_harmonize_palette, LcKind};
use chroma_layers::harmony::{
    fit_and_harmonize, palette_lch, palette_template_distance, select_among, TemplateFit, TemplateKind,
};
use chroma_layers::image::{encode_rgb_png_fast, encode_rgba_png, Image};
use chroma_layers::palette::{extract_palette, Palette, DEFAULT_RMSE_TOLERANCE};
use chroma_layers::transfer::{transfer_palette, TransferMode};

use crate::protocol::{ClientMessage, ErrorCode, ServerMessage};

/// Long edge of streamed previews.
pub const PREVIEW_EDGE: usize = 1024;

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub max_pixels: usize,
    pub decompose: DecomposeOptions,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            max_pixels: 4_000_000,
            decompose: DecomposeOptions::default(),
        }
    }
}

/// Counting semaphore bounding concurrent precomputes across sessions.
#[derive(Debug)]
pub struct PrecomputeGate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl PrecomputeGate {
    pub fn new(permits: usize) -> Self {
        PrecomputeGate {
            free: Mutex::new(permits.max(1)),
            cv: Condvar::new(),
        }
    }

    pub fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().unwrap();
            while *free == 0 {
                free = self.cv.wait(free).unwrap();
            }
            *free -= 1;
        }
        struct Release<'a>(&'a PrecomputeGate);
        impl Drop for Release<'_> {
            fn drop(&mut self) {
                *self.0.free.lock().unwrap() += 1;
                self.0.cv.notify_one();
            }
        }
        let _release = Release(self);
        f()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Incoming {
    Text(String),
    Binary(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outgoing {
    Text(String),
    Binary(Vec<u8>),
}

impl Outgoing {
    fn message(m: &ServerMessage) -> Self {
        Outgoing::Text(serde_json::to_string(m).expect("server messages serialize"))
    }
}

struct Failure(ErrorCode, String);

impl From<chroma_layers::Error> for Failure {
    fn from(e: chroma_layers::Error) -> Self {
        Failure(ErrorCode::Failed, e.to_string())
    }
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure(ErrorCode::BadRequest, msg.into())
}

struct Loaded {
    image: Image,
    state: DecompositionState,
    /// The palette set by the client (auto, set or add).
    base: Palette,
    /// Weights of `base`.
    weights: LayerWeights,
    /// The palette behind the last preview, derived from `base`.
    shown: Palette,
}

pub struct Session {
    config: Arc<SessionConfig>,
    gate: Arc<PrecomputeGate>,
    loaded: Option<Loaded>,
    precomputes: usize,
}

impl Session {
    pub fn new(config: Arc<SessionConfig>, gate: Arc<PrecomputeGate>) -> Self {
        Session {
            config,
            gate,
            loaded: None,
            precomputes: 0,
        }
    }

    /// Number of RGBXY precomputes this session has run.
    pub fn precomputes(&self) -> usize {
        self.precomputes
    }

    /// Handles one frame and returns the frames to send back, in order.
    pub fn handle(&mut self, msg: Incoming) -> Vec<Outgoing> {
        let mut out = Vec::new();
        let res = match msg {
            Incoming::Binary(bytes) => self.load(&bytes, &mut out),
            Incoming::Text(text) => match parse(&text) {
                Ok(m) => self.dispatch(m, &mut out),
                Err(f) => Err(f),
            },
        };
        if let Err(Failure(code, message)) = res {
            out.clear();
            out.push(Outgoing::message(&ServerMessage::Error { code, message }));
        }
        out
    }

    fn dispatch(&mut self, msg: ClientMessage, out: &mut Vec<Outgoing>) -> Result<(), Failure> {
        if msg == ClientMessage::Load {
            // the image arrives in the next binary frame
            return Ok(());
        }
        if msg == ClientMessage::Debug {
            let (pixels, q, p) = self
                .loaded
                .as_ref()
                .map_or((0, 0, 0), |l| (l.image.len(), l.state.q(), l.base.len()));
            out.push(Outgoing::message(&ServerMessage::Debug {
                precomputes: self.precomputes,
                pixels,
                q,
                palette_size: p,
            }));
            return Ok(());
        }
        let l = self
            .loaded
            .as_mut()
            .ok_or_else(|| Failure(ErrorCode::NoImage, "load an image first".into()))?;
        match msg {
            ClientMessage::Load | ClientMessage::Debug => unreachable!("handled above"),
            ClientMessage::AutoPalette { rmse } => {
                let tol = match rmse {
                    Some(r) if r.is_finite() && r >= 0.0 => r / 255.0,
                    Some(r) => return Err(bad(format!("rmse {r} must be a non-negative number"))),
                    None => DEFAULT_RMSE_TOLERANCE,
                };
                let p = extract_palette(&l.image, tol)?;
                l.set_base(p)?;
                l.send_palette("auto_palette", out);
                l.send_preview(out)?;
            }
            ClientMessage::SetPalette { colors } => {
                l.set_base(palette_from(&colors)?)?;
                l.send_palette("set_palette", out);
                l.send_preview(out)?;
            }
            ClientMessage::AddColor { rgb } => {
                let mut colors = l.base.to_arrays();
                colors.push(rgb);
                l.set_base(palette_from(&colors)?)?;
                l.send_palette("add_color", out);
                l.send_preview(out)?;
            }
            ClientMessage::Harmonize { kind, beta } => {
                let kind = kind.as_deref().map(parse_kind).transpose()?;
                let beta = beta_or_default(beta)?;
                let (fit, h) = fit_and_harmonize(&l.base, &l.weights.palette_weights(), kind, beta)?;
                out.push(fit_report(&fit));
                l.show(h.palette, "harmonize", out)?;
            }
            ClientMessage::Fit { kinds } => {
                let kinds = match kinds {
                    Some(ks) if ks.is_empty() => return Err(bad("kinds must not be empty")),
                    Some(ks) => ks.iter().map(|k| parse_kind(k)).collect::<Result<Vec<_>, _>>()?,
                    None => TemplateKind::ALL.to_vec(),
                };
                let fit = select_among(&palette_lch(&l.base), &l.weights.palette_weights(), &kinds)?;
                out.push(fit_report(&fit));
            }
            ClientMessage::Lc { kind } => {
                let kind: LcKind = kind.parse().map_err(|e: chroma_layers::Error| bad(e.to_string()))?;
                let r = lc_harmonize_palette(&l.base, &l.weights.palette_weights(), kind)?;
                l.show(r.palette, "lc", out)?;
            }
            ClientMessage::Contrast { kind, beta } => {
                let kind: ContrastKind = kind.parse().map_err(|e: chroma_layers::Error| bad(e.to_string()))?;
                let beta = beta_or_default(beta)?;
                let pw = l.weights.palette_weights();
                let (res, p) = contrast_operator(&l.base, &pw, kind, beta)?;
                if let Some(template) = res.template {
                    let distance = palette_template_distance(&palette_lch(&l.base), &pw, &template)?;
                    out.push(fit_report(&TemplateFit {
                        template,
                        distance,
                        assignment: res.assignment,
                    }));
                }
                l.show(p, "contrast", out)?;
            }
            ClientMessage::Transfer {
                mode,
                ref_palette,
                ref_weights,
            } => {
                let mode: TransferMode = mode.parse().map_err(|e: chroma_layers::Error| bad(e.to_string()))?;
                let reference = palette_from(&ref_palette)?;
                let rw = match ref_weights {
                    Some(w) if w.len() == reference.len() && w.iter().all(|v| v.is_finite() && *v >= 0.0) => w,
                    Some(_) => return Err(bad("ref_weights must be one non-negative number per reference color")),
                    None => vec![1.0 / reference.len() as f64; reference.len()],
                };
                let (_, p) = transfer_palette(mode, &l.base, &l.weights.palette_weights(), &reference, &rw)?;
                l.show(p, "transfer", out)?;
            }
            ClientMessage::GetLayers => {
                // derived palettes recolor the base layers
                let layers = export_layers(&l.weights, &l.shown)?;
                out.push(Outgoing::message(&ServerMessage::Layers {
                    count: layers.len(),
                    width: l.image.width(),
                    height: l.image.height(),
                }));
                for layer in &layers {
                    out.push(Outgoing::Binary(encode_rgba_png(layer)?));
                }
            }
            ClientMessage::Render => {
                let img = reconstruct(&l.weights, &l.shown)?;
                out.push(Outgoing::message(&ServerMessage::Preview {
                    width: img.width(),
                    height: img.height(),
                }));
                out.push(Outgoing::Binary(img.encode_png()?));
            }
        }
        Ok(())
    }

    fn load(&mut self, bytes: &[u8], out: &mut Vec<Outgoing>) -> Result<(), Failure> {
        let (w, h) = image::ImageReader::new(std::io::Cursor::new(bytes))
            .with_guessed_format()
            .map_err(|e| bad(e.to_string()))?
            .into_dimensions()
            .map_err(|e| bad(format!("unreadable image: {e}")))?;
        let pixels = w as usize * h as usize;
        if pixels > self.config.max_pixels {
            return Err(Failure(
                ErrorCode::TooLarge,
                format!("{w}x{h} exceeds the limit of {} pixels", self.config.max_pixels),
            ));
        }
        let image = Image::decode(bytes).map_err(|e| bad(format!("unreadable image: {e}")))?;
        let palette = extract_palette(&image, DEFAULT_RMSE_TOLERANCE)?;
        let opts = self.config.decompose;
        let state = self.gate.run(|| precompute_rgbxy(&image, opts))?;
        self.precomputes += 1;
        let weights = relayer(&state, &palette)?;
        let l = Loaded {
            image,
            state,
            shown: palette.clone(),
            base: palette,
            weights,
        };
        out.push(Outgoing::message(&ServerMessage::Ready {
            palette: l.base.to_arrays(),
            q: l.state.q(),
            width: l.image.width(),
            height: l.image.height(),
        }));
        l.send_preview(out)?;
        self.loaded = Some(l);
        Ok(())
    }
}

impl Loaded {
    fn set_base(&mut self, p: Palette) -> Result<(), Failure> {
        relayer_into(&self.state, &p, &mut self.weights)?;
        self.shown = p.clone();
        self.base = p;
        Ok(())
    }

    fn show(&mut self, p: Palette, source: &str, out: &mut Vec<Outgoing>) -> Result<(), Failure> {
        self.shown = p;
        self.send_palette(source, out);
        self.send_preview(out)
    }

    fn send_palette(&self, source: &str, out: &mut Vec<Outgoing>) {
        out.push(Outgoing::message(&ServerMessage::Palette {
            colors: self.shown.to_arrays(),
            source: source.into(),
        }));
    }

    /// Recolors through the base weights, so derived palettes keep the
    /// layer structure of the palette they came from.
    fn send_preview(&self, out: &mut Vec<Outgoing>) -> Result<(), Failure> {
        let img = reconstruct(&self.weights, &self.shown)?.downscaled(PREVIEW_EDGE);
        out.push(Outgoing::message(&ServerMessage::Preview {
            width: img.width(),
            height: img.height(),
        }));
        out.push(Outgoing::Binary(encode_rgb_png_fast(&img.to_rgb8())?));
        Ok(())
    }
}

fn parse(text: &str) -> Result<ClientMessage, Failure> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON: {e}")))?;
    let ty = v
        .get("type")
        .and_then(|t| t.as_str())
        .ok_or_else(|| bad("message lacks a string `type`"))?;
    if !ClientMessage::TYPES.contains(&ty) {
        return Err(Failure(ErrorCode::UnknownType, format!("unknown message type `{ty}`")));
    }
    serde_json::from_value(v).map_err(|e| bad(e.to_string()))
}

fn palette_from(colors: &[[f64; 3]]) -> Result<Palette, Failure> {
    if colors.is_empty() {
        return Err(bad("palette must not be empty"));
    }
    if colors.iter().flatten().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
        return Err(bad("palette channels must lie in [0, 1]"));
    }
    Palette::from_arrays(colors).map_err(|e| bad(e.to_string()))
}

fn parse_kind(s: &str) -> Result<TemplateKind, Failure> {
    s.parse().map_err(|e: chroma_layers::Error| bad(e.to_string()))
}

fn beta_or_default(beta: Option<f64>) -> Result<f64, Failure> {
    match beta {
        None => Ok(1.0),
        Some(b) if b.is_finite() => Ok(b),
        Some(b) => Err(bad(format!("beta {b} must be finite"))),
    }
}

fn fit_report(fit: &TemplateFit) -> Outgoing {
    Outgoing::message(&ServerMessage::FitReport {
        kind: fit.template.kind.name().into(),
        alpha1: fit.template.alpha1,
        alpha2: fit.template.alpha2,
        d: fit.distance,
    })
}
