use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context};
use chroma_layers::decompose::{
    export_layers, precompute_rgbxy, reconstruct, relayer, DecomposeOptions, DecompositionState, LayerWeights,
};
use chroma_layers::harmony::contrast::{contrast_operator, ContrastKind};
use chroma_layers::harmony::lc::{lc_harmonize_palette, LcKind};
use chroma_layers::harmony::{fit_and_harmonize, palette_lch, palette_template_distance, TemplateFit, TemplateKind};
use chroma_layers::image::{encode_rgba_png, Image};
use chroma_layers::palette::{extract_palette_detailed, Palette, PaletteExtraction};
use chroma_layers::pipeline::decompose_image;
use chroma_layers::transfer::{transfer_palette, TransferMode};
use chroma_layers::video::{harmonize_video, VideoOptions};
use chroma_layers::weights_io::{read_state, write_layer_weights, write_state};
use chroma_layers_service::SessionConfig;
use serde_json::{json, Value};

use crate::args::{Command, PaletteSource, RecolorIo, VideoCommand};
use crate::output::Outputs;

pub enum Failure {
    Usage(String),
    Processing(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Processing(e.into())
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_arg<T>(flag: &str, s: &str) -> Result<T>
where
    T: FromStr<Err = chroma_layers::Error>,
{
    s.parse().map_err(|e| usage(format!("--{flag}: {e}")))
}

fn template_arg(s: &str) -> Result<Option<TemplateKind>> {
    if s.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse_arg("template", s).map(Some)
    }
}

fn rmse_arg(rmse: f64) -> Result<f64> {
    if rmse.is_finite() && rmse >= 0.0 {
        Ok(rmse / 255.0)
    } else {
        Err(usage(format!("--rmse: {rmse} must be a non-negative number")))
    }
}

fn beta_arg(beta: f64) -> Result<f64> {
    if beta.is_finite() {
        Ok(beta)
    } else {
        Err(usage(format!("--beta: {beta} must be finite")))
    }
}

fn open_image(path: &Path) -> anyhow::Result<Image> {
    Image::open(path).with_context(|| format!("reading {}", path.display()))
}

fn read_palette(path: &Path) -> anyhow::Result<Palette> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Palette::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_state(path: &Path) -> anyhow::Result<DecompositionState> {
    let mut f = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    read_state(&mut std::io::BufReader::new(&mut f)).with_context(|| format!("parsing {}", path.display()))
}

fn state_bytes(state: &DecompositionState) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_state(&mut buf, state)?;
    Ok(buf)
}

fn palette_arrays(p: &Palette) -> Value {
    json!(p.to_arrays())
}

/// Image, palette and layer weights ready for recoloring.
struct Prepared {
    palette: Palette,
    extraction: Option<PaletteExtraction>,
    state: DecompositionState,
    weights: LayerWeights,
}

/// Loads or extracts the palette and loads or precomputes the state. A new
/// state is queued in `outputs` when `state_path` does not exist yet.
fn prepare(img: &Image, source: &PaletteSource, state_path: Option<&Path>, outputs: &mut Outputs) -> Result<Prepared> {
    let tol = rmse_arg(source.rmse.rmse)?;
    let (palette, extraction) = match &source.palette {
        Some(p) => (read_palette(p)?, None),
        None => {
            let e = extract_palette_detailed(img, tol)?;
            (e.palette.clone(), Some(e))
        }
    };
    let state = match state_path {
        Some(p) if p.exists() => {
            let s = load_state(p)?;
            if (s.width(), s.height()) != (img.width(), img.height()) {
                return Err(anyhow!(
                    "state {} is {}x{} but the image is {}x{}",
                    p.display(),
                    s.width(),
                    s.height(),
                    img.width(),
                    img.height()
                )
                .into());
            }
            s
        }
        Some(p) => {
            let s = precompute_rgbxy(img, DecomposeOptions::default())?;
            outputs.add(p, state_bytes(&s)?);
            s
        }
        None => precompute_rgbxy(img, DecomposeOptions::default())?,
    };
    let weights = relayer(&state, &palette)?;
    Ok(Prepared {
        palette,
        extraction,
        state,
        weights,
    })
}

fn extraction_report(e: &PaletteExtraction) -> Value {
    json!({
        "size": e.palette.len(),
        "rmse": e.rmse * 255.0,
        "initial_vertices": e.initial_vertices,
        "simplification_steps": e.volumes.len(),
        "degenerate": e.degenerate,
    })
}

/// Files of a decomposition: palette, weights, one PNG per layer,
/// reconstruction and a report.
fn layer_outputs(
    dir: &Path,
    palette: &Palette,
    state: &DecompositionState,
    weights: &LayerWeights,
    extraction: Option<&PaletteExtraction>,
    outputs: &mut Outputs,
) -> Result<()> {
    outputs.add(dir.join("palette.json"), palette.to_json().into_bytes());
    let mut buf = Vec::new();
    write_layer_weights(&mut buf, weights)?;
    outputs.add(dir.join("weights.bin"), buf);
    for (i, layer) in export_layers(weights, palette)?.iter().enumerate() {
        outputs.add(dir.join(format!("layer_{i:02}.png")), encode_rgba_png(layer)?);
    }
    outputs.add(dir.join("reconstruction.png"), reconstruct(weights, palette)?.encode_png()?);
    outputs.add_json(
        dir.join("report.json"),
        &json!({
            "width": weights.width(),
            "height": weights.height(),
            "q": state.q(),
            "palette_size": palette.len(),
            "palette_weights": weights.palette_weights(),
            "extraction": extraction.map(extraction_report),
        }),
    );
    Ok(())
}

fn fit_json(fit: &TemplateFit) -> Value {
    json!({
        "kind": fit.template.kind.name(),
        "alpha1": fit.template.alpha1,
        "alpha2": fit.template.alpha2,
        "D": fit.distance,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

/// Recolors through the prepared weights and queues the image and report.
fn finish_recolor(io: &RecolorIo, prep: &Prepared, recolored: &Palette, report: Value, outputs: &mut Outputs) -> Result<()> {
    let out = io.out.as_ref().ok_or_else(|| usage("--out is required"))?;
    outputs.add(out, reconstruct(&prep.weights, recolored)?.encode_png()?);
    if let Some(r) = &io.report {
        outputs.add_json(r, &report);
    }
    Ok(())
}

fn palettes_json(prep: &Prepared, pw: &[f64], out: &Palette) -> Value {
    json!({
        "palette": palette_arrays(&prep.palette),
        "palette_weights": pw,
        "recolored_palette": palette_arrays(out),
        "extraction": prep.extraction.as_ref().map(extraction_report),
    })
}

pub fn run(cmd: Command) -> Result<()> {
    let mut outputs = Outputs::default();
    match cmd {
        Command::Palette { input, rmse, out, report } => {
            let tol = rmse_arg(rmse.rmse)?;
            let img = open_image(&input)?;
            let e = extract_palette_detailed(&img, tol)?;
            outputs.add(&out, e.palette.to_json().into_bytes());
            if let Some(r) = report {
                let mut rep = extraction_report(&e);
                rep["volumes"] = json!(e.volumes);
                outputs.add_json(r, &rep);
            }
        }
        Command::Decompose {
            input,
            source,
            out,
            state,
        } => {
            let img = open_image(&input)?;
            let prep = prepare(&img, &source, state.as_deref(), &mut outputs)?;
            layer_outputs(
                &out,
                &prep.palette,
                &prep.state,
                &prep.weights,
                prep.extraction.as_ref(),
                &mut outputs,
            )?;
        }
        Command::Relayer {
            input,
            state,
            palette,
            out,
        } => {
            let input = match input {
                _ if state.exists() => None,
                Some(i) => Some(i),
                None => {
                    return Err(usage(format!(
                        "{} does not exist; give an input image to precompute it",
                        state.display()
                    )))
                }
            };
            let palette = read_palette(&palette)?;
            let st = match input {
                None => load_state(&state)?,
                Some(input) => {
                    let s = precompute_rgbxy(&open_image(&input)?, DecomposeOptions::default())?;
                    outputs.add(&state, state_bytes(&s)?);
                    s
                }
            };
            let weights = relayer(&st, &palette)?;
            layer_outputs(&out, &palette, &st, &weights, None, &mut outputs)?;
        }
        Command::Harmonize {
            input,
            template,
            beta,
            fit_only,
            source,
            io,
        } => {
            let kind = template_arg(&template)?;
            let beta = beta_arg(beta)?;
            if !fit_only && io.out.is_none() {
                return Err(usage("--out is required unless --fit-only is given"));
            }
            let img = open_image(&input)?;
            let prep = prepare(&img, &source, io.state.as_deref(), &mut outputs)?;
            let pw = prep.weights.palette_weights();
            let (fit, h) = fit_and_harmonize(&prep.palette, &pw, kind, beta)?;
            let report = merge(
                fit_json(&fit),
                merge(
                    json!({ "beta": beta, "out_of_gamut": h.out_of_gamut }),
                    palettes_json(&prep, &pw, &h.palette),
                ),
            );
            if fit_only {
                match &io.report {
                    Some(r) => outputs.add_json(r, &report),
                    None => println!("{}", serde_json::to_string_pretty(&fit_json(&fit))?),
                }
            } else {
                finish_recolor(&io, &prep, &h.palette, report, &mut outputs)?;
            }
        }
        Command::LcHarmonize {
            input,
            template,
            source,
            io,
        } => {
            let kind: LcKind = parse_arg("template", &template)?;
            require_out(&io)?;
            let img = open_image(&input)?;
            let prep = prepare(&img, &source, io.state.as_deref(), &mut outputs)?;
            let pw = prep.weights.palette_weights();
            let r = lc_harmonize_palette(&prep.palette, &pw, kind)?;
            let report = merge(
                json!({
                    "kind": kind.name(),
                    "hue_template": fit_json(&r.hue_fit),
                    "lines": r.applied.templates,
                    "groups": r.applied.groups,
                    "snap": r.applied.snap,
                    "out_of_gamut": r.out_of_gamut,
                }),
                palettes_json(&prep, &pw, &r.palette),
            );
            finish_recolor(&io, &prep, &r.palette, report, &mut outputs)?;
        }
        Command::Contrast {
            input,
            kind,
            beta,
            source,
            io,
        } => {
            let kind: ContrastKind = parse_arg("kind", &kind)?;
            let beta = beta_arg(beta)?;
            require_out(&io)?;
            let img = open_image(&input)?;
            let prep = prepare(&img, &source, io.state.as_deref(), &mut outputs)?;
            let pw = prep.weights.palette_weights();
            let (res, p) = contrast_operator(&prep.palette, &pw, kind, beta)?;
            let template = match &res.template {
                Some(t) => {
                    let d = palette_template_distance(&palette_lch(&prep.palette), &pw, t)?;
                    json!({ "kind": t.kind.name(), "alpha1": t.alpha1, "alpha2": t.alpha2, "D": d })
                }
                None => Value::Null,
            };
            let report = merge(
                json!({
                    "kind": kind.name(),
                    "beta": beta,
                    "template": template,
                    "lc_lines": res.lc.as_ref().map(|a| &a.templates),
                    "lightness_factors": res.lightness_factors,
                }),
                palettes_json(&prep, &pw, &p),
            );
            finish_recolor(&io, &prep, &p, report, &mut outputs)?;
        }
        Command::Transfer {
            input,
            mode,
            reference,
            ref_palette,
            source,
            io,
        } => {
            let mode: TransferMode = parse_arg("mode", &mode)?;
            require_out(&io)?;
            let (ref_p, ref_w) = match (&reference, &ref_palette) {
                (_, Some(p)) => {
                    let p = read_palette(p)?;
                    let n = p.len();
                    (p, vec![1.0 / n as f64; n])
                }
                (Some(r), None) => {
                    let d = decompose_image(&open_image(r)?, rmse_arg(source.rmse.rmse)?, DecomposeOptions::default())?;
                    let w = d.weights.palette_weights();
                    (d.extraction.palette, w)
                }
                (None, None) => return Err(usage("--reference or --ref-palette is required")),
            };
            let img = open_image(&input)?;
            let prep = prepare(&img, &source, io.state.as_deref(), &mut outputs)?;
            let pw = prep.weights.palette_weights();
            let (res, p) = transfer_palette(mode, &prep.palette, &pw, &ref_p, &ref_w)?;
            let report = merge(
                json!({
                    "mode": mode,
                    "input_template": res.input_template,
                    "reference_template": res.reference_template,
                    "gamma": res.gamma,
                    "l_scale": res.l_scale,
                    "c_scale": res.c_scale,
                    "reference_palette": palette_arrays(&ref_p),
                    "reference_weights": ref_w,
                }),
                palettes_json(&prep, &pw, &p),
            );
            finish_recolor(&io, &prep, &p, report, &mut outputs)?;
        }
        Command::Video {
            command:
                VideoCommand::Harmonize {
                    frames,
                    template,
                    beta,
                    rmse,
                    low_memory,
                    out,
                    report,
                },
        } => {
            let kind = template_arg(&template)?;
            let beta = beta_arg(beta)?;
            let tol = rmse_arg(rmse.rmse)?;
            let names = frame_names(&frames)?;
            let imgs = names
                .iter()
                .map(|n| open_image(&frames.join(n)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let opts = VideoOptions {
                rmse_tol: tol,
                retain_weights: !low_memory,
                ..VideoOptions::default()
            };
            let v = harmonize_video(&imgs, kind, beta, opts)?;
            for (name, f) in names.iter().zip(&v.frames) {
                outputs.add(out.join(name), f.encode_png()?);
            }
            if let Some(r) = report {
                let rep = merge(
                    fit_json(&v.fit),
                    json!({
                        "beta": beta,
                        "frames": names.len(),
                        "palette": palette_arrays(&v.extraction.palette),
                        "palette_weights": v.palette_weights,
                        "recolored_palette": palette_arrays(&v.harmonized.palette),
                        "out_of_gamut": v.harmonized.out_of_gamut,
                        "extraction": extraction_report(&v.extraction),
                    }),
                );
                outputs.add_json(r, &rep);
            }
        }
        Command::Serve {
            port,
            host,
            max_pixels,
            precomputes,
        } => {
            if precomputes == 0 {
                return Err(usage("--precomputes must be at least 1"));
            }
            let cfg = SessionConfig {
                max_pixels,
                ..SessionConfig::default()
            };
            eprintln!("serving on {host}:{port}");
            chroma_layers_service::serve((host.as_str(), port), cfg, precomputes)
                .with_context(|| format!("serving on {host}:{port}"))?;
        }
    }
    outputs.commit()?;
    Ok(())
}

fn require_out(io: &RecolorIo) -> Result<()> {
    if io.out.is_none() {
        return Err(usage("--out is required"));
    }
    Ok(())
}

/// PNG file names in `dir`, sorted.
fn frame_names(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .filter_map(|p| p.file_name().map(PathBuf::from))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(anyhow!("no PNG frames in {}", dir.display()));
    }
    Ok(names)
}
