//! Prints palette size, hull sizes, reconstruction error and timings for
//! every PNG in a directory (default: the test corpus).

use std::time::Instant;

use chroma_layers::decompose::{precompute_rgbxy, reconstruct, relayer, DecomposeOptions};
use chroma_layers::image::Image;
use chroma_layers::palette::{extract_palette_detailed, DEFAULT_RMSE_TOLERANCE};

fn main() -> chroma_layers::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/corpus").to_string());
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    paths.sort();
    println!("{:<14} {:>4} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8} {:>10} {:>5} {:>4}", "image", "P", "hull", "Q", "rmse255", "pal_s", "pre_s", "rel_ms", "min_raw", "unloc", "nnz");
    for p in paths {
        let img = Image::open(&p)?;
        let t = Instant::now();
        let ex = extract_palette_detailed(&img, DEFAULT_RMSE_TOLERANCE)?;
        let t_pal = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let state = precompute_rgbxy(&img, DecomposeOptions::default())?;
        let t_pre = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let w = relayer(&state, &ex.palette)?;
        let t_rel = t.elapsed().as_secs_f64() * 1e3;
        let rec = reconstruct(&w, &ex.palette)?;
        let stats = state.stats().copied();
        let max_nnz = (0..state.pixel_count()).map(|r| state.w_rgbxy().row_nnz(r)).max().unwrap_or(0);
        println!(
            "{:<14} {:>4} {:>6} {:>6} {:>8.3} {:>8.2} {:>8.2} {:>8.1} {:>10.2e} {:>5} {:>4}",
            p.file_stem().unwrap().to_string_lossy(),
            ex.palette.len(),
            ex.initial_vertices,
            state.q(),
            rec.rmse(&img)? * 255.0,
            t_pal,
            t_pre,
            t_rel,
            stats.map_or(0.0, |s| s.min_raw_weight),
            stats.map_or(0, |s| s.unlocated),
            max_nnz
        );
    }
    Ok(())
}
