//! Palette extraction from the convex hull of an image's colors, additive
//! RGBA layer decomposition through 5D RGBXY geometry, and palette-based
//! recoloring: hue templates, lightness-chroma templates, contrast
//! operators, harmony transfer and video harmonization.
//!
//! [`pipeline`] strings the stages together for one image; [`decompose`]
//! exposes the cached first stage so that new palettes relayer cheaply.

pub mod colorspace;
pub mod decompose;
pub mod error;
pub mod geom;
pub mod harmony;
pub mod image;
pub mod palette;
pub mod pipeline;
pub mod sparse;
pub mod transfer;
pub mod video;
pub mod weights_io;

pub use error::{Error, GeomError, Result};
